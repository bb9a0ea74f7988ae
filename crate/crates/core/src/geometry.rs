//! Disc geometry in the complex plane.
//!
//! Everything here is a pure function of its inputs. The only Möbius map
//! needed is the inversion `z -> sigma / z`, which sends a disc not
//! containing the origin to another disc with a closed-form center and
//! radius.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of the complex plane.
pub type Point = Complex64;

/// An open disc `{ z : |z - center| < radius }`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Disc {
    pub center: Point,
    pub radius: f64,
}

impl Disc {
    pub fn new(center: Point, radius: f64) -> Result<Self> {
        if !(radius > 0.0)
            || !radius.is_finite()
            || !center.re.is_finite()
            || !center.im.is_finite()
        {
            return Err(Error::InvalidDisc(radius));
        }
        Ok(Disc { center, radius })
    }

    /// The closed unit disc, used as the outer disc of every cheese.
    pub fn unit() -> Self {
        Disc {
            center: Point::new(0.0, 0.0),
            radius: 1.0,
        }
    }

    /// `|p - center| - radius`; negative iff `p` lies in the open disc.
    #[inline]
    pub fn signed_distance(&self, p: Point) -> f64 {
        (p - self.center).norm() - self.radius
    }

    pub fn contains(&self, p: Point) -> bool {
        self.signed_distance(p) < 0.0
    }

    pub fn translate(&self, by: Point) -> Disc {
        Disc {
            center: self.center + by,
            radius: self.radius,
        }
    }
}

/// Image of `d` under `z -> sigma / z`.
///
/// With `d = (c, rho)` and `|c| > rho`, the image is the disc with center
/// `sigma * conj(c) / (|c|^2 - rho^2)` and radius `sigma * rho / (|c|^2 - rho^2)`.
pub fn invert_disc(d: &Disc, sigma: f64) -> Result<Disc> {
    let c_norm = d.center.norm();
    if c_norm <= d.radius {
        return Err(Error::OriginInsideDisc {
            center_norm: c_norm,
            radius: d.radius,
        });
    }
    // (|c| - rho)(|c| + rho) keeps precision when the disc nearly touches 0.
    let denom = (c_norm - d.radius) * (c_norm + d.radius);
    Disc::new(d.center.conj() * (sigma / denom), sigma * d.radius / denom)
}

/// Signed distance from `p` to the nearest disc of `discs`, `+inf` when empty.
pub fn min_distance(p: Point, discs: &[Disc]) -> f64 {
    discs
        .iter()
        .map(|d| d.signed_distance(p))
        .fold(f64::INFINITY, f64::min)
}

/// Axis-aligned square grid of side `spacing` tiling `[-1, 1]^2`.
///
/// The grid is implicit: centers are produced on demand, so spacings far
/// below what could be enumerated are still usable for point lookups.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CenterGrid {
    spacing: f64,
    per_side: u64,
}

/// Cover the closed unit disc by open discs of radius `c` centered on the
/// squares of a `ceil(2/c)`-per-side grid.
///
/// Each square has circumradius `c / sqrt(2) < c`, so the radius-`c` disc
/// about its center contains it. Panics unless `c` is finite and `c >= 2^-60`.
pub fn cover_unit_disc(c: f64) -> CenterGrid {
    assert!(
        c.is_finite() && c >= (2.0f64).powi(-60),
        "grid spacing must be finite and at least 2^-60, got {c}"
    );
    let per_side = (2.0 / c).ceil().max(1.0) as u64;
    CenterGrid {
        spacing: c,
        per_side,
    }
}

impl CenterGrid {
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn per_side(&self) -> u64 {
        self.per_side
    }

    /// Number of centers, `ceil(2/c)^2`.
    pub fn count(&self) -> u128 {
        u128::from(self.per_side) * u128::from(self.per_side)
    }

    pub fn center(&self, i: u64, j: u64) -> Point {
        Point::new(
            -1.0 + self.spacing * (i as f64 + 0.5),
            -1.0 + self.spacing * (j as f64 + 0.5),
        )
    }

    /// Index of the square containing `p` (clamped to the grid).
    pub fn locate(&self, p: Point) -> (u64, u64) {
        let last = (self.per_side - 1) as f64;
        let idx = |x: f64| ((x + 1.0) / self.spacing).floor().clamp(0.0, last) as u64;
        (idx(p.re), idx(p.im))
    }

    /// Center of the covering disc that contains `p`.
    pub fn covering_center(&self, p: Point) -> Point {
        let (i, j) = self.locate(p);
        self.center(i, j)
    }

    pub fn centers(&self) -> impl Iterator<Item = Point> + '_ {
        (0..self.per_side).flat_map(move |j| (0..self.per_side).map(move |i| self.center(i, j)))
    }
}

/// `count` equal discs of radius `rho` centered at the points
/// `center + circle_radius * exp(2 pi i k / count)`.
///
/// Queries run in O(1) regardless of `count`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscRing {
    pub center: Point,
    pub circle_radius: f64,
    pub rho: f64,
    pub count: u64,
}

impl DiscRing {
    /// Angle of `u` (relative to the ring center) split into the nearest
    /// pole index and the residual angle in `[-pi/count, pi/count]`.
    #[inline]
    pub fn angular_split(&self, u: Point) -> (u64, f64) {
        let n = self.count as f64;
        let theta = u.im.atan2(u.re);
        let t = theta / TAU * n;
        let k = t.round();
        let residual = (t - k) * TAU / n;
        let k = k.rem_euclid(n) as u64;
        (k % self.count, residual)
    }

    pub fn pole(&self, k: u64) -> Point {
        let angle = TAU * ((k % self.count) as f64 / self.count as f64);
        self.center + Point::from_polar(self.circle_radius, angle)
    }

    pub fn disc(&self, k: u64) -> Disc {
        Disc {
            center: self.pole(k),
            radius: self.rho,
        }
    }

    /// Signed distance from `z` to the nearest disc of the ring.
    pub fn signed_distance(&self, z: Point) -> f64 {
        let u = z - self.center;
        if self.count <= 3 {
            return (0..self.count)
                .map(|k| (z - self.pole(k)).norm() - self.rho)
                .fold(f64::INFINITY, f64::min);
        }
        let (k, _) = self.angular_split(u);
        [self.count - 1, 0, 1]
            .iter()
            .map(|&off| {
                let idx = (k + off) % self.count;
                (u - (self.pole(idx) - self.center)).norm() - self.rho
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Inner and outer radius of the annulus (about `center`) that holds every disc.
    pub fn shell(&self) -> (f64, f64) {
        (self.circle_radius - self.rho, self.circle_radius + self.rho)
    }

    /// Image of the ring, centered at the origin, under `z -> sigma / z`.
    ///
    /// The pole angles are conjugated, which maps the set of `count`-th
    /// roots of unity onto itself, so the image is again a `DiscRing`.
    pub fn invert(&self, sigma: f64) -> Result<DiscRing> {
        debug_assert!(self.center == Point::new(0.0, 0.0));
        let image = invert_disc(
            &Disc {
                center: Point::new(self.circle_radius, 0.0),
                radius: self.rho,
            },
            sigma,
        )?;
        Ok(DiscRing {
            center: self.center,
            circle_radius: image.center.re,
            rho: image.radius,
            count: self.count,
        })
    }

    pub fn translate(&self, by: Point) -> DiscRing {
        DiscRing {
            center: self.center + by,
            ..*self
        }
    }
}
