//! Körner's pole-ring products and their uniform bounds.
//!
//! For `n >= 1` let `N = n 4^n` and `g_n(z) = 1 / (1 - (z / (1 - 4^-n))^N)`.
//! The poles of `g_n` are `N` equally spaced points on the circle of radius
//! `1 - 4^-n`; each is surrounded by a deleted disc of radius
//! `rho_n = kappa (n+1)^-4 / N`, so a whole level removes a total radius of
//! `kappa (n+1)^-4`. The function `F = prod_{n >= m} g_n` with
//! `m = ceil(3/eps)` is 1 at the origin, vanishes outside the unit disc and is
//! evaluated here as a truncated product with a rigorous tail bound.
//!
//! `N` reaches `10^9` at demonstration scale, so `w^N` is always handled
//! through its logarithm.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::certify::{
    par_eval, sample_region, Certificate, Entry, Extremum, Region, Relation, SampleMeta, SampleSpec,
};
use crate::error::{Error, Result};
use crate::geometry::{DiscRing, Point};

/// Deepest level whose circle radius `1 - 4^-n` still sits a few ulps below 1.
pub const MAX_LEVEL: u32 = 24;

/// `ln` of the smallest positive subnormal; below this `|w^N|` is exactly 0.
const UNDERFLOW_LN: f64 = -745.2;
/// `ln(f64::MAX)`; above this `|w^N|` is infinite.
const OVERFLOW_LN: f64 = 709.7;

const EPS: f64 = f64::EPSILON;

/// A closed interval `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }
}

/// Enclosure of `C0 = prod_{r >= 1} (1 + (r+1)^-4)`.
///
/// The partial product through `terms` factors is summed in the log domain
/// (smallest terms first, compensated), the tail is bounded by
/// `sum_{r > terms} (r+1)^-4 <= (terms+1)^-3 / 3`, and both ends are padded
/// outward for rounding.
pub fn c0_enclosure(terms: u64) -> Interval {
    assert!(terms >= 1, "c0_enclosure needs at least one factor");
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for r in (1..=terms).rev() {
        let k = (r + 1) as f64;
        let term = (1.0 / (k * k * k * k)).ln_1p() - comp;
        let t = sum + term;
        comp = (t - sum) - term;
        sum = t;
    }
    let k = (terms + 1) as f64;
    let tail = 1.0 / (3.0 * k * k * k);
    let pad = 64.0 * EPS;
    Interval {
        lo: sum.exp() * (1.0 - pad),
        hi: (sum + tail).exp() * (1.0 + pad),
    }
}

/// `C = 2^-7 / C0_upper`.
///
/// With `|F| <= C0` on `|z| <= 1/2`, the Cauchy estimate on discs of radius
/// `1/4` gives `|F'| <= 4 C0` on `|z| <= 1/4`, so `|F(w) - 1| <= 4 C0 |w| < eta/32`
/// whenever `|w| < C eta`.
pub fn c_constant(c0_upper: f64) -> f64 {
    assert!(c0_upper >= 1.0, "C0 is at least 1");
    (2.0f64).powi(-7) / c0_upper
}

/// `C0`, `C1 = 4^5 C0` and `C`, with the admissible range `0 < eps < alpha`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub c0: Interval,
    pub c1: f64,
    pub c: f64,
    pub alpha: f64,
}

pub const DEFAULT_ALPHA: f64 = 0.45;
pub const C0_TERMS: u64 = 1_000_000;

impl Constants {
    pub fn new(c0: Interval, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 0.5) {
            return Err(Error::InvalidParams(format!(
                "alpha = {alpha} must lie in (0, 1/2)"
            )));
        }
        Ok(Constants {
            c0,
            c1: 1024.0 * c0.hi,
            c: c_constant(c0.hi),
            alpha,
        })
    }

    /// Constants from a `10^6`-term enclosure and `alpha = 0.45`, computed once.
    pub fn standard() -> &'static Constants {
        static STANDARD: OnceLock<Constants> = OnceLock::new();
        STANDARD.get_or_init(|| {
            Constants::new(c0_enclosure(C0_TERMS), DEFAULT_ALPHA).expect("default alpha is valid")
        })
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        Constants::new(self.c0, alpha)
    }

    /// Largest admissible `eta` (exclusive): `1 / (4C)`.
    pub fn eta_max(&self) -> f64 {
        1.0 / (4.0 * self.c)
    }
}

/// `m(eps) = ceil(3 / eps)`.
pub fn m_of(eps: f64) -> u64 {
    (3.0 / eps).ceil() as u64
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KornerParams {
    pub eps: f64,
    pub alpha: f64,
    /// Pole-disc radius multiplier: `rho_n = kappa (n+1)^-4 / N`.
    pub kappa: f64,
    /// Last materialized level; `None` means `m + 6`.
    pub n_max: Option<u32>,
    /// Evaluations whose error bound exceeds this are reported as unresolved.
    pub tol: f64,
}

impl KornerParams {
    pub fn new(eps: f64) -> Self {
        KornerParams {
            eps,
            alpha: DEFAULT_ALPHA,
            kappa: 1.0,
            n_max: None,
            tol: 1e-9,
        }
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa = kappa;
        self
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_n_max(mut self, n_max: u32) -> Self {
        self.n_max = Some(n_max);
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 0.5) {
            return Err(Error::InvalidParams(format!(
                "alpha = {} must lie in (0, 1/2)",
                self.alpha
            )));
        }
        if !(self.eps > 0.0 && self.eps < self.alpha) {
            return Err(Error::InvalidParams(format!(
                "eps = {} must lie in (0, alpha = {})",
                self.eps, self.alpha
            )));
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "kappa = {} must be positive",
                self.kappa
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParams("tol must be positive".into()));
        }
        Ok(())
    }
}

/// `n 4^n`.
pub fn pole_count(n: u32) -> Result<u64> {
    if n == 0 || n > MAX_LEVEL {
        return Err(Error::LevelTooDeep { n, max: MAX_LEVEL });
    }
    Ok(u64::from(n) << (2 * n))
}

/// `1 - 4^-n`, exact in binary floating point.
pub fn circle_radius(n: u32) -> f64 {
    1.0 - (0.25f64).powi(n as i32)
}

/// The `N` pole discs of `g_n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoleRing {
    pub n: u32,
    pub ring: DiscRing,
}

impl PoleRing {
    pub fn new(n: u32, kappa: f64) -> Result<Self> {
        let count = pole_count(n)?;
        let k = f64::from(n + 1);
        Ok(PoleRing {
            n,
            ring: DiscRing {
                center: Point::new(0.0, 0.0),
                circle_radius: circle_radius(n),
                rho: kappa / (k * k * k * k) / count as f64,
                count,
            },
        })
    }

    pub fn count(&self) -> u64 {
        self.ring.count
    }

    pub fn rho(&self) -> f64 {
        self.ring.rho
    }

    pub fn circle_radius(&self) -> f64 {
        self.ring.circle_radius
    }
}

/// Signed distance from `z` to the nearest pole disc of `ring`, in O(1).
pub fn ring_query(ring: &PoleRing, z: Point) -> f64 {
    ring.ring.signed_distance(z)
}

/// One factor `g_n(z)` evaluated in the log domain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Factor {
    pub value: Complex64,
    /// `ln |g_n(z)|`, finite even when `value` under- or overflows.
    pub log_abs: f64,
    /// `|w^N|` (0 below the underflow threshold, `inf` above overflow).
    pub power_abs: f64,
    /// First-order relative rounding error of `value`.
    pub rel_round: f64,
}

fn factor(n: u32, count: u64, z: Point) -> Result<Factor> {
    let big_n = count as f64;
    let quarter_n = (0.25f64).powi(n as i32);
    let ln_w = z.norm().ln() - (-quarter_n).ln_1p();
    let big_l = big_n * ln_w;
    if z == Point::new(0.0, 0.0) || big_l < UNDERFLOW_LN {
        return Ok(Factor {
            value: Complex64::new(1.0, 0.0),
            log_abs: 0.0,
            power_abs: 0.0,
            rel_round: 0.0,
        });
    }
    if big_l > OVERFLOW_LN {
        // |1 - w^N| = |w^N| (1 + O(e^-709)); 1/|w^N| is below every subnormal
        return Ok(Factor {
            value: Complex64::new(0.0, 0.0),
            log_abs: -big_l,
            power_abs: f64::INFINITY,
            rel_round: 0.0,
        });
    }
    let ring = DiscRing {
        center: Point::new(0.0, 0.0),
        circle_radius: 1.0,
        rho: 0.0,
        count,
    };
    // arg(w^N) = N * (arg z - 2 pi k / N) for the nearest pole index k
    let (_, residual) = ring.angular_split(z);
    let power_abs = big_l.exp();
    let power = Complex64::from_polar(power_abs, big_n * residual);
    let denom = Complex64::new(1.0, 0.0) - power;
    let denom_abs = denom.norm();
    if denom_abs <= EPS {
        return Err(Error::Pole {
            n,
            re: z.re,
            im: z.im,
        });
    }
    let power_err = 4.0 * EPS * (1.0 + big_n * (ln_w.abs() + PI));
    Ok(Factor {
        value: denom.inv(),
        log_abs: -denom_abs.ln(),
        power_abs,
        rel_round: 4.0 * EPS + power_abs / denom_abs * power_err,
    })
}

/// `g_n(z) = 1 / (1 - (z / (1 - 4^-n))^N)` with `N = n 4^n`.
///
/// `|w^N|` below the underflow threshold gives exactly 1 and above the
/// overflow threshold exactly 0. Points within machine precision of a pole
/// are rejected.
pub fn eval_g(n: u32, z: Point) -> Result<Complex64> {
    Ok(factor(n, pole_count(n)?, z)?.value)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalStatus {
    /// Inside the disc of convergence of the tail bound.
    Converged,
    /// `|z| >= 1` and the truncated product fell below the underflow
    /// threshold; the value is exactly 0, as is `F` there.
    Collapsed,
    /// `|z| >= 1` without underflow; `F(z) = 0` and the bound is the size of
    /// the truncated product.
    Outside,
    /// Too close to the unit circle for the tail bound; infinite error bound.
    Unresolved,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FEval {
    pub value: Complex64,
    /// Bound on `|value - F(z)|`, truncation plus first-order rounding.
    pub error_bound: f64,
    /// `ln |prod g_r(z)|` over the materialized levels.
    pub log_abs: f64,
    pub status: EvalStatus,
}

impl FEval {
    pub fn is_resolved(&self, tol: f64) -> bool {
        self.error_bound <= tol
    }
}

/// Körner family for one `eps`: levels `m..=n_max` materialized as implicit
/// pole rings, deeper levels accounted for analytically.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KornerFamily {
    pub params: KornerParams,
    pub m: u32,
    pub n_max: u32,
    pub rings: Vec<PoleRing>,
    /// Upper bound on the sum of all deleted-disc radii, tail included.
    pub radius_budget: f64,
}

/// Sum of `(n+1)^-4` over `lo..=hi` plus the integral tail bound past `hi`.
fn level_radius_sum(lo: u32, hi: u32) -> f64 {
    let partial: f64 = (lo..=hi)
        .rev()
        .map(|n| {
            let k = f64::from(n + 1);
            1.0 / (k * k * k * k)
        })
        .sum();
    let k = f64::from(hi + 1);
    partial + 1.0 / (3.0 * k * k * k)
}

/// Build the family for `params`; fails if the radius budget reaches `eps`.
pub fn build_family(params: KornerParams) -> Result<KornerFamily> {
    params.validate()?;
    let m64 = m_of(params.eps);
    if m64 > u64::from(MAX_LEVEL) {
        return Err(Error::LevelTooDeep {
            n: m64.min(u64::from(u32::MAX)) as u32,
            max: MAX_LEVEL,
        });
    }
    let m = m64 as u32;
    debug_assert!(f64::from(m) > 2.0 / params.eps + 1.0);
    let n_max = params.n_max.unwrap_or(m + 6);
    if m > n_max {
        return Err(Error::MExceedsNmax { m, n_max });
    }
    if n_max > MAX_LEVEL {
        return Err(Error::LevelTooDeep {
            n: n_max,
            max: MAX_LEVEL,
        });
    }
    let rings = (m..=n_max)
        .map(|n| PoleRing::new(n, params.kappa))
        .collect::<Result<Vec<_>>>()?;
    let radius_budget = params.kappa * level_radius_sum(m, n_max) * (1.0 + 8.0 * EPS);
    if !(radius_budget < params.eps) {
        return Err(Error::BudgetExceeded {
            budget: radius_budget,
            eps: params.eps,
        });
    }
    Ok(KornerFamily {
        params,
        m,
        n_max,
        rings,
        radius_budget,
    })
}

/// Outcome of an analytic inequality: pass flag and the tightest margin.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnalyticCheck {
    pub pass: bool,
    /// `observed` and `demanded` of the tightest instance.
    pub observed: f64,
    pub demanded: f64,
}

impl AnalyticCheck {
    fn new() -> Self {
        AnalyticCheck {
            pass: true,
            observed: f64::NEG_INFINITY,
            demanded: f64::INFINITY,
        }
    }

    /// Record `observed < demanded`, keeping the instance with the least slack.
    fn below(mut self, observed: f64, demanded: f64) -> Self {
        let ok = observed < demanded;
        self.pass &= ok;
        let slack = demanded - observed;
        if slack < self.demanded - self.observed || !ok {
            self.observed = observed;
            self.demanded = demanded;
        }
        self
    }
}

impl KornerFamily {
    pub fn eps(&self) -> f64 {
        self.params.eps
    }

    /// Signed distance to the nearest materialized pole disc.
    pub fn signed_distance(&self, z: Point) -> f64 {
        let r = z.norm();
        let mut best = f64::INFINITY;
        for ring in &self.rings {
            let lower = (r - ring.circle_radius()).abs() - ring.rho();
            if lower < best {
                best = best.min(ring_query(ring, z));
            }
        }
        best
    }

    /// Radii `[R_m - rho_m, 1 - 4^-(n_max+1)]` between which pole discs live
    /// and outside of which (below 1) evaluations carry a finite tail bound.
    pub fn resolved_shell(&self) -> (f64, f64) {
        let first = &self.rings[0];
        (
            first.circle_radius() - first.rho(),
            circle_radius(self.n_max + 1),
        )
    }

    /// `F(z)` truncated at `n_max`, with an error bound.
    ///
    /// For `|z| < 1 - 4^-(n_max+1)` the tail factors satisfy
    /// `|g_r - 1| <= q_r / (1 - q_r)` with `q_r = |w_r|^(N_r)`; since `|w_r|`
    /// decreases and `N_r` at least doubles per level, the tail sum is at most
    /// `q / (1 - q)^2` with `q` the first tail term.
    pub fn eval(&self, z: Point) -> Result<FEval> {
        if self.signed_distance(z) < 0.0 {
            return Err(Error::InsideDeletedDisc { re: z.re, im: z.im });
        }
        let mut value = Complex64::new(1.0, 0.0);
        let mut log_abs = 0.0;
        let mut rel_round = 0.0;
        for ring in &self.rings {
            let f = factor(ring.n, ring.count(), z)?;
            value *= f.value;
            log_abs += f.log_abs;
            if f.value != Complex64::new(1.0, 0.0) {
                rel_round += f.rel_round + EPS;
            }
        }
        let r = z.norm();
        if r >= 1.0 {
            if log_abs < UNDERFLOW_LN {
                return Ok(FEval {
                    value: Complex64::new(0.0, 0.0),
                    error_bound: 0.0,
                    log_abs,
                    status: EvalStatus::Collapsed,
                });
            }
            return Ok(FEval {
                value,
                error_bound: value.norm() * (1.0 + rel_round),
                log_abs,
                status: EvalStatus::Outside,
            });
        }
        let first_tail = self.n_max + 1;
        let tail_radius = circle_radius(first_tail);
        if r >= tail_radius {
            return Ok(FEval {
                value,
                error_bound: f64::INFINITY,
                log_abs,
                status: EvalStatus::Unresolved,
            });
        }
        let q = if r == 0.0 {
            0.0
        } else {
            let count = (u64::from(first_tail) << (2 * first_tail)) as f64;
            (count * (r / tail_radius).ln()).exp()
        };
        let tail_sum = q / ((1.0 - q) * (1.0 - q));
        let mut trunc_rel = tail_sum.exp_m1();
        if tail_sum > 0.0 {
            trunc_rel += 16.0 * EPS;
        }
        Ok(FEval {
            value,
            error_bound: value.norm() * (trunc_rel + rel_round),
            log_abs,
            status: EvalStatus::Converged,
        })
    }

    /// Radius budget below `eps`.
    pub fn check_budget(&self) -> AnalyticCheck {
        AnalyticCheck::new().below(self.radius_budget, self.eps())
    }

    /// Every pole disc, materialized or not, lies in `{1 - eps < |z| < 1}`.
    pub fn check_containment(&self) -> AnalyticCheck {
        let eps = self.eps();
        let mut chk = AnalyticCheck::new();
        for ring in &self.rings {
            let (inner, outer) = ring.ring.shell();
            chk = chk.below(1.0 - eps, inner).below(outer, 1.0);
        }
        // Levels past n_max: R_n increases and rho_n decreases, so the inner
        // edge is smallest at n_max + 1; the outer edge stays below 1 iff
        // rho_n < 4^-n, i.e. kappa < n (n+1)^4, weakest at n_max + 1.
        let t = self.n_max + 1;
        let k = f64::from(t + 1);
        let rho_t = self.params.kappa / (k * k * k * k) / (f64::from(t) * 4f64.powi(t as i32));
        chk = chk.below(1.0 - eps, circle_radius(t) - rho_t);
        chk.below(self.params.kappa, f64::from(t) * k * k * k * k)
    }

    /// Pole discs are pairwise disjoint, within and across levels.
    pub fn check_disjointness(&self) -> AnalyticCheck {
        let mut chk = AnalyticCheck::new();
        for ring in &self.rings {
            let half_chord = ring.circle_radius() * (PI / ring.count() as f64).sin();
            chk = chk.below(ring.rho(), half_chord);
        }
        for pair in self.rings.windows(2) {
            chk = chk.below(
                pair[0].rho() + pair[1].rho(),
                pair[1].circle_radius() - pair[0].circle_radius(),
            );
        }
        // Past n_max: rho_n < 2 R_n / N_n <= R_n sin(pi / N_n) needs
        // kappa < 2 R_n (n+1)^4, and consecutive gaps 3 4^-(n+1) exceed
        // 2 rho_n iff kappa < (3/8) n (n+1)^4; both are weakest at n = n_max
        // (the pair (n_max, n_max + 1) is covered by the second).
        let t = self.n_max;
        let k = f64::from(t + 1);
        let k4 = k * k * k * k;
        let kappa = self.params.kappa;
        chk = chk.below(kappa, 2.0 * circle_radius(t + 1) * (k + 1.0).powi(4));
        chk.below(kappa, 0.375 * f64::from(t) * k4)
    }
}

/// `F` truncated at the family's last level; see [`KornerFamily::eval`].
pub fn eval_f(fam: &KornerFamily, z: Point) -> Result<FEval> {
    fam.eval(z)
}

/// Check every numbered property of the family.
///
/// Analytic entries are exact inequalities on the construction; sampled
/// entries use `spec.count` seeded points per region (`spec.region` is
/// ignored, the regions are fixed by the property being checked).
pub fn check_conditions(
    fam: &KornerFamily,
    consts: &Constants,
    spec: &SampleSpec,
) -> Result<Certificate> {
    let eps = fam.eps();
    let tol = fam.params.tol;
    let origin = Point::new(0.0, 0.0);
    let mut cert = Certificate::new(format!(
        "Körner family eps={eps} m={} n_max={} kappa={} alpha={}",
        fam.m, fam.n_max, fam.params.kappa, fam.params.alpha
    ));

    let a = fam.check_budget();
    cert.push(Entry::new(
        "a",
        "sum r(Delta_k) < eps",
        a.observed,
        Relation::Below,
        a.demanded,
    ));

    // poles sit at disc centers: the distance at sampled poles is exactly -rho
    let mut worst_b = 0.0f64;
    for ring in &fam.rings {
        for j in 0..8u64 {
            let k = j * ring.count() / 8 + j;
            let d = ring_query(ring, ring.ring.pole(k));
            worst_b = worst_b.max(((d + ring.rho()) / ring.rho()).abs());
        }
    }
    cert.push(
        Entry::new(
            "b",
            "poles of F_n lie in the union of Delta_k",
            worst_b,
            Relation::AtMost,
            1e-3,
        )
        .with_note(
            "relative offset of ring_query at sampled poles from -rho; poles are disc centers",
        ),
    );

    // (c) zero-free inside, negligible outside
    let in_spec = spec.substream(1).with_region(Region::disc(origin, 1.0));
    let off_discs = |p: Point| fam.signed_distance(p) >= spec.margin;
    let mut pts = sample_region(&in_spec, off_discs)?;
    // area samples almost never come near the poles; add the ring shell
    let (shell_in, shell_out) = fam.resolved_shell();
    let shell_spec = spec
        .substream(5)
        .with_count(spec.count.div_ceil(4))
        .with_region(Region::annulus(origin, shell_in, shell_out));
    pts.extend(sample_region(&shell_spec, off_discs)?);
    let vals = par_eval(&pts, |z| fam.eval(z));
    let mut min_log = Extremum::min();
    let mut unresolved = 0;
    for (z, v) in pts.iter().zip(vals) {
        match v {
            Ok(e) => min_log = min_log.take_min(e.log_abs, *z),
            Err(_) => unresolved += 1,
        }
    }
    cert.push(
        Entry::new(
            "c-zero-free",
            "F zero free in D minus the Delta_k",
            min_log.value,
            Relation::Above,
            f64::NEG_INFINITY,
        )
        .with_samples(
            SampleMeta::new(&in_spec)
                .at(min_log.at)
                .unresolved(unresolved),
        )
        .with_note(format!(
            "observed is min ln|F| over samples; {} extra samples in the ring shell",
            shell_spec.count
        ))
        .fail_if(unresolved > 0, "evaluation failed at some samples"),
    );
    let out_spec = spec
        .substream(2)
        .with_region(Region::annulus(origin, 1.0, 2.0));
    let pts = sample_region(&out_spec, |p| p.norm() > 1.0)?;
    let vals = par_eval(&pts, |z| fam.eval(z));
    let mut max_out = Extremum::max();
    for (z, v) in pts.iter().zip(vals) {
        let m = v
            .map(|e| e.value.norm() + e.error_bound)
            .unwrap_or(f64::INFINITY);
        max_out = max_out.take_max(m, *z);
    }
    cert.push(
        Entry::new(
            "c-outside",
            "F = 0 outside D",
            max_out.value,
            Relation::Below,
            1e-6,
        )
        .with_samples(SampleMeta::new(&out_spec).at(max_out.at)),
    );

    let d = fam.check_containment();
    cert.push(Entry::new(
        "d",
        "union of Delta_k in {1-eps < |z| < 1}",
        d.observed,
        Relation::Below,
        d.demanded,
    ));
    let e = fam.check_disjointness();
    cert.push(Entry::new(
        "e",
        "Delta_k pairwise disjoint",
        e.observed,
        Relation::Below,
        e.demanded,
    ));

    let f0 = fam.eval(origin)?;
    cert.push(
        Entry::new("f", "F(0) = 1", f0.value.re, Relation::Equal, 1.0).fail_if(
            f0.value.im != 0.0 || f0.error_bound != 0.0,
            "F(0) carried an imaginary part or a nonzero error bound",
        ),
    );

    // (g) and the cited per-factor bound on |z| <= 1/2
    let half_spec = spec.substream(3).with_region(Region::disc(origin, 0.5));
    let pts = sample_region(&half_spec, |_| true)?;
    let vals = par_eval(&pts, |z| fam.eval(z));
    let mut sup_g = Extremum::max();
    let mut unresolved = 0;
    for (z, v) in pts.iter().zip(vals) {
        match v {
            Ok(e) if e.is_resolved(tol) => {
                sup_g = sup_g.take_max(e.value.norm() + e.error_bound, *z)
            }
            _ => unresolved += 1,
        }
    }
    cert.push(
        Entry::new(
            "g",
            "sup_{|z|<=1/2} |F| <= C0",
            sup_g.value,
            Relation::AtMost,
            consts.c0.hi,
        )
        .with_samples(
            SampleMeta::new(&half_spec)
                .at(sup_g.at)
                .unresolved(unresolved),
        )
        .fail_if(unresolved > 0, "unresolved samples"),
    );
    let mut worst_ratio = Extremum::max();
    for ring in &fam.rings {
        let k = f64::from(ring.n + 1);
        let bound = 1.0 + 1.0 / (k * k * k * k);
        for z in &pts {
            let g = factor(ring.n, ring.count(), *z)?.value.norm();
            worst_ratio = worst_ratio.take_max(g / bound, *z);
        }
    }
    cert.push(
        Entry::new(
            "g-factor",
            "|g_n(z)| <= 1 + (n+1)^-4 for |z| <= 1/2, n >= m",
            worst_ratio.value,
            Relation::AtMost,
            1.0,
        )
        .with_samples(SampleMeta::new(&half_spec).at(worst_ratio.at))
        .with_note("observed is max of |g_n| / (1 + (n+1)^-4)"),
    );

    // (h) on 2D minus the rings with clearance 10 rho per ring, plus probes
    // placed exactly at that clearance around sampled poles
    let h_spec = spec.substream(4).with_region(Region::disc(origin, 2.0));
    let clear = |p: Point| fam.rings.iter().all(|r| ring_query(r, p) >= 10.0 * r.rho());
    let mut pts = sample_region(&h_spec, clear)?;
    let h_shell = shell_spec.substream(6);
    pts.extend(sample_region(&h_shell, clear)?);
    let mut probes = 0;
    for ring in &fam.rings {
        for j in 0..4u64 {
            let k = j * (ring.count() / 4) + 3 * j;
            let pole = ring.ring.pole(k);
            let dir = pole / pole.norm();
            for t in 0..8 {
                let phase = Complex64::from_polar(1.0, PI * f64::from(t) / 4.0);
                let p = pole + dir * phase * (11.0 * ring.rho());
                if clear(p) {
                    pts.push(p);
                    probes += 1;
                }
            }
        }
    }
    let vals = par_eval(&pts, |z| fam.eval(z));
    let mut sup_h = Extremum::max();
    let mut unresolved = 0;
    for (z, v) in pts.iter().zip(vals) {
        match v {
            Ok(e) if e.error_bound.is_finite() => {
                sup_h = sup_h.take_max(e.value.norm() + e.error_bound, *z)
            }
            _ => unresolved += 1,
        }
    }
    let bound_h = consts.c1 / eps.powi(4);
    cert.push(
        Entry::new("h", "sup |F| <= C1 / eps^4", sup_h.value, Relation::AtMost, bound_h)
            .with_samples(
                SampleMeta::new(&h_spec.with_margin(10.0))
                    .at(sup_h.at)
                    .unresolved(unresolved),
            )
            .with_note(format!(
                "clearance 10 rho per ring; {} extra samples in the ring shell; {probes} probes at 11 rho from sampled poles",
                h_shell.count
            ))
            .fail_if(unresolved > 0, "unresolved samples"),
    );
    Ok(cert)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::TAU;

    fn c(re: f64, im: f64) -> Point {
        Point::new(re, im)
    }

    /// Parameters for `eps`, raising `alpha` past the default when needed.
    fn params(eps: f64) -> KornerParams {
        KornerParams::new(eps).with_alpha(DEFAULT_ALPHA.max(eps + 0.01))
    }

    /// `prod_{k >= 2} (1 + k^-4)` from the closed form
    /// `prod_{k >= 1} (1 + k^-4) = (cosh(pi sqrt2) - cos(pi sqrt2)) / (2 pi^2)`.
    fn c0_closed_form() -> f64 {
        let x = PI * std::f64::consts::SQRT_2;
        (x.cosh() - x.cos()) / (4.0 * PI * PI)
    }

    #[test]
    fn c0_partial_product_dominates_partial_sum() {
        for terms in [1u64, 2, 5, 10, 1000] {
            let enc = c0_enclosure(terms);
            let sum: f64 = (1..=terms).map(|r| ((r + 1) as f64).powi(-4)).sum();
            assert!(enc.lo >= (1.0 + sum) * (1.0 - 1e-13), "terms = {terms}");
        }
    }

    #[test]
    fn c0_enclosure_brackets() {
        // zeta(4) - 1 = pi^4/90 - 1
        let zeta4_minus_1 = PI.powi(4) / 90.0 - 1.0;
        let enc = c0_enclosure(1_000_000);
        assert!(enc.lo >= 1.0823 && enc.hi <= 1.0859);
        assert!(enc.hi <= zeta4_minus_1.exp());
        assert!(enc.width() < 1e-12, "width {}", enc.width());
        assert!(
            enc.contains(c0_closed_form()),
            "{enc:?} vs {}",
            c0_closed_form()
        );
        assert!(c0_enclosure(10).contains_interval(&enc));
    }

    #[test]
    fn c_constant_examples() {
        assert_eq!(c_constant(1.0), 1.0 / 128.0);
        let consts = Constants::standard();
        assert_relative_eq!(consts.c, 0.00721, epsilon = 1e-5);
        for eta in [0.1, 1.0, 7.5, 30.0] {
            let lhs = 4.0 * consts.c0.hi * (consts.c * eta);
            assert_relative_eq!(lhs, eta / 32.0, max_relative = 1e-15);
        }
        for c0 in [1.0, 1.08, 3.0, 1e6] {
            let cc = c_constant(c0);
            assert!(cc > 0.0 && cc < 1.0);
        }
        assert_eq!(consts.c1, 1024.0 * consts.c0.hi);
        assert!(consts.c * consts.eta_max() * 4.0 <= 1.0 + 1e-15);
    }

    #[test]
    fn m_examples() {
        assert_eq!(m_of(0.4), 8);
        assert_eq!(m_of(0.45), 7);
        assert_eq!(m_of(0.3), 10);
    }

    #[test]
    fn build_family_eps_04() {
        let fam = build_family(KornerParams::new(0.4)).unwrap();
        assert_eq!(fam.m, 8);
        assert_eq!(fam.n_max, 14);
        assert_eq!(fam.rings.len(), 7);
        let r8 = &fam.rings[0];
        assert_eq!(r8.count(), 524_288);
        assert_eq!(r8.circle_radius(), 1.0 - 2f64.powi(-16));
        // level total radius N rho = (m+1)^-4
        assert_relative_eq!(
            r8.count() as f64 * r8.rho(),
            9f64.powi(-4),
            max_relative = 1e-14
        );
        assert_relative_eq!(9f64.powi(-4), 1.524e-4, max_relative = 1e-3);
        // partial sum + integral tail oracle
        let brute: f64 = (8..200_000u64).map(|n| ((n + 1) as f64).powi(-4)).sum();
        assert!(fam.radius_budget >= brute);
        assert!(fam.radius_budget <= 8f64.powi(-3) / 3.0);
        assert!(fam.radius_budget < 0.4);
    }

    #[test]
    fn build_family_errors() {
        assert!(matches!(
            build_family(KornerParams::new(0.4).with_kappa(5000.0)),
            Err(Error::BudgetExceeded { .. })
        ));
        assert!(matches!(
            build_family(KornerParams::new(0.4).with_n_max(7)),
            Err(Error::MExceedsNmax { m: 8, n_max: 7 })
        ));
        assert!(build_family(KornerParams::new(0.46)).is_err());
        assert!(build_family(KornerParams::new(0.0)).is_err());
        assert!(build_family(KornerParams::new(0.3).with_alpha(0.6)).is_err());
        assert!(matches!(
            build_family(KornerParams::new(0.05)),
            Err(Error::LevelTooDeep { .. })
        ));
    }

    #[test]
    fn g_examples() {
        for n in 1..=MAX_LEVEL {
            assert_eq!(eval_g(n, c(0.0, 0.0)).unwrap(), Complex64::new(1.0, 0.0));
        }
        let g = eval_g(1, c(0.375, 0.0)).unwrap();
        assert_relative_eq!(g.re, 16.0 / 15.0, epsilon = 1e-14);
        assert!(g.im.abs() < 1e-14);
        assert!(matches!(
            eval_g(1, c(0.75, 0.0)),
            Err(Error::Pole { n: 1, .. })
        ));
        assert!(matches!(
            eval_g(1, c(0.0, 0.75)),
            Err(Error::Pole { n: 1, .. })
        ));
        assert!(eval_g(0, c(0.1, 0.0)).is_err());
    }

    #[test]
    fn log_domain_matches_direct_power_for_small_n() {
        // oracle: repeated complex multiplication
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for n in 1..=3u32 {
            let count = pole_count(n).unwrap();
            let scale = circle_radius(n);
            for _ in 0..2000 {
                let z = Point::from_polar(rng.random_range(0.0..1.3), rng.random_range(0.0..TAU));
                let w = z / scale;
                let mut p = Complex64::new(1.0, 0.0);
                for _ in 0..count {
                    p *= w;
                }
                let direct = (Complex64::new(1.0, 0.0) - p).inv();
                if (Complex64::new(1.0, 0.0) - p).norm() < 1e-6 {
                    continue;
                }
                let got = eval_g(n, z).unwrap();
                assert!(
                    (got - direct).norm() <= 1e-11 * direct.norm().max(1.0),
                    "n={n} z={z} got={got} direct={direct}"
                );
            }
        }
    }

    #[test]
    fn overflow_and_underflow_are_exact() {
        assert_eq!(eval_g(8, c(0.5, 0.1)).unwrap(), Complex64::new(1.0, 0.0));
        assert_eq!(eval_g(8, c(1.1, 0.0)).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn cited_factor_bound_on_half_disc() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for n in 8..=14u32 {
            let bound = 1.0 + f64::from(n + 1).powi(-4);
            for _ in 0..1000 {
                let z =
                    Point::from_polar(0.5 * rng.random::<f64>().sqrt(), rng.random_range(0.0..TAU));
                assert!(eval_g(n, z).unwrap().norm() <= bound);
            }
        }
    }

    #[test]
    fn f_at_origin_is_exactly_one() {
        for eps in [0.45, 0.4, 0.3] {
            let fam = build_family(params(eps)).unwrap();
            let e = fam.eval(c(0.0, 0.0)).unwrap();
            assert_eq!(e.value, Complex64::new(1.0, 0.0));
            assert_eq!(e.error_bound, 0.0);
            assert_eq!(e.status, EvalStatus::Converged);
        }
    }

    #[test]
    fn f_collapses_outside_unit_disc() {
        let fam = build_family(KornerParams::new(0.4)).unwrap();
        for theta in [0.0, 1.0, 2.5] {
            let e = fam.eval(Point::from_polar(1.1, theta)).unwrap();
            assert!(e.value.norm() < 1e-300);
            assert_eq!(e.status, EvalStatus::Collapsed);
        }
        // just outside: each level contributes about e^-n
        let e = fam.eval(c(1.0 + 1e-12, 0.3e-12)).unwrap();
        assert!(e.value.norm() < 1e-6);
        assert!(e.log_abs < -70.0);
    }

    #[test]
    fn f_unresolved_next_to_unit_circle() {
        let fam = build_family(KornerParams::new(0.4)).unwrap();
        let r = circle_radius(15) + 1e-16 * 4.0;
        let e = fam.eval(Point::from_polar(r, 0.123)).unwrap();
        assert_eq!(e.status, EvalStatus::Unresolved);
        assert!(e.error_bound.is_infinite());
    }

    #[test]
    fn f_rejects_points_in_deleted_discs() {
        let fam = build_family(KornerParams::new(0.4)).unwrap();
        let ring = &fam.rings[2];
        let p = ring.ring.pole(12345) * (1.0 + 0.5 * ring.rho());
        assert!(matches!(fam.eval(p), Err(Error::InsideDeletedDisc { .. })));
    }

    #[test]
    fn ring_query_examples() {
        let ring = PoleRing::new(3, 1.0).unwrap();
        assert_eq!(ring.count(), 192);
        assert_relative_eq!(
            ring_query(&ring, c(0.0, 0.0)),
            ring.circle_radius() - ring.rho()
        );
        let p = ring.ring.pole(77);
        assert_relative_eq!(ring_query(&ring, p), -ring.rho(), max_relative = 1e-6);
    }

    #[test]
    fn ring_query_agrees_with_full_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for n in 1..=4u32 {
            let ring = PoleRing::new(n, 1.0).unwrap();
            for _ in 0..2500 {
                let z = Point::from_polar(rng.random_range(0.0..1.2), rng.random_range(-PI..PI));
                let brute = (0..ring.count())
                    .map(|k| (z - ring.ring.pole(k)).norm() - ring.rho())
                    .fold(f64::INFINITY, f64::min);
                assert!((ring_query(&ring, z) - brute).abs() <= 1e-14);
            }
        }
    }

    #[test]
    fn analytic_conditions_hold_at_default_schedule() {
        for eps in [0.45, 0.4, 0.3, 0.2] {
            let fam = build_family(params(eps)).unwrap();
            assert!(fam.check_budget().pass);
            assert!(fam.check_containment().pass, "eps {eps}");
            assert!(fam.check_disjointness().pass, "eps {eps}");
        }
        // intra-ring spacing at n = 8 is far larger than the disc diameters
        let ring = PoleRing::new(8, 1.0).unwrap();
        let spacing = TAU * ring.circle_radius() / ring.count() as f64;
        assert_relative_eq!(spacing, 1.198e-5, max_relative = 1e-3);
        assert_relative_eq!(2.0 * ring.rho(), 5.8e-10, max_relative = 1e-2);
    }

    #[test]
    fn disjointness_detects_fat_discs() {
        // kappa large enough to overlap rings but still inside the budget
        let fam = build_family(KornerParams::new(0.4).with_kappa(1e6).with_n_max(8));
        // budget (9^-4 + 9^-3/3) * 1e6 is far above eps
        assert!(fam.is_err());
        let mut fam = build_family(KornerParams::new(0.4)).unwrap();
        fam.params.kappa = 1e9;
        assert!(!fam.check_disjointness().pass);
    }

    #[test]
    fn deeper_truncation_stays_within_bound() {
        let fam = build_family(KornerParams::new(0.4)).unwrap();
        let deep = build_family(KornerParams::new(0.4).with_n_max(19)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let r_last = fam.rings.last().unwrap().circle_radius();
        let mut checked = 0;
        while checked < 1000 {
            let z = if checked % 4 == 0 {
                // between the last materialized ring and the tail radius
                let t: f64 = rng.random();
                Point::from_polar(
                    r_last + t * (circle_radius(15) - r_last),
                    rng.random_range(0.0..TAU),
                )
            } else {
                Point::from_polar(
                    r_last * rng.random::<f64>().sqrt(),
                    rng.random_range(0.0..TAU),
                )
            };
            if deep.signed_distance(z) < 0.0 {
                continue;
            }
            let (Ok(a), Ok(b)) = (fam.eval(z), deep.eval(z)) else {
                continue;
            };
            if a.status != EvalStatus::Converged {
                continue;
            }
            assert!(
                (a.value - b.value).norm() <= a.error_bound,
                "z = {z}: {a:?} vs {b:?}"
            );
            checked += 1;
        }
    }

    #[test]
    fn conditions_certificate_eps_04() {
        let fam = build_family(KornerParams::new(0.4)).unwrap();
        let spec = SampleSpec::new(2000, 7, Region::disc(c(0.0, 0.0), 1.0));
        let cert = check_conditions(&fam, Constants::standard(), &spec).unwrap();
        for e in &cert.entries {
            assert!(e.pass, "{e:?}");
        }
        assert!(cert.overall);
        let g = cert.entry("g").unwrap();
        assert!((g.observed - 1.0).abs() <= 1e-12);
        assert_eq!(
            cert,
            check_conditions(&fam, Constants::standard(), &spec).unwrap()
        );
    }

    proptest! {
        #[test]
        fn budget_is_below_eps_whenever_built(eps in 0.13f64..0.45, kappa in 0.01f64..50.0) {
            if let Ok(fam) = build_family(KornerParams::new(eps).with_kappa(kappa)) {
                prop_assert!(fam.radius_budget < eps);
                let brute: f64 = (fam.m..fam.m + 5000)
                    .map(|n| kappa * f64::from(n + 1).powi(-4))
                    .sum();
                prop_assert!(brute <= fam.radius_budget);
            }
        }
    }
}
