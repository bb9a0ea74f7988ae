//! Sampling-based certification: reproducible samplers over `K`, the local
//! unit and witness checks, the nontriviality budget check and area reports.
//!
//! No finite computation certifies a sup-norm over `K`. Every sampled entry
//! therefore records its seed, sample count, margin and the location of the
//! observed extremum, so a regression can be replayed exactly.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cheese::{Cheese, LocalUnit};
use crate::error::{Error, Result};
use crate::geometry::Point;

/// Where candidate points are drawn from (uniformly by area).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Region {
    Disc {
        center: Point,
        radius: f64,
    },
    Annulus {
        center: Point,
        inner: f64,
        outer: f64,
    },
}

impl Region {
    pub fn disc(center: Point, radius: f64) -> Self {
        Region::Disc { center, radius }
    }

    pub fn annulus(center: Point, inner: f64, outer: f64) -> Self {
        Region::Annulus {
            center,
            inner,
            outer,
        }
    }

    pub fn area(&self) -> f64 {
        match *self {
            Region::Disc { radius, .. } => PI * radius * radius,
            Region::Annulus { inner, outer, .. } => PI * (outer * outer - inner * inner),
        }
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> Point {
        let (center, inner, outer) = match *self {
            Region::Disc { center, radius } => (center, 0.0, radius),
            Region::Annulus {
                center,
                inner,
                outer,
            } => (center, inner, outer),
        };
        let u: f64 = rng.random();
        let r = (inner * inner + u * (outer * outer - inner * inner)).sqrt();
        let theta = rng.random::<f64>() * TAU;
        center + Point::from_polar(r, theta)
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Region::Disc { radius, .. } => radius > 0.0 && radius.is_finite(),
            Region::Annulus { inner, outer, .. } => {
                inner >= 0.0 && outer > inner && outer.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!(
                "degenerate sampling region {self:?}"
            )))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleSpec {
    pub count: usize,
    /// Minimum clearance from every deleted disc.
    pub margin: f64,
    pub seed: u64,
    pub region: Region,
}

impl SampleSpec {
    pub fn new(count: usize, seed: u64, region: Region) -> Self {
        SampleSpec {
            count,
            margin: 0.0,
            seed,
            region,
        }
    }

    pub fn with_margin(mut self, margin: f64) -> Self {
        self.margin = margin;
        self
    }

    pub fn with_region(mut self, region: Region) -> Self {
        self.region = region;
        self
    }

    pub fn with_count(mut self, count: usize) -> Self {
        self.count = count;
        self
    }

    /// A derived spec for a sub-stream; the seed is mixed so strata never
    /// share candidates.
    pub fn substream(&self, stream: u64) -> Self {
        let mut s = *self;
        s.seed = self
            .seed
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(stream.wrapping_mul(0xBF58_476D_1CE4_E5B9))
            .rotate_left(17);
        s
    }

    fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::InvalidParams("sample count must be >= 1".into()));
        }
        if !(self.margin >= 0.0) {
            return Err(Error::InvalidParams("margin must be >= 0".into()));
        }
        self.region.validate()
    }
}

/// Seeded rejection sampling of exactly `spec.count` points of `spec.region`
/// accepted by `accept`. Fails when fewer than one candidate in 10^4 is kept.
pub fn sample_region<F>(spec: &SampleSpec, accept: F) -> Result<Vec<Point>>
where
    F: Fn(Point) -> bool,
{
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = Vec::with_capacity(spec.count);
    let mut attempts: u64 = 0;
    while out.len() < spec.count {
        let p = spec.region.draw(&mut rng);
        attempts += 1;
        if accept(p) {
            out.push(p);
        }
        if attempts >= 100_000 && (out.len() as u64) * 10_000 < attempts {
            return Err(Error::RejectionRate {
                accepted: out.len() as u64,
                attempts,
            });
        }
    }
    Ok(out)
}

/// Seeded points of `K` inside `spec.region` whose clearance from every
/// materialized deleted disc is at least `spec.margin`.
pub fn sample_k(cheese: &Cheese, spec: &SampleSpec) -> Result<Vec<Point>> {
    sample_region(spec, |p| {
        cheese.outer().signed_distance(p) <= 0.0 && cheese.clearance(p) >= spec.margin
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub count: usize,
    pub margin: f64,
    pub seed: u64,
    pub region: Region,
    /// Where the reported extremum was observed.
    pub extremum_at: Option<Point>,
    /// Samples whose evaluation carried no usable error bound.
    pub unresolved: usize,
}

impl SampleMeta {
    pub fn new(spec: &SampleSpec) -> Self {
        SampleMeta {
            count: spec.count,
            margin: spec.margin,
            seed: spec.seed,
            region: spec.region,
            extremum_at: None,
            unresolved: 0,
        }
    }

    pub fn at(mut self, p: Option<Point>) -> Self {
        self.extremum_at = p;
        self
    }

    pub fn unresolved(mut self, n: usize) -> Self {
        self.unresolved = n;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// observed <= demanded
    AtMost,
    /// observed < demanded
    Below,
    /// observed > demanded
    Above,
    /// observed == demanded, bit for bit
    Equal,
    /// |observed - demanded| <= tolerance * |demanded|
    RelativelyEqual { tolerance: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub id: String,
    /// The inequality or identity the entry certifies, or `"plumbing"`.
    pub anchor: String,
    #[serde(with = "nonfinite")]
    pub demanded: f64,
    #[serde(with = "nonfinite")]
    pub observed: f64,
    pub relation: Relation,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<SampleMeta>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Entry {
    pub fn new(id: &str, anchor: &str, observed: f64, relation: Relation, demanded: f64) -> Self {
        let pass = match relation {
            Relation::AtMost => observed <= demanded,
            Relation::Below => observed < demanded,
            Relation::Above => observed > demanded,
            Relation::Equal => observed == demanded,
            Relation::RelativelyEqual { tolerance } => {
                (observed - demanded).abs() <= tolerance * demanded.abs()
            }
        };
        Entry {
            id: id.to_string(),
            anchor: anchor.to_string(),
            demanded,
            observed,
            relation,
            pass,
            samples: None,
            note: None,
        }
    }

    pub fn with_samples(mut self, meta: SampleMeta) -> Self {
        self.samples = Some(meta);
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    /// Force a failure, e.g. when some samples could not be evaluated.
    pub fn fail_if(mut self, cond: bool, why: &str) -> Self {
        if cond {
            self.pass = false;
            self.note = Some(why.to_string());
        }
        self
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub subject: String,
    pub entries: Vec<Entry>,
    pub overall: bool,
}

impl Certificate {
    pub fn new(subject: impl Into<String>) -> Self {
        Certificate {
            subject: subject.into(),
            entries: Vec::new(),
            overall: true,
        }
    }

    pub fn push(&mut self, e: Entry) {
        self.overall &= e.pass;
        self.entries.push(e);
    }

    pub fn extend(&mut self, other: Certificate) {
        for e in other.entries {
            self.push(e);
        }
    }

    pub fn entry(&self, id: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.id == id)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Entry> {
        self.entries.iter().filter(|e| !e.pass)
    }
}

/// serde helper: non-finite floats are written as strings so certificates
/// stay valid JSON.
mod nonfinite {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Str(s) => match s.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!("bad float {other:?}"))),
            },
        }
    }
}

/// Running maximum that remembers where it was attained.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Extremum {
    pub value: f64,
    pub at: Option<Point>,
}

impl Extremum {
    pub fn max() -> Self {
        Extremum {
            value: f64::NEG_INFINITY,
            at: None,
        }
    }

    pub fn min() -> Self {
        Extremum {
            value: f64::INFINITY,
            at: None,
        }
    }

    pub fn take_max(self, v: f64, p: Point) -> Self {
        if v > self.value || self.at.is_none() && v.is_nan() {
            Extremum {
                value: v,
                at: Some(p),
            }
        } else {
            self
        }
    }

    pub fn take_min(self, v: f64, p: Point) -> Self {
        if v < self.value {
            Extremum {
                value: v,
                at: Some(p),
            }
        } else {
            self
        }
    }
}

/// Evaluate `f` on every point in parallel, keeping input order.
pub(crate) fn par_eval<T, F>(points: &[Point], f: F) -> Vec<T>
where
    T: Send,
    F: Fn(Point) -> T + Sync + Send,
{
    points.par_iter().map(|&p| f(p)).collect()
}

/// Inputs of the witness check at one point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessSpec {
    pub x: Point,
    pub level: u32,
    pub s: u32,
    /// `sup |d/dz z^s|` over the closed unit disc, i.e. `s`.
    pub lipschitz_bound: f64,
}

impl WitnessSpec {
    pub fn new(x: Point, level: u32) -> Self {
        Self::with_power(x, level, 5)
    }

    pub fn with_power(x: Point, level: u32, s: u32) -> Self {
        assert!(s >= 1, "power s must be positive");
        WitnessSpec {
            x,
            level,
            s,
            lipschitz_bound: f64::from(s),
        }
    }
}

/// Certify the local unit inequalities on seeded samples.
///
/// Samples are stratified: the dead zone `|z - a| <= sigma`, a thin shell
/// straddling the inverted pole rings, the near zone
/// `sigma < |z - a| <= sigma / (C eta)` and the whole disc `|z - a| <= 2`.
/// `spec.count` is split between the strata and `spec.region` is ignored.
pub fn check_local_unit(unit: &LocalUnit, spec: &SampleSpec) -> Result<Certificate> {
    let consts = unit.constants();
    let a = unit.center();
    let sigma = unit.sigma();
    let eta = unit.eta();
    let eps = unit.eps();
    let near = unit.near_radius();
    let mut cert = Certificate::new(format!(
        "local unit eps={eps} eta={eta} a={}{:+}i sigma={sigma:e}",
        a.re, a.im
    ));

    let identity = (sigma / (consts.c * eta)).powi(5) * 2.0 * consts.c1 / eps.powi(4);
    cert.push(Entry::new(
        "sigma-identity",
        "(sigma/(C eta))^5 * 2 C1 eps^-4 = eta",
        identity,
        Relation::RelativelyEqual { tolerance: 1e-12 },
        eta,
    ));
    cert.push(Entry::new(
        "radius-budget",
        "sum r(D_k) < 2 eps sigma",
        unit.radius_budget(),
        Relation::Below,
        2.0 * eps * sigma,
    ));
    let (inner, outer) = unit.shell();
    cert.push(
        Entry::new(
            "ring-shell-inner",
            "deleted discs avoid |z-a| <= sigma",
            inner,
            Relation::Above,
            sigma,
        )
        .with_note("inner radius of the annulus holding every materialized deleted disc"),
    );
    cert.push(Entry::new(
        "ring-shell-outer",
        "deleted discs lie in |z-a| <= sigma/(1-eps)",
        outer,
        Relation::AtMost,
        sigma / (1.0 - eps),
    ));

    let n = spec.count.max(8);
    let base = SampleSpec {
        count: n / 8,
        margin: spec.margin,
        seed: spec.seed,
        region: Region::disc(a, sigma),
    };
    let keep = |p: Point| unit.clearance(p) >= spec.margin;

    let (w_in, w_out) = unit.family().resolved_shell();
    let strata = [
        ("dead", base.substream(1)),
        (
            "shell",
            base.substream(2)
                .with_count(n / 4)
                .with_region(Region::annulus(a, sigma / w_out, sigma / w_in)),
        ),
        (
            "near",
            base.substream(3)
                .with_count(n / 4)
                .with_region(Region::annulus(a, sigma, near.min(2.0))),
        ),
        (
            "wide",
            base.substream(4)
                .with_count(n - n / 8 - 2 * (n / 4))
                .with_region(Region::disc(a, 2.0)),
        ),
    ];

    let mut far_worst = Extremum::max();
    let mut far_meta = None;
    for (label, stratum) in &strata {
        let pts = sample_region(stratum, keep)?;
        let vals = par_eval(&pts, |z| unit.eval_h(z));
        if *label == "dead" {
            // exact zeros
            let mut worst = Extremum::max();
            for (z, v) in pts.iter().zip(&vals) {
                let m = v.as_ref().map(|e| e.value.norm()).unwrap_or(f64::INFINITY);
                worst = worst.take_max(m, *z);
            }
            cert.push(
                Entry::new(
                    "dead-zone",
                    "h = 0 on |z-a| <= sigma",
                    worst.value,
                    Relation::Equal,
                    0.0,
                )
                .with_samples(SampleMeta::new(stratum).at(worst.at)),
            );
        }
        let mut worst = Extremum::max();
        let mut unresolved = 0;
        let mut far = Extremum::max();
        for (z, v) in pts.iter().zip(vals) {
            let u = *z - a;
            let dev = match v {
                Ok(e) if e.error_bound.is_finite() => {
                    let d = (e.value - 1.0).norm();
                    if u.norm() > near {
                        far = far.take_max(d + e.error_bound, *z);
                    }
                    u.norm().powi(5) * (d + e.error_bound)
                }
                _ => {
                    unresolved += 1;
                    f64::INFINITY
                }
            };
            worst = worst.take_max(dev, *z);
        }
        cert.push(
            Entry::new(
                &format!("quintic-{label}"),
                "|(z-a)^5 h(z) - (z-a)^5| <= eta",
                worst.value,
                Relation::AtMost,
                eta,
            )
            .with_samples(SampleMeta::new(stratum).at(worst.at).unresolved(unresolved))
            .fail_if(
                unresolved > 0,
                "some samples had no usable truncation bound",
            ),
        );
        if far.at.is_some() && far.value > far_worst.value {
            far_worst = far;
            far_meta = Some(SampleMeta::new(stratum).at(far.at));
        }
    }
    let far_entry = Entry::new(
        "far-zone",
        "|h - 1| < eta/32 for |z-a| > sigma/(C eta)",
        far_worst.value.max(0.0),
        Relation::Below,
        eta / 32.0,
    );
    cert.push(match far_meta {
        Some(m) => far_entry.with_samples(m),
        None => far_entry.with_note("no far-zone samples"),
    });
    Ok(cert)
}

/// Finite check of the covering criterion at one point `x` of `K`.
///
/// Materializes the covering disc of the requested level that contains `x`
/// together with its local unit, forms `g(z) = (z - a)^s h(z)` and checks on
/// seeded points of `K`:
/// (i) `g = 0` on `{|z - a| <= sigma} ∩ K`,
/// (ii) `|(z - a)^s - g| <= eta`,
/// (iii) `|(z - x)^s - g| <= s sigma + eta`.
/// An extra entry records the triangle term `|(z - x)^s - (z - a)^s|` against
/// `s 2^(s-1) |x - a|`, the Lipschitz constant of `c -> (z - c)^s` over
/// pairs of points of the closed unit disc.
pub fn check_witness(cheese: &Cheese, w: &WitnessSpec, spec: &SampleSpec) -> Result<Certificate> {
    if !cheese.contains(w.x) {
        return Err(Error::NotInK {
            re: w.x.re,
            im: w.x.im,
        });
    }
    let unit = cheese.witness_unit(w.x, w.level)?;
    let a = unit.center();
    let sigma = unit.sigma();
    let eta = unit.eta();
    let s = w.s as i32;
    let mut cert = Certificate::new(format!(
        "witness x={}{:+}i level={} s={} a={}{:+}i sigma={sigma:e} eta={eta}",
        w.x.re, w.x.im, w.level, w.s, a.re, a.im
    ));
    cert.push(Entry::new(
        "x-in-covering-disc",
        "|x - a| < sigma_n",
        (w.x - a).norm(),
        Relation::Below,
        sigma,
    ));

    // K with this unit's discs removed as well (they belong to K's construction)
    let in_k = |p: Point| {
        cheese.outer().signed_distance(p) <= 0.0
            && cheese.clearance(p) >= spec.margin
            && unit.clearance(p) >= spec.margin
    };
    let n = spec.count.max(4);
    let dead_spec = spec
        .substream(11)
        .with_count(n / 4)
        .with_region(Region::disc(a, sigma));
    let near_spec = spec
        .substream(12)
        .with_count(n / 4)
        .with_region(Region::annulus(a, sigma, unit.near_radius().min(2.0)));
    let wide_spec = spec
        .substream(13)
        .with_count(n - 2 * (n / 4))
        .with_region(Region::disc(Point::new(0.0, 0.0), 1.0));

    let mut dead_max = Extremum::max();
    let mut ii = Extremum::max();
    let mut iii = Extremum::max();
    let mut tri = Extremum::max();
    let mut unresolved = 0usize;
    let mut strata = Vec::new();
    for (k, st) in [dead_spec, near_spec, wide_spec].iter().enumerate() {
        let pts = match sample_region(st, in_k) {
            Ok(p) => p,
            // the covering disc may poke out of the unit disc by less than 1e-4 of its area
            Err(Error::RejectionRate { .. }) if k < 2 => continue,
            Err(e) => return Err(e),
        };
        strata.push(*st);
        let vals = par_eval(&pts, |z| unit.eval_h(z));
        for (z, v) in pts.iter().zip(vals) {
            let za = (*z - a).powi(s);
            let zx = (*z - w.x).powi(s);
            match v {
                Ok(e) if e.error_bound.is_finite() => {
                    let g = za * e.value;
                    let g_err = za.norm() * e.error_bound;
                    if (*z - a).norm() <= sigma {
                        dead_max = dead_max.take_max(g.norm() + g_err, *z);
                    }
                    ii = ii.take_max(za.norm() * (e.value - 1.0).norm() + g_err, *z);
                    iii = iii.take_max((zx - g).norm() + g_err, *z);
                }
                _ => unresolved += 1,
            }
            tri = tri.take_max((zx - za).norm(), *z);
        }
    }
    let meta = |e: &Extremum| {
        let mut m = SampleMeta::new(&spec.with_count(n))
            .at(e.at)
            .unresolved(unresolved);
        m.region = Region::disc(Point::new(0.0, 0.0), 1.0);
        m
    };
    let dead_val = if dead_max.at.is_some() {
        dead_max.value
    } else {
        0.0
    };
    cert.push(
        Entry::new(
            "vanishes-near-x",
            "g = 0 on the covering disc ∩ K",
            dead_val,
            Relation::Equal,
            0.0,
        )
        .with_samples(meta(&dead_max)),
    );
    cert.push(
        Entry::new(
            "unit-approx",
            "||(z-a)^s - g||_K < eta_n",
            ii.value,
            Relation::AtMost,
            eta,
        )
        .with_samples(meta(&ii))
        .fail_if(
            unresolved > 0,
            "some samples had no usable truncation bound",
        ),
    );
    cert.push(
        Entry::new(
            "witness-chain",
            "||(z-x)^s - g||_K < m sigma_n + eta_n",
            iii.value,
            Relation::AtMost,
            w.lipschitz_bound * sigma + eta,
        )
        .with_samples(meta(&iii))
        .with_note(
            "checked for this one (x, level) pair on sampled points of K; \
             the closure of the ideals is cited, not computed",
        )
        .fail_if(
            unresolved > 0,
            "some samples had no usable truncation bound",
        ),
    );
    let lip = f64::from(w.s) * 2f64.powi(s - 1);
    cert.push(
        Entry::new(
            "triangle-term",
            "|(z-x)^s - (z-a)^s| <= s 2^(s-1) |x-a|",
            tri.value,
            Relation::AtMost,
            lip * (w.x - a).norm() * (1.0 + 1e-12),
        )
        .with_samples(meta(&tri))
        .with_note(format!("s 2^(s-1) = {lip}")),
    );
    Ok(cert)
}

/// Budget half of the nontriviality criterion: the certified radius sum of
/// the cheese must be below both `r` and 1. The conclusion `R(K) != C(K)` is
/// a cited result, not something computed here.
pub fn stout_check(cheese: &Cheese, r: f64) -> Certificate {
    let bound = cheese.total_radius_bound();
    let mut cert = Certificate::new(format!("radius budget against r = {r}"));
    cert.push(
        Entry::new(
            "budget-below-r",
            "sum r(D_k) < r",
            bound,
            Relation::Below,
            r,
        )
        .with_note("certified upper bound on the sum of all deleted-disc radii"),
    );
    cert.push(
        Entry::new(
            "budget-below-one",
            "sum r(D_k) < 1",
            bound,
            Relation::Below,
            1.0,
        )
        .with_note("cited consequence when this holds: R(K) != C(K); not computed"),
    );
    cert
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AreaReport {
    /// `pi (1 - B^2)` for a certified radius bound `B < 1`, else 0.
    pub lower_bound: f64,
    pub estimate: f64,
    /// 95% normal-approximation half-width of `estimate`.
    pub half_width: f64,
    pub samples: usize,
    pub seed: u64,
}

/// Analytic lower bound on the area of `K` and a Monte-Carlo estimate over
/// the outer disc (`spec.region` is ignored).
pub fn area_report(cheese: &Cheese, spec: &SampleSpec) -> Result<AreaReport> {
    let b = cheese.total_radius_bound();
    let outer = cheese.outer();
    let outer_area = PI * outer.radius * outer.radius;
    let lower_bound = if b < 1.0 {
        outer_area * (1.0 - b * b)
    } else {
        0.0
    };
    let pts = sample_region(
        &spec.with_region(Region::disc(outer.center, outer.radius)),
        |_| true,
    )?;
    let hits = par_eval(&pts, |p| cheese.contains(p))
        .into_iter()
        .filter(|&h| h)
        .count();
    let n = pts.len() as f64;
    let p = hits as f64 / n;
    Ok(AreaReport {
        lower_bound,
        estimate: outer_area * p,
        half_width: 1.96 * outer_area * (p * (1.0 - p) / n).sqrt(),
        samples: pts.len(),
        seed: spec.seed,
    })
}
