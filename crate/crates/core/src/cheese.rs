//! Local units, cheese plans and their assembly into a Swiss cheese.
//!
//! A local unit at `a` is `h(z) = F(sigma / (z - a))`: the pole rings of a
//! Körner family inverted through `z -> sigma / z` and translated to `a`. It
//! vanishes on `|z - a| <= sigma` and is close to 1 far from `a`.
//!
//! A plan fixes, per level `n`, the parameters `eta_n = 1/n` and `eps_n`
//! chosen so that the level's covering (`M_n <= 9 / sigma_n^2` discs of
//! radius `sigma_n`, each carrying one unit of budget `< 2 eps_n sigma_n`)
//! removes a total radius of at most `18 eps_n / sigma_n = r 2^-n`.
//! `eps_n` underflows doubles at once, so plans live in the log domain and
//! only moderate levels are ever materialized.

use std::collections::HashMap;
use std::f64::consts::{LN_2, SQRT_2};
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{cover_unit_disc, min_distance, CenterGrid, Disc, DiscRing, Point};
use crate::korner::{build_family, Constants, EvalStatus, FEval, KornerFamily, KornerParams};

const EPS: f64 = f64::EPSILON;

/// Default cap on the number of covering discs a demonstration may build.
pub const DEFAULT_MAX_DISCS: u64 = 100_000;

/// Levels with a smaller `sigma` are never materialized.
pub const MIN_SIGMA: f64 = 1e-6;

fn check_unit_params(eps: f64, eta: f64, consts: &Constants) -> Result<()> {
    if !(eps > 0.0 && eps < consts.alpha) {
        return Err(Error::InvalidParams(format!(
            "eps = {eps} must lie in (0, alpha = {})",
            consts.alpha
        )));
    }
    if !(eta > 0.0 && eta < consts.eta_max()) {
        return Err(Error::InvalidParams(format!(
            "eta = {eta} must lie in (0, 1/(4C) = {})",
            consts.eta_max()
        )));
    }
    Ok(())
}

/// `ln sigma(eps, eta)` from `ln eps`; valid far below the double range.
pub fn log_sigma(log_eps: f64, eta: f64, consts: &Constants) -> f64 {
    -LN_2 / 5.0 + consts.c.ln() - consts.c1.ln() / 5.0 + 1.2 * eta.ln() + 0.8 * log_eps
}

/// `sigma = 2^(-1/5) C C1^(-1/5) eta^(6/5) eps^(4/5)`.
///
/// This is the radius for which `(sigma / (C eta))^5 * 2 C1 / eps^4 = eta`.
pub fn sigma_of(eps: f64, eta: f64, consts: &Constants) -> Result<f64> {
    check_unit_params(eps, eta, consts)?;
    Ok(2f64.powf(-0.2) * consts.c * consts.c1.powf(-0.2) * eta.powf(1.2) * eps.powf(0.8))
}

/// `h(z) = F(sigma / (z - a))` with its deleted discs.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalUnit {
    eps: f64,
    eta: f64,
    sigma: f64,
    center: Point,
    consts: Constants,
    family: Arc<KornerFamily>,
    /// Inverted, translated pole rings, one per materialized level of `family`.
    rings: Vec<DiscRing>,
    radius_budget: f64,
    shell: (f64, f64),
}

/// Unit with the default family parameters for `eps` (`kappa = 1`).
pub fn make_local_unit(eps: f64, eta: f64, a: Point, consts: &Constants) -> Result<LocalUnit> {
    check_unit_params(eps, eta, consts)?;
    let family = build_family(KornerParams::new(eps).with_alpha(consts.alpha))?;
    LocalUnit::from_family(Arc::new(family), eta, a, consts)
}

impl LocalUnit {
    /// Unit at `a` sharing an already built family.
    ///
    /// `a` may sit slightly outside the closed unit disc (by at most `sigma`)
    /// so that every cell of a covering grid that meets the disc gets a unit.
    pub fn from_family(
        family: Arc<KornerFamily>,
        eta: f64,
        a: Point,
        consts: &Constants,
    ) -> Result<LocalUnit> {
        let eps = family.eps();
        let sigma = sigma_of(eps, eta, consts)?;
        if !(a.re.is_finite() && a.im.is_finite()) || a.norm() > 1.0 + sigma {
            return Err(Error::InvalidParams(format!(
                "unit center {a} lies outside the closed unit disc"
            )));
        }
        let rings = family
            .rings
            .iter()
            .map(|r| Ok(r.ring.invert(sigma)?.translate(a)))
            .collect::<Result<Vec<_>>>()?;
        // rho' = sigma rho / (R^2 - rho^2) and R^2 - rho^2 grows with the level
        let first = &family.rings[0];
        let scale =
            1.0 / (first.circle_radius() * first.circle_radius() - first.rho() * first.rho());
        let radius_budget = sigma * family.radius_budget * scale * (1.0 + 16.0 * EPS);
        let inner = family
            .rings
            .iter()
            .map(|r| sigma / (r.circle_radius() + r.rho()))
            .fold(f64::INFINITY, f64::min);
        let outer = family
            .rings
            .iter()
            .map(|r| sigma / (r.circle_radius() - r.rho()))
            .fold(0.0, f64::max);
        Ok(LocalUnit {
            eps,
            eta,
            sigma,
            center: a,
            consts: *consts,
            family,
            rings,
            radius_budget,
            shell: (inner, outer),
        })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn center(&self) -> Point {
        self.center
    }

    pub fn constants(&self) -> &Constants {
        &self.consts
    }

    pub fn family(&self) -> &KornerFamily {
        &self.family
    }

    pub fn family_arc(&self) -> &Arc<KornerFamily> {
        &self.family
    }

    /// Inverted pole rings, in the order of `family().rings`.
    pub fn rings(&self) -> &[DiscRing] {
        &self.rings
    }

    /// Certified bound on the sum of all deleted-disc radii of the unit.
    pub fn radius_budget(&self) -> f64 {
        self.radius_budget
    }

    /// Radii about `a` of the annulus holding every materialized deleted disc.
    pub fn shell(&self) -> (f64, f64) {
        self.shell
    }

    /// `sigma / (C eta)`: beyond this distance from `a`, `|h - 1| < eta / 32`.
    pub fn near_radius(&self) -> f64 {
        self.sigma / (self.consts.c * self.eta)
    }

    /// Signed distance from `p` to the nearest deleted disc of the unit.
    pub fn clearance(&self, p: Point) -> f64 {
        let r = (p - self.center).norm();
        if r < self.shell.0 {
            return self.shell.0 - r;
        }
        let mut best = f64::INFINITY;
        for ring in &self.rings {
            let lower = (r - ring.circle_radius).abs() - ring.rho;
            if lower < best {
                best = best.min(ring.signed_distance(p));
            }
        }
        best
    }

    /// `h(z)`; exactly 0 with zero error on `|z - a| <= sigma`.
    pub fn eval_h(&self, z: Point) -> Result<FEval> {
        let u = z - self.center;
        if u.norm() <= self.sigma {
            return Ok(FEval {
                value: Complex64::new(0.0, 0.0),
                error_bound: 0.0,
                log_abs: f64::NEG_INFINITY,
                status: EvalStatus::Collapsed,
            });
        }
        if self.clearance(z) < 0.0 {
            return Err(Error::InsideDeletedDisc { re: z.re, im: z.im });
        }
        let w = Complex64::new(self.sigma, 0.0) / u;
        self.family.eval(w).map_err(|e| match e {
            Error::InsideDeletedDisc { .. } => Error::InsideDeletedDisc { re: z.re, im: z.im },
            other => other,
        })
    }
}

/// One level of a plan, in the log domain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanLevel {
    pub n: u32,
    pub eta: f64,
    pub log_eps: f64,
    pub log_sigma: f64,
    /// Certified bound `>= 18 eps / sigma` on the level's removed radius.
    pub budget: f64,
    /// Every covering disc of the level carries a materialized unit.
    pub materialized: bool,
}

impl PlanLevel {
    pub fn new(n: u32, log_eps: f64, eta: f64, consts: &Constants) -> Self {
        let log_sigma = log_sigma(log_eps, eta, consts);
        PlanLevel {
            n,
            eta,
            log_eps,
            log_sigma,
            budget: (18f64.ln() + log_eps - log_sigma).exp() * (1.0 + 8.0 * EPS),
            materialized: false,
        }
    }

    pub fn eps(&self) -> f64 {
        self.log_eps.exp()
    }

    pub fn sigma(&self) -> f64 {
        self.log_sigma.exp()
    }

    /// Whether units of this level can be built in double precision.
    pub fn materializable(&self, consts: &Constants) -> bool {
        self.log_sigma >= MIN_SIGMA.ln()
            && check_unit_params(self.eps(), self.eta, consts).is_ok()
            && build_family(KornerParams::new(self.eps()).with_alpha(consts.alpha)).is_ok()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheesePlan {
    /// The radius budget `r` the plan was built for; `None` for a
    /// demonstration plan.
    pub target: Option<f64>,
    pub consts: Constants,
    pub kappa: f64,
    pub levels: Vec<PlanLevel>,
    /// Bound on the radius removed by all levels past the last listed one.
    pub tail_bound: f64,
}

/// `ln eps_n` with `18 eps_n / sigma_n = r 2^-n` at `eta_n = 1/n`.
pub fn log_eps_schedule(r: f64, n: u32, consts: &Constants) -> f64 {
    let nf = f64::from(n);
    5.0 * (r.ln() + consts.c.ln()
        - nf * LN_2
        - 1.2 * nf.ln()
        - 18f64.ln()
        - 0.2 * LN_2
        - 0.2 * consts.c1.ln())
}

/// Plan `levels` levels with a total radius budget below `r`.
pub fn plan_cheese(r: f64, levels: u32, consts: &Constants) -> Result<CheesePlan> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidParams(format!("r = {r} must be positive")));
    }
    if levels == 0 {
        return Err(Error::InvalidParams(
            "a plan needs at least one level".into(),
        ));
    }
    let kappa = 1.0;
    let lv = (1..=levels)
        .map(|n| {
            PlanLevel::new(
                n,
                log_eps_schedule(r, n, consts),
                1.0 / f64::from(n),
                consts,
            )
        })
        .collect();
    // Past the last level each unit removes at most 2 sigma kappa eps^3 / 81
    // (m >= 3/eps and scale <= 2), so level n costs at most
    // r 2^-n kappa eps_n^2 / 81, and eps_n decreases.
    let next = log_eps_schedule(r, levels + 1, consts);
    let log_tail = r.ln() - f64::from(levels) * LN_2 + f64::ln(kappa) + 2.0 * next - 81f64.ln();
    let tail_bound = (log_tail.exp() * (1.0 + 8.0 * EPS)).max(f64::MIN_POSITIVE);
    Ok(CheesePlan {
        target: Some(r),
        consts: *consts,
        kappa,
        levels: lv,
        tail_bound,
    })
}

impl CheesePlan {
    /// A single moderate level (labelled `n = 1`) with the given parameters.
    pub fn demonstration(eps: f64, eta: f64, consts: &Constants) -> Result<CheesePlan> {
        check_unit_params(eps, eta, consts)?;
        Ok(CheesePlan {
            target: None,
            consts: *consts,
            kappa: 1.0,
            levels: vec![PlanLevel::new(1, eps.ln(), eta, consts)],
            tail_bound: 0.0,
        })
    }

    pub fn level(&self, n: u32) -> Option<&PlanLevel> {
        self.levels.iter().find(|l| l.n == n)
    }

    /// Certified bound on the radius removed by the whole plan.
    pub fn total_budget(&self) -> f64 {
        let sum: f64 = self.levels.iter().map(|l| l.budget).sum();
        (sum + self.tail_bound) * (1.0 + (self.levels.len() as f64 + 2.0) * EPS)
    }

    /// `18 sum eps_n / sigma_n` over the listed levels (no padding, no tail).
    pub fn level_sum(&self) -> f64 {
        self.levels
            .iter()
            .map(|l| (18f64.ln() + l.log_eps - l.log_sigma).exp())
            .sum()
    }

    fn params(&self, level: &PlanLevel) -> KornerParams {
        KornerParams::new(level.eps())
            .with_alpha(self.consts.alpha)
            .with_kappa(self.kappa)
    }
}

/// A point `x` whose covering disc at plan level `level` is materialized.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessPoint {
    pub x: Point,
    pub level: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub enum InstantiateMode {
    /// Budgets only.
    Symbolic,
    /// Only the covering discs containing the given points.
    Witness(Vec<WitnessPoint>),
    /// The full covering of one moderate level, in addition to the plan's
    /// symbolic levels. Fails when `M = ceil(2/sigma)^2` exceeds `cap`.
    Demonstration { eps: f64, eta: f64, cap: u64 },
}

/// Where a materialized unit comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnitOrigin {
    /// Index into `Cheese::plans`.
    pub plan: usize,
    pub n: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlacedUnit {
    pub unit: LocalUnit,
    /// `None` for a free-standing unit, charged `2 eps sigma` on its own.
    pub origin: Option<UnitOrigin>,
}

/// Uniform hash grid over unit centers.
#[derive(Clone, Debug, Default, PartialEq)]
struct UnitIndex {
    cell: f64,
    reach: f64,
    buckets: HashMap<(i64, i64), Vec<usize>>,
}

impl UnitIndex {
    fn build(units: &[PlacedUnit]) -> Self {
        let reach = units.iter().map(|u| u.unit.shell().1).fold(0.0, f64::max);
        if units.is_empty() || !(reach > 0.0) {
            return UnitIndex::default();
        }
        let cell = 2.0 * reach;
        let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (i, u) in units.iter().enumerate() {
            buckets
                .entry(Self::key(cell, u.unit.center()))
                .or_default()
                .push(i);
        }
        UnitIndex {
            cell,
            reach,
            buckets,
        }
    }

    fn key(cell: f64, p: Point) -> (i64, i64) {
        ((p.re / cell).floor() as i64, (p.im / cell).floor() as i64)
    }

    /// Units whose deleted discs may lie within `reach` of `p`.
    fn near(&self, p: Point) -> impl Iterator<Item = usize> + '_ {
        let (i, j) = if self.buckets.is_empty() {
            (0, 0)
        } else {
            Self::key(self.cell, p)
        };
        (-1..=1)
            .flat_map(move |di| (-1..=1).map(move |dj| (i + di, j + dj)))
            .filter_map(move |k| self.buckets.get(&k))
            .flatten()
            .copied()
    }
}

/// The closed outer disc minus the deleted discs of its units and extra discs,
/// together with the budgets of the plans it was built from.
#[derive(Clone, Debug, PartialEq)]
pub struct Cheese {
    outer: Disc,
    plans: Vec<CheesePlan>,
    units: Vec<PlacedUnit>,
    extra_discs: Vec<Disc>,
    index: UnitIndex,
}

impl Default for Cheese {
    fn default() -> Self {
        Cheese::empty()
    }
}

impl Cheese {
    /// The closed unit disc with nothing removed.
    pub fn empty() -> Self {
        Cheese::from_parts(Disc::unit(), Vec::new(), Vec::new(), Vec::new())
    }

    /// An explicit disc list over `outer`.
    pub fn from_discs(outer: Disc, discs: Vec<Disc>) -> Result<Self> {
        for d in discs.iter().chain(std::iter::once(&outer)) {
            Disc::new(d.center, d.radius)?;
        }
        Ok(Cheese::from_parts(outer, Vec::new(), Vec::new(), discs))
    }

    pub fn from_parts(
        outer: Disc,
        plans: Vec<CheesePlan>,
        units: Vec<PlacedUnit>,
        extra_discs: Vec<Disc>,
    ) -> Self {
        let index = UnitIndex::build(&units);
        Cheese {
            outer,
            plans,
            units,
            extra_discs,
            index,
        }
    }

    /// Add a free-standing unit.
    pub fn with_unit(mut self, unit: LocalUnit) -> Self {
        self.units.push(PlacedUnit { unit, origin: None });
        self.index = UnitIndex::build(&self.units);
        self
    }

    pub fn outer(&self) -> Disc {
        self.outer
    }

    pub fn plans(&self) -> &[CheesePlan] {
        &self.plans
    }

    pub fn units(&self) -> &[PlacedUnit] {
        &self.units
    }

    pub fn extra_discs(&self) -> &[Disc] {
        &self.extra_discs
    }

    /// Number of materialized deleted discs (ring members plus extra discs).
    pub fn disc_count(&self) -> u128 {
        let rings: u128 = self
            .units
            .iter()
            .flat_map(|u| u.unit.rings())
            .map(|r| u128::from(r.count))
            .sum();
        rings + self.extra_discs.len() as u128
    }

    /// Lower bound on the signed distance from `p` to the nearest deleted
    /// disc, exact whenever the true value is below the index reach.
    pub fn clearance(&self, p: Point) -> f64 {
        let mut best = min_distance(p, &self.extra_discs);
        if !self.units.is_empty() {
            let mut near = self.index.reach;
            for i in self.index.near(p) {
                near = near.min(self.units[i].unit.clearance(p));
            }
            best = best.min(near);
        }
        best
    }

    /// `p` lies in the outer disc and in no deleted disc.
    pub fn contains(&self, p: Point) -> bool {
        self.outer.signed_distance(p) <= 0.0 && self.clearance(p) >= 0.0
    }

    /// Certified bound on the sum of all deleted-disc radii.
    ///
    /// Plan levels are charged their level budgets (units placed on a plan
    /// level are covered by it), unmaterialized levels past a plan's end its
    /// tail bound, free units `2 eps sigma` each and extra discs their radii.
    pub fn total_radius_bound(&self) -> f64 {
        let plans: f64 = self.plans.iter().map(CheesePlan::total_budget).sum();
        let free: f64 = self
            .units
            .iter()
            .filter(|u| u.origin.is_none())
            .map(|u| 2.0 * u.unit.eps() * u.unit.sigma())
            .sum();
        let extra: f64 = self.extra_discs.iter().map(|d| d.radius).sum();
        let terms = (self.plans.len() + self.units.len() + self.extra_discs.len()) as f64;
        (plans + free + extra) * (1.0 + (terms + 2.0) * EPS)
    }

    /// The unit of the covering disc at plan level `level` containing `x`,
    /// from the cheese if materialized, otherwise built on the fly.
    pub fn witness_unit(&self, x: Point, level: u32) -> Result<LocalUnit> {
        let (plan_idx, plan, lv) = self
            .plans
            .iter()
            .enumerate()
            .find_map(|(i, p)| p.level(level).map(|l| (i, p, l)))
            .ok_or_else(|| Error::InvalidParams(format!("no plan level {level}")))?;
        let a = covering_grid(lv)?.covering_center(x);
        let origin = Some(UnitOrigin {
            plan: plan_idx,
            n: level,
        });
        if let Some(u) = self
            .units
            .iter()
            .find(|u| u.origin == origin && u.unit.center() == a)
        {
            return Ok(u.unit.clone());
        }
        let fam = Arc::new(build_family(plan.params(lv))?);
        LocalUnit::from_family(fam, lv.eta, a, &plan.consts)
    }
}

fn covering_grid(lv: &PlanLevel) -> Result<CenterGrid> {
    if lv.log_sigma < MIN_SIGMA.ln() {
        return Err(Error::NotMaterializable {
            n: lv.n,
            log_sigma: lv.log_sigma,
        });
    }
    Ok(cover_unit_disc(lv.sigma()))
}

/// The centers of grid cells that meet the closed unit disc.
fn meeting_centers(grid: &CenterGrid) -> Vec<Point> {
    let slack = grid.spacing() / SQRT_2;
    grid.centers().filter(|a| a.norm() <= 1.0 + slack).collect()
}

/// Units on every covering disc of `plan`'s level `n` that meets the closed
/// unit disc, tagged with origin `(plan_index, n)`. No cap is applied.
pub fn covering_units(plan: &CheesePlan, plan_index: usize, n: u32) -> Result<Vec<PlacedUnit>> {
    let lv = plan
        .level(n)
        .ok_or_else(|| Error::InvalidParams(format!("no plan level {n}")))?;
    if !lv.materializable(&plan.consts) {
        return Err(Error::NotMaterializable {
            n,
            log_sigma: lv.log_sigma,
        });
    }
    let grid = covering_grid(lv)?;
    let fam = Arc::new(build_family(plan.params(lv))?);
    meeting_centers(&grid)
        .par_iter()
        .map(|&a| {
            Ok(PlacedUnit {
                unit: LocalUnit::from_family(fam.clone(), lv.eta, a, &plan.consts)?,
                origin: Some(UnitOrigin {
                    plan: plan_index,
                    n,
                }),
            })
        })
        .collect()
}

/// Build a cheese from `plan`.
pub fn instantiate(plan: &CheesePlan, mode: &InstantiateMode) -> Result<Cheese> {
    match mode {
        InstantiateMode::Symbolic => Ok(Cheese::from_parts(
            Disc::unit(),
            vec![plan.clone()],
            Vec::new(),
            Vec::new(),
        )),
        InstantiateMode::Witness(points) => {
            let mut wanted: Vec<(u32, Point)> = Vec::new();
            for w in points {
                if !(w.x.norm() <= 1.0) {
                    return Err(Error::InvalidParams(format!(
                        "witness point {} lies outside the closed unit disc",
                        w.x
                    )));
                }
                let lv = plan
                    .level(w.level)
                    .ok_or_else(|| Error::InvalidParams(format!("no plan level {}", w.level)))?;
                if !lv.materializable(&plan.consts) {
                    return Err(Error::NotMaterializable {
                        n: lv.n,
                        log_sigma: lv.log_sigma,
                    });
                }
                let a = covering_grid(lv)?.covering_center(w.x);
                if !wanted.contains(&(w.level, a)) {
                    wanted.push((w.level, a));
                }
            }
            let mut families: HashMap<u32, Arc<KornerFamily>> = HashMap::new();
            for &(n, _) in &wanted {
                if let std::collections::hash_map::Entry::Vacant(e) = families.entry(n) {
                    let lv = plan.level(n).expect("level checked above");
                    e.insert(Arc::new(build_family(plan.params(lv))?));
                }
            }
            let units = wanted
                .par_iter()
                .map(|&(n, a)| {
                    let lv = plan.level(n).expect("level checked above");
                    Ok(PlacedUnit {
                        unit: LocalUnit::from_family(
                            families[&n].clone(),
                            lv.eta,
                            a,
                            &plan.consts,
                        )?,
                        origin: Some(UnitOrigin { plan: 0, n }),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Cheese::from_parts(
                Disc::unit(),
                vec![plan.clone()],
                units,
                Vec::new(),
            ))
        }
        InstantiateMode::Demonstration { eps, eta, cap } => {
            let mut demo = CheesePlan::demonstration(*eps, *eta, &plan.consts)?;
            demo.kappa = plan.kappa;
            let lv = demo.levels[0];
            let sigma = sigma_of(*eps, *eta, &plan.consts)?;
            let grid = cover_unit_disc(sigma);
            if grid.count() > u128::from(*cap) {
                return Err(Error::CapExceeded {
                    count: grid.count(),
                    cap: *cap,
                });
            }
            let units = covering_units(&demo, 1, lv.n)?;
            demo.levels[0].materialized = true;
            Ok(Cheese::from_parts(
                Disc::unit(),
                vec![plan.clone(), demo],
                units,
                Vec::new(),
            ))
        }
    }
}

/// Union of the deleted discs of `a` and `b` over their common outer disc.
pub fn merge_cheeses(a: &Cheese, b: &Cheese) -> Result<Cheese> {
    if a.outer != b.outer {
        return Err(Error::OuterMismatch);
    }
    let shift = a.plans.len();
    let mut plans = a.plans.clone();
    plans.extend(b.plans.iter().cloned());
    let mut units = a.units.clone();
    units.extend(b.units.iter().map(|u| PlacedUnit {
        unit: u.unit.clone(),
        origin: u.origin.map(|o| UnitOrigin {
            plan: o.plan + shift,
            n: o.n,
        }),
    }));
    let mut extra = a.extra_discs.clone();
    extra.extend_from_slice(&b.extra_discs);
    Ok(Cheese::from_parts(a.outer, plans, units, extra))
}

/// See [`Cheese::total_radius_bound`].
pub fn total_radius_bound(c: &Cheese) -> f64 {
    c.total_radius_bound()
}
