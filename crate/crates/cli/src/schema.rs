//! JSON cheese documents, schema version "1".
//!
//! Plan levels are stored in the log domain (`log_eps`, `log_sigma`). Units
//! placed on a level whose whole covering was materialized are not listed;
//! import regenerates them from the level record. Every other unit is listed
//! with its rings and is rebuilt from `(eps, eta, a)` on import, after which
//! the stored rings must match the rebuilt ones.

use std::sync::Arc;

use fromage_core::cheese::covering_units;
use fromage_core::{
    build_family, Cheese, CheesePlan, Constants, Disc, Interval, KornerParams, LocalUnit,
    PlacedUnit, PlanLevel, Point, UnitOrigin,
};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, thiserror::Error)]
pub enum SchemaError {
    #[error("malformed cheese JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported schema version {found:?} (expected {SCHEMA_VERSION:?})")]
    Version { found: String },
    #[error("inconsistent cheese document: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Core(#[from] fromage_core::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscRecord {
    pub cx: f64,
    pub cy: f64,
    pub r: f64,
}

impl From<Disc> for DiscRecord {
    fn from(d: Disc) -> Self {
        DiscRecord {
            cx: d.center.re,
            cy: d.center.im,
            r: d.radius,
        }
    }
}

impl DiscRecord {
    fn to_disc(self) -> Result<Disc, SchemaError> {
        Ok(Disc::new(Point::new(self.cx, self.cy), self.r)?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigRecord {
    pub alpha: f64,
    pub kappa: f64,
    pub c0: Interval,
    pub c: f64,
    pub c1: f64,
}

impl ConfigRecord {
    pub fn new(consts: &Constants, kappa: f64) -> Self {
        ConfigRecord {
            alpha: consts.alpha,
            kappa,
            c0: consts.c0,
            c: consts.c,
            c1: consts.c1,
        }
    }

    pub fn constants(&self) -> Result<Constants, SchemaError> {
        let consts = Constants::new(self.c0, self.alpha)?;
        if consts.c != self.c || consts.c1 != self.c1 {
            return Err(SchemaError::Inconsistent(
                "C and C1 do not follow from the C0 enclosure".into(),
            ));
        }
        Ok(consts)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanRecord {
    pub target: Option<f64>,
    pub kappa: f64,
    pub tail_bound: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelRecord {
    pub plan: usize,
    pub n: u32,
    pub log_eps: f64,
    pub log_sigma: f64,
    pub eta: f64,
    pub budget: f64,
    pub materialized: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub re: f64,
    pub im: f64,
}

impl From<Point> for PointRecord {
    fn from(p: Point) -> Self {
        PointRecord { re: p.re, im: p.im }
    }
}

impl From<PointRecord> for Point {
    fn from(p: PointRecord) -> Self {
        Point::new(p.re, p.im)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RingRecord {
    pub n: u32,
    #[serde(rename = "N")]
    pub count: u64,
    pub circle_radius: f64,
    pub rho: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitRecord {
    pub a: PointRecord,
    pub eps: f64,
    pub eta: f64,
    pub sigma: f64,
    pub kappa: f64,
    /// Plan level the unit covers; `None` for a free-standing unit.
    pub level: Option<UnitOrigin>,
    pub rings: Vec<RingRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheeseDoc {
    pub version: String,
    pub config: ConfigRecord,
    pub outer: DiscRecord,
    pub plans: Vec<PlanRecord>,
    pub levels: Vec<LevelRecord>,
    pub units: Vec<UnitRecord>,
    pub extra_discs: Vec<DiscRecord>,
    pub total_radius_bound: f64,
}

fn unit_record(p: &PlacedUnit) -> UnitRecord {
    let u = &p.unit;
    UnitRecord {
        a: u.center().into(),
        eps: u.eps(),
        eta: u.eta(),
        sigma: u.sigma(),
        kappa: u.family().params.kappa,
        level: p.origin,
        rings: u
            .family()
            .rings
            .iter()
            .zip(u.rings())
            .map(|(pr, r)| RingRecord {
                n: pr.n,
                count: r.count,
                circle_radius: r.circle_radius,
                rho: r.rho,
            })
            .collect(),
    }
}

/// Document for `cheese`; `fallback` supplies the configuration echo when
/// the cheese carries no plan.
pub fn export(cheese: &Cheese, fallback: &Constants, kappa: f64) -> CheeseDoc {
    let (consts, kappa) = cheese
        .plans()
        .first()
        .map(|p| (p.consts, p.kappa))
        .or_else(|| {
            cheese
                .units()
                .first()
                .map(|u| (*u.unit.constants(), u.unit.family().params.kappa))
        })
        .unwrap_or((*fallback, kappa));
    let levels = cheese
        .plans()
        .iter()
        .enumerate()
        .flat_map(|(i, p)| {
            p.levels.iter().map(move |l| LevelRecord {
                plan: i,
                n: l.n,
                log_eps: l.log_eps,
                log_sigma: l.log_sigma,
                eta: l.eta,
                budget: l.budget,
                materialized: l.materialized,
            })
        })
        .collect();
    let regenerated = |p: &PlacedUnit| {
        p.origin.is_some_and(|o| {
            cheese.plans()[o.plan]
                .level(o.n)
                .is_some_and(|l| l.materialized)
        })
    };
    CheeseDoc {
        version: SCHEMA_VERSION.to_string(),
        config: ConfigRecord::new(&consts, kappa),
        outer: cheese.outer().into(),
        plans: cheese
            .plans()
            .iter()
            .map(|p| PlanRecord {
                target: p.target,
                kappa: p.kappa,
                tail_bound: p.tail_bound,
            })
            .collect(),
        levels,
        units: cheese
            .units()
            .iter()
            .filter(|p| !regenerated(p))
            .map(unit_record)
            .collect(),
        extra_discs: cheese.extra_discs().iter().map(|&d| d.into()).collect(),
        total_radius_bound: cheese.total_radius_bound(),
    }
}

pub fn to_json(doc: &CheeseDoc) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("cheese documents serialize");
    s.push('\n');
    s
}

/// Parse and check the version before deserializing the rest.
pub fn parse(text: &str) -> Result<CheeseDoc, SchemaError> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    match value.get("version") {
        Some(serde_json::Value::String(v)) if v == SCHEMA_VERSION => {}
        Some(v) => {
            return Err(SchemaError::Version {
                found: v.to_string(),
            })
        }
        None => {
            return Err(SchemaError::Version {
                found: "<missing>".into(),
            })
        }
    }
    Ok(serde_json::from_value(value)?)
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs())
}

/// Rebuild the cheese a document describes, checking every derived value.
pub fn import(doc: &CheeseDoc) -> Result<Cheese, SchemaError> {
    if doc.version != SCHEMA_VERSION {
        return Err(SchemaError::Version {
            found: doc.version.clone(),
        });
    }
    let consts = doc.config.constants()?;
    let bad = |msg: String| SchemaError::Inconsistent(msg);

    let mut plans = Vec::with_capacity(doc.plans.len());
    for (i, p) in doc.plans.iter().enumerate() {
        let mut levels = Vec::new();
        for l in doc.levels.iter().filter(|l| l.plan == i) {
            let mut lv = PlanLevel::new(l.n, l.log_eps, l.eta, &consts);
            if !close(lv.log_sigma, l.log_sigma, 1e-12) || !close(lv.budget, l.budget, 1e-12) {
                return Err(bad(format!(
                    "plan {i} level {}: sigma or budget mismatch",
                    l.n
                )));
            }
            lv.materialized = l.materialized;
            levels.push(lv);
        }
        if !(p.tail_bound >= 0.0) {
            return Err(bad(format!("plan {i}: negative tail bound")));
        }
        plans.push(CheesePlan {
            target: p.target,
            consts,
            kappa: p.kappa,
            levels,
            tail_bound: p.tail_bound,
        });
    }
    if let Some(l) = doc.levels.iter().find(|l| l.plan >= plans.len()) {
        return Err(bad(format!(
            "level {} refers to missing plan {}",
            l.n, l.plan
        )));
    }

    let mut units = Vec::new();
    for (i, plan) in plans.iter().enumerate() {
        for lv in plan.levels.iter().filter(|l| l.materialized) {
            units.extend(covering_units(plan, i, lv.n)?);
        }
    }
    for (k, u) in doc.units.iter().enumerate() {
        let Some(last) = u.rings.last() else {
            return Err(bad(format!("unit {k} has no rings")));
        };
        if let Some(o) = u.level {
            let lv = plans
                .get(o.plan)
                .and_then(|p| p.level(o.n))
                .ok_or_else(|| bad(format!("unit {k} refers to missing level {o:?}")))?;
            if !close(lv.eps(), u.eps, 1e-12) || lv.eta != u.eta {
                return Err(bad(format!("unit {k} disagrees with its level")));
            }
        }
        let params = KornerParams::new(u.eps)
            .with_alpha(consts.alpha)
            .with_kappa(u.kappa)
            .with_n_max(last.n);
        let fam = Arc::new(build_family(params)?);
        let unit = LocalUnit::from_family(fam, u.eta, u.a.into(), &consts)?;
        if unit_record(&PlacedUnit {
            unit: unit.clone(),
            origin: u.level,
        }) != *u
        {
            return Err(bad(format!(
                "unit {k}: stored rings differ from the rebuilt unit"
            )));
        }
        units.push(PlacedUnit {
            unit,
            origin: u.level,
        });
    }
    let extra = doc
        .extra_discs
        .iter()
        .map(|d| d.to_disc())
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Cheese::from_parts(
        doc.outer.to_disc()?,
        plans,
        units,
        extra,
    ))
}

pub fn import_str(text: &str) -> Result<Cheese, SchemaError> {
    import(&parse(text)?)
}
