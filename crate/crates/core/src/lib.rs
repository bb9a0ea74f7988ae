//! Swiss cheese sets built from Körner's pole-ring products, with
//! reproducible numerical certificates for the inequalities they rest on.
//!
//! - [`geometry`]: discs, inversion through `z -> sigma / z`, covering grids
//!   and implicit rings of equal discs.
//! - [`korner`]: the products `F = prod g_n`, their constants and the
//!   condition checker.
//! - [`cheese`]: local units `F(sigma / (z - a))`, plans with exact radius
//!   budgets, instantiation and merging.
//! - [`certify`]: seeded samplers and the certificates built on them.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certify;
pub mod cheese;
pub mod error;
pub mod geometry;
pub mod korner;

pub use certify::{
    area_report, check_local_unit, check_witness, sample_k, sample_region, stout_check, AreaReport,
    Certificate, Entry, Region, Relation, SampleMeta, SampleSpec, WitnessSpec,
};
pub use cheese::{
    covering_units, instantiate, make_local_unit, merge_cheeses, plan_cheese, sigma_of,
    total_radius_bound, Cheese, CheesePlan, InstantiateMode, LocalUnit, PlacedUnit, PlanLevel,
    UnitOrigin, WitnessPoint, DEFAULT_MAX_DISCS,
};
pub use error::{Error, Result};
pub use geometry::{cover_unit_disc, invert_disc, min_distance, CenterGrid, Disc, DiscRing, Point};
pub use korner::{
    build_family, c0_enclosure, c_constant, check_conditions, eval_f, eval_g, ring_query,
    Constants, EvalStatus, FEval, Interval, KornerFamily, KornerParams, PoleRing,
};
