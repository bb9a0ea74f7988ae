use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid disc: center and radius must be finite and radius > 0 (got radius {0})")]
    InvalidDisc(f64),

    #[error("origin lies in the closed disc (|center| = {center_norm}, radius = {radius}); z -> sigma/z does not map it to a disc")]
    OriginInsideDisc { center_norm: f64, radius: f64 },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("radius budget {budget:e} is not below eps = {eps} (decrease kappa or increase eps)")]
    BudgetExceeded { budget: f64, eps: f64 },

    #[error("m = {m} exceeds n_max = {n_max}")]
    MExceedsNmax { m: u32, n_max: u32 },

    #[error("level {n} is too deep for double precision (max {max})")]
    LevelTooDeep { n: u32, max: u32 },

    #[error("point {re}+{im}i is a pole of g_{n}")]
    Pole { n: u32, re: f64, im: f64 },

    #[error("point {re}+{im}i lies inside a deleted disc")]
    InsideDeletedDisc { re: f64, im: f64 },

    #[error("point {re}+{im}i is not in K")]
    NotInK { re: f64, im: f64 },

    #[error("covering needs {count} discs, above the materialization cap {cap}; use symbolic or witness mode")]
    CapExceeded { count: u128, cap: u64 },

    #[error("level {n} (log sigma = {log_sigma:.3}) cannot be materialized in double precision")]
    NotMaterializable { n: u32, log_sigma: f64 },

    #[error("outer discs differ; cheeses can only be merged over the same outer disc")]
    OuterMismatch,

    #[error("rejection sampling accepted {accepted} of {attempts} candidates (below 1e-4)")]
    RejectionRate { accepted: u64, attempts: u64 },
}
