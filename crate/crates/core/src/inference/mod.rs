//! Probability estimands, per-dataset estimates, and Rubin's combining rules.

mod estimands;
mod pooling;

pub use estimands::{
    enumerate_estimands, estimate, estimate_all, BivariateCells, Estimand, EstimandClass, EstimandKind, EstimandOptions,
    PointEstimate, VariableOrigin,
};
pub use pooling::{pool, PooledEstimate, DEFAULT_CONFIDENCE};
