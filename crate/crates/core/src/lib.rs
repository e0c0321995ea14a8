//! Polynomial multiplication back ends for lattice-based post-quantum
//! schemes, and the rule-based policy that picks between them.
//!
//! The crate is `no_std` (it needs `alloc`). Threads, load generation,
//! benchmarking and file formats live in the `pqsco` companion crate.
#![no_std]

extern crate alloc;

pub mod error;
pub mod multipliers;
pub mod plan;
pub mod policy;
pub mod poly;
pub mod predict;
pub mod record;

pub use error::{Error, Result};
pub use multipliers::{
    evaluate_parts, interpolate, karatsuba_mul, multiply, multiply_with, recompose, split, toomcook_mul, EvalScheme,
    Fanout, Inline, SubJob, SubResult,
};
pub use plan::{Method, MethodPlan, DEFAULT_BASE_CUTOFF};
pub use policy::{
    calibrate, select_method, DegreeBand, LoadSmoother, Rule, RuleTable, Selector, SystemState, Thresholds, TimeModel,
};
pub use poly::{schoolbook_mul, OpCounter, Polynomial};
pub use predict::{predicted_mult_count, recursion_depth};
pub use record::BenchmarkRecord;
