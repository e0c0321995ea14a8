use serde::{Deserialize, Serialize};

use crate::plan::MethodPlan;

/// One timed multiplication from a benchmark sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BenchmarkRecord {
    pub plan: MethodPlan,
    /// Operand length (number of coefficients).
    pub degree: usize,
    pub load_pct: u32,
    pub run_index: u32,
    pub elapsed_ns: u64,
    pub mult_count: u64,
}
