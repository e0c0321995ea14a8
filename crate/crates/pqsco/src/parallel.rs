//! Parallel execution of the pointwise subproducts of the recursive multipliers.
//!
//! Subproduct `i` of a dispatched level always runs on worker `i mod workers`.
//! Workers come from a persistent pool per worker count, so repeated calls
//! do not pay thread start-up. Results and counters are merged in subproduct
//! order, which makes the output independent of scheduling.

use std::cell::Cell;
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};
use std::thread;

use pqsco_core::{multiply, multiply_with, Fanout, MethodPlan, OpCounter, Polynomial, SubJob, SubResult};
use rayon::{ThreadPool, ThreadPoolBuilder};

use crate::error::Result;

/// How many workers run the subproducts, and down to which recursion level.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ParallelConfig {
    pub workers: u32,
    /// Levels `0..parallel_depth` are dispatched to workers; deeper levels
    /// run sequentially inside each task.
    pub parallel_depth: u32,
}

impl ParallelConfig {
    pub fn new(workers: u32) -> Self {
        Self {
            workers,
            parallel_depth: 1,
        }
    }

    pub fn with_depth(self, parallel_depth: u32) -> Self {
        Self { parallel_depth, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.workers == 0 {
            return Err(pqsco_core::Error::InvalidPlan("workers must be at least 1".into()).into());
        }
        Ok(())
    }
}

fn pool(workers: usize) -> pqsco_core::Result<Arc<ThreadPool>> {
    static POOLS: OnceLock<Mutex<HashMap<usize, Arc<ThreadPool>>>> = OnceLock::new();
    let mut pools = POOLS
        .get_or_init(Default::default)
        .lock()
        .unwrap_or_else(|e| e.into_inner());
    if let Some(p) = pools.get(&workers) {
        return Ok(p.clone());
    }
    let p = ThreadPoolBuilder::new()
        .num_threads(workers)
        .thread_name(move |i| format!("pqsco-mul-{workers}-{i}"))
        .build()
        .map_err(|e| pqsco_core::Error::Resource(format!("cannot start {workers} workers: {e}")))?;
    let p = Arc::new(p);
    pools.insert(workers, p.clone());
    Ok(p)
}

type Work<'a> = &'a (dyn Fn(SubJob) -> pqsco_core::Result<SubResult> + Sync);

/// [`Fanout`] over a fixed number of worker threads.
pub struct ThreadFanout {
    workers: usize,
    pool: Arc<ThreadPool>,
}

impl ThreadFanout {
    pub fn new(workers: u32) -> pqsco_core::Result<Self> {
        let workers = workers.max(1) as usize;
        Ok(Self {
            workers,
            pool: pool(workers)?,
        })
    }

    /// Nested levels run on scoped threads: the pool is still busy with the
    /// outer level, so broadcasting to it again would deadlock.
    fn scoped(&self, slots: &[Mutex<Option<SubJob>>], work: Work<'_>) -> pqsco_core::Result<Vec<Bucket>> {
        let workers = self.workers.min(slots.len());
        thread::scope(|s| {
            let mut handles = Vec::with_capacity(workers);
            for w in 0..workers {
                let h = thread::Builder::new()
                    .name(format!("pqsco-mul-nested-{w}"))
                    .spawn_scoped(s, move || run_bucket(slots, w, workers, work))
                    .map_err(|e| pqsco_core::Error::Resource(format!("cannot spawn worker {w}: {e}")))?;
                handles.push(h);
            }
            Ok(handles
                .into_iter()
                .map(|h| h.join().unwrap_or_else(|p| std::panic::resume_unwind(p)))
                .collect())
        })
    }
}

type Bucket = Vec<(usize, pqsco_core::Result<SubResult>)>;

thread_local! {
    /// Set while this thread runs a subproduct.
    static IN_SUBPRODUCT: Cell<bool> = const { Cell::new(false) };
}

fn run_bucket(slots: &[Mutex<Option<SubJob>>], worker: usize, workers: usize, work: Work<'_>) -> Bucket {
    let outer = IN_SUBPRODUCT.replace(true);
    let bucket = (worker..slots.len())
        .step_by(workers)
        .map(|i| {
            let job = slots[i]
                .lock()
                .unwrap_or_else(|e| e.into_inner())
                .take()
                .expect("subproduct taken twice");
            (i, work(job))
        })
        .collect();
    IN_SUBPRODUCT.set(outer);
    bucket
}

impl Fanout for ThreadFanout {
    fn fanout(&self, jobs: Vec<SubJob>, work: Work<'_>) -> pqsco_core::Result<Vec<SubResult>> {
        let n = jobs.len();
        let slots: Vec<Mutex<Option<SubJob>>> = jobs.into_iter().map(|j| Mutex::new(Some(j))).collect();
        let buckets = if IN_SUBPRODUCT.get() {
            self.scoped(&slots, work)?
        } else {
            let workers = self.workers;
            self.pool
                .broadcast(|ctx| run_bucket(&slots, ctx.index(), workers, work))
        };
        let mut results: Vec<Option<pqsco_core::Result<SubResult>>> = (0..n).map(|_| None).collect();
        for (i, r) in buckets.into_iter().flatten() {
            results[i] = Some(r);
        }
        results
            .into_iter()
            .map(|r| r.expect("subproduct not executed"))
            .collect()
    }
}

/// Multiplies with `plan`, running the subproducts of the top
/// `cfg.parallel_depth` levels on `cfg.workers` threads.
///
/// One worker takes exactly the sequential path. The product and the
/// counter totals never depend on the worker count.
pub fn parallel_mul(
    a: &Polynomial,
    b: &Polynomial,
    plan: &MethodPlan,
    cfg: &ParallelConfig,
) -> Result<(Polynomial, OpCounter)> {
    cfg.validate()?;
    let mut counter = OpCounter::new();
    let product = if cfg.workers == 1 {
        multiply(a, b, plan, &mut counter)?
    } else {
        let fanout = ThreadFanout::new(cfg.workers)?;
        multiply_with(a, b, plan, cfg.parallel_depth, &fanout, &mut counter)?
    };
    Ok((product, counter))
}

/// Runs `plan` with its own worker count and the default dispatch depth.
pub fn run_plan(a: &Polynomial, b: &Polynomial, plan: &MethodPlan) -> Result<(Polynomial, OpCounter)> {
    parallel_mul(a, b, plan, &ParallelConfig::new(plan.workers))
}
