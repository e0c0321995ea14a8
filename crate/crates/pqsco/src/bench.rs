//! Monte Carlo timing of multiplication plans under synthetic load.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use pqsco_core::{BenchmarkRecord, MethodPlan, Polynomial, DEFAULT_BASE_CUTOFF};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::loadgen::{host_logical_cores, start_load_with_capacity, LoadProfile, DEFAULT_PERIOD_MS};
use crate::parallel::run_plan;

pub const DEFAULT_RUNS: u32 = 10;
pub const DEFAULT_WARMUP_RUNS: u32 = 2;
pub const DEFAULT_MODULUS: u64 = 4096;

#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkSpec {
    /// Operand lengths.
    pub degrees: Vec<usize>,
    pub plans: Vec<MethodPlan>,
    pub load_levels_pct: Vec<u32>,
    pub loaded_workers: u32,
    pub runs: u32,
    pub warmup_runs: u32,
    pub seed: u64,
    pub modulus: Option<u64>,
    pub period_ms: u64,
}

/// Sequential Karatsuba, sequential Toom-3 and Toom-3 on five workers.
pub fn default_plans() -> Vec<MethodPlan> {
    vec![
        MethodPlan::karatsuba(DEFAULT_BASE_CUTOFF),
        MethodPlan::toom(3, DEFAULT_BASE_CUTOFF),
        MethodPlan::toom(3, DEFAULT_BASE_CUTOFF).with_workers(5),
    ]
}

/// 0, 5, ..., 90.
pub fn default_load_sweep() -> Vec<u32> {
    (0..=90).step_by(5).collect()
}

impl Default for BenchmarkSpec {
    fn default() -> Self {
        Self {
            degrees: vec![512],
            plans: default_plans(),
            load_levels_pct: default_load_sweep(),
            loaded_workers: 4,
            runs: DEFAULT_RUNS,
            warmup_runs: DEFAULT_WARMUP_RUNS,
            seed: 1,
            modulus: Some(DEFAULT_MODULUS),
            period_ms: DEFAULT_PERIOD_MS,
        }
    }
}

impl BenchmarkSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidInput(m.into()));
        if self.runs == 0 {
            return bad("runs must be at least 1");
        }
        if self.degrees.is_empty() || self.plans.is_empty() || self.load_levels_pct.is_empty() {
            return bad("degrees, plans and load levels must be non-empty");
        }
        if self.degrees.contains(&0) {
            return bad("operand lengths must be at least 1");
        }
        if let Some(l) = self.load_levels_pct.iter().find(|&&l| l > 100) {
            return Err(Error::InvalidInput(format!("load level {l}% exceeds 100%")));
        }
        for p in &self.plans {
            p.validate()?;
        }
        Ok(())
    }

    pub fn cell_count(&self) -> usize {
        self.degrees.len() * self.load_levels_pct.len() * self.plans.len()
    }
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Deterministic per-run seed. Plans in the same (degree, load) cell share
/// operands so they are compared on identical inputs.
pub fn operand_seed(base: u64, degree_idx: usize, load_idx: usize, run: u32) -> u64 {
    [degree_idx as u64, load_idx as u64, run as u64]
        .iter()
        .fold(splitmix(base), |acc, &v| splitmix(acc ^ v))
}

/// Smallest observable step of the monotonic clock.
pub fn timer_resolution() -> Duration {
    let mut best = Duration::MAX;
    for _ in 0..100 {
        let t0 = Instant::now();
        let mut t1 = Instant::now();
        while t1 == t0 {
            t1 = Instant::now();
        }
        best = best.min(t1 - t0);
    }
    best
}

fn operands(spec: &BenchmarkSpec, len: usize, seed: u64) -> Result<(Polynomial, Polynomial)> {
    let bound = spec.modulus.unwrap_or(DEFAULT_MODULUS);
    Ok((
        Polynomial::random(len, bound, seed, spec.modulus)?,
        Polynomial::random(len, bound, splitmix(seed), spec.modulus)?,
    ))
}

/// Runs the sweep on this host.
pub fn run_benchmark(spec: &BenchmarkSpec) -> Result<Vec<BenchmarkRecord>> {
    run_benchmark_with_capacity(spec, host_logical_cores(), |_| {})
}

/// Runs every (degree, load, plan) cell in that order, starting the load
/// before each cell and stopping it after. Only the multiplication call is
/// timed. `progress` sees each finished cell's records.
pub fn run_benchmark_with_capacity(
    spec: &BenchmarkSpec,
    host_cores: usize,
    mut progress: impl FnMut(&[BenchmarkRecord]),
) -> Result<Vec<BenchmarkRecord>> {
    spec.validate()?;
    let res = timer_resolution();
    if res > Duration::from_micros(1) {
        return Err(Error::Environment(format!(
            "monotonic clock resolution {res:?} is coarser than 1 µs"
        )));
    }
    let mut records = Vec::with_capacity(spec.cell_count() * spec.runs as usize);
    for (di, &degree) in spec.degrees.iter().enumerate() {
        for (li, &load) in spec.load_levels_pct.iter().enumerate() {
            for plan in &spec.plans {
                let profile = LoadProfile {
                    loaded_workers: spec.loaded_workers,
                    target_load_pct: load,
                    period_ms: spec.period_ms,
                };
                let mut handle = start_load_with_capacity(profile, host_cores)?;
                for w in 0..spec.warmup_runs {
                    let (a, b) = operands(spec, degree, operand_seed(spec.seed ^ 0x5741_524D, di, li, w))?;
                    run_plan(&a, &b, plan)?;
                }
                let first = records.len();
                for run in 0..spec.runs {
                    let (a, b) = operands(spec, degree, operand_seed(spec.seed, di, li, run))?;
                    let t0 = Instant::now();
                    let (_, counter) = run_plan(&a, &b, plan)?;
                    let elapsed = t0.elapsed();
                    records.push(BenchmarkRecord {
                        plan: *plan,
                        degree,
                        load_pct: load,
                        run_index: run,
                        elapsed_ns: (elapsed.as_nanos() as u64).max(1),
                        mult_count: counter.fundamental_mults,
                    });
                }
                handle.stop();
                progress(&records[first..]);
            }
        }
    }
    Ok(records)
}

/// Timing statistics of one (plan, degree, load) cell.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellStats {
    pub plan: MethodPlan,
    pub degree: usize,
    pub load_pct: u32,
    pub runs: usize,
    pub mean_ns: f64,
    /// Population standard deviation.
    pub std_ns: f64,
    pub min_ns: u64,
    pub max_ns: u64,
}

/// One row per cell, in order of first appearance.
pub fn aggregate(records: &[BenchmarkRecord]) -> Vec<CellStats> {
    let mut index: HashMap<(MethodPlan, usize, u32), usize> = HashMap::new();
    let mut groups: Vec<Vec<u64>> = Vec::new();
    let mut keys = Vec::new();
    for r in records {
        let key = (r.plan, r.degree, r.load_pct);
        let i = *index.entry(key).or_insert_with(|| {
            keys.push(key);
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[i].push(r.elapsed_ns);
    }
    keys.into_iter()
        .zip(groups)
        .map(|((plan, degree, load_pct), xs)| {
            let n = xs.len() as f64;
            let mean = xs.iter().map(|&x| x as f64).sum::<f64>() / n;
            let var = xs.iter().map(|&x| (x as f64 - mean).powi(2)).sum::<f64>() / n;
            CellStats {
                plan,
                degree,
                load_pct,
                runs: xs.len(),
                mean_ns: mean,
                std_ns: var.sqrt(),
                min_ns: *xs.iter().min().unwrap(),
                max_ns: *xs.iter().max().unwrap(),
            }
        })
        .collect()
}

/// Fixed-width table of [`aggregate`] output in milliseconds.
pub fn format_stats_table(stats: &[CellStats]) -> String {
    let mut out = format!(
        "{:<16} {:>7} {:>6} {:>5} {:>11} {:>10} {:>10} {:>10}\n",
        "plan", "length", "load%", "runs", "mean_ms", "std_ms", "min_ms", "max_ms"
    );
    for s in stats {
        out.push_str(&format!(
            "{:<16} {:>7} {:>6} {:>5} {:>11.4} {:>10.4} {:>10.4} {:>10.4}\n",
            s.plan.label(),
            s.degree,
            s.load_pct,
            s.runs,
            s.mean_ns / 1e6,
            s.std_ns / 1e6,
            s.min_ns as f64 / 1e6,
            s.max_ns as f64 / 1e6
        ));
    }
    out
}
