//! Load-aware method selection.
//!
//! A [`RuleTable`] holds, per operand-length band, the load levels at which
//! parallel Toom-Cook stops beating Karatsuba and stops beating its own
//! sequential variant. [`calibrate`] derives those thresholds from benchmark
//! records; [`select_method`] answers queries against them.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plan::{Method, MethodPlan};
use crate::record::BenchmarkRecord;

pub const RULE_TABLE_VERSION: u32 = 1;
pub const DEFAULT_HYSTERESIS_PCT: f64 = 5.0;
pub const DEFAULT_TIE_MARGIN: f64 = 0.05;

/// Inclusive range of operand lengths.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DegreeBand {
    pub min: usize,
    pub max: usize,
}

impl DegreeBand {
    pub fn new(min: usize, max: usize) -> Self {
        Self { min, max }
    }

    pub fn contains(&self, degree: usize) -> bool {
        (self.min..=self.max).contains(&degree)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Below this load parallel Toom-Cook beats Karatsuba.
    pub parallel_vs_karatsuba_pct: f64,
    /// Below this load parallel Toom-Cook beats sequential Toom-Cook.
    pub parallel_vs_sequential_pct: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidatePlans {
    pub karatsuba: MethodPlan,
    pub toom_sequential: MethodPlan,
    pub toom_parallel: MethodPlan,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    pub degree_band: DegreeBand,
    pub min_cores: u32,
    pub thresholds: Thresholds,
    pub plans: CandidatePlans,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuleTable {
    pub version: u32,
    pub default_plan: MethodPlan,
    pub entries: Vec<Rule>,
}

fn rule_err(path: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::RuleTable {
        path: path.into(),
        reason: reason.into(),
    }
}

fn is_interior(t: f64) -> bool {
    t > 0.0 && t < 100.0
}

impl RuleTable {
    /// Checks every structural invariant, reporting the offending field path.
    pub fn validate(&self) -> Result<()> {
        if self.version != RULE_TABLE_VERSION {
            return Err(rule_err("version", format!("unsupported version {}", self.version)));
        }
        self.default_plan
            .validate()
            .map_err(|e| rule_err("default_plan", format!("{e}")))?;
        if self.default_plan.method != Method::Karatsuba || self.default_plan.workers != 1 {
            return Err(rule_err("default_plan", "must be sequential karatsuba"));
        }
        for (i, rule) in self.entries.iter().enumerate() {
            let at = |field: &str| format!("entries[{i}].{field}");
            let band = rule.degree_band;
            if band.min == 0 || band.min > band.max {
                return Err(rule_err(
                    at("degree_band"),
                    format!("empty or invalid band [{}, {}]", band.min, band.max),
                ));
            }
            if i > 0 {
                let prev = self.entries[i - 1].degree_band;
                if band.min <= prev.max {
                    return Err(rule_err(
                        at("degree_band"),
                        format!(
                            "band [{}, {}] overlaps or precedes band [{}, {}]",
                            band.min, band.max, prev.min, prev.max
                        ),
                    ));
                }
            }
            if rule.min_cores == 0 {
                return Err(rule_err(at("min_cores"), "must be at least 1"));
            }
            let th = rule.thresholds;
            for (name, v) in [
                ("parallel_vs_karatsuba_pct", th.parallel_vs_karatsuba_pct),
                ("parallel_vs_sequential_pct", th.parallel_vs_sequential_pct),
            ] {
                if !(0.0..=100.0).contains(&v) {
                    return Err(rule_err(
                        at(&format!("thresholds.{name}")),
                        format!("{v} is outside [0, 100]"),
                    ));
                }
            }
            if is_interior(th.parallel_vs_karatsuba_pct)
                && is_interior(th.parallel_vs_sequential_pct)
                && th.parallel_vs_karatsuba_pct > th.parallel_vs_sequential_pct
            {
                return Err(rule_err(
                    at("thresholds"),
                    "parallel_vs_karatsuba_pct must not exceed parallel_vs_sequential_pct",
                ));
            }
            let plans = rule.plans;
            for (name, plan, method, parallel) in [
                ("karatsuba", plans.karatsuba, Method::Karatsuba, false),
                ("toom_sequential", plans.toom_sequential, Method::Toom, false),
                ("toom_parallel", plans.toom_parallel, Method::Toom, true),
            ] {
                let path = at(&format!("plans.{name}"));
                plan.validate().map_err(|e| rule_err(path.clone(), format!("{e}")))?;
                if plan.method != method || plan.is_parallel() != parallel {
                    return Err(rule_err(path, format!("unexpected plan {plan}")));
                }
            }
        }
        Ok(())
    }

    pub fn rule_for(&self, degree: usize) -> Option<(usize, &Rule)> {
        self.entries
            .iter()
            .enumerate()
            .find(|(_, r)| r.degree_band.contains(degree))
    }
}

/// What the orchestrator knows about a node when it picks a method.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemState {
    pub degree: usize,
    pub load_pct: f64,
    pub available_cores: u32,
}

/// Picks the plan for `state` using hard thresholds.
///
/// One core always gets sequential Karatsuba. Inside a band, loads below
/// the parallel-vs-Karatsuba threshold get parallel Toom-Cook and anything
/// else gets Karatsuba; sequential Toom-Cook is never chosen. Lengths
/// outside every band get the default plan.
pub fn select_method(table: &RuleTable, state: &SystemState) -> MethodPlan {
    let rule = table.rule_for(state.degree).map(|(_, r)| r);
    if state.available_cores <= 1 {
        return rule.map_or(table.default_plan, |r| r.plans.karatsuba);
    }
    let Some(rule) = rule else {
        return table.default_plan;
    };
    if state.available_cores < rule.min_cores {
        return rule.plans.karatsuba;
    }
    if state.load_pct < rule.thresholds.parallel_vs_karatsuba_pct {
        rule.plans.toom_parallel
    } else {
        rule.plans.karatsuba
    }
}

/// Stateful selector that suppresses flapping around a threshold.
///
/// While the load stays within `hysteresis_pct / 2` of the threshold of the
/// band used last, the previous choice is kept.
#[derive(Clone, Debug)]
pub struct Selector {
    table: RuleTable,
    hysteresis_pct: f64,
    last: Option<(usize, MethodPlan)>,
}

impl Selector {
    pub fn new(table: RuleTable) -> Self {
        Self {
            table,
            hysteresis_pct: DEFAULT_HYSTERESIS_PCT,
            last: None,
        }
    }

    /// Width 0 reproduces [`select_method`] exactly.
    pub fn with_hysteresis(mut self, width_pct: f64) -> Self {
        self.hysteresis_pct = width_pct.max(0.0);
        self
    }

    pub fn table(&self) -> &RuleTable {
        &self.table
    }

    pub fn select(&mut self, state: &SystemState) -> MethodPlan {
        let fresh = select_method(&self.table, state);
        let Some((band_idx, rule)) = self.table.rule_for(state.degree) else {
            self.last = None;
            return fresh;
        };
        let near = (state.load_pct - rule.thresholds.parallel_vs_karatsuba_pct).abs() < self.hysteresis_pct / 2.0;
        let choice = match self.last {
            Some((idx, prev)) if idx == band_idx && near && state.available_cores >= rule.min_cores => prev,
            _ => fresh,
        };
        self.last = Some((band_idx, choice));
        choice
    }
}

/// Exponentially weighted moving average of observed load, the only form of
/// load forecasting the selector uses.
#[derive(Clone, Copy, Debug)]
pub struct LoadSmoother {
    alpha: f64,
    value: Option<f64>,
}

impl LoadSmoother {
    pub fn new(alpha: f64) -> Self {
        Self {
            alpha: alpha.clamp(0.0, 1.0),
            value: None,
        }
    }

    pub fn observe(&mut self, load_pct: f64) -> f64 {
        let v = match self.value {
            None => load_pct,
            Some(prev) => self.alpha * load_pct + (1.0 - self.alpha) * prev,
        };
        self.value = Some(v);
        v
    }

    pub fn current(&self) -> Option<f64> {
        self.value
    }
}

/// Mean elapsed time per `(plan, degree, load)` from benchmark records.
///
/// Predictions interpolate linearly between sampled loads and clamp to the
/// nearest endpoint outside the sampled range.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TimeModel {
    curves: BTreeMap<(MethodPlan, usize), Vec<(f64, f64)>>,
}

impl TimeModel {
    pub fn from_records(records: &[BenchmarkRecord]) -> Self {
        let mut sums: BTreeMap<(MethodPlan, usize, u32), (f64, u32)> = BTreeMap::new();
        for r in records {
            let e = sums.entry((r.plan, r.degree, r.load_pct)).or_insert((0.0, 0));
            e.0 += r.elapsed_ns as f64;
            e.1 += 1;
        }
        let mut curves: BTreeMap<(MethodPlan, usize), Vec<(f64, f64)>> = BTreeMap::new();
        // BTreeMap iteration keeps each curve sorted by load.
        for ((plan, degree, load), (sum, n)) in sums {
            curves
                .entry((plan, degree))
                .or_default()
                .push((load as f64, sum / n as f64));
        }
        Self { curves }
    }

    pub fn plans(&self) -> impl Iterator<Item = (MethodPlan, usize)> + '_ {
        self.curves.keys().copied()
    }

    /// Sampled `(load_pct, mean_ns)` points for a plan and operand length.
    pub fn curve(&self, plan: &MethodPlan, degree: usize) -> Option<&[(f64, f64)]> {
        self.curves.get(&(*plan, degree)).map(Vec::as_slice)
    }

    /// Estimated nanoseconds for one multiplication.
    pub fn predict_time(&self, plan: &MethodPlan, degree: usize, load_pct: f64) -> Result<f64> {
        let curve = self
            .curve(plan, degree)
            .ok_or_else(|| Error::Coverage(format!("plan {plan} at length {degree}")))?;
        Ok(interpolate_curve(curve, load_pct))
    }

    /// Fastest of `candidates`; when predictions are within `tie_margin`
    /// (relative) of the best, the plan with fewer workers wins.
    pub fn fastest_plan(
        &self,
        candidates: &[MethodPlan],
        degree: usize,
        load_pct: f64,
        tie_margin: f64,
    ) -> Result<MethodPlan> {
        let mut timed = candidates
            .iter()
            .map(|p| self.predict_time(p, degree, load_pct).map(|t| (*p, t)))
            .collect::<Result<Vec<_>>>()?;
        let best = timed.iter().map(|(_, t)| *t).fold(f64::INFINITY, f64::min);
        timed.retain(|(_, t)| *t <= best * (1.0 + tie_margin));
        timed.sort_by(|a, b| a.0.workers.cmp(&b.0.workers).then(a.1.total_cmp(&b.1)));
        timed
            .first()
            .map(|(p, _)| *p)
            .ok_or_else(|| Error::InvalidInput("no candidate plans".into()))
    }
}

fn interpolate_curve(curve: &[(f64, f64)], x: f64) -> f64 {
    let (first, last) = (curve[0], curve[curve.len() - 1]);
    if x <= first.0 {
        return first.1;
    }
    if x >= last.0 {
        return last.1;
    }
    let i = curve.partition_point(|p| p.0 <= x);
    let (x0, y0) = curve[i - 1];
    let (x1, y1) = curve[i];
    if x == x0 {
        return y0;
    }
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

/// First load at which `other` becomes strictly faster than `parallel`.
///
/// Both curves are sampled at the same ascending loads. Returns 0 when
/// `other` is already faster at the first load and 100 when it never is.
pub fn crossover(loads: &[f64], parallel: &[f64], other: &[f64]) -> f64 {
    let diff: Vec<f64> = parallel.iter().zip(other).map(|(p, o)| p - o).collect();
    if diff.first().is_none_or(|&d| d > 0.0) {
        return 0.0;
    }
    for i in 0..diff.len() - 1 {
        let (d0, d1) = (diff[i], diff[i + 1]);
        if d1 > 0.0 {
            return loads[i] + (loads[i + 1] - loads[i]) * (-d0) / (d1 - d0);
        }
    }
    100.0
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum PlanClass {
    Karatsuba,
    ToomSequential,
    ToomParallel,
}

impl PlanClass {
    fn of(plan: &MethodPlan) -> Option<Self> {
        match (plan.method, plan.is_parallel()) {
            (Method::Karatsuba, false) => Some(Self::Karatsuba),
            (Method::Toom, false) => Some(Self::ToomSequential),
            (Method::Toom, true) => Some(Self::ToomParallel),
            _ => None,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Self::Karatsuba => "karatsuba (1 worker)",
            Self::ToomSequential => "toom-cook (1 worker)",
            Self::ToomParallel => "toom-cook (parallel)",
        }
    }
}

/// Builds a rule table from benchmark records.
///
/// Each band needs records for sequential Karatsuba, sequential Toom-Cook
/// and parallel Toom-Cook at three or more common load levels, including 0.
/// Curves average every record in the band at a given load.
pub fn calibrate(records: &[BenchmarkRecord], bands: &[DegreeBand]) -> Result<RuleTable> {
    if bands.is_empty() {
        return Err(Error::CalibrationInput("no degree bands given".into()));
    }
    let mut entries = Vec::with_capacity(bands.len());
    for band in bands {
        let band_name = format!("band [{}, {}]", band.min, band.max);
        let in_band: Vec<&BenchmarkRecord> = records.iter().filter(|r| band.contains(r.degree)).collect();

        let pick = |class: PlanClass, prefer: Option<&MethodPlan>| -> Result<MethodPlan> {
            let mut plans: Vec<MethodPlan> = in_band
                .iter()
                .map(|r| r.plan)
                .filter(|p| PlanClass::of(p) == Some(class))
                .collect();
            plans.sort();
            plans.dedup();
            if let Some(pref) = prefer {
                if let Some(p) = plans
                    .iter()
                    .find(|p| p.k == pref.k && p.base_cutoff == pref.base_cutoff)
                {
                    return Ok(*p);
                }
            }
            plans.first().copied().ok_or_else(|| {
                Error::CalibrationInput(format!("{band_name}: missing {} records at every load", class.name()))
            })
        };
        let par = pick(PlanClass::ToomParallel, None)?;
        let seq = pick(PlanClass::ToomSequential, Some(&par))?;
        let kar = pick(PlanClass::Karatsuba, None)?;

        let mut curves: Vec<BTreeMap<u32, (f64, u32)>> = alloc::vec![BTreeMap::new(); 3];
        for r in &in_band {
            if let Some(idx) = [kar, seq, par].iter().position(|p| *p == r.plan) {
                let e = curves[idx].entry(r.load_pct).or_insert((0.0, 0));
                e.0 += r.elapsed_ns as f64;
                e.1 += 1;
            }
        }
        let all_loads: alloc::collections::BTreeSet<u32> = curves.iter().flat_map(|c| c.keys().copied()).collect();
        let mut missing = Vec::new();
        for (plan, curve) in [kar, seq, par].iter().zip(&curves) {
            for load in all_loads.iter().copied().chain(core::iter::once(0)) {
                if !curve.contains_key(&load) && !missing.contains(&(plan.label(), load)) {
                    missing.push((plan.label(), load));
                }
            }
        }
        let common: Vec<u32> = all_loads
            .iter()
            .copied()
            .filter(|l| curves.iter().all(|c| c.contains_key(l)))
            .collect();
        if !missing.is_empty() || common.len() < 3 {
            let cells: Vec<String> = missing
                .iter()
                .map(|(p, l)| format!("({band_name}, {p}, {l}%)"))
                .collect();
            let reason = if cells.is_empty() {
                format!("{band_name}: only {} common load levels, need at least 3", common.len())
            } else {
                format!("missing cells {}", cells.join(", "))
            };
            return Err(Error::CalibrationInput(reason));
        }

        let loads: Vec<f64> = common.iter().map(|&l| l as f64).collect();
        let mean =
            |c: &BTreeMap<u32, (f64, u32)>| -> Vec<f64> { common.iter().map(|l| c[l].0 / c[l].1 as f64).collect() };
        let (kar_t, seq_t, par_t) = (mean(&curves[0]), mean(&curves[1]), mean(&curves[2]));
        let vs_seq = crossover(&loads, &par_t, &seq_t);
        let mut vs_kar = crossover(&loads, &par_t, &kar_t);
        if is_interior(vs_kar) && is_interior(vs_seq) && vs_kar > vs_seq {
            vs_kar = vs_seq;
        }
        entries.push(Rule {
            degree_band: *band,
            min_cores: par.workers,
            thresholds: Thresholds {
                parallel_vs_karatsuba_pct: vs_kar,
                parallel_vs_sequential_pct: vs_seq,
            },
            plans: CandidatePlans {
                karatsuba: kar,
                toom_sequential: seq,
                toom_parallel: par,
            },
        });
    }
    let table = RuleTable {
        version: RULE_TABLE_VERSION,
        default_plan: entries[0].plans.karatsuba,
        entries,
    };
    table.validate()?;
    Ok(table)
}
