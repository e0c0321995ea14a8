//! Discrete-event simulation of vehicles handing over between edge nodes.
//!
//! Every handover lands on a node whose background load follows a
//! piecewise-constant trace. The policy picks a multiplication plan for
//! that load, and the handover's crypto latency is `mults_per_handover`
//! times the per-multiplication time of that plan.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};
use std::io::Write;
use std::time::Instant;

use pqsco_core::{select_method, MethodPlan, Polynomial, RuleTable, SystemState, TimeModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::parallel::run_plan;

pub const DEFAULT_MULTS_PER_HANDOVER: u32 = 10;

fn default_mults() -> u32 {
    DEFAULT_MULTS_PER_HANDOVER
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoadBreakpoint {
    pub time_ms: f64,
    pub load_pct: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MecNode {
    pub cores: u32,
    pub background_load_trace: Vec<LoadBreakpoint>,
}

impl MecNode {
    /// Load in effect at `t`: the last breakpoint at or before `t`, or the
    /// first breakpoint before the trace starts.
    pub fn load_at(&self, t: f64) -> f64 {
        let trace = &self.background_load_trace;
        let i = trace.partition_point(|b| b.time_ms <= t);
        trace[i.saturating_sub(1)].load_pct
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyMode {
    RuleTable,
    FixedPlan,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub mec_nodes: Vec<MecNode>,
    pub vehicles: u32,
    /// Mean of the exponential gap between one vehicle's handovers.
    pub handover_interval_ms: f64,
    #[serde(default = "default_mults")]
    pub mults_per_handover: u32,
    /// Operand length of every multiplication.
    pub degree: usize,
    pub duration_ms: f64,
    pub seed: u64,
    pub policy_mode: PolicyMode,
    /// Required when `policy_mode` is `fixed_plan`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_plan: Option<MethodPlan>,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(format!("scenario: {m}")));
        if self.mec_nodes.is_empty() {
            return bad("at least one MEC node is required".into());
        }
        for (i, node) in self.mec_nodes.iter().enumerate() {
            if node.cores == 0 {
                return bad(format!("mec_nodes[{i}].cores must be at least 1"));
            }
            if node.background_load_trace.is_empty() {
                return bad(format!("mec_nodes[{i}].background_load_trace is empty"));
            }
            for (j, b) in node.background_load_trace.iter().enumerate() {
                if !(0.0..=100.0).contains(&b.load_pct) {
                    return bad(format!(
                        "mec_nodes[{i}].background_load_trace[{j}].load_pct is outside [0, 100]"
                    ));
                }
                if j > 0 && b.time_ms < node.background_load_trace[j - 1].time_ms {
                    return bad(format!(
                        "mec_nodes[{i}].background_load_trace[{j}].time_ms goes backwards"
                    ));
                }
            }
        }
        if self.handover_interval_ms.is_nan() || self.handover_interval_ms <= 0.0 {
            return bad("handover_interval_ms must be positive".into());
        }
        if self.duration_ms.is_nan() || self.duration_ms <= 0.0 {
            return bad("duration_ms must be positive".into());
        }
        if self.mults_per_handover == 0 || self.degree == 0 {
            return bad("mults_per_handover and degree must be at least 1".into());
        }
        match (self.policy_mode, &self.fixed_plan) {
            (PolicyMode::FixedPlan, None) => bad("fixed_plan mode needs a fixed_plan".into()),
            (_, Some(p)) => Ok(p.validate()?),
            _ => Ok(()),
        }
    }

    pub fn with_fixed_plan(&self, plan: MethodPlan) -> Self {
        Self {
            policy_mode: PolicyMode::FixedPlan,
            fixed_plan: Some(plan),
            ..self.clone()
        }
    }

    pub fn with_rule_table(&self) -> Self {
        Self {
            policy_mode: PolicyMode::RuleTable,
            fixed_plan: None,
            ..self.clone()
        }
    }
}

/// Source of the time one multiplication takes.
pub trait LatencyModel {
    fn mult_time_ns(&mut self, plan: &MethodPlan, degree: usize, load_pct: f64) -> Result<f64>;
}

impl LatencyModel for &TimeModel {
    fn mult_time_ns(&mut self, plan: &MethodPlan, degree: usize, load_pct: f64) -> Result<f64> {
        Ok(self.predict_time(plan, degree, load_pct)?)
    }
}

/// Times real multiplications on random operands. The background load of
/// the trace is not reproduced; only the plan choice follows it.
pub struct LiveTimer {
    modulus: Option<u64>,
    rng: ChaCha8Rng,
}

impl LiveTimer {
    pub fn new(seed: u64, modulus: Option<u64>) -> Self {
        Self {
            modulus,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl LatencyModel for LiveTimer {
    fn mult_time_ns(&mut self, plan: &MethodPlan, degree: usize, _load_pct: f64) -> Result<f64> {
        let bound = self.modulus.unwrap_or(4096);
        let a = Polynomial::random(degree, bound, self.rng.gen(), self.modulus)?;
        let b = Polynomial::random(degree, bound, self.rng.gen(), self.modulus)?;
        let t0 = Instant::now();
        run_plan(&a, &b, plan)?;
        Ok(t0.elapsed().as_nanos().max(1) as f64)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LatencyStats {
    pub count: u64,
    /// 0 when `count` is 0.
    pub mean_ms: f64,
    /// Nearest-rank 95th percentile; 0 when `count` is 0.
    pub p95_ms: f64,
}

impl LatencyStats {
    fn of(samples: &[f64]) -> Self {
        if samples.is_empty() {
            return Self::default();
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let rank = ((0.95 * sorted.len() as f64).ceil() as usize).max(1);
        Self {
            count: samples.len() as u64,
            mean_ms: samples.iter().sum::<f64>() / samples.len() as f64,
            p95_ms: sorted[rank - 1],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VehicleReport {
    pub vehicle: u32,
    pub latency: LatencyStats,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MecReport {
    pub mec: usize,
    pub latency: LatencyStats,
    /// Plan label → number of handovers that used it.
    pub plan_histogram: BTreeMap<String, u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub policy_mode: PolicyMode,
    pub total_handovers: u64,
    pub aggregate: LatencyStats,
    pub per_mec: Vec<MecReport>,
    pub per_vehicle: Vec<VehicleReport>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Event {
    time_ms: f64,
    vehicle: u32,
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.time_ms
            .total_cmp(&other.time_ms)
            .then(self.vehicle.cmp(&other.vehicle))
    }
}

fn vehicle_rng(seed: u64, vehicle: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(vehicle as u64 + 1);
    rng
}

fn next_gap(rng: &mut ChaCha8Rng, mean_ms: f64) -> f64 {
    let u: f64 = rng.gen();
    -mean_ms * (1.0 - u).ln()
}

/// Runs the scenario against the calibrated time model.
pub fn run_simulation(scenario: &Scenario, table: &RuleTable, model: &TimeModel) -> Result<SimReport> {
    run_simulation_with(scenario, table, model)
}

pub fn run_simulation_with(
    scenario: &Scenario,
    table: &RuleTable,
    mut latency: impl LatencyModel,
) -> Result<SimReport> {
    scenario.validate()?;
    let n_mec = scenario.mec_nodes.len();
    let mut rngs: Vec<ChaCha8Rng> = (0..scenario.vehicles).map(|v| vehicle_rng(scenario.seed, v)).collect();
    let mut position: Vec<usize> = (0..scenario.vehicles as usize).map(|v| v % n_mec).collect();
    let mut queue = BinaryHeap::new();
    for (v, rng) in rngs.iter_mut().enumerate() {
        let t = next_gap(rng, scenario.handover_interval_ms);
        queue.push(Reverse(Event {
            time_ms: t,
            vehicle: v as u32,
        }));
    }

    let mut per_vehicle: Vec<Vec<f64>> = vec![Vec::new(); scenario.vehicles as usize];
    let mut per_mec: Vec<Vec<f64>> = vec![Vec::new(); n_mec];
    let mut histograms: Vec<BTreeMap<String, u64>> = vec![BTreeMap::new(); n_mec];
    let mut all = Vec::new();

    while let Some(Reverse(ev)) = queue.pop() {
        if ev.time_ms >= scenario.duration_ms {
            continue;
        }
        let v = ev.vehicle as usize;
        let rng = &mut rngs[v];
        let target = if n_mec == 1 {
            0
        } else {
            let pick = rng.gen_range(0..n_mec - 1);
            if pick >= position[v] {
                pick + 1
            } else {
                pick
            }
        };
        position[v] = target;
        let node = &scenario.mec_nodes[target];
        let load = node.load_at(ev.time_ms);
        let plan = match scenario.policy_mode {
            PolicyMode::FixedPlan => scenario.fixed_plan.expect("validated"),
            PolicyMode::RuleTable => select_method(
                table,
                &SystemState {
                    degree: scenario.degree,
                    load_pct: load,
                    available_cores: node.cores,
                },
            ),
        };
        let per_mult = latency
            .mult_time_ns(&plan, scenario.degree, load)
            .map_err(|e| match e {
                Error::Core(pqsco_core::Error::Coverage(what)) => pqsco_core::Error::Coverage(format!(
                    "{what} (scenario handover at {:.3} ms on MEC {target}, load {load}%)",
                    ev.time_ms
                ))
                .into(),
                other => other,
            })?;
        let latency_ms = scenario.mults_per_handover as f64 * per_mult / 1e6;
        per_vehicle[v].push(latency_ms);
        per_mec[target].push(latency_ms);
        *histograms[target].entry(plan.label()).or_default() += 1;
        all.push(latency_ms);

        let t = ev.time_ms + next_gap(rng, scenario.handover_interval_ms);
        queue.push(Reverse(Event {
            time_ms: t,
            vehicle: ev.vehicle,
        }));
    }

    Ok(SimReport {
        policy_mode: scenario.policy_mode,
        total_handovers: all.len() as u64,
        aggregate: LatencyStats::of(&all),
        per_mec: per_mec
            .iter()
            .zip(histograms)
            .enumerate()
            .map(|(mec, (lat, plan_histogram))| MecReport {
                mec,
                latency: LatencyStats::of(lat),
                plan_histogram,
            })
            .collect(),
        per_vehicle: per_vehicle
            .iter()
            .enumerate()
            .map(|(v, lat)| VehicleReport {
                vehicle: v as u32,
                latency: LatencyStats::of(lat),
            })
            .collect(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Json,
}

pub fn render_report(report: &SimReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => crate::formats::to_json_string(report),
        ReportFormat::Text => {
            let mut out = String::new();
            for m in &report.per_mec {
                let plans: Vec<String> = m.plan_histogram.iter().map(|(p, n)| format!("{p}={n}")).collect();
                out.push_str(&format!(
                    "mec {}: handovers={} mean_ms={:.4} p95_ms={:.4} plans=[{}]\n",
                    m.mec,
                    m.latency.count,
                    m.latency.mean_ms,
                    m.latency.p95_ms,
                    plans.join(" ")
                ));
            }
            out.push_str("aggregate:\n");
            out.push_str(&format!(
                "  policy: {}\n",
                match report.policy_mode {
                    PolicyMode::RuleTable => "rule_table",
                    PolicyMode::FixedPlan => "fixed_plan",
                }
            ));
            out.push_str(&format!("  vehicles: {}\n", report.per_vehicle.len()));
            out.push_str(&format!("  handovers: {}\n", report.total_handovers));
            out.push_str(&format!("  mean_ms: {:.4}\n", report.aggregate.mean_ms));
            out.push_str(&format!("  p95_ms: {:.4}\n", report.aggregate.p95_ms));
            out
        }
    }
}

pub fn write_report(report: &SimReport, format: ReportFormat, out: &mut dyn Write) -> std::io::Result<()> {
    out.write_all(render_report(report, format).as_bytes())
}
