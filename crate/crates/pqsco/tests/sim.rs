use std::path::PathBuf;

use pqsco::formats::{import_records, load_json, RecordFormat};
use pqsco::sim::{render_report, run_simulation, LoadBreakpoint, MecNode, ReportFormat, Scenario};
use pqsco::Error;
use pqsco_core::{calibrate, DegreeBand, MethodPlan, RuleTable, TimeModel};
use proptest::prelude::*;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn reference() -> (RuleTable, TimeModel) {
    let recs = import_records(&data("reference_records.csv"), RecordFormat::Csv).unwrap();
    let table = calibrate(&recs, &[DegreeBand::new(1, 600), DegreeBand::new(601, 1024)]).unwrap();
    (table, TimeModel::from_records(&recs))
}

fn flat(load: f64) -> MecNode {
    MecNode {
        cores: 8,
        background_load_trace: vec![LoadBreakpoint {
            time_ms: 0.0,
            load_pct: load,
        }],
    }
}

fn scenario(nodes: Vec<MecNode>, vehicles: u32, seed: u64) -> Scenario {
    Scenario {
        mec_nodes: nodes,
        vehicles,
        handover_interval_ms: 50.0,
        mults_per_handover: 10,
        degree: 512,
        duration_ms: 2000.0,
        seed,
        policy_mode: pqsco::sim::PolicyMode::RuleTable,
        fixed_plan: None,
    }
}

#[test]
fn no_vehicles_no_handovers() {
    let (table, model) = reference();
    let r = run_simulation(&scenario(vec![flat(0.0)], 0, 1), &table, &model).unwrap();
    assert_eq!(r.total_handovers, 0);
    assert!(r.per_mec[0].plan_histogram.is_empty());
    assert_eq!(r.aggregate.mean_ms, 0.0);
    let json: serde_json::Value = serde_json::from_str(&render_report(&r, ReportFormat::Json)).unwrap();
    assert_eq!(json["total_handovers"], 0);
}

#[test]
fn idle_node_always_gets_parallel_toom() {
    let (table, model) = reference();
    let r = run_simulation(&scenario(vec![flat(0.0)], 5, 3), &table, &model).unwrap();
    assert!(r.total_handovers > 0);
    let hist = &r.per_mec[0].plan_histogram;
    assert_eq!(hist.len(), 1);
    assert_eq!(hist.get("toom3x5"), Some(&r.total_handovers));
}

#[test]
fn rule_table_beats_fixed_sequential_toom() {
    let (table, model) = reference();
    let base = scenario(vec![flat(0.0), flat(40.0), flat(80.0)], 10, 9);
    let policy = run_simulation(&base, &table, &model).unwrap();
    let fixed = run_simulation(&base.with_fixed_plan(MethodPlan::toom(3, 32)), &table, &model).unwrap();
    assert_eq!(policy.total_handovers, fixed.total_handovers);
    assert!(policy.aggregate.mean_ms <= fixed.aggregate.mean_ms);
}

#[test]
fn uncovered_degree_is_a_coverage_error_with_context() {
    let (table, model) = reference();
    let s = Scenario {
        degree: 700,
        ..scenario(vec![flat(10.0)], 1, 1)
    };
    let err = run_simulation(&s, &table, &model).unwrap_err();
    assert!(matches!(err, Error::Core(pqsco_core::Error::Coverage(_))), "{err}");
    assert!(err.to_string().contains("MEC 0"), "{err}");
}

#[test]
fn text_report_layout() {
    let (table, model) = reference();
    let s: Scenario = load_json(&data("mixed_load.json")).unwrap();
    let r = run_simulation(&s, &table, &model).unwrap();
    let text = render_report(&r, ReportFormat::Text);
    let mec_lines = text.lines().filter(|l| l.starts_with("mec ")).count();
    assert_eq!(mec_lines, s.mec_nodes.len());
    assert!(text.contains("aggregate:\n"));
    assert_eq!(text, render_report(&r, ReportFormat::Text));
    assert_eq!(
        render_report(&r, ReportFormat::Json),
        render_report(&r, ReportFormat::Json)
    );
}

fn trace() -> impl Strategy<Value = Vec<LoadBreakpoint>> {
    proptest::collection::vec((0.0f64..3000.0, 0.0f64..=100.0), 1..6).prop_map(|mut v| {
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        v.into_iter()
            .map(|(time_ms, load_pct)| LoadBreakpoint { time_ms, load_pct })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn deterministic_and_conserving(
        traces in proptest::collection::vec((trace(), 1u32..12), 1..4),
        vehicles in 0u32..12,
        seed in any::<u64>(),
        degree in prop_oneof![Just(512usize), Just(821)],
    ) {
        let (table, model) = reference();
        let nodes = traces.into_iter().map(|(t, cores)| MecNode { cores, background_load_trace: t }).collect();
        let s = Scenario { degree, ..scenario(nodes, vehicles, seed) };
        let a = run_simulation(&s, &table, &model).unwrap();
        let b = run_simulation(&s, &table, &model).unwrap();
        prop_assert_eq!(&a, &b);
        let per_vehicle: u64 = a.per_vehicle.iter().map(|v| v.latency.count).sum();
        let per_mec: u64 = a.per_mec.iter().map(|m| m.latency.count).sum();
        let hist: u64 = a.per_mec.iter().flat_map(|m| m.plan_histogram.values()).sum();
        prop_assert_eq!(per_vehicle, a.total_handovers);
        prop_assert_eq!(per_mec, a.total_handovers);
        prop_assert_eq!(hist, a.total_handovers);
        prop_assert!(a.per_vehicle.iter().all(|v| v.latency.count == 0 || v.latency.mean_ms > 0.0));
        prop_assert!(a.aggregate.p95_ms >= 0.0);
    }
}
