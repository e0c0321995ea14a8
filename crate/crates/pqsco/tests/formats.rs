use std::fs;
use std::path::PathBuf;

use pqsco::formats::{export_records, import_records, load_json, load_rules, save_json, save_rules, RecordFormat};
use pqsco::sim::Scenario;
use pqsco_core::{calibrate, BenchmarkRecord, DegreeBand, Method, MethodPlan};
use proptest::prelude::*;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn record() -> impl Strategy<Value = BenchmarkRecord> {
    (
        0u32..3,
        1u32..9,
        1u32..64,
        1usize..2048,
        0u32..=100,
        0u32..20,
        1u64..u64::MAX,
        any::<u64>(),
    )
        .prop_map(
            |(m, workers, cutoff, degree, load_pct, run_index, elapsed_ns, mult_count)| {
                let plan = match m {
                    0 => MethodPlan::schoolbook(),
                    1 => MethodPlan::karatsuba(cutoff),
                    _ => MethodPlan::toom(3 + cutoff % 2, cutoff),
                }
                .with_workers(workers);
                BenchmarkRecord {
                    plan,
                    degree,
                    load_pct,
                    run_index,
                    elapsed_ns,
                    mult_count,
                }
            },
        )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn records_survive_both_formats(recs in proptest::collection::vec(record(), 0..40)) {
        let dir = tempfile::tempdir().unwrap();
        for (name, fmt) in [("a.csv", RecordFormat::Csv), ("a.json", RecordFormat::Json)] {
            let first = dir.path().join(name);
            let second = dir.path().join(format!("again-{name}"));
            export_records(&recs, fmt, &first).unwrap();
            let back = import_records(&first, fmt).unwrap();
            prop_assert_eq!(&back, &recs);
            export_records(&back, fmt, &second).unwrap();
            prop_assert_eq!(fs::read(&first).unwrap(), fs::read(&second).unwrap());
        }
    }
}

#[test]
fn bundled_records_are_byte_stable() {
    let src = data("reference_records.csv");
    let recs = import_records(&src, RecordFormat::Csv).unwrap();
    assert_eq!(recs.len(), 2 * 19 * 3 * 10);
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.csv");
    export_records(&recs, RecordFormat::Csv, &out).unwrap();
    assert_eq!(fs::read(&src).unwrap(), fs::read(&out).unwrap());
    assert!(recs
        .iter()
        .any(|r| r.plan.method == Method::Toom && r.plan.workers == 5));
}

#[test]
fn rules_round_trip() {
    let recs = import_records(&data("reference_records.csv"), RecordFormat::Csv).unwrap();
    let table = calibrate(&recs, &[DegreeBand::new(1, 600), DegreeBand::new(601, 1024)]).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    save_rules(&table, &a).unwrap();
    let back = load_rules(&a).unwrap();
    assert_eq!(back, table);
    save_rules(&back, &b).unwrap();
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn scenario_round_trip() {
    let scenario: Scenario = load_json(&data("mixed_load.json")).unwrap();
    scenario.validate().unwrap();
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    save_json(&scenario, &a).unwrap();
    let back: Scenario = load_json(&a).unwrap();
    assert_eq!(back, scenario);
    save_json(&back, &b).unwrap();
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(fs::read(&a).unwrap(), fs::read(data("mixed_load.json")).unwrap());
}

#[test]
fn bad_rule_file_reports_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("rules.json");
    fs::write(&p, r#"{"version":1,"default_plan":{"method":"karatsuba","k":2,"workers":1,"base_cutoff":32},"entries":[{"degree_band":{"min":1}}]}"#).unwrap();
    let err = load_rules(&p).unwrap_err().to_string();
    assert!(err.contains("entries[0].degree_band"), "{err}");
}
