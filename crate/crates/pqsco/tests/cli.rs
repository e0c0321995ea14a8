use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("data")
        .join(name)
        .display()
        .to_string()
}

fn pqsco(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pqsco"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn calibrated_rules(dir: &tempfile::TempDir) -> String {
    let rules = dir.path().join("rules.json").display().to_string();
    let o = pqsco(&[
        "calibrate",
        "--records",
        &data("reference_records.csv"),
        "--bands",
        "1-600,601-1024",
        "--out",
        &rules,
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    rules
}

#[test]
fn multiply_schoolbook_and_karatsuba() {
    let o = pqsco(&["multiply", "--method", "schoolbook", "--a", "3,4", "--b", "1,2"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "3,10,8\nmults=4 adds=1\n");

    let o = pqsco(&[
        "multiply",
        "--method",
        "karatsuba",
        "--a",
        "3,4",
        "--b",
        "1,2",
        "--cutoff",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.starts_with("3,10,8\nmults=3 "), "{out}");
}

#[test]
fn multiply_reads_files_and_reduces() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.txt");
    fs::write(&a, "4095\n4095\n").unwrap();
    let o = pqsco(&[
        "--modulus",
        "4096",
        "multiply",
        "--method",
        "toom",
        "--k",
        "3",
        "--workers",
        "3",
        "--cutoff",
        "1",
        "--a",
        a.to_str().unwrap(),
        "--b",
        "4095,4095",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("1,2,1\n"));
}

#[test]
fn multiply_json_output() {
    let o = pqsco(&[
        "--format", "json", "multiply", "--method", "toom", "--k", "4", "--a", "1,1", "--b", "1,-1",
    ]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["product"], serde_json::json!([1, 0, -1]));
}

#[test]
fn validation_failures_exit_2() {
    for args in [
        &["multiply", "--method", "toom", "--k", "7", "--a", "1", "--b", "1"][..],
        &["multiply", "--method", "fft", "--a", "1", "--b", "1"],
        &["multiply", "--method", "karatsuba", "--a", "1,x", "--b", "1"],
        &[
            "multiply",
            "--method",
            "karatsuba",
            "--workers",
            "0",
            "--a",
            "1",
            "--b",
            "1",
        ],
        &[
            "multiply",
            "--method",
            "karatsuba",
            "--a",
            "1",
            "--b",
            "1",
            "--frobnicate",
        ],
        &[
            "select",
            "--rules",
            "/nonexistent.json",
            "--degree",
            "512",
            "--load",
            "0",
        ],
        &[],
    ] {
        assert_eq!(pqsco(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn count_check_passes() {
    let o = pqsco(&["count-check", "--lengths", "64,100,243"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(!stdout(&o).contains("MISMATCH"));
}

#[test]
fn select_examples() {
    let dir = tempfile::tempdir().unwrap();
    let rules = calibrated_rules(&dir);
    let pick = |cores: &str, load: &str| {
        let o = pqsco(&[
            "select", "--rules", &rules, "--degree", "512", "--load", load, "--cores", cores,
        ]);
        assert_eq!(o.status.code(), Some(0));
        serde_json::from_str::<serde_json::Value>(&stdout(&o)).unwrap()
    };
    let single = pick("1", "0");
    assert_eq!(
        (single["method"].as_str(), single["workers"].as_u64()),
        (Some("karatsuba"), Some(1))
    );
    let low = pick("8", "10");
    assert_eq!(
        (low["method"].as_str(), low["workers"].as_u64()),
        (Some("toom"), Some(5))
    );
    let high = pick("8", "60");
    assert_eq!(high["method"], "karatsuba");
}

#[test]
fn simulate_is_deterministic_and_machine_readable() {
    let dir = tempfile::tempdir().unwrap();
    let rules = calibrated_rules(&dir);
    let run = |seed: &str| {
        let o = pqsco(&[
            "--format",
            "json",
            "--seed",
            seed,
            "simulate",
            "--scenario",
            &data("mixed_load.json"),
            "--rules",
            &rules,
            "--records",
            &data("reference_records.csv"),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        stdout(&o)
    };
    let first = run("5");
    assert_eq!(first, run("5"));
    assert_ne!(first, run("6"));
    let v: serde_json::Value = serde_json::from_str(&first).unwrap();
    assert!(v["total_handovers"].as_u64().unwrap() > 0);

    let out = dir.path().join("report.txt");
    let o = pqsco(&[
        "--output",
        out.to_str().unwrap(),
        "simulate",
        "--scenario",
        &data("mixed_load.json"),
        "--rules",
        &rules,
        "--records",
        &data("reference_records.csv"),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(fs::read_to_string(&out).unwrap().contains("aggregate:"));
}

#[test]
fn simulate_without_coverage_exits_5() {
    let dir = tempfile::tempdir().unwrap();
    let rules = calibrated_rules(&dir);
    let records = dir.path().join("only512.csv");
    let full = fs::read_to_string(data("reference_records.csv")).unwrap();
    let kept: Vec<&str> = full.lines().filter(|l| !l.contains(",821,")).collect();
    fs::write(&records, kept.join("\n") + "\n").unwrap();
    let scenario = dir.path().join("s.json");
    let text = fs::read_to_string(data("mixed_load.json"))
        .unwrap()
        .replace("\"degree\": 512", "\"degree\": 821");
    fs::write(&scenario, text).unwrap();
    let o = pqsco(&[
        "simulate",
        "--scenario",
        scenario.to_str().unwrap(),
        "--rules",
        &rules,
        "--records",
        records.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(5), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn bench_capacity_exits_4() {
    // Asking for more loaded workers than any host has cores.
    let o = pqsco(&[
        "bench",
        "--degrees",
        "16",
        "--loads",
        "50",
        "--runs",
        "1",
        "--loaded-workers",
        "100000",
    ]);
    assert_eq!(o.status.code(), Some(4), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn bench_smoke_run_writes_records_and_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let t = std::time::Instant::now();
    let o = pqsco(&[
        "bench",
        "--runs",
        "1",
        "--loads",
        "0",
        "--loaded-workers",
        "0",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(t.elapsed().as_secs() < 10);
    let recs: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(recs.as_array().unwrap().len(), 3);
    assert!(dir.path().join("r.json.meta.json").exists());
    assert_eq!(stdout(&o).lines().count(), 4);
}
