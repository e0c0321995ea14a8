//! Command-line front end.
//!
//! Exit codes: 0 success, 2 invalid input, 3 self-check failure,
//! 4 capacity or environment problem, 5 time model does not cover a query.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use pqsco_core::{
    calibrate, predicted_mult_count, recursion_depth, schoolbook_mul, select_method, DegreeBand, Method, MethodPlan,
    OpCounter, Polynomial, SystemState, TimeModel, DEFAULT_BASE_CUTOFF,
};
use serde::Serialize;

use crate::bench::{aggregate, default_load_sweep, default_plans, format_stats_table, run_benchmark, BenchmarkSpec};
use crate::error::{Error, Result};
use crate::formats::{
    export_records, import_records, load_json, load_rules, metadata_path, save_json, save_rules, to_json_string,
    HostMetadata, RecordFormat,
};
use crate::loadgen::host_logical_cores;
use crate::parallel::run_plan;
use crate::sim::{render_report, run_simulation, run_simulation_with, LiveTimer, ReportFormat, Scenario};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_SELF_CHECK: i32 = 3;
pub const EXIT_CAPACITY: i32 = 4;
pub const EXIT_COVERAGE: i32 = 5;

#[derive(Debug, Parser)]
#[command(
    name = "pqsco",
    version,
    about = "Polynomial multiplication benchmarking and method selection"
)]
pub struct Cli {
    /// Seed for every random choice; overrides a scenario's own seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Coefficient modulus; omit for plain integers (bench defaults to 4096).
    #[arg(long, global = true)]
    pub modulus: Option<u64>,

    /// Output file; standard output when omitted.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    pub format: Option<OutputFormat>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
    Text,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Multiply two polynomials and print the product with operation counts.
    Multiply(MultiplyArgs),
    /// Compare every method against schoolbook and the predicted counts.
    CountCheck(CountCheckArgs),
    /// Time plans across load levels and write benchmark records.
    Bench(BenchArgs),
    /// Build a rule table from benchmark records.
    Calibrate(CalibrateArgs),
    /// Print the plan the rule table picks for a system state.
    Select(SelectArgs),
    /// Run the handover simulation.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct MultiplyArgs {
    #[arg(long, value_parser = parse_method)]
    pub method: Method,
    /// Split factor for Toom-Cook (3 or 4).
    #[arg(long)]
    pub k: Option<u32>,
    #[arg(long, default_value_t = 1)]
    pub workers: u32,
    #[arg(long, default_value_t = DEFAULT_BASE_CUTOFF)]
    pub cutoff: u32,
    /// Comma-separated coefficients (lowest degree first) or a file with one per line.
    #[arg(long, allow_hyphen_values = true)]
    pub a: String,
    #[arg(long, allow_hyphen_values = true)]
    pub b: String,
}

#[derive(Debug, Args)]
pub struct CountCheckArgs {
    /// Operand lengths.
    #[arg(long, value_delimiter = ',', default_values_t = vec![512, 729])]
    pub lengths: Vec<usize>,
    #[arg(long, default_value_t = 1)]
    pub cutoff: u32,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_values_t = vec![512])]
    pub degrees: Vec<usize>,
    /// Load levels: comma list whose items are `N` or `FROM-TO:STEP`.
    #[arg(long, value_parser = parse_loads)]
    pub loads: Option<Loads>,
    #[arg(long, default_value_t = 4)]
    pub loaded_workers: u32,
    #[arg(long, default_value_t = crate::bench::DEFAULT_RUNS)]
    pub runs: u32,
    #[arg(long, default_value_t = crate::bench::DEFAULT_WARMUP_RUNS)]
    pub warmup: u32,
    /// Plans such as `karatsuba,toom3,toom3x5` or `toom4x8/c16`.
    #[arg(long, value_delimiter = ',', value_parser = parse_plan)]
    pub plans: Vec<MethodPlan>,
    /// Records file; `.json` selects JSON unless --format says otherwise.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[arg(long)]
    pub records: PathBuf,
    /// Operand-length bands such as `1-600,601-1024`; one band covering
    /// every recorded length by default.
    #[arg(long, value_delimiter = ',', value_parser = parse_band)]
    pub bands: Vec<DegreeBand>,
    /// Rule file to write.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[arg(long)]
    pub rules: PathBuf,
    #[arg(long)]
    pub degree: usize,
    #[arg(long)]
    pub load: f64,
    /// Defaults to this host's logical cores.
    #[arg(long)]
    pub cores: Option<u32>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long)]
    pub rules: PathBuf,
    /// Benchmark records for the time model; required unless --live.
    #[arg(long)]
    pub records: Option<PathBuf>,
    /// Time real multiplications instead of using recorded timings.
    #[arg(long)]
    pub live: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Loads(pub Vec<u32>);

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    s.parse().map_err(|e: pqsco_core::Error| e.to_string())
}

fn parse_plan(s: &str) -> std::result::Result<MethodPlan, String> {
    s.parse().map_err(|e: pqsco_core::Error| e.to_string())
}

fn parse_band(s: &str) -> std::result::Result<DegreeBand, String> {
    let (lo, hi) = s.split_once('-').ok_or_else(|| format!("band `{s}` is not MIN-MAX"))?;
    let num = |t: &str| {
        t.trim()
            .parse::<usize>()
            .map_err(|_| format!("band `{s}` is not MIN-MAX"))
    };
    Ok(DegreeBand::new(num(lo)?, num(hi)?))
}

fn parse_loads(s: &str) -> std::result::Result<Loads, String> {
    let bad = || format!("cannot parse load list `{s}`");
    let mut out = Vec::new();
    for item in s.split(',').map(str::trim) {
        let num = |t: &str| t.parse::<u32>().map_err(|_| bad());
        match item.split_once('-') {
            Some((from, rest)) => {
                let (to, step) = rest.split_once(':').unwrap_or((rest, "5"));
                let (from, to, step) = (num(from)?, num(to)?, num(step)?);
                if step == 0 || from > to {
                    return Err(bad());
                }
                out.extend((from..=to).step_by(step as usize));
            }
            None => out.push(num(item)?),
        }
    }
    Ok(Loads(out))
}

fn looks_inline(s: &str) -> bool {
    !s.is_empty()
        && s.chars()
            .all(|c| c.is_ascii_digit() || matches!(c, ',' | '-' | '+' | ' '))
}

/// Inline `3,4` or a path to a file holding one coefficient per line.
fn read_operand(arg: &str, modulus: Option<u64>) -> Result<Polynomial> {
    let (text, items): (&str, Vec<String>) = if looks_inline(arg) {
        (arg, arg.split(',').map(|t| t.trim().to_string()).collect())
    } else {
        let body = fs::read_to_string(arg).map_err(|e| Error::io(arg, e))?;
        let lines = body
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(String::from)
            .collect();
        (arg, lines)
    };
    let coeffs = items
        .iter()
        .map(|t| {
            t.parse::<i64>()
                .map_err(|_| Error::InvalidInput(format!("operand `{text}`: bad coefficient `{t}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    if coeffs.is_empty() {
        return Err(Error::InvalidInput(format!("operand `{text}` has no coefficients")));
    }
    Ok(Polynomial::new(coeffs, modulus)?)
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Core(pqsco_core::Error::Coverage(_)) => EXIT_COVERAGE,
        Error::Core(pqsco_core::Error::Resource(_)) | Error::Capacity(_) | Error::Environment(_) => EXIT_CAPACITY,
        _ => EXIT_INVALID,
    }
}

/// What a subcommand produced: text for standard output (or --output) and
/// whether a self-check failed.
struct Outcome {
    text: String,
    self_check_failed: bool,
}

impl From<String> for Outcome {
    fn from(text: String) -> Self {
        Self {
            text,
            self_check_failed: false,
        }
    }
}

/// Parses `args` (including the program name) and runs the subcommand.
/// Returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if code == EXIT_OK {
                stdout.write_all(rendered.as_bytes())
            } else {
                stderr.write_all(rendered.as_bytes())
            };
            return code;
        }
    };
    match execute(&cli, stderr) {
        Ok(out) => {
            let written = match &cli.output {
                Some(p) if writes_to_output(&cli.command) => fs::write(p, &out.text).map_err(|e| Error::io(p, e)),
                _ => stdout
                    .write_all(out.text.as_bytes())
                    .map_err(|e| Error::io("<stdout>", e)),
            };
            if let Err(e) = written {
                let _ = writeln!(stderr, "error: {e}");
                return EXIT_INVALID;
            }
            if out.self_check_failed {
                let _ = writeln!(stderr, "error: self-check failed");
                EXIT_SELF_CHECK
            } else {
                EXIT_OK
            }
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

/// bench and calibrate use --output as their data file, not for the summary.
fn writes_to_output(cmd: &Command) -> bool {
    !matches!(cmd, Command::Bench(_) | Command::Calibrate(_))
}

fn execute(cli: &Cli, stderr: &mut dyn Write) -> Result<Outcome> {
    let json = cli.format == Some(OutputFormat::Json);
    match &cli.command {
        Command::Multiply(a) => multiply_cmd(a, cli.modulus, json),
        Command::CountCheck(a) => count_check(a, cli.seed.unwrap_or(1), cli.modulus, json),
        Command::Bench(a) => bench(a, cli, stderr).map(Outcome::from),
        Command::Calibrate(a) => calibrate_cmd(a, cli).map(Outcome::from),
        Command::Select(a) => select(a).map(Outcome::from),
        Command::Simulate(a) => simulate(a, cli).map(Outcome::from),
    }
}

fn multiply_cmd(args: &MultiplyArgs, modulus: Option<u64>, json: bool) -> Result<Outcome> {
    let plan = match args.method {
        Method::Schoolbook => MethodPlan::schoolbook(),
        Method::Karatsuba => MethodPlan::karatsuba(args.cutoff),
        Method::Toom => MethodPlan::toom(args.k.unwrap_or(3), args.cutoff),
    }
    .with_workers(args.workers);
    if let (Some(k), Method::Schoolbook | Method::Karatsuba) = (args.k, args.method) {
        let expect = if args.method == Method::Karatsuba { 2 } else { 1 };
        if k != expect {
            return Err(
                pqsco_core::Error::InvalidPlan(format!("--k {k} does not apply to {}", args.method.name())).into(),
            );
        }
    }
    plan.validate()?;
    let a = read_operand(&args.a, modulus)?;
    let b = read_operand(&args.b, modulus)?;
    let (product, counter) = run_plan(&a, &b, &plan)?;
    let oracle = schoolbook_mul(&a, &b, &mut OpCounter::new())?;
    let text = if json {
        #[derive(Serialize)]
        struct Out<'a> {
            plan: String,
            product: &'a [i64],
            fundamental_mults: u64,
            fundamental_adds: u64,
        }
        to_json_string(&Out {
            plan: plan.label(),
            product: product.coeffs(),
            fundamental_mults: counter.fundamental_mults,
            fundamental_adds: counter.fundamental_adds,
        })
    } else {
        format!(
            "{product}\nmults={} adds={}\n",
            counter.fundamental_mults, counter.fundamental_adds
        )
    };
    Ok(Outcome {
        text,
        self_check_failed: product != oracle,
    })
}

#[derive(Serialize)]
struct CountRow {
    plan: String,
    length: usize,
    measured_mults: u64,
    predicted_mults: u64,
    measured_depth: u32,
    predicted_depth: u32,
    product_matches: bool,
}

fn count_check(args: &CountCheckArgs, seed: u64, modulus: Option<u64>, json: bool) -> Result<Outcome> {
    let plans = [
        MethodPlan::schoolbook(),
        MethodPlan::karatsuba(args.cutoff),
        MethodPlan::toom(3, args.cutoff),
        MethodPlan::toom(4, args.cutoff),
    ];
    let bound = modulus.unwrap_or(4096);
    let mut rows = Vec::new();
    for (i, &n) in args.lengths.iter().enumerate() {
        if n == 0 {
            return Err(Error::InvalidInput("lengths must be at least 1".into()));
        }
        let a = Polynomial::random(n, bound, seed.wrapping_add(2 * i as u64), modulus)?;
        let b = Polynomial::random(n, bound, seed.wrapping_add(2 * i as u64 + 1), modulus)?;
        let oracle = schoolbook_mul(&a, &b, &mut OpCounter::new())?;
        for plan in &plans {
            let (p, c) = run_plan(&a, &b, plan)?;
            rows.push(CountRow {
                plan: plan.label(),
                length: n,
                measured_mults: c.fundamental_mults,
                predicted_mults: predicted_mult_count(plan, n),
                measured_depth: c.max_depth,
                predicted_depth: recursion_depth(plan, n),
                product_matches: p == oracle,
            });
        }
    }
    let failed = rows
        .iter()
        .any(|r| !r.product_matches || r.measured_mults != r.predicted_mults || r.measured_depth != r.predicted_depth);
    let text = if json {
        to_json_string(&rows)
    } else {
        let mut s = format!(
            "{:<16} {:>7} {:>12} {:>12} {:>6} {:>6} {}\n",
            "plan", "length", "mults", "predicted", "depth", "pred", "product"
        );
        for r in &rows {
            s.push_str(&format!(
                "{:<16} {:>7} {:>12} {:>12} {:>6} {:>6} {}\n",
                r.plan,
                r.length,
                r.measured_mults,
                r.predicted_mults,
                r.measured_depth,
                r.predicted_depth,
                if r.product_matches { "ok" } else { "MISMATCH" }
            ));
        }
        s
    };
    Ok(Outcome {
        text,
        self_check_failed: failed,
    })
}

fn record_format(cli: &Cli, path: &Path) -> RecordFormat {
    match cli.format {
        Some(OutputFormat::Csv) => RecordFormat::Csv,
        Some(OutputFormat::Json) => RecordFormat::Json,
        _ => RecordFormat::from_path(path),
    }
}

fn bench(args: &BenchArgs, cli: &Cli, stderr: &mut dyn Write) -> Result<String> {
    let spec = BenchmarkSpec {
        degrees: args.degrees.clone(),
        plans: if args.plans.is_empty() {
            default_plans()
        } else {
            args.plans.clone()
        },
        load_levels_pct: args.loads.clone().map_or_else(default_load_sweep, |l| l.0),
        loaded_workers: args.loaded_workers,
        runs: args.runs,
        warmup_runs: args.warmup,
        seed: cli.seed.unwrap_or(1),
        modulus: Some(cli.modulus.unwrap_or(crate::bench::DEFAULT_MODULUS)),
        ..BenchmarkSpec::default()
    };
    let _ = writeln!(
        stderr,
        "benchmarking {} cells x {} runs on {} logical cores",
        spec.cell_count(),
        spec.runs,
        host_logical_cores()
    );
    let records = run_benchmark(&spec)?;
    if let Some(path) = args.out.as_ref().or(cli.output.as_ref()) {
        export_records(&records, record_format(cli, path), path)?;
        save_json(&HostMetadata::current(), &metadata_path(path))?;
    }
    Ok(format_stats_table(&aggregate(&records)))
}

fn calibrate_cmd(args: &CalibrateArgs, cli: &Cli) -> Result<String> {
    let records = import_records(&args.records, RecordFormat::from_path(&args.records))?;
    let bands = if args.bands.is_empty() {
        let lo = records.iter().map(|r| r.degree).min();
        let hi = records.iter().map(|r| r.degree).max();
        match (lo, hi) {
            (Some(lo), Some(hi)) => vec![DegreeBand::new(lo, hi)],
            _ => return Err(Error::InvalidInput(format!("{}: no records", args.records.display()))),
        }
    } else {
        args.bands.clone()
    };
    let table = calibrate(&records, &bands)?;
    let out = args.out.as_ref().or(cli.output.as_ref());
    if let Some(path) = out {
        save_rules(&table, path)?;
    }
    let mut text = String::new();
    for r in &table.entries {
        text.push_str(&format!(
            "band [{}, {}]: parallel beats karatsuba below {:.1}% load, beats sequential toom below {:.1}% (parallel {}, karatsuba {}, sequential {})\n",
            r.degree_band.min,
            r.degree_band.max,
            r.thresholds.parallel_vs_karatsuba_pct,
            r.thresholds.parallel_vs_sequential_pct,
            r.plans.toom_parallel,
            r.plans.karatsuba,
            r.plans.toom_sequential,
        ));
    }
    if out.is_none() {
        text.push_str(&to_json_string(&table));
    }
    Ok(text)
}

fn select(args: &SelectArgs) -> Result<String> {
    if !(0.0..=100.0).contains(&args.load) {
        return Err(Error::InvalidInput(format!("load {}% is outside [0, 100]", args.load)));
    }
    let table = load_rules(&args.rules)?;
    let cores = args.cores.unwrap_or(host_logical_cores() as u32);
    let plan = select_method(
        &table,
        &SystemState {
            degree: args.degree,
            load_pct: args.load,
            available_cores: cores,
        },
    );
    Ok(serde_json::to_string(&plan).expect("plan serializes") + "\n")
}

fn simulate(args: &SimulateArgs, cli: &Cli) -> Result<String> {
    let mut scenario: Scenario = load_json(&args.scenario)?;
    if let Some(seed) = cli.seed {
        scenario.seed = seed;
    }
    let table = load_rules(&args.rules)?;
    let report = if args.live {
        run_simulation_with(
            &scenario,
            &table,
            LiveTimer::new(scenario.seed, cli.modulus.or(Some(4096))),
        )?
    } else {
        let path = args
            .records
            .as_ref()
            .ok_or_else(|| Error::InvalidInput("simulate needs --records unless --live is given".into()))?;
        let model = TimeModel::from_records(&import_records(path, RecordFormat::from_path(path))?);
        run_simulation(&scenario, &table, &model)?
    };
    let format = if cli.format == Some(OutputFormat::Json) {
        ReportFormat::Json
    } else {
        ReportFormat::Text
    };
    Ok(render_report(&report, format))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn load_lists() {
        assert_eq!(parse_loads("0-90:5").unwrap().0.len(), 19);
        assert_eq!(parse_loads("0,10,20-30:5").unwrap().0, vec![0, 10, 20, 25, 30]);
        assert!(parse_loads("10-0:5").is_err());
        assert!(parse_loads("x").is_err());
    }

    #[test]
    fn bands() {
        assert_eq!(parse_band("1-600").unwrap(), DegreeBand::new(1, 600));
        assert!(parse_band("600").is_err());
    }

    #[test]
    fn inline_operands() {
        assert_eq!(read_operand("3,4", None).unwrap().coeffs(), &[3, 4]);
        assert_eq!(read_operand("-1, 2", None).unwrap().coeffs(), &[-1, 2]);
        assert!(read_operand("3,,4", None).is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(
            exit_code(&pqsco_core::Error::Coverage("x".into()).into()),
            EXIT_COVERAGE
        );
        assert_eq!(exit_code(&Error::Capacity("x".into())), EXIT_CAPACITY);
        assert_eq!(
            exit_code(&pqsco_core::Error::InvalidPlan("x".into()).into()),
            EXIT_INVALID
        );
    }
}
