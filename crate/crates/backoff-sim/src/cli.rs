//! Command-line entry point.
//!
//! Exit codes: 0 on success, 1 when a trial fails at runtime or a `verify`
//! check fails, 2 on argument or configuration errors.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::Rng;
use serde::Serialize;

use crate::checks::{run_suite, SUITE_NAMES};
use crate::costmodel::{detailed_total_time, CostBreakdown, PacketShape};
use crate::domain::{PolicySpec, RunStats, TimingParams};
use crate::engine::{run_trial, TrialConfig};
use crate::harness::{run_sweep, sweep_csv, sweep_manifest, Metric, SweepSpec};
use crate::tracefmt;

#[derive(Parser)]
#[command(
    name = "backoff-sim",
    version,
    about = "Slotted-channel contention-resolution simulator with an 802.11-style cost model"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single seeded trial; prints run statistics and the cost
    /// breakdown as JSON
    Run(RunArgs),
    /// Run a battery of trials over batch sizes and policies; writes
    /// sweep.csv and manifest.json
    Sweep(SweepArgs),
    /// Run a named verification suite (claims, figures-small,
    /// figures-large, bestofk) and print a pass/fail table
    Verify(VerifyArgs),
    /// Run a single seeded trial and write its slot trace
    ExportTrace(ExportTraceArgs),
}

#[derive(Args)]
struct TrialFlags {
    /// Policy: beb, lb, llb, llb-rep, stb, fixed:W or bestof:k
    #[arg(long)]
    policy: String,
    /// Batch size (stations, one packet each)
    #[arg(long)]
    n: usize,
    /// Root seed; drawn from system entropy (and printed) when omitted
    #[arg(long)]
    seed: Option<u64>,
    /// Contention-window cap
    #[arg(long, default_value_t = 1024)]
    cap: u32,
    /// Remove the contention-window cap (abstract-model behavior)
    #[arg(long)]
    no_cap: bool,
    /// Safety bound on trial length in slots (default: 10^4 * n)
    #[arg(long)]
    max_slots: Option<u64>,
}

impl TrialFlags {
    fn config(&self) -> Result<TrialConfig, CliError> {
        let mut policy: PolicySpec = self
            .policy
            .parse()
            .map_err(|e| CliError::Usage(format!("{e}")))?;
        policy.window_cap = if self.no_cap { None } else { Some(self.cap) };
        let seed = resolve_seed(self.seed);
        let mut cfg = TrialConfig::new(self.n, policy, seed);
        if let Some(max_slots) = self.max_slots {
            cfg.max_slots = max_slots;
        }
        cfg.validate()
            .map_err(|e| CliError::Usage(format!("{e}")))?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    trial: TrialFlags,
    /// Payload size in bytes (64-byte protocol overhead is added)
    #[arg(long, default_value_t = 64)]
    payload: u32,
    /// Directory to also write run.json into
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// JSON config file mirroring the sweep spec fields; flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated batch sizes, e.g. 50,100,150
    #[arg(long)]
    n_values: Option<String>,
    /// Batch-size range start:stop:step, e.g. 1000:100000:33000
    #[arg(long)]
    n_range: Option<String>,
    /// Comma-separated policies, e.g. beb,lb,llb,stb
    #[arg(long)]
    policies: Option<String>,
    /// Trials per (n, policy) point
    #[arg(long)]
    trials: Option<usize>,
    /// Payload size in bytes
    #[arg(long)]
    payload: Option<u32>,
    /// Root seed; drawn from system entropy (and printed) when omitted
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated metrics (cw_slots, collisions, max_ack_timeouts,
    /// half_done_slot, estimation_slots, simple_total_us, detailed_total_us)
    #[arg(long)]
    metrics: Option<String>,
    /// Contention-window cap applied to policies given via --policies
    #[arg(long, default_value_t = 1024)]
    cap: u32,
    /// Remove the contention-window cap (abstract-model behavior)
    #[arg(long)]
    no_cap: bool,
    /// Output directory for sweep.csv and manifest.json
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Cap on parallel trial workers (default: available CPUs)
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Suite name: claims, figures-small, figures-large or bestofk
    suite: String,
    /// Root seed for every battery in the suite
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Cap on parallel trial workers (default: available CPUs)
    #[arg(long)]
    workers: Option<usize>,
    /// File to also write the table into
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExportTraceArgs {
    #[command(flatten)]
    trial: TrialFlags,
    /// Trace file to write; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    fn report(&self) -> i32 {
        match self {
            CliError::Usage(msg) => {
                eprintln!("error: {msg}");
                eprintln!("run with --help for usage");
                2
            }
            CliError::Runtime(msg) => {
                eprintln!("error: {msg}");
                1
            }
        }
    }
}

fn resolve_seed(seed: Option<u64>) -> u64 {
    match seed {
        Some(s) => s,
        None => {
            let s: u64 = rand::rng().random();
            eprintln!("seed: {s}");
            s
        }
    }
}

fn with_workers<T>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError>
where
    T: Send,
{
    match workers {
        None => Ok(f()),
        Some(0) => Err(CliError::Usage("--workers must be >= 1".into())),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

#[derive(Serialize)]
struct RunOutput<'a> {
    config: &'a TrialConfig,
    stats: &'a RunStats,
    cost: &'a CostBreakdown,
}

fn cmd_run(args: &RunArgs) -> Result<(), CliError> {
    let cfg = args.trial.config()?;
    let shape = PacketShape::with_payload(args.payload)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let trace = run_trial(&cfg).map_err(|e| CliError::Runtime(e.to_string()))?;
    let cost = detailed_total_time(&trace.records, shape, &TimingParams::default());
    let output = RunOutput {
        config: &cfg,
        stats: &trace.stats,
        cost: &cost,
    };
    let text = serde_json::to_string_pretty(&output).expect("run output serializes");
    println!("{text}");
    if let Some(dir) = &args.out {
        fs::create_dir_all(dir).map_err(|e| CliError::Runtime(e.to_string()))?;
        write_file(&dir.join("run.json"), &format!("{text}\n"))?;
    }
    Ok(())
}

fn parse_n_values(args: &SweepArgs) -> Result<Option<Vec<usize>>, CliError> {
    match (&args.n_values, &args.n_range) {
        (Some(_), Some(_)) => Err(CliError::Usage(
            "--n-values and --n-range are mutually exclusive".into(),
        )),
        (Some(list), None) => {
            let values: Result<Vec<usize>, _> =
                list.split(',').map(|v| v.trim().parse::<usize>()).collect();
            values
                .map(Some)
                .map_err(|_| CliError::Usage(format!("bad --n-values {list:?}")))
        }
        (None, Some(range)) => {
            let parts: Vec<&str> = range.split(':').collect();
            let [start, stop, step] = parts.as_slice() else {
                return Err(CliError::Usage(format!(
                    "bad --n-range {range:?}, expected start:stop:step"
                )));
            };
            let parse = |s: &str| {
                s.parse::<usize>()
                    .map_err(|_| CliError::Usage(format!("bad --n-range {range:?}")))
            };
            let (start, stop, step) = (parse(start)?, parse(stop)?, parse(step)?);
            if step == 0 {
                return Err(CliError::Usage("--n-range step must be > 0".into()));
            }
            Ok(Some((start..=stop).step_by(step).collect()))
        }
        (None, None) => Ok(None),
    }
}

fn build_sweep_spec(args: &SweepArgs) -> Result<SweepSpec, CliError> {
    let mut spec = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| {
                CliError::Usage(format!("cannot read config {}: {e}", path.display()))
            })?;
            serde_json::from_str::<SweepSpec>(&text)
                .map_err(|e| CliError::Usage(format!("bad config: {e}")))?
        }
        None => SweepSpec {
            n_values: Vec::new(),
            policies: Vec::new(),
            trials: 30,
            shape: PacketShape::default(),
            params: TimingParams::default(),
            seed: 0,
            metrics: vec![Metric::CwSlots, Metric::Collisions],
        },
    };
    if let Some(values) = parse_n_values(args)? {
        spec.n_values = values;
    }
    if let Some(list) = &args.policies {
        let cap = if args.no_cap { None } else { Some(args.cap) };
        let mut policies = Vec::new();
        for name in list.split(',') {
            let mut p: PolicySpec = name
                .trim()
                .parse()
                .map_err(|e| CliError::Usage(format!("{e}")))?;
            p.window_cap = cap;
            policies.push(p);
        }
        spec.policies = policies;
    }
    if let Some(trials) = args.trials {
        spec.trials = trials;
    }
    if let Some(payload) = args.payload {
        spec.shape =
            PacketShape::with_payload(payload).map_err(|e| CliError::Usage(e.to_string()))?;
    }
    if args.seed.is_some() || args.config.is_none() {
        spec.seed = resolve_seed(args.seed);
    }
    if let Some(metrics) = &args.metrics {
        let parsed: Result<Vec<Metric>, _> =
            metrics.split(',').map(|m| m.trim().parse()).collect();
        spec.metrics = parsed.map_err(|e| CliError::Usage(e.to_string()))?;
    }
    spec.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(spec)
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn cmd_sweep(args: &SweepArgs) -> Result<(), CliError> {
    let spec = build_sweep_spec(args)?;
    let result = with_workers(args.workers, || run_sweep(&spec))?
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    fs::create_dir_all(&args.out).map_err(|e| CliError::Runtime(e.to_string()))?;
    let csv_path = args.out.join("sweep.csv");
    let manifest_path = args.out.join("manifest.json");
    write_file(&csv_path, &sweep_csv(&result))?;
    write_file(&manifest_path, &sweep_manifest(&spec))?;
    println!("wrote {}", csv_path.display());
    println!("wrote {}", manifest_path.display());
    Ok(())
}

fn cmd_verify(args: &VerifyArgs) -> Result<i32, CliError> {
    let results = with_workers(args.workers, || run_suite(&args.suite, args.seed))?
        .ok_or_else(|| {
            CliError::Usage(format!(
                "unknown suite {:?}; available: {}",
                args.suite,
                SUITE_NAMES.join(", ")
            ))
        })?;
    let mut table = String::new();
    for check in &results {
        table.push_str(&check.line());
        table.push('\n');
    }
    let failed = results.iter().filter(|c| !c.passed).count();
    table.push_str(&format!(
        "suite {}: {}/{} checks passed\n",
        args.suite,
        results.len() - failed,
        results.len()
    ));
    print!("{table}");
    if let Some(path) = &args.out {
        write_file(path, &table)?;
    }
    Ok(if failed == 0 { 0 } else { 1 })
}

fn cmd_export_trace(args: &ExportTraceArgs) -> Result<(), CliError> {
    let cfg = args.trial.config()?;
    let trace = run_trial(&cfg).map_err(|e| CliError::Runtime(e.to_string()))?;
    let mut buf = Vec::new();
    tracefmt::write_trace(&mut buf, &trace.records).expect("write to vec");
    match &args.out {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent).map_err(|e| CliError::Runtime(e.to_string()))?;
            }
            fs::write(path, &buf)
                .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
        }
        None => {
            std::io::stdout()
                .write_all(&buf)
                .map_err(|e| CliError::Runtime(e.to_string()))?;
        }
    }
    Ok(())
}

/// Parses the argument list and runs the selected command, returning the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match &cli.command {
        Command::Run(args) => cmd_run(args).map(|()| 0),
        Command::Sweep(args) => cmd_sweep(args).map(|()| 0),
        Command::Verify(args) => cmd_verify(args),
        Command::ExportTrace(args) => cmd_export_trace(args).map(|()| 0),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => e.report(),
    }
}
