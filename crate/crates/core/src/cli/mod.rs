//! Command-line front end.
//!
//! Every command writes a JSON report (to `--out` or stdout) and prints a
//! one-line summary to stderr. Exit codes: `0` success, `1` usage or input
//! error, `2` a finding (negative margin, inconclusive certificate), `3`
//! counterexample search exhausted without a witness.

mod spec;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

pub use spec::{load_channel, named_channel, parse_channel_json};

use crate::info::BroadcastChannel;
use crate::marton::{marton_sum_rate_max, outer_bound_sum_rate_estimate, rtd_sum_rate_max, MartonWitness, RtdPoint};
use crate::sampling::{random_channel, Seed};
use crate::search::OptimizerConfig;
use crate::stationarity::{and_stationary_sweep, xor_stationary_sweep, SweepConfig};
use crate::theorem::{search_violation, verify_binary_channel, VerificationReport, MARGIN_TOL};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_FINDING: i32 = 2;
pub const EXIT_EXHAUSTED: i32 = 3;

/// Environment variable capping the worker count (`0` or unset: one per core).
pub const THREADS_ENV: &str = "MARTON_THREADS";

#[derive(Debug, Parser)]
#[command(name = "binbc", version, about = "Sum-rate bounds and inequality verification for binary-input broadcast channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Verify the inequality over all 16 gates on a binary-input channel.
    Verify(VerifyArgs),
    /// Time-division, Marton and outer-bound sum rates.
    Sumrate(SumrateArgs),
    /// Verify a batch of seeded random channels.
    Hunt(HuntArgs),
    /// Search for a violation on a channel with three or more inputs.
    Counterexample(CounterexampleArgs),
    /// Locate stationary points of the AND or XOR case and certify each one.
    Stationarity(StationarityArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
struct SearchArgs {
    /// Lattice points per simplex axis.
    #[arg(long, default_value_t = 101)]
    grid: usize,
    /// Refinement rounds.
    #[arg(long, default_value_t = 6)]
    refine: usize,
}

impl SearchArgs {
    fn config(&self) -> OptimizerConfig {
        OptimizerConfig {
            grid_resolution: self.grid,
            refine_iterations: self.refine,
            ..OptimizerConfig::default()
        }
    }
}

#[derive(Debug, Args, Serialize)]
struct VerifyArgs {
    /// Channel name (`bssc:<skew>`, `blackwell`) or JSON file.
    #[arg(long)]
    channel: String,
    #[command(flatten)]
    #[serde(flatten)]
    search: SearchArgs,
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
    /// Also write the per-gate margins as CSV.
    #[arg(long)]
    #[serde(skip)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct SumrateArgs {
    #[arg(long)]
    channel: String,
    #[command(flatten)]
    #[serde(flatten)]
    search: SearchArgs,
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct HuntArgs {
    #[arg(long, default_value_t = 100)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 2)]
    ny: usize,
    #[arg(long, default_value_t = 2)]
    nz: usize,
    #[command(flatten)]
    #[serde(flatten)]
    search: SearchArgs,
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct CounterexampleArgs {
    #[arg(long)]
    channel: String,
    #[command(flatten)]
    #[serde(flatten)]
    search: SearchArgs,
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum GateChoice {
    And,
    Xor,
}

#[derive(Debug, Args, Serialize)]
struct StationarityArgs {
    #[arg(long)]
    channel: String,
    #[arg(long, value_enum)]
    gate: GateChoice,
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

/// The JSON document every command writes.
#[derive(Debug, Serialize)]
pub struct ReportFile<P: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub arguments: serde_json::Value,
    pub config: serde_json::Value,
    pub channel_digest: Option<String>,
    pub payload: P,
}

#[derive(Debug, Serialize)]
struct SumratePayload {
    rtd: f64,
    rtd_witness: RtdPoint,
    marton: f64,
    marton_witness: MartonWitness,
    outer_estimate: f64,
    /// `p(u, v, x)` at the outer estimate.
    outer_witness: crate::info::JointPmf,
    marton_minus_rtd: f64,
    outer_minus_marton: f64,
}

#[derive(Debug, Serialize)]
struct HuntTrial {
    seed: u64,
    channel_digest: String,
    global_min_margin: f64,
    tightest_gate: String,
}

#[derive(Debug, Serialize)]
struct HuntPayload {
    trials: u64,
    violations: Vec<u64>,
    min_margin: f64,
    worst_seed: u64,
    results: Vec<HuntTrial>,
}

struct Outcome {
    code: i32,
    summary: String,
}

fn usage(msg: impl Into<String>) -> Outcome {
    Outcome { code: EXIT_USAGE, summary: msg.into() }
}

fn to_value<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("plain data serializes")
}

fn emit<P: Serialize>(
    out: &Option<PathBuf>,
    command: &'static str,
    args: &impl Serialize,
    config: &impl Serialize,
    channel_digest: Option<String>,
    payload: P,
) -> Result<(), String> {
    let report = ReportFile {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command,
        arguments: to_value(args),
        config: to_value(config),
        channel_digest,
        payload,
    };
    let mut text = serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?;
    text.push('\n');
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| format!("{}: {e}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn binary_channel(arg: &str) -> Result<BroadcastChannel, String> {
    let bc = load_channel(arg)?;
    bc.require_binary().map_err(|e| e.to_string())?;
    Ok(bc)
}

fn margins_csv(r: &VerificationReport) -> String {
    let mut s = String::from("gate_id,gate,max_lhs,rhs_at_argmax,margin,min_margin\n");
    for g in &r.per_gate_results {
        let _ = writeln!(
            s,
            "{},{},{:e},{:e},{:e},{:e}",
            g.gate_id, g.gate, g.max_lhs, g.rhs_at_argmax, g.margin, g.min_margin
        );
    }
    s
}

fn cmd_verify(a: &VerifyArgs) -> Result<Outcome, String> {
    let bc = binary_channel(&a.channel)?;
    let cfg = a.search.config();
    let report = verify_binary_channel(&bc, &cfg).map_err(|e| e.to_string())?;
    if let Some(path) = &a.csv {
        std::fs::write(path, margins_csv(&report)).map_err(|e| format!("{}: {e}", path.display()))?;
    }
    let code = if report.holds { EXIT_OK } else { EXIT_FINDING };
    let summary = format!(
        "verify: global min margin {:.3e} ({}), tightest gate {}",
        report.global_min_margin,
        if report.holds { "holds" } else { "VIOLATED" },
        report.tightest_gate().gate
    );
    emit(&a.out, "verify", a, &cfg, Some(report.channel_digest.clone()), &report)?;
    Ok(Outcome { code, summary })
}

fn cmd_sumrate(a: &SumrateArgs) -> Result<Outcome, String> {
    let bc = binary_channel(&a.channel)?;
    let cfg = a.search.config();
    let err = |e: crate::Error| e.to_string();
    let (rtd, rtd_witness) = rtd_sum_rate_max(&bc, &cfg).map_err(err)?;
    let (marton, marton_witness) = marton_sum_rate_max(&bc, &cfg).map_err(err)?;
    let (outer_estimate, outer_witness) = outer_bound_sum_rate_estimate(&bc, &cfg).map_err(err)?;
    let payload = SumratePayload {
        rtd,
        rtd_witness,
        marton,
        marton_witness,
        outer_estimate,
        outer_witness,
        marton_minus_rtd: marton - rtd,
        outer_minus_marton: outer_estimate - marton,
    };
    let summary = format!("sumrate: rtd {rtd:.10} marton {marton:.10} outer {outer_estimate:.10}");
    emit(&a.out, "sumrate", a, &cfg, Some(bc.digest()), payload)?;
    Ok(Outcome { code: EXIT_OK, summary })
}

fn cmd_hunt(a: &HuntArgs) -> Result<Outcome, String> {
    if a.trials == 0 {
        return Ok(usage("hunt: --trials must be at least 1"));
    }
    let cfg = OptimizerConfig { seed: a.seed, ..a.search.config() };
    let mut results = Vec::with_capacity(a.trials as usize);
    for i in 0..a.trials {
        let seed = Seed(a.seed).offset(i);
        let bc = random_channel(a.ny, a.nz, seed).map_err(|e| e.to_string())?;
        let r = verify_binary_channel(&bc, &cfg).map_err(|e| e.to_string())?;
        results.push(HuntTrial {
            seed: seed.0,
            channel_digest: r.channel_digest.clone(),
            global_min_margin: r.global_min_margin,
            tightest_gate: r.tightest_gate().gate.clone(),
        });
    }
    let worst = results
        .iter()
        .min_by(|x, y| x.global_min_margin.total_cmp(&y.global_min_margin))
        .expect("at least one trial");
    let violations: Vec<u64> = results
        .iter()
        .filter(|t| t.global_min_margin < -MARGIN_TOL)
        .map(|t| t.seed)
        .collect();
    let (min_margin, worst_seed, digest) = (worst.global_min_margin, worst.seed, worst.channel_digest.clone());
    let code = if violations.is_empty() { EXIT_OK } else { EXIT_FINDING };
    let summary = format!(
        "hunt: {} trials, {} violations, min margin {min_margin:.3e} at seed {worst_seed}",
        a.trials,
        violations.len()
    );
    let payload = HuntPayload { trials: a.trials, violations, min_margin, worst_seed, results };
    emit(&a.out, "hunt", a, &cfg, Some(digest), payload)?;
    Ok(Outcome { code, summary })
}

fn cmd_counterexample(a: &CounterexampleArgs) -> Result<Outcome, String> {
    let bc = load_channel(&a.channel)?;
    if bc.input_size() < 3 {
        return Ok(usage(format!(
            "counterexample: channel has {} inputs; binary channels are covered by `verify`",
            bc.input_size()
        )));
    }
    let cfg = a.search.config();
    let search = search_violation(&bc, &cfg).map_err(|e| e.to_string())?;
    let (code, summary) = match &search.witness {
        Some(w) => (EXIT_OK, format!("counterexample: witness with margin {:.6}", w.margin)),
        None => (
            EXIT_EXHAUSTED,
            format!("counterexample: none found, min margin {:.3e}", search.min_margin),
        ),
    };
    emit(&a.out, "counterexample", a, &cfg, Some(bc.digest()), &search)?;
    Ok(Outcome { code, summary })
}

fn cmd_stationarity(a: &StationarityArgs) -> Result<Outcome, String> {
    let bc = binary_channel(&a.channel)?;
    let cfg = SweepConfig::default();
    let err = |e: crate::Error| e.to_string();
    let digest = Some(bc.digest());
    match a.gate {
        GateChoice::And => {
            let sweep = and_stationary_sweep(&bc, &cfg).map_err(err)?;
            let code = if sweep.all_certified() { EXIT_OK } else { EXIT_FINDING };
            let summary = format!(
                "stationarity and: {} stationary points, {} inconclusive, {} unconverged",
                sweep.points.len(),
                sweep.inconclusive,
                sweep.unconverged.len()
            );
            emit(&a.out, "stationarity", a, &cfg, digest, &sweep)?;
            Ok(Outcome { code, summary })
        }
        GateChoice::Xor => {
            let sweep = xor_stationary_sweep(&bc, &cfg).map_err(err)?;
            let code = if sweep.inconclusive == 0 { EXIT_OK } else { EXIT_FINDING };
            let summary = format!(
                "stationarity xor: {} stationary points, {} pass first order, {} inconclusive",
                sweep.points.len(),
                sweep.survivors,
                sweep.inconclusive
            );
            emit(&a.out, "stationarity", a, &cfg, digest, &sweep)?;
            Ok(Outcome { code, summary })
        }
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| format!("{THREADS_ENV}=`{raw}` is not a non-negative integer"))?;
    if n > 0 {
        // a pool that already exists (repeated calls in one process) is kept
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Parses `args` (including the program name) and runs the command; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return EXIT_USAGE;
    }
    let result = match &cli.command {
        Command::Verify(a) => cmd_verify(a),
        Command::Sumrate(a) => cmd_sumrate(a),
        Command::Hunt(a) => cmd_hunt(a),
        Command::Counterexample(a) => cmd_counterexample(a),
        Command::Stationarity(a) => cmd_stationarity(a),
    };
    match result {
        Ok(o) => {
            if o.code == EXIT_USAGE {
                eprintln!("error: {}", o.summary);
            } else {
                eprintln!("{}", o.summary);
            }
            o.code
        }
        Err(msg) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
    }
}
