//! Command-line front end: run policies over instances, generate inputs,
//! execute verification suites, and sweep parameter grids.
//!
//! Exit codes: 0 success, 2 input/usage error, 3 invariant or check failure.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use dsc_core::model::parse_instance;
use dsc_core::policies::PolicyKind;
use dsc_core::runner::{self, RunOptions, RunOutput};
use dsc_core::sweep::{run_sweep, to_csv, SweepConfig};
use dsc_core::verify::{run_suite, Suite};
use dsc_core::{Error, GeneratorSpec, InstanceSpec, Result, TraceEntry};

#[derive(Parser)]
#[command(
    name = "dsc",
    about = "Online disjoint set covers: engine runs, generators, verification suites, sweeps",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Color an instance online and emit a run report.
    Run {
        /// Path to an instance JSON file.
        #[arg(long, conflicts_with = "gen")]
        instance: Option<PathBuf>,
        /// Generator spec, e.g. "planted:n=8,covers=4,seed=1".
        #[arg(long)]
        gen: Option<String>,
        /// Coloring policy: det, rand, greedy, or replay.
        #[arg(long, default_value = "det")]
        policy: PolicyKind,
        /// RNG seed (rand policy).
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Enable the full per-step checker battery.
        #[arg(long)]
        check: bool,
        /// Cross-check every deterministic decision against a raw scan of
        /// all candidate colors (small palettes only).
        #[arg(long)]
        exhaustive: bool,
        /// Trace file: written for det/rand runs, read as input for replay.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Write the run report JSON here instead of stdout.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Edge-count cap for the exact offline oracle.
        #[arg(long, default_value_t = dsc_core::oracle::DEFAULT_ORACLE_BUDGET)]
        oracle_budget: usize,
    },
    /// Generate an instance from a spec string and print or save it.
    Gen {
        /// Generator spec, e.g. "uniform:n=16,m=200,size=4,seed=7".
        #[arg(long)]
        spec: String,
        /// Output path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run verification suites (all of them when none is named).
    Verify {
        /// Suite name: claims, supermartingale, counters, gain, replay, oracle.
        #[arg(long)]
        suite: Vec<String>,
    },
    /// Run a policy grid over planted instances and emit CSV.
    Sweep {
        /// Node counts, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "4,8,16")]
        ns: Vec<u32>,
        /// Planted cover counts, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "2,8")]
        covers: Vec<u64>,
        /// Policies, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "det,rand,greedy")]
        policies: Vec<PolicyKind>,
        /// Seeds, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "1,2")]
        seeds: Vec<u64>,
        /// Output path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    let outcome = dispatch(cli.command);
    eprintln!("elapsed: {} ms", started.elapsed().as_millis());
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn dispatch(command: Command) -> Result<ExitCode> {
    match command {
        Command::Run {
            instance,
            gen,
            policy,
            seed,
            check,
            exhaustive,
            trace,
            report,
            oracle_budget,
        } => cmd_run(
            instance,
            gen,
            policy,
            seed,
            check,
            exhaustive,
            trace,
            report,
            oracle_budget,
        ),
        Command::Gen { spec, out } => cmd_gen(&spec, out),
        Command::Verify { suite } => cmd_verify(&suite),
        Command::Sweep {
            ns,
            covers,
            policies,
            seeds,
            out,
        } => cmd_sweep(ns, covers, policies, seeds, out),
    }
}

fn load_instance(path: Option<PathBuf>, gen: Option<String>) -> Result<InstanceSpec> {
    match (path, gen) {
        (Some(p), None) => parse_instance(&fs::read_to_string(p)?),
        (None, Some(spec)) => spec.parse::<GeneratorSpec>()?.generate(),
        (None, None) => Err(Error::InvalidArgument(
            "provide an instance with --instance FILE or --gen SPEC".to_string(),
        )),
        (Some(_), Some(_)) => unreachable!("clap rejects --instance with --gen"),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_run(
    instance: Option<PathBuf>,
    gen: Option<String>,
    policy: PolicyKind,
    seed: u64,
    check: bool,
    exhaustive: bool,
    trace: Option<PathBuf>,
    report: Option<PathBuf>,
    oracle_budget: usize,
) -> Result<ExitCode> {
    let inst = load_instance(instance, gen)?;
    let output: RunOutput = if policy == PolicyKind::Replay {
        let path = trace.clone().ok_or_else(|| {
            Error::InvalidArgument("the replay policy needs --trace FILE as input".to_string())
        })?;
        let entries: Vec<TraceEntry> = serde_json::from_str(&fs::read_to_string(path)?)?;
        runner::replay(&inst, &entries, check, oracle_budget)?
    } else {
        let opts = RunOptions {
            policy,
            seed,
            check,
            exhaustive,
            trace: trace.is_some(),
            oracle_budget,
        };
        let out = runner::run(&inst, &opts)?;
        if let Some(path) = &trace {
            fs::write(path, serde_json::to_string_pretty(&out.trace)?)?;
        }
        out
    };
    let json = output.report.to_json()?;
    match report {
        Some(path) => fs::write(path, json)?,
        None => println!("{json}"),
    }
    eprintln!(
        "policy {} on {} edges: gain {}, min degree {}",
        output.report.policy, output.report.edges, output.report.gain, output.report.min_degree
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_gen(spec: &str, out: Option<PathBuf>) -> Result<ExitCode> {
    let instance = spec.parse::<GeneratorSpec>()?.generate()?;
    let json = instance.to_json();
    match out {
        Some(path) => fs::write(path, json)?,
        None => println!("{json}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(names: &[String]) -> Result<ExitCode> {
    let suites: Vec<Suite> = if names.is_empty() {
        Suite::ALL.to_vec()
    } else {
        names
            .iter()
            .map(|s| s.parse())
            .collect::<Result<Vec<_>>>()?
    };
    let mut all_passed = true;
    for suite in suites {
        let report = run_suite(suite);
        print!("{}", report.render());
        all_passed &= report.passed;
    }
    Ok(if all_passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(3)
    })
}

fn cmd_sweep(
    ns: Vec<u32>,
    covers: Vec<u64>,
    policies: Vec<PolicyKind>,
    seeds: Vec<u64>,
    out: Option<PathBuf>,
) -> Result<ExitCode> {
    if ns.is_empty() || covers.is_empty() || policies.is_empty() || seeds.is_empty() {
        return Err(Error::InvalidArgument(
            "sweep needs at least one value in each of --ns, --covers, --policies, --seeds"
                .to_string(),
        ));
    }
    if policies.contains(&PolicyKind::Replay) {
        return Err(Error::InvalidArgument(
            "the replay policy consumes a trace and cannot be swept".to_string(),
        ));
    }
    let rows = run_sweep(&SweepConfig {
        ns,
        covers,
        policies,
        seeds,
    })?;
    let csv = to_csv(&rows);
    match out {
        Some(path) => fs::write(path, csv)?,
        None => print!("{csv}"),
    }
    Ok(ExitCode::SUCCESS)
}
