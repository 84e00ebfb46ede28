use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use seqlab::runner::resolve_output;
use seqlab::{load_config, run_config, run_suite, write_atomic, ConfigError, Experiment, ExperimentConfig, Format, RunError};

#[derive(Parser)]
#[command(name = "seqlab", version, about = "Run seqlab experiments from JSON configs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the penalized least-squares problem at one observation.
    Solve(RunArgs),
    /// Monte-Carlo width profile over a grid of radii.
    Width(RunArgs),
    /// Locate t_theta and check the width inequalities around it.
    Ttheta(RunArgs),
    /// Monte-Carlo risk, with the risk bound for the penalized estimator.
    Risk(RunArgs),
    /// Loss tail against the concentration bound.
    Tail(RunArgs),
    /// Risk comparison and t_theta stability between two points.
    Smoothness(RunArgs),
    /// Bayes-risk lower bounds for a prior.
    Bayes(RunArgs),
    /// Constant certificates and the clipping ratio demo.
    Cstar(RunArgs),
    /// Certificates plus t_theta, risk and tail checks when a set is given.
    CheckAll(RunArgs),
    /// Run every *.json config in a directory.
    Suite(SuiteArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Report path; defaults to the config's `output`, else stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args)]
struct SuiteArgs {
    dir: PathBuf,
    /// Where to write the aggregate report; stdout when absent.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn configure_threads() -> Result<(), String> {
    if let Ok(v) = std::env::var("SEQLAB_THREADS") {
        let n: usize = v
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| format!("SEQLAB_THREADS must be a positive integer, got {v:?}"))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn run_one(exp: Experiment, args: RunArgs) -> Result<bool, RunError> {
    let mut cfg = match &args.config {
        Some(p) => load_config(p)?,
        None => ExperimentConfig::default(),
    };
    match cfg.experiment {
        Some(c) if c != exp => return Err(ConfigError::ExperimentMismatch { cli: exp, config: c }.into()),
        _ => cfg.experiment = Some(exp),
    }
    let report = run_config(&cfg)?;
    let format = args.format.or(cfg.format).unwrap_or_default();
    let bytes = report.render(format);
    let out = match (&args.output, &cfg.output, &args.config) {
        (Some(o), _, _) => Some(o.clone()),
        (None, Some(o), Some(p)) => Some(resolve_output(p, o)),
        (None, Some(o), None) => Some(o.clone()),
        _ => None,
    };
    match out {
        Some(path) => {
            write_atomic(&path, &bytes)?;
            println!("{}: {} -> {}", report.name, if report.pass { "pass" } else { "FAIL" }, path.display());
        }
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(&bytes)
                .map_err(|source| RunError::Io { path: "<stdout>".into(), source })?;
        }
    }
    for c in report.failed_checks() {
        eprintln!("failed check: {c}");
    }
    eprintln!("wall time: {:.3}s", report.wall_time.as_secs_f64());
    Ok(report.pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let exp = match &cli.command {
        Command::Solve(_) => Experiment::Solve,
        Command::Width(_) => Experiment::Width,
        Command::Ttheta(_) => Experiment::Ttheta,
        Command::Risk(_) => Experiment::Risk,
        Command::Tail(_) => Experiment::Tail,
        Command::Smoothness(_) => Experiment::Smoothness,
        Command::Bayes(_) => Experiment::Bayes,
        Command::Cstar(_) => Experiment::Cstar,
        Command::CheckAll(_) => Experiment::CheckAll,
        Command::Suite(_) => Experiment::CheckAll,
    };
    let outcome = match cli.command {
        Command::Suite(args) => run_suite(&args.dir).and_then(|report| {
            let mut bytes = serde_json::to_vec_pretty(&report).expect("suite report serializes");
            bytes.push(b'\n');
            match &args.output {
                Some(p) => write_atomic(p, &bytes)?,
                None => print!("{}", String::from_utf8_lossy(&bytes)),
            }
            for f in &report.failed {
                eprintln!("failed: {f}");
            }
            Ok(report.pass)
        }),
        Command::Solve(a)
        | Command::Width(a)
        | Command::Ttheta(a)
        | Command::Risk(a)
        | Command::Tail(a)
        | Command::Smoothness(a)
        | Command::Bayes(a)
        | Command::Cstar(a)
        | Command::CheckAll(a) => run_one(exp, a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
