use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use prodent_cli::config::{Estimator, MetricChoice, NRange, SystemInput};
use prodent_cli::{run_estimate, run_verify, CliError, ExperimentConfig, Report};

/// Entropy experiments on product-type dynamical systems.
#[derive(Parser)]
#[command(name = "prodent", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate an entropy rate over an (ε, n) grid.
    Estimate(EstimateArgs),
    /// Run a property suite; exits 1 if any check fails.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct EstimateArgs {
    /// JSON experiment configuration. Other flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// System spec, e.g. `full_shift:m=2` or `torus:matrix=[[2,1],[1,1]]`.
    #[arg(long, required_unless_present = "config")]
    system: Option<String>,
    /// Comma-separated ε grid.
    #[arg(long, value_delimiter = ',', required_unless_present = "config")]
    eps: Option<Vec<f64>>,
    /// `a..b`, `a..=b` or `1,3,5`.
    #[arg(long, required_unless_present = "config")]
    n: Option<String>,
    #[arg(long, value_enum)]
    estimator: Option<Estimator>,
    #[arg(long, value_enum)]
    metric: Option<MetricChoice>,
    /// Lattice mesh δ (default min ε / 4).
    #[arg(long)]
    delta: Option<f64>,
    /// Probability of symbol 1 for the ks estimator.
    #[arg(long)]
    bernoulli: Option<f64>,
    /// CSV output path (default stdout).
    #[arg(long)]
    output: Option<PathBuf>,
    /// JSON report path.
    #[arg(long)]
    json: Option<PathBuf>,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value = "all")]
    suite: String,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Directory of `cover_*.json` and `measure_*.json` fixtures.
    #[arg(long)]
    fixtures: Option<PathBuf>,
    /// JSON report path.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn build_config(a: EstimateArgs) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &a.config {
        Some(path) => ExperimentConfig::from_json(&std::fs::read_to_string(path)?)?,
        None => ExperimentConfig::new("", Vec::new(), ""),
    };
    if let Some(s) = a.system {
        cfg.system = SystemInput::Text(s);
    }
    if let Some(e) = a.eps {
        cfg.eps = e;
    }
    if let Some(n) = a.n {
        cfg.n = NRange::Text(n);
    }
    if let Some(e) = a.estimator {
        cfg.estimator = e;
    }
    if let Some(m) = a.metric {
        cfg.metric = m;
    }
    cfg.delta = a.delta.or(cfg.delta);
    cfg.bernoulli = a.bernoulli.or(cfg.bernoulli);
    cfg.output = a.output.or(cfg.output);
    cfg.report = a.json.or(cfg.report);
    cfg.checkpoint = a.checkpoint.or(cfg.checkpoint);
    Ok(cfg)
}

fn print_checks(report: &Report) {
    for c in &report.summary.checks {
        let mark = if c.passed { "PASS" } else { "FAIL" };
        println!("{mark} {} ({})", c.name, c.detail);
    }
}

fn run(cli: Cli) -> Result<bool, CliError> {
    match cli.command {
        Command::Estimate(args) => {
            let cfg = build_config(args)?;
            let report = run_estimate(&cfg)?;
            if cfg.output.is_none() {
                print!("{}", report.to_csv()?);
            }
            eprintln!(
                "rate {:.6} nats ({:.6} bits){}",
                report.summary.rate,
                report.summary.rate_bits,
                if report.summary.incomplete {
                    ", incomplete"
                } else {
                    ""
                }
            );
            for note in &report.summary.notes {
                eprintln!("note: {note}");
            }
            Ok(true)
        }
        Command::Verify(args) => {
            let report = run_verify(&args.suite, args.seed, args.fixtures.as_deref())?;
            print_checks(&report);
            if let Some(path) = &args.output {
                std::fs::write(path, report.to_json()?)?;
            }
            Ok(report.passed())
        }
    }
}

fn init_workers() -> Result<(), CliError> {
    let Ok(v) = std::env::var("PRODENT_WORKERS") else {
        return Ok(());
    };
    let n: usize = v.parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        CliError::usage(
            "PRODENT_WORKERS",
            format!("expected a positive integer, got `{v}`"),
        )
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::usage("PRODENT_WORKERS", e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = init_workers().and_then(|()| run(cli));
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e @ CliError::Usage { .. }) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
