use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use optlin::{run, CliError, Config, Experiment, Settings};

#[derive(Parser)]
#[command(
    name = "optlin",
    version,
    about = "When is the optimal estimator linear? Numerical experiments."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Gaussian source in uniform noise: estimator curves and gap sweep
    Example1(Flags),
    /// Givens rotation sweep of the two-dimensional example
    Example2(Flags),
    /// Build the matching source for a noise law
    Match(Flags),
    /// Moments of the matching source by recursion
    Moments(Flags),
    /// L_p linearity residual and linear coefficient
    LpCheck(Flags),
    /// Nonlinearity gap at two SNRs
    TwoSnr(Flags),
}

#[derive(Args, Default)]
struct Flags {
    /// Flat key = value file; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// SNR value or comma-separated list
    #[arg(long)]
    gamma: Option<String>,
    /// family[:param], e.g. uniform:1 or laplace:2
    #[arg(long)]
    noise: Option<String>,
    #[arg(long)]
    source: Option<String>,
    /// Quadrature step
    #[arg(long)]
    step: Option<String>,
    /// Half width of the tabulated range
    #[arg(long)]
    extent: Option<String>,
    #[arg(long)]
    theta_count: Option<String>,
    /// Moment recursion depth
    #[arg(long)]
    depth: Option<String>,
    /// Loss exponent (2 or 4)
    #[arg(long)]
    p: Option<String>,
    #[arg(long)]
    sweep_points: Option<String>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
}

fn settings(flags: Flags) -> Result<Settings, CliError> {
    let mut s = match &flags.config {
        Some(path) => Settings::load(path)?,
        None => Settings::default(),
    };
    let pairs = [
        ("gamma", flags.gamma),
        ("noise", flags.noise),
        ("source", flags.source),
        ("step", flags.step),
        ("extent", flags.extent),
        ("theta_count", flags.theta_count),
        ("depth", flags.depth),
        ("p", flags.p),
        ("sweep_points", flags.sweep_points),
        ("out", flags.out.map(|p| p.display().to_string())),
    ];
    for (k, v) in pairs {
        if let Some(v) = v {
            s.set(k, v);
        }
    }
    Ok(s)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, flags) = match cli.command {
        Command::Example1(f) => (Experiment::Example1, f),
        Command::Example2(f) => (Experiment::Example2, f),
        Command::Match(f) => (Experiment::Match, f),
        Command::Moments(f) => (Experiment::Moments, f),
        Command::LpCheck(f) => (Experiment::LpCheck, f),
        Command::TwoSnr(f) => (Experiment::TwoSnr, f),
    };
    let result = settings(flags)
        .and_then(|s| Config::resolve(experiment, &s))
        .and_then(|c| run(&c));
    match result {
        Ok(report) => {
            for line in &report.stdout {
                println!("{line}");
            }
            for f in &report.files {
                eprintln!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("optlin: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
