//! Command-line front end: classify characteristic roots of constant-
//! coefficient strictly hyperbolic operators, predict L^p-L^q decay
//! envelopes, and verify them against measured norm surrogates.

mod config;
mod pipeline;
mod report;

use clap::{Args, Parser, Subcommand};
use config::PqPair;
use pipeline::CliError;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "hypdecay",
    version,
    about = "Characteristic-root classification and L^p-L^q decay verification \
             for constant-coefficient hyperbolic operators"
)]
struct Cli {
    /// Worker thread cap (default: all cores; HYPDECAY_THREADS overrides
    /// the default, this flag overrides both).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Classify the roots and emit the decay prediction.
    Analyze(RunArgs),
    /// Full pipeline: classification, prediction, and measured decay fits.
    Verify(RunArgs),
    /// Sample |u(t, x)| snapshots on the dual physical grid (n = 1).
    Solve(SolveArgs),
    /// Generate a Grad moment-system symbol, matrix dump, and starter config.
    Grad(GradArgs),
    /// Generate a wave-family symbol and starter config.
    Wave(WaveArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Run configuration JSON.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: HYPDECAY_OUT, then the config, then ".").
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the configured (p, q) pairs, e.g. --pq 1,inf --pq 2,2.
    #[arg(long)]
    pq: Vec<String>,
    /// Override the power-exponent comparison tolerance.
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated snapshot times.
    #[arg(long, default_value = "0,5,20,80")]
    times: String,
}

#[derive(Args)]
struct GradArgs {
    /// Space dimension.
    #[arg(long, default_value_t = 1)]
    n: usize,
    /// Highest retained moment order.
    #[arg(long)]
    truncation: u32,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct WaveArgs {
    #[arg(long, default_value_t = 1)]
    n: usize,
    /// Damping coefficient of d_t u.
    #[arg(long, default_value_t = 0.0)]
    delta: f64,
    /// Squared propagation speed.
    #[arg(long, default_value_t = 1.0)]
    c2: f64,
    /// Mass term (negative is unstable at low frequencies).
    #[arg(long, default_value_t = 0.0)]
    mu: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_threads(cli.threads);
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

fn init_threads(flag: Option<usize>) {
    let count = flag.or_else(|| {
        std::env::var("HYPDECAY_THREADS").ok().and_then(|v| v.parse().ok())
    });
    if let Some(k) = count {
        // Errors only if a global pool already exists, which is fine.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(k.max(1)).build_global();
    }
}

fn dispatch(cmd: Cmd) -> Result<(), CliError> {
    match cmd {
        Cmd::Analyze(args) => run_configured(args, false),
        Cmd::Verify(args) => run_configured(args, true),
        Cmd::Solve(args) => {
            let cfg = pipeline::load_config(&args.config)?;
            let out = pipeline::resolve_out_dir(args.out, cfg.out_dir.as_deref());
            let times = parse_times(&args.times)?;
            let files = pipeline::run_solve(&cfg, &out, &times)?;
            println!("solve: wrote {} to {}", files.join(", "), out.display());
            Ok(())
        }
        Cmd::Grad(args) => {
            let out = pipeline::resolve_out_dir(args.out, None);
            let files = pipeline::run_grad(args.n, args.truncation, &out)?;
            println!(
                "grad(n = {}, truncation = {}): wrote {} to {}",
                args.n,
                args.truncation,
                files.join(", "),
                out.display()
            );
            Ok(())
        }
        Cmd::Wave(args) => {
            let out = pipeline::resolve_out_dir(args.out, None);
            let (files, case) = pipeline::run_wave(args.n, args.delta, args.c2, args.mu, &out)?;
            println!(
                "wave(n = {}, delta = {}, c2 = {}, mu = {}): {case}; wrote {} to {}",
                args.n,
                args.delta,
                args.c2,
                args.mu,
                files.join(", "),
                out.display()
            );
            Ok(())
        }
    }
}

fn run_configured(args: RunArgs, verify: bool) -> Result<(), CliError> {
    let mut cfg = pipeline::load_config(&args.config)?;
    if !args.pq.is_empty() {
        cfg.pq = args
            .pq
            .iter()
            .map(|text| PqPair::parse(text))
            .collect::<Result<Vec<_>, _>>()
            .map_err(CliError::Config)?;
    }
    if let Some(tol) = args.tol {
        if !(tol > 0.0) {
            return Err(CliError::Config(format!("--tol must be positive, got {tol}")));
        }
        cfg.tolerances.power = tol;
    }
    let out = pipeline::resolve_out_dir(args.out, cfg.out_dir.as_deref());
    let summary = pipeline::run_pipeline(&cfg, &out, verify)?;
    let mode = if verify { "verify" } else { "analyze" };
    let mut line = format!(
        "{mode}: stability {}, prediction {}",
        summary.stability,
        if summary.applicable { "applicable" } else { "not applicable" }
    );
    if let Some((pass, fail, better, na)) = summary.verification_counts {
        line.push_str(&format!(
            "; verification {pass} pass, {fail} fail, {better} better, {na} not applicable"
        ));
    }
    line.push_str(&format!("; wrote {} to {}", summary.files.join(", "), out.display()));
    println!("{line}");
    Ok(())
}

fn parse_times(text: &str) -> Result<Vec<f64>, CliError> {
    let times: Result<Vec<f64>, _> =
        text.split(',').map(|part| part.trim().parse::<f64>()).collect();
    let times = times.map_err(|_| CliError::Config(format!("bad --times list {text:?}")))?;
    if times.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(CliError::Config("snapshot times must be finite and nonnegative".into()));
    }
    Ok(times)
}
