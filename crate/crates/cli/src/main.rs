use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use tradenet::config::RunConfig;
use tradenet::experiments::{self, Report};
use tradenet::Error;

#[derive(Parser)]
#[command(name = "tradenet", version, about = "Kinetic wealth exchange on growing trade networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One ensemble at the configured size and exponents.
    Simulate(RunArgs),
    /// Fits along alpha = beta for each entry of `sweep_alphas`.
    Sweep(RunArgs),
    /// Giant-component growth over `sizes` and the threshold exponent.
    Percolation(RunArgs),
    /// Scaling collapse of degree, weight and strength tails over `sizes`.
    Collapse(RunArgs),
    /// Wealth tail exponent at each of `sizes`.
    Pareto(RunArgs),
    /// Weights of fully connected networks for each of `sweep_alphas`.
    Clique(RunArgs),
    /// The (inf, 0), (0, inf) and (inf, inf) limits and their topology.
    Corners(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if absent.
    #[arg(long)]
    out: PathBuf,
    /// Replaces `master_seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides one configuration key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Overwrite an existing output directory.
    #[arg(long)]
    force: bool,
    /// Worker threads (default: all available).
    #[arg(long)]
    threads: Option<usize>,
}

const EXIT_USAGE: u8 = 1;
const EXIT_RUNTIME: u8 = 2;
const EXIT_NOT_CONVERGED: u8 = 3;

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Config { .. } | Error::InvalidParameter(_) | Error::OutputExists(_)) => EXIT_USAGE,
        Some(Error::NoConvergedRealizations { .. }) => EXIT_NOT_CONVERGED,
        _ => EXIT_RUNTIME,
    }
}

fn load_config(args: &RunArgs) -> Result<RunConfig> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| Error::InvalidParameter(format!("cannot read {}: {e}", args.config.display())))?;
    let mut overrides = args.overrides.clone();
    if let Some(seed) = args.seed {
        overrides.push(format!("master_seed={seed}"));
    }
    let cfg = RunConfig::parse_with_overrides(&text, &overrides)
        .with_context(|| format!("in {}", args.config.display()))?;
    cfg.validate().with_context(|| format!("in {}", args.config.display()))?;
    Ok(cfg)
}

fn finish(out: &Path, name: &str, report: &dyn Report, cfg: &RunConfig, force: bool) -> Result<()> {
    experiments::write_report(out, name, cfg, report, force)
        .with_context(|| format!("writing {}", out.display()))?;
    let (_, table) = report.summary_csv();
    print!("{table}");
    Ok(())
}

fn run(command: &Command) -> Result<()> {
    let (name, args) = match command {
        Command::Simulate(a) => ("simulate", a),
        Command::Sweep(a) => ("sweep", a),
        Command::Percolation(a) => ("percolation", a),
        Command::Collapse(a) => ("collapse", a),
        Command::Pareto(a) => ("pareto", a),
        Command::Clique(a) => ("clique", a),
        Command::Corners(a) => ("corners", a),
    };
    let cfg = load_config(args)?;
    // fail before any simulation if the directory is taken
    tradenet::output::prepare_output_dir(&args.out, args.force)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = args.threads {
        if t == 0 {
            return Err(Error::InvalidParameter("--threads must be positive".into()).into());
        }
        builder = builder.num_threads(t);
    }
    let pool = builder.build().context("starting worker pool")?;
    pool.install(|| -> Result<()> {
        let out = &args.out;
        match command {
            Command::Simulate(_) => {
                let result = experiments::simulate(&cfg)?;
                experiments::write_simulation(out, &result, args.force)
                    .with_context(|| format!("writing {}", out.display()))?;
                let m = &result.manifest;
                println!(
                    "{} of {} realizations included ({} not converged); output in {}",
                    m.included,
                    m.realizations,
                    m.excluded_not_converged,
                    out.display()
                );
                Ok(())
            }
            Command::Sweep(_) => finish(out, name, &experiments::sweep(&cfg)?, &cfg, args.force),
            Command::Percolation(_) => {
                let r = experiments::percolation(&cfg)?;
                finish(out, name, &r, &cfg, args.force)?;
                println!(
                    "theta {} +- {} (threshold fit), {} (collapse)",
                    r.theta.theta, r.theta.stderr, r.collapse_theta
                );
                Ok(())
            }
            Command::Collapse(_) => finish(out, name, &experiments::collapse(&cfg)?, &cfg, args.force),
            Command::Pareto(_) => finish(out, name, &experiments::pareto(&cfg)?, &cfg, args.force),
            Command::Clique(_) => finish(out, name, &experiments::clique(&cfg)?, &cfg, args.force),
            Command::Corners(_) => finish(out, name, &experiments::corners(&cfg)?, &cfg, args.force),
        }
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
