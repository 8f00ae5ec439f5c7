use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use minmax_cli::{replay_check, run_experiment, CliError, ExperimentConfig, Overrides};

#[derive(Parser)]
#[command(name = "minmax", version, about = "Distributed min-max optimization experiments")]
#[command(args_conflicts_with_subcommands = true)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment from a JSON config
    Run(RunArgs),
    /// Re-check trace invariants from output files
    Replay {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        report: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    quiet: bool,
}

fn run(args: RunArgs) -> Result<(), CliError> {
    let path = args.config.ok_or_else(|| CliError::Config("--config is required".into()))?;
    if !path.exists() {
        return Err(CliError::Config(format!("config file not found: {}", path.display())));
    }
    let base = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let base = std::fs::canonicalize(base)?;
    let cwd = std::env::current_dir()?;
    let ov = Overrides {
        output_dir: args.output_dir.map(|d| if d.is_absolute() { d } else { cwd.join(d) }),
        iterations: args.iterations,
        seed: args.seed,
    };
    let cfg = ExperimentConfig::load(&path)?.resolve(&base, &ov)?;
    let started = Instant::now();
    let outcome = run_experiment(&cfg)?;
    if !args.quiet {
        let r = &outcome.report.run;
        eprintln!("iterations: {}", r.iterations);
        eprintln!("sum_rho: {}", r.sum_rho);
        eprintln!("P_t: {}", r.p_t);
        if let Some(p) = r.p_star {
            eprintln!("P_star: {p}");
        }
        if let Some(e) = r.relative_error {
            eprintln!("relative error: {e:.3e} (converged: {})", r.converged.unwrap_or(false));
        }
        eprintln!("wall time: {:.3} s", started.elapsed().as_secs_f64());
        eprintln!("outputs: {}", cfg.output_dir().display());
    }
    Ok(())
}

fn replay(trace: &Path, report: &Path) -> Result<bool, CliError> {
    let outcome = replay_check(trace, report)?;
    for f in &outcome.failures {
        eprintln!("row {} (t={}): {}", f.row, f.t, f.reason);
    }
    if outcome.ok() {
        println!("ok: {} rows", outcome.rows);
    } else {
        println!("failed: {} of {} rows", outcome.failures.len(), outcome.rows);
    }
    Ok(outcome.ok())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Some(Command::Run(args)) => run(args).map(|()| true),
        Some(Command::Replay { trace, report }) => replay(&trace, &report),
        None => run(cli.run).map(|()| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
