use clap::{Parser, Subcommand};
use cutcell::app::{convergence_study, run_case, validate_drag, SimConfig};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "cutcell", version, about = "Cut-cell MAC solver for 2D flow past rigid bodies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation and write the drag series and snapshots.
    Run { config: PathBuf },
    /// Compare the drag of a fixed cylinder with the short-time law.
    ValidateDrag {
        config: PathBuf,
        /// Maximum relative deviation, overrides `validate.threshold`.
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Manufactured-solution refinement study.
    Convergence { config: PathBuf },
}

fn load(path: &PathBuf) -> cutcell::Result<SimConfig> {
    let mut cfg = SimConfig::load(path)?;
    cfg.apply_env();
    Ok(cfg)
}

fn execute(cli: Cli) -> cutcell::Result<bool> {
    match cli.command {
        Command::Run { config } => {
            let cfg = load(&config)?;
            let out = run_case(&cfg)?;
            println!(
                "{} steps, {} drag records written to {}, {} snapshots, max divergence {:.3e}",
                out.final_state.step,
                out.series.len(),
                out.csv.display(),
                out.snapshots.len(),
                out.max_divergence
            );
            Ok(true)
        }
        Command::ValidateDrag { config, threshold } => {
            let mut cfg = load(&config)?;
            if let Some(t) = threshold {
                cfg.validate.threshold = t;
                cfg.validate()?;
            }
            let report = validate_drag(&cfg)?;
            print!("{}", report.render(&cfg));
            Ok(report.passed)
        }
        Command::Convergence { config } => {
            let cfg = load(&config)?;
            let report = convergence_study(&cfg)?;
            print!("{}", report.render());
            Ok(report.passed)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
