use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fedalign_cli::compare::{compare_report, load_summary};
use fedalign_cli::config::{parse_config, ExperimentConfig};
use fedalign_cli::experiment::{run_experiment, SUMMARY_FILE};
use fedalign_cli::presets::{load_preset, preset_text, PRESETS};
use fedalign_cli::CliError;

/// Prioritized federated learning experiments.
///
/// Log verbosity follows the FEDALIGN_LOG environment variable
/// (error, warn, info, debug, trace); the default is warn.
#[derive(Parser)]
#[command(name = "fedalign", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every algorithm and seed of an experiment config.
    Run {
        /// Path to a TOML config, or the name of a bundled preset.
        config: String,
        /// Replace the config's seed list with this single seed.
        #[arg(long)]
        seed_override: Option<u64>,
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Skip the oracle, noise estimates and bound diagnostics.
        #[arg(long)]
        no_diagnostics: bool,
    },
    /// Tabulate seed-averaged results from one or more summary.json files.
    Compare {
        #[arg(required = true)]
        summaries: Vec<PathBuf>,
        /// Also write the table as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Bundled example configs.
    Presets {
        #[command(subcommand)]
        action: PresetAction,
    },
}

#[derive(Subcommand)]
enum PresetAction {
    List,
    /// Print a preset's TOML.
    Show { name: String },
}

fn load(config: &str) -> Result<ExperimentConfig, CliError> {
    let path = Path::new(config);
    if !path.exists() && preset_text(config).is_some() {
        load_preset(config)
    } else {
        parse_config(path)
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config, seed_override, output_dir, no_diagnostics } => {
            let mut cfg = load(&config)?;
            if let Some(seed) = seed_override {
                cfg.seeds = vec![seed];
            }
            if let Some(dir) = output_dir {
                cfg.output_dir = dir;
            }
            if no_diagnostics {
                cfg.diagnostics.enabled = false;
            }
            let summary = run_experiment(&cfg)?;
            let path = cfg.output_dir.join(SUMMARY_FILE);
            if !summary.complete {
                let failed = summary.records.iter().filter(|r| r.error.is_some()).count();
                return Err(CliError::Runtime(format!(
                    "{failed} of {} runs failed; partial results in {}",
                    summary.records.len(),
                    path.display()
                )));
            }
            println!("wrote {}", path.display());
        }
        Command::Compare { summaries, csv } => {
            let loaded = summaries.iter().map(|p| load_summary(p)).collect::<Result<Vec<_>, _>>()?;
            let table = compare_report(&loaded)?;
            print!("{}", table.to_text());
            if let Some(path) = csv {
                std::fs::write(&path, table.to_csv()?)?;
            }
        }
        Command::Presets { action: PresetAction::List } => {
            for (name, _) in PRESETS {
                println!("{name}");
            }
        }
        Command::Presets { action: PresetAction::Show { name } } => {
            let text = preset_text(&name).ok_or_else(|| {
                CliError::Config(vec![format!("unknown preset {name:?}; run `fedalign presets list`")])
            })?;
            print!("{text}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("FEDALIGN_LOG", "warn")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
