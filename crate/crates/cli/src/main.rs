//! `slk`: run presets or JSON configs of the SLK annealing simulator.
//!
//! Exit status is 0 on success, 1 when the command line or config is
//! invalid, and 2 when a run fails (non-finite state, solver failure, I/O).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use slk_core::experiments::{run_ensemble, run_experiment, run_spectrum, ExperimentConfig, Manifest, PRESETS};
use slk_core::Error;

/// Default output directory when neither `--out` nor the config sets one.
const OUTPUT_DIR_ENV: &str = "SLK_OUTPUT_DIR";

#[derive(Debug, Parser)]
#[command(
    name = "slk",
    version,
    about = "Dissipative quantum annealing with the Schrödinger-Langevin-Kostin equation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one experiment and write series, snapshots and a manifest.
    Run(Target),
    /// Write the lowest eigenvalues and the ground state of the Hamiltonian.
    Spectrum {
        #[command(flatten)]
        target: Target,
        /// Number of eigenvalues.
        #[arg(long, default_value_t = 10)]
        count: usize,
    },
    /// Run a disorder ensemble with seeds seed, seed+1, ...
    Ensemble {
        #[command(flatten)]
        target: Target,
        #[arg(long, short = 'n', default_value_t = 20)]
        realizations: usize,
    },
    /// Check a config without running it and print its resolved form.
    ValidateConfig {
        /// Config file (JSON); a run manifest is accepted too.
        file: Option<PathBuf>,
        /// Built-in preset, see `slk list-presets`.
        #[arg(long, conflicts_with = "file", required_unless_present = "file")]
        preset: Option<String>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// List the built-in presets.
    ListPresets,
}

#[derive(Debug, Args)]
struct Target {
    /// Built-in preset, see `slk list-presets`.
    #[arg(long, conflicts_with = "config", required_unless_present = "config")]
    preset: Option<String>,
    /// Config file (JSON); a run manifest is accepted too.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config field, e.g. `--set lattice.g_factor=3`. Repeatable;
    /// applied after the config file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory. Falls back to the config's `output_dir`, then to
    /// $SLK_OUTPUT_DIR, then to `slk-output/<preset or kind>`.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load(preset: Option<&str>, file: Option<&PathBuf>, overrides: &[String]) -> Result<ExperimentConfig, Error> {
    let base = match (preset, file) {
        (Some(name), _) => ExperimentConfig::preset(name)?,
        (None, Some(path)) => ExperimentConfig::from_file(path)?,
        (None, None) => unreachable!("clap requires a preset or a config"),
    };
    base.with_overrides(overrides)
}

impl Target {
    fn config(&self) -> Result<ExperimentConfig, Error> {
        let mut cfg = load(self.preset.as_deref(), self.config.as_ref(), &self.overrides)?;
        let dir = self
            .out
            .clone()
            .or(cfg.output_dir.clone())
            .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| {
                let name = self.preset.as_deref().unwrap_or(cfg.kind.name());
                PathBuf::from("slk-output").join(name)
            });
        cfg.output_dir = Some(dir);
        Ok(cfg)
    }
}

fn report(manifest: &Manifest, cfg: &ExperimentConfig) {
    let dir = cfg.output_dir.clone().unwrap_or_default();
    println!("wrote {} files to {}", manifest.files.len(), dir.display());
    for (key, value) in &manifest.diagnostics {
        println!("  {key} = {value}");
    }
}

fn dispatch(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run(target) => {
            let cfg = target.config()?;
            let manifest = run_experiment(&cfg)?;
            report(&manifest, &cfg);
        }
        Command::Spectrum { target, count } => {
            let cfg = target.config()?;
            let manifest = run_spectrum(&cfg, count)?;
            report(&manifest, &cfg);
        }
        Command::Ensemble { target, realizations } => {
            let cfg = target.config()?;
            let (manifest, _) = run_ensemble(&cfg, realizations)?;
            report(&manifest, &cfg);
        }
        Command::ValidateConfig {
            file,
            preset,
            overrides,
        } => {
            let cfg = load(preset.as_deref(), file.as_ref(), &overrides)?;
            let resolved = cfg.resolve()?;
            println!("{:#}", resolved.config.to_value());
        }
        Command::ListPresets => {
            let width = PRESETS.iter().map(|(n, _)| n.len()).max().unwrap_or(0);
            for (name, what) in PRESETS {
                println!("{name:width$}  {what}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config_error() { 1 } else { 2 })
        }
    }
}
