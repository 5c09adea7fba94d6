//! Command-line front end.
//!
//! Exit codes: 0 success, 2 validation or parse error, 3 numerical
//! failure, 1 IO error. Failures print a human-readable line and a
//! one-line JSON error record to stderr.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use shelab_core::Error;
use shelab_harness::config::{preset, ExperimentConfig, PRESETS};
use shelab_harness::exec::{describe, run_to_directory};
use shelab_harness::{io_err, HarnessError, HarnessResult};

#[derive(Parser)]
#[command(
    name = "shelab",
    version,
    about = "Numerical laboratory for a stochastic heat equation driven by space-time white noise",
    after_help = "Start from a preset: `shelab presets` lists them, \
                  `shelab presets <name> > my.toml` exports one to edit."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute an experiment and write its artifact files
    Run(JobArgs),
    /// Print the resolved execution plan without running anything
    Describe(JobArgs),
    /// List built-in presets, or print one as a TOML config
    Presets {
        /// Preset name; omit to list all
        name: Option<String>,
    },
}

#[derive(Args)]
struct JobArgs {
    /// Path to a TOML experiment config
    #[arg(
        long,
        value_name = "PATH",
        conflicts_with = "preset",
        required_unless_present = "preset"
    )]
    config: Option<PathBuf>,

    /// Built-in preset name (see `shelab presets`)
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,

    /// Override the base seed
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,

    /// Override the replication count
    #[arg(long, value_name = "K")]
    replications: Option<usize>,

    /// Override the worker thread count
    #[arg(long, value_name = "K")]
    threads: Option<usize>,

    /// Output directory (default: from config, else runs/<kind>-<hash>)
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

impl JobArgs {
    fn load(&self) -> HarnessResult<ExperimentConfig> {
        let mut cfg = if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)
                .map_err(io_err(format!("reading {}", path.display())))?;
            ExperimentConfig::from_toml(&text).map_err(|e| HarnessError::Parse {
                path: path.clone(),
                message: e.to_string(),
            })?
        } else {
            let name = self.preset.as_deref().expect("clap requires one source");
            preset(name).ok_or_else(|| {
                HarnessError::Core(Error::invalid(
                    "preset",
                    format!("unknown preset {name:?}; available: {}", preset_names()),
                ))
            })?
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(replications) = self.replications {
            cfg.replications = replications;
        }
        if let Some(threads) = self.threads {
            cfg.threads = threads;
        }
        if let Some(out) = &self.out {
            cfg.out_dir = Some(out.clone());
        }
        Ok(cfg)
    }

    fn out_dir(&self, cfg: &ExperimentConfig) -> PathBuf {
        cfg.out_dir.clone().unwrap_or_else(|| {
            PathBuf::from("runs").join(format!("{}-{}", cfg.experiment.kind(), cfg.hash()))
        })
    }
}

fn preset_names() -> String {
    PRESETS
        .iter()
        .map(|p| p.name)
        .collect::<Vec<_>>()
        .join(", ")
}

fn cmd_run(args: &JobArgs) -> HarnessResult<()> {
    let cfg = args.load()?;
    let dir = args.out_dir(&cfg);
    let (output, written) = run_to_directory(&cfg, &dir)?;
    for artifact in &output.files {
        if artifact.name == "summary.txt" {
            print!("{}", artifact.as_text());
        }
    }
    println!("\nartifacts ({}):", dir.display());
    for path in &written {
        println!("  {}", path.display());
    }
    println!("{}", output.headline);
    Ok(())
}

fn cmd_describe(args: &JobArgs) -> HarnessResult<()> {
    let cfg = args.load()?;
    let (plan, validation) = describe(&cfg);
    print!("{plan}");
    println!("output directory: {}", args.out_dir(&cfg).display());
    match validation {
        Some(e) => Err(HarnessError::Core(e)),
        None => Ok(()),
    }
}

fn cmd_presets(name: Option<&str>) -> HarnessResult<()> {
    match name {
        Some(name) => {
            let cfg = preset(name).ok_or_else(|| {
                HarnessError::Core(Error::invalid(
                    "preset",
                    format!("unknown preset {name:?}; available: {}", preset_names()),
                ))
            })?;
            print!("{}", cfg.to_toml());
        }
        None => {
            println!("built-in presets (run with `shelab run --preset <name>`):\n");
            let width = PRESETS.iter().map(|p| p.name.len()).max().unwrap_or(0);
            for p in PRESETS {
                println!("  {:width$}  {}", p.name, p.summary);
            }
            println!("\n`shelab presets <name>` prints the full config as TOML.");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Describe(args) => cmd_describe(args),
        Command::Presets { name } => cmd_presets(name.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            eprintln!("{}", e.machine_record());
            ExitCode::from(e.exit_code())
        }
    }
}
