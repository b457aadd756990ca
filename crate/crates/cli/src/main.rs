use clap::{Args, Parser, Subcommand};
use eel_cli::config::{parse_checks, ExperimentConfig, SuiteEntry};
use eel_cli::{prepare, run, stream_rng, write_atomic, write_outputs, CliError, Result};
use eel_core::entropy::{ent_residual_sup, phi_f};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "eel", version, about = "Entropy-solution diagnostics for the 2D Eikonal equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Experiment config (JSON).
    #[arg(long, env = "EEL_CONFIG")]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long, env = "EEL_SEED")]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured checks and write artifacts.
    Run {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Output directory; overrides `out_dir` in the config.
        #[arg(long, env = "EEL_OUT")]
        out: Option<PathBuf>,
        /// Worker threads.
        #[arg(long, env = "EEL_JOBS", default_value_t = 1)]
        jobs: usize,
        /// Comma-separated checks (or `all`); overrides the config list.
        #[arg(long, env = "EEL_CHECK")]
        check: Option<String>,
    },
    /// Parse and validate a config, listing every violation.
    ValidateConfig {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Write the configured field as an EELF dump.
    DumpField {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Destination file.
        #[arg(long, env = "EEL_OUT")]
        out: PathBuf,
    },
    /// Print Fourier coefficients of `Phi_f` and its entropy residual for suite entries.
    ShowEntropy {
        /// A single suite entry as JSON, e.g. `{"kind":"cos","k":3}`.
        #[arg(long, conflicts_with = "config")]
        f: Option<String>,
        /// Show the whole suite of this config instead.
        #[arg(long, env = "EEL_CONFIG")]
        config: Option<PathBuf>,
        #[arg(long, env = "EEL_SEED", default_value_t = 0)]
        seed: u64,
        /// Circle samples for the residual sup norm.
        #[arg(long, default_value_t = 512)]
        samples: usize,
    },
}

fn load(cfg: &ConfigArgs) -> Result<ExperimentConfig> {
    let mut c = ExperimentConfig::load(&cfg.config)?;
    if let Some(s) = cfg.seed {
        c.seed = s;
    }
    Ok(c)
}

fn execute(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run { cfg, out, jobs, check } => {
            let mut c = load(&cfg)?;
            if let Some(list) = check {
                c.checks = parse_checks(&list)?;
            }
            let out_dir = out.or_else(|| c.out_dir.clone()).unwrap_or_else(|| PathBuf::from("eel-out"));
            let (bundle, artifacts) = run(&c, jobs)?;
            write_outputs(&out_dir, &bundle, &artifacts)?;
            for r in &bundle.checks {
                match &r.message {
                    Some(m) => println!("{:<20} {}  ({m})", r.name.name(), r.status),
                    None => println!("{:<20} {}", r.name.name(), r.status),
                }
            }
            println!("wrote {} artifacts to {}", bundle.artifacts.len(), out_dir.display());
            Ok(!bundle.has_failure())
        }
        Command::ValidateConfig { cfg } => {
            load(&cfg)?.validate()?;
            println!("config ok");
            Ok(true)
        }
        Command::DumpField { cfg, out } => {
            let ctx = prepare(&load(&cfg)?)?;
            write_atomic(&out, &ctx.field.to_eelf())?;
            println!("{}x{} field written to {}", ctx.field.grid.nx, ctx.field.grid.ny, out.display());
            Ok(true)
        }
        Command::ShowEntropy { f, config, seed, samples } => {
            let suite = match (f, config) {
                (Some(text), _) => {
                    let entry: SuiteEntry = serde_json::from_str(&text)?;
                    entry.expand(0, &mut stream_rng(seed, 0))
                }
                (None, Some(path)) => {
                    let mut c = ExperimentConfig::load(&path)?;
                    c.seed = seed;
                    prepare(&c)?.suite
                }
                (None, None) => return Err(CliError::InvalidConfig(vec!["show-entropy needs --f or --config".into()])),
            };
            let mut report = Vec::new();
            for (id, f) in suite {
                let phi = phi_f(&f)?;
                report.push(serde_json::json!({
                    "id": id,
                    "f": f,
                    "phi_x": phi.x(),
                    "phi_y": phi.y(),
                    "ent_residual": ent_residual_sup(&phi, samples),
                }));
            }
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
