mod commands;
mod config;
mod error;
mod io;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use commands::Command;
use config::RunConfig;
use error::CliError;
use io::Provenance;

/// Collective single-photon emission from atomic arrays.
#[derive(Parser, Debug)]
#[command(name = "emitter", version, about)]
struct Cli {
    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `output_dir` in the configuration).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Relative integrator tolerance (overrides `tolerances.rtol`).
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Propagate the state and write populations and the emitted waveform.
    Simulate(RunArgs),
    /// Angular photon distribution at `angular.u`, or integrated over time.
    Angular {
        #[command(flatten)]
        run: RunArgs,
        /// Retarded time of the snapshot (overrides `angular.u`).
        #[arg(long)]
        u: Option<f64>,
    },
    /// Collective decay modes of the excited manifold.
    Modes(RunArgs),
    /// Design a control envelope for the `[shape]` target and verify it.
    Shape(RunArgs),
    /// Run a given envelope (drive.envelope file) against the `[shape]` target.
    Validate(RunArgs),
    /// Closed-form reference values.
    #[command(subcommand, arg_required_else_help = true)]
    Oracle(OracleCmd),
}

#[derive(Subcommand, Debug)]
enum OracleCmd {
    /// Symmetric and antisymmetric decay rates of two atoms.
    TwoAtom {
        /// Separation in units of λ₀.
        #[arg(long)]
        separation: f64,
        /// Pair axis as x,y,z.
        #[arg(long, value_delimiter = ',', num_args = 3, default_values_t = [1.0, 0.0, 0.0])]
        orientation: Vec<f64>,
        /// Excited sublevel m = -1, 0 or 1.
        #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
        sublevel: i32,
    },
    /// Forward enhancement of a noninteracting lattice.
    Directed {
        #[arg(long, default_value_t = 4)]
        nx: usize,
        #[arg(long, default_value_t = 4)]
        ny: usize,
        #[arg(long, default_value_t = 4)]
        nz: usize,
        /// Lattice spacing in units of λ₀.
        #[arg(long, default_value_t = 0.6)]
        d: f64,
        /// Emission direction as x,y,z.
        #[arg(long, value_delimiter = ',', num_args = 3, default_values_t = [0.0, 0.0, 1.0])]
        direction: Vec<f64>,
    },
}

fn three(v: &[f64]) -> [f64; 3] {
    [v[0], v[1], v[2]]
}

fn write_json(path: &Path, value: &Value) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

fn run_config(cmd: Command, args: &RunArgs, u: Option<f64>, out_dir: &mut Option<PathBuf>) -> Result<Value, CliError> {
    // Known before the configuration parses, so load errors still get recorded.
    if let Some(dir) = &args.out {
        *out_dir = Some(dir.clone());
    }
    let (mut cfg, text) = RunConfig::load(&args.config)?;
    if let Some(dir) = &args.out {
        cfg.output_dir = dir.clone();
    } else if cfg.output_dir.is_relative() {
        let base = args.config.parent().unwrap_or(Path::new("."));
        cfg.output_dir = base.join(&cfg.output_dir);
    }
    *out_dir = Some(cfg.output_dir.clone());
    if let Some(tol) = args.tol {
        cfg.tolerances.rtol = tol;
    }
    if u.is_some() {
        cfg.angular.u = u;
    }
    cfg.validate()?;
    // Overrides are part of what produced the outputs.
    let overrides = format!("tol={:?};u={:?}", args.tol, u);
    let prov = Provenance { digest: config::digest(&format!("{text}\n#{overrides}")) };
    let start = Instant::now();
    let summary = commands::execute(cmd, &cfg, &prov, &cfg.output_dir)?;
    write_json(&cfg.output_dir.join("summary.json"), &summary)?;
    write_json(
        &cfg.output_dir.join("timings.json"),
        &json!({ "command": cmd.name(), "wall_seconds": start.elapsed().as_secs_f64() }),
    )?;
    Ok(summary)
}

fn dispatch(cli: &Cli, out_dir: &mut Option<PathBuf>) -> Result<Value, CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    match &cli.command {
        Cmd::Simulate(a) => run_config(Command::Simulate, a, None, out_dir),
        Cmd::Angular { run, u } => run_config(Command::Angular, run, *u, out_dir),
        Cmd::Modes(a) => run_config(Command::Modes, a, None, out_dir),
        Cmd::Shape(a) => run_config(Command::Shape, a, None, out_dir),
        Cmd::Validate(a) => run_config(Command::Validate, a, None, out_dir),
        Cmd::Oracle(OracleCmd::TwoAtom { separation, orientation, sublevel }) => {
            commands::oracle_two_atom(*separation, three(orientation), *sublevel)
        }
        Cmd::Oracle(OracleCmd::Directed { nx, ny, nz, d, direction }) => {
            commands::oracle_directed([*nx, *ny, *nz], *d, three(direction))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let mut out_dir = None;
    match dispatch(&cli, &mut out_dir) {
        Ok(summary) => {
            println!("{}", serde_json::to_string_pretty(&summary).unwrap_or_default());
            ExitCode::SUCCESS
        }
        Err(e) => {
            let record = e.to_json();
            eprintln!("{record}");
            if let Some(dir) = out_dir {
                if std::fs::create_dir_all(&dir).is_ok() {
                    let _ = write_json(&dir.join("error.json"), &record);
                }
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
