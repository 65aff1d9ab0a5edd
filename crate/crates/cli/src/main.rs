mod verify;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rototrap::gravity::{classify_resonances, default_forced_dt, forced_evolve_from};
use rototrap::io::{
    boundaries_json, emit_plot_data, gaussian_from_json, gaussian_json, load_config, modes_json, resonance_json,
    riccati_csv, scan_csv, trajectory_csv, LoadError,
};
use rototrap::modes::eigenmodes;
use rototrap::nalgebra::Vector3;
use rototrap::numerics::OmegaRange;
use rototrap::quantum::{evolve_riccati, riccati_residual, static_ground_state, stationary_k_from_modes, RiccatiMethod};
use rototrap::stability::{region_map, stability_scan};
use rototrap::trap::{build_dynamics_matrix, PhaseVector};
use rototrap::{Error, ValidatedConfig};
use serde_json::json;

#[derive(Parser)]
#[command(name = "rototrap", version, about = "Stability, modes and Gaussian states of a particle in a rotating harmonic trap")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Trap configuration JSON.
    #[arg(short, long)]
    config: PathBuf,
    /// Write to this file instead of stdout.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Roots of the characteristic cubic over a grid of rotation rates (CSV).
    Scan {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.0)]
        start: f64,
        #[arg(long, default_value_t = 4.0)]
        stop: f64,
        #[arg(long, default_value_t = 2000)]
        steps: usize,
        /// Append the χ = Ω² column and resonance markers.
        #[arg(long)]
        plot: bool,
    },
    /// Edges of the exponential and oscillatory instability windows (JSON).
    Boundaries {
        #[command(flatten)]
        common: Common,
    },
    /// Normal modes at the configured rotation rate (JSON).
    Modes {
        #[command(flatten)]
        common: Common,
    },
    /// Gravity-induced resonant rotation rates and their regions (JSON).
    Resonance {
        #[command(flatten)]
        common: Common,
    },
    /// Stationary Gaussian state built from the normal modes (JSON).
    GroundState {
        #[command(flatten)]
        common: Common,
    },
    /// Classical trajectory under gravity, or Riccati evolution of a Gaussian (CSV).
    Evolve {
        #[command(flatten)]
        common: Common,
        /// Gravity vector in the laboratory frame.
        #[arg(long, value_parser = parse_vec3, default_value = "0,0,0")]
        gravity: Vector3<f64>,
        /// Initial phase-space point x,y,z,px,py,pz.
        #[arg(long, value_parser = parse_vec6)]
        initial: Option<[f64; 6]>,
        #[arg(long, default_value_t = 20.0)]
        t_end: f64,
        /// Step size; defaults to a fraction of the shortest period.
        #[arg(long)]
        dt: Option<f64>,
        /// Evolve the Gaussian width matrix instead of a classical trajectory.
        #[arg(long, value_enum)]
        riccati: Option<Method>,
        /// Initial Gaussian state JSON; defaults to the non-rotating ground state.
        #[arg(long)]
        k0: Option<PathBuf>,
    },
    /// Checks invariants and cross-validations on the configuration (JSON).
    Verify {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Direct,
    Linearized,
}

fn parse_list<const N: usize>(s: &str) -> Result<[f64; N], String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    parts.try_into().map_err(|v: Vec<f64>| format!("expected {N} comma-separated numbers, got {}", v.len()))
}

fn parse_vec3(s: &str) -> Result<Vector3<f64>, String> {
    parse_list::<3>(s).map(Vector3::from)
}

fn parse_vec6(s: &str) -> Result<[f64; 6], String> {
    parse_list::<6>(s)
}

enum Failure {
    Config(String, String),
    Numeric(Error),
    Verification(String),
    Output(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(..) => 1,
            Failure::Numeric(_) | Failure::Output(_) => 2,
            Failure::Verification(_) => 3,
        }
    }

    fn json(&self) -> serde_json::Value {
        match self {
            Failure::Config(kind, msg) => json!({"error": kind, "message": msg}),
            Failure::Numeric(e) => json!({"error": e.kind(), "message": e.to_string()}),
            Failure::Verification(msg) => json!({"error": "VerificationFailed", "message": msg}),
            Failure::Output(msg) => json!({"error": "OutputError", "message": msg}),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(c) => Failure::Config("ConfigError".into(), c.to_string()),
            other => Failure::Numeric(other),
        }
    }
}

impl From<LoadError> for Failure {
    fn from(e: LoadError) -> Self {
        let kind = match e {
            LoadError::Read { .. } => "ReadError",
            LoadError::Parse(_) => "ParseError",
            LoadError::Invalid(_) => "ConfigError",
        };
        Failure::Config(kind.into(), e.to_string())
    }
}

fn emit(common: &Common, text: &str) -> Result<(), Failure> {
    match &common.output {
        Some(path) => std::fs::write(path, text).map_err(|e| Failure::Output(format!("{}: {e}", path.display()))),
        None => match std::io::stdout().write_all(text.as_bytes()) {
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Failure::Output(e.to_string())),
            _ => Ok(()),
        },
    }
}

fn emit_json(common: &Common, value: &serde_json::Value) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).expect("JSON values serialize");
    text.push('\n');
    emit(common, &text)
}

fn load(common: &Common) -> Result<ValidatedConfig, Failure> {
    Ok(load_config(&common.config)?)
}

fn run(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Scan { common, start, stop, steps, plot } => {
            let cfg = load(&common)?;
            let grid = OmegaRange::new(start, stop, steps).map_err(|e| Failure::Config("InvalidRange".into(), e.to_string()))?;
            let table = stability_scan(&cfg, &grid)?;
            let text = if plot {
                let report = classify_resonances(&cfg).ok().map(|(r, _)| r);
                emit_plot_data(&table, report.as_ref())
            } else {
                scan_csv(&table)
            };
            emit(&common, &text)
        }
        Command::Boundaries { common } => {
            let cfg = load(&common)?;
            emit_json(&common, &boundaries_json(&region_map(&cfg)?))
        }
        Command::Modes { common } => {
            let cfg = load(&common)?;
            emit_json(&common, &modes_json(&eigenmodes(&build_dynamics_matrix(&cfg))?))
        }
        Command::Resonance { common } => {
            let cfg = load(&common)?;
            let (report, gaps) = classify_resonances(&cfg)?;
            emit_json(&common, &resonance_json(&report, Some(gaps)))
        }
        Command::GroundState { common } => {
            let cfg = load(&common)?;
            let k = stationary_k_from_modes(&cfg)?;
            let mut out = gaussian_json(&k);
            out["riccati_residual"] = json!(riccati_residual(&k, &cfg)?);
            emit_json(&common, &out)
        }
        Command::Evolve { common, gravity, initial, t_end, dt, riccati, k0 } => {
            let cfg = load(&common)?;
            let dt = dt.unwrap_or_else(|| default_forced_dt(&cfg));
            match riccati {
                Some(method) => {
                    let k0 = match k0 {
                        Some(path) => {
                            let text = std::fs::read_to_string(&path)
                                .map_err(|e| Failure::Config("ReadError".into(), format!("{}: {e}", path.display())))?;
                            gaussian_from_json(&text)?
                        }
                        None => static_ground_state(&cfg),
                    };
                    let method = match method {
                        Method::Direct => RiccatiMethod::Direct,
                        Method::Linearized => RiccatiMethod::Linearized,
                    };
                    let traj = evolve_riccati(&k0, &cfg, t_end, dt, method)?;
                    emit(&common, &riccati_csv(&traj))
                }
                None => {
                    let x0 = initial.map(PhaseVector::new).unwrap_or_else(PhaseVector::zeros);
                    let traj = forced_evolve_from(&cfg, &gravity, x0, t_end, dt)?;
                    emit(&common, &trajectory_csv(&traj))
                }
            }
        }
        Command::Verify { common } => {
            let cfg = load(&common)?;
            let report = verify::verify(&cfg);
            emit_json(&common, &serde_json::to_value(&report).expect("report serializes"))?;
            if report.passed {
                Ok(())
            } else {
                let names: Vec<&str> = report.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
                Err(Failure::Verification(format!("failed checks: {}", names.join(", "))))
            }
        }
    }
}

fn init_threads() {
    if let Some(n) = std::env::var("ROTOTRAP_THREADS").ok().and_then(|s| s.trim().parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let msg = e.to_string();
            eprintln!("{}", json!({"error": "UsageError", "message": msg.trim()}));
            return ExitCode::from(1);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    init_threads();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.json());
            ExitCode::from(f.code())
        }
    }
}
