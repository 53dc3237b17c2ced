//! The `qpt` command line.
//!
//! Exit codes: 0 on success, 1 for usage and input errors, 2 when the
//! numerics fail. Every command writes its outputs and a `manifest.json`
//! into the output directory, chosen as `--out-dir`, then the config's
//! `out_dir`, then `$QPT_OUT_DIR`, then `./qpt-out`.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{QptError, Result};
use crate::linalg::{ComplexMatrix, MatrixJson};
use crate::process::aapt_usable;
use crate::scenario::config::{load_config, ScenarioConfig, ScenarioKind};
use crate::scenario::run::{config_hash, hash_bytes, run_scenario, write_manifest, Artifacts};
use crate::state::DensityMatrix;
use crate::tomography::{
    linear_reconstruct, mle_reconstruct, read_records_csv, settings_pair, settings_pair_16, settings_single,
    simulate_counts, write_records_csv, NoiseConfig,
};

pub const OUT_DIR_ENV: &str = "QPT_OUT_DIR";
const DEFAULT_OUT_DIR: &str = "qpt-out";

#[derive(Debug, Parser)]
#[command(name = "qpt", version, about = "Quantum process tomography of polarization qubits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Overrides {
    /// Base seed for the noise model.
    #[arg(long)]
    seed: Option<u64>,
    /// Poisson mean counts per setting at unit probability.
    #[arg(long)]
    counts: Option<u64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SettingsChoice {
    /// 6 single-photon or 36 pair settings, by state size.
    Full,
    /// The 16 pair settings from {H, V, D, R}.
    Minimal,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ReconstructMethod {
    Mle,
    Linear,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate photon counts for a state given as JSON.
    Simulate {
        state: PathBuf,
        #[arg(long, value_enum, default_value = "full")]
        settings: SettingsChoice,
        #[arg(long, default_value_t = 13_000)]
        counts: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Reconstruct a density matrix from a counts CSV.
    Reconstruct {
        counts: PathBuf,
        #[arg(long, value_enum, default_value = "mle")]
        method: ReconstructMethod,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Operator-Schmidt report for a two-qubit state JSON.
    Schmidt {
        state: PathBuf,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Sphere-map data for the processes in a config.
    Spheremap {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run the scenario named in a config.
    Scenario {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// SQPT / EAPT / AAPT Monte-Carlo comparison for the process in a config.
    Compare {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
}

fn resolve_out_dir(flag: Option<PathBuf>, config: Option<&Path>) -> PathBuf {
    flag.or_else(|| config.map(Path::to_path_buf))
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

fn read_state(path: &Path) -> Result<(DensityMatrix, Vec<u8>)> {
    let bytes = fs::read(path)?;
    let json: MatrixJson = serde_json::from_slice(&bytes)
        .map_err(|e| QptError::Config { path: path.display().to_string(), message: e.to_string() })?;
    let rho = ComplexMatrix::try_from(json)
        .and_then(DensityMatrix::new)
        .map_err(|e| QptError::Config { path: path.display().to_string(), message: e.to_string() })?;
    Ok((rho, bytes))
}

#[derive(Serialize)]
struct SchmidtReport {
    schmidt_number: usize,
    usable: bool,
    coefficients: Vec<f64>,
    min_coefficient: f64,
}

fn run_config(path: &Path, overrides: Overrides, force: Option<ScenarioKind>, command: &str) -> Result<()> {
    let mut config: ScenarioConfig = load_config(path)?;
    if let Some(kind) = force {
        config.scenario = kind;
    }
    config.apply_overrides(overrides.seed, overrides.counts);
    config.validate()?;
    let out_dir = resolve_out_dir(overrides.out_dir, config.out_dir.as_deref());
    let mut out = Artifacts::new(&out_dir)?;
    run_scenario(&config, &mut out)?;
    write_manifest(&out, command, config_hash(&config)?, config.noise.seed())
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Simulate { state, settings, counts, seed, out_dir } => {
            let (rho, bytes) = read_state(&state)?;
            let list = match (rho.num_qubits(), settings) {
                (1, SettingsChoice::Full) => settings_single(),
                (2, SettingsChoice::Full) => settings_pair(),
                (2, SettingsChoice::Minimal) => settings_pair_16(),
                _ => return Err(QptError::Config { path: "--settings".into(), message: "minimal settings need a two-qubit state".into() }),
            };
            let records = simulate_counts(&rho, &list, &NoiseConfig::new(counts, seed)?)?;
            let mut out = Artifacts::new(&resolve_out_dir(out_dir, None))?;
            out.write_with("counts.csv", |w| write_records_csv(w, &records))?;
            write_manifest(&out, "simulate", hash_bytes(&bytes), Some(seed))
        }
        Command::Reconstruct { counts, method, out_dir } => {
            let bytes = fs::read(&counts)?;
            let records = read_records_csv(bytes.as_slice())?;
            let qubits = records.first().map(|r| r.setting.num_qubits()).unwrap_or(1);
            let state = match method {
                ReconstructMethod::Mle => mle_reconstruct(&records, 1 << qubits)?.state,
                ReconstructMethod::Linear => linear_reconstruct(&records)?.state,
            };
            let mut out = Artifacts::new(&resolve_out_dir(out_dir, None))?;
            out.write_json("state.json", &state.to_json())?;
            write_manifest(&out, "reconstruct", hash_bytes(&bytes), None)
        }
        Command::Schmidt { state, out_dir } => {
            let (rho, bytes) = read_state(&state)?;
            let u = aapt_usable(rho.matrix())?;
            let report = SchmidtReport {
                schmidt_number: u.schmidt_number,
                usable: u.usable,
                coefficients: u.coefficients,
                min_coefficient: u.min_coefficient,
            };
            println!("{}", serde_json::to_string(&report)?);
            let mut out = Artifacts::new(&resolve_out_dir(out_dir, None))?;
            out.write_json("schmidt.json", &report)?;
            write_manifest(&out, "schmidt", hash_bytes(&bytes), None)
        }
        Command::Spheremap { config, overrides } => run_config(&config, overrides, Some(ScenarioKind::Spheremap), "spheremap"),
        Command::Scenario { config, overrides } => run_config(&config, overrides, None, "scenario"),
        Command::Compare { config, overrides } => run_config(&config, overrides, Some(ScenarioKind::Compare), "compare"),
    }
}

/// Parses `argv` (including the program name) and runs it, returning the
/// process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &QptError) -> i32 {
    if e.is_numerical() {
        2
    } else {
        1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_by_error_kind() {
        assert_eq!(exit_code(&QptError::Config { path: "x".into(), message: "y".into() }), 1);
        assert_eq!(exit_code(&QptError::MissingSettings("R".into())), 1);
        assert_eq!(exit_code(&QptError::MleNotConverged { iterations: 3, gradient_norm: 1.0 }), 2);
        assert_eq!(exit_code(&QptError::NotUsableForAapt { coefficients: vec![1.0, 0.0, 0.0, 0.0] }), 2);
    }

    #[test]
    fn out_dir_precedence() {
        let flag = resolve_out_dir(Some("a".into()), Some(Path::new("b")));
        assert_eq!(flag, PathBuf::from("a"));
        assert_eq!(resolve_out_dir(None, Some(Path::new("b"))), PathBuf::from("b"));
    }
}
