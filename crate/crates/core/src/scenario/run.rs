//! Runs a scenario config and writes its artifacts.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::analysis::{chi_report, process_fidelity, sphere_map, ChiReport};
use crate::channel::kraus_to_chi;
use crate::error::Result;
use crate::linalg::{self, MatrixJson, Subsystem};
use crate::process::{aapt, operator_schmidt, schmidt_number, DEFAULT_SCHMIDT_TOL};
use crate::state::{state_fidelity, states};
use crate::tomography::{settings_pair, stream_seed, write_records_csv};

use super::compare::{compare_methods, options_from_config, run_trial, Measurement};
use super::config::{Noise, ScenarioConfig, ScenarioKind, SigmaMode};
use super::{effective_density, recoherer_element, recoherer_sqpt, werner_branch_state, BranchState};

/// Collects files written under one output directory.
#[derive(Debug)]
pub struct Artifacts {
    dir: PathBuf,
    files: Vec<String>,
}

impl Artifacts {
    pub fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Artifacts { dir: dir.to_path_buf(), files: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }

    pub fn write_with(&mut self, name: &str, f: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
        let mut w = BufWriter::new(File::create(self.dir.join(name))?);
        f(&mut w)?;
        w.flush()?;
        self.files.push(name.to_string());
        Ok(())
    }

    /// Pretty JSON with a trailing newline.
    pub fn write_json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        self.write_with(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            w.write_all(b"\n")?;
            Ok(())
        })
    }
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub command: &'a str,
    pub config_hash: String,
    pub seed: Option<u64>,
    pub artifacts: &'a [String],
}

/// SHA-256 of the effective config, with the output directory left out so
/// that identical runs hash the same wherever they are written.
pub fn config_hash(config: &ScenarioConfig) -> Result<String> {
    let mut c = config.clone();
    c.out_dir = None;
    Ok(hex::encode(Sha256::digest(serde_json::to_vec(&c)?)))
}

pub fn hash_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn write_manifest(artifacts: &Artifacts, command: &str, config_hash: String, seed: Option<u64>) -> Result<()> {
    let manifest = Manifest { command, config_hash, seed, artifacts: artifacts.files() };
    let mut w = BufWriter::new(File::create(artifacts.dir().join("manifest.json"))?);
    serde_json::to_writer_pretty(&mut w, &manifest)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn prefix(config: &ScenarioConfig, k: usize) -> String {
    let label = config.processes()[k].label();
    if config.processes().len() > 1 {
        format!("{k}-{label}")
    } else {
        label.to_string()
    }
}

pub fn run_spheremap(config: &ScenarioConfig, out: &mut Artifacts) -> Result<()> {
    let [n_lat, n_lon] = config.resolution;
    for (k, spec) in config.processes().iter().enumerate() {
        let mesh = sphere_map(&spec.channel()?, n_lat, n_lon)?;
        let name = prefix(config, k);
        out.write_with(&format!("spheremap-{name}.csv"), |w| mesh.write_csv(w))?;
        out.write_json(&format!("spheremap-{name}.json"), &mesh.summary())?;
    }
    Ok(())
}

#[derive(Serialize)]
struct MethodReport {
    method: crate::process::Method,
    fidelity_to_ideal: f64,
    chi: ChiReport,
}

pub fn run_chi(config: &ScenarioConfig, out: &mut Artifacts) -> Result<()> {
    let options = options_from_config(config);
    let seed = config.noise.seed().unwrap_or(0);
    for (k, spec) in config.processes().iter().enumerate() {
        let channel = spec.channel()?;
        let truth = kraus_to_chi(&channel);
        let name = prefix(config, k);
        out.write_json(&format!("chi-{name}-ideal.json"), &truth.to_json())?;
        let est = run_trial(&channel, &options, seed)?;
        let mut reports = Vec::new();
        for e in [&est.sqpt, &est.eapt, &est.aapt] {
            let method = e.method.to_string().to_lowercase();
            out.write_json(&format!("chi-{name}-{method}.json"), &e.to_json())?;
            reports.push(MethodReport {
                method: e.method,
                fidelity_to_ideal: process_fidelity(&e.chi, &truth)?,
                chi: chi_report(&e.chi),
            });
        }
        out.write_json(&format!("chi-{name}-report.json"), &reports)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct BranchJson {
    pol: &'static str,
    re: f64,
    im: f64,
    rel_delay: f64,
}

fn branches_json(state: &BranchState) -> Vec<BranchJson> {
    const POL: [&str; 4] = ["HH", "HV", "VH", "VV"];
    state
        .branches
        .iter()
        .map(|b| BranchJson { pol: POL[b.pol_index], re: b.amplitude.re, im: b.amplitude.im, rel_delay: b.rel_delay })
        .collect()
}

#[derive(Serialize)]
struct WernerReport {
    kernel: super::Kernel,
    fidelity_to_werner: f64,
    schmidt_number: usize,
    schmidt_coefficients: Vec<f64>,
    partial_transpose_min_eigenvalue: f64,
    branches: Vec<BranchJson>,
    measured_fidelity_to_werner: Option<f64>,
}

pub fn run_werner(config: &ScenarioConfig, out: &mut Artifacts) -> Result<()> {
    let branches = werner_branch_state(config.kernel);
    let rho = effective_density(&branches)?;
    let decomposition = operator_schmidt(rho.matrix())?;
    out.write_json("werner-state.json", &rho.to_json())?;

    let measured = match config.noise {
        Noise::Exact => None,
        Noise::Poisson(p) => {
            let m = Measurement { noise: config.noise, estimator: config.estimator };
            let records = m.records(&rho, &settings_pair(), stream_seed(p.seed, 0))?;
            out.write_with("werner-counts.csv", |w| write_records_csv(w, &records))?;
            let estimate = m.reconstruct(&records, 4)?;
            out.write_json("werner-estimate.json", &estimate.to_json())?;
            Some(state_fidelity(&estimate, &states::werner())?)
        }
    };
    let report = WernerReport {
        kernel: config.kernel,
        fidelity_to_werner: state_fidelity(&rho, &states::werner())?,
        schmidt_number: schmidt_number(&decomposition, DEFAULT_SCHMIDT_TOL),
        schmidt_coefficients: decomposition.coefficients,
        partial_transpose_min_eigenvalue: linalg::min_eigenvalue(&rho.partial_transpose(Subsystem::B)?),
        branches: branches_json(&branches),
        measured_fidelity_to_werner: measured,
    };
    out.write_json("werner-report.json", &report)
}

#[derive(Serialize)]
struct RecohererReport {
    aapt: ChiReport,
    sqpt: ChiReport,
    sigma_branches: Vec<BranchJson>,
    sigma_prime_branches: Vec<BranchJson>,
}

pub fn run_recoherer(config: &ScenarioConfig, out: &mut Artifacts) -> Result<()> {
    let branches = werner_branch_state(config.kernel);
    let after = branches.apply(&recoherer_element());
    let mut sigma = effective_density(&branches)?;
    let mut sigma_prime = effective_density(&after)?;
    if let Noise::Poisson(p) = config.noise {
        let m = Measurement { noise: config.noise, estimator: config.estimator };
        let settings = config.settings.settings();
        sigma_prime = m.estimate(&sigma_prime, &settings, stream_seed(p.seed, 0))?;
        if config.sigma == SigmaMode::Measured {
            sigma = m.estimate(&sigma, &settings, stream_seed(p.seed, 1))?;
        }
    }
    let estimate = aapt(&sigma, &sigma_prime)?;
    let sqpt_estimate = recoherer_sqpt()?;
    out.write_json("recoherer-sigma.json", &MatrixJson::from(sigma.matrix()))?;
    out.write_json("recoherer-sigma-prime.json", &MatrixJson::from(sigma_prime.matrix()))?;
    out.write_json("recoherer-chi-aapt.json", &estimate.to_json())?;
    out.write_json("recoherer-chi-sqpt.json", &sqpt_estimate.to_json())?;
    out.write_json(
        "recoherer-report.json",
        &RecohererReport {
            aapt: chi_report(&estimate.chi),
            sqpt: chi_report(&sqpt_estimate.chi),
            sigma_branches: branches_json(&branches),
            sigma_prime_branches: branches_json(&after),
        },
    )
}

pub fn run_compare(config: &ScenarioConfig, out: &mut Artifacts) -> Result<()> {
    let report = compare_methods(&config.processes()[0].channel()?, &options_from_config(config))?;
    out.write_json("compare-report.json", &report.summaries)?;
    out.write_with("compare-trials.csv", |w| report.write_trials_csv(w))
}

/// Dispatches on `config.scenario`, writing into `out`.
pub fn run_scenario(config: &ScenarioConfig, out: &mut Artifacts) -> Result<()> {
    config.validate()?;
    match config.scenario {
        ScenarioKind::Spheremap => run_spheremap(config, out),
        ScenarioKind::Chi => run_chi(config, out),
        ScenarioKind::Werner => run_werner(config, out),
        ScenarioKind::Recoherer => run_recoherer(config, out),
        ScenarioKind::Compare => run_compare(config, out),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::config::parse_config;

    fn run(text: &str) -> (tempfile::TempDir, Vec<String>) {
        let dir = tempfile::tempdir().unwrap();
        let mut out = Artifacts::new(dir.path()).unwrap();
        run_scenario(&parse_config(text).unwrap(), &mut out).unwrap();
        let files = out.files().to_vec();
        (dir, files)
    }

    #[test]
    fn werner_artifacts() {
        let (dir, files) = run(r#"{"scenario":"werner","noise":{"counts":5000,"seed":3}}"#);
        assert_eq!(files, ["werner-state.json", "werner-counts.csv", "werner-estimate.json", "werner-report.json"]);
        let report: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("werner-report.json")).unwrap()).unwrap();
        assert!(report["fidelity_to_werner"].as_f64().unwrap() >= 1.0 - 1e-9);
        assert_eq!(report["schmidt_number"], 4);
        assert!(report["measured_fidelity_to_werner"].as_f64().unwrap() > 0.98);
    }

    #[test]
    fn recoherer_artifacts() {
        let (dir, files) = run(r#"{"scenario":"recoherer","noise":"exact"}"#);
        assert_eq!(files.len(), 5);
        let report: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("recoherer-report.json")).unwrap()).unwrap();
        assert_eq!(report["aapt"]["verdict"], "not completely positive");
        assert_eq!(report["sqpt"]["verdict"], "completely positive");
    }

    #[test]
    fn chi_artifacts_for_two_processes() {
        let (_dir, files) = run(r#"{"scenario":"chi","noise":"exact","process":[{"kind":"identity"},{"kind":"dephaser","params":{"p":1}}]}"#);
        assert!(files.contains(&"chi-1-dephaser-aapt.json".to_string()));
        assert_eq!(files.len(), 10);
    }

    #[test]
    fn hash_ignores_out_dir() {
        let mut a = parse_config(r#"{"scenario":"werner"}"#).unwrap();
        let h = config_hash(&a).unwrap();
        a.out_dir = Some("/elsewhere".into());
        assert_eq!(config_hash(&a).unwrap(), h);
        a.trials = 7;
        assert_ne!(config_hash(&a).unwrap(), h);
    }
}
