//! Monte-Carlo comparison of SQPT, Bell-state EAPT and Werner-state AAPT.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::process_fidelity;
use crate::basis::StatePreparationBasis;
use crate::channel::{kraus_to_chi, KrausChannel, QuantumProcess};
use crate::error::Result;
use crate::linalg::Subsystem;
use crate::process::{aapt, aapt_usable, eapt, sqpt, Method, ProcessEstimate, SqptInput};
use crate::state::{states, DensityMatrix};
use crate::tomography::{
    exact_records, least_squares_reconstruct, linear_reconstruct, mle_reconstruct, settings_single,
    simulate_counts_with, stream_seed, trial_seed, CountRecord, MeasurementSetting,
};

use super::config::{Estimator, Noise, PairSettings, ScenarioConfig, SigmaMode};

/// How a state is measured and reconstructed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    pub noise: Noise,
    pub estimator: Estimator,
}

impl Measurement {
    pub fn records(&self, rho: &DensityMatrix, settings: &[MeasurementSetting], seed: u64) -> Result<Vec<CountRecord>> {
        match self.noise {
            Noise::Exact => exact_records(rho, settings, super::config::DEFAULT_COUNTS),
            Noise::Poisson(p) => simulate_counts_with(rho, settings, p.counts, &mut ChaCha8Rng::seed_from_u64(seed)),
        }
    }

    pub fn reconstruct(&self, records: &[CountRecord], dim: usize) -> Result<DensityMatrix> {
        let linear = match self.estimator {
            Estimator::Auto => self.noise == Noise::Exact,
            Estimator::Linear => true,
            Estimator::Mle => false,
        };
        if !linear {
            return Ok(mle_reconstruct(records, dim)?.state);
        }
        let full = if dim == 2 { 6 } else { 36 };
        if records.len() == full {
            Ok(linear_reconstruct(records)?.state)
        } else {
            least_squares_reconstruct(records, dim)
        }
    }

    /// Simulated tomography of `rho`, drawing from the stream `seed`.
    pub fn estimate(&self, rho: &DensityMatrix, settings: &[MeasurementSetting], seed: u64) -> Result<DensityMatrix> {
        self.reconstruct(&self.records(rho, settings, seed)?, rho.dim())
    }
}

#[derive(Debug, Clone)]
pub struct ComparisonOptions {
    pub measurement: Measurement,
    pub trials: u64,
    pub pair_settings: PairSettings,
    pub sigma: SigmaMode,
}

impl ComparisonOptions {
    fn base_seed(&self) -> u64 {
        self.measurement.noise.seed().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodSummary {
    pub method: Method,
    pub mean_fidelity: f64,
    pub std_fidelity: f64,
    pub trials: u64,
}

impl MethodSummary {
    fn from_samples(method: Method, samples: &[f64]) -> Self {
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = if samples.len() > 1 { samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
        MethodSummary { method, mean_fidelity: mean, std_fidelity: var.sqrt(), trials: samples.len() as u64 }
    }

    /// Approximate standard error of the sample standard deviation.
    pub fn std_error(&self) -> f64 {
        if self.trials < 2 {
            return f64::INFINITY;
        }
        self.std_fidelity / (2.0 * (self.trials as f64 - 1.0)).sqrt()
    }
}

#[derive(Debug, Clone)]
pub struct TrialResult {
    pub seed: u64,
    /// SQPT, EAPT, AAPT.
    pub fidelities: [f64; 3],
}

#[derive(Debug, Clone)]
pub struct ComparisonReport {
    pub summaries: Vec<MethodSummary>,
    pub trials: Vec<TrialResult>,
}

impl ComparisonReport {
    pub fn summary(&self, method: Method) -> &MethodSummary {
        self.summaries.iter().find(|s| s.method == method).expect("all methods are summarized")
    }

    /// `(std_a − std_b) / sqrt(se_a² + se_b²)`.
    pub fn std_significance(&self, a: Method, b: Method) -> f64 {
        let (a, b) = (self.summary(a), self.summary(b));
        (a.std_fidelity - b.std_fidelity) / (a.std_error().powi(2) + b.std_error().powi(2)).sqrt()
    }

    pub fn write_trials_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["trial", "seed", "sqpt", "eapt", "aapt"])?;
        for (k, t) in self.trials.iter().enumerate() {
            let [a, b, c] = t.fidelities;
            w.write_record([k.to_string(), t.seed.to_string(), a.to_string(), b.to_string(), c.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// All three reconstructions from one trial's worth of simulated data.
pub struct TrialEstimates {
    pub sqpt: ProcessEstimate,
    pub eapt: ProcessEstimate,
    pub aapt: ProcessEstimate,
}

/// Streams within a trial: 0..4 the SQPT inputs, then σ′ and σ for the Bell
/// and Werner runs.
pub fn run_trial(channel: &KrausChannel, options: &ComparisonOptions, seed: u64) -> Result<TrialEstimates> {
    let m = &options.measurement;
    let outputs = StatePreparationBasis::standard()
        .states()
        .iter()
        .enumerate()
        .map(|(j, rho)| m.estimate(&channel.apply(rho)?, &settings_single(), stream_seed(seed, j as u64)))
        .collect::<Result<Vec<_>>>()?;
    let sqpt_estimate = sqpt(&SqptInput::new(outputs)?)?;

    let pairs = options.pair_settings.settings();
    let assisted = |sigma: DensityMatrix, stream: u64| -> Result<(DensityMatrix, DensityMatrix)> {
        let sigma_prime = m.estimate(&channel.apply_extended(&sigma, Subsystem::A)?, &pairs, stream_seed(seed, stream))?;
        let sigma = match options.sigma {
            SigmaMode::Ideal => sigma,
            SigmaMode::Measured => m.estimate(&sigma, &pairs, stream_seed(seed, stream + 1))?,
        };
        Ok((sigma, sigma_prime))
    };
    let (bell, bell_prime) = assisted(states::phi_minus(), 4)?;
    let (werner, werner_prime) = assisted(states::werner(), 6)?;
    aapt_usable(werner.matrix())?;
    Ok(TrialEstimates { sqpt: sqpt_estimate, eapt: eapt(&bell, &bell_prime)?, aapt: aapt(&werner, &werner_prime)? })
}

/// Trials run in parallel and are collected in trial order, so the report
/// does not depend on scheduling.
pub fn compare_methods(channel: &KrausChannel, options: &ComparisonOptions) -> Result<ComparisonReport> {
    let truth = kraus_to_chi(channel);
    let trials = (0..options.trials)
        .into_par_iter()
        .map(|t| {
            let seed = trial_seed(options.base_seed(), t);
            let est = run_trial(channel, options, seed)?;
            Ok(TrialResult {
                seed,
                fidelities: [
                    process_fidelity(&est.sqpt.chi, &truth)?,
                    process_fidelity(&est.eapt.chi, &truth)?,
                    process_fidelity(&est.aapt.chi, &truth)?,
                ],
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let summaries = [Method::Sqpt, Method::Eapt, Method::Aapt]
        .into_iter()
        .enumerate()
        .map(|(k, method)| MethodSummary::from_samples(method, &trials.iter().map(|t| t.fidelities[k]).collect::<Vec<_>>()))
        .collect();
    Ok(ComparisonReport { summaries, trials })
}

pub fn options_from_config(config: &ScenarioConfig) -> ComparisonOptions {
    ComparisonOptions {
        measurement: Measurement { noise: config.noise, estimator: config.estimator },
        trials: config.trials,
        pair_settings: config.settings,
        sigma: config.sigma,
    }
}

/// Runs the comparison for the single process of a `compare` config.
pub fn run_method_comparison(config: &ScenarioConfig) -> Result<ComparisonReport> {
    config.validate()?;
    let channel = config.processes()[0].channel()?;
    compare_methods(&channel, &options_from_config(config))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::config::{parse_config, PoissonNoise};

    fn options(noise: Noise, trials: u64) -> ComparisonOptions {
        ComparisonOptions {
            measurement: Measurement { noise, estimator: Estimator::Auto },
            trials,
            pair_settings: PairSettings::Full,
            sigma: SigmaMode::Measured,
        }
    }

    #[test]
    fn exact_statistics_give_unit_fidelity() {
        for ch in [KrausChannel::identity(), KrausChannel::waveplate(1.0, 0.2), KrausChannel::dephaser(0.4).unwrap()] {
            let r = compare_methods(&ch, &options(Noise::Exact, 1)).unwrap();
            for s in &r.summaries {
                assert!((s.mean_fidelity - 1.0).abs() < 1e-8, "{s:?}");
            }
        }
    }

    #[test]
    fn minimal_pair_settings_also_exact() {
        let mut o = options(Noise::Exact, 1);
        o.pair_settings = PairSettings::Minimal;
        let r = compare_methods(&KrausChannel::rotator(0.3), &o).unwrap();
        for s in &r.summaries {
            assert!((s.mean_fidelity - 1.0).abs() < 1e-8, "{s:?}");
        }
    }

    #[test]
    fn noisy_comparison_is_deterministic() {
        let o = options(Noise::Poisson(PoissonNoise { counts: 2000, seed: 9 }), 3);
        let ch = KrausChannel::waveplate(std::f64::consts::PI, std::f64::consts::FRAC_PI_8);
        let a = compare_methods(&ch, &o).unwrap();
        let b = compare_methods(&ch, &o).unwrap();
        assert_eq!(a.summaries, b.summaries);
        for s in &a.summaries {
            assert!(s.mean_fidelity > 0.9 && s.mean_fidelity <= 1.0);
            assert_eq!(s.trials, 3);
        }
        assert_eq!(a.trials[2].seed, 11);
    }

    #[test]
    fn config_entry_point() {
        let c = parse_config(r#"{"scenario":"compare","process":{"kind":"identity"},"noise":"exact","trials":2}"#).unwrap();
        let r = run_method_comparison(&c).unwrap();
        assert_eq!(r.summaries.len(), 3);
        assert_eq!(r.summary(Method::Aapt).trials, 2);
        let json = serde_json::to_value(&r.summaries).unwrap();
        assert_eq!(json[1]["method"], "EAPT");
        assert!(json[0].get("std_fidelity").is_some());
    }
}
