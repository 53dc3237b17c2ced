//! JSON scenario configuration.
//!
//! ```json
//! {
//!   "scenario": "compare",
//!   "process": {"kind": "waveplate", "params": {"retardance": 3.14159, "axis_angle": 0.3927}},
//!   "noise": {"counts": 13000, "seed": 7},
//!   "trials": 200
//! }
//! ```
//!
//! `process` may also be a list, `noise` may be the string `"exact"`.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::de::{self, Deserializer, MapAccess, SeqAccess, Unexpected, Visitor};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use crate::analysis::DEFAULT_RESOLUTION;
use crate::channel::KrausChannel;
use crate::error::{QptError, Result};
use crate::tomography::{settings_pair, settings_pair_16, MeasurementSetting};

use super::Kernel;

pub const DEFAULT_COUNTS: u64 = 13_000;
pub const DEFAULT_TRIALS: u64 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioKind {
    /// Sphere-map data for each configured process.
    Spheremap,
    /// χ of each configured process by SQPT, EAPT and AAPT.
    Chi,
    Werner,
    Recoherer,
    Compare,
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).map_err(|_| fmt::Error)?;
        f.write_str(s.as_str().unwrap_or_default())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProcessSpec {
    Identity,
    Waveplate { retardance: f64, axis_angle: f64 },
    Rotator { angle: f64 },
    Dephaser { p: f64 },
    CoherentPolarizer { t_h: f64, t_v: f64 },
    IncoherentPolarizer { p: f64 },
}

impl ProcessSpec {
    pub fn channel(&self) -> Result<KrausChannel> {
        match *self {
            ProcessSpec::Identity => Ok(KrausChannel::identity()),
            ProcessSpec::Waveplate { retardance, axis_angle } => Ok(KrausChannel::waveplate(retardance, axis_angle)),
            ProcessSpec::Rotator { angle } => Ok(KrausChannel::rotator(angle)),
            ProcessSpec::Dephaser { p } => KrausChannel::dephaser(p),
            ProcessSpec::CoherentPolarizer { t_h, t_v } => KrausChannel::coherent_partial_polarizer(t_h, t_v),
            ProcessSpec::IncoherentPolarizer { p } => KrausChannel::incoherent_partial_polarizer(p),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            ProcessSpec::Identity => "identity",
            ProcessSpec::Waveplate { .. } => "waveplate",
            ProcessSpec::Rotator { .. } => "rotator",
            ProcessSpec::Dephaser { .. } => "dephaser",
            ProcessSpec::CoherentPolarizer { .. } => "coherent_polarizer",
            ProcessSpec::IncoherentPolarizer { .. } => "incoherent_polarizer",
        }
    }
}

/// One process or a list of them.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ProcessList(pub Vec<ProcessSpec>);

impl<'de> Deserialize<'de> for ProcessList {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = ProcessList;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a process object {kind, params} or a list of them")
            }
            fn visit_map<A: MapAccess<'de>>(self, map: A) -> std::result::Result<ProcessList, A::Error> {
                Ok(ProcessList(vec![ProcessSpec::deserialize(de::value::MapAccessDeserializer::new(map))?]))
            }
            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> std::result::Result<ProcessList, A::Error> {
                let mut out = Vec::new();
                while let Some(p) = seq.next_element()? {
                    out.push(p);
                }
                Ok(ProcessList(out))
            }
        }
        d.deserialize_any(V)
    }
}

impl Serialize for ProcessList {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self.0.as_slice() {
            [one] => one.serialize(s),
            many => many.serialize(s),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoissonNoise {
    #[serde(default = "default_counts")]
    pub counts: u64,
    #[serde(default)]
    pub seed: u64,
}

fn default_counts() -> u64 {
    DEFAULT_COUNTS
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Noise {
    /// Infinite statistics.
    Exact,
    Poisson(PoissonNoise),
}

impl Default for Noise {
    fn default() -> Self {
        Noise::Poisson(PoissonNoise { counts: DEFAULT_COUNTS, seed: 0 })
    }
}

impl Noise {
    pub fn seed(&self) -> Option<u64> {
        match self {
            Noise::Exact => None,
            Noise::Poisson(p) => Some(p.seed),
        }
    }
}

impl<'de> Deserialize<'de> for Noise {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = Noise;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("\"exact\" or {counts, seed}")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Noise, E> {
                if v == "exact" {
                    Ok(Noise::Exact)
                } else {
                    Err(E::invalid_value(Unexpected::Str(v), &self))
                }
            }
            fn visit_map<A: MapAccess<'de>>(self, map: A) -> std::result::Result<Noise, A::Error> {
                Ok(Noise::Poisson(PoissonNoise::deserialize(de::value::MapAccessDeserializer::new(map))?))
            }
        }
        d.deserialize_any(V)
    }
}

impl Serialize for Noise {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Noise::Exact => s.serialize_str("exact"),
            Noise::Poisson(p) => p.serialize(s),
        }
    }
}

/// Where the two-qubit input state for EAPT/AAPT comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SigmaMode {
    /// Reconstructed from its own tomography run.
    #[default]
    Measured,
    /// The exact prepared state.
    Ideal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    /// Linear inversion for exact data, MLE for counts.
    #[default]
    Auto,
    Linear,
    Mle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum PairSettings {
    /// All 36 pairs from {H, V, D, A, R, L}.
    #[default]
    #[serde(rename = "36")]
    Full,
    /// The 16 pairs from {H, V, D, R}.
    #[serde(rename = "16")]
    Minimal,
}

impl PairSettings {
    pub fn settings(self) -> Vec<MeasurementSetting> {
        match self {
            PairSettings::Full => settings_pair(),
            PairSettings::Minimal => settings_pair_16(),
        }
    }
}

fn default_trials() -> u64 {
    DEFAULT_TRIALS
}

fn default_resolution() -> [usize; 2] {
    [DEFAULT_RESOLUTION.0, DEFAULT_RESOLUTION.1]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioKind,
    #[serde(default)]
    pub process: ProcessList,
    #[serde(default)]
    pub noise: Noise,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub kernel: Kernel,
    #[serde(default)]
    pub settings: PairSettings,
    #[serde(default)]
    pub sigma: SigmaMode,
    #[serde(default)]
    pub estimator: Estimator,
    #[serde(default = "default_resolution")]
    pub resolution: [usize; 2],
}

fn invalid(path: &str, message: impl Into<String>) -> QptError {
    QptError::Config { path: path.into(), message: message.into() }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(invalid("trials", "must be at least 1"));
        }
        if let Noise::Poisson(p) = self.noise {
            if p.counts == 0 {
                return Err(invalid("noise.counts", "must be at least 1"));
            }
        }
        let [n_lat, n_lon] = self.resolution;
        if n_lat < 2 || n_lon < 3 {
            return Err(invalid("resolution", format!("need at least [2, 3], got [{n_lat}, {n_lon}]")));
        }
        let needs_process = matches!(self.scenario, ScenarioKind::Spheremap | ScenarioKind::Chi | ScenarioKind::Compare);
        if needs_process && self.process.0.is_empty() {
            return Err(invalid("process", format!("scenario \"{}\" needs at least one process", self.scenario)));
        }
        if self.scenario == ScenarioKind::Compare && self.process.0.len() != 1 {
            return Err(invalid("process", "compare takes exactly one process"));
        }
        for (k, p) in self.process.0.iter().enumerate() {
            p.channel().map_err(|e| invalid(&format!("process[{k}].params"), e.to_string()))?;
        }
        Ok(())
    }

    pub fn processes(&self) -> &[ProcessSpec] {
        &self.process.0
    }

    /// Overrides from the command line. A count override turns an exact
    /// config into a Poisson one.
    pub fn apply_overrides(&mut self, seed: Option<u64>, counts: Option<u64>) {
        if let Some(counts) = counts {
            let seed = self.noise.seed().unwrap_or(0);
            self.noise = Noise::Poisson(PoissonNoise { counts, seed });
        }
        if let (Some(seed), Noise::Poisson(p)) = (seed, &mut self.noise) {
            p.seed = seed;
        }
    }
}

/// Parses and validates a config. Errors name the offending field.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let config: ScenarioConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        invalid(&path, e.into_inner().to_string())
    })?;
    config.validate()?;
    Ok(config)
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    parse_config(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config(r#"{"scenario":"compare","process":{"kind":"identity"}}"#).unwrap();
        assert_eq!(c.noise, Noise::Poisson(PoissonNoise { counts: 13_000, seed: 0 }));
        assert_eq!(c.trials, 100);
        assert_eq!(c.kernel, Kernel::Triangular);
        assert_eq!(c.processes(), [ProcessSpec::Identity]);
        assert_eq!(c.resolution, [33, 64]);
    }

    #[test]
    fn zero_counts_is_rejected_with_path() {
        let err = parse_config(r#"{"scenario":"compare","process":{"kind":"identity"},"noise":{"counts":0,"seed":1}}"#).unwrap_err();
        assert!(err.to_string().contains("noise.counts"), "{err}");
    }

    #[test]
    fn unknown_kind_lists_valid_kinds() {
        let err = parse_config(r#"{"scenario":"compare","process":{"kind":"mirror"}}"#).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("process") && msg.contains("waveplate") && msg.contains("incoherent_polarizer"), "{msg}");
    }

    #[test]
    fn bad_nested_field_reports_path() {
        let err = parse_config(r#"{"scenario":"chi","process":[{"kind":"identity"},{"kind":"dephaser","params":{"p":"x"}}]}"#).unwrap_err();
        assert!(err.to_string().contains("process[1]"), "{err}");
        let err = parse_config(r#"{"scenario":"chi","process":{"kind":"dephaser","params":{"p":2.0}}}"#).unwrap_err();
        assert!(err.to_string().contains("process[0].params"), "{err}");
    }

    #[test]
    fn exact_noise_and_lists() {
        let c = parse_config(
            r#"{"scenario":"spheremap","noise":"exact","process":[{"kind":"dephaser","params":{"p":1}},{"kind":"coherent_polarizer","params":{"t_h":0.88,"t_v":0.45}}]}"#,
        )
        .unwrap();
        assert_eq!(c.noise, Noise::Exact);
        assert_eq!(c.processes().len(), 2);
        let round = parse_config(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(round, c);
        assert!(parse_config(r#"{"scenario":"werner","noise":"loud"}"#).is_err());
    }

    #[test]
    fn structural_errors() {
        assert!(parse_config(r#"{"scenario":"compare"}"#).is_err());
        assert!(parse_config(r#"{"scenario":"werner","trials":0}"#).is_err());
        assert!(parse_config(r#"{"scenario":"werner","colour":"red"}"#).is_err());
        assert!(parse_config(r#"{"scenario":"werner","settings":"16"}"#).is_ok());
    }

    #[test]
    fn overrides() {
        let mut c = parse_config(r#"{"scenario":"werner","noise":"exact"}"#).unwrap();
        c.apply_overrides(Some(5), None);
        assert_eq!(c.noise, Noise::Exact);
        c.apply_overrides(Some(5), Some(100));
        assert_eq!(c.noise, Noise::Poisson(PoissonNoise { counts: 100, seed: 5 }));
    }
}
