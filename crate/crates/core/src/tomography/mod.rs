//! Photon-counting measurement simulation and state reconstruction.
//!
//! A measurement setting is one polarization analyzer per photon. Counts are
//! recorded alongside a reference flux (the counts a lossless channel would
//! give for the same integration time), so ratios `counts / reference_counts`
//! carry both the projection probability and the transmission of the state.

mod mle;

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{QptError, Result};
use crate::linalg::{self, outer, pauli, real, tensor, trace, ComplexMatrix, I};
use crate::state::DensityMatrix;

pub use mle::{mle_reconstruct, mle_reconstruct_with, negative_log_likelihood, MleEstimate, MleOptions};

/// The six canonical polarization analyzers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Polarization {
    H,
    V,
    D,
    A,
    R,
    L,
}

impl Polarization {
    pub const ALL: [Polarization; 6] =
        [Polarization::H, Polarization::V, Polarization::D, Polarization::A, Polarization::R, Polarization::L];

    /// Jones vector; D = (H+V)/√2, A = (H−V)/√2, R = (H+iV)/√2, L = (H−iV)/√2.
    pub fn ket(self) -> [Complex64; 2] {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            Polarization::H => [real(1.0), real(0.0)],
            Polarization::V => [real(0.0), real(1.0)],
            Polarization::D => [real(s), real(s)],
            Polarization::A => [real(s), real(-s)],
            Polarization::R => [real(s), I * s],
            Polarization::L => [real(s), -I * s],
        }
    }

    /// The orthogonal analyzer on the same Stokes axis.
    pub fn orthogonal(self) -> Polarization {
        match self {
            Polarization::H => Polarization::V,
            Polarization::V => Polarization::H,
            Polarization::D => Polarization::A,
            Polarization::A => Polarization::D,
            Polarization::R => Polarization::L,
            Polarization::L => Polarization::R,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Polarization::H => 'H',
            Polarization::V => 'V',
            Polarization::D => 'D',
            Polarization::A => 'A',
            Polarization::R => 'R',
            Polarization::L => 'L',
        }
    }
}

impl FromStr for Polarization {
    type Err = QptError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "H" | "h" => Ok(Polarization::H),
            "V" | "v" => Ok(Polarization::V),
            "D" | "d" => Ok(Polarization::D),
            "A" | "a" => Ok(Polarization::A),
            "R" | "r" => Ok(Polarization::R),
            "L" | "l" => Ok(Polarization::L),
            other => Err(QptError::UnknownLabel(other.to_string())),
        }
    }
}

/// Rank-1 projector onto the analyzer state.
pub fn projector(label: Polarization) -> ComplexMatrix {
    let k = label.ket();
    outer(&k, &k)
}

/// One analyzer per photon (one or two photons).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MeasurementSetting {
    labels: Vec<Polarization>,
}

impl MeasurementSetting {
    pub fn single(p: Polarization) -> Self {
        MeasurementSetting { labels: vec![p] }
    }

    pub fn pair(p1: Polarization, p2: Polarization) -> Self {
        MeasurementSetting { labels: vec![p1, p2] }
    }

    pub fn labels(&self) -> &[Polarization] {
        &self.labels
    }

    pub fn num_qubits(&self) -> usize {
        self.labels.len()
    }

    pub fn projector(&self) -> ComplexMatrix {
        self.labels
            .iter()
            .map(|&l| projector(l))
            .reduce(|acc, p| tensor(&acc, &p))
            .expect("settings have at least one label")
    }
}

impl fmt::Display for MeasurementSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.labels {
            write!(f, "{}", l.as_char())?;
        }
        Ok(())
    }
}

impl FromStr for MeasurementSetting {
    type Err = QptError;

    fn from_str(s: &str) -> Result<Self> {
        let labels = s
            .trim()
            .chars()
            .map(|c| c.to_string().parse())
            .collect::<Result<Vec<Polarization>>>()?;
        if labels.is_empty() || labels.len() > 2 {
            return Err(QptError::UnknownLabel(s.to_string()));
        }
        Ok(MeasurementSetting { labels })
    }
}

/// `[H, V, D, A, R, L]`.
pub fn settings_single() -> Vec<MeasurementSetting> {
    Polarization::ALL.iter().map(|&p| MeasurementSetting::single(p)).collect()
}

/// All 36 analyzer pairs, photon 1 major.
pub fn settings_pair() -> Vec<MeasurementSetting> {
    Polarization::ALL
        .iter()
        .flat_map(|&a| Polarization::ALL.iter().map(move |&b| MeasurementSetting::pair(a, b)))
        .collect()
}

/// The 16 pairs `{H, V, D, R} × {H, V, D, R}`: HH, HV, HD, HR, VH, ...
pub fn settings_pair_16() -> Vec<MeasurementSetting> {
    const FOUR: [Polarization; 4] = [Polarization::H, Polarization::V, Polarization::D, Polarization::R];
    FOUR.iter()
        .flat_map(|&a| FOUR.iter().map(move |&b| MeasurementSetting::pair(a, b)))
        .collect()
}

/// Counts for one setting. `counts` is integral for simulated data; exact
/// (infinite-statistics) records carry the fractional expected value.
#[derive(Debug, Clone, PartialEq)]
pub struct CountRecord {
    pub setting: MeasurementSetting,
    pub counts: f64,
    pub reference_counts: u64,
}

impl CountRecord {
    pub fn rate(&self) -> f64 {
        self.counts / self.reference_counts as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoiseConfig {
    /// Poisson mean for a setting with unit probability.
    pub counts_per_setting: u64,
    pub seed: u64,
}

impl NoiseConfig {
    pub fn new(counts_per_setting: u64, seed: u64) -> Result<Self> {
        if counts_per_setting == 0 {
            return Err(QptError::InvalidParameter { name: "counts_per_setting", value: 0.0, range: ">= 1" });
        }
        Ok(NoiseConfig { counts_per_setting, seed })
    }
}

/// `tr(ρ Π)`, including the weight of a lossy state.
pub fn exact_probability(rho: &DensityMatrix, setting: &MeasurementSetting) -> Result<f64> {
    if rho.num_qubits() != setting.num_qubits() {
        return Err(QptError::DimensionMismatch {
            expected: format!("{}-qubit setting", rho.num_qubits()),
            got: setting.to_string(),
        });
    }
    Ok(trace(&(rho.matrix() * setting.projector())).re)
}

/// Expected counts `N · p` with no shot noise.
pub fn exact_records(rho: &DensityMatrix, settings: &[MeasurementSetting], counts_per_setting: u64) -> Result<Vec<CountRecord>> {
    settings
        .iter()
        .map(|s| {
            let p = exact_probability(rho, s)?.max(0.0);
            Ok(CountRecord { setting: s.clone(), counts: counts_per_setting as f64 * p, reference_counts: counts_per_setting })
        })
        .collect()
}

/// Poisson counts with mean `counts_per_setting · p`, drawn in setting order
/// from a ChaCha8 stream seeded with `noise.seed`.
pub fn simulate_counts(rho: &DensityMatrix, settings: &[MeasurementSetting], noise: &NoiseConfig) -> Result<Vec<CountRecord>> {
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    simulate_counts_with(rho, settings, noise.counts_per_setting, &mut rng)
}

pub fn simulate_counts_with<R: Rng + ?Sized>(
    rho: &DensityMatrix,
    settings: &[MeasurementSetting],
    counts_per_setting: u64,
    rng: &mut R,
) -> Result<Vec<CountRecord>> {
    settings
        .iter()
        .map(|s| {
            let mean = counts_per_setting as f64 * exact_probability(rho, s)?.max(0.0);
            let counts = if mean > 0.0 {
                Poisson::new(mean).map_err(|e| QptError::Numerical(e.to_string()))?.sample(rng)
            } else {
                0.0
            };
            Ok(CountRecord { setting: s.clone(), counts, reference_counts: counts_per_setting })
        })
        .collect()
}

/// Per-trial seed `base + trial`.
pub fn trial_seed(base: u64, trial: u64) -> u64 {
    base.wrapping_add(trial)
}

/// Independent sub-stream of a trial seed (SplitMix64 finalizer of
/// `seed ⊕ mix(stream)`), used to give each measured state its own draws.
pub fn stream_seed(seed: u64, stream: u64) -> u64 {
    splitmix64(seed ^ splitmix64(stream.wrapping_add(0x9e37_79b9_7f4a_7c15)))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Linear-inversion estimate; may be non-physical under noise.
#[derive(Debug, Clone)]
pub struct LinearEstimate {
    pub state: DensityMatrix,
    pub physical: bool,
}

/// (Pauli index, positive pole) for the three Stokes axes S1, S2, S3.
const AXES: [(usize, Polarization); 3] = [(3, Polarization::H), (1, Polarization::D), (2, Polarization::R)];

fn index_records(records: &[CountRecord]) -> BTreeMap<MeasurementSetting, &CountRecord> {
    let mut map = BTreeMap::new();
    for r in records {
        map.entry(r.setting.clone()).or_insert(r);
    }
    map
}

fn lookup<'a>(
    map: &BTreeMap<MeasurementSetting, &'a CountRecord>,
    wanted: &[MeasurementSetting],
) -> Result<Vec<&'a CountRecord>> {
    let missing: Vec<String> = wanted.iter().filter(|s| !map.contains_key(s)).map(|s| s.to_string()).collect();
    if !missing.is_empty() {
        return Err(QptError::MissingSettings(missing.join(", ")));
    }
    Ok(wanted.iter().map(|s| map[s]).collect())
}

/// Stokes inversion from the 6 single-photon settings or the 36 pair settings.
///
/// Each Stokes (or joint-Stokes) parameter is normalized by the total flux of
/// its own group of orthogonal settings; the weight is the mean group flux
/// divided by the reference flux.
pub fn linear_reconstruct(records: &[CountRecord]) -> Result<LinearEstimate> {
    let qubits = records.first().map(|r| r.setting.num_qubits()).ok_or_else(|| QptError::MissingSettings("no records".into()))?;
    if records.iter().any(|r| r.setting.num_qubits() != qubits) {
        return Err(QptError::DimensionMismatch { expected: format!("{qubits}-photon settings"), got: "mixed".into() });
    }
    let map = index_records(records);
    let matrix = if qubits == 1 {
        lookup(&map, &settings_single())?;
        let mut weight = 0.0;
        let mut m = ComplexMatrix::zeros(2, 2);
        for (k, pole) in AXES {
            let plus = map[&MeasurementSetting::single(pole)].rate();
            let minus = map[&MeasurementSetting::single(pole.orthogonal())].rate();
            let total = plus + minus;
            weight += total / 3.0;
            if total > 0.0 {
                m += pauli(k).scale((plus - minus) / total);
            }
        }
        (m + pauli(0)).scale(weight / 2.0)
    } else {
        lookup(&map, &settings_pair())?;
        let mut weight = 0.0;
        let mut corr = [[0.0f64; 4]; 4];
        corr[0][0] = 1.0;
        for (ka, pa) in AXES {
            for (kb, pb) in AXES {
                let rate = |a: Polarization, b: Polarization| map[&MeasurementSetting::pair(a, b)].rate();
                let (pp, pm) = (rate(pa, pb), rate(pa, pb.orthogonal()));
                let (mp, mm) = (rate(pa.orthogonal(), pb), rate(pa.orthogonal(), pb.orthogonal()));
                let total = pp + pm + mp + mm;
                weight += total / 9.0;
                if total > 0.0 {
                    corr[ka][kb] = (pp - pm - mp + mm) / total;
                    corr[ka][0] += (pp + pm - mp - mm) / total / 3.0;
                    corr[0][kb] += (pp - pm + mp - mm) / total / 3.0;
                }
            }
        }
        let mut m = ComplexMatrix::zeros(4, 4);
        for (a, row) in corr.iter().enumerate() {
            for (b, &t) in row.iter().enumerate() {
                if t != 0.0 {
                    m += tensor(&pauli(a), &pauli(b)).scale(t);
                }
            }
        }
        m.scale(weight / 4.0)
    };
    let state = DensityMatrix::new_unchecked(matrix)?;
    let physical = state.is_physical();
    Ok(LinearEstimate { state, physical })
}

/// Least-squares inversion of `rate_i = tr(ρ Π_i)` over Hermitian ρ, for
/// any tomographically complete setting list.
pub fn least_squares_reconstruct(records: &[CountRecord], dim: usize) -> Result<DensityMatrix> {
    let basis = hermitian_basis(dim);
    let design = nalgebra::DMatrix::<f64>::from_fn(records.len(), basis.len(), |i, mu| {
        trace(&(&basis[mu] * records[i].setting.projector())).re
    });
    let rates = nalgebra::DVector::<f64>::from_iterator(records.len(), records.iter().map(CountRecord::rate));
    let svd = design.svd(true, true);
    let rank = svd.rank(1e-10 * svd.singular_values.max());
    if rank < basis.len() {
        return Err(QptError::MissingSettings(format!(
            "settings are not tomographically complete (rank {rank} of {})",
            basis.len()
        )));
    }
    let x = svd.solve(&rates, 1e-12).map_err(|e| QptError::Numerical(e.to_string()))?;
    let m = basis.iter().zip(x.iter()).fold(ComplexMatrix::zeros(dim, dim), |acc, (b, &c)| acc + b.scale(c));
    DensityMatrix::new_unchecked(m)
}

/// Pauli products, a real basis of Hermitian `dim × dim` matrices.
fn hermitian_basis(dim: usize) -> Vec<ComplexMatrix> {
    if dim == 2 {
        (0..4).map(pauli).collect()
    } else {
        (0..16).map(|k| tensor(&pauli(k / 4), &pauli(k % 4))).collect()
    }
}

pub(crate) fn qubits_for_dim(dim: usize) -> Result<usize> {
    match dim {
        2 => Ok(1),
        4 => Ok(2),
        _ => Err(QptError::DimensionMismatch { expected: "dimension 2 or 4".into(), got: dim.to_string() }),
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    setting_1: String,
    setting_2: String,
    counts: f64,
    reference_counts: u64,
}

/// Writes records as CSV: `setting_1,setting_2,counts,reference_counts`.
pub fn write_records_csv<W: Write>(writer: W, records: &[CountRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in records {
        let labels = r.setting.labels();
        w.serialize(CsvRow {
            setting_1: labels[0].as_char().to_string(),
            setting_2: labels.get(1).map(|l| l.as_char().to_string()).unwrap_or_default(),
            counts: r.counts,
            reference_counts: r.reference_counts,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records_csv<R: Read>(reader: R) -> Result<Vec<CountRecord>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        let row: CsvRow = row?;
        let first: Polarization = row.setting_1.parse()?;
        let setting = if row.setting_2.trim().is_empty() {
            MeasurementSetting::single(first)
        } else {
            MeasurementSetting::pair(first, row.setting_2.parse()?)
        };
        if row.reference_counts == 0 || !(row.counts >= 0.0) {
            return Err(QptError::Config {
                path: format!("counts[{setting}]"),
                message: "counts must be non-negative and reference_counts positive".into(),
            });
        }
        out.push(CountRecord { setting, counts: row.counts, reference_counts: row.reference_counts });
    }
    Ok(out)
}

/// Identity check used by tests and diagnostics: `Σ_i Π_i` for a setting list.
pub fn projector_sum(settings: &[MeasurementSetting]) -> ComplexMatrix {
    let dim = 1 << settings.first().map(|s| s.num_qubits()).unwrap_or(1);
    settings.iter().fold(linalg::identity(dim).scale(0.0), |acc, s| acc + s.projector())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{approx_eq, diag, ONE, ZERO};
    use crate::state::{density_from_stokes, states, StokesVector};

    #[test]
    fn projector_examples() {
        assert!(approx_eq(&projector(Polarization::H), &diag(&[ONE, ZERO]), 0.0));
        let d = projector(Polarization::D);
        assert!(approx_eq(&d, &ComplexMatrix::from_element(2, 2, real(0.5)), 1e-15));
        let r = projector(Polarization::R);
        let want = linalg::from_rows(2, &[real(0.5), linalg::c(0.0, -0.5), linalg::c(0.0, 0.5), real(0.5)]);
        assert!(approx_eq(&r, &want, 1e-15));
        assert!(matches!("X".parse::<Polarization>(), Err(QptError::UnknownLabel(_))));
    }

    #[test]
    fn exact_probability_examples() {
        let h = MeasurementSetting::single(Polarization::H);
        let d = MeasurementSetting::single(Polarization::D);
        assert!((exact_probability(&states::h(), &h).unwrap() - 1.0).abs() < 1e-15);
        assert!((exact_probability(&states::h(), &d).unwrap() - 0.5).abs() < 1e-15);
        // Oracle: ⟨HH|φ−⟩ = 1/√2.
        let hh = MeasurementSetting::pair(Polarization::H, Polarization::H);
        assert!((exact_probability(&states::phi_minus(), &hh).unwrap() - 0.5).abs() < 1e-15);
        assert!((exact_probability(&states::h().scaled(0.88), &h).unwrap() - 0.88).abs() < 1e-15);
        assert!(exact_probability(&states::h(), &hh).is_err());
    }

    #[test]
    fn setting_lists() {
        let single: Vec<String> = settings_single().iter().map(|s| s.to_string()).collect();
        assert_eq!(single, ["H", "V", "D", "A", "R", "L"]);
        assert_eq!(settings_pair().len(), 36);
        let sixteen: Vec<String> = settings_pair_16().iter().map(|s| s.to_string()).collect();
        assert_eq!(&sixteen[..6], ["HH", "HV", "HD", "HR", "VH", "VV"]);
        assert_eq!(sixteen.len(), 16);
        assert!(approx_eq(&projector_sum(&settings_single()), &linalg::identity(2).scale(3.0), 1e-15));
        assert!(approx_eq(&projector_sum(&settings_pair()), &linalg::identity(4).scale(9.0), 1e-14));
        assert_eq!("HV".parse::<MeasurementSetting>().unwrap(), MeasurementSetting::pair(Polarization::H, Polarization::V));
    }

    #[test]
    fn zero_probability_gives_zero_counts() {
        let noise = NoiseConfig::new(13000, 5).unwrap();
        for seed in 0..20 {
            let recs = simulate_counts(&states::h(), &[MeasurementSetting::single(Polarization::V)], &NoiseConfig { seed, ..noise }).unwrap();
            assert_eq!(recs[0].counts, 0.0);
        }
    }

    #[test]
    fn simulation_is_deterministic_per_seed() {
        let settings = settings_single();
        let a = simulate_counts(&states::d(), &settings, &NoiseConfig::new(1000, 1).unwrap()).unwrap();
        let b = simulate_counts(&states::d(), &settings, &NoiseConfig::new(1000, 1).unwrap()).unwrap();
        let c = simulate_counts(&states::d(), &settings, &NoiseConfig::new(1000, 2).unwrap()).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.iter().all(|r| r.counts.fract() == 0.0 && r.reference_counts == 1000));
        assert!(NoiseConfig::new(0, 1).is_err());
    }

    #[test]
    fn linear_round_trip_examples() {
        let est = linear_reconstruct(&exact_records(&states::r(), &settings_single(), 1000).unwrap()).unwrap();
        assert!(approx_eq(est.state.matrix(), states::r().matrix(), 1e-12));
        assert!(est.physical);
        let est = linear_reconstruct(&exact_records(&states::phi_minus(), &settings_pair(), 1000).unwrap()).unwrap();
        assert!(approx_eq(est.state.matrix(), states::phi_minus().matrix(), 1e-12));
        let lossy = states::d().scaled(0.45);
        let est = linear_reconstruct(&exact_records(&lossy, &settings_single(), 77).unwrap()).unwrap();
        assert!(approx_eq(est.state.matrix(), lossy.matrix(), 1e-12));
    }

    #[test]
    fn linear_flags_unphysical_records() {
        let mut recs = exact_records(&states::h(), &settings_single(), 1000).unwrap();
        // Push S2 beyond the sphere: |S| = √(1 + 0.2²) > 1.
        recs[2].counts = 600.0;
        recs[3].counts = 400.0;
        let est = linear_reconstruct(&recs).unwrap();
        let s = crate::state::stokes_of(&est.state).unwrap();
        assert!(s.norm() > 1.0);
        assert!(!est.physical);
    }

    #[test]
    fn linear_reports_missing_settings() {
        let recs = exact_records(&states::h(), &settings_single()[..4], 100).unwrap();
        match linear_reconstruct(&recs) {
            Err(QptError::MissingSettings(m)) => assert_eq!(m, "R, L"),
            other => panic!("{other:?}"),
        }
        let recs = exact_records(&states::werner(), &settings_pair_16(), 100).unwrap();
        assert!(matches!(linear_reconstruct(&recs), Err(QptError::MissingSettings(_))));
    }

    #[test]
    fn least_squares_handles_sixteen_settings() {
        let recs = exact_records(&states::werner(), &settings_pair_16(), 100).unwrap();
        let est = least_squares_reconstruct(&recs, 4).unwrap();
        assert!(approx_eq(est.matrix(), states::werner().matrix(), 1e-12));
        let incomplete = exact_records(&states::werner(), &settings_pair_16()[..10], 100).unwrap();
        assert!(least_squares_reconstruct(&incomplete, 4).is_err());
        let rho = density_from_stokes(StokesVector::new(0.1, -0.3, 0.5)).scaled(0.6);
        let est = least_squares_reconstruct(&exact_records(&rho, &settings_single(), 10).unwrap(), 2).unwrap();
        assert!(approx_eq(est.matrix(), rho.matrix(), 1e-12));
    }

    #[test]
    fn csv_round_trip() {
        let mut recs = simulate_counts(&states::werner(), &settings_pair_16(), &NoiseConfig::new(500, 3).unwrap()).unwrap();
        recs.extend(exact_records(&states::h(), &settings_single(), 4).unwrap());
        let mut buf = Vec::new();
        write_records_csv(&mut buf, &recs).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("setting_1,setting_2,counts,reference_counts\n"));
        assert!(text.contains("\nH,,4.0,4\nV,,0.0,4\n"), "{text}");
        assert_eq!(read_records_csv(buf.as_slice()).unwrap(), recs);
    }

    #[test]
    fn stream_seeds_differ() {
        let a: Vec<u64> = (0..4).map(|s| stream_seed(trial_seed(7, 0), s)).collect();
        let b: Vec<u64> = (0..4).map(|s| stream_seed(trial_seed(7, 1), s)).collect();
        let mut all = a.clone();
        all.extend(&b);
        all.sort();
        all.dedup();
        assert_eq!(all.len(), 8);
    }
}
