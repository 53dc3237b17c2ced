//! Process fidelity, χ diagnostics and sphere-map data.
//!
//! Process fidelity is the Uhlmann fidelity between the trace-normalized
//! Choi matrices of two processes. It is 1 for identical processes and
//! does not depend on overall loss.

use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{ChiMatrix, QuantumProcess};
use crate::error::{QptError, Result};
use crate::linalg::{self, pauli, tensor, ComplexMatrix, PHYSICAL_TOL};
use crate::state::{self, density_from_stokes, purity, stokes_of, DensityMatrix, StokesVector};

/// Samples whose transmission falls below this are treated as annihilated.
pub const ANNIHILATION_TOL: f64 = 1e-12;

/// Unit-trace Choi matrix `Σ_mn χ_mn (Ẽ_m ⊗ I)|Ω⟩⟨Ω|(Ẽ_n ⊗ I)†` with
/// `|Ω⟩ = |00⟩ + |11⟩`.
pub fn choi_matrix(chi: &ChiMatrix) -> Result<ComplexMatrix> {
    let omega = {
        let mut m = ComplexMatrix::zeros(4, 4);
        for (i, j) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
            m[(i, j)] = linalg::ONE;
        }
        m
    };
    let id = linalg::identity(2);
    let lifted: Vec<_> = (0..4).map(|k| tensor(&pauli(k), &id)).collect();
    let mut j = ComplexMatrix::zeros(4, 4);
    for m in 0..4 {
        for n in 0..4 {
            let z = chi.matrix()[(m, n)];
            if z != linalg::ZERO {
                j += &lifted[m] * &omega * lifted[n].adjoint() * z;
            }
        }
    }
    let tr = linalg::trace(&j).re;
    if tr.abs() <= linalg::ALGEBRA_TOL {
        return Err(QptError::ZeroTraceChi);
    }
    Ok(j.unscale(tr))
}

/// Clips negative eigenvalues and rescales to unit trace. Returns the
/// projected matrix and its Frobenius distance from the input.
fn clip_to_psd(m: &ComplexMatrix) -> Result<(ComplexMatrix, f64)> {
    let (values, vectors) = linalg::hermitian_eigen(m);
    let clipped: Vec<f64> = values.iter().map(|&x| x.max(0.0)).collect();
    let total: f64 = clipped.iter().sum();
    if total <= linalg::ALGEBRA_TOL {
        return Err(QptError::ZeroTraceChi);
    }
    let projected = linalg::spectral_map(&clipped, &vectors, |x| x / total);
    let distance = (&projected - m).norm();
    Ok((projected, distance))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProcessFidelity {
    pub fidelity: f64,
    /// How far each normalized Choi matrix had to move to become positive.
    pub projection_distance: [f64; 2],
}

pub fn process_fidelity_report(a: &ChiMatrix, b: &ChiMatrix) -> Result<ProcessFidelity> {
    let mut projected = Vec::with_capacity(2);
    let mut distance = [0.0; 2];
    for (k, chi) in [a, b].into_iter().enumerate() {
        let residual = chi.hermiticity_residual();
        if residual > PHYSICAL_TOL {
            return Err(QptError::NotHermitian(residual));
        }
        let j = choi_matrix(chi)?;
        let (p, d) = clip_to_psd(&j)?;
        projected.push(p);
        distance[k] = d;
    }
    let fidelity = state::matrix_fidelity(&projected[0], &projected[1])?;
    Ok(ProcessFidelity { fidelity, projection_distance: distance })
}

pub fn process_fidelity(a: &ChiMatrix, b: &ChiMatrix) -> Result<f64> {
    Ok(process_fidelity_report(a, b)?.fidelity)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChiReport {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    pub min_eigenvalue: f64,
    pub trace: f64,
    pub hermiticity_residual: f64,
    pub max_imaginary: f64,
    pub completely_positive: bool,
    pub verdict: &'static str,
}

pub fn chi_report(chi: &ChiMatrix) -> ChiReport {
    let eigenvalues = chi.eigenvalues();
    let min_eigenvalue = eigenvalues.first().copied().unwrap_or(0.0);
    let completely_positive = chi.is_completely_positive();
    ChiReport {
        min_eigenvalue,
        eigenvalues,
        trace: chi.trace(),
        hermiticity_residual: chi.hermiticity_residual(),
        max_imaginary: chi.matrix().iter().map(|z| z.im.abs()).fold(0.0, f64::max),
        completely_positive,
        verdict: if completely_positive { "completely positive" } else { "not completely positive" },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SphereMapSample {
    pub lat_index: usize,
    pub lon_index: usize,
    pub input_stokes: StokesVector,
    /// `None` when the channel annihilates the input.
    pub output_stokes: Option<StokesVector>,
    pub transmission: f64,
    pub output_purity: Option<f64>,
}

impl SphereMapSample {
    pub fn annihilated(&self) -> bool {
        self.output_stokes.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Marker {
    pub label: &'static str,
    pub sample: SphereMapSample,
}

/// Latitude is measured from the H pole (`+S1`); each pole is a single
/// sample with `lon_index = 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SphereMesh {
    pub n_lat: usize,
    pub n_lon: usize,
    pub samples: Vec<SphereMapSample>,
    /// Inputs H, R, V, A, evaluated exactly.
    pub markers: Vec<Marker>,
}

pub const DEFAULT_RESOLUTION: (usize, usize) = (33, 64);

fn grid_stokes(i: usize, j: usize, n_lat: usize, n_lon: usize) -> StokesVector {
    let theta = PI * i as f64 / (n_lat - 1) as f64;
    if i == 0 {
        return StokesVector::new(1.0, 0.0, 0.0);
    }
    if i == n_lat - 1 {
        return StokesVector::new(-1.0, 0.0, 0.0);
    }
    let phi = 2.0 * PI * j as f64 / n_lon as f64;
    StokesVector::new(theta.cos(), theta.sin() * phi.cos(), theta.sin() * phi.sin())
}

fn sample<P: QuantumProcess + ?Sized>(process: &P, lat_index: usize, lon_index: usize, input: StokesVector) -> Result<SphereMapSample> {
    let out = process.apply(&density_from_stokes(input))?;
    let transmission = out.weight();
    let (output_stokes, output_purity) = if transmission < ANNIHILATION_TOL {
        (None, None)
    } else {
        (Some(stokes_of(&out)?), Some(purity(&out)?))
    };
    Ok(SphereMapSample { lat_index, lon_index, input_stokes: input, output_stokes, transmission, output_purity })
}

/// Applies `process` to a latitude/longitude grid of pure inputs.
pub fn sphere_map<P: QuantumProcess + Sync + ?Sized>(process: &P, n_lat: usize, n_lon: usize) -> Result<SphereMesh> {
    if n_lat < 2 {
        return Err(QptError::InvalidParameter { name: "n_lat", value: n_lat as f64, range: ">= 2" });
    }
    if n_lon < 3 {
        return Err(QptError::InvalidParameter { name: "n_lon", value: n_lon as f64, range: ">= 3" });
    }
    let points: Vec<(usize, usize)> = (0..n_lat)
        .flat_map(|i| {
            let lons = if i == 0 || i == n_lat - 1 { 1 } else { n_lon };
            (0..lons).map(move |j| (i, j))
        })
        .collect();
    let samples = points
        .par_iter()
        .map(|&(i, j)| sample(process, i, j, grid_stokes(i, j, n_lat, n_lon)))
        .collect::<Result<Vec<_>>>()?;
    let markers = [
        ("H", StokesVector::new(1.0, 0.0, 0.0)),
        ("R", StokesVector::new(0.0, 0.0, 1.0)),
        ("V", StokesVector::new(-1.0, 0.0, 0.0)),
        ("A", StokesVector::new(0.0, -1.0, 0.0)),
    ]
    .into_iter()
    .map(|(label, s)| Ok(Marker { label, sample: sample(process, 0, 0, s)? }))
    .collect::<Result<Vec<_>>>()?;
    Ok(SphereMesh { n_lat, n_lon, samples, markers })
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

impl SphereMesh {
    /// Columns: lat_index, lon_index, in_s1..3, out_s1..3, transmission,
    /// purity. Annihilated samples leave the output fields empty.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "lat_index", "lon_index", "in_s1", "in_s2", "in_s3", "out_s1", "out_s2", "out_s3", "transmission", "purity",
        ])?;
        for s in &self.samples {
            let out = s.output_stokes.map(|o| o.as_array());
            let [i1, i2, i3] = s.input_stokes.as_array();
            w.write_record([
                s.lat_index.to_string(),
                s.lon_index.to_string(),
                i1.to_string(),
                i2.to_string(),
                i3.to_string(),
                opt(out.map(|o| o[0])),
                opt(out.map(|o| o[1])),
                opt(out.map(|o| o[2])),
                s.transmission.to_string(),
                opt(s.output_purity),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn summary(&self) -> SphereSummary {
        let live: Vec<_> = self.samples.iter().filter(|s| !s.annihilated()).collect();
        let fold = |f: fn(f64, f64) -> f64, init: f64, g: &dyn Fn(&SphereMapSample) -> f64| {
            live.iter().map(|s| g(s)).fold(init, f)
        };
        SphereSummary {
            resolution: [self.n_lat, self.n_lon],
            samples: self.samples.len(),
            annihilated: self.samples.len() - live.len(),
            min_transmission: self.samples.iter().map(|s| s.transmission).fold(f64::INFINITY, f64::min),
            max_transmission: self.samples.iter().map(|s| s.transmission).fold(0.0, f64::max),
            min_purity: fold(f64::min, f64::INFINITY, &|s| s.output_purity.unwrap_or(f64::NAN)),
            max_output_radius: fold(f64::max, 0.0, &|s| s.output_stokes.map_or(0.0, |o| o.norm())),
            markers: self.markers.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SphereSummary {
    pub resolution: [usize; 2],
    pub samples: usize,
    pub annihilated: usize,
    pub min_transmission: f64,
    pub max_transmission: f64,
    pub min_purity: f64,
    pub max_output_radius: f64,
    pub markers: Vec<Marker>,
}

/// Output of `process` on the state with Stokes vector `s`, unnormalized.
pub fn apply_to_stokes<P: QuantumProcess + ?Sized>(process: &P, s: StokesVector) -> Result<DensityMatrix> {
    process.apply(&density_from_stokes(s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{kraus_to_chi, pauli_channel, KrausChannel};
    use crate::linalg::{c, max_abs_diff};
    use crate::process::{sqpt, SqptInput};
    use crate::state::states;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn chi(ch: &KrausChannel) -> ChiMatrix {
        kraus_to_chi(ch)
    }

    #[test]
    fn fidelity_examples() {
        let id = chi(&KrausChannel::identity());
        assert!((process_fidelity(&id, &id).unwrap() - 1.0).abs() < 1e-12);
        assert!(process_fidelity(&id, &chi(&pauli_channel(1))).unwrap() < 1e-12);
        let deph = chi(&KrausChannel::dephaser(1.0).unwrap());
        assert!((process_fidelity(&id, &deph).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn fidelity_ignores_overall_loss() {
        let a = chi(&KrausChannel::waveplate(0.7, 0.2));
        let lossy = ChiMatrix::from_matrix(a.matrix().scale(0.3)).unwrap();
        assert!((process_fidelity(&a, &lossy).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_chi_is_rejected() {
        let zero = ChiMatrix::from_matrix(ComplexMatrix::zeros(4, 4)).unwrap();
        let id = chi(&KrausChannel::identity());
        assert!(matches!(process_fidelity(&zero, &id), Err(QptError::ZeroTraceChi)));
    }

    #[test]
    fn non_positive_chi_is_projected_and_reported() {
        let mut m = chi(&KrausChannel::identity()).matrix().clone();
        m[(3, 3)] = c(-0.02, 0.0);
        let bad = ChiMatrix::from_matrix(m).unwrap();
        let report = process_fidelity_report(&bad, &chi(&KrausChannel::identity())).unwrap();
        assert!(report.projection_distance[0] > 0.0);
        assert!(report.projection_distance[1] < 1e-12);
        assert!(report.fidelity > 0.99 && report.fidelity <= 1.0);
    }

    fn random_channel(rng: &mut ChaCha8Rng) -> KrausChannel {
        let g = ComplexMatrix::from_fn(4, 4, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let q = g.qr().q();
        KrausChannel::new(vec![q.view((0, 0), (2, 2)).into_owned(), q.view((2, 0), (2, 2)).into_owned()]).unwrap()
    }

    #[test]
    fn fidelity_is_symmetric_and_one_only_for_equal_choi() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..100 {
            let a = chi(&random_channel(&mut rng));
            let b = chi(&random_channel(&mut rng));
            let ab = process_fidelity(&a, &b).unwrap();
            let ba = process_fidelity(&b, &a).unwrap();
            assert!((ab - ba).abs() < 1e-10);
            let ja = choi_matrix(&a).unwrap();
            let jb = choi_matrix(&b).unwrap();
            assert_eq!((ab - 1.0).abs() < 1e-10, max_abs_diff(&ja, &jb) < 1e-5);
            assert!((process_fidelity(&a, &a).unwrap() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn chi_report_examples() {
        let r = chi_report(&chi(&KrausChannel::identity()));
        assert!(r.min_eigenvalue.abs() < 1e-12);
        assert!((r.trace - 1.0).abs() < 1e-12);
        assert!(r.completely_positive);
        assert_eq!(r.verdict, "completely positive");

        // Oracle: mean transmission of {√½ I, √½ |H⟩⟨H|} over H, V, D, A, R, L.
        let pol = KrausChannel::incoherent_partial_polarizer(0.5).unwrap();
        let inputs = [states::h(), states::v(), states::d(), states::a(), states::r(), states::l()];
        let mean: f64 = inputs.iter().map(|s| pol.transmission(s).unwrap()).sum::<f64>() / 6.0;
        let r = chi_report(&chi(&pol));
        assert!((r.trace - mean).abs() < 1e-12);
        assert!((r.trace - 0.75).abs() < 1e-12);

        let mut m = ComplexMatrix::zeros(4, 4);
        m[(0, 0)] = c(1.0, 0.0);
        m[(1, 1)] = c(-0.1, 0.0);
        m[(0, 1)] = c(0.0, 0.05);
        m[(1, 0)] = c(0.0, -0.05);
        let r = chi_report(&ChiMatrix::from_matrix(m).unwrap());
        assert!(!r.completely_positive);
        assert_eq!(r.verdict, "not completely positive");
        assert!((r.max_imaginary - 0.05).abs() < 1e-15);
    }

    #[test]
    fn sphere_map_identity_and_resolution() {
        let mesh = sphere_map(&KrausChannel::identity(), 9, 12).unwrap();
        assert_eq!(mesh.samples.len(), 2 + 7 * 12);
        for s in &mesh.samples {
            assert!((s.input_stokes.norm() - 1.0).abs() < 1e-9);
            let o = s.output_stokes.unwrap();
            assert!((o.s1 - s.input_stokes.s1).abs() < 1e-12);
            assert!((o.s2 - s.input_stokes.s2).abs() < 1e-12);
            assert!((o.s3 - s.input_stokes.s3).abs() < 1e-12);
        }
        let labels: Vec<_> = mesh.markers.iter().map(|m| m.label).collect();
        assert_eq!(labels, ["H", "R", "V", "A"]);
        assert!(sphere_map(&KrausChannel::identity(), 1, 12).is_err());
        assert!(sphere_map(&KrausChannel::identity(), 2, 2).is_err());
    }

    #[test]
    fn sphere_map_dephaser_collapses_to_spindle() {
        let (n_lat, n_lon) = DEFAULT_RESOLUTION;
        let mesh = sphere_map(&KrausChannel::dephaser(1.0).unwrap(), n_lat, n_lon).unwrap();
        for s in &mesh.samples {
            let o = s.output_stokes.unwrap();
            assert!(o.s2.abs() < 1e-10 && o.s3.abs() < 1e-10);
            assert!((o.s1 - s.input_stokes.s1).abs() < 1e-10);
        }
    }

    #[test]
    fn coherent_polarizer_keeps_purity_and_slides_toward_h() {
        let mesh = sphere_map(&KrausChannel::coherent_partial_polarizer(0.88, 0.45).unwrap(), 17, 32).unwrap();
        for s in &mesh.samples {
            assert!((s.output_purity.unwrap() - 1.0).abs() < 1e-9);
            assert!(s.output_stokes.unwrap().s1 >= s.input_stokes.s1 - 1e-12);
        }
    }

    #[test]
    fn annihilated_samples_are_flagged() {
        let h_polarizer = KrausChannel::coherent_partial_polarizer(1.0, 0.0).unwrap();
        let mesh = sphere_map(&h_polarizer, 5, 4).unwrap();
        let v_pole = mesh.samples.last().unwrap();
        assert!(v_pole.annihilated());
        assert!(v_pole.output_purity.is_none());
        let mut buf = Vec::new();
        mesh.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("lat_index,lon_index,in_s1,in_s2,in_s3,out_s1,out_s2,out_s3,transmission,purity\n"));
        assert!(text.lines().last().unwrap().starts_with("4,0,-1,0,0,,,,0,"));
        assert_eq!(mesh.summary().annihilated, 1);
    }

    #[test]
    fn unitary_maps_are_rotations() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..20 {
            let u = ComplexMatrix::from_fn(2, 2, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).qr().q();
            let ch = KrausChannel::unitary(u).unwrap();
            let mesh = sphere_map(&ch, 7, 8).unwrap();
            for s in &mesh.samples {
                assert!((s.transmission - 1.0).abs() < 1e-9);
                assert!((s.output_purity.unwrap() - 1.0).abs() < 1e-9);
            }
            let inputs = [StokesVector::new(1.0, 0.0, 0.0), StokesVector::new(0.0, 1.0, 0.0), StokesVector::new(0.0, 0.0, 1.0)];
            let outs: Vec<_> = inputs.iter().map(|&s| stokes_of(&apply_to_stokes(&ch, s).unwrap()).unwrap()).collect();
            for a in 0..3 {
                for b in 0..3 {
                    assert!((outs[a].dot(&outs[b]) - inputs[a].dot(&inputs[b])).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn dephaser_shrinks_transverse_components() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        for _ in 0..50 {
            let p = rng.random_range(0.0..=1.0);
            let s = StokesVector::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5));
            let o = stokes_of(&apply_to_stokes(&KrausChannel::dephaser(p).unwrap(), s).unwrap()).unwrap();
            assert!((o.s1 - s.s1).abs() < 1e-10);
            assert!((o.s2 - (1.0 - p) * s.s2).abs() < 1e-10);
            assert!((o.s3 - (1.0 - p) * s.s3).abs() < 1e-10);
        }
    }

    #[test]
    fn mixed_outputs_interpolate_pure_outputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let ch = KrausChannel::compose(&KrausChannel::incoherent_partial_polarizer(0.3).unwrap(), &KrausChannel::waveplate(1.2, 0.4));
        for _ in 0..50 {
            let k = rng.random_range(2..5);
            let weights: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
            let total: f64 = weights.iter().sum();
            let pure: Vec<StokesVector> = (0..k)
                .map(|_| {
                    let (a, b, c): (f64, f64, f64) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                    let n = (a * a + b * b + c * c).sqrt();
                    StokesVector::new(a / n, b / n, c / n)
                })
                .collect();
            let mixed = pure.iter().zip(&weights).fold(StokesVector::new(0.0, 0.0, 0.0), |acc, (s, w)| {
                StokesVector::new(acc.s1 + w * s.s1 / total, acc.s2 + w * s.s2 / total, acc.s3 + w * s.s3 / total)
            });
            let direct = apply_to_stokes(&ch, mixed).unwrap();
            let combined = pure.iter().zip(&weights).fold(ComplexMatrix::zeros(2, 2), |acc, (&s, w)| {
                acc + apply_to_stokes(&ch, s).unwrap().matrix().scale(w / total)
            });
            assert!(max_abs_diff(direct.matrix(), &combined) < 1e-10);
        }
    }

    #[test]
    fn sqpt_chi_drives_the_sphere_map() {
        let ch = KrausChannel::coherent_partial_polarizer(0.88, 0.45).unwrap();
        let est = sqpt(&SqptInput::from_process(&ch).unwrap()).unwrap();
        let a = sphere_map(&ch, 5, 6).unwrap();
        let b = sphere_map(&est.chi, 5, 6).unwrap();
        for (x, y) in a.samples.iter().zip(&b.samples) {
            assert!((x.transmission - y.transmission).abs() < 1e-10);
        }
    }
}
