//! Single-qubit processes in operator-sum (Kraus) and χ-matrix form.
//!
//! χ is written in the fixed unnormalized basis `{I, σx, σy, σz}`, so
//! `E(ρ) = Σ_mn χ_mn Ẽ_m ρ Ẽ_n†` and the identity process has
//! `χ = diag(1, 0, 0, 0)`. With this normalization `tr χ` is the
//! transmission averaged over the sphere of input states.

use serde::{Deserialize, Serialize};

use crate::basis::PAULI_LABELS;
use crate::error::{QptError, Result};
use crate::linalg::{
    self, expect_shape, hermiticity_residual, inner, pauli, real, tensor, trace, ComplexMatrix,
    Subsystem, ONE, PHYSICAL_TOL, ZERO,
};
use crate::state::DensityMatrix;

/// χ eigenvalues in `[-CP_CLIP_TOL, 0)` are treated as reconstruction noise.
pub const CP_CLIP_TOL: f64 = 1e-6;

/// Anything that maps single-qubit states to (possibly sub-normalized) states.
pub trait QuantumProcess {
    fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix>;
}

fn expect_qubit(rho: &DensityMatrix) -> Result<()> {
    if rho.dim() != 2 {
        return Err(QptError::DimensionMismatch { expected: "1-qubit state".into(), got: format!("{}x{}", rho.dim(), rho.dim()) });
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct KrausChannel {
    elements: Vec<ComplexMatrix>,
    trace_preserving: bool,
}

impl KrausChannel {
    /// Checks that every element is 2×2 and that `Σ E†E ≤ I`.
    pub fn new(elements: Vec<ComplexMatrix>) -> Result<Self> {
        let ch = Self::from_elements_unchecked(elements)?;
        let max = linalg::eigenvalues(&ch.effect()).last().copied().unwrap_or(0.0);
        if max > 1.0 + PHYSICAL_TOL {
            return Err(QptError::NotTraceDecreasing(max));
        }
        Ok(ch)
    }

    /// Skips the `Σ E†E ≤ I` bound, for channels rebuilt from measured χ.
    pub fn from_elements_unchecked(elements: Vec<ComplexMatrix>) -> Result<Self> {
        if elements.is_empty() {
            return Err(QptError::DimensionMismatch { expected: "at least one Kraus element".into(), got: "none".into() });
        }
        for e in &elements {
            expect_shape(e, 2, "2x2 Kraus element")?;
        }
        let effect = elements.iter().fold(ComplexMatrix::zeros(2, 2), |acc, e| acc + e.adjoint() * e);
        let trace_preserving = linalg::approx_eq(&effect, &linalg::identity(2), PHYSICAL_TOL);
        Ok(KrausChannel { elements, trace_preserving })
    }

    pub fn elements(&self) -> &[ComplexMatrix] {
        &self.elements
    }

    pub fn is_trace_preserving(&self) -> bool {
        self.trace_preserving
    }

    /// Σ_j E_j† E_j.
    pub fn effect(&self) -> ComplexMatrix {
        self.elements.iter().fold(ComplexMatrix::zeros(2, 2), |acc, e| acc + e.adjoint() * e)
    }

    /// Acts on one half of a two-qubit state, leaving the other untouched.
    pub fn apply_extended(&self, rho: &DensityMatrix, on: Subsystem) -> Result<DensityMatrix> {
        if rho.dim() != 4 {
            return Err(QptError::DimensionMismatch { expected: "2-qubit state".into(), got: format!("{}x{}", rho.dim(), rho.dim()) });
        }
        let id = linalg::identity(2);
        let mut out = ComplexMatrix::zeros(4, 4);
        for e in &self.elements {
            let full = match on {
                Subsystem::A => tensor(e, &id),
                Subsystem::B => tensor(&id, e),
            };
            out += &full * rho.matrix() * full.adjoint();
        }
        DensityMatrix::new_unchecked(out)
    }

    /// Survival probability `tr E(ρ) / tr ρ`.
    pub fn transmission(&self, rho: &DensityMatrix) -> Result<f64> {
        let w = rho.weight();
        if w <= 0.0 {
            return Err(QptError::VacuumState);
        }
        Ok(self.apply(rho)?.weight() / w)
    }

    /// `second ∘ first`: elements `{F_k E_j}`.
    pub fn compose(first: &KrausChannel, second: &KrausChannel) -> KrausChannel {
        let elements = second
            .elements
            .iter()
            .flat_map(|f| first.elements.iter().map(move |e| f * e))
            .collect();
        KrausChannel::from_elements_unchecked(elements).expect("products of 2x2 elements are 2x2")
    }

    /// Single-element channel; `u` must be unitary.
    pub fn unitary(u: ComplexMatrix) -> Result<Self> {
        expect_shape(&u, 2, "2x2 unitary")?;
        let residual = linalg::max_abs_diff(&(u.adjoint() * &u), &linalg::identity(2));
        if residual > 1e-10 {
            return Err(QptError::Numerical(format!("matrix is not unitary (residual {residual:e})")));
        }
        Self::new(vec![u])
    }

    pub fn identity() -> Self {
        Self::unitary(linalg::identity(2)).expect("identity is unitary")
    }

    /// Birefringent plate: phase `retardance` between its slow and fast axes,
    /// fast axis at `axis_angle` from horizontal. Eigenvalues `{1, e^{iη}}`.
    pub fn waveplate(retardance: f64, axis_angle: f64) -> Self {
        Self::unitary(waveplate_matrix(retardance, axis_angle)).expect("waveplate matrix is unitary")
    }

    /// Optical activity: real rotation of the polarization plane by `angle`,
    /// `exp(-i angle σy)`.
    pub fn rotator(angle: f64) -> Self {
        let (s, co) = angle.sin_cos();
        Self::unitary(linalg::from_rows(2, &[real(co), real(-s), real(s), real(co)])).expect("rotation is unitary")
    }

    /// HV dephasing: off-diagonal coherence multiplied by `1 - p`.
    pub fn dephaser(p: f64) -> Result<Self> {
        check_unit("p", p)?;
        Self::new(vec![pauli(0).scale((1.0 - p / 2.0).sqrt()), pauli(3).scale((p / 2.0).sqrt())])
    }

    /// Polarization-dependent loss that preserves H/V coherence.
    pub fn coherent_partial_polarizer(t_h: f64, t_v: f64) -> Result<Self> {
        check_unit("t_h", t_h)?;
        check_unit("t_v", t_v)?;
        Self::new(vec![linalg::diag(&[real(t_h.sqrt()), real(t_v.sqrt())])])
    }

    /// Horizontal polarizer inserted with probability `p`.
    pub fn incoherent_partial_polarizer(p: f64) -> Result<Self> {
        check_unit("p", p)?;
        Self::new(vec![pauli(0).scale((1.0 - p).sqrt()), linalg::diag(&[ONE, ZERO]).scale(p.sqrt())])
    }
}

impl QuantumProcess for KrausChannel {
    fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        expect_qubit(rho)?;
        let out = self
            .elements
            .iter()
            .fold(ComplexMatrix::zeros(2, 2), |acc, e| acc + e * rho.matrix() * e.adjoint());
        DensityMatrix::new_unchecked(out)
    }
}

fn check_unit(name: &'static str, value: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&value) {
        return Err(QptError::InvalidParameter { name, value, range: "[0, 1]" });
    }
    Ok(())
}

/// `R(θ) diag(1, e^{iη}) R(θ)ᵀ`.
pub fn waveplate_matrix(retardance: f64, axis_angle: f64) -> ComplexMatrix {
    let (s, co) = axis_angle.sin_cos();
    let rot = linalg::from_rows(2, &[real(co), real(-s), real(s), real(co)]);
    let phase = num_complex::Complex64::from_polar(1.0, retardance);
    &rot * linalg::diag(&[ONE, phase]) * rot.transpose()
}

/// Process matrix in the basis `{I, σx, σy, σz}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChiMatrix {
    matrix: ComplexMatrix,
}

impl ChiMatrix {
    pub fn from_matrix(matrix: ComplexMatrix) -> Result<Self> {
        expect_shape(&matrix, 4, "4x4 chi matrix")?;
        Ok(ChiMatrix { matrix })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        trace(&self.matrix).re
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::eigenvalues(&self.matrix)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        linalg::min_eigenvalue(&self.matrix)
    }

    pub fn hermiticity_residual(&self) -> f64 {
        hermiticity_residual(&self.matrix)
    }

    pub fn is_completely_positive(&self) -> bool {
        self.min_eigenvalue() >= -CP_CLIP_TOL
    }

    /// Σ_mn χ_mn Ẽ_n† Ẽ_m, which equals Σ_j E_j† E_j.
    pub fn effect(&self) -> ComplexMatrix {
        let basis: Vec<_> = (0..4).map(pauli).collect();
        let mut out = ComplexMatrix::zeros(2, 2);
        for m in 0..4 {
            for n in 0..4 {
                out += basis[n].adjoint() * &basis[m] * self.matrix[(m, n)];
            }
        }
        out
    }

    pub fn is_trace_preserving(&self) -> bool {
        linalg::approx_eq(&self.effect(), &linalg::identity(2), PHYSICAL_TOL)
    }

    pub fn to_json(&self) -> ChiJson {
        let rows = |f: fn(&num_complex::Complex64) -> f64| {
            (0..4).map(|i| (0..4).map(|j| f(&self.matrix[(i, j)])).collect()).collect()
        };
        ChiJson { basis: PAULI_LABELS.iter().map(|s| s.to_string()).collect(), re: rows(|z| z.re), im: rows(|z| z.im) }
    }

    pub fn from_json(json: &ChiJson) -> Result<Self> {
        let bad = |message: String| QptError::Config { path: "chi".into(), message };
        if json.basis != PAULI_LABELS {
            return Err(bad(format!("basis must be {PAULI_LABELS:?}, got {:?}", json.basis)));
        }
        if json.re.len() != 4 || json.im.len() != 4 || json.re.iter().chain(&json.im).any(|r| r.len() != 4) {
            return Err(bad("re and im must be 4x4 arrays".into()));
        }
        Ok(ChiMatrix { matrix: ComplexMatrix::from_fn(4, 4, |i, j| linalg::c(json.re[i][j], json.im[i][j])) })
    }
}

impl QuantumProcess for ChiMatrix {
    fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        expect_qubit(rho)?;
        let basis: Vec<_> = (0..4).map(pauli).collect();
        let mut out = ComplexMatrix::zeros(2, 2);
        for m in 0..4 {
            let left = &basis[m] * rho.matrix();
            for n in 0..4 {
                let chi = self.matrix[(m, n)];
                if chi != ZERO {
                    out += &left * basis[n].adjoint() * chi;
                }
            }
        }
        DensityMatrix::new_unchecked(out)
    }
}

/// χ serialized with basis labels and separate real/imaginary 4×4 arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiJson {
    pub basis: Vec<String>,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

/// `e_jm = tr(Ẽ_m† E_j)/2`, then `χ_mn = Σ_j e_jm e_jn*`.
pub fn kraus_to_chi(ch: &KrausChannel) -> ChiMatrix {
    let basis: Vec<_> = (0..4).map(pauli).collect();
    let mut chi = ComplexMatrix::zeros(4, 4);
    for e in ch.elements() {
        let coeffs: Vec<_> = basis.iter().map(|b| inner(b, e) * 0.5).collect();
        for m in 0..4 {
            for n in 0..4 {
                chi[(m, n)] += coeffs[m] * coeffs[n].conj();
            }
        }
    }
    ChiMatrix { matrix: chi }
}

/// Eigen-decomposes χ into Kraus elements `E_k = √λ_k Σ_m u_mk Ẽ_m`.
///
/// Eigenvalues down to `-CP_CLIP_TOL` are clipped to zero; anything more
/// negative is reported as [`QptError::NotCompletelyPositive`].
pub fn chi_to_kraus(chi: &ChiMatrix) -> Result<KrausChannel> {
    let residual = chi.hermiticity_residual();
    if residual > PHYSICAL_TOL {
        return Err(QptError::NotHermitian(residual));
    }
    let (values, vectors) = linalg::hermitian_eigen(&chi.matrix);
    if values[0] < -CP_CLIP_TOL {
        return Err(QptError::NotCompletelyPositive(values[0]));
    }
    let basis: Vec<_> = (0..4).map(pauli).collect();
    let scale = values.last().copied().unwrap_or(0.0).max(0.0);
    let mut elements = Vec::new();
    for (k, &lambda) in values.iter().enumerate() {
        if lambda <= 1e-15 * scale.max(1.0) {
            continue;
        }
        let amp = lambda.sqrt();
        let e = (0..4).fold(ComplexMatrix::zeros(2, 2), |acc, m| acc + &basis[m] * (vectors[(m, k)] * amp));
        elements.push(e);
    }
    if elements.is_empty() {
        elements.push(ComplexMatrix::zeros(2, 2));
    }
    KrausChannel::from_elements_unchecked(elements)
}

/// Unitary matrix for each σ in the χ basis, e.g. `pauli_channel(1)` is a
/// half-wave plate at 45°.
pub fn pauli_channel(index: usize) -> KrausChannel {
    KrausChannel::unitary(pauli(index)).expect("Pauli matrices are unitary")
}
