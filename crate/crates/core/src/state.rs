//! Density matrices, Stokes vectors, fidelity and purity.
//!
//! A [`DensityMatrix`] is stored unnormalized: its trace is the survival
//! probability (`weight`) of the photon, so lossy channels shrink the trace
//! instead of renormalizing. Quantities that describe the state of the
//! surviving photons (Stokes vector, purity, fidelity) are computed on the
//! normalized matrix `ρ / weight`.

use serde::{Deserialize, Serialize};

use crate::error::{QptError, Result};
use crate::linalg::{
    self, hermiticity_residual, outer, pauli, psd_sqrt, real, trace, ComplexMatrix, MatrixJson,
    Subsystem, ONE, PHYSICAL_TOL, ZERO,
};

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    /// Validated constructor: Hermitian, positive semidefinite, trace ≤ 1.
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let state = Self::new_unchecked(matrix)?;
        let residual = hermiticity_residual(&state.matrix);
        if residual > PHYSICAL_TOL {
            return Err(QptError::NotHermitian(residual));
        }
        let min = state.min_eigenvalue();
        if min < -PHYSICAL_TOL {
            return Err(QptError::NotPositive(min));
        }
        let w = state.weight();
        if w > 1.0 + PHYSICAL_TOL {
            return Err(QptError::TraceExceeded(w));
        }
        Ok(state)
    }

    /// Accepts any 2×2 or 4×4 matrix. Used for estimates, which may be
    /// non-physical under noise or carry a fitted weight slightly above 1.
    pub fn new_unchecked(matrix: ComplexMatrix) -> Result<Self> {
        let n = matrix.nrows();
        if matrix.ncols() != n || !(n == 2 || n == 4) {
            return Err(QptError::DimensionMismatch {
                expected: "2x2 or 4x4".into(),
                got: format!("{}x{}", matrix.nrows(), matrix.ncols()),
            });
        }
        Ok(DensityMatrix { matrix })
    }

    /// Pure state |ψ⟩⟨ψ| (not renormalized).
    pub fn pure(amplitudes: &[num_complex::Complex64]) -> Result<Self> {
        Self::new(outer(amplitudes, amplitudes))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        DensityMatrix { matrix: linalg::identity(dim).scale(1.0 / dim as f64) }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn num_qubits(&self) -> usize {
        if self.dim() == 2 {
            1
        } else {
            2
        }
    }

    /// Trace of the stored matrix: the survival probability.
    pub fn weight(&self) -> f64 {
        trace(&self.matrix).re
    }

    /// `ρ / weight`, or `None` for a vacuum (zero-weight) state.
    pub fn normalized(&self) -> Option<ComplexMatrix> {
        let w = self.weight();
        (w > 0.0).then(|| self.matrix.unscale(w))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        DensityMatrix { matrix: self.matrix.scale(factor) }
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::eigenvalues(&self.matrix)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        linalg::min_eigenvalue(&self.matrix)
    }

    /// Hermitian and positive semidefinite within the physicality tolerance.
    pub fn is_physical(&self) -> bool {
        hermiticity_residual(&self.matrix) <= PHYSICAL_TOL && self.min_eigenvalue() >= -PHYSICAL_TOL
    }

    pub fn partial_trace(&self, subsystem: Subsystem) -> Result<DensityMatrix> {
        Ok(DensityMatrix { matrix: linalg::partial_trace(&self.matrix, subsystem)? })
    }

    pub fn partial_transpose(&self, subsystem: Subsystem) -> Result<ComplexMatrix> {
        linalg::partial_transpose(&self.matrix, subsystem)
    }

    pub fn to_json(&self) -> MatrixJson {
        MatrixJson::from(&self.matrix)
    }

    pub fn from_json(json: MatrixJson) -> Result<Self> {
        Self::new_unchecked(ComplexMatrix::try_from(json)?)
    }
}

/// Standard polarization states as density matrices.
pub mod states {
    use super::*;
    use crate::linalg::I;

    pub fn h() -> DensityMatrix {
        DensityMatrix { matrix: linalg::diag(&[ONE, ZERO]) }
    }
    pub fn v() -> DensityMatrix {
        DensityMatrix { matrix: linalg::diag(&[ZERO, ONE]) }
    }
    pub fn d() -> DensityMatrix {
        let s = real(std::f64::consts::FRAC_1_SQRT_2);
        DensityMatrix { matrix: outer(&[s, s], &[s, s]) }
    }
    pub fn a() -> DensityMatrix {
        let s = real(std::f64::consts::FRAC_1_SQRT_2);
        DensityMatrix { matrix: outer(&[s, -s], &[s, -s]) }
    }
    pub fn r() -> DensityMatrix {
        let s = real(std::f64::consts::FRAC_1_SQRT_2);
        DensityMatrix { matrix: outer(&[s, I * s], &[s, I * s]) }
    }
    pub fn l() -> DensityMatrix {
        let s = real(std::f64::consts::FRAC_1_SQRT_2);
        DensityMatrix { matrix: outer(&[s, -I * s], &[s, -I * s]) }
    }

    /// (|HH⟩ − |VV⟩)/√2
    pub fn phi_minus() -> DensityMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        DensityMatrix { matrix: outer(&[real(s), ZERO, ZERO, real(-s)], &[real(s), ZERO, ZERO, real(-s)]) }
    }

    /// (|HH⟩ + |VV⟩)/√2
    pub fn phi_plus() -> DensityMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        DensityMatrix { matrix: outer(&[real(s), ZERO, ZERO, real(s)], &[real(s), ZERO, ZERO, real(s)]) }
    }

    /// I/6 + |φ+⟩⟨φ+|/3: separable, yet of full operator-Schmidt rank.
    pub fn werner() -> DensityMatrix {
        let m = linalg::identity(4).scale(1.0 / 6.0) + phi_plus().matrix.scale(1.0 / 3.0);
        DensityMatrix { matrix: m }
    }

    pub fn product(a: &DensityMatrix, b: &DensityMatrix) -> DensityMatrix {
        DensityMatrix { matrix: linalg::tensor(&a.matrix, &b.matrix) }
    }
}

/// Poincaré-sphere coordinates `(S1, S2, S3) = (P_H − P_V, P_D − P_A, P_R − P_L)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StokesVector {
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
}

impl StokesVector {
    pub fn new(s1: f64, s2: f64, s3: f64) -> Self {
        StokesVector { s1, s2, s3 }
    }

    pub fn norm(&self) -> f64 {
        (self.s1 * self.s1 + self.s2 * self.s2 + self.s3 * self.s3).sqrt()
    }

    pub fn is_physical(&self) -> bool {
        self.norm() <= 1.0 + PHYSICAL_TOL
    }

    pub fn dot(&self, other: &StokesVector) -> f64 {
        self.s1 * other.s1 + self.s2 * other.s2 + self.s3 * other.s3
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.s1, self.s2, self.s3]
    }
}

/// Stokes vector of the normalized single-qubit state.
pub fn stokes_of(rho: &DensityMatrix) -> Result<StokesVector> {
    if rho.dim() != 2 {
        return Err(QptError::DimensionMismatch { expected: "1-qubit state".into(), got: format!("{}x{}", rho.dim(), rho.dim()) });
    }
    let norm = rho.normalized().ok_or(QptError::VacuumState)?;
    let expect = |k: usize| trace(&(&norm * pauli(k))).re;
    Ok(StokesVector::new(expect(3), expect(1), expect(2)))
}

/// ρ = (I + s1 σz + s2 σx + s3 σy)/2 with unit weight. The result is not
/// positive when |s| > 1; check with [`DensityMatrix::is_physical`].
pub fn density_from_stokes(s: StokesVector) -> DensityMatrix {
    let m = (pauli(0) + pauli(3).scale(s.s1) + pauli(1).scale(s.s2) + pauli(2).scale(s.s3)).scale(0.5);
    DensityMatrix { matrix: m }
}

/// Uhlmann fidelity `[tr √(√ρ₁ ρ₂ √ρ₁)]²` of the normalized states.
pub fn state_fidelity(r1: &DensityMatrix, r2: &DensityMatrix) -> Result<f64> {
    if r1.dim() != r2.dim() {
        return Err(QptError::DimensionMismatch {
            expected: format!("{}x{}", r1.dim(), r1.dim()),
            got: format!("{}x{}", r2.dim(), r2.dim()),
        });
    }
    let a = r1.normalized().ok_or(QptError::VacuumState)?;
    let b = r2.normalized().ok_or(QptError::VacuumState)?;
    matrix_fidelity(&a, &b)
}

/// Eigenvalues below this fraction of the largest are rounding noise; their
/// square roots would otherwise leak ~1e-8 into fidelities of pure states.
const EIGEN_FLOOR: f64 = 1e-13;

/// Fidelity of two unit-trace positive matrices.
pub(crate) fn matrix_fidelity(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    for m in [a, b] {
        let min = linalg::min_eigenvalue(m);
        if min < -PHYSICAL_TOL {
            return Err(QptError::NotPositive(min));
        }
    }
    let sa = psd_sqrt(a);
    let inner = &sa * b * &sa;
    let values = linalg::eigenvalues(&inner);
    let floor = EIGEN_FLOOR * values.last().copied().unwrap_or(0.0).max(0.0);
    let root_trace: f64 = values.iter().filter(|&&x| x > floor).map(|x| x.sqrt()).sum();
    Ok((root_trace * root_trace).clamp(0.0, 1.0))
}

/// tr((ρ/weight)²).
pub fn purity(rho: &DensityMatrix) -> Result<f64> {
    let n = rho.normalized().ok_or(QptError::VacuumState)?;
    Ok(trace(&(&n * &n)).re)
}

/// Closest unit-trace positive matrix in Frobenius norm: eigenvalues are
/// projected onto the probability simplex.
pub fn project_to_physical(m: &ComplexMatrix) -> ComplexMatrix {
    let (values, vectors) = linalg::hermitian_eigen(m);
    let tr: f64 = values.iter().sum();
    let target = if tr > 0.0 { tr } else { 1.0 };
    let projected = simplex_projection(&values.iter().map(|x| x / target).collect::<Vec<_>>());
    linalg::spectral_map(&projected, &vectors, |x| x)
}

fn simplex_projection(values: &[f64]) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (k, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let t = (cumulative - 1.0) / (k + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        }
    }
    values.iter().map(|&x| (x - theta).max(0.0)).collect()
}
