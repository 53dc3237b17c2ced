//! Operator bases for single-qubit operators.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{QptError, Result};
use crate::linalg::{self, expect_shape, inner, pauli, ComplexMatrix, ALGEBRA_TOL};
use crate::state::{states, DensityMatrix};

/// Labels of the fixed process basis, in order.
pub const PAULI_LABELS: [&str; 4] = ["I", "X", "Y", "Z"];

#[derive(Debug, Clone)]
pub struct OperatorBasis {
    pub elements: Vec<ComplexMatrix>,
    pub orthonormal: bool,
}

impl OperatorBasis {
    /// `{I, σx, σy, σz}`, the unnormalized basis in which χ is written.
    pub fn pauli() -> Self {
        OperatorBasis { elements: (0..4).map(pauli).collect(), orthonormal: false }
    }

    /// `{I, σx, σy, σz}/√2`, orthonormal under tr(M†N).
    pub fn pauli_normalized() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        OperatorBasis { elements: (0..4).map(|k| pauli(k).scale(s)).collect(), orthonormal: true }
    }

    /// Builds a basis and checks the orthonormality claim.
    pub fn new(elements: Vec<ComplexMatrix>) -> Self {
        let orthonormal = elements.iter().enumerate().all(|(j, a)| {
            elements.iter().enumerate().all(|(k, b)| {
                let target = if j == k { 1.0 } else { 0.0 };
                (inner(a, b) - Complex64::new(target, 0.0)).norm() <= ALGEBRA_TOL
            })
        });
        OperatorBasis { elements, orthonormal }
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Gram matrix G_jk = tr(M_j† M_k).
    pub fn gram(&self) -> ComplexMatrix {
        let n = self.len();
        ComplexMatrix::from_fn(n, n, |j, k| inner(&self.elements[j], &self.elements[k]))
    }
}

/// The preparation states `{ρ_H, ρ_V, ρ_D, ρ_R}` together with the dual
/// basis used to expand arbitrary operators in them.
#[derive(Debug, Clone)]
pub struct StatePreparationBasis {
    states: Vec<DensityMatrix>,
    /// Inverse of the 4×4 matrix whose columns are the vectorized states.
    dual: ComplexMatrix,
}

impl StatePreparationBasis {
    pub fn standard() -> Self {
        Self::new(vec![states::h(), states::v(), states::d(), states::r()])
            .expect("H, V, D, R span the single-qubit operator space")
    }

    pub fn new(states: Vec<DensityMatrix>) -> Result<Self> {
        if states.len() != 4 || states.iter().any(|s| s.dim() != 2) {
            return Err(QptError::DimensionMismatch {
                expected: "four 1-qubit states".into(),
                got: format!("{} states", states.len()),
            });
        }
        let columns = ComplexMatrix::from_fn(4, 4, |r, k| linalg::vec_row_major(states[k].matrix())[r]);
        let gram = ComplexMatrix::from_fn(4, 4, |j, k| inner(states[j].matrix(), states[k].matrix()));
        if gram.determinant().norm() < 1e-12 {
            return Err(QptError::SingularBasis);
        }
        let dual = columns.try_inverse().ok_or(QptError::SingularBasis)?;
        Ok(StatePreparationBasis { states, dual })
    }

    pub fn states(&self) -> &[DensityMatrix] {
        &self.states
    }

    /// Coefficients `c_k` with `Σ_k c_k ρ_k = m`.
    pub fn expand(&self, m: &ComplexMatrix) -> Result<[Complex64; 4]> {
        expect_shape(m, 2, "2x2 operator")?;
        let v = DVector::from_vec(linalg::vec_row_major(m));
        let coeffs = &self.dual * v;
        Ok([coeffs[0], coeffs[1], coeffs[2], coeffs[3]])
    }

    /// Σ_k c_k ρ_k.
    pub fn recombine(&self, coeffs: &[Complex64; 4]) -> ComplexMatrix {
        self.states
            .iter()
            .zip(coeffs)
            .fold(ComplexMatrix::zeros(2, 2), |acc, (s, &c)| acc + s.matrix() * c)
    }
}

/// Expands `m` in the preparation basis.
pub fn expand_in_basis(m: &ComplexMatrix, basis: &StatePreparationBasis) -> Result<[Complex64; 4]> {
    basis.expand(m)
}
