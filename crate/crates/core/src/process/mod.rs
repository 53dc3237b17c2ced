//! Process tomography: standard (SQPT), entanglement-assisted (EAPT) and
//! ancilla-assisted (AAPT) reconstruction of a single-qubit χ matrix.
//!
//! All three end in the same linear inversion. SQPT measures the outputs for
//! the four preparation states directly. AAPT recovers those outputs from a
//! single two-qubit input state `σ` and its image `σ' = (E ⊗ I)(σ)`, using the
//! operator-Schmidt decomposition of `σ`. EAPT is AAPT with a maximally
//! entangled `σ`.

mod schmidt;

pub use schmidt::{
    aapt_usable, operator_schmidt, schmidt_number, AaptUsability, OperatorSchmidtDecomposition,
    DEFAULT_SCHMIDT_TOL,
};

use std::sync::OnceLock;

use nalgebra::{DVector, SVD};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::StatePreparationBasis;
use crate::channel::{ChiJson, ChiMatrix, QuantumProcess};
use crate::error::{QptError, Result};
use crate::linalg::{self, hermitize, inner, pauli, partial_trace, tensor, ComplexMatrix, Subsystem};
use crate::state::DensityMatrix;

/// `Ẽ_m ρ_j Ẽ_n† = Σ_k β_jk^mn ρ_k` for the Pauli basis and the
/// preparation states H, V, D, R.
#[derive(Debug, Clone)]
pub struct BetaTensor {
    /// Row `4m + n`, column `4j + k`.
    pub flattened: ComplexMatrix,
    /// Inverse of `flattened` transposed, mapping λ to χ.
    solve: ComplexMatrix,
    pub condition_number: f64,
}

impl BetaTensor {
    pub fn entry(&self, j: usize, k: usize, m: usize, n: usize) -> Complex64 {
        self.flattened[(4 * m + n, 4 * j + k)]
    }

    fn compute() -> Self {
        let basis = StatePreparationBasis::standard();
        let paulis: Vec<_> = (0..4).map(pauli).collect();
        let mut flattened = ComplexMatrix::zeros(16, 16);
        for (j, rho) in basis.states().iter().enumerate() {
            for m in 0..4 {
                for n in 0..4 {
                    let image = &paulis[m] * rho.matrix() * paulis[n].adjoint();
                    let coeffs = basis.expand(&image).expect("2x2 operator");
                    for (k, z) in coeffs.iter().enumerate() {
                        flattened[(4 * m + n, 4 * j + k)] = *z;
                    }
                }
            }
        }
        let singular = SVD::new(flattened.clone(), false, false).singular_values;
        let max = singular.iter().copied().fold(0.0, f64::max);
        let min = singular.iter().copied().fold(f64::INFINITY, f64::min);
        let solve = flattened.transpose().lu().try_inverse().expect("beta tensor is invertible");
        BetaTensor { flattened, solve, condition_number: max / min }
    }
}

/// The β tensor is fixed by the bases, so it is computed once.
pub fn beta_tensor() -> &'static BetaTensor {
    static BETA: OnceLock<BetaTensor> = OnceLock::new();
    BETA.get_or_init(BetaTensor::compute)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Method {
    Sqpt,
    Eapt,
    Aapt,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Sqpt => "SQPT",
            Method::Eapt => "EAPT",
            Method::Aapt => "AAPT",
        })
    }
}

/// Output states for inputs H, V, D, R, in that order.
#[derive(Debug, Clone)]
pub struct SqptInput {
    pub outputs: [DensityMatrix; 4],
}

impl SqptInput {
    pub fn new(outputs: Vec<DensityMatrix>) -> Result<Self> {
        let got = format!("{} outputs", outputs.len());
        let outputs: [DensityMatrix; 4] = outputs
            .try_into()
            .map_err(|_| QptError::DimensionMismatch { expected: "4 outputs (H, V, D, R)".into(), got })?;
        if let Some(bad) = outputs.iter().find(|o| o.dim() != 2) {
            return Err(QptError::DimensionMismatch { expected: "1-qubit outputs".into(), got: format!("{0}x{0}", bad.dim()) });
        }
        Ok(SqptInput { outputs })
    }

    /// Exact outputs of `process`, as an infinite-statistics experiment would see them.
    pub fn from_process(process: &impl QuantumProcess) -> Result<Self> {
        let basis = StatePreparationBasis::standard();
        Self::new(basis.states().iter().map(|s| process.apply(s)).collect::<Result<_>>()?)
    }
}

/// A reconstructed χ with the diagnostics that go with it.
#[derive(Debug, Clone)]
pub struct ProcessEstimate {
    pub chi: ChiMatrix,
    pub method: Method,
    /// Anti-Hermitian part removed from the raw inversion.
    pub hermiticity_residual: f64,
    pub input_state_schmidt_coefficients: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProcessEstimateJson {
    #[serde(flatten)]
    pub chi: ChiJson,
    pub method: Method,
    pub min_eigenvalue: f64,
    pub hermiticity_residual: f64,
    pub input_state_schmidt_coefficients: Option<Vec<f64>>,
}

impl ProcessEstimate {
    pub fn to_json(&self) -> ProcessEstimateJson {
        ProcessEstimateJson {
            chi: self.chi.to_json(),
            method: self.method,
            min_eigenvalue: self.chi.min_eigenvalue(),
            hermiticity_residual: self.hermiticity_residual,
            input_state_schmidt_coefficients: self.input_state_schmidt_coefficients.clone(),
        }
    }
}

/// Linear inversion `Σ_mn β_jk^mn χ_mn = λ_jk`, followed by Hermitization.
/// No positivity is imposed.
pub fn sqpt(input: &SqptInput) -> Result<ProcessEstimate> {
    let basis = StatePreparationBasis::standard();
    let mut lambda = DVector::zeros(16);
    for (j, out) in input.outputs.iter().enumerate() {
        let coeffs = basis.expand(out.matrix())?;
        for (k, z) in coeffs.into_iter().enumerate() {
            lambda[4 * j + k] = z;
        }
    }
    let flat = &beta_tensor().solve * lambda;
    let raw = ComplexMatrix::from_fn(4, 4, |m, n| flat[4 * m + n]);
    if raw.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(QptError::Numerical("non-finite χ from linear inversion".into()));
    }
    Ok(ProcessEstimate {
        hermiticity_residual: linalg::hermiticity_residual(&raw),
        chi: ChiMatrix::from_matrix(hermitize(&raw))?,
        method: Method::Sqpt,
        input_state_schmidt_coefficients: None,
    })
}

/// Reconstructs χ of the channel on qubit A from `σ` and `σ' = (E ⊗ I)(σ)`.
///
/// With `σ = Σ_m s_m A_m ⊗ B_m`, `E(A_m) = tr_B((I ⊗ B_m†) σ') / s_m`; the
/// preparation-state outputs follow by linearity and go through [`sqpt`].
/// Requires operator-Schmidt number 4.
pub fn aapt(sigma: &DensityMatrix, sigma_prime: &DensityMatrix) -> Result<ProcessEstimate> {
    for s in [sigma, sigma_prime] {
        if s.dim() != 4 {
            return Err(QptError::DimensionMismatch { expected: "2-qubit state".into(), got: format!("{0}x{0}", s.dim()) });
        }
    }
    let decomposition = operator_schmidt(sigma.matrix())?;
    if schmidt_number(&decomposition, DEFAULT_SCHMIDT_TOL) < 4 {
        return Err(QptError::NotUsableForAapt { coefficients: decomposition.coefficients });
    }
    let id = linalg::identity(2);
    let images: Vec<ComplexMatrix> = decomposition
        .ops_b
        .iter()
        .zip(&decomposition.coefficients)
        .map(|(b, &s)| Ok(partial_trace(&(tensor(&id, &b.adjoint()) * sigma_prime.matrix()), Subsystem::B)?.unscale(s)))
        .collect::<Result<_>>()?;

    let basis = StatePreparationBasis::standard();
    let outputs = basis
        .states()
        .iter()
        .map(|rho| {
            let out = decomposition
                .ops_a
                .iter()
                .zip(&images)
                .fold(ComplexMatrix::zeros(2, 2), |acc, (a, img)| acc + img * inner(a, rho.matrix()));
            DensityMatrix::new_unchecked(out)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut estimate = sqpt(&SqptInput::new(outputs)?)?;
    estimate.method = Method::Aapt;
    estimate.input_state_schmidt_coefficients = Some(decomposition.coefficients);
    Ok(estimate)
}

/// AAPT with a maximally entangled input, labelled as such.
pub fn eapt(sigma: &DensityMatrix, sigma_prime: &DensityMatrix) -> Result<ProcessEstimate> {
    let mut estimate = aapt(sigma, sigma_prime)?;
    estimate.method = Method::Eapt;
    Ok(estimate)
}
