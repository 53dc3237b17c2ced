//! Operator-Schmidt decomposition of two-qubit operators.

use nalgebra::SVD;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{QptError, Result};
use crate::linalg::{expect_shape, inner, pauli, tensor, ComplexMatrix};

/// `M = Σ_l s_l A_l ⊗ B_l` with `{A_l}`, `{B_l}` orthonormal under tr(X†Y).
#[derive(Debug, Clone)]
pub struct OperatorSchmidtDecomposition {
    /// Non-negative, descending.
    pub coefficients: Vec<f64>,
    pub ops_a: Vec<ComplexMatrix>,
    pub ops_b: Vec<ComplexMatrix>,
}

impl OperatorSchmidtDecomposition {
    pub fn reconstruct(&self) -> ComplexMatrix {
        self.coefficients
            .iter()
            .zip(self.ops_a.iter().zip(&self.ops_b))
            .fold(ComplexMatrix::zeros(4, 4), |acc, (&s, (a, b))| acc + tensor(a, b).scale(s))
    }

    pub fn min_coefficient(&self) -> f64 {
        self.coefficients.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

const TIE_TOL: f64 = 1e-12;

/// SVD of the coefficient matrix `C_ab = tr((P_a ⊗ P_b)† M)` in the
/// normalized Pauli basis `P = σ/√2`. With `C = U S V†`,
/// `A_l = Σ_a U_al P_a` and `B_l = Σ_b conj(V_bl) P_b`.
///
/// Each pair `(A_l, B_l)` is phased so that the first nonzero Pauli
/// coefficient of `A_l` is real and positive; equal coefficients are ordered
/// by the real parts of those Pauli coefficients, largest first.
pub fn operator_schmidt(m: &ComplexMatrix) -> Result<OperatorSchmidtDecomposition> {
    expect_shape(m, 4, "4x4 operator")?;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let basis: Vec<ComplexMatrix> = (0..4).map(|k| pauli(k).scale(s)).collect();
    let coeffs = ComplexMatrix::from_fn(4, 4, |a, b| inner(&tensor(&basis[a], &basis[b]), m));
    let svd = SVD::new(coeffs, true, true);
    let u = svd.u.ok_or_else(|| QptError::Numerical("SVD did not return U".into()))?;
    let v_t = svd.v_t.ok_or_else(|| QptError::Numerical("SVD did not return V".into()))?;

    let mut terms: Vec<(f64, Vec<Complex64>, Vec<Complex64>)> = (0..4)
        .map(|l| {
            let mut ua: Vec<Complex64> = (0..4).map(|a| u[(a, l)]).collect();
            // Row l of V† holds conj(V_bl), which is exactly the B_l coefficient.
            let mut vb: Vec<Complex64> = (0..4).map(|b| v_t[(l, b)]).collect();
            if let Some(first) = ua.iter().find(|z| z.norm() > TIE_TOL).copied() {
                let phase = first.conj() / first.norm();
                ua.iter_mut().for_each(|z| *z *= phase);
                vb.iter_mut().for_each(|z| *z /= phase);
            }
            (svd.singular_values[l].max(0.0), ua, vb)
        })
        .collect();

    let scale = terms.iter().map(|t| t.0).fold(0.0, f64::max).max(1.0);
    terms.sort_by(|x, y| {
        if (x.0 - y.0).abs() > TIE_TOL * scale {
            return y.0.total_cmp(&x.0);
        }
        for (p, q) in x.1.iter().zip(&y.1) {
            if (p.re - q.re).abs() > TIE_TOL {
                return q.re.total_cmp(&p.re);
            }
        }
        std::cmp::Ordering::Equal
    });

    let build = |c: &[Complex64]| c.iter().zip(&basis).fold(ComplexMatrix::zeros(2, 2), |acc, (&z, p)| acc + p * z);
    Ok(OperatorSchmidtDecomposition {
        coefficients: terms.iter().map(|t| t.0).collect(),
        ops_a: terms.iter().map(|t| build(&t.1)).collect(),
        ops_b: terms.iter().map(|t| build(&t.2)).collect(),
    })
}

/// Number of coefficients above `rel_tol × max`; zero for the zero operator.
pub fn schmidt_number(d: &OperatorSchmidtDecomposition, rel_tol: f64) -> usize {
    let max = d.coefficients.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return 0;
    }
    d.coefficients.iter().filter(|&&s| s > rel_tol * max).count()
}

pub const DEFAULT_SCHMIDT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Serialize)]
pub struct AaptUsability {
    pub usable: bool,
    pub schmidt_number: usize,
    pub coefficients: Vec<f64>,
    /// Smallest coefficient; a small value means large noise amplification.
    pub min_coefficient: f64,
}

/// A two-qubit state supports ancilla-assisted tomography of qubit A exactly
/// when its operator-Schmidt number is 4.
pub fn aapt_usable(sigma: &ComplexMatrix) -> Result<AaptUsability> {
    let d = operator_schmidt(sigma)?;
    let number = schmidt_number(&d, DEFAULT_SCHMIDT_TOL);
    Ok(AaptUsability {
        usable: number == 4,
        schmidt_number: number,
        min_coefficient: d.min_coefficient(),
        coefficients: d.coefficients,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{approx_eq, c, identity, max_abs_diff};
    use crate::state::{density_from_stokes, states, StokesVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn assert_coeffs(d: &OperatorSchmidtDecomposition, want: [f64; 4]) {
        for (g, w) in d.coefficients.iter().zip(want) {
            assert!((g - w).abs() < 1e-10, "got {:?}, want {want:?}", d.coefficients);
        }
    }

    #[test]
    fn bell_and_werner_coefficients() {
        // Oracle: |φ−⟩⟨φ−| = ¼(II − XX + YY + ZZ) gives ½ on each normalized term.
        assert_coeffs(&operator_schmidt(states::phi_minus().matrix()).unwrap(), [0.5; 4]);
        // Oracle: ρ_W = ¼ II + (1/12)(XX − YY + ZZ).
        let w = operator_schmidt(states::werner().matrix()).unwrap();
        assert_coeffs(&w, [0.5, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0]);
        assert_eq!(schmidt_number(&w, DEFAULT_SCHMIDT_TOL), 4);
    }

    #[test]
    fn product_state_has_rank_one() {
        let rho = states::product(&density_from_stokes(StokesVector::new(0.3, 0.1, -0.5)), &states::r());
        let d = operator_schmidt(rho.matrix()).unwrap();
        assert_eq!(schmidt_number(&d, DEFAULT_SCHMIDT_TOL), 1);
        let u = aapt_usable(rho.matrix()).unwrap();
        assert!(!u.usable);
        assert_eq!(u.schmidt_number, 1);
    }

    #[test]
    fn zero_operator_has_schmidt_number_zero() {
        let d = operator_schmidt(&ComplexMatrix::zeros(4, 4)).unwrap();
        assert_eq!(schmidt_number(&d, DEFAULT_SCHMIDT_TOL), 0);
    }

    #[test]
    fn usability_examples() {
        assert!(aapt_usable(states::phi_minus().matrix()).unwrap().usable);
        let w = aapt_usable(states::werner().matrix()).unwrap();
        assert!(w.usable);
        assert!((w.min_coefficient - 1.0 / 6.0).abs() < 1e-12);
    }

    fn random_operator(rng: &mut ChaCha8Rng) -> ComplexMatrix {
        ComplexMatrix::from_fn(4, 4, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    fn random_unitary(rng: &mut ChaCha8Rng) -> ComplexMatrix {
        let m = ComplexMatrix::from_fn(2, 2, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        m.qr().q()
    }

    #[test]
    fn reconstruction_and_orthonormality_on_random_operators() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..200 {
            let m = random_operator(&mut rng);
            let d = operator_schmidt(&m).unwrap();
            assert!(max_abs_diff(&d.reconstruct(), &m) <= 1e-10);
            for ops in [&d.ops_a, &d.ops_b] {
                let gram = ComplexMatrix::from_fn(4, 4, |j, k| inner(&ops[j], &ops[k]));
                assert!(approx_eq(&gram, &identity(4), 1e-10));
            }
            assert!(d.coefficients.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn coefficients_invariant_under_local_unitaries() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..50 {
            let m = random_operator(&mut rng);
            let local = tensor(&random_unitary(&mut rng), &random_unitary(&mut rng));
            let rotated = &local * &m * local.adjoint();
            let a = operator_schmidt(&m).unwrap().coefficients;
            let b = operator_schmidt(&rotated).unwrap().coefficients;
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn degenerate_decomposition_is_deterministic() {
        let a = operator_schmidt(states::phi_minus().matrix()).unwrap();
        let b = operator_schmidt(&states::phi_minus().matrix().clone()).unwrap();
        for (x, y) in a.ops_a.iter().zip(&b.ops_a) {
            assert_eq!(x, y);
        }
        assert!(max_abs_diff(&a.reconstruct(), states::phi_minus().matrix()) < 1e-12);
    }
}
