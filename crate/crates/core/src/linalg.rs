//! Complex-matrix plumbing shared by every module.
//!
//! Operators are plain `nalgebra` dynamic matrices of `Complex64`. Composite
//! two-qubit operators use the row-major Kronecker convention with system A
//! first: the composite index of `(i_a, i_b)` is `i_a * d_b + i_b`, so the
//! polarization basis order is HH, HV, VH, VV.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QptError, Result};

pub type ComplexMatrix = DMatrix<Complex64>;

/// Tolerance for algebraic identities.
pub const ALGEBRA_TOL: f64 = 1e-12;
/// Tolerance for physicality checks (Hermiticity, positivity, trace bound).
pub const PHYSICAL_TOL: f64 = 1e-9;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[inline]
pub fn real(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

/// Builds a square matrix from row-major entries.
pub fn from_rows(n: usize, entries: &[Complex64]) -> ComplexMatrix {
    assert_eq!(entries.len(), n * n, "entry count must be n*n");
    ComplexMatrix::from_row_slice(n, n, entries)
}

pub fn diag(entries: &[Complex64]) -> ComplexMatrix {
    let n = entries.len();
    let mut m = ComplexMatrix::zeros(n, n);
    for (i, &e) in entries.iter().enumerate() {
        m[(i, i)] = e;
    }
    m
}

/// Pauli matrices indexed 0..4 as I, σx, σy, σz.
pub fn pauli(index: usize) -> ComplexMatrix {
    match index {
        0 => from_rows(2, &[ONE, ZERO, ZERO, ONE]),
        1 => from_rows(2, &[ZERO, ONE, ONE, ZERO]),
        2 => from_rows(2, &[ZERO, -I, I, ZERO]),
        3 => from_rows(2, &[ONE, ZERO, ZERO, -ONE]),
        _ => panic!("pauli index {index} out of range"),
    }
}

/// Outer product |a⟩⟨b|.
pub fn outer(a: &[Complex64], b: &[Complex64]) -> ComplexMatrix {
    ComplexMatrix::from_fn(a.len(), b.len(), |i, j| a[i] * b[j].conj())
}

pub fn trace(m: &ComplexMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

/// Hilbert-Schmidt inner product tr(a†b).
pub fn inner(a: &ComplexMatrix, b: &ComplexMatrix) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Kronecker product `a ⊗ b`.
pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

/// Which half of a two-qubit composite to act on or trace out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Subsystem {
    A,
    B,
}

/// Traces out `subsystem` from a 4×4 operator.
pub fn partial_trace(m: &ComplexMatrix, subsystem: Subsystem) -> Result<ComplexMatrix> {
    expect_shape(m, 4, "4x4 operator")?;
    let mut out = ComplexMatrix::zeros(2, 2);
    for i in 0..2 {
        for j in 0..2 {
            let mut acc = ZERO;
            for k in 0..2 {
                acc += match subsystem {
                    Subsystem::B => m[(2 * i + k, 2 * j + k)],
                    Subsystem::A => m[(2 * k + i, 2 * k + j)],
                };
            }
            out[(i, j)] = acc;
        }
    }
    Ok(out)
}

/// Partial transpose of a 4×4 operator on `subsystem`.
pub fn partial_transpose(m: &ComplexMatrix, subsystem: Subsystem) -> Result<ComplexMatrix> {
    expect_shape(m, 4, "4x4 operator")?;
    let mut out = ComplexMatrix::zeros(4, 4);
    for a in 0..2 {
        for b in 0..2 {
            for a2 in 0..2 {
                for b2 in 0..2 {
                    let (r, c) = match subsystem {
                        Subsystem::A => ((a2 * 2 + b, a * 2 + b2), (a * 2 + b, a2 * 2 + b2)),
                        Subsystem::B => ((a * 2 + b2, a2 * 2 + b), (a * 2 + b, a2 * 2 + b2)),
                    };
                    out[r] = m[c];
                }
            }
        }
    }
    Ok(out)
}

pub(crate) fn expect_shape(m: &ComplexMatrix, n: usize, what: &str) -> Result<()> {
    if m.nrows() != n || m.ncols() != n {
        return Err(QptError::DimensionMismatch {
            expected: what.to_string(),
            got: format!("{}x{}", m.nrows(), m.ncols()),
        });
    }
    Ok(())
}

/// Largest entrywise modulus of `m - m†`.
pub fn hermiticity_residual(m: &ComplexMatrix) -> f64 {
    max_abs_diff(m, &m.adjoint())
}

pub fn hermitize(m: &ComplexMatrix) -> ComplexMatrix {
    (m + m.adjoint()).scale(0.5)
}

pub fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch");
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Entrywise comparison with an explicit absolute tolerance.
pub fn approx_eq(a: &ComplexMatrix, b: &ComplexMatrix, tol: f64) -> bool {
    a.shape() == b.shape() && max_abs_diff(a, b) <= tol
}

/// Eigen-decomposition of the Hermitian part of `m`, eigenvalues ascending.
pub fn hermitian_eigen(m: &ComplexMatrix) -> (Vec<f64>, ComplexMatrix) {
    let eig = SymmetricEigen::new(hermitize(m));
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

pub fn eigenvalues(m: &ComplexMatrix) -> Vec<f64> {
    hermitian_eigen(m).0
}

pub fn min_eigenvalue(m: &ComplexMatrix) -> f64 {
    eigenvalues(m).first().copied().unwrap_or(0.0)
}

/// Rebuilds `V f(Λ) V†` from an eigen-decomposition.
pub fn spectral_map(values: &[f64], vectors: &ComplexMatrix, f: impl Fn(f64) -> f64) -> ComplexMatrix {
    let n = values.len();
    let mut out = ComplexMatrix::zeros(n, n);
    for (k, &lambda) in values.iter().enumerate() {
        let fk = f(lambda);
        if fk == 0.0 {
            continue;
        }
        let v = vectors.column(k);
        out += (&v * v.adjoint()).scale(fk);
    }
    out
}

/// Square root of a positive-semidefinite matrix; negative eigenvalues are clipped.
pub fn psd_sqrt(m: &ComplexMatrix) -> ComplexMatrix {
    let (values, vectors) = hermitian_eigen(m);
    let floor = 1e-14 * values.last().copied().unwrap_or(0.0).max(0.0);
    spectral_map(&values, &vectors, |x| if x > floor { x.sqrt() } else { 0.0 })
}

/// Row-major vectorization.
pub fn vec_row_major(m: &ComplexMatrix) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)]);
        }
    }
    out
}

/// JSON carrier `{rows, cols, re, im}` with row-major flat arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl From<&ComplexMatrix> for MatrixJson {
    fn from(m: &ComplexMatrix) -> Self {
        let v = vec_row_major(m);
        MatrixJson {
            rows: m.nrows(),
            cols: m.ncols(),
            re: v.iter().map(|z| z.re).collect(),
            im: v.iter().map(|z| z.im).collect(),
        }
    }
}

impl TryFrom<MatrixJson> for ComplexMatrix {
    type Error = QptError;

    fn try_from(j: MatrixJson) -> Result<Self> {
        let n = j.rows * j.cols;
        if j.rows == 0 || j.cols == 0 || j.re.len() != n || j.im.len() != n {
            return Err(QptError::Config {
                path: "matrix".into(),
                message: format!(
                    "expected {} real and imaginary entries for a {}x{} matrix, got {} and {}",
                    n,
                    j.rows,
                    j.cols,
                    j.re.len(),
                    j.im.len()
                ),
            });
        }
        let entries: Vec<Complex64> = j.re.iter().zip(&j.im).map(|(&r, &i)| c(r, i)).collect();
        Ok(ComplexMatrix::from_row_slice(j.rows, j.cols, &entries))
    }
}
