//! Maximum-likelihood state reconstruction under Poisson counting noise.
//!
//! The state is parameterized as `ρ = T†T / tr(T†T)` with `T` lower
//! triangular (real diagonal), `d²` real parameters in total, so every
//! candidate is positive semidefinite. The overall weight is profiled out
//! analytically: for a fixed shape `ρ`, the Poisson likelihood is maximized
//! by `w = Σ n_i / Σ N_i p_i`. What remains is minimized with BFGS and a
//! backtracking line search, starting from the linear estimate projected onto
//! the physical states.

use nalgebra::{DMatrix, DVector};

use super::{least_squares_reconstruct, linear_reconstruct, qubits_for_dim, CountRecord};
use crate::error::{QptError, Result};
use crate::linalg::{self, trace, ComplexMatrix};
use crate::state::{project_to_physical, DensityMatrix};

#[derive(Debug, Clone, Copy)]
pub struct MleOptions {
    pub max_iterations: usize,
    /// Convergence requires the last accepted step to be shorter than this...
    pub step_tol: f64,
    /// ...and the gradient norm (per total count) to be below this.
    pub gradient_tol: f64,
}

impl Default for MleOptions {
    fn default() -> Self {
        MleOptions { max_iterations: 2000, step_tol: 1e-9, gradient_tol: 1e-7 }
    }
}

#[derive(Debug, Clone)]
pub struct MleEstimate {
    /// Positive semidefinite, trace = fitted weight.
    pub state: DensityMatrix,
    /// Poisson negative log-likelihood `Σ [n̄_i − n_i log n̄_i]` at the estimate.
    pub nll: f64,
    /// Same quantity at the projected linear starting point.
    pub start_nll: f64,
    pub iterations: usize,
}

pub fn mle_reconstruct(records: &[CountRecord], dim: usize) -> Result<MleEstimate> {
    mle_reconstruct_with(records, dim, &MleOptions::default())
}

pub fn mle_reconstruct_with(records: &[CountRecord], dim: usize, options: &MleOptions) -> Result<MleEstimate> {
    let qubits = qubits_for_dim(dim)?;
    if records.iter().any(|r| r.setting.num_qubits() != qubits) {
        return Err(QptError::DimensionMismatch { expected: format!("{qubits}-photon settings"), got: "other".into() });
    }
    let problem = Problem::new(records, dim);

    let linear = match linear_reconstruct(records) {
        Ok(est) => est.state,
        Err(QptError::MissingSettings(_)) => least_squares_reconstruct(records, dim)?,
        Err(e) => return Err(e),
    };
    if problem.total == 0.0 {
        let state = DensityMatrix::new_unchecked(ComplexMatrix::zeros(dim, dim))?;
        return Ok(MleEstimate { state, nll: 0.0, start_nll: 0.0, iterations: 0 });
    }
    let start = project_to_physical(linear.matrix());
    let start_nll = negative_log_likelihood(records, &start);

    // Pull the start off the boundary so zero-probability settings with
    // nonzero counts do not make the objective infinite.
    let eps = 1e-3;
    let mixed = start.scale(1.0 - eps) + linalg::identity(dim).scale(eps / dim as f64);
    let mut x = problem.params_from_density(&mixed);
    let (mut f, mut g) = problem.value_and_gradient(&x);
    let n = x.len();
    let mut hinv = DMatrix::<f64>::identity(n, n);
    let mut last_step = f64::INFINITY;
    let mut iterations = 0;
    let converged = loop {
        if g.norm() < options.gradient_tol && (last_step < options.step_tol || g.norm() < 1e-14) {
            break true;
        }
        if iterations >= options.max_iterations {
            break false;
        }
        iterations += 1;
        let mut dir = -(&hinv * &g);
        let mut slope = g.dot(&dir);
        if !(slope < 0.0) {
            hinv = DMatrix::identity(n, n);
            dir = -g.clone();
            slope = -g.norm_squared();
        }
        match line_search(&problem, &x, f, &dir, slope) {
            Some((alpha, x_new, f_new, g_new)) => {
                let s = &dir * alpha;
                let y = &g_new - &g;
                let sy = s.dot(&y);
                if sy > 1e-14 * s.norm() * y.norm() {
                    let rho = 1.0 / sy;
                    let eye = DMatrix::<f64>::identity(n, n);
                    let left = &eye - (&s * y.transpose()) * rho;
                    let right = &eye - (&y * s.transpose()) * rho;
                    hinv = &left * &hinv * &right + (&s * s.transpose()) * rho;
                }
                last_step = s.norm();
                x = x_new;
                f = f_new;
                g = g_new;
            }
            None => {
                // No decrease along the quasi-Newton direction: restart from
                // steepest descent once, then accept the point if the
                // objective is flat to machine precision.
                if hinv != DMatrix::identity(n, n) {
                    hinv = DMatrix::identity(n, n);
                    continue;
                }
                if g.norm() < options.gradient_tol.sqrt() {
                    break true;
                }
                break false;
            }
        }
    };
    if !converged {
        return Err(QptError::MleNotConverged { iterations, gradient_norm: g.norm() });
    }

    let shape = problem.density_from_params(&x);
    let mut best = shape;
    let mut nll = negative_log_likelihood(records, &best);
    if start_nll < nll {
        best = start;
        nll = start_nll;
    }
    let weight = problem.weight_for(&best);
    let state = DensityMatrix::new_unchecked(linalg::hermitize(&best).scale(weight))?;
    Ok(MleEstimate { state, nll, start_nll, iterations })
}

fn line_search(
    problem: &Problem,
    x: &DVector<f64>,
    f: f64,
    dir: &DVector<f64>,
    slope: f64,
) -> Option<(f64, DVector<f64>, f64, DVector<f64>)> {
    let mut alpha = 1.0;
    for _ in 0..60 {
        let x_new = x + dir * alpha;
        let (f_new, g_new) = problem.value_and_gradient(&x_new);
        if f_new.is_finite() && f_new <= f + 1e-4 * alpha * slope {
            return Some((alpha, x_new, f_new, g_new));
        }
        alpha *= 0.5;
    }
    None
}

/// Poisson negative log-likelihood `Σ [n̄_i − n_i log n̄_i]` of a unit-trace
/// shape with the weight fitted by profiling.
pub fn negative_log_likelihood(records: &[CountRecord], shape: &ComplexMatrix) -> f64 {
    let probs: Vec<f64> = records.iter().map(|r| trace(&(shape * r.setting.projector())).re).collect();
    let total: f64 = records.iter().map(|r| r.counts).sum();
    let expected_flux: f64 = records.iter().zip(&probs).map(|(r, p)| r.reference_counts as f64 * p).sum();
    let weight = if expected_flux > 0.0 { total / expected_flux } else { 0.0 };
    let mut nll = 0.0;
    for (r, &p) in records.iter().zip(&probs) {
        let mean = r.reference_counts as f64 * weight * p;
        if r.counts > 0.0 {
            if mean <= 0.0 {
                return f64::INFINITY;
            }
            nll += mean - r.counts * mean.ln();
        } else {
            nll += mean;
        }
    }
    nll
}

struct Problem {
    dim: usize,
    projectors: Vec<ComplexMatrix>,
    counts: Vec<f64>,
    references: Vec<f64>,
    total: f64,
}

/// Keeps tr(T†T) near 1; ρ itself is invariant under rescaling T.
const SCALE_PENALTY: f64 = 1.0;

impl Problem {
    fn new(records: &[CountRecord], dim: usize) -> Self {
        Problem {
            dim,
            projectors: records.iter().map(|r| r.setting.projector()).collect(),
            counts: records.iter().map(|r| r.counts).collect(),
            references: records.iter().map(|r| r.reference_counts as f64).collect(),
            total: records.iter().map(|r| r.counts).sum(),
        }
    }

    /// Lower-triangular entries in row order: diagonal as one real parameter,
    /// off-diagonal as (re, im).
    fn entries(&self) -> Vec<(usize, usize)> {
        (0..self.dim).flat_map(|a| (0..=a).map(move |b| (a, b))).collect()
    }

    fn t_from_params(&self, x: &DVector<f64>) -> ComplexMatrix {
        let mut t = ComplexMatrix::zeros(self.dim, self.dim);
        let mut k = 0;
        for (a, b) in self.entries() {
            if a == b {
                t[(a, b)] = linalg::real(x[k]);
                k += 1;
            } else {
                t[(a, b)] = linalg::c(x[k], x[k + 1]);
                k += 2;
            }
        }
        t
    }

    fn density_from_params(&self, x: &DVector<f64>) -> ComplexMatrix {
        let t = self.t_from_params(x);
        let m = t.adjoint() * &t;
        let tau = trace(&m).re;
        m.unscale(tau)
    }

    /// T lower triangular with `T†T = ρ`: reverse the index order, take the
    /// Cholesky factor, and reverse back.
    fn params_from_density(&self, rho: &ComplexMatrix) -> DVector<f64> {
        let d = self.dim;
        let flipped = ComplexMatrix::from_fn(d, d, |i, j| rho[(d - 1 - i, d - 1 - j)]);
        let chol = nalgebra::Cholesky::new(linalg::hermitize(&flipped)).expect("mixed start is positive definite");
        let l = chol.l();
        let upper = ComplexMatrix::from_fn(d, d, |i, j| l[(d - 1 - i, d - 1 - j)]);
        let t = upper.adjoint();
        let mut x = Vec::with_capacity(d * d);
        for (a, b) in self.entries() {
            if a == b {
                x.push(t[(a, b)].re);
            } else {
                x.push(t[(a, b)].re);
                x.push(t[(a, b)].im);
            }
        }
        DVector::from_vec(x)
    }

    fn weight_for(&self, shape: &ComplexMatrix) -> f64 {
        let flux: f64 = self
            .projectors
            .iter()
            .zip(&self.references)
            .map(|(p, n)| n * trace(&(shape * p)).re)
            .sum();
        if flux > 0.0 {
            self.total / flux
        } else {
            0.0
        }
    }

    /// Profiled objective per total count, `[−Σ n_i ln p_i + S ln Σ N_i p_i] / S`,
    /// plus the scale penalty, and its gradient in the T parameters.
    fn value_and_gradient(&self, x: &DVector<f64>) -> (f64, DVector<f64>) {
        let t = self.t_from_params(x);
        let m = t.adjoint() * &t;
        let tau = trace(&m).re;
        let rho = m.unscale(tau);
        let s = self.total;

        let probs: Vec<f64> = self.projectors.iter().map(|p| trace(&(&rho * p)).re).collect();
        let flux: f64 = probs.iter().zip(&self.references).map(|(p, n)| p * n).sum();
        let mut value = s * flux.ln();
        let mut grad_rho = ComplexMatrix::zeros(self.dim, self.dim);
        for (i, &p) in probs.iter().enumerate() {
            let n = self.counts[i];
            let mut coeff = s * self.references[i] / flux;
            if n > 0.0 {
                if p <= 0.0 {
                    return (f64::INFINITY, DVector::zeros(x.len()));
                }
                value -= n * p.ln();
                coeff -= n / p;
            }
            grad_rho += self.projectors[i].scale(coeff / s);
        }
        value /= s;
        value += SCALE_PENALTY * (tau - 1.0).powi(2);

        let g_rho = trace(&(&grad_rho * &rho)).re;
        let shifted = &grad_rho - linalg::identity(self.dim).scale(g_rho);
        let mm = shifted * t.adjoint();
        let penalty = 2.0 * SCALE_PENALTY * (tau - 1.0);
        let mut grad = Vec::with_capacity(x.len());
        for (a, b) in self.entries() {
            let entry = mm[(b, a)];
            let te = t[(a, b)];
            grad.push(2.0 / tau * entry.re + penalty * 2.0 * te.re);
            if a != b {
                grad.push(-2.0 / tau * entry.im + penalty * 2.0 * te.im);
            }
        }
        (value, DVector::from_vec(grad))
    }
}
