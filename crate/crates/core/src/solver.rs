//! Damped Newton corrector for square steady-state systems and the bordered
//! linear solves used by the continuation driver.
//!
//! Everything is dense LU with partial pivoting; at the problem sizes here
//! robustness near folds matters far more than asymptotic cost.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::linalg::{max_norm, LinalgError, Lu, Mat};
use crate::model::RingModel;

/// A square parameter-dependent system `F(u, μ) = 0` with analytic
/// Jacobian and parameter derivative.
pub trait ParametricSystem {
    fn dim(&self) -> usize;
    fn residual_into(&self, u: &[f64], mu: f64, out: &mut [f64]);
    fn jacobian(&self, u: &[f64], mu: f64) -> Mat;
    fn mu_derivative_into(&self, u: &[f64], mu: f64, out: &mut [f64]);

    fn residual_vec(&self, u: &[f64], mu: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.residual_into(u, mu, &mut out);
        out
    }

    fn mu_derivative_vec(&self, u: &[f64], mu: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.mu_derivative_into(u, mu, &mut out);
        out
    }
}

impl<T: ParametricSystem + ?Sized> ParametricSystem for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn residual_into(&self, u: &[f64], mu: f64, out: &mut [f64]) {
        (**self).residual_into(u, mu, out)
    }
    fn jacobian(&self, u: &[f64], mu: f64) -> Mat {
        (**self).jacobian(u, mu)
    }
    fn mu_derivative_into(&self, u: &[f64], mu: f64, out: &mut [f64]) {
        (**self).mu_derivative_into(u, mu, out)
    }
}

/// The unreduced ring system is itself a parametric system.
impl ParametricSystem for RingModel {
    fn dim(&self) -> usize {
        self.node_count()
    }
    fn residual_into(&self, u: &[f64], mu: f64, out: &mut [f64]) {
        out.copy_from_slice(&self.residual(u, mu));
    }
    fn jacobian(&self, u: &[f64], mu: f64) -> Mat {
        RingModel::jacobian(self, u, mu)
    }
    fn mu_derivative_into(&self, u: &[f64], mu: f64, out: &mut [f64]) {
        out.copy_from_slice(&self.residual_mu(u, mu));
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Damping {
    None,
    /// Backtracking on the residual max-norm: a step is accepted only if
    /// the norm strictly decreases; the step halves down to `min_step`.
    Armijo { factor: f64, min_step: f64 },
}

impl Default for Damping {
    fn default() -> Self {
        Damping::Armijo {
            factor: 0.5,
            min_step: 1.0 / 64.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NewtonOptions {
    /// Convergence threshold on the residual max-norm.
    pub tol_residual: f64,
    /// Stagnation threshold on the update max-norm.
    pub tol_step: f64,
    pub max_iters: usize,
    pub damping: Damping,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            tol_residual: 1e-10,
            tol_step: 1e-12,
            max_iters: 25,
            damping: Damping::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SolverError {
    /// A pivot fell below the rank-deficiency threshold.
    SingularJacobian,
    NoConvergence { iterations: usize, residual_norm: f64 },
    Diverged { iterations: usize },
    DimensionMismatch,
}

impl fmt::Display for SolverError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolverError::SingularJacobian => write!(f, "singular Jacobian"),
            SolverError::NoConvergence {
                iterations,
                residual_norm,
            } => write!(
                f,
                "no convergence after {iterations} iterations (residual {residual_norm:.3e})"
            ),
            SolverError::Diverged { iterations } => {
                write!(f, "iterates diverged after {iterations} iterations")
            }
            SolverError::DimensionMismatch => write!(f, "dimension mismatch"),
        }
    }
}

impl core::error::Error for SolverError {}

impl From<LinalgError> for SolverError {
    fn from(e: LinalgError) -> Self {
        match e {
            LinalgError::Singular => SolverError::SingularJacobian,
            LinalgError::DimensionMismatch => SolverError::DimensionMismatch,
        }
    }
}

#[derive(Clone, Debug)]
pub struct NewtonResult {
    pub u: Vec<f64>,
    pub iterations: usize,
    pub residual_norm: f64,
    /// Residual max-norm before each iteration plus the final value.
    pub residual_norms: Vec<f64>,
}

/// Solve `F(u, μ) = 0` at fixed `μ` from the given seed.
pub fn newton_solve<S: ParametricSystem>(
    system: &S,
    mu: f64,
    seed: &[f64],
    opts: &NewtonOptions,
) -> Result<NewtonResult, SolverError> {
    let n = system.dim();
    if seed.len() != n {
        return Err(SolverError::DimensionMismatch);
    }
    let mut u = seed.to_vec();
    let mut history = Vec::new();

    for iter in 0..=opts.max_iters {
        let res = system.residual_vec(&u, mu);
        let norm = max_norm(&res);
        history.push(norm);
        if !norm.is_finite() || max_norm(&u) > 1e6 {
            return Err(SolverError::Diverged { iterations: iter });
        }
        if norm <= opts.tol_residual {
            return Ok(NewtonResult {
                u,
                iterations: iter,
                residual_norm: norm,
                residual_norms: history,
            });
        }
        if iter == opts.max_iters {
            break;
        }

        let jac = system.jacobian(&u, mu);
        let lu = Lu::factor(&jac);
        let step = lu.solve(&res)?;

        let mut lambda = 1.0;
        loop {
            let trial: Vec<f64> = u.iter().zip(&step).map(|(a, s)| a - lambda * s).collect();
            let trial_norm = max_norm(&system.residual_vec(&trial, mu));
            let accept = match opts.damping {
                Damping::None => true,
                Damping::Armijo { .. } => trial_norm < norm,
            };
            if accept {
                let moved = lambda * max_norm(&step);
                u = trial;
                if moved < opts.tol_step {
                    let final_norm = max_norm(&system.residual_vec(&u, mu));
                    history.push(final_norm);
                    if final_norm <= opts.tol_residual {
                        return Ok(NewtonResult {
                            u,
                            iterations: iter + 1,
                            residual_norm: final_norm,
                            residual_norms: history,
                        });
                    }
                    return Err(SolverError::NoConvergence {
                        iterations: iter + 1,
                        residual_norm: final_norm,
                    });
                }
                break;
            }
            let (factor, min_step) = match opts.damping {
                Damping::None => unreachable!(),
                Damping::Armijo { factor, min_step } => (factor, min_step),
            };
            lambda *= factor;
            if lambda < min_step {
                return Err(SolverError::NoConvergence {
                    iterations: iter,
                    residual_norm: norm,
                });
            }
        }
    }

    let norm = *history.last().unwrap();
    Err(SolverError::NoConvergence {
        iterations: opts.max_iters,
        residual_norm: norm,
    })
}

/// Solve the bordered system
/// `[[J, b_col], [b_rowᵀ, corner]] · x = rhs`
/// by dense factorization of the `(n+1) × (n+1)` matrix.
pub fn bordered_solve(
    jac: &Mat,
    b_col: &[f64],
    b_row: &[f64],
    corner: f64,
    rhs: &[f64],
) -> Result<Vec<f64>, SolverError> {
    let n = jac.rows();
    if jac.cols() != n || b_col.len() != n || b_row.len() != n || rhs.len() != n + 1 {
        return Err(SolverError::DimensionMismatch);
    }
    let mut big = Mat::zeros(n + 1, n + 1);
    for i in 0..n {
        for j in 0..n {
            big[(i, j)] = jac[(i, j)];
        }
        big[(i, n)] = b_col[i];
        big[(n, i)] = b_row[i];
    }
    big[(n, n)] = corner;
    let lu = Lu::factor(&big);
    Ok(lu.solve(rhs)?)
}
