//! Damped least-squares (Levenberg-Marquardt) solution of a square real
//! residual system, with a forward-difference Jacobian.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("residual evaluation failed: {0}")]
pub struct EvalError(pub String);

/// A residual map `R: R^n -> R^m`.
pub trait Residual {
    fn unknowns(&self) -> usize;
    fn residuals(&self) -> usize;
    fn eval(&self, x: &[f64], out: &mut [f64]) -> Result<(), EvalError>;
}

impl<F> Residual for (usize, F)
where
    F: Fn(&[f64], &mut [f64]) -> Result<(), EvalError>,
{
    fn unknowns(&self) -> usize {
        self.0
    }
    fn residuals(&self) -> usize {
        self.0
    }
    fn eval(&self, x: &[f64], out: &mut [f64]) -> Result<(), EvalError> {
        (self.1)(x, out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveOptions {
    pub tol_residual: f64,
    pub max_iters: usize,
    pub lambda0: f64,
    pub lambda_up: f64,
    pub lambda_down: f64,
    pub fd_step: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol_residual: 1e-8,
            max_iters: 200,
            lambda0: 1e-3,
            lambda_up: 10.0,
            lambda_down: 0.1,
            fd_step: 1e-7,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<(), String> {
        let ok = self.tol_residual > 0.0
            && self.max_iters > 0
            && self.lambda0 > 0.0
            && self.lambda_up > 1.0
            && self.lambda_down > 0.0
            && self.lambda_down < 1.0
            && self.fd_step > 0.0;
        if ok {
            Ok(())
        } else {
            Err(format!("invalid solver options {self:?}"))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    NoConvergence,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    pub x: Vec<f64>,
    /// Infinity norm of the residual at `x`.
    pub residual_norm: f64,
    pub iters: usize,
}

impl SolveOutcome {
    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }
}

const LAMBDA_MAX: f64 = 1e16;
const POLISH_STEPS: usize = 2;

pub fn inf_norm(r: &[f64]) -> f64 {
    r.iter().fold(0.0_f64, |m, v| if v.is_nan() { f64::INFINITY } else { m.max(v.abs()) })
}

fn sq_norm(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

/// Forward-difference Jacobian, column by column.
pub fn jacobian<R: Residual + ?Sized>(
    sys: &R,
    x: &[f64],
    r0: &[f64],
    step: f64,
) -> Result<DMatrix<f64>, EvalError> {
    let (m, n) = (sys.residuals(), sys.unknowns());
    let mut jac = DMatrix::zeros(m, n);
    let mut xp = x.to_vec();
    let mut rp = vec![0.0; m];
    for k in 0..n {
        let h = step * x[k].abs().max(1.0);
        xp[k] = x[k] + h;
        sys.eval(&xp, &mut rp)?;
        for i in 0..m {
            jac[(i, k)] = (rp[i] - r0[i]) / h;
        }
        xp[k] = x[k];
    }
    Ok(jac)
}

/// Central-difference Jacobian; slower, used to cross-check [`jacobian`].
pub fn jacobian_central<R: Residual + ?Sized>(sys: &R, x: &[f64], step: f64) -> Result<DMatrix<f64>, EvalError> {
    let (m, n) = (sys.residuals(), sys.unknowns());
    let mut jac = DMatrix::zeros(m, n);
    let mut xp = x.to_vec();
    let (mut rp, mut rm) = (vec![0.0; m], vec![0.0; m]);
    for k in 0..n {
        let h = step * x[k].abs().max(1.0);
        xp[k] = x[k] + h;
        sys.eval(&xp, &mut rp)?;
        xp[k] = x[k] - h;
        sys.eval(&xp, &mut rm)?;
        for i in 0..m {
            jac[(i, k)] = (rp[i] - rm[i]) / (2.0 * h);
        }
        xp[k] = x[k];
    }
    Ok(jac)
}

fn damped_step(jtj: &DMatrix<f64>, grad: &DVector<f64>, lambda: f64) -> Option<DVector<f64>> {
    let mut a = jtj.clone();
    for k in 0..a.nrows() {
        a[(k, k)] += lambda;
    }
    let rhs = -grad;
    match a.clone().cholesky() {
        Some(ch) => Some(ch.solve(&rhs)),
        None => a.lu().solve(&rhs),
    }
    .filter(|d| d.iter().all(|v| v.is_finite()))
}

/// Solves `R(x) = 0` starting from `x0`.
///
/// Never panics on numerical trouble: evaluation failures, a damping factor
/// that blows up, or running out of iterations all give `NoConvergence`.
pub fn solve<R: Residual + ?Sized>(sys: &R, x0: &[f64], opts: &SolveOptions) -> SolveOutcome {
    let n = sys.unknowns();
    assert_eq!(x0.len(), n, "initial guess has wrong length");
    let m = sys.residuals();
    let mut x = x0.to_vec();
    let mut r = vec![0.0; m];
    let fail = |x: Vec<f64>, norm: f64, iters: usize| SolveOutcome {
        status: SolveStatus::NoConvergence,
        x,
        residual_norm: norm,
        iters,
    };
    if sys.eval(&x, &mut r).is_err() || r.iter().any(|v| !v.is_finite()) {
        return fail(x, f64::INFINITY, 0);
    }
    let mut lambda = opts.lambda0;
    let mut cost = sq_norm(&r);
    let mut trial = vec![0.0; n];
    let mut r_trial = vec![0.0; m];
    let mut polish = 0;
    let mut converged_at: Option<usize> = None;

    let mut steps = 0;
    while steps < opts.max_iters + POLISH_STEPS {
        if inf_norm(&r) < opts.tol_residual {
            converged_at.get_or_insert(steps);
            if polish >= POLISH_STEPS {
                break;
            }
            polish += 1;
        }
        let jac = match jacobian(sys, &x, &r, opts.fd_step) {
            Ok(j) => j,
            Err(_) => break,
        };
        let rv = DVector::from_column_slice(&r);
        let jtj = jac.transpose() * &jac;
        let grad = jac.transpose() * rv;
        let mut accepted = false;
        while lambda < LAMBDA_MAX {
            if let Some(delta) = damped_step(&jtj, &grad, lambda) {
                for k in 0..n {
                    trial[k] = x[k] + delta[k];
                }
                if sys.eval(&trial, &mut r_trial).is_ok() && r_trial.iter().all(|v| v.is_finite()) {
                    let c = sq_norm(&r_trial);
                    if c < cost {
                        std::mem::swap(&mut x, &mut trial);
                        std::mem::swap(&mut r, &mut r_trial);
                        cost = c;
                        lambda = (lambda * opts.lambda_down).max(1e-15);
                        accepted = true;
                        break;
                    }
                }
            }
            lambda *= opts.lambda_up;
        }
        if !accepted {
            break;
        }
        steps += 1;
        if converged_at.is_none() && steps >= opts.max_iters {
            break;
        }
    }
    let norm = inf_norm(&r);
    match converged_at {
        Some(it) if norm < opts.tol_residual => SolveOutcome {
            status: SolveStatus::Converged,
            x,
            residual_norm: norm,
            iters: it,
        },
        _ => fail(x, norm, steps),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_scalar() {
        let sys = (1usize, |x: &[f64], r: &mut [f64]| {
            r[0] = x[0] - 3.0;
            Ok(())
        });
        let out = solve(&sys, &[0.0], &SolveOptions::default());
        assert!(out.converged());
        assert!((out.x[0] - 3.0).abs() < 1e-10);
        // damping leaves a 1e-3 relative error per step on a linear problem
        assert!(out.iters <= 3, "iters = {}", out.iters);
    }

    #[test]
    fn rosenbrock_style_system() {
        let sys = (2usize, |x: &[f64], r: &mut [f64]| {
            r[0] = 10.0 * (x[1] - x[0] * x[0]);
            r[1] = 1.0 - x[0];
            Ok(())
        });
        let out = solve(&sys, &[-1.2, 1.0], &SolveOptions::default());
        assert!(out.converged());
        assert!((out.x[0] - 1.0).abs() < 1e-8 && (out.x[1] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn infeasible_system_reports_no_convergence() {
        // x^2 + 1 = 0 has no real root
        let sys = (1usize, |x: &[f64], r: &mut [f64]| {
            r[0] = x[0] * x[0] + 1.0;
            Ok(())
        });
        let out = solve(&sys, &[0.5], &SolveOptions::default());
        assert_eq!(out.status, SolveStatus::NoConvergence);
        assert!(out.residual_norm >= 1.0 - 1e-9);
    }

    #[test]
    fn evaluation_error_is_not_a_crash() {
        let sys = (1usize, |_: &[f64], _: &mut [f64]| Err(EvalError("boom".into())));
        let out = solve(&sys, &[0.0], &SolveOptions::default());
        assert_eq!(out.status, SolveStatus::NoConvergence);
    }

    #[test]
    fn forward_and_central_jacobians_agree() {
        let sys = (2usize, |x: &[f64], r: &mut [f64]| {
            r[0] = x[0].sin() * x[1];
            r[1] = x[0] * x[0] - x[1].exp();
            Ok(())
        });
        let x = [0.3, -0.7];
        let mut r0 = [0.0; 2];
        sys.eval(&x, &mut r0).unwrap();
        let jf = jacobian(&sys, &x, &r0, 1e-7).unwrap();
        let jc = jacobian_central(&sys, &x, 1e-5).unwrap();
        assert!((jf - jc).abs().max() < 1e-6);
    }

    #[test]
    fn options_validation() {
        assert!(SolveOptions::default().validate().is_ok());
        let bad = SolveOptions { lambda_up: 0.5, ..Default::default() };
        assert!(bad.validate().is_err());
    }
}
