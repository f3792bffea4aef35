//! Levenberg-Marquardt with Marquardt diagonal scaling and box projection.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A nonlinear least-squares problem `min Σ rᵢ(p)²`.
pub trait LeastSquaresProblem {
    fn num_params(&self) -> usize;

    /// Residual vector. Non-finite entries mark points outside the model domain.
    fn residuals(&self, params: &[f64]) -> Vec<f64>;

    /// Jacobian `∂rᵢ/∂pⱼ`, one row per residual.
    fn jacobian(&self, params: &[f64]) -> DMatrix<f64>;

    /// Projects parameters onto the feasible set in place.
    fn project(&self, _params: &mut [f64]) {}
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Stop when an accepted step reduces RSS by less than this fraction.
    pub rss_tolerance: f64,
    /// Stop when the step ∞-norm falls below this.
    pub step_tolerance: f64,
    pub initial_damping: f64,
    pub max_damping: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            rss_tolerance: 1e-10,
            step_tolerance: 1e-12,
            initial_damping: 1e-3,
            max_damping: 1e8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    ZeroResidual,
    RssTolerance,
    StepTolerance,
    /// Damping passed its limit without any step lowering the RSS.
    NoImprovement,
    MaxIterations,
}

impl Termination {
    pub fn converged(self) -> bool {
        self != Termination::MaxIterations
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmReport {
    pub params: Vec<f64>,
    pub rss: f64,
    pub iterations: usize,
    pub termination: Termination,
}

impl LmReport {
    pub fn converged(&self) -> bool {
        self.termination.converged()
    }
}

fn sum_sq(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

fn finite_residuals<P: LeastSquaresProblem + ?Sized>(
    problem: &P,
    params: &[f64],
) -> Option<Vec<f64>> {
    let r = problem.residuals(params);
    r.iter().all(|v| v.is_finite()).then_some(r)
}

/// `Σ r² − Σ r'²` evaluated as `Σ (r − r')(r + r')`, which stays accurate
/// when the two sums agree to nearly all digits.
fn reduction(r: &[f64], trial: &[f64]) -> f64 {
    r.iter().zip(trial).map(|(a, b)| (a - b) * (a + b)).sum()
}

/// Minimizes the problem's RSS from `init`.
///
/// Each trial point is projected onto the feasible set before it is
/// evaluated. A step is accepted only if it lowers the RSS; damping is
/// divided by 10 on acceptance and multiplied by 10 on rejection.
pub fn levenberg_marquardt<P: LeastSquaresProblem + ?Sized>(
    problem: &P,
    init: &[f64],
    options: &LmOptions,
) -> Result<LmReport> {
    let n = problem.num_params();
    if init.len() != n {
        return Err(Error::invalid(
            "init",
            format!("expected {n} parameters, got {}", init.len()),
        ));
    }
    let mut p = init.to_vec();
    problem.project(&mut p);
    let Some(mut r) = finite_residuals(problem, &p) else {
        return Err(Error::invalid(
            "init",
            "residuals are not finite at the initial parameters",
        ));
    };
    let mut rss = sum_sq(&r);
    let mut lambda = options.initial_damping;

    for iter in 0..options.max_iterations {
        if rss == 0.0 {
            return Ok(LmReport {
                params: p,
                rss,
                iterations: iter,
                termination: Termination::ZeroResidual,
            });
        }
        let jac = problem.jacobian(&p);
        let jtj = jac.transpose() * &jac;
        let grad = jac.transpose() * DVector::from_column_slice(&r);
        let max_diag = jtj.diagonal().max();
        let floor = if max_diag > 0.0 {
            1e-12 * max_diag
        } else {
            1.0
        };
        let scale = jtj.diagonal().map(|d| d.max(floor));

        let accepted = loop {
            if lambda > options.max_damping {
                break None;
            }
            let mut m = jtj.clone();
            for i in 0..n {
                m[(i, i)] += lambda * scale[i];
            }
            let Some(chol) = m.cholesky() else {
                lambda *= 10.0;
                if lambda > options.max_damping {
                    return Err(Error::Singular(options.max_damping));
                }
                continue;
            };
            let step = -chol.solve(&grad);
            let mut trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            problem.project(&mut trial);
            let step_norm = trial
                .iter()
                .zip(&p)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            if step_norm < options.step_tolerance {
                return Ok(LmReport {
                    params: p,
                    rss,
                    iterations: iter + 1,
                    termination: Termination::StepTolerance,
                });
            }
            if let Some(trial_r) = finite_residuals(problem, &trial) {
                let gain = reduction(&r, &trial_r);
                if gain > 0.0 {
                    lambda = (lambda / 10.0).max(f64::EPSILON);
                    break Some((trial, trial_r, gain));
                }
            }
            lambda *= 10.0;
        };

        let Some((trial, trial_r, gain)) = accepted else {
            return Ok(LmReport {
                params: p,
                rss,
                iterations: iter + 1,
                termination: Termination::NoImprovement,
            });
        };
        let relative = gain / rss;
        p = trial;
        rss = sum_sq(&trial_r);
        r = trial_r;
        if relative < options.rss_tolerance {
            return Ok(LmReport {
                params: p,
                rss,
                iterations: iter + 1,
                termination: Termination::RssTolerance,
            });
        }
    }
    Ok(LmReport {
        params: p,
        rss,
        iterations: options.max_iterations,
        termination: Termination::MaxIterations,
    })
}

/// Central finite-difference Jacobian with relative step `rel_step`.
pub fn finite_difference_jacobian<P: LeastSquaresProblem + ?Sized>(
    problem: &P,
    params: &[f64],
    rel_step: f64,
) -> DMatrix<f64> {
    let m = problem.residuals(params).len();
    let n = params.len();
    let mut jac = DMatrix::zeros(m, n);
    for j in 0..n {
        let h = rel_step * params[j].abs().max(1.0e-3);
        let mut hi = params.to_vec();
        let mut lo = params.to_vec();
        hi[j] += h;
        lo[j] -= h;
        let (rh, rl) = (problem.residuals(&hi), problem.residuals(&lo));
        for i in 0..m {
            jac[(i, j)] = (rh[i] - rl[i]) / (2.0 * h);
        }
    }
    jac
}
