//! Weighted LASSO by cyclic coordinate descent on the Gram matrix.
//!
//! Minimizes `½‖y − Xα‖² + λ Σ w_j |α_j|`. Convergence requires both a small
//! duality gap (relative to `‖y‖²`) and KKT stationarity within `kkt_tol`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LassoOptions {
    pub max_sweeps: usize,
    /// Duality gap tolerance relative to `‖y‖²`.
    pub gap_tol: f64,
    pub kkt_tol: f64,
}

impl Default for LassoOptions {
    fn default() -> Self {
        LassoOptions {
            max_sweeps: 100_000,
            gap_tol: 1e-8,
            kkt_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LassoSolution {
    pub coefficients: Vector,
    pub sweeps: usize,
    pub duality_gap: f64,
    pub kkt_violation: f64,
}

/// Sufficient statistics `XᵀX`, `Xᵀy`, `yᵀy` of a least-squares problem.
#[derive(Debug, Clone)]
pub struct GramProblem {
    pub gram: Matrix,
    pub xty: Vector,
    pub yty: f64,
}

impl GramProblem {
    pub fn new(design: &Matrix, response: &Vector) -> Result<Self> {
        if design.nrows() != response.len() {
            return Err(Error::Dimension(format!(
                "design has {} rows, response has {}",
                design.nrows(),
                response.len()
            )));
        }
        Ok(GramProblem {
            gram: design.tr_mul(design),
            xty: design.tr_mul(response),
            yty: response.norm_squared(),
        })
    }

    pub fn ncols(&self) -> usize {
        self.xty.len()
    }

    /// Gradient of `½‖y − Xα‖²`, i.e. `XᵀXα − Xᵀy`.
    pub fn gradient(&self, alpha: &Vector) -> Vector {
        &self.gram * alpha - &self.xty
    }

    fn residual_sq(&self, alpha: &Vector) -> f64 {
        (self.yty - 2.0 * self.xty.dot(alpha) + alpha.dot(&(&self.gram * alpha))).max(0.0)
    }

    /// Duality gap at `alpha` using the scaled-residual dual point.
    pub fn duality_gap(&self, alpha: &Vector, lambda: f64, weights: &Vector) -> f64 {
        let rss = self.residual_sq(alpha);
        let penalty: f64 = alpha
            .iter()
            .zip(weights.iter())
            .map(|(a, w)| lambda * w * a.abs())
            .sum();
        let primal = 0.5 * rss + penalty;
        // Xᵀr = −gradient
        let xtr = -self.gradient(alpha);
        let mut scale: f64 = 1.0;
        for (g, w) in xtr.iter().zip(weights.iter()) {
            let bound = lambda * w;
            if g.abs() > bound {
                scale = scale.min(if g.abs() > 0.0 { bound / g.abs() } else { 1.0 });
            }
        }
        let ytr = self.yty - self.xty.dot(alpha);
        let dual = scale * ytr - 0.5 * scale * scale * rss;
        (primal - dual).max(0.0)
    }

    /// Largest violation of the LASSO stationarity conditions.
    pub fn kkt_violation(&self, alpha: &Vector, lambda: f64, weights: &Vector) -> f64 {
        let grad = self.gradient(alpha);
        alpha
            .iter()
            .zip(grad.iter())
            .zip(weights.iter())
            .map(|((a, g), w)| {
                let bound = lambda * w;
                if *a != 0.0 {
                    (g + bound * a.signum()).abs()
                } else {
                    (g.abs() - bound).max(0.0)
                }
            })
            .fold(0.0, f64::max)
    }
}

fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

fn check_inputs(p: usize, lambda: f64, weights: &Vector) -> Result<()> {
    if weights.len() != p {
        return Err(Error::Dimension(format!(
            "{} weights for {} columns",
            weights.len(),
            p
        )));
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidInput(format!(
            "lambda must be finite and >= 0, got {lambda}"
        )));
    }
    if weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
        return Err(Error::InvalidInput(
            "weights must be positive and finite".into(),
        ));
    }
    Ok(())
}

/// Weighted LASSO with default options; returns the coefficient vector.
pub fn lasso_solve(
    design: &Matrix,
    response: &Vector,
    lambda: f64,
    weights: &Vector,
) -> Result<Vector> {
    let problem = GramProblem::new(design, response)?;
    Ok(solve_gram(&problem, lambda, weights, &LassoOptions::default(), None)?.coefficients)
}

pub fn lasso_solve_with(
    design: &Matrix,
    response: &Vector,
    lambda: f64,
    weights: &Vector,
    options: &LassoOptions,
) -> Result<LassoSolution> {
    let problem = GramProblem::new(design, response)?;
    solve_gram(&problem, lambda, weights, options, None)
}

/// Coordinate descent on precomputed Gram statistics, optionally warm-started.
pub fn solve_gram(
    problem: &GramProblem,
    lambda: f64,
    weights: &Vector,
    options: &LassoOptions,
    warm_start: Option<&Vector>,
) -> Result<LassoSolution> {
    let p = problem.ncols();
    check_inputs(p, lambda, weights)?;
    let mut alpha = match warm_start {
        Some(a) if a.len() == p => a.clone(),
        _ => Vector::zeros(p),
    };
    let mut grad = problem.gradient(&alpha);
    let gap_tol = options.gap_tol * problem.yty.max(f64::MIN_POSITIVE);
    let all_penalized = weights.iter().all(|w| lambda * w > 0.0);

    let mut gap = f64::INFINITY;
    let mut kkt = f64::INFINITY;
    for sweep in 1..=options.max_sweeps {
        for j in 0..p {
            let gjj = problem.gram[(j, j)];
            if gjj <= 0.0 {
                continue;
            }
            let old = alpha[j];
            let new = soft_threshold(old - grad[j] / gjj, lambda * weights[j] / gjj);
            let delta = new - old;
            if delta != 0.0 {
                alpha[j] = new;
                grad.axpy(delta, &problem.gram.column(j), 1.0);
            }
        }
        // Refresh the gradient periodically to stop drift from incremental updates.
        if sweep % 64 == 0 {
            grad = problem.gradient(&alpha);
        }
        kkt = problem.kkt_violation(&alpha, lambda, weights);
        if kkt > options.kkt_tol {
            continue;
        }
        gap = if all_penalized {
            problem.duality_gap(&alpha, lambda, weights)
        } else {
            0.0
        };
        if gap <= gap_tol {
            return Ok(LassoSolution {
                coefficients: alpha,
                sweeps: sweep,
                duality_gap: gap,
                kkt_violation: kkt,
            });
        }
    }
    Err(Error::NoConvergence {
        sweeps: options.max_sweeps,
        gap,
        kkt,
    })
}

/// KKT violation of `coefficients` for the problem defined by `design`/`response`.
pub fn kkt_violation(
    design: &Matrix,
    response: &Vector,
    lambda: f64,
    weights: &Vector,
    coefficients: &Vector,
) -> Result<f64> {
    let problem = GramProblem::new(design, response)?;
    Ok(problem.kkt_violation(coefficients, lambda, weights))
}

/// Smallest λ for which the all-zero vector is optimal.
pub fn lambda_max(problem: &GramProblem, weights: &Vector) -> f64 {
    problem
        .xty
        .iter()
        .zip(weights.iter())
        .map(|(c, w)| c.abs() / w)
        .fold(0.0, f64::max)
}
