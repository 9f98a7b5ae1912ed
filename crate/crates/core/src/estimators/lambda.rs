use super::pipeline::{sample_sd, Prepared, ReducedProblem};
use super::{Dataset, EstimatorConfig, LambdaRule};
use crate::error::{Error, Result};
use crate::lasso::{lambda_max, solve_gram, GramProblem};
use crate::linalg::{Matrix, Vector};

/// Smallest grid value as a fraction of `λ_max`.
const GRID_DEPTH: f64 = 1e-3;

/// `scale · √n / ln n`. The default scale is the SD of the reduced-problem
/// response, which carries neither `βD` nor the covariate signal.
pub fn rate_lambda(n: usize, scale: f64) -> f64 {
    let n = n as f64;
    scale * n.sqrt() / n.ln()
}

/// Penalty level for the plain (unit-weight) LASSO step of OCP `ocp_index`.
pub fn select_lambda(
    data: &Dataset,
    ocp_index: usize,
    rule: &LambdaRule,
    config: &EstimatorConfig,
) -> Result<f64> {
    let prep = Prepared::new(data, config)?;
    let first = prep.first_stage(ocp_index)?;
    let reduced = ReducedProblem::new(&prep, &first)?;
    let ones = Vector::from_element(data.p_z(), 1.0);
    resolve_lambda(rule, &reduced, &ones, config)
}

pub(crate) fn resolve_lambda(
    rule: &LambdaRule,
    reduced: &ReducedProblem,
    weights: &Vector,
    config: &EstimatorConfig,
) -> Result<f64> {
    match *rule {
        LambdaRule::Fixed { value } => {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "lambda must be finite and >= 0, got {value}"
                )));
            }
            Ok(value)
        }
        LambdaRule::Rate { scale } => Ok(rate_lambda(
            reduced.response.len(),
            scale.unwrap_or_else(|| sample_sd(&reduced.response)),
        )),
        LambdaRule::Cv { folds, grid_points } => cv_lambda(
            &reduced.design,
            &reduced.response,
            weights,
            folds,
            grid_points,
            config,
        ),
    }
}

/// K-fold cross-validation (fold = row index mod K) over a log grid from
/// `λ_max` down to `GRID_DEPTH · λ_max`; ties go to the larger penalty.
pub(crate) fn cv_lambda(
    design: &Matrix,
    response: &Vector,
    weights: &Vector,
    folds: usize,
    grid_points: usize,
    config: &EstimatorConfig,
) -> Result<f64> {
    let n = design.nrows();
    if folds < 2 || n < 2 * folds {
        return Err(Error::InvalidInput(format!(
            "cv needs at least 2 folds and 2 rows per fold (n = {n}, folds = {folds})"
        )));
    }
    if grid_points < 2 {
        return Err(Error::InvalidInput(
            "cv grid needs at least 2 points".into(),
        ));
    }
    let full = GramProblem::new(design, response)?;
    let top = lambda_max(&full, weights);
    if top <= 0.0 {
        return Ok(0.0);
    }
    let grid: Vec<f64> = (0..grid_points)
        .map(|i| top * GRID_DEPTH.powf(i as f64 / (grid_points - 1) as f64))
        .collect();

    let mut errors = vec![0.0; grid_points];
    for fold in 0..folds {
        let test: Vec<usize> = (fold..n).step_by(folds).collect();
        let xt = Matrix::from_fn(test.len(), design.ncols(), |i, j| design[(test[i], j)]);
        let yt = Vector::from_iterator(test.len(), test.iter().map(|&i| response[i]));
        let train = GramProblem {
            gram: &full.gram - xt.tr_mul(&xt),
            xty: &full.xty - xt.tr_mul(&yt),
            yty: full.yty - yt.norm_squared(),
        };
        let mut warm: Option<Vector> = None;
        for (g, &lambda) in grid.iter().enumerate() {
            let sol = solve_gram(&train, lambda, weights, &config.lasso, warm.as_ref())?;
            errors[g] += (&yt - &xt * &sol.coefficients).norm_squared();
            warm = Some(sol.coefficients);
        }
    }
    let mut best = 0;
    for g in 1..grid_points {
        if errors[g] < errors[best] {
            best = g;
        }
    }
    Ok(grid[best])
}
