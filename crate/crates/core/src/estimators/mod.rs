//! Causal-effect estimators for a treatment confounded by a hidden variable
//! observed only through proxies.
//!
//! Candidate treatment-inducing proxies (TCPs, `Z`) may have a direct effect on
//! the outcome; candidate outcome-inducing proxies (OCPs, `W`) may be affected
//! by the treatment. The main entry points are
//!
//! * [`estimate_invalid_tcp`] — one OCP assumed valid; invalid TCPs are selected
//!   by an adaptive LASSO seeded with a median-ratio estimate, then β is
//!   estimated by two-stage least squares with a closed-form interval;
//! * [`estimate_invalid_tcp_ocp`] — the median of the above across OCPs, with
//!   intervals from [`subsample_ci`];
//! * baselines [`oracle_p2sls`], [`naive_p2sls`] and [`ols_baseline`].

mod dataset;
mod lambda;
mod pipeline;
mod rotation;
mod subsample;

use serde::{Deserialize, Serialize};

use crate::lasso::LassoOptions;

pub use dataset::{ColumnNames, Dataset};
pub use lambda::{rate_lambda, select_lambda};
pub use pipeline::{
    adaptive_lasso_proximal, adaptive_weights, alpha_median, estimate_invalid_tcp,
    estimate_invalid_tcp_ocp, lasso_proximal, median_gamma, median_over_ocps, naive_p2sls,
    ols_baseline, oracle_p2sls, post_adaptive_2sls, weak_tcps, AdaptiveFit, FirstStage, OcpFits,
    Prepared, ReducedProblem,
};
pub use rotation::{rotate_proxies, RotationResult, RotationRow};
pub use subsample::{default_subsample_size, subsample_ci, SubsampleCi, SubsampleOptions};

/// How a penalty level is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum LambdaRule {
    Fixed {
        value: f64,
    },
    /// `c·√n / ln n` with `c = scale` or, if absent, the sample SD of the
    /// reduced-problem response `P_{(D, X, Ŵ)⊥} Y`.
    Rate {
        #[serde(default)]
        scale: Option<f64>,
    },
    /// K-fold cross-validation over a logarithmic grid below `λ_max`.
    Cv {
        #[serde(default = "default_folds")]
        folds: usize,
        #[serde(default = "default_grid")]
        grid_points: usize,
    },
}

fn default_folds() -> usize {
    10
}

fn default_grid() -> usize {
    50
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorConfig {
    /// Append a column of ones to the covariate block.
    pub intercept: bool,
    /// Nominal miscoverage of confidence intervals.
    pub alpha_level: f64,
    pub adaptive_lambda: LambdaRule,
    pub lasso_lambda: LambdaRule,
    /// Reduced-form OCP coefficients at or below this magnitude are rejected.
    pub delta_floor: f64,
    /// Warn when `|δ̂_j|` falls below this fraction of `median |δ̂|`.
    pub weak_tol: f64,
    /// Initial estimates below this (relative to the reduced response SD) get weight `1 / adaptive_floor`.
    pub adaptive_floor: f64,
    pub lasso: LassoOptions,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            intercept: true,
            alpha_level: 0.05,
            adaptive_lambda: LambdaRule::Rate { scale: None },
            lasso_lambda: LambdaRule::Cv {
                folds: default_folds(),
                grid_points: default_grid(),
            },
            delta_floor: 1e-10,
            weak_tol: 0.05,
            adaptive_floor: 1e-8,
            lasso: LassoOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    AdaptiveProximal,
    LassoProximal,
    Oracle,
    Naive,
    Ols,
    MedianOcp,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::AdaptiveProximal => "adaptive_proximal",
            Method::LassoProximal => "lasso_proximal",
            Method::Oracle => "oracle",
            Method::Naive => "naive",
            Method::Ols => "ols",
            Method::MedianOcp => "median_ocp",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn contains(&self, value: f64) -> bool {
        self.lower <= value && value <= self.upper
    }

    pub fn length(&self) -> f64 {
        self.upper - self.lower
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProxyEstimate {
    pub method: Method,
    pub beta_hat: f64,
    pub gamma_hat: Option<f64>,
    /// Length `p_z`; zero outside the selected set.
    pub alpha_hat: Vec<f64>,
    pub selected_invalid_tcps: Vec<usize>,
    /// Asymptotic variance of `√n (β̂ − β)`.
    pub variance: Option<f64>,
    pub std_error: Option<f64>,
    pub ci: Option<Interval>,
    pub ocp_index: Option<usize>,
    /// One entry per OCP for the median aggregate; `None` marks a failed run.
    pub per_ocp_estimates: Option<Vec<Option<f64>>>,
    /// TCPs whose reduced-form OCP coefficient is weak relative to the others.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub weak_tcps: Vec<usize>,
}
