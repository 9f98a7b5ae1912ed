use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dgp::{generate_invalid_tcp_ocp_data, SimConfig};
use crate::error::{Error, Result};
use crate::estimators::{
    estimate_invalid_tcp, estimate_invalid_tcp_ocp, naive_p2sls, ols_baseline, oracle_p2sls,
    subsample_ci, EstimatorConfig, Interval, Method, SubsampleOptions,
};
use crate::rng::derive_seed;

/// Largest tolerated share of failed replications per method.
pub const MAX_FAILED_REPLICATIONS: f64 = 0.1;

/// Estimator settings for a Monte Carlo run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McOptions {
    pub estimator: EstimatorConfig,
    /// Subsampling interval for the median-over-OCPs method; no interval when absent.
    /// The seed field is ignored: replication `r` uses a seed derived from the
    /// run seed and `r`.
    pub subsample: Option<SubsampleOptions>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub succeeded: usize,
    pub failed: usize,
    /// Share of intervals covering the true effect; absent when no intervals were produced.
    pub coverage: Option<f64>,
    pub ci_length: Option<f64>,
    pub bias: f64,
    /// Standard deviation of the estimates (denominator `reps − 1`); absent for a single replication.
    pub se: Option<f64>,
    pub rmse: f64,
    /// Share of replications selecting exactly the true invalid TCP set.
    pub exact_selection: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub config: SimConfig,
    pub reps: usize,
    pub failed_runs: usize,
    pub se_undefined: bool,
    pub methods: Vec<MethodSummary>,
}

impl MonteCarloReport {
    pub fn method(&self, method: Method) -> Option<&MethodSummary> {
        self.methods.iter().find(|m| m.method == method)
    }
}

#[derive(Debug, Clone)]
struct Draw {
    beta: f64,
    ci: Option<Interval>,
    selected: Option<Vec<usize>>,
}

fn run_method(
    method: Method,
    data: &crate::estimators::Dataset,
    config: &SimConfig,
    options: &McOptions,
    rep: u64,
) -> Result<Draw> {
    let est = &options.estimator;
    let valid_ocp = config.first_valid_ocp().unwrap_or(0);
    let truth = config.invalid_tcps();
    let full = |e: crate::estimators::ProxyEstimate| Draw {
        beta: e.beta_hat,
        ci: e.ci,
        selected: Some(e.selected_invalid_tcps),
    };
    match method {
        Method::AdaptiveProximal => estimate_invalid_tcp(data, valid_ocp, est).map(full),
        Method::Oracle => oracle_p2sls(data, valid_ocp, &truth, est).map(full),
        Method::Naive => naive_p2sls(data, 0, est).map(|e| Draw {
            selected: None,
            ..full(e)
        }),
        Method::Ols => ols_baseline(data, est).map(|e| Draw {
            selected: None,
            ..full(e)
        }),
        Method::MedianOcp => {
            let e = estimate_invalid_tcp_ocp(data, est)?;
            let ci = match &options.subsample {
                Some(sub) => {
                    let sub = SubsampleOptions {
                        seed: derive_seed(config.seed, rep),
                        ..*sub
                    };
                    Some(
                        subsample_ci(data, &sub, |d| {
                            estimate_invalid_tcp_ocp(d, est).map(|e| e.beta_hat)
                        })?
                        .interval,
                    )
                }
                None => None,
            };
            Ok(Draw {
                beta: e.beta_hat,
                ci,
                selected: Some(e.selected_invalid_tcps),
            })
        }
        Method::LassoProximal => Err(Error::InvalidInput(
            "lasso_proximal needs an explicit penalty and is not part of Monte Carlo runs".into(),
        )),
    }
}

/// Run `config.reps` replications of every method and summarize against `config.beta_true`.
///
/// Replication `r` draws its data from stream `r` of `config.seed`, and
/// summaries are reduced in replication order, so the report does not depend
/// on the number of worker threads.
pub fn run_monte_carlo(
    config: &SimConfig,
    methods: &[Method],
    options: &McOptions,
) -> Result<MonteCarloReport> {
    config.validate()?;
    if methods.is_empty() {
        return Err(Error::InvalidInput("no methods requested".into()));
    }
    let per_rep: Vec<Result<Vec<Result<Draw>>>> = (0..config.reps as u64)
        .into_par_iter()
        .map(|rep| {
            let draw = generate_invalid_tcp_ocp_data(config, rep)?;
            Ok(methods
                .iter()
                .map(|&m| run_method(m, &draw.data, config, options, rep))
                .collect())
        })
        .collect();

    let mut failed_runs = 0;
    let mut columns: Vec<Vec<Option<Draw>>> = vec![Vec::with_capacity(config.reps); methods.len()];
    for rep in per_rep {
        match rep {
            Ok(draws) => {
                for (m, d) in draws.into_iter().enumerate() {
                    if d.is_err() {
                        failed_runs += 1;
                    }
                    columns[m].push(d.ok());
                }
            }
            Err(_) => {
                failed_runs += methods.len();
                for col in columns.iter_mut() {
                    col.push(None);
                }
            }
        }
    }

    let truth = config.invalid_tcps();
    let mut summaries = Vec::with_capacity(methods.len());
    for (&method, col) in methods.iter().zip(&columns) {
        let ok: Vec<&Draw> = col.iter().flatten().collect();
        let failed = col.len() - ok.len();
        if failed as f64 > MAX_FAILED_REPLICATIONS * col.len() as f64 || ok.is_empty() {
            return Err(Error::ReplicationFailure {
                method: method.to_string(),
                failed,
                total: col.len(),
            });
        }
        summaries.push(summarize(method, &ok, failed, config.beta_true, &truth));
    }
    Ok(MonteCarloReport {
        config: config.clone(),
        reps: config.reps,
        failed_runs,
        se_undefined: config.reps < 2,
        methods: summaries,
    })
}

fn summarize(
    method: Method,
    draws: &[&Draw],
    failed: usize,
    beta: f64,
    truth: &[usize],
) -> MethodSummary {
    let r = draws.len() as f64;
    let mean = draws.iter().map(|d| d.beta).sum::<f64>() / r;
    let mse = draws.iter().map(|d| (d.beta - beta).powi(2)).sum::<f64>() / r;
    let se = (draws.len() > 1)
        .then(|| (draws.iter().map(|d| (d.beta - mean).powi(2)).sum::<f64>() / (r - 1.0)).sqrt());
    let intervals: Vec<Interval> = draws.iter().filter_map(|d| d.ci).collect();
    let (coverage, ci_length) = if intervals.len() == draws.len() {
        let k = intervals.len() as f64;
        (
            Some(intervals.iter().filter(|ci| ci.contains(beta)).count() as f64 / k),
            Some(intervals.iter().map(Interval::length).sum::<f64>() / k),
        )
    } else {
        (None, None)
    };
    let exact_selection = draws.iter().all(|d| d.selected.is_some()).then(|| {
        draws
            .iter()
            .filter(|d| d.selected.as_deref() == Some(truth))
            .count() as f64
            / r
    });
    MethodSummary {
        method,
        succeeded: draws.len(),
        failed,
        coverage,
        ci_length,
        bias: mean - beta,
        se,
        rmse: mse.sqrt(),
        exact_selection,
    }
}
