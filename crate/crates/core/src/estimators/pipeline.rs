use statrs::distribution::{ContinuousCDF, Normal};

use super::lambda::resolve_lambda;
use super::{Dataset, EstimatorConfig, Interval, Method, ProxyEstimate};
use crate::error::{Error, Result};
use crate::lasso::lasso_solve_with;
use crate::linalg::{hstack, median, select_columns, Matrix, Projector, Vector};

/// Treatment is degenerate when its residual norm falls below this fraction of `‖D‖²`.
const DEGENERATE_TREATMENT: f64 = 1e-12;

/// Per-dataset work shared by every OCP: covariates, the projector onto
/// `M = (Z, D, X)` and the outcome's reduced-form coefficients.
pub struct Prepared<'a> {
    pub data: &'a Dataset,
    pub config: &'a EstimatorConfig,
    /// Covariates including the intercept column when configured.
    pub xs: Matrix,
    m: Matrix,
    m_proj: Projector,
    gamma_full: Vector,
}

/// `Ŵ = P_M W_k` and the reduced-form coefficients of `Y` and `W_k` on `M = (Z, D, X)`.
#[derive(Debug, Clone)]
pub struct FirstStage {
    pub ocp_index: usize,
    pub what: Vector,
    /// Coefficients of `Y` on `M`, ordered `(Z, D, X)`.
    pub gamma_hat: Vector,
    /// Coefficients of `W_k` on `M`, ordered `(Z, D, X)`.
    pub delta_hat: Vector,
    pub p_z: usize,
}

impl FirstStage {
    pub fn tcp_gamma(&self) -> &[f64] {
        &self.gamma_hat.as_slice()[..self.p_z]
    }

    pub fn tcp_delta(&self) -> &[f64] {
        &self.delta_hat.as_slice()[..self.p_z]
    }
}

/// The penalized step after profiling out `β`, `γ` and the covariates:
/// design `P_{(D, X, Ŵ)⊥} Z` against the equally residualized outcome.
pub struct ReducedProblem {
    pub design: Matrix,
    pub response: Vector,
    base: Projector,
    z: Matrix,
    y: Vector,
}

impl ReducedProblem {
    pub fn new(prep: &Prepared<'_>, first: &FirstStage) -> Result<Self> {
        let data = prep.data;
        let wn = first.what.norm_squared();
        if !(wn > 0.0) {
            return Err(Error::InvalidInput(format!(
                "fitted OCP {} is identically zero",
                first.ocp_index
            )));
        }
        let d_tilde = &data.d - &first.what * (first.what.dot(&data.d) / wn);
        let dn = data.d.norm_squared();
        if d_tilde.norm_squared() < DEGENERATE_TREATMENT * dn {
            return Err(Error::DegenerateTreatment {
                norm_sq: d_tilde.norm_squared(),
            });
        }
        let base = Projector::new(&hstack(&[
            &Matrix::from_column_slice(data.n(), 1, data.d.as_slice()),
            &prep.xs,
            &Matrix::from_column_slice(data.n(), 1, first.what.as_slice()),
        ]))?;
        Ok(ReducedProblem {
            design: base.residual(&data.z),
            response: base.residual_vec(&data.y),
            base,
            z: data.z.clone(),
            y: data.y.clone(),
        })
    }

    /// Treatment coefficient once `Zα` is removed from the outcome.
    pub fn beta_given(&self, alpha: &Vector) -> f64 {
        let target = &self.y - &self.z * alpha;
        self.base.coefficients(&target)[0]
    }
}

impl<'a> Prepared<'a> {
    pub fn new(data: &'a Dataset, config: &'a EstimatorConfig) -> Result<Self> {
        let xs = data.covariates(config.intercept);
        let m = hstack(&[
            &data.z,
            &Matrix::from_column_slice(data.n(), 1, data.d.as_slice()),
            &xs,
        ]);
        let m_proj = Projector::new(&m)?;
        let gamma_full = m_proj.coefficients(&data.y);
        Ok(Prepared {
            data,
            config,
            xs,
            m,
            m_proj,
            gamma_full,
        })
    }

    pub fn first_stage(&self, ocp_index: usize) -> Result<FirstStage> {
        let p_w = self.data.p_w();
        if ocp_index >= p_w {
            return Err(Error::IndexOutOfRange {
                index: ocp_index,
                len: p_w,
            });
        }
        let w = self.data.w.column(ocp_index).into_owned();
        Ok(FirstStage {
            ocp_index,
            what: self.m_proj.project_vec(&w),
            gamma_hat: self.gamma_full.clone(),
            delta_hat: self.m_proj.coefficients(&w),
            p_z: self.data.p_z(),
        })
    }

    /// Table-1 pipeline for one OCP: median ratio, adaptive LASSO, post-selection 2SLS.
    pub fn estimate_adaptive(&self, ocp_index: usize) -> Result<ProxyEstimate> {
        let first = self.first_stage(ocp_index)?;
        let reduced = ReducedProblem::new(self, &first)?;
        let fit = self.adaptive_fit(&first, &reduced, None)?;
        let mut est = self.second_stage(
            &first.what,
            &fit.selected,
            Method::AdaptiveProximal,
            Some(ocp_index),
        )?;
        est.weak_tcps = weak_tcps(&first, self.config);
        Ok(est)
    }

    pub fn adaptive_fit(
        &self,
        first: &FirstStage,
        reduced: &ReducedProblem,
        lambda: Option<f64>,
    ) -> Result<AdaptiveFit> {
        let gamma_m = median_gamma(first, self.config)?;
        let alpha_m = alpha_median(first, gamma_m);
        let scale = sample_sd(&reduced.response);
        let weights = adaptive_weights(&alpha_m, scale, self.config.adaptive_floor);
        let lambda = match lambda {
            Some(l) => l,
            None => resolve_lambda(&self.config.adaptive_lambda, reduced, &weights, self.config)?,
        };
        let solution = lasso_solve_with(
            &reduced.design,
            &reduced.response,
            lambda,
            &weights,
            &self.config.lasso,
        )?;
        let alpha_ad = solution.coefficients;
        let selected = (0..alpha_ad.len())
            .filter(|&j| alpha_ad[j] != 0.0)
            .collect();
        Ok(AdaptiveFit {
            alpha_ad,
            selected,
            alpha_m,
            gamma_m,
            lambda,
        })
    }

    /// Post-selection 2SLS of `Y` on `(D, Z_selected, Ŵ, X)` with the plug-in
    /// asymptotic variance and normal interval.
    pub fn second_stage(
        &self,
        what: &Vector,
        selected: &[usize],
        method: Method,
        ocp_index: Option<usize>,
    ) -> Result<ProxyEstimate> {
        let data = self.data;
        let n = data.n();
        let p_z = data.p_z();
        if let Some(&bad) = selected.iter().find(|&&j| j >= p_z) {
            return Err(Error::IndexOutOfRange {
                index: bad,
                len: p_z,
            });
        }
        let d_col = Matrix::from_column_slice(n, 1, data.d.as_slice());
        let n_hat = hstack(&[
            &select_columns(&data.z, selected),
            &Matrix::from_column_slice(n, 1, what.as_slice()),
            &self.xs,
        ]);
        let full = Projector::new(&hstack(&[&d_col, &n_hat]))?;
        let n_proj = Projector::new(&n_hat)?;

        let d_perp = n_proj.residual_vec(&data.d);
        let denom = data.d.dot(&d_perp);
        if !(denom > DEGENERATE_TREATMENT * data.d.norm_squared()) {
            return Err(Error::DegenerateTreatment { norm_sq: denom });
        }
        let beta = d_perp.dot(&data.y) / denom;

        let coef = full.coefficients(&data.y);
        let nuisance = coef.rows(1, coef.len() - 1).into_owned();
        let resid = &data.y - &data.d * beta - &n_hat * &nuisance;
        let sigma2_eps = resid.norm_squared() / n as f64;
        let variance = oracle_variance(&data.d, &n_hat, &self.m, sigma2_eps)?;

        let s = selected.len();
        let mut alpha_hat = vec![0.0; p_z];
        for (k, &j) in selected.iter().enumerate() {
            alpha_hat[j] = nuisance[k];
        }
        let std_error = (variance / n as f64).sqrt();
        Ok(ProxyEstimate {
            method,
            beta_hat: beta,
            gamma_hat: Some(nuisance[s]),
            alpha_hat,
            selected_invalid_tcps: selected.to_vec(),
            variance: Some(variance),
            std_error: Some(std_error),
            ci: Some(normal_interval(beta, std_error, self.config.alpha_level)),
            ocp_index,
            per_ocp_estimates: None,
            weak_tcps: Vec::new(),
        })
    }
}

/// Outcome of the adaptive-LASSO selection step.
#[derive(Debug, Clone)]
pub struct AdaptiveFit {
    pub alpha_ad: Vector,
    pub selected: Vec<usize>,
    pub alpha_m: Vector,
    pub gamma_m: f64,
    pub lambda: f64,
}

/// Sample moments of the oracle asymptotic variance, evaluated term by term.
///
/// With `a = E(D N̂ᵀ)`, `S_NN = E(N̂ N̂ᵀ)`, `S_NM = E(N̂ Mᵀ)`, `S_MM = E(M Mᵀ)`, `b = E(M D)`
/// and `Q = a S_NN⁻¹ S_NM S_MM⁻¹ S_MN S_NN⁻¹ aᵀ`:
/// `σ² = σ²_ε [E D² − Q]⁻² (E D² + Q − 2 a S_NN⁻¹ S_NM S_MM⁻¹ b)`.
pub(crate) fn oracle_variance(
    d: &Vector,
    n_hat: &Matrix,
    m: &Matrix,
    sigma2_eps: f64,
) -> Result<f64> {
    let nf = d.len() as f64;
    let a = n_hat.tr_mul(d) / nf;
    let s_nn = n_hat.tr_mul(n_hat) / nf;
    let s_nm = n_hat.tr_mul(m) / nf;
    let s_mm = m.tr_mul(m) / nf;
    let b = m.tr_mul(d) / nf;
    let ed2 = d.norm_squared() / nf;

    let chol = |s: Matrix| {
        let k = s.ncols();
        s.cholesky().ok_or(Error::RankDeficient {
            columns: k,
            ratio: 0.0,
            tol: crate::linalg::DEFAULT_RANK_TOL,
        })
    };
    let u = chol(s_nn)?.solve(&a);
    let v = s_nm.tr_mul(&u);
    let s_mm = chol(s_mm)?;
    let q = v.dot(&s_mm.solve(&v));
    let cross = v.dot(&s_mm.solve(&b));
    let bracket = ed2 - q;
    if !(bracket > 0.0) {
        return Err(Error::DegenerateTreatment {
            norm_sq: bracket * nf,
        });
    }
    Ok(sigma2_eps * (ed2 + q - 2.0 * cross) / (bracket * bracket))
}

pub(crate) fn normal_interval(center: f64, std_error: f64, alpha_level: f64) -> Interval {
    let z = Normal::new(0.0, 1.0)
        .expect("standard normal")
        .inverse_cdf(1.0 - alpha_level / 2.0);
    Interval {
        lower: center - z * std_error,
        upper: center + z * std_error,
    }
}

pub(crate) fn sample_sd(v: &Vector) -> f64 {
    let n = v.len() as f64;
    if n < 2.0 {
        return 0.0;
    }
    let mean = v.mean();
    (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Median over TCPs of `Γ̂_j / δ̂_j`.
pub fn median_gamma(first: &FirstStage, config: &EstimatorConfig) -> Result<f64> {
    let delta = first.tcp_delta();
    let gamma = first.tcp_gamma();
    let floor_violations: Vec<usize> = (0..delta.len())
        .filter(|&j| !(delta[j].abs() > config.delta_floor))
        .collect();
    if !floor_violations.is_empty() {
        return Err(Error::AssumptionViolation {
            message: format!(
                "reduced-form OCP coefficients at or below {:e}",
                config.delta_floor
            ),
            indices: floor_violations,
        });
    }
    let weak = weak_tcps(first, config);
    if !weak.is_empty() {
        log::debug!("weak reduced-form OCP coefficients for TCPs {weak:?}");
    }
    let ratios: Vec<f64> = gamma.iter().zip(delta).map(|(g, d)| g / d).collect();
    Ok(median(&ratios))
}

/// TCPs with `|δ̂_j| < weak_tol · median |δ̂|`; their ratios `Γ̂_j / δ̂_j` are unstable.
pub fn weak_tcps(first: &FirstStage, config: &EstimatorConfig) -> Vec<usize> {
    let abs: Vec<f64> = first.tcp_delta().iter().map(|v| v.abs()).collect();
    let cutoff = config.weak_tol * median(&abs);
    (0..abs.len()).filter(|&j| abs[j] < cutoff).collect()
}

/// `Γ̂_Z − γ_m δ̂_Z`.
pub fn alpha_median(first: &FirstStage, gamma_m: f64) -> Vector {
    Vector::from_iterator(
        first.p_z,
        first
            .tcp_gamma()
            .iter()
            .zip(first.tcp_delta())
            .map(|(g, d)| g - gamma_m * d),
    )
}

/// Penalty weights `scale / |α̂ᵐ_j|`; estimates below `floor · scale` get weight `1 / floor`.
///
/// The pipeline uses the SD of the reduced-problem response as `scale`, so
/// weights are free of the units of `Y`.
pub fn adaptive_weights(alpha_m: &Vector, scale: f64, floor: f64) -> Vector {
    let scale = if scale > 0.0 { scale } else { 1.0 };
    alpha_m.map(|a| {
        let r = a.abs() / scale;
        if r < floor {
            1.0 / floor
        } else {
            1.0 / r
        }
    })
}

/// Plain-LASSO two-step estimator for OCP `ocp_index` at penalty `lambda`.
pub fn lasso_proximal(
    data: &Dataset,
    ocp_index: usize,
    lambda: f64,
    config: &EstimatorConfig,
) -> Result<(Vector, f64)> {
    let prep = Prepared::new(data, config)?;
    let first = prep.first_stage(ocp_index)?;
    let reduced = ReducedProblem::new(&prep, &first)?;
    let ones = Vector::from_element(data.p_z(), 1.0);
    let alpha = lasso_solve_with(
        &reduced.design,
        &reduced.response,
        lambda,
        &ones,
        &config.lasso,
    )?
    .coefficients;
    let beta = reduced.beta_given(&alpha);
    Ok((alpha, beta))
}

/// Adaptive LASSO on the reduced problem, weighted by the median-ratio initial estimate.
pub fn adaptive_lasso_proximal(
    data: &Dataset,
    ocp_index: usize,
    lambda_n: f64,
    config: &EstimatorConfig,
) -> Result<AdaptiveFit> {
    let prep = Prepared::new(data, config)?;
    let first = prep.first_stage(ocp_index)?;
    let reduced = ReducedProblem::new(&prep, &first)?;
    prep.adaptive_fit(&first, &reduced, Some(lambda_n))
}

/// Post-selection 2SLS treating `selected_set` as invalid TCPs.
pub fn post_adaptive_2sls(
    data: &Dataset,
    ocp_index: usize,
    selected_set: &[usize],
    config: &EstimatorConfig,
) -> Result<ProxyEstimate> {
    let prep = Prepared::new(data, config)?;
    let first = prep.first_stage(ocp_index)?;
    prep.second_stage(
        &first.what,
        selected_set,
        Method::AdaptiveProximal,
        Some(ocp_index),
    )
}

/// 2SLS with the true invalid set adjusted for.
pub fn oracle_p2sls(
    data: &Dataset,
    ocp_index: usize,
    true_invalid_set: &[usize],
    config: &EstimatorConfig,
) -> Result<ProxyEstimate> {
    let prep = Prepared::new(data, config)?;
    let first = prep.first_stage(ocp_index)?;
    prep.second_stage(
        &first.what,
        true_invalid_set,
        Method::Oracle,
        Some(ocp_index),
    )
}

/// Proximal 2SLS treating every TCP as valid.
pub fn naive_p2sls(
    data: &Dataset,
    ocp_index: usize,
    config: &EstimatorConfig,
) -> Result<ProxyEstimate> {
    let prep = Prepared::new(data, config)?;
    let first = prep.first_stage(ocp_index)?;
    prep.second_stage(&first.what, &[], Method::Naive, Some(ocp_index))
}

/// OLS of `Y` on `(D, X)`, ignoring all proxies, with the classical standard error.
pub fn ols_baseline(data: &Dataset, config: &EstimatorConfig) -> Result<ProxyEstimate> {
    let n = data.n();
    let xs = data.covariates(config.intercept);
    let design = hstack(&[&Matrix::from_column_slice(n, 1, data.d.as_slice()), &xs]);
    let proj = Projector::new(&design)?;
    let coef = proj.coefficients(&data.y);
    let resid = proj.residual_vec(&data.y);
    let dof = n - design.ncols();
    let s2 = resid.norm_squared() / dof as f64;
    let d_perp = Projector::new(&xs)?.residual_vec(&data.d);
    let std_error = (s2 / d_perp.norm_squared()).sqrt();
    Ok(ProxyEstimate {
        method: Method::Ols,
        beta_hat: coef[0],
        gamma_hat: None,
        alpha_hat: vec![0.0; data.p_z()],
        selected_invalid_tcps: Vec::new(),
        variance: Some(std_error * std_error * n as f64),
        std_error: Some(std_error),
        ci: Some(normal_interval(coef[0], std_error, config.alpha_level)),
        ocp_index: None,
        per_ocp_estimates: None,
        weak_tcps: Vec::new(),
    })
}

/// Adaptive pipeline with one designated OCP.
pub fn estimate_invalid_tcp(
    data: &Dataset,
    ocp_index: usize,
    config: &EstimatorConfig,
) -> Result<ProxyEstimate> {
    Prepared::new(data, config)?.estimate_adaptive(ocp_index)
}

/// Per-OCP adaptive estimates of one dataset.
pub struct OcpFits {
    pub fits: Vec<Result<ProxyEstimate>>,
}

impl OcpFits {
    pub fn run(data: &Dataset, config: &EstimatorConfig) -> Result<Self> {
        let prep = Prepared::new(data, config)?;
        Ok(OcpFits {
            fits: (0..data.p_w()).map(|k| prep.estimate_adaptive(k)).collect(),
        })
    }

    pub fn betas(&self) -> Vec<Option<f64>> {
        self.fits
            .iter()
            .map(|f| f.as_ref().ok().map(|e| e.beta_hat))
            .collect()
    }
}

/// Median of the successful per-OCP estimates, if enough of them succeeded.
///
/// At least `min(p_w, ⌈p_w/2⌉ + 1)` runs must succeed.
pub fn median_over_ocps(estimates: &[Option<f64>]) -> Result<f64> {
    let total = estimates.len();
    let ok: Vec<f64> = estimates.iter().flatten().copied().collect();
    let required = total.min(total.div_ceil(2) + 1);
    if ok.len() < required || ok.is_empty() {
        return Err(Error::AggregateFailure {
            succeeded: ok.len(),
            total,
            required,
        });
    }
    Ok(median(&ok))
}

/// Median of the adaptive estimates over every OCP column.
///
/// The reported selection, `α̂` and `γ̂` are those of the per-OCP run closest
/// to the median. No closed-form interval is attached.
pub fn estimate_invalid_tcp_ocp(data: &Dataset, config: &EstimatorConfig) -> Result<ProxyEstimate> {
    let fits = OcpFits::run(data, config)?;
    for (k, fit) in fits.fits.iter().enumerate() {
        if let Err(e) = fit {
            log::debug!("OCP {k} failed: {e}");
        }
    }
    let betas = fits.betas();
    let beta = median_over_ocps(&betas)?;
    let representative = fits
        .fits
        .iter()
        .flatten()
        .min_by(|a, b| {
            (a.beta_hat - beta)
                .abs()
                .total_cmp(&(b.beta_hat - beta).abs())
        })
        .expect("at least one OCP succeeded");
    Ok(ProxyEstimate {
        method: Method::MedianOcp,
        beta_hat: beta,
        gamma_hat: representative.gamma_hat,
        alpha_hat: representative.alpha_hat.clone(),
        selected_invalid_tcps: representative.selected_invalid_tcps.clone(),
        variance: None,
        std_error: None,
        ci: None,
        ocp_index: None,
        per_ocp_estimates: Some(betas),
        weak_tcps: representative.weak_tcps.clone(),
    })
}
