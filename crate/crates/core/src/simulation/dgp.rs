use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::Dataset;
use crate::linalg::{Matrix, Vector};
use crate::rng::stream_rng;

/// Parameters of the linear proxy model
///
/// ```text
/// U    ~ N(0, u_var)
/// Z_j  = c + U + e_z                       e_z ~ N(0, z_noise_var)
/// D    = c + κ_d U + Σ ξ_j Z_j + e_d       e_d ~ N(0, d_noise_var)
/// W_k  = c + U + ξ^w_k D + e_w             e_w ~ N(0, w_noise_var)
/// Y    = c + β D + κ_y U + Σ α_j Z_j + e_y e_y ~ N(0, y_noise_var)
/// ```
///
/// The first `s_z` TCPs have `α_j = alpha_invalid` and strength `xi_z_invalid`,
/// the rest `α_j = 0` and `xi_z_valid`; the first `s_w` OCPs load on `D` with
/// `xi_w_invalid`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub n: usize,
    pub p_z: usize,
    pub p_w: usize,
    pub s_z: usize,
    pub s_w: usize,
    pub beta_true: f64,
    pub alpha_invalid: f64,
    pub xi_z_invalid: f64,
    pub xi_z_valid: f64,
    pub xi_w_invalid: f64,
    pub u_var: f64,
    pub z_noise_var: f64,
    pub w_noise_var: f64,
    pub d_noise_var: f64,
    pub y_noise_var: f64,
    pub intercept: f64,
    pub confounder_d: f64,
    pub confounder_y: f64,
    pub reps: usize,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n: 2500,
            p_z: 10,
            p_w: 1,
            s_z: 3,
            s_w: 0,
            beta_true: 0.5,
            alpha_invalid: 0.8,
            xi_z_invalid: 0.6,
            xi_z_valid: 0.2,
            xi_w_invalid: 0.8,
            u_var: 0.25,
            z_noise_var: 0.25,
            w_noise_var: 0.25,
            d_noise_var: 1.0,
            y_noise_var: 1.0,
            intercept: 0.25,
            confounder_d: 0.2,
            confounder_y: 0.2,
            reps: 200,
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, msg: String| Err(Error::config(key, msg));
        if self.p_z == 0 {
            return bad("p_z", "need at least one TCP".into());
        }
        if self.p_w == 0 {
            return bad("p_w", "need at least one OCP".into());
        }
        if self.s_z > self.p_z {
            return bad(
                "s_z",
                format!("s_z = {} exceeds p_z = {}", self.s_z, self.p_z),
            );
        }
        if self.s_w > self.p_w {
            return bad(
                "s_w",
                format!("s_w = {} exceeds p_w = {}", self.s_w, self.p_w),
            );
        }
        if self.n <= self.p_z + self.p_w + 2 {
            return bad(
                "n",
                format!(
                    "n = {} too small for {} proxies",
                    self.n,
                    self.p_z + self.p_w
                ),
            );
        }
        if self.reps == 0 {
            return bad("reps", "need at least one replication".into());
        }
        if !(self.u_var > 0.0 && self.u_var.is_finite()) {
            return bad("u_var", format!("must be positive, got {}", self.u_var));
        }
        for (key, v) in [
            ("z_noise_var", self.z_noise_var),
            ("w_noise_var", self.w_noise_var),
            ("d_noise_var", self.d_noise_var),
            ("y_noise_var", self.y_noise_var),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(key, format!("must be nonnegative, got {v}"));
            }
        }
        let coefs = [
            ("beta_true", self.beta_true),
            ("alpha_invalid", self.alpha_invalid),
            ("xi_z_invalid", self.xi_z_invalid),
            ("xi_z_valid", self.xi_z_valid),
            ("xi_w_invalid", self.xi_w_invalid),
            ("intercept", self.intercept),
            ("confounder_d", self.confounder_d),
            ("confounder_y", self.confounder_y),
        ];
        for (key, v) in coefs {
            if !v.is_finite() {
                return bad(key, "must be finite".into());
            }
        }
        Ok(())
    }

    pub fn alpha(&self) -> Vec<f64> {
        (0..self.p_z)
            .map(|j| {
                if j < self.s_z {
                    self.alpha_invalid
                } else {
                    0.0
                }
            })
            .collect()
    }

    pub fn xi_z(&self) -> Vec<f64> {
        (0..self.p_z)
            .map(|j| {
                if j < self.s_z {
                    self.xi_z_invalid
                } else {
                    self.xi_z_valid
                }
            })
            .collect()
    }

    pub fn xi_w(&self) -> Vec<f64> {
        (0..self.p_w)
            .map(|k| if k < self.s_w { self.xi_w_invalid } else { 0.0 })
            .collect()
    }

    /// Zero-based indices of the invalid TCPs.
    pub fn invalid_tcps(&self) -> Vec<usize> {
        (0..self.s_z).collect()
    }

    /// First OCP that does not load on the treatment, if any.
    pub fn first_valid_ocp(&self) -> Option<usize> {
        (self.s_w < self.p_w).then_some(self.s_w)
    }
}

/// A generated dataset together with the hidden confounder.
#[derive(Debug, Clone)]
pub struct SimDraw {
    pub data: Dataset,
    pub u: Vector,
}

/// Single valid OCP; requires `p_w = 1` and `s_w = 0`.
pub fn generate_invalid_tcp_data(config: &SimConfig, rep_index: u64) -> Result<SimDraw> {
    if config.p_w != 1 || config.s_w != 0 {
        return Err(Error::InvalidInput(format!(
            "single-OCP generator needs p_w = 1, s_w = 0 (got {}, {})",
            config.p_w, config.s_w
        )));
    }
    generate_invalid_tcp_ocp_data(config, rep_index)
}

/// Draws are taken in the order U, Z noise (row-major), D noise, Y noise,
/// W noise (row-major) from stream `rep_index` of `config.seed`.
pub fn generate_invalid_tcp_ocp_data(config: &SimConfig, rep_index: u64) -> Result<SimDraw> {
    config.validate()?;
    let n = config.n;
    let mut rng = stream_rng(config.seed, rep_index);
    let mut normal = |var: f64| -> f64 {
        let e: f64 = rng.sample(StandardNormal);
        e * var.sqrt()
    };
    let c = config.intercept;
    let u = Vector::from_fn(n, |_, _| normal(config.u_var));
    let mut z = Matrix::zeros(n, config.p_z);
    for i in 0..n {
        for j in 0..config.p_z {
            z[(i, j)] = c + u[i] + normal(config.z_noise_var);
        }
    }
    let xi_z = Vector::from_vec(config.xi_z());
    let alpha = Vector::from_vec(config.alpha());
    let zxi = &z * &xi_z;
    let za = &z * &alpha;
    let d = Vector::from_fn(n, |i, _| {
        c + config.confounder_d * u[i] + zxi[i] + normal(config.d_noise_var)
    });
    let y = Vector::from_fn(n, |i, _| {
        c + config.beta_true * d[i]
            + config.confounder_y * u[i]
            + za[i]
            + normal(config.y_noise_var)
    });
    let xi_w = config.xi_w();
    let mut w = Matrix::zeros(n, config.p_w);
    for i in 0..n {
        for k in 0..config.p_w {
            w[(i, k)] = c + u[i] + xi_w[k] * d[i] + normal(config.w_noise_var);
        }
    }
    let data = Dataset::new(y, d, z, w, Matrix::zeros(n, 0))?;
    Ok(SimDraw { data, u })
}
