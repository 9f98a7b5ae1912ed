use serde::{Deserialize, Serialize};

use super::{
    estimate_invalid_tcp, median_over_ocps, ColumnNames, Dataset, EstimatorConfig, ProxyEstimate,
};
use crate::error::Result;
use crate::linalg::{hstack, select_columns, Matrix};

/// One role assignment: a single pooled proxy as the OCP, the rest as TCPs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotationRow {
    pub ocp: String,
    pub invalid_tcps: Vec<String>,
    pub valid_tcps: Vec<String>,
    pub estimate: Option<ProxyEstimate>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotationResult {
    pub rows: Vec<RotationRow>,
    /// Median of the successful row estimates.
    pub median: Option<f64>,
}

/// Pool the TCP and OCP columns of `data` and let each pooled proxy take the
/// OCP role in turn, with the remaining proxies as candidate TCPs.
pub fn rotate_proxies(data: &Dataset, config: &EstimatorConfig) -> Result<RotationResult> {
    let pool = hstack(&[&data.z, &data.w]);
    let names: Vec<String> = data
        .names
        .tcp
        .iter()
        .chain(&data.names.ocp)
        .cloned()
        .collect();
    let mut rows = Vec::with_capacity(names.len());
    for k in 0..names.len() {
        let tcp_idx: Vec<usize> = (0..names.len()).filter(|&j| j != k).collect();
        let tcp_names: Vec<String> = tcp_idx.iter().map(|&j| names[j].clone()).collect();
        let role = Dataset::with_names(
            data.y.clone(),
            data.d.clone(),
            select_columns(&pool, &tcp_idx),
            Matrix::from_column_slice(data.n(), 1, pool.column(k).as_slice()),
            data.x.clone(),
            ColumnNames {
                tcp: tcp_names.clone(),
                ocp: vec![names[k].clone()],
                ..data.names.clone()
            },
        )?;
        let row = match estimate_invalid_tcp(&role, 0, config) {
            Ok(est) => {
                let (invalid, valid): (Vec<usize>, Vec<usize>) =
                    (0..tcp_names.len()).partition(|j| est.selected_invalid_tcps.contains(j));
                RotationRow {
                    ocp: names[k].clone(),
                    invalid_tcps: invalid.iter().map(|&j| tcp_names[j].clone()).collect(),
                    valid_tcps: valid.iter().map(|&j| tcp_names[j].clone()).collect(),
                    estimate: Some(est),
                    error: None,
                }
            }
            Err(e) => RotationRow {
                ocp: names[k].clone(),
                invalid_tcps: Vec::new(),
                valid_tcps: Vec::new(),
                estimate: None,
                error: Some(e.to_string()),
            },
        };
        rows.push(row);
    }
    let betas: Vec<Option<f64>> = rows
        .iter()
        .map(|r| r.estimate.as_ref().map(|e| e.beta_hat))
        .collect();
    Ok(RotationResult {
        median: median_over_ocps(&betas).ok(),
        rows,
    })
}
