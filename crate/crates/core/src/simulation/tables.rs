use serde::{Deserialize, Serialize};

use super::dgp::SimConfig;
use super::monte_carlo::{run_monte_carlo, McOptions, MonteCarloReport};
use crate::error::Result;
use crate::estimators::{EstimatorConfig, Method, SubsampleOptions};
use crate::rng::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableId {
    /// Sample sizes 1500/2500/5000, three invalid TCPs, one valid OCP.
    T3,
    /// Invalid TCP count 1–8 at n = 2500.
    T4,
    /// Ten OCPs with three invalid; median over OCPs with subsampling intervals.
    T5,
    /// Invalid TCP count × invalid OCP count grid at n = 2500.
    T6,
}

impl std::str::FromStr for TableId {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "t3" => Ok(TableId::T3),
            "t4" => Ok(TableId::T4),
            "t5" => Ok(TableId::T5),
            "t6" => Ok(TableId::T6),
            other => Err(format!(
                "unknown table '{other}' (expected t3, t4, t5 or t6)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    /// 200 replications, 200 subsamples.
    Desk,
    /// 500 replications, 1000 subsamples.
    Full,
}

impl std::str::FromStr for Scale {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "desk" => Ok(Scale::Desk),
            "full" => Ok(Scale::Full),
            other => Err(format!("unknown scale '{other}' (expected desk or full)")),
        }
    }
}

impl Scale {
    pub fn reps(self) -> usize {
        match self {
            Scale::Desk => 200,
            Scale::Full => 500,
        }
    }

    pub fn subsamples(self) -> usize {
        match self {
            Scale::Desk => 200,
            Scale::Full => 1000,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TableOptions {
    pub seed: u64,
    /// Overrides the scale's replication count.
    pub reps: Option<usize>,
    /// Overrides the scale's subsample count.
    pub n_subsamples: Option<usize>,
    pub estimator: EstimatorConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub label: String,
    pub report: MonteCarloReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableReport {
    pub table: TableId,
    pub scale: Scale,
    pub rows: Vec<TableRow>,
}

/// One grid cell of a table: label, simulation settings and methods.
pub fn table_grid(table: TableId, reps: usize, seed: u64) -> Vec<(String, SimConfig, Vec<Method>)> {
    let base = SimConfig {
        reps,
        ..SimConfig::default()
    };
    let cell = |i: u64, cfg: SimConfig| SimConfig {
        seed: derive_seed(seed, i),
        ..cfg
    };
    match table {
        TableId::T3 => [1500, 2500, 5000]
            .into_iter()
            .enumerate()
            .map(|(i, n)| {
                (
                    format!("n={n}"),
                    cell(i as u64, SimConfig { n, ..base.clone() }),
                    vec![
                        Method::AdaptiveProximal,
                        Method::Oracle,
                        Method::Naive,
                        Method::Ols,
                    ],
                )
            })
            .collect(),
        TableId::T4 => (1..=8)
            .map(|s_z| {
                (
                    format!("s_z={s_z}"),
                    cell(
                        s_z as u64,
                        SimConfig {
                            s_z,
                            ..base.clone()
                        },
                    ),
                    vec![Method::AdaptiveProximal, Method::Oracle, Method::Naive],
                )
            })
            .collect(),
        TableId::T5 => [1500, 2500, 5000]
            .into_iter()
            .enumerate()
            .map(|(i, n)| {
                (
                    format!("n={n}"),
                    cell(
                        i as u64,
                        SimConfig {
                            n,
                            p_w: 10,
                            s_w: 3,
                            ..base.clone()
                        },
                    ),
                    vec![
                        Method::MedianOcp,
                        Method::Oracle,
                        Method::Naive,
                        Method::Ols,
                    ],
                )
            })
            .collect(),
        TableId::T6 => {
            let mut rows = Vec::new();
            for s_z in 3..=6 {
                for s_w in 3..=6 {
                    rows.push((
                        format!("s_z={s_z},s_w={s_w}"),
                        cell(
                            (10 * s_z + s_w) as u64,
                            SimConfig {
                                p_w: 10,
                                s_z,
                                s_w,
                                ..base.clone()
                            },
                        ),
                        vec![Method::MedianOcp],
                    ));
                }
            }
            rows
        }
    }
}

/// Run every cell of `table` at `scale`.
pub fn reproduce_table(
    table: TableId,
    scale: Scale,
    options: &TableOptions,
) -> Result<TableReport> {
    let reps = options.reps.unwrap_or(scale.reps());
    let subsample = (table == TableId::T5).then(|| SubsampleOptions {
        n_subsamples: options.n_subsamples.unwrap_or(scale.subsamples()),
        alpha_level: options.estimator.alpha_level,
        ..SubsampleOptions::default()
    });
    let mc = McOptions {
        estimator: options.estimator.clone(),
        subsample,
    };
    let rows = table_grid(table, reps, options.seed)
        .into_iter()
        .map(|(label, config, methods)| {
            Ok(TableRow {
                label,
                report: run_monte_carlo(&config, &methods, &mc)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TableReport { table, scale, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids_have_the_reference_shapes() {
        let t3 = table_grid(TableId::T3, 5, 0);
        assert_eq!(
            t3.iter().map(|r| r.1.n).collect::<Vec<_>>(),
            [1500, 2500, 5000]
        );
        assert!(t3
            .iter()
            .all(|r| r.1.p_z == 10 && r.1.s_z == 3 && r.1.p_w == 1 && r.1.reps == 5));
        let t4 = table_grid(TableId::T4, 5, 0);
        assert_eq!(
            t4.iter().map(|r| r.1.s_z).collect::<Vec<_>>(),
            (1..=8).collect::<Vec<_>>()
        );
        let t5 = table_grid(TableId::T5, 5, 0);
        assert!(t5.iter().all(|r| r.1.p_w == 10 && r.1.s_w == 3));
        assert_eq!(t5[0].2[0], Method::MedianOcp);
        let t6 = table_grid(TableId::T6, 5, 0);
        assert_eq!(t6.len(), 16);
        assert_eq!(t6[9].0, "s_z=5,s_w=4");
        let seeds: std::collections::HashSet<u64> = t6.iter().map(|r| r.1.seed).collect();
        assert_eq!(seeds.len(), 16);
    }

    #[test]
    fn scale_settings() {
        assert_eq!((Scale::Desk.reps(), Scale::Desk.subsamples()), (200, 200));
        assert_eq!((Scale::Full.reps(), Scale::Full.subsamples()), (500, 1000));
        assert_eq!("t4".parse::<TableId>().unwrap(), TableId::T4);
        assert!("t7".parse::<TableId>().is_err());
    }

    #[test]
    fn tiny_table_runs() {
        let opts = TableOptions {
            reps: Some(2),
            ..TableOptions::default()
        };
        let report = reproduce_table(TableId::T3, Scale::Desk, &opts).unwrap();
        assert_eq!(report.rows.len(), 3);
        assert_eq!(report.rows[2].report.config.n, 5000);
        assert_eq!(report.rows[0].report.methods.len(), 4);
    }
}
