use std::path::Path;

use serde::{Deserialize, Serialize};

use super::csv_load::{LoadOptions, SchemaMap};
use crate::error::{Error, Result};
use crate::estimators::{EstimatorConfig, Method, SubsampleOptions};
use crate::simulation::{Scale, SimConfig, TableId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReproduceConfig {
    pub table: Option<TableId>,
    pub scale: Scale,
    pub reps: Option<usize>,
    pub n_subsamples: Option<usize>,
}

impl Default for ReproduceConfig {
    fn default() -> Self {
        ReproduceConfig {
            table: None,
            scale: Scale::Desk,
            reps: None,
            n_subsamples: None,
        }
    }
}

/// A complete run configuration. Every section is optional in the file.
///
/// ```toml
/// seed = 7
/// methods = ["adaptive_proximal", "oracle"]
///
/// [simulation]
/// n = 1500
/// s_z = 4
///
/// [schema]
/// outcome = "y"
/// treatment = "d"
/// tcp = ["z1", "z2", "z3"]
/// ocp = ["w1"]
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// The single source of randomness; copied into the simulation and subsampling sections.
    pub seed: u64,
    pub methods: Vec<Method>,
    pub simulation: SimConfig,
    pub estimator: EstimatorConfig,
    pub subsample: SubsampleOptions,
    pub reproduce: ReproduceConfig,
    pub schema: Option<SchemaMap>,
    pub load: LoadOptions,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            methods: vec![
                Method::AdaptiveProximal,
                Method::Oracle,
                Method::Naive,
                Method::Ols,
            ],
            simulation: SimConfig::default(),
            estimator: EstimatorConfig::default(),
            subsample: SubsampleOptions::default(),
            reproduce: ReproduceConfig::default(),
            schema: None,
            load: LoadOptions::default(),
        }
    }
}

impl RunConfig {
    /// Check invariants and propagate the top-level seed.
    pub fn resolve(mut self) -> Result<Self> {
        for (key, nested) in [
            ("simulation.seed", self.simulation.seed),
            ("subsample.seed", self.subsample.seed),
        ] {
            if nested != 0 && nested != self.seed {
                return Err(Error::config(key, "set the seed at the top level"));
            }
        }
        self.simulation.seed = self.seed;
        self.subsample.seed = self.seed;
        self.validate()?;
        Ok(self)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.simulation.seed = seed;
        self.subsample.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.simulation
            .validate()
            .map_err(|e| prefix("simulation", e))?;
        if let Some(schema) = &self.schema {
            schema.validate()?;
        }
        let a = self.estimator.alpha_level;
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::config(
                "estimator.alpha_level",
                format!("must lie in (0, 1), got {a}"),
            ));
        }
        let a = self.subsample.alpha_level;
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::config(
                "subsample.alpha_level",
                format!("must lie in (0, 1), got {a}"),
            ));
        }
        if self.subsample.n_subsamples == 0 {
            return Err(Error::config(
                "subsample.n_subsamples",
                "need at least one subsample",
            ));
        }
        Ok(())
    }
}

fn prefix(section: &str, err: Error) -> Error {
    match err {
        Error::Config { key, message } => Error::Config {
            key: format!("{section}.{key}"),
            message,
        },
        other => other,
    }
}

/// Parse configuration text; unknown keys are rejected with their key path.
pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    let de = toml::Deserializer::new(text);
    let config: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let key = if path == "." {
            "<root>".to_string()
        } else {
            path
        };
        Error::config(key, e.into_inner().message().trim().to_string())
    })?;
    config.resolve()
}

pub fn parse_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_str(&text)
}

/// Canonical text form; `parse_config_str` inverts it.
pub fn config_to_string(config: &RunConfig) -> Result<String> {
    toml::to_string(config).map_err(|e| Error::config("<root>", e.to_string()))
}
