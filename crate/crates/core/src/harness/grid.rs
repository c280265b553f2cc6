use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::Deserialize;

use super::{run_experiment, ExperimentConfig, Report};
use crate::error::{Error, Result};

/// A sweep: `base` settings overridden by every combination of the
/// `sweep` lists.
///
/// ```toml
/// [base]
/// n = 4
/// latency = "region:single"
///
/// [sweep]
/// algorithm = ["S1", "S2", "NS2"]
/// one_probability = [0.3333333333333333, 0.5, 0.6666666666666666]
/// ```
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    #[serde(default)]
    pub base: toml::Table,
    #[serde(default)]
    pub sweep: BTreeMap<String, Vec<toml::Value>>,
}

impl Grid {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Parse(format!("grid file: {e}")))
    }

    /// Configurations in row-major order over the sweep keys, sorted by name.
    pub fn configs(&self) -> Result<Vec<ExperimentConfig>> {
        let mut tables = vec![self.base.clone()];
        for (key, values) in &self.sweep {
            if values.is_empty() {
                return Err(Error::Config(format!("sweep key {key:?} has no values")));
            }
            tables = tables
                .into_iter()
                .flat_map(|t| {
                    values.iter().map(move |v| {
                        let mut t = t.clone();
                        t.insert(key.clone(), v.clone());
                        t
                    })
                })
                .collect();
        }
        tables
            .into_iter()
            .map(|t| {
                let cfg: ExperimentConfig = t
                    .try_into()
                    .map_err(|e| Error::Parse(format!("grid entry: {e}")))?;
                cfg.validate()?;
                Ok(cfg)
            })
            .collect()
    }
}

pub fn load_grid(path: impl AsRef<Path>) -> Result<Grid> {
    Grid::from_toml_str(&std::fs::read_to_string(path)?)
}

/// Runs every configuration of the grid, in parallel across
/// configurations; reports come back in grid order.
pub fn run_grid(grid: &Grid) -> Result<Vec<Report>> {
    grid.configs()?.par_iter().map(run_experiment).collect()
}
