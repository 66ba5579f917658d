//! Run configuration files and their merge with command-line flags.
//!
//! A configuration is a JSON object whose fields are all optional. The
//! `config` object of a run manifest has the same shape, so any output file
//! can be fed back through `--config` to reproduce it. Flags win over file
//! values.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::grid::{parse_n_grid, parse_t_grid};
use super::model_file::{load_model, ModelFile};
use crate::error::{Error, Result};
use crate::model::OutcomeModel;

/// A model given by builtin name or inline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelSpec {
    Name(String),
    Inline(ModelFile),
}

impl ModelSpec {
    pub fn resolve(&self) -> Result<OutcomeModel> {
        match self {
            ModelSpec::Name(name) => load_model(name),
            ModelSpec::Inline(file) => file.clone().into_model(),
        }
    }
}

/// A grid given as a single number or list, or as a grid string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    One(f64),
    List(Vec<f64>),
    Spec(String),
}

impl GridSpec {
    pub fn n_values(&self) -> Result<Vec<u64>> {
        match self {
            GridSpec::Spec(s) => parse_n_grid(s),
            GridSpec::One(v) => parse_n_grid(&v.to_string()),
            GridSpec::List(v) => parse_n_grid(&v.iter().map(f64::to_string).collect::<Vec<_>>().join(",")),
        }
    }

    pub fn t_values(&self) -> Result<Vec<f64>> {
        match self {
            GridSpec::Spec(s) => parse_t_grid(s),
            GridSpec::One(v) => Ok(vec![*v]),
            GridSpec::List(v) if !v.is_empty() => Ok(v.clone()),
            GridSpec::List(_) => Err(Error::config("t grid must not be empty")),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<GridSpec>,
    #[serde(default, alias = "t", skip_serializing_if = "Option::is_none")]
    pub t_grid: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j_max: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicates: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<u128>,
}

/// Extracts the configuration from a configuration file, a JSON output file
/// (`{"manifest": {"config": ...}}`), a bare manifest, or a CSV output file
/// whose second line is `# manifest {...}`.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::config(format!("cannot read config {}: {e}", path.display())))?;
    let json = if text.starts_with('#') {
        text.lines()
            .find_map(|l| l.strip_prefix("# manifest "))
            .ok_or_else(|| Error::config(format!("{} has no manifest line", path.display())))?
            .to_string()
    } else {
        text
    };
    let mut value: Value =
        serde_json::from_str(&json).map_err(|e| Error::config(format!("config {}: {e}", path.display())))?;
    if let Some(m) = value.get_mut("manifest") {
        value = m.take();
    }
    if let Some(c) = value.get_mut("config") {
        value = c.take();
    }
    serde_json::from_value(value).map_err(|e| Error::config(format!("config {}: {e}", path.display())))
}

impl RunConfig {
    /// Fields set in `flags` replace those in `self`.
    pub fn overridden_by(self, flags: RunConfig) -> RunConfig {
        RunConfig {
            model: flags.model.or(self.model),
            n: flags.n.or(self.n),
            t_grid: flags.t_grid.or(self.t_grid),
            j_max: flags.j_max.or(self.j_max),
            replicates: flags.replicates.or(self.replicates),
            seed: flags.seed.or(self.seed),
            workers: flags.workers.or(self.workers),
            budget: flags.budget.or(self.budget),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn flags_override_file() {
        let file = RunConfig {
            seed: Some(1),
            replicates: Some(10),
            ..Default::default()
        };
        let flags = RunConfig {
            seed: Some(2),
            ..Default::default()
        };
        let merged = file.overridden_by(flags);
        assert_eq!(merged.seed, Some(2));
        assert_eq!(merged.replicates, Some(10));
    }

    #[test]
    fn parses_all_shapes() {
        let c: RunConfig = serde_json::from_str(
            r#"{"model": "chess", "n": "2^8,2^10", "t_grid": [-1, 0, 1], "j_max": 1, "replicates": 5, "seed": 3}"#,
        )
        .unwrap();
        assert_eq!(c.n.unwrap().n_values().unwrap(), vec![256, 1024]);
        assert_eq!(c.t_grid.unwrap().t_values().unwrap(), vec![-1.0, 0.0, 1.0]);
        assert_eq!(c.model.unwrap().resolve().unwrap(), OutcomeModel::chess());

        let c: RunConfig = serde_json::from_str(
            r#"{"model": {"denominator": 1, "support": [[0, 0.5], [1, 0.5]]}, "n": 50, "t": 0.5}"#,
        )
        .unwrap();
        assert_eq!(c.n.unwrap().n_values().unwrap(), vec![50]);
        assert_eq!(c.t_grid.unwrap().t_values().unwrap(), vec![0.5]);
        assert!(serde_json::from_str::<RunConfig>(r#"{"nn": 3}"#).is_err());
    }

    #[test]
    fn reads_manifest_from_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("x.csv");
        let mut f = std::fs::File::create(&csv).unwrap();
        writeln!(f, "# tourney-extremes exact v1").unwrap();
        writeln!(f, "# manifest {{\"tool\":\"t\",\"config\":{{\"seed\":9}}}}").unwrap();
        writeln!(f, "a,b").unwrap();
        assert_eq!(load_config(&csv).unwrap().seed, Some(9));

        let js = dir.path().join("x.json");
        std::fs::write(&js, r#"{"manifest": {"config": {"replicates": 4}}, "report": {}}"#).unwrap();
        assert_eq!(load_config(&js).unwrap().replicates, Some(4));
    }
}
