//! Experiment configuration: one JSON document per subcommand, with
//! command-line overrides applied to its keys before typing.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{Map, Value};

use crate::CliError;

/// Keys set from the command line, applied on top of the JSON document.
#[derive(Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub replicas: Option<usize>,
    /// `key=value` pairs; `value` is parsed as JSON, falling back to a string.
    pub set: Vec<String>,
}

/// Reads `path`, applies `overrides` and deserializes the result.
pub fn load<T: DeserializeOwned>(path: &Path, overrides: &Overrides) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| {
        CliError::Config(format!("{}: line {}, column {}: {e}", path.display(), e.line(), e.column()))
    })?;
    let Value::Object(mut doc) = value else {
        return Err(CliError::Config(format!("{}: top level must be a JSON object", path.display())));
    };
    apply(&mut doc, overrides)?;
    if !doc.contains_key("seed") {
        return Err(CliError::Config("a seed is required: set \"seed\" in the config or pass --seed".into()));
    }
    serde_json::from_value(Value::Object(doc))
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn apply(doc: &mut Map<String, Value>, overrides: &Overrides) -> Result<(), CliError> {
    if let Some(seed) = overrides.seed {
        doc.insert("seed".into(), seed.into());
    }
    if let Some(replicas) = overrides.replicas {
        doc.insert("replicas".into(), replicas.into());
    }
    for pair in &overrides.set {
        let (key, raw) = pair
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("--set expects key=value, got {pair:?}")))?;
        let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        doc.insert(key.trim().to_string(), value);
    }
    Ok(())
}

fn default_interior() -> u32 {
    50
}

fn default_one() -> usize {
    1
}

/// `percolate`: finite-cluster radius and hole tails.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PercolateConfig {
    pub dim: usize,
    pub p: f64,
    pub radii: Vec<u32>,
    pub replicas: usize,
    pub seed: u64,
    #[serde(default = "default_interior")]
    pub interior: u32,
}

/// `compete`: single competition runs with optional snapshots.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompeteConfig {
    pub dim: usize,
    #[serde(rename = "L")]
    pub half_width: u32,
    pub p: f64,
    pub q: f64,
    pub s1: Vec<i64>,
    pub s2: Vec<i64>,
    #[serde(rename = "T")]
    pub horizon: u32,
    pub seed: u64,
    #[serde(default = "default_one")]
    pub replicas: usize,
    #[serde(default)]
    pub allow_censored: bool,
    /// Times at which the first replica is rendered (d = 2 only).
    #[serde(default)]
    pub snapshots: Vec<u32>,
    /// Snapshot size `[width, height]`; defaults to the full box.
    #[serde(default)]
    pub snapshot_size: Option<[usize; 2]>,
}

/// `shape`: directional norm estimates.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapeConfig {
    pub p: f64,
    pub directions: Vec<Vec<i64>>,
    pub n_values: Vec<u32>,
    pub replicas: usize,
    pub seed: u64,
    #[serde(default)]
    pub margin: Option<u32>,
}

/// `cpq`: coupled norm-comparison ratios.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CpqConfig {
    pub p: f64,
    pub q: f64,
    pub directions: Vec<Vec<i64>>,
    pub n: u32,
    pub replicas: usize,
    pub seed: u64,
}

/// How the weaker parameter's norm is estimated for `speed`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FanConfig {
    pub resolution: u32,
    pub reach: u32,
    pub replicas: usize,
}

/// `speed`: blue reach over the horizon on coexisting replicas.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeedConfig {
    pub p: f64,
    pub q: f64,
    pub s1: Vec<i64>,
    pub s2: Vec<i64>,
    #[serde(rename = "L")]
    pub half_width: u32,
    #[serde(rename = "T")]
    pub horizon: u32,
    pub replicas: usize,
    pub seed: u64,
    pub norm: FanConfig,
}

/// A path whose main crossings are dumped by `renorm`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrossingConfig {
    #[serde(rename = "N")]
    pub n: u32,
    pub path: Vec<Vec<i64>>,
}

/// `renorm`: white-cube probabilities and optional crossing dumps.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenormConfig {
    pub dim: usize,
    pub p: f64,
    #[serde(rename = "N_values")]
    pub n_values: Vec<u32>,
    pub replicas: usize,
    pub seed: u64,
    #[serde(default)]
    pub crossings: Option<CrossingConfig>,
}

/// `sweep`: coexistence frequencies over a `(p, q)` grid.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepFileConfig {
    pub dim: usize,
    #[serde(rename = "L")]
    pub half_width: u32,
    pub p_values: Vec<f64>,
    pub q_values: Vec<f64>,
    pub s1: Vec<i64>,
    pub s2: Vec<i64>,
    #[serde(rename = "T")]
    pub horizon: u32,
    pub replicas: usize,
    pub seed: u64,
}

/// `render`: one competition snapshot at the horizon.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenderConfig {
    #[serde(rename = "L")]
    pub half_width: u32,
    pub p: f64,
    pub q: f64,
    pub s1: Vec<i64>,
    pub s2: Vec<i64>,
    #[serde(rename = "T")]
    pub horizon: u32,
    pub width: usize,
    pub height: usize,
    pub seed: u64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_replace_and_add_keys() {
        let mut doc = serde_json::json!({"p": 0.5, "seed": 1}).as_object().unwrap().clone();
        let o = Overrides {
            seed: Some(9),
            replicas: Some(4),
            set: vec!["p=0.7".into(), "radii=[1,2]".into(), "name=abc".into()],
        };
        apply(&mut doc, &o).unwrap();
        assert_eq!(doc["seed"], 9);
        assert_eq!(doc["replicas"], 4);
        assert_eq!(doc["p"], 0.7);
        assert_eq!(doc["radii"], serde_json::json!([1, 2]));
        assert_eq!(doc["name"], "abc");
    }

    #[test]
    fn malformed_override_is_a_config_error() {
        let mut doc = Map::new();
        let o = Overrides { set: vec!["novalue".into()], ..Default::default() };
        assert!(matches!(apply(&mut doc, &o), Err(CliError::Config(_))));
    }
}
