//! Experiment configuration: a JSON file mirroring the command-line flags.
//! Explicit flags always override config values.

use serde::Deserialize;
use std::path::Path;

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: Option<String>,
    pub steps: Option<u64>,
    pub periods: Option<u64>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub kappa: Option<f64>,
    #[serde(rename = "D")]
    pub diffusivity: Option<f64>,
    #[serde(rename = "N")]
    pub grid_size: Option<usize>,
    pub nsub: Option<usize>,
    pub seed: Option<u64>,
    pub init: Option<String>,
    pub q: Option<String>,
    pub out: Option<String>,
    pub radii: Option<String>,
    pub tail_fraction: Option<f64>,
    pub threshold: Option<f64>,
    pub h: Option<String>,
    pub delta: Option<f64>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("bad config {}: {e}", path.display()))
    }
}

pub fn parse_f64_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|e| format!("bad number {t:?}: {e}"))
        })
        .collect()
}

pub fn parse_i128_list(s: &str) -> Result<Vec<i128>, String> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<i128>()
                .map_err(|e| format!("bad integer {t:?}: {e}"))
        })
        .collect()
}
