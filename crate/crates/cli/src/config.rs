use std::path::Path;

use anyhow::{anyhow, Context, Result};
use mpli::asymptotics::BPrecision;
use mpli::experiments::{DensitySpec, ModelSpec, SweepConfig};
use mpli::mse::McSpec;
use mpli::quadrature::QuadratureSpec;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

/// Reads a JSON config, reporting the offending field path, line and column.
pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let mut de = serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let field = e.path().to_string();
        anyhow!("{}: field `{field}`: {}", path.display(), e.into_inner())
    })
}

fn from_value<T: DeserializeOwned>(path: &Path, prefix: &str, value: serde_json::Value) -> Result<T> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let field = match e.path().to_string() {
            p if p == "." => prefix.to_string(),
            p if prefix.is_empty() => p,
            p => format!("{prefix}.{p}"),
        };
        anyhow!("{}: field `{field}`: {}", path.display(), e.into_inner())
    })
}

/// Loads a [`RunConfig`]. The sweep part is flattened, which hides field
/// paths from serde, so both halves are decoded separately.
pub fn load_run(path: &Path) -> Result<RunConfig> {
    let mut value: serde_json::Value = load(path)?;
    let monte_carlo = match value.as_object_mut().and_then(|m| m.remove("monte_carlo")) {
        None | Some(serde_json::Value::Null) => None,
        Some(mc) => Some(from_value(path, "monte_carlo", mc)?),
    };
    let sweep = from_value(path, "", value)?;
    Ok(RunConfig { sweep, monte_carlo })
}

/// Config of `imse` and `sweep`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(flatten)]
    pub sweep: SweepConfig,
    /// Adds Monte-Carlo estimates next to each exact value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub monte_carlo: Option<McSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AsymConfig {
    pub model: ModelSpec,
    pub densities: Vec<DensitySpec>,
    /// Asymptotic constants; computed from the model when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v: Option<Vec<f64>>,
    pub targets: Vec<f64>,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
    #[serde(default)]
    pub precision: BPrecision,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DesignConfig {
    pub model: ModelSpec,
    pub densities: Vec<DensitySpec>,
    pub allocation: Vec<usize>,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelCheckConfig {
    pub model: ModelSpec,
    #[serde(default = "default_step")]
    pub step: f64,
    #[serde(default = "default_probe_grid")]
    pub probe_grid: usize,
    #[serde(default = "default_spectrum_grid")]
    pub spectrum_grid: usize,
}

fn default_step() -> f64 {
    1e-4
}

fn default_probe_grid() -> usize {
    5
}

fn default_spectrum_grid() -> usize {
    4
}

/// Applies command-line overrides to a quadrature spec.
pub fn override_quadrature(quad: &mut QuadratureSpec, order: Option<usize>) {
    if let Some(q) = order {
        quad.order = q;
    }
}
