use std::collections::BTreeSet;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::synth::SynthSpec;
use crate::error::{invalid, Result};
use crate::explain::{Method, MethodConfig};
use crate::nn::Modality;
use crate::train::{ModelTemplate, TrainConfig};

/// A method given by id (modality defaults) or with an explicit configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MethodEntry {
    Id(Method),
    Config(MethodConfig),
}

impl MethodEntry {
    pub fn method(&self) -> Method {
        match self {
            MethodEntry::Id(m) => *m,
            MethodEntry::Config(c) => c.method(),
        }
    }

    pub fn resolve(&self, modality: Modality) -> MethodConfig {
        match self {
            MethodEntry::Id(m) => MethodConfig::default_for(*m, modality),
            MethodEntry::Config(c) => c.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricKind {
    /// Descriptive accuracy (deletion curve).
    Da,
    /// Mass around zero (sparsity).
    Maz,
    Stability,
    Completeness,
    /// Wall-clock timing; makes the report non-reproducible byte for byte.
    Efficiency,
}

fn default_metrics() -> Vec<MetricKind> {
    vec![MetricKind::Da, MetricKind::Maz, MetricKind::Stability, MetricKind::Completeness]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub name: String,
    pub synth: SynthSpec,
    pub model: ModelTemplate,
    #[serde(default)]
    pub train: TrainConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CompletenessConfig {
    pub l: usize,
    pub p_threshold: f64,
    /// Samples to check; `None` checks the whole dataset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_samples: Option<usize>,
}

impl Default for CompletenessConfig {
    fn default() -> Self {
        Self { l: 500, p_threshold: 0.05, n_samples: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EfficiencyConfig {
    pub repeats: usize,
    pub n_samples: usize,
}

impl Default for EfficiencyConfig {
    fn default() -> Self {
        Self { repeats: 3, n_samples: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CompareConfig {
    pub k: usize,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self { k: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StealConfig {
    pub layers: Vec<usize>,
    pub units_per_layer: usize,
    /// Number of fresh unlabeled queries sent to the oracle.
    pub n_queries: usize,
    pub k: usize,
    pub train: TrainConfig,
}

impl Default for StealConfig {
    fn default() -> Self {
        Self { layers: vec![1, 2, 3], units_per_layer: 200, n_queries: 2000, k: 10, train: TrainConfig::default() }
    }
}

fn twenty() -> usize {
    20
}
fn three() -> usize {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    /// Root of every random stream in the run.
    pub seed: u64,
    pub datasets: Vec<DatasetConfig>,
    #[serde(default)]
    pub methods: Vec<MethodEntry>,
    #[serde(default = "default_metrics")]
    pub metrics: Vec<MetricKind>,
    /// Samples explained per dataset (taken from the start of the dataset).
    #[serde(default = "twenty")]
    pub n_explain: usize,
    /// Top-k size for stability; defaults to `min(10, d)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default = "three")]
    pub stability_runs: usize,
    #[serde(default)]
    pub completeness: CompletenessConfig,
    #[serde(default)]
    pub efficiency: EfficiencyConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compare: Option<CompareConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steal: Option<StealConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

impl BenchConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: BenchConfig = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn wants(&self, m: MetricKind) -> bool {
        self.metrics.contains(&m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.datasets.is_empty() {
            return invalid("config lists no datasets");
        }
        let mut names = BTreeSet::new();
        for d in &self.datasets {
            if d.name.is_empty() || !d.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
                return invalid(format!("dataset name `{}` must be non-empty [A-Za-z0-9_-]", d.name));
            }
            if !names.insert(d.name.as_str()) {
                return invalid(format!("duplicate dataset name `{}`", d.name));
            }
            d.synth.validate()?;
            d.train.validate()?;
            for m in &self.methods {
                m.resolve(d.synth.modality()).validate()?;
            }
        }
        let mut seen = BTreeSet::new();
        for m in &self.methods {
            if !seen.insert(m.method()) {
                return invalid(format!("method `{}` listed twice", m.method()));
            }
        }
        if self.methods.is_empty() && self.steal.is_none() {
            return invalid("config lists no methods");
        }
        if self.n_explain == 0 {
            return invalid("n_explain must be positive");
        }
        if self.k == Some(0) {
            return invalid("k must be positive");
        }
        if self.wants(MetricKind::Stability) && self.stability_runs < 2 {
            return invalid("stability needs at least two runs");
        }
        if self.wants(MetricKind::Completeness)
            && (self.completeness.l == 0 || !(self.completeness.p_threshold > 0.0 && self.completeness.p_threshold < 1.0))
        {
            return invalid("completeness needs l > 0 and p_threshold in (0, 1)");
        }
        if self.wants(MetricKind::Efficiency) && (self.efficiency.repeats == 0 || self.efficiency.n_samples == 0) {
            return invalid("efficiency needs positive repeats and n_samples");
        }
        if let Some(c) = &self.compare {
            if c.k == 0 {
                return invalid("compare k must be positive");
            }
        }
        if let Some(s) = &self.steal {
            if s.layers.is_empty() || s.n_queries == 0 || s.k == 0 {
                return invalid("steal needs layers, queries and k");
            }
            for &l in &s.layers {
                crate::train::SurrogateSpec { n_hidden_layers: l, units_per_layer: s.units_per_layer }.validate()?;
            }
            s.train.validate()?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "seed": 7,
        "datasets": [{"name": "bin", "synth": {"kind": "dense-binary", "n": 40, "d": 6},
                      "model": {"arch": "mlp", "hidden": [8]}}],
        "methods": ["gradients", {"method": "ig", "steps": 32}]
    }"#;

    #[test]
    fn parses_ids_and_configs() {
        let c = BenchConfig::from_json(MINIMAL).unwrap();
        assert_eq!(c.methods[0], MethodEntry::Id(Method::Gradients));
        assert_eq!(c.methods[1].method(), Method::Ig);
        assert_eq!(c.n_explain, 20);
        assert!(c.wants(MetricKind::Da) && !c.wants(MetricKind::Efficiency));
    }

    #[test]
    fn rejects_unknown_method_and_duplicates() {
        assert!(BenchConfig::from_json(&MINIMAL.replace("\"gradients\"", "\"deeplift\"")).is_err());
        assert!(BenchConfig::from_json(&MINIMAL.replace("{\"method\": \"ig\", \"steps\": 32}", "\"gradients\"")).is_err());
    }
}
