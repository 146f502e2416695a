use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{invalid, Result};
use crate::metrics::{intersection_size, top_k};
use crate::nn::{Model, Sample};
use crate::train::{steal, StealLog, SurrogateSpec, TrainConfig};
use crate::white::{explain_lrp, LrpConfig};

/// Mean pairwise top-k intersection size between groups of explanations of
/// the same samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsMatrix {
    pub labels: Vec<String>,
    pub k: usize,
    pub values: Vec<Vec<f64>>,
}

impl IsMatrix {
    /// `relevance[g][i]` is the relevance vector of group `g` for sample `i`.
    pub fn from_relevance(labels: Vec<String>, relevance: &[Vec<Vec<f64>>], k: usize) -> Result<Self> {
        if labels.len() != relevance.len() || relevance.is_empty() {
            return invalid("one label per relevance group is required");
        }
        let n = relevance[0].len();
        if n == 0 || relevance.iter().any(|g| g.len() != n) {
            return invalid("every group needs the same non-zero number of samples");
        }
        let tops = relevance
            .iter()
            .map(|g| g.iter().map(|r| top_k(r, k)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let m = labels.len();
        let mut values = vec![vec![0.0; m]; m];
        for a in 0..m {
            for b in 0..m {
                let mut acc = 0.0;
                for i in 0..n {
                    acc += intersection_size(&tops[a][i], &tops[b][i], k)?;
                }
                values[a][b] = acc / n as f64;
            }
        }
        Ok(Self { labels, k, values })
    }

    /// Mean of the off-diagonal entries over the index pairs selected by `pick`.
    pub fn mean_over(&self, pick: impl Fn(usize, usize) -> bool) -> Option<f64> {
        let mut acc = 0.0;
        let mut n = 0usize;
        for a in 0..self.labels.len() {
            for b in 0..self.labels.len() {
                if a != b && pick(a, b) {
                    acc += self.values[a][b];
                    n += 1;
                }
            }
        }
        (n > 0).then(|| acc / n as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StealReport {
    pub surrogates: Vec<StealLog>,
    /// LRP top-k overlap; entry 0 is the oracle, then the surrogates.
    pub is_matrix: IsMatrix,
    pub surrogate_vs_surrogate: Option<f64>,
    pub surrogate_vs_oracle: Option<f64>,
}

/// LRP relevance of each model for its own prediction on `samples`.
fn lrp_relevance(model: &Model, samples: &[Sample]) -> Result<Vec<Vec<f64>>> {
    samples
        .iter()
        .map(|s| Ok(explain_lrp(model, s, model.predict(s)?, &LrpConfig::default())?.relevance))
        .collect()
}

/// Trains one surrogate per hidden-layer count from oracle predictions on
/// `queries`, then compares LRP explanations of all models on `samples`.
pub fn steal_experiment(
    oracle: &Model,
    queries: &Dataset,
    samples: &[Sample],
    layers: &[usize],
    units_per_layer: usize,
    train: &TrainConfig,
    k: usize,
) -> Result<StealReport> {
    let mut labels = vec!["oracle".to_string()];
    let mut relevance = vec![lrp_relevance(oracle, samples)?];
    let mut logs = Vec::new();
    for &l in layers {
        let (model, log) = steal(oracle, queries, &SurrogateSpec { n_hidden_layers: l, units_per_layer }, train)?;
        labels.push(format!("surrogate-{l}"));
        relevance.push(lrp_relevance(&model, samples)?);
        logs.push(log);
    }
    let is_matrix = IsMatrix::from_relevance(labels, &relevance, k)?;
    Ok(StealReport {
        surrogates: logs,
        surrogate_vs_surrogate: is_matrix.mean_over(|a, b| a > 0 && b > 0),
        surrogate_vs_oracle: is_matrix.mean_over(|a, b| (a == 0) != (b == 0)),
        is_matrix,
    })
}
