//! Evaluation criteria: descriptive accuracy, sparsity (mass around zero),
//! stability, completeness, efficiency and feature prevalence.

mod ablation;
mod efficiency;
mod stats;

pub use ablation::{apply_ablation, AblationOperator};
pub use efficiency::{efficiency_bench, EfficiencyReport, EfficiencyRow};
pub use stats::{
    completeness_stats, prevalence, stability_run, ClassCompleteness, CompletenessReport, PrevalenceRow,
    PrevalenceTable, StabilityReport, DEFAULT_STABILITY_EPSILON,
};

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::nn::{argmax, Input, Modality, Model, Sample};

/// The `k` most relevant feature indices, most relevant first; ties go to
/// the lower index.
pub fn top_k(relevance: &[f64], k: usize) -> Result<Vec<usize>> {
    if k > relevance.len() {
        return invalid(format!("k = {k} exceeds {} features", relevance.len()));
    }
    let mut idx: Vec<usize> = (0..relevance.len()).collect();
    idx.sort_by(|&a, &b| relevance[b].total_cmp(&relevance[a]).then(a.cmp(&b)));
    idx.truncate(k);
    Ok(idx)
}

/// `|a ∩ b| / k` for two top-k sets.
pub fn intersection_size(a: &[usize], b: &[usize], k: usize) -> Result<f64> {
    if a.len() != k || b.len() != k {
        return invalid(format!("intersection size needs two sets of size {k}, got {} and {}", a.len(), b.len()));
    }
    if k == 0 {
        return invalid("intersection size needs k >= 1");
    }
    let sa: BTreeSet<usize> = a.iter().copied().collect();
    let common = b.iter().copied().collect::<BTreeSet<_>>().intersection(&sa).count();
    Ok(common as f64 / k as f64)
}

/// Sampled curve with its normalized area.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricCurve {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub auc: f64,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub degenerate: bool,
}

impl MetricCurve {
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.len() != values.len() || grid.is_empty() {
            return invalid("curve grid and values must be non-empty and of equal length");
        }
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return invalid("curve grid must be strictly ascending");
        }
        let auc = auc(&grid, &values);
        Ok(Self { grid, values, auc, degenerate: false })
    }

    /// Two-column CSV with a header row.
    pub fn to_csv(&self, x_name: &str, y_name: &str) -> String {
        let mut s = format!("{x_name},{y_name}\n");
        for (x, y) in self.grid.iter().zip(&self.values) {
            s.push_str(&format!("{x},{y}\n"));
        }
        s
    }
}

/// Trapezoid area divided by the grid span; a single point returns its value.
pub fn auc(grid: &[f64], values: &[f64]) -> f64 {
    if grid.len() < 2 {
        return values.first().copied().unwrap_or(0.0);
    }
    let area: f64 = grid.windows(2).zip(values.windows(2)).map(|(g, v)| (g[1] - g[0]) * (v[0] + v[1]) / 2.0).sum();
    area / (grid[grid.len() - 1] - grid[0])
}

/// Which model output a deletion curve tracks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DaScore {
    /// Output after softmax or sigmoid.
    #[default]
    Probability,
    /// Class score before the output activation.
    Logit,
}

/// `{0, 1, .., min(d, 50)}` for dense inputs, `{0, 5, 10, ..}` up to `d` for sequences.
pub fn default_k_grid(modality: Modality, d: usize) -> Vec<usize> {
    match modality {
        Modality::TokenSequence => (0..=d).step_by(5).collect(),
        _ => (0..=d.min(50)).collect(),
    }
}

/// Evenly spaced `{0, 0.01, .., 1}`.
pub fn default_r_grid() -> Vec<f64> {
    (0..=100).map(|i| f64::from(i) / 100.0).collect()
}

/// Descriptive accuracy: the output for the originally predicted class after
/// removing the top-k relevant features, for every `k` in `k_grid`.
pub fn da_curve(model: &Model, sample: &Sample, relevance: &[f64], k_grid: &[usize], op: AblationOperator) -> Result<MetricCurve> {
    da_curve_with(model, sample, relevance, k_grid, op, DaScore::Probability)
}

pub fn da_curve_with(
    model: &Model,
    sample: &Sample,
    relevance: &[f64],
    k_grid: &[usize],
    op: AblationOperator,
    score: DaScore,
) -> Result<MetricCurve> {
    if relevance.len() != sample.n_features() {
        return invalid("relevance length differs from the sample's feature count");
    }
    if k_grid.first() != Some(&0) {
        return invalid("k grid must start at 0");
    }
    let kmax = *k_grid.last().expect("non-empty");
    let order = top_k(relevance, kmax)?;
    let inputs = k_grid.iter().map(|&k| op.apply(&sample.input, &order[..k])).collect::<Result<Vec<Input>>>()?;
    let refs: Vec<&Input> = inputs.iter().collect();
    let (outs, c) = match score {
        DaScore::Probability => {
            let outs = model.forward_inputs(&refs)?;
            let c = argmax(&outs[0]);
            (outs, c)
        }
        DaScore::Logit => {
            let c = model.predict(sample)?;
            let outs = inputs.iter().map(|i| model.scores(&sample.with_input(i.clone()))).collect::<Result<Vec<_>>>()?;
            (outs, c)
        }
    };
    let values = outs.iter().map(|o| o[c]).collect();
    MetricCurve::new(k_grid.iter().map(|&k| k as f64).collect(), values)
}

/// Mass around zero: fraction of `|r| / max|r|` values not above each grid
/// point. The zero vector is defined to have MAZ = 1 everywhere and is
/// marked degenerate.
pub fn maz_curve(relevance: &[f64], r_grid: &[f64]) -> Result<MetricCurve> {
    if relevance.is_empty() {
        return invalid("empty relevance vector");
    }
    let max = relevance.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    if max == 0.0 {
        let mut c = MetricCurve::new(r_grid.to_vec(), vec![1.0; r_grid.len()])?;
        c.degenerate = true;
        return Ok(c);
    }
    let mut a: Vec<f64> = relevance.iter().map(|r| r.abs() / max).collect();
    a.sort_by(f64::total_cmp);
    let n = a.len() as f64;
    let values = r_grid.iter().map(|&r| a.partition_point(|&v| v <= r) as f64 / n).collect();
    MetricCurve::new(r_grid.to_vec(), values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn top_k_orders_and_breaks_ties_low() {
        assert_eq!(top_k(&[0.1, 0.9, 0.5], 2).unwrap(), vec![1, 2]);
        assert_eq!(top_k(&[1.0; 4], 2).unwrap(), vec![0, 1]);
        assert_eq!(top_k(&[3.0, 1.0, 2.0], 3).unwrap().len(), 3);
        assert!(top_k(&[1.0], 2).is_err());
    }

    #[test]
    fn intersection_examples() {
        assert!((intersection_size(&[1, 2, 3], &[2, 3, 4], 3).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(intersection_size(&[5, 1], &[1, 5], 2).unwrap(), 1.0);
        assert!(intersection_size(&[1], &[1, 2], 2).is_err());
    }

    #[test]
    fn auc_reference_curves() {
        assert_eq!(auc(&[0.0, 1.0], &[1.0, 1.0]), 1.0);
        assert!((auc(&[0.0, 1.0], &[1.0, 0.0]) - 0.5).abs() < 1e-12);
        assert_eq!(auc(&[3.0], &[0.7]), 0.7);
        assert!(MetricCurve::new(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn maz_examples() {
        let grid = default_r_grid();
        let c = maz_curve(&[0.0, 0.0, 1.0], &grid).unwrap();
        assert!((c.values[50] - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(*c.values.last().unwrap(), 1.0);
        let z = maz_curve(&[0.0; 4], &grid).unwrap();
        assert!(z.degenerate && z.values.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn k_grids() {
        assert_eq!(default_k_grid(Modality::DenseBinary, 3), vec![0, 1, 2, 3]);
        assert_eq!(default_k_grid(Modality::DenseReal, 80).len(), 51);
        assert_eq!(default_k_grid(Modality::TokenSequence, 12), vec![0, 5, 10]);
    }
}
