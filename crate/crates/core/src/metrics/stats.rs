use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{intersection_size, top_k, AblationOperator};
use crate::black::{gen_perturbations, opposite_fraction};
use crate::data::Dataset;
use crate::error::{invalid, Result};
use crate::explain::{Explainer, Method};
use crate::nn::{Input, Modality, Model, Sample};
use crate::rng::SeedSplitter;

/// Stable iff mean intersection size is at least `1 - epsilon`.
pub const DEFAULT_STABILITY_EPSILON: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassCompleteness {
    pub class: usize,
    pub n: usize,
    /// Fraction of samples whose perturbations reach the opposite-class
    /// threshold; `None` when the class has no samples.
    pub complete_fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletenessReport {
    pub p_threshold: f64,
    pub l: usize,
    pub per_class: Vec<ClassCompleteness>,
    pub incomplete_fraction: f64,
}

impl std::fmt::Display for CompletenessReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let cells: Vec<String> = self
            .per_class
            .iter()
            .map(|c| match c.complete_fraction {
                Some(v) => format!("{:.1}%", 100.0 * v),
                None => "-".into(),
            })
            .collect();
        write!(f, "{} / incomplete {:.1}%", cells.join(" / "), 100.0 * self.incomplete_fraction)
    }
}

/// For every sample, draws `l` perturbations and checks whether at least a
/// fraction `p_threshold` of them changes the predicted class. Samples are
/// grouped by their dataset label.
pub fn completeness_stats(model: &Model, dataset: &Dataset, l: usize, p_threshold: f64, seed: u64) -> Result<CompletenessReport> {
    if !(p_threshold > 0.0 && p_threshold < 1.0) {
        return invalid("p_threshold must lie in (0, 1)");
    }
    let op = AblationOperator::for_model(model)?;
    let split = SeedSplitter::new(seed);
    let complete: Vec<bool> = dataset
        .samples
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let c = model.predict(s)?;
            let p = gen_perturbations(model, s, c, l, split.derive("completeness", i as u64), op)?;
            Ok(opposite_fraction(&p, c) >= p_threshold)
        })
        .collect::<Result<_>>()?;
    let n_classes = dataset.meta.n_classes;
    let mut n = vec![0usize; n_classes];
    let mut ok = vec![0usize; n_classes];
    for (s, &c) in dataset.samples.iter().zip(&complete) {
        n[s.label] += 1;
        ok[s.label] += usize::from(c);
    }
    let per_class = (0..n_classes)
        .map(|c| ClassCompleteness {
            class: c,
            n: n[c],
            complete_fraction: (n[c] > 0).then(|| ok[c] as f64 / n[c] as f64),
        })
        .collect();
    let total = dataset.len();
    let incomplete_fraction =
        if total == 0 { 0.0 } else { 1.0 - ok.iter().sum::<usize>() as f64 / total as f64 };
    Ok(CompletenessReport { p_threshold, l, per_class, incomplete_fraction })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub method: Method,
    pub k: usize,
    pub runs: usize,
    pub mean_is: f64,
    pub epsilon: f64,
    pub stable: bool,
}

/// Explains every sample `runs` times with independent seeds and averages
/// the pairwise top-k intersection size over samples and run pairs.
pub fn stability_run(
    explainer: &dyn Explainer,
    model: &Model,
    samples: &[Sample],
    runs: usize,
    k: usize,
    seed: u64,
) -> Result<StabilityReport> {
    if runs < 2 {
        return invalid("stability needs at least two runs");
    }
    if samples.is_empty() {
        return invalid("stability needs at least one sample");
    }
    let split = SeedSplitter::new(seed);
    let per_sample: Vec<f64> = samples
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let c = model.predict(s)?;
            let sets = (0..runs)
                .map(|r| {
                    let e = explainer.explain(model, s, c, split.child("run", r as u64).derive("sample", i as u64))?;
                    top_k(&e.relevance, k)
                })
                .collect::<Result<Vec<_>>>()?;
            let mut acc = 0.0;
            let mut pairs = 0usize;
            for a in 0..runs {
                for b in a + 1..runs {
                    acc += intersection_size(&sets[a], &sets[b], k)?;
                    pairs += 1;
                }
            }
            Ok(acc / pairs as f64)
        })
        .collect::<Result<_>>()?;
    let mean_is = per_sample.iter().sum::<f64>() / per_sample.len() as f64;
    Ok(StabilityReport {
        method: explainer.method(),
        k,
        runs,
        mean_is,
        epsilon: DEFAULT_STABILITY_EPSILON,
        stable: mean_is >= 1.0 - DEFAULT_STABILITY_EPSILON,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrevalenceRow {
    pub feature: usize,
    pub name: String,
    /// Fraction of samples of each class in which the feature is set.
    pub per_class: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrevalenceTable {
    pub class_sizes: Vec<usize>,
    pub rows: Vec<PrevalenceRow>,
}

impl std::fmt::Display for PrevalenceTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for r in &self.rows {
            let cells: Vec<String> = r.per_class.iter().map(|v| format!("{:.1}%", 100.0 * v)).collect();
            writeln!(f, "{} {}", r.name, cells.join(" / "))?;
        }
        Ok(())
    }
}

/// Per-class frequency of each listed feature (union of the per-class lists,
/// in first-seen order) on a dense-binary dataset.
pub fn prevalence(dataset: &Dataset, feature_sets_per_class: &[Vec<usize>]) -> Result<PrevalenceTable> {
    if dataset.meta.modality != Modality::DenseBinary {
        return invalid("prevalence needs a dense-binary dataset");
    }
    let n_classes = dataset.meta.n_classes;
    let mut class_sizes = vec![0usize; n_classes];
    for s in &dataset.samples {
        class_sizes[s.label] += 1;
    }
    if class_sizes.contains(&0) {
        return invalid("every class needs at least one sample");
    }
    let mut features: Vec<usize> = Vec::new();
    for &f in feature_sets_per_class.iter().flatten() {
        if f >= dataset.meta.n_features {
            return invalid(format!("feature {f} out of range"));
        }
        if !features.contains(&f) {
            features.push(f);
        }
    }
    let rows = features
        .into_iter()
        .map(|f| {
            let mut hits = vec![0usize; n_classes];
            for s in &dataset.samples {
                if let Input::Dense(v) = &s.input {
                    if v[f] != 0.0 {
                        hits[s.label] += 1;
                    }
                }
            }
            PrevalenceRow {
                feature: f,
                name: dataset.feature_name(f),
                per_class: hits.iter().zip(&class_sizes).map(|(&h, &n)| h as f64 / n as f64).collect(),
            }
        })
        .collect();
    Ok(PrevalenceTable { class_sizes, rows })
}
