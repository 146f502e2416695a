use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::metrics::AblationOperator;
use crate::nn::{argmax, Input, Model, Sample};
use crate::rng::rng_from_seed;

const CHUNK: usize = 64;

/// Randomly ablated copies of one input with the model's response to each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSet {
    /// `true` keeps the feature, `false` ablates it.
    pub masks: Vec<Vec<bool>>,
    /// Model output for the explained class (probability under softmax/sigmoid heads).
    pub scores: Vec<f64>,
    /// Predicted class of each perturbed input.
    pub labels: Vec<usize>,
    pub seed: u64,
}

impl PerturbationSet {
    pub fn len(&self) -> usize {
        self.masks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }
}

/// Model outputs for `sample` under each mask; returns `(class scores, labels)`.
/// Chunks are evaluated in parallel and each output is independent of chunking.
pub fn score_masks(
    model: &Model,
    sample: &Sample,
    class: usize,
    masks: &[Vec<bool>],
    op: AblationOperator,
) -> Result<(Vec<f64>, Vec<usize>)> {
    model.check_class(class)?;
    model.check_input(&sample.input)?;
    let inputs = masks.iter().map(|m| op.apply_mask(&sample.input, m)).collect::<Result<Vec<Input>>>()?;
    let outs: Vec<Vec<Vec<f64>>> = inputs
        .par_chunks(CHUNK)
        .map(|chunk| model.forward_inputs(&chunk.iter().collect::<Vec<_>>()))
        .collect::<Result<_>>()?;
    let outs = outs.into_iter().flatten();
    let (scores, labels) = outs.map(|o| (o[class], argmax(&o))).unzip();
    Ok((scores, labels))
}

/// Draws `l` masks with every feature kept independently with probability 1/2
/// and evaluates the model on each ablated copy.
pub fn gen_perturbations(
    model: &Model,
    sample: &Sample,
    class: usize,
    l: usize,
    seed: u64,
    op: AblationOperator,
) -> Result<PerturbationSet> {
    if l == 0 {
        return invalid("perturbation count must be at least 1");
    }
    let d = sample.n_features();
    let mut rng = rng_from_seed(seed);
    let masks: Vec<Vec<bool>> = (0..l).map(|_| (0..d).map(|_| rng.gen_bool(0.5)).collect()).collect();
    let (scores, labels) = score_masks(model, sample, class, &masks, op)?;
    Ok(PerturbationSet { masks, scores, labels, seed })
}

/// Fraction of perturbations predicted as a class other than `original_class`.
pub fn opposite_fraction(p: &PerturbationSet, original_class: usize) -> f64 {
    if p.labels.is_empty() {
        return 0.0;
    }
    p.labels.iter().filter(|&&c| c != original_class).count() as f64 / p.labels.len() as f64
}
