//! Training of fixture models on synthetic data, and surrogate training from
//! black-box predictions (model stealing).

mod template;

pub use template::{HeadKind, InputSpec, ModelTemplate};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, DatasetMeta};
use crate::error::{invalid, Error, Result};
use crate::nn::{argmax, Input, Model, ParamGrads, Sample};
use crate::rng::{rng_from_seed, SeedSplitter};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    Sgd,
    Adam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    /// Zero epochs returns the initialization unchanged.
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub optimizer: Optimizer,
    /// Stop after this many epochs without a drop in training loss.
    pub patience: usize,
    /// Fraction of samples held out for evaluation.
    pub test_fraction: f64,
    /// Surrogates fit the oracle's probabilities instead of its argmax labels.
    pub soft_targets: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 30,
            batch_size: 32,
            learning_rate: 1e-3,
            seed: 0,
            optimizer: Optimizer::Adam,
            patience: 5,
            test_fraction: 0.2,
            soft_targets: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.patience == 0 {
            return invalid("batch_size and patience must be positive");
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return invalid("learning_rate must be positive");
        }
        if !(0.0..1.0).contains(&self.test_fraction) {
            return invalid("test_fraction must lie in [0, 1)");
        }
        Ok(())
    }
}

/// Size of each surrogate used for model stealing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurrogateSpec {
    pub n_hidden_layers: usize,
    #[serde(default = "default_units")]
    pub units_per_layer: usize,
}

fn default_units() -> usize {
    200
}

impl SurrogateSpec {
    pub fn new(n_hidden_layers: usize) -> Self {
        Self { n_hidden_layers, units_per_layer: default_units() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.n_hidden_layers) {
            return invalid(format!("surrogates have 1 to 3 hidden layers, got {}", self.n_hidden_layers));
        }
        if self.units_per_layer == 0 {
            return invalid("units_per_layer must be positive");
        }
        Ok(())
    }
}

/// Held-out classification quality; class 1 is the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct ClassMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl ClassMetrics {
    pub fn from_predictions(pred: &[usize], truth: &[usize]) -> Self {
        let n = pred.len().max(1) as f64;
        let mut correct = 0usize;
        let (mut tp, mut fp, mut fneg) = (0usize, 0usize, 0usize);
        for (&p, &t) in pred.iter().zip(truth) {
            correct += usize::from(p == t);
            match (p == 1, t == 1) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fneg += 1,
                _ => {}
            }
        }
        let ratio = |a: usize, b: usize| if a + b == 0 { 0.0 } else { a as f64 / (a + b) as f64 };
        let precision = ratio(tp, fp);
        let recall = ratio(tp, fneg);
        let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
        Self { accuracy: correct as f64 / n, precision, recall, f1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub epochs: Vec<EpochLog>,
    pub stopped_early: bool,
    pub n_train: usize,
    pub n_test: usize,
    pub metrics: ClassMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StealLog {
    pub n_hidden_layers: usize,
    pub units_per_layer: usize,
    pub train: TrainLog,
    /// Fraction of held-out samples where surrogate and oracle argmax agree.
    pub agreement: f64,
}

/// Deterministic train/test split of `n` indices.
pub fn split_indices(n: usize, test_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng_from_seed(seed));
    let n_test = ((n as f64) * test_fraction).round() as usize;
    let n_test = n_test.min(n.saturating_sub(1));
    let test = idx[..n_test].to_vec();
    let train = idx[n_test..].to_vec();
    (train, test)
}

pub fn input_spec(meta: &DatasetMeta) -> InputSpec {
    InputSpec {
        modality: meta.modality,
        n_features: meta.n_features,
        n_classes: meta.n_classes,
        vocab_size: meta.vocab_size,
        padding_id: meta.padding_token.filter(|_| meta.modality == crate::nn::Modality::TokenSequence),
    }
}

/// Instantiates `arch` from `cfg.seed` and trains it on `data`.
pub fn fit(arch: &ModelTemplate, data: &Dataset, cfg: &TrainConfig) -> Result<(Model, TrainLog)> {
    cfg.validate()?;
    let seeds = SeedSplitter::new(cfg.seed);
    let init = arch.instantiate(&input_spec(&data.meta), seeds.derive("init", 0))?;
    fit_from(init, data, cfg)
}

/// Trains an already initialized model on `data` with hard labels.
pub fn fit_from(init: Model, data: &Dataset, cfg: &TrainConfig) -> Result<(Model, TrainLog)> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::TrainingFailure { epoch: 0, reason: "empty dataset".into() });
    }
    let targets: Vec<Vec<f64>> = data
        .samples
        .iter()
        .map(|s| {
            let mut t = vec![0.0; init.n_classes()];
            t[s.label.min(init.n_classes() - 1)] = 1.0;
            t
        })
        .collect();
    let seeds = SeedSplitter::new(cfg.seed);
    let (train, test) = split_indices(data.len(), cfg.test_fraction, seeds.derive("split", 0));
    let (model, epochs, stopped_early) = train_loop(init, &data.samples, &targets, &train, cfg)?;
    let eval = if test.is_empty() { &train } else { &test };
    let pred = eval.iter().map(|&i| model.predict(&data.samples[i])).collect::<Result<Vec<_>>>()?;
    let truth: Vec<usize> = eval.iter().map(|&i| data.samples[i].label).collect();
    let log = TrainLog {
        epochs,
        stopped_early,
        n_train: train.len(),
        n_test: test.len(),
        metrics: ClassMetrics::from_predictions(&pred, &truth),
    };
    Ok((model, log))
}

/// Trains a surrogate MLP on the oracle's predictions for `unlabeled`.
///
/// Only `oracle.forward` is consulted; sample labels in `unlabeled` are ignored.
pub fn steal(oracle: &Model, unlabeled: &Dataset, spec: &SurrogateSpec, cfg: &TrainConfig) -> Result<(Model, StealLog)> {
    spec.validate()?;
    cfg.validate()?;
    if unlabeled.is_empty() {
        return Err(Error::TrainingFailure { epoch: 0, reason: "no samples to query the oracle with".into() });
    }
    let probs = oracle.forward_batch(&unlabeled.samples)?;
    let targets: Vec<Vec<f64>> = probs
        .iter()
        .map(|p| {
            if cfg.soft_targets {
                p.clone()
            } else {
                let mut t = vec![0.0; p.len()];
                t[argmax(p)] = 1.0;
                t
            }
        })
        .collect();
    let oracle_labels: Vec<usize> = probs.iter().map(|p| argmax(p)).collect();
    let arch = ModelTemplate::Mlp {
        hidden: vec![spec.units_per_layer; spec.n_hidden_layers],
        head: HeadKind::Softmax,
        embed_dim: None,
    };
    let mut meta = unlabeled.meta.clone();
    meta.n_classes = oracle.n_classes();
    let seeds = SeedSplitter::new(cfg.seed);
    let init = arch.instantiate(&input_spec(&meta), seeds.derive("surrogate-init", spec.n_hidden_layers as u64))?;
    let (train, test) = split_indices(unlabeled.len(), cfg.test_fraction, seeds.derive("split", 0));
    let (model, epochs, stopped_early) = train_loop(init, &unlabeled.samples, &targets, &train, cfg)?;
    let eval = if test.is_empty() { &train } else { &test };
    let pred = eval.iter().map(|&i| model.predict(&unlabeled.samples[i])).collect::<Result<Vec<_>>>()?;
    let truth: Vec<usize> = eval.iter().map(|&i| oracle_labels[i]).collect();
    let metrics = ClassMetrics::from_predictions(&pred, &truth);
    let log = StealLog {
        n_hidden_layers: spec.n_hidden_layers,
        units_per_layer: spec.units_per_layer,
        train: TrainLog { epochs, stopped_early, n_train: train.len(), n_test: test.len(), metrics },
        agreement: metrics.accuracy,
    };
    Ok((model, log))
}

struct AdamState {
    m: Vec<Vec<Vec<f64>>>,
    v: Vec<Vec<Vec<f64>>>,
    t: i32,
}

fn train_loop(
    mut model: Model,
    samples: &[Sample],
    targets: &[Vec<f64>],
    train: &[usize],
    cfg: &TrainConfig,
) -> Result<(Model, Vec<EpochLog>, bool)> {
    let mut order = train.to_vec();
    let mut rng = rng_from_seed(SeedSplitter::new(cfg.seed).derive("shuffle", 0));
    let zeros = |m: &Model| -> Vec<Vec<Vec<f64>>> {
        m.layers().iter().map(|l| l.params().iter().map(|p| vec![0.0; p.len()]).collect()).collect()
    };
    let mut adam = AdamState { m: zeros(&model), v: zeros(&model), t: 0 };
    let mut log = Vec::with_capacity(cfg.epochs);
    let mut best = f64::INFINITY;
    let mut stale = 0;
    let mut stopped_early = false;
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let inputs: Vec<&Input> = batch.iter().map(|&i| &samples[i].input).collect();
            let tg: Vec<&[f64]> = batch.iter().map(|&i| targets[i].as_slice()).collect();
            let (loss, grads) = model.loss_and_grads(&inputs, &tg).map_err(|e| Error::TrainingFailure {
                epoch,
                reason: e.to_string(),
            })?;
            epoch_loss += loss * batch.len() as f64;
            apply_update(&mut model, &grads, &mut adam, cfg);
            if !model.layers().iter().all(|l| l.params().iter().all(|p| p.iter().all(|v| v.is_finite()))) {
                return Err(Error::TrainingFailure { epoch, reason: "parameters diverged".into() });
            }
        }
        let epoch_loss = epoch_loss / order.len().max(1) as f64;
        if !epoch_loss.is_finite() {
            return Err(Error::TrainingFailure { epoch, reason: "non-finite loss".into() });
        }
        log.push(EpochLog { epoch, loss: epoch_loss });
        if epoch_loss < best - 1e-9 {
            best = epoch_loss;
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.patience {
                stopped_early = true;
                break;
            }
        }
    }
    let model = model.with_layers(model.layers().to_vec())?;
    Ok((model, log, stopped_early))
}

fn apply_update(model: &mut Model, grads: &ParamGrads, adam: &mut AdamState, cfg: &TrainConfig) {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;
    const EPS: f64 = 1e-8;
    adam.t += 1;
    let bc1 = 1.0 - B1.powi(adam.t);
    let bc2 = 1.0 - B2.powi(adam.t);
    let lr = cfg.learning_rate;
    for (li, layer) in model.layers_mut_unchecked().iter_mut().enumerate() {
        for (bi, param) in layer.params_mut().into_iter().enumerate() {
            let g = &grads.layers[li][bi];
            match cfg.optimizer {
                Optimizer::Sgd => {
                    for (p, gi) in param.iter_mut().zip(g) {
                        *p -= lr * gi;
                    }
                }
                Optimizer::Adam => {
                    let m = &mut adam.m[li][bi];
                    let v = &mut adam.v[li][bi];
                    for k in 0..param.len() {
                        m[k] = B1 * m[k] + (1.0 - B1) * g[k];
                        v[k] = B2 * v[k] + (1.0 - B2) * g[k] * g[k];
                        let mh = m[k] / bc1;
                        let vh = v[k] / bc2;
                        param[k] -= lr * mh / (vh.sqrt() + EPS);
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metrics_from_predictions() {
        let m = ClassMetrics::from_predictions(&[1, 1, 0, 0], &[1, 0, 1, 0]);
        assert_eq!(m.accuracy, 0.5);
        assert_eq!(m.precision, 0.5);
        assert_eq!(m.recall, 0.5);
        assert_eq!(m.f1, 0.5);
    }

    #[test]
    fn split_is_deterministic_and_disjoint() {
        let (a, b) = split_indices(10, 0.3, 4);
        assert_eq!((a.clone(), b.clone()), split_indices(10, 0.3, 4));
        assert_eq!(b.len(), 3);
        assert!(a.iter().all(|i| !b.contains(i)));
    }

    #[test]
    fn surrogate_spec_bounds() {
        assert!(SurrogateSpec::new(0).validate().is_err());
        assert!(SurrogateSpec::new(4).validate().is_err());
        assert!(SurrogateSpec::new(3).validate().is_ok());
    }
}
