use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::nn::{Conv1d, Dense, Embedding, Layer, Lstm, MaxPool1d, Modality, Model};
use crate::rng::{rng_from_seed, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum HeadKind {
    #[default]
    Softmax,
    Sigmoid,
    None,
}

/// Architecture without weights; `instantiate` draws a seeded initialization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "arch", rename_all = "lowercase")]
pub enum ModelTemplate {
    /// Dense layers with ReLU between them; no hidden layers gives a linear model.
    Mlp {
        #[serde(default)]
        hidden: Vec<usize>,
        #[serde(default)]
        head: HeadKind,
        /// Embedding width for token inputs (flattened before the dense stack).
        #[serde(default, skip_serializing_if = "Option::is_none")]
        embed_dim: Option<usize>,
    },
    /// Conv1d, ReLU, max-pool, flatten, optional dense hidden layer.
    Cnn {
        channels: usize,
        width: usize,
        #[serde(default = "one")]
        stride: usize,
        pool: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        hidden: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        embed_dim: Option<usize>,
        #[serde(default)]
        head: HeadKind,
    },
    /// Embedding (for tokens), single LSTM, dense classifier on the final state.
    Lstm {
        hidden: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        embed_dim: Option<usize>,
        #[serde(default)]
        head: HeadKind,
    },
}

fn one() -> usize {
    1
}

/// Input description needed to size a template.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InputSpec {
    pub modality: Modality,
    pub n_features: usize,
    pub n_classes: usize,
    pub vocab_size: Option<usize>,
    /// Token whose embedding row is pinned at zero.
    pub padding_id: Option<usize>,
}

fn glorot(rng: &mut Rng, fan_in: usize, fan_out: usize, n: usize) -> Vec<f64> {
    let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
    (0..n).map(|_| rng.gen_range(-a..a)).collect()
}

impl ModelTemplate {
    pub fn linear() -> Self {
        ModelTemplate::Mlp { hidden: vec![], head: HeadKind::Softmax, embed_dim: None }
    }

    pub fn mlp(hidden: Vec<usize>) -> Self {
        ModelTemplate::Mlp { hidden, head: HeadKind::Softmax, embed_dim: None }
    }

    fn head(&self) -> HeadKind {
        match self {
            ModelTemplate::Mlp { head, .. } | ModelTemplate::Cnn { head, .. } | ModelTemplate::Lstm { head, .. } => {
                *head
            }
        }
    }

    fn embed_dim(&self) -> Option<usize> {
        match self {
            ModelTemplate::Mlp { embed_dim, .. }
            | ModelTemplate::Cnn { embed_dim, .. }
            | ModelTemplate::Lstm { embed_dim, .. } => *embed_dim,
        }
    }

    pub fn instantiate(&self, spec: &InputSpec, seed: u64) -> Result<Model> {
        let mut rng = rng_from_seed(seed);
        let mut layers = Vec::new();
        let dense = |rng: &mut Rng, out: usize, inp: usize| {
            Layer::Dense(Dense::new(out, inp, glorot(rng, inp, out, out * inp), vec![0.0; out]))
        };

        // (length, channels) of the current sequence activation
        let (len, mut ch) = match spec.modality {
            Modality::TokenSequence => {
                let vocab = match spec.vocab_size {
                    Some(v) if v > 0 => v,
                    _ => return invalid("token models need a vocabulary size"),
                };
                let dim = match self.embed_dim() {
                    Some(d) if d > 0 => d,
                    _ => return invalid("token models need a positive embed_dim"),
                };
                let mut w: Vec<f64> = (0..vocab * dim).map(|_| rng.gen_range(-0.5..0.5)).collect();
                if let Some(pad) = spec.padding_id {
                    if pad >= vocab {
                        return invalid("padding id outside vocabulary");
                    }
                    w[pad * dim..(pad + 1) * dim].iter_mut().for_each(|v| *v = 0.0);
                }
                layers.push(Layer::Embedding(Embedding { shape: [vocab, dim], weights: w, padding_id: spec.padding_id }));
                (spec.n_features, dim)
            }
            _ => (spec.n_features, 1),
        };
        let head = self.head();
        let outputs = if head == HeadKind::Sigmoid { 1 } else { spec.n_classes };
        if head == HeadKind::Sigmoid && spec.n_classes != 2 {
            return invalid("sigmoid head needs two classes");
        }

        let width = match self {
            ModelTemplate::Mlp { hidden, .. } => {
                let mut width = len * ch;
                if spec.modality == Modality::TokenSequence {
                    layers.push(Layer::Flatten);
                }
                for &h in hidden {
                    if h == 0 {
                        return invalid("hidden layer width must be positive");
                    }
                    layers.push(dense(&mut rng, h, width));
                    layers.push(Layer::Relu);
                    width = h;
                }
                width
            }
            ModelTemplate::Cnn { channels, width: kw, stride, pool, hidden, .. } => {
                if *channels == 0 || *kw == 0 || *stride == 0 || *pool == 0 || len < *kw {
                    return invalid("invalid cnn template");
                }
                let fan_in = ch * kw;
                layers.push(Layer::Conv1d(Conv1d {
                    shape: [*channels, ch, *kw],
                    weights: glorot(&mut rng, fan_in, *channels * kw, channels * ch * kw),
                    bias: vec![0.0; *channels],
                    stride: *stride,
                }));
                layers.push(Layer::Relu);
                let conv_len = (len - kw) / stride + 1;
                if conv_len < *pool {
                    return invalid("pool width larger than the convolved sequence");
                }
                layers.push(Layer::MaxPool1d(MaxPool1d { width: *pool }));
                layers.push(Layer::Flatten);
                ch = *channels;
                let mut width = (conv_len / pool) * ch;
                if let Some(h) = hidden {
                    layers.push(dense(&mut rng, *h, width));
                    layers.push(Layer::Relu);
                    width = *h;
                }
                width
            }
            ModelTemplate::Lstm { hidden, .. } => {
                if *hidden == 0 {
                    return invalid("lstm hidden size must be positive");
                }
                let cols = ch + hidden;
                let mut bias = vec![0.0; 4 * hidden];
                // forget-gate bias starts at one
                bias[*hidden..2 * hidden].iter_mut().for_each(|b| *b = 1.0);
                layers.push(Layer::Lstm(Lstm {
                    shape: [4 * hidden, cols],
                    weights: glorot(&mut rng, cols, *hidden, 4 * hidden * cols),
                    bias,
                }));
                *hidden
            }
        };
        layers.push(dense(&mut rng, outputs, width));
        match head {
            HeadKind::Softmax => layers.push(Layer::Softmax),
            HeadKind::Sigmoid => layers.push(Layer::Sigmoid),
            HeadKind::None => {}
        }
        Model::new(spec.modality, spec.n_classes, spec.n_features, layers)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_spec(d: usize) -> InputSpec {
        InputSpec { modality: Modality::DenseReal, n_features: d, n_classes: 2, vocab_size: None, padding_id: None }
    }

    #[test]
    fn templates_build_valid_models() {
        let mlp = ModelTemplate::mlp(vec![8, 4]).instantiate(&dense_spec(5), 1).unwrap();
        assert_eq!(mlp.layers().len(), 6);
        let cnn = ModelTemplate::Cnn { channels: 3, width: 3, stride: 1, pool: 2, hidden: Some(4), embed_dim: None, head: HeadKind::Sigmoid }
            .instantiate(&dense_spec(12), 1)
            .unwrap();
        assert_eq!(cnn.forward_input(&crate::nn::Input::Dense(vec![0.5; 12])).unwrap().len(), 2);
        let tok = InputSpec { modality: Modality::TokenSequence, n_features: 10, n_classes: 2, vocab_size: Some(20), padding_id: Some(0) };
        let lstm = ModelTemplate::Lstm { hidden: 4, embed_dim: Some(3), head: HeadKind::Softmax }.instantiate(&tok, 2).unwrap();
        assert!(lstm.embedding().unwrap().row(0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn same_seed_same_weights() {
        let t = ModelTemplate::mlp(vec![6]);
        assert_eq!(t.instantiate(&dense_spec(4), 9).unwrap(), t.instantiate(&dense_spec(4), 9).unwrap());
        assert_ne!(t.instantiate(&dense_spec(4), 9).unwrap(), t.instantiate(&dense_spec(4), 10).unwrap());
    }
}
