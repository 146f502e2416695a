//! Minimal layer engine: exact forward evaluation plus input and parameter
//! gradients for MLP, 1-D CNN and LSTM classifiers.

mod layer;
mod model;
mod tensor;

pub use layer::{Conv1d, Dense, Embedding, Layer, Lstm, MaxPool1d};
pub use model::{argmax, Head, Model, ParamGrads};
pub use tensor::Tensor;

pub(crate) use layer::{Cache, LstmCache};
pub(crate) use model::Trace;

use serde::{Deserialize, Serialize};

/// How a model reads its input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Modality {
    DenseBinary,
    DenseReal,
    TokenSequence,
}

impl Modality {
    pub fn is_dense(self) -> bool {
        !matches!(self, Modality::TokenSequence)
    }
}

impl std::fmt::Display for Modality {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Modality::DenseBinary => "dense-binary",
            Modality::DenseReal => "dense-real",
            Modality::TokenSequence => "token-sequence",
        })
    }
}

/// Raw sample input: a dense feature vector or a fixed-length token list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Input {
    #[serde(rename = "features")]
    Dense(Vec<f64>),
    #[serde(rename = "tokens")]
    Tokens(Vec<usize>),
}

impl Input {
    pub fn len(&self) -> usize {
        match self {
            Input::Dense(v) => v.len(),
            Input::Tokens(t) => t.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn as_dense(&self) -> Option<&[f64]> {
        match self {
            Input::Dense(v) => Some(v),
            Input::Tokens(_) => None,
        }
    }

    pub fn as_tokens(&self) -> Option<&[usize]> {
        match self {
            Input::Tokens(t) => Some(t),
            Input::Dense(_) => None,
        }
    }
}

/// One labelled example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub id: String,
    pub label: usize,
    #[serde(flatten)]
    pub input: Input,
}

impl Sample {
    pub fn dense(id: impl Into<String>, features: Vec<f64>, label: usize) -> Self {
        Self { id: id.into(), label, input: Input::Dense(features) }
    }

    pub fn tokens(id: impl Into<String>, tokens: Vec<usize>, label: usize) -> Self {
        Self { id: id.into(), label, input: Input::Tokens(tokens) }
    }

    /// Number of explainable features (tokens for sequences).
    pub fn n_features(&self) -> usize {
        self.input.len()
    }

    pub fn with_input(&self, input: Input) -> Self {
        Self { id: self.id.clone(), label: self.label, input }
    }
}
