use serde::{Deserialize, Serialize};

use crate::data::DatasetMeta;
use crate::error::{invalid, Result};
use crate::nn::{Input, Modality, Model, Sample};

/// Modality-specific feature removal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum AblationOperator {
    /// Dense features are set to zero.
    Zero,
    /// Tokens are replaced by a no-op opcode.
    Opcode { noop_token: usize },
    /// Tokens are replaced by the reserved token whose embedding is zero.
    ZeroEmbedding { token: usize },
}

impl AblationOperator {
    /// Default operator for a model: zeroing for dense inputs, the zero-embedding
    /// token for sequence models with a padding row.
    pub fn for_model(model: &Model) -> Result<Self> {
        match model.modality() {
            Modality::DenseBinary | Modality::DenseReal => Ok(AblationOperator::Zero),
            Modality::TokenSequence => match model.embedding().and_then(|e| e.padding_id) {
                Some(token) => Ok(AblationOperator::ZeroEmbedding { token }),
                None => invalid("sequence model has no zero-embedding token to ablate with"),
            },
        }
    }

    /// Operator from dataset metadata; the zero-embedding token wins over the no-op opcode.
    pub fn from_meta(meta: &DatasetMeta) -> Result<Self> {
        match meta.modality {
            Modality::DenseBinary | Modality::DenseReal => Ok(AblationOperator::Zero),
            Modality::TokenSequence => match (meta.padding_token, meta.noop_token) {
                (Some(token), _) => Ok(AblationOperator::ZeroEmbedding { token }),
                (None, Some(noop_token)) => Ok(AblationOperator::Opcode { noop_token }),
                (None, None) => invalid("sequence dataset declares neither padding nor no-op token"),
            },
        }
    }

    fn replacement_token(self) -> Option<usize> {
        match self {
            AblationOperator::Zero => None,
            AblationOperator::Opcode { noop_token } => Some(noop_token),
            AblationOperator::ZeroEmbedding { token } => Some(token),
        }
    }

    /// Removes the features where `keep[i]` is false.
    pub fn apply_mask(self, input: &Input, keep: &[bool]) -> Result<Input> {
        if keep.len() != input.len() {
            return invalid(format!("mask has {} entries, input has {}", keep.len(), input.len()));
        }
        match (input, self.replacement_token()) {
            (Input::Dense(v), None) => {
                Ok(Input::Dense(v.iter().zip(keep).map(|(&x, &k)| if k { x } else { 0.0 }).collect()))
            }
            (Input::Tokens(t), Some(r)) => {
                Ok(Input::Tokens(t.iter().zip(keep).map(|(&x, &k)| if k { x } else { r }).collect()))
            }
            (Input::Dense(_), Some(_)) => invalid("token ablation applied to a dense input"),
            (Input::Tokens(_), None) => invalid("zeroing ablation applied to a token sequence"),
        }
    }

    /// Removes the listed features; duplicates are ignored.
    pub fn apply(self, input: &Input, indices: &[usize]) -> Result<Input> {
        let mut keep = vec![true; input.len()];
        for &i in indices {
            if i >= keep.len() {
                return invalid(format!("feature index {i} out of range for {} features", keep.len()));
            }
            keep[i] = false;
        }
        self.apply_mask(input, &keep)
    }
}

/// Copy of `sample` with the features in `indices` removed.
pub fn apply_ablation(sample: &Sample, indices: &[usize], op: AblationOperator) -> Result<Sample> {
    Ok(sample.with_input(op.apply(&sample.input, indices)?))
}
