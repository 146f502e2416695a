use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, DatasetMeta};
use crate::error::{invalid, Result};
use crate::nn::{Modality, Sample};
use crate::rng::rng_from_seed;

/// Token reserved for padding and zero-embedding ablation in generated sequences.
pub const PAD_TOKEN: usize = 0;
/// Token reserved as the no-op opcode in generated sequences.
pub const NOOP_TOKEN: usize = 1;

fn half() -> f64 {
    0.5
}
fn one() -> f64 {
    1.0
}
fn tenth() -> f64 {
    0.1
}
fn one_usize() -> usize {
    1
}

/// Recipe for a synthetic dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SynthSpec {
    /// Binary feature vectors. Class 1 carries at least one of the first
    /// `planted` features, class 0 none. The next `benign` features are set
    /// at a class-dependent rate; all remaining features are background noise.
    DenseBinary {
        n: usize,
        d: usize,
        #[serde(default = "one_usize")]
        planted: usize,
        /// Probability that each planted feature is present in a positive sample
        /// (one of them is always present).
        #[serde(default = "one")]
        plant_strength: f64,
        #[serde(default)]
        benign: usize,
        #[serde(default)]
        benign_rate_negative: f64,
        #[serde(default)]
        benign_rate_positive: f64,
        #[serde(default = "tenth")]
        density: f64,
        #[serde(default = "half")]
        positive_fraction: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    /// Token sequences of fixed length. Class 1 contains the motif at a random
    /// position; background tokens never use motif tokens. Token 0 pads, token 1
    /// is a no-op.
    Sequence {
        n: usize,
        length: usize,
        vocab: usize,
        motif: Vec<usize>,
        /// Shortest unpadded length; shorter samples are padded with token 0.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        min_length: Option<usize>,
        #[serde(default = "half")]
        positive_fraction: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
}

impl SynthSpec {
    pub fn seed(&self) -> Option<u64> {
        match self {
            SynthSpec::DenseBinary { seed, .. } | SynthSpec::Sequence { seed, .. } => *seed,
        }
    }

    pub fn modality(&self) -> Modality {
        match self {
            SynthSpec::DenseBinary { .. } => Modality::DenseBinary,
            SynthSpec::Sequence { .. } => Modality::TokenSequence,
        }
    }

    /// Same recipe with a different sample count.
    pub fn with_n(&self, new_n: usize) -> Self {
        let mut s = self.clone();
        match &mut s {
            SynthSpec::DenseBinary { n, .. } | SynthSpec::Sequence { n, .. } => *n = new_n,
        }
        s
    }

    pub fn validate(&self) -> Result<()> {
        let prob = |p: f64| (0.0..=1.0).contains(&p);
        match self {
            SynthSpec::DenseBinary {
                n, d, planted, plant_strength, benign, benign_rate_negative, benign_rate_positive, density, positive_fraction, ..
            } => {
                if *n == 0 || *d == 0 {
                    return invalid("dataset needs n > 0 and d > 0");
                }
                if *planted == 0 || planted + benign > *d {
                    return invalid("need 1 <= planted and planted + benign <= d");
                }
                if ![*plant_strength, *benign_rate_negative, *benign_rate_positive, *density, *positive_fraction]
                    .into_iter()
                    .all(prob)
                {
                    return invalid("rates must lie in [0, 1]");
                }
            }
            SynthSpec::Sequence { n, length, vocab, motif, min_length, positive_fraction, .. } => {
                if *n == 0 || *length == 0 {
                    return invalid("dataset needs n > 0 and length > 0");
                }
                if motif.is_empty() || motif.len() > *length {
                    return invalid("motif must be non-empty and fit in the sequence");
                }
                if motif.iter().any(|&t| t < 2 || t >= *vocab) {
                    return invalid("motif tokens must lie in 2..vocab");
                }
                let mut distinct = motif.clone();
                distinct.sort_unstable();
                distinct.dedup();
                if *vocab < 3 + distinct.len() {
                    return invalid("vocabulary leaves no background tokens");
                }
                if min_length.is_some_and(|m| m < motif.len() || m > *length) {
                    return invalid("min_length must lie between the motif length and the sequence length");
                }
                if !prob(*positive_fraction) {
                    return invalid("positive_fraction must lie in [0, 1]");
                }
            }
        }
        Ok(())
    }
}

/// Generates a dataset from `spec`; `seed` is used when the spec has none.
pub fn synth_dataset(spec: &SynthSpec, seed: u64) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = rng_from_seed(spec.seed().unwrap_or(seed));
    match spec {
        SynthSpec::DenseBinary {
            n, d, planted, plant_strength, benign, benign_rate_negative, benign_rate_positive, density, positive_fraction, ..
        } => {
            let samples = (0..*n)
                .map(|i| {
                    let label = usize::from(rng.gen_bool(*positive_fraction));
                    let mut x = vec![0.0; *d];
                    if label == 1 {
                        for v in x.iter_mut().take(*planted) {
                            if rng.gen_bool(*plant_strength) {
                                *v = 1.0;
                            }
                        }
                        x[rng.gen_range(0..*planted)] = 1.0;
                    }
                    let rate = if label == 1 { *benign_rate_positive } else { *benign_rate_negative };
                    for v in &mut x[*planted..planted + benign] {
                        *v = f64::from(u8::from(rng.gen_bool(rate)));
                    }
                    for v in &mut x[planted + benign..] {
                        *v = f64::from(u8::from(rng.gen_bool(*density)));
                    }
                    Sample::dense(format!("s{i}"), x, label)
                })
                .collect();
            let names = (0..*d)
                .map(|j| {
                    if j < *planted {
                        format!("planted_{j}")
                    } else if j < planted + benign {
                        format!("benign_{}", j - planted)
                    } else {
                        format!("noise_{}", j - planted - benign)
                    }
                })
                .collect();
            let meta = DatasetMeta {
                modality: Modality::DenseBinary,
                n_features: *d,
                n_classes: 2,
                vocab_size: None,
                padding_token: None,
                noop_token: None,
                feature_names: names,
            };
            Dataset::new(meta, samples)
        }
        SynthSpec::Sequence { n, length, vocab, motif, min_length, positive_fraction, .. } => {
            let background: Vec<usize> = (2..*vocab).filter(|t| !motif.contains(t)).collect();
            let min_len = min_length.unwrap_or(*length);
            let samples = (0..*n)
                .map(|i| {
                    let label = usize::from(rng.gen_bool(*positive_fraction));
                    let used = rng.gen_range(min_len..=*length);
                    let mut t: Vec<usize> = (0..used).map(|_| *background.choose(&mut rng).expect("non-empty")).collect();
                    if label == 1 {
                        let at = rng.gen_range(0..=used - motif.len());
                        t[at..at + motif.len()].copy_from_slice(motif);
                    }
                    t.resize(*length, PAD_TOKEN);
                    Sample::tokens(format!("s{i}"), t, label)
                })
                .collect();
            let meta = DatasetMeta {
                modality: Modality::TokenSequence,
                n_features: *length,
                n_classes: 2,
                vocab_size: Some(*vocab),
                padding_token: Some(PAD_TOKEN),
                noop_token: Some(NOOP_TOKEN),
                feature_names: vec![],
            };
            Dataset::new(meta, samples)
        }
    }
}

/// Display name of a token id in generated sequences.
pub fn token_name(id: usize) -> String {
    match id {
        PAD_TOKEN => "<pad>".into(),
        NOOP_TOKEN => "<nop>".into(),
        _ => format!("t{id}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense() -> SynthSpec {
        serde_json::from_str(r#"{"kind":"dense-binary","n":50,"d":8,"benign":2,"benign_rate_negative":0.8}"#).unwrap()
    }

    #[test]
    fn planted_feature_marks_positives() {
        let ds = synth_dataset(&dense(), 3).unwrap();
        for s in &ds.samples {
            let x = s.input.as_dense().unwrap();
            assert_eq!(x[0] == 1.0, s.label == 1);
        }
        assert_eq!(ds.to_jsonl().unwrap(), synth_dataset(&dense(), 3).unwrap().to_jsonl().unwrap());
    }

    #[test]
    fn motif_only_in_positives() {
        let spec = SynthSpec::Sequence {
            n: 40,
            length: 12,
            vocab: 20,
            motif: vec![17, 18, 19],
            min_length: Some(8),
            positive_fraction: 0.5,
            seed: None,
        };
        let ds = synth_dataset(&spec, 1).unwrap();
        for s in &ds.samples {
            let t = s.input.as_tokens().unwrap();
            let has = t.windows(3).any(|w| w == [17, 18, 19]);
            assert_eq!(has, s.label == 1);
            assert!(t[..8].iter().all(|&v| v != PAD_TOKEN));
        }
    }

    #[test]
    fn empty_spec_is_rejected() {
        assert!(synth_dataset(&dense().with_n(0), 0).is_err());
    }
}
