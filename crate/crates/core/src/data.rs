//! Datasets and their on-disk form: a JSON-lines file with one sample per
//! line, plus a small `.meta.json` sidecar carrying modality metadata.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::nn::{Input, Modality, Sample};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub modality: Modality,
    pub n_features: usize,
    pub n_classes: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vocab_size: Option<usize>,
    /// Reserved token with a pinned zero embedding; also used for padding.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub padding_token: Option<usize>,
    /// No-op opcode token for opcode-style ablation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noop_token: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub feature_names: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub meta: DatasetMeta,
    pub samples: Vec<Sample>,
}

impl Dataset {
    pub fn new(meta: DatasetMeta, samples: Vec<Sample>) -> Result<Self> {
        let ds = Self { meta, samples };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.meta;
        if m.n_classes < 2 {
            return invalid("dataset needs at least two classes");
        }
        if !m.feature_names.is_empty() && m.feature_names.len() != m.n_features {
            return invalid("feature_names length does not match n_features");
        }
        for s in &self.samples {
            if s.input.len() != m.n_features {
                return invalid(format!("sample {} has {} features, expected {}", s.id, s.input.len(), m.n_features));
            }
            if s.label >= m.n_classes {
                return invalid(format!("sample {} has label {} out of range", s.id, s.label));
            }
            match (&s.input, m.modality) {
                (Input::Dense(v), Modality::DenseBinary) if v.iter().any(|&x| x != 0.0 && x != 1.0) => {
                    return invalid(format!("sample {} is not binary", s.id))
                }
                (Input::Dense(_), Modality::DenseBinary | Modality::DenseReal) => {}
                (Input::Tokens(t), Modality::TokenSequence) => {
                    if let Some(v) = m.vocab_size {
                        if t.iter().any(|&id| id >= v) {
                            return invalid(format!("sample {} has a token outside the vocabulary", s.id));
                        }
                    }
                }
                _ => return invalid(format!("sample {} does not match modality {}", s.id, m.modality)),
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Name of feature `i`, falling back to `f{i}`.
    pub fn feature_name(&self, i: usize) -> String {
        self.meta.feature_names.get(i).cloned().unwrap_or_else(|| format!("f{i}"))
    }

    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset { meta: self.meta.clone(), samples: idx.iter().map(|&i| self.samples[i].clone()).collect() }
    }

    /// Serializes all samples as JSON lines.
    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for s in &self.samples {
            out.push_str(&serde_json::to_string(s)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(fs::File::create(path)?);
        w.write_all(self.to_jsonl()?.as_bytes())?;
        w.flush()?;
        fs::write(meta_path(path), serde_json::to_string_pretty(&self.meta)?)?;
        Ok(())
    }

    /// Loads `path` and its sidecar metadata.
    pub fn load(path: &Path) -> Result<Self> {
        let meta: DatasetMeta = serde_json::from_str(&fs::read_to_string(meta_path(path))?)?;
        Self::load_with_meta(path, meta)
    }

    pub fn load_with_meta(path: &Path, meta: DatasetMeta) -> Result<Self> {
        let reader = BufReader::new(fs::File::open(path)?);
        let mut samples = Vec::new();
        for line in reader.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            samples.push(serde_json::from_str(&line)?);
        }
        Dataset::new(meta, samples)
    }
}

/// `data.jsonl` -> `data.meta.json`.
pub fn meta_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.meta.json"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta() -> DatasetMeta {
        DatasetMeta {
            modality: Modality::DenseBinary,
            n_features: 2,
            n_classes: 2,
            vocab_size: None,
            padding_token: None,
            noop_token: None,
            feature_names: vec![],
        }
    }

    #[test]
    fn rejects_non_binary_and_bad_labels() {
        assert!(Dataset::new(meta(), vec![Sample::dense("a", vec![0.5, 1.0], 0)]).is_err());
        assert!(Dataset::new(meta(), vec![Sample::dense("a", vec![0.0, 1.0], 2)]).is_err());
        assert!(Dataset::new(meta(), vec![Sample::dense("a", vec![0.0], 0)]).is_err());
    }

    #[test]
    fn save_and_load() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.jsonl");
        let ds = Dataset::new(meta(), vec![Sample::dense("a", vec![0.0, 1.0], 1)]).unwrap();
        ds.save(&path).unwrap();
        assert!(dir.path().join("d.meta.json").exists());
        assert_eq!(Dataset::load(&path).unwrap(), ds);
    }
}
