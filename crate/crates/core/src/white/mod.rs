//! White-box explainers: saliency gradients, integrated gradients and ε-LRP.

mod lrp;

pub use lrp::{explain_lrp, lrp_trace, LrpConfig, LrpExplainer, LrpTrace};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::explain::{timed, Explainer, Explanation, Method};
use crate::nn::{Modality, Model, Sample, Tensor};

/// Relevance is the input gradient of the class score (per-token reduced for sequences).
pub fn explain_gradients(model: &Model, sample: &Sample, class: usize) -> Result<Explanation> {
    timed(|| Ok(Explanation::new(Method::Gradients, class, model.input_gradient(sample, class)?)))
}

#[derive(Debug, Clone, Copy, Default)]
pub struct GradientsExplainer;

impl Explainer for GradientsExplainer {
    fn method(&self) -> Method {
        Method::Gradients
    }

    fn explain(&self, model: &Model, sample: &Sample, class: usize, _seed: u64) -> Result<Explanation> {
        explain_gradients(model, sample, class)
    }

    fn explain_batch(&self, model: &Model, samples: &[Sample], classes: &[usize], _seeds: &[u64]) -> Result<Vec<Explanation>> {
        if samples.len() != classes.len() {
            return invalid("samples and classes differ in length");
        }
        for &c in classes {
            model.check_class(c)?;
        }
        let xs = samples.iter().map(|s| model.embed_input(&s.input)).collect::<Result<Vec<_>>>()?;
        let traces = model.run_body_batch(xs)?;
        Ok(traces
            .iter()
            .zip(classes)
            .map(|(t, &c)| {
                let (g, _) = model.backward(t, model.score_seed(c), false);
                Explanation::new(Method::Gradients, c, model.reduce_to_features(&t.acts[0], g.data()))
            })
            .collect())
    }
}

/// Reference point of the integration path, in body-input space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Baseline {
    /// All zeros; for token models this is the zero embedding.
    #[default]
    Zero,
    /// Explicit values with the length of the body input.
    Values(Vec<f64>),
}

/// Riemann rule for the path integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Riemann {
    #[default]
    Midpoint,
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IgConfig {
    pub baseline: Baseline,
    pub steps: usize,
    pub rule: Riemann,
}

impl Default for IgConfig {
    fn default() -> Self {
        Self { baseline: Baseline::Zero, steps: 64, rule: Riemann::Midpoint }
    }
}

impl IgConfig {
    pub fn with_steps(steps: usize) -> Self {
        Self { steps, ..Self::default() }
    }

    /// 64 steps for dense inputs, 256 for embedded token sequences.
    pub fn for_modality(modality: Modality) -> Self {
        match modality {
            Modality::TokenSequence => Self::with_steps(256),
            _ => Self::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return invalid("integrated gradients needs at least one step");
        }
        Ok(())
    }

    fn alpha(&self, k: usize) -> f64 {
        let n = self.steps as f64;
        match self.rule {
            Riemann::Midpoint => (k as f64 + 0.5) / n,
            Riemann::Left => k as f64 / n,
            Riemann::Right => (k as f64 + 1.0) / n,
        }
    }
}

/// Integrated gradients along the straight path from the baseline to the
/// input. The completeness residual `|sum(r) - (f(x) - f(x'))|` on the
/// class score is stored in the explanation.
pub fn explain_ig(model: &Model, sample: &Sample, class: usize, cfg: &IgConfig) -> Result<Explanation> {
    cfg.validate()?;
    model.check_class(class)?;
    timed(|| {
        let x = model.embed_input(&sample.input)?;
        let base = match &cfg.baseline {
            Baseline::Zero => Tensor::zeros(x.shape().to_vec()),
            Baseline::Values(v) => {
                if v.len() != x.len() {
                    return invalid(format!("baseline has {} values, input has {}", v.len(), x.len()));
                }
                Tensor::new(x.shape().to_vec(), v.clone())?
            }
        };
        let diff: Vec<f64> = x.data().iter().zip(base.data()).map(|(a, b)| a - b).collect();
        let alphas: Vec<f64> = (0..cfg.steps).map(|k| cfg.alpha(k)).collect();
        let avg = match model.line_gradient_sum(base.data(), &diff, &alphas, class) {
            Some(sum) => sum?,
            None => {
                let path = alphas
                    .iter()
                    .map(|a| Tensor::new(x.shape().to_vec(), base.data().iter().zip(&diff).map(|(b, d)| b + a * d).collect()))
                    .collect::<Result<Vec<_>>>()?;
                let mut avg = vec![0.0; x.len()];
                for t in &model.run_body_batch(path)? {
                    let (g, _) = model.backward(t, model.score_seed(class), false);
                    for (a, gi) in avg.iter_mut().zip(g.data()) {
                        *a += gi;
                    }
                }
                avg
            }
        };
        let n = cfg.steps as f64;
        let attr: Vec<f64> = avg.iter().zip(&diff).map(|(a, d)| d * a / n).collect();
        let relevance = model.sum_to_features(&Tensor::new(x.shape().to_vec(), attr)?);
        let fx = model.scores_embedded(&x)?[class];
        let fb = model.scores_embedded(&base)?[class];
        let mut e = Explanation::new(Method::Ig, class, relevance);
        e.completeness_residual = Some((e.relevance.iter().sum::<f64>() - (fx - fb)).abs());
        Ok(e)
    })
}

#[derive(Debug, Clone, Default)]
pub struct IgExplainer(pub IgConfig);

impl Explainer for IgExplainer {
    fn method(&self) -> Method {
        Method::Ig
    }

    fn explain(&self, model: &Model, sample: &Sample, class: usize, _seed: u64) -> Result<Explanation> {
        explain_ig(model, sample, class, &self.0)
    }
}
