//! Explanation records and the common explainer interface.

use std::time::Instant;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::black::{LemnaConfig, LemnaExplainer, LimeConfig, LimeExplainer, ShapConfig, ShapExplainer};
use crate::error::Result;
use crate::nn::{Modality, Model, Sample};
use crate::rng::rng_from_seed;
use crate::white::{GradientsExplainer, IgConfig, IgExplainer, LrpConfig, LrpExplainer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Gradients,
    Ig,
    Lrp,
    Lime,
    Shap,
    Lemna,
    /// Uniformly random relevance; a reference point, not an explainer.
    Random,
}

impl Method {
    pub const ALL: [Method; 7] =
        [Method::Gradients, Method::Ig, Method::Lrp, Method::Lime, Method::Shap, Method::Lemna, Method::Random];

    pub fn id(self) -> &'static str {
        match self {
            Method::Gradients => "gradients",
            Method::Ig => "ig",
            Method::Lrp => "lrp",
            Method::Lime => "lime",
            Method::Shap => "shap",
            Method::Lemna => "lemna",
            Method::Random => "random",
        }
    }

    pub fn is_white_box(self) -> bool {
        matches!(self, Method::Gradients | Method::Ig | Method::Lrp)
    }

    pub fn is_deterministic(self) -> bool {
        self.is_white_box()
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.id())
    }
}

impl std::str::FromStr for Method {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.id() == s)
            .ok_or_else(|| crate::Error::InvalidInput(format!("unknown method `{s}`")))
    }
}

/// Relevance vector for one prediction, aligned 1:1 with the input features
/// (tokens for sequences).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub method: Method,
    pub target_class: usize,
    pub relevance: Vec<f64>,
    pub wall_time_s: f64,
    pub degenerate: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub opposite_fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub em_converged: Option<bool>,
    /// `|sum(r) - (f(x) - f(x'))|` for integrated gradients.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub completeness_residual: Option<f64>,
}

impl Explanation {
    pub fn new(method: Method, target_class: usize, relevance: Vec<f64>) -> Self {
        Self {
            method,
            target_class,
            relevance,
            wall_time_s: 0.0,
            degenerate: false,
            seed: None,
            opposite_fraction: None,
            em_converged: None,
            completeness_residual: None,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

/// Common interface of all explanation methods.
pub trait Explainer: Send + Sync {
    fn method(&self) -> Method;

    /// Explains the score of `class` for `sample`. Deterministic methods ignore `seed`.
    fn explain(&self, model: &Model, sample: &Sample, class: usize, seed: u64) -> Result<Explanation>;

    /// Explains many samples at once; entry `i` equals `explain(samples[i], classes[i], seeds[i])`
    /// in its relevance values.
    fn explain_batch(&self, model: &Model, samples: &[Sample], classes: &[usize], seeds: &[u64]) -> Result<Vec<Explanation>> {
        samples
            .iter()
            .zip(classes)
            .zip(seeds)
            .map(|((s, &c), &seed)| self.explain(model, s, c, seed))
            .collect()
    }
}

/// Runs `f` and stores its wall time in the explanation.
pub(crate) fn timed(f: impl FnOnce() -> Result<Explanation>) -> Result<Explanation> {
    let start = Instant::now();
    let mut e = f()?;
    e.wall_time_s = start.elapsed().as_secs_f64();
    Ok(e)
}

/// Uniform random relevance in `[-1, 1)`, seeded.
#[derive(Debug, Clone, Copy, Default)]
pub struct RandomExplainer;

impl Explainer for RandomExplainer {
    fn method(&self) -> Method {
        Method::Random
    }

    fn explain(&self, model: &Model, sample: &Sample, class: usize, seed: u64) -> Result<Explanation> {
        model.check_input(&sample.input)?;
        model.check_class(class)?;
        timed(|| {
            let mut rng = rng_from_seed(seed);
            let r = (0..sample.n_features()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut e = Explanation::new(Method::Random, class, r);
            e.seed = Some(seed);
            Ok(e)
        })
    }
}

/// Method selection plus its configuration, as written in benchmark configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum MethodConfig {
    Gradients,
    Ig(IgConfig),
    Lrp(LrpConfig),
    Lime(LimeConfig),
    Shap(ShapConfig),
    Lemna(LemnaConfig),
    Random,
}

impl MethodConfig {
    /// Default configuration for `method` on a given input modality.
    pub fn default_for(method: Method, modality: Modality) -> Self {
        match method {
            Method::Gradients => MethodConfig::Gradients,
            Method::Ig => MethodConfig::Ig(IgConfig::for_modality(modality)),
            Method::Lrp => MethodConfig::Lrp(LrpConfig::default()),
            Method::Lime => MethodConfig::Lime(LimeConfig::default()),
            Method::Shap => MethodConfig::Shap(ShapConfig::default()),
            Method::Lemna => MethodConfig::Lemna(LemnaConfig::for_modality(modality)),
            Method::Random => MethodConfig::Random,
        }
    }

    pub fn method(&self) -> Method {
        match self {
            MethodConfig::Gradients => Method::Gradients,
            MethodConfig::Ig(_) => Method::Ig,
            MethodConfig::Lrp(_) => Method::Lrp,
            MethodConfig::Lime(_) => Method::Lime,
            MethodConfig::Shap(_) => Method::Shap,
            MethodConfig::Lemna(_) => Method::Lemna,
            MethodConfig::Random => Method::Random,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            MethodConfig::Ig(c) => c.validate(),
            MethodConfig::Lrp(c) => c.validate(),
            MethodConfig::Lime(c) => c.validate(),
            MethodConfig::Shap(c) => c.validate(),
            MethodConfig::Lemna(c) => c.validate(),
            MethodConfig::Gradients | MethodConfig::Random => Ok(()),
        }
    }

    pub fn build(&self) -> Box<dyn Explainer> {
        match self {
            MethodConfig::Gradients => Box::new(GradientsExplainer),
            MethodConfig::Ig(c) => Box::new(IgExplainer(c.clone())),
            MethodConfig::Lrp(c) => Box::new(LrpExplainer(*c)),
            MethodConfig::Lime(c) => Box::new(LimeExplainer(c.clone())),
            MethodConfig::Shap(c) => Box::new(ShapExplainer(c.clone())),
            MethodConfig::Lemna(c) => Box::new(LemnaExplainer(c.clone())),
            MethodConfig::Random => Box::new(RandomExplainer),
        }
    }
}
