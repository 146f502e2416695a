//! Black-box explainers. They see the model only through its outputs on
//! perturbed inputs, where features are removed with the same ablation
//! operator the deletion metrics use.

mod lemna;
mod lime;
mod linalg;
mod perturb;
mod shap;
mod tv;

pub use lemna::{explain_lemna, fit_mixture, LemnaConfig, LemnaExplainer, MixtureFit};
pub use lime::{explain_lime, lime_fit, weighted_lasso, LimeConfig, LimeExplainer, Proximity};
pub use perturb::{gen_perturbations, opposite_fraction, score_masks, PerturbationSet};
pub use shap::{exact_shapley, explain_shap, kernel_shap_exact, ShapConfig, ShapExplainer, MAX_EXACT_DIM};
pub use tv::{total_variation, tv_prox};

use crate::error::Result;
use crate::explain::{Explanation, Method};

/// Outcome of a surrogate regression.
pub(crate) enum Fit {
    Coefficients(Vec<f64>),
    /// Every perturbation produced the same output.
    NoSignal,
    Failed,
}

impl Fit {
    pub(crate) fn constant(scores: &[f64]) -> bool {
        scores.windows(2).all(|w| w[0] == w[1])
    }
}

impl From<Result<Vec<f64>>> for Fit {
    fn from(r: Result<Vec<f64>>) -> Self {
        match r {
            Ok(v) => Fit::Coefficients(v),
            Err(_) => Fit::Failed,
        }
    }
}

/// Assembles a black-box explanation. Failed or signal-free fits yield a
/// zero vector; those and fits from perturbation sets with too few
/// opposite-class labels are flagged degenerate.
#[allow(clippy::too_many_arguments)]
pub(crate) fn finish(
    method: Method,
    class: usize,
    d: usize,
    seed: u64,
    p: &PerturbationSet,
    original: usize,
    p_threshold: f64,
    fit: Fit,
) -> Result<Explanation> {
    let opp = opposite_fraction(p, original);
    let (relevance, ok) = match fit {
        Fit::Coefficients(v) => (v, true),
        Fit::NoSignal | Fit::Failed => (vec![0.0; d], false),
    };
    let mut e = Explanation::new(method, class, relevance);
    e.degenerate = !ok || opp < p_threshold;
    e.seed = Some(seed);
    e.opposite_fraction = Some(opp);
    Ok(e)
}
