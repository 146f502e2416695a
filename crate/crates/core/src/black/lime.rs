use serde::{Deserialize, Serialize};

use super::linalg::{weighted_lstsq, with_intercept};
use super::perturb::{gen_perturbations, PerturbationSet};
use super::{finish, Fit};
use crate::error::{invalid, Error, Result};
use crate::explain::{timed, Explainer, Explanation, Method};
use crate::metrics::AblationOperator;
use crate::nn::{Model, Sample};

/// Sample weighting for the local regression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Proximity {
    /// Cosine similarity between the mask and the all-ones mask.
    #[default]
    Cosine,
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LimeConfig {
    pub l: usize,
    pub proximity: Proximity,
    /// L1 weight; zero gives plain weighted least squares.
    pub alpha: f64,
    /// Minimum opposite-class fraction below which the output is flagged degenerate.
    pub p_threshold: f64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for LimeConfig {
    fn default() -> Self {
        Self { l: 500, proximity: Proximity::Cosine, alpha: 1e-3, p_threshold: 0.05, max_iter: 10_000, tol: 1e-10 }
    }
}

impl LimeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.l < 2 {
            return invalid("lime needs at least two perturbations");
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return invalid("lime alpha must be a non-negative number");
        }
        if !(0.0..1.0).contains(&self.p_threshold) {
            return invalid("p_threshold must lie in [0, 1)");
        }
        if self.max_iter == 0 || !(self.tol > 0.0) {
            return invalid("lime solver needs positive max_iter and tol");
        }
        Ok(())
    }
}

pub(crate) fn proximity_weights(masks: &[Vec<bool>], kind: Proximity) -> Vec<f64> {
    match kind {
        Proximity::Uniform => vec![1.0; masks.len()],
        Proximity::Cosine => masks
            .iter()
            .map(|m| {
                let kept = m.iter().filter(|&&b| b).count() as f64;
                (kept / m.len() as f64).sqrt()
            })
            .collect(),
    }
}

fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

/// Weighted lasso with an unpenalized intercept,
/// `min (1/2W) sum_i w_i (y_i - b - m_i . beta)^2 + alpha |beta|_1`, by cyclic
/// coordinate descent on weight-centred data. Returns `[b, beta..]`.
pub fn weighted_lasso(masks: &[Vec<bool>], y: &[f64], w: &[f64], alpha: f64, max_iter: usize, tol: f64) -> Result<Vec<f64>> {
    let n = masks.len();
    let d = masks.first().map_or(0, Vec::len);
    let wsum: f64 = w.iter().sum();
    if n == 0 || !(wsum > 0.0) {
        return Err(Error::SolverFailure("regression has no positive weights".into()));
    }
    if alpha == 0.0 {
        let fit = weighted_lstsq(&with_intercept(masks), y, w)?;
        if !fit.full_rank {
            return Err(Error::SolverFailure("rank-deficient perturbation design".into()));
        }
        return Ok(fit.coef);
    }
    let xbar: Vec<f64> = (0..d)
        .map(|j| masks.iter().zip(w).filter(|(m, _)| m[j]).map(|(_, wi)| wi).sum::<f64>() / wsum)
        .collect();
    let ybar = y.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / wsum;
    // column-major centred design
    let xc: Vec<Vec<f64>> =
        (0..d).map(|j| masks.iter().map(|m| f64::from(u8::from(m[j])) - xbar[j]).collect()).collect();
    let z: Vec<f64> = xc.iter().map(|c| c.iter().zip(w).map(|(x, wi)| wi * x * x).sum::<f64>() / wsum).collect();
    let mut r: Vec<f64> = y.iter().map(|v| v - ybar).collect();
    let mut beta = vec![0.0; d];
    for _ in 0..max_iter {
        let mut max_delta = 0.0f64;
        for j in 0..d {
            if z[j] <= 0.0 {
                continue;
            }
            let rho = xc[j].iter().zip(&r).zip(w).map(|((x, ri), wi)| wi * x * ri).sum::<f64>() / wsum + z[j] * beta[j];
            let new = soft_threshold(rho, alpha) / z[j];
            let delta = new - beta[j];
            if delta != 0.0 {
                for (ri, x) in r.iter_mut().zip(&xc[j]) {
                    *ri -= delta * x;
                }
                beta[j] = new;
                max_delta = max_delta.max(delta.abs());
            }
        }
        if max_delta < tol {
            break;
        }
    }
    if beta.iter().any(|b| !b.is_finite()) {
        return Err(Error::SolverFailure("lasso diverged".into()));
    }
    let b0 = ybar - xbar.iter().zip(&beta).map(|(a, b)| a * b).sum::<f64>();
    Ok(std::iter::once(b0).chain(beta).collect())
}

/// Fits the LIME surrogate on an existing perturbation set.
pub fn lime_fit(p: &PerturbationSet, cfg: &LimeConfig) -> Result<Vec<f64>> {
    let w = proximity_weights(&p.masks, cfg.proximity);
    Ok(weighted_lasso(&p.masks, &p.scores, &w, cfg.alpha, cfg.max_iter, cfg.tol)?[1..].to_vec())
}

/// LIME: sparse weighted linear regression from perturbation masks to the
/// class output.
pub fn explain_lime(model: &Model, sample: &Sample, class: usize, cfg: &LimeConfig, seed: u64) -> Result<Explanation> {
    cfg.validate()?;
    let op = AblationOperator::for_model(model)?;
    let original = model.predict(sample)?;
    timed(|| {
        let p = gen_perturbations(model, sample, class, cfg.l, seed, op)?;
        let fit = if Fit::constant(&p.scores) { Fit::NoSignal } else { Fit::from(lime_fit(&p, cfg)) };
        finish(Method::Lime, class, sample.n_features(), seed, &p, original, cfg.p_threshold, fit)
    })
}

#[derive(Debug, Clone, Default)]
pub struct LimeExplainer(pub LimeConfig);

impl Explainer for LimeExplainer {
    fn method(&self) -> Method {
        Method::Lime
    }

    fn explain(&self, model: &Model, sample: &Sample, class: usize, seed: u64) -> Result<Explanation> {
        explain_lime(model, sample, class, &self.0, seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_weight_is_sqrt_of_kept_fraction() {
        let w = proximity_weights(&[vec![true, true, false, false], vec![false; 4], vec![true; 4]], Proximity::Cosine);
        assert_eq!(w, vec![0.5f64.sqrt(), 0.0, 1.0]);
    }

    #[test]
    fn lasso_shrinks_and_zero_alpha_is_exact() {
        let masks: Vec<Vec<bool>> = (0..16).map(|i| (0..4).map(|j| i >> j & 1 == 1).collect()).collect();
        let y: Vec<f64> = masks.iter().map(|m| 0.5 + 2.0 * f64::from(u8::from(m[0])) - f64::from(u8::from(m[3]))).collect();
        let w = vec![1.0; 16];
        let exact = weighted_lasso(&masks, &y, &w, 0.0, 100, 1e-12).unwrap();
        for (c, want) in exact.iter().zip([0.5, 2.0, 0.0, 0.0, -1.0]) {
            assert!((c - want).abs() < 1e-10);
        }
        let tiny = weighted_lasso(&masks, &y, &w, 1e-9, 10_000, 1e-14).unwrap();
        for (a, b) in tiny.iter().zip(&exact) {
            assert!((a - b).abs() < 1e-7);
        }
        let big = weighted_lasso(&masks, &y, &w, 10.0, 10_000, 1e-14).unwrap();
        assert!(big[1..].iter().all(|&b| b == 0.0));
    }
}
