use rand::distributions::{Distribution, WeightedIndex};
use serde::{Deserialize, Serialize};

use super::linalg::weighted_lstsq;
use super::perturb::{score_masks, PerturbationSet};
use super::{finish, Fit};
use crate::error::{invalid, Error, Result};
use crate::explain::{timed, Explainer, Explanation, Method};
use crate::metrics::AblationOperator;
use crate::nn::{Model, Sample};
use crate::rng::rng_from_seed;

/// Largest dimension for which full coalition enumeration is allowed.
pub const MAX_EXACT_DIM: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShapConfig {
    /// Number of sampled coalitions when `d > exact_threshold`.
    pub l: usize,
    /// Dimensions up to this value use all `2^d` coalitions.
    pub exact_threshold: usize,
    pub p_threshold: f64,
}

impl Default for ShapConfig {
    fn default() -> Self {
        Self { l: 500, exact_threshold: 10, p_threshold: 0.05 }
    }
}

impl ShapConfig {
    pub fn validate(&self) -> Result<()> {
        if self.l < 2 {
            return invalid("kernel shap needs at least two coalitions");
        }
        if self.exact_threshold > MAX_EXACT_DIM {
            return invalid(format!("exact_threshold may not exceed {MAX_EXACT_DIM}"));
        }
        if !(0.0..1.0).contains(&self.p_threshold) {
            return invalid("p_threshold must lie in [0, 1)");
        }
        Ok(())
    }
}

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn mask_of(bits: usize, d: usize) -> Vec<bool> {
    (0..d).map(|j| bits >> j & 1 == 1).collect()
}

/// Shapley-kernel regression with the empty and full coalitions imposed as
/// constraints: `phi_0 = v(empty)` is fixed and the last coefficient is
/// eliminated through `sum(phi) = v(full) - v(empty)`.
fn constrained_fit(masks: &[Vec<bool>], values: &[f64], weights: &[f64], v0: f64, vfull: f64) -> Result<Vec<f64>> {
    let d = masks.first().map_or(0, Vec::len);
    let delta = vfull - v0;
    if d == 1 {
        return Ok(vec![delta]);
    }
    let last = d - 1;
    let z = |b: bool| f64::from(u8::from(b));
    let rows: Vec<Vec<f64>> = masks.iter().map(|m| (0..last).map(|i| z(m[i]) - z(m[last])).collect()).collect();
    let y: Vec<f64> = masks.iter().zip(values).map(|(m, v)| v - v0 - z(m[last]) * delta).collect();
    let fit = weighted_lstsq(&rows, &y, weights)?;
    if !fit.full_rank {
        return Err(Error::SolverFailure("coalition design is rank deficient".into()));
    }
    let mut phi = fit.coef;
    let rest: f64 = phi.iter().sum();
    phi.push(delta - rest);
    Ok(phi)
}

/// Exact KernelSHAP from the values of all `2^d` coalitions, where bit `j`
/// of the index marks feature `j` as present.
pub fn kernel_shap_exact(values: &[f64], d: usize) -> Result<Vec<f64>> {
    if d == 0 || values.len() != 1 << d {
        return invalid("coalition table must hold 2^d values");
    }
    let full = (1 << d) - 1;
    let mut masks = Vec::with_capacity(full - 1);
    let mut vals = Vec::with_capacity(full - 1);
    let mut weights = Vec::with_capacity(full - 1);
    for bits in 1..full {
        let s = (bits as u32).count_ones() as usize;
        masks.push(mask_of(bits, d));
        vals.push(values[bits]);
        weights.push((d - 1) as f64 / (binom(d, s) * (s * (d - s)) as f64));
    }
    if d == 1 {
        return Ok(vec![values[1] - values[0]]);
    }
    constrained_fit(&masks, &vals, &weights, values[0], values[full])
}

fn all_masks(d: usize) -> Vec<Vec<bool>> {
    (0..1usize << d).map(|b| mask_of(b, d)).collect()
}

/// Classical Shapley values of `v(S) = f(x with features outside S removed)_class`,
/// by enumerating every coalition with factorial weights.
pub fn exact_shapley(model: &Model, sample: &Sample, class: usize) -> Result<Vec<f64>> {
    let d = sample.n_features();
    if d > MAX_EXACT_DIM {
        return Err(Error::DimensionTooLarge { dim: d, max: MAX_EXACT_DIM });
    }
    let op = AblationOperator::for_model(model)?;
    let (v, _) = score_masks(model, sample, class, &all_masks(d), op)?;
    // weight of a coalition of size s not containing i: s!(d-s-1)!/d!
    let w: Vec<f64> = (0..d).map(|s| 1.0 / (d as f64 * binom(d - 1, s))).collect();
    Ok((0..d)
        .map(|i| {
            let bit = 1usize << i;
            (0..1usize << d)
                .filter(|b| b & bit == 0)
                .map(|b| w[(b as u32).count_ones() as usize] * (v[b | bit] - v[b]))
                .sum()
        })
        .collect())
}

/// KernelSHAP. Small inputs enumerate every coalition; larger ones sample
/// coalition sizes from the Shapley kernel and members uniformly.
pub fn explain_shap(model: &Model, sample: &Sample, class: usize, cfg: &ShapConfig, seed: u64) -> Result<Explanation> {
    cfg.validate()?;
    let d = sample.n_features();
    let exact = d <= cfg.exact_threshold;
    if !exact && cfg.l < d + 2 {
        return invalid(format!("kernel shap needs at least d + 2 = {} coalitions", d + 2));
    }
    let op = AblationOperator::for_model(model)?;
    let original = model.predict(sample)?;
    timed(|| {
        let (p, fit) = if exact {
            let masks = all_masks(d);
            let (scores, labels) = score_masks(model, sample, class, &masks, op)?;
            let fit = if Fit::constant(&scores) { Fit::NoSignal } else { Fit::from(kernel_shap_exact(&scores, d)) };
            (PerturbationSet { masks, scores, labels, seed }, fit)
        } else {
            let mut rng = rng_from_seed(seed);
            let sizes: Vec<usize> = (1..d).collect();
            let kernel = WeightedIndex::new(sizes.iter().map(|&s| (d - 1) as f64 / (s * (d - s)) as f64))
                .map_err(|e| Error::SolverFailure(e.to_string()))?;
            let mut masks: Vec<Vec<bool>> = (0..cfg.l)
                .map(|_| {
                    let s = sizes[kernel.sample(&mut rng)];
                    let mut m = vec![false; d];
                    for j in rand::seq::index::sample(&mut rng, d, s) {
                        m[j] = true;
                    }
                    m
                })
                .collect();
            masks.push(vec![false; d]);
            masks.push(vec![true; d]);
            let (mut scores, mut labels) = score_masks(model, sample, class, &masks, op)?;
            let vfull = scores.pop().expect("full coalition");
            let v0 = scores.pop().expect("empty coalition");
            labels.truncate(cfg.l);
            masks.truncate(cfg.l);
            let fit = if Fit::constant(&scores) && v0 == vfull && scores.first() == Some(&v0) {
                Fit::NoSignal
            } else {
                Fit::from(constrained_fit(&masks, &scores, &vec![1.0; masks.len()], v0, vfull))
            };
            (PerturbationSet { masks, scores, labels, seed }, fit)
        };
        finish(Method::Shap, class, d, seed, &p, original, cfg.p_threshold, fit)
    })
}

#[derive(Debug, Clone, Default)]
pub struct ShapExplainer(pub ShapConfig);

impl Explainer for ShapExplainer {
    fn method(&self) -> Method {
        Method::Shap
    }

    fn explain(&self, model: &Model, sample: &Sample, class: usize, seed: u64) -> Result<Explanation> {
        explain_shap(model, sample, class, &self.0, seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn additive_game_gives_marginals() {
        // v(S) = sum_{i in S} a_i
        let a = [1.0, -2.0, 0.5];
        let v: Vec<f64> = (0..8).map(|b| (0..3).filter(|j| b >> j & 1 == 1).map(|j| a[j]).sum()).collect();
        let phi = kernel_shap_exact(&v, 3).unwrap();
        for (p, want) in phi.iter().zip(a) {
            assert!((p - want).abs() < 1e-12);
        }
    }

    #[test]
    fn pure_interaction_is_split_evenly() {
        // v = 1 only when both players are present
        let phi = kernel_shap_exact(&[0.0, 0.0, 0.0, 1.0], 2).unwrap();
        assert!((phi[0] - 0.5).abs() < 1e-12 && (phi[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn single_player() {
        assert_eq!(kernel_shap_exact(&[0.25, 1.0], 1).unwrap(), vec![0.75]);
        assert!(kernel_shap_exact(&[0.0; 3], 2).is_err());
    }
}
