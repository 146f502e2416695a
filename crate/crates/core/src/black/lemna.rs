use rand::seq::index::sample as sample_indices;
use serde::{Deserialize, Serialize};

use super::linalg::{weighted_lstsq, with_intercept};
use super::perturb::gen_perturbations;
use super::tv::{total_variation, tv_prox};
use super::{finish, Fit};
use crate::error::{invalid, Error, Result};
use crate::explain::{timed, Explainer, Explanation, Method};
use crate::metrics::AblationOperator;
use crate::nn::{argmax, Modality, Model, Sample};
use crate::rng::rng_from_seed;

const SIGMA2_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LemnaConfig {
    /// Number of mixture components.
    pub k: usize,
    /// Number of perturbations.
    pub l: usize,
    /// Fused-lasso bound; the fusion penalty weight is `1 / s`.
    pub s: f64,
    /// Explicit fusion penalty weight, overriding `1 / s` (zero disables fusion).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    pub em_iters: usize,
    pub tol: f64,
    /// Proximal-gradient iterations per coefficient update.
    pub prox_iters: usize,
    /// Smoothing of the initial hard cluster assignment.
    pub init_smoothing: f64,
    pub p_threshold: f64,
}

impl Default for LemnaConfig {
    fn default() -> Self {
        Self {
            k: 3,
            l: 500,
            s: 1e4,
            lambda: None,
            em_iters: 50,
            tol: 1e-6,
            prox_iters: 200,
            init_smoothing: 0.1,
            p_threshold: 0.05,
        }
    }
}

impl LemnaConfig {
    /// `S = 1e4` for unordered features, `S = 1e-3` for sequences.
    pub fn for_modality(modality: Modality) -> Self {
        match modality {
            Modality::TokenSequence => Self { s: 1e-3, ..Self::default() },
            _ => Self::default(),
        }
    }

    pub fn penalty(&self) -> f64 {
        self.lambda.unwrap_or(1.0 / self.s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return invalid("lemna needs at least one component");
        }
        if !(self.s > 0.0) {
            return invalid("lemna bound s must be positive");
        }
        if let Some(l) = self.lambda {
            if !(l >= 0.0 && l.is_finite()) {
                return invalid("lemna lambda must be a non-negative number");
            }
        }
        if self.l < self.k.max(2) {
            return invalid("lemna needs at least max(k, 2) perturbations");
        }
        if self.em_iters == 0 || self.prox_iters == 0 || !(self.tol > 0.0) {
            return invalid("lemna iteration counts and tol must be positive");
        }
        if !(0.0..=1.0).contains(&self.init_smoothing) || !(0.0..1.0).contains(&self.p_threshold) {
            return invalid("lemna smoothing must lie in [0, 1] and p_threshold in [0, 1)");
        }
        Ok(())
    }
}

/// Fitted mixture of linear regressions with its EM history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureFit {
    /// Per component `[intercept, beta_1..beta_d]`.
    pub beta: Vec<Vec<f64>>,
    pub pi: Vec<f64>,
    pub sigma2: Vec<f64>,
    /// Penalized log-likelihood after the initial fit and after every EM iteration.
    pub objective: Vec<f64>,
    /// Mixing weights after the initial fit and after every EM iteration.
    pub pi_history: Vec<Vec<f64>>,
    pub converged: bool,
}

impl MixtureFit {
    /// Component with the largest mixing weight; ties go to the lowest index.
    pub fn dominant(&self) -> usize {
        argmax(&self.pi)
    }
}

struct Problem<'a> {
    rows: Vec<Vec<f64>>,
    y: &'a [f64],
    lambda: f64,
    prox_iters: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn log_normal(r: f64, s2: f64) -> f64 {
    -0.5 * (r * r / s2 + (2.0 * std::f64::consts::PI * s2).ln())
}

fn logsumexp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

impl Problem<'_> {
    fn n(&self) -> usize {
        self.rows.len()
    }

    /// `log(pi_j N(y_i; x_i beta_j, sigma2_j))` for every sample and component.
    fn log_joint(&self, beta: &[Vec<f64>], pi: &[f64], sigma2: &[f64]) -> Vec<Vec<f64>> {
        self.rows
            .iter()
            .zip(self.y)
            .map(|(x, &y)| {
                (0..pi.len())
                    .map(|j| {
                        if pi[j] > 0.0 {
                            pi[j].ln() + log_normal(y - dot(x, &beta[j]), sigma2[j])
                        } else {
                            f64::NEG_INFINITY
                        }
                    })
                    .collect()
            })
            .collect()
    }

    fn objective(&self, beta: &[Vec<f64>], pi: &[f64], sigma2: &[f64]) -> f64 {
        let ll: f64 = self.log_joint(beta, pi, sigma2).iter().map(|r| logsumexp(r)).sum();
        ll - self.lambda * beta.iter().map(|b| total_variation(&b[1..])).sum::<f64>()
    }

    fn responsibilities(&self, beta: &[Vec<f64>], pi: &[f64], sigma2: &[f64]) -> Vec<Vec<f64>> {
        self.log_joint(beta, pi, sigma2)
            .into_iter()
            .map(|r| {
                let z = logsumexp(&r);
                r.iter().map(|v| (v - z).exp()).collect()
            })
            .collect()
    }

    /// Conditional maximization of one component: coefficients with the
    /// previous variance, then the variance with the new coefficients.
    fn update_component(&self, gamma: &[f64], beta: &mut Vec<f64>, sigma2: &mut f64) -> Result<()> {
        let nj: f64 = gamma.iter().sum();
        if nj <= 1e-12 {
            return Ok(());
        }
        if self.lambda == 0.0 {
            *beta = weighted_lstsq(&self.rows, self.y, gamma)?.coef;
        } else {
            self.prox_gradient(gamma, beta, *sigma2);
        }
        let rss: f64 = self.rows.iter().zip(self.y).zip(gamma).map(|((x, y), g)| g * (y - dot(x, beta)).powi(2)).sum();
        *sigma2 = (rss / nj).max(SIGMA2_FLOOR);
        Ok(())
    }

    /// Proximal gradient on `(1/2 s2) sum_i g_i (y_i - x_i b)^2 + lambda TV(b_1..)`,
    /// warm-started at `beta`; the step `1/L` with `L = trace(G)/s2` keeps every
    /// iterate from increasing the objective.
    fn prox_gradient(&self, gamma: &[f64], beta: &mut [f64], sigma2: f64) {
        let p = beta.len();
        let mut g = vec![0.0; p * p];
        let mut h = vec![0.0; p];
        for ((x, &y), &w) in self.rows.iter().zip(self.y).zip(gamma) {
            for a in 0..p {
                let wx = w * x[a];
                h[a] += wx * y;
                for b in 0..p {
                    g[a * p + b] += wx * x[b];
                }
            }
        }
        let trace: f64 = (0..p).map(|a| g[a * p + a]).sum();
        if !(trace > 0.0) {
            return;
        }
        let step = sigma2 / trace;
        for _ in 0..self.prox_iters {
            let mut z = vec![0.0; p];
            for a in 0..p {
                let grad = (dot(&g[a * p..(a + 1) * p], beta) - h[a]) / sigma2;
                z[a] = beta[a] - step * grad;
            }
            let fused = tv_prox(&z[1..], step * self.lambda);
            let mut change = (z[0] - beta[0]).abs();
            beta[0] = z[0];
            for (b, f) in beta[1..].iter_mut().zip(fused) {
                change = change.max((f - *b).abs());
                *b = f;
            }
            if change < 1e-13 {
                break;
            }
        }
    }
}

/// Seeded 1-D k-means; returns the cluster index of every value.
fn kmeans_1d(values: &[f64], k: usize, seed: u64) -> Vec<usize> {
    let mut rng = rng_from_seed(seed);
    let mut centers: Vec<f64> = sample_indices(&mut rng, values.len(), k).into_iter().map(|i| values[i]).collect();
    let mut assign = vec![0; values.len()];
    for _ in 0..100 {
        let mut changed = false;
        for (a, v) in assign.iter_mut().zip(values) {
            let mut best = 0;
            for c in 1..k {
                if (v - centers[c]).abs() < (v - centers[best]).abs() {
                    best = c;
                }
            }
            if *a != best {
                *a = best;
                changed = true;
            }
        }
        for (c, center) in centers.iter_mut().enumerate() {
            let members: Vec<f64> = values.iter().zip(&assign).filter(|(_, &a)| a == c).map(|(v, _)| *v).collect();
            if !members.is_empty() {
                *center = members.iter().sum::<f64>() / members.len() as f64;
            }
        }
        if !changed {
            break;
        }
    }
    assign
}

/// Fits a `K`-component mixture of linear regressions from masks to scores
/// by generalized EM with a total-variation (fused lasso) penalty on the
/// coefficients of each component.
pub fn fit_mixture(masks: &[Vec<bool>], y: &[f64], cfg: &LemnaConfig, seed: u64) -> Result<MixtureFit> {
    cfg.validate()?;
    if masks.len() != y.len() || masks.len() < cfg.k.max(2) {
        return invalid("mixture fit needs at least max(k, 2) perturbations with one score each");
    }
    let prob = Problem { rows: with_intercept(masks), y, lambda: cfg.penalty(), prox_iters: cfg.prox_iters };
    let n = prob.n();
    let k = cfg.k;
    let global = weighted_lstsq(&prob.rows, y, &vec![1.0; n])?.coef;
    let residuals: Vec<f64> = prob.rows.iter().zip(y).map(|(x, v)| v - dot(x, &global)).collect();
    let assign = kmeans_1d(&residuals, k, seed);
    let eta = cfg.init_smoothing;
    let mut gamma: Vec<Vec<f64>> = assign
        .iter()
        .map(|&a| (0..k).map(|j| if j == a { 1.0 - eta + eta / k as f64 } else { eta / k as f64 }).collect())
        .collect();

    let var0 = (residuals.iter().map(|r| r * r).sum::<f64>() / n as f64).max(SIGMA2_FLOOR);
    let mut beta = vec![global; k];
    let mut sigma2 = vec![var0; k];
    let mut pi = vec![1.0 / k as f64; k];
    let m_step = |gamma: &[Vec<f64>], beta: &mut [Vec<f64>], sigma2: &mut [f64], pi: &mut [f64]| -> Result<()> {
        for j in 0..k {
            let col: Vec<f64> = gamma.iter().map(|g| g[j]).collect();
            pi[j] = col.iter().sum::<f64>() / n as f64;
            prob.update_component(&col, &mut beta[j], &mut sigma2[j])?;
        }
        Ok(())
    };
    m_step(&gamma, &mut beta, &mut sigma2, &mut pi)?;
    let mut objective = vec![prob.objective(&beta, &pi, &sigma2)];
    let mut pi_history = vec![pi.clone()];
    let mut converged = false;
    for _ in 0..cfg.em_iters {
        gamma = prob.responsibilities(&beta, &pi, &sigma2);
        m_step(&gamma, &mut beta, &mut sigma2, &mut pi)?;
        let obj = prob.objective(&beta, &pi, &sigma2);
        if !obj.is_finite() {
            return Err(Error::NumericalFailure("mixture likelihood is not finite".into()));
        }
        let prev = *objective.last().expect("initial objective");
        objective.push(obj);
        pi_history.push(pi.clone());
        if (obj - prev).abs() <= cfg.tol * (1.0 + prev.abs()) {
            converged = true;
            break;
        }
    }
    Ok(MixtureFit { beta, pi, sigma2, objective, pi_history, converged })
}

/// LEMNA: coefficients of the dominant component of a fused-lasso mixture
/// regression fitted on perturbations.
pub fn explain_lemna(model: &Model, sample: &Sample, class: usize, cfg: &LemnaConfig, seed: u64) -> Result<Explanation> {
    cfg.validate()?;
    let op = AblationOperator::for_model(model)?;
    let original = model.predict(sample)?;
    timed(|| {
        let p = gen_perturbations(model, sample, class, cfg.l, seed, op)?;
        let mut em_converged = None;
        let fit = if Fit::constant(&p.scores) {
            Fit::NoSignal
        } else {
            match fit_mixture(&p.masks, &p.scores, cfg, seed ^ 0x6c_656d_6e61) {
                Ok(m) => {
                    em_converged = Some(m.converged);
                    Fit::Coefficients(m.beta[m.dominant()][1..].to_vec())
                }
                Err(_) => Fit::Failed,
            }
        };
        let mut e = finish(Method::Lemna, class, sample.n_features(), seed, &p, original, cfg.p_threshold, fit)?;
        e.em_converged = em_converged;
        Ok(e)
    })
}

#[derive(Debug, Clone, Default)]
pub struct LemnaExplainer(pub LemnaConfig);

impl Explainer for LemnaExplainer {
    fn method(&self) -> Method {
        Method::Lemna
    }

    fn explain(&self, model: &Model, sample: &Sample, class: usize, seed: u64) -> Result<Explanation> {
        explain_lemna(model, sample, class, &self.0, seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kmeans_separates_two_groups() {
        let v = [0.0, 0.1, -0.1, 10.0, 10.2, 9.9];
        let a = kmeans_1d(&v, 2, 3);
        assert!(a[0] == a[1] && a[1] == a[2] && a[3] == a[4] && a[4] == a[5] && a[0] != a[3]);
    }

    #[test]
    fn two_regimes_are_recovered() {
        let masks: Vec<Vec<bool>> = (0..64).map(|i| (0..3).map(|j| (i * 7 + j * 3) % 5 < 2 + (i & 1)).collect()).collect();
        let y: Vec<f64> = masks
            .iter()
            .enumerate()
            .map(|(i, m)| {
                let x: Vec<f64> = m.iter().map(|&b| f64::from(u8::from(b))).collect();
                if i % 4 == 0 { 5.0 - x[2] } else { x[0] + 2.0 * x[1] }
            })
            .collect();
        let cfg = LemnaConfig { k: 2, lambda: Some(0.0), ..LemnaConfig::default() };
        let fit = fit_mixture(&masks, &y, &cfg, 1).unwrap();
        assert!(fit.objective.windows(2).all(|w| w[1] >= w[0] - 1e-8));
        let b = &fit.beta[fit.dominant()];
        assert!((b[1] - 1.0).abs() < 1e-6 && (b[2] - 2.0).abs() < 1e-6, "{b:?}");
    }

    #[test]
    fn config_rules() {
        assert_eq!(LemnaConfig::for_modality(Modality::TokenSequence).s, 1e-3);
        assert_eq!(LemnaConfig::default().penalty(), 1e-4);
        assert!(LemnaConfig { k: 0, ..LemnaConfig::default() }.validate().is_err());
        assert!(LemnaConfig { s: 0.0, ..LemnaConfig::default() }.validate().is_err());
    }
}
