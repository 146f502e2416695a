use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::explain::{timed, Explainer, Explanation, Method};
use crate::nn::{Cache, Head, Layer, Lstm, Model, Sample, Tensor, Trace};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LrpConfig {
    pub epsilon: f64,
}

impl Default for LrpConfig {
    fn default() -> Self {
        Self { epsilon: 1e-3 }
    }
}

impl LrpConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return invalid("lrp epsilon must be positive");
        }
        Ok(())
    }
}

/// Full result of one relevance pass.
#[derive(Debug, Clone, PartialEq)]
pub struct LrpTrace {
    /// Class score the pass started from.
    pub score: f64,
    /// Relevance sum at the input of every body layer, input first, output last.
    pub layer_sums: Vec<f64>,
    /// Relevance in body-input space (per embedding component for tokens).
    pub input_relevance: Tensor,
    /// Per-feature relevance (summed per token).
    pub relevance: Vec<f64>,
}

#[inline]
fn stab(z: f64, eps: f64) -> f64 {
    if z >= 0.0 {
        z + eps
    } else {
        z - eps
    }
}

/// Runs ε-LRP for one sample and returns relevance at every layer boundary.
pub fn lrp_trace(model: &Model, sample: &Sample, class: usize, cfg: &LrpConfig) -> Result<LrpTrace> {
    cfg.validate()?;
    model.check_class(class)?;
    let trace = model.run_body(model.embed_input(&sample.input)?)?;
    propagate(model, &trace, class, cfg.epsilon)
}

fn propagate(model: &Model, trace: &Trace, class: usize, eps: f64) -> Result<LrpTrace> {
    let out = trace.output().data();
    let score = model.scores_from_body(out)[class];
    let mut r = match model.head() {
        Head::Sigmoid => vec![score],
        _ => {
            let mut r = vec![0.0; out.len()];
            r[class] = out[class];
            r
        }
    };
    let n = trace.caches.len();
    let mut sums = vec![0.0; n + 1];
    sums[n] = r.iter().sum();
    for i in (0..n).rev() {
        let layer = &model.layers()[trace.start + i];
        let x = &trace.acts[i];
        let y = &trace.acts[i + 1];
        r = match layer {
            Layer::Dense(d) => {
                let [o_n, i_n] = d.shape;
                let mut rx = vec![0.0; i_n];
                for k in 0..o_n {
                    let q = r[k] / stab(y.data()[k], eps);
                    if q == 0.0 {
                        continue;
                    }
                    let row = &d.weights[k * i_n..(k + 1) * i_n];
                    for ((rj, w), a) in rx.iter_mut().zip(row).zip(x.data()) {
                        *rj += a * w * q;
                    }
                }
                rx
            }
            Layer::Relu | Layer::Flatten => r,
            Layer::Conv1d(c) => {
                let (len, in_ch) = x.as_matrix_dims();
                let [out_ch, _, width] = c.shape;
                let lo = c.out_len(len);
                let mut rx = vec![0.0; x.len()];
                for t in 0..lo {
                    let base = t * c.stride;
                    for o in 0..out_ch {
                        let q = r[t * out_ch + o] / stab(y.data()[t * out_ch + o], eps);
                        if q == 0.0 {
                            continue;
                        }
                        for k in 0..width {
                            let row = (base + k) * in_ch;
                            for ch in 0..in_ch {
                                rx[row + ch] += x.data()[row + ch] * c.weights[c.widx(o, ch, k)] * q;
                            }
                        }
                    }
                }
                rx
            }
            Layer::MaxPool1d(_) => {
                let Cache::MaxPool { argmax } = &trace.caches[i] else { unreachable!() };
                let mut rx = vec![0.0; x.len()];
                for (&src, rv) in argmax.iter().zip(&r) {
                    rx[src] += rv;
                }
                rx
            }
            Layer::Lstm(l) => {
                let Cache::Lstm(lc) = &trace.caches[i] else { unreachable!() };
                lstm_relevance(l, x, lc, &r, eps)
            }
            other => {
                return Err(Error::UnsupportedModel(format!("no relevance rule for {} layer", other.kind())));
            }
        };
        sums[i] = r.iter().sum();
    }
    let input_relevance = Tensor::new(trace.acts[0].shape().to_vec(), r)?;
    let relevance = model.sum_to_features(&input_relevance);
    Ok(LrpTrace { score, layer_sums: sums, input_relevance, relevance })
}

/// Recurrent relevance: the final hidden state passes everything to its cell,
/// cells split between the carried state and the candidate, and the candidate
/// hands its share to `[x_t ; h_{t-1}]` through its pre-activation. Gates get
/// nothing.
fn lstm_relevance(l: &Lstm, x: &Tensor, lc: &crate::nn::LstmCache, r_out: &[f64], eps: f64) -> Vec<f64> {
    let (steps, ni) = x.as_matrix_dims();
    let h_n = l.hidden();
    let cols = l.shape[1];
    let mut rx = vec![0.0; x.len()];
    let mut r_h = r_out.to_vec();
    let mut r_c = vec![0.0; h_n];
    for t in (0..steps).rev() {
        let a = &lc.gates[t];
        let c = &lc.cs[t + 1];
        let c_prev = &lc.cs[t];
        let h_prev = &lc.hs[t];
        let xt = &x.data()[t * ni..(t + 1) * ni];
        let mut r_h_prev = vec![0.0; h_n];
        let mut r_c_prev = vec![0.0; h_n];
        for j in 0..h_n {
            let rc = r_c[j] + r_h[j];
            let (i_g, f_g, g) = (a[j], a[h_n + j], a[2 * h_n + j]);
            let den = stab(c[j], eps);
            r_c_prev[j] = f_g * c_prev[j] / den * rc;
            let r_g = i_g * g / den * rc;
            let q = r_g / stab(lc.g_pre[t][j], eps);
            if q == 0.0 {
                continue;
            }
            let row = &l.weights[(2 * h_n + j) * cols..(2 * h_n + j + 1) * cols];
            for m in 0..ni {
                rx[t * ni + m] += xt[m] * row[m] * q;
            }
            for m in 0..h_n {
                r_h_prev[m] += h_prev[m] * row[ni + m] * q;
            }
        }
        r_h = r_h_prev;
        r_c = r_c_prev;
    }
    rx
}

/// ε-LRP relevance per input feature, starting from the class pre-activation score.
pub fn explain_lrp(model: &Model, sample: &Sample, class: usize, cfg: &LrpConfig) -> Result<Explanation> {
    timed(|| Ok(Explanation::new(Method::Lrp, class, lrp_trace(model, sample, class, cfg)?.relevance)))
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LrpExplainer(pub LrpConfig);

impl Explainer for LrpExplainer {
    fn method(&self) -> Method {
        Method::Lrp
    }

    fn explain(&self, model: &Model, sample: &Sample, class: usize, _seed: u64) -> Result<Explanation> {
        explain_lrp(model, sample, class, &self.0)
    }

    fn explain_batch(&self, model: &Model, samples: &[Sample], classes: &[usize], _seeds: &[u64]) -> Result<Vec<Explanation>> {
        self.0.validate()?;
        if samples.len() != classes.len() {
            return invalid("samples and classes differ in length");
        }
        for &c in classes {
            model.check_class(c)?;
        }
        let xs = samples.iter().map(|s| model.embed_input(&s.input)).collect::<Result<Vec<_>>>()?;
        let traces = model.run_body_batch(xs)?;
        traces
            .iter()
            .zip(classes)
            .map(|(t, &c)| Ok(Explanation::new(Method::Lrp, c, propagate(model, t, c, self.0.epsilon)?.relevance)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Dense, Modality};

    #[test]
    fn linear_bias_free_is_weight_times_input() {
        let m = Model::new(
            Modality::DenseReal,
            2,
            3,
            vec![Layer::Dense(Dense::new(2, 3, vec![1.0, -2.0, 0.5, 0.0, 1.0, 1.0], vec![0.0, 0.0]))],
        )
        .unwrap();
        let s = Sample::dense("s", vec![2.0, 1.0, 4.0], 0);
        let t = lrp_trace(&m, &s, 0, &LrpConfig { epsilon: 1e-9 }).unwrap();
        for (r, want) in t.relevance.iter().zip([2.0, -2.0, 2.0]) {
            assert!((r - want).abs() < 1e-8);
        }
        assert_eq!(t.score, 2.0);
    }

    #[test]
    fn maxpool_sends_everything_to_the_winner() {
        let m = Model::new(
            Modality::DenseReal,
            2,
            4,
            vec![
                Layer::MaxPool1d(crate::nn::MaxPool1d { width: 2 }),
                Layer::Flatten,
                Layer::Dense(Dense::new(2, 2, vec![1.0, 1.0, 0.0, 0.0], vec![0.0, 0.0])),
            ],
        )
        .unwrap();
        let s = Sample::dense("s", vec![1.0, 3.0, 2.0, 2.0], 0);
        let r = explain_lrp(&m, &s, 0, &LrpConfig { epsilon: 1e-12 }).unwrap().relevance;
        assert!(r[0] == 0.0 && r[3] == 0.0);
        assert!((r[1] - 3.0).abs() < 1e-9 && (r[2] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_nonpositive_epsilon() {
        let m = Model::new(Modality::DenseReal, 2, 1, vec![Layer::Dense(Dense::new(2, 1, vec![1.0, 1.0], vec![0.0, 0.0]))]).unwrap();
        let s = Sample::dense("s", vec![1.0], 0);
        assert!(explain_lrp(&m, &s, 0, &LrpConfig { epsilon: 0.0 }).is_err());
    }
}
