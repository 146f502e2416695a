//! Layer kinds and their exact forward/backward passes.
//!
//! Sequence activations are laid out time-major as `[length, channels]`.
//! A rank-1 input to a sequence layer is read as `[length, 1]`.

use serde::{Deserialize, Serialize};

use super::tensor::Tensor;
use crate::error::{invalid, Result};

/// Fully connected layer, `weights` has shape `[out, in]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub shape: [usize; 2],
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Valid-padding 1-D convolution, `weights` has shape `[out_ch, in_ch, width]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conv1d {
    pub shape: [usize; 3],
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    #[serde(default = "one")]
    pub stride: usize,
}

/// Non-overlapping max pooling along the time axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxPool1d {
    pub width: usize,
}

/// Token lookup table, `weights` has shape `[vocab, dim]`.
///
/// The row at `padding_id` is held at zero and never trained; it is the
/// reserved zero-embedding token used for ablation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    pub shape: [usize; 2],
    pub weights: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub padding_id: Option<usize>,
}

/// Single-direction LSTM returning the final hidden state.
///
/// `weights` has shape `[4 * hidden, input + hidden]` with gate blocks in the
/// order input, forget, cell candidate, output; columns are `[x_t ; h_{t-1}]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lstm {
    pub shape: [usize; 2],
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Layer {
    Dense(Dense),
    Relu,
    Sigmoid,
    Softmax,
    Conv1d(Conv1d),
    MaxPool1d(MaxPool1d),
    Embedding(Embedding),
    Lstm(Lstm),
    Flatten,
}

/// Values saved during the forward pass that the backward pass needs.
#[derive(Debug, Clone)]
pub(crate) enum Cache {
    None,
    MaxPool { argmax: Vec<usize> },
    Lstm(LstmCache),
}

#[derive(Debug, Clone)]
pub(crate) struct LstmCache {
    /// Hidden states `h_0..=h_T`.
    pub hs: Vec<Vec<f64>>,
    /// Cell states `c_0..=c_T`.
    pub cs: Vec<Vec<f64>>,
    /// Gate activations per step, `[i | f | g | o]`, each block `hidden` wide.
    pub gates: Vec<Vec<f64>>,
    /// Pre-activations of the cell candidate per step.
    pub g_pre: Vec<Vec<f64>>,
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl Layer {
    pub fn kind(&self) -> &'static str {
        match self {
            Layer::Dense(_) => "dense",
            Layer::Relu => "relu",
            Layer::Sigmoid => "sigmoid",
            Layer::Softmax => "softmax",
            Layer::Conv1d(_) => "conv1d",
            Layer::MaxPool1d(_) => "maxpool1d",
            Layer::Embedding(_) => "embedding",
            Layer::Lstm(_) => "lstm",
            Layer::Flatten => "flatten",
        }
    }

    /// Checks parameter sizes and returns the output shape for `input`.
    pub(crate) fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        let seq = |input: &[usize]| -> Result<(usize, usize)> {
            match input {
                [l] => Ok((*l, 1)),
                [l, c] => Ok((*l, *c)),
                _ => invalid(format!("{} expects a rank-1 or rank-2 input, got {input:?}", self.kind())),
            }
        };
        match self {
            Layer::Dense(d) => {
                let [out, inp] = d.shape;
                check_len("dense weights", d.weights.len(), out * inp)?;
                check_len("dense bias", d.bias.len(), out)?;
                if input != [inp] {
                    return invalid(format!("dense layer expects input [{inp}], got {input:?}"));
                }
                Ok(vec![out])
            }
            Layer::Relu | Layer::Sigmoid | Layer::Softmax => Ok(input.to_vec()),
            Layer::Conv1d(c) => {
                let [out_ch, in_ch, width] = c.shape;
                check_len("conv1d weights", c.weights.len(), out_ch * in_ch * width)?;
                check_len("conv1d bias", c.bias.len(), out_ch)?;
                if c.stride == 0 || width == 0 {
                    return invalid("conv1d stride and width must be positive");
                }
                let (l, ch) = seq(input)?;
                if ch != in_ch || l < width {
                    return invalid(format!(
                        "conv1d with shape {:?} cannot consume input {input:?}",
                        c.shape
                    ));
                }
                Ok(vec![(l - width) / c.stride + 1, out_ch])
            }
            Layer::MaxPool1d(p) => {
                let (l, ch) = seq(input)?;
                if p.width == 0 || l < p.width {
                    return invalid(format!("maxpool width {} does not fit input {input:?}", p.width));
                }
                Ok(vec![l / p.width, ch])
            }
            Layer::Embedding(e) => {
                let [vocab, dim] = e.shape;
                check_len("embedding weights", e.weights.len(), vocab * dim)?;
                if let Some(pad) = e.padding_id {
                    if pad >= vocab {
                        return invalid("embedding padding_id out of range");
                    }
                }
                match input {
                    [t] => Ok(vec![*t, dim]),
                    _ => invalid("embedding expects a token sequence"),
                }
            }
            Layer::Lstm(r) => {
                let hidden = r.hidden();
                if r.shape[0] % 4 != 0 || r.shape[1] <= hidden {
                    return invalid(format!("lstm weight shape {:?} is malformed", r.shape));
                }
                check_len("lstm weights", r.weights.len(), r.shape[0] * r.shape[1])?;
                check_len("lstm bias", r.bias.len(), r.shape[0])?;
                let (_, ch) = seq(input)?;
                if ch != r.input_size() {
                    return invalid(format!("lstm expects {} input channels, got {ch}", r.input_size()));
                }
                Ok(vec![hidden])
            }
            Layer::Flatten => Ok(vec![input.iter().product()]),
        }
    }

    pub(crate) fn params(&self) -> Vec<&[f64]> {
        match self {
            Layer::Dense(d) => vec![&d.weights, &d.bias],
            Layer::Conv1d(c) => vec![&c.weights, &c.bias],
            Layer::Lstm(r) => vec![&r.weights, &r.bias],
            Layer::Embedding(e) => vec![&e.weights],
            _ => vec![],
        }
    }

    pub(crate) fn params_mut(&mut self) -> Vec<&mut Vec<f64>> {
        match self {
            Layer::Dense(d) => vec![&mut d.weights, &mut d.bias],
            Layer::Conv1d(c) => vec![&mut c.weights, &mut c.bias],
            Layer::Lstm(r) => vec![&mut r.weights, &mut r.bias],
            Layer::Embedding(e) => vec![&mut e.weights],
            _ => vec![],
        }
    }

    /// Forward pass for every tensor-valued layer (not embedding, not heads).
    pub(crate) fn forward(&self, x: &Tensor) -> (Tensor, Cache) {
        match self {
            Layer::Dense(d) => (Tensor::vector(d.apply(x.data())), Cache::None),
            Layer::Relu => {
                let data = x.data().iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect();
                (Tensor::from_parts(x.shape().to_vec(), data), Cache::None)
            }
            Layer::Conv1d(c) => (c.forward(x), Cache::None),
            Layer::MaxPool1d(p) => {
                let (y, argmax) = p.forward(x);
                (y, Cache::MaxPool { argmax })
            }
            Layer::Lstm(r) => {
                let cache = r.run(x);
                let h = cache.hs.last().cloned().unwrap_or_default();
                (Tensor::vector(h), Cache::Lstm(cache))
            }
            Layer::Flatten => (x.clone().reshaped(vec![x.len()]), Cache::None),
            Layer::Sigmoid | Layer::Softmax | Layer::Embedding(_) => {
                unreachable!("{} is not a body layer", self.kind())
            }
        }
    }

    /// Backward pass: returns the input gradient and, if requested, the
    /// parameter gradients in `params()` order.
    pub(crate) fn backward(
        &self,
        x: &Tensor,
        cache: &Cache,
        dy: &Tensor,
        want_params: bool,
    ) -> (Tensor, Option<Vec<Vec<f64>>>) {
        match self {
            Layer::Dense(d) => {
                let [out, inp] = d.shape;
                let mut dx = vec![0.0; inp];
                for o in 0..out {
                    let g = dy.data()[o];
                    let row = &d.weights[o * inp..(o + 1) * inp];
                    for (dxi, w) in dx.iter_mut().zip(row) {
                        *dxi += w * g;
                    }
                }
                let grads = want_params.then(|| {
                    let mut dw = vec![0.0; out * inp];
                    for o in 0..out {
                        let g = dy.data()[o];
                        for (dwi, xi) in dw[o * inp..(o + 1) * inp].iter_mut().zip(x.data()) {
                            *dwi = g * xi;
                        }
                    }
                    vec![dw, dy.data().to_vec()]
                });
                (Tensor::from_parts(x.shape().to_vec(), dx), grads)
            }
            Layer::Relu => {
                let dx = x
                    .data()
                    .iter()
                    .zip(dy.data())
                    .map(|(&v, &g)| if v > 0.0 { g } else { 0.0 })
                    .collect();
                (Tensor::from_parts(x.shape().to_vec(), dx), want_params.then(Vec::new))
            }
            Layer::Conv1d(c) => {
                let (dx, grads) = c.backward(x, dy, want_params);
                (dx, grads)
            }
            Layer::MaxPool1d(_) => {
                let Cache::MaxPool { argmax } = cache else { unreachable!() };
                let mut dx = vec![0.0; x.len()];
                for (&src, &g) in argmax.iter().zip(dy.data()) {
                    dx[src] += g;
                }
                (Tensor::from_parts(x.shape().to_vec(), dx), want_params.then(Vec::new))
            }
            Layer::Lstm(r) => {
                let Cache::Lstm(lc) = cache else { unreachable!() };
                r.backward(x, lc, dy.data(), want_params)
            }
            Layer::Flatten => (
                Tensor::from_parts(x.shape().to_vec(), dy.data().to_vec()),
                want_params.then(Vec::new),
            ),
            Layer::Sigmoid | Layer::Softmax | Layer::Embedding(_) => {
                unreachable!("{} is not a body layer", self.kind())
            }
        }
    }
}

fn check_len(what: &str, got: usize, want: usize) -> Result<()> {
    if got != want {
        return invalid(format!("{what}: expected {want} values, got {got}"));
    }
    Ok(())
}

impl Dense {
    pub fn new(out: usize, inp: usize, weights: Vec<f64>, bias: Vec<f64>) -> Self {
        Self { shape: [out, inp], weights, bias }
    }

    pub fn out_dim(&self) -> usize {
        self.shape[0]
    }

    pub fn in_dim(&self) -> usize {
        self.shape[1]
    }

    /// Pre-bias contribution sum, then bias, in a fixed order.
    pub(crate) fn apply(&self, x: &[f64]) -> Vec<f64> {
        let inp = self.in_dim();
        (0..self.out_dim())
            .map(|o| {
                let row = &self.weights[o * inp..(o + 1) * inp];
                let mut acc = 0.0;
                for (w, xi) in row.iter().zip(x) {
                    acc += w * xi;
                }
                acc + self.bias[o]
            })
            .collect()
    }
}

impl Conv1d {
    #[inline]
    pub(crate) fn widx(&self, o: usize, c: usize, k: usize) -> usize {
        let [_, in_ch, width] = self.shape;
        (o * in_ch + c) * width + k
    }

    pub(crate) fn out_len(&self, len: usize) -> usize {
        (len - self.shape[2]) / self.stride + 1
    }

    fn forward(&self, x: &Tensor) -> Tensor {
        let (len, in_ch) = x.as_matrix_dims();
        let [out_ch, _, width] = self.shape;
        let lo = self.out_len(len);
        let xd = x.data();
        let mut y = vec![0.0; lo * out_ch];
        for t in 0..lo {
            let base = t * self.stride;
            for o in 0..out_ch {
                let mut acc = 0.0;
                for k in 0..width {
                    let row = (base + k) * in_ch;
                    for c in 0..in_ch {
                        acc += self.weights[self.widx(o, c, k)] * xd[row + c];
                    }
                }
                y[t * out_ch + o] = acc + self.bias[o];
            }
        }
        Tensor::from_parts(vec![lo, out_ch], y)
    }

    fn backward(&self, x: &Tensor, dy: &Tensor, want_params: bool) -> (Tensor, Option<Vec<Vec<f64>>>) {
        let (len, in_ch) = x.as_matrix_dims();
        let [out_ch, _, width] = self.shape;
        let lo = self.out_len(len);
        let xd = x.data();
        let gd = dy.data();
        let mut dx = vec![0.0; x.len()];
        let mut dw = if want_params { vec![0.0; self.weights.len()] } else { Vec::new() };
        let mut db = if want_params { vec![0.0; out_ch] } else { Vec::new() };
        for t in 0..lo {
            let base = t * self.stride;
            for o in 0..out_ch {
                let g = gd[t * out_ch + o];
                if want_params {
                    db[o] += g;
                }
                for k in 0..width {
                    let row = (base + k) * in_ch;
                    for c in 0..in_ch {
                        let wi = self.widx(o, c, k);
                        dx[row + c] += self.weights[wi] * g;
                        if want_params {
                            dw[wi] += xd[row + c] * g;
                        }
                    }
                }
            }
        }
        (
            Tensor::from_parts(x.shape().to_vec(), dx),
            want_params.then(|| vec![dw, db]),
        )
    }
}

impl MaxPool1d {
    fn forward(&self, x: &Tensor) -> (Tensor, Vec<usize>) {
        let (len, ch) = x.as_matrix_dims();
        let lo = len / self.width;
        let xd = x.data();
        let mut y = vec![0.0; lo * ch];
        let mut argmax = vec![0; lo * ch];
        for t in 0..lo {
            for c in 0..ch {
                let mut best = (t * self.width) * ch + c;
                for k in 1..self.width {
                    let idx = (t * self.width + k) * ch + c;
                    // strict comparison keeps the lowest index on ties
                    if xd[idx] > xd[best] {
                        best = idx;
                    }
                }
                y[t * ch + c] = xd[best];
                argmax[t * ch + c] = best;
            }
        }
        (Tensor::from_parts(vec![lo, ch], y), argmax)
    }
}

impl Embedding {
    pub fn vocab(&self) -> usize {
        self.shape[0]
    }

    pub fn dim(&self) -> usize {
        self.shape[1]
    }

    pub fn row(&self, token: usize) -> &[f64] {
        let d = self.dim();
        &self.weights[token * d..(token + 1) * d]
    }

    pub(crate) fn embed(&self, tokens: &[usize]) -> Tensor {
        let mut data = Vec::with_capacity(tokens.len() * self.dim());
        for &t in tokens {
            data.extend_from_slice(self.row(t));
        }
        Tensor::from_parts(vec![tokens.len(), self.dim()], data)
    }

    pub(crate) fn param_grad(&self, tokens: &[usize], dy: &Tensor) -> Vec<f64> {
        let d = self.dim();
        let mut dw = vec![0.0; self.weights.len()];
        for (t, &tok) in tokens.iter().enumerate() {
            if Some(tok) == self.padding_id {
                continue;
            }
            for j in 0..d {
                dw[tok * d + j] += dy.data()[t * d + j];
            }
        }
        dw
    }
}

impl Lstm {
    pub fn hidden(&self) -> usize {
        self.shape[0] / 4
    }

    pub fn input_size(&self) -> usize {
        self.shape[1] - self.hidden()
    }

    /// Pre-activations `W [x ; h] + b` for one step.
    pub(crate) fn preact(&self, x: &[f64], h: &[f64]) -> Vec<f64> {
        let cols = self.shape[1];
        let ni = self.input_size();
        (0..self.shape[0])
            .map(|r| {
                let row = &self.weights[r * cols..(r + 1) * cols];
                let mut acc = 0.0;
                for (w, v) in row[..ni].iter().zip(x) {
                    acc += w * v;
                }
                for (w, v) in row[ni..].iter().zip(h) {
                    acc += w * v;
                }
                acc + self.bias[r]
            })
            .collect()
    }

    pub(crate) fn run(&self, x: &Tensor) -> LstmCache {
        let (steps, ni) = x.as_matrix_dims();
        let h_n = self.hidden();
        let mut hs = vec![vec![0.0; h_n]];
        let mut cs = vec![vec![0.0; h_n]];
        let mut gates = Vec::with_capacity(steps);
        let mut g_pre = Vec::with_capacity(steps);
        for t in 0..steps {
            let xt = &x.data()[t * ni..(t + 1) * ni];
            let z = self.preact(xt, &hs[t]);
            let mut a = vec![0.0; 4 * h_n];
            for j in 0..h_n {
                a[j] = sigmoid(z[j]);
                a[h_n + j] = sigmoid(z[h_n + j]);
                a[2 * h_n + j] = z[2 * h_n + j].tanh();
                a[3 * h_n + j] = sigmoid(z[3 * h_n + j]);
            }
            let prev_c = &cs[t];
            let c: Vec<f64> = (0..h_n)
                .map(|j| a[h_n + j] * prev_c[j] + a[j] * a[2 * h_n + j])
                .collect();
            let h: Vec<f64> = (0..h_n).map(|j| a[3 * h_n + j] * c[j].tanh()).collect();
            g_pre.push(z[2 * h_n..3 * h_n].to_vec());
            gates.push(a);
            cs.push(c);
            hs.push(h);
        }
        LstmCache { hs, cs, gates, g_pre }
    }

    fn backward(
        &self,
        x: &Tensor,
        lc: &LstmCache,
        dy: &[f64],
        want_params: bool,
    ) -> (Tensor, Option<Vec<Vec<f64>>>) {
        let (steps, ni) = x.as_matrix_dims();
        let h_n = self.hidden();
        let cols = self.shape[1];
        let mut dx = vec![0.0; x.len()];
        let mut dw = if want_params { vec![0.0; self.weights.len()] } else { Vec::new() };
        let mut db = if want_params { vec![0.0; self.bias.len()] } else { Vec::new() };
        let mut dh = dy.to_vec();
        let mut dc = vec![0.0; h_n];
        for t in (0..steps).rev() {
            let a = &lc.gates[t];
            let c = &lc.cs[t + 1];
            let c_prev = &lc.cs[t];
            let mut dz = vec![0.0; 4 * h_n];
            for j in 0..h_n {
                let (i, f, g, o) = (a[j], a[h_n + j], a[2 * h_n + j], a[3 * h_n + j]);
                let tc = c[j].tanh();
                let d_o = dh[j] * tc;
                dc[j] += dh[j] * o * (1.0 - tc * tc);
                let d_i = dc[j] * g;
                let d_g = dc[j] * i;
                let d_f = dc[j] * c_prev[j];
                dz[j] = d_i * i * (1.0 - i);
                dz[h_n + j] = d_f * f * (1.0 - f);
                dz[2 * h_n + j] = d_g * (1.0 - g * g);
                dz[3 * h_n + j] = d_o * o * (1.0 - o);
                dc[j] *= f;
            }
            let xt = &x.data()[t * ni..(t + 1) * ni];
            let h_prev = &lc.hs[t];
            let mut dh_prev = vec![0.0; h_n];
            for (r, &g) in dz.iter().enumerate() {
                let row = &self.weights[r * cols..(r + 1) * cols];
                for k in 0..ni {
                    dx[t * ni + k] += row[k] * g;
                }
                for k in 0..h_n {
                    dh_prev[k] += row[ni + k] * g;
                }
                if want_params {
                    db[r] += g;
                    let drow = &mut dw[r * cols..(r + 1) * cols];
                    for k in 0..ni {
                        drow[k] += xt[k] * g;
                    }
                    for k in 0..h_n {
                        drow[ni + k] += h_prev[k] * g;
                    }
                }
            }
            dh = dh_prev;
        }
        (
            Tensor::from_parts(x.shape().to_vec(), dx),
            want_params.then(|| vec![dw, db]),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relu_zeroes_negative_inputs() {
        let (y, _) = Layer::Relu.forward(&Tensor::vector(vec![1.0, -2.0]));
        assert_eq!(y.data(), &[1.0, 0.0]);
    }

    #[test]
    fn maxpool_prefers_lowest_index_on_ties() {
        let p = MaxPool1d { width: 3 };
        let x = Tensor::from_parts(vec![3, 1], vec![2.0, 2.0, 2.0]);
        let (y, argmax) = p.forward(&x);
        assert_eq!(y.data(), &[2.0]);
        assert_eq!(argmax, vec![0]);
        // nudging a non-selected tied element down changes nothing
        let x2 = Tensor::from_parts(vec![3, 1], vec![2.0, 2.0 - 1e-12, 2.0]);
        let (y2, argmax2) = p.forward(&x2);
        assert_eq!(y2.data(), y.data());
        assert_eq!(argmax2, argmax);
    }

    #[test]
    fn conv_matches_hand_computation() {
        // one output channel, width 2, stride 1 over [1, 2, 3]
        let c = Conv1d { shape: [1, 1, 2], weights: vec![1.0, -1.0], bias: vec![0.5], stride: 1 };
        let y = c.forward(&Tensor::vector(vec![1.0, 2.0, 3.0]));
        assert_eq!(y.shape(), &[2, 1]);
        assert_eq!(y.data(), &[-0.5, -0.5]);
    }

    #[test]
    fn zero_lstm_keeps_zero_state() {
        let r = Lstm { shape: [8, 3], weights: vec![0.0; 24], bias: vec![0.0; 8] };
        let cache = r.run(&Tensor::from_parts(vec![4, 1], vec![1.0, -3.0, 2.0, 5.0]));
        assert!(cache.hs.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn layer_json_uses_kind_tag() {
        let l = Layer::Dense(Dense::new(1, 2, vec![1.0, 2.0], vec![0.0]));
        let s = serde_json::to_string(&l).unwrap();
        assert!(s.starts_with(r#"{"kind":"dense","shape":[1,2]"#), "{s}");
        let back: Layer = serde_json::from_str(&s).unwrap();
        assert_eq!(back, l);
        let pool: Layer = serde_json::from_str(r#"{"kind":"maxpool1d","width":2}"#).unwrap();
        assert_eq!(pool, Layer::MaxPool1d(MaxPool1d { width: 2 }));
    }
}
