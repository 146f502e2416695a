#![allow(dead_code)]

use explainbench::nn::{Conv1d, Dense, Embedding, Input, Layer, Lstm, MaxPool1d, Modality, Model, Sample, Tensor};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut TestRng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-scale..scale)).collect()
}

pub fn dense(rng: &mut TestRng, out: usize, inp: usize, bias: bool) -> Layer {
    let scale = (3.0 / inp as f64).sqrt();
    let b = if bias { uniform(rng, out, 0.3) } else { vec![0.0; out] };
    Layer::Dense(Dense::new(out, inp, uniform(rng, out * inp, scale), b))
}

/// Hidden activation; sigmoid is only valid as an output layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Act {
    Relu,
}

impl Act {
    fn layer(self) -> Layer {
        match self {
            Act::Relu => Layer::Relu,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Out {
    Identity,
    Softmax,
    Sigmoid,
}

fn push_head(layers: &mut Vec<Layer>, rng: &mut TestRng, inp: usize, classes: usize, out: Out, bias: bool) {
    match out {
        Out::Sigmoid => {
            layers.push(dense(rng, 1, inp, bias));
            layers.push(Layer::Sigmoid);
        }
        Out::Softmax => {
            layers.push(dense(rng, classes, inp, bias));
            layers.push(Layer::Softmax);
        }
        Out::Identity => layers.push(dense(rng, classes, inp, bias)),
    }
}

/// Random MLP on dense real inputs.
pub fn mlp(rng: &mut TestRng, d: usize, hidden: &[usize], act: Act, out: Out, bias: bool) -> Model {
    let mut layers = Vec::new();
    let mut inp = d;
    for &h in hidden {
        layers.push(dense(rng, h, inp, bias));
        layers.push(act.layer());
        inp = h;
    }
    push_head(&mut layers, rng, inp, 2, out, bias);
    Model::new(Modality::DenseReal, 2, d, layers).expect("valid mlp")
}

/// Linear model `scores = W x + b` with identity head.
pub fn linear(w: &[Vec<f64>], b: &[f64]) -> Model {
    let d = w[0].len();
    let flat: Vec<f64> = w.iter().flatten().copied().collect();
    Model::new(Modality::DenseReal, w.len(), d, vec![Layer::Dense(Dense::new(w.len(), d, flat, b.to_vec()))])
        .expect("valid linear model")
}

fn conv(rng: &mut TestRng, out_ch: usize, in_ch: usize, width: usize, stride: usize) -> Layer {
    let scale = (3.0 / (in_ch * width) as f64).sqrt();
    Layer::Conv1d(Conv1d {
        shape: [out_ch, in_ch, width],
        weights: uniform(rng, out_ch * in_ch * width, scale),
        bias: uniform(rng, out_ch, 0.2),
        stride,
    })
}

/// Conv1d -> relu -> maxpool -> flatten -> dense on a dense sequence `[len, 1]`.
pub fn cnn(rng: &mut TestRng, len: usize, out: Out) -> Model {
    let ch = 3;
    let width = 3;
    let conv_len = len - width + 1;
    let pool = 2;
    let pooled = conv_len / pool;
    let mut layers = vec![conv(rng, ch, 1, width, 1), Layer::Relu, Layer::MaxPool1d(MaxPool1d { width: pool }), Layer::Flatten];
    push_head(&mut layers, rng, pooled * ch, 2, out, true);
    Model::new(Modality::DenseReal, 2, len, layers).expect("valid cnn")
}

fn lstm_layer(rng: &mut TestRng, input: usize, hidden: usize) -> Layer {
    let cols = input + hidden;
    let scale = (1.0 / cols as f64).sqrt() * 1.5;
    Layer::Lstm(Lstm { shape: [4 * hidden, cols], weights: uniform(rng, 4 * hidden * cols, scale), bias: uniform(rng, 4 * hidden, 0.3) })
}

/// LSTM over a dense sequence `[len, 1]` with a dense head on the final state.
pub fn lstm(rng: &mut TestRng, len: usize, hidden: usize, out: Out) -> Model {
    let mut layers = vec![lstm_layer(rng, 1, hidden)];
    push_head(&mut layers, rng, hidden, 2, out, true);
    Model::new(Modality::DenseReal, 2, len, layers).expect("valid lstm")
}

/// Embedding + LSTM on tokens, token 0 pinned to zero.
pub fn token_lstm(rng: &mut TestRng, len: usize, vocab: usize, dim: usize, hidden: usize, out: Out) -> Model {
    let mut w = uniform(rng, vocab * dim, 1.0);
    w[..dim].iter_mut().for_each(|v| *v = 0.0);
    let mut layers = vec![Layer::Embedding(Embedding { shape: [vocab, dim], weights: w, padding_id: Some(0) }), lstm_layer(rng, dim, hidden)];
    push_head(&mut layers, rng, hidden, 2, out, true);
    Model::new(Modality::TokenSequence, 2, len, layers).expect("valid token lstm")
}

/// Embedding + conv + pool + dense on tokens, token 0 pinned to zero.
pub fn token_cnn(rng: &mut TestRng, len: usize, vocab: usize, dim: usize, out: Out) -> Model {
    let mut w = uniform(rng, vocab * dim, 1.0);
    w[..dim].iter_mut().for_each(|v| *v = 0.0);
    let ch = 4;
    let conv_len = len - 2;
    let mut layers = vec![
        Layer::Embedding(Embedding { shape: [vocab, dim], weights: w, padding_id: Some(0) }),
        conv(rng, ch, dim, 3, 1),
        Layer::Relu,
        Layer::MaxPool1d(MaxPool1d { width: conv_len }),
        Layer::Flatten,
    ];
    push_head(&mut layers, rng, ch, 2, out, true);
    Model::new(Modality::TokenSequence, 2, len, layers).expect("valid token cnn")
}

pub fn dense_sample(rng: &mut TestRng, d: usize) -> Sample {
    Sample::dense("s", uniform(rng, d, 1.0), 0)
}

pub fn token_sample(rng: &mut TestRng, len: usize, vocab: usize) -> Sample {
    Sample::tokens("s", (0..len).map(|_| rng.gen_range(1..vocab)).collect(), 0)
}

/// Max over components of `|a - b| / max(|a|, |b|, floor)`.
pub fn max_rel_err(a: &[f64], b: &[f64], floor: f64) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(floor)).fold(0.0, f64::max)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Central differences of `f` at `x` with step `h`.
pub fn central_diff(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut x = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = x[i];
            x[i] = orig + h;
            let up = f(&x);
            x[i] = orig - h;
            let down = f(&x);
            x[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Finite-difference input gradient of the class score, reduced per token by
/// a dot product with the embedding for sequence models.
pub fn fd_input_gradient(model: &Model, sample: &Sample, class: usize, h: f64) -> Vec<f64> {
    let x = model.embed_input(&sample.input).expect("embeddable input");
    let shape = x.shape().to_vec();
    let g = central_diff(
        |v| model.scores_embedded(&Tensor::new(shape.clone(), v.to_vec()).expect("shape")).expect("scores")[class],
        x.data(),
        h,
    );
    match &sample.input {
        Input::Dense(_) => g,
        Input::Tokens(t) => {
            let dim = x.len() / t.len();
            (0..t.len()).map(|i| (0..dim).map(|j| g[i * dim + j] * x.data()[i * dim + j]).sum()).collect()
        }
    }
}

/// Gradient at a point where the function is smooth within the probe radius:
/// steps `h` and `h / 2` agree to `tol` relative. Returns `None` when a kink
/// (relu switch, maxpool switch) lies inside the probe.
pub fn smooth_fd(f: impl Fn(&[f64]) -> f64 + Copy, x: &[f64], h: f64, tol: f64) -> Option<Vec<f64>> {
    let a = central_diff(f, x, h);
    let b = central_diff(f, x, h / 2.0);
    (max_rel_err(&a, &b, 1e-6) <= tol).then_some(a)
}

/// Mutable copies of every parameter block of a model, in layer order.
pub fn param_blocks(layers: &mut [Layer]) -> Vec<&mut Vec<f64>> {
    let mut out = Vec::new();
    for l in layers.iter_mut() {
        match l {
            Layer::Dense(d) => {
                out.push(&mut d.weights);
                out.push(&mut d.bias);
            }
            Layer::Conv1d(c) => {
                out.push(&mut c.weights);
                out.push(&mut c.bias);
            }
            Layer::Lstm(r) => {
                out.push(&mut r.weights);
                out.push(&mut r.bias);
            }
            Layer::Embedding(e) => out.push(&mut e.weights),
            _ => {}
        }
    }
    out
}

/// Loss of `model` with parameter `(block, index)` shifted by `delta`.
pub fn loss_with_shift(model: &Model, block: usize, index: usize, delta: f64, batch: &[Sample], targets: &[Vec<f64>]) -> f64 {
    let mut layers = model.layers().to_vec();
    param_blocks(&mut layers)[block][index] += delta;
    let m = Model::new(model.modality(), model.n_classes(), model.n_features(), layers).expect("same architecture");
    m.loss(batch, targets).expect("loss")
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).expect("rows");
        a.swap(col, piv);
        b.swap(col, piv);
        assert!(a[col][col].abs() > 1e-12, "singular system");
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            if f != 0.0 {
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

/// Weighted least squares with an intercept via the normal equations;
/// returns `[intercept, coefficients...]`.
pub fn wls_oracle(masks: &[Vec<bool>], y: &[f64], w: &[f64]) -> Vec<f64> {
    let p = masks[0].len() + 1;
    let row = |m: &Vec<bool>| std::iter::once(1.0).chain(m.iter().map(|&b| if b { 1.0 } else { 0.0 })).collect::<Vec<_>>();
    let mut a = vec![vec![0.0; p]; p];
    let mut rhs = vec![0.0; p];
    for ((m, &yi), &wi) in masks.iter().zip(y).zip(w) {
        let x = row(m);
        for i in 0..p {
            rhs[i] += wi * x[i] * yi;
            for j in 0..p {
                a[i][j] += wi * x[i] * x[j];
            }
        }
    }
    gauss_solve(a, rhs)
}

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Shapley values of the set function `v` over `d` players by enumerating
/// every coalition with the factorial weights `|S|! (d - |S| - 1)! / d!`.
pub fn brute_shapley(v: impl Fn(&[bool]) -> f64, d: usize) -> Vec<f64> {
    let mut phi = vec![0.0; d];
    let mut present = vec![false; d];
    for i in 0..d {
        for subset in 0u32..(1 << d) {
            if subset & (1 << i) != 0 {
                continue;
            }
            for (j, p) in present.iter_mut().enumerate() {
                *p = subset & (1 << j) != 0;
            }
            let s = subset.count_ones() as usize;
            let weight = 1.0 / (d as f64 * binom(d - 1, s));
            let without = v(&present);
            present[i] = true;
            let with = v(&present);
            phi[i] += weight * (with - without);
        }
    }
    phi
}

/// TV proximal operator via projected gradient on the dual:
/// `min_u |y - D^T u|^2 / 2` subject to `|u_i| <= lambda`, `x = y - D^T u`.
pub fn tv_prox_dual(y: &[f64], lambda: f64, iters: usize) -> Vec<f64> {
    let n = y.len();
    if n < 2 {
        return y.to_vec();
    }
    let dt = |u: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; n];
        for i in 0..n - 1 {
            out[i] -= u[i];
            out[i + 1] += u[i];
        }
        out
    };
    let mut u = vec![0.0; n - 1];
    let step = 0.25;
    for _ in 0..iters {
        let x: Vec<f64> = y.iter().zip(dt(&u)).map(|(a, b)| a - b).collect();
        for i in 0..n - 1 {
            u[i] = (u[i] + step * (x[i + 1] - x[i])).clamp(-lambda, lambda);
        }
    }
    y.iter().zip(dt(&u)).map(|(a, b)| a - b).collect()
}
