use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::layer::{sigmoid, Cache, Embedding, Layer};
use super::tensor::Tensor;
use super::{Input, Modality, Sample};
use crate::error::{invalid, Error, Result};

/// Output activation applied after the body.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Head {
    /// Raw scores; the class scores are the body outputs.
    Identity,
    Softmax,
    /// A single unit `z` read as the log-odds of class 1: class scores are
    /// `[-z, z]` and probabilities `[1 - s(z), s(z)]`.
    Sigmoid,
}

/// Immutable, validated network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelFile", into = "ModelFile")]
pub struct Model {
    modality: Modality,
    n_classes: usize,
    n_features: usize,
    layers: Vec<Layer>,
    head: Head,
    /// `shapes[i]` is the input shape of layer `i`; the last entry is the body output.
    shapes: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    modality: Modality,
    n_classes: usize,
    n_features: usize,
    layers: Vec<Layer>,
}

impl TryFrom<ModelFile> for Model {
    type Error = Error;

    fn try_from(f: ModelFile) -> Result<Self> {
        Model::new(f.modality, f.n_classes, f.n_features, f.layers)
    }
}

impl From<Model> for ModelFile {
    fn from(m: Model) -> Self {
        ModelFile { modality: m.modality, n_classes: m.n_classes, n_features: m.n_features, layers: m.layers }
    }
}

/// Per-layer parameter gradients, `layers[i][b]` matching `Layer::params()`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrads {
    pub layers: Vec<Vec<Vec<f64>>>,
}

/// Saved activations of one body pass.
#[derive(Debug, Clone)]
pub(crate) struct Trace {
    /// Index of the first layer that was run.
    pub start: usize,
    /// `acts[i]` is the input to layer `start + i`; the last entry is the body output.
    pub acts: Vec<Tensor>,
    pub caches: Vec<Cache>,
}

impl Trace {
    pub fn output(&self) -> &Tensor {
        self.acts.last().expect("trace always holds the input")
    }
}

impl Model {
    pub fn new(modality: Modality, n_classes: usize, n_features: usize, layers: Vec<Layer>) -> Result<Self> {
        if n_classes < 2 {
            return invalid("a model needs at least two classes");
        }
        if n_features == 0 {
            return invalid("a model needs at least one input feature");
        }
        if layers.is_empty() {
            return invalid("a model needs at least one layer");
        }
        let last = layers.len() - 1;
        for (i, l) in layers.iter().enumerate() {
            match l {
                Layer::Embedding(_) if i != 0 => return invalid("embedding is only allowed as the first layer"),
                Layer::Softmax | Layer::Sigmoid if i != last => {
                    return invalid(format!("{} is only allowed as the last layer", l.kind()))
                }
                _ => {}
            }
        }
        let is_embedded = matches!(layers[0], Layer::Embedding(_));
        if (modality == Modality::TokenSequence) != is_embedded {
            return invalid("token-sequence models must start with an embedding layer and only they may");
        }
        let head = match layers[last] {
            Layer::Softmax => Head::Softmax,
            Layer::Sigmoid => Head::Sigmoid,
            _ => Head::Identity,
        };
        let body_len = if head == Head::Identity { layers.len() } else { last };
        if body_len == 0 {
            return invalid("model has no body layers");
        }
        let mut shapes = vec![vec![n_features]];
        for l in &layers[..body_len] {
            let next = l.output_shape(shapes.last().unwrap())?;
            shapes.push(next);
        }
        let out = shapes.last().unwrap();
        let want = if head == Head::Sigmoid { 1 } else { n_classes };
        if out.as_slice() != [want] {
            return invalid(format!("body output shape {out:?} does not match the head (expected [{want}])"));
        }
        if head == Head::Sigmoid && n_classes != 2 {
            return invalid("a sigmoid head requires exactly two classes");
        }
        for l in &layers {
            if l.params().iter().any(|p| p.iter().any(|v| !v.is_finite())) {
                return Err(Error::NumericalFailure(format!("{} layer has non-finite weights", l.kind())));
            }
        }
        if let Layer::Embedding(e) = &layers[0] {
            if let Some(pad) = e.padding_id {
                if e.row(pad).iter().any(|&v| v != 0.0) {
                    return invalid("embedding row at padding_id must be zero");
                }
            }
        }
        Ok(Self { modality, n_classes, n_features, layers, head, shapes })
    }

    pub fn modality(&self) -> Modality {
        self.modality
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn head(&self) -> Head {
        self.head
    }

    pub(crate) fn body_len(&self) -> usize {
        match self.head {
            Head::Identity => self.layers.len(),
            _ => self.layers.len() - 1,
        }
    }

    /// First layer that consumes a tensor (after the embedding, if any).
    pub(crate) fn tensor_start(&self) -> usize {
        usize::from(self.embedding().is_some())
    }

    pub fn embedding(&self) -> Option<&Embedding> {
        match &self.layers[0] {
            Layer::Embedding(e) => Some(e),
            _ => None,
        }
    }

    /// Input shape of layer `i`.
    pub(crate) fn shape_at(&self, i: usize) -> &[usize] {
        &self.shapes[i]
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// Rebuilds a model of the same architecture with replaced parameters.
    pub(crate) fn with_layers(&self, layers: Vec<Layer>) -> Result<Self> {
        Model::new(self.modality, self.n_classes, self.n_features, layers)
    }

    pub(crate) fn layers_mut_unchecked(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn check_input(&self, input: &Input) -> Result<()> {
        if input.len() != self.n_features {
            return invalid(format!("input has {} features, model expects {}", input.len(), self.n_features));
        }
        match (self.modality, input) {
            (Modality::DenseBinary, Input::Dense(v)) => {
                if v.iter().any(|&x| x != 0.0 && x != 1.0) {
                    return invalid("dense-binary input must contain only 0 and 1");
                }
            }
            (Modality::DenseReal, Input::Dense(v)) => {
                if v.iter().any(|x| !x.is_finite()) {
                    return invalid("dense-real input contains non-finite values");
                }
            }
            (Modality::TokenSequence, Input::Tokens(t)) => {
                let vocab = self.embedding().map(|e| e.vocab()).unwrap_or(0);
                if let Some(bad) = t.iter().find(|&&id| id >= vocab) {
                    return invalid(format!("token id {bad} out of vocabulary of size {vocab}"));
                }
            }
            _ => return invalid(format!("input kind does not match {} modality", self.modality)),
        }
        Ok(())
    }

    pub fn check_class(&self, class: usize) -> Result<()> {
        if class >= self.n_classes {
            return invalid(format!("class {class} out of range for {} classes", self.n_classes));
        }
        Ok(())
    }

    /// Tensor fed to the first tensor layer: the dense vector, or the
    /// embedded token sequence.
    pub fn embed_input(&self, input: &Input) -> Result<Tensor> {
        self.check_input(input)?;
        Ok(match input {
            Input::Dense(v) => Tensor::vector(v.clone()),
            Input::Tokens(t) => self.embedding().expect("checked").embed(t),
        })
    }

    pub(crate) fn run_body(&self, x: Tensor) -> Result<Trace> {
        let start = self.tensor_start();
        let end = self.body_len();
        let mut acts = Vec::with_capacity(end - start + 1);
        let mut caches = Vec::with_capacity(end - start);
        acts.push(x);
        for l in &self.layers[start..end] {
            let (y, cache) = l.forward(acts.last().unwrap());
            if !y.is_finite() {
                return Err(Error::NumericalFailure(format!("non-finite output from {} layer", l.kind())));
            }
            acts.push(y);
            caches.push(cache);
        }
        Ok(Trace { start, acts, caches })
    }

    /// Runs many body inputs layer by layer; each trace equals `run_body` on
    /// its own input bit for bit.
    pub(crate) fn run_body_batch(&self, xs: Vec<Tensor>) -> Result<Vec<Trace>> {
        let start = self.tensor_start();
        let end = self.body_len();
        let mut traces: Vec<Trace> = xs
            .into_iter()
            .map(|x| Trace { start, acts: vec![x], caches: Vec::with_capacity(end - start) })
            .collect();
        for l in &self.layers[start..end] {
            for t in traces.iter_mut() {
                let (y, cache) = l.forward(t.output());
                if !y.is_finite() {
                    return Err(Error::NumericalFailure(format!("non-finite output from {} layer", l.kind())));
                }
                t.acts.push(y);
                t.caches.push(cache);
            }
        }
        Ok(traces)
    }

    /// Sum of class-score input gradients over the points
    /// `start + alpha * dir`, for bodies built from dense and relu layers
    /// that begin with a dense layer. Other architectures return `None`.
    /// The first layer is affine along the line, so it is applied once to
    /// each endpoint and its transpose once to the summed upstream gradient.
    pub(crate) fn line_gradient_sum(&self, start: &[f64], dir: &[f64], alphas: &[f64], class: usize) -> Option<Result<Vec<f64>>> {
        let body = &self.layers[self.tensor_start()..self.body_len()];
        let Some(Layer::Dense(first)) = body.first() else { return None };
        if self.embedding().is_some() || alphas.is_empty() || !body.iter().all(|l| matches!(l, Layer::Dense(_) | Layer::Relu)) {
            return None;
        }
        let z0 = first.apply(start);
        let dz: Vec<f64> = first.apply(dir).iter().zip(&first.bias).map(|(v, b)| v - b).collect();
        let mut a = DMatrix::from_fn(z0.len(), alphas.len(), |i, k| z0[i] + alphas[k] * dz[i]);
        let mut masks = Vec::new();
        for l in &body[1..] {
            match l {
                Layer::Dense(dense) => {
                    let w = DMatrix::from_row_slice(dense.out_dim(), dense.in_dim(), &dense.weights);
                    a = w * &a;
                    for mut col in a.column_iter_mut() {
                        for (v, b) in col.iter_mut().zip(&dense.bias) {
                            *v += b;
                        }
                    }
                }
                _ => {
                    masks.push(a.map(|v| v > 0.0));
                    a.apply(|v| *v = v.max(0.0));
                }
            }
            if a.iter().any(|v| !v.is_finite()) {
                return Some(Err(Error::NumericalFailure(format!("non-finite output from {} layer", l.kind()))));
            }
        }
        let seed = self.score_seed(class);
        let mut g = DMatrix::from_fn(seed.len(), alphas.len(), |i, _| seed.data()[i]);
        for l in body[1..].iter().rev() {
            match l {
                Layer::Dense(dense) => {
                    let w = DMatrix::from_row_slice(dense.out_dim(), dense.in_dim(), &dense.weights);
                    g = w.tr_mul(&g);
                }
                _ => {
                    let m = masks.pop().expect("one mask per relu");
                    g.zip_apply(&m, |v, keep| {
                        if !keep {
                            *v = 0.0;
                        }
                    });
                }
            }
        }
        let upstream = g.column_sum();
        let inp = first.in_dim();
        let mut out = vec![0.0; inp];
        for (o, u) in upstream.iter().enumerate() {
            for (acc, w) in out.iter_mut().zip(&first.weights[o * inp..(o + 1) * inp]) {
                *acc += w * u;
            }
        }
        Some(Ok(out))
    }

    /// Class scores before the output activation.
    pub(crate) fn scores_from_body(&self, out: &[f64]) -> Vec<f64> {
        match self.head {
            Head::Sigmoid => vec![-out[0], out[0]],
            _ => out.to_vec(),
        }
    }

    pub(crate) fn probs_from_body(&self, out: &[f64]) -> Vec<f64> {
        match self.head {
            Head::Identity => out.to_vec(),
            Head::Softmax => softmax(out),
            Head::Sigmoid => {
                let p = sigmoid(out[0]);
                vec![1.0 - p, p]
            }
        }
    }

    /// Gradient of class score `class` with respect to the body output.
    pub(crate) fn score_seed(&self, class: usize) -> Tensor {
        match self.head {
            Head::Sigmoid => Tensor::vector(vec![if class == 1 { 1.0 } else { -1.0 }]),
            _ => {
                let mut g = vec![0.0; self.n_classes];
                g[class] = 1.0;
                Tensor::vector(g)
            }
        }
    }

    /// Model output for one sample: probabilities for softmax/sigmoid heads,
    /// raw scores otherwise.
    pub fn forward(&self, sample: &Sample) -> Result<Vec<f64>> {
        self.forward_input(&sample.input)
    }

    pub fn forward_input(&self, input: &Input) -> Result<Vec<f64>> {
        let trace = self.run_body(self.embed_input(input)?)?;
        Ok(self.probs_from_body(trace.output().data()))
    }

    /// Class scores before the output activation.
    pub fn scores(&self, sample: &Sample) -> Result<Vec<f64>> {
        let trace = self.run_body(self.embed_input(&sample.input)?)?;
        Ok(self.scores_from_body(trace.output().data()))
    }

    /// Evaluates the model on a tensor already in body-input space.
    pub fn forward_embedded(&self, x: &Tensor) -> Result<Vec<f64>> {
        self.check_embedded(x)?;
        let trace = self.run_body(x.clone())?;
        Ok(self.probs_from_body(trace.output().data()))
    }

    /// Class scores for a tensor already in body-input space.
    pub fn scores_embedded(&self, x: &Tensor) -> Result<Vec<f64>> {
        self.check_embedded(x)?;
        let trace = self.run_body(x.clone())?;
        Ok(self.scores_from_body(trace.output().data()))
    }

    fn check_embedded(&self, x: &Tensor) -> Result<()> {
        if x.shape() != self.shape_at(self.tensor_start()) {
            return invalid(format!(
                "body input shape {:?} does not match {:?}",
                x.shape(),
                self.shape_at(self.tensor_start())
            ));
        }
        Ok(())
    }

    /// Row `i` equals `forward(samples[i])` bit for bit; layers are applied
    /// across the whole batch before moving to the next one.
    pub fn forward_batch(&self, samples: &[Sample]) -> Result<Vec<Vec<f64>>> {
        let inputs: Vec<&Input> = samples.iter().map(|s| &s.input).collect();
        self.forward_inputs(&inputs)
    }

    pub fn forward_inputs(&self, inputs: &[&Input]) -> Result<Vec<Vec<f64>>> {
        let mut acts = inputs.iter().map(|i| self.embed_input(i)).collect::<Result<Vec<_>>>()?;
        for l in &self.layers[self.tensor_start()..self.body_len()] {
            for a in acts.iter_mut() {
                let (y, _) = l.forward(a);
                if !y.is_finite() {
                    return Err(Error::NumericalFailure(format!("non-finite output from {} layer", l.kind())));
                }
                *a = y;
            }
        }
        Ok(acts.iter().map(|a| self.probs_from_body(a.data())).collect())
    }

    /// Argmax of the output; ties go to the lowest class index.
    pub fn predict(&self, sample: &Sample) -> Result<usize> {
        Ok(argmax(&self.forward(sample)?))
    }

    /// Backpropagates `seed` (gradient w.r.t. body output) through a trace.
    pub(crate) fn backward(&self, trace: &Trace, seed: Tensor, want_params: bool) -> (Tensor, Vec<Vec<Vec<f64>>>) {
        let n = trace.caches.len();
        let mut g = seed;
        let mut grads = vec![Vec::new(); self.layers.len()];
        for i in (0..n).rev() {
            let li = trace.start + i;
            let (dx, pg) = self.layers[li].backward(&trace.acts[i], &trace.caches[i], &g, want_params);
            if let Some(pg) = pg {
                grads[li] = pg;
            }
            g = dx;
        }
        (g, grads)
    }

    /// Class score and its gradient with respect to a body-input tensor.
    pub fn score_and_gradient(&self, x: &Tensor, class: usize) -> Result<(f64, Tensor)> {
        self.check_class(class)?;
        self.check_embedded(x)?;
        let trace = self.run_body(x.clone())?;
        let score = self.scores_from_body(trace.output().data())[class];
        let (g, _) = self.backward(&trace, self.score_seed(class), false);
        Ok((score, g))
    }

    /// Gradient of the class-`class` pre-activation score with respect to
    /// the input features. For token sequences the gradient on each
    /// embedding vector is reduced to one value per token by a dot product
    /// with that embedding (gradient times input).
    pub fn input_gradient(&self, sample: &Sample, class: usize) -> Result<Vec<f64>> {
        let x = self.embed_input(&sample.input)?;
        let (_, g) = self.score_and_gradient(&x, class)?;
        Ok(self.reduce_to_features(&x, g.data()))
    }

    /// Per-feature view of a body-input quantity: identity for dense inputs,
    /// `sum_j x[t, j] * v[t, j]` per token for embedded sequences.
    pub(crate) fn reduce_to_features(&self, x: &Tensor, v: &[f64]) -> Vec<f64> {
        if self.embedding().is_none() {
            return v.to_vec();
        }
        let (steps, dim) = x.as_matrix_dims();
        (0..steps)
            .map(|t| {
                let mut acc = 0.0;
                for j in 0..dim {
                    acc += x.data()[t * dim + j] * v[t * dim + j];
                }
                acc
            })
            .collect()
    }

    /// Sums a body-input quantity per token (identity for dense inputs).
    pub(crate) fn sum_to_features(&self, v: &Tensor) -> Vec<f64> {
        if self.embedding().is_none() {
            return v.data().to_vec();
        }
        let (steps, dim) = v.as_matrix_dims();
        (0..steps).map(|t| v.data()[t * dim..(t + 1) * dim].iter().sum()).collect()
    }

    /// Mean cross-entropy over `batch` (hard labels) and its parameter gradients.
    pub fn param_gradient(&self, batch: &[Sample]) -> Result<(f64, ParamGrads)> {
        let targets: Vec<Vec<f64>> = batch
            .iter()
            .map(|s| {
                self.check_class(s.label)?;
                let mut t = vec![0.0; self.n_classes];
                t[s.label] = 1.0;
                Ok(t)
            })
            .collect::<Result<_>>()?;
        self.param_gradient_soft(batch, &targets)
    }

    /// Mean cross-entropy against per-sample target distributions.
    pub fn param_gradient_soft(&self, batch: &[Sample], targets: &[Vec<f64>]) -> Result<(f64, ParamGrads)> {
        let inputs: Vec<&Input> = batch.iter().map(|s| &s.input).collect();
        let targets: Vec<&[f64]> = targets.iter().map(|t| t.as_slice()).collect();
        self.loss_and_grads(&inputs, &targets)
    }

    pub(crate) fn loss_and_grads(&self, inputs: &[&Input], targets: &[&[f64]]) -> Result<(f64, ParamGrads)> {
        if inputs.is_empty() {
            return invalid("parameter gradient needs a non-empty batch");
        }
        if inputs.len() != targets.len() {
            return invalid("batch and targets differ in length");
        }
        let scale = 1.0 / inputs.len() as f64;
        let mut total: Vec<Vec<Vec<f64>>> =
            self.layers.iter().map(|l| l.params().iter().map(|p| vec![0.0; p.len()]).collect()).collect();
        let mut loss = 0.0;
        for (input, q) in inputs.iter().zip(targets) {
            if q.len() != self.n_classes {
                return invalid("target distribution has the wrong length");
            }
            let trace = self.run_body(self.embed_input(input)?)?;
            let out = trace.output().data();
            let (l, seed) = self.cross_entropy(out, q);
            loss += l * scale;
            let seed = Tensor::vector(seed.into_iter().map(|g| g * scale).collect());
            let (dx, grads) = self.backward(&trace, seed, true);
            for (li, lg) in grads.into_iter().enumerate() {
                for (acc, g) in total[li].iter_mut().zip(lg) {
                    for (a, v) in acc.iter_mut().zip(g) {
                        *a += v;
                    }
                }
            }
            if let (Some(e), Input::Tokens(t)) = (self.embedding(), input) {
                let dw = e.param_grad(t, &dx);
                for (a, v) in total[0][0].iter_mut().zip(dw) {
                    *a += v;
                }
            }
        }
        if !loss.is_finite() {
            return Err(Error::NumericalFailure("cross-entropy loss is not finite".into()));
        }
        Ok((loss, ParamGrads { layers: total }))
    }

    /// Mean cross-entropy over a batch without gradients.
    pub fn loss(&self, batch: &[Sample], targets: &[Vec<f64>]) -> Result<f64> {
        let mut loss = 0.0;
        for (s, q) in batch.iter().zip(targets) {
            let trace = self.run_body(self.embed_input(&s.input)?)?;
            loss += self.cross_entropy(trace.output().data(), q).0;
        }
        Ok(loss / batch.len().max(1) as f64)
    }

    /// Cross-entropy of one body output and its gradient w.r.t. that output.
    fn cross_entropy(&self, out: &[f64], q: &[f64]) -> (f64, Vec<f64>) {
        match self.head {
            Head::Sigmoid => {
                let z = out[0];
                // log s(z) = -softplus(-z)
                let log_p1 = -softplus(-z);
                let log_p0 = -softplus(z);
                let loss = -(q[1] * log_p1 + q[0] * log_p0);
                (loss, vec![sigmoid(z) * (q[0] + q[1]) - q[1]])
            }
            _ => {
                let m = out.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let lse = m + out.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
                let p = softmax(out);
                let mass: f64 = q.iter().sum();
                let loss = -q.iter().zip(out).map(|(qi, o)| qi * (o - lse)).sum::<f64>();
                (loss, p.iter().zip(q).map(|(pi, qi)| pi * mass - qi).collect())
            }
        }
    }
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

pub(crate) fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}
