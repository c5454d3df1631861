//! A one-hidden-layer contrastive encoder for the two-cap sphere data, its
//! mean-classifier evaluation, and a perfectly aligned but useless encoder.
//!
//! The encoder is `x -> normalize(W2' act(W1' x + b1) + b2)`. Training
//! minimises the adjusted InfoNCE loss with in-batch negatives, symmetrised
//! over the two views, using hand-written backpropagation.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::data::{dot, EmbeddingSet, LabelSet, PositivePairs, ViewSet};
use crate::error::{Error, Result};
use crate::geomsim::{self, GeomConfig, NoiseKind};
use crate::rng;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Sin,
    Tanh,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Self::Sin => x.sin(),
            Self::Tanh => x.tanh(),
        }
    }

    /// Derivative expressed through the pre-activation.
    fn derivative(self, x: f64) -> f64 {
        match self {
            Self::Sin => x.cos(),
            Self::Tanh => 1.0 - x.tanh().powi(2),
        }
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sin" => Ok(Self::Sin),
            "tanh" => Ok(Self::Tanh),
            other => Err(Error::Argument(format!("unknown activation `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    #[default]
    Sgd,
    Adam,
}

impl FromStr for Optimizer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sgd" => Ok(Self::Sgd),
            "adam" => Ok(Self::Adam),
            other => Err(Error::Argument(format!("unknown optimizer `{other}`"))),
        }
    }
}

impl fmt::Display for Optimizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Sgd => "sgd",
            Self::Adam => "adam",
        })
    }
}

/// Encoder weights, row-major: `w1` is `m_in x hidden`, `w2` is
/// `hidden x m_out`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EncoderParams {
    pub m_in: usize,
    pub hidden: usize,
    pub m_out: usize,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
    pub activation: Activation,
}

/// Everything a forward pass keeps for the backward pass.
struct Forward {
    pre: Vec<f64>,
    hid: Vec<f64>,
    norms: Vec<f64>,
    out: Vec<f64>,
}

impl EncoderParams {
    /// First-layer weights are `N(0, init_scale^2 / m_in)`; with the sine
    /// activation the biases are uniform phases.
    pub fn init(
        m_in: usize,
        hidden: usize,
        m_out: usize,
        activation: Activation,
        init_scale: f64,
        rng: &mut impl Rng,
    ) -> Self {
        Self::init_mixed(m_in, hidden, m_out, activation, init_scale, (0, 1.0), rng)
    }

    /// Like [`EncoderParams::init`], except that the first `low.0` hidden
    /// units use scale `low.1` and start with zero output weights.
    pub fn init_mixed(
        m_in: usize,
        hidden: usize,
        m_out: usize,
        activation: Activation,
        init_scale: f64,
        low: (usize, f64),
        rng: &mut impl Rng,
    ) -> Self {
        let low_units = low.0.min(hidden);
        let mut w1 = vec![0.0; m_in * hidden];
        for i in 0..m_in {
            for k in 0..hidden {
                let scale = if k < low_units { low.1 } else { init_scale };
                let z: f64 = StandardNormal.sample(&mut *rng);
                w1[i * hidden + k] = scale / (m_in as f64).sqrt() * z;
            }
        }
        let mut w2 = vec![0.0; hidden * m_out];
        for k in low_units..hidden {
            for j in 0..m_out {
                let z: f64 = StandardNormal.sample(&mut *rng);
                w2[k * m_out + j] = z / (hidden as f64).sqrt();
            }
        }
        let b1 = match activation {
            Activation::Sin => (0..hidden)
                .map(|_| 2.0 * std::f64::consts::PI * rng.random::<f64>())
                .collect(),
            Activation::Tanh => vec![0.0; hidden],
        };
        Self {
            m_in,
            hidden,
            m_out,
            w1,
            b1,
            w2,
            b2: vec![0.0; m_out],
            activation,
        }
    }

    pub fn param_count(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len()
    }

    fn forward_raw(&self, x: &[f64], rows: usize) -> Forward {
        let (h, o) = (self.hidden, self.m_out);
        let mut pre = vec![0.0; rows * h];
        for r in 0..rows {
            let p = &mut pre[r * h..(r + 1) * h];
            p.copy_from_slice(&self.b1);
            for (i, &xi) in x[r * self.m_in..(r + 1) * self.m_in].iter().enumerate() {
                axpy(xi, &self.w1[i * h..(i + 1) * h], p);
            }
        }
        let hid: Vec<f64> = pre.iter().map(|&v| self.activation.apply(v)).collect();
        let mut out = vec![0.0; rows * o];
        let mut norms = vec![0.0; rows];
        for r in 0..rows {
            let z = &mut out[r * o..(r + 1) * o];
            z.copy_from_slice(&self.b2);
            for (k, &a) in hid[r * h..(r + 1) * h].iter().enumerate() {
                axpy(a, &self.w2[k * o..(k + 1) * o], z);
            }
            let len = dot(z, z).sqrt();
            z.iter_mut().for_each(|v| *v /= len);
            norms[r] = len;
        }
        Forward {
            pre,
            hid,
            norms,
            out,
        }
    }

    /// Encodes every row of `x` (dimension `m_in`) to a unit vector.
    pub fn encode(&self, x: &EmbeddingSet) -> Result<EmbeddingSet> {
        if x.dim() != self.m_in {
            return Err(Error::Shape(format!(
                "encoder expects dimension {}, got {}",
                self.m_in,
                x.dim()
            )));
        }
        let chunk = 512;
        let out: Vec<f64> = x
            .values()
            .par_chunks(chunk * self.m_in)
            .flat_map_iter(|c| self.forward_raw(c, c.len() / self.m_in).out)
            .collect();
        if let Some(i) = out.iter().position(|v| !v.is_finite()) {
            return Err(Error::Degenerate(format!(
                "encoder output for row {} is not finite",
                i / self.m_out
            )));
        }
        EmbeddingSet::from_unit_rows(x.n(), self.m_out, out)
    }

    pub fn encode_views(&self, views: &ViewSet) -> Result<ViewSet> {
        let enc = self.encode(&views.flatten())?;
        ViewSet::from_unit_rows(views.n(), views.c(), self.m_out, enc.values().to_vec())
    }

    /// Backward pass for the loss gradient `d_out` at the normalised outputs.
    fn backward(&self, x: &[f64], fw: &Forward, d_out: &[f64], grad: &mut Grads) {
        let (h, o) = (self.hidden, self.m_out);
        let rows = fw.norms.len();
        let mut dz = vec![0.0; o];
        let mut dpre = vec![0.0; h];
        for r in 0..rows {
            let a = &fw.out[r * o..(r + 1) * o];
            let da = &d_out[r * o..(r + 1) * o];
            let proj = dot(a, da);
            for j in 0..o {
                dz[j] = (da[j] - a[j] * proj) / fw.norms[r];
            }
            axpy(1.0, &dz, &mut grad.b2);
            let hr = &fw.hid[r * h..(r + 1) * h];
            let pr = &fw.pre[r * h..(r + 1) * h];
            for k in 0..h {
                axpy(hr[k], &dz, &mut grad.w2[k * o..(k + 1) * o]);
                dpre[k] = dot(&dz, &self.w2[k * o..(k + 1) * o]) * self.activation.derivative(pr[k]);
            }
            axpy(1.0, &dpre, &mut grad.b1);
            for (i, &xi) in x[r * self.m_in..(r + 1) * self.m_in].iter().enumerate() {
                axpy(xi, &dpre, &mut grad.w1[i * h..(i + 1) * h]);
            }
        }
    }

    fn params_mut(&mut self) -> [&mut Vec<f64>; 4] {
        [&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2]
    }

    fn check_finite(&self) -> bool {
        [&self.w1, &self.b1, &self.w2, &self.b2]
            .iter()
            .all(|p| p.iter().all(|v| v.is_finite()))
    }
}

fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += a * xi);
}

/// Gradients, laid out like [`EncoderParams`].
#[derive(Clone, Debug, PartialEq)]
pub struct Grads {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl Grads {
    fn zeros(p: &EncoderParams) -> Self {
        Self {
            w1: vec![0.0; p.w1.len()],
            b1: vec![0.0; p.b1.len()],
            w2: vec![0.0; p.w2.len()],
            b2: vec![0.0; p.b2.len()],
        }
    }

    fn parts(&self) -> [&Vec<f64>; 4] {
        [&self.w1, &self.b1, &self.w2, &self.b2]
    }

    /// All entries in parameter order.
    pub fn flatten(&self) -> Vec<f64> {
        self.parts().iter().flat_map(|p| p.iter().copied()).collect()
    }
}

/// Negatives of anchor `i` in a batch of `b`: the next `m` indices cyclically.
fn negatives(i: usize, b: usize, m: usize) -> impl Iterator<Item = usize> {
    (1..=m).map(move |s| (i + s) % b)
}

/// Symmetrised adjusted InfoNCE over a batch of view pairs and its gradient
/// with respect to both sides' encoded outputs.
///
/// `a` and `b` are `rows x dim`, unit rows; `m` negatives per anchor.
pub fn batch_loss(a: &[f64], b: &[f64], rows: usize, dim: usize, m: usize) -> (f64, Vec<f64>, Vec<f64>) {
    let mut s = vec![0.0; rows * rows];
    for i in 0..rows {
        for j in 0..rows {
            s[i * rows + j] = dot(&a[i * dim..(i + 1) * dim], &b[j * dim..(j + 1) * dim]);
        }
    }
    let n = rows as f64;
    let mut g = vec![0.0; rows * rows];
    let mut loss = 0.0;
    let log_m = (m as f64).ln();
    for i in 0..rows {
        loss -= s[i * rows + i];
        g[i * rows + i] -= 1.0 / n;
        // row i: anchor a_i against b_j; column i: anchor b_i against a_j
        for by_row in [true, false] {
            let at = |j: usize| if by_row { s[i * rows + j] } else { s[j * rows + i] };
            let max = negatives(i, rows, m).map(at).fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = negatives(i, rows, m).map(|j| (at(j) - max).exp()).sum();
            loss += 0.5 * (max + z.ln() - log_m);
            for j in negatives(i, rows, m) {
                let w = 0.5 / n * (at(j) - max).exp() / z;
                if by_row {
                    g[i * rows + j] += w;
                } else {
                    g[j * rows + i] += w;
                }
            }
        }
    }
    let mut da = vec![0.0; rows * dim];
    let mut db = vec![0.0; rows * dim];
    for i in 0..rows {
        for j in 0..rows {
            let w = g[i * rows + j];
            if w != 0.0 {
                axpy(w, &b[j * dim..(j + 1) * dim], &mut da[i * dim..(i + 1) * dim]);
                axpy(w, &a[i * dim..(i + 1) * dim], &mut db[j * dim..(j + 1) * dim]);
            }
        }
    }
    (loss / n, da, db)
}

/// Loss and parameter gradient for one batch of two views (`x1`, `x2`, each
/// `rows x m_in`).
pub fn loss_and_grad(p: &EncoderParams, x1: &[f64], x2: &[f64], m: usize) -> (f64, Grads) {
    let rows = x1.len() / p.m_in;
    let f1 = p.forward_raw(x1, rows);
    let f2 = p.forward_raw(x2, rows);
    let (loss, da, db) = batch_loss(&f1.out, &f2.out, rows, p.m_out, m);
    let mut grad = Grads::zeros(p);
    p.backward(x1, &f1, &da, &mut grad);
    p.backward(x2, &f2, &db, &mut grad);
    (loss, grad)
}

pub fn loss_only(p: &EncoderParams, x1: &[f64], x2: &[f64], m: usize) -> f64 {
    let rows = x1.len() / p.m_in;
    let f1 = p.forward_raw(x1, rows);
    let f2 = p.forward_raw(x2, rows);
    batch_loss(&f1.out, &f2.out, rows, p.m_out, m).0
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GradCheck {
    /// `||analytic - numeric|| / max(||analytic||, ||numeric||)`.
    pub relative_error: f64,
    /// Worst entry of `|a - n| / max(|a|, |n|)` over entries with
    /// `max(|a|, |n|) >= floor`.
    pub max_entry_error: f64,
    pub checked: usize,
}

/// Compares the analytic gradient with central differences of step `h`.
pub fn gradient_check(p: &EncoderParams, x1: &[f64], x2: &[f64], m: usize, h: f64, floor: f64) -> GradCheck {
    let (_, g) = loss_and_grad(p, x1, x2, m);
    let analytic = g.flatten();
    let mut probe = p.clone();
    let mut numeric = Vec::with_capacity(analytic.len());
    for part in 0..4 {
        for idx in 0..probe.params_mut()[part].len() {
            let orig = probe.params_mut()[part][idx];
            probe.params_mut()[part][idx] = orig + h;
            let up = loss_only(&probe, x1, x2, m);
            probe.params_mut()[part][idx] = orig - h;
            let down = loss_only(&probe, x1, x2, m);
            probe.params_mut()[part][idx] = orig;
            numeric.push((up - down) / (2.0 * h));
        }
    }
    let diff: f64 = analytic.iter().zip(&numeric).map(|(a, n)| (a - n).powi(2)).sum::<f64>().sqrt();
    let na = analytic.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nn = numeric.iter().map(|a| a * a).sum::<f64>().sqrt();
    let mut max_entry_error: f64 = 0.0;
    let mut checked = 0;
    for (a, n) in analytic.iter().zip(&numeric) {
        let scale = a.abs().max(n.abs());
        if scale >= floor {
            checked += 1;
            max_entry_error = max_entry_error.max((a - n).abs() / scale);
        }
    }
    GradCheck {
        relative_error: diff / na.max(nn).max(f64::MIN_POSITIVE),
        max_entry_error,
        checked,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Negatives per anchor; `None` uses the rest of the batch.
    pub m: Option<usize>,
    pub noise_r: f64,
    pub noise: NoiseKind,
    pub hidden_size: usize,
    pub m_out: usize,
    pub activation: Activation,
    pub init_scale: f64,
    /// Hidden units drawn at `low_scale` with zero output weights.
    pub low_units: usize,
    pub low_scale: f64,
    pub optimizer: Optimizer,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 25,
            batch_size: 256,
            learning_rate: 0.4,
            m: None,
            noise_r: 0.5,
            noise: NoiseKind::Symmetric,
            hidden_size: 1024,
            m_out: 32,
            activation: Activation::Sin,
            init_scale: 400.0,
            low_units: 16,
            low_scale: 6.0,
            optimizer: Optimizer::Sgd,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.epochs == 0 || self.hidden_size == 0 || self.m_out < 2 {
            return Err(Error::Argument(
                "epochs and hidden size must be positive, output dimension at least 2".into(),
            ));
        }
        if self.low_units >= self.hidden_size {
            return Err(Error::Argument(format!(
                "{} low-frequency units leave no active hidden unit out of {}",
                self.low_units, self.hidden_size
            )));
        }
        if self.batch_size < 2 || self.batch_size > n {
            return Err(Error::Argument(format!(
                "batch size {} must lie in [2, {n}]",
                self.batch_size
            )));
        }
        if let Some(m) = self.m {
            if m == 0 || m >= self.batch_size {
                return Err(Error::Argument(format!(
                    "M = {m} must lie in [1, batch size - 1]"
                )));
            }
        }
        if !(self.learning_rate >= 0.0) || !(self.noise_r >= 0.0) || !(self.init_scale > 0.0) {
            return Err(Error::Argument(
                "learning rate and noise must be nonnegative, init scale positive".into(),
            ));
        }
        Ok(())
    }

    pub fn negatives(&self) -> usize {
        self.m.unwrap_or(self.batch_size - 1)
    }
}

struct Adam {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    t: i32,
}

impl Adam {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(p: &EncoderParams) -> Self {
        let z = Grads::zeros(p);
        let parts: Vec<Vec<f64>> = z.parts().iter().map(|v| v.to_vec()).collect();
        Self {
            m: parts.clone(),
            v: parts,
            t: 0,
        }
    }

    fn step(&mut self, p: &mut EncoderParams, g: &Grads, lr: f64) {
        self.t += 1;
        let c1 = 1.0 - Self::B1.powi(self.t);
        let c2 = 1.0 - Self::B2.powi(self.t);
        for (k, (param, grad)) in p.params_mut().into_iter().zip(g.parts()).enumerate() {
            for ((w, &gi), (m, v)) in param
                .iter_mut()
                .zip(grad.iter())
                .zip(self.m[k].iter_mut().zip(self.v[k].iter_mut()))
            {
                *m = Self::B1 * *m + (1.0 - Self::B1) * gi;
                *v = Self::B2 * *v + (1.0 - Self::B2) * gi * gi;
                *w -= lr * (*m / c1) / ((*v / c2).sqrt() + Self::EPS);
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrainOutcome {
    pub encoder: EncoderParams,
    /// Checkpoint after the first epoch.
    pub initial_encoder: EncoderParams,
    /// Mean batch loss per epoch.
    pub loss_trace: Vec<f64>,
}

/// Trains an encoder on the rows of `data` (points in `R^m_in`).
/// Single-threaded and deterministic in `cfg.seed`.
pub fn train_contrastive(data: &EmbeddingSet, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate(data.n())?;
    let mut rng = rng::stream(cfg.seed, 1);
    let mut params = EncoderParams::init_mixed(
        data.dim(),
        cfg.hidden_size,
        cfg.m_out,
        cfg.activation,
        cfg.init_scale,
        (cfg.low_units, cfg.low_scale),
        &mut rng,
    );
    let mut adam = Adam::new(&params);
    let m = cfg.negatives();
    let bs = cfg.batch_size;
    let mut order: Vec<usize> = (0..data.n()).collect();
    let mut trace = Vec::with_capacity(cfg.epochs);
    let mut initial = None;
    let mut step = 0usize;
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        let batches = data.n() / bs;
        for chunk in order.chunks_exact(bs) {
            let batch = data.select(chunk)?;
            let views = geomsim::augment_with(&batch, cfg.noise_r, 2, rng.random(), cfg.noise)?;
            let (x1, x2) = split_views(&views);
            let (loss, grad) = loss_and_grad(&params, &x1, &x2, m);
            if !loss.is_finite() {
                return Err(Error::Training {
                    step,
                    message: format!("loss is {loss}"),
                });
            }
            match cfg.optimizer {
                Optimizer::Adam => adam.step(&mut params, &grad, cfg.learning_rate),
                Optimizer::Sgd => {
                    for (param, g) in params.params_mut().into_iter().zip(grad.parts()) {
                        axpy(-cfg.learning_rate, g, param);
                    }
                }
            }
            if !params.check_finite() {
                return Err(Error::Training {
                    step,
                    message: "parameters became non-finite".into(),
                });
            }
            total += loss;
            step += 1;
        }
        trace.push(total / batches as f64);
        log::debug!("epoch {epoch}: loss {:.6}", trace[epoch]);
        if epoch == 0 {
            initial = Some(params.clone());
        }
    }
    Ok(TrainOutcome {
        initial_encoder: initial.expect("at least one epoch"),
        encoder: params,
        loss_trace: trace,
    })
}

fn split_views(v: &ViewSet) -> (Vec<f64>, Vec<f64>) {
    let mut a = Vec::with_capacity(v.n() * v.dim());
    let mut b = Vec::with_capacity(v.n() * v.dim());
    for i in 0..v.n() {
        a.extend_from_slice(v.view(i, 0));
        b.extend_from_slice(v.view(i, 1));
    }
    (a, b)
}

fn class_means(f: &EmbeddingSet, labels: &LabelSet) -> Result<Vec<Vec<f64>>> {
    if f.n() != labels.n() {
        return Err(Error::Shape(format!("{} rows but {} labels", f.n(), labels.n())));
    }
    labels.require_nonempty_classes()?;
    let mut means = vec![vec![0.0; f.dim()]; labels.k()];
    for (row, &y) in f.rows().zip(labels.labels()) {
        axpy(1.0, row, &mut means[y]);
    }
    for (mu, c) in means.iter_mut().zip(labels.class_counts()) {
        mu.iter_mut().for_each(|v| *v /= c as f64);
    }
    Ok(means)
}

/// Index of the largest score, lowest index on ties.
fn argmax(scores: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (k, s) in scores.enumerate() {
        if s > best.1 {
            best = (k, s);
        }
    }
    best.0
}

/// Accuracy of the mean classifier fitted on `train` features.
pub fn mean_classifier_accuracy(
    train: &EmbeddingSet,
    train_labels: &LabelSet,
    test: &EmbeddingSet,
    test_labels: &LabelSet,
) -> Result<f64> {
    let means = class_means(train, train_labels)?;
    if test.n() != test_labels.n() || test.dim() != train.dim() {
        return Err(Error::Shape("test features and labels disagree".into()));
    }
    let correct = test
        .rows()
        .zip(test_labels.labels())
        .filter(|(f, &y)| argmax(means.iter().map(|mu| dot(f, mu))) == y)
        .count();
    Ok(correct as f64 / test.n() as f64)
}

/// Mean-classifier accuracy of `encoder` with class means from the encoded
/// training set.
pub fn linear_eval(
    encoder: &EncoderParams,
    train: (&EmbeddingSet, &LabelSet),
    test: (&EmbeddingSet, &LabelSet),
) -> Result<f64> {
    let ftr = encoder.encode(train.0)?;
    let fte = encoder.encode(test.0)?;
    mean_classifier_accuracy(&ftr, train.1, &fte, test.1)
}

/// Leave-one-out mean-classifier accuracy: each sample is scored against
/// class means that exclude itself.
pub fn leave_one_out_accuracy(f: &EmbeddingSet, labels: &LabelSet) -> Result<f64> {
    let means = class_means(f, labels)?;
    let counts = labels.class_counts();
    let correct = f
        .rows()
        .zip(labels.labels())
        .filter(|(row, &y)| {
            let scores = means.iter().enumerate().map(|(k, mu)| {
                let s = dot(row, mu);
                if k == y && counts[y] > 1 {
                    let c = counts[y] as f64;
                    (c * s - dot(row, row)) / (c - 1.0)
                } else {
                    s
                }
            });
            argmax(scores) == y
        })
        .count();
    Ok(correct as f64 / f.n() as f64)
}

/// Train and test splits of the two-cap sphere data.
#[derive(Clone, Debug, PartialEq)]
pub struct SphereDataset {
    pub train: EmbeddingSet,
    pub train_labels: LabelSet,
    pub test: EmbeddingSet,
    pub test_labels: LabelSet,
}

pub const DEFAULT_TRAIN: usize = 5000;
pub const DEFAULT_TEST: usize = 1000;

impl SphereDataset {
    /// Two caps of area 1 around the poles; classes balanced in each split.
    pub fn generate(n_train: usize, n_test: usize, seed: u64) -> Result<Self> {
        let (train, train_labels) =
            geomsim::sample_caps(&GeomConfig::two_caps(n_train, rng::derive(seed, 1)))?;
        let (test, test_labels) =
            geomsim::sample_caps(&GeomConfig::two_caps(n_test, rng::derive(seed, 2)))?;
        Ok(Self {
            train,
            train_labels,
            test,
            test_labels,
        })
    }
}

/// One synthetic training run and its downstream accuracy.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticRun {
    pub config: TrainConfig,
    pub outcome: TrainOutcome,
    pub accuracy: f64,
}

pub fn synthetic_run(data: &SphereDataset, cfg: &TrainConfig) -> Result<SyntheticRun> {
    let outcome = train_contrastive(&data.train, cfg)?;
    let accuracy = linear_eval(
        &outcome.encoder,
        (&data.train, &data.train_labels),
        (&data.test, &data.test_labels),
    )?;
    Ok(SyntheticRun {
        config: cfg.clone(),
        outcome,
        accuracy,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Counterexample {
    /// Both sides identical: perfectly aligned positives.
    pub pairs: PositivePairs,
    pub labels: LabelSet,
    pub accuracy: f64,
}

/// Features uniform on `S^(m-1)` with random balanced labels. Every positive
/// pair coincides, so alignment is perfect, yet the (leave-one-out) mean
/// classifier is at chance.
pub fn chance_counterexample(n: usize, k: usize, m: usize, seed: u64) -> Result<Counterexample> {
    if k < 2 || n < k {
        return Err(Error::Argument(format!("need N >= K >= 2, got N = {n}, K = {k}")));
    }
    if m < 1 {
        return Err(Error::Argument("feature dimension must be positive".into()));
    }
    let mut rng = rng::seeded(seed);
    let values: Vec<f64> = (0..n).flat_map(|_| geomsim::sphere_point(m, &mut rng)).collect();
    let features = EmbeddingSet::from_unit_rows(n, m, values)?;
    let mut y: Vec<usize> = (0..n).map(|i| i % k).collect();
    y.shuffle(&mut rng);
    let labels = LabelSet::new(y, k)?;
    let accuracy = leave_one_out_accuracy(&features, &labels)?;
    let pairs = PositivePairs::new(features.clone(), features)?.with_labels(labels.clone(), labels.clone())?;
    Ok(Counterexample {
        pairs,
        labels,
        accuracy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(seed: u64) -> (EncoderParams, Vec<f64>, Vec<f64>) {
        let mut r = rng::seeded(seed);
        let p = EncoderParams::init(3, 6, 4, Activation::Sin, 2.0, &mut r);
        let x1: Vec<f64> = (0..15).map(|_| r.random::<f64>() - 0.5).collect();
        let x2: Vec<f64> = x1.iter().map(|v| v + 0.1 * (r.random::<f64>() - 0.5)).collect();
        (p, x1, x2)
    }

    #[test]
    fn gradient_matches_finite_differences() {
        for seed in 0..5 {
            let (p, x1, x2) = tiny(seed);
            let c = gradient_check(&p, &x1, &x2, 4, 1e-5, 1e-6);
            assert!(c.relative_error < 1e-4, "{c:?}");
        }
        let mut r = rng::seeded(9);
        let p = EncoderParams::init(3, 5, 3, Activation::Tanh, 1.0, &mut r);
        let x1: Vec<f64> = (0..15).map(|_| r.random::<f64>()).collect();
        let x2: Vec<f64> = x1.iter().rev().copied().collect();
        assert!(gradient_check(&p, &x1, &x2, 2, 1e-5, 1e-6).relative_error < 1e-4);
    }

    #[test]
    fn outputs_are_unit_norm() {
        let (p, x1, _) = tiny(3);
        let e = EmbeddingSet::new(5, 3, x1).unwrap();
        let f = p.encode(&e).unwrap();
        assert!(f.is_normalized());
    }

    #[test]
    fn zero_learning_rate_is_a_no_op() {
        let data = SphereDataset::generate(64, 16, 1).unwrap();
        let cfg = TrainConfig {
            epochs: 3,
            batch_size: 16,
            learning_rate: 0.0,
            hidden_size: 8,
            low_units: 2,
            m_out: 4,
            noise_r: 0.0,
            ..TrainConfig::default()
        };
        let out = train_contrastive(&data.train, &cfg).unwrap();
        let init = EncoderParams::init_mixed(
            3,
            8,
            4,
            Activation::Sin,
            cfg.init_scale,
            (2, cfg.low_scale),
            &mut rng::stream(cfg.seed, 1),
        );
        assert_eq!(out.encoder, init);
    }

    #[test]
    fn training_is_deterministic() {
        let data = SphereDataset::generate(64, 16, 1).unwrap();
        let cfg = TrainConfig {
            epochs: 2,
            batch_size: 16,
            hidden_size: 8,
            low_units: 2,
            m_out: 4,
            ..TrainConfig::default()
        };
        let a = train_contrastive(&data.train, &cfg).unwrap();
        let b = train_contrastive(&data.train, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn distinct_fixed_points_classify_perfectly() {
        let f = EmbeddingSet::from_unit_rows(4, 2, vec![1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0]).unwrap();
        let y = LabelSet::new(vec![0, 0, 1, 1], 2).unwrap();
        assert_eq!(mean_classifier_accuracy(&f, &y, &f, &y).unwrap(), 1.0);
        assert_eq!(leave_one_out_accuracy(&f, &y).unwrap(), 1.0);
    }

    #[test]
    fn ties_go_to_the_lowest_class() {
        assert_eq!(argmax([0.5, 0.5, 0.1].into_iter()), 0);
        assert_eq!(argmax([0.1, 0.5, 0.5].into_iter()), 1);
    }

    #[test]
    fn counterexample_is_aligned() {
        let c = chance_counterexample(200, 2, 8, 4).unwrap();
        assert_eq!(c.pairs.left, c.pairs.right);
        let v = crate::losses::infonce_adjusted(&c.pairs, 4, 2, 0).unwrap();
        assert!((v.positive().unwrap() + 1.0).abs() < 1e-12);
        assert!(chance_counterexample(10, 1, 4, 0).is_err());
    }
}
