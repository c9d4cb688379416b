//! Softmax output layer trained by cross-entropy on frozen encodings, and
//! optional joint fine-tuning through the encoder.

use serde::{Deserialize, Serialize};

use super::autoencoder::{dot, encode, AutoencoderParams};
use super::{batches, glorot, sigmoid, TrainConfig};
use crate::error::{Error, Result};
use crate::phasor::EventClass;
use crate::rng::{self, stream};

pub const CLASS_COUNT: usize = 3;

/// `f_j(x) = e^{x_j} / Σ_i e^{x_i}`, evaluated after subtracting `max x`.
pub fn softmax(x: &[f64]) -> Vec<f64> {
    let m = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = x.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftmaxParams {
    pub hidden: usize,
    /// `3 × hidden`, row-major.
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

impl SoftmaxParams {
    pub fn init(hidden: usize, seed: u64) -> Self {
        let mut r = rng::rng(rng::derive(seed, stream::TRAIN, 2));
        Self {
            hidden,
            w: glorot(&mut r, CLASS_COUNT * hidden, hidden, CLASS_COUNT),
            b: vec![0.0; CLASS_COUNT],
        }
    }

    pub fn logits(&self, z: &[f64]) -> [f64; CLASS_COUNT] {
        std::array::from_fn(|c| dot(&self.w[c * self.hidden..(c + 1) * self.hidden], z) + self.b[c])
    }

    pub fn is_finite(&self) -> bool {
        self.w.iter().chain(&self.b).all(|x| x.is_finite())
    }
}

/// Index of the largest value, ties to the lowest index.
fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Class from logits: argmax, so adding a constant to every logit never
/// changes the outcome.
pub fn class_from_logits(logits: &[f64; CLASS_COUNT]) -> EventClass {
    EventClass::from_index(argmax(logits))
}

pub fn classify(
    ae: &AutoencoderParams,
    sm: &SoftmaxParams,
    x: &[f64],
) -> Result<(EventClass, [f64; CLASS_COUNT])> {
    let z = encode(ae, x)?;
    if z.len() != sm.hidden {
        return Err(Error::invalid("softmax width does not match the encoder"));
    }
    let logits = sm.logits(&z);
    let p = softmax(&logits);
    Ok((class_from_logits(&logits), [p[0], p[1], p[2]]))
}

/// Mean cross-entropy plus `(l2/2)‖w‖²`.
pub fn softmax_loss(p: &SoftmaxParams, z: &[Vec<f64>], labels: &[EventClass], l2: f64) -> f64 {
    let ce: f64 = z
        .iter()
        .zip(labels)
        .map(|(zi, l)| {
            let lg = p.logits(zi);
            let m = lg.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = m + lg.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
            lse - lg[l.index()]
        })
        .sum();
    ce / z.len() as f64 + 0.5 * l2 * p.w.iter().map(|w| w * w).sum::<f64>()
}

pub fn softmax_gradient(
    p: &SoftmaxParams,
    z: &[Vec<f64>],
    labels: &[EventClass],
    batch: &[usize],
    l2: f64,
) -> SoftmaxParams {
    let h = p.hidden;
    let mut g = SoftmaxParams {
        hidden: h,
        w: vec![0.0; CLASS_COUNT * h],
        b: vec![0.0; CLASS_COUNT],
    };
    let scale = 1.0 / batch.len() as f64;
    for &n in batch {
        let prob = softmax(&p.logits(&z[n]));
        for c in 0..CLASS_COUNT {
            let delta = prob[c] - if labels[n].index() == c { 1.0 } else { 0.0 };
            for (gw, zj) in g.w[c * h..(c + 1) * h].iter_mut().zip(&z[n]) {
                *gw += delta * zj;
            }
            g.b[c] += delta;
        }
    }
    g.w.iter_mut().zip(&p.w).for_each(|(gw, w)| *gw = *gw * scale + l2 * w);
    g.b.iter_mut().for_each(|gb| *gb *= scale);
    g
}

fn check_training_set(z: &[Vec<f64>], labels: &[EventClass]) -> Result<usize> {
    if z.is_empty() {
        return Err(Error::invalid("softmax training set is empty"));
    }
    if z.len() != labels.len() {
        return Err(Error::invalid("encodings and labels differ in length"));
    }
    let h = z[0].len();
    if h == 0 || z.iter().any(|v| v.len() != h) {
        return Err(Error::invalid("encodings must share a nonzero length"));
    }
    Ok(h)
}

/// Labels given as class codes; anything outside 1..=3 is rejected.
pub fn labels_from_codes(codes: &[u8]) -> Result<Vec<EventClass>> {
    codes.iter().map(|&c| EventClass::from_code(c)).collect()
}

pub fn softmax_train(z: &[Vec<f64>], labels: &[EventClass], cfg: &TrainConfig) -> Result<SoftmaxParams> {
    Ok(softmax_train_with_history(z, labels, cfg)?.0)
}

/// Trains and returns the training loss before training and after each epoch.
pub fn softmax_train_with_history(
    z: &[Vec<f64>],
    labels: &[EventClass],
    cfg: &TrainConfig,
) -> Result<(SoftmaxParams, Vec<f64>)> {
    cfg.validate()?;
    let h = check_training_set(z, labels)?;
    let mut p = SoftmaxParams::init(h, cfg.seed);
    let mut order = rng::rng(rng::derive(cfg.seed, stream::TRAIN, 3));
    let mut history = vec![softmax_loss(&p, z, labels, cfg.l2)];
    for _ in 0..cfg.epochs_softmax {
        for batch in batches(&mut order, z.len(), cfg.batch_size) {
            let g = softmax_gradient(&p, z, labels, &batch, cfg.l2);
            p.w.iter_mut().zip(&g.w).for_each(|(a, b)| *a -= cfg.learning_rate * b);
            p.b.iter_mut().zip(&g.b).for_each(|(a, b)| *a -= cfg.learning_rate * b);
        }
        history.push(softmax_loss(&p, z, labels, cfg.l2));
    }
    Ok((p, history))
}

/// Cross-entropy of the stacked encoder + softmax, plus l2 on all weights
/// involved.
pub fn joint_loss(
    ae: &AutoencoderParams,
    sm: &SoftmaxParams,
    x: &[Vec<f64>],
    labels: &[EventClass],
    l2: f64,
) -> Result<f64> {
    let z = x.iter().map(|v| encode(ae, v)).collect::<Result<Vec<_>>>()?;
    Ok(softmax_loss(sm, &z, labels, l2) + 0.5 * l2 * ae.w_enc.iter().map(|w| w * w).sum::<f64>())
}

/// Gradient of [`joint_loss`] with respect to the encoder and softmax
/// parameters (decoder entries of the returned autoencoder are zero).
pub fn joint_gradient(
    ae: &AutoencoderParams,
    sm: &SoftmaxParams,
    x: &[Vec<f64>],
    labels: &[EventClass],
    batch: &[usize],
    l2: f64,
) -> (AutoencoderParams, SoftmaxParams) {
    let (d, h) = (ae.d, ae.hidden);
    let mut ga = AutoencoderParams::zeros(d, h);
    let mut gs = SoftmaxParams {
        hidden: h,
        w: vec![0.0; CLASS_COUNT * h],
        b: vec![0.0; CLASS_COUNT],
    };
    let scale = 1.0 / batch.len() as f64;
    let mut z = vec![0.0; h];
    let mut dz = vec![0.0; h];
    for &n in batch {
        let xn = &x[n];
        for j in 0..h {
            z[j] = sigmoid(dot(&ae.w_enc[j * d..(j + 1) * d], xn) + ae.b_enc[j]);
        }
        let prob = softmax(&sm.logits(&z));
        dz.iter_mut().for_each(|v| *v = 0.0);
        for c in 0..CLASS_COUNT {
            let delta = prob[c] - if labels[n].index() == c { 1.0 } else { 0.0 };
            for j in 0..h {
                gs.w[c * h + j] += delta * z[j];
                dz[j] += sm.w[c * h + j] * delta;
            }
            gs.b[c] += delta;
        }
        for j in 0..h {
            let dj = dz[j] * z[j] * (1.0 - z[j]);
            for (gw, xi) in ga.w_enc[j * d..(j + 1) * d].iter_mut().zip(xn) {
                *gw += dj * xi;
            }
            ga.b_enc[j] += dj;
        }
    }
    ga.w_enc.iter_mut().zip(&ae.w_enc).for_each(|(g, w)| *g = *g * scale + l2 * w);
    ga.b_enc.iter_mut().for_each(|g| *g *= scale);
    gs.w.iter_mut().zip(&sm.w).for_each(|(g, w)| *g = *g * scale + l2 * w);
    gs.b.iter_mut().for_each(|g| *g *= scale);
    (ga, gs)
}

/// Joint backpropagation of the classification loss through the encoder for
/// `cfg.epochs_softmax` epochs.
pub fn fine_tune(
    ae: &AutoencoderParams,
    sm: &SoftmaxParams,
    x: &[Vec<f64>],
    labels: &[EventClass],
    cfg: &TrainConfig,
) -> Result<(AutoencoderParams, SoftmaxParams)> {
    cfg.validate()?;
    check_training_set(x, labels)?;
    let (mut ae, mut sm) = (ae.clone(), sm.clone());
    let mut order = rng::rng(rng::derive(cfg.seed, stream::TRAIN, 4));
    let lr = cfg.learning_rate;
    for _ in 0..cfg.epochs_softmax {
        for batch in batches(&mut order, x.len(), cfg.batch_size) {
            let (ga, gs) = joint_gradient(&ae, &sm, x, labels, &batch, cfg.l2);
            ae.w_enc.iter_mut().zip(&ga.w_enc).for_each(|(a, g)| *a -= lr * g);
            ae.b_enc.iter_mut().zip(&ga.b_enc).for_each(|(a, g)| *a -= lr * g);
            sm.w.iter_mut().zip(&gs.w).for_each(|(a, g)| *a -= lr * g);
            sm.b.iter_mut().zip(&gs.b).for_each(|(a, g)| *a -= lr * g);
        }
    }
    Ok((ae, sm))
}
