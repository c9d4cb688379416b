//! Single-hidden-layer autoencoder `z = σ(W x + b)`, `x' = σ(W' z + b')`.
//!
//! Training minimizes `(1/B) Σ ½‖x' − t‖² + (l2/2)(‖W‖² + ‖W'‖²)` by plain
//! mini-batch gradient descent; biases are not penalized. The reported
//! reconstruction error is the per-entry mean squared error.

use serde::{Deserialize, Serialize};

use super::{batches, glorot, sigmoid, TrainConfig};
use crate::error::{Error, Result};
use crate::rng::{self, stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutoencoderParams {
    pub d: usize,
    pub hidden: usize,
    /// `hidden × d`, row-major.
    pub w_enc: Vec<f64>,
    pub b_enc: Vec<f64>,
    /// `d × hidden`, row-major.
    pub w_dec: Vec<f64>,
    pub b_dec: Vec<f64>,
}

impl AutoencoderParams {
    pub fn zeros(d: usize, hidden: usize) -> Self {
        Self {
            d,
            hidden,
            w_enc: vec![0.0; hidden * d],
            b_enc: vec![0.0; hidden],
            w_dec: vec![0.0; d * hidden],
            b_dec: vec![0.0; d],
        }
    }

    pub fn init(d: usize, hidden: usize, seed: u64) -> Self {
        let mut r = rng::rng(rng::derive(seed, stream::TRAIN, 0));
        Self {
            d,
            hidden,
            w_enc: glorot(&mut r, hidden * d, d, hidden),
            b_enc: vec![0.0; hidden],
            w_dec: glorot(&mut r, d * hidden, d, hidden),
            b_dec: vec![0.0; d],
        }
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.d {
            return Err(Error::invalid(format!(
                "input length {} does not match autoencoder width {}",
                x.len(),
                self.d
            )));
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        [&self.w_enc, &self.b_enc, &self.w_dec, &self.b_dec]
            .iter()
            .all(|v| v.iter().all(|x| x.is_finite()))
    }

    fn encode_into(&self, x: &[f64], z: &mut [f64]) {
        for (j, zj) in z.iter_mut().enumerate() {
            let row = &self.w_enc[j * self.d..(j + 1) * self.d];
            *zj = sigmoid(dot(row, x) + self.b_enc[j]);
        }
    }

    fn decode_into(&self, z: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.w_dec[i * self.hidden..(i + 1) * self.hidden];
            *o = sigmoid(dot(row, z) + self.b_dec[i]);
        }
    }
}

/// Four independent accumulators so the loop vectorizes.
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

pub fn encode(p: &AutoencoderParams, x: &[f64]) -> Result<Vec<f64>> {
    p.check(x)?;
    let mut z = vec![0.0; p.hidden];
    p.encode_into(x, &mut z);
    Ok(z)
}

pub fn reconstruct(p: &AutoencoderParams, x: &[f64]) -> Result<Vec<f64>> {
    let z = encode(p, x)?;
    let mut out = vec![0.0; p.d];
    p.decode_into(&z, &mut out);
    Ok(out)
}

/// Mean squared error between reconstructions and the inputs themselves.
pub fn reconstruction_error(p: &AutoencoderParams, data: &[Vec<f64>]) -> Result<f64> {
    let mut total = 0.0;
    for x in data {
        let r = reconstruct(p, x)?;
        total += r.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
    }
    Ok(total / (data.len() * p.d).max(1) as f64)
}

/// Training objective on `data`, the quantity the gradients differentiate.
pub fn ae_loss(p: &AutoencoderParams, data: &[Vec<f64>], l2: f64) -> Result<f64> {
    let mut total = 0.0;
    for x in data {
        let r = reconstruct(p, x)?;
        total += 0.5 * r.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
    }
    let penalty = 0.5 * l2 * (sum_sq(&p.w_enc) + sum_sq(&p.w_dec));
    Ok(total / data.len() as f64 + penalty)
}

fn sum_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// Gradient of [`ae_loss`] over `batch`, laid out like the parameters.
pub fn ae_gradient(p: &AutoencoderParams, data: &[Vec<f64>], batch: &[usize], l2: f64) -> AutoencoderParams {
    let (d, h) = (p.d, p.hidden);
    let mut g = AutoencoderParams::zeros(d, h);
    let mut z = vec![0.0; h];
    let mut out = vec![0.0; d];
    let mut delta_out = vec![0.0; d];
    let mut delta_h = vec![0.0; h];
    let scale = 1.0 / batch.len() as f64;
    for &n in batch {
        let x = &data[n];
        p.encode_into(x, &mut z);
        p.decode_into(&z, &mut out);
        for i in 0..d {
            delta_out[i] = (out[i] - x[i]) * out[i] * (1.0 - out[i]);
        }
        delta_h.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..d {
            let di = delta_out[i];
            let row = &p.w_dec[i * h..(i + 1) * h];
            let grow = &mut g.w_dec[i * h..(i + 1) * h];
            for j in 0..h {
                grow[j] += di * z[j];
                delta_h[j] += row[j] * di;
            }
            g.b_dec[i] += di;
        }
        for j in 0..h {
            let dj = delta_h[j] * z[j] * (1.0 - z[j]);
            let grow = &mut g.w_enc[j * d..(j + 1) * d];
            for (gw, xi) in grow.iter_mut().zip(x) {
                *gw += dj * xi;
            }
            g.b_enc[j] += dj;
        }
    }
    let finish = |gv: &mut [f64], w: Option<&[f64]>| match w {
        Some(w) => gv.iter_mut().zip(w).for_each(|(a, b)| *a = *a * scale + l2 * b),
        None => gv.iter_mut().for_each(|a| *a *= scale),
    };
    finish(&mut g.w_enc, Some(&p.w_enc));
    finish(&mut g.w_dec, Some(&p.w_dec));
    finish(&mut g.b_enc, None);
    finish(&mut g.b_dec, None);
    g
}

fn step(p: &mut AutoencoderParams, g: &AutoencoderParams, lr: f64) {
    for (w, gw) in [
        (&mut p.w_enc, &g.w_enc),
        (&mut p.b_enc, &g.b_enc),
        (&mut p.w_dec, &g.w_dec),
        (&mut p.b_dec, &g.b_dec),
    ] {
        w.iter_mut().zip(gw).for_each(|(a, b)| *a -= lr * b);
    }
}

fn check_data(data: &[Vec<f64>]) -> Result<usize> {
    let first = data
        .first()
        .ok_or_else(|| Error::invalid("autoencoder training data is empty"))?;
    let d = first.len();
    if d == 0 || data.iter().any(|x| x.len() != d) {
        return Err(Error::invalid("autoencoder inputs must share a nonzero length"));
    }
    Ok(d)
}

pub fn ae_train(data: &[Vec<f64>], hidden: usize, cfg: &TrainConfig) -> Result<AutoencoderParams> {
    Ok(train(data, hidden, cfg, false)?.0)
}

/// Trains and also returns the reconstruction error before training and
/// after every epoch (`epochs_ae + 1` values).
pub fn ae_train_with_history(
    data: &[Vec<f64>],
    hidden: usize,
    cfg: &TrainConfig,
) -> Result<(AutoencoderParams, Vec<f64>)> {
    train(data, hidden, cfg, true)
}

fn train(data: &[Vec<f64>], hidden: usize, cfg: &TrainConfig, track: bool) -> Result<(AutoencoderParams, Vec<f64>)> {
    cfg.validate()?;
    let d = check_data(data)?;
    if hidden == 0 {
        return Err(Error::invalid("hidden size must be positive"));
    }
    let mut p = AutoencoderParams::init(d, hidden, cfg.seed);
    let mut order = rng::rng(rng::derive(cfg.seed, stream::TRAIN, 1));
    let mut history = Vec::new();
    if track {
        history.push(reconstruction_error(&p, data)?);
    }
    for _ in 0..cfg.epochs_ae {
        for batch in batches(&mut order, data.len(), cfg.batch_size) {
            let g = ae_gradient(&p, data, &batch, cfg.l2);
            step(&mut p, &g, cfg.learning_rate);
        }
        if track {
            history.push(reconstruction_error(&p, data)?);
        }
    }
    Ok((p, history))
}
