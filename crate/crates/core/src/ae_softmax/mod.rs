//! Pipeline 2: z-scored, flattened feature matrices compressed by a sigmoid
//! autoencoder, then classified by a softmax layer on the encodings.

pub mod autoencoder;
pub mod pipeline;
pub mod softmax;

pub use autoencoder::{
    ae_loss, ae_train, ae_train_with_history, encode, reconstruct, reconstruction_error,
    AutoencoderParams,
};
pub use pipeline::{AeSoftmaxConfig, AeSoftmaxModel, Squash};
pub use softmax::{
    classify, fine_tune, softmax, softmax_loss, softmax_train, softmax_train_with_history,
    SoftmaxParams,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs_ae: usize,
    pub epochs_softmax: usize,
    pub batch_size: usize,
    pub l2: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            epochs_ae: 200,
            epochs_softmax: 200,
            batch_size: 16,
            l2: 1e-4,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning_rate must be positive"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size must be positive"));
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return Err(Error::invalid("l2 must be >= 0"));
        }
        Ok(())
    }
}

/// Overflow-safe logistic function, kept strictly inside (0, 1).
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    const HI: f64 = 1.0 - f64::EPSILON / 2.0;
    let s = if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    };
    s.clamp(f64::MIN_POSITIVE, HI)
}

/// Uniform Glorot-style initialization in `[−r, r]`, `r = √(6 / (fan_in + fan_out))`.
pub(crate) fn glorot(rng: &mut crate::rng::Rng, n: usize, fan_in: usize, fan_out: usize) -> Vec<f64> {
    use rand::Rng as _;
    let r = (6.0 / (fan_in + fan_out) as f64).sqrt();
    (0..n).map(|_| rng.random_range(-r..=r)).collect()
}

/// Shuffled mini-batches of `0..n` for one epoch.
pub(crate) fn batches(rng: &mut crate::rng::Rng, n: usize, batch: usize) -> Vec<Vec<usize>> {
    use rand::seq::SliceRandom;
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    idx.chunks(batch).map(<[usize]>::to_vec).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_limits() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(1e6) < 1.0 && (1.0 - sigmoid(1e6)) < 1e-9);
        assert!(sigmoid(-1e6) > 0.0);
        assert!((sigmoid(2.0) + sigmoid(-2.0) - 1.0).abs() < 1e-15);
    }
}
