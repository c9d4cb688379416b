use serde::{Deserialize, Serialize};

use super::autoencoder::{ae_train, encode, AutoencoderParams};
use super::softmax::{classify, fine_tune, softmax_train, SoftmaxParams, CLASS_COUNT};
use super::TrainConfig;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::features::{build_feature_matrix, fit_norm_stats, normalize_and_flatten, FeatureMatrix, NormStats};
use crate::phasor::{EventClass, EventRecord};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AeSoftmaxConfig {
    pub hidden: usize,
    pub train: TrainConfig,
    /// Joint backpropagation through the encoder after softmax training.
    pub fine_tune: bool,
}

impl Default for AeSoftmaxConfig {
    fn default() -> Self {
        Self {
            hidden: 50,
            train: TrainConfig::default(),
            fine_tune: false,
        }
    }
}

/// Per-dimension affine map of the training range onto [0.1, 0.9], so the
/// sigmoid decoder can reach its targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Squash {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Squash {
    pub fn fit(data: &[Vec<f64>]) -> Result<Self> {
        let d = data
            .first()
            .ok_or_else(|| Error::invalid("cannot fit squash on empty data"))?
            .len();
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for x in data {
            for k in 0..d {
                lo[k] = lo[k].min(x[k]);
                hi[k] = hi[k].max(x[k]);
            }
        }
        Ok(Self { lo, hi })
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(k, &v)| {
                let span = self.hi[k] - self.lo[k];
                if span > 0.0 {
                    0.1 + 0.8 * (v - self.lo[k]) / span
                } else {
                    0.5
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AeSoftmaxModel {
    pub config: AeSoftmaxConfig,
    pub norm: NormStats,
    pub squash: Squash,
    pub autoencoder: AutoencoderParams,
    pub softmax: SoftmaxParams,
}

impl AeSoftmaxModel {
    pub fn fit(records: &[&EventRecord], cfg: &AeSoftmaxConfig, exec: Exec) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::invalid("empty training set"));
        }
        let mats: Vec<FeatureMatrix> = exec.try_map(records, |r| build_feature_matrix(r))?;
        let norm = fit_norm_stats(&mats)?;
        let flat: Vec<Vec<f64>> = mats.iter().map(|m| normalize_and_flatten(m, &norm)).collect();
        let squash = Squash::fit(&flat)?;
        let inputs: Vec<Vec<f64>> = flat.iter().map(|v| squash.apply(v)).collect();
        let labels: Vec<EventClass> = records.iter().map(|r| r.label).collect();

        let autoencoder = ae_train(&inputs, cfg.hidden, &cfg.train)?;
        let codes = inputs
            .iter()
            .map(|x| encode(&autoencoder, x))
            .collect::<Result<Vec<_>>>()?;
        let softmax = softmax_train(&codes, &labels, &cfg.train)?;
        let (autoencoder, softmax) = if cfg.fine_tune {
            fine_tune(&autoencoder, &softmax, &inputs, &labels, &cfg.train)?
        } else {
            (autoencoder, softmax)
        };
        Ok(Self {
            config: *cfg,
            norm,
            squash,
            autoencoder,
            softmax,
        })
    }

    /// Network input for a record: z-scored, flattened, squashed.
    pub fn input(&self, record: &EventRecord) -> Result<Vec<f64>> {
        let m = build_feature_matrix(record)?;
        let x = self.squash.apply(&normalize_and_flatten(&m, &self.norm));
        if x.len() != self.autoencoder.d {
            return Err(Error::invalid(format!(
                "record yields {} inputs, model expects {}",
                x.len(),
                self.autoencoder.d
            )));
        }
        Ok(x)
    }

    pub fn classify(&self, record: &EventRecord) -> Result<(EventClass, [f64; CLASS_COUNT])> {
        classify(&self.autoencoder, &self.softmax, &self.input(record)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn squash_maps_training_range() {
        let data = vec![vec![-2.0, 5.0, 1.0], vec![2.0, 5.0, 3.0], vec![0.0, 5.0, 2.0]];
        let s = Squash::fit(&data).unwrap();
        assert_eq!(s.apply(&data[0]), vec![0.1, 0.5, 0.1]);
        assert_eq!(s.apply(&data[1]), vec![0.9, 0.5, 0.9]);
        let mid = s.apply(&data[2]);
        assert!((mid[0] - 0.5).abs() < 1e-15 && (mid[2] - 0.5).abs() < 1e-15);
    }
}
