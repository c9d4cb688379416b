//! One-against-all combination of three binary SVMs.

use serde::{Deserialize, Serialize};

use super::smo::{smo_train, BinarySvmModel, SvmHyperParams};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::phasor::{EventClass, Prediction};

/// Per-dimension standardization of the SVM inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &[Vec<f64>]) -> Result<Self> {
        let n = x.len();
        if n == 0 {
            return Err(Error::invalid("cannot standardize an empty set"));
        }
        let d = x[0].len();
        let mut mean = vec![0.0; d];
        for v in x {
            for (m, a) in mean.iter_mut().zip(v) {
                *m += a;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let mut std = vec![0.0; d];
        for v in x {
            for ((s, a), m) in std.iter_mut().zip(v).zip(&mean) {
                *s += (a - m) * (a - m);
            }
        }
        std.iter_mut()
            .for_each(|s| *s = (*s / n as f64).sqrt().max(crate::features::STD_FLOOR));
        Ok(Self { mean, std })
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(a, (m, s))| (a - m) / s)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiSvmModel {
    pub hyper: SvmHyperParams,
    pub standardizer: Standardizer,
    /// Class-vs-rest models ordered by class code.
    pub models: [BinarySvmModel; 3],
}

/// One-against-all rule: rejection when no model claims the input,
/// otherwise the largest decision value, ties to the lowest class code.
pub fn decide(values: [f64; 3]) -> Prediction {
    let mut best: Option<(usize, f64)> = None;
    for (c, &v) in values.iter().enumerate() {
        if v > 0.0 && best.is_none_or(|(_, b)| v > b) {
            best = Some((c, v));
        }
    }
    match best {
        Some((c, _)) => Prediction::Class(EventClass::from_index(c)),
        None => Prediction::NonClassified,
    }
}

impl MultiSvmModel {
    /// Trains the three class-vs-rest SVMs on raw (unstandardized) inputs.
    pub fn train(
        x: &[Vec<f64>],
        labels: &[EventClass],
        hyper: &SvmHyperParams,
        exec: Exec,
    ) -> Result<Self> {
        if x.len() != labels.len() {
            return Err(Error::invalid("inputs and labels differ in length"));
        }
        let standardizer = Standardizer::fit(x)?;
        let z: Vec<Vec<f64>> = x.iter().map(|v| standardizer.apply(v)).collect();
        let models = exec.try_map(&EventClass::ALL, |&class| {
            let y: Vec<f64> = labels
                .iter()
                .map(|&l| if l == class { 1.0 } else { -1.0 })
                .collect();
            smo_train(&z, &y, hyper)
        })?;
        let models: [BinarySvmModel; 3] = models
            .try_into()
            .map_err(|_| Error::invalid("expected three binary models"))?;
        Ok(Self {
            hyper: *hyper,
            standardizer,
            models,
        })
    }

    pub fn decision_values(&self, x: &[f64]) -> [f64; 3] {
        let z = self.standardizer.apply(x);
        std::array::from_fn(|c| self.models[c].decision(&z))
    }

    pub fn predict(&self, x: &[f64]) -> Prediction {
        decide(self.decision_values(x))
    }

    pub fn converged(&self) -> bool {
        self.models.iter().all(|m| m.converged)
    }
}
