//! Pipeline 1: covariance eigenvalues of the feature matrix fed to a
//! one-against-all Gaussian-kernel SVM.

pub mod ova;
pub mod pca;
pub mod smo;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::features::{build_feature_matrix, FEATURE_COUNT};
use crate::phasor::{EventClass, EventRecord, Prediction};
use crate::rng::{self, stream};

pub use ova::{decide, MultiSvmModel, Standardizer};
pub use pca::{pca_eigenvalues, PcaSummary};
pub use smo::{gaussian_kernel, smo_solve, smo_train, BinarySvmModel, SvmHyperParams};

pub const MODEL_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PcaSvmConfig {
    /// Number of leading eigenvalues fed to the SVM, 1..=6.
    pub k: usize,
    pub hyper: SvmHyperParams,
    /// Pick `(c, σ)` by 3-fold cross-validation over [`CV_GRID_C`] × [`CV_GRID_SIGMA`].
    pub cross_validate: bool,
}

impl Default for PcaSvmConfig {
    fn default() -> Self {
        Self {
            k: FEATURE_COUNT,
            hyper: SvmHyperParams::default(),
            cross_validate: false,
        }
    }
}

pub const CV_GRID_C: [f64; 3] = [1.0, 10.0, 100.0];
pub const CV_GRID_SIGMA: [f64; 3] = [0.5, 1.0, 2.0];

/// Eigenvalue summary of one record.
pub fn record_eigenvalues(record: &EventRecord, k: usize) -> Result<Vec<f64>> {
    Ok(pca_eigenvalues(&build_feature_matrix(record)?, k)?.eigenvalues)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaSvmModel {
    pub k: usize,
    pub svm: MultiSvmModel,
}

impl PcaSvmModel {
    pub fn fit(records: &[&EventRecord], cfg: &PcaSvmConfig, seed: u64, exec: Exec) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::invalid("empty training set"));
        }
        let x = exec.try_map(records, |r| record_eigenvalues(r, cfg.k))?;
        let labels: Vec<EventClass> = records.iter().map(|r| r.label).collect();
        let hyper = if cfg.cross_validate {
            select_hyperparams(&x, &labels, &cfg.hyper, seed, exec)?
        } else {
            cfg.hyper
        };
        let svm = MultiSvmModel::train(&x, &labels, &hyper, exec)?;
        Ok(Self { k: cfg.k, svm })
    }

    pub fn predict(&self, record: &EventRecord) -> Result<Prediction> {
        Ok(self.svm.predict(&record_eigenvalues(record, self.k)?))
    }

    pub fn converged(&self) -> bool {
        self.svm.converged()
    }
}

/// 3-fold stratified cross-validation over the `(c, σ)` grid; ties go to the
/// earliest grid point.
pub fn select_hyperparams(
    x: &[Vec<f64>],
    labels: &[EventClass],
    base: &SvmHyperParams,
    seed: u64,
    exec: Exec,
) -> Result<SvmHyperParams> {
    use rand::seq::SliceRandom;
    const FOLDS: usize = 3;
    let mut fold_of = vec![0usize; x.len()];
    let mut r = rng::rng(rng::derive(seed, stream::SPLIT, 3));
    for class in EventClass::ALL {
        let mut idx: Vec<usize> = (0..x.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(&mut r);
        for (pos, &i) in idx.iter().enumerate() {
            fold_of[i] = pos % FOLDS;
        }
    }
    let grid: Vec<SvmHyperParams> = CV_GRID_C
        .iter()
        .flat_map(|&c| CV_GRID_SIGMA.iter().map(move |&sigma| SvmHyperParams { c, sigma, ..*base }))
        .collect();
    let scores = exec.try_map(&grid, |h| -> Result<usize> {
        let mut correct = 0;
        for f in 0..FOLDS {
            let (tr, te): (Vec<usize>, Vec<usize>) = (0..x.len()).partition(|&i| fold_of[i] != f);
            let xt: Vec<Vec<f64>> = tr.iter().map(|&i| x[i].clone()).collect();
            let lt: Vec<EventClass> = tr.iter().map(|&i| labels[i]).collect();
            if EventClass::ALL.iter().any(|c| !lt.contains(c)) {
                return Err(Error::invalid("cross-validation fold is missing a class"));
            }
            let m = MultiSvmModel::train(&xt, &lt, h, Exec::Sequential)?;
            correct += te
                .iter()
                .filter(|&&i| m.predict(&x[i]) == Prediction::Class(labels[i]))
                .count();
        }
        Ok(correct)
    })?;
    let mut best = 0;
    for (g, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = g;
        }
    }
    Ok(grid[best])
}
