//! Classification of disruptive distribution-grid events from synchrophasor
//! (PMU) windows.
//!
//! The crate covers the whole experimental loop:
//!
//! * [`phasor`]: domain types (samples, labeled one-second windows, datasets)
//!   and the newline-delimited dataset file format.
//! * [`synth`]: a Thevenin-equivalent generator for the three event classes
//!   (capacitor switching malfunction, OLTC malfunction, abrupt load change).
//! * [`features`]: the six-column transition feature matrix and the
//!   normalization used by the neural pipeline.
//! * [`pca_svm`]: covariance eigenvalues, an SMO-trained Gaussian-kernel SVM,
//!   and one-against-all prediction with a rejection outcome.
//! * [`ae_softmax`]: a sigmoid autoencoder followed by a softmax layer.
//! * [`eval`]: stratified splits, confusion matrices, leave-one-out and
//!   training-fraction sweeps.
//!
//! Data-parallel loops (record generation, folds, sweep cells) go through
//! [`exec`], which uses rayon when the `parallel` feature is enabled and
//! falls back to plain iteration otherwise. Results are identical either way.

pub mod ae_softmax;
pub mod error;
pub mod eval;
pub mod exec;
pub mod features;
pub mod pca_svm;
pub mod phasor;
pub mod rng;
pub mod synth;

pub use error::{Error, Result};
pub use phasor::{Dataset, EventClass, EventRecord, PhasorSample, Prediction, ScenarioParams};
