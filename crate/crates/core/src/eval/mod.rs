//! Evaluation protocol: stratified splits, confusion matrices, accuracy,
//! leave-one-out and training-fraction sweeps.

pub mod confusion;
pub mod protocol;
pub mod split;

pub use confusion::{accuracy, confusion_percentages, ConfusionMatrix};
pub use protocol::{
    evaluate, fit_method, leave_one_out, run_sweep, train_and_evaluate, LooResult, Method,
    MethodConfig, SweepResult, SweepRow, SweepSpec, TrainedModel,
};
pub use split::{stratified_split, stratified_subsample, Split};
