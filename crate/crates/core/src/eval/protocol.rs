use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::confusion::{accuracy, ConfusionMatrix};
use super::split::stratified_split;
use crate::ae_softmax::{AeSoftmaxConfig, AeSoftmaxModel};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::pca_svm::{PcaSvmConfig, PcaSvmModel, MODEL_SCHEMA_VERSION};
use crate::phasor::{Dataset, EventRecord, Prediction};
use crate::rng::{self, stream};
use crate::synth::{build_dataset, GeneratorConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "pca-svm")]
    PcaSvm,
    #[serde(rename = "ae-softmax")]
    AeSoftmax,
}

impl Method {
    pub const ALL: [Method; 2] = [Method::PcaSvm, Method::AeSoftmax];

    pub fn name(self) -> &'static str {
        match self {
            Method::PcaSvm => "pca-svm",
            Method::AeSoftmax => "ae-softmax",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown method {s:?} (expected pca-svm or ae-softmax)")))
    }
}

/// Hyperparameters of both pipelines.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MethodConfig {
    pub pca_svm: PcaSvmConfig,
    pub ae_softmax: AeSoftmaxConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", content = "model")]
pub enum TrainedModel {
    #[serde(rename = "pca-svm")]
    PcaSvm(PcaSvmModel),
    #[serde(rename = "ae-softmax")]
    AeSoftmax(AeSoftmaxModel),
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    schema_version: u32,
    #[serde(flatten)]
    model: TrainedModel,
}

impl TrainedModel {
    pub fn method(&self) -> Method {
        match self {
            TrainedModel::PcaSvm(_) => Method::PcaSvm,
            TrainedModel::AeSoftmax(_) => Method::AeSoftmax,
        }
    }

    pub fn predict(&self, record: &EventRecord) -> Result<Prediction> {
        match self {
            TrainedModel::PcaSvm(m) => m.predict(record),
            TrainedModel::AeSoftmax(m) => Ok(Prediction::Class(m.classify(record)?.0)),
        }
    }

    /// False when any SVM hit its iteration cap.
    pub fn converged(&self) -> bool {
        match self {
            TrainedModel::PcaSvm(m) => m.converged(),
            TrainedModel::AeSoftmax(_) => true,
        }
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let file = ModelFile {
            schema_version: MODEL_SCHEMA_VERSION,
            model: self.clone(),
        };
        serde_json::to_writer(&mut w, &file).map_err(|e| Error::format("model", e.to_string()))?;
        w.write_all(b"\n")?;
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        self.write_to(&mut out)?;
        Ok(out)
    }

    pub fn from_slice(bytes: &[u8]) -> Result<Self> {
        #[derive(Deserialize)]
        struct Version {
            schema_version: u32,
        }
        let v: Version = serde_json::from_slice(bytes).map_err(|e| Error::format("model", e.to_string()))?;
        if v.schema_version != MODEL_SCHEMA_VERSION {
            return Err(Error::Schema {
                found: v.schema_version,
                expected: MODEL_SCHEMA_VERSION,
            });
        }
        let file: ModelFile = serde_json::from_slice(bytes).map_err(|e| Error::format("model", e.to_string()))?;
        Ok(file.model)
    }
}

/// Train `method` on `records`. The training set is put in canonical order
/// first, so the result does not depend on the order records are given in.
pub fn fit_method(
    method: Method,
    records: &[&EventRecord],
    cfg: &MethodConfig,
    seed: u64,
    exec: Exec,
) -> Result<TrainedModel> {
    let mut sorted = records.to_vec();
    sorted.sort_by_key(|r| (r.seed, r.label));
    match method {
        Method::PcaSvm => Ok(TrainedModel::PcaSvm(PcaSvmModel::fit(&sorted, &cfg.pca_svm, seed, exec)?)),
        Method::AeSoftmax => {
            let mut ae = cfg.ae_softmax;
            ae.train.seed = rng::derive(seed, stream::TRAIN, ae.train.seed);
            Ok(TrainedModel::AeSoftmax(AeSoftmaxModel::fit(&sorted, &ae, exec)?))
        }
    }
}

pub fn evaluate(model: &TrainedModel, records: &[&EventRecord], exec: Exec) -> Result<ConfusionMatrix> {
    let preds = exec.try_map(records, |r| model.predict(r))?;
    let mut cm = ConfusionMatrix::default();
    for (r, p) in records.iter().zip(preds) {
        cm.record(r.label, p);
    }
    Ok(cm)
}

/// Stratified split, train on one side, confusion matrix on the other.
pub fn train_and_evaluate(
    ds: &Dataset,
    method: Method,
    cfg: &MethodConfig,
    fraction: f64,
    seed: u64,
    exec: Exec,
) -> Result<(TrainedModel, ConfusionMatrix)> {
    let split = stratified_split(ds, fraction, seed)?;
    let train: Vec<&EventRecord> = split.train.iter().map(|&i| &ds.records[i]).collect();
    let test: Vec<&EventRecord> = split.test.iter().map(|&i| &ds.records[i]).collect();
    let model = fit_method(method, &train, cfg, seed, exec)?;
    let cm = evaluate(&model, &test, exec)?;
    Ok((model, cm))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LooResult {
    pub accuracy: f64,
    pub confusion: ConfusionMatrix,
    /// One prediction per record, in dataset order.
    pub predictions: Vec<Prediction>,
    pub converged: bool,
}

/// Leave-one-out with fixed hyperparameters. Each fold's seed comes from the
/// held-out record, so shuffling the dataset permutes nothing but the
/// prediction order.
pub fn leave_one_out(ds: &Dataset, method: Method, cfg: &MethodConfig, seed: u64, exec: Exec) -> Result<LooResult> {
    if ds.len() < 2 {
        return Err(Error::invalid("leave-one-out needs at least two records"));
    }
    let folds = exec.map_range(ds.len(), |held| -> Result<(Prediction, bool)> {
        let train: Vec<&EventRecord> = ds
            .records
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != held)
            .map(|(_, r)| r)
            .collect();
        let fold_seed = rng::derive(seed, stream::FOLD, ds.records[held].seed);
        let model = fit_method(method, &train, cfg, fold_seed, Exec::Sequential)?;
        Ok((model.predict(&ds.records[held])?, model.converged()))
    });
    let mut cm = ConfusionMatrix::default();
    let mut predictions = Vec::with_capacity(ds.len());
    let mut converged = true;
    for (r, fold) in ds.records.iter().zip(folds) {
        let (p, ok) = fold?;
        cm.record(r.label, p);
        predictions.push(p);
        converged &= ok;
    }
    Ok(LooResult {
        accuracy: accuracy(&cm)?,
        confusion: cm,
        predictions,
        converged,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub methods: Vec<Method>,
    pub sps: Vec<u32>,
    pub fractions: Vec<f64>,
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub method: Method,
    pub sps: u32,
    pub fraction: f64,
    pub seed: u64,
    pub accuracy: f64,
    #[serde(skip)]
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    /// Sorted by method, sps, fraction, seed.
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub const CSV_HEADER: &'static str = "method,sps,fraction,seed,accuracy";

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        for r in &self.rows {
            writeln!(w, "{},{},{},{},{}", r.method, r.sps, r.fraction, r.seed, r.accuracy)?;
        }
        Ok(())
    }

    pub fn converged(&self) -> bool {
        self.rows.iter().all(|r| r.converged)
    }

    /// Mean accuracy over seeds for one `(method, sps, fraction)` cell.
    pub fn mean_accuracy(&self, method: Method, sps: u32, fraction: f64) -> Option<f64> {
        let acc: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.method == method && r.sps == sps && r.fraction == fraction)
            .map(|r| r.accuracy)
            .collect();
        (!acc.is_empty()).then(|| acc.iter().sum::<f64>() / acc.len() as f64)
    }
}

/// Every `(method, sps, fraction, seed)` combination. The dataset for
/// `(sps, seed)` is generated from `base` with that sampling rate and
/// `master_seed = seed`; the split also uses `seed`.
pub fn run_sweep(spec: &SweepSpec, base: &GeneratorConfig, cfg: &MethodConfig, exec: Exec) -> Result<SweepResult> {
    let mut methods = spec.methods.clone();
    methods.sort();
    methods.dedup();
    let mut sps = spec.sps.clone();
    sps.sort();
    sps.dedup();
    let mut fractions = spec.fractions.clone();
    fractions.sort_by(f64::total_cmp);
    fractions.dedup();
    let mut seeds = spec.seeds.clone();
    seeds.sort();
    seeds.dedup();
    if methods.is_empty() || sps.is_empty() || fractions.is_empty() || seeds.is_empty() {
        return Err(Error::invalid("sweep needs at least one method, sps, fraction and seed"));
    }
    for &f in &fractions {
        if !(f > 0.0 && f < 1.0) {
            return Err(Error::invalid(format!("training fraction {f} outside (0, 1)")));
        }
    }

    let ds_keys: Vec<(u32, u64)> = sps.iter().flat_map(|&s| seeds.iter().map(move |&sd| (s, sd))).collect();
    let datasets = exec.try_map(&ds_keys, |&(s, sd)| {
        build_dataset(&base.clone().with_sps(s).with_seed(sd), Exec::Sequential)
    })?;
    let dataset_for = |s: u32, sd: u64| &datasets[ds_keys.iter().position(|&k| k == (s, sd)).unwrap()];

    let mut cells = Vec::new();
    for &m in &methods {
        for &s in &sps {
            for &f in &fractions {
                for &sd in &seeds {
                    cells.push((m, s, f, sd));
                }
            }
        }
    }
    let rows = exec.try_map(&cells, |&(method, s, fraction, seed)| -> Result<SweepRow> {
        let (model, cm) = train_and_evaluate(dataset_for(s, seed), method, cfg, fraction, seed, Exec::Sequential)?;
        Ok(SweepRow {
            method,
            sps: s,
            fraction,
            seed,
            accuracy: accuracy(&cm)?,
            converged: model.converged(),
        })
    })?;
    Ok(SweepResult { rows })
}
