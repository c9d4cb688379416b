//! Synchrophasor domain types and the dataset file format.
//!
//! Magnitudes are per-unit, angles are degrees in (−180, 180], and time is
//! seconds from the start of a one-second window.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Current version of the dataset file header.
pub const DATASET_SCHEMA_VERSION: u32 = 1;

/// Reporting rates supported by the generator and the CLI.
pub const SUPPORTED_SPS: [u32; 2] = [60, 120];

/// Wrap an angle in degrees into (−180, 180].
pub fn wrap_deg(angle: f64) -> f64 {
    let mut a = angle % 360.0;
    if a <= -180.0 {
        a += 360.0;
    } else if a > 180.0 {
        a -= 360.0;
    }
    a
}

/// One timestamped synchrophasor reading.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasorSample {
    pub t: f64,
    pub v_mag: f64,
    pub v_ang: f64,
    pub i_mag: f64,
    pub i_ang: f64,
}

/// The three labeled event classes. Codes are fixed at 1, 2, 3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum EventClass {
    CapacitorSwitchMalfunction,
    OltcSwitchMalfunction,
    AbruptLoadChange,
}

impl EventClass {
    pub const ALL: [EventClass; 3] = [
        EventClass::CapacitorSwitchMalfunction,
        EventClass::OltcSwitchMalfunction,
        EventClass::AbruptLoadChange,
    ];

    pub fn code(self) -> u8 {
        self.index() as u8 + 1
    }

    /// Zero-based position, `code() - 1`.
    pub fn index(self) -> usize {
        match self {
            EventClass::CapacitorSwitchMalfunction => 0,
            EventClass::OltcSwitchMalfunction => 1,
            EventClass::AbruptLoadChange => 2,
        }
    }

    pub fn from_code(code: u8) -> Result<Self> {
        match code {
            1..=3 => Ok(Self::ALL[code as usize - 1]),
            _ => Err(Error::invalid(format!("unknown class code {code}"))),
        }
    }

    pub fn from_index(index: usize) -> Self {
        Self::ALL[index]
    }
}

impl TryFrom<u8> for EventClass {
    type Error = Error;
    fn try_from(code: u8) -> Result<Self> {
        Self::from_code(code)
    }
}

impl From<EventClass> for u8 {
    fn from(c: EventClass) -> u8 {
        c.code()
    }
}

impl fmt::Display for EventClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "class {}", self.code())
    }
}

/// Outcome of a classifier: a class, or rejection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Prediction {
    Class(EventClass),
    NonClassified,
}

impl Prediction {
    /// Column in a confusion matrix: 0..3 for classes, 3 for rejection.
    pub fn column(self) -> usize {
        match self {
            Prediction::Class(c) => c.index(),
            Prediction::NonClassified => 3,
        }
    }
}

/// Event magnitude parameter; which one applies depends on the class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LoadLevel {
    /// Aggregate loading fraction (classes 1 and 2), e.g. 0.75.
    Loading(f64),
    /// Signed load step fraction (class 3), e.g. −0.10.
    Step(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioParams {
    /// Which of the 15 feeder loads the scenario is attached to, 0..=14.
    pub load_index: usize,
    pub level: LoadLevel,
    pub event_time: f64,
}

pub const LOAD_COUNT: usize = 15;

impl ScenarioParams {
    pub fn loading_fraction(&self) -> Option<f64> {
        match self.level {
            LoadLevel::Loading(x) => Some(x),
            LoadLevel::Step(_) => None,
        }
    }

    pub fn load_step_fraction(&self) -> Option<f64> {
        match self.level {
            LoadLevel::Step(x) => Some(x),
            LoadLevel::Loading(_) => None,
        }
    }

    /// Checks ranges and that the active level matches `class`.
    pub fn validate_for(&self, class: EventClass) -> Result<()> {
        if self.load_index >= LOAD_COUNT {
            return Err(Error::invalid(format!(
                "load_index {} out of range 0..{LOAD_COUNT}",
                self.load_index
            )));
        }
        if !(self.event_time > 0.0 && self.event_time < 1.0) {
            return Err(Error::invalid(format!(
                "event_time {} outside (0, 1)",
                self.event_time
            )));
        }
        match (class, self.level) {
            (EventClass::AbruptLoadChange, LoadLevel::Step(s)) => {
                if !s.is_finite() || s <= -1.0 || s == 0.0 {
                    return Err(Error::invalid(format!("invalid load step fraction {s}")));
                }
            }
            (EventClass::AbruptLoadChange, LoadLevel::Loading(_)) => {
                return Err(Error::invalid(
                    "class 3 scenarios take a load step fraction, not a loading fraction",
                ));
            }
            (_, LoadLevel::Loading(l)) => {
                if !(l > 0.0 && l.is_finite()) {
                    return Err(Error::invalid(format!("invalid loading fraction {l}")));
                }
            }
            (_, LoadLevel::Step(_)) => {
                return Err(Error::invalid(format!(
                    "{class} scenarios take a loading fraction, not a load step fraction"
                )));
            }
        }
        Ok(())
    }
}

/// A labeled one-second window.
#[derive(Debug, Clone, PartialEq)]
pub struct EventRecord {
    pub label: EventClass,
    pub sps: u32,
    pub samples: Vec<PhasorSample>,
    pub scenario: ScenarioParams,
    pub seed: u64,
}

impl EventRecord {
    pub fn validate(&self) -> Result<()> {
        if self.sps == 0 {
            return Err(Error::invalid("sps must be positive"));
        }
        if self.samples.len() != self.sps as usize {
            return Err(Error::invalid(format!(
                "record has {} samples, expected {}",
                self.samples.len(),
                self.sps
            )));
        }
        let dt = 1.0 / self.sps as f64;
        for (k, s) in self.samples.iter().enumerate() {
            if (s.t - k as f64 * dt).abs() > 1e-9 {
                return Err(Error::invalid(format!("sample {k} has t = {}", s.t)));
            }
            if !(s.v_mag >= 0.0 && s.i_mag >= 0.0) {
                return Err(Error::invalid(format!("negative magnitude at sample {k}")));
            }
            for a in [s.v_ang, s.i_ang] {
                if !(a > -180.0 && a <= 180.0) {
                    return Err(Error::invalid(format!("angle {a} at sample {k} not wrapped")));
                }
            }
        }
        self.scenario.validate_for(self.label)
    }

    pub fn v_mag(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.v_mag).collect()
    }

    pub fn i_mag(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.i_mag).collect()
    }
}

/// Sample times of a one-second window at `sps`.
pub fn sample_times(sps: u32) -> impl Iterator<Item = f64> {
    (0..sps).map(move |k| k as f64 / sps as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub sps: u32,
    pub records: Vec<EventRecord>,
}

impl Dataset {
    pub fn new(sps: u32, records: Vec<EventRecord>) -> Result<Self> {
        if let Some(r) = records.iter().find(|r| r.sps != sps) {
            return Err(Error::invalid(format!(
                "record at {} sps in a {sps} sps dataset",
                r.sps
            )));
        }
        Ok(Self { sps, records })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Dataset holding clones of the records at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            sps: self.sps,
            records: indices.iter().map(|&i| self.records[i].clone()).collect(),
        }
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let header = HeaderLine {
            schema_version: DATASET_SCHEMA_VERSION,
            sps: self.sps,
            records: self.records.len(),
        };
        serde_json::to_writer(&mut w, &header).map_err(|e| Error::format("dataset", e))?;
        w.write_all(b"\n")?;
        for r in &self.records {
            serde_json::to_writer(&mut w, &RecordLine::from(r))
                .map_err(|e| Error::format("dataset", e))?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)?;
        Ok(buf)
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header_line = lines
            .next()
            .ok_or_else(|| Error::format("dataset", "missing header line"))??;
        let header: HeaderLine =
            serde_json::from_str(&header_line).map_err(|e| Error::format("dataset header", e))?;
        if header.schema_version != DATASET_SCHEMA_VERSION {
            return Err(Error::Schema {
                found: header.schema_version,
                expected: DATASET_SCHEMA_VERSION,
            });
        }
        let mut records = Vec::with_capacity(header.records);
        for (n, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: RecordLine = serde_json::from_str(&line)
                .map_err(|e| Error::format("dataset record", format!("line {}: {e}", n + 2)))?;
            let record = parsed.into_record()?;
            record
                .validate()
                .map_err(|e| Error::format("dataset record", format!("line {}: {e}", n + 2)))?;
            records.push(record);
        }
        if records.len() != header.records {
            return Err(Error::format(
                "dataset",
                format!("header announces {} records, found {}", header.records, records.len()),
            ));
        }
        Dataset::new(header.sps, records)
    }
}

/// Per-class record counts; always holds all three classes.
pub fn class_counts(ds: &Dataset) -> BTreeMap<EventClass, usize> {
    let mut counts: BTreeMap<EventClass, usize> = EventClass::ALL.iter().map(|&c| (c, 0)).collect();
    for r in &ds.records {
        *counts.entry(r.label).or_default() += 1;
    }
    counts
}

#[derive(Serialize, Deserialize)]
struct HeaderLine {
    schema_version: u32,
    sps: u32,
    records: usize,
}

#[derive(Serialize, Deserialize)]
struct RecordLine {
    label: EventClass,
    sps: u32,
    load_index: usize,
    loading_fraction: Option<f64>,
    load_step_fraction: Option<f64>,
    event_time: f64,
    seed: u64,
    v_mag: Vec<f64>,
    v_ang: Vec<f64>,
    i_mag: Vec<f64>,
    i_ang: Vec<f64>,
}

impl From<&EventRecord> for RecordLine {
    fn from(r: &EventRecord) -> Self {
        let channel = |f: fn(&PhasorSample) -> f64| r.samples.iter().map(f).collect::<Vec<_>>();
        RecordLine {
            label: r.label,
            sps: r.sps,
            load_index: r.scenario.load_index,
            loading_fraction: r.scenario.loading_fraction(),
            load_step_fraction: r.scenario.load_step_fraction(),
            event_time: r.scenario.event_time,
            seed: r.seed,
            v_mag: channel(|s| s.v_mag),
            v_ang: channel(|s| s.v_ang),
            i_mag: channel(|s| s.i_mag),
            i_ang: channel(|s| s.i_ang),
        }
    }
}

impl RecordLine {
    fn into_record(self) -> Result<EventRecord> {
        let n = self.sps as usize;
        if [&self.v_mag, &self.v_ang, &self.i_mag, &self.i_ang]
            .iter()
            .any(|c| c.len() != n)
        {
            return Err(Error::format("dataset record", "channel length differs from sps"));
        }
        let level = match (self.loading_fraction, self.load_step_fraction) {
            (Some(l), None) => LoadLevel::Loading(l),
            (None, Some(s)) => LoadLevel::Step(s),
            _ => {
                return Err(Error::format(
                    "dataset record",
                    "exactly one of loading_fraction / load_step_fraction must be set",
                ))
            }
        };
        let samples = (0..n)
            .map(|k| PhasorSample {
                t: k as f64 / self.sps as f64,
                v_mag: self.v_mag[k],
                v_ang: self.v_ang[k],
                i_mag: self.i_mag[k],
                i_ang: self.i_ang[k],
            })
            .collect();
        Ok(EventRecord {
            label: self.label,
            sps: self.sps,
            samples,
            scenario: ScenarioParams {
                load_index: self.load_index,
                level,
                event_time: self.event_time,
            },
            seed: self.seed,
        })
    }
}
