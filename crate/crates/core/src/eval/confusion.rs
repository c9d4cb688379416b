use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::phasor::{EventClass, Prediction};

pub const COLUMN_LABELS: [&str; 4] = ["class 1", "class 2", "class 3", "non-classified"];

/// Rows are actual classes 1–3; columns are predicted classes 1–3 followed
/// by the non-classified outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionMatrix {
    pub counts: [[usize; 4]; 3],
}

impl ConfusionMatrix {
    pub fn from_counts(counts: [[usize; 4]; 3]) -> Self {
        Self { counts }
    }

    pub fn record(&mut self, actual: EventClass, predicted: Prediction) {
        self.counts[actual.index()][predicted.column()] += 1;
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn row_total(&self, actual: EventClass) -> usize {
        self.counts[actual.index()].iter().sum()
    }

    pub fn correct(&self) -> usize {
        (0..3).map(|c| self.counts[c][c]).sum()
    }

    pub fn non_classified(&self) -> usize {
        self.counts.iter().map(|r| r[3]).sum()
    }

    /// `"count (pp.pp%)"`, percentage of the whole test set.
    pub fn render_cell(&self, row: usize, col: usize) -> String {
        let total = self.total();
        let pct = if total == 0 {
            0.0
        } else {
            100.0 * self.counts[row][col] as f64 / total as f64
        };
        format!("{} ({:.2}%)", self.counts[row][col], pct)
    }

    pub fn to_json(&self, method: &str) -> String {
        #[derive(Serialize)]
        struct Out<'a> {
            method: &'a str,
            total: usize,
            accuracy: Option<f64>,
            columns: [&'static str; 4],
            rows: Vec<Row>,
        }
        #[derive(Serialize)]
        struct Row {
            actual: String,
            counts: [usize; 4],
            cells: Vec<String>,
        }
        let out = Out {
            method,
            total: self.total(),
            accuracy: accuracy(self).ok(),
            columns: COLUMN_LABELS,
            rows: (0..3)
                .map(|r| Row {
                    actual: EventClass::from_index(r).to_string(),
                    counts: self.counts[r],
                    cells: (0..4).map(|c| self.render_cell(r, c)).collect(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&out).expect("confusion matrix serializes")
    }
}

impl fmt::Display for ConfusionMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:>10} {:>16} {:>16} {:>16} {:>16}", "actual", COLUMN_LABELS[0], COLUMN_LABELS[1], COLUMN_LABELS[2], COLUMN_LABELS[3])?;
        for r in 0..3 {
            write!(f, "{:>10}", EventClass::from_index(r).to_string())?;
            for c in 0..4 {
                write!(f, " {:>16}", self.render_cell(r, c))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Correct classifications over all test cases; rejections count as wrong.
pub fn accuracy(cm: &ConfusionMatrix) -> Result<f64> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::invalid("accuracy of an empty confusion matrix"));
    }
    Ok(cm.correct() as f64 / total as f64)
}

/// Each cell as a percentage of the total.
pub fn confusion_percentages(cm: &ConfusionMatrix) -> Result<[[f64; 4]; 3]> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::invalid("percentages of an empty confusion matrix"));
    }
    Ok(cm.counts.map(|row| row.map(|c| 100.0 * c as f64 / total as f64)))
}
