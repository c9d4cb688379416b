//! Transition feature matrix and z-score normalization.
//!
//! Row `k` of the matrix describes the transition from sample `k` to
//! sample `k + 1`, so a window of `n` samples yields `n − 1` rows. Columns
//! are, in order:
//!
//! | col | feature  | definition                 |
//! |-----|----------|----------------------------|
//! | 0   | Δv_mag   | v(k+1) − v(k)              |
//! | 1   | Δv_ang   | δv(k+1) − δv(k), wrapped   |
//! | 2   | i_mag    | i(k+1)                     |
//! | 3   | i_ang    | δi(k+1)                    |
//! | 4   | Δi_mag   | i(k+1) − i(k)              |
//! | 5   | Δi_ang   | δi(k+1) − δi(k), wrapped   |

use std::io::Write;

use crate::error::{Error, Result};
use crate::phasor::{wrap_deg, EventRecord};

pub const FEATURE_COUNT: usize = 6;

pub const COLUMN_NAMES: [&str; FEATURE_COUNT] =
    ["Δv_mag", "Δv_ang", "i_mag", "i_ang", "Δi_mag", "Δi_ang"];

/// Floor applied to per-column standard deviations.
pub const STD_FLOOR: f64 = 1e-9;

pub type FeatureRow = [f64; FEATURE_COUNT];

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    rows: Vec<FeatureRow>,
}

impl FeatureMatrix {
    pub fn from_rows(rows: Vec<FeatureRow>) -> Self {
        Self { rows }
    }

    pub fn rows(&self) -> &[FeatureRow] {
        &self.rows
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn column(&self, c: usize) -> impl Iterator<Item = f64> + '_ {
        self.rows.iter().map(move |r| r[c])
    }

    /// Row-major flattening: entry `(r, c)` lands at `6·r + c`.
    pub fn flatten(&self) -> Vec<f64> {
        self.rows.iter().flat_map(|r| r.iter().copied()).collect()
    }

    pub fn unflatten(values: &[f64]) -> Result<Self> {
        if !values.len().is_multiple_of(FEATURE_COUNT) {
            return Err(Error::invalid(format!(
                "flattened length {} is not a multiple of {FEATURE_COUNT}",
                values.len()
            )));
        }
        let rows = values
            .chunks_exact(FEATURE_COUNT)
            .map(|c| std::array::from_fn(|j| c[j]))
            .collect();
        Ok(Self { rows })
    }

    /// Debug export: header plus one line per row.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", COLUMN_NAMES.join(","))?;
        for r in &self.rows {
            let line: Vec<String> = r.iter().map(|x| x.to_string()).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }
}

pub fn build_feature_matrix(record: &EventRecord) -> Result<FeatureMatrix> {
    if record.samples.len() < 2 {
        return Err(Error::invalid(format!(
            "feature matrix needs at least 2 samples, got {}",
            record.samples.len()
        )));
    }
    let rows = record
        .samples
        .windows(2)
        .map(|w| {
            let (a, b) = (&w[0], &w[1]);
            [
                b.v_mag - a.v_mag,
                wrap_deg(b.v_ang - a.v_ang),
                b.i_mag,
                b.i_ang,
                b.i_mag - a.i_mag,
                wrap_deg(b.i_ang - a.i_ang),
            ]
        })
        .collect();
    Ok(FeatureMatrix { rows })
}

/// Per-column statistics pooled over every row of every training matrix.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct NormStats {
    pub mean: FeatureRow,
    pub std: FeatureRow,
}

pub fn fit_norm_stats(train: &[FeatureMatrix]) -> Result<NormStats> {
    let n: usize = train.iter().map(|m| m.n_rows()).sum();
    if n == 0 {
        return Err(Error::invalid("cannot fit normalization on an empty training set"));
    }
    let rows = || train.iter().flat_map(|m| m.rows.iter());
    let mut mean = [0.0; FEATURE_COUNT];
    for r in rows() {
        for c in 0..FEATURE_COUNT {
            mean[c] += r[c];
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut var = [0.0; FEATURE_COUNT];
    for r in rows() {
        for c in 0..FEATURE_COUNT {
            var[c] += (r[c] - mean[c]).powi(2);
        }
    }
    let std = var.map(|v| (v / n as f64).sqrt().max(STD_FLOOR));
    Ok(NormStats { mean, std })
}

/// Z-scores every entry by its column and stacks the rows into one vector
/// of length `6 · rows`.
pub fn normalize_and_flatten(m: &FeatureMatrix, s: &NormStats) -> Vec<f64> {
    m.rows
        .iter()
        .flat_map(|r| (0..FEATURE_COUNT).map(move |c| (r[c] - s.mean[c]) / s.std[c]))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phasor::{sample_times, EventClass, LoadLevel, PhasorSample, ScenarioParams};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn record_from(sps: u32, f: impl Fn(f64, usize) -> (f64, f64, f64, f64)) -> EventRecord {
        EventRecord {
            label: EventClass::AbruptLoadChange,
            sps,
            samples: sample_times(sps)
                .enumerate()
                .map(|(k, t)| {
                    let (v_mag, v_ang, i_mag, i_ang) = f(t, k);
                    PhasorSample { t, v_mag, v_ang, i_mag, i_ang }
                })
                .collect(),
            scenario: ScenarioParams {
                load_index: 0,
                level: LoadLevel::Step(0.1),
                event_time: 0.5,
            },
            seed: 0,
        }
    }

    #[test]
    fn constant_window() {
        let r = record_from(60, |_, _| (1.0, 0.0, 0.5, -10.0));
        let m = build_feature_matrix(&r).unwrap();
        assert_eq!(m.n_rows(), 59);
        assert!(m.rows().iter().all(|row| *row == [0.0, 0.0, 0.5, -10.0, 0.0, 0.0]));
    }

    #[test]
    fn shapes_follow_sps() {
        for (sps, rows) in [(60, 59), (120, 119)] {
            let m = build_feature_matrix(&record_from(sps, |_, _| (1.0, 0.0, 0.5, 0.0))).unwrap();
            assert_eq!(m.n_rows(), rows);
            assert_eq!(m.flatten().len(), 6 * rows);
        }
    }

    #[test]
    fn too_short_is_rejected() {
        let mut r = record_from(60, |_, _| (1.0, 0.0, 0.5, 0.0));
        r.samples.truncate(1);
        assert!(build_feature_matrix(&r).is_err());
    }

    #[test]
    fn single_current_step_appears_once() {
        let k = 25;
        let r = record_from(60, |_, j| (1.0, 0.0, if j >= k { 0.6 } else { 0.5 }, -10.0));
        let m = build_feature_matrix(&r).unwrap();
        for (row, d) in m.column(4).enumerate() {
            if row == k - 1 {
                assert!((d - 0.1).abs() < 1e-12);
            } else {
                assert_eq!(d, 0.0);
            }
        }
    }

    #[test]
    fn angle_differences_wrap() {
        let r = record_from(60, |_, j| (1.0, if j % 2 == 0 { 179.0 } else { -179.0 }, 0.5, 0.0));
        let m = build_feature_matrix(&r).unwrap();
        assert!(m.column(1).all(|d| (d.abs() - 2.0).abs() < 1e-9));
    }

    #[test]
    fn norm_stats_degenerate_and_symmetric() {
        let zeros = FeatureMatrix::from_rows(vec![[0.0; 6]; 10]);
        let s = fit_norm_stats(&[zeros]).unwrap();
        assert_eq!(s.mean, [0.0; 6]);
        assert_eq!(s.std, [STD_FLOOR; 6]);

        let a = FeatureMatrix::from_rows(vec![[0.0, 0.0, 0.4, 0.0, 0.0, 0.0]; 5]);
        let b = FeatureMatrix::from_rows(vec![[0.0, 0.0, 0.6, 0.0, 0.0, 0.0]; 5]);
        let s = fit_norm_stats(&[a, b]).unwrap();
        assert!((s.mean[2] - 0.5).abs() < 1e-15);

        assert!(fit_norm_stats(&[]).is_err());
    }

    #[test]
    fn norm_stats_match_brute_force() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let mats: Vec<FeatureMatrix> = (0..7)
            .map(|_| {
                FeatureMatrix::from_rows(
                    (0..59)
                        .map(|_| std::array::from_fn(|c| rng.random_range(-1.0..1.0) * (c + 1) as f64))
                        .collect(),
                )
            })
            .collect();
        let s = fit_norm_stats(&mats).unwrap();
        for c in 0..6 {
            let all: Vec<f64> = mats.iter().flat_map(|m| m.column(c).collect::<Vec<_>>()).collect();
            let n = all.len() as f64;
            let mut sum = 0.0;
            for x in &all {
                sum += x;
            }
            let mean = sum / n;
            let mut ss = 0.0;
            for x in &all {
                ss += (x - mean) * (x - mean);
            }
            assert!((s.mean[c] - mean).abs() < 1e-12);
            assert!((s.std[c] - (ss / n).sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn mean_matrix_normalizes_to_zero() {
        let s = NormStats {
            mean: [0.1, -0.2, 0.5, -20.0, 0.0, 1.0],
            std: [1.0, 2.0, 0.1, 5.0, 1e-3, 3.0],
        };
        let m = FeatureMatrix::from_rows(vec![s.mean; 59]);
        let z = normalize_and_flatten(&m, &s);
        assert_eq!(z.len(), 354);
        assert!(z.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn flatten_index_layout() {
        let rows: Vec<FeatureRow> = (0..59).map(|r| std::array::from_fn(|c| (r * 10 + c) as f64)).collect();
        let m = FeatureMatrix::from_rows(rows);
        let flat = m.flatten();
        for r in 0..59 {
            for c in 0..6 {
                assert_eq!(flat[6 * r + c], m.rows()[r][c]);
            }
        }
        assert_eq!(FeatureMatrix::unflatten(&flat).unwrap(), m);
        assert!(FeatureMatrix::unflatten(&flat[..5]).is_err());
    }

    #[test]
    fn csv_header() {
        let m = FeatureMatrix::from_rows(vec![[0.0; 6]; 2]);
        let mut out = Vec::new();
        m.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().next().unwrap(), "Δv_mag,Δv_ang,i_mag,i_ang,Δi_mag,Δi_ang");
        assert_eq!(text.lines().count(), 3);
    }

    proptest! {
        #[test]
        fn delta_v_telescopes(vs in proptest::collection::vec(0.9f64..1.1, 60)) {
            let r = record_from(60, |_, k| (vs[k], 0.0, 0.5, 0.0));
            let m = build_feature_matrix(&r).unwrap();
            let total: f64 = m.column(0).sum();
            prop_assert!((total - (vs[59] - vs[0])).abs() < 1e-12);
        }

        #[test]
        fn angle_columns_stay_wrapped(angs in proptest::collection::vec((-179.99f64..180.0, -179.99f64..180.0), 60)) {
            let r = record_from(60, |_, k| (1.0, angs[k].0, 0.5, angs[k].1));
            let m = build_feature_matrix(&r).unwrap();
            for d in m.column(1).chain(m.column(5)) {
                prop_assert!(d > -180.0 && d <= 180.0);
            }
        }

        #[test]
        fn normalization_is_shift_invariant(
            seed in any::<u64>(),
            col in 0usize..6,
            offset in -50.0f64..50.0,
        ) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mats: Vec<FeatureMatrix> = (0..4)
                .map(|_| FeatureMatrix::from_rows(
                    (0..20).map(|_| std::array::from_fn(|_| rng.random_range(-1.0..1.0))).collect()))
                .collect();
            let shifted: Vec<FeatureMatrix> = mats.iter().map(|m| {
                FeatureMatrix::from_rows(m.rows().iter().map(|r| {
                    let mut r = *r;
                    r[col] += offset;
                    r
                }).collect())
            }).collect();
            let s0 = fit_norm_stats(&mats).unwrap();
            let s1 = fit_norm_stats(&shifted).unwrap();
            for (a, b) in mats.iter().zip(&shifted) {
                let za = normalize_and_flatten(a, &s0);
                let zb = normalize_and_flatten(b, &s1);
                for (x, y) in za.iter().zip(&zb) {
                    prop_assert!((x - y).abs() < 1e-12);
                }
            }
        }
    }
}
