//! Covariance eigenvalues of a feature matrix via cyclic Jacobi rotations.

use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, FEATURE_COUNT};

const OFF_DIAGONAL_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 100;

pub type SymMatrix = [[f64; FEATURE_COUNT]; FEATURE_COUNT];

/// Descending eigenvalues of the column covariance, truncated to `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaSummary {
    pub eigenvalues: Vec<f64>,
}

/// Column covariance with rows as observations and divisor `rows − 1`.
///
/// Rows are accumulated in a canonical order, so the result does not depend
/// on row order at all.
pub fn covariance(m: &FeatureMatrix) -> SymMatrix {
    let n = m.n_rows();
    let mut rows = m.rows().to_vec();
    rows.sort_by(|a, b| {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut mean = [0.0; FEATURE_COUNT];
    for r in &rows {
        for c in 0..FEATURE_COUNT {
            mean[c] += r[c];
        }
    }
    mean.iter_mut().for_each(|x| *x /= n as f64);
    let mut cov = [[0.0; FEATURE_COUNT]; FEATURE_COUNT];
    for r in &rows {
        let d: [f64; FEATURE_COUNT] = std::array::from_fn(|c| r[c] - mean[c]);
        for i in 0..FEATURE_COUNT {
            for j in i..FEATURE_COUNT {
                cov[i][j] += d[i] * d[j];
            }
        }
    }
    let denom = (n.max(2) - 1) as f64;
    for i in 0..FEATURE_COUNT {
        for j in i..FEATURE_COUNT {
            cov[i][j] /= denom;
            cov[j][i] = cov[i][j];
        }
    }
    cov
}

fn off_diagonal_norm(a: &SymMatrix) -> f64 {
    let mut s = 0.0;
    for i in 0..FEATURE_COUNT {
        for j in 0..FEATURE_COUNT {
            if i != j {
                s += a[i][j] * a[i][j];
            }
        }
    }
    s.sqrt()
}

/// Eigenvalues (unsorted) of a symmetric 6×6 matrix by cyclic Jacobi.
pub fn jacobi_eigenvalues(mut a: SymMatrix) -> [f64; FEATURE_COUNT] {
    let n = FEATURE_COUNT;
    for _ in 0..MAX_SWEEPS {
        if off_diagonal_norm(&a) < OFF_DIAGONAL_TOL {
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[p][q];
                if apq == 0.0 {
                    continue;
                }
                // rotation angle that annihilates a[p][q]
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                a[p][q] = 0.0;
                a[q][p] = 0.0;
            }
        }
    }
    std::array::from_fn(|i| a[i][i])
}

pub fn pca_eigenvalues(m: &FeatureMatrix, k: usize) -> Result<PcaSummary> {
    if !(1..=FEATURE_COUNT).contains(&k) {
        return Err(Error::invalid(format!("k must be in 1..={FEATURE_COUNT}, got {k}")));
    }
    if m.n_rows() < 2 {
        return Err(Error::invalid("covariance needs at least 2 rows"));
    }
    let mut ev = jacobi_eigenvalues(covariance(m));
    ev.sort_by(|a, b| b.total_cmp(a));
    let eigenvalues = ev
        .iter()
        .take(k)
        .map(|&x| if (-1e-9..0.0).contains(&x) { 0.0 } else { x })
        .collect();
    Ok(PcaSummary { eigenvalues })
}
