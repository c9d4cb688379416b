//! Binary soft-margin SVM with a Gaussian kernel, trained by sequential
//! minimal optimization.
//!
//! The solver works on the dual `max Σα − ½ αᵀQα` with `Q_ij = y_i y_j K_ij`,
//! `0 ≤ α ≤ C` and `Σ y α = 0`. Each step picks the maximal violating pair
//! with second-order working-set selection and solves the two-variable
//! subproblem in closed form, so the dual objective never decreases. The loop
//! stops once the violation gap `m(α) − M(α)` drops below `tol`, which puts
//! every margin `y f(x)` within `tol` of its KKT condition.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmHyperParams {
    pub c: f64,
    pub sigma: f64,
    pub tol: f64,
    pub max_passes: usize,
}

impl Default for SvmHyperParams {
    fn default() -> Self {
        Self {
            c: 10.0,
            sigma: 1.0,
            tol: 1e-3,
            max_passes: 200,
        }
    }
}

impl SvmHyperParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.sigma > 0.0 && self.tol > 0.0 && self.max_passes > 0) {
            return Err(Error::invalid("SVM hyperparameters must all be positive"));
        }
        Ok(())
    }
}

/// `exp(−‖a − b‖² / (2σ²))`
pub fn gaussian_kernel(a: &[f64], b: &[f64], sigma: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-d2 / (2.0 * sigma * sigma)).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinarySvmModel {
    pub support_vectors: Vec<Vec<f64>>,
    pub alphas: Vec<f64>,
    /// ±1 per support vector.
    pub labels: Vec<f64>,
    pub bias: f64,
    pub sigma: f64,
    pub converged: bool,
}

impl BinarySvmModel {
    pub fn decision(&self, x: &[f64]) -> f64 {
        self.support_vectors
            .iter()
            .zip(self.alphas.iter().zip(&self.labels))
            .map(|(sv, (a, y))| a * y * gaussian_kernel(sv, x, self.sigma))
            .sum::<f64>()
            + self.bias
    }
}

/// Full solver output, including the dual variables of every training point.
#[derive(Debug, Clone)]
pub struct SmoSolution {
    pub alphas: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Dual objective after each accepted pair update.
    pub objective_trace: Vec<f64>,
}

fn check_inputs(x: &[Vec<f64>], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::invalid("x and y lengths differ"));
    }
    if x.is_empty() {
        return Err(Error::invalid("empty training set"));
    }
    let d = x[0].len();
    if x.iter().any(|v| v.len() != d) {
        return Err(Error::invalid("inconsistent input dimensions"));
    }
    if y.iter().any(|&l| l != 1.0 && l != -1.0) {
        return Err(Error::invalid("labels must be ±1"));
    }
    if !(y.contains(&1.0) && y.contains(&-1.0)) {
        return Err(Error::invalid("SVM training needs both labels present"));
    }
    Ok(())
}

pub fn smo_solve(x: &[Vec<f64>], y: &[f64], h: &SvmHyperParams) -> Result<SmoSolution> {
    h.validate()?;
    check_inputs(x, y)?;
    let n = x.len();
    let c = h.c;
    let k: Vec<f64> = {
        let mut k = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = gaussian_kernel(&x[i], &x[j], h.sigma);
                k[i * n + j] = v;
                k[j * n + i] = v;
            }
        }
        k
    };
    let kij = |i: usize, j: usize| k[i * n + j];

    let mut alpha = vec![0.0; n];
    // gradient of ½αᵀQα − eᵀα
    let mut grad = vec![-1.0; n];
    let in_up = |a: f64, yt: f64| (yt > 0.0 && a < c) || (yt < 0.0 && a > 0.0);
    let in_low = |a: f64, yt: f64| (yt < 0.0 && a < c) || (yt > 0.0 && a > 0.0);

    let max_iter = h.max_passes.saturating_mul(n.max(10));
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut converged = false;

    while iterations < max_iter {
        let mut i = usize::MAX;
        let mut m = f64::NEG_INFINITY;
        for t in 0..n {
            if in_up(alpha[t], y[t]) {
                let u = -y[t] * grad[t];
                if u > m {
                    m = u;
                    i = t;
                }
            }
        }
        let mut j = usize::MAX;
        let mut big_m = f64::INFINITY;
        let mut best = f64::INFINITY;
        for t in 0..n {
            if !in_low(alpha[t], y[t]) {
                continue;
            }
            let u = -y[t] * grad[t];
            big_m = big_m.min(u);
            if i != usize::MAX && u < m {
                let b = m - u;
                let a = (kij(i, i) + kij(t, t) - 2.0 * kij(i, t)).max(TAU);
                let score = -b * b / a;
                if score < best {
                    best = score;
                    j = t;
                }
            }
        }
        if i == usize::MAX || j == usize::MAX || m - big_m < h.tol {
            converged = true;
            break;
        }

        let a = (kij(i, i) + kij(j, j) - 2.0 * kij(i, j)).max(TAU);
        let b = m - (-y[j] * grad[j]);
        let room_i = if y[i] > 0.0 { c - alpha[i] } else { alpha[i] };
        let room_j = if y[j] < 0.0 { c - alpha[j] } else { alpha[j] };
        let step = (b / a).min(room_i).min(room_j);
        if step <= 0.0 {
            // pair cannot move; the gap test would loop forever otherwise
            break;
        }
        // the variable that limited the step lands exactly on its bound
        let new_i = if step == room_i {
            if y[i] > 0.0 { c } else { 0.0 }
        } else {
            alpha[i] + y[i] * step
        };
        let new_j = if step == room_j {
            if y[j] < 0.0 { c } else { 0.0 }
        } else {
            alpha[j] - y[j] * step
        };
        let di = new_i - alpha[i];
        let dj = new_j - alpha[j];
        alpha[i] = new_i;
        alpha[j] = new_j;
        for t in 0..n {
            grad[t] += y[t] * (y[i] * kij(t, i) * di + y[j] * kij(t, j) * dj);
        }
        trace.push(dual_objective_from_grad(&alpha, &grad));
        iterations += 1;
    }

    let bias = compute_bias(&alpha, &grad, y, c);
    Ok(SmoSolution {
        alphas: alpha,
        bias,
        iterations,
        converged,
        objective_trace: trace,
    })
}

/// `Σα − ½αᵀQα` using `Qα = grad + 1`.
fn dual_objective_from_grad(alpha: &[f64], grad: &[f64]) -> f64 {
    alpha
        .iter()
        .zip(grad)
        .map(|(a, g)| 0.5 * a * (1.0 - g))
        .sum()
}

fn compute_bias(alpha: &[f64], grad: &[f64], y: &[f64], c: f64) -> f64 {
    let mut free_sum = 0.0;
    let mut free_n = 0usize;
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    for t in 0..alpha.len() {
        let u = -y[t] * grad[t];
        if alpha[t] > 0.0 && alpha[t] < c {
            free_sum += u;
            free_n += 1;
        } else {
            let upper_side = (y[t] > 0.0 && alpha[t] == 0.0) || (y[t] < 0.0 && alpha[t] == c);
            if upper_side {
                // I_up only: b must be ≥ u
                lb = lb.max(u);
            } else {
                ub = ub.min(u);
            }
        }
    }
    if free_n > 0 {
        free_sum / free_n as f64
    } else {
        let (lo, hi) = (lb.min(ub), ub.max(lb));
        if lo.is_finite() && hi.is_finite() {
            0.5 * (lo + hi)
        } else if lo.is_finite() {
            lo
        } else {
            hi
        }
    }
}

pub fn smo_train(x: &[Vec<f64>], y: &[f64], h: &SvmHyperParams) -> Result<BinarySvmModel> {
    let sol = smo_solve(x, y, h)?;
    let mut model = BinarySvmModel {
        support_vectors: Vec::new(),
        alphas: Vec::new(),
        labels: Vec::new(),
        bias: sol.bias,
        sigma: h.sigma,
        converged: sol.converged,
    };
    for (t, &a) in sol.alphas.iter().enumerate() {
        if a > 0.0 {
            model.support_vectors.push(x[t].clone());
            model.alphas.push(a);
            model.labels.push(y[t]);
        }
    }
    Ok(model)
}
