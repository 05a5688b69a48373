//! Lasso by cyclic coordinate descent.
//!
//! Solves
//!
//! ```text
//!     minimize  (1/2n) ‖y − Xβ‖² + λ ‖β‖₁
//! ```
//!
//! without an intercept. With `standardize`, each column is divided by its
//! root-mean-square before fitting (the penalty then acts on the scaled
//! coefficients) and the solution is mapped back to the original scale.
//!
//! The solver alternates full sweeps with sweeps over the current active set
//! and stops only once a full pass certifies the KKT conditions to `tol`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LassoConfig {
    pub lambda: f64,
    pub max_iter: usize,
    pub tol: f64,
    pub standardize: bool,
}

impl Default for LassoConfig {
    fn default() -> Self {
        Self { lambda: 0.1, max_iter: 10_000, tol: 1e-8, standardize: true }
    }
}

impl LassoConfig {
    pub fn with_lambda(lambda: f64) -> Self {
        Self { lambda, ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LassoFit {
    /// Coefficients on the original column scale.
    pub coef: Vec<f64>,
    /// Sweeps performed (full and active-set).
    pub iterations: usize,
    /// Largest KKT violation of the solved problem at return.
    pub kkt_violation: f64,
}

impl LassoFit {
    pub fn support(&self) -> Vec<usize> {
        self.coef.iter().enumerate().filter(|(_, b)| **b != 0.0).map(|(j, _)| j).collect()
    }
}

/// `sign(z) · max(|z| − γ, 0)`.
pub fn soft_threshold(z: f64, gamma: f64) -> f64 {
    if z > gamma {
        z - gamma
    } else if z < -gamma {
        z + gamma
    } else {
        0.0
    }
}

/// Column scale factors used by the solver (1 when not standardizing).
pub fn column_scales(x: &DMatrix<f64>, standardize: bool) -> Vec<f64> {
    let n = x.nrows() as f64;
    (0..x.ncols())
        .map(|j| {
            if !standardize {
                return 1.0;
            }
            let rms = (x.column(j).iter().map(|v| v * v).sum::<f64>() / n).sqrt();
            if rms > 0.0 {
                rms
            } else {
                1.0
            }
        })
        .collect()
}

/// Largest violation of the lasso KKT conditions for the problem `cfg` describes.
pub fn kkt_violation(x: &DMatrix<f64>, y: &DVector<f64>, coef: &[f64], cfg: &LassoConfig) -> f64 {
    let n = x.nrows() as f64;
    let scales = column_scales(x, cfg.standardize);
    let r = y - x * DVector::from_column_slice(coef);
    let mut worst: f64 = 0.0;
    for j in 0..x.ncols() {
        // Gradient of the smooth part w.r.t. the scaled coefficient.
        let g = x.column(j).dot(&r) / n / scales[j];
        let v =
            if coef[j] == 0.0 { (g.abs() - cfg.lambda).max(0.0) } else { (g - cfg.lambda * coef[j].signum()).abs() };
        worst = worst.max(v);
    }
    worst
}

/// Lasso objective value on the original scale (penalty on scaled coefficients).
pub fn objective(x: &DMatrix<f64>, y: &DVector<f64>, coef: &[f64], cfg: &LassoConfig) -> f64 {
    let n = x.nrows() as f64;
    let scales = column_scales(x, cfg.standardize);
    let r = y - x * DVector::from_column_slice(coef);
    let pen: f64 = coef.iter().zip(&scales).map(|(b, s)| (b * s).abs()).sum();
    r.norm_squared() / (2.0 * n) + cfg.lambda * pen
}

pub fn lasso_fit(x: &DMatrix<f64>, y: &DVector<f64>, cfg: &LassoConfig) -> Result<LassoFit> {
    let mut trace = None;
    solve(x, y, cfg, &mut trace)
}

/// Lasso with the noise level estimated jointly: the penalty is
/// `σ̂ · λ₀` and `σ̂ = ‖y − Xβ̂‖ / √(n − |Ŝ|)` is iterated to a fixed point,
/// starting from `sd(y)`.
pub fn scaled_lasso(x: &DMatrix<f64>, y: &DVector<f64>, lambda0: f64) -> Result<(LassoFit, f64)> {
    let n = x.nrows();
    if y.len() != n {
        return Err(Error::DimensionMismatch(format!("x has {n} rows, y has {}", y.len())));
    }
    let mean = y.mean();
    let mut sigma = (y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0).max(1.0)).sqrt();
    let mut fit = lasso_fit(x, y, &LassoConfig::with_lambda(sigma * lambda0))?;
    for _ in 0..SCALED_MAX_ITER {
        let r = y - x * DVector::from_column_slice(&fit.coef);
        let dof = n.saturating_sub(fit.support().len()).max(1) as f64;
        let next = (r.norm_squared() / dof).sqrt();
        if !(next > 0.0) {
            return Ok((fit, 0.0));
        }
        let done = (next - sigma).abs() <= SCALED_TOL * sigma;
        sigma = next;
        fit = lasso_fit(x, y, &LassoConfig::with_lambda(sigma * lambda0))?;
        if done {
            break;
        }
    }
    Ok((fit, sigma))
}

const SCALED_MAX_ITER: usize = 50;
const SCALED_TOL: f64 = 1e-4;

/// Same as [`lasso_fit`] but records the objective after every sweep.
pub fn lasso_fit_traced(x: &DMatrix<f64>, y: &DVector<f64>, cfg: &LassoConfig) -> Result<(LassoFit, Vec<f64>)> {
    let mut trace = Some(Vec::new());
    let fit = solve(x, y, cfg, &mut trace)?;
    Ok((fit, trace.unwrap_or_default()))
}

fn solve(x: &DMatrix<f64>, y: &DVector<f64>, cfg: &LassoConfig, trace: &mut Option<Vec<f64>>) -> Result<LassoFit> {
    let (n, p) = x.shape();
    if y.len() != n {
        return Err(Error::DimensionMismatch(format!("x has {n} rows, y has {}", y.len())));
    }
    if !(cfg.lambda >= 0.0 && cfg.lambda.is_finite()) {
        return Err(invalid(format!("lambda must be nonnegative, got {}", cfg.lambda)));
    }
    if !(cfg.tol > 0.0) {
        return Err(invalid("tolerance must be positive"));
    }
    let nf = n as f64;
    let scales = column_scales(x, cfg.standardize);
    let data = x.as_slice();
    let mut xs = Vec::with_capacity(n * p);
    for j in 0..p {
        let s = scales[j];
        xs.extend(data[j * n..(j + 1) * n].iter().map(|v| v / s));
    }
    let col = |j: usize| &xs[j * n..(j + 1) * n];
    let curv: Vec<f64> = (0..p).map(|j| col(j).iter().map(|v| v * v).sum::<f64>() / nf).collect();

    let mut beta = vec![0.0; p];
    let mut r: Vec<f64> = y.iter().copied().collect();
    let lambda = cfg.lambda;

    let update = |j: usize, beta: &mut [f64], r: &mut [f64]| -> f64 {
        if curv[j] == 0.0 {
            return 0.0;
        }
        let xj = col(j);
        let grad: f64 = xj.iter().zip(r.iter()).map(|(a, b)| a * b).sum::<f64>() / nf;
        let old = beta[j];
        let new = soft_threshold(old * curv[j] + grad, lambda) / curv[j];
        let delta = new - old;
        if delta != 0.0 {
            beta[j] = new;
            for (ri, xi) in r.iter_mut().zip(xj) {
                *ri -= delta * xi;
            }
        }
        (delta.abs() * curv[j].sqrt()).abs()
    };

    let obj = |beta: &[f64], r: &[f64]| -> f64 {
        r.iter().map(|v| v * v).sum::<f64>() / (2.0 * nf) + lambda * beta.iter().map(|b| b.abs()).sum::<f64>()
    };

    let inner_tol = 0.1 * cfg.tol;
    let mut iterations = 0;
    let mut last_change = f64::INFINITY;
    loop {
        // Full sweep.
        let mut max_change: f64 = 0.0;
        for j in 0..p {
            max_change = max_change.max(update(j, &mut beta, &mut r));
        }
        iterations += 1;
        if let Some(t) = trace.as_mut() {
            t.push(obj(&beta, &r));
        }
        last_change = last_change.min(max_change);
        if max_change < inner_tol {
            let viol = scaled_kkt(&xs, &r, &beta, &curv, lambda, n);
            if viol <= cfg.tol {
                let coef = beta.iter().zip(&scales).map(|(b, s)| b / s).collect();
                return Ok(LassoFit { coef, iterations, kkt_violation: viol });
            }
        }
        if iterations >= cfg.max_iter {
            return Err(Error::NoConvergence { iterations, max_change });
        }
        // Active-set sweeps until the active coordinates settle.
        let active: Vec<usize> = (0..p).filter(|&j| beta[j] != 0.0).collect();
        if active.is_empty() {
            continue;
        }
        loop {
            let mut change: f64 = 0.0;
            for &j in &active {
                change = change.max(update(j, &mut beta, &mut r));
            }
            iterations += 1;
            if let Some(t) = trace.as_mut() {
                t.push(obj(&beta, &r));
            }
            if change < inner_tol {
                break;
            }
            if iterations >= cfg.max_iter {
                return Err(Error::NoConvergence { iterations, max_change: change });
            }
        }
    }
}

fn scaled_kkt(xs: &[f64], r: &[f64], beta: &[f64], curv: &[f64], lambda: f64, n: usize) -> f64 {
    let nf = n as f64;
    let mut worst: f64 = 0.0;
    for (j, &b) in beta.iter().enumerate() {
        if curv[j] == 0.0 {
            continue;
        }
        let g: f64 = xs[j * n..(j + 1) * n].iter().zip(r).map(|(a, c)| a * c).sum::<f64>() / nf;
        let v = if b == 0.0 { (g.abs() - lambda).max(0.0) } else { (g - lambda * b.signum()).abs() };
        worst = worst.max(v);
    }
    worst
}
