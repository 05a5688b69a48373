//! Least-squares refit on the inference half, restricted to a selected support.
//!
//! The refit uses a thin QR factorization of `X_S`; `(X_Sᵀ X_S)⁻¹` is rebuilt
//! from the triangular factor. Pivots follow the usual Gaussian theory: `t_ν`
//! for a coordinate, `F_{q,ν}` for a block of linear contrasts.

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::model::{Interval, RefitFit, SelectedSupport};
use crate::numerics::{chi2_cdf, t_quantile};

/// Relative size of a triangular-factor diagonal below which a column counts as dependent.
pub const RANK_TOL: f64 = 1e-10;

/// Linear contrasts `θ = Lᵀ β_S` with hypothesized value `theta0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContrastSpec {
    /// `|S| × q`.
    pub l_matrix: DMatrix<f64>,
    pub theta0: DVector<f64>,
}

impl ContrastSpec {
    pub fn new(l_matrix: DMatrix<f64>, theta0: DVector<f64>) -> Result<Self> {
        let (d, q) = l_matrix.shape();
        if q == 0 || q > d {
            return Err(invalid(format!("contrast matrix is {d}x{q}; need 1 <= q <= |S|")));
        }
        if theta0.len() != q {
            return Err(Error::DimensionMismatch(format!("theta0 has {} entries, q = {q}", theta0.len())));
        }
        if l_matrix.rank(1e-12 * l_matrix.amax().max(1.0)) < q {
            return Err(invalid("contrast matrix must have full column rank"));
        }
        Ok(Self { l_matrix, theta0 })
    }

    /// Single coordinate `e_k` of a support of size `d`.
    pub fn coordinate(d: usize, k: usize, value: f64) -> Result<Self> {
        if k >= d {
            return Err(Error::IndexOutOfRange { index: k, len: d });
        }
        let mut l = DMatrix::zeros(d, 1);
        l[(k, 0)] = 1.0;
        Self::new(l, DVector::from_element(1, value))
    }

    pub fn q(&self) -> usize {
        self.l_matrix.ncols()
    }
}

/// Columns of `x` listed in `support`.
pub fn support_columns(x: &DMatrix<f64>, support: &SelectedSupport) -> DMatrix<f64> {
    x.select_columns(support.coords())
}

/// Upper-triangular factor of a thin QR of `x_s` and its inverse, after a rank check.
pub(crate) fn triangular_factor(
    x_s: &DMatrix<f64>,
    coords: &[usize],
) -> Result<(DMatrix<f64>, DMatrix<f64>, DMatrix<f64>)> {
    let d = x_s.ncols();
    let qr = x_s.clone().qr();
    let r = qr.r();
    let q = qr.q();
    let diag_max = (0..d).map(|k| r[(k, k)].abs()).fold(0.0, f64::max);
    let bad: Vec<usize> = (0..d).filter(|&k| !(r[(k, k)].abs() > RANK_TOL * diag_max)).map(|k| coords[k]).collect();
    if !bad.is_empty() {
        return Err(Error::SingularDesign { columns: bad });
    }
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(d, d))
        .ok_or_else(|| Error::Numerical("triangular solve failed".into()))?;
    Ok((q, r, r_inv))
}

pub fn ols_refit(x_inf: &DMatrix<f64>, y_inf: &DVector<f64>, support: &SelectedSupport) -> Result<RefitFit> {
    let n = x_inf.nrows();
    if y_inf.len() != n {
        return Err(Error::DimensionMismatch(format!("x has {n} rows, y has {}", y_inf.len())));
    }
    if support.is_empty() {
        return Err(Error::EmptySelection);
    }
    if let Some(&j) = support.coords().iter().find(|&&j| j >= x_inf.ncols()) {
        return Err(Error::IndexOutOfRange { index: j, len: x_inf.ncols() });
    }
    let d = support.len();
    if n <= d {
        return Err(invalid(format!("refit needs n_inf > |S|, got n_inf={n}, |S|={d}")));
    }
    let x_s = support_columns(x_inf, support);
    let (q, _, r_inv) = triangular_factor(&x_s, support.coords())?;
    let beta_hat = &r_inv * (q.transpose() * y_inf);
    let residuals = y_inf - &x_s * &beta_hat;
    let dof = n - d;
    let rss = residuals.norm_squared();
    // A residual at rounding level means `y` lies in the column span.
    let sigma2_hat = if rss.sqrt() <= 1e-12 * y_inf.norm() { 0.0 } else { rss / dof as f64 };
    let gram_inv = &r_inv * r_inv.transpose();
    Ok(RefitFit { beta_hat, sigma2_hat, gram_inv, dof, support: support.clone(), residuals })
}

fn position(fit: &RefitFit, j: usize) -> Result<usize> {
    fit.support.position(j).ok_or(Error::NotAvailable(j))
}

/// `(β̂_j − β_j0) / (σ̂ √v_jj)` for feature `j` of the support.
pub fn t_pivot(fit: &RefitFit, j: usize, beta_j0: f64) -> Result<f64> {
    let k = position(fit, j)?;
    if fit.sigma2_hat <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok((fit.beta_hat[k] - beta_j0) / fit.std_error(k))
}

/// `(Lᵀβ̂ − θ0)ᵀ [Lᵀ V L]⁻¹ (Lᵀβ̂ − θ0) / (q σ̂²)`.
pub fn f_pivot(fit: &RefitFit, c: &ContrastSpec) -> Result<f64> {
    if c.l_matrix.nrows() != fit.d() {
        return Err(Error::DimensionMismatch(format!(
            "contrast has {} rows, support has {}",
            c.l_matrix.nrows(),
            fit.d()
        )));
    }
    if fit.sigma2_hat <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    let diff = c.l_matrix.transpose() * &fit.beta_hat - &c.theta0;
    let middle = c.l_matrix.transpose() * &fit.gram_inv * &c.l_matrix;
    let chol = middle.cholesky().ok_or_else(|| Error::Numerical("contrast covariance is singular".into()))?;
    let quad = diff.dot(&chol.solve(&diff));
    Ok((quad / (c.q() as f64 * fit.sigma2_hat)).max(0.0))
}

/// `β̂_j ± t_{1−α/2,ν} σ̂ √v_jj`; a point when `σ̂ = 0`.
pub fn classical_t_interval(fit: &RefitFit, j: usize, alpha: f64) -> Result<Interval> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let k = position(fit, j)?;
    let half = t_quantile(1.0 - alpha / 2.0, fit.dof as f64)? * fit.std_error(k);
    Ok(Interval::new(fit.beta_hat[k] - half, fit.beta_hat[k] + half))
}

/// Wilks approximation `1 − F_{χ²_d}(n log(RSS(θ)/RSS(β̂)))` at each support vector `θ`.
///
/// With a perfect fit the contour is the indicator of `θ = β̂`.
pub fn wilks_contour(
    fit: &RefitFit,
    x_inf: &DMatrix<f64>,
    y_inf: &DVector<f64>,
    theta_grid: &[DVector<f64>],
) -> Result<Vec<f64>> {
    let x_s = support_columns(x_inf, &fit.support);
    let n = x_s.nrows() as f64;
    let d = fit.d();
    let rss_hat = fit.sigma2_hat * fit.dof as f64;
    theta_grid
        .iter()
        .map(|theta| {
            if theta.len() != d {
                return Err(Error::DimensionMismatch(format!("theta has {} entries, support {d}", theta.len())));
            }
            let rss = (y_inf - &x_s * theta).norm_squared();
            if rss_hat <= 0.0 {
                return Ok(if rss.sqrt() <= 1e-12 * y_inf.norm() { 1.0 } else { 0.0 });
            }
            let stat = (n * (rss / rss_hat).ln()).max(0.0);
            Ok(1.0 - chi2_cdf(stat, d as f64)?)
        })
        .collect()
}
