//! Robust and orthogonalized inference.
//!
//! * Wild bootstrap of refit t statistics (Rademacher or Mammen multipliers).
//! * Coordinate orthogonalization against the rest of a support.
//! * Cross-fitted orthogonal scores for the partially linear model
//!   `Y = θ D + g(X) + ε`, validified against a multiplier bootstrap.
//! * A debiased lasso, used only as a benchmark comparator.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::lasso::{lasso_fit, scaled_lasso, LassoConfig};
use crate::model::Interval;
use crate::model::{Dataset, RefitFit, SelectedSupport};
use crate::numerics::{normal_quantile, Ecdf};
use crate::refit::{support_columns, triangular_factor};
use crate::rng::{derive_seed, rng_from_seed};
use crate::selectors::default_lambda;
use crate::validify::{ContourMeta, PivotSource, PlausibilityContour, Reference, Statistic};

pub const DEFAULT_BOOT: usize = 999;
pub const DEFAULT_FOLDS: usize = 5;
/// Largest tolerated fraction of degenerate bootstrap draws.
pub const MAX_DROP_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Multiplier {
    #[default]
    Rademacher,
    Mammen,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WildBootConfig {
    pub n_boot: usize,
    pub multiplier: Multiplier,
    pub seed: u64,
}

impl WildBootConfig {
    pub fn new(seed: u64) -> Self {
        Self { n_boot: DEFAULT_BOOT, multiplier: Multiplier::Rademacher, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_boot < 100 {
            return Err(invalid(format!("need at least 100 bootstrap draws, got {}", self.n_boot)));
        }
        Ok(())
    }
}

/// i.i.d. multipliers with mean 0 and variance 1.
pub fn draw_multipliers(kind: Multiplier, m: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng_from_seed(seed);
    match kind {
        Multiplier::Rademacher => (0..m).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect(),
        Multiplier::Mammen => {
            let r5 = 5f64.sqrt();
            let lo = -(r5 - 1.0) / 2.0;
            let hi = (r5 + 1.0) / 2.0;
            let p_lo = (r5 + 1.0) / (2.0 * r5);
            (0..m).map(|_| if rng.random::<f64>() < p_lo { lo } else { hi }).collect()
        }
    }
}

/// Bootstrap laws of the studentized refit statistics, one per support coordinate.
///
/// Each draw perturbs the centered residuals by multipliers, refits on the same
/// design and records `(β̂*_k − β̂_k) / (σ̂* √v_kk)`.
pub fn wild_boot_t_ecdfs(fit: &RefitFit, x_inf: &DMatrix<f64>, cfg: &WildBootConfig) -> Result<Vec<Ecdf>> {
    cfg.validate()?;
    let d = fit.d();
    if fit.sigma2_hat <= 0.0 {
        return (0..d).map(|_| Ecdf::new(vec![0.0; cfg.n_boot])).collect();
    }
    let x_s = support_columns(x_inf, &fit.support);
    let n = x_s.nrows();
    if fit.residuals.len() != n {
        return Err(Error::DimensionMismatch("residuals and design disagree".into()));
    }
    let proj = &fit.gram_inv * x_s.transpose();
    let mean = fit.residuals.mean();
    let centered = fit.residuals.map(|e| e - mean);
    let nu = fit.dof as f64;
    let root_v: Vec<f64> = (0..d).map(|k| fit.gram_inv[(k, k)].sqrt()).collect();

    let draws: Vec<Option<Vec<f64>>> = (0..cfg.n_boot)
        .into_par_iter()
        .map(|b| {
            let xi = draw_multipliers(cfg.multiplier, n, derive_seed(cfg.seed, b as u64));
            let e_star = DVector::from_iterator(n, centered.iter().zip(&xi).map(|(e, w)| e * w));
            let delta = &proj * &e_star;
            let resid = &e_star - &x_s * &delta;
            let s2 = resid.norm_squared() / nu;
            if !(s2 > 0.0 && s2.is_finite()) {
                return None;
            }
            let s = s2.sqrt();
            Some((0..d).map(|k| delta[k] / (s * root_v[k])).collect())
        })
        .collect();

    let kept: Vec<&Vec<f64>> = draws.iter().flatten().collect();
    let dropped = cfg.n_boot - kept.len();
    if dropped as f64 > MAX_DROP_FRACTION * cfg.n_boot as f64 {
        return Err(Error::Numerical(format!("{dropped} of {} bootstrap refits were degenerate", cfg.n_boot)));
    }
    (0..d).map(|k| Ecdf::new(kept.iter().map(|t| t[k]).collect())).collect()
}

/// Bootstrap law of the studentized statistic for feature `j`.
pub fn wild_boot_t_ecdf(
    fit: &RefitFit,
    x_inf: &DMatrix<f64>,
    y_inf: &DVector<f64>,
    j: usize,
    cfg: &WildBootConfig,
) -> Result<Ecdf> {
    if y_inf.len() != x_inf.nrows() {
        return Err(Error::DimensionMismatch("x and y disagree".into()));
    }
    let k = fit.support.position(j).ok_or(Error::NotAvailable(j))?;
    Ok(wild_boot_t_ecdfs(fit, x_inf, cfg)?.swap_remove(k))
}

/// Residuals of `X_j` and `Y` after regressing each on an intercept and
/// the support columns other than `j`.
pub fn orthogonalize_coordinate(
    x_inf: &DMatrix<f64>,
    y_inf: &DVector<f64>,
    support: &SelectedSupport,
    j: usize,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let (n, p) = x_inf.shape();
    if y_inf.len() != n {
        return Err(Error::DimensionMismatch(format!("x has {n} rows, y has {}", y_inf.len())));
    }
    if j >= p {
        return Err(Error::IndexOutOfRange { index: j, len: p });
    }
    let controls: Vec<usize> = support.coords().iter().copied().filter(|&k| k != j).collect();
    if n <= controls.len() + 1 {
        return Err(invalid("too few rows to orthogonalize against the support"));
    }
    let mut z = DMatrix::from_element(n, controls.len() + 1, 1.0);
    for (c, &k) in controls.iter().enumerate() {
        z.set_column(c + 1, &x_inf.column(k));
    }
    let mut labels = vec![p];
    labels.extend(&controls);
    let (q, _, _) = triangular_factor(&z, &labels)?;
    let resid = |v: DVector<f64>| {
        let fitted = &q * (q.transpose() * &v);
        v - fitted
    };
    Ok((resid(x_inf.column(j).into_owned()), resid(y_inf.clone())))
}

/// Root `x̃ᵀỹ / ‖x̃‖²` of the orthogonalized score.
pub fn orthogonalized_estimate(x_tilde: &DVector<f64>, y_tilde: &DVector<f64>) -> Result<f64> {
    let denom = x_tilde.norm_squared();
    if denom <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok(x_tilde.dot(y_tilde) / denom)
}

/// Partition of `0..n` into cross-fitting folds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossFitPlan {
    pub folds: Vec<Vec<usize>>,
    pub b_folds: usize,
}

impl CrossFitPlan {
    /// Random balanced folds of `0..n`.
    pub fn new(n: usize, b_folds: usize, seed: u64) -> Result<Self> {
        if b_folds < 2 {
            return Err(invalid(format!("cross-fitting needs at least 2 folds, got {b_folds}")));
        }
        if n < 2 * b_folds {
            return Err(invalid(format!("{n} rows cannot fill {b_folds} folds")));
        }
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng_from_seed(seed));
        let mut folds = vec![Vec::new(); b_folds];
        for (pos, i) in perm.into_iter().enumerate() {
            folds[pos % b_folds].push(i);
        }
        folds.iter_mut().for_each(|f| f.sort_unstable());
        Ok(Self { folds, b_folds })
    }

    pub fn from_folds(folds: Vec<Vec<usize>>, n: usize) -> Result<Self> {
        let mut seen = vec![false; n];
        for f in &folds {
            if f.is_empty() {
                return Err(invalid("folds must be nonempty"));
            }
            for &i in f {
                if i >= n {
                    return Err(Error::IndexOutOfRange { index: i, len: n });
                }
                if std::mem::replace(&mut seen[i], true) {
                    return Err(invalid(format!("row {i} appears in two folds")));
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(invalid("folds must cover every row"));
        }
        let b_folds = folds.len();
        if b_folds < 2 {
            return Err(invalid("cross-fitting needs at least 2 folds"));
        }
        Ok(Self { folds, b_folds })
    }

    pub fn n(&self) -> usize {
        self.folds.iter().map(Vec::len).sum()
    }

    /// Rows outside fold `b`.
    pub fn complement(&self, b: usize) -> Vec<usize> {
        let mut out: Vec<usize> =
            self.folds.iter().enumerate().filter(|(c, _)| *c != b).flat_map(|(_, f)| f.iter().copied()).collect();
        out.sort_unstable();
        out
    }
}

/// Outcome `y`, scalar treatment `d_treat` and controls `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlmData {
    pub y: DVector<f64>,
    pub d_treat: DVector<f64>,
    pub x: DMatrix<f64>,
}

impl PlmData {
    pub fn new(y: DVector<f64>, d_treat: DVector<f64>, x: DMatrix<f64>) -> Result<Self> {
        if y.len() != d_treat.len() || y.len() != x.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "y has {}, treatment {}, controls {} rows",
                y.len(),
                d_treat.len(),
                x.nrows()
            )));
        }
        Ok(Self { y, d_treat, x })
    }

    /// Treatment column `j` of `x` against the remaining columns.
    pub fn from_coordinate(x: &DMatrix<f64>, y: &DVector<f64>, j: usize) -> Result<Self> {
        if j >= x.ncols() {
            return Err(Error::IndexOutOfRange { index: j, len: x.ncols() });
        }
        let rest: Vec<usize> = (0..x.ncols()).filter(|&k| k != j).collect();
        Self::new(y.clone(), x.column(j).into_owned(), x.select_columns(&rest))
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }
}

/// Nuisance learner: lasso, optionally followed by least squares on its support.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NuisanceConfig {
    /// `None` uses the default penalty rule on each training fold.
    pub lambda: Option<f64>,
    pub post_lasso: bool,
}

impl Default for NuisanceConfig {
    fn default() -> Self {
        Self { lambda: None, post_lasso: true }
    }
}

/// Fits `target ~ 1 + x` on the training rows and predicts the test rows.
pub fn fit_predict(
    x_train: &DMatrix<f64>,
    t_train: &DVector<f64>,
    x_test: &DMatrix<f64>,
    cfg: &NuisanceConfig,
) -> Result<DVector<f64>> {
    let (n, p) = x_train.shape();
    let x_mean = DVector::from_iterator(p, x_train.column_iter().map(|c| c.mean()));
    let t_mean = t_train.mean();
    let xc = DMatrix::from_fn(n, p, |i, j| x_train[(i, j)] - x_mean[j]);
    let tc = t_train.map(|v| v - t_mean);
    let lambda = cfg.lambda.unwrap_or_else(|| default_lambda(&tc, p));
    let fit = lasso_fit(&xc, &tc, &LassoConfig::with_lambda(lambda))?;
    let mut coef = DVector::from_vec(fit.coef.clone());
    if cfg.post_lasso {
        let mut support = fit.support();
        let cap = (n / 2).max(1);
        if support.len() > cap {
            support.sort_by(|&a, &b| fit.coef[b].abs().total_cmp(&fit.coef[a].abs()).then(a.cmp(&b)));
            support.truncate(cap);
            support.sort_unstable();
        }
        if !support.is_empty() {
            let xs = xc.select_columns(&support);
            if let Ok((q, _, r_inv)) = triangular_factor(&xs, &support) {
                let b = r_inv * (q.transpose() * &tc);
                coef = DVector::zeros(p);
                for (k, &j) in support.iter().enumerate() {
                    coef[j] = b[k];
                }
            }
        }
    }
    let m = x_test.nrows();
    Ok(DVector::from_fn(m, |i, _| {
        t_mean + (0..p).filter(|&j| coef[j] != 0.0).map(|j| (x_test[(i, j)] - x_mean[j]) * coef[j]).sum::<f64>()
    }))
}

/// Out-of-fold predictions of `target` from `x`: row `i` is predicted by a
/// model that never saw the fold containing `i`.
pub fn cross_fit_predictions(
    x: &DMatrix<f64>,
    target: &DVector<f64>,
    plan: &CrossFitPlan,
    cfg: &NuisanceConfig,
) -> Result<DVector<f64>> {
    if plan.n() != x.nrows() || target.len() != x.nrows() {
        return Err(Error::DimensionMismatch("cross-fit plan does not match the data".into()));
    }
    let parts: Vec<(usize, DVector<f64>)> = (0..plan.b_folds)
        .into_par_iter()
        .map(|b| {
            let train = plan.complement(b);
            let pred =
                fit_predict(&x.select_rows(&train), &target.select_rows(&train), &x.select_rows(&plan.folds[b]), cfg)?;
            Ok((b, pred))
        })
        .collect::<Result<_>>()?;
    let mut out = DVector::zeros(x.nrows());
    for (b, pred) in parts {
        for (k, &i) in plan.folds[b].iter().enumerate() {
            out[i] = pred[k];
        }
    }
    Ok(out)
}

/// Nuisance values `ĝ(X_i) ≈ E[Y|X_i]` and `m̂(X_i) ≈ E[D|X_i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlmNuisances {
    pub g_hat: DVector<f64>,
    pub m_hat: DVector<f64>,
}

pub fn cross_fit_nuisances(plm: &PlmData, plan: &CrossFitPlan, cfg: &NuisanceConfig) -> Result<PlmNuisances> {
    Ok(PlmNuisances {
        g_hat: cross_fit_predictions(&plm.x, &plm.y, plan, cfg)?,
        m_hat: cross_fit_predictions(&plm.x, &plm.d_treat, plan, cfg)?,
    })
}

/// `ψ = v (r − θ v)` with `v = D − m` and `r = Y − g`.
pub fn orth_score(v: f64, r: f64, theta: f64) -> f64 {
    v * (r - theta * v)
}

/// Residualized treatment and outcome; everything the score needs.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthScores {
    pub v: DVector<f64>,
    pub r: DVector<f64>,
}

impl OrthScores {
    pub fn new(plm: &PlmData, nuis: &PlmNuisances) -> Result<Self> {
        if nuis.g_hat.len() != plm.n() || nuis.m_hat.len() != plm.n() {
            return Err(Error::DimensionMismatch("nuisances do not match the data".into()));
        }
        Ok(Self { v: &plm.d_treat - &nuis.m_hat, r: &plm.y - &nuis.g_hat })
    }

    pub fn n(&self) -> usize {
        self.v.len()
    }

    pub fn scores(&self, theta: f64) -> Vec<f64> {
        self.v.iter().zip(self.r.iter()).map(|(&v, &r)| orth_score(v, r, theta)).collect()
    }

    /// Root of the empirical score.
    pub fn theta_hat(&self) -> Result<f64> {
        let vv = self.v.norm_squared();
        if vv <= 0.0 {
            return Err(Error::ZeroVariance);
        }
        Ok(self.v.dot(&self.r) / vv)
    }

    /// `√n · mean(ψ(θ)) / sd(ψ(θ))`.
    pub fn stat(&self, theta: f64) -> Result<f64> {
        studentized_mean(&self.scores(theta))
    }

    /// Standard error of `θ̂` from the sandwich `sd(ψ) / (√n · mean(v²))`.
    pub fn std_error(&self) -> Result<f64> {
        let n = self.n() as f64;
        let psi = self.scores(self.theta_hat()?);
        let (_, sd) = mean_sd(&psi);
        Ok(sd / (n.sqrt() * self.v.norm_squared() / n))
    }
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn studentized_mean(values: &[f64]) -> Result<f64> {
    let (mean, sd) = mean_sd(values);
    if !(sd > 0.0) {
        return Err(Error::ZeroVariance);
    }
    Ok((values.len() as f64).sqrt() * mean / sd)
}

/// Studentized cross-fitted score statistic at `theta`.
pub fn orth_score_stat(plm: &PlmData, plan: &CrossFitPlan, theta: f64, cfg: &NuisanceConfig) -> Result<f64> {
    OrthScores::new(plm, &cross_fit_nuisances(plm, plan, cfg)?)?.stat(theta)
}

/// Multiplier-bootstrap law of the studentized score: draws of
/// `√n · mean(ξ φ) / sd(ξ φ)` with centered scores `φ` at `θ̂`.
pub fn orth_bootstrap_ecdf(scores: &OrthScores, cfg: &WildBootConfig) -> Result<Ecdf> {
    cfg.validate()?;
    let psi = scores.scores(scores.theta_hat()?);
    let (mean, _) = mean_sd(&psi);
    let phi: Vec<f64> = psi.iter().map(|v| v - mean).collect();
    let n = phi.len();
    let draws: Vec<Option<f64>> = (0..cfg.n_boot)
        .into_par_iter()
        .map(|b| {
            let xi = draw_multipliers(cfg.multiplier, n, derive_seed(cfg.seed, b as u64));
            let w: Vec<f64> = phi.iter().zip(&xi).map(|(f, x)| f * x).collect();
            studentized_mean(&w).ok().filter(|t| t.is_finite())
        })
        .collect();
    let kept: Vec<f64> = draws.into_iter().flatten().collect();
    let dropped = cfg.n_boot - kept.len();
    if dropped as f64 > MAX_DROP_FRACTION * cfg.n_boot as f64 {
        return Err(Error::Numerical(format!("{dropped} of {} bootstrap draws were degenerate", cfg.n_boot)));
    }
    Ecdf::new(kept)
}

/// Contour for `θ` from the cross-fitted score and its bootstrap law.
pub fn orth_contour_from_scores(
    scores: OrthScores,
    wb: &WildBootConfig,
    meta: ContourMeta,
) -> Result<PlausibilityContour> {
    let ecdf = orth_bootstrap_ecdf(&scores, wb)?;
    let center = scores.theta_hat()?;
    let scale = scores.std_error()?;
    let scores = Arc::new(scores);
    let statistic = Statistic::custom(move |theta| scores.stat(theta), center, scale);
    PlausibilityContour::new(PivotSource { reference: Reference::Empirical(Arc::new(ecdf)), statistic }, meta)
}

pub fn orth_contour(
    plm: &PlmData,
    plan: &CrossFitPlan,
    nuis_cfg: &NuisanceConfig,
    wb: &WildBootConfig,
) -> Result<PlausibilityContour> {
    let scores = OrthScores::new(plm, &cross_fit_nuisances(plm, plan, nuis_cfg)?)?;
    orth_contour_from_scores(scores, wb, ContourMeta { method: "orth_crossfit".into(), ..ContourMeta::default() })
}

/// Penalties for the debiased lasso; `None` uses the default rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct DebiasedConfig {
    pub lambda: Option<f64>,
    pub nodewise_lambda: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DebiasedCoordinate {
    pub coord: usize,
    pub estimate: f64,
    pub std_error: f64,
    /// `estimate / std_error`.
    pub z: f64,
}

impl DebiasedCoordinate {
    /// `estimate ± z_{1−α/2} · std_error / c`.
    pub fn interval(&self, alpha: f64, shrink: f64) -> Result<Interval> {
        let half = normal_quantile(1.0 - alpha / 2.0)? * self.std_error / shrink;
        Ok(Interval::new(self.estimate - half, self.estimate + half))
    }

    pub fn contour(&self, shrink: f64) -> Result<PlausibilityContour> {
        PlausibilityContour::with_shrink(
            PivotSource::location_scale(Reference::StandardNormal, self.estimate, self.std_error),
            shrink,
            ContourMeta { coordinate: Some(self.coord), split: None, method: "debiased_lasso".into() },
        )
    }
}

/// Debiased lasso `b̂_j = β̂_j + Θ̂_j Xᵀ(y − Xβ̂)/n` for the requested coordinates,
/// with rows of `Θ̂` from nodewise lasso regressions and variance
/// `σ̂² (Θ̂ Σ̂ Θ̂ᵀ)_jj / n`.
pub fn debiased_lasso(d: &Dataset, targets: &[usize], cfg: &DebiasedConfig) -> Result<Vec<DebiasedCoordinate>> {
    let (n, p) = (d.n(), d.p());
    if n < 20 {
        return Err(invalid(format!("debiased lasso needs n >= 20, got {n}")));
    }
    if let Some(&j) = targets.iter().find(|&&j| j >= p) {
        return Err(Error::IndexOutOfRange { index: j, len: p });
    }
    let (x, y) = (d.x(), d.y());
    let nf = n as f64;
    let lambda0 = (2.0 * (p.max(2) as f64).ln() / nf).sqrt();
    let fit = match cfg.lambda {
        Some(lambda) => lasso_fit(x, y, &LassoConfig::with_lambda(lambda))?,
        None => scaled_lasso(x, y, lambda0)?.0,
    };
    let resid = y - x * DVector::from_column_slice(&fit.coef);
    let active = fit.support().len();
    let sigma2 = resid.norm_squared() / (n.saturating_sub(active).max(1)) as f64;
    let score = x.transpose() * &resid / nf;

    targets
        .par_iter()
        .map(|&j| {
            let rest: Vec<usize> = (0..p).filter(|&k| k != j).collect();
            let xj = x.column(j).into_owned();
            let (gamma, tau2) = if rest.is_empty() {
                (DVector::zeros(0), xj.norm_squared() / nf)
            } else {
                let x_rest = x.select_columns(&rest);
                let node = match cfg.nodewise_lambda {
                    Some(l) => lasso_fit(&x_rest, &xj, &LassoConfig::with_lambda(l))?,
                    None => scaled_lasso(&x_rest, &xj, lambda0)?.0,
                };
                let gamma = DVector::from_vec(node.coef);
                let r = &xj - &x_rest * &gamma;
                // Equals ‖r‖²/n + λ‖γ̂‖₁ (scaled) at the nodewise optimum.
                let tau2 = xj.dot(&r) / nf;
                (gamma, tau2)
            };
            if !(tau2 > 0.0) {
                return Err(Error::Numerical(format!("nodewise regression for coordinate {j} is degenerate")));
            }
            // Row j of Θ̂: (e_j − γ̂ on the other coordinates) / τ̂².
            let mut theta_row = DVector::zeros(p);
            theta_row[j] = 1.0;
            for (k, &c) in rest.iter().enumerate() {
                theta_row[c] = -gamma[k];
            }
            theta_row /= tau2;
            let estimate = fit.coef[j] + theta_row.dot(&score);
            let xt = x * &theta_row;
            let omega = xt.norm_squared() / nf;
            let std_error = (sigma2 * omega / nf).sqrt();
            Ok(DebiasedCoordinate { coord: j, estimate, std_error, z: estimate / std_error })
        })
        .collect()
}

/// Debiased-lasso intervals for every coordinate.
pub fn debiased_lasso_intervals(
    d: &Dataset,
    alpha: f64,
    cfg: &DebiasedConfig,
) -> Result<Vec<(DebiasedCoordinate, Interval)>> {
    let all: Vec<usize> = (0..d.p()).collect();
    debiased_lasso(d, &all, cfg)?
        .into_iter()
        .map(|c| {
            let iv = c.interval(alpha, 1.0)?;
            Ok((c, iv))
        })
        .collect()
}
