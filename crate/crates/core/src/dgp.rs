//! Synthetic designs and responses for the simulation modules.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::{Dataset, NoiseKind, TrueModel};
use crate::rng::{derive_labeled, rng_from_seed};
use crate::robust::PlmData;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CorrKind {
    /// `Σ_jk = ρ^|j-k|`.
    #[default]
    Ar1,
    /// `Σ_jk = ρ` off the diagonal.
    Equicorrelated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "kind", content = "values")]
pub enum BetaPattern {
    /// First `s` coordinates equal to `‖β‖₂ / √s`.
    #[default]
    EqualMagnitude,
    Custom(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignConfig {
    pub n: usize,
    pub p: usize,
    pub rho: f64,
    #[serde(default)]
    pub corr_kind: CorrKind,
    pub s: usize,
    pub snr_beta_norm: f64,
    #[serde(default)]
    pub beta_pattern: BetaPattern,
    pub noise_kind: NoiseKind,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    pub seed: u64,
}

fn default_sigma() -> f64 {
    1.0
}

impl Default for DesignConfig {
    fn default() -> Self {
        Self {
            n: 100,
            p: 500,
            rho: 0.0,
            corr_kind: CorrKind::Ar1,
            s: 10,
            snr_beta_norm: 5.0,
            beta_pattern: BetaPattern::EqualMagnitude,
            noise_kind: NoiseKind::Gaussian,
            sigma: 1.0,
            seed: 0,
        }
    }
}

impl DesignConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 4 {
            return Err(invalid(format!("n must be at least 4, got {}", self.n)));
        }
        if self.p < 1 {
            return Err(invalid("p must be positive"));
        }
        if self.s > self.p {
            return Err(invalid(format!("sparsity s={} exceeds p={}", self.s, self.p)));
        }
        if !(self.rho >= -1.0 && self.rho < 1.0) {
            return Err(invalid(format!("rho must lie in [-1, 1), got {}", self.rho)));
        }
        if self.corr_kind == CorrKind::Equicorrelated && self.p > 1 && self.rho <= -1.0 / (self.p as f64 - 1.0) {
            return Err(invalid(format!("equicorrelated design needs rho > -1/(p-1), got {}", self.rho)));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(invalid(format!("sigma must be nonnegative, got {}", self.sigma)));
        }
        if let NoiseKind::StudentT { df } = self.noise_kind {
            if df <= 2.0 {
                return Err(invalid(format!("student-t noise needs df > 2, got {df}")));
            }
        }
        Ok(())
    }

    pub fn beta0(&self) -> Result<Vec<f64>> {
        make_beta(self.p, self.s, self.snr_beta_norm, &self.beta_pattern)
    }
}

/// Gaussian design with AR(1) or equicorrelated columns, rows i.i.d.
pub fn gen_design(cfg: &DesignConfig) -> Result<DMatrix<f64>> {
    cfg.validate()?;
    let (n, p, rho) = (cfg.n, cfg.p, cfg.rho);
    let mut rng = rng_from_seed(derive_labeled(cfg.seed, "design"));
    let mut x = DMatrix::zeros(n, p);
    let mut z = vec![0.0; p];
    match cfg.corr_kind {
        CorrKind::Ar1 => {
            let innov = (1.0 - rho * rho).max(0.0).sqrt();
            for i in 0..n {
                for v in z.iter_mut() {
                    *v = rng.sample(StandardNormal);
                }
                let mut prev = z[0];
                x[(i, 0)] = prev;
                for j in 1..p {
                    prev = rho * prev + innov * z[j];
                    x[(i, j)] = prev;
                }
            }
        }
        CorrKind::Equicorrelated => {
            // Symmetric square root of (1-ρ)I + ρ11ᵀ: √(1-ρ) I + c 11ᵀ.
            let pf = p as f64;
            let a = (1.0 - rho).sqrt();
            let c = ((1.0 - rho + rho * pf).sqrt() - a) / pf;
            for i in 0..n {
                for v in z.iter_mut() {
                    *v = rng.sample(StandardNormal);
                }
                let total: f64 = z.iter().sum();
                for j in 0..p {
                    x[(i, j)] = a * z[j] + c * total;
                }
            }
        }
    }
    Ok(x)
}

/// `y = Xβ₀ + ε` under the requested noise law.
pub fn gen_response(
    x: &DMatrix<f64>,
    beta0: &[f64],
    sigma: f64,
    noise_kind: NoiseKind,
    seed: u64,
) -> Result<DVector<f64>> {
    if beta0.len() != x.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "beta0 has length {} but x has {} columns",
            beta0.len(),
            x.ncols()
        )));
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(invalid(format!("sigma must be nonnegative, got {sigma}")));
    }
    let n = x.nrows();
    let mean = x * DVector::from_column_slice(beta0);
    if sigma == 0.0 {
        return Ok(mean);
    }
    let mut rng = rng_from_seed(derive_labeled(seed, "noise"));
    let eps: Vec<f64> = match noise_kind {
        NoiseKind::Gaussian => (0..n).map(|_| sigma * rng.sample::<f64, _>(StandardNormal)).collect(),
        NoiseKind::HeteroskedasticX1 => {
            let col = x.column(0);
            let ms = col.iter().map(|v| v * v).sum::<f64>() / n as f64;
            if ms <= 0.0 {
                return Err(invalid("heteroskedastic noise needs a nonzero first column"));
            }
            let scale = sigma / ms.sqrt();
            (0..n).map(|i| scale * col[i] * rng.sample::<f64, _>(StandardNormal)).collect()
        }
        NoiseKind::StudentT { df } => {
            if df <= 2.0 {
                return Err(invalid(format!("student-t noise needs df > 2, got {df}")));
            }
            let t = StudentT::new(df).map_err(|e| invalid(e.to_string()))?;
            let scale = sigma / (df / (df - 2.0)).sqrt();
            (0..n).map(|_| scale * t.sample(&mut rng)).collect()
        }
    };
    Ok(mean + DVector::from_vec(eps))
}

/// Sparse coefficient vector with its support on the leading coordinates.
pub fn make_beta(p: usize, s: usize, snr_beta_norm: f64, pattern: &BetaPattern) -> Result<Vec<f64>> {
    if s > p {
        return Err(invalid(format!("sparsity s={s} exceeds p={p}")));
    }
    match pattern {
        BetaPattern::EqualMagnitude => {
            if !(snr_beta_norm > 0.0 && snr_beta_norm.is_finite()) && s > 0 {
                return Err(invalid(format!("signal norm must be positive, got {snr_beta_norm}")));
            }
            let mut beta = vec![0.0; p];
            if s > 0 {
                let v = snr_beta_norm / (s as f64).sqrt();
                beta[..s].iter_mut().for_each(|b| *b = v);
            }
            Ok(beta)
        }
        BetaPattern::Custom(values) => {
            if values.len() != p {
                return Err(Error::DimensionMismatch(format!("custom beta has length {} but p = {p}", values.len())));
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("custom beta".into()));
            }
            Ok(values.clone())
        }
    }
}

/// Weak equal signals of size 0.4 on the first `s` coordinates (stress design).
pub fn weak_signal_beta(p: usize, s: usize) -> BetaPattern {
    let mut v = vec![0.0; p];
    v[..s.min(p)].iter_mut().for_each(|b| *b = 0.4);
    BetaPattern::Custom(v)
}

/// Draws a full dataset and returns it with its generating model.
pub fn simulate(cfg: &DesignConfig) -> Result<(Dataset, TrueModel)> {
    let x = gen_design(cfg)?;
    let beta0 = cfg.beta0()?;
    let y = gen_response(&x, &beta0, cfg.sigma, cfg.noise_kind, cfg.seed)?;
    let sigma = if cfg.sigma > 0.0 { cfg.sigma } else { f64::MIN_POSITIVE };
    Ok((Dataset::new(x, y)?, TrueModel::new(beta0, sigma, cfg.noise_kind)?))
}

/// Partially linear design `Y = θ₀ D + Xβ + ε`, `D = Xγ + v`, with `β` and `γ`
/// equal-magnitude on the first `s` controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlmConfig {
    pub n: usize,
    pub p: usize,
    pub s: usize,
    pub rho: f64,
    pub theta0: f64,
    /// `‖β‖₂` of the outcome regression.
    pub outcome_norm: f64,
    /// `‖γ‖₂` of the treatment regression.
    pub treatment_norm: f64,
    pub noise_kind: NoiseKind,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    pub seed: u64,
}

impl Default for PlmConfig {
    fn default() -> Self {
        Self {
            n: 400,
            p: 50,
            s: 5,
            rho: 0.5,
            theta0: 1.0,
            outcome_norm: 2.0,
            treatment_norm: 1.0,
            noise_kind: NoiseKind::Gaussian,
            sigma: 1.0,
            seed: 0,
        }
    }
}

/// Truth behind a partially linear sample: `g = E[Y|X]` and `m = E[D|X]` per row.
#[derive(Debug, Clone, PartialEq)]
pub struct PlmTruth {
    pub theta0: f64,
    pub g: DVector<f64>,
    pub m: DVector<f64>,
}

pub fn simulate_plm(cfg: &PlmConfig) -> Result<(PlmData, PlmTruth)> {
    let design = DesignConfig {
        n: cfg.n,
        p: cfg.p,
        rho: cfg.rho,
        s: cfg.s,
        snr_beta_norm: cfg.outcome_norm,
        noise_kind: cfg.noise_kind,
        sigma: cfg.sigma,
        seed: cfg.seed,
        ..DesignConfig::default()
    };
    let x = gen_design(&design)?;
    let beta = design.beta0()?;
    let gamma = make_beta(cfg.p, cfg.s, cfg.treatment_norm, &BetaPattern::EqualMagnitude)?;
    let m = &x * DVector::from_vec(gamma);
    let mut rng = rng_from_seed(derive_labeled(cfg.seed, "treatment"));
    let d_treat = DVector::from_fn(cfg.n, |i, _| m[i] + rng.sample::<f64, _>(StandardNormal));
    let base = gen_response(&x, &beta, cfg.sigma, cfg.noise_kind, cfg.seed)?;
    let y = base + &d_treat * cfg.theta0;
    let g = &x * DVector::from_vec(beta) + &m * cfg.theta0;
    Ok((PlmData::new(y, d_treat, x)?, PlmTruth { theta0: cfg.theta0, g, m }))
}
