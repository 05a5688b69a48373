//! Monte Carlo drivers, shrink-factor calibration and diagnostics.
//!
//! Every replication draws its data and its split from seeds derived from
//! `(master_seed, replication)`, identically for every method, so methods
//! and shrink factors are compared on common random numbers. Coverage of a
//! coordinate means `π_c(β0j) ≥ α`, which is membership of `β0j` in the
//! level set `{θ : π_c(θ) ≥ α}`.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dgp::{simulate, weak_signal_beta, BetaPattern, DesignConfig};
use crate::error::{invalid, Error, Result};
use crate::model::{subset_dataset, Interval, NoiseKind, SelectedSupport};
use crate::multisplit::{
    merge_intervals, run_single_split, run_splits, split_and_select, split_seed, PipelineConfig, PivotMethod,
};
use crate::numerics::{binomial_se, ks_distance, uniform_excess};
use crate::refit::{classical_t_interval, ols_refit};
use crate::rng::{derive_labeled, derive_seed};
use crate::robust::{
    cross_fit_nuisances, debiased_lasso, orth_contour_from_scores, CrossFitPlan, DebiasedConfig, Multiplier,
    NuisanceConfig, OrthScores, PlmData, WildBootConfig, DEFAULT_BOOT, DEFAULT_FOLDS,
};
use crate::selectors::SelectorKind;
use crate::validify::{ContourMeta, PlausibilityContour};

pub const DEFAULT_ALPHA: f64 = 0.1;
pub const HISTOGRAM_BINS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    RspimSingle,
    RspimUnion,
    RspimWildboot,
    OrthCrossfit,
    DebiasedLasso,
}

impl Method {
    pub const ALL: [Method; 5] =
        [Method::RspimSingle, Method::RspimUnion, Method::RspimWildboot, Method::OrthCrossfit, Method::DebiasedLasso];

    pub fn name(self) -> &'static str {
        match self {
            Method::RspimSingle => "rspim_single",
            Method::RspimUnion => "rspim_union",
            Method::RspimWildboot => "rspim_wildboot",
            Method::OrthCrossfit => "orth_crossfit",
            Method::DebiasedLasso => "debiased_lasso",
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
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        Method::ALL.into_iter().find(|m| m.name() == norm).ok_or_else(|| invalid(format!("unknown method '{s}'")))
    }
}

fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}

fn default_one() -> f64 {
    1.0
}

fn default_splits() -> usize {
    1
}

fn default_boot() -> usize {
    DEFAULT_BOOT
}

fn default_folds() -> usize {
    DEFAULT_FOLDS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Design template; its seed is replaced per replication.
    pub design: DesignConfig,
    pub method: Method,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    pub replications: usize,
    #[serde(default = "default_one")]
    pub shrink_c: f64,
    #[serde(default = "default_splits")]
    pub r_splits: usize,
    pub master_seed: u64,
    /// Selector, split fraction, support cap and carving.
    #[serde(default)]
    pub pipeline: PipelineConfig,
    #[serde(default = "default_boot")]
    pub n_boot: usize,
    #[serde(default)]
    pub multiplier: Multiplier,
    #[serde(default = "default_folds")]
    pub folds: usize,
}

impl ExperimentConfig {
    pub fn new(design: DesignConfig, method: Method, replications: usize, master_seed: u64) -> Self {
        Self {
            design,
            method,
            alpha: DEFAULT_ALPHA,
            replications,
            shrink_c: 1.0,
            r_splits: if method == Method::RspimUnion { 10 } else { 1 },
            master_seed,
            pipeline: PipelineConfig::default(),
            n_boot: DEFAULT_BOOT,
            multiplier: Multiplier::Rademacher,
            folds: DEFAULT_FOLDS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.design.validate()?;
        if self.replications == 0 {
            return Err(invalid("need at least one replication"));
        }
        if !(self.shrink_c > 0.0 && self.shrink_c.is_finite()) {
            return Err(invalid(format!("shrink_c must be positive, got {}", self.shrink_c)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(invalid(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.r_splits == 0 {
            return Err(invalid("r_splits must be positive"));
        }
        if self.method == Method::RspimWildboot {
            WildBootConfig { n_boot: self.n_boot, multiplier: self.multiplier, seed: 0 }.validate()?;
        }
        Ok(())
    }

    fn pipeline(&self) -> PipelineConfig {
        let pivot = match self.method {
            Method::RspimWildboot => PivotMethod::WildBootstrap { n_boot: self.n_boot, multiplier: self.multiplier },
            _ => PivotMethod::ExactT,
        };
        PipelineConfig { pivot, ..self.pipeline.clone() }
    }
}

/// Simulation presets for the five study modules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Module {
    A,
    B,
    C,
    D,
    E,
}

impl FromStr for Module {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "A" => Ok(Module::A),
            "B" => Ok(Module::B),
            "C" => Ok(Module::C),
            "D" => Ok(Module::D),
            "E" => Ok(Module::E),
            _ => Err(invalid(format!("unknown module '{s}' (expected A-E)"))),
        }
    }
}

impl Module {
    /// Default design and method of the module.
    ///
    /// * A: refit on the true support, no selection.
    /// * B: stability selection in `p = 500`, single split.
    /// * C: wild bootstrap under heteroskedastic noise.
    /// * D: cross-fitted orthogonal scores (debiased lasso as comparator).
    /// * E: weak signals under strong correlation.
    pub fn preset(self, replications: usize, master_seed: u64) -> ExperimentConfig {
        let base = DesignConfig::default();
        let (design, method, selector) = match self {
            Module::A => (
                DesignConfig { n: 100, p: 50, s: 5, rho: 0.0, snr_beta_norm: 3.0, ..base },
                Method::RspimSingle,
                SelectorKind::Fixed { coords: (0..5).collect() },
            ),
            Module::B => (
                DesignConfig { n: 100, p: 500, s: 10, rho: 0.5, snr_beta_norm: 5.0, ..base },
                Method::RspimSingle,
                SelectorKind::stability(),
            ),
            Module::C => (
                DesignConfig {
                    n: 200,
                    p: 100,
                    s: 5,
                    rho: 0.5,
                    snr_beta_norm: 2.0 * 5f64.sqrt(),
                    noise_kind: NoiseKind::HeteroskedasticX1,
                    ..base
                },
                Method::RspimWildboot,
                SelectorKind::stability(),
            ),
            Module::D => (
                DesignConfig { n: 200, p: 100, s: 5, rho: 0.5, snr_beta_norm: 3.0, ..base },
                Method::OrthCrossfit,
                SelectorKind::stability(),
            ),
            Module::E => (
                DesignConfig { n: 100, p: 200, s: 5, rho: 0.9, beta_pattern: weak_signal_beta(200, 5), ..base },
                Method::RspimSingle,
                SelectorKind::stability(),
            ),
        };
        let mut cfg = ExperimentConfig::new(design, method, replications, master_seed);
        cfg.pipeline.selector = selector;
        cfg
    }
}

/// Inference for one selected coordinate in one replication.
#[derive(Debug, Clone)]
pub struct CoordOutcome {
    pub coord: usize,
    pub beta0: f64,
    pub estimate: f64,
    /// One contour per split that selected the coordinate.
    pub contours: Vec<PlausibilityContour>,
}

impl CoordOutcome {
    /// `max_r π_c^(r)(θ)`.
    pub fn plausibility(&self, theta: f64, c: f64) -> Result<f64> {
        let mut best: f64 = 0.0;
        for k in &self.contours {
            best = best.max(k.eval_shrunk(theta, c)?);
        }
        Ok(best)
    }

    /// Level set `{θ : π_c(θ) ≥ α}` as merged segments.
    pub fn segments(&self, alpha: f64, c: f64) -> Result<Vec<Interval>> {
        let mut parts = Vec::new();
        for k in &self.contours {
            let iv = shrunk_interval(k, alpha, c)?;
            parts.extend(iv);
        }
        Ok(merge_intervals(parts))
    }

    pub fn covered(&self, alpha: f64, c: f64) -> Result<bool> {
        Ok(self.plausibility(self.beta0, c)? >= alpha)
    }

    pub fn rejects_zero(&self, alpha: f64, c: f64) -> Result<bool> {
        Ok(self.plausibility(0.0, c)? < alpha)
    }
}

/// Level set of `contour` with its statistic multiplied by `c`.
pub fn shrunk_interval(contour: &PlausibilityContour, alpha: f64, c: f64) -> Result<Option<Interval>> {
    if !(c > 0.0) {
        return Err(invalid(format!("shrink factor must be positive, got {c}")));
    }
    PlausibilityContour::with_shrink(contour.source.clone(), c, contour.meta.clone())?.level_set(alpha)
}

#[derive(Debug, Clone)]
pub struct RepOutcome {
    pub rep: usize,
    pub s0: Vec<usize>,
    /// Union of selected supports across splits.
    pub selected: Vec<usize>,
    pub coords: Vec<CoordOutcome>,
}

impl RepOutcome {
    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }
}

fn rep_seeds(master: u64, rep: usize) -> (u64, u64) {
    let s = derive_seed(master, rep as u64);
    (derive_labeled(s, "data"), derive_labeled(s, "pipeline"))
}

/// Runs one replication of `cfg`.
pub fn run_replication(cfg: &ExperimentConfig, rep: usize) -> Result<RepOutcome> {
    let (data_seed, pipe_seed) = rep_seeds(cfg.master_seed, rep);
    let design = DesignConfig { seed: data_seed, ..cfg.design.clone() };
    let (d, truth) = simulate(&design)?;
    let s0 = truth.support0();
    let pipe = cfg.pipeline();
    let outcome = |coord: usize, estimate: f64, contours: Vec<PlausibilityContour>| CoordOutcome {
        coord,
        beta0: truth.beta0[coord],
        estimate,
        contours,
    };
    let (selected, coords) = match cfg.method {
        Method::RspimSingle | Method::RspimWildboot => {
            let split = run_single_split(&d, &pipe, split_seed(pipe_seed, 0), 0)?;
            let coords = split.coords.iter().map(|f| outcome(f.coord, f.estimate, vec![f.contour.clone()])).collect();
            (split.support.coords().to_vec(), coords)
        }
        Method::RspimUnion => {
            let multi = run_splits(&d, cfg.r_splits, &pipe, pipe_seed)?;
            let selected = multi.ever_selected();
            let coords = selected
                .iter()
                .map(|&j| {
                    let fits = multi.fits_for(j);
                    outcome(j, fits[0].estimate, fits.iter().map(|f| f.contour.clone()).collect())
                })
                .collect();
            (selected, coords)
        }
        Method::OrthCrossfit => {
            let (plan, support) = split_and_select(&d, &pipe, split_seed(pipe_seed, 0))?;
            let inf = subset_dataset(&d, &plan.inf_idx)?;
            let folds = CrossFitPlan::new(plan.n_inf(), cfg.folds, derive_labeled(pipe_seed, "folds"))?;
            let boot_seed = derive_labeled(pipe_seed, "boot");
            let coords = support
                .coords()
                .par_iter()
                .map(|&j| {
                    let plm = PlmData::from_coordinate(inf.x(), inf.y(), j)?;
                    let scores =
                        OrthScores::new(&plm, &cross_fit_nuisances(&plm, &folds, &NuisanceConfig::default())?)?;
                    let estimate = scores.theta_hat()?;
                    let wb = WildBootConfig {
                        n_boot: cfg.n_boot,
                        multiplier: cfg.multiplier,
                        seed: derive_seed(boot_seed, j as u64),
                    };
                    let meta =
                        ContourMeta { coordinate: Some(j), split: Some(0), method: Method::OrthCrossfit.name().into() };
                    Ok(outcome(j, estimate, vec![orth_contour_from_scores(scores, &wb, meta)?]))
                })
                .collect::<Result<Vec<_>>>()?;
            (support.coords().to_vec(), coords)
        }
        Method::DebiasedLasso => {
            let (_, support) = split_and_select(&d, &pipe, split_seed(pipe_seed, 0))?;
            let coords = debiased_lasso(&d, support.coords(), &DebiasedConfig::default())?
                .into_iter()
                .map(|c| Ok(outcome(c.coord, c.estimate, vec![c.contour(1.0)?])))
                .collect::<Result<Vec<_>>>()?;
            (support.coords().to_vec(), coords)
        }
    };
    Ok(RepOutcome { rep, s0, selected, coords })
}

/// All replications of `cfg`, in replication order.
pub fn run_replications(cfg: &ExperimentConfig) -> Result<Vec<RepOutcome>> {
    cfg.validate()?;
    (0..cfg.replications).into_par_iter().map(|r| run_replication(cfg, r)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformityReport {
    pub n: usize,
    pub ks: f64,
    /// Largest excess of the empirical CDF over the uniform CDF.
    pub anticonservative_excess: f64,
    pub histogram: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub method: Method,
    pub alpha: f64,
    pub shrink_c: f64,
    pub replications: usize,
    pub n_selected_total: usize,
    pub n_selected_active: usize,
    pub n_selected_null: usize,
    pub conditional_coverage: Option<f64>,
    /// Binomial SE with the selected pairs as effective sample size.
    pub coverage_se: Option<f64>,
    /// Median interval length over finite intervals.
    pub mil: Option<f64>,
    pub power: Option<f64>,
    pub null_rejection: Option<f64>,
    pub ks_null_plaus: Option<f64>,
    pub null_uniformity: Option<UniformityReport>,
    pub false_confidence_rate: Option<f64>,
    pub coverage_curve: Vec<(f64, f64)>,
    pub infinite_or_na_rate: f64,
    pub empty_selection_rate: f64,
    /// Replications whose selection contains the true support.
    pub screening_rate: f64,
    /// Replications selecting exactly the true support.
    pub exact_selection_rate: f64,
}

/// Conditional coverage `Σ 1{π_c(β0j) ≥ α} / N_sel` over selected pairs.
pub fn conditional_coverage(outcomes: &[RepOutcome], alpha: f64, c: f64) -> Result<Option<f64>> {
    let mut hits = 0usize;
    let mut total = 0usize;
    for o in outcomes.iter().flat_map(|r| &r.coords) {
        total += 1;
        hits += o.covered(alpha, c)? as usize;
    }
    Ok((total > 0).then(|| hits as f64 / total as f64))
}

/// Plausibility of the truth for every selected pair, in order.
pub fn truth_plausibilities(outcomes: &[RepOutcome], c: f64) -> Result<Vec<f64>> {
    outcomes.iter().flat_map(|r| &r.coords).map(|o| o.plausibility(o.beta0, c)).collect()
}

pub fn uniformity_report(values: &[f64]) -> Result<UniformityReport> {
    let mut histogram = vec![0usize; HISTOGRAM_BINS];
    for &v in values {
        let b = ((v * HISTOGRAM_BINS as f64) as usize).min(HISTOGRAM_BINS - 1);
        histogram[b] += 1;
    }
    Ok(UniformityReport {
        n: values.len(),
        ks: ks_distance(values)?,
        anticonservative_excess: uniform_excess(values)?,
        histogram,
    })
}

/// KS statistic and 20-bin histogram of `π(β0j)` over selected pairs.
pub fn null_uniformity_report(cfg: &ExperimentConfig) -> Result<UniformityReport> {
    uniformity_report(&truth_plausibilities(&run_replications(cfg)?, cfg.shrink_c)?)
}

pub fn coverage_curve_from(outcomes: &[RepOutcome], alphas: &[f64], c: f64) -> Result<Vec<(f64, f64)>> {
    alphas.iter().filter_map(|&a| conditional_coverage(outcomes, a, c).transpose().map(|r| r.map(|v| (a, v)))).collect()
}

/// `(α, coverage)` on shared replications.
pub fn coverage_curve(cfg: &ExperimentConfig, alphas: &[f64]) -> Result<Vec<(f64, f64)>> {
    coverage_curve_from(&run_replications(cfg)?, alphas, cfg.shrink_c)
}

pub fn default_alphas() -> Vec<f64> {
    (1..=9).map(|k| k as f64 / 10.0).collect()
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len();
    Some(if m % 2 == 1 { v[m / 2] } else { 0.5 * (v[m / 2 - 1] + v[m / 2]) })
}

pub fn summarize(cfg: &ExperimentConfig, outcomes: &[RepOutcome]) -> Result<BenchReport> {
    let (alpha, c) = (cfg.alpha, cfg.shrink_c);
    let pairs: Vec<&CoordOutcome> = outcomes.iter().flat_map(|r| &r.coords).collect();
    let n_sel = pairs.len();
    let empty_reps = outcomes.iter().filter(|r| r.is_empty()).count();
    let mut lengths = Vec::with_capacity(n_sel);
    let mut infinite = 0usize;
    let (mut act, mut act_rej, mut null, mut null_rej) = (0usize, 0usize, 0usize, 0usize);
    for o in &pairs {
        let segs = o.segments(alpha, c)?;
        let len: f64 = segs.iter().map(Interval::width).sum();
        if len.is_finite() {
            lengths.push(len);
        } else {
            infinite += 1;
        }
        let rej = o.rejects_zero(alpha, c)? as usize;
        if o.beta0 != 0.0 {
            act += 1;
            act_rej += rej;
        } else {
            null += 1;
            null_rej += rej;
        }
    }
    let coverage = conditional_coverage(outcomes, alpha, c)?;
    let pis = truth_plausibilities(outcomes, c)?;
    let uniformity = if pis.is_empty() { None } else { Some(uniformity_report(&pis)?) };
    let null_pis: Vec<f64> = pairs.iter().zip(&pis).filter(|(o, _)| o.beta0 == 0.0).map(|(_, &v)| v).collect();
    let fcr = if null_pis.is_empty() {
        None
    } else {
        Some(null_pis.iter().filter(|&&v| v > 1.0 - alpha).count() as f64 / null_pis.len() as f64)
    };
    let reps = outcomes.len().max(1) as f64;
    let screened = outcomes.iter().filter(|r| r.s0.iter().all(|j| r.selected.contains(j))).count();
    let exact = outcomes.iter().filter(|r| r.selected == r.s0).count();
    let rate = |num: usize, den: usize| (den > 0).then(|| num as f64 / den as f64);
    Ok(BenchReport {
        method: cfg.method,
        alpha,
        shrink_c: c,
        replications: outcomes.len(),
        n_selected_total: n_sel,
        n_selected_active: act,
        n_selected_null: null,
        conditional_coverage: coverage,
        coverage_se: coverage.map(|v| binomial_se(v, n_sel)),
        mil: median(lengths),
        power: rate(act_rej, act),
        null_rejection: rate(null_rej, null),
        ks_null_plaus: uniformity.as_ref().map(|u| u.ks),
        null_uniformity: uniformity,
        false_confidence_rate: fcr,
        coverage_curve: coverage_curve_from(outcomes, &default_alphas(), c)?,
        infinite_or_na_rate: rate(infinite + empty_reps, n_sel + empty_reps).unwrap_or(0.0),
        empty_selection_rate: empty_reps as f64 / reps,
        screening_rate: screened as f64 / reps,
        exact_selection_rate: exact as f64 / reps,
    })
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<BenchReport> {
    summarize(cfg, &run_replications(cfg)?)
}

/// One row per selected coordinate and replication; empty replications get a
/// row without a coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub rep: usize,
    pub coord: Option<usize>,
    pub active: Option<bool>,
    pub beta0: Option<f64>,
    pub estimate: Option<f64>,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub n_segments: Option<usize>,
    pub length: Option<f64>,
    pub covered: Option<bool>,
    pub rejects_zero: Option<bool>,
    pub plausibility_at_truth: Option<f64>,
}

pub fn replication_records(outcomes: &[RepOutcome], alpha: f64, c: f64) -> Result<Vec<ReplicationRecord>> {
    let mut rows = Vec::new();
    for r in outcomes {
        if r.is_empty() {
            rows.push(ReplicationRecord {
                rep: r.rep,
                coord: None,
                active: None,
                beta0: None,
                estimate: None,
                lo: None,
                hi: None,
                n_segments: None,
                length: None,
                covered: None,
                rejects_zero: None,
                plausibility_at_truth: None,
            });
        }
        for o in &r.coords {
            let segs = o.segments(alpha, c)?;
            rows.push(ReplicationRecord {
                rep: r.rep,
                coord: Some(o.coord),
                active: Some(o.beta0 != 0.0),
                beta0: Some(o.beta0),
                estimate: Some(o.estimate),
                lo: segs.first().map(|s| s.lo),
                hi: segs.last().map(|s| s.hi),
                n_segments: Some(segs.len()),
                length: Some(segs.iter().map(Interval::width).sum()),
                covered: Some(o.covered(alpha, c)?),
                rejects_zero: Some(o.rejects_zero(alpha, c)?),
                plausibility_at_truth: Some(o.plausibility(o.beta0, c)?),
            });
        }
    }
    Ok(rows)
}

/// `0.5, 0.55, …, 2.5`.
pub fn default_c_grid() -> Vec<f64> {
    (0..=40).map(|k| (50 + 5 * k) as f64 / 100.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub method: Method,
    pub c_star: f64,
    pub coverage_at_c_star: f64,
    pub curve: Vec<(f64, f64)>,
}

/// Grid value whose coverage is closest to `target`; ties go to the smaller `c`.
pub fn calibrate_from(
    method: Method,
    outcomes: &[RepOutcome],
    alpha: f64,
    c_grid: &[f64],
    target: f64,
) -> Result<CalibrationResult> {
    if c_grid.is_empty() {
        return Err(invalid("c grid is empty"));
    }
    if c_grid.windows(2).any(|w| w[1] <= w[0]) || c_grid.iter().any(|c| !(*c > 0.0)) {
        return Err(invalid("c grid must be positive and strictly increasing"));
    }
    let pairs: Vec<&CoordOutcome> = outcomes.iter().flat_map(|r| &r.coords).collect();
    if pairs.is_empty() {
        return Err(invalid("no selected coordinates: coverage is undefined"));
    }
    let curve: Vec<(f64, f64)> = c_grid
        .par_iter()
        .map(|&c| {
            let mut hits = 0usize;
            for o in &pairs {
                hits += o.covered(alpha, c)? as usize;
            }
            Ok((c, hits as f64 / pairs.len() as f64))
        })
        .collect::<Result<_>>()?;
    if curve.iter().all(|(_, v)| *v == 0.0) {
        return Err(invalid("coverage is zero at every grid value"));
    }
    let mut best = curve[0];
    for &(c, v) in &curve[1..] {
        if (v - target).abs() < (best.1 - target).abs() {
            best = (c, v);
        }
    }
    Ok(CalibrationResult { method, c_star: best.0, coverage_at_c_star: best.1, curve })
}

pub fn calibrate_c(cfg: &ExperimentConfig, c_grid: &[f64], target: f64) -> Result<CalibrationResult> {
    calibrate_from(cfg.method, &run_replications(cfg)?, cfg.alpha, c_grid, target)
}

/// RSPIM against the refit on the true support, on the same splits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleStudy {
    pub replications: usize,
    pub exact_selection_rate: f64,
    /// Median over truly active selected pairs of RSPIM length / oracle length.
    pub median_length_ratio: Option<f64>,
    /// Median RSPIM interval length over truly active selected pairs.
    pub median_length: Option<f64>,
    pub median_oracle_length: Option<f64>,
}

pub fn oracle_study(cfg: &ExperimentConfig) -> Result<OracleStudy> {
    cfg.validate()?;
    let pipe = cfg.pipeline();
    let per_rep: Vec<(bool, Vec<(f64, f64)>)> = (0..cfg.replications)
        .into_par_iter()
        .map(|rep| {
            let (data_seed, pipe_seed) = rep_seeds(cfg.master_seed, rep);
            let (d, truth) = simulate(&DesignConfig { seed: data_seed, ..cfg.design.clone() })?;
            let s0 = truth.support0();
            let (plan, support) = split_and_select(&d, &pipe, split_seed(pipe_seed, 0))?;
            let inf = subset_dataset(&d, &plan.inf_idx)?;
            let exact = support.coords() == s0.as_slice();
            if support.is_empty() || s0.is_empty() {
                return Ok((exact, Vec::new()));
            }
            let fit = ols_refit(inf.x(), inf.y(), &support)?;
            let oracle_support = SelectedSupport::new(s0.clone(), d.p(), "oracle", s0.len())?;
            let oracle = ols_refit(inf.x(), inf.y(), &oracle_support)?;
            let pairs = s0
                .iter()
                .filter(|j| support.contains(**j))
                .map(|&j| {
                    let a = classical_t_interval(&fit, j, cfg.alpha)?.width() / cfg.shrink_c;
                    let b = classical_t_interval(&oracle, j, cfg.alpha)?.width() / cfg.shrink_c;
                    Ok((a, b))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((exact, pairs))
        })
        .collect::<Result<_>>()?;
    let reps = per_rep.len();
    let exact = per_rep.iter().filter(|(e, _)| *e).count();
    let pairs: Vec<(f64, f64)> = per_rep.into_iter().flat_map(|(_, p)| p).collect();
    Ok(OracleStudy {
        replications: reps,
        exact_selection_rate: exact as f64 / reps as f64,
        median_length_ratio: median(pairs.iter().map(|(a, b)| a / b).collect()),
        median_length: median(pairs.iter().map(|(a, _)| *a).collect()),
        median_oracle_length: median(pairs.iter().map(|(_, b)| *b).collect()),
    })
}

/// Design with every active coefficient equal to `magnitude`.
pub fn equal_signal_design(n: usize, p: usize, s: usize, magnitude: f64, rho: f64) -> DesignConfig {
    let mut beta = vec![0.0; p];
    beta[..s].iter_mut().for_each(|b| *b = magnitude);
    DesignConfig {
        n,
        p,
        s,
        rho,
        snr_beta_norm: magnitude * (s as f64).sqrt(),
        beta_pattern: BetaPattern::Custom(beta),
        ..DesignConfig::default()
    }
}
