//! Single-split pipeline and maxitive aggregation over repeated splits.
//!
//! One split: partition rows, select on the selection half, refit the
//! selected support on the inference half and turn each coordinate's pivot
//! into a contour. Across `R` splits, the aggregate contour of a coordinate is
//! the pointwise maximum over the splits that selected it, and its level sets
//! are unions of the per-split intervals.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::{make_split, subset_dataset, Dataset, Interval, SelectedSupport, SplitPlan, DEFAULT_FRAC_INF};
use crate::refit::ols_refit;
use crate::rng::{derive_labeled, derive_seed};
use crate::robust::{wild_boot_t_ecdfs, Multiplier, WildBootConfig, DEFAULT_BOOT};
use crate::selectors::{default_k_max, SelectorKind};
use crate::validify::{ContourMeta, PivotSource, PlausibilityContour, Reference};

/// Reference law for the refit t statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PivotMethod {
    /// Student t with the refit's residual degrees of freedom.
    #[default]
    ExactT,
    /// Wild-bootstrap law of the studentized statistic.
    WildBootstrap {
        #[serde(default = "default_boot")]
        n_boot: usize,
        #[serde(default)]
        multiplier: Multiplier,
    },
}

fn default_boot() -> usize {
    DEFAULT_BOOT
}

fn default_frac() -> f64 {
    DEFAULT_FRAC_INF
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    #[serde(default)]
    pub selector: SelectorKind,
    #[serde(default = "default_frac")]
    pub frac_inf: f64,
    /// Support cap; `None` uses `⌊0.5 · n_inf⌋`.
    #[serde(default)]
    pub k_max: Option<usize>,
    #[serde(default)]
    pub pivot: PivotMethod,
    /// Selection rows reused for inference (results become approximate).
    #[serde(default)]
    pub carve: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            selector: SelectorKind::default(),
            frac_inf: DEFAULT_FRAC_INF,
            k_max: None,
            pivot: PivotMethod::ExactT,
            carve: 0,
        }
    }
}

/// Refit summary and contour for one selected coordinate in one split.
#[derive(Debug, Clone)]
pub struct CoordinateFit {
    pub coord: usize,
    pub estimate: f64,
    pub std_error: f64,
    pub dof: usize,
    /// Zero residual variance: the contour is an indicator.
    pub degenerate: bool,
    pub contour: PlausibilityContour,
}

impl CoordinateFit {
    pub fn shrunk(&self, shrink: f64) -> Result<PlausibilityContour> {
        PlausibilityContour::with_shrink(self.contour.source.clone(), shrink, self.contour.meta.clone())
    }

    /// Level set at `alpha` of the contour with statistic multiplied by `shrink`.
    pub fn interval(&self, alpha: f64, shrink: f64) -> Result<Option<Interval>> {
        if shrink == 1.0 {
            self.contour.level_set(alpha)
        } else {
            self.shrunk(shrink)?.level_set(alpha)
        }
    }
}

#[derive(Debug, Clone)]
pub struct SplitResult {
    pub index: usize,
    pub plan: SplitPlan,
    pub support: SelectedSupport,
    pub sigma_hat: Option<f64>,
    /// Aligned with `support.coords()`; empty when nothing was selected.
    pub coords: Vec<CoordinateFit>,
}

impl SplitResult {
    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn coordinate(&self, j: usize) -> Option<&CoordinateFit> {
        self.support.position(j).map(|k| &self.coords[k])
    }
}

/// Seeds for the stages of split `index` under `master`.
pub fn split_seed(master: u64, index: usize) -> u64 {
    derive_seed(master, index as u64)
}

/// Partitions the rows and runs the selector on the selection half only.
pub fn split_and_select(d: &Dataset, cfg: &PipelineConfig, seed: u64) -> Result<(SplitPlan, SelectedSupport)> {
    let mut plan = make_split(d.n(), cfg.frac_inf, derive_labeled(seed, "split"))?;
    if cfg.carve > 0 {
        plan = plan.carve(cfg.carve);
    }
    let sel = subset_dataset(d, &plan.sel_idx)?;
    let k_max = cfg.k_max.unwrap_or_else(|| default_k_max(plan.n_inf()));
    if k_max >= plan.n_inf() {
        return Err(invalid(format!("k_max={k_max} must be below n_inf={}", plan.n_inf())));
    }
    let support = cfg.selector.select(sel.x(), sel.y(), derive_labeled(seed, "select"), k_max)?;
    Ok((plan, support))
}

/// Select on the selection half, refit and validify on the inference half.
pub fn run_single_split(d: &Dataset, cfg: &PipelineConfig, seed: u64, index: usize) -> Result<SplitResult> {
    let (plan, support) = split_and_select(d, cfg, seed)?;
    let inf = subset_dataset(d, &plan.inf_idx)?;
    if support.is_empty() {
        return Ok(SplitResult { index, plan, support, sigma_hat: None, coords: Vec::new() });
    }
    let fit = ols_refit(inf.x(), inf.y(), &support)?;
    let degenerate = fit.sigma2_hat <= 0.0;
    let nu = fit.dof as f64;
    let references: Vec<Reference> = match cfg.pivot {
        PivotMethod::ExactT => vec![Reference::StudentT { nu }; support.len()],
        PivotMethod::WildBootstrap { n_boot, multiplier } => {
            let wb = WildBootConfig { n_boot, multiplier, seed: derive_labeled(seed, "boot") };
            wild_boot_t_ecdfs(&fit, inf.x(), &wb)?.into_iter().map(|e| Reference::Empirical(Arc::new(e))).collect()
        }
    };
    let method = match cfg.pivot {
        PivotMethod::ExactT => "rspim_exact_t",
        PivotMethod::WildBootstrap { .. } => "rspim_wildboot",
    };
    let coords = support
        .coords()
        .iter()
        .zip(references)
        .enumerate()
        .map(|(k, (&j, reference))| {
            let (estimate, std_error) = (fit.beta_hat[k], fit.std_error(k));
            let contour = PlausibilityContour::new(
                PivotSource::location_scale(reference, estimate, std_error),
                ContourMeta { coordinate: Some(j), split: Some(index), method: method.into() },
            )?;
            Ok(CoordinateFit { coord: j, estimate, std_error, dof: fit.dof, degenerate, contour })
        })
        .collect::<Result<_>>()?;
    Ok(SplitResult { index, plan, sigma_hat: Some(fit.sigma_hat()), support, coords })
}

#[derive(Debug, Clone)]
pub struct MultiSplitResult {
    pub per_split: Vec<SplitResult>,
    pub r_count: usize,
    pub master_seed: u64,
}

impl MultiSplitResult {
    /// Per-split fits of coordinate `j`, in split order.
    pub fn fits_for(&self, j: usize) -> Vec<&CoordinateFit> {
        self.per_split.iter().filter_map(|s| s.coordinate(j)).collect()
    }

    /// Fraction of splits that selected `j`.
    pub fn selection_frequency(&self, j: usize) -> f64 {
        self.fits_for(j).len() as f64 / self.r_count as f64
    }

    pub fn empty_splits(&self) -> usize {
        self.per_split.iter().filter(|s| s.is_empty()).count()
    }

    /// Features selected in at least one split, ascending.
    pub fn ever_selected(&self) -> Vec<usize> {
        let mut all: Vec<usize> = self.per_split.iter().flat_map(|s| s.support.coords().iter().copied()).collect();
        all.sort_unstable();
        all.dedup();
        all
    }

    fn available(&self, j: usize) -> Result<Vec<&CoordinateFit>> {
        let fits = self.fits_for(j);
        if fits.is_empty() {
            return Err(Error::NotAvailable(j));
        }
        Ok(fits)
    }
}

/// `R` independent splits with seeds derived from `master_seed`.
pub fn run_splits(d: &Dataset, r: usize, cfg: &PipelineConfig, master_seed: u64) -> Result<MultiSplitResult> {
    if r == 0 {
        return Err(invalid("need at least one split"));
    }
    let per_split = (0..r)
        .into_par_iter()
        .map(|i| run_single_split(d, cfg, split_seed(master_seed, i), i))
        .collect::<Result<Vec<_>>>()?;
    Ok(MultiSplitResult { per_split, r_count: r, master_seed })
}

/// `max_r π^(r)(θ)` over the splits that selected `j`.
pub fn maxitive_contour(result: &MultiSplitResult, j: usize, theta: f64) -> Result<f64> {
    maxitive_contour_shrunk(result, j, theta, 1.0)
}

pub fn maxitive_contour_shrunk(result: &MultiSplitResult, j: usize, theta: f64, shrink: f64) -> Result<f64> {
    let mut best: f64 = 0.0;
    for fit in result.available(j)? {
        let v = if shrink == 1.0 { fit.contour.eval(theta)? } else { fit.shrunk(shrink)?.eval(theta)? };
        best = best.max(v);
    }
    Ok(best)
}

/// Sorts and merges intervals; touching endpoints merge.
pub fn merge_intervals(mut parts: Vec<Interval>) -> Vec<Interval> {
    parts.sort_by(|a, b| a.lo.total_cmp(&b.lo).then(a.hi.total_cmp(&b.hi)));
    let mut out: Vec<Interval> = Vec::with_capacity(parts.len());
    for iv in parts {
        match out.last_mut() {
            Some(last) if iv.lo <= last.hi => last.hi = last.hi.max(iv.hi),
            _ => out.push(iv),
        }
    }
    out
}

/// Intersection of closed intervals; `None` when empty.
pub fn intersect_intervals(parts: &[Interval]) -> Option<Interval> {
    let lo = parts.iter().map(|i| i.lo).fold(f64::NEG_INFINITY, f64::max);
    let hi = parts.iter().map(|i| i.hi).fold(f64::INFINITY, f64::min);
    (!parts.is_empty() && lo <= hi).then(|| Interval::new(lo, hi))
}

fn split_intervals(result: &MultiSplitResult, j: usize, alpha: f64, shrink: f64) -> Result<Vec<Interval>> {
    let mut parts = Vec::new();
    for fit in result.available(j)? {
        if let Some(iv) = fit.interval(alpha, shrink)? {
            parts.push(iv);
        }
    }
    Ok(parts)
}

/// Union over splits of the per-split level sets, as disjoint segments.
pub fn union_interval(result: &MultiSplitResult, j: usize, alpha: f64) -> Result<Vec<Interval>> {
    union_interval_shrunk(result, j, alpha, 1.0)
}

pub fn union_interval_shrunk(result: &MultiSplitResult, j: usize, alpha: f64, shrink: f64) -> Result<Vec<Interval>> {
    Ok(merge_intervals(split_intervals(result, j, alpha, shrink)?))
}

/// Intersection of per-split level sets (diagnostic); `None` when empty.
pub fn intersection_interval(result: &MultiSplitResult, j: usize, alpha: f64) -> Result<Option<Interval>> {
    let parts = split_intervals(result, j, alpha, 1.0)?;
    if parts.len() < result.fits_for(j).len() {
        return Ok(None);
    }
    Ok(intersect_intervals(&parts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dgp::{simulate, DesignConfig};
    use crate::model::TrueModel;
    use crate::numerics::binomial_se;

    fn small(seed: u64) -> (Dataset, TrueModel) {
        let cfg = DesignConfig { n: 80, p: 40, s: 3, rho: 0.3, snr_beta_norm: 3.0, seed, ..DesignConfig::default() };
        simulate(&cfg).unwrap()
    }

    fn same(a: &SplitResult, b: &SplitResult) -> bool {
        a.plan == b.plan
            && a.support == b.support
            && a.sigma_hat == b.sigma_hat
            && a.coords
                .iter()
                .zip(&b.coords)
                .all(|(x, y)| x.coord == y.coord && x.estimate == y.estimate && x.std_error == y.std_error)
    }

    fn iv(lo: f64, hi: f64) -> Interval {
        Interval::new(lo, hi)
    }

    #[test]
    fn merging_and_intersection() {
        assert_eq!(merge_intervals(vec![iv(1.0, 3.0), iv(0.0, 2.0)]), vec![iv(0.0, 3.0)]);
        assert_eq!(merge_intervals(vec![iv(2.0, 3.0), iv(0.0, 1.0)]), vec![iv(0.0, 1.0), iv(2.0, 3.0)]);
        assert_eq!(merge_intervals(vec![iv(0.0, 1.0), iv(1.0, 2.0)]), vec![iv(0.0, 2.0)]);
        assert_eq!(intersect_intervals(&[iv(0.0, 2.0), iv(1.0, 3.0)]), Some(iv(1.0, 2.0)));
        assert_eq!(intersect_intervals(&[iv(0.0, 1.0), iv(2.0, 3.0)]), None);
        assert_eq!(intersect_intervals(&[iv(0.0, 1.0)]), Some(iv(0.0, 1.0)));
    }

    #[test]
    fn one_split_reduces_to_single_pipeline() {
        let (d, _) = small(1);
        let cfg = PipelineConfig::default();
        let multi = run_splits(&d, 1, &cfg, 9).unwrap();
        let single = run_single_split(&d, &cfg, split_seed(9, 0), 0).unwrap();
        assert!(same(&multi.per_split[0], &single));
        for fit in &single.coords {
            let j = fit.coord;
            for th in [fit.estimate - 0.3, fit.estimate, fit.estimate + 0.1] {
                assert_eq!(maxitive_contour(&multi, j, th).unwrap(), fit.contour.eval(th).unwrap());
            }
            let u = union_interval(&multi, j, 0.1).unwrap();
            assert_eq!(u, vec![fit.contour.level_set(0.1).unwrap().unwrap()]);
            assert_eq!(intersection_interval(&multi, j, 0.1).unwrap(), Some(u[0]));
        }
    }

    #[test]
    fn results_do_not_depend_on_thread_count() {
        let (d, _) = small(2);
        let cfg = PipelineConfig::default();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| run_splits(&d, 6, &cfg, 4).unwrap())
        };
        let (a, b) = (run(1), run(4));
        assert!(a.per_split.iter().zip(&b.per_split).all(|(x, y)| same(x, y)));
    }

    #[test]
    fn maxitive_takes_the_pointwise_max() {
        let (d, _) = small(3);
        let res = run_splits(&d, 8, &PipelineConfig::default(), 11).unwrap();
        for j in res.ever_selected() {
            for k in -20..=20 {
                let th = k as f64 * 0.1;
                let manual = res.fits_for(j).iter().map(|f| f.contour.eval(th).unwrap()).fold(0.0, f64::max);
                assert_eq!(maxitive_contour(&res, j, th).unwrap(), manual);
            }
        }
        let never = (0..d.p()).find(|j| !res.ever_selected().contains(j)).unwrap();
        assert_eq!(maxitive_contour(&res, never, 0.0), Err(Error::NotAvailable(never)));
        assert_eq!(union_interval(&res, never, 0.1), Err(Error::NotAvailable(never)));
    }

    #[test]
    fn hand_built_max_of_two_contours() {
        let (d, _) = small(4);
        let mut res = run_splits(
            &d,
            2,
            &PipelineConfig { selector: SelectorKind::Fixed { coords: vec![0] }, ..PipelineConfig::default() },
            1,
        )
        .unwrap();
        // Contours with π(0) = 0.3 and 0.7 under a standard normal reference.
        for (split, pi) in res.per_split.iter_mut().zip([0.3, 0.7]) {
            let z = crate::numerics::normal_quantile(1.0 - pi / 2.0).unwrap();
            split.coords[0].contour = PlausibilityContour::new(
                PivotSource::location_scale(Reference::StandardNormal, z, 1.0),
                ContourMeta::default(),
            )
            .unwrap();
        }
        assert!((maxitive_contour(&res, 0, 0.0).unwrap() - 0.7).abs() < 1e-12);
    }

    #[test]
    fn union_matches_maxitive_upper_level_set_and_is_nested() {
        let (d, _) = small(5);
        let res = run_splits(&d, 10, &PipelineConfig::default(), 21).unwrap();
        let j = res.ever_selected()[0];
        let step = 1e-3;
        for alpha in [0.05, 0.1, 0.5] {
            let segs = union_interval(&res, j, alpha).unwrap();
            for k in -4000..=4000 {
                let th = k as f64 * step;
                let in_union = segs.iter().any(|s| s.contains(th));
                let in_level = maxitive_contour(&res, j, th).unwrap() >= alpha;
                if in_union != in_level {
                    let dist =
                        segs.iter().map(|s| (s.lo - th).abs().min((s.hi - th).abs())).fold(f64::INFINITY, f64::min);
                    assert!(dist <= step, "alpha={alpha} theta={th}");
                }
            }
        }
        let wide = union_interval(&res, j, 0.05).unwrap();
        for s in union_interval(&res, j, 0.5).unwrap() {
            assert!(wide.iter().any(|w| s.is_subset_of(w)));
        }
    }

    #[test]
    fn every_split_respects_the_support_cap() {
        let cfg =
            DesignConfig { n: 100, p: 500, s: 10, rho: 0.5, snr_beta_norm: 5.0, seed: 6, ..DesignConfig::default() };
        let (d, _) = simulate(&cfg).unwrap();
        let res = run_splits(&d, 50, &PipelineConfig::default(), 3).unwrap();
        assert_eq!(res.per_split.len(), 50);
        assert!(res.per_split.iter().all(|s| s.support.len() <= default_k_max(s.plan.n_inf())));
    }

    #[test]
    fn empty_selection_is_recorded() {
        let cfg = DesignConfig { n: 60, p: 30, s: 0, snr_beta_norm: 1.0, seed: 2, ..DesignConfig::default() };
        let (d, _) = simulate(&cfg).unwrap();
        let res = run_splits(&d, 4, &PipelineConfig::default(), 0).unwrap();
        assert!(res.empty_splits() > 0);
        assert!(res.per_split.iter().filter(|s| s.is_empty()).all(|s| s.coords.is_empty() && s.sigma_hat.is_none()));
    }

    #[test]
    fn carving_flags_the_plan() {
        let (d, _) = small(7);
        let cfg = PipelineConfig { carve: 5, ..PipelineConfig::default() };
        let s = run_single_split(&d, &cfg, 1, 0).unwrap();
        assert!(s.plan.carved && s.plan.n_inf() == 45);
    }

    #[test]
    fn wild_bootstrap_pivot_runs() {
        let (d, _) = small(8);
        let cfg = PipelineConfig {
            pivot: PivotMethod::WildBootstrap { n_boot: 199, multiplier: Multiplier::Mammen },
            ..PipelineConfig::default()
        };
        let s = run_single_split(&d, &cfg, 3, 0).unwrap();
        assert!(!s.coords.is_empty());
        let iv = s.coords[0].interval(0.1, 1.0).unwrap().unwrap();
        assert!(iv.contains(s.coords[0].estimate));
    }

    #[test]
    fn union_coverage_and_maxitive_tail_bound() {
        let m = 300;
        let us = [0.05, 0.1, 0.25, 0.5];
        let mut covered = 0usize;
        let mut total = 0usize;
        let mut below = [0usize; 4];
        for rep in 0..m as u64 {
            let cfg = DesignConfig {
                n: 80,
                p: 40,
                s: 3,
                rho: 0.0,
                snr_beta_norm: 3.0,
                seed: 500 + rep,
                ..DesignConfig::default()
            };
            let (d, truth) = simulate(&cfg).unwrap();
            let res = run_splits(&d, 5, &PipelineConfig::default(), rep).unwrap();
            for j in res.ever_selected() {
                let b0 = truth.beta0[j];
                total += 1;
                if union_interval(&res, j, 0.1).unwrap().iter().any(|s| s.contains(b0)) {
                    covered += 1;
                }
                let pmax = maxitive_contour(&res, j, b0).unwrap();
                for (k, &u) in us.iter().enumerate() {
                    if pmax <= u {
                        below[k] += 1;
                    }
                }
            }
        }
        let cov = covered as f64 / total as f64;
        assert!(cov >= 0.9 - 2.0 * binomial_se(0.9, total), "coverage {cov}");
        for (k, &u) in us.iter().enumerate() {
            let rate = below[k] as f64 / total as f64;
            assert!(rate <= u + 2.0 * binomial_se(u, total), "u={u} rate={rate}");
        }
    }
}
