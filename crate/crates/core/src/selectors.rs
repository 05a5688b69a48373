//! Variable selectors. Every selector sees only the selection half of a split
//! (plus a seed); none of them has access to inference rows.

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lasso::{lasso_fit, LassoConfig};
use crate::model::SelectedSupport;
use crate::rng::{derive_seed, rng_from_seed};

pub const DEFAULT_SUBSAMPLES: usize = 50;
pub const DEFAULT_THRESHOLD: f64 = 0.6;

/// `sd(y) · √(2 ln p / n)` with the sample standard deviation of `y`.
pub fn default_lambda(y: &DVector<f64>, p: usize) -> f64 {
    let n = y.len() as f64;
    let mean = y.mean();
    let sd = (y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    sd * (2.0 * (p.max(2) as f64).ln() / n).sqrt()
}

/// Cap on the support size: `⌊0.5 · n_inf⌋`, at least 1.
pub fn default_k_max(n_inf: usize) -> usize {
    (n_inf / 2).max(1)
}

/// Per-subsample selection cap `min(⌈1.5 √n_sel⌉, p)`.
pub fn default_q_cap(n_sel: usize, p: usize) -> usize {
    ((1.5 * (n_sel as f64).sqrt()).ceil() as usize).min(p)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityConfig {
    pub n_subsamples: usize,
    pub threshold: f64,
    /// Per-subsample cap; `None` uses [`default_q_cap`].
    pub q_cap: Option<usize>,
    /// Lasso penalty; `None` uses [`default_lambda`] on the selection sample.
    pub lambda: Option<f64>,
    pub seed: u64,
}

impl StabilityConfig {
    pub fn new(seed: u64) -> Self {
        Self { n_subsamples: DEFAULT_SUBSAMPLES, threshold: DEFAULT_THRESHOLD, q_cap: None, lambda: None, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.threshold > 0.5 && self.threshold < 1.0) {
            return Err(invalid(format!("threshold must lie in (0.5, 1), got {}", self.threshold)));
        }
        if self.n_subsamples == 0 {
            return Err(invalid("need at least one subsample"));
        }
        Ok(())
    }
}

/// Indices of the `k` largest scores, ties broken by smaller index.
fn top_by_score(candidates: &[usize], score: impl Fn(usize) -> f64, k: usize) -> Vec<usize> {
    let mut ranked = candidates.to_vec();
    ranked.sort_by(|&a, &b| score(b).total_cmp(&score(a)).then(a.cmp(&b)));
    ranked.truncate(k);
    ranked
}

/// Nonzero lasso coordinates, truncated to the `k` largest by `|coef|`.
pub fn lasso_top(x: &DMatrix<f64>, y: &DVector<f64>, lambda: f64, k: usize) -> Result<Vec<usize>> {
    let fit = lasso_fit(x, y, &LassoConfig::with_lambda(lambda))?;
    Ok(top_by_score(&fit.support(), |j| fit.coef[j].abs(), k))
}

/// Selection frequency of each feature across half-sample lasso fits.
pub fn stability_frequencies(x_sel: &DMatrix<f64>, y_sel: &DVector<f64>, cfg: &StabilityConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let (n, p) = x_sel.shape();
    if n < 4 {
        return Err(invalid(format!("stability selection needs n_sel >= 4, got {n}")));
    }
    if y_sel.len() != n {
        return Err(Error::DimensionMismatch(format!("x has {n} rows, y has {}", y_sel.len())));
    }
    let lambda = cfg.lambda.unwrap_or_else(|| default_lambda(y_sel, p));
    let q = cfg.q_cap.unwrap_or_else(|| default_q_cap(n, p)).min(p);
    let half = n / 2;
    let picks: Vec<Vec<usize>> = (0..cfg.n_subsamples)
        .into_par_iter()
        .map(|b| {
            let mut rng = rng_from_seed(derive_seed(cfg.seed, b as u64));
            let mut rows = sample(&mut rng, n, half).into_vec();
            rows.sort_unstable();
            let xb = x_sel.select_rows(&rows);
            let yb = y_sel.select_rows(&rows);
            lasso_top(&xb, &yb, lambda, q)
        })
        .collect::<Result<_>>()?;
    let mut counts = vec![0usize; p];
    for pick in &picks {
        for &j in pick {
            counts[j] += 1;
        }
    }
    let b = cfg.n_subsamples as f64;
    Ok(counts.into_iter().map(|c| c as f64 / b).collect())
}

/// Features with frequency at least `threshold`, truncated to `k_max` by
/// frequency (ties by smaller index).
pub fn select_by_frequency(freqs: &[f64], threshold: f64, k_max: usize, id: &str) -> Result<SelectedSupport> {
    let passing: Vec<usize> = (0..freqs.len()).filter(|&j| freqs[j] >= threshold).collect();
    let kept = top_by_score(&passing, |j| freqs[j], k_max);
    SelectedSupport::new(kept, freqs.len(), id, k_max)
}

pub fn stability_select(
    x_sel: &DMatrix<f64>,
    y_sel: &DVector<f64>,
    cfg: &StabilityConfig,
    k_max: usize,
) -> Result<SelectedSupport> {
    let freqs = stability_frequencies(x_sel, y_sel, cfg)?;
    select_by_frequency(&freqs, cfg.threshold, k_max, "lasso_stability")
}

/// Bound `q² / ((2π_thr − 1)(p − s))` on the expected number of false selections.
pub fn pfer_bound(q: usize, pi_thr: f64, p: usize, s: usize) -> Result<f64> {
    if !(pi_thr > 0.5 && pi_thr <= 1.0) {
        return Err(invalid(format!("pi_thr must lie in (0.5, 1], got {pi_thr}")));
    }
    if p <= s {
        return Err(invalid(format!("need p > s, got p={p}, s={s}")));
    }
    let q = q as f64;
    Ok(q * q / ((2.0 * pi_thr - 1.0) * (p - s) as f64))
}

/// Uniform random `k`-subset of `{0, …, p-1}` drawn from `seed` alone.
pub fn random_selector(p: usize, k: usize, seed: u64) -> Result<SelectedSupport> {
    if k == 0 {
        return Err(invalid("random selector needs k >= 1"));
    }
    if k > p {
        return Err(invalid(format!("cannot select k={k} of p={p} features")));
    }
    let coords = sample(&mut rng_from_seed(seed), p, k).into_vec();
    SelectedSupport::new(coords, p, "random", k)
}

/// Keeps the `k_max` highest-scoring coordinates (`scores` indexed by feature).
pub fn cap_support(s: &SelectedSupport, scores: &[f64], k_max: usize) -> Result<SelectedSupport> {
    if let Some(&j) = s.coords().iter().find(|&&j| j >= scores.len()) {
        return Err(Error::IndexOutOfRange { index: j, len: scores.len() });
    }
    let kept = top_by_score(s.coords(), |j| scores[j], k_max);
    SelectedSupport::new(kept, scores.len(), s.selector_id.clone(), k_max.max(1))
}

/// Selection rule used by the pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SelectorKind {
    /// Stability selection over half-sample lasso fits.
    LassoStability {
        #[serde(default = "default_subsamples")]
        n_subsamples: usize,
        #[serde(default = "default_threshold")]
        threshold: f64,
        #[serde(default)]
        q_cap: Option<usize>,
        #[serde(default)]
        lambda: Option<f64>,
    },
    /// Single lasso fit, capped by `|coef|`.
    Lasso {
        #[serde(default)]
        lambda: Option<f64>,
    },
    /// Uniform random subset of size `k`.
    Random { k: usize },
    /// A fixed, data-independent support (e.g. the true one).
    Fixed { coords: Vec<usize> },
}

fn default_subsamples() -> usize {
    DEFAULT_SUBSAMPLES
}

fn default_threshold() -> f64 {
    DEFAULT_THRESHOLD
}

impl Default for SelectorKind {
    fn default() -> Self {
        Self::stability()
    }
}

impl SelectorKind {
    pub fn stability() -> Self {
        Self::LassoStability {
            n_subsamples: DEFAULT_SUBSAMPLES,
            threshold: DEFAULT_THRESHOLD,
            q_cap: None,
            lambda: None,
        }
    }

    pub fn id(&self) -> &'static str {
        match self {
            Self::LassoStability { .. } => "lasso_stability",
            Self::Lasso { .. } => "lasso",
            Self::Random { .. } => "random",
            Self::Fixed { .. } => "fixed",
        }
    }

    /// Runs the selector on the selection half only.
    pub fn select(
        &self,
        x_sel: &DMatrix<f64>,
        y_sel: &DVector<f64>,
        seed: u64,
        k_max: usize,
    ) -> Result<SelectedSupport> {
        let p = x_sel.ncols();
        match self {
            Self::LassoStability { n_subsamples, threshold, q_cap, lambda } => {
                let cfg = StabilityConfig {
                    n_subsamples: *n_subsamples,
                    threshold: *threshold,
                    q_cap: *q_cap,
                    lambda: *lambda,
                    seed,
                };
                stability_select(x_sel, y_sel, &cfg, k_max)
            }
            Self::Lasso { lambda } => {
                let lambda = lambda.unwrap_or_else(|| default_lambda(y_sel, p));
                let coords = lasso_top(x_sel, y_sel, lambda, k_max)?;
                SelectedSupport::new(coords, p, self.id(), k_max)
            }
            Self::Random { k } => {
                let s = random_selector(p, *k, seed)?;
                if s.len() > k_max {
                    return Err(invalid(format!("random selector k={k} exceeds k_max={k_max}")));
                }
                SelectedSupport::new(s.coords().to_vec(), p, self.id(), k_max)
            }
            Self::Fixed { coords } => SelectedSupport::new(coords.clone(), p, self.id(), k_max.max(coords.len())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dgp::{simulate, DesignConfig};
    use proptest::prelude::*;

    fn design(n: usize, p: usize, s: usize, norm: f64, seed: u64) -> DesignConfig {
        DesignConfig { n, p, s, rho: 0.0, snr_beta_norm: norm, seed, ..DesignConfig::default() }
    }

    #[test]
    fn frequency_threshold_keeps_frequent_features() {
        let s = select_by_frequency(&[0.9, 0.4], 0.6, 5, "t").unwrap();
        assert_eq!(s.coords(), &[0]);
    }

    #[test]
    fn frequency_ties_prefer_smaller_index() {
        let s = select_by_frequency(&[0.7, 0.8, 0.7, 0.7], 0.6, 2, "t").unwrap();
        assert_eq!(s.coords(), &[0, 1]);
    }

    #[test]
    fn pfer_bound_values() {
        let b = pfer_bound(5, 0.6, 100, 5).unwrap();
        assert!((b - 25.0 / (0.2 * 95.0)).abs() < 1e-12);
        assert!((b - 1.3158).abs() < 1e-4);
        assert_eq!(pfer_bound(0, 0.6, 100, 5).unwrap(), 0.0);
        assert!(pfer_bound(5, 0.5, 100, 5).is_err());
        assert!(pfer_bound(5, 0.6, 5, 5).is_err());
        for q in 1..20 {
            for t in [0.55, 0.6, 0.7, 0.8, 0.9] {
                assert!(pfer_bound(q + 1, t, 100, 5).unwrap() > pfer_bound(q, t, 100, 5).unwrap());
                assert!(pfer_bound(q, t + 0.05, 100, 5).unwrap() < pfer_bound(q, t, 100, 5).unwrap());
            }
        }
    }

    #[test]
    fn random_selector_contract() {
        assert_eq!(random_selector(7, 7, 3).unwrap().coords(), &[0, 1, 2, 3, 4, 5, 6]);
        assert!(random_selector(7, 0, 3).is_err());
        assert!(random_selector(7, 8, 3).is_err());
        let a = random_selector(100, 10, 42).unwrap();
        assert_eq!(a, random_selector(100, 10, 42).unwrap());
        assert_eq!(a.len(), 10);
    }

    #[test]
    fn random_selector_is_uniform_over_features() {
        let mut hits = vec![0usize; 20];
        for seed in 0..4000 {
            for &j in random_selector(20, 5, seed).unwrap().coords() {
                hits[j] += 1;
            }
        }
        // Each feature appears with probability 1/4.
        let se = (0.25f64 * 0.75 / 4000.0).sqrt();
        for h in hits {
            assert!((h as f64 / 4000.0 - 0.25).abs() < 4.0 * se);
        }
    }

    #[test]
    fn cap_support_ranks_and_truncates() {
        let s = SelectedSupport::new((0..10).collect(), 10, "t", 10).unwrap();
        let scores: Vec<f64> = (0..10).map(|j| [3.0, 9.0, 1.0, 9.0, 5.0, 0.0, 2.0, 7.0, 4.0, 6.0][j]).collect();
        assert_eq!(cap_support(&s, &scores, 3).unwrap().coords(), &[1, 3, 7]);
        assert_eq!(cap_support(&s, &scores, 10).unwrap().coords(), s.coords());
        assert_eq!(default_k_max(50), 25);
        assert_eq!(default_k_max(51), 25);
    }

    #[test]
    fn default_lambda_matches_formula() {
        let y = DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0]);
        let sd = (5.0f64 / 3.0).sqrt();
        assert!((default_lambda(&y, 100) - sd * (2.0 * 100f64.ln() / 4.0).sqrt()).abs() < 1e-12);
        assert_eq!(default_q_cap(50, 500), 11);
        assert_eq!(default_q_cap(50, 5), 5);
    }

    #[test]
    fn stability_is_deterministic_and_bounded() {
        let (d, _) = simulate(&design(60, 40, 3, 4.0, 5)).unwrap();
        let cfg = StabilityConfig::new(11);
        let f1 = stability_frequencies(d.x(), d.y(), &cfg).unwrap();
        let f2 = stability_frequencies(d.x(), d.y(), &cfg).unwrap();
        assert_eq!(f1, f2);
        assert!(f1.iter().all(|f| (0.0..=1.0).contains(f)));
        let s = stability_select(d.x(), d.y(), &cfg, 4).unwrap();
        assert!(s.len() <= 4);
        assert!(stability_frequencies(&d.x().rows(0, 3).into(), &d.y().rows(0, 3).into(), &cfg).is_err());
    }

    #[test]
    fn stability_screens_strong_signals() {
        // |β0j| = 2 on 5 coordinates: norm 2√5.
        let reps = 200;
        let mut screened = 0;
        for r in 0..reps {
            let (d, truth) = simulate(&design(200, 50, 5, 2.0 * 5f64.sqrt(), 1000 + r)).unwrap();
            let s = stability_select(d.x(), d.y(), &StabilityConfig::new(r), 100).unwrap();
            if truth.support0().iter().all(|&j| s.contains(j)) {
                screened += 1;
            }
        }
        assert!(screened as f64 / reps as f64 >= 0.95, "screened {screened}/{reps}");
    }

    #[test]
    fn pure_noise_false_positives_within_pfer_bound() {
        let (n, p) = (100, 200);
        let reps = 200;
        let mut total = 0usize;
        for r in 0..reps {
            let (d, _) = simulate(&design(n, p, 0, 0.0, 5000 + r)).unwrap();
            total += stability_select(d.x(), d.y(), &StabilityConfig::new(r), 50).unwrap().len();
        }
        let bound = pfer_bound(default_q_cap(n, p), DEFAULT_THRESHOLD, p, 0).unwrap();
        assert!(total as f64 / reps as f64 <= bound, "mean {} > {bound}", total as f64 / reps as f64);
    }

    #[test]
    fn selector_kinds_dispatch() {
        let (d, _) = simulate(&design(40, 20, 2, 5.0, 9)).unwrap();
        let fixed = SelectorKind::Fixed { coords: vec![3, 1] }.select(d.x(), d.y(), 0, 10).unwrap();
        assert_eq!(fixed.coords(), &[1, 3]);
        let r = SelectorKind::Random { k: 4 }.select(d.x(), d.y(), 5, 10).unwrap();
        assert_eq!(r.len(), 4);
        assert!(SelectorKind::Random { k: 11 }.select(d.x(), d.y(), 5, 10).is_err());
        let l = SelectorKind::Lasso { lambda: None }.select(d.x(), d.y(), 0, 3).unwrap();
        assert!(l.len() <= 3);
        let json = serde_json::to_string(&SelectorKind::stability()).unwrap();
        assert_eq!(serde_json::from_str::<SelectorKind>(&json).unwrap(), SelectorKind::stability());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn stability_is_permutation_equivariant(seed in 0u64..1000, shift in 1usize..12) {
            let (d, _) = simulate(&design(40, 12, 3, 6.0, seed)).unwrap();
            let p = d.p();
            // Column k of the permuted design is original column perm[k].
            let perm: Vec<usize> = (0..p).map(|k| (k + shift) % p).collect();
            let xp = DMatrix::from_fn(d.n(), p, |i, k| d.x()[(i, perm[k])]);
            let cfg = StabilityConfig::new(seed);
            let f = stability_frequencies(d.x(), d.y(), &cfg).unwrap();
            let fp = stability_frequencies(&xp, d.y(), &cfg).unwrap();
            for k in 0..p {
                prop_assert!((fp[k] - f[perm[k]]).abs() < 1e-12);
            }
        }
    }
}
