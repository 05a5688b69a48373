//! Plausibility contours from scalar pivots.
//!
//! A contour pairs a statistic `θ ↦ T(θ)` with a reference law `F` for `T` at
//! the truth and reports `π(θ) = 1 − |2F(T(θ)) − 1|`. Upper-level sets
//! `{θ : π(θ) ≥ α}` are the confidence regions. A shrink factor `c` rescales
//! the statistic before the reference law is applied (`c = 1` is the valid
//! procedure; other values are for benchmarking only).

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::Interval;
use crate::numerics::{f_cdf, normal_cdf, normal_quantile, t_cdf, t_quantile, Ecdf};

/// Law of the statistic at the true parameter.
#[derive(Debug, Clone, PartialEq)]
pub enum Reference {
    StudentT {
        nu: f64,
    },
    /// Nonnegative `F_{q,ν}` statistic; the contour is its upper tail `1 − F(T)`.
    F {
        q: f64,
        nu: f64,
    },
    StandardNormal,
    /// Plug-in law, evaluated with the mid-rank convention.
    Empirical(Arc<Ecdf>),
}

impl Reference {
    pub fn cdf(&self, t: f64) -> Result<f64> {
        match self {
            Self::StudentT { nu } => t_cdf(t, *nu),
            Self::F { q, nu } => f_cdf(t, *q, *nu),
            Self::StandardNormal => Ok(normal_cdf(t)),
            Self::Empirical(e) => Ok(e.eval_midrank(t)),
        }
    }

    /// `π` for a statistic value `t`.
    pub fn plausibility(&self, t: f64) -> Result<f64> {
        if t.is_nan() {
            return Err(Error::NonFinite("pivot statistic".into()));
        }
        let u = self.cdf(t)?;
        Ok(match self {
            Self::F { .. } => (1.0 - u).clamp(0.0, 1.0),
            _ => tent(u),
        })
    }

    fn validate(&self) -> Result<()> {
        let ok = match self {
            Self::StudentT { nu } => *nu > 0.0,
            Self::F { q, nu } => *q > 0.0 && *nu > 0.0,
            Self::StandardNormal => true,
            Self::Empirical(e) => !e.is_empty(),
        };
        if ok {
            Ok(())
        } else {
            Err(invalid(format!("invalid reference law {self:?}")))
        }
    }
}

/// `1 − |2u − 1|`.
pub fn tent(u: f64) -> f64 {
    (1.0 - (2.0 * u - 1.0).abs()).clamp(0.0, 1.0)
}

pub type StatisticFn = Arc<dyn Fn(f64) -> Result<f64> + Send + Sync>;

/// The statistic `θ ↦ T(θ)`.
#[derive(Clone)]
pub enum Statistic {
    /// `T(θ) = (estimate − θ) / scale`.
    LocationScale { estimate: f64, scale: f64 },
    /// Arbitrary statistic; `center` and `scale` locate its mode for searches.
    Custom { f: StatisticFn, center: f64, scale: f64 },
}

impl fmt::Debug for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::LocationScale { estimate, scale } => {
                f.debug_struct("LocationScale").field("estimate", estimate).field("scale", scale).finish()
            }
            Self::Custom { center, scale, .. } => {
                f.debug_struct("Custom").field("center", center).field("scale", scale).finish_non_exhaustive()
            }
        }
    }
}

impl Statistic {
    pub fn custom(f: impl Fn(f64) -> Result<f64> + Send + Sync + 'static, center: f64, scale: f64) -> Self {
        Self::Custom { f: Arc::new(f), center, scale }
    }

    fn center(&self) -> f64 {
        match self {
            Self::LocationScale { estimate, .. } => *estimate,
            Self::Custom { center, .. } => *center,
        }
    }

    fn scale(&self) -> f64 {
        match self {
            Self::LocationScale { scale, .. } | Self::Custom { scale, .. } => *scale,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PivotSource {
    pub reference: Reference,
    pub statistic: Statistic,
}

impl PivotSource {
    pub fn location_scale(reference: Reference, estimate: f64, scale: f64) -> Self {
        Self { reference, statistic: Statistic::LocationScale { estimate, scale } }
    }
}

/// Labels attached to a contour.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ContourMeta {
    pub coordinate: Option<usize>,
    pub split: Option<usize>,
    pub method: String,
}

#[derive(Debug, Clone)]
pub struct PlausibilityContour {
    pub source: PivotSource,
    /// Statistic multiplier `c`.
    pub shrink: f64,
    pub meta: ContourMeta,
}

impl PlausibilityContour {
    pub fn new(source: PivotSource, meta: ContourMeta) -> Result<Self> {
        Self::with_shrink(source, 1.0, meta)
    }

    pub fn with_shrink(source: PivotSource, shrink: f64, meta: ContourMeta) -> Result<Self> {
        source.reference.validate()?;
        if !(shrink > 0.0 && shrink.is_finite()) {
            return Err(invalid(format!("shrink factor must be positive, got {shrink}")));
        }
        let scale = source.statistic.scale();
        if !(scale >= 0.0 && scale.is_finite() && source.statistic.center().is_finite()) {
            return Err(Error::NonFinite("contour location or scale".into()));
        }
        Ok(Self { source, shrink, meta })
    }

    /// The scale-zero location-scale contour is the indicator of the estimate.
    fn degenerate_point(&self) -> Option<f64> {
        match &self.source.statistic {
            Statistic::LocationScale { estimate, scale } if *scale == 0.0 => Some(*estimate),
            _ => None,
        }
    }

    /// Shrunk statistic value fed to the reference law.
    pub fn statistic(&self, theta: f64) -> Result<f64> {
        self.statistic_with(theta, self.shrink)
    }

    fn statistic_with(&self, theta: f64, c: f64) -> Result<f64> {
        let raw = match &self.source.statistic {
            Statistic::LocationScale { estimate, scale } => (estimate - theta) / scale,
            Statistic::Custom { f, .. } => f(theta)?,
        };
        Ok(match (&self.source.reference, &self.source.statistic) {
            (Reference::F { .. }, Statistic::LocationScale { .. }) => (c * raw).powi(2),
            (Reference::F { .. }, Statistic::Custom { .. }) => c * c * raw,
            _ => c * raw,
        })
    }

    pub fn eval(&self, theta: f64) -> Result<f64> {
        self.eval_shrunk(theta, self.shrink)
    }

    /// `π(θ)` with the statistic multiplied by `c` instead of the stored factor.
    pub fn eval_shrunk(&self, theta: f64, c: f64) -> Result<f64> {
        if let Some(point) = self.degenerate_point() {
            return Ok(if theta == point { 1.0 } else { 0.0 });
        }
        self.source.reference.plausibility(self.statistic_with(theta, c)?)
    }

    /// `{θ : π(θ) ≥ α}`, or `None` when the contour never reaches `α`.
    pub fn level_set(&self, alpha: f64) -> Result<Option<Interval>> {
        level_set_interval(self, alpha)
    }
}

/// `π(θ)` for an unshrunk source.
pub fn contour_from_pivot(src: &PivotSource, theta: f64) -> Result<f64> {
    PlausibilityContour::new(src.clone(), ContourMeta::default())?.eval(theta)
}

/// Upper-level set of a unimodal contour.
///
/// Exact symmetric references with a location-scale statistic use the
/// closed form `estimate ± q_{1−α/2} · scale / c`; everything else is
/// located numerically around the mode.
pub fn level_set_interval(contour: &PlausibilityContour, alpha: f64) -> Result<Option<Interval>> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if let Some(point) = contour.degenerate_point() {
        return Ok(Some(Interval::point(point)));
    }
    if let Statistic::LocationScale { estimate, scale } = contour.source.statistic {
        let quantile = match contour.source.reference {
            Reference::StudentT { nu } => Some(t_quantile(1.0 - alpha / 2.0, nu)?),
            Reference::StandardNormal => Some(normal_quantile(1.0 - alpha / 2.0)?),
            _ => None,
        };
        if let Some(q) = quantile {
            let half = q * scale / contour.shrink;
            return Ok(Some(Interval::new(estimate - half, estimate + half)));
        }
    }
    numeric_level_set(contour, alpha)
}

const GOLDEN: f64 = 0.618_033_988_749_894_8;

fn numeric_level_set(contour: &PlausibilityContour, alpha: f64) -> Result<Option<Interval>> {
    let center = contour.source.statistic.center();
    let scale = contour.source.statistic.scale().max(f64::MIN_POSITIVE);
    // Coarse grid over center ± 8·scale, then golden-section refinement.
    let step = scale / 8.0;
    let mut best = (center, contour.eval(center)?);
    let mut best_k = 0i32;
    for k in -64..=64 {
        let th = center + k as f64 * step;
        let v = contour.eval(th)?;
        if v > best.1 {
            best = (th, v);
            best_k = k;
        }
    }
    let (mut a, mut b) = (center + (best_k - 1) as f64 * step, center + (best_k + 1) as f64 * step);
    for _ in 0..80 {
        let m1 = b - GOLDEN * (b - a);
        let m2 = a + GOLDEN * (b - a);
        let (v1, v2) = (contour.eval(m1)?, contour.eval(m2)?);
        if v1 > best.1 {
            best = (m1, v1);
        }
        if v2 > best.1 {
            best = (m2, v2);
        }
        if v1 >= v2 {
            b = m2;
        } else {
            a = m1;
        }
    }
    let (mode, peak) = best;
    if peak < alpha {
        return Ok(None);
    }
    let hi = boundary(contour, alpha, mode, scale, 1.0)?;
    let lo = boundary(contour, alpha, mode, scale, -1.0)?;
    Ok(Some(Interval::new(lo, hi)))
}

/// Last point on the ray `mode + dir · t` where `π ≥ α`; infinite if never left.
fn boundary(contour: &PlausibilityContour, alpha: f64, mode: f64, scale: f64, dir: f64) -> Result<f64> {
    let mut inside = 0.0;
    let mut out = scale;
    loop {
        if contour.eval(mode + dir * out)? < alpha {
            break;
        }
        inside = out;
        out *= 2.0;
        if out > 1e12 * scale.max(1.0) {
            return Ok(dir * f64::INFINITY);
        }
    }
    let tol = 1e-10 * scale;
    while out - inside > tol {
        let mid = 0.5 * (inside + out);
        if mid <= inside || mid >= out {
            break;
        }
        if contour.eval(mode + dir * mid)? >= alpha {
            inside = mid;
        } else {
            out = mid;
        }
    }
    Ok(mode + dir * inside)
}

/// `π` at each grid point, in grid order.
pub fn contour_grid(contour: &PlausibilityContour, grid: &[f64]) -> Result<Vec<f64>> {
    grid.par_iter().map(|&th| contour.eval(th)).collect()
}

/// Fraction of null plausibilities above `1 − α`.
pub fn false_confidence_rate(null_values: &[f64], alpha: f64) -> Result<f64> {
    if null_values.is_empty() {
        return Err(invalid("false-confidence rate needs at least one value"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let hits = null_values.iter().filter(|&&v| v > 1.0 - alpha).count();
    Ok(hits as f64 / null_values.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dgp::{simulate, DesignConfig};
    use crate::model::SelectedSupport;
    use crate::numerics::{binomial_se, ks_distance, ks_distance_to, t_cdf};
    use crate::refit::{classical_t_interval, ols_refit};
    use crate::rng::rng_from_seed;
    use nalgebra::{DMatrix, DVector};
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::{StandardNormal, StudentT};

    fn t_contour(est: f64, se: f64, nu: f64) -> PlausibilityContour {
        PlausibilityContour::new(
            PivotSource::location_scale(Reference::StudentT { nu }, est, se),
            ContourMeta::default(),
        )
        .unwrap()
    }

    #[test]
    fn tent_values() {
        assert_eq!(tent(0.5), 1.0);
        assert!((tent(0.975) - 0.05).abs() < 1e-12);
        assert_eq!(tent(0.0), 0.0);
        assert_eq!(tent(1.0), 0.0);
    }

    #[test]
    fn contour_peaks_at_estimate() {
        let src = PivotSource::location_scale(Reference::StudentT { nu: 5.0 }, 1.5, 0.3);
        assert_eq!(contour_from_pivot(&src, 1.5).unwrap(), 1.0);
        assert!(contour_from_pivot(&src, 3.0).unwrap() < 0.01);
    }

    #[test]
    fn tent_preserves_uniformity_on_a_grid() {
        let m = 10_000;
        let image: Vec<f64> = (0..=m).map(|i| tent(i as f64 / m as f64)).collect();
        assert!(ks_distance(&image).unwrap() <= 2e-4);
    }

    #[test]
    fn f_reference_matches_t_contour_for_one_contrast() {
        let t = t_contour(0.7, 0.2, 9.0);
        let f = PlausibilityContour::new(
            PivotSource::location_scale(Reference::F { q: 1.0, nu: 9.0 }, 0.7, 0.2),
            ContourMeta::default(),
        )
        .unwrap();
        for k in -50..=50 {
            let th = 0.7 + k as f64 * 0.02;
            assert!((t.eval(th).unwrap() - f.eval(th).unwrap()).abs() < 1e-10);
        }
        let (a, b) = (t.level_set(0.1).unwrap().unwrap(), f.level_set(0.1).unwrap().unwrap());
        assert!((a.lo - b.lo).abs() < 1e-8 && (a.hi - b.hi).abs() < 1e-8);
    }

    #[test]
    fn single_mean_contour_gives_student_interval() {
        let y = [2.3, 1.1, 4.0, 3.3, 2.8, 0.9, 3.7];
        let n = y.len() as f64;
        let mean = y.iter().sum::<f64>() / n;
        let sd = (y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        let fit = ols_refit(
            &DMatrix::from_element(y.len(), 1, 1.0),
            &DVector::from_column_slice(&y),
            &SelectedSupport::new(vec![0], 1, "mean", 1).unwrap(),
        )
        .unwrap();
        let c = t_contour(fit.beta_hat[0], fit.std_error(0), fit.dof as f64);
        for alpha in [0.01, 0.05, 0.1, 0.5] {
            let iv = c.level_set(alpha).unwrap().unwrap();
            let q = t_quantile(1.0 - alpha / 2.0, n - 1.0).unwrap();
            assert!((iv.lo - (mean - q * sd / n.sqrt())).abs() < 1e-9);
            assert!((iv.hi - (mean + q * sd / n.sqrt())).abs() < 1e-9);
        }
    }

    #[test]
    fn numeric_extraction_agrees_with_closed_form() {
        let (est, se, nu) = (1.2, 0.4, 12.0);
        let exact = t_contour(est, se, nu);
        let custom = PlausibilityContour::new(
            PivotSource {
                reference: Reference::StudentT { nu },
                statistic: Statistic::custom(move |th| Ok((est - th) / se), est + 0.3, se),
            },
            ContourMeta::default(),
        )
        .unwrap();
        for alpha in [0.01, 0.05, 0.1, 0.5, 0.9] {
            let a = exact.level_set(alpha).unwrap().unwrap();
            let b = custom.level_set(alpha).unwrap().unwrap();
            assert!((a.lo - b.lo).abs() < 1e-8 && (a.hi - b.hi).abs() < 1e-8, "{a:?} {b:?}");
        }
    }

    #[test]
    fn shrink_scales_interval_width() {
        let c1 = t_contour(0.0, 1.0, 20.0);
        let c2 = PlausibilityContour::with_shrink(c1.source.clone(), 2.0, ContourMeta::default()).unwrap();
        let (a, b) = (c1.level_set(0.1).unwrap().unwrap(), c2.level_set(0.1).unwrap().unwrap());
        assert!((a.width() / b.width() - 2.0).abs() < 1e-12);
        assert!(PlausibilityContour::with_shrink(c1.source.clone(), 0.0, ContourMeta::default()).is_err());
    }

    #[test]
    fn bounded_statistic_yields_empty_or_unbounded_sets() {
        let never = PlausibilityContour::new(
            PivotSource { reference: Reference::StandardNormal, statistic: Statistic::custom(|_| Ok(5.0), 0.0, 1.0) },
            ContourMeta::default(),
        )
        .unwrap();
        assert_eq!(never.level_set(0.05).unwrap(), None);
        let flat = PlausibilityContour::new(
            PivotSource {
                reference: Reference::StandardNormal,
                statistic: Statistic::custom(|th: f64| Ok(th.tanh()), 0.0, 1.0),
            },
            ContourMeta::default(),
        )
        .unwrap();
        let iv = flat.level_set(0.3).unwrap().unwrap();
        assert!(flat.level_set(0.5).unwrap().unwrap().is_finite());
        assert!(!iv.is_finite());
    }

    #[test]
    fn zero_scale_contour_is_an_indicator() {
        let c = t_contour(3.0, 0.0, 4.0);
        assert_eq!(c.eval(3.0).unwrap(), 1.0);
        assert_eq!(c.eval(3.0 + 1e-9).unwrap(), 0.0);
        assert_eq!(c.level_set(0.05).unwrap(), Some(Interval::point(3.0)));
    }

    #[test]
    fn grid_is_symmetric_and_monotone() {
        let c = t_contour(0.8, 0.25, 7.0);
        let grid: Vec<f64> = (-200..=200).map(|k| 0.8 + k as f64 * 0.01).collect();
        let v = contour_grid(&c, &grid).unwrap();
        assert_eq!(v[200], 1.0);
        for k in 0..200 {
            assert!((v[200 - k] - v[200 + k]).abs() < 1e-12);
            assert!(v[200 + k + 1] <= v[200 + k]);
            assert!(v[200 - k - 1] <= v[200 - k]);
        }
    }

    #[test]
    fn false_confidence_rate_contract() {
        assert_eq!(false_confidence_rate(&[0.0; 10], 0.1).unwrap(), 0.0);
        assert!(false_confidence_rate(&[], 0.1).is_err());
        let mut rng = rng_from_seed(3);
        let u: Vec<f64> = (0..20_000).map(|_| rng.random::<f64>()).collect();
        let rate = false_confidence_rate(&u, 0.1).unwrap();
        assert!((rate - 0.1).abs() < 4.0 * binomial_se(0.1, 20_000));
    }

    #[test]
    fn null_plausibility_is_uniform_for_gaussian_refits() {
        let m = 2000;
        let mut pis = Vec::with_capacity(m);
        for r in 0..m as u64 {
            let cfg = DesignConfig { n: 30, p: 4, s: 2, snr_beta_norm: 1.0, seed: r, ..DesignConfig::default() };
            let (d, truth) = simulate(&cfg).unwrap();
            let s = SelectedSupport::new(vec![0, 1, 2, 3], 4, "all", 4).unwrap();
            let fit = ols_refit(d.x(), d.y(), &s).unwrap();
            let c = t_contour(fit.beta_hat[0], fit.std_error(0), fit.dof as f64);
            pis.push(c.eval(truth.beta0[0]).unwrap());
        }
        assert!(ks_distance(&pis).unwrap() < 0.03);
    }

    /// Plug-in law from draws of the exact one: the null-π CDF sits within
    /// `2·KS(F̂, F)` of uniform, up to Monte Carlo error.
    #[test]
    fn empirical_reference_is_approximately_valid() {
        let nu = 6.0;
        let mut rng = rng_from_seed(91);
        let law = StudentT::new(nu).unwrap();
        let draws: Vec<f64> = (0..400).map(|_| rng.sample(law)).collect();
        let delta = ks_distance_to(&draws, |t| t_cdf(t, nu).unwrap()).unwrap();
        let ecdf = Arc::new(Ecdf::new(draws).unwrap());
        let m = 5000;
        let pis: Vec<f64> = (0..m)
            .map(|_| {
                let t: f64 = rng.sample(law);
                Reference::Empirical(ecdf.clone()).plausibility(t).unwrap()
            })
            .collect();
        let mc = 1.63 / (m as f64).sqrt();
        assert!(ks_distance(&pis).unwrap() <= 2.0 * delta + mc);
    }

    #[test]
    fn empirical_level_set_brackets_the_mode() {
        let mut rng = rng_from_seed(5);
        let draws: Vec<f64> = (0..999).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let c = PlausibilityContour::new(
            PivotSource::location_scale(Reference::Empirical(Arc::new(Ecdf::new(draws).unwrap())), 2.0, 0.5),
            ContourMeta::default(),
        )
        .unwrap();
        let iv = c.level_set(0.1).unwrap().unwrap();
        assert!(iv.contains(2.0));
        // Normal reference gives 2 ± 1.645·0.5.
        assert!((iv.width() - 2.0 * 1.645 * 0.5).abs() < 0.15);
        assert!(c.eval(iv.lo).unwrap() >= 0.1 && c.eval(iv.hi).unwrap() >= 0.1);
        assert!(c.eval(iv.hi + 0.01).unwrap() < 0.1);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn level_sets_match_classical_and_are_nested(seed in 0u64..100_000) {
            let cfg = DesignConfig { n: 25, p: 6, s: 3, rho: 0.3, snr_beta_norm: 2.0, seed, ..DesignConfig::default() };
            let (d, _) = simulate(&cfg).unwrap();
            let s = SelectedSupport::new(vec![0, 2, 5], 6, "t", 3).unwrap();
            let fit = ols_refit(d.x(), d.y(), &s).unwrap();
            let c = t_contour(fit.beta_hat[1], fit.std_error(1), fit.dof as f64);
            let mut prev: Option<Interval> = None;
            for alpha in [0.01, 0.05, 0.1, 0.5] {
                let a = c.level_set(alpha).unwrap().unwrap();
                let b = classical_t_interval(&fit, 2, alpha).unwrap();
                prop_assert!((a.lo - b.lo).abs() < 1e-9 && (a.hi - b.hi).abs() < 1e-9);
                if let Some(wider) = prev {
                    prop_assert!(a.is_subset_of(&wider));
                }
                prev = Some(a);
            }
        }

        #[test]
        fn contour_in_unit_interval(est in -5.0f64..5.0, se in 0.01f64..3.0, th in -20.0f64..20.0, nu in 1.0f64..100.0) {
            let v = t_contour(est, se, nu).eval(th).unwrap();
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }
}
