//! Reference distributions for pivots: Student-t, F, chi-square and standard
//! normal CDFs and quantiles, empirical CDFs, and Kolmogorov distances.
//!
//! The regularized incomplete beta is evaluated by a modified Lentz continued
//! fraction on the convergent side of `(a + 1) / (a + b + 2)`, with the
//! complement `1 - x` passed explicitly so that `t²/(ν + t²)` and `ν/(ν + t²)`
//! never lose digits to cancellation. `ln B(a, b)` uses Stirling remainders for
//! large arguments, which keeps the prefactor accurate for ν up to 1e6 and beyond.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use statrs::function::gamma::{gamma_lr, ln_gamma};

use crate::error::{invalid, Error, Result};

const CF_EPS: f64 = 1e-15;
const CF_MAX_ITER: usize = 50_000;
const TINY: f64 = 1e-300;
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Remainder of Stirling's series, `ln Γ(x) - [(x - ½) ln x - x + ln √(2π)]`, for x ≥ 10.
fn stirling_remainder(x: f64) -> f64 {
    const COEF: [f64; 7] =
        [1.0 / 12.0, -1.0 / 360.0, 1.0 / 1260.0, -1.0 / 1680.0, 1.0 / 1188.0, -691.0 / 360_360.0, 1.0 / 156.0];
    let x2 = 1.0 / (x * x);
    let mut acc = 0.0;
    for c in COEF.iter().rev() {
        acc = acc * x2 + c;
    }
    acc / x
}

/// `ln B(a, b)`, stable when one or both arguments are large.
pub fn ln_beta(a: f64, b: f64) -> f64 {
    let (p, q) = if a < b { (a, b) } else { (b, a) };
    if p >= 10.0 {
        let corr = stirling_remainder(p) + stirling_remainder(q) - stirling_remainder(p + q);
        -0.5 * q.ln() + LN_SQRT_2PI + corr + (p - 0.5) * (p / (p + q)).ln() + q * (-p / (p + q)).ln_1p()
    } else if q >= 10.0 {
        let corr = stirling_remainder(q) - stirling_remainder(p + q);
        ln_gamma(p) + corr + p - p * (p + q).ln() + (q - 0.5) * (-p / (p + q)).ln_1p()
    } else {
        ln_gamma(p) + ln_gamma(q) - ln_gamma(p + q)
    }
}

fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < CF_EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta `I_x(a, b)` with `y = 1 - x` supplied by the caller.
fn beta_reg_complement(a: f64, b: f64, x: f64, y: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if y <= 0.0 {
        return 1.0;
    }
    let ln_front = a * x.ln() + b * y.ln() - ln_beta(a, b);
    if x < (a + 1.0) / (a + b + 2.0) {
        (ln_front.exp() * beta_cf(a, b, x) / a).clamp(0.0, 1.0)
    } else {
        (1.0 - ln_front.exp() * beta_cf(b, a, y) / b).clamp(0.0, 1.0)
    }
}

/// Regularized incomplete beta function `I_x(a, b)`.
pub fn beta_reg(a: f64, b: f64, x: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) {
        return Err(invalid(format!("beta parameters must be positive (a={a}, b={b})")));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(invalid(format!("incomplete beta argument {x} outside [0, 1]")));
    }
    Ok(beta_reg_complement(a, b, x, 1.0 - x))
}

fn check_dof(nu: f64, name: &str) -> Result<()> {
    if nu > 0.0 && !nu.is_nan() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive, got {nu}")))
    }
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x - LN_SQRT_2PI).exp()
}

/// Student-t CDF with `nu` degrees of freedom (infinite `nu` gives the normal).
pub fn t_cdf(x: f64, nu: f64) -> Result<f64> {
    check_dof(nu, "degrees of freedom")?;
    if x.is_nan() {
        return Err(Error::NonFinite("t_cdf argument".into()));
    }
    if nu.is_infinite() {
        return Ok(normal_cdf(x));
    }
    if x.is_infinite() {
        return Ok(if x > 0.0 { 1.0 } else { 0.0 });
    }
    let x2 = x * x;
    let denom = nu + x2;
    // Tail mass P(|T| > |x|) = I_{ν/(ν+x²)}(ν/2, ½).
    let tail = beta_reg_complement(0.5 * nu, 0.5, nu / denom, x2 / denom);
    Ok(if x > 0.0 { 1.0 - 0.5 * tail } else { 0.5 * tail })
}

/// Student-t density.
pub fn t_pdf(x: f64, nu: f64) -> f64 {
    if nu.is_infinite() {
        return normal_pdf(x);
    }
    let ln_norm = -0.5 * nu.ln() - ln_beta(0.5 * nu, 0.5);
    (ln_norm - 0.5 * (nu + 1.0) * (x * x / nu).ln_1p()).exp()
}

/// F CDF with `q` numerator and `nu` denominator degrees of freedom.
pub fn f_cdf(x: f64, q: f64, nu: f64) -> Result<f64> {
    check_dof(q, "numerator degrees of freedom")?;
    check_dof(nu, "denominator degrees of freedom")?;
    if x.is_nan() || x < 0.0 {
        return Err(invalid(format!("F statistic must be nonnegative, got {x}")));
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    let qx = q * x;
    let denom = qx + nu;
    Ok(beta_reg_complement(0.5 * q, 0.5 * nu, qx / denom, nu / denom))
}

/// Chi-square CDF with `k` degrees of freedom.
pub fn chi2_cdf(x: f64, k: f64) -> Result<f64> {
    check_dof(k, "degrees of freedom")?;
    if x.is_nan() || x < 0.0 {
        return Err(invalid(format!("chi-square statistic must be nonnegative, got {x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    Ok(gamma_lr(0.5 * k, 0.5 * x))
}

fn check_prob(u: f64) -> Result<()> {
    if u > 0.0 && u < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("probability {u} outside (0, 1)")))
    }
}

/// Inverts a continuous increasing CDF by bracketing, bisection, then Newton polish.
fn invert_cdf(u: f64, cdf: impl Fn(f64) -> f64, pdf: impl Fn(f64) -> f64, start: f64) -> f64 {
    let (mut lo, mut hi) = (start - 1.0, start + 1.0);
    let mut step = 1.0;
    while cdf(lo) > u {
        hi = lo;
        step *= 2.0;
        lo -= step;
    }
    step = 1.0;
    while cdf(hi) < u {
        lo = hi;
        step *= 2.0;
        hi += step;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if cdf(mid) < u {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-10 * (1.0 + mid.abs()) {
            break;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..4 {
        let f = cdf(x) - u;
        let d = pdf(x);
        if d <= 0.0 || !d.is_finite() {
            break;
        }
        let next = x - f / d;
        if !(next > lo - (hi - lo) && next < hi + (hi - lo)) {
            break;
        }
        x = next;
    }
    x
}

/// Student-t quantile.
pub fn t_quantile(u: f64, nu: f64) -> Result<f64> {
    check_prob(u)?;
    check_dof(nu, "degrees of freedom")?;
    if u == 0.5 {
        return Ok(0.0);
    }
    if nu.is_infinite() {
        return normal_quantile(u);
    }
    let start = normal_quantile(u)?;
    Ok(invert_cdf(u, |x| t_cdf(x, nu).expect("validated dof"), |x| t_pdf(x, nu), start))
}

/// Standard normal quantile.
pub fn normal_quantile(u: f64) -> Result<f64> {
    check_prob(u)?;
    if u == 0.5 {
        return Ok(0.0);
    }
    // Acklam-style start from erfc inverse, then polish on the CDF.
    let start = -std::f64::consts::SQRT_2 * statrs::function::erf::erfc_inv(2.0 * u);
    Ok(invert_cdf(u, normal_cdf, normal_pdf, start))
}

/// Empirical CDF over a sorted sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ecdf {
    sorted: Vec<f64>,
}

impl Ecdf {
    pub fn new(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(invalid("empirical CDF needs at least one sample"));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("empirical CDF samples".into()));
        }
        samples.sort_by(f64::total_cmp);
        Ok(Self { sorted: samples })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn samples(&self) -> &[f64] {
        &self.sorted
    }

    fn count_le(&self, t: f64) -> usize {
        self.sorted.partition_point(|&v| v <= t)
    }

    fn count_lt(&self, t: f64) -> usize {
        self.sorted.partition_point(|&v| v < t)
    }

    /// Right-continuous value: fraction of samples `<= t`.
    pub fn eval(&self, t: f64) -> f64 {
        self.count_le(t) as f64 / self.len() as f64
    }

    /// Mid-rank value `(#{< t} + ½ #{= t}) / m`.
    pub fn eval_midrank(&self, t: f64) -> f64 {
        let lt = self.count_lt(t);
        let le = self.count_le(t);
        (lt as f64 + 0.5 * (le - lt) as f64) / self.len() as f64
    }

    /// True when every sample is identical (e.g. zero bootstrap residuals).
    pub fn is_degenerate(&self) -> bool {
        self.sorted.first() == self.sorted.last()
    }
}

pub fn ecdf_eval(e: &Ecdf, t: f64) -> f64 {
    e.eval(t)
}

/// Kolmogorov distance between the sample's empirical CDF and a continuous CDF.
pub fn ks_distance_to(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    let (plus, minus) = ks_one_sided(samples, cdf)?;
    Ok(plus.max(minus))
}

/// One-sided Kolmogorov statistics `(sup(F̂ - F), sup(F - F̂))`.
pub fn ks_one_sided(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<(f64, f64)> {
    if samples.is_empty() {
        return Err(invalid("Kolmogorov distance of an empty sample"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len() as f64;
    let mut plus: f64 = 0.0;
    let mut minus: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        plus = plus.max((i + 1) as f64 / m - f);
        minus = minus.max(f - i as f64 / m);
    }
    Ok((plus, minus))
}

fn uniform_cdf(u: f64) -> f64 {
    u.clamp(0.0, 1.0)
}

/// Kolmogorov distance between the sample and Unif(0, 1).
pub fn ks_distance(samples: &[f64]) -> Result<f64> {
    ks_distance_to(samples, uniform_cdf)
}

/// `sup_u (F̂(u) - u)`: how far the sample sits below the uniform (anti-conservative mass).
pub fn uniform_excess(samples: &[f64]) -> Result<f64> {
    Ok(ks_one_sided(samples, uniform_cdf)?.0)
}

/// Binomial standard error `sqrt(p(1-p)/n)` for Monte Carlo bands.
pub fn binomial_se(p: f64, n: usize) -> f64 {
    if n == 0 {
        return f64::NAN;
    }
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Cauchy CDF, the ν = 1 closed form kept for cross-checks.
pub fn cauchy_cdf(x: f64) -> f64 {
    0.5 + x.atan() / PI
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Composite Simpson integral of the t density over [0, x]: independent of the beta path.
    fn t_cdf_by_quadrature(x: f64, nu: f64) -> f64 {
        let n = 20_000;
        let h = x / n as f64;
        let mut s = t_pdf(0.0, nu) + t_pdf(x, nu);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * t_pdf(i as f64 * h, nu);
        }
        0.5 + s * h / 3.0
    }

    #[test]
    fn t_cdf_symmetry_and_cauchy() {
        for nu in [0.5, 1.0, 3.0, 30.0, 1e6] {
            assert_eq!(t_cdf(0.0, nu).unwrap(), 0.5);
        }
        assert!((t_cdf(1.0, 1.0).unwrap() - 0.75).abs() < 1e-14);
        for x in [-20.0, -3.0, -0.2, 0.7, 5.0, 100.0] {
            assert!((t_cdf(x, 1.0).unwrap() - cauchy_cdf(x)).abs() < 1e-13);
        }
    }

    #[test]
    fn t_cdf_matches_quadrature() {
        // The density integral is the oracle: 0.95 at the tabulated 10-df critical value.
        let oracle = t_cdf_by_quadrature(1.812461, 10.0);
        assert!((oracle - 0.95).abs() < 1e-6);
        assert!((t_cdf(1.812461, 10.0).unwrap() - oracle).abs() < 1e-10);
        for &(x, nu) in &[(0.3, 2.5), (1.7, 7.0), (2.4, 50.0), (0.01, 1e6), (3.0, 1e6)] {
            let q = t_cdf_by_quadrature(x, nu);
            assert!((t_cdf(x, nu).unwrap() - q).abs() < 1e-10, "x={x} nu={nu}");
        }
    }

    #[test]
    fn t_cdf_large_nu_approaches_normal() {
        for x in [-2.0, -0.5, 0.1, 1.96] {
            let diff = (t_cdf(x, 1e9).unwrap() - normal_cdf(x)).abs();
            assert!(diff < 1e-8, "x={x} diff={diff}");
        }
    }

    #[test]
    fn quantile_round_trip() {
        assert_eq!(t_quantile(0.5, 7.0).unwrap(), 0.0);
        assert!((t_quantile(0.75, 1.0).unwrap() - 1.0).abs() < 1e-12);
        for nu in [1.0, 5.0, 30.0, 1000.0] {
            for k in 1..100 {
                let u = k as f64 / 100.0;
                let q = t_quantile(u, nu).unwrap();
                assert!((t_cdf(q, nu).unwrap() - u).abs() < 1e-9, "u={u} nu={nu}");
            }
        }
    }

    #[test]
    fn quantile_rejects_bad_probability() {
        assert!(t_quantile(0.0, 3.0).is_err());
        assert!(t_quantile(1.0, 3.0).is_err());
        assert!(t_quantile(0.3, -1.0).is_err());
        assert!(t_cdf(0.3, 0.0).is_err());
    }

    #[test]
    fn f_cdf_identities() {
        assert_eq!(f_cdf(0.0, 3.0, 4.0).unwrap(), 0.0);
        assert!((f_cdf(1.0, 2.0, 2.0).unwrap() - 0.5).abs() < 1e-14);
        for x in [0.1_f64, 0.9, 3.0, 17.0] {
            assert!((f_cdf(x, 2.0, 2.0).unwrap() - x / (1.0 + x)).abs() < 1e-13);
        }
        for nu in [1.0, 4.0, 33.0, 1e5] {
            for t in [0.05_f64, 0.8, 2.2, 9.0] {
                let lhs = f_cdf(t * t, 1.0, nu).unwrap();
                let rhs = 2.0 * t_cdf(t, nu).unwrap() - 1.0;
                assert!((lhs - rhs).abs() < 1e-9, "t={t} nu={nu}");
            }
        }
        assert!(f_cdf(-1.0, 1.0, 1.0).is_err());
        assert!(f_cdf(1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn chi2_identities() {
        assert_eq!(chi2_cdf(0.0, 3.0).unwrap(), 0.0);
        for x in [0.01_f64, 0.5, 2.0, 11.0, 40.0] {
            assert!((chi2_cdf(x, 2.0).unwrap() - (1.0 - (-x / 2.0).exp())).abs() < 1e-10);
        }
        // (Φ⁻¹(0.975))² is the 95% point of χ²₁.
        let z = normal_quantile(0.975).unwrap();
        assert!((chi2_cdf(z * z, 1.0).unwrap() - 0.95).abs() < 1e-10);
        assert!((chi2_cdf(3.841459, 1.0).unwrap() - 0.95).abs() < 1e-6);
    }

    #[test]
    fn cdfs_monotone_with_limits() {
        let grid: Vec<f64> = (-400..=400).map(|i| i as f64 * 0.05).collect();
        for nu in [1.0, 3.0, 40.0] {
            let vals: Vec<f64> = grid.iter().map(|&x| t_cdf(x, nu).unwrap()).collect();
            assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        }
        let pos: Vec<f64> = grid.iter().filter(|x| **x >= 0.0).copied().collect();
        for (q, nu) in [(1.0, 1.0), (3.0, 10.0), (5.0, 60.0)] {
            let vals: Vec<f64> = pos.iter().map(|&x| f_cdf(x, q, nu).unwrap()).collect();
            assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        }
        assert!(t_cdf(-1e12, 3.0).unwrap() < 1e-20);
        assert!(t_cdf(1e12, 3.0).unwrap() > 1.0 - 1e-15);
        assert!(f_cdf(1e12, 3.0, 5.0).unwrap() > 1.0 - 1e-12);
        assert!(chi2_cdf(1e4, 3.0).unwrap() > 1.0 - 1e-15);
    }

    #[test]
    fn ecdf_counting() {
        let e = Ecdf::new(vec![3.0, 1.0, 2.0]).unwrap();
        assert_eq!(e.eval(0.5), 0.0);
        assert_eq!(e.eval(3.0), 1.0);
        assert!((ecdf_eval(&e, 2.0) - 2.0 / 3.0).abs() < 1e-15);
        assert!((e.eval_midrank(2.0) - 0.5).abs() < 1e-15);
        assert!(Ecdf::new(vec![]).is_err());
        assert!(Ecdf::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn ks_basics() {
        assert!((ks_distance(&[0.5; 10]).unwrap() - 0.5).abs() < 1e-15);
        assert!(ks_distance(&[]).is_err());
        // Plotting positions k/(m+1): sup over jump points is below 1/(m+1) + 1/m.
        let m = 99;
        let s: Vec<f64> = (1..=m).map(|k| k as f64 / (m + 1) as f64).collect();
        let d = ks_distance(&s).unwrap();
        assert!(d <= 1.0 / (m + 1) as f64 + 1.0 / m as f64);
    }

    #[test]
    fn ks_of_uniform_draws_is_small() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let draws: Vec<f64> = (0..10_000).map(|_| rng.random::<f64>()).collect();
        assert!(ks_distance(&draws).unwrap() < 0.025);
    }
}
