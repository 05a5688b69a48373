//! Shared data types: datasets, sample splits, selected supports, refits and
//! the generating model used by simulations.
//!
//! Indices are 0-based everywhere in the library.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::rng_from_seed;

/// Default fraction of observations sent to the inference half.
pub const DEFAULT_FRAC_INF: f64 = 0.5;

/// Design matrix `x` (n × p) and response `y` (n).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: DMatrix<f64>,
    y: DVector<f64>,
    feature_names: Option<Vec<String>>,
}

impl Dataset {
    pub fn new(x: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        Self::with_names(x, y, None)
    }

    pub fn with_names(x: DMatrix<f64>, y: DVector<f64>, feature_names: Option<Vec<String>>) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::DimensionMismatch(format!("x has {} rows but y has length {}", x.nrows(), y.len())));
        }
        if x.ncols() < 1 {
            return Err(invalid("dataset needs at least one feature"));
        }
        if x.nrows() < 2 {
            return Err(invalid("dataset needs at least two observations"));
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("dataset".into()));
        }
        if let Some(names) = &feature_names {
            if names.len() != x.ncols() {
                return Err(Error::DimensionMismatch(format!(
                    "{} feature names for {} columns",
                    names.len(),
                    x.ncols()
                )));
            }
        }
        Ok(Self { x, y, feature_names })
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    /// Human-readable label for coordinate `j` (1-based when unnamed).
    pub fn label(&self, j: usize) -> String {
        match &self.feature_names {
            Some(names) => names[j].clone(),
            None => format!("x{}", j + 1),
        }
    }
}

/// Rows `idx` of `d`, in the given order.
pub fn subset_dataset(d: &Dataset, idx: &[usize]) -> Result<Dataset> {
    let n = d.n();
    let mut seen = vec![false; n];
    for &i in idx {
        if i >= n {
            return Err(Error::IndexOutOfRange { index: i, len: n });
        }
        if std::mem::replace(&mut seen[i], true) {
            return Err(invalid(format!("duplicate row index {i}")));
        }
    }
    let x = d.x.select_rows(idx);
    let y = d.y.select_rows(idx);
    // Row subsets may legitimately be tiny; skip the n >= 2 check.
    Ok(Dataset { x, y, feature_names: d.feature_names.clone() })
}

/// Disjoint selection and inference halves of `{0, …, n-1}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub sel_idx: Vec<usize>,
    pub inf_idx: Vec<usize>,
    pub seed: u64,
    /// Selection rows reused for inference; all guarantees become approximate.
    pub carved: bool,
}

impl SplitPlan {
    pub fn n_sel(&self) -> usize {
        self.sel_idx.len()
    }

    pub fn n_inf(&self) -> usize {
        self.inf_idx.len()
    }

    /// Moves the first `n_carve` selection rows into the inference half as well.
    pub fn carve(&self, n_carve: usize) -> SplitPlan {
        let n_carve = n_carve.min(self.sel_idx.len());
        let mut inf_idx = self.inf_idx.clone();
        inf_idx.extend_from_slice(&self.sel_idx[..n_carve]);
        inf_idx.sort_unstable();
        SplitPlan { sel_idx: self.sel_idx.clone(), inf_idx, seed: self.seed, carved: n_carve > 0 }
    }
}

/// Uniform random partition with `⌊frac_inf · n⌋` inference rows.
pub fn make_split(n: usize, frac_inf: f64, seed: u64) -> Result<SplitPlan> {
    if !(frac_inf > 0.0 && frac_inf < 1.0) {
        return Err(invalid(format!("frac_inf must lie in (0, 1), got {frac_inf}")));
    }
    if n < 4 {
        return Err(invalid(format!("need at least 4 observations to split, got {n}")));
    }
    let n_inf = (frac_inf * n as f64).floor() as usize;
    if n_inf < 2 || n - n_inf < 2 {
        return Err(invalid(format!("split of n={n} at frac_inf={frac_inf} leaves a part with fewer than 2 rows")));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng_from_seed(seed));
    let mut inf_idx = perm[..n_inf].to_vec();
    let mut sel_idx = perm[n_inf..].to_vec();
    inf_idx.sort_unstable();
    sel_idx.sort_unstable();
    Ok(SplitPlan { sel_idx, inf_idx, seed, carved: false })
}

/// Selected coordinates, sorted, with the selector's identity and size cap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectedSupport {
    coords: Vec<usize>,
    pub selector_id: String,
    pub k_max: usize,
}

impl SelectedSupport {
    pub fn new(mut coords: Vec<usize>, p: usize, selector_id: impl Into<String>, k_max: usize) -> Result<Self> {
        if k_max == 0 {
            return Err(invalid("k_max must be positive"));
        }
        coords.sort_unstable();
        let before = coords.len();
        coords.dedup();
        if coords.len() != before {
            return Err(invalid("selected coordinates must be distinct"));
        }
        if let Some(&j) = coords.iter().find(|&&j| j >= p) {
            return Err(Error::IndexOutOfRange { index: j, len: p });
        }
        if coords.len() > k_max {
            return Err(invalid(format!("{} coordinates exceed the cap k_max = {k_max}", coords.len())));
        }
        Ok(Self { coords, selector_id: selector_id.into(), k_max })
    }

    pub fn coords(&self) -> &[usize] {
        &self.coords
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn contains(&self, j: usize) -> bool {
        self.coords.binary_search(&j).is_ok()
    }

    /// Position of feature `j` inside the support.
    pub fn position(&self, j: usize) -> Option<usize> {
        self.coords.binary_search(&j).ok()
    }
}

/// Least-squares refit on the inference half restricted to a support.
#[derive(Debug, Clone, PartialEq)]
pub struct RefitFit {
    /// Coefficients aligned with `support.coords()`.
    pub beta_hat: DVector<f64>,
    pub sigma2_hat: f64,
    /// `(X_Sᵀ X_S)⁻¹`.
    pub gram_inv: DMatrix<f64>,
    /// Residual degrees of freedom `n_inf - d`.
    pub dof: usize,
    pub support: SelectedSupport,
    pub residuals: DVector<f64>,
}

impl RefitFit {
    pub fn sigma_hat(&self) -> f64 {
        self.sigma2_hat.sqrt()
    }

    /// Standard error `σ̂ √v_jj` of the coefficient at support position `k`.
    pub fn std_error(&self, k: usize) -> f64 {
        (self.sigma2_hat * self.gram_inv[(k, k)]).sqrt()
    }

    pub fn d(&self) -> usize {
        self.beta_hat.len()
    }
}

/// Closed interval `[lo, hi]`; endpoints may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn point(v: f64) -> Self {
        Self { lo: v, hi: v }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn is_finite(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn is_subset_of(&self, other: &Interval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }
}

/// Noise law for simulated responses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum NoiseKind {
    Gaussian,
    /// `σ_i² ∝ X_{i1}²`, scaled so the average variance is `σ²`.
    HeteroskedasticX1,
    /// `σ · T / sqrt(df / (df - 2))` with `T ~ t_df`, so the variance is `σ²`.
    StudentT {
        df: f64,
    },
}

/// Ground truth behind a simulated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrueModel {
    pub beta0: Vec<f64>,
    pub sigma: f64,
    pub noise_kind: NoiseKind,
}

impl TrueModel {
    pub fn new(beta0: Vec<f64>, sigma: f64, noise_kind: NoiseKind) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(invalid(format!("noise scale must be positive, got {sigma}")));
        }
        if beta0.iter().any(|b| !b.is_finite()) {
            return Err(Error::NonFinite("beta0".into()));
        }
        Ok(Self { beta0, sigma, noise_kind })
    }

    pub fn support0(&self) -> Vec<usize> {
        self.beta0.iter().enumerate().filter(|(_, b)| **b != 0.0).map(|(j, _)| j).collect()
    }

    pub fn sparsity(&self) -> usize {
        self.beta0.iter().filter(|b| **b != 0.0).count()
    }
}
