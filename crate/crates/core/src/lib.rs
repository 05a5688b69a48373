//! Split possibilistic inference after variable selection.
//!
//! Rows are split, a selector runs on one half, the selected model is refit by
//! least squares on the other half, and each coefficient gets a plausibility
//! contour whose level sets are confidence sets. Contours from several splits
//! are combined by taking their pointwise maximum.

// Negated comparisons are used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod dgp;
pub mod error;
pub mod lasso;
pub mod model;
pub mod multisplit;
pub mod numerics;
pub mod refit;
pub mod rng;
pub mod robust;
pub mod selectors;
pub mod validify;

pub use error::{Error, Result};
