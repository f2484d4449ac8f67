//! Comparison algorithms: biased MF, NMF, bounded MF, PMF and logistic MF.
//!
//! MF, PMF and LMF are trained by minibatch SGD; NMF and BMF by block
//! coordinate descent. MF, PMF, NMF and BMF are not bounded by construction
//! and are clamped into `[0, 1]` at evaluation time (see
//! [`FactorModel::predict_eval`](crate::FactorModel::predict_eval)).

mod bmf;
mod lmf;
mod mf;
mod nmf;
mod pmf;

pub use bmf::{bmf_fit, bmf_fit_with, init_scaled_factors};
pub use lmf::{lmf_entry_loss, lmf_fit, lmf_gradients, LmfGradients};
pub use mf::{mf_fit, mf_fit_sparse, DEFAULT_LEARNING_RATE as MF_LEARNING_RATE};
pub use nmf::{nmf_fit, nmf_fit_with};
pub use pmf::{pmf_entry_loss, pmf_fit, pmf_gradients, PmfGradients};

pub use lmf::DEFAULT_LEARNING_RATE as LMF_LEARNING_RATE;
pub use pmf::DEFAULT_LEARNING_RATE as PMF_LEARNING_RATE;

use ndarray::Array2;
use rand::distributions::{Distribution, Open01};

use crate::rng::{self, streams};

/// Factor matrices drawn uniformly from `(0, 1)`.
pub(crate) fn uniform_factors(n_rows: usize, n_cols: usize, k: usize, seed: u64) -> (Array2<f64>, Array2<f64>) {
    let mut rng = rng::stream(seed, streams::INIT);
    let w = Array2::from_shape_simple_fn((n_rows, k), || Open01.sample(&mut rng));
    let z = Array2::from_shape_simple_fn((n_cols, k), || Open01.sample(&mut rng));
    (w, z)
}
