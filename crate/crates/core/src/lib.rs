//! Completion of sparse matrices whose entries live in the unit interval.
//!
//! Two structured factorization models are provided alongside five
//! conventional baselines:
//!
//! * [`emf`]: expertise factorization. User factors are skill levels bounded
//!   together with a per-user bias, item factors are skill weightings on the
//!   probability simplex, so every prediction `beta_d + w_d . z_n` is in
//!   `[0, 1]` without clamping.
//! * [`smf`]: survival factorization. An entry is the probability that a
//!   Gaussian quality draw with mean `w_d . z_n` exceeds a per-item threshold.
//! * [`baselines`]: biased MF, NMF, bounded MF, PMF and logistic MF.
//!
//! Data ingestion from claim/view/click logs lives in [`ingest`], and the
//! cross-validation harness with RMSE, MAE, Precision@N and Recall@N lives in
//! [`eval`].

pub mod baselines;
pub mod emf;
pub mod error;
pub mod eval;
pub mod ingest;
pub mod model;
pub mod objective;
pub mod observed;
pub mod params;
pub mod projection;
pub mod rng;
pub mod smf;
pub mod special;

mod qp;
mod sgd;

pub use error::{Error, Result};
pub use model::{FactorModel, ModelKind};
pub use objective::{clamp01, converged, regularized_squared_loss};
pub use observed::{Entry, ObservedMatrix, SparseMatrix};
pub use params::{Hyperparams, StopReason, TrainReport};

/// Lower bound enforced on the survival model's scale parameter.
pub const SIGMA_MIN: f64 = 1e-3;

/// Relative margin kept below the upper bound of the bounded solvers (EMF,
/// BMF) so that recomputed predictions cannot exceed it by rounding.
pub(crate) const ROUNDING_GUARD: f64 = 1e-12;

/// Trains a model of the given kind with its default settings (BMF bounds
/// `[0, 1]`).
pub fn fit(kind: ModelKind, observed: &ObservedMatrix, hp: &Hyperparams) -> Result<(FactorModel, TrainReport)> {
    match kind {
        ModelKind::Mf => baselines::mf_fit(observed, hp),
        ModelKind::Nmf => baselines::nmf_fit(observed, hp),
        ModelKind::Bmf => baselines::bmf_fit(observed, hp, 0.0, 1.0),
        ModelKind::Pmf => baselines::pmf_fit(observed, hp),
        ModelKind::Lmf => baselines::lmf_fit(observed, hp),
        ModelKind::Emf => emf::emf_fit(observed, hp),
        ModelKind::Smf => smf::smf_fit(observed, hp),
    }
}

/// SGD step size used for `kind` when none is configured. The
/// block-coordinate solvers (NMF, BMF, EMF) ignore the learning rate.
pub fn default_learning_rate(kind: ModelKind) -> f64 {
    match kind {
        ModelKind::Mf => baselines::MF_LEARNING_RATE,
        ModelKind::Pmf => baselines::PMF_LEARNING_RATE,
        ModelKind::Lmf => baselines::LMF_LEARNING_RATE,
        ModelKind::Smf => smf::DEFAULT_LEARNING_RATE,
        ModelKind::Nmf | ModelKind::Bmf | ModelKind::Emf => Hyperparams::default().learning_rate,
    }
}
