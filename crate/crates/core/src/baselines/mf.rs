use ndarray::Array1;

use super::uniform_factors;
use crate::error::{Error, Result};
use crate::model::{FactorModel, ModelKind};
use crate::observed::{ObservedMatrix, SparseMatrix};
use crate::params::{Hyperparams, TrainReport};
use crate::sgd::{self, FactorGrads};

pub const DEFAULT_LEARNING_RATE: f64 = 0.5;

/// Biased MF `xhat = m + b_d + c_n + w_d . z_n` with `m` fixed to the
/// training mean. Predictions are not bounded.
pub fn mf_fit(observed: &ObservedMatrix, hp: &Hyperparams) -> Result<(FactorModel, TrainReport)> {
    mf_fit_sparse(observed, hp)
}

/// [`mf_fit`] on data with arbitrary finite values.
pub fn mf_fit_sparse(data: &SparseMatrix, hp: &Hyperparams) -> Result<(FactorModel, TrainReport)> {
    hp.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyInput("MF needs at least one observed entry".into()));
    }
    let (n_rows, n_cols, k) = (data.n_rows(), data.n_cols(), hp.k);
    let (w, z) = uniform_factors(n_rows, n_cols, k, hp.seed);
    let mut model = FactorModel::bare(ModelKind::Mf, w, z);
    model.user_bias = Some(Array1::zeros(n_rows));
    model.item_bias = Some(Array1::zeros(n_cols));
    model.global_mean = Some(data.mean_value());

    let lr = hp.learning_rate;
    let mut grads = FactorGrads::new(n_rows, n_cols, k);
    let mut g_user = Vec::new();
    let mut g_item = Vec::new();
    let report = sgd::run_epochs(data, hp, &mut model, |model, batch| {
        let scale = 1.0 / batch.len() as f64;
        for &i in batch {
            let e = &data.entries()[i];
            let err = (model.predict_unchecked(e.row, e.col) - e.value) * scale;
            grads.add_dot_gradient(model, e.row, e.col, err);
            g_user.push((e.row, err));
            g_item.push((e.col, err));
        }
        sgd::shrink(model, lr, hp);
        grads.apply(model, lr);
        let b = model.user_bias.as_mut().expect("MF user bias");
        for (d, g) in g_user.drain(..) {
            b[d] -= lr * g;
        }
        let c = model.item_bias.as_mut().expect("MF item bias");
        for (n, g) in g_item.drain(..) {
            c[n] -= lr * g;
        }
    })?;
    model.validate()?;
    Ok((model, report))
}
