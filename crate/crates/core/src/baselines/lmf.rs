use ndarray::Array1;

use super::uniform_factors;
use crate::error::{Error, Result};
use crate::model::{FactorModel, ModelKind};
use crate::objective::logistic;
use crate::observed::{ObservedMatrix, SparseMatrix};
use crate::params::{Hyperparams, TrainReport};
use crate::sgd::{self, FactorGrads};

pub const DEFAULT_LEARNING_RATE: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub struct LmfGradients {
    pub w: Vec<f64>,
    pub z: Vec<f64>,
    pub user_bias: f64,
    pub gamma: f64,
}

fn require_lmf(model: &FactorModel, d: usize, n: usize) -> Result<()> {
    if model.kind() != ModelKind::Lmf {
        return Err(Error::InvalidArgument(format!("expected an LMF model, got {}", model.kind())));
    }
    model.predict(d, n).map(|_| ())
}

/// `(scale/2)(xhat - x)^2 + (reg_scale/2)(lambda_u (|w_d|^2 + beta_d^2) + lambda_i |z_n|^2)`
/// with `xhat = s(gamma_n) s(beta_d + w_d . z_n)`, `s` the logistic function.
#[allow(clippy::too_many_arguments)]
pub fn lmf_entry_loss(
    x: f64,
    model: &FactorModel,
    d: usize,
    n: usize,
    lambda_u: f64,
    lambda_i: f64,
    scale: f64,
    reg_scale: f64,
) -> Result<f64> {
    require_lmf(model, d, n)?;
    let xhat = model.predict_unchecked(d, n);
    let w = model.user_factors.row(d);
    let z = model.item_factors.row(n);
    let beta = model.user_bias.as_ref().expect("LMF user bias")[d];
    Ok(0.5 * scale * (xhat - x).powi(2)
        + 0.5 * reg_scale * (lambda_u * (w.dot(&w) + beta * beta) + lambda_i * z.dot(&z)))
}

/// Returns `(e * dxhat/ds, e * dxhat/dgamma)` with `s = beta_d + w_d . z_n`
/// and `e = (xhat - x) * scale`.
fn partials(model: &FactorModel, d: usize, n: usize, x: f64, scale: f64) -> (f64, f64) {
    let gamma = model.thresholds.as_ref().expect("LMF thresholds")[n];
    let beta = model.user_bias.as_ref().expect("LMF user bias")[d];
    let accept = logistic(gamma);
    let good = logistic(beta + model.dot(d, n));
    let e = (accept * good - x) * scale;
    (e * accept * good * (1.0 - good), e * accept * (1.0 - accept) * good)
}

/// Gradient of [`lmf_entry_loss`].
#[allow(clippy::too_many_arguments)]
pub fn lmf_gradients(
    x: f64,
    model: &FactorModel,
    d: usize,
    n: usize,
    lambda_u: f64,
    lambda_i: f64,
    scale: f64,
    reg_scale: f64,
) -> Result<LmfGradients> {
    require_lmf(model, d, n)?;
    let (g_s, g_gamma) = partials(model, d, n, x, scale);
    let w = model.user_factors.row(d);
    let z = model.item_factors.row(n);
    let beta = model.user_bias.as_ref().expect("LMF user bias")[d];
    Ok(LmfGradients {
        w: w.iter().zip(z).map(|(wv, zv)| g_s * zv + reg_scale * lambda_u * wv).collect(),
        z: z.iter().zip(w).map(|(zv, wv)| g_s * wv + reg_scale * lambda_i * zv).collect(),
        user_bias: g_s + reg_scale * lambda_u * beta,
        gamma: g_gamma,
    })
}

/// Logistic MF on explicit data: the product of an item acceptance
/// probability `s(gamma_n)` and a user quality probability
/// `s(beta_d + w_d . z_n)`, fit by minibatch SGD on squared loss.
pub fn lmf_fit(observed: &ObservedMatrix, hp: &Hyperparams) -> Result<(FactorModel, TrainReport)> {
    hp.validate()?;
    let data: &SparseMatrix = observed;
    if data.is_empty() {
        return Err(Error::EmptyInput("LMF needs at least one observed entry".into()));
    }
    let (n_rows, n_cols, k) = (data.n_rows(), data.n_cols(), hp.k);
    let (w, z) = uniform_factors(n_rows, n_cols, k, hp.seed);
    let mut model = FactorModel::bare(ModelKind::Lmf, w, z);
    model.user_bias = Some(Array1::zeros(n_rows));
    model.thresholds = Some(Array1::zeros(n_cols));

    let lr = hp.learning_rate;
    let mut grads = FactorGrads::new(n_rows, n_cols, k);
    let mut g_user = Vec::new();
    let mut g_gamma = Vec::new();
    let report = sgd::run_epochs(data, hp, &mut model, |model, batch| {
        let scale = 1.0 / batch.len() as f64;
        for &i in batch {
            let e = &data.entries()[i];
            let (g_s, g_g) = partials(model, e.row, e.col, e.value, scale);
            grads.add_dot_gradient(model, e.row, e.col, g_s);
            g_user.push((e.row, g_s));
            g_gamma.push((e.col, g_g));
        }
        sgd::shrink(model, lr, hp);
        grads.apply(model, lr);
        let b = model.user_bias.as_mut().expect("LMF user bias");
        for (d, g) in g_user.drain(..) {
            b[d] -= lr * g;
        }
        let gamma = model.thresholds.as_mut().expect("LMF thresholds");
        for (n, g) in g_gamma.drain(..) {
            gamma[n] -= lr * g;
        }
    })?;
    model.validate()?;
    Ok((model, report))
}
