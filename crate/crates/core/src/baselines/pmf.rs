use super::uniform_factors;
use crate::error::{Error, Result};
use crate::model::{FactorModel, ModelKind};
use crate::observed::{ObservedMatrix, SparseMatrix};
use crate::params::{Hyperparams, TrainReport};
use crate::sgd::{self, FactorGrads};

pub const DEFAULT_LEARNING_RATE: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct PmfGradients {
    pub w: Vec<f64>,
    pub z: Vec<f64>,
}

fn require_pmf(model: &FactorModel, d: usize, n: usize) -> Result<()> {
    if model.kind() != ModelKind::Pmf {
        return Err(Error::InvalidArgument(format!("expected a PMF model, got {}", model.kind())));
    }
    model.predict(d, n).map(|_| ())
}

/// `(scale/2)(w_d . z_n - x)^2 + (reg_scale/2)(lambda_u |w_d|^2 + lambda_i |z_n|^2)`.
#[allow(clippy::too_many_arguments)]
pub fn pmf_entry_loss(
    x: f64,
    model: &FactorModel,
    d: usize,
    n: usize,
    lambda_u: f64,
    lambda_i: f64,
    scale: f64,
    reg_scale: f64,
) -> Result<f64> {
    require_pmf(model, d, n)?;
    let w = model.user_factors.row(d);
    let z = model.item_factors.row(n);
    Ok(0.5 * scale * (w.dot(&z) - x).powi(2) + 0.5 * reg_scale * (lambda_u * w.dot(&w) + lambda_i * z.dot(&z)))
}

/// Gradient of [`pmf_entry_loss`] with respect to `w_d` and `z_n`.
#[allow(clippy::too_many_arguments)]
pub fn pmf_gradients(
    x: f64,
    model: &FactorModel,
    d: usize,
    n: usize,
    lambda_u: f64,
    lambda_i: f64,
    scale: f64,
    reg_scale: f64,
) -> Result<PmfGradients> {
    require_pmf(model, d, n)?;
    let w = model.user_factors.row(d);
    let z = model.item_factors.row(n);
    let e = (w.dot(&z) - x) * scale;
    Ok(PmfGradients {
        w: w.iter().zip(z).map(|(wv, zv)| e * zv + reg_scale * lambda_u * wv).collect(),
        z: z.iter().zip(w).map(|(zv, wv)| e * wv + reg_scale * lambda_i * zv).collect(),
    })
}

/// MAP estimate of probabilistic MF: squared loss with Gaussian priors on
/// both factor matrices, trained by minibatch SGD.
pub fn pmf_fit(observed: &ObservedMatrix, hp: &Hyperparams) -> Result<(FactorModel, TrainReport)> {
    hp.validate()?;
    let data: &SparseMatrix = observed;
    if data.is_empty() {
        return Err(Error::EmptyInput("PMF needs at least one observed entry".into()));
    }
    let (n_rows, n_cols, k) = (data.n_rows(), data.n_cols(), hp.k);
    let (w, z) = uniform_factors(n_rows, n_cols, k, hp.seed);
    let mut model = FactorModel::bare(ModelKind::Pmf, w, z);
    let lr = hp.learning_rate;
    let mut grads = FactorGrads::new(n_rows, n_cols, k);
    let report = sgd::run_epochs(data, hp, &mut model, |model, batch| {
        let scale = 1.0 / batch.len() as f64;
        for &i in batch {
            let e = &data.entries()[i];
            let err = (model.dot(e.row, e.col) - e.value) * scale;
            grads.add_dot_gradient(model, e.row, e.col, err);
        }
        sgd::shrink(model, lr, hp);
        grads.apply(model, lr);
    })?;
    model.validate()?;
    Ok((model, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strong_prior_shrinks_predictions_to_zero() {
        let obs = ObservedMatrix::from_dense(&[vec![0.9, 0.8], vec![0.7, 1.0]]).unwrap();
        let hp = Hyperparams { k: 2, lambda_u: 20.0, lambda_i: 20.0, learning_rate: 0.02, ..Default::default() };
        let (m, _) = pmf_fit(&obs, &hp).unwrap();
        for d in 0..2 {
            for n in 0..2 {
                assert!(m.predict(d, n).unwrap().abs() < 1e-3);
            }
        }
    }

    #[test]
    fn gradients_vanish_at_exact_fit_without_prior() {
        let m = FactorModel::plain(ModelKind::Pmf, ndarray::array![[0.5, 0.2]], ndarray::array![[1.0, 0.5]]).unwrap();
        let g = pmf_gradients(0.6, &m, 0, 0, 0.0, 0.0, 1.0, 1.0).unwrap();
        assert!(g.w.iter().chain(&g.z).all(|v| v.abs() < 1e-15));
    }
}
