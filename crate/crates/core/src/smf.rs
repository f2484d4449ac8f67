//! Survival matrix factorization.
//!
//! Each entry is modeled as the probability that a Gaussian quality draw
//! `Q ~ N(w_d . z_n, sigma^2)` exceeds the item threshold `gamma_n`:
//!
//! ```text
//! xhat_dn = P(Q > gamma_n) = Phi_bar((gamma_n - w_d . z_n) / sigma)
//! ```
//!
//! With `r = (gamma_n - mu) / sigma` and `phi` the standard normal density,
//! differentiating under the integral sign gives
//! `d xhat/d mu = phi(r)/sigma`, `d xhat/d sigma = phi(r) r / sigma` and
//! `d xhat/d gamma_n = -phi(r)/sigma`.
//!
//! Training minimizes the half mean squared error plus Frobenius penalties
//! on `W` and `Z` by minibatch SGD, with `sigma` clamped to
//! [`SIGMA_MIN`](crate::SIGMA_MIN) after every step.

use ndarray::{Array1, Array2};
use rand::distributions::{Distribution, Open01};

use crate::error::{Error, Result};
use crate::model::{FactorModel, ModelKind};
use crate::observed::{ObservedMatrix, SparseMatrix};
use crate::params::{Hyperparams, TrainReport};
use crate::rng::{self, streams};
use crate::sgd::{self, FactorGrads};
use crate::special::{std_normal_pdf, std_normal_survival};
use crate::SIGMA_MIN;

pub use crate::special::{normal_pdf, normal_survival};

/// Learning rate used when none is configured explicitly.
pub const DEFAULT_LEARNING_RATE: f64 = 1.0;

fn require_smf(model: &FactorModel) -> Result<()> {
    if model.kind() != ModelKind::Smf {
        return Err(Error::InvalidArgument(format!(
            "expected an SMF model, got {}",
            model.kind()
        )));
    }
    Ok(())
}

pub fn smf_predict(model: &FactorModel, d: usize, n: usize) -> Result<f64> {
    require_smf(model)?;
    model.predict(d, n)
}

/// Partial derivatives of the per-entry loss for one observation.
#[derive(Debug, Clone, PartialEq)]
pub struct SmfGradients {
    pub w: Vec<f64>,
    pub z: Vec<f64>,
    pub gamma: f64,
    pub sigma: f64,
}

/// Per-entry loss differentiated by [`smf_gradients`]:
/// `(scale/2)(xhat - x)^2 + (reg_scale/2)(lambda_u |w_d|^2 + lambda_i |z_n|^2)`.
#[allow(clippy::too_many_arguments)]
pub fn smf_entry_loss(
    x: f64,
    model: &FactorModel,
    d: usize,
    n: usize,
    lambda_u: f64,
    lambda_i: f64,
    scale: f64,
    reg_scale: f64,
) -> Result<f64> {
    let xhat = smf_predict(model, d, n)?;
    let w = model.user_factors.row(d);
    let z = model.item_factors.row(n);
    Ok(0.5 * scale * (xhat - x).powi(2) + 0.5 * reg_scale * (lambda_u * w.dot(&w) + lambda_i * z.dot(&z)))
}

/// Analytic gradient of [`smf_entry_loss`] with respect to `w_d`, `z_n`,
/// `gamma_n` and `sigma`.
#[allow(clippy::too_many_arguments)]
pub fn smf_gradients(
    x: f64,
    model: &FactorModel,
    d: usize,
    n: usize,
    lambda_u: f64,
    lambda_i: f64,
    scale: f64,
    reg_scale: f64,
) -> Result<SmfGradients> {
    require_smf(model)?;
    let sigma = model.sigma.unwrap_or(f64::NAN);
    if sigma.is_nan() || sigma < SIGMA_MIN {
        return Err(Error::SigmaTooSmall {
            sigma,
            min: SIGMA_MIN,
        });
    }
    // Bounds are checked by smf_predict inside entry_partials.
    model.predict(d, n)?;
    let p = entry_partials(model, d, n, x, scale);
    let w = model.user_factors.row(d);
    let z = model.item_factors.row(n);
    Ok(SmfGradients {
        w: w.iter().zip(z).map(|(wv, zv)| p.mu * zv + lambda_u * reg_scale * wv).collect(),
        z: z.iter().zip(w).map(|(zv, wv)| p.mu * wv + lambda_i * reg_scale * zv).collect(),
        gamma: p.gamma,
        sigma: p.sigma,
    })
}

struct Partials {
    mu: f64,
    gamma: f64,
    sigma: f64,
}

/// Data-term partials `e * d xhat/d(mu, gamma, sigma)` with `e = (xhat - x) * scale`.
fn entry_partials(model: &FactorModel, d: usize, n: usize, x: f64, scale: f64) -> Partials {
    let sigma = model.sigma.expect("SMF sigma");
    let gamma = model.thresholds.as_ref().expect("SMF thresholds")[n];
    let mu = model.dot(d, n);
    let r = (gamma - mu) / sigma;
    let xhat = std_normal_survival(r);
    let e = (xhat - x) * scale;
    let dens = std_normal_pdf(r) / sigma;
    Partials {
        mu: e * dens,
        gamma: -e * dens,
        sigma: e * dens * r,
    }
}

/// Fits the survival model by minibatch SGD.
///
/// Factors start uniform in `(0, 1)`, thresholds at zero and `sigma` at one.
/// Within a batch the data gradients are averaged over the batch; the
/// penalty gradient is applied once per batch, so an epoch of `|Omega|/B`
/// batches takes steps along the gradient of the full objective scaled by
/// `|Omega|/B`.
pub fn smf_fit(observed: &ObservedMatrix, hp: &Hyperparams) -> Result<(FactorModel, TrainReport)> {
    hp.validate()?;
    let data: &SparseMatrix = observed;
    if data.is_empty() {
        return Err(Error::EmptyInput("SMF needs at least one observed entry".into()));
    }
    let (n_rows, n_cols, k) = (data.n_rows(), data.n_cols(), hp.k);
    let mut rng = rng::stream(hp.seed, streams::INIT);
    let w = Array2::from_shape_simple_fn((n_rows, k), || Open01.sample(&mut rng));
    let z = Array2::from_shape_simple_fn((n_cols, k), || Open01.sample(&mut rng));
    let mut model = FactorModel::bare(ModelKind::Smf, w, z);
    model.thresholds = Some(Array1::zeros(n_cols));
    model.sigma = Some(1.0);

    let lr = hp.learning_rate;
    let mut grads = FactorGrads::new(n_rows, n_cols, k);
    let mut g_gamma = vec![0.0; n_cols];
    let mut touched_cols = Vec::new();
    let report = sgd::run_epochs(data, hp, &mut model, |model, batch| {
        let scale = 1.0 / batch.len() as f64;
        let mut g_sigma = 0.0;
        for &i in batch {
            let e = &data.entries()[i];
            let p = entry_partials(model, e.row, e.col, e.value, scale);
            grads.add_dot_gradient(model, e.row, e.col, p.mu);
            g_gamma[e.col] += p.gamma;
            touched_cols.push(e.col);
            g_sigma += p.sigma;
        }
        sgd::shrink(model, lr, hp);
        grads.apply(model, lr);
        let gamma = model.thresholds.as_mut().expect("SMF thresholds");
        for &n in &touched_cols {
            gamma[n] -= lr * g_gamma[n];
            g_gamma[n] = 0.0;
        }
        touched_cols.clear();
        let sigma = model.sigma.as_mut().expect("SMF sigma");
        *sigma = (*sigma - lr * g_sigma).max(SIGMA_MIN);
    })?;
    model.validate()?;
    Ok((model, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn model(w: Array2<f64>, z: Array2<f64>, gamma: Array1<f64>, sigma: f64) -> FactorModel {
        FactorModel::smf(w, z, gamma, sigma).unwrap()
    }

    #[test]
    fn predict_examples() {
        let m = model(array![[0.6, 0.0]], array![[1.0, 0.5]], array![0.6], 0.7);
        assert_eq!(smf_predict(&m, 0, 0).unwrap(), 0.5);
        let m = model(array![[0.6]], array![[1.0]], array![0.1], 1.0);
        assert!((smf_predict(&m, 0, 0).unwrap() - 0.691_462_461_3).abs() < 1e-10);
        let m = model(array![[50.0]], array![[1.0]], array![0.0], 1.0);
        assert!(smf_predict(&m, 0, 0).unwrap() > 1.0 - 1e-15);
        assert!(smf_predict(&m, 1, 0).is_err());
    }

    #[test]
    fn gradient_zero_cases() {
        let m = model(array![[0.3, 0.2]], array![[0.4, 0.9]], array![-0.2], 0.8);
        let xhat = smf_predict(&m, 0, 0).unwrap();
        let g = smf_gradients(xhat, &m, 0, 0, 0.0, 0.0, 1.0, 1.0).unwrap();
        assert!(g.w.iter().chain(&g.z).all(|v| *v == 0.0));
        assert_eq!((g.gamma, g.sigma), (0.0, 0.0));

        let m = model(array![[0.5]], array![[0.5]], array![0.25], 0.8);
        let g = smf_gradients(0.9, &m, 0, 0, 0.0, 0.0, 1.0, 1.0).unwrap();
        assert_eq!(g.sigma, 0.0);
        assert!(g.gamma != 0.0);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let m = model(array![[0.3, -0.7]], array![[1.1, 0.4]], array![0.2], 0.6);
        let (x, lu, li, s, rs) = (0.8, 0.3, 0.2, 0.5, 0.25);
        let g = smf_gradients(x, &m, 0, 0, lu, li, s, rs).unwrap();
        let h = 1e-6;
        let loss = |m: &FactorModel| smf_entry_loss(x, m, 0, 0, lu, li, s, rs).unwrap();
        let fd = |f: &dyn Fn(&mut FactorModel, f64)| {
            let (mut a, mut b) = (m.clone(), m.clone());
            f(&mut a, h);
            f(&mut b, -h);
            (loss(&a) - loss(&b)) / (2.0 * h)
        };
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 || (a - b).abs() / a.abs().max(b.abs()) < 1e-5;
        for j in 0..2 {
            assert!(close(g.w[j], fd(&|m, h| m.user_factors[[0, j]] += h)));
            assert!(close(g.z[j], fd(&|m, h| m.item_factors[[0, j]] += h)));
        }
        assert!(close(g.gamma, fd(&|m, h| m.thresholds.as_mut().unwrap()[0] += h)));
        assert!(close(g.sigma, fd(&|m, h| *m.sigma.as_mut().unwrap() += h)));
    }

    #[test]
    fn constant_half_matrix_is_fit() {
        let rows = vec![vec![0.5; 4]; 5];
        let obs = ObservedMatrix::from_dense(&rows).unwrap();
        // full-batch steps decrease the objective monotonically
        let hp = Hyperparams {
            k: 2,
            learning_rate: 10.0,
            batch_size: 20,
            max_epochs: 5000,
            ..Default::default()
        };
        let (m, report) = smf_fit(&obs, &hp).unwrap();
        assert!(report.final_objective() <= 1e-6, "{report:?}");
        assert_eq!(report.sigma_trajectory.len(), report.epochs_run);
        for d in 0..5 {
            for n in 0..4 {
                let p = m.predict(d, n).unwrap();
                assert!(p > 0.0 && p < 1.0);
            }
        }
    }

    #[test]
    fn rejects_wrong_kind_and_small_sigma() {
        let pmf = FactorModel::plain(ModelKind::Pmf, array![[1.0]], array![[1.0]]).unwrap();
        assert!(smf_predict(&pmf, 0, 0).is_err());
        assert!(smf_gradients(0.5, &pmf, 0, 0, 0.0, 0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn fit_rejects_empty() {
        let obs = ObservedMatrix::new(2, 2, vec![]).unwrap();
        assert!(smf_fit(&obs, &Hyperparams::default()).is_err());
    }
}
