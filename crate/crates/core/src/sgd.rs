//! Minibatch SGD driver shared by the SGD-trained models (MF, PMF, LMF, SMF).

use ndarray::Array2;
use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::model::FactorModel;
use crate::objective::{converged, training_objective};
use crate::observed::SparseMatrix;
use crate::params::{Hyperparams, StopReason, TrainReport};
use crate::rng::{self, streams};

/// Runs shuffled minibatch epochs until the relative objective decrease falls
/// below the tolerance or `max_epochs` is reached. `step` receives the ids of
/// the entries in each batch and updates the model in place.
pub(crate) fn run_epochs<F>(
    data: &SparseMatrix,
    hp: &Hyperparams,
    model: &mut FactorModel,
    mut step: F,
) -> Result<TrainReport>
where
    F: FnMut(&mut FactorModel, &[usize]),
{
    let mut rng = rng::stream(hp.seed, streams::SHUFFLE);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let initial = training_objective(data, model, hp);
    if !initial.is_finite() {
        return Err(Error::Diverged {
            epoch: 0,
            objective: initial,
        });
    }
    let mut trajectory = Vec::with_capacity(hp.max_epochs);
    let mut sigmas = Vec::new();
    let mut prev = initial;
    let mut stop = StopReason::MaxEpochs;

    for epoch in 1..=hp.max_epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(hp.batch_size) {
            step(model, batch);
        }
        let obj = training_objective(data, model, hp);
        if !obj.is_finite() {
            return Err(Error::Diverged {
                epoch,
                objective: obj,
            });
        }
        trajectory.push(obj);
        if let Some(s) = model.sigma {
            sigmas.push(s);
        }
        if converged(prev, obj, hp.rel_tolerance) {
            stop = StopReason::Tolerance;
            break;
        }
        prev = obj;
    }
    Ok(TrainReport {
        initial_objective: initial,
        epochs_run: trajectory.len(),
        objective_trajectory: trajectory,
        stop_reason: stop,
        sigma_trajectory: sigmas,
    })
}

/// Gradient buffers for one minibatch of factor updates.
pub(crate) struct FactorGrads {
    pub w: Array2<f64>,
    pub z: Array2<f64>,
    rows: Vec<usize>,
    cols: Vec<usize>,
}

impl FactorGrads {
    pub fn new(n_rows: usize, n_cols: usize, k: usize) -> Self {
        FactorGrads {
            w: Array2::zeros((n_rows, k)),
            z: Array2::zeros((n_cols, k)),
            rows: Vec::new(),
            cols: Vec::new(),
        }
    }

    /// Adds `coef * z_n` to the gradient of `w_d` and `coef * w_d` to that of
    /// `z_n`.
    pub fn add_dot_gradient(&mut self, model: &FactorModel, d: usize, n: usize, coef: f64) {
        self.w
            .row_mut(d)
            .scaled_add(coef, &model.item_factors.row(n));
        self.z
            .row_mut(n)
            .scaled_add(coef, &model.user_factors.row(d));
        self.rows.push(d);
        self.cols.push(n);
    }

    /// Applies `-lr * grad` to the touched factor rows and clears the buffers.
    pub fn apply(&mut self, model: &mut FactorModel, lr: f64) {
        self.rows.sort_unstable();
        self.rows.dedup();
        self.cols.sort_unstable();
        self.cols.dedup();
        for &d in &self.rows {
            let mut g = self.w.row_mut(d);
            model.user_factors.row_mut(d).scaled_add(-lr, &g);
            g.fill(0.0);
        }
        for &n in &self.cols {
            let mut g = self.z.row_mut(n);
            model.item_factors.row_mut(n).scaled_add(-lr, &g);
            g.fill(0.0);
        }
        self.rows.clear();
        self.cols.clear();
    }
}

/// Gradient step on the Frobenius penalty, applied once per batch:
/// `theta <- theta - lr * lambda * theta` for user-side parameters
/// (factors and user bias) and item-side parameters (factors and item bias).
pub(crate) fn shrink(model: &mut FactorModel, lr: f64, hp: &Hyperparams) {
    let user = 1.0 - lr * hp.lambda_u;
    let item = 1.0 - lr * hp.lambda_i;
    if user != 1.0 {
        model.user_factors *= user;
        if let Some(b) = model.user_bias.as_mut() {
            *b *= user;
        }
    }
    if item != 1.0 {
        model.item_factors *= item;
        if let Some(c) = model.item_bias.as_mut() {
            *c *= item;
        }
    }
}
