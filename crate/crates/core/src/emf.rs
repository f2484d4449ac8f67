//! Expertise matrix factorization.
//!
//! Prediction is `beta_d + w_d . z_n` where every row of `Z` lies on the
//! probability simplex and `0 <= w_dk`, `0 <= beta_d`, `beta_d + w_dk <= 1`.
//! The prediction is then a convex combination of numbers in `[0, 1]`, so it
//! stays in `[0, 1]` with no clamping.
//!
//! Fitting alternates between the user block `(W, beta)` and the item block
//! `Z`. Both blocks separate into independent per-row convex quadratic
//! programs which are solved by projected gradient, with
//! [`project_emf_row`](crate::projection::project_emf_row) and
//! [`project_simplex`](crate::projection::project_simplex) respectively.

use ndarray::{Array1, Array2};
use rand::distributions::{Distribution, Open01};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ROUNDING_GUARD;
use crate::model::{FactorModel, ModelKind};
use crate::objective::{converged, training_objective};
use crate::observed::{ObservedMatrix, SparseMatrix};
use crate::params::{Hyperparams, StopReason, TrainReport};
use crate::projection::{project_emf_row_in_place, project_simplex_in_place};
use crate::qp::{projected_gradient, Quadratic};
use crate::rng::{self, streams};

pub fn emf_predict(model: &FactorModel, d: usize, n: usize) -> Result<f64> {
    if model.kind() != ModelKind::Emf {
        return Err(Error::InvalidArgument(format!(
            "expected an EMF model, got {}",
            model.kind()
        )));
    }
    model.predict(d, n)
}

fn check_shapes(data: &SparseMatrix, w: &Array2<f64>, beta: &Array1<f64>, z: &Array2<f64>) -> Result<()> {
    let k = w.ncols();
    if k == 0 || z.ncols() != k || w.nrows() != data.n_rows() || beta.len() != data.n_rows() || z.nrows() != data.n_cols() {
        return Err(Error::InvalidArgument(format!(
            "factor shapes W {:?}, beta {}, Z {:?} do not fit a {}x{} matrix",
            w.dim(),
            beta.len(),
            z.dim(),
            data.n_rows(),
            data.n_cols()
        )));
    }
    Ok(())
}

/// Minimizes the objective over `(W, beta)` with `Z` held fixed.
///
/// Each row `d` solves
/// `min (1/(2|Omega|)) sum_n (x_dn - beta_d - w_d . z_n)^2 + (lambda_u/2)(|w_d|^2 + beta_d^2)`
/// over the feasible set, starting from the current `(w_d, beta_d)`.
pub fn emf_update_user_block(
    observed: &ObservedMatrix,
    z: &Array2<f64>,
    w: &Array2<f64>,
    beta: &Array1<f64>,
    hp: &Hyperparams,
) -> Result<(Array2<f64>, Array1<f64>)> {
    check_shapes(observed, w, beta, z)?;
    Ok(update_user_block(observed, &observed.row_index(), z, w, beta, hp))
}

fn update_user_block(
    data: &SparseMatrix,
    rows: &[Vec<usize>],
    z: &Array2<f64>,
    w: &Array2<f64>,
    beta: &Array1<f64>,
    hp: &Hyperparams,
) -> (Array2<f64>, Array1<f64>) {
    let k = w.ncols();
    let weight = 1.0 / data.len().max(1) as f64;
    let solved: Vec<Vec<f64>> = rows
        .par_iter()
        .enumerate()
        .map(|(d, ids)| {
            // Variables are (beta_d, w_d1..w_dK); design row is (1, z_n).
            let mut q = Quadratic::ridge(k + 1, hp.lambda_u);
            let mut a = vec![1.0; k + 1];
            for &i in ids {
                let e = &data.entries()[i];
                for (slot, &v) in a[1..].iter_mut().zip(z.row(e.col)) {
                    *slot = v;
                }
                q.add_residual(&a, e.value, weight);
            }
            let mut x = Vec::with_capacity(k + 1);
            x.push(beta[d]);
            x.extend(w.row(d).iter());
            project_row(&mut x);
            projected_gradient(&q, &mut x, project_row);
            let cap = (1.0 - x[0]) * (1.0 - ROUNDING_GUARD);
            x[1..].iter_mut().for_each(|v| *v = v.min(cap));
            x
        })
        .collect();

    let mut w_new = Array2::zeros((w.nrows(), k));
    let mut beta_new = Array1::zeros(w.nrows());
    for (d, x) in solved.into_iter().enumerate() {
        beta_new[d] = x[0];
        for (slot, v) in w_new.row_mut(d).iter_mut().zip(&x[1..]) {
            *slot = *v;
        }
    }
    (w_new, beta_new)
}

fn project_row(x: &mut [f64]) {
    let (head, tail) = x.split_at_mut(1);
    // Inputs are finite by construction, so the projection cannot fail.
    head[0] = project_emf_row_in_place(head[0], tail).expect("finite EMF row");
}

fn project_simplex_row(x: &mut [f64]) {
    project_simplex_in_place(x).expect("finite simplex row");
}

/// Minimizes the objective over `Z` with `(W, beta)` held fixed; each row of
/// `Z` solves a simplex-constrained ridge regression.
pub fn emf_update_item_block(
    observed: &ObservedMatrix,
    w: &Array2<f64>,
    beta: &Array1<f64>,
    z: &Array2<f64>,
    hp: &Hyperparams,
) -> Result<Array2<f64>> {
    check_shapes(observed, w, beta, z)?;
    Ok(update_item_block(observed, &observed.col_index(), w, beta, z, hp))
}

fn update_item_block(
    data: &SparseMatrix,
    cols: &[Vec<usize>],
    w: &Array2<f64>,
    beta: &Array1<f64>,
    z: &Array2<f64>,
    hp: &Hyperparams,
) -> Array2<f64> {
    let k = z.ncols();
    let weight = 1.0 / data.len().max(1) as f64;
    let solved: Vec<Vec<f64>> = cols
        .par_iter()
        .enumerate()
        .map(|(n, ids)| {
            let mut q = Quadratic::ridge(k, hp.lambda_i);
            for &i in ids {
                let e = &data.entries()[i];
                let a: Vec<f64> = w.row(e.row).to_vec();
                q.add_residual(&a, e.value - beta[e.row], weight);
            }
            let mut x = z.row(n).to_vec();
            project_simplex_row(&mut x);
            projected_gradient(&q, &mut x, project_simplex_row);
            x
        })
        .collect();
    let mut z_new = Array2::zeros((z.nrows(), k));
    for (n, x) in solved.into_iter().enumerate() {
        for (slot, v) in z_new.row_mut(n).iter_mut().zip(x) {
            *slot = v;
        }
    }
    z_new
}

/// Fits the expertise model by alternating minimization.
pub fn emf_fit(observed: &ObservedMatrix, hp: &Hyperparams) -> Result<(FactorModel, TrainReport)> {
    emf_fit_with(observed, hp, |_, _| {})
}

/// Like [`emf_fit`], calling `observer` with the model and objective after
/// every outer iteration.
pub fn emf_fit_with<F>(
    observed: &ObservedMatrix,
    hp: &Hyperparams,
    mut observer: F,
) -> Result<(FactorModel, TrainReport)>
where
    F: FnMut(&FactorModel, f64),
{
    hp.validate()?;
    let data: &SparseMatrix = observed;
    if data.is_empty() {
        return Err(Error::EmptyInput("EMF needs at least one observed entry".into()));
    }
    let (n_rows, n_cols, k) = (data.n_rows(), data.n_cols(), hp.k);
    let mut rng = rng::stream(hp.seed, streams::INIT);
    let mut w = Array2::from_shape_simple_fn((n_rows, k), || Open01.sample(&mut rng));
    let mut z = Array2::from_shape_simple_fn((n_cols, k), || Open01.sample(&mut rng));
    let mut beta = Array1::<f64>::zeros(n_rows);

    for mut row in z.outer_iter_mut() {
        let mut v = row.to_vec();
        project_simplex_row(&mut v);
        row.iter_mut().zip(v).for_each(|(s, x)| *s = x);
    }
    for d in 0..n_rows {
        let mut x = Vec::with_capacity(k + 1);
        x.push(beta[d]);
        x.extend(w.row(d).iter());
        project_row(&mut x);
        beta[d] = x[0];
        w.row_mut(d).iter_mut().zip(&x[1..]).for_each(|(s, v)| *s = *v);
    }

    let rows = data.row_index();
    let cols = data.col_index();
    let mut model = FactorModel::bare(ModelKind::Emf, w, z);
    model.user_bias = Some(beta);
    let initial = training_objective(data, &model, hp);

    let mut trajectory = Vec::with_capacity(hp.max_epochs);
    let mut prev = initial;
    let mut stop = StopReason::MaxEpochs;
    for _ in 0..hp.max_epochs {
        let beta = model.user_bias.as_ref().expect("EMF bias");
        let (w_new, beta_new) = update_user_block(data, &rows, &model.item_factors, &model.user_factors, beta, hp);
        model.user_factors = w_new;
        model.user_bias = Some(beta_new);
        let beta = model.user_bias.as_ref().expect("EMF bias");
        model.item_factors = update_item_block(data, &cols, &model.user_factors, beta, &model.item_factors, hp);

        let obj = training_objective(data, &model, hp);
        trajectory.push(obj);
        observer(&model, obj);
        if converged(prev, obj, hp.rel_tolerance) {
            stop = StopReason::Tolerance;
            break;
        }
        prev = obj;
    }
    model.validate()?;
    let report = TrainReport {
        initial_objective: initial,
        epochs_run: trajectory.len(),
        objective_trajectory: trajectory,
        stop_reason: stop,
        sigma_trajectory: Vec::new(),
    };
    Ok((model, report))
}

/// Runs [`emf_fit`] from `restarts` random starts (seeds derived from
/// `hp.seed`) and keeps the fit with the lowest final objective; ties go to
/// the earlier start. The alternating scheme only finds local minima, so
/// several starts make recovery far more reliable.
pub fn emf_fit_multistart(
    observed: &ObservedMatrix,
    hp: &Hyperparams,
    restarts: usize,
) -> Result<(FactorModel, TrainReport)> {
    if restarts == 0 {
        return Err(Error::InvalidArgument("at least one start is required".into()));
    }
    let fits = (0..restarts as u64)
        .into_par_iter()
        .map(|r| {
            let seed = if r == 0 { hp.seed } else { rng::child_seed(hp.seed, r) };
            emf_fit(observed, &Hyperparams { seed, ..hp.clone() })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut best: Option<(FactorModel, TrainReport)> = None;
    for fit in fits {
        if best.as_ref().is_none_or(|b| fit.1.final_objective() < b.1.final_objective()) {
            best = Some(fit);
        }
    }
    Ok(best.expect("at least one start"))
}
