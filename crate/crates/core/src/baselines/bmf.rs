#![allow(clippy::needless_range_loop)]

use ndarray::Array2;

use super::uniform_factors;
use crate::error::{Error, Result};
use crate::model::{FactorModel, ModelKind};
use crate::objective::{converged, training_objective};
use crate::observed::{ObservedMatrix, SparseMatrix};
use crate::params::{Hyperparams, StopReason, TrainReport};
use crate::ROUNDING_GUARD;

/// Uniform `(0, 1)` factors scaled by `sqrt(x_max / max(W Z'))` so that the
/// largest dense prediction equals `x_max` (less a relative 1e-12 rounding
/// margin).
pub fn init_scaled_factors(n_rows: usize, n_cols: usize, k: usize, seed: u64, x_max: f64) -> (Array2<f64>, Array2<f64>) {
    let (mut w, mut z) = uniform_factors(n_rows, n_cols, k, seed);
    let top = w.dot(&z.t()).fold(0.0f64, |a, &b| a.max(b));
    let s = (x_max * (1.0 - ROUNDING_GUARD) / top).sqrt();
    w *= s;
    z *= s;
    (w, z)
}

/// Bounded MF with nonnegative factors whose dense reconstruction stays
/// within `[x_min, x_max]`.
///
/// Each coordinate `w_dk` (then `z_nk`) moves to the minimizer of the
/// regularized loss restricted to that coordinate, clamped to the interval in
/// which every prediction of row `d` (column `n`) stays within bounds.
pub fn bmf_fit(observed: &ObservedMatrix, hp: &Hyperparams, x_min: f64, x_max: f64) -> Result<(FactorModel, TrainReport)> {
    bmf_fit_with(observed, hp, x_min, x_max, |_, _| {})
}

/// Like [`bmf_fit`], calling `observer(W, Z)` after every coordinate update.
pub fn bmf_fit_with<F>(
    observed: &ObservedMatrix,
    hp: &Hyperparams,
    x_min: f64,
    x_max: f64,
    mut observer: F,
) -> Result<(FactorModel, TrainReport)>
where
    F: FnMut(&Array2<f64>, &Array2<f64>),
{
    hp.validate()?;
    if !(x_min.is_finite() && x_max.is_finite() && x_min <= 0.0 && x_max > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "BMF bounds must satisfy x_min <= 0 < x_max, got [{x_min}, {x_max}]"
        )));
    }
    let data: &SparseMatrix = observed;
    if data.is_empty() {
        return Err(Error::EmptyInput("BMF needs at least one observed entry".into()));
    }
    let (n_rows, n_cols, k) = (data.n_rows(), data.n_cols(), hp.k);
    let (w, z) = init_scaled_factors(n_rows, n_cols, k, hp.seed, x_max);
    let mut model = FactorModel::bare(ModelKind::Bmf, w, z);
    let rows = data.row_index();
    let cols = data.col_index();
    let n_obs = data.len() as f64;
    let bounds = Bounds { lo: x_min, hi: x_max * (1.0 - ROUNDING_GUARD) };

    let initial = training_objective(data, &model, hp);
    let mut trajectory = Vec::with_capacity(hp.max_epochs);
    let mut prev = initial;
    let mut stop = StopReason::MaxEpochs;
    for _ in 0..hp.max_epochs {
        // Dense predictions, recomputed each sweep to discard rounding drift.
        let mut pred = model.user_factors.dot(&model.item_factors.t());
        for d in 0..n_rows {
            for j in 0..k {
                let t = coordinate_update(
                    &rows[d],
                    |i| (data.entries()[i].value, data.entries()[i].col),
                    pred.row(d).to_vec().as_slice(),
                    model.item_factors.column(j).to_vec().as_slice(),
                    model.user_factors[[d, j]],
                    n_obs * hp.lambda_u,
                    bounds,
                );
                let delta = t - model.user_factors[[d, j]];
                if delta != 0.0 {
                    model.user_factors[[d, j]] = t;
                    pred.row_mut(d).scaled_add(delta, &model.item_factors.column(j));
                }
                observer(&model.user_factors, &model.item_factors);
            }
        }
        for n in 0..n_cols {
            for j in 0..k {
                let t = coordinate_update(
                    &cols[n],
                    |i| (data.entries()[i].value, data.entries()[i].row),
                    pred.column(n).to_vec().as_slice(),
                    model.user_factors.column(j).to_vec().as_slice(),
                    model.item_factors[[n, j]],
                    n_obs * hp.lambda_i,
                    bounds,
                );
                let delta = t - model.item_factors[[n, j]];
                if delta != 0.0 {
                    model.item_factors[[n, j]] = t;
                    pred.column_mut(n).scaled_add(delta, &model.user_factors.column(j));
                }
                observer(&model.user_factors, &model.item_factors);
            }
        }
        let obj = training_objective(data, &model, hp);
        trajectory.push(obj);
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

#[derive(Clone, Copy)]
struct Bounds {
    lo: f64,
    hi: f64,
}

/// New value of one factor coordinate `t`.
///
/// `pred` holds the current dense predictions along the affected line and
/// `coef` the fixed partner coordinate for every position on it, so the
/// prediction at position `p` is `pred[p] + (t' - t) coef[p]`. `entry(i)`
/// maps an observed entry id to its value and position.
fn coordinate_update<E>(ids: &[usize], entry: E, pred: &[f64], coef: &[f64], t: f64, ridge: f64, b: Bounds) -> f64
where
    E: Fn(usize) -> (f64, usize),
{
    let mut num = 0.0;
    let mut den = ridge;
    for &i in ids {
        let (x, p) = entry(i);
        let rest = pred[p] - t * coef[p];
        num += coef[p] * (x - rest);
        den += coef[p] * coef[p];
    }
    if den <= 0.0 {
        return t;
    }
    let mut lo = 0.0f64;
    let mut hi = f64::INFINITY;
    for (&p, &c) in pred.iter().zip(coef) {
        if c > 0.0 {
            let rest = p - t * c;
            hi = hi.min((b.hi - rest) / c);
            lo = lo.max((b.lo - rest) / c);
        }
    }
    if lo > hi {
        return t;
    }
    (num / den).clamp(lo, hi)
}
