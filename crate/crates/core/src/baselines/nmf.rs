use ndarray::Array2;
use rayon::prelude::*;

use super::uniform_factors;
use crate::error::{Error, Result};
use crate::model::{FactorModel, ModelKind};
use crate::objective::{converged, training_objective};
use crate::observed::{ObservedMatrix, SparseMatrix};
use crate::params::{Hyperparams, StopReason, TrainReport};
use crate::qp::{projected_gradient, Quadratic};

fn nonnegative(x: &mut [f64]) {
    x.iter_mut().for_each(|v| *v = v.max(0.0));
}

/// Solves every row of one factor block. `ids[r]` lists the entries in row
/// `r` of the block, `other(e)` gives the fixed factor row paired with
/// entry `e`.
fn solve_block<'a, F>(
    data: &SparseMatrix,
    ids: &[Vec<usize>],
    current: &Array2<f64>,
    lambda: f64,
    other: F,
) -> Array2<f64>
where
    F: Fn(usize) -> ndarray::ArrayView1<'a, f64> + Sync,
{
    let k = current.ncols();
    let weight = 1.0 / data.len() as f64;
    let solved: Vec<Vec<f64>> = ids
        .par_iter()
        .enumerate()
        .map(|(r, ids)| {
            let mut q = Quadratic::ridge(k, lambda);
            let mut a = vec![0.0; k];
            for &i in ids {
                for (slot, &v) in a.iter_mut().zip(other(i)) {
                    *slot = v;
                }
                q.add_residual(&a, data.entries()[i].value, weight);
            }
            let mut x = current.row(r).to_vec();
            nonnegative(&mut x);
            projected_gradient(&q, &mut x, nonnegative);
            x
        })
        .collect();
    let mut out = Array2::zeros(current.dim());
    for (r, x) in solved.into_iter().enumerate() {
        out.row_mut(r).iter_mut().zip(x).for_each(|(s, v)| *s = v);
    }
    out
}

/// Nonnegative MF by alternating nonnegative least squares; each block is
/// solved row by row with projected gradient and an Armijo line search.
pub fn nmf_fit(observed: &ObservedMatrix, hp: &Hyperparams) -> Result<(FactorModel, TrainReport)> {
    nmf_fit_with(observed, hp, |_, _| {})
}

/// Like [`nmf_fit`], calling `observer` after every block update with the
/// model and its objective.
pub fn nmf_fit_with<F>(observed: &ObservedMatrix, hp: &Hyperparams, mut observer: F) -> Result<(FactorModel, TrainReport)>
where
    F: FnMut(&FactorModel, f64),
{
    hp.validate()?;
    let data: &SparseMatrix = observed;
    if data.is_empty() {
        return Err(Error::EmptyInput("NMF needs at least one observed entry".into()));
    }
    let (w, z) = uniform_factors(data.n_rows(), data.n_cols(), hp.k, hp.seed);
    let mut model = FactorModel::bare(ModelKind::Nmf, w, z);
    let rows = data.row_index();
    let cols = data.col_index();
    let initial = training_objective(data, &model, hp);
    let mut trajectory = Vec::with_capacity(hp.max_epochs);
    let mut prev = initial;
    let mut stop = StopReason::MaxEpochs;
    for _ in 0..hp.max_epochs {
        let z = &model.item_factors;
        let w_new = solve_block(data, &rows, &model.user_factors, hp.lambda_u, |i| z.row(data.entries()[i].col));
        model.user_factors = w_new;
        observer(&model, training_objective(data, &model, hp));

        let w = &model.user_factors;
        let z_new = solve_block(data, &cols, &model.item_factors, hp.lambda_i, |i| w.row(data.entries()[i].row));
        model.item_factors = z_new;
        let obj = training_objective(data, &model, hp);
        observer(&model, obj);

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

#[cfg(test)]
mod tests {
    use super::*;

    fn hp(k: usize, lambda: f64) -> Hyperparams {
        Hyperparams { k, lambda_u: lambda, lambda_i: lambda, max_epochs: 200, ..Default::default() }
    }

    #[test]
    fn rank_one_is_fit() {
        let u = [0.2, 0.5, 0.9];
        let v = [0.4, 1.0, 0.7, 0.3];
        let rows: Vec<Vec<f64>> = u.iter().map(|a| v.iter().map(|b| a * b).collect()).collect();
        let obs = ObservedMatrix::from_dense(&rows).unwrap();
        let (_, report) = nmf_fit(&obs, &hp(1, 0.0)).unwrap();
        assert!(report.final_objective() <= 1e-6, "{report:?}");
    }

    #[test]
    fn zeros_give_zero_product() {
        let obs = ObservedMatrix::from_dense(&vec![vec![0.0; 3]; 4]).unwrap();
        let (m, _) = nmf_fit(&obs, &hp(2, 0.1)).unwrap();
        assert!(m.complete().iter().all(|&p| p <= 1e-4));
    }

    #[test]
    fn descent_and_feasibility_after_each_block() {
        let obs = ObservedMatrix::from_dense(&[vec![0.1, 0.8, 0.5], vec![0.9, 0.2, 0.4], vec![0.3, 0.3, 0.6]]).unwrap();
        let mut last = f64::INFINITY;
        nmf_fit_with(&obs, &hp(2, 0.01), |m, obj| {
            assert!(m.user_factors().iter().chain(m.item_factors()).all(|&v| v >= 0.0));
            assert!(obj <= last + 1e-10);
            last = obj;
        })
        .unwrap();
    }
}
