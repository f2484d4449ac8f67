//! Loss and convergence primitives shared by all solvers.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::model::FactorModel;
use crate::observed::{ObservedMatrix, SparseMatrix};
use crate::params::Hyperparams;

/// Relative slack applied at the convergence threshold so that decreases
/// which equal the tolerance up to representation error do not count as
/// converged.
const THRESHOLD_SLACK: f64 = 1e-9;

/// `(1/(2|Omega|)) sum (x - xhat)^2` plus the model's Frobenius penalty.
pub fn regularized_squared_loss(
    observed: &ObservedMatrix,
    predictions: &HashMap<(usize, usize), f64>,
    model: &FactorModel,
    hp: &Hyperparams,
) -> Result<f64> {
    if observed.is_empty() {
        return Err(Error::EmptyInput("observed matrix has no entries".into()));
    }
    let mut sum = 0.0;
    for e in observed.entries() {
        let pred = predictions
            .get(&(e.row, e.col))
            .ok_or(Error::MissingPrediction {
                row: e.row,
                col: e.col,
            })?;
        let r = e.value - pred;
        sum += r * r;
    }
    Ok(sum / (2.0 * observed.len() as f64) + model.penalty(hp))
}

/// Full training objective of `model` on `data`: half mean squared error
/// under the model's own prediction rule plus [`FactorModel::penalty`].
pub fn training_objective(data: &SparseMatrix, model: &FactorModel, hp: &Hyperparams) -> f64 {
    mean_half_squared_error(data, model) + model.penalty(hp)
}

pub(crate) fn mean_half_squared_error(data: &SparseMatrix, model: &FactorModel) -> f64 {
    let sum: f64 = data
        .entries()
        .iter()
        .map(|e| {
            let r = e.value - model.predict_unchecked(e.row, e.col);
            r * r
        })
        .sum();
    sum / (2.0 * data.len() as f64)
}

/// Stopping rule on the relative objective decrease
/// `(prev - curr) / curr < rel_tolerance`.
///
/// A non-positive current loss is a perfect fit and counts as converged, as
/// does any increase.
pub fn converged(loss_prev: f64, loss_curr: f64, rel_tolerance: f64) -> bool {
    if loss_curr <= 0.0 {
        return true;
    }
    let rel_decrease = (loss_prev - loss_curr) / loss_curr;
    rel_decrease < rel_tolerance * (1.0 - THRESHOLD_SLACK)
}

/// Clamps a finite value into `[0, 1]`.
pub fn clamp01(v: f64) -> Result<f64> {
    if !v.is_finite() {
        return Err(Error::non_finite("clamp01 input"));
    }
    Ok(v.clamp(0.0, 1.0))
}

pub(crate) fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelKind;
    use crate::observed::Entry;
    use ndarray::array;
    use proptest::prelude::*;

    fn hp(lambda_u: f64, lambda_i: f64) -> Hyperparams {
        Hyperparams {
            lambda_u,
            lambda_i,
            ..Default::default()
        }
    }

    #[test]
    fn loss_examples() {
        let obs = ObservedMatrix::new(1, 1, vec![Entry::new(0, 0, 1.0)]).unwrap();
        let zero = FactorModel::plain(ModelKind::Pmf, array![[0.0]], array![[0.0]]).unwrap();

        let perfect = HashMap::from([((0, 0), 1.0)]);
        assert_eq!(regularized_squared_loss(&obs, &perfect, &zero, &hp(0.0, 0.0)).unwrap(), 0.0);

        let off = HashMap::from([((0, 0), 0.0)]);
        assert_eq!(regularized_squared_loss(&obs, &off, &zero, &hp(0.0, 0.0)).unwrap(), 0.5);

        let w2 = FactorModel::plain(ModelKind::Pmf, array![[2.0]], array![[0.0]]).unwrap();
        assert_eq!(regularized_squared_loss(&obs, &perfect, &w2, &hp(1.0, 0.0)).unwrap(), 2.0);

        let missing = HashMap::new();
        assert!(matches!(
            regularized_squared_loss(&obs, &missing, &zero, &hp(0.0, 0.0)),
            Err(Error::MissingPrediction { row: 0, col: 0 })
        ));
    }

    #[test]
    fn loss_includes_bias_only_when_present() {
        let obs = ObservedMatrix::new(1, 1, vec![Entry::new(0, 0, 0.5)]).unwrap();
        let preds = HashMap::from([((0, 0), 0.5)]);
        let emf = FactorModel::emf(array![[0.0]], array![[1.0]], array![0.5]).unwrap();
        let loss = regularized_squared_loss(&obs, &preds, &emf, &hp(2.0, 0.0)).unwrap();
        assert!((loss - 0.25).abs() < 1e-15);
    }

    #[test]
    fn converged_examples() {
        assert!(converged(1.0, 1.0, 1e-6));
        assert!(!converged(1.0, 0.5, 1e-6));
        assert!(!converged(1.000001, 1.0, 1e-6));
        assert!(converged(1.0000005, 1.0, 1e-6));
        assert!(converged(1.0, 0.0, 1e-6));
        assert!(converged(0.5, 1.0, 1e-6));
    }

    #[test]
    fn clamp_examples() {
        assert_eq!(clamp01(0.5).unwrap(), 0.5);
        assert_eq!(clamp01(-0.2).unwrap(), 0.0);
        assert_eq!(clamp01(1.7).unwrap(), 1.0);
        assert!(clamp01(f64::NAN).is_err());
        assert!(clamp01(f64::INFINITY).is_err());
    }

    #[test]
    fn logistic_is_stable() {
        assert_eq!(logistic(0.0), 0.5);
        assert!(logistic(-800.0) >= 0.0);
        assert_eq!(logistic(800.0), 1.0);
        assert!((logistic(2.0) + logistic(-2.0) - 1.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn loss_is_nonnegative(
            values in proptest::collection::vec(0.0f64..=1.0, 1..6),
            preds in proptest::collection::vec(-3.0f64..3.0, 6),
            w in -2.0f64..2.0,
            lu in 0.0f64..5.0,
            li in 0.0f64..5.0,
        ) {
            let entries: Vec<Entry> = values.iter().enumerate().map(|(i, &v)| Entry::new(0, i, v)).collect();
            let obs = ObservedMatrix::new(1, 6, entries).unwrap();
            let map: HashMap<_, _> = (0..6).map(|i| ((0, i), preds[i])).collect();
            let model = FactorModel::plain(ModelKind::Pmf, array![[w]], ndarray::Array2::ones((6, 1))).unwrap();
            prop_assert!(regularized_squared_loss(&obs, &map, &model, &hp(lu, li)).unwrap() >= 0.0);
        }

        #[test]
        fn converged_is_monotone_in_decrease(
            curr in 1e-6f64..10.0,
            d1 in 0.0f64..1e-3,
            frac in 0.0f64..1.0,
            tol in 1e-8f64..1e-2,
        ) {
            let d2 = d1 * frac;
            if converged(curr + d1, curr, tol) {
                prop_assert!(converged(curr + d2, curr, tol));
            }
        }
    }
}
