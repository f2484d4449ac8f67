use rayon::prelude::*;

use super::metrics::{mae, precision_recall_curve, rmse};
use super::report::{EvalReport, RoundMetrics, RANKING_CUTOFFS};
use super::SplitPlan;
use crate::error::{Error, Result};
use crate::model::ModelKind;
use crate::observed::ObservedMatrix;
use crate::params::Hyperparams;

/// Fits `kind` on the training side of `plan` and scores every metric on its
/// test side. RMSE and MAE use evaluation-time predictions (clamped for
/// unbounded models); rankings use raw scores.
pub fn evaluate_split(kind: ModelKind, observed: &ObservedMatrix, hp: &Hyperparams, plan: &SplitPlan) -> Result<RoundMetrics> {
    if plan.test.is_empty() {
        return Err(Error::EmptyInput("split has no test entries".into()));
    }
    let train = observed.subset(&plan.train)?;
    let (model, _) = crate::fit(kind, &train, hp)?;
    let pairs = plan
        .test
        .iter()
        .map(|&i| {
            let e = observed.entries().get(i).ok_or_else(|| Error::InvalidArgument(format!("split refers to missing entry {i}")))?;
            Ok((e.value, model.predict_eval(e.row, e.col)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let curve = precision_recall_curve(&model.complete(), plan, observed, &RANKING_CUTOFFS)?;
    Ok(RoundMetrics {
        rmse: rmse(&pairs)?,
        mae: mae(&pairs)?,
        precision: std::array::from_fn(|i| curve[i].0),
        recall: std::array::from_fn(|i| curve[i].1),
    })
}

/// Fits every grid point on every plan and selects the point with the
/// lowest mean test RMSE; ties go to the earlier grid point. Returns that
/// point with its per-round report.
///
/// Fits run in parallel on the current rayon pool; the outcome does not
/// depend on the number of workers.
pub fn cross_validate(
    kind: ModelKind,
    observed: &ObservedMatrix,
    grid: &[Hyperparams],
    plans: &[SplitPlan],
) -> Result<(Hyperparams, EvalReport)> {
    if grid.is_empty() || plans.is_empty() {
        return Err(Error::EmptyInput("cross-validation needs a nonempty grid and at least one split".into()));
    }
    let cells: Vec<(usize, usize)> = (0..grid.len()).flat_map(|g| (0..plans.len()).map(move |p| (g, p))).collect();
    let results: Vec<Result<RoundMetrics>> = cells
        .par_iter()
        .map(|&(g, p)| {
            evaluate_split(kind, observed, &grid[g], &plans[p]).map_err(|e| Error::GridPoint {
                index: g,
                params: grid[g].describe(),
                source: Box::new(e),
            })
        })
        .collect();
    let mut per_point: Vec<Vec<RoundMetrics>> = vec![Vec::with_capacity(plans.len()); grid.len()];
    for ((g, _), r) in cells.into_iter().zip(results) {
        per_point[g].push(r?);
    }
    let mut best = 0;
    let mut best_rmse = f64::INFINITY;
    let mut reports = Vec::with_capacity(grid.len());
    for (g, rounds) in per_point.into_iter().enumerate() {
        let report = EvalReport::new(rounds)?;
        let score = report.mean_rmse();
        if score < best_rmse {
            best = g;
            best_rmse = score;
        }
        reports.push(report);
    }
    Ok((grid[best].clone(), reports.swap_remove(best)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::split_monte_carlo;

    fn data() -> ObservedMatrix {
        let rows: Vec<Vec<f64>> = (0..6).map(|d| (0..5).map(|n| 0.1 + 0.1 * ((d + n) % 7) as f64).collect()).collect();
        ObservedMatrix::from_dense(&rows).unwrap()
    }

    #[test]
    fn singleton_and_tie_rules() {
        let obs = data();
        let plans = split_monte_carlo(&obs, 2, 0.2, 3).unwrap();
        let hp = Hyperparams { k: 2, max_epochs: 5, ..Default::default() };
        let (best, report) = cross_validate(ModelKind::Emf, &obs, std::slice::from_ref(&hp), &plans).unwrap();
        assert_eq!(best, hp);
        assert_eq!(report.rounds.len(), 2);

        let twin = Hyperparams { ..hp.clone() };
        let (best, _) = cross_validate(ModelKind::Emf, &obs, &[hp.clone(), twin], &plans).unwrap();
        assert_eq!(best, hp);
    }

    #[test]
    fn failing_fit_names_the_grid_point() {
        let obs = data();
        let plans = split_monte_carlo(&obs, 1, 0.2, 3).unwrap();
        let bad = Hyperparams { k: 0, ..Default::default() };
        let err = cross_validate(ModelKind::Pmf, &obs, &[Hyperparams::default(), bad], &plans).unwrap_err();
        assert!(matches!(err, Error::GridPoint { index: 1, .. }), "{err}");
    }
}
