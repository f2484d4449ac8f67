use std::collections::HashSet;

use ndarray::Array2;

use super::SplitPlan;
use crate::error::{Error, Result};
use crate::model::FactorModel;
use crate::observed::SparseMatrix;

fn check_pairs(pairs: &[(f64, f64)]) -> Result<()> {
    if pairs.is_empty() {
        return Err(Error::EmptyInput("metric needs at least one (truth, prediction) pair".into()));
    }
    if pairs.iter().any(|(a, b)| !a.is_finite() || !b.is_finite()) {
        return Err(Error::non_finite("metric input"));
    }
    Ok(())
}

/// Root mean squared error over `(truth, prediction)` pairs.
pub fn rmse(pairs: &[(f64, f64)]) -> Result<f64> {
    check_pairs(pairs)?;
    let sum: f64 = pairs.iter().map(|(t, p)| (t - p) * (t - p)).sum();
    Ok((sum / pairs.len() as f64).sqrt())
}

/// Mean absolute error over `(truth, prediction)` pairs.
pub fn mae(pairs: &[(f64, f64)]) -> Result<f64> {
    check_pairs(pairs)?;
    Ok(pairs.iter().map(|(t, p)| (t - p).abs()).sum::<f64>() / pairs.len() as f64)
}

/// Precision@N and recall@N of `model` on the test side of `split`, ranking
/// by raw model scores.
pub fn precision_recall_at_n(model: &FactorModel, split: &SplitPlan, observed: &SparseMatrix, n: usize) -> Result<(f64, f64)> {
    let curve = precision_recall_curve(&model.complete(), split, observed, &[n])?;
    Ok(curve[0])
}

/// [`precision_recall_at_n`] on an explicit `D x N` score matrix.
pub fn precision_recall_from_scores(scores: &Array2<f64>, split: &SplitPlan, observed: &SparseMatrix, n: usize) -> Result<(f64, f64)> {
    Ok(precision_recall_curve(scores, split, observed, &[n])?[0])
}

/// Precision and recall for every cutoff in `cutoffs`, sharing one ranking
/// per user.
///
/// For each user with at least one test entry, the items not in that user's
/// training set are ranked by score descending (ties by ascending item
/// index); the relevant items are the user's test items. Values are averaged
/// over those users.
pub fn precision_recall_curve(
    scores: &Array2<f64>,
    split: &SplitPlan,
    observed: &SparseMatrix,
    cutoffs: &[usize],
) -> Result<Vec<(f64, f64)>> {
    if cutoffs.contains(&0) {
        return Err(Error::InvalidArgument("ranking cutoff N must be at least 1".into()));
    }
    if scores.dim() != (observed.n_rows(), observed.n_cols()) {
        return Err(Error::InvalidArgument(format!(
            "score matrix {:?} does not match a {}x{} grid",
            scores.dim(),
            observed.n_rows(),
            observed.n_cols()
        )));
    }
    let entries = observed.entries();
    let mut train_items = vec![HashSet::new(); observed.n_rows()];
    for &i in &split.train {
        let e = entries.get(i).ok_or_else(|| bad_id(i))?;
        train_items[e.row].insert(e.col);
    }
    let mut relevant = vec![HashSet::new(); observed.n_rows()];
    for &i in &split.test {
        let e = entries.get(i).ok_or_else(|| bad_id(i))?;
        relevant[e.row].insert(e.col);
    }

    let mut sums = vec![(0.0, 0.0); cutoffs.len()];
    let mut users = 0usize;
    let max_n = cutoffs.iter().copied().max().unwrap_or(0);
    for (d, rel) in relevant.iter().enumerate() {
        if rel.is_empty() {
            continue;
        }
        users += 1;
        let row = scores.row(d);
        let mut candidates: Vec<usize> = (0..observed.n_cols()).filter(|n| !train_items[d].contains(n)).collect();
        candidates.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
        candidates.truncate(max_n);
        for (slot, &n) in sums.iter_mut().zip(cutoffs) {
            let hits = candidates.iter().take(n).filter(|c| rel.contains(c)).count() as f64;
            slot.0 += hits / n as f64;
            slot.1 += hits / rel.len() as f64;
        }
    }
    if users == 0 {
        return Err(Error::EmptyInput("no user has test entries".into()));
    }
    let u = users as f64;
    Ok(sums.into_iter().map(|(p, r)| (p / u, r / u)).collect())
}

fn bad_id(i: usize) -> Error {
    Error::InvalidArgument(format!("split refers to missing entry {i}"))
}
