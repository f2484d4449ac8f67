//! Euclidean projections onto the constraint sets of the expertise model.

use crate::error::{Error, Result};

fn check_finite(v: &[f64], what: &str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::non_finite(what))
    }
}

/// Projects `v` onto the probability simplex `{u >= 0, sum(u) = 1}`.
///
/// Sort-based algorithm: with `v` sorted in descending order, the largest
/// `j` such that `v_(j) + (1 - sum_{i<=j} v_(i)) / j > 0` fixes the shift
/// `tau`, and the projection is `max(v + tau, 0)`. Runs in `O(K log K)`.
pub fn project_simplex(v: &[f64]) -> Result<Vec<f64>> {
    let mut out = v.to_vec();
    project_simplex_in_place(&mut out)?;
    Ok(out)
}

pub(crate) fn project_simplex_in_place(v: &mut [f64]) -> Result<()> {
    if v.is_empty() {
        return Err(Error::InvalidArgument("cannot project an empty vector onto the simplex".into()));
    }
    check_finite(v, "simplex projection input")?;
    let tau = simplex_shift(v);
    for x in v.iter_mut() {
        *x = (*x + tau).max(0.0);
    }
    Ok(())
}

fn simplex_shift(v: &[f64]) -> f64 {
    let mut sorted = v.to_vec();
    // Stable sort keeps ties in original index order.
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    for (j, &x) in sorted.iter().enumerate() {
        cumsum += x;
        let candidate = (1.0 - cumsum) / (j + 1) as f64;
        if x + candidate > 0.0 {
            tau = candidate;
        }
    }
    tau
}

/// Projects `(beta, w)` onto `{beta >= 0, w >= 0, beta + w_k <= 1 for all k}`.
///
/// For a fixed `beta` the closest feasible `w` is `clamp(w, 0, 1 - beta)`.
/// Substituting leaves the convex, continuously differentiable function
/// `g(b) = (b - beta)^2 + sum_k dist(w_k, [0, 1 - b])^2` on `[0, 1]`, whose
/// derivative is piecewise linear. The root of `g'` is bracketed by
/// bisection until both ends share the same set of clamped coordinates, and
/// then solved exactly on that linear piece.
pub fn project_emf_row(beta: f64, w: &[f64]) -> Result<(f64, Vec<f64>)> {
    let mut out = w.to_vec();
    let b = project_emf_row_in_place(beta, &mut out)?;
    Ok((b, out))
}

/// Bisection stops once the bracket is narrower than this.
const BISECTION_TOL: f64 = 1e-10;

pub(crate) fn project_emf_row_in_place(beta: f64, w: &mut [f64]) -> Result<f64> {
    if w.is_empty() {
        return Err(Error::InvalidArgument("EMF row projection needs K >= 1".into()));
    }
    if !beta.is_finite() {
        return Err(Error::non_finite("EMF bias"));
    }
    check_finite(w, "EMF user factors")?;

    // Half-derivative of g: (b - beta) + sum_{k: w_k > 1 - b} (w_k - 1 + b).
    let slope = |b: f64| -> f64 {
        let cap = 1.0 - b;
        (b - beta) + w.iter().filter(|&&x| x > cap).map(|&x| x - cap).sum::<f64>()
    };
    let active = |b: f64| -> Vec<bool> { w.iter().map(|&x| x > 1.0 - b).collect() };
    // Root of the linear piece on which the coordinates flagged in `set`
    // are clamped at the cap.
    let solve_piece = |set: &[bool]| -> f64 {
        let (count, excess) = w
            .iter()
            .zip(set)
            .filter(|(_, &on)| on)
            .fold((0usize, 0.0), |(c, s), (&x, _)| (c + 1, s + (1.0 - x)));
        (beta + excess) / (1 + count) as f64
    };

    let b = if slope(0.0) >= 0.0 {
        0.0
    } else if slope(1.0) <= 0.0 {
        1.0
    } else {
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        loop {
            let set_lo = active(lo);
            if set_lo == active(hi) || hi - lo < BISECTION_TOL {
                break solve_piece(&set_lo).clamp(lo, hi);
            }
            let mid = 0.5 * (lo + hi);
            if slope(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    };

    let cap = 1.0 - b;
    for x in w.iter_mut() {
        *x = x.clamp(0.0, cap);
    }
    Ok(b)
}
