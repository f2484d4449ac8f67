//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use ndarray::{Array1, Array2};
use rand::Rng;
use unitmf::{FactorModel, ModelKind};

/// Squared distance objective `0.5 |x - v|^2`.
pub fn half_sq_dist(x: &[f64], v: &[f64]) -> f64 {
    0.5 * x.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
}

/// Euclidean projection onto the simplex by enumerating every support set
/// and solving the KKT system on it.
pub fn simplex_oracle(v: &[f64]) -> Vec<f64> {
    let k = v.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 1u32..(1 << k) {
        let support: Vec<usize> = (0..k).filter(|i| mask & (1 << i) != 0).collect();
        let tau = (support.iter().map(|&i| v[i]).sum::<f64>() - 1.0) / support.len() as f64;
        let mut x = vec![0.0; k];
        for &i in &support {
            x[i] = v[i] - tau;
        }
        if x.iter().any(|&a| a < -1e-12) {
            continue;
        }
        let f = half_sq_dist(&x, v);
        if best.as_ref().is_none_or(|b| f < b.0) {
            best = Some((f, x));
        }
    }
    best.expect("some support is feasible").1
}

/// Projection of `(beta, v)` onto `{0 <= b <= 1, 0 <= w_k <= 1 - b}` by
/// enumerating which coordinates sit at a lower bound, at the upper bound,
/// or are free, and which bound (if any) `b` sits at.
pub fn emf_row_oracle(beta: f64, v: &[f64]) -> (f64, Vec<f64>) {
    let k = v.len();
    let mut best: Option<(f64, f64, Vec<f64>)> = None;
    let patterns = 3usize.pow(k as u32);
    for p in 0..patterns {
        // 0 = at zero, 1 = at 1 - b, 2 = free
        let states: Vec<usize> = (0..k).map(|i| (p / 3usize.pow(i as u32)) % 3).collect();
        let upper: Vec<usize> = (0..k).filter(|&i| states[i] == 1).collect();
        let free_b = (beta + upper.iter().map(|&i| 1.0 - v[i]).sum::<f64>()) / (1.0 + upper.len() as f64);
        for b in [0.0, 1.0, free_b] {
            let w: Vec<f64> = (0..k)
                .map(|i| match states[i] {
                    0 => 0.0,
                    1 => 1.0 - b,
                    _ => v[i],
                })
                .collect();
            let feasible = (-1e-12..=1.0 + 1e-12).contains(&b) && w.iter().all(|&x| x >= -1e-12 && x <= 1.0 - b + 1e-12);
            if !feasible {
                continue;
            }
            let f = 0.5 * (b - beta).powi(2) + half_sq_dist(&w, v);
            if best.as_ref().is_none_or(|o| f < o.0) {
                best = Some((f, b, w));
            }
        }
    }
    let (_, b, w) = best.expect("origin is always feasible");
    (b, w)
}

/// Standard normal survival `P(Z > r)` by composite Simpson quadrature of
/// the density over `[|r|, |r| + 12]`.
pub fn survival_quadrature(r: f64) -> f64 {
    let a = r.abs();
    let n = 8000;
    let h = 12.0 / n as f64;
    let pdf = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut s = pdf(a) + pdf(a + 12.0);
    for i in 1..n {
        let x = a + i as f64 * h;
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * pdf(x);
    }
    let tail = s * h / 3.0;
    if r >= 0.0 {
        tail
    } else {
        1.0 - tail
    }
}

/// Central-difference derivative of `f` at `x` with step `h`.
pub fn central_difference(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Relative error with an absolute floor of 1e-9.
pub fn gradient_matches(analytic: f64, numeric: f64, rel: f64) -> bool {
    let diff = (analytic - numeric).abs();
    diff <= 1e-9 || diff / analytic.abs().max(numeric.abs()) < rel
}

pub fn uniform_matrix(rng: &mut impl Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || rng.gen_range(lo..hi))
}

pub fn uniform_vector(rng: &mut impl Rng, len: usize, lo: f64, hi: f64) -> Array1<f64> {
    Array1::from_shape_simple_fn(len, || rng.gen_range(lo..hi))
}

/// Rank-one matrix `u v'` with `u, v ~ U(0, 1)`.
pub fn rank_one(rng: &mut impl Rng, rows: usize, cols: usize) -> Array2<f64> {
    let u: Vec<f64> = (0..rows).map(|_| rng.gen()).collect();
    let v: Vec<f64> = (0..cols).map(|_| rng.gen()).collect();
    Array2::from_shape_fn((rows, cols), |(d, n)| u[d] * v[n])
}

/// RMSE of `model` against `truth` on the cells not observed in `seen`.
pub fn held_out_rmse(model: &FactorModel, truth: &Array2<f64>, seen: &unitmf::ObservedMatrix) -> f64 {
    let observed: std::collections::HashSet<(usize, usize)> = seen.entries().iter().map(|e| (e.row, e.col)).collect();
    let pairs: Vec<(f64, f64)> = truth
        .indexed_iter()
        .filter(|(i, _)| !observed.contains(i))
        .map(|((d, n), &v)| (v, model.predict(d, n).unwrap()))
        .collect();
    unitmf::eval::rmse(&pairs).unwrap()
}

/// Random model of `kind` with modest parameter values.
pub fn random_model(rng: &mut impl Rng, kind: ModelKind, d: usize, n: usize, k: usize) -> FactorModel {
    let w = uniform_matrix(rng, d, k, -1.0, 1.0);
    let z = uniform_matrix(rng, n, k, -1.0, 1.0);
    match kind {
        ModelKind::Smf => {
            let gamma = uniform_vector(rng, n, -1.0, 1.0);
            FactorModel::smf(w, z, gamma, rng.gen_range(0.3..2.0)).unwrap()
        }
        ModelKind::Lmf => {
            let beta = uniform_vector(rng, d, -1.0, 1.0);
            let gamma = uniform_vector(rng, n, -1.0, 1.0);
            FactorModel::lmf(w, z, beta, gamma).unwrap()
        }
        other => FactorModel::plain(other, w, z).unwrap(),
    }
}

/// A single scalar parameter of a model.
#[derive(Debug, Clone, Copy)]
pub enum Param {
    W(usize, usize),
    Z(usize, usize),
    UserBias(usize),
    Gamma(usize),
    Sigma,
}

/// Copy of `m` with one parameter shifted by `delta`.
pub fn perturb(m: &FactorModel, p: Param, delta: f64) -> FactorModel {
    let mut w = m.user_factors().clone();
    let mut z = m.item_factors().clone();
    let mut beta = m.user_bias().cloned();
    let mut gamma = m.thresholds().cloned();
    let mut sigma = m.sigma();
    match p {
        Param::W(d, j) => w[[d, j]] += delta,
        Param::Z(n, j) => z[[n, j]] += delta,
        Param::UserBias(d) => beta.as_mut().unwrap()[d] += delta,
        Param::Gamma(n) => gamma.as_mut().unwrap()[n] += delta,
        Param::Sigma => *sigma.as_mut().unwrap() += delta,
    }
    match m.kind() {
        ModelKind::Smf => FactorModel::smf(w, z, gamma.unwrap(), sigma.unwrap()).unwrap(),
        ModelKind::Lmf => FactorModel::lmf(w, z, beta.unwrap(), gamma.unwrap()).unwrap(),
        kind => FactorModel::plain(kind, w, z).unwrap(),
    }
}

/// Outcome of one finite-difference comparison.
#[derive(Debug)]
pub struct GradientCheck {
    pub param: Param,
    pub analytic: f64,
    pub numeric: f64,
}

/// Compares every analytic partial of the per-entry loss of a random SMF,
/// PMF or LMF instance with central differences (step 1e-6). Returns the
/// mismatches.
pub fn check_entry_gradients(rng: &mut impl Rng, kind: ModelKind) -> Vec<GradientCheck> {
    use unitmf::baselines::{lmf_entry_loss, lmf_gradients, pmf_entry_loss, pmf_gradients};
    use unitmf::smf::{smf_entry_loss, smf_gradients};

    let (d_dim, n_dim, k) = (3, 4, rng.gen_range(1..=4));
    let model = random_model(rng, kind, d_dim, n_dim, k);
    let (d, n) = (rng.gen_range(0..d_dim), rng.gen_range(0..n_dim));
    let x: f64 = rng.gen();
    let (lu, li) = (rng.gen_range(0.0..0.5), rng.gen_range(0.0..0.5));
    let (scale, reg_scale) = (rng.gen_range(0.1..1.0), rng.gen_range(0.1..1.0));
    let loss = |m: &FactorModel| match kind {
        ModelKind::Smf => smf_entry_loss(x, m, d, n, lu, li, scale, reg_scale).unwrap(),
        ModelKind::Lmf => lmf_entry_loss(x, m, d, n, lu, li, scale, reg_scale).unwrap(),
        _ => pmf_entry_loss(x, m, d, n, lu, li, scale, reg_scale).unwrap(),
    };
    let mut analytic: Vec<(Param, f64)> = Vec::new();
    match kind {
        ModelKind::Smf => {
            let g = smf_gradients(x, &model, d, n, lu, li, scale, reg_scale).unwrap();
            analytic.extend(g.w.iter().enumerate().map(|(j, &v)| (Param::W(d, j), v)));
            analytic.extend(g.z.iter().enumerate().map(|(j, &v)| (Param::Z(n, j), v)));
            analytic.push((Param::Gamma(n), g.gamma));
            analytic.push((Param::Sigma, g.sigma));
        }
        ModelKind::Lmf => {
            let g = lmf_gradients(x, &model, d, n, lu, li, scale, reg_scale).unwrap();
            analytic.extend(g.w.iter().enumerate().map(|(j, &v)| (Param::W(d, j), v)));
            analytic.extend(g.z.iter().enumerate().map(|(j, &v)| (Param::Z(n, j), v)));
            analytic.push((Param::UserBias(d), g.user_bias));
            analytic.push((Param::Gamma(n), g.gamma));
        }
        _ => {
            let g = pmf_gradients(x, &model, d, n, lu, li, scale, reg_scale).unwrap();
            analytic.extend(g.w.iter().enumerate().map(|(j, &v)| (Param::W(d, j), v)));
            analytic.extend(g.z.iter().enumerate().map(|(j, &v)| (Param::Z(n, j), v)));
        }
    }
    analytic
        .into_iter()
        .filter_map(|(param, a)| {
            let numeric = central_difference(|h| loss(&perturb(&model, param, h)), 0.0, 1e-6);
            (!gradient_matches(a, numeric, 1e-5)).then_some(GradientCheck { param, analytic: a, numeric })
        })
        .collect()
}
