use ndarray::{Array1, Array2};
use rand::seq::index;
use rand::Rng as _;
use rand_distr::{Distribution, Normal, Uniform};

use crate::error::{Error, Result};
use crate::model::FactorModel;
use crate::observed::{Entry, ObservedMatrix};
use crate::rng::{self, streams};
use crate::SIGMA_MIN;

/// Reveals `round(density * D * N)` cells of `values`, chosen uniformly
/// without replacement, in row-major order.
pub fn reveal(values: &Array2<f64>, density: f64, seed: u64) -> Result<ObservedMatrix> {
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::InvalidArgument(format!("density must be in (0, 1], got {density}")));
    }
    let (d, n) = values.dim();
    let total = d * n;
    let count = (density * total as f64).round() as usize;
    if count == 0 {
        return Err(Error::EmptyInput(format!("density {density} reveals no entries of a {d}x{n} matrix")));
    }
    let mut ids = index::sample(&mut rng::stream(seed, streams::SYNTH_MASK), total, count).into_vec();
    ids.sort_unstable();
    let entries = ids.into_iter().map(|i| Entry::new(i / n, i % n, values[[i / n, i % n]])).collect();
    ObservedMatrix::new(d, n, entries)
}

fn check_shape(d: usize, n: usize, k: usize) -> Result<()> {
    if d == 0 || n == 0 {
        return Err(Error::EmptyDimensions { n_rows: d, n_cols: n });
    }
    if k == 0 {
        return Err(Error::InvalidArgument("latent dimension must be at least 1".into()));
    }
    Ok(())
}

/// A random feasible expertise model and a revealed sample of its
/// predictions.
///
/// `beta_d ~ U[0, 0.3]`, `w_dk ~ U[0, 1 - beta_d]`, and each `z_n` is
/// uniform on the simplex (gaps between sorted uniforms).
pub fn synth_emf(d: usize, n: usize, k: usize, density: f64, seed: u64) -> Result<(ObservedMatrix, FactorModel)> {
    check_shape(d, n, k)?;
    let mut rng = rng::stream(seed, streams::SYNTH_MODEL);
    let beta = Array1::from_shape_simple_fn(d, || rng.gen_range(0.0..=0.3));
    let mut w = Array2::zeros((d, k));
    for (i, mut row) in w.outer_iter_mut().enumerate() {
        row.iter_mut().for_each(|v| *v = rng.gen_range(0.0..=1.0 - beta[i]));
    }
    let mut z = Array2::zeros((n, k));
    for mut row in z.outer_iter_mut() {
        let mut cuts: Vec<f64> = (0..k - 1).map(|_| rng.gen::<f64>()).collect();
        cuts.sort_by(f64::total_cmp);
        cuts.push(1.0);
        let mut prev = 0.0;
        for (slot, c) in row.iter_mut().zip(cuts) {
            *slot = c - prev;
            prev = c;
        }
    }
    let model = FactorModel::emf(w, z, beta)?;
    let values = model.complete().mapv(|v| v.clamp(0.0, 1.0));
    Ok((reveal(&values, density, seed)?, model))
}

/// A random survival model with scale `sigma_true` and a revealed sample of
/// its predictions.
///
/// `w_dk, z_nk ~ U(0, 1)` and `gamma_n ~ N(K/4, 0.25^2)`, which centers the
/// thresholds on the mean quality `E[w . z] = K/4`.
pub fn synth_smf(d: usize, n: usize, k: usize, sigma_true: f64, density: f64, seed: u64) -> Result<(ObservedMatrix, FactorModel)> {
    check_shape(d, n, k)?;
    if !(sigma_true.is_finite() && sigma_true >= SIGMA_MIN) {
        return Err(Error::SigmaTooSmall { sigma: sigma_true, min: SIGMA_MIN });
    }
    let mut rng = rng::stream(seed, streams::SYNTH_MODEL);
    let unit = Uniform::new(0.0, 1.0);
    let w = Array2::from_shape_simple_fn((d, k), || unit.sample(&mut rng));
    let z = Array2::from_shape_simple_fn((n, k), || unit.sample(&mut rng));
    let normal = Normal::new(k as f64 / 4.0, 0.25).expect("valid normal");
    let gamma = Array1::from_shape_simple_fn(n, || normal.sample(&mut rng));
    let model = FactorModel::smf(w, z, gamma, sigma_true)?;
    Ok((reveal(&model.complete(), density, seed)?, model))
}
