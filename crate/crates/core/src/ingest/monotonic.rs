use std::fmt;
use std::io::Write;

use ndarray::Array2;
use rand::seq::index;
use rand::Rng as _;
use rayon::prelude::*;

use crate::baselines::mf_fit_sparse;
use crate::error::{Error, Result};
use crate::eval::rmse;
use crate::observed::{csv_error, Entry, SparseMatrix};
use crate::params::Hyperparams;
use crate::rng::{self, child_seed, streams};

/// A strictly increasing map of `[0, 1]` applied to the entries before
/// factorization.
#[derive(Debug, Clone)]
pub enum Mapping {
    Identity,
    /// Linear map onto `[lo, hi]`.
    Affine { lo: f64, hi: f64 },
    Square,
    Sqrt,
    /// `u -> ln((u + eps) / (1 - u + eps))`.
    Logit { eps: f64 },
    Custom { name: String, forward: fn(f64) -> f64, inverse: fn(f64) -> f64 },
}

impl Mapping {
    /// Identity, affine onto `[1, 5]`, square, square root and logit with
    /// `eps = 1e-3`.
    pub fn defaults() -> Vec<Mapping> {
        vec![Mapping::Identity, Mapping::Affine { lo: 1.0, hi: 5.0 }, Mapping::Square, Mapping::Sqrt, Mapping::Logit { eps: 1e-3 }]
    }

    pub fn name(&self) -> String {
        match self {
            Mapping::Identity => "identity".into(),
            Mapping::Affine { lo, hi } => format!("affine[{lo},{hi}]"),
            Mapping::Square => "square".into(),
            Mapping::Sqrt => "sqrt".into(),
            Mapping::Logit { eps } => format!("logit(eps={eps})"),
            Mapping::Custom { name, .. } => name.clone(),
        }
    }

    pub fn forward(&self, u: f64) -> f64 {
        match self {
            Mapping::Identity => u,
            Mapping::Affine { lo, hi } => lo + (hi - lo) * u,
            Mapping::Square => u * u,
            Mapping::Sqrt => u.sqrt(),
            Mapping::Logit { eps } => ((u + eps) / (1.0 - u + eps)).ln(),
            Mapping::Custom { forward, .. } => forward(u),
        }
    }

    fn inverse_raw(&self, v: f64) -> f64 {
        match self {
            Mapping::Identity => v,
            Mapping::Affine { lo, hi } => (v - lo) / (hi - lo),
            Mapping::Square => v.sqrt(),
            Mapping::Sqrt => v * v,
            Mapping::Logit { eps } => {
                let e = v.exp();
                ((1.0 + eps) * e - eps) / (1.0 + e)
            }
            Mapping::Custom { inverse, .. } => inverse(v),
        }
    }

    /// Inverse map, with `v` first clamped into the image `[f(0), f(1)]`.
    pub fn inverse(&self, v: f64) -> f64 {
        let v = v.clamp(self.forward(0.0), self.forward(1.0));
        self.inverse_raw(v).clamp(0.0, 1.0)
    }

    /// Checks that the map is finite, strictly increasing and inverted by
    /// [`Mapping::inverse`] on a fine grid of `[0, 1]`.
    pub fn validate(&self) -> Result<()> {
        const STEPS: usize = 1000;
        let fail = |why: &str| Err(Error::InvalidArgument(format!("mapping `{}` {why} on [0, 1]", self.name())));
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=STEPS {
            let u = i as f64 / STEPS as f64;
            let v = self.forward(u);
            if !v.is_finite() {
                return fail("is not finite");
            }
            if v <= prev {
                return fail("is not strictly increasing");
            }
            if (self.inverse(v) - u).abs() > 1e-9 {
                return fail("is not inverted by its inverse");
            }
            prev = v;
        }
        Ok(())
    }
}

impl fmt::Display for Mapping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

#[derive(Debug, Clone)]
pub struct MonotonicConfig {
    pub n_matrices: usize,
    pub n_rows: usize,
    pub n_cols: usize,
    pub train_fractions: Vec<f64>,
    pub mappings: Vec<Mapping>,
    /// MF training settings; the seed is replaced per cell.
    pub hp: Hyperparams,
    pub seed: u64,
}

impl MonotonicConfig {
    /// Five 40x30 matrices, training fractions 0.2 to 0.8 and the default
    /// mappings.
    pub fn new(seed: u64) -> Self {
        MonotonicConfig {
            n_matrices: 5,
            n_rows: 40,
            n_cols: 30,
            train_fractions: vec![0.2, 0.4, 0.6, 0.8],
            mappings: Mapping::defaults(),
            hp: Hyperparams { k: 2, lambda_u: 0.05, lambda_i: 0.05, learning_rate: 0.02, ..Default::default() },
            seed,
        }
    }
}

/// Aggregate over the matrices of one (mapping, fraction) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicRow {
    pub mapping: String,
    pub train_fraction: f64,
    pub mean_rmse: f64,
    pub stderr: f64,
    pub n_matrices: usize,
}

impl MonotonicRow {
    /// Writes `mapping,train_fraction,mean_rmse,stderr,matrices` rows.
    pub fn write_csv<W: Write>(rows: &[MonotonicRow], writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["mapping", "train_fraction", "mean_rmse", "stderr", "matrices"]).map_err(csv_error)?;
        for r in rows {
            w.write_record([
                r.mapping.clone(),
                r.train_fraction.to_string(),
                r.mean_rmse.to_string(),
                r.stderr.to_string(),
                r.n_matrices.to_string(),
            ])
            .map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Tests whether monotone transformations make completion easier.
///
/// Every cell (matrix, mapping, fraction) transforms an i.i.d. uniform
/// matrix, fits biased MF on a random training fraction of its entries,
/// maps the held-out predictions back through the inverse, and measures
/// RMSE on the original scale. All mappings of a (matrix, fraction) pair see
/// the same training entries and the same MF seed. Rows come out in
/// mapping-major, then fraction, order.
pub fn monotonic_experiment(cfg: &MonotonicConfig) -> Result<Vec<MonotonicRow>> {
    if cfg.n_matrices == 0 || cfg.n_rows == 0 || cfg.n_cols == 0 {
        return Err(Error::InvalidArgument("experiment needs at least one nonempty matrix".into()));
    }
    for &f in &cfg.train_fractions {
        if !(f > 0.0 && f < 1.0) {
            return Err(Error::InvalidArgument(format!("training fraction must be in (0, 1), got {f}")));
        }
    }
    for m in &cfg.mappings {
        m.validate()?;
    }
    let matrices: Vec<Array2<f64>> = (0..cfg.n_matrices)
        .map(|i| {
            let mut rng = rng::stream(child_seed(cfg.seed, i as u64), streams::EXPERIMENT);
            Array2::from_shape_simple_fn((cfg.n_rows, cfg.n_cols), || rng.gen::<f64>())
        })
        .collect();

    let cells: Vec<(usize, usize, usize)> = (0..cfg.mappings.len())
        .flat_map(|m| (0..cfg.train_fractions.len()).flat_map(move |f| (0..cfg.n_matrices).map(move |i| (m, f, i))))
        .collect();
    let scores: Vec<Result<f64>> = cells
        .par_iter()
        .map(|&(m, f, i)| run_cell(cfg, &matrices[i], &cfg.mappings[m], f, i))
        .collect();

    let mut rows = Vec::new();
    let mut it = scores.into_iter();
    for mapping in &cfg.mappings {
        for &fraction in &cfg.train_fractions {
            let values = it.by_ref().take(cfg.n_matrices).collect::<Result<Vec<f64>>>()?;
            let (mean_rmse, stderr) = crate::eval::mean_stderr(values.iter().copied());
            rows.push(MonotonicRow { mapping: mapping.name(), train_fraction: fraction, mean_rmse, stderr, n_matrices: values.len() });
        }
    }
    Ok(rows)
}

fn run_cell(cfg: &MonotonicConfig, values: &Array2<f64>, mapping: &Mapping, f: usize, i: usize) -> Result<f64> {
    let (d, n) = values.dim();
    let total = d * n;
    let cell_seed = child_seed(child_seed(cfg.seed, i as u64), f as u64);
    let n_train = ((cfg.train_fractions[f] * total as f64).round() as usize).clamp(1, total - 1);
    let mut is_train = vec![false; total];
    for id in index::sample(&mut rng::stream(cell_seed, streams::SPLIT), total, n_train) {
        is_train[id] = true;
    }
    let train: Vec<Entry> = (0..total)
        .filter(|&id| is_train[id])
        .map(|id| Entry::new(id / n, id % n, mapping.forward(values[[id / n, id % n]])))
        .collect();
    let data = SparseMatrix::new(d, n, train)?;
    let hp = Hyperparams { seed: cell_seed, ..cfg.hp.clone() };
    let (model, _) = mf_fit_sparse(&data, &hp)?;
    let pairs: Vec<(f64, f64)> = (0..total)
        .filter(|&id| !is_train[id])
        .map(|id| {
            let (r, c) = (id / n, id % n);
            Ok((values[[r, c]], mapping.inverse(model.predict(r, c)?)))
        })
        .collect::<Result<_>>()?;
    rmse(&pairs)
}
