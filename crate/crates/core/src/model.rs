//! Learned factor models and their flat-text serialization.

use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objective::{clamp01, logistic};
use crate::params::Hyperparams;
use crate::special::normal_survival;
use crate::SIGMA_MIN;

/// Tolerance on simplex row sums of the EMF item factors.
pub const SIMPLEX_SUM_TOL: f64 = 1e-9;
/// Slack allowed on the EMF box constraints when validating.
const FEASIBILITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    Mf,
    Nmf,
    Bmf,
    Pmf,
    Lmf,
    Emf,
    Smf,
}

impl ModelKind {
    pub const ALL: [ModelKind; 7] = [
        ModelKind::Mf,
        ModelKind::Nmf,
        ModelKind::Bmf,
        ModelKind::Pmf,
        ModelKind::Lmf,
        ModelKind::Emf,
        ModelKind::Smf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Mf => "MF",
            ModelKind::Nmf => "NMF",
            ModelKind::Bmf => "BMF",
            ModelKind::Pmf => "PMF",
            ModelKind::Lmf => "LMF",
            ModelKind::Emf => "EMF",
            ModelKind::Smf => "SMF",
        }
    }

    /// Whether raw predictions are guaranteed to lie in `[0, 1]`.
    pub fn is_natively_bounded(self) -> bool {
        matches!(self, ModelKind::Lmf | ModelKind::Emf | ModelKind::Smf)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown model kind `{s}`")))
    }
}

/// Learned parameters of any of the seven models.
///
/// Which optional parts are present depends on the kind:
///
/// | kind | user_bias | item_bias | global_mean | thresholds | sigma |
/// |------|-----------|-----------|-------------|------------|-------|
/// | MF   | yes       | yes       | yes         |            |       |
/// | LMF  | yes       |           |             | yes        |       |
/// | EMF  | yes       |           |             |            |       |
/// | SMF  |           |           |             | yes        | yes   |
#[derive(Debug, Clone, PartialEq)]
pub struct FactorModel {
    kind: ModelKind,
    pub(crate) user_factors: Array2<f64>,
    pub(crate) item_factors: Array2<f64>,
    pub(crate) user_bias: Option<Array1<f64>>,
    pub(crate) item_bias: Option<Array1<f64>>,
    pub(crate) global_mean: Option<f64>,
    pub(crate) thresholds: Option<Array1<f64>>,
    pub(crate) sigma: Option<f64>,
}

impl FactorModel {
    pub(crate) fn bare(kind: ModelKind, user_factors: Array2<f64>, item_factors: Array2<f64>) -> Self {
        FactorModel {
            kind,
            user_factors,
            item_factors,
            user_bias: None,
            item_bias: None,
            global_mean: None,
            thresholds: None,
            sigma: None,
        }
    }

    pub fn emf(w: Array2<f64>, z: Array2<f64>, beta: Array1<f64>) -> Result<Self> {
        let mut m = Self::bare(ModelKind::Emf, w, z);
        m.user_bias = Some(beta);
        m.validate()?;
        Ok(m)
    }

    pub fn smf(w: Array2<f64>, z: Array2<f64>, gamma: Array1<f64>, sigma: f64) -> Result<Self> {
        let mut m = Self::bare(ModelKind::Smf, w, z);
        m.thresholds = Some(gamma);
        m.sigma = Some(sigma);
        m.validate()?;
        Ok(m)
    }

    pub fn mf(
        w: Array2<f64>,
        z: Array2<f64>,
        user_bias: Array1<f64>,
        item_bias: Array1<f64>,
        global_mean: f64,
    ) -> Result<Self> {
        let mut m = Self::bare(ModelKind::Mf, w, z);
        m.user_bias = Some(user_bias);
        m.item_bias = Some(item_bias);
        m.global_mean = Some(global_mean);
        m.validate()?;
        Ok(m)
    }

    pub fn lmf(w: Array2<f64>, z: Array2<f64>, user_bias: Array1<f64>, gamma: Array1<f64>) -> Result<Self> {
        let mut m = Self::bare(ModelKind::Lmf, w, z);
        m.user_bias = Some(user_bias);
        m.thresholds = Some(gamma);
        m.validate()?;
        Ok(m)
    }

    /// Plain two-factor model (`NMF`, `BMF` or `PMF`).
    pub fn plain(kind: ModelKind, w: Array2<f64>, z: Array2<f64>) -> Result<Self> {
        if !matches!(kind, ModelKind::Nmf | ModelKind::Bmf | ModelKind::Pmf) {
            return Err(Error::InvalidArgument(format!(
                "{kind} models carry more than two factors"
            )));
        }
        let m = Self::bare(kind, w, z);
        m.validate()?;
        Ok(m)
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn n_rows(&self) -> usize {
        self.user_factors.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.item_factors.nrows()
    }

    pub fn rank(&self) -> usize {
        self.user_factors.ncols()
    }

    pub fn user_factors(&self) -> &Array2<f64> {
        &self.user_factors
    }

    pub fn item_factors(&self) -> &Array2<f64> {
        &self.item_factors
    }

    pub fn user_bias(&self) -> Option<&Array1<f64>> {
        self.user_bias.as_ref()
    }

    pub fn item_bias(&self) -> Option<&Array1<f64>> {
        self.item_bias.as_ref()
    }

    pub fn global_mean(&self) -> Option<f64> {
        self.global_mean
    }

    pub fn thresholds(&self) -> Option<&Array1<f64>> {
        self.thresholds.as_ref()
    }

    pub fn sigma(&self) -> Option<f64> {
        self.sigma
    }

    fn check_index(&self, d: usize, n: usize) -> Result<()> {
        if d >= self.n_rows() || n >= self.n_cols() {
            return Err(Error::IndexOutOfBounds {
                row: d,
                col: n,
                n_rows: self.n_rows(),
                n_cols: self.n_cols(),
            });
        }
        Ok(())
    }

    pub(crate) fn dot(&self, d: usize, n: usize) -> f64 {
        self.user_factors.row(d).dot(&self.item_factors.row(n))
    }

    /// Model prediction for cell `(d, n)` without any clamping.
    pub fn predict(&self, d: usize, n: usize) -> Result<f64> {
        self.check_index(d, n)?;
        Ok(self.predict_unchecked(d, n))
    }

    pub(crate) fn predict_unchecked(&self, d: usize, n: usize) -> f64 {
        let dot = self.dot(d, n);
        match self.kind {
            ModelKind::Nmf | ModelKind::Bmf | ModelKind::Pmf => dot,
            ModelKind::Mf => {
                self.global_mean.unwrap_or(0.0)
                    + self.user_bias.as_ref().map_or(0.0, |b| b[d])
                    + self.item_bias.as_ref().map_or(0.0, |c| c[n])
                    + dot
            }
            ModelKind::Emf => self.user_bias.as_ref().map_or(0.0, |b| b[d]) + dot,
            ModelKind::Lmf => {
                let gamma = self.thresholds.as_ref().map_or(0.0, |g| g[n]);
                let beta = self.user_bias.as_ref().map_or(0.0, |b| b[d]);
                logistic(gamma) * logistic(beta + dot)
            }
            ModelKind::Smf => {
                let gamma = self.thresholds.as_ref().map_or(0.0, |g| g[n]);
                let sigma = self.sigma.unwrap_or(1.0).max(SIGMA_MIN);
                normal_survival(gamma, dot, sigma).unwrap_or(f64::NAN)
            }
        }
    }

    /// Prediction as used for evaluation: unbounded kinds are clamped into
    /// `[0, 1]`, bounded kinds are returned as is.
    pub fn predict_eval(&self, d: usize, n: usize) -> Result<f64> {
        let raw = self.predict(d, n)?;
        if self.kind.is_natively_bounded() {
            Ok(raw)
        } else {
            clamp01(raw)
        }
    }

    /// Dense completion `D x N` of raw predictions.
    pub fn complete(&self) -> Array2<f64> {
        Array2::from_shape_fn((self.n_rows(), self.n_cols()), |(d, n)| {
            self.predict_unchecked(d, n)
        })
    }

    /// Frobenius penalty `(lambda_u/2)(|W|^2 + |b|^2) + (lambda_i/2)(|Z|^2 + |c|^2)`.
    ///
    /// Thresholds, sigma and the global mean are never penalized.
    pub fn penalty(&self, hp: &Hyperparams) -> f64 {
        let sq = |a: &Array2<f64>| a.iter().map(|v| v * v).sum::<f64>();
        let sq1 = |a: &Option<Array1<f64>>| a.as_ref().map_or(0.0, |v| v.dot(v));
        0.5 * hp.lambda_u * (sq(&self.user_factors) + sq1(&self.user_bias))
            + 0.5 * hp.lambda_i * (sq(&self.item_factors) + sq1(&self.item_bias))
    }

    /// Checks shapes and the kind-specific invariants.
    pub fn validate(&self) -> Result<()> {
        let kind = self.kind;
        let fail = |reason: String| {
            Err(Error::InvalidModel {
                kind: kind.name().to_string(),
                reason,
            })
        };
        let (d, n, k) = (self.n_rows(), self.n_cols(), self.rank());
        if d == 0 || n == 0 || k == 0 {
            return fail(format!("empty factor shapes D={d} N={n} K={k}"));
        }
        if self.item_factors.ncols() != k {
            return fail(format!(
                "item factors have {} columns, user factors {k}",
                self.item_factors.ncols()
            ));
        }
        let all_finite = self.user_factors.iter().chain(self.item_factors.iter()).all(|v| v.is_finite())
            && [&self.user_bias, &self.item_bias, &self.thresholds]
                .iter()
                .all(|o| o.as_ref().is_none_or(|v| v.iter().all(|x| x.is_finite())))
            && self.global_mean.is_none_or(f64::is_finite)
            && self.sigma.is_none_or(f64::is_finite);
        if !all_finite {
            return fail("non-finite parameter".into());
        }
        let expect_len = |name: &str, v: &Option<Array1<f64>>, len: usize, required: bool| -> Result<()> {
            match v {
                Some(v) if v.len() != len => fail(format!("{name} has length {}, expected {len}", v.len())),
                None if required => fail(format!("missing {name}")),
                _ => Ok(()),
            }
        };
        let needs = |kinds: &[ModelKind]| kinds.contains(&kind);
        expect_len("user_bias", &self.user_bias, d, needs(&[ModelKind::Mf, ModelKind::Lmf, ModelKind::Emf]))?;
        expect_len("item_bias", &self.item_bias, n, needs(&[ModelKind::Mf]))?;
        expect_len("thresholds", &self.thresholds, n, needs(&[ModelKind::Lmf, ModelKind::Smf]))?;
        if kind == ModelKind::Mf && self.global_mean.is_none() {
            return fail("missing global_mean".into());
        }

        match kind {
            ModelKind::Nmf | ModelKind::Bmf => {
                if self.user_factors.iter().chain(self.item_factors.iter()).any(|&v| v < 0.0) {
                    return fail("negative factor entry".into());
                }
            }
            ModelKind::Smf => match self.sigma {
                Some(s) if s >= SIGMA_MIN => {}
                Some(s) => return fail(format!("sigma {s} below {SIGMA_MIN}")),
                None => return fail("missing sigma".into()),
            },
            ModelKind::Emf => {
                let beta = self.user_bias.as_ref().expect("checked above");
                for (row, w) in self.user_factors.outer_iter().enumerate() {
                    let b = beta[row];
                    if b < 0.0 {
                        return fail(format!("negative bias at row {row}"));
                    }
                    for &v in w {
                        if v < 0.0 || b + v > 1.0 + FEASIBILITY_TOL {
                            return fail(format!("row {row} violates 0 <= w, beta + w <= 1"));
                        }
                    }
                }
                for (row, z) in self.item_factors.outer_iter().enumerate() {
                    if z.iter().any(|&v| v < 0.0) || (z.sum() - 1.0).abs() > SIMPLEX_SUM_TOL {
                        return fail(format!("item row {row} is not on the simplex"));
                    }
                }
            }
            ModelKind::Mf | ModelKind::Pmf | ModelKind::Lmf => {}
        }
        Ok(())
    }

    /// Writes the flat text format: a header line with kind and shape,
    /// followed by named CSV sections.
    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "# kind={},D={},N={},K={}",
            self.kind,
            self.n_rows(),
            self.n_cols(),
            self.rank()
        )?;
        write_matrix(&mut out, "W", &self.user_factors)?;
        write_matrix(&mut out, "Z", &self.item_factors)?;
        if let Some(v) = &self.user_bias {
            write_vector(&mut out, "beta", v)?;
        }
        if let Some(v) = &self.item_bias {
            write_vector(&mut out, "item_bias", v)?;
        }
        if let Some(m) = self.global_mean {
            writeln!(out, "[global_mean]\n{m:?}")?;
        }
        if let Some(v) = &self.thresholds {
            write_vector(&mut out, "gamma", v)?;
        }
        if let Some(s) = self.sigma {
            writeln!(out, "[sigma]\n{s:?}")?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_text<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| Error::Parse {
            line: 1,
            message: "empty model file".into(),
        })?;
        let header = header?;
        let (kind, d, n, k) = parse_header(&header)?;

        let mut sections: Vec<(String, u64, Vec<Vec<f64>>)> = Vec::new();
        for (i, line) in lines {
            let line = line?;
            let lineno = i as u64 + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            if let Some(name) = trimmed.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                sections.push((name.to_string(), lineno, Vec::new()));
                continue;
            }
            let row = trimmed
                .split(',')
                .map(|t| {
                    t.trim().parse::<f64>().map_err(|e| Error::Parse {
                        line: lineno,
                        message: format!("bad number `{t}`: {e}"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            match sections.last_mut() {
                Some((_, _, rows)) => rows.push(row),
                None => {
                    return Err(Error::Parse {
                        line: lineno,
                        message: "data before the first section".into(),
                    })
                }
            }
        }
        let take = |name: &str| sections.iter().find(|(s, _, _)| s == name);
        let matrix = |name: &str, rows: usize| -> Result<Array2<f64>> {
            let (_, line, data) = take(name).ok_or_else(|| Error::Parse {
                line: 1,
                message: format!("missing section [{name}]"),
            })?;
            if data.len() != rows || data.iter().any(|r| r.len() != k) {
                return Err(Error::Parse {
                    line: *line,
                    message: format!("section [{name}] must be {rows}x{k}"),
                });
            }
            Ok(Array2::from_shape_fn((rows, k), |(i, j)| data[i][j]))
        };
        let vector = |name: &str, len: usize| -> Result<Option<Array1<f64>>> {
            let Some((_, line, data)) = take(name) else {
                return Ok(None);
            };
            if data.len() != len || data.iter().any(|r| r.len() != 1) {
                return Err(Error::Parse {
                    line: *line,
                    message: format!("section [{name}] must hold {len} values"),
                });
            }
            Ok(Some(data.iter().map(|r| r[0]).collect()))
        };
        let scalar = |name: &str| -> Result<Option<f64>> { Ok(vector(name, 1)?.map(|v| v[0])) };

        let model = FactorModel {
            kind,
            user_factors: matrix("W", d)?,
            item_factors: matrix("Z", n)?,
            user_bias: vector("beta", d)?,
            item_bias: vector("item_bias", n)?,
            global_mean: scalar("global_mean")?,
            thresholds: vector("gamma", n)?,
            sigma: scalar("sigma")?,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_text(std::io::BufWriter::new(std::fs::File::create(path)?))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_text(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

fn write_matrix<W: Write>(out: &mut W, name: &str, m: &Array2<f64>) -> Result<()> {
    writeln!(out, "[{name}]")?;
    for row in m.outer_iter() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        writeln!(out, "{}", cells.join(","))?;
    }
    Ok(())
}

fn write_vector<W: Write>(out: &mut W, name: &str, v: &Array1<f64>) -> Result<()> {
    writeln!(out, "[{name}]")?;
    for x in v {
        writeln!(out, "{x:?}")?;
    }
    Ok(())
}

fn parse_header(header: &str) -> Result<(ModelKind, usize, usize, usize)> {
    let bad = |message: String| Error::Parse { line: 1, message };
    let body = header
        .strip_prefix('#')
        .ok_or_else(|| bad("header must start with `#`".into()))?;
    let (mut kind, mut d, mut n, mut k) = (None, None, None, None);
    for field in body.trim().split(',') {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| bad(format!("malformed header field `{field}`")))?;
        let dim = || value.trim().parse::<usize>().map_err(|e| bad(format!("{key}: {e}")));
        match key.trim() {
            "kind" => kind = Some(value.trim().parse::<ModelKind>()?),
            "D" => d = Some(dim()?),
            "N" => n = Some(dim()?),
            "K" => k = Some(dim()?),
            other => return Err(bad(format!("unknown header field `{other}`"))),
        }
    }
    match (kind, d, n, k) {
        (Some(kind), Some(d), Some(n), Some(k)) => Ok((kind, d, n, k)),
        _ => Err(bad("header must record kind, D, N and K".into())),
    }
}
