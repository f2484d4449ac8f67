//! Parsers for the `--grid` and `--split` arguments of `cv`.

use std::fmt;

use unitmf::Hyperparams;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpecError(pub String);

impl fmt::Display for SpecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for SpecError {}

fn fail<T>(msg: impl Into<String>) -> Result<T, SpecError> {
    Err(SpecError(msg.into()))
}

/// How the observed entries are partitioned for cross-validation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SplitSpec {
    MonteCarlo { rounds: usize, test_fraction: f64 },
    KFold { k: usize },
}

impl std::str::FromStr for SplitSpec {
    type Err = SpecError;

    /// Accepts `mc:ROUNDS:FRACTION` and `kfold:K`.
    fn from_str(s: &str) -> Result<Self, SpecError> {
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        match parts.as_slice() {
            ["mc", rounds, frac] => {
                let rounds = rounds.parse().or_else(|_| fail(format!("bad round count `{rounds}`")))?;
                let test_fraction: f64 = frac.parse().or_else(|_| fail(format!("bad test fraction `{frac}`")))?;
                if rounds == 0 || !(test_fraction > 0.0 && test_fraction < 1.0) {
                    return fail(format!("`{s}` needs at least one round and a fraction in (0, 1)"));
                }
                Ok(SplitSpec::MonteCarlo { rounds, test_fraction })
            }
            ["kfold", k] => {
                let k = k.parse().or_else(|_| fail(format!("bad fold count `{k}`")))?;
                if k < 2 {
                    return fail("k-fold needs k >= 2");
                }
                Ok(SplitSpec::KFold { k })
            }
            _ => fail(format!("split must be `mc:ROUNDS:FRACTION` or `kfold:K`, got `{s}`")),
        }
    }
}

/// Expands `name=v1,v2;name=v3` into the Cartesian product of the listed
/// values applied on top of `base`. The first axis varies slowest. Names are
/// the `Hyperparams` fields; `lambda` sets both penalties. An empty spec
/// yields `[base]`.
pub fn parse_grid(spec: &str, base: &Hyperparams) -> Result<Vec<Hyperparams>, SpecError> {
    let mut grid = vec![base.clone()];
    for axis in spec.split(';').map(str::trim).filter(|a| !a.is_empty()) {
        let Some((name, values)) = axis.split_once('=') else {
            return fail(format!("grid axis `{axis}` is not of the form name=v1,v2"));
        };
        let name = name.trim().replace('-', "_");
        let values: Vec<&str> = values.split(',').map(str::trim).collect();
        if values.iter().any(|v| v.is_empty()) {
            return fail(format!("grid axis `{axis}` has an empty value"));
        }
        let mut next = Vec::with_capacity(grid.len() * values.len());
        for point in &grid {
            for v in &values {
                let mut hp = point.clone();
                set_field(&mut hp, &name, v)?;
                next.push(hp);
            }
        }
        grid = next;
    }
    Ok(grid)
}

fn set_field(hp: &mut Hyperparams, name: &str, value: &str) -> Result<(), SpecError> {
    let float = || value.parse::<f64>().or_else(|_| fail(format!("`{name}` expects a number, got `{value}`")));
    let int = || value.parse::<usize>().or_else(|_| fail(format!("`{name}` expects an integer, got `{value}`")));
    match name {
        "k" => hp.k = int()?,
        "lambda" => {
            hp.lambda_u = float()?;
            hp.lambda_i = hp.lambda_u;
        }
        "lambda_u" => hp.lambda_u = float()?,
        "lambda_i" => hp.lambda_i = float()?,
        "learning_rate" => hp.learning_rate = float()?,
        "batch_size" => hp.batch_size = int()?,
        "max_epochs" => hp.max_epochs = int()?,
        "rel_tolerance" => hp.rel_tolerance = float()?,
        _ => return fail(format!("unknown grid parameter `{name}`")),
    }
    Ok(())
}
