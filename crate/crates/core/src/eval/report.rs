use std::io::Write;

use crate::error::{Error, Result};
use crate::observed::csv_error;

/// Ranking cutoffs reported for Precision@N and Recall@N.
pub const RANKING_CUTOFFS: [usize; 4] = [2, 3, 5, 10];

/// All metrics of one evaluation round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundMetrics {
    pub rmse: f64,
    pub mae: f64,
    /// Indexed like [`RANKING_CUTOFFS`].
    pub precision: [f64; 4],
    pub recall: [f64; 4],
}

/// Mean and standard error of one metric across rounds.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSummary {
    pub metric: &'static str,
    /// Ranking cutoff; `None` for RMSE and MAE.
    pub n: Option<usize>,
    pub mean: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub rounds: Vec<RoundMetrics>,
}

impl EvalReport {
    pub fn new(rounds: Vec<RoundMetrics>) -> Result<Self> {
        if rounds.is_empty() {
            return Err(Error::EmptyInput("an evaluation report needs at least one round".into()));
        }
        Ok(EvalReport { rounds })
    }

    pub fn mean_rmse(&self) -> f64 {
        mean_stderr(self.rounds.iter().map(|r| r.rmse)).0
    }

    /// One summary per metric: RMSE, MAE, then Precision@N and Recall@N for
    /// each cutoff.
    pub fn summary(&self) -> Vec<MetricSummary> {
        let summarize = |metric, n, f: &dyn Fn(&RoundMetrics) -> f64| {
            let (mean, stderr) = mean_stderr(self.rounds.iter().map(f));
            MetricSummary { metric, n, mean, stderr }
        };
        let mut out = vec![summarize("RMSE", None, &|r| r.rmse), summarize("MAE", None, &|r| r.mae)];
        for (i, &n) in RANKING_CUTOFFS.iter().enumerate() {
            out.push(summarize("Precision", Some(n), &|r| r.precision[i]));
        }
        for (i, &n) in RANKING_CUTOFFS.iter().enumerate() {
            out.push(summarize("Recall", Some(n), &|r| r.recall[i]));
        }
        out
    }

    /// Writes `metric,N,mean,stderr` rows.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["metric", "N", "mean", "stderr"]).map_err(csv_error)?;
        for s in self.summary() {
            let n = s.n.map(|n| n.to_string()).unwrap_or_default();
            w.write_record([s.metric.to_string(), n, s.mean.to_string(), s.stderr.to_string()])
                .map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }
}

impl std::fmt::Display for EvalReport {
    /// Table rows formatted as `mean (stderr)`.
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for s in self.summary() {
            let name = match s.n {
                Some(n) => format!("{}@{}", s.metric, n),
                None => s.metric.to_string(),
            };
            writeln!(f, "{name:<13} {:.4} ({:.4})", s.mean, s.stderr)?;
        }
        Ok(())
    }
}

/// Sample mean and standard error `s / sqrt(n)`; zero error for one sample.
pub fn mean_stderr(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let v: Vec<f64> = values.collect();
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn round(rmse: f64) -> RoundMetrics {
        RoundMetrics { rmse, mae: rmse / 2.0, precision: [0.5; 4], recall: [0.25, 0.5, 0.75, 1.0] }
    }

    #[test]
    fn standard_error_is_sample_std_over_sqrt_rounds() {
        let (m, se) = mean_stderr([1.0, 2.0, 3.0].into_iter());
        assert_eq!(m, 2.0);
        assert!((se - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(mean_stderr([4.0].into_iter()), (4.0, 0.0));
    }

    #[test]
    fn csv_layout() {
        let report = EvalReport::new(vec![round(0.1), round(0.3)]).unwrap();
        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 11);
        assert_eq!(lines[0], "metric,N,mean,stderr");
        assert!(lines[1].starts_with("RMSE,,0.2,"));
        assert!(lines[3].starts_with("Precision,2,"));
        assert!(lines[10].starts_with("Recall,10,1,0"));
        assert!(EvalReport::new(vec![]).is_err());
    }
}
