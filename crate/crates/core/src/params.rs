use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Training configuration shared by every solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    /// Latent dimension.
    pub k: usize,
    pub lambda_u: f64,
    pub lambda_i: f64,
    /// SGD step size; ignored by the block-coordinate solvers (EMF, NMF, BMF).
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub rel_tolerance: f64,
    pub seed: u64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            k: 10,
            lambda_u: 0.0,
            lambda_i: 0.0,
            learning_rate: 0.05,
            batch_size: 8,
            max_epochs: 100,
            rel_tolerance: 1e-6,
            seed: 0,
        }
    }
}

impl Hyperparams {
    /// Number of observations below which the small batch size is used.
    pub const SMALL_DATA_THRESHOLD: usize = 5000;

    /// Batch size keyed on dataset scale: 8 entries for small matrices,
    /// 128 for large ones.
    pub fn default_batch_size(n_observed: usize) -> usize {
        if n_observed < Self::SMALL_DATA_THRESHOLD {
            8
        } else {
            128
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidHyperparams(msg));
        if self.k == 0 {
            return fail("latent dimension k must be at least 1".into());
        }
        for (name, v) in [("lambda_u", self.lambda_u), ("lambda_i", self.lambda_i)] {
            if !v.is_finite() || v < 0.0 {
                return fail(format!("{name} must be finite and nonnegative, got {v}"));
            }
        }
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return fail(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            ));
        }
        if self.batch_size == 0 {
            return fail("batch_size must be at least 1".into());
        }
        if self.max_epochs == 0 {
            return fail("max_epochs must be at least 1".into());
        }
        if !self.rel_tolerance.is_finite() || self.rel_tolerance <= 0.0 {
            return fail(format!(
                "rel_tolerance must be positive, got {}",
                self.rel_tolerance
            ));
        }
        Ok(())
    }

    /// Compact `key=value` description used in reports and error contexts.
    pub fn describe(&self) -> String {
        format!(
            "k={} lambda_u={} lambda_i={} learning_rate={} batch_size={} max_epochs={} rel_tolerance={} seed={}",
            self.k,
            self.lambda_u,
            self.lambda_i,
            self.learning_rate,
            self.batch_size,
            self.max_epochs,
            self.rel_tolerance,
            self.seed
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    MaxEpochs,
    Tolerance,
}

/// Objective history of one fit.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Objective before the first update.
    pub initial_objective: f64,
    /// Objective after each epoch (or outer iteration).
    pub objective_trajectory: Vec<f64>,
    pub epochs_run: usize,
    pub stop_reason: StopReason,
    /// Scale parameter after each epoch; empty except for the survival model.
    pub sigma_trajectory: Vec<f64>,
}

impl TrainReport {
    pub fn final_objective(&self) -> f64 {
        self.objective_trajectory
            .last()
            .copied()
            .unwrap_or(self.initial_objective)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_training_protocol() {
        let hp = Hyperparams::default();
        assert_eq!(hp.max_epochs, 100);
        assert_eq!(hp.rel_tolerance, 1e-6);
        assert!(hp.validate().is_ok());
        assert_eq!(Hyperparams::default_batch_size(4999), 8);
        assert_eq!(Hyperparams::default_batch_size(5000), 128);
    }

    #[test]
    fn rejects_invalid() {
        let bad = [
            Hyperparams { k: 0, ..Default::default() },
            Hyperparams { lambda_u: -1.0, ..Default::default() },
            Hyperparams { lambda_i: f64::NAN, ..Default::default() },
            Hyperparams { max_epochs: 0, ..Default::default() },
            Hyperparams { batch_size: 0, ..Default::default() },
            Hyperparams { learning_rate: 0.0, ..Default::default() },
            Hyperparams { rel_tolerance: 0.0, ..Default::default() },
        ];
        for hp in bad {
            assert!(hp.validate().is_err(), "{hp:?}");
        }
    }
}
