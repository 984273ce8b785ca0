use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How subdomains see each other's tentative labels within one sweep.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Exchange {
    /// Gauss–Seidel-like: each visit sees the latest labels.
    #[default]
    Multiplicative,
    /// Jacobi-like: each visit sees the labels from the start of the sweep.
    Additive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnealConfig {
    pub theta: f64,
    pub total_steps_per_dof: u64,
    pub steps_per_dof_per_sweep: u64,
    #[serde(default = "default_t_initial")]
    pub t_initial: f64,
    #[serde(default = "default_t_final_fraction")]
    pub t_final_fraction: f64,
    #[serde(default = "default_x")]
    pub x: usize,
    #[serde(default)]
    pub y: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub exchange: Exchange,
}

fn default_t_initial() -> f64 {
    1.0
}

fn default_t_final_fraction() -> f64 {
    0.1
}

fn default_x() -> usize {
    1
}

impl AnnealConfig {
    pub fn new(theta: f64, total_steps_per_dof: u64, steps_per_dof_per_sweep: u64, seed: u64) -> Self {
        AnnealConfig {
            theta,
            total_steps_per_dof,
            steps_per_dof_per_sweep,
            t_initial: default_t_initial(),
            t_final_fraction: default_t_final_fraction(),
            x: default_x(),
            y: 0,
            seed,
            exchange: Exchange::Multiplicative,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(self.theta > 0.5 && self.theta <= 1.0) {
            return bad(format!("theta must lie in (1/2, 1], got {}", self.theta));
        }
        if self.x + self.y == 0 {
            return bad("x + y must be at least 1".into());
        }
        if !(self.t_final_fraction > 0.0 && self.t_final_fraction < 1.0) {
            return bad(format!("t_final_fraction must lie in (0, 1), got {}", self.t_final_fraction));
        }
        if !(self.t_initial > 0.0) {
            return bad("t_initial must be positive".into());
        }
        if self.steps_per_dof_per_sweep == 0 && self.total_steps_per_dof > 0 {
            return bad("steps_per_dof_per_sweep must be positive".into());
        }
        if self.steps_per_dof_per_sweep > self.total_steps_per_dof {
            return bad("steps_per_dof_per_sweep cannot exceed total_steps_per_dof".into());
        }
        Ok(())
    }

    /// Number of Gauss–Seidel sweeps the budget buys.
    pub fn sweeps(&self) -> u64 {
        if self.total_steps_per_dof == 0 {
            0
        } else {
            (self.total_steps_per_dof / self.steps_per_dof_per_sweep).max(1)
        }
    }
}

/// Cooling factor with `alpha^n_ts = t_final_fraction`.
pub fn temperature_schedule(t_final_fraction: f64, n_ts: u64) -> Result<f64> {
    if n_ts == 0 {
        return Err(Error::InvalidArgument("n_ts must be at least 1".into()));
    }
    Ok(t_final_fraction.powf(1.0 / n_ts as f64))
}
