//! Seeded Monte Carlo engine for the batch game.
//!
//! A run draws a random strategy table, lets scores evolve under the batch
//! rule for `transient_steps`, then measures for `measure_steps`. Runs are
//! fully determined by `(GameConfig, SimConfig)`.

mod game;
mod hamiltonian;
mod measure;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::GameConfig;

pub use game::{
    apply_choices, batch_step, group_sizes, init_game, n_patterns, GameState, StrategyTable,
};
pub use hamiltonian::{hamiltonian, minimize_hamiltonian, HamiltonianError, HamiltonianMinimum};
pub use measure::{run_measure, SimResult, FROZEN_THRESHOLD};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("group {group} is empty with {n_agents} agents")]
    GroupEmptyAtThisN { group: usize, n_agents: usize },
    #[error("alpha * N rounds to zero patterns")]
    NoPatterns,
    #[error("need at least one agent per group")]
    TooFewAgents,
    #[error("gamma must be positive and finite, got {0}")]
    BadGamma(f64),
    #[error("at least one measurement step is required")]
    NoMeasurement,
    #[error("strategy table has {found} entries, expected {expected}")]
    TableShape { expected: usize, found: usize },
    #[error("strategy actions must be -1 or +1")]
    BadAction,
}

/// How the volatility is read off each measured step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaEstimator {
    /// `<B^2>_mu` with the sampled strategies.
    #[default]
    Sampled,
    /// Exact expectation of `<B^2>_mu` over the choice distribution given
    /// the current magnetizations.
    Expected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_agents: usize,
    /// Learning rate.
    pub gamma: f64,
    pub transient_steps: usize,
    pub measure_steps: usize,
    pub seed: u64,
    /// Scale each agent's score update by its impact.
    pub impact_weighted_update: bool,
    pub sigma_estimator: SigmaEstimator,
}

/// The default protocol is long enough for the canonical game at `alpha = 0.4`
/// to reach its stationary state; a few hundred steps are not.
impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_agents: 256,
            gamma: 0.1,
            transient_steps: 50_000,
            measure_steps: 10_000,
            seed: 1,
            impact_weighted_update: false,
            sigma_estimator: SigmaEstimator::Sampled,
        }
    }
}

impl SimConfig {
    pub fn validate(&self, config: &GameConfig) -> Result<(), SimError> {
        if self.n_agents < config.n_groups() {
            return Err(SimError::TooFewAgents);
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(SimError::BadGamma(self.gamma));
        }
        if self.measure_steps == 0 {
            return Err(SimError::NoMeasurement);
        }
        Ok(())
    }
}
