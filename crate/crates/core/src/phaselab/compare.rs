use serde::Serialize;

use super::PhaseLabError;
use crate::model::GameConfig;
use crate::replica::{self, ReplicaSolution};
use crate::sim::{run_measure, SimConfig, SimResult};

/// One observable, side by side.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonEntry {
    pub name: String,
    pub replica: f64,
    pub estimate: f64,
    pub stderr: f64,
    /// `(estimate - replica) / stderr`; `None` when the standard error
    /// vanishes.
    pub z: Option<f64>,
}

impl ComparisonEntry {
    fn new(name: String, replica: f64, estimate: f64, stderr: f64) -> Self {
        let z = (stderr > 0.0).then(|| (estimate - replica) / stderr);
        Self { name, replica, estimate, stderr, z }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub config: GameConfig,
    pub sim_config: SimConfig,
    pub replica: ReplicaSolution,
    pub simulation: SimResult,
    pub entries: Vec<ComparisonEntry>,
}

impl ComparisonReport {
    /// Largest `|z|` over all entries; an entry without a standard error
    /// counts as infinite unless its estimate is exact.
    pub fn max_abs_z(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| match e.z {
                Some(z) => z.abs(),
                None if e.estimate == e.replica => 0.0,
                None => f64::INFINITY,
            })
            .fold(0.0, f64::max)
    }

    pub fn entry(&self, name: &str) -> Option<&ComparisonEntry> {
        self.entries.iter().find(|e| e.name == name)
    }
}

/// Runs one simulation and sets it against the replica solution. Frozen
/// fractions use the binomial error `sqrt(phi (1 - phi) / N_g)` at the
/// replica value.
pub fn compare(config: &GameConfig, sim: &SimConfig) -> Result<ComparisonReport, PhaseLabError> {
    let rep = replica::solve(config)?;
    let est = run_measure(config, sim)?;
    let mut entries = vec![ComparisonEntry::new(
        "sigma2".into(),
        rep.sigma2,
        est.sigma2_hat,
        est.sigma2_stderr,
    )];
    let g_count = config.n_groups();
    for g in 0..g_count {
        entries.push(ComparisonEntry::new(
            format!("rho_{}", g + 1),
            rep.rho_g[g],
            est.rho_g_hat[g],
            est.rho_g_stderr[g],
        ));
    }
    for g in 0..g_count {
        let phi = rep.phi_g[g];
        let stderr = (phi * (1.0 - phi) / est.group_sizes[g] as f64).sqrt();
        entries.push(ComparisonEntry::new(format!("phi_{}", g + 1), phi, est.phi_g_hat[g], stderr));
    }
    let phi_stderr = (rep.phi * (1.0 - rep.phi) / est.n_agents as f64).sqrt();
    entries.push(ComparisonEntry::new("phi".into(), rep.phi, est.phi_hat, phi_stderr));
    for f in 0..g_count {
        for g in f..g_count {
            entries.push(ComparisonEntry::new(
                format!("theta_{}{}", f + 1, g + 1),
                rep.theta[f][g],
                est.theta_hat[f][g],
                est.theta_stderr[f][g],
            ));
        }
    }
    Ok(ComparisonReport {
        config: config.clone(),
        sim_config: sim.clone(),
        replica: rep,
        simulation: est,
        entries,
    })
}
