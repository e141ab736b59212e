//! Two-group phase diagrams at fixed `alpha`.
//!
//! A sweep evaluates the replica solution on a `(lambda1, impact1)` grid and
//! emits one [`SweepRow`] per point. Tables round-trip through CSV, which is
//! the canonical output; heatmaps are rendered from the CSV columns.

mod compare;
mod heatmap;
mod maxprofit;
mod table;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::economics::{profit, EconomicsError, UtilitySpec};
use crate::model::{GameConfig, ModelError, MIN_IMPACT1};
use crate::replica::{self, ReplicaError};
use crate::sim::SimError;

pub use compare::{compare, ComparisonEntry, ComparisonReport};
pub use heatmap::{heatmap_svg, render_heatmap};
pub use maxprofit::{find_max_profit, MaxProfit, RefineSpec};
pub use table::{SweepRow, SweepTable, BASE_COLUMNS};

pub const LAMBDA1_MIN: f64 = 0.01;
pub const LAMBDA1_MAX: f64 = 0.99;
pub const IMPACT1_MAX: f64 = 1.0;

#[derive(Debug, Error)]
pub enum PhaseLabError {
    #[error("{axis} grid must be nonempty, strictly increasing and inside [{lo}, {hi}]")]
    BadGrid { axis: &'static str, lo: f64, hi: f64 },
    #[error("every grid point is below its critical alpha")]
    AllNonErgodic,
    #[error("table has no rows")]
    EmptyTable,
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("rows do not form a rectangular (lambda1, impact1) grid")]
    NonRectangularGrid,
    #[error("malformed sweep table: {0}")]
    BadTable(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Replica(#[from] ReplicaError),
    #[error(transparent)]
    Economics(#[from] EconomicsError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// `n` evenly spaced values from `start` to `stop`, rounded to ten decimals
/// so that grids written as `0.01, 0.02, ...` print exactly.
pub fn linspace(start: f64, stop: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![snap(start)],
        _ => (0..n)
            .map(|k| snap(start + (stop - start) * k as f64 / (n - 1) as f64))
            .collect(),
    }
}

pub(crate) fn snap(x: f64) -> f64 {
    (x * 1e10).round() / 1e10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub alpha: f64,
    pub lambda1_grid: Vec<f64>,
    pub impact1_grid: Vec<f64>,
    pub utilities: Vec<UtilitySpec>,
}

impl Default for SweepSpec {
    /// `alpha = 0.4` on the 99 x 100 grid with steps of 0.01.
    fn default() -> Self {
        Self {
            alpha: 0.4,
            lambda1_grid: default_lambda1_grid(),
            impact1_grid: default_impact1_grid(),
            utilities: Vec::new(),
        }
    }
}

pub fn default_lambda1_grid() -> Vec<f64> {
    linspace(LAMBDA1_MIN, LAMBDA1_MAX, 99)
}

pub fn default_impact1_grid() -> Vec<f64> {
    linspace(MIN_IMPACT1, IMPACT1_MAX, 100)
}

fn check_axis(axis: &'static str, grid: &[f64], lo: f64, hi: f64) -> Result<(), PhaseLabError> {
    let inside = grid.iter().all(|x| (lo..=hi).contains(x));
    let increasing = grid.windows(2).all(|w| w[0] < w[1]);
    if grid.is_empty() || !inside || !increasing {
        return Err(PhaseLabError::BadGrid { axis, lo, hi });
    }
    Ok(())
}

pub(crate) fn check_grids(lambda1: &[f64], impact1: &[f64]) -> Result<(), PhaseLabError> {
    check_axis("lambda1", lambda1, LAMBDA1_MIN, LAMBDA1_MAX)?;
    check_axis("impact1", impact1, MIN_IMPACT1, IMPACT1_MAX)
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), PhaseLabError> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(ModelError::NonPositiveAlpha(self.alpha).into());
        }
        check_grids(&self.lambda1_grid, &self.impact1_grid)
    }

    fn points(&self) -> Vec<(f64, f64)> {
        grid_points(&self.lambda1_grid, &self.impact1_grid)
    }
}

/// `lambda1` outer, `impact1` inner.
pub(crate) fn grid_points(lambda1: &[f64], impact1: &[f64]) -> Vec<(f64, f64)> {
    lambda1
        .iter()
        .flat_map(|&l| impact1.iter().map(move |&i| (l, i)))
        .collect()
}

/// Evaluates every grid point. Points below their critical alpha are kept
/// and flagged.
pub fn sweep(spec: &SweepSpec) -> Result<SweepTable, PhaseLabError> {
    spec.validate()?;
    let rows = spec
        .points()
        .into_par_iter()
        .map(|(l, i)| sweep_row(spec.alpha, l, i, &spec.utilities))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SweepTable {
        utilities: spec.utilities.clone(),
        rows,
    })
}

pub(crate) fn sweep_row(
    alpha: f64,
    lambda1: f64,
    impact1: f64,
    utilities: &[UtilitySpec],
) -> Result<SweepRow, PhaseLabError> {
    let config = GameConfig::two_group(lambda1, impact1, alpha)?;
    let impact2 = config.groups()[1].impact;
    let cp = replica::critical_point(&config)?;
    let mut row = SweepRow::empty(lambda1, impact1, impact2, cp.alpha_c, utilities.len());
    let zeta = match replica::solve_zeta_from(&config, &cp) {
        Ok(z) => z,
        Err(ReplicaError::NonErgodic { .. }) => return Ok(row),
        Err(e) => return Err(e.into()),
    };
    let s = replica::observables(&config, zeta)?;
    row.nonergodic = false;
    row.zeta = Some(s.zeta);
    row.sigma2 = Some(s.sigma2);
    row.rho = Some(s.rho);
    row.rho_1 = Some(s.rho_g[0]);
    row.rho_2 = Some(s.rho_g[1]);
    row.theta_11 = Some(s.theta[0][0]);
    row.theta_12 = Some(s.theta[0][1]);
    row.theta_22 = Some(s.theta[1][1]);
    row.phi = Some(s.phi);
    row.phi_1 = Some(s.phi_g[0]);
    row.phi_2 = Some(s.phi_g[1]);
    for (slot, &u) in row.profits.iter_mut().zip(utilities) {
        *slot = Some(profit(&config, &s.rho_g, u)?.overall);
    }
    Ok(row)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalRow {
    pub lambda1: f64,
    pub impact1: f64,
    pub alpha_c: f64,
}

/// Critical alpha over the grid, in sweep order.
pub fn critical_surface(lambda1: &[f64], impact1: &[f64]) -> Result<Vec<CriticalRow>, PhaseLabError> {
    check_grids(lambda1, impact1)?;
    grid_points(lambda1, impact1)
        .into_par_iter()
        .map(|(l, i)| {
            let shape = GameConfig::two_group(l, i, 1.0)?;
            let cp = replica::critical_point(&shape)?;
            Ok(CriticalRow {
                lambda1: l,
                impact1: i,
                alpha_c: cp.alpha_c,
            })
        })
        .collect()
}
