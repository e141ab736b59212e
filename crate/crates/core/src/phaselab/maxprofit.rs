use rayon::prelude::*;
use serde::Serialize;

use super::{
    check_grids, default_impact1_grid, default_lambda1_grid, grid_points, snap, sweep_row,
    PhaseLabError, IMPACT1_MAX, LAMBDA1_MAX, LAMBDA1_MIN,
};
use crate::economics::UtilitySpec;
use crate::model::MIN_IMPACT1;

/// Coarse grid plus the number of local refinements. Each refinement
/// spans one coarse step on either side of the incumbent at a tenth of
/// the step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefineSpec {
    pub lambda1_grid: Vec<f64>,
    pub impact1_grid: Vec<f64>,
    pub levels: usize,
}

impl Default for RefineSpec {
    fn default() -> Self {
        Self {
            lambda1_grid: default_lambda1_grid(),
            impact1_grid: default_impact1_grid(),
            levels: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MaxProfit {
    pub lambda1: f64,
    pub impact1: f64,
    pub profit: f64,
}

const REFINE: usize = 10;

fn step(grid: &[f64]) -> f64 {
    grid.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
}

fn local_axis(center: f64, h: f64, lo: f64, hi: f64) -> Vec<f64> {
    if !h.is_finite() {
        return vec![center];
    }
    let mut axis: Vec<f64> = (0..=2 * REFINE)
        .map(|k| snap(center + (k as f64 - REFINE as f64) * h / REFINE as f64))
        .filter(|x| (lo..=hi).contains(x))
        .collect();
    axis.dedup();
    axis
}

/// Best grid point in serial order; earlier points win ties.
fn best_on(
    utility: UtilitySpec,
    alpha: f64,
    lambda1: &[f64],
    impact1: &[f64],
) -> Result<Option<MaxProfit>, PhaseLabError> {
    let values = grid_points(lambda1, impact1)
        .into_par_iter()
        .map(|(l, i)| {
            let row = sweep_row(alpha, l, i, &[utility])?;
            Ok(row.profits[0].map(|profit| MaxProfit { lambda1: l, impact1: i, profit }))
        })
        .collect::<Result<Vec<_>, PhaseLabError>>()?;
    Ok(values.into_iter().flatten().fold(None, |best, p| match best {
        Some(b) if b.profit >= p.profit => Some(b),
        _ => Some(p),
    }))
}

/// Grid argmax of the overall profit followed by local refinements.
pub fn find_max_profit(
    utility: UtilitySpec,
    alpha: f64,
    spec: &RefineSpec,
) -> Result<MaxProfit, PhaseLabError> {
    check_grids(&spec.lambda1_grid, &spec.impact1_grid)?;
    let mut best = best_on(utility, alpha, &spec.lambda1_grid, &spec.impact1_grid)?
        .ok_or(PhaseLabError::AllNonErgodic)?;
    let (mut hl, mut hi) = (step(&spec.lambda1_grid), step(&spec.impact1_grid));
    for _ in 0..spec.levels {
        let ls = local_axis(best.lambda1, hl, LAMBDA1_MIN, LAMBDA1_MAX);
        let is = local_axis(best.impact1, hi, MIN_IMPACT1, IMPACT1_MAX);
        if let Some(p) = best_on(utility, alpha, &ls, &is)? {
            best = p;
        }
        hl /= REFINE as f64;
        hi /= REFINE as f64;
    }
    Ok(best)
}
