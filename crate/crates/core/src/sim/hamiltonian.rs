//! Direct minimization of the Lyapunov function
//! `H(m) = < (sum_j I_j (omega_j + m_j xi_j))^2 >_mu` over `m in [-1, 1]^N`.
//!
//! `H` is a convex quadratic, so any point satisfying the box KKT conditions
//! is a global minimizer. Iterates use accelerated projected gradient steps
//! with backtracking on the step size and a restart whenever `H` increases.

use serde::Serialize;
use thiserror::Error;

use super::StrategyTable;
use crate::model::GameConfig;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HamiltonianError {
    #[error("initial magnetizations must have one entry in [-1, 1] per agent")]
    InvalidStart,
    #[error("no KKT point within {iterations} iterations (violation {:e})", best.kkt_violation)]
    MaxItersExceeded { iterations: usize, best: Box<HamiltonianMinimum> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HamiltonianMinimum {
    pub m: Vec<f64>,
    /// `H` at `m` (extensive).
    pub h: f64,
    pub h_per_agent: f64,
    pub iterations: usize,
    /// Largest violation of the box stationarity conditions.
    pub kkt_violation: f64,
}

struct Quadratic {
    p: usize,
    n: usize,
    /// `I_j xi_j^mu`, pattern-major.
    xi: Vec<f64>,
    /// `sum_j I_j omega_j^mu`.
    offset: Vec<f64>,
}

impl Quadratic {
    fn new(table: &StrategyTable, impacts: &[f64]) -> Self {
        let (p, n) = (table.n_patterns(), table.n_agents());
        let mut xi = vec![0.0; p * n];
        let mut offset = vec![0.0; p];
        for j in 0..n {
            for mu in 0..p {
                xi[mu * n + j] = impacts[j] * table.xi(j, mu) as f64;
                offset[mu] += impacts[j] * table.omega(j, mu) as f64;
            }
        }
        Self { p, n, xi, offset }
    }

    fn aggregate(&self, m: &[f64], out: &mut [f64]) {
        for ((o, row), c) in out.iter_mut().zip(self.xi.chunks_exact(self.n)).zip(&self.offset) {
            *o = c + row.iter().zip(m).map(|(x, m)| x * m).sum::<f64>();
        }
    }

    fn value(&self, b: &[f64]) -> f64 {
        b.iter().map(|x| x * x).sum::<f64>() / self.p as f64
    }

    fn gradient(&self, b: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|g| *g = 0.0);
        for (row, bm) in self.xi.chunks_exact(self.n).zip(b) {
            let w = 2.0 * bm / self.p as f64;
            for (g, x) in out.iter_mut().zip(row) {
                *g += w * x;
            }
        }
    }

    /// Power-iteration estimate of the gradient's Lipschitz constant.
    fn lipschitz(&self) -> f64 {
        let mut v = vec![1.0; self.n];
        let mut b = vec![0.0; self.p];
        let mut lambda = 0.0;
        for _ in 0..50 {
            for (bm, row) in b.iter_mut().zip(self.xi.chunks_exact(self.n)) {
                *bm = row.iter().zip(&v).map(|(x, v)| x * v).sum();
            }
            let mut w = vec![0.0; self.n];
            self.gradient(&b, &mut w);
            let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                return 1.0;
            }
            lambda = norm / v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v = w.iter().map(|x| x / norm).collect();
        }
        lambda.max(1e-12)
    }
}

fn kkt_violation(m: &[f64], grad: &[f64]) -> f64 {
    m.iter()
        .zip(grad)
        .map(|(&m, &g)| {
            if m >= 1.0 {
                g.max(0.0)
            } else if m <= -1.0 {
                (-g).max(0.0)
            } else {
                g.abs()
            }
        })
        .fold(0.0, f64::max)
}

/// `H(m)` for the given strategies and impacts.
pub fn hamiltonian(table: &StrategyTable, config: &GameConfig, m: &[f64]) -> f64 {
    let quad = Quadratic::new(table, &table.agent_impacts(config));
    let mut b = vec![0.0; quad.p];
    quad.aggregate(m, &mut b);
    quad.value(&b)
}

/// Minimizes `H` from `init_m` until every agent is stationary to within
/// `tol` (or pinned at a bound with the gradient pushing outwards).
pub fn minimize_hamiltonian(
    table: &StrategyTable,
    config: &GameConfig,
    init_m: &[f64],
    max_iters: usize,
    tol: f64,
) -> Result<HamiltonianMinimum, HamiltonianError> {
    let n = table.n_agents();
    if init_m.len() != n || init_m.iter().any(|m| !(-1.0..=1.0).contains(m)) {
        return Err(HamiltonianError::InvalidStart);
    }
    let quad = Quadratic::new(table, &table.agent_impacts(config));
    let mut lip = quad.lipschitz();

    let mut b = vec![0.0; quad.p];
    let mut grad = vec![0.0; n];
    let mut x = init_m.to_vec();
    quad.aggregate(&x, &mut b);
    let mut h_x = quad.value(&b);
    quad.gradient(&b, &mut grad);
    let mut violation = kkt_violation(&x, &grad);

    let mut y = x.clone();
    let mut h_y = h_x;
    let mut grad_y = grad.clone();
    let mut t: f64 = 1.0;
    let mut candidate = vec![0.0; n];

    let mut iterations = 0;
    while violation >= tol {
        if iterations == max_iters {
            return Err(HamiltonianError::MaxItersExceeded {
                iterations,
                best: Box::new(finish(x, h_x, n, iterations, violation)),
            });
        }
        iterations += 1;

        // Backtracking projected step from y.
        let h_candidate = loop {
            for ((c, &yv), &g) in candidate.iter_mut().zip(&y).zip(&grad_y) {
                *c = (yv - g / lip).clamp(-1.0, 1.0);
            }
            quad.aggregate(&candidate, &mut b);
            let h_c = quad.value(&b);
            let (mut lin, mut sq) = (0.0, 0.0);
            for ((c, yv), g) in candidate.iter().zip(&y).zip(&grad_y) {
                lin += g * (c - yv);
                sq += (c - yv) * (c - yv);
            }
            if h_c <= h_y + lin + 0.5 * lip * sq + 1e-14 * h_y.abs() {
                break h_c;
            }
            lip *= 2.0;
        };

        if h_candidate > h_x && t > 1.0 {
            // Momentum overshot: restart from x.
            t = 1.0;
            y.copy_from_slice(&x);
            h_y = h_x;
            grad_y.copy_from_slice(&grad);
            continue;
        }

        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let beta = (t - 1.0) / t_next;
        for ((yv, &c), &xv) in y.iter_mut().zip(&candidate).zip(&x) {
            *yv = (c + beta * (c - xv)).clamp(-1.0, 1.0);
        }
        t = t_next;
        x.copy_from_slice(&candidate);
        h_x = h_candidate;
        quad.gradient(&b, &mut grad);
        violation = kkt_violation(&x, &grad);

        quad.aggregate(&y, &mut b);
        h_y = quad.value(&b);
        quad.gradient(&b, &mut grad_y);
    }
    Ok(finish(x, h_x, n, iterations, violation))
}

fn finish(m: Vec<f64>, h: f64, n: usize, iterations: usize, kkt_violation: f64) -> HamiltonianMinimum {
    HamiltonianMinimum {
        m,
        h,
        h_per_agent: h / n as f64,
        iterations,
        kkt_violation,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build_config;

    fn unit() -> GameConfig {
        build_config(&[(1.0, 1.0)], 0.5).unwrap()
    }

    #[test]
    fn single_agent_closed_form() {
        // a+ = (1, 1, -1), a- = (-1, 1, 1): omega = (0, 1, 0), xi = (1, 0, -1)
        let table = StrategyTable::from_actions(vec![1], 3, vec![1, 1, -1], vec![-1, 1, 1]).unwrap();
        let cfg = unit();
        let r = minimize_hamiltonian(&table, &cfg, &[0.7], 10_000, 1e-12).unwrap();
        // -<omega xi> / <xi^2> = 0
        assert!(r.m[0].abs() < 1e-8);
        assert!((r.h - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn pinned_agent_reports_kkt_point() {
        // omega = 0 everywhere except where xi = 0; make H = <(1 + m xi)^2>
        // with a second, frozen-strategy agent supplying the constant.
        //   agent 0: a+ = (1, 1), a- = (-1, -1) -> xi = (1, 1)
        //   agent 1: a+ = (1, 1), a- = (1, 1)   -> omega = (1, 1), xi = 0
        // H = (1 + m0)^2 is minimized at m0 = -1 with zero gradient, and
        // agent 1 has zero gradient anywhere.
        let table =
            StrategyTable::from_actions(vec![2], 2, vec![1, 1, 1, 1], vec![-1, -1, 1, 1]).unwrap();
        let r = minimize_hamiltonian(&table, &unit(), &[1.0, 0.3], 10_000, 1e-10).unwrap();
        assert!((r.m[0] + 1.0).abs() < 1e-8);
        assert_eq!(r.m[1], 0.3);
        assert!(r.h < 1e-14);
    }

    #[test]
    fn rejects_bad_start() {
        let table = StrategyTable::random(vec![4], 3, 1).unwrap();
        assert_eq!(
            minimize_hamiltonian(&table, &unit(), &[0.0; 3], 10, 1e-8),
            Err(HamiltonianError::InvalidStart)
        );
        assert_eq!(
            minimize_hamiltonian(&table, &unit(), &[0.0, 0.0, 1.5, 0.0], 10, 1e-8),
            Err(HamiltonianError::InvalidStart)
        );
    }

    #[test]
    fn iteration_cap_returns_best_iterate() {
        let table = StrategyTable::random(vec![50], 20, 3).unwrap();
        let start = vec![0.0; 50];
        let h0 = hamiltonian(&table, &unit(), &start);
        match minimize_hamiltonian(&table, &unit(), &start, 2, 1e-14) {
            Err(HamiltonianError::MaxItersExceeded { iterations, best }) => {
                assert_eq!(iterations, 2);
                assert!(best.h <= h0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn minimum_is_below_random_points() {
        let table = StrategyTable::random(vec![30], 12, 11).unwrap();
        let cfg = unit();
        let r = minimize_hamiltonian(&table, &cfg, &vec![0.0; 30], 100_000, 1e-9).unwrap();
        assert!((hamiltonian(&table, &cfg, &r.m) - r.h).abs() < 1e-12);
        let mut state = 0x2545_f491_4f6c_dd1du64;
        for _ in 0..200 {
            let m: Vec<f64> = (0..30)
                .map(|_| {
                    state ^= state << 13;
                    state ^= state >> 7;
                    state ^= state << 17;
                    (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
                })
                .collect();
            assert!(hamiltonian(&table, &cfg, &m) >= r.h - 1e-12);
        }
    }
}
