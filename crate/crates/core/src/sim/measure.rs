//! Stationary estimators from a simulated trajectory.

use serde::Serialize;

use super::game::{dot, init_game, Engine, StrategyTable};
use super::{SigmaEstimator, SimConfig, SimError};
use crate::model::{GameConfig, GroupVector};

/// `|m| >= FROZEN_THRESHOLD` counts as frozen.
pub const FROZEN_THRESHOLD: f64 = 0.98;

const BLOCKS: usize = 10;

/// Estimates from one run. Group averages use the realized group sizes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult {
    pub n_agents: usize,
    pub n_patterns: usize,
    pub group_sizes: Vec<usize>,
    pub sigma2_hat: f64,
    pub sigma2_stderr: f64,
    pub rho_g_hat: GroupVector,
    pub rho_g_stderr: GroupVector,
    pub rho_hat: f64,
    pub rho_stderr: f64,
    /// Predictabilities from time-averaged magnetizations; biased upwards by
    /// a term of order `1 / measure_steps`.
    pub theta_hat: Vec<Vec<f64>>,
    /// Batch-means spread of the same estimator evaluated per block.
    pub theta_stderr: Vec<Vec<f64>>,
    pub phi_g_hat: GroupVector,
    pub phi_hat: f64,
    /// Time-averaged magnetizations, per group.
    pub m_bar: Vec<Vec<f64>>,
    /// Share of frozen agents whose score difference grew towards the
    /// preferred strategy over the measurement window; `None` if no agent
    /// froze.
    pub frozen_drift_consistent: Option<f64>,
}

impl SimResult {
    /// Realized fraction `N_g / N`.
    pub fn group_fraction(&self, g: usize) -> f64 {
        self.group_sizes[g] as f64 / self.n_agents as f64
    }

    pub fn group_mean(&self, v: &[f64]) -> f64 {
        v.iter()
            .enumerate()
            .map(|(g, x)| self.group_fraction(g) * x)
            .sum()
    }
}

#[derive(Default)]
struct Accumulator {
    sum: f64,
    blocks: Vec<f64>,
    block_sum: f64,
    block_len: usize,
}

impl Accumulator {
    fn push(&mut self, x: f64) {
        self.sum += x;
        self.block_sum += x;
        self.block_len += 1;
    }

    fn close_block(&mut self) {
        if self.block_len > 0 {
            self.blocks.push(self.block_sum / self.block_len as f64);
        }
        self.block_sum = 0.0;
        self.block_len = 0;
    }

    fn mean(&self, n: usize) -> f64 {
        self.sum / n as f64
    }

    /// Batch-means standard error.
    fn stderr(&self) -> f64 {
        let k = self.blocks.len();
        if k < 2 {
            return 0.0;
        }
        let mean = self.blocks.iter().sum::<f64>() / k as f64;
        let var = self.blocks.iter().map(|b| (b - mean).powi(2)).sum::<f64>() / (k - 1) as f64;
        (var / k as f64).sqrt()
    }
}

/// Runs one seeded trajectory and measures the stationary observables.
pub fn run_measure(config: &GameConfig, sim: &SimConfig) -> Result<SimResult, SimError> {
    let (table, mut state) = init_game(config, sim)?;
    let n = table.n_agents();
    let p = table.n_patterns();
    let n_groups = config.n_groups();
    let sizes = table.group_sizes().to_vec();
    let mut engine = Engine::new(&table, config);

    for _ in 0..sim.transient_steps {
        engine.step(&mut state, sim);
    }

    let steps = sim.measure_steps;
    let n_blocks = BLOCKS.min(steps);
    let block_end = |b: usize| (b + 1) * steps / n_blocks;

    let mut sigma = Accumulator::default();
    let mut rho_groups: Vec<Accumulator> = (0..n_groups).map(|_| Accumulator::default()).collect();
    let mut rho_all = Accumulator::default();
    let mut m_sum = vec![0.0; n];
    let mut m_block = vec![0.0; n];
    let mut theta_blocks: Vec<Vec<Accumulator>> = (0..n_groups)
        .map(|_| (0..n_groups).map(|_| Accumulator::default()).collect())
        .collect();
    let mut block_start = 0;
    let q_start = state.q.clone();
    let mut rho_step = vec![0.0; n_groups];
    let mut block = 0;

    for step in 0..steps {
        engine.step(&mut state, sim);
        let b = &state.aggregate;

        let s2 = match sim.sigma_estimator {
            SigmaEstimator::Sampled => b.iter().map(|x| x * x).sum::<f64>() / p as f64,
            SigmaEstimator::Expected => expected_b2(&engine, &state.m),
        };
        sigma.push(s2 / n as f64);

        rho_step.iter_mut().for_each(|r| *r = 0.0);
        for j in 0..n {
            let ab = dot(engine.omega_row(j), b) / p as f64 + state.s[j] as f64 * engine.xi_b()[j];
            rho_step[table.group_of(j)] -= ab;
            m_sum[j] += state.m[j];
            m_block[j] += state.m[j];
        }
        let mut overall = 0.0;
        for g in 0..n_groups {
            let r = rho_step[g] / sizes[g] as f64;
            rho_groups[g].push(r);
            overall += sizes[g] as f64 / n as f64 * r;
        }
        rho_all.push(overall);

        if step + 1 == block_end(block) {
            sigma.close_block();
            rho_all.close_block();
            rho_groups.iter_mut().for_each(Accumulator::close_block);
            let len = (step + 1 - block_start) as f64;
            m_block.iter_mut().for_each(|m| *m /= len);
            let theta = predictability(&engine, &table, &sizes, &m_block);
            for (row, acc) in theta.iter().zip(theta_blocks.iter_mut()) {
                for (&v, a) in row.iter().zip(acc.iter_mut()) {
                    a.push(v);
                    a.close_block();
                }
            }
            m_block.iter_mut().for_each(|m| *m = 0.0);
            block_start = step + 1;
            block += 1;
        }
    }

    let m_bar: Vec<f64> = m_sum.iter().map(|s| s / steps as f64).collect();

    let theta_hat = predictability(&engine, &table, &sizes, &m_bar);

    let mut frozen = vec![0usize; n_groups];
    let mut frozen_total = 0usize;
    let mut drifting = 0usize;
    let mut m_bar_groups: Vec<Vec<f64>> = sizes.iter().map(|&s| Vec::with_capacity(s)).collect();
    for j in 0..n {
        let g = table.group_of(j);
        m_bar_groups[g].push(m_bar[j]);
        if m_bar[j].abs() >= FROZEN_THRESHOLD {
            frozen[g] += 1;
            frozen_total += 1;
            if m_bar[j].signum() * (state.q[j] - q_start[j]) > 0.0 {
                drifting += 1;
            }
        }
    }
    let phi_g_hat = GroupVector::from_fn(n_groups, |g| frozen[g] as f64 / sizes[g] as f64);

    let mut result = SimResult {
        n_agents: n,
        n_patterns: p,
        group_sizes: sizes.clone(),
        sigma2_hat: sigma.mean(steps),
        sigma2_stderr: sigma.stderr(),
        rho_g_hat: GroupVector::from_fn(n_groups, |g| rho_groups[g].mean(steps)),
        rho_g_stderr: GroupVector::from_fn(n_groups, |g| rho_groups[g].stderr()),
        rho_hat: rho_all.mean(steps),
        rho_stderr: rho_all.stderr(),
        theta_hat,
        theta_stderr: theta_blocks
            .iter()
            .map(|row| row.iter().map(Accumulator::stderr).collect())
            .collect(),
        phi_g_hat,
        phi_hat: 0.0,
        m_bar: m_bar_groups,
        frozen_drift_consistent: (frozen_total > 0).then(|| drifting as f64 / frozen_total as f64),
    };
    result.phi_hat = result.group_mean(&result.phi_g_hat);
    Ok(result)
}

/// `theta_fg = N / (N_f N_g) <A_f A_g>_mu` with attendances evaluated at the
/// magnetizations `m`.
fn predictability(engine: &Engine, table: &StrategyTable, sizes: &[usize], m: &[f64]) -> Vec<Vec<f64>> {
    let n_groups = sizes.len();
    let p = engine.omega_row(0).len();
    let n: usize = sizes.iter().sum();
    let mut a = vec![vec![0.0; p]; n_groups];
    for (j, &mj) in m.iter().enumerate() {
        let row = &mut a[table.group_of(j)];
        for ((x, &omega), &xi) in row.iter_mut().zip(engine.omega_row(j)).zip(engine.xi_row(j)) {
            *x += omega + mj * xi;
        }
    }
    let mut theta = vec![vec![0.0; n_groups]; n_groups];
    for f in 0..n_groups {
        for g in f..n_groups {
            let v = n as f64 / (sizes[f] * sizes[g]) as f64 * dot(&a[f], &a[g]) / p as f64;
            theta[f][g] = v;
            theta[g][f] = v;
        }
    }
    theta
}

/// `<B^2>_mu` averaged over strategy choices with magnetizations `m`.
fn expected_b2(engine: &Engine, m: &[f64]) -> f64 {
    let p = engine.omega_row(0).len();
    let mut mean_b = vec![0.0; p];
    let mut var = 0.0;
    for (j, (&w, &mj)) in engine.impacts().iter().zip(m).enumerate() {
        let xi = engine.xi_row(j);
        for ((bm, &omega), &x) in mean_b.iter_mut().zip(engine.omega_row(j)).zip(xi) {
            *bm += w * (omega + mj * x);
        }
        var += w * w * (1.0 - mj * mj) * dot(xi, xi);
    }
    (dot(&mean_b, &mean_b) + var) / p as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_config, two_group_config};
    use crate::replica;

    fn quick(seed: u64) -> SimConfig {
        SimConfig {
            n_agents: 128,
            transient_steps: 100,
            measure_steps: 300,
            seed,
            ..SimConfig::default()
        }
    }

    #[test]
    fn run_is_deterministic() {
        let cfg = two_group_config(0.5, 0.5, 0.4).unwrap();
        assert_eq!(run_measure(&cfg, &quick(4)).unwrap(), run_measure(&cfg, &quick(4)).unwrap());
        assert_ne!(run_measure(&cfg, &quick(4)).unwrap(), run_measure(&cfg, &quick(5)).unwrap());
    }

    #[test]
    fn estimator_identity() {
        let cfg = build_config(&[(0.2, 0.4), (0.5, 1.0), (0.3, 1.3)], 0.6).unwrap();
        let r = run_measure(&cfg, &quick(9)).unwrap();
        let impact_rho: Vec<f64> = cfg.impacts().zip(r.rho_g_hat.iter()).map(|(i, x)| i * x).collect();
        assert!((r.group_mean(&impact_rho) + r.sigma2_hat).abs() < 1e-10);
    }

    #[test]
    fn result_bounds() {
        let cfg = two_group_config(0.3, 0.6, 0.5).unwrap();
        let r = run_measure(&cfg, &quick(2)).unwrap();
        assert!(r.sigma2_stderr >= 0.0 && r.rho_g_stderr.iter().all(|&s| s >= 0.0));
        assert!(r.m_bar.iter().flatten().all(|m| m.abs() <= 1.0));
        assert!(r.phi_g_hat.iter().all(|p| (0.0..=1.0).contains(p)));
        assert_eq!(r.group_sizes.iter().sum::<usize>(), 128);
        assert_eq!(r.n_patterns, 64);
        assert_eq!(r.theta_hat[0][1], r.theta_hat[1][0]);
        assert!(r.theta_stderr.iter().flatten().all(|&s| s >= 0.0));
    }

    #[test]
    fn too_few_agents_for_groups() {
        let cfg = build_config(&[(0.9, 1.0), (0.1, 1.0)], 0.4).unwrap();
        let sc = SimConfig { n_agents: 3, ..SimConfig::default() };
        assert_eq!(
            run_measure(&cfg, &sc),
            Err(SimError::GroupEmptyAtThisN { group: 1, n_agents: 3 })
        );
        let sc = SimConfig { n_agents: 1, ..SimConfig::default() };
        assert_eq!(run_measure(&cfg, &sc), Err(SimError::TooFewAgents));
    }

    #[test]
    fn expected_estimator_agrees_with_sampled() {
        let cfg = build_config(&[(1.0, 1.0)], 1.0).unwrap();
        let a = run_measure(&cfg, &quick(3)).unwrap();
        let b = run_measure(
            &cfg,
            &SimConfig { sigma_estimator: SigmaEstimator::Expected, ..quick(3) },
        )
        .unwrap();
        let tol = 4.0 * (a.sigma2_stderr.powi(2) + b.sigma2_stderr.powi(2)).sqrt();
        assert!((a.sigma2_hat - b.sigma2_hat).abs() < tol.max(0.01));
    }

    #[test]
    fn far_ergodic_volatility() {
        // Deep in the ergodic phase nearly nobody freezes.
        let cfg = build_config(&[(1.0, 1.0)], 4.0).unwrap();
        let r = run_measure(&cfg, &quick(1)).unwrap();
        let s = replica::solve(&cfg).unwrap();
        assert!((r.sigma2_hat - s.sigma2).abs() < 0.05 * s.sigma2, "{} vs {}", r.sigma2_hat, s.sigma2);
    }
}
