//! Strategy tables and the batch update.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{SimConfig, SimError};
use crate::model::GameConfig;

/// Fixed random strategies: two actions per agent and pattern.
///
/// Agents are indexed globally, group by group in configuration order.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyTable {
    n_patterns: usize,
    group_sizes: Vec<usize>,
    group_of: Vec<usize>,
    /// `plus[j * P + mu]`, action of strategy `s = +1`.
    plus: Vec<i8>,
    minus: Vec<i8>,
}

impl StrategyTable {
    /// Builds a table from explicit agent-major action arrays.
    pub fn from_actions(
        group_sizes: Vec<usize>,
        n_patterns: usize,
        plus: Vec<i8>,
        minus: Vec<i8>,
    ) -> Result<Self, SimError> {
        let n: usize = group_sizes.iter().sum();
        if n_patterns == 0 {
            return Err(SimError::NoPatterns);
        }
        if plus.len() != n * n_patterns || minus.len() != n * n_patterns {
            return Err(SimError::TableShape {
                expected: n * n_patterns,
                found: plus.len().max(minus.len()),
            });
        }
        if plus.iter().chain(&minus).any(|&a| a != 1 && a != -1) {
            return Err(SimError::BadAction);
        }
        let group_of = group_sizes
            .iter()
            .enumerate()
            .flat_map(|(g, &n)| std::iter::repeat_n(g, n))
            .collect();
        Ok(Self {
            n_patterns,
            group_sizes,
            group_of,
            plus,
            minus,
        })
    }

    /// Draws every action uniformly from `{-1, +1}`. Agent `j` uses its own
    /// ChaCha stream so its strategies do not depend on `N`.
    pub fn random(group_sizes: Vec<usize>, n_patterns: usize, seed: u64) -> Result<Self, SimError> {
        let n: usize = group_sizes.iter().sum();
        let mut plus = Vec::with_capacity(n * n_patterns);
        let mut minus = Vec::with_capacity(n * n_patterns);
        for j in 0..n {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(1 + j as u64);
            for _ in 0..n_patterns {
                plus.push(if rng.gen::<bool>() { 1 } else { -1 });
                minus.push(if rng.gen::<bool>() { 1 } else { -1 });
            }
        }
        Self::from_actions(group_sizes, n_patterns, plus, minus)
    }

    pub fn n_agents(&self) -> usize {
        self.group_of.len()
    }

    pub fn n_patterns(&self) -> usize {
        self.n_patterns
    }

    pub fn group_sizes(&self) -> &[usize] {
        &self.group_sizes
    }

    pub fn group_of(&self, agent: usize) -> usize {
        self.group_of[agent]
    }

    /// Action of `agent` under pattern `mu` when playing strategy `s`.
    pub fn action(&self, agent: usize, mu: usize, s: i8) -> i8 {
        let k = agent * self.n_patterns + mu;
        if s > 0 {
            self.plus[k]
        } else {
            self.minus[k]
        }
    }

    /// Strategy-independent part `(a+ + a-) / 2`.
    pub fn omega(&self, agent: usize, mu: usize) -> i8 {
        let k = agent * self.n_patterns + mu;
        (self.plus[k] + self.minus[k]) / 2
    }

    /// Strategy-dependent part `(a+ - a-) / 2`.
    pub fn xi(&self, agent: usize, mu: usize) -> i8 {
        let k = agent * self.n_patterns + mu;
        (self.plus[k] - self.minus[k]) / 2
    }

    /// Impact of every agent under `config`.
    pub fn agent_impacts(&self, config: &GameConfig) -> Vec<f64> {
        self.group_of
            .iter()
            .map(|&g| config.groups()[g].impact)
            .collect()
    }
}

/// Mutable state of one run.
#[derive(Debug, Clone)]
pub struct GameState {
    /// Score differences between the two strategies.
    pub q: Vec<f64>,
    /// Strategies in use during the last step.
    pub s: Vec<i8>,
    /// Magnetizations `tanh(gamma q)` the last choices were drawn from.
    pub m: Vec<f64>,
    /// Aggregate `B^mu` of the last step.
    pub aggregate: Vec<f64>,
    pub t: u64,
    rng: ChaCha8Rng,
}

impl GameState {
    pub fn new(n_agents: usize, n_patterns: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(0);
        Self {
            q: vec![0.0; n_agents],
            s: vec![1; n_agents],
            m: vec![0.0; n_agents],
            aggregate: vec![0.0; n_patterns],
            t: 0,
            rng,
        }
    }

    /// Draws `s = +1` with probability `(1 + tanh(gamma q)) / 2`, once per
    /// agent for the whole batch.
    pub fn sample_choices(&mut self, gamma: f64) {
        for ((s, m), &q) in self.s.iter_mut().zip(self.m.iter_mut()).zip(&self.q) {
            *m = (gamma * q).tanh();
            let u: f64 = self.rng.gen();
            *s = if u < 0.5 * (1.0 + *m) { 1 } else { -1 };
        }
    }
}

/// Splits `n` agents over the ratios by the largest-remainder rule.
pub fn group_sizes(config: &GameConfig, n: usize) -> Result<Vec<usize>, SimError> {
    let quotas: Vec<f64> = config.ratios().map(|r| r * n as f64).collect();
    let mut sizes: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = sizes.iter().sum();
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (quotas[a] - quotas[a].floor(), quotas[b] - quotas[b].floor());
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &g in order.iter().take(n.saturating_sub(assigned)) {
        sizes[g] += 1;
    }
    if let Some(group) = sizes.iter().position(|&s| s == 0) {
        return Err(SimError::GroupEmptyAtThisN { group, n_agents: n });
    }
    Ok(sizes)
}

/// `P = round(alpha N)`.
pub fn n_patterns(config: &GameConfig, n_agents: usize) -> Result<usize, SimError> {
    let p = (config.alpha() * n_agents as f64).round();
    if p < 1.0 {
        return Err(SimError::NoPatterns);
    }
    Ok(p as usize)
}

/// Fresh strategies and zero scores for one run.
pub fn init_game(config: &GameConfig, sim: &SimConfig) -> Result<(StrategyTable, GameState), SimError> {
    sim.validate(config)?;
    let sizes = group_sizes(config, sim.n_agents)?;
    let p = n_patterns(config, sim.n_agents)?;
    let table = StrategyTable::random(sizes, p, sim.seed)?;
    let state = GameState::new(sim.n_agents, p, sim.seed);
    Ok((table, state))
}

/// `sum_i a_i b_i` with independent partial sums so the loop vectorizes.
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 8];
    let (ca, cb) = (a.chunks_exact(8), b.chunks_exact(8));
    let tail: f64 = ca
        .remainder()
        .iter()
        .zip(cb.remainder())
        .map(|(x, y)| x * y)
        .sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    acc.iter().sum::<f64>() + tail
}

fn axpy(w: f64, x: &[f64], y: &mut [f64]) {
    for (y, x) in y.iter_mut().zip(x) {
        *y += w * x;
    }
}

/// Aggregates are rebuilt from scratch this often to bound rounding drift.
const REFRESH_EVERY: u64 = 128;

/// Dense view of a table used by the update loop.
///
/// The aggregate is `B = Omega + sum_j I_j s_j xi_j` with the constant part
/// `Omega = sum_j I_j omega_j`; between steps only agents whose strategy
/// flipped contribute to the change of `B`.
pub struct Engine {
    p: usize,
    xi: Vec<f64>,
    omega: Vec<f64>,
    impacts: Vec<f64>,
    base: Vec<f64>,
    /// `<xi_j B>_mu` of the last applied step.
    xi_b: Vec<f64>,
    /// Choices `state.aggregate` currently corresponds to.
    applied: Option<Vec<i8>>,
    since_refresh: u64,
}

impl Engine {
    pub fn new(table: &StrategyTable, config: &GameConfig) -> Self {
        let (n, p) = (table.n_agents(), table.n_patterns());
        let impacts = table.agent_impacts(config);
        let mut xi = Vec::with_capacity(n * p);
        let mut omega = Vec::with_capacity(n * p);
        for j in 0..n {
            for mu in 0..p {
                xi.push(table.xi(j, mu) as f64);
                omega.push(table.omega(j, mu) as f64);
            }
        }
        let mut base = vec![0.0; p];
        for j in 0..n {
            axpy(impacts[j], &omega[j * p..(j + 1) * p], &mut base);
        }
        Self {
            p,
            xi,
            omega,
            impacts,
            base,
            xi_b: vec![0.0; n],
            applied: None,
            since_refresh: 0,
        }
    }

    pub(crate) fn xi_row(&self, j: usize) -> &[f64] {
        &self.xi[j * self.p..(j + 1) * self.p]
    }

    pub(crate) fn omega_row(&self, j: usize) -> &[f64] {
        &self.omega[j * self.p..(j + 1) * self.p]
    }

    pub(crate) fn impacts(&self) -> &[f64] {
        &self.impacts
    }

    /// `<xi_j B>_mu` for every agent, from the last applied step.
    pub(crate) fn xi_b(&self) -> &[f64] {
        &self.xi_b
    }

    fn rebuild(&self, s: &[i8], b: &mut [f64]) {
        b.copy_from_slice(&self.base);
        for (j, &sj) in s.iter().enumerate() {
            axpy(self.impacts[j] * sj as f64, self.xi_row(j), b);
        }
    }

    /// Computes the aggregate for the current choices and applies the score
    /// update `q <- q - <xi B>_mu`, optionally scaled by the agent's impact.
    pub fn apply(&mut self, state: &mut GameState, sim: &SimConfig) {
        let mut b = std::mem::take(&mut state.aggregate);
        match self.applied.as_mut() {
            Some(prev) if self.since_refresh < REFRESH_EVERY => {
                for (j, (old, &new)) in prev.iter_mut().zip(&state.s).enumerate() {
                    if *old != new {
                        axpy(self.impacts[j] * 2.0 * new as f64, &self.xi[j * self.p..(j + 1) * self.p], &mut b);
                        *old = new;
                    }
                }
                self.since_refresh += 1;
            }
            _ => {
                self.rebuild(&state.s, &mut b);
                self.applied = Some(state.s.clone());
                self.since_refresh = 0;
            }
        }
        let inv_p = 1.0 / self.p as f64;
        for (j, q) in state.q.iter_mut().enumerate() {
            let xb = dot(self.xi_row(j), &b) * inv_p;
            self.xi_b[j] = xb;
            let mut dq = -xb;
            if sim.impact_weighted_update {
                dq *= self.impacts[j];
            }
            *q += dq;
        }
        state.aggregate = b;
        state.t += 1;
    }

    /// Draws new choices and applies one batch update.
    pub fn step(&mut self, state: &mut GameState, sim: &SimConfig) {
        state.sample_choices(sim.gamma);
        self.apply(state, sim);
    }
}

/// Applies the batch update for the choices already stored in `state`.
pub fn apply_choices(state: &mut GameState, table: &StrategyTable, config: &GameConfig, sim: &SimConfig) {
    Engine::new(table, config).apply(state, sim);
}

/// One batch step: draw strategies, aggregate over all patterns, update scores.
pub fn batch_step(state: &mut GameState, table: &StrategyTable, config: &GameConfig, sim: &SimConfig) {
    Engine::new(table, config).step(state, sim);
}
