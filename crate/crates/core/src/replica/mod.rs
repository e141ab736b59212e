//! Closed-form stationary state of the heterogeneous batch game in the
//! ergodic phase.
//!
//! Everything is a function of one auxiliary saddle-point variable `zeta`.
//! With `E_g = erf(zeta I_g)`, `X_g = exp(-zeta^2 I_g^2)` and
//! `k = 1/sqrt(pi)`, `zeta` solves
//!
//! ```text
//! < 4 zeta^2 I^2 - 2 zeta^2 I^2 E + E - 2 k zeta I X >_G = alpha
//! ```
//!
//! and the phase boundary `(zeta_c, alpha_c)` is the positive root of
//! `< 2 zeta^2 I^2 - zeta^2 I^2 E - k zeta I X >_G = 0` with
//! `alpha_c = <E>_G`. Below `alpha_c` no stationary solution is reported.
//!
//! The left-hand side above is strictly increasing for `zeta >= zeta_c`, so
//! the root is unique whenever it exists.

use serde::Serialize;
use thiserror::Error;

use crate::model::{GameConfig, GroupVector};
use crate::roots::{expand_bracket, find_root, RootError, Tolerance};

/// `1 / sqrt(pi)`.
const INV_SQRT_PI: f64 = 0.564_189_583_547_756_3;

/// Acceptable saddle-point residual, relative to `max(1, alpha)`.
pub const ZETA_RESIDUAL: f64 = 1e-12;

/// Looser residual accepted when observables are evaluated at a caller
/// supplied `zeta` (e.g. `zeta_c` together with `alpha_c`).
pub const OBSERVABLE_RESIDUAL: f64 = 1e-10;

/// Left end of the bracket isolating the positive critical root from the
/// trivial one at zero.
const CRITICAL_BRACKET_LO: f64 = 1e-8;

const MAX_DOUBLINGS: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReplicaError {
    #[error("alpha = {alpha} is below the critical value {alpha_c}; the game is not ergodic")]
    NonErgodic { alpha: f64, alpha_c: f64 },
    #[error("could not bracket the saddle-point root: {0}")]
    NoBracket(RootError),
    #[error("could not isolate the positive critical root: {0}")]
    NoPositiveRoot(RootError),
    #[error("zeta = {zeta} leaves saddle-point residual {residual:e}")]
    ResidualTooLarge { zeta: f64, residual: f64 },
    #[error("critical point does not solve the critical equations (residual {residual:e})")]
    InvalidCriticalPoint { residual: f64 },
}

/// Phase boundary of one group shape.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalPoint {
    pub zeta_c: f64,
    pub alpha_c: f64,
}

/// Every stationary observable at one `(config, zeta)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicaSolution {
    pub alpha: f64,
    pub zeta: f64,
    /// Order parameters `Q_g = I_g^2 <m^2>_g`.
    pub q: GroupVector,
    /// Minimum of the Lyapunov function per agent.
    pub h_per_agent: f64,
    /// Mutual predictabilities, symmetric.
    pub theta: Vec<Vec<f64>>,
    /// Mean predictability of each group, `<I_f theta_fg>_f`.
    pub theta_g: GroupVector,
    pub rho_g: GroupVector,
    pub rho: f64,
    pub sigma2: f64,
    /// Frozen fraction per group.
    pub phi_g: GroupVector,
    pub phi: f64,
    /// Susceptibility; infinite at the critical point.
    pub chi: f64,
}

#[derive(Debug, Clone, Copy)]
struct Terms {
    impact: f64,
    ratio: f64,
    u: f64,
    erf: f64,
    gauss: f64,
}

fn terms(config: &GameConfig, zeta: f64) -> Vec<Terms> {
    config
        .groups()
        .iter()
        .map(|g| {
            let u = zeta * g.impact;
            Terms {
                impact: g.impact,
                ratio: g.ratio,
                u,
                erf: libm::erf(u),
                gauss: (-u * u).exp(),
            }
        })
        .collect()
}

fn mean(ts: &[Terms], f: impl Fn(&Terms) -> f64) -> f64 {
    ts.iter().map(|t| t.ratio * f(t)).sum()
}

/// Left-hand side of the saddle-point equation at `zeta`.
pub fn saddle_lhs(config: &GameConfig, zeta: f64) -> f64 {
    mean(&terms(config, zeta), |t| {
        let u2 = t.u * t.u;
        4.0 * u2 - 2.0 * u2 * t.erf + t.erf - 2.0 * INV_SQRT_PI * t.u * t.gauss
    })
}

/// Left-hand side of the critical equation at `zeta`; zero at `zeta_c`.
pub fn critical_residual(shape: &GameConfig, zeta: f64) -> f64 {
    mean(&terms(shape, zeta), |t| {
        let u2 = t.u * t.u;
        2.0 * u2 - u2 * t.erf - INV_SQRT_PI * t.u * t.gauss
    })
}

/// Locates `(zeta_c, alpha_c)`; `alpha` of `shape` is ignored.
pub fn critical_point(shape: &GameConfig) -> Result<CriticalPoint, ReplicaError> {
    let f = |z| critical_residual(shape, z);
    // Scale the initial upper end so that zeta * max(I) is of order one.
    let max_impact = shape.impacts().fold(0.0, f64::max);
    let hi = (1.0 / max_impact).max(2.0 * CRITICAL_BRACKET_LO);
    let (lo, hi) = expand_bracket(f, CRITICAL_BRACKET_LO, hi, MAX_DOUBLINGS)
        .map_err(ReplicaError::NoPositiveRoot)?;
    let zeta_c = find_root(
        f,
        lo,
        hi,
        Tolerance {
            residual: 1e-15,
            max_iters: 200,
        },
    )
    .or_else(|e| accept_best(e, 1e-12))
    .map_err(ReplicaError::NoPositiveRoot)?;
    let alpha_c = mean(&terms(shape, zeta_c), |t| t.erf);
    Ok(CriticalPoint { zeta_c, alpha_c })
}

fn accept_best(err: RootError, threshold: f64) -> Result<f64, RootError> {
    match err {
        RootError::NotConverged { best, residual, .. } if residual <= threshold => Ok(best),
        e => Err(e),
    }
}

/// Solves the saddle-point equation for `zeta` at `config.alpha()`.
pub fn solve_zeta(config: &GameConfig) -> Result<f64, ReplicaError> {
    let cp = critical_point(config)?;
    solve_zeta_from(config, &cp)
}

/// As [`solve_zeta`], reusing an already computed critical point.
pub fn solve_zeta_from(config: &GameConfig, cp: &CriticalPoint) -> Result<f64, ReplicaError> {
    let alpha = config.alpha();
    if alpha < cp.alpha_c {
        return Err(ReplicaError::NonErgodic {
            alpha,
            alpha_c: cp.alpha_c,
        });
    }
    let scale = alpha.max(1.0);
    let f = |z| saddle_lhs(config, z) - alpha;
    let (lo, hi) = expand_bracket(f, cp.zeta_c, 2.0 * cp.zeta_c, MAX_DOUBLINGS)
        .map_err(ReplicaError::NoBracket)?;
    find_root(
        f,
        lo,
        hi,
        Tolerance {
            residual: 1e-3 * ZETA_RESIDUAL * scale,
            max_iters: 200,
        },
    )
    .or_else(|e| accept_best(e, ZETA_RESIDUAL * scale))
    .map_err(ReplicaError::NoBracket)
}

/// Evaluates all observables; `zeta` must solve the saddle-point equation.
pub fn observables(config: &GameConfig, zeta: f64) -> Result<ReplicaSolution, ReplicaError> {
    let alpha = config.alpha();
    let residual = (saddle_lhs(config, zeta) - alpha).abs();
    if !(residual < OBSERVABLE_RESIDUAL * alpha.max(1.0)) {
        return Err(ReplicaError::ResidualTooLarge { zeta, residual });
    }
    Ok(evaluate(config, zeta))
}

/// Solves for `zeta` and evaluates all observables.
pub fn solve(config: &GameConfig) -> Result<ReplicaSolution, ReplicaError> {
    let zeta = solve_zeta(config)?;
    observables(config, zeta)
}

fn evaluate(config: &GameConfig, zeta: f64) -> ReplicaSolution {
    let alpha = config.alpha();
    let ts = terms(config, zeta);
    let n = ts.len();
    let z2 = zeta * zeta;
    let mean_erf = mean(&ts, |t| t.erf);
    let mean_i2 = mean(&ts, |t| t.impact * t.impact);

    let q = GroupVector::from_fn(n, |g| {
        let t = &ts[g];
        let i2 = t.impact * t.impact;
        i2 - i2 * t.erf + t.erf / (2.0 * z2) - INV_SQRT_PI * t.impact * t.gauss / zeta
    });
    let mean_q_i2 = mean(&ts, |t| t.impact * t.impact) + config.group_mean(&q).unwrap();
    let h_per_agent = 0.5 * mean_q_i2 * (1.0 - mean_erf / alpha).powi(2);

    // T_g = 2 zeta I_g - zeta I_g E_g - k X_g
    let tilt: Vec<f64> = ts
        .iter()
        .map(|t| 2.0 * t.u - t.u * t.erf - INV_SQRT_PI * t.gauss)
        .collect();
    let denom = mean(&ts, |t| t.impact * t.impact * (2.0 - t.erf));
    let gap = (alpha - mean_erf) / (2.0 * alpha);
    let mut theta = vec![vec![0.0; n]; n];
    for f in 0..n {
        for g in f..n {
            let (tf, tg) = (&ts[f], &ts[g]);
            let diag = if f == g {
                (2.0 - tf.erf) / tf.ratio
            } else {
                0.0
            };
            let cross = tf.impact * tg.impact * (2.0 - tf.erf) * (2.0 - tg.erf) / denom;
            let v = tilt[f] * tilt[g] / alpha + gap * (diag - cross);
            theta[f][g] = v;
            theta[g][f] = v;
        }
    }
    let theta_g = GroupVector::from_fn(n, |g| {
        ts.iter()
            .enumerate()
            .map(|(f, t)| t.ratio * t.impact * theta[f][g])
            .sum()
    });

    let rho_g = GroupVector::from_fn(n, |g| {
        let t = &ts[g];
        t.erf / (4.0 * z2 * t.impact) + mean_erf / (2.0 * alpha * zeta) * tilt[g] - t.impact
    });
    let rho = config.group_mean(&rho_g).unwrap();
    let sigma2 = mean_i2 + mean_erf * mean_erf / (4.0 * alpha * z2) - mean_erf / (2.0 * z2);
    let phi_g = GroupVector::from_fn(n, |g| 1.0 - ts[g].erf);
    let chi = if alpha > mean_erf {
        mean_erf / (alpha - mean_erf)
    } else {
        f64::INFINITY
    };

    ReplicaSolution {
        alpha,
        zeta,
        q,
        h_per_agent,
        theta,
        theta_g,
        rho_g,
        rho,
        sigma2,
        phi_g,
        phi: 1.0 - mean_erf,
        chi,
    }
}

fn check_critical(shape: &GameConfig, cp: &CriticalPoint) -> Result<(), ReplicaError> {
    let residual = critical_residual(shape, cp.zeta_c)
        .abs()
        .max((mean(&terms(shape, cp.zeta_c), |t| t.erf) - cp.alpha_c).abs());
    if cp.zeta_c > 0.0 && residual < OBSERVABLE_RESIDUAL {
        Ok(())
    } else {
        Err(ReplicaError::InvalidCriticalPoint { residual })
    }
}

/// Group outcomes at the critical point, from the simplified closed form
/// `rho_g = E_g (1 / (2 zeta_c^2 I_g) - I_g) / 2 - k X_g / (2 zeta_c)`.
pub fn rho_at_critical(shape: &GameConfig, cp: &CriticalPoint) -> Result<GroupVector, ReplicaError> {
    check_critical(shape, cp)?;
    let z = cp.zeta_c;
    let ts = terms(shape, z);
    Ok(GroupVector::from_fn(ts.len(), |g| {
        let t = &ts[g];
        0.5 * t.erf * (1.0 / (2.0 * z * z * t.impact) - t.impact) - INV_SQRT_PI * t.gauss / (2.0 * z)
    }))
}

/// Mean predictabilities at the critical point; these vanish.
pub fn theta_g_at_critical(
    shape: &GameConfig,
    cp: &CriticalPoint,
) -> Result<GroupVector, ReplicaError> {
    Ok(critical_solution(shape, cp)?.theta_g)
}

/// Full observable set at `(zeta_c, alpha_c)`.
pub fn critical_solution(
    shape: &GameConfig,
    cp: &CriticalPoint,
) -> Result<ReplicaSolution, ReplicaError> {
    check_critical(shape, cp)?;
    let at_c = shape
        .with_alpha(cp.alpha_c)
        .map_err(|_| ReplicaError::InvalidCriticalPoint { residual: cp.alpha_c })?;
    observables(&at_c, cp.zeta_c)
}

#[cfg(test)]
mod tests;
