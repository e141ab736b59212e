use super::*;
use crate::model::{build_config, two_group_config};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Frozen from a 40-digit bisection of the same equations (mpmath).
const CANON_ZETA_C: f64 = 0.308_529_472_070_315_8;
const CANON_ALPHA_C: f64 = 0.337_400_188_587_087_6;
const CANON_ZETA_AT_0_4: f64 = 0.337_920_300_237_404_42;
const SKEW_ZETA_C: f64 = 0.158_910_922_141_799_34;
const SKEW_ALPHA_C: f64 = 0.083_732_645_256_025_78;

fn canonical(alpha: f64) -> GameConfig {
    build_config(&[(1.0, 1.0)], alpha).unwrap()
}

#[test]
fn erf_matches_reference_values() {
    let cases = [
        (0.01, 0.011_283_415_555_849_618),
        (0.5, 0.520_499_877_813_046_5),
        (2.0, 0.995_322_265_018_952_7),
        (5.0, 0.999_999_999_998_462_5),
    ];
    for (x, want) in cases {
        assert!(((libm::erf(x) - want) / want).abs() < 1e-14, "erf({x})");
    }
}

/// Plain bisection on an independently written saddle-point equation.
fn bisection_oracle(alpha: f64) -> f64 {
    let lhs = |z: f64| {
        4.0 * z * z - 2.0 * z * z * libm::erf(z) + libm::erf(z)
            - 2.0 * z * (-z * z).exp() / std::f64::consts::PI.sqrt()
    };
    let (mut a, mut b) = (0.3085, 10.0);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if lhs(m) < alpha {
            a = m
        } else {
            b = m
        }
    }
    0.5 * (a + b)
}

#[test]
fn canonical_critical_point() {
    let cp = critical_point(&canonical(1.0)).unwrap();
    assert!((cp.alpha_c - 0.3374).abs() < 5e-4);
    assert!((cp.alpha_c - CANON_ALPHA_C).abs() < 1e-13);
    assert!((cp.zeta_c - CANON_ZETA_C).abs() < 1e-13);
    assert!(critical_residual(&canonical(1.0), cp.zeta_c).abs() < 1e-12);
}

#[test]
fn degenerate_split_matches_canonical() {
    let cp = critical_point(&build_config(&[(0.5, 1.0), (0.5, 1.0)], 1.0).unwrap()).unwrap();
    assert!((cp.alpha_c - CANON_ALPHA_C).abs() < 1e-13);
}

#[test]
fn skewed_shape_critical_point() {
    let shape = two_group_config(0.9, 0.2, 1.0).unwrap();
    let cp = critical_point(&shape).unwrap();
    assert!(cp.alpha_c < 0.3374);
    assert!((cp.alpha_c - SKEW_ALPHA_C).abs() < 1e-12);
    assert!((cp.zeta_c - SKEW_ZETA_C).abs() < 1e-12);
}

#[test]
fn zeta_at_alpha_0_4() {
    let z = solve_zeta(&canonical(0.4)).unwrap();
    assert!((saddle_lhs(&canonical(0.4), z) - 0.4).abs() < 1e-12);
    assert!((z - CANON_ZETA_AT_0_4).abs() < 1e-12);
    assert!((z - bisection_oracle(0.4)).abs() < 1e-12);
}

#[test]
fn zeta_at_the_critical_alpha_is_zeta_c() {
    let cp = critical_point(&canonical(1.0)).unwrap();
    let z = solve_zeta(&canonical(cp.alpha_c)).unwrap();
    assert!((z - cp.zeta_c).abs() < 1e-9);
    // The rounded literal lies just below alpha_c.
    assert!(matches!(
        solve_zeta(&canonical(0.3374)),
        Err(ReplicaError::NonErgodic { .. })
    ));
}

#[test]
fn zeta_large_alpha_asymptote() {
    let z = solve_zeta(&canonical(100.0)).unwrap();
    let asym = ((100.0 - 1.0) / 2.0f64).sqrt();
    assert!(((z - asym) / asym).abs() < 0.02);
}

#[test]
fn non_ergodic_is_an_error() {
    assert!(matches!(
        solve(&canonical(0.2)),
        Err(ReplicaError::NonErgodic { alpha, .. }) if alpha == 0.2
    ));
}

#[test]
fn observables_reject_wrong_zeta() {
    assert!(matches!(
        observables(&canonical(0.4), 0.5),
        Err(ReplicaError::ResidualTooLarge { .. })
    ));
}

#[test]
fn canonical_observables_at_0_4() {
    // mpmath values of the closed forms at the frozen zeta.
    let s = solve(&canonical(0.4)).unwrap();
    assert!((s.q[0] - 0.751_464_870_072_976_9).abs() < 1e-11);
    assert!((s.h_per_agent - 0.005_862_405_234_250_621).abs() < 1e-12);
    assert!((s.sigma2 - 0.130_129_970_197_762_18).abs() < 1e-11);
    assert!((s.phi - 0.632_727_451_762_251_8).abs() < 1e-12);
    assert!((s.rho + s.sigma2).abs() < 1e-12);
}

#[test]
fn canonical_identities() {
    for alpha in [0.35, 0.4, 1.0, 3.0] {
        let s = solve(&canonical(alpha)).unwrap();
        let rho_from_q = (s.q[0] - 1.0) / 2.0 - s.theta_g[0];
        assert!((s.rho_g[0] - rho_from_q).abs() < 1e-10);
        assert!((s.theta_g[0] - s.theta[0][0]).abs() < 1e-15);
    }
}

#[test]
fn volatility_tends_to_random_agents() {
    let s = solve(&canonical(100.0)).unwrap();
    assert!((s.sigma2 - 1.0).abs() < 0.02);
    let s = solve(&canonical(1e6)).unwrap();
    assert!((s.sigma2 - 1.0).abs() < 1e-5);
}

#[test]
fn volatility_splits_into_lyapunov_and_fluctuation_parts() {
    // sigma^2 = H/N + <I^2 - Q>/2 in the stationary state.
    let cfg = two_group_config(0.3, 0.4, 0.7).unwrap();
    let s = solve(&cfg).unwrap();
    let fluct = 0.5 * cfg.mean_by(|g, spec| spec.impact * spec.impact - s.q[g]);
    assert!((s.sigma2 - s.h_per_agent - fluct).abs() < 1e-10);
}

#[test]
fn critical_outcomes() {
    let shape = canonical(1.0);
    let cp = critical_point(&shape).unwrap();
    let rho = rho_at_critical(&shape, &cp).unwrap();
    assert_eq!(rho.len(), 1);
    assert!(rho[0] < 0.0);
    let full = critical_solution(&shape, &cp).unwrap();
    assert!((full.rho_g[0] - rho[0]).abs() < 1e-10);
    assert!(full.chi.is_infinite() || full.chi > 1e10);

    let bogus = CriticalPoint { zeta_c: 0.5, alpha_c: 0.3 };
    assert!(matches!(
        rho_at_critical(&shape, &bogus),
        Err(ReplicaError::InvalidCriticalPoint { .. })
    ));
}

#[test]
fn random_two_group_critical_properties() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut theta_11_positive = 0;
    for _ in 0..20 {
        let shape = two_group_config(rng.gen_range(0.01..0.99), rng.gen_range(0.01..=1.0), 1.0).unwrap();
        let cp = critical_point(&shape).unwrap();
        let rho = rho_at_critical(&shape, &cp).unwrap();
        assert!(rho.iter().all(|&r| r <= 1e-10), "{rho:?}");
        let full = critical_solution(&shape, &cp).unwrap();
        for g in 0..2 {
            assert!((full.rho_g[g] - rho[g]).abs() < 1e-10);
        }
        let theta_g = theta_g_at_critical(&shape, &cp).unwrap();
        assert!(theta_g.iter().all(|t| t.abs() < 1e-8), "{theta_g:?}");
        if full.theta[0][0] > 1e-6 {
            theta_11_positive += 1;
        }
    }
    assert!(theta_11_positive > 0);
}

#[test]
fn monotone_ladder() {
    let cp = critical_point(&canonical(1.0)).unwrap();
    let ladder = [cp.alpha_c, 0.4, 1.0, 10.0, 100.0];
    let sols: Vec<_> = ladder.iter().map(|&a| solve(&canonical(a)).unwrap()).collect();
    for w in sols.windows(2) {
        assert!(w[1].zeta > w[0].zeta);
        assert!(w[1].phi < w[0].phi);
    }
}

#[test]
fn permuting_groups_permutes_outputs() {
    let a = build_config(&[(0.2, 0.5), (0.5, 1.2), (0.3, 0.9)], 0.8).unwrap();
    let b = build_config(&[(0.3, 0.9), (0.2, 0.5), (0.5, 1.2)], 0.8).unwrap();
    let (sa, sb) = (solve(&a).unwrap(), solve(&b).unwrap());
    let perm = [1, 2, 0]; // a index -> b index
    assert!((sa.sigma2 - sb.sigma2).abs() < 1e-12);
    for g in 0..3 {
        assert!((sa.rho_g[g] - sb.rho_g[perm[g]]).abs() < 1e-12);
        assert!((sa.q[g] - sb.q[perm[g]]).abs() < 1e-12);
        for f in 0..3 {
            assert!((sa.theta[f][g] - sb.theta[perm[f]][perm[g]]).abs() < 1e-12);
        }
    }
}

fn arb_config() -> impl Strategy<Value = GameConfig> {
    (
        prop::collection::vec((0.05f64..1.0, 0.05f64..3.0), 1..4),
        0.0f64..1.0,
    )
        .prop_map(|(groups, t)| {
            let shape = build_config(&groups, 1.0).unwrap();
            let ac = critical_point(&shape).unwrap().alpha_c;
            // Log-uniform between alpha_c and 10.
            let alpha = ac * (10.0 / ac).powf(t);
            shape.with_alpha(alpha).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn solution_invariants(cfg in arb_config()) {
        let s = solve(&cfg).unwrap();
        let alpha = cfg.alpha();
        prop_assert!(s.zeta > 0.0);
        prop_assert!((saddle_lhs(&cfg, s.zeta) - alpha).abs() < ZETA_RESIDUAL * alpha.max(1.0));
        let n = cfg.n_groups();
        let mut i_rho = 0.0;
        for (g, spec) in cfg.groups().iter().enumerate() {
            let i2 = spec.impact * spec.impact;
            prop_assert!(s.q[g] >= 0.0 && s.q[g] <= i2 + 1e-10);
            prop_assert!((0.0..=1.0).contains(&s.phi_g[g]));
            let via_q = (s.q[g] - i2) / (2.0 * spec.impact) - s.theta_g[g];
            prop_assert!((s.rho_g[g] - via_q).abs() < 1e-10);
            prop_assert!(s.theta[g][g] > 0.0);
            for f in 0..n {
                prop_assert_eq!(s.theta[f][g], s.theta[g][f]);
            }
            i_rho += spec.ratio * spec.impact * s.rho_g[g];
        }
        prop_assert!((i_rho + s.sigma2).abs() < 1e-10);
        prop_assert!(s.chi > 0.0);
    }

    #[test]
    fn critical_consistency(cfg in arb_config()) {
        let cp = critical_point(&cfg).unwrap();
        prop_assert!(cp.alpha_c <= 0.33741);
        prop_assert!((saddle_lhs(&cfg, cp.zeta_c) - cp.alpha_c).abs() < 1e-10);
        prop_assert!(critical_residual(&cfg, cp.zeta_c).abs() < 1e-12);
    }
}
