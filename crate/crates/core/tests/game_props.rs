use bias_design::design::AlphaBetaFamily;
use bias_design::game::{
    best_response_alice, best_response_bob, column_payoffs, default_starts, joint_optimum,
    literal_minimax, local_best_response_alice, local_best_response_bob, nash_solve,
    randomization_minimax, Classification, MINIMAX_GAP_TOL,
};
use proptest::prelude::*;

#[test]
fn nash_points_have_vanishing_gradients() {
    let report = nash_solve(&AlphaBetaFamily::default(), 1.0, &default_starts()).unwrap();
    report.check_converged().unwrap();
    let nash: Vec<_> =
        report.points.iter().filter(|p| p.classification == Classification::Nash).collect();
    assert!(!nash.is_empty());
    for p in nash {
        assert!(p.fd_gradient.0.abs() < 1e-6 && p.fd_gradient.1.abs() < 1e-6, "{p:?}");
        assert!(p.second_derivatives.0 > 0.0 && p.second_derivatives.1 > 0.0);
    }
}

#[test]
fn best_responses_agree_at_nash_points() {
    let family = AlphaBetaFamily::default();
    let report = nash_solve(&family, 1.0, &default_starts()).unwrap();
    for p in report.points.iter().filter(|p| p.classification == Classification::Nash) {
        // Alice's cost is convex in α, so her local and global responses coincide.
        let a = best_response_alice(p.beta, &family).unwrap();
        assert!((a - p.alpha).abs() < 1e-6, "alice {a} vs {}", p.alpha);
        assert!(p.alice_global_best);
        let a_local = local_best_response_alice(p.beta, &family, p.alpha).unwrap();
        assert!((a_local - p.alpha).abs() < 1e-6);
        let b_local = local_best_response_bob(p.alpha, &family, 1.0, p.beta).unwrap();
        assert!((b_local - p.beta).abs() < 1e-6, "bob {b_local} vs {}", p.beta);

        // Bob's global response is reported, not assumed.
        let b = best_response_bob(p.alpha, &family, 1.0).unwrap();
        assert_eq!(p.bob_global_best, (b - p.beta).abs() < 1e-6);
    }
}

#[test]
fn joint_optimum_beats_every_equilibrium() {
    let family = AlphaBetaFamily::default();
    let joint = joint_optimum(&family, 1.0);
    let report = nash_solve(&family, 1.0, &default_starts()).unwrap();
    for p in &report.points {
        assert!(joint.value <= p.trace_s1 + p.trace_s2 + 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn equilibria_do_not_depend_on_psi(c in prop_oneof![0.05f64..20.0, -20.0f64..-0.05]) {
        let family = AlphaBetaFamily::default();
        let base = nash_solve(&family, 1.0, &default_starts()).unwrap();
        let scaled = nash_solve(&family, c, &default_starts()).unwrap();
        prop_assert_eq!(base.points.len(), scaled.points.len());
        for (p, q) in base.points.iter().zip(&scaled.points) {
            prop_assert!((p.alpha - q.alpha).abs() < 1e-8);
            prop_assert!((p.beta - q.beta).abs() < 1e-8);
            prop_assert_eq!(p.classification, q.classification);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn minimax_value_is_sandwiched(
        payoff in (1usize..=4, 1usize..=4).prop_flat_map(|(m, n)| {
            prop::collection::vec(prop::collection::vec(-3.0f64..3.0, n), m)
        })
    ) {
        let sol = randomization_minimax(&payoff).unwrap();
        prop_assert!(sol.converged);
        let worst = column_payoffs(&payoff, &sol.strategy.probabilities)
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(worst - sol.value < MINIMAX_GAP_TOL + 1e-12);
        let pure = literal_minimax(&payoff).unwrap();
        for row in &payoff {
            let row_worst = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(sol.value <= row_worst + 1e-12);
        }
        prop_assert!(sol.value <= pure.value + 1e-12);
    }
}
