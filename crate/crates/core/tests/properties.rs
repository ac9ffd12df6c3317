use fullnn::inflation::build_simulation_lp;
use fullnn::lp::{solve_feasibility, verify_certificate, Status};
use fullnn::quantum::ejm_correlations;
use fullnn::scan::witness_threshold;
use fullnn::scenario::{Behavior, CorrelatorSpec, Scenario};
use fullnn::strategies::{bilocal_pr_family, simulate_theta0, three_star_tetra_strategy, Flips};
use fullnn::witness::{bilocal_as_star, bilocal_i, ejm_witness_1, s2, sn, star_i, v_crit, StarIndex};
use proptest::prelude::*;

const HALF_PI: f64 = std::f64::consts::FRAC_PI_2;

fn flips_for(sc: &Scenario) -> impl Strategy<Value = Flips> {
    let shape: Vec<(usize, usize)> = sc.parties().iter().map(|p| (p.inputs, p.outputs)).collect();
    shape
        .into_iter()
        .map(|(inputs, outputs)| proptest::collection::vec(0..outputs, inputs))
        .collect::<Vec<_>>()
        .prop_map(|masks| Flips { masks })
}

fn pm(party: usize, input: usize) -> CorrelatorSpec {
    CorrelatorSpec::marginal(3).with(party, input, vec![1, -1])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn correlators_are_linear_in_the_behavior(
        t1 in 0.0..HALF_PI, v1 in 0.0..1.0f64, t2 in 0.0..HALF_PI, v2 in 0.0..1.0f64, alpha in 0.0..1.0f64,
        x in 0..3usize, z in 0..3usize,
    ) {
        let (b1, b2) = (ejm_correlations(t1, v1).unwrap(), ejm_correlations(t2, v2).unwrap());
        let mix = b1.mix(&b2, alpha).unwrap();
        let spec = CorrelatorSpec::marginal(3).with(0, x, vec![1, -1]).with(1, 0, vec![1, -1, 1, -1]).with(2, z, vec![1, -1]);
        let want = alpha * b1.correlator(&spec).unwrap() + (1.0 - alpha) * b2.correlator(&spec).unwrap();
        prop_assert!((mix.correlator(&spec).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn independent_sources_factorize_outer_correlators(
        p in 0.0..1.0f64, flips in flips_for(&Scenario::bilocal_binary()), x in 0..2usize, z in 0..2usize,
    ) {
        let b = bilocal_pr_family(p, &flips).unwrap();
        let joint = b.correlator(&CorrelatorSpec::marginal(3).with(0, x, vec![1, -1]).with(2, z, vec![1, -1])).unwrap();
        let prod = b.correlator(&pm(0, x)).unwrap() * b.correlator(&pm(2, z)).unwrap();
        prop_assert!((joint - prod).abs() < 1e-12);
    }

    #[test]
    fn ejm_outer_correlators_factorize(theta in 0.0..HALF_PI, v in 0.0..1.0f64, x in 0..3usize, z in 0..3usize) {
        let b = ejm_correlations(theta, v).unwrap();
        let joint = b.correlator(&CorrelatorSpec::marginal(3).with(0, x, vec![1, -1]).with(2, z, vec![1, -1])).unwrap();
        let prod = b.correlator(&pm(0, x)).unwrap() * b.correlator(&pm(2, z)).unwrap();
        prop_assert!((joint - prod).abs() < 1e-12);
        prop_assert!(b.is_no_signaling(1e-10));
    }

    #[test]
    fn pr_family_stays_in_the_unit_diamond(p in 0.0..1.0f64, flips in flips_for(&Scenario::bilocal_binary())) {
        let b = bilocal_pr_family(p, &flips).unwrap();
        let (i0, i1) = (bilocal_i(&b, 0).unwrap(), bilocal_i(&b, 1).unwrap());
        prop_assert!(i0.abs() + i1.abs() <= 1.0 + 1e-12);
        prop_assert!(s2(&b).unwrap() <= 2f64.sqrt() + 1e-12);
    }

    #[test]
    fn star_of_two_agrees_with_bilocal(p in 0.0..1.0f64, flips in flips_for(&Scenario::bilocal_binary())) {
        let b = bilocal_pr_family(p, &flips).unwrap();
        let star = bilocal_as_star(&b).unwrap();
        prop_assert!((sn(&star).unwrap() - s2(&b).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn tetra_strategies_stay_in_the_unit_ball(w in proptest::array::uniform4(0.0..1.0f64), flips in flips_for(&Scenario::star(3))) {
        let total: f64 = w.iter().sum();
        prop_assume!(total > 1e-6);
        let p = w.map(|x| x / total);
        let b = three_star_tetra_strategy(&p, &flips).unwrap();
        let sum: f64 = (0..4).map(|t| star_i(&b, &StarIndex::new(3, t)).unwrap().abs()).sum();
        prop_assert!(sum <= 1.0 + 1e-12);
        prop_assert!(sn(&b).unwrap() <= 2f64.cbrt() + 1e-12);
    }

    #[test]
    fn behavior_json_round_trip_keeps_checksum(theta in 0.0..HALF_PI, v in 0.0..1.0f64) {
        let b = ejm_correlations(theta, v).unwrap();
        let back = Behavior::from_json(&b.to_json()).unwrap();
        prop_assert_eq!(b.checksum(), back.checksum());
    }

    #[test]
    fn v_crit_is_the_exact_root(theta in 0.0..HALF_PI) {
        let v = v_crit(theta);
        prop_assert!((0.5 * v * (v + v * theta.sin() + theta.cos()) - 1.0).abs() < 1e-12);
        prop_assert!((witness_threshold(theta, 1e-13).unwrap() - v).abs() < 1e-9);
        let w = ejm_witness_1();
        prop_assert!(!w.is_violated(w.eval(&ejm_correlations(theta, (v - 1e-6).max(0.0)).unwrap()).unwrap()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn feasibility_is_invariant_under_row_scaling(theta in 0.3..1.2f64, feasible in any::<bool>(), factor in 1e-3..1e3f64) {
        let v = if feasible { 0.5 } else { 1.0 };
        let lp = build_simulation_lp(&ejm_correlations(theta, v).unwrap()).unwrap();
        let a = solve_feasibility(&lp).unwrap();
        let b = solve_feasibility(&lp.scaled(factor)).unwrap();
        prop_assert_eq!(a.is_feasible(), feasible);
        prop_assert_eq!(b.is_feasible(), feasible);
        prop_assert_eq!(b.is_infeasible(), !feasible);
    }

    #[test]
    fn certificates_never_reject_simulable_targets(theta in 0.3..1.2f64) {
        let lp = build_simulation_lp(&ejm_correlations(theta, 1.0).unwrap()).unwrap();
        let cert = match solve_feasibility(&lp).unwrap().status {
            Status::Infeasible(c) => c,
            other => return Err(TestCaseError::fail(format!("expected a certificate, got {other:?}"))),
        };
        prop_assert!(verify_certificate(&lp, &cert));
        prop_assert!(cert.value(&lp) > 0.0);
        // same rows, right-hand side of a target the model reproduces
        let sim = build_simulation_lp(&simulate_theta0()).unwrap();
        prop_assert!(!verify_certificate(&sim, &cert));
        prop_assert!(cert.value(&sim) <= 1e-7);
    }

    #[test]
    fn simulability_is_monotone_in_visibility(theta in 0.3..1.2f64, v in 0.0..1.0f64) {
        let feasible = |v: f64| solve_feasibility(&build_simulation_lp(&ejm_correlations(theta, v).unwrap()).unwrap()).unwrap().is_feasible();
        if feasible(v) {
            prop_assert!(feasible(0.5 * v));
        }
    }
}
