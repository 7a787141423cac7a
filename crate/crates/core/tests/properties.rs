use male_core::experiments::{ExperimentConfig, ExperimentKind};
use male_core::models::{generate_dataset, Dgp};
use male_core::quadrature::gauss_hermite;
use male_core::special::{inverse_normal_cdf, normal_cdf};
use male_core::{LinkFunction, Method};
use proptest::prelude::*;

fn any_method() -> impl Strategy<Value = Method> {
    prop::sample::select(Method::ALL.to_vec())
}

fn any_link() -> impl Strategy<Value = LinkFunction> {
    prop_oneof![
        (1u64..50).prop_map(|r0| LinkFunction::Constant { r0 }),
        (0.01f64..10.0).prop_map(|a| LinkFunction::Logarithmic { a }),
        (0.01f64..10.0).prop_map(|a| LinkFunction::Sqrt { a }),
        (0.001f64..2.0).prop_map(|a| LinkFunction::Linear { a }),
        (0.1f64..10.0, 0.5f64..6.0, 0.51f64..1.5)
            .prop_map(|(c, s, g)| LinkFunction::algebraic(c, s, g).unwrap()),
        (1.0f64..10.0, 0.2f64..3.0, 0.3f64..2.0, 0.51f64..1.5)
            .prop_map(|(c, a, b, g)| LinkFunction::exponential(c, a, b, g).unwrap()),
    ]
}

proptest! {
    #[test]
    fn inverse_normal_is_antisymmetric(u in 1e-300f64..0.5) {
        let lo = inverse_normal_cdf(u).unwrap();
        let hi = inverse_normal_cdf(1.0 - u).unwrap();
        // 1 - u rounds, so compare against the quantile of the rounded value
        let exact_hi = -inverse_normal_cdf(1.0 - (1.0 - u)).unwrap();
        prop_assert!((hi - exact_hi).abs() <= 1e-9 * (1.0 + hi.abs()));
        prop_assert!(lo <= 0.0);
    }

    #[test]
    fn inverse_normal_is_monotone(a in 1e-12f64..1.0, b in 1e-12f64..1.0) {
        prop_assume!(a < 1.0 && b < 1.0 && a != b);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(inverse_normal_cdf(lo).unwrap() <= inverse_normal_cdf(hi).unwrap());
    }

    #[test]
    fn inverse_normal_inverts_the_cdf(u in 1e-10f64..(1.0 - 1e-10)) {
        let x = inverse_normal_cdf(u).unwrap();
        let back = normal_cdf(x);
        prop_assert!((back - u).abs() <= 1e-12 * u.min(1.0 - u).max(1e-3));
    }

    #[test]
    fn every_rule_has_unit_mass(method in any_method(), r in 1usize..40, d in 1usize..3, seed: u64) {
        let r = if method == Method::Sparse { 1 + r % 6 } else { r };
        let rule = method.build(r, d, seed).unwrap();
        prop_assert!((rule.weight_sum() - 1.0).abs() <= 1e-12);
        prop_assert!(rule.points().all(|p| p.len() == d && p.iter().all(|x| x.is_finite())));
    }

    #[test]
    fn stochastic_rules_are_pure(method in any_method(), r in 1usize..64, d in 1usize..4, seed: u64) {
        prop_assume!(method != Method::Sparse);
        let a = method.build(r, d, seed).unwrap();
        let b = method.build(r, d, seed).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn hermite_rules_are_symmetric(r in 1usize..120) {
        let rule = gauss_hermite::<f64>(r).unwrap();
        let (x, w) = (rule.nodes(), rule.weights());
        for j in 0..r {
            prop_assert!((x[j] + x[r - 1 - j]).abs() <= 1e-12 * (1.0 + x[j].abs()));
            prop_assert!((w[j] - w[r - 1 - j]).abs() <= 1e-12 * w[j].max(1e-300) + 1e-300);
            prop_assert!(w[j] > 0.0);
        }
    }

    #[test]
    fn links_are_monotone_and_positive(link in any_link(), n in 1u64..1_000_000) {
        let a = link.evaluate(n).unwrap();
        let b = link.evaluate(n + 1).unwrap();
        prop_assert!(a >= 1);
        prop_assert!(b >= a);
        prop_assert_eq!(link.total_cost(n).unwrap(), u128::from(n) * u128::from(a));
    }

    #[test]
    fn links_round_trip_through_json(link in any_link()) {
        let text = serde_json::to_string(&link).unwrap();
        let back: LinkFunction = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, link);
    }

    #[test]
    fn configs_round_trip_through_json(
        kind in prop::sample::select(vec![
            ExperimentKind::SmoothConvergence,
            ExperimentKind::ArsConvergence,
            ExperimentKind::LinkScaling,
            ExperimentKind::RmseFixedN,
        ]),
        reps in prop::option::of(1usize..10_000),
        seed: u64,
    ) {
        let mut cfg = ExperimentConfig::preset(kind);
        cfg.reps = reps;
        cfg.base_seed = seed;
        let back = ExperimentConfig::from_json(&cfg.to_json().unwrap()).unwrap();
        prop_assert_eq!(back, cfg);
    }

    #[test]
    fn datasets_are_pure_functions_of_their_arguments(n in 1usize..200, seed: u64, mu in -3.0f64..3.0) {
        let a = generate_dataset(Dgp::RcRegression, n, seed, &[mu]).unwrap();
        let b = generate_dataset(Dgp::RcRegression, n, seed, &[mu]).unwrap();
        prop_assert_eq!(a.n(), n);
        prop_assert_eq!(a, b);
    }
}
