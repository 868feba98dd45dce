use std::sync::Arc;

use proptest::prelude::*;

use bdg_lab::format::{parse_martingale, write_martingale};
use bdg_lab::functionals::{node_maximal_function, node_square_function, PathFunctionals};
use bdg_lab::generators::{gen_random_martingale, gen_symmetric_walk, gen_transform, random_predictable_multipliers};
use bdg_lab::report::{CheckKind, Outcome};
use bdg_lab::scalar::bregman_quadrature_oracle;
use bdg_lab::search::{local_search, objective, restart_start, Direction, SearchSpace};
use bdg_lab::tree::{close_martingale, conditional_expectation, expectation, validate_martingale};
use bdg_lab::verify::{check_bdg, check_dual_moment, dual_closure};
use bdg_lab::{bdg_ratio, bregman_divergence, g_weight, run_suite, signed_power, AdaptedProcess, OutcomeTree, SuiteConfig, Tolerances};

fn rel_close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn exponent() -> impl Strategy<Value = f64> {
    1.01f64..6.0
}

fn nonzero(lo: f64, hi: f64) -> impl Strategy<Value = f64> {
    (lo..hi, any::<bool>()).prop_map(|(x, neg)| if neg { -x } else { x })
}

fn martingale() -> impl Strategy<Value = AdaptedProcess> {
    (1usize..=5, 2usize..=3, any::<u64>(), 0.1f64..10.0)
        .prop_map(|(d, b, seed, scale)| gen_random_martingale(d, b, seed, scale).unwrap())
}

fn transform() -> impl Strategy<Value = AdaptedProcess> {
    (1usize..=6, any::<u64>(), 0.5f64..3.0).prop_map(|(d, seed, bound)| {
        let w = gen_symmetric_walk(d).unwrap();
        let m = random_predictable_multipliers(w.tree(), seed, bound);
        gen_transform(&w, &m, bound).unwrap()
    })
}

fn any_generated() -> impl Strategy<Value = AdaptedProcess> {
    prop_oneof![martingale(), transform()]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn divergence_is_nonnegative(p in exponent(), a in -50.0f64..50.0, b in -50.0f64..50.0) {
        prop_assert!(bregman_divergence(p, a, b).unwrap() >= 0.0);
    }

    #[test]
    fn divergence_and_weight_are_p_homogeneous(
        p in exponent(), a in nonzero(1e-3, 50.0), b in -50.0f64..50.0, l in nonzero(1e-2, 100.0)
    ) {
        let k = l.abs().powf(p);
        let f = bregman_divergence(p, a, b).unwrap();
        let fl = bregman_divergence(p, l * a, l * b).unwrap();
        prop_assert!(rel_close(fl, k * f, 1e-10) || (f == 0.0 && fl == 0.0), "{fl} vs {}", k * f);
        let g = g_weight(p, a, b).unwrap();
        let gl = g_weight(p, l * a, l * b).unwrap();
        prop_assert!(rel_close(gl, k * g, 1e-10) || (g == 0.0 && gl == 0.0));
    }

    #[test]
    fn divergence_versus_weight(p in exponent(), a in -10.0f64..10.0, b in -10.0f64..10.0) {
        let d = p * (p - 1.0) / 2.0;
        let f = bregman_divergence(p, a, b).unwrap();
        let dg = d * g_weight(p, a, b).unwrap();
        let slack = 1e-12 * f.max(dg).max(1.0);
        if p >= 2.0 {
            prop_assert!(f <= dg + slack, "{f} > {dg}");
        } else {
            prop_assert!(f >= dg - slack, "{f} < {dg}");
        }
    }

    #[test]
    fn quadrature_oracle_agrees(p in 1.05f64..5.0, b in -5.0f64..5.0) {
        let closed = bregman_divergence(p, 1.0, b).unwrap();
        let oracle = bregman_quadrature_oracle(p, b).unwrap();
        prop_assert!((oracle - closed).abs() <= 1e-8 * closed.abs() + 1e-14, "{oracle} vs {closed}");
    }

    #[test]
    fn signed_powers_multiply(x in 1e-3f64..1e3, k in -3.0f64..3.0, m in -3.0f64..3.0) {
        prop_assert!(rel_close(signed_power(x, k) * signed_power(x, m), x.powf(k + m), 1e-12));
        prop_assert_eq!(signed_power(-x, k), -signed_power(x, k));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generated_processes_are_martingales(x in any_generated()) {
        prop_assert!(validate_martingale(&x, 1e-10).pass);
        let tree = x.tree();
        let total: f64 = tree.leaf_probs().iter().sum();
        prop_assert!((total - 1.0).abs() <= 1e-12);
        for j in 1..=tree.depth() {
            let inc: f64 = tree.level(j).map(|v| tree.path_prob(v) * x.increment(v)).sum();
            prop_assert!(inc.abs() <= 1e-12, "E dX_{} = {}", j, inc);
        }
    }

    #[test]
    fn tower_property(x in martingale(), seed in any::<u64>()) {
        let tree = x.tree();
        let n = tree.depth();
        let y: Vec<f64> = (0..tree.leaf_count()).map(|i| ((seed.wrapping_add(i as u64) % 97) as f64 - 48.0) / 7.0).collect();
        for k in 0..=n {
            let at_k = conditional_expectation(tree, &y, k).unwrap();
            let first = tree.level(k).start;
            let lifted: Vec<f64> = tree.leaves().map(|leaf| at_k[tree.path_to(leaf)[k] - first]).collect();
            for j in 0..=k {
                let direct = conditional_expectation(tree, &y, j).unwrap();
                let via = conditional_expectation(tree, &lifted, j).unwrap();
                for (a, b) in direct.iter().zip(&via) {
                    prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
                }
            }
        }
        let z = close_martingale(tree, &y).unwrap();
        prop_assert!(validate_martingale(&z, 1e-10).pass);
        prop_assert!((z.value(0) - expectation(tree, &y).unwrap()).abs() <= 1e-12 * (1.0 + z.value(0).abs()));
    }

    #[test]
    fn moments_scale_and_ratio_is_invariant(x in any_generated(), p in exponent()) {
        let base = PathFunctionals::of(&x).moments(x.tree(), p);
        for l in [-2.0, 3.0] {
            let s = x.scaled(l);
            let m = PathFunctionals::of(&s).moments(s.tree(), p);
            let k = f64::abs(l).powf(p);
            prop_assert!(rel_close(m.e_abs_p, k * base.e_abs_p, 1e-10));
            prop_assert!(rel_close(m.e_sp, k * base.e_sp, 1e-10));
            prop_assert!(rel_close(m.e_xstar_p, k * base.e_xstar_p, 1e-10));
        }
        let r = bdg_ratio(&x, p).unwrap();
        for l in [-2.0, 0.5] {
            prop_assert!(rel_close(bdg_ratio(&x.scaled(l), p).unwrap(), r, 1e-10));
        }
    }

    #[test]
    fn path_functionals_are_nondecreasing(x in any_generated()) {
        let s = node_square_function(&x);
        let m = node_maximal_function(&x);
        for v in 1..x.tree().node_count() {
            let u = x.tree().parent(v).unwrap();
            prop_assert!(s[v] >= s[u] && m[v] >= m[u]);
        }
    }

    #[test]
    fn envelope_holds_for_p_at_least_two(x in any_generated(), p in 2.0f64..6.0) {
        let [lo, hi] = check_bdg(&x, p, &Tolerances::default()).unwrap();
        prop_assert!(lo.pass && hi.pass, "{:?} {:?}", lo, hi);
    }

    #[test]
    fn dual_closure_moment(x in martingale(), p in 1.05f64..4.0) {
        let z = dual_closure(&x, p).unwrap();
        let tol = Tolerances { identity_rel: 1e-10, ..Tolerances::default() };
        prop_assert!(check_dual_moment(&x, &z, p, &tol).pass);
    }

    #[test]
    fn suite_is_deterministic_with_nonnegative_passing_margins(x in any_generated(), p in exponent()) {
        let config = SuiteConfig::default();
        let a = run_suite(&x, p, &config).unwrap();
        let b = run_suite(&x, p, &config).unwrap();
        prop_assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        for c in &a.checks {
            if c.kind == CheckKind::Inequality && c.outcome == Outcome::Pass {
                prop_assert!(c.margin >= -c.tolerance, "{:?}", c);
            }
        }
    }

    #[test]
    fn martingale_file_round_trips(x in any_generated()) {
        let text = write_martingale(&x);
        let back = parse_martingale(&text).unwrap();
        prop_assert_eq!(back.values(), x.values());
        prop_assert_eq!(write_martingale(&back), text);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn search_objective_is_scale_invariant(depth in 1usize..=4, branching in 2usize..=3, seed in any::<u64>(), p in exponent(), l in nonzero(0.1, 10.0)) {
        let space = SearchSpace::new(Arc::new(OutcomeTree::uniform(depth, branching, 1 << 20).unwrap()));
        let params = restart_start(&space, seed, 5);
        let scaled: Vec<f64> = params.iter().map(|v| l * v).collect();
        for dir in [Direction::Minimize, Direction::Maximize] {
            let a = objective(&space, &params, p, dir).unwrap();
            let b = objective(&space, &scaled, p, dir).unwrap();
            prop_assert!(rel_close(a, b, 1e-10), "{a} vs {b}");
        }
    }

    #[test]
    fn local_search_history_is_monotone(seed in any::<u64>(), p in exponent()) {
        let space = SearchSpace::new(Arc::new(OutcomeTree::uniform(3, 2, 1 << 20).unwrap()));
        for dir in [Direction::Minimize, Direction::Maximize] {
            let r = local_search(&space, &restart_start(&space, seed, 3), p, dir, 400).unwrap();
            for w in r.trace.history.windows(2) {
                match dir {
                    Direction::Minimize => prop_assert!(w[1] <= w[0]),
                    Direction::Maximize => prop_assert!(w[1] >= w[0]),
                }
            }
        }
    }
}
