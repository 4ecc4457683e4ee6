mod common;

use proptest::prelude::*;

use pphs_core::chain::{decide_as_convergence, stationary_distribution, AsVerdict};
use pphs_core::graph::{bsccs_reachable, mec_decompose, scc_decompose};
use pphs_core::harness::{oracle_lp_vertex, oracle_max_mean_payoff};
use pphs_core::lp::{solve, LinearProgram, LpStatus, Relation, Sense, VarBounds};
use pphs_core::mean_payoff::{analyze, gain_lp_with};
use pphs_core::pphs::{enumerate_facets, orthant};

use common::*;

fn arb_bounded_lp() -> impl Strategy<Value = LinearProgram> {
    (1usize..=4, 0usize..=4, any::<bool>()).prop_flat_map(|(n, m, max)| {
        let row = (prop::collection::vec(-5i32..=5, n), 0usize..3, -10i32..=10);
        (prop::collection::vec(-5i32..=5, n), prop::collection::vec(row, m), prop::collection::vec((-5i32..=0, 0i32..=5), n)).prop_map(
            move |(obj, rows, bounds)| {
                let sense = if max { Sense::Maximize } else { Sense::Minimize };
                let mut lp = LinearProgram::new(sense, obj.into_iter().map(f64::from).collect());
                for (coeffs, rel, rhs) in rows {
                    let rel = [Relation::Le, Relation::Eq, Relation::Ge][rel];
                    lp.add_constraint(coeffs.into_iter().map(f64::from).collect(), rel, f64::from(rhs));
                }
                for (k, (lo, hi)) in bounds.into_iter().enumerate() {
                    lp.set_bounds(k, VarBounds::between(f64::from(lo), f64::from(hi)));
                }
                lp
            },
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn simplex_matches_vertex_enumeration(lp in arb_bounded_lp()) {
        let sol = solve(&lp).unwrap();
        match oracle_lp_vertex(&lp) {
            None => prop_assert_eq!(sol.status, LpStatus::Infeasible),
            Some(v) => {
                prop_assert_eq!(sol.status, LpStatus::Optimal);
                prop_assert!((sol.value.unwrap() - v).abs() < 1e-7, "{} vs {}", sol.value.unwrap(), v);
                let x = sol.point.unwrap();
                prop_assert!(lp.max_residual(&x) < 1e-7);
                prop_assert!((lp.objective_value(&x) - v).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn min_gain_is_negated_max_gain(m in arb_wmdp(5, 3)) {
        let neg = m.map_weights(|w| -w);
        for mec in mec_decompose(&m) {
            let lo = gain_lp_with(&mec.sub_model(&m), Sense::Minimize).unwrap();
            let hi = gain_lp_with(&mec.sub_model(&neg), Sense::Maximize).unwrap();
            prop_assert!((lo + hi).abs() < 1e-8);
            prop_assert!(lo <= gain_lp_with(&mec.sub_model(&m), Sense::Maximize).unwrap() + 1e-9);
        }
    }

    #[test]
    fn analysis_matches_policy_enumeration(m in arb_wmdp(5, 2)) {
        let a = analyze(&m).unwrap().mean_payoff().value();
        let o = oracle_max_mean_payoff(&m, 1 << 20).unwrap();
        prop_assert!((a - o).abs() < 1e-6, "{} vs {}", a, o);
    }

    #[test]
    fn as_convergence_implies_negative_value(m in arb_wmdp(4, 2)) {
        let v = analyze(&m).unwrap().mean_payoff().value();
        match decide_as_convergence(&m, 1 << 16).unwrap() {
            AsVerdict::Yes => prop_assert!(v < 0.0),
            AsVerdict::No(w) => prop_assert!(w.weight >= 0.0),
        }
    }

    #[test]
    fn mecs_are_closed_connected_and_disjoint(m in arb_wmdp(6, 3)) {
        let mecs = mec_decompose(&m);
        let mut owner = vec![None; m.state_count()];
        for (i, mec) in mecs.iter().enumerate() {
            for &s in &mec.states {
                prop_assert!(owner[s].is_none());
                owner[s] = Some(i);
                prop_assert!(!mec.enabled[&s].is_empty());
                for &a in &mec.enabled[&s] {
                    prop_assert!(m.action(s, a).support().all(|t| mec.contains(t)));
                }
            }
            let sub = mec.sub_model(&m);
            prop_assert_eq!(scc_decompose(&sub).components.len(), 1);
        }
        // every BSCC of every induced chain sits inside some MEC
        let c = pphs_core::mdp::induce(&m, &pphs_core::mdp::MemorylessPolicy(vec![0; m.state_count()])).unwrap();
        for b in bsccs_reachable(&c) {
            let i = owner[b[0]];
            prop_assert!(i.is_some());
            prop_assert!(b.iter().all(|&s| owner[s] == i));
        }
    }

    #[test]
    fn orthants_have_one_facet_per_axis(signs in prop::collection::vec(prop::bool::ANY, 2..=5)) {
        let signs: Vec<f64> = signs.into_iter().map(|b| if b { 1.0 } else { -1.0 }).collect();
        let facets = enumerate_facets(&orthant(&signs)).unwrap();
        prop_assert_eq!(facets, (0..signs.len()).collect::<Vec<_>>());
    }

    #[test]
    fn sectors_have_two_facets(h in arb_switched()) {
        for q in 0..h.location_count() {
            prop_assert_eq!(enumerate_facets(h.invariant(q)).unwrap(), vec![0, 1]);
        }
    }

    #[test]
    fn stationary_distribution_balances(c in arb_chain()) {
        let all: Vec<usize> = (0..c.state_count()).collect();
        let d = stationary_distribution(&c, &all).unwrap();
        prop_assert!(d.balance_residual(&c) < 1e-10);
        prop_assert!((d.probs.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        prop_assert!(d.probs.iter().all(|&p| p > 0.0));
    }
}
