#![allow(dead_code)]

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pphs_core::mdp::{Action, ChainEdge, Wdtmc, Wmdp};
use pphs_core::models::switched_system;
use pphs_core::pphs::Pphs;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn normalize(raw: Vec<(usize, f64)>) -> Vec<(usize, f64)> {
    let mut merged: Vec<(usize, f64)> = Vec::new();
    for (t, p) in raw {
        match merged.iter_mut().find(|e| e.0 == t) {
            Some(e) => e.1 += p,
            None => merged.push((t, p)),
        }
    }
    let total: f64 = merged.iter().map(|e| e.1).sum();
    merged.into_iter().map(|(t, p)| (t, p / total)).collect()
}

/// Every state in the support of every action.
pub fn dense_wmdp(r: &mut ChaCha8Rng, max_states: usize, max_actions: usize) -> Wmdp {
    let n = r.random_range(1..=max_states);
    let actions = (0..n)
        .map(|_| {
            (0..r.random_range(1..=max_actions))
                .map(|_| Action::new(normalize((0..n).map(|t| (t, r.random_range(0.01..1.0))).collect()), r.random_range(-5.0..5.0)))
                .collect()
        })
        .collect();
    Wmdp::new(actions, r.random_range(0..n))
}

/// Supports of one or two states, so MECs, transient states and several
/// components all occur.
pub fn sparse_wmdp(r: &mut ChaCha8Rng, max_states: usize, max_actions: usize) -> Wmdp {
    let n = r.random_range(1..=max_states);
    let actions = (0..n)
        .map(|_| {
            (0..r.random_range(1..=max_actions))
                .map(|_| {
                    let k = r.random_range(1..=2);
                    Action::new(normalize((0..k).map(|_| (r.random_range(0..n), r.random_range(0.1..1.0))).collect()), r.random_range(-5.0..5.0))
                })
                .collect()
        })
        .collect();
    Wmdp::new(actions, r.random_range(0..n))
}

/// Irreducible: a random Hamiltonian cycle plus random extra edges.
pub fn irreducible_chain(r: &mut ChaCha8Rng, min_states: usize, max_states: usize) -> Wdtmc {
    let n = r.random_range(min_states..=max_states);
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        order.swap(i, r.random_range(0..=i));
    }
    let mut next = vec![0; n];
    for i in 0..n {
        next[order[i]] = order[(i + 1) % n];
    }
    let rows = (0..n)
        .map(|s| {
            let mut raw = vec![(next[s], r.random_range(0.1..1.0))];
            for t in 0..n {
                if r.random_bool(0.4) {
                    raw.push((t, r.random_range(0.05..1.0)));
                }
            }
            let mut row: Vec<ChainEdge> = normalize(raw)
                .into_iter()
                .map(|(target, prob)| ChainEdge { target, prob, weight: r.random_range(-5.0..5.0) })
                .collect();
            row.sort_by_key(|e| e.target);
            row
        })
        .collect();
    Wdtmc { rows, init: 0 }
}

/// The chain as a WMDP with one action per state. Chains carry one weight
/// per edge while WMDP actions carry one per state, so the chain's weights
/// are replaced by a single weight per state.
pub fn single_action(c: &Wdtmc) -> (Wmdp, Wdtmc) {
    let c = Wdtmc {
        rows: c.rows.iter().map(|row| row.iter().map(|e| ChainEdge { weight: row[0].weight, ..*e }).collect()).collect(),
        init: c.init,
    };
    let m = Wmdp::new(c.rows.iter().map(|row| vec![Action::new(row.iter().map(|e| (e.target, e.prob)).collect(), row[0].weight)]).collect(), c.init);
    (m, c)
}

pub fn arb_wmdp(max_states: usize, max_actions: usize) -> impl Strategy<Value = Wmdp> {
    (1..=max_states).prop_flat_map(move |n| {
        let action = (prop::collection::vec((0..n, 0.05f64..1.0), 1..=3), -5.0f64..5.0).prop_map(|(raw, w)| Action::new(normalize(raw), w));
        (prop::collection::vec(prop::collection::vec(action, 1..=max_actions), n), 0..n).prop_map(|(actions, init)| Wmdp::new(actions, init))
    })
}

pub fn arb_chain() -> impl Strategy<Value = Wdtmc> {
    any::<u64>().prop_map(|seed| irreducible_chain(&mut rng(seed), 1, 6))
}

fn arb_matrix() -> impl Strategy<Value = [[f64; 2]; 2]> {
    prop::array::uniform2(prop::array::uniform2(-5.0f64..5.0))
}

/// Random hybridized switched systems.
pub fn arb_switched() -> impl Strategy<Value = Pphs> {
    (arb_matrix(), arb_matrix(), 3usize..=10).prop_map(|(a1, a2, n)| switched_system(a1, a2, n))
}
