//! Effective weights of irreducible chains and almost-sure convergence.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{bsccs_reachable, scc_decompose};
use crate::mdp::{induce, MemorylessPolicy, ModelError, StateId, Wdtmc, Wmdp, STOCHASTIC_TOL};

/// Default cap on the number of policies `decide_as_convergence` enumerates.
pub const DEFAULT_POLICY_CAP: u128 = 1_000_000;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ChainError {
    #[error("component is not irreducible ({components} SCCs)")]
    NotIrreducible { components: usize },
    #[error("component is not closed: state {0} has mass leaving it")]
    NotClosed(StateId),
    #[error("stationary system is singular")]
    SingularSystem,
    #[error("{count} policies exceed the enumeration cap {cap}")]
    EnumerationTooLarge { count: u128, cap: u128 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Stationary distribution of the chain restricted to a component, indexed
/// like the component's state list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryDistribution {
    pub states: Vec<StateId>,
    pub probs: Vec<f64>,
}

impl StationaryDistribution {
    /// `max_s |(dP)(s) - d(s)|` over the restricted chain.
    pub fn balance_residual(&self, c: &Wdtmc) -> f64 {
        let k = self.states.len();
        let mut flow = vec![0.0; k];
        for (i, &s) in self.states.iter().enumerate() {
            for e in &c.rows[s] {
                if let Ok(j) = self.states.binary_search(&e.target) {
                    flow[j] += self.probs[i] * e.prob;
                }
            }
        }
        flow.iter().zip(&self.probs).map(|(f, d)| (f - d).abs()).fold(0.0, f64::max)
    }
}

struct Restricted {
    local: Vec<Option<usize>>,
}

impl Restricted {
    fn new(c: &Wdtmc, component: &[StateId]) -> Result<Self, ChainError> {
        let mut local = vec![None; c.state_count()];
        for (i, &s) in component.iter().enumerate() {
            local[s] = Some(i);
        }
        for &s in component {
            let inside: f64 = c.rows[s].iter().filter(|e| local[e.target].is_some()).map(|e| e.prob).sum();
            if (inside - 1.0).abs() > STOCHASTIC_TOL {
                return Err(ChainError::NotClosed(s));
            }
        }
        Ok(Restricted { local })
    }
}

fn sorted(component: &[StateId]) -> Vec<StateId> {
    let mut states = component.to_vec();
    states.sort_unstable();
    states.dedup();
    states
}

/// Solves the balance equations `dP = d`, `sum d = 1` on `component`, which
/// must be a closed irreducible set of `c`.
pub fn stationary_distribution(c: &Wdtmc, component: &[StateId]) -> Result<StationaryDistribution, ChainError> {
    let states = sorted(component);
    let k = states.len();
    if k == 0 {
        return Err(ChainError::NotIrreducible { components: 0 });
    }
    let r = Restricted::new(c, &states)?;
    let adj: Vec<Vec<usize>> = states
        .iter()
        .map(|&s| c.rows[s].iter().filter_map(|e| r.local[e.target]).collect())
        .collect();
    let parts = scc_decompose(&adj).components.len();
    if parts != 1 {
        return Err(ChainError::NotIrreducible { components: parts });
    }

    // Rows of (P^T - I), the last one replaced by the normalization.
    let mut a = DMatrix::<f64>::zeros(k, k);
    for (i, &s) in states.iter().enumerate() {
        for e in &c.rows[s] {
            if let Some(j) = r.local[e.target] {
                a[(j, i)] += e.prob;
            }
        }
        a[(i, i)] -= 1.0;
    }
    for j in 0..k {
        a[(k - 1, j)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(k);
    b[k - 1] = 1.0;
    let d = a.lu().solve(&b).ok_or(ChainError::SingularSystem)?;
    if d.iter().any(|x| !x.is_finite()) {
        return Err(ChainError::SingularSystem);
    }
    // Clean rounding noise; the true solution is strictly positive.
    let mut probs: Vec<f64> = d.iter().map(|x| x.max(0.0)).collect();
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|x| *x /= total);
    Ok(StationaryDistribution { states, probs })
}

/// Almost-sure mean payoff of the chain restricted to a BSCC:
/// `sum_s d(s) sum_t P(s,t) w(s,t)`, with `+inf` absorbing.
pub fn effective_weight(c: &Wdtmc, component: &[StateId]) -> Result<f64, ChainError> {
    let d = stationary_distribution(c, component)?;
    Ok(weighted_average(c, &d))
}

fn weighted_average(c: &Wdtmc, d: &StationaryDistribution) -> f64 {
    let mut total = 0.0;
    for (i, &s) in d.states.iter().enumerate() {
        for e in &c.rows[s] {
            if e.weight == f64::INFINITY {
                return f64::INFINITY;
            }
            total += d.probs[i] * e.prob * e.weight;
        }
    }
    total
}

/// True iff every BSCC reachable from the initial state has negative
/// effective weight.
pub fn wdtmc_as_convergent(c: &Wdtmc) -> Result<bool, ChainError> {
    Ok(first_nonnegative_bscc(c)?.is_none())
}

fn first_nonnegative_bscc(c: &Wdtmc) -> Result<Option<(Vec<StateId>, f64)>, ChainError> {
    for b in bsccs_reachable(c) {
        let w = effective_weight(c, &b)?;
        if w >= 0.0 {
            return Ok(Some((b, w)));
        }
    }
    Ok(None)
}

/// A policy whose induced chain has a reachable BSCC with non-negative
/// effective weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceWitness {
    pub policy: MemorylessPolicy,
    pub bscc: Vec<StateId>,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AsVerdict {
    Yes,
    No(ConvergenceWitness),
}

/// Decides whether every memoryless policy induces an almost-surely
/// convergent chain. Policies are enumerated lexicographically and
/// checked in parallel; the reported witness is the first in that order.
pub fn decide_as_convergence(m: &Wmdp, cap: u128) -> Result<AsVerdict, ChainError> {
    m.ensure_valid()?;
    let count = m.policy_count();
    if count > cap {
        return Err(ChainError::EnumerationTooLarge { count, cap });
    }
    let count = u64::try_from(count).map_err(|_| ChainError::EnumerationTooLarge { count, cap })?;
    let found = (0..count).into_par_iter().map(|i| check_policy(m, i as u128)).find_first(|r| !matches!(r, Ok(None)));
    match found {
        None => Ok(AsVerdict::Yes),
        Some(Ok(Some(w))) => Ok(AsVerdict::No(w)),
        Some(Err(e)) => Err(e),
        Some(Ok(None)) => unreachable!(),
    }
}

fn check_policy(m: &Wmdp, index: u128) -> Result<Option<ConvergenceWitness>, ChainError> {
    let policy = MemorylessPolicy::from_index(m, index);
    let c = induce(m, &policy)?;
    Ok(first_nonnegative_bscc(&c)?.map(|(bscc, weight)| ConvergenceWitness { policy, bscc, weight }))
}
