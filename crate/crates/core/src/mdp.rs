//! Weighted MDPs, memoryless policies and the weighted chains they induce.
//!
//! States and actions are plain indices: state `s` is `0..state_count` and
//! action `a` of state `s` is an index into `actions[s]`. Weights are `f64`
//! where `f64::INFINITY` stands for the `+inf` weight; IEEE addition and `max`
//! already treat it as absorbing. `NaN` and `-inf` are rejected by
//! validation.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance on distribution sums and row sums.
pub const STOCHASTIC_TOL: f64 = 1e-9;

pub type StateId = usize;
pub type ActionId = usize;

/// One action of a state: a sparse distribution over successors and a
/// weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Action {
    pub dist: Vec<(StateId, f64)>,
    pub weight: f64,
}

impl Action {
    pub fn new(dist: Vec<(StateId, f64)>, weight: f64) -> Self {
        Action { dist, weight }
    }

    /// Deterministic move to `target`.
    pub fn to(target: StateId, weight: f64) -> Self {
        Action { dist: vec![(target, 1.0)], weight }
    }

    /// Successors with positive probability.
    pub fn support(&self) -> impl Iterator<Item = StateId> + '_ {
        self.dist.iter().filter(|(_, p)| *p > 0.0).map(|&(s, _)| s)
    }

    pub fn prob_to(&self, target: StateId) -> f64 {
        self.dist.iter().filter(|(s, _)| *s == target).map(|(_, p)| p).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Wmdp {
    pub actions: Vec<Vec<Action>>,
    pub init: StateId,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Violation {
    NoStates,
    InitOutOfRange { init: StateId, state_count: usize },
    BlockingState(StateId),
    TargetOutOfRange { state: StateId, action: ActionId, target: StateId },
    ProbabilityOutOfRange { state: StateId, action: ActionId, target: StateId },
    DistributionNotStochastic { state: StateId, action: ActionId },
    InvalidWeight { state: StateId, action: ActionId },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoStates => write!(f, "model has no states"),
            Violation::InitOutOfRange { init, state_count } => {
                write!(f, "init state {init} out of range (state count {state_count})")
            }
            Violation::BlockingState(s) => write!(f, "state {s} has no actions"),
            Violation::TargetOutOfRange { state, action, target } => {
                write!(f, "state {state}, action {action}: successor {target} out of range")
            }
            Violation::ProbabilityOutOfRange { state, action, target } => {
                write!(f, "state {state}, action {action}: probability of {target} outside [0,1]")
            }
            Violation::DistributionNotStochastic { state, action } => {
                write!(f, "state {state}, action {action}: distribution does not sum to 1")
            }
            Violation::InvalidWeight { state, action } => {
                write!(f, "state {state}, action {action}: weight must be a real number or +inf")
            }
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ModelError {
    #[error("invalid model: {}", join_violations(.0))]
    Invalid(Vec<Violation>),
    #[error("policy chooses unavailable action at state {0}")]
    PolicyActionUnavailable(StateId),
    #[error("policy covers {got} states, model has {expected}")]
    PolicyLength { expected: usize, got: usize },
    #[error("invalid path: step {step} has probability zero or names a missing action")]
    InvalidPath { step: usize },
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

impl Wmdp {
    pub fn new(actions: Vec<Vec<Action>>, init: StateId) -> Self {
        Wmdp { actions, init }
    }

    /// Builds the model and rejects it if any invariant fails.
    pub fn try_new(actions: Vec<Vec<Action>>, init: StateId) -> Result<Self, ModelError> {
        let m = Wmdp { actions, init };
        m.ensure_valid()?;
        Ok(m)
    }

    pub fn state_count(&self) -> usize {
        self.actions.len()
    }

    pub fn action(&self, s: StateId, a: ActionId) -> &Action {
        &self.actions[s][a]
    }

    pub fn weight(&self, s: StateId, a: ActionId) -> f64 {
        self.actions[s][a].weight
    }

    pub fn state_action_pairs(&self) -> impl Iterator<Item = (StateId, ActionId)> + '_ {
        self.actions
            .iter()
            .enumerate()
            .flat_map(|(s, acts)| (0..acts.len()).map(move |a| (s, a)))
    }

    /// Lists every violated invariant; empty iff the model is valid.
    pub fn validate(&self) -> Vec<Violation> {
        let n = self.state_count();
        let mut out = Vec::new();
        if n == 0 {
            out.push(Violation::NoStates);
        }
        if self.init >= n && n > 0 {
            out.push(Violation::InitOutOfRange { init: self.init, state_count: n });
        }
        for (s, acts) in self.actions.iter().enumerate() {
            if acts.is_empty() {
                out.push(Violation::BlockingState(s));
            }
            for (a, act) in acts.iter().enumerate() {
                if act.weight.is_nan() || act.weight == f64::NEG_INFINITY {
                    out.push(Violation::InvalidWeight { state: s, action: a });
                }
                let mut sum = 0.0;
                let mut well_formed = true;
                for &(t, p) in &act.dist {
                    if t >= n {
                        out.push(Violation::TargetOutOfRange { state: s, action: a, target: t });
                        well_formed = false;
                    }
                    if !(0.0..=1.0).contains(&p) {
                        out.push(Violation::ProbabilityOutOfRange { state: s, action: a, target: t });
                        well_formed = false;
                    }
                    sum += p;
                }
                if well_formed && (sum - 1.0).abs() > STOCHASTIC_TOL {
                    out.push(Violation::DistributionNotStochastic { state: s, action: a });
                }
            }
        }
        out
    }

    pub fn ensure_valid(&self) -> Result<(), ModelError> {
        let v = self.validate();
        if v.is_empty() {
            Ok(())
        } else {
            Err(ModelError::Invalid(v))
        }
    }

    /// Number of memoryless deterministic policies, saturating at `u128::MAX`.
    pub fn policy_count(&self) -> u128 {
        self.actions
            .iter()
            .fold(1u128, |acc, a| acc.saturating_mul(a.len() as u128))
    }

    /// Sub-model on `states` (given in increasing order), keeping only the
    /// listed actions of each state. All kept actions must stay inside
    /// `states`. Returns the sub-model and, for each new state, its original
    /// index. The first listed state becomes the initial state.
    pub fn restrict(&self, states: &[StateId], keep: impl Fn(StateId, ActionId) -> bool) -> Wmdp {
        let mut local = vec![usize::MAX; self.state_count()];
        for (i, &s) in states.iter().enumerate() {
            local[s] = i;
        }
        let actions = states
            .iter()
            .map(|&s| {
                self.actions[s]
                    .iter()
                    .enumerate()
                    .filter(|&(a, _)| keep(s, a))
                    .map(|(_, act)| Action {
                        dist: act.dist.iter().map(|&(t, p)| (local[t], p)).collect(),
                        weight: act.weight,
                    })
                    .collect()
            })
            .collect();
        Wmdp { actions, init: 0 }
    }

    /// Returns a copy with every weight passed through `f`.
    pub fn map_weights(&self, mut f: impl FnMut(f64) -> f64) -> Wmdp {
        let actions = self
            .actions
            .iter()
            .map(|acts| acts.iter().map(|a| Action { dist: a.dist.clone(), weight: f(a.weight) }).collect())
            .collect();
        Wmdp { actions, init: self.init }
    }
}

/// A memoryless deterministic policy: one action index per state.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MemorylessPolicy(pub Vec<ActionId>);

impl MemorylessPolicy {
    pub fn choice(&self, s: StateId) -> ActionId {
        self.0[s]
    }

    pub fn check(&self, m: &Wmdp) -> Result<(), ModelError> {
        if self.0.len() != m.state_count() {
            return Err(ModelError::PolicyLength { expected: m.state_count(), got: self.0.len() });
        }
        for (s, &a) in self.0.iter().enumerate() {
            if a >= m.actions[s].len() {
                return Err(ModelError::PolicyActionUnavailable(s));
            }
        }
        Ok(())
    }

    /// The policy at position `index` of the lexicographic enumeration
    /// (state 0 varies slowest).
    pub fn from_index(m: &Wmdp, mut index: u128) -> Self {
        let mut choice = vec![0; m.state_count()];
        for s in (0..m.state_count()).rev() {
            let k = m.actions[s].len() as u128;
            choice[s] = (index % k) as usize;
            index /= k;
        }
        MemorylessPolicy(choice)
    }
}

/// One outgoing edge of a chain state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainEdge {
    pub target: StateId,
    pub prob: f64,
    pub weight: f64,
}

/// Weighted discrete-time Markov chain with per-edge weights. Rows are
/// sparse, sorted by target and hold only positive-probability edges.
#[derive(Debug, Clone, PartialEq)]
pub struct Wdtmc {
    pub rows: Vec<Vec<ChainEdge>>,
    pub init: StateId,
}

impl Wdtmc {
    pub fn state_count(&self) -> usize {
        self.rows.len()
    }

    pub fn prob(&self, s: StateId, t: StateId) -> f64 {
        self.rows[s].iter().find(|e| e.target == t).map_or(0.0, |e| e.prob)
    }

    /// Weight of edge `(s, t)`, or `None` outside the support.
    pub fn edge_weight(&self, s: StateId, t: StateId) -> Option<f64> {
        self.rows[s].iter().find(|e| e.target == t).map(|e| e.weight)
    }

    pub fn row_sum(&self, s: StateId) -> f64 {
        self.rows[s].iter().map(|e| e.prob).sum()
    }

    pub fn dense_matrix(&self) -> Vec<Vec<f64>> {
        let n = self.state_count();
        let mut p = vec![vec![0.0; n]; n];
        for (s, row) in self.rows.iter().enumerate() {
            for e in row {
                p[s][e.target] += e.prob;
            }
        }
        p
    }

    /// Copy with every edge weight passed through `f`.
    pub fn map_weights(&self, mut f: impl FnMut(f64) -> f64) -> Wdtmc {
        Wdtmc {
            rows: self
                .rows
                .iter()
                .map(|r| r.iter().map(|e| ChainEdge { weight: f(e.weight), ..*e }).collect())
                .collect(),
            init: self.init,
        }
    }

    /// View as a single-action WMDP.
    pub fn to_wmdp(&self) -> Wmdp {
        let actions = self
            .rows
            .iter()
            .map(|row| {
                // Edge weights of an induced chain are successor-independent;
                // a general chain is folded to its expected one-step weight.
                let w = expected_weight(row);
                vec![Action { dist: row.iter().map(|e| (e.target, e.prob)).collect(), weight: w }]
            })
            .collect();
        Wmdp { actions, init: self.init }
    }
}

fn expected_weight(row: &[ChainEdge]) -> f64 {
    if row.iter().any(|e| e.weight == f64::INFINITY) {
        return f64::INFINITY;
    }
    row.iter().map(|e| e.prob * e.weight).sum()
}

/// Binds `m` to the memoryless policy `policy`.
pub fn induce(m: &Wmdp, policy: &MemorylessPolicy) -> Result<Wdtmc, ModelError> {
    policy.check(m)?;
    let rows = (0..m.state_count())
        .map(|s| {
            let act = m.action(s, policy.choice(s));
            let mut row: Vec<ChainEdge> = Vec::with_capacity(act.dist.len());
            for &(t, p) in &act.dist {
                if p <= 0.0 {
                    continue;
                }
                match row.iter_mut().find(|e| e.target == t) {
                    Some(e) => e.prob += p,
                    None => row.push(ChainEdge { target: t, prob: p, weight: act.weight }),
                }
            }
            row.sort_by_key(|e| e.target);
            row
        })
        .collect();
    Ok(Wdtmc { rows, init: m.init })
}

/// Finite path `s0, a1, s1, ..., an, sn`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Path {
    pub states: Vec<StateId>,
    pub actions: Vec<ActionId>,
}

impl Path {
    pub fn start(s: StateId) -> Self {
        Path { states: vec![s], actions: Vec::new() }
    }

    pub fn step(mut self, a: ActionId, s: StateId) -> Self {
        self.actions.push(a);
        self.states.push(s);
        self
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

/// Sum of the weights along `path`.
pub fn path_weight(m: &Wmdp, path: &Path) -> Result<f64, ModelError> {
    if path.states.len() != path.actions.len() + 1 {
        return Err(ModelError::InvalidPath { step: 0 });
    }
    let mut total = 0.0;
    for (i, &a) in path.actions.iter().enumerate() {
        let (s, t) = (path.states[i], path.states[i + 1]);
        let act = m
            .actions
            .get(s)
            .and_then(|acts| acts.get(a))
            .ok_or(ModelError::InvalidPath { step: i + 1 })?;
        if act.prob_to(t) <= 0.0 {
            return Err(ModelError::InvalidPath { step: i + 1 });
        }
        total += act.weight;
    }
    Ok(total)
}

/// Mean payoff of a finite path, `0` for the empty path.
pub fn path_mean_payoff(m: &Wmdp, path: &Path) -> Result<f64, ModelError> {
    let w = path_weight(m, path)?;
    Ok(if path.is_empty() { 0.0 } else { w / path.len() as f64 })
}

/// A value in the reals extended with `+inf`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct MeanPayoffValue(f64);

impl MeanPayoffValue {
    pub const INFINITE: MeanPayoffValue = MeanPayoffValue(f64::INFINITY);

    /// Rejects `NaN` and `-inf`.
    pub fn new(v: f64) -> Option<Self> {
        (!v.is_nan() && v != f64::NEG_INFINITY).then_some(MeanPayoffValue(v))
    }

    pub fn finite(v: f64) -> Self {
        assert!(v.is_finite(), "finite mean payoff expected, got {v}");
        MeanPayoffValue(v)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_infinite(self) -> bool {
        self.0 == f64::INFINITY
    }
}

impl fmt::Display for MeanPayoffValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            write!(f, "+inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

/// The eight-state single-action model whose distributions alternate
/// between "skip one" and "skip two" around a ring. `weights[i]` is the
/// weight of state `i` and `probs[i]` the branching probability of its
/// distribution.
pub fn ring_example(weights: [f64; 8], probs: [f64; 8]) -> Wmdp {
    let actions = (1..=8usize)
        .map(|i| {
            let p = probs[i - 1];
            let (first, second) = if i % 2 == 0 { ((i + 1) % 8, (i + 2) % 8) } else { (i % 8, (i + 1) % 8) };
            vec![Action::new(vec![(first, p), (second, 1.0 - p)], weights[i - 1])]
        })
        .collect();
    Wmdp::new(actions, 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn self_loop(w: f64) -> Wmdp {
        Wmdp::new(vec![vec![Action::to(0, w)]], 0)
    }

    #[test]
    fn valid_single_state() {
        assert!(self_loop(-1.0).validate().is_empty());
    }

    #[test]
    fn substochastic_distribution_is_reported() {
        let m = Wmdp::new(vec![vec![Action::new(vec![(0, 0.9)], 0.0)]], 0);
        assert_eq!(m.validate(), vec![Violation::DistributionNotStochastic { state: 0, action: 0 }]);
    }

    #[test]
    fn blocking_state_is_reported() {
        let m = Wmdp::new(vec![vec![Action::to(1, 0.0)], vec![]], 0);
        assert_eq!(m.validate(), vec![Violation::BlockingState(1)]);
    }

    #[test]
    fn bad_init_and_targets() {
        let m = Wmdp::new(vec![vec![Action::to(3, 0.0)]], 2);
        let v = m.validate();
        assert!(v.contains(&Violation::InitOutOfRange { init: 2, state_count: 1 }));
        assert!(v.contains(&Violation::TargetOutOfRange { state: 0, action: 0, target: 3 }));
    }

    #[test]
    fn nan_weight_is_reported() {
        assert_eq!(self_loop(f64::NAN).validate(), vec![Violation::InvalidWeight { state: 0, action: 0 }]);
        assert!(self_loop(f64::INFINITY).validate().is_empty());
    }

    #[test]
    fn induce_self_loop() {
        let c = induce(&self_loop(5.0), &MemorylessPolicy(vec![0])).unwrap();
        assert_eq!(c.dense_matrix(), vec![vec![1.0]]);
        assert_eq!(c.edge_weight(0, 0), Some(5.0));
    }

    #[test]
    fn induce_picks_policy_action() {
        let m = Wmdp::new(
            vec![vec![Action::to(0, 7.0), Action::to(1, -2.0)], vec![Action::to(1, 0.0)]],
            0,
        );
        let c = induce(&m, &MemorylessPolicy(vec![1, 0])).unwrap();
        assert_eq!(c.prob(0, 1), 1.0);
        assert_eq!(c.edge_weight(0, 1), Some(-2.0));
        assert_eq!(c.edge_weight(0, 0), None);
    }

    #[test]
    fn induce_rejects_unavailable_action() {
        let m = self_loop(0.0);
        assert_eq!(
            induce(&m, &MemorylessPolicy(vec![1])),
            Err(ModelError::PolicyActionUnavailable(0))
        );
    }

    #[test]
    fn ring_example_induces_ring_chain() {
        let m = ring_example([1.0; 8], [0.3; 8]);
        assert!(m.validate().is_empty());
        let c = induce(&m, &MemorylessPolicy(vec![0; 8])).unwrap();
        // s0 uses tau_1: s1 w.p. p, s2 w.p. 1 - p
        assert!((c.prob(0, 1) - 0.3).abs() < 1e-15);
        assert!((c.prob(0, 2) - 0.7).abs() < 1e-15);
        // s1 uses tau_2: s3 w.p. p, s4 w.p. 1 - p
        assert!((c.prob(1, 3) - 0.3).abs() < 1e-15);
        assert!((c.prob(1, 4) - 0.7).abs() < 1e-15);
        // s7 uses tau_8: s1, s2
        assert!((c.prob(7, 1) - 0.3).abs() < 1e-15);
        for s in 0..8 {
            assert!((c.row_sum(s) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn path_weights() {
        let m = Wmdp::new(vec![vec![Action::to(1, 1.0)], vec![Action::to(0, -3.0)]], 0);
        assert_eq!(path_weight(&m, &Path::start(0)).unwrap(), 0.0);
        let p = Path::start(0).step(0, 1).step(0, 0);
        assert_eq!(path_weight(&m, &p).unwrap(), -2.0);
        assert_eq!(path_mean_payoff(&m, &p).unwrap(), -1.0);
        let bad = Path::start(0).step(0, 0);
        assert_eq!(path_weight(&m, &bad), Err(ModelError::InvalidPath { step: 1 }));
    }

    #[test]
    fn infinite_weight_absorbs() {
        let m = Wmdp::new(vec![vec![Action::to(1, f64::INFINITY)], vec![Action::to(1, -100.0)]], 0);
        let p = Path::start(0).step(0, 1).step(0, 1);
        assert_eq!(path_weight(&m, &p).unwrap(), f64::INFINITY);
    }

    #[test]
    fn policy_enumeration_order() {
        let m = Wmdp::new(
            vec![vec![Action::to(0, 0.0), Action::to(0, 0.0)], vec![Action::to(1, 0.0); 3]],
            0,
        );
        assert_eq!(m.policy_count(), 6);
        let all: Vec<_> = (0..6).map(|i| MemorylessPolicy::from_index(&m, i).0).collect();
        assert_eq!(all, vec![vec![0, 0], vec![0, 1], vec![0, 2], vec![1, 0], vec![1, 1], vec![1, 2]]);
    }

    #[test]
    fn mean_payoff_value_rejects_nan() {
        assert!(MeanPayoffValue::new(f64::NAN).is_none());
        assert!(MeanPayoffValue::new(f64::NEG_INFINITY).is_none());
        assert_eq!(MeanPayoffValue::INFINITE.to_string(), "+inf");
    }
}
