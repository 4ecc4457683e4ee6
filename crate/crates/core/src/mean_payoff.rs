//! Maximum expected mean payoff of a finite WMDP.
//!
//! Pipeline: restrict to the part reachable from the initial state, negate
//! the weights and add a bias so that all of them are strictly positive,
//! decompose into maximal end components, solve a gain LP per MEC, collapse
//! the MECs into the MEC quotient with coin actions to `s+`/`s-`, and solve a
//! reachability LP for `s+`. With `c` the bias, `r_max` the largest
//! transformed weight and `p` the reachability value, the answer is
//! `-(r_max * p - c)`.
//!
//! On the negated model the *minimal* gain and *minimal* reachability are
//! computed: negation turns the maximal mean payoff of the original weights
//! into the minimal mean payoff of the transformed ones.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{mec_decompose, reachable_mask, reachable_states, Mec};
use crate::lp::{solve, LinearProgram, LpError, LpStatus, Relation, Sense, VarBounds};
use crate::mdp::{Action, MeanPayoffValue, ModelError, StateId, Wmdp};

/// Strict negativity margin of the stability verdict.
pub const EPS_VERDICT: f64 = 1e-9;

const GAIN_RANGE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum MeanPayoffError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("{0} LP is infeasible")]
    LpInfeasible(&'static str),
    #[error("{0} LP is unbounded")]
    LpUnbounded(&'static str),
    #[error("gain {gain} of MEC {mec} is outside [0, r_max = {r_max}]")]
    GainOutOfRange { mec: usize, gain: f64, r_max: f64 },
    #[error("quotient construction needs strictly positive weights")]
    NonPositiveWeights,
    #[error("internal error: model has no maximal end component")]
    NoMec,
}

fn optimum(lp: &LinearProgram, what: &'static str) -> Result<(f64, Vec<f64>), MeanPayoffError> {
    let sol = solve(lp)?;
    match sol.status {
        LpStatus::Optimal => Ok((sol.value.unwrap_or(0.0), sol.point.unwrap_or_default())),
        LpStatus::Infeasible => Err(MeanPayoffError::LpInfeasible(what)),
        LpStatus::Unbounded => Err(MeanPayoffError::LpUnbounded(what)),
    }
}

/// Optimal (maximal) gain of a communicating WMDP.
pub fn gain_lp(m: &Wmdp) -> Result<f64, MeanPayoffError> {
    gain_lp_with(m, Sense::Maximize)
}

/// Optimal gain of a communicating WMDP in the given direction, from the
/// state-action frequency LP
///
/// ```text
/// opt  sum r(s,a) x(s,a)
/// s.t. sum_a x(j,a) - sum_{s,a} p(j|s,a) x(s,a) = 0                          for all j
///      sum_a x(j,a) + sum_a y(j,a) - sum_{s,a} p(j|s,a) y(s,a) = 1/|S|      for all j
///      x, y >= 0
/// ```
///
/// A `+inf` weight makes the maximal gain `+inf`.
pub fn gain_lp_with(m: &Wmdp, sense: Sense) -> Result<f64, MeanPayoffError> {
    m.ensure_valid()?;
    let pairs: Vec<(StateId, usize)> = m.state_action_pairs().collect();
    if sense == Sense::Maximize && pairs.iter().any(|&(s, a)| m.weight(s, a) == f64::INFINITY) {
        return Ok(f64::INFINITY);
    }
    let n = m.state_count();
    let k = pairs.len();
    let mut objective = vec![0.0; 2 * k];
    for (i, &(s, a)) in pairs.iter().enumerate() {
        objective[i] = m.weight(s, a);
    }
    let mut lp = LinearProgram::new(sense, objective);
    // inflow[j] lists (pair index, p(j | pair))
    let mut inflow: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut outflow: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, &(s, a)) in pairs.iter().enumerate() {
        outflow[s].push(i);
        for &(t, p) in &m.action(s, a).dist {
            if p > 0.0 {
                inflow[t].push((i, p));
            }
        }
    }
    let share = 1.0 / n as f64;
    for j in 0..n {
        let mut row: Vec<(usize, f64)> = outflow[j].iter().map(|&i| (i, 1.0)).collect();
        row.extend(inflow[j].iter().map(|&(i, p)| (i, -p)));
        lp.add_sparse(&row, Relation::Eq, 0.0);

        let mut row: Vec<(usize, f64)> = outflow[j].iter().flat_map(|&i| [(i, 1.0), (k + i, 1.0)]).collect();
        row.extend(inflow[j].iter().map(|&(i, p)| (k + i, -p)));
        lp.add_sparse(&row, Relation::Eq, share);
    }
    Ok(optimum(&lp, "gain")?.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightTransform {
    pub bias_c: f64,
    pub transformed: Wmdp,
    pub had_infinite_edge: bool,
}

impl WeightTransform {
    /// Maps a value of the transformed model back: `-(v - c)`.
    pub fn recover(&self, v: f64) -> f64 {
        -(v - self.bias_c)
    }
}

/// Negates every weight and adds `c = |min(-W)| + 1` when `min(-W) <= 0`
/// (else `c = 0`), making all finite weights strictly positive. `+inf`
/// weights cannot be transformed; they get the smallest transformed weight
/// and set `had_infinite_edge` when reachable from the initial state.
pub fn transform_weights(m: &Wmdp) -> WeightTransform {
    let reach = reachable_mask(m, m.init);
    let mut had_infinite_edge = false;
    let mut min_neg = f64::INFINITY;
    for (s, a) in m.state_action_pairs() {
        let w = m.weight(s, a);
        if w == f64::INFINITY {
            had_infinite_edge |= reach[s];
        } else {
            min_neg = min_neg.min(-w);
        }
    }
    let bias_c = if min_neg.is_finite() && min_neg <= 0.0 { min_neg.abs() + 1.0 } else { 0.0 };
    let floor = if min_neg.is_finite() { min_neg + bias_c } else { 1.0 };
    let transformed = m.map_weights(|w| if w == f64::INFINITY { floor } else { -w + bias_c });
    WeightTransform { bias_c, transformed, had_infinite_edge }
}

/// MEC quotient: every MEC collapsed to one vertex carrying a coin action to
/// the absorbing sinks `s_plus` (probability `f`) and `s_minus`.
#[derive(Debug, Clone, PartialEq)]
pub struct MecQuotient {
    /// Quotient MDP; weights are unused and set to zero.
    pub model: Wmdp,
    /// Quotient state of every original state.
    pub representative: Vec<StateId>,
    /// Quotient state of each MEC.
    pub mec_vertex: Vec<StateId>,
    pub s_plus: StateId,
    pub s_minus: StateId,
    /// `gain(M_i) / r_max` per MEC.
    pub f: Vec<f64>,
    pub r_max: f64,
}

/// Builds the MEC quotient of `m` (strictly positive weights) given the
/// gain of each MEC.
pub fn build_quotient(m: &Wmdp, mecs: &[Mec], gains: &[f64]) -> Result<MecQuotient, MeanPayoffError> {
    assert_eq!(mecs.len(), gains.len(), "one gain per MEC");
    let r_max = m.state_action_pairs().map(|(s, a)| m.weight(s, a)).fold(f64::NEG_INFINITY, f64::max);
    if !(r_max > 0.0) || m.state_action_pairs().any(|(s, a)| !(m.weight(s, a) > 0.0)) {
        return Err(MeanPayoffError::NonPositiveWeights);
    }
    let mut f = Vec::with_capacity(mecs.len());
    for (i, &g) in gains.iter().enumerate() {
        if g > r_max + GAIN_RANGE_TOL || g < -GAIN_RANGE_TOL {
            return Err(MeanPayoffError::GainOutOfRange { mec: i, gain: g, r_max });
        }
        f.push((g / r_max).clamp(0.0, 1.0));
    }

    let n = m.state_count();
    let mut owner: Vec<Option<usize>> = vec![None; n];
    for (i, mec) in mecs.iter().enumerate() {
        for &s in &mec.states {
            owner[s] = Some(i);
        }
    }
    let mut representative = vec![usize::MAX; n];
    let mut mec_vertex = vec![usize::MAX; mecs.len()];
    let mut next = 0;
    for s in 0..n {
        match owner[s] {
            Some(i) if mec_vertex[i] != usize::MAX => representative[s] = mec_vertex[i],
            Some(i) => {
                mec_vertex[i] = next;
                representative[s] = next;
                next += 1;
            }
            None => {
                representative[s] = next;
                next += 1;
            }
        }
    }
    let s_plus = next;
    let s_minus = next + 1;
    let mut actions: Vec<Vec<Action>> = vec![Vec::new(); next + 2];

    let redirect = |act: &Action| -> Action {
        let mut dist: Vec<(StateId, f64)> = Vec::new();
        for &(t, p) in &act.dist {
            if p <= 0.0 {
                continue;
            }
            let r = representative[t];
            match dist.iter_mut().find(|(x, _)| *x == r) {
                Some(e) => e.1 += p,
                None => dist.push((r, p)),
            }
        }
        dist.sort_by_key(|&(t, _)| t);
        Action::new(dist, 0.0)
    };
    for s in 0..n {
        for (a, act) in m.actions[s].iter().enumerate() {
            let internal = owner[s].is_some_and(|i| mecs[i].is_enabled(s, a));
            if !internal {
                actions[representative[s]].push(redirect(act));
            }
        }
    }
    for (i, &v) in mec_vertex.iter().enumerate() {
        let mut dist = Vec::new();
        if f[i] > 0.0 {
            dist.push((s_plus, f[i]));
        }
        if f[i] < 1.0 {
            dist.push((s_minus, 1.0 - f[i]));
        }
        actions[v].push(Action::new(dist, 0.0));
    }
    actions[s_plus].push(Action::to(s_plus, 0.0));
    actions[s_minus].push(Action::to(s_minus, 0.0));

    let model = Wmdp::new(actions, representative[m.init]);
    Ok(MecQuotient { model, representative, mec_vertex, s_plus, s_minus, f, r_max })
}

/// Maximal probability of eventually reaching `s_plus` from the
/// representative of the initial state.
pub fn max_reach_probability(q: &MecQuotient) -> Result<f64, MeanPayoffError> {
    reach_probability(&q.model, q.s_plus, Sense::Maximize)
}

/// Minimal probability of eventually reaching `s_plus`.
pub fn min_reach_probability(q: &MecQuotient) -> Result<f64, MeanPayoffError> {
    reach_probability(&q.model, q.s_plus, Sense::Minimize)
}

/// Optimal probability of reaching `target` from `m.init`.
///
/// Maximal: `min sum x` s.t. `x_s >= sum T(s,a,.) x` for every action, with
/// `x = 0` on states that cannot reach the target. Minimal: `max sum x` s.t.
/// `x_s <= sum T(s,a,.) x`, with `x = 0` on states that can avoid the target
/// forever. `x_target = 1` and `0 <= x <= 1` in both.
pub fn reach_probability(m: &Wmdp, target: StateId, sense: Sense) -> Result<f64, MeanPayoffError> {
    let n = m.state_count();
    let zero = match sense {
        Sense::Maximize => {
            let reverse = reverse_graph(m);
            let can = reachable_mask(&reverse, target);
            can.iter().map(|c| !c).collect::<Vec<bool>>()
        }
        Sense::Minimize => avoid_set(m, target),
    };
    if zero[m.init] {
        return Ok(0.0);
    }
    if m.init == target {
        return Ok(1.0);
    }
    let lp_sense = match sense {
        Sense::Maximize => Sense::Minimize,
        Sense::Minimize => Sense::Maximize,
    };
    let mut lp = LinearProgram::new(lp_sense, vec![1.0; n]);
    for s in 0..n {
        let b = if s == target {
            VarBounds::between(1.0, 1.0)
        } else if zero[s] {
            VarBounds::between(0.0, 0.0)
        } else {
            VarBounds::between(0.0, 1.0)
        };
        lp.set_bounds(s, b);
    }
    let relation = match sense {
        Sense::Maximize => Relation::Ge,
        Sense::Minimize => Relation::Le,
    };
    for s in 0..n {
        if s == target || zero[s] {
            continue;
        }
        for act in &m.actions[s] {
            let mut row = vec![(s, 1.0)];
            row.extend(act.dist.iter().map(|&(t, p)| (t, -p)));
            lp.add_sparse(&row, relation, 0.0);
        }
    }
    let (_, x) = optimum(&lp, "reachability")?;
    Ok(x[m.init].clamp(0.0, 1.0))
}

fn reverse_graph(m: &Wmdp) -> Vec<Vec<usize>> {
    let mut rev = vec![Vec::new(); m.state_count()];
    for (s, acts) in m.actions.iter().enumerate() {
        for act in acts {
            for t in act.support() {
                rev[t].push(s);
            }
        }
    }
    rev
}

/// Greatest set of non-target states in which some action keeps the process
/// inside the set.
fn avoid_set(m: &Wmdp, target: StateId) -> Vec<bool> {
    let n = m.state_count();
    let mut inside: Vec<bool> = (0..n).map(|s| s != target).collect();
    loop {
        let mut changed = false;
        for s in 0..n {
            if inside[s] && !m.actions[s].iter().any(|a| a.support().all(|t| inside[t])) {
                inside[s] = false;
                changed = true;
            }
        }
        if !changed {
            return inside;
        }
    }
}

/// Everything the pipeline computed on the way to the result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanPayoffAnalysis {
    /// `None` encodes `+inf`.
    pub value: Option<f64>,
    pub infinite_edge: bool,
    pub bias_c: f64,
    pub r_max: f64,
    pub reach_probability: f64,
    pub mec_count: usize,
    pub reachable_states: usize,
    pub lp_count: usize,
    pub elapsed_secs: f64,
}

impl MeanPayoffAnalysis {
    pub fn mean_payoff(&self) -> MeanPayoffValue {
        self.value.map_or(MeanPayoffValue::INFINITE, MeanPayoffValue::finite)
    }
}

/// Number of states reachable from the initial state and whether any of
/// them has a `+inf` action.
fn scan_reachable(m: &Wmdp) -> (usize, bool) {
    let mut seen = vec![false; m.state_count()];
    let mut stack = vec![m.init];
    seen[m.init] = true;
    let (mut count, mut infinite) = (0, false);
    while let Some(s) = stack.pop() {
        count += 1;
        for a in &m.actions[s] {
            infinite |= a.weight == f64::INFINITY;
            for &(t, p) in &a.dist {
                if p > 0.0 && !seen[t] {
                    seen[t] = true;
                    stack.push(t);
                }
            }
        }
    }
    (count, infinite)
}

pub fn analyze(m: &Wmdp) -> Result<MeanPayoffAnalysis, MeanPayoffError> {
    let start = Instant::now();
    m.ensure_valid()?;
    let (reachable, infinite) = scan_reachable(m);
    if infinite {
        return Ok(MeanPayoffAnalysis {
            value: None,
            infinite_edge: true,
            bias_c: f64::NAN,
            r_max: f64::NAN,
            reach_probability: f64::NAN,
            mec_count: 0,
            reachable_states: reachable,
            lp_count: 0,
            elapsed_secs: start.elapsed().as_secs_f64(),
        });
    }
    let reach = reachable_states(m, m.init);
    let mut sub = m.restrict(&reach, |_, _| true);
    sub.init = reach.binary_search(&m.init).expect("init reaches itself");
    let t = transform_weights(&sub);
    let model = &t.transformed;
    let mecs = mec_decompose(model);
    if mecs.is_empty() {
        return Err(MeanPayoffError::NoMec);
    }
    let gains = mecs
        .par_iter()
        .map(|mec| gain_lp_with(&mec.sub_model(model), Sense::Minimize))
        .collect::<Result<Vec<f64>, _>>()?;
    let q = build_quotient(model, &mecs, &gains)?;
    let p = min_reach_probability(&q)?;
    let v = q.r_max * p;
    Ok(MeanPayoffAnalysis {
        value: Some(t.recover(v)),
        infinite_edge: false,
        bias_c: t.bias_c,
        r_max: q.r_max,
        reach_probability: p,
        mec_count: mecs.len(),
        reachable_states: reach.len(),
        lp_count: mecs.len() + 1,
        elapsed_secs: start.elapsed().as_secs_f64(),
    })
}

/// `sup` over all policies of the expected mean payoff.
pub fn max_expected_mean_payoff(m: &Wmdp) -> Result<MeanPayoffValue, MeanPayoffError> {
    Ok(analyze(m)?.mean_payoff())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UnknownReason {
    InfiniteEdge,
    NonNegativeMeanPayoff,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StabilityVerdict {
    Stable,
    Unknown(UnknownReason),
}

impl StabilityVerdict {
    pub fn from_analysis(a: &MeanPayoffAnalysis) -> Self {
        match a.value {
            None => StabilityVerdict::Unknown(UnknownReason::InfiniteEdge),
            Some(v) if v < -EPS_VERDICT => StabilityVerdict::Stable,
            Some(_) => StabilityVerdict::Unknown(UnknownReason::NonNegativeMeanPayoff),
        }
    }

    pub fn is_stable(self) -> bool {
        self == StabilityVerdict::Stable
    }
}

pub fn wmdp_stability_verdict(m: &Wmdp) -> Result<StabilityVerdict, MeanPayoffError> {
    Ok(StabilityVerdict::from_analysis(&analyze(m)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::ring_example;

    fn self_loop(w: f64) -> Wmdp {
        Wmdp::new(vec![vec![Action::to(0, w)]], 0)
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-9
    }

    #[test]
    fn gain_of_self_loop() {
        assert!(close(gain_lp(&self_loop(5.0)).unwrap(), 5.0));
    }

    #[test]
    fn gain_of_two_cycle() {
        let m = Wmdp::new(vec![vec![Action::to(1, 1.0)], vec![Action::to(0, -3.0)]], 0);
        assert!(close(gain_lp(&m).unwrap(), -1.0));
        assert!(close(gain_lp_with(&m, Sense::Minimize).unwrap(), -1.0));
    }

    #[test]
    fn gain_picks_best_cycle() {
        // 0 <-> 1 with a choice at 1 between returning (w 0) and a self-loop (w 2)
        let m = Wmdp::new(
            vec![vec![Action::to(1, 0.0)], vec![Action::to(0, 0.0), Action::to(1, 2.0)]],
            0,
        );
        assert!(close(gain_lp(&m).unwrap(), 2.0));
        assert!(close(gain_lp_with(&m, Sense::Minimize).unwrap(), 0.0));
    }

    #[test]
    fn transform_mixed_weights() {
        let m = Wmdp::new(vec![vec![Action::to(1, 2.0)], vec![Action::to(0, -1.0)]], 0);
        let t = transform_weights(&m);
        assert_eq!(t.bias_c, 3.0);
        assert_eq!(t.transformed.weight(0, 0), 1.0);
        assert_eq!(t.transformed.weight(1, 0), 4.0);
        assert!(!t.had_infinite_edge);
    }

    #[test]
    fn transform_without_bias() {
        let m = Wmdp::new(vec![vec![Action::to(1, -2.0)], vec![Action::to(0, -1.0)]], 0);
        let t = transform_weights(&m);
        assert_eq!(t.bias_c, 0.0);
        assert_eq!(t.transformed.weight(0, 0), 2.0);
        assert_eq!(t.transformed.weight(1, 0), 1.0);
    }

    #[test]
    fn transform_flags_reachable_infinity_only() {
        let reachable = Wmdp::new(vec![vec![Action::to(1, f64::INFINITY)], vec![Action::to(1, -1.0)]], 0);
        assert!(transform_weights(&reachable).had_infinite_edge);
        let unreachable = Wmdp::new(vec![vec![Action::to(0, -1.0)], vec![Action::to(1, f64::INFINITY)]], 0);
        assert!(!transform_weights(&unreachable).had_infinite_edge);
    }

    #[test]
    fn quotient_of_single_mec() {
        let m = Wmdp::new(vec![vec![Action::to(1, 2.0)], vec![Action::to(0, 4.0)]], 0);
        let mecs = mec_decompose(&m);
        let q = build_quotient(&m, &mecs, &[3.0]).unwrap();
        assert_eq!(q.model.state_count(), 3);
        assert_eq!(q.model.actions[q.mec_vertex[0]].len(), 1);
        assert!(close(q.f[0], 0.75));
        assert!(close(max_reach_probability(&q).unwrap(), 0.75));
        assert!(close(min_reach_probability(&q).unwrap(), 0.75));
    }

    #[test]
    fn quotient_keeps_chooser_actions() {
        // 0 chooses between absorbing 1 and absorbing 2
        let m = Wmdp::new(
            vec![vec![Action::to(1, 1.0), Action::to(2, 1.0)], vec![Action::to(1, 4.0)], vec![Action::to(2, 2.0)]],
            0,
        );
        let mecs = mec_decompose(&m);
        assert_eq!(mecs.len(), 2);
        let q = build_quotient(&m, &mecs, &[4.0, 2.0]).unwrap();
        assert_eq!(q.model.state_count(), 2 + 1 + 2);
        assert_eq!(q.model.actions[q.representative[0]].len(), 2);
        for &v in &q.mec_vertex {
            assert_eq!(q.model.actions[v].len(), 1);
        }
        assert!(close(max_reach_probability(&q).unwrap(), 1.0));
        assert!(close(min_reach_probability(&q).unwrap(), 0.5));
    }

    #[test]
    fn gain_out_of_range() {
        let m = self_loop(1.0);
        let mecs = mec_decompose(&m);
        assert!(matches!(
            build_quotient(&m, &mecs, &[2.0]),
            Err(MeanPayoffError::GainOutOfRange { .. })
        ));
    }

    #[test]
    fn reachability_edge_cases() {
        // s_plus unreachable
        let m = Wmdp::new(vec![vec![Action::to(0, 0.0)], vec![Action::to(1, 0.0)]], 0);
        assert_eq!(reach_probability(&m, 1, Sense::Maximize).unwrap(), 0.0);
        // deterministic path
        let m = Wmdp::new(vec![vec![Action::to(1, 0.0)], vec![Action::to(1, 0.0)]], 0);
        assert!(close(reach_probability(&m, 1, Sense::Maximize).unwrap(), 1.0));
        // single coin
        let m = Wmdp::new(
            vec![vec![Action::new(vec![(1, 0.3), (2, 0.7)], 0.0)], vec![Action::to(1, 0.0)], vec![Action::to(2, 0.0)]],
            0,
        );
        assert!(close(reach_probability(&m, 1, Sense::Maximize).unwrap(), 0.3));
        assert!(close(reach_probability(&m, 1, Sense::Minimize).unwrap(), 0.3));
    }

    #[test]
    fn min_reachability_with_avoiding_loop() {
        // 0 can loop forever or go to the target
        let m = Wmdp::new(vec![vec![Action::to(0, 0.0), Action::to(1, 0.0)], vec![Action::to(1, 0.0)]], 0);
        assert_eq!(reach_probability(&m, 1, Sense::Minimize).unwrap(), 0.0);
        assert!(close(reach_probability(&m, 1, Sense::Maximize).unwrap(), 1.0));
    }

    #[test]
    fn pipeline_on_small_models() {
        for w in [-3.5, 0.0, 2.25] {
            assert!(close(max_expected_mean_payoff(&self_loop(w)).unwrap().value(), w));
        }
        let chooser = Wmdp::new(
            vec![vec![Action::to(1, 0.0), Action::to(2, 0.0)], vec![Action::to(1, 2.0)], vec![Action::to(2, -1.0)]],
            0,
        );
        assert!(close(max_expected_mean_payoff(&chooser).unwrap().value(), 2.0));
        let inf = Wmdp::new(vec![vec![Action::to(1, f64::INFINITY)], vec![Action::to(1, -1.0)]], 0);
        assert!(max_expected_mean_payoff(&inf).unwrap().is_infinite());
    }

    #[test]
    fn ring_example_has_single_mec_value() {
        let weights = [1.0, -2.0, 0.5, -1.0, -0.5, 2.0, -3.0, 1.5];
        let m = ring_example(weights, [0.5; 8]);
        let direct = gain_lp(&m).unwrap();
        let a = analyze(&m).unwrap();
        assert_eq!(a.mec_count, 1);
        assert!((a.value.unwrap() - direct).abs() < 1e-8);
    }

    #[test]
    fn verdicts() {
        assert_eq!(wmdp_stability_verdict(&self_loop(-1.0)).unwrap(), StabilityVerdict::Stable);
        assert_eq!(
            wmdp_stability_verdict(&self_loop(0.0)).unwrap(),
            StabilityVerdict::Unknown(UnknownReason::NonNegativeMeanPayoff)
        );
        let inf = Wmdp::new(vec![vec![Action::to(0, f64::INFINITY)]], 0);
        assert_eq!(
            wmdp_stability_verdict(&inf).unwrap(),
            StabilityVerdict::Unknown(UnknownReason::InfiniteEdge)
        );
    }

    #[test]
    fn transient_states_and_partial_mecs() {
        // 0 -> {1: .5, 2: .5}; 1 has a self-loop of weight 3 or a move to 2;
        // 2 absorbing with weight -1. Best: stay at 1 => 0.5*3 + 0.5*(-1) = 1.
        let m = Wmdp::new(
            vec![
                vec![Action::new(vec![(1, 0.5), (2, 0.5)], 10.0)],
                vec![Action::to(1, 3.0), Action::to(2, 0.0)],
                vec![Action::to(2, -1.0)],
            ],
            0,
        );
        assert!(close(max_expected_mean_payoff(&m).unwrap().value(), 1.0));
    }
}
