//! Independent oracles and simulators: brute-force policy enumeration,
//! definition-checking MEC enumeration, vertex-enumeration LP solving and
//! Monte-Carlo simulation of chains and PPHS executions.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::{effective_weight, ChainError};
use crate::graph::{bsccs_reachable, reachable_mask, scc_decompose, Mec};
use crate::lp::{LinearProgram, Relation, Sense};
use crate::mdp::{induce, MemorylessPolicy, StateId, Wdtmc, Wmdp};
use crate::pphs::{FacetRef, HsRelation, Polyhedron, Pphs, PphsError, GEOM_TOL, ORIGIN_EPS, SURROGATE_NEG_INF};

/// Maximum expected mean payoff over memoryless deterministic policies, by
/// enumerating all of them. Each policy is scored as the sum over reachable
/// BSCCs of absorption probability times effective weight; a reachable
/// BSCC with a `+inf` edge makes the result `+inf`.
pub fn oracle_max_mean_payoff(m: &Wmdp, cap: u128) -> Result<f64, ChainError> {
    m.ensure_valid()?;
    let count = m.policy_count();
    if count > cap {
        return Err(ChainError::EnumerationTooLarge { count, cap });
    }
    let count = u64::try_from(count).map_err(|_| ChainError::EnumerationTooLarge { count, cap })?;
    (0..count)
        .into_par_iter()
        .map(|i| {
            let c = induce(m, &MemorylessPolicy::from_index(m, i as u128))?;
            chain_expected_mean_payoff(&c)
        })
        .try_reduce(|| f64::NEG_INFINITY, |a, b| Ok(a.max(b)))
}

/// `sum_B Pr(reach B) w(B)` over the BSCCs reachable from the initial state.
pub fn chain_expected_mean_payoff(c: &Wdtmc) -> Result<f64, ChainError> {
    let bsccs = bsccs_reachable(c);
    let probs = absorption_probabilities(c, &bsccs)?;
    let mut total = 0.0;
    for (b, p) in bsccs.iter().zip(probs) {
        if p <= 0.0 {
            continue;
        }
        let w = effective_weight(c, b)?;
        if w == f64::INFINITY {
            return Ok(f64::INFINITY);
        }
        total += p * w;
    }
    Ok(total)
}

/// Probability of eventually entering each of `bsccs` from the initial
/// state, by one LU solve of the transient system.
pub fn absorption_probabilities(c: &Wdtmc, bsccs: &[Vec<StateId>]) -> Result<Vec<f64>, ChainError> {
    let n = c.state_count();
    let mut owner = vec![None; n];
    for (i, b) in bsccs.iter().enumerate() {
        for &s in b {
            owner[s] = Some(i);
        }
    }
    if let Some(i) = owner[c.init] {
        let mut out = vec![0.0; bsccs.len()];
        out[i] = 1.0;
        return Ok(out);
    }
    let reach = reachable_mask(c, c.init);
    let transient: Vec<StateId> = (0..n).filter(|&s| reach[s] && owner[s].is_none()).collect();
    let mut local = vec![usize::MAX; n];
    for (i, &s) in transient.iter().enumerate() {
        local[s] = i;
    }
    let k = transient.len();
    let mut a = DMatrix::<f64>::identity(k, k);
    let mut b = DMatrix::<f64>::zeros(k, bsccs.len());
    for (i, &s) in transient.iter().enumerate() {
        for e in &c.rows[s] {
            match owner[e.target] {
                Some(j) => b[(i, j)] += e.prob,
                None => a[(i, local[e.target])] -= e.prob,
            }
        }
    }
    let x = a.lu().solve(&b).ok_or(ChainError::SingularSystem)?;
    let row = local[c.init];
    Ok((0..bsccs.len()).map(|j| x[(row, j)].clamp(0.0, 1.0)).collect())
}

/// MECs by checking the definition on every subset of states: a subset is
/// an end component with the actions that stay inside it if every state
/// keeps an action and the result is strongly connected. Exponential; meant
/// for models with at most ~16 states.
pub fn oracle_mecs(m: &Wmdp) -> Vec<Mec> {
    let n = m.state_count();
    assert!(n <= 20, "subset enumeration over {n} states");
    let mut ecs: Vec<(u32, BTreeMap<StateId, Vec<usize>>)> = Vec::new();
    for mask in 1u32..(1 << n) {
        let inside = |s: StateId| mask >> s & 1 == 1;
        let mut enabled = BTreeMap::new();
        let mut adj = vec![Vec::new(); n];
        let mut ok = true;
        for s in (0..n).filter(|&s| inside(s)) {
            let acts: Vec<usize> = (0..m.actions[s].len()).filter(|&a| m.action(s, a).support().all(inside)).collect();
            if acts.is_empty() {
                ok = false;
                break;
            }
            for &a in &acts {
                adj[s].extend(m.action(s, a).support());
            }
            enabled.insert(s, acts);
        }
        if !ok {
            continue;
        }
        let sccs = scc_decompose(&adj);
        if sccs.components.iter().filter(|c| inside(c[0])).count() == 1 {
            ecs.push((mask, enabled));
        }
    }
    let maximal: Vec<Mec> = ecs
        .iter()
        .filter(|(mask, _)| !ecs.iter().any(|(other, _)| other != mask && other & mask == *mask))
        .map(|(mask, enabled)| Mec { states: (0..n).filter(|&s| mask >> s & 1 == 1).collect(), enabled: enabled.clone() })
        .collect();
    let mut out = maximal;
    out.sort();
    out
}

/// Optimum of a bounded LP by enumerating basic solutions. `None` if
/// infeasible. Every variable needs finite bounds, so the optimum is
/// attained at a vertex.
pub fn oracle_lp_vertex(lp: &LinearProgram) -> Option<f64> {
    let n = lp.num_vars();
    let mut rows: Vec<(Vec<f64>, f64)> = lp.constraints.iter().map(|c| (c.coeffs.clone(), c.rhs)).collect();
    for (k, b) in lp.bounds.iter().enumerate() {
        let (lo, hi) = (b.lower.expect("bounded"), b.upper.expect("bounded"));
        let mut e = vec![0.0; n];
        e[k] = 1.0;
        rows.push((e.clone(), lo));
        rows.push((e, hi));
    }
    let eqs: Vec<usize> = (0..lp.constraints.len()).filter(|&i| lp.constraints[i].relation == Relation::Eq).collect();
    let free: Vec<usize> = (0..rows.len()).filter(|i| !eqs.contains(i)).collect();
    if eqs.len() > n {
        return None;
    }
    let feasible = |x: &[f64]| {
        let tol = 1e-7;
        lp.constraints.iter().all(|c| {
            let v: f64 = c.coeffs.iter().zip(x).map(|(a, b)| a * b).sum();
            match c.relation {
                Relation::Le => v <= c.rhs + tol,
                Relation::Ge => v >= c.rhs - tol,
                Relation::Eq => (v - c.rhs).abs() <= tol,
            }
        }) && lp.bounds.iter().zip(x).all(|(b, &v)| v >= b.lower.unwrap() - tol && v <= b.upper.unwrap() + tol)
    };
    let mut best: Option<f64> = None;
    for combo in combinations(free.len(), n - eqs.len()) {
        let picked: Vec<usize> = eqs.iter().copied().chain(combo.iter().map(|&i| free[i])).collect();
        let a = DMatrix::from_fn(n, n, |i, j| rows[picked[i]].0[j]);
        let b = DVector::from_fn(n, |i, _| rows[picked[i]].1);
        let Some(x) = a.lu().solve(&b) else { continue };
        let x: Vec<f64> = x.iter().copied().collect();
        if x.iter().any(|v| !v.is_finite()) || !feasible(&x) {
            continue;
        }
        let v = lp.objective_value(&x);
        best = Some(match (best, lp.sense) {
            (None, _) => v,
            (Some(b), Sense::Maximize) => b.max(v),
            (Some(b), Sense::Minimize) => b.min(v),
        });
    }
    best
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    go(0, n, k, &mut cur, &mut out);
    out
}

/// Partial averages `S_n / n` of independent runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub runs: usize,
    pub horizon: usize,
    /// Per run; a run that ended early reports the average over the steps
    /// it completed (0 if none).
    pub partial_means: Vec<f64>,
    pub estimate: f64,
    pub negative_fraction: f64,
    pub stuck_runs: usize,
}

impl SimulationReport {
    fn from_runs(horizon: usize, runs: &[(f64, usize)]) -> Self {
        let partial_means: Vec<f64> = runs.iter().map(|&(s, k)| if k == 0 { 0.0 } else { s / k as f64 }).collect();
        let count = partial_means.len();
        let estimate = partial_means.iter().sum::<f64>() / count as f64;
        let negative_fraction = partial_means.iter().filter(|&&v| v < 0.0).count() as f64 / count as f64;
        SimulationReport {
            runs: count,
            horizon,
            partial_means,
            estimate,
            negative_fraction,
            stuck_runs: runs.iter().filter(|&&(_, k)| k < horizon).count(),
        }
    }
}

fn run_rng(seed: u64, run: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run as u64);
    rng
}

fn sample_index(rng: &mut ChaCha8Rng, probs: impl Iterator<Item = f64>) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, p) in probs.enumerate() {
        acc += p;
        last = i;
        if u < acc {
            return i;
        }
    }
    last
}

/// Simulates `runs` paths of `horizon` steps from the initial state. Run
/// `r` draws from ChaCha8 seeded with `seed` on stream `r`.
pub fn simulate_chain(c: &Wdtmc, horizon: usize, runs: usize, seed: u64) -> SimulationReport {
    assert!(horizon >= 1 && runs >= 1, "horizon and runs must be positive");
    let results: Vec<(f64, usize)> = (0..runs)
        .into_par_iter()
        .map(|r| {
            let mut rng = run_rng(seed, r);
            let mut s = c.init;
            let mut sum = 0.0;
            for _ in 0..horizon {
                let row = &c.rows[s];
                let e = &row[sample_index(&mut rng, row.iter().map(|e| e.prob))];
                sum += e.weight;
                s = e.target;
            }
            (sum, horizon)
        })
        .collect();
    SimulationReport::from_runs(horizon, &results)
}

/// One simulated switch: location `loc` left facet `from` (possibly given
/// as a facet of the previous location) and reached its facet `to`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PphsStep {
    pub loc: usize,
    pub from: FacetRef,
    pub to: usize,
    /// `ln(|x2|_inf / |x1|_inf)`; `+inf` when the flow never leaves the
    /// invariant.
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TraceEnd {
    Horizon,
    /// The last flow never reaches a facet.
    Diverged,
    /// The last flow reached the origin.
    Origin,
    /// No sampled direction moves, or the facet reached has no guard.
    Stuck,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PphsTrace {
    pub steps: Vec<PphsStep>,
    pub end: TraceEnd,
}

/// Direction generators of a flow polyhedron: its nonzero vertices and
/// extreme rays, or the unit vectors of the recession cone when it has no
/// extreme rays.
pub fn flow_generators(p: &Polyhedron) -> Vec<Vec<f64>> {
    let n = p.dim;
    let mut out: Vec<Vec<f64>> = Vec::new();
    let push = |v: Vec<f64>, out: &mut Vec<Vec<f64>>| {
        let norm = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        if norm <= GEOM_TOL {
            return;
        }
        let v: Vec<f64> = v.iter().map(|x| x / norm).collect();
        if !out.iter().any(|u| u.iter().zip(&v).all(|(a, b)| (a - b).abs() < 1e-9)) {
            out.push(v);
        }
    };
    let rows: Vec<(&[f64], f64)> = p.halfspaces.iter().map(|h| (h.normal.as_slice(), h.offset)).collect();
    let in_poly = |x: &[f64], homogeneous: bool| {
        p.halfspaces.iter().all(|h| {
            let v = h.dot(x) - if homogeneous { 0.0 } else { h.offset };
            let tol = 1e-9 * (1.0 + h.offset.abs());
            match h.rel {
                HsRelation::Le => v <= tol,
                HsRelation::Eq => v.abs() <= tol,
            }
        })
    };
    for combo in combinations(rows.len(), n) {
        let a = DMatrix::from_fn(n, n, |i, j| rows[combo[i]].0[j]);
        let b = DVector::from_fn(n, |i, _| rows[combo[i]].1);
        if let Some(x) = a.lu().solve(&b) {
            let x: Vec<f64> = x.iter().copied().collect();
            if x.iter().all(|v| v.is_finite()) && in_poly(&x, false) {
                push(x, &mut out);
            }
        }
    }
    let mut rays = Vec::new();
    for combo in combinations(rows.len(), n.saturating_sub(1)) {
        let r = null_vector(&combo.iter().map(|&i| rows[i].0).collect::<Vec<_>>(), n);
        for r in [r.iter().map(|x| -x).collect(), r] {
            if in_poly(&r, true) {
                push(r, &mut rays);
            }
        }
    }
    if rays.is_empty() {
        for k in 0..n {
            for s in [1.0, -1.0] {
                let e: Vec<f64> = (0..n).map(|j| if j == k { s } else { 0.0 }).collect();
                if in_poly(&e, true) {
                    push(e, &mut rays);
                }
            }
        }
    }
    for r in rays {
        push(r, &mut out);
    }
    out
}

/// Generalized cross product of `n - 1` vectors in `R^n`.
fn null_vector(rows: &[&[f64]], n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| {
            if n == 1 {
                return 1.0;
            }
            let minor = DMatrix::from_fn(n - 1, n - 1, |i, j| rows[i][if j < k { j } else { j + 1 }]);
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sign * minor.determinant()
        })
        .collect()
}

const RESAMPLES: usize = 32;

fn inf_norm(x: &[f64]) -> f64 {
    x.iter().fold(0.0f64, |a, v| a.max(v.abs()))
}

enum Move {
    Hit { point: Vec<f64>, facets: Vec<usize> },
    Diverge,
}

/// Follows `d` from `x` inside `I(q)` to the first boundary crossing.
fn advance(h: &Pphs, q: usize, x: &[f64], d: &[f64]) -> Option<Move> {
    let hs = h.invariant(q).halfspaces();
    let mut t_star = f64::INFINITY;
    let mut rates = Vec::with_capacity(hs.len());
    for hsp in hs {
        let ad = hsp.dot(d);
        let ax = hsp.dot(x);
        match hsp.rel {
            HsRelation::Eq if ad.abs() > GEOM_TOL => return None,
            HsRelation::Eq => rates.push(None),
            HsRelation::Le if ad > GEOM_TOL => {
                let t = (-ax / ad).max(0.0);
                t_star = t_star.min(t);
                rates.push(Some(t));
            }
            HsRelation::Le => rates.push(None),
        }
    }
    if t_star == f64::INFINITY {
        return Some(Move::Diverge);
    }
    if t_star * inf_norm(d) <= 1e-9 * inf_norm(x) {
        return None;
    }
    let point: Vec<f64> = x.iter().zip(d).map(|(a, b)| a + t_star * b).collect();
    let facets = rates
        .iter()
        .enumerate()
        .filter(|(_, t)| t.is_some_and(|t| t <= t_star * (1.0 + 1e-9) + 1e-15))
        .map(|(i, _)| i)
        .collect();
    Some(Move::Hit { point, facets })
}

fn sample_direction(rng: &mut ChaCha8Rng, gens: &[Vec<f64>], dim: usize) -> Vec<f64> {
    if rng.random_bool(0.5) {
        return gens[rng.random_range(0..gens.len())].clone();
    }
    let mut d = vec![0.0; dim];
    for g in gens {
        let w: f64 = rng.random();
        d.iter_mut().zip(g).for_each(|(a, b)| *a += w * b);
    }
    d
}

/// Tries up to `RESAMPLES` directions of `F(q)` from `x`.
fn try_move(h: &Pphs, q: usize, x: &[f64], gens: &[Vec<f64>], rng: &mut ChaCha8Rng) -> Option<Move> {
    if gens.is_empty() {
        return None;
    }
    (0..RESAMPLES).find_map(|_| advance(h, q, x, &sample_direction(rng, gens, h.dim)))
}

/// Simulates one execution for `horizon` switches.
pub fn simulate_pphs_trace(h: &Pphs, horizon: usize, seed: u64, run: usize) -> Result<PphsTrace, PphsError> {
    h.ensure_valid()?;
    let gens: Vec<Vec<Vec<f64>>> = h.locations.iter().map(|l| flow_generators(&l.flow)).collect();
    Ok(trace_run(h, &gens, horizon, &mut run_rng(seed, run), h.init_facet()?))
}

fn trace_run(h: &Pphs, gens: &[Vec<Vec<f64>>], horizon: usize, rng: &mut ChaCha8Rng, init_facet: FacetRef) -> PphsTrace {
    let mut q = h.init.loc;
    let norm = inf_norm(&h.init.point);
    let mut x: Vec<f64> = h.init.point.iter().map(|v| v / norm).collect();
    let mut from = init_facet;
    let mut steps = Vec::with_capacity(horizon.min(1 << 16));
    let mut pending = match try_move(h, q, &x, &gens[q], rng) {
        Some(m) => m,
        None => return PphsTrace { steps, end: TraceEnd::Stuck },
    };
    while steps.len() < horizon {
        let (point, facets) = match pending {
            Move::Diverge => {
                steps.push(PphsStep { loc: q, from, to: usize::MAX, weight: f64::INFINITY });
                return PphsTrace { steps, end: TraceEnd::Diverged };
            }
            Move::Hit { point, facets } => (point, facets),
        };
        let n2 = inf_norm(&point);
        let Some(&to) = facets.iter().find(|&&i| h.guard(q, i).is_some()) else {
            return PphsTrace { steps, end: TraceEnd::Stuck };
        };
        if n2 <= ORIGIN_EPS {
            steps.push(PphsStep { loc: q, from, to, weight: SURROGATE_NEG_INF });
            return PphsTrace { steps, end: TraceEnd::Origin };
        }
        steps.push(PphsStep { loc: q, from, to, weight: (n2 / inf_norm(&x)).ln() });
        if steps.len() == horizon {
            break;
        }
        x = point.iter().map(|v| v / n2).collect();
        // switch to a target that can continue, drawn by the guard distribution
        let mut targets: Vec<(usize, f64)> = h.guard(q, to).unwrap().dist.iter().copied().filter(|e| e.1 > 0.0).collect();
        let mut next = None;
        while !targets.is_empty() {
            let total: f64 = targets.iter().map(|e| e.1).sum();
            let i = sample_index(rng, targets.iter().map(|e| e.1 / total));
            let t = targets.swap_remove(i).0;
            if let Some(m) = try_move(h, t, &x, &gens[t], rng) {
                next = Some((t, m));
                break;
            }
        }
        let Some((t, m)) = next else {
            return PphsTrace { steps, end: TraceEnd::Stuck };
        };
        from = FacetRef { loc: q, index: to };
        q = t;
        pending = m;
    }
    PphsTrace { steps, end: TraceEnd::Horizon }
}

/// Monte-Carlo estimate of the mean payoff of PPHS executions. Flow
/// directions are drawn from the generators of `F(q)`: one generator or a
/// random nonnegative combination of all of them, each with probability
/// 1/2. A run reaching the origin stops there with the surrogate weight of
/// its last step; runs that cannot continue count as stuck.
pub fn simulate_pphs(h: &Pphs, horizon: usize, runs: usize, seed: u64) -> Result<SimulationReport, PphsError> {
    assert!(horizon >= 1 && runs >= 1, "horizon and runs must be positive");
    h.ensure_valid()?;
    let init_facet = h.init_facet()?;
    let gens: Vec<Vec<Vec<f64>>> = h.locations.iter().map(|l| flow_generators(&l.flow)).collect();
    let results: Vec<(f64, usize, bool)> = (0..runs)
        .into_par_iter()
        .map(|r| {
            let t = trace_run(h, &gens, horizon, &mut run_rng(seed, r), init_facet);
            let sum: f64 = t.steps.iter().map(|s| s.weight).sum();
            (sum, t.steps.len(), t.end == TraceEnd::Stuck)
        })
        .collect();
    let runs_: Vec<(f64, usize)> = results.iter().map(|&(s, k, _)| (s, k)).collect();
    let mut report = SimulationReport::from_runs(horizon, &runs_);
    report.stuck_runs = results.iter().filter(|r| r.2).count();
    Ok(report)
}
