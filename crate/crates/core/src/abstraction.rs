//! Finite WMDP abstraction of a PPHS over (location, facet) pairs and the
//! resulting stability verdict.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::reachable_mask;
use crate::mdp::{Action, StateId, Wmdp};
use crate::mean_payoff::{analyze, MeanPayoffAnalysis, MeanPayoffError, StabilityVerdict};
use crate::pphs::{FacetRef, Pphs, PphsError, SURROGATE_NEG_INF};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AbstractState {
    pub loc: usize,
    pub facet: FacetRef,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ActionKind {
    /// Flow to a guarded facet, then switch.
    Continuous,
    /// Flow forever inside the invariant with unbounded growth.
    Divergent,
    /// Flow polyhedron without nonzero directions: the state never changes.
    Stationary,
    /// No continuation exists; a self-loop with the surrogate weight.
    DeadEnd,
}

/// Where an abstract action and its weight came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionOrigin {
    pub kind: ActionKind,
    /// Target facet of the continuous part (a facet of the source location).
    pub target_facet: Option<FacetRef>,
    pub weight: f64,
    /// Case LPs solved for the weight.
    pub lp_cases: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Diagnostic {
    DivergentLocation { loc: usize },
    StationaryLocation { loc: usize },
    DegenerateFacet { loc: usize, index: usize },
    /// Executions can reach this facet but it has no guard edge.
    UnguardedFacet { loc: usize, index: usize },
    DeadEnd { loc: usize, facet: FacetRef },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AbstractWmdp {
    pub wmdp: Wmdp,
    pub states: Vec<AbstractState>,
    /// Parallel to `wmdp.actions`.
    pub origins: Vec<Vec<ActionOrigin>>,
    pub diagnostics: Vec<Diagnostic>,
    index: HashMap<AbstractState, StateId>,
    canon: HashMap<(usize, FacetRef), FacetRef>,
}

impl AbstractWmdp {
    pub fn state_index(&self, s: &AbstractState) -> Option<StateId> {
        self.index.get(s).copied()
    }

    /// Abstract state holding location `loc` on facet `facet`, which may be
    /// given as a facet of another location.
    pub fn state_of(&self, loc: usize, facet: FacetRef) -> Option<StateId> {
        let facet = if facet.loc == loc { facet } else { *self.canon.get(&(loc, facet))? };
        self.state_index(&AbstractState { loc, facet })
    }

    pub fn edge_count(&self) -> usize {
        self.wmdp.actions.iter().map(Vec::len).sum()
    }

    pub fn has_infinite_edge(&self) -> bool {
        self.origins.iter().flatten().any(|o| o.weight == f64::INFINITY)
    }
}

struct Expansion {
    actions: Vec<(ActionOrigin, Vec<(usize, FacetRef, f64)>)>,
    unguarded: Vec<usize>,
    canon: Vec<((usize, FacetRef), FacetRef)>,
}

/// Abstracts `h` to a finite WMDP over the (location, facet) pairs reachable
/// from the initial facet.
pub fn abstract_pphs(h: &Pphs) -> Result<AbstractWmdp, PphsError> {
    h.ensure_valid()?;
    let nloc = h.location_count();
    let facets: Vec<Vec<FacetRef>> = (0..nloc).map(|q| h.facets(q)).collect::<Result<_, _>>()?;
    let mut diagnostics = Vec::new();
    for (q, fs) in facets.iter().enumerate() {
        let kept: BTreeSet<usize> = fs.iter().map(|f| f.index).collect();
        for (i, hs) in h.invariant(q).halfspaces().iter().enumerate() {
            if hs.rel == crate::pphs::HsRelation::Le && !kept.contains(&i) {
                diagnostics.push(Diagnostic::DegenerateFacet { loc: q, index: i });
            }
        }
    }
    let flags: Vec<(bool, bool)> = (0..nloc)
        .into_par_iter()
        .map(|q| Ok((h.is_divergent(q)?, h.is_stationary(q)?)))
        .collect::<Result<_, PphsError>>()?;
    for (q, &(div, stat)) in flags.iter().enumerate() {
        if div {
            diagnostics.push(Diagnostic::DivergentLocation { loc: q });
        }
        if stat {
            diagnostics.push(Diagnostic::StationaryLocation { loc: q });
        }
    }

    let init = AbstractState { loc: h.init.loc, facet: h.init_facet()? };
    let mut states = vec![init];
    let mut index = HashMap::from([(init, 0)]);
    let mut canon = HashMap::new();
    let mut raw: Vec<Vec<RawAction>> = Vec::new();
    let mut unguarded = BTreeSet::new();
    let mut frontier: VecDeque<StateId> = VecDeque::from([0]);

    while !frontier.is_empty() {
        let batch: Vec<StateId> = frontier.drain(..).collect();
        let expanded: Vec<Expansion> = batch
            .par_iter()
            .map(|&s| expand(h, states[s], &facets[states[s].loc], flags[states[s].loc]))
            .collect::<Result<_, _>>()?;
        for (&s, e) in batch.iter().zip(expanded) {
            canon.extend(e.canon);
            unguarded.extend(e.unguarded.into_iter().map(|i| (states[s].loc, i)));
            let mut acts = Vec::new();
            for (origin, targets) in e.actions {
                let mut dist: Vec<(StateId, f64)> = Vec::new();
                for (loc, facet, p) in targets {
                    let t = if origin.kind == ActionKind::Continuous {
                        let key = AbstractState { loc, facet };
                        *index.entry(key).or_insert_with(|| {
                            states.push(key);
                            frontier.push_back(states.len() - 1);
                            states.len() - 1
                        })
                    } else {
                        s
                    };
                    match dist.iter_mut().find(|(x, _)| *x == t) {
                        Some(d) => d.1 += p,
                        None => dist.push((t, p)),
                    }
                }
                acts.push((origin, dist));
            }
            if raw.len() <= s {
                raw.resize_with(s + 1, Vec::new);
            }
            raw[s] = acts;
        }
    }
    raw.resize_with(states.len(), Vec::new);
    diagnostics.extend(unguarded.into_iter().map(|(loc, index)| Diagnostic::UnguardedFacet { loc, index }));

    let dead = prune_dead_ends(&mut raw);
    for (s, st) in states.iter().enumerate() {
        if dead[s] {
            diagnostics.push(Diagnostic::DeadEnd { loc: st.loc, facet: st.facet });
        }
    }
    if dead[0] {
        raw[0] = vec![(
            ActionOrigin { kind: ActionKind::DeadEnd, target_facet: None, weight: SURROGATE_NEG_INF, lp_cases: 0 },
            vec![(0, 1.0)],
        )];
    }

    // keep the live states reachable from the initial one, in discovery order
    let adj: Vec<Vec<usize>> = raw.iter().map(|acts| acts.iter().flat_map(|(_, d)| d.iter().map(|e| e.0)).collect()).collect();
    let keep = reachable_mask(&adj, 0);
    let mut renumber = vec![usize::MAX; states.len()];
    let mut kept_states = Vec::new();
    for s in (0..states.len()).filter(|&s| keep[s]) {
        renumber[s] = kept_states.len();
        kept_states.push(states[s]);
    }
    let mut actions = Vec::with_capacity(kept_states.len());
    let mut origins = Vec::with_capacity(kept_states.len());
    for s in (0..states.len()).filter(|&s| keep[s]) {
        let (acts, orgs): (Vec<Action>, Vec<ActionOrigin>) = std::mem::take(&mut raw[s])
            .into_iter()
            .map(|(o, d)| (Action::new(d.into_iter().map(|(t, p)| (renumber[t], p)).collect(), o.weight), o))
            .unzip();
        actions.push(acts);
        origins.push(orgs);
    }
    let index = kept_states.iter().enumerate().map(|(i, &st)| (st, i)).collect();
    let wmdp = Wmdp::new(actions, 0);
    Ok(AbstractWmdp { wmdp, states: kept_states, origins, diagnostics, index, canon })
}

type RawAction = (ActionOrigin, Vec<(StateId, f64)>);

/// Marks states without any continuation as dead, removes them from every
/// distribution (renormalizing what is left: a switch happens only where
/// the target mode can continue) and drops actions left without targets,
/// until nothing changes.
fn prune_dead_ends(raw: &mut [Vec<RawAction>]) -> Vec<bool> {
    let mut dead: Vec<bool> = raw.iter().map(Vec::is_empty).collect();
    loop {
        let mut changed = false;
        for s in 0..raw.len() {
            if dead[s] {
                continue;
            }
            raw[s].retain_mut(|(_, dist)| {
                if dist.iter().any(|&(t, _)| dead[t]) {
                    dist.retain(|&(t, _)| !dead[t]);
                    let total: f64 = dist.iter().map(|e| e.1).sum();
                    dist.iter_mut().for_each(|e| e.1 /= total);
                }
                !dist.is_empty()
            });
            if raw[s].is_empty() {
                dead[s] = true;
                changed = true;
            }
        }
        if !changed {
            return dead;
        }
    }
}

fn expand(h: &Pphs, s: AbstractState, facets: &[FacetRef], (divergent, stationary): (bool, bool)) -> Result<Expansion, PphsError> {
    let q = s.loc;
    let mut out = Expansion { actions: Vec::new(), unguarded: Vec::new(), canon: Vec::new() };
    for &f2 in facets {
        if !h.continuous_edge_feasible(q, s.facet, f2)? {
            continue;
        }
        let Some(guard) = h.guard(q, f2.index) else {
            out.unguarded.push(f2.index);
            continue;
        };
        let w = h.edge_weight_unchecked(q, s.facet, f2)?;
        let mut dist: Vec<(usize, f64)> = guard.dist.iter().copied().filter(|&(_, p)| p > 0.0).collect();
        dist.sort_by_key(|&(t, _)| t);
        let mut targets = Vec::with_capacity(dist.len());
        for (t, p) in dist {
            let c = h.canonical_facet(t, f2)?;
            if t != f2.loc {
                out.canon.push(((t, f2), c));
            }
            targets.push((t, c, p));
        }
        let origin = ActionOrigin { kind: ActionKind::Continuous, target_facet: Some(f2), weight: w.value, lp_cases: w.lp_cases };
        out.actions.push((origin, targets));
    }
    for (flag, kind) in [(divergent, ActionKind::Divergent), (stationary, ActionKind::Stationary)] {
        if flag {
            let origin = ActionOrigin { kind, target_facet: None, weight: f64::INFINITY, lp_cases: 0 };
            out.actions.push((origin, vec![(q, s.facet, 1.0)]));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum VerifyError {
    #[error(transparent)]
    Model(#[from] PphsError),
    #[error(transparent)]
    Analysis(#[from] MeanPayoffError),
}

/// Outcome of abstracting and analyzing a PPHS, with per-phase timings.
#[derive(Debug, Clone, PartialEq)]
pub struct PphsVerdict {
    pub verdict: StabilityVerdict,
    pub analysis: MeanPayoffAnalysis,
    pub abstraction: AbstractWmdp,
    pub abstraction_secs: f64,
    pub verification_secs: f64,
}

/// `Stable` iff the abstract WMDP has a strictly negative maximum expected
/// mean payoff. `Unknown` says nothing about instability.
pub fn pphs_stability_verdict(h: &Pphs) -> Result<PphsVerdict, VerifyError> {
    let start = Instant::now();
    let abstraction = abstract_pphs(h)?;
    let abstraction_secs = start.elapsed().as_secs_f64();
    let start = Instant::now();
    let analysis = analyze(&abstraction.wmdp)?;
    let verification_secs = start.elapsed().as_secs_f64();
    Ok(PphsVerdict {
        verdict: StabilityVerdict::from_analysis(&analysis),
        analysis,
        abstraction,
        abstraction_secs,
        verification_secs,
    })
}
