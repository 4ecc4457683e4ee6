//! Reachability, strongly connected components, bottom SCCs and maximal end
//! components.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::mdp::{ActionId, StateId, Wdtmc, Wmdp};

/// Anything with a successor relation over `0..node_count()`.
pub trait Digraph {
    fn node_count(&self) -> usize;
    fn successors(&self, node: usize) -> Vec<usize>;
}

impl Digraph for Wmdp {
    fn node_count(&self) -> usize {
        self.state_count()
    }

    /// Positive-probability successors under any action.
    fn successors(&self, s: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self.actions[s].iter().flat_map(|a| a.support()).collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

impl Digraph for Wdtmc {
    fn node_count(&self) -> usize {
        self.state_count()
    }

    fn successors(&self, s: usize) -> Vec<usize> {
        self.rows[s].iter().filter(|e| e.prob > 0.0).map(|e| e.target).collect()
    }
}

/// Plain adjacency lists.
impl Digraph for Vec<Vec<usize>> {
    fn node_count(&self) -> usize {
        self.len()
    }

    fn successors(&self, s: usize) -> Vec<usize> {
        self[s].clone()
    }
}

/// Membership mask of the nodes reachable from `from` (including itself).
pub fn reachable_mask<G: Digraph + ?Sized>(g: &G, from: usize) -> Vec<bool> {
    let mut seen = vec![false; g.node_count()];
    let mut stack = vec![from];
    seen[from] = true;
    while let Some(v) = stack.pop() {
        for w in g.successors(v) {
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    seen
}

/// Sorted list of the states reachable from `from`.
pub fn reachable_states<G: Digraph + ?Sized>(g: &G, from: usize) -> Vec<usize> {
    reachable_mask(g, from)
        .into_iter()
        .enumerate()
        .filter_map(|(i, r)| r.then_some(i))
        .collect()
}

/// Strongly connected components of `adj`, labelled by component id.
/// Iterative Tarjan; ids are in reverse topological order.
pub fn tarjan(adj: &[Vec<usize>]) -> (usize, Vec<usize>) {
    const UNVISITED: usize = usize::MAX;
    let n = adj.len();
    let mut index = vec![UNVISITED; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut comp = vec![UNVISITED; n];
    let mut stack = Vec::new();
    let mut next_index = 0;
    let mut next_comp = 0;
    // (node, position of next successor to explore)
    let mut call: Vec<(usize, usize)> = Vec::new();

    for root in 0..n {
        if index[root] != UNVISITED {
            continue;
        }
        call.push((root, 0));
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(&mut (v, ref mut pos)) = call.last_mut() {
            if let Some(&w) = adj[v].get(*pos) {
                *pos += 1;
                if index[w] == UNVISITED {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            call.pop();
            if let Some(&(parent, _)) = call.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                loop {
                    let w = stack.pop().expect("tarjan stack underflow");
                    on_stack[w] = false;
                    comp[w] = next_comp;
                    if w == v {
                        break;
                    }
                }
                next_comp += 1;
            }
        }
    }
    (next_comp, comp)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SccPartition {
    /// Each component sorted ascending; components ordered by their
    /// smallest state.
    pub components: Vec<Vec<usize>>,
    pub is_bottom: Vec<bool>,
}

impl SccPartition {
    /// Component index of every node.
    pub fn labels(&self) -> Vec<usize> {
        let n = self.components.iter().map(|c| c.len()).sum();
        let mut out = vec![0; n];
        for (i, c) in self.components.iter().enumerate() {
            for &s in c {
                out[s] = i;
            }
        }
        out
    }
}

pub fn scc_decompose<G: Digraph + ?Sized>(g: &G) -> SccPartition {
    let adj: Vec<Vec<usize>> = (0..g.node_count()).map(|v| g.successors(v)).collect();
    let (count, comp) = tarjan(&adj);
    let mut groups = vec![Vec::new(); count];
    for (v, &c) in comp.iter().enumerate() {
        groups[c].push(v);
    }
    let mut bottom = vec![true; count];
    for (v, succ) in adj.iter().enumerate() {
        if succ.iter().any(|&w| comp[w] != comp[v]) {
            bottom[comp[v]] = false;
        }
    }
    let mut order: Vec<usize> = (0..count).collect();
    order.sort_by_key(|&c| groups[c][0]);
    SccPartition {
        components: order.iter().map(|&c| groups[c].clone()).collect(),
        is_bottom: order.iter().map(|&c| bottom[c]).collect(),
    }
}

/// Bottom SCCs of `c` reachable from its initial state.
pub fn bsccs_reachable(c: &Wdtmc) -> Vec<Vec<StateId>> {
    let reach = reachable_mask(c, c.init);
    let part = scc_decompose(c);
    part.components
        .into_iter()
        .zip(part.is_bottom)
        .filter(|(comp, bottom)| *bottom && reach[comp[0]])
        .map(|(comp, _)| comp)
        .collect()
}

/// A maximal end component: its states and the actions that keep the
/// process inside it.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Mec {
    pub states: Vec<StateId>,
    pub enabled: BTreeMap<StateId, Vec<ActionId>>,
}

impl Mec {
    pub fn contains(&self, s: StateId) -> bool {
        self.states.binary_search(&s).is_ok()
    }

    pub fn is_enabled(&self, s: StateId, a: ActionId) -> bool {
        self.enabled.get(&s).is_some_and(|acts| acts.contains(&a))
    }

    /// The sub-WMDP induced by this MEC, with local state indices following
    /// `self.states`.
    pub fn sub_model(&self, m: &Wmdp) -> Wmdp {
        m.restrict(&self.states, |s, a| self.is_enabled(s, a))
    }
}

/// A state-action pair removed during MEC decomposition, with a successor
/// that lay outside its SCC at the time of removal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pruned {
    pub state: StateId,
    pub action: ActionId,
    pub escapes_to: StateId,
    pub round: usize,
}

pub fn mec_decompose(m: &Wmdp) -> Vec<Mec> {
    mec_decompose_traced(m).0
}

/// MEC decomposition on the bipartite graph of state vertices and
/// state-action vertices. A state-action vertex is pruned when one of its
/// successors lies in a different SCC; SCCs are recomputed until nothing is
/// pruned. Also returns every pruning step.
pub fn mec_decompose_traced(m: &Wmdp) -> (Vec<Mec>, Vec<Pruned>) {
    let n = m.state_count();
    // vertex ids: states 0..n, then one per (s, a)
    let pairs: Vec<(StateId, ActionId)> = m.state_action_pairs().collect();
    let mut alive = vec![true; pairs.len()];
    let support: Vec<Vec<StateId>> = pairs
        .iter()
        .map(|&(s, a)| {
            let mut sup: Vec<StateId> = m.action(s, a).support().collect();
            sup.sort_unstable();
            sup.dedup();
            sup
        })
        .collect();

    let mut trace = Vec::new();
    let mut round = 0;
    let comp = loop {
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n + pairs.len()];
        for (k, &(s, _)) in pairs.iter().enumerate() {
            if alive[k] {
                adj[s].push(n + k);
                adj[n + k].extend_from_slice(&support[k]);
            }
        }
        let (_, comp) = tarjan(&adj);
        let mut changed = false;
        for k in 0..pairs.len() {
            if !alive[k] {
                continue;
            }
            if let Some(&out) = support[k].iter().find(|&&t| comp[t] != comp[n + k]) {
                alive[k] = false;
                changed = true;
                let (s, a) = pairs[k];
                trace.push(Pruned { state: s, action: a, escapes_to: out, round });
            }
        }
        if !changed {
            break comp;
        }
        round += 1;
    };

    let mut by_comp: BTreeMap<usize, Mec> = BTreeMap::new();
    for (k, &(s, a)) in pairs.iter().enumerate() {
        if !alive[k] {
            continue;
        }
        debug_assert_eq!(comp[s], comp[n + k]);
        let mec = by_comp.entry(comp[n + k]).or_insert_with(|| Mec { states: Vec::new(), enabled: BTreeMap::new() });
        mec.enabled.entry(s).or_default().push(a);
    }
    let mut mecs: Vec<Mec> = by_comp
        .into_values()
        .map(|mut mec| {
            mec.states = mec.enabled.keys().copied().collect();
            mec
        })
        .collect();
    mecs.sort_by_key(|mec| mec.states[0]);
    (mecs, trace)
}
