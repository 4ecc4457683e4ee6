//! Polyhedral probabilistic hybrid systems: model, validation and the
//! LP-based geometric queries behind the abstraction.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lp::{solve, LinearProgram, LpError, LpStatus, Relation, Sense, VarBounds};

/// Containment and membership slack for geometric checks.
pub const GEOM_TOL: f64 = 1e-9;
/// Smallest displacement or norm that counts as nonzero.
pub const MOVE_EPS: f64 = 1e-9;
/// Largest `||x2||_inf` (with `||x1||_inf = 1`) still treated as the origin.
pub const ORIGIN_EPS: f64 = 1e-12;
/// Finite stand-in for a weight of `-inf`: transitions into the origin and
/// states where executions end.
pub const SURROGATE_NEG_INF: f64 = -1.0e3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HsRelation {
    Le,
    Eq,
}

/// `normal . x (<= | =) offset`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Halfspace {
    pub normal: Vec<f64>,
    pub rel: HsRelation,
    pub offset: f64,
}

impl Halfspace {
    pub fn le(normal: Vec<f64>, offset: f64) -> Self {
        Halfspace { normal, rel: HsRelation::Le, offset }
    }

    pub fn eq(normal: Vec<f64>, offset: f64) -> Self {
        Halfspace { normal, rel: HsRelation::Eq, offset }
    }

    pub fn dot(&self, x: &[f64]) -> f64 {
        self.normal.iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn holds(&self, x: &[f64], tol: f64) -> bool {
        let lhs = self.dot(x);
        match self.rel {
            HsRelation::Le => lhs <= self.offset + tol,
            HsRelation::Eq => (lhs - self.offset).abs() <= tol,
        }
    }

    fn activated(&self) -> Halfspace {
        Halfspace { rel: HsRelation::Eq, ..self.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polyhedron {
    pub dim: usize,
    pub halfspaces: Vec<Halfspace>,
}

impl Polyhedron {
    pub fn new(dim: usize, halfspaces: Vec<Halfspace>) -> Result<Self, PphsError> {
        let p = Polyhedron { dim, halfspaces };
        match p.problems("polyhedron").into_iter().next() {
            Some(e) => Err(e),
            None => Ok(p),
        }
    }

    /// The single point `p`.
    pub fn point(p: &[f64]) -> Self {
        let dim = p.len();
        let halfspaces = (0..dim).map(|k| Halfspace::eq(unit(dim, k, 1.0), p[k])).collect();
        Polyhedron { dim, halfspaces }
    }

    /// The closed convex cone spanned by two vectors of the plane.
    pub fn cone2(g1: [f64; 2], g2: [f64; 2]) -> Self {
        let (g1, g2) = if cross(g1, g2) >= 0.0 { (g1, g2) } else { (g2, g1) };
        // cross(g1, v) >= 0 and cross(v, g2) >= 0
        Polyhedron {
            dim: 2,
            halfspaces: vec![Halfspace::le(vec![g1[1], -g1[0]], 0.0), Halfspace::le(vec![-g2[1], g2[0]], 0.0)],
        }
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.halfspaces.iter().all(|h| h.holds(x, tol))
    }

    pub fn is_cone(&self) -> bool {
        self.halfspaces.iter().all(|h| h.offset == 0.0)
    }

    fn problems(&self, what: &str) -> Vec<PphsError> {
        let mut out = Vec::new();
        if self.dim == 0 {
            out.push(PphsError::Shape(format!("{what}: dimension must be positive")));
        }
        for (i, h) in self.halfspaces.iter().enumerate() {
            if h.normal.len() != self.dim {
                out.push(PphsError::Shape(format!(
                    "{what}, constraint {i}: normal has length {} instead of {}",
                    h.normal.len(),
                    self.dim
                )));
            } else if h.normal.iter().all(|&a| a == 0.0) {
                out.push(PphsError::Shape(format!("{what}, constraint {i}: zero normal")));
            }
            if h.normal.iter().chain([&h.offset]).any(|a| !a.is_finite()) {
                out.push(PphsError::Shape(format!("{what}, constraint {i}: non-finite coefficient")));
            }
        }
        out
    }
}

fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn unit(dim: usize, k: usize, s: f64) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    v[k] = s;
    v
}

/// A polyhedral cone (all offsets zero), closed under positive scaling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeInvariant(Polyhedron);

impl ConeInvariant {
    pub fn new(base: Polyhedron) -> Result<Self, PphsError> {
        if !base.is_cone() {
            return Err(PphsError::NotACone(None));
        }
        Ok(ConeInvariant(base))
    }

    pub fn base(&self) -> &Polyhedron {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim
    }

    pub fn halfspaces(&self) -> &[Halfspace] {
        &self.0.halfspaces
    }

    /// Constraints of the facet obtained by activating halfspace `index`.
    pub fn facet_constraints(&self, index: usize) -> Vec<Halfspace> {
        self.halfspaces()
            .iter()
            .enumerate()
            .map(|(i, h)| if i == index { h.activated() } else { h.clone() })
            .collect()
    }
}

/// Quadrant/orthant-style cone `{x : s_k x_k >= 0}` for the given signs.
pub fn orthant(signs: &[f64]) -> ConeInvariant {
    let dim = signs.len();
    let hs = (0..dim).map(|k| Halfspace::le(unit(dim, k, -signs[k]), 0.0)).collect();
    ConeInvariant(Polyhedron { dim, halfspaces: hs })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Location {
    pub invariant: ConeInvariant,
    pub flow: Polyhedron,
}

/// Probabilistic switch taken when location `loc` reaches the facet of its
/// invariant activating halfspace `facet`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuardEdge {
    pub loc: usize,
    pub facet: usize,
    pub dist: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitPoint {
    pub loc: usize,
    pub point: Vec<f64>,
}

/// A facet as a set: halfspace `index` of the invariant of `loc`, activated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FacetRef {
    pub loc: usize,
    pub index: usize,
}

impl fmt::Display for FacetRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "q{}/h{}", self.loc, self.index)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pphs {
    pub dim: usize,
    pub locations: Vec<Location>,
    pub edges: Vec<GuardEdge>,
    pub init: InitPoint,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum PphsError {
    #[error("{0}")]
    Shape(String),
    #[error("invariant not a cone{}", .0.map(|l| format!(" (location {l})")).unwrap_or_default())]
    NotACone(Option<usize>),
    #[error("location {0}: invariant contains no point besides the origin")]
    EmptyInvariant(usize),
    #[error("location {0}: flow polyhedron is empty")]
    EmptyFlow(usize),
    #[error("{what}: location {loc} out of range")]
    LocationOutOfRange { what: String, loc: usize },
    #[error("location {loc}: halfspace {index} is not an inequality of the invariant")]
    NotAFacet { loc: usize, index: usize },
    #[error("location {loc}, facet {facet}: more than one guard edge")]
    DuplicateGuard { loc: usize, facet: usize },
    #[error("location {loc}, facet {facet}: switching probabilities sum to {sum}")]
    GuardNotStochastic { loc: usize, facet: usize, sum: f64 },
    #[error("location {loc}, facet {facet}: guard is not contained in the invariant of target {target}")]
    GuardNotContained { loc: usize, facet: usize, target: usize },
    #[error("initial point lies outside the invariant of location {0}")]
    InitNotInInvariant(usize),
    #[error("initial point lies on no facet of location {0}")]
    InitNotOnFacet(usize),
    #[error("initial point lies on several facets {0:?}; choose a point on exactly one")]
    InitAmbiguous(Vec<usize>),
    #[error("initial point is the origin")]
    InitAtOrigin,
    #[error("no continuous transition from {from} to {to} in location {loc}")]
    InfeasibleEdge { loc: usize, from: FacetRef, to: FacetRef },
    #[error("invalid PPHS: {}", .0.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<PphsError>),
    #[error(transparent)]
    Lp(#[from] LpError),
}

fn lp_optimum(lp: &LinearProgram) -> Result<Option<f64>, LpError> {
    let sol = solve(lp)?;
    Ok(match sol.status {
        LpStatus::Optimal => sol.value,
        LpStatus::Unbounded => Some(f64::INFINITY),
        LpStatus::Infeasible => None,
    })
}

fn push_rows(lp: &mut LinearProgram, hs: &[Halfspace], offset: usize) {
    for h in hs {
        let row: Vec<(usize, f64)> = h.normal.iter().enumerate().map(|(k, &a)| (offset + k, a)).collect();
        lp.add_sparse(&row, relation(h.rel), h.offset);
    }
}

fn relation(r: HsRelation) -> Relation {
    match r {
        HsRelation::Le => Relation::Le,
        HsRelation::Eq => Relation::Eq,
    }
}

fn free_lp(dim: usize, sense: Sense, objective: Vec<(usize, f64)>, extra: usize) -> LinearProgram {
    let mut c = vec![0.0; dim + extra];
    for (k, v) in objective {
        c[k] += v;
    }
    let mut lp = LinearProgram::new(sense, c);
    for k in 0..dim {
        lp.set_bounds(k, VarBounds::FREE);
    }
    lp
}

/// Whether the polyhedron given by `hs` has a point other than the origin,
/// by 2n LPs maximizing `s x_k`.
pub fn has_nonzero_point(hs: &[Halfspace], dim: usize) -> Result<bool, LpError> {
    for k in 0..dim {
        for s in [1.0, -1.0] {
            let mut lp = free_lp(dim, Sense::Maximize, vec![(k, s)], 0);
            push_rows(&mut lp, hs, 0);
            match lp_optimum(&lp)? {
                None => return Ok(false),
                Some(v) if v > MOVE_EPS => return Ok(true),
                Some(_) => {}
            }
        }
    }
    Ok(false)
}

/// `inner ⊆ outer` for two cones: every constraint of `outer` is bounded by
/// zero over `inner` intersected with the unit box.
pub fn cone_contains(outer: &[Halfspace], inner: &[Halfspace], dim: usize) -> Result<bool, LpError> {
    for h in outer {
        let senses: &[f64] = match h.rel {
            HsRelation::Le => &[1.0],
            HsRelation::Eq => &[1.0, -1.0],
        };
        for &s in senses {
            let objective = h.normal.iter().enumerate().map(|(k, &a)| (k, s * a)).collect();
            let mut lp = free_lp(dim, Sense::Maximize, objective, 0);
            for k in 0..dim {
                lp.set_bounds(k, VarBounds::between(-1.0, 1.0));
            }
            push_rows(&mut lp, inner, 0);
            if let Some(v) = lp_optimum(&lp)? {
                if v > GEOM_TOL {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// Indices of the inequality halfspaces of `inv` whose facet contains a
/// nonzero point, in index order.
pub fn enumerate_facets(inv: &ConeInvariant) -> Result<Vec<usize>, PphsError> {
    if !has_nonzero_point(inv.halfspaces(), inv.dim())? {
        return Err(PphsError::EmptyInvariant(0));
    }
    let mut out = Vec::new();
    for (i, h) in inv.halfspaces().iter().enumerate() {
        if h.rel == HsRelation::Le && has_nonzero_point(&inv.facet_constraints(i), inv.dim())? {
            out.push(i);
        }
    }
    Ok(out)
}

/// Result of the case-split edge-weight computation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeWeight {
    /// Natural log of the supremum of `||x2|| / ||x1||`; `+inf` if some case
    /// is unbounded.
    pub value: f64,
    /// Number of case LPs solved (`4 n^2`).
    pub lp_cases: usize,
    pub feasible_cases: usize,
    pub unbounded_cases: usize,
}

impl Pphs {
    pub fn location_count(&self) -> usize {
        self.locations.len()
    }

    pub fn invariant(&self, q: usize) -> &ConeInvariant {
        &self.locations[q].invariant
    }

    pub fn facet_constraints(&self, f: FacetRef) -> Vec<Halfspace> {
        self.invariant(f.loc).facet_constraints(f.index)
    }

    pub fn facets(&self, q: usize) -> Result<Vec<FacetRef>, PphsError> {
        let idx = enumerate_facets(self.invariant(q)).map_err(|e| match e {
            PphsError::EmptyInvariant(_) => PphsError::EmptyInvariant(q),
            e => e,
        })?;
        Ok(idx.into_iter().map(|index| FacetRef { loc: q, index }).collect())
    }

    pub fn guard(&self, q: usize, facet: usize) -> Option<&GuardEdge> {
        self.edges.iter().find(|e| e.loc == q && e.facet == facet)
    }

    /// All violations of the model invariants.
    pub fn validate(&self) -> Vec<PphsError> {
        let mut out = Vec::new();
        let n = self.dim;
        if n == 0 || self.locations.is_empty() {
            out.push(PphsError::Shape("a PPHS needs a positive dimension and at least one location".into()));
            return out;
        }
        let mut shapes_ok = true;
        for (q, l) in self.locations.iter().enumerate() {
            for (what, p) in [("invariant", l.invariant.base()), ("flow", &l.flow)] {
                if p.dim != n {
                    out.push(PphsError::Shape(format!("location {q}, {what}: dimension {} instead of {n}", p.dim)));
                    shapes_ok = false;
                }
                let errs = p.problems(&format!("location {q}, {what}"));
                shapes_ok &= errs.is_empty();
                out.extend(errs);
            }
            if !l.invariant.base().is_cone() {
                out.push(PphsError::NotACone(Some(q)));
                shapes_ok = false;
            }
        }
        if !shapes_ok {
            return out;
        }
        for (q, l) in self.locations.iter().enumerate() {
            match has_nonzero_point(l.invariant.halfspaces(), n) {
                Ok(false) => out.push(PphsError::EmptyInvariant(q)),
                Ok(true) => {}
                Err(e) => out.push(e.into()),
            }
            match flow_nonempty(&l.flow) {
                Ok(false) => out.push(PphsError::EmptyFlow(q)),
                Ok(true) => {}
                Err(e) => out.push(e.into()),
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        for e in &self.edges {
            if e.loc >= self.locations.len() {
                out.push(PphsError::LocationOutOfRange { what: "guard edge".into(), loc: e.loc });
                continue;
            }
            let hs = self.invariant(e.loc).halfspaces();
            if e.facet >= hs.len() || hs[e.facet].rel != HsRelation::Le {
                out.push(PphsError::NotAFacet { loc: e.loc, index: e.facet });
                continue;
            }
            if !seen.insert((e.loc, e.facet)) {
                out.push(PphsError::DuplicateGuard { loc: e.loc, facet: e.facet });
            }
            let sum: f64 = e.dist.iter().map(|&(_, p)| p).sum();
            if (sum - 1.0).abs() > 1e-9 || e.dist.iter().any(|&(_, p)| !(0.0..=1.0).contains(&p)) {
                out.push(PphsError::GuardNotStochastic { loc: e.loc, facet: e.facet, sum });
            }
            let facet = self.facet_constraints(FacetRef { loc: e.loc, index: e.facet });
            for &(t, p) in &e.dist {
                if t >= self.locations.len() {
                    out.push(PphsError::LocationOutOfRange { what: format!("guard of location {}", e.loc), loc: t });
                    continue;
                }
                if p > 0.0 {
                    match cone_contains(self.invariant(t).halfspaces(), &facet, n) {
                        Ok(true) => {}
                        Ok(false) => out.push(PphsError::GuardNotContained { loc: e.loc, facet: e.facet, target: t }),
                        Err(err) => out.push(err.into()),
                    }
                }
            }
        }
        if let Err(e) = self.init_facet() {
            out.push(e);
        }
        out
    }

    pub fn ensure_valid(&self) -> Result<(), PphsError> {
        let v = self.validate();
        if v.is_empty() {
            Ok(())
        } else {
            Err(PphsError::Invalid(v))
        }
    }

    /// The unique facet of the initial location containing the initial point.
    pub fn init_facet(&self) -> Result<FacetRef, PphsError> {
        let q = self.init.loc;
        if q >= self.locations.len() {
            return Err(PphsError::LocationOutOfRange { what: "initial point".into(), loc: q });
        }
        let x = &self.init.point;
        if x.len() != self.dim {
            return Err(PphsError::Shape(format!("initial point has {} coordinates instead of {}", x.len(), self.dim)));
        }
        let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return Err(PphsError::InitAtOrigin);
        }
        let unit_x: Vec<f64> = x.iter().map(|v| v / scale).collect();
        let inv = self.invariant(q);
        if !inv.base().contains(&unit_x, GEOM_TOL) {
            return Err(PphsError::InitNotInInvariant(q));
        }
        let on: Vec<usize> = self
            .facets(q)?
            .into_iter()
            .map(|f| f.index)
            .filter(|&i| inv.halfspaces()[i].dot(&unit_x).abs() <= GEOM_TOL)
            .collect();
        match on.len() {
            0 => Err(PphsError::InitNotOnFacet(q)),
            1 => Ok(FacetRef { loc: q, index: on[0] }),
            _ => Err(PphsError::InitAmbiguous(on)),
        }
    }

    /// Some nonzero flow direction lies in the invariant (its own recession
    /// cone): executions can flow forever and grow without bound.
    pub fn is_divergent(&self, q: usize) -> Result<bool, PphsError> {
        let l = &self.locations[q];
        let mut hs = l.flow.halfspaces.clone();
        hs.extend_from_slice(l.invariant.halfspaces());
        Ok(has_nonzero_point(&hs, self.dim)?)
    }

    /// The flow polyhedron contains no nonzero direction: executions stay
    /// where they are forever.
    pub fn is_stationary(&self, q: usize) -> Result<bool, PphsError> {
        Ok(!has_nonzero_point(&self.locations[q].flow.halfspaces, self.dim)?)
    }

    /// The continuous-transition LP over `(x1, x2, lambda)` without any
    /// normalization: `x1 in f1 ∩ I(q)`, `x2 in f2`, and the homogenized flow
    /// `A_F (x2 - x1) <= lambda b_F`, `lambda >= 0`.
    fn edge_lp(&self, q: usize, f1: FacetRef, f2: FacetRef, sense: Sense, objective: Vec<(usize, f64)>) -> LinearProgram {
        let n = self.dim;
        let lambda = 2 * n;
        let mut lp = free_lp(2 * n, sense, objective, 1);
        push_rows(&mut lp, &self.facet_constraints(f1), 0);
        if f1.loc != q {
            push_rows(&mut lp, self.invariant(q).halfspaces(), 0);
        }
        push_rows(&mut lp, &self.facet_constraints(f2), n);
        for h in &self.locations[q].flow.halfspaces {
            let mut row: Vec<(usize, f64)> = Vec::with_capacity(2 * n + 1);
            for (k, &a) in h.normal.iter().enumerate() {
                row.push((n + k, a));
                row.push((k, -a));
            }
            row.push((lambda, -h.offset));
            lp.add_sparse(&row, relation(h.rel), 0.0);
        }
        lp
    }

    fn x1_cases(&self) -> impl Iterator<Item = (usize, f64)> {
        let n = self.dim;
        (0..n).flat_map(|i| [(i, 1.0), (i, -1.0)])
    }

    fn normalize_x1(&self, lp: &mut LinearProgram, i: usize, s: f64) {
        for k in 0..self.dim {
            let b = if k == i { VarBounds::between(s, s) } else { VarBounds::between(-1.0, 1.0) };
            lp.set_bounds(k, b);
        }
    }

    /// Whether some `x1` in `f1` can flow within `I(q)` to a different point
    /// `x2` in `f2`.
    pub fn continuous_edge_feasible(&self, q: usize, f1: FacetRef, f2: FacetRef) -> Result<bool, PphsError> {
        let n = self.dim;
        for (i, s1) in self.x1_cases() {
            'moves: for k in 0..n {
                for t in [1.0, -1.0] {
                    let mut lp = self.edge_lp(q, f1, f2, Sense::Maximize, vec![(n + k, t), (k, -t)]);
                    self.normalize_x1(&mut lp, i, s1);
                    match lp_optimum(&lp)? {
                        None => break 'moves,
                        Some(v) if v > MOVE_EPS => return Ok(true),
                        Some(_) => {}
                    }
                }
            }
        }
        Ok(false)
    }

    /// Supremum of `log(||x2|| / ||x1||)` over continuous transitions from
    /// `f1` to `f2` in `q`.
    pub fn edge_weight(&self, q: usize, f1: FacetRef, f2: FacetRef) -> Result<EdgeWeight, PphsError> {
        if !self.continuous_edge_feasible(q, f1, f2)? {
            return Err(PphsError::InfeasibleEdge { loc: q, from: f1, to: f2 });
        }
        self.edge_weight_unchecked(q, f1, f2)
    }

    /// The `4 n^2` case LPs: for `s1 x1[i] = 1`, `|x1[k]| <= 1` and
    /// `|x2[k]| <= s2 x2[j]`, maximize `s2 x2[j]`.
    pub fn edge_weight_unchecked(&self, q: usize, f1: FacetRef, f2: FacetRef) -> Result<EdgeWeight, PphsError> {
        let n = self.dim;
        let mut best = f64::NEG_INFINITY;
        let mut w = EdgeWeight { value: 0.0, lp_cases: 0, feasible_cases: 0, unbounded_cases: 0 };
        for (i, s1) in self.x1_cases() {
            for (j, s2) in self.x1_cases() {
                let mut lp = self.edge_lp(q, f1, f2, Sense::Maximize, vec![(n + j, s2)]);
                self.normalize_x1(&mut lp, i, s1);
                for k in (0..n).filter(|&k| k != j) {
                    lp.add_sparse(&[(n + k, 1.0), (n + j, -s2)], Relation::Le, 0.0);
                    lp.add_sparse(&[(n + k, -1.0), (n + j, -s2)], Relation::Le, 0.0);
                }
                lp.add_sparse(&[(n + j, s2)], Relation::Ge, 0.0);
                w.lp_cases += 1;
                match lp_optimum(&lp)? {
                    None => {}
                    Some(v) if v == f64::INFINITY => {
                        w.feasible_cases += 1;
                        w.unbounded_cases += 1;
                    }
                    Some(v) => {
                        w.feasible_cases += 1;
                        best = best.max(v);
                    }
                }
            }
        }
        w.value = if w.unbounded_cases > 0 {
            f64::INFINITY
        } else if w.feasible_cases == 0 {
            return Err(PphsError::InfeasibleEdge { loc: q, from: f1, to: f2 });
        } else if best <= ORIGIN_EPS {
            SURROGATE_NEG_INF
        } else {
            best.ln()
        };
        Ok(w)
    }

    /// `f` as a facet of `I(q)` when the two sets coincide, else `f` itself.
    pub fn canonical_facet(&self, q: usize, f: FacetRef) -> Result<FacetRef, PphsError> {
        if f.loc == q {
            return Ok(f);
        }
        let set = self.facet_constraints(f);
        for g in self.facets(q)? {
            let other = self.facet_constraints(g);
            if cone_contains(&other, &set, self.dim)? && cone_contains(&set, &other, self.dim)? {
                return Ok(g);
            }
        }
        Ok(f)
    }
}

fn flow_nonempty(p: &Polyhedron) -> Result<bool, LpError> {
    let mut lp = free_lp(p.dim, Sense::Maximize, vec![], 0);
    push_rows(&mut lp, &p.halfspaces, 0);
    Ok(lp_optimum(&lp)?.is_some())
}
