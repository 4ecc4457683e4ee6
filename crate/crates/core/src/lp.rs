//! Dense linear programs and a two-phase primal simplex solver.
//!
//! Every LP in the crate (gain LPs, reachability LPs, the facet and
//! edge-weight LPs of the abstraction) goes through [`solve`]. The solver
//! works on a dense tableau and uses Bland's rule for both the entering and
//! the leaving variable, so it terminates on degenerate problems.

use std::cell::Cell;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Primal feasibility tolerance (absolute, on unit-scaled data).
pub const EPS_FEAS: f64 = 1e-8;
/// Optimality tolerance on the objective.
pub const EPS_OPT: f64 = 1e-8;
/// Maximum number of pivots over both phases.
pub const ITERATION_CAP: usize = 50_000;

const PIVOT_EPS: f64 = 1e-11;
const REDUCED_COST_EPS: f64 = 1e-10;

static FEAS_TOLERANCE: AtomicU64 = AtomicU64::new(EPS_FEAS.to_bits());

/// Overrides the feasibility tolerance used by [`solve`]. Meant to be set once
/// at startup (the CLI exposes it as `--lp-tolerance`).
pub fn set_feasibility_tolerance(tol: f64) {
    assert!(tol.is_finite() && tol > 0.0, "tolerance must be positive");
    FEAS_TOLERANCE.store(tol.to_bits(), Ordering::Relaxed);
}

pub fn feasibility_tolerance() -> f64 {
    f64::from_bits(FEAS_TOLERANCE.load(Ordering::Relaxed))
}

thread_local! {
    static SOLVES: Cell<u64> = const { Cell::new(0) };
}

/// Number of calls to [`solve`] made so far on the current thread.
pub fn solves_on_this_thread() -> u64 {
    SOLVES.with(Cell::get)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

/// Lower/upper bound of a single variable; `None` means unbounded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarBounds {
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

impl VarBounds {
    pub const NONNEGATIVE: VarBounds = VarBounds { lower: Some(0.0), upper: None };
    pub const FREE: VarBounds = VarBounds { lower: None, upper: None };

    pub fn between(lower: f64, upper: f64) -> Self {
        VarBounds { lower: Some(lower), upper: Some(upper) }
    }
}

/// A dense LP. Variables default to `[0, +inf)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    pub bounds: Vec<VarBounds>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Unbounded,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub value: Option<f64>,
    pub point: Option<Vec<f64>>,
}

impl LpSolution {
    fn unbounded() -> Self {
        LpSolution { status: LpStatus::Unbounded, value: None, point: None }
    }

    fn infeasible() -> Self {
        LpSolution { status: LpStatus::Infeasible, value: None, point: None }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum LpError {
    #[error("malformed linear program: {0}")]
    MalformedProgram(String),
    #[error("simplex did not terminate within {iterations} pivots")]
    NumericalFailure { iterations: usize },
}

impl LinearProgram {
    pub fn new(sense: Sense, objective: Vec<f64>) -> Self {
        let n = objective.len();
        LinearProgram {
            sense,
            objective,
            constraints: Vec::new(),
            bounds: vec![VarBounds::NONNEGATIVE; n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_constraint(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) -> &mut Self {
        self.constraints.push(Constraint { coeffs, relation, rhs });
        self
    }

    /// Adds a constraint given as `(variable, coefficient)` pairs. Repeated
    /// variables accumulate.
    pub fn add_sparse(&mut self, terms: &[(usize, f64)], relation: Relation, rhs: f64) -> &mut Self {
        let mut coeffs = vec![0.0; self.num_vars()];
        for &(var, c) in terms {
            coeffs[var] += c;
        }
        self.add_constraint(coeffs, relation, rhs)
    }

    pub fn set_bounds(&mut self, var: usize, bounds: VarBounds) -> &mut Self {
        self.bounds[var] = bounds;
        self
    }

    /// Checks the structural invariants: consistent lengths, finite data.
    pub fn check(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        if self.bounds.len() != n {
            return Err(LpError::MalformedProgram(format!(
                "{} bounds for {} variables",
                self.bounds.len(),
                n
            )));
        }
        if let Some(j) = self.objective.iter().position(|c| !c.is_finite()) {
            return Err(LpError::MalformedProgram(format!("objective coefficient {j} is not finite")));
        }
        for (i, row) in self.constraints.iter().enumerate() {
            if row.coeffs.len() != n {
                return Err(LpError::MalformedProgram(format!(
                    "constraint {i} has {} coefficients, expected {n}",
                    row.coeffs.len()
                )));
            }
            if !row.rhs.is_finite() || row.coeffs.iter().any(|c| !c.is_finite()) {
                return Err(LpError::MalformedProgram(format!("constraint {i} has non-finite data")));
            }
        }
        for (j, b) in self.bounds.iter().enumerate() {
            let bad = |v: Option<f64>| v.is_some_and(|x| !x.is_finite());
            if bad(b.lower) || bad(b.upper) {
                return Err(LpError::MalformedProgram(format!("bound of variable {j} is not finite")));
            }
        }
        Ok(())
    }

    /// Largest constraint violation of `point`, including variable bounds.
    pub fn max_residual(&self, point: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for row in &self.constraints {
            let lhs: f64 = row.coeffs.iter().zip(point).map(|(a, x)| a * x).sum();
            let r = match row.relation {
                Relation::Le => lhs - row.rhs,
                Relation::Ge => row.rhs - lhs,
                Relation::Eq => (lhs - row.rhs).abs(),
            };
            worst = worst.max(r);
        }
        for (b, &x) in self.bounds.iter().zip(point) {
            if let Some(l) = b.lower {
                worst = worst.max(l - x);
            }
            if let Some(u) = b.upper {
                worst = worst.max(x - u);
            }
        }
        worst
    }

    pub fn objective_value(&self, point: &[f64]) -> f64 {
        self.objective.iter().zip(point).map(|(c, x)| c * x).sum()
    }
}

/// Solves `lp` with the two-phase simplex method.
pub fn solve(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    SOLVES.with(|c| c.set(c.get() + 1));
    lp.check()?;
    let tol = feasibility_tolerance();

    if lp.num_vars() == 0 {
        let violated = lp.constraints.iter().any(|row| match row.relation {
            Relation::Le => row.rhs < -tol,
            Relation::Ge => row.rhs > tol,
            Relation::Eq => row.rhs.abs() > tol,
        });
        return Ok(if violated {
            LpSolution::infeasible()
        } else {
            LpSolution { status: LpStatus::Optimal, value: Some(0.0), point: Some(Vec::new()) }
        });
    }

    let std = match StandardForm::build(lp, tol) {
        Some(s) => s,
        None => return Ok(LpSolution::infeasible()),
    };
    let z = match std.solve(tol)? {
        Outcome::Optimal(z) => z,
        Outcome::Unbounded => return Ok(LpSolution::unbounded()),
        Outcome::Infeasible => return Ok(LpSolution::infeasible()),
    };
    let point = std.recover(&z);
    let value = lp.objective_value(&point);
    Ok(LpSolution { status: LpStatus::Optimal, value: Some(value), point: Some(point) })
}

enum Outcome {
    Optimal(Vec<f64>),
    Unbounded,
    Infeasible,
}

/// `min c.z  s.t.  A z = b, z >= 0, b >= 0` plus the map back to the
/// original variables.
struct StandardForm {
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    cost: Vec<f64>,
    /// Number of structural columns (before slacks and artificials).
    structural: usize,
    /// Column currently usable as an initial basic variable for each row.
    initial_basis: Vec<Option<usize>>,
    /// `x_j = offset_j + sum coef * z_col`.
    recover: Vec<(f64, Vec<(usize, f64)>)>,
}

impl StandardForm {
    /// Returns `None` when a variable has crossing bounds.
    fn build(lp: &LinearProgram, tol: f64) -> Option<Self> {
        let sign = match lp.sense {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };
        let mut recover = Vec::with_capacity(lp.num_vars());
        let mut cost = Vec::new();
        // (coeffs over z, relation, rhs) rows still to receive slacks
        let mut extra_rows: Vec<(Vec<(usize, f64)>, Relation, f64)> = Vec::new();
        let mut ncols = 0usize;
        for (j, b) in lp.bounds.iter().enumerate() {
            let c = sign * lp.objective[j];
            match (b.lower, b.upper) {
                (Some(l), upper) => {
                    let col = ncols;
                    ncols += 1;
                    cost.push(c);
                    recover.push((l, vec![(col, 1.0)]));
                    if let Some(u) = upper {
                        if u < l - tol {
                            return None;
                        }
                        extra_rows.push((vec![(col, 1.0)], Relation::Le, (u - l).max(0.0)));
                    }
                }
                (None, Some(u)) => {
                    let col = ncols;
                    ncols += 1;
                    cost.push(-c);
                    recover.push((u, vec![(col, -1.0)]));
                }
                (None, None) => {
                    let (p, q) = (ncols, ncols + 1);
                    ncols += 2;
                    cost.push(c);
                    cost.push(-c);
                    recover.push((0.0, vec![(p, 1.0), (q, -1.0)]));
                }
            }
        }
        let structural = ncols;

        let mut pending: Vec<(Vec<f64>, Relation, f64)> = Vec::new();
        for row in &lp.constraints {
            let mut coeffs = vec![0.0; structural];
            let mut rhs = row.rhs;
            for (j, &a) in row.coeffs.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let (offset, ref terms) = recover[j];
                rhs -= a * offset;
                for &(col, coef) in terms {
                    coeffs[col] += a * coef;
                }
            }
            pending.push((coeffs, row.relation, rhs));
        }
        for (terms, rel, rhs) in extra_rows {
            let mut coeffs = vec![0.0; structural];
            for (col, coef) in terms {
                coeffs[col] += coef;
            }
            pending.push((coeffs, rel, rhs));
        }

        let slack_count = pending.iter().filter(|(_, r, _)| *r != Relation::Eq).count();
        let width = structural + slack_count;
        let mut rows = Vec::with_capacity(pending.len());
        let mut rhs_vec = Vec::with_capacity(pending.len());
        let mut initial_basis = Vec::with_capacity(pending.len());
        let mut next_slack = structural;
        for (coeffs, rel, rhs) in pending {
            let mut full = coeffs;
            full.resize(width, 0.0);
            let slack = match rel {
                Relation::Le => Some((next_slack, 1.0)),
                Relation::Ge => Some((next_slack, -1.0)),
                Relation::Eq => None,
            };
            if let Some((col, s)) = slack {
                full[col] = s;
                next_slack += 1;
            }
            let mut b = rhs;
            if b < 0.0 {
                full.iter_mut().for_each(|v| *v = -*v);
                b = -b;
            }
            let basis = slack.and_then(|(col, _)| (full[col] > 0.0).then_some(col));
            rows.push(full);
            rhs_vec.push(b);
            initial_basis.push(basis);
        }
        cost.resize(width, 0.0);
        Some(StandardForm { rows, rhs: rhs_vec, cost, structural, initial_basis, recover })
    }

    fn recover(&self, z: &[f64]) -> Vec<f64> {
        self.recover
            .iter()
            .map(|(offset, terms)| offset + terms.iter().map(|&(col, c)| c * z[col]).sum::<f64>())
            .collect()
    }

    fn solve(&self, tol: f64) -> Result<Outcome, LpError> {
        let m = self.rows.len();
        let width = self.cost.len();
        let artificial_rows: Vec<usize> = (0..m).filter(|&i| self.initial_basis[i].is_none()).collect();
        let total = width + artificial_rows.len();

        let mut t = Tableau::new(m, total);
        let mut basis = vec![0usize; m];
        for i in 0..m {
            t.cell_mut(i, ..width).copy_from_slice(&self.rows[i]);
            *t.rhs_mut(i) = self.rhs[i];
        }
        for (k, &i) in artificial_rows.iter().enumerate() {
            *t.at_mut(i, width + k) = 1.0;
            basis[i] = width + k;
        }
        for i in 0..m {
            if let Some(col) = self.initial_basis[i] {
                basis[i] = col;
            }
        }

        let mut iterations = 0usize;
        let b_scale = 1.0 + self.rhs.iter().fold(0.0f64, |a, &b| a.max(b.abs()));

        if !artificial_rows.is_empty() {
            let mut phase1 = vec![0.0; total];
            phase1[width..].iter_mut().for_each(|c| *c = 1.0);
            t.price(&phase1, &basis);
            let allowed = vec![true; total];
            match t.run(&mut basis, &allowed, &mut iterations)? {
                PhaseEnd::Optimal => {}
                // Phase one is bounded below by zero.
                PhaseEnd::Unbounded => return Err(LpError::NumericalFailure { iterations }),
            }
            let infeasibility: f64 = (0..m).filter(|&i| basis[i] >= width).map(|i| t.rhs(i)).sum();
            if infeasibility > tol * b_scale {
                return Ok(Outcome::Infeasible);
            }
            // Drive remaining (zero-valued) artificials out of the basis.
            let mut keep = vec![true; m];
            for i in 0..m {
                if basis[i] < width {
                    continue;
                }
                match (0..width).find(|&j| t.at(i, j).abs() > 1e-9) {
                    Some(j) => t.pivot(i, j, &mut basis),
                    None => keep[i] = false,
                }
            }
            if keep.iter().any(|k| !k) {
                t.drop_rows(&keep, &mut basis);
            }
        }

        let mut phase2 = self.cost.clone();
        phase2.resize(total, 0.0);
        t.price(&phase2, &basis);
        let mut allowed = vec![true; total];
        allowed[width..].iter_mut().for_each(|a| *a = false);
        match t.run(&mut basis, &allowed, &mut iterations)? {
            PhaseEnd::Unbounded => Ok(Outcome::Unbounded),
            PhaseEnd::Optimal => {
                let mut z = vec![0.0; width];
                for (i, &col) in basis.iter().enumerate() {
                    if col < width {
                        z[col] = t.rhs(i).max(0.0);
                    }
                }
                debug_assert!(z.len() >= self.structural);
                Ok(Outcome::Optimal(z))
            }
        }
    }
}

enum PhaseEnd {
    Optimal,
    Unbounded,
}

/// Row-major tableau; the last column of each row is the right-hand side,
/// and an extra trailing row holds the reduced costs.
struct Tableau {
    m: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Tableau {
    fn new(m: usize, cols: usize) -> Self {
        Tableau { m, cols, data: vec![0.0; (m + 1) * (cols + 1)] }
    }

    fn stride(&self) -> usize {
        self.cols + 1
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.stride() + j]
    }

    fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        let s = self.stride();
        &mut self.data[i * s + j]
    }

    fn cell_mut(&mut self, i: usize, range: std::ops::RangeTo<usize>) -> &mut [f64] {
        let s = self.stride();
        &mut self.data[i * s..i * s + range.end]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.at(i, self.cols)
    }

    fn rhs_mut(&mut self, i: usize) -> &mut f64 {
        let c = self.cols;
        self.at_mut(i, c)
    }

    fn row(&self, i: usize) -> &[f64] {
        let s = self.stride();
        &self.data[i * s..(i + 1) * s]
    }

    /// Recomputes the reduced-cost row for `cost` under the current basis.
    fn price(&mut self, cost: &[f64], basis: &[usize]) {
        let s = self.stride();
        let mut obj = vec![0.0; s];
        obj[..self.cols].copy_from_slice(cost);
        for (i, &b) in basis.iter().enumerate() {
            let cb = cost[b];
            if cb != 0.0 {
                let row = &self.data[i * s..(i + 1) * s];
                for (o, r) in obj.iter_mut().zip(row) {
                    *o -= cb * r;
                }
            }
        }
        let m = self.m;
        self.data[m * s..(m + 1) * s].copy_from_slice(&obj);
    }

    fn pivot(&mut self, r: usize, c: usize, basis: &mut [usize]) {
        let s = self.stride();
        let p = self.at(r, c);
        for v in &mut self.data[r * s..(r + 1) * s] {
            *v /= p;
        }
        let pivot_row: Vec<f64> = self.row(r).to_vec();
        for i in 0..=self.m {
            if i == r {
                continue;
            }
            let f = self.at(i, c);
            if f == 0.0 {
                continue;
            }
            let row = &mut self.data[i * s..(i + 1) * s];
            for (v, pr) in row.iter_mut().zip(&pivot_row) {
                *v -= f * pr;
            }
            row[c] = 0.0;
        }
        basis[r] = c;
    }

    fn drop_rows(&mut self, keep: &[bool], basis: &mut Vec<usize>) {
        let s = self.stride();
        let mut data = Vec::with_capacity(self.data.len());
        let mut new_basis = Vec::new();
        for i in 0..self.m {
            if keep[i] {
                data.extend_from_slice(&self.data[i * s..(i + 1) * s]);
                new_basis.push(basis[i]);
            }
        }
        data.extend_from_slice(&self.data[self.m * s..(self.m + 1) * s]);
        self.m = new_basis.len();
        self.data = data;
        *basis = new_basis;
    }

    /// Bland's rule: lowest-index improving column, lowest-index leaving
    /// variable among ratio ties.
    fn run(&mut self, basis: &mut [usize], allowed: &[bool], iterations: &mut usize) -> Result<PhaseEnd, LpError> {
        let m = self.m;
        loop {
            let entering = (0..self.cols).find(|&j| allowed[j] && self.at(m, j) < -REDUCED_COST_EPS);
            let Some(col) = entering else {
                return Ok(PhaseEnd::Optimal);
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..m {
                let a = self.at(i, col);
                if a <= PIVOT_EPS {
                    continue;
                }
                let ratio = self.rhs(i).max(0.0) / a;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((k, best)) => {
                        let tie = (ratio - best).abs() <= 1e-12 * (1.0 + best.abs());
                        if ratio < best && !tie || tie && basis[i] < basis[k] {
                            Some((i, ratio))
                        } else {
                            Some((k, best))
                        }
                    }
                };
            }
            let Some((row, _)) = leave else {
                return Ok(PhaseEnd::Unbounded);
            };
            *iterations += 1;
            if *iterations > ITERATION_CAP {
                return Err(LpError::NumericalFailure { iterations: *iterations });
            }
            self.pivot(row, col, basis);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max1(obj: f64) -> LinearProgram {
        LinearProgram::new(Sense::Maximize, vec![obj])
    }

    #[test]
    fn single_constraint_optimum() {
        let mut lp = max1(1.0);
        lp.add_constraint(vec![1.0], Relation::Le, 3.0);
        lp.add_constraint(vec![1.0], Relation::Ge, 0.0);
        let sol = solve(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.value.unwrap() - 3.0).abs() < 1e-12);
        assert!((sol.point.unwrap()[0] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn unbounded_ray() {
        let mut lp = max1(1.0);
        lp.add_constraint(vec![1.0], Relation::Ge, 0.0);
        assert_eq!(solve(&lp).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn contradictory_bounds() {
        let mut lp = max1(0.0);
        lp.add_constraint(vec![1.0], Relation::Le, -1.0);
        lp.add_constraint(vec![1.0], Relation::Ge, 0.0);
        assert_eq!(solve(&lp).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn empty_program_is_trivially_optimal() {
        let lp = LinearProgram::new(Sense::Minimize, vec![]);
        let sol = solve(&lp).unwrap();
        assert_eq!(sol.value, Some(0.0));
        assert_eq!(sol.point, Some(vec![]));
    }

    #[test]
    fn malformed_lengths_are_rejected() {
        let mut lp = max1(1.0);
        lp.add_constraint(vec![1.0, 2.0], Relation::Le, 1.0);
        assert!(matches!(solve(&lp), Err(LpError::MalformedProgram(_))));
    }

    #[test]
    fn free_and_upper_bounded_variables() {
        // min x + y, x free, y <= 2 with no lower bound, x - y >= 1, x >= -3
        let mut lp = LinearProgram::new(Sense::Minimize, vec![1.0, 1.0]);
        lp.set_bounds(0, VarBounds::FREE);
        lp.set_bounds(1, VarBounds { lower: None, upper: Some(2.0) });
        lp.add_constraint(vec![1.0, -1.0], Relation::Ge, 1.0);
        lp.add_constraint(vec![1.0, 0.0], Relation::Ge, -3.0);
        lp.add_constraint(vec![0.0, 1.0], Relation::Ge, -10.0);
        let sol = solve(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        // both lower limits bind: x = -3, y = -10
        assert!((sol.value.unwrap() + 13.0).abs() < 1e-9, "{sol:?}");
        assert_eq!(sol.point.unwrap(), vec![-3.0, -10.0]);
    }

    #[test]
    fn redundant_equalities() {
        // x + y = 1 twice, maximize x
        let mut lp = LinearProgram::new(Sense::Maximize, vec![1.0, 0.0]);
        lp.add_constraint(vec![1.0, 1.0], Relation::Eq, 1.0);
        lp.add_constraint(vec![2.0, 2.0], Relation::Eq, 2.0);
        let sol = solve(&lp).unwrap();
        assert!((sol.value.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn crossing_bounds_are_infeasible() {
        let mut lp = max1(1.0);
        lp.set_bounds(0, VarBounds::between(2.0, 1.0));
        assert_eq!(solve(&lp).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn degenerate_cycling_example_terminates() {
        // Beale's classic cycling example; Bland's rule must terminate.
        let mut lp = LinearProgram::new(Sense::Minimize, vec![-0.75, 150.0, -0.02, 6.0]);
        lp.add_constraint(vec![0.25, -60.0, -0.04, 9.0], Relation::Le, 0.0);
        lp.add_constraint(vec![0.5, -90.0, -0.02, 3.0], Relation::Le, 0.0);
        lp.add_constraint(vec![0.0, 0.0, 1.0, 0.0], Relation::Le, 1.0);
        let sol = solve(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.value.unwrap() + 0.05).abs() < 1e-9);
    }
}
