//! Linear-programming relaxations solved by a bounded-variable revised
//! simplex.
//!
//! Every row `a·x REL b` gets a slack `s` with `a·x + s = b`, where
//! `s ∈ [0, ∞)` for `<=`, `s ∈ (-∞, 0]` for `>=` and `s ∈ [0, 0]` for `=`.
//! Upper bounds are implicit: a nonbasic variable sits at one of its bounds.
//! The basis inverse is kept explicitly as a dense `m × m` matrix and updated
//! by elementary row operations on each pivot.
//!
//! A cold solve runs primal phase 1 (artificials on the rows violated by the
//! all-lower start) and then primal phase 2. After [`LpSession::add_row`] or
//! [`LpSession::set_bounds`] the previous optimal basis stays dual feasible,
//! so the re-solve runs the dual simplex followed by a primal cleanup pass.

use thiserror::Error;

use crate::constraint::{ConstraintSystem, LinearConstraint, Relation};

pub const FEASIBILITY_TOL: f64 = 1e-7;
pub const OPTIMALITY_TOL: f64 = 1e-9;
pub const PIVOT_TOL: f64 = 1e-9;
/// Consecutive degenerate pivots before Bland's rule takes over.
pub const DEGENERACY_STREAK: usize = 100;
/// Largest primal residual tolerated before the inverse is rebuilt.
pub const RESIDUAL_TOL: f64 = 1e-9;

const TIE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("simplex iteration limit {0} reached")]
    IterationLimit(usize),
    #[error("objective is unbounded below")]
    Unbounded,
    #[error("bounds [{lower}, {upper}] of variable {var} are invalid")]
    InvalidBounds { var: usize, lower: f64, upper: f64 },
    #[error("variable {0} does not exist")]
    UnknownVariable(usize),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("warm start requires an optimal parent")]
    NotOptimal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpConfig {
    pub feasibility_tol: f64,
    pub optimality_tol: f64,
    pub pivot_tol: f64,
    /// `None` means `50 * (rows + columns)` per solve.
    pub iteration_limit: Option<usize>,
    pub degeneracy_streak: usize,
    /// Pivots between full rebuilds of the basis inverse.
    pub refactor_period: usize,
    /// Keep `(entering, leaving)` of every pivot in [`LpSession::pivot_log`].
    pub record_pivots: bool,
}

impl Default for LpConfig {
    fn default() -> Self {
        LpConfig {
            feasibility_tol: FEASIBILITY_TOL,
            optimality_tol: OPTIMALITY_TOL,
            pivot_tol: PIVOT_TOL,
            iteration_limit: None,
            degeneracy_streak: DEGENERACY_STREAK,
            refactor_period: 100,
            record_pivots: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
}

/// `minimize constant + cost·x` subject to rows and `lower <= x <= upper`.
#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    lower: Vec<f64>,
    upper: Vec<f64>,
    cost: Vec<f64>,
    constant: f64,
    rows: Vec<LinearConstraint>,
}

/// Merges repeated variables and drops zero coefficients.
fn normalize(row: LinearConstraint) -> LinearConstraint {
    let mut terms: Vec<(f64, usize)> = Vec::with_capacity(row.terms.len());
    for (c, v) in row.terms {
        match terms.iter_mut().find(|t| t.1 == v) {
            Some(t) => t.0 += c,
            None => terms.push((c, v)),
        }
    }
    terms.retain(|t| t.0 != 0.0);
    LinearConstraint::new(terms, row.relation, row.rhs)
}

impl LpProblem {
    /// Variables bounded to `[0, 1]`, no rows.
    pub fn new(cost: Vec<f64>, constant: f64) -> Result<Self, LpError> {
        let n = cost.len();
        Self::with_bounds(cost, constant, vec![0.0; n], vec![1.0; n])
    }

    pub fn with_bounds(
        cost: Vec<f64>,
        constant: f64,
        lower: Vec<f64>,
        upper: Vec<f64>,
    ) -> Result<Self, LpError> {
        if !constant.is_finite() || cost.iter().any(|c| !c.is_finite()) {
            return Err(LpError::NonFinite("objective"));
        }
        assert_eq!(cost.len(), lower.len());
        assert_eq!(cost.len(), upper.len());
        let mut p = LpProblem {
            lower: vec![0.0; cost.len()],
            upper: vec![0.0; cost.len()],
            cost,
            constant,
            rows: Vec::new(),
        };
        for (v, (&lo, &hi)) in lower.iter().zip(&upper).enumerate() {
            p.set_bounds(v, lo, hi)?;
        }
        Ok(p)
    }

    pub fn add_row(&mut self, row: LinearConstraint) -> Result<(), LpError> {
        let row = self.check_row(row)?;
        self.rows.push(row);
        Ok(())
    }

    fn check_row(&self, row: LinearConstraint) -> Result<LinearConstraint, LpError> {
        if !row.rhs.is_finite() || row.terms.iter().any(|t| !t.0.is_finite()) {
            return Err(LpError::NonFinite("row"));
        }
        if let Some(&(_, v)) = row.terms.iter().find(|t| t.1 >= self.cost.len()) {
            return Err(LpError::UnknownVariable(v));
        }
        Ok(normalize(row))
    }

    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) -> Result<(), LpError> {
        if var >= self.cost.len() {
            return Err(LpError::UnknownVariable(var));
        }
        if !(lower.is_finite() && upper.is_finite() && lower <= upper) {
            return Err(LpError::InvalidBounds { var, lower, upper });
        }
        self.lower[var] = lower;
        self.upper[var] = upper;
        Ok(())
    }

    pub fn num_vars(&self) -> usize {
        self.cost.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[LinearConstraint] {
        &self.rows
    }

    pub fn cost(&self) -> &[f64] {
        &self.cost
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn objective_at(&self, values: &[f64]) -> f64 {
        self.constant
            + self
                .cost
                .iter()
                .zip(values)
                .map(|(c, x)| c * x)
                .sum::<f64>()
    }

    /// Largest bound or row violation at `values`.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        let bounds = values
            .iter()
            .enumerate()
            .map(|(v, &x)| (self.lower[v] - x).max(x - self.upper[v]).max(0.0));
        let rows = self.rows.iter().map(|row| {
            let lhs = row.lhs(values);
            match row.relation {
                Relation::Le => (lhs - row.rhs).max(0.0),
                Relation::Ge => (row.rhs - lhs).max(0.0),
                Relation::Eq => (lhs - row.rhs).abs(),
            }
        });
        bounds.chain(rows).fold(0.0, f64::max)
    }

    /// True iff `y` proves infeasibility: `y·b` lies outside the range of
    /// `Σ_j (y·A_j) x_j` over the variable box, slacks included.
    pub fn is_farkas_certificate(&self, y: &[f64], tol: f64) -> bool {
        if y.len() != self.rows.len() {
            return false;
        }
        let mut g = vec![0.0; self.cost.len()];
        let mut yb = 0.0;
        let (mut lo, mut hi) = (0.0f64, 0.0f64);
        for (row, &yi) in self.rows.iter().zip(y) {
            yb += yi * row.rhs;
            for &(c, v) in &row.terms {
                g[v] += yi * c;
            }
            let (sl, su) = slack_bounds(row.relation);
            if yi.abs() > TIE {
                lo += (yi * sl).min(yi * su);
                hi += (yi * sl).max(yi * su);
            }
        }
        for (v, &gv) in g.iter().enumerate() {
            lo += (gv * self.lower[v]).min(gv * self.upper[v]);
            hi += (gv * self.lower[v]).max(gv * self.upper[v]);
        }
        yb < lo - tol || yb > hi + tol
    }
}

/// The continuous relaxation of `l`: every variable in `[0, 1]`, objective
/// coefficient `ψ(x,true) − ψ(x,false)` and constant `Σ ψ(x,false)`.
pub fn relax(l: &ConstraintSystem) -> LpProblem {
    let n = l.num_variables();
    let cost = (0..n).map(|v| l.psi(v, true) - l.psi(v, false)).collect();
    let constant = (0..n).map(|v| l.psi(v, false)).sum::<f64>() + 0.0;
    let mut p = LpProblem::new(cost, constant).expect("system data is finite");
    for row in l.constraints() {
        p.add_row(row.clone()).expect("system rows are checked");
    }
    p
}

fn slack_bounds(rel: Relation) -> (f64, f64) {
    match rel {
        Relation::Le => (0.0, f64::INFINITY),
        Relation::Ge => (f64::NEG_INFINITY, 0.0),
        Relation::Eq => (0.0, 0.0),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kind {
    Structural,
    Slack(usize),
    Artificial(usize, f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum State {
    Basic(usize),
    Lower,
    Upper,
}

/// A simplex run that owns its basis and can be extended and re-solved.
#[derive(Debug, Clone)]
pub struct LpSession {
    cfg: LpConfig,
    problem: LpProblem,
    /// Sparse `(row, coefficient)` columns of the structural variables.
    cols: Vec<Vec<(usize, f64)>>,
    kinds: Vec<Kind>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    cost: Vec<f64>,
    x: Vec<f64>,
    state: Vec<State>,
    basis: Vec<usize>,
    binv: Vec<Vec<f64>>,
    slack: Vec<usize>,
    /// The basis is valid and dual feasible.
    warm: bool,
    status: Option<LpStatus>,
    farkas: Option<Vec<f64>>,
    last_iterations: usize,
    total_iterations: usize,
    since_refactor: usize,
    pivot_log: Vec<(usize, usize)>,
}

impl LpSession {
    pub fn new(problem: LpProblem, cfg: LpConfig) -> Self {
        let n = problem.num_vars();
        let mut s = LpSession {
            cfg,
            cols: vec![Vec::new(); n],
            kinds: vec![Kind::Structural; n],
            lower: problem.lower.clone(),
            upper: problem.upper.clone(),
            cost: problem.cost.clone(),
            x: problem.lower.clone(),
            state: vec![State::Lower; n],
            basis: Vec::new(),
            binv: Vec::new(),
            slack: Vec::new(),
            warm: false,
            status: None,
            farkas: None,
            last_iterations: 0,
            total_iterations: 0,
            since_refactor: 0,
            pivot_log: Vec::new(),
            problem,
        };
        for i in 0..s.problem.rows.len() {
            s.attach_row(i);
        }
        s
    }

    fn attach_row(&mut self, i: usize) {
        let row = &self.problem.rows[i];
        for &(c, v) in &row.terms {
            self.cols[v].push((i, c));
        }
        let (lo, hi) = slack_bounds(row.relation);
        let s = self.push_var(Kind::Slack(i), lo, hi);
        self.slack.push(s);
    }

    fn push_var(&mut self, kind: Kind, lower: f64, upper: f64) -> usize {
        self.kinds.push(kind);
        self.lower.push(lower);
        self.upper.push(upper);
        self.cost.push(0.0);
        self.x.push(if lower.is_finite() {
            lower
        } else {
            upper.min(0.0)
        });
        self.state.push(if lower.is_finite() {
            State::Lower
        } else {
            State::Upper
        });
        self.kinds.len() - 1
    }

    pub fn problem(&self) -> &LpProblem {
        &self.problem
    }

    pub fn status(&self) -> Option<LpStatus> {
        self.status
    }

    pub fn config(&self) -> &LpConfig {
        &self.cfg
    }

    /// Pivots of the most recent [`LpSession::solve`].
    pub fn last_iterations(&self) -> usize {
        self.last_iterations
    }

    pub fn total_iterations(&self) -> usize {
        self.total_iterations
    }

    pub fn pivot_log(&self) -> &[(usize, usize)] {
        &self.pivot_log
    }

    fn m(&self) -> usize {
        self.basis.len()
    }

    fn n(&self) -> usize {
        self.problem.num_vars()
    }

    /// Appends a row. A warm basis is extended with the new slack basic.
    pub fn add_row(&mut self, row: LinearConstraint) -> Result<(), LpError> {
        let row = self.problem.check_row(row)?;
        self.problem.rows.push(row);
        let i = self.problem.rows.len() - 1;
        self.attach_row(i);
        self.status = None;
        if !self.warm {
            return Ok(());
        }
        let s = self.slack[i];
        let m = self.m();
        let row = &self.problem.rows[i];
        let mut new_row = vec![0.0; m + 1];
        for (k, &b) in self.basis.iter().enumerate() {
            if b >= self.n() {
                continue;
            }
            let Some(&(c, _)) = row.terms.iter().find(|t| t.1 == b) else {
                continue;
            };
            for (t, &e) in new_row.iter_mut().zip(&self.binv[k]) {
                *t -= c * e;
            }
        }
        new_row[m] = 1.0;
        for r in &mut self.binv {
            r.push(0.0);
        }
        self.binv.push(new_row);
        self.basis.push(s);
        self.state[s] = State::Basic(m);
        self.x[s] = row.rhs - row.lhs(&self.x);
        Ok(())
    }

    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) -> Result<(), LpError> {
        self.problem.set_bounds(var, lower, upper)?;
        self.lower[var] = lower;
        self.upper[var] = upper;
        self.status = None;
        if self.warm {
            match self.state[var] {
                State::Lower => self.x[var] = lower,
                State::Upper => self.x[var] = upper,
                State::Basic(_) => {}
            }
            self.recompute_basics();
        }
        Ok(())
    }

    fn limit(&self) -> usize {
        self.cfg
            .iteration_limit
            .unwrap_or(50 * (self.problem.num_rows() + self.n()))
    }

    /// Solves from the current basis: dual simplex when warm, otherwise a
    /// two-phase primal run from scratch.
    pub fn solve(&mut self) -> Result<LpStatus, LpError> {
        if let Some(s) = self.status {
            return Ok(s);
        }
        let mut budget = self.limit();
        self.last_iterations = 0;
        self.farkas = None;
        let out = if self.warm {
            self.warm_solve(&mut budget)
        } else {
            self.cold_solve(&mut budget)
        };
        match out {
            Ok(s) => {
                self.status = Some(s);
                self.warm = s == LpStatus::Optimal;
                Ok(s)
            }
            Err(e) => {
                self.warm = false;
                self.status = None;
                Err(e)
            }
        }
    }

    fn warm_solve(&mut self, budget: &mut usize) -> Result<LpStatus, LpError> {
        for _ in 0..3 {
            if self.dual_loop(budget)? == LpStatus::Infeasible {
                return Ok(LpStatus::Infeasible);
            }
            self.primal_loop(false, budget)?;
            if self.residual() <= RESIDUAL_TOL {
                return Ok(LpStatus::Optimal);
            }
            if !self.refactor() {
                return self.cold_solve(budget);
            }
            self.recompute_basics();
        }
        Ok(LpStatus::Optimal)
    }

    fn cold_solve(&mut self, budget: &mut usize) -> Result<LpStatus, LpError> {
        let n = self.n();
        let m = self.problem.rows.len();
        self.kinds.truncate(n);
        self.lower.truncate(n);
        self.upper.truncate(n);
        self.cost.truncate(n);
        self.x.truncate(n);
        self.state.truncate(n);
        self.slack.clear();
        self.cols.iter_mut().for_each(Vec::clear);
        for i in 0..m {
            self.attach_row(i);
        }
        for j in 0..n {
            self.state[j] = State::Lower;
            self.x[j] = self.lower[j];
        }
        self.basis = vec![0; m];
        self.binv = vec![vec![0.0; m]; m];
        self.since_refactor = 0;
        let mut artificials = Vec::new();
        for i in 0..m {
            let row = &self.problem.rows[i];
            let r = row.rhs - row.lhs(&self.x);
            let s = self.slack[i];
            let (sl, su) = (self.lower[s], self.upper[s]);
            if r >= sl - self.cfg.feasibility_tol && r <= su + self.cfg.feasibility_tol {
                self.x[s] = r;
                self.state[s] = State::Basic(i);
                self.basis[i] = s;
                self.binv[i][i] = 1.0;
            } else {
                let v = r.clamp(sl, su);
                self.x[s] = v;
                self.state[s] = if v == sl { State::Lower } else { State::Upper };
                let sign = if r > v { 1.0 } else { -1.0 };
                let a = self.push_var(Kind::Artificial(i, sign), 0.0, f64::INFINITY);
                self.x[a] = (r - v).abs();
                self.state[a] = State::Basic(i);
                self.basis[i] = a;
                self.binv[i][i] = sign;
                artificials.push(a);
            }
        }
        self.warm = true;
        if !artificials.is_empty() {
            self.primal_loop(true, budget)?;
            let w: f64 = artificials.iter().map(|&a| self.x[a]).sum();
            if w > self.cfg.feasibility_tol {
                let c: Vec<f64> = self.basis.iter().map(|&b| self.phase1_cost(b)).collect();
                self.farkas = Some(self.btran(&c));
                return Ok(LpStatus::Infeasible);
            }
            for &a in &artificials {
                self.upper[a] = 0.0;
                if self.state[a] == State::Upper {
                    self.state[a] = State::Lower;
                }
                if !matches!(self.state[a], State::Basic(_)) {
                    self.x[a] = 0.0;
                }
            }
        }
        self.warm_solve(budget)
    }

    fn phase1_cost(&self, j: usize) -> f64 {
        match self.kinds[j] {
            Kind::Artificial(..) if self.upper[j] > 0.0 => 1.0,
            _ => 0.0,
        }
    }

    fn costs_of(&self, phase1: bool, j: usize) -> f64 {
        if phase1 {
            self.phase1_cost(j)
        } else {
            self.cost[j]
        }
    }

    fn dot(&self, y: &[f64], j: usize) -> f64 {
        match self.kinds[j] {
            Kind::Structural => self.cols[j].iter().map(|&(r, c)| y[r] * c).sum(),
            Kind::Slack(r) => y[r],
            Kind::Artificial(r, sign) => sign * y[r],
        }
    }

    fn for_column(&self, j: usize, mut f: impl FnMut(usize, f64)) {
        match self.kinds[j] {
            Kind::Structural => self.cols[j].iter().for_each(|&(r, c)| f(r, c)),
            Kind::Slack(r) => f(r, 1.0),
            Kind::Artificial(r, sign) => f(r, sign),
        }
    }

    /// `B⁻¹ A_j`.
    fn ftran(&self, j: usize) -> Vec<f64> {
        let mut alpha = vec![0.0; self.m()];
        self.for_column(j, |r, c| {
            for (a, row) in alpha.iter_mut().zip(&self.binv) {
                *a += row[r] * c;
            }
        });
        alpha
    }

    /// `c_B B⁻¹`.
    fn btran(&self, c_b: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.m()];
        for (&c, row) in c_b.iter().zip(&self.binv) {
            if c != 0.0 {
                for (yk, &e) in y.iter_mut().zip(row) {
                    *yk += c * e;
                }
            }
        }
        y
    }

    fn row_duals(&self, phase1: bool) -> Vec<f64> {
        let c: Vec<f64> = self
            .basis
            .iter()
            .map(|&b| self.costs_of(phase1, b))
            .collect();
        self.btran(&c)
    }

    fn pivot(&mut self, r: usize, q: usize, alpha: &[f64]) {
        let piv = alpha[r];
        let mut pivot_row = std::mem::take(&mut self.binv[r]);
        pivot_row.iter_mut().for_each(|e| *e /= piv);
        for (i, row) in self.binv.iter_mut().enumerate() {
            let f = alpha[i];
            if i != r && f != 0.0 {
                for (e, &p) in row.iter_mut().zip(&pivot_row) {
                    *e -= f * p;
                }
            }
        }
        self.binv[r] = pivot_row;
        let p = self.basis[r];
        self.basis[r] = q;
        self.state[q] = State::Basic(r);
        self.since_refactor += 1;
        self.last_iterations += 1;
        self.total_iterations += 1;
        if self.cfg.record_pivots {
            self.pivot_log.push((q, p));
        }
        log::trace!("pivot row {r}: in {q} out {p} (pivot {piv:.3e})");
    }

    fn spend(&self, budget: &mut usize) -> Result<(), LpError> {
        if *budget == 0 {
            return Err(LpError::IterationLimit(self.limit()));
        }
        *budget -= 1;
        Ok(())
    }

    fn maybe_refactor(&mut self) {
        if self.since_refactor >= self.cfg.refactor_period && self.refactor() {
            self.recompute_basics();
        }
    }

    fn primal_loop(&mut self, phase1: bool, budget: &mut usize) -> Result<(), LpError> {
        let (otol, ptol) = (self.cfg.optimality_tol, self.cfg.pivot_tol);
        let mut streak = 0;
        loop {
            self.maybe_refactor();
            let bland = streak >= self.cfg.degeneracy_streak;
            let y = self.row_duals(phase1);
            let mut entering: Option<(usize, f64, f64)> = None;
            for j in 0..self.kinds.len() {
                if matches!(self.state[j], State::Basic(_)) || self.upper[j] <= self.lower[j] {
                    continue;
                }
                let d = self.costs_of(phase1, j) - self.dot(&y, j);
                let (dir, score) = match self.state[j] {
                    State::Lower if d < -otol => (1.0, -d),
                    State::Upper if d > otol => (-1.0, d),
                    _ => continue,
                };
                if entering.is_none_or(|(_, _, s)| !bland && score > s) {
                    entering = Some((j, dir, score));
                }
                if bland {
                    break;
                }
            }
            let Some((q, dir, _)) = entering else {
                return Ok(());
            };
            self.spend(budget)?;
            let alpha = self.ftran(q);
            let mut t = self.upper[q] - self.lower[q];
            let mut leave: Option<usize> = None;
            for (i, &a) in alpha.iter().enumerate() {
                let a = dir * a;
                if a.abs() <= ptol {
                    continue;
                }
                let b = self.basis[i];
                let lim = if a > 0.0 {
                    (self.x[b] - self.lower[b]).max(0.0) / a
                } else {
                    (self.upper[b] - self.x[b]).max(0.0) / -a
                };
                let better =
                    lim < t - TIE || (lim <= t + TIE && leave.is_some_and(|l| b < self.basis[l]));
                if better {
                    t = lim;
                    leave = Some(i);
                }
            }
            if t.is_infinite() {
                return Err(LpError::Unbounded);
            }
            self.x[q] += dir * t;
            for (i, &a) in alpha.iter().enumerate() {
                let b = self.basis[i];
                self.x[b] -= dir * t * a;
            }
            match leave {
                None => {
                    let (x, s) = if dir > 0.0 {
                        (self.upper[q], State::Upper)
                    } else {
                        (self.lower[q], State::Lower)
                    };
                    self.x[q] = x;
                    self.state[q] = s;
                    self.last_iterations += 1;
                    self.total_iterations += 1;
                }
                Some(r) => {
                    let p = self.basis[r];
                    if dir * alpha[r] > 0.0 {
                        self.x[p] = self.lower[p];
                        self.state[p] = State::Lower;
                    } else {
                        self.x[p] = self.upper[p];
                        self.state[p] = State::Upper;
                    }
                    self.pivot(r, q, &alpha);
                }
            }
            streak = if t <= TIE { streak + 1 } else { 0 };
        }
    }

    fn dual_loop(&mut self, budget: &mut usize) -> Result<LpStatus, LpError> {
        let (ftol, ptol) = (self.cfg.feasibility_tol, self.cfg.pivot_tol);
        let mut streak = 0;
        loop {
            self.maybe_refactor();
            let bland = streak >= self.cfg.degeneracy_streak;
            let mut leaving: Option<(usize, f64)> = None;
            for (i, &b) in self.basis.iter().enumerate() {
                let infeas = (self.lower[b] - self.x[b]).max(self.x[b] - self.upper[b]);
                if infeas <= ftol {
                    continue;
                }
                let better = match leaving {
                    None => true,
                    Some((l, _)) if bland => b < self.basis[l],
                    Some((l, v)) => infeas > v || (infeas == v && b < self.basis[l]),
                };
                if better {
                    leaving = Some((i, infeas));
                }
            }
            let Some((r, _)) = leaving else {
                return Ok(LpStatus::Optimal);
            };
            self.spend(budget)?;
            let p = self.basis[r];
            let up = self.x[p] < self.lower[p];
            let s = if up { 1.0 } else { -1.0 };
            let target = if up { self.lower[p] } else { self.upper[p] };
            let rho = self.binv[r].clone();
            let y = self.row_duals(false);
            let mut entering: Option<(usize, f64)> = None;
            for j in 0..self.kinds.len() {
                if matches!(self.state[j], State::Basic(_)) || self.upper[j] <= self.lower[j] {
                    continue;
                }
                let arj = self.dot(&rho, j);
                let d = self.cost[j] - self.dot(&y, j);
                let slack = match self.state[j] {
                    State::Lower if s * arj < -ptol => d.max(0.0),
                    State::Upper if s * arj > ptol => (-d).max(0.0),
                    _ => continue,
                };
                let ratio = slack / arj.abs();
                if entering.is_none_or(|(_, best)| ratio < best - TIE) {
                    entering = Some((j, ratio));
                }
            }
            let Some((q, ratio)) = entering else {
                self.farkas = Some(rho);
                return Ok(LpStatus::Infeasible);
            };
            let alpha = self.ftran(q);
            let theta = (self.x[p] - target) / alpha[r];
            self.x[q] += theta;
            for (i, &a) in alpha.iter().enumerate() {
                let b = self.basis[i];
                self.x[b] -= theta * a;
            }
            self.x[p] = target;
            self.state[p] = if up { State::Lower } else { State::Upper };
            self.pivot(r, q, &alpha);
            streak = if ratio <= TIE { streak + 1 } else { 0 };
        }
    }

    /// Rebuilds `B⁻¹` by Gauss-Jordan elimination. False if `B` is singular.
    fn refactor(&mut self) -> bool {
        let m = self.m();
        let mut a = vec![vec![0.0; 2 * m]; m];
        for (k, &b) in self.basis.iter().enumerate() {
            self.for_column(b, |r, c| a[r][k] = c);
        }
        for (i, row) in a.iter_mut().enumerate() {
            row[m + i] = 1.0;
        }
        for col in 0..m {
            let piv = (col..m)
                .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
                .expect("nonempty");
            if a[piv][col].abs() < 1e-12 {
                return false;
            }
            a.swap(col, piv);
            let inv = 1.0 / a[col][col];
            a[col].iter_mut().for_each(|e| *e *= inv);
            let pivot_row = a[col].clone();
            for (i, row) in a.iter_mut().enumerate() {
                let f = row[col];
                if i != col && f != 0.0 {
                    for (e, &p) in row.iter_mut().zip(&pivot_row) {
                        *e -= f * p;
                    }
                }
            }
        }
        self.binv = a.into_iter().map(|row| row[m..].to_vec()).collect();
        self.since_refactor = 0;
        true
    }

    /// `x_B = B⁻¹ (b − N x_N)`.
    fn recompute_basics(&mut self) {
        let mut rhs: Vec<f64> = self.problem.rows.iter().map(|r| r.rhs).collect();
        for j in 0..self.kinds.len() {
            if matches!(self.state[j], State::Basic(_)) {
                continue;
            }
            let xj = self.x[j];
            if xj != 0.0 {
                self.for_column(j, |r, c| rhs[r] -= c * xj);
            }
        }
        for (k, row) in self.binv.iter().enumerate() {
            let v = row.iter().zip(&rhs).map(|(e, b)| e * b).sum();
            self.x[self.basis[k]] = v;
        }
    }

    fn residual(&self) -> f64 {
        let mut act = vec![0.0; self.m()];
        for j in 0..self.kinds.len() {
            let xj = self.x[j];
            if xj != 0.0 {
                self.for_column(j, |r, c| act[r] += c * xj);
            }
        }
        act.iter()
            .zip(&self.problem.rows)
            .map(|(a, r)| (a - r.rhs).abs())
            .fold(0.0, f64::max)
    }

    /// Structural values clamped into their bounds.
    pub fn values(&self) -> Vec<f64> {
        (0..self.n())
            .map(|j| self.x[j].clamp(self.lower[j], self.upper[j]))
            .collect()
    }

    /// Objective at [`LpSession::values`]; `+∞` unless optimal.
    pub fn objective(&self) -> f64 {
        match self.status {
            Some(LpStatus::Optimal) => self.problem.objective_at(&self.values()),
            _ => f64::INFINITY,
        }
    }

    /// Row duals `y = c_B B⁻¹` of the current basis.
    pub fn duals(&self) -> Vec<f64> {
        if self.basis.len() == self.problem.num_rows() {
            self.row_duals(false)
        } else {
            vec![0.0; self.problem.num_rows()]
        }
    }

    pub fn farkas(&self) -> Option<&[f64]> {
        self.farkas.as_deref()
    }

    pub fn result(&self) -> LpResult {
        let status = self.status.unwrap_or(LpStatus::Infeasible);
        LpResult {
            status,
            values: self.values(),
            objective: self.objective(),
            duals: self.duals(),
            farkas: self.farkas.clone(),
            iterations: self.last_iterations,
            session: self.clone(),
        }
    }
}

/// A terminal solve outcome together with the basis that produced it.
#[derive(Debug, Clone)]
pub struct LpResult {
    pub status: LpStatus,
    pub values: Vec<f64>,
    pub objective: f64,
    pub duals: Vec<f64>,
    /// Row multipliers proving infeasibility, when infeasible.
    pub farkas: Option<Vec<f64>>,
    pub iterations: usize,
    session: LpSession,
}

impl LpResult {
    pub fn session(&self) -> &LpSession {
        &self.session
    }

    pub fn into_session(self) -> LpSession {
        self.session
    }
}

/// An extension applied on top of an optimal basis.
#[derive(Debug, Clone, PartialEq)]
pub enum LpChange {
    Row(LinearConstraint),
    Bounds { var: usize, lower: f64, upper: f64 },
}

pub fn solve(p: &LpProblem) -> Result<LpResult, LpError> {
    solve_with(p, LpConfig::default())
}

pub fn solve_with(p: &LpProblem, cfg: LpConfig) -> Result<LpResult, LpError> {
    let mut s = LpSession::new(p.clone(), cfg);
    s.solve()?;
    Ok(s.result())
}

/// Applies `change` to the problem behind `r` and re-solves from its basis.
pub fn resolve_after_cut(r: &LpResult, change: LpChange) -> Result<LpResult, LpError> {
    if r.status != LpStatus::Optimal {
        return Err(LpError::NotOptimal);
    }
    let mut s = r.session.clone();
    match change {
        LpChange::Row(row) => s.add_row(row)?,
        LpChange::Bounds { var, lower, upper } => s.set_bounds(var, lower, upper)?,
    }
    s.solve()?;
    Ok(s.result())
}
