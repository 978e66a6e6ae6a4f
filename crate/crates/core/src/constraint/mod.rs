//! Constraint systems `(variables, linear rows, true/false costs)` and the
//! encoders that compile graphs and networks into them.
//!
//! # Dump format
//!
//! [`ConstraintSystem::dump`] writes one line per variable followed by one
//! line per row:
//!
//! ```text
//! var <name> <cost-if-1> <cost-if-0>
//! <+c> <name> <+c> <name> ... <op> <rhs>
//! ```
//!
//! `<op>` is one of `<=`, `>=`, `=`. Coefficients carry an explicit sign and
//! every number uses Rust's shortest round-trip `f64` formatting, so the dump
//! is byte-stable for a given system.

mod bayes_enc;
mod waodag_enc;

use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::bayes::BayesError;
use crate::waodag::WaodagError;

pub use bayes_enc::{
    encode_bayesnet, BayesEncoding, Conditional, ZeroProbPolicy, DEFAULT_ZERO_EPSILON,
};
pub use waodag_enc::{encode_waodag, WaodagEncoding};

/// Tolerance used by [`ConstraintSystem::satisfies`].
pub const FEASIBILITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConstraintError {
    #[error("assignment covers {found} variables, system has {expected}")]
    DomainMismatch { expected: usize, found: usize },
    #[error("constraint references undeclared variable {0}")]
    UnknownVariable(usize),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("P({0}) is below the zero-probability threshold")]
    ZeroProbabilityRejected(String),
    #[error("delta must be positive and finite, got {0}")]
    NonPositiveDelta(f64),
    #[error("assignment is not a 0-1 solution of the system")]
    NotASolution,
    #[error(transparent)]
    Waodag(#[from] WaodagError),
    #[error(transparent)]
    Bayes(#[from] BayesError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

impl Relation {
    pub fn holds(self, lhs: f64, rhs: f64, tol: f64) -> bool {
        match self {
            Relation::Le => lhs <= rhs + tol,
            Relation::Ge => lhs >= rhs - tol,
            Relation::Eq => (lhs - rhs).abs() <= tol,
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Eq => "=",
        })
    }
}

/// `Σ coefficient · variable  REL  rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub terms: Vec<(f64, usize)>,
    pub relation: Relation,
    pub rhs: f64,
}

impl LinearConstraint {
    pub fn new(terms: Vec<(f64, usize)>, relation: Relation, rhs: f64) -> Self {
        LinearConstraint {
            terms,
            relation,
            rhs,
        }
    }

    pub fn lhs(&self, values: &[f64]) -> f64 {
        self.terms.iter().map(|&(c, v)| c * values[v]).sum()
    }

    pub fn holds_at(&self, values: &[f64], tol: f64) -> bool {
        self.relation.holds(self.lhs(values), self.rhs, tol)
    }
}

/// A total 0-1 map over the variables of a system.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Assignment01(Vec<bool>);

impl Assignment01 {
    pub fn new(values: Vec<bool>) -> Self {
        Assignment01(values)
    }

    pub fn zeros(len: usize) -> Self {
        Assignment01(vec![false; len])
    }

    /// Rounds each value to the nearest of 0 and 1.
    pub fn round(values: &[f64]) -> Self {
        Assignment01(values.iter().map(|&v| v >= 0.5).collect())
    }

    pub fn get(&self, var: usize) -> bool {
        self.0[var]
    }

    pub fn set(&mut self, var: usize, value: bool) {
        self.0[var] = value;
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[bool] {
        &self.0
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Psi {
    on: f64,
    off: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConstraintSystem {
    names: Vec<String>,
    psi: Vec<Psi>,
    constraints: Vec<LinearConstraint>,
}

impl ConstraintSystem {
    pub fn new() -> Self {
        Self::default()
    }

    /// Declares a variable with costs for value 1 and value 0.
    pub fn add_variable(
        &mut self,
        name: impl Into<String>,
        cost_true: f64,
        cost_false: f64,
    ) -> Result<usize, ConstraintError> {
        let name = name.into();
        if !cost_true.is_finite() || !cost_false.is_finite() {
            return Err(ConstraintError::NonFinite(format!("cost of {name}")));
        }
        self.names.push(name);
        self.psi.push(Psi {
            on: cost_true,
            off: cost_false,
        });
        Ok(self.names.len() - 1)
    }

    pub fn add_constraint(&mut self, row: LinearConstraint) -> Result<(), ConstraintError> {
        self.check_row(&row)?;
        self.constraints.push(row);
        Ok(())
    }

    pub fn check_row(&self, row: &LinearConstraint) -> Result<(), ConstraintError> {
        for &(c, v) in &row.terms {
            if v >= self.names.len() {
                return Err(ConstraintError::UnknownVariable(v));
            }
            if !c.is_finite() {
                return Err(ConstraintError::NonFinite(format!(
                    "coefficient of {}",
                    self.names[v]
                )));
            }
        }
        if !row.rhs.is_finite() {
            return Err(ConstraintError::NonFinite("right-hand side".into()));
        }
        Ok(())
    }

    pub fn num_variables(&self) -> usize {
        self.names.len()
    }

    pub fn name(&self, var: usize) -> &str {
        &self.names[var]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn find(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn constraints(&self) -> &[LinearConstraint] {
        &self.constraints
    }

    /// `ψ(var, value)`.
    pub fn psi(&self, var: usize, value: bool) -> f64 {
        if value {
            self.psi[var].on
        } else {
            self.psi[var].off
        }
    }

    pub fn set_psi(&mut self, var: usize, value: bool, cost: f64) -> Result<(), ConstraintError> {
        if !cost.is_finite() {
            return Err(ConstraintError::NonFinite(format!(
                "cost of {}",
                self.names[var]
            )));
        }
        if value {
            self.psi[var].on = cost;
        } else {
            self.psi[var].off = cost;
        }
        Ok(())
    }

    pub fn max_abs_cost(&self) -> f64 {
        self.psi
            .iter()
            .flat_map(|p| [p.on.abs(), p.off.abs()])
            .fold(0.0, f64::max)
    }

    fn check_domain(&self, s: &Assignment01) -> Result<(), ConstraintError> {
        if s.len() != self.names.len() {
            return Err(ConstraintError::DomainMismatch {
                expected: self.names.len(),
                found: s.len(),
            });
        }
        Ok(())
    }

    /// `Σ s(x)ψ(x,true) + (1 − s(x))ψ(x,false)`.
    pub fn objective(&self, s: &Assignment01) -> Result<f64, ConstraintError> {
        self.check_domain(s)?;
        Ok(self
            .psi
            .iter()
            .zip(s.values())
            .map(|(p, &b)| if b { p.on } else { p.off })
            .sum())
    }

    /// True iff every row holds at `s` within [`FEASIBILITY_TOLERANCE`].
    pub fn satisfies(&self, s: &Assignment01) -> Result<bool, ConstraintError> {
        self.check_domain(s)?;
        let values = s.as_f64();
        Ok(self
            .constraints
            .iter()
            .all(|row| row.holds_at(&values, FEASIBILITY_TOLERANCE)))
    }

    /// Renders one row in the dump syntax.
    pub fn format_row(&self, row: &LinearConstraint) -> String {
        let mut line = String::new();
        for &(c, v) in &row.terms {
            let sign = if c.is_sign_negative() { '-' } else { '+' };
            let _ = write!(line, "{sign}{} {} ", c.abs(), self.names[v]);
        }
        if row.terms.is_empty() {
            line.push_str("0 ");
        }
        let _ = write!(line, "{} {}", row.relation, row.rhs + 0.0);
        line
    }

    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (name, p) in self.names.iter().zip(&self.psi) {
            let _ = writeln!(out, "var {name} {} {}", p.on + 0.0, p.off + 0.0);
        }
        for row in &self.constraints {
            out.push_str(&self.format_row(row));
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ConstraintSystem {
        let mut l = ConstraintSystem::new();
        for i in 0..3 {
            l.add_variable(format!("x{i}"), 2.0, 0.0).unwrap();
        }
        l
    }

    #[test]
    fn objective_and_satisfies() {
        let mut l = tiny();
        assert_eq!(l.objective(&Assignment01::zeros(3)).unwrap(), 0.0);
        assert!(l
            .satisfies(&Assignment01::new(vec![true, false, true]))
            .unwrap());
        l.add_constraint(LinearConstraint::new(
            vec![(1.0, 0), (1.0, 1)],
            Relation::Ge,
            1.0,
        ))
        .unwrap();
        assert!(!l.satisfies(&Assignment01::zeros(3)).unwrap());
        let s = Assignment01::new(vec![false, true, true]);
        assert!(l.satisfies(&s).unwrap());
        assert_eq!(l.objective(&s).unwrap(), 4.0);
        assert_eq!(
            l.objective(&Assignment01::zeros(2)),
            Err(ConstraintError::DomainMismatch {
                expected: 3,
                found: 2
            })
        );
    }

    #[test]
    fn rejects_bad_rows() {
        let mut l = tiny();
        assert_eq!(
            l.add_constraint(LinearConstraint::new(vec![(1.0, 7)], Relation::Le, 0.0)),
            Err(ConstraintError::UnknownVariable(7))
        );
        assert!(l
            .add_constraint(LinearConstraint::new(
                vec![(f64::INFINITY, 0)],
                Relation::Le,
                0.0
            ))
            .is_err());
        assert!(l.add_variable("bad", f64::NAN, 0.0).is_err());
    }

    #[test]
    fn dump_syntax() {
        let mut l = tiny();
        l.add_constraint(LinearConstraint::new(
            vec![(1.0, 0), (-1.0, 2)],
            Relation::Le,
            0.0,
        ))
        .unwrap();
        l.add_constraint(LinearConstraint::new(vec![(1.5, 1)], Relation::Eq, -2.0))
            .unwrap();
        let dump = l.dump();
        let lines: Vec<&str> = dump.lines().collect();
        assert_eq!(lines[0], "var x0 2 0");
        assert_eq!(lines[3], "+1 x0 -1 x2 <= 0");
        assert_eq!(lines[4], "+1.5 x1 = -2");
    }
}
