//! Linear programs characterizing secret-message rates over line networks.
//!
//! [`LpModel`] is a small dense model (all variables nonnegative), solved by
//! the self-contained simplex in [`solve`]. The builders in this module
//! produce the single-hop, One-Eve, All-Eves, V-Eves outer bound and
//! cost-extension programs; [`export`] writes and parses CPLEX LP and free
//! MPS text.

mod builders;
pub mod export;
mod simplex;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::capacity::ParamError;

pub use builders::{
    build_all_eves, build_extension, build_one_eve, build_single_hop_sk, build_single_hop_sm,
    build_v_eves_outer, build_v_eves_outer_with_cap, placement_suffix, CostObjective,
    ExtensionBase, LineNetwork, LinearForm, LpExtension, DEFAULT_PLACEMENT_CAP,
};
pub use export::{export, parse, ExportFormat};
pub use simplex::solve;

/// Feasibility tolerance used when re-checking a solved assignment.
pub const FEASIBILITY_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("constraint `{constraint}` references undeclared variable index {index}")]
    UnknownVariable { constraint: String, index: usize },
    #[error("unknown variable `{0}`")]
    UnknownVariableName(String),
    #[error("duplicate variable `{0}`")]
    DuplicateVariable(String),
    #[error("invalid network: {0}")]
    InvalidNetwork(String),
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error("{count} eavesdropper placements exceed the cap of {cap}")]
    PlacementLimit { count: u128, cap: u128 },
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("solution violates `{constraint}` by {violation:e}")]
    Verification { constraint: String, violation: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = ">=")]
    Ge,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub name: String,
    /// (variable index, coefficient); each variable at most once.
    pub terms: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Constraint {
    pub fn lhs(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(v, c)| c * x[v]).sum()
    }

    /// Amount by which `x` violates the constraint (0 when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let lhs = self.lhs(x);
        match self.relation {
            Relation::Le => (lhs - self.rhs).max(0.0),
            Relation::Ge => (self.rhs - lhs).max(0.0),
            Relation::Eq => (lhs - self.rhs).abs(),
        }
    }
}

/// A linear program over nonnegative variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpModel {
    pub name: String,
    variables: Vec<Variable>,
    sense: Sense,
    objective: Vec<(usize, f64)>,
    constraints: Vec<Constraint>,
}

impl LpModel {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            variables: Vec::new(),
            sense: Sense::Maximize,
            objective: Vec::new(),
            constraints: Vec::new(),
        }
    }

    /// Declares a variable with lower bound 0.
    pub fn add_variable(&mut self, name: impl Into<String>) -> Result<usize, LpError> {
        let name = name.into();
        if self.index_of(&name).is_some() {
            return Err(LpError::DuplicateVariable(name));
        }
        self.variables.push(Variable { name, lower: 0.0 });
        Ok(self.variables.len() - 1)
    }

    pub fn set_lower_bound(&mut self, name: &str, lower: f64) -> Result<(), LpError> {
        let i = self
            .index_of(name)
            .ok_or_else(|| LpError::UnknownVariableName(name.to_string()))?;
        self.variables[i].lower = lower;
        Ok(())
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn objective(&self) -> &[(usize, f64)] {
        &self.objective
    }

    pub fn set_objective(&mut self, sense: Sense, terms: Vec<(usize, f64)>) -> Result<(), LpError> {
        let terms = self.normalize_terms("objective", terms)?;
        self.sense = sense;
        self.objective = terms;
        Ok(())
    }

    /// Adds a row; duplicate variables in `terms` are summed, zero
    /// coefficients dropped and terms sorted by variable index.
    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        terms: Vec<(usize, f64)>,
        relation: Relation,
        rhs: f64,
    ) -> Result<(), LpError> {
        let name = name.into();
        let terms = self.normalize_terms(&name, terms)?;
        self.constraints.push(Constraint {
            name,
            terms,
            relation,
            rhs,
        });
        Ok(())
    }

    fn normalize_terms(&self, owner: &str, terms: Vec<(usize, f64)>) -> Result<Vec<(usize, f64)>, LpError> {
        let mut out: Vec<(usize, f64)> = Vec::with_capacity(terms.len());
        for (v, c) in terms {
            if v >= self.variables.len() {
                return Err(LpError::UnknownVariable {
                    constraint: owner.to_string(),
                    index: v,
                });
            }
            match out.iter_mut().find(|(w, _)| *w == v) {
                Some(slot) => slot.1 += c,
                None => out.push((v, c)),
            }
        }
        out.retain(|&(_, c)| c != 0.0);
        out.sort_by_key(|&(v, _)| v);
        Ok(out)
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().map(|&(v, c)| c * x[v]).sum()
    }

    /// Largest violation over all rows and bounds, with the offending name.
    pub fn max_violation(&self, x: &[f64]) -> (f64, String) {
        let mut worst = (0.0, String::new());
        for c in &self.constraints {
            let scale = 1.0f64.max(c.terms.iter().map(|&(v, a)| (a * x[v]).abs()).fold(0.0, f64::max));
            let viol = c.violation(x) / scale;
            if viol > worst.0 {
                worst = (viol, c.name.clone());
            }
        }
        for (v, var) in self.variables.iter().enumerate() {
            if var.lower - x[v] > worst.0 {
                worst = (var.lower - x[v], format!("{} >= {}", var.name, var.lower));
            }
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Result of [`solve`]: status, optimum and a vertex assignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSolution {
    pub status: SolveStatus,
    pub objective_value: f64,
    pub names: Vec<String>,
    pub values: Vec<f64>,
}

impl RateSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    pub fn value(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.values[i])
    }

    /// Value of `name`, or 0 when the variable does not exist.
    pub fn value_or_zero(&self, name: &str) -> f64 {
        self.value(name).unwrap_or(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_undeclared_variables() {
        let mut m = LpModel::new("t");
        let x = m.add_variable("x").unwrap();
        assert!(m.add_constraint("c", vec![(x + 1, 1.0)], Relation::Le, 1.0).is_err());
        assert!(matches!(m.add_variable("x"), Err(LpError::DuplicateVariable(_))));
    }

    #[test]
    fn merges_duplicate_terms() {
        let mut m = LpModel::new("t");
        let x = m.add_variable("x").unwrap();
        m.add_constraint("c", vec![(x, 1.0), (x, 2.0)], Relation::Le, 1.0).unwrap();
        assert_eq!(m.constraints()[0].terms, vec![(x, 3.0)]);
    }
}
