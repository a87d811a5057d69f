//! Weighted-MaxSAT encoding of a belief bank plus grounded constraints,
//! and the two solvers that minimize the total weight of falsified soft
//! clauses: an exact branch-and-bound search and a stochastic local
//! search for problems above the exact cap.
//!
//! Every belief (s, l, w) becomes a unit clause on s, signed by l, with
//! weight lambda * w. Every grounded constraint (p -> c, l, w) becomes
//! the two-literal clause (sign(l)·c OR -p) with weight w times the
//! per-kind multiplier. All clauses are soft; hard clauses exist in the
//! types for testing only.

mod exact;
mod local;

pub use exact::{solve_exact, solve_exact_with, EXACT_VAR_CAP};
pub use local::solve_local;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::calibration::CalibrationParams;
use crate::domain::{Belief, BeliefBank, GroundedConstraint, Label, Provenance, StatementId};
use crate::error::{Error, Result};

/// A literal over a problem variable (an index into the problem's
/// statement table).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Lit {
    pub var: usize,
    pub positive: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClauseWeight {
    Soft(f64),
    Hard,
}

impl ClauseWeight {
    pub fn soft(self) -> Option<f64> {
        match self {
            ClauseWeight::Soft(w) => Some(w),
            ClauseWeight::Hard => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedClause {
    pub literals: Vec<Lit>,
    pub weight: ClauseWeight,
}

impl WeightedClause {
    pub fn is_unit(&self) -> bool {
        self.literals.len() == 1
    }
}

/// A weighted MaxSAT problem over statement variables.
#[derive(Debug, Clone)]
pub struct MaxSatProblem {
    variables: Vec<StatementId>,
    index: BTreeMap<StatementId, usize>,
    clauses: Vec<WeightedClause>,
    lambda: f64,
}

impl MaxSatProblem {
    pub fn builder(lambda: f64) -> ProblemBuilder {
        ProblemBuilder {
            lambda,
            clauses: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    /// Variables in ascending statement-id order; the position is the
    /// variable index used by clause literals.
    pub fn variables(&self) -> &[StatementId] {
        &self.variables
    }

    pub fn statement(&self, var: usize) -> &StatementId {
        &self.variables[var]
    }

    pub fn var_of(&self, id: &StatementId) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn clauses(&self) -> &[WeightedClause] {
        &self.clauses
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Total weight of soft clauses falsified by a full assignment,
    /// summed in clause order. This is the canonical cost both solvers
    /// report. Returns None if a hard clause is falsified.
    pub fn cost_of(&self, values: &[bool]) -> Option<f64> {
        debug_assert_eq!(values.len(), self.variables.len());
        let mut cost = 0.0;
        for clause in &self.clauses {
            let satisfied = clause
                .literals
                .iter()
                .any(|l| values[l.var] == l.positive);
            if !satisfied {
                match clause.weight {
                    ClauseWeight::Soft(w) => cost += w,
                    ClauseWeight::Hard => return None,
                }
            }
        }
        Some(cost)
    }

    /// Number of unit clauses whose literal the assignment satisfies;
    /// ties between equal-cost assignments break toward more of these.
    pub(crate) fn unit_agreement(&self, values: &[bool]) -> usize {
        self.clauses
            .iter()
            .filter(|c| c.is_unit() && values[c.literals[0].var] == c.literals[0].positive)
            .count()
    }

    /// Debug dump in weighted-CNF text form: one clause per line, weight
    /// then signed 1-based literals, zero-terminated. Hard clauses use
    /// the "h" weight marker. A comment header maps variables.
    pub fn to_wcnf(&self) -> String {
        let mut out = String::new();
        for (i, v) in self.variables.iter().enumerate() {
            let _ = writeln!(out, "c var {} = {}", i + 1, v);
        }
        for clause in &self.clauses {
            match clause.weight {
                ClauseWeight::Soft(w) => {
                    let _ = write!(out, "{w}");
                }
                ClauseWeight::Hard => out.push('h'),
            }
            for lit in &clause.literals {
                let v = (lit.var + 1) as i64;
                let _ = write!(out, " {}", if lit.positive { v } else { -v });
            }
            out.push_str(" 0\n");
        }
        out
    }
}

pub struct ProblemBuilder {
    lambda: f64,
    clauses: Vec<(Vec<(StatementId, bool)>, ClauseWeight)>,
}

impl ProblemBuilder {
    /// Add a clause as (statement, sign) literals.
    pub fn clause(
        mut self,
        literals: Vec<(StatementId, bool)>,
        weight: ClauseWeight,
    ) -> Result<Self> {
        if literals.is_empty() {
            return Err(Error::Data("clause must have at least one literal".into()));
        }
        for (i, (id, _)) in literals.iter().enumerate() {
            if literals[..i].iter().any(|(other, _)| other == id) {
                return Err(Error::Data(format!(
                    "duplicate statement {id} within a clause"
                )));
            }
        }
        if let ClauseWeight::Soft(w) = weight {
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::Data(format!("clause weight {w} must be positive")));
            }
        }
        self.clauses.push((literals, weight));
        Ok(self)
    }

    pub fn unit(self, id: StatementId, positive: bool, weight: f64) -> Result<Self> {
        self.clause(vec![(id, positive)], ClauseWeight::Soft(weight))
    }

    pub fn build(self) -> MaxSatProblem {
        let mut index: BTreeMap<StatementId, usize> = BTreeMap::new();
        for (lits, _) in &self.clauses {
            for (id, _) in lits {
                index.entry(id.clone()).or_insert(0);
            }
        }
        let variables: Vec<StatementId> = index.keys().cloned().collect();
        for (i, v) in variables.iter().enumerate() {
            *index.get_mut(v).unwrap() = i;
        }
        let clauses = self
            .clauses
            .into_iter()
            .map(|(lits, weight)| WeightedClause {
                literals: lits
                    .into_iter()
                    .map(|(id, positive)| Lit {
                        var: index[&id],
                        positive,
                    })
                    .collect(),
                weight,
            })
            .collect();
        MaxSatProblem {
            variables,
            index,
            clauses,
            lambda: self.lambda,
        }
    }
}

/// A truth assignment with its canonical cost.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub values: BTreeMap<StatementId, Label>,
    pub cost: f64,
    /// True only when produced by the exact solver.
    pub optimal: bool,
}

impl Assignment {
    pub(crate) fn from_values(problem: &MaxSatProblem, values: &[bool], optimal: bool) -> Self {
        let cost = problem
            .cost_of(values)
            .expect("solver returned an assignment violating a hard clause");
        Assignment {
            values: problem
                .variables
                .iter()
                .zip(values)
                .map(|(id, &v)| (id.clone(), Label::from_bool(v)))
                .collect(),
            cost,
            optimal,
        }
    }

    pub fn label_of(&self, id: &StatementId) -> Option<Label> {
        self.values.get(id).copied()
    }
}

/// Encode a bank and grounded constraints as weighted MaxSAT.
///
/// Beliefs become unit clauses scaled by params.lambda; constraints
/// become two-literal clauses weighted by constraint weight times the
/// kind multiplier. Clause order is beliefs (bank order) followed by
/// constraints (input order).
pub fn encode(
    bank: &BeliefBank,
    grounded: &[GroundedConstraint],
    params: &CalibrationParams,
) -> Result<MaxSatProblem> {
    if !(params.lambda > 0.0) {
        return Err(Error::Config(format!(
            "lambda must be positive, got {}",
            params.lambda
        )));
    }
    let mut builder = MaxSatProblem::builder(params.lambda);
    for belief in bank.beliefs() {
        let weight = params.lambda * belief.weight;
        if weight > 0.0 {
            builder = builder.unit(belief.id().clone(), belief.label.is_true(), weight)?;
        }
    }
    for c in grounded.iter() {
        let weight = c.weight * params.kind_multiplier(c.kind);
        if weight > 0.0 {
            builder = builder.clause(
                vec![
                    (c.conclusion.id.clone(), c.conclusion_label.is_true()),
                    (c.premise.id.clone(), false),
                ],
                ClauseWeight::Soft(weight),
            )?;
        }
    }
    Ok(builder.build())
}

/// One belief label changed by the solver.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Flip {
    pub statement: String,
    pub from: Label,
    pub to: Label,
}

/// Write a solved assignment back into the bank. Changed labels keep
/// their original weight and get `Provenance::Solver`; the flip list is
/// returned for audit.
pub fn apply_assignment(bank: &mut BeliefBank, assignment: &Assignment) -> Result<Vec<Flip>> {
    let mut pending = Vec::new();
    for belief in bank.beliefs() {
        let Some(new_label) = assignment.label_of(belief.id()) else {
            return Err(Error::Data(format!(
                "assignment does not cover bank statement {}",
                belief.id()
            )));
        };
        if new_label != belief.label {
            pending.push(Belief {
                statement: belief.statement.clone(),
                label: new_label,
                weight: belief.weight,
                provenance: Provenance::Solver,
            });
        }
    }
    let mut flips = Vec::with_capacity(pending.len());
    for belief in pending {
        flips.push(Flip {
            statement: belief.statement.id.to_string(),
            from: belief.label.flip(),
            to: belief.label,
        });
        bank.upsert(belief)?;
    }
    Ok(flips)
}

/// Initial assignment used by both solvers: satisfy each variable's unit
/// clause where one exists, default false otherwise. When contradictory
/// unit clauses exist, the heavier one wins (first wins on exact ties).
pub(crate) fn belief_initialization(problem: &MaxSatProblem) -> Vec<bool> {
    let mut values = vec![false; problem.num_vars()];
    let mut best_weight = vec![f64::NEG_INFINITY; problem.num_vars()];
    for clause in problem.clauses() {
        if !clause.is_unit() {
            continue;
        }
        let lit = clause.literals[0];
        let w = match clause.weight {
            ClauseWeight::Soft(w) => w,
            ClauseWeight::Hard => f64::INFINITY,
        };
        if w > best_weight[lit.var] {
            best_weight[lit.var] = w;
            values[lit.var] = lit.positive;
        }
    }
    values
}
