//! Consistency and true-class F1 scoring of a belief bank.
//!
//! A grounded constraint is *applicable* when the bank believes its
//! premise true. An applicable constraint is *violated* when the bank's
//! label for the conclusion differs from the expected one, or when the
//! conclusion is absent from the bank (absence is not belief). tau is
//! violated / applicable, and consistency is 1 - tau; zero applicable
//! constraints count as perfectly consistent.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::domain::{BeliefBank, GroundedConstraint, Label, StatementId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub applicable_count: usize,
    pub violated_count: usize,
    pub tau: f64,
    pub consistency: f64,
    /// Indices into the grounded constraint slice this was scored against.
    pub violated_constraints: Vec<usize>,
}

impl ConsistencyReport {
    pub fn describe_violations(&self, grounded: &[GroundedConstraint]) -> Vec<String> {
        self.violated_constraints
            .iter()
            .map(|&i| grounded[i].describe())
            .collect()
    }
}

/// Score a bank against grounded constraints.
pub fn consistency(bank: &BeliefBank, grounded: &[GroundedConstraint]) -> ConsistencyReport {
    let mut applicable = 0usize;
    let mut violated = Vec::new();
    for (i, c) in grounded.iter().enumerate() {
        let Some(premise_label) = bank.label_of(&c.premise.id) else {
            continue;
        };
        if !c.applicable(premise_label) {
            continue;
        }
        applicable += 1;
        let broken = match bank.label_of(&c.conclusion.id) {
            Some(conclusion_label) => c.violated_by(premise_label, conclusion_label),
            None => true,
        };
        if broken {
            violated.push(i);
        }
    }
    let tau = if applicable == 0 {
        0.0
    } else {
        violated.len() as f64 / applicable as f64
    };
    ConsistencyReport {
        applicable_count: applicable,
        violated_count: violated.len(),
        tau,
        consistency: 1.0 - tau,
        violated_constraints: violated,
    }
}

/// Precision / recall / F1 over the True class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Number of statements scored (bank ∩ gold). Zero flags an empty
    /// intersection; all rates are 0 in that case.
    pub scored: usize,
}

/// Score the bank's labels against gold, restricted to statements present
/// in both, treating T as the positive class.
pub fn f1_true(bank: &BeliefBank, gold: &BTreeMap<StatementId, Label>) -> AccuracyReport {
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut fn_ = 0usize;
    let mut scored = 0usize;
    for belief in bank.beliefs() {
        let Some(&gold_label) = gold.get(belief.id()) else {
            continue;
        };
        scored += 1;
        match (belief.label, gold_label) {
            (Label::T, Label::T) => tp += 1,
            (Label::T, Label::F) => fp += 1,
            (Label::F, Label::T) => fn_ += 1,
            (Label::F, Label::F) => {}
        }
    }
    let precision = if tp + fp > 0 {
        tp as f64 / (tp + fp) as f64
    } else {
        0.0
    };
    let recall = if tp + fn_ > 0 {
        tp as f64 / (tp + fn_) as f64
    } else {
        0.0
    };
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    AccuracyReport {
        true_positives: tp,
        false_positives: fp,
        false_negatives: fn_,
        precision,
        recall,
        f1,
        scored,
    }
}
