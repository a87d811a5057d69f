//! Cross-cutting verification oracles used by the test suite: an
//! exhaustive brute-force MaxSAT solver, random instance generators, and
//! a fuzz loop asserting encode/metrics agreement, exact-solver
//! optimality, and consistency improvement after solving.
//!
//! The brute-force path deliberately re-implements clause evaluation and
//! cost summation; it must stay independent of the solver's code.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::calibration::CalibrationParams;
use crate::dataset::{generate, RelationMix, TaxonomySpec};
use crate::domain::{
    ground_template, Belief, BeliefBank, Label, Provenance, Relation, StatementId,
    StatementTemplate,
};
use crate::error::{Error, Result};
use crate::metrics;
use crate::solver::{self, ClauseWeight, MaxSatProblem};

/// Brute-force size limit: 2^20 assignments is the most a test should pay.
pub const BRUTE_FORCE_VAR_CAP: usize = 20;

const COST_EPS: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct BruteForceResult {
    pub cost: f64,
    /// Every optimal assignment (within epsilon of the minimum), as value
    /// vectors in variable order.
    pub optima: Vec<Vec<bool>>,
}

/// Exhaustive enumeration of all 2^n assignments.
pub fn brute_force_maxsat(problem: &MaxSatProblem) -> Result<BruteForceResult> {
    let n = problem.num_vars();
    if n > BRUTE_FORCE_VAR_CAP {
        return Err(Error::Config(format!(
            "brute force capped at {BRUTE_FORCE_VAR_CAP} variables, got {n}"
        )));
    }
    let mut best = f64::INFINITY;
    let mut optima: Vec<Vec<bool>> = Vec::new();
    let mut values = vec![false; n];
    for mask in 0u64..(1u64 << n) {
        for (i, v) in values.iter_mut().enumerate() {
            *v = (mask >> i) & 1 == 1;
        }
        // independent falsification check and cost sum
        let mut cost = 0.0;
        let mut hard_violated = false;
        for clause in problem.clauses() {
            let mut satisfied = false;
            for lit in &clause.literals {
                if values[lit.var] == lit.positive {
                    satisfied = true;
                    break;
                }
            }
            if !satisfied {
                match clause.weight {
                    ClauseWeight::Soft(w) => cost += w,
                    ClauseWeight::Hard => {
                        hard_violated = true;
                        break;
                    }
                }
            }
        }
        if hard_violated {
            continue;
        }
        if cost < best - COST_EPS {
            best = cost;
            optima.clear();
            optima.push(values.clone());
        } else if cost <= best + COST_EPS {
            best = best.min(cost);
            optima.push(values.clone());
        }
    }
    if optima.is_empty() {
        return Err(Error::Data("hard clauses are unsatisfiable".into()));
    }
    Ok(BruteForceResult { cost: best, optima })
}

/// Random abstract problem: unit clauses over a subset of variables plus
/// random binary implication-shaped clauses.
pub fn random_problem(seed: u64, n_vars: usize, n_binary: usize) -> MaxSatProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ids: Vec<StatementId> = (0..n_vars)
        .map(|i| {
            ground_template(
                &StatementTemplate::new(Relation::HasProperty, format!("v{i:03}")),
                "fuzz",
            )
            .unwrap()
            .id
        })
        .collect();
    let mut builder = MaxSatProblem::builder(1.0);
    for id in &ids {
        if rng.random_bool(0.8) {
            builder = builder
                .unit(id.clone(), rng.random_bool(0.5), 0.05 + rng.random::<f64>())
                .unwrap();
        }
    }
    for _ in 0..n_binary {
        let a = rng.random_range(0..n_vars);
        let mut b = rng.random_range(0..n_vars);
        while b == a {
            b = rng.random_range(0..n_vars);
        }
        builder = builder
            .clause(
                vec![
                    (ids[a].clone(), rng.random_bool(0.5)),
                    (ids[b].clone(), rng.random_bool(0.5)),
                ],
                ClauseWeight::Soft(0.05 + rng.random::<f64>()),
            )
            .unwrap();
    }
    builder.build()
}

/// Parameters of the fuzz loop.
#[derive(Debug, Clone)]
pub struct FuzzParams {
    pub instances: usize,
    /// Taxonomy size range, kept small enough for brute force.
    pub min_concepts: usize,
    pub max_concepts: usize,
    /// Label-noise applied to gold when building the raw bank.
    pub false_positive_rate: f64,
    pub false_negative_rate: f64,
}

impl Default for FuzzParams {
    fn default() -> Self {
        FuzzParams {
            instances: 100,
            min_concepts: 4,
            max_concepts: 7,
            false_positive_rate: 0.3,
            false_negative_rate: 0.05,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Mismatch {
    pub seed: u64,
    pub check: String,
    pub detail: String,
    /// Weighted-CNF dump of the offending problem.
    pub wcnf: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleCheckReport {
    pub instances: usize,
    pub mismatches: usize,
    pub max_cost_gap: f64,
    pub dumps: Vec<Mismatch>,
}

/// Generate random taxonomy-shaped banks and graphs, then check:
/// encode/metrics falsification agreement, exact-solver optimality
/// against brute force, and that solving never lowers consistency.
pub fn fuzz_pipeline(seed: u64, params: &FuzzParams) -> OracleCheckReport {
    let results: Vec<(Vec<Mismatch>, f64)> = (0..params.instances as u64)
        .into_par_iter()
        .map(|i| fuzz_instance(seed.wrapping_add(i), params))
        .collect();
    let mut dumps = Vec::new();
    let mut max_cost_gap = 0.0f64;
    for (mismatches, gap) in results {
        dumps.extend(mismatches);
        max_cost_gap = max_cost_gap.max(gap);
    }
    OracleCheckReport {
        instances: params.instances,
        mismatches: dumps.len(),
        max_cost_gap,
        dumps,
    }
}

fn fuzz_instance(seed: u64, params: &FuzzParams) -> (Vec<Mismatch>, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mismatches = Vec::new();
    let mut max_gap = 0.0f64;

    let spec = TaxonomySpec {
        seed: rng.random(),
        concept_count: rng.random_range(params.min_concepts..=params.max_concepts),
        entity_count: 1,
        mutex_subtree_count: 2,
        relation_mix: RelationMix::default(),
        backward_discount: 2.0,
        leaf_fact_true_fraction: 0.5,
    };
    let data = match generate(&spec) {
        Ok(d) => d,
        Err(e) => {
            mismatches.push(Mismatch {
                seed,
                check: "generate".into(),
                detail: e.to_string(),
                wcnf: String::new(),
            });
            return (mismatches, max_gap);
        }
    };
    let entity = data.entities[0].clone();

    let calibration = CalibrationParams {
        lambda: [0.1, 0.25, 0.5, 1.0][rng.random_range(0..4)],
        ..CalibrationParams::default()
    };
    let weighted = crate::calibration::weight_graph(&data.graph, &calibration).unwrap();
    let grounded = weighted.instantiate(&entity).unwrap();

    // noisy raw bank from gold
    let mut bank = BeliefBank::for_entity(&entity);
    for fact in &data.facts {
        let flip = match fact.gold_label {
            Label::T => rng.random_bool(params.false_negative_rate),
            Label::F => rng.random_bool(params.false_positive_rate),
        };
        let label = if flip { fact.gold_label.flip() } else { fact.gold_label };
        let weight = 0.5 + 0.5 * rng.random::<f64>();
        bank.upsert(Belief::new(fact.statement.clone(), label, weight, Provenance::RawModel).unwrap())
            .unwrap();
    }

    let problem = match solver::encode(&bank, grounded.constraints(), &calibration) {
        Ok(p) => p,
        Err(e) => {
            mismatches.push(Mismatch {
                seed,
                check: "encode".into(),
                detail: e.to_string(),
                wcnf: String::new(),
            });
            return (mismatches, max_gap);
        }
    };

    // encode/metrics agreement on a random full assignment
    check_encode_metrics_agreement(seed, &mut rng, &bank, &grounded, &problem, &mut mismatches);

    // exact vs brute force
    if problem.num_vars() <= BRUTE_FORCE_VAR_CAP {
        let exact = solver::solve_exact_with(&problem, BRUTE_FORCE_VAR_CAP).unwrap();
        let brute = brute_force_maxsat(&problem).unwrap();
        let gap = (exact.cost - brute.cost).abs();
        max_gap = max_gap.max(gap);
        if gap > COST_EPS {
            mismatches.push(Mismatch {
                seed,
                check: "exact_vs_brute".into(),
                detail: format!("exact cost {} vs brute {}", exact.cost, brute.cost),
                wcnf: problem.to_wcnf(),
            });
        }

        // consistency must not regress after applying the assignment
        let before = metrics::consistency(&bank, grounded.constraints()).consistency;
        let mut solved = bank.clone();
        solver::apply_assignment(&mut solved, &exact).unwrap();
        let after = metrics::consistency(&solved, grounded.constraints()).consistency;
        if after < before - 1e-12 {
            mismatches.push(Mismatch {
                seed,
                check: "consistency_regression".into(),
                detail: format!("consistency {before} -> {after}"),
                wcnf: problem.to_wcnf(),
            });
        }
    }

    (mismatches, max_gap)
}

/// The clauses falsified by an assignment must correspond one-to-one to
/// the beliefs/constraints violated under metrics' semantics when the
/// bank is rebuilt from that assignment.
fn check_encode_metrics_agreement(
    seed: u64,
    rng: &mut ChaCha8Rng,
    bank: &BeliefBank,
    grounded: &crate::domain::GroundedGraph,
    problem: &MaxSatProblem,
    mismatches: &mut Vec<Mismatch>,
) {
    let n = problem.num_vars();
    let values: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();

    // clause layout: one unit clause per belief (bank order), then one
    // binary clause per grounded constraint (input order)
    let n_beliefs = bank.len();
    let n_constraints = grounded.constraints().len();
    if problem.clauses().len() != n_beliefs + n_constraints {
        mismatches.push(Mismatch {
            seed,
            check: "clause_counts".into(),
            detail: format!(
                "{} clauses for {} beliefs + {} constraints",
                problem.clauses().len(),
                n_beliefs,
                n_constraints
            ),
            wcnf: problem.to_wcnf(),
        });
        return;
    }

    let falsified: Vec<bool> = problem
        .clauses()
        .iter()
        .map(|c| !c.literals.iter().any(|l| values[l.var] == l.positive))
        .collect();

    // rebuild a full-coverage bank from the assignment
    let mut assigned = BeliefBank::for_entity(grounded.entity());
    for (i, id) in problem.variables().iter().enumerate() {
        let statement = grounded
            .statement(id)
            .cloned()
            .expect("problem variable missing from grounded graph");
        assigned
            .upsert(
                Belief::new(statement, Label::from_bool(values[i]), 0.5, Provenance::RawModel)
                    .unwrap(),
            )
            .unwrap();
    }

    // falsified unit clause <=> assignment disagrees with the raw belief
    for (i, belief) in bank.beliefs().enumerate() {
        let var = problem.var_of(belief.id()).unwrap();
        let disagrees = Label::from_bool(values[var]) != belief.label;
        if falsified[i] != disagrees {
            mismatches.push(Mismatch {
                seed,
                check: "belief_clause_agreement".into(),
                detail: format!("belief {} falsified={} disagrees={}", belief.id(), falsified[i], disagrees),
                wcnf: problem.to_wcnf(),
            });
            return;
        }
    }

    // falsified binary clause <=> constraint violated under metrics
    let report = metrics::consistency(&assigned, grounded.constraints());
    let violated: Vec<bool> = {
        let mut v = vec![false; n_constraints];
        for &i in &report.violated_constraints {
            v[i] = true;
        }
        v
    };
    for i in 0..n_constraints {
        if falsified[n_beliefs + i] != violated[i] {
            mismatches.push(Mismatch {
                seed,
                check: "constraint_clause_agreement".into(),
                detail: format!(
                    "constraint {} falsified={} violated={}",
                    grounded.constraints()[i].describe(),
                    falsified[n_beliefs + i],
                    violated[i]
                ),
                wcnf: problem.to_wcnf(),
            });
            return;
        }
    }
}
