//! Weighted walk local search: the scalable substitute for the exact
//! solver on large grounded problems.
//!
//! Starts from the belief-literal initialization, then repeatedly picks
//! a falsified clause (weighted by clause weight) and flips one of its
//! variables: a random one with probability `WALK_NOISE`, otherwise the
//! greedy choice minimizing the resulting cost. Deterministic given the
//! seed; returns the best assignment seen within the flip budget.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

use super::{belief_initialization, Assignment, MaxSatProblem};

const WALK_NOISE: f64 = 0.2;

pub fn solve_local(problem: &MaxSatProblem, seed: u64, budget: u64) -> Result<Assignment> {
    if budget == 0 {
        return Err(Error::Config("local search flip budget must be positive".into()));
    }
    if problem.num_vars() == 0 {
        return Ok(Assignment {
            values: Default::default(),
            cost: 0.0,
            optimal: false,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = Walk::new(problem);
    let mut best_values = state.values.clone();
    let mut best_score = state.score();
    for _ in 0..budget {
        if state.falsified.is_empty() {
            break;
        }
        let clause = state.pick_falsified(&mut rng);
        let lits = &problem.clauses()[clause].literals;
        let var = if rng.random_bool(WALK_NOISE) {
            lits[rng.random_range(0..lits.len())].var
        } else {
            // greedy: flip the variable minimizing the resulting cost
            let mut best_var = lits[0].var;
            let mut best_delta = f64::INFINITY;
            for lit in lits {
                let delta = state.flip_delta(lit.var);
                if delta < best_delta {
                    best_delta = delta;
                    best_var = lit.var;
                }
            }
            best_var
        };
        state.flip(var);
        let score = state.score();
        if score < best_score - 1e-12 {
            best_score = score;
            best_values.copy_from_slice(&state.values);
        }
    }
    if problem.cost_of(&best_values).is_none() {
        return Err(Error::Data("hard clauses unsatisfied after local search".into()));
    }
    Ok(Assignment::from_values(problem, &best_values, false))
}

struct Walk<'p> {
    problem: &'p MaxSatProblem,
    incident: Vec<Vec<usize>>,
    /// Effective weight per clause; hard clauses count more than all
    /// soft weight combined.
    eff_weight: Vec<f64>,
    values: Vec<bool>,
    n_true: Vec<u32>,
    falsified: Vec<usize>,
    falsified_pos: Vec<Option<usize>>,
    cost: f64,
}

impl<'p> Walk<'p> {
    fn new(problem: &'p MaxSatProblem) -> Self {
        let n = problem.num_vars();
        let mut incident = vec![Vec::new(); n];
        let total_soft: f64 = problem
            .clauses()
            .iter()
            .filter_map(|c| c.weight.soft())
            .sum();
        let eff_weight: Vec<f64> = problem
            .clauses()
            .iter()
            .map(|c| c.weight.soft().unwrap_or(total_soft + 1.0))
            .collect();
        for (i, c) in problem.clauses().iter().enumerate() {
            for lit in &c.literals {
                incident[lit.var].push(i);
            }
        }
        let values = belief_initialization(problem);
        let mut walk = Walk {
            problem,
            incident,
            eff_weight,
            values,
            n_true: vec![0; problem.clauses().len()],
            falsified: Vec::new(),
            falsified_pos: vec![None; problem.clauses().len()],
            cost: 0.0,
        };
        for (i, c) in problem.clauses().iter().enumerate() {
            walk.n_true[i] = c
                .literals
                .iter()
                .filter(|l| walk.values[l.var] == l.positive)
                .count() as u32;
            if walk.n_true[i] == 0 {
                walk.mark_falsified(i);
            }
        }
        walk
    }

    fn score(&self) -> f64 {
        self.cost
    }

    fn mark_falsified(&mut self, clause: usize) {
        self.falsified_pos[clause] = Some(self.falsified.len());
        self.falsified.push(clause);
        self.cost += self.eff_weight[clause];
    }

    fn mark_satisfied(&mut self, clause: usize) {
        let pos = self.falsified_pos[clause].take().unwrap();
        let last = *self.falsified.last().unwrap();
        self.falsified.swap_remove(pos);
        if last != clause {
            self.falsified_pos[last] = Some(pos);
        }
        self.cost -= self.eff_weight[clause];
    }

    /// Weighted sample from the falsified clauses.
    fn pick_falsified(&self, rng: &mut ChaCha8Rng) -> usize {
        let total: f64 = self.falsified.iter().map(|&c| self.eff_weight[c]).sum();
        let mut target = rng.random_range(0.0..total);
        for &c in &self.falsified {
            target -= self.eff_weight[c];
            if target < 0.0 {
                return c;
            }
        }
        *self.falsified.last().unwrap()
    }

    /// Cost change from flipping `var`, without flipping.
    fn flip_delta(&self, var: usize) -> f64 {
        let mut delta = 0.0;
        let value = self.values[var];
        for &ci in &self.incident[var] {
            let lit = self.problem.clauses()[ci]
                .literals
                .iter()
                .find(|l| l.var == var)
                .unwrap();
            if lit.positive == value {
                // currently satisfying; flipping may falsify
                if self.n_true[ci] == 1 {
                    delta += self.eff_weight[ci];
                }
            } else if self.n_true[ci] == 0 {
                delta -= self.eff_weight[ci];
            }
        }
        delta
    }

    fn flip(&mut self, var: usize) {
        let value = self.values[var];
        for i in 0..self.incident[var].len() {
            let ci = self.incident[var][i];
            let lit = self.problem.clauses()[ci]
                .literals
                .iter()
                .find(|l| l.var == var)
                .unwrap();
            if lit.positive == value {
                self.n_true[ci] -= 1;
                if self.n_true[ci] == 0 {
                    self.mark_falsified(ci);
                }
            } else {
                if self.n_true[ci] == 0 {
                    self.mark_satisfied(ci);
                }
                self.n_true[ci] += 1;
            }
        }
        self.values[var] = !value;
    }
}
