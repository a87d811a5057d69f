//! Exact weighted-MaxSAT by branch and bound.
//!
//! Depth-first search over variables in descending total incident
//! weight, with an admissible lower bound (weight of clauses already
//! fully falsified) and unit propagation on clauses whose violation
//! would exceed the incumbent. Ties between equal-cost assignments break
//! toward the one agreeing with more unit-clause (belief) literals, then
//! toward the lexicographically smallest value vector in ascending
//! statement-id order (false before true).

use crate::error::{Error, Result};

use super::{belief_initialization, Assignment, ClauseWeight, MaxSatProblem};

/// Default variable cap for the exact solver.
pub const EXACT_VAR_CAP: usize = 40;

/// Cost comparisons treat differences below this as ties.
const COST_EPS: f64 = 1e-9;

pub fn solve_exact(problem: &MaxSatProblem) -> Result<Assignment> {
    solve_exact_with(problem, EXACT_VAR_CAP)
}

pub fn solve_exact_with(problem: &MaxSatProblem, var_cap: usize) -> Result<Assignment> {
    if problem.num_vars() > var_cap {
        return Err(Error::ExactCap {
            vars: problem.num_vars(),
            cap: var_cap,
        });
    }
    if problem.num_vars() == 0 {
        return Ok(Assignment {
            values: Default::default(),
            cost: 0.0,
            optimal: true,
        });
    }
    let mut search = Search::new(problem);
    search.seed_incumbent(belief_initialization(problem));
    search.run();
    let best = search
        .best
        .ok_or_else(|| Error::Data("hard clauses are unsatisfiable".into()))?;
    Ok(Assignment::from_values(problem, &best.values, true))
}

struct Incumbent {
    values: Vec<bool>,
    cost: f64,
    agreement: usize,
}

struct Search<'p> {
    problem: &'p MaxSatProblem,
    /// Clause indices incident to each variable.
    incident: Vec<Vec<usize>>,
    /// Static branch order: descending total incident weight.
    order: Vec<usize>,
    /// Preferred first value per variable (its unit-clause sign, if any).
    preferred: Vec<bool>,
    values: Vec<Option<bool>>,
    n_true: Vec<u32>,
    n_unassigned: Vec<u32>,
    falsified_cost: f64,
    hard_falsified: u32,
    best: Option<Incumbent>,
}

impl<'p> Search<'p> {
    fn new(problem: &'p MaxSatProblem) -> Self {
        let n = problem.num_vars();
        let mut incident = vec![Vec::new(); n];
        let mut weight_sum = vec![0.0f64; n];
        let mut total_soft = 0.0;
        for c in problem.clauses() {
            if let ClauseWeight::Soft(w) = c.weight {
                total_soft += w;
            }
        }
        for (i, c) in problem.clauses().iter().enumerate() {
            let w = c.weight.soft().unwrap_or(total_soft + 1.0);
            for lit in &c.literals {
                incident[lit.var].push(i);
                weight_sum[lit.var] += w;
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            weight_sum[b]
                .partial_cmp(&weight_sum[a])
                .unwrap()
                .then(a.cmp(&b))
        });
        let preferred = belief_initialization(problem);
        Search {
            problem,
            incident,
            order,
            preferred,
            values: vec![None; n],
            n_true: vec![0; problem.clauses().len()],
            n_unassigned: problem
                .clauses()
                .iter()
                .map(|c| c.literals.len() as u32)
                .collect(),
            falsified_cost: 0.0,
            hard_falsified: 0,
            best: None,
        }
    }

    fn seed_incumbent(&mut self, values: Vec<bool>) {
        if let Some(cost) = self.problem.cost_of(&values) {
            let agreement = self.problem.unit_agreement(&values);
            self.best = Some(Incumbent {
                values,
                cost,
                agreement,
            });
        }
    }

    fn assign(&mut self, var: usize, value: bool) {
        self.values[var] = Some(value);
        for &ci in &self.incident[var] {
            let clause = &self.problem.clauses()[ci];
            let lit = clause.literals.iter().find(|l| l.var == var).unwrap();
            self.n_unassigned[ci] -= 1;
            if lit.positive == value {
                self.n_true[ci] += 1;
            } else if self.n_true[ci] == 0 && self.n_unassigned[ci] == 0 {
                match clause.weight {
                    ClauseWeight::Soft(w) => self.falsified_cost += w,
                    ClauseWeight::Hard => self.hard_falsified += 1,
                }
            }
        }
    }

    fn unassign(&mut self, var: usize) {
        let value = self.values[var].unwrap();
        for &ci in &self.incident[var] {
            let clause = &self.problem.clauses()[ci];
            let lit = clause.literals.iter().find(|l| l.var == var).unwrap();
            if lit.positive == value {
                self.n_true[ci] -= 1;
            } else if self.n_true[ci] == 0 && self.n_unassigned[ci] == 0 {
                match clause.weight {
                    ClauseWeight::Soft(w) => self.falsified_cost -= w,
                    ClauseWeight::Hard => self.hard_falsified -= 1,
                }
            }
            self.n_unassigned[ci] += 1;
        }
        self.values[var] = None;
    }

    /// Lower bound exceeds anything that could still tie the incumbent.
    fn pruned(&self) -> bool {
        if self.hard_falsified > 0 {
            return true;
        }
        match &self.best {
            Some(best) => self.falsified_cost > best.cost + COST_EPS,
            None => false,
        }
    }

    /// Force literals of clauses that can no longer afford to be
    /// falsified. Returns assigned vars for undo, or None on prune.
    fn propagate(&mut self) -> Option<Vec<usize>> {
        let mut forced = Vec::new();
        loop {
            if self.pruned() {
                self.undo(&forced);
                return None;
            }
            let mut changed = false;
            for ci in 0..self.problem.clauses().len() {
                if self.n_true[ci] > 0 || self.n_unassigned[ci] != 1 {
                    continue;
                }
                let clause = &self.problem.clauses()[ci];
                let must_satisfy = match clause.weight {
                    ClauseWeight::Hard => true,
                    ClauseWeight::Soft(w) => match &self.best {
                        Some(best) => self.falsified_cost + w > best.cost + COST_EPS,
                        None => false,
                    },
                };
                if !must_satisfy {
                    continue;
                }
                let lit = clause
                    .literals
                    .iter()
                    .find(|l| self.values[l.var].is_none())
                    .unwrap();
                let (var, value) = (lit.var, lit.positive);
                self.assign(var, value);
                forced.push(var);
                changed = true;
                if self.pruned() {
                    self.undo(&forced);
                    return None;
                }
            }
            if !changed {
                return Some(forced);
            }
        }
    }

    fn undo(&mut self, vars: &[usize]) {
        for &v in vars.iter().rev() {
            self.unassign(v);
        }
    }

    fn leaf(&mut self) {
        let values: Vec<bool> = self.values.iter().map(|v| v.unwrap()).collect();
        let Some(cost) = self.problem.cost_of(&values) else {
            return;
        };
        let agreement = self.problem.unit_agreement(&values);
        let replace = match &self.best {
            None => true,
            Some(best) => {
                if cost < best.cost - COST_EPS {
                    true
                } else if cost <= best.cost + COST_EPS {
                    // tie: more belief agreement, then lexicographically
                    // smaller value vector (false < true)
                    agreement > best.agreement
                        || (agreement == best.agreement && values < best.values)
                } else {
                    false
                }
            }
        };
        if replace {
            let cost = match &self.best {
                Some(best) => cost.min(best.cost),
                None => cost,
            };
            self.best = Some(Incumbent {
                values,
                cost,
                agreement,
            });
        }
    }

    fn run(&mut self) {
        self.dfs(0);
    }

    fn dfs(&mut self, depth: usize) {
        if self.pruned() {
            return;
        }
        let Some(forced) = self.propagate() else {
            return;
        };
        let next = self.order[depth..]
            .iter()
            .copied()
            .find(|&v| self.values[v].is_none());
        match next {
            None => self.leaf(),
            Some(var) => {
                let first = self.preferred[var];
                for value in [first, !first] {
                    self.assign(var, value);
                    self.dfs(depth + 1);
                    self.unassign(var);
                }
            }
        }
        self.undo(&forced);
    }
}
