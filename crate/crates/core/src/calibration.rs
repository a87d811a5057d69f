//! Weight calibration: a two-parameter sigmoid maps raw crowd-style
//! constraint scores in [0, 4] to penalties in (0, 1), and a grid search
//! fits the belief scaling lambda plus the per-kind multipliers by
//! maximizing post-solve true-class F1 on a calibration slice that is
//! disjoint from the evaluation entities.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{BeliefBank, ConstraintGraph, ConstraintKind, Label, StatementId};
use crate::error::{Error, Result};
use crate::metrics;
use crate::solver;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationParams {
    /// Sigmoid slope.
    pub a: f64,
    /// Sigmoid shift.
    pub b: f64,
    /// Scaling of belief weights against constraint weights.
    pub lambda: f64,
    /// Multiplier for backward implications, in [0, 1].
    pub backward_multiplier: f64,
    /// Multiplier for mutual-exclusivity halves.
    pub mutex_multiplier: f64,
}

impl CalibrationParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0) {
            return Err(Error::Config(format!(
                "lambda must be positive, got {}",
                self.lambda
            )));
        }
        if !(0.0..=1.0).contains(&self.backward_multiplier) {
            return Err(Error::Config(format!(
                "backward_multiplier {} outside [0, 1]",
                self.backward_multiplier
            )));
        }
        if self.mutex_multiplier < 0.0 {
            return Err(Error::Config(format!(
                "mutex_multiplier {} must be non-negative",
                self.mutex_multiplier
            )));
        }
        Ok(())
    }

    /// Encoding-time weight multiplier for a constraint kind.
    pub fn kind_multiplier(&self, kind: ConstraintKind) -> f64 {
        match kind {
            ConstraintKind::Forward => 1.0,
            ConstraintKind::Backward => self.backward_multiplier,
            ConstraintKind::MutexHalf => self.mutex_multiplier,
        }
    }

    /// Parameter tuple in grid order, used for deterministic tie-breaks.
    fn tuple(&self) -> [f64; 5] {
        [
            self.a,
            self.b,
            self.lambda,
            self.backward_multiplier,
            self.mutex_multiplier,
        ]
    }
}

impl Default for CalibrationParams {
    fn default() -> Self {
        CalibrationParams {
            a: 1.5,
            b: -3.0,
            lambda: 0.5,
            backward_multiplier: 0.25,
            mutex_multiplier: 1.0,
        }
    }
}

/// weight = sigmoid(a * raw + b). Monotone increasing in raw when a > 0.
pub fn calibrate_weight(raw_score: f64, a: f64, b: f64) -> Result<f64> {
    if !(0.0..=4.0).contains(&raw_score) || !raw_score.is_finite() {
        return Err(Error::Config(format!(
            "raw score {raw_score} outside [0, 4]"
        )));
    }
    Ok(1.0 / (1.0 + (-(a * raw_score + b)).exp()))
}

/// Copy of the graph with every constraint weighted through the sigmoid.
pub fn weight_graph(graph: &ConstraintGraph, params: &CalibrationParams) -> Result<ConstraintGraph> {
    params.validate()?;
    graph.with_weights(|c| calibrate_weight(c.raw_score, params.a, params.b))
}

/// Candidate values per parameter; the search is the full cross product.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSpec {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub lambda: Vec<f64>,
    pub backward_multiplier: Vec<f64>,
    pub mutex_multiplier: Vec<f64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            a: vec![0.5, 1.0, 1.5, 2.0],
            b: vec![-4.0, -3.0, -2.0, -1.0],
            lambda: vec![0.1, 0.25, 0.5, 1.0, 2.0],
            backward_multiplier: vec![0.1, 0.25, 0.5],
            mutex_multiplier: vec![0.5, 1.0, 2.0],
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, values) in [
            ("a", &self.a),
            ("b", &self.b),
            ("lambda", &self.lambda),
            ("backward_multiplier", &self.backward_multiplier),
            ("mutex_multiplier", &self.mutex_multiplier),
        ] {
            if values.is_empty() {
                return Err(Error::Config(format!("grid list `{name}` is empty")));
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::Config(format!("grid list `{name}` has non-finite values")));
            }
        }
        Ok(())
    }

    /// All candidate parameter combinations, in nested grid order.
    pub fn points(&self) -> Vec<CalibrationParams> {
        let mut out = Vec::new();
        for &a in &self.a {
            for &b in &self.b {
                for &lambda in &self.lambda {
                    for &bw in &self.backward_multiplier {
                        for &mx in &self.mutex_multiplier {
                            out.push(CalibrationParams {
                                a,
                                b,
                                lambda,
                                backward_multiplier: bw,
                                mutex_multiplier: mx,
                            });
                        }
                    }
                }
            }
        }
        out
    }
}

/// Per-entity raw banks, the unweighted graph, and gold labels for the
/// calibration slice.
#[derive(Debug, Clone)]
pub struct CalibrationData {
    pub banks: Vec<BeliefBank>,
    pub graph: ConstraintGraph,
    pub gold: BTreeMap<StatementId, Label>,
}

/// One evaluated grid point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridPoint {
    pub params: CalibrationParams,
    pub f1: f64,
    pub consistency: f64,
}

/// Post-solve objective for one candidate: macro-averaged F1 and
/// consistency across the calibration banks, after exact solving.
pub fn evaluate_candidate(
    params: &CalibrationParams,
    data: &CalibrationData,
    exact_cap: usize,
) -> Result<GridPoint> {
    params.validate()?;
    let weighted = weight_graph(&data.graph, params)?;
    let mut f1_sum = 0.0;
    let mut consistency_sum = 0.0;
    for bank in &data.banks {
        let entity = bank.entity().ok_or_else(|| {
            Error::Data("calibration banks must be scoped to an entity".into())
        })?;
        let grounded = weighted.instantiate(entity)?;
        let problem = solver::encode(bank, grounded.constraints(), params)?;
        let assignment = solver::solve_exact_with(&problem, exact_cap)?;
        let mut solved = bank.clone();
        solver::apply_assignment(&mut solved, &assignment)?;
        f1_sum += metrics::f1_true(&solved, &data.gold).f1;
        consistency_sum += metrics::consistency(&solved, grounded.constraints()).consistency;
    }
    let n = data.banks.len() as f64;
    Ok(GridPoint {
        params: params.clone(),
        f1: f1_sum / n,
        consistency: consistency_sum / n,
    })
}

/// Exhaustive grid search maximizing post-solve F1.
///
/// Ties break toward the smallest lambda, then the lexicographically
/// smallest parameter tuple. Returns the winner plus the full trace in
/// grid order.
pub fn grid_search(
    grid: &GridSpec,
    data: &CalibrationData,
    exact_cap: usize,
) -> Result<(CalibrationParams, Vec<GridPoint>)> {
    grid.validate()?;
    if data.banks.is_empty() {
        return Err(Error::Config("calibration slice is empty".into()));
    }
    let candidates = grid.points();
    let trace: Vec<GridPoint> = candidates
        .par_iter()
        .map(|params| evaluate_candidate(params, data, exact_cap))
        .collect::<Result<_>>()?;
    let mut best = &trace[0];
    for point in &trace[1..] {
        if better(point, best) {
            best = point;
        }
    }
    Ok((best.params.clone(), trace))
}

fn better(candidate: &GridPoint, incumbent: &GridPoint) -> bool {
    const EPS: f64 = 1e-12;
    if candidate.f1 > incumbent.f1 + EPS {
        return true;
    }
    if candidate.f1 < incumbent.f1 - EPS {
        return false;
    }
    if candidate.params.lambda != incumbent.params.lambda {
        return candidate.params.lambda < incumbent.params.lambda;
    }
    candidate
        .params
        .tuple()
        .iter()
        .zip(incumbent.params.tuple())
        .find_map(|(c, i)| {
            if *c < i {
                Some(true)
            } else if *c > i {
                Some(false)
            } else {
                None
            }
        })
        .unwrap_or(false)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_midpoint_and_monotonicity() {
        // a*raw + b = 0 at raw = 2 for (a, b) = (1, -2)
        assert!((calibrate_weight(2.0, 1.0, -2.0).unwrap() - 0.5).abs() < 1e-15);
        let w0 = calibrate_weight(0.0, 1.5, -3.0).unwrap();
        let w4 = calibrate_weight(4.0, 1.5, -3.0).unwrap();
        assert!(w4 > w0);
    }

    #[test]
    fn sigmoid_matches_closed_form_on_grid() {
        for raw in 0..=4 {
            let raw = raw as f64;
            let expected = 1.0 / (1.0 + (-(1.5 * raw - 3.0)).exp());
            let got = calibrate_weight(raw, 1.5, -3.0).unwrap();
            assert!((got - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn raw_score_out_of_range_rejected() {
        assert!(calibrate_weight(7.0, 1.0, 0.0).is_err());
        assert!(calibrate_weight(-0.1, 1.0, 0.0).is_err());
    }

    #[test]
    fn grid_points_cover_cross_product() {
        let grid = GridSpec::default();
        let expected = grid.a.len()
            * grid.b.len()
            * grid.lambda.len()
            * grid.backward_multiplier.len()
            * grid.mutex_multiplier.len();
        assert_eq!(grid.points().len(), expected);
    }

    #[test]
    fn params_validation() {
        let mut p = CalibrationParams::default();
        p.lambda = 0.0;
        assert!(p.validate().is_err());
        p = CalibrationParams::default();
        p.backward_multiplier = 1.5;
        assert!(p.validate().is_err());
    }
}
