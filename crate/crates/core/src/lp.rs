//! Small linear programs over the unit box `β ∈ [-1, 1]^n`.
//!
//! Every LP this crate solves (membership, emptiness, support points of
//! constrained zonotopes) has that shape, so the wrapper only exposes ranged
//! rows `lo ≤ a·β ≤ hi` on top of `microlp`.

use microlp::{ComparisonOp, OptimizationDirection, Problem};

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum LpOutcome {
    Infeasible,
    Optimal { objective: f64, point: Vec<f64> },
}

#[derive(Debug, Clone)]
pub(crate) struct BoxLp {
    vars: usize,
    rows: Vec<(Vec<f64>, f64, f64)>,
}

impl BoxLp {
    pub(crate) fn new(vars: usize) -> Self {
        Self { vars, rows: Vec::new() }
    }

    /// Adds `lo ≤ coeffs·β ≤ hi`.
    pub(crate) fn add_row(&mut self, coeffs: Vec<f64>, lo: f64, hi: f64) {
        debug_assert_eq!(coeffs.len(), self.vars);
        self.rows.push((coeffs, lo, hi));
    }

    pub(crate) fn feasible(&self) -> Result<bool, String> {
        let objective = vec![0.0; self.vars];
        Ok(matches!(self.solve(&objective)?, LpOutcome::Optimal { .. }))
    }

    /// Maximizes `objective·β`.
    pub(crate) fn maximize(&self, objective: &[f64]) -> Result<LpOutcome, String> {
        self.solve(objective)
    }

    fn solve(&self, objective: &[f64]) -> Result<LpOutcome, String> {
        // Rows with no nonzero coefficient are decided without the solver.
        for (coeffs, lo, hi) in &self.rows {
            if coeffs.iter().all(|c| *c == 0.0) && (*lo > 0.0 || *hi < 0.0) {
                return Ok(LpOutcome::Infeasible);
            }
        }
        if self.vars == 0 {
            return Ok(LpOutcome::Optimal {
                objective: 0.0,
                point: Vec::new(),
            });
        }
        let mut problem = Problem::new(OptimizationDirection::Maximize);
        let vars: Vec<_> = objective.iter().map(|c| problem.add_var(*c, (-1.0, 1.0))).collect();
        for (coeffs, lo, hi) in &self.rows {
            let terms: Vec<_> = coeffs
                .iter()
                .zip(&vars)
                .filter(|(c, _)| **c != 0.0)
                .map(|(c, v)| (*v, *c))
                .collect();
            if terms.is_empty() {
                continue;
            }
            if lo == hi {
                problem.add_constraint(&terms[..], ComparisonOp::Eq, *lo);
            } else {
                if lo.is_finite() {
                    problem.add_constraint(&terms[..], ComparisonOp::Ge, *lo);
                }
                if hi.is_finite() {
                    problem.add_constraint(&terms[..], ComparisonOp::Le, *hi);
                }
            }
        }
        match problem.solve() {
            Ok(outcome) => match outcome.into_solution() {
                Ok(solution) => {
                    let point = vars.iter().map(|v| solution.var_value(*v)).collect();
                    Ok(LpOutcome::Optimal {
                        objective: solution.objective(),
                        point,
                    })
                }
                Err(_) => Err("linear program interrupted before a solution".to_string()),
            },
            Err(microlp::Error::Infeasible) => Ok(LpOutcome::Infeasible),
            Err(e) => Err(e.to_string()),
        }
    }
}
