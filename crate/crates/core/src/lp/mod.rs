//! Deterministic linear programming toolkit.
//!
//! The solvers in this crate need exact duals, vertex solutions, and
//! bit-reproducible runs, so the engine is a bounded-variable revised simplex
//! written here rather than an external solver. Problems are stated in a
//! small row-oriented form and verified post hoc through [`verify_solution`],
//! which checks primal feasibility, dual feasibility, complementary
//! slackness, and strong duality from first principles.

pub mod direct;
pub mod lu;
pub mod simplex;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    /// Sparse coefficients as (variable index, value).
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub maximize: bool,
    pub objective: Vec<f64>,
    /// Per-variable (lower, upper); infinities allowed.
    pub bounds: Vec<(f64, f64)>,
    pub constraints: Vec<Constraint>,
}

impl LinearProgram {
    /// A problem over `n` variables, all starting with bounds [0, +inf).
    pub fn new(n: usize, maximize: bool) -> LinearProgram {
        LinearProgram {
            maximize,
            objective: vec![0.0; n],
            bounds: vec![(0.0, f64::INFINITY); n],
            constraints: Vec::new(),
        }
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, sense: Sense, rhs: f64) {
        self.constraints.push(Constraint { coeffs, sense, rhs });
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_vars();
        if self.bounds.len() != n {
            return Err(Error::Lp(format!(
                "{} bounds for {} variables",
                self.bounds.len(),
                n
            )));
        }
        for (j, &(lo, hi)) in self.bounds.iter().enumerate() {
            if lo.is_nan() || hi.is_nan() || lo > hi {
                return Err(Error::Lp(format!("variable {j} has bounds [{lo}, {hi}]")));
            }
        }
        for (j, c) in self.objective.iter().enumerate() {
            if !c.is_finite() {
                return Err(Error::Lp(format!("objective[{j}] = {c}")));
            }
        }
        for (i, row) in self.constraints.iter().enumerate() {
            if !row.rhs.is_finite() {
                return Err(Error::Lp(format!("row {i} rhs = {}", row.rhs)));
            }
            for &(j, v) in &row.coeffs {
                if j >= n {
                    return Err(Error::Lp(format!("row {i} references variable {j} of {n}")));
                }
                if !v.is_finite() {
                    return Err(Error::Lp(format!("row {i} coefficient on {j} = {v}")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Objective in the problem's own orientation; NaN unless optimal.
    pub objective: f64,
    pub x: Vec<f64>,
    /// Marginal change of the optimal objective per unit of row rhs.
    pub row_duals: Vec<f64>,
    /// c_j minus the dual prices of column j, in the problem's orientation.
    pub reduced_costs: Vec<f64>,
    pub iterations: usize,
}

/// Independent optimality certificate for a solved LP.
///
/// Rebuilds everything from the problem data: feasibility of `x`, dual sign
/// conditions, complementary slackness, and equality of the primal objective
/// with the Lagrangian dual bound. Any violation is reported as an error.
pub fn verify_solution(lp: &LinearProgram, sol: &LpSolution, tol: f64) -> Result<()> {
    if sol.status != LpStatus::Optimal {
        return Err(Error::Lp("certificate requires an optimal solution".to_string()));
    }
    let n = lp.n_vars();
    if sol.x.len() != n || sol.row_duals.len() != lp.constraints.len() {
        return Err(Error::Lp("solution shape mismatch".to_string()));
    }
    for (j, &xj) in sol.x.iter().enumerate() {
        let (lo, hi) = lp.bounds[j];
        if xj < lo - tol * (1.0 + lo.abs()) || xj > hi + tol * (1.0 + hi.abs()) {
            return Err(Error::Lp(format!("x[{j}] = {xj} outside [{lo}, {hi}]")));
        }
    }
    // Recompute reduced costs from the reported duals.
    let mut rc = lp.objective.clone();
    for (i, row) in lp.constraints.iter().enumerate() {
        let y = sol.row_duals[i];
        if y != 0.0 {
            for &(j, v) in &row.coeffs {
                rc[j] -= y * v;
            }
        }
    }
    let obj: f64 = lp.objective.iter().zip(&sol.x).map(|(c, x)| c * x).sum();
    if (obj - sol.objective).abs() > tol * (1.0 + obj.abs()) {
        return Err(Error::Lp(format!(
            "reported objective {} but c'x = {obj}",
            sol.objective
        )));
    }

    let mut dual_obj = 0.0;
    for (i, row) in lp.constraints.iter().enumerate() {
        // Row scale counts the magnitudes of the summands, not the cancelled
        // total: a row whose terms are large and nearly opposite cannot be
        // satisfied more tightly than those terms round.
        let mut lhs = 0.0;
        let mut mag = 0.0;
        for &(j, v) in &row.coeffs {
            let t = v * sol.x[j];
            lhs += t;
            mag += t.abs();
        }
        let slack = lhs - row.rhs;
        let scale = 1.0 + row.rhs.abs() + mag;
        match row.sense {
            Sense::Le if slack > tol * scale => {
                return Err(Error::Lp(format!("row {i}: {lhs} > {}", row.rhs)));
            }
            Sense::Ge if slack < -tol * scale => {
                return Err(Error::Lp(format!("row {i}: {lhs} < {}", row.rhs)));
            }
            Sense::Eq if slack.abs() > tol * scale => {
                return Err(Error::Lp(format!("row {i}: {lhs} != {}", row.rhs)));
            }
            _ => {}
        }
        let y = sol.row_duals[i];
        // Dual sign: tightening a row cannot improve the objective.
        let sign_ok = match (row.sense, lp.maximize) {
            (Sense::Eq, _) => true,
            (Sense::Ge, false) | (Sense::Le, true) => y >= -tol * (1.0 + y.abs()),
            (Sense::Ge, true) | (Sense::Le, false) => y <= tol * (1.0 + y.abs()),
        };
        if !sign_ok {
            return Err(Error::Lp(format!("row {i} dual {y} has the wrong sign")));
        }
        if y.abs() > tol * scale && slack.abs() > tol * scale {
            return Err(Error::Lp(format!(
                "row {i} has dual {y} but slack {slack}"
            )));
        }
        dual_obj += y * row.rhs;
    }

    for j in 0..n {
        let (lo, hi) = lp.bounds[j];
        let d = rc[j];
        let scale = tol * (1.0 + d.abs());
        let at_lo = lo.is_finite() && (sol.x[j] - lo).abs() <= tol * (1.0 + lo.abs());
        let at_hi = hi.is_finite() && (sol.x[j] - hi).abs() <= tol * (1.0 + hi.abs());
        // rc is the objective slope along x_j; at optimality it may only push
        // into a bound the variable already sits on.
        let ok = if lp.maximize {
            (d <= scale || at_hi) && (d >= -scale || at_lo)
        } else {
            (d <= scale || at_lo) && (d >= -scale || at_hi)
        };
        if !ok {
            return Err(Error::Lp(format!(
                "variable {j}: reduced cost {d} with x = {} in [{lo}, {hi}]",
                sol.x[j]
            )));
        }
        // Contribution of the box constraints to the dual objective.
        let pick_lo = if lp.maximize { d < 0.0 } else { d > 0.0 };
        if d.abs() > scale {
            dual_obj += d * if pick_lo { lo } else { hi };
        } else if at_lo {
            dual_obj += d * lo;
        } else if at_hi {
            dual_obj += d * hi;
        } else {
            dual_obj += d * sol.x[j];
        }
    }
    if (dual_obj - obj).abs() > tol.sqrt() * (1.0 + obj.abs()) {
        return Err(Error::Lp(format!(
            "strong duality gap: primal {obj}, dual {dual_obj}"
        )));
    }
    Ok(())
}
