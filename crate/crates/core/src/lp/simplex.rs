//! Bounded-variable revised simplex.
//!
//! Two-phase method with artificial columns only on rows whose slack cannot
//! absorb the initial residual. The basis inverse is kept as a sparse LU
//! factorization plus product-form eta updates, refactorized periodically.
//! Pricing is Dantzig with an automatic switch to Bland's rule after a run of
//! non-improving pivots, so degenerate problems terminate. All choices are
//! deterministic: equal candidates resolve to the lowest index.

use super::lu::{self, LuFactors};
use super::{LinearProgram, LpSolution, LpStatus, Sense};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct SimplexOptions {
    /// Pivot cap; 0 picks a limit scaled to the problem size.
    pub max_iter: usize,
    pub feas_tol: f64,
    pub dual_tol: f64,
    pub refactor_every: usize,
    /// Factorize the basis with the dense elimination instead of the
    /// sparsity-exploiting cascade. The direct-formulation route sets this so
    /// its cost tracks a conventional dense solver; decomposition masters
    /// leave it off.
    pub dense: bool,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions {
            max_iter: 0,
            feas_tol: 1e-8,
            dual_tol: 1e-9,
            refactor_every: 64,
            dense: false,
        }
    }
}

pub fn solve(lp: &LinearProgram, opts: &SimplexOptions) -> Result<LpSolution> {
    lp.validate()?;
    Solver::new(lp, opts).run()
}

const PIVOT_TOL: f64 = 1e-9;
const RATIO_TIE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarState {
    Basic,
    AtLower,
    AtUpper,
    /// Nonbasic free variable, parked at zero.
    FreeNb,
}

enum StepOutcome {
    Optimal,
    Unbounded,
    Continue,
}

struct Solver<'a> {
    lp: &'a LinearProgram,
    opts: SimplexOptions,
    m: usize,
    n_struct: usize,
    n_total: usize,
    /// Scaled columns for every variable (structural, slack, artificial).
    cols: Vec<Vec<(usize, f64)>>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    /// Phase-2 costs, minimization orientation.
    cost: Vec<f64>,
    b: Vec<f64>,
    row_scale: Vec<f64>,
    x: Vec<f64>,
    state: Vec<VarState>,
    basis: Vec<usize>,
    lu: Option<LuFactors>,
    /// Product-form updates since the last refactorization:
    /// (basis position, off-pivot entries of the ftran'd column, pivot value).
    etas: Vec<(usize, Vec<(usize, f64)>, f64)>,
    eta_nnz: usize,
    iterations: usize,
    max_iter: usize,
    /// Consecutive pivots without objective progress.
    stalled: usize,
    bland: bool,
    /// A refactorization had to repair a dependent basis; the final answer
    /// must then re-earn primal feasibility explicitly.
    repaired: bool,
}

impl<'a> Solver<'a> {
    fn new(lp: &'a LinearProgram, opts: &SimplexOptions) -> Solver<'a> {
        let m = lp.constraints.len();
        let n_struct = lp.n_vars();
        let mut row_scale = vec![1.0; m];
        for (i, row) in lp.constraints.iter().enumerate() {
            let mx = row.coeffs.iter().map(|&(_, v)| v.abs()).fold(0.0, f64::max);
            if mx > 0.0 {
                row_scale[i] = mx;
            }
        }
        let b: Vec<f64> = lp
            .constraints
            .iter()
            .enumerate()
            .map(|(i, row)| row.rhs / row_scale[i])
            .collect();

        // Structural columns, merged and scaled; then one slack per row.
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_struct + m];
        for (i, row) in lp.constraints.iter().enumerate() {
            for &(j, v) in &row.coeffs {
                if v != 0.0 {
                    cols[j].push((i, v / row_scale[i]));
                }
            }
        }
        for col in cols.iter_mut().take(n_struct) {
            col.sort_by_key(|&(r, _)| r);
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(col.len());
            for &(r, v) in col.iter() {
                match merged.last_mut() {
                    Some(last) if last.0 == r => last.1 += v,
                    _ => merged.push((r, v)),
                }
            }
            merged.retain(|&(_, v)| v != 0.0);
            *col = merged;
        }
        let mut lo = vec![0.0; n_struct + m];
        let mut hi = vec![0.0; n_struct + m];
        for j in 0..n_struct {
            lo[j] = lp.bounds[j].0;
            hi[j] = lp.bounds[j].1;
        }
        for (i, row) in lp.constraints.iter().enumerate() {
            let s = n_struct + i;
            cols[s].push((i, 1.0));
            let (slo, shi) = match row.sense {
                Sense::Le => (0.0, f64::INFINITY),
                Sense::Ge => (f64::NEG_INFINITY, 0.0),
                Sense::Eq => (0.0, 0.0),
            };
            lo[s] = slo;
            hi[s] = shi;
        }
        let mut cost = vec![0.0; n_struct + m];
        for j in 0..n_struct {
            cost[j] = if lp.maximize { -lp.objective[j] } else { lp.objective[j] };
        }

        let max_iter = if opts.max_iter > 0 { opts.max_iter } else { 20_000 + 60 * m };
        Solver {
            lp,
            opts: opts.clone(),
            m,
            n_struct,
            n_total: n_struct + m,
            cols,
            lo,
            hi,
            cost,
            b,
            row_scale,
            x: Vec::new(),
            state: Vec::new(),
            basis: Vec::new(),
            lu: None,
            etas: Vec::new(),
            eta_nnz: 0,
            iterations: 0,
            max_iter,
            stalled: 0,
            bland: false,
            repaired: false,
        }
    }

    fn run(mut self) -> Result<LpSolution> {
        let needs_phase1 = self.initialize();
        if needs_phase1 {
            self.refactorize()?;
            let phase1_cost: Vec<f64> =
                (0..self.n_total).map(|j| if j >= self.n_struct + self.m { 1.0 } else { 0.0 }).collect();
            match self.optimize(&phase1_cost)? {
                StepOutcome::Unbounded => {
                    return Err(Error::Lp("feasibility phase diverged".to_string()));
                }
                _ => {}
            }
            let infeas: f64 = (self.n_struct + self.m..self.n_total).map(|j| self.x[j].abs()).sum();
            let b_inf = self.b.iter().map(|v| v.abs()).fold(0.0, f64::max);
            if infeas > 1e-7 * (1.0 + b_inf) {
                return Ok(self.report(LpStatus::Infeasible));
            }
            // Freeze artificials at zero for the optimality phase.
            for j in self.n_struct + self.m..self.n_total {
                self.hi[j] = 0.0;
                if self.state[j] != VarState::Basic {
                    self.x[j] = 0.0;
                    self.state[j] = VarState::AtLower;
                }
            }
        }
        self.refactorize()?;
        let cost = self.cost.clone();
        match self.optimize(&cost)? {
            StepOutcome::Unbounded => Ok(self.report(LpStatus::Unbounded)),
            _ => {
                self.refactorize()?;
                Ok(self.report(LpStatus::Optimal))
            }
        }
    }

    /// Chooses the starting point and basis; returns whether any artificial
    /// column carries residual that phase 1 must clear.
    fn initialize(&mut self) -> bool {
        let n = self.n_total;
        self.x = vec![0.0; n];
        self.state = vec![VarState::AtLower; n];
        for j in 0..n {
            let (lo, hi) = (self.lo[j], self.hi[j]);
            if lo.is_finite() {
                self.x[j] = lo;
                self.state[j] = VarState::AtLower;
            } else if hi.is_finite() {
                self.x[j] = hi;
                self.state[j] = VarState::AtUpper;
            } else {
                self.x[j] = 0.0;
                self.state[j] = VarState::FreeNb;
            }
        }
        let mut residual = self.b.clone();
        for j in 0..self.n_struct {
            if self.x[j] != 0.0 {
                for &(i, v) in &self.cols[j] {
                    residual[i] -= v * self.x[j];
                }
            }
        }
        self.basis = Vec::with_capacity(self.m);
        let mut any_artificial = false;
        for i in 0..self.m {
            let s = self.n_struct + i;
            let r = residual[i];
            if r >= self.lo[s] && r <= self.hi[s] {
                self.basis.push(s);
                self.x[s] = r;
                self.state[s] = VarState::Basic;
            } else {
                let a = self.cols.len();
                let sigma = if r >= 0.0 { 1.0 } else { -1.0 };
                self.cols.push(vec![(i, sigma)]);
                self.lo.push(0.0);
                self.hi.push(f64::INFINITY);
                self.cost.push(0.0);
                self.x.push(r.abs());
                self.state.push(VarState::Basic);
                self.basis.push(a);
                any_artificial = true;
            }
        }
        self.n_total = self.cols.len();
        any_artificial
    }

    fn refactorize(&mut self) -> Result<()> {
        let basis_cols: Vec<Vec<(usize, f64)>> =
            self.basis.iter().map(|&j| self.cols[j].clone()).collect();
        let (factors, swaps) = if self.opts.dense {
            lu::factorize_dense(self.m, &basis_cols)
        } else {
            match lu::factorize(self.m, &basis_cols) {
                Ok(f) => (f, Vec::new()),
                Err(_) => {
                    // The working basis went numerically dependent: a pivot
                    // that looked fine through the eta chain was a phantom.
                    // Repair instead of giving up: swap each unpivotable
                    // column for the slack of a row left uncovered and park
                    // the displaced variable at a bound. The factors returned
                    // already describe the patched basis.
                    let (f, swaps) = lu::factorize_repair(self.m, &basis_cols);
                    if swaps.is_empty() {
                        return Err(Error::Lp("singular basis".to_string()));
                    }
                    (f, swaps)
                }
            }
        };
        if !swaps.is_empty() {
            self.repaired = true;
            for &(pos, row) in &swaps {
                let out = self.basis[pos];
                let slack = self.n_struct + row;
                if self.state[slack] == VarState::Basic {
                    // A basic slack would have covered its own row; this
                    // cannot be patched consistently.
                    return Err(Error::Lp("singular basis".to_string()));
                }
                self.basis[pos] = slack;
                self.state[slack] = VarState::Basic;
                self.state[out] = if self.lo[out].is_finite() {
                    self.x[out] = self.lo[out];
                    VarState::AtLower
                } else if self.hi[out].is_finite() {
                    self.x[out] = self.hi[out];
                    VarState::AtUpper
                } else {
                    self.x[out] = 0.0;
                    VarState::FreeNb
                };
            }
        }
        self.lu = Some(factors);
        self.etas.clear();
        self.eta_nnz = 0;
        // Recompute basic values from scratch to shed accumulated drift.
        let mut v = self.b.clone();
        for j in 0..self.n_total {
            if self.state[j] != VarState::Basic && self.x[j] != 0.0 {
                for &(i, a) in &self.cols[j] {
                    v[i] -= a * self.x[j];
                }
            }
        }
        let xb = self.lu.as_ref().unwrap().ftran(&v);
        for (pos, &j) in self.basis.iter().enumerate() {
            self.x[j] = xb[pos];
        }
        Ok(())
    }

    /// Worst relative bound violation over the basic variables.
    fn primal_violation(&self) -> f64 {
        self.basis
            .iter()
            .map(|&j| {
                let below = self.lo[j] - self.x[j];
                let above = self.x[j] - self.hi[j];
                let scale = 1.0 + self.x[j].abs();
                below.max(above).max(0.0) / scale
            })
            .fold(0.0, f64::max)
    }

    fn ftran(&self, col: &[(usize, f64)]) -> Vec<f64> {
        let mut v = vec![0.0; self.m];
        for &(i, a) in col {
            v[i] = a;
        }
        let mut out = self.lu.as_ref().unwrap().ftran(&v);
        for (r, entries, wr) in &self.etas {
            let zr = out[*r] / wr;
            out[*r] = zr;
            if zr != 0.0 {
                for &(i, wi) in entries {
                    out[i] -= wi * zr;
                }
            }
        }
        out
    }

    fn btran_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut cb: Vec<f64> = self.basis.iter().map(|&j| cost[j]).collect();
        for (r, entries, wr) in self.etas.iter().rev() {
            let mut acc = cb[*r];
            for &(i, wi) in entries {
                acc -= wi * cb[i];
            }
            cb[*r] = acc / wr;
        }
        self.lu.as_ref().unwrap().btran(&cb)
    }

    /// Runs pivots until the current cost vector is optimized.
    fn optimize(&mut self, cost: &[f64]) -> Result<StepOutcome> {
        self.stalled = 0;
        self.bland = false;
        let mut cleanups = 0;
        loop {
            if self.iterations >= self.max_iter {
                return Err(Error::Stall {
                    iterations: self.iterations,
                    detail: "simplex pivot limit reached".to_string(),
                });
            }
            if self.etas.len() >= self.opts.refactor_every
                || self.eta_nnz > 2 * self.m + 1000
            {
                self.refactorize()?;
            }
            let y = self.btran_costs(cost);
            match self.choose_entering(cost, &y) {
                None => {
                    // Confirm on a fresh factorization before declaring victory.
                    if !self.etas.is_empty() && cleanups < 3 {
                        cleanups += 1;
                        self.refactorize()?;
                        continue;
                    }
                    // Pricing only certifies the dual side; when the basis
                    // was ever repaired, the primal values were perturbed by
                    // force and must be audited before declaring optimality.
                    if self.repaired && self.primal_violation() > 1e-6 {
                        return Err(Error::Lp(
                            "primal infeasible after basis repair".to_string(),
                        ));
                    }
                    return Ok(StepOutcome::Optimal);
                }
                Some((q, dir, viol)) => {
                    self.iterations += 1;
                    if let StepOutcome::Unbounded = self.pivot(q, dir, viol)? {
                        return Ok(StepOutcome::Unbounded);
                    }
                }
            }
        }
    }

    /// Picks the entering variable: Dantzig by default, Bland when stalled.
    fn choose_entering(&self, cost: &[f64], y: &[f64]) -> Option<(usize, f64, f64)> {
        let c_inf = cost.iter().map(|c| c.abs()).fold(0.0, f64::max);
        let dtol = self.opts.dual_tol * (1.0 + c_inf);
        let mut best: Option<(usize, f64, f64)> = None;
        for j in 0..self.n_total {
            if self.state[j] == VarState::Basic {
                continue;
            }
            if self.state[j] != VarState::FreeNb && self.hi[j] - self.lo[j] <= 0.0 {
                continue;
            }
            let mut d = cost[j];
            for &(i, v) in &self.cols[j] {
                d -= y[i] * v;
            }
            let (viol, dir) = match self.state[j] {
                VarState::AtLower => (-d, 1.0),
                VarState::AtUpper => (d, -1.0),
                VarState::FreeNb => (d.abs(), if d < 0.0 { 1.0 } else { -1.0 }),
                VarState::Basic => unreachable!(),
            };
            if viol <= dtol {
                continue;
            }
            if self.bland {
                return Some((j, dir, viol));
            }
            if best.map_or(true, |(_, _, bv)| viol > bv) {
                best = Some((j, dir, viol));
            }
        }
        best
    }

    fn pivot(&mut self, q: usize, dir: f64, viol: f64) -> Result<StepOutcome> {
        let w = self.ftran(&self.cols[q]);
        // Step limit from the entering variable's own range.
        let range = self.hi[q] - self.lo[q];
        let mut t_max = if range.is_finite() { range } else { f64::INFINITY };

        // Two-pass ratio test. Pass 1: the largest step each blocker
        // tolerates when allowed to overshoot its bound by the feasibility
        // tolerance. Insisting on the exact minimum ratio instead would
        // regularly force degenerate pivots on near-parallel rows whose
        // pivot element is numerically worthless, and a chain of those
        // drives the basis singular.
        for pos in 0..self.m {
            let wv = w[pos];
            if wv.abs() <= PIVOT_TOL {
                continue;
            }
            let j = self.basis[pos];
            let delta = -dir * wv;
            let expanded = if delta > 0.0 {
                if self.hi[j].is_finite() {
                    let give = self.opts.feas_tol * (1.0 + self.hi[j].abs());
                    (self.hi[j] - self.x[j] + give) / delta
                } else {
                    continue;
                }
            } else if self.lo[j].is_finite() {
                let give = self.opts.feas_tol * (1.0 + self.lo[j].abs());
                (self.x[j] - self.lo[j] + give) / -delta
            } else {
                continue;
            };
            t_max = t_max.min(expanded.max(0.0));
        }
        if t_max.is_infinite() {
            // Confirm on fresh factors; accumulated etas can hide a blocker.
            if !self.etas.is_empty() {
                self.refactorize()?;
                return Ok(StepOutcome::Continue);
            }
            return Ok(StepOutcome::Unbounded);
        }

        // Pass 2: among blockers whose exact ratio fits under the expanded
        // step, take the numerically strongest pivot element.
        let mut leaving: Option<(usize, f64, f64, f64)> = None; // (pos, |w|, bound, ratio)
        for pos in 0..self.m {
            let wv = w[pos];
            if wv.abs() <= PIVOT_TOL {
                continue;
            }
            let j = self.basis[pos];
            let delta = -dir * wv;
            let (ratio, bound) = if delta > 0.0 {
                if self.hi[j].is_finite() {
                    (((self.hi[j] - self.x[j]) / delta).max(0.0), self.hi[j])
                } else {
                    continue;
                }
            } else if self.lo[j].is_finite() {
                (((self.x[j] - self.lo[j]) / -delta).max(0.0), self.lo[j])
            } else {
                continue;
            };
            if ratio <= t_max && leaving.map_or(true, |(_, bw, _, _)| wv.abs() > bw) {
                leaving = Some((pos, wv.abs(), bound, ratio));
            }
        }

        // Flip the entering variable to its other bound when no basic
        // variable blocks earlier; ties prefer the flip (no basis change).
        let flip = range.is_finite()
            && leaving.map_or(true, |(_, _, _, ratio)| range <= ratio + RATIO_TIE);
        if !flip {
            if let Some((_, wabs, _, _)) = leaving {
                // A barely-above-threshold pivot seen through a long eta
                // chain is suspect: the true column may be dependent on the
                // basis, and accepting it plants the seed of a singular
                // factorization later. Re-price on fresh factors instead.
                if wabs < 1e-7 && !self.etas.is_empty() {
                    self.refactorize()?;
                    return Ok(StepOutcome::Continue);
                }
            }
        }
        let t = if flip {
            range
        } else {
            leaving.expect("a finite step without a flip implies a blocker").3
        };
        let improvement = viol * t;
        self.x[q] += dir * t;
        if t != 0.0 {
            for pos in 0..self.m {
                if w[pos] != 0.0 {
                    let j = self.basis[pos];
                    self.x[j] -= dir * t * w[pos];
                }
            }
        }
        if flip {
            self.state[q] = match self.state[q] {
                VarState::AtLower => VarState::AtUpper,
                VarState::AtUpper => VarState::AtLower,
                other => other,
            };
            self.x[q] = if self.state[q] == VarState::AtUpper { self.hi[q] } else { self.lo[q] };
        } else {
            let (pos, _, bound, _) = leaving.expect("finite ratio implies a leaving variable");
            let out = self.basis[pos];
            self.x[out] = bound;
            self.state[out] =
                if bound == self.hi[out] && bound != self.lo[out] { VarState::AtUpper } else { VarState::AtLower };
            self.basis[pos] = q;
            self.state[q] = VarState::Basic;
            let wr = w[pos];
            let entries: Vec<(usize, f64)> = w
                .iter()
                .enumerate()
                .filter(|&(i, &v)| i != pos && v != 0.0)
                .map(|(i, &v)| (i, v))
                .collect();
            self.eta_nnz += entries.len() + 1;
            self.etas.push((pos, entries, wr));
        }

        // A pivot that moved nothing is degenerate; a long degenerate run
        // switches pricing to Bland's rule until real progress resumes.
        if improvement > 0.0 && t > RATIO_TIE {
            self.stalled = 0;
            self.bland = false;
        } else {
            self.stalled += 1;
            if self.stalled > 3 * self.m + 10 {
                self.bland = true;
            }
        }
        Ok(StepOutcome::Continue)
    }

    fn report(&mut self, status: LpStatus) -> LpSolution {
        if status != LpStatus::Optimal {
            return LpSolution {
                status,
                objective: f64::NAN,
                x: Vec::new(),
                row_duals: Vec::new(),
                reduced_costs: Vec::new(),
                iterations: self.iterations,
            };
        }
        let x: Vec<f64> = self.x[..self.n_struct].to_vec();
        let objective: f64 = self.lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        let cost = self.cost.clone();
        let y = self.btran_costs(&cost);
        let sign = if self.lp.maximize { -1.0 } else { 1.0 };
        let row_duals: Vec<f64> =
            (0..self.m).map(|i| sign * y[i] / self.row_scale[i]).collect();
        let mut reduced_costs = self.lp.objective.clone();
        for (i, row) in self.lp.constraints.iter().enumerate() {
            if row_duals[i] != 0.0 {
                for &(j, v) in &row.coeffs {
                    reduced_costs[j] -= row_duals[i] * v;
                }
            }
        }
        LpSolution { status, objective, x, row_duals, reduced_costs, iterations: self.iterations }
    }
}
