//! Dual cutting-plane engine for the weighted-load allocation problem.
//!
//! The weighted-load LP couples an enormous variable space (one share per
//! point, station, and pattern) through only K demand rows. Relaxing those
//! rows with multipliers leaves a subproblem that decomposes by pattern and
//! solves in closed form, so the dual function is cheap to evaluate pointwise.
//! This module maximizes that dual with Kelley's method: a small master LP
//! over the multipliers and a bound variable accumulates one supporting cut
//! per oracle call, and the optimal allocation is recovered as the convex
//! combination of oracle solutions weighted by the master's row duals.
//!
//! Cuts are stored as two summaries of their generating solution: per-station
//! loads and per-point service. The master's constant terms and multiplier
//! coefficients are rebuilt from those at solve time, which keeps a pool of
//! cuts valid when the station weights or the demand vector change. Pools
//! therefore survive reweighting steps and demand sweeps instead of starting
//! cold each time.

use crate::allocation::Allocation;
use crate::error::{Error, Result};
use crate::lp::simplex::{self, SimplexOptions};
use crate::lp::{LinearProgram, LpStatus, Sense};
use crate::rates::RateTensor;
use serde::{Deserialize, Serialize};

/// Which route solves an allocation problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    /// Dual decomposition: master LP over multipliers plus a closed-form
    /// inner solver. Scales to large pattern sets.
    CutPlane,
    /// One monolithic LP over every share variable. Exact reference route;
    /// cost grows quickly with the pattern count.
    Direct,
}

/// Sparse record of one inner solution, kept so the final allocation can be
/// rebuilt as a convex combination without holding dense vectors per cut.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    /// Nonzero shares as (point, station, pattern, value).
    pub alpha: Vec<(usize, usize, usize, f64)>,
    /// Nonzero spectrum fractions as (pattern, value).
    pub pi: Vec<(usize, f64)>,
}

impl Generator {
    pub fn from_allocation(a: &Allocation) -> Generator {
        Generator {
            alpha: a.alpha.iter().map(|(&(k, b, i), &v)| (k, b, i, v)).collect(),
            pi: a
                .pi
                .iter()
                .enumerate()
                .filter(|(_, &v)| v > 0.0)
                .map(|(i, &v)| (i, v))
                .collect(),
        }
    }

    /// Pattern carrying the largest fraction; 0 for an empty generator.
    pub fn lead_pattern(&self) -> usize {
        self.pi
            .iter()
            .fold(None::<(usize, f64)>, |best, &(i, v)| match best {
                Some((_, bv)) if bv >= v => best,
                _ => Some((i, v)),
            })
            .map(|(i, _)| i)
            .unwrap_or(0)
    }
}

/// One supporting hyperplane of the dual function.
///
/// Under station weights `w` and demands `d` the plane reads
/// `h(mu) <= sum_b w_b rho_b + sum_k (d_k - served_k) mu_k`, with equality at
/// the multiplier where the generator was produced.
#[derive(Debug, Clone)]
pub struct Cut {
    /// Load the generating solution puts on each station.
    pub rho: Vec<f64>,
    /// Throughput the generating solution delivers to each point.
    pub served: Vec<f64>,
    pub generator: Generator,
}

impl Cut {
    pub fn from_allocation(allocation: &Allocation, rates: &RateTensor) -> Cut {
        Cut {
            rho: allocation.loads(rates.b_count()),
            served: allocation.achieved_rates(rates),
            generator: Generator::from_allocation(allocation),
        }
    }

    /// Constant term of the plane under the given station weights.
    pub fn constant(&self, weights: &[f64]) -> f64 {
        dot(weights, &self.rho)
    }

    /// Multiplier coefficient for point `k` under the given demands.
    pub fn coefficient(&self, k: usize, demands: &[f64]) -> f64 {
        demands[k] - self.served[k]
    }

    /// Value of the plane at a multiplier vector.
    pub fn value_at(&self, weights: &[f64], demands: &[f64], mu: &[f64]) -> f64 {
        let mut v = self.constant(weights);
        for (k, &m) in mu.iter().enumerate() {
            v += self.coefficient(k, demands) * m;
        }
        v
    }
}

/// Reusable collection of cuts.
///
/// A pool may be handed to consecutive runs with different weights or
/// demands; every stored plane stays valid because its generator stays
/// feasible. Within a run the pool only grows, so the master bound is
/// monotone; trimming happens when the next run starts.
#[derive(Debug, Default)]
pub struct CutPool {
    cuts: Vec<Cut>,
    /// Positions that carried weight in the most recent primal recovery.
    active: Vec<usize>,
}

impl CutPool {
    pub fn new() -> CutPool {
        CutPool::default()
    }

    pub fn len(&self) -> usize {
        self.cuts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cuts.is_empty()
    }

    pub fn cuts(&self) -> &[Cut] {
        &self.cuts
    }

    /// Stores the cut unless an identical plane is already present, returning
    /// whether the pool grew. Two cuts with the same load and service summaries
    /// produce the same master row for every weight and demand vector, so the
    /// duplicate would only pad the master with a redundant constraint; worse,
    /// a pair of identical tight rows whose slacks both leave the basis makes
    /// that basis exactly singular.
    pub fn push(&mut self, cut: Cut) -> bool {
        let dup = self
            .cuts
            .iter()
            .any(|c| c.rho == cut.rho && c.served == cut.served);
        if !dup {
            self.cuts.push(cut);
        }
        !dup
    }

    pub fn clear(&mut self) {
        self.cuts.clear();
        self.active.clear();
    }

    /// Drops stale cuts beyond `cap`, preferring the ones active in the last
    /// recovery and then the most recent. Positions in `active` refer to the
    /// pre-trim ordering, so the list is rebuilt and the marks reset.
    fn shrink_to(&mut self, cap: usize) {
        if self.cuts.len() <= cap || cap == 0 {
            return;
        }
        let mut keep = vec![false; self.cuts.len()];
        let mut kept = 0;
        for &j in &self.active {
            if j < keep.len() && !keep[j] && kept < cap {
                keep[j] = true;
                kept += 1;
            }
        }
        for j in (0..self.cuts.len()).rev() {
            if kept >= cap {
                break;
            }
            if !keep[j] {
                keep[j] = true;
                kept += 1;
            }
        }
        let mut cuts = Vec::with_capacity(kept);
        for (j, cut) in self.cuts.drain(..).enumerate() {
            if keep[j] {
                cuts.push(cut);
            }
        }
        self.cuts = cuts;
        self.active.clear();
    }
}

#[derive(Debug, Clone)]
pub struct CutPlaneParams {
    /// Relative duality-gap target; the run stops when
    /// `z - h_best <= tol_gap * (1 + |h_best|)`.
    pub tol_gap: f64,
    /// Iteration cap as a multiple of the number of relaxed rows.
    pub max_iter_per_row: usize,
    /// Pool size the cut list is trimmed to when a run starts.
    pub pool_cap: usize,
}

impl Default for CutPlaneParams {
    fn default() -> Self {
        CutPlaneParams { tol_gap: 1e-7, max_iter_per_row: 50, pool_cap: 400 }
    }
}

/// One iteration of the bound-versus-value race.
#[derive(Debug, Clone, Serialize)]
pub struct TraceRow {
    pub iteration: usize,
    /// Master optimum; an upper bound that only tightens.
    pub master_bound: f64,
    /// Exact dual value at the master's multiplier.
    pub dual_value: f64,
    /// Master bound minus the best dual value seen so far.
    pub gap: f64,
    /// Pattern the newly generated cut leans on.
    pub pattern: usize,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    /// Convex combination of the generators the final master leaned on.
    pub allocation: Allocation,
    /// Multiplier vector of the last master solve.
    pub mu: Vec<f64>,
    /// Best dual value seen; equals the LP optimum at convergence.
    pub objective: f64,
    pub master_bound: f64,
    pub gap: f64,
    pub iterations: usize,
    pub trace: Vec<TraceRow>,
    /// Worst relative demand shortfall of the recovered allocation.
    pub demand_violation: f64,
    /// The run started with an empty pool and had to probe the box corner.
    pub degenerate_start: bool,
    /// Some multiplier finished at its box bound; the result may be a bound
    /// rather than an optimum.
    pub box_active: bool,
    /// Iteration cap hit before the gap closed.
    pub stalled: bool,
}

/// Inner minimization handed to the engine: given multipliers, produce the
/// exact dual value and a cut whose plane touches the dual function there.
pub trait InnerOracle {
    fn evaluate(&mut self, mu: &[f64]) -> Result<(f64, Cut)>;
}

impl<F: FnMut(&[f64]) -> Result<(f64, Cut)>> InnerOracle for F {
    fn evaluate(&mut self, mu: &[f64]) -> Result<(f64, Cut)> {
        self(mu)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

struct MasterOutcome {
    mu: Vec<f64>,
    z: f64,
    kappa: Vec<f64>,
}

/// Maximizes the bound variable over all stored planes and the multiplier
/// box, returning the optimum and the convexity weights over cuts.
///
/// The LP is posed in rescaled multipliers `nu_k = mu_k * s_k`, where `s_k`
/// is the largest multiplier coefficient over the stored planes. Without
/// this, rows mix the bound variable (coefficient 1, value near the load
/// objective) with multiplier coefficients at demand scale; per-row scaling
/// then pushes the bound's coefficient below the solver's feasibility
/// tolerance and the returned vertex can sit visibly off its claimed rows.
/// After the substitution every coefficient is order one and the vertex is
/// exact to working precision. Duals are unaffected: row senses and
/// right-hand sides stay as they are.
fn solve_master(
    cuts: &[Cut],
    weights: &[f64],
    demands: &[f64],
    mu_box: &[f64],
) -> Result<MasterOutcome> {
    let k_count = demands.len();
    let col_scale: Vec<f64> = (0..k_count)
        .map(|k| {
            cuts.iter()
                .map(|c| c.coefficient(k, demands).abs())
                .fold(1.0f64, f64::max)
        })
        .collect();
    let mut lp = LinearProgram::new(k_count + 1, true);
    lp.objective[k_count] = 1.0;
    for k in 0..k_count {
        lp.bounds[k] = (0.0, mu_box[k] * col_scale[k]);
    }
    lp.bounds[k_count] = (f64::NEG_INFINITY, f64::INFINITY);
    for cut in cuts {
        let mut coeffs = Vec::with_capacity(k_count + 1);
        coeffs.push((k_count, 1.0));
        for k in 0..k_count {
            let g = cut.coefficient(k, demands);
            if g != 0.0 {
                coeffs.push((k, -g / col_scale[k]));
            }
        }
        lp.add_row(coeffs, Sense::Le, cut.constant(weights));
    }
    let sol = simplex::solve(&lp, &SimplexOptions::default())?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Lp(format!(
            "master relaxation over {} cuts reported {:?}",
            cuts.len(),
            sol.status
        )));
    }
    // A master vertex that fails its own optimality certificate would poison
    // both the bound trace and the recovered primal, so reject it loudly.
    crate::lp::verify_solution(&lp, &sol, 1e-5)
        .map_err(|e| Error::Lp(format!("master certificate over {} cuts: {e}", cuts.len())))?;
    let mut kappa: Vec<f64> = sol.row_duals.iter().map(|&y| y.max(0.0)).collect();
    let total: f64 = kappa.iter().sum();
    if (total - 1.0).abs() > 1e-8 {
        return Err(Error::Lp(format!(
            "master convexity weights sum to {total}, expected 1"
        )));
    }
    for k in &mut kappa {
        *k /= total;
    }
    let mu: Vec<f64> = sol.x[..k_count].iter().zip(&col_scale).map(|(&nu, &s)| nu / s).collect();
    Ok(MasterOutcome { mu, z: sol.objective, kappa })
}

/// Blends the generators with weight above the drop threshold into one
/// allocation; returns it with the positions used and the service totals.
pub(crate) fn recover(
    cuts: &[Cut],
    kappa: &[f64],
    i_count: usize,
    k_count: usize,
) -> (Allocation, Vec<usize>, Vec<f64>) {
    const KAPPA_DROP: f64 = 1e-12;
    let mut allocation = Allocation::zero(i_count);
    let mut active = Vec::new();
    let mut served = vec![0.0; k_count];
    for (j, (&kj, cut)) in kappa.iter().zip(cuts).enumerate() {
        if kj <= KAPPA_DROP {
            continue;
        }
        active.push(j);
        for &(k, b, i, v) in &cut.generator.alpha {
            let cur = allocation.share(k, b, i);
            allocation.set_share(k, b, i, cur + kj * v);
        }
        for &(i, v) in &cut.generator.pi {
            allocation.pi[i] += kj * v;
        }
        for (s, &c) in served.iter_mut().zip(&cut.served) {
            *s += kj * c;
        }
    }
    (allocation, active, served)
}

/// Maximizes the dual by alternating master solves and oracle calls.
///
/// The pool may carry cuts from earlier runs; it is trimmed to the configured
/// cap on entry and grows by exactly one cut per iteration afterwards. On an
/// empty pool the first multiplier probes the box corner because no master
/// bound exists yet.
pub fn run<O: InnerOracle + ?Sized>(
    pool: &mut CutPool,
    oracle: &mut O,
    weights: &[f64],
    demands: &[f64],
    mu_box: &[f64],
    i_count: usize,
    params: &CutPlaneParams,
) -> Result<RunResult> {
    let k_count = demands.len();
    if mu_box.len() != k_count {
        return Err(Error::invariant("mu_box", "length mismatch with demands"));
    }
    if i_count == 0 {
        return Err(Error::invariant("patterns", "empty pattern set"));
    }
    pool.shrink_to(params.pool_cap);

    let max_iter = params.max_iter_per_row.saturating_mul(k_count.max(1));
    let mut best_h = f64::NEG_INFINITY;
    let mut trace = Vec::new();
    let mut degenerate_start = false;
    let mut last_master: Option<MasterOutcome> = None;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < max_iter {
        iterations += 1;
        let (mu, z) = if pool.is_empty() {
            degenerate_start = true;
            (mu_box.to_vec(), f64::INFINITY)
        } else {
            let mut outcome = solve_master(pool.cuts(), weights, demands, mu_box)?;
            // Re-evaluate the bound directly over the stored planes at the
            // returned multiplier. The LP's objective agrees only up to its
            // feasibility tolerance, and that slack would pollute the bound
            // trace; the plane minimum is exact and still an upper bound on
            // the dual function.
            outcome.z = pool
                .cuts()
                .iter()
                .map(|c| c.value_at(weights, demands, &outcome.mu))
                .fold(f64::INFINITY, f64::min);
            let at = (outcome.mu.clone(), outcome.z);
            last_master = Some(outcome);
            at
        };

        let (h, cut) = oracle.evaluate(&mu)?;
        // The cut must support the dual function exactly at its multiplier;
        // anything else means the oracle and the summaries disagree.
        let plane = cut.value_at(weights, demands, &mu);
        let scale = 1.0 + h.abs() + demands.iter().zip(&mu).map(|(d, m)| (d * m).abs()).sum::<f64>();
        if (plane - h).abs() > 1e-7 * scale {
            return Err(Error::Lp(format!(
                "inner oracle returned value {h} but its cut evaluates to {plane}"
            )));
        }
        best_h = best_h.max(h);
        let gap = z - best_h;
        trace.push(TraceRow {
            iteration: iterations,
            master_bound: z,
            dual_value: h,
            gap,
            pattern: cut.generator.lead_pattern(),
        });
        let fresh = pool.push(cut);
        if gap <= params.tol_gap * (1.0 + best_h.abs()) {
            converged = true;
            break;
        }
        if !fresh {
            // The oracle answered with a plane the master already enforces,
            // which pins the bound to the dual value at this multiplier: the
            // remaining gap is arithmetic noise, not missing cuts.
            converged = true;
            break;
        }
    }

    let (allocation, mu, z, demand_violation) = match &last_master {
        Some(outcome) => {
            let (allocation, active, served) =
                recover(&pool.cuts()[..outcome.kappa.len()], &outcome.kappa, i_count, k_count);
            pool.active = active;
            let violation = demands
                .iter()
                .zip(&served)
                .map(|(&d, &s)| (d - s) / (1.0 + d))
                .fold(0.0f64, f64::max);
            (allocation, outcome.mu.clone(), outcome.z, violation)
        }
        None => {
            // Terminated before any master existed (empty pool with an
            // infinite gap tolerance); report the trivial point.
            let mut allocation = Allocation::zero(i_count);
            allocation.pi[0] = 1.0;
            let violation = demands.iter().map(|&d| d / (1.0 + d)).fold(0.0f64, f64::max);
            (allocation, mu_box.to_vec(), f64::INFINITY, violation)
        }
    };

    let box_active = mu
        .iter()
        .zip(mu_box)
        .any(|(&m, &cap)| cap > 0.0 && m >= cap * (1.0 - 1e-9));

    Ok(RunResult {
        allocation,
        mu,
        objective: best_h,
        master_bound: z,
        gap: z - best_h,
        iterations,
        trace,
        demand_violation,
        degenerate_start,
        box_active,
        stalled: !converged,
    })
}
