//! Rate balancing: the always-feasible max-min allocation.
//!
//! The balancing problem maximizes a common throughput scale `R` such that
//! every test point receives at least its demand share `beta_k * R`. It is
//! feasible for any rate tensor (R = 0 always works), so it doubles as the
//! feasibility test for a demand vector -- the demands are servable exactly
//! when `R >= sum(d)` -- and as the producer of a strictly feasible starting
//! allocation for the weighted-load solver, whose master problem would
//! otherwise start unbounded.
//!
//! Two interchangeable routes are provided. The direct route appends `R` to
//! the monolithic allocation LP. The cutting-plane route relaxes the per-point
//! coverage rows with multipliers `lambda` and minimizes the resulting upper
//! bound; boundedness of that relaxation over `R >= 0` forces the
//! normalization `sum_k beta_k lambda_k >= 1`, which becomes an explicit row
//! of its master problem. Both are cross-checked against each other in the
//! test suites.

use crate::allocation::Allocation;
use crate::cutplane::{self, Cut, CutPlaneParams, Engine, Generator, TraceRow};
use crate::error::{Error, Result};
use crate::lp::direct::allocation_from_point;
use crate::lp::simplex::{self, SimplexOptions};
use crate::lp::{LinearProgram, LpStatus, Sense};
use crate::rates::RateTensor;

#[derive(Debug, Clone)]
pub struct BalanceResult {
    /// Largest total throughput deliverable in proportion `beta`.
    pub r_sum: f64,
    pub allocation: Allocation,
    /// Demand shares, `d_k / sum(d)`; all zero when the demands are zero.
    pub beta: Vec<f64>,
    /// Simplex pivots (direct) or oracle calls (cutting plane).
    pub iterations: usize,
    /// Bound-versus-value history; empty for the direct route.
    pub trace: Vec<TraceRow>,
    pub stalled: bool,
}

/// Demands are servable iff the balanced throughput covers their sum.
pub fn is_feasible(balance: &BalanceResult, demands: &[f64]) -> bool {
    let sum_d: f64 = demands.iter().sum();
    balance.r_sum + 1e-9 * (1.0 + sum_d) >= sum_d
}

/// Maximizes R with every point served at least `beta_k * R`.
pub fn rate_balance(
    rates: &RateTensor,
    demands: &[f64],
    engine: Engine,
    params: &CutPlaneParams,
) -> Result<BalanceResult> {
    if demands.len() != rates.k_count() {
        return Err(Error::invariant("demands", "length mismatch with rate tensor"));
    }
    if demands.iter().any(|d| !d.is_finite() || *d < 0.0) {
        return Err(Error::invariant("demands", "must be finite and nonnegative"));
    }
    let sum_d: f64 = demands.iter().sum();
    if sum_d <= 0.0 {
        // Nothing requested: any allocation balances, report the empty one.
        let mut allocation = Allocation::zero(rates.i_count());
        allocation.pi[0] = 1.0;
        return Ok(BalanceResult {
            r_sum: 0.0,
            allocation,
            beta: vec![0.0; demands.len()],
            iterations: 0,
            trace: Vec::new(),
            stalled: false,
        });
    }
    let beta: Vec<f64> = demands.iter().map(|d| d / sum_d).collect();
    match engine {
        Engine::Direct => balance_direct(rates, &beta),
        Engine::CutPlane => balance_cutplane(rates, &beta, params),
    }
}

/// Monolithic LP: variables [alpha..., pi..., R], maximize R.
fn balance_direct(rates: &RateTensor, beta: &[f64]) -> Result<BalanceResult> {
    let (k_count, b_count, i_count) = (rates.k_count(), rates.b_count(), rates.i_count());
    let n_alpha = k_count * b_count * i_count;
    let var_r = n_alpha + i_count;
    let mut lp = LinearProgram::new(var_r + 1, true);
    lp.objective[var_r] = 1.0;
    lp.bounds[var_r] = (0.0, rates.sum_rate_bound());

    let var_alpha = |k: usize, b: usize, i: usize| (k * b_count + b) * i_count + i;
    // Coverage rows: beta_k R within what the shares deliver to point k.
    for (k, &bk) in beta.iter().enumerate() {
        if bk == 0.0 {
            continue;
        }
        let mut coeffs = vec![(var_r, bk)];
        for b in 0..b_count {
            for i in 0..i_count {
                let r = rates.rate(k, b, i);
                if r > 0.0 {
                    coeffs.push((var_alpha(k, b, i), -r));
                }
            }
        }
        lp.add_row(coeffs, Sense::Le, 0.0);
    }
    // Capacity rows: shares on a station-pattern pair fit in its fraction.
    for b in 0..b_count {
        for i in 0..i_count {
            let mut coeffs: Vec<(usize, f64)> =
                (0..k_count).map(|k| (var_alpha(k, b, i), 1.0)).collect();
            coeffs.push((n_alpha + i, -1.0));
            lp.add_row(coeffs, Sense::Le, 0.0);
        }
    }
    lp.add_row((0..i_count).map(|i| (n_alpha + i, 1.0)).collect(), Sense::Eq, 1.0);

    let sol = simplex::solve(&lp, &crate::lp::direct::direct_options())?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Lp(format!("balance relaxation reported {:?}", sol.status)));
    }
    Ok(BalanceResult {
        r_sum: sol.objective.max(0.0),
        allocation: allocation_from_point(&sol.x, k_count, b_count, i_count),
        beta: beta.to_vec(),
        iterations: sol.iterations,
        trace: Vec::new(),
        stalled: false,
    })
}

/// Cutting-plane route: alternates a master over the coverage multipliers
/// with a closed-form best-response allocation.
fn balance_cutplane(
    rates: &RateTensor,
    beta: &[f64],
    params: &CutPlaneParams,
) -> Result<BalanceResult> {
    let (k_count, i_count) = (rates.k_count(), rates.i_count());
    let lambda_box: Vec<f64> =
        beta.iter().map(|&b| if b > 0.0 { 1e3 / b } else { 0.0 }).collect();

    // The zero allocation seeds the pool; its cut keeps the master bounded
    // below before any real response exists. One response per test point
    // joins it: without these the bound sits at zero until every point has
    // been discovered through its own master solve, which wastes a solve
    // per point on anything beyond toy sizes.
    let mut zero = Allocation::zero(i_count);
    zero.pi[0] = 1.0;
    let mut cuts = vec![Cut::from_allocation(&zero, rates)];
    for k in 0..k_count {
        let mut probe = vec![0.0; k_count];
        probe[k] = 1.0;
        let (_, cut) = balance_oracle(rates, &probe);
        if !cuts.iter().any(|c| c.served == cut.served) {
            cuts.push(cut);
        }
    }

    let max_iter = params.max_iter_per_row.saturating_mul(k_count.max(1));
    let mut best_upper = f64::INFINITY;
    let mut trace = Vec::new();
    let mut last: Option<(f64, Vec<f64>)> = None;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < max_iter {
        iterations += 1;
        let (lambda, _, kappa) = balance_master(&cuts, beta, &lambda_box)?;
        // Re-evaluate the bound over the stored responses at the returned
        // multiplier; the LP objective carries feasibility-tolerance slack
        // that would otherwise leak into the bound trace.
        let y = cuts
            .iter()
            .map(|c| cutplane::dot(&c.served, &lambda))
            .fold(f64::NEG_INFINITY, f64::max);
        let (g, cut) = balance_oracle(rates, &lambda);
        best_upper = best_upper.min(g);
        let gap = best_upper - y;
        trace.push(TraceRow {
            iteration: iterations,
            master_bound: y,
            dual_value: g,
            gap,
            pattern: cut.generator.lead_pattern(),
        });
        last = Some((y, kappa));
        // A response the master already enforces cannot move the bound, and
        // stored twice it would put a pair of identical rows into the master,
        // whose basis turns singular once both slacks go tight. Its plane
        // pins the bound to the response value here, so treat it as closure.
        let dup = cuts.iter().any(|c| c.served == cut.served);
        if !dup {
            cuts.push(cut);
        }
        if gap <= params.tol_gap * (1.0 + y.abs()) || dup {
            converged = true;
            break;
        }
    }

    let (_, kappa) = last.expect("at least one master solve");
    let (allocation, _, served) = cutplane::recover(&cuts[..kappa.len()], &kappa, i_count, k_count);
    // The achievable scale of the recovered allocation, never above the true
    // optimum; at convergence it matches the master bound to within the gap.
    let r_sum = beta
        .iter()
        .zip(&served)
        .filter(|(&b, _)| b > 0.0)
        .map(|(&b, &s)| s / b)
        .fold(f64::INFINITY, f64::min)
        .max(0.0);
    Ok(BalanceResult {
        r_sum: if r_sum.is_finite() { r_sum } else { 0.0 },
        allocation,
        beta: beta.to_vec(),
        iterations,
        trace,
        stalled: !converged,
    })
}

/// Master step: minimize y subject to every stored response and the
/// normalization row, over boxed multipliers. Returns the multiplier vector,
/// the optimum, and the convexity weights over the response rows.
fn balance_master(
    cuts: &[Cut],
    beta: &[f64],
    lambda_box: &[f64],
) -> Result<(Vec<f64>, f64, Vec<f64>)> {
    let k_count = beta.len();
    // Posed in nu_k = lambda_k * s_k, where s_k caps the magnitude of point
    // k's served-rate coefficients. Served rates span several decades while
    // the bound variable enters with coefficient 1; without the substitution
    // the row scaling drowns the small columns and the solver returns
    // vertices visibly off their rows (the certificate below catches that).
    let col_scale: Vec<f64> = (0..k_count)
        .map(|k| cuts.iter().map(|c| c.served[k].abs()).fold(1.0f64, f64::max))
        .collect();
    let mut lp = LinearProgram::new(k_count + 1, false);
    lp.objective[k_count] = 1.0;
    for k in 0..k_count {
        lp.bounds[k] = (0.0, lambda_box[k] * col_scale[k]);
    }
    lp.bounds[k_count] = (f64::NEG_INFINITY, f64::INFINITY);
    for cut in cuts {
        let mut coeffs = Vec::with_capacity(k_count + 1);
        coeffs.push((k_count, 1.0));
        for (k, &s) in cut.served.iter().enumerate() {
            if s != 0.0 {
                coeffs.push((k, -s / col_scale[k]));
            }
        }
        lp.add_row(coeffs, Sense::Ge, 0.0);
    }
    let norm: Vec<(usize, f64)> = beta
        .iter()
        .enumerate()
        .filter(|(_, &b)| b > 0.0)
        .map(|(k, &b)| (k, b / col_scale[k]))
        .collect();
    lp.add_row(norm, Sense::Ge, 1.0);

    let sol = simplex::solve(&lp, &SimplexOptions::default())?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Lp(format!("balance master reported {:?}", sol.status)));
    }
    // Same guard as the load master: a vertex off its claimed rows must stop
    // the run rather than leak into the bound and the recovered allocation.
    crate::lp::verify_solution(&lp, &sol, 1e-5)
        .map_err(|e| Error::Lp(format!("balance master certificate: {e}")))?;
    let mut kappa: Vec<f64> = sol.row_duals[..cuts.len()].iter().map(|&y| y.max(0.0)).collect();
    let total: f64 = kappa.iter().sum();
    if (total - 1.0).abs() > 1e-8 {
        return Err(Error::Lp(format!(
            "balance master convexity weights sum to {total}, expected 1"
        )));
    }
    for k in &mut kappa {
        *k /= total;
    }
    let lambda: Vec<f64> =
        sol.x[..k_count].iter().zip(&col_scale).map(|(&nu, &s)| nu / s).collect();
    Ok((lambda, sol.objective, kappa))
}

/// Best response to multipliers: the allocation in the feasible set that
/// maximizes the multiplier-weighted service. Separates per station within a
/// pattern (serve the best-paying point fully, or stay quiet) and then picks
/// the best pattern; ties go to the lowest index.
fn balance_oracle(rates: &RateTensor, lambda: &[f64]) -> (f64, Cut) {
    let (k_count, b_count, i_count) = (rates.k_count(), rates.b_count(), rates.i_count());
    let mut best_i = 0;
    let mut best_score = f64::NEG_INFINITY;
    let mut best_choice: Vec<Option<usize>> = vec![None; b_count];
    let mut choice: Vec<Option<usize>> = vec![None; b_count];
    for i in 0..i_count {
        let mut score = 0.0;
        for b in 0..b_count {
            let slab = rates.slab(b, i);
            let mut top = 0.0;
            let mut top_k = None;
            for (k, &r) in slab.iter().enumerate() {
                let v = lambda[k] * r;
                if v > top {
                    top = v;
                    top_k = Some(k);
                }
            }
            choice[b] = top_k;
            score += top;
        }
        if score > best_score {
            best_score = score;
            best_i = i;
            std::mem::swap(&mut best_choice, &mut choice);
        }
    }

    let mut rho = vec![0.0; b_count];
    let mut served = vec![0.0; k_count];
    let mut alpha = Vec::new();
    for (b, pick) in best_choice.iter().enumerate() {
        if let Some(k) = *pick {
            alpha.push((k, b, best_i, 1.0));
            rho[b] = 1.0;
            served[k] += rates.rate(k, b, best_i);
        }
    }
    let generator = Generator { alpha, pi: vec![(best_i, 1.0)] };
    (best_score, Cut { rho, served, generator })
}

#[derive(Debug, Clone)]
pub struct StrictStart {
    pub allocation: Allocation,
    /// Plane generated by the start; its multiplier coefficients are all
    /// nonpositive, which alone bounds the weighted-load master.
    pub cut: Cut,
    /// Every positive demand is met with spare capacity.
    pub strict: bool,
    /// Guaranteed relative demand surplus; zero when not strict.
    pub margin: f64,
}

/// Shrinks the balanced allocation toward the demands so that every point
/// keeps a strict surplus, and emits the corresponding cut.
///
/// With headroom `gamma = min_k served_k / d_k > 1`, scaling the shares by
/// `s = (1 + (gamma - 1) * shrink) / gamma < 1` leaves each point a relative
/// surplus of at least `(gamma - 1) * shrink`. Without headroom the
/// allocation is returned unscaled and flagged, and the solver falls back to
/// its multiplier box.
pub fn strict_start(
    balance: &BalanceResult,
    rates: &RateTensor,
    demands: &[f64],
    shrink: f64,
) -> Result<StrictStart> {
    if !(shrink > 0.0 && shrink < 1.0) {
        return Err(Error::invariant("shrink", format!("must lie in (0, 1), got {shrink}")));
    }
    let served = balance.allocation.achieved_rates(rates);
    let gamma = demands
        .iter()
        .zip(&served)
        .filter(|(&d, _)| d > 0.0)
        .map(|(&d, &s)| s / d)
        .fold(f64::INFINITY, f64::min);

    let mut allocation = balance.allocation.clone();
    let strict;
    let margin;
    if gamma.is_finite() && gamma > 1.0 + 1e-9 {
        let s = (1.0 + (gamma - 1.0) * shrink) / gamma;
        for v in allocation.alpha.values_mut() {
            *v *= s;
        }
        strict = true;
        margin = (gamma - 1.0) * shrink;
    } else {
        // Either no positive demand (vacuously strict) or no headroom.
        strict = !gamma.is_finite();
        margin = 0.0;
    }
    let cut = Cut::from_allocation(&allocation, rates);
    Ok(StrictStart { allocation, cut, strict, margin })
}
