//! Minimum-power station activation, association, and spectrum allocation.
//!
//! Network power splits into a load-proportional part and a fixed part that
//! is paid whenever a station is on at all. The fixed part turns the
//! objective into a count of active stations, which is approximated here by a
//! smooth concave surrogate and minimized by majorize-minimize: each outer
//! iteration linearizes the surrogate at the previous station loads, which
//! yields a weighted-load LP, and re-solving under refreshed weights drives
//! lightly loaded stations toward zero. A final rounding step switches
//! stations below a threshold off, re-solves on the patterns the survivors
//! can form, and restores stations when the reduced set cannot carry the
//! demand.
//!
//! The weighted-load LP itself is solved either directly (reference route)
//! or through the cutting-plane engine, whose inner problem has the
//! closed-form solution implemented by [`inner_response`]: under fixed
//! multipliers the subproblem separates per pattern and station, each station
//! serves at most the single best-paying point, and exactly one pattern wins.

use crate::allocation::Allocation;
use crate::cutplane::{self, Cut, CutPlaneParams, CutPool, Engine, Generator, TraceRow};
use crate::error::{Error, Result};
use crate::feasibility::{self, BalanceResult};
use crate::lp::direct;
use crate::patterns::PatternSet;
use crate::rates::RateTensor;
use crate::scenario::Scenario;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone)]
pub struct SolverParams {
    /// Smoothing of the on/off count; smaller tracks the count more closely
    /// but steepens the reweighting.
    pub epsilon: f64,
    /// Outer-loop stop: max-norm change of the station loads.
    pub outer_tol: f64,
    pub max_outer: usize,
    /// Loads at or below this round to off.
    pub rho_off: f64,
    /// How much of the feasibility headroom the starting point keeps.
    pub shrink: f64,
    pub engine: Engine,
    pub cutplane: CutPlaneParams,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            epsilon: 1e-3,
            outer_tol: 1e-4,
            max_outer: 15,
            rho_off: 1e-4,
            shrink: 0.5,
            engine: Engine::CutPlane,
            cutplane: CutPlaneParams::default(),
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::invariant("epsilon", "must be positive"));
        }
        if !(self.rho_off > 0.0 && self.rho_off <= 0.01) {
            return Err(Error::invariant("rho_off", "must lie in (0, 0.01]"));
        }
        if !(self.outer_tol > 0.0) {
            return Err(Error::invariant("outer_tol", "must be positive"));
        }
        if self.max_outer == 0 {
            return Err(Error::invariant("max_outer", "must be at least 1"));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(Error::invariant("shrink", "must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// Outcome of one full minimization.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnergyResult {
    pub feasible: bool,
    /// NaN when infeasible.
    pub total_power_w: f64,
    pub allocation: Option<Allocation>,
    /// Final station loads.
    pub rho: Vec<f64>,
    /// Stations whose fixed power is being paid.
    pub active_stations: Vec<usize>,
    /// Balanced throughput of the feasibility check.
    pub balance_r_sum: f64,
    pub outer_iterations: usize,
    /// Surrogate objective after each outer iteration, starting value first.
    pub surrogate_trace: Vec<f64>,
    pub achieved_rates: Vec<f64>,
    pub demands: Vec<f64>,
    /// Inner-oracle calls (cutting plane) or simplex pivots (direct), summed.
    pub solver_iterations: usize,
    /// Stations the rounding step restored to keep the demand servable.
    pub restored: Vec<usize>,
    pub active_patterns: usize,
}

/// Smooth stand-in for "is this load nonzero": 0 at 0, 1 at 1, concave.
pub fn l0_surrogate(x: f64, epsilon: f64) -> f64 {
    (1.0 + x / epsilon).ln() / (1.0 + 1.0 / epsilon).ln()
}

/// Power surrogate minimized by the outer loop: the load-proportional part
/// exactly, the fixed part through the smoothed indicator (up to a constant
/// offset, which shifts nothing).
pub fn surrogate_objective(rho: &[f64], scenario: &Scenario, epsilon: f64) -> f64 {
    let log_norm = (1.0 + 1.0 / epsilon).ln();
    scenario
        .bss
        .iter()
        .zip(rho)
        .map(|(bs, &r)| {
            let p = bs.op_power_max;
            let q = bs.fixed_fraction;
            (1.0 - q) * p * r + q * p * (epsilon + r).ln() / log_norm
        })
        .sum()
}

/// Station weights that majorize the surrogate at the previous loads:
/// the gradient of the fixed part plus the constant load-proportional part.
pub fn mm_weights(rho_prev: &[f64], scenario: &Scenario, epsilon: f64) -> Vec<f64> {
    let log_norm = (1.0 + 1.0 / epsilon).ln();
    scenario
        .bss
        .iter()
        .zip(rho_prev)
        .map(|(bs, &r)| {
            let p = bs.op_power_max;
            let q = bs.fixed_fraction;
            (1.0 - q) * p + q * p / (log_norm * (epsilon + r))
        })
        .collect()
}

/// Network power under the rounded on/off rule: load-proportional part plus
/// the fixed part of every station loaded above the threshold.
pub fn total_power(scenario: &Scenario, rho: &[f64], rho_off: f64) -> f64 {
    power_with_active(
        scenario,
        rho,
        &rho.iter().map(|&r| r > rho_off).collect::<Vec<bool>>(),
    )
}

/// Power with an explicit active set; rounding repair may keep a station on
/// even when its final load sits under the threshold.
pub(crate) fn power_with_active(scenario: &Scenario, rho: &[f64], active: &[bool]) -> f64 {
    scenario
        .bss
        .iter()
        .zip(rho.iter().zip(active))
        .map(|(bs, (&r, &on))| {
            let p = bs.op_power_max;
            let q = bs.fixed_fraction;
            (1.0 - q) * r * p + if on { q * p } else { 0.0 }
        })
        .sum()
}

pub fn count_active_patterns(allocation: &Allocation, tol: f64) -> usize {
    allocation.active_pattern_count(tol)
}

/// Closed-form inner minimizer for the cutting-plane route.
///
/// With multipliers priced into the rates, the value of letting station `b`
/// serve point `k` under pattern `i` is `w_b - mu_k r_kbi` per unit share.
/// Each station under each pattern either serves its best (most negative)
/// point with the full fraction or stays quiet, and all spectrum goes to the
/// pattern with the lowest total. Ties resolve to the lowest index. Returns
/// the exact dual value (including the demand term) and the matching cut.
pub fn inner_response(
    rates: &RateTensor,
    weights: &[f64],
    demands: &[f64],
    mu: &[f64],
) -> (f64, Cut) {
    let (k_count, b_count, i_count) = (rates.k_count(), rates.b_count(), rates.i_count());
    let mut best_i = 0;
    let mut best_score = f64::INFINITY;
    let mut best_choice: Vec<Option<usize>> = vec![None; b_count];
    let mut choice: Vec<Option<usize>> = vec![None; b_count];
    for i in 0..i_count {
        let mut score = 0.0;
        for b in 0..b_count {
            let w = weights[b];
            let slab = rates.slab(b, i);
            let mut low = f64::INFINITY;
            let mut low_k = 0;
            for (k, &r) in slab.iter().enumerate() {
                let v = w - mu[k] * r;
                if v < low {
                    low = v;
                    low_k = k;
                }
            }
            if low < 0.0 {
                score += low;
                choice[b] = Some(low_k);
            } else {
                choice[b] = None;
            }
        }
        if score < best_score {
            best_score = score;
            best_i = i;
            std::mem::swap(&mut best_choice, &mut choice);
        }
    }

    let h = best_score + cutplane::dot(demands, mu);
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
    (h, Cut { rho, served, generator })
}

/// Box for the demand multipliers: generous multiples of the worst
/// cost-per-bit any single link could justify. Points with no usable link get
/// a zero box (their multiplier cannot help).
pub fn multiplier_box(rates: &RateTensor, weights: &[f64]) -> Vec<f64> {
    let w_max = weights.iter().cloned().fold(0.0f64, f64::max);
    (0..rates.k_count())
        .map(|k| match rates.min_positive_rate_for(k) {
            Some(r) => 1e3 * w_max / r,
            None => 0.0,
        })
        .collect()
}

/// One weighted-load solve through the selected engine.
#[derive(Debug, Clone)]
pub struct WeightedLpOutcome {
    pub objective: f64,
    pub allocation: Allocation,
    /// Demand multipliers: LP row duals (direct) or the final master point
    /// (cutting plane).
    pub mu: Vec<f64>,
    /// Oracle calls (cutting plane) or simplex pivots (direct).
    pub iterations: usize,
    pub trace: Vec<TraceRow>,
    pub degenerate_start: bool,
    pub box_active: bool,
}

/// Minimizes the weighted station load subject to the demands.
///
/// The pool carries cuts between calls; it only pays off when consecutive
/// calls share the same rate tensor. Callers switching tensors must pass a
/// fresh pool.
pub fn solve_weighted_lp(
    rates: &RateTensor,
    demands: &[f64],
    weights: &[f64],
    engine: Engine,
    cp: &CutPlaneParams,
    pool: &mut CutPool,
) -> Result<WeightedLpOutcome> {
    match engine {
        Engine::Direct => {
            let sol = direct::solve_weighted_load(rates, demands, weights)?;
            Ok(WeightedLpOutcome {
                objective: sol.objective,
                allocation: sol.allocation,
                mu: sol.demand_duals,
                iterations: sol.lp_iterations,
                trace: Vec::new(),
                degenerate_start: false,
                box_active: false,
            })
        }
        Engine::CutPlane => {
            direct::check_servable(rates, demands)?;
            let mu_box = multiplier_box(rates, weights);
            let mut oracle =
                |mu: &[f64]| Ok(inner_response(rates, weights, demands, mu));
            let res = cutplane::run(
                pool,
                &mut oracle,
                weights,
                demands,
                &mu_box,
                rates.i_count(),
                cp,
            )?;
            if res.stalled {
                return Err(Error::Stall {
                    iterations: res.iterations,
                    detail: format!(
                        "dual gap {:.3e} still open; the demands may sit at or beyond the \
                         feasible boundary",
                        res.gap
                    ),
                });
            }
            if res.box_active && res.demand_violation > 1e-6 {
                return Err(Error::Infeasible(format!(
                    "multipliers ran into their box with a demand shortfall of {:.3e}",
                    res.demand_violation
                )));
            }
            Ok(WeightedLpOutcome {
                objective: res.objective,
                allocation: res.allocation,
                mu: res.mu,
                iterations: res.iterations,
                trace: res.trace,
                degenerate_start: res.degenerate_start,
                box_active: res.box_active,
            })
        }
    }
}

/// Full minimization: feasibility check, strictly feasible start, reweighted
/// outer loop, rounding with repair.
pub fn minimize_energy(
    scenario: &Scenario,
    patterns: &PatternSet,
    rates: &RateTensor,
    params: &SolverParams,
) -> Result<EnergyResult> {
    let demands = scenario.demands();
    let balance = feasibility::rate_balance(rates, &demands, params.engine, &params.cutplane)?;
    let mut pool = CutPool::new();
    minimize_energy_warm(scenario, patterns, rates, params, &balance, &mut pool)
}

/// Variant for sweeps: reuses a feasibility result (valid across demand
/// levels with the same proportions) and a cut pool (valid across any
/// weights and demands on the same rate tensor).
pub fn minimize_energy_warm(
    scenario: &Scenario,
    patterns: &PatternSet,
    rates: &RateTensor,
    params: &SolverParams,
    balance: &BalanceResult,
    pool: &mut CutPool,
) -> Result<EnergyResult> {
    params.validate()?;
    let b_count = scenario.b_count();
    let demands = scenario.demands();
    if rates.k_count() != demands.len()
        || rates.b_count() != b_count
        || rates.i_count() != patterns.len()
        || patterns.b_count() != b_count
    {
        return Err(Error::invariant(
            "rates",
            "tensor dimensions disagree with the scenario or pattern set",
        ));
    }
    let i_count = rates.i_count();
    let sum_d: f64 = demands.iter().sum();
    if sum_d <= 0.0 {
        let mut allocation = Allocation::zero(i_count);
        allocation.pi[0] = 1.0;
        return Ok(EnergyResult {
            feasible: true,
            total_power_w: 0.0,
            allocation: Some(allocation),
            rho: vec![0.0; b_count],
            active_stations: Vec::new(),
            balance_r_sum: balance.r_sum,
            outer_iterations: 0,
            surrogate_trace: Vec::new(),
            achieved_rates: vec![0.0; demands.len()],
            demands,
            solver_iterations: 0,
            restored: Vec::new(),
            active_patterns: 1,
        });
    }

    if !feasibility::is_feasible(balance, &demands) {
        return Ok(EnergyResult {
            feasible: false,
            total_power_w: f64::NAN,
            allocation: None,
            rho: vec![0.0; b_count],
            active_stations: Vec::new(),
            balance_r_sum: balance.r_sum,
            outer_iterations: 0,
            surrogate_trace: Vec::new(),
            achieved_rates: vec![0.0; demands.len()],
            demands,
            solver_iterations: 0,
            restored: Vec::new(),
            active_patterns: 0,
        });
    }

    let start = feasibility::strict_start(balance, rates, &demands, params.shrink)?;
    pool.push(start.cut.clone());
    let mut allocation = start.allocation;
    let mut rho = allocation.loads(b_count);
    let mut surrogate_trace = vec![surrogate_objective(&rho, scenario, params.epsilon)];
    let mut solver_iterations = 0;
    let mut outer_iterations = 0;

    for _ in 0..params.max_outer {
        outer_iterations += 1;
        let weights = mm_weights(&rho, scenario, params.epsilon);
        let sol = solve_weighted_lp(rates, &demands, &weights, params.engine, &params.cutplane, pool)?;
        solver_iterations += sol.iterations;

        // Accept the move only if it cannot raise the majorizer: the previous
        // point is feasible for the same LP, so a dearer or demand-short
        // candidate means the solve is already at the fixed point.
        let cand_rho = sol.allocation.loads(b_count);
        let cand_cost = cutplane::dot(&weights, &cand_rho);
        let prev_cost = cutplane::dot(&weights, &rho);
        let served = sol.allocation.achieved_rates(rates);
        let covers = served
            .iter()
            .zip(&demands)
            .all(|(&s, &d)| s >= d - 1e-6 * (1.0 + d));

        let mut delta = 0.0;
        if covers && cand_cost <= prev_cost * (1.0 + 1e-12) + 1e-12 {
            delta = rho
                .iter()
                .zip(&cand_rho)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            allocation = sol.allocation;
            rho = cand_rho;
        }
        surrogate_trace.push(surrogate_objective(&rho, scenario, params.epsilon));
        if delta <= params.outer_tol {
            break;
        }
    }

    // Rounding: drop stations whose load fell to noise, re-solve on the
    // patterns the survivors can form, and restore stations (heaviest first)
    // if the reduced set cannot carry the demand.
    let mut restored = Vec::new();
    let below: Vec<usize> =
        (0..b_count).filter(|&b| rho[b] <= params.rho_off).collect();
    if !below.is_empty() {
        let mut on_mask = 0u64;
        for b in 0..b_count {
            if rho[b] > params.rho_off {
                on_mask |= 1 << b;
            }
        }
        let mut candidates = below.clone();
        candidates.sort_by(|&a, &b| rho[b].partial_cmp(&rho[a]).unwrap().then(a.cmp(&b)));
        let full_mask: u64 = (0..b_count).fold(0, |m, b| m | (1 << b));
        let weights = mm_weights(&rho, scenario, params.epsilon);

        loop {
            if on_mask == full_mask {
                // Everything restored: the unrounded allocation stands.
                break;
            }
            let allowed = patterns.restricted_indices(on_mask);
            if let Some(rounded) = try_reduced_solve(
                rates, &demands, &weights, &allowed, i_count, params,
            )? {
                allocation = rounded;
                rho = allocation.loads(b_count);
                break;
            }
            match candidates.first().copied() {
                Some(b) => {
                    candidates.remove(0);
                    on_mask |= 1 << b;
                    restored.push(b);
                }
                None => break,
            }
        }
    }

    let active: Vec<bool> = (0..b_count)
        .map(|b| rho[b] > params.rho_off || (restored.contains(&b) && rho[b] > 0.0))
        .collect();
    let total_power_w = power_with_active(scenario, &rho, &active);
    let achieved_rates = allocation.achieved_rates(rates);
    let active_patterns = count_active_patterns(&allocation, 1e-9);
    Ok(EnergyResult {
        feasible: true,
        total_power_w,
        active_stations: (0..b_count).filter(|&b| active[b]).collect(),
        rho,
        balance_r_sum: balance.r_sum,
        outer_iterations,
        surrogate_trace,
        achieved_rates,
        demands,
        solver_iterations,
        restored,
        active_patterns,
        allocation: Some(allocation),
    })
}

/// Weighted re-solve restricted to a pattern subset. Returns the allocation
/// mapped back to the full pattern index space, or None when the subset
/// cannot carry the demand.
fn try_reduced_solve(
    rates: &RateTensor,
    demands: &[f64],
    weights: &[f64],
    allowed: &[usize],
    full_i: usize,
    params: &SolverParams,
) -> Result<Option<Allocation>> {
    if allowed.is_empty() {
        return Ok(None);
    }
    let sub = rates.select_patterns(allowed);
    let balance = feasibility::rate_balance(&sub, demands, params.engine, &params.cutplane)?;
    if !feasibility::is_feasible(&balance, demands) {
        return Ok(None);
    }
    let start = feasibility::strict_start(&balance, &sub, demands, params.shrink)?;
    let mut pool = CutPool::new();
    pool.push(start.cut);
    let sol = match solve_weighted_lp(&sub, demands, weights, params.engine, &params.cutplane, &mut pool)
    {
        Ok(sol) => sol,
        Err(Error::Infeasible(_)) | Err(Error::Stall { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    // Paranoia: a reduced solve must still cover the demand.
    let served = sol.allocation.achieved_rates(&sub);
    if served.iter().zip(demands).any(|(&s, &d)| s < d - 1e-5 * (1.0 + d)) {
        return Ok(None);
    }
    let mut out = Allocation::zero(full_i);
    for (sub_i, &orig_i) in allowed.iter().enumerate() {
        out.pi[orig_i] = sol.allocation.pi[sub_i];
    }
    for (&(k, b, sub_i), &v) in &sol.allocation.alpha {
        out.set_share(k, b, allowed[sub_i], v);
    }
    Ok(Some(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::patterns;
    use crate::scenario::{
        build_scenario, BsKind, ScenarioConfig, StationSpec, TestPointSpec,
    };

    fn m1() -> RateTensor {
        RateTensor::from_raw(
            2,
            2,
            3,
            vec![
                10.0, 0.0, 5.0, 0.0, 8.0, 3.0, // point 0
                6.0, 0.0, 2.0, 0.0, 12.0, 7.0, // point 1
            ],
        )
        .unwrap()
    }

    /// One macro at the origin serving `k_count` co-located points.
    fn tiny_scenario(kind: BsKind, tx: Option<f64>, q: Option<f64>, demands: &[f64]) -> Scenario {
        let mut config = ScenarioConfig::default();
        config.network.stations = Some(vec![StationSpec {
            kind,
            x_m: 0.0,
            y_m: 0.0,
            tx_power_w: tx,
            q,
        }]);
        config.network.test_points = Some(
            demands.iter().map(|_| TestPointSpec { x_m: 100.0, y_m: 0.0 }).collect(),
        );
        config.demand.uniform_bps = None;
        config.demand.per_test_point =
            Some(demands.iter().enumerate().map(|(k, &d)| (k, d)).collect());
        build_scenario(&config).unwrap()
    }

    #[test]
    fn surrogate_hits_the_anchor_points() {
        assert_eq!(l0_surrogate(0.0, 1e-3), 0.0);
        assert!((l0_surrogate(1.0, 1e-3) - 1.0).abs() < 1e-15);
        let eps = 1e-3f64;
        let expect = 2f64.ln() / (1.0 + 1.0 / eps).ln();
        assert!((l0_surrogate(eps, eps) - expect).abs() < 1e-15);
    }

    #[test]
    fn surrogate_tends_to_the_indicator() {
        for eps in [1e-2, 1e-3, 1e-4] {
            assert_eq!(l0_surrogate(0.0, eps), 0.0);
        }
        let at = |eps: f64| l0_surrogate(0.05, eps);
        assert!(at(1e-2) < at(1e-3) && at(1e-3) < at(1e-4));
        assert!(at(1e-4) > 0.67, "x=0.05 should read as mostly-on, got {}", at(1e-4));
    }

    #[test]
    fn surrogate_objective_frozen_value() {
        // One always-fixed station with op power forced to 100 W: at full
        // load the objective is 100 ln(1.001)/ln(1001).
        let sc = tiny_scenario(BsKind::Macro, Some(40.0), Some(1.0), &[1.0]);
        let p = sc.bss[0].op_power_max;
        let v = surrogate_objective(&[1.0], &sc, 1e-3) / p * 100.0;
        assert!((v - 0.01446715602174682).abs() < 1e-12, "scaled objective {v}");
    }

    #[test]
    fn weights_follow_the_reweighting_rule() {
        let sc = tiny_scenario(BsKind::Macro, Some(40.0), Some(0.0), &[1.0]);
        let w = mm_weights(&[0.7], &sc, 1e-3);
        assert!((w[0] - sc.bss[0].op_power_max).abs() < 1e-12, "q=0 weight is the op power");

        let sc = tiny_scenario(BsKind::Macro, Some(40.0), Some(1.0), &[1.0]);
        let eps = 1e-3f64;
        let w = mm_weights(&[1.0 - eps], &sc, eps);
        let expect = sc.bss[0].op_power_max / (1.0 + 1.0 / eps).ln();
        assert!((w[0] - expect).abs() < 1e-9);

        let lighter = mm_weights(&[0.1], &sc, eps)[0];
        let heavier = mm_weights(&[0.9], &sc, eps)[0];
        assert!(lighter > heavier, "emptier stations must look costlier");
    }

    #[test]
    fn power_examples() {
        // Pico tuned so its op power is 38 W: half fixed, half load-scaled.
        let sc = tiny_scenario(BsKind::Pico, Some(6.0 / 5.5), Some(0.5), &[1.0]);
        assert!((sc.bss[0].op_power_max - 38.0).abs() < 1e-9);
        assert!((total_power(&sc, &[0.5], 1e-4) - 28.5).abs() < 1e-9);

        // Fully fixed station: on costs everything, off costs nothing.
        let sc = tiny_scenario(BsKind::Macro, None, Some(1.0), &[1.0]);
        let p = sc.bss[0].op_power_max;
        assert!((total_power(&sc, &[0.3], 1e-4) - p).abs() < 1e-9);
        assert_eq!(total_power(&sc, &[0.0], 1e-4), 0.0);
    }

    #[test]
    fn inner_response_frozen_point() {
        let rates = m1();
        let (h, cut) = inner_response(&rates, &[1.0, 1.0], &[4.0, 4.0], &[0.2, 0.1]);
        assert!((h - 0.2).abs() < 1e-12, "dual value {h}");
        assert_eq!(cut.generator.pi, vec![(0, 1.0)]);
        assert_eq!(cut.generator.alpha, vec![(0, 0, 0, 1.0)]);
        assert_eq!(cut.rho, vec![1.0, 0.0]);
        assert_eq!(cut.served, vec![10.0, 0.0]);
    }

    #[test]
    fn inner_response_zero_multipliers_stays_quiet() {
        let rates = m1();
        let (h, cut) = inner_response(&rates, &[1.0, 1.0], &[0.0, 0.0], &[0.0, 0.0]);
        assert_eq!(h, 0.0);
        assert!(cut.generator.alpha.is_empty());
        assert_eq!(cut.generator.pi, vec![(0, 1.0)]);
    }

    #[test]
    fn engines_agree_on_m1() {
        let rates = m1();
        let d = [4.0, 4.0];
        let w = [1.0, 1.0];
        let cp = CutPlaneParams::default();
        let a = solve_weighted_lp(&rates, &d, &w, Engine::Direct, &cp, &mut CutPool::new()).unwrap();
        let mut pool = CutPool::new();
        let b = solve_weighted_lp(&rates, &d, &w, Engine::CutPlane, &cp, &mut pool).unwrap();
        let expect = 11.0 / 15.0;
        assert!((a.objective - expect).abs() < 1e-9, "direct {}", a.objective);
        assert!(
            (b.objective - expect).abs() < 1e-6 * (1.0 + expect),
            "cutplane {}",
            b.objective
        );
        assert!((a.mu[0] - 0.1).abs() < 1e-9 && (a.mu[1] - 1.0 / 12.0).abs() < 1e-9);
        assert!((b.mu[0] - 0.1).abs() < 1e-6 && (b.mu[1] - 1.0 / 12.0).abs() < 1e-6);
        b.allocation.check_feasible(2, 1e-8).unwrap();
        let served = b.allocation.achieved_rates(&rates);
        assert!(served[0] >= 4.0 - 1e-7 && served[1] >= 4.0 - 1e-7);

        // Warmed pool: the same solve again should converge immediately.
        let again = solve_weighted_lp(&rates, &d, &w, Engine::CutPlane, &cp, &mut pool).unwrap();
        assert!(again.iterations <= 2, "warm restart took {}", again.iterations);
    }

    #[test]
    fn one_link_closed_form() {
        let rates = RateTensor::from_raw(1, 1, 1, vec![10.0]).unwrap();
        let cp = CutPlaneParams::default();
        for engine in [Engine::Direct, Engine::CutPlane] {
            let sol =
                solve_weighted_lp(&rates, &[4.0], &[1.0], engine, &cp, &mut CutPool::new()).unwrap();
            assert!((sol.objective - 0.4).abs() < 1e-8, "{engine:?}: {}", sol.objective);
            assert!((sol.mu[0] - 0.1).abs() < 1e-6, "{engine:?}: mu {}", sol.mu[0]);
        }
    }

    #[test]
    fn zero_demand_solves_to_zero() {
        let rates = m1();
        let cp = CutPlaneParams::default();
        let sol = solve_weighted_lp(&rates, &[0.0, 0.0], &[1.0, 1.0], Engine::CutPlane, &cp, &mut CutPool::new())
            .unwrap();
        assert!(sol.objective.abs() < 1e-9);
        assert!(sol.allocation.alpha.is_empty());
    }

    #[test]
    fn zero_demand_network_powers_down() {
        let sc = tiny_scenario(BsKind::Macro, None, None, &[0.0, 0.0]);
        let patterns = patterns::reuse1(1).unwrap();
        let rates = RateTensor::from_raw(2, 1, 1, vec![5.0, 5.0]).unwrap();
        let res = minimize_energy(&sc, &patterns, &rates, &SolverParams::default()).unwrap();
        assert!(res.feasible);
        assert_eq!(res.total_power_w, 0.0);
        assert!(res.active_stations.is_empty());
        assert_eq!(res.outer_iterations, 0);
    }

    #[test]
    fn fixed_power_station_pays_full_price_at_partial_load() {
        let sc = tiny_scenario(BsKind::Macro, None, Some(1.0), &[3.0]);
        let patterns = patterns::reuse1(1).unwrap();
        let rates = RateTensor::from_raw(1, 1, 1, vec![10.0]).unwrap();
        let res = minimize_energy(&sc, &patterns, &rates, &SolverParams::default()).unwrap();
        assert!(res.feasible);
        assert!((res.rho[0] - 0.3).abs() < 1e-6, "load {}", res.rho[0]);
        let p = sc.bss[0].op_power_max;
        assert!((res.total_power_w - p).abs() < 1e-6, "power {}", res.total_power_w);
        assert!(res.outer_iterations <= 3);
        assert_eq!(res.active_stations, vec![0]);
    }

    #[test]
    fn infeasible_demand_is_flagged_not_solved() {
        let sc = tiny_scenario(BsKind::Macro, None, None, &[1e12]);
        let patterns = patterns::reuse1(1).unwrap();
        let rates = RateTensor::from_raw(1, 1, 1, vec![10.0]).unwrap();
        let res = minimize_energy(&sc, &patterns, &rates, &SolverParams::default()).unwrap();
        assert!(!res.feasible);
        assert!(res.total_power_w.is_nan());
        assert!(res.allocation.is_none());
    }

    #[test]
    fn surrogate_descends_along_the_outer_loop() {
        // Two stations, full pattern set; the reweighting should settle on
        // one station and never let the surrogate rise.
        let mut config = ScenarioConfig::default();
        config.network.stations = Some(vec![
            StationSpec { kind: BsKind::Macro, x_m: 0.0, y_m: 0.0, tx_power_w: None, q: None },
            StationSpec { kind: BsKind::Pico, x_m: 50.0, y_m: 0.0, tx_power_w: None, q: None },
        ]);
        config.network.test_points = Some(vec![
            TestPointSpec { x_m: 10.0, y_m: 0.0 },
            TestPointSpec { x_m: 40.0, y_m: 0.0 },
        ]);
        config.demand.uniform_bps = Some(1.0);
        config.demand.per_test_point = None;
        let sc = build_scenario(&config).unwrap();
        let patterns = PatternSet::from_bit_strings(&[
            "10".to_string(),
            "01".to_string(),
            "11".to_string(),
        ])
        .unwrap();
        let rates = m1();
        let sc_demands = sc.demands();
        assert_eq!(sc_demands, vec![1.0, 1.0]);

        for engine in [Engine::Direct, Engine::CutPlane] {
            let params = SolverParams { engine, ..SolverParams::default() };
            let res = minimize_energy(&sc, &patterns, &rates, &params).unwrap();
            assert!(res.feasible, "{engine:?}");
            for pair in res.surrogate_trace.windows(2) {
                assert!(
                    pair[1] <= pair[0] + 1e-9 * (1.0 + pair[0].abs()),
                    "{engine:?}: surrogate rose from {} to {}",
                    pair[0],
                    pair[1]
                );
            }
            for (k, &s) in res.achieved_rates.iter().enumerate() {
                assert!(s >= sc_demands[k] - 1e-6, "{engine:?}: point {k} got {s}");
            }
        }
    }

    #[test]
    fn rounding_restores_a_station_the_demand_needs() {
        // The single station serves the demand with a load under the rounding
        // threshold, so the rounding first switches it off, finds the empty
        // network infeasible, and must restore it.
        let sc = tiny_scenario(BsKind::Macro, None, Some(1.0), &[1.0]);
        let patterns = patterns::reuse1(1).unwrap();
        let rates = RateTensor::from_raw(1, 1, 1, vec![200.0]).unwrap();
        let params = SolverParams { rho_off: 0.01, ..SolverParams::default() };
        let res = minimize_energy(&sc, &patterns, &rates, &params).unwrap();
        assert!(res.feasible);
        assert!((res.rho[0] - 0.005).abs() < 1e-9, "load {}", res.rho[0]);
        assert_eq!(res.restored, vec![0]);
        assert_eq!(res.active_stations, vec![0]);
        let p = sc.bss[0].op_power_max;
        assert!((res.total_power_w - p).abs() < 1e-9, "fixed power must be paid");
    }

    #[test]
    fn rounding_switches_off_an_idle_station() {
        // Station 0 alone covers the demand cheaply; station 1's patterns are
        // available but the reweighting should park it at zero and rounding
        // should drop it from the active set.
        let mut config = ScenarioConfig::default();
        config.network.stations = Some(vec![
            StationSpec { kind: BsKind::Macro, x_m: 0.0, y_m: 0.0, tx_power_w: None, q: None },
            StationSpec { kind: BsKind::Macro, x_m: 500.0, y_m: 0.0, tx_power_w: None, q: None },
        ]);
        config.network.test_points = Some(vec![TestPointSpec { x_m: 10.0, y_m: 0.0 }]);
        config.demand.uniform_bps = Some(4.0);
        config.demand.per_test_point = None;
        let sc = build_scenario(&config).unwrap();
        let patterns = patterns::enumerate_all(2).unwrap();
        let rates = RateTensor::from_raw(
            1,
            2,
            4,
            // Patterns 00, 10, 01, 11: station 0 fast, station 1 slow.
            vec![0.0, 10.0, 0.0, 8.0, 0.0, 0.0, 2.0, 1.0],
        )
        .unwrap();
        let res = minimize_energy(&sc, &patterns, &rates, &SolverParams::default()).unwrap();
        assert!(res.feasible);
        assert_eq!(res.active_stations, vec![0]);
        assert!(res.rho[1].abs() < 1e-9, "station 1 load {}", res.rho[1]);
        assert!(res.restored.is_empty());
        // Power counts only station 0.
        let p = sc.bss[0].op_power_max;
        let expect = res.rho[0] * (1.0 - sc.bss[0].fixed_fraction) * p + sc.bss[0].fixed_fraction * p;
        assert!((res.total_power_w - expect).abs() < 1e-9);
    }

    #[test]
    fn multiplier_box_scales_with_weights_and_rates() {
        let rates = m1();
        let bx = multiplier_box(&rates, &[2.0, 4.0]);
        assert!((bx[0] - 1e3 * 4.0 / 3.0).abs() < 1e-9, "box {bx:?}");
        assert!((bx[1] - 1e3 * 4.0 / 2.0).abs() < 1e-9);
        let dead = RateTensor::from_raw(1, 1, 1, vec![0.0]).unwrap();
        assert_eq!(multiplier_box(&dead, &[1.0]), vec![0.0]);
    }
}
