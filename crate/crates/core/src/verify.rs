//! Randomized cross-checks pitting the fast solution routes against
//! independent reference computations on small instances.
//!
//! Each suite generates synthetic networks from a seed, solves them along
//! two routes that share no code path (monolithic LP versus cutting plane,
//! closed-form pattern response versus exhaustive enumeration), and records
//! any disagreement. The suites are deterministic given their seed, so a
//! reported failure can be replayed.

use crate::cutplane::{CutPlaneParams, CutPool, Engine, TraceRow};
use crate::energy::{self, inner_response};
use crate::error::{Error, Result};
use crate::feasibility;
use crate::lp::direct;
use crate::lp::{LinearProgram, LpStatus, Sense};
use crate::lp::simplex::{self, SimplexOptions};
use crate::patterns::{self, PatternSet};
use crate::rates::RateTensor;
use crate::scenario::derive_seed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::BTreeSet;

/// Outcome of one randomized suite. `failures` holds one line per deviating
/// instance (capped), always tagged with the instance seed.
#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub name: String,
    pub instances: usize,
    pub failure_count: usize,
    pub failures: Vec<String>,
}

const FAILURE_CAP: usize = 20;

impl SuiteReport {
    fn new(name: &str) -> SuiteReport {
        SuiteReport {
            name: name.to_string(),
            instances: 0,
            failure_count: 0,
            failures: Vec::new(),
        }
    }

    fn fail(&mut self, line: String) {
        self.failure_count += 1;
        if self.failures.len() < FAILURE_CAP {
            self.failures.push(line);
        }
    }

    pub fn passed(&self) -> bool {
        self.failure_count == 0
    }

    pub fn summary(&self) -> String {
        if self.passed() {
            format!("{}: {} instances, all agree", self.name, self.instances)
        } else {
            format!(
                "{}: {} instances, {} disagreements",
                self.name, self.instances, self.failure_count
            )
        }
    }
}

/// Per-link signal powers for a synthetic downlink: `signals[b][k]` is the
/// received power at point k from station b, already folded with the transmit
/// power. Paired with a common noise floor.
pub struct SignalField {
    pub signals: Vec<Vec<f64>>,
    pub noise: f64,
}

/// Draws a random signal field with gains spread over four decades, which
/// puts single-link spectral efficiencies in the 0.01..8 range.
pub fn random_signals(seed: u64, b_count: usize, k_count: usize) -> SignalField {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0x51f, b_count as u64, k_count as u64));
    let noise = 1e-3;
    let signals = (0..b_count)
        .map(|_| {
            let p: f64 = rng.gen_range(0.5..2.0);
            (0..k_count)
                .map(|_| p * 10f64.powf(rng.gen_range(-5.0..-1.0)))
                .collect()
        })
        .collect();
    SignalField { signals, noise }
}

/// Spectral-efficiency tensor for a signal field under a pattern set. Off
/// stations get zero rows and added interferers can only lower a rate, so
/// the structural invariants hold by construction.
pub fn rates_from_signals(field: &SignalField, patterns: &PatternSet) -> Result<RateTensor> {
    let b_count = field.signals.len();
    let k_count = field.signals.first().map_or(0, Vec::len);
    let i_count = patterns.len();
    let mut data = vec![0.0; k_count * b_count * i_count];
    let mut total = vec![0.0; k_count];
    for i in 0..i_count {
        for t in total.iter_mut() {
            *t = 0.0;
        }
        for b in 0..b_count {
            if patterns.is_on(i, b) {
                for (t, &s) in total.iter_mut().zip(&field.signals[b]) {
                    *t += s;
                }
            }
        }
        for b in 0..b_count {
            if !patterns.is_on(i, b) {
                continue;
            }
            for k in 0..k_count {
                let s = field.signals[b][k];
                let sinr = s / (field.noise + total[k] - s);
                data[(k * b_count + b) * i_count + i] = (1.0 + sinr).log2();
            }
        }
    }
    RateTensor::from_raw(k_count, b_count, i_count, data)
}

/// Random distinct pattern subset of a given size; the all-on pattern is
/// always included so every instance stays connected.
pub fn random_patterns(b_count: usize, i_count: usize, seed: u64) -> Result<PatternSet> {
    if b_count == 0 || b_count > 63 {
        return Err(Error::invariant("b_count", "must lie in 1..=63"));
    }
    let space = 1u128 << b_count;
    if (i_count as u128) > space {
        return Err(Error::invariant(
            "i_count",
            format!("only {space} distinct patterns exist for {b_count} stations"),
        ));
    }
    let full: u64 = (0..b_count).fold(0, |m, b| m | (1 << b));
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0x9a7, b_count as u64, i_count as u64));
    let mut masks = BTreeSet::new();
    masks.insert(full);
    while masks.len() < i_count {
        masks.insert(rng.gen_range(0..=full));
    }
    let strings: Vec<String> = masks
        .into_iter()
        .map(|m| {
            (0..b_count)
                .map(|b| if m & (1 << b) != 0 { '1' } else { '0' })
                .collect()
        })
        .collect();
    PatternSet::from_bit_strings(&strings)
}

/// One small fully-enumerated instance: rates over all 2^B patterns plus
/// random positive station weights.
pub struct SmallInstance {
    pub rates: RateTensor,
    pub patterns: PatternSet,
    pub weights: Vec<f64>,
}

pub fn small_instance(seed: u64, b_count: usize, k_count: usize) -> Result<SmallInstance> {
    let patterns = patterns::enumerate_all(b_count)?;
    let field = random_signals(seed, b_count, k_count);
    let rates = rates_from_signals(&field, &patterns)?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0x3e1, b_count as u64, 0));
    let weights = (0..b_count).map(|_| rng.gen_range(0.5..2.0)).collect();
    Ok(SmallInstance { rates, patterns, weights })
}

/// Comfortably feasible demands: each point asks for a random slice of what
/// an even split of the balanced throughput would give it.
fn easy_demands(rates: &RateTensor, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    let k_count = rates.k_count();
    let uniform = vec![1.0; k_count];
    let balance =
        feasibility::rate_balance(rates, &uniform, Engine::Direct, &CutPlaneParams::default())?;
    let per_point = balance.r_sum / k_count as f64;
    Ok((0..k_count)
        .map(|_| rng.gen_range(0.15..0.7) * per_point)
        .collect())
}

fn check_minimize_trace(trace: &[TraceRow], seed: u64, report: &mut SuiteReport) {
    for pair in trace.windows(2) {
        let scale = 1e-9 * (1.0 + pair[0].master_bound.abs());
        if pair[1].master_bound > pair[0].master_bound + scale {
            report.fail(format!(
                "seed {seed}: master bound rose from {} to {} at iteration {}",
                pair[0].master_bound, pair[1].master_bound, pair[1].iteration
            ));
        }
    }
    for row in trace {
        if row.dual_value > row.master_bound + 1e-9 * (1.0 + row.master_bound.abs()) {
            report.fail(format!(
                "seed {seed}: response value {} exceeds the bound {} at iteration {}",
                row.dual_value, row.master_bound, row.iteration
            ));
        }
    }
}

/// Suite 1: the cutting-plane route must reproduce the monolithic LP optimum
/// on fully enumerated instances, every optimal vertex must use few patterns,
/// and every bound history must be monotone.
pub fn oracle_equivalence_suite(instances: usize, base_seed: u64) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("weighted-load engines");
    let cp = CutPlaneParams::default();
    for n in 0..instances {
        let seed = derive_seed(base_seed, 1, n as u64, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b_count = rng.gen_range(1..=4);
        let k_count = rng.gen_range(1..=6);
        let inst = small_instance(seed, b_count, k_count)?;
        let demands = easy_demands(&inst.rates, &mut rng)?;
        report.instances += 1;

        let (_lp, raw) = direct::solve_weighted_load_lp(&inst.rates, &demands, &inst.weights)?;
        if raw.status != LpStatus::Optimal {
            report.fail(format!("seed {seed}: direct LP ended {:?} on a feasible instance", raw.status));
            continue;
        }
        let n_alpha = k_count * b_count * inst.rates.i_count();
        let support = (0..inst.rates.i_count())
            .filter(|&i| raw.x[n_alpha + i] > 1e-9)
            .count();
        if support > k_count + b_count + 1 {
            report.fail(format!(
                "seed {seed}: optimal vertex uses {support} patterns, limit is {}",
                k_count + b_count + 1
            ));
        }

        let mut pool = CutPool::new();
        let cut = match energy::solve_weighted_lp(
            &inst.rates,
            &demands,
            &inst.weights,
            Engine::CutPlane,
            &cp,
            &mut pool,
        ) {
            Ok(sol) => sol,
            Err(e) => {
                report.fail(format!("seed {seed}: cutting-plane route failed: {e}"));
                continue;
            }
        };
        if (cut.objective - raw.objective).abs() > 1e-6 * (1.0 + raw.objective.abs()) {
            report.fail(format!(
                "seed {seed}: objectives disagree, direct {} vs cutting-plane {}",
                raw.objective, cut.objective
            ));
        }
        if let Err(e) = cut.allocation.check_feasible(b_count, 1e-7) {
            report.fail(format!("seed {seed}: recovered allocation invalid: {e}"));
        }
        let served = cut.allocation.achieved_rates(&inst.rates);
        for (k, (&got, &want)) in served.iter().zip(&demands).enumerate() {
            if got < want - 1e-6 * (1.0 + want) {
                report.fail(format!(
                    "seed {seed}: recovered allocation serves point {k} only {got} of {want}"
                ));
            }
        }
        check_minimize_trace(&cut.trace, seed, &mut report);
    }
    Ok(report)
}

/// Exhaustive reference for the pattern response: per pattern, each station
/// independently picks its best option from an explicit candidate list, and
/// the cheapest pattern wins. Written against the same tie-break convention
/// (first index at strict improvement).
fn brute_force_inner(rates: &RateTensor, weights: &[f64], demands: &[f64], mu: &[f64]) -> (f64, usize) {
    let mut best = f64::INFINITY;
    let mut best_i = 0;
    for i in 0..rates.i_count() {
        let score: f64 = (0..rates.b_count())
            .map(|b| {
                (0..rates.k_count())
                    .map(|k| weights[b] - mu[k] * rates.rate(k, b, i))
                    .fold(0.0f64, f64::min)
            })
            .sum();
        if score < best {
            best = score;
            best_i = i;
        }
    }
    let tail: f64 = demands.iter().zip(mu).map(|(&d, &m)| d * m).sum();
    (best + tail, best_i)
}

/// LP reference for the pattern response: minimize the priced shares over the
/// allocation polytope directly.
fn lp_inner(rates: &RateTensor, weights: &[f64], mu: &[f64]) -> Result<f64> {
    let (k_count, b_count, i_count) = (rates.k_count(), rates.b_count(), rates.i_count());
    let n_alpha = k_count * b_count * i_count;
    let mut lp = LinearProgram::new(n_alpha + i_count, false);
    for k in 0..k_count {
        for b in 0..b_count {
            for i in 0..i_count {
                lp.objective[(k * b_count + b) * i_count + i] = weights[b] - mu[k] * rates.rate(k, b, i);
            }
        }
    }
    for b in 0..b_count {
        for i in 0..i_count {
            let mut coeffs: Vec<(usize, f64)> = (0..k_count)
                .map(|k| ((k * b_count + b) * i_count + i, 1.0))
                .collect();
            coeffs.push((n_alpha + i, -1.0));
            lp.add_row(coeffs, Sense::Le, 0.0);
        }
    }
    lp.add_row((0..i_count).map(|i| (n_alpha + i, 1.0)).collect(), Sense::Eq, 1.0);
    let sol = simplex::solve(&lp, &SimplexOptions::default())?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Lp(format!("pattern response LP ended {:?}", sol.status)));
    }
    Ok(sol.objective)
}

/// Suite 2: the closed-form pattern response must match exhaustive
/// enumeration to near machine precision on arbitrary tensors, and the cut it
/// returns must reproduce the claimed value.
pub fn inner_response_suite(instances: usize, base_seed: u64) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("pattern response");
    for n in 0..instances {
        let seed = derive_seed(base_seed, 2, n as u64, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b_count = rng.gen_range(1..=5);
        let k_count = rng.gen_range(1..=6);
        let i_cap = (200 / (b_count * k_count)).max(1).min(16);
        let i_count = rng.gen_range(1..=i_cap);
        let data: Vec<f64> = (0..k_count * b_count * i_count)
            .map(|_| {
                if rng.gen_bool(0.3) {
                    0.0
                } else {
                    rng.gen_range(0.05..8.0)
                }
            })
            .collect();
        let rates = RateTensor::from_raw(k_count, b_count, i_count, data)?;
        let weights: Vec<f64> = (0..b_count).map(|_| rng.gen_range(0.05..2.0)).collect();
        let mu: Vec<f64> = (0..k_count)
            .map(|_| if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(0.0..2.0) })
            .collect();
        let demands: Vec<f64> = (0..k_count).map(|_| rng.gen_range(0.0..3.0)).collect();
        report.instances += 1;

        let (h, cut) = inner_response(&rates, &weights, &demands, &mu);
        let (h_ref, i_ref) = brute_force_inner(&rates, &weights, &demands, &mu);
        if (h - h_ref).abs() > 1e-12 * (1.0 + h_ref.abs()) {
            report.fail(format!("seed {seed}: closed form {h} vs enumeration {h_ref}"));
        }
        let lead = cut.generator.lead_pattern();
        if lead != i_ref {
            report.fail(format!("seed {seed}: pattern choice {lead} vs enumeration {i_ref}"));
        }

        // The cut must evaluate back to the claimed value at its own point.
        let from_cut = cut.value_at(&weights, &demands, &mu);
        if (from_cut - h).abs() > 1e-12 * (1.0 + h.abs()) {
            report.fail(format!("seed {seed}: cut evaluates to {from_cut}, oracle said {h}"));
        }

        // Occasional heavyweight cross-check through an explicit LP.
        if n % 10 == 0 {
            let tail: f64 = demands.iter().zip(&mu).map(|(&d, &m)| d * m).sum();
            let lp_h = lp_inner(&rates, &weights, &mu)? + tail;
            if (lp_h - h).abs() > 1e-8 * (1.0 + h.abs()) {
                report.fail(format!("seed {seed}: LP reference {lp_h} vs closed form {h}"));
            }
        }
    }
    Ok(report)
}

fn check_balance_trace(trace: &[TraceRow], seed: u64, report: &mut SuiteReport) {
    for pair in trace.windows(2) {
        if pair[1].master_bound < pair[0].master_bound - 1e-9 * (1.0 + pair[0].master_bound.abs()) {
            report.fail(format!(
                "seed {seed}: balance bound dropped from {} to {} at iteration {}",
                pair[0].master_bound, pair[1].master_bound, pair[1].iteration
            ));
        }
    }
    for row in trace {
        if row.dual_value < row.master_bound - 1e-9 * (1.0 + row.master_bound.abs()) {
            report.fail(format!(
                "seed {seed}: balance response {} dipped under the bound {} at iteration {}",
                row.dual_value, row.master_bound, row.iteration
            ));
        }
    }
}

/// Suite 3: both balance engines must agree on the achievable throughput, and
/// the cheap feasibility verdict must match an actual LP solve, on a mix of
/// clearly feasible and clearly infeasible instances.
pub fn feasibility_suite(instances: usize, base_seed: u64) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("feasibility verdicts");
    let cp = CutPlaneParams::default();
    for n in 0..instances {
        let seed = derive_seed(base_seed, 3, n as u64, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b_count = rng.gen_range(1..=4);
        let k_count = rng.gen_range(1..=6);
        let inst = small_instance(seed, b_count, k_count)?;

        // Calibrate against the direct balance so the demand total lands a
        // known fraction above or below the achievable throughput.
        let shape: Vec<f64> = (0..k_count).map(|_| rng.gen_range(0.5..1.5)).collect();
        let probe = feasibility::rate_balance(&inst.rates, &shape, Engine::Direct, &cp)?;
        if probe.r_sum <= 0.0 {
            continue;
        }
        let stretch = if rng.gen_bool(0.5) {
            rng.gen_range(0.30..0.85)
        } else {
            rng.gen_range(1.15..1.70)
        };
        let shape_sum: f64 = shape.iter().sum();
        let demands: Vec<f64> = shape
            .iter()
            .map(|u| stretch * u * probe.r_sum / shape_sum)
            .collect();
        report.instances += 1;

        let bal_d = feasibility::rate_balance(&inst.rates, &demands, Engine::Direct, &cp)?;
        let bal_c = feasibility::rate_balance(&inst.rates, &demands, Engine::CutPlane, &cp)?;
        if (bal_d.r_sum - bal_c.r_sum).abs() > 1e-6 * (1.0 + bal_d.r_sum.abs()) {
            report.fail(format!(
                "seed {seed}: balance throughput disagrees, direct {} vs cutting-plane {}",
                bal_d.r_sum, bal_c.r_sum
            ));
        }
        check_balance_trace(&bal_c.trace, seed, &mut report);

        let verdict_d = feasibility::is_feasible(&bal_d, &demands);
        let verdict_c = feasibility::is_feasible(&bal_c, &demands);
        let unit = vec![1.0; b_count];
        let lp_verdict = match direct::solve_weighted_load(&inst.rates, &demands, &unit) {
            Ok(_) => true,
            Err(Error::Infeasible(_)) => false,
            Err(e) => {
                report.fail(format!("seed {seed}: reference LP errored: {e}"));
                continue;
            }
        };
        if verdict_d != lp_verdict || verdict_c != lp_verdict {
            report.fail(format!(
                "seed {seed}: feasibility verdicts split (direct {verdict_d}, \
                 cutting-plane {verdict_c}, reference LP {lp_verdict}, stretch {stretch:.3})"
            ));
        }
    }
    Ok(report)
}

/// Suite 4: the rate model must honor its structural guarantees on a real
/// generated network: zero rate whenever a station is off, and no rate that
/// improves when an interferer switches on.
pub fn invariants_suite(seed: u64) -> Result<SuiteReport> {
    use crate::rates::{build_rate_tensor, RateMode};
    use crate::scenario::{build_scenario, ScenarioConfig};

    let mut report = SuiteReport::new("rate-model invariants");
    let mut config = ScenarioConfig::default();
    config.seed = seed;
    let scenario = build_scenario(&config)?;
    let curated = patterns::preselect(&scenario, &patterns::standard_strategies())?;
    let rates = build_rate_tensor(&scenario, &curated, &RateMode::Deterministic)?;
    report.instances += 1;
    if let Err(e) = rates.check_invariants(&curated) {
        report.fail(format!("seed {seed}: structural invariant broken: {e}"));
    }
    let violations = rates.monotonicity_violations(&curated);
    if violations > 0 {
        report.fail(format!(
            "seed {seed}: {violations} rates improve when an interferer turns on"
        ));
    }
    Ok(report)
}

/// Convenience wrapper used by both the command-line entry point and the
/// acceptance tests: runs every suite at its standard size.
pub fn run_all(oracle_n: usize, inner_n: usize, feas_n: usize, seed: u64) -> Result<Vec<SuiteReport>> {
    Ok(vec![
        oracle_equivalence_suite(oracle_n, seed)?,
        inner_response_suite(inner_n, seed)?,
        feasibility_suite(feas_n, seed)?,
        invariants_suite(seed)?,
    ])
}
