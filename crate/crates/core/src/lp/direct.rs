//! Direct solution of the weighted-load allocation problem.
//!
//! Builds the full linear program over every share and spectrum fraction and
//! hands it to the simplex engine. Costs grow fast with the pattern count, so
//! this route serves small instances and acts as the reference the
//! cutting-plane solver is checked against.

use super::simplex::{self, SimplexOptions};
use super::{LinearProgram, LpSolution, LpStatus, Sense};
use crate::allocation::Allocation;
use crate::error::{Error, Result};
use crate::rates::RateTensor;

#[derive(Debug, Clone)]
pub struct DirectSolution {
    /// Minimal weighted load sum_b w_b rho_b.
    pub objective: f64,
    pub allocation: Allocation,
    /// Marginal cost per unit of demand, one entry per test point.
    pub demand_duals: Vec<f64>,
    pub lp_iterations: usize,
}

/// Shares below this are treated as structural zeros when extracting the
/// sparse allocation from an LP vertex.
const SHARE_DROP_TOL: f64 = 1e-12;

fn var_alpha(k: usize, b: usize, i: usize, b_count: usize, i_count: usize) -> usize {
    (k * b_count + b) * i_count + i
}

/// Rejects demands no allocation could meet because the test point has no
/// link with positive rate.
pub fn check_servable(rates: &RateTensor, demands: &[f64]) -> Result<()> {
    for (k, &d) in demands.iter().enumerate() {
        if d < 0.0 || !d.is_finite() {
            return Err(Error::invariant("demands", format!("demand[{k}] = {d}")));
        }
        if d > 0.0 && rates.min_positive_rate_for(k).is_none() {
            return Err(Error::Infeasible(format!(
                "test point {k} has positive demand but no usable link"
            )));
        }
    }
    Ok(())
}

/// Minimizes sum_b w_b rho_b over the full allocation polytope subject to
/// per-point demand, by one monolithic LP over all shares and fractions.
pub fn solve_weighted_load(
    rates: &RateTensor,
    demands: &[f64],
    weights: &[f64],
) -> Result<DirectSolution> {
    let (k_count, b_count, i_count) = (rates.k_count(), rates.b_count(), rates.i_count());
    if demands.len() != k_count {
        return Err(Error::invariant("demands", "length mismatch with rate tensor"));
    }
    if weights.len() != b_count {
        return Err(Error::invariant("weights", "length mismatch with rate tensor"));
    }
    if i_count == 0 {
        return Err(Error::invariant("patterns", "empty pattern set"));
    }
    check_servable(rates, demands)?;

    let lp = build_lp(rates, demands, weights);
    let sol = simplex::solve(&lp, &direct_options())?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => {
            return Err(Error::Infeasible(
                "demands exceed what any allocation can deliver".to_string(),
            ));
        }
        LpStatus::Unbounded => {
            return Err(Error::Lp("weighted load problem cannot be unbounded".to_string()));
        }
    }

    let allocation = allocation_from_point(&sol.x, k_count, b_count, i_count);
    let demand_duals: Vec<f64> = sol.row_duals[..k_count].iter().map(|&y| y.max(0.0)).collect();
    Ok(DirectSolution {
        objective: sol.objective,
        allocation,
        demand_duals,
        lp_iterations: sol.iterations,
    })
}

/// Extracts the sparse allocation from a raw LP point whose leading entries
/// are laid out as [alpha..., pi...], parking the fractions in canonical
/// form. Trailing entries (extra variables of the caller's LP) are ignored.
pub(crate) fn allocation_from_point(
    x: &[f64],
    k_count: usize,
    b_count: usize,
    i_count: usize,
) -> Allocation {
    let n_alpha = k_count * b_count * i_count;
    let mut allocation = Allocation::zero(i_count);
    for k in 0..k_count {
        for b in 0..b_count {
            for i in 0..i_count {
                let v = x[var_alpha(k, b, i, b_count, i_count)];
                if v > SHARE_DROP_TOL {
                    allocation.set_share(k, b, i, v);
                }
            }
        }
    }
    for i in 0..i_count {
        allocation.pi[i] = x[n_alpha + i].max(0.0);
    }
    canonicalize_fractions(&mut allocation, b_count);
    allocation
}

/// Rewrites the fractions of an optimal allocation into the canonical vertex
/// form: each pattern keeps exactly the spectrum its busiest station uses,
/// and the leftover is parked on the lowest-index pattern that carries any
/// traffic (pattern 0 when the allocation is empty). Share values and the
/// objective are untouched, and feasibility is preserved because no fraction
/// drops below its usage.
pub fn canonicalize_fractions(allocation: &mut Allocation, b_count: usize) {
    let i_count = allocation.i_count();
    let mut used = vec![0.0f64; i_count];
    let mut per_station = vec![0.0f64; b_count * i_count];
    for (&(_, b, i), &v) in &allocation.alpha {
        per_station[b * i_count + i] += v;
    }
    for i in 0..i_count {
        for b in 0..b_count {
            used[i] = used[i].max(per_station[b * i_count + i]);
        }
    }
    let total: f64 = used.iter().sum();
    let surplus = (1.0 - total).max(0.0);
    let target = (0..i_count).find(|&i| used[i] > 0.0).unwrap_or(0);
    for i in 0..i_count {
        allocation.pi[i] = used[i];
    }
    allocation.pi[target] += surplus;
}

/// Exact verifier for a claimed solution: feasibility of the allocation,
/// demand satisfaction, and agreement between the claimed objective and the
/// recomputed weighted load.
pub fn check_solution(
    rates: &RateTensor,
    demands: &[f64],
    weights: &[f64],
    solution: &DirectSolution,
    tol: f64,
) -> Result<()> {
    solution.allocation.check_feasible(rates.b_count(), tol)?;
    let served = solution.allocation.achieved_rates(rates);
    for (k, (&got, &want)) in served.iter().zip(demands).enumerate() {
        if got < want - tol * (1.0 + want) {
            return Err(Error::invariant(
                "demands",
                format!("test point {k} gets {got} of {want}"),
            ));
        }
    }
    let cost = solution.allocation.cost(weights);
    if (cost - solution.objective).abs() > tol * (1.0 + cost.abs()) {
        return Err(Error::invariant(
            "objective",
            format!("claimed {} but allocation costs {cost}", solution.objective),
        ));
    }
    Ok(())
}

/// Assembles the monolithic LP: one share variable per (point, station,
/// pattern), one fraction variable per pattern.
fn build_lp(rates: &RateTensor, demands: &[f64], weights: &[f64]) -> LinearProgram {
    let (k_count, b_count, i_count) = (rates.k_count(), rates.b_count(), rates.i_count());
    let n_alpha = k_count * b_count * i_count;
    let mut lp = LinearProgram::new(n_alpha + i_count, false);
    for k in 0..k_count {
        for b in 0..b_count {
            for i in 0..i_count {
                lp.objective[var_alpha(k, b, i, b_count, i_count)] = weights[b];
            }
        }
    }
    // Demand rows: delivered throughput covers each test point.
    for k in 0..k_count {
        let mut coeffs = Vec::new();
        for b in 0..b_count {
            for i in 0..i_count {
                let r = rates.rate(k, b, i);
                if r > 0.0 {
                    coeffs.push((var_alpha(k, b, i, b_count, i_count), r));
                }
            }
        }
        lp.add_row(coeffs, Sense::Ge, demands[k]);
    }
    // Capacity rows: shares on a station-pattern pair fit in its fraction.
    for b in 0..b_count {
        for i in 0..i_count {
            let mut coeffs: Vec<(usize, f64)> = (0..k_count)
                .map(|k| (var_alpha(k, b, i, b_count, i_count), 1.0))
                .collect();
            coeffs.push((n_alpha + i, -1.0));
            lp.add_row(coeffs, Sense::Le, 0.0);
        }
    }
    // Fractions split one unit of spectrum.
    lp.add_row((0..i_count).map(|i| (n_alpha + i, 1.0)).collect(), Sense::Eq, 1.0);
    lp
}

/// Raw LP access for callers that need the vertex itself (sparsity checks).
pub fn solve_weighted_load_lp(
    rates: &RateTensor,
    demands: &[f64],
    weights: &[f64],
) -> Result<(LinearProgram, LpSolution)> {
    let lp = build_lp(rates, demands, weights);
    let sol = simplex::solve(&lp, &direct_options())?;
    Ok((lp, sol))
}

/// The monolithic route deliberately runs as a plain dense solver: it is the
/// baseline the decomposed route is compared against, on answers and on cost.
pub(crate) fn direct_options() -> SimplexOptions {
    SimplexOptions { dense: true, ..SimplexOptions::default() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::verify_solution;

    /// Two stations, three patterns: each station alone, then both together.
    /// Worked out by hand; every number here is independently derivable.
    pub(crate) fn example_tensor() -> RateTensor {
        RateTensor::from_raw(
            2,
            2,
            3,
            vec![
                // k = 0: station 0 rates over patterns, then station 1.
                10.0, 0.0, 5.0, 0.0, 8.0, 3.0,
                // k = 1
                6.0, 0.0, 2.0, 0.0, 12.0, 7.0,
            ],
        )
        .unwrap()
    }

    #[test]
    fn worked_example_matches_hand_solution() {
        let rates = example_tensor();
        let sol = solve_weighted_load(&rates, &[4.0, 4.0], &[1.0, 1.0]).unwrap();
        // Cheapest service: point 0 by station 0 alone (rate 10, 0.4 load),
        // point 1 by station 1 alone (rate 12, 1/3 load).
        assert!((sol.objective - 11.0 / 15.0).abs() < 1e-9, "objective {}", sol.objective);
        assert!((sol.allocation.share(0, 0, 0) - 0.4).abs() < 1e-9);
        assert!((sol.allocation.share(1, 1, 1) - 1.0 / 3.0).abs() < 1e-9);
        assert_eq!(sol.allocation.alpha.len(), 2);
        // Canonical fractions: usage plus all surplus on the first busy pattern.
        assert!((sol.allocation.pi[0] - 2.0 / 3.0).abs() < 1e-9);
        assert!((sol.allocation.pi[1] - 1.0 / 3.0).abs() < 1e-9);
        assert!(sol.allocation.pi[2].abs() < 1e-12);
        // Marginal cost of demand: one unit of load buys 10 (resp. 12) bit/s.
        assert!((sol.demand_duals[0] - 0.1).abs() < 1e-9);
        assert!((sol.demand_duals[1] - 1.0 / 12.0).abs() < 1e-9);
        check_solution(&rates, &[4.0, 4.0], &[1.0, 1.0], &sol, 1e-9).unwrap();
    }

    #[test]
    fn lp_certificate_on_worked_example() {
        let rates = example_tensor();
        let (lp, sol) = solve_weighted_load_lp(&rates, &[4.0, 4.0], &[1.0, 1.0]).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        verify_solution(&lp, &sol, 1e-7).unwrap();
    }

    #[test]
    fn single_point_analytic() {
        let rates = RateTensor::from_raw(1, 1, 1, vec![10.0]).unwrap();
        let sol = solve_weighted_load(&rates, &[4.0], &[1.0]).unwrap();
        assert!((sol.objective - 0.4).abs() < 1e-12);
        assert!((sol.demand_duals[0] - 0.1).abs() < 1e-12);
    }

    #[test]
    fn zero_demand_costs_nothing() {
        let rates = example_tensor();
        let sol = solve_weighted_load(&rates, &[0.0, 0.0], &[1.0, 1.0]).unwrap();
        assert_eq!(sol.objective, 0.0);
        assert!(sol.allocation.alpha.is_empty());
        // Empty allocations park the whole spectrum on pattern 0.
        assert!((sol.allocation.pi[0] - 1.0).abs() < 1e-12);
        assert_eq!(sol.allocation.active_pattern_count(1e-9), 1);
    }

    #[test]
    fn infeasible_demand_reported() {
        let rates = example_tensor();
        let err = solve_weighted_load(&rates, &[1000.0, 1000.0], &[1.0, 1.0]).unwrap_err();
        assert!(matches!(err, Error::Infeasible(_)), "got {err:?}");
    }

    #[test]
    fn unreachable_point_reported() {
        // Second test point has zero rate everywhere.
        let rates = RateTensor::from_raw(2, 1, 1, vec![10.0, 0.0]).unwrap();
        let err = solve_weighted_load(&rates, &[1.0, 1.0], &[1.0]).unwrap_err();
        assert!(matches!(err, Error::Infeasible(_)), "got {err:?}");
        solve_weighted_load(&rates, &[1.0, 0.0], &[1.0]).unwrap();
    }

    #[test]
    fn weights_steer_station_choice() {
        let rates = example_tensor();
        // Make station 0 very expensive: point 0 should move to station 1,
        // which serves it at rate 8 in pattern 1 or 3 in pattern 2.
        let sol = solve_weighted_load(&rates, &[4.0, 4.0], &[100.0, 1.0]).unwrap();
        let loads = sol.allocation.loads(2);
        assert!(loads[0] < 1e-9, "station 0 still loaded: {loads:?}");
        check_solution(&rates, &[4.0, 4.0], &[100.0, 1.0], &sol, 1e-9).unwrap();
        assert!((sol.objective - (0.5 + 1.0 / 3.0)).abs() < 1e-9);
    }

    #[test]
    fn canonical_fraction_support_stays_small() {
        // Vertex solutions have few busy patterns even when many exist.
        let mut kbi = Vec::new();
        for k in 0..3usize {
            for b in 0..2usize {
                for i in 0..16usize {
                    let r = ((k + 2 * b + i) % 7 + 1) as f64;
                    kbi.push(r * 1.0e6);
                }
            }
        }
        let rates = RateTensor::from_raw(3, 2, 16, kbi).unwrap();
        let sol = solve_weighted_load(&rates, &[2.0e6, 1.0e6, 3.0e6], &[1.0, 2.0]).unwrap();
        let support = sol.allocation.active_pattern_count(0.0);
        assert!(support <= 3 + 1, "support {support} too wide");
        check_solution(&rates, &[2.0e6, 1.0e6, 3.0e6], &[1.0, 2.0], &sol, 1e-9).unwrap();
    }
}
