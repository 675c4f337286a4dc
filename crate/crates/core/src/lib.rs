//! Minimum-energy operation planning for heterogeneous cellular networks.
//!
//! The crate models a downlink network of macro and pico stations serving
//! fixed test points, precomputes ergodic link rates under a set of on/off
//! interference patterns, and then chooses which stations to keep active and
//! how to split spectrum and airtime so that every test point's demand is met
//! at minimal operating power. The combinatorial part is handled by smoothing
//! the on/off cost and solving a sequence of weighted-load LPs, each of which
//! can be solved either directly or through a dual cutting-plane method that
//! scales to huge pattern sets.

pub mod allocation;
pub mod cutplane;
pub mod energy;
pub mod error;
pub mod feasibility;
pub mod lp;
pub mod patterns;
pub mod rates;
pub mod scenario;
pub mod verify;

pub use allocation::Allocation;
pub use cutplane::{Cut, CutPlaneParams, CutPool, Engine, RunResult, TraceRow};
pub use energy::{
    minimize_energy, minimize_energy_warm, solve_weighted_lp, EnergyResult, SolverParams,
    WeightedLpOutcome,
};
pub use error::{Error, Result};
pub use feasibility::{is_feasible, rate_balance, strict_start, BalanceResult, StrictStart};
pub use patterns::PatternSet;
pub use rates::{RateMode, RateTensor};
pub use scenario::{Scenario, ScenarioConfig};
