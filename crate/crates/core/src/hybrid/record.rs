use serde::{Deserialize, Serialize};

use super::config::Method;
use crate::instance::Tour;

/// Outcome of one solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunRecord {
    pub method: Method,
    pub n: usize,
    pub seed: u64,
    /// Kilometers; equals the closed-loop cost of `best_tour`.
    pub best_cost: f64,
    pub best_tour: Tour,
    /// Brute-force optimum of the same instance.
    pub classical_cost: f64,
    pub approximation_ratio: f64,
    /// Objective evaluations spent by the parameter optimizer(s).
    pub iterations_used: usize,
    /// Largest depth among the executed circuits.
    pub circuit_depth: usize,
    /// Largest gate count among the executed circuits.
    pub total_gates: usize,
    /// Share of final-sampling shots that decoded to a valid route.
    pub valid_sample_fraction: f64,
    /// Seconds.
    pub wall_time: f64,
    pub fallback_used: bool,
}

impl RunRecord {
    /// Copy with `wall_time` zeroed, for determinism comparisons.
    pub fn without_timing(&self) -> RunRecord {
        RunRecord {
            wall_time: 0.0,
            ..self.clone()
        }
    }
}
