//! Trajectory generators that need no learned model.

mod disassembly;
mod plan;
mod resample;
mod rrt;
mod straightline;

use serde::{Deserialize, Serialize};

use crate::error::{invalid_arg, Result};

pub use disassembly::{disassembly_plan, probe_sequence, DisassemblyConfig, Probe};
pub use plan::AssemblyPlan;
pub use rrt::{rrt_plan, rrt_search, CollisionChecker, RrtConfig, RrtReport};
pub use resample::{pose_distance, resample_arc_length, resample_preserving_corners};
pub use straightline::{assembly_center_of_mass, heuristic_straightline};

/// Search limits shared by the planners.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlannerBudget {
    /// Wall-clock seconds.
    pub timeout: f64,
    pub max_iterations: usize,
    pub seed: u64,
}

impl Default for PlannerBudget {
    fn default() -> Self {
        Self {
            timeout: 60.0,
            max_iterations: 1_000_000,
            seed: 0,
        }
    }
}

impl PlannerBudget {
    pub fn validate(&self) -> Result<()> {
        if !(self.timeout > 0.0) {
            return invalid_arg("timeout must be positive");
        }
        if self.max_iterations == 0 {
            return invalid_arg("max_iterations must be at least 1");
        }
        Ok(())
    }
}
