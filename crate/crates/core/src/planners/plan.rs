use serde::{Deserialize, Serialize};

use crate::error::{invalid_arg, Result};
use crate::geometry::Trajectory;
use crate::metrics::FinalPoses;

/// Assembly order plus one trajectory per step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssemblyPlan {
    pub order: Vec<usize>,
    pub trajectories: Vec<Trajectory>,
}

impl AssemblyPlan {
    pub fn new(order: Vec<usize>, trajectories: Vec<Trajectory>) -> Result<Self> {
        let plan = Self { order, trajectories };
        plan.validate()?;
        Ok(plan)
    }

    /// Builds a plan whose order is the trajectories' own order.
    pub fn from_trajectories(trajectories: Vec<Trajectory>) -> Result<Self> {
        Self::new(trajectories.iter().map(|t| t.part_id).collect(), trajectories)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.order.len();
        if n == 0 {
            return invalid_arg("plan has no steps");
        }
        let mut seen = vec![false; n];
        for &p in &self.order {
            if p >= n || seen[p] {
                return invalid_arg("plan order is not a permutation of part indices");
            }
            seen[p] = true;
        }
        if self.trajectories.len() != n {
            return invalid_arg("plan needs one trajectory per step");
        }
        let steps = self.trajectories[0].len();
        for (p, t) in self.order.iter().zip(&self.trajectories) {
            if t.part_id != *p {
                return invalid_arg(format!("step for part {p} carries a trajectory for part {}", t.part_id));
            }
            if t.len() != steps {
                return invalid_arg("plan trajectories differ in length");
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn steps(&self) -> usize {
        self.trajectories[0].len()
    }

    /// Reverses both the order and every trajectory.
    pub fn reversed(&self) -> Self {
        Self {
            order: self.order.iter().rev().copied().collect(),
            trajectories: self.trajectories.iter().rev().map(Trajectory::reversed).collect(),
        }
    }

    pub fn final_poses(&self) -> FinalPoses {
        self.trajectories.iter().map(|t| (t.part_id, *t.last())).collect()
    }

    pub fn trajectory_for(&self, part_id: usize) -> Option<&Trajectory> {
        self.trajectories.iter().find(|t| t.part_id == part_id)
    }

    /// Trajectories sorted by part id.
    pub fn by_part(&self) -> Vec<Trajectory> {
        let mut out = self.trajectories.clone();
        out.sort_by_key(|t| t.part_id);
        out
    }
}
