//! Poses, point clouds, meshes and the distances between them.

mod aabb;
pub mod cloud;
pub mod io;
pub mod kdtree;
mod mesh;
mod part;
mod pose;

pub use aabb::{bbox_diagonal, bbox_of, Aabb};
pub use cloud::{apply_pose, chamfer, chamfer_with, centroid};
pub use mesh::{BoxSolid, TriMesh};
pub use part::{sample_surface, PartGeometry};
pub use pose::{pose_interpolation_velocity, relative_axis_angle, Pose};

/// Number of poses per trajectory unless configured otherwise.
pub const DEFAULT_STEPS: usize = 12;

/// The T-step pose sequence of one part.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Trajectory {
    pub part_id: usize,
    pub poses: Vec<Pose>,
}

impl Trajectory {
    pub fn new(part_id: usize, poses: Vec<Pose>) -> crate::Result<Self> {
        if poses.is_empty() {
            return Err(crate::Error::InvalidArgument(format!(
                "trajectory for part {part_id} is empty"
            )));
        }
        Ok(Self { part_id, poses })
    }

    /// `steps` copies of one pose.
    pub fn stationary(part_id: usize, pose: Pose, steps: usize) -> Self {
        Self {
            part_id,
            poses: vec![pose; steps],
        }
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    pub fn first(&self) -> &Pose {
        &self.poses[0]
    }

    pub fn last(&self) -> &Pose {
        self.poses.last().expect("trajectory is never empty")
    }

    pub fn reversed(&self) -> Self {
        let mut poses = self.poses.clone();
        poses.reverse();
        Self {
            part_id: self.part_id,
            poses,
        }
    }
}
