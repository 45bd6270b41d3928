use std::fmt;
use std::str::FromStr;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{PartGeometry, Pose, Trajectory};
use crate::simulator::MeshCollider;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TrajectoryCategory {
    #[serde(rename = "stationary")]
    Stationary,
    #[serde(rename = "translational")]
    Translational,
    #[serde(rename = "rotational")]
    Rotational,
    #[serde(rename = "insertion")]
    Insertion,
    #[serde(rename = "insert+rotate")]
    InsertRotate,
}

impl TrajectoryCategory {
    pub const ALL: [TrajectoryCategory; 5] = [
        Self::Stationary,
        Self::Translational,
        Self::Rotational,
        Self::Insertion,
        Self::InsertRotate,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Stationary => "stationary",
            Self::Translational => "translational",
            Self::Rotational => "rotational",
            Self::Insertion => "insertion",
            Self::InsertRotate => "insert+rotate",
        }
    }

    pub fn is_insertion(&self) -> bool {
        matches!(self, Self::Insertion | Self::InsertRotate)
    }

    pub fn is_rotational(&self) -> bool {
        matches!(self, Self::Rotational | Self::InsertRotate)
    }
}

impl fmt::Display for TrajectoryCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TrajectoryCategory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown trajectory category `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifyThresholds {
    /// Path length below which a part counts as not translating.
    pub eps_translation: f64,
    pub eps_rotation_deg: f64,
    pub rotation_deg: f64,
    pub insertion_length: f64,
    pub lateral_clearance: f64,
}

impl Default for ClassifyThresholds {
    fn default() -> Self {
        Self {
            eps_translation: 1e-3,
            eps_rotation_deg: 0.5,
            rotation_deg: 30.0,
            insertion_length: 0.25,
            lateral_clearance: 0.05,
        }
    }
}

/// Translation path length, rotation path length (radians), net
/// translation vector.
pub fn motion_totals(traj: &Trajectory) -> (f64, f64, Vector3<f64>) {
    let mut t = 0.0;
    let mut r = 0.0;
    for w in traj.poses.windows(2) {
        t += (w[1].translation() - w[0].translation()).norm();
        r += w[0].angle_to(&w[1]);
    }
    (t, r, traj.last().translation() - traj.first().translation())
}

/// Category of a trajectory. `clearance` is the lateral gap around the part
/// along its motion (see [`lateral_clearance`]); without it any long
/// translation counts as an insertion.
pub fn classify_trajectory(traj: &Trajectory, th: &ClassifyThresholds, clearance: Option<f64>) -> TrajectoryCategory {
    let (path_t, path_r, net) = motion_totals(traj);
    let rotates = path_r >= th.rotation_deg.to_radians();
    let inserts = net.norm() >= th.insertion_length && clearance.map_or(true, |c| c < th.lateral_clearance);
    match (inserts, rotates) {
        (true, true) => TrajectoryCategory::InsertRotate,
        (true, false) => TrajectoryCategory::Insertion,
        (false, true) => TrajectoryCategory::Rotational,
        _ if path_t < th.eps_translation && path_r < th.eps_rotation_deg.to_radians() => TrajectoryCategory::Stationary,
        _ => TrajectoryCategory::Translational,
    }
}

/// Smallest gap between the part at `pose` and the surrounding parts,
/// measured only where the nearest surface faces sideways relative to
/// `direction`. `None` when nothing lies within `reach`.
pub fn lateral_clearance(
    part: &PartGeometry,
    pose: &Pose,
    direction: &Vector3<f64>,
    surroundings: &[(&PartGeometry, Pose)],
    reach: f64,
) -> Result<Option<f64>> {
    let Some(dir) = direction.try_normalize(1e-12) else {
        return Ok(None);
    };
    let mut best: Option<f64> = None;
    for (other, other_pose) in surroundings {
        if other.mesh().is_empty() {
            continue;
        }
        let collider = MeshCollider::new(other.mesh())?;
        for p in part.points() {
            let local = other_pose.inverse_transform_point(&pose.transform_point(p));
            let Some(q) = collider.query(&local, reach) else { continue };
            let normal = other_pose.rotate_vector(&q.normal);
            if normal.dot(&dir).abs() < 0.3 {
                let gap = q.signed_distance.max(0.0);
                best = Some(best.map_or(gap, |b: f64| b.min(gap)));
            }
        }
    }
    Ok(best)
}
