use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};

use super::format::AssemblyRecord;
use crate::error::{invalid_geom, Result};
use crate::geometry::{Pose, Trajectory};
use crate::planners::AssemblyPlan;

/// `x_normalized = scale · (x_original − center)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub scale: f64,
    pub center: [f64; 3],
}

impl Default for Normalization {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl Normalization {
    pub const IDENTITY: Normalization = Normalization {
        scale: 1.0,
        center: [0.0; 3],
    };

    fn c(&self) -> Vector3<f64> {
        Vector3::from(self.center)
    }

    pub fn apply_point(&self, p: &Point3<f64>) -> Point3<f64> {
        Point3::from((p.coords - self.c()) * self.scale)
    }

    pub fn invert_point(&self, p: &Point3<f64>) -> Point3<f64> {
        Point3::from(p.coords / self.scale + self.c())
    }

    /// Pose of the scaled part in normalized space.
    pub fn apply_pose(&self, pose: &Pose) -> Pose {
        pose.with_translation((pose.translation() - self.c()) * self.scale)
    }

    pub fn invert_pose(&self, pose: &Pose) -> Pose {
        pose.with_translation(pose.translation() / self.scale + self.c())
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &Normalization) -> Normalization {
        Normalization {
            scale: self.scale * next.scale,
            center: (self.c() + next.c() / self.scale).into(),
        }
    }

    pub fn inverse(&self) -> Normalization {
        Normalization {
            scale: 1.0 / self.scale,
            center: (-self.c() * self.scale).into(),
        }
    }
}

/// Transform that centres the assembled shape (box centre of its posed
/// vertices and points) and scales its bounding sphere to diameter 1.
pub fn normalization_for(record: &AssemblyRecord) -> Result<Normalization> {
    let finals = record.gt_plan.final_poses();
    let mut posed = Vec::new();
    for part in &record.parts {
        let pose = finals[&part.part_id()];
        posed.extend(part.mesh().vertices.iter().chain(part.points()).map(|p| pose.transform_point(p)));
    }
    let Some(bounds) = crate::geometry::Aabb::from_points(posed.iter()) else {
        return invalid_geom("assembly has no geometry");
    };
    let center = bounds.center();
    let radius = posed.iter().map(|p| (p - center).norm()).fold(0.0, f64::max);
    if !(radius > 0.0) || !radius.is_finite() {
        return invalid_geom("assembly has zero extent");
    }
    Ok(Normalization {
        scale: 0.5 / radius,
        center: center.coords.into(),
    })
}

fn transform(record: &AssemblyRecord, n: &Normalization) -> Result<AssemblyRecord> {
    let parts = record.parts.iter().map(|p| p.scaled(n.scale)).collect::<Result<Vec<_>>>()?;
    let trajectories = record
        .gt_plan
        .trajectories
        .iter()
        .map(|t| Trajectory::new(t.part_id, t.poses.iter().map(|p| n.apply_pose(p)).collect()))
        .collect::<Result<Vec<_>>>()?;
    Ok(AssemblyRecord {
        parts,
        gt_plan: AssemblyPlan::new(record.gt_plan.order.clone(), trajectories)?,
        normalization: record.normalization.then(n),
        ..record.clone()
    })
}

/// Rescales and recentres geometry, poses and trajectories; the applied
/// transform is composed into `record.normalization`.
pub fn normalize(record: &AssemblyRecord) -> Result<AssemblyRecord> {
    let n = normalization_for(record)?;
    transform(record, &n)
}

/// Undoes every normalization applied so far.
pub fn denormalize(record: &AssemblyRecord) -> Result<AssemblyRecord> {
    let inv = record.normalization.inverse();
    let mut out = transform(record, &inv)?;
    out.normalization = Normalization::IDENTITY;
    Ok(out)
}
