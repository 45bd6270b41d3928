use nalgebra::{Point3, Vector3};

use crate::error::{Error, Result};
use crate::geometry::{bbox_of, Pose, Trajectory, PartGeometry};
use crate::metrics::{posed_points, FinalPoses};
use crate::simulator::mass_properties;

/// Mass-weighted centroid of the posed parts.
pub fn assembly_center_of_mass(final_poses: &FinalPoses, parts: &[PartGeometry], density: f64) -> Result<Point3<f64>> {
    let mut total = 0.0;
    let mut acc = Vector3::zeros();
    for part in parts {
        let pose = final_poses
            .get(&part.part_id())
            .ok_or_else(|| Error::InvalidArgument(format!("no pose for part {}", part.part_id())))?;
        let (m, _) = mass_properties(part, density);
        acc += pose.transform_point(part.centroid()).coords * m;
        total += m;
    }
    if !(total > 0.0) {
        return Err(Error::InvalidArgument("no parts".into()));
    }
    Ok(Point3::from(acc / total))
}

/// Each part slides outward from `center` through its own posed centroid,
/// by half its posed bounding-box diagonal, without rotating. Trajectories
/// run from that start pose to the final pose and are sorted by part id.
pub fn heuristic_straightline(
    final_poses: &FinalPoses,
    parts: &[PartGeometry],
    center: &Point3<f64>,
    steps: usize,
) -> Result<Vec<Trajectory>> {
    if steps < 2 {
        return Err(Error::InvalidArgument("need at least two waypoints".into()));
    }
    let mut out = Vec::with_capacity(parts.len());
    let mut sorted: Vec<&PartGeometry> = parts.iter().collect();
    sorted.sort_by_key(|p| p.part_id());
    for part in sorted {
        let pose = final_poses
            .get(&part.part_id())
            .ok_or_else(|| Error::InvalidArgument(format!("no pose for part {}", part.part_id())))?;
        let posed = posed_points(part, pose)?;
        let diag = bbox_of(&posed)?.diagonal();
        let away = pose.transform_point(part.centroid()) - center;
        let dir = if away.norm() > 1e-12 { away.normalize() } else { Vector3::z() };
        let start = pose.with_translation(pose.translation() + dir * (0.5 * diag));
        let poses = (0..steps)
            .map(|k| {
                let s = k as f64 / (steps - 1) as f64;
                if k == steps - 1 {
                    *pose
                } else {
                    pose.with_translation(start.translation() + (pose.translation() - start.translation()) * s)
                }
            })
            .collect::<Vec<Pose>>();
        out.push(Trajectory::new(part.part_id(), poses)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BoxSolid;

    #[test]
    fn centered_part_rises_half_diagonal() {
        let mesh = BoxSolid::cuboid([1.0; 3]).mesh().unwrap();
        let part = PartGeometry::new(0, mesh.clone(), mesh.vertices.clone()).unwrap();
        let pose = Pose::from_translation(Vector3::new(0.0, 0.0, 2.0));
        let poses: FinalPoses = [(0, pose)].into();
        let t = heuristic_straightline(&poses, &[part], &Point3::origin(), 12).unwrap();
        let start = t[0].first().translation();
        assert!((start - Vector3::new(0.0, 0.0, 2.0 + 3f64.sqrt() / 2.0)).norm() < 1e-12);
        assert!(t[0].poses.iter().all(|p| p.rotation() == pose.rotation()));
        assert_eq!(*t[0].last(), pose);
    }

    #[test]
    fn degenerate_direction_falls_back_to_up() {
        let part = PartGeometry::from_points(0, vec![Point3::new(-1.0, 0.0, 0.0), Point3::new(1.0, 0.0, 0.0)]).unwrap();
        let poses: FinalPoses = [(0, Pose::identity())].into();
        let t = heuristic_straightline(&poses, &[part], &Point3::origin(), 3).unwrap();
        assert!((t[0].first().translation() - Vector3::new(0.0, 0.0, 1.0)).norm() < 1e-12);
    }
}
