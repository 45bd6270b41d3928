//! Penalty-contact rigid-body rollout of commanded velocity sequences.

pub mod collider;
mod config;
mod world;

use std::collections::BTreeMap;

use nalgebra::{UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

pub use collider::{closest_on_triangle, collide, Contact, MeshCollider, SurfaceQuery};
pub use config::SimConfig;
pub use world::mass_properties;
pub(crate) use world::{Body, World};

use crate::error::{invalid_arg, invalid_geom, Error, Result};
use crate::geometry::{pose_interpolation_velocity, PartGeometry, Pose, Trajectory};
use crate::metrics::FinalPoses;
use crate::planners::AssemblyPlan;

/// Parts already in place plus the part being moved.
#[derive(Debug, Clone)]
pub struct SimScene {
    pub static_parts: Vec<(PartGeometry, Pose)>,
    pub moving_part: PartGeometry,
    pub initial_pose: Pose,
}

impl SimScene {
    pub fn validate(&self) -> Result<()> {
        if !self.initial_pose.is_finite() || self.static_parts.iter().any(|(_, p)| !p.is_finite()) {
            return invalid_arg("scene poses must be finite");
        }
        let id = self.moving_part.part_id();
        if self.static_parts.iter().any(|(p, _)| p.part_id() == id) {
            return invalid_arg(format!("part {id} is both static and moving"));
        }
        Ok(())
    }
}

/// Commanded (linear, angular) velocities, one per waypoint interval. The
/// linear part is the velocity of the part's frame origin; angular is in
/// the world frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VelocityProgram {
    velocities: Vec<(Vector3<f64>, Vector3<f64>)>,
}

impl VelocityProgram {
    pub fn new(velocities: Vec<(Vector3<f64>, Vector3<f64>)>) -> Result<Self> {
        if velocities.iter().any(|(v, w)| !v.iter().chain(w.iter()).all(|x| x.is_finite())) {
            return invalid_arg("velocity program must be finite");
        }
        Ok(Self { velocities })
    }

    /// Pose differences of consecutive waypoints over `dt`.
    pub fn from_trajectory(traj: &Trajectory, dt: f64) -> Result<Self> {
        let velocities = traj
            .poses
            .windows(2)
            .map(|w| pose_interpolation_velocity(&w[0], &w[1], dt))
            .collect::<Result<Vec<_>>>()?;
        Self::new(velocities)
    }

    pub fn len(&self) -> usize {
        self.velocities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.velocities.is_empty()
    }

    pub fn velocities(&self) -> &[(Vector3<f64>, Vector3<f64>)] {
        &self.velocities
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutResult {
    pub executed: Trajectory,
    /// Substeps in which some contact carried force.
    pub contact_events: usize,
    /// Deepest contact seen, as `thickness − signed distance`.
    pub max_penetration: f64,
}

/// A static obstacle with its collider built.
#[derive(Clone, Copy)]
pub(crate) struct StaticRef<'a> {
    pub part: &'a PartGeometry,
    pub collider: &'a MeshCollider,
    pub pose: Pose,
}

pub(crate) fn build_colliders<'a>(parts: impl IntoIterator<Item = &'a PartGeometry>) -> Result<Vec<MeshCollider>> {
    parts
        .into_iter()
        .map(|p| {
            if p.mesh().is_empty() {
                return invalid_geom(format!("part {} has no mesh to collide against", p.part_id()));
            }
            MeshCollider::new(p.mesh())
        })
        .collect()
}

pub fn rollout(scene: &SimScene, program: &VelocityProgram, config: &SimConfig) -> Result<RolloutResult> {
    scene.validate()?;
    let colliders = build_colliders(scene.static_parts.iter().map(|(p, _)| p))?;
    let statics: Vec<StaticRef> = scene
        .static_parts
        .iter()
        .zip(&colliders)
        .map(|((part, pose), collider)| StaticRef {
            part,
            collider,
            pose: *pose,
        })
        .collect();
    rollout_prepared(&scene.moving_part, &scene.initial_pose, &statics, program, config)
}

pub(crate) fn rollout_prepared(
    moving: &PartGeometry,
    initial: &Pose,
    statics: &[StaticRef],
    program: &VelocityProgram,
    config: &SimConfig,
) -> Result<RolloutResult> {
    config.validate()?;
    let mut world = World::new(*config);
    for s in statics {
        world.add(Body::new(s.part, Some(s.collider), &s.pose, false, config.density));
    }
    let m = world.add(Body::new(moving, None, initial, true, config.density));
    let h = config.substep();
    let dt = config.dt;
    let free_flight_exact = config.gravity.iter().all(|g| *g == 0.0);

    let mut poses = Vec::with_capacity(program.len() + 1);
    poses.push(*initial);
    let mut contact_events = 0;
    let mut max_penetration = 0.0f64;
    let mut substep = 0usize;
    for (v, w) in program.velocities() {
        let start = world.bodies[m].pose();
        let rotation = UnitQuaternion::from_scaled_axis(w * dt) * start.rotation();
        let target = Pose::from_parts(rotation, start.translation() + v * dt);
        let body = &mut world.bodies[m];
        // centroid velocity that lands the frame origin on `target` in free flight
        let target_com = target.translation() + rotation * body.com_local();
        body.linear = (target_com - body.com) / dt;
        body.angular = *w;

        let mut touched = false;
        for _ in 0..config.substeps {
            let stats = world.step(h).map_err(|e| match e {
                Error::SimulationDiverged { step, .. } => Error::SimulationDiverged { substep, step },
                other => other,
            })?;
            if stats.contacts > 0 {
                touched = true;
                max_penetration = max_penetration.max(stats.max_depth);
            }
            if stats.loaded {
                contact_events += 1;
            }
            substep += 1;
        }
        if !touched && free_flight_exact {
            // closed-form free flight, free of accumulated rounding
            world.bodies[m].set_pose(&target);
        }
        poses.push(world.bodies[m].pose());
    }
    Ok(RolloutResult {
        executed: Trajectory::new(moving.part_id(), poses)?,
        contact_events,
        max_penetration,
    })
}

pub(crate) fn parts_by_id(parts: &[PartGeometry]) -> Result<BTreeMap<usize, &PartGeometry>> {
    let map: BTreeMap<usize, &PartGeometry> = parts.iter().map(|p| (p.part_id(), p)).collect();
    if map.len() != parts.len() {
        return invalid_arg("duplicate part ids");
    }
    Ok(map)
}

/// Rolls out each step of `plan` in order. Parts handled in earlier steps
/// are frozen at their predicted final poses; results are indexed by step.
pub fn step_by_step_evaluate(plan: &AssemblyPlan, parts: &[PartGeometry], config: &SimConfig) -> Result<Vec<RolloutResult>> {
    plan.validate()?;
    let by_id = parts_by_id(parts)?;
    let mut geoms = Vec::with_capacity(plan.len());
    for p in &plan.order {
        geoms.push(*by_id.get(p).ok_or_else(|| Error::InvalidArgument(format!("no geometry for part {p}")))?);
    }
    let colliders = build_colliders(geoms.iter().copied())?;
    let mut out = Vec::with_capacity(plan.len());
    for (step, traj) in plan.trajectories.iter().enumerate() {
        let statics: Vec<StaticRef> = (0..step)
            .map(|j| StaticRef {
                part: geoms[j],
                collider: &colliders[j],
                pose: *plan.trajectories[j].last(),
            })
            .collect();
        let program = VelocityProgram::from_trajectory(traj, config.dt)?;
        let result = rollout_prepared(geoms[step], traj.first(), &statics, &program, config).map_err(|e| match e {
            Error::SimulationDiverged { substep, .. } => Error::SimulationDiverged {
                substep,
                step: Some(step),
            },
            other => other,
        })?;
        out.push(result);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Resolution {
    pub poses: FinalPoses,
    pub converged: bool,
    /// Simulated seconds spent.
    pub elapsed: f64,
}

/// Pushes interpenetrating parts apart: every part is free, velocities are
/// zeroed at each waypoint interval, and integration stops once no contact
/// is deeper than the shell thickness or `max_time` simulated seconds pass.
pub fn resolve_penetrations(
    final_poses: &FinalPoses,
    parts: &[PartGeometry],
    config: &SimConfig,
    max_time: f64,
) -> Result<Resolution> {
    config.validate()?;
    if !(max_time >= 0.0) {
        return invalid_arg("max_time must be non-negative");
    }
    let by_id = parts_by_id(parts)?;
    let ids: Vec<usize> = final_poses.keys().copied().collect();
    let geoms = ids
        .iter()
        .map(|id| by_id.get(id).copied().ok_or_else(|| Error::InvalidArgument(format!("no geometry for part {id}"))))
        .collect::<Result<Vec<_>>>()?;
    let colliders = build_colliders(geoms.iter().copied())?;
    let mut world = World::new(*config);
    for ((id, geom), collider) in ids.iter().zip(&geoms).zip(&colliders) {
        world.add(Body::new(geom, Some(collider), &final_poses[id], true, config.density));
    }
    let h = config.substep();
    let tol = config.thickness * (1.0 + 1e-9);
    let mut substep = 0usize;
    let converged = loop {
        let contacts = world.contacts();
        if contacts.iter().all(|c| c.contact.depth <= tol) {
            break true;
        }
        if substep as f64 * h >= max_time {
            break false;
        }
        if substep % config.substeps == 0 {
            for b in &mut world.bodies {
                b.linear = Vector3::zeros();
                b.angular = Vector3::zeros();
            }
        }
        world.step_with(&contacts, h).map_err(|_| Error::SimulationDiverged { substep, step: None })?;
        substep += 1;
    };
    let poses = ids.iter().zip(&world.bodies).map(|(id, b)| (*id, b.pose())).collect();
    Ok(Resolution {
        poses,
        converged,
        elapsed: substep as f64 * h,
    })
}
