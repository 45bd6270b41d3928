//! Assembly by disassembly: push parts out one at a time, then reverse.

use std::collections::BTreeSet;
use std::time::Instant;

use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};

use super::resample::{resample_arc_length, resample_preserving_corners};
use super::{AssemblyPlan, PlannerBudget};
use crate::error::{invalid_arg, Error, Result};
use crate::geometry::{Aabb, PartGeometry, Pose, Trajectory};
use crate::metrics::{part_chamfer, FinalPoses};
use crate::simulator::{build_colliders, rollout_prepared, Body, MeshCollider, SimConfig, StaticRef, VelocityProgram, World};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisassemblyConfig {
    /// Waypoints per trajectory.
    pub steps: usize,
    /// Simulated seconds per probe.
    pub probe_duration: f64,
    pub probe_substeps: usize,
    /// Remainder box inflation as a fraction of the assembly diagonal.
    pub inflation: f64,
    /// Also try force plus torque about the push axis.
    pub torque_probes: bool,
    /// Replayed trajectories must end within this chamfer distance.
    pub verify_cd: f64,
    /// Extra contact thickness during probes, as a fraction of the assembly
    /// diagonal. Escape paths then keep a standoff from every surface, so
    /// the replay at the normal thickness has slack where the probe was
    /// jammed.
    pub contact_pad: f64,
}

impl Default for DisassemblyConfig {
    fn default() -> Self {
        Self {
            steps: crate::geometry::DEFAULT_STEPS,
            probe_duration: 1.0,
            probe_substeps: 240,
            inflation: 0.05,
            torque_probes: true,
            verify_cd: 1e-4,
            contact_pad: 2e-3,
        }
    }
}

/// One push: axis index in the part frame, sign, and whether torque about
/// the same axis is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Probe {
    pub axis: usize,
    pub sign: i8,
    pub torque: bool,
}

/// Probe order: +z, −z, +x, −x, +y, −y with force only, then the same
/// six with torque.
pub fn probe_sequence(torque: bool) -> Vec<Probe> {
    let dirs = [(2, 1), (2, -1), (0, 1), (0, -1), (1, 1), (1, -1)];
    let mut out: Vec<Probe> = dirs.iter().map(|&(axis, sign)| Probe { axis, sign, torque: false }).collect();
    if torque {
        out.extend(dirs.iter().map(|&(axis, sign)| Probe { axis, sign, torque: true }));
    }
    out
}

struct Search<'a> {
    parts: Vec<&'a PartGeometry>,
    colliders: Vec<MeshCollider>,
    poses: Vec<Pose>,
    sim: SimConfig,
    cfg: DisassemblyConfig,
    budget: PlannerBudget,
    diag: f64,
    started: Instant,
    probes: usize,
    failed: BTreeSet<Vec<usize>>,
    most_removed: usize,
}

fn world_box(part: &PartGeometry, pose: &Pose) -> Aabb {
    let pts: Vec<Point3<f64>> = part.points().iter().map(|p| pose.transform_point(p)).collect();
    Aabb::from_points(pts.iter()).expect("non-empty cloud")
}

impl<'a> Search<'a> {
    fn statics(&self, others: &[usize]) -> Vec<StaticRef<'_>> {
        others
            .iter()
            .map(|&j| StaticRef {
                part: self.parts[j],
                collider: &self.colliders[j],
                pose: self.poses[j],
            })
            .collect()
    }

    fn tick(&mut self) -> Result<()> {
        let elapsed = self.started.elapsed().as_secs_f64();
        self.probes += 1;
        if elapsed > self.budget.timeout || self.probes > self.budget.max_iterations {
            return Err(Error::PlanningTimeout {
                elapsed_s: elapsed,
                progress: format!("{} of {} parts removed, {} probes", self.most_removed, self.parts.len(), self.probes - 1),
            });
        }
        Ok(())
    }

    /// Dense escape path of part `i` under `probe`, or `None` if the part is
    /// still entangled when the probe ends.
    fn run_probe(&self, i: usize, others: &[usize], probe: Probe, padded: bool) -> Result<Option<Vec<Pose>>> {
        let mut sim = self.sim;
        if padded {
            sim.thickness += self.cfg.contact_pad * self.diag;
        }
        let mut world = World::new(sim);
        for s in self.statics(others) {
            world.add(Body::new(s.part, Some(s.collider), &s.pose, false, self.sim.density));
        }
        let m = world.add(Body::new(self.parts[i], None, &self.poses[i], true, self.sim.density));
        let mut axis = Vector3::zeros();
        axis[probe.axis] = f64::from(probe.sign);
        let axis = self.poses[i].rotate_vector(&axis);
        let d = self.cfg.probe_duration;
        let body = &mut world.bodies[m];
        body.force = axis * (3.0 * self.diag * body.mass / (d * d));
        if probe.torque {
            let r = body.rotation.to_rotation_matrix();
            let moment = axis.dot(&(r.matrix() * body.inertia * r.matrix().transpose() * axis));
            // a free quarter turn completes in 0.4·D, leaving time to pull
            body.torque = axis * (2.0 * std::f64::consts::PI.powi(2) * moment / (d * d));
        }
        let remainder = others
            .iter()
            .map(|&j| world_box(self.parts[j], &self.poses[j]))
            .reduce(|a, b| a.union(&b))
            .expect("at least one other part")
            .inflated(self.cfg.inflation * self.diag);
        let h = d / self.cfg.probe_substeps as f64;
        let mut path = vec![self.poses[i]];
        for _ in 0..self.cfg.probe_substeps {
            world.step(h)?;
            let pose = world.bodies[m].pose();
            path.push(pose);
            if !world_box(self.parts[i], &pose).intersects(&remainder) {
                return Ok(Some(path));
            }
        }
        Ok(None)
    }

    /// Assembly-direction trajectory for an escape path, replayed in the
    /// simulator against the parts that stay behind.
    fn verified_trajectory(&self, i: usize, others: &[usize], path: &[Pose]) -> Result<Option<Trajectory>> {
        let w_r = self.diag / std::f64::consts::PI;
        let statics = self.statics(others);
        let candidates = [
            resample_preserving_corners(path, self.cfg.steps, w_r, 1e-3 * self.diag)?,
            resample_arc_length(path, self.cfg.steps, w_r)?,
        ];
        for mut poses in candidates {
            poses[0] = self.poses[i];
            poses.reverse();
            let traj = Trajectory::new(self.parts[i].part_id(), poses)?;
            let program = VelocityProgram::from_trajectory(&traj, self.sim.dt)?;
            let replay = match rollout_prepared(self.parts[i], traj.first(), &statics, &program, &self.sim) {
                Ok(r) => r,
                Err(Error::SimulationDiverged { .. }) => continue,
                Err(e) => return Err(e),
            };
            let cd = part_chamfer(self.parts[i], replay.executed.last(), &self.poses[i])?;
            if cd < self.cfg.verify_cd {
                return Ok(Some(traj));
            }
        }
        Ok(None)
    }

    /// Removal sequence for `remaining`, each with its assembly trajectory.
    fn search(&mut self, remaining: &[usize]) -> Result<Option<Vec<(usize, Trajectory)>>> {
        let n = self.parts.len();
        self.most_removed = self.most_removed.max(n - remaining.len());
        if remaining.len() == 1 {
            let i = remaining[0];
            let t = Trajectory::stationary(self.parts[i].part_id(), self.poses[i], self.cfg.steps);
            return Ok(Some(vec![(i, t)]));
        }
        if self.failed.contains(remaining) {
            return Ok(None);
        }
        let mut candidates = remaining.to_vec();
        // topmost first, the way assemblies come apart on a bench; smaller
        // parts break ties
        let key = |i: usize| {
            let b = world_box(self.parts[i], &self.poses[i]);
            (b.max.z, b.volume())
        };
        candidates.sort_by(|&a, &b| {
            let (ta, va) = key(a);
            let (tb, vb) = key(b);
            tb.total_cmp(&ta).then(va.total_cmp(&vb)).then(a.cmp(&b))
        });
        for &i in &candidates {
            let others: Vec<usize> = remaining.iter().copied().filter(|&j| j != i).collect();
            let mut removed = None;
            // the pad jams parts whose fit is tighter than the pad itself, so
            // those get a second pass at the plain thickness
            let passes: &[bool] = if self.cfg.contact_pad > 0.0 { &[true, false] } else { &[false] };
            let probes = probe_sequence(self.cfg.torque_probes);
            let attempts: Vec<(bool, Probe)> = passes.iter().flat_map(|&p| probes.iter().map(move |&q| (p, q))).collect();
            'probes: for (padded, probe) in attempts {
                self.tick()?;
                let path = match self.run_probe(i, &others, probe, padded) {
                    Ok(Some(p)) => p,
                    Ok(None) | Err(Error::SimulationDiverged { .. }) => continue,
                    Err(e) => return Err(e),
                };
                if let Some(t) = self.verified_trajectory(i, &others, &path)? {
                    removed = Some(t);
                    break 'probes;
                }
            }
            let Some(traj) = removed else { continue };
            if let Some(mut rest) = self.search(&others)? {
                rest.insert(0, (i, traj));
                return Ok(Some(rest));
            }
        }
        self.failed.insert(remaining.to_vec());
        Ok(None)
    }
}

/// Finds an assembly order and trajectories by disassembling the parts from
/// their assembled poses with simulated pushes, then reversing.
pub fn disassembly_plan(
    parts: &[PartGeometry],
    final_poses: &FinalPoses,
    sim: &SimConfig,
    budget: &PlannerBudget,
    cfg: &DisassemblyConfig,
) -> Result<AssemblyPlan> {
    sim.validate()?;
    budget.validate()?;
    if cfg.steps < 2 || cfg.probe_substeps == 0 || !(cfg.probe_duration > 0.0) {
        return invalid_arg("invalid disassembly settings");
    }
    let mut sorted: Vec<&PartGeometry> = parts.iter().collect();
    sorted.sort_by_key(|p| p.part_id());
    if sorted.is_empty() || sorted.iter().enumerate().any(|(k, p)| p.part_id() != k) {
        return invalid_arg("part ids must be 0..N");
    }
    let poses = sorted
        .iter()
        .map(|p| final_poses.get(&p.part_id()).copied().ok_or_else(|| Error::InvalidArgument(format!("no pose for part {}", p.part_id()))))
        .collect::<Result<Vec<_>>>()?;
    let diag = sorted
        .iter()
        .zip(&poses)
        .map(|(p, q)| world_box(p, q))
        .reduce(|a, b| a.union(&b))
        .expect("non-empty")
        .diagonal();
    let mut search = Search {
        colliders: build_colliders(sorted.iter().copied())?,
        parts: sorted,
        poses,
        sim: *sim,
        cfg: *cfg,
        budget: *budget,
        diag,
        started: Instant::now(),
        probes: 0,
        failed: BTreeSet::new(),
        most_removed: 0,
    };
    let all: Vec<usize> = (0..search.parts.len()).collect();
    match search.search(&all)? {
        Some(removal) => {
            // removal order reversed is the assembly order; trajectories are
            // already in assembly direction
            let (order, trajectories): (Vec<usize>, Vec<Trajectory>) =
                removal.into_iter().rev().map(|(i, t)| (search.parts[i].part_id(), t)).unzip();
            AssemblyPlan::new(order, trajectories)
        }
        None => Err(Error::PlanningInfeasible(format!(
            "no removable part found after removing {} of {} parts",
            search.most_removed,
            search.parts.len()
        ))),
    }
}
