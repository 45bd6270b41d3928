//! Sampling-based planners over SE(3) for a single part among fixed ones.

use std::time::Instant;

use nalgebra::{Point3, Quaternion, UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::resample::{pose_distance, resample_preserving_corners};
use super::PlannerBudget;
use crate::error::{invalid_arg, Error, Result};
use crate::geometry::{Aabb, PartGeometry, Pose, Trajectory};
use crate::simulator::{build_colliders, MeshCollider};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RrtConfig {
    pub goal_bias: f64,
    /// Steering step as a fraction of the workspace diagonal.
    pub step_fraction: f64,
    /// Edge collision-check spacing as a fraction of the workspace diagonal.
    pub check_fraction: f64,
    /// Goal translation tolerance as a fraction of the workspace diagonal.
    pub goal_translation_fraction: f64,
    /// Goal rotation tolerance in degrees.
    pub goal_angle_deg: f64,
    /// Sampling box inflation as a fraction of the workspace diagonal.
    pub workspace_margin: f64,
    pub steps: usize,
}

impl Default for RrtConfig {
    fn default() -> Self {
        Self {
            goal_bias: 0.1,
            step_fraction: 0.05,
            check_fraction: 0.005,
            goal_translation_fraction: 0.01,
            goal_angle_deg: 5.0,
            workspace_margin: 0.1,
            steps: crate::geometry::DEFAULT_STEPS,
        }
    }
}

/// A successful search with its cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RrtReport {
    pub trajectory: Trajectory,
    pub elapsed_s: f64,
    pub iterations: usize,
    pub nodes: usize,
}

/// Point-cloud-in-mesh collision test against posed static parts.
pub struct CollisionChecker<'a> {
    points: &'a [Point3<f64>],
    local_box: Aabb,
    colliders: Vec<MeshCollider>,
    poses: Vec<Pose>,
    boxes: Vec<Aabb>,
}

fn posed_box(local: &Aabb, pose: &Pose) -> Aabb {
    let corners: Vec<Point3<f64>> = (0..8)
        .map(|i| {
            pose.transform_point(&Point3::new(
                if i & 1 == 0 { local.min.x } else { local.max.x },
                if i & 2 == 0 { local.min.y } else { local.max.y },
                if i & 4 == 0 { local.min.z } else { local.max.z },
            ))
        })
        .collect();
    Aabb::from_points(corners.iter()).expect("eight corners")
}

impl<'a> CollisionChecker<'a> {
    pub fn new(part: &'a PartGeometry, statics: &[(&PartGeometry, Pose)]) -> Result<Self> {
        let colliders = build_colliders(statics.iter().map(|(p, _)| *p))?;
        let poses: Vec<Pose> = statics.iter().map(|(_, q)| *q).collect();
        let boxes = colliders.iter().zip(&poses).map(|(c, q)| posed_box(c.aabb(), q)).collect();
        Ok(Self {
            points: part.points(),
            local_box: Aabb::from_points(part.points().iter()).expect("non-empty cloud"),
            colliders,
            poses,
            boxes,
        })
    }

    /// True when some point lies strictly inside a static part.
    pub fn in_collision(&self, pose: &Pose) -> bool {
        let moving = posed_box(&self.local_box, pose);
        for ((collider, q), b) in self.colliders.iter().zip(&self.poses).zip(&self.boxes) {
            if !moving.intersects(b) {
                continue;
            }
            for p in self.points {
                let world = pose.transform_point(p);
                if b.contains(&world) && collider.contains(&q.inverse_transform_point(&world)) {
                    return true;
                }
            }
        }
        false
    }

    /// Deepest point below any static surface (0 when free).
    pub fn penetration(&self, pose: &Pose) -> f64 {
        let mut deepest = 0.0f64;
        for (collider, q) in self.colliders.iter().zip(&self.poses) {
            for p in self.points {
                let local = q.inverse_transform_point(&pose.transform_point(p));
                if let Some(s) = collider.query(&local, f64::MIN_POSITIVE) {
                    deepest = deepest.max(-s.signed_distance);
                }
            }
        }
        deepest
    }

    pub fn workspace(&self, extra: &[Pose]) -> Aabb {
        let mut b = self.boxes.iter().copied().reduce(|a, b| a.union(&b));
        for pose in extra {
            let pb = posed_box(&self.local_box, pose);
            b = Some(match b {
                Some(a) => a.union(&pb),
                None => pb,
            });
        }
        b.expect("workspace needs at least one box")
    }
}

struct Tree {
    poses: Vec<Pose>,
    parents: Vec<usize>,
}

impl Tree {
    fn new(root: Pose) -> Self {
        Self {
            poses: vec![root],
            parents: vec![usize::MAX],
        }
    }

    fn nearest(&self, q: &Pose, w_r: f64) -> usize {
        let mut best = (0, f64::INFINITY);
        for (i, p) in self.poses.iter().enumerate() {
            let d = pose_distance(p, q, w_r);
            if d < best.1 {
                best = (i, d);
            }
        }
        best.0
    }

    fn push(&mut self, pose: Pose, parent: usize) -> usize {
        self.poses.push(pose);
        self.parents.push(parent);
        self.poses.len() - 1
    }

    /// Poses from the root to `i`.
    fn branch(&self, mut i: usize) -> Vec<Pose> {
        let mut out = vec![];
        while i != usize::MAX {
            out.push(self.poses[i]);
            i = self.parents[i];
        }
        out.reverse();
        out
    }
}

struct Planner<'a> {
    checker: CollisionChecker<'a>,
    w_r: f64,
    step: f64,
    resolution: f64,
    lo: Vector3<f64>,
    hi: Vector3<f64>,
    rng: ChaCha8Rng,
}

fn uniform_rotation(rng: &mut impl Rng) -> UnitQuaternion<f64> {
    let (u1, u2, u3): (f64, f64, f64) = (rng.gen(), rng.gen(), rng.gen());
    let tau = std::f64::consts::TAU;
    let (a, b) = ((1.0 - u1).sqrt(), u1.sqrt());
    UnitQuaternion::from_quaternion(Quaternion::new(
        b * (tau * u3).cos(),
        a * (tau * u2).sin(),
        a * (tau * u2).cos(),
        b * (tau * u3).sin(),
    ))
}

enum Extend {
    Reached(usize),
    Advanced(usize),
    Trapped,
}

impl<'a> Planner<'a> {
    fn sample(&mut self) -> Pose {
        let t = Vector3::from_fn(|i, _| self.rng.gen_range(self.lo[i]..=self.hi[i]));
        Pose::from_parts(uniform_rotation(&mut self.rng), t)
    }

    fn edge_free(&self, a: &Pose, b: &Pose) -> bool {
        let n = (pose_distance(a, b, self.w_r) / self.resolution).ceil().max(1.0) as usize;
        (1..=n).all(|k| !self.checker.in_collision(&a.interpolate(b, k as f64 / n as f64)))
    }

    fn extend(&self, tree: &mut Tree, target: &Pose) -> Extend {
        let near = tree.nearest(target, self.w_r);
        let from = tree.poses[near];
        let d = pose_distance(&from, target, self.w_r);
        let (to, reached) = if d <= self.step { (*target, true) } else { (from.interpolate(target, self.step / d), false) };
        if !self.edge_free(&from, &to) {
            return Extend::Trapped;
        }
        let i = tree.push(to, near);
        if reached {
            Extend::Reached(i)
        } else {
            Extend::Advanced(i)
        }
    }

    /// Greedy shortcutting: from each kept pose jump to the farthest pose
    /// reachable by a free straight edge.
    fn shortcut(&self, path: Vec<Pose>) -> Vec<Pose> {
        let mut out = vec![path[0]];
        let mut i = 0;
        while i < path.len() - 1 {
            let mut j = path.len() - 1;
            while j > i + 1 && !self.edge_free(&path[i], &path[j]) {
                j -= 1;
            }
            out.push(path[j]);
            i = j;
        }
        out
    }
}

/// Plans a collision-free motion of `part` from `start` to `goal` among the
/// posed `statics`. Bidirectional when `connect` is set.
pub fn rrt_plan(
    part: &PartGeometry,
    start: &Pose,
    goal: &Pose,
    statics: &[(&PartGeometry, Pose)],
    budget: &PlannerBudget,
    connect: bool,
    cfg: &RrtConfig,
) -> Result<Trajectory> {
    rrt_search(part, start, goal, statics, budget, connect, cfg).map(|r| r.trajectory)
}

/// [`rrt_plan`] with timing and tree statistics.
pub fn rrt_search(
    part: &PartGeometry,
    start: &Pose,
    goal: &Pose,
    statics: &[(&PartGeometry, Pose)],
    budget: &PlannerBudget,
    connect: bool,
    cfg: &RrtConfig,
) -> Result<RrtReport> {
    let started = Instant::now();
    budget.validate()?;
    if cfg.steps < 2 {
        return invalid_arg("need at least two waypoints");
    }
    let checker = CollisionChecker::new(part, statics)?;
    if checker.in_collision(goal) {
        return Err(Error::GoalInCollision {
            penetration: checker.penetration(goal),
        });
    }
    if checker.in_collision(start) {
        return invalid_arg("start pose is in collision");
    }
    let ws = checker.workspace(&[*start, *goal]);
    let diag = ws.diagonal();
    let ws = ws.inflated(cfg.workspace_margin * diag);
    let w_r = diag / std::f64::consts::PI;
    let mut planner = Planner {
        checker,
        w_r,
        step: cfg.step_fraction * diag,
        resolution: cfg.check_fraction * diag,
        lo: ws.min.coords,
        hi: ws.max.coords,
        rng: ChaCha8Rng::seed_from_u64(budget.seed),
    };
    let goal_t = cfg.goal_translation_fraction * diag;
    let goal_r = cfg.goal_angle_deg.to_radians();

    let mut a = Tree::new(*start);
    let mut b = Tree::new(*goal);
    // whether `a` currently holds the start tree
    let mut a_is_start = true;
    let mut iterations = 0usize;
    let path = loop {
        let elapsed = started.elapsed().as_secs_f64();
        if elapsed > budget.timeout || iterations >= budget.max_iterations {
            return Err(Error::PlanningTimeout {
                elapsed_s: elapsed,
                progress: format!("{iterations} iterations, {} nodes", a.poses.len() + b.poses.len()),
            });
        }
        iterations += 1;
        let biased = planner.rng.gen::<f64>() < cfg.goal_bias;
        if !connect {
            let target = if biased { *goal } else { planner.sample() };
            if let Extend::Reached(i) | Extend::Advanced(i) = planner.extend(&mut a, &target) {
                let p = a.poses[i];
                let close = (p.translation() - goal.translation()).norm() <= goal_t && p.angle_to(goal) <= goal_r;
                if close && planner.edge_free(&p, goal) {
                    let mut path = a.branch(i);
                    if path.last() != Some(goal) {
                        path.push(*goal);
                    }
                    break path;
                }
            }
            continue;
        }
        let target = if biased { b.poses[0] } else { planner.sample() };
        if let Extend::Reached(i) | Extend::Advanced(i) = planner.extend(&mut a, &target) {
            let q = a.poses[i];
            let joined = loop {
                match planner.extend(&mut b, &q) {
                    Extend::Reached(j) => break Some(j),
                    Extend::Advanced(_) => continue,
                    Extend::Trapped => break None,
                }
            };
            if let Some(j) = joined {
                let mut from_a = a.branch(i);
                let mut from_b = b.branch(j);
                from_b.pop();
                from_b.reverse();
                from_a.extend(from_b);
                if !a_is_start {
                    from_a.reverse();
                }
                break from_a;
            }
        }
        std::mem::swap(&mut a, &mut b);
        a_is_start = !a_is_start;
    };
    let path = planner.shortcut(path);
    let mut poses = resample_preserving_corners(&path, cfg.steps, w_r, 1e-9 * diag)?;
    poses[0] = *start;
    *poses.last_mut().unwrap() = *goal;
    Ok(RrtReport {
        trajectory: Trajectory::new(part.part_id(), poses)?,
        elapsed_s: started.elapsed().as_secs_f64(),
        iterations,
        nodes: a.poses.len() + b.poses.len(),
    })
}
