use std::collections::BTreeSet;

use asmkit::geometry::{BoxSolid, PartGeometry, Pose, Trajectory};
use asmkit::metrics::FinalPoses;
use asmkit::planners::AssemblyPlan;
use asmkit::simulator::{
    resolve_penetrations, rollout, step_by_step_evaluate, SimConfig, SimScene, VelocityProgram,
};
use nalgebra::{Point3, Vector3};

/// Box with surface points on a regular grid (`n` per edge).
fn grid_box(id: usize, min: [f64; 3], max: [f64; 3], n: usize) -> PartGeometry {
    let mesh = BoxSolid::new().add(min, max).mesh().unwrap();
    let mut seen = BTreeSet::new();
    let mut pts = Vec::new();
    let coord = |axis: usize, k: usize| min[axis] + (max[axis] - min[axis]) * k as f64 / (n - 1) as f64;
    for axis in 0..3 {
        for side in [0, n - 1] {
            for i in 0..n {
                for j in 0..n {
                    let mut idx = [0; 3];
                    idx[axis] = side;
                    idx[(axis + 1) % 3] = i;
                    idx[(axis + 2) % 3] = j;
                    if seen.insert(idx) {
                        pts.push(Point3::new(coord(0, idx[0]), coord(1, idx[1]), coord(2, idx[2])));
                    }
                }
            }
        }
    }
    PartGeometry::new(id, mesh, pts).unwrap()
}

fn line(id: usize, from: Vector3<f64>, to: Vector3<f64>, steps: usize) -> Trajectory {
    let poses = (0..steps)
        .map(|k| Pose::from_translation(from + (to - from) * (k as f64 / (steps - 1) as f64)))
        .collect();
    Trajectory::new(id, poses).unwrap()
}

#[test]
fn free_space_reproduces_commanded_poses() {
    let part = grid_box(0, [-0.1; 3], [0.1; 3], 4);
    let poses: Vec<Pose> = (0..12)
        .map(|k| {
            let s = k as f64 / 11.0;
            Pose::from_axis_angle(
                Vector3::new(1.0, 2.0, 0.5).normalize(),
                1.3 * s,
                Vector3::new(0.3 * s, -0.2 * s * s, 0.1),
            )
        })
        .collect();
    let traj = Trajectory::new(0, poses).unwrap();
    let scene = SimScene {
        static_parts: vec![],
        moving_part: part,
        initial_pose: *traj.first(),
    };
    let cfg = SimConfig::default();
    let result = rollout(&scene, &VelocityProgram::from_trajectory(&traj, cfg.dt).unwrap(), &cfg).unwrap();
    assert_eq!(result.executed.len(), 12);
    assert_eq!(result.contact_events, 0);
    for (a, b) in result.executed.poses.iter().zip(&traj.poses) {
        assert!((a.translation() - b.translation()).norm() <= 1e-15);
        assert!(a.angle_to(b) < 1e-6);
    }
}

#[test]
fn constant_velocity_final_translation() {
    let part = grid_box(0, [-0.1; 3], [0.1; 3], 3);
    let v = Vector3::new(0.125, -0.25, 0.5);
    let program = VelocityProgram::new(vec![(v, Vector3::zeros()); 7]).unwrap();
    let scene = SimScene {
        static_parts: vec![],
        moving_part: part,
        initial_pose: Pose::identity(),
    };
    let r = rollout(&scene, &program, &SimConfig::default()).unwrap();
    assert_eq!(*r.executed.last().translation(), v * 7.0);
    assert_eq!(r.executed.last().quat_wxyz(), [1.0, 0.0, 0.0, 0.0]);
}

/// Point mass driven into a wall under the same linearly implicit penalty
/// law. `x` is how far the leading face sits past the wall surface; returns
/// the deepest contact depth (`thickness + x`).
fn oracle_max_depth(mass: f64, contacts: f64, gap: f64, v_cmd: f64, cfg: &SimConfig, intervals: usize) -> f64 {
    let h = cfg.substep();
    let (k, c) = (cfg.ke * contacts, cfg.kd * contacts);
    let mut x = -gap;
    let mut max_depth = 0.0f64;
    for _ in 0..intervals {
        let mut v = v_cmd;
        for _ in 0..cfg.substeps {
            let depth = cfg.thickness + x;
            if depth > 0.0 {
                max_depth = max_depth.max(depth);
                let v_new = (mass * v - h * k * depth) / (mass + h * (h * k + c));
                let force = k * (depth + h * v_new) + c * v_new;
                if force >= 0.0 {
                    v = v_new;
                }
            }
            x += h * v;
        }
    }
    max_depth
}

#[test]
fn wall_stops_the_part() {
    let cfg = SimConfig::default();
    let part = grid_box(0, [-0.1; 3], [0.1; 3], 5);
    let wall = grid_box(1, [0.5, -0.5, -0.5], [0.7, 0.5, 0.5], 3);
    let traj = line(0, Vector3::zeros(), Vector3::new(1.1, 0.0, 0.0), 12);
    let scene = SimScene {
        static_parts: vec![(wall, Pose::identity())],
        moving_part: part.clone(),
        initial_pose: Pose::identity(),
    };
    let r = rollout(&scene, &VelocityProgram::from_trajectory(&traj, cfg.dt).unwrap(), &cfg).unwrap();
    let final_x = r.executed.last().translation().x;
    assert!(final_x < 0.4 + 1e-3, "passed through: {final_x}");
    assert!(r.contact_events > 0);
    let mass = asmkit::simulator::mass_properties(&part, cfg.density).0;
    let oracle = oracle_max_depth(mass, 25.0, 0.4, 0.1, &cfg, 11);
    let pen = r.max_penetration;
    assert!(pen <= oracle * 1.05 + 1e-12, "sim {pen} oracle {oracle}");
    assert!(pen >= oracle * 0.95, "sim {pen} oracle {oracle}");
}

#[test]
fn rollouts_are_bit_identical() {
    let cfg = SimConfig::default();
    let part = grid_box(0, [-0.1; 3], [0.1; 3], 4);
    let wall = grid_box(1, [0.3, -0.5, -0.5], [0.5, 0.5, 0.5], 3);
    let poses: Vec<Pose> = (0..12)
        .map(|k| Pose::from_axis_angle(Vector3::z(), 0.05 * k as f64, Vector3::new(0.06 * k as f64, 0.01, 0.0)))
        .collect();
    let traj = Trajectory::new(0, poses).unwrap();
    let scene = SimScene {
        static_parts: vec![(wall, Pose::identity())],
        moving_part: part,
        initial_pose: *traj.first(),
    };
    let program = VelocityProgram::from_trajectory(&traj, cfg.dt).unwrap();
    let a = rollout(&scene, &program, &cfg).unwrap();
    let b = rollout(&scene, &program, &cfg).unwrap();
    assert_eq!(a, b);
    assert!(a.contact_events > 0);
}

#[test]
fn stacked_blocks_order_matters() {
    let cfg = SimConfig::default();
    let bottom = grid_box(0, [-0.2, -0.2, -0.1], [0.2, 0.2, 0.1], 5);
    let top = grid_box(1, [-0.2, -0.2, -0.1], [0.2, 0.2, 0.1], 5);
    let parts = vec![bottom, top];
    let lift = Vector3::new(0.0, 0.0, 0.6);
    let final0 = Vector3::zeros();
    let final1 = Vector3::new(0.0, 0.0, 0.2);
    let gt = AssemblyPlan::new(
        vec![0, 1],
        vec![line(0, final0 - lift, final0, 12), line(1, final1 + lift, final1, 12)],
    )
    .unwrap();
    let results = step_by_step_evaluate(&gt, &parts, &cfg).unwrap();
    for (r, t) in results.iter().zip(&gt.trajectories) {
        assert!((r.executed.last().translation() - t.last().translation()).norm() < 1e-3);
    }

    // top placed first, then the bottom block comes up from below into it
    let wrong = AssemblyPlan::new(
        vec![1, 0],
        vec![line(1, final1 + lift, final1, 12), line(0, final0 - lift, final0 + Vector3::new(0.0, 0.0, 0.15), 12)],
    )
    .unwrap();
    let results = step_by_step_evaluate(&wrong, &parts, &cfg).unwrap();
    let stopped = results[1].executed.last().translation().z;
    assert!(stopped < 0.0 + 1e-3, "bottom block should stop under the top one: {stopped}");
}

#[test]
fn resolve_leaves_clean_scene_untouched() {
    let cfg = SimConfig::default();
    let parts = vec![grid_box(0, [-0.5; 3], [0.5; 3], 4), grid_box(1, [-0.5; 3], [0.5; 3], 4)];
    let poses: FinalPoses = [(0, Pose::identity()), (1, Pose::from_translation(Vector3::new(1.5, 0.0, 0.0)))].into();
    let r = resolve_penetrations(&poses, &parts, &cfg, 1.0).unwrap();
    assert!(r.converged);
    assert_eq!(r.poses, poses);
}

#[test]
fn resolve_pushes_overlapping_cubes_apart_symmetrically() {
    let cfg = SimConfig::default();
    let parts = vec![grid_box(0, [-0.5; 3], [0.5; 3], 6), grid_box(1, [-0.5; 3], [0.5; 3], 6)];
    let poses: FinalPoses = [
        (0, Pose::from_translation(Vector3::new(-0.45, 0.0, 0.0))),
        (1, Pose::from_translation(Vector3::new(0.45, 0.0, 0.0))),
    ]
    .into();
    let r = resolve_penetrations(&poses, &parts, &cfg, 5.0).unwrap();
    assert!(r.converged, "{r:?}");
    let a = r.poses[&0].translation();
    let b = r.poses[&1].translation();
    assert!(b.x - a.x >= 1.0 - cfg.thickness, "gap {}", b.x - a.x);
    let (da, db) = (-0.45 - a.x, b.x - 0.45);
    assert!((da - db).abs() < 1e-9 * (1.0 + da.abs()), "{da} {db}");
}

#[test]
fn resolve_deep_overlap_moves_parts_far() {
    let cfg = SimConfig::default();
    let parts = vec![grid_box(0, [-0.5; 3], [0.5; 3], 6), grid_box(1, [-0.5; 3], [0.5; 3], 6)];
    let poses: FinalPoses = [
        (0, Pose::identity()),
        (1, Pose::from_translation(Vector3::new(0.55, 0.05, 0.0))),
    ]
    .into();
    let r = resolve_penetrations(&poses, &parts, &cfg, 10.0).unwrap();
    assert!(r.converged);
    let moved: f64 = poses
        .iter()
        .map(|(id, p)| (r.poses[id].translation() - p.translation()).norm())
        .sum();
    assert!(moved > 0.4, "moved {moved}");
}
