use asmkit::dataio::{synth_geometry, synth_generate, SynthKind, SynthParams};
use asmkit::geometry::{BoxSolid, PartGeometry, Pose, Trajectory};
use asmkit::metrics::{part_chamfer, FinalPoses};
use asmkit::planners::{
    assembly_center_of_mass, disassembly_plan, heuristic_straightline, rrt_plan, rrt_search, AssemblyPlan,
    DisassemblyConfig, PlannerBudget, RrtConfig,
};
use asmkit::simulator::{rollout, SimConfig, SimScene, VelocityProgram};
use asmkit::Error;
use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn sampled(id: usize, solid: BoxSolid, centre: [f64; 3]) -> (PartGeometry, Pose) {
    let mesh = solid.mesh().unwrap();
    let c = Vector3::from(centre);
    let local = mesh.transformed(|p| p - c);
    let mut rng = ChaCha8Rng::seed_from_u64(id as u64);
    (PartGeometry::sampled(id, local, 400, &mut rng).unwrap(), Pose::from_translation(c))
}

fn finals(poses: &[Pose]) -> FinalPoses {
    poses.iter().copied().enumerate().collect()
}

fn rotation_constant(t: &Trajectory) -> bool {
    t.poses.iter().all(|p| p.angle_to(t.first()) < 1e-9)
}

#[test]
fn free_blocks_pull_straight_apart() {
    let (a, pa) = sampled(0, BoxSolid::new().add([-0.5, -0.2, -0.2], [-0.1, 0.2, 0.2]), [-0.3, 0.0, 0.0]);
    let (b, pb) = sampled(1, BoxSolid::new().add([0.1, -0.2, -0.2], [0.5, 0.2, 0.2]), [0.3, 0.0, 0.0]);
    let parts = vec![a, b];
    let plan = disassembly_plan(
        &parts,
        &finals(&[pa, pb]),
        &SimConfig::default(),
        &PlannerBudget::default(),
        &DisassemblyConfig::default(),
    )
    .unwrap();
    assert_eq!(plan.len(), 2);
    for t in &plan.trajectories {
        assert!(rotation_constant(t));
        assert_eq!(t.len(), 12);
        let goal = if t.part_id == 0 { pa } else { pb };
        assert_eq!(*t.last(), goal);
    }
}

#[test]
fn slotted_block_comes_out_upward() {
    let c = 0.02;
    let base = BoxSolid::new().add([-0.5, -0.5, 0.0], [0.5, 0.5, 0.4]).cut([-0.2 - c, -0.2 - c, 0.1], [0.2 + c, 0.2 + c, 1.0]);
    let (base, pb) = sampled(0, base, [0.0, 0.0, 0.2]);
    let (block, pk) = sampled(1, BoxSolid::new().add([-0.2, -0.2, 0.1 + c], [0.2, 0.2, 0.5]), [0.0, 0.0, 0.3]);
    let parts = vec![base, block];
    let plan = disassembly_plan(
        &parts,
        &finals(&[pb, pk]),
        &SimConfig::default(),
        &PlannerBudget::default(),
        &DisassemblyConfig::default(),
    )
    .unwrap();
    assert_eq!(plan.order, vec![0, 1]);
    let insert = &plan.trajectories[1];
    let drop = insert.first().translation() - insert.last().translation();
    // clears the base top (rise 0.28) plus the 5% inflation margin
    assert!(drop.z > 0.3, "{drop}");
    assert!(drop.x.abs() < 1e-3 && drop.y.abs() < 1e-3, "{drop}");
    // monotone descent
    assert!(insert.poses.windows(2).all(|w| w[1].translation().z <= w[0].translation().z + 1e-9));
}

#[test]
fn bayonet_needs_the_torque_probes() {
    let params = SynthParams::default();
    let rec = synth_geometry(SynthKind::Bayonet, &params, 7, params.clearance).unwrap();
    let finals = rec.gt_plan.final_poses();
    let force_only = DisassemblyConfig {
        torque_probes: false,
        ..DisassemblyConfig::default()
    };
    let err = disassembly_plan(&rec.parts, &finals, &SimConfig::default(), &PlannerBudget::default(), &force_only).unwrap_err();
    assert!(matches!(err, Error::PlanningInfeasible(_)), "{err}");
    let plan = disassembly_plan(
        &rec.parts,
        &finals,
        &SimConfig::default(),
        &PlannerBudget::default(),
        &DisassemblyConfig::default(),
    )
    .unwrap();
    let key = plan.trajectory_for(1).unwrap();
    assert!(key.first().angle_to(key.last()) > 80f64.to_radians());
}

#[test]
fn timeout_reports_progress() {
    let params = SynthParams::default();
    let rec = synth_geometry(SynthKind::Bayonet, &params, 7, params.clearance).unwrap();
    let budget = PlannerBudget {
        timeout: 1e-6,
        ..PlannerBudget::default()
    };
    let err = disassembly_plan(
        &rec.parts,
        &rec.gt_plan.final_poses(),
        &SimConfig::default(),
        &budget,
        &DisassemblyConfig::default(),
    )
    .unwrap_err();
    match err {
        Error::PlanningTimeout { progress, .. } => assert!(progress.contains("0 of 2"), "{progress}"),
        other => panic!("{other}"),
    }
}

#[test]
fn reversal_is_an_involution() {
    let rec = synth_generate(SynthKind::PegInHole, &SynthParams::default(), 3).unwrap();
    assert_eq!(rec.gt_plan.reversed().reversed(), rec.gt_plan);
    assert_ne!(rec.gt_plan.reversed(), rec.gt_plan);
}

#[test]
fn straightline_offsets_by_half_the_diagonal() {
    let rec = synth_generate(SynthKind::Stack, &SynthParams::default(), 2).unwrap();
    let finals = rec.gt_plan.final_poses();
    let centre = assembly_center_of_mass(&finals, &rec.parts, 1.0).unwrap();
    let trajs = heuristic_straightline(&finals, &rec.parts, &centre, 12).unwrap();
    for t in &trajs {
        let part = &rec.parts[t.part_id];
        let posed: Vec<_> = part.points().iter().map(|p| finals[&t.part_id].transform_point(p)).collect();
        let diag = asmkit::geometry::Aabb::from_points(posed.iter()).unwrap().diagonal();
        let offset = (t.first().translation() - t.last().translation()).norm();
        assert!((offset - diag / 2.0).abs() < 1e-12, "{offset} vs {}", diag / 2.0);
        assert!(rotation_constant(t));
        assert_eq!(*t.last(), finals[&t.part_id]);
    }
}

fn peg_scene() -> (asmkit::dataio::AssemblyRecord, Pose, Pose) {
    let rec = synth_generate(SynthKind::PegInHole, &SynthParams::default(), 0).unwrap();
    let goal = *rec.gt_plan.trajectory_for(1).unwrap().last();
    let start = Pose::from_axis_angle(Vector3::z(), std::f64::consts::FRAC_PI_4, goal.translation() + Vector3::z() * 0.5);
    (rec, start, goal)
}

#[test]
fn rrt_in_free_space_is_quick() {
    let (rec, _, _) = peg_scene();
    let part = &rec.parts[1];
    let start = Pose::from_translation(Vector3::new(2.0, 0.0, 0.0));
    let goal = Pose::from_axis_angle(Vector3::x(), 1.0, Vector3::new(2.5, 0.3, 0.0));
    let report = rrt_search(part, &start, &goal, &[], &PlannerBudget::default(), false, &RrtConfig::default()).unwrap();
    assert!(report.elapsed_s < 1.0);
    assert_eq!(report.trajectory.len(), 12);
    assert_eq!(*report.trajectory.first(), start);
    assert_eq!(*report.trajectory.last(), goal);
}

#[test]
fn rrt_rejects_a_goal_inside_a_static() {
    let (rec, start, goal) = peg_scene();
    let plate = (&rec.parts[0], *rec.gt_plan.trajectory_for(0).unwrap().last());
    // peg pushed sideways into the plate
    let bad = goal.with_translation(goal.translation() + Vector3::new(0.05, 0.0, 0.0));
    let t = std::time::Instant::now();
    let err = rrt_plan(&rec.parts[1], &start, &bad, &[plate], &PlannerBudget::default(), true, &RrtConfig::default()).unwrap_err();
    assert!(t.elapsed().as_secs_f64() < 0.01);
    match err {
        Error::GoalInCollision { penetration } => assert!(penetration > 0.01, "{penetration}"),
        other => panic!("{other}"),
    }
}

#[test]
fn rrt_is_seeded_and_its_plans_execute() {
    let (rec, start, goal) = peg_scene();
    let plate = (&rec.parts[0], *rec.gt_plan.trajectory_for(0).unwrap().last());
    for connect in [false, true] {
        let budget = PlannerBudget {
            timeout: 30.0,
            seed: 4,
            ..PlannerBudget::default()
        };
        let a = rrt_plan(&rec.parts[1], &start, &goal, &[plate], &budget, connect, &RrtConfig::default()).unwrap();
        let b = rrt_plan(&rec.parts[1], &start, &goal, &[plate], &budget, connect, &RrtConfig::default()).unwrap();
        assert_eq!(a, b);
        let sim = SimConfig::default();
        let scene = SimScene {
            static_parts: vec![(plate.0.clone(), plate.1)],
            moving_part: rec.parts[1].clone(),
            initial_pose: start,
        };
        let out = rollout(&scene, &VelocityProgram::from_trajectory(&a, sim.dt).unwrap(), &sim).unwrap();
        let cd = part_chamfer(&rec.parts[1], out.executed.last(), &goal).unwrap();
        assert!(cd < 1e-2, "connect={connect}: {cd}");
    }
}

#[test]
fn plan_validation_catches_mismatches() {
    let t0 = Trajectory::stationary(0, Pose::identity(), 12);
    let t1 = Trajectory::stationary(1, Pose::identity(), 12);
    assert!(AssemblyPlan::new(vec![0, 1], vec![t0.clone(), t1.clone()]).is_ok());
    assert!(AssemblyPlan::new(vec![1, 0], vec![t0.clone(), t1.clone()]).is_err());
    assert!(AssemblyPlan::new(vec![0, 0], vec![t0.clone(), t0.clone()]).is_err());
    let short = Trajectory::stationary(1, Pose::identity(), 5);
    assert!(AssemblyPlan::new(vec![0, 1], vec![t0, short]).is_err());
}

