//! End-to-end acceptance checks, one test per criterion. Each prints a
//! single PASS/FAIL line to the real stdout, so the lines show up even when
//! the harness captures test output.
//!
//! The tests share one synthetic suite and a lock: wall-clock budgets are
//! part of some criteria, so nothing else may run beside them.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Mutex, MutexGuard, OnceLock};
use std::time::Instant;

use asmkit::dataio::{attach_ground_truth, AssemblyRecord, ClassifyThresholds, SynthKind, SynthParams};
use asmkit::evaluate::EvalMode;
use asmkit::geometry::{BoxSolid, PartGeometry, Pose, Trajectory};
use asmkit::manualcam::{rank_cameras, visibility_score, visibility_table, ViewConfig};
use asmkit::metrics::{kendall_tau, part_accuracy, quartiles, PartThreshold};
use asmkit::objectives::{loss_components, total_loss, LossComponents, ObjectiveConfig};
use asmkit::ordering::{assignment_score, hungarian_match, SimilarityMatrix};
use asmkit::planners::{rrt_plan, rrt_search, AssemblyPlan, PlannerBudget, RrtConfig};
use asmkit::simulator::{rollout, SimConfig, SimScene, VelocityProgram};
use asmkit::Error;
use asmkit_cli::*;
use nalgebra::{Point3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn verdict(n: u32, name: &str, pass: bool, detail: String) {
    let line = format!("criterion {n} [{name}]: {} ({detail})\n", if pass { "PASS" } else { "FAIL" });
    std::io::stdout().lock().write_all(line.as_bytes()).unwrap();
    assert!(pass, "criterion {n} failed: {detail}");
}

struct Suite {
    dir: PathBuf,
    records: Vec<AssemblyRecord>,
    synth_s: f64,
    failures: usize,
}

fn work_dir(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance").join(name);
    if dir.exists() {
        std::fs::remove_dir_all(&dir).unwrap();
    }
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

/// Twenty records of the mixed suite, generated once through `synth`.
fn suite() -> &'static Suite {
    static SUITE: OnceLock<Suite> = OnceLock::new();
    SUITE.get_or_init(|| {
        let dir = work_dir("suite");
        let started = Instant::now();
        let report = cmd_synth(
            &SynthArgs {
                kind: None,
                count: 20,
                out: dir.clone(),
            },
            &Context::default(),
        )
        .unwrap();
        let synth_s = started.elapsed().as_secs_f64();
        let mut records: Vec<AssemblyRecord> = report
            .records
            .iter()
            .filter_map(|e| e.id.as_ref())
            .map(|id| AssemblyRecord::load(&dir.join(id)).unwrap())
            .collect();
        records.sort_by(|a, b| a.id.cmp(&b.id));
        Suite {
            dir,
            failures: report.records.iter().filter(|e| e.failure.is_some()).count(),
            records,
            synth_s,
        }
    })
}

fn kind_count(records: &[AssemblyRecord], kind: SynthKind) -> usize {
    records.iter().filter(|r| r.kind.as_deref() == Some(kind.name())).count()
}

#[test]
fn c1_ground_truth_fidelity() {
    let _g = serial();
    let s = suite();
    let started = Instant::now();
    let args = EvaluateArgs {
        gt: s.dir.clone(),
        plan: None,
        mode: EvalMode::Simulate,
    };
    let report = cmd_evaluate(&args, &Context::default()).unwrap();
    let total_s = s.synth_s + started.elapsed().as_secs_f64();
    let m = report.simulate.unwrap().metrics;
    let fcd_median = m.fcd_q50.unwrap();
    let (pegs, bayonets) = (kind_count(&s.records, SynthKind::PegInHole), kind_count(&s.records, SynthKind::Bayonet));
    let pass = s.failures == 0
        && s.records.len() == 20
        && pegs >= 5
        && bayonets >= 2
        && m.pa == 1.0
        && fcd_median < 1e-3
        && total_s < 300.0;
    verdict(
        1,
        "GT fidelity",
        pass,
        format!(
            "{} records ({pegs} peg-in-hole, {bayonets} bayonet), sim PA {}, FCD median {fcd_median:.3e}, {total_s:.1} s",
            s.records.len(),
            m.pa
        ),
    );
}

fn cds_for(record: &Path, plan: Option<&Path>, mode: EvalMode) -> Vec<f64> {
    let args = EvaluateArgs {
        gt: record.to_path_buf(),
        plan: plan.map(Path::to_path_buf),
        mode,
    };
    let report = cmd_evaluate(&args, &Context::default()).unwrap();
    let section = match mode {
        EvalMode::Static => report.static_eval,
        _ => report.simulate,
    };
    section.unwrap().assemblies.into_iter().flat_map(|a| a.part_cds).collect()
}

fn straightline_plan(record: &Path, out: &Path) -> PathBuf {
    let args = PlanArgs {
        assembly: record.to_path_buf(),
        method: Method::Straightline,
        timeout: 1.0,
    };
    let report = cmd_plan(&args, &Context::default()).unwrap();
    assert_eq!(report.status, PlanStatus::Solved);
    let file = out.join(format!("{}.json", report.assembly_id));
    write_json(Some(&file), &report).unwrap();
    file
}

#[test]
fn c2_static_versus_simulated_gap() {
    let _g = serial();
    let s = suite();
    let plans = work_dir("straightline");
    let insertion: Vec<&AssemblyRecord> = s.records.iter().filter(|r| r.categories.iter().any(|c| c.is_insertion())).collect();
    let (mut sl_static, mut sl_sim, mut planned_sim) = (Vec::new(), Vec::new(), Vec::new());
    for r in &insertion {
        let dir = s.dir.join(&r.id);
        let plan = straightline_plan(&dir, &plans);
        sl_static.extend(cds_for(&dir, Some(&plan), EvalMode::Static));
        sl_sim.extend(cds_for(&dir, Some(&plan), EvalMode::Simulate));
        // the stored ground truth is the disassembly planner's output
        planned_sim.extend(cds_for(&dir, None, EvalMode::Simulate));
    }
    let th = PartThreshold::default();
    let pa = |cds: &[f64]| part_accuracy(cds, th).unwrap();
    let (a, b, c) = (pa(&sl_static), pa(&sl_sim), pa(&planned_sim));
    let pass = !insertion.is_empty() && a == 1.0 && b <= 0.5 && c == 1.0;
    verdict(
        2,
        "static vs sim gap",
        pass,
        format!(
            "{} insertion assemblies: straight-line static PA {a}, sim PA {b:.3}; disassembly sim PA {c}",
            insertion.len()
        ),
    );
}

#[test]
fn c3_friction_ablation() {
    let _g = serial();
    let params = SynthParams::default();
    let sim = SimConfig::default();
    // a peg held by less than the contact thickness on each side
    let clearance = 0.9 * sim.thickness;
    let geometry = asmkit::dataio::synth_geometry(SynthKind::PegInHole, &params, 0, clearance).unwrap();
    let record = attach_ground_truth(geometry, &params, &sim, &ClassifyThresholds::default()).unwrap();
    let dir = work_dir("friction").join(&record.id);
    record.save(&dir).unwrap();
    let peg_cd = |kf: f64, mu: f64| {
        let mut ctx = Context::default();
        ctx.settings.sim.kf = kf;
        ctx.settings.sim.mu = mu;
        let report = cmd_simulate(
            &SimulateArgs {
                assembly: dir.clone(),
                plan: None,
            },
            &ctx,
        )
        .unwrap();
        // the peg goes in last
        report.parts.last().unwrap().final_cd
    };
    let (free, sticky) = (peg_cd(0.0, 0.0), peg_cd(1000.0, 0.5));
    verdict(
        3,
        "friction ablation",
        free < 1e-2 && sticky >= 1e-2,
        format!("peg final CD {free:.3e} frictionless, {sticky:.3e} with kf 1000, mu 0.5"),
    );
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for at in 0..=p.len() {
            let mut q = p.clone();
            q.insert(at, n - 1);
            out.push(q);
        }
    }
    out
}

fn brute_tau(pred: &[usize], gt: &[usize]) -> f64 {
    let pos = |order: &[usize], part: usize| order.iter().position(|&x| x == part).unwrap();
    let (mut concordant, mut discordant) = (0i64, 0i64);
    let n = gt.len();
    for a in 0..n {
        for b in a + 1..n {
            if (pos(pred, a) < pos(pred, b)) == (pos(gt, a) < pos(gt, b)) {
                concordant += 1;
            } else {
                discordant += 1;
            }
        }
    }
    (concordant - discordant) as f64 / (concordant + discordant) as f64
}

fn sorted_quartile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let h = (v.len() - 1) as f64 * q;
    let below = v[h.floor() as usize];
    let above = v[h.ceil() as usize];
    below + (h - h.floor()) * (above - below)
}

#[test]
fn c4_metric_exactness() {
    let _g = serial();
    let mut tau_pairs = 0usize;
    let mut tau_ok = true;
    for n in 2..=6 {
        let perms = permutations(n);
        for gt in &perms {
            for pred in &perms {
                tau_pairs += 1;
                tau_ok &= kendall_tau(pred, gt).unwrap() == brute_tau(pred, gt);
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut match_ok = true;
    for trial in 0..1000 {
        let n = rng.gen_range(1..=8);
        // integer entries half the time, so ties between optimal matchings occur
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                (0..n)
                    .map(|_| if trial % 2 == 0 { rng.gen_range(-3..=3) as f64 } else { rng.gen_range(-1.0..1.0) })
                    .collect()
            })
            .collect();
        let sim = SimilarityMatrix::from_rows(&rows).unwrap();
        let best = permutations(n)
            .into_iter()
            .map(|p| {
                let score: f64 = p.iter().enumerate().map(|(s, &c)| rows[s][c]).sum();
                (score, p)
            })
            .fold(None::<(f64, Vec<usize>)>, |acc, (score, p)| match acc {
                Some((b, bp)) if b > score || (b == score && bp < p) => Some((b, bp)),
                _ => Some((score, p)),
            })
            .unwrap();
        let got = hungarian_match(&sim).unwrap();
        match_ok &= assignment_score(&sim, &got.order) == best.0 && got.order == best.1;
    }

    let mut quart_ok = true;
    for len in 1..200 {
        let values: Vec<f64> = (0..len).map(|_| rng.gen_range(-1e3..1e3)).collect();
        let q = quartiles(&values).unwrap();
        for (got, p) in [(q.q25, 0.25), (q.q50, 0.5), (q.q75, 0.75)] {
            quart_ok &= (got - sorted_quartile(&values, p)).abs() <= 1e-12;
        }
    }
    verdict(
        4,
        "metric exactness",
        tau_ok && match_ok && quart_ok,
        format!("kendall tau {tau_pairs} order pairs {tau_ok}, hungarian 1000 matrices {match_ok}, quartiles {quart_ok}"),
    );
}

/// Square-footprint box with grid surface points; a quarter turn about z
/// maps the cloud onto itself.
fn square_part(id: usize, n: usize) -> PartGeometry {
    let (half, height) = (0.3, 0.1);
    let mesh = BoxSolid::cuboid([2.0 * half, 2.0 * half, 2.0 * height]).mesh().unwrap();
    let c = |k: usize| -half + 2.0 * half * k as f64 / (n - 1) as f64;
    let mut pts = Vec::new();
    for i in 0..n {
        for j in 0..n {
            for z in [-height, height] {
                pts.push(Point3::new(c(i), c(j), z));
            }
        }
    }
    PartGeometry::new(id, mesh, pts).unwrap()
}

fn lopsided_part(id: usize) -> PartGeometry {
    let mesh = BoxSolid::new().add([0.0; 3], [0.3, 0.2, 0.1]).add([0.0, 0.0, 0.1], [0.1, 0.1, 0.25]).mesh().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(id as u64);
    PartGeometry::sampled(id, mesh, 256, &mut rng).unwrap()
}

#[test]
fn c5_objective_correctness() {
    let _g = serial();
    let parts = vec![square_part(0, 7), lopsided_part(1)];
    let rest = [
        Pose::from_axis_angle(Vector3::new(0.2, 1.0, 0.3), 0.4, Vector3::new(0.1, 0.2, 0.3)),
        Pose::from_translation(Vector3::new(-0.5, 0.0, 0.2)),
    ];
    // a resting ground truth, so the smoothness terms vanish there too
    let gt: Vec<Trajectory> = (0..2).map(|i| Trajectory::stationary(i, rest[i], 12)).collect();
    let values = |c: &LossComponents| [c.point_cloud, c.translation, c.rotation, c.smooth_translation, c.smooth_rotation];
    let at_gt = values(&loss_components(&gt, &gt, &parts).unwrap());
    let zero_ok = at_gt.iter().all(|v| *v == 0.0);

    // shift by 0.05 and turn by 0.05 rad, one pose at a time
    let mut positive_ok = true;
    for part in 0..2 {
        for k in 0..12 {
            let mut pred = gt.clone();
            let p = pred[part].poses[k];
            let turn = Pose::from_axis_angle(Vector3::new(1.0, -0.5, 0.2), 0.05, Vector3::zeros());
            let shifted = turn.compose(&p).with_translation(p.translation() + Vector3::new(0.05, 0.0, 0.0));
            pred[part].poses[k] = shifted;
            let v = values(&loss_components(&pred, &gt, &parts).unwrap());
            // the point-cloud term only sees final poses
            let final_ok = if k == 11 { v[0] > 0.0 } else { v[0] == 0.0 };
            positive_ok &= final_ok && v[1..].iter().all(|x| *x > 0.0);
        }
    }

    let quarter = Pose::from_axis_angle(Vector3::z(), std::f64::consts::FRAC_PI_2, Vector3::zeros());
    let mut turned = gt.clone();
    for pose in &mut turned[0].poses {
        *pose = pose.compose(&quarter);
    }
    let l_r = loss_components(&turned, &gt, &parts).unwrap().rotation;

    let unit = LossComponents {
        point_cloud: 1.0,
        translation: 1.0,
        rotation: 1.0,
        smooth_translation: 1.0,
        smooth_rotation: 1.0,
    };
    let total = total_loss(&unit, &ObjectiveConfig::default()).unwrap();
    verdict(
        5,
        "objectives",
        zero_ok && positive_ok && l_r < 1e-9 && total == 62.0,
        format!("zero at GT {zero_ok}, positive under perturbation {positive_ok}, symmetric L_R {l_r:.2e}, weighted unit total {total}"),
    );
}

#[test]
fn c6_simulator_contracts() {
    let _g = serial();
    let cfg = SimConfig::default();
    let part = square_part(0, 4);
    let poses: Vec<Pose> = (0..12)
        .map(|k| {
            let s = k as f64 / 11.0;
            Pose::from_axis_angle(Vector3::new(1.0, -2.0, 0.5), 1.1 * s, Vector3::new(0.4 * s, 0.25 * s * s, -0.1 * s))
        })
        .collect();
    let traj = Trajectory::new(0, poses).unwrap();
    let scene = SimScene {
        static_parts: vec![],
        moving_part: part,
        initial_pose: *traj.first(),
    };
    let program = VelocityProgram::from_trajectory(&traj, cfg.dt).unwrap();
    let free = rollout(&scene, &program, &cfg).unwrap();
    let (mut dt_max, mut dr_max) = (0.0f64, 0.0f64);
    for (a, b) in free.executed.poses.iter().zip(&traj.poses) {
        dt_max = dt_max.max((a.translation() - b.translation()).norm());
        dr_max = dr_max.max(a.angle_to(b));
    }
    let free_ok = dt_max <= 1e-15 && dr_max < 1e-6;

    let s = suite();
    let run = |substeps: usize, dir: &Path| {
        let mut ctx = Context::default();
        ctx.settings.sim.substeps = substeps;
        cmd_simulate(
            &SimulateArgs {
                assembly: dir.to_path_buf(),
                plan: None,
            },
            &ctx,
        )
        .unwrap()
    };
    let mut identical = true;
    let mut shift = 0.0f64;
    for r in &s.records {
        let dir = s.dir.join(&r.id);
        let base = run(60, &dir);
        identical &= asmkit_cli::to_json(&base).unwrap() == asmkit_cli::to_json(&run(60, &dir)).unwrap();
        let fine = run(120, &dir);
        for (a, b) in base.parts.iter().zip(&fine.parts) {
            shift = shift.max((a.poses.last().unwrap().translation() - b.poses.last().unwrap().translation()).norm());
        }
    }
    verdict(
        6,
        "simulator contracts",
        free_ok && identical && shift < 1e-3,
        format!(
            "free flight max error {dt_max:.1e} translation, {dr_max:.1e} rad; repeat runs bit-identical {identical}; 60 vs 120 substeps max final shift {shift:.2e}"
        ),
    );
}

#[test]
fn c7_classical_planner_behaviour() {
    let _g = serial();
    let s = suite();
    let record = s.records.iter().find(|r| r.id == "peg-in-hole-000000").unwrap();
    let plate = (&record.parts[0], *record.gt_plan.trajectory_for(0).unwrap().last());
    let peg = &record.parts[1];
    let goal = *record.gt_plan.trajectory_for(1).unwrap().last();
    // above the hole, turned an eighth of a turn out of line with it
    let start = Pose::from_axis_angle(Vector3::z(), std::f64::consts::FRAC_PI_4, goal.translation() + Vector3::z() * 0.5);

    // a run with timeout t is the same seeded search cut off at t, so it
    // succeeds exactly when the uncut search finishes by t
    let grid = [1.0, 5.0, 30.0];
    let mut solve_times = Vec::new();
    for seed in 0..20 {
        let budget = PlannerBudget {
            timeout: grid[2],
            seed,
            ..PlannerBudget::default()
        };
        match rrt_search(peg, &start, &goal, &[plate], &budget, false, &RrtConfig::default()) {
            Ok(r) => solve_times.push(r.elapsed_s),
            Err(Error::PlanningTimeout { .. }) => {}
            Err(e) => panic!("seed {seed}: {e}"),
        }
    }
    let rates: Vec<f64> = grid.iter().map(|t| solve_times.iter().filter(|s| **s <= *t).count() as f64 / 20.0).collect();
    let monotone = rates.windows(2).all(|w| w[0] <= w[1]);

    let inside = goal.with_translation(goal.translation() + Vector3::new(0.05, 0.0, 0.0));
    let t = Instant::now();
    let err = rrt_plan(peg, &start, &inside, &[plate], &PlannerBudget::default(), false, &RrtConfig::default()).unwrap_err();
    let reject_s = t.elapsed().as_secs_f64();
    let rejected = matches!(err, Error::GoalInCollision { .. }) && reject_s < 0.01;
    verdict(
        7,
        "classical planners",
        monotone && rejected,
        format!(
            "RRT success over 20 seeds at 1/5/30 s: {:?}; interpenetrating goal: {err} in {:.2} ms",
            rates,
            reject_s * 1e3
        ),
    );
}

fn slab(id: usize) -> PartGeometry {
    let mesh = BoxSolid::cuboid([0.4, 0.4, 0.05]).mesh().unwrap();
    let pts = mesh.vertices.clone();
    PartGeometry::new(id, mesh, pts).unwrap()
}

#[test]
fn c8_camera_heuristic() {
    let _g = serial();
    // two slabs side by side: from above both show, from the side the near
    // one hides the far one
    let parts = vec![slab(0), slab(1)];
    let at = [Vector3::new(-0.25, 0.0, 0.0), Vector3::new(0.25, 0.0, 0.0)];
    let plan = AssemblyPlan::from_trajectories((0..2).map(|i| Trajectory::stationary(i, Pose::from_translation(at[i]), 12)).collect()).unwrap();
    let config = ViewConfig {
        cameras: vec![[0.0, 0.0, 1.0], [1.0, 0.0, 0.0]],
        resolution: 128,
        ..ViewConfig::default()
    };
    let table = visibility_table(&parts, &plan, &config).unwrap();
    let dominated = (0..2).all(|p| {
        let (f, a) = (&table.n_final, &table.n_assembly);
        f[0][p] >= f[1][p] && a[0][p] >= a[1][p] && (f[0][p] > f[1][p] || a[0][p] > a[1][p])
    });
    let ranking = rank_cameras(&table, &config).unwrap().ranking;
    let zero_ok = [0u64, 1, 20, 1000, u32::MAX as u64].iter().all(|&n_f| visibility_score(0, n_f, 0.05) == 0.0);
    let twenty = visibility_score(20, 20, 0.05);
    let pass = dominated && ranking == vec![0, 1] && zero_ok && (twenty - 2.0 * 2f64.ln()).abs() <= 1e-12;
    verdict(
        8,
        "camera heuristic",
        pass,
        format!("ranking {ranking:?}, score(0, n_f) = 0 {zero_ok}, score(20, 20) = {twenty:.15}"),
    );
}

#[test]
fn c9_deviation_profile() {
    let _g = serial();
    let s = suite();
    let record = s.records.iter().find(|r| r.id == "peg-in-hole-000000").unwrap();
    let dir = s.dir.join(&record.id);
    // straight-line approach drives the peg sideways through the plate
    let plan = straightline_plan(&dir, &work_dir("deviation"));
    let args = EvaluateArgs {
        gt: dir,
        plan: Some(plan),
        mode: EvalMode::Both,
    };
    let report = cmd_evaluate(&args, &Context::default()).unwrap();
    let static_pa = report.static_eval.unwrap().metrics.pa;
    let sim = report.simulate.unwrap().metrics;
    let profile = sim.deviation_profile.unwrap();
    let executed = profile.executed.last().unwrap().q50;
    let predicted = profile.predicted.last().unwrap().q50;
    verdict(
        9,
        "deviation profile",
        executed >= predicted && static_pa == 1.0 && sim.pa < 1.0,
        format!(
            "final-frame median translation error {executed:.3e} executed vs {predicted:.3e} predicted; static PA {static_pa}, sim PA {}",
            sim.pa
        ),
    );
}
