//! Procedural assemblies with planner-generated, simulator-verified ground
//! truth.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::classify::{classify_trajectory, lateral_clearance, motion_totals, ClassifyThresholds, TrajectoryCategory};
use super::format::AssemblyRecord;
use super::normalize::{normalization_for, normalize, Normalization};
use crate::error::{invalid_arg, Error, Result};
use crate::geometry::io::quantize_f32;
use crate::geometry::{BoxSolid, PartGeometry, Pose, Trajectory, DEFAULT_STEPS};
use crate::metrics::part_chamfer;
use crate::planners::{disassembly_plan, AssemblyPlan, DisassemblyConfig, PlannerBudget};
use crate::simulator::{step_by_step_evaluate, SimConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SynthKind {
    #[serde(rename = "stack")]
    Stack,
    #[serde(rename = "peg-in-hole")]
    PegInHole,
    #[serde(rename = "l-slot")]
    LSlot,
    #[serde(rename = "bayonet")]
    Bayonet,
}

impl SynthKind {
    pub const ALL: [SynthKind; 4] = [Self::Stack, Self::PegInHole, Self::LSlot, Self::Bayonet];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Stack => "stack",
            Self::PegInHole => "peg-in-hole",
            Self::LSlot => "l-slot",
            Self::Bayonet => "bayonet",
        }
    }
}

impl fmt::Display for SynthKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SynthKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown assembly kind `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    /// Gap between mating faces, in normalized units.
    pub clearance: f64,
    pub points_per_part: usize,
    /// Boxes in a stack.
    pub stack_count: usize,
    pub steps: usize,
    /// Wall-clock limit for the ground-truth planner.
    pub plan_timeout: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            clearance: 0.02,
            points_per_part: 512,
            stack_count: 3,
            steps: DEFAULT_STEPS,
            plan_timeout: 120.0,
        }
    }
}

/// Boxes of the assembled shape, one solid per part, in assembly space.
type Layout = Vec<BoxSolid>;

fn jitter(rng: &mut ChaCha8Rng, base: f64, rel: f64) -> f64 {
    base * (1.0 + rng.gen_range(-rel..=rel))
}

fn stack_layout(rng: &mut ChaCha8Rng, count: usize) -> Layout {
    let mut z = 0.0;
    (0..count)
        .map(|_| {
            let (w, d, h) = (jitter(rng, 0.8, 0.2), jitter(rng, 0.6, 0.2), jitter(rng, 0.2, 0.25));
            let (ox, oy) = (rng.gen_range(-0.05..0.05), rng.gen_range(-0.05..0.05));
            let solid = BoxSolid::new().add([ox - w / 2.0, oy - d / 2.0, z], [ox + w / 2.0, oy + d / 2.0, z + h]);
            z += h;
            solid
        })
        .collect()
}

/// Square peg through an off-centre hole of a thick plate; the peg stands
/// proud of the plate top.
fn peg_layout(rng: &mut ChaCha8Rng, c: f64) -> Layout {
    let plate_h = jitter(rng, 0.4, 0.1);
    let side = jitter(rng, 0.18, 0.1);
    let ox = rng.gen_range(0.15..0.25) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    let oy = rng.gen_range(-0.1..0.1);
    let proud = jitter(rng, 0.12, 0.2);
    let half = side / 2.0;
    let plate = BoxSolid::new()
        .add([-0.5, -0.5, 0.0], [0.5, 0.5, plate_h])
        .cut([ox - half - c, oy - half - c, -1.0], [ox + half + c, oy + half + c, plate_h + 1.0]);
    let peg = BoxSolid::new().add([ox - half, oy - half, 0.0], [ox + half, oy + half, plate_h + proud]);
    vec![plate, peg]
}

/// Slider captured in a T-slot formed by two L-shaped rails on a base,
/// closed at −x and open at +x.
fn slot_layout(rng: &mut ChaCha8Rng, c: f64) -> Layout {
    let len = jitter(rng, 1.0, 0.1);
    let (x0, x1) = (-len / 2.0, len / 2.0);
    let floor = 0.1;
    let body_h = jitter(rng, 0.2, 0.1);
    let lip = 0.1;
    let inner = jitter(rng, 0.22, 0.1);
    let neck = inner / 2.0;
    let wall = 0.1;
    let top = floor + body_h + 2.0 * c;
    let base = BoxSolid::new()
        .add([x0, -inner - wall, 0.0], [x1, inner + wall, top + lip])
        // cavity for the slider body
        .cut([x0 + wall, -inner, floor], [x1 + 1.0, inner, top])
        // gap between the lips for the neck
        .cut([x0 + wall, -neck, top - 0.01], [x1 + 1.0, neck, top + lip + 1.0]);
    let slider = BoxSolid::new()
        .add([x0 + wall + c, -inner + c, floor + c], [x1, inner - c, floor + c + body_h])
        .add([x0 + wall + c, -neck + c, floor + c], [x1, neck - c, top + lip + 0.15]);
    vec![base, slider]
}

/// Key with a cross lug locked under a plate; it leaves by a quarter turn
/// (counter-clockwise about +z) into line with a slot, then a straight
/// pull. The chamber below the plate only allows that quarter turn.
fn bayonet_layout(rng: &mut ChaCha8Rng, c: f64) -> Layout {
    let shaft = jitter(rng, 0.12, 0.1);
    let lug_len = jitter(rng, 0.5, 0.08);
    let lug_w = shaft;
    let lug_h = jitter(rng, 0.1, 0.1);
    let floor = 0.08;
    let plate = jitter(rng, 0.22, 0.1);
    let chamber_top = floor + lug_h + 2.0 * c;
    let top = chamber_top + plate;
    let reach = (lug_len * lug_len / 4.0 + lug_w * lug_w / 4.0).sqrt() + c;
    let outer = reach + 0.12;
    let (hw, hl) = (lug_w / 2.0 + c, lug_len / 2.0 + c);
    let opening = shaft / std::f64::consts::SQRT_2 + c;
    let housing = BoxSolid::new()
        .add([-outer, -outer, 0.0], [outer, outer, top])
        .cut([-hw, -reach, floor], [hw, reach, chamber_top])
        .cut([-reach, -hw, floor], [reach, hw, chamber_top])
        .cut([-reach, 0.0, floor], [0.0, reach, chamber_top])
        .cut([0.0, -reach, floor], [reach, 0.0, chamber_top])
        .cut([-opening, -opening, chamber_top - 0.01], [opening, opening, top + 1.0])
        .cut([-hl, -hw, chamber_top - 0.01], [hl, hw, top + 1.0]);
    let lug_z = floor + c;
    let key = BoxSolid::new()
        .add([-lug_w / 2.0, -lug_len / 2.0, lug_z], [lug_w / 2.0, lug_len / 2.0, lug_z + lug_h])
        .add([-shaft / 2.0, -shaft / 2.0, lug_z], [shaft / 2.0, shaft / 2.0, top + 0.2]);
    vec![housing, key]
}

fn layout(kind: SynthKind, rng: &mut ChaCha8Rng, params: &SynthParams, c: f64) -> Layout {
    match kind {
        SynthKind::Stack => stack_layout(rng, params.stack_count),
        SynthKind::PegInHole => peg_layout(rng, c),
        SynthKind::LSlot => slot_layout(rng, c),
        SynthKind::Bayonet => bayonet_layout(rng, c),
    }
}

/// Parts centred on their box centres, with identity-rotation final poses,
/// bundled as a record whose plan is still stationary.
fn raw_record(kind: SynthKind, seed: u64, params: &SynthParams, c: f64) -> Result<AssemblyRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let solids = layout(kind, &mut rng, params, c);
    let mut parts = Vec::with_capacity(solids.len());
    let mut trajectories = Vec::with_capacity(solids.len());
    for (id, solid) in solids.iter().enumerate() {
        let mesh = solid.mesh()?;
        let center = mesh.aabb().expect("non-empty mesh").center().coords;
        let local = mesh.transformed(|p| p - center);
        let mut sampler = ChaCha8Rng::seed_from_u64(seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(id as u64 + 1)));
        parts.push(PartGeometry::sampled(id, local, params.points_per_part, &mut sampler)?);
        trajectories.push(Trajectory::stationary(id, Pose::from_translation(center), params.steps));
    }
    let n = parts.len();
    Ok(AssemblyRecord {
        id: format!("{}-{seed:06}", kind.name()),
        kind: Some(kind.name().to_string()),
        parts,
        gt_plan: AssemblyPlan::from_trajectories(trajectories)?,
        normalization: Normalization::IDENTITY,
        categories: vec![TrajectoryCategory::Stationary; n],
    })
}

/// Geometry and final poses in normalized space, clouds rounded to `f32`.
/// Mating clearances come out at `clearance` normalized units.
pub fn synth_geometry(kind: SynthKind, params: &SynthParams, seed: u64, clearance: f64) -> Result<AssemblyRecord> {
    if params.points_per_part == 0 || params.steps < 2 {
        return invalid_arg("need points and at least two waypoints");
    }
    if kind == SynthKind::Stack && !(2..=super::format::MAX_PARTS).contains(&params.stack_count) {
        return invalid_arg("stack_count must lie in 2..=20");
    }
    // the outer extents do not depend on the clearance, so one probe pass
    // fixes the scale
    let probe = raw_record(kind, seed, params, clearance)?;
    let scale = normalization_for(&probe)?.scale;
    let record = normalize(&raw_record(kind, seed, params, clearance / scale)?)?;
    let parts = record
        .parts
        .iter()
        .map(|p| {
            let mut pts = p.points().to_vec();
            quantize_f32(&mut pts);
            PartGeometry::new(p.part_id(), p.mesh().clone(), pts)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AssemblyRecord { parts, ..record })
}

/// Plans ground truth for `geometry` by disassembly, replays it in the
/// simulator and tags every trajectory.
pub fn attach_ground_truth(
    geometry: AssemblyRecord,
    params: &SynthParams,
    sim: &SimConfig,
    thresholds: &ClassifyThresholds,
) -> Result<AssemblyRecord> {
    let finals = geometry.gt_plan.final_poses();
    let budget = PlannerBudget {
        timeout: params.plan_timeout,
        ..PlannerBudget::default()
    };
    let cfg = DisassemblyConfig {
        steps: params.steps,
        ..DisassemblyConfig::default()
    };
    let fail = |what: String| Error::GenerationFailed(format!("{}: {what}", geometry.id));
    let plan = disassembly_plan(&geometry.parts, &finals, sim, &budget, &cfg).map_err(|e| fail(format!("planner: {e}")))?;
    let replay = step_by_step_evaluate(&plan, &geometry.parts, sim).map_err(|e| fail(format!("replay: {e}")))?;
    for (r, t) in replay.iter().zip(&plan.trajectories) {
        let part = &geometry.parts[t.part_id];
        let cd = part_chamfer(part, r.executed.last(), t.last())?;
        if !(cd < 1e-2) {
            return Err(fail(format!("part {} ends {cd:.3e} from its goal in replay", t.part_id)));
        }
    }
    let mut categories = vec![TrajectoryCategory::Stationary; geometry.parts.len()];
    for (step, t) in plan.trajectories.iter().enumerate() {
        let placed: Vec<(&PartGeometry, Pose)> = plan.trajectories[..step]
            .iter()
            .map(|p| (&geometry.parts[p.part_id], *p.last()))
            .collect();
        let (_, _, net) = motion_totals(t);
        let clearance = lateral_clearance(&geometry.parts[t.part_id], t.last(), &net, &placed, 0.1)?;
        categories[t.part_id] = classify_trajectory(t, thresholds, Some(clearance.unwrap_or(f64::INFINITY)));
    }
    Ok(AssemblyRecord {
        gt_plan: plan,
        categories,
        ..geometry
    })
}

/// One verified synthetic assembly. Fails rather than emitting a record
/// whose ground truth does not replay.
pub fn synth_generate(kind: SynthKind, params: &SynthParams, seed: u64) -> Result<AssemblyRecord> {
    let sim = SimConfig::default();
    if !(params.clearance > 2.0 * sim.thickness) {
        return invalid_arg(format!(
            "clearance {} must exceed twice the contact thickness ({})",
            params.clearance, sim.thickness
        ));
    }
    let geometry = synth_geometry(kind, params, seed, params.clearance)?;
    attach_ground_truth(geometry, params, &sim, &ClassifyThresholds::default())
}

/// The `index`-th kind of a mixed suite: peg-in-hole and bayonet get at
/// least a quarter each of the first sixteen slots.
pub fn suite_kind(index: usize) -> SynthKind {
    const CYCLE: [SynthKind; 8] = [
        SynthKind::PegInHole,
        SynthKind::Bayonet,
        SynthKind::Stack,
        SynthKind::LSlot,
        SynthKind::PegInHole,
        SynthKind::Stack,
        SynthKind::PegInHole,
        SynthKind::LSlot,
    ];
    CYCLE[index % CYCLE.len()]
}

/// `count` records of the mixed suite, record `i` seeded with `seed + i`.
/// Generated in parallel; the output order and content do not depend on
/// the thread count.
pub fn synth_suite(count: usize, params: &SynthParams, seed: u64) -> Vec<Result<AssemblyRecord>> {
    use rayon::prelude::*;
    (0..count)
        .into_par_iter()
        .map(|i| synth_generate(suite_kind(i), params, seed.wrapping_add(i as u64)))
        .collect()
}
