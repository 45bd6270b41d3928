use std::path::PathBuf;
use std::time::Instant;

use asmkit::geometry::Pose;
use asmkit::metrics::part_chamfer;
use asmkit::simulator::step_by_step_evaluate;
use serde::{Deserialize, Serialize};

use crate::manifest::RunManifest;
use crate::records::{load_record, plan_for};
use crate::settings::Context;

#[derive(Debug, Clone)]
pub struct SimulateArgs {
    pub assembly: PathBuf,
    /// Defaults to the record's ground-truth plan.
    pub plan: Option<PathBuf>,
}

/// One executed step. `part_id` and `poses` match the trajectory file
/// layout, so a report doubles as a plan of what actually happened.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulatedPart {
    pub part_id: usize,
    pub poses: Vec<Pose>,
    /// Chamfer distance between the reached and the commanded final pose.
    pub final_cd: f64,
    pub contact_events: usize,
    pub max_penetration: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateReport {
    pub assembly_id: String,
    #[serde(rename = "T")]
    pub steps: usize,
    pub parts: Vec<SimulatedPart>,
    pub manifest: RunManifest,
}

pub fn cmd_simulate(args: &SimulateArgs, ctx: &Context) -> anyhow::Result<SimulateReport> {
    let started = Instant::now();
    let record = load_record(&args.assembly)?;
    let plan = plan_for(&record, args.plan.as_deref())?;
    let rollouts = step_by_step_evaluate(&plan, &record.parts, &ctx.settings.sim)?;
    let parts = rollouts
        .into_iter()
        .zip(&plan.trajectories)
        .map(|(r, planned)| {
            let part = &record.parts[planned.part_id];
            Ok(SimulatedPart {
                part_id: planned.part_id,
                final_cd: part_chamfer(part, r.executed.last(), planned.last())?,
                poses: r.executed.poses,
                contact_events: r.contact_events,
                max_penetration: r.max_penetration,
            })
        })
        .collect::<asmkit::Result<Vec<_>>>()?;
    let mut manifest = RunManifest::new("simulate", ctx).arg("assembly", args.assembly.display()).input(&args.assembly)?;
    if let Some(p) = &args.plan {
        manifest = manifest.arg("plan", p.display()).input(p)?;
    }
    Ok(SimulateReport {
        assembly_id: record.id,
        steps: plan.steps(),
        parts,
        manifest: manifest.finish(ctx, started),
    })
}
