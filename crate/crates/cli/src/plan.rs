use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use asmkit::dataio::{AssemblyRecord, PartPoses, TrajectoryFile};
use asmkit::geometry::Trajectory;
use asmkit::planners::{
    assembly_center_of_mass, disassembly_plan, heuristic_straightline, rrt_plan, AssemblyPlan, DisassemblyConfig, PlannerBudget,
    RrtConfig,
};
use asmkit::Error;
use serde::{Deserialize, Serialize};

use crate::manifest::RunManifest;
use crate::records::load_record;
use crate::settings::Context;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Disassembly,
    Straightline,
    Rrt,
    RrtConnect,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Disassembly, Method::Straightline, Method::Rrt, Method::RrtConnect];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Disassembly => "disassembly",
            Self::Straightline => "straightline",
            Self::Rrt => "rrt",
            Self::RrtConnect => "rrt-connect",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| anyhow::anyhow!("unknown method `{s}`, expected one of disassembly, straightline, rrt, rrt-connect"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlanStatus {
    Solved,
    Timeout,
    Infeasible,
    GoalInCollision,
    Diverged,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanOutcome {
    pub status: PlanStatus,
    pub detail: Option<String>,
    pub plan: Option<AssemblyPlan>,
}

impl PlanOutcome {
    fn failed(status: PlanStatus, e: &Error) -> Self {
        Self {
            status,
            detail: Some(e.to_string()),
            plan: None,
        }
    }
}

/// RRT per step in ground-truth order, from each ground-truth start pose to
/// its final pose among the parts already placed. The budget is shared by
/// all steps.
fn rrt_assembly(record: &AssemblyRecord, budget: &PlannerBudget, connect: bool, steps: usize) -> asmkit::Result<AssemblyPlan> {
    let started = Instant::now();
    let gt = &record.gt_plan;
    let cfg = RrtConfig {
        steps,
        ..RrtConfig::default()
    };
    let mut trajectories = Vec::with_capacity(gt.len());
    for (k, traj) in gt.trajectories.iter().enumerate() {
        let placed: Vec<_> = gt.trajectories[..k]
            .iter()
            .map(|t| (&record.parts[t.part_id], *t.last()))
            .collect();
        let remaining = budget.timeout - started.elapsed().as_secs_f64();
        if remaining <= 0.0 {
            return Err(Error::PlanningTimeout {
                elapsed_s: started.elapsed().as_secs_f64(),
                progress: format!("{k} of {} parts planned", gt.len()),
            });
        }
        let step_budget = PlannerBudget {
            timeout: remaining,
            seed: budget.seed.wrapping_add(k as u64),
            ..*budget
        };
        let part = &record.parts[traj.part_id];
        trajectories.push(rrt_plan(part, traj.first(), traj.last(), &placed, &step_budget, connect, &cfg)?);
    }
    AssemblyPlan::new(gt.order.clone(), trajectories)
}

/// Runs one planner on one record. Planner failures come back as a status;
/// only bad input is an error.
pub fn plan_record(record: &AssemblyRecord, method: Method, timeout: f64, ctx: &Context) -> asmkit::Result<PlanOutcome> {
    let gt = &record.gt_plan;
    let steps = gt.steps();
    let budget = PlannerBudget {
        timeout,
        max_iterations: ctx.settings.max_iterations,
        seed: ctx.seed,
    };
    let result = match method {
        Method::Disassembly => {
            let cfg = DisassemblyConfig {
                steps,
                ..DisassemblyConfig::default()
            };
            disassembly_plan(&record.parts, &gt.final_poses(), &ctx.settings.sim, &budget, &cfg)
        }
        Method::Straightline => {
            let finals = gt.final_poses();
            let center = assembly_center_of_mass(&finals, &record.parts, ctx.settings.sim.density)?;
            let mut by_part: BTreeMap<usize, Trajectory> = heuristic_straightline(&finals, &record.parts, &center, steps)?
                .into_iter()
                .map(|t| (t.part_id, t))
                .collect();
            // placed in ground-truth order
            let trajectories = gt.order.iter().map(|id| by_part.remove(id).expect("one trajectory per part")).collect();
            AssemblyPlan::new(gt.order.clone(), trajectories)
        }
        Method::Rrt | Method::RrtConnect => rrt_assembly(record, &budget, method == Method::RrtConnect, steps),
    };
    Ok(match result {
        Ok(plan) => PlanOutcome {
            status: PlanStatus::Solved,
            detail: None,
            plan: Some(plan),
        },
        Err(e @ Error::PlanningTimeout { .. }) => PlanOutcome::failed(PlanStatus::Timeout, &e),
        Err(e @ Error::PlanningInfeasible(_)) => PlanOutcome::failed(PlanStatus::Infeasible, &e),
        Err(e @ Error::GoalInCollision { .. }) => PlanOutcome::failed(PlanStatus::GoalInCollision, &e),
        Err(e @ Error::SimulationDiverged { .. }) => PlanOutcome::failed(PlanStatus::Diverged, &e),
        Err(e) => return Err(e),
    })
}

#[derive(Debug, Clone)]
pub struct PlanArgs {
    pub assembly: PathBuf,
    pub method: Method,
    /// Wall-clock seconds.
    pub timeout: f64,
}

/// A trajectory file when solved: `assembly_id`, `T` and `parts` are laid
/// out as in any other plan, so the report can be fed to `evaluate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanReport {
    pub assembly_id: String,
    #[serde(rename = "T", default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parts: Option<Vec<PartPoses>>,
    pub method: Method,
    pub timeout: f64,
    pub status: PlanStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    pub manifest: RunManifest,
}

impl PlanReport {
    pub fn trajectory_file(&self) -> Option<TrajectoryFile> {
        Some(TrajectoryFile {
            assembly_id: self.assembly_id.clone(),
            steps: self.steps?,
            parts: self.parts.clone()?,
        })
    }
}

pub fn cmd_plan(args: &PlanArgs, ctx: &Context) -> anyhow::Result<PlanReport> {
    let started = Instant::now();
    let record = load_record(&args.assembly)?;
    let outcome = plan_record(&record, args.method, args.timeout, ctx)?;
    let file = outcome.plan.as_ref().map(|p| TrajectoryFile::from_plan(&record.id, p));
    let manifest = RunManifest::new("plan", ctx)
        .arg("assembly", args.assembly.display())
        .arg("method", args.method)
        .arg("timeout", args.timeout)
        .input(&args.assembly)?;
    Ok(PlanReport {
        assembly_id: record.id,
        steps: file.as_ref().map(|f| f.steps),
        parts: file.map(|f| f.parts),
        method: args.method,
        timeout: args.timeout,
        status: outcome.status,
        detail: outcome.detail,
        manifest: manifest.finish(ctx, started),
    })
}
