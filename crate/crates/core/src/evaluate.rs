//! Static and simulated evaluation of a predicted plan against ground truth.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid_arg, Error, Result};
use crate::geometry::{PartGeometry, Trajectory};
use crate::metrics::{acd, fcd, kendall_tau, part_chamfers, shape_chamfer, AssemblyEvaluation, FinalPoses};
use crate::planners::AssemblyPlan;
use crate::simulator::{step_by_step_evaluate, SimConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalMode {
    Static,
    Simulate,
    Both,
}

impl EvalMode {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Static => "static",
            Self::Simulate => "simulate",
            Self::Both => "both",
        }
    }

    pub fn runs_static(&self) -> bool {
        matches!(self, Self::Static | Self::Both)
    }

    pub fn runs_simulation(&self) -> bool {
        matches!(self, Self::Simulate | Self::Both)
    }
}

impl fmt::Display for EvalMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EvalMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "static" => Ok(Self::Static),
            "simulate" => Ok(Self::Simulate),
            "both" => Ok(Self::Both),
            _ => invalid_arg(format!("unknown evaluation mode `{s}` (static, simulate, both)")),
        }
    }
}

fn check_part_sets(pred: &AssemblyPlan, gt: &AssemblyPlan, parts: &[PartGeometry]) -> Result<()> {
    pred.validate()?;
    gt.validate()?;
    let mut a = pred.order.clone();
    let mut b = gt.order.clone();
    let mut c: Vec<usize> = parts.iter().map(PartGeometry::part_id).collect();
    a.sort_unstable();
    b.sort_unstable();
    c.sort_unstable();
    if a != b || b != c {
        return invalid_arg(format!("part sets differ: plan {a:?}, ground truth {b:?}, geometry {c:?}"));
    }
    if pred.steps() != gt.steps() {
        return invalid_arg(format!(
            "plan has {} waypoints per trajectory, ground truth {}",
            pred.steps(),
            gt.steps()
        ));
    }
    Ok(())
}

fn final_metrics(
    assembly_id: &str,
    pred: &AssemblyPlan,
    gt: &AssemblyPlan,
    reached: &FinalPoses,
    parts: &[PartGeometry],
) -> Result<AssemblyEvaluation> {
    let gt_final = gt.final_poses();
    Ok(AssemblyEvaluation {
        assembly_id: assembly_id.to_string(),
        kd: kendall_tau(&pred.order, &gt.order)?,
        scd: shape_chamfer(reached, &gt_final, parts)?,
        part_cds: part_chamfers(reached, &gt_final, parts)?,
        acd: Vec::new(),
        fcd: Vec::new(),
        executed: Vec::new(),
        predicted: Vec::new(),
        gt: Vec::new(),
    })
}

/// Order and final-pose metrics on the predicted poses as written.
pub fn evaluate_static(
    assembly_id: &str,
    pred: &AssemblyPlan,
    gt: &AssemblyPlan,
    parts: &[PartGeometry],
) -> Result<AssemblyEvaluation> {
    check_part_sets(pred, gt, parts)?;
    final_metrics(assembly_id, pred, gt, &pred.final_poses(), parts)
}

/// Executes `pred` step by step and scores where the parts actually ended
/// up, plus per-frame deviation from ground truth.
pub fn evaluate_simulated(
    assembly_id: &str,
    pred: &AssemblyPlan,
    gt: &AssemblyPlan,
    parts: &[PartGeometry],
    sim: &SimConfig,
) -> Result<AssemblyEvaluation> {
    check_part_sets(pred, gt, parts)?;
    let rollouts = step_by_step_evaluate(pred, parts, sim)?;
    let mut executed: Vec<Trajectory> = rollouts.into_iter().map(|r| r.executed).collect();
    executed.sort_by_key(|t| t.part_id);
    let reached: FinalPoses = executed.iter().map(|t| (t.part_id, *t.last())).collect();
    let mut eval = final_metrics(assembly_id, pred, gt, &reached, parts)?;
    let gt_by_part = gt.by_part();
    let mut sorted_parts: Vec<&PartGeometry> = parts.iter().collect();
    sorted_parts.sort_by_key(|p| p.part_id());
    for ((e, g), part) in executed.iter().zip(&gt_by_part).zip(&sorted_parts) {
        eval.acd.push(acd(e, g, part)?);
        eval.fcd.push(fcd(e, g, part)?);
    }
    eval.executed = executed;
    eval.predicted = pred.by_part();
    eval.gt = gt_by_part;
    Ok(eval)
}
