use std::path::PathBuf;
use std::time::Instant;

use asmkit::evaluate::{evaluate_simulated, evaluate_static, EvalMode};
use asmkit::metrics::{aggregate, AssemblyEvaluation, MetricsReport};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::manifest::RunManifest;
use crate::records::{load_records, plan_for, record_dirs};
use crate::settings::Context;

#[derive(Debug, Clone)]
pub struct EvaluateArgs {
    /// A record directory or a dataset of them.
    pub gt: PathBuf,
    /// A trajectory file, or a directory of `<assembly id>.json` files.
    /// Absent means each record's own ground-truth plan.
    pub plan: Option<PathBuf>,
    pub mode: EvalMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssemblySummary {
    pub assembly_id: String,
    pub kd: f64,
    pub scd: f64,
    pub part_cds: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub acd: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fcd: Vec<f64>,
}

impl From<&AssemblyEvaluation> for AssemblySummary {
    fn from(e: &AssemblyEvaluation) -> Self {
        Self {
            assembly_id: e.assembly_id.clone(),
            kd: e.kd,
            scd: e.scd,
            part_cds: e.part_cds.clone(),
            acd: e.acd.clone(),
            fcd: e.fcd.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeReport {
    pub metrics: MetricsReport,
    pub assemblies: Vec<AssemblySummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluateReport {
    pub mode: EvalMode,
    #[serde(rename = "static", default, skip_serializing_if = "Option::is_none")]
    pub static_eval: Option<ModeReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<ModeReport>,
    pub manifest: RunManifest,
}

fn mode_report(evals: Vec<AssemblyEvaluation>, ctx: &Context) -> anyhow::Result<ModeReport> {
    let metrics = aggregate(&evals, ctx.settings.threshold())?;
    let mut assemblies: Vec<AssemblySummary> = evals.iter().map(AssemblySummary::from).collect();
    assemblies.sort_by(|a, b| a.assembly_id.cmp(&b.assembly_id));
    Ok(ModeReport { metrics, assemblies })
}

pub fn cmd_evaluate(args: &EvaluateArgs, ctx: &Context) -> anyhow::Result<EvaluateReport> {
    let started = Instant::now();
    let records = load_records(&record_dirs(&args.gt)?)?;
    let plans = records
        .iter()
        .map(|r| plan_for(r, args.plan.as_deref()))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let sim = ctx.settings.sim;
    let run = |simulate: bool| -> anyhow::Result<ModeReport> {
        let evals = records
            .par_iter()
            .zip(&plans)
            .map(|(r, plan)| {
                if simulate {
                    evaluate_simulated(&r.id, plan, &r.gt_plan, &r.parts, &sim)
                } else {
                    evaluate_static(&r.id, plan, &r.gt_plan, &r.parts)
                }
            })
            .collect::<asmkit::Result<Vec<_>>>()?;
        mode_report(evals, ctx)
    };
    let static_eval = args.mode.runs_static().then(|| run(false)).transpose()?;
    let simulate = args.mode.runs_simulation().then(|| run(true)).transpose()?;
    let mut manifest = RunManifest::new("evaluate", ctx).arg("mode", args.mode).arg("gt", args.gt.display()).input(&args.gt)?;
    if let Some(p) = &args.plan {
        manifest = manifest.arg("plan", p.display()).input(p)?;
    }
    Ok(EvaluateReport {
        mode: args.mode,
        static_eval,
        simulate,
        manifest: manifest.finish(ctx, started),
    })
}
