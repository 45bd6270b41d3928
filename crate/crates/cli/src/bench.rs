use std::path::PathBuf;
use std::time::Instant;

use asmkit::dataio::AssemblyRecord;
use asmkit::evaluate::evaluate_simulated;
use asmkit::metrics::part_accuracy;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::manifest::RunManifest;
use crate::plan::{plan_record, Method, PlanStatus};
use crate::records::{load_records, record_dirs};
use crate::settings::Context;

#[derive(Debug, Clone)]
pub struct BenchArgs {
    pub dataset: PathBuf,
    pub methods: Vec<Method>,
    /// Wall-clock seconds per run.
    pub timeouts: Vec<f64>,
}

/// One planner run on one assembly. A run succeeds when the planner
/// returns a plan and every part of it ends within the chamfer threshold
/// when executed in the simulator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRun {
    pub assembly_id: String,
    pub method: Method,
    pub timeout: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub status: Option<PlanStatus>,
    pub success: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pa: Option<f64>,
    /// Error text for failed plans and for runs that could not be set up.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    pub manifest: RunManifest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub method: Method,
    pub timeout: f64,
    pub runs: usize,
    pub solved: usize,
    pub succeeded: usize,
    pub success_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub runs: Vec<BenchRun>,
    pub manifest: RunManifest,
}

impl BenchReport {
    /// `method,timeout,runs,solved,succeeded,success_rate` with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("method,timeout,runs,solved,succeeded,success_rate\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{},{},{}\n", r.method, r.timeout, r.runs, r.solved, r.succeeded, r.success_rate));
        }
        out
    }
}

fn bench_run(record: &AssemblyRecord, dir: &std::path::Path, method: Method, timeout: f64, ctx: &Context) -> BenchRun {
    let started = Instant::now();
    let mut run = BenchRun {
        assembly_id: record.id.clone(),
        method,
        timeout,
        status: None,
        success: false,
        pa: None,
        detail: None,
        manifest: RunManifest::new("bench", ctx)
            .arg("assembly", dir.display())
            .arg("method", method)
            .arg("timeout", timeout),
    };
    let outcome = (|| -> anyhow::Result<()> {
        run.manifest = run.manifest.clone().input(dir)?;
        let outcome = plan_record(record, method, timeout, ctx)?;
        run.status = Some(outcome.status);
        run.detail = outcome.detail;
        if let Some(plan) = outcome.plan {
            let eval = evaluate_simulated(&record.id, &plan, &record.gt_plan, &record.parts, &ctx.settings.sim)?;
            let threshold = ctx.settings.threshold();
            run.pa = Some(part_accuracy(&eval.part_cds, threshold)?);
            run.success = eval.part_cds.iter().all(|cd| threshold.passes(*cd));
        }
        Ok(())
    })();
    if let Err(e) = outcome {
        run.detail = Some(format!("{e:#}"));
    }
    run.manifest = run.manifest.finish(ctx, started);
    run
}

/// Runs every method under every timeout on every record in the dataset.
/// Individual runs never abort the sweep; their failures are recorded.
pub fn cmd_bench(args: &BenchArgs, ctx: &Context) -> anyhow::Result<BenchReport> {
    let started = Instant::now();
    if args.timeouts.iter().any(|t| !(*t > 0.0)) {
        anyhow::bail!("timeouts must be positive");
    }
    let dirs = record_dirs(&args.dataset)?;
    if dirs.is_empty() {
        eprintln!("warning: no assemblies under {}", args.dataset.display());
    }
    let records = load_records(&dirs)?;
    let jobs: Vec<(usize, Method, f64)> = (0..records.len())
        .flat_map(|i| args.methods.iter().flat_map(move |&m| args.timeouts.iter().map(move |&t| (i, m, t))))
        .collect();
    let runs: Vec<BenchRun> = jobs
        .par_iter()
        .map(|&(i, m, t)| bench_run(&records[i], &dirs[i], m, t, ctx))
        .collect();
    let mut rows = Vec::new();
    if !records.is_empty() {
        for &method in &args.methods {
            for &timeout in &args.timeouts {
                let mine: Vec<&BenchRun> = runs.iter().filter(|r| r.method == method && r.timeout == timeout).collect();
                let succeeded = mine.iter().filter(|r| r.success).count();
                rows.push(BenchRow {
                    method,
                    timeout,
                    runs: mine.len(),
                    solved: mine.iter().filter(|r| r.status == Some(PlanStatus::Solved)).count(),
                    succeeded,
                    success_rate: succeeded as f64 / mine.len() as f64,
                });
            }
        }
    }
    let methods: Vec<&str> = args.methods.iter().map(|m| m.name()).collect();
    let timeouts: Vec<String> = args.timeouts.iter().map(|t| t.to_string()).collect();
    let manifest = RunManifest::new("bench", ctx)
        .arg("dataset", args.dataset.display())
        .arg("methods", methods.join(","))
        .arg("timeouts", timeouts.join(","))
        .input(&args.dataset)?;
    Ok(BenchReport {
        rows,
        runs,
        manifest: manifest.finish(ctx, started),
    })
}
