use std::path::PathBuf;
use std::time::Instant;

use asmkit::manualcam::{rank_cameras, render_final, visibility_table, CameraScore, VisibilityTable};
use serde::{Deserialize, Serialize};

use crate::manifest::RunManifest;
use crate::records::{load_record, plan_for};
use crate::settings::Context;

#[derive(Debug, Clone)]
pub struct CamviewArgs {
    pub assembly: PathBuf,
    pub plan: Option<PathBuf>,
    /// Directory for `camera_<k>.pgm` id buffers of the finished assembly.
    pub pgm: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CamviewReport {
    pub assembly_id: String,
    pub cameras: Vec<[f64; 3]>,
    pub table: VisibilityTable,
    pub score: CameraScore,
    pub manifest: RunManifest,
}

pub fn cmd_camview(args: &CamviewArgs, ctx: &Context) -> anyhow::Result<CamviewReport> {
    let started = Instant::now();
    let record = load_record(&args.assembly)?;
    let plan = plan_for(&record, args.plan.as_deref())?;
    let view = &ctx.settings.view;
    let table = visibility_table(&record.parts, &plan, view)?;
    let score = rank_cameras(&table, view)?;
    if let Some(dir) = &args.pgm {
        std::fs::create_dir_all(dir)?;
        let max_id = record.parts.len() - 1;
        for (k, camera) in view.cameras.iter().enumerate() {
            let buffer = render_final(&record.parts, &plan, camera, view.resolution)?;
            std::fs::write(dir.join(format!("camera_{k}.pgm")), buffer.to_pgm(max_id))?;
        }
    }
    let mut manifest = RunManifest::new("camview", ctx).arg("assembly", args.assembly.display()).input(&args.assembly)?;
    if let Some(p) = &args.plan {
        manifest = manifest.arg("plan", p.display()).input(p)?;
    }
    Ok(CamviewReport {
        assembly_id: record.id,
        cameras: view.cameras.clone(),
        table,
        score,
        manifest: manifest.finish(ctx, started),
    })
}
