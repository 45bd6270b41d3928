use std::path::PathBuf;
use std::time::Instant;

use asmkit::dataio::{split, SplitSpec};
use serde::{Deserialize, Serialize};

use crate::manifest::RunManifest;
use crate::records::{load_records, record_dirs};
use crate::settings::Context;

#[derive(Debug, Clone)]
pub struct SplitArgs {
    pub dataset: PathBuf,
    /// `train,val,test`, e.g. `0.8,0.1,0.1`.
    pub fractions: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitReport {
    pub train: Vec<String>,
    pub val: Vec<String>,
    pub test: Vec<String>,
    pub manifest: RunManifest,
}

pub fn cmd_split(args: &SplitArgs, ctx: &Context) -> anyhow::Result<SplitReport> {
    let started = Instant::now();
    let spec = SplitSpec::with_fractions(&args.fractions, ctx.seed)?;
    let ids: Vec<String> = load_records(&record_dirs(&args.dataset)?)?.into_iter().map(|r| r.id).collect();
    let s = split(&ids, &spec)?;
    let manifest = RunManifest::new("split", ctx)
        .arg("dataset", args.dataset.display())
        .arg("fractions", &args.fractions)
        .input(&args.dataset)?;
    Ok(SplitReport {
        train: s.train,
        val: s.val,
        test: s.test,
        manifest: manifest.finish(ctx, started),
    })
}
