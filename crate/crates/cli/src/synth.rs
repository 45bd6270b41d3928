use std::path::PathBuf;
use std::time::Instant;

use asmkit::dataio::{suite_kind, synth_generate, SynthKind};
use asmkit::Error;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::manifest::RunManifest;
use crate::settings::Context;

#[derive(Debug, Clone)]
pub struct SynthArgs {
    /// One kind for every record, or the mixed suite when absent.
    pub kind: Option<SynthKind>,
    pub count: usize,
    /// Dataset directory; each record goes to `<out>/<id>`.
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthEntry {
    pub index: usize,
    pub seed: u64,
    pub kind: SynthKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthReport {
    pub records: Vec<SynthEntry>,
    pub manifest: RunManifest,
}

/// Generates and saves `count` records; record `i` uses seed `seed + i`.
/// A record whose ground truth cannot be planned is listed as a failure
/// and the rest still get written.
pub fn cmd_synth(args: &SynthArgs, ctx: &Context) -> anyhow::Result<SynthReport> {
    let started = Instant::now();
    std::fs::create_dir_all(&args.out)?;
    let params = ctx.settings.synth;
    let records = (0..args.count)
        .into_par_iter()
        .map(|index| {
            let kind = args.kind.unwrap_or_else(|| suite_kind(index));
            let seed = ctx.seed.wrapping_add(index as u64);
            let mut entry = SynthEntry {
                index,
                seed,
                kind,
                id: None,
                failure: None,
            };
            match synth_generate(kind, &params, seed) {
                Ok(record) => {
                    record.save(&args.out.join(&record.id))?;
                    entry.id = Some(record.id);
                }
                Err(
                    e @ (Error::GenerationFailed(_)
                    | Error::PlanningTimeout { .. }
                    | Error::PlanningInfeasible(_)
                    | Error::SimulationDiverged { .. }),
                ) => {
                    entry.failure = Some(e.to_string());
                }
                Err(e) => return Err(e.into()),
            }
            Ok(entry)
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let kind = args.kind.map_or("suite", |k| k.name());
    let manifest = RunManifest::new("synth", ctx)
        .arg("kind", kind)
        .arg("count", args.count)
        .arg("out", args.out.display());
    Ok(SynthReport {
        records,
        manifest: manifest.finish(ctx, started),
    })
}
