//! Command implementations behind the `asmkit` binary.
//!
//! Every `cmd_*` function takes parsed arguments plus a [`Context`] and
//! returns a serializable report with its [`RunManifest`] embedded, so the
//! binary only parses flags and writes output.

mod bench;
mod camview;
mod evaluate;
pub mod manifest;
mod plan;
mod records;
mod settings;
mod simulate;
mod split;
mod synth;

use std::path::Path;

use serde::Serialize;

pub use bench::{cmd_bench, BenchArgs, BenchReport, BenchRow, BenchRun};
pub use camview::{cmd_camview, CamviewArgs, CamviewReport};
pub use evaluate::{cmd_evaluate, AssemblySummary, EvaluateArgs, EvaluateReport, ModeReport};
pub use manifest::{InputHash, RunManifest};
pub use plan::{cmd_plan, plan_record, Method, PlanArgs, PlanOutcome, PlanReport, PlanStatus};
pub use settings::{Context, Settings};
pub use simulate::{cmd_simulate, SimulateArgs, SimulateReport, SimulatedPart};
pub use split::{cmd_split, SplitArgs, SplitReport};
pub use synth::{cmd_synth, SynthArgs, SynthEntry, SynthReport};

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> anyhow::Result<String> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}

/// Writes `value` as JSON to `out`, or to stdout when no path is given.
pub fn write_json<T: Serialize>(out: Option<&Path>, value: &T) -> anyhow::Result<()> {
    let text = to_json(value)?;
    match out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(path, text)?;
        }
        None => print!("{text}"),
    }
    Ok(())
}
