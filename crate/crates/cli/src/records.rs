use std::path::{Path, PathBuf};

use anyhow::{bail, Context as _};
use asmkit::dataio::{list_records, AssemblyRecord, TrajectoryFile};
use asmkit::planners::AssemblyPlan;
use rayon::prelude::*;

/// Record directories under `path`: the directory itself if it is a
/// record, otherwise the records directly inside it.
pub(crate) fn record_dirs(path: &Path) -> anyhow::Result<Vec<PathBuf>> {
    if path.join("record.json").is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    if !path.is_dir() {
        bail!("{} is neither a record nor a dataset directory", path.display());
    }
    Ok(list_records(path)?)
}

pub(crate) fn load_records(dirs: &[PathBuf]) -> anyhow::Result<Vec<AssemblyRecord>> {
    dirs.par_iter()
        .map(|d| AssemblyRecord::load(d).with_context(|| format!("loading {}", d.display())))
        .collect()
}

pub(crate) fn load_record(dir: &Path) -> anyhow::Result<AssemblyRecord> {
    AssemblyRecord::load(dir).with_context(|| format!("loading {}", dir.display()))
}

/// The plan for `record`: the file itself, `<dir>/<assembly id>.json` when
/// `path` is a directory, or the ground truth when no path is given.
pub(crate) fn plan_for(record: &AssemblyRecord, path: Option<&Path>) -> anyhow::Result<AssemblyPlan> {
    let Some(path) = path else {
        return Ok(record.gt_plan.clone());
    };
    let file = if path.is_dir() {
        path.join(format!("{}.json", record.id))
    } else {
        path.to_path_buf()
    };
    let traj = TrajectoryFile::load(&file).with_context(|| format!("loading {}", file.display()))?;
    if traj.assembly_id != record.id {
        bail!("{} holds a plan for `{}`, not `{}`", file.display(), traj.assembly_id, record.id);
    }
    Ok(traj.to_plan()?)
}
