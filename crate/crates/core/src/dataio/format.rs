//! JSON trajectory envelope and the on-disk assembly record layout.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::classify::TrajectoryCategory;
use super::normalize::Normalization;
use crate::error::{invalid_arg, Error, Result};
use crate::geometry::io::{load_obj, load_point_cloud, save_obj, save_point_cloud};
use crate::geometry::{PartGeometry, Pose, Trajectory};
use crate::planners::AssemblyPlan;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartPoses {
    pub part_id: usize,
    pub poses: Vec<Pose>,
}

/// `{assembly_id, T, parts: [{part_id, poses}]}`; parts are listed in step
/// order, poses as `[w, x, y, z, tx, ty, tz]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryFile {
    pub assembly_id: String,
    #[serde(rename = "T")]
    pub steps: usize,
    pub parts: Vec<PartPoses>,
}

pub(crate) fn json_error(source: &str, e: &serde_json::Error) -> Error {
    Error::Parse {
        location: format!("{source}:{}:{}", e.line(), e.column()),
        message: e.to_string(),
    }
}

pub(crate) fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| json_error(&path.display().to_string(), &e))
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

impl TrajectoryFile {
    pub fn from_plan(assembly_id: &str, plan: &AssemblyPlan) -> Self {
        Self {
            assembly_id: assembly_id.to_string(),
            steps: plan.steps(),
            parts: plan
                .trajectories
                .iter()
                .map(|t| PartPoses {
                    part_id: t.part_id,
                    poses: t.poses.clone(),
                })
                .collect(),
        }
    }

    pub fn to_plan(&self) -> Result<AssemblyPlan> {
        if let Some(p) = self.parts.iter().find(|p| p.poses.len() != self.steps) {
            return invalid_arg(format!(
                "part {} has {} poses, expected T = {}",
                p.part_id,
                p.poses.len(),
                self.steps
            ));
        }
        let trajectories = self
            .parts
            .iter()
            .map(|p| Trajectory::new(p.part_id, p.poses.clone()))
            .collect::<Result<Vec<_>>>()?;
        AssemblyPlan::from_trajectories(trajectories)
    }

    pub fn parse(text: &str, source: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| json_error(source, &e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        read_json(path)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }
}

/// One assembly: geometry, ground-truth plan and bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct AssemblyRecord {
    pub id: String,
    /// Generator kind for synthetic records.
    pub kind: Option<String>,
    /// Sorted by part id, ids `0..N`.
    pub parts: Vec<PartGeometry>,
    pub gt_plan: AssemblyPlan,
    pub normalization: Normalization,
    /// Indexed by part id.
    pub categories: Vec<TrajectoryCategory>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PartFiles {
    part_id: usize,
    mesh: String,
    points: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RecordMeta {
    id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    kind: Option<String>,
    normalization: Normalization,
    categories: Vec<TrajectoryCategory>,
    parts: Vec<PartFiles>,
    gt_plan: String,
}

pub const MIN_PARTS: usize = 2;
pub const MAX_PARTS: usize = 20;

impl AssemblyRecord {
    pub fn validate(&self) -> Result<()> {
        let n = self.parts.len();
        if !(MIN_PARTS..=MAX_PARTS).contains(&n) {
            return invalid_arg(format!("assemblies hold {MIN_PARTS} to {MAX_PARTS} parts, got {n}"));
        }
        if self.parts.iter().enumerate().any(|(k, p)| p.part_id() != k) {
            return invalid_arg("parts must be sorted with ids 0..N");
        }
        self.gt_plan.validate()?;
        if self.gt_plan.len() != n {
            return invalid_arg("ground-truth plan does not cover every part");
        }
        if self.categories.len() != n {
            return invalid_arg("one category per part required");
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn part_ids(&self) -> Vec<usize> {
        (0..self.parts.len()).collect()
    }

    /// Writes `record.json`, `gt_plan.json`, `part_<i>.obj`, `part_<i>.apc`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        self.validate()?;
        std::fs::create_dir_all(dir)?;
        let mut files = Vec::with_capacity(self.parts.len());
        for p in &self.parts {
            let mesh = format!("part_{}.obj", p.part_id());
            let points = format!("part_{}.apc", p.part_id());
            save_obj(&dir.join(&mesh), p.mesh())?;
            save_point_cloud(&dir.join(&points), p.points())?;
            files.push(PartFiles {
                part_id: p.part_id(),
                mesh,
                points,
            });
        }
        TrajectoryFile::from_plan(&self.id, &self.gt_plan).save(&dir.join("gt_plan.json"))?;
        let meta = RecordMeta {
            id: self.id.clone(),
            kind: self.kind.clone(),
            normalization: self.normalization,
            categories: self.categories.clone(),
            parts: files,
            gt_plan: "gt_plan.json".into(),
        };
        write_json(&dir.join("record.json"), &meta)
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let meta: RecordMeta = read_json(&dir.join("record.json"))?;
        let mut parts = Vec::with_capacity(meta.parts.len());
        for f in &meta.parts {
            let mesh = load_obj(&dir.join(&f.mesh))?;
            let points = load_point_cloud(&dir.join(&f.points))?;
            parts.push(PartGeometry::new(f.part_id, mesh, points)?);
        }
        parts.sort_by_key(|p| p.part_id());
        let plan_file = TrajectoryFile::load(&dir.join(&meta.gt_plan))?;
        let record = Self {
            id: meta.id,
            kind: meta.kind,
            parts,
            gt_plan: plan_file.to_plan()?,
            normalization: meta.normalization,
            categories: meta.categories,
        };
        record.validate()?;
        Ok(record)
    }
}

/// Record directories (those holding `record.json`) directly under `root`,
/// sorted by name.
pub fn list_records(root: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    if !root.exists() {
        return Ok(out);
    }
    for entry in std::fs::read_dir(root)? {
        let path = entry?.path();
        if path.join("record.json").is_file() {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}
