//! Camera-view selection for instruction manuals: per-part pixel counts
//! from an orthographic z-buffer, log visibility scores, per-part
//! normalization and a global ranking.

use nalgebra::{Point3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid_arg, invalid_geom, Result};
use crate::geometry::{PartGeometry, Pose};
use crate::planners::AssemblyPlan;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewConfig {
    /// Unit directions from the scene towards each camera; the camera
    /// looks along the negation.
    pub cameras: Vec<[f64; 3]>,
    /// Pixels per image side.
    pub resolution: usize,
    pub lambda_vis: f64,
}

/// Elevation of the isometric views, `atan(1/√2)` in degrees.
pub const ISOMETRIC_ELEVATION_DEG: f64 = 35.264;

impl Default for ViewConfig {
    fn default() -> Self {
        let mut cameras = Vec::with_capacity(8);
        for elevation in [ISOMETRIC_ELEVATION_DEG, -ISOMETRIC_ELEVATION_DEG] {
            for azimuth in [45.0f64, 135.0, 225.0, 315.0] {
                let (el, az) = (elevation.to_radians(), azimuth.to_radians());
                cameras.push([el.cos() * az.cos(), el.cos() * az.sin(), el.sin()]);
            }
        }
        Self {
            cameras,
            resolution: 512,
            lambda_vis: 0.05,
        }
    }
}

impl ViewConfig {
    pub fn validate(&self) -> Result<()> {
        if self.cameras.is_empty() {
            return invalid_arg("need at least one camera");
        }
        if self.resolution < 16 {
            return invalid_arg(format!("resolution must be at least 16, got {}", self.resolution));
        }
        if !(self.lambda_vis > 0.0) || !self.lambda_vis.is_finite() {
            return invalid_arg(format!("lambda_vis must be positive, got {}", self.lambda_vis));
        }
        for c in &self.cameras {
            camera_basis(c)?;
        }
        Ok(())
    }
}

/// Pixel counts, indexed `[camera][part id]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VisibilityTable {
    /// Pixels of each part when it has just been placed.
    pub n_assembly: Vec<Vec<u64>>,
    /// Pixels of each part in the finished assembly.
    pub n_final: Vec<Vec<u64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraScore {
    pub s: Vec<Vec<f64>>,
    pub s_hat: Vec<Vec<f64>>,
    /// Per-camera sum of normalized scores.
    #[serde(rename = "S")]
    pub total: Vec<f64>,
    pub ranking: Vec<usize>,
}

/// Orthonormal `(right, up, towards camera)` for a view direction.
fn camera_basis(dir: &[f64; 3]) -> Result<(Vector3<f64>, Vector3<f64>, Vector3<f64>)> {
    let d = Vector3::from(*dir);
    let n = d.norm();
    if !(n > 1e-12) || !n.is_finite() {
        return invalid_arg(format!("degenerate camera direction {dir:?}"));
    }
    let back = d / n;
    let helper = if back.z.abs() < 0.999 { Vector3::z() } else { Vector3::x() };
    let right = helper.cross(&back).normalize();
    let up = back.cross(&right);
    Ok((right, up, back))
}

/// Per-pixel id of the nearest part, row-major from the top-left corner.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdBuffer {
    pub resolution: usize,
    pub ids: Vec<Option<usize>>,
}

impl IdBuffer {
    pub fn count(&self, id: usize) -> u64 {
        self.ids.iter().filter(|p| **p == Some(id)).count() as u64
    }

    /// Binary greyscale image; background black, parts spread over the
    /// grey levels by id.
    pub fn to_pgm(&self, max_id: usize) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.resolution, self.resolution).into_bytes();
        let step = 255 / (max_id + 1).max(1);
        out.extend(self.ids.iter().map(|p| match p {
            Some(id) => (255 - step * (max_id - id.min(&max_id))) as u8,
            None => 0,
        }));
        out
    }
}

/// Image window: centre and half-width covering a bounding sphere plus 5%.
#[derive(Debug, Clone, Copy)]
struct Frame {
    centre: Point3<f64>,
    half: f64,
}

fn scene_frame(parts: &[(&PartGeometry, Pose)]) -> Result<Frame> {
    let mut verts = Vec::new();
    for (part, pose) in parts {
        if part.mesh().is_empty() {
            return invalid_geom(format!("part {} has no mesh to render", part.part_id()));
        }
        verts.extend(part.mesh().vertices.iter().map(|v| pose.transform_point(v)));
    }
    let bounds = crate::geometry::Aabb::from_points(verts.iter()).ok_or_else(|| crate::Error::InvalidGeometry("empty scene".into()))?;
    let centre = bounds.center();
    let radius = verts.iter().map(|v| (v - centre).norm()).fold(0.0, f64::max);
    if !(radius > 0.0) {
        return invalid_geom("scene has zero extent");
    }
    Ok(Frame {
        centre,
        half: 1.05 * radius,
    })
}

fn edge(a: (f64, f64), b: (f64, f64), p: (f64, f64)) -> f64 {
    (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0)
}

fn render(parts: &[(&PartGeometry, Pose)], frame: Frame, camera: &[f64; 3], res: usize) -> Result<IdBuffer> {
    let (right, up, back) = camera_basis(camera)?;
    let px = 2.0 * frame.half / res as f64;
    let mut depth = vec![f64::NEG_INFINITY; res * res];
    let mut ids = vec![None; res * res];
    for (part, pose) in parts {
        let projected: Vec<(f64, f64, f64)> = part
            .mesh()
            .vertices
            .iter()
            .map(|v| {
                let r = pose.transform_point(v) - frame.centre;
                // pixel coordinates: column from the left, row from the top
                ((r.dot(&right) + frame.half) / px, (frame.half - r.dot(&up)) / px, r.dot(&back))
            })
            .collect();
        for tri in &part.mesh().triangles {
            let [a, b, c] = tri.map(|i| projected[i as usize]);
            let area = edge((a.0, a.1), (b.0, b.1), (c.0, c.1));
            if area.abs() < 1e-18 {
                continue;
            }
            let lo_x = a.0.min(b.0).min(c.0).floor().max(0.0) as usize;
            let hi_x = (a.0.max(b.0).max(c.0).ceil() as usize).min(res);
            let lo_y = a.1.min(b.1).min(c.1).floor().max(0.0) as usize;
            let hi_y = (a.1.max(b.1).max(c.1).ceil() as usize).min(res);
            for y in lo_y..hi_y {
                for x in lo_x..hi_x {
                    let p = (x as f64 + 0.5, y as f64 + 0.5);
                    let w0 = edge((b.0, b.1), (c.0, c.1), p) / area;
                    let w1 = edge((c.0, c.1), (a.0, a.1), p) / area;
                    let w2 = 1.0 - w0 - w1;
                    if w0 < 0.0 || w1 < 0.0 || w2 < 0.0 {
                        continue;
                    }
                    let z = w0 * a.2 + w1 * b.2 + w2 * c.2;
                    let k = y * res + x;
                    if z > depth[k] {
                        depth[k] = z;
                        ids[k] = Some(part.part_id());
                    }
                }
            }
        }
    }
    Ok(IdBuffer { resolution: res, ids })
}

fn gt_scene<'a>(parts: &'a [PartGeometry], plan: &AssemblyPlan) -> Result<Vec<(&'a PartGeometry, Pose)>> {
    plan.validate()?;
    let finals = plan.final_poses();
    if parts.len() != plan.len() {
        return invalid_arg(format!("{} parts but a {}-step plan", parts.len(), plan.len()));
    }
    plan.order
        .iter()
        .map(|id| {
            let part = parts
                .iter()
                .find(|p| p.part_id() == *id)
                .ok_or_else(|| crate::Error::InvalidArgument(format!("no geometry for part {id}")))?;
            Ok((part, finals[id]))
        })
        .collect()
}

/// Per-part ID buffer of the finished assembly from one camera.
pub fn render_final(parts: &[PartGeometry], plan: &AssemblyPlan, camera: &[f64; 3], resolution: usize) -> Result<IdBuffer> {
    let scene = gt_scene(parts, plan)?;
    render(&scene, scene_frame(&scene)?, camera, resolution)
}

/// One camera's column of the table: `(n_assembly, n_final)` by part id.
pub fn rasterize_visibility(
    parts: &[PartGeometry],
    plan: &AssemblyPlan,
    camera: &[f64; 3],
    resolution: usize,
) -> Result<(Vec<u64>, Vec<u64>)> {
    let scene = gt_scene(parts, plan)?;
    let frame = scene_frame(&scene)?;
    let n = scene.len();
    let mut n_assembly = vec![0; n];
    let mut n_final = vec![0; n];
    let full = render(&scene, frame, camera, resolution)?;
    for (step, (part, _)) in scene.iter().enumerate() {
        let id = part.part_id();
        if id >= n {
            return invalid_arg(format!("part ids must be 0..{n}, found {id}"));
        }
        n_final[id] = full.count(id);
        n_assembly[id] = render(&scene[..=step], frame, camera, resolution)?.count(id);
    }
    Ok((n_assembly, n_final))
}

/// Visibility table over all cameras of `config`, rendered in parallel.
pub fn visibility_table(parts: &[PartGeometry], plan: &AssemblyPlan, config: &ViewConfig) -> Result<VisibilityTable> {
    config.validate()?;
    let columns: Vec<(Vec<u64>, Vec<u64>)> = config
        .cameras
        .par_iter()
        .map(|c| rasterize_visibility(parts, plan, c, config.resolution))
        .collect::<Result<_>>()?;
    let (n_assembly, n_final) = columns.into_iter().unzip();
    Ok(VisibilityTable { n_assembly, n_final })
}

/// `ln(1 + λ·n_a) + ln(1 + λ·n_f)`, or 0 when the part is not visible at
/// its own step.
pub fn visibility_score(n_a: u64, n_f: u64, lambda_vis: f64) -> f64 {
    if n_a == 0 {
        return 0.0;
    }
    (lambda_vis * n_a as f64).ln_1p() + (lambda_vis * n_f as f64).ln_1p()
}

pub fn rank_cameras(table: &VisibilityTable, config: &ViewConfig) -> Result<CameraScore> {
    let cams = table.n_assembly.len();
    if cams == 0 || table.n_final.len() != cams {
        return invalid_arg("visibility table is empty or ragged");
    }
    let parts = table.n_assembly[0].len();
    if parts == 0 || table.n_assembly.iter().chain(&table.n_final).any(|row| row.len() != parts) {
        return invalid_arg("visibility table is empty or ragged");
    }
    if !(config.lambda_vis > 0.0) {
        return invalid_arg("lambda_vis must be positive");
    }
    let s: Vec<Vec<f64>> = (0..cams)
        .map(|c| {
            (0..parts)
                .map(|p| visibility_score(table.n_assembly[c][p], table.n_final[c][p], config.lambda_vis))
                .collect()
        })
        .collect();
    rank_scores(s)
}

/// Normalizes raw scores `[camera][part]` by each part's best camera
/// (0/0 → 0), sums per camera and ranks, ties to the lower index.
pub fn rank_scores(s: Vec<Vec<f64>>) -> Result<CameraScore> {
    let parts = s.first().map_or(0, Vec::len);
    if parts == 0 || s.iter().any(|row| row.len() != parts) {
        return invalid_arg("score table is empty or ragged");
    }
    if s.iter().flatten().any(|v| !(*v >= 0.0) || !v.is_finite()) {
        return invalid_arg("scores must be finite and non-negative");
    }
    let best: Vec<f64> = (0..parts).map(|p| s.iter().map(|row| row[p]).fold(0.0, f64::max)).collect();
    let s_hat: Vec<Vec<f64>> = s
        .iter()
        .map(|row| row.iter().zip(&best).map(|(v, m)| if *m > 0.0 { v / m } else { 0.0 }).collect())
        .collect();
    let total: Vec<f64> = s_hat.iter().map(|row| row.iter().sum()).collect();
    let mut ranking: Vec<usize> = (0..s.len()).collect();
    ranking.sort_by(|&a, &b| total[b].total_cmp(&total[a]).then(a.cmp(&b)));
    Ok(CameraScore { s, s_hat, total, ranking })
}
