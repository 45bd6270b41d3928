//! Evaluation measures: order correlation, static pose accuracy and
//! trajectory chamfer statistics.

use std::collections::BTreeMap;

use nalgebra::Point3;
use serde::{Deserialize, Serialize};

use crate::error::{invalid_arg, Result};
use crate::geometry::{apply_pose, chamfer, PartGeometry, Pose, Trajectory};
use crate::numeric::compensated_mean;

/// Final pose of every part, keyed by part id.
pub type FinalPoses = BTreeMap<usize, Pose>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartThreshold {
    pub cd_threshold: f64,
}

impl Default for PartThreshold {
    fn default() -> Self {
        Self { cd_threshold: 1e-2 }
    }
}

impl PartThreshold {
    pub fn new(cd_threshold: f64) -> Result<Self> {
        if !(cd_threshold > 0.0) || !cd_threshold.is_finite() {
            return invalid_arg(format!("cd threshold must be positive, got {cd_threshold}"));
        }
        Ok(Self { cd_threshold })
    }

    pub fn passes(&self, cd: f64) -> bool {
        cd < self.cd_threshold
    }
}

fn positions(order: &[usize], what: &str) -> Result<Vec<usize>> {
    let n = order.len();
    let mut pos = vec![usize::MAX; n];
    for (step, &part) in order.iter().enumerate() {
        if part >= n || pos[part] != usize::MAX {
            return invalid_arg(format!("{what} is not a permutation of 0..{n}"));
        }
        pos[part] = step;
    }
    Ok(pos)
}

/// Kendall's τ between two assembly orders (sequences of part indices).
pub fn kendall_tau(predicted_order: &[usize], gt_order: &[usize]) -> Result<f64> {
    let n = gt_order.len();
    if n < 2 {
        return invalid_arg("kendall tau needs at least two parts");
    }
    if predicted_order.len() != n {
        return invalid_arg("orders have different lengths");
    }
    let pp = positions(predicted_order, "predicted order")?;
    let pg = positions(gt_order, "ground-truth order")?;
    let mut score: i64 = 0;
    for a in 0..n {
        for b in a + 1..n {
            let s1 = (pp[a] as i64 - pp[b] as i64).signum();
            let s2 = (pg[a] as i64 - pg[b] as i64).signum();
            score += s1 * s2;
        }
    }
    Ok(score as f64 / (n * (n - 1) / 2) as f64)
}

pub(crate) fn check_part_sets(pred: &FinalPoses, gt: &FinalPoses, parts: &[PartGeometry]) -> Result<()> {
    if pred.len() != parts.len() || gt.len() != parts.len() {
        return invalid_arg(format!(
            "part sets differ: {} predicted, {} ground-truth, {} geometries",
            pred.len(),
            gt.len(),
            parts.len()
        ));
    }
    for p in parts {
        if !pred.contains_key(&p.part_id()) || !gt.contains_key(&p.part_id()) {
            return invalid_arg(format!("part {} missing from a pose set", p.part_id()));
        }
    }
    Ok(())
}

pub fn posed_points(part: &PartGeometry, pose: &Pose) -> Result<Vec<Point3<f64>>> {
    apply_pose(pose, part.points())
}

fn union_cloud(poses: &FinalPoses, parts: &[PartGeometry]) -> Result<Vec<Point3<f64>>> {
    let mut out = Vec::new();
    for p in parts {
        out.extend(posed_points(p, &poses[&p.part_id()])?);
    }
    Ok(out)
}

/// Chamfer distance between the assembled unions at predicted and
/// ground-truth final poses.
pub fn shape_chamfer(pred_final: &FinalPoses, gt_final: &FinalPoses, parts: &[PartGeometry]) -> Result<f64> {
    check_part_sets(pred_final, gt_final, parts)?;
    chamfer(&union_cloud(pred_final, parts)?, &union_cloud(gt_final, parts)?)
}

/// Chamfer distance of one part placed at two poses.
pub fn part_chamfer(part: &PartGeometry, a: &Pose, b: &Pose) -> Result<f64> {
    chamfer(&posed_points(part, a)?, &posed_points(part, b)?)
}

/// Part-wise chamfer distances at the final poses, in `parts` order.
pub fn part_chamfers(pred_final: &FinalPoses, gt_final: &FinalPoses, parts: &[PartGeometry]) -> Result<Vec<f64>> {
    check_part_sets(pred_final, gt_final, parts)?;
    parts
        .iter()
        .map(|p| part_chamfer(p, &pred_final[&p.part_id()], &gt_final[&p.part_id()]))
        .collect()
}

/// Fraction of parts whose chamfer distance is strictly below the threshold.
pub fn part_accuracy(per_part_cd: &[f64], threshold: PartThreshold) -> Result<f64> {
    if per_part_cd.is_empty() {
        return invalid_arg("part accuracy of an empty part list");
    }
    let ok = per_part_cd.iter().filter(|cd| threshold.passes(**cd)).count();
    Ok(ok as f64 / per_part_cd.len() as f64)
}

/// Fraction of assemblies whose every part passes the threshold.
pub fn success_rate(per_assembly_cds: &[Vec<f64>], threshold: PartThreshold) -> Result<f64> {
    if per_assembly_cds.is_empty() {
        return invalid_arg("success rate of an empty assembly set");
    }
    if per_assembly_cds.iter().any(Vec::is_empty) {
        return invalid_arg("assembly without parts");
    }
    let ok = per_assembly_cds
        .iter()
        .filter(|cds| cds.iter().all(|cd| threshold.passes(*cd)))
        .count();
    Ok(ok as f64 / per_assembly_cds.len() as f64)
}

/// Per-frame chamfer distance between two trajectories of the same part.
pub fn frame_chamfers(executed: &Trajectory, gt: &Trajectory, part: &PartGeometry) -> Result<Vec<f64>> {
    if executed.len() != gt.len() {
        return invalid_arg(format!(
            "trajectory lengths differ: {} vs {}",
            executed.len(),
            gt.len()
        ));
    }
    if executed.is_empty() {
        return invalid_arg("empty trajectory");
    }
    executed
        .poses
        .iter()
        .zip(&gt.poses)
        .map(|(a, b)| part_chamfer(part, a, b))
        .collect()
}

/// Average chamfer distance over all frames.
pub fn acd(executed: &Trajectory, gt: &Trajectory, part: &PartGeometry) -> Result<f64> {
    Ok(compensated_mean(frame_chamfers(executed, gt, part)?))
}

/// Chamfer distance at the final frame.
pub fn fcd(executed: &Trajectory, gt: &Trajectory, part: &PartGeometry) -> Result<f64> {
    if executed.len() != gt.len() {
        return invalid_arg(format!(
            "trajectory lengths differ: {} vs {}",
            executed.len(),
            gt.len()
        ));
    }
    part_chamfer(part, executed.last(), gt.last())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quartiles {
    pub q25: f64,
    pub q50: f64,
    pub q75: f64,
}

impl Quartiles {
    pub const ZERO: Quartiles = Quartiles {
        q25: 0.0,
        q50: 0.0,
        q75: 0.0,
    };
}

fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (sorted[hi] - sorted[lo]) * frac
    }
}

/// 25th/50th/75th percentiles with linear interpolation between order
/// statistics.
pub fn quartiles(values: &[f64]) -> Result<Quartiles> {
    if values.is_empty() {
        return invalid_arg("quartiles of an empty list");
    }
    if values.iter().any(|v| v.is_nan()) {
        return invalid_arg("quartiles of a list containing NaN");
    }
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(Quartiles {
        q25: percentile_sorted(&s, 0.25),
        q50: percentile_sorted(&s, 0.5),
        q75: percentile_sorted(&s, 0.75),
    })
}

/// Per-frame translation-error quartiles for executed and predicted
/// trajectories against ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationProfile {
    pub executed: Vec<Quartiles>,
    pub predicted: Vec<Quartiles>,
}

fn pair_up<'a>(set: &'a [Trajectory], gt: &'a [Trajectory]) -> Result<Vec<(&'a Trajectory, &'a Trajectory)>> {
    let by_id: BTreeMap<usize, &Trajectory> = gt.iter().map(|t| (t.part_id, t)).collect();
    set.iter()
        .map(|t| {
            by_id
                .get(&t.part_id)
                .map(|g| (t, *g))
                .ok_or_else(|| crate::Error::InvalidArgument(format!("no ground truth for part {}", t.part_id)))
        })
        .collect()
}

fn frame_quartiles(pairs: &[(&Trajectory, &Trajectory)], steps: usize) -> Result<Vec<Quartiles>> {
    let mut per_frame = vec![Vec::with_capacity(pairs.len()); steps];
    for (traj, g) in pairs {
        if traj.len() != steps || g.len() != steps {
            return invalid_arg("trajectories do not share one length");
        }
        for (k, (a, b)) in traj.poses.iter().zip(&g.poses).enumerate() {
            per_frame[k].push((a.translation() - b.translation()).norm());
        }
    }
    per_frame.iter().map(|f| quartiles(f)).collect()
}

pub fn deviation_profile(
    executed_set: &[Trajectory],
    predicted_set: &[Trajectory],
    gt_set: &[Trajectory],
) -> Result<DeviationProfile> {
    let steps = gt_set
        .first()
        .map(Trajectory::len)
        .ok_or_else(|| crate::Error::InvalidArgument("empty ground-truth set".into()))?;
    Ok(DeviationProfile {
        executed: frame_quartiles(&pair_up(executed_set, gt_set)?, steps)?,
        predicted: frame_quartiles(&pair_up(predicted_set, gt_set)?, steps)?,
    })
}

/// Aggregate evaluation output. Trajectory fields are absent for purely
/// static evaluations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub kd: f64,
    pub scd: f64,
    pub pa: f64,
    pub sr: f64,
    pub acd_q25: Option<f64>,
    pub acd_q50: Option<f64>,
    pub acd_q75: Option<f64>,
    pub fcd_q25: Option<f64>,
    pub fcd_q50: Option<f64>,
    pub fcd_q75: Option<f64>,
    pub deviation_profile: Option<DeviationProfile>,
}

impl MetricsReport {
    pub fn acd_quartiles(&self) -> Option<Quartiles> {
        Some(Quartiles {
            q25: self.acd_q25?,
            q50: self.acd_q50?,
            q75: self.acd_q75?,
        })
    }

    pub fn fcd_quartiles(&self) -> Option<Quartiles> {
        Some(Quartiles {
            q25: self.fcd_q25?,
            q50: self.fcd_q50?,
            q75: self.fcd_q75?,
        })
    }
}

/// Everything one assembly contributes to a report.
#[derive(Debug, Clone, PartialEq)]
pub struct AssemblyEvaluation {
    pub assembly_id: String,
    pub kd: f64,
    pub scd: f64,
    /// Part-wise final chamfer distances.
    pub part_cds: Vec<f64>,
    pub acd: Vec<f64>,
    pub fcd: Vec<f64>,
    pub executed: Vec<Trajectory>,
    pub predicted: Vec<Trajectory>,
    pub gt: Vec<Trajectory>,
}

/// Reduces per-assembly evaluations into one report. Assemblies are sorted
/// by id first, so the result does not depend on evaluation order.
pub fn aggregate(evals: &[AssemblyEvaluation], threshold: PartThreshold) -> Result<MetricsReport> {
    if evals.is_empty() {
        return invalid_arg("no assemblies to aggregate");
    }
    let mut sorted: Vec<&AssemblyEvaluation> = evals.iter().collect();
    sorted.sort_by(|a, b| a.assembly_id.cmp(&b.assembly_id));
    let all_cds: Vec<f64> = sorted.iter().flat_map(|e| e.part_cds.iter().copied()).collect();
    let per_assembly: Vec<Vec<f64>> = sorted.iter().map(|e| e.part_cds.clone()).collect();
    let acds: Vec<f64> = sorted.iter().flat_map(|e| e.acd.iter().copied()).collect();
    let fcds: Vec<f64> = sorted.iter().flat_map(|e| e.fcd.iter().copied()).collect();
    let (acd_q, fcd_q) = if acds.is_empty() {
        (None, None)
    } else {
        (Some(quartiles(&acds)?), Some(quartiles(&fcds)?))
    };
    let deviation = if sorted.iter().all(|e| e.executed.is_empty()) {
        None
    } else {
        // part ids repeat across assemblies, so pair within each assembly
        let mut executed = Vec::new();
        let mut predicted = Vec::new();
        for e in &sorted {
            executed.extend(pair_up(&e.executed, &e.gt)?);
            predicted.extend(pair_up(&e.predicted, &e.gt)?);
        }
        let steps = sorted
            .iter()
            .find_map(|e| e.gt.first().map(Trajectory::len))
            .unwrap_or(0);
        Some(DeviationProfile {
            executed: frame_quartiles(&executed, steps)?,
            predicted: frame_quartiles(&predicted, steps)?,
        })
    };
    Ok(MetricsReport {
        kd: compensated_mean(sorted.iter().map(|e| e.kd)),
        scd: compensated_mean(sorted.iter().map(|e| e.scd)),
        pa: part_accuracy(&all_cds, threshold)?,
        sr: success_rate(&per_assembly, threshold)?,
        acd_q25: acd_q.map(|q| q.q25),
        acd_q50: acd_q.map(|q| q.q50),
        acd_q75: acd_q.map(|q| q.q75),
        fcd_q25: fcd_q.map(|q| q.q25),
        fcd_q50: fcd_q.map(|q| q.q50),
        fcd_q75: fcd_q.map(|q| q.q75),
        deviation_profile: deviation,
    })
}
