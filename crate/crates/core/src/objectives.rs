//! Training objectives evaluated as plain scores (no gradients).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::config::KvConfig;
use crate::error::{invalid_arg, Result};
use crate::geometry::{chamfer, PartGeometry, Trajectory};
use crate::metrics::{shape_chamfer, FinalPoses};
use crate::numeric::CompensatedSum;
use crate::ordering::{cosine_similarity, maxpool_patches, FeatureMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveConfig {
    pub lambda_p: f64,
    pub lambda_t: f64,
    pub lambda_r: f64,
    pub lambda_st: f64,
    pub lambda_sr: f64,
    pub tau: f64,
}

impl Default for ObjectiveConfig {
    fn default() -> Self {
        Self {
            lambda_p: 20.0,
            lambda_t: 1.0,
            lambda_r: 20.0,
            lambda_st: 1.0,
            lambda_sr: 20.0,
            tau: 0.07,
        }
    }
}

impl ObjectiveConfig {
    pub const KEYS: [&'static str; 6] = ["lambda_p", "lambda_t", "lambda_r", "lambda_st", "lambda_sr", "tau"];

    pub fn validate(&self) -> Result<()> {
        let weights = [self.lambda_p, self.lambda_t, self.lambda_r, self.lambda_st, self.lambda_sr];
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return invalid_arg("loss weights must be finite and non-negative");
        }
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return invalid_arg("temperature must be positive");
        }
        Ok(())
    }

    /// Defaults overridden by whichever keys `cfg` carries.
    pub fn from_kv(cfg: &KvConfig) -> Result<Self> {
        let mut out = Self::default();
        for (key, slot) in [
            ("lambda_p", &mut out.lambda_p),
            ("lambda_t", &mut out.lambda_t),
            ("lambda_r", &mut out.lambda_r),
            ("lambda_st", &mut out.lambda_st),
            ("lambda_sr", &mut out.lambda_sr),
            ("tau", &mut out.tau),
        ] {
            if let Some(v) = cfg.get_f64(key)? {
                *slot = v;
            }
        }
        out.validate()?;
        Ok(out)
    }

    /// Applies `lambda_p=3,lambda_t=0.5`-style overrides.
    pub fn with_overrides(&self, spec: &str) -> Result<Self> {
        let mut cfg = KvConfig::default();
        for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| crate::Error::InvalidArgument(format!("bad weight override `{item}`")))?;
            if !Self::KEYS.contains(&k.trim()) {
                return invalid_arg(format!("unknown weight `{}`", k.trim()));
            }
            cfg.set(k.trim(), v.trim());
        }
        let mut out = *self;
        for (key, slot) in [
            ("lambda_p", &mut out.lambda_p),
            ("lambda_t", &mut out.lambda_t),
            ("lambda_r", &mut out.lambda_r),
            ("lambda_st", &mut out.lambda_st),
            ("lambda_sr", &mut out.lambda_sr),
            ("tau", &mut out.tau),
        ] {
            if let Some(v) = cfg.get_f64(key)? {
                *slot = v;
            }
        }
        out.validate()?;
        Ok(out)
    }
}

/// Contrastive order loss. `sigma[i]` is the part matched to instruction
/// `i`; similarities are cosine, instruction patches are max-pooled first.
pub fn infonce_order_loss(
    part_feats: &FeatureMatrix,
    instr_feats: &FeatureMatrix,
    sigma: &[usize],
    config: &ObjectiveConfig,
) -> Result<f64> {
    config.validate()?;
    let instr = maxpool_patches(instr_feats)?;
    let parts = maxpool_patches(part_feats)?;
    let b = instr.rows();
    if parts.rows() != b || sigma.len() != b {
        return invalid_arg(format!(
            "row counts differ: {} parts, {} instructions, {} in sigma",
            parts.rows(),
            b,
            sigma.len()
        ));
    }
    if parts.dim() != instr.dim() {
        return invalid_arg("feature dimensions differ");
    }
    let mut seen = vec![false; b];
    for &s in sigma {
        if s >= b || seen[s] {
            return invalid_arg("sigma is not a permutation");
        }
        seen[s] = true;
    }
    let mut sim = vec![vec![0.0; b]; b];
    for i in 0..b {
        for j in 0..b {
            sim[i][j] = cosine_similarity(parts.row(sigma[i]), instr.row(j))?;
        }
    }
    infonce_from_similarity(&sim, config.tau)
}

/// Same loss from a precomputed matrix `sim[i][j] = sim(f^P_σ(i), f^I_j)`.
pub fn infonce_from_similarity(sim: &[Vec<f64>], tau: f64) -> Result<f64> {
    let b = sim.len();
    if b == 0 || sim.iter().any(|r| r.len() != b) {
        return invalid_arg("similarity matrix must be square and non-empty");
    }
    if !(tau > 0.0) {
        return invalid_arg("temperature must be positive");
    }
    let mut acc = CompensatedSum::new();
    for (i, row) in sim.iter().enumerate() {
        let logits: Vec<f64> = row.iter().map(|s| s / tau).collect();
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
        acc.add(lse - logits[i]);
    }
    Ok((acc.value() / b as f64).max(0.0))
}

pub fn loss_point_cloud(pred_final: &FinalPoses, gt_final: &FinalPoses, parts: &[PartGeometry]) -> Result<f64> {
    shape_chamfer(pred_final, gt_final, parts)
}

fn matched<'a>(pred: &'a [Trajectory], gt: &'a [Trajectory]) -> Result<Vec<(&'a Trajectory, &'a Trajectory)>> {
    if pred.len() != gt.len() || pred.is_empty() {
        return invalid_arg("predicted and ground-truth part sets differ");
    }
    let by_id: BTreeMap<usize, &Trajectory> = gt.iter().map(|t| (t.part_id, t)).collect();
    let steps = gt[0].len();
    pred.iter()
        .map(|p| {
            let g = by_id
                .get(&p.part_id)
                .ok_or_else(|| crate::Error::InvalidArgument(format!("part {} has no ground truth", p.part_id)))?;
            if p.len() != steps || g.len() != steps {
                return invalid_arg("trajectory lengths differ");
            }
            Ok((p, *g))
        })
        .collect()
}

/// Mean unsquared translation error over parts and frames.
pub fn loss_translation(pred: &[Trajectory], gt: &[Trajectory]) -> Result<f64> {
    let pairs = matched(pred, gt)?;
    let mut acc = CompensatedSum::new();
    let mut n = 0usize;
    for (p, g) in pairs {
        for (a, b) in p.poses.iter().zip(&g.poses) {
            acc.add((a.translation() - b.translation()).norm());
            n += 1;
        }
    }
    Ok(acc.value() / n as f64)
}

/// Mean chamfer distance between the part cloud under predicted and
/// ground-truth rotations (translation ignored), so symmetric parts are not
/// penalised for equivalent orientations.
pub fn loss_rotation(pred: &[Trajectory], gt: &[Trajectory], parts: &[PartGeometry]) -> Result<f64> {
    let pairs = matched(pred, gt)?;
    let geoms: BTreeMap<usize, &PartGeometry> = parts.iter().map(|p| (p.part_id(), p)).collect();
    let mut acc = CompensatedSum::new();
    let mut n = 0usize;
    for (p, g) in pairs {
        let part = geoms
            .get(&p.part_id)
            .ok_or_else(|| crate::Error::InvalidArgument(format!("no geometry for part {}", p.part_id)))?;
        for (a, b) in p.poses.iter().zip(&g.poses) {
            let ra: Vec<_> = part.points().iter().map(|x| a.rotation() * x).collect();
            let rb: Vec<_> = part.points().iter().map(|x| b.rotation() * x).collect();
            acc.add(chamfer(&ra, &rb)?);
            n += 1;
        }
    }
    Ok(acc.value() / n as f64)
}

fn smoothness(pred: &[Trajectory], diff: impl Fn(&Trajectory, usize) -> f64) -> Result<f64> {
    if pred.is_empty() {
        return invalid_arg("no trajectories");
    }
    let steps = pred[0].len();
    if steps < 2 || pred.iter().any(|t| t.len() != steps) {
        return invalid_arg("smoothness needs trajectories of one length T >= 2");
    }
    let mut acc = CompensatedSum::new();
    for t in pred {
        for k in 0..steps - 1 {
            acc.add(diff(t, k));
        }
    }
    Ok(acc.value() / (pred.len() * (steps - 1)) as f64)
}

/// Mean squared frame-to-frame translation change.
pub fn loss_smooth_translation(pred: &[Trajectory]) -> Result<f64> {
    smoothness(pred, |t, k| {
        (t.poses[k + 1].translation() - t.poses[k].translation()).norm_squared()
    })
}

/// Mean squared frame-to-frame change of the (sign-canonical) quaternions.
pub fn loss_smooth_rotation(pred: &[Trajectory]) -> Result<f64> {
    smoothness(pred, |t, k| {
        let a = t.poses[k + 1].quat_wxyz();
        let b = t.poses[k].quat_wxyz();
        a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossComponents {
    pub point_cloud: f64,
    pub translation: f64,
    pub rotation: f64,
    pub smooth_translation: f64,
    pub smooth_rotation: f64,
}

/// Weighted sum of the five components.
pub fn total_loss(c: &LossComponents, config: &ObjectiveConfig) -> Result<f64> {
    let parts = [c.point_cloud, c.translation, c.rotation, c.smooth_translation, c.smooth_rotation];
    if parts.iter().any(|v| !v.is_finite()) {
        return invalid_arg("loss component is not finite");
    }
    config.validate()?;
    let weights = [config.lambda_p, config.lambda_t, config.lambda_r, config.lambda_st, config.lambda_sr];
    Ok(parts.iter().zip(&weights).map(|(v, w)| v * w).collect::<CompensatedSum>().value())
}

/// All five components for a predicted set of trajectories.
pub fn loss_components(pred: &[Trajectory], gt: &[Trajectory], parts: &[PartGeometry]) -> Result<LossComponents> {
    let finals = |set: &[Trajectory]| -> FinalPoses { set.iter().map(|t| (t.part_id, *t.last())).collect() };
    Ok(LossComponents {
        point_cloud: loss_point_cloud(&finals(pred), &finals(gt), parts)?,
        translation: loss_translation(pred, gt)?,
        rotation: loss_rotation(pred, gt, parts)?,
        smooth_translation: loss_smooth_translation(pred)?,
        smooth_rotation: loss_smooth_rotation(pred)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Pose;
    use nalgebra::{Point3, Vector3};

    fn at(x: f64, y: f64, z: f64) -> Pose {
        Pose::from_translation(Vector3::new(x, y, z))
    }

    #[test]
    fn infonce_examples() {
        let one = FeatureMatrix::new(1, 2, vec![1.0, 2.0]).unwrap();
        let cfg = ObjectiveConfig::default();
        assert_eq!(infonce_order_loss(&one, &one, &[0], &cfg).unwrap(), 0.0);

        let eye = FeatureMatrix::new(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let cfg1 = ObjectiveConfig { tau: 1.0, ..cfg };
        let v = infonce_order_loss(&eye, &eye, &[0, 1], &cfg1).unwrap();
        assert!((v - (1.0 + (-1f64).exp()).ln()).abs() < 1e-12, "{v}");

        let same = FeatureMatrix::new(3, 2, vec![1.0, 1.0, 2.0, 2.0, 3.0, 3.0]).unwrap();
        let v = infonce_order_loss(&same, &same, &[2, 0, 1], &cfg).unwrap();
        assert!((v - 3f64.ln()).abs() < 1e-12);

        let wrong = FeatureMatrix::new(3, 2, vec![1.0; 6]).unwrap();
        assert!(infonce_order_loss(&wrong, &eye, &[0, 1], &cfg).is_err());
    }

    #[test]
    fn translation_and_smoothness_examples() {
        let gt = vec![Trajectory::stationary(0, Pose::identity(), 2)];
        let pred = vec![Trajectory::new(0, vec![at(1.0, 0.0, 0.0), at(0.0, 2.0, 0.0)]).unwrap()];
        assert_eq!(loss_translation(&gt, &gt).unwrap(), 0.0);
        assert_eq!(loss_translation(&pred, &gt).unwrap(), 1.5);

        let c = vec![Trajectory::stationary(0, at(0.0, 0.3, 0.4), 5)];
        let g = vec![Trajectory::stationary(0, Pose::identity(), 5)];
        assert!((loss_translation(&c, &g).unwrap() - 0.5).abs() < 1e-15);

        let t = vec![Trajectory::new(0, vec![at(0.0, 0.0, 0.0), at(1.0, 0.0, 0.0), at(1.0, 0.0, 0.0)]).unwrap()];
        assert_eq!(loss_smooth_translation(&t).unwrap(), 0.5);
        assert_eq!(loss_smooth_rotation(&t).unwrap(), 0.0);
        let uniform = vec![Trajectory::new(0, (0..6).map(|k| at(0.25 * k as f64, 0.0, 0.0)).collect()).unwrap()];
        assert!((loss_smooth_translation(&uniform).unwrap() - 0.0625).abs() < 1e-15);
        assert!(loss_smooth_translation(&[Trajectory::stationary(0, Pose::identity(), 1)]).is_err());
    }

    #[test]
    fn rotation_loss_asymmetric_cloud() {
        let part = PartGeometry::from_points(
            0,
            vec![Point3::new(1.0, 0.0, 0.0), Point3::new(0.0, 2.0, 0.0), Point3::new(-0.5, 0.0, 0.3)],
        )
        .unwrap();
        let gt = vec![Trajectory::stationary(0, Pose::identity(), 3)];
        let flipped = Pose::from_axis_angle(Vector3::z(), std::f64::consts::PI, Vector3::zeros());
        let pred = vec![Trajectory::stationary(0, flipped, 3)];
        assert_eq!(loss_rotation(&gt, &gt, &[part.clone()]).unwrap(), 0.0);
        assert!(loss_rotation(&pred, &gt, &[part]).unwrap() > 0.0);
    }

    #[test]
    fn total_loss_examples() {
        let cfg = ObjectiveConfig::default();
        assert_eq!(total_loss(&LossComponents::default(), &cfg).unwrap(), 0.0);
        let ones = LossComponents {
            point_cloud: 1.0,
            translation: 1.0,
            rotation: 1.0,
            smooth_translation: 1.0,
            smooth_rotation: 1.0,
        };
        assert_eq!(total_loss(&ones, &cfg).unwrap(), 62.0);
        let zero = ObjectiveConfig {
            lambda_p: 0.0,
            lambda_t: 0.0,
            lambda_r: 0.0,
            lambda_st: 0.0,
            lambda_sr: 0.0,
            ..cfg
        };
        assert_eq!(total_loss(&ones, &zero).unwrap(), 0.0);
        let bad = LossComponents { rotation: f64::NAN, ..ones };
        assert!(total_loss(&bad, &cfg).is_err());
    }

    #[test]
    fn weight_overrides() {
        let cfg = ObjectiveConfig::default().with_overrides("lambda_p=3, tau=0.5").unwrap();
        assert_eq!((cfg.lambda_p, cfg.tau, cfg.lambda_r), (3.0, 0.5, 20.0));
        assert!(ObjectiveConfig::default().with_overrides("lambda_q=1").is_err());
        assert!(ObjectiveConfig::default().with_overrides("lambda_p=-1").is_err());
    }
}
