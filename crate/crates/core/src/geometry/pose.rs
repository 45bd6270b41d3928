use nalgebra::{Point3, Quaternion, UnitQuaternion, Vector3};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid_arg, invalid_geom, Result};

/// A rigid transform: unit quaternion (scalar first, `w >= 0`) plus translation.
///
/// The sign of the quaternion is canonical so that two poses describing the
/// same rotation compare equal and finite differences of consecutive
/// quaternions never jump across the double cover.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    rotation: UnitQuaternion<f64>,
    translation: Vector3<f64>,
}

fn canonical(q: Quaternion<f64>) -> Quaternion<f64> {
    let flip = if q.w != 0.0 {
        q.w < 0.0
    } else {
        let first = [q.i, q.j, q.k].into_iter().find(|c| *c != 0.0).unwrap_or(0.0);
        first < 0.0
    };
    let q = if flip { -q } else { q };
    // adding +0 clears negative zeros so they do not leak into JSON
    Quaternion::new(q.w + 0.0, q.i + 0.0, q.j + 0.0, q.k + 0.0)
}

fn normalized(q: Quaternion<f64>) -> Result<UnitQuaternion<f64>> {
    if !q.coords.iter().all(|c| c.is_finite()) {
        return invalid_geom("non-finite quaternion");
    }
    let norm = q.norm();
    if norm < 1e-12 {
        return invalid_geom("zero quaternion");
    }
    // already-unit input keeps its exact bits so files round-trip
    let q = if (norm - 1.0).abs() <= 1e-14 { q } else { q / norm };
    Ok(UnitQuaternion::new_unchecked(canonical(q)))
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose {
    pub fn identity() -> Self {
        Self {
            rotation: UnitQuaternion::identity(),
            translation: Vector3::zeros(),
        }
    }

    /// Builds a pose from a scalar-first quaternion and a translation,
    /// normalizing the quaternion.
    pub fn new(wxyz: [f64; 4], translation: [f64; 3]) -> Result<Self> {
        let [w, x, y, z] = wxyz;
        let rotation = normalized(Quaternion::new(w, x, y, z))?;
        let translation = Vector3::from(translation);
        if !translation.iter().all(|c| c.is_finite()) {
            return invalid_geom("non-finite translation");
        }
        Ok(Self {
            rotation,
            translation,
        })
    }

    pub fn from_parts(rotation: UnitQuaternion<f64>, translation: Vector3<f64>) -> Self {
        Self {
            rotation: UnitQuaternion::new_unchecked(canonical(rotation.into_inner())),
            translation,
        }
    }

    pub fn from_translation(t: Vector3<f64>) -> Self {
        Self::from_parts(UnitQuaternion::identity(), t)
    }

    pub fn from_axis_angle(axis: Vector3<f64>, angle: f64, translation: Vector3<f64>) -> Self {
        Self::from_parts(UnitQuaternion::from_scaled_axis(axis.normalize() * angle), translation)
    }

    /// `[w, x, y, z, tx, ty, tz]`
    pub fn from_array(a: [f64; 7]) -> Result<Self> {
        Self::new([a[0], a[1], a[2], a[3]], [a[4], a[5], a[6]])
    }

    pub fn to_array(&self) -> [f64; 7] {
        let q = self.rotation.quaternion();
        let t = &self.translation;
        [q.w, q.i, q.j, q.k, t.x, t.y, t.z]
    }

    pub fn rotation(&self) -> &UnitQuaternion<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    pub fn quat_wxyz(&self) -> [f64; 4] {
        let q = self.rotation.quaternion();
        [q.w, q.i, q.j, q.k]
    }

    pub fn with_translation(&self, t: Vector3<f64>) -> Self {
        Self {
            rotation: self.rotation,
            translation: t,
        }
    }

    pub fn transform_point(&self, p: &Point3<f64>) -> Point3<f64> {
        self.rotation * p + self.translation
    }

    pub fn rotate_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * v
    }

    pub fn inverse_transform_point(&self, p: &Point3<f64>) -> Point3<f64> {
        self.rotation.inverse_transform_point(&(p - self.translation))
    }

    pub fn inverse(&self) -> Self {
        let inv = self.rotation.inverse();
        Self::from_parts(inv, -(inv * self.translation))
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Pose) -> Self {
        Self::from_parts(
            self.rotation * other.rotation,
            self.rotation * other.translation + self.translation,
        )
    }

    /// Geodesic rotation angle to `other`, in `[0, π]`.
    pub fn angle_to(&self, other: &Pose) -> f64 {
        relative_axis_angle(&self.rotation, &other.rotation).1
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|c| c.is_finite())
    }

    /// Linear translation, shorter-arc slerp rotation.
    pub fn interpolate(&self, other: &Pose, s: f64) -> Pose {
        let (axis, angle) = relative_axis_angle(&self.rotation, &other.rotation);
        let step = UnitQuaternion::from_scaled_axis(axis * (angle * s));
        Pose::from_parts(
            step * self.rotation,
            self.translation + (other.translation - self.translation) * s,
        )
    }
}

/// Axis and angle (in `[0, π]`) of `to · from⁻¹`; the axis is zero when the
/// rotations coincide.
pub fn relative_axis_angle(
    from: &UnitQuaternion<f64>,
    to: &UnitQuaternion<f64>,
) -> (Vector3<f64>, f64) {
    let rel = canonical((to * from.inverse()).into_inner());
    let v = rel.vector();
    let s = v.norm();
    if s < 1e-300 {
        return (Vector3::zeros(), 0.0);
    }
    let angle = 2.0 * s.atan2(rel.w);
    (v / s, angle)
}

/// Linear and angular velocity that carries `from` to `to` in `dt`.
///
/// The angular part follows the shorter arc of `to · from⁻¹`, expressed in
/// the world frame.
pub fn pose_interpolation_velocity(
    from: &Pose,
    to: &Pose,
    dt: f64,
) -> Result<(Vector3<f64>, Vector3<f64>)> {
    if !(dt > 0.0) || !dt.is_finite() {
        return invalid_arg(format!("dt must be positive, got {dt}"));
    }
    let linear = (to.translation - from.translation) / dt;
    let (axis, angle) = relative_axis_angle(&from.rotation, &to.rotation);
    Ok((linear, axis * (angle / dt)))
}

impl Serialize for Pose {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_array().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Pose {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let a = <[f64; 7]>::deserialize(d)?;
        Pose::from_array(a).map_err(serde::de::Error::custom)
    }
}
