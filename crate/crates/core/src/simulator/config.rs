use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::config::KvConfig;
use crate::error::{invalid_arg, Result};

/// Contact and integration parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub gravity: [f64; 3],
    /// Integration substeps per waypoint interval.
    pub substeps: usize,
    /// Adhesion distance.
    pub ka: f64,
    /// Contact damping.
    pub kd: f64,
    /// Contact stiffness.
    pub ke: f64,
    /// Friction stiffness.
    pub kf: f64,
    pub mu: f64,
    pub restitution: f64,
    pub thickness: f64,
    /// Seconds per waypoint interval.
    pub dt: f64,
    pub density: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            gravity: [0.0; 3],
            substeps: 60,
            ka: 0.0,
            kd: 1000.0,
            ke: 1.0e5,
            kf: 0.0,
            mu: 0.0,
            restitution: 0.0,
            thickness: 1e-5,
            dt: 1.0,
            density: 1.0,
        }
    }
}

impl SimConfig {
    pub const KEYS: [&'static str; 11] = [
        "gravity",
        "substeps",
        "ka",
        "kd",
        "ke",
        "kf",
        "mu",
        "restitution",
        "thickness",
        "dt",
        "density",
    ];

    pub fn validate(&self) -> Result<()> {
        if self.substeps == 0 {
            return invalid_arg("substeps must be at least 1");
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return invalid_arg("dt must be positive");
        }
        let non_negative = [
            ("ke", self.ke),
            ("kd", self.kd),
            ("kf", self.kf),
            ("mu", self.mu),
            ("ka", self.ka),
            ("thickness", self.thickness),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0) || !v.is_finite() {
                return invalid_arg(format!("{name} must be finite and non-negative"));
            }
        }
        if !(0.0..=1.0).contains(&self.restitution) {
            return invalid_arg("restitution must lie in [0, 1]");
        }
        if !(self.density > 0.0) || !self.density.is_finite() {
            return invalid_arg("density must be positive");
        }
        if self.gravity.iter().any(|g| !g.is_finite()) {
            return invalid_arg("gravity must be finite");
        }
        Ok(())
    }

    /// Defaults overridden by the simulator keys present in `cfg`; other keys
    /// are ignored so one file can configure several subsystems.
    pub fn from_kv(cfg: &KvConfig) -> Result<Self> {
        let mut out = Self::default();
        if let Some(g) = cfg.get_vec3("gravity")? {
            out.gravity = g;
        }
        if let Some(s) = cfg.get_usize("substeps")? {
            out.substeps = s;
        }
        for (key, slot) in [
            ("ka", &mut out.ka),
            ("kd", &mut out.kd),
            ("ke", &mut out.ke),
            ("kf", &mut out.kf),
            ("mu", &mut out.mu),
            ("restitution", &mut out.restitution),
            ("thickness", &mut out.thickness),
            ("dt", &mut out.dt),
            ("density", &mut out.density),
        ] {
            if let Some(v) = cfg.get_f64(key)? {
                *slot = v;
            }
        }
        out.validate()?;
        Ok(out)
    }

    pub fn gravity(&self) -> Vector3<f64> {
        Vector3::from(self.gravity)
    }

    pub fn substep(&self) -> f64 {
        self.dt / self.substeps as f64
    }

    /// Distance below which a point counts as touching.
    pub fn contact_cutoff(&self) -> f64 {
        self.thickness + self.ka
    }

    pub fn friction_enabled(&self) -> bool {
        self.kf > 0.0 && self.mu > 0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_overrides() {
        let kv = KvConfig::parse("ke = 2e5\nsubsteps = 120\ngravity = 0 0 -9.8\nunrelated = 3\n").unwrap();
        let c = SimConfig::from_kv(&kv).unwrap();
        assert_eq!(c.ke, 2e5);
        assert_eq!(c.substeps, 120);
        assert_eq!(c.gravity, [0.0, 0.0, -9.8]);
        assert_eq!(c.kd, 1000.0);
        assert!(SimConfig::from_kv(&KvConfig::parse("substeps = 0").unwrap()).is_err());
        assert!(SimConfig::from_kv(&KvConfig::parse("dt = -1").unwrap()).is_err());
    }
}
