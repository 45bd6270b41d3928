use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{invalid_arg, Result};

/// Axis-aligned box, `min <= max` component-wise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Point3<f64>,
    pub max: Point3<f64>,
}

impl Aabb {
    pub fn new(min: Point3<f64>, max: Point3<f64>) -> Result<Self> {
        if (0..3).any(|i| !(min[i] <= max[i])) {
            return invalid_arg("aabb min must not exceed max");
        }
        Ok(Self { min, max })
    }

    pub fn from_points<'a, I: IntoIterator<Item = &'a Point3<f64>>>(points: I) -> Option<Self> {
        let mut it = points.into_iter();
        let first = *it.next()?;
        let mut bb = Self {
            min: first,
            max: first,
        };
        for p in it {
            bb.grow(p);
        }
        Some(bb)
    }

    pub fn grow(&mut self, p: &Point3<f64>) {
        self.min = self.min.inf(p);
        self.max = self.max.sup(p);
    }

    pub fn union(&self, other: &Aabb) -> Aabb {
        Aabb {
            min: self.min.inf(&other.min),
            max: self.max.sup(&other.max),
        }
    }

    pub fn inflated(&self, margin: f64) -> Aabb {
        let m = Vector3::repeat(margin);
        Aabb {
            min: self.min - m,
            max: self.max + m,
        }
    }

    pub fn extent(&self) -> Vector3<f64> {
        self.max - self.min
    }

    pub fn center(&self) -> Point3<f64> {
        nalgebra::center(&self.min, &self.max)
    }

    pub fn diagonal(&self) -> f64 {
        self.extent().norm()
    }

    pub fn volume(&self) -> f64 {
        let e = self.extent();
        e.x * e.y * e.z
    }

    pub fn contains(&self, p: &Point3<f64>) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }

    /// Closed-box overlap test.
    pub fn intersects(&self, other: &Aabb) -> bool {
        (0..3).all(|i| self.min[i] <= other.max[i] && other.min[i] <= self.max[i])
    }

    pub fn distance_squared_to(&self, p: &Point3<f64>) -> f64 {
        (0..3)
            .map(|i| {
                let d = (self.min[i] - p[i]).max(0.0).max(p[i] - self.max[i]);
                d * d
            })
            .sum()
    }
}

/// Tight box around a non-empty cloud.
pub fn bbox_of(cloud: &[Point3<f64>]) -> Result<Aabb> {
    Aabb::from_points(cloud).ok_or_else(|| crate::Error::InvalidArgument("empty point cloud".into()))
}

pub fn bbox_diagonal(aabb: &Aabb) -> f64 {
    aabb.diagonal()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonals() {
        let cube: Vec<Point3<f64>> = (0..8)
            .map(|i| Point3::new((i & 1) as f64, ((i >> 1) & 1) as f64, ((i >> 2) & 1) as f64))
            .collect();
        assert!((bbox_diagonal(&bbox_of(&cube).unwrap()) - 3f64.sqrt()).abs() < 1e-15);
        let one = [Point3::new(4.0, 5.0, 6.0)];
        assert_eq!(bbox_diagonal(&bbox_of(&one).unwrap()), 0.0);
        let two = [Point3::origin(), Point3::new(2.0, 1.0, 0.0)];
        assert!((bbox_diagonal(&bbox_of(&two).unwrap()) - 5f64.sqrt()).abs() < 1e-15);
        assert!(bbox_of(&[]).is_err());
    }

    #[test]
    fn rejects_inverted_box() {
        assert!(Aabb::new(Point3::new(1.0, 0.0, 0.0), Point3::origin()).is_err());
    }
}
