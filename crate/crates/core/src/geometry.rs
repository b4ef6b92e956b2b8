//! Ray geometry of the unit disk and ball: exit times, feet, chords, normals.
//!
//! Points and velocities are `[f64; 3]`; in the disk the third component is
//! ignored and must be zero.

use crate::error::{Error, Result};
use core::f64::consts::PI;

pub type Vec3 = [f64; 3];

/// Relative tolerance separating grazing from transversal directions.
pub const GRAZING_TOL: f64 = 1e-12;

#[inline]
/// Angle reduced to `[0, 2π)`.
pub fn wrap_angle(a: f64) -> f64 {
    let r = a - 2.0 * PI * libm::floor(a / (2.0 * PI));
    if r >= 2.0 * PI {
        0.0
    } else {
        r
    }
}

pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn scale(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

/// `a + s·b`.
#[inline]
pub fn axpy(a: Vec3, s: f64, b: Vec3) -> Vec3 {
    [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]]
}

#[inline]
pub fn norm(a: Vec3) -> f64 {
    libm::sqrt(dot(a, a))
}

#[inline]
pub fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Shape {
    Disk,
    Ball,
}

/// Which way to follow the characteristic.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

/// Classification of a boundary phase point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundarySide {
    Incoming,
    Outgoing,
    Grazing,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhasePoint {
    pub x: Vec3,
    pub v: Vec3,
}

impl PhasePoint {
    pub fn new(x: Vec3, v: Vec3) -> Self {
        PhasePoint { x, v }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Domain {
    pub shape: Shape,
    pub center: Vec3,
    pub radius: f64,
}

impl Domain {
    pub fn new(shape: Shape, center: Vec3, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::Parameter { what: "radius must be positive" });
        }
        if shape == Shape::Disk && center[2] != 0.0 {
            return Err(Error::Parameter { what: "disk center must lie in the plane" });
        }
        Ok(Domain { shape, center, radius })
    }

    pub fn unit_disk() -> Self {
        Domain { shape: Shape::Disk, center: [0.0; 3], radius: 1.0 }
    }

    pub fn unit_ball() -> Self {
        Domain { shape: Shape::Ball, center: [0.0; 3], radius: 1.0 }
    }

    pub fn dim(&self) -> usize {
        match self.shape {
            Shape::Disk => 2,
            Shape::Ball => 3,
        }
    }

    pub fn diameter(&self) -> f64 {
        2.0 * self.radius
    }

    /// Lebesgue measure of Ω.
    pub fn volume(&self) -> f64 {
        match self.shape {
            Shape::Disk => PI * self.radius * self.radius,
            Shape::Ball => 4.0 / 3.0 * PI * self.radius * self.radius * self.radius,
        }
    }

    /// Surface measure of ∂Ω.
    pub fn boundary_measure(&self) -> f64 {
        match self.shape {
            Shape::Disk => 2.0 * PI * self.radius,
            Shape::Ball => 4.0 * PI * self.radius * self.radius,
        }
    }

    /// Outward unit normal at (the radial projection of) `x`.
    pub fn normal(&self, x: Vec3) -> Vec3 {
        let r = sub(x, self.center);
        scale(r, 1.0 / norm(r))
    }

    /// Whether `x` lies in the closure of Ω up to `1e-12·D`.
    pub fn contains(&self, x: Vec3) -> bool {
        if self.shape == Shape::Disk && x[2] != 0.0 {
            return false;
        }
        norm(sub(x, self.center)) <= self.radius + 1e-12 * self.diameter()
    }

    /// Radial projection of `x` onto ∂Ω.
    pub fn project(&self, x: Vec3) -> Vec3 {
        axpy(self.center, self.radius, self.normal(x))
    }

    /// Sign classification of `(x, v)` for a boundary point `x`.
    pub fn classify(&self, x: Vec3, v: Vec3) -> BoundarySide {
        let s = norm(v);
        if s == 0.0 {
            return BoundarySide::Grazing;
        }
        let c = dot(v, self.normal(x)) / s;
        if c > GRAZING_TOL {
            BoundarySide::Outgoing
        } else if c < -GRAZING_TOL {
            BoundarySide::Incoming
        } else {
            BoundarySide::Grazing
        }
    }

    /// `t₊` (forward) or `t₋` (backward); `+∞` for zero velocity.
    pub fn exit_time(&self, p: PhasePoint, direction: Direction) -> Result<f64> {
        if !self.contains(p.x) {
            return Err(Error::OutsideDomain);
        }
        let a = dot(p.v, p.v);
        if a == 0.0 {
            return Ok(f64::INFINITY);
        }
        let v = match direction {
            Direction::Forward => p.v,
            Direction::Backward => scale(p.v, -1.0),
        };
        Ok(self.ray_exit(p.x, v))
    }

    /// Smallest `t ≥ 0` with `|x + t v − c| = R` for `x` in the closed domain.
    #[inline]
    pub fn ray_exit(&self, x: Vec3, v: Vec3) -> f64 {
        let r = sub(x, self.center);
        let a = dot(v, v);
        let b = dot(r, v);
        let c = (dot(r, r) - self.radius * self.radius).min(0.0);
        let disc = libm::sqrt((b * b - a * c).max(0.0));
        if b > 0.0 {
            -c / (b + disc)
        } else {
            (disc - b) / a
        }
    }

    /// Backward foot `(x − t₋ v, t₋)`.
    pub fn boundary_foot(&self, p: PhasePoint) -> Result<(Vec3, f64)> {
        if dot(p.v, p.v) == 0.0 {
            return Err(Error::ZeroVelocity);
        }
        let t = self.exit_time(p, Direction::Backward)?;
        Ok((axpy(p.x, -t, p.v), t))
    }

    /// Full chord time from the boundary point `x`: `τ₋` on Γ₊ and `τ₊` on Γ₋.
    pub fn chord_time(&self, x: Vec3, v: Vec3) -> Result<f64> {
        let xb = self.project(x);
        match self.classify(xb, v) {
            BoundarySide::Grazing => Err(Error::Grazing),
            BoundarySide::Outgoing => Ok(self.chord_from(xb, scale(v, -1.0))),
            BoundarySide::Incoming => Ok(self.chord_from(xb, v)),
        }
    }

    /// Chord time entering at boundary point `x` with inward velocity `v`.
    #[inline]
    pub fn chord_from(&self, x: Vec3, v: Vec3) -> f64 {
        let n = self.normal(x);
        (-2.0 * self.radius * dot(v, n) / dot(v, v)).max(0.0)
    }

    /// A unit tangent frame `(t₁, t₂)` at the boundary point `x`
    /// (`t₂` unused in the disk). Continuous away from the poles.
    pub fn tangent_frame(&self, x: Vec3) -> (Vec3, Vec3) {
        let n = self.normal(x);
        match self.shape {
            Shape::Disk => ([-n[1], n[0], 0.0], [0.0, 0.0, 0.0]),
            Shape::Ball => {
                let mut t1 = cross([0.0, 0.0, 1.0], n);
                let m = norm(t1);
                if m < 1e-12 {
                    t1 = [1.0, 0.0, 0.0];
                } else {
                    t1 = scale(t1, 1.0 / m);
                }
                let t2 = cross(n, t1);
                (t1, t2)
            }
        }
    }

    /// Boundary point of the disk at polar angle `phi`.
    pub fn disk_point(&self, phi: f64) -> Vec3 {
        [
            self.center[0] + self.radius * libm::cos(phi),
            self.center[1] + self.radius * libm::sin(phi),
            0.0,
        ]
    }

    /// Boundary point of the ball at height `z = cos(polar)` and azimuth `phi`.
    pub fn sphere_point(&self, z: f64, phi: f64) -> Vec3 {
        let s = libm::sqrt((1.0 - z * z).max(0.0));
        [
            self.center[0] + self.radius * s * libm::cos(phi),
            self.center[1] + self.radius * s * libm::sin(phi),
            self.center[2] + self.radius * z,
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_time_examples() {
        let d = Domain::unit_disk();
        let t = d.exit_time(PhasePoint::new([0.0; 3], [1.0, 0.0, 0.0]), Direction::Backward).unwrap();
        assert!((t - 1.0).abs() < 1e-15);
        let t = d.exit_time(PhasePoint::new([0.5, 0.0, 0.0], [2.0, 0.0, 0.0]), Direction::Forward).unwrap();
        assert!((t - 0.25).abs() < 1e-15);
        let t = d.exit_time(PhasePoint::new([0.5, 0.0, 0.0], [0.0, 1.0, 0.0]), Direction::Forward).unwrap();
        assert!((t - libm::sqrt(0.75)).abs() < 1e-15);
        let t = d.exit_time(PhasePoint::new([0.1, 0.2, 0.0], [0.0; 3]), Direction::Forward).unwrap();
        assert!(t.is_infinite());
        assert_eq!(
            d.exit_time(PhasePoint::new([2.0, 0.0, 0.0], [1.0, 0.0, 0.0]), Direction::Forward),
            Err(Error::OutsideDomain)
        );
    }

    #[test]
    fn foot_examples() {
        let d = Domain::unit_disk();
        let (f, t) = d.boundary_foot(PhasePoint::new([0.0; 3], [1.0, 0.0, 0.0])).unwrap();
        assert!((f[0] + 1.0).abs() < 1e-15 && f[1].abs() < 1e-15 && (t - 1.0).abs() < 1e-15);
        let (f, t) = d.boundary_foot(PhasePoint::new([0.5, 0.0, 0.0], [1.0, 0.0, 0.0])).unwrap();
        assert!((f[0] + 1.0).abs() < 1e-15 && (t - 1.5).abs() < 1e-15);
        let (f, t) = d.boundary_foot(PhasePoint::new([1.0, 0.0, 0.0], [-1.0, 0.3, 0.0])).unwrap();
        assert_eq!((f, t), ([1.0, 0.0, 0.0], 0.0));
        assert_eq!(d.boundary_foot(PhasePoint::new([0.0; 3], [0.0; 3])), Err(Error::ZeroVelocity));
    }

    #[test]
    fn chord_examples() {
        let d = Domain::unit_disk();
        assert!((d.chord_time([1.0, 0.0, 0.0], [1.0, 0.0, 0.0]).unwrap() - 2.0).abs() < 1e-15);
        assert!((d.chord_time([1.0, 0.0, 0.0], [2.0, 0.0, 0.0]).unwrap() - 1.0).abs() < 1e-15);
        let a = PI / 3.0;
        let v = [libm::cos(a), libm::sin(a), 0.0];
        assert!((d.chord_time([1.0, 0.0, 0.0], v).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(d.chord_time([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]), Err(Error::Grazing));
    }
}
