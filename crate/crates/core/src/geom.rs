//! Small fixed-size vectors used throughout the twin. Global frame: x along
//! the gNB rail, y into the room, z up; all lengths in meters.

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn extend(self, z: f64) -> Vec3 {
        Vec3::new(self.x, self.y, z)
    }
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn norm(self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn xy(self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl From<[f64; 2]> for Vec2 {
    fn from(a: [f64; 2]) -> Self {
        Vec2::new(a[0], a[1])
    }
}

impl From<Vec2> for [f64; 2] {
    fn from(v: Vec2) -> Self {
        [v.x, v.y]
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }
}

impl From<Vec3> for [f64; 3] {
    fn from(v: Vec3) -> Self {
        [v.x, v.y, v.z]
    }
}

macro_rules! impl_ops {
    ($t:ident { $($f:ident),+ }) => {
        impl Add for $t {
            type Output = $t;
            fn add(self, o: $t) -> $t { $t { $($f: self.$f + o.$f),+ } }
        }
        impl Sub for $t {
            type Output = $t;
            fn sub(self, o: $t) -> $t { $t { $($f: self.$f - o.$f),+ } }
        }
        impl Mul<f64> for $t {
            type Output = $t;
            fn mul(self, k: f64) -> $t { $t { $($f: self.$f * k),+ } }
        }
    };
}

impl_ops!(Vec2 { x, y });
impl_ops!(Vec3 { x, y, z });

/// Rotates a camera-frame vector into the global frame.
///
/// Camera frame: x along the boresight, y to the left, z up. The boresight
/// is `[elevation, azimuth]`: azimuth counter-clockwise from global +x,
/// elevation up from the floor plane.
pub fn camera_to_global(boresight: [f64; 2], v: Vec3) -> Vec3 {
    let [el, az] = boresight;
    let (se, ce) = el.sin_cos();
    let (sa, ca) = az.sin_cos();
    let u = ce * v.x - se * v.z;
    let w = se * v.x + ce * v.z;
    Vec3::new(ca * u - sa * v.y, sa * u + ca * v.y, w)
}

/// Inverse of [`camera_to_global`].
pub fn global_to_camera(boresight: [f64; 2], v: Vec3) -> Vec3 {
    let [el, az] = boresight;
    let (se, ce) = el.sin_cos();
    let (sa, ca) = az.sin_cos();
    let u = ca * v.x + sa * v.y;
    let side = -sa * v.x + ca * v.y;
    Vec3::new(ce * u + se * v.z, side, -se * u + ce * v.z)
}

/// Spherical `(r, elevation, azimuth)` to a Cartesian vector in the same frame.
pub fn polar_to_cartesian(r: f64, theta: f64, phi: f64) -> Vec3 {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    Vec3::new(r * ct * cp, r * ct * sp, r * st)
}

/// Inverse of [`polar_to_cartesian`]; the zero vector maps to all zeros.
pub fn cartesian_to_polar(v: Vec3) -> (f64, f64, f64) {
    let r = v.norm();
    if r == 0.0 {
        return (0.0, 0.0, 0.0);
    }
    (r, (v.z / r).clamp(-1.0, 1.0).asin(), v.y.atan2(v.x))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Vec3, b: Vec3) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn boresight_maps_to_forward_axis() {
        let b = [0.3, -1.1];
        let fwd = camera_to_global(b, Vec3::new(1.0, 0.0, 0.0));
        assert!(close(fwd, polar_to_cartesian(1.0, 0.3, -1.1)));
        assert!(close(global_to_camera(b, fwd), Vec3::new(1.0, 0.0, 0.0)));
    }

    #[test]
    fn quarter_turn() {
        let left = camera_to_global([0.0, 0.0], polar_to_cartesian(5.0, 0.0, std::f64::consts::FRAC_PI_2));
        assert!(close(left, Vec3::new(0.0, 5.0, 0.0)));
    }

    #[test]
    fn polar_round_trip() {
        let v = Vec3::new(1.5, -2.0, 0.7);
        let (r, t, p) = cartesian_to_polar(v);
        assert!(close(polar_to_cartesian(r, t, p), v));
    }
}
