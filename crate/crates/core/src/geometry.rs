//! Rigid transforms, rotation vectors and point-set distances.
//!
//! [`Transform`] is the value type stored in states and files: a translation
//! plus a canonical rotation vector. [`Frame`] holds the same rigid motion
//! with an explicit rotation matrix and is what the kinematics code chains
//! together.

use core::ops::{Add, AddAssign, Div, Index, Mul, Neg, Sub, SubAssign};

use crate::error::{Error, Result};
use crate::math;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);
    pub const X: Vec3 = Vec3::new(1.0, 0.0, 0.0);
    pub const Y: Vec3 = Vec3::new(0.0, 1.0, 0.0);
    pub const Z: Vec3 = Vec3::new(0.0, 0.0, 1.0);

    #[inline]
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn from_slice(s: &[f64]) -> Self {
        Vec3::new(s[0], s[1], s[2])
    }

    #[inline]
    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    #[inline]
    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline]
    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    #[inline]
    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        math::sqrt(self.norm_squared())
    }

    /// Unit vector in the same direction; the zero vector maps to itself.
    pub fn normalized(self) -> Vec3 {
        let n = self.norm();
        if n > 0.0 {
            self / n
        } else {
            self
        }
    }

    /// Scales the vector down so its norm does not exceed `limit`.
    pub fn clamp_norm(self, limit: f64) -> Vec3 {
        let n = self.norm();
        if n > limit && n > 0.0 {
            self * (limit / n)
        } else {
            self
        }
    }

    pub fn distance(self, o: Vec3) -> f64 {
        (self - o).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    #[inline]
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    #[inline]
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    #[inline]
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl SubAssign for Vec3 {
    #[inline]
    fn sub_assign(&mut self, o: Vec3) {
        *self = *self - o;
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    #[inline]
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    #[inline]
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    #[inline]
    fn div(self, s: f64) -> Vec3 {
        Vec3::new(self.x / s, self.y / s, self.z / s)
    }
}

impl Index<usize> for Vec3 {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        match i {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("Vec3 index {i} out of range"),
        }
    }
}

/// Row-major 3×3 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat3(pub [[f64; 3]; 3]);

impl Mat3 {
    pub const IDENTITY: Mat3 = Mat3([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    pub fn from_cols(c0: Vec3, c1: Vec3, c2: Vec3) -> Mat3 {
        Mat3([[c0.x, c1.x, c2.x], [c0.y, c1.y, c2.y], [c0.z, c1.z, c2.z]])
    }

    pub fn col(&self, j: usize) -> Vec3 {
        Vec3::new(self.0[0][j], self.0[1][j], self.0[2][j])
    }

    pub fn transpose(&self) -> Mat3 {
        let m = &self.0;
        Mat3([
            [m[0][0], m[1][0], m[2][0]],
            [m[0][1], m[1][1], m[2][1]],
            [m[0][2], m[1][2], m[2][2]],
        ])
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1] + self.0[2][2]
    }

    /// Rotation about a unit `axis` by `angle` radians.
    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Mat3 {
        RotVec(axis * angle).to_matrix()
    }
}

impl Mul for Mat3 {
    type Output = Mat3;
    fn mul(self, o: Mat3) -> Mat3 {
        let a = &self.0;
        let b = &o.0;
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
            }
        }
        Mat3(out)
    }
}

impl Mul<Vec3> for Mat3 {
    type Output = Vec3;
    #[inline]
    fn mul(self, v: Vec3) -> Vec3 {
        let m = &self.0;
        Vec3::new(
            m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
        )
    }
}

/// Axis-angle rotation: direction is the axis, magnitude the angle in radians.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct RotVec(pub Vec3);

impl RotVec {
    pub const IDENTITY: RotVec = RotVec(Vec3::ZERO);

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        RotVec(Vec3::new(x, y, z))
    }

    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Self {
        RotVec(axis.normalized() * angle).canonical()
    }

    pub fn angle(&self) -> f64 {
        self.0.norm()
    }

    pub fn vector(&self) -> Vec3 {
        self.0
    }

    /// Wraps the angle into `[0, π]`, flipping the axis when needed.
    pub fn canonical(self) -> RotVec {
        let theta = self.angle();
        if theta <= math::PI {
            return self;
        }
        let axis = self.0 / theta;
        let mut wrapped = theta % math::TAU;
        if wrapped > math::PI {
            wrapped -= math::TAU;
        }
        RotVec(axis * wrapped)
    }

    /// Rodrigues' formula. Angles below 1e-9 use the second-order series.
    pub fn to_matrix(&self) -> Mat3 {
        let r = self.0;
        let theta2 = r.norm_squared();
        let theta = math::sqrt(theta2);
        let k = [[0.0, -r.z, r.y], [r.z, 0.0, -r.x], [-r.y, r.x, 0.0]];
        let (a, b) = if theta < 1e-9 {
            (1.0, 0.5)
        } else {
            (math::sin(theta) / theta, (1.0 - math::cos(theta)) / theta2)
        };
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                let k2 = k[i][0] * k[0][j] + k[i][1] * k[1][j] + k[i][2] * k[2][j];
                let id = if i == j { 1.0 } else { 0.0 };
                *v = id + a * k[i][j] + b * k2;
            }
        }
        Mat3(m)
    }

    /// Logarithm of a rotation matrix, canonical (angle ≤ π).
    ///
    /// Goes through a unit quaternion (Shepperd's method) so the result stays
    /// accurate near both zero and half turns.
    pub fn from_matrix(m: &Mat3) -> RotVec {
        let r = &m.0;
        let tr = m.trace();
        let (w, x, y, z);
        if tr > r[0][0] && tr > r[1][1] && tr > r[2][2] {
            let s = math::sqrt(1.0 + tr) * 2.0;
            w = 0.25 * s;
            x = (r[2][1] - r[1][2]) / s;
            y = (r[0][2] - r[2][0]) / s;
            z = (r[1][0] - r[0][1]) / s;
        } else if r[0][0] > r[1][1] && r[0][0] > r[2][2] {
            let s = math::sqrt(1.0 + r[0][0] - r[1][1] - r[2][2]) * 2.0;
            w = (r[2][1] - r[1][2]) / s;
            x = 0.25 * s;
            y = (r[0][1] + r[1][0]) / s;
            z = (r[0][2] + r[2][0]) / s;
        } else if r[1][1] > r[2][2] {
            let s = math::sqrt(1.0 + r[1][1] - r[0][0] - r[2][2]) * 2.0;
            w = (r[0][2] - r[2][0]) / s;
            x = (r[0][1] + r[1][0]) / s;
            y = 0.25 * s;
            z = (r[1][2] + r[2][1]) / s;
        } else {
            let s = math::sqrt(1.0 + r[2][2] - r[0][0] - r[1][1]) * 2.0;
            w = (r[1][0] - r[0][1]) / s;
            x = (r[0][2] + r[2][0]) / s;
            y = (r[1][2] + r[2][1]) / s;
            z = 0.25 * s;
        }
        // q and -q are the same rotation; w >= 0 keeps the angle in [0, π].
        let (w, v) = if w < 0.0 {
            (-w, Vec3::new(-x, -y, -z))
        } else {
            (w, Vec3::new(x, y, z))
        };
        let vn = v.norm();
        if vn < 1e-12 {
            return RotVec(v * (2.0 / w));
        }
        let angle = 2.0 * math::atan2(vn, w);
        RotVec(v * (angle / vn))
    }

    /// Rotation applying `other` first, then `self`.
    pub fn compose(&self, other: &RotVec) -> RotVec {
        RotVec::from_matrix(&(self.to_matrix() * other.to_matrix()))
    }

    pub fn inverse(&self) -> RotVec {
        RotVec(-self.0)
    }

    /// The rotation `d` with `d ∘ from = to`, i.e. `to ∘ from⁻¹`.
    pub fn difference(to: &RotVec, from: &RotVec) -> RotVec {
        RotVec::from_matrix(&(to.to_matrix() * from.to_matrix().transpose()))
    }

    pub fn is_finite(&self) -> bool {
        self.0.is_finite()
    }
}

/// Rigid motion stored as translation + canonical rotation vector.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Transform {
    pub translation: Vec3,
    pub rotation: RotVec,
}

impl Transform {
    pub const IDENTITY: Transform = Transform {
        translation: Vec3::ZERO,
        rotation: RotVec::IDENTITY,
    };

    pub fn new(translation: Vec3, rotation: RotVec) -> Self {
        Transform {
            translation,
            rotation: rotation.canonical(),
        }
    }

    pub fn from_translation(t: Vec3) -> Self {
        Transform::new(t, RotVec::IDENTITY)
    }

    pub fn from_rotation(r: RotVec) -> Self {
        Transform::new(Vec3::ZERO, r)
    }

    /// `self ∘ other`: applies `other` first, then `self`.
    pub fn compose(&self, other: &Transform) -> Transform {
        self.to_frame().compose(&other.to_frame()).to_transform()
    }

    pub fn invert(&self) -> Transform {
        self.to_frame().inverse().to_transform()
    }

    /// Rotates `p`, then translates it.
    pub fn apply(&self, p: Vec3) -> Vec3 {
        self.rotation.to_matrix() * p + self.translation
    }

    pub fn to_frame(&self) -> Frame {
        Frame {
            rotation: self.rotation.to_matrix(),
            origin: self.translation,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.translation.is_finite() && self.rotation.is_finite()
    }
}

/// Rigid motion with an explicit rotation matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub rotation: Mat3,
    pub origin: Vec3,
}

impl Frame {
    pub const IDENTITY: Frame = Frame {
        rotation: Mat3::IDENTITY,
        origin: Vec3::ZERO,
    };

    pub fn new(rotation: Mat3, origin: Vec3) -> Self {
        Frame { rotation, origin }
    }

    pub fn from_translation(t: Vec3) -> Self {
        Frame::new(Mat3::IDENTITY, t)
    }

    pub fn compose(&self, other: &Frame) -> Frame {
        Frame {
            rotation: self.rotation * other.rotation,
            origin: self.rotation * other.origin + self.origin,
        }
    }

    pub fn inverse(&self) -> Frame {
        let rt = self.rotation.transpose();
        Frame {
            rotation: rt,
            origin: -(rt * self.origin),
        }
    }

    #[inline]
    pub fn apply(&self, p: Vec3) -> Vec3 {
        self.rotation * p + self.origin
    }

    pub fn rotvec(&self) -> RotVec {
        RotVec::from_matrix(&self.rotation)
    }

    pub fn to_transform(&self) -> Transform {
        Transform {
            translation: self.origin,
            rotation: self.rotvec(),
        }
    }
}

impl From<Transform> for Frame {
    fn from(t: Transform) -> Frame {
        t.to_frame()
    }
}

pub fn compose(a: &Transform, b: &Transform) -> Transform {
    a.compose(b)
}

pub fn apply(t: &Transform, p: Vec3) -> Vec3 {
    t.apply(p)
}

pub fn rotvec_to_matrix(r: &RotVec) -> Mat3 {
    r.to_matrix()
}

/// Symmetric Chamfer distance:
/// `½(mean_a min_b ‖a−b‖ + mean_b min_a ‖a−b‖)`.
///
/// For two singletons this is exactly the Euclidean distance.
pub fn chamfer(a: &[Vec3], b: &[Vec3]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    let directed = |from: &[Vec3], to: &[Vec3]| -> f64 {
        let sum: f64 = from
            .iter()
            .map(|p| {
                to.iter()
                    .map(|q| p.distance(*q))
                    .fold(f64::INFINITY, f64::min)
            })
            .sum();
        sum / from.len() as f64
    };
    Ok(0.5 * (directed(a, b) + directed(b, a)))
}

/// Chamfer distance between two single points, i.e. their Euclidean distance.
#[inline]
pub fn point_distance(a: Vec3, b: Vec3) -> f64 {
    a.distance(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn mat_close(a: &Mat3, b: &Mat3, tol: f64) -> bool {
        (0..3).all(|i| (0..3).all(|j| close(a.0[i][j], b.0[i][j], tol)))
    }

    #[test]
    fn identity_composition() {
        let t = Transform::new(Vec3::new(1.0, -2.0, 0.5), RotVec::new(0.1, 0.2, -0.3));
        let c = Transform::IDENTITY.compose(&t);
        assert!(close(c.translation.distance(t.translation), 0.0, 1e-15));
        assert!(close((c.rotation.0 - t.rotation.0).norm(), 0.0, 1e-12));
    }

    #[test]
    fn quarter_turns_make_half_turn() {
        let q = Transform::from_rotation(RotVec::new(0.0, 0.0, core::f64::consts::FRAC_PI_2));
        let h = q.compose(&q);
        let want = RotVec::new(0.0, 0.0, core::f64::consts::PI).to_matrix();
        assert!(mat_close(&h.rotation.to_matrix(), &want, 1e-12));
        assert!(h.rotation.angle() <= core::f64::consts::PI + 1e-15);
    }

    #[test]
    fn apply_quarter_turn() {
        let q = Transform::from_rotation(RotVec::new(0.0, 0.0, core::f64::consts::FRAC_PI_2));
        let p = q.apply(Vec3::X);
        assert!(p.distance(Vec3::Y) < 1e-12);
        assert_eq!(Transform::IDENTITY.apply(Vec3::new(1.0, 2.0, 3.0)), Vec3::new(1.0, 2.0, 3.0));
    }

    #[test]
    fn rodrigues_special_cases() {
        assert_eq!(RotVec::IDENTITY.to_matrix(), Mat3::IDENTITY);
        let half = RotVec::new(0.0, 0.0, core::f64::consts::PI).to_matrix();
        let want = Mat3([[-1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0]]);
        assert!(mat_close(&half, &want, 1e-15));
    }

    #[test]
    fn tiny_angles_use_series() {
        let r = RotVec::new(1e-11, -2e-11, 3e-12);
        let m = r.to_matrix();
        assert!((m.determinant() - 1.0).abs() < 1e-12);
        let back = RotVec::from_matrix(&m);
        assert!((back.0 - r.0).norm() < 1e-20);
    }

    #[test]
    fn log_near_half_turn() {
        let axis = Vec3::new(1.0, 2.0, -0.5).normalized();
        for angle in [core::f64::consts::PI - 1e-9, core::f64::consts::PI, 3.0] {
            let r = RotVec(axis * angle);
            let back = RotVec::from_matrix(&r.to_matrix());
            assert!(mat_close(&back.to_matrix(), &r.to_matrix(), 1e-9));
            assert!(back.angle() <= core::f64::consts::PI + 1e-12);
        }
    }

    #[test]
    fn canonical_wraps_angle() {
        let r = RotVec::new(0.0, 0.0, 1.5 * core::f64::consts::PI).canonical();
        assert!(close(r.0.z, -0.5 * core::f64::consts::PI, 1e-12));
        let big = RotVec::new(0.0, 7.0, 0.0).canonical();
        assert!(mat_close(&big.to_matrix(), &RotVec::new(0.0, 7.0, 0.0).to_matrix(), 1e-12));
    }

    #[test]
    fn chamfer_examples() {
        let a = [Vec3::ZERO];
        let b = [Vec3::new(3.0, 4.0, 0.0)];
        assert_eq!(chamfer(&a, &b).unwrap(), 5.0);
        let s = [Vec3::X, Vec3::Y, Vec3::new(0.5, 0.5, 2.0)];
        assert_eq!(chamfer(&s, &s).unwrap(), 0.0);
        let two = [Vec3::ZERO, Vec3::X];
        assert_eq!(chamfer(&two, &a).unwrap(), 0.25);
        assert_eq!(chamfer(&[], &a), Err(Error::EmptyPointSet));
        assert_eq!(chamfer(&a, &[]), Err(Error::EmptyPointSet));
    }

    #[test]
    fn rotation_difference_recovers_left_factor() {
        let from = RotVec::new(0.3, -0.2, 0.9);
        let d = RotVec::new(-0.1, 0.4, 0.05);
        let to = d.compose(&from);
        let got = RotVec::difference(&to, &from);
        assert!((got.0 - d.0).norm() < 1e-12);
    }
}
