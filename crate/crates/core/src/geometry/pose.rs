use std::ops::Mul;

use serde::{Deserialize, Serialize};

use super::Vec3;
use crate::error::{Error, Result};

const ORTHONORMAL_TOL: f64 = 1e-9;

/// Row-major 3×3 matrix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mat3(pub [[f64; 3]; 3]);

impl Mat3 {
    pub const IDENTITY: Mat3 = Mat3([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    /// Rotation by `yaw` radians about +z.
    pub fn from_yaw(yaw: f64) -> Mat3 {
        let (s, c) = yaw.sin_cos();
        Mat3([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    }

    /// Rotation from yaw (z), pitch (y), roll (x), applied as Rz·Ry·Rx.
    pub fn from_euler_zyx(yaw: f64, pitch: f64, roll: f64) -> Mat3 {
        let (sr, cr) = roll.sin_cos();
        let (sp, cp) = pitch.sin_cos();
        let rx = Mat3([[1.0, 0.0, 0.0], [0.0, cr, -sr], [0.0, sr, cr]]);
        let ry = Mat3([[cp, 0.0, sp], [0.0, 1.0, 0.0], [-sp, 0.0, cp]]);
        Mat3::from_yaw(yaw) * ry * rx
    }

    pub fn transpose(&self) -> Mat3 {
        let m = &self.0;
        Mat3([[m[0][0], m[1][0], m[2][0]], [m[0][1], m[1][1], m[2][1]], [m[0][2], m[1][2], m[2][2]]])
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    pub fn column(&self, c: usize) -> Vec3 {
        Vec3::new(self.0[0][c], self.0[1][c], self.0[2][c])
    }

    pub fn max_abs_diff(&self, o: &Mat3) -> f64 {
        let mut d: f64 = 0.0;
        for r in 0..3 {
            for c in 0..3 {
                d = d.max((self.0[r][c] - o.0[r][c]).abs());
            }
        }
        d
    }

    /// True when the matrix belongs to SO(3) within `ORTHONORMAL_TOL`.
    pub fn is_rotation(&self) -> bool {
        self.0.iter().flatten().all(|v| v.is_finite())
            && (*self * self.transpose()).max_abs_diff(&Mat3::IDENTITY) <= ORTHONORMAL_TOL
            && (self.determinant() - 1.0).abs() <= ORTHONORMAL_TOL
    }
}

impl Mul for Mat3 {
    type Output = Mat3;
    fn mul(self, o: Mat3) -> Mat3 {
        let mut out = [[0.0; 3]; 3];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = (0..3).map(|k| self.0[r][k] * o.0[k][c]).sum();
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

/// Rigid transform in SE(3): `world = rotation · local + translation`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    rotation: Mat3,
    translation: Vec3,
}

impl Default for Pose {
    fn default() -> Self {
        Pose::IDENTITY
    }
}

impl Pose {
    pub const IDENTITY: Pose = Pose { rotation: Mat3::IDENTITY, translation: Vec3::ZERO };

    pub fn new(rotation: Mat3, translation: Vec3) -> Result<Pose> {
        if !rotation.is_rotation() {
            return Err(Error::invalid("pose rotation is not orthonormal with determinant +1"));
        }
        if !translation.is_finite() {
            return Err(Error::invalid("pose translation is not finite"));
        }
        Ok(Pose { rotation, translation })
    }

    pub fn from_translation(translation: Vec3) -> Pose {
        Pose { rotation: Mat3::IDENTITY, translation }
    }

    /// Yaw about +z followed by a translation; the only pose family the scene generator emits.
    pub fn from_yaw_translation(yaw: f64, translation: Vec3) -> Pose {
        Pose { rotation: Mat3::from_yaw(yaw), translation }
    }

    pub fn rotation(&self) -> &Mat3 {
        &self.rotation
    }

    pub fn translation(&self) -> Vec3 {
        self.translation
    }

    /// Heading of the local +x axis projected onto the ground plane.
    pub fn yaw(&self) -> f64 {
        let x = self.rotation.column(0);
        x.y.atan2(x.x)
    }

    #[inline]
    pub fn transform_point(&self, p: Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }

    #[inline]
    pub fn transform_vector(&self, v: Vec3) -> Vec3 {
        self.rotation * v
    }

    #[inline]
    pub fn inverse_transform_point(&self, p: Vec3) -> Vec3 {
        self.rotation.transpose() * (p - self.translation)
    }

    #[inline]
    pub fn inverse_transform_vector(&self, v: Vec3) -> Vec3 {
        self.rotation.transpose() * v
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose { rotation: self.rotation * other.rotation, translation: self.transform_point(other.translation) }
    }

    pub fn inverse(&self) -> Pose {
        let rt = self.rotation.transpose();
        Pose { rotation: rt, translation: -(rt * self.translation) }
    }

    /// Row-major 3×4 `[R | t]`.
    pub fn to_matrix_3x4(&self) -> [f64; 12] {
        let r = &self.rotation.0;
        let t = self.translation;
        [r[0][0], r[0][1], r[0][2], t.x, r[1][0], r[1][1], r[1][2], t.y, r[2][0], r[2][1], r[2][2], t.z]
    }

    pub fn from_matrix_3x4(m: &[f64; 12]) -> Result<Pose> {
        Pose::new(Mat3([[m[0], m[1], m[2]], [m[4], m[5], m[6]], [m[8], m[9], m[10]]]), Vec3::new(m[3], m[7], m[11]))
    }

    /// Rotation of the pose with its rows re-orthonormalised; for poses parsed
    /// from text at limited precision.
    pub fn from_matrix_3x4_lenient(m: &[f64; 12], tol: f64) -> Result<Pose> {
        let rows = [Vec3::new(m[0], m[1], m[2]), Vec3::new(m[4], m[5], m[6]), Vec3::new(m[8], m[9], m[10])];
        let raw = Mat3([rows[0].to_array(), rows[1].to_array(), rows[2].to_array()]);
        if (raw * raw.transpose()).max_abs_diff(&Mat3::IDENTITY) > tol || (raw.determinant() - 1.0).abs() > tol {
            return Err(Error::invalid("pose matrix is not a rotation"));
        }
        let translation = Vec3::new(m[3], m[7], m[11]);
        if raw.is_rotation() {
            return Pose::new(raw, translation);
        }
        let r0 = rows[0].normalized().ok_or_else(|| Error::invalid("degenerate pose row"))?;
        let r1 = (rows[1] - r0 * r0.dot(rows[1])).normalized().ok_or_else(|| Error::invalid("degenerate pose row"))?;
        let r2 = r0.cross(r1);
        Pose::new(Mat3([r0.to_array(), r1.to_array(), r2.to_array()]), translation)
    }
}

/// Wraps an angle into (−π, π].
pub fn normalize_angle(a: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let mut r = a.rem_euclid(TAU);
    if r > PI {
        r -= TAU;
    }
    r
}
