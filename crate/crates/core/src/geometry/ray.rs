use super::{Pose, Vec3};
use crate::error::{Error, Result};

const UNIT_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ray {
    pub origin: Vec3,
    pub direction: Vec3,
}

impl Ray {
    /// Builds a ray, rejecting non-finite origins and non-unit directions.
    pub fn new(origin: Vec3, direction: Vec3) -> Result<Ray> {
        if !origin.is_finite() || !direction.is_finite() {
            return Err(Error::invalid("ray components must be finite"));
        }
        if (direction.norm() - 1.0).abs() > UNIT_TOL {
            return Err(Error::invalid(format!("ray direction norm {} is not 1", direction.norm())));
        }
        Ok(Ray { origin, direction })
    }

    /// Builds a ray from any non-zero direction, normalising it.
    pub fn towards(origin: Vec3, direction: Vec3) -> Result<Ray> {
        let d = direction.normalized().ok_or_else(|| Error::invalid("ray direction must be non-zero"))?;
        Ray::new(origin, d)
    }

    #[inline]
    pub fn at(&self, t: f64) -> Vec3 {
        self.origin + self.direction * t
    }

    #[inline]
    pub(crate) fn inv_direction(&self) -> Vec3 {
        Vec3::new(1.0 / self.direction.x, 1.0 / self.direction.y, 1.0 / self.direction.z)
    }
}

/// Unit beam direction for a spherical (azimuth, elevation) pair:
/// `[cos φ cos θ, cos φ sin θ, sin φ]`.
pub fn ray_direction(azimuth: f64, elevation: f64) -> Result<Vec3> {
    if !azimuth.is_finite() || !elevation.is_finite() {
        return Err(Error::invalid("scan angles must be finite"));
    }
    Ok(ray_direction_unchecked(azimuth, elevation))
}

#[inline]
pub(crate) fn ray_direction_unchecked(azimuth: f64, elevation: f64) -> Vec3 {
    let (st, ct) = azimuth.sin_cos();
    let (sp, cp) = elevation.sin_cos();
    Vec3::new(cp * ct, cp * st, sp)
}

/// Expresses a world ray in the local frame of an object placed at `object_pose`.
/// Ray parameters are preserved: `local.at(t)` maps to `world.at(t)` under the pose.
#[inline]
pub fn to_local_frame(ray: &Ray, object_pose: &Pose) -> Ray {
    Ray {
        origin: object_pose.inverse_transform_point(ray.origin),
        direction: object_pose.inverse_transform_vector(ray.direction),
    }
}
