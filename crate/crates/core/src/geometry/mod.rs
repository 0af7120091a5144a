//! Vectors, rigid poses, rays, primitives and analytic ray casting.

mod bvh;
mod cast;
mod pose;
mod primitive;
mod ray;
mod vector;

pub use bvh::{Bvh, MAX_LEAF_SIZE};
pub use cast::{nearest_hit, Hit, SceneIndex, SurfaceId};
pub use pose::{normalize_angle, Mat3, Pose};
pub use primitive::{intersect_primitive, LocalHit, MeshBuilder, Primitive, TriangleMesh, T_MIN};
pub(crate) use ray::ray_direction_unchecked;
pub use ray::{ray_direction, to_local_frame, Ray};
pub use vector::{Aabb, Vec3};
