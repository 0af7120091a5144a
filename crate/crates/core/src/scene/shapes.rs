use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::{MeshBuilder, Primitive, Vec3};

/// Procedural geometry template for an object class. Every template is centred
/// on its local origin and spans `length × width × height` along x, y, z.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeKind {
    Box,
    /// Upright cylinder with diameter `min(length, width)`.
    Cylinder,
    /// Sphere with diameter `min(length, width, height)`.
    Sphere,
    /// Top slab on four legs.
    Table,
    /// Seat on four legs with a backrest on the −x edge.
    Chair,
    /// Seat block with a backrest along the +y edge.
    Sofa,
    /// Four ascending steps along +x.
    Stairs,
}

impl ShapeKind {
    pub fn build(self, length: f64, width: f64, height: f64) -> Result<Primitive> {
        let h = Vec3::new(length / 2.0, width / 2.0, height / 2.0);
        let cuboid = |b: &mut MeshBuilder, min: [f64; 3], max: [f64; 3]| {
            b.add_cuboid(Vec3::from_array(min), Vec3::from_array(max));
        };
        let mut b = MeshBuilder::default();
        match self {
            ShapeKind::Box => return Ok(Primitive::Box { half_extents: h }),
            ShapeKind::Cylinder => {
                return Ok(Primitive::Cylinder { radius: h.x.min(h.y), half_height: h.z });
            }
            ShapeKind::Sphere => return Ok(Primitive::Sphere { radius: h.x.min(h.y).min(h.z) }),
            ShapeKind::Table => {
                let top = (0.06 * height).max(0.02);
                let leg = (0.08 * length.min(width)).clamp(0.02, 0.08);
                cuboid(&mut b, [-h.x, -h.y, h.z - top], [h.x, h.y, h.z]);
                add_legs(&mut b, h, leg, h.z - top);
            }
            ShapeKind::Chair => {
                let seat_z = -h.z + 0.45 * height;
                let seat = (0.05 * height).max(0.02);
                let leg = (0.1 * length.min(width)).clamp(0.02, 0.05);
                add_legs(&mut b, h, leg, seat_z);
                cuboid(&mut b, [-h.x, -h.y, seat_z], [h.x, h.y, seat_z + seat]);
                cuboid(&mut b, [-h.x, -h.y, seat_z + seat], [-h.x + leg, h.y, h.z]);
            }
            ShapeKind::Sofa => {
                let back = 0.25 * width;
                cuboid(&mut b, [-h.x, -h.y, -h.z], [h.x, h.y, -h.z + 0.5 * height]);
                cuboid(&mut b, [-h.x, h.y - back, -h.z + 0.5 * height], [h.x, h.y, h.z]);
            }
            ShapeKind::Stairs => {
                const STEPS: usize = 4;
                for k in 0..STEPS {
                    let x0 = -h.x + length * k as f64 / STEPS as f64;
                    let z1 = -h.z + height * (k + 1) as f64 / STEPS as f64;
                    cuboid(&mut b, [x0, -h.y, -h.z], [h.x, h.y, z1]);
                }
            }
        }
        Ok(Primitive::Mesh(b.build()?))
    }
}

fn add_legs(b: &mut MeshBuilder, h: Vec3, leg: f64, top_z: f64) {
    for (sx, sy) in [(-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0), (1.0, 1.0)] {
        let x0 = if sx < 0.0 { -h.x } else { h.x - leg };
        let y0 = if sy < 0.0 { -h.y } else { h.y - leg };
        b.add_cuboid(Vec3::new(x0, y0, -h.z), Vec3::new(x0 + leg, y0 + leg, top_z));
    }
}
