//! Ground-truth boxes and the KITTI-style label line codec.
//!
//! Labels are expressed in the LiDAR (sensor) frame, not KITTI's camera frame:
//! `location` is the box centre in sensor coordinates and `rotation_y` is the
//! yaw about the sensor's vertical axis. Camera-only fields are written as
//! fixed sentinels (`truncated 0.00`, `occluded 0`, `alpha -10`, 2D box `-1`).

use serde::{Deserialize, Serialize};

use crate::error::{Error, LabelError, LabelErrorKind, Result};
use crate::geometry::{normalize_angle, Mat3, Vec3};
use crate::scene::{box_corners, ObjectId, Scene};
use crate::sensor::ScanResult;

/// Oriented 3D box with a class and an optional detection score.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledBox {
    pub class_label: String,
    pub center: Vec3,
    /// Extent along the box's local x axis.
    pub length: f64,
    /// Extent along the box's local y axis.
    pub width: f64,
    pub height: f64,
    /// Radians in (−π, π], about +z.
    pub yaw: f64,
    pub score: Option<f64>,
}

impl LabeledBox {
    pub fn validate(&self) -> Result<()> {
        if self.class_label.is_empty() || self.class_label.chars().any(char::is_whitespace) {
            return Err(Error::invalid(format!("class label {:?} must be non-empty without whitespace", self.class_label)));
        }
        for (name, v) in [("length", self.length), ("width", self.width), ("height", self.height)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("box {name} {v} must be finite and positive")));
            }
        }
        if !self.center.is_finite() || !self.yaw.is_finite() || self.score.is_some_and(|s| !s.is_finite()) {
            return Err(Error::invalid("box fields must be finite"));
        }
        Ok(())
    }

    pub fn volume(&self) -> f64 {
        self.length * self.width * self.height
    }

    /// The 8 corners in the box's frame of reference.
    pub fn corners(&self) -> [Vec3; 8] {
        let h = Vec3::new(self.length / 2.0, self.width / 2.0, self.height / 2.0);
        let rot = Mat3::from_yaw(self.yaw);
        box_corners(crate::geometry::Aabb::new(-h, h)).map(|c| rot * c + self.center)
    }

    /// Whether `p` lies inside the box grown by `margin` on every side.
    pub fn contains(&self, p: Vec3, margin: f64) -> bool {
        let local = Mat3::from_yaw(self.yaw).transpose() * (p - self.center);
        local.x.abs() <= self.length / 2.0 + margin
            && local.y.abs() <= self.width / 2.0 + margin
            && local.z.abs() <= self.height / 2.0 + margin
    }
}

/// Ground truth for one scanned object.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GtBox {
    pub object_id: ObjectId,
    pub point_count: u32,
    pub bbox: LabeledBox,
}

/// Boxes of every object with at least `min_points` returns in `result`,
/// expressed in the sensor frame and sorted by object id.
pub fn extract_annotations(scene: &Scene, result: &ScanResult, min_points: u32) -> Result<Vec<GtBox>> {
    if min_points == 0 {
        return Err(Error::invalid("min_points must be at least 1"));
    }
    let sensor = &result.sensor_pose;
    let mut out = Vec::new();
    for (&id, &count) in &result.hits_per_object {
        let obj = scene
            .object(id)
            .ok_or_else(|| Error::Consistency(format!("scan reports hits on object {id}, which the scene lacks")))?;
        if count < min_points {
            continue;
        }
        let local = obj.primitive.local_bounds();
        let pose = obj.pose();
        let ext = local.extent();
        let center = sensor.inverse_transform_point(pose.transform_point(local.center()));
        let heading = sensor.inverse_transform_vector(pose.transform_vector(Vec3::X));
        out.push(GtBox {
            object_id: id,
            point_count: count,
            bbox: LabeledBox {
                class_label: obj.class_label.clone(),
                center,
                length: ext.x,
                width: ext.y,
                height: ext.z,
                yaw: normalize_angle(heading.y.atan2(heading.x)),
                score: None,
            },
        });
    }
    Ok(out)
}

#[inline]
fn fmt6(v: f64) -> String {
    // `+ 0.0` folds negative zero so it never prints as "-0.000000".
    format!("{:.6}", v + 0.0)
}

/// One label line: `type truncated occluded alpha x1 y1 x2 y2 h w l x y z ry [score]`.
pub fn format_kitti_line(b: &LabeledBox) -> Result<String> {
    b.validate()?;
    let mut line = format!(
        "{} 0.00 0 -10.000000 -1 -1 -1 -1 {} {} {} {} {} {} {}",
        b.class_label,
        fmt6(b.height),
        fmt6(b.width),
        fmt6(b.length),
        fmt6(b.center.x),
        fmt6(b.center.y),
        fmt6(b.center.z),
        fmt6(b.yaw),
    );
    if let Some(s) = b.score {
        line.push(' ');
        line.push_str(&fmt6(s));
    }
    Ok(line)
}

/// Parses a 15- or 16-field label line. Errors report line 1; use
/// [`parse_label_file`] for file-relative line numbers.
pub fn parse_kitti_line(line: &str) -> Result<LabeledBox, LabelError> {
    parse_line_at(line, 1)
}

fn parse_line_at(line: &str, line_no: usize) -> Result<LabeledBox, LabelError> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    let err = |field: usize, kind: LabelErrorKind| LabelError { line: line_no, field, kind };
    if fields.len() != 15 && fields.len() != 16 {
        return Err(err(fields.len(), LabelErrorKind::FieldCount(fields.len())));
    }
    let mut nums = [0.0f64; 16];
    for (i, f) in fields.iter().enumerate().skip(1) {
        let v: f64 = f.parse().map_err(|_| err(i, LabelErrorKind::NotNumeric(f.to_string())))?;
        if !v.is_finite() {
            return Err(err(i, LabelErrorKind::NonFinite(f.to_string())));
        }
        nums[i] = v;
    }
    if let Some(i) = (8..=10).find(|&i| nums[i] <= 0.0) {
        return Err(err(i, LabelErrorKind::NonPositiveDimension(nums[i])));
    }
    Ok(LabeledBox {
        class_label: fields[0].to_string(),
        center: Vec3::new(nums[11], nums[12], nums[13]),
        length: nums[10],
        width: nums[9],
        height: nums[8],
        yaw: normalize_angle(nums[14]),
        score: (fields.len() == 16).then_some(nums[15]),
    })
}

/// Parses a whole label file; blank lines are skipped.
pub fn parse_label_file(text: &str) -> Result<Vec<LabeledBox>, LabelError> {
    text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()).map(|(i, l)| parse_line_at(l, i + 1)).collect()
}

/// Newline-terminated label file contents.
pub fn format_label_file<'a, I: IntoIterator<Item = &'a LabeledBox>>(boxes: I) -> Result<String> {
    let mut out = String::new();
    for b in boxes {
        out.push_str(&format_kitti_line(b)?);
        out.push('\n');
    }
    Ok(out)
}
