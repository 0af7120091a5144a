//! Spinning LiDAR model: scan patterns, parallel ray casting, intensity and noise.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ray_direction_unchecked, Hit, Pose, Ray, SceneIndex, SurfaceId, Vec3, T_MIN};
use crate::rng::RayStreams;
use crate::scene::ObjectId;

/// Keys missing from a config file take the `Default` values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensorConfig {
    pub channels: u32,
    /// `[min, max]` beam elevation, radians.
    pub vertical_fov: [f64; 2],
    /// Radians between consecutive firings of a channel.
    pub azimuth_step: f64,
    /// Meters.
    pub max_range: f64,
    /// Standard deviation of Gaussian range noise, meters.
    pub range_noise_sigma: f64,
    pub dropout_probability: f64,
    /// Range falloff `α` in `1 / (1 + α t²)`, 1/m².
    pub intensity_falloff_alpha: f64,
}

impl Default for SensorConfig {
    /// 32 channels over ±22.5°, 0.1° azimuth resolution, 50 m range.
    fn default() -> Self {
        SensorConfig {
            channels: 32,
            vertical_fov: [(-22.5f64).to_radians(), 22.5f64.to_radians()],
            azimuth_step: TAU / 3600.0,
            max_range: 50.0,
            range_noise_sigma: 0.005,
            dropout_probability: 0.0,
            intensity_falloff_alpha: 0.002,
        }
    }
}

impl SensorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.channels == 0 {
            return Err(Error::invalid("sensor needs at least one channel"));
        }
        let [lo, hi] = self.vertical_fov;
        let half_pi = std::f64::consts::FRAC_PI_2;
        if !(lo.is_finite() && hi.is_finite() && lo >= -half_pi && hi <= half_pi) {
            return Err(Error::invalid(format!("vertical FOV [{lo}, {hi}] must lie within [-π/2, π/2]")));
        }
        if lo > hi || (lo == hi && self.channels > 1) {
            return Err(Error::invalid(format!("vertical FOV [{lo}, {hi}] is degenerate for {} channels", self.channels)));
        }
        if !(self.azimuth_step > 0.0 && self.azimuth_step < TAU) {
            return Err(Error::invalid(format!("azimuth step {} must lie in (0, 2π)", self.azimuth_step)));
        }
        if !(self.max_range > 0.0 && self.max_range.is_finite()) {
            return Err(Error::invalid("max range must be positive"));
        }
        if !(self.range_noise_sigma >= 0.0 && self.range_noise_sigma.is_finite()) {
            return Err(Error::invalid("range noise sigma must be non-negative"));
        }
        if !(0.0..1.0).contains(&self.dropout_probability) {
            return Err(Error::invalid("dropout probability must lie in [0, 1)"));
        }
        if !(self.intensity_falloff_alpha >= 0.0 && self.intensity_falloff_alpha.is_finite()) {
            return Err(Error::invalid("intensity falloff must be non-negative"));
        }
        Ok(())
    }

    /// Firings per channel per revolution: `ceil(2π / azimuth_step)`.
    pub fn azimuth_count(&self) -> usize {
        let exact = TAU / self.azimuth_step;
        let nearest = exact.round();
        // Steps given as 2π/n must yield n, not n + 1 from round-off.
        if (exact - nearest).abs() <= 1e-9 * nearest {
            nearest as usize
        } else {
            exact.ceil() as usize
        }
    }

    pub fn rays_per_frame(&self) -> usize {
        self.channels as usize * self.azimuth_count()
    }

    /// Elevation of `channel`; a single channel sits at the FOV midpoint.
    pub fn channel_elevation(&self, channel: u32) -> f64 {
        let [lo, hi] = self.vertical_fov;
        if self.channels == 1 {
            0.5 * (lo + hi)
        } else if channel + 1 == self.channels {
            hi
        } else {
            lo + channel as f64 * (hi - lo) / (self.channels - 1) as f64
        }
    }
}

/// Ordered `(azimuth, elevation)` firing angles of one revolution, channel-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ScanPattern {
    angles: Vec<(f64, f64)>,
    channels: u32,
    azimuth_count: usize,
}

impl ScanPattern {
    pub fn angles(&self) -> &[(f64, f64)] {
        &self.angles
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    pub fn channels(&self) -> u32 {
        self.channels
    }

    pub fn azimuth_count(&self) -> usize {
        self.azimuth_count
    }
}

pub fn build_scan_pattern(config: &SensorConfig) -> Result<ScanPattern> {
    config.validate()?;
    let n_az = config.azimuth_count();
    let mut angles = Vec::with_capacity(config.channels as usize * n_az);
    for ch in 0..config.channels {
        let el = config.channel_elevation(ch);
        angles.extend((0..n_az).map(|k| (k as f64 * config.azimuth_step, el)));
    }
    Ok(ScanPattern { angles, channels: config.channels, azimuth_count: n_az })
}

/// One LiDAR return, in the layout of a KITTI velodyne record.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f32,
    pub y: f32,
    pub z: f32,
    pub intensity: f32,
}

impl Point {
    pub fn position(&self) -> Vec3 {
        Vec3::new(self.x as f64, self.y as f64, self.z as f64)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Point>,
    /// Index into the scan pattern of the ray that produced each point; empty for loaded clouds.
    pub ray_indices: Vec<u32>,
    pub timestamp_ns: u64,
}

impl PointCloud {
    pub fn from_points(points: Vec<Point>) -> Self {
        PointCloud { points, ray_indices: Vec::new(), timestamp_ns: 0 }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScanResult {
    pub cloud: PointCloud,
    /// Surface struck by the ray behind each point.
    pub point_sources: Vec<SurfaceId>,
    /// Emitted points per object (after dropout).
    pub hits_per_object: BTreeMap<ObjectId, u32>,
    pub shell_hits: u32,
    /// Rays that hit a surface within range, before dropout.
    pub returns_before_dropout: u32,
    pub dropped: u32,
    pub sensor_pose: Pose,
    pub seed: u64,
    pub frame_id: u64,
}

/// Lambertian-style return strength:
/// `clamp(reflectivity · max(0, −n·d) / (1 + α t²), 0, 1)`.
pub fn shade_intensity(hit: &Hit, ray: &Ray, reflectivity: f64, config: &SensorConfig) -> f64 {
    intensity_for(hit.normal, ray.direction, hit.t, reflectivity, config.intensity_falloff_alpha)
}

#[inline]
fn intensity_for(normal: Vec3, direction: Vec3, t: f64, reflectivity: f64, alpha: f64) -> f64 {
    let cos = (-normal.dot(direction)).max(0.0);
    (reflectivity * cos / (1.0 + alpha * t * t)).clamp(0.0, 1.0)
}

/// Dropout, then Gaussian range noise. Draw order per call: one uniform for
/// dropout, one standard normal for noise. The noisy range is clamped to
/// `[T_MIN, max_range + 3σ]`.
pub fn apply_noise<R: Rng + ?Sized>(clean_range: f64, config: &SensorConfig, rng: &mut R) -> Option<f64> {
    let u: f64 = rng.random();
    let z: f64 = rng.sample(StandardNormal);
    if u < config.dropout_probability {
        return None;
    }
    let sigma = config.range_noise_sigma;
    if sigma == 0.0 {
        return Some(clean_range);
    }
    Some((clean_range + sigma * z).clamp(T_MIN, config.max_range + 3.0 * sigma))
}

struct RayReturn {
    point: Point,
    surface: SurfaceId,
}

enum RayOutcome {
    Miss,
    Dropped,
    Return(RayReturn),
}

/// Casts every ray of `pattern` from `sensor_pose` through the scene.
///
/// Rays are evaluated on the current rayon pool; each writes only its own
/// output slot and draws from its own random stream, so the result does not
/// depend on the pool size. Points are in the sensor frame, in pattern order.
pub fn simulate_scan(
    scene: &SceneIndex,
    sensor_pose: &Pose,
    pattern: &ScanPattern,
    config: &SensorConfig,
    seed: u64,
    frame_id: u64,
) -> Result<ScanResult> {
    config.validate()?;
    if pattern.len() != config.rays_per_frame() {
        return Err(Error::Precondition(format!(
            "scan pattern has {} rays but the sensor config implies {}",
            pattern.len(),
            config.rays_per_frame()
        )));
    }
    let streams = RayStreams::new(seed, frame_id);
    let origin = sensor_pose.translation();

    let outcomes: Vec<RayOutcome> = pattern
        .angles
        .par_iter()
        .enumerate()
        .with_min_len(256)
        .map(|(i, &(az, el))| {
            let local_dir = ray_direction_unchecked(az, el);
            let ray = Ray { origin, direction: sensor_pose.transform_vector(local_dir) };
            let Some((hit, slot)) = scene.cast(&ray, config.max_range) else {
                return RayOutcome::Miss;
            };
            let mut rng = streams.stream(i as u64);
            let Some(range) = apply_noise(hit.t, config, &mut rng) else {
                return RayOutcome::Dropped;
            };
            let reflectivity = scene.reflectivity_of_slot(hit.surface, slot);
            let intensity = shade_intensity(&hit, &ray, reflectivity, config);
            let p = local_dir * range;
            RayOutcome::Return(RayReturn {
                point: Point { x: p.x as f32, y: p.y as f32, z: p.z as f32, intensity: intensity as f32 },
                surface: hit.surface,
            })
        })
        .collect();

    let mut cloud = PointCloud::default();
    let mut point_sources = Vec::new();
    let mut hits_per_object = BTreeMap::new();
    let (mut shell_hits, mut dropped, mut returns) = (0u32, 0u32, 0u32);
    for (i, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            RayOutcome::Miss => {}
            RayOutcome::Dropped => {
                returns += 1;
                dropped += 1;
            }
            RayOutcome::Return(r) => {
                returns += 1;
                match r.surface {
                    SurfaceId::Shell => shell_hits += 1,
                    SurfaceId::Object(id) => *hits_per_object.entry(id).or_insert(0) += 1,
                }
                cloud.points.push(r.point);
                cloud.ray_indices.push(i as u32);
                point_sources.push(r.surface);
            }
        }
    }
    Ok(ScanResult {
        cloud,
        point_sources,
        hits_per_object,
        shell_hits,
        returns_before_dropout: returns,
        dropped,
        sensor_pose: *sensor_pose,
        seed,
        frame_id,
    })
}
