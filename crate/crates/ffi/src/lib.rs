//! C ABI over the `roomcast` core.
//!
//! Every fallible call returns an [`RcStatus`]. On failure a message for the
//! calling thread is available from [`rc_last_error`] until the next failing
//! call on that thread. Handles are opaque and must be released with their
//! `_free` function; passing null to a `_free` function is a no-op.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use roomcast::annotate::{extract_annotations, format_label_file, LabeledBox};
use roomcast::eval::{iou_3d, iou_bev};
use roomcast::geometry::{Pose, SceneIndex, Vec3};
use roomcast::scene::{generate_scene, Scene, SceneConfig};
use roomcast::sensor::{build_scan_pattern, simulate_scan, PointCloud, ScanResult, SensorConfig};
use roomcast::storage::{read_cloud, read_scene, write_cloud, write_scene};
use roomcast::Error;

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Precondition = 3,
    Consistency = 4,
    Taxonomy = 5,
    Parse = 6,
    Io = 7,
    CorruptCloud = 8,
    Conflict = 9,
    Panic = 10,
}

/// A generated or loaded scene together with its ray-casting index.
pub struct RcScene {
    scene: Scene,
    index: SceneIndex,
}

/// A simulated scan (cloud plus per-point provenance) or a cloud read from disk.
pub struct RcCloud {
    cloud: PointCloud,
    scan: Option<ScanResult>,
}

/// Sensor pose in the room frame: position in meters, yaw in radians about +z.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct RcPose {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub yaw: f64,
}

/// Subset of the sensor model exposed over C. Zero fields fall back to defaults
/// except the noise and dropout terms, which are taken as given.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct RcSensor {
    pub channels: u32,
    pub azimuth_step: f64,
    pub max_range: f64,
    pub range_noise_sigma: f64,
    pub dropout_probability: f64,
}

/// One point, same layout as a velodyne record.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RcPoint {
    pub x: f32,
    pub y: f32,
    pub z: f32,
    pub intensity: f32,
}

/// Oriented box for IoU queries. Dimensions: length along local x, width along local y.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct RcBox {
    pub cx: f64,
    pub cy: f64,
    pub cz: f64,
    pub length: f64,
    pub width: f64,
    pub height: f64,
    pub yaw: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> RcStatus {
    match e {
        Error::InvalidArgument(_) => RcStatus::InvalidArgument,
        Error::Precondition(_) => RcStatus::Precondition,
        Error::Consistency(_) => RcStatus::Consistency,
        Error::Taxonomy { .. } => RcStatus::Taxonomy,
        Error::Label(_) | Error::Parse { .. } => RcStatus::Parse,
        Error::Io { .. } => RcStatus::Io,
        Error::CorruptCloud { .. } | Error::NonFinitePoints { .. } => RcStatus::CorruptCloud,
        Error::Conflict { .. } => RcStatus::Conflict,
    }
}

struct Fail(RcStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(RcStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> RcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RcStatus::Ok,
        Ok(Err(Fail(code, msg))) => {
            set_error(msg);
            code
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            RcStatus::Panic
        }
    }
}

unsafe fn path_arg(p: *const c_char, what: &str) -> Result<PathBuf, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    let s = CStr::from_ptr(p).to_str().map_err(|_| Fail(RcStatus::InvalidArgument, format!("{what} is not UTF-8")))?;
    Ok(PathBuf::from(s))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut T, v: T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(v);
    Ok(())
}

fn scene_handle(scene: Scene) -> Result<*mut RcScene, Fail> {
    let index = SceneIndex::build(&scene)?;
    Ok(Box::into_raw(Box::new(RcScene { scene, index })))
}

/// Message for the most recent failure on this thread, or null. Valid until
/// the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn rc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Defaults of the sensor model.
#[no_mangle]
pub extern "C" fn rc_sensor_default() -> RcSensor {
    let d = SensorConfig::default();
    RcSensor {
        channels: d.channels,
        azimuth_step: d.azimuth_step,
        max_range: d.max_range,
        range_noise_sigma: d.range_noise_sigma,
        dropout_probability: d.dropout_probability,
    }
}

/// Generates a scene with the default configuration.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn rc_scene_generate(seed: u64, out: *mut *mut RcScene) -> RcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let (scene, _) = generate_scene(&SceneConfig::default(), seed)?;
        put(out, scene_handle(scene)?, "out")
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rc_scene_load(path: *const c_char, out: *mut *mut RcScene) -> RcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let scene = read_scene(&path_arg(path, "path")?)?;
        put(out, scene_handle(scene)?, "out")
    })
}

/// # Safety
/// `scene` must come from this library; `path` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn rc_scene_save(scene: *const RcScene, path: *const c_char) -> RcStatus {
    guard(|| {
        let s = deref(scene, "scene")?;
        write_scene(&s.scene, &path_arg(path, "path")?)?;
        Ok(())
    })
}

/// Number of placed objects; 0 for a null handle.
///
/// # Safety
/// `scene` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn rc_scene_object_count(scene: *const RcScene) -> usize {
    scene.as_ref().map_or(0, |s| s.scene.objects.len())
}

/// # Safety
/// `scene` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rc_scene_free(scene: *mut RcScene) {
    if !scene.is_null() {
        drop(Box::from_raw(scene));
    }
}

fn sensor_config(s: &RcSensor) -> SensorConfig {
    let d = SensorConfig::default();
    SensorConfig {
        channels: if s.channels == 0 { d.channels } else { s.channels },
        azimuth_step: if s.azimuth_step == 0.0 { d.azimuth_step } else { s.azimuth_step },
        max_range: if s.max_range == 0.0 { d.max_range } else { s.max_range },
        range_noise_sigma: s.range_noise_sigma,
        dropout_probability: s.dropout_probability,
        ..d
    }
}

/// Simulates one sweep. `sensor` may be null for the defaults.
///
/// # Safety
/// Pointers must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rc_scan(
    scene: *const RcScene,
    pose: RcPose,
    sensor: *const RcSensor,
    seed: u64,
    frame_id: u64,
    out: *mut *mut RcCloud,
) -> RcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let s = deref(scene, "scene")?;
        let cfg = sensor.as_ref().map_or_else(SensorConfig::default, sensor_config);
        let pattern = build_scan_pattern(&cfg)?;
        if ![pose.x, pose.y, pose.z, pose.yaw].iter().all(|v| v.is_finite()) {
            return Err(Fail(RcStatus::InvalidArgument, "pose has non-finite values".into()));
        }
        let pose = Pose::from_yaw_translation(pose.yaw, Vec3::new(pose.x, pose.y, pose.z));
        let scan = simulate_scan(&s.index, &pose, &pattern, &cfg, seed, frame_id)?;
        put(out, Box::into_raw(Box::new(RcCloud { cloud: scan.cloud.clone(), scan: Some(scan) })), "out")
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rc_cloud_read(path: *const c_char, out: *mut *mut RcCloud) -> RcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let cloud = read_cloud(&path_arg(path, "path")?)?;
        put(out, Box::into_raw(Box::new(RcCloud { cloud, scan: None })), "out")
    })
}

/// # Safety
/// `cloud` must come from this library; `path` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn rc_cloud_write(cloud: *const RcCloud, path: *const c_char) -> RcStatus {
    guard(|| {
        let c = deref(cloud, "cloud")?;
        write_cloud(&c.cloud, &path_arg(path, "path")?)?;
        Ok(())
    })
}

/// Point count; 0 for a null handle.
///
/// # Safety
/// `cloud` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn rc_cloud_len(cloud: *const RcCloud) -> usize {
    cloud.as_ref().map_or(0, |c| c.cloud.len())
}

/// Borrowed view of the points, valid until the cloud is freed. Null for a null
/// handle; may be dangling-but-aligned when the cloud is empty.
///
/// # Safety
/// `cloud` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn rc_cloud_points(cloud: *const RcCloud) -> *const RcPoint {
    cloud.as_ref().map_or(ptr::null(), |c| c.cloud.points.as_ptr().cast())
}

/// # Safety
/// `cloud` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rc_cloud_free(cloud: *mut RcCloud) {
    if !cloud.is_null() {
        drop(Box::from_raw(cloud));
    }
}

/// Label file text (KITTI layout, sensor frame) for objects with at least
/// `min_points` hits. The string must be released with [`rc_string_free`].
/// Fails with `Precondition` for clouds read from disk.
///
/// # Safety
/// `scene` must be the scene the cloud was scanned from; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rc_scan_labels(
    scene: *const RcScene,
    cloud: *const RcCloud,
    min_points: u32,
    out: *mut *mut c_char,
) -> RcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let s = deref(scene, "scene")?;
        let c = deref(cloud, "cloud")?;
        let scan = c.scan.as_ref().ok_or_else(|| Fail(RcStatus::Precondition, "cloud was not produced by rc_scan".into()))?;
        let gts = extract_annotations(&s.scene, scan, min_points)?;
        let text = format_label_file(gts.iter().map(|g| &g.bbox))?;
        let c = CString::new(text).map_err(|_| Fail(RcStatus::Panic, "label text contains NUL".into()))?;
        put(out, c.into_raw(), "out")
    })
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

fn to_box(b: &RcBox) -> LabeledBox {
    LabeledBox {
        class_label: "Box".into(),
        center: Vec3::new(b.cx, b.cy, b.cz),
        length: b.length,
        width: b.width,
        height: b.height,
        yaw: b.yaw,
        score: None,
    }
}

/// Bird's-eye-view IoU of two boxes.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rc_iou_bev(a: RcBox, b: RcBox, out: *mut f64) -> RcStatus {
    guard(|| put(out, iou_bev(&to_box(&a), &to_box(&b))?, "out"))
}

/// 3D IoU of two yaw-only boxes.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rc_iou_3d(a: RcBox, b: RcBox, out: *mut f64) -> RcStatus {
    guard(|| put(out, iou_3d(&to_box(&a), &to_box(&b))?, "out"))
}
