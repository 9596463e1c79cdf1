//! C ABI for the linecloud detector.
//!
//! Objects are opaque handles created by `lc_*_new`/`lc_*_load`/`lc_detect`
//! and released with the matching `lc_*_free`. Every fallible call returns
//! an [`LcStatus`]; on failure, [`lc_last_error_message`] describes the error
//! on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use linecloud::config::PipelineConfig;
use linecloud::geometry::PointCloud;
use linecloud::io::{load_cloud, save_result, CloudFormat, ResultFormat};
use linecloud::pipeline::{run_pipeline, DetectionResult};
use linecloud::Error;

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LcStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidArgument = 2,
    EmptyInput = 3,
    NonFinite = 4,
    ParseError = 5,
    IoError = 6,
    PipelineError = 7,
    OutOfRange = 8,
    Panic = 9,
}

pub struct LcConfig(PipelineConfig);

pub struct LcCloud(PointCloud);

pub struct LcResult(DetectionResult);

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LcSegment {
    pub a: [f64; 3],
    pub b: [f64; 3],
    pub plane_id: usize,
    pub contour_id: usize,
    pub length: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LcPlane {
    pub id: usize,
    pub normal: [f64; 3],
    pub centroid: [f64; 3],
    pub scale: f64,
    pub member_count: usize,
    /// 1 if post-processing kept the plane's segments.
    pub kept: i32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LcTiming {
    pub segmentation_s: f64,
    pub line_detection_s: f64,
    pub postprocess_s: f64,
    pub total_s: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: impl Into<String>) {
    let msg = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn status_of(err: &Error) -> LcStatus {
    match err {
        Error::EmptyInput => LcStatus::EmptyInput,
        Error::NonFinite { .. } => LcStatus::NonFinite,
        Error::InvalidParameter(_) => LcStatus::InvalidArgument,
        Error::Parse { .. } | Error::UnsupportedProperty { .. } | Error::Format { .. } | Error::Json(_) => {
            LcStatus::ParseError
        }
        Error::Io { .. } => LcStatus::IoError,
        Error::Stage { .. } => LcStatus::PipelineError,
    }
}

/// Runs `f`, converting errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), (LcStatus, String)>) -> LcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            LcStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            LcStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (LcStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (LcStatus, String) {
    (LcStatus::NullArgument, format!("`{what}` is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (LcStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (LcStatus::InvalidArgument, format!("`{what}` is not valid UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, (LcStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

/// Message for the last failed call on this thread. Empty after a success.
/// The pointer stays valid until the next `lc_*` call on this thread.
#[no_mangle]
pub extern "C" fn lc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn lc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// New configuration with default parameters.
#[no_mangle]
pub extern "C" fn lc_config_new() -> *mut LcConfig {
    Box::into_raw(Box::new(LcConfig(PipelineConfig::default())))
}

/// Sets a parameter by its field name, e.g. `("theta_deg", "20")`.
///
/// # Safety
/// `config` must come from [`lc_config_new`]; `key` and `value` must be
/// NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn lc_config_set(config: *mut LcConfig, key: *const c_char, value: *const c_char) -> LcStatus {
    guard(|| {
        let cfg = config.as_mut().ok_or_else(|| null("config"))?;
        let (key, value) = (str_arg(key, "key")?, str_arg(value, "value")?);
        let mut updated = cfg.0.clone();
        updated.set(key, value).map_err(lib_err)?;
        updated.validate().map_err(lib_err)?;
        cfg.0 = updated;
        Ok(())
    })
}

/// # Safety
/// `config` must come from [`lc_config_new`] or be null.
#[no_mangle]
pub unsafe extern "C" fn lc_config_free(config: *mut LcConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Copies `count` points from `xyz` (`3 * count` doubles, interleaved).
///
/// # Safety
/// `xyz` must point to `3 * count` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lc_cloud_from_xyz(xyz: *const f64, count: usize, out: *mut *mut LcCloud) -> LcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        if xyz.is_null() && count > 0 {
            return Err(null("xyz"));
        }
        let flat = if count == 0 { &[][..] } else { std::slice::from_raw_parts(xyz, 3 * count) };
        let coords: Vec<[f64; 3]> = flat.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
        let cloud = PointCloud::from_xyz(&coords);
        cloud.validate().map_err(lib_err)?;
        *out = Box::into_raw(Box::new(LcCloud(cloud)));
        Ok(())
    })
}

/// Loads a cloud file. `format` is `"auto"`, `"xyz"`, `"pts"`, `"ply"` or
/// null for auto-detection.
///
/// # Safety
/// `path` and, if non-null, `format` must be NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lc_cloud_load(path: *const c_char, format: *const c_char, out: *mut *mut LcCloud) -> LcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let path = str_arg(path, "path")?;
        let format: CloudFormat = if format.is_null() {
            CloudFormat::Auto
        } else {
            str_arg(format, "format")?.parse().map_err(lib_err)?
        };
        let cloud = load_cloud(Path::new(path), format).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(LcCloud(cloud)));
        Ok(())
    })
}

/// Number of points, 0 for a null handle.
///
/// # Safety
/// `cloud` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn lc_cloud_len(cloud: *const LcCloud) -> usize {
    cloud.as_ref().map_or(0, |c| c.0.len())
}

/// # Safety
/// `cloud` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn lc_cloud_free(cloud: *mut LcCloud) {
    if !cloud.is_null() {
        drop(Box::from_raw(cloud));
    }
}

/// Runs the detector. A null `config` uses the defaults.
///
/// # Safety
/// `cloud` must be live, `config` live or null, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lc_detect(cloud: *const LcCloud, config: *const LcConfig, out: *mut *mut LcResult) -> LcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let cloud = handle(cloud, "cloud")?;
        let default = PipelineConfig::default();
        let cfg = config.as_ref().map_or(&default, |c| &c.0);
        let result = run_pipeline(&cloud.0, cfg).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(LcResult(result)));
        Ok(())
    })
}

/// # Safety
/// `result` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn lc_result_segment_count(result: *const LcResult) -> usize {
    result.as_ref().map_or(0, |r| r.0.segments.len())
}

/// # Safety
/// `result` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lc_result_segment(result: *const LcResult, index: usize, out: *mut LcSegment) -> LcStatus {
    guard(|| {
        let r = handle(result, "result")?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let s = r.0.segments.get(index).ok_or_else(|| {
            (
                LcStatus::OutOfRange,
                format!("segment {index} out of range ({} segments)", r.0.segments.len()),
            )
        })?;
        *out = LcSegment {
            a: s.a,
            b: s.b,
            plane_id: s.plane_id,
            contour_id: s.contour_id,
            length: s.length,
        };
        Ok(())
    })
}

/// # Safety
/// `result` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn lc_result_plane_count(result: *const LcResult) -> usize {
    result.as_ref().map_or(0, |r| r.0.planes.len())
}

/// # Safety
/// `result` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lc_result_plane(result: *const LcResult, index: usize, out: *mut LcPlane) -> LcStatus {
    guard(|| {
        let r = handle(result, "result")?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let p = r.0.planes.get(index).ok_or_else(|| {
            (
                LcStatus::OutOfRange,
                format!("plane {index} out of range ({} planes)", r.0.planes.len()),
            )
        })?;
        *out = LcPlane {
            id: p.id,
            normal: p.normal,
            centroid: p.centroid,
            scale: p.scale,
            member_count: p.member_count,
            kept: p.kept as i32,
        };
        Ok(())
    })
}

/// # Safety
/// `result` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lc_result_timing(result: *const LcResult, out: *mut LcTiming) -> LcStatus {
    guard(|| {
        let t = handle(result, "result")?.0.timing;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = LcTiming {
            segmentation_s: t.segmentation_s,
            line_detection_s: t.line_detection_s,
            postprocess_s: t.postprocess_s,
            total_s: t.total_s,
        };
        Ok(())
    })
}

/// Writes the result as `"json"`, `"obj"` or `"csv"`.
///
/// # Safety
/// `result` must be live; `path` and `format` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn lc_result_save(result: *const LcResult, path: *const c_char, format: *const c_char) -> LcStatus {
    guard(|| {
        let r = handle(result, "result")?;
        let path = str_arg(path, "path")?;
        let format: ResultFormat = str_arg(format, "format")?.parse().map_err(lib_err)?;
        save_result(&r.0, Path::new(path), format).map_err(lib_err)
    })
}

/// # Safety
/// `result` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn lc_result_free(result: *mut LcResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}
