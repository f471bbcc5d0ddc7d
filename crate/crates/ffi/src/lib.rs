//! C ABI for gazekit.
//!
//! Objects are opaque handles created by `gk_*_new`/`gk_*_load` functions and
//! released with the matching `gk_*_free`. Every fallible function returns a
//! [`GkStatus`]; on failure a message is available from
//! [`gk_last_error_message`] on the same thread until the next failing call.
//! Handles are not thread-safe: a session must not be used from two threads at
//! once.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::sync::Arc;

use gazekit::cascade::{detect_multiscale, CascadeModel, DEFAULT_MIN_NEIGHBORS, DEFAULT_SCALE_FACTOR};
use gazekit::gaze::{CalibrationFile, GazeSession, MapperMode, Pipeline, RegionFinder, ScreenSpec, SessionConfig};
use gazekit::harness::load_image;
use gazekit::imgcore::{to_grayscale, ColorImage};
use gazekit::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GkStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidImage = 3,
    OutOfBounds = 4,
    Degenerate = 5,
    Model = 6,
    Uncalibrated = 7,
    Format = 8,
    Io = 9,
    /// The call succeeded but produced no result, e.g. no face in the frame.
    NoResult = 10,
    /// The output buffer was too small; the required count was still written.
    BufferTooSmall = 11,
    Panic = 12,
}

impl From<&Error> for GkStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidImage(_) => GkStatus::InvalidImage,
            Error::InvalidParameter(_) => GkStatus::InvalidArgument,
            Error::OutOfBounds(_) => GkStatus::OutOfBounds,
            Error::Degenerate(_) => GkStatus::Degenerate,
            Error::Model(_) => GkStatus::Model,
            Error::Uncalibrated => GkStatus::Uncalibrated,
            Error::Format(_) | Error::Json(_) | Error::Csv(_) => GkStatus::Format,
            Error::Io(_) => GkStatus::Io,
        }
    }
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct GkPoint {
    pub x: f64,
    pub y: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct GkRect {
    pub x: u32,
    pub y: u32,
    pub width: u32,
    pub height: u32,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GkSessionConfig {
    /// 1 or 2.
    pub pipeline: u8,
    pub screen_width: f64,
    pub screen_height: f64,
    pub mm_per_px: f64,
    /// Decay weight in (0, 1].
    pub alpha: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct GkEstimate {
    /// Reported estimate (smoothed for pipeline 1).
    pub point: GkPoint,
    /// Estimate from this frame alone.
    pub raw: GkPoint,
    pub confidence: f64,
}

pub struct GkImage {
    inner: ColorImage,
}

pub struct GkCascade {
    inner: Arc<CascadeModel>,
}

pub struct GkSession {
    inner: GazeSession,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: impl Into<String>) {
    let c = CString::new(msg.into().replace('\0', " ")).expect("interior nuls removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Fail(GkStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(GkStatus::from(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(GkStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> GkStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GkStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            GkStatus::Panic
        }
    }
}

unsafe fn path_arg(path: *const c_char) -> Result<PathBuf, Fail> {
    if path.is_null() {
        return Err(null("path"));
    }
    let s = unsafe { CStr::from_ptr(path) }
        .to_str()
        .map_err(|_| Fail(GkStatus::InvalidArgument, "path is not UTF-8".into()))?;
    Ok(PathBuf::from(s))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output handle"));
    }
    unsafe { *out = Box::into_raw(Box::new(value)) };
    Ok(())
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(unsafe { Box::from_raw(p) });
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn gk_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failing call on this thread, or NULL. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn gk_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Copies `len` bytes of interleaved RGB8 pixels into a new image.
///
/// # Safety
/// `rgb` must point to `len` readable bytes and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gk_image_from_rgb(
    width: u32,
    height: u32,
    rgb: *const u8,
    len: usize,
    out: *mut *mut GkImage,
) -> GkStatus {
    guard(|| {
        if rgb.is_null() {
            return Err(null("rgb"));
        }
        let data = unsafe { std::slice::from_raw_parts(rgb, len) }.to_vec();
        let inner = ColorImage::from_vec(width as usize, height as usize, data)?;
        unsafe { put(out, GkImage { inner }) }
    })
}

/// Loads a PNG or PNM file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gk_image_load(path: *const c_char, out: *mut *mut GkImage) -> GkStatus {
    guard(|| {
        let inner = load_image(unsafe { path_arg(path) }?)?;
        unsafe { put(out, GkImage { inner }) }
    })
}

/// Writes the image size. Either output may be NULL.
///
/// # Safety
/// `image` must be a live handle; non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn gk_image_size(image: *const GkImage, width: *mut u32, height: *mut u32) -> GkStatus {
    guard(|| {
        let img = unsafe { image.as_ref() }.ok_or_else(|| null("image"))?;
        if let Some(w) = unsafe { width.as_mut() } {
            *w = img.inner.width() as u32;
        }
        if let Some(h) = unsafe { height.as_mut() } {
            *h = img.inner.height() as u32;
        }
        Ok(())
    })
}

/// # Safety
/// `image` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gk_image_free(image: *mut GkImage) {
    unsafe { free(image) }
}

/// Loads a Haar cascade in the OpenCV XML format.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gk_cascade_load(path: *const c_char, out: *mut *mut GkCascade) -> GkStatus {
    guard(|| {
        let model = CascadeModel::from_file(unsafe { path_arg(path) }?)?;
        unsafe { put(out, GkCascade { inner: Arc::new(model) }) }
    })
}

/// # Safety
/// `cascade` must be NULL or a handle not yet freed. Sessions created with it
/// keep their own reference, so it may be freed before them.
#[no_mangle]
pub unsafe extern "C" fn gk_cascade_free(cascade: *mut GkCascade) {
    unsafe { free(cascade) }
}

/// Runs multi-scale detection with the default scale factor and neighbor
/// count. Writes up to `capacity` rectangles, strongest first, and the total
/// number found to `count`. Returns `BufferTooSmall` when truncated.
///
/// # Safety
/// Handles must be live; `rects` must have room for `capacity` entries (it may
/// be NULL when `capacity` is 0) and `count` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gk_detect(
    cascade: *const GkCascade,
    image: *const GkImage,
    min_size: u32,
    rects: *mut GkRect,
    capacity: usize,
    count: *mut usize,
) -> GkStatus {
    guard(|| {
        let cascade = unsafe { cascade.as_ref() }.ok_or_else(|| null("cascade"))?;
        let image = unsafe { image.as_ref() }.ok_or_else(|| null("image"))?;
        let count = unsafe { count.as_mut() }.ok_or_else(|| null("count"))?;
        if rects.is_null() && capacity > 0 {
            return Err(null("rects"));
        }
        let gray = to_grayscale(&image.inner);
        let dets =
            detect_multiscale(&cascade.inner, &gray, DEFAULT_SCALE_FACTOR, DEFAULT_MIN_NEIGHBORS, min_size as usize)?;
        *count = dets.len();
        for (i, d) in dets.iter().take(capacity).enumerate() {
            let r = d.rect;
            let g = GkRect { x: r.x as u32, y: r.y as u32, width: r.w as u32, height: r.h as u32 };
            unsafe { *rects.add(i) = g };
        }
        if dets.len() > capacity {
            return Err(Fail(GkStatus::BufferTooSmall, format!("{} detections, room for {capacity}", dets.len())));
        }
        Ok(())
    })
}

/// Creates a tracking session. With `face` NULL the skin-color finder locates
/// the face and eyes; `eye` may only be set together with `face`.
///
/// # Safety
/// `config` must be readable, cascade handles live or NULL, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gk_session_new(
    config: *const GkSessionConfig,
    face: *const GkCascade,
    eye: *const GkCascade,
    out: *mut *mut GkSession,
) -> GkStatus {
    guard(|| {
        let c = unsafe { config.as_ref() }.ok_or_else(|| null("config"))?;
        let pipeline = Pipeline::try_from(c.pipeline).map_err(|m| Fail(GkStatus::InvalidArgument, m))?;
        let screen = ScreenSpec::new(c.screen_width, c.screen_height, c.mm_per_px)?;
        let finder = match (unsafe { face.as_ref() }, unsafe { eye.as_ref() }) {
            (None, None) => RegionFinder::skin_only(),
            (None, Some(_)) => {
                return Err(Fail(GkStatus::InvalidArgument, "eye cascade requires a face cascade".into()))
            }
            (Some(f), e) => RegionFinder::with_cascades(Arc::clone(&f.inner), e.map(|e| Arc::clone(&e.inner))),
        };
        let cfg = SessionConfig { screen, pipeline, alpha: c.alpha, ..SessionConfig::default() };
        let inner = GazeSession::new(cfg, finder)?;
        unsafe { put(out, GkSession { inner }) }
    })
}

/// # Safety
/// `session` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gk_session_free(session: *mut GkSession) {
    unsafe { free(session) }
}

/// Number of calibration targets (five).
///
/// # Safety
/// `session` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn gk_session_target_count(session: *const GkSession) -> usize {
    unsafe { session.as_ref() }.map_or(0, |s| s.inner.layout().len())
}

/// Screen position of calibration target `index`.
///
/// # Safety
/// `session` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gk_session_target(session: *const GkSession, index: usize, out: *mut GkPoint) -> GkStatus {
    guard(|| {
        let s = unsafe { session.as_ref() }.ok_or_else(|| null("session"))?;
        let out = unsafe { out.as_mut() }.ok_or_else(|| null("out"))?;
        let p = s
            .inner
            .layout()
            .get(index)
            .ok_or_else(|| Fail(GkStatus::InvalidArgument, format!("target index {index} out of range")))?;
        *out = GkPoint { x: p.x, y: p.y };
        Ok(())
    })
}

/// Records the frames captured while the user looked at target `index`.
///
/// # Safety
/// `session` must be live; `frames` must hold `n` live image handles.
#[no_mangle]
pub unsafe extern "C" fn gk_session_calibrate_point(
    session: *mut GkSession,
    index: usize,
    frames: *const *const GkImage,
    n: usize,
) -> GkStatus {
    guard(|| {
        let s = unsafe { session.as_mut() }.ok_or_else(|| null("session"))?;
        if frames.is_null() || n == 0 {
            return Err(Fail(GkStatus::InvalidArgument, "at least one frame is required".into()));
        }
        let handles = unsafe { std::slice::from_raw_parts(frames, n) };
        let images = handles
            .iter()
            .map(|h| unsafe { h.as_ref() }.map(|i| i.inner.clone()).ok_or_else(|| null("frame")))
            .collect::<Result<Vec<_>, _>>()?;
        s.inner.calibrate_point(index, &images)?;
        Ok(())
    })
}

/// Fits the mapper once every target has been recorded.
///
/// # Safety
/// `session` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn gk_session_calibrate_done(session: *mut GkSession) -> GkStatus {
    guard(|| {
        let s = unsafe { session.as_mut() }.ok_or_else(|| null("session"))?;
        s.inner.calibrate_done()?;
        Ok(())
    })
}

/// Processes one frame. Returns `NoResult` when no eyes were found.
///
/// # Safety
/// Handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gk_session_track(
    session: *mut GkSession,
    image: *const GkImage,
    out: *mut GkEstimate,
) -> GkStatus {
    guard(|| {
        let s = unsafe { session.as_mut() }.ok_or_else(|| null("session"))?;
        let image = unsafe { image.as_ref() }.ok_or_else(|| null("image"))?;
        let out = unsafe { out.as_mut() }.ok_or_else(|| null("out"))?;
        let r = s.inner.track(&image.inner)?;
        match (r.estimate, r.instantaneous) {
            (Some(e), Some(raw)) => {
                *out = GkEstimate {
                    point: GkPoint { x: e.x, y: e.y },
                    raw: GkPoint { x: raw.x, y: raw.y },
                    confidence: r.confidence,
                };
                Ok(())
            }
            _ => Err(Fail(GkStatus::NoResult, "no face or pupil found in frame".into())),
        }
    })
}

/// Writes the fitted calibration as a JSON calibration file.
///
/// # Safety
/// `session` must be live and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn gk_session_save_calibration(session: *const GkSession, path: *const c_char) -> GkStatus {
    guard(|| {
        let s = unsafe { session.as_ref() }.ok_or_else(|| null("session"))?;
        let path = unsafe { path_arg(path) }?;
        let mapper = s.inner.mapper().ok_or(Error::Uncalibrated)?;
        let set = s.inner.calibration_set()?;
        CalibrationFile::new(mapper, s.inner.layout().to_vec(), set.pairs, set.rest_index).save(path)?;
        Ok(())
    })
}

/// Installs a saved calibration. Its mapping mode must match the session's
/// pipeline (affine for 1, ratio for 2).
///
/// # Safety
/// `session` must be live and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn gk_session_load_calibration(session: *mut GkSession, path: *const c_char) -> GkStatus {
    guard(|| {
        let s = unsafe { session.as_mut() }.ok_or_else(|| null("session"))?;
        let file = CalibrationFile::load(unsafe { path_arg(path) }?)?;
        let expected = s.inner.config().pipeline.mapper_mode();
        if file.mode != expected {
            let name = |m: MapperMode| format!("{m:?}").to_lowercase();
            return Err(Fail(
                GkStatus::InvalidArgument,
                format!("calibration is {}, session expects {}", name(file.mode), name(expected)),
            ));
        }
        s.inner.install_mapper(file.mapper())?;
        Ok(())
    })
}
