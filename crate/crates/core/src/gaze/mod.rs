//! From eye features to screen coordinates: smoothing, calibration mappers,
//! the two tracking pipelines and accuracy metrics.

mod calibration_file;
mod mapper;
mod metrics;
mod pipeline;
mod session;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgcore::Point;

pub use calibration_file::{CalibrationFile, CALIBRATION_FILE_VERSION};
pub use mapper::{calibrate, estimate_gaze, CalibrationPair, CalibrationSet, GazeMapper, MapperKind, MapperMode};
pub use metrics::{evaluate_grid, gaze_error, grid_cell, CellStats, EvalRecord, GridReport};
pub use pipeline::{
    extract_features, eye_corners, EyeFeatures, FrameFeatures, RegionFinder, CORNER_MARGIN, EYE_PAD_X, EYE_PAD_Y,
};
pub use session::{GazeSession, Pipeline, SessionConfig, TrackResult};

pub const DEFAULT_ALPHA: f64 = 0.1;
pub const DEFAULT_MM_PER_PX: f64 = 0.22;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScreenSpec {
    pub width_px: f64,
    pub height_px: f64,
    pub mm_per_px: f64,
}

impl ScreenSpec {
    pub fn new(width_px: f64, height_px: f64, mm_per_px: f64) -> Result<Self> {
        if !(width_px > 0.0 && height_px > 0.0 && mm_per_px > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "screen {width_px}x{height_px} at {mm_per_px} mm/px is not positive"
            )));
        }
        Ok(Self { width_px, height_px, mm_per_px })
    }

    pub fn center(&self) -> Point {
        Point::new(self.width_px / 2.0, self.height_px / 2.0)
    }

    pub fn clamp(&self, p: Point) -> Point {
        Point::new(p.x.clamp(0.0, self.width_px), p.y.clamp(0.0, self.height_px))
    }

    pub fn contains(&self, p: Point) -> bool {
        (0.0..=self.width_px).contains(&p.x) && (0.0..=self.height_px).contains(&p.y)
    }

    /// Screen center followed by the four corners inset 10% on each axis.
    pub fn five_point_layout(&self) -> Vec<Point> {
        let (w, h) = (self.width_px, self.height_px);
        vec![
            self.center(),
            Point::new(0.1 * w, 0.1 * h),
            Point::new(0.9 * w, 0.1 * h),
            Point::new(0.1 * w, 0.9 * h),
            Point::new(0.9 * w, 0.9 * h),
        ]
    }
}

impl Default for ScreenSpec {
    fn default() -> Self {
        Self { width_px: 1280.0, height_px: 720.0, mm_per_px: DEFAULT_MM_PER_PX }
    }
}

/// Exponentially smoothed gaze estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayState {
    pub estimate: Point,
    pub alpha: f64,
}

impl DecayState {
    pub fn new(estimate: Point, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidParameter(format!("alpha must be in (0, 1], got {alpha}")));
        }
        if !estimate.is_finite() {
            return Err(Error::InvalidParameter("decay estimate must be finite".into()));
        }
        Ok(Self { estimate, alpha })
    }
}

/// `E_{t+1} = α·E_current + (1 − α)·E_t`, per axis.
pub fn decay_update(s: DecayState, e_current: Point) -> DecayState {
    let a = s.alpha;
    DecayState {
        estimate: Point::new(a * e_current.x + (1.0 - a) * s.estimate.x, a * e_current.y + (1.0 - a) * s.estimate.y),
        alpha: a,
    }
}

/// Pupil position in the frame spanned by the two eye corners: `u` is the
/// projection onto the corner axis and `v` the signed perpendicular offset,
/// both divided by the corner distance.
pub fn normalized_pupil_position(pupil: Point, inner: Point, outer: Point) -> Result<(f64, f64)> {
    let axis = outer - inner;
    let len2 = axis.x * axis.x + axis.y * axis.y;
    if !(len2 > 0.0) {
        return Err(Error::Degenerate("eye corners coincide".into()));
    }
    let d = pupil - inner;
    let u = (d.x * axis.x + d.y * axis.y) / len2;
    let v = (axis.x * d.y - axis.y * d.x) / len2;
    Ok((u, v))
}
