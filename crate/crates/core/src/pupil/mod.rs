//! Pupil and iris localization: Hough circles, least-squares circle fitting
//! with longest-line scanning, and OCEM arc scoring.

mod circle_fit;
mod detect;
mod hough;
mod lls;
mod ocem;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgcore::{GrayImage, Point, Rect};

pub use circle_fit::{fit_circle_least_squares, FIT_CONDITION_LIMIT};
pub use detect::{detect_pupil, detect_pupil_ocem, refine_circle, PupilConfig};
pub use hough::hough_circles;
pub use lls::{longest_line_scan, longest_run_in};
pub use ocem::{
    limbus_vertical_edges, ocem_score, EdgeThreshold, LimbusEdges, EDGE_CUTOFF_FRACTION, OCEM_ARC_HALF_ANGLE_DEG,
    OCEM_SAMPLES_PER_ARC,
};

/// A grayscale crop around one eye plus where it came from.
#[derive(Clone, Debug)]
pub struct EyeWindow {
    pub source: GrayImage,
    /// Top-left of the crop in frame coordinates.
    pub origin: (usize, usize),
    /// Width of the detected face, used for radius priors.
    pub face_width: f64,
}

impl EyeWindow {
    pub fn new(source: GrayImage, origin: (usize, usize), face_width: f64) -> Result<Self> {
        if !(face_width > 0.0) {
            return Err(Error::InvalidParameter(format!("face width must be positive, got {face_width}")));
        }
        Ok(Self { source, origin, face_width })
    }

    pub fn from_frame(frame: &GrayImage, rect: Rect, face_width: f64) -> Result<Self> {
        Self::new(frame.crop(rect)?, (rect.x, rect.y), face_width)
    }

    pub fn rect(&self) -> Rect {
        Rect { x: self.origin.0, y: self.origin.1, w: self.source.width(), h: self.source.height() }
    }

    pub fn to_local(&self, p: Point) -> Point {
        Point::new(p.x - self.origin.0 as f64, p.y - self.origin.1 as f64)
    }

    pub fn to_frame(&self, p: Point) -> Point {
        Point::new(p.x + self.origin.0 as f64, p.y + self.origin.1 as f64)
    }

    /// Whether a frame point lies on the window's pixel grid.
    pub fn contains(&self, p: Point) -> bool {
        let l = self.to_local(p);
        l.x >= 0.0 && l.y >= 0.0 && l.x <= (self.source.width() - 1) as f64 && l.y <= (self.source.height() - 1) as f64
    }
}

/// Candidate circle; coordinates are frame coordinates unless a function
/// says otherwise.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircleHypothesis {
    pub cx: f64,
    pub cy: f64,
    pub r: f64,
    pub score: f64,
}

impl CircleHypothesis {
    pub fn center(&self) -> Point {
        Point::new(self.cx, self.cy)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PupilMethod {
    Hough,
    Lls,
    Ocem,
}

impl std::str::FromStr for PupilMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hough" => Ok(Self::Hough),
            "lls" => Ok(Self::Lls),
            "ocem" => Ok(Self::Ocem),
            other => Err(Error::InvalidParameter(format!("unknown pupil method {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PupilEstimate {
    pub center: Point,
    pub radius: f64,
    /// 0..=1
    pub confidence: f64,
    pub method: PupilMethod,
}
