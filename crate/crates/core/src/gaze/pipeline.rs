use std::sync::Arc;

use crate::cascade::{detect_in_region, detect_multiscale, CascadeModel, DEFAULT_MIN_NEIGHBORS, DEFAULT_SCALE_FACTOR};
use crate::imgcore::{
    corners_from_response, harris_response, ColorImage, GrayImage, Point, Rect, HARRIS_K, HARRIS_WINDOW_SIGMA,
};
use crate::pupil::{detect_pupil, detect_pupil_ocem, EyeWindow, PupilConfig, PupilEstimate, PupilMethod};
use crate::skinmodel::{locate_face, FaceRegion, SkinRange};

/// Horizontal and vertical padding of an eye rect, as fractions of its size.
pub const EYE_PAD_X: f64 = 0.2;
pub const EYE_PAD_Y: f64 = 0.3;
/// Lateral fraction of the padded eye window searched for each corner.
pub const CORNER_MARGIN: f64 = 0.25;
/// Harris candidates below this fraction of the window's peak response are ignored.
const CORNER_RESPONSE_FRACTION: f64 = 0.05;

/// Face and eye localization: Haar cascades when configured, the skin-color
/// model otherwise.
#[derive(Clone, Debug, Default)]
pub struct RegionFinder {
    pub face_model: Option<Arc<CascadeModel>>,
    pub eye_model: Option<Arc<CascadeModel>>,
    pub skin: SkinRange,
}

impl RegionFinder {
    pub fn skin_only() -> Self {
        Self::default()
    }

    pub fn with_cascades(face: Arc<CascadeModel>, eye: Option<Arc<CascadeModel>>) -> Self {
        Self { face_model: Some(face), eye_model: eye, skin: SkinRange::default() }
    }

    pub fn find(&self, frame: &ColorImage, gray: &GrayImage) -> Option<FaceRegion> {
        let Some(face_model) = &self.face_model else {
            return locate_face(frame, &self.skin);
        };
        let min_side = gray.width().min(gray.height());
        let faces =
            detect_multiscale(face_model, gray, DEFAULT_SCALE_FACTOR, DEFAULT_MIN_NEIGHBORS, min_side / 5).ok()?;
        let best = faces.first()?;
        let face = best.rect;
        let eyes = match &self.eye_model {
            Some(eye_model) => cascade_eyes(eye_model, gray, face),
            None => locate_face(frame, &self.skin)
                .map(|r| r.eyes.into_iter().filter(|e| face.contains_rect(e)).collect())
                .unwrap_or_default(),
        };
        Some(FaceRegion { face, eyes, score: best.score })
    }
}

fn cascade_eyes(model: &CascadeModel, gray: &GrayImage, face: Rect) -> Vec<Rect> {
    let roi = Rect { x: face.x, y: face.y, w: face.w, h: ((face.h as f64) * 0.6).round().max(1.0) as usize };
    let dets = detect_in_region(
        model,
        gray,
        roi,
        DEFAULT_SCALE_FACTOR,
        DEFAULT_MIN_NEIGHBORS,
        (face.w / 8).max(model.base_width),
        face.w / 2,
    )
    .unwrap_or_default();
    let mut picked: Vec<Rect> = Vec::new();
    for d in dets {
        let disjoint = picked.iter().all(|p| d.rect.right() <= p.x || p.right() <= d.rect.x);
        if disjoint {
            picked.push(d.rect);
        }
        if picked.len() == 2 {
            break;
        }
    }
    picked.sort_by_key(|r| r.x);
    picked
}

/// Outermost qualifying Harris corner in the left and right lateral margins
/// of an eye window, in frame coordinates and ordered by image x. A corner
/// qualifies when its response reaches 5% of the window's peak response.
pub fn eye_corners(eye: &EyeWindow) -> Option<(Point, Point)> {
    let src = &eye.source;
    if src.width() < 8 || src.height() < 8 {
        return None;
    }
    let map = harris_response(src, HARRIS_K, HARRIS_WINDOW_SIGMA).ok()?;
    let thresh = CORNER_RESPONSE_FRACTION * map.max();
    let corners = corners_from_response(&map, thresh, 1.0);
    let w = src.width() as f64;
    // outermost qualifying corner on each side
    let left =
        corners.iter().filter(|c| c.point.x < CORNER_MARGIN * w).min_by(|a, b| a.point.x.total_cmp(&b.point.x))?.point;
    let right = corners
        .iter()
        .filter(|c| c.point.x >= (1.0 - CORNER_MARGIN) * w)
        .max_by(|a, b| a.point.x.total_cmp(&b.point.x))?
        .point;
    Some((eye.to_frame(left), eye.to_frame(right)))
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct EyeFeatures {
    pub eye_rect: Rect,
    /// Padded search window.
    pub window: Rect,
    pub pupil: Option<PupilEstimate>,
    pub corners: Option<(Point, Point)>,
}

impl EyeFeatures {
    /// Pupil position relative to the corner axis, if both are known.
    pub fn normalized(&self) -> Option<(f64, f64)> {
        let p = self.pupil?;
        let (a, b) = self.corners?;
        super::normalized_pupil_position(p.center, a, b).ok()
    }
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct FrameFeatures {
    pub face: Rect,
    /// Eye on the image left (the subject's right).
    pub left: Option<EyeFeatures>,
    pub right: Option<EyeFeatures>,
}

impl FrameFeatures {
    pub fn eyes(&self) -> impl Iterator<Item = &EyeFeatures> {
        self.left.iter().chain(self.right.iter())
    }
}

/// Localizes the face and eyes, then the pupil of each eye with `method`;
/// corners are searched only when `with_corners` is set.
pub fn extract_features(
    frame: &ColorImage,
    gray: &GrayImage,
    finder: &RegionFinder,
    pupil: &PupilConfig,
    method: PupilMethod,
    with_corners: bool,
) -> Option<FrameFeatures> {
    let region = finder.find(frame, gray)?;
    let face_width = region.face.w as f64;
    let face_mid = region.face.center().x;
    let (mut left, mut right) = (None, None);
    for eye in &region.eyes {
        let pad_x = (eye.w as f64 * EYE_PAD_X).round() as usize;
        let pad_y = (eye.h as f64 * EYE_PAD_Y).round() as usize;
        let window = eye.padded(pad_x, pad_y, gray.width(), gray.height());
        let Ok(ew) = EyeWindow::from_frame(gray, window, face_width) else {
            continue;
        };
        let est = match method {
            PupilMethod::Ocem => detect_pupil_ocem(&ew, pupil),
            PupilMethod::Hough | PupilMethod::Lls => detect_pupil(&ew, pupil),
        };
        let corners = if with_corners { eye_corners(&ew) } else { None };
        let f = EyeFeatures { eye_rect: *eye, window, pupil: est, corners };
        if eye.center().x < face_mid {
            left.get_or_insert(f);
        } else {
            right.get_or_insert(f);
        }
    }
    Some(FrameFeatures { face: region.face, left, right })
}
