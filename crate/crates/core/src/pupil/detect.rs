use crate::imgcore::{canny_auto, gaussian_blur, sobel_gradients, GradientField, GrayImage, Point};

use super::circle_fit::fit_circle_least_squares;
use super::hough::hough_circles;
use super::lls::longest_run_in;
use super::ocem::{limbus_from_gradient, ocem_score_with};
use super::{CircleHypothesis, EyeWindow, PupilEstimate, PupilMethod};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PupilConfig {
    pub blur_sigma: f64,
    pub edge_blur_sigma: f64,
    /// Iris radius search range as fractions of the face width.
    pub radius_prior: (f64, f64),
    /// A candidate's interior must be darker than this window percentile.
    pub darkness_percentile: f64,
    /// Pixels darker than this window percentile form the iris mask.
    pub iris_percentile: f64,
    pub top_k: usize,
    /// Least-squares refinement passes over limbus gradient pixels; 0 disables.
    pub refine_passes: usize,
}

impl Default for PupilConfig {
    fn default() -> Self {
        Self {
            blur_sigma: 1.0,
            edge_blur_sigma: 1.0,
            radius_prior: (0.03, 0.08),
            darkness_percentile: 35.0,
            iris_percentile: 25.0,
            top_k: 8,
            refine_passes: 2,
        }
    }
}

const BAND_HALF_WIDTH: f64 = 2.5;
const BAND_MAGNITUDE_FRACTION: f64 = 0.5;
const OUTWARD_COS: f64 = 0.8;

/// Refits a window-local circle to the strong, outward-pointing gradient
/// pixels in a band around its current outline. Returns the input unchanged
/// when too few pixels qualify or the fit degenerates.
pub fn refine_circle(grad: &GradientField, c: CircleHypothesis, passes: usize) -> CircleHypothesis {
    let mut cur = c;
    for _ in 0..passes {
        let (w, h) = (grad.width(), grad.height());
        let x0 = (cur.cx - cur.r - BAND_HALF_WIDTH).floor().max(0.0) as usize;
        let y0 = (cur.cy - cur.r - BAND_HALF_WIDTH).floor().max(0.0) as usize;
        let x1 = ((cur.cx + cur.r + BAND_HALF_WIDTH).ceil().max(0.0) as usize).min(w - 1);
        let y1 = ((cur.cy + cur.r + BAND_HALF_WIDTH).ceil().max(0.0) as usize).min(h - 1);
        let mut band = Vec::new();
        for y in y0..=y1 {
            for x in x0..=x1 {
                let (dx, dy) = (x as f64 - cur.cx, y as f64 - cur.cy);
                let d = dx.hypot(dy);
                let m = grad.magnitude.get(x, y);
                if d == 0.0 || m == 0.0 || (d - cur.r).abs() > BAND_HALF_WIDTH {
                    continue;
                }
                let cos = (grad.gx.get(x, y) * dx + grad.gy.get(x, y) * dy) / (m * d);
                if cos >= OUTWARD_COS {
                    band.push((Point::new(x as f64, y as f64), m));
                }
            }
        }
        let peak = band.iter().map(|b| b.1).fold(0.0, f64::max);
        let pts: Vec<Point> = band.iter().filter(|b| b.1 >= BAND_MAGNITUDE_FRACTION * peak).map(|b| b.0).collect();
        if pts.len() < 8 {
            break;
        }
        match fit_circle_least_squares(&pts) {
            Ok(f) if f.r > 0.5 && f.cx.is_finite() && (f.cx - cur.cx).hypot(f.cy - cur.cy) <= cur.r => {
                cur = CircleHypothesis { score: c.score, ..f };
            }
            _ => break,
        }
    }
    cur
}

fn interior_mean(img: &GrayImage, c: &CircleHypothesis, shrink: f64) -> Option<f64> {
    let r = c.r * shrink;
    let (mut sum, mut n) = (0.0, 0usize);
    let x0 = (c.cx - r).floor().max(0.0) as usize;
    let y0 = (c.cy - r).floor().max(0.0) as usize;
    let x1 = ((c.cx + r).ceil().max(0.0) as usize).min(img.width() - 1);
    let y1 = ((c.cy + r).ceil().max(0.0) as usize).min(img.height() - 1);
    for y in y0..=y1 {
        for x in x0..=x1 {
            if (x as f64 - c.cx).hypot(y as f64 - c.cy) <= r {
                sum += img.get(x, y);
                n += 1;
            }
        }
    }
    (n > 0).then(|| sum / n as f64)
}

fn smoothed(eye: &EyeWindow, sigma: f64) -> Option<GrayImage> {
    if sigma > 0.0 {
        gaussian_blur(&eye.source, sigma).ok()
    } else {
        Some(eye.source.clone())
    }
}

/// Hough-based pupil detection: smooth, Canny, smooth the edge map, vote for
/// circles with radius in the face-width prior, drop candidates that are not
/// darker than the window's darkness percentile, refine the best survivor.
pub fn detect_pupil(eye: &EyeWindow, config: &PupilConfig) -> Option<PupilEstimate> {
    let smooth = smoothed(eye, config.blur_sigma)?;
    let grad = sobel_gradients(&smooth).ok()?;
    let mut edges = canny_auto(&smooth).ok()?;
    if config.edge_blur_sigma > 0.0 {
        edges = gaussian_blur(&edges, config.edge_blur_sigma).ok()?;
    }
    let r_min = ((config.radius_prior.0 * eye.face_width).floor() as usize).max(1);
    let r_max = ((config.radius_prior.1 * eye.face_width).ceil() as usize).max(r_min);
    let hyps = hough_circles(&edges, &grad, r_min, r_max, config.top_k).ok()?;
    let dark_bar = smooth.percentile(config.darkness_percentile);
    let best = hyps.into_iter().find(|c| interior_mean(&smooth, c, 0.8).is_some_and(|m| m < dark_bar))?;
    let refined = refine_circle(&grad, best, config.refine_passes);
    let center = eye.to_frame(refined.center());
    eye.contains(center).then_some(PupilEstimate {
        center,
        radius: refined.r,
        confidence: best.score.clamp(0.0, 1.0),
        method: PupilMethod::Hough,
    })
}

/// Limbus-edge pupil detection: vertical limbus edges fix the iris column
/// and a row strip; candidates from a longest-line scan of the dark iris mask
/// and from the limbus midline are scored by lateral arc gradients, and the
/// winner is refined.
pub fn detect_pupil_ocem(eye: &EyeWindow, config: &PupilConfig) -> Option<PupilEstimate> {
    let smooth = smoothed(eye, config.blur_sigma)?;
    let grad = sobel_gradients(&smooth).ok()?;
    let limbus = limbus_from_gradient(eye, &grad)?;
    let r = limbus.half_width().max(1.0);
    let (ox, oy) = (eye.origin.0 as f64, eye.origin.1 as f64);
    let (left, right) = ((limbus.left_x - ox) as usize, (limbus.right_x - ox) as usize);
    let (top, bottom) = ((limbus.top_y - oy) as usize, (limbus.bottom_y - oy) as usize);
    let mid = limbus.mid_x - ox;

    let iris_bar = smooth.percentile(config.iris_percentile);
    let mask =
        GrayImage::from_fn(
            smooth.width(),
            smooth.height(),
            |x, y| {
                if smooth.get(x, y) <= iris_bar {
                    1.0
                } else {
                    0.0
                }
            },
        )
        .ok()?;
    let mut candidates = Vec::new();
    if let Some(p) = longest_run_in(&mask, top..bottom + 1, left..right + 1) {
        candidates.push(p);
        candidates.push(Point::new(mid, p.y));
    }
    candidates.extend((top..=bottom).map(|y| Point::new(mid, y as f64)));

    let mut best: Option<CircleHypothesis> = None;
    for p in candidates {
        let mut c = CircleHypothesis { cx: p.x + ox, cy: p.y + oy, r, score: 0.0 };
        c.score = ocem_score_with(eye, &grad, &c);
        if best.is_none_or(|b| c.score > b.score) {
            best = Some(c);
        }
    }
    let best = best.filter(|b| b.score > 0.0)?;
    let local = CircleHypothesis { cx: best.cx - ox, cy: best.cy - oy, ..best };
    let refined = refine_circle(&grad, local, config.refine_passes);
    let center = eye.to_frame(refined.center());
    let max_mag = grad.max_magnitude();
    eye.contains(center).then_some(PupilEstimate {
        center,
        radius: refined.r,
        confidence: if max_mag > 0.0 { (best.score / max_mag).clamp(0.0, 1.0) } else { 0.0 },
        method: PupilMethod::Ocem,
    })
}
