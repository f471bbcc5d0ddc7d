use crate::imgcore::{sobel_gradients, GradientField, Point};

use super::{CircleHypothesis, EyeWindow};

/// Fraction of the gradient range that counts as "near the maximum".
pub const EDGE_CUTOFF_FRACTION: f64 = 0.20;
/// Half-angle of each lateral limbus arc, in degrees.
pub const OCEM_ARC_HALF_ANGLE_DEG: f64 = 30.0;
pub const OCEM_SAMPLES_PER_ARC: usize = 16;

/// Threshold over a window's gradient values: accepted values exceed
/// `max_intensity - cutoff`, with `cutoff = (max - min) * 0.20`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgeThreshold {
    pub max_intensity: f64,
    pub min_intensity: f64,
    pub cutoff: f64,
}

impl EdgeThreshold {
    pub fn new(max_intensity: f64, min_intensity: f64) -> Self {
        Self { max_intensity, min_intensity, cutoff: (max_intensity - min_intensity) * EDGE_CUTOFF_FRACTION }
    }

    pub fn from_values(values: &[f64]) -> Option<Self> {
        let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        (lo <= hi).then(|| Self::new(hi, lo))
    }

    pub fn bar(&self) -> f64 {
        self.max_intensity - self.cutoff
    }

    pub fn accepts(&self, v: f64) -> bool {
        v > self.bar()
    }
}

/// Vertical limbus edges of a window, in frame coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LimbusEdges {
    pub left_x: f64,
    pub right_x: f64,
    pub mid_x: f64,
    /// Row span over which the limbus columns pass the threshold.
    pub top_y: f64,
    pub bottom_y: f64,
    pub threshold: EdgeThreshold,
}

impl LimbusEdges {
    pub fn half_width(&self) -> f64 {
        (self.right_x - self.left_x) / 2.0
    }
}

/// Column-reduced horizontal gradient search for the two sides of the iris.
///
/// `|gx|` is reduced to its per-column maximum and thresholded with
/// [`EdgeThreshold`]. The left limbus is the leftmost accepted column whose
/// strongest response is a bright-to-dark transition, the right limbus the
/// rightmost accepted column with a dark-to-bright one.
pub fn limbus_vertical_edges(eye: &EyeWindow) -> Option<LimbusEdges> {
    let src = &eye.source;
    if src.width() < 8 || src.height() < 3 {
        return None;
    }
    let grad = sobel_gradients(src).ok()?;
    limbus_from_gradient(eye, &grad)
}

pub(crate) fn limbus_from_gradient(eye: &EyeWindow, grad: &GradientField) -> Option<LimbusEdges> {
    let (w, h) = (grad.width(), grad.height());
    if w < 8 {
        return None;
    }
    let abs: Vec<f64> = grad.gx.data().iter().map(|v| v.abs()).collect();
    let threshold = EdgeThreshold::from_values(&abs)?;
    let mut col_max = vec![(0.0f64, 0.0f64, 0usize); w]; // (|gx|, signed gx, row)
    for y in 0..h {
        for (x, best) in col_max.iter_mut().enumerate() {
            let g = grad.gx.get(x, y);
            if g.abs() > best.0 {
                *best = (g.abs(), g, y);
            }
        }
    }
    let accepted = |x: usize| threshold.accepts(col_max[x].0);
    let left = (0..w).find(|&x| accepted(x) && col_max[x].1 < 0.0)?;
    let right = (0..w).rev().find(|&x| accepted(x) && col_max[x].1 > 0.0)?;
    if right <= left {
        return None;
    }
    let mut top = usize::MAX;
    let mut bottom = 0;
    for (x0, sign) in [(left, -1.0), (right, 1.0)] {
        for x in x0.saturating_sub(1)..=(x0 + 1).min(w - 1) {
            for y in 0..h {
                let g = grad.gx.get(x, y);
                if g * sign > 0.0 && threshold.accepts(g.abs()) {
                    top = top.min(y);
                    bottom = bottom.max(y);
                }
            }
        }
    }
    let (ox, oy) = (eye.origin.0 as f64, eye.origin.1 as f64);
    Some(LimbusEdges {
        left_x: left as f64 + ox,
        right_x: right as f64 + ox,
        mid_x: (left + right) as f64 / 2.0 + ox,
        top_y: top as f64 + oy,
        bottom_y: bottom as f64 + oy,
        threshold,
    })
}

/// Mean gradient magnitude sampled on the two lateral arcs (±30° about the
/// horizontal diameter, 16 samples each) of a frame-coordinate circle.
/// Samples outside the window count as zero.
pub fn ocem_score(eye: &EyeWindow, c: &CircleHypothesis) -> f64 {
    match sobel_gradients(&eye.source) {
        Ok(g) => ocem_score_with(eye, &g, c),
        Err(_) => 0.0,
    }
}

pub(crate) fn ocem_score_with(eye: &EyeWindow, grad: &GradientField, c: &CircleHypothesis) -> f64 {
    let half = OCEM_ARC_HALF_ANGLE_DEG.to_radians();
    let n = OCEM_SAMPLES_PER_ARC;
    let local = eye.to_local(Point::new(c.cx, c.cy));
    let mut total = 0.0;
    for base in [0.0, std::f64::consts::PI] {
        for i in 0..n {
            let t = base - half + 2.0 * half * i as f64 / (n - 1) as f64;
            let (x, y) = (local.x + c.r * t.cos(), local.y + c.r * t.sin());
            total += grad.magnitude.sample(x, y).unwrap_or(0.0);
        }
    }
    total / (2 * n) as f64
}
