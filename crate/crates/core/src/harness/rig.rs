use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaze::ScreenSpec;
use crate::imgcore::{ColorImage, Point, Rect};

use super::synth::noisy_u8;

const SUPERSAMPLE: usize = 4;

/// Synthetic face whose pupils move as an exact affine function of the gaze
/// target: `pupil = rest + gain ⊙ (target − screen center)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthGazeRig {
    pub screen: ScreenSpec,
    pub frame_size: (usize, usize),
    /// Pupil pixels per screen pixel, per axis.
    pub gain: [f64; 2],
    pub face_center: Point,
    /// Semi-axes of the face ellipse.
    pub face_axes: (f64, f64),
    /// Eye centers, which are also the resting pupil positions (image left first).
    pub eye_centers: [Point; 2],
    /// Half width and half height of the lens-shaped eye opening.
    pub eye_half: (f64, f64),
    pub iris_radius: f64,
    pub background_rgb: [u8; 3],
    pub skin_rgb: [u8; 3],
    pub sclera_rgb: [u8; 3],
    pub iris_rgb: [u8; 3],
    pub noise_sigma: f64,
}

impl Default for SynthGazeRig {
    fn default() -> Self {
        Self::with_face(Point::new(320.0, 250.0), 1.0)
    }
}

impl SynthGazeRig {
    /// 640×480 frame, 1280×720 screen, face scaled by `scale` around `center`.
    pub fn with_face(center: Point, scale: f64) -> Self {
        Self {
            screen: ScreenSpec::default(),
            frame_size: (640, 480),
            gain: [0.025, 0.02],
            face_center: center,
            face_axes: (140.0 * scale, 180.0 * scale),
            eye_centers: [
                Point::new(center.x - 70.0 * scale, center.y - 40.0 * scale),
                Point::new(center.x + 70.0 * scale, center.y - 40.0 * scale),
            ],
            eye_half: (45.0 * scale, 22.0 * scale),
            iris_radius: 14.0 * scale,
            background_rgb: [90, 110, 140],
            skin_rgb: [181, 137, 136],
            sclera_rgb: [235, 235, 235],
            iris_rgb: [70, 50, 40],
            noise_sigma: 2.0,
        }
    }

    pub fn face_width(&self) -> f64 {
        2.0 * self.face_axes.0
    }

    /// Bounding box of the face ellipse.
    pub fn face_box(&self) -> Rect {
        let (ax, ay) = self.face_axes;
        let x0 = (self.face_center.x - ax).round().max(0.0) as usize;
        let y0 = (self.face_center.y - ay).round().max(0.0) as usize;
        let x1 = ((self.face_center.x + ax).round() as usize).min(self.frame_size.0);
        let y1 = ((self.face_center.y + ay).round() as usize).min(self.frame_size.1);
        Rect { x: x0, y: y0, w: x1 - x0, h: y1 - y0 }
    }

    pub fn pupils_for(&self, target: Point) -> [Point; 2] {
        let c = self.screen.center();
        let d = Point::new(self.gain[0] * (target.x - c.x), self.gain[1] * (target.y - c.y));
        [self.eye_centers[0] + d, self.eye_centers[1] + d]
    }

    /// Eye corners (image-left, image-right) of each eye.
    pub fn corners(&self) -> [(Point, Point); 2] {
        self.eye_centers.map(|e| (Point::new(e.x - self.eye_half.0, e.y), Point::new(e.x + self.eye_half.0, e.y)))
    }

    fn in_face(&self, x: f64, y: f64) -> bool {
        let dx = (x - self.face_center.x) / self.face_axes.0;
        let dy = (y - self.face_center.y) / self.face_axes.1;
        dx * dx + dy * dy <= 1.0
    }

    /// Lens shape: intersection of two circles through both corners.
    fn in_eye(&self, e: Point, x: f64, y: f64) -> bool {
        let (a, b) = self.eye_half;
        let big_r = (a * a + b * b) / (2.0 * b);
        let off = big_r - b;
        (x - e.x).hypot(y - (e.y + off)) <= big_r && (x - e.x).hypot(y - (e.y - off)) <= big_r
    }

    fn color_at(&self, x: f64, y: f64, pupils: &[Point; 2]) -> [u8; 3] {
        if !self.in_face(x, y) {
            return self.background_rgb;
        }
        for (e, p) in self.eye_centers.iter().zip(pupils) {
            if self.in_eye(*e, x, y) {
                return if (x - p.x).hypot(y - p.y) <= self.iris_radius { self.iris_rgb } else { self.sclera_rgb };
            }
        }
        self.skin_rgb
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RigTruth {
    pub target: Point,
    pub pupils: [Point; 2],
    pub corners: [(Point, Point); 2],
    pub face_box: Rect,
}

/// Noise-free rendering of the rig looking at one target. Frames that differ
/// only in their noise seed share one scene.
#[derive(Clone, Debug)]
pub struct RigScene {
    width: usize,
    height: usize,
    planes: Vec<f64>,
    noise_sigma: f64,
    truth: RigTruth,
}

impl RigScene {
    pub fn new(rig: &SynthGazeRig, target: Point) -> Result<Self> {
        if !rig.screen.contains(target) {
            return Err(Error::InvalidParameter(format!("target {target:?} outside the screen")));
        }
        if rig.gain.iter().any(|g| *g == 0.0 || !g.is_finite()) {
            return Err(Error::InvalidParameter("rig gain must be finite and nonzero".into()));
        }
        let pupils = rig.pupils_for(target);
        let (w, h) = rig.frame_size;
        let bbox = rig.face_box().padded(2, 2, w, h);
        let mut planes = vec![0.0f64; w * h * 3];
        for y in 0..h {
            for x in 0..w {
                let i = (y * w + x) * 3;
                let inside = x >= bbox.x && x < bbox.right() && y >= bbox.y && y < bbox.bottom();
                if !inside {
                    for c in 0..3 {
                        planes[i + c] = rig.background_rgb[c] as f64;
                    }
                    continue;
                }
                let mut acc = [0.0; 3];
                for sy in 0..SUPERSAMPLE {
                    for sx in 0..SUPERSAMPLE {
                        let px = x as f64 - 0.5 + (sx as f64 + 0.5) / SUPERSAMPLE as f64;
                        let py = y as f64 - 0.5 + (sy as f64 + 0.5) / SUPERSAMPLE as f64;
                        let col = rig.color_at(px, py, &pupils);
                        for c in 0..3 {
                            acc[c] += col[c] as f64;
                        }
                    }
                }
                for c in 0..3 {
                    planes[i + c] = acc[c] / (SUPERSAMPLE * SUPERSAMPLE) as f64;
                }
            }
        }
        let truth = RigTruth { target, pupils, corners: rig.corners(), face_box: rig.face_box() };
        Ok(Self { width: w, height: h, planes, noise_sigma: rig.noise_sigma, truth })
    }

    pub fn truth(&self) -> &RigTruth {
        &self.truth
    }

    /// The scene with seeded Gaussian noise, quantized to 8 bits.
    pub fn frame(&self, seed: u64) -> Result<ColorImage> {
        ColorImage::from_vec(self.width, self.height, noisy_u8(&self.planes, self.noise_sigma, seed))
    }
}

/// Renders the rig looking at `target`, anti-aliased, with seeded noise.
pub fn render_rig_frame(rig: &SynthGazeRig, target: Point, seed: u64) -> Result<(ColorImage, RigTruth)> {
    let scene = RigScene::new(rig, target)?;
    Ok((scene.frame(seed)?, scene.truth))
}
