use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgcore::{ColorImage, Point};

/// Supersampling grid per pixel axis for anti-aliased coverage.
const SUPERSAMPLE: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthEyeParams {
    pub frame_size: (usize, usize),
    pub face_width: f64,
    pub iris_center: Point,
    pub iris_radius: f64,
    pub sclera_intensity: f64,
    pub iris_intensity: f64,
    /// Fraction of the iris diameter hidden from the top, 0..=0.5.
    pub eyelid_occlusion: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl SynthEyeParams {
    /// Centered iris with radius 0.05 × face width, no occlusion, no noise.
    pub fn centered(frame_size: (usize, usize), face_width: f64) -> Self {
        Self {
            frame_size,
            face_width,
            iris_center: Point::new(frame_size.0 as f64 / 2.0, frame_size.1 as f64 / 2.0),
            iris_radius: 0.05 * face_width,
            sclera_intensity: 220.0,
            iris_intensity: 60.0,
            eyelid_occlusion: 0.0,
            noise_sigma: 0.0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (w, h) = self.frame_size;
        let c = self.iris_center;
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if w == 0 || h == 0 {
            return bad("empty frame");
        }
        if !(self.iris_radius > 0.0) || !(self.face_width > 0.0) {
            return bad("iris radius and face width must be positive");
        }
        if !(self.iris_intensity < self.sclera_intensity) {
            return bad("iris must be darker than sclera");
        }
        if !(0.0..=0.5).contains(&self.eyelid_occlusion) {
            return bad("eyelid occlusion must be within 0..=0.5");
        }
        if !(self.noise_sigma >= 0.0) {
            return bad("noise sigma must be non-negative");
        }
        let r = self.iris_radius;
        if !(c.x - r >= 0.0 && c.y - r >= 0.0 && c.x + r <= w as f64 && c.y + r <= h as f64) {
            return bad("iris must lie inside the frame");
        }
        Ok(())
    }

    /// Row above which the iris is overdrawn by the eyelid.
    pub fn occlusion_line(&self) -> f64 {
        self.iris_center.y - self.iris_radius + 2.0 * self.iris_radius * self.eyelid_occlusion
    }
}

/// Fraction of pixel (x, y) covered by `inside`, on a 4×4 subsample grid.
pub(crate) fn coverage(x: usize, y: usize, inside: impl Fn(f64, f64) -> bool) -> f64 {
    let mut hits = 0;
    for sy in 0..SUPERSAMPLE {
        for sx in 0..SUPERSAMPLE {
            let px = x as f64 - 0.5 + (sx as f64 + 0.5) / SUPERSAMPLE as f64;
            let py = y as f64 - 0.5 + (sy as f64 + 0.5) / SUPERSAMPLE as f64;
            if inside(px, py) {
                hits += 1;
            }
        }
    }
    hits as f64 / (SUPERSAMPLE * SUPERSAMPLE) as f64
}

/// Adds seeded N(0, sigma²) noise to each value and quantizes to 8 bits.
pub(crate) fn noisy_u8(values: &[f64], sigma: f64, seed: u64) -> Vec<u8> {
    if sigma <= 0.0 {
        return values.iter().map(|&v| quantize(v)).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma).expect("sigma checked positive");
    values.iter().map(|&v| quantize(v + normal.sample(&mut rng))).collect()
}

pub(crate) fn quantize(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// Renders a gray eye: anti-aliased dark disk on a bright ground, with the top
/// occlusion fraction of the disk overdrawn at sclera intensity, plus seeded
/// Gaussian noise. Returns the image and the exact iris center.
pub fn render_synthetic_eye(p: &SynthEyeParams) -> Result<(ColorImage, Point)> {
    p.validate()?;
    let (w, h) = p.frame_size;
    let c = p.iris_center;
    let cut = p.occlusion_line();
    let mut values = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let cov = coverage(x, y, |px, py| (px - c.x).hypot(py - c.y) <= p.iris_radius && py >= cut);
            values.push(p.sclera_intensity + (p.iris_intensity - p.sclera_intensity) * cov);
        }
    }
    let data = noisy_u8(&values, p.noise_sigma, p.seed).into_iter().flat_map(|v| [v; 3]).collect();
    Ok((ColorImage::from_vec(w, h, data)?, c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imgcore::to_grayscale;

    #[test]
    fn dark_centroid_matches_center() {
        let mut p = SynthEyeParams::centered((80, 60), 200.0);
        p.iris_center = Point::new(37.3, 28.8);
        let (img, truth) = render_synthetic_eye(&p).unwrap();
        assert_eq!(truth, p.iris_center);
        let g = to_grayscale(&img);
        let (mut sw, mut sx, mut sy) = (0.0, 0.0, 0.0);
        for y in 0..60 {
            for x in 0..80 {
                let d = 220.0 - g.get(x, y);
                sw += d;
                sx += d * x as f64;
                sy += d * y as f64;
            }
        }
        assert!(Point::new(sx / sw, sy / sw).distance(truth) < 0.5);
    }

    #[test]
    fn seeded_noise_is_reproducible() {
        let mut p = SynthEyeParams::centered((40, 30), 160.0);
        p.noise_sigma = 6.0;
        p.seed = 99;
        assert_eq!(render_synthetic_eye(&p).unwrap().0, render_synthetic_eye(&p).unwrap().0);
        p.seed = 100;
        let other = render_synthetic_eye(&p).unwrap().0;
        p.seed = 99;
        assert_ne!(render_synthetic_eye(&p).unwrap().0, other);
    }

    #[test]
    fn occluded_rows_are_sclera() {
        let mut p = SynthEyeParams::centered((80, 60), 200.0);
        p.eyelid_occlusion = 0.3;
        let (img, _) = render_synthetic_eye(&p).unwrap();
        let cut = p.occlusion_line();
        for y in 0..(cut.floor() as usize) {
            for x in 0..80 {
                assert_eq!(img.get(x, y), [220; 3]);
            }
        }
    }

    #[test]
    fn rejects_bad_params() {
        let mut p = SynthEyeParams::centered((80, 60), 200.0);
        p.iris_intensity = 250.0;
        assert!(render_synthetic_eye(&p).is_err());
        let mut p = SynthEyeParams::centered((80, 60), 200.0);
        p.iris_center = Point::new(2.0, 2.0);
        assert!(render_synthetic_eye(&p).is_err());
    }
}
