use crate::error::{Error, Result};

use super::GrayImage;

/// Per-pixel intensity gradient with its magnitude plane.
#[derive(Clone, Debug)]
pub struct GradientField {
    pub gx: GrayImage,
    pub gy: GrayImage,
    pub magnitude: GrayImage,
}

impl GradientField {
    pub fn width(&self) -> usize {
        self.gx.width()
    }

    pub fn height(&self) -> usize {
        self.gx.height()
    }

    pub fn max_magnitude(&self) -> f64 {
        self.magnitude.data().iter().copied().fold(0.0, f64::max)
    }
}

/// 3×3 Sobel gradients (unscaled: a unit ramp gives 8), edges replicated.
pub fn sobel_gradients(img: &GrayImage) -> Result<GradientField> {
    let (w, h) = (img.width(), img.height());
    if w < 3 || h < 3 {
        return Err(Error::InvalidImage(format!("sobel needs at least 3x3, got {w}x{h}")));
    }
    let mut gx = vec![0.0; w * h];
    let mut gy = vec![0.0; w * h];
    let mut mag = vec![0.0; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let p = |dx: isize, dy: isize| img.get_clamped(x + dx, y + dy);
            let dx = (p(1, -1) + 2.0 * p(1, 0) + p(1, 1)) - (p(-1, -1) + 2.0 * p(-1, 0) + p(-1, 1));
            let dy = (p(-1, 1) + 2.0 * p(0, 1) + p(1, 1)) - (p(-1, -1) + 2.0 * p(0, -1) + p(1, -1));
            let i = y as usize * w + x as usize;
            gx[i] = dx;
            gy[i] = dy;
            mag[i] = dx.hypot(dy);
        }
    }
    Ok(GradientField {
        gx: GrayImage::from_vec(w, h, gx)?,
        gy: GrayImage::from_vec(w, h, gy)?,
        magnitude: GrayImage::from_vec(w, h, mag)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_image_has_zero_gradient() {
        let g = sobel_gradients(&GrayImage::filled(6, 5, 77.0).unwrap()).unwrap();
        assert!(g.gx.data().iter().chain(g.gy.data()).all(|&v| v == 0.0));
    }

    #[test]
    fn ramp_interior_gradient_is_eight() {
        let img = GrayImage::from_fn(10, 8, |x, _| x as f64).unwrap();
        let g = sobel_gradients(&img).unwrap();
        for y in 1..7 {
            for x in 1..9 {
                assert_eq!(g.gx.get(x, y), 8.0);
                assert_eq!(g.gy.get(x, y), 0.0);
            }
        }
    }

    #[test]
    fn step_edge_brackets() {
        // columns 0..=4 dark, 5.. bright
        let img = GrayImage::from_fn(10, 7, |x, _| if x < 5 { 10.0 } else { 110.0 }).unwrap();
        let g = sobel_gradients(&img).unwrap();
        for y in 1..6 {
            let row: Vec<f64> = (0..10).map(|x| g.gx.get(x, y).abs()).collect();
            let max = row.iter().copied().fold(0.0, f64::max);
            assert_eq!(row[4], max);
            assert_eq!(row[5], max);
            assert_eq!(max, 400.0);
            assert!(row.iter().enumerate().all(|(x, &v)| x == 4 || x == 5 || v == 0.0));
            assert!((0..10).all(|x| g.gy.get(x, y) == 0.0));
        }
    }

    #[test]
    fn magnitude_identity() {
        let img = GrayImage::from_fn(12, 9, |x, y| ((x * 7 + y * 13) % 17) as f64).unwrap();
        let g = sobel_gradients(&img).unwrap();
        for i in 0..img.data().len() {
            let (a, b) = (g.gx.data()[i], g.gy.data()[i]);
            assert!((g.magnitude.data()[i] - (a * a + b * b).sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn too_small() {
        assert!(sobel_gradients(&GrayImage::new(2, 5).unwrap()).is_err());
    }
}
