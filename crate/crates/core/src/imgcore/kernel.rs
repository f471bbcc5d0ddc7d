use crate::error::{Error, Result};

use super::GrayImage;

/// Square convolution kernel with odd side `2·radius + 1`, row-major weights.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel {
    radius: usize,
    weights: Vec<f64>,
}

impl Kernel {
    pub fn new(radius: usize, weights: Vec<f64>) -> Result<Self> {
        let side = 2 * radius + 1;
        if weights.len() != side * side {
            return Err(Error::InvalidParameter(format!(
                "kernel of radius {radius} needs {} weights, got {}",
                side * side,
                weights.len()
            )));
        }
        Ok(Self { radius, weights })
    }

    /// The 3×3 identity kernel.
    pub fn identity() -> Self {
        let mut weights = vec![0.0; 9];
        weights[4] = 1.0;
        Self { radius: 1, weights }
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn side(&self) -> usize {
        2 * self.radius + 1
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weight at offset `(dx, dy)` from the center.
    pub fn weight(&self, dx: isize, dy: isize) -> f64 {
        let r = self.radius as isize;
        assert!(dx.abs() <= r && dy.abs() <= r, "offset outside kernel");
        self.weights[((dy + r) as usize) * self.side() + (dx + r) as usize]
    }
}

/// Sampled 2-D Gaussian `exp(-(x²+y²)/(2σ²))`, renormalized to unit sum.
pub fn gaussian_kernel(sigma: f64, radius: usize) -> Result<Kernel> {
    if !(sigma > 0.0) || radius == 0 {
        return Err(Error::InvalidParameter(format!(
            "gaussian kernel needs sigma > 0 and radius >= 1 (got {sigma}, {radius})"
        )));
    }
    let r = radius as isize;
    let two_s2 = 2.0 * sigma * sigma;
    let mut weights = Vec::with_capacity((2 * radius + 1).pow(2));
    for dy in -r..=r {
        for dx in -r..=r {
            weights.push((-((dx * dx + dy * dy) as f64) / two_s2).exp());
        }
    }
    let sum: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= sum);
    Kernel::new(radius, weights)
}

/// Radius covering ±3σ.
pub fn gaussian_radius(sigma: f64) -> usize {
    ((3.0 * sigma).ceil() as usize).max(1)
}

/// Same-size 2-D convolution, `out(p) = Σ k(d)·I(p − d)`, edges replicated.
pub fn convolve(img: &GrayImage, k: &Kernel) -> Result<GrayImage> {
    let side = k.side();
    if side > img.width().min(img.height()) {
        return Err(Error::InvalidParameter(format!(
            "kernel side {side} exceeds image {}x{}",
            img.width(),
            img.height()
        )));
    }
    let r = k.radius() as isize;
    let (w, h) = (img.width(), img.height());
    let mut out = vec![0.0; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let mut acc = 0.0;
            for dy in -r..=r {
                for dx in -r..=r {
                    acc += k.weight(dx, dy) * img.get_clamped(x - dx, y - dy);
                }
            }
            out[y as usize * w + x as usize] = acc;
        }
    }
    GrayImage::from_vec(w, h, out)
}

fn gaussian_1d(sigma: f64, radius: usize) -> Vec<f64> {
    let r = radius as isize;
    let mut taps: Vec<f64> = (-r..=r).map(|d| (-((d * d) as f64) / (2.0 * sigma * sigma)).exp()).collect();
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= sum);
    taps
}

/// Separable Gaussian smoothing with edge replication. Equivalent to
/// [`convolve`] with [`gaussian_kernel`] of radius ⌈3σ⌉, but O(r) per pixel.
pub fn gaussian_blur(img: &GrayImage, sigma: f64) -> Result<GrayImage> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidParameter(format!("sigma must be positive, got {sigma}")));
    }
    let radius = gaussian_radius(sigma);
    let taps = gaussian_1d(sigma, radius);
    let r = radius as isize;
    let (w, h) = (img.width(), img.height());
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        let row = &img.data()[y * w..(y + 1) * w];
        for x in 0..w as isize {
            let mut acc = 0.0;
            for (i, t) in taps.iter().enumerate() {
                let xx = (x + i as isize - r).clamp(0, w as isize - 1) as usize;
                acc += t * row[xx];
            }
            tmp[y * w + x as usize] = acc;
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h as isize {
        for (i, t) in taps.iter().enumerate() {
            let yy = (y + i as isize - r).clamp(0, h as isize - 1) as usize;
            let src = &tmp[yy * w..(yy + 1) * w];
            let dst = &mut out[y as usize * w..(y as usize + 1) * w];
            for (d, s) in dst.iter_mut().zip(src) {
                *d += t * s;
            }
        }
    }
    GrayImage::from_vec(w, h, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn gaussian_is_normalized_and_symmetric() {
        for &(sigma, radius) in &[(0.5, 1), (1.0, 3), (2.5, 4), (7.0, 2)] {
            let k = gaussian_kernel(sigma, radius).unwrap();
            let sum: f64 = k.weights().iter().sum();
            assert!((sum - 1.0).abs() < 1e-9);
            let r = radius as isize;
            for dy in -r..=r {
                for dx in -r..=r {
                    let w = k.weight(dx, dy);
                    assert!((w - k.weight(-dx, -dy)).abs() < 1e-15);
                    assert!((w - k.weight(dy, dx)).abs() < 1e-15);
                    assert!(w <= k.weight(0, 0));
                }
            }
        }
        let k = gaussian_kernel(1.0, 2).unwrap();
        assert!((k.weight(1, 0) / k.weight(0, 0) - (-0.5f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn gaussian_rejects_bad_params() {
        assert!(gaussian_kernel(0.0, 2).is_err());
        assert!(gaussian_kernel(-1.0, 2).is_err());
        assert!(gaussian_kernel(1.0, 0).is_err());
    }

    #[test]
    fn identity_and_constant() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let data = (0..9 * 7).map(|_| rng.random_range(0.0..255.0)).collect();
        let img = GrayImage::from_vec(9, 7, data).unwrap();
        assert_eq!(convolve(&img, &Kernel::identity()).unwrap(), img);
        let c = GrayImage::filled(8, 8, 42.0).unwrap();
        let k = gaussian_kernel(1.3, 2).unwrap();
        assert!(convolve(&c, &k).unwrap().data().iter().all(|v| (v - 42.0).abs() < 1e-9));
    }

    #[test]
    fn impulse_response_imprints_kernel() {
        let weights: Vec<f64> = (0..9).map(|i| i as f64).collect();
        let k = Kernel::new(1, weights).unwrap();
        let mut img = GrayImage::new(5, 5).unwrap();
        img.set(2, 2, 1.0);
        let out = convolve(&img, &k).unwrap();
        for dy in -1isize..=1 {
            for dx in -1isize..=1 {
                assert_eq!(out.get((2 + dx) as usize, (2 + dy) as usize), k.weight(dx, dy));
            }
        }
    }

    #[test]
    fn oversized_kernel_is_rejected() {
        let img = GrayImage::new(4, 10).unwrap();
        assert!(convolve(&img, &gaussian_kernel(1.0, 2).unwrap()).is_err());
    }

    #[test]
    fn separable_blur_matches_full_convolution() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let data = (0..20 * 16).map(|_| rng.random_range(0.0..255.0)).collect();
        let img = GrayImage::from_vec(20, 16, data).unwrap();
        let sigma = 1.5;
        let full = convolve(&img, &gaussian_kernel(sigma, gaussian_radius(sigma)).unwrap()).unwrap();
        let sep = gaussian_blur(&img, sigma).unwrap();
        for (a, b) in full.data().iter().zip(sep.data()) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}
