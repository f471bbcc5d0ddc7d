use crate::error::{Error, Result};

use super::{gaussian_blur, sobel_gradients, GrayImage, Point};

pub const HARRIS_K: f64 = 0.04;
pub const HARRIS_WINDOW_SIGMA: f64 = 1.0;

/// Harris corner response `R = det(M) − k·trace(M)²` per pixel.
#[derive(Clone, Debug)]
pub struct ResponseMap {
    pub response: GrayImage,
}

impl ResponseMap {
    pub fn width(&self) -> usize {
        self.response.width()
    }

    pub fn height(&self) -> usize {
        self.response.height()
    }

    pub fn max(&self) -> f64 {
        self.response.data().iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Corner {
    pub point: Point,
    pub response: f64,
}

/// Structure-tensor response with a Gaussian window of `window_sigma`.
pub fn harris_response(img: &GrayImage, k: f64, window_sigma: f64) -> Result<ResponseMap> {
    let grad = sobel_gradients(img)?;
    let (w, h) = (img.width(), img.height());
    // Sobel/8 gives derivatives in intensity units per pixel.
    let scale = 1.0 / 64.0;
    let mut ixx = vec![0.0; w * h];
    let mut iyy = vec![0.0; w * h];
    let mut ixy = vec![0.0; w * h];
    for i in 0..w * h {
        let gx = grad.gx.data()[i];
        let gy = grad.gy.data()[i];
        ixx[i] = gx * gx * scale;
        iyy[i] = gy * gy * scale;
        ixy[i] = gx * gy * scale;
    }
    let sxx = gaussian_blur(&GrayImage::from_vec(w, h, ixx)?, window_sigma)?;
    let syy = gaussian_blur(&GrayImage::from_vec(w, h, iyy)?, window_sigma)?;
    let sxy = gaussian_blur(&GrayImage::from_vec(w, h, ixy)?, window_sigma)?;
    let data = (0..w * h)
        .map(|i| {
            let (a, b, c) = (sxx.data()[i], syy.data()[i], sxy.data()[i]);
            let tr = a + b;
            a * b - c * c - k * tr * tr
        })
        .collect();
    Ok(ResponseMap { response: GrayImage::from_vec(w, h, data)? })
}

/// Local response maxima above `thresh`, greedily thinned so that no two
/// returned corners are closer than `min_dist`, strongest first. Positions
/// are refined to sub-pixel precision with a separable parabola fit.
pub fn harris_corners(img: &GrayImage, k: f64, window_sigma: f64, thresh: f64, min_dist: f64) -> Result<Vec<Corner>> {
    if img.width() < 3 || img.height() < 3 {
        return Err(Error::InvalidImage("harris needs at least 3x3".into()));
    }
    let map = harris_response(img, k, window_sigma)?;
    Ok(corners_from_response(&map, thresh, min_dist))
}

pub fn corners_from_response(map: &ResponseMap, thresh: f64, min_dist: f64) -> Vec<Corner> {
    let r = &map.response;
    let (w, h) = (r.width(), r.height());
    let mut peaks = Vec::new();
    for y in 1..h.saturating_sub(1) {
        for x in 1..w.saturating_sub(1) {
            let v = r.get(x, y);
            if v <= thresh || v <= 0.0 {
                continue;
            }
            let mut is_max = true;
            'n: for dy in -1isize..=1 {
                for dx in -1isize..=1 {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    let n = r.get((x as isize + dx) as usize, (y as isize + dy) as usize);
                    // strict on earlier neighbours keeps one pixel of a plateau
                    let earlier = dy < 0 || (dy == 0 && dx < 0);
                    if n > v || (earlier && n == v) {
                        is_max = false;
                        break 'n;
                    }
                }
            }
            if is_max {
                peaks.push(Corner { point: refine_peak(r, x, y), response: v });
            }
        }
    }
    peaks.sort_by(|a, b| {
        b.response.total_cmp(&a.response).then(a.point.y.total_cmp(&b.point.y)).then(a.point.x.total_cmp(&b.point.x))
    });
    let mut kept: Vec<Corner> = Vec::new();
    for c in peaks {
        if kept.iter().all(|k| k.point.distance(c.point) >= min_dist) {
            kept.push(c);
        }
    }
    kept
}

fn refine_peak(r: &GrayImage, x: usize, y: usize) -> Point {
    let offset = |lo: f64, mid: f64, hi: f64| {
        let denom = lo - 2.0 * mid + hi;
        if denom < 0.0 {
            (0.5 * (lo - hi) / denom).clamp(-0.5, 0.5)
        } else {
            0.0
        }
    };
    let dx = offset(r.get(x - 1, y), r.get(x, y), r.get(x + 1, y));
    let dy = offset(r.get(x, y - 1), r.get(x, y), r.get(x, y + 1));
    Point::new(x as f64 + dx, y as f64 + dy)
}
