use crate::error::{Error, Result};

use super::{sobel_gradients, GradientField, GrayImage};

/// Default hysteresis thresholds as fractions of the maximum gradient magnitude.
pub const CANNY_LOW_FRACTION: f64 = 0.08;
pub const CANNY_HIGH_FRACTION: f64 = 0.20;

/// Canny edge map (0 or 255) with absolute thresholds on Sobel magnitude.
pub fn canny(img: &GrayImage, low: f64, high: f64) -> Result<GrayImage> {
    let grad = sobel_gradients(img)?;
    canny_from_gradient(&grad, low, high)
}

/// Canny with thresholds relative to the image's strongest gradient.
pub fn canny_auto(img: &GrayImage) -> Result<GrayImage> {
    let grad = sobel_gradients(img)?;
    let max = grad.max_magnitude();
    canny_from_gradient(&grad, CANNY_LOW_FRACTION * max, CANNY_HIGH_FRACTION * max)
}

pub fn canny_from_gradient(grad: &GradientField, low: f64, high: f64) -> Result<GrayImage> {
    if !(low >= 0.0) || low > high {
        return Err(Error::InvalidParameter(format!(
            "canny thresholds must satisfy 0 <= low <= high (got {low}, {high})"
        )));
    }
    let (w, h) = (grad.width(), grad.height());
    let mag = grad.magnitude.data();
    let thin = non_max_suppress(grad);

    // 0 = none, 1 = weak, 2 = strong
    let mut class = vec![0u8; w * h];
    for i in 0..w * h {
        if thin[i] && mag[i] > 0.0 {
            if mag[i] >= high {
                class[i] = 2;
            } else if mag[i] >= low {
                class[i] = 1;
            }
        }
    }

    let mut out = vec![0.0; w * h];
    let mut stack: Vec<usize> = (0..w * h).filter(|&i| class[i] == 2).collect();
    for &i in &stack {
        out[i] = 255.0;
    }
    while let Some(i) = stack.pop() {
        let (x, y) = ((i % w) as isize, (i / w) as isize);
        for dy in -1..=1 {
            for dx in -1..=1 {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                let j = ny as usize * w + nx as usize;
                if class[j] == 1 && out[j] == 0.0 {
                    out[j] = 255.0;
                    stack.push(j);
                }
            }
        }
    }
    GrayImage::from_vec(w, h, out)
}

/// Keeps pixels that are maximal along their quantized gradient direction.
/// Ties keep the first pixel in scan order so plateaus thin to one pixel.
fn non_max_suppress(grad: &GradientField) -> Vec<bool> {
    let (w, h) = (grad.width(), grad.height());
    let mag = &grad.magnitude;
    let mut keep = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            let m = mag.get(x, y);
            if m == 0.0 {
                continue;
            }
            let angle = grad.gy.get(x, y).atan2(grad.gx.get(x, y)).to_degrees();
            let a = if angle < 0.0 { angle + 180.0 } else { angle };
            let (dx, dy): (isize, isize) = if !(22.5..157.5).contains(&a) {
                (1, 0)
            } else if a < 67.5 {
                (1, 1)
            } else if a < 112.5 {
                (0, 1)
            } else {
                (-1, 1)
            };
            let at = |sx: isize, sy: isize| {
                let (nx, ny) = (x as isize + sx, y as isize + sy);
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    0.0
                } else {
                    mag.get(nx as usize, ny as usize)
                }
            };
            let before = at(-dx, -dy);
            let after = at(dx, dy);
            keep[y * w + x] = m >= before && m > after;
        }
    }
    keep
}
