use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::imgcore::{GradientField, GrayImage};

use super::CircleHypothesis;

/// Gradient-directed circle Hough transform.
///
/// Every pixel with a positive edge value votes, with weight `value / 255`,
/// at distance r along both directions of its gradient for each integer
/// r in `r_min..=r_max`. Accumulator slices are normalized by the
/// circumference 2πr; a hypothesis scores the normalized votes of the
/// 3×3×3 patch around its peak, so a complete one-pixel outline scores about 1.
/// Peaks are 3×3×3 local maxima; ties go to smaller r, then top-left.
/// Centers are refined to sub-pixel precision by a 3×3 centroid, radii by a
/// parabola through neighboring slices.
pub fn hough_circles(
    edges: &GrayImage,
    gradient: &GradientField,
    r_min: usize,
    r_max: usize,
    top_k: usize,
) -> Result<Vec<CircleHypothesis>> {
    if r_min < 1 || r_min > r_max {
        return Err(Error::InvalidParameter(format!("radius range {r_min}..={r_max} is invalid")));
    }
    let (w, h) = (edges.width(), edges.height());
    if gradient.width() != w || gradient.height() != h {
        return Err(Error::InvalidParameter(format!(
            "gradient {}x{} does not match edge map {w}x{h}",
            gradient.width(),
            gradient.height()
        )));
    }
    let nr = r_max - r_min + 1;
    let plane = w * h;
    let mut acc = vec![0.0f64; nr * plane];
    for y in 0..h {
        for x in 0..w {
            let e = edges.get(x, y);
            let m = gradient.magnitude.get(x, y);
            if e <= 0.0 || m <= 0.0 {
                continue;
            }
            let weight = e / 255.0;
            let (ux, uy) = (gradient.gx.get(x, y) / m, gradient.gy.get(x, y) / m);
            for (ri, r) in (r_min..=r_max).enumerate() {
                for s in [-1.0, 1.0] {
                    let cx = (x as f64 + s * r as f64 * ux).round();
                    let cy = (y as f64 + s * r as f64 * uy).round();
                    if cx >= 0.0 && cy >= 0.0 && (cx as usize) < w && (cy as usize) < h {
                        acc[ri * plane + cy as usize * w + cx as usize] += weight;
                    }
                }
            }
        }
    }
    for (ri, r) in (r_min..=r_max).enumerate() {
        let norm = 1.0 / (TAU * r as f64);
        acc[ri * plane..(ri + 1) * plane].iter_mut().for_each(|v| *v *= norm);
    }

    let at = |ri: usize, x: usize, y: usize| acc[ri * plane + y * w + x];
    let order = |a: &(f64, usize, usize, usize), b: &(f64, usize, usize, usize)| {
        b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.3.cmp(&b.3)).then(a.2.cmp(&b.2))
    };
    let mut peaks: Vec<(f64, usize, usize, usize)> = Vec::new();
    // k-th best score seen so far; lower cells are skipped
    let mut floor = 0.0;
    if top_k > 0 {
        for ri in 0..nr {
            for y in 0..h {
                for x in 0..w {
                    let v = at(ri, x, y);
                    if v <= 0.0 || v < floor || !is_peak(&at, ri, x, y, nr, w, h, v) {
                        continue;
                    }
                    peaks.push((v, ri, x, y));
                    if peaks.len() >= 2 * top_k {
                        peaks.sort_by(order);
                        peaks.truncate(top_k);
                        floor = peaks[top_k - 1].0;
                    }
                }
            }
        }
    }
    peaks.sort_by(order);
    peaks.truncate(top_k);
    // votes scatter over neighboring cells; the reported score sums the 3x3x3 patch

    let mut out: Vec<CircleHypothesis> = peaks
        .into_iter()
        .map(|(v, ri, x, y)| {
            let (mut sw, mut sx, mut sy) = (0.0, 0.0, 0.0);
            let mut support = 0.0;
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                    if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                        continue;
                    }
                    let (nx, ny) = (nx as usize, ny as usize);
                    let u = at(ri, nx, ny);
                    sw += u;
                    sx += u * dx as f64;
                    sy += u * dy as f64;
                    for rj in ri.saturating_sub(1)..=(ri + 1).min(nr - 1) {
                        support += at(rj, nx, ny);
                    }
                }
            }
            let mut r = (r_min + ri) as f64;
            if ri > 0 && ri + 1 < nr {
                let (a, b) = (at(ri - 1, x, y), at(ri + 1, x, y));
                let denom = a - 2.0 * v + b;
                if denom < 0.0 {
                    r += (0.5 * (a - b) / denom).clamp(-0.5, 0.5);
                }
            }
            CircleHypothesis { cx: x as f64 + sx / sw, cy: y as f64 + sy / sw, r, score: support }
        })
        .collect();
    out.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.r.total_cmp(&b.r)));
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn is_peak(
    at: &impl Fn(usize, usize, usize) -> f64,
    ri: usize,
    x: usize,
    y: usize,
    nr: usize,
    w: usize,
    h: usize,
    v: f64,
) -> bool {
    for dr in -1i64..=1 {
        for dy in -1i64..=1 {
            for dx in -1i64..=1 {
                if dr == 0 && dy == 0 && dx == 0 {
                    continue;
                }
                let (nr_, ny, nx) = (ri as i64 + dr, y as i64 + dy, x as i64 + dx);
                if nr_ < 0 || ny < 0 || nx < 0 || nr_ >= nr as i64 || ny >= h as i64 || nx >= w as i64 {
                    continue;
                }
                let u = at(nr_ as usize, nx as usize, ny as usize);
                // equal neighbors earlier in (r, y, x) order win the tie
                if u > v || (u == v && (dr, dy, dx) < (0, 0, 0)) {
                    return false;
                }
            }
        }
    }
    true
}
