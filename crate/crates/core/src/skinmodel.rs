//! Training-free face and eye localization by YCbCr skin segmentation.
//!
//! Pixels whose full-range YCbCr value falls inside a fixed box are labelled
//! skin; small gaps are filled from the 8-neighbourhood; the best
//! face-proportioned skin cluster is taken as the face; the eyes are the
//! non-skin holes in its upper part. The method is coarse and is meant as a
//! region-of-interest finder, not for pupil work.

use crate::error::{Error, Result};
use crate::imgcore::{rgb_to_ycbcr, ColorImage, Rect};

/// Inclusive YCbCr bounds of the skin class.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SkinRange {
    pub y_min: f64,
    pub y_max: f64,
    pub cb_min: f64,
    pub cb_max: f64,
    pub cr_min: f64,
    pub cr_max: f64,
}

impl Default for SkinRange {
    fn default() -> Self {
        Self { y_min: 80.0, y_max: 240.0, cb_min: 105.0, cb_max: 135.0, cr_min: 135.0, cr_max: 165.0 }
    }
}

impl SkinRange {
    pub fn contains(&self, y: f64, cb: f64, cr: f64) -> bool {
        (self.y_min..=self.y_max).contains(&y)
            && (self.cb_min..=self.cb_max).contains(&cb)
            && (self.cr_min..=self.cr_max).contains(&cr)
    }
}

/// Binary plane, `true` = skin.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SkinMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl SkinMask {
    pub fn from_bits(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 || bits.len() != width * height {
            return Err(Error::InvalidImage(format!("{} bits do not form a {width}x{height} mask", bits.len())));
        }
        Ok(Self { width, height, bits })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> bool) -> Result<Self> {
        let bits = (0..width * height).map(|i| f(i % width, i / width)).collect();
        Self::from_bits(width, height, bits)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct FaceRegion {
    pub face: Rect,
    /// Left-to-right, at most two.
    pub eyes: Vec<Rect>,
    pub score: f64,
}

pub fn classify_skin(img: &ColorImage, range: &SkinRange) -> SkinMask {
    let bits = img
        .pixels()
        .map(|[r, g, b]| {
            let (y, cb, cr) = rgb_to_ycbcr(r as f64, g as f64, b as f64);
            range.contains(y, cb, cr)
        })
        .collect();
    SkinMask { width: img.width(), height: img.height(), bits }
}

/// Single pass: every 0 with at least `n` skin 8-neighbours (in the input) becomes 1.
pub fn fill_holes(mask: &SkinMask, n: u8) -> Result<SkinMask> {
    if n > 8 {
        return Err(Error::InvalidParameter(format!("neighbour count {n} exceeds 8")));
    }
    let (w, h) = (mask.width as isize, mask.height as isize);
    let mut out = mask.bits.clone();
    for y in 0..h {
        for x in 0..w {
            let i = (y * w + x) as usize;
            if mask.bits[i] {
                continue;
            }
            let mut count = 0u8;
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let (nx, ny) = (x + dx, y + dy);
                    if (dx != 0 || dy != 0)
                        && nx >= 0
                        && ny >= 0
                        && nx < w
                        && ny < h
                        && mask.bits[(ny * w + nx) as usize]
                    {
                        count += 1;
                    }
                }
            }
            if count >= n {
                out[i] = true;
            }
        }
    }
    Ok(SkinMask { width: mask.width, height: mask.height, bits: out })
}

/// Connected region summary.
#[derive(Clone, Copy, Debug)]
struct Component {
    x0: usize,
    y0: usize,
    x1: usize,
    y1: usize,
    area: usize,
    sum_y: f64,
}

impl Component {
    fn rect(&self) -> Rect {
        Rect { x: self.x0, y: self.y0, w: self.x1 - self.x0 + 1, h: self.y1 - self.y0 + 1 }
    }

    fn centroid_y(&self) -> f64 {
        self.sum_y / self.area as f64
    }
}

/// 4-connected components of pixels equal to `value` inside `roi`.
fn components(mask: &SkinMask, roi: Rect, value: bool) -> Vec<Component> {
    let mut seen = vec![false; roi.area()];
    let mut out = Vec::new();
    let mut stack = Vec::new();
    let local = |x: usize, y: usize| (y - roi.y) * roi.w + (x - roi.x);
    for sy in roi.y..roi.bottom() {
        for sx in roi.x..roi.right() {
            if seen[local(sx, sy)] || mask.get(sx, sy) != value {
                continue;
            }
            let mut c = Component { x0: sx, y0: sy, x1: sx, y1: sy, area: 0, sum_y: 0.0 };
            seen[local(sx, sy)] = true;
            stack.push((sx, sy));
            while let Some((x, y)) = stack.pop() {
                c.area += 1;
                c.sum_y += y as f64;
                c.x0 = c.x0.min(x);
                c.x1 = c.x1.max(x);
                c.y0 = c.y0.min(y);
                c.y1 = c.y1.max(y);
                let mut visit = |nx: usize, ny: usize| {
                    if !seen[local(nx, ny)] && mask.get(nx, ny) == value {
                        seen[local(nx, ny)] = true;
                        stack.push((nx, ny));
                    }
                };
                if x > roi.x {
                    visit(x - 1, y);
                }
                if x + 1 < roi.right() {
                    visit(x + 1, y);
                }
                if y > roi.y {
                    visit(x, y - 1);
                }
                if y + 1 < roi.bottom() {
                    visit(x, y + 1);
                }
            }
            out.push(c);
        }
    }
    out
}

pub const FACE_MIN_AREA_FRACTION: f64 = 0.02;
pub const FACE_MAX_AREA_FRACTION: f64 = 0.60;
pub const FACE_ASPECT_RANGE: (f64, f64) = (0.5, 1.1);
pub const FACE_IDEAL_ASPECT: f64 = 0.75;

/// Candidate score; zero for clusters outside the face size/shape gates.
fn face_score(c: &Component, frame_area: f64, mask_height: usize) -> f64 {
    let r = c.rect();
    let area_fraction = c.area as f64 / frame_area;
    let aspect = r.w as f64 / r.h as f64;
    if !(FACE_MIN_AREA_FRACTION..=FACE_MAX_AREA_FRACTION).contains(&area_fraction)
        || !(FACE_ASPECT_RANGE.0..=FACE_ASPECT_RANGE.1).contains(&aspect)
    {
        return 0.0;
    }
    let aspect_closeness = (1.0 - (aspect - FACE_IDEAL_ASPECT).abs() / FACE_IDEAL_ASPECT).max(0.0);
    let cy = r.center().y / mask_height as f64;
    let centrality = (1.0 - (cy - 0.5).abs() / 0.5).max(0.0);
    area_fraction * aspect_closeness * centrality
}

/// Best face-proportioned skin cluster, or `None` when no cluster passes the gates.
pub fn find_face(mask: &SkinMask, frame_area: f64) -> Option<FaceRegion> {
    let full = Rect { x: 0, y: 0, w: mask.width, h: mask.height };
    components(mask, full, true)
        .iter()
        .map(|c| (c.rect(), face_score(c, frame_area, mask.height)))
        .filter(|&(_, s)| s > 0.0)
        // earliest (top-left) wins ties
        .fold(None, |best: Option<(Rect, f64)>, cur| match best {
            Some(b) if b.1 >= cur.1 => Some(b),
            _ => Some(cur),
        })
        .map(|(face, score)| FaceRegion { face, eyes: Vec::new(), score })
}

/// Upper part of the face searched for eye holes.
pub const EYE_SEARCH_FRACTION: f64 = 0.6;

/// Non-skin holes in the upper face, at most two, left to right.
pub fn find_eyes(mask: &SkinMask, face: Rect) -> Vec<Rect> {
    if !face.fits_in(mask.width, mask.height) {
        return Vec::new();
    }
    let mut holes: Vec<Component> = components(mask, face, false)
        .into_iter()
        .filter(|c| {
            let r = c.rect();
            let touches_border =
                r.x == face.x || r.y == face.y || r.right() == face.right() || r.bottom() == face.bottom();
            let aspect = r.w as f64 / r.h as f64;
            !touches_border
                && c.area >= 4
                && c.centroid_y() - (face.y as f64) < EYE_SEARCH_FRACTION * face.h as f64
                && r.w as f64 <= 0.5 * face.w as f64
                && r.h as f64 <= 0.35 * face.h as f64
                && (0.5..=6.0).contains(&aspect)
        })
        .collect();
    holes.sort_by(|a, b| b.area.cmp(&a.area).then(a.x0.cmp(&b.x0)));
    let mut picked: Vec<Rect> = Vec::new();
    for h in holes {
        let r = h.rect();
        if picked.iter().all(|p| r.right() <= p.x || p.right() <= r.x) {
            picked.push(r);
        }
        if picked.len() == 2 {
            break;
        }
    }
    picked.sort_by_key(|r| r.x);
    picked
}

/// Processing resolution cap (long side) for the full skin pipeline.
pub const SKIN_MAX_SIDE: usize = 320;
pub const DEFAULT_FILL_NEIGHBORS: u8 = 5;

/// Downsample → classify → fill → face → eyes, rects returned in source coordinates.
pub fn locate_face(img: &ColorImage, range: &SkinRange) -> Option<FaceRegion> {
    let long_side = img.width().max(img.height());
    let factor = long_side.div_ceil(SKIN_MAX_SIDE).max(1);
    let small = img.downsample(factor);
    let mask = fill_holes(&classify_skin(&small, range), DEFAULT_FILL_NEIGHBORS).ok()?;
    let frame_area = (mask.width * mask.height) as f64;
    let mut region = find_face(&mask, frame_area)?;
    region.eyes = find_eyes(&mask, region.face);
    let s = factor as f64;
    let (w, h) = (img.width(), img.height());
    region.face = region.face.scaled(s, w, h);
    region.eyes = region.eyes.iter().map(|e| e.scaled(s, w, h)).collect();
    Some(region)
}
