use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point in pixel coordinates. Pixel `(i, j)` has its center at `(i, j)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl std::ops::Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl std::ops::Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl std::ops::Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

/// Axis-aligned pixel rectangle, top-left anchored.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl Rect {
    pub fn new(x: usize, y: usize, w: usize, h: usize) -> Result<Self> {
        if w == 0 || h == 0 {
            return Err(Error::InvalidParameter(format!("empty rect {w}x{h}")));
        }
        Ok(Self { x, y, w, h })
    }

    pub fn right(&self) -> usize {
        self.x + self.w
    }

    pub fn bottom(&self) -> usize {
        self.y + self.h
    }

    pub fn area(&self) -> usize {
        self.w * self.h
    }

    pub fn center(&self) -> Point {
        Point::new(self.x as f64 + (self.w as f64 - 1.0) / 2.0, self.y as f64 + (self.h as f64 - 1.0) / 2.0)
    }

    pub fn fits_in(&self, width: usize, height: usize) -> bool {
        self.right() <= width && self.bottom() <= height
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        other.x >= self.x && other.y >= self.y && other.right() <= self.right() && other.bottom() <= self.bottom()
    }

    pub fn intersection_area(&self, other: &Rect) -> usize {
        let x0 = self.x.max(other.x);
        let y0 = self.y.max(other.y);
        let x1 = self.right().min(other.right());
        let y1 = self.bottom().min(other.bottom());
        x1.saturating_sub(x0) * y1.saturating_sub(y0)
    }

    pub fn iou(&self, other: &Rect) -> f64 {
        let inter = self.intersection_area(other) as f64;
        let union = (self.area() + other.area()) as f64 - inter;
        if union <= 0.0 {
            0.0
        } else {
            inter / union
        }
    }

    /// Grows the rect by the given margins, clipped to `width × height`.
    pub fn padded(&self, dx: usize, dy: usize, width: usize, height: usize) -> Rect {
        let x0 = self.x.saturating_sub(dx);
        let y0 = self.y.saturating_sub(dy);
        let x1 = (self.right() + dx).min(width);
        let y1 = (self.bottom() + dy).min(height);
        Rect { x: x0, y: y0, w: x1.saturating_sub(x0).max(1), h: y1.saturating_sub(y0).max(1) }
    }

    /// Scales a rect by `s`, rounding outward to whole pixels and clipping.
    pub fn scaled(&self, s: f64, width: usize, height: usize) -> Rect {
        let x0 = ((self.x as f64) * s).floor().max(0.0) as usize;
        let y0 = ((self.y as f64) * s).floor().max(0.0) as usize;
        let x1 = ((self.right() as f64) * s).ceil() as usize;
        let y1 = ((self.bottom() as f64) * s).ceil() as usize;
        let x1 = x1.min(width);
        let y1 = y1.min(height);
        Rect {
            x: x0.min(width.saturating_sub(1)),
            y: y0.min(height.saturating_sub(1)),
            w: x1.saturating_sub(x0).max(1),
            h: y1.saturating_sub(y0).max(1),
        }
    }
}

/// Single-channel raster with real-valued intensities (nominally 0..255).
#[derive(Clone, Debug, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        Self::filled(width, height, 0.0)
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!("zero-sized image {width}x{height}")));
        }
        Ok(Self { width, height, data: vec![value; width * height] })
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || data.len() != width * height {
            return Err(Error::InvalidImage(format!("{} samples do not form a {width}x{height} image", data.len())));
        }
        Ok(Self { width, height, data })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let mut img = Self::new(width, height)?;
        for y in 0..height {
            for x in 0..width {
                img.data[y * width + x] = f(x, y);
            }
        }
        Ok(img)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.data[y * self.width + x] = v;
    }

    /// Pixel access with edge replication for out-of-range coordinates.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> f64 {
        let xc = x.clamp(0, self.width as isize - 1) as usize;
        let yc = y.clamp(0, self.height as isize - 1) as usize;
        self.data[yc * self.width + xc]
    }

    /// Bilinear sample; `None` outside the pixel-center hull.
    pub fn sample(&self, x: f64, y: f64) -> Option<f64> {
        if !(x >= 0.0 && y >= 0.0) || x > (self.width - 1) as f64 || y > (self.height - 1) as f64 {
            return None;
        }
        let x0 = x.floor() as usize;
        let y0 = y.floor() as usize;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let fx = x - x0 as f64;
        let fy = y - y0 as f64;
        let top = self.get(x0, y0) * (1.0 - fx) + self.get(x1, y0) * fx;
        let bot = self.get(x0, y1) * (1.0 - fx) + self.get(x1, y1) * fx;
        Some(top * (1.0 - fy) + bot * fy)
    }

    pub fn crop(&self, r: Rect) -> Result<GrayImage> {
        if !r.fits_in(self.width, self.height) {
            return Err(Error::OutOfBounds(format!("crop {r:?} outside {}x{}", self.width, self.height)));
        }
        let mut data = Vec::with_capacity(r.area());
        for y in r.y..r.bottom() {
            data.extend_from_slice(&self.data[y * self.width + r.x..y * self.width + r.right()]);
        }
        GrayImage::from_vec(r.w, r.h, data)
    }

    /// Bilinear resample to an exact size.
    pub fn resize(&self, width: usize, height: usize) -> Result<GrayImage> {
        let sx = self.width as f64 / width as f64;
        let sy = self.height as f64 / height as f64;
        GrayImage::from_fn(width, height, |x, y| {
            let fx = ((x as f64 + 0.5) * sx - 0.5).clamp(0.0, (self.width - 1) as f64);
            let fy = ((y as f64 + 0.5) * sy - 0.5).clamp(0.0, (self.height - 1) as f64);
            self.sample(fx, fy).unwrap_or(0.0)
        })
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    /// Nearest-rank percentile, `p` in `0..=100`.
    pub fn percentile(&self, p: f64) -> f64 {
        let mut sorted = self.data.clone();
        sorted.sort_by(f64::total_cmp);
        let rank = ((p / 100.0) * (sorted.len() - 1) as f64).round() as usize;
        sorted[rank.min(sorted.len() - 1)]
    }

    /// Histogram equalization over 256 intensity bins, output in 0..=255.
    pub fn equalized(&self) -> GrayImage {
        let bin = |v: f64| v.round().clamp(0.0, 255.0) as usize;
        let mut hist = [0usize; 256];
        for &v in &self.data {
            hist[bin(v)] += 1;
        }
        let mut cdf = [0usize; 256];
        let mut acc = 0;
        for (c, h) in cdf.iter_mut().zip(hist.iter()) {
            acc += h;
            *c = acc;
        }
        let n = self.data.len();
        let cdf_min = cdf.iter().copied().find(|&c| c > 0).unwrap_or(0);
        let denom = (n - cdf_min) as f64;
        let data = self
            .data
            .iter()
            .map(|&v| if denom <= 0.0 { v } else { (cdf[bin(v)] - cdf_min) as f64 / denom * 255.0 })
            .collect();
        GrayImage { width: self.width, height: self.height, data }
    }

    /// Quantizes to 8-bit, clamping to 0..=255.
    pub fn to_u8(&self) -> Vec<u8> {
        self.data.iter().map(|&v| v.round().clamp(0.0, 255.0) as u8).collect()
    }
}

/// Interleaved 8-bit RGB raster.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColorImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl ColorImage {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        Self::from_vec(width, height, vec![0; 3 * width * height])
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 || data.len() != 3 * width * height {
            return Err(Error::InvalidImage(format!("{} bytes do not form a {width}x{height} RGB image", data.len())));
        }
        Ok(Self { width, height, data })
    }

    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Result<Self> {
        let mut img = Self::new(width, height)?;
        for px in img.data.chunks_exact_mut(3) {
            px.copy_from_slice(&rgb);
        }
        Ok(img)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        let i = 3 * (y * self.width + x);
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        let i = 3 * (y * self.width + x);
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    pub fn pixels(&self) -> impl Iterator<Item = [u8; 3]> + '_ {
        self.data.chunks_exact(3).map(|p| [p[0], p[1], p[2]])
    }

    /// Box-filtered downsample by an integer factor (partial edge blocks averaged).
    pub fn downsample(&self, factor: usize) -> ColorImage {
        if factor <= 1 {
            return self.clone();
        }
        let w = self.width.div_ceil(factor);
        let h = self.height.div_ceil(factor);
        let mut out = vec![0u8; 3 * w * h];
        for oy in 0..h {
            for ox in 0..w {
                let mut acc = [0u32; 3];
                let mut n = 0u32;
                for y in oy * factor..((oy + 1) * factor).min(self.height) {
                    for x in ox * factor..((ox + 1) * factor).min(self.width) {
                        let p = self.get(x, y);
                        for c in 0..3 {
                            acc[c] += p[c] as u32;
                        }
                        n += 1;
                    }
                }
                for c in 0..3 {
                    out[3 * (oy * w + ox) + c] = ((acc[c] + n / 2) / n) as u8;
                }
            }
        }
        ColorImage { width: w, height: h, data: out }
    }
}

/// Full-range BT.601 luma of an RGB image.
pub fn to_grayscale(img: &ColorImage) -> GrayImage {
    let data = img.pixels().map(|[r, g, b]| 0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64).collect();
    GrayImage { width: img.width, height: img.height, data }
}

/// Full-range (JPEG) BT.601 conversion; chroma centered at 128, outputs clamped to 0..=255.
pub fn rgb_to_ycbcr(r: f64, g: f64, b: f64) -> (f64, f64, f64) {
    let y = 0.299 * r + 0.587 * g + 0.114 * b;
    let cb = 128.0 - 0.168_736 * r - 0.331_264 * g + 0.5 * b;
    let cr = 128.0 + 0.5 * r - 0.418_688 * g - 0.081_312 * b;
    (y.clamp(0.0, 255.0), cb.clamp(0.0, 255.0), cr.clamp(0.0, 255.0))
}

/// Inverse of [`rgb_to_ycbcr`], unclamped.
pub fn ycbcr_to_rgb(y: f64, cb: f64, cr: f64) -> (f64, f64, f64) {
    let r = y + 1.402 * (cr - 128.0);
    let g = y - 0.344_136 * (cb - 128.0) - 0.714_136 * (cr - 128.0);
    let b = y + 1.772 * (cb - 128.0);
    (r, g, b)
}
