use crate::error::{Error, Result};

use super::{GrayImage, Rect};

/// Summed-area table of size `(w+1) × (h+1)` with a zero first row and column.
#[derive(Clone, Debug, PartialEq)]
pub struct IntegralImage {
    width: usize,
    height: usize,
    table: Vec<f64>,
}

impl IntegralImage {
    /// Dimensions of the source image.
    pub fn source_size(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    /// Cell `(x, y)` holds the sum over source pixels `[0, x) × [0, y)`.
    #[inline]
    pub fn cell(&self, x: usize, y: usize) -> f64 {
        self.table[y * (self.width + 1) + x]
    }

    /// Four-lookup sum without bounds validation.
    #[inline]
    pub(crate) fn sum_unchecked(&self, x: usize, y: usize, w: usize, h: usize) -> f64 {
        let stride = self.width + 1;
        let t = &self.table;
        t[(y + h) * stride + x + w] - t[y * stride + x + w] - t[(y + h) * stride + x] + t[y * stride + x]
    }
}

fn build(img: &GrayImage, f: impl Fn(f64) -> f64) -> IntegralImage {
    let (w, h) = (img.width(), img.height());
    let stride = w + 1;
    let mut table = vec![0.0; stride * (h + 1)];
    for y in 0..h {
        let mut row = 0.0;
        for x in 0..w {
            row += f(img.get(x, y));
            table[(y + 1) * stride + x + 1] = table[y * stride + x + 1] + row;
        }
    }
    IntegralImage { width: w, height: h, table }
}

pub fn integral_image(img: &GrayImage) -> IntegralImage {
    build(img, |v| v)
}

/// Summed-area table of squared intensities (for window variance).
pub fn squared_integral_image(img: &GrayImage) -> IntegralImage {
    build(img, |v| v * v)
}

pub fn rect_sum(ii: &IntegralImage, r: Rect) -> Result<f64> {
    if r.w == 0 || r.h == 0 || !r.fits_in(ii.width, ii.height) {
        return Err(Error::OutOfBounds(format!("rect {r:?} outside {}x{}", ii.width, ii.height)));
    }
    Ok(ii.sum_unchecked(r.x, r.y, r.w, r.h))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_ones() {
        let ii = integral_image(&GrayImage::filled(7, 5, 1.0).unwrap());
        assert_eq!(ii.cell(7, 5), 35.0);
        assert_eq!(rect_sum(&ii, Rect::new(0, 0, 7, 5).unwrap()).unwrap(), 35.0);
    }

    #[test]
    fn single_pixel() {
        let ii = integral_image(&GrayImage::filled(1, 1, 9.0).unwrap());
        assert_eq!([ii.cell(0, 0), ii.cell(1, 0), ii.cell(0, 1), ii.cell(1, 1)], [0.0, 0.0, 0.0, 9.0]);
        assert_eq!(rect_sum(&ii, Rect::new(0, 0, 1, 1).unwrap()).unwrap(), 9.0);
    }

    #[test]
    fn out_of_bounds() {
        let ii = integral_image(&GrayImage::filled(4, 4, 1.0).unwrap());
        assert!(rect_sum(&ii, Rect::new(2, 2, 3, 1).unwrap()).is_err());
    }

    #[test]
    fn squared_table() {
        let img = GrayImage::from_vec(2, 1, vec![3.0, 4.0]).unwrap();
        assert_eq!(squared_integral_image(&img).cell(2, 1), 25.0);
    }
}
