//! Pixel-level primitives: rasters, color conversion, convolution, gradients,
//! edges, corners and summed-area tables.
//!
//! All intermediate math is `f64`; quantization to 8 bits happens only on export.

mod canny;
mod gradient;
mod harris;
mod image;
mod integral;
mod kernel;
pub mod pnm;

pub use canny::{canny, canny_auto, canny_from_gradient, CANNY_HIGH_FRACTION, CANNY_LOW_FRACTION};
pub use gradient::{sobel_gradients, GradientField};
pub use harris::{
    corners_from_response, harris_corners, harris_response, Corner, ResponseMap, HARRIS_K, HARRIS_WINDOW_SIGMA,
};
pub use image::{rgb_to_ycbcr, to_grayscale, ycbcr_to_rgb, ColorImage, GrayImage, Point, Rect};
pub use integral::{integral_image, rect_sum, squared_integral_image, IntegralImage};
pub use kernel::{convolve, gaussian_blur, gaussian_kernel, gaussian_radius, Kernel};
