//! PNG and base64 framing for images sent over the wire.

use std::io::Cursor;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;

use crate::error::{Error, Result};
use crate::imgcore::pnm::{decode_pnm, write_ppm, Pnm};
use crate::imgcore::{ColorImage, GrayImage};
use std::path::Path;

fn png_err(e: impl std::fmt::Display) -> Error {
    Error::Format(format!("png: {e}"))
}

/// Decodes any 8- or 16-bit PNG (gray, gray+alpha, RGB, RGBA, palette) to RGB.
/// Alpha is dropped, not composited.
pub fn decode_png(bytes: &[u8]) -> Result<ColorImage> {
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::EXPAND | png::Transformations::STRIP_16);
    let mut reader = decoder.read_info().map_err(png_err)?;
    let size = reader.output_buffer_size().ok_or_else(|| png_err("image too large"))?;
    let mut buf = vec![0u8; size];
    let info = reader.next_frame(&mut buf).map_err(png_err)?;
    let (w, h) = (info.width as usize, info.height as usize);
    let buf = &buf[..info.buffer_size()];
    let rgb: Vec<u8> = match info.color_type {
        png::ColorType::Rgb => buf.to_vec(),
        png::ColorType::Rgba => buf.chunks_exact(4).flat_map(|p| [p[0], p[1], p[2]]).collect(),
        png::ColorType::Grayscale => buf.iter().flat_map(|&v| [v, v, v]).collect(),
        png::ColorType::GrayscaleAlpha => buf.chunks_exact(2).flat_map(|p| [p[0], p[0], p[0]]).collect(),
        png::ColorType::Indexed => return Err(png_err("palette was not expanded")),
    };
    ColorImage::from_vec(w, h, rgb)
}

pub fn encode_png(img: &ColorImage) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, img.width() as u32, img.height() as u32);
        enc.set_color(png::ColorType::Rgb);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc.write_header().map_err(png_err)?;
        writer.write_image_data(img.data()).map_err(png_err)?;
        writer.finish().map_err(png_err)?;
    }
    Ok(out)
}

/// Accepts bare base64 or a `data:image/png;base64,` URL.
pub fn decode_base64_png(text: &str) -> Result<ColorImage> {
    let payload = match text.split_once(',') {
        Some((head, rest)) if head.starts_with("data:") => rest,
        _ => text,
    };
    let bytes = STANDARD.decode(payload.trim()).map_err(|e| Error::Format(format!("base64: {e}")))?;
    decode_png(&bytes)
}

pub fn encode_base64_png(img: &ColorImage) -> Result<String> {
    Ok(STANDARD.encode(encode_png(img)?))
}

fn gray_to_color(g: &GrayImage) -> Result<ColorImage> {
    ColorImage::from_vec(g.width(), g.height(), g.to_u8().into_iter().flat_map(|v| [v, v, v]).collect())
}

/// Loads PNG, PPM or PGM, sniffed from the file contents.
pub fn load_image(path: impl AsRef<Path>) -> Result<ColorImage> {
    let bytes = std::fs::read(path)?;
    if bytes.starts_with(b"\x89PNG") {
        decode_png(&bytes)
    } else {
        match decode_pnm(&bytes)? {
            Pnm::Color(c) => Ok(c),
            Pnm::Gray(g) => gray_to_color(&g),
        }
    }
}

/// Writes PNG unless the extension is `.ppm`.
pub fn save_image(path: impl AsRef<Path>, img: &ColorImage) -> Result<()> {
    let path = path.as_ref();
    let is_ppm = path.extension().and_then(|e| e.to_str()).is_some_and(|e| e.eq_ignore_ascii_case("ppm"));
    if is_ppm {
        write_ppm(std::io::BufWriter::new(std::fs::File::create(path)?), img)
    } else {
        Ok(std::fs::write(path, encode_png(img)?)?)
    }
}
