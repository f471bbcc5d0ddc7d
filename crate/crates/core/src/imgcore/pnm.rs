//! Binary PGM (P5) and PPM (P6) codecs, 8-bit only.

use std::io::{Read, Write};

use crate::error::{Error, Result};

use super::{ColorImage, GrayImage};

pub fn write_pgm<W: Write>(mut out: W, img: &GrayImage) -> Result<()> {
    write!(out, "P5\n{} {}\n255\n", img.width(), img.height())?;
    out.write_all(&img.to_u8())?;
    Ok(())
}

pub fn write_ppm<W: Write>(mut out: W, img: &ColorImage) -> Result<()> {
    write!(out, "P6\n{} {}\n255\n", img.width(), img.height())?;
    out.write_all(img.data())?;
    Ok(())
}

/// Decoded PNM payload.
pub enum Pnm {
    Gray(GrayImage),
    Color(ColorImage),
}

pub fn read_pnm<R: Read>(mut input: R) -> Result<Pnm> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    decode_pnm(&bytes)
}

pub fn decode_pnm(bytes: &[u8]) -> Result<Pnm> {
    let mut pos = 0;
    let magic = next_token(bytes, &mut pos)?;
    let width = parse_dim(bytes, &mut pos)?;
    let height = parse_dim(bytes, &mut pos)?;
    let maxval = parse_dim(bytes, &mut pos)?;
    if maxval != 255 {
        return Err(Error::Format(format!("unsupported maxval {maxval}")));
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    let channels = match magic.as_str() {
        "P5" => 1,
        "P6" => 3,
        other => return Err(Error::Format(format!("unsupported PNM magic {other:?}"))),
    };
    let need = width * height * channels;
    let raster =
        bytes.get(pos..pos + need).ok_or_else(|| Error::Format(format!("raster truncated: need {need} bytes")))?;
    Ok(if channels == 1 {
        Pnm::Gray(GrayImage::from_vec(width, height, raster.iter().map(|&b| b as f64).collect())?)
    } else {
        Pnm::Color(ColorImage::from_vec(width, height, raster.to_vec())?)
    })
}

fn next_token(bytes: &[u8], pos: &mut usize) -> Result<String> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        return Err(Error::Format("PNM header truncated".into()));
    }
    Ok(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
}

fn parse_dim(bytes: &[u8], pos: &mut usize) -> Result<usize> {
    let tok = next_token(bytes, pos)?;
    tok.parse().map_err(|_| Error::Format(format!("bad PNM header field {tok:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ppm_roundtrip_is_bit_exact() {
        let data: Vec<u8> = (0..4 * 3 * 3).map(|i| (i * 7 % 256) as u8).collect();
        let img = ColorImage::from_vec(4, 3, data).unwrap();
        let mut buf = Vec::new();
        write_ppm(&mut buf, &img).unwrap();
        assert!(buf.starts_with(b"P6\n4 3\n255\n"));
        match decode_pnm(&buf).unwrap() {
            Pnm::Color(back) => assert_eq!(back, img),
            Pnm::Gray(_) => panic!("expected color"),
        }
    }

    #[test]
    fn pgm_with_comment() {
        let mut buf = b"P5\n# made by hand\n2 2\n255\n".to_vec();
        buf.extend_from_slice(&[0, 10, 200, 255]);
        match decode_pnm(&buf).unwrap() {
            Pnm::Gray(g) => assert_eq!(g.data(), &[0.0, 10.0, 200.0, 255.0]),
            Pnm::Color(_) => panic!("expected gray"),
        }
    }

    #[test]
    fn truncated_raster() {
        assert!(decode_pnm(b"P6\n2 2\n255\n\x00\x01").is_err());
        assert!(decode_pnm(b"P3\n1 1\n255\n0 0 0").is_err());
    }
}
