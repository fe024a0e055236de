//! Binary PGM (P5) reader and writer, 8-bit only.

use std::path::Path;

use super::image::Image;
use crate::error::{Error, Result};

/// Decodes a P5 image. The header is `P5`, width, height and maxval 255,
/// separated by single or repeated whitespace, followed by exactly one
/// whitespace byte and `width * height` raster bytes. Comments are rejected.
pub fn decode_pgm(bytes: &[u8]) -> std::result::Result<Image, String> {
    let mut pos = 0;
    let mut fields = [0usize; 3];

    let magic = next_token(bytes, &mut pos)?;
    if magic != b"P5" {
        return Err(format!(
            "not a binary PGM (magic '{}')",
            String::from_utf8_lossy(magic)
        ));
    }
    for (field, name) in fields.iter_mut().zip(["width", "height", "maxval"]) {
        let tok = next_token(bytes, &mut pos)?;
        *field = std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| format!("invalid {name} '{}'", String::from_utf8_lossy(tok)))?;
    }
    let [width, height, maxval] = fields;
    if maxval != 255 {
        return Err(format!("unsupported maxval {maxval}, expected 255"));
    }
    if width == 0 || height == 0 {
        return Err("zero image dimension".into());
    }
    // single whitespace byte terminates the header
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err("truncated header".into()),
    }
    let raster = &bytes[pos..];
    let need = width * height;
    if raster.len() < need {
        return Err(format!("raster has {} bytes, expected {need}", raster.len()));
    }
    Image::from_u8(width, height, &raster[..need]).map_err(|e| e.to_string())
}

fn next_token<'a>(bytes: &'a [u8], pos: &mut usize) -> std::result::Result<&'a [u8], String> {
    while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if bytes.get(*pos) == Some(&b'#') {
        return Err("PGM comments are not supported".into());
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        return Err("truncated header".into());
    }
    Ok(&bytes[start..*pos])
}

pub fn read_pgm(path: &Path) -> Result<Image> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pgm(&bytes).map_err(|message| Error::InvalidImage {
        path: path.to_path_buf(),
        message,
    })
}

pub fn encode_pgm(img: &Image) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend(img.to_u8());
    out
}

pub fn write_pgm(path: &Path, img: &Image) -> Result<()> {
    std::fs::write(path, encode_pgm(img)).map_err(|e| Error::io(path, e))
}
