//! Binary PPM (P6) and PGM (P5) with 8-bit samples, `value = round(v·255)`.

use std::path::Path;

use super::{Grid, RgbGrid};
use crate::{Error, Result};

fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

fn header(magic: &str, g_rows: usize, g_cols: usize) -> Vec<u8> {
    format!("{magic}\n{g_cols} {g_rows}\n255\n").into_bytes()
}

pub fn encode_ppm(grid: &RgbGrid) -> Vec<u8> {
    let mut out = header("P6", grid.rows(), grid.cols());
    out.reserve(grid.data().len() * 3);
    for px in grid.data() {
        out.extend(px.iter().map(|&v| quantize(v)));
    }
    out
}

pub fn encode_pgm(grid: &Grid<f64>) -> Vec<u8> {
    let mut out = header("P5", grid.rows(), grid.cols());
    out.extend(grid.data().iter().map(|&v| quantize(v)));
    out
}

pub fn write_ppm(grid: &RgbGrid, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_ppm(grid)).map_err(|e| Error::io(path, e))
}

pub fn write_pgm(grid: &Grid<f64>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_pgm(grid)).map_err(|e| Error::io(path, e))
}

/// Splits a netpbm header into `(magic, width, height, payload offset)`.
fn parse_header(bytes: &[u8]) -> Result<(String, usize, usize, usize)> {
    let mut tokens = Vec::with_capacity(4);
    let mut i = 0;
    while tokens.len() < 4 {
        while i < bytes.len() && (bytes[i].is_ascii_whitespace() || bytes[i] == b'#') {
            if bytes[i] == b'#' {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            } else {
                i += 1;
            }
        }
        let start = i;
        while i < bytes.len() && !bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        if start == i {
            return Err(Error::Image("truncated header".into()));
        }
        tokens.push(String::from_utf8_lossy(&bytes[start..i]).into_owned());
    }
    // exactly one whitespace byte separates the header from the payload
    if i >= bytes.len() {
        return Err(Error::Image("missing payload".into()));
    }
    let num = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| Error::Image(format!("bad header field {s:?}")))
    };
    let (w, h, maxval) = (num(&tokens[1])?, num(&tokens[2])?, num(&tokens[3])?);
    if maxval != 255 {
        return Err(Error::Image(format!("unsupported maxval {maxval}")));
    }
    Ok((tokens[0].clone(), w, h, i + 1))
}

pub fn decode_ppm(bytes: &[u8]) -> Result<RgbGrid> {
    let (magic, w, h, off) = parse_header(bytes)?;
    if magic != "P6" {
        return Err(Error::Image(format!("expected P6, found {magic}")));
    }
    let payload = &bytes[off..];
    if payload.len() != w * h * 3 {
        return Err(Error::Image(format!(
            "payload has {} bytes, expected {}",
            payload.len(),
            w * h * 3
        )));
    }
    let data = payload
        .chunks_exact(3)
        .map(|p| {
            [
                p[0] as f64 / 255.0,
                p[1] as f64 / 255.0,
                p[2] as f64 / 255.0,
            ]
        })
        .collect();
    Ok(Grid::from_vec(h, w, data))
}

pub fn decode_pgm(bytes: &[u8]) -> Result<Grid<f64>> {
    let (magic, w, h, off) = parse_header(bytes)?;
    if magic != "P5" {
        return Err(Error::Image(format!("expected P5, found {magic}")));
    }
    let payload = &bytes[off..];
    if payload.len() != w * h {
        return Err(Error::Image(format!(
            "payload has {} bytes, expected {}",
            payload.len(),
            w * h
        )));
    }
    Ok(Grid::from_vec(
        h,
        w,
        payload.iter().map(|&b| b as f64 / 255.0).collect(),
    ))
}

pub fn read_ppm(path: impl AsRef<Path>) -> Result<RgbGrid> {
    let path = path.as_ref();
    decode_ppm(&std::fs::read(path).map_err(|e| Error::io(path, e))?)
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<Grid<f64>> {
    let path = path.as_ref();
    decode_pgm(&std::fs::read(path).map_err(|e| Error::io(path, e))?)
}
