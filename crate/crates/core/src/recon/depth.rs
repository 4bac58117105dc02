use std::io::Write;
use std::path::{Path, PathBuf};

use super::ReconError;
use crate::imageproc::pgm::{parse_dims, parse_header};
use crate::imageproc::GrayImage;

/// Row-major depth in model units; values `<= 0` or non-finite are holes.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    pub width: usize,
    pub height: usize,
    pub depth: Vec<f64>,
}

impl DepthMap {
    pub fn from_vec(width: usize, height: usize, depth: Vec<f64>) -> Result<Self, ReconError> {
        if depth.len() != width * height {
            return Err(ReconError::MalformedHeader(format!(
                "{} values for a {width}x{height} map",
                depth.len()
            )));
        }
        Ok(Self { width, height, depth })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut depth = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                depth.push(f(x, y));
            }
        }
        Self { width, height, depth }
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.depth[y * self.width + x]
    }

    /// Depth at `(x, y)` when it is not a hole.
    pub fn valid(&self, x: usize, y: usize) -> Option<f64> {
        let d = self.get(x, y);
        (d.is_finite() && d > 0.0).then_some(d)
    }

    pub fn check_dims(&self, width: usize, height: usize) -> Result<(), ReconError> {
        if (self.width, self.height) != (width, height) {
            return Err(ReconError::DimensionMismatch {
                expected: (width, height),
                found: (self.width, self.height),
            });
        }
        Ok(())
    }
}

fn header_err(e: crate::imageproc::ImageError) -> ReconError {
    ReconError::MalformedHeader(e.to_string())
}

/// Single-channel PFM. Rows are stored bottom to top; a negative scale marks
/// little-endian samples.
pub fn read_pfm(buf: &[u8]) -> Result<DepthMap, ReconError> {
    if buf.len() < 2 || &buf[..2] != b"Pf" {
        return Err(ReconError::BadMagic);
    }
    let (tokens, offset) = parse_header(buf, 4).map_err(header_err)?;
    let num = |s: &str| {
        s.parse::<usize>()
            .ok()
            .filter(|&v| v > 0)
            .ok_or_else(|| ReconError::MalformedHeader(format!("bad dimension {s:?}")))
    };
    let (w, h) = (num(&tokens[1])?, num(&tokens[2])?);
    let scale: f64 = tokens[3]
        .parse()
        .ok()
        .filter(|s: &f64| *s != 0.0 && s.is_finite())
        .ok_or_else(|| ReconError::MalformedHeader(format!("bad scale {:?}", tokens[3])))?;
    let little = scale < 0.0;
    let expected = w * h * 4;
    let payload = &buf[offset..];
    if payload.len() < expected {
        return Err(ReconError::Truncated {
            expected,
            found: payload.len(),
        });
    }
    let mut depth = vec![0.0; w * h];
    for (k, chunk) in payload[..expected].chunks_exact(4).enumerate() {
        let b = [chunk[0], chunk[1], chunk[2], chunk[3]];
        let v = if little { f32::from_le_bytes(b) } else { f32::from_be_bytes(b) };
        let (row, col) = (k / w, k % w);
        depth[(h - 1 - row) * w + col] = v as f64;
    }
    DepthMap::from_vec(w, h, depth)
}

/// Little-endian PFM at float32 precision.
pub fn write_pfm(map: &DepthMap, mut w: impl Write) -> std::io::Result<()> {
    write!(w, "Pf\n{} {}\n-1.0\n", map.width, map.height)?;
    for row in (0..map.height).rev() {
        for x in 0..map.width {
            w.write_all(&(map.get(x, row) as f32).to_le_bytes())?;
        }
    }
    Ok(())
}

/// 16-bit binary PGM; stored values are multiplied by `scale`.
pub fn read_pgm16(buf: &[u8], scale: f64) -> Result<DepthMap, ReconError> {
    if buf.len() < 2 || &buf[..2] != b"P5" {
        return Err(ReconError::BadMagic);
    }
    let (tokens, offset) = parse_header(buf, 4).map_err(header_err)?;
    let (w, h, maxval) = parse_dims(&tokens).map_err(header_err)?;
    if !(256..=65535).contains(&maxval) {
        return Err(ReconError::MalformedHeader(format!("maxval {maxval} is not 16-bit")));
    }
    let expected = w * h * 2;
    let payload = &buf[offset..];
    if payload.len() < expected {
        return Err(ReconError::Truncated {
            expected,
            found: payload.len(),
        });
    }
    let depth = payload[..expected]
        .chunks_exact(2)
        .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64 * scale)
        .collect();
    DepthMap::from_vec(w, h, depth)
}

/// 16-bit PGM of `round(depth / scale)`, saturating at 65535; holes become 0.
pub fn write_pgm16(map: &DepthMap, scale: f64, mut w: impl Write) -> std::io::Result<()> {
    write!(w, "P5\n{} {}\n65535\n", map.width, map.height)?;
    for &d in &map.depth {
        let q = if d.is_finite() && d > 0.0 { (d / scale).round().clamp(0.0, 65535.0) as u16 } else { 0 };
        w.write_all(&q.to_be_bytes())?;
    }
    Ok(())
}

fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".scale");
    PathBuf::from(s)
}

/// Loads a PFM, or a 16-bit PGM whose scale factor is the single number in
/// `<path>.scale`.
pub fn load_depth(path: impl AsRef<Path>) -> Result<DepthMap, ReconError> {
    let path = path.as_ref();
    let buf = std::fs::read(path)?;
    match buf.get(..2) {
        Some(b"Pf") => read_pfm(&buf),
        Some(b"P5") => {
            let side = sidecar(path);
            let scale = std::fs::read_to_string(&side)
                .ok()
                .and_then(|s| s.trim().parse::<f64>().ok())
                .filter(|s| s.is_finite() && *s > 0.0)
                .ok_or_else(|| ReconError::MissingScale(side.display().to_string()))?;
            read_pgm16(&buf, scale)
        }
        _ => Err(ReconError::BadMagic),
    }
}

/// [`load_depth`] checked against the companion image size.
pub fn load_depth_for(path: impl AsRef<Path>, img: &GrayImage) -> Result<DepthMap, ReconError> {
    let map = load_depth(path)?;
    map.check_dims(img.width(), img.height())?;
    Ok(map)
}
