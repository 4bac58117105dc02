use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use super::{CloudPoint, PointCloud, ReconError};
use crate::camgeo::Vec3;

const PROPERTIES: [&str; 4] = ["property float x", "property float y", "property float z", "property uchar gray"];

/// ASCII PLY with float32 coordinates and an 8-bit gray value per vertex.
pub fn write_ply(cloud: &PointCloud, mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "ply\nformat ascii 1.0\nelement vertex {}", cloud.len())?;
    for p in PROPERTIES {
        writeln!(w, "{p}")?;
    }
    writeln!(w, "end_header")?;
    for p in &cloud.points {
        writeln!(
            w,
            "{:?} {:?} {:?} {}",
            p.pos.x as f32, p.pos.y as f32, p.pos.z as f32, p.gray
        )?;
    }
    Ok(())
}

pub fn read_ply(r: impl Read) -> Result<PointCloud, ReconError> {
    let mut lines = BufReader::new(r).lines();
    let mut next = |what: &str| -> Result<String, ReconError> {
        match lines.next() {
            Some(l) => Ok(l?.trim().to_string()),
            None => Err(ReconError::MalformedHeader(format!("missing {what}"))),
        }
    };
    let expect = |got: String, want: &str| {
        if got == want {
            Ok(())
        } else {
            Err(ReconError::MalformedHeader(format!("expected {want:?}, found {got:?}")))
        }
    };
    expect(next("magic")?, "ply")?;
    expect(next("format")?, "format ascii 1.0")?;
    let elem = next("vertex element")?;
    let declared: usize = elem
        .strip_prefix("element vertex ")
        .and_then(|n| n.trim().parse().ok())
        .ok_or_else(|| ReconError::MalformedHeader(format!("bad element line {elem:?}")))?;
    for p in PROPERTIES {
        expect(next("property")?, p)?;
    }
    expect(next("end_header")?, "end_header")?;

    let mut points = Vec::with_capacity(declared);
    let header_lines = 8;
    for (k, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |msg: String| ReconError::BadVertex {
            line: header_lines + k + 1,
            msg,
        };
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 4 {
            return Err(bad(format!("expected 4 values, found {}", f.len())));
        }
        let coord = |s: &str| s.parse::<f32>().map(f64::from).map_err(|e| bad(format!("{s:?}: {e}")));
        let pos = Vec3::new(coord(f[0])?, coord(f[1])?, coord(f[2])?);
        let gray: u8 = f[3].parse().map_err(|e| bad(format!("{:?}: {e}", f[3])))?;
        points.push(CloudPoint { pos, gray });
    }
    if points.len() != declared {
        return Err(ReconError::VertexCountMismatch {
            declared,
            found: points.len(),
        });
    }
    Ok(PointCloud { points })
}

pub fn save_ply(cloud: &PointCloud, path: impl AsRef<Path>) -> Result<(), ReconError> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_ply(cloud, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_ply(path: impl AsRef<Path>) -> Result<PointCloud, ReconError> {
    read_ply(std::fs::File::open(path)?)
}
