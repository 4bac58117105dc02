use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use super::{FeatureError, Keypoint};
use crate::camgeo::Pixel;

/// Keypoints from a CSV with header `x,y,d0,...,d{n-1}`.
pub fn read_keypoints<R: Read>(reader: R) -> Result<Vec<Keypoint>, FeatureError> {
    let mut lines = BufReader::new(reader).lines();
    let header = match lines.next() {
        Some(l) => l?,
        None => return Err(FeatureError::BadHeader("file is empty".into())),
    };
    let cols: Vec<&str> = header.trim().split(',').map(str::trim).collect();
    if cols.len() < 2 || cols[0] != "x" || cols[1] != "y" {
        return Err(FeatureError::BadHeader(format!("expected x,y,d0,..., got {header:?}")));
    }
    for (k, c) in cols[2..].iter().enumerate() {
        if *c != format!("d{k}") {
            return Err(FeatureError::BadHeader(format!("column {} is {c:?}, expected d{k}", k + 2)));
        }
    }
    let expected = cols.len();
    let mut out = Vec::new();
    for (n, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let lineno = n + 2;
        let fields: Vec<&str> = line.trim().split(',').collect();
        if fields.len() != expected {
            return Err(FeatureError::RaggedRow {
                line: lineno,
                found: fields.len(),
                expected,
            });
        }
        let vals = fields
            .iter()
            .map(|f| {
                f.trim().parse::<f64>().map_err(|e| FeatureError::BadValue {
                    line: lineno,
                    msg: format!("{f:?}: {e}"),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        out.push(Keypoint {
            px: Pixel::new(vals[0], vals[1]),
            response: 0.0,
            descriptor: vals[2..].to_vec(),
        });
    }
    Ok(out)
}

pub fn load_keypoints(path: impl AsRef<Path>) -> Result<Vec<Keypoint>, FeatureError> {
    read_keypoints(std::fs::File::open(path)?)
}

/// Writes `kps` in the format read by [`read_keypoints`]. `n` is the
/// descriptor length used for the header when `kps` is empty.
pub fn write_keypoints<W: Write>(mut w: W, kps: &[Keypoint], n: usize) -> Result<(), FeatureError> {
    let n = kps.first().map_or(n, |k| k.descriptor.len());
    let mut header = String::from("x,y");
    for k in 0..n {
        header.push_str(&format!(",d{k}"));
    }
    writeln!(w, "{header}")?;
    for k in kps {
        if k.descriptor.len() != n {
            return Err(FeatureError::DescriptorLengthMismatch {
                left: n,
                right: k.descriptor.len(),
            });
        }
        write!(w, "{:?},{:?}", k.px.x, k.px.y)?;
        for v in &k.descriptor {
            write!(w, ",{v:?}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}
