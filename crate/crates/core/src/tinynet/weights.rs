//! Binary weight files.
//!
//! Layout (all integers `u32` little-endian, all reals `f64` little-endian):
//!
//! ```text
//! "MLP1"
//! layer_count
//! per layer: rows (outputs), cols (inputs), rows*cols weights row-major, rows biases
//! leak_alpha
//! input_scale
//! ```
//!
//! Only the 4-128-64-16-3 architecture is accepted on load.

use std::io::{Read, Write};
use std::path::Path;

use thiserror::Error;

use super::{Dense, MlpNet, LAYER_SIZES};
use crate::scalar::Real;

pub const MAGIC: &[u8; 4] = b"MLP1";

#[derive(Debug, Error)]
pub enum WeightsError {
    #[error("corrupt weights: bad magic")]
    BadMagic,
    #[error("corrupt weights: unexpected shape ({0})")]
    Shape(String),
    #[error("corrupt weights: truncated file")]
    Truncated,
    #[error("corrupt weights: {0} trailing bytes")]
    TrailingBytes(usize),
    #[error("corrupt weights: non-finite parameter")]
    NonFinite,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl WeightsError {
    /// Everything except plain I/O failures means the file content is bad.
    pub fn is_corrupt(&self) -> bool {
        !matches!(self, WeightsError::Io(_))
    }
}

pub fn write_weights<T: Real>(net: &MlpNet<T>, mut w: impl Write) -> std::io::Result<()> {
    let mut buf = Vec::with_capacity(16 + net.n_params() * 8);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(net.layers.len() as u32).to_le_bytes());
    for l in &net.layers {
        buf.extend_from_slice(&(l.n_out as u32).to_le_bytes());
        buf.extend_from_slice(&(l.n_in as u32).to_le_bytes());
        for o in 0..l.n_out {
            for i in 0..l.n_in {
                buf.extend_from_slice(&l.weight(o, i).as_f64().to_le_bytes());
            }
        }
        for b in &l.b {
            buf.extend_from_slice(&b.as_f64().to_le_bytes());
        }
    }
    buf.extend_from_slice(&net.leak_alpha.as_f64().to_le_bytes());
    buf.extend_from_slice(&net.input_scale.as_f64().to_le_bytes());
    w.write_all(&buf)
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8], WeightsError> {
        let end = self.pos.checked_add(n).ok_or(WeightsError::Truncated)?;
        let s = self.data.get(self.pos..end).ok_or(WeightsError::Truncated)?;
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<usize, WeightsError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")) as usize)
    }

    fn f64(&mut self) -> Result<f64, WeightsError> {
        let v = f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes"));
        if v.is_finite() {
            Ok(v)
        } else {
            Err(WeightsError::NonFinite)
        }
    }
}

pub fn read_weights<T: Real>(mut r: impl Read) -> Result<MlpNet<T>, WeightsError> {
    let mut data = Vec::new();
    r.read_to_end(&mut data)?;
    let mut cur = Cursor { data: &data, pos: 0 };
    if cur.take(4).map_err(|_| WeightsError::BadMagic)? != MAGIC {
        return Err(WeightsError::BadMagic);
    }
    let count = cur.u32()?;
    if count != LAYER_SIZES.len() - 1 {
        return Err(WeightsError::Shape(format!(
            "expected {} layers, found {count}",
            LAYER_SIZES.len() - 1
        )));
    }
    let mut layers = Vec::with_capacity(count);
    for k in 0..count {
        let rows = cur.u32()?;
        let cols = cur.u32()?;
        let (want_in, want_out) = (LAYER_SIZES[k], LAYER_SIZES[k + 1]);
        if (rows, cols) != (want_out, want_in) {
            return Err(WeightsError::Shape(format!(
                "layer {k} is {rows}x{cols}, expected {want_out}x{want_in}"
            )));
        }
        let mut layer = Dense::<T>::zeros(cols, rows);
        for o in 0..rows {
            for i in 0..cols {
                layer.set_weight(o, i, T::lit(cur.f64()?));
            }
        }
        for b in layer.b.iter_mut() {
            *b = T::lit(cur.f64()?);
        }
        layers.push(layer);
    }
    let leak_alpha = T::lit(cur.f64()?);
    let input_scale = T::lit(cur.f64()?);
    let rest = data.len() - cur.pos;
    if rest != 0 {
        return Err(WeightsError::TrailingBytes(rest));
    }
    Ok(MlpNet {
        layers,
        leak_alpha,
        input_scale,
    })
}

pub fn save_weights<T: Real>(net: &MlpNet<T>, path: impl AsRef<Path>) -> Result<(), WeightsError> {
    let f = std::fs::File::create(path)?;
    write_weights(net, std::io::BufWriter::new(f))?;
    Ok(())
}

pub fn load_weights<T: Real>(path: impl AsRef<Path>) -> Result<MlpNet<T>, WeightsError> {
    read_weights(std::fs::File::open(path)?)
}
