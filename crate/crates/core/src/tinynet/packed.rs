//! Inference-only `f32` evaluation of a trained network.
//!
//! Rows are processed in blocks of [`BLOCK_ROWS`] stored feature-major
//! (`act[feature * BLOCK_ROWS + row]`), so one vector load covers 16 rows and
//! one broadcast weight feeds several of them. Every output accumulates its
//! bias and then the inputs in ascending order with fused multiply-adds. FMA
//! is correctly rounded, so the AVX-512 kernel and the portable kernel give
//! bit-identical results; they differ from [`MlpNet::predict_batch`] only by
//! the rounding of the unfused products.

use super::{MlpNet, N_INPUTS, N_OUTPUTS};

/// Rows per block: three 16-lane vectors.
pub const BLOCK_ROWS: usize = 48;

/// Outputs per full register tile.
const OUT_TILE: usize = 8;

#[derive(Debug, Clone)]
struct Layer {
    n_in: usize,
    n_out: usize,
    w: Vec<f32>,
    b: Vec<f32>,
}

#[derive(Debug, Clone)]
pub struct PackedMlp {
    layers: Vec<Layer>,
    input_scale: f32,
    leak_alpha: f32,
    widest: usize,
}

impl PackedMlp {
    /// Panics unless the network maps 4 inputs to 3 outputs.
    pub fn new(net: &MlpNet<f32>) -> Self {
        assert_eq!(net.n_inputs(), N_INPUTS, "network input width must be 4");
        assert_eq!(net.n_outputs(), N_OUTPUTS, "network output width must be 3");
        let layers: Vec<Layer> = net
            .layers
            .iter()
            .map(|l| Layer {
                n_in: l.n_in,
                n_out: l.n_out,
                w: l.w.clone(),
                b: l.b.clone(),
            })
            .collect();
        let widest = layers.iter().map(|l| l.n_out.max(l.n_in)).max().unwrap_or(N_INPUTS);
        Self {
            layers,
            input_scale: net.input_scale,
            leak_alpha: net.leak_alpha,
            widest,
        }
    }

    /// True when the vector kernel is used on this CPU.
    pub fn uses_simd() -> bool {
        simd::available()
    }

    pub fn predict_batch(&self, inputs: &[[f32; 4]]) -> Vec<[f32; 3]> {
        self.predict_with(inputs, simd::available())
    }

    pub(crate) fn predict_with(&self, inputs: &[[f32; 4]], vector: bool) -> Vec<[f32; 3]> {
        let mut cur = vec![0.0f32; BLOCK_ROWS * self.widest];
        let mut next = vec![0.0f32; BLOCK_ROWS * self.widest];
        let mut out = Vec::with_capacity(inputs.len());
        let last = self.layers.len() - 1;
        for block in inputs.chunks(BLOCK_ROWS) {
            for j in 0..N_INPUTS {
                let col = &mut cur[j * BLOCK_ROWS..(j + 1) * BLOCK_ROWS];
                for (c, row) in col.iter_mut().zip(block) {
                    *c = row[j] * self.input_scale;
                }
                col[block.len()..].fill(0.0);
            }
            for (li, layer) in self.layers.iter().enumerate() {
                let relu = li != last;
                let x = &cur[..layer.n_in * BLOCK_ROWS];
                let dst = &mut next[..layer.n_out * BLOCK_ROWS];
                if vector {
                    simd::layer(layer, x, dst, relu, self.leak_alpha);
                } else {
                    let mut o0 = 0;
                    while o0 < layer.n_out {
                        let k = tile_width(layer.n_out - o0);
                        scalar_tile(layer, o0, k, x, dst, relu, self.leak_alpha);
                        o0 += k;
                    }
                }
                std::mem::swap(&mut cur, &mut next);
            }
            for r in 0..block.len() {
                out.push([cur[r], cur[BLOCK_ROWS + r], cur[2 * BLOCK_ROWS + r]]);
            }
        }
        out
    }
}

fn tile_width(remaining: usize) -> usize {
    match remaining {
        r if r >= OUT_TILE => OUT_TILE,
        4..=7 => 4,
        r => r,
    }
}

#[inline]
fn activate(v: f32, relu: bool, alpha: f32) -> f32 {
    if relu && v < 0.0 {
        v * alpha
    } else {
        v
    }
}

fn scalar_tile(l: &Layer, o0: usize, k: usize, x: &[f32], out: &mut [f32], relu: bool, alpha: f32) {
    for o in o0..o0 + k {
        for r in 0..BLOCK_ROWS {
            let mut acc = l.b[o];
            for i in 0..l.n_in {
                acc = x[i * BLOCK_ROWS + r].mul_add(l.w[i * l.n_out + o], acc);
            }
            out[o * BLOCK_ROWS + r] = activate(acc, relu, alpha);
        }
    }
}

#[cfg(target_arch = "x86_64")]
mod simd {
    use std::arch::x86_64::*;

    use super::{tile_width, Layer, BLOCK_ROWS};

    const VECS: usize = BLOCK_ROWS / 16;

    pub fn available() -> bool {
        std::arch::is_x86_feature_detected!("avx512f")
    }

    pub fn layer(l: &Layer, x: &[f32], out: &mut [f32], relu: bool, alpha: f32) {
        assert!(available());
        assert!(x.len() >= l.n_in * BLOCK_ROWS && out.len() >= l.n_out * BLOCK_ROWS);
        assert!(l.w.len() == l.n_in * l.n_out && l.b.len() == l.n_out);
        // SAFETY: the CPU supports AVX-512F, and the asserts above bound every
        // weight, bias, input and output access made by the kernels.
        unsafe { layer_avx512(l, x, out, relu, alpha) }
    }

    #[target_feature(enable = "avx512f")]
    unsafe fn layer_avx512(l: &Layer, x: &[f32], out: &mut [f32], relu: bool, alpha: f32) {
        let mut o0 = 0;
        while o0 < l.n_out {
            let k = tile_width(l.n_out - o0);
            match k {
                8 => kernel::<8>(l, o0, x, out, relu, alpha),
                4 => kernel::<4>(l, o0, x, out, relu, alpha),
                3 => kernel::<3>(l, o0, x, out, relu, alpha),
                2 => kernel::<2>(l, o0, x, out, relu, alpha),
                _ => kernel::<1>(l, o0, x, out, relu, alpha),
            }
            o0 += k;
        }
    }

    #[target_feature(enable = "avx512f")]
    unsafe fn kernel<const K: usize>(l: &Layer, o0: usize, x: &[f32], out: &mut [f32], relu: bool, alpha: f32) {
        let (w, b, xp, op) = (l.w.as_ptr().add(o0), l.b.as_ptr().add(o0), x.as_ptr(), out.as_mut_ptr());
        let mut acc = [[_mm512_setzero_ps(); VECS]; K];
        for (k, row) in acc.iter_mut().enumerate() {
            *row = [_mm512_set1_ps(*b.add(k)); VECS];
        }
        for i in 0..l.n_in {
            let xi = xp.add(i * BLOCK_ROWS);
            let mut xs = [_mm512_setzero_ps(); VECS];
            for (v, xv) in xs.iter_mut().enumerate() {
                *xv = _mm512_loadu_ps(xi.add(16 * v));
            }
            let wi = w.add(i * l.n_out);
            for (k, row) in acc.iter_mut().enumerate() {
                let wk = _mm512_set1_ps(*wi.add(k));
                for (a, xv) in row.iter_mut().zip(&xs) {
                    *a = _mm512_fmadd_ps(*xv, wk, *a);
                }
            }
        }
        let al = _mm512_set1_ps(alpha);
        let zero = _mm512_setzero_ps();
        for (k, row) in acc.iter().enumerate() {
            let dst = op.add((o0 + k) * BLOCK_ROWS);
            for (v, &a) in row.iter().enumerate() {
                let a = if relu {
                    let neg = _mm512_cmp_ps_mask::<_CMP_LT_OQ>(a, zero);
                    _mm512_mask_mul_ps(a, neg, a, al)
                } else {
                    a
                };
                _mm512_storeu_ps(dst.add(16 * v), a);
            }
        }
    }
}

#[cfg(not(target_arch = "x86_64"))]
mod simd {
    use super::Layer;

    pub fn available() -> bool {
        false
    }

    pub fn layer(_: &Layer, _: &[f32], _: &mut [f32], _: bool, _: f32) {
        unreachable!("no vector kernel on this target")
    }
}
