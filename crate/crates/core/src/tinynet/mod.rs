//! A small fully connected network that maps a stereo pixel quadruple
//! `(x1, y1, x2, y2)` to a world point `(X, Y, Z)` in meters.
//!
//! Architecture: 4 -> 128 -> 64 -> 16 -> 3, Leaky ReLU on the hidden layers
//! and an affine output. Pixel inputs are multiplied by `input_scale`
//! (`1 / image_width`) before the first layer.
//!
//! Weights are stored input-major (`w[i * n_out + o]`), so every affine layer
//! is a sequence of axpy updates over the output dimension. Each output is
//! accumulated in the same order regardless of how many rows are evaluated
//! together, which makes [`MlpNet::predict_batch`] bit-identical to repeated
//! [`MlpNet::forward`] calls.
//!
//! [`PackedMlp`] is a separate inference-only `f32` path for throughput.

mod backprop;
mod loss;
mod nadam;
mod packed;
mod train;
mod weights;

pub use backprop::{backward, Gradients};
pub use loss::{mae_loss, LossError};
pub use nadam::{nadam_step, OptimizerState};
pub use packed::{PackedMlp, BLOCK_ROWS};
pub use train::{
    evaluate_mae_cm, train, train_with_progress, write_history_csv, EarlyStopping, EpochRecord, PlateauDecay, StopDecision,
    TrainConfig, TrainError, TrainReport,
};
pub use weights::{load_weights, read_weights, save_weights, write_weights, WeightsError};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::scalar::Real;

/// Layer widths of the triangulation network, input first.
pub const LAYER_SIZES: [usize; 5] = [4, 128, 64, 16, 3];

/// Negative-side slope of the hidden activations.
pub const DEFAULT_LEAK_ALPHA: f64 = 0.01;

/// Register tile of the affine kernel: rows by outputs.
const ROW_TILE: usize = 4;
const OUT_TILE: usize = 16;

/// Rows evaluated together in batched inference.
const BATCH_CHUNK: usize = 64;

pub const N_INPUTS: usize = 4;
pub const N_OUTPUTS: usize = 3;

#[inline]
pub fn leaky_relu<T: Real>(x: T, alpha: T) -> T {
    if x >= T::zero() {
        x
    } else {
        alpha * x
    }
}

/// Derivative used in backpropagation; the kink at zero takes subgradient 0.
#[inline]
pub(crate) fn leaky_relu_grad<T: Real>(z: T, alpha: T) -> T {
    if z > T::zero() {
        T::one()
    } else if z < T::zero() {
        alpha
    } else {
        T::zero()
    }
}

/// One affine layer. `w` is `n_in x n_out`, input-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense<T = f64> {
    pub n_in: usize,
    pub n_out: usize,
    pub w: Vec<T>,
    pub b: Vec<T>,
}

impl<T: Real> Dense<T> {
    pub fn zeros(n_in: usize, n_out: usize) -> Self {
        Self {
            n_in,
            n_out,
            w: vec![T::zero(); n_in * n_out],
            b: vec![T::zero(); n_out],
        }
    }

    /// Weight connecting input `i` to output `o`.
    #[inline]
    pub fn weight(&self, o: usize, i: usize) -> T {
        self.w[i * self.n_out + o]
    }

    #[inline]
    pub fn set_weight(&mut self, o: usize, i: usize, value: T) {
        self.w[i * self.n_out + o] = value;
    }

    pub fn n_params(&self) -> usize {
        self.w.len() + self.b.len()
    }

    /// `out[r] = b + sum_i input[r][i] * w[i]` for `rows` row-major rows.
    ///
    /// Works on register tiles of `ROW_TILE` rows by `OUT_TILE` outputs.
    /// Every output accumulates its bias and then the inputs in ascending
    /// order, so results do not depend on the batch size or tile position.
    fn affine(&self, input: &[T], rows: usize, out: &mut [T]) {
        let (n_in, n_out) = (self.n_in, self.n_out);
        debug_assert_eq!(input.len(), rows * n_in);
        debug_assert_eq!(out.len(), rows * n_out);
        let mut r0 = 0;
        while r0 < rows {
            let rb = ROW_TILE.min(rows - r0);
            let mut o0 = 0;
            while o0 < n_out {
                let ob = OUT_TILE.min(n_out - o0);
                if rb == ROW_TILE && ob == OUT_TILE {
                    self.tile(input, r0, o0, out);
                } else {
                    for r in r0..r0 + rb {
                        let x = &input[r * n_in..(r + 1) * n_in];
                        for o in o0..o0 + ob {
                            let mut acc = self.b[o];
                            for (i, &xi) in x.iter().enumerate() {
                                acc = acc + xi * self.w[i * n_out + o];
                            }
                            out[r * n_out + o] = acc;
                        }
                    }
                }
                o0 += ob;
            }
            r0 += rb;
        }
    }

    #[inline(always)]
    fn tile(&self, input: &[T], r0: usize, o0: usize, out: &mut [T]) {
        let (n_in, n_out) = (self.n_in, self.n_out);
        let bias: &[T; OUT_TILE] = self.b[o0..o0 + OUT_TILE].try_into().expect("tile width");
        let mut acc = [*bias; ROW_TILE];
        let x = &input[r0 * n_in..(r0 + ROW_TILE) * n_in];
        for i in 0..n_in {
            let w: &[T; OUT_TILE] = self.w[i * n_out + o0..i * n_out + o0 + OUT_TILE]
                .try_into()
                .expect("tile width");
            for (r, row) in acc.iter_mut().enumerate() {
                let xi = x[r * n_in + i];
                for (a, &wv) in row.iter_mut().zip(w) {
                    *a = *a + xi * wv;
                }
            }
        }
        for (r, row) in acc.iter().enumerate() {
            let base = (r0 + r) * n_out + o0;
            out[base..base + OUT_TILE].copy_from_slice(row);
        }
    }

    fn cast<U: Real>(&self) -> Dense<U> {
        Dense {
            n_in: self.n_in,
            n_out: self.n_out,
            w: self.w.iter().map(|v| U::lit(v.as_f64())).collect(),
            b: self.b.iter().map(|v| U::lit(v.as_f64())).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpNet<T = f64> {
    pub layers: Vec<Dense<T>>,
    pub leak_alpha: T,
    pub input_scale: T,
}

impl<T: Real> MlpNet<T> {
    /// All-zero network with the given layer widths.
    pub fn zeros(sizes: &[usize], leak_alpha: T, input_scale: T) -> Self {
        assert!(sizes.len() >= 2, "need at least an input and an output width");
        Self {
            layers: sizes.windows(2).map(|w| Dense::zeros(w[0], w[1])).collect(),
            leak_alpha,
            input_scale,
        }
    }

    /// Glorot-uniform weights in `+-sqrt(6 / (fan_in + fan_out))`, zero biases.
    pub fn glorot(sizes: &[usize], leak_alpha: T, input_scale: T, seed: u64) -> Self {
        let mut net = Self::zeros(sizes, leak_alpha, input_scale);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for layer in &mut net.layers {
            let limit = (6.0 / (layer.n_in + layer.n_out) as f64).sqrt();
            for w in &mut layer.w {
                *w = T::lit(rng.random_range(-limit..limit));
            }
        }
        net
    }

    /// The standard 4-128-64-16-3 triangulation network for images
    /// `image_width` pixels wide.
    pub fn triangulation(image_width: usize, seed: u64) -> Self {
        Self::glorot(
            &LAYER_SIZES,
            T::lit(DEFAULT_LEAK_ALPHA),
            T::lit(1.0 / image_width as f64),
            seed,
        )
    }

    pub fn n_inputs(&self) -> usize {
        self.layers[0].n_in
    }

    pub fn n_outputs(&self) -> usize {
        self.layers.last().expect("non-empty").n_out
    }

    pub fn sizes(&self) -> Vec<usize> {
        std::iter::once(self.n_inputs())
            .chain(self.layers.iter().map(|l| l.n_out))
            .collect()
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(Dense::n_params).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.leak_alpha.is_finite()
            && self.input_scale.is_finite()
            && self
                .layers
                .iter()
                .all(|l| l.w.iter().chain(&l.b).all(|v| v.is_finite()))
    }

    pub fn has_standard_shape(&self) -> bool {
        self.sizes() == LAYER_SIZES
    }

    /// Single-sample inference on raw pixel coordinates.
    pub fn forward(&self, input: &[T; 4]) -> [T; 3] {
        let out = self.predict_batch(&[*input]);
        out[0]
    }

    /// Batched inference over `n` pixel quadruples. Output rows are
    /// bit-identical to calling [`forward`](Self::forward) on each row.
    pub fn predict_batch(&self, inputs: &[[T; 4]]) -> Vec<[T; 3]> {
        assert_eq!(self.n_inputs(), N_INPUTS, "network input width must be 4");
        assert_eq!(self.n_outputs(), N_OUTPUTS, "network output width must be 3");
        let mut out = Vec::with_capacity(inputs.len());
        let flat = self.predict_flat(inputs.iter().flat_map(|r| r.iter().copied()), inputs.len());
        for row in flat.chunks_exact(N_OUTPUTS) {
            out.push([row[0], row[1], row[2]]);
        }
        out
    }

    /// Batched inference on a row-major `rows x n_inputs` slice of raw inputs.
    pub fn predict_rows(&self, inputs: &[T]) -> Vec<T> {
        let n_in = self.n_inputs();
        assert_eq!(inputs.len() % n_in, 0, "input length must be a multiple of {n_in}");
        self.predict_flat(inputs.iter().copied(), inputs.len() / n_in)
    }

    fn predict_flat(&self, inputs: impl Iterator<Item = T>, rows: usize) -> Vec<T> {
        let n_in = self.n_inputs();
        let n_out = self.n_outputs();
        let widest = self.layers.iter().map(|l| l.n_out).max().unwrap_or(0).max(n_in);
        let mut cur = vec![T::zero(); BATCH_CHUNK * widest];
        let mut next = vec![T::zero(); BATCH_CHUNK * widest];
        let mut out = Vec::with_capacity(rows * n_out);
        let mut inputs = inputs;
        let mut done = 0;
        while done < rows {
            let chunk = BATCH_CHUNK.min(rows - done);
            for v in cur[..chunk * n_in].iter_mut() {
                *v = inputs.next().expect("row count matches input length") * self.input_scale;
            }
            let last = self.layers.len() - 1;
            for (li, layer) in self.layers.iter().enumerate() {
                let dst = &mut next[..chunk * layer.n_out];
                layer.affine(&cur[..chunk * layer.n_in], chunk, dst);
                if li != last {
                    for v in dst.iter_mut() {
                        *v = leaky_relu(*v, self.leak_alpha);
                    }
                }
                std::mem::swap(&mut cur, &mut next);
            }
            out.extend_from_slice(&cur[..chunk * n_out]);
            done += chunk;
        }
        out
    }

    /// Converts every parameter to another scalar type.
    pub fn cast<U: Real>(&self) -> MlpNet<U> {
        MlpNet {
            layers: self.layers.iter().map(Dense::cast).collect(),
            leak_alpha: U::lit(self.leak_alpha.as_f64()),
            input_scale: U::lit(self.input_scale.as_f64()),
        }
    }
}

/// Evaluates one network layer by layer and keeps the pre-activations, for
/// backpropagation.
pub(crate) struct ForwardTrace<T> {
    /// Normalized inputs followed by each layer's post-activation output.
    pub acts: Vec<Vec<T>>,
    /// Pre-activation of every layer.
    pub pre: Vec<Vec<T>>,
}

impl<T: Real> MlpNet<T> {
    pub(crate) fn trace(&self, inputs: &[T], rows: usize) -> ForwardTrace<T> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        let mut pre = Vec::with_capacity(self.layers.len());
        acts.push(inputs.iter().map(|&v| v * self.input_scale).collect::<Vec<_>>());
        let last = self.layers.len() - 1;
        for (li, layer) in self.layers.iter().enumerate() {
            let mut z = vec![T::zero(); rows * layer.n_out];
            layer.affine(acts.last().expect("input pushed"), rows, &mut z);
            let a = if li == last {
                z.clone()
            } else {
                z.iter().map(|&v| leaky_relu(v, self.leak_alpha)).collect()
            };
            pre.push(z);
            acts.push(a);
        }
        ForwardTrace { acts, pre }
    }
}
