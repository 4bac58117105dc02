use super::{leaky_relu_grad, Dense, MlpNet};
use crate::scalar::Real;

/// Parameter gradients, laid out exactly like [`MlpNet::layers`].
pub type Gradients<T> = Vec<Dense<T>>;

#[inline]
fn signum0<T: Real>(x: T) -> T {
    if x > T::zero() {
        T::one()
    } else if x < T::zero() {
        -T::one()
    } else {
        T::zero()
    }
}

#[inline]
fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    // four fixed accumulators: deterministic and vectorizable
    let mut acc = [T::zero(); 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        for k in 0..4 {
            acc[k] = acc[k] + x[k] * y[k];
        }
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
        s = s + *x * *y;
    }
    s
}

/// Exact gradient of the batch MAE (in meters, before the centimeter
/// conversion) with respect to every parameter. Returns the gradients and
/// the batch loss in meters.
///
/// The absolute value and the Leaky ReLU kink both take subgradient 0.
pub fn backward<T: Real>(net: &MlpNet<T>, inputs: &[[T; 4]], targets: &[[T; 3]]) -> (Gradients<T>, T) {
    assert_eq!(inputs.len(), targets.len(), "inputs and targets must pair up");
    assert!(!inputs.is_empty(), "batch must be non-empty");
    let rows = inputs.len();
    let flat: Vec<T> = inputs.iter().flat_map(|r| r.iter().copied()).collect();
    let trace = net.trace(&flat, rows);

    let pred = trace.acts.last().expect("output layer");
    let scale = T::one() / T::lit((rows * 3) as f64);
    let mut loss = T::zero();
    let mut delta: Vec<T> = Vec::with_capacity(rows * 3);
    for (p, t) in pred.chunks_exact(3).zip(targets) {
        for k in 0..3 {
            let r = p[k] - t[k];
            loss = loss + r.abs();
            delta.push(signum0(r) * scale);
        }
    }
    loss = loss * scale;

    let mut grads: Gradients<T> = net
        .layers
        .iter()
        .map(|l| Dense::zeros(l.n_in, l.n_out))
        .collect();

    for li in (0..net.layers.len()).rev() {
        let layer = &net.layers[li];
        let (n_in, n_out) = (layer.n_in, layer.n_out);
        let input = &trace.acts[li];
        let g = &mut grads[li];
        for (r, drow) in delta.chunks_exact(n_out).enumerate() {
            for (gb, &d) in g.b.iter_mut().zip(drow) {
                *gb = *gb + d;
            }
            for i in 0..n_in {
                let xi = input[r * n_in + i];
                if xi == T::zero() {
                    continue;
                }
                let gw = &mut g.w[i * n_out..(i + 1) * n_out];
                for (w, &d) in gw.iter_mut().zip(drow) {
                    *w = *w + xi * d;
                }
            }
        }
        if li == 0 {
            break;
        }
        let pre_prev = &trace.pre[li - 1];
        let mut next = vec![T::zero(); rows * n_in];
        for (r, drow) in delta.chunks_exact(n_out).enumerate() {
            for i in 0..n_in {
                let wrow = &layer.w[i * n_out..(i + 1) * n_out];
                let z = pre_prev[r * n_in + i];
                next[r * n_in + i] = dot(wrow, drow) * leaky_relu_grad(z, net.leak_alpha);
            }
        }
        delta = next;
    }
    (grads, loss)
}
