//! Central finite differences against `backward`, with an independent
//! forward pass that also reports the activation pattern so perturbations
//! that cross a kink can be recognised and left out.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rovervision::tinynet::{backward, MlpNet};

/// Batch MAE in meters and the sign pattern of every pre-activation and
/// residual.
fn loss_and_pattern(net: &MlpNet, inputs: &[[f64; 4]], targets: &[[f64; 3]]) -> (f64, Vec<i8>) {
    let mut pattern = Vec::new();
    let mut total = 0.0;
    let sign = |v: f64| (v > 0.0) as i8 - (v < 0.0) as i8;
    for (x, t) in inputs.iter().zip(targets) {
        let mut a: Vec<f64> = x.iter().map(|v| v * net.input_scale).collect();
        for (li, layer) in net.layers.iter().enumerate() {
            let last = li + 1 == net.layers.len();
            let mut z = layer.b.clone();
            for (o, zo) in z.iter_mut().enumerate() {
                for (i, ai) in a.iter().enumerate() {
                    *zo += layer.weight(o, i) * ai;
                }
            }
            if !last {
                for v in z.iter_mut() {
                    pattern.push(sign(*v));
                    if *v < 0.0 {
                        *v *= net.leak_alpha;
                    }
                }
            }
            a = z;
        }
        for k in 0..3 {
            let r = a[k] - t[k];
            pattern.push(sign(r));
            total += r.abs();
        }
    }
    (total / (3 * inputs.len()) as f64, pattern)
}

/// Weights first, then biases.
fn param(net: &mut MlpNet, layer: usize, k: usize) -> &mut f64 {
    let l = &mut net.layers[layer];
    let n_w = l.w.len();
    if k < n_w {
        &mut l.w[k]
    } else {
        &mut l.b[k - n_w]
    }
}

pub struct GradCheck {
    pub max_rel_err: f64,
    pub checked: usize,
    pub skipped_at_kink: usize,
}

/// Relative error `|g - fd| / max(|g|, |fd|, 1e-7)`; the floor keeps
/// parameters with vanishing gradients from dividing rounding noise by zero.
fn rel_err(g: f64, fd: f64) -> f64 {
    (g - fd).abs() / g.abs().max(fd.abs()).max(1e-7)
}

/// One random net and batch. `per_layer` parameters are sampled per layer
/// (all of them when the layer is smaller).
pub fn check_one(seed: u64, per_layer: usize) -> GradCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hidden: Vec<usize> = (0..rng.random_range(1..=3)).map(|_| rng.random_range(2..=24)).collect();
    let mut sizes = vec![4];
    sizes.extend(&hidden);
    sizes.push(3);
    let mut net = MlpNet::glorot(&sizes, 0.01, 1.0 / 1024.0, rng.random());
    for layer in net.layers.iter_mut() {
        for b in layer.b.iter_mut() {
            *b = rng.random_range(-0.5..0.5);
        }
    }
    let n = rng.random_range(1..=16);
    let inputs: Vec<[f64; 4]> = (0..n).map(|_| std::array::from_fn(|_| rng.random_range(0.0..1024.0))).collect();
    let targets: Vec<[f64; 3]> = (0..n).map(|_| std::array::from_fn(|_| rng.random_range(-3.0..3.0))).collect();

    let (grads, _) = backward(&net, &inputs, &targets);
    let (_, base_pattern) = loss_and_pattern(&net, &inputs, &targets);
    let mut out = GradCheck {
        max_rel_err: 0.0,
        checked: 0,
        skipped_at_kink: 0,
    };
    for li in 0..net.layers.len() {
        let n_w = net.layers[li].w.len();
        let n_total = n_w + net.layers[li].b.len();
        let picks: Vec<usize> = if n_total <= per_layer {
            (0..n_total).collect()
        } else {
            (0..per_layer).map(|_| rng.random_range(0..n_total)).collect()
        };
        for k in picks {
            let theta = *param(&mut net, li, k);
            // the loss is piecewise linear, so any step that keeps the
            // activation pattern gives an exact difference; a wide step keeps
            // rounding noise in `lp - lm` small
            let h = 1e-3 * theta.abs().max(1.0);
            *param(&mut net, li, k) = theta + h;
            let (lp, pp) = loss_and_pattern(&net, &inputs, &targets);
            *param(&mut net, li, k) = theta - h;
            let (lm, pm) = loss_and_pattern(&net, &inputs, &targets);
            *param(&mut net, li, k) = theta;
            if pp != base_pattern || pm != base_pattern {
                out.skipped_at_kink += 1;
                continue;
            }
            let fd = (lp - lm) / (2.0 * h);
            let g = if k < n_w { grads[li].w[k] } else { grads[li].b[k - n_w] };
            out.max_rel_err = out.max_rel_err.max(rel_err(g, fd));
            out.checked += 1;
        }
    }
    out
}
