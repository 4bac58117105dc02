use super::{FeatureError, Keypoint, Match};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MatchConfig {
    /// Lowe ratio threshold on best/second-best distance; off when `None`.
    pub ratio: Option<f64>,
}

/// Mutual nearest-neighbour matching by Euclidean descriptor distance.
pub fn match_two_way(left: &[Keypoint], right: &[Keypoint]) -> Result<Vec<Match>, FeatureError> {
    match_two_way_with(left, right, &MatchConfig::default())
}

/// As [`match_two_way`], optionally also applying a ratio test in both
/// directions. Ties resolve to the lowest index.
pub fn match_two_way_with(
    left: &[Keypoint],
    right: &[Keypoint],
    cfg: &MatchConfig,
) -> Result<Vec<Match>, FeatureError> {
    let len = |set: &[Keypoint]| set.first().map(|k| k.descriptor.len());
    for set in [left, right] {
        if let Some(n) = len(set) {
            if let Some(bad) = set.iter().find(|k| k.descriptor.len() != n) {
                return Err(FeatureError::DescriptorLengthMismatch {
                    left: n,
                    right: bad.descriptor.len(),
                });
            }
        }
    }
    if let (Some(a), Some(b)) = (len(left), len(right)) {
        if a != b {
            return Err(FeatureError::DescriptorLengthMismatch { left: a, right: b });
        }
    }
    if left.is_empty() || right.is_empty() {
        return Ok(Vec::new());
    }

    let (nl, nr) = (left.len(), right.len());
    let mut d2 = vec![0.0; nl * nr];
    for (i, a) in left.iter().enumerate() {
        for (j, b) in right.iter().enumerate() {
            d2[i * nr + j] = sq_dist(&a.descriptor, &b.descriptor);
        }
    }
    let best_right: Vec<(usize, f64, f64)> = (0..nl).map(|i| best_two((0..nr).map(|j| d2[i * nr + j]))).collect();
    let best_left: Vec<(usize, f64, f64)> = (0..nr).map(|j| best_two((0..nl).map(|i| d2[i * nr + j]))).collect();

    let passes = |best: f64, second: f64| match cfg.ratio {
        None => true,
        Some(r) => second.is_infinite() || best.sqrt() < r * second.sqrt(),
    };
    let mut out = Vec::new();
    for (i, &(j, best, second)) in best_right.iter().enumerate() {
        let (back, lbest, lsecond) = best_left[j];
        if back == i && passes(best, second) && passes(lbest, lsecond) {
            out.push(Match {
                left_index: i,
                right_index: j,
                dist: best.sqrt(),
            });
        }
    }
    Ok(out)
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the smallest value (first on ties), that value and the runner-up.
fn best_two(vals: impl Iterator<Item = f64>) -> (usize, f64, f64) {
    let (mut bi, mut b, mut s) = (0, f64::INFINITY, f64::INFINITY);
    for (k, v) in vals.enumerate() {
        if v < b {
            s = b;
            b = v;
            bi = k;
        } else if v < s {
            s = v;
        }
    }
    (bi, b, s)
}
