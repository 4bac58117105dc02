use super::{Association, BBox, MIN_MATCHES};
use crate::camgeo::{distance_with, DistanceMode, StereoRig};
use crate::tinynet::MlpNet;
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeConfig {
    /// Medians beyond this range (meters) are flagged and clamped.
    pub far_threshold_m: f64,
    pub mode: DistanceMode,
}

impl Default for RangeConfig {
    fn default() -> Self {
        Self {
            far_threshold_m: 10.0,
            mode: DistanceMode::Norm,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RangedObject {
    pub object_id: usize,
    pub label: String,
    pub left_box: BBox,
    pub right_box: BBox,
    pub n_matches: usize,
    pub per_feature_distance_cm: Vec<f64>,
    /// Median before clamping.
    pub raw_median_cm: f64,
    /// Reported median; equals the threshold when `far_flag` is set.
    pub median_distance_cm: f64,
    pub far_flag: bool,
}

/// Median with the mean of the two middle values for even counts.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

/// `(raw median, reported median, far flag)` for per-feature distances in cm.
pub fn summarize_distances(dists_cm: &[f64], far_threshold_m: f64) -> Option<(f64, f64, bool)> {
    let raw = median(dists_cm)?;
    let limit = far_threshold_m * 100.0;
    let far = raw > limit;
    Some((raw, if far { limit } else { raw }, far))
}

/// Ranges one association with a single batched network pass over its
/// matches. `None` below the minimum match count.
pub fn range_object<T: Real>(assoc: &Association, net: &MlpNet<T>, cfg: &RangeConfig) -> Option<RangedObject> {
    if assoc.n_matches() < MIN_MATCHES {
        return None;
    }
    let inputs: Vec<[T; 4]> = assoc.inputs().iter().map(|r| r.map(T::lit)).collect();
    let dists: Vec<f64> = net
        .predict_batch(&inputs)
        .iter()
        .map(|p| distance_with(&(*p).into(), cfg.mode).as_f64() * 100.0)
        .collect();
    let (raw, reported, far) = summarize_distances(&dists, cfg.far_threshold_m)?;
    Some(RangedObject {
        object_id: assoc.left_index,
        label: assoc.left_box.label.clone(),
        left_box: assoc.left_box.clone(),
        right_box: assoc.right_box.clone(),
        n_matches: assoc.n_matches(),
        per_feature_distance_cm: dists,
        raw_median_cm: raw,
        median_distance_cm: reported,
        far_flag: far,
    })
}

/// Per-match distances from the geometric triangulation, in cm. Matches
/// the oracle cannot triangulate are left out.
pub fn oracle_distances_cm(assoc: &Association, rig: &StereoRig, mode: DistanceMode) -> Vec<f64> {
    assoc
        .pairs
        .iter()
        .filter_map(|(l, r)| rig.triangulate(l, r).ok())
        .map(|p| distance_with(&p, mode) * 100.0)
        .collect()
}
