use super::ObjError;
use crate::camgeo::{distance_with, DistanceMode};
use crate::synthgen::TriangulationSample;
use crate::tinynet::MlpNet;
use crate::Real;

/// Absolute distance-error summary over a held-out set, in cm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalMetrics {
    pub median_abs_err_cm: f64,
    pub iqr_lo_cm: f64,
    pub iqr_hi_cm: f64,
    pub mae_cm: f64,
    pub n: usize,
}

/// Quantile `q` of ascending `sorted` by linear interpolation between order
/// statistics at rank `q * (n - 1)`.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty slice");
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

impl EvalMetrics {
    pub fn from_errors(errors_cm: &[f64]) -> Result<Self, ObjError> {
        if errors_cm.is_empty() {
            return Err(ObjError::EmptySet);
        }
        let mut e = errors_cm.to_vec();
        e.sort_by(f64::total_cmp);
        Ok(Self {
            median_abs_err_cm: quantile_sorted(&e, 0.5),
            iqr_lo_cm: quantile_sorted(&e, 0.25),
            iqr_hi_cm: quantile_sorted(&e, 0.75),
            mae_cm: e.iter().sum::<f64>() / e.len() as f64,
            n: e.len(),
        })
    }
}

impl std::fmt::Display for EvalMetrics {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "median absolute error {:.2} cm, IQR {:.2}-{:.2} cm, MAE {:.2} cm over {} samples",
            self.median_abs_err_cm, self.iqr_lo_cm, self.iqr_hi_cm, self.mae_cm, self.n
        )
    }
}

/// Distance errors of `net` against sample truths using the Euclidean range.
pub fn evaluate<T: Real>(net: &MlpNet<T>, samples: &[TriangulationSample<T>]) -> Result<EvalMetrics, ObjError> {
    evaluate_with(net, samples, DistanceMode::Norm)
}

pub fn evaluate_with<T: Real>(
    net: &MlpNet<T>,
    samples: &[TriangulationSample<T>],
    mode: DistanceMode,
) -> Result<EvalMetrics, ObjError> {
    let inputs: Vec<[T; 4]> = samples.iter().map(|s| s.input()).collect();
    let preds = net.predict_batch(&inputs);
    let errors: Vec<f64> = preds
        .iter()
        .zip(samples)
        .map(|(p, s)| {
            let d = distance_with(&(*p).into(), mode).as_f64() - distance_with(&s.truth, mode).as_f64();
            d.abs() * 100.0
        })
        .collect();
    EvalMetrics::from_errors(&errors)
}
