use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LossError {
    #[error("prediction batch has {pred} rows but truth has {truth}")]
    ShapeMismatch { pred: usize, truth: usize },
}

/// Mean absolute error over the batch and the three coordinates, converted
/// from meters to centimeters.
pub fn mae_loss<T: Real>(pred: &[[T; 3]], truth: &[[T; 3]]) -> Result<T, LossError> {
    if pred.len() != truth.len() {
        return Err(LossError::ShapeMismatch {
            pred: pred.len(),
            truth: truth.len(),
        });
    }
    if pred.is_empty() {
        return Ok(T::zero());
    }
    let sum: T = pred
        .iter()
        .zip(truth)
        .flat_map(|(p, t)| (0..3).map(move |k| (p[k] - t[k]).abs()))
        .sum();
    Ok(sum / T::lit((pred.len() * 3) as f64) * T::lit(100.0))
}
