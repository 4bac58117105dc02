//! Keypoints inside regions of interest, patch descriptors and the two-way
//! (mutual nearest neighbour) matcher.
//!
//! The built-in detector is Harris with a Gaussian window; descriptors are
//! mean-subtracted, L2-normalised 8x8 intensity patches. Externally computed
//! descriptors (e.g. SIFT) can be ingested from CSV and matched the same way.

mod harris;
mod io;
mod matcher;

pub use harris::{detect, DetectorConfig, Roi};
pub use io::{load_keypoints, read_keypoints, write_keypoints};
pub use matcher::{match_two_way, match_two_way_with, MatchConfig};

use thiserror::Error;

use crate::camgeo::Pixel;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("region of interest has zero area")]
    EmptyRoi,
    #[error("region of interest {0:?} lies outside the image")]
    RoiOutOfBounds(Roi),
    #[error("descriptor lengths differ ({left} vs {right})")]
    DescriptorLengthMismatch { left: usize, right: usize },
    #[error("bad keypoint header: {0}")]
    BadHeader(String),
    #[error("keypoint row {line} has {found} columns, expected {expected}")]
    RaggedRow {
        line: usize,
        found: usize,
        expected: usize,
    },
    #[error("keypoint row {line}: {msg}")]
    BadValue { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Keypoint {
    pub px: Pixel,
    /// Detector response; 0 for ingested keypoints.
    pub response: f64,
    pub descriptor: Vec<f64>,
}

/// A mutual-best correspondence between `left[left_index]` and
/// `right[right_index]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Match {
    pub left_index: usize,
    pub right_index: usize,
    /// Euclidean distance between the two descriptors.
    pub dist: f64,
}
