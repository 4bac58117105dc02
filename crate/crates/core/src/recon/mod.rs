//! Metric point clouds from externally produced depth maps: depth
//! ingestion, scale/shift alignment against per-object ranges,
//! back-projection through a CAHV camera and ASCII PLY I/O.

mod align;
mod cloud;
mod depth;
mod ply;

pub use align::{fit_alignment, Anchor, MetricAlignment};
pub use cloud::{backproject, CloudPoint, DepthKind, PointCloud};
pub use depth::{load_depth, load_depth_for, read_pfm, read_pgm16, write_pfm, write_pgm16, DepthMap};
pub use ply::{load_ply, read_ply, save_ply, write_ply};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReconError {
    #[error("unrecognised depth file (expected PFM `Pf` or 16-bit PGM `P5`)")]
    BadMagic,
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("payload truncated: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("depth map is {found:?} but the image is {expected:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("missing or unreadable scale sidecar {0}")]
    MissingScale(String),
    #[error("no anchor falls on a valid depth pixel")]
    NoValidAnchors,
    #[error("fitted scale {0} is not positive")]
    NonPositiveScale(f64),
    #[error("stride must be at least 1")]
    InvalidStride,
    #[error("header declares {declared} vertices, found {found}")]
    VertexCountMismatch { declared: usize, found: usize },
    #[error("vertex line {line}: {msg}")]
    BadVertex { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
