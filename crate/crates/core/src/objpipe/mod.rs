//! Object-level ranging: detection ingestion, stereo box association by
//! feature matches, per-object median distance from the network, result
//! tables and held-out evaluation.

mod associate;
mod detections;
mod metrics;
mod ranging;
mod table;

pub use associate::{
    associate, associate_keypoints, AssociateConfig, Association, AssociationResult, Side, Skip, SkipReason,
    MIN_MATCHES,
};
pub use detections::{
    load_detections, load_label_map, parse_coco, parse_label_map, parse_yolo, BBox, DetectionFormat, LabelMap,
};
pub use metrics::{evaluate, evaluate_with, quantile_sorted, EvalMetrics};
pub use ranging::{median, oracle_distances_cm, range_object, summarize_distances, RangeConfig, RangedObject};
pub use table::{
    write_comparison, write_skip_log, write_table, write_table_debug, ComparisonRow, COMPARISON_HEADER,
    SKIP_LOG_HEADER, TABLE_HEADER,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ObjError {
    #[error("line {line}: {msg}")]
    MalformedLine { line: usize, msg: String },
    #[error("line {line}: unknown class id {id}")]
    UnknownClassId { line: usize, id: i64 },
    #[error("line {line}: normalized coordinate {value} outside [0, 1]")]
    OutOfRangeCoordinate { line: usize, value: f64 },
    #[error("invalid JSON: {0}")]
    Json(String),
    #[error("unknown detection format {0:?} (expected yolo or coco)")]
    UnknownFormat(String),
    #[error("image dimensions must be positive")]
    BadImageDims,
    #[error("evaluation set is empty")]
    EmptySet,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
