//! Stereo ranging for planetary-rover perception.
//!
//! The crate is organised as a pipeline:
//!
//! * [`camgeo`]: CAHV cameras, projection and least-squares triangulation
//!   (the geometric ground truth).
//! * [`synthgen`]: supervised triangulation datasets sampled through a rig.
//! * [`tinynet`]: a 4-128-64-16-3 Leaky ReLU network trained with NAdam on
//!   an MAE loss to replace per-feature triangulation with batched inference.
//! * [`imageproc`]: 8-bit grayscale images, PGM I/O and CLAHE.
//! * [`features`]: Harris keypoints, patch descriptors and the mutual-best
//!   matcher.
//! * [`objpipe`]: detection ingestion, stereo box association, per-object
//!   median ranging, result tables and evaluation metrics.
//! * [`recon`]: depth-map ingestion, metric alignment, back-projection and PLY.
//!
//! Geometry, network and reconstruction types are generic over [`Real`]
//! (`f32` or `f64`); the aliases below fix the scalar.

pub mod camgeo;
pub mod features;
pub mod imageproc;
pub mod objpipe;
pub mod recon;
pub mod scalar;
pub mod synthgen;
pub mod tinynet;

pub use scalar::Real;

pub type CahvCameraF64 = camgeo::CahvCamera<f64>;
pub type CahvCameraF32 = camgeo::CahvCamera<f32>;
pub type StereoRigF64 = camgeo::StereoRig<f64>;
pub type StereoRigF32 = camgeo::StereoRig<f32>;
pub type Point3F64 = camgeo::Point3<f64>;
pub type Point3F32 = camgeo::Point3<f32>;
pub type PixelF64 = camgeo::Pixel<f64>;
pub type PixelF32 = camgeo::Pixel<f32>;
pub type MlpNetF64 = tinynet::MlpNet<f64>;
pub type MlpNetF32 = tinynet::MlpNet<f32>;
