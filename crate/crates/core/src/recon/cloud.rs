use super::{DepthMap, MetricAlignment, ReconError};
use crate::camgeo::{CahvCamera, Pixel, Point3};
use crate::imageproc::GrayImage;

/// How a depth value relates to the pixel ray.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DepthKind {
    /// Distance along the ray from the camera center.
    #[default]
    Range,
    /// Distance along the camera axis.
    Axial,
}

impl std::str::FromStr for DepthKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "range" => Ok(Self::Range),
            "axial" | "z" => Ok(Self::Axial),
            other => Err(format!("unknown depth kind {other:?} (expected range or axial)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CloudPoint {
    pub pos: Point3,
    pub gray: u8,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloud {
    pub points: Vec<CloudPoint>,
}

impl PointCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Back-projects every valid pixel on a `stride` grid, in row-major order.
/// Holes and pixels whose aligned depth is not positive are skipped.
pub fn backproject(
    map: &DepthMap,
    align: &MetricAlignment,
    cam: &CahvCamera,
    img: &GrayImage,
    stride: usize,
    kind: DepthKind,
) -> Result<PointCloud, ReconError> {
    if stride == 0 {
        return Err(ReconError::InvalidStride);
    }
    map.check_dims(img.width(), img.height())?;
    let mut points = Vec::with_capacity(map.width.div_ceil(stride) * map.height.div_ceil(stride));
    for y in (0..map.height).step_by(stride) {
        for x in (0..map.width).step_by(stride) {
            let Some(d) = map.valid(x, y) else { continue };
            let z = align.apply(d);
            if !(z > 0.0) {
                continue;
            }
            let Ok((origin, dir)) = cam.pixel_ray(&Pixel::new(x as f64, y as f64)) else {
                continue;
            };
            let t = match kind {
                DepthKind::Range => z,
                DepthKind::Axial => z / dir.dot(&cam.a),
            };
            points.push(CloudPoint {
                pos: origin + dir * t,
                gray: img.get(x, y),
            });
        }
    }
    Ok(PointCloud { points })
}
