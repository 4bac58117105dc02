use super::{DepthMap, ReconError};
use crate::camgeo::Pixel;
use crate::objpipe::median;

/// A known metric range at one pixel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Anchor {
    pub px: Pixel,
    pub distance_cm: f64,
}

/// Metric depth `scale * d + shift` (meters) from model depth `d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricAlignment {
    pub scale: f64,
    pub shift: f64,
    /// Set when the anchors could not resolve the scale and the shift-only
    /// fallback was used.
    pub degenerate: bool,
}

impl Default for MetricAlignment {
    fn default() -> Self {
        Self {
            scale: 1.0,
            shift: 0.0,
            degenerate: false,
        }
    }
}

impl MetricAlignment {
    pub fn apply(&self, d: f64) -> f64 {
        self.scale * d + self.shift
    }
}

/// Half-width of the neighbourhood whose median gives an anchor's depth.
const ANCHOR_RADIUS: isize = 2;

/// Median of the valid depths in the 5x5 block around the nearest pixel.
fn anchor_depth(map: &DepthMap, px: &Pixel) -> Option<f64> {
    if !px.is_finite() {
        return None;
    }
    let (cx, cy) = (px.x.round() as isize, px.y.round() as isize);
    if cx < 0 || cy < 0 || cx >= map.width as isize || cy >= map.height as isize {
        return None;
    }
    let mut vals = Vec::with_capacity(25);
    for y in cy - ANCHOR_RADIUS..=cy + ANCHOR_RADIUS {
        for x in cx - ANCHOR_RADIUS..=cx + ANCHOR_RADIUS {
            if x >= 0 && y >= 0 && (x as usize) < map.width && (y as usize) < map.height {
                vals.extend(map.valid(x as usize, y as usize));
            }
        }
    }
    median(&vals)
}

/// Least-squares scale and shift mapping anchor depths onto anchor ranges.
///
/// Anchors outside the map or without valid depth nearby are ignored. A
/// single usable anchor fixes the scale with zero shift. When every usable
/// anchor sees the same depth but the ranges differ, the scale is left at 1
/// and the mean residual becomes the shift (`degenerate` is set).
pub fn fit_alignment(map: &DepthMap, anchors: &[Anchor]) -> Result<MetricAlignment, ReconError> {
    let pts: Vec<(f64, f64)> = anchors
        .iter()
        .filter(|a| a.distance_cm.is_finite())
        .filter_map(|a| anchor_depth(map, &a.px).map(|d| (d, a.distance_cm / 100.0)))
        .collect();
    if pts.is_empty() {
        return Err(ReconError::NoValidAnchors);
    }
    let n = pts.len() as f64;
    let dm = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let zm = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sdd: f64 = pts.iter().map(|p| (p.0 - dm) * (p.0 - dm)).sum();
    let sdz: f64 = pts.iter().map(|p| (p.0 - dm) * (p.1 - zm)).sum();
    let szz: f64 = pts.iter().map(|p| (p.1 - zm) * (p.1 - zm)).sum();

    let flat_depth = sdd <= 1e-24 * dm * dm * n;
    let fit = if pts.len() == 1 || (flat_depth && szz <= 1e-24 * zm * zm * n) {
        MetricAlignment {
            scale: zm / dm,
            shift: 0.0,
            degenerate: false,
        }
    } else if flat_depth {
        MetricAlignment {
            scale: 1.0,
            shift: zm - dm,
            degenerate: true,
        }
    } else {
        let scale = sdz / sdd;
        MetricAlignment {
            scale,
            shift: zm - scale * dm,
            degenerate: false,
        }
    };
    if !(fit.scale > 0.0) {
        return Err(ReconError::NonPositiveScale(fit.scale));
    }
    Ok(fit)
}
