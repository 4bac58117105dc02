use super::{FeatureError, Keypoint};
use crate::camgeo::Pixel;
use crate::imageproc::GrayImage;

/// Axis-aligned pixel rectangle `[x0, x1) x [y0, y1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Roi {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl Roi {
    pub fn new(x0: usize, y0: usize, x1: usize, y1: usize) -> Self {
        Self { x0, y0, x1, y1 }
    }

    pub fn full(img: &GrayImage) -> Self {
        Self::new(0, 0, img.width(), img.height())
    }

    pub fn area(&self) -> usize {
        self.x1.saturating_sub(self.x0) * self.y1.saturating_sub(self.y0)
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        (self.x0..self.x1).contains(&x) && (self.y0..self.y1).contains(&y)
    }

    /// Pixel rectangle covering a floating-point box, clipped to the image.
    pub fn from_box(x_min: f64, y_min: f64, x_max: f64, y_max: f64, img: &GrayImage) -> Self {
        let clip = |v: f64, hi: usize| (v.max(0.0) as usize).min(hi);
        Self::new(
            clip(x_min.floor(), img.width()),
            clip(y_min.floor(), img.height()),
            clip(x_max.ceil(), img.width()),
            clip(y_max.ceil(), img.height()),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorConfig {
    /// Harris sensitivity `k` in `det - k * trace^2`.
    pub harris_k: f64,
    /// Standard deviation of the Gaussian window, pixels.
    pub sigma: f64,
    /// Non-maximum suppression window edge (odd).
    pub nms_size: usize,
    /// Maximum keypoints per ROI.
    pub max_keypoints: usize,
    /// Responses below this fraction of the strongest one are discarded.
    pub quality: f64,
    /// Descriptor patch edge.
    pub patch: usize,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            harris_k: 0.04,
            sigma: 1.0,
            nms_size: 5,
            max_keypoints: 64,
            quality: 0.01,
            patch: 8,
        }
    }
}

/// Smallest response treated as a corner, in units of (intensity/255)^4.
const MIN_RESPONSE: f64 = 1e-12;

/// Harris corners inside `roi`, strongest first, each with a patch descriptor.
///
/// Responses are computed on the ROI grown by a margin large enough for the
/// gradient and window kernels, so the result depends only on the image and
/// the ROI. Keypoints whose descriptor patch would leave the image are
/// dropped.
pub fn detect(img: &GrayImage, roi: Roi, cfg: &DetectorConfig) -> Result<Vec<Keypoint>, FeatureError> {
    if roi.area() == 0 {
        return Err(FeatureError::EmptyRoi);
    }
    if roi.x1 > img.width() || roi.y1 > img.height() {
        return Err(FeatureError::RoiOutOfBounds(roi));
    }
    let radius = (3.0 * cfg.sigma).ceil() as usize;
    let margin = radius + 1;
    let ex0 = roi.x0.saturating_sub(margin);
    let ey0 = roi.y0.saturating_sub(margin);
    let ex1 = (roi.x1 + margin).min(img.width());
    let ey1 = (roi.y1 + margin).min(img.height());
    let (w, h) = (ex1 - ex0, ey1 - ey0);

    let at = |x: usize, y: usize| img.get(ex0 + x, ey0 + y) as f64 / 255.0;
    let clampi = |v: isize, n: usize| v.clamp(0, n as isize - 1) as usize;

    // Sobel gradients on the expanded region (replicated region border)
    let mut ixx = vec![0.0; w * h];
    let mut iyy = vec![0.0; w * h];
    let mut ixy = vec![0.0; w * h];
    for y in 0..h {
        let ym = clampi(y as isize - 1, h);
        let yp = clampi(y as isize + 1, h);
        for x in 0..w {
            let xm = clampi(x as isize - 1, w);
            let xp = clampi(x as isize + 1, w);
            let gx = (at(xp, ym) + 2.0 * at(xp, y) + at(xp, yp) - at(xm, ym) - 2.0 * at(xm, y) - at(xm, yp)) / 8.0;
            let gy = (at(xm, yp) + 2.0 * at(x, yp) + at(xp, yp) - at(xm, ym) - 2.0 * at(x, ym) - at(xp, ym)) / 8.0;
            let k = y * w + x;
            ixx[k] = gx * gx;
            iyy[k] = gy * gy;
            ixy[k] = gx * gy;
        }
    }

    let kernel = gaussian_kernel(cfg.sigma, radius);
    let sxx = separable_blur(&ixx, w, h, &kernel);
    let syy = separable_blur(&iyy, w, h, &kernel);
    let sxy = separable_blur(&ixy, w, h, &kernel);
    let response: Vec<f64> = (0..w * h)
        .map(|k| {
            let det = sxx[k] * syy[k] - sxy[k] * sxy[k];
            let tr = sxx[k] + syy[k];
            det - cfg.harris_k * tr * tr
        })
        .collect();

    let peak = (0..w * h)
        .filter(|&k| roi.contains(ex0 + k % w, ey0 + k / w))
        .map(|k| response[k])
        .fold(0.0f64, f64::max);
    let threshold = (peak * cfg.quality).max(MIN_RESPONSE);

    let half = cfg.nms_size / 2;
    let half_patch = cfg.patch / 2;
    let mut corners = Vec::new();
    for y in roi.y0..roi.y1 {
        for x in roi.x0..roi.x1 {
            // descriptor patch covers [x - p/2, x + p/2)
            if x < half_patch || y < half_patch || x + half_patch > img.width() || y + half_patch > img.height() {
                continue;
            }
            let (lx, ly) = (x - ex0, y - ey0);
            let r = response[ly * w + lx];
            if r <= threshold {
                continue;
            }
            if is_local_max(&response, w, h, lx, ly, half, r) {
                corners.push((r, x, y));
            }
        }
    }
    // strongest first, raster order among equal responses
    corners.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.2.cmp(&b.2)).then(a.1.cmp(&b.1)));
    corners.truncate(cfg.max_keypoints);

    Ok(corners
        .into_iter()
        .map(|(r, x, y)| Keypoint {
            px: Pixel::new(x as f64, y as f64),
            response: r,
            descriptor: patch_descriptor(img, x, y, cfg.patch),
        })
        .collect())
}

/// Strict maximum over the NMS window; plateaus keep their first pixel in
/// raster order.
fn is_local_max(resp: &[f64], w: usize, h: usize, x: usize, y: usize, half: usize, r: f64) -> bool {
    for yy in y.saturating_sub(half)..(y + half + 1).min(h) {
        for xx in x.saturating_sub(half)..(x + half + 1).min(w) {
            if (xx, yy) == (x, y) {
                continue;
            }
            let o = resp[yy * w + xx];
            let earlier = (yy, xx) < (y, x);
            if o > r || (o == r && earlier) {
                return false;
            }
        }
    }
    true
}

fn gaussian_kernel(sigma: f64, radius: usize) -> Vec<f64> {
    let k: Vec<f64> = (0..=2 * radius)
        .map(|i| {
            let d = i as f64 - radius as f64;
            (-d * d / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let s: f64 = k.iter().sum();
    k.into_iter().map(|v| v / s).collect()
}

fn separable_blur(src: &[f64], w: usize, h: usize, k: &[f64]) -> Vec<f64> {
    let r = (k.len() / 2) as isize;
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut s = 0.0;
            for (i, kv) in k.iter().enumerate() {
                let xx = (x as isize + i as isize - r).clamp(0, w as isize - 1) as usize;
                s += kv * src[y * w + xx];
            }
            tmp[y * w + x] = s;
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut s = 0.0;
            for (i, kv) in k.iter().enumerate() {
                let yy = (y as isize + i as isize - r).clamp(0, h as isize - 1) as usize;
                s += kv * tmp[yy * w + x];
            }
            out[y * w + x] = s;
        }
    }
    out
}

/// `patch x patch` intensities around `(x, y)`, mean-subtracted and
/// L2-normalised (all zeros for a flat patch).
pub(crate) fn patch_descriptor(img: &GrayImage, x: usize, y: usize, patch: usize) -> Vec<f64> {
    let half = patch / 2;
    let mut d = Vec::with_capacity(patch * patch);
    for yy in y - half..y - half + patch {
        for xx in x - half..x - half + patch {
            d.push(img.get(xx, yy) as f64);
        }
    }
    let mean = d.iter().sum::<f64>() / d.len() as f64;
    for v in d.iter_mut() {
        *v -= mean;
    }
    let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 1e-12 {
        for v in d.iter_mut() {
            *v /= norm;
        }
    } else {
        d.iter_mut().for_each(|v| *v = 0.0);
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dot_image() -> GrayImage {
        let mut img = GrayImage::new(100, 100);
        img.set(50, 50, 255);
        img
    }

    #[test]
    fn flat_roi_has_no_corners() {
        let img = GrayImage::from_fn(64, 64, |_, _| 90);
        let kps = detect(&img, Roi::new(10, 10, 50, 50), &DetectorConfig::default()).unwrap();
        assert!(kps.is_empty());
    }

    #[test]
    fn isolated_dot_is_a_single_corner() {
        let img = dot_image();
        let kps = detect(&img, Roi::new(30, 30, 70, 70), &DetectorConfig::default()).unwrap();
        assert_eq!(kps.len(), 1, "{kps:?}");
        assert!((kps[0].px.x - 50.0).abs() <= 1.0 && (kps[0].px.y - 50.0).abs() <= 1.0);
    }

    #[test]
    fn dot_response_peak_by_brute_force_scan() {
        // independent scan: recompute the Harris response at every pixel of a
        // small window directly from the definition and take the argmax
        let img = dot_image();
        let cfg = DetectorConfig::default();
        let kernel = gaussian_kernel(1.0, 3);
        let val = |x: isize, y: isize| img.get_clamped(x, y) as f64 / 255.0;
        let grad = |x: isize, y: isize| {
            let gx = (val(x + 1, y - 1) + 2.0 * val(x + 1, y) + val(x + 1, y + 1)
                - val(x - 1, y - 1) - 2.0 * val(x - 1, y) - val(x - 1, y + 1)) / 8.0;
            let gy = (val(x - 1, y + 1) + 2.0 * val(x, y + 1) + val(x + 1, y + 1)
                - val(x - 1, y - 1) - 2.0 * val(x, y - 1) - val(x + 1, y - 1)) / 8.0;
            (gx, gy)
        };
        let mut best = (f64::MIN, 0, 0);
        for y in 44..57isize {
            for x in 44..57isize {
                let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
                for j in -3..=3isize {
                    for i in -3..=3isize {
                        let wgt = kernel[(i + 3) as usize] * kernel[(j + 3) as usize];
                        let (gx, gy) = grad(x + i, y + j);
                        a += wgt * gx * gx;
                        b += wgt * gy * gy;
                        c += wgt * gx * gy;
                    }
                }
                let r = a * b - c * c - cfg.harris_k * (a + b) * (a + b);
                if r > best.0 {
                    best = (r, x, y);
                }
            }
        }
        assert_eq!((best.1, best.2), (50, 50));
        let kps = detect(&img, Roi::new(40, 40, 60, 60), &cfg).unwrap();
        assert_eq!(kps[0].px, Pixel::new(50.0, 50.0));
        assert!((kps[0].response - best.0).abs() < 1e-12 * best.0.abs().max(1.0));
    }

    #[test]
    fn disjoint_rois_are_independent() {
        let img = GrayImage::from_fn(120, 80, |x, y| (((x / 6) ^ (y / 5)) * 37 % 256) as u8);
        let cfg = DetectorConfig::default();
        let a = Roi::new(5, 5, 50, 60);
        let b = Roi::new(60, 10, 115, 75);
        let ka = detect(&img, a, &cfg).unwrap();
        let kb = detect(&img, b, &cfg).unwrap();
        assert!(!ka.is_empty() && !kb.is_empty());
        assert!(ka.iter().all(|k| a.contains(k.px.x as usize, k.px.y as usize)));
        assert!(kb.iter().all(|k| b.contains(k.px.x as usize, k.px.y as usize)));
        // repeated calls, in either order, reproduce the same sets
        assert_eq!(detect(&img, b, &cfg).unwrap(), kb);
        assert_eq!(detect(&img, a, &cfg).unwrap(), ka);
    }

    #[test]
    fn descriptors_are_normalised_and_border_respected() {
        let img = GrayImage::from_fn(64, 64, |x, y| ((x * 7 + y * 13) % 251) as u8);
        let kps = detect(&img, Roi::full(&img), &DetectorConfig::default()).unwrap();
        assert!(kps.len() <= 64);
        for k in &kps {
            assert_eq!(k.descriptor.len(), 64);
            let n: f64 = k.descriptor.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(n == 0.0 || (n - 1.0).abs() <= 1e-6);
            assert!(k.px.x >= 4.0 && k.px.x <= 60.0 && k.px.y >= 4.0 && k.px.y <= 60.0);
        }
    }

    #[test]
    fn empty_roi() {
        let img = dot_image();
        assert!(matches!(detect(&img, Roi::new(5, 5, 5, 9), &DetectorConfig::default()), Err(FeatureError::EmptyRoi)));
        assert!(matches!(
            detect(&img, Roi::new(5, 5, 500, 9), &DetectorConfig::default()),
            Err(FeatureError::RoiOutOfBounds(_))
        ));
    }
}
