//! Contrast limited adaptive histogram equalization.
//!
//! The algorithm, pinned down to the bit because golden fixtures depend on it:
//!
//! 1. If the image size is not a multiple of the tile grid, the image used for
//!    tile histograms is extended right/bottom by reflect-101 (`dcb|abcd|cba`)
//!    up to the next multiple. Tile size is `ext_w / grid_x` by
//!    `ext_h / grid_y`.
//! 2. Each tile gets a 256-bin histogram. The clip ceiling is
//!    `max(trunc(clip_limit * tile_area / 256), 1)`. Counts above the ceiling
//!    are cut, the total excess is spread as `excess / 256` per bin, and the
//!    remaining `r = excess % 256` units go one each to bins
//!    `0, s, 2s, ...` with `s = max(256 / r, 1)` until exhausted.
//! 3. The tile mapping is `lut[i] = round_half_even(cdf[i] * (255 / tile_area))`
//!    evaluated in single precision.
//! 4. Every output pixel blends the mappings of the four nearest tile centers
//!    bilinearly (single precision), with tile indices clamped at the borders,
//!    and is rounded half-to-even.

use super::{GrayImage, ImageError};

const BINS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClaheConfig {
    /// Multiple of the uniform bin height `tile_area / 256`.
    pub clip_limit: f64,
    pub grid_x: usize,
    pub grid_y: usize,
}

impl Default for ClaheConfig {
    fn default() -> Self {
        Self {
            clip_limit: 2.0,
            grid_x: 8,
            grid_y: 8,
        }
    }
}

impl ClaheConfig {
    pub fn validate(&self) -> Result<(), ImageError> {
        if !(self.clip_limit >= 1.0 && self.clip_limit.is_finite()) {
            return Err(ImageError::InvalidConfig(format!(
                "clip limit must be >= 1.0, got {}",
                self.clip_limit
            )));
        }
        if self.grid_x < 1 || self.grid_y < 1 {
            return Err(ImageError::InvalidConfig("tile grid must be at least 1x1".into()));
        }
        Ok(())
    }
}

fn reflect101(i: usize, n: usize) -> usize {
    if i < n {
        i
    } else {
        // n >= grid >= pad + 1, so one reflection suffices
        2 * (n - 1) - i
    }
}

fn tile_lut(img: &GrayImage, x0: usize, y0: usize, tw: usize, th: usize, clip: u32) -> [u8; BINS] {
    let (w, h) = (img.width(), img.height());
    let mut hist = [0u32; BINS];
    for y in y0..y0 + th {
        let sy = reflect101(y, h);
        for x in x0..x0 + tw {
            hist[img.get(reflect101(x, w), sy) as usize] += 1;
        }
    }

    let mut excess = 0u32;
    for b in hist.iter_mut() {
        if *b > clip {
            excess += *b - clip;
            *b = clip;
        }
    }
    let batch = excess / BINS as u32;
    let mut residual = excess - batch * BINS as u32;
    for b in hist.iter_mut() {
        *b += batch;
    }
    if residual != 0 {
        let step = (BINS / residual as usize).max(1);
        let mut i = 0;
        while i < BINS && residual > 0 {
            hist[i] += 1;
            i += step;
            residual -= 1;
        }
    }

    let scale = (BINS - 1) as f32 / (tw * th) as f32;
    let mut lut = [0u8; BINS];
    let mut sum = 0u32;
    for (l, &b) in lut.iter_mut().zip(&hist) {
        sum += b;
        *l = (sum as f32 * scale).round_ties_even().clamp(0.0, 255.0) as u8;
    }
    lut
}

/// Interpolation coordinates along one axis: lower/upper tile and weights.
fn axis_weights(n: usize, tile: usize, tiles: usize) -> Vec<(usize, usize, f32, f32)> {
    let inv = 1.0f32 / tile as f32;
    (0..n)
        .map(|p| {
            let f = p as f32 * inv - 0.5;
            let lo = f.floor();
            let a = f - lo;
            let lo = lo as isize;
            let t1 = lo.max(0) as usize;
            let t2 = ((lo + 1) as usize).min(tiles - 1);
            (t1, t2, a, 1.0 - a)
        })
        .collect()
}

pub fn clahe(img: &GrayImage, cfg: &ClaheConfig) -> Result<GrayImage, ImageError> {
    cfg.validate()?;
    let (w, h) = (img.width(), img.height());
    if img.is_empty() || w < cfg.grid_x || h < cfg.grid_y {
        return Err(ImageError::ImageTooSmall {
            width: w,
            height: h,
            grid_x: cfg.grid_x,
            grid_y: cfg.grid_y,
        });
    }
    let (gx, gy) = (cfg.grid_x, cfg.grid_y);
    let tw = w.div_ceil(gx);
    let th = h.div_ceil(gy);
    let area = tw * th;
    let clip = ((cfg.clip_limit * area as f64 / BINS as f64) as u32).max(1);

    let mut luts = Vec::with_capacity(gx * gy);
    for ty in 0..gy {
        for tx in 0..gx {
            luts.push(tile_lut(img, tx * tw, ty * th, tw, th, clip));
        }
    }

    let xs = axis_weights(w, tw, gx);
    let ys = axis_weights(h, th, gy);
    let mut out = GrayImage::new(w, h);
    for (y, &(ty1, ty2, ya, ya1)) in ys.iter().enumerate() {
        for (x, &(tx1, tx2, xa, xa1)) in xs.iter().enumerate() {
            let v = img.get(x, y) as usize;
            let l11 = luts[ty1 * gx + tx1][v] as f32;
            let l12 = luts[ty1 * gx + tx2][v] as f32;
            let l21 = luts[ty2 * gx + tx1][v] as f32;
            let l22 = luts[ty2 * gx + tx2][v] as f32;
            let res = (l11 * xa1 + l12 * xa) * ya1 + (l21 * xa1 + l22 * xa) * ya;
            out.set(x, y, res.round_ties_even().clamp(0.0, 255.0) as u8);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Plain global histogram equalization with the same rounding rule.
    fn global_he(img: &GrayImage) -> GrayImage {
        let mut hist = [0u64; 256];
        for &p in img.data() {
            hist[p as usize] += 1;
        }
        let n = img.data().len() as f64;
        let mut lut = [0u8; 256];
        let mut cdf = 0u64;
        for i in 0..256 {
            cdf += hist[i];
            lut[i] = (cdf as f64 * 255.0 / n).round_ties_even() as u8;
        }
        GrayImage::from_fn(img.width(), img.height(), |x, y| lut[img.get(x, y) as usize])
    }

    fn lcg_image(w: usize, h: usize, seed: u32) -> GrayImage {
        let mut s = seed;
        GrayImage::from_fn(w, h, |_, _| {
            s = s.wrapping_mul(1664525).wrapping_add(1013904223);
            (s >> 24) as u8
        })
    }

    #[test]
    fn single_tile_without_clipping_is_global_he() {
        let img = GrayImage::from_fn(64, 64, |x, y| ((x * 3 + y) % 97 + 40) as u8);
        let cfg = ClaheConfig {
            clip_limit: 1e6,
            grid_x: 1,
            grid_y: 1,
        };
        assert_eq!(clahe(&img, &cfg).unwrap(), global_he(&img));
        let noisy = lcg_image(32, 32, 5);
        assert_eq!(clahe(&noisy, &cfg).unwrap(), global_he(&noisy));
    }

    #[test]
    fn preserves_shape_and_is_deterministic() {
        for (w, h) in [(8, 8), (64, 64), (100, 75), (13, 9)] {
            let img = lcg_image(w, h, (w * h) as u32);
            let a = clahe(&img, &ClaheConfig::default()).unwrap();
            let b = clahe(&img, &ClaheConfig::default()).unwrap();
            assert_eq!((a.width(), a.height()), (w, h));
            assert_eq!(a, b);
        }
    }

    #[test]
    fn constant_image_tile_mapping() {
        // one occupied bin: the clipped excess is spread everywhere, so the
        // mapping of the occupied value is fixed by the redistribution rule
        let img = GrayImage::from_fn(64, 64, |_, _| 100);
        let out = clahe(&img, &ClaheConfig::default()).unwrap();
        let first = out.get(0, 0);
        assert!(out.data().iter().all(|&v| v == first));
    }

    #[test]
    fn tile_mapping_is_monotone() {
        let img = lcg_image(64, 64, 11);
        let lut = tile_lut(&img, 0, 0, 8, 8, 1);
        assert!(lut.windows(2).all(|w| w[0] <= w[1]));
        let lut = tile_lut(&img, 8, 16, 8, 8, 3);
        assert!(lut.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn too_small_and_bad_config() {
        let img = GrayImage::new(4, 4);
        assert!(matches!(
            clahe(&img, &ClaheConfig::default()),
            Err(ImageError::ImageTooSmall { .. })
        ));
        let cfg = ClaheConfig {
            clip_limit: 0.5,
            ..Default::default()
        };
        assert!(matches!(
            clahe(&GrayImage::new(16, 16), &cfg),
            Err(ImageError::InvalidConfig(_))
        ));
    }

    #[test]
    fn reflect_index() {
        assert_eq!(reflect101(3, 5), 3);
        assert_eq!(reflect101(5, 5), 3);
        assert_eq!(reflect101(6, 5), 2);
    }
}
