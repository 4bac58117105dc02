//! Supervised triangulation datasets generated through a stereo rig.
//!
//! A sample is drawn by picking a uniform pixel in the left image and a
//! uniform forward depth in `[z_min, z_max]`, placing the point on that
//! pixel's ray, and projecting it into the right camera. Points that leave
//! either image (before or after pixel noise) are redrawn, never clamped.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::camgeo::{Pixel, Point3, StereoRig, Vec3};
use crate::scalar::Real;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid scene config: {0}")]
    InvalidConfig(String),
    #[error("no valid sample found in {attempts} attempts")]
    EmptyFrustumIntersection { attempts: usize },
    #[error("invalid split fractions: {0}")]
    InvalidFraction(String),
    #[error("split of {n} samples leaves the {part} partition empty")]
    InsufficientSamples { n: usize, part: &'static str },
    #[error("csv line {line}: {msg}")]
    Csv { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One supervised example: left pixel `(x1, y1)`, right pixel `(x2, y2)` and
/// the world point that produced them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriangulationSample<T = f64> {
    pub x1: T,
    pub y1: T,
    pub x2: T,
    pub y2: T,
    pub truth: Point3<T>,
}

impl<T: Real> TriangulationSample<T> {
    pub fn input(&self) -> [T; 4] {
        [self.x1, self.y1, self.x2, self.y2]
    }

    pub fn left_px(&self) -> Pixel<T> {
        Pixel::new(self.x1, self.y1)
    }

    pub fn right_px(&self) -> Pixel<T> {
        Pixel::new(self.x2, self.y2)
    }

    pub fn cast<U: Real>(&self) -> TriangulationSample<U> {
        TriangulationSample {
            x1: U::lit(self.x1.as_f64()),
            y1: U::lit(self.y1.as_f64()),
            x2: U::lit(self.x2.as_f64()),
            y2: U::lit(self.y2.as_f64()),
            truth: self.truth.cast(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneConfig {
    pub z_min: f64,
    pub z_max: f64,
    pub n: usize,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            z_min: 1.0,
            z_max: 10.0,
            n: 50_000,
            noise_sigma: 0.0,
            seed: 7,
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        if !(self.z_min > 0.0 && self.z_min < self.z_max && self.z_max.is_finite()) {
            return Err(SynthError::InvalidConfig(format!(
                "need 0 < z_min < z_max, got [{}, {}]",
                self.z_min, self.z_max
            )));
        }
        if self.n == 0 {
            return Err(SynthError::InvalidConfig("n must be positive".into()));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(SynthError::InvalidConfig("noise_sigma must be >= 0".into()));
        }
        Ok(())
    }
}

/// Draws `cfg.n` samples; the output is a pure function of `(rig, cfg)`.
pub fn generate_dataset<T: Real>(
    rig: &StereoRig<T>,
    cfg: &SceneConfig,
) -> Result<Vec<TriangulationSample<T>>, SynthError> {
    cfg.validate()?;
    let rig64: StereoRig<f64> = rig.cast();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let noise = Normal::new(0.0, cfg.noise_sigma)
        .map_err(|e| SynthError::InvalidConfig(e.to_string()))?;
    let max_x = (rig.image_width - 1) as f64;
    let max_y = (rig.image_height - 1) as f64;
    let budget = cfg.n.saturating_mul(1000);

    let mut out = Vec::with_capacity(cfg.n);
    let mut attempts = 0usize;
    while out.len() < cfg.n {
        if attempts >= budget {
            return Err(SynthError::EmptyFrustumIntersection { attempts });
        }
        attempts += 1;
        let Some((left, right, truth)) = draw_point(&rig64, cfg, max_x, max_y, &mut rng) else {
            continue;
        };
        let mut q = [left.x, left.y, right.x, right.y];
        if cfg.noise_sigma > 0.0 {
            for v in q.iter_mut() {
                *v += noise.sample(&mut rng);
            }
        }
        let inside = |x: f64, y: f64| (0.0..=max_x).contains(&x) && (0.0..=max_y).contains(&y);
        if !(inside(q[0], q[1]) && inside(q[2], q[3])) {
            continue;
        }
        out.push(
            TriangulationSample {
                x1: q[0],
                y1: q[1],
                x2: q[2],
                y2: q[3],
                truth,
            }
            .cast(),
        );
    }
    Ok(out)
}

fn draw_point(
    rig: &StereoRig<f64>,
    cfg: &SceneConfig,
    max_x: f64,
    max_y: f64,
    rng: &mut ChaCha8Rng,
) -> Option<(Pixel<f64>, Pixel<f64>, Point3<f64>)> {
    let px = Pixel::new(rng.random_range(0.0..=max_x), rng.random_range(0.0..=max_y));
    let z = rng.random_range(cfg.z_min..=cfg.z_max);
    let (origin, dir) = rig.left.pixel_ray(&px).ok()?;
    let along = dir.dot(&rig.left.a);
    if along <= 0.0 {
        return None;
    }
    let p: Vec3 = origin + dir * (z / along);
    let right = rig.right.project(&p).ok()?;
    if !rig.contains(&right) {
        return None;
    }
    // re-project so the left pixel is exactly consistent with the stored point
    let left = rig.left.project(&p).ok()?;
    if !rig.contains(&left) {
        return None;
    }
    Some((left, right, p))
}

/// Disjoint train/validation/test partition after a seeded shuffle. Sizes are
/// `round(n * train_frac)`, `round(n * val_frac)` and the remainder.
pub fn split_dataset<S: Clone>(
    samples: &[S],
    train_frac: f64,
    val_frac: f64,
    seed: u64,
) -> Result<(Vec<S>, Vec<S>, Vec<S>), SynthError> {
    let in_unit = |f: f64| f > 0.0 && f < 1.0;
    if !(in_unit(train_frac) && in_unit(val_frac) && train_frac + val_frac < 1.0) {
        return Err(SynthError::InvalidFraction(format!(
            "train {train_frac}, val {val_frac}"
        )));
    }
    let n = samples.len();
    let n_train = (n as f64 * train_frac).round() as usize;
    let n_val = (n as f64 * val_frac).round() as usize;
    let n_test = n.saturating_sub(n_train + n_val);
    for (size, part) in [(n_train, "train"), (n_val, "validation"), (n_test, "test")] {
        if size == 0 {
            return Err(SynthError::InsufficientSamples { n, part });
        }
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let pick = |r: &[usize]| r.iter().map(|&i| samples[i].clone()).collect::<Vec<_>>();
    Ok((
        pick(&idx[..n_train]),
        pick(&idx[n_train..n_train + n_val]),
        pick(&idx[n_train + n_val..]),
    ))
}

pub const CSV_HEADER: &str = "x1,y1,x2,y2,X,Y,Z";

/// Writes samples with the shortest round-tripping decimal representation,
/// so reading the file back reproduces every value bit-exactly.
pub fn write_csv<T: Real>(samples: &[TriangulationSample<T>], w: impl Write) -> std::io::Result<()> {
    let mut w = BufWriter::new(w);
    writeln!(w, "{CSV_HEADER}")?;
    for s in samples {
        let s: TriangulationSample<f64> = s.cast();
        writeln!(
            w,
            "{:?},{:?},{:?},{:?},{:?},{:?},{:?}",
            s.x1, s.y1, s.x2, s.y2, s.truth.x, s.truth.y, s.truth.z
        )?;
    }
    w.flush()
}

pub fn read_csv(r: impl std::io::Read) -> Result<Vec<TriangulationSample>, SynthError> {
    let mut lines = BufReader::new(r).lines();
    let header = lines.next().transpose()?.unwrap_or_default();
    if header.trim() != CSV_HEADER {
        return Err(SynthError::Csv {
            line: 1,
            msg: format!("expected header '{CSV_HEADER}'"),
        });
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| SynthError::Csv {
                line: i + 2,
                msg: e.to_string(),
            })?;
        if vals.len() != 7 {
            return Err(SynthError::Csv {
                line: i + 2,
                msg: format!("expected 7 columns, found {}", vals.len()),
            });
        }
        out.push(TriangulationSample {
            x1: vals[0],
            y1: vals[1],
            x2: vals[2],
            y2: vals[3],
            truth: Vec3::new(vals[4], vals[5], vals[6]),
        });
    }
    Ok(out)
}

pub fn save_csv<T: Real>(samples: &[TriangulationSample<T>], path: impl AsRef<Path>) -> Result<(), SynthError> {
    write_csv(samples, std::fs::File::create(path)?)?;
    Ok(())
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<Vec<TriangulationSample>, SynthError> {
    read_csv(std::fs::File::open(path)?)
}
