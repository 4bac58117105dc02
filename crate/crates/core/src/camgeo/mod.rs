//! CAHV camera geometry: projection, pixel rays and least-squares stereo
//! triangulation.
//!
//! A CAHV camera is four 3-vectors. `C` is the projection center, `A` the
//! unit optical axis, and `H`/`V` encode focal length and principal point:
//!
//! ```text
//! x = ((P - C) . H) / ((P - C) . A)
//! y = ((P - C) . V) / ((P - C) . A)
//! ```
//!
//! The world frame is anchored at the left camera center with the left
//! optical axis as +Z.

mod lstsq;
pub mod rigfile;
mod vec3;

pub use lstsq::{solve_lstsq3, LstsqError};
pub use vec3::{Point3, Vec3};

use thiserror::Error;

use crate::scalar::Real;

/// Smallest/largest pivot ratio below which the triangulation system is
/// treated as rank deficient.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Minimum `(P - C) . A` for a point to count as in front of a camera.
pub const MIN_FORWARD_DEPTH: f64 = 1e-12;

/// Default rig constants: baseline in meters, horizontal field of view in
/// degrees, and a square image edge in pixels.
pub const DEFAULT_BASELINE_M: f64 = 0.24;
pub const DEFAULT_FOV_DEG: f64 = 39.0;
pub const DEFAULT_IMAGE_SIZE: usize = 1024;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CamGeoError {
    #[error("camera axis is not unit length (|a| = {0})")]
    NonUnitAxis(f64),
    #[error("camera has zero effective focal length")]
    ZeroFocal,
    #[error("camera vectors contain non-finite values")]
    NonFinite,
    #[error("point is behind the camera (forward depth {0})")]
    PointBehindCamera(f64),
    #[error("pixel ray is degenerate")]
    DegenerateRay,
    #[error("triangulation system is rank deficient (pivot ratio {0:e})")]
    RankDeficient(f64),
    #[error("triangulated point lies behind a camera: ({x}, {y}, {z})")]
    NegativeDepth { x: f64, y: f64, z: f64 },
    #[error("field of view must lie in (0, 180) degrees, got {0}")]
    InvalidFov(f64),
    #[error("invalid rig: {0}")]
    InvalidRig(String),
}

/// Image coordinates: `x` is the column, `y` the row.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Pixel<T = f64> {
    pub x: T,
    pub y: T,
}

impl<T: Real> Pixel<T> {
    pub const fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CahvCamera<T = f64> {
    pub c: Vec3<T>,
    pub a: Vec3<T>,
    pub h: Vec3<T>,
    pub v: Vec3<T>,
}

fn unit_tolerance<T: Real>() -> T {
    T::lit(1e-9).max(T::epsilon() * T::lit(100.0))
}

impl<T: Real> CahvCamera<T> {
    /// Validates `|a| = 1` and positive effective focal lengths.
    pub fn new(c: Vec3<T>, a: Vec3<T>, h: Vec3<T>, v: Vec3<T>) -> Result<Self, CamGeoError> {
        if !(c.is_finite() && a.is_finite() && h.is_finite() && v.is_finite()) {
            return Err(CamGeoError::NonFinite);
        }
        let an = a.norm();
        if (an - T::one()).abs() > unit_tolerance::<T>() {
            return Err(CamGeoError::NonUnitAxis(an.as_f64()));
        }
        let cam = Self { c, a, h, v };
        let (fh, fv) = cam.focal_lengths();
        if !(fh > T::zero() && fv > T::zero()) {
            return Err(CamGeoError::ZeroFocal);
        }
        Ok(cam)
    }

    /// Effective focal lengths `|h - (h.a)a|` and `|v - (v.a)a|` in pixels.
    pub fn focal_lengths(&self) -> (T, T) {
        let hp = self.h - self.a * self.h.dot(&self.a);
        let vp = self.v - self.a * self.v.dot(&self.a);
        (hp.norm(), vp.norm())
    }

    /// Principal point `(h.a, v.a)`.
    pub fn principal_point(&self) -> Pixel<T> {
        Pixel::new(self.h.dot(&self.a), self.v.dot(&self.a))
    }

    pub fn project(&self, p: &Point3<T>) -> Result<Pixel<T>, CamGeoError> {
        let d = *p - self.c;
        let fwd = d.dot(&self.a);
        if !(fwd > T::lit(MIN_FORWARD_DEPTH)) {
            return Err(CamGeoError::PointBehindCamera(fwd.as_f64()));
        }
        Ok(Pixel::new(d.dot(&self.h) / fwd, d.dot(&self.v) / fwd))
    }

    /// Ray through a pixel: origin at `c`, unit direction in front of the camera.
    pub fn pixel_ray(&self, px: &Pixel<T>) -> Result<(Point3<T>, Vec3<T>), CamGeoError> {
        if !px.is_finite() {
            return Err(CamGeoError::DegenerateRay);
        }
        let (nh, nv) = self.constraint_normals(px);
        let dir = nh.cross(&nv);
        let scale = nh.norm() * nv.norm();
        if !(dir.norm() > scale * T::lit(1e-12)) {
            return Err(CamGeoError::DegenerateRay);
        }
        let mut dir = dir.normalized().ok_or(CamGeoError::DegenerateRay)?;
        if dir.dot(&self.a) < T::zero() {
            dir = -dir;
        }
        Ok((self.c, dir))
    }

    /// The two plane normals `h - x a` and `v - y a`; a point P images to `px`
    /// iff both are orthogonal to `P - c`.
    #[inline]
    pub fn constraint_normals(&self, px: &Pixel<T>) -> (Vec3<T>, Vec3<T>) {
        (self.h - self.a * px.x, self.v - self.a * px.y)
    }

    /// Forward depth `(p - c) . a`.
    #[inline]
    pub fn forward_depth(&self, p: &Point3<T>) -> T {
        (*p - self.c).dot(&self.a)
    }

    pub fn cast<U: Real>(&self) -> CahvCamera<U> {
        CahvCamera {
            c: self.c.cast(),
            a: self.a.cast(),
            h: self.h.cast(),
            v: self.v.cast(),
        }
    }
}

/// A calibrated left/right camera pair plus the image size both cameras share.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StereoRig<T = f64> {
    pub left: CahvCamera<T>,
    pub right: CahvCamera<T>,
    pub baseline: T,
    pub image_width: usize,
    pub image_height: usize,
}

impl<T: Real> StereoRig<T> {
    pub fn new(
        left: CahvCamera<T>,
        right: CahvCamera<T>,
        image_width: usize,
        image_height: usize,
    ) -> Result<Self, CamGeoError> {
        let baseline = (left.c - right.c).norm();
        if !(baseline > T::zero()) {
            return Err(CamGeoError::InvalidRig("baseline must be positive".into()));
        }
        if image_width == 0 || image_height == 0 {
            return Err(CamGeoError::InvalidRig("image dimensions must be positive".into()));
        }
        Ok(Self {
            left,
            right,
            baseline,
            image_width,
            image_height,
        })
    }

    /// Horizontal focal length of the left camera, pixels.
    pub fn focal_px(&self) -> T {
        self.left.focal_lengths().0
    }

    pub fn contains(&self, px: &Pixel<T>) -> bool {
        px.x >= T::zero()
            && px.y >= T::zero()
            && px.x <= T::lit((self.image_width - 1) as f64)
            && px.y <= T::lit((self.image_height - 1) as f64)
    }

    pub fn triangulate(&self, left_px: &Pixel<T>, right_px: &Pixel<T>) -> Result<Point3<T>, CamGeoError> {
        triangulate(self, left_px, right_px)
    }

    pub fn cast<U: Real>(&self) -> StereoRig<U> {
        StereoRig {
            left: self.left.cast(),
            right: self.right.cast(),
            baseline: U::lit(self.baseline.as_f64()),
            image_width: self.image_width,
            image_height: self.image_height,
        }
    }
}

impl Default for StereoRig<f64> {
    fn default() -> Self {
        make_parallel_rig(
            DEFAULT_BASELINE_M,
            DEFAULT_IMAGE_SIZE,
            DEFAULT_IMAGE_SIZE,
            DEFAULT_FOV_DEG,
        )
        .expect("default rig parameters are valid")
    }
}

pub fn project<T: Real>(cam: &CahvCamera<T>, p: &Point3<T>) -> Result<Pixel<T>, CamGeoError> {
    cam.project(p)
}

pub fn pixel_ray<T: Real>(
    cam: &CahvCamera<T>,
    px: &Pixel<T>,
) -> Result<(Point3<T>, Vec3<T>), CamGeoError> {
    cam.pixel_ray(px)
}

/// Least-squares intersection of the four image-plane constraints of a
/// matched pixel pair.
///
/// Each camera contributes `(h - x a).(P - c) = 0` and `(v - y a).(P - c) = 0`.
/// The stacked 4x3 system is solved with pivoted Householder QR in
/// coordinates relative to the left center, which leaves the solution
/// unchanged and keeps the right-hand side small.
pub fn triangulate<T: Real>(
    rig: &StereoRig<T>,
    left_px: &Pixel<T>,
    right_px: &Pixel<T>,
) -> Result<Point3<T>, CamGeoError> {
    if !(left_px.is_finite() && right_px.is_finite()) {
        return Err(CamGeoError::RankDeficient(0.0));
    }
    let (l1, l2) = rig.left.constraint_normals(left_px);
    let (r1, r2) = rig.right.constraint_normals(right_px);
    let offset = rig.right.c - rig.left.c;
    let a = [l1.to_array(), l2.to_array(), r1.to_array(), r2.to_array()];
    let b = [T::zero(), T::zero(), r1.dot(&offset), r2.dot(&offset)];
    let rel = solve_lstsq3(a, b, T::lit(RANK_TOLERANCE)).map_err(|e| match e {
        LstsqError::RankDeficient { pivot_ratio } => CamGeoError::RankDeficient(pivot_ratio.as_f64()),
    })?;
    let p = rig.left.c + Vec3::from(rel);
    let min = T::lit(MIN_FORWARD_DEPTH);
    if !(rig.left.forward_depth(&p) > min && rig.right.forward_depth(&p) > min) {
        return Err(CamGeoError::NegativeDepth {
            x: p.x.as_f64(),
            y: p.y.as_f64(),
            z: p.z.as_f64(),
        });
    }
    Ok(p)
}

/// Fronto-parallel rig: left camera at the origin looking down +Z, right
/// camera displaced by `baseline` along +X, principal point at the image
/// center and `f = (width / 2) / tan(fov / 2)`.
pub fn make_parallel_rig<T: Real>(
    baseline: T,
    image_width: usize,
    image_height: usize,
    fov_deg: T,
) -> Result<StereoRig<T>, CamGeoError> {
    if !(fov_deg > T::zero() && fov_deg < T::lit(180.0)) {
        return Err(CamGeoError::InvalidFov(fov_deg.as_f64()));
    }
    if !(baseline > T::zero()) || !baseline.is_finite() {
        return Err(CamGeoError::InvalidRig("baseline must be positive".into()));
    }
    if image_width == 0 || image_height == 0 {
        return Err(CamGeoError::InvalidRig("image dimensions must be positive".into()));
    }
    let half = T::lit(0.5);
    let cx = T::lit(image_width as f64) * half;
    let cy = T::lit(image_height as f64) * half;
    let f = cx / (fov_deg.to_radians() * half).tan();
    let (o, l) = (T::zero(), T::one());
    let a = Vec3::new(o, o, l);
    let h = Vec3::new(f, o, cx);
    let v = Vec3::new(o, f, cy);
    let left = CahvCamera::new(Vec3::zero(), a, h, v)?;
    let right = CahvCamera::new(Vec3::new(baseline, o, o), a, h, v)?;
    StereoRig::new(left, right, image_width, image_height)
}

/// How a 3D point is reduced to a scalar range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DistanceMode {
    /// Euclidean norm from the left camera center.
    #[default]
    Norm,
    /// Z component (depth along the left optical axis).
    Depth,
}

impl std::str::FromStr for DistanceMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "norm" => Ok(Self::Norm),
            "depth" | "z" => Ok(Self::Depth),
            other => Err(format!("unknown distance mode '{other}' (expected norm|depth)")),
        }
    }
}

/// Euclidean distance from the world origin (the left camera center).
#[inline]
pub fn distance_of<T: Real>(p: &Point3<T>) -> T {
    p.norm()
}

#[inline]
pub fn distance_with<T: Real>(p: &Point3<T>, mode: DistanceMode) -> T {
    match mode {
        DistanceMode::Norm => p.norm(),
        DistanceMode::Depth => p.z,
    }
}
