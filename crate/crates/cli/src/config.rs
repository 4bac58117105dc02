//! `key = value` run configuration shared by all subcommands.

use std::path::Path;

use rovervision::camgeo::{DistanceMode, StereoRig, DEFAULT_BASELINE_M, DEFAULT_FOV_DEG, DEFAULT_IMAGE_SIZE};
use rovervision::imageproc::ClaheConfig;
use rovervision::recon::DepthKind;
use rovervision::synthgen::SceneConfig;
use rovervision::tinynet::{PlateauDecay, TrainConfig};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub baseline: f64,
    pub fov_deg: f64,
    pub image_width: usize,
    pub image_height: usize,
    pub clahe_clip: f64,
    pub clahe_grid_x: usize,
    pub clahe_grid_y: usize,
    pub n_samples: usize,
    pub z_min: f64,
    pub z_max: f64,
    pub noise_sigma: f64,
    pub val_frac: f64,
    pub test_frac: f64,
    pub learning_rate: f64,
    pub patience: usize,
    pub max_epochs: usize,
    pub batch_size: usize,
    pub lr_decay: bool,
    pub lr_decay_factor: f64,
    pub lr_decay_patience: usize,
    pub min_lr: f64,
    pub far_threshold: f64,
    pub distance_mode: DistanceMode,
    pub depth_kind: DepthKind,
    pub stride: usize,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let scene = SceneConfig::default();
        let train = TrainConfig::default();
        let decay = PlateauDecay::default();
        let clahe = ClaheConfig::default();
        Self {
            baseline: DEFAULT_BASELINE_M,
            fov_deg: DEFAULT_FOV_DEG,
            image_width: DEFAULT_IMAGE_SIZE,
            image_height: DEFAULT_IMAGE_SIZE,
            clahe_clip: clahe.clip_limit,
            clahe_grid_x: clahe.grid_x,
            clahe_grid_y: clahe.grid_y,
            n_samples: scene.n,
            z_min: scene.z_min,
            z_max: scene.z_max,
            noise_sigma: scene.noise_sigma,
            val_frac: 0.1,
            test_frac: 0.1,
            learning_rate: train.learning_rate,
            patience: train.patience,
            max_epochs: train.max_epochs,
            batch_size: train.batch_size,
            lr_decay: train.lr_decay.is_some(),
            lr_decay_factor: decay.factor,
            lr_decay_patience: decay.patience,
            min_lr: decay.min_lr,
            far_threshold: 10.0,
            distance_mode: DistanceMode::Norm,
            depth_kind: DepthKind::Range,
            stride: 1,
            seed: scene.seed,
        }
    }
}

/// Every accepted key.
pub const KEYS: [&str; 26] = [
    "baseline",
    "fov_deg",
    "image_width",
    "image_height",
    "clahe_clip",
    "clahe_grid_x",
    "clahe_grid_y",
    "n_samples",
    "z_min",
    "z_max",
    "noise_sigma",
    "val_frac",
    "test_frac",
    "learning_rate",
    "patience",
    "max_epochs",
    "batch_size",
    "lr_decay",
    "lr_decay_factor",
    "lr_decay_patience",
    "min_lr",
    "far_threshold",
    "distance_mode",
    "depth_kind",
    "stride",
    "seed",
];

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| CliError::Validation(format!("config key `{key}`: cannot parse {value:?}: {e}")))
}

/// Help text listing each key with its default.
pub fn keys_help() -> String {
    let d = RunConfig::default();
    let mut s = String::from("Config keys (key = value, `#` comments) and defaults:\n");
    for k in KEYS {
        s.push_str(&format!("  {k:<18} {}\n", d.get(k)));
    }
    s
}

impl RunConfig {
    /// Current value of `key` as text.
    pub fn get(&self, key: &str) -> String {
        match key {
            "baseline" => self.baseline.to_string(),
            "fov_deg" => self.fov_deg.to_string(),
            "image_width" => self.image_width.to_string(),
            "image_height" => self.image_height.to_string(),
            "clahe_clip" => self.clahe_clip.to_string(),
            "clahe_grid_x" => self.clahe_grid_x.to_string(),
            "clahe_grid_y" => self.clahe_grid_y.to_string(),
            "n_samples" => self.n_samples.to_string(),
            "z_min" => self.z_min.to_string(),
            "z_max" => self.z_max.to_string(),
            "noise_sigma" => self.noise_sigma.to_string(),
            "val_frac" => self.val_frac.to_string(),
            "test_frac" => self.test_frac.to_string(),
            "learning_rate" => self.learning_rate.to_string(),
            "patience" => self.patience.to_string(),
            "max_epochs" => self.max_epochs.to_string(),
            "batch_size" => self.batch_size.to_string(),
            "lr_decay" => self.lr_decay.to_string(),
            "lr_decay_factor" => self.lr_decay_factor.to_string(),
            "lr_decay_patience" => self.lr_decay_patience.to_string(),
            "min_lr" => self.min_lr.to_string(),
            "far_threshold" => self.far_threshold.to_string(),
            "distance_mode" => match self.distance_mode {
                DistanceMode::Norm => "norm".into(),
                DistanceMode::Depth => "depth".into(),
            },
            "depth_kind" => match self.depth_kind {
                DepthKind::Range => "range".into(),
                DepthKind::Axial => "axial".into(),
            },
            "stride" => self.stride.to_string(),
            "seed" => self.seed.to_string(),
            _ => String::new(),
        }
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        match key {
            "baseline" => self.baseline = parse(key, value)?,
            "fov_deg" => self.fov_deg = parse(key, value)?,
            "image_width" => self.image_width = parse(key, value)?,
            "image_height" => self.image_height = parse(key, value)?,
            "clahe_clip" => self.clahe_clip = parse(key, value)?,
            "clahe_grid_x" => self.clahe_grid_x = parse(key, value)?,
            "clahe_grid_y" => self.clahe_grid_y = parse(key, value)?,
            "n_samples" => self.n_samples = parse(key, value)?,
            "z_min" => self.z_min = parse(key, value)?,
            "z_max" => self.z_max = parse(key, value)?,
            "noise_sigma" => self.noise_sigma = parse(key, value)?,
            "val_frac" => self.val_frac = parse(key, value)?,
            "test_frac" => self.test_frac = parse(key, value)?,
            "learning_rate" => self.learning_rate = parse(key, value)?,
            "patience" => self.patience = parse(key, value)?,
            "max_epochs" => self.max_epochs = parse(key, value)?,
            "batch_size" => self.batch_size = parse(key, value)?,
            "lr_decay" => self.lr_decay = parse(key, value)?,
            "lr_decay_factor" => self.lr_decay_factor = parse(key, value)?,
            "lr_decay_patience" => self.lr_decay_patience = parse(key, value)?,
            "min_lr" => self.min_lr = parse(key, value)?,
            "far_threshold" => self.far_threshold = parse(key, value)?,
            "distance_mode" => self.distance_mode = parse(key, value)?,
            "depth_kind" => self.depth_kind = parse(key, value)?,
            "stride" => self.stride = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            other => return Err(CliError::Validation(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines over the defaults. `#` starts a comment.
    pub fn parse_str(text: &str) -> Result<Self, CliError> {
        let mut cfg = Self::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Validation(format!("config line {}: expected key = value", n + 1)))?;
            cfg.set(k.trim(), v.trim())?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse_str(&text)
    }

    /// Checks value ranges, naming the first offending key.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |key: &str, why: &str| Err(CliError::Validation(format!("config key `{key}`: {why}")));
        if !(self.baseline > 0.0 && self.baseline.is_finite()) {
            return bad("baseline", "must be positive");
        }
        if !(self.fov_deg > 0.0 && self.fov_deg < 180.0) {
            return bad("fov_deg", "must lie in (0, 180)");
        }
        if self.image_width == 0 {
            return bad("image_width", "must be positive");
        }
        if self.image_height == 0 {
            return bad("image_height", "must be positive");
        }
        if !(self.clahe_clip >= 1.0) {
            return bad("clahe_clip", "must be at least 1");
        }
        if self.clahe_grid_x == 0 {
            return bad("clahe_grid_x", "must be positive");
        }
        if self.clahe_grid_y == 0 {
            return bad("clahe_grid_y", "must be positive");
        }
        if self.n_samples == 0 {
            return bad("n_samples", "must be positive");
        }
        if !(self.z_min > 0.0) {
            return bad("z_min", "must be positive");
        }
        if !(self.z_max > self.z_min) {
            return bad("z_max", "must exceed z_min");
        }
        if !(self.noise_sigma >= 0.0) {
            return bad("noise_sigma", "must be non-negative");
        }
        if !(self.val_frac > 0.0 && self.val_frac < 1.0) {
            return bad("val_frac", "must lie in (0, 1)");
        }
        if !(self.test_frac > 0.0 && self.val_frac + self.test_frac < 1.0) {
            return bad("test_frac", "must be positive with val_frac + test_frac < 1");
        }
        if !(self.learning_rate > 0.0) {
            return bad("learning_rate", "must be positive");
        }
        if self.max_epochs == 0 {
            return bad("max_epochs", "must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch_size", "must be positive");
        }
        if !(self.lr_decay_factor > 0.0 && self.lr_decay_factor < 1.0) {
            return bad("lr_decay_factor", "must lie in (0, 1)");
        }
        if !(self.min_lr >= 0.0) {
            return bad("min_lr", "must be non-negative");
        }
        if !(self.far_threshold > 0.0) {
            return bad("far_threshold", "must be positive");
        }
        if self.stride == 0 {
            return bad("stride", "must be at least 1");
        }
        Ok(())
    }

    pub fn rig(&self) -> Result<StereoRig, CliError> {
        rovervision::camgeo::make_parallel_rig(self.baseline, self.image_width, self.image_height, self.fov_deg)
            .map_err(|e| CliError::Validation(e.to_string()))
    }

    pub fn scene(&self) -> SceneConfig {
        SceneConfig {
            z_min: self.z_min,
            z_max: self.z_max,
            n: self.n_samples,
            noise_sigma: self.noise_sigma,
            seed: self.seed,
        }
    }

    pub fn clahe(&self) -> ClaheConfig {
        ClaheConfig {
            clip_limit: self.clahe_clip,
            grid_x: self.clahe_grid_x,
            grid_y: self.clahe_grid_y,
        }
    }

    pub fn train(&self) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            patience: self.patience,
            max_epochs: self.max_epochs,
            batch_size: self.batch_size,
            seed: self.seed,
            lr_decay: self.lr_decay.then_some(PlateauDecay {
                factor: self.lr_decay_factor,
                patience: self.lr_decay_patience,
                min_lr: self.min_lr,
            }),
            ..TrainConfig::default()
        }
    }
}
