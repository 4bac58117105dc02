use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::Args;
use rovervision::camgeo::rigfile::{format_rig, load_rig};
use rovervision::camgeo::{DistanceMode, Pixel, StereoRig};
use rovervision::features::load_keypoints;
use rovervision::imageproc::{clahe, load_pgm, GrayImage};
use rovervision::objpipe::{
    associate, associate_keypoints, evaluate_with, load_detections, load_label_map, median, oracle_distances_cm,
    range_object, write_comparison, write_skip_log, write_table, write_table_debug, AssociateConfig, ComparisonRow,
    DetectionFormat, EvalMetrics, LabelMap, RangeConfig,
};
use rovervision::recon::{backproject, fit_alignment, load_depth_for, save_ply, Anchor, DepthKind, MetricAlignment};
use rovervision::synthgen::{generate_dataset, load_csv, split_dataset, write_csv, TriangulationSample};
use rovervision::tinynet::{load_weights, save_weights, train_with_progress, write_history_csv, MlpNet};

use crate::config::RunConfig;
use crate::error::{CliError, Classify};
use crate::RigArgs;

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).at(dir)
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    Ok(BufWriter::new(File::create(path).at(path)?))
}

fn finish(mut w: BufWriter<File>, path: &Path) -> Result<(), CliError> {
    w.flush().at(path)
}

/// Applies the rig flags to `cfg` and builds the rig.
pub fn resolve_rig(cfg: &mut RunConfig, a: &RigArgs) -> Result<StereoRig, CliError> {
    if let Some(v) = a.baseline {
        cfg.baseline = v;
    }
    if let Some(v) = a.fov {
        cfg.fov_deg = v;
    }
    if let Some(v) = a.width {
        cfg.image_width = v;
    }
    if let Some(v) = a.height {
        cfg.image_height = v;
    }
    cfg.validate()?;
    match &a.rig {
        Some(p) => load_rig(p).at(p),
        None => cfg.rig(),
    }
}

fn check_image_dims(rig: &StereoRig, img: &GrayImage, path: &Path) -> Result<(), CliError> {
    if (rig.image_width, rig.image_height) != (img.width(), img.height()) {
        return Err(CliError::Validation(format!(
            "{}: image is {}x{} but the rig expects {}x{}",
            path.display(),
            img.width(),
            img.height(),
            rig.image_width,
            rig.image_height
        )));
    }
    Ok(())
}

fn load_net(path: &Path) -> Result<MlpNet, CliError> {
    let net: MlpNet = load_weights(path).at(path)?;
    Ok(net)
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Output directory for dataset.csv, train/val/test.csv and rig.txt
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Number of samples [default: 50000]
    #[arg(long)]
    pub n: Option<usize>,
    /// Random seed [default: 7]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Nearest forward depth in meters [default: 1]
    #[arg(long)]
    pub z_min: Option<f64>,
    /// Farthest forward depth in meters [default: 10]
    #[arg(long)]
    pub z_max: Option<f64>,
    /// Gaussian pixel noise standard deviation [default: 0]
    #[arg(long)]
    pub noise: Option<f64>,
    /// Validation fraction [default: 0.1]
    #[arg(long)]
    pub val_frac: Option<f64>,
    /// Test fraction [default: 0.1]
    #[arg(long)]
    pub test_frac: Option<f64>,
    #[command(flatten)]
    pub rig: RigArgs,
}

pub fn synth(mut cfg: RunConfig, a: SynthArgs) -> Result<(), CliError> {
    macro_rules! over {
        ($($flag:ident => $key:ident),*) => {$( if let Some(v) = a.$flag { cfg.$key = v; } )*};
    }
    over!(n => n_samples, seed => seed, z_min => z_min, z_max => z_max, noise => noise_sigma,
          val_frac => val_frac, test_frac => test_frac);
    let rig = resolve_rig(&mut cfg, &a.rig)?;
    let samples = generate_dataset(&rig, &cfg.scene()).map_err(|e| CliError::Validation(e.to_string()))?;
    let train_frac = 1.0 - cfg.val_frac - cfg.test_frac;
    let (train, val, test) = split_dataset(&samples, train_frac, cfg.val_frac, cfg.seed)
        .map_err(|e| CliError::Validation(e.to_string()))?;

    create_dir(&a.out_dir)?;
    for (name, set) in [("dataset.csv", &samples), ("train.csv", &train), ("val.csv", &val), ("test.csv", &test)] {
        let path = a.out_dir.join(name);
        let mut w = create(&path)?;
        write_csv(set, &mut w).at(&path)?;
        finish(w, &path)?;
    }
    let rig_path = a.out_dir.join("rig.txt");
    std::fs::write(&rig_path, format_rig(&rig)).at(&rig_path)?;
    println!(
        "wrote {} samples (train {}, val {}, test {}) to {}",
        samples.len(),
        train.len(),
        val.len(),
        test.len(),
        a.out_dir.display()
    );
    Ok(())
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Training CSV (x1,y1,x2,y2,X,Y,Z)
    #[arg(long)]
    pub train: PathBuf,
    /// Validation CSV used for early stopping
    #[arg(long)]
    pub val: PathBuf,
    /// Output directory for weights.bin and history.csv
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Initial learning rate [default: 0.001]
    #[arg(long)]
    pub lr: Option<f64>,
    /// Early-stopping patience in epochs [default: 10]
    #[arg(long)]
    pub patience: Option<usize>,
    /// Epoch limit [default: 150]
    #[arg(long)]
    pub max_epochs: Option<usize>,
    /// Mini-batch size [default: 16]
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Random seed for initialisation and shuffling [default: 7]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Keep the learning rate constant (halving on validation plateaus is on
    /// by default)
    #[arg(long)]
    pub no_lr_decay: bool,
    /// Image width used for input scaling [default: 1024]
    #[arg(long)]
    pub width: Option<usize>,
}

pub fn train(mut cfg: RunConfig, a: TrainArgs) -> Result<(), CliError> {
    if let Some(v) = a.lr {
        cfg.learning_rate = v;
    }
    if let Some(v) = a.patience {
        cfg.patience = v;
    }
    if let Some(v) = a.max_epochs {
        cfg.max_epochs = v;
    }
    if let Some(v) = a.batch_size {
        cfg.batch_size = v;
    }
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    if let Some(v) = a.width {
        cfg.image_width = v;
    }
    if a.no_lr_decay {
        cfg.lr_decay = false;
    }
    cfg.validate()?;

    let train_set = load_csv(&a.train).at(&a.train)?;
    let val_set = load_csv(&a.val).at(&a.val)?;
    let net = MlpNet::triangulation(cfg.image_width, cfg.seed);
    let (net, report) = train_with_progress(net, &train_set, &val_set, &cfg.train(), |r| {
        if r.epoch == 1 || r.epoch % 10 == 0 {
            eprintln!("epoch {:>3}  train {:.4} cm  val {:.4} cm", r.epoch, r.train_mae_cm, r.val_mae_cm);
        }
    })
    .map_err(|e| CliError::Validation(e.to_string()))?;

    create_dir(&a.out_dir)?;
    let wpath = a.out_dir.join("weights.bin");
    save_weights(&net, &wpath).at(&wpath)?;
    let hpath = a.out_dir.join("history.csv");
    let mut w = create(&hpath)?;
    write_history_csv(&report.history, &mut w).at(&hpath)?;
    finish(w, &hpath)?;
    println!(
        "epochs {} (best {}), train MAE {:.4} cm, best val MAE {:.4} cm{}",
        report.epochs_run,
        report.best_epoch,
        report.train_mae_cm,
        report.best_val_mae_cm,
        if report.stopped_early { ", stopped early" } else { "" }
    );
    Ok(())
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Held-out CSV with ground truth
    #[arg(long)]
    pub test: PathBuf,
    /// Weight file to evaluate
    #[arg(long, conflicts_with = "predictions", required_unless_present = "predictions")]
    pub weights: Option<PathBuf>,
    /// Precomputed predictions instead of a model: CSV with header X,Y,Z,
    /// one row per test row
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    /// Range measure: norm (Euclidean distance) or depth (Z) [default: norm]
    #[arg(long)]
    pub distance: Option<DistanceMode>,
    /// Directory for metrics.csv
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

fn read_predictions(path: &Path) -> Result<Vec<[f64; 3]>, CliError> {
    let text = std::fs::read_to_string(path).at(path)?;
    let mut lines = text.lines();
    let bad = |m: String| CliError::Validation(format!("{}: {m}", path.display()));
    if lines.next().map(str::trim) != Some("X,Y,Z") {
        return Err(bad("expected header X,Y,Z".into()));
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(k, l)| {
            let v: Vec<f64> = l
                .split(',')
                .map(|f| f.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| bad(format!("line {}: {e}", k + 2)))?;
            <[f64; 3]>::try_from(v).map_err(|_| bad(format!("line {}: expected 3 values", k + 2)))
        })
        .collect()
}

pub fn eval(mut cfg: RunConfig, a: EvalArgs) -> Result<(), CliError> {
    if let Some(m) = a.distance {
        cfg.distance_mode = m;
    }
    let test = load_csv(&a.test).at(&a.test)?;
    let metrics = match (&a.weights, &a.predictions) {
        (Some(w), _) => evaluate_with(&load_net(w)?, &test, cfg.distance_mode).at(&a.test)?,
        (None, Some(p)) => {
            let preds = read_predictions(p)?;
            if preds.len() != test.len() {
                return Err(CliError::Validation(format!(
                    "{} predictions for {} test rows",
                    preds.len(),
                    test.len()
                )));
            }
            let errors: Vec<f64> = preds
                .iter()
                .zip(&test)
                .map(|(p, s)| {
                    let pd = rovervision::camgeo::distance_with(&(*p).into(), cfg.distance_mode);
                    let td = rovervision::camgeo::distance_with(&s.truth, cfg.distance_mode);
                    (pd - td).abs() * 100.0
                })
                .collect();
            EvalMetrics::from_errors(&errors).at(p)?
        }
        (None, None) => unreachable!("clap requires one of --weights / --predictions"),
    };
    println!("{metrics}");
    if let Some(dir) = &a.out_dir {
        create_dir(dir)?;
        let path = dir.join("metrics.csv");
        let body = format!(
            "median_abs_err_cm,iqr_lo_cm,iqr_hi_cm,mae_cm,n\n{:.4},{:.4},{:.4},{:.4},{}\n",
            metrics.median_abs_err_cm, metrics.iqr_lo_cm, metrics.iqr_hi_cm, metrics.mae_cm, metrics.n
        );
        std::fs::write(&path, body).at(&path)?;
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct RangeArgs {
    /// Left image (8-bit binary PGM)
    #[arg(long)]
    pub left: PathBuf,
    /// Right image (8-bit binary PGM)
    #[arg(long)]
    pub right: PathBuf,
    /// Left detections (YOLO txt or COCO json)
    #[arg(long)]
    pub left_dets: PathBuf,
    /// Right detections (YOLO txt or COCO json)
    #[arg(long)]
    pub right_dets: PathBuf,
    /// Detection format: yolo or coco [default: from the file extension]
    #[arg(long)]
    pub format: Option<String>,
    /// Label map file of `id name` lines [default: 0 crater, 1 rock, 2 artifact]
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Trained weight file
    #[arg(long)]
    pub weights: PathBuf,
    /// Externally computed left keypoints (CSV x,y,d0,...); replaces the
    /// built-in detector together with --right-keypoints
    #[arg(long, requires = "right_keypoints")]
    pub left_keypoints: Option<PathBuf>,
    #[arg(long, requires = "left_keypoints")]
    pub right_keypoints: Option<PathBuf>,
    /// Range beyond which medians are flagged and clamped, meters [default: 10]
    #[arg(long)]
    pub far_threshold: Option<f64>,
    /// Range measure: norm or depth [default: norm]
    #[arg(long)]
    pub distance: Option<DistanceMode>,
    /// Skip contrast enhancement (clip 2.0, 8x8 tiles by default)
    #[arg(long)]
    pub no_clahe: bool,
    /// Also write comparison.csv against geometric triangulation
    #[arg(long)]
    pub compare: bool,
    /// Add the unclamped median as a trailing table column
    #[arg(long)]
    pub debug: bool,
    /// Output directory for objects.csv, skipped.csv (and comparison.csv)
    #[arg(long)]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub rig: RigArgs,
}

pub fn range(mut cfg: RunConfig, a: RangeArgs) -> Result<(), CliError> {
    if let Some(v) = a.far_threshold {
        cfg.far_threshold = v;
    }
    if let Some(m) = a.distance {
        cfg.distance_mode = m;
    }
    let left_raw = load_pgm(&a.left).at(&a.left)?;
    let right_raw = load_pgm(&a.right).at(&a.right)?;
    if a.rig.width.is_none() {
        cfg.image_width = left_raw.width();
    }
    if a.rig.height.is_none() {
        cfg.image_height = left_raw.height();
    }
    let rig = resolve_rig(&mut cfg, &a.rig)?;
    check_image_dims(&rig, &left_raw, &a.left)?;
    if (right_raw.width(), right_raw.height()) != (left_raw.width(), left_raw.height()) {
        return Err(CliError::Validation("left and right images differ in size".into()));
    }
    let labels = match &a.labels {
        Some(p) => load_label_map(p).at(p)?,
        None => LabelMap::default(),
    };
    let fmt = |p: &Path| match &a.format {
        Some(f) => f.parse::<DetectionFormat>().map_err(|e| CliError::Validation(e.to_string())),
        None => Ok(DetectionFormat::from_path(p)),
    };
    let (w, h) = (left_raw.width(), left_raw.height());
    let lb = load_detections(&a.left_dets, fmt(&a.left_dets)?, w, h, &labels).at(&a.left_dets)?;
    let rb = load_detections(&a.right_dets, fmt(&a.right_dets)?, w, h, &labels).at(&a.right_dets)?;
    let net = load_net(&a.weights)?;

    let assoc_cfg = AssociateConfig::default();
    let result = match (&a.left_keypoints, &a.right_keypoints) {
        (Some(lp), Some(rp)) => {
            let lk = load_keypoints(lp).at(lp)?;
            let rk = load_keypoints(rp).at(rp)?;
            associate_keypoints(&lb, &rb, &lk, &rk, &assoc_cfg).map_err(|e| CliError::Validation(e.to_string()))?
        }
        _ => {
            let prep = |img: GrayImage, p: &Path| -> Result<GrayImage, CliError> {
                if a.no_clahe {
                    Ok(img)
                } else {
                    clahe(&img, &cfg.clahe()).at(p)
                }
            };
            let left = prep(left_raw, &a.left)?;
            let right = prep(right_raw, &a.right)?;
            associate(&lb, &rb, &left, &right, &assoc_cfg)
        }
    };
    let range_cfg = RangeConfig {
        far_threshold_m: cfg.far_threshold,
        mode: cfg.distance_mode,
    };
    let objects: Vec<_> = result
        .associations
        .iter()
        .filter_map(|assoc| range_object(assoc, &net, &range_cfg))
        .collect();

    create_dir(&a.out_dir)?;
    let path = a.out_dir.join("objects.csv");
    let mut w = create(&path)?;
    if a.debug {
        write_table_debug(&objects, &mut w).at(&path)?;
    } else {
        write_table(&objects, &mut w).at(&path)?;
    }
    finish(w, &path)?;
    let path = a.out_dir.join("skipped.csv");
    let mut w = create(&path)?;
    write_skip_log(&result.skipped, &mut w).at(&path)?;
    finish(w, &path)?;

    if a.compare {
        let rows: Vec<ComparisonRow> = result
            .associations
            .iter()
            .zip(&objects)
            .filter_map(|(assoc, obj)| {
                let oracle = median(&oracle_distances_cm(assoc, &rig, cfg.distance_mode))?;
                Some(ComparisonRow {
                    object_id: obj.object_id,
                    label: obj.label.clone(),
                    ann_cm: obj.median_distance_cm,
                    oracle_cm: oracle,
                })
            })
            .collect();
        let path = a.out_dir.join("comparison.csv");
        let mut w = create(&path)?;
        write_comparison(&rows, &mut w).at(&path)?;
        finish(w, &path)?;
    }
    println!(
        "{} objects ranged, {} boxes skipped; results in {}",
        objects.len(),
        result.skipped.len(),
        a.out_dir.display()
    );
    Ok(())
}

#[derive(Args, Debug)]
pub struct ReconstructArgs {
    /// Left image providing point intensities (8-bit PGM)
    #[arg(long)]
    pub image: PathBuf,
    /// Depth map: PFM, or 16-bit PGM with a `<path>.scale` sidecar
    #[arg(long)]
    pub depth: PathBuf,
    /// objects.csv from `range`; box centers become alignment anchors (far
    /// flagged rows are ignored). Without it the depth map is used as is.
    #[arg(long)]
    pub objects: Option<PathBuf>,
    /// Pixel stride of the back-projection grid [default: 1]
    #[arg(long)]
    pub stride: Option<usize>,
    /// Depth convention: range (along the ray) or axial [default: range]
    #[arg(long)]
    pub depth_kind: Option<DepthKind>,
    /// Output directory for cloud.ply
    #[arg(long)]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub rig: RigArgs,
}

/// Anchors from an objects table: left box center and reported median.
fn read_anchors(path: &Path) -> Result<Vec<Anchor>, CliError> {
    let text = std::fs::read_to_string(path).at(path)?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    if !header.starts_with(rovervision::objpipe::TABLE_HEADER) {
        return Err(CliError::Validation(format!("{}: not an objects table", path.display())));
    }
    let mut out = Vec::new();
    for (k, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let f: Vec<&str> = line.split(',').collect();
        let bad = || CliError::Validation(format!("{}: malformed row {}", path.display(), k + 2));
        if f.len() < 9 {
            return Err(bad());
        }
        let num = |i: usize| f[i].trim().parse::<f64>().map_err(|_| bad());
        if f[8].trim() == "true" {
            continue;
        }
        out.push(Anchor {
            px: Pixel::new(0.5 * (num(2)? + num(4)?), 0.5 * (num(3)? + num(5)?)),
            distance_cm: num(7)?,
        });
    }
    Ok(out)
}

pub fn reconstruct(mut cfg: RunConfig, a: ReconstructArgs) -> Result<(), CliError> {
    if let Some(v) = a.stride {
        cfg.stride = v;
    }
    if let Some(v) = a.depth_kind {
        cfg.depth_kind = v;
    }
    let img = load_pgm(&a.image).at(&a.image)?;
    if a.rig.width.is_none() {
        cfg.image_width = img.width();
    }
    if a.rig.height.is_none() {
        cfg.image_height = img.height();
    }
    let rig = resolve_rig(&mut cfg, &a.rig)?;
    check_image_dims(&rig, &img, &a.image)?;
    let depth = load_depth_for(&a.depth, &img).at(&a.depth)?;
    let align = match &a.objects {
        Some(p) => {
            let anchors = read_anchors(p)?;
            if anchors.is_empty() {
                MetricAlignment::default()
            } else {
                fit_alignment(&depth, &anchors).at(p)?
            }
        }
        None => MetricAlignment::default(),
    };
    let cloud = backproject(&depth, &align, &rig.left, &img, cfg.stride, cfg.depth_kind).at(&a.depth)?;
    create_dir(&a.out_dir)?;
    let path = a.out_dir.join("cloud.ply");
    save_ply(&cloud, &path).at(&path)?;
    println!(
        "alignment scale {:.6} shift {:.6} m{}; {} points written to {}",
        align.scale,
        align.shift,
        if align.degenerate { " (shift only)" } else { "" },
        cloud.len(),
        path.display()
    );
    Ok(())
}

/// Samples used by `bench`: generated on the configured rig.
pub fn bench_samples(cfg: &RunConfig, rig: &StereoRig, n: usize) -> Result<Vec<TriangulationSample>, CliError> {
    let mut scene = cfg.scene();
    scene.n = n;
    generate_dataset(rig, &scene).map_err(|e| CliError::Validation(e.to_string()))
}
