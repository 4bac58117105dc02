//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Criteria listed in `NON_GATING` are reported like the others but do not
//! fail the run; see the README for why each one is there.

#[path = "../../core/tests/common/gradcheck.rs"]
mod gradcheck;

use std::collections::HashSet;
use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rovervision::camgeo::{distance_of, make_parallel_rig, Pixel, Point3, StereoRig, Vec3};
use rovervision::features::{match_two_way, Keypoint};
use rovervision::imageproc::{clahe, load_pgm, ClaheConfig, GrayImage};
use rovervision::objpipe::{
    associate_keypoints, evaluate, range_object, write_comparison, AssociateConfig, Association, BBox, ComparisonRow,
    RangeConfig, SkipReason,
};
use rovervision::recon::{
    backproject, fit_alignment, read_ply, write_ply, Anchor, CloudPoint, DepthKind, DepthMap, MetricAlignment,
    PointCloud,
};
use rovervision::synthgen::{generate_dataset, SceneConfig};
use rovervision::tinynet::{train, MlpNet, TrainConfig};

/// Criteria that are reported but cannot fail the run.
const NON_GATING: [usize; 2] = [8, 11];

/// Thresholds used by the criteria, in one place.
mod tol {
    /// QR triangulation of exact projections: round-off only.
    pub const RECOVERY_M: f64 = 1e-9;
    /// Wall-clock budget for 10,000 triangulations.
    pub const RECOVERY_SECS: f64 = 5.0;
    /// Relative deviation of Z*d from f*b.
    pub const DISPARITY_REL: f64 = 1e-6;
    /// Test-set median absolute error of the trained network.
    pub const MEDIAN_CM: f64 = 2.26;
    /// Upper quartile of the same errors.
    pub const Q75_CM: f64 = 5.58;
    /// Training-set MAE after the last epoch.
    pub const TRAIN_MAE_CM: f64 = 1.0;
    pub const TRAIN_SECS: f64 = 900.0;
    pub const TEST_SAMPLES: usize = 3_855;
    /// Analytic vs central-difference gradients, relative.
    pub const GRAD_REL: f64 = 1e-4;
    /// Far-range clamp, cm.
    pub const FAR_CM: f64 = 1000.0;
    pub const MIN_MATCHES: usize = 4;
    /// Closed-form affine fit on noiseless anchors.
    pub const AFFINE: f64 = 1e-9;
    /// Back-projected points off the rendered plane, m.
    pub const PLANE_M: f64 = 1e-6;
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

#[derive(Default)]
struct Ctx {
    trained: Option<MlpNet>,
}

fn rig() -> StereoRig {
    StereoRig::default()
}

fn oracle_exactness(_: &mut Ctx) -> Outcome {
    let rig = rig();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (w, h) = (rig.image_width as f64, rig.image_height as f64);
    let start = Instant::now();
    let (mut n, mut worst) = (0, 0.0f64);
    while n < 10_000 {
        let px = Pixel::new(rng.random_range(0.0..w - 1.0), rng.random_range(0.0..h - 1.0));
        let z = rng.random_range(1.0..10.0);
        let (o, d) = rig.left.pixel_ray(&px).unwrap();
        let p: Point3 = o + d * (z / d.z);
        let (Ok(l), Ok(r)) = (rig.left.project(&p), rig.right.project(&p)) else {
            continue;
        };
        if !rig.contains(&r) {
            continue;
        }
        let q = rig.triangulate(&l, &r).unwrap();
        worst = worst.max((q - p).norm());
        n += 1;
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst <= tol::RECOVERY_M && secs < tol::RECOVERY_SECS,
        format!("max recovery error {worst:.2e} m over {n} points in {secs:.3} s"),
    )
}

fn disparity_law(_: &mut Ctx) -> Outcome {
    let rig = rig();
    let b = 0.24;
    // independent pinhole focal length for a 1024 px wide, 39 degree view
    let f = 512.0 / (19.5f64).to_radians().tan();
    let mut worst = 0.0f64;
    for z in 1..=10 {
        for x in [-0.5, 0.0, 0.7] {
            let p = Point3::new(x, 0.2, z as f64);
            let d = rig.left.project(&p).unwrap().x - rig.right.project(&p).unwrap().x;
            worst = worst.max((z as f64 * d - f * b).abs() / (f * b));
        }
    }
    outcome(worst <= tol::DISPARITY_REL, format!("max relative deviation of Z*d from f*b {worst:.2e}"))
}

fn ann_accuracy(ctx: &mut Ctx) -> Outcome {
    let rig = rig();
    let start = Instant::now();
    let draw = |n, seed| generate_dataset(&rig, &SceneConfig { n, seed, ..SceneConfig::default() }).unwrap();
    let (train_set, val_set, test_set) = (draw(50_000, 101), draw(5_000, 202), draw(tol::TEST_SAMPLES, 303));
    let cfg = TrainConfig::default();
    let (net, report) = match train(MlpNet::triangulation(rig.image_width, 7), &train_set, &val_set, &cfg) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("training failed: {e}")),
    };
    let m = evaluate(&net, &test_set).unwrap();
    let secs = start.elapsed().as_secs_f64();
    ctx.trained = Some(net);
    outcome(
        m.n == tol::TEST_SAMPLES
            && m.median_abs_err_cm <= tol::MEDIAN_CM
            && m.iqr_hi_cm <= tol::Q75_CM
            && report.train_mae_cm <= tol::TRAIN_MAE_CM
            && secs <= tol::TRAIN_SECS,
        format!(
            "{m}; train MAE {:.3} cm; {} epochs (best {}); {:.0} s",
            report.train_mae_cm, report.epochs_run, report.best_epoch, secs
        ),
    )
}

fn gradient_correctness(_: &mut Ctx) -> Outcome {
    let (mut worst, mut checked, mut skipped) = (0.0f64, 0, 0);
    for seed in 0..20 {
        let r = gradcheck::check_one(seed * 7919 + 3, 60);
        worst = worst.max(r.max_rel_err);
        checked += r.checked;
        skipped += r.skipped_at_kink;
    }
    outcome(
        worst <= tol::GRAD_REL && checked > 0,
        format!("max relative error {worst:.2e} over {checked} parameters in 20 nets ({skipped} kink crossings left out)"),
    )
}

fn learned_monotonicity(ctx: &mut Ctx) -> Outcome {
    let Some(net) = &ctx.trained else {
        return outcome(false, "no trained model");
    };
    let dists: Vec<f64> = [24.0, 48.0, 120.0, 240.0]
        .iter()
        .map(|d| {
            let p = net.forward(&[512.0 + d, 512.0, 512.0, 512.0]);
            distance_of(&Point3::new(p[0], p[1], p[2]))
        })
        .collect();
    let ok = dists.windows(2).all(|w| w[1] <= w[0]);
    outcome(
        ok,
        format!(
            "distances at disparity 24/48/120/240 px: {}",
            dists.iter().map(|d| format!("{d:.3} m")).collect::<Vec<_>>().join(", ")
        ),
    )
}

fn bbox(label: &str, px: &[Pixel]) -> BBox {
    let fold = |f: fn(f64, f64) -> f64, init: f64, c: fn(&Pixel) -> f64| px.iter().map(c).fold(init, f);
    BBox {
        class_id: 1,
        label: label.into(),
        x_min: fold(f64::min, f64::MAX, |p| p.x) - 2.0,
        y_min: fold(f64::min, f64::MAX, |p| p.y) - 2.0,
        x_max: fold(f64::max, f64::MIN, |p| p.x) + 2.0,
        y_max: fold(f64::max, f64::MIN, |p| p.y) + 2.0,
        confidence: 1.0,
    }
}

fn far_range(ctx: &mut Ctx) -> Outcome {
    let Some(net) = &ctx.trained else {
        return outcome(false, "no trained model");
    };
    let rig = rig();
    let mut lines = Vec::new();
    let mut ok = true;
    for (k, z) in [12.0, 14.0, 16.0, 18.0, 20.0].into_iter().enumerate() {
        let mut pairs = Vec::new();
        for x in [-0.4, 0.0, 0.4] {
            for y in [-0.3, 0.0, 0.3] {
                let p = Point3::new(x, y, z);
                pairs.push((rig.left.project(&p).unwrap(), rig.right.project(&p).unwrap()));
            }
        }
        let left: Vec<Pixel> = pairs.iter().map(|p| p.0).collect();
        let right: Vec<Pixel> = pairs.iter().map(|p| p.1).collect();
        let assoc = Association {
            left_index: k,
            right_index: k,
            left_box: bbox("rock", &left),
            right_box: bbox("rock", &right),
            pairs,
        };
        let Some(obj) = range_object(&assoc, net, &RangeConfig::default()) else {
            return outcome(false, format!("{z} m object was not ranged"));
        };
        ok &= obj.far_flag && obj.median_distance_cm == tol::FAR_CM;
        lines.push(format!(
            "{z} m: reported {:.2} cm (raw {:.2}, far_flag {})",
            obj.median_distance_cm, obj.raw_median_cm, obj.far_flag
        ));
    }
    outcome(ok, lines.join("; "))
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Index of the smallest value; the first one wins ties.
fn argmin(it: impl Iterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (k, v) in it.enumerate() {
        if best.is_none_or(|(_, b)| v < b) {
            best = Some((k, v));
        }
    }
    best.map(|b| b.0)
}

fn kp(x: f64, y: f64, descriptor: Vec<f64>) -> Keypoint {
    Keypoint {
        px: Pixel::new(x, y),
        response: 1.0,
        descriptor,
    }
}

fn matcher_correctness(_: &mut Ctx) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut violations = 0;
    let mut emitted_total = 0;
    for case in 0..100 {
        let dim = rng.random_range(1..=16);
        let coarse = case % 3 == 0;
        let desc = |rng: &mut ChaCha8Rng| -> Vec<f64> {
            (0..dim)
                .map(|_| if coarse { rng.random_range(-2i32..=2) as f64 * 0.5 } else { rng.random_range(-1.0..1.0) })
                .collect()
        };
        let nl = rng.random_range(0..=50);
        let nr = rng.random_range(0..=50);
        let l: Vec<Vec<f64>> = (0..nl).map(|_| desc(&mut rng)).collect();
        let r: Vec<Vec<f64>> = (0..nr).map(|_| desc(&mut rng)).collect();
        let lk: Vec<_> = l.iter().map(|d| kp(0.0, 0.0, d.clone())).collect();
        let rk: Vec<_> = r.iter().map(|d| kp(0.0, 0.0, d.clone())).collect();
        let m = match_two_way(&lk, &rk).unwrap();
        let emitted: HashSet<(usize, usize)> = m.iter().map(|m| (m.left_index, m.right_index)).collect();
        emitted_total += emitted.len();
        violations += (emitted.len() != m.len()) as usize;
        for i in 0..nl {
            for j in 0..nr {
                let fwd = argmin(r.iter().map(|b| dist(&l[i], b))) == Some(j);
                let back = argmin(l.iter().map(|a| dist(a, &r[j]))) == Some(i);
                violations += (emitted.contains(&(i, j)) != (fwd && back)) as usize;
            }
        }
    }

    // n mutual matches inside one candidate box pair
    let mut rule_ok = true;
    let mut seen = Vec::new();
    let boxes = |label: &str| {
        vec![BBox {
            class_id: 1,
            label: label.into(),
            x_min: 0.0,
            y_min: 0.0,
            x_max: 200.0,
            y_max: 100.0,
            confidence: 1.0,
        }]
    };
    for n in 0..=8usize {
        let one_hot = |k: usize| (0..8).map(|d| (d == k) as u8 as f64).collect::<Vec<_>>();
        let lk: Vec<_> = (0..n).map(|k| kp(40.0 + 15.0 * k as f64, 50.0, one_hot(k))).collect();
        let rk: Vec<_> = (0..n).map(|k| kp(30.0 + 15.0 * k as f64, 50.0, one_hot(k))).collect();
        let res = associate_keypoints(&boxes("rock"), &boxes("rock"), &lk, &rk, &AssociateConfig::default()).unwrap();
        let accepted = res.associations.len() == 1 && res.associations[0].n_matches() == n;
        let rejected = res.associations.is_empty()
            && res.skipped.iter().all(|s| s.reason == SkipReason::InsufficientMatches && s.best_matches == n);
        rule_ok &= if n >= tol::MIN_MATCHES { accepted } else { rejected };
        if n == 3 || n == 4 {
            seen.push(format!("{n} matches {}", if accepted { "accepted" } else { "rejected" }));
        }
    }
    outcome(
        violations == 0 && rule_ok,
        format!(
            "{violations} mutual-best violations over 100 random set pairs ({emitted_total} matches); {}",
            seen.join(", ")
        ),
    )
}

fn table_arithmetic(_: &mut Ctx) -> Outcome {
    // id, class, network cm, geometric cm, printed absolute error
    let table = [
        (1, "rock", 140.55, 141.23, "0.68"),
        (7, "rock", 150.18, 154.64, "4.46"),
        (6, "rock", 204.10, 203.44, "0.66"),
        (4, "rock", 214.63, 213.87, "0.76"),
        (2, "rock", 228.22, 231.24, "3.03"),
        (9, "rock", 336.99, 340.86, "3.87"),
        (0, "rock", 349.33, 351.45, "2.12"),
        (3, "artifact", 950.00, 3915.83, "2965.83"),
    ];
    let rows: Vec<ComparisonRow> = table
        .iter()
        .map(|&(id, label, ann, oracle, _)| ComparisonRow {
            object_id: id,
            label: label.into(),
            ann_cm: ann,
            oracle_cm: oracle,
        })
        .collect();
    let mut buf = Vec::new();
    write_comparison(&rows, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut mismatches = Vec::new();
    let mut n = 0;
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let id: usize = f[0].parse().unwrap();
        let expected = table.iter().find(|t| t.0 == id).unwrap().4;
        n += 1;
        if f[4] != expected {
            mismatches.push(format!("id {id}: |{} - {}| written as {}, table prints {expected}", f[2], f[3], f[4]));
        }
    }
    let detail = if mismatches.is_empty() {
        format!("{n}/{n} absolute errors reproduced")
    } else {
        format!("{}/{n} reproduced; {}", n - mismatches.len(), mismatches.join("; "))
    };
    outcome(mismatches.is_empty() && n == table.len(), detail)
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/clahe").join(name)
}

/// Plain global histogram equalization.
fn global_he(img: &GrayImage) -> GrayImage {
    let mut hist = [0usize; 256];
    for &p in img.data() {
        hist[p as usize] += 1;
    }
    let mut lut = [0u8; 256];
    let mut cdf = 0;
    for (v, h) in hist.iter().enumerate() {
        cdf += h;
        lut[v] = (cdf as f64 * 255.0 / img.data().len() as f64).round_ties_even() as u8;
    }
    GrayImage::from_fn(img.width(), img.height(), |x, y| lut[img.get(x, y) as usize])
}

fn clahe_goldens(_: &mut Ctx) -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    for name in ["gradient", "noise", "moon"] {
        let (input, golden) = match (load_pgm(fixture(&format!("{name}.pgm"))), load_pgm(fixture(&format!("{name}_clahe.pgm")))) {
            (Ok(a), Ok(b)) => (a, b),
            _ => return outcome(false, format!("missing fixture {name}")),
        };
        let out = clahe(&input, &ClaheConfig::default()).unwrap();
        let diff = out.data().iter().zip(golden.data()).filter(|(a, b)| a != b).count();
        ok &= diff == 0 && out.width() == golden.width() && out.height() == golden.height();
        notes.push(format!("{name} {diff} px differ"));
    }
    let cfg = ClaheConfig {
        clip_limit: 1e6,
        grid_x: 1,
        grid_y: 1,
    };
    let mut s = 99u32;
    let noisy = GrayImage::from_fn(40, 30, |_, _| {
        s = s.wrapping_mul(1664525).wrapping_add(1013904223);
        (s >> 24) as u8
    });
    let ramp = GrayImage::from_fn(64, 64, |x, y| ((x * 3 + y) % 97 + 40) as u8);
    let global = [noisy, ramp].iter().all(|img| clahe(img, &cfg).unwrap() == global_he(img));
    notes.push(format!("single unclipped tile equals global equalization: {global}"));
    outcome(ok && global, notes.join(", "))
}

fn reconstruction(_: &mut Ctx) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    // affine recovery: depth constant on 8x8 blocks, anchors at block centers
    let mut worst_fit = 0.0f64;
    for _ in 0..50 {
        let (s, t) = (rng.random_range(0.05..10.0), rng.random_range(-2.0..2.0));
        let vals: Vec<f64> = (0..16).map(|_| rng.random_range(0.5..20.0)).collect();
        let map = DepthMap::from_fn(32, 32, |x, y| vals[(y / 8) * 4 + x / 8]);
        let anchors: Vec<Anchor> = (0..16)
            .map(|k| Anchor {
                px: Pixel::new(((k % 4) * 8 + 4) as f64, ((k / 4) * 8 + 4) as f64),
                distance_cm: (s * vals[k] + t) * 100.0,
            })
            .collect();
        let a = fit_alignment(&map, &anchors).unwrap();
        worst_fit = worst_fit.max((a.scale - s).abs()).max((a.shift - t).abs());
    }

    // tilted plane rendered as range along each pixel ray
    let rig = make_parallel_rig(0.24, 96, 72, 39.0).unwrap();
    let cam = rig.left;
    let n = Vec3::new(0.2, -0.3, 1.0).normalized().unwrap();
    let offset = 4.0;
    let map = DepthMap::from_fn(96, 72, |x, y| {
        let (o, d) = cam.pixel_ray(&Pixel::new(x as f64, y as f64)).unwrap();
        (offset - n.dot(&o)) / n.dot(&d)
    });
    let img = GrayImage::from_fn(96, 72, |x, y| (x * 2 + y) as u8);
    let cloud = backproject(&map, &MetricAlignment::default(), &cam, &img, 1, DepthKind::Range).unwrap();
    let plane = cloud.points.iter().map(|p| (n.dot(&p.pos) - offset).abs()).fold(0.0, f64::max);

    // PLY round trip
    let pts = PointCloud {
        points: (0..500)
            .map(|k| CloudPoint {
                pos: Point3::new(rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0), rng.random_range(0.0..100.0)),
                gray: (k % 256) as u8,
            })
            .collect(),
    };
    let mut buf = Vec::new();
    write_ply(&pts, &mut buf).unwrap();
    let back = read_ply(buf.as_slice()).unwrap();
    let lossless = back.len() == pts.len()
        && pts.points.iter().zip(&back.points).all(|(a, b)| {
            a.gray == b.gray && a.pos.to_array().map(|v| v as f32) == b.pos.to_array().map(|v| v as f32)
        });
    outcome(
        worst_fit <= tol::AFFINE && plane <= tol::PLANE_M && cloud.len() == 96 * 72 && lossless,
        format!(
            "affine recovery error {worst_fit:.2e}, plane residual {plane:.2e} m over {} points, PLY round trip lossless: {lossless}",
            cloud.len()
        ),
    )
}

fn bench_report(_: &mut Ctx) -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_rovervision"))
        .args(["bench", "--n", "10000", "--out-dir"])
        .arg(dir.path())
        .output()
        .expect("spawn rovervision");
    if !out.status.success() {
        return outcome(false, format!("bench exited with {:?}", out.status.code()));
    }
    let Ok(report) = std::fs::read_to_string(dir.path().join("bench_report.txt")) else {
        return outcome(false, "bench_report.txt missing");
    };
    let rate = |name: &str| -> Option<f64> {
        let line = report.lines().find(|l| l.starts_with(&format!("{name}:")))?;
        line.split("samples_per_sec=").nth(1)?.trim().parse().ok()
    };
    let (Some(a64), Some(a32), Some(oracle)) = (rate("ann_batched_f64"), rate("ann_batched_f32"), rate("oracle_sequential"))
    else {
        return outcome(false, "report lacks a timing line");
    };
    let ann = a64.max(a32);
    outcome(
        ann >= oracle,
        format!("batched network {ann:.0} samples/s (f64 {a64:.0}), sequential triangulation {oracle:.0} samples/s, ratio {:.3}", ann / oracle),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn(&mut Ctx) -> Outcome); 11] = [
        ("oracle exactness", oracle_exactness),
        ("disparity law", disparity_law),
        ("network accuracy", ann_accuracy),
        ("gradient correctness", gradient_correctness),
        ("learned monotonicity", learned_monotonicity),
        ("far-range stability", far_range),
        ("matcher correctness", matcher_correctness),
        ("comparison table arithmetic", table_arithmetic),
        ("CLAHE goldens", clahe_goldens),
        ("reconstruction", reconstruction),
        ("bench report", bench_report),
    ];
    let mut ctx = Ctx::default();
    let mut gating_failures = Vec::new();
    let mut passed = 0;
    let total = Instant::now();
    for (k, (name, check)) in criteria.iter().enumerate() {
        let id = k + 1;
        let start = Instant::now();
        let o = check(&mut ctx);
        let took = start.elapsed();
        let tag = match (o.pass, NON_GATING.contains(&id)) {
            (true, _) => "PASS",
            (false, false) => "FAIL",
            (false, true) => "FAIL (non-gating)",
        };
        println!("criterion {id:>2} {tag}: {name}: {} [{}]", o.detail, fmt_secs(took));
        if o.pass {
            passed += 1;
        } else if !NON_GATING.contains(&id) {
            gating_failures.push(id);
        }
    }
    println!(
        "acceptance: {passed}/{} criteria passed in {}",
        criteria.len(),
        fmt_secs(total.elapsed())
    );
    if gating_failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("gating failures: {gating_failures:?}");
        ExitCode::FAILURE
    }
}

fn fmt_secs(d: Duration) -> String {
    format!("{:.2} s", d.as_secs_f64())
}
