//! Throughput of batched network inference against a sequential loop of
//! geometric triangulations over the same samples.

use std::hint::black_box;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use clap::Args;
use rovervision::tinynet::{MlpNet, PackedMlp};

use crate::commands::{bench_samples, resolve_rig};
use crate::config::RunConfig;
use crate::error::{CliError, Classify};
use crate::RigArgs;

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Number of samples
    #[arg(long, default_value_t = 10_000)]
    pub n: usize,
    /// Timed repetitions after one warm-up pass; the fastest is reported
    #[arg(long, default_value_t = 9)]
    pub repeats: usize,
    /// Weight file; without it a freshly initialised network of the same
    /// shape is timed (inference cost does not depend on the weights)
    #[arg(long)]
    pub weights: Option<PathBuf>,
    /// Seed for the benchmark samples [default: 7]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory for bench_report.txt
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[command(flatten)]
    pub rig: RigArgs,
}

fn timed<R>(f: impl FnOnce() -> R) -> Duration {
    let t = Instant::now();
    black_box(f());
    t.elapsed()
}

pub fn bench(mut cfg: RunConfig, a: BenchArgs) -> Result<(), CliError> {
    if a.n == 0 || a.repeats == 0 {
        return Err(CliError::Validation("--n and --repeats must be positive".into()));
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    let rig = resolve_rig(&mut cfg, &a.rig)?;
    let samples = bench_samples(&cfg, &rig, a.n)?;
    let net: MlpNet = match &a.weights {
        Some(p) => rovervision::tinynet::load_weights(p).at(p)?,
        None => MlpNet::triangulation(rig.image_width, cfg.seed),
    };
    let packed = PackedMlp::new(&net.cast::<f32>());
    let inputs: Vec<[f64; 4]> = samples.iter().map(|s| s.input()).collect();
    let inputs32: Vec<[f32; 4]> = inputs.iter().map(|r| r.map(|v| v as f32)).collect();

    let oracle_loop = || {
        samples
            .iter()
            .map(|s| rig.triangulate(black_box(&s.left_px()), black_box(&s.right_px())).map(|p| p.z).unwrap_or(0.0))
            .sum::<f64>()
    };
    // interleaved so clock changes and background load hit every method alike
    let (mut ann64, mut ann32, mut oracle) = (Duration::MAX, Duration::MAX, Duration::MAX);
    for rep in 0..=a.repeats {
        let t64 = timed(|| net.predict_batch(black_box(&inputs)));
        let t32 = timed(|| packed.predict_batch(black_box(&inputs32)));
        let to = timed(oracle_loop);
        if rep > 0 {
            ann64 = ann64.min(t64);
            ann32 = ann32.min(t32);
            oracle = oracle.min(to);
        }
    }

    let rate = |d: Duration| a.n as f64 / d.as_secs_f64();
    let mut report = String::new();
    let reference = net.predict_batch(&inputs);
    let max_dev = packed
        .predict_batch(&inputs32)
        .iter()
        .zip(&reference)
        .flat_map(|(p, q)| (0..3).map(move |k| (p[k] as f64 - q[k]).abs()))
        .fold(0.0f64, f64::max);
    report.push_str(&format!("samples: {}\nrepeats: {} (fastest reported)\n", a.n, a.repeats));
    report.push_str(&format!(
        "f32_kernel: {}\nf32_max_deviation_m: {:.3e}\n",
        if PackedMlp::uses_simd() { "avx512" } else { "portable" },
        max_dev
    ));
    for (name, d) in [("ann_batched_f64", ann64), ("ann_batched_f32", ann32), ("oracle_sequential", oracle)] {
        report.push_str(&format!(
            "{name}: seconds={:.6} samples_per_sec={:.0}\n",
            d.as_secs_f64(),
            rate(d)
        ));
    }
    let best_ann = ann64.min(ann32);
    report.push_str(&format!(
        "batched_over_sequential: {:.3}\nbatched_faster: {}\n",
        rate(best_ann) / rate(oracle),
        best_ann <= oracle
    ));
    print!("{report}");
    if let Some(dir) = &a.out_dir {
        std::fs::create_dir_all(dir).at(dir)?;
        let path = dir.join("bench_report.txt");
        std::fs::write(&path, &report).at(&path)?;
    }
    Ok(())
}
