use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::nadam::NadamParams;
use super::{backward, mae_loss, nadam_step, MlpNet, OptimizerState};
use crate::scalar::Real;
use crate::synthgen::TriangulationSample;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("training loss became non-finite at epoch {epoch}")]
    DivergedLoss { epoch: usize },
    #[error("{0} set is empty")]
    EmptySet(&'static str),
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub patience: usize,
    pub max_epochs: usize,
    pub batch_size: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// NAdam momentum schedule decay `psi`.
    pub momentum_decay: f64,
    pub seed: u64,
    /// Learning-rate reduction on validation plateaus; `None` keeps the
    /// initial rate for the whole run.
    pub lr_decay: Option<PlateauDecay>,
}

/// Multiplies the learning rate by `factor` after `patience` epochs without
/// a validation improvement, never going below `min_lr`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlateauDecay {
    pub factor: f64,
    pub patience: usize,
    pub min_lr: f64,
}

impl Default for PlateauDecay {
    fn default() -> Self {
        Self {
            factor: 0.5,
            patience: 3,
            min_lr: 1e-6,
        }
    }
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            patience: 10,
            max_epochs: 150,
            batch_size: 16,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            momentum_decay: 0.004,
            seed: 7,
            lr_decay: Some(PlateauDecay::default()),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: &str| Err(TrainError::InvalidConfig(m.to_string()));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be > 0");
        }
        if self.patience < 1 {
            return bad("patience must be >= 1");
        }
        if self.max_epochs < 1 {
            return bad("max_epochs must be >= 1");
        }
        if self.batch_size < 1 {
            return bad("batch_size must be >= 1");
        }
        if !(self.beta1 > 0.0 && self.beta1 < 1.0 && self.beta2 > 0.0 && self.beta2 < 1.0) {
            return bad("beta1 and beta2 must lie in (0, 1)");
        }
        if !(self.epsilon > 0.0) {
            return bad("epsilon must be > 0");
        }
        if let Some(d) = self.lr_decay {
            if !(d.factor > 0.0 && d.factor < 1.0) || d.patience < 1 || !(d.min_lr > 0.0) {
                return bad("lr decay needs factor in (0, 1), patience >= 1 and min_lr > 0");
            }
        }
        Ok(())
    }

    pub fn nadam(&self) -> NadamParams {
        NadamParams {
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
            momentum_decay: self.momentum_decay,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_mae_cm: f64,
    pub val_mae_cm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub best_val_mae_cm: f64,
    /// MAE of the returned (best-validation) weights over the full training set.
    pub train_mae_cm: f64,
    pub stopped_early: bool,
    pub history: Vec<EpochRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopDecision {
    Improved,
    Wait,
    Stop,
}

/// Patience-based early stopping on a metric that should decrease.
#[derive(Debug, Clone)]
pub struct EarlyStopping {
    patience: usize,
    best: f64,
    best_epoch: usize,
    since_best: usize,
    epoch: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        Self {
            patience,
            best: f64::INFINITY,
            best_epoch: 0,
            since_best: 0,
            epoch: 0,
        }
    }

    /// Records the metric of the next epoch (epochs are 1-based).
    pub fn observe(&mut self, metric: f64) -> StopDecision {
        self.epoch += 1;
        if metric < self.best {
            self.best = metric;
            self.best_epoch = self.epoch;
            self.since_best = 0;
            StopDecision::Improved
        } else {
            self.since_best += 1;
            if self.since_best >= self.patience {
                StopDecision::Stop
            } else {
                StopDecision::Wait
            }
        }
    }

    pub fn best(&self) -> f64 {
        self.best
    }

    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }
}

/// MAE in centimeters of `net` over a sample set.
pub fn evaluate_mae_cm<T: Real>(net: &MlpNet<T>, samples: &[TriangulationSample<T>]) -> f64 {
    let inputs: Vec<[T; 4]> = samples.iter().map(|s| s.input()).collect();
    let truth: Vec<[T; 3]> = samples.iter().map(|s| s.truth.to_array()).collect();
    let pred = net.predict_batch(&inputs);
    mae_loss(&pred, &truth).expect("shapes match").as_f64()
}

/// Minibatch NAdam on the MAE loss with seeded shuffling and early stopping
/// on validation MAE. Returns the weights of the best validation epoch.
pub fn train<T: Real>(
    net: MlpNet<T>,
    train_set: &[TriangulationSample<T>],
    val_set: &[TriangulationSample<T>],
    cfg: &TrainConfig,
) -> Result<(MlpNet<T>, TrainReport), TrainError> {
    train_with_progress(net, train_set, val_set, cfg, |_| {})
}

pub fn train_with_progress<T: Real>(
    mut net: MlpNet<T>,
    train_set: &[TriangulationSample<T>],
    val_set: &[TriangulationSample<T>],
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<(MlpNet<T>, TrainReport), TrainError> {
    cfg.validate()?;
    if train_set.is_empty() {
        return Err(TrainError::EmptySet("training"));
    }
    if val_set.is_empty() {
        return Err(TrainError::EmptySet("validation"));
    }
    let val_fn = |n: &MlpNet<T>, epoch: usize| {
        let v = evaluate_mae_cm(n, val_set);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(TrainError::DivergedLoss { epoch })
        }
    };
    train_loop(&mut net, train_set, cfg, val_fn, &mut on_epoch)
        .map(|(best, report)| (best, report))
}

/// The epoch loop with the validation metric abstracted, so stopping
/// behaviour can be exercised with scripted metrics.
pub(crate) fn train_loop<T: Real>(
    net: &mut MlpNet<T>,
    train_set: &[TriangulationSample<T>],
    cfg: &TrainConfig,
    mut val_metric: impl FnMut(&MlpNet<T>, usize) -> Result<f64, TrainError>,
    on_epoch: &mut dyn FnMut(&EpochRecord),
) -> Result<(MlpNet<T>, TrainReport), TrainError> {
    let mut nadam = cfg.nadam();
    let mut since_improved = 0usize;
    let mut state = OptimizerState::new(net);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut stopper = EarlyStopping::new(cfg.patience);
    let mut best = net.clone();
    let mut history = Vec::new();
    let mut stopped_early = false;

    let mut inputs: Vec<[T; 4]> = Vec::with_capacity(cfg.batch_size);
    let mut targets: Vec<[T; 3]> = Vec::with_capacity(cfg.batch_size);

    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            inputs.clear();
            targets.clear();
            for &i in batch {
                inputs.push(train_set[i].input());
                targets.push(train_set[i].truth.to_array());
            }
            let (grads, loss) = backward(net, &inputs, &targets);
            let loss = loss.as_f64();
            if !loss.is_finite() {
                return Err(TrainError::DivergedLoss { epoch });
            }
            loss_sum += loss * batch.len() as f64;
            nadam_step(&mut state, net, &grads, &nadam);
        }
        if !net.is_finite() {
            return Err(TrainError::DivergedLoss { epoch });
        }
        let train_mae_cm = loss_sum / train_set.len() as f64 * 100.0;
        let val_mae_cm = val_metric(net, epoch)?;
        let rec = EpochRecord {
            epoch,
            train_mae_cm,
            val_mae_cm,
        };
        on_epoch(&rec);
        history.push(rec);
        match stopper.observe(val_mae_cm) {
            StopDecision::Improved => {
                best.clone_from(net);
                since_improved = 0;
            }
            StopDecision::Wait => {
                since_improved += 1;
                if let Some(d) = cfg.lr_decay {
                    if since_improved >= d.patience {
                        nadam.learning_rate = (nadam.learning_rate * d.factor).max(d.min_lr);
                        since_improved = 0;
                    }
                }
            }
            StopDecision::Stop => {
                stopped_early = true;
                break;
            }
        }
    }

    let train_mae_cm = evaluate_mae_cm(&best, train_set);
    let report = TrainReport {
        epochs_run: history.len(),
        best_epoch: stopper.best_epoch(),
        best_val_mae_cm: stopper.best(),
        train_mae_cm,
        stopped_early,
        history,
    };
    Ok((best, report))
}

pub const HISTORY_HEADER: &str = "epoch,train_mae_cm,val_mae_cm";

pub fn write_history_csv(history: &[EpochRecord], mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "{HISTORY_HEADER}")?;
    for r in history {
        writeln!(w, "{},{:.6},{:.6}", r.epoch, r.train_mae_cm, r.val_mae_cm)?;
    }
    Ok(())
}
