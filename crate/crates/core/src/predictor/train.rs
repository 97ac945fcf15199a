use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::adam::{Adam, AdamConfig};
use super::lstm::{accumulate_gradient, sequence_loss, LossWeights, Sequence};
use super::params::ModelParams;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub hidden: usize,
    pub lr0: f64,
    pub adam: AdamConfig,
    /// Multiplier applied to the learning rate on a validation plateau.
    pub decay_factor: f64,
    /// Epochs without validation improvement before decaying.
    pub patience: usize,
    pub min_lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub w_y: f64,
    pub w_t: f64,
    /// Global gradient-norm clip, disabled when `None`.
    pub clip_norm: Option<f64>,
    /// 1 runs the deterministic single-threaded path.
    pub threads: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden: 350,
            lr0: 0.01,
            adam: AdamConfig::default(),
            decay_factor: 0.5,
            patience: 3,
            min_lr: 1e-5,
            epochs: 30,
            batch_size: 16,
            seed: 0,
            w_y: 1.0,
            w_t: 1.0,
            clip_norm: Some(1.0),
            threads: 1,
        }
    }
}

impl TrainConfig {
    pub fn loss_weights(&self) -> LossWeights {
        LossWeights {
            w_y: self.w_y,
            w_t: self.w_t,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.lr0 > 0.0) {
            return Err(Error::invalid("lr0 must be positive"));
        }
        if self.epochs == 0 || self.batch_size == 0 || self.hidden == 0 {
            return Err(Error::invalid("epochs, batch_size and hidden must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub best_val_loss: f64,
    pub lr: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters with the lowest validation loss seen, including the
    /// starting point.
    pub params: ModelParams,
    pub curves: Vec<EpochRecord>,
    pub initial_val_loss: f64,
    pub best_val_loss: f64,
    /// 0 when no epoch improved on the starting parameters.
    pub best_epoch: usize,
}

/// Mean of per-sequence losses.
pub fn mean_loss(params: &ModelParams, seqs: &[Sequence], w: LossWeights) -> Result<f64> {
    if seqs.is_empty() {
        return Err(Error::invalid("no sequences"));
    }
    let mut total = 0.0;
    for s in seqs {
        total += sequence_loss(params, s, w)?.0;
    }
    Ok(total / seqs.len() as f64)
}

/// Sum of per-sequence gradients and losses over a batch.
///
/// With `threads > 1` the per-sequence gradients are computed in parallel and
/// reduced in batch order.
pub fn batch_gradient(
    params: &ModelParams,
    batch: &[&Sequence],
    w: LossWeights,
    threads: usize,
) -> Result<(f64, ModelParams)> {
    let mut grad = ModelParams::zeros(params.hidden());
    let mut loss = 0.0;
    if threads <= 1 || batch.len() < 2 {
        for s in batch {
            loss += accumulate_gradient(params, s, w, 1.0, &mut grad)?;
        }
    } else {
        let parts: Vec<Result<(f64, ModelParams)>> = batch
            .par_iter()
            .map(|s| {
                let mut g = ModelParams::zeros(params.hidden());
                let l = accumulate_gradient(params, s, w, 1.0, &mut g)?;
                Ok((l, g))
            })
            .collect();
        for part in parts {
            let (l, g) = part?;
            loss += l;
            grad.add_scaled(1.0, &g);
        }
    }
    Ok((loss, grad))
}

pub fn train(train_set: &[Sequence], val_set: &[Sequence], cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    let init = ModelParams::init(cfg.hidden, cfg.seed);
    train_from(init, train_set, val_set, cfg)
}

/// Continues training from `init`; an empty validation set selects on the
/// training loss instead.
pub fn train_from(
    init: ModelParams,
    train_set: &[Sequence],
    val_set: &[Sequence],
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train_set.is_empty() {
        return Err(Error::invalid("training set is empty"));
    }
    if cfg.threads > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?;
        return pool.install(|| run(init, train_set, val_set, cfg));
    }
    run(init, train_set, val_set, cfg)
}

fn run(
    init: ModelParams,
    train_set: &[Sequence],
    val_set: &[Sequence],
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    let w = cfg.loss_weights();
    let select_set = if val_set.is_empty() { train_set } else { val_set };

    let mut params = init;
    let initial_val_loss = mean_loss(&params, select_set, w)?;
    let mut best = params.clone();
    let mut best_val = initial_val_loss;
    let mut best_epoch = 0;

    let mut adam = Adam::new(params.as_slice().len(), cfg.adam);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_7a1e);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut lr = cfg.lr0;
    let mut stale = 0usize;
    let mut curves = Vec::with_capacity(cfg.epochs);

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<&Sequence> = chunk.iter().map(|&i| &train_set[i]).collect();
            let (loss, mut grad) = batch_gradient(&params, &batch, w, cfg.threads)?;
            if !loss.is_finite() || !grad.is_finite() {
                return Err(Error::Divergence { epoch });
            }
            epoch_loss += loss;
            grad.scale(1.0 / batch.len() as f64);
            if let Some(max) = cfg.clip_norm {
                let n = grad.norm();
                if n > max {
                    grad.scale(max / n);
                }
            }
            adam.update(&mut params, &grad, lr);
        }
        if !params.is_finite() {
            return Err(Error::Divergence { epoch });
        }

        let val_loss = mean_loss(&params, select_set, w)?;
        if !val_loss.is_finite() {
            return Err(Error::Divergence { epoch });
        }
        if val_loss < best_val {
            best_val = val_loss;
            best = params.clone();
            best_epoch = epoch;
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.patience {
                lr = (lr * cfg.decay_factor).max(cfg.min_lr);
                stale = 0;
            }
        }
        curves.push(EpochRecord {
            epoch,
            train_loss: epoch_loss / train_set.len() as f64,
            val_loss,
            best_val_loss: best_val,
            lr,
        });
    }

    Ok(TrainOutcome {
        params: best,
        curves,
        initial_val_loss,
        best_val_loss: best_val,
        best_epoch,
    })
}

/// Continues training on a shifted dataset at a tenth of the base learning
/// rate. The starting parameters compete for best-validation selection, so
/// the returned model never does worse on `val_set` than the input.
pub fn fine_tune(
    params: &ModelParams,
    train_set: &[Sequence],
    val_set: &[Sequence],
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    let cfg = TrainConfig {
        lr0: cfg.lr0 / 10.0,
        hidden: params.hidden(),
        ..cfg.clone()
    };
    train_from(params.clone(), train_set, val_set, &cfg)
}
