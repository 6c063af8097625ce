//! Mini-batch SGD with classical momentum and per-epoch exponential
//! learning-rate decay. Every run is fully determined by (config, dataset):
//! initialization, shuffling, and batch reduction all follow one seeded
//! generator and a fixed pair order.

use std::time::Instant;

use crate::bptt::{backward_scaled, BpttMode};
use crate::cells::argmax;
use crate::error::{Error, Result};
use crate::jsonio;
use crate::model::{Gradients, Model, ModelFamily};
use crate::numkernel::Prng;
use crate::synthdata::Dataset;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub family: ModelFamily,
    pub hidden: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub decay: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub bptt_mode: BpttMode,
    /// Optional global-norm gradient clip; off by default so gradient-check
    /// regressions stay visible in training behaviour.
    pub clip_norm: Option<f64>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            family: ModelFamily::CoLstsm,
            hidden: 32,
            learning_rate: 1e-2,
            momentum: 0.9,
            decay: 0.95,
            epochs: 60,
            batch_size: 16,
            bptt_mode: BpttMode::Full,
            clip_norm: None,
            seed: 42,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::InvalidConfig(format!(
                "momentum must lie in [0, 1), got {}",
                self.momentum
            )));
        }
        if !(self.decay > 0.0 && self.decay <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "decay must lie in (0, 1], got {}",
                self.decay
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch size must be at least 1".into()));
        }
        if self.hidden == 0 && self.family != ModelFamily::Pooled {
            return Err(Error::InvalidConfig("hidden size must be positive".into()));
        }
        if let Some(c) = self.clip_norm {
            if !(c.is_finite() && c > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "clip norm must be positive, got {c}"
                )));
            }
        }
        Ok(())
    }
}

/// Momentum buffers, shape-congruent with the parameters.
#[derive(Debug, Clone)]
pub struct OptState {
    pub momentum: f64,
    pub velocity: Model,
}

impl OptState {
    pub fn new(model: &Model, momentum: f64) -> Self {
        OptState {
            momentum,
            velocity: model.zeros_like(),
        }
    }
}

/// v <- momentum*v - lr*g; theta <- theta + v, per scalar parameter.
pub fn sgd_step(params: &mut Model, grads: &Gradients, state: &mut OptState, lr: f64) -> Result<()> {
    params.check_congruent(grads, "sgd_step: gradients")?;
    params.check_congruent(&state.velocity, "sgd_step: velocity")?;
    let mu = state.momentum;
    let mut pt = params.named_tensors_mut();
    let gt = grads.named_tensors();
    let mut vt = state.velocity.named_tensors_mut();
    for ((p, (_, g)), v) in pt.iter_mut().zip(gt.iter()).zip(vt.iter_mut()) {
        let pd = p.1.data_mut();
        let gd = g.data();
        let vd = v.1.data_mut();
        for i in 0..pd.len() {
            vd[i] = mu * vd[i] - lr * gd[i];
            pd[i] += vd[i];
        }
    }
    Ok(())
}

/// lr0 * decay^epoch.
pub fn lr_schedule(epoch: usize, lr0: f64, decay: f64) -> f64 {
    lr0 * decay.powi(epoch as i32)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub loss: f64,
    pub train_accuracy: f64,
    pub lr: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainHistory {
    pub epochs: Vec<EpochStats>,
}

impl TrainHistory {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,loss,train_accuracy,lr,seconds\n");
        for e in &self.epochs {
            out.push_str(&format!(
                "{},{},{:.6},{},{:.3}\n",
                e.epoch,
                jsonio::fmt_f64(e.loss),
                e.train_accuracy,
                jsonio::fmt_f64(e.lr),
                e.seconds
            ));
        }
        out
    }
}

/// Trains a fresh model on the dataset's training split. Per epoch: shuffle
/// with the seeded generator, average per-pair gradients inside each
/// mini-batch, and apply one momentum step per batch at the scheduled rate.
pub fn train(ds: &Dataset, cfg: &TrainConfig) -> Result<(Model, TrainHistory)> {
    let (model, _, history) = train_with_state(ds, cfg)?;
    Ok((model, history))
}

/// Like `train` but also hands back the final momentum buffers so a
/// checkpoint can resume the optimizer where it stopped.
pub fn train_with_state(ds: &Dataset, cfg: &TrainConfig) -> Result<(Model, OptState, TrainHistory)> {
    cfg.validate()?;
    if ds.train.is_empty() {
        return Err(Error::InvalidConfig("training split is empty".into()));
    }
    let n = ds.config.input_dim;
    let k = ds.config.classes;
    let mut prng = Prng::new(cfg.seed);
    let mut model = Model::new(cfg.family, n, cfg.hidden, k, &mut prng);
    let mut opt = OptState::new(&model, cfg.momentum);
    let mut history = TrainHistory::default();

    let mut order: Vec<usize> = (0..ds.train.len()).collect();
    for epoch in 0..cfg.epochs {
        let started = Instant::now();
        let lr = lr_schedule(epoch, cfg.learning_rate, cfg.decay);
        prng.shuffle(&mut order);

        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        for batch in order.chunks(cfg.batch_size) {
            let mut grads = model.zeros_like();
            for &idx in batch {
                let pair = &ds.train[idx];
                let fwd = model.forward_sequence(pair)?;
                loss_sum += fwd.sequence_loss(pair.label)?;
                if argmax(&fwd.last_step_probs()) == pair.label {
                    correct += 1;
                }
                let g = backward_scaled(&model, pair, &fwd, cfg.bptt_mode, 1.0)?;
                grads.add_scaled(&g, 1.0)?;
            }
            grads.scale_in_place(1.0 / batch.len() as f64);
            if let Some(max_norm) = cfg.clip_norm {
                let norm = grads.l2_norm();
                if norm > max_norm {
                    grads.scale_in_place(max_norm / norm);
                }
            }
            sgd_step(&mut model, &grads, &mut opt, lr)?;
        }

        history.epochs.push(EpochStats {
            epoch,
            loss: loss_sum / ds.train.len() as f64,
            train_accuracy: correct as f64 / ds.train.len() as f64,
            lr,
            seconds: started.elapsed().as_secs_f64(),
        });
    }
    Ok((model, opt, history))
}
