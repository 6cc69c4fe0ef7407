use std::ops::Range;

use log::{info, warn};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{argmax_rows, similarity_matrix};
use crate::encoders::ClcpModel;
use crate::ndnn::{Checkpoint, Graph, OptimConfig, Optimizer, ParamSet, Real};
use crate::{Error, Result};

/// One training example: image values and text token ids.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedPair {
    pub image: Vec<f32>,
    pub text: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub step: u64,
    pub train_loss: f64,
    pub val_loss: Option<f64>,
    /// Effective logit scale.
    pub temperature: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train_acc: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainOptions {
    /// Match every training code against every training text after each
    /// epoch and record the accuracy.
    pub track_train_acc: bool,
    /// Stop once the tracked training accuracy reaches this value.
    pub stop_at_train_acc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxEpochs,
    EarlyStop,
    TargetReached,
    Aborted(String),
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<T: Real> {
    pub metrics: Vec<EpochMetrics>,
    pub best_epoch: usize,
    pub best_loss: f64,
    pub stop: StopReason,
    pub state: TrainState<T>,
}

/// Everything needed to resume or reproduce a run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainState<T> {
    pub epoch: usize,
    pub step: u64,
    pub seed: u64,
    pub best_loss: f64,
    pub params: ParamSet<T>,
    pub optimizer: Optimizer<T>,
}

impl<T: Real> TrainState<T> {
    pub fn to_checkpoint(&self) -> Checkpoint<T> {
        Checkpoint {
            params: self.params.clone(),
            optimizer: Some(self.optimizer.clone()),
            meta: serde_json::json!({
                "epoch": self.epoch,
                "step": self.step,
                "seed": self.seed,
                "best_loss_bits": self.best_loss.to_bits(),
            }),
        }
    }

    pub fn from_checkpoint(ckpt: Checkpoint<T>) -> Result<Self> {
        let field = |k: &str| {
            ckpt.meta
                .get(k)
                .and_then(serde_json::Value::as_u64)
                .ok_or_else(|| Error::Checkpoint(format!("missing training field {k}")))
        };
        Ok(TrainState {
            epoch: field("epoch")? as usize,
            step: field("step")?,
            seed: field("seed")?,
            best_loss: f64::from_bits(field("best_loss_bits")?),
            optimizer: ckpt
                .optimizer
                .ok_or_else(|| Error::Checkpoint("missing optimizer state".into()))?,
            params: ckpt.params,
        })
    }
}

/// Splits `0..n` into `ceil(n / size)` contiguous ranges whose lengths
/// differ by at most one.
pub fn balanced_chunks(n: usize, size: usize) -> Vec<Range<usize>> {
    if n == 0 {
        return Vec::new();
    }
    let k = n.div_ceil(size.max(1));
    let (base, extra) = (n / k, n % k);
    let mut out = Vec::with_capacity(k);
    let mut lo = 0;
    for i in 0..k {
        let len = base + usize::from(i < extra);
        out.push(lo..lo + len);
        lo += len;
    }
    out
}

fn rng_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

fn batch_loss<T: Real>(model: &ClcpModel<T>, pairs: &[&EncodedPair], training: bool) -> Result<f64> {
    let images: Vec<&[f32]> = pairs.iter().map(|p| p.image.as_slice()).collect();
    let docs: Vec<Vec<usize>> = pairs.iter().map(|p| p.text.clone()).collect();
    let mut g = Graph::new(&model.params);
    let l = model.batch_loss(&mut g, &images, &docs, training)?;
    Ok(g.value(l)[0].f64())
}

fn mean_loss<T: Real>(model: &ClcpModel<T>, pairs: &[&EncodedPair]) -> Result<f64> {
    let chunks = balanced_chunks(pairs.len(), model.config.batch_size);
    let mut total = 0.0;
    for c in &chunks {
        total += batch_loss(model, &pairs[c.clone()], false)?;
    }
    Ok(total / chunks.len() as f64)
}

/// Fraction of codes whose most similar text is their own.
pub(crate) fn match_accuracy<T: Real>(model: &ClcpModel<T>, pairs: &[&EncodedPair]) -> Result<f64> {
    let images: Vec<&[f32]> = pairs.iter().map(|p| p.image.as_slice()).collect();
    let docs: Vec<Vec<usize>> = pairs.iter().map(|p| p.text.clone()).collect();
    let c = model.embed_code(&images)?;
    let t = model.embed_text(&docs)?;
    let pred = argmax_rows(&similarity_matrix(&c, &t, 1.0)?);
    let hits = pred.iter().enumerate().filter(|(i, p)| i == *p).count();
    Ok(hits as f64 / pairs.len() as f64)
}

/// Trains `model` in place on `pairs`. On return the model holds the
/// parameters with the best monitored loss (validation loss when a
/// validation split exists, training loss otherwise).
pub fn train<T: Real>(
    model: &mut ClcpModel<T>,
    pairs: &[EncodedPair],
    opts: &TrainOptions,
    on_epoch: &mut dyn FnMut(&EpochMetrics),
) -> Result<TrainOutcome<T>> {
    let cfg = model.config.clone();
    if pairs.is_empty() {
        return Err(Error::TrainingAborted("no training pairs".into()));
    }
    if cfg.batch_size == 1 {
        warn!("batch size 1: every batch has a single pair and zero contrastive loss");
    }
    let seed = cfg.seed;
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    order.shuffle(&mut rng_stream(seed, 1));
    let n_val = (pairs.len() as f64 * cfg.val_fraction).floor() as usize;
    let (val_idx, train_idx) = if n_val >= 2 {
        order.split_at(n_val)
    } else {
        (&order[..0], &order[..])
    };
    let val: Vec<&EncodedPair> = val_idx.iter().map(|&i| &pairs[i]).collect();
    let mut train_idx = train_idx.to_vec();
    train_idx.sort_unstable();

    let optim = OptimConfig {
        kind: cfg.optimizer,
        lr: cfg.lr,
        ..OptimConfig::default()
    };
    let mut opt = Optimizer::new(optim, &model.params);
    let mut best = (f64::INFINITY, 0usize, model.params.clone(), opt.clone());
    let mut metrics = Vec::new();
    let mut stop = StopReason::MaxEpochs;
    let mut since_best = 0;

    'epochs: for epoch in 1..=cfg.max_epochs {
        let mut idx = train_idx.clone();
        idx.shuffle(&mut rng_stream(seed, 2 + epoch as u64));
        let mut total = 0.0;
        let chunks = balanced_chunks(idx.len(), cfg.batch_size);
        for c in &chunks {
            let batch: Vec<&EncodedPair> = idx[c.clone()].iter().map(|&i| &pairs[i]).collect();
            let images: Vec<&[f32]> = batch.iter().map(|p| p.image.as_slice()).collect();
            let docs: Vec<Vec<usize>> = batch.iter().map(|p| p.text.clone()).collect();
            let step = {
                let mut g = Graph::new(&model.params);
                model.batch_loss(&mut g, &images, &docs, true).and_then(|loss| {
                    let v = g.value(loss)[0].f64();
                    if !v.is_finite() {
                        return Err(Error::NonFinite("loss".into()));
                    }
                    let grads = g.backward(loss)?;
                    Ok((v, grads, g.take_stat_updates()))
                })
            };
            let (loss, grads, stats) = match step {
                Ok(s) => s,
                Err(e) => {
                    stop = StopReason::Aborted(e.to_string());
                    break 'epochs;
                }
            };
            if let Err(e) = opt.step(&mut model.params, &grads) {
                stop = StopReason::Aborted(e.to_string());
                break 'epochs;
            }
            model.params.apply_updates(stats);
            total += loss;
        }
        let train_loss = total / chunks.len() as f64;
        let val_loss = if val.is_empty() { None } else { Some(mean_loss(model, &val)?) };
        let train_acc = if opts.track_train_acc || opts.stop_at_train_acc.is_some() {
            let all: Vec<&EncodedPair> = train_idx.iter().map(|&i| &pairs[i]).collect();
            Some(match_accuracy(model, &all)?)
        } else {
            None
        };
        let m = EpochMetrics {
            epoch,
            step: opt.step,
            train_loss,
            val_loss,
            temperature: model.logit_scale(),
            train_acc,
        };
        info!(
            "epoch {epoch}: train {train_loss:.4} val {} scale {:.2}",
            val_loss.map_or("-".into(), |v| format!("{v:.4}")),
            m.temperature
        );
        on_epoch(&m);
        metrics.push(m);

        let monitored = val_loss.unwrap_or(train_loss);
        if !monitored.is_finite() {
            stop = StopReason::Aborted(format!("non-finite monitored loss at epoch {epoch}"));
            break;
        }
        let target_hit = matches!((opts.stop_at_train_acc, train_acc), (Some(t), Some(a)) if a >= t);
        if monitored < best.0 || target_hit {
            best = (monitored, epoch, model.params.clone(), opt.clone());
            since_best = 0;
        } else {
            since_best += 1;
        }
        if target_hit {
            stop = StopReason::TargetReached;
            break;
        }
        if cfg.patience > 0 && since_best >= cfg.patience {
            stop = StopReason::EarlyStop;
            break;
        }
    }

    let (best_loss, best_epoch, best_params, best_opt) = best;
    if best_epoch > 0 {
        model.params = best_params;
    }
    let state = TrainState {
        epoch: best_epoch,
        step: best_opt.step,
        seed,
        best_loss,
        params: model.params.clone(),
        optimizer: best_opt,
    };
    Ok(TrainOutcome {
        metrics,
        best_epoch,
        best_loss,
        stop,
        state,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chunks_are_balanced_and_cover() {
        for n in 0..50 {
            for size in 1..9 {
                let c = balanced_chunks(n, size);
                let lens: Vec<usize> = c.iter().map(|r| r.len()).collect();
                assert_eq!(lens.iter().sum::<usize>(), n);
                assert!(lens.iter().all(|&l| l <= size && l >= 1));
                if let (Some(a), Some(b)) = (lens.iter().max(), lens.iter().min()) {
                    assert!(a - b <= 1);
                }
                for w in c.windows(2) {
                    assert_eq!(w[0].end, w[1].start);
                }
            }
        }
    }
}
