//! Client-side local training: E epochs of shuffled mini-batch SGD on
//! `ce + mu·con`, where the classifier only follows the cross-entropy
//! gradient and the encoder follows both terms.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::{forward_backward, ModelParams};
use crate::numkit::Rng;
use crate::server::MajorVectors;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClientConfig {
    pub learning_rate: f64,
    pub local_epochs: usize,
    pub batch_size: usize,
    pub mu: f64,
    /// Debug switch: leave the encoder untouched and train only the
    /// classifier.
    pub freeze_encoder: bool,
}

impl ClientConfig {
    pub fn new(learning_rate: f64, local_epochs: usize, batch_size: usize, mu: f64) -> Self {
        ClientConfig {
            learning_rate,
            local_epochs,
            batch_size,
            mu,
            freeze_encoder: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::Config(format!(
                "learning_rate must be finite and >= 0, got {}",
                self.learning_rate
            )));
        }
        if self.local_epochs == 0 {
            return Err(Error::Config("local_epochs must be >= 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        if !(self.mu >= 0.0) || !self.mu.is_finite() {
            return Err(Error::Config(format!("mu must be >= 0, got {}", self.mu)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClientResult {
    pub params: ModelParams,
    /// Sample-weighted mean cross-entropy over all local steps.
    pub mean_ce: f64,
    /// Sample-weighted mean contrastive loss (0 without anchors).
    pub mean_con: f64,
    pub num_samples: usize,
    /// Batches in which some label probability hit the log floor.
    pub degenerate_batches: usize,
}

/// Trains a copy of `global` on `shard`; `anchors` are read-only.
pub fn local_training(
    global: &ModelParams,
    anchors: Option<&MajorVectors>,
    shard: &Dataset,
    cfg: &ClientConfig,
    rng: &mut Rng,
) -> Result<ClientResult> {
    cfg.validate()?;
    if shard.is_empty() {
        return Err(Error::InvalidInput("client shard is empty".into()));
    }
    if cfg.mu > 0.0 && anchors.is_none() {
        return Err(Error::Config("mu > 0 requires anchor vectors".into()));
    }

    let mut params = global.clone();
    let mut order: Vec<usize> = (0..shard.len()).collect();
    let (mut ce_sum, mut con_sum, mut seen) = (0.0, 0.0, 0usize);
    let mut degenerate_batches = 0;

    for _ in 0..cfg.local_epochs {
        rng.shuffle(&mut order);
        for chunk in order.chunks(cfg.batch_size) {
            let batch = shard.batch(chunk)?;
            let fb = forward_backward(&params, &batch, anchors, cfg.mu)?;
            let b = chunk.len() as f64;
            ce_sum += fb.loss.ce * b;
            con_sum += fb.loss.con * b;
            seen += chunk.len();
            degenerate_batches += usize::from(fb.degenerate);

            let step = -cfg.learning_rate;
            let targets = params.tensors_mut().into_iter().zip(fb.grads.tensors());
            for (i, (dst, g)) in targets.enumerate() {
                // tensor 4 is the classifier
                if cfg.freeze_encoder && i < 4 {
                    continue;
                }
                for (w, gw) in dst.iter_mut().zip(g) {
                    *w += step * gw;
                }
            }
        }
    }

    Ok(ClientResult {
        params,
        mean_ce: ce_sum / seen as f64,
        mean_con: con_sum / seen as f64,
        num_samples: shard.len(),
        degenerate_batches,
    })
}
