//! The supervised training loop: per-candidate retrieval and graph building
//! happen once up front, then cross-entropy over candidate distributions
//! with Adam and per-epoch learning-rate decay.

use std::path::Path;

use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::corpus::{Corpus, Split};
use crate::model::{score_candidates, ForwardCtx, ModelConfig, ModelParams};
use crate::numerics::checkpoint::{self, Checkpoint};
use crate::numerics::{AdamState, Tape};
use crate::seeding::derive_seed;

use super::config::TrainConfig;
use super::evaluate::{evaluate_prepared, EvalReport};
use super::prepare::prepare_questions;
use super::HarnessError;

#[derive(Clone, Debug, Serialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub lr: f64,
    pub train_loss: f64,
    pub train_accuracy: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub val_text_tf: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub val_text_mc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub val_text_all: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub val_diagram: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub val_all: Option<f64>,
}

pub struct TrainOutput {
    pub history: Vec<EpochMetrics>,
    /// Validation report of the last trained epoch, when a val split exists.
    pub final_val: Option<EvalReport>,
}

fn write_checkpoint(
    dir: &Path,
    name: &str,
    params: &ModelParams,
    opt: &AdamState,
) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| HarnessError::Io { path: dir.display().to_string(), source: e })?;
    let ckpt = Checkpoint { params: params.to_records(), optimizer: Some(opt.clone()) };
    checkpoint::save(&dir.join(name), &ckpt)?;
    Ok(())
}

/// Trains in place. Loads the SSOC checkpoint first when configured, writes
/// a checkpoint per epoch into `out_dir`, and reports one metrics record per
/// epoch through `on_epoch` (the CLI prints them as JSON lines).
pub fn train_supervised(
    corpus: &Corpus,
    params: &ModelParams,
    config: &ModelConfig,
    train: &TrainConfig,
    out_dir: Option<&Path>,
    mut on_epoch: impl FnMut(&EpochMetrics),
) -> Result<TrainOutput, HarnessError> {
    if let Some(path) = &train.ssoc_checkpoint {
        let ckpt = checkpoint::load(path)?;
        params.load_records(&ckpt)?;
    }

    let prepared = prepare_questions(corpus, Split::Train, config)?;
    let val = prepare_questions(corpus, Split::Val, config)?;
    let tensors = params.tensors();
    let mut opt = AdamState::new(&tensors, train.lr);
    let batch = train.batch_size.max(1);

    let mut history = Vec::with_capacity(train.epochs);
    let mut final_val = None;
    let mut best_val_text_all = f64::NEG_INFINITY;
    let mut epochs_since_best = 0usize;

    for epoch in 0..train.epochs {
        opt.lr = train.lr * train.lr_decay.powi(epoch as i32);
        let mut order: Vec<usize> = (0..prepared.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[
            b"train-shuffle",
            &train.seed.to_le_bytes(),
            &(epoch as u64).to_le_bytes(),
        ]));
        order.shuffle(&mut rng);

        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        for (step, chunk) in order.chunks(batch).enumerate() {
            let scale = 1.0 / chunk.len() as f64;
            for (offset, &qi) in chunk.iter().enumerate() {
                let q = &prepared[qi];
                let tape = Tape::new();
                let mut fwd = ForwardCtx::train(derive_seed(&[
                    b"train-dropout",
                    &train.seed.to_le_bytes(),
                    &(epoch as u64).to_le_bytes(),
                    &(step as u64).to_le_bytes(),
                    &(offset as u64).to_le_bytes(),
                ]));
                let out = score_candidates(&tape, &mut fwd, params, config, &q.instance)?;
                let loss = tape.cross_entropy(&out.logits, q.answer_index);
                loss_sum += loss.item();
                let probs = out.probs.to_vec();
                if super::evaluate::argmax(&probs) == q.answer_index {
                    correct += 1;
                }
                let scaled = tape.scale(&loss, scale);
                tape.backward(&scaled)?;
            }
            opt.step(&tensors);
            params.zero_grads();
        }

        let val_report =
            if val.is_empty() { None } else { Some(evaluate_prepared(&val, params, config)?) };
        let metrics = EpochMetrics {
            epoch,
            lr: opt.lr,
            train_loss: if prepared.is_empty() { 0.0 } else { loss_sum / prepared.len() as f64 },
            train_accuracy: if prepared.is_empty() {
                0.0
            } else {
                correct as f64 / prepared.len() as f64
            },
            val_text_tf: val_report.as_ref().map(|r| r.text_tf.accuracy),
            val_text_mc: val_report.as_ref().map(|r| r.text_mc.accuracy),
            val_text_all: val_report.as_ref().map(|r| r.text_all.accuracy),
            val_diagram: val_report.as_ref().map(|r| r.diagram.accuracy),
            val_all: val_report.as_ref().map(|r| r.all.accuracy),
        };
        on_epoch(&metrics);
        history.push(metrics);

        if let Some(dir) = out_dir {
            write_checkpoint(dir, &format!("epoch_{epoch:04}.ckpt"), params, &opt)?;
            write_checkpoint(dir, "latest.ckpt", params, &opt)?;
        }

        // early stop on a validation text-accuracy plateau
        if let (Some(patience), Some(report)) = (train.early_stop_patience, val_report.as_ref()) {
            if report.text_all.accuracy > best_val_text_all {
                best_val_text_all = report.text_all.accuracy;
                epochs_since_best = 0;
            } else {
                epochs_since_best += 1;
            }
            final_val = Some(report.clone());
            if epochs_since_best >= patience {
                break;
            }
        } else {
            final_val = val_report;
        }
    }

    Ok(TrainOutput { history, final_val })
}
