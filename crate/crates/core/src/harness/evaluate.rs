//! Evaluation with the per-kind accuracy breakdown:
//! Text T/F, Text MC, Text All, Diagram, All.

use serde::Serialize;

use crate::corpus::{Corpus, QuestionKind, Split};
use crate::model::{score_candidates, ForwardCtx, ModelConfig, ModelParams};
use crate::numerics::Tape;

use super::prepare::{prepare_questions, PreparedQuestion};
use super::HarnessError;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct BucketStat {
    pub correct: usize,
    pub total: usize,
    pub accuracy: f64,
}

impl BucketStat {
    fn from_counts(correct: usize, total: usize) -> Self {
        BucketStat {
            correct,
            total,
            accuracy: if total == 0 { 0.0 } else { correct as f64 / total as f64 },
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PredictionRecord {
    pub question_id: String,
    pub kind: QuestionKind,
    pub predicted: usize,
    pub answer_index: usize,
    pub probabilities: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct EvalReport {
    pub text_tf: BucketStat,
    pub text_mc: BucketStat,
    pub text_all: BucketStat,
    pub diagram: BucketStat,
    pub all: BucketStat,
    pub predictions: Vec<PredictionRecord>,
}

/// Deterministic argmax: highest probability, ties to the lowest index.
pub(crate) fn argmax(probs: &[f64]) -> usize {
    let mut best = 0;
    for (i, p) in probs.iter().enumerate().skip(1) {
        if *p > probs[best] {
            best = i;
        }
    }
    best
}

pub fn evaluate_prepared(
    prepared: &[PreparedQuestion],
    params: &ModelParams,
    config: &ModelConfig,
) -> Result<EvalReport, HarnessError> {
    let mut predictions = Vec::with_capacity(prepared.len());
    let (mut tf, mut mc, mut dg) = ((0, 0), (0, 0), (0, 0));
    for q in prepared {
        let tape = Tape::inference();
        let mut ctx = ForwardCtx::eval();
        let out = score_candidates(&tape, &mut ctx, params, config, &q.instance)?;
        let probabilities = out.probs.to_vec();
        let predicted = argmax(&probabilities);
        let hit = usize::from(predicted == q.answer_index);
        match q.kind {
            QuestionKind::TrueFalse => {
                tf.0 += hit;
                tf.1 += 1;
            }
            QuestionKind::TextMc => {
                mc.0 += hit;
                mc.1 += 1;
            }
            QuestionKind::Diagram => {
                dg.0 += hit;
                dg.1 += 1;
            }
        }
        predictions.push(PredictionRecord {
            question_id: q.question_id.clone(),
            kind: q.kind,
            predicted,
            answer_index: q.answer_index,
            probabilities,
        });
    }
    Ok(EvalReport {
        text_tf: BucketStat::from_counts(tf.0, tf.1),
        text_mc: BucketStat::from_counts(mc.0, mc.1),
        text_all: BucketStat::from_counts(tf.0 + mc.0, tf.1 + mc.1),
        diagram: BucketStat::from_counts(dg.0, dg.1),
        all: BucketStat::from_counts(tf.0 + mc.0 + dg.0, tf.1 + mc.1 + dg.1),
        predictions,
    })
}

pub fn evaluate(
    corpus: &Corpus,
    split: Split,
    params: &ModelParams,
    config: &ModelConfig,
) -> Result<EvalReport, HarnessError> {
    let prepared = prepare_questions(corpus, split, config)?;
    evaluate_prepared(&prepared, params, config)
}
