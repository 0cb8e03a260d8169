//! Self-supervised open-set comprehension: the roles of candidate answer and
//! context are reversed. For every (question, candidate) pair the model must
//! pick the most related context among the top-j TF-IDF paragraphs; the
//! TF-IDF argmax is the label, so no gold answer labels are ever read.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, Lesson};
use crate::graphbuild::{anchor_nodes, build_textual_graph};
use crate::model::{
    CandidateInstance, ForwardCtx, ModelConfig, ModelParams, ScoreOutput,
};
use crate::numerics::{AdamState, Tape, Tensor};
use crate::retrieval::{RetrievalError, TfidfIndex};
use crate::seeding::derive_seed;

#[derive(Debug, Error)]
pub enum SsocError {
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
    #[error("task references unknown paragraph {0}")]
    UnknownContext(String),
    #[error("task references unknown question {0}")]
    UnknownQuestion(String),
    #[error(transparent)]
    Numerics(#[from] crate::numerics::NumericsError),
}

/// Which lessons participate in task generation. The full method uses
/// train+val; train-only reproduces the SSOC(VAL) ablation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SsocSplit {
    Train,
    TrainVal,
}

/// One context-ranking episode. Contexts are ordered by descending TF-IDF
/// score, so the label is always position 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SsocTask {
    pub lesson_id: String,
    pub question_id: String,
    pub candidate_index: usize,
    /// Paragraph ids, TF-IDF descending.
    pub contexts: Vec<String>,
    pub label: usize,
    pub j: usize,
}

/// Generates tasks for every question and every candidate: j drawn uniformly
/// from [2,7] seeded by (seed, question, candidate), clamped to the lesson's
/// paragraph count. Tasks come back in a deterministic shuffled order.
/// Degenerate j=1 tasks are emitted here and excluded from the loss by the
/// pretraining `min_j` knob.
pub fn generate_tasks(
    corpus: &Corpus,
    split: SsocSplit,
    seed: u64,
) -> Result<Vec<SsocTask>, SsocError> {
    let mut lessons: Vec<&Lesson> = corpus.lessons_in(crate::corpus::Split::Train);
    if split == SsocSplit::TrainVal {
        lessons.extend(corpus.lessons_in(crate::corpus::Split::Val));
    }

    let mut tasks = Vec::new();
    for lesson in lessons {
        let index = TfidfIndex::build(&lesson.paragraphs)?;
        for question in &lesson.questions {
            for (k, candidate) in question.candidates.iter().enumerate() {
                let mut query = question.tokens.clone();
                query.extend(candidate.tokens.iter().cloned());
                let draw_seed = derive_seed(&[
                    b"ssoc-j",
                    &seed.to_le_bytes(),
                    question.id.as_bytes(),
                    &(k as u64).to_le_bytes(),
                ]);
                let mut rng = ChaCha8Rng::seed_from_u64(draw_seed);
                let j = rng.gen_range(2..=7).min(lesson.paragraphs.len());
                let contexts = index.top_j(&query, j)?;
                tasks.push(SsocTask {
                    lesson_id: lesson.id.clone(),
                    question_id: question.id.clone(),
                    candidate_index: k,
                    contexts,
                    label: 0,
                    j,
                });
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[b"ssoc-order", &seed.to_le_bytes()]));
    tasks.shuffle(&mut rng);
    Ok(tasks)
}

/// Builds the per-context episode instances for one task: the candidate's
/// tokens stay fixed while the textual graph and occurrence flags come from
/// each context paragraph in turn. Text-only: no visual contexts, no
/// question diagrams.
fn task_episodes(
    corpus: &Corpus,
    config: &ModelConfig,
    task: &SsocTask,
) -> Result<(Vec<String>, Vec<CandidateInstance>), SsocError> {
    let (lesson, question) = corpus
        .find_question(&task.question_id)
        .ok_or_else(|| SsocError::UnknownQuestion(task.question_id.clone()))?;
    let candidate = &question.candidates[task.candidate_index];
    let mut episodes = Vec::with_capacity(task.contexts.len());
    for pid in &task.contexts {
        let paragraph = lesson
            .paragraphs
            .iter()
            .find(|p| &p.id == pid)
            .ok_or_else(|| SsocError::UnknownContext(pid.clone()))?;
        let anchors = anchor_nodes(&paragraph.dep_tree, &question.tokens, &candidate.tokens);
        let textual = build_textual_graph(
            &paragraph.dep_tree,
            &anchors,
            config.cap_textual,
            config.relation_nodes,
        );
        let context_tokens: BTreeSet<String> = paragraph.tokens.iter().cloned().collect();
        episodes.push(CandidateInstance {
            tokens: candidate.tokens.clone(),
            textual,
            visual: None,
            context_tokens,
            paragraph_id: pid.clone(),
        });
    }
    Ok((question.tokens.clone(), episodes))
}

/// Probability distribution over a task's j contexts through the shared
/// Eq.-(2–7) machinery. A j=1 task yields the degenerate [1.0].
pub fn ssoc_forward(
    tape: &Tape,
    ctx: &mut ForwardCtx,
    params: &ModelParams,
    config: &ModelConfig,
    corpus: &Corpus,
    task: &SsocTask,
) -> Result<ScoreOutput, SsocError> {
    let (question_tokens, episodes) = task_episodes(corpus, config, task)?;
    let vectors: Vec<Tensor> = episodes
        .iter()
        .map(|e| {
            crate::model::episode_vector(tape, ctx, params, config, &question_tokens, e, None)
        })
        .collect();
    let logits = crate::model::solve_episodes(tape, params, &vectors);
    let probs = tape.softmax(&logits, 0);
    Ok(ScoreOutput { probs, logits })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SsocConfig {
    pub epochs: usize,
    pub lr: f64,
    pub lr_decay: f64,
    pub seed: u64,
    /// Include validation lessons in task generation (the full method).
    pub use_val: bool,
    /// Tasks with fewer contexts than this carry no learning signal and are
    /// skipped.
    pub min_j: usize,
}

impl Default for SsocConfig {
    fn default() -> Self {
        SsocConfig { epochs: 30, lr: 0.001, lr_decay: 0.9, seed: 0, use_val: true, min_j: 2 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SsocEpochMetrics {
    pub epoch: usize,
    pub lr: f64,
    pub mean_loss: f64,
    pub task_accuracy: f64,
    pub tasks: usize,
}

/// Pretrains the shared parameters on SSOC tasks with Adam and per-epoch
/// learning-rate decay. Parameters are mutated in place.
pub fn pretrain(
    corpus: &Corpus,
    params: &ModelParams,
    config: &ModelConfig,
    ssoc: &SsocConfig,
    mut on_epoch: impl FnMut(&SsocEpochMetrics, &ModelParams, &AdamState),
) -> Result<Vec<SsocEpochMetrics>, SsocError> {
    let split = if ssoc.use_val { SsocSplit::TrainVal } else { SsocSplit::Train };
    let tasks: Vec<SsocTask> = generate_tasks(corpus, split, ssoc.seed)?
        .into_iter()
        .filter(|t| t.j >= ssoc.min_j)
        .collect();

    let tensors = params.tensors();
    let mut opt = AdamState::new(&tensors, ssoc.lr);
    let mut history = Vec::with_capacity(ssoc.epochs);
    for epoch in 0..ssoc.epochs {
        opt.lr = ssoc.lr * ssoc.lr_decay.powi(epoch as i32);
        let mut order: Vec<usize> = (0..tasks.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[
            b"ssoc-epoch",
            &ssoc.seed.to_le_bytes(),
            &(epoch as u64).to_le_bytes(),
        ]));
        order.shuffle(&mut rng);

        let mut loss_sum = 0.0;
        let mut correct = 0;
        for (step, &ti) in order.iter().enumerate() {
            let task = &tasks[ti];
            let tape = Tape::new();
            let mut fwd = ForwardCtx::train(derive_seed(&[
                b"ssoc-fwd",
                &ssoc.seed.to_le_bytes(),
                &(epoch as u64).to_le_bytes(),
                &(step as u64).to_le_bytes(),
            ]));
            let out = ssoc_forward(&tape, &mut fwd, params, config, corpus, task)?;
            let loss = tape.cross_entropy(&out.logits, task.label);
            loss_sum += loss.item();
            let probs = out.probs.to_vec();
            let argmax = probs
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).expect("finite probs"))
                .map(|(i, _)| i)
                .unwrap_or(0);
            if argmax == task.label {
                correct += 1;
            }
            tape.backward(&loss)?;
            opt.step(&tensors);
            params.zero_grads();
        }
        let metrics = SsocEpochMetrics {
            epoch,
            lr: opt.lr,
            mean_loss: if tasks.is_empty() { 0.0 } else { loss_sum / tasks.len() as f64 },
            task_accuracy: if tasks.is_empty() { 0.0 } else { correct as f64 / tasks.len() as f64 },
            tasks: tasks.len(),
        };
        on_epoch(&metrics, params, &opt);
        history.push(metrics);
    }
    Ok(history)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate_synthetic_corpus, EmbeddingTable, SynthSpec};

    fn corpus() -> Corpus {
        generate_synthetic_corpus(
            &SynthSpec {
                vocab_size: 60,
                lessons: 2,
                paragraphs_per_lesson: 3,
                questions_per_lesson: 3,
                val_lessons: 1,
                ..SynthSpec::default()
            },
            1,
        )
        .unwrap()
    }

    #[test]
    fn one_task_per_question_candidate_pair() {
        let corpus = corpus();
        let tasks = generate_tasks(&corpus, SsocSplit::TrainVal, 3).unwrap();
        let expected: usize = corpus
            .lessons
            .iter()
            .flat_map(|l| &l.questions)
            .map(|q| q.candidates.len())
            .sum();
        assert_eq!(tasks.len(), expected);
        for t in &tasks {
            assert_eq!(t.label, 0);
            assert_eq!(t.contexts.len(), t.j);
            assert!((2..=7).contains(&t.j) || t.j == corpus.lesson(&t.lesson_id).unwrap().paragraphs.len());
        }
    }

    #[test]
    fn train_split_excludes_val_lessons() {
        let corpus = corpus();
        let tasks = generate_tasks(&corpus, SsocSplit::Train, 3).unwrap();
        let val_ids: Vec<&String> = corpus.manifest.splits.val.iter().collect();
        assert!(!tasks.is_empty());
        assert!(tasks.iter().all(|t| !val_ids.contains(&&t.lesson_id)));
    }

    #[test]
    fn single_paragraph_lesson_clamps_j_to_one() {
        let corpus = generate_synthetic_corpus(
            &SynthSpec {
                vocab_size: 40,
                lessons: 1,
                paragraphs_per_lesson: 1,
                questions_per_lesson: 1,
                ..SynthSpec::default()
            },
            0,
        )
        .unwrap();
        let tasks = generate_tasks(&corpus, SsocSplit::TrainVal, 0).unwrap();
        assert!(tasks.iter().all(|t| t.j == 1 && t.contexts.len() == 1 && t.label == 0));
    }

    #[test]
    fn tasks_ignore_gold_answer_labels() {
        let corpus = corpus();
        let mut corrupted = corpus.clone();
        for lesson in &mut corrupted.lessons {
            for q in &mut lesson.questions {
                q.answer_index = (q.answer_index + 1) % q.candidates.len();
            }
        }
        let a = generate_tasks(&corpus, SsocSplit::TrainVal, 9).unwrap();
        let b = generate_tasks(&corrupted, SsocSplit::TrainVal, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn generation_is_pure_in_corpus_split_seed() {
        let corpus = corpus();
        let a = generate_tasks(&corpus, SsocSplit::TrainVal, 5).unwrap();
        let b = generate_tasks(&corpus, SsocSplit::TrainVal, 5).unwrap();
        let c = generate_tasks(&corpus, SsocSplit::TrainVal, 6).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn forward_is_a_distribution_and_j1_is_degenerate() {
        let corpus = corpus();
        let config = ModelConfig::tiny();
        let table = EmbeddingTable::random(config.word_dim, 0);
        let params = ModelParams::new(&config, &corpus, &table, 4);
        let tasks = generate_tasks(&corpus, SsocSplit::TrainVal, 2).unwrap();
        let task = &tasks[0];
        let tape = Tape::inference();
        let mut ctx = ForwardCtx::eval();
        let out = ssoc_forward(&tape, &mut ctx, &params, &config, &corpus, task).unwrap();
        let sum: f64 = out.probs.to_vec().iter().sum();
        assert!((sum - 1.0).abs() < 1e-9);

        let mut degenerate = task.clone();
        degenerate.contexts.truncate(1);
        degenerate.j = 1;
        let out = ssoc_forward(&tape, &mut ctx, &params, &config, &corpus, &degenerate).unwrap();
        assert_eq!(out.probs.to_vec(), vec![1.0]);
    }

    #[test]
    fn ssoc_forward_gradcheck_on_j2_task() {
        let corpus = corpus();
        let config = ModelConfig::tiny();
        let table = EmbeddingTable::random(config.word_dim, 0);
        let params = ModelParams::new(&config, &corpus, &table, 4);
        let tasks = generate_tasks(&corpus, SsocSplit::TrainVal, 2).unwrap();
        let task = tasks.iter().find(|t| t.j >= 2).expect("a j>=2 task exists");
        let task = SsocTask { contexts: task.contexts[..2].to_vec(), j: 2, ..task.clone() };
        let inputs = params.tensors();
        let err = crate::numerics::gradcheck::gradcheck(
            |tape, _| {
                let mut ctx = ForwardCtx::eval();
                let out = ssoc_forward(tape, &mut ctx, &params, &config, &corpus, &task).unwrap();
                tape.cross_entropy(&out.logits, 0)
            },
            &inputs,
            1e-5,
        );
        assert!(err < 1e-3, "ssoc gradcheck err {err:.3e}");
    }

    #[test]
    fn zero_epochs_leave_params_unchanged() {
        let corpus = corpus();
        let config = ModelConfig::tiny();
        let table = EmbeddingTable::random(config.word_dim, 0);
        let params = ModelParams::new(&config, &corpus, &table, 4);
        let before: Vec<Vec<f64>> = params.tensors().iter().map(|t| t.to_vec()).collect();
        let ssoc = SsocConfig { epochs: 0, ..SsocConfig::default() };
        let history = pretrain(&corpus, &params, &config, &ssoc, |_, _, _| {}).unwrap();
        assert!(history.is_empty());
        let after: Vec<Vec<f64>> = params.tensors().iter().map(|t| t.to_vec()).collect();
        assert_eq!(before, after);
    }
}
