//! Deterministic synthetic corpus generator — a desk-scale stand-in for a
//! real textbook corpus.
//!
//! Construction guarantees that make the generated task learnable:
//! - every question gets its own answer token, planted in exactly one
//!   paragraph of its lesson (so TF-IDF retrieval has a signal);
//! - wrong candidates are drawn from a token pool that never occurs in any
//!   paragraph (so occurrence flags separate right from wrong);
//! - for true/false questions the statement's first token is the planted
//!   answer token, and the final token is either drawn from the target
//!   paragraph (true) or from the never-planted pool (false).

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::seeding::derive_seed;

use super::{
    Candidate, Corpus, CorpusError, DependencyTree, DiagramGraph, Entity, Lesson, Manifest,
    Paragraph, Question, QuestionKind, Splits,
};

#[derive(Clone, Debug)]
pub struct SynthSpec {
    pub vocab_size: usize,
    pub lessons: usize,
    pub paragraphs_per_lesson: usize,
    pub questions_per_lesson: usize,
    pub frac_true_false: f64,
    pub frac_text_mc: f64,
    pub frac_diagram: f64,
    /// Trailing lessons assigned to the validation split.
    pub val_lessons: usize,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            vocab_size: 120,
            lessons: 5,
            paragraphs_per_lesson: 4,
            questions_per_lesson: 10,
            frac_true_false: 0.3,
            frac_text_mc: 0.4,
            frac_diagram: 0.3,
            val_lessons: 0,
        }
    }
}

struct Pools {
    filler: Vec<String>,
    answers: Vec<String>,
    distractors: Vec<String>,
}

fn validate_spec(spec: &SynthSpec) -> Result<Pools, CorpusError> {
    if spec.vocab_size == 0
        || spec.lessons == 0
        || spec.paragraphs_per_lesson == 0
        || spec.questions_per_lesson == 0
    {
        return Err(CorpusError::Spec("all counts must be nonzero".into()));
    }
    let fracs = [spec.frac_true_false, spec.frac_text_mc, spec.frac_diagram];
    if fracs.iter().any(|f| *f < 0.0) || fracs.iter().sum::<f64>() <= 0.0 {
        return Err(CorpusError::Spec("question-kind fractions must be nonnegative and not all zero".into()));
    }
    if spec.val_lessons >= spec.lessons {
        return Err(CorpusError::Spec(format!(
            "val_lessons {} must leave at least one training lesson of {}",
            spec.val_lessons, spec.lessons
        )));
    }
    let width = spec.vocab_size.saturating_sub(1).to_string().len().max(3);
    let vocab: Vec<String> = (0..spec.vocab_size).map(|i| format!("w{i:0width$}")).collect();
    let half = spec.vocab_size / 2;
    let quarter = spec.vocab_size / 4;
    let pools = Pools {
        filler: vocab[..half].to_vec(),
        answers: vocab[half..half + quarter].to_vec(),
        distractors: vocab[half + quarter..].to_vec(),
    };
    if pools.filler.len() < 8 {
        return Err(CorpusError::Spec("vocab_size too small: need at least 8 filler tokens".into()));
    }
    if pools.answers.len() < spec.questions_per_lesson {
        return Err(CorpusError::Spec(format!(
            "vocab_size too small: {} answer tokens for {} questions per lesson",
            pools.answers.len(),
            spec.questions_per_lesson
        )));
    }
    if pools.distractors.len() < 6 {
        return Err(CorpusError::Spec("vocab_size too small: need at least 6 distractor tokens".into()));
    }
    Ok(pools)
}

fn chain_tree(tokens: &[String]) -> DependencyTree {
    DependencyTree {
        nodes: tokens.iter().enumerate().map(|(i, t)| (i, t.clone())).collect(),
        edges: (1..tokens.len()).map(|i| (i - 1, i, "dep".to_string())).collect(),
    }
}

fn kind_schedule(spec: &SynthSpec, rng: &mut ChaCha8Rng) -> Vec<QuestionKind> {
    let q = spec.questions_per_lesson;
    let total = spec.frac_true_false + spec.frac_text_mc + spec.frac_diagram;
    let n_tf = ((spec.frac_true_false / total) * q as f64).round() as usize;
    let n_mc = (((spec.frac_text_mc / total) * q as f64).round() as usize).min(q - n_tf.min(q));
    let n_tf = n_tf.min(q);
    let mut kinds = Vec::with_capacity(q);
    kinds.extend(std::iter::repeat(QuestionKind::TrueFalse).take(n_tf));
    kinds.extend(std::iter::repeat(QuestionKind::TextMc).take(n_mc));
    kinds.extend(std::iter::repeat(QuestionKind::Diagram).take(q - n_tf - n_mc));
    kinds.shuffle(rng);
    kinds
}

/// Generates a corpus as a pure function of (spec, seed).
pub fn generate_synthetic_corpus(spec: &SynthSpec, seed: u64) -> Result<Corpus, CorpusError> {
    let pools = validate_spec(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[b"synth-corpus", &seed.to_le_bytes()]));

    let mut lessons = Vec::with_capacity(spec.lessons);
    for l in 0..spec.lessons {
        let lesson_id = format!("L{l:02}");
        let mut paragraphs: Vec<Vec<String>> = (0..spec.paragraphs_per_lesson)
            .map(|_| {
                let len = rng.gen_range(8..=12);
                (0..len).map(|_| pools.filler.choose(&mut rng).unwrap().clone()).collect()
            })
            .collect();

        let mut answer_tokens = pools.answers.clone();
        answer_tokens.shuffle(&mut rng);
        let kinds = kind_schedule(spec, &mut rng);

        let mut questions = Vec::with_capacity(spec.questions_per_lesson);
        for (qi, kind) in kinds.iter().enumerate() {
            let answer_token = answer_tokens[qi].clone();
            let target = rng.gen_range(0..spec.paragraphs_per_lesson);
            let at = rng.gen_range(0..=paragraphs[target].len());
            paragraphs[target].insert(at, answer_token.clone());

            let sample_from_target = |rng: &mut ChaCha8Rng, paragraphs: &[Vec<String>], avoid: &str| {
                loop {
                    let t = paragraphs[target].choose(rng).unwrap();
                    if t != avoid {
                        return t.clone();
                    }
                }
            };

            let question = match kind {
                QuestionKind::TrueFalse => {
                    let is_true = rng.gen_bool(0.5);
                    let t1 = sample_from_target(&mut rng, &paragraphs, &answer_token);
                    let t2 = sample_from_target(&mut rng, &paragraphs, &answer_token);
                    let marker = if is_true {
                        sample_from_target(&mut rng, &paragraphs, &answer_token)
                    } else {
                        pools.distractors.choose(&mut rng).unwrap().clone()
                    };
                    Question {
                        id: format!("{lesson_id}-q{qi}"),
                        kind: QuestionKind::TrueFalse,
                        tokens: vec![answer_token.clone(), t1, t2, marker],
                        question_diagram: None,
                        candidates: vec![
                            Candidate { tokens: vec!["true".into()] },
                            Candidate { tokens: vec!["false".into()] },
                        ],
                        answer_index: usize::from(!is_true),
                    }
                }
                QuestionKind::TextMc => {
                    let n = rng.gen_range(3..=6);
                    let tokens: Vec<String> = (0..3)
                        .map(|_| sample_from_target(&mut rng, &paragraphs, &answer_token))
                        .collect();
                    let answer_index = rng.gen_range(0..n);
                    let wrong: Vec<&String> =
                        pools.distractors.choose_multiple(&mut rng, n - 1).collect();
                    let mut candidates = Vec::with_capacity(n);
                    let mut wrong_iter = wrong.into_iter();
                    for k in 0..n {
                        if k == answer_index {
                            candidates.push(Candidate { tokens: vec![answer_token.clone()] });
                        } else {
                            candidates
                                .push(Candidate { tokens: vec![wrong_iter.next().unwrap().clone()] });
                        }
                    }
                    Question {
                        id: format!("{lesson_id}-q{qi}"),
                        kind: QuestionKind::TextMc,
                        tokens,
                        question_diagram: None,
                        candidates,
                        answer_index,
                    }
                }
                QuestionKind::Diagram => {
                    let n = 4;
                    let tokens: Vec<String> = (0..3)
                        .map(|_| sample_from_target(&mut rng, &paragraphs, &answer_token))
                        .collect();
                    let n_entities = rng.gen_range(3..=6);
                    let answer_entity = rng.gen_range(0..n_entities);
                    let entities: Vec<Entity> = (0..n_entities)
                        .map(|e| {
                            let name_tokens = if e == answer_entity {
                                vec![answer_token.clone()]
                            } else if e == (answer_entity + 1) % n_entities {
                                // one multi-token name per diagram
                                vec![
                                    pools.filler.choose(&mut rng).unwrap().clone(),
                                    pools.filler.choose(&mut rng).unwrap().clone(),
                                ]
                            } else {
                                vec![pools.filler.choose(&mut rng).unwrap().clone()]
                            };
                            Entity { index: e, name_tokens }
                        })
                        .collect();
                    let relations: Vec<(usize, usize)> =
                        (1..n_entities).map(|e| (e - 1, e)).collect();
                    let answer_index = rng.gen_range(0..n);
                    let wrong: Vec<&String> =
                        pools.distractors.choose_multiple(&mut rng, n - 1).collect();
                    let mut wrong_iter = wrong.into_iter();
                    let candidates = (0..n)
                        .map(|k| {
                            if k == answer_index {
                                Candidate { tokens: vec![answer_token.clone()] }
                            } else {
                                Candidate { tokens: vec![wrong_iter.next().unwrap().clone()] }
                            }
                        })
                        .collect();
                    Question {
                        id: format!("{lesson_id}-q{qi}"),
                        kind: QuestionKind::Diagram,
                        tokens,
                        question_diagram: Some(DiagramGraph {
                            id: format!("{lesson_id}-q{qi}-d"),
                            entities,
                            relations,
                            entity_count: n_entities,
                        }),
                        candidates,
                        answer_index,
                    }
                }
            };
            questions.push(question);
        }

        // one visual-context diagram per lesson, named from paragraph tokens
        let diagram_entities: Vec<Entity> = (0..3)
            .map(|e| Entity {
                index: e,
                name_tokens: vec![paragraphs[e % paragraphs.len()]
                    .first()
                    .expect("paragraphs are nonempty")
                    .clone()],
            })
            .collect();
        let diagrams = vec![DiagramGraph {
            id: format!("{lesson_id}-d0"),
            entities: diagram_entities,
            relations: vec![(0, 1), (1, 2)],
            entity_count: 3,
        }];

        lessons.push(Lesson {
            id: lesson_id.clone(),
            paragraphs: paragraphs
                .into_iter()
                .enumerate()
                .map(|(p, tokens)| Paragraph {
                    id: format!("{lesson_id}-p{p}"),
                    dep_tree: chain_tree(&tokens),
                    tokens,
                })
                .collect(),
            diagrams,
            questions,
        });
    }

    let train_ids: Vec<String> = lessons[..spec.lessons - spec.val_lessons]
        .iter()
        .map(|l| l.id.clone())
        .collect();
    let val_ids: Vec<String> =
        lessons[spec.lessons - spec.val_lessons..].iter().map(|l| l.id.clone()).collect();
    let mut corpus = Corpus {
        lessons,
        manifest: Manifest {
            splits: Splits { train: train_ids, val: val_ids },
            counts: Default::default(),
        },
    };
    corpus.manifest.counts = corpus.counts();
    Ok(corpus)
}
