//! Single-question prediction with the explanation bundle behind the
//! qualitative figures: per candidate, the retrieved paragraph, the anchor
//! tokens, and the pruned context subgraph.

use serde::Serialize;

use crate::corpus::{Corpus, QuestionKind};
use crate::graphbuild::GraphDump;
use crate::model::{score_candidates, ForwardCtx, ModelConfig, ModelParams};
use crate::numerics::Tape;
use crate::retrieval::TfidfIndex;

use super::evaluate::argmax;
use super::prepare::build_instance;
use super::HarnessError;

#[derive(Debug, Serialize)]
pub struct CandidateExplanation {
    pub tokens: Vec<String>,
    pub probability: f64,
    pub paragraph_id: String,
    pub anchor_tokens: Vec<String>,
    pub subgraph: GraphDump,
}

#[derive(Debug, Serialize)]
pub struct PredictBundle {
    pub question_id: String,
    pub kind: QuestionKind,
    pub question_tokens: Vec<String>,
    pub predicted: usize,
    pub answer_index: usize,
    pub candidates: Vec<CandidateExplanation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub question_diagram: Option<GraphDump>,
}

pub fn predict(
    corpus: &Corpus,
    question_id: &str,
    params: &ModelParams,
    config: &ModelConfig,
) -> Result<PredictBundle, HarnessError> {
    let (lesson, question) = corpus
        .find_question(question_id)
        .ok_or_else(|| HarnessError::UnknownQuestion(question_id.to_string()))?;
    let index = TfidfIndex::build(&lesson.paragraphs)?;
    let instance = build_instance(lesson, question, &index, config)?;

    let tape = Tape::inference();
    let mut ctx = ForwardCtx::eval();
    let out = score_candidates(&tape, &mut ctx, params, config, &instance)?;
    let probabilities = out.probs.to_vec();

    let candidates = instance
        .candidates
        .iter()
        .zip(&probabilities)
        .map(|(c, &probability)| CandidateExplanation {
            tokens: c.tokens.clone(),
            probability,
            paragraph_id: c.paragraph_id.clone(),
            anchor_tokens: c
                .textual
                .anchors
                .iter()
                .map(|&i| c.textual.node_tokens[i].clone())
                .collect(),
            subgraph: GraphDump::from(&c.textual),
        })
        .collect();

    Ok(PredictBundle {
        question_id: question_id.to_string(),
        kind: question.kind,
        question_tokens: instance.question_tokens.clone(),
        predicted: argmax(&probabilities),
        answer_index: question.answer_index,
        candidates,
        question_diagram: instance.question_diagram.as_ref().map(GraphDump::from),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate_synthetic_corpus, SynthSpec};

    #[test]
    fn bundle_is_consistent_with_retrieval() {
        let corpus = generate_synthetic_corpus(
            &SynthSpec {
                vocab_size: 60,
                lessons: 1,
                paragraphs_per_lesson: 3,
                questions_per_lesson: 4,
                ..SynthSpec::default()
            },
            3,
        )
        .unwrap();
        let config = ModelConfig::tiny();
        let params = ModelParams::zeros(&config, &corpus);
        let lesson = &corpus.lessons[0];
        let question = &lesson.questions[0];
        let bundle = predict(&corpus, &question.id, &params, &config).unwrap();

        let sum: f64 = bundle.candidates.iter().map(|c| c.probability).sum();
        assert!((sum - 1.0).abs() < 1e-9);

        // explanation paragraph equals top-1 retrieval per candidate
        let index = TfidfIndex::build(&lesson.paragraphs).unwrap();
        for (k, c) in bundle.candidates.iter().enumerate() {
            let mut query = question.tokens.clone();
            query.extend(question.candidates[k].tokens.iter().cloned());
            assert_eq!(c.paragraph_id, index.top_j(&query, 1).unwrap()[0]);
            // anchors listed in the bundle are tokens of the subgraph
            for a in &c.anchor_tokens {
                assert!(c.subgraph.node_tokens.contains(a));
            }
        }
    }

    #[test]
    fn unknown_question_is_an_error() {
        let corpus = generate_synthetic_corpus(&SynthSpec::default(), 0).unwrap();
        let config = ModelConfig::tiny();
        let params = ModelParams::zeros(&config, &corpus);
        assert!(matches!(
            predict(&corpus, "missing", &params, &config),
            Err(HarnessError::UnknownQuestion(_))
        ));
    }
}
