//! Turns corpus questions into scoring instances: per-candidate TF-IDF
//! retrieval, context graph construction, and occurrence-flag token sets.

use std::collections::BTreeSet;

use crate::corpus::{Corpus, DiagramGraph, Lesson, Question, QuestionKind, Split};
use crate::graphbuild::{
    anchor_nodes, build_diagram_graph, build_textual_graph, count_sentence, CountNoun, GraphKind,
};
use crate::model::{CandidateInstance, ModelConfig, ScoringInstance};
use crate::retrieval::TfidfIndex;

use super::HarnessError;

/// One question ready to score, with its gold label kept alongside.
#[derive(Clone, Debug)]
pub struct PreparedQuestion {
    pub lesson_id: String,
    pub question_id: String,
    pub kind: QuestionKind,
    pub answer_index: usize,
    pub instance: ScoringInstance,
}

/// Disjoint union of a lesson's diagram graphs: one visual context per
/// lesson, entities renumbered, capped later by the graph builder.
pub fn union_diagrams(diagrams: &[DiagramGraph]) -> Option<DiagramGraph> {
    if diagrams.is_empty() {
        return None;
    }
    if diagrams.len() == 1 {
        return Some(diagrams[0].clone());
    }
    let mut entities = Vec::new();
    let mut relations = Vec::new();
    for d in diagrams {
        let offset = entities.len();
        for e in &d.entities {
            entities.push(crate::corpus::Entity {
                index: offset + e.index,
                name_tokens: e.name_tokens.clone(),
            });
        }
        for (a, b) in &d.relations {
            relations.push((offset + a, offset + b));
        }
    }
    Some(DiagramGraph {
        id: format!("{}-union", diagrams[0].id),
        entity_count: entities.len(),
        entities,
        relations,
    })
}

/// Builds the scoring instance for one question: per candidate, the top
/// TF-IDF paragraph for [question ; candidate] becomes the textual graph
/// (anchored by exact question/candidate token matches), the lesson's
/// diagrams become the shared visual context, and for diagram questions the
/// entity-count sentence is appended to the question text.
pub fn build_instance(
    lesson: &Lesson,
    question: &Question,
    index: &TfidfIndex,
    config: &ModelConfig,
) -> Result<ScoringInstance, HarnessError> {
    let visual_graph = union_diagrams(&lesson.diagrams)
        .map(|d| build_diagram_graph(&d, GraphKind::VisualContext, config.cap_visual));
    let visual_tokens: BTreeSet<String> = visual_graph
        .as_ref()
        .map(|g| {
            g.node_tokens
                .iter()
                .flat_map(|label| label.split_whitespace().map(str::to_string))
                .collect()
        })
        .unwrap_or_default();

    let mut candidates = Vec::with_capacity(question.candidates.len());
    for candidate in &question.candidates {
        let mut query = question.tokens.clone();
        query.extend(candidate.tokens.iter().cloned());
        let top = index.top_j(&query, 1)?;
        let paragraph_id = top[0].clone();
        let paragraph = lesson
            .paragraphs
            .iter()
            .find(|p| p.id == paragraph_id)
            .expect("retrieval returns ids from this lesson");
        let anchors = anchor_nodes(&paragraph.dep_tree, &question.tokens, &candidate.tokens);
        let textual = build_textual_graph(
            &paragraph.dep_tree,
            &anchors,
            config.cap_textual,
            config.relation_nodes,
        );
        let mut context_tokens: BTreeSet<String> = paragraph.tokens.iter().cloned().collect();
        context_tokens.extend(visual_tokens.iter().cloned());
        candidates.push(CandidateInstance {
            tokens: candidate.tokens.clone(),
            textual,
            visual: visual_graph.clone(),
            context_tokens,
            paragraph_id,
        });
    }

    let mut question_tokens = question.tokens.clone();
    let question_diagram = question.question_diagram.as_ref().map(|d| {
        question_tokens.extend(count_sentence(d, CountNoun::Objects));
        build_diagram_graph(d, GraphKind::QuestionDiagram, config.cap_question_diagram)
    });

    Ok(ScoringInstance { question_tokens, candidates, question_diagram })
}

/// Prepares every question of a split, lesson order then question order.
pub fn prepare_questions(
    corpus: &Corpus,
    split: Split,
    config: &ModelConfig,
) -> Result<Vec<PreparedQuestion>, HarnessError> {
    let mut prepared = Vec::new();
    for lesson in corpus.lessons_in(split) {
        let index = TfidfIndex::build(&lesson.paragraphs)?;
        for question in &lesson.questions {
            prepared.push(PreparedQuestion {
                lesson_id: lesson.id.clone(),
                question_id: question.id.clone(),
                kind: question.kind,
                answer_index: question.answer_index,
                instance: build_instance(lesson, question, &index, config)?,
            });
        }
    }
    Ok(prepared)
}
