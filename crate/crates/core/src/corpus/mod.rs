//! Corpus data model, on-disk formats, and validation.
//!
//! Corpus files carry pre-tokenized, lowercased tokens together with
//! pre-parsed dependency trees and diagram parse graphs; running parsers is
//! out of scope. Everything is immutable after load.

mod embed;
mod synth;

pub use embed::{EmbeddingTable, OovPolicy};
pub use synth::{generate_synthetic_corpus, SynthSpec};

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("schema error in {file} at {pointer}: {message}")]
    Schema { file: String, pointer: String, message: String },
    #[error("invariant violation: {0}")]
    Invariant(String),
    #[error("embedding file {file} line {line}: expected {expected} values, got {got}")]
    DimMismatch { file: String, line: usize, expected: usize, got: usize },
    #[error("invalid synthetic corpus spec: {0}")]
    Spec(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lesson {
    pub id: String,
    pub paragraphs: Vec<Paragraph>,
    #[serde(default)]
    pub diagrams: Vec<DiagramGraph>,
    pub questions: Vec<Question>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Paragraph {
    pub id: String,
    pub tokens: Vec<String>,
    pub dep_tree: DependencyTree,
}

/// Pre-parsed dependency tree. Node `i` must describe token `i` of its
/// paragraph; edges are (head, dependent, relation) and must form a forest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DependencyTree {
    pub nodes: Vec<(usize, String)>,
    pub edges: Vec<(usize, usize, String)>,
}

/// Pre-parsed diagram: named entities plus undirected relations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagramGraph {
    pub id: String,
    pub entities: Vec<Entity>,
    pub relations: Vec<(usize, usize)>,
    pub entity_count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Entity {
    pub index: usize,
    pub name_tokens: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuestionKind {
    TrueFalse,
    TextMc,
    Diagram,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Question {
    pub id: String,
    pub kind: QuestionKind,
    pub tokens: Vec<String>,
    #[serde(default)]
    pub question_diagram: Option<DiagramGraph>,
    pub candidates: Vec<Candidate>,
    pub answer_index: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub tokens: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub splits: Splits,
    #[serde(default)]
    pub counts: BTreeMap<String, usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Splits {
    pub train: Vec<String>,
    pub val: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Split {
    Train,
    Val,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Corpus {
    pub lessons: Vec<Lesson>,
    pub manifest: Manifest,
}

impl Corpus {
    pub fn lesson(&self, id: &str) -> Option<&Lesson> {
        self.lessons.iter().find(|l| l.id == id)
    }

    /// Lessons belonging to one split, in manifest order.
    pub fn lessons_in(&self, split: Split) -> Vec<&Lesson> {
        let ids = match split {
            Split::Train => &self.manifest.splits.train,
            Split::Val => &self.manifest.splits.val,
        };
        ids.iter().filter_map(|id| self.lesson(id)).collect()
    }

    /// Locates a question and its lesson by question id.
    pub fn find_question(&self, question_id: &str) -> Option<(&Lesson, &Question)> {
        for lesson in &self.lessons {
            if let Some(q) = lesson.questions.iter().find(|q| q.id == question_id) {
                return Some((lesson, q));
            }
        }
        None
    }

    /// Per-kind question counts, keyed like the manifest's `counts` block.
    pub fn counts(&self) -> BTreeMap<String, usize> {
        let mut counts = BTreeMap::new();
        counts.insert("lessons".into(), self.lessons.len());
        counts.insert("paragraphs".into(), self.lessons.iter().map(|l| l.paragraphs.len()).sum());
        let mut questions = 0;
        let (mut tf, mut mc, mut diagram) = (0, 0, 0);
        for lesson in &self.lessons {
            for q in &lesson.questions {
                questions += 1;
                match q.kind {
                    QuestionKind::TrueFalse => tf += 1,
                    QuestionKind::TextMc => mc += 1,
                    QuestionKind::Diagram => diagram += 1,
                }
            }
        }
        counts.insert("questions".into(), questions);
        counts.insert("questions_true_false".into(), tf);
        counts.insert("questions_text_mc".into(), mc);
        counts.insert("questions_diagram".into(), diagram);
        counts
    }
}

fn io_err(path: &Path, source: std::io::Error) -> CorpusError {
    CorpusError::Io { path: path.display().to_string(), source }
}

fn parse_json<T: serde::de::DeserializeOwned>(path: &Path, text: &str) -> Result<T, CorpusError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| CorpusError::Schema {
        file: path.display().to_string(),
        pointer: format!("/{}", e.path().to_string().replace('.', "/")),
        message: e.inner().to_string(),
    })
}

/// Loads and validates a corpus directory: `lessons/*.json` plus
/// `manifest.json` with the lesson-level train/val split.
pub fn load_corpus(dir: &Path) -> Result<Corpus, CorpusError> {
    let manifest_path = dir.join("manifest.json");
    let manifest_text = fs::read_to_string(&manifest_path).map_err(|e| io_err(&manifest_path, e))?;
    let manifest: Manifest = parse_json(&manifest_path, &manifest_text)?;

    let lessons_dir = dir.join("lessons");
    let mut files: Vec<_> = fs::read_dir(&lessons_dir)
        .map_err(|e| io_err(&lessons_dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();

    let mut lessons = Vec::with_capacity(files.len());
    for file in files {
        let text = fs::read_to_string(&file).map_err(|e| io_err(&file, e))?;
        let lesson: Lesson = parse_json(&file, &text)?;
        validate_lesson(&lesson)?;
        lessons.push(lesson);
    }

    let corpus = Corpus { lessons, manifest };
    validate_splits(&corpus)?;
    Ok(corpus)
}

/// Writes a corpus in the on-disk layout `load_corpus` reads.
pub fn save_corpus(corpus: &Corpus, dir: &Path) -> Result<(), CorpusError> {
    let lessons_dir = dir.join("lessons");
    fs::create_dir_all(&lessons_dir).map_err(|e| io_err(&lessons_dir, e))?;
    for lesson in &corpus.lessons {
        let path = lessons_dir.join(format!("{}.json", lesson.id));
        let text = serde_json::to_string_pretty(lesson).expect("lesson serializes");
        fs::write(&path, text).map_err(|e| io_err(&path, e))?;
    }
    let manifest_path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&corpus.manifest).expect("manifest serializes");
    fs::write(&manifest_path, text).map_err(|e| io_err(&manifest_path, e))?;
    Ok(())
}

fn validate_lesson(lesson: &Lesson) -> Result<(), CorpusError> {
    if lesson.paragraphs.is_empty() {
        return Err(CorpusError::Invariant(format!("lesson {} has no paragraphs", lesson.id)));
    }
    let mut seen = BTreeSet::new();
    for p in &lesson.paragraphs {
        if !seen.insert(&p.id) {
            return Err(CorpusError::Invariant(format!(
                "lesson {} repeats paragraph id {}",
                lesson.id, p.id
            )));
        }
        validate_paragraph(p)?;
    }
    for d in &lesson.diagrams {
        validate_diagram(d)?;
    }
    for q in &lesson.questions {
        validate_question(q)?;
    }
    Ok(())
}

fn validate_paragraph(p: &Paragraph) -> Result<(), CorpusError> {
    if p.tokens.is_empty() {
        return Err(CorpusError::Invariant(format!("paragraph {} has no tokens", p.id)));
    }
    let n = p.tokens.len();
    if p.dep_tree.nodes.len() != n {
        return Err(CorpusError::Invariant(format!(
            "paragraph {}: dependency tree has {} nodes for {} tokens",
            p.id,
            p.dep_tree.nodes.len(),
            n
        )));
    }
    for (pos, (idx, _)) in p.dep_tree.nodes.iter().enumerate() {
        if *idx != pos {
            return Err(CorpusError::Invariant(format!(
                "paragraph {}: dependency node at position {pos} has index {idx}",
                p.id
            )));
        }
    }
    // forest: each dependent has at most one head and parent chains are acyclic
    let mut parent = vec![None; n];
    for (head, dep, rel) in &p.dep_tree.edges {
        if *head >= n || *dep >= n {
            return Err(CorpusError::Invariant(format!(
                "paragraph {}: edge ({head},{dep}) out of range {n}",
                p.id
            )));
        }
        if rel.is_empty() {
            return Err(CorpusError::Invariant(format!(
                "paragraph {}: edge ({head},{dep}) has empty relation",
                p.id
            )));
        }
        if parent[*dep].replace(*head).is_some() {
            return Err(CorpusError::Invariant(format!(
                "paragraph {}: node {dep} has two heads",
                p.id
            )));
        }
    }
    for start in 0..n {
        let mut node = start;
        let mut steps = 0;
        while let Some(next) = parent[node] {
            node = next;
            steps += 1;
            if steps > n {
                return Err(CorpusError::Invariant(format!(
                    "paragraph {}: dependency edges contain a cycle through node {start}",
                    p.id
                )));
            }
        }
    }
    Ok(())
}

fn validate_diagram(d: &DiagramGraph) -> Result<(), CorpusError> {
    if d.entity_count != d.entities.len() {
        return Err(CorpusError::Invariant(format!(
            "diagram {}: entity_count {} but {} entities",
            d.id,
            d.entity_count,
            d.entities.len()
        )));
    }
    for (pos, e) in d.entities.iter().enumerate() {
        if e.index != pos {
            return Err(CorpusError::Invariant(format!(
                "diagram {}: entity at position {pos} has index {}",
                d.id, e.index
            )));
        }
        if e.name_tokens.is_empty() {
            return Err(CorpusError::Invariant(format!(
                "diagram {}: entity {pos} has no name tokens",
                d.id
            )));
        }
    }
    for (a, b) in &d.relations {
        if *a >= d.entities.len() || *b >= d.entities.len() {
            return Err(CorpusError::Invariant(format!(
                "diagram {}: relation ({a},{b}) out of range {}",
                d.id,
                d.entities.len()
            )));
        }
    }
    Ok(())
}

fn validate_question(q: &Question) -> Result<(), CorpusError> {
    if q.tokens.is_empty() {
        return Err(CorpusError::Invariant(format!("question {} has no tokens", q.id)));
    }
    let n = q.candidates.len();
    if !(2..=7).contains(&n) {
        return Err(CorpusError::Invariant(format!(
            "question {} has {n} candidates, expected 2..=7",
            q.id
        )));
    }
    if q.kind == QuestionKind::TrueFalse && n != 2 {
        return Err(CorpusError::Invariant(format!(
            "true/false question {} must have exactly 2 candidates, has {n}",
            q.id
        )));
    }
    if q.answer_index >= n {
        return Err(CorpusError::Invariant(format!(
            "question {}: answer_index {} out of range for {n} candidates",
            q.id, q.answer_index
        )));
    }
    for (k, c) in q.candidates.iter().enumerate() {
        if c.tokens.is_empty() {
            return Err(CorpusError::Invariant(format!(
                "question {}: candidate {k} has no tokens",
                q.id
            )));
        }
    }
    if let Some(d) = &q.question_diagram {
        validate_diagram(d)?;
    }
    Ok(())
}

fn validate_splits(corpus: &Corpus) -> Result<(), CorpusError> {
    let mut assigned = BTreeMap::new();
    for (name, ids) in
        [("train", &corpus.manifest.splits.train), ("val", &corpus.manifest.splits.val)]
    {
        for id in ids {
            if corpus.lesson(id).is_none() {
                return Err(CorpusError::Invariant(format!(
                    "manifest split {name} references unknown lesson {id}"
                )));
            }
            if assigned.insert(id.clone(), name).is_some() {
                return Err(CorpusError::Invariant(format!(
                    "lesson {id} appears in more than one split"
                )));
            }
        }
    }
    for lesson in &corpus.lessons {
        if !assigned.contains_key(&lesson.id) {
            return Err(CorpusError::Invariant(format!(
                "lesson {} is missing from the manifest splits",
                lesson.id
            )));
        }
    }
    Ok(())
}
