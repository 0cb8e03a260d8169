//! TF-IDF scoring and top-j paragraph selection. The index is built per
//! lesson: its documents are that lesson's paragraphs, never cross-lesson.
//!
//! Weighting is the smoothed variant: idf(t) = ln((1 + N)/(1 + df(t))) + 1,
//! weight(t, doc) = tf(t, doc) · idf(t), similarity = cosine. Bounded,
//! symmetric, and standard.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::corpus::Paragraph;

#[derive(Debug, Error, PartialEq)]
pub enum RetrievalError {
    #[error("cannot build an index over zero paragraphs")]
    EmptyInput,
    #[error("unknown paragraph id {0}")]
    UnknownParagraph(String),
}

#[derive(Clone, Debug)]
pub struct TfidfIndex {
    doc_count: usize,
    df: BTreeMap<String, usize>,
    docs: Vec<DocEntry>,
}

#[derive(Clone, Debug)]
struct DocEntry {
    id: String,
    tf: BTreeMap<String, usize>,
}

fn term_counts<S: AsRef<str>>(tokens: &[S]) -> BTreeMap<String, usize> {
    let mut tf = BTreeMap::new();
    for t in tokens {
        *tf.entry(t.as_ref().to_string()).or_insert(0) += 1;
    }
    tf
}

impl TfidfIndex {
    pub fn build(paragraphs: &[Paragraph]) -> Result<Self, RetrievalError> {
        if paragraphs.is_empty() {
            return Err(RetrievalError::EmptyInput);
        }
        let mut df: BTreeMap<String, usize> = BTreeMap::new();
        let mut docs = Vec::with_capacity(paragraphs.len());
        for p in paragraphs {
            let tf = term_counts(&p.tokens);
            for term in tf.keys() {
                *df.entry(term.clone()).or_insert(0) += 1;
            }
            docs.push(DocEntry { id: p.id.clone(), tf });
        }
        Ok(TfidfIndex { doc_count: paragraphs.len(), df, docs })
    }

    pub fn doc_count(&self) -> usize {
        self.doc_count
    }

    pub fn df(&self, term: &str) -> usize {
        self.df.get(term).copied().unwrap_or(0)
    }

    pub fn paragraph_ids(&self) -> impl Iterator<Item = &str> {
        self.docs.iter().map(|d| d.id.as_str())
    }

    /// Smoothed idf; terms absent from every document still get a finite
    /// weight of ln(1 + N) + 1.
    fn idf(&self, term: &str) -> f64 {
        ((1 + self.doc_count) as f64 / (1 + self.df(term)) as f64).ln() + 1.0
    }

    fn weighted<'a>(&self, tf: &'a BTreeMap<String, usize>) -> BTreeMap<&'a str, f64> {
        tf.iter().map(|(t, &c)| (t.as_str(), c as f64 * self.idf(t))).collect()
    }

    /// Cosine similarity between the query's tf-idf vector and a paragraph's.
    /// Zero-norm vectors score 0.
    pub fn score<S: AsRef<str>>(&self, query: &[S], paragraph_id: &str) -> Result<f64, RetrievalError> {
        let doc = self
            .docs
            .iter()
            .find(|d| d.id == paragraph_id)
            .ok_or_else(|| RetrievalError::UnknownParagraph(paragraph_id.to_string()))?;
        let query_tf = term_counts(query);
        let q = self.weighted(&query_tf);
        let d = self.weighted(&doc.tf);
        // + 0.0 normalizes the -0.0 that summing an empty overlap produces
        let dot: f64 = q.iter().filter_map(|(t, w)| d.get(t).map(|dw| w * dw)).sum::<f64>() + 0.0;
        let qn: f64 = q.values().map(|w| w * w).sum::<f64>().sqrt();
        let dn: f64 = d.values().map(|w| w * w).sum::<f64>().sqrt();
        if qn == 0.0 || dn == 0.0 {
            return Ok(0.0);
        }
        Ok(dot / (qn * dn))
    }

    /// Paragraph ids sorted by score descending; ties broken by ascending
    /// position in the lesson. If `j` exceeds the paragraph count, all
    /// paragraphs are returned.
    pub fn top_j<S: AsRef<str>>(&self, query: &[S], j: usize) -> Result<Vec<String>, RetrievalError> {
        assert!(j >= 1, "top_j needs j >= 1");
        let mut scored: Vec<(usize, f64, &str)> = Vec::with_capacity(self.docs.len());
        for (pos, d) in self.docs.iter().enumerate() {
            scored.push((pos, self.score(query, &d.id)?, d.id.as_str()));
        }
        scored.sort_by(|a, b| {
            b.1.partial_cmp(&a.1).expect("cosine scores are finite").then(a.0.cmp(&b.0))
        });
        Ok(scored.into_iter().take(j).map(|(_, _, id)| id.to_string()).collect())
    }
}
