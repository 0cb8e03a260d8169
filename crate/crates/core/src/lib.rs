//! Textbook question answering over multi-modal context graphs.
//!
//! The pipeline: TF-IDF retrieval narrows a lesson to the paragraph most
//! relevant to a (question, candidate) pair; the paragraph's dependency tree
//! and the lesson's diagram parse graphs become context graphs; a fusion GCN
//! encodes them; an attention-based scorer ranks the candidate answers; and a
//! self-supervised context-ranking stage pretrains the shared parameters.

pub mod corpus;
pub mod graphbuild;
pub mod harness;
pub mod numerics;
pub mod model;
pub mod retrieval;
pub mod seeding;
pub mod ssoc;
