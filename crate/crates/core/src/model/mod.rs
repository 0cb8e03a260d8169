//! The scoring model: input encodings, the comprehending Bi-LSTM, the
//! fusion GCN over context graphs, bilinear attention, the solving LSTM
//! over candidate episodes, and the classifier head.

mod attention;
mod encoder;
mod fgcn;
mod params;
mod scorer;

pub use attention::attend;
pub use encoder::{char_cnn, comprehend, encode_tokens, featurize_graph, ForwardCtx};
pub use fgcn::{fuse_fgcn1, fuse_fgcn2, gcn_layer};
pub use params::{CharVocab, ModelParams, Vocab};
pub use scorer::{
    episode_vector, score_candidates, solve_episodes, CandidateInstance, ScoreOutput,
    ScoringInstance,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("candidate count {0} out of range 2..={1}")]
    CandidateCountOutOfRange(usize, usize),
    #[error("checkpoint is missing parameter {0}")]
    MissingParam(String),
    #[error("checkpoint parameter {name} has shape {got:?}, expected {expected:?}")]
    ParamShape { name: String, got: Vec<usize>, expected: Vec<usize> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FusionVariant {
    /// One-layer GCN over the textual graph only.
    TextOnly,
    /// Textual features concatenated with attention-weighted visual features.
    Fgcn1,
    /// One more propagation layer over the concatenated features.
    Fgcn2,
}

/// Model hyperparameters. The defaults are the reference configuration;
/// tests shrink them for speed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub word_dim: usize,
    pub char_emb_dim: usize,
    pub char_rep_dim: usize,
    pub char_kernel: usize,
    pub rnn_hidden: usize,
    pub gcn_dim: usize,
    pub max_seq_len: usize,
    pub max_candidates: usize,
    pub cap_textual: usize,
    pub cap_visual: usize,
    pub cap_question_diagram: usize,
    pub keep_rate: f64,
    pub fusion_variant: FusionVariant,
    /// Normalize the visual-against-textual attention matrix Z with a
    /// softmax over the visual axis (raw dot products when false).
    pub z_softmax: bool,
    /// Insert dependency relation labels as graph nodes.
    pub relation_nodes: bool,
    pub use_q_flag: bool,
    pub use_a_flag: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            word_dim: 300,
            char_emb_dim: 16,
            char_rep_dim: 32,
            char_kernel: 5,
            rnn_hidden: 200,
            gcn_dim: 200,
            max_seq_len: 30,
            max_candidates: 7,
            cap_textual: 75,
            cap_visual: 35,
            cap_question_diagram: 25,
            keep_rate: 0.5,
            fusion_variant: FusionVariant::Fgcn1,
            z_softmax: true,
            relation_nodes: false,
            use_q_flag: true,
            use_a_flag: true,
        }
    }
}

impl ModelConfig {
    /// A small configuration for fast deterministic tests.
    pub fn tiny() -> Self {
        ModelConfig {
            word_dim: 12,
            char_emb_dim: 4,
            char_rep_dim: 6,
            char_kernel: 3,
            rnn_hidden: 8,
            gcn_dim: 8,
            max_seq_len: 12,
            max_candidates: 7,
            cap_textual: 20,
            cap_visual: 10,
            cap_question_diagram: 10,
            keep_rate: 0.5,
            fusion_variant: FusionVariant::Fgcn1,
            z_softmax: true,
            relation_nodes: false,
            use_q_flag: true,
            use_a_flag: true,
        }
    }

    /// Per-token input width of the comprehending RNN:
    /// word embedding, char representation, occurrence flag.
    pub fn token_input_dim(&self) -> usize {
        self.word_dim + self.char_rep_dim + 1
    }

    /// Node feature width of context graphs: word embedding plus char
    /// representation (no occurrence flag).
    pub fn graph_feature_dim(&self) -> usize {
        self.word_dim + self.char_rep_dim
    }

    /// Width of h_q / h_a from the Bi-LSTM with step-wise max-pooling.
    pub fn sequence_rep_dim(&self) -> usize {
        2 * self.rnn_hidden
    }

    /// Width of the fused context features the attention reads.
    pub fn context_dim(&self) -> usize {
        match self.fusion_variant {
            FusionVariant::TextOnly | FusionVariant::Fgcn2 => self.gcn_dim,
            FusionVariant::Fgcn1 => 2 * self.gcn_dim,
        }
    }

    /// Width of one solving-RNN input episode: question and answer
    /// representations, their context attention, and the two
    /// question-diagram attention slots (zeroed for text questions).
    pub fn episode_dim(&self) -> usize {
        2 * self.sequence_rep_dim() + 2 * self.context_dim() + 2 * self.gcn_dim
    }
}
