//! Trainable parameters, vocabulary construction, and checkpoint mapping.

use std::collections::BTreeSet;

use crate::corpus::{Corpus, DiagramGraph, EmbeddingTable};
use crate::numerics::checkpoint::{Checkpoint, ParamRecord};
use crate::numerics::{seeded_uniform, xavier_bound, LstmWeights, Tensor};
use crate::seeding::derive_seed;

use super::{ModelConfig, ModelError};

pub const UNK_TOKEN: &str = "<unk>";

/// Token → row index of the word embedding table. Built deterministically
/// from the corpus (sorted token order) plus an unknown slot.
#[derive(Clone, Debug)]
pub struct Vocab {
    tokens: Vec<String>,
    unk: usize,
}

impl Vocab {
    pub fn from_corpus(corpus: &Corpus) -> Self {
        let mut set = BTreeSet::new();
        let add_diagram = |set: &mut BTreeSet<String>, d: &DiagramGraph| {
            for e in &d.entities {
                for t in &e.name_tokens {
                    set.insert(t.clone());
                }
            }
            // count-sentence tokens this diagram can produce
            set.insert(d.entity_count.to_string());
        };
        for lesson in &corpus.lessons {
            for p in &lesson.paragraphs {
                set.extend(p.tokens.iter().cloned());
            }
            for d in &lesson.diagrams {
                add_diagram(&mut set, d);
            }
            for q in &lesson.questions {
                set.extend(q.tokens.iter().cloned());
                for c in &q.candidates {
                    set.extend(c.tokens.iter().cloned());
                }
                if let Some(d) = &q.question_diagram {
                    add_diagram(&mut set, d);
                }
            }
        }
        for w in ["there", "are", "objects", "stages"] {
            set.insert(w.to_string());
        }
        set.insert(UNK_TOKEN.to_string());
        let tokens: Vec<String> = set.into_iter().collect();
        let unk = tokens.binary_search_by(|t| t.as_str().cmp(UNK_TOKEN)).expect("unk present");
        Vocab { tokens, unk }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> usize {
        self.tokens.binary_search_by(|t| t.as_str().cmp(token)).unwrap_or(self.unk)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }
}

/// Character → row index. Index 0 is padding, index 1 unknown.
#[derive(Clone, Debug)]
pub struct CharVocab {
    chars: Vec<char>,
}

pub const CHAR_PAD: usize = 0;
pub const CHAR_UNK: usize = 1;

impl CharVocab {
    pub fn from_vocab(vocab: &Vocab) -> Self {
        let mut set: BTreeSet<char> = vocab.tokens().iter().flat_map(|t| t.chars()).collect();
        set.insert(' '); // joined multi-token diagram names
        CharVocab { chars: set.into_iter().collect() }
    }

    pub fn len(&self) -> usize {
        self.chars.len() + 2
    }

    pub fn id(&self, c: char) -> usize {
        self.chars.binary_search(&c).map(|i| i + 2).unwrap_or(CHAR_UNK)
    }
}

#[derive(Clone)]
pub struct ModelParams {
    pub vocab: Vocab,
    pub char_vocab: CharVocab,
    /// [vocab, word_dim] — trainable, initialized from the embedding table.
    pub word_emb: Tensor,
    /// [chars, char_emb_dim]
    pub char_emb: Tensor,
    /// [char_kernel * char_emb_dim, char_rep_dim]
    pub char_conv_kernel: Tensor,
    pub char_conv_bias: Tensor,
    /// GCN weights per graph role.
    pub gcn_textual: Tensor,
    pub gcn_visual: Tensor,
    /// f-GCN2 combining weight: [2*gcn_dim, gcn_dim].
    pub gcn_combined: Tensor,
    pub gcn_question_diagram: Tensor,
    /// Bilinear attention matrices per pairing.
    pub attn_q_context: Tensor,
    pub attn_a_context: Tensor,
    pub attn_q_diagram: Tensor,
    pub attn_a_diagram: Tensor,
    /// Comprehending Bi-LSTM, weights shared between question and answers.
    pub rnn_c_fwd: LstmWeights,
    pub rnn_c_bwd: LstmWeights,
    /// Solving LSTM over candidate episodes.
    pub rnn_s: LstmWeights,
    /// Classifier: one linear layer hidden → scalar logit per step.
    pub classifier_w: Tensor,
    pub classifier_b: Tensor,
}

fn init(name: &str, seed: u64, shape: Vec<usize>, bound: f64) -> Tensor {
    let n = shape.iter().product();
    let s = derive_seed(&[b"param-init", &seed.to_le_bytes(), name.as_bytes()]);
    Tensor::param(shape, seeded_uniform(s, n, -bound, bound))
}

fn init_lstm(name: &str, seed: u64, input_dim: usize, hidden: usize) -> LstmWeights {
    let bx = xavier_bound(input_dim, 4 * hidden);
    let bh = xavier_bound(hidden, 4 * hidden);
    LstmWeights {
        wx: init(&format!("{name}_wx"), seed, vec![input_dim, 4 * hidden], bx),
        wh: init(&format!("{name}_wh"), seed, vec![hidden, 4 * hidden], bh),
        b: Tensor::param(vec![4 * hidden], vec![0.0; 4 * hidden]),
    }
}

impl ModelParams {
    /// Fresh parameters: word embeddings from `table` (OOV rows are the
    /// table's deterministic per-token vectors), everything else
    /// Xavier-uniform seeded per parameter name.
    pub fn new(config: &ModelConfig, corpus: &Corpus, table: &EmbeddingTable, seed: u64) -> Self {
        assert_eq!(table.dim(), config.word_dim, "embedding table dim vs config word_dim");
        let vocab = Vocab::from_corpus(corpus);
        let char_vocab = CharVocab::from_vocab(&vocab);

        let mut emb = Vec::with_capacity(vocab.len() * config.word_dim);
        for token in vocab.tokens() {
            emb.extend(table.lookup(token));
        }
        let word_emb = Tensor::param(vec![vocab.len(), config.word_dim], emb);

        let d = config.gcn_dim;
        let feat = config.graph_feature_dim();
        let rep = config.sequence_rep_dim();
        let dc = config.context_dim();
        let g = |name: &str, shape: Vec<usize>| {
            let bound = xavier_bound(shape[0], shape[shape.len() - 1]);
            init(name, seed, shape, bound)
        };
        ModelParams {
            word_emb,
            char_emb: init(
                "char_emb",
                seed,
                vec![char_vocab.len(), config.char_emb_dim],
                0.1,
            ),
            char_conv_kernel: g(
                "char_conv_kernel",
                vec![config.char_kernel * config.char_emb_dim, config.char_rep_dim],
            ),
            char_conv_bias: Tensor::param(vec![config.char_rep_dim], vec![0.0; config.char_rep_dim]),
            gcn_textual: g("gcn_textual", vec![feat, d]),
            gcn_visual: g("gcn_visual", vec![feat, d]),
            gcn_combined: g("gcn_combined", vec![2 * d, d]),
            gcn_question_diagram: g("gcn_question_diagram", vec![feat, d]),
            attn_q_context: g("attn_q_context", vec![rep, dc]),
            attn_a_context: g("attn_a_context", vec![rep, dc]),
            attn_q_diagram: g("attn_q_diagram", vec![rep, d]),
            attn_a_diagram: g("attn_a_diagram", vec![rep, d]),
            rnn_c_fwd: init_lstm("rnn_c_fwd", seed, config.token_input_dim(), config.rnn_hidden),
            rnn_c_bwd: init_lstm("rnn_c_bwd", seed, config.token_input_dim(), config.rnn_hidden),
            rnn_s: init_lstm("rnn_s", seed, config.episode_dim(), config.rnn_hidden),
            classifier_w: g("classifier_w", vec![config.rnn_hidden, 1]),
            classifier_b: Tensor::param(vec![1], vec![0.0]),
            vocab,
            char_vocab,
        }
    }

    /// All-zero weights (vocabulary still built): the untrained baseline in
    /// contract tests — equal logits, uniform output distribution.
    pub fn zeros(config: &ModelConfig, corpus: &Corpus) -> Self {
        let table = EmbeddingTable::random(config.word_dim, 0);
        let params = Self::new(config, corpus, &table, 0);
        for (_, t) in params.named_tensors() {
            for v in t.data_mut().iter_mut() {
                *v = 0.0;
            }
        }
        params
    }

    /// Deterministic (name, tensor) registry: optimizer slot order and
    /// checkpoint layout both come from this.
    pub fn named_tensors(&self) -> Vec<(&'static str, Tensor)> {
        vec![
            ("word_emb", self.word_emb.clone()),
            ("char_emb", self.char_emb.clone()),
            ("char_conv_kernel", self.char_conv_kernel.clone()),
            ("char_conv_bias", self.char_conv_bias.clone()),
            ("gcn_textual", self.gcn_textual.clone()),
            ("gcn_visual", self.gcn_visual.clone()),
            ("gcn_combined", self.gcn_combined.clone()),
            ("gcn_question_diagram", self.gcn_question_diagram.clone()),
            ("attn_q_context", self.attn_q_context.clone()),
            ("attn_a_context", self.attn_a_context.clone()),
            ("attn_q_diagram", self.attn_q_diagram.clone()),
            ("attn_a_diagram", self.attn_a_diagram.clone()),
            ("rnn_c_fwd_wx", self.rnn_c_fwd.wx.clone()),
            ("rnn_c_fwd_wh", self.rnn_c_fwd.wh.clone()),
            ("rnn_c_fwd_b", self.rnn_c_fwd.b.clone()),
            ("rnn_c_bwd_wx", self.rnn_c_bwd.wx.clone()),
            ("rnn_c_bwd_wh", self.rnn_c_bwd.wh.clone()),
            ("rnn_c_bwd_b", self.rnn_c_bwd.b.clone()),
            ("rnn_s_wx", self.rnn_s.wx.clone()),
            ("rnn_s_wh", self.rnn_s.wh.clone()),
            ("rnn_s_b", self.rnn_s.b.clone()),
            ("classifier_w", self.classifier_w.clone()),
            ("classifier_b", self.classifier_b.clone()),
        ]
    }

    pub fn tensors(&self) -> Vec<Tensor> {
        self.named_tensors().into_iter().map(|(_, t)| t).collect()
    }

    pub fn zero_grads(&self) {
        for t in self.tensors() {
            t.zero_grad();
        }
    }

    pub fn to_records(&self) -> Vec<ParamRecord> {
        self.named_tensors()
            .into_iter()
            .map(|(name, t)| ParamRecord {
                name: name.to_string(),
                shape: t.shape().to_vec(),
                data: t.to_vec(),
            })
            .collect()
    }

    /// Overwrites parameter values from a checkpoint. Shapes must match;
    /// the vocabulary must come from the same corpus the checkpoint was
    /// trained on.
    pub fn load_records(&self, ckpt: &Checkpoint) -> Result<(), ModelError> {
        for (name, tensor) in self.named_tensors() {
            let rec = ckpt
                .params
                .iter()
                .find(|r| r.name == name)
                .ok_or_else(|| ModelError::MissingParam(name.to_string()))?;
            if rec.shape != tensor.shape() {
                return Err(ModelError::ParamShape {
                    name: name.to_string(),
                    got: rec.shape.clone(),
                    expected: tensor.shape().to_vec(),
                });
            }
            tensor.data_mut().copy_from_slice(&rec.data);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate_synthetic_corpus, SynthSpec};

    fn small_corpus() -> Corpus {
        generate_synthetic_corpus(
            &SynthSpec {
                vocab_size: 40,
                lessons: 2,
                paragraphs_per_lesson: 2,
                questions_per_lesson: 3,
                ..SynthSpec::default()
            },
            0,
        )
        .unwrap()
    }

    #[test]
    fn vocab_lookup_is_total_with_unk_fallback() {
        let corpus = small_corpus();
        let vocab = Vocab::from_corpus(&corpus);
        assert_eq!(vocab.id(UNK_TOKEN), vocab.id("never-seen-token"));
        let some_token = &corpus.lessons[0].paragraphs[0].tokens[0];
        assert_ne!(vocab.id(some_token), vocab.id(UNK_TOKEN));
    }

    #[test]
    fn init_is_deterministic_per_seed() {
        let corpus = small_corpus();
        let config = ModelConfig::tiny();
        let table = EmbeddingTable::random(config.word_dim, 5);
        let a = ModelParams::new(&config, &corpus, &table, 3);
        let b = ModelParams::new(&config, &corpus, &table, 3);
        let c = ModelParams::new(&config, &corpus, &table, 4);
        for ((_, ta), (_, tb)) in a.named_tensors().iter().zip(b.named_tensors()) {
            assert_eq!(ta.to_vec(), tb.to_vec());
        }
        let differs = a
            .named_tensors()
            .iter()
            .zip(c.named_tensors())
            .any(|((_, ta), (_, tc))| ta.to_vec() != tc.to_vec());
        assert!(differs);
    }

    #[test]
    fn checkpoint_records_round_trip() {
        let corpus = small_corpus();
        let config = ModelConfig::tiny();
        let table = EmbeddingTable::random(config.word_dim, 5);
        let a = ModelParams::new(&config, &corpus, &table, 3);
        let ckpt = Checkpoint { params: a.to_records(), optimizer: None };
        let b = ModelParams::zeros(&config, &corpus);
        b.load_records(&ckpt).unwrap();
        for ((_, ta), (_, tb)) in a.named_tensors().iter().zip(b.named_tensors()) {
            assert_eq!(ta.to_vec(), tb.to_vec());
        }
    }
}
