//! Token and graph featurization plus the comprehending encoder.

use std::collections::BTreeSet;

use crate::graphbuild::ContextGraph;
use crate::numerics::{bilstm_sequence, Tape, Tensor};
use crate::seeding::derive_seed;

use super::params::{ModelParams, CHAR_PAD};
use super::ModelConfig;

/// Per-pass state: train/eval mode and the dropout seed stream. Each dropout
/// site consumes one derived seed, so a fixed (base_seed, call order) fixes
/// every mask.
pub struct ForwardCtx {
    pub train: bool,
    base_seed: u64,
    counter: u64,
}

impl ForwardCtx {
    pub fn train(base_seed: u64) -> Self {
        ForwardCtx { train: true, base_seed, counter: 0 }
    }

    pub fn eval() -> Self {
        ForwardCtx { train: false, base_seed: 0, counter: 0 }
    }

    pub fn next_seed(&mut self) -> u64 {
        let s = derive_seed(&[b"dropout", &self.base_seed.to_le_bytes(), &self.counter.to_le_bytes()]);
        self.counter += 1;
        s
    }
}

/// Character-level representation of one token: 16d char embeddings through
/// a width-5 convolution and max-pooling over time.
pub fn char_cnn(tape: &Tape, params: &ModelParams, config: &ModelConfig, token: &str) -> Tensor {
    let mut ids: Vec<usize> = token.chars().map(|c| params.char_vocab.id(c)).collect();
    while ids.len() < config.char_kernel {
        ids.push(CHAR_PAD);
    }
    let emb = tape.embedding_lookup(&params.char_emb, &ids);
    let conv = tape.conv1d(&emb, &params.char_conv_kernel, &params.char_conv_bias, config.char_kernel);
    tape.max_over_rows(&conv)
}

/// Eq.-style input rows for a token sequence: [word emb ; char rep ; flag],
/// flag = 1 iff the token occurs in `context_tokens`. Sequences are truncated
/// to `max_seq_len`; dropout applies to the word-embedding block only.
pub fn encode_tokens(
    tape: &Tape,
    ctx: &mut ForwardCtx,
    params: &ModelParams,
    config: &ModelConfig,
    tokens: &[String],
    context_tokens: &BTreeSet<String>,
    flag_enabled: bool,
) -> Tensor {
    assert!(!tokens.is_empty(), "cannot encode an empty token sequence");
    let tokens = &tokens[..tokens.len().min(config.max_seq_len)];
    let ids: Vec<usize> = tokens.iter().map(|t| params.vocab.id(t)).collect();
    let mut words = tape.embedding_lookup(&params.word_emb, &ids);
    if ctx.train {
        words = tape.dropout(&words, config.keep_rate, ctx.next_seed(), true);
    }
    let chars: Vec<Tensor> = tokens.iter().map(|t| char_cnn(tape, params, config, t)).collect();
    let chars = tape.stack_rows(&chars);
    let flags: Vec<f64> = tokens
        .iter()
        .map(|t| if flag_enabled && context_tokens.contains(t) { 1.0 } else { 0.0 })
        .collect();
    let flags = Tensor::constant(vec![tokens.len(), 1], flags);
    tape.concat_cols(&tape.concat_cols(&words, &chars), &flags)
}

/// Bi-LSTM over the encoded sequence, then element-wise max over steps:
/// the fixed-size question/answer representation h_q / h_a.
pub fn comprehend(tape: &Tape, params: &ModelParams, encoded: &Tensor) -> Tensor {
    let states = bilstm_sequence(tape, encoded, &params.rnn_c_fwd, &params.rnn_c_bwd);
    tape.max_over_rows(&tape.stack_rows(&states))
}

/// Node feature matrix of a context graph: per node, the mean word embedding
/// of its (whitespace-split) label tokens concatenated with the char
/// representation of the whole label. Dropout on the word block only.
pub fn featurize_graph(
    tape: &Tape,
    ctx: &mut ForwardCtx,
    params: &ModelParams,
    config: &ModelConfig,
    graph: &ContextGraph,
) -> Tensor {
    let word_rows: Vec<Tensor> = graph
        .node_tokens
        .iter()
        .map(|label| {
            let ids: Vec<usize> =
                label.split_whitespace().map(|t| params.vocab.id(t)).collect();
            let ids = if ids.is_empty() { vec![params.vocab.id(label)] } else { ids };
            let emb = tape.embedding_lookup(&params.word_emb, &ids);
            let weights =
                Tensor::constant(vec![ids.len()], vec![1.0 / ids.len() as f64; ids.len()]);
            tape.vec_mat(&weights, &emb)
        })
        .collect();
    let mut words = tape.stack_rows(&word_rows);
    if ctx.train {
        words = tape.dropout(&words, config.keep_rate, ctx.next_seed(), true);
    }
    let chars: Vec<Tensor> =
        graph.node_tokens.iter().map(|label| char_cnn(tape, params, config, label)).collect();
    tape.concat_cols(&words, &tape.stack_rows(&chars))
}

/// The graph's normalized adjacency as a constant tensor.
pub fn adjacency_tensor(graph: &ContextGraph) -> Tensor {
    let k = graph.node_count();
    Tensor::constant(vec![k, k], graph.adjacency.clone())
}
