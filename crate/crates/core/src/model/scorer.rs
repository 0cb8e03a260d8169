//! Candidate scoring: one episode vector per candidate through the solving
//! LSTM and classifier, softmax over the candidate logits.

use std::collections::BTreeSet;

use crate::graphbuild::ContextGraph;
use crate::numerics::{lstm_sequence, Tape, Tensor};

use super::encoder::{adjacency_tensor, comprehend, encode_tokens, featurize_graph, ForwardCtx};
use super::fgcn::{fuse_fgcn1, fuse_fgcn2, gcn_layer};
use super::params::ModelParams;
use super::{attend, FusionVariant, ModelConfig, ModelError};

/// Everything the model needs to score one candidate: its tokens, the
/// context graphs retrieved for it, and the token set the occurrence flags
/// are computed against.
#[derive(Clone, Debug)]
pub struct CandidateInstance {
    pub tokens: Vec<String>,
    pub textual: ContextGraph,
    pub visual: Option<ContextGraph>,
    pub context_tokens: BTreeSet<String>,
    /// Paragraph the textual graph came from (for explanations).
    pub paragraph_id: String,
}

/// One scoring episode: a question and its per-candidate contexts.
#[derive(Clone, Debug)]
pub struct ScoringInstance {
    pub question_tokens: Vec<String>,
    pub candidates: Vec<CandidateInstance>,
    pub question_diagram: Option<ContextGraph>,
}

pub struct ScoreOutput {
    /// Softmax over candidate logits, shape [n].
    pub probs: Tensor,
    /// Pre-softmax logits, shape [n] (cross-entropy reads these).
    pub logits: Tensor,
}

/// Builds the fused context features H_c for one candidate.
fn fuse_contexts(
    tape: &Tape,
    ctx: &mut ForwardCtx,
    params: &ModelParams,
    config: &ModelConfig,
    candidate: &CandidateInstance,
) -> Tensor {
    let c_t = featurize_graph(tape, ctx, params, config, &candidate.textual);
    let a_t = adjacency_tensor(&candidate.textual);
    let h_t = gcn_layer(tape, &c_t, &a_t, &params.gcn_textual);
    match config.fusion_variant {
        FusionVariant::TextOnly => h_t,
        FusionVariant::Fgcn1 | FusionVariant::Fgcn2 => {
            let h_d = candidate.visual.as_ref().map(|g| {
                let c_d = featurize_graph(tape, ctx, params, config, g);
                let a_d = adjacency_tensor(g);
                gcn_layer(tape, &c_d, &a_d, &params.gcn_visual)
            });
            let fused = fuse_fgcn1(tape, &h_t, h_d.as_ref(), config.z_softmax);
            if config.fusion_variant == FusionVariant::Fgcn1 {
                fused
            } else {
                fuse_fgcn2(tape, &fused, &a_t, &params.gcn_combined)
            }
        }
    }
}

/// The solving-RNN input for one (question, candidate, contexts) episode:
/// [h_q ; h_a ; Att_q^c ; Att_a^c ; Att_q^qd ; Att_a^qd]. The diagram slots
/// are zeros when there is no question diagram, keeping the width fixed.
pub fn episode_vector(
    tape: &Tape,
    ctx: &mut ForwardCtx,
    params: &ModelParams,
    config: &ModelConfig,
    question_tokens: &[String],
    candidate: &CandidateInstance,
    question_diagram: Option<&ContextGraph>,
) -> Tensor {
    let enc_q = encode_tokens(
        tape,
        ctx,
        params,
        config,
        question_tokens,
        &candidate.context_tokens,
        config.use_q_flag,
    );
    let h_q = comprehend(tape, params, &enc_q);
    let enc_a = encode_tokens(
        tape,
        ctx,
        params,
        config,
        &candidate.tokens,
        &candidate.context_tokens,
        config.use_a_flag,
    );
    let h_a = comprehend(tape, params, &enc_a);

    let h_c = fuse_contexts(tape, ctx, params, config, candidate);
    let att_q = attend(tape, &h_q, &h_c, &params.attn_q_context);
    let att_a = attend(tape, &h_a, &h_c, &params.attn_a_context);

    let (att_q_d, att_a_d) = match question_diagram {
        Some(graph) => {
            let c_qd = featurize_graph(tape, ctx, params, config, graph);
            let a_qd = adjacency_tensor(graph);
            let h_qd = gcn_layer(tape, &c_qd, &a_qd, &params.gcn_question_diagram);
            (
                attend(tape, &h_q, &h_qd, &params.attn_q_diagram),
                attend(tape, &h_a, &h_qd, &params.attn_a_diagram),
            )
        }
        None => (Tensor::zeros(vec![config.gcn_dim]), Tensor::zeros(vec![config.gcn_dim])),
    };

    tape.concat_1d(&[&h_q, &h_a, &att_q, &att_a, &att_q_d, &att_a_d])
}

/// Runs episode vectors through the solving LSTM in order and maps each
/// step's hidden state to a scalar logit.
pub fn solve_episodes(tape: &Tape, params: &ModelParams, episodes: &[Tensor]) -> Tensor {
    let stacked = tape.stack_rows(episodes);
    let states = lstm_sequence(tape, &stacked, &params.rnn_s);
    let logits: Vec<Tensor> = states
        .iter()
        .map(|h| tape.add(&tape.vec_mat(h, &params.classifier_w), &params.classifier_b))
        .collect();
    let refs: Vec<&Tensor> = logits.iter().collect();
    tape.concat_1d(&refs)
}

/// Scores every candidate of an instance: probability distribution over the
/// ordered candidates (order matters to the solving LSTM).
pub fn score_candidates(
    tape: &Tape,
    ctx: &mut ForwardCtx,
    params: &ModelParams,
    config: &ModelConfig,
    instance: &ScoringInstance,
) -> Result<ScoreOutput, ModelError> {
    let n = instance.candidates.len();
    if !(2..=config.max_candidates).contains(&n) {
        return Err(ModelError::CandidateCountOutOfRange(n, config.max_candidates));
    }
    let episodes: Vec<Tensor> = instance
        .candidates
        .iter()
        .map(|candidate| {
            episode_vector(
                tape,
                ctx,
                params,
                config,
                &instance.question_tokens,
                candidate,
                instance.question_diagram.as_ref(),
            )
        })
        .collect();
    let logits = solve_episodes(tape, params, &episodes);
    let probs = tape.softmax(&logits, 0);
    Ok(ScoreOutput { probs, logits })
}
