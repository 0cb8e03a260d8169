//! Fusion GCN: single-layer propagation plus the two fusion stages over
//! textual and visual context features.

use crate::numerics::{Tape, Tensor};

/// One GCN layer: tanh(A · C · W).
pub fn gcn_layer(tape: &Tape, features: &Tensor, adjacency: &Tensor, weight: &Tensor) -> Tensor {
    assert_eq!(adjacency.rows(), adjacency.cols(), "adjacency must be square");
    assert_eq!(adjacency.cols(), features.rows(), "adjacency vs feature rows");
    assert_eq!(features.cols(), weight.rows(), "feature width vs weight rows");
    tape.tanh(&tape.matmul(&tape.matmul(adjacency, features), weight))
}

/// First fusion stage: attention of the visual features against the textual
/// features, concatenated feature-wise — output width is twice the input.
///
/// G = H_d · H_t^T; Z normalizes each textual column of G over the visual
/// axis (softmax by default, raw dot products when `z_softmax` is off);
/// output is [H_t ; Z^T H_d]. Without visual context the visual half is
/// zeros, keeping downstream widths fixed.
pub fn fuse_fgcn1(
    tape: &Tape,
    textual: &Tensor,
    visual: Option<&Tensor>,
    z_softmax: bool,
) -> Tensor {
    let d = textual.cols();
    match visual {
        None => {
            let zeros = Tensor::zeros(vec![textual.rows(), d]);
            tape.concat_cols(textual, &zeros)
        }
        Some(visual) => {
            assert_eq!(visual.cols(), d, "textual/visual feature width mismatch");
            let g = tape.matmul(visual, &tape.transpose(textual));
            let z = if z_softmax { tape.softmax(&g, 0) } else { g };
            let weighted = tape.matmul(&tape.transpose(&z), visual);
            tape.concat_cols(textual, &weighted)
        }
    }
}

/// Second fusion stage: one more propagation over the concatenated features,
/// mapping the doubled width back down: tanh(A_t · H1 · W_c).
pub fn fuse_fgcn2(tape: &Tape, fused: &Tensor, adjacency: &Tensor, weight: &Tensor) -> Tensor {
    gcn_layer(tape, fused, adjacency, weight)
}
