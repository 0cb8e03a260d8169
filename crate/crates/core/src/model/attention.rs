//! Bilinear attention over context graph nodes.

use crate::numerics::{Tape, Tensor};

/// Attentive read of context features `hc` ([K, dc]) by representation `h`
/// ([dh]) through bilinear matrix `m` ([dh, dc]):
/// g_k = h^T M hc_k, α = softmax(g), output = Σ α_k hc_k.
pub fn attend(tape: &Tape, h: &Tensor, hc: &Tensor, m: &Tensor) -> Tensor {
    assert_eq!(h.shape(), [m.rows()], "representation vs attention matrix");
    assert_eq!(m.cols(), hc.cols(), "attention matrix vs context width");
    let projected = tape.vec_mat(h, m);
    let logits = tape.mat_vec(hc, &projected);
    let alpha = tape.softmax(&logits, 0);
    tape.vec_mat(&alpha, hc)
}
