//! LSTM cells and sequence encoders composed from tape primitives, so the
//! backward pass comes from the tape rather than hand-derived recurrences.

use super::tape::Tape;
use super::tensor::Tensor;

/// Weights of one LSTM direction. Gate order along the 4H axis is
/// input, forget, candidate, output.
#[derive(Clone)]
pub struct LstmWeights {
    /// [input_dim, 4*hidden]
    pub wx: Tensor,
    /// [hidden, 4*hidden]
    pub wh: Tensor,
    /// [4*hidden]
    pub b: Tensor,
}

impl LstmWeights {
    pub fn hidden_dim(&self) -> usize {
        self.wh.rows()
    }

    pub fn input_dim(&self) -> usize {
        self.wx.rows()
    }

    pub fn tensors(&self) -> [&Tensor; 3] {
        [&self.wx, &self.wh, &self.b]
    }
}

/// One step: sigmoid gates, tanh candidate and output nonlinearity.
pub fn lstm_cell(
    tape: &Tape,
    x: &Tensor,
    h_prev: &Tensor,
    c_prev: &Tensor,
    w: &LstmWeights,
) -> (Tensor, Tensor) {
    let hidden = w.hidden_dim();
    assert_eq!(x.shape(), [w.input_dim()], "lstm_cell input dim");
    assert_eq!(h_prev.shape(), [hidden], "lstm_cell hidden dim");
    assert_eq!(c_prev.shape(), [hidden], "lstm_cell cell dim");
    assert_eq!(w.wx.cols(), 4 * hidden, "lstm_cell gate width");

    let gates = tape.add(&tape.add(&tape.vec_mat(x, &w.wx), &tape.vec_mat(h_prev, &w.wh)), &w.b);
    let i = tape.sigmoid(&tape.slice_1d(&gates, 0, hidden));
    let f = tape.sigmoid(&tape.slice_1d(&gates, hidden, 2 * hidden));
    let g = tape.tanh(&tape.slice_1d(&gates, 2 * hidden, 3 * hidden));
    let o = tape.sigmoid(&tape.slice_1d(&gates, 3 * hidden, 4 * hidden));
    let c = tape.add(&tape.mul(&f, c_prev), &tape.mul(&i, &g));
    let h = tape.mul(&o, &tape.tanh(&c));
    (h, c)
}

/// Runs an LSTM over the rows of `inputs` ([L, input_dim]) from zero state
/// and returns the hidden state of every step.
pub fn lstm_sequence(tape: &Tape, inputs: &Tensor, w: &LstmWeights) -> Vec<Tensor> {
    let hidden = w.hidden_dim();
    let mut h = Tensor::zeros(vec![hidden]);
    let mut c = Tensor::zeros(vec![hidden]);
    let mut states = Vec::with_capacity(inputs.rows());
    for t in 0..inputs.rows() {
        let x = tape.row(inputs, t);
        let (nh, nc) = lstm_cell(tape, &x, &h, &c, w);
        h = nh;
        c = nc;
        states.push(h.clone());
    }
    states
}

/// Bi-LSTM over [L, input_dim]: a forward pass and a pass over the reversed
/// sequence, concatenated per step into [2*hidden] vectors. The caller hands
/// in exactly the valid prefix, so only it is reversed.
pub fn bilstm_sequence(
    tape: &Tape,
    inputs: &Tensor,
    fwd: &LstmWeights,
    bwd: &LstmWeights,
) -> Vec<Tensor> {
    let steps = inputs.rows();
    let forward = lstm_sequence(tape, inputs, fwd);

    let hidden = bwd.hidden_dim();
    let mut h = Tensor::zeros(vec![hidden]);
    let mut c = Tensor::zeros(vec![hidden]);
    let mut backward = vec![None; steps];
    for t in (0..steps).rev() {
        let x = tape.row(inputs, t);
        let (nh, nc) = lstm_cell(tape, &x, &h, &c, bwd);
        h = nh;
        c = nc;
        backward[t] = Some(h.clone());
    }

    forward
        .iter()
        .zip(backward)
        .map(|(f, b)| tape.concat_1d(&[f, &b.expect("all steps visited")]))
        .collect()
}
