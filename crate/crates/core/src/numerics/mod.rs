//! Dense f64 tensor library with reverse-mode differentiation and Adam —
//! the substrate for every trainable operation in the model.
//!
//! Everything runs in f64: the sizes here are desk-scale, and the
//! finite-difference gradient oracle needs the precision headroom.

pub mod adam;
pub mod checkpoint;
pub mod gradcheck;
pub mod rnn;
pub mod tape;
pub mod tensor;

use thiserror::Error;

pub use adam::AdamState;
pub use rnn::{bilstm_sequence, lstm_cell, lstm_sequence, LstmWeights};
pub use tape::Tape;
pub use tensor::Tensor;

#[derive(Debug, Error)]
pub enum NumericsError {
    #[error("backward requires a scalar loss, got shape {shape:?}")]
    NonScalarLoss { shape: Vec<usize> },
}

/// Deterministic uniform(lo, hi) buffer for parameter initialization.
pub fn seeded_uniform(seed: u64, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(lo..hi)).collect()
}

/// Xavier-style bound for a weight matrix of the given fan.
pub fn xavier_bound(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}
