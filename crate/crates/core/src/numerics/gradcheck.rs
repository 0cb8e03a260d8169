//! Central finite-difference gradient verification. The numeric side
//! re-evaluates the forward function at perturbed inputs, so it is
//! independent of the tape's backward formulas by construction.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::rnn::{bilstm_sequence, lstm_cell, lstm_sequence, LstmWeights};
use super::tape::Tape;
use super::tensor::Tensor;

/// Default central-difference step.
pub const DEFAULT_H: f64 = 1e-5;

/// Relative error between analytic and numeric gradients of a scalar-valued
/// function of `inputs`. Error is |a − n| / max(|a|, |n|, 1), i.e. relative
/// for large gradients and absolute near zero.
pub fn gradcheck<F>(f: F, inputs: &[Tensor], h: f64) -> f64
where
    F: Fn(&Tape, &[Tensor]) -> Tensor,
{
    let tape = Tape::new();
    let loss = f(&tape, inputs);
    assert!(loss.is_scalar(), "gradcheck needs a scalar loss, got {:?}", loss.shape());
    tape.backward(&loss).expect("scalar loss");
    let analytic: Vec<Vec<f64>> =
        inputs.iter().map(|t| t.cloned_grad().unwrap_or_else(|| vec![0.0; t.numel()])).collect();
    for t in inputs {
        t.zero_grad();
    }

    let mut worst: f64 = 0.0;
    for (ti, t) in inputs.iter().enumerate() {
        for e in 0..t.numel() {
            let orig = t.data()[e];
            t.data_mut()[e] = orig + h;
            let up = f(&Tape::inference(), inputs).item();
            t.data_mut()[e] = orig - h;
            let down = f(&Tape::inference(), inputs).item();
            t.data_mut()[e] = orig;
            let numeric = (up - down) / (2.0 * h);
            let a = analytic[ti][e];
            let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1.0);
            if err > worst {
                worst = err;
            }
        }
    }
    worst
}

pub fn random_tensor(rng: &mut ChaCha8Rng, shape: Vec<usize>, scale: f64) -> Tensor {
    let n: usize = shape.iter().product();
    let data = (0..n).map(|_| rng.gen_range(-scale..scale)).collect();
    Tensor::param(shape, data)
}

fn random_lstm(rng: &mut ChaCha8Rng, input_dim: usize, hidden: usize) -> [Tensor; 3] {
    [
        random_tensor(rng, vec![input_dim, 4 * hidden], 0.5),
        random_tensor(rng, vec![hidden, 4 * hidden], 0.5),
        random_tensor(rng, vec![4 * hidden], 0.5),
    ]
}

/// Finite-difference check of every tape op, one seed per call.
/// Returns (op name, max relative error) pairs.
pub fn op_gradcheck_suite(seed: u64) -> Vec<(&'static str, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut results = Vec::new();
    let mut run = |name: &'static str,
                   inputs: Vec<Tensor>,
                   f: Box<dyn Fn(&Tape, &[Tensor]) -> Tensor>| {
        results.push((name, gradcheck(|t, xs| f(t, xs), &inputs, DEFAULT_H)));
    };

    // every op is reduced to a scalar through sum (itself checked first)
    run(
        "sum",
        vec![random_tensor(&mut rng, vec![5], 1.0)],
        Box::new(|t, xs| t.sum(&xs[0])),
    );
    run(
        "matmul",
        vec![random_tensor(&mut rng, vec![3, 4], 1.0), random_tensor(&mut rng, vec![4, 2], 1.0)],
        Box::new(|t, xs| t.sum(&t.tanh(&t.matmul(&xs[0], &xs[1])))),
    );
    run(
        "transpose",
        vec![random_tensor(&mut rng, vec![3, 2], 1.0)],
        Box::new(|t, xs| t.sum(&t.tanh(&t.transpose(&xs[0])))),
    );
    run(
        "add",
        vec![random_tensor(&mut rng, vec![4], 1.0), random_tensor(&mut rng, vec![4], 1.0)],
        Box::new(|t, xs| t.sum(&t.tanh(&t.add(&xs[0], &xs[1])))),
    );
    run(
        "add_row_broadcast",
        vec![random_tensor(&mut rng, vec![3, 4], 1.0), random_tensor(&mut rng, vec![4], 1.0)],
        Box::new(|t, xs| t.sum(&t.tanh(&t.add_row_broadcast(&xs[0], &xs[1])))),
    );
    run(
        "mul",
        vec![random_tensor(&mut rng, vec![4], 1.0), random_tensor(&mut rng, vec![4], 1.0)],
        Box::new(|t, xs| t.sum(&t.mul(&xs[0], &xs[1]))),
    );
    run(
        "scale",
        vec![random_tensor(&mut rng, vec![4], 1.0)],
        Box::new(|t, xs| t.sum(&t.scale(&xs[0], -2.5))),
    );
    run(
        "tanh",
        vec![random_tensor(&mut rng, vec![6], 2.0)],
        Box::new(|t, xs| t.sum(&t.tanh(&xs[0]))),
    );
    run(
        "sigmoid",
        vec![random_tensor(&mut rng, vec![6], 2.0)],
        Box::new(|t, xs| t.sum(&t.sigmoid(&xs[0]))),
    );
    run(
        "softmax_vec",
        vec![random_tensor(&mut rng, vec![5], 2.0)],
        Box::new(|t, xs| t.sum(&t.mul(&t.softmax(&xs[0], 0), &xs[0]))),
    );
    run(
        "softmax_axis0",
        vec![random_tensor(&mut rng, vec![3, 4], 2.0)],
        Box::new(|t, xs| t.sum(&t.mul(&t.softmax(&xs[0], 0), &xs[0]))),
    );
    run(
        "softmax_axis1",
        vec![random_tensor(&mut rng, vec![3, 4], 2.0)],
        Box::new(|t, xs| t.sum(&t.mul(&t.softmax(&xs[0], 1), &xs[0]))),
    );
    run(
        "log_softmax",
        vec![random_tensor(&mut rng, vec![5], 2.0)],
        Box::new(|t, xs| t.sum(&t.log_softmax(&xs[0]))),
    );
    run(
        "cross_entropy",
        vec![random_tensor(&mut rng, vec![5], 2.0)],
        Box::new(|t, xs| t.cross_entropy(&xs[0], 2)),
    );
    run(
        "pick",
        vec![random_tensor(&mut rng, vec![5], 1.0)],
        Box::new(|t, xs| t.pick(&t.tanh(&xs[0]), 3)),
    );
    run(
        "vec_mat",
        vec![random_tensor(&mut rng, vec![3], 1.0), random_tensor(&mut rng, vec![3, 4], 1.0)],
        Box::new(|t, xs| t.sum(&t.tanh(&t.vec_mat(&xs[0], &xs[1])))),
    );
    run(
        "mat_vec",
        vec![random_tensor(&mut rng, vec![3, 4], 1.0), random_tensor(&mut rng, vec![4], 1.0)],
        Box::new(|t, xs| t.sum(&t.tanh(&t.mat_vec(&xs[0], &xs[1])))),
    );
    run(
        "slice_1d",
        vec![random_tensor(&mut rng, vec![6], 1.0)],
        Box::new(|t, xs| t.sum(&t.tanh(&t.slice_1d(&xs[0], 1, 4)))),
    );
    run(
        "row",
        vec![random_tensor(&mut rng, vec![3, 4], 1.0)],
        Box::new(|t, xs| t.sum(&t.tanh(&t.row(&xs[0], 1)))),
    );
    run(
        "slice_rows",
        vec![random_tensor(&mut rng, vec![4, 3], 1.0)],
        Box::new(|t, xs| t.sum(&t.tanh(&t.slice_rows(&xs[0], 1, 3)))),
    );
    run(
        "concat_1d",
        vec![random_tensor(&mut rng, vec![3], 1.0), random_tensor(&mut rng, vec![2], 1.0)],
        Box::new(|t, xs| t.sum(&t.tanh(&t.concat_1d(&[&xs[0], &xs[1]])))),
    );
    run(
        "concat_cols",
        vec![random_tensor(&mut rng, vec![3, 2], 1.0), random_tensor(&mut rng, vec![3, 4], 1.0)],
        Box::new(|t, xs| t.sum(&t.tanh(&t.concat_cols(&xs[0], &xs[1])))),
    );
    run(
        "stack_rows",
        vec![random_tensor(&mut rng, vec![4], 1.0), random_tensor(&mut rng, vec![4], 1.0)],
        Box::new(|t, xs| {
            let rows = vec![t.tanh(&xs[0]), t.sigmoid(&xs[1])];
            t.sum(&t.tanh(&t.stack_rows(&rows)))
        }),
    );
    run(
        "max_over_rows",
        vec![random_tensor(&mut rng, vec![5, 3], 1.0)],
        Box::new(|t, xs| t.sum(&t.tanh(&t.max_over_rows(&xs[0])))),
    );
    run(
        "reshape",
        vec![random_tensor(&mut rng, vec![2, 6], 1.0)],
        Box::new(|t, xs| t.sum(&t.tanh(&t.reshape(&xs[0], vec![3, 4])))),
    );
    run(
        "conv1d",
        vec![
            random_tensor(&mut rng, vec![7, 3], 1.0),
            random_tensor(&mut rng, vec![2 * 3, 4], 0.6),
            random_tensor(&mut rng, vec![4], 0.6),
        ],
        Box::new(|t, xs| t.sum(&t.tanh(&t.conv1d(&xs[0], &xs[1], &xs[2], 2)))),
    );
    run(
        "max_pool_over_time",
        vec![
            random_tensor(&mut rng, vec![7, 3], 1.0),
            random_tensor(&mut rng, vec![2 * 3, 4], 0.6),
            random_tensor(&mut rng, vec![4], 0.6),
        ],
        Box::new(|t, xs| {
            let conv = t.conv1d(&xs[0], &xs[1], &xs[2], 2);
            t.sum(&t.tanh(&t.max_over_rows(&conv)))
        }),
    );
    run(
        "dropout",
        vec![random_tensor(&mut rng, vec![8], 1.0)],
        Box::new(move |t, xs| t.sum(&t.tanh(&t.dropout(&xs[0], 0.5, 1234, true)))),
    );
    run(
        "embedding_lookup",
        vec![random_tensor(&mut rng, vec![5, 3], 1.0)],
        Box::new(|t, xs| t.sum(&t.tanh(&t.embedding_lookup(&xs[0], &[0, 2, 2, 4])))),
    );
    {
        let mut inputs = vec![
            random_tensor(&mut rng, vec![3], 1.0),
            random_tensor(&mut rng, vec![2], 0.5),
            random_tensor(&mut rng, vec![2], 0.5),
        ];
        inputs.extend(random_lstm(&mut rng, 3, 2));
        run(
            "lstm_cell",
            inputs,
            Box::new(|t, xs| {
                let w = LstmWeights { wx: xs[3].clone(), wh: xs[4].clone(), b: xs[5].clone() };
                let (h, c) = lstm_cell(t, &xs[0], &xs[1], &xs[2], &w);
                t.add(&t.sum(&t.tanh(&h)), &t.sum(&t.tanh(&c)))
            }),
        );
    }
    {
        let mut inputs = vec![random_tensor(&mut rng, vec![4, 3], 1.0)];
        inputs.extend(random_lstm(&mut rng, 3, 2));
        run(
            "lstm_sequence",
            inputs,
            Box::new(|t, xs| {
                let w = LstmWeights { wx: xs[1].clone(), wh: xs[2].clone(), b: xs[3].clone() };
                let states = lstm_sequence(t, &xs[0], &w);
                t.sum(&t.tanh(&t.stack_rows(&states)))
            }),
        );
    }
    {
        let mut inputs = vec![random_tensor(&mut rng, vec![4, 3], 1.0)];
        inputs.extend(random_lstm(&mut rng, 3, 2));
        inputs.extend(random_lstm(&mut rng, 3, 2));
        run(
            "bilstm_sequence",
            inputs,
            Box::new(|t, xs| {
                let fwd = LstmWeights { wx: xs[1].clone(), wh: xs[2].clone(), b: xs[3].clone() };
                let bwd = LstmWeights { wx: xs[4].clone(), wh: xs[5].clone(), b: xs[6].clone() };
                let states = bilstm_sequence(t, &xs[0], &fwd, &bwd);
                t.sum(&t.tanh(&t.stack_rows(&states)))
            }),
        );
    }

    results
}
