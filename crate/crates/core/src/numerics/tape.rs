//! Reverse-mode differentiation tape.
//!
//! Ops are methods on [`Tape`]. Each op computes its output eagerly and, when
//! gradients can flow, records a backward closure over `Rc` handles to its
//! operands. Recording order equals topological order, so [`Tape::backward`]
//! replays the closures in reverse and the chain rule falls out.
//!
//! Shapes are validated with panics (they are programmer errors); the one
//! caller-facing contract error, a non-scalar loss, is a `Result`.

use std::cell::RefCell;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::tensor::Tensor;
use super::NumericsError;

type BackwardFn = Box<dyn Fn()>;

pub struct Tape {
    ops: RefCell<Vec<BackwardFn>>,
    enabled: bool,
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

impl Tape {
    /// Recording tape for training passes.
    pub fn new() -> Self {
        Tape { ops: RefCell::new(Vec::new()), enabled: true }
    }

    /// Non-recording tape for evaluation; outputs never require grad.
    pub fn inference() -> Self {
        Tape { ops: RefCell::new(Vec::new()), enabled: false }
    }

    pub fn len(&self) -> usize {
        self.ops.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.borrow().is_empty()
    }

    fn flows(&self, inputs: &[&Tensor]) -> bool {
        self.enabled && inputs.iter().any(|t| t.requires_grad())
    }

    fn record(&self, f: impl Fn() + 'static) {
        self.ops.borrow_mut().push(Box::new(f));
    }

    /// Populates gradients of everything the scalar `loss` depends on.
    /// Gradients accumulate; the caller zeroes them between steps.
    pub fn backward(&self, loss: &Tensor) -> Result<(), NumericsError> {
        if !loss.is_scalar() {
            return Err(NumericsError::NonScalarLoss { shape: loss.shape().to_vec() });
        }
        loss.accumulate_grad(&[1.0]);
        for op in self.ops.borrow().iter().rev() {
            op();
        }
        Ok(())
    }

    // ── primitives ──────────────────────────────────────────────────

    /// C = A·B for A: [m,k], B: [k,n].
    pub fn matmul(&self, a: &Tensor, b: &Tensor) -> Tensor {
        let (m, k) = (a.rows(), a.cols());
        let (k2, n) = (b.rows(), b.cols());
        assert_eq!(k, k2, "matmul inner dims {k} vs {k2}");
        let mut out = vec![0.0; m * n];
        {
            let ad = a.data();
            let bd = b.data();
            for i in 0..m {
                for p in 0..k {
                    let av = ad[i * k + p];
                    if av == 0.0 {
                        continue;
                    }
                    for j in 0..n {
                        out[i * n + j] += av * bd[p * n + j];
                    }
                }
            }
        }
        let out = Tensor::new(vec![m, n], out, self.flows(&[a, b]));
        if out.requires_grad() {
            let (a, b, o) = (a.clone(), b.clone(), out.clone());
            self.record(move || {
                let Some(g) = o.cloned_grad() else { return };
                if a.requires_grad() {
                    // dA = G·B^T
                    let bd = b.data();
                    let mut da = vec![0.0; m * k];
                    for i in 0..m {
                        for j in 0..n {
                            let gv = g[i * n + j];
                            if gv == 0.0 {
                                continue;
                            }
                            for p in 0..k {
                                da[i * k + p] += gv * bd[p * n + j];
                            }
                        }
                    }
                    drop(bd);
                    a.accumulate_grad(&da);
                }
                if b.requires_grad() {
                    // dB = A^T·G
                    let ad = a.data();
                    let mut db = vec![0.0; k * n];
                    for i in 0..m {
                        for p in 0..k {
                            let av = ad[i * k + p];
                            if av == 0.0 {
                                continue;
                            }
                            for j in 0..n {
                                db[p * n + j] += av * g[i * n + j];
                            }
                        }
                    }
                    drop(ad);
                    b.accumulate_grad(&db);
                }
            });
        }
        out
    }

    pub fn transpose(&self, a: &Tensor) -> Tensor {
        let (m, n) = (a.rows(), a.cols());
        let ad = a.data();
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                out[j * m + i] = ad[i * n + j];
            }
        }
        drop(ad);
        let out = Tensor::new(vec![n, m], out, self.flows(&[a]));
        if out.requires_grad() {
            let (a, o) = (a.clone(), out.clone());
            self.record(move || {
                let Some(g) = o.cloned_grad() else { return };
                let mut da = vec![0.0; m * n];
                for i in 0..m {
                    for j in 0..n {
                        da[i * n + j] = g[j * m + i];
                    }
                }
                a.accumulate_grad(&da);
            });
        }
        out
    }

    /// Element-wise sum of two same-shape tensors.
    pub fn add(&self, a: &Tensor, b: &Tensor) -> Tensor {
        assert_eq!(a.shape(), b.shape(), "add shape mismatch");
        let out: Vec<f64> = a.data().iter().zip(b.data().iter()).map(|(x, y)| x + y).collect();
        let out = Tensor::new(a.shape().to_vec(), out, self.flows(&[a, b]));
        if out.requires_grad() {
            let (a, b, o) = (a.clone(), b.clone(), out.clone());
            self.record(move || {
                let Some(g) = o.cloned_grad() else { return };
                if a.requires_grad() {
                    a.accumulate_grad(&g);
                }
                if b.requires_grad() {
                    b.accumulate_grad(&g);
                }
            });
        }
        out
    }

    /// M + v with v broadcast over the rows of M.
    pub fn add_row_broadcast(&self, m: &Tensor, v: &Tensor) -> Tensor {
        let (r, c) = (m.rows(), m.cols());
        assert_eq!(v.shape(), [c], "row broadcast expects v of length {c}");
        let md = m.data();
        let vd = v.data();
        let mut out = vec![0.0; r * c];
        for i in 0..r {
            for j in 0..c {
                out[i * c + j] = md[i * c + j] + vd[j];
            }
        }
        drop(md);
        drop(vd);
        let out = Tensor::new(vec![r, c], out, self.flows(&[m, v]));
        if out.requires_grad() {
            let (m, v, o) = (m.clone(), v.clone(), out.clone());
            self.record(move || {
                let Some(g) = o.cloned_grad() else { return };
                if m.requires_grad() {
                    m.accumulate_grad(&g);
                }
                if v.requires_grad() {
                    let mut dv = vec![0.0; c];
                    for i in 0..r {
                        for j in 0..c {
                            dv[j] += g[i * c + j];
                        }
                    }
                    v.accumulate_grad(&dv);
                }
            });
        }
        out
    }

    pub fn mul(&self, a: &Tensor, b: &Tensor) -> Tensor {
        assert_eq!(a.shape(), b.shape(), "mul shape mismatch");
        let out: Vec<f64> = a.data().iter().zip(b.data().iter()).map(|(x, y)| x * y).collect();
        let out = Tensor::new(a.shape().to_vec(), out, self.flows(&[a, b]));
        if out.requires_grad() {
            let (a, b, o) = (a.clone(), b.clone(), out.clone());
            self.record(move || {
                let Some(g) = o.cloned_grad() else { return };
                if a.requires_grad() {
                    let bd = b.data();
                    let da: Vec<f64> = g.iter().zip(bd.iter()).map(|(g, y)| g * y).collect();
                    drop(bd);
                    a.accumulate_grad(&da);
                }
                if b.requires_grad() {
                    let ad = a.data();
                    let db: Vec<f64> = g.iter().zip(ad.iter()).map(|(g, x)| g * x).collect();
                    drop(ad);
                    b.accumulate_grad(&db);
                }
            });
        }
        out
    }

    pub fn scale(&self, a: &Tensor, c: f64) -> Tensor {
        let out: Vec<f64> = a.data().iter().map(|x| x * c).collect();
        let out = Tensor::new(a.shape().to_vec(), out, self.flows(&[a]));
        if out.requires_grad() {
            let (a, o) = (a.clone(), out.clone());
            self.record(move || {
                let Some(g) = o.cloned_grad() else { return };
                let da: Vec<f64> = g.iter().map(|g| g * c).collect();
                a.accumulate_grad(&da);
            });
        }
        out
    }

    /// Sum of all elements, as a scalar.
    pub fn sum(&self, a: &Tensor) -> Tensor {
        let s: f64 = a.data().iter().sum();
        let out = Tensor::new(vec![1], vec![s], self.flows(&[a]));
        if out.requires_grad() {
            let (a, o) = (a.clone(), out.clone());
            self.record(move || {
                let Some(g) = o.cloned_grad() else { return };
                a.accumulate_grad(&vec![g[0]; a.numel()]);
            });
        }
        out
    }

    pub fn tanh(&self, a: &Tensor) -> Tensor {
        let out: Vec<f64> = a.data().iter().map(|x| x.tanh()).collect();
        let out = Tensor::new(a.shape().to_vec(), out, self.flows(&[a]));
        if out.requires_grad() {
            let (a, o) = (a.clone(), out.clone());
            self.record(move || {
                let Some(g) = o.cloned_grad() else { return };
                let yd = o.data();
                let da: Vec<f64> = g.iter().zip(yd.iter()).map(|(g, y)| g * (1.0 - y * y)).collect();
                drop(yd);
                a.accumulate_grad(&da);
            });
        }
        out
    }

    pub fn sigmoid(&self, a: &Tensor) -> Tensor {
        let out: Vec<f64> = a.data().iter().map(|x| 1.0 / (1.0 + (-x).exp())).collect();
        let out = Tensor::new(a.shape().to_vec(), out, self.flows(&[a]));
        if out.requires_grad() {
            let (a, o) = (a.clone(), out.clone());
            self.record(move || {
                let Some(g) = o.cloned_grad() else { return };
                let yd = o.data();
                let da: Vec<f64> = g.iter().zip(yd.iter()).map(|(g, y)| g * y * (1.0 - y)).collect();
                drop(yd);
                a.accumulate_grad(&da);
            });
        }
        out
    }

    /// Softmax over `axis` (0 or 1) of a 1-D or 2-D tensor. For 1-D inputs
    /// the only valid axis is 0.
    pub fn softmax(&self, a: &Tensor, axis: usize) -> Tensor {
        let (groups, stride, len) = softmax_layout(a.shape(), axis);
        let ad = a.data();
        let mut out = vec![0.0; ad.len()];
        for g in 0..groups {
            let base = group_base(g, stride, len);
            let idx = |i: usize| base + i * stride;
            let max = (0..len).map(|i| ad[idx(i)]).fold(f64::NEG_INFINITY, f64::max);
            let mut denom = 0.0;
            for i in 0..len {
                let e = (ad[idx(i)] - max).exp();
                out[idx(i)] = e;
                denom += e;
            }
            for i in 0..len {
                out[idx(i)] /= denom;
            }
        }
        drop(ad);
        let out = Tensor::new(a.shape().to_vec(), out, self.flows(&[a]));
        if out.requires_grad() {
            let (a, o) = (a.clone(), out.clone());
            self.record(move || {
                let Some(g) = o.cloned_grad() else { return };
                let yd = o.data();
                let mut da = vec![0.0; g.len()];
                for grp in 0..groups {
                    let base = group_base(grp, stride, len);
                    let idx = |i: usize| base + i * stride;
                    let dot: f64 = (0..len).map(|i| g[idx(i)] * yd[idx(i)]).sum();
                    for i in 0..len {
                        da[idx(i)] = yd[idx(i)] * (g[idx(i)] - dot);
                    }
                }
                drop(yd);
                a.accumulate_grad(&da);
            });
        }
        out
    }

    /// Numerically stable log-softmax of a 1-D tensor.
    pub fn log_softmax(&self, a: &Tensor) -> Tensor {
        assert_eq!(a.shape().len(), 1, "log_softmax expects a vector");
        let ad = a.data();
        let max = ad.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + ad.iter().map(|x| (x - max).exp()).sum::<f64>().ln();
        let out: Vec<f64> = ad.iter().map(|x| x - lse).collect();
        drop(ad);
        let out = Tensor::new(a.shape().to_vec(), out, self.flows(&[a]));
        if out.requires_grad() {
            let (a, o) = (a.clone(), out.clone());
            self.record(move || {
                let Some(g) = o.cloned_grad() else { return };
                let yd = o.data();
                let gsum: f64 = g.iter().sum();
                let da: Vec<f64> = g.iter().zip(yd.iter()).map(|(g, y)| g - y.exp() * gsum).collect();
                drop(yd);
                a.accumulate_grad(&da);
            });
        }
        out
    }

    /// Element `i` of a vector, as a scalar.
    pub fn pick(&self, a: &Tensor, i: usize) -> Tensor {
        assert_eq!(a.shape().len(), 1, "pick expects a vector");
        assert!(i < a.numel(), "pick index {i} out of range {}", a.numel());
        let v = a.data()[i];
        let out = Tensor::new(vec![1], vec![v], self.flows(&[a]));
        if out.requires_grad() {
            let (a, o) = (a.clone(), out.clone());
            self.record(move || {
                let Some(g) = o.cloned_grad() else { return };
                let mut da = vec![0.0; a.numel()];
                da[i] = g[0];
                a.accumulate_grad(&da);
            });
        }
        out
    }

    /// Cross-entropy of 1-D logits against a target index:
    /// `-log_softmax(logits)[target]`.
    pub fn cross_entropy(&self, logits: &Tensor, target: usize) -> Tensor {
        self.scale(&self.pick(&self.log_softmax(logits), target), -1.0)
    }

    /// v^T·M for v: [k], M: [k,n].
    pub fn vec_mat(&self, v: &Tensor, m: &Tensor) -> Tensor {
        let k = v.numel();
        assert_eq!(v.shape().len(), 1, "vec_mat expects a vector");
        assert_eq!(m.rows(), k, "vec_mat dims {k} vs {}", m.rows());
        let n = m.cols();
        let vd = v.data();
        let md = m.data();
        let mut out = vec![0.0; n];
        for p in 0..k {
            let vv = vd[p];
            if vv == 0.0 {
                continue;
            }
            for j in 0..n {
                out[j] += vv * md[p * n + j];
            }
        }
        drop(vd);
        drop(md);
        let out = Tensor::new(vec![n], out, self.flows(&[v, m]));
        if out.requires_grad() {
            let (v, m, o) = (v.clone(), m.clone(), out.clone());
            self.record(move || {
                let Some(g) = o.cloned_grad() else { return };
                if v.requires_grad() {
                    let md = m.data();
                    let mut dv = vec![0.0; k];
                    for p in 0..k {
                        for j in 0..n {
                            dv[p] += md[p * n + j] * g[j];
                        }
                    }
                    drop(md);
                    v.accumulate_grad(&dv);
                }
                if m.requires_grad() {
                    let vd = v.data();
                    let mut dm = vec![0.0; k * n];
                    for p in 0..k {
                        for j in 0..n {
                            dm[p * n + j] = vd[p] * g[j];
                        }
                    }
                    drop(vd);
                    m.accumulate_grad(&dm);
                }
            });
        }
        out
    }

    /// M·v for M: [m,n], v: [n].
    pub fn mat_vec(&self, m: &Tensor, v: &Tensor) -> Tensor {
        let (r, c) = (m.rows(), m.cols());
        assert_eq!(v.shape(), [c], "mat_vec dims {c} vs {:?}", v.shape());
        let md = m.data();
        let vd = v.data();
        let mut out = vec![0.0; r];
        for i in 0..r {
            for j in 0..c {
                out[i] += md[i * c + j] * vd[j];
            }
        }
        drop(md);
        drop(vd);
        let out = Tensor::new(vec![r], out, self.flows(&[m, v]));
        if out.requires_grad() {
            let (m, v, o) = (m.clone(), v.clone(), out.clone());
            self.record(move || {
                let Some(g) = o.cloned_grad() else { return };
                if m.requires_grad() {
                    let vd = v.data();
                    let mut dm = vec![0.0; r * c];
                    for i in 0..r {
                        for j in 0..c {
                            dm[i * c + j] = g[i] * vd[j];
                        }
                    }
                    drop(vd);
                    m.accumulate_grad(&dm);
                }
                if v.requires_grad() {
                    let md = m.data();
                    let mut dv = vec![0.0; c];
                    for i in 0..r {
                        for j in 0..c {
                            dv[j] += md[i * c + j] * g[i];
                        }
                    }
                    drop(md);
                    v.accumulate_grad(&dv);
                }
            });
        }
        out
    }

    /// Contiguous slice [start, end) of a vector.
    pub fn slice_1d(&self, a: &Tensor, start: usize, end: usize) -> Tensor {
        assert_eq!(a.shape().len(), 1, "slice_1d expects a vector");
        assert!(start <= end && end <= a.numel(), "slice [{start},{end}) out of range");
        let out: Vec<f64> = a.data()[start..end].to_vec();
        let out = Tensor::new(vec![end - start], out, self.flows(&[a]));
        if out.requires_grad() {
            let (a, o) = (a.clone(), out.clone());
            self.record(move || {
                let Some(g) = o.cloned_grad() else { return };
                let mut da = vec![0.0; a.numel()];
                da[start..end].copy_from_slice(&g);
                a.accumulate_grad(&da);
            });
        }
        out
    }

    /// Row `i` of a matrix, as a vector.
    pub fn row(&self, m: &Tensor, i: usize) -> Tensor {
        let (r, c) = (m.rows(), m.cols());
        assert!(i < r, "row {i} out of range {r}");
        let out: Vec<f64> = m.data()[i * c..(i + 1) * c].to_vec();
        let out = Tensor::new(vec![c], out, self.flows(&[m]));
        if out.requires_grad() {
            let (m, o) = (m.clone(), out.clone());
            self.record(move || {
                let Some(g) = o.cloned_grad() else { return };
                let mut dm = vec![0.0; r * c];
                dm[i * c..(i + 1) * c].copy_from_slice(&g);
                m.accumulate_grad(&dm);
            });
        }
        out
    }

    /// Rows [r0, r1) of a matrix.
    pub fn slice_rows(&self, m: &Tensor, r0: usize, r1: usize) -> Tensor {
        let (r, c) = (m.rows(), m.cols());
        assert!(r0 <= r1 && r1 <= r, "row slice [{r0},{r1}) out of range {r}");
        let out: Vec<f64> = m.data()[r0 * c..r1 * c].to_vec();
        let out = Tensor::new(vec![r1 - r0, c], out, self.flows(&[m]));
        if out.requires_grad() {
            let (m, o) = (m.clone(), out.clone());
            self.record(move || {
                let Some(g) = o.cloned_grad() else { return };
                let mut dm = vec![0.0; r * c];
                dm[r0 * c..r1 * c].copy_from_slice(&g);
                m.accumulate_grad(&dm);
            });
        }
        out
    }

    /// Concatenation of vectors into one vector.
    pub fn concat_1d(&self, parts: &[&Tensor]) -> Tensor {
        assert!(!parts.is_empty(), "concat_1d of nothing");
        let mut out = Vec::new();
        let mut lens = Vec::with_capacity(parts.len());
        for p in parts {
            assert_eq!(p.shape().len(), 1, "concat_1d expects vectors");
            lens.push(p.numel());
            out.extend_from_slice(&p.data());
        }
        let out = Tensor::new(vec![out.len()], out, self.flows(parts));
        if out.requires_grad() {
            let parts: Vec<Tensor> = parts.iter().map(|&p| p.clone()).collect();
            let o = out.clone();
            self.record(move || {
                let Some(g) = o.cloned_grad() else { return };
                let mut off = 0;
                for (p, len) in parts.iter().zip(&lens) {
                    if p.requires_grad() {
                        p.accumulate_grad(&g[off..off + len]);
                    }
                    off += len;
                }
            });
        }
        out
    }

    /// [A ; B] feature-wise: A: [m,n1], B: [m,n2] → [m, n1+n2].
    pub fn concat_cols(&self, a: &Tensor, b: &Tensor) -> Tensor {
        let (m, n1) = (a.rows(), a.cols());
        let (m2, n2) = (b.rows(), b.cols());
        assert_eq!(m, m2, "concat_cols row mismatch {m} vs {m2}");
        let ad = a.data();
        let bd = b.data();
        let n = n1 + n2;
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            out[i * n..i * n + n1].copy_from_slice(&ad[i * n1..(i + 1) * n1]);
            out[i * n + n1..(i + 1) * n].copy_from_slice(&bd[i * n2..(i + 1) * n2]);
        }
        drop(ad);
        drop(bd);
        let out = Tensor::new(vec![m, n], out, self.flows(&[a, b]));
        if out.requires_grad() {
            let (a, b, o) = (a.clone(), b.clone(), out.clone());
            self.record(move || {
                let Some(g) = o.cloned_grad() else { return };
                if a.requires_grad() {
                    let mut da = vec![0.0; m * n1];
                    for i in 0..m {
                        da[i * n1..(i + 1) * n1].copy_from_slice(&g[i * n..i * n + n1]);
                    }
                    a.accumulate_grad(&da);
                }
                if b.requires_grad() {
                    let mut db = vec![0.0; m * n2];
                    for i in 0..m {
                        db[i * n2..(i + 1) * n2].copy_from_slice(&g[i * n + n1..(i + 1) * n]);
                    }
                    b.accumulate_grad(&db);
                }
            });
        }
        out
    }

    /// Stacks equal-length vectors as the rows of a matrix.
    pub fn stack_rows(&self, rows: &[Tensor]) -> Tensor {
        assert!(!rows.is_empty(), "stack_rows of nothing");
        let n = rows[0].numel();
        let mut out = Vec::with_capacity(rows.len() * n);
        for r in rows {
            assert_eq!(r.shape(), [n], "stack_rows length mismatch");
            out.extend_from_slice(&r.data());
        }
        let refs: Vec<&Tensor> = rows.iter().collect();
        let out = Tensor::new(vec![rows.len(), n], out, self.flows(&refs));
        if out.requires_grad() {
            let rows: Vec<Tensor> = rows.to_vec();
            let o = out.clone();
            self.record(move || {
                let Some(g) = o.cloned_grad() else { return };
                for (i, r) in rows.iter().enumerate() {
                    if r.requires_grad() {
                        r.accumulate_grad(&g[i * n..(i + 1) * n]);
                    }
                }
            });
        }
        out
    }

    /// Column-wise max over the rows of a matrix, i.e. max over time for a
    /// [steps, features] input. Ties route the gradient to the lowest row.
    pub fn max_over_rows(&self, m: &Tensor) -> Tensor {
        let (r, c) = (m.rows(), m.cols());
        assert!(r >= 1, "max_over_rows of empty matrix");
        let md = m.data();
        let mut out = vec![f64::NEG_INFINITY; c];
        let mut argmax = vec![0usize; c];
        for i in 0..r {
            for j in 0..c {
                let v = md[i * c + j];
                if v > out[j] {
                    out[j] = v;
                    argmax[j] = i;
                }
            }
        }
        drop(md);
        let out = Tensor::new(vec![c], out, self.flows(&[m]));
        if out.requires_grad() {
            let (m, o) = (m.clone(), out.clone());
            self.record(move || {
                let Some(g) = o.cloned_grad() else { return };
                let mut dm = vec![0.0; r * c];
                for j in 0..c {
                    dm[argmax[j] * c + j] = g[j];
                }
                m.accumulate_grad(&dm);
            });
        }
        out
    }

    /// Same elements, new shape (row-major layout is unchanged).
    pub fn reshape(&self, a: &Tensor, shape: Vec<usize>) -> Tensor {
        assert_eq!(shape.iter().product::<usize>(), a.numel(), "reshape numel mismatch");
        let out = Tensor::new(shape, a.to_vec(), self.flows(&[a]));
        if out.requires_grad() {
            let (a, o) = (a.clone(), out.clone());
            self.record(move || {
                let Some(g) = o.cloned_grad() else { return };
                a.accumulate_grad(&g);
            });
        }
        out
    }

    /// Valid 1-D convolution over a [T, c_in] input. `kernel` is
    /// [width * c_in, c_out] (window rows flattened), `bias` is [c_out].
    pub fn conv1d(&self, input: &Tensor, kernel: &Tensor, bias: &Tensor, width: usize) -> Tensor {
        let (t, c_in) = (input.rows(), input.cols());
        assert!(t >= width, "conv1d input length {t} below kernel width {width}");
        assert_eq!(kernel.rows(), width * c_in, "conv1d kernel rows");
        let positions = t - width + 1;
        let rows: Vec<Tensor> = (0..positions)
            .map(|p| {
                let window = self.slice_rows(input, p, p + width);
                let flat = self.reshape(&window, vec![width * c_in]);
                self.vec_mat(&flat, kernel)
            })
            .collect();
        let stacked = self.stack_rows(&rows);
        self.add_row_broadcast(&stacked, bias)
    }

    /// Inverted dropout. In train mode each element is kept with probability
    /// `keep` and scaled by 1/keep; in eval mode this is the identity. The
    /// mask is a pure function of `seed`.
    pub fn dropout(&self, a: &Tensor, keep: f64, seed: u64, train: bool) -> Tensor {
        assert!(keep > 0.0 && keep <= 1.0, "keep rate must be in (0,1], got {keep}");
        if !train || keep == 1.0 {
            return self.scale(a, 1.0);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mask: Vec<f64> = (0..a.numel())
            .map(|_| if rng.gen::<f64>() < keep { 1.0 / keep } else { 0.0 })
            .collect();
        let out: Vec<f64> = a.data().iter().zip(&mask).map(|(x, m)| x * m).collect();
        let out = Tensor::new(a.shape().to_vec(), out, self.flows(&[a]));
        if out.requires_grad() {
            let (a, o) = (a.clone(), out.clone());
            self.record(move || {
                let Some(g) = o.cloned_grad() else { return };
                let da: Vec<f64> = g.iter().zip(&mask).map(|(g, m)| g * m).collect();
                a.accumulate_grad(&da);
            });
        }
        out
    }

    /// Gathers rows of an embedding table: table: [V,d], ids: [L] → [L,d].
    /// The backward pass scatter-adds into the table gradient.
    pub fn embedding_lookup(&self, table: &Tensor, ids: &[usize]) -> Tensor {
        let (v, d) = (table.rows(), table.cols());
        assert!(!ids.is_empty(), "embedding_lookup of empty id list");
        let td = table.data();
        let mut out = Vec::with_capacity(ids.len() * d);
        for &id in ids {
            assert!(id < v, "embedding id {id} out of vocab {v}");
            out.extend_from_slice(&td[id * d..(id + 1) * d]);
        }
        drop(td);
        let out = Tensor::new(vec![ids.len(), d], out, self.flows(&[table]));
        if out.requires_grad() {
            let (table, o) = (table.clone(), out.clone());
            let ids = ids.to_vec();
            self.record(move || {
                let Some(g) = o.cloned_grad() else { return };
                let mut dt = vec![0.0; v * d];
                for (l, &id) in ids.iter().enumerate() {
                    for j in 0..d {
                        dt[id * d + j] += g[l * d + j];
                    }
                }
                table.accumulate_grad(&dt);
            });
        }
        out
    }
}

fn softmax_layout(shape: &[usize], axis: usize) -> (usize, usize, usize) {
    match (shape.len(), axis) {
        (1, 0) => (1, 1, shape[0]),
        // groups iterate the other axis; stride walks the softmax axis
        (2, 0) => (shape[1], shape[1], shape[0]),
        (2, 1) => (shape[0], 1, shape[1]),
        _ => panic!("softmax: unsupported shape {shape:?} axis {axis}"),
    }
}

fn group_base(group: usize, stride: usize, len: usize) -> usize {
    if stride == 1 {
        group * len
    } else {
        group
    }
}
