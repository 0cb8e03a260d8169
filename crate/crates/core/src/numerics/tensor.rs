//! Dense f64 tensors with shared ownership and gradient slots.
//!
//! A `Tensor` is a cheap handle (`Rc`) to a flat row-major buffer. Interior
//! mutability lets the tape accumulate gradients and the optimizer update
//! parameters in place while forward code holds read-only handles.

use std::cell::{Ref, RefCell, RefMut};
use std::rc::Rc;

#[derive(Clone)]
pub struct Tensor {
    inner: Rc<Inner>,
}

struct Inner {
    shape: Vec<usize>,
    data: RefCell<Vec<f64>>,
    grad: RefCell<Option<Vec<f64>>>,
    requires_grad: bool,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>, requires_grad: bool) -> Self {
        let numel: usize = shape.iter().product();
        assert_eq!(
            numel,
            data.len(),
            "tensor data length {} does not match shape {:?}",
            data.len(),
            shape
        );
        Tensor {
            inner: Rc::new(Inner {
                shape,
                data: RefCell::new(data),
                grad: RefCell::new(None),
                requires_grad,
            }),
        }
    }

    /// Leaf that participates in backward passes (model parameters).
    pub fn param(shape: Vec<usize>, data: Vec<f64>) -> Self {
        Tensor::new(shape, data, true)
    }

    /// Leaf excluded from differentiation (inputs, constants).
    pub fn constant(shape: Vec<usize>, data: Vec<f64>) -> Self {
        Tensor::new(shape, data, false)
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let numel = shape.iter().product();
        Tensor::constant(shape, vec![0.0; numel])
    }

    pub fn scalar(v: f64) -> Self {
        Tensor::constant(vec![1], vec![v])
    }

    pub fn shape(&self) -> &[usize] {
        &self.inner.shape
    }

    pub fn numel(&self) -> usize {
        self.inner.shape.iter().product()
    }

    pub fn is_scalar(&self) -> bool {
        self.numel() == 1
    }

    /// Number of rows of a 2-D tensor.
    pub fn rows(&self) -> usize {
        assert_eq!(self.inner.shape.len(), 2, "rows() on non-matrix {:?}", self.shape());
        self.inner.shape[0]
    }

    /// Number of columns of a 2-D tensor.
    pub fn cols(&self) -> usize {
        assert_eq!(self.inner.shape.len(), 2, "cols() on non-matrix {:?}", self.shape());
        self.inner.shape[1]
    }

    pub fn requires_grad(&self) -> bool {
        self.inner.requires_grad
    }

    pub fn data(&self) -> Ref<'_, Vec<f64>> {
        self.inner.data.borrow()
    }

    pub fn data_mut(&self) -> RefMut<'_, Vec<f64>> {
        self.inner.data.borrow_mut()
    }

    /// Single value of a scalar tensor.
    pub fn item(&self) -> f64 {
        assert!(self.is_scalar(), "item() on non-scalar {:?}", self.shape());
        self.inner.data.borrow()[0]
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.inner.data.borrow().clone()
    }

    pub fn cloned_grad(&self) -> Option<Vec<f64>> {
        self.inner.grad.borrow().clone()
    }

    /// Adds `g` into the gradient slot, allocating it on first use.
    pub fn accumulate_grad(&self, g: &[f64]) {
        assert_eq!(g.len(), self.numel(), "gradient length mismatch");
        let mut slot = self.inner.grad.borrow_mut();
        match slot.as_mut() {
            Some(acc) => {
                for (a, b) in acc.iter_mut().zip(g) {
                    *a += b;
                }
            }
            None => *slot = Some(g.to_vec()),
        }
    }

    /// Clears the gradient slot. Callers zero between optimizer steps.
    pub fn zero_grad(&self) {
        *self.inner.grad.borrow_mut() = None;
    }

}

impl std::fmt::Debug for Tensor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Tensor")
            .field("shape", &self.inner.shape)
            .field("requires_grad", &self.inner.requires_grad)
            .field("data", &self.inner.data.borrow())
            .finish()
    }
}
