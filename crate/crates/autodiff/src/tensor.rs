use crate::error::{AutodiffError, Result};
use crate::scalar::Scalar;

/// `[rows, cols]`. Vectors are `[n, 1]` columns unless stated otherwise and
/// scalars are `[1, 1]`.
pub type Shape = [usize; 2];

/// Dense row-major matrix with an optional gradient buffer.
///
/// The gradient buffer is allocated exactly when the tensor requires a
/// gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<F> {
    shape: Shape,
    values: Vec<F>,
    grad: Option<Vec<F>>,
}

impl<F: Scalar> Tensor<F> {
    pub fn from_vec(shape: Shape, values: Vec<F>) -> Result<Self> {
        if shape[0] * shape[1] != values.len() {
            return Err(AutodiffError::InvalidArgument {
                op: "tensor",
                msg: format!("shape {shape:?} needs {} values, got {}", shape[0] * shape[1], values.len()),
            });
        }
        Ok(Tensor { shape, values, grad: None })
    }

    pub fn zeros(shape: Shape) -> Self {
        Tensor { shape, values: vec![F::zero(); shape[0] * shape[1]], grad: None }
    }

    pub fn filled(shape: Shape, value: F) -> Self {
        Tensor { shape, values: vec![value; shape[0] * shape[1]], grad: None }
    }

    pub fn scalar(value: F) -> Self {
        Tensor { shape: [1, 1], values: vec![value], grad: None }
    }

    pub fn from_fn(shape: Shape, mut f: impl FnMut(usize, usize) -> F) -> Self {
        let mut values = Vec::with_capacity(shape[0] * shape[1]);
        for r in 0..shape[0] {
            for c in 0..shape[1] {
                values.push(f(r, c));
            }
        }
        Tensor { shape, values, grad: None }
    }

    /// Column vector `[n, 1]`.
    pub fn column(values: Vec<F>) -> Self {
        Tensor { shape: [values.len(), 1], values, grad: None }
    }

    /// Row vector `[1, n]`.
    pub fn row_vector(values: Vec<F>) -> Self {
        Tensor { shape: [1, values.len()], values, grad: None }
    }

    /// Converts element-wise from another precision.
    pub fn cast<G: Scalar>(&self) -> Tensor<G> {
        Tensor {
            shape: self.shape,
            values: self.values.iter().map(|v| G::of(v.to_f64_lossy())).collect(),
            grad: self.grad.as_ref().map(|g| g.iter().map(|v| G::of(v.to_f64_lossy())).collect()),
        }
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn rows(&self) -> usize {
        self.shape[0]
    }

    pub fn cols(&self) -> usize {
        self.shape[1]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[F] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [F] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<F> {
        self.values
    }

    pub fn row(&self, r: usize) -> &[F] {
        let c = self.shape[1];
        &self.values[r * c..(r + 1) * c]
    }

    pub fn get(&self, r: usize, c: usize) -> F {
        self.values[r * self.shape[1] + c]
    }

    /// Value of a `[1, 1]` tensor.
    pub fn item(&self) -> F {
        debug_assert_eq!(self.values.len(), 1);
        self.values[0]
    }

    pub fn requires_grad(&self) -> bool {
        self.grad.is_some()
    }

    pub fn set_requires_grad(&mut self, on: bool) {
        if on && self.grad.is_none() {
            self.grad = Some(vec![F::zero(); self.values.len()]);
        } else if !on {
            self.grad = None;
        }
    }

    pub fn grad(&self) -> Option<&[F]> {
        self.grad.as_deref()
    }

    pub(crate) fn grad_mut(&mut self) -> Option<&mut Vec<F>> {
        self.grad.as_mut()
    }

    pub fn zero_grad(&mut self) {
        if let Some(g) = self.grad.as_mut() {
            g.iter_mut().for_each(|v| *v = F::zero());
        }
    }
}
