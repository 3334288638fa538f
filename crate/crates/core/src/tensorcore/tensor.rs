use crate::error::{Error, Result};

/// Dense row-major array of `f64` with a lazily allocated gradient buffer.
///
/// Images are stored height × width × channels; convolution kernels are
/// kh × kw × in_channels × filters; dense weights are inputs × outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    values: Vec<f64>,
    grad: Option<Vec<f64>>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if shape.contains(&0) {
            return Err(Error::shape(
                "tensor",
                format!("dimensions must be positive, got {shape:?}"),
            ));
        }
        let expected: usize = shape.iter().product();
        if expected != values.len() {
            return Err(Error::shape(
                "tensor",
                format!(
                    "shape {shape:?} holds {expected} values but {} were given",
                    values.len()
                ),
            ));
        }
        Ok(Tensor {
            shape,
            values,
            grad: None,
        })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        let n = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            values: vec![0.0; n],
            grad: None,
        }
    }

    pub fn full(shape: &[usize], value: f64) -> Self {
        let mut t = Self::zeros(shape);
        t.values.fill(value);
        t
    }

    pub fn scalar(value: f64) -> Self {
        Tensor {
            shape: vec![1],
            values: vec![value],
            grad: None,
        }
    }

    pub fn vector(values: Vec<f64>) -> Self {
        Tensor {
            shape: vec![values.len().max(1)],
            values: if values.is_empty() { vec![0.0] } else { values },
            grad: None,
        }
    }

    /// Builds a tensor without validation; callers guarantee the invariant.
    pub(crate) fn from_parts(shape: Vec<usize>, values: Vec<f64>) -> Self {
        debug_assert_eq!(shape.iter().product::<usize>(), values.len());
        Tensor {
            shape,
            values,
            grad: None,
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn numel(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// The single value of a one-element tensor.
    pub fn item(&self) -> Option<f64> {
        (self.values.len() == 1).then(|| self.values[0])
    }

    pub fn grad(&self) -> Option<&[f64]> {
        self.grad.as_deref()
    }

    /// Gradient buffer, allocated as zeros on first access.
    pub fn grad_mut(&mut self) -> &mut [f64] {
        let n = self.values.len();
        self.grad.get_or_insert_with(|| vec![0.0; n])
    }

    pub fn zero_grad(&mut self) {
        if let Some(g) = self.grad.as_mut() {
            g.fill(0.0);
        }
    }

    pub(crate) fn take_grad(&mut self) -> Option<Vec<f64>> {
        self.grad.take()
    }

    pub(crate) fn set_grad(&mut self, grad: Option<Vec<f64>>) {
        debug_assert!(grad.as_ref().is_none_or(|g| g.len() == self.values.len()));
        self.grad = grad;
    }

    /// Like [`Tensor::accumulate_grad`], but moves `delta` in when there is
    /// no gradient yet.
    pub(crate) fn accumulate_grad_owned(&mut self, delta: Vec<f64>) {
        match &mut self.grad {
            None => self.grad = Some(delta),
            Some(g) => {
                for (g, d) in g.iter_mut().zip(&delta) {
                    *g += d;
                }
            }
        }
    }

    pub(crate) fn accumulate_grad(&mut self, delta: &[f64]) {
        for (g, d) in self.grad_mut().iter_mut().zip(delta) {
            *g += d;
        }
    }

    pub fn reshape(mut self, shape: Vec<usize>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != self.values.len() || shape.contains(&0) {
            return Err(Error::shape(
                "reshape",
                format!("cannot view {:?} as {shape:?}", self.shape),
            ));
        }
        self.shape = shape;
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_inconsistent_shape() {
        assert!(Tensor::new(vec![2, 3], vec![0.0; 5]).is_err());
        assert!(Tensor::new(vec![0, 3], vec![]).is_err());
        assert!(Tensor::new(vec![2, 3], vec![0.0; 6]).is_ok());
    }

    #[test]
    fn grad_is_lazy_and_zeroable() {
        let mut t = Tensor::zeros(&[4]);
        assert!(t.grad().is_none());
        t.grad_mut()[2] = 3.0;
        assert_eq!(t.grad().unwrap(), &[0.0, 0.0, 3.0, 0.0]);
        t.zero_grad();
        assert!(t.grad().unwrap().iter().all(|&g| g == 0.0));
        assert_eq!(t.grad().unwrap().len(), t.numel());
    }
}
