use num_complex::Complex64;

use super::metric::Mat2;
use crate::error::{Error, Result};

/// Per-node symmetric 2x2 tensor with an optional trace-free flag.
#[derive(Clone, Debug)]
pub struct TensorField2 {
    pub values: Vec<Mat2>,
    pub trace_free: bool,
}

impl TensorField2 {
    pub fn new(values: Vec<Mat2>) -> Result<Self> {
        for (i, k) in values.iter().enumerate() {
            if (k[(0, 1)] - k[(1, 0)]).abs() > 1e-14 * (1.0 + k.abs().max()) {
                return Err(Error::Invalid(format!("tensor at node {i} is not symmetric")));
            }
        }
        Ok(TensorField2 { values, trace_free: false })
    }

    /// Flags the field trace-free after checking `Tr(g K) = 0` node by node.
    pub fn with_trace_free(mut self, g: &[Mat2], tol: f64) -> Result<Self> {
        if !self.check_trace_free(g, tol) {
            return Err(Error::Invalid("tensor is not trace-free with respect to g".into()));
        }
        self.trace_free = true;
        Ok(self)
    }

    pub fn check_trace_free(&self, g: &[Mat2], tol: f64) -> bool {
        self.values.len() == g.len() && self.values.iter().zip(g).all(|(k, g)| (g * k).trace().abs() <= tol)
    }

    pub fn kappa(&self) -> Vec<Complex64> {
        self.values.iter().map(kappa).collect()
    }
}

/// `K11 - K22 + i (K12 + K21)`.
pub fn kappa(k: &Mat2) -> Complex64 {
    Complex64::new(k[(0, 0)] - k[(1, 1)], k[(0, 1)] + k[(1, 0)])
}
