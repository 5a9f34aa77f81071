//! Smooth, boundary-flat coefficient profiles sampled on the CGO grid.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cgo::{boundary_flat, CField, Grid, Symbol};
use crate::geometry::Mat2;

/// Order of the boundary-flat weight applied to every profile.
pub const FLAT_ORDER: i32 = 6;

/// `amp exp(-|x - center|^2 / width^2) (1 - |x|^2)^FLAT_ORDER`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub amp: f64,
    pub center: [f64; 2],
    pub width: f64,
}

impl Bump {
    pub const fn new(amp: f64, center: [f64; 2], width: f64) -> Bump {
        Bump { amp, center, width }
    }

    pub fn eval(&self, x: [f64; 2]) -> f64 {
        let d2 = (x[0] - self.center[0]).powi(2) + (x[1] - self.center[1]).powi(2);
        self.amp * (-d2 / (self.width * self.width)).exp() * boundary_flat(x[0].hypot(x[1]), FLAT_ORDER)
    }

    pub fn sample(&self, grid: &Grid) -> Vec<f64> {
        sample(grid, |x| self.eval(x))
    }
}

pub fn sample(grid: &Grid, f: impl Fn([f64; 2]) -> f64) -> Vec<f64> {
    (0..grid.len()).map(|i| {
        let z = grid.point(i);
        f([z.re, z.im])
    }).collect()
}

/// A trace-free tensor profile.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum TensorProfile {
    /// `diag(mu, -mu)`, `kappa = 2 mu`
    Diagonal(Bump),
    /// `[[0, tau], [tau, 0]]`, `kappa = 2 i tau`
    OffDiagonal(Bump),
}

impl TensorProfile {
    pub fn eval(&self, x: [f64; 2]) -> Mat2 {
        match self {
            TensorProfile::Diagonal(b) => {
                let m = b.eval(x);
                Mat2::new(m, 0.0, 0.0, -m)
            }
            TensorProfile::OffDiagonal(b) => {
                let t = b.eval(x);
                Mat2::new(0.0, t, t, 0.0)
            }
        }
    }

    pub fn sample(&self, grid: &Grid) -> Vec<Mat2> {
        (0..grid.len()).map(|i| {
            let z = grid.point(i);
            self.eval([z.re, z.im])
        }).collect()
    }
}

/// `(d f, dbar f)` of a compactly supported real field by spectral
/// differentiation.
pub fn spectral_gradient(grid: &Grid, f: &[f64]) -> (CField, CField) {
    let c: CField = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut out = grid.apply_many(&c, &[Symbol::D, Symbol::Dbar]);
    let dbar = out.pop().unwrap();
    let d = out.pop().unwrap();
    (d, dbar)
}
