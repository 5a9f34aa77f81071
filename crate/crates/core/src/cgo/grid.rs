//! Uniform grid over the extended disk and the spectral Cauchy-type
//! transforms living on it.
//!
//! Fields are `n x n` arrays of cell centers on `[-L, L]^2`, row-major with
//! the row index running in `y`. Transforms zero-pad to `2n x 2n` and
//! multiply by the exact Fourier symbol of the kernel truncated to
//! `|z| < 2L`, which makes the periodic convolution agree with the planar
//! one for sources and targets inside the disk of radius `L`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

pub type CField = Vec<Complex64>;

/// Radius of the cutoff support; also the grid half-width.
pub const EXTENT: f64 = 1.3;

const C0: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Bessel function of the first kind, order zero.
pub fn bessel_j0(x: f64) -> f64 {
    libm::j0(x)
}

/// `C^infinity` cutoff equal to 1 on the closed unit disk and vanishing for
/// `|z| >= EXTENT`.
pub fn cutoff(r: f64) -> f64 {
    smooth_step((EXTENT - r) / (EXTENT - 1.0))
}

/// Boundary-flat weight `(1 - |z|^2)^order` on the unit disk, zero outside.
pub fn boundary_flat(r: f64, order: i32) -> f64 {
    if r >= 1.0 {
        0.0
    } else {
        (1.0 - r * r).powi(order)
    }
}

fn smooth_step(t: f64) -> f64 {
    let f = |t: f64| if t > 0.0 { (-1.0 / t).exp() } else { 0.0 };
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        f(t) / (f(t) + f(1.0 - t))
    }
}

/// Which transform symbol to apply.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Symbol {
    /// `dbar^{-1}`: `(1/pi) int w(z') / (z - z') dA`
    DbarInv,
    /// `d^{-1}`: `(1/pi) int w(z') / conj(z - z') dA`
    DInv,
    /// `d dbar^{-1}` (Beurling)
    DDbarInv,
    /// `dbar d^{-1}`
    DbarDInv,
    Dbar,
    D,
    /// `-4 d dbar`, the positive Laplacian
    Laplacian,
}

pub struct Grid {
    pub n: usize,
    pub dx: f64,
    /// cell-center coordinates along each axis
    pub axis: Vec<f64>,
    m: usize,
    k: Vec<f64>,
    /// `1 - J0(|k| R)` on the padded frequency grid
    trunc: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Grid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Grid").field("n", &self.n).field("dx", &self.dx).finish()
    }
}

impl Grid {
    pub fn new(n: usize) -> Result<Grid> {
        if n < 16 || n > 4096 {
            return Err(Error::Invalid(format!("grid size {n} outside [16, 4096]")));
        }
        let dx = 2.0 * EXTENT / n as f64;
        let axis = (0..n).map(|i| -EXTENT + (i as f64 + 0.5) * dx).collect();
        let m = 2 * n;
        let period = m as f64 * dx;
        let k: Vec<f64> = (0..m)
            .map(|i| {
                let j = if i <= m / 2 { i as f64 } else { i as f64 - m as f64 };
                2.0 * PI * j / period
            })
            .collect();
        let radius = 2.0 * EXTENT;
        let trunc = (0..m * m)
            .into_par_iter()
            .map(|idx| {
                let (a, b) = (idx / m, idx % m);
                1.0 - bessel_j0(k[a].hypot(k[b]) * radius)
            })
            .collect();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(m);
        let inv = planner.plan_fft_inverse(m);
        Ok(Grid { n, dx, axis, m, k, trunc, fwd, inv })
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn point(&self, idx: usize) -> Complex64 {
        Complex64::new(self.axis[idx % self.n], self.axis[idx / self.n])
    }

    pub fn points(&self) -> Vec<Complex64> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    pub fn map<F: Fn(Complex64) -> Complex64 + Sync>(&self, f: F) -> CField {
        (0..self.len()).into_par_iter().map(|i| f(self.point(i))).collect()
    }

    /// Indices of cell centers inside the open unit disk.
    pub fn disk_mask(&self) -> Vec<bool> {
        (0..self.len()).map(|i| self.point(i).norm() < 1.0).collect()
    }

    /// The extension cutoff sampled on the grid.
    pub fn cutoff_field(&self) -> Vec<f64> {
        (0..self.len()).map(|i| cutoff(self.point(i).norm())).collect()
    }

    /// Largest spacing that resolves `exp(2 i psi / h)` with ten points per
    /// wavelength, given `max |grad psi|` over the cutoff support.
    pub fn resolution_limit(h: f64, grad_max: f64) -> f64 {
        PI * h / (10.0 * grad_max.max(1e-300))
    }

    pub fn check_resolution(&self, h: f64, grad_max: f64) -> Result<()> {
        let limit = Self::resolution_limit(h, grad_max);
        if self.dx > limit {
            return Err(Error::UnderResolved { spacing: self.dx, limit });
        }
        Ok(())
    }

    fn fft2(&self, data: &mut [Complex64], forward: bool) {
        let m = self.m;
        let plan = if forward { &self.fwd } else { &self.inv };
        data.par_chunks_mut(m).for_each(|row| plan.process(row));
        transpose(data, m);
        data.par_chunks_mut(m).for_each(|row| plan.process(row));
        transpose(data, m);
    }

    fn symbol(&self, s: Symbol, a: usize, b: usize) -> Complex64 {
        let (ky, kx) = (self.k[a], self.k[b]);
        let kappa = Complex64::new(kx, ky);
        let k2 = kx * kx + ky * ky;
        let i = Complex64::i();
        match s {
            Symbol::Dbar => 0.5 * i * kappa,
            Symbol::D => 0.5 * i * kappa.conj(),
            Symbol::Laplacian => Complex64::new(k2, 0.0),
            _ if k2 == 0.0 => C0,
            Symbol::DbarInv => -2.0 * i * kappa.conj() / k2 * self.trunc[a * self.m + b],
            Symbol::DInv => -2.0 * i * kappa / k2 * self.trunc[a * self.m + b],
            Symbol::DDbarInv => kappa.conj() * kappa.conj() / k2 * self.trunc[a * self.m + b],
            Symbol::DbarDInv => kappa * kappa / k2 * self.trunc[a * self.m + b],
        }
    }

    /// Applies one or more symbols to the same input, sharing the forward
    /// transform. Input and outputs are `n x n` grid fields.
    pub fn apply_many(&self, f: &[Complex64], symbols: &[Symbol]) -> Vec<CField> {
        assert_eq!(f.len(), self.len());
        let (n, m) = (self.n, self.m);
        let mut pad = vec![C0; m * m];
        for r in 0..n {
            pad[r * m..r * m + n].copy_from_slice(&f[r * n..(r + 1) * n]);
        }
        self.fft2(&mut pad, true);
        let nyq = m / 2;
        symbols
            .iter()
            .map(|&s| {
                let mut g: Vec<Complex64> = pad
                    .par_iter()
                    .enumerate()
                    .map(|(idx, v)| {
                        let (a, b) = (idx / m, idx % m);
                        if a == nyq || b == nyq {
                            C0
                        } else {
                            v * self.symbol(s, a, b)
                        }
                    })
                    .collect();
                self.fft2(&mut g, false);
                let scale = 1.0 / (m * m) as f64;
                let mut out = vec![C0; n * n];
                for r in 0..n {
                    for c in 0..n {
                        out[r * n + c] = g[r * m + c] * scale;
                    }
                }
                out
            })
            .collect()
    }

    pub fn apply(&self, f: &[Complex64], s: Symbol) -> CField {
        self.apply_many(f, &[s]).pop().unwrap()
    }

    /// Cauchy transform of `cutoff * w`.
    pub fn cauchy_transform(&self, w: &[Complex64]) -> CField {
        let chi = self.cutoff_field();
        let ext: CField = w.iter().zip(&chi).map(|(v, c)| v * c).collect();
        self.apply(&ext, Symbol::DbarInv)
    }

    /// `(int_{|z|<1} |f|^p dA)^{1/p}` by the midpoint rule.
    pub fn disk_norm(&self, f: &[Complex64], p: f64) -> f64 {
        let s: f64 = (0..self.len()).filter(|&i| self.point(i).norm() < 1.0).map(|i| f[i].norm().powf(p)).sum();
        (s * self.dx * self.dx).powf(1.0 / p)
    }

    /// `int_{|z|<1} f dA` by the midpoint rule.
    pub fn disk_integral(&self, f: &[Complex64]) -> Complex64 {
        let s: Complex64 = (0..self.len()).filter(|&i| self.point(i).norm() < 1.0).map(|i| f[i]).sum();
        s * self.dx * self.dx
    }
}

fn transpose(data: &mut [Complex64], m: usize) {
    for i in 0..m {
        for j in i + 1..m {
            data.swap(i * m + j, j * m + i);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn j0_reference_values() {
        // scipy.special.j0
        let cases = [
            (0.0, 1.0),
            (1.0, 0.7651976865579665),
            (5.0, -0.1775967713143383),
            (10.0, -0.24593576445134832),
            (11.99, 0.045451560352858814),
            (12.01, 0.04992043031982556),
            (30.0, -0.08636798358104031),
            (100.0, 0.01998585030422333),
            (1234.5, -0.013550379618034219),
        ];
        for (x, want) in cases {
            assert!((bessel_j0(x) - want).abs() < 1e-10, "J0({x}) = {} vs {want}", bessel_j0(x));
        }
    }

    #[test]
    fn cutoff_profile() {
        assert_eq!(cutoff(0.5), 1.0);
        assert_eq!(cutoff(1.0), 1.0);
        assert_eq!(cutoff(EXTENT), 0.0);
        assert!((cutoff(1.15) - 0.5).abs() < 1e-12);
    }
}
