//! Band-limited boundary data and nodal/Fourier conversions.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::geometry::{BoundaryLoop, Mesh};

/// Default Fourier truncation.
pub const DEFAULT_NF: usize = 32;

/// Per boundary circle, coefficients `c_n`, `|n| <= nf`, of
/// `f(theta) = sum c_n e^{i n theta}` with `theta` the polar angle.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryFunction {
    pub nf: usize,
    pub coeffs: Vec<Vec<Complex64>>,
}

impl BoundaryFunction {
    pub fn zeros(nloops: usize, nf: usize) -> Self {
        BoundaryFunction { nf, coeffs: vec![vec![Complex64::new(0.0, 0.0); 2 * nf + 1]; nloops] }
    }

    /// Single mode `e^{i n theta}` on loop `lp`.
    pub fn mode(nloops: usize, nf: usize, lp: usize, n: i64) -> Self {
        let mut f = Self::zeros(nloops, nf);
        f.set(lp, n, Complex64::new(1.0, 0.0));
        f
    }

    /// `amp cos(n theta)` on loop `lp` (real).
    pub fn cosine(nloops: usize, nf: usize, lp: usize, n: i64, amp: f64) -> Self {
        let mut f = Self::zeros(nloops, nf);
        f.add(lp, n, Complex64::new(amp / 2.0, 0.0));
        f.add(lp, -n, Complex64::new(amp / 2.0, 0.0));
        f
    }

    /// `amp sin(n theta)` on loop `lp` (real).
    pub fn sine(nloops: usize, nf: usize, lp: usize, n: i64, amp: f64) -> Self {
        let mut f = Self::zeros(nloops, nf);
        f.add(lp, n, Complex64::new(0.0, -amp / 2.0));
        f.add(lp, -n, Complex64::new(0.0, amp / 2.0));
        f
    }

    fn idx(&self, n: i64) -> usize {
        assert!(n.unsigned_abs() as usize <= self.nf, "mode {n} beyond truncation {}", self.nf);
        (n + self.nf as i64) as usize
    }

    pub fn get(&self, lp: usize, n: i64) -> Complex64 {
        self.coeffs[lp][self.idx(n)]
    }

    pub fn set(&mut self, lp: usize, n: i64, v: Complex64) {
        let i = self.idx(n);
        self.coeffs[lp][i] = v;
    }

    pub fn add(&mut self, lp: usize, n: i64, v: Complex64) {
        let i = self.idx(n);
        self.coeffs[lp][i] += v;
    }

    pub fn is_real(&self, tol: f64) -> bool {
        let nf = self.nf as i64;
        self.coeffs.iter().all(|c| (-nf..=nf).all(|n| (c[(n + nf) as usize] - c[(nf - n) as usize].conj()).norm() <= tol))
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| v * s)
    }

    pub fn axpy(&self, s: f64, other: &Self) -> Result<Self> {
        if self.nf != other.nf || self.coeffs.len() != other.coeffs.len() {
            return Err(Error::Invalid("boundary functions have different layouts".into()));
        }
        let mut out = self.clone();
        for (a, b) in out.coeffs.iter_mut().zip(&other.coeffs) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y * s;
            }
        }
        Ok(out)
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        BoundaryFunction { nf: self.nf, coeffs: self.coeffs.iter().map(|c| c.iter().map(|&v| f(v)).collect()).collect() }
    }

    pub fn eval(&self, lp: usize, theta: f64) -> Complex64 {
        let nf = self.nf as i64;
        (-nf..=nf).map(|n| self.coeffs[lp][(n + nf) as usize] * Complex64::from_polar(1.0, n as f64 * theta)).sum()
    }

    /// Complex nodal samples (interior entries zero).
    pub fn sample(&self, mesh: &Mesh) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); mesh.n_nodes()];
        for (l, lp) in mesh.boundary.iter().enumerate() {
            for (j, &i) in lp.nodes.iter().enumerate() {
                out[i] = self.eval(l, lp.angle(j));
            }
        }
        out
    }

    /// Real part of the nodal samples.
    pub fn sample_real(&self, mesh: &Mesh) -> Vec<f64> {
        self.sample(mesh).into_iter().map(|v| v.re).collect()
    }

    /// DFT of nodal values, `c_n = (1/N) sum_j f_j e^{-i n theta_j}`.
    pub fn from_nodal(mesh: &Mesh, vals: &[Complex64], nf: usize) -> Self {
        let coeffs = mesh.boundary.iter().map(|lp| loop_dft(lp, &loop_values(lp, vals), nf)).collect();
        BoundaryFunction { nf, coeffs }
    }

    pub fn from_nodal_real(mesh: &Mesh, vals: &[f64], nf: usize) -> Self {
        let c: Vec<Complex64> = vals.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        Self::from_nodal(mesh, &c, nf)
    }

    /// Tangential derivative `d/dtheta` (spectral).
    pub fn d_theta(&self) -> Self {
        let nf = self.nf as i64;
        let mut out = self.clone();
        for c in out.coeffs.iter_mut() {
            for n in -nf..=nf {
                c[(n + nf) as usize] *= Complex64::new(0.0, n as f64);
            }
        }
        out
    }

    /// Discrete l2 norm of the coefficient vector.
    pub fn coef_norm(&self) -> f64 {
        self.coeffs.iter().flatten().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// CSV rows `loop,n,re,im`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("loop,n,re,im\n");
        let nf = self.nf as i64;
        for (l, c) in self.coeffs.iter().enumerate() {
            for n in -nf..=nf {
                let v = c[(n + nf) as usize];
                s.push_str(&format!("{l},{n},{:.17e},{:.17e}\n", v.re, v.im));
            }
        }
        s
    }
}

fn loop_values(lp: &BoundaryLoop, vals: &[Complex64]) -> Vec<Complex64> {
    lp.angle_ordered().iter().map(|&i| vals[i]).collect()
}

fn loop_dft(_lp: &BoundaryLoop, vals: &[Complex64], nf: usize) -> Vec<Complex64> {
    let n = vals.len();
    let mut buf = vals.to_vec();
    fft(n, false).process(&mut buf);
    let nfi = nf as i64;
    (-nfi..=nfi)
        .map(|k| if k.unsigned_abs() as usize * 2 >= n { Complex64::new(0.0, 0.0) } else { buf[k.rem_euclid(n as i64) as usize] / n as f64 })
        .collect()
}

fn fft(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    let mut p = FftPlanner::new();
    if inverse {
        p.plan_fft_inverse(n)
    } else {
        p.plan_fft_forward(n)
    }
}

/// Inverts the P1 boundary mass matrix on every loop: returns the nodal
/// density `rho` (per unit Euclidean length) whose hat-function moments are
/// `sigma`. Uniform spacing makes the matrix circulant with symbol
/// `len (2/3 + cos(2 pi k / N)/3)`.
pub fn boundary_density(mesh: &Mesh, sigma: &[f64]) -> Vec<f64> {
    let mut rho = vec![0.0; mesh.n_nodes()];
    for lp in &mesh.boundary {
        let n = lp.len();
        let len = 2.0 * lp.radius * (PI / n as f64).sin();
        let mut buf: Vec<Complex64> = lp.nodes.iter().map(|&i| Complex64::new(sigma[i], 0.0)).collect();
        fft(n, false).process(&mut buf);
        for (k, v) in buf.iter_mut().enumerate() {
            let sym = len * (2.0 / 3.0 + (2.0 * PI * k as f64 / n as f64).cos() / 3.0);
            *v /= sym * n as f64;
        }
        fft(n, true).process(&mut buf);
        for (j, &i) in lp.nodes.iter().enumerate() {
            rho[i] = buf[j].re;
        }
    }
    rho
}

/// Euclidean outward unit normal at a boundary node on loop `lp`.
pub fn outward_normal(mesh: &Mesh, lp: &BoundaryLoop, i: usize) -> [f64; 2] {
    let p = mesh.nodes[i];
    let r = p[0].hypot(p[1]);
    let s = lp.orientation.sign();
    [s * p[0] / r, s * p[1] / r]
}

/// Unit tangent in traversal direction.
pub fn tangent(mesh: &Mesh, lp: &BoundaryLoop, i: usize) -> [f64; 2] {
    let n = outward_normal(mesh, lp, i);
    [-n[1], n[0]]
}
