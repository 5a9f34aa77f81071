//! Conjugated inverses, the operator `T_h` and the Neumann-series
//! construction of CGO remainders.
//!
//! With `Delta = -4 d dbar`, the solution `v = e^{Phi/h}(a + r)` of
//! `(Delta + q) v = 0` is obtained from `s = sum_j T^j dbar*_psi^{-1}(qt a)`,
//! `r = -dbar_psi^{-1} s`, where `qt = -q/4` and
//! `T = -dbar*_psi^{-1} qt dbar_psi^{-1}`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

use super::grid::{CField, Grid, Symbol};
use super::phase::Phase;

/// Holomorphic polynomial amplitude.
#[derive(Clone, Debug)]
pub struct HoloPoly {
    pub coeffs: Vec<Complex64>,
}

impl HoloPoly {
    pub fn one() -> HoloPoly {
        HoloPoly { coeffs: vec![Complex64::new(1.0, 0.0)] }
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c)
    }

    pub fn derivative(&self, z: Complex64) -> Complex64 {
        self.coeffs.iter().enumerate().skip(1).rev().fold(Complex64::new(0.0, 0.0), |acc, (k, c)| acc * z + c * k as f64)
    }
}

/// Neumann-series controls. `terms = Some(J)` sums exactly `J + 1` terms;
/// otherwise the series stops once a term drops below `tol` times the first.
#[derive(Clone, Debug)]
pub struct CgoOptions {
    pub tol: f64,
    pub max_terms: usize,
    pub terms: Option<usize>,
    /// record the PDE residual after every partial sum
    pub track_residual: bool,
}

impl Default for CgoOptions {
    fn default() -> Self {
        CgoOptions { tol: 1e-3, max_terms: 60, terms: None, track_residual: false }
    }
}

/// A CGO solution sampled on the grid, in reduced form: the solution is
/// `e^{theta/h} A` with `A = a + r` (or its conjugate for antiholomorphic
/// solutions). Derivative fields are the `d` and `dbar` parts of `A`.
#[derive(Clone, Debug)]
pub struct CgoSolution {
    /// the holomorphic phase; antiholomorphic solutions use its conjugate
    pub phase: Phase,
    pub antiholomorphic: bool,
    pub h: f64,
    /// index of the last Neumann term summed
    pub terms: usize,
    pub amp: CField,
    pub amp_d: CField,
    pub amp_dbar: CField,
    pub r: CField,
    pub r_d: CField,
    pub r_dbar: CField,
    pub s: CField,
    pub term_norms: Vec<f64>,
    /// largest ratio of consecutive term norms
    pub contraction: f64,
    /// `||e^{-theta/h} (Delta + q) v||_2` over the unit disk
    pub residual: f64,
    pub residual_history: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CgoNorms {
    pub h: f64,
    pub r: [f64; 2],
    pub dr: [f64; 2],
}

impl CgoSolution {
    /// `(d theta, dbar theta)` at `z`.
    pub fn phase_grad(&self, z: Complex64) -> (Complex64, Complex64) {
        let d = self.phase.derivative(z);
        if self.antiholomorphic {
            (Complex64::new(0.0, 0.0), d.conj())
        } else {
            (d, Complex64::new(0.0, 0.0))
        }
    }

    pub fn phase_value(&self, z: Complex64) -> Complex64 {
        let p = self.phase.eval(z);
        if self.antiholomorphic {
            p.conj()
        } else {
            p
        }
    }

    /// Reduced derivative parts `e^{-theta/h} (d v, dbar v)` at grid index `i`.
    pub fn reduced_grad(&self, grid: &Grid, i: usize) -> (Complex64, Complex64) {
        let (pd, pb) = self.phase_grad(grid.point(i));
        let a = self.amp[i];
        (pd / self.h * a + self.amp_d[i], pb / self.h * a + self.amp_dbar[i])
    }

    /// L^2 and L^4 norms of the remainder and its gradient over the disk.
    pub fn norms(&self, grid: &Grid) -> CgoNorms {
        let grad: CField = self
            .r_d
            .iter()
            .zip(&self.r_dbar)
            .map(|(a, b)| Complex64::new((2.0 * (a.norm_sqr() + b.norm_sqr())).sqrt(), 0.0))
            .collect();
        CgoNorms {
            h: self.h,
            r: [grid.disk_norm(&self.r, 2.0), grid.disk_norm(&self.r, 4.0)],
            dr: [grid.disk_norm(&grad, 2.0), grid.disk_norm(&grad, 4.0)],
        }
    }
}

fn oscillation(grid: &Grid, phase: &Phase, h: f64, sign: f64) -> CField {
    grid.map(|z| Complex64::from_polar(1.0, sign * 2.0 * phase.psi(z) / h))
}

fn check(grid: &Grid, phase: &Phase, h: f64) -> Result<()> {
    if !(h > 0.0) {
        return Err(Error::Invalid(format!("h must be positive, got {h}")));
    }
    grid.check_resolution(h, phase.grad_max())
}

/// Precomputed factors for one `(phase, h)` pair.
struct Conjugator<'a> {
    grid: &'a Grid,
    chi: Vec<f64>,
    minus: CField,
    plus: CField,
}

impl<'a> Conjugator<'a> {
    fn new(grid: &'a Grid, phase: &Phase, h: f64) -> Result<Self> {
        check(grid, phase, h)?;
        Ok(Conjugator { grid, chi: grid.cutoff_field(), minus: oscillation(grid, phase, h, -1.0), plus: oscillation(grid, phase, h, 1.0) })
    }

    fn prepare(&self, f: &[Complex64], osc: &[Complex64]) -> CField {
        f.par_iter().zip(osc).zip(&self.chi).map(|((v, e), c)| v * e * c).collect()
    }

    fn dbar_inv(&self, f: &[Complex64]) -> CField {
        self.grid.apply(&self.prepare(f, &self.minus), Symbol::DbarInv)
    }

    fn dbar_star_inv(&self, f: &[Complex64]) -> CField {
        self.grid.apply(&self.prepare(f, &self.plus), Symbol::DInv)
    }

    fn t(&self, f: &[Complex64], qt: &[f64]) -> CField {
        let inner = self.dbar_inv(f);
        let w: CField = inner.iter().zip(qt).map(|(v, q)| v * q).collect();
        self.dbar_star_inv(&w).into_iter().map(|v| -v).collect()
    }
}

/// `R dbar^{-1} e^{-2 i psi/h} E f`.
pub fn dbar_psi_inv(grid: &Grid, f: &[Complex64], phase: &Phase, h: f64) -> Result<CField> {
    Ok(Conjugator::new(grid, phase, h)?.dbar_inv(f))
}

/// `R d^{-1} e^{2 i psi/h} E f`.
pub fn dbar_psi_star_inv(grid: &Grid, f: &[Complex64], phase: &Phase, h: f64) -> Result<CField> {
    Ok(Conjugator::new(grid, phase, h)?.dbar_star_inv(f))
}

/// `T_h f = -dbar*_psi^{-1}(qt dbar_psi^{-1} f)` with `qt = -q/4`.
pub fn apply_th(grid: &Grid, f: &[Complex64], phase: &Phase, q: &[f64], h: f64) -> Result<CField> {
    let qt: Vec<f64> = q.iter().map(|v| -0.25 * v).collect();
    Ok(Conjugator::new(grid, phase, h)?.t(f, &qt))
}

/// Builds `v = e^{phase/h}(a + r)`; with `antiholomorphic` the returned
/// solution is the conjugate `e^{conj(phase)/h}(conj a + conj r)`, which
/// solves the same equation for real `q`.
pub fn build_cgo(
    grid: &Grid,
    phase: &Phase,
    a: &HoloPoly,
    q: &[f64],
    h: f64,
    antiholomorphic: bool,
    opts: &CgoOptions,
) -> Result<CgoSolution> {
    if q.len() != grid.len() {
        return Err(Error::Invalid("potential does not match the grid".into()));
    }
    if q.iter().any(|v| !v.is_finite()) {
        return Err(Error::Invalid("potential has non-finite values".into()));
    }
    let conj = Conjugator::new(grid, phase, h)?;
    let qt: Vec<f64> = q.iter().map(|v| -0.25 * v).collect();
    let pts = grid.points();
    let av: CField = pts.iter().map(|&z| a.eval(z)).collect();
    let ad: CField = pts.iter().map(|&z| a.derivative(z)).collect();
    let zero = vec![Complex64::new(0.0, 0.0); grid.len()];

    let f0: CField = av.iter().zip(&qt).map(|(v, q)| v * q).collect();
    let mut term = conj.dbar_star_inv(&f0);
    let mut s = zero.clone();
    let mut term_norms = Vec::new();
    let mut contraction: f64 = 0.0;
    let mut residual_history = Vec::new();
    let q_is_zero = q.iter().all(|&v| v == 0.0);
    let mut j = 0;
    loop {
        let nrm = grid.disk_norm(&term, 2.0);
        if let Some(&prev) = term_norms.last() {
            let ratio: f64 = if prev > 0.0 { nrm / prev } else { 0.0 };
            contraction = contraction.max(ratio);
            if ratio >= 1.0 {
                return Err(Error::SeriesDivergence { ratio });
            }
        }
        term_norms.push(nrm);
        s.par_iter_mut().zip(&term).for_each(|(a, b)| *a += b);
        if opts.track_residual {
            residual_history.push(step_residual(grid, &conj, &term, q));
        }
        let done = match opts.terms {
            Some(jmax) => j >= jmax,
            None => q_is_zero || nrm <= opts.tol * term_norms[0],
        };
        if done {
            break;
        }
        if j + 1 >= opts.max_terms {
            return Err(Error::SeriesDivergence { ratio: contraction });
        }
        term = conj.t(&term, &qt);
        j += 1;
    }
    let residual = match residual_history.last() {
        Some(&r) => r,
        None => step_residual(grid, &conj, &term, q),
    };

    let src = conj.prepare(&s, &conj.minus);
    let mut out = grid.apply_many(&src, &[Symbol::DbarInv, Symbol::DDbarInv]);
    let r_d: CField = out.pop().unwrap().into_iter().map(|v| -v).collect();
    let r: CField = out.pop().unwrap().into_iter().map(|v| -v).collect();
    let r_dbar: CField = src.iter().map(|v| -v).collect();

    let amp: CField = av.iter().zip(&r).map(|(a, r)| a + r).collect();
    let amp_d: CField = ad.iter().zip(&r_d).map(|(a, r)| a + r).collect();
    let amp_dbar = r_dbar.clone();
    let mut sol = CgoSolution {
        phase: phase.clone(),
        antiholomorphic: false,
        h,
        terms: j,
        amp,
        amp_d,
        amp_dbar,
        r,
        r_d,
        r_dbar,
        s,
        term_norms,
        contraction,
        residual,
        residual_history,
    };
    if antiholomorphic {
        sol = conjugate(sol);
    }
    Ok(sol)
}

/// Residual of the partial sum ending with `last`: `-q dbar_psi^{-1}(last)`.
fn step_residual(grid: &Grid, conj: &Conjugator, last: &[Complex64], q: &[f64]) -> f64 {
    let d = conj.dbar_inv(last);
    let w: CField = d.iter().zip(q).map(|(v, q)| v * q).collect();
    grid.disk_norm(&w, 2.0)
}

fn conjugate(mut s: CgoSolution) -> CgoSolution {
    let c = |v: &mut CField| v.iter_mut().for_each(|x| *x = x.conj());
    c(&mut s.amp);
    c(&mut s.r);
    c(&mut s.s);
    // d(conj f) = conj(dbar f)
    let (ad, ab) = (std::mem::take(&mut s.amp_d), std::mem::take(&mut s.amp_dbar));
    s.amp_d = ab.into_iter().map(|x| x.conj()).collect();
    s.amp_dbar = ad.into_iter().map(|x| x.conj()).collect();
    let (rd, rb) = (std::mem::take(&mut s.r_d), std::mem::take(&mut s.r_dbar));
    s.r_d = rb.into_iter().map(|x| x.conj()).collect();
    s.r_dbar = rd.into_iter().map(|x| x.conj()).collect();
    s.antiholomorphic = true;
    s
}
