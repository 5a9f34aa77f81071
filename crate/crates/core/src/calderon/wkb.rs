//! WKB ansatz `u = e^{Phi/h} (a + sum_{j<=N} h^j r_j)` for a phase without
//! critical points, on the spectral grid.
//!
//! With the positive Laplacian, `e^{-Phi/h} (Delta + q) e^{Phi/h} w =
//! -4 d dbar w - (4 Phi'/h) dbar w + q w`, so the orders close with
//! `dbar r_1 = q a / (4 Phi')` and `dbar r_{j+1} = (Delta + q) r_j / (4 Phi')`,
//! leaving a residual `h^N (Delta + q) r_N`.

use num_complex::Complex64;
use serde::Serialize;

use crate::cgo::{fit_loglog, CField, DecayFit, Grid, HoloPoly, Phase, Symbol};
use crate::error::{Error, Result};

/// Centre and width of the `erfc` taper applied before spectral
/// derivatives of the (non-compact) terms. It equals 1 on the unit disk and
/// 0 at the grid edge to within `1e-12`, and its spectrum decays like a
/// Gaussian, so derivatives stay accurate once the width spans a few cells.
pub const WKB_TAPER_CENTER: f64 = 1.15;
pub const WKB_TAPER_WIDTH: f64 = 0.03;

/// Smallest admissible `|Phi'|` on the cutoff support.
pub const WKB_MIN_DERIVATIVE: f64 = 1e-3;

fn inner_cutoff(grid: &Grid) -> Vec<f64> {
    (0..grid.len()).map(|i| 0.5 * libm::erfc((grid.point(i).norm() - WKB_TAPER_CENTER) / WKB_TAPER_WIDTH)).collect()
}

fn check_phase(phase: &Phase) -> Result<()> {
    let m = phase.grad_min();
    if !(m > WKB_MIN_DERIVATIVE) {
        return Err(Error::Invalid(format!("phase '{}' has |Phi'| = {m:.3e} on the domain", phase.label)));
    }
    Ok(())
}

fn mul(f: &[Complex64], w: &[f64]) -> CField {
    f.iter().zip(w).map(|(a, b)| a * b).collect()
}

/// The corrections `r_1 .. r_N`.
pub fn wkb_terms(grid: &Grid, phase: &Phase, a: &HoloPoly, q: &[f64], order: usize) -> Result<Vec<CField>> {
    check_phase(phase)?;
    if q.len() != grid.len() {
        return Err(Error::Invalid("potential does not match the grid".into()));
    }
    let chi = inner_cutoff(grid);
    let dphi: CField = grid.map(|z| 4.0 * phase.derivative(z));
    let mut src: CField = (0..grid.len()).map(|i| q[i] * a.eval(grid.point(i)) / dphi[i]).collect();
    let mut terms = Vec::with_capacity(order);
    for j in 0..order {
        let r = grid.cauchy_transform(&src);
        if j + 1 < order {
            let rc = mul(&r, &chi);
            let lap = grid.apply(&rc, Symbol::Laplacian);
            src = (0..grid.len()).map(|i| chi[i] * (lap[i] + q[i] * rc[i]) / dphi[i]).collect();
        }
        terms.push(r);
    }
    Ok(terms)
}

/// `||e^{-Phi/h} (Delta + q) u||_{L^2(disk)}` for the ansatz truncated after
/// `terms`, evaluated spectrally on the assembled reduced field.
pub fn wkb_residual(grid: &Grid, phase: &Phase, a: &HoloPoly, q: &[f64], terms: &[CField], h: f64) -> f64 {
    let chi = inner_cutoff(grid);
    let w: CField = (0..grid.len())
        .map(|i| {
            let mut v = a.eval(grid.point(i));
            let mut hp = 1.0;
            for r in terms {
                hp *= h;
                v += hp * r[i];
            }
            v * chi[i]
        })
        .collect();
    let mut d = grid.apply_many(&w, &[Symbol::Laplacian, Symbol::Dbar]);
    let dbar = d.pop().unwrap();
    let lap = d.pop().unwrap();
    let res: CField =
        (0..grid.len()).map(|i| lap[i] - 4.0 * phase.derivative(grid.point(i)) / h * dbar[i] + q[i] * w[i]).collect();
    grid.disk_norm(&res, 2.0)
}

#[derive(Clone, Debug, Serialize)]
pub struct WkbReport {
    pub order: usize,
    pub h_list: Vec<f64>,
    pub residuals: Vec<f64>,
    pub fit: Option<DecayFit>,
    /// `||r_j||_{L^2(disk)}`
    pub term_norms: Vec<f64>,
}

pub fn wkb_ansatz(grid: &Grid, phase: &Phase, a: &HoloPoly, q: &[f64], order: usize, hs: &[f64]) -> Result<WkbReport> {
    let terms = wkb_terms(grid, phase, a, q, order)?;
    let residuals: Vec<f64> = hs.iter().map(|&h| wkb_residual(grid, phase, a, q, &terms, h)).collect();
    Ok(WkbReport {
        order,
        h_list: hs.to_vec(),
        fit: fit_loglog(hs, &residuals, 3, 2.0).ok(),
        term_norms: terms.iter().map(|r| grid.disk_norm(r, 2.0)).collect(),
        residuals,
    })
}
