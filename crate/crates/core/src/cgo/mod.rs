//! Complex geometric optics on the flat disk: spectral Cauchy transforms,
//! oscillatory conjugated inverses, Neumann-series remainders, the phase
//! catalog and decay-rate sweeps.

mod fit;
mod grid;
mod phase;
mod solution;

pub use fit::{decay_fit, fit_loglog, linear_fit, log_space, DecayFit};
pub use grid::{bessel_j0, boundary_flat, cutoff, CField, Grid, Symbol, EXTENT};
pub use phase::{phase_catalog, phase_catalog_with, Phase, PhaseCatalog, CATALOG_LAMBDA};
pub use solution::{
    apply_th, build_cgo, dbar_psi_inv, dbar_psi_star_inv, CgoNorms, CgoOptions, CgoSolution, HoloPoly,
};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{ExpFamily, MetricFamily};

/// The Schrodinger potential used by the CGO experiments: half the first
/// s-derivative of `h` for the standard catalog family, sampled on the grid
/// (the extension cutoff is applied inside the transforms).
pub fn catalog_potential(grid: &Grid) -> Result<Vec<f64>> {
    let fam = ExpFamily::standard();
    (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let z = grid.point(i);
            if z.norm() >= EXTENT {
                return Ok(0.0);
            }
            Ok(0.5 * fam.jets0([z.re, z.im])?.h1)
        })
        .collect()
}

/// Which remainder to follow in a decay sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SweepPhase {
    /// `Phi = z`
    Line,
    /// `Phi = z^2`
    Morse,
    Theta1,
    Theta2,
    /// antiholomorphic, Morse
    Theta3,
}

impl SweepPhase {
    pub fn parse(s: &str) -> Result<SweepPhase> {
        Ok(match s {
            "line" => SweepPhase::Line,
            "morse" => SweepPhase::Morse,
            "theta1" => SweepPhase::Theta1,
            "theta2" => SweepPhase::Theta2,
            "theta3" => SweepPhase::Theta3,
            _ => return Err(Error::Invalid(format!("unknown phase '{s}'"))),
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            SweepPhase::Line => "line",
            SweepPhase::Morse => "morse",
            SweepPhase::Theta1 => "theta1",
            SweepPhase::Theta2 => "theta2",
            SweepPhase::Theta3 => "theta3",
        }
    }

    /// Holomorphic phase and conjugation flag, with the catalog at `z0 = 0`.
    pub fn resolve(self) -> (Phase, bool) {
        let cat = phase_catalog(Complex64::new(0.0, 0.0)).expect("catalog at the origin");
        match self {
            SweepPhase::Line => (Phase::line(), false),
            SweepPhase::Morse => (Phase::morse(), false),
            SweepPhase::Theta1 => (cat.theta1, false),
            SweepPhase::Theta2 => (cat.theta2, false),
            SweepPhase::Theta3 => (cat.theta3_holo, true),
        }
    }

    pub fn has_critical_point(self) -> bool {
        matches!(self, SweepPhase::Morse | SweepPhase::Theta3)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DecaySweep {
    pub phase: SweepPhase,
    pub norms: Vec<CgoNorms>,
    /// `h` values dropped for violating the resolution rule
    pub excluded: Vec<f64>,
    pub fit_r2: Option<DecayFit>,
    pub fit_dr2: Option<DecayFit>,
    pub fit_r4: Option<DecayFit>,
}

/// Builds the CGO for every admissible `h` and fits the decay of the
/// remainder norms. Under-resolved values are skipped and listed.
pub fn decay_sweep(grid: &Grid, phase: SweepPhase, q: &[f64], hs: &[f64], opts: &CgoOptions) -> Result<DecaySweep> {
    let (ph, anti) = phase.resolve();
    let mut norms = Vec::new();
    let mut excluded = Vec::new();
    for &h in hs {
        match build_cgo(grid, &ph, &HoloPoly::one(), q, h, anti, opts) {
            Ok(sol) => norms.push(sol.norms(grid)),
            Err(Error::UnderResolved { .. }) => excluded.push(h),
            Err(e) => return Err(e),
        }
    }
    let h: Vec<f64> = norms.iter().map(|n| n.h).collect();
    let col = |f: &dyn Fn(&CgoNorms) -> f64| norms.iter().map(f).collect::<Vec<f64>>();
    let fit = |v: Vec<f64>| fit_loglog(&h, &v, 3, 1.0).ok();
    Ok(DecaySweep {
        phase,
        fit_r2: fit(col(&|n| n.r[0])),
        fit_dr2: fit(col(&|n| n.dr[0])),
        fit_r4: fit(col(&|n| n.r[1])),
        norms,
        excluded,
    })
}

/// Smallest `h` the grid resolves for a phase.
pub fn min_admissible_h(grid: &Grid, phase: &Phase) -> f64 {
    grid.dx * 10.0 * phase.grad_max() / std::f64::consts::PI
}
