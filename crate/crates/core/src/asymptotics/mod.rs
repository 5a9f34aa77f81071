//! Stationary-phase checks of the CGO expansions and pointwise recovery of
//! `kappa(K)` and scalar coefficients at an interior point.
//!
//! All experiments run on the flat disk. Leading constants are calibrated
//! on reference profiles; the analytic values `-pi/(4 lambda)`,
//! `pi/(4 lambda)` and `2 pi/lambda` are reported alongside as checks.

mod expansions;
mod profiles;

pub use expansions::{
    cx, four_set, h_terms, expansion_terms, quartic_gradient_sum, three_set, triple_product, FourSet, HCoefficients,
    HTerms, ExpansionTerms, ThreeSet,
};
pub use profiles::{sample, spectral_gradient, Bump, TensorProfile, FLAT_ORDER};

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::cgo::{catalog_potential, fit_loglog, phase_catalog, CgoOptions, DecayFit, Grid, Phase, PhaseCatalog};
use crate::error::{Error, Result};
use crate::geometry::tensor::kappa;
use crate::geometry::Mat2;

type C = Complex64;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct OscillatoryResult {
    pub value: [f64; 2],
    /// difference to the same rule on the 2x coarser sub-grid
    pub error_estimate: f64,
}

/// `int_{|z|<1} e^{4 i Im(phase)/h} A dA` by the midpoint rule on the grid.
pub fn oscillatory_integral(grid: &Grid, amp: &[C], phase: &Phase, h: f64) -> Result<OscillatoryResult> {
    if amp.len() != grid.len() {
        return Err(Error::Invalid("amplitude does not match the grid".into()));
    }
    grid.check_resolution(h, 2.0 * phase.grad_max())?;
    let mut fine = C::new(0.0, 0.0);
    let mut coarse = C::new(0.0, 0.0);
    for i in 0..grid.len() {
        let z = grid.point(i);
        if z.norm() >= 1.0 {
            continue;
        }
        let v = C::from_polar(1.0, 4.0 * phase.psi(z) / h) * amp[i];
        fine += v;
        if (i / grid.n) % 2 == 0 && (i % grid.n) % 2 == 0 {
            coarse += 4.0 * v;
        }
    }
    let w = grid.dx * grid.dx;
    Ok(OscillatoryResult { value: [fine.re * w, fine.im * w], error_estimate: ((fine - coarse) * w).norm() })
}

/// Least-squares limit of `y(h) = c0 + c1 h + c2 h^2` (linear below four
/// points), applied to real and imaginary parts separately.
#[derive(Clone, Debug, Serialize)]
pub struct Extrapolation {
    pub limit: [f64; 2],
    pub slope: [f64; 2],
    pub model: &'static str,
}

fn poly_fit(h: &[f64], y: &[f64], deg: usize) -> Vec<f64> {
    let a = DMatrix::from_fn(h.len(), deg + 1, |i, j| h[i].powi(j as i32));
    let b = DVector::from_column_slice(y);
    let svd = a.svd(true, true);
    svd.solve(&b, 1e-14).map(|c| c.iter().copied().collect()).unwrap_or_else(|_| vec![f64::NAN; deg + 1])
}

pub fn extrapolate(h: &[f64], y: &[C]) -> Extrapolation {
    let deg = if h.len() >= 4 { 2 } else { 1 };
    let re: Vec<f64> = y.iter().map(|v| v.re).collect();
    let im: Vec<f64> = y.iter().map(|v| v.im).collect();
    let a = poly_fit(h, &re, deg);
    let b = poly_fit(h, &im, deg);
    let model = if deg == 2 { "c0 + c1 h + c2 h^2" } else { "c0 + c1 h" };
    Extrapolation { limit: [a[0], b[0]], slope: [a[1], b[1]], model }
}

#[derive(Clone, Debug, Serialize)]
pub struct RecoveryReport {
    pub label: String,
    pub z0: [f64; 2],
    pub h_list: Vec<f64>,
    /// raw integrals per `h`
    pub values: Vec<[f64; 2]>,
    /// calibrated pointwise estimates per `h`
    pub estimates: Vec<[f64; 2]>,
    pub extrapolated: [f64; 2],
    pub truth: [f64; 2],
    pub rel_error_finest: f64,
    pub rel_error_extrapolated: f64,
    /// fitted order of `|estimate(h) - extrapolated|`
    pub remainder_order: Option<f64>,
}

fn report(label: &str, z0: C, hs: &[f64], values: &[C], scale: &dyn Fn(f64) -> f64, cal: C, truth: C) -> RecoveryReport {
    let est: Vec<C> = hs.iter().zip(values).map(|(&h, v)| v * scale(h) / cal).collect();
    let ex = extrapolate(hs, &est);
    let lim = cx(ex.limit);
    let finest = hs.iter().enumerate().fold(0, |b, (i, &h)| if h < hs[b] { i } else { b });
    let tn = truth.norm().max(1e-300);
    let dev: Vec<f64> = est.iter().map(|e| (e - lim).norm()).collect();
    let remainder_order = fit_loglog(hs, &dev, 3, 1.0).ok().map(|f| f.slope);
    RecoveryReport {
        label: label.to_string(),
        z0: [z0.re, z0.im],
        h_list: hs.to_vec(),
        values: values.iter().map(|v| [v.re, v.im]).collect(),
        estimates: est.iter().map(|v| [v.re, v.im]).collect(),
        extrapolated: ex.limit,
        truth: [truth.re, truth.im],
        rel_error_finest: (est[finest] - truth).norm() / tn,
        rel_error_extrapolated: (lim - truth).norm() / tn,
        remainder_order,
    }
}

fn calibrate(hs: &[f64], values: &[C], scale: &dyn Fn(f64) -> f64, truth: C) -> Result<C> {
    if truth.norm() == 0.0 {
        return Err(Error::Calibration("reference profile vanishes at z0".into()));
    }
    let y: Vec<C> = hs.iter().zip(values).map(|(&h, v)| v * scale(h) / truth).collect();
    let c = cx(extrapolate(hs, &y).limit);
    if !c.norm().is_finite() || c.norm() == 0.0 {
        return Err(Error::Calibration(format!("non-finite or zero constant {c}")));
    }
    Ok(c)
}

/// Calibration constants from two references and their relative spread.
#[derive(Clone, Debug, Serialize)]
pub struct Calibration {
    pub primary: [f64; 2],
    pub secondary: [f64; 2],
    pub universality: f64,
    pub analytic: [f64; 2],
}

impl Calibration {
    fn new(a: C, b: C, analytic: C) -> Calibration {
        Calibration { primary: [a.re, a.im], secondary: [b.re, b.im], universality: (a - b).norm() / a.norm(), analytic: [analytic.re, analytic.im] }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SecondOrderReport {
    pub terms: Vec<ExpansionTerms>,
    /// slope of `h |LHS - RHS|`
    pub gap_fit: Option<DecayFit>,
    /// slopes of `h |t1|` and `h |t2|`
    pub t1_fit: Option<DecayFit>,
    pub t2_fit: Option<DecayFit>,
}

#[derive(Clone, Debug, Serialize)]
pub struct KRecovery {
    pub calibration: Calibration,
    pub reports: Vec<RecoveryReport>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ScalarMode {
    SecondOrder,
    ThirdOrder,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScalarRecovery {
    pub mode: ScalarMode,
    pub calibration: Calibration,
    pub reports: Vec<RecoveryReport>,
    pub h_terms: Vec<HTerms>,
    /// slope of `h^3 |H|`
    pub h_fit: Option<DecayFit>,
}

/// A named profile with its exact value at `z0`.
pub struct Target<T> {
    pub label: String,
    pub field: Vec<T>,
    pub truth: C,
}

impl Target<Mat2> {
    pub fn tensor(grid: &Grid, label: &str, p: &TensorProfile, z0: C) -> Target<Mat2> {
        Target { label: label.into(), field: p.sample(grid), truth: kappa(&p.eval([z0.re, z0.im])) }
    }
}

impl Target<f64> {
    pub fn scalar(grid: &Grid, label: &str, b: &Bump, z0: C) -> Target<f64> {
        Target { label: label.into(), field: b.sample(grid), truth: C::new(b.eval([z0.re, z0.im]), 0.0) }
    }
}

/// Grid, phase catalog and potential shared by every sweep.
pub struct Setup {
    pub grid: Grid,
    pub cat: PhaseCatalog,
    pub q: Vec<f64>,
    pub opts: CgoOptions,
}

impl Setup {
    pub fn new(n: usize, z0: C) -> Result<Setup> {
        let grid = Grid::new(n)?;
        let q = catalog_potential(&grid)?;
        Ok(Setup { grid, cat: phase_catalog(z0)?, q, opts: CgoOptions::default() })
    }

    pub fn with_potential(n: usize, z0: C, q: impl Fn([f64; 2]) -> f64) -> Result<Setup> {
        let grid = Grid::new(n)?;
        let q = sample(&grid, q);
        Ok(Setup { grid, cat: phase_catalog(z0)?, q, opts: CgoOptions::default() })
    }

    /// Smallest `h` for which every catalog transform is resolved.
    pub fn min_h(&self) -> f64 {
        let c = &self.cat;
        let g = [&c.theta1, &c.theta2, &c.theta3_holo, &c.phi1, &c.phi2_holo, &c.phi3, &c.phi4_holo]
            .iter()
            .map(|p| p.grad_max())
            .fold(0.0, f64::max);
        self.grid.dx * 10.0 * g / PI
    }

    /// Rejects sweeps with fewer than three values or below [`Setup::min_h`].
    pub fn check_hs(&self, hs: &[f64]) -> Result<()> {
        if hs.len() < 3 {
            return Err(Error::Invalid("need at least three h values".into()));
        }
        let lo = self.min_h();
        if let Some(h) = hs.iter().find(|&&h| h < lo * (1.0 - 1e-12)) {
            return Err(Error::UnderResolved { spacing: self.grid.dx, limit: self.grid.dx * h / lo });
        }
        Ok(())
    }

    /// Runs the three-solution sweep, evaluating the second-order terms for
    /// every tensor field and the triple product for every scalar field.
    pub fn three_sweep(&self, hs: &[f64], ks: &[&[Mat2]], qs: &[&[f64]]) -> Result<Vec<(Vec<ExpansionTerms>, Vec<C>)>> {
        self.check_hs(hs)?;
        let ks: Vec<Vec<Mat2>> = ks.iter().map(|k| k.to_vec()).collect();
        let qs: Vec<Vec<f64>> = qs.iter().map(|q| q.to_vec()).collect();
        hs.iter()
            .map(|&h| {
                let set = three_set(&self.grid, &self.cat, &self.q, h, &self.opts)?;
                Ok((expansion_terms(&self.grid, &set, &ks), triple_product(&self.grid, &set, &qs)))
            })
            .collect()
    }

    /// Runs the four-solution sweep.
    pub fn four_sweep(&self, hs: &[f64], qs: &[&[f64]], hc: Option<&HCoefficients>) -> Result<Vec<(Vec<C>, Option<HTerms>)>> {
        self.check_hs(hs)?;
        let qs: Vec<Vec<f64>> = qs.iter().map(|q| q.to_vec()).collect();
        hs.iter()
            .map(|&h| {
                let set = four_set(&self.grid, &self.cat, &self.q, h, &self.opts)?;
                Ok((quartic_gradient_sum(&self.grid, &set, &qs), hc.map(|c| h_terms(&self.grid, &set, c))))
            })
            .collect()
    }

    pub fn verify_second_order(&self, k: &[Mat2], hs: &[f64]) -> Result<SecondOrderReport> {
        let sweep = self.three_sweep(hs, &[k], &[])?;
        let terms: Vec<ExpansionTerms> = sweep.into_iter().map(|(mut t, _)| t.remove(0)).collect();
        let fit = |f: &dyn Fn(&ExpansionTerms) -> f64| {
            let y: Vec<f64> = terms.iter().map(f).collect();
            fit_loglog(hs, &y, 3, 1.0).ok()
        };
        Ok(SecondOrderReport {
            gap_fit: fit(&|t| t.h * (cx(t.lhs) - cx(t.rhs)).norm()),
            t1_fit: fit(&|t| t.h * cx(t.t1).norm()),
            t2_fit: fit(&|t| t.h * cx(t.t2).norm()),
            terms,
        })
    }

    /// Calibrates `h * LHS(h) -> C kappa(z0)` on two references and
    /// recovers `kappa(z0)` for each target.
    pub fn recover_k(&self, refs: [&Target<Mat2>; 2], targets: &[&Target<Mat2>], hs: &[f64]) -> Result<KRecovery> {
        let mut fields: Vec<&[Mat2]> = refs.iter().map(|t| t.field.as_slice()).collect();
        fields.extend(targets.iter().map(|t| t.field.as_slice()));
        let sweep = self.three_sweep(hs, &fields, &[])?;
        let col = |j: usize| sweep.iter().map(|(t, _)| cx(t[j].lhs)).collect::<Vec<C>>();
        let scale = |h: f64| h;
        let c1 = calibrate(hs, &col(0), &scale, refs[0].truth)?;
        let c2 = calibrate(hs, &col(1), &scale, refs[1].truth)?;
        let analytic = C::new(-PI / (4.0 * self.cat.lambda), 0.0);
        let reports = targets
            .iter()
            .enumerate()
            .map(|(j, t)| report(&t.label, self.cat.z0, hs, &col(j + 2), &scale, c1, t.truth))
            .collect();
        Ok(KRecovery { calibration: Calibration::new(c1, c2, analytic), reports })
    }

    /// Recovers a scalar at `z0` from the triple product (second order) or
    /// the quartic gradient sum (third order). In third order the `H` terms
    /// built from `hc` are evaluated along the sweep.
    pub fn recover_scalar(
        &self,
        mode: ScalarMode,
        refs: [&Target<f64>; 2],
        targets: &[&Target<f64>],
        hs: &[f64],
        hc: Option<&HCoefficients>,
    ) -> Result<ScalarRecovery> {
        let mut fields: Vec<&[f64]> = refs.iter().map(|t| t.field.as_slice()).collect();
        fields.extend(targets.iter().map(|t| t.field.as_slice()));
        let lam = self.cat.lambda;
        let (values, h_terms, scale, analytic): (Vec<Vec<C>>, Vec<HTerms>, fn(f64) -> f64, C) = match mode {
            ScalarMode::SecondOrder => {
                let sweep = self.three_sweep(hs, &[], &fields)?;
                (sweep.into_iter().map(|(_, v)| v).collect(), vec![], |h| 1.0 / h, C::new(PI / (4.0 * lam), 0.0))
            }
            ScalarMode::ThirdOrder => {
                let sweep = self.four_sweep(hs, &fields, hc)?;
                let ht = sweep.iter().filter_map(|(_, t)| t.clone()).collect();
                (sweep.into_iter().map(|(v, _)| v).collect(), ht, |h| h * h * h, C::new(2.0 * PI / lam, 0.0))
            }
        };
        let col = |j: usize| values.iter().map(|v| v[j]).collect::<Vec<C>>();
        let c1 = calibrate(hs, &col(0), &scale, refs[0].truth)?;
        let c2 = calibrate(hs, &col(1), &scale, refs[1].truth)?;
        let reports = targets
            .iter()
            .enumerate()
            .map(|(j, t)| report(&t.label, self.cat.z0, hs, &col(j + 2), &scale, c1, t.truth))
            .collect();
        let h_fit = if h_terms.is_empty() {
            None
        } else {
            let y: Vec<f64> = h_terms.iter().map(|t: &HTerms| t.h.powi(3) * cx(t.total).norm()).collect();
            fit_loglog(hs, &y, 3, 1.0).ok()
        };
        Ok(ScalarRecovery { mode, calibration: Calibration::new(c1, c2, analytic), reports, h_terms, h_fit })
    }

    /// Synthetic boundary-flat coefficients for the `H` terms.
    pub fn synthetic_h_coefficients(&self) -> HCoefficients {
        let g = &self.grid;
        let k2 = TensorProfile::Diagonal(Bump::new(0.8, [0.1, 0.0], 0.5));
        let k2b = TensorProfile::OffDiagonal(Bump::new(0.5, [-0.1, 0.2], 0.6));
        let k2: Vec<Mat2> = k2.sample(g).iter().zip(k2b.sample(g)).map(|(a, b)| a + b + Mat2::identity() * (a[(0, 0)] * 0.5)).collect();
        let dratio = Bump::new(0.7, [0.0, -0.1], 0.5).sample(g);
        let (dratio_d, dratio_dbar) = spectral_gradient(g, &dratio);
        let h3 = Bump::new(1.2, [0.2, 0.1], 0.4).sample(g);
        HCoefficients { k2, dratio, dratio_d, dratio_dbar, h3 }
    }
}
