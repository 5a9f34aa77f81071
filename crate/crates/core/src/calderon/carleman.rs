//! Empirical check of the boundary Carleman inequality
//!
//! `||v||^2 <= C ( ||P_phi v||^2 + h^-3 ||v||^2_bd + h^-1 ||d_nu v||^2_bd
//!   + h^-1 ||d_tau v||^2_bd )`
//!
//! with `P_phi = e^{-phi/h} (Delta + q) e^{phi/h}` for a harmonic weight
//! `phi` and the positive Laplacian. Test fields carry exact derivatives;
//! integrals use the mesh quadrature.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::Mesh;
use crate::pde_core::{outward_normal, tangent, tri_geometry};

/// Largest admissible `mesh size * max|grad phi| / h`.
pub const CARLEMAN_RESOLUTION: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Weight {
    /// `Re z`
    ReZ,
    /// `Re z^2`
    ReZ2,
}

impl Weight {
    pub fn parse(s: &str) -> Result<Weight> {
        match s {
            "re-z" => Ok(Weight::ReZ),
            "re-z2" => Ok(Weight::ReZ2),
            _ => Err(Error::Invalid(format!("unknown Carleman weight '{s}'"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Weight::ReZ => "re-z",
            Weight::ReZ2 => "re-z2",
        }
    }

    pub fn value(self, x: [f64; 2]) -> f64 {
        match self {
            Weight::ReZ => x[0],
            Weight::ReZ2 => x[0] * x[0] - x[1] * x[1],
        }
    }

    pub fn grad(self, x: [f64; 2]) -> [f64; 2] {
        match self {
            Weight::ReZ => [1.0, 0.0],
            Weight::ReZ2 => [2.0 * x[0], -2.0 * x[1]],
        }
    }

    /// Bound for `|grad phi|` on the unit disk.
    pub fn grad_bound(self) -> f64 {
        match self {
            Weight::ReZ => 1.0,
            Weight::ReZ2 => 2.0,
        }
    }
}

/// Value, gradient and Euclidean Laplacian `v_xx + v_yy`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    pub v: f64,
    pub grad: [f64; 2],
    pub lap: f64,
}

pub trait TestField: Sync {
    fn jet(&self, x: [f64; 2], w: Weight, h: f64) -> Jet;
}

/// Band-limited field `sum a_k cos(k . x + b_k)`.
#[derive(Clone, Debug, Serialize)]
pub struct Wave {
    pub modes: Vec<(f64, [f64; 2], f64)>,
}

impl Wave {
    pub fn random(rng: &mut ChaCha8Rng, count: usize, kmax: f64) -> Wave {
        let modes = (0..count)
            .map(|_| {
                let r = kmax * rng.gen::<f64>().sqrt();
                let t = rng.gen_range(0.0..std::f64::consts::TAU);
                (rng.gen_range(-1.0..1.0), [r * t.cos(), r * t.sin()], rng.gen_range(0.0..std::f64::consts::TAU))
            })
            .collect();
        Wave { modes }
    }
}

impl TestField for Wave {
    fn jet(&self, x: [f64; 2], _: Weight, _: f64) -> Jet {
        let mut j = Jet { v: 0.0, grad: [0.0; 2], lap: 0.0 };
        for &(a, k, b) in &self.modes {
            let arg = k[0] * x[0] + k[1] * x[1] + b;
            let (s, c) = arg.sin_cos();
            j.v += a * c;
            j.grad[0] -= a * k[0] * s;
            j.grad[1] -= a * k[1] * s;
            j.lap -= a * (k[0] * k[0] + k[1] * k[1]) * c;
        }
        j
    }
}

/// `v = e^{-phi/h} Re p(z)` with `p` a polynomial, so that the conjugated
/// operator vanishes when `q = 0`.
#[derive(Clone, Debug)]
pub struct ConjugatedHarmonic {
    pub coeffs: Vec<Complex64>,
}

impl TestField for ConjugatedHarmonic {
    fn jet(&self, x: [f64; 2], w: Weight, h: f64) -> Jet {
        let z = Complex64::new(x[0], x[1]);
        let p = self.coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c);
        let dp = self.coeffs.iter().enumerate().skip(1).rev().fold(Complex64::new(0.0, 0.0), |acc, (k, c)| acc * z + c * k as f64);
        let u = p.re;
        let gu = [dp.re, -dp.im];
        let gp = w.grad(x);
        let e = (-w.value(x) / h).exp();
        let gg = gp[0] * gp[0] + gp[1] * gp[1];
        let pu = gp[0] * gu[0] + gp[1] * gu[1];
        Jet {
            v: e * u,
            grad: [e * (gu[0] - u * gp[0] / h), e * (gu[1] - u * gp[1] / h)],
            // u and phi harmonic
            lap: e * (-2.0 * pu / h + gg * u / (h * h)),
        }
    }
}

/// `P_phi v = -lap v - (2/h) grad phi . grad v - |grad phi|^2 v / h^2 + q v`.
pub fn conjugated(j: &Jet, gp: [f64; 2], q: f64, h: f64) -> f64 {
    let gg = gp[0] * gp[0] + gp[1] * gp[1];
    -j.lap - 2.0 / h * (gp[0] * j.grad[0] + gp[1] * j.grad[1]) - gg * j.v / (h * h) + q * j.v
}

/// The five integrals entering the inequality.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CarlemanTerms {
    pub h: f64,
    pub lhs: f64,
    pub interior: f64,
    pub boundary: f64,
    pub normal: f64,
    pub tangential: f64,
}

impl CarlemanTerms {
    pub fn rhs(&self) -> f64 {
        self.interior + self.boundary / self.h.powi(3) + (self.normal + self.tangential) / self.h
    }

    pub fn ratio(&self) -> f64 {
        self.rhs() / self.lhs
    }
}

pub fn carleman_terms(mesh: &Mesh, w: Weight, q: &(dyn Fn([f64; 2]) -> f64 + Sync), v: &dyn TestField, h: f64) -> Result<CarlemanTerms> {
    let res = mesh.max_edge_length() * w.grad_bound() / h;
    if res > CARLEMAN_RESOLUTION {
        return Err(Error::UnderResolved { spacing: mesh.max_edge_length(), limit: CARLEMAN_RESOLUTION * h / w.grad_bound() });
    }
    let geom = tri_geometry(mesh)?;
    let parts: Vec<(f64, f64)> = geom
        .par_iter()
        .map(|t| {
            let (mut a, mut b) = (0.0, 0.0);
            for m in 0..3 {
                let x = t.qp(mesh, m);
                let j = v.jet(x, w, h);
                a += j.v * j.v;
                b += conjugated(&j, w.grad(x), q(x), h).powi(2);
            }
            (a * t.area / 3.0, b * t.area / 3.0)
        })
        .collect();
    // ordered sum keeps the result independent of the thread count
    let (lhs, interior) = parts.iter().fold((0.0, 0.0), |x, y| (x.0 + y.0, x.1 + y.1));
    let (mut boundary, mut normal, mut tangential) = (0.0, 0.0, 0.0);
    for lp in &mesh.boundary {
        let ds = lp.arc_step();
        for &i in &lp.nodes {
            let x = mesh.nodes[i];
            let j = v.jet(x, w, h);
            let n = outward_normal(mesh, lp, i);
            let t = tangent(mesh, lp, i);
            boundary += ds * j.v * j.v;
            normal += ds * (n[0] * j.grad[0] + n[1] * j.grad[1]).powi(2);
            tangential += ds * (t[0] * j.grad[0] + t[1] * j.grad[1]).powi(2);
        }
    }
    Ok(CarlemanTerms { h, lhs, interior, boundary, normal, tangential })
}

#[derive(Clone, Debug, Serialize)]
pub struct CarlemanReport {
    pub level: usize,
    pub weight: Weight,
    pub h_list: Vec<f64>,
    /// `ratios[field][h]`; zero fields are skipped
    pub ratios: Vec<Vec<f64>>,
    pub min_by_h: Vec<f64>,
    pub min_ratio: f64,
}

/// RHS/LHS for every field and `h`; returns the minimum as the empirical
/// constant `c0`.
pub fn carleman_verify(
    mesh: &Mesh,
    w: Weight,
    q: &(dyn Fn([f64; 2]) -> f64 + Sync),
    fields: &[&dyn TestField],
    hs: &[f64],
) -> Result<CarlemanReport> {
    let mut ratios = Vec::with_capacity(fields.len());
    for f in fields {
        let mut row = Vec::with_capacity(hs.len());
        for &h in hs {
            let t = carleman_terms(mesh, w, q, *f, h)?;
            if t.lhs > 0.0 {
                row.push(t.ratio());
            }
        }
        if row.len() == hs.len() {
            ratios.push(row);
        }
    }
    if ratios.is_empty() {
        return Err(Error::Invalid("no non-zero test field".into()));
    }
    let min_by_h: Vec<f64> = (0..hs.len()).map(|k| ratios.iter().map(|r| r[k]).fold(f64::INFINITY, f64::min)).collect();
    Ok(CarlemanReport {
        level: mesh.level,
        weight: w,
        h_list: hs.to_vec(),
        min_ratio: min_by_h.iter().copied().fold(f64::INFINITY, f64::min),
        min_by_h,
        ratios,
    })
}

/// `count` seeded random waves with `modes` terms and `|k| <= kmax`.
pub fn random_waves(seed: u64, count: usize, modes: usize, kmax: f64) -> Vec<Wave> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| Wave::random(&mut rng, modes, kmax)).collect()
}
