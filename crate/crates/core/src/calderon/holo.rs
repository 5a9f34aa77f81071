//! Boundary characterization of holomorphic extension on the disk:
//! `f` extends holomorphically iff `d_tau f = i Lambda f`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{build_mesh, Domain, Mat2};
use crate::pde_core::{BoundaryFunction, DnMatrix};

use super::dn::{sample_coefficients, schrodinger_dn};

/// `||d_tau f - i Lambda f||_2 / ||f||_{H^1}` on the unit circle, with
/// `d_tau` applied in the Fourier basis.
pub fn holo_trace_test(f: &BoundaryFunction, dn: &DnMatrix) -> Result<f64> {
    if f.coeffs.len() != 1 {
        return Err(Error::Invalid("holomorphic trace test needs a single boundary circle".into()));
    }
    let lf = dn.apply(f)?;
    let dt = f.d_theta();
    let nf = f.nf as i64;
    let (mut num, mut den) = (0.0, 0.0);
    for n in -nf..=nf {
        let r = dt.get(0, n) - Complex64::i() * lf.get(0, n);
        num += r.norm_sqr();
        den += (1.0 + (n * n) as f64) * f.get(0, n).norm_sqr();
    }
    if den == 0.0 {
        return Err(Error::Invalid("zero boundary function".into()));
    }
    Ok((num / den).sqrt())
}

/// Trace of `p(z) = sum c_k z^k` on the unit circle.
pub fn holomorphic_trace(coeffs: &[Complex64], nf: usize) -> Result<BoundaryFunction> {
    if coeffs.len() > nf + 1 {
        return Err(Error::Invalid(format!("degree {} exceeds nf = {nf}", coeffs.len() - 1)));
    }
    let mut f = BoundaryFunction::zeros(1, nf);
    for (k, c) in coeffs.iter().enumerate() {
        f.set(0, k as i64, *c);
    }
    Ok(f)
}

/// Seeded random polynomial coefficients, degree `1..=max_degree`, entries
/// uniform in the unit square.
pub fn random_polynomials(seed: u64, count: usize, max_degree: usize) -> Vec<Vec<Complex64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let deg = rng.gen_range(1..=max_degree.max(1));
            (0..=deg).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct HoloTraceReport {
    pub level: usize,
    pub holomorphic: Vec<f64>,
    pub conjugate: Vec<f64>,
    pub max_holomorphic: f64,
    pub min_conjugate: f64,
}

/// Runs the test on `count` random holomorphic traces and their conjugates
/// for the metric `g` (which should equal a conformal multiple of the
/// identity so that harmonic functions are the flat ones).
pub fn holo_trace_batch(
    level: usize,
    g: &dyn Fn([f64; 2]) -> Mat2,
    seed: u64,
    count: usize,
    max_degree: usize,
    nf: usize,
) -> Result<HoloTraceReport> {
    let mesh = build_mesh(Domain::UnitDisk, level)?;
    let (gs, q) = sample_coefficients(&mesh, g, |_| 0.0);
    let dn = schrodinger_dn(&mesh, &gs, &q, nf)?;
    let polys = random_polynomials(seed, count, max_degree);
    let mut holomorphic = Vec::with_capacity(count);
    let mut conjugate = Vec::with_capacity(count);
    for p in &polys {
        let f = holomorphic_trace(p, nf)?;
        holomorphic.push(holo_trace_test(&f, &dn)?);
        // conj(p) on the circle has modes -k with conjugated coefficients
        let mut fc = BoundaryFunction::zeros(1, nf);
        for (k, c) in p.iter().enumerate() {
            fc.set(0, -(k as i64), c.conj());
        }
        conjugate.push(holo_trace_test(&fc, &dn)?);
    }
    Ok(HoloTraceReport {
        level,
        max_holomorphic: holomorphic.iter().copied().fold(0.0, f64::max),
        min_conjugate: conjugate.iter().copied().fold(f64::INFINITY, f64::min),
        holomorphic,
        conjugate,
    })
}
