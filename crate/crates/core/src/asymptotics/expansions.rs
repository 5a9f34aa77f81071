//! CGO products behind the second- and third-order expansions.
//!
//! Every solution is kept in reduced form `v = e^{theta/h} A`; products of
//! the catalog solutions carry the combined phase `e^{4 i psi/h}` with
//! `psi = Im Phi`, which is evaluated from the phases themselves rather than
//! assumed.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::cgo::{build_cgo, CgoOptions, CgoSolution, Grid, HoloPoly, PhaseCatalog};
use crate::error::Result;
use crate::geometry::tensor::kappa;
use crate::geometry::Mat2;

type C = Complex64;
const C0: C = C { re: 0.0, im: 0.0 };

/// The three solutions `theta1`, `theta2` (holomorphic) and `theta3`
/// (antiholomorphic) at one `h`.
#[derive(Clone, Debug)]
pub struct ThreeSet {
    pub h: f64,
    pub sols: [CgoSolution; 3],
}

/// The four solutions `phi1 .. phi4`; the second and fourth are
/// antiholomorphic.
#[derive(Clone, Debug)]
pub struct FourSet {
    pub h: f64,
    pub sols: [CgoSolution; 4],
}

pub fn three_set(grid: &Grid, cat: &PhaseCatalog, q: &[f64], h: f64, opts: &CgoOptions) -> Result<ThreeSet> {
    let a = HoloPoly::one();
    Ok(ThreeSet {
        h,
        sols: [
            build_cgo(grid, &cat.theta1, &a, q, h, false, opts)?,
            build_cgo(grid, &cat.theta2, &a, q, h, false, opts)?,
            build_cgo(grid, &cat.theta3_holo, &a, q, h, true, opts)?,
        ],
    })
}

pub fn four_set(grid: &Grid, cat: &PhaseCatalog, q: &[f64], h: f64, opts: &CgoOptions) -> Result<FourSet> {
    let a = HoloPoly::one();
    Ok(FourSet {
        h,
        sols: [
            build_cgo(grid, &cat.phi1, &a, q, h, false, opts)?,
            build_cgo(grid, &cat.phi2_holo, &a, q, h, true, opts)?,
            build_cgo(grid, &cat.phi3, &a, q, h, false, opts)?,
            build_cgo(grid, &cat.phi4_holo, &a, q, h, true, opts)?,
        ],
    })
}

/// Reduced value and Cartesian gradient `e^{-theta/h} (v, v_x, v_y)`.
#[derive(Clone, Copy, Debug)]
struct Local {
    a: C,
    gx: C,
    gy: C,
    /// `d` and `dbar` parts
    d: C,
    db: C,
}

fn local(grid: &Grid, s: &CgoSolution, i: usize) -> Local {
    let (d, db) = s.reduced_grad(grid, i);
    Local { a: s.amp[i], gx: d + db, gy: C::i() * (d - db), d, db }
}

fn bil(k: &Mat2, u: (C, C), v: (C, C)) -> C {
    u.0 * v.0 * k[(0, 0)] + u.0 * v.1 * k[(0, 1)] + u.1 * v.0 * k[(1, 0)] + u.1 * v.1 * k[(1, 1)]
}

fn dot(u: (C, C), v: (C, C)) -> C {
    u.0 * v.0 + u.1 * v.1
}

impl Local {
    fn grad(&self) -> (C, C) {
        (self.gx, self.gy)
    }
}

fn combined_phase(grid: &Grid, sols: &[CgoSolution], h: f64, i: usize) -> C {
    let z = grid.point(i);
    let s: C = sols.iter().map(|s| s.phase_value(z)).sum();
    (s / h).exp()
}

fn disk_indices(grid: &Grid) -> Vec<usize> {
    (0..grid.len()).filter(|&i| grid.point(i).norm() < 1.0).collect()
}

/// Chunk length of the ordered parallel reductions (keeps sums bit-identical
/// across thread counts).
const CHUNK: usize = 4096;

fn sum_vec(a: Vec<C>, b: Vec<C>) -> Vec<C> {
    a.into_iter().zip(b).map(|(x, y)| x + y).collect()
}

/// Terms of the second-order expansion for one tensor field.
#[derive(Clone, Debug, Serialize)]
pub struct ExpansionTerms {
    pub h: f64,
    /// `int v1 K(grad v2, grad v3)`
    pub t1: [f64; 2],
    /// `int v2 K(grad v1, grad v3)`
    pub t2: [f64; 2],
    /// `int v3 K(grad v1, grad v2)`
    pub t3: [f64; 2],
    pub lhs: [f64; 2],
    /// `h^-2 int e^{4 i psi/h} conj(a) kappa(K) theta1' theta2' a^2`
    pub rhs: [f64; 2],
}

pub fn cx(v: [f64; 2]) -> C {
    C::new(v[0], v[1])
}

fn arr(v: C) -> [f64; 2] {
    [v.re, v.im]
}

/// Evaluates the three-term sum and the leading integral for each tensor
/// field in `ks` (grid samples, trace-free and boundary-flat).
pub fn expansion_terms(grid: &Grid, set: &ThreeSet, ks: &[Vec<Mat2>]) -> Vec<ExpansionTerms> {
    let h = set.h;
    let nk = ks.len();
    let idx = disk_indices(grid);
    let [s1, s2, s3] = &set.sols;
    let zero = vec![C0; 4 * nk];
    let acc = idx
        .par_chunks(CHUNK)
        .map(|chunk| {
            chunk.iter().fold(zero.clone(), |mut acc, &i| {
                let e = combined_phase(grid, &set.sols, h, i);
                let (l1, l2, l3) = (local(grid, s1, i), local(grid, s2, i), local(grid, s3, i));
                let z = grid.point(i);
                // leading integrand with a = 1, so conj(a) a^2 = 1
                let lead = s1.phase.derivative(z) * s2.phase.derivative(z) / (h * h);
                for (j, k) in ks.iter().enumerate() {
                    let k = &k[i];
                    acc[4 * j] += e * l1.a * bil(k, l2.grad(), l3.grad());
                    acc[4 * j + 1] += e * l2.a * bil(k, l1.grad(), l3.grad());
                    acc[4 * j + 2] += e * l3.a * bil(k, l1.grad(), l2.grad());
                    acc[4 * j + 3] += e * kappa(k) * lead;
                }
                acc
            })
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(zero.clone(), sum_vec);
    let w = grid.dx * grid.dx;
    (0..nk)
        .map(|j| {
            let (t1, t2, t3, rhs) = (acc[4 * j] * w, acc[4 * j + 1] * w, acc[4 * j + 2] * w, acc[4 * j + 3] * w);
            ExpansionTerms { h, t1: arr(t1), t2: arr(t2), t3: arr(t3), lhs: arr(t1 + t2 + t3), rhs: arr(rhs) }
        })
        .collect()
}

/// `int Q v1 v2 v3` for each scalar field.
pub fn triple_product(grid: &Grid, set: &ThreeSet, qs: &[Vec<f64>]) -> Vec<C> {
    let idx = disk_indices(grid);
    let zero = vec![C0; qs.len()];
    let acc = idx
        .par_chunks(CHUNK)
        .map(|chunk| {
            chunk.iter().fold(zero.clone(), |mut acc, &i| {
                let e = combined_phase(grid, &set.sols, set.h, i);
                let p = set.sols[0].amp[i] * set.sols[1].amp[i] * set.sols[2].amp[i] * e;
                for (j, q) in qs.iter().enumerate() {
                    acc[j] += p * q[i];
                }
                acc
            })
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(zero.clone(), sum_vec);
    acc.into_iter().map(|v| v * grid.dx * grid.dx).collect()
}

/// `int Q [g(1,2) g(3,4) + g(1,3) g(2,4) + g(2,3) g(1,4)]` for each scalar
/// field, flat metric.
pub fn quartic_gradient_sum(grid: &Grid, set: &FourSet, qs: &[Vec<f64>]) -> Vec<C> {
    let idx = disk_indices(grid);
    let zero = vec![C0; qs.len()];
    let acc = idx
        .par_chunks(CHUNK)
        .map(|chunk| {
            chunk.iter().fold(zero.clone(), |mut acc, &i| {
                let e = combined_phase(grid, &set.sols, set.h, i);
                let l: Vec<Local> = set.sols.iter().map(|s| local(grid, s, i)).collect();
                let g = |a: usize, b: usize| dot(l[a].grad(), l[b].grad());
                let p = e * (g(0, 1) * g(2, 3) + g(0, 2) * g(1, 3) + g(1, 2) * g(0, 3));
                for (j, q) in qs.iter().enumerate() {
                    acc[j] += p * q[i];
                }
                acc
            })
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(zero.clone(), sum_vec);
    acc.into_iter().map(|v| v * grid.dx * grid.dx).collect()
}

/// Coefficients of the terms carrying no second linearization.
#[derive(Clone, Debug)]
pub struct HCoefficients {
    pub k2: Vec<Mat2>,
    /// `d^-1 d2` and its `(d, dbar)` parts
    pub dratio: Vec<f64>,
    pub dratio_d: Vec<C>,
    pub dratio_dbar: Vec<C>,
    pub h3: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct HTerms {
    pub h: f64,
    pub h1: [f64; 2],
    pub h2: [f64; 2],
    pub h3: [f64; 2],
    pub h4: [f64; 2],
    pub total: [f64; 2],
}

/// The four terms of `H` with `(j, k, l, m) = (1, 2, 3, 4)`, symmetrized
/// over the first three indices.
pub fn h_terms(grid: &Grid, set: &FourSet, c: &HCoefficients) -> HTerms {
    let idx = disk_indices(grid);
    let others = |i: usize| ((i + 1) % 3, (i + 2) % 3);
    let acc = idx
        .par_chunks(CHUNK)
        .map(|chunk| {
            chunk.iter().fold([C0; 4], |mut acc, &i| {
                let e = combined_phase(grid, &set.sols, set.h, i);
                let l: Vec<Local> = set.sols.iter().map(|s| local(grid, s, i)).collect();
                let k2 = &c.k2[i];
                let dr = c.dratio[i];
                for li in 0..3 {
                    let (a, b) = others(li);
                    acc[0] -= e * l[a].a * l[b].a * bil(k2, l[li].grad(), l[3].grad());
                    // reduced gradient of D v_a v_b
                    let pd = c.dratio_d[i] * l[a].a * l[b].a + dr * (l[a].d * l[b].a + l[a].a * l[b].d);
                    let pb = c.dratio_dbar[i] * l[a].a * l[b].a + dr * (l[a].db * l[b].a + l[a].a * l[b].db);
                    let pg = (pd + pb, C::i() * (pd - pb));
                    acc[1] += e * l[3].a * dot(pg, l[li].grad());
                    acc[2] -= e * l[3].a * bil(k2, l[a].grad(), l[b].grad()) * l[li].a;
                }
                acc[3] -= 0.5 * e * l[3].a * l[0].a * l[1].a * l[2].a * c.h3[i];
                acc
            })
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold([C0; 4], |a, b| [a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]]);
    let w = grid.dx * grid.dx;
    let t: Vec<C> = acc.iter().map(|v| v * w).collect();
    HTerms {
        h: set.h,
        h1: arr(t[0]),
        h2: arr(t[1]),
        h3: arr(t[2]),
        h4: arr(t[3]),
        total: arr(t[0] + t[1] + t[2] + t[3]),
    }
}
