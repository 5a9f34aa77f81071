//! One-parameter metric families `s -> g(x, s)` and their jets at `s = 0`.
//!
//! Every family exposes Taylor coefficients of `g(x, .)` at the origin; the
//! jets (`k = g^-1`, its derivatives, `h = Tr(k dg/ds)` and `d = sqrt(det g)`
//! with theirs) are produced from those coefficients by truncated power-series
//! arithmetic, so closed-form families yield exact jets.

use std::sync::Arc;

use nalgebra::{Matrix2, SMatrix, SVector};

use super::mesh::Mesh;
use crate::error::{Error, Result};

pub type Mat2 = Matrix2<f64>;

/// Truncation order of the Taylor expansions carried around.
pub const SERIES_ORDER: usize = 4;
type Series = [Mat2; SERIES_ORDER + 1];
type ScalarSeries = [f64; SERIES_ORDER + 1];

pub trait MetricFamily: Send + Sync {
    fn name(&self) -> String;

    /// `g`, `dg/ds`, `d2g/ds2` at `(x, s)`.
    fn eval_d2(&self, x: [f64; 2], s: f64) -> [Mat2; 3];

    /// Taylor coefficients `g^(n)(x, 0) / n!` for `n <= 4`.
    fn taylor0(&self, x: [f64; 2]) -> Series;

    fn eval(&self, x: [f64; 2], s: f64) -> Mat2 {
        self.eval_d2(x, s)[0]
    }

    fn s_max(&self) -> f64 {
        0.5
    }

    /// True when `taylor0` is exact rather than finite-differenced.
    fn closed_form(&self) -> bool;

    fn jets0(&self, x: [f64; 2]) -> Result<Jets> {
        Jets::from_taylor(&self.taylor0(x), x)
    }
}

/// Jets at `s = 0`. Derivatives are true derivatives, not Taylor coefficients.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jets {
    pub g: Mat2,
    pub k: Mat2,
    pub k1: Mat2,
    pub k2: Mat2,
    pub k3: Mat2,
    pub h0: f64,
    pub h1: f64,
    pub h2: f64,
    pub h3: f64,
    pub d: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    pub d4: f64,
}

const FACT: [f64; 5] = [1.0, 1.0, 2.0, 6.0, 24.0];

fn spd_check(g: &Mat2, x: [f64; 2], s: f64) -> Result<()> {
    let sym = (g[(0, 1)] - g[(1, 0)]).abs() <= 1e-12 * g.abs().max();
    if !sym || g[(0, 0)] <= 0.0 || g.determinant() <= 0.0 {
        return Err(Error::NotSpd { x: x[0], y: x[1], s });
    }
    Ok(())
}

fn scalar_mul(a: &ScalarSeries, b: &ScalarSeries) -> ScalarSeries {
    let mut c = [0.0; SERIES_ORDER + 1];
    for n in 0..=SERIES_ORDER {
        for m in 0..=n {
            c[n] += a[m] * b[n - m];
        }
    }
    c
}

impl Jets {
    pub fn from_taylor(g: &Series, x: [f64; 2]) -> Result<Jets> {
        spd_check(&g[0], x, 0.0)?;
        let k0 = g[0].try_inverse().ok_or(Error::NotSpd { x: x[0], y: x[1], s: 0.0 })?;
        let mut k: Series = [Mat2::zeros(); SERIES_ORDER + 1];
        k[0] = k0;
        for n in 1..=SERIES_ORDER {
            let mut acc = Mat2::zeros();
            for m in 1..=n {
                acc += g[m] * k[n - m];
            }
            k[n] = -k0 * acc;
        }
        // h(s) = Tr(k g'), needs coefficients up to order 3
        let mut h = [0.0; SERIES_ORDER];
        for (n, hn) in h.iter_mut().enumerate() {
            for m in 0..=n {
                *hn += (k[m] * g[n - m + 1] * (n - m + 1) as f64).trace();
            }
        }
        let e = |i: usize, j: usize| -> ScalarSeries { std::array::from_fn(|n| g[n][(i, j)]) };
        let det = {
            let a = scalar_mul(&e(0, 0), &e(1, 1));
            let b = scalar_mul(&e(0, 1), &e(1, 0));
            std::array::from_fn::<f64, { SERIES_ORDER + 1 }, _>(|n| a[n] - b[n])
        };
        let mut d = [0.0; SERIES_ORDER + 1];
        d[0] = det[0].sqrt();
        for n in 1..=SERIES_ORDER {
            let mut acc = det[n];
            for m in 1..n {
                acc -= d[m] * d[n - m];
            }
            d[n] = acc / (2.0 * d[0]);
        }
        Ok(Jets {
            g: g[0],
            k: k0,
            k1: k[1],
            k2: k[2] * FACT[2],
            k3: k[3] * FACT[3],
            h0: h[0],
            h1: h[1],
            h2: h[2] * FACT[2],
            h3: h[3] * FACT[3],
            d: d[0],
            d1: d[1],
            d2: d[2] * FACT[2],
            d3: d[3] * FACT[3],
            d4: d[4] * FACT[4],
        })
    }

    /// The jets of the flat metric.
    pub fn flat() -> Jets {
        Jets::from_taylor(&euclid_series(), [0.0, 0.0]).expect("identity is SPD")
    }
}

fn euclid_series() -> Series {
    let mut s = [Mat2::zeros(); SERIES_ORDER + 1];
    s[0] = Mat2::identity();
    s
}

/// Per-node jets; errors on the first non-SPD node.
pub fn metric_jets(family: &dyn MetricFamily, mesh: &Mesh) -> Result<Vec<Jets>> {
    mesh.nodes.iter().map(|&x| family.jets0(x)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MinimalityReport {
    pub minimal: bool,
    /// max |Tr(g^-1 dg/ds)| at s = 0
    pub trace_residual: f64,
    /// max |Tr(g k1)|, which vanishes together with the trace at s = 0
    pub k1_trace_residual: f64,
    pub tol: f64,
}

pub fn check_minimality(family: &dyn MetricFamily, mesh: &Mesh) -> Result<MinimalityReport> {
    let tol = if family.closed_form() { 1e-10 } else { 1e-6 };
    let mut tr = 0.0f64;
    let mut tk = 0.0f64;
    for j in metric_jets(family, mesh)? {
        tr = tr.max(j.h0.abs());
        tk = tk.max((j.g * j.k1).trace().abs());
    }
    Ok(MinimalityReport { minimal: tr <= tol && tk <= tol, trace_residual: tr, k1_trace_residual: tk, tol })
}

/// `c0 + cx x + cy y`.
#[derive(Clone, Copy, Debug, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Affine {
    #[serde(default)]
    pub c0: f64,
    #[serde(default)]
    pub cx: f64,
    #[serde(default)]
    pub cy: f64,
}

impl Affine {
    pub const fn constant(c0: f64) -> Self {
        Affine { c0, cx: 0.0, cy: 0.0 }
    }

    pub fn at(&self, x: [f64; 2]) -> f64 {
        self.c0 + self.cx * x[0] + self.cy * x[1]
    }
}

/// Catalog family
/// `g = R(theta) diag(exp(p1(s)), exp(p2(s))) R(theta)^T`, with
/// `p1 = s(alpha + tau) + s^2 beta + s^3 gamma1` and
/// `p2 = s(tau - alpha) + s^2 beta + s^3 gamma2`.
///
/// `tau = 0` gives a minimal family (`Tr(k g') = 2 tau` at the origin); the
/// Euclidean family is the all-zero parameter set.
#[derive(Clone, Debug, Default, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct ExpFamily {
    pub alpha: Affine,
    pub beta: Affine,
    pub gamma1: Affine,
    pub gamma2: Affine,
    pub tau: Affine,
    pub theta: Affine,
}

impl ExpFamily {
    pub fn euclidean() -> Self {
        ExpFamily::default()
    }

    pub fn diag(alpha: f64, beta: f64, gamma1: f64, gamma2: f64) -> Self {
        ExpFamily {
            alpha: Affine::constant(alpha),
            beta: Affine::constant(beta),
            gamma1: Affine::constant(gamma1),
            gamma2: Affine::constant(gamma2),
            ..Default::default()
        }
    }

    /// Spatially varying default used by the identity experiments.
    pub fn standard() -> Self {
        ExpFamily {
            alpha: Affine { c0: 0.6, cx: 0.3, cy: -0.2 },
            beta: Affine { c0: 0.4, cx: -0.2, cy: 0.1 },
            gamma1: Affine { c0: 0.3, cx: 0.1, cy: 0.0 },
            gamma2: Affine { c0: -0.2, cx: 0.0, cy: 0.2 },
            tau: Affine::default(),
            theta: Affine { c0: 0.3, cx: 0.5, cy: 0.2 },
        }
    }

    /// Looks up a catalog entry by name.
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "euclidean" => Ok(Self::euclidean()),
            "diag" => Ok(Self::diag(0.5, 0.3, 0.2, -0.1)),
            "standard" => Ok(Self::standard()),
            other => Err(Error::Invalid(format!(
                "unknown metric family '{other}' (known: euclidean, diag, standard)"
            ))),
        }
    }

    fn polys(&self, x: [f64; 2]) -> ([f64; 4], [f64; 4]) {
        let (a, b, t) = (self.alpha.at(x), self.beta.at(x), self.tau.at(x));
        ([0.0, a + t, b, self.gamma1.at(x)], [0.0, t - a, b, self.gamma2.at(x)])
    }

    fn rotate(&self, x: [f64; 2], d: [f64; 2]) -> Mat2 {
        let th = self.theta.at(x);
        let (c, s) = (th.cos(), th.sin());
        let r = Mat2::new(c, -s, s, c);
        r * Mat2::new(d[0], 0.0, 0.0, d[1]) * r.transpose()
    }
}

/// Taylor coefficients of `exp(p(s))` for a cubic `p` with `p(0) = 0`.
fn exp_series(p: &[f64; 4]) -> ScalarSeries {
    // e' = p' e  =>  (n+1) e_{n+1} = sum_m (m+1) p_{m+1} e_{n-m}
    let mut e = [0.0; SERIES_ORDER + 1];
    e[0] = 1.0;
    for n in 0..SERIES_ORDER {
        let mut acc = 0.0;
        for m in 0..=n.min(2) {
            acc += (m + 1) as f64 * p[m + 1] * e[n - m];
        }
        e[n + 1] = acc / (n + 1) as f64;
    }
    e
}

impl MetricFamily for ExpFamily {
    fn name(&self) -> String {
        "exp".into()
    }

    fn eval_d2(&self, x: [f64; 2], s: f64) -> [Mat2; 3] {
        let (p1, p2) = self.polys(x);
        let val = |p: &[f64; 4]| {
            let v = p[1] * s + p[2] * s * s + p[3] * s * s * s;
            let d1 = p[1] + 2.0 * p[2] * s + 3.0 * p[3] * s * s;
            let d2 = 2.0 * p[2] + 6.0 * p[3] * s;
            let e = v.exp();
            [e, d1 * e, (d2 + d1 * d1) * e]
        };
        let (a, b) = (val(&p1), val(&p2));
        [0, 1, 2].map(|i| self.rotate(x, [a[i], b[i]]))
    }

    fn taylor0(&self, x: [f64; 2]) -> Series {
        let (p1, p2) = self.polys(x);
        let (a, b) = (exp_series(&p1), exp_series(&p2));
        std::array::from_fn(|n| self.rotate(x, [a[n], b[n]]))
    }

    fn closed_form(&self) -> bool {
        true
    }
}

type MetricFn = dyn Fn([f64; 2], f64) -> Mat2 + Send + Sync;

/// Fallback for families given only as a closure: s-jets by polynomial
/// interpolation on a symmetric stencil.
#[derive(Clone)]
pub struct NumericFamily {
    pub label: String,
    pub f: Arc<MetricFn>,
    /// stencil spacing used for the jets at `s = 0`
    pub step: f64,
}

impl std::fmt::Debug for NumericFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NumericFamily").field("label", &self.label).field("step", &self.step).finish()
    }
}

const STENCIL: usize = 9;

impl NumericFamily {
    pub fn new(label: impl Into<String>, f: impl Fn([f64; 2], f64) -> Mat2 + Send + Sync + 'static) -> Self {
        NumericFamily { label: label.into(), f: Arc::new(f), step: 0.05 }
    }

    /// Taylor coefficients up to order 4 at `s0` from the degree-8
    /// interpolant through `s0 + j*step`, `|j| <= 4`.
    fn taylor_at(&self, x: [f64; 2], s0: f64, step: f64) -> Series {
        let half = (STENCIL / 2) as i32;
        let vander = SMatrix::<f64, STENCIL, STENCIL>::from_fn(|i, j| ((i as i32 - half) as f64).powi(j as i32));
        let lu = vander.lu();
        let samples: Vec<Mat2> = (0..STENCIL).map(|i| (self.f)(x, s0 + (i as i32 - half) as f64 * step)).collect();
        let mut out = [Mat2::zeros(); SERIES_ORDER + 1];
        for a in 0..2 {
            for b in 0..2 {
                let rhs = SVector::<f64, STENCIL>::from_fn(|i, _| samples[i][(a, b)]);
                let c = lu.solve(&rhs).expect("Vandermonde on distinct nodes is invertible");
                for n in 0..=SERIES_ORDER {
                    out[n][(a, b)] = c[n] / step.powi(n as i32);
                }
            }
        }
        out
    }
}

impl MetricFamily for NumericFamily {
    fn name(&self) -> String {
        self.label.clone()
    }

    fn eval_d2(&self, x: [f64; 2], s: f64) -> [Mat2; 3] {
        let t = self.taylor_at(x, s, 0.01);
        [t[0], t[1], t[2] * 2.0]
    }

    fn taylor0(&self, x: [f64; 2]) -> Series {
        let mut t = self.taylor_at(x, 0.0, self.step);
        t[0] = (self.f)(x, 0.0);
        t
    }

    fn closed_form(&self) -> bool {
        false
    }
}
