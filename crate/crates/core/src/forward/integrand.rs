//! The area integrand `F(x, s, p) = d(s) sqrt(1 + p^T k(s) p)` and its
//! derivatives up to second order in `(s, p)`.

use nalgebra::Vector2;

use crate::geometry::{Mat2, MetricFamily};

pub type Vec2 = Vector2<f64>;

/// `g`, `k`, `d` and their first two s-derivatives at one point.
#[derive(Clone, Copy, Debug)]
pub struct MetricAt {
    pub k: Mat2,
    pub k1: Mat2,
    pub k2: Mat2,
    pub d: f64,
    pub d1: f64,
    pub d2: f64,
}

impl MetricAt {
    pub fn new(family: &dyn MetricFamily, x: [f64; 2], s: f64) -> MetricAt {
        let [g, g1, g2] = family.eval_d2(x, s);
        let k = g.try_inverse().unwrap_or_else(Mat2::zeros);
        let k1 = -k * g1 * k;
        let k2 = -k * g2 * k + k * g1 * k * g1 * k * 2.0;
        let d = g.determinant().max(0.0).sqrt();
        let t1 = (k * g1).trace();
        let d1 = 0.5 * d * t1;
        let d2 = 0.5 * d1 * t1 + 0.5 * d * ((k1 * g1).trace() + (k * g2).trace());
        MetricAt { k, k1, k2, d, d1, d2 }
    }
}

/// Value, gradient and Hessian of `F` at one point.
#[derive(Clone, Copy, Debug)]
pub struct Integrand {
    pub f: f64,
    /// `F_p`, the flux
    pub fp: Vec2,
    /// `F_s`
    pub fs: f64,
    pub fpp: Mat2,
    pub fsp: Vec2,
    pub fss: f64,
    /// `sqrt(1 + |p|^2_k)`
    pub w: f64,
}

pub fn integrand(m: &MetricAt, p: Vec2) -> Integrand {
    let kp = m.k * p;
    let x = p.dot(&kp);
    let xs = p.dot(&(m.k1 * p));
    let xss = p.dot(&(m.k2 * p));
    let w = (1.0 + x).sqrt();
    let w3 = w * w * w;
    let k1p = m.k1 * p;
    Integrand {
        f: m.d * w,
        fp: kp * (m.d / w),
        fs: m.d1 * w + m.d * xs / (2.0 * w),
        fpp: (m.k / w - kp * kp.transpose() / w3) * m.d,
        fsp: kp * (m.d1 / w) + k1p * (m.d / w) - kp * (m.d * xs / (2.0 * w3)),
        fss: m.d2 * w + m.d1 * xs / w + m.d * xss / (2.0 * w) - m.d * xs * xs / (4.0 * w3),
        w,
    }
}
