//! Integral identities for the second and third linearizations.
//!
//! The left-hand side `int f_m d^n Lambda(f_eps) dS_g` comes from mixed
//! differences of the nonlinear DN map (fixed conormal); the right-hand sides
//! are assembled term by term from the linearized fields.
//!
//! Both identities are evaluated in two forms: the printed one and the one
//! obtained by redoing the integrations by parts under the positive
//! Laplacian convention. The corrected forms are
//!
//! * second order: `+1/2 int h2 v^j v^k v^m` instead of `-1/2`;
//! * third order: `LHS = -(gg + H + R + B)`, with the second `R` term read as
//!   `sum int v^(j k1(grad w^kl), grad v^m)` (the printed version repeats the
//!   first `R` term).

use serde::Serialize;

use super::fd::dn_pairing_derivative;
use super::{at, bil, Linearization, Pt};
use crate::error::Result;
use crate::forward::integrand::Vec2;
use crate::forward::{MinimalGraph, NewtonOptions, NormalConvention};
use crate::pde_core::BoundaryFunction;

#[derive(Clone, Debug, Serialize)]
pub struct IdentityReport {
    pub order: usize,
    pub lhs: f64,
    /// named right-hand-side pieces
    pub terms: Vec<(String, f64)>,
    /// corrected right-hand side
    pub rhs: f64,
    /// right-hand side as printed
    pub rhs_printed: f64,
    /// `S . v^m - int v^m n.A`, the discrete source form
    pub source_form: f64,
    pub residual: f64,
    pub residual_printed: f64,
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(f64::MIN_POSITIVE)
}

/// Gradient and boundary data shared by both identities.
struct Traces {
    vals: Vec<Vec<f64>>,
    grads: Vec<Vec<Vec2>>,
    conormals: Vec<Vec<f64>>,
}

fn traces(lin: &Linearization, f: &[&BoundaryFunction], v: &[&[f64]]) -> Traces {
    let mut t = Traces { vals: vec![], grads: vec![], conormals: vec![] };
    for (fi, vi) in f.iter().zip(v) {
        let c = lin.conormal(vi, None, None);
        t.grads.push(lin.boundary_gradient(fi, &c));
        t.conormals.push(c);
        t.vals.push(vi.to_vec());
    }
    t
}

/// Sum over boundary nodes with Euclidean arc-length weights.
fn boundary_sum(lin: &Linearization, mut f: impl FnMut(usize, Vec2) -> f64) -> f64 {
    let mut s = 0.0;
    for lp in &lin.mesh.boundary {
        let ds = lp.arc_step();
        for &i in &lp.nodes {
            let n = crate::pde_core::outward_normal(lin.mesh, lp, i);
            s += ds * f(i, Vec2::new(n[0], n[1]));
        }
    }
    s
}

/// Volume integral `int F dV_g` of a pointwise expression in the fields.
fn volume(lin: &Linearization, fields: &[&[f64]], f: impl Fn(&crate::geometry::Jets, &[Pt]) -> f64) -> f64 {
    let mut s = 0.0;
    for (ti, t) in lin.geom.iter().enumerate() {
        for m in 0..3 {
            let j = &lin.jets_qp[ti][m];
            let p: Vec<Pt> = fields.iter().map(|fl| at(t, fl, m)).collect();
            s += t.area / 3.0 * j.d * f(j, &p);
        }
    }
    s
}

/// Second-order identity for data `(f_j, f_k, f_m)`.
pub fn verify_identity_2(
    lin: &Linearization,
    graph: &MinimalGraph,
    f: [&BoundaryFunction; 3],
    eps: f64,
    opts: &NewtonOptions,
) -> Result<IdentityReport> {
    let v: Vec<Vec<f64>> = f.iter().map(|fi| lin.solve_first_lin(fi)).collect();
    let (vj, vk, vm) = (&v[0][..], &v[1][..], &v[2][..]);
    let ds_g = lin.ds_g();
    let fm = f[2].sample_real(lin.mesh);
    let lhs = dn_pairing_derivative(graph, &[f[0], f[1]], &fm, &ds_g, eps, NormalConvention::Fixed, opts)?;

    let fields = [vj, vk, vm];
    let t1 = volume(lin, &fields, |j, p| p[2].v * bil(&j.k1, &p[1].g, &p[0].g));
    let t2 = volume(lin, &fields, |j, p| p[1].v * bil(&j.k1, &p[0].g, &p[2].g));
    let t3 = volume(lin, &fields, |j, p| p[0].v * bil(&j.k1, &p[1].g, &p[2].g));
    let t4 = volume(lin, &fields, |j, p| 0.5 * j.h2 * p[0].v * p[1].v * p[2].v);
    let tr = traces(lin, &[f[0], f[1]], &[vj, vk]);
    let bd = -boundary_sum(lin, |i, n| {
        let jt = &lin.jets_node[i];
        jt.d * vm[i] * (vk[i] * bil(&jt.k1, &n, &tr.grads[0][i]) + vj[i] * bil(&jt.k1, &n, &tr.grads[1][i]))
    });
    let rhs = t1 + t2 + t3 + t4 + bd;
    let rhs_printed = t1 + t2 + t3 - t4 + bd;

    let s = lin.second_source(vj, vk);
    let an = lin.quad_flux_normal((vj, &tr.grads[0]), (vk, &tr.grads[1]));
    let source_form = s.iter().zip(vm).map(|(a, b)| a * b).sum::<f64>() - boundary_sum(lin, |i, _| vm[i] * an[i]);

    Ok(IdentityReport {
        order: 2,
        lhs,
        terms: vec![
            ("k1_vm".into(), t1),
            ("k1_vk".into(), t2),
            ("k1_vj".into(), t3),
            ("h2_half".into(), t4),
            ("boundary".into(), bd),
        ],
        rhs,
        rhs_printed,
        source_form,
        residual: rel(lhs, rhs),
        residual_printed: rel(lhs, rhs_printed),
    })
}

/// Third-order identity for data `(f_j, f_k, f_l, f_m)`.
pub fn verify_identity_3(
    lin: &Linearization,
    graph: &MinimalGraph,
    f: [&BoundaryFunction; 4],
    eps: f64,
    opts: &NewtonOptions,
) -> Result<IdentityReport> {
    let mesh = lin.mesh;
    let v: Vec<Vec<f64>> = f.iter().map(|fi| lin.solve_first_lin(fi)).collect();
    let vm = &v[3];
    // w[i] = second linearization of the two indices other than i
    let others = |i: usize| ((i + 1) % 3, (i + 2) % 3);
    let sources: Vec<Vec<f64>> = (0..3).map(|i| {
        let (a, b) = others(i);
        lin.second_source(&v[a], &v[b])
    }).collect();
    let w: Vec<Vec<f64>> = sources.iter().map(|s| lin.solve_with_source(s)).collect();

    let ds_g = lin.ds_g();
    let fm = f[3].sample_real(mesh);
    let lhs = dn_pairing_derivative(graph, &[f[0], f[1], f[2]], &fm, &ds_g, eps, NormalConvention::Fixed, opts)?;

    let tr = traces(lin, &[f[0], f[1], f[2], f[3]], &[&v[0], &v[1], &v[2], &v[3]]);
    let zero_f = BoundaryFunction::zeros(mesh.boundary.len(), f[0].nf);
    let wgrad: Vec<Vec<Vec2>> = (0..3)
        .map(|i| {
            let (a, b) = others(i);
            let sf = lin.quad_flux_normal((&v[a], &tr.grads[a]), (&v[b], &tr.grads[b]));
            let c = lin.conormal(&w[i], Some(&sources[i]), Some(&sf));
            lin.boundary_gradient(&zero_f, &c)
        })
        .collect();

    // d^-1 d2 v^a v^b as nodal fields for the non-divergence H term
    let cvv: Vec<Vec<f64>> = (0..3)
        .map(|i| {
            let (a, b) = others(i);
            (0..mesh.n_nodes()).map(|n| lin.jets_node[n].d2 / lin.jets_node[n].d * v[a][n] * v[b][n]).collect()
        })
        .collect();

    let fields: Vec<&[f64]> = vec![&v[0], &v[1], &v[2], &v[3], &w[0], &w[1], &w[2], &cvv[0], &cvv[1], &cvv[2]];
    let sum3 = |g: &dyn Fn(&crate::geometry::Jets, &[Pt], usize, usize, usize) -> f64| {
        volume(lin, &fields, |j, p| (0..3).map(|i| { let (a, b) = others(i); g(j, p, i, a, b) }).sum())
    };
    let gg = sum3(&|j, p, i, a, b| bil(&j.k, &p[a].g, &p[b].g) * bil(&j.k, &p[i].g, &p[3].g));
    let h1 = sum3(&|j, p, i, a, b| -p[a].v * p[b].v * bil(&j.k2, &p[i].g, &p[3].g));
    let h2 = sum3(&|j, p, i, _, _| p[3].v * bil(&j.k, &p[7 + i].g, &p[i].g));
    let h3 = sum3(&|j, p, i, a, b| -p[3].v * bil(&j.k2, &p[a].g, &p[b].g) * p[i].v);
    let h4 = volume(lin, &fields, |j, p| -0.5 * p[3].v * p[0].v * p[1].v * p[2].v * j.h3);
    let r1 = sum3(&|j, p, i, _, _| -p[4 + i].v * bil(&j.k1, &p[i].g, &p[3].g));
    let r2 = sum3(&|j, p, i, _, _| -p[i].v * bil(&j.k1, &p[4 + i].g, &p[3].g));
    let r2_printed = sum3(&|j, p, i, _, _| -bil(&j.k1, &p[3].g, &p[i].g) * p[4 + i].v);
    let r3 = sum3(&|j, p, i, _, _| -p[3].v * bil(&j.k1, &p[i].g, &p[4 + i].g));
    let r4 = sum3(&|j, p, i, a, b| -0.5 * p[3].v * bil(&j.k, &p[a].g, &p[b].g) * p[i].v * j.h1);
    let r5 = sum3(&|j, p, i, _, _| -0.5 * p[3].v * p[4 + i].v * p[i].v * j.h2);

    let bsum3 = |g: &dyn Fn(usize, Vec2, usize, usize, usize) -> f64| {
        boundary_sum(lin, |n, nv| (0..3).map(|i| { let (a, b) = others(i); g(n, nv, i, a, b) }).sum())
    };
    let b1 = bsum3(&|n, nv, i, a, b| {
        let j = &lin.jets_node[n];
        j.d * vm[n] * v[a][n] * v[b][n] * bil(&j.k2, &nv, &tr.grads[i][n])
    });
    let b2 = bsum3(&|n, nv, i, _, _| {
        let j = &lin.jets_node[n];
        j.d * vm[n] * w[i][n] * bil(&j.k1, &nv, &tr.grads[i][n])
    });
    let b3 = -bsum3(&|n, nv, i, a, b| {
        let j = &lin.jets_node[n];
        let nk = bil(&j.k, &nv, &nv).sqrt();
        j.d * nk * vm[n] * bil(&j.k, &tr.grads[a][n], &tr.grads[b][n]) * tr.conormals[i][n]
    });
    let b4 = bsum3(&|n, nv, i, _, _| {
        let j = &lin.jets_node[n];
        j.d * vm[n] * v[i][n] * bil(&j.k1, &nv, &wgrad[i][n])
    });

    let h = h1 + h2 + h3 + h4;
    let r = r1 + r2 + r3 + r4 + r5;
    let r_printed = r1 + r2_printed + r3 + r4 + r5;
    let b = b1 + b2 + b3 + b4;
    let rhs = -(gg + h + r + b);
    let rhs_printed = gg + h + r_printed + b;

    let s3 = lin.third_source([&v[0], &v[1], &v[2]], [&w[0], &w[1], &w[2]]);
    let an = lin.cubic_flux_normal(
        [(&v[0], &tr.grads[0]), (&v[1], &tr.grads[1]), (&v[2], &tr.grads[2])],
        [&wgrad[0], &wgrad[1], &wgrad[2]],
    );
    let source_form = s3.iter().zip(vm).map(|(a, b)| a * b).sum::<f64>() - boundary_sum(lin, |i, _| vm[i] * an[i]);

    let terms = [
        ("gg", gg), ("H1", h1), ("H2", h2), ("H3", h3), ("H4", h4), ("H", h),
        ("R1", r1), ("R2", r2), ("R2_printed", r2_printed), ("R3", r3), ("R4", r4), ("R5", r5), ("R", r),
        ("B1", b1), ("B2", b2), ("B3", b3), ("B4", b4), ("B", b),
    ];
    Ok(IdentityReport {
        order: 3,
        lhs,
        terms: terms.iter().map(|(n, x)| (n.to_string(), *x)).collect(),
        rhs,
        rhs_printed,
        source_form,
        residual: rel(lhs, rhs),
        residual_printed: rel(lhs, rhs_printed),
    })
}
