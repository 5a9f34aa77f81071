//! Schrodinger DN maps `(Delta_g + q) v = 0` and the conformal gauge check.

use serde::Serialize;

use crate::cgo::fit_loglog;
use crate::cgo::DecayFit;
use crate::error::{Error, Result};
use crate::geometry::{build_mesh, Domain, Mat2, Mesh};
use crate::pde_core::{assemble_with, dn_matrix, tri_geometry, DirichletSolver, DnMatrix, Operator, QpCoef, QP_BARY};
use crate::pde_core::fem::Coefficients;

/// Assembles `int sqrt|g| (g^-1 grad u . grad phi + q u phi)` from nodal
/// metric and potential. The weight `sqrt|g|` and the inverse metric are
/// interpolated separately, so a conformal change `(c g, q / c)` is only
/// invariant up to discretization error.
pub fn schrodinger_operator(mesh: &Mesh, g: &[Mat2], q: &[f64]) -> Result<Operator> {
    let n = mesh.n_nodes();
    if g.len() != n || q.len() != n {
        return Err(Error::Invalid("coefficient length does not match node count".into()));
    }
    let mut a = Vec::with_capacity(n);
    let mut d = Vec::with_capacity(n);
    for (i, m) in g.iter().enumerate() {
        let det = m.determinant();
        let inv = m.try_inverse().filter(|_| det > 0.0 && m[(0, 0)] > 0.0);
        let Some(inv) = inv else {
            let p = mesh.nodes[i];
            return Err(Error::NotSpd { x: p[0], y: p[1], s: 0.0 });
        };
        a.push(inv);
        d.push(det.sqrt());
    }
    let geom = tri_geometry(mesh)?;
    let matrix = assemble_with(mesh, &geom, |ti, _, m| {
        let t = &geom[ti];
        let mut am = Mat2::zeros();
        let (mut dm, mut qm) = (0.0, 0.0);
        for k in 0..3 {
            let w = QP_BARY[m][k];
            let i = t.nodes[k];
            am += a[i] * w;
            dm += d[i] * w;
            qm += q[i] * w;
        }
        QpCoef { da: am * dm, dq: dm * qm }
    });
    Ok(Operator { matrix, coef: Coefficients { a, d, q: q.to_vec() }, geom })
}

/// DN matrix of `Delta_g + q` on the stacked Fourier basis with `nf` modes.
/// Fails with an eigenvalue collision when `0` is (close to) a Dirichlet
/// eigenvalue.
pub fn schrodinger_dn(mesh: &Mesh, g: &[Mat2], q: &[f64], nf: usize) -> Result<DnMatrix> {
    let op = schrodinger_operator(mesh, g, q)?;
    let solver = DirichletSolver::new(mesh, op)?;
    Ok(dn_matrix(mesh, &solver, nf, "schrodinger"))
}

/// Nodal samples of a metric and potential given as functions.
pub fn sample_coefficients(mesh: &Mesh, g: impl Fn([f64; 2]) -> Mat2, q: impl Fn([f64; 2]) -> f64) -> (Vec<Mat2>, Vec<f64>) {
    (mesh.nodes.iter().map(|&p| g(p)).collect(), mesh.nodes.iter().map(|&p| q(p)).collect())
}

/// The standard gauge factor `1 + 0.3 (1 - r^2)^2`, equal to 1 on the unit
/// circle.
pub fn default_gauge(x: [f64; 2]) -> f64 {
    let r2 = x[0] * x[0] + x[1] * x[1];
    1.0 + 0.3 * (1.0 - r2).powi(2)
}

#[derive(Clone, Debug, Serialize)]
pub struct GaugeLevel {
    pub level: usize,
    pub mesh_size: f64,
    /// `||Lambda_1 - Lambda_2|| / ||Lambda_1||` (Frobenius)
    pub difference: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GaugeReport {
    pub levels: Vec<GaugeLevel>,
    /// convergence rate in the mesh size
    pub rate: Option<DecayFit>,
}

/// Compares the DN maps of `(g, q)` and `(c g, q / c)` on the unit disk over
/// mesh levels.
pub fn gauge_check(
    levels: &[usize],
    g: &dyn Fn([f64; 2]) -> Mat2,
    q: &dyn Fn([f64; 2]) -> f64,
    c: &dyn Fn([f64; 2]) -> f64,
    nf: usize,
) -> Result<GaugeReport> {
    let mut out = Vec::new();
    for &level in levels {
        let mesh = build_mesh(Domain::UnitDisk, level)?;
        for lp in &mesh.boundary {
            let off = lp.nodes.iter().map(|&i| (c(mesh.nodes[i]) - 1.0).abs()).fold(0.0, f64::max);
            if off > 1e-12 {
                return Err(Error::Invalid(format!("gauge factor differs from 1 on the boundary by {off:.3e}")));
            }
        }
        let (g1, q1) = sample_coefficients(&mesh, g, q);
        let (g2, q2) = sample_coefficients(&mesh, |x| g(x) * c(x), |x| q(x) / c(x));
        let l1 = schrodinger_dn(&mesh, &g1, &q1, nf)?;
        let l2 = schrodinger_dn(&mesh, &g2, &q2, nf)?;
        out.push(GaugeLevel {
            level,
            mesh_size: mesh.max_edge_length(),
            difference: (&l1.matrix - &l2.matrix).norm() / l1.matrix.norm(),
        });
    }
    let hs: Vec<f64> = out.iter().map(|l| l.mesh_size).collect();
    let ds: Vec<f64> = out.iter().map(|l| l.difference).collect();
    Ok(GaugeReport { rate: fit_loglog(&hs, &ds, 2, 1.5).ok(), levels: out })
}
