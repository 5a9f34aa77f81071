//! P1 assembly for weighted second-order operators
//! `u -> -d^-1 div(A d grad u) + q u`, in weak form
//! `int d (A grad u).grad phi + int d q u phi`.
//!
//! All volume integrals use the three-point edge-midpoint rule, which is
//! exact for quadratics on each triangle.

use crate::error::{Error, Result};
use crate::geometry::{Mat2, Mesh};

use super::sparse::Csr;

/// Constant data of one triangle.
#[derive(Clone, Copy, Debug)]
pub struct TriGeom {
    pub nodes: [usize; 3],
    pub area: f64,
    /// gradients of the three hat functions
    pub grads: [[f64; 2]; 3],
}

/// Quadrature point `m` sits at the midpoint of local edge `(m, m+1)`.
pub const QP_BARY: [[f64; 3]; 3] = [[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]];

impl TriGeom {
    pub fn new(mesh: &Mesh, t: [usize; 3], index: usize) -> Result<TriGeom> {
        let p = t.map(|i| mesh.nodes[i]);
        let det = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
        if det.abs() <= 1e-14 {
            return Err(Error::DegenerateTriangle(index));
        }
        let grads = std::array::from_fn(|k| {
            let a = p[(k + 1) % 3];
            let b = p[(k + 2) % 3];
            [(a[1] - b[1]) / det, (b[0] - a[0]) / det]
        });
        Ok(TriGeom { nodes: t, area: 0.5 * det.abs(), grads })
    }

    pub fn qp(&self, mesh: &Mesh, m: usize) -> [f64; 2] {
        let mut x = [0.0; 2];
        for (k, w) in QP_BARY[m].iter().enumerate() {
            x[0] += w * mesh.nodes[self.nodes[k]][0];
            x[1] += w * mesh.nodes[self.nodes[k]][1];
        }
        x
    }

    /// Interpolates nodal values to quadrature point `m`.
    pub fn interp(&self, vals: &[f64], m: usize) -> f64 {
        (0..3).map(|k| QP_BARY[m][k] * vals[self.nodes[k]]).sum()
    }

    pub fn grad(&self, vals: &[f64]) -> [f64; 2] {
        let mut g = [0.0; 2];
        for k in 0..3 {
            let v = vals[self.nodes[k]];
            g[0] += v * self.grads[k][0];
            g[1] += v * self.grads[k][1];
        }
        g
    }
}

pub fn tri_geometry(mesh: &Mesh) -> Result<Vec<TriGeom>> {
    mesh.triangles.iter().enumerate().map(|(i, t)| TriGeom::new(mesh, *t, i)).collect()
}

/// Per-node coefficients of an assembled operator.
#[derive(Clone, Debug)]
pub struct Coefficients {
    pub a: Vec<Mat2>,
    pub d: Vec<f64>,
    pub q: Vec<f64>,
}

/// Coefficients at one quadrature point: principal part `d A` and zeroth
/// order part `d q`.
#[derive(Clone, Copy, Debug)]
pub struct QpCoef {
    pub da: Mat2,
    pub dq: f64,
}

/// An assembled operator together with its boundary-relevant data.
#[derive(Clone, Debug)]
pub struct Operator {
    pub matrix: Csr,
    pub coef: Coefficients,
    pub geom: Vec<TriGeom>,
}

/// Assembles from a quadrature-point coefficient callback
/// `(triangle index, point, qp index) -> QpCoef`.
pub fn assemble_with<F>(mesh: &Mesh, geom: &[TriGeom], coef: F) -> Csr
where
    F: Fn(usize, [f64; 2], usize) -> QpCoef,
{
    let mut trip = Vec::with_capacity(9 * geom.len());
    for (ti, t) in geom.iter().enumerate() {
        let mut local = [[0.0; 3]; 3];
        for m in 0..3 {
            let c = coef(ti, t.qp(mesh, m), m);
            let w = t.area / 3.0;
            for a in 0..3 {
                let ga = t.grads[a];
                let ag = [c.da[(0, 0)] * ga[0] + c.da[(0, 1)] * ga[1], c.da[(1, 0)] * ga[0] + c.da[(1, 1)] * ga[1]];
                for b in 0..3 {
                    let gb = t.grads[b];
                    local[b][a] += w * (ag[0] * gb[0] + ag[1] * gb[1] + c.dq * QP_BARY[m][a] * QP_BARY[m][b]);
                }
            }
        }
        for a in 0..3 {
            for b in 0..3 {
                trip.push((t.nodes[a], t.nodes[b], local[a][b]));
            }
        }
    }
    Csr::from_triplets(mesh.n_nodes(), mesh.n_nodes(), trip)
}

/// Assembles the operator from per-node `A`, `d`, `q` (interpolated linearly
/// to the quadrature points).
pub fn assemble_operator(mesh: &Mesh, a: Vec<Mat2>, d: Vec<f64>, q: Vec<f64>) -> Result<Operator> {
    let n = mesh.n_nodes();
    if a.len() != n || d.len() != n || q.len() != n {
        return Err(Error::Invalid("coefficient length does not match node count".into()));
    }
    if let Some(i) = d.iter().position(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::Invalid(format!("weight d must be positive, node {i} has {}", d[i])));
    }
    let geom = tri_geometry(mesh)?;
    let matrix = assemble_with(mesh, &geom, |ti, _, m| {
        let t = &geom[ti];
        let mut da = Mat2::zeros();
        let mut dq = 0.0;
        for k in 0..3 {
            let w = QP_BARY[m][k];
            let i = t.nodes[k];
            da += a[i] * (w * d[i]);
            dq += w * d[i] * q[i];
        }
        QpCoef { da, dq }
    });
    Ok(Operator { matrix, coef: Coefficients { a, d, q }, geom })
}

/// Flat Laplacian plus potential.
pub fn schrodinger_flat(mesh: &Mesh, q: Vec<f64>) -> Result<Operator> {
    let n = mesh.n_nodes();
    assemble_operator(mesh, vec![Mat2::identity(); n], vec![1.0; n], q)
}

/// Weighted load vector `int d f phi_i` for nodal `f`.
pub fn load_vector(mesh: &Mesh, geom: &[TriGeom], d: &[f64], f: &[f64]) -> Vec<f64> {
    let mut b = vec![0.0; mesh.n_nodes()];
    for t in geom {
        for m in 0..3 {
            let w = t.area / 3.0 * t.interp(d, m) * t.interp(f, m);
            for k in 0..3 {
                b[t.nodes[k]] += w * QP_BARY[m][k];
            }
        }
    }
    b
}

/// `int d f g` with the midpoint rule.
pub fn weighted_inner(geom: &[TriGeom], d: &[f64], f: &[f64], g: &[f64]) -> f64 {
    geom.iter()
        .map(|t| (0..3).map(|m| t.interp(d, m) * t.interp(f, m) * t.interp(g, m)).sum::<f64>() * t.area / 3.0)
        .sum()
}
