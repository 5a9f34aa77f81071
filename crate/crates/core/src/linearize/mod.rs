//! First, second and third linearizations of the minimal-graph equation at
//! `u = 0`, finite-difference cross-checks against the nonlinear solver, and
//! the integral identities for the second and third linearizations.
//!
//! With `F(s, p) = d(s) sqrt(1 + p^T k(s) p)` expanded at `(0, 0)`,
//! `F = d(s) + p^T M(s) p / 2 - d (p^T k p)^2 / 8 + ...` where
//! `M(s) = d(s) k(s)`. The sources below are the Taylor coefficients of the
//! discrete residual, written in the jets `k1, k2, h1, h2, h3`:
//!
//! * `L = Delta_g + h1/2` (weak form `int d k grad v . grad phi + int d h1/2 v phi`),
//! * `L w^{jk} = -(P^(j v^k) + k1(grad v^j, grad v^k) + h2/2 v^j v^k)`,
//! * `L w^{jkl}` with the cubic source of [`Linearization::third_source`].

pub mod fd;
pub mod identities;

use crate::error::{Error, Result};
use crate::geometry::{Jets, Mat2, Mesh, MetricFamily};
use crate::pde_core::{
    assemble_with, boundary_density, outward_normal, tangent, tri_geometry, BoundaryFunction, DirichletSolver,
    Operator, QpCoef, TriGeom, QP_BARY,
};
use crate::pde_core::fem::Coefficients;
use crate::forward::integrand::Vec2;

/// Solutions of the linearized equations for a set of boundary data.
#[derive(Clone, Debug)]
pub struct LinearizationBundle {
    pub f: Vec<BoundaryFunction>,
    pub v: Vec<Vec<f64>>,
    /// `w[(j, k)]` for `j <= k`
    pub w2: std::collections::BTreeMap<(usize, usize), Vec<f64>>,
    /// `w[(j, k, l)]` for `j <= k <= l`
    pub w3: std::collections::BTreeMap<(usize, usize, usize), Vec<f64>>,
}

impl LinearizationBundle {
    pub fn w(&self, j: usize, k: usize) -> &[f64] {
        &self.w2[&(j.min(k), j.max(k))]
    }

    pub fn www(&self, j: usize, k: usize, l: usize) -> &[f64] {
        let mut s = [j, k, l];
        s.sort_unstable();
        &self.w3[&(s[0], s[1], s[2])]
    }
}

/// Pointwise values of a nodal field at one quadrature point.
#[derive(Clone, Copy, Debug)]
struct Pt {
    v: f64,
    g: Vec2,
}

fn at(t: &TriGeom, f: &[f64], m: usize) -> Pt {
    let g = t.grad(f);
    Pt { v: t.interp(f, m), g: Vec2::new(g[0], g[1]) }
}

fn bil(a: &Mat2, x: &Vec2, y: &Vec2) -> f64 {
    x.dot(&(a * y))
}

/// The linearized operator with jets tabulated at the quadrature points.
pub struct Linearization<'a> {
    pub family: &'a dyn MetricFamily,
    pub mesh: &'a Mesh,
    pub geom: Vec<TriGeom>,
    pub jets_qp: Vec<[Jets; 3]>,
    pub jets_node: Vec<Jets>,
    pub solver: DirichletSolver,
}

impl<'a> Linearization<'a> {
    pub fn new(family: &'a dyn MetricFamily, mesh: &'a Mesh) -> Result<Self> {
        let geom = tri_geometry(mesh)?;
        let mut jets_qp = Vec::with_capacity(geom.len());
        for t in &geom {
            let j: [Result<Jets>; 3] = std::array::from_fn(|m| family.jets0(t.qp(mesh, m)));
            let [a, b, c] = j;
            jets_qp.push([a?, b?, c?]);
        }
        let jets_node: Vec<Jets> = mesh.nodes.iter().map(|&x| family.jets0(x)).collect::<Result<_>>()?;
        if let Some(j) = jets_node.iter().find(|j| j.h0.abs() > 1e-8) {
            return Err(Error::Invalid(format!(
                "family is not minimal (Tr(g^-1 dg/ds) = {:.3e}); u = 0 is not a solution",
                j.h0
            )));
        }
        let matrix = assemble_with(mesh, &geom, |ti, _, m| {
            let j = &jets_qp[ti][m];
            QpCoef { da: j.k * j.d, dq: j.d * 0.5 * j.h1 }
        });
        let coef = Coefficients {
            a: jets_node.iter().map(|j| j.k).collect(),
            d: jets_node.iter().map(|j| j.d).collect(),
            q: jets_node.iter().map(|j| 0.5 * j.h1).collect(),
        };
        let solver = DirichletSolver::new(mesh, Operator { matrix, coef, geom: geom.clone() })?;
        Ok(Linearization { family, mesh, geom, jets_qp, jets_node, solver })
    }

    /// `(Delta_g + h1/2) v = 0`, `v = f` on the boundary.
    pub fn solve_first_lin(&self, f: &BoundaryFunction) -> Vec<f64> {
        self.solver.solve(self.mesh, f)
    }

    /// Accumulates `sum_q w_q (A . grad phi_i + B phi_i)` from a callback
    /// returning the flux `A` and the scalar `B` at each quadrature point.
    fn weak_vector(&self, mut f: impl FnMut(usize, usize, &Jets) -> (Vec2, f64)) -> Vec<f64> {
        let mut out = vec![0.0; self.mesh.n_nodes()];
        for (ti, t) in self.geom.iter().enumerate() {
            for m in 0..3 {
                let (a, b) = f(ti, m, &self.jets_qp[ti][m]);
                let w = t.area / 3.0;
                for k in 0..3 {
                    out[t.nodes[k]] += w * (a[0] * t.grads[k][0] + a[1] * t.grads[k][1] + b * QP_BARY[m][k]);
                }
            }
        }
        out
    }

    /// Weak form of `P^j u`: moments `int v^j k1(grad u, grad phi_i) dV_g`.
    pub fn apply_pj(&self, vj: &[f64], target: &[f64]) -> Vec<f64> {
        self.weak_vector(|ti, m, j| {
            let t = &self.geom[ti];
            let (a, u) = (at(t, vj, m), at(t, target, m));
            ((j.k1 * u.g) * (j.d * a.v), 0.0)
        })
    }

    /// Flux and scalar parts of the quadratic source at one point.
    fn quad_terms(j: &Jets, a: Pt, b: Pt) -> (Vec2, f64) {
        let flux = (j.k1 * (b.g * a.v + a.g * b.v)) * j.d;
        let scalar = j.d * (bil(&j.k1, &a.g, &b.g) + 0.5 * j.h2 * a.v * b.v);
        (flux, scalar)
    }

    /// Weak source of the second linearization for the pair `(a, b)`.
    pub fn second_source(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        self.weak_vector(|ti, m, j| {
            let t = &self.geom[ti];
            Self::quad_terms(j, at(t, a, m), at(t, b, m))
        })
    }

    /// Weak source of the third linearization.
    pub fn third_source(&self, v: [&[f64]; 3], w: [&[f64]; 3]) -> Vec<f64> {
        // w[i] is the second linearization of the two indices other than i
        self.weak_vector(|ti, m, j| {
            let t = &self.geom[ti];
            let p: [Pt; 3] = std::array::from_fn(|i| at(t, v[i], m));
            let q: [Pt; 3] = std::array::from_fn(|i| at(t, w[i], m));
            Self::cubic_terms(j, p, q)
        })
    }

    fn cubic_terms(j: &Jets, p: [Pt; 3], q: [Pt; 3]) -> (Vec2, f64) {
        let m2 = j.k * j.d2 + j.k2 * j.d;
        let mut flux = Vec2::zeros();
        let mut scalar = j.d4 * p[0].v * p[1].v * p[2].v;
        for i in 0..3 {
            let (a, b) = (p[(i + 1) % 3], p[(i + 2) % 3]);
            // mixed terms D2R[v^i, w^{other two}]
            let (fx, sc) = Self::quad_terms(j, p[i], q[i]);
            flux += fx;
            scalar += sc;
            // cubic terms: i carries the gradient
            flux += m2 * p[i].g * (a.v * b.v);
            flux -= (j.k * p[i].g) * (j.d * bil(&j.k, &a.g, &b.g));
            scalar += p[i].v * bil(&m2, &a.g, &b.g);
        }
        (flux, scalar)
    }

    /// `L w = -source`, zero boundary data.
    pub fn solve_with_source(&self, source: &[f64]) -> Vec<f64> {
        let zero = vec![0.0; self.mesh.n_nodes()];
        let load: Vec<f64> = source.iter().map(|s| -s).collect();
        self.solver.solve_nodal(&zero, &load)
    }

    pub fn solve_second_lin(&self, vj: &[f64], vk: &[f64]) -> Vec<f64> {
        self.solve_with_source(&self.second_source(vj, vk))
    }

    pub fn solve_third_lin(&self, v: [&[f64]; 3], w: [&[f64]; 3]) -> Vec<f64> {
        self.solve_with_source(&self.third_source(v, w))
    }

    /// All first, second and third linearizations for the given data.
    pub fn bundle(&self, f: &[BoundaryFunction], third: bool) -> LinearizationBundle {
        use rayon::prelude::*;
        let v: Vec<Vec<f64>> = f.par_iter().map(|fj| self.solve_first_lin(fj)).collect();
        let n = f.len();
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|j| (j..n).map(move |k| (j, k))).collect();
        let w2: std::collections::BTreeMap<_, _> =
            pairs.par_iter().map(|&(j, k)| ((j, k), self.solve_second_lin(&v[j], &v[k]))).collect();
        let mut w3 = std::collections::BTreeMap::new();
        if third {
            let triples: Vec<(usize, usize, usize)> =
                (0..n).flat_map(|j| (j..n).flat_map(move |k| (k..n).map(move |l| (j, k, l)))).collect();
            w3 = triples
                .par_iter()
                .map(|&(j, k, l)| {
                    let w = |a: usize, b: usize| &w2[&(a.min(b), a.max(b))][..];
                    ((j, k, l), self.solve_third_lin([&v[j], &v[k], &v[l]], [w(k, l), w(j, l), w(j, k)]))
                })
                .collect();
        }
        LinearizationBundle { f: f.to_vec(), v, w2, w3 }
    }

    /// Conormal derivative of a solution of `L u = -source` at the boundary
    /// nodes, with the boundary flux of the source removed.
    pub fn conormal(&self, u: &[f64], source: Option<&[f64]>, source_flux: Option<&[f64]>) -> Vec<f64> {
        let n = self.mesh.n_nodes();
        let load: Vec<f64> = match source {
            Some(s) => s.iter().map(|x| -x).collect(),
            None => vec![0.0; n],
        };
        let mut rho = boundary_density(self.mesh, &self.solver.flux_moments(self.mesh, u, &load));
        if let Some(sf) = source_flux {
            for i in 0..n {
                rho[i] -= sf[i];
            }
        }
        let mut out = vec![0.0; n];
        for lp in &self.mesh.boundary {
            for &i in &lp.nodes {
                let j = &self.jets_node[i];
                let nn = outward_normal(self.mesh, lp, i);
                let nv = Vec2::new(nn[0], nn[1]);
                out[i] = rho[i] / (j.d * bil(&j.k, &nv, &nv).sqrt());
            }
        }
        out
    }

    /// Full gradient at boundary nodes from the conormal derivative `c` and
    /// the boundary values `f` (tangential part differentiated spectrally).
    pub fn boundary_gradient(&self, f: &BoundaryFunction, c: &[f64]) -> Vec<Vec2> {
        let df = f.d_theta();
        let mut out = vec![Vec2::zeros(); self.mesh.n_nodes()];
        for (l, lp) in self.mesh.boundary.iter().enumerate() {
            for (jj, &i) in lp.nodes.iter().enumerate() {
                let j = &self.jets_node[i];
                let nn = outward_normal(self.mesh, lp, i);
                let tt = tangent(self.mesh, lp, i);
                let (nv, tv) = (Vec2::new(nn[0], nn[1]), Vec2::new(tt[0], tt[1]));
                let tder = lp.orientation.sign() * df.eval(l, lp.angle(jj)).re / lp.radius;
                let nkn = bil(&j.k, &nv, &nv);
                let lam = (c[i] * nkn.sqrt() - tder * bil(&j.k, &nv, &tv)) / nkn;
                out[i] = nv * lam + tv * tder;
            }
        }
        out
    }

    /// Nodal `n . A` of the quadratic source flux on the boundary.
    pub fn quad_flux_normal(&self, a: (&[f64], &[Vec2]), b: (&[f64], &[Vec2])) -> Vec<f64> {
        let mut out = vec![0.0; self.mesh.n_nodes()];
        for lp in &self.mesh.boundary {
            for &i in &lp.nodes {
                let j = &self.jets_node[i];
                let nn = outward_normal(self.mesh, lp, i);
                let (fx, _) = Self::quad_terms(j, Pt { v: a.0[i], g: a.1[i] }, Pt { v: b.0[i], g: b.1[i] });
                out[i] = fx[0] * nn[0] + fx[1] * nn[1];
            }
        }
        out
    }

    /// Nodal `n . A` of the cubic source flux on the boundary (the `w`
    /// fields vanish there but their gradients do not).
    pub fn cubic_flux_normal(&self, v: [(&[f64], &[Vec2]); 3], wg: [&[Vec2]; 3]) -> Vec<f64> {
        let mut out = vec![0.0; self.mesh.n_nodes()];
        for lp in &self.mesh.boundary {
            for &i in &lp.nodes {
                let j = &self.jets_node[i];
                let nn = outward_normal(self.mesh, lp, i);
                let p = v.map(|(f, g)| Pt { v: f[i], g: g[i] });
                let q = wg.map(|g| Pt { v: 0.0, g: g[i] });
                let (fx, _) = Self::cubic_terms(j, p, q);
                out[i] = fx[0] * nn[0] + fx[1] * nn[1];
            }
        }
        out
    }

    /// Boundary quadrature weights for `dS_g` at the nodes.
    pub fn ds_g(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.mesh.n_nodes()];
        for lp in &self.mesh.boundary {
            for &i in &lp.nodes {
                let j = &self.jets_node[i];
                let nn = outward_normal(self.mesh, lp, i);
                let nv = Vec2::new(nn[0], nn[1]);
                w[i] = lp.arc_step() * j.d * bil(&j.k, &nv, &nv).sqrt();
            }
        }
        w
    }
}
