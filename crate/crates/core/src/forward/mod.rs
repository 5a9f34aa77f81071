//! Minimal graphs `s = u(x)` in Fermi coordinates: discrete area, its
//! first variation, damped Newton for the Euler-Lagrange equation, and the
//! nonlinear DN map.
//!
//! The discrete problem is the exact critical-point problem of the P1 area
//! functional, so the Newton Jacobian, the first variation and the
//! linearizations in [`crate::linearize`] are all exact derivatives of one
//! function.

pub mod integrand;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{Mat2, Mesh, MetricFamily};
use crate::pde_core::{
    boundary_density, outward_normal, schrodinger_flat, tangent, tri_geometry, BoundaryFunction, Csr,
    DirichletSolver, SkylineLdl, TriGeom, QP_BARY,
};

use integrand::{integrand, MetricAt, Vec2};

/// Which conormal the nonlinear DN map differentiates along.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormalConvention {
    /// unit conormal of `g(x, u(x))`
    Moving,
    /// unit conormal of `g(x, 0)`
    Fixed,
}

#[derive(Clone, Debug)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions { tol: 1e-13, max_iter: 40, max_halvings: 20 }
    }
}

#[derive(Clone, Debug)]
pub struct GraphSolution {
    pub u: Vec<f64>,
    pub boundary: Vec<f64>,
    pub iterations: usize,
    /// max interior weak residual after each iterate (index 0 = initial guess)
    pub history: Vec<f64>,
    pub residual: f64,
    pub area: f64,
}

impl GraphSolution {
    /// Largest `r_{k+1} / r_k^2` over the last two Newton steps.
    pub fn quadratic_constant(&self) -> Option<f64> {
        let h: Vec<f64> = self.history.iter().copied().filter(|&r| r > 1e-14).collect();
        if h.len() < 3 {
            return None;
        }
        let n = h.len();
        Some((n - 2..n).map(|k| h[k] / (h[k - 1] * h[k - 1])).fold(0.0, f64::max))
    }

    pub fn sup_norm(&self) -> f64 {
        self.u.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// The discrete area functional of one family on one mesh.
pub struct MinimalGraph<'a> {
    pub family: &'a dyn MetricFamily,
    pub mesh: &'a Mesh,
    pub geom: Vec<TriGeom>,
    qp: Vec<[[f64; 2]; 3]>,
    lift: DirichletSolver,
}

impl<'a> MinimalGraph<'a> {
    pub fn new(family: &'a dyn MetricFamily, mesh: &'a Mesh) -> Result<Self> {
        let geom = tri_geometry(mesh)?;
        let qp = geom.iter().map(|t| std::array::from_fn(|m| t.qp(mesh, m))).collect();
        let lift = DirichletSolver::new(mesh, schrodinger_flat(mesh, vec![0.0; mesh.n_nodes()])?)?;
        Ok(MinimalGraph { family, mesh, geom, qp, lift })
    }

    fn check_range(&self, u: &[f64]) -> Result<()> {
        let s_max = self.family.s_max();
        let worst = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !(worst <= s_max) {
            return Err(Error::OutOfRange { value: worst, s_max });
        }
        Ok(())
    }

    /// Calls `f(triangle, qp, weight, metric, u_q, grad u)` at every quadrature point.
    fn for_each_qp(&self, u: &[f64], mut f: impl FnMut(&TriGeom, usize, f64, &MetricAt, f64, Vec2)) {
        for (t, xq) in self.geom.iter().zip(&self.qp) {
            let g = t.grad(u);
            let p = Vec2::new(g[0], g[1]);
            for m in 0..3 {
                let s = t.interp(u, m);
                let met = MetricAt::new(self.family, xq[m], s);
                f(t, m, t.area / 3.0, &met, s, p);
            }
        }
    }

    pub fn area(&self, u: &[f64]) -> Result<f64> {
        self.check_range(u)?;
        let mut a = 0.0;
        self.for_each_qp(u, |_, _, w, met, _, p| a += w * integrand(met, p).f);
        Ok(a)
    }

    /// Weak Euler-Lagrange residual `R_i = dArea/du_i` at every node.
    pub fn residual(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check_range(u)?;
        let mut r = vec![0.0; self.mesh.n_nodes()];
        self.for_each_qp(u, |t, m, w, met, _, p| {
            let it = integrand(met, p);
            for k in 0..3 {
                let gk = t.grads[k];
                r[t.nodes[k]] += w * (it.fp[0] * gk[0] + it.fp[1] * gk[1] + it.fs * QP_BARY[m][k]);
            }
        });
        Ok(r)
    }

    /// Exact Hessian of the discrete area.
    pub fn jacobian(&self, u: &[f64]) -> Result<Csr> {
        self.check_range(u)?;
        let mut trip = Vec::with_capacity(27 * self.geom.len());
        self.for_each_qp(u, |t, m, w, met, _, p| {
            let it = integrand(met, p);
            for a in 0..3 {
                let ga = Vec2::new(t.grads[a][0], t.grads[a][1]);
                let pa = QP_BARY[m][a];
                for b in 0..3 {
                    let gb = Vec2::new(t.grads[b][0], t.grads[b][1]);
                    let pb = QP_BARY[m][b];
                    let v = ga.dot(&(it.fpp * gb)) + pb * it.fsp.dot(&ga) + pa * it.fsp.dot(&gb) + it.fss * pa * pb;
                    trip.push((t.nodes[a], t.nodes[b], w * v));
                }
            }
        });
        Ok(Csr::from_triplets(self.mesh.n_nodes(), self.mesh.n_nodes(), trip))
    }

    /// Residual normalized by the weighted lumped mass `int d(x, u) phi_i`,
    /// a pointwise proxy for the strong residual.
    pub fn msq_residual(&self, u: &[f64]) -> Result<Vec<f64>> {
        let r = self.residual(u)?;
        let mut mass = vec![0.0; self.mesh.n_nodes()];
        self.for_each_qp(u, |t, m, w, met, _, _| {
            for k in 0..3 {
                mass[t.nodes[k]] += w * met.d * QP_BARY[m][k];
            }
        });
        Ok(r.iter().zip(&mass).map(|(a, b)| a / b).collect())
    }

    fn interior_max(&self, r: &[f64]) -> f64 {
        (0..r.len()).filter(|&i| !self.mesh.is_boundary(i)).fold(0.0, |m, i| m.max(r[i].abs()))
    }

    fn interior_norm(&self, r: &[f64]) -> f64 {
        (0..r.len()).filter(|&i| !self.mesh.is_boundary(i)).map(|i| r[i] * r[i]).sum::<f64>().sqrt()
    }

    /// Harmonic (flat) extension of nodal boundary values.
    pub fn harmonic_lift(&self, boundary: &[f64]) -> Vec<f64> {
        self.lift.solve_nodal(boundary, &vec![0.0; self.mesh.n_nodes()])
    }

    /// Damped Newton from the harmonic lift. `boundary` is a full-length
    /// nodal vector whose boundary entries are the Dirichlet data.
    pub fn solve_nodal(&self, boundary: &[f64], opts: &NewtonOptions) -> Result<GraphSolution> {
        let n = self.mesh.n_nodes();
        let interior = self.mesh.interior_nodes();
        let mut pos = vec![usize::MAX; n];
        for (k, &i) in interior.iter().enumerate() {
            pos[i] = k;
        }
        let mut u = self.harmonic_lift(boundary);
        self.check_range(&u)?;
        let mut r = self.residual(&u)?;
        let mut history = vec![self.interior_max(&r)];
        let mut iterations = 0;
        while history.last().copied().unwrap_or(0.0) > opts.tol {
            if iterations == opts.max_iter {
                return Err(Error::NewtonDivergence { iterations, residual: *history.last().unwrap_or(&f64::NAN) });
            }
            let j = self.jacobian(&u)?.submatrix(&pos, interior.len());
            let ldl = SkylineLdl::factor(&j)?;
            let mut step: Vec<f64> = interior.iter().map(|&i| -r[i]).collect();
            ldl.solve_in_place(&mut step);
            let base = self.interior_norm(&r);
            let mut t = 1.0;
            let mut accepted = None;
            for _ in 0..=opts.max_halvings {
                let mut trial = u.clone();
                for (k, &i) in interior.iter().enumerate() {
                    trial[i] += t * step[k];
                }
                if let Ok(rt) = self.residual(&trial) {
                    if self.interior_norm(&rt) <= (1.0 - 1e-4 * t) * base {
                        accepted = Some((trial, rt));
                        break;
                    }
                }
                t *= 0.5;
            }
            iterations += 1;
            let step_max = step.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            match accepted {
                Some((nu, nr)) => {
                    u = nu;
                    r = nr;
                    history.push(self.interior_max(&r));
                }
                // a full step that cannot reduce the residual any further is
                // roundoff stagnation, not divergence
                None if step_max <= 1e-13 => break,
                None => return Err(Error::NewtonDivergence { iterations, residual: base }),
            }
            if step_max <= 1e-16 {
                break;
            }
        }
        let area = self.area(&u)?;
        Ok(GraphSolution { residual: *history.last().unwrap_or(&0.0), u, boundary: boundary.to_vec(), iterations, history, area })
    }

    pub fn solve(&self, f: &BoundaryFunction, opts: &NewtonOptions) -> Result<GraphSolution> {
        self.solve_nodal(&f.sample_real(self.mesh), opts)
    }

    /// `dArea(u)[w] = R(u) . w`, split into interior and boundary parts.
    pub fn first_variation(&self, u: &[f64], w: &[f64]) -> Result<FirstVariation> {
        let r = self.residual(u)?;
        let (mut inner, mut bnd) = (0.0, 0.0);
        for i in 0..r.len() {
            if self.mesh.is_boundary(i) {
                bnd += r[i] * w[i];
            } else {
                inner += r[i] * w[i];
            }
        }
        Ok(FirstVariation { interior: inner, boundary: bnd, total: inner + bnd })
    }

    /// Boundary flux density `rho = d W^-1 n^T k grad u` (Euclidean length)
    /// recovered from the boundary rows of the residual.
    pub fn flux_density(&self, u: &[f64]) -> Result<Vec<f64>> {
        let r = self.residual(u)?;
        let mut sigma = vec![0.0; r.len()];
        for lp in &self.mesh.boundary {
            for &i in &lp.nodes {
                sigma[i] = r[i];
            }
        }
        Ok(boundary_density(self.mesh, &sigma))
    }

    /// Nonlinear DN map at the nodes for a converged solution with Fourier
    /// boundary data `f`.
    pub fn dn_nodal(&self, sol: &GraphSolution, f: &BoundaryFunction, conv: NormalConvention) -> Result<Vec<f64>> {
        let rho = self.flux_density(&sol.u)?;
        let df = f.d_theta();
        let mut out = vec![0.0; self.mesh.n_nodes()];
        for (l, lp) in self.mesh.boundary.iter().enumerate() {
            for (j, &i) in lp.nodes.iter().enumerate() {
                let x = self.mesh.nodes[i];
                let n = outward_normal(self.mesh, lp, i);
                let t = tangent(self.mesh, lp, i);
                let (n, t) = (Vec2::new(n[0], n[1]), Vec2::new(t[0], t[1]));
                let tder = lp.orientation.sign() * df.eval(l, lp.angle(j)).re / lp.radius;
                let met = MetricAt::new(self.family, x, sol.u[i]);
                let p = boundary_gradient(&met, n, t, tder, rho[i])?;
                let kk = match conv {
                    NormalConvention::Moving => met.k,
                    NormalConvention::Fixed => MetricAt::new(self.family, x, 0.0).k,
                };
                out[i] = n.dot(&(kk * p)) / n.dot(&(kk * n)).sqrt();
            }
        }
        Ok(out)
    }

    pub fn nonlinear_dn(&self, f: &BoundaryFunction, conv: NormalConvention, opts: &NewtonOptions) -> Result<(GraphSolution, BoundaryFunction)> {
        let sol = self.solve(f, opts)?;
        let nodal = self.dn_nodal(&sol, f, conv)?;
        let bf = BoundaryFunction::from_nodal_real(self.mesh, &nodal, f.nf);
        Ok((sol, bf))
    }

    /// Compares the centered difference of the minimal area in the boundary
    /// direction `w` with the boundary integral of `w` against the flux.
    pub fn dn_from_volumes(&self, f: &BoundaryFunction, w: &BoundaryFunction, t: f64, opts: &NewtonOptions) -> Result<VolumeCheck> {
        let bp = f.axpy(t, w)?;
        let bm = f.axpy(-t, w)?;
        let (sp, sm, s0) = (self.solve(&bp, opts)?, self.solve(&bm, opts)?, self.solve(f, opts)?);
        let fd = (sp.area - sm.area) / (2.0 * t);
        let rho = self.flux_density(&s0.u)?;
        let wn = w.sample_real(self.mesh);
        let mut density = 0.0;
        for lp in &self.mesh.boundary {
            let ds = lp.arc_step();
            density += lp.nodes.iter().map(|&i| wn[i] * rho[i] * ds).sum::<f64>();
        }
        let fv = self.first_variation(&s0.u, &wn)?;
        Ok(VolumeCheck { fd, boundary_integral: density, discrete_pairing: fv.boundary, difference: (fd - density).abs() })
    }

    /// Largest cosine amplitude of mode `n` for which Newton converges,
    /// found by bisection on `[0, upper]`.
    pub fn wellposedness_radius(&self, n: i64, upper: f64, steps: usize) -> f64 {
        let (mut lo, mut hi) = (0.0, upper);
        let nloops = self.mesh.boundary.len();
        for _ in 0..steps {
            let mid = 0.5 * (lo + hi);
            let f = BoundaryFunction::cosine(nloops, n.unsigned_abs() as usize + 1, 0, n, mid);
            if self.solve(&f, &NewtonOptions::default()).is_ok() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// Solves for several boundary data in parallel.
    pub fn solve_many(&self, data: &[BoundaryFunction], opts: &NewtonOptions) -> Result<Vec<GraphSolution>> {
        data.par_iter().map(|f| self.solve(f, opts)).collect()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct FirstVariation {
    pub interior: f64,
    pub boundary: f64,
    pub total: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct VolumeCheck {
    /// `(Area(f + t w) - Area(f - t w)) / 2t`
    pub fd: f64,
    /// `int w rho ds` by the trapezoid rule on the recovered density
    pub boundary_integral: f64,
    /// `sum_b R_b w_b`, the discrete counterpart
    pub discrete_pairing: f64,
    pub difference: f64,
}

/// Solves `rho = d n^T k p / sqrt(1 + p^T k p)` for the normal component of
/// `p = lambda n + T t` with the tangential part `T` known.
pub fn boundary_gradient(met: &MetricAt, n: Vec2, t: Vec2, tder: f64, rho: f64) -> Result<Vec2> {
    let k: Mat2 = met.k;
    let nkn = n.dot(&(k * n));
    let mut lam = (rho / met.d - tder * n.dot(&(k * t))) / nkn;
    for _ in 0..50 {
        let p = n * lam + t * tder;
        let kp = k * p;
        let w = (1.0 + p.dot(&kp)).sqrt();
        let nkp = n.dot(&kp);
        let g = met.d * nkp / w - rho;
        let dg = met.d * (nkn / w - nkp * nkp / (w * w * w));
        let step = g / dg;
        lam -= step;
        if step.abs() <= 1e-15 * (1.0 + lam.abs()) {
            return Ok(n * lam + t * tder);
        }
    }
    Err(Error::NewtonDivergence { iterations: 50, residual: f64::NAN })
}
