//! Homology periods `int_gamma *du` on the annulus and the projection onto
//! traces whose harmonic extension has a global conjugate.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{build_mesh, Domain, Mesh};
use crate::pde_core::{schrodinger_flat, tri_geometry, BoundaryFunction, DirichletSolver, TriGeom};

/// Distinct node-ring radii of a ring-structured mesh, ascending.
pub fn ring_radii(mesh: &Mesh) -> Vec<f64> {
    let mut r: Vec<f64> = mesh.nodes.iter().map(|p| p[0].hypot(p[1])).collect();
    r.sort_by(|a, b| a.total_cmp(b));
    r.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    r
}

/// Snaps `radius` to the nearest node ring and checks it lies strictly
/// between the boundary circles.
fn snap(mesh: &Mesh, radius: f64) -> Result<f64> {
    let rings = ring_radii(mesh);
    let Some(&r) = rings.iter().min_by(|a, b| (*a - radius).abs().total_cmp(&(*b - radius).abs())) else {
        return Err(Error::LoopNotInterior("empty mesh".into()));
    };
    let (lo, hi) = (rings[0], rings[rings.len() - 1]);
    if !matches!(mesh.domain, Domain::Annulus { .. }) || r <= lo + 1e-9 || r >= hi - 1e-9 {
        return Err(Error::LoopNotInterior(format!("radius {radius} snaps to ring {r:.6}, boundary rings are {lo:.6} and {hi:.6}")));
    }
    Ok(r)
}

/// `int_gamma d_n u ds` over the polygon through the node ring nearest to
/// each radius, traversed counter-clockwise with the normal pointing away
/// from the hole. Edge gradients average the two adjacent triangles and
/// are integrated with the midpoint rule.
pub fn homology_periods(mesh: &Mesh, u: &[f64], loops: &[f64]) -> Result<Vec<f64>> {
    if u.len() != mesh.n_nodes() {
        return Err(Error::Invalid("field does not match the mesh".into()));
    }
    let geom = tri_geometry(mesh)?;
    let mut edges: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for (ti, t) in mesh.triangles.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            edges.entry((a.min(b), a.max(b))).or_default().push(ti);
        }
    }
    loops.iter().map(|&radius| period_on_ring(mesh, &geom, &edges, u, snap(mesh, radius)?)).collect()
}

fn period_on_ring(mesh: &Mesh, geom: &[TriGeom], edges: &HashMap<(usize, usize), Vec<usize>>, u: &[f64], r: f64) -> Result<f64> {
    let mut ring: Vec<usize> = (0..mesh.n_nodes()).filter(|&i| (mesh.nodes[i][0].hypot(mesh.nodes[i][1]) - r).abs() < 1e-9).collect();
    ring.sort_by(|&a, &b| {
        let t = |i: usize| mesh.nodes[i][1].atan2(mesh.nodes[i][0]);
        t(a).total_cmp(&t(b))
    });
    let mut flux = 0.0;
    for k in 0..ring.len() {
        let (a, b) = (ring[k], ring[(k + 1) % ring.len()]);
        let Some(tris) = edges.get(&(a.min(b), a.max(b))) else {
            return Err(Error::LoopNotInterior(format!("ring {r:.6} is not a chain of mesh edges")));
        };
        let mut g = [0.0; 2];
        for &t in tris {
            let gt = geom[t].grad(u);
            g[0] += gt[0] / tris.len() as f64;
            g[1] += gt[1] / tris.len() as f64;
        }
        let (pa, pb) = (mesh.nodes[a], mesh.nodes[b]);
        // (dy, -dx) is the right normal of a counter-clockwise edge
        flux += g[0] * (pb[1] - pa[1]) - g[1] * (pb[0] - pa[0]);
    }
    Ok(flux)
}

/// Flat annulus with a factored Laplace solver and a fixed period loop.
pub struct Annulus {
    pub mesh: Mesh,
    pub inner_radius: f64,
    pub loop_radius: f64,
    pub nf: usize,
    solver: DirichletSolver,
}

impl Annulus {
    pub fn new(inner_radius: f64, level: usize, nf: usize) -> Result<Annulus> {
        let mesh = build_mesh(Domain::annulus(inner_radius)?, level)?;
        let solver = DirichletSolver::new(&mesh, schrodinger_flat(&mesh, vec![0.0; mesh.n_nodes()])?)?;
        let loop_radius = snap(&mesh, 0.5 * (1.0 + inner_radius))?;
        Ok(Annulus { mesh, inner_radius, loop_radius, nf, solver })
    }

    /// Harmonic extension of the real part of `f`.
    pub fn extend(&self, f: &BoundaryFunction) -> Vec<f64> {
        self.solver.solve(&self.mesh, f)
    }

    pub fn period(&self, f: &BoundaryFunction) -> Result<f64> {
        Ok(homology_periods(&self.mesh, &self.extend(f), &[self.loop_radius])?[0])
    }

    /// Trace of `log r`: zero on the outer circle, `log r0` on the inner.
    pub fn log_trace(&self) -> BoundaryFunction {
        let mut f = BoundaryFunction::zeros(2, self.nf);
        f.set(1, 0, num_complex::Complex64::new(self.inner_radius.ln(), 0.0));
        f
    }

    /// Trace of `Re z^n` on both circles.
    pub fn re_power_trace(&self, n: i64) -> BoundaryFunction {
        let mut f = BoundaryFunction::cosine(2, self.nf, 0, n, 1.0);
        let g = BoundaryFunction::cosine(2, self.nf, 1, n, self.inner_radius.powi(n as i32));
        for (a, b) in f.coeffs[1].iter_mut().zip(&g.coeffs[1]) {
            *a += b;
        }
        f
    }

    /// `f - (P(f) / P(f_1)) f_1` with `f_1` the trace of `log r`.
    pub fn project_to_conjugable(&self, f: &BoundaryFunction) -> Result<Projection> {
        let f1 = self.log_trace();
        let p1 = self.period(&f1)?;
        let pf = self.period(f)?;
        let coefficient = pf / p1;
        Ok(Projection { trace: f.axpy(-coefficient, &f1)?, coefficient, basis_period: p1 })
    }
}

#[derive(Clone, Debug)]
pub struct Projection {
    pub trace: BoundaryFunction,
    /// multiple of `f_1` removed
    pub coefficient: f64,
    /// `P(f_1)`, close to `2 pi`
    pub basis_period: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct PeriodReport {
    pub level: usize,
    pub loop_radius: f64,
    pub log_period: f64,
    pub re_z_period: f64,
    pub mixed_period: f64,
    pub projected_period: f64,
    /// `||proj(proj f) - proj f|| / ||proj f||` on coefficients
    pub idempotence: f64,
    /// `||proj(Re z) - Re z|| / ||Re z||`
    pub identity_defect: f64,
}

/// Periods of `log r`, `Re z` and `log r + Re z`, and the projection checks
/// on the latter.
pub fn period_checks(inner_radius: f64, level: usize, nf: usize) -> Result<PeriodReport> {
    let an = Annulus::new(inner_radius, level, nf)?;
    let log = an.log_trace();
    let rez = an.re_power_trace(1);
    let mixed = log.axpy(1.0, &rez)?;
    let p = an.project_to_conjugable(&mixed)?;
    let pp = an.project_to_conjugable(&p.trace)?;
    let pr = an.project_to_conjugable(&rez)?;
    let diff = |a: &BoundaryFunction, b: &BoundaryFunction| -> Result<f64> { Ok(a.axpy(-1.0, b)?.coef_norm() / b.coef_norm()) };
    Ok(PeriodReport {
        level,
        loop_radius: an.loop_radius,
        log_period: an.period(&log)?,
        re_z_period: an.period(&rez)?,
        mixed_period: an.period(&mixed)?,
        projected_period: an.period(&p.trace)?,
        idempotence: diff(&pp.trace, &p.trace)?,
        identity_defect: diff(&pr.trace, &rez)?,
    })
}
