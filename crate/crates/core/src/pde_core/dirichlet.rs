//! Dirichlet solves, variational conormal traces, DN matrices and the
//! zero-Dirichlet Green operator.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{Mat2, Mesh};

use super::boundary::{boundary_density, outward_normal, BoundaryFunction};
use super::fem::{load_vector, Operator};
use super::sparse::{Csr, SkylineLdl};

/// A factored Dirichlet problem for one operator.
#[derive(Clone, Debug)]
pub struct DirichletSolver {
    pub op: Operator,
    interior: Vec<usize>,
    pos: Vec<usize>,
    ldl: SkylineLdl,
}

impl DirichletSolver {
    pub fn new(mesh: &Mesh, op: Operator) -> Result<Self> {
        let interior = mesh.interior_nodes();
        let mut pos = vec![usize::MAX; mesh.n_nodes()];
        for (k, &i) in interior.iter().enumerate() {
            pos[i] = k;
        }
        let a_ii = op.matrix.submatrix(&pos, interior.len());
        let ldl = SkylineLdl::factor(&a_ii)?;
        Ok(DirichletSolver { op, interior, pos, ldl })
    }

    pub fn matrix(&self) -> &Csr {
        &self.op.matrix
    }

    pub fn condition_estimate(&self) -> f64 {
        self.ldl.condition_estimate
    }

    /// Solves `K u = load` in the interior with `u = boundary` on boundary
    /// nodes. Both inputs are full-length nodal vectors; interior entries of
    /// `boundary` and boundary entries of `load` are ignored.
    pub fn solve_nodal(&self, boundary: &[f64], load: &[f64]) -> Vec<f64> {
        let mut u: Vec<f64> = boundary.to_vec();
        for &i in &self.interior {
            u[i] = 0.0;
        }
        let mut rhs: Vec<f64> = self.interior.iter().map(|&i| load[i]).collect();
        for (k, &i) in self.interior.iter().enumerate() {
            for (j, v) in self.op.matrix.row(i) {
                if self.pos[j] == usize::MAX {
                    rhs[k] -= v * u[j];
                }
            }
        }
        self.ldl.solve_in_place(&mut rhs);
        for (k, &i) in self.interior.iter().enumerate() {
            u[i] = rhs[k];
        }
        u
    }

    /// Complex data through two real solves sharing the factorization.
    pub fn solve_nodal_c(&self, boundary: &[Complex64], load: &[Complex64]) -> Vec<Complex64> {
        let re = self.solve_nodal(&boundary.iter().map(|v| v.re).collect::<Vec<_>>(), &load.iter().map(|v| v.re).collect::<Vec<_>>());
        let im = self.solve_nodal(&boundary.iter().map(|v| v.im).collect::<Vec<_>>(), &load.iter().map(|v| v.im).collect::<Vec<_>>());
        re.into_iter().zip(im).map(|(a, b)| Complex64::new(a, b)).collect()
    }

    /// Homogeneous problem with Fourier boundary data (real part).
    pub fn solve(&self, mesh: &Mesh, f: &BoundaryFunction) -> Vec<f64> {
        let zero = vec![0.0; mesh.n_nodes()];
        self.solve_nodal(&f.sample_real(mesh), &zero)
    }

    pub fn solve_c(&self, mesh: &Mesh, f: &BoundaryFunction) -> Vec<Complex64> {
        let zero = vec![Complex64::new(0.0, 0.0); mesh.n_nodes()];
        self.solve_nodal_c(&f.sample(mesh), &zero)
    }

    /// Boundary moments `(K u - load)_i` for boundary nodes, zero elsewhere.
    pub fn flux_moments(&self, mesh: &Mesh, u: &[f64], load: &[f64]) -> Vec<f64> {
        let mut s = vec![0.0; mesh.n_nodes()];
        for lp in &mesh.boundary {
            for &i in &lp.nodes {
                s[i] = self.op.matrix.row(i).map(|(j, v)| v * u[j]).sum::<f64>() - load[i];
            }
        }
        s
    }

    /// Nodal conormal derivative on the boundary (zero elsewhere).
    pub fn neumann_nodal(&self, mesh: &Mesh, u: &[f64], load: &[f64]) -> Vec<f64> {
        let rho = boundary_density(mesh, &self.flux_moments(mesh, u, load));
        conormal_from_density(mesh, &self.op.coef.a, &self.op.coef.d, &rho)
    }

    pub fn neumann_trace(&self, mesh: &Mesh, u: &[f64], nf: usize) -> BoundaryFunction {
        let zero = vec![0.0; mesh.n_nodes()];
        BoundaryFunction::from_nodal_real(mesh, &self.neumann_nodal(mesh, u, &zero), nf)
    }

    /// Solves `op u = rhs` with zero boundary values (`rhs` nodal).
    pub fn green_solve(&self, mesh: &Mesh, rhs: &[f64]) -> Vec<f64> {
        let load = load_vector(mesh, &self.op.geom, &self.op.coef.d, rhs);
        self.solve_nodal(&vec![0.0; mesh.n_nodes()], &load)
    }

    pub fn green_solve_c(&self, mesh: &Mesh, rhs: &[Complex64]) -> Vec<Complex64> {
        let re = self.green_solve(mesh, &rhs.iter().map(|v| v.re).collect::<Vec<_>>());
        let im = self.green_solve(mesh, &rhs.iter().map(|v| v.im).collect::<Vec<_>>());
        re.into_iter().zip(im).map(|(a, b)| Complex64::new(a, b)).collect()
    }

    /// Interior residual `||(K u - load)_I|| / ||load_I + K_IB u_B||`.
    pub fn interior_residual(&self, u: &[f64], load: &[f64]) -> f64 {
        let ku = self.op.matrix.matvec(u);
        let (mut num, mut den) = (0.0f64, 0.0f64);
        for &i in &self.interior {
            num += (ku[i] - load[i]).powi(2);
            den += load[i].powi(2) + ku[i].powi(2);
        }
        (num / den.max(f64::MIN_POSITIVE)).sqrt()
    }
}

/// Converts a Euclidean-length flux density to the conormal derivative
/// `rho / (d |n|_A)`, using `d |n|_A ds = dS_g` when `A = g^-1`.
pub fn conormal_from_density(mesh: &Mesh, a: &[Mat2], d: &[f64], rho: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; mesh.n_nodes()];
    for lp in &mesh.boundary {
        for &i in &lp.nodes {
            out[i] = rho[i] / (d[i] * norm_a(&a[i], outward_normal(mesh, lp, i)));
        }
    }
    out
}

pub fn norm_a(a: &Mat2, n: [f64; 2]) -> f64 {
    (a[(0, 0)] * n[0] * n[0] + 2.0 * a[(0, 1)] * n[0] * n[1] + a[(1, 1)] * n[1] * n[1]).sqrt()
}

/// Nodal boundary weights for `dS_g` (trapezoid on each loop), zero inside.
pub fn boundary_weights(mesh: &Mesh, a: &[Mat2], d: &[f64]) -> Vec<f64> {
    let mut w = vec![0.0; mesh.n_nodes()];
    for lp in &mesh.boundary {
        let ds = lp.arc_step();
        for &i in &lp.nodes {
            w[i] = ds * d[i] * norm_a(&a[i], outward_normal(mesh, lp, i));
        }
    }
    w
}

/// Dirichlet-to-Neumann operator on the stacked Fourier basis. Column
/// `loop * (2 nf + 1) + (n + nf)` holds the trace coefficients of the
/// response to `e^{i n theta}` on that loop.
#[derive(Clone, Debug)]
pub struct DnMatrix {
    pub nf: usize,
    pub nloops: usize,
    pub level: usize,
    pub matrix: DMatrix<Complex64>,
    /// nodal conormal traces per column, ordered as `boundary_nodes`
    pub nodal: Vec<Vec<Complex64>>,
    pub boundary_nodes: Vec<usize>,
    pub weights: Vec<f64>,
    pub label: String,
}

pub fn dn_matrix(mesh: &Mesh, solver: &DirichletSolver, nf: usize, label: &str) -> DnMatrix {
    let nloops = mesh.boundary.len();
    let width = 2 * nf + 1;
    let bnodes: Vec<usize> = mesh.boundary.iter().flat_map(|lp| lp.nodes.iter().copied()).collect();
    let zero = vec![0.0; mesh.n_nodes()];
    let cols: Vec<(BoundaryFunction, Vec<Complex64>)> = (0..nloops * width)
        .into_par_iter()
        .map(|c| {
            let f = BoundaryFunction::mode(nloops, nf, c / width, (c % width) as i64 - nf as i64);
            let u = solver.solve_c(mesh, &f);
            let re: Vec<f64> = u.iter().map(|v| v.re).collect();
            let im: Vec<f64> = u.iter().map(|v| v.im).collect();
            let (tr, ti) = (solver.neumann_nodal(mesh, &re, &zero), solver.neumann_nodal(mesh, &im, &zero));
            let t: Vec<Complex64> = tr.iter().zip(&ti).map(|(&a, &b)| Complex64::new(a, b)).collect();
            let nodal = bnodes.iter().map(|&i| t[i]).collect();
            (BoundaryFunction::from_nodal(mesh, &t, nf), nodal)
        })
        .collect();
    let mut matrix = DMatrix::zeros(nloops * width, nloops * width);
    let mut nodal = Vec::with_capacity(cols.len());
    for (c, (bf, nd)) in cols.into_iter().enumerate() {
        for l in 0..nloops {
            for r in 0..width {
                matrix[(l * width + r, c)] = bf.coeffs[l][r];
            }
        }
        nodal.push(nd);
    }
    let w = boundary_weights(mesh, &solver.op.coef.a, &solver.op.coef.d);
    DnMatrix {
        nf,
        nloops,
        level: mesh.level,
        matrix,
        nodal,
        weights: bnodes.iter().map(|&i| w[i]).collect(),
        boundary_nodes: bnodes,
        label: label.to_string(),
    }
}

impl DnMatrix {
    pub fn apply(&self, f: &BoundaryFunction) -> Result<BoundaryFunction> {
        if f.nf != self.nf || f.coeffs.len() != self.nloops {
            return Err(Error::Invalid("boundary function layout does not match DN matrix".into()));
        }
        let x = nalgebra::DVector::from_iterator(self.matrix.ncols(), f.coeffs.iter().flatten().copied());
        let y = &self.matrix * x;
        let width = 2 * self.nf + 1;
        Ok(BoundaryFunction { nf: self.nf, coeffs: (0..self.nloops).map(|l| y.rows(l * width, width).iter().copied().collect()).collect() })
    }

    /// Pairing `P_nm = int (Lambda e_m) e_n dS_g`, evaluated at the nodes.
    pub fn pairing(&self, mesh: &Mesh) -> DMatrix<Complex64> {
        let width = 2 * self.nf + 1;
        let ncol = self.nodal.len();
        // basis samples at boundary nodes
        let mut basis = vec![vec![Complex64::new(0.0, 0.0); self.boundary_nodes.len()]; ncol];
        let mut offset = 0;
        for (l, lp) in mesh.boundary.iter().enumerate() {
            for j in 0..lp.len() {
                let th = lp.angle(j);
                for r in 0..width {
                    let n = r as f64 - self.nf as f64;
                    basis[l * width + r][offset + j] = Complex64::from_polar(1.0, n * th);
                }
            }
            offset += lp.len();
        }
        DMatrix::from_fn(ncol, ncol, |n, m| {
            self.nodal[m].iter().zip(&basis[n]).zip(&self.weights).map(|((a, b), w)| a * b * *w).sum()
        })
    }

    /// `||P - P^T|| / ||P||` in the Frobenius norm.
    pub fn symmetry_defect(&self, mesh: &Mesh) -> f64 {
        let p = self.pairing(mesh);
        (&p - p.transpose()).norm() / p.norm()
    }
}
