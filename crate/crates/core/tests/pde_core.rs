use fermi_forge::geometry::{build_mesh, Domain, Mat2};
use fermi_forge::pde_core::{
    assemble_operator, dn_matrix, schrodinger_flat, BoundaryFunction, DirichletSolver,
};
use num_complex::Complex64;
use proptest::prelude::*;

fn laplace(level: usize) -> (fermi_forge::geometry::Mesh, DirichletSolver) {
    let mesh = build_mesh(Domain::UnitDisk, level).unwrap();
    let op = schrodinger_flat(&mesh, vec![0.0; mesh.n_nodes()]).unwrap();
    let s = DirichletSolver::new(&mesh, op).unwrap();
    (mesh, s)
}

fn max_err_mode(level: usize, n: i64) -> f64 {
    let (mesh, s) = laplace(level);
    let f = BoundaryFunction::mode(1, 8, 0, n);
    let u = s.solve_c(&mesh, &f);
    mesh.nodes
        .iter()
        .zip(&u)
        .map(|(p, v)| {
            let z = Complex64::new(p[0], p[1]);
            let r = z.norm();
            let exact = Complex64::from_polar(r.powi(n.abs() as i32), n as f64 * z.arg());
            (v - exact).norm()
        })
        .fold(0.0, f64::max)
}

#[test]
fn zero_data_gives_zero() {
    let (mesh, s) = laplace(2);
    let u = s.solve(&mesh, &BoundaryFunction::zeros(1, 4));
    assert!(u.iter().all(|&v| v == 0.0));
}

#[test]
fn cosine_data_reproduces_x() {
    let (mesh, s) = laplace(3);
    let u = s.solve(&mesh, &BoundaryFunction::cosine(1, 4, 0, 1, 1.0));
    let err = mesh.nodes.iter().zip(&u).map(|(p, v)| (p[0] - v).abs()).fold(0.0, f64::max);
    assert!(err < 5e-3, "{err}");
}

#[test]
fn harmonic_polynomials_converge_at_second_order() {
    for n in [2i64, 3] {
        let e: Vec<f64> = (2..=4).map(|l| max_err_mode(l, n)).collect();
        for w in e.windows(2) {
            let rate = (w[0] / w[1]).log2();
            assert!(rate >= 1.9, "mode {n}: errors {e:?}");
        }
    }
}

#[test]
fn constants_in_kernel_and_symmetric_assembly() {
    let mesh = build_mesh(Domain::UnitDisk, 2).unwrap();
    let n = mesh.n_nodes();
    let a: Vec<Mat2> = (0..n)
        .map(|i| {
            let t = i as f64 * 0.37;
            Mat2::new(2.0 + t.sin(), 0.3 * t.cos(), 0.3 * t.cos(), 1.5 + 0.5 * t.cos())
        })
        .collect();
    let d: Vec<f64> = (0..n).map(|i| 1.0 + 0.2 * (i as f64).sin().abs()).collect();
    let op = assemble_operator(&mesh, a, d, vec![0.0; n]).unwrap();
    assert!(op.matrix.asymmetry() < 1e-14);
    let ones = vec![1.0; n];
    let k1 = op.matrix.matvec(&ones);
    for i in mesh.interior_nodes() {
        assert!(k1[i].abs() < 1e-12);
    }
}

#[test]
fn dn_matrix_of_laplacian_is_diagonal_abs_n() {
    let (mesh, s) = laplace(4);
    let dn = dn_matrix(&mesh, &s, 6, "laplace");
    for r in 0..13 {
        for c in 0..13 {
            let n = c as f64 - 6.0;
            let want = if r == c { n.abs() } else { 0.0 };
            assert!((dn.matrix[(r, c)].re - want).abs() < 2e-2 * (1.0 + n * n), "{r} {c} {}", dn.matrix[(r, c)]);
        }
    }
}

#[test]
fn neumann_trace_superconverges() {
    let errs: Vec<f64> = (2..=4)
        .map(|l| {
            let (mesh, s) = laplace(l);
            let f = BoundaryFunction::cosine(1, 8, 0, 3, 1.0);
            let u = s.solve(&mesh, &f);
            let tr = s.neumann_trace(&mesh, &u, 8);
            (tr.get(0, 3).re - 1.5).abs().max((tr.get(0, -3).re - 1.5).abs())
        })
        .collect();
    for w in errs.windows(2) {
        assert!((w[0] / w[1]).log2() >= 1.5, "{errs:?}");
    }
}

#[test]
fn annulus_log_r_traces() {
    let mesh = build_mesh(Domain::Annulus { inner_radius: 0.5 }, 4).unwrap();
    let op = schrodinger_flat(&mesh, vec![0.0; mesh.n_nodes()]).unwrap();
    let s = DirichletSolver::new(&mesh, op).unwrap();
    let b: Vec<f64> = mesh.nodes.iter().map(|p| p[0].hypot(p[1]).ln()).collect();
    let u = s.solve_nodal(&b, &vec![0.0; mesh.n_nodes()]);
    let t = s.neumann_nodal(&mesh, &u, &vec![0.0; mesh.n_nodes()]);
    for &i in &mesh.boundary[0].nodes {
        assert!((t[i] - 1.0).abs() < 1e-2, "outer {}", t[i]);
    }
    for &i in &mesh.boundary[1].nodes {
        assert!((t[i] + 2.0).abs() < 2e-2, "inner {}", t[i]);
    }
}

#[test]
fn green_solve_radial() {
    let (mesh, s) = laplace(4);
    let u = s.green_solve(&mesh, &vec![4.0; mesh.n_nodes()]);
    let err = mesh.nodes.iter().zip(&u).map(|(p, v)| (1.0 - p[0] * p[0] - p[1] * p[1] - v).abs()).fold(0.0, f64::max);
    assert!(err < 1e-3, "{err}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]
    #[test]
    fn green_solve_is_linear(a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let (mesh, s) = laplace(2);
        let r1: Vec<f64> = mesh.nodes.iter().map(|p| p[0] * p[1]).collect();
        let r2: Vec<f64> = mesh.nodes.iter().map(|p| 1.0 + p[0]).collect();
        let comb: Vec<f64> = r1.iter().zip(&r2).map(|(x, y)| a * x + b * y).collect();
        let (g1, g2, g) = (s.green_solve(&mesh, &r1), s.green_solve(&mesh, &r2), s.green_solve(&mesh, &comb));
        for i in 0..g.len() {
            prop_assert!((g[i] - a * g1[i] - b * g2[i]).abs() < 1e-12);
        }
    }
}
