use fermi_forge::error::Error;
use fermi_forge::forward::{MinimalGraph, NewtonOptions, NormalConvention};
use fermi_forge::geometry::{build_mesh, Domain, ExpFamily, Mesh};
use fermi_forge::pde_core::BoundaryFunction;
use proptest::prelude::*;

fn disk(level: usize) -> Mesh {
    build_mesh(Domain::UnitDisk, level).unwrap()
}

fn bump(mesh: &Mesh, c: [f64; 2]) -> Vec<f64> {
    mesh.nodes
        .iter()
        .enumerate()
        .map(|(i, p)| if mesh.is_boundary(i) { 0.0 } else { 0.1 * (-4.0 * ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2))).exp() })
        .collect()
}

#[test]
fn planes_are_exact_for_the_flat_family() {
    // affine graphs are Euclidean minimal surfaces and P1 reproduces them
    let fam = ExpFamily::euclidean();
    let mesh = disk(3);
    let g = MinimalGraph::new(&fam, &mesh).unwrap();
    let f = BoundaryFunction::cosine(1, 4, 0, 1, 0.2);
    let sol = g.solve(&f, &NewtonOptions::default()).unwrap();
    let err = mesh.nodes.iter().zip(&sol.u).map(|(p, u)| (u - 0.2 * p[0]).abs()).fold(0.0, f64::max);
    assert!(err < 1e-12, "{err}");
    assert!((sol.area - mesh.total_area() * 1.04f64.sqrt()).abs() < 1e-12);
}

#[test]
fn flat_dn_of_a_plane_is_its_normal_slope() {
    let fam = ExpFamily::euclidean();
    let mesh = disk(4);
    let g = MinimalGraph::new(&fam, &mesh).unwrap();
    let f = BoundaryFunction::cosine(1, 4, 0, 1, 0.2);
    let (_, dn) = g.nonlinear_dn(&f, NormalConvention::Moving, &NewtonOptions::default()).unwrap();
    let err = (0..mesh.boundary[0].len())
        .map(|j| {
            let th = mesh.boundary[0].angle(j);
            (dn.eval(0, th).re - 0.2 * th.cos()).abs()
        })
        .fold(0.0, f64::max);
    assert!(err < 1e-3, "{err}");
}

#[test]
fn residual_is_the_area_gradient() {
    let fam = ExpFamily::standard();
    let mesh = disk(2);
    let g = MinimalGraph::new(&fam, &mesh).unwrap();
    let u = bump(&mesh, [0.2, -0.1]);
    let r = g.residual(&u).unwrap();
    let eps = 1e-5;
    for i in [0, 5, 17, mesh.n_nodes() - 1] {
        let mut up = u.clone();
        let mut um = u.clone();
        up[i] += eps;
        um[i] -= eps;
        let fd = (g.area(&up).unwrap() - g.area(&um).unwrap()) / (2.0 * eps);
        assert!((fd - r[i]).abs() < 1e-9, "node {i}: {fd} vs {}", r[i]);
    }
}

#[test]
fn jacobian_is_the_residual_derivative() {
    let fam = ExpFamily::standard();
    let mesh = disk(2);
    let g = MinimalGraph::new(&fam, &mesh).unwrap();
    let u = bump(&mesh, [-0.3, 0.1]);
    let j = g.jacobian(&u).unwrap();
    assert!(j.asymmetry() < 1e-12);
    let dir = bump(&mesh, [0.1, 0.3]);
    let eps = 1e-6;
    let up: Vec<f64> = u.iter().zip(&dir).map(|(a, b)| a + eps * b).collect();
    let um: Vec<f64> = u.iter().zip(&dir).map(|(a, b)| a - eps * b).collect();
    let (rp, rm) = (g.residual(&up).unwrap(), g.residual(&um).unwrap());
    let jd = j.matvec(&dir);
    for i in 0..mesh.n_nodes() {
        let fd = (rp[i] - rm[i]) / (2.0 * eps);
        assert!((fd - jd[i]).abs() < 1e-8, "row {i}");
    }
}

#[test]
fn newton_converges_quadratically() {
    let fam = ExpFamily::standard();
    let mesh = disk(3);
    let g = MinimalGraph::new(&fam, &mesh).unwrap();
    let f = BoundaryFunction::cosine(1, 8, 0, 2, 0.1).axpy(1.0, &BoundaryFunction::sine(1, 8, 0, 1, 0.05)).unwrap();
    let sol = g.solve(&f, &NewtonOptions::default()).unwrap();
    assert!(sol.residual <= 1e-13);
    assert!(sol.iterations <= 8, "{:?}", sol.history);
    let c = sol.quadratic_constant().expect("enough iterates");
    assert!(c < 1e3, "{c}");
}

#[test]
fn out_of_range_data_is_rejected() {
    let fam = ExpFamily::standard();
    let mesh = disk(1);
    let g = MinimalGraph::new(&fam, &mesh).unwrap();
    let f = BoundaryFunction::cosine(1, 4, 0, 1, 2.0);
    assert!(matches!(g.solve(&f, &NewtonOptions::default()), Err(Error::OutOfRange { .. })));
    let tight = NewtonOptions { max_iter: 0, ..NewtonOptions::default() };
    let f = BoundaryFunction::cosine(1, 4, 0, 2, 0.1);
    assert!(matches!(g.solve(&f, &tight), Err(Error::NewtonDivergence { .. })));
}

#[test]
fn area_derivative_in_boundary_direction_is_the_flux_pairing() {
    let fam = ExpFamily::standard();
    let mesh = disk(3);
    let g = MinimalGraph::new(&fam, &mesh).unwrap();
    let f = BoundaryFunction::cosine(1, 8, 0, 1, 0.05);
    let w = BoundaryFunction::sine(1, 8, 0, 2, 1.0);
    let v = g.dn_from_volumes(&f, &w, 1e-3, &NewtonOptions::default()).unwrap();
    // the discrete pairing is exact up to the O(t^2) difference error
    assert!((v.fd - v.discrete_pairing).abs() < 1e-6, "{v:?}");
    assert!(v.difference < 1e-2, "{v:?}");
}

#[test]
fn parallel_solves_match_sequential_ones() {
    let fam = ExpFamily::standard();
    let mesh = disk(2);
    let g = MinimalGraph::new(&fam, &mesh).unwrap();
    let data: Vec<BoundaryFunction> = (1..=3).map(|n| BoundaryFunction::cosine(1, 4, 0, n, 0.05)).collect();
    let many = g.solve_many(&data, &NewtonOptions::default()).unwrap();
    for (f, s) in data.iter().zip(&many) {
        assert_eq!(g.solve(f, &NewtonOptions::default()).unwrap().u, s.u);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn solutions_minimize_area(a in -0.1f64..0.1, b in -0.1f64..0.1, cx in -0.5f64..0.5, cy in -0.5f64..0.5, t in -0.05f64..0.05) {
        let fam = ExpFamily::standard();
        let mesh = disk(2);
        let g = MinimalGraph::new(&fam, &mesh).unwrap();
        let f = BoundaryFunction::cosine(1, 4, 0, 1, a).axpy(1.0, &BoundaryFunction::sine(1, 4, 0, 2, b)).unwrap();
        let sol = g.solve(&f, &NewtonOptions::default()).unwrap();
        let phi = bump(&mesh, [cx, cy]);
        let moved: Vec<f64> = sol.u.iter().zip(&phi).map(|(u, p)| u + t * p).collect();
        prop_assert!(g.area(&moved).unwrap() >= sol.area - 1e-14);
    }

    #[test]
    fn sign_flip_is_a_symmetry_of_the_flat_family(a in -0.2f64..0.2, n in 1i64..4) {
        let fam = ExpFamily::euclidean();
        let mesh = disk(2);
        let g = MinimalGraph::new(&fam, &mesh).unwrap();
        let f = BoundaryFunction::cosine(1, 4, 0, n, a);
        let up = g.solve(&f, &NewtonOptions::default()).unwrap();
        let dn = g.solve(&f.scale(-1.0), &NewtonOptions::default()).unwrap();
        for (x, y) in up.u.iter().zip(&dn.u) {
            prop_assert!((x + y).abs() < 1e-12);
        }
    }
}
