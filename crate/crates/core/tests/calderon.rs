use std::f64::consts::PI;

use fermi_forge::calderon::{
    carleman_terms, conjugated, gauge_check, holo_trace_test, holomorphic_trace, homology_periods, random_polynomials,
    random_waves, sample_coefficients, schrodinger_dn, wkb_terms, wkb_residual, Annulus, ConjugatedHarmonic, TestField,
    Weight,
};
use fermi_forge::cgo::{Grid, HoloPoly, Phase};
use fermi_forge::error::Error;
use fermi_forge::geometry::{build_mesh, Domain, Mat2};
use num_complex::Complex64;
use proptest::prelude::*;

fn flat_dn(level: usize, nf: usize) -> fermi_forge::pde_core::DnMatrix {
    let mesh = build_mesh(Domain::UnitDisk, level).unwrap();
    let (g, q) = sample_coefficients(&mesh, |_| Mat2::identity(), |_| 0.0);
    schrodinger_dn(&mesh, &g, &q, nf).unwrap()
}

#[test]
fn holomorphic_traces_pass_and_conjugates_fail() {
    let dn = flat_dn(4, 8);
    for p in random_polynomials(3, 5, 4) {
        let f = holomorphic_trace(&p, 8).unwrap();
        assert!(holo_trace_test(&f, &dn).unwrap() < 1e-2);
        let g = f.map(|c| c.conj());
        let mut bar = g.clone();
        for n in -8i64..=8 {
            bar.set(0, n, g.get(0, -n));
        }
        assert!(holo_trace_test(&bar, &dn).unwrap() > 0.1);
    }
    let long = vec![Complex64::new(1.0, 0.0); 10];
    assert!(holomorphic_trace(&long, 8).is_err());
}

#[test]
fn random_polynomials_follow_the_seed() {
    assert_eq!(random_polynomials(7, 4, 3), random_polynomials(7, 4, 3));
    assert_ne!(random_polynomials(7, 4, 3), random_polynomials(8, 4, 3));
    assert!(random_polynomials(1, 20, 3).iter().all(|p| (2..=4).contains(&p.len())));
}

#[test]
fn weights_round_trip() {
    for w in [Weight::ReZ, Weight::ReZ2] {
        assert_eq!(Weight::parse(w.name()).unwrap(), w);
        let x = [0.3, -0.4];
        let e = 1e-6;
        let gx = (w.value([x[0] + e, x[1]]) - w.value([x[0] - e, x[1]])) / (2.0 * e);
        let gy = (w.value([x[0], x[1] + e]) - w.value([x[0], x[1] - e])) / (2.0 * e);
        assert!((gx - w.grad(x)[0]).abs() < 1e-9 && (gy - w.grad(x)[1]).abs() < 1e-9);
    }
    assert!(Weight::parse("im-z").is_err());
}

#[test]
fn wave_jets_match_finite_differences() {
    let w = &random_waves(5, 1, 6, 6.0)[0];
    let x = [0.2, 0.1];
    let e = 1e-4;
    let v = |p: [f64; 2]| w.jet(p, Weight::ReZ, 1.0).v;
    let j = w.jet(x, Weight::ReZ, 1.0);
    let gx = (v([x[0] + e, x[1]]) - v([x[0] - e, x[1]])) / (2.0 * e);
    let gy = (v([x[0], x[1] + e]) - v([x[0], x[1] - e])) / (2.0 * e);
    let lap = (v([x[0] + e, x[1]]) + v([x[0] - e, x[1]]) + v([x[0], x[1] + e]) + v([x[0], x[1] - e]) - 4.0 * j.v) / (e * e);
    assert!((gx - j.grad[0]).abs() < 1e-6 && (gy - j.grad[1]).abs() < 1e-6);
    assert!((lap - j.lap).abs() < 1e-3 * j.lap.abs().max(1.0));
}

#[test]
fn carleman_rejects_unresolved_weights() {
    let mesh = build_mesh(Domain::UnitDisk, 2).unwrap();
    let f = ConjugatedHarmonic { coeffs: vec![Complex64::new(1.0, 0.0)] };
    let r = carleman_terms(&mesh, Weight::ReZ2, &|_| 0.0, &f, 1e-3);
    assert!(matches!(r, Err(Error::UnderResolved { .. })));
    let t = carleman_terms(&mesh, Weight::ReZ, &|_| 0.0, &f, 0.5).unwrap();
    assert!(t.lhs > 0.0 && t.ratio() > 0.0);
}

#[test]
fn flux_of_log_r_is_two_pi() {
    let a = Annulus::new(0.4, 4, 16).unwrap();
    let p = a.period(&a.log_trace()).unwrap();
    assert!((p - 2.0 * PI).abs() < 2e-2 * 2.0 * PI, "{p}");
    for n in 1..=3 {
        let p = a.period(&a.re_power_trace(n)).unwrap();
        // only the linear mode is reproduced exactly by P1 elements
        assert!(p.abs() < if n == 1 { 1e-10 } else { 1e-4 }, "{n} {p}");
    }
    let f = a.log_trace().scale(0.7).axpy(1.0, &a.re_power_trace(2)).unwrap();
    let proj = a.project_to_conjugable(&f).unwrap();
    // the discrete period of Re z^2 shifts the coefficient slightly
    assert!((proj.coefficient - 0.7).abs() < 1e-5);
    assert!(a.period(&proj.trace).unwrap().abs() < 1e-10);
    let again = a.project_to_conjugable(&proj.trace).unwrap();
    assert!(again.coefficient.abs() < 1e-10);
}

#[test]
fn period_loops_must_be_interior() {
    let a = Annulus::new(0.4, 3, 8).unwrap();
    let u = a.extend(&a.log_trace());
    assert!(matches!(homology_periods(&a.mesh, &u, &[1.0]), Err(Error::LoopNotInterior(_))));
    assert!(matches!(homology_periods(&a.mesh, &u, &[0.1]), Err(Error::LoopNotInterior(_))));
    let disk = build_mesh(Domain::UnitDisk, 2).unwrap();
    let zero = vec![0.0; disk.n_nodes()];
    assert!(matches!(homology_periods(&disk, &zero, &[0.5]), Err(Error::LoopNotInterior(_))));
}

#[test]
fn gauge_factor_must_be_one_on_the_boundary() {
    let g = |_: [f64; 2]| Mat2::identity();
    let q = |_: [f64; 2]| 1.0;
    assert!(matches!(gauge_check(&[1], &g, &q, &|_| 2.0, 4), Err(Error::Invalid(_))));
    let r = gauge_check(&[1, 2], &g, &q, &|_| 1.0, 4).unwrap();
    assert!(r.levels.iter().all(|l| l.difference == 0.0));
}

#[test]
fn wkb_without_potential_is_exact() {
    let grid = Grid::new(256).unwrap();
    let q = vec![0.0; grid.len()];
    let terms = wkb_terms(&grid, &Phase::line(), &HoloPoly::one(), &q, 2).unwrap();
    assert!(terms.iter().flatten().all(|v| v.norm() == 0.0));
    let res = wkb_residual(&grid, &Phase::line(), &HoloPoly::one(), &q, &terms, 0.1);
    // what is left is the taper tail inside the disk
    assert!(res < 1e-6, "{res}");
    assert!(wkb_terms(&grid, &Phase::morse(), &HoloPoly::one(), &q, 1).is_err());
}

proptest! {
    #[test]
    fn conjugated_harmonics_are_annihilated(r in 0.0f64..1.0, t in 0.0f64..6.3, h in 0.05f64..1.0,
                                            a in -1.0f64..1.0, b in -1.0f64..1.0, quad in any::<bool>()) {
        let w = if quad { Weight::ReZ2 } else { Weight::ReZ };
        let f = ConjugatedHarmonic { coeffs: vec![Complex64::new(a, b), Complex64::new(b, 0.5), Complex64::new(0.3, a)] };
        let x = [r * t.cos(), r * t.sin()];
        let j = f.jet(x, w, h);
        let scale = (j.lap.abs() + j.v.abs() / (h * h)).max(1e-300);
        prop_assert!(conjugated(&j, w.grad(x), 0.0, h).abs() <= 1e-12 * scale);
    }
}
