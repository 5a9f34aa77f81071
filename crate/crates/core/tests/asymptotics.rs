use std::f64::consts::PI;

use fermi_forge::asymptotics::{
    cx, extrapolate, oscillatory_integral, spectral_gradient, Bump, Setup, Target, TensorProfile,
};
use fermi_forge::cgo::{Grid, Phase};
use fermi_forge::error::Error;
use num_complex::Complex64;
use proptest::prelude::*;

#[test]
fn gaussian_against_a_saddle_phase() {
    // int e^{-a|z|^2} e^{4i Im(lam z^2)/h} over the plane is pi / sqrt(a^2 + (4 lam / h)^2)
    let (a, lam) = (30.0, 0.2);
    let grid = Grid::new(256).unwrap();
    let amp = grid.map(|z| Complex64::new((-a * z.norm_sqr()).exp(), 0.0));
    let phase = Phase::new("saddle", vec![Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(lam, 0.0)]).unwrap();
    for h in [0.05, 0.1, 0.5] {
        let r = oscillatory_integral(&grid, &amp, &phase, h).unwrap();
        let exact = PI / (a * a + (4.0 * lam / h).powi(2)).sqrt();
        assert!((cx(r.value) - exact).norm() < 1e-10 * exact, "h {h}: {:?} vs {exact}", r.value);
        assert!(r.error_estimate < 1e-6);
    }
    assert!(matches!(oscillatory_integral(&grid, &amp, &phase, 1e-3), Err(Error::UnderResolved { .. })));
}

#[test]
fn truth_values_of_profiles() {
    let grid = Grid::new(16).unwrap();
    let z0 = Complex64::new(0.2, -0.1);
    let b = Bump::new(0.8, [0.25, -0.3], 0.5);
    let mu = b.eval([0.2, -0.1]);
    let d = Target::tensor(&grid, "d", &TensorProfile::Diagonal(b), z0);
    assert!((d.truth - Complex64::new(2.0 * mu, 0.0)).norm() < 1e-15);
    let o = Target::tensor(&grid, "o", &TensorProfile::OffDiagonal(b), z0);
    assert!((o.truth - Complex64::new(0.0, 2.0 * mu)).norm() < 1e-15);
    assert_eq!(Target::scalar(&grid, "s", &b, z0).truth, Complex64::new(mu, 0.0));
    // boundary flat
    assert_eq!(b.eval([1.0, 0.0]), 0.0);
    assert_eq!(b.eval([0.0, 1.2]), 0.0);
}

#[test]
fn spectral_gradient_matches_finite_differences() {
    let grid = Grid::new(128).unwrap();
    let b = Bump::new(1.0, [0.1, -0.2], 0.4);
    let (d, dbar) = spectral_gradient(&grid, &b.sample(&grid));
    let e = 1e-5;
    for i in (0..grid.len()).step_by(997) {
        let z = grid.point(i);
        let fx = (b.eval([z.re + e, z.im]) - b.eval([z.re - e, z.im])) / (2.0 * e);
        let fy = (b.eval([z.re, z.im + e]) - b.eval([z.re, z.im - e])) / (2.0 * e);
        let want_d = Complex64::new(fx, -fy) * 0.5;
        assert!((d[i] - want_d).norm() < 1e-6, "at {z}");
        assert!((dbar[i] - want_d.conj()).norm() < 1e-6, "at {z}");
    }
}

#[test]
fn three_sweep_bookkeeping() {
    let setup = Setup::new(256, Complex64::new(0.2, -0.1)).unwrap();
    let lo = setup.min_h();
    assert!(matches!(setup.check_hs(&[lo, 2.0 * lo]), Err(Error::Invalid(_))));
    assert!(matches!(setup.check_hs(&[0.5 * lo, lo, 2.0 * lo]), Err(Error::UnderResolved { .. })));
    let hs = [lo * 1.001, 2.0 * lo, 4.0 * lo];
    let k = TensorProfile::Diagonal(Bump::new(1.0, [0.0, 0.0], 0.7)).sample(&setup.grid);
    let q = Bump::new(1.0, [0.0, 0.0], 0.7).sample(&setup.grid);
    let sweep = setup.three_sweep(&hs, &[&k], &[&q]).unwrap();
    for (terms, triple) in &sweep {
        let t = &terms[0];
        let sum = cx(t.t1) + cx(t.t2) + cx(t.t3);
        assert!((sum - cx(t.lhs)).norm() <= 1e-14 * sum.norm());
        // the third term carries the leading order
        assert!(cx(t.t3).norm() > 10.0 * (cx(t.t1).norm() + cx(t.t2).norm()));
        assert!((cx(t.lhs) - cx(t.rhs)).norm() < 0.05 * cx(t.rhs).norm());
        assert!(triple[0].norm().is_finite());
    }
}

proptest! {
    #[test]
    fn extrapolation_is_exact_on_quadratics(c0 in -5.0f64..5.0, c1 in -5.0f64..5.0, c2 in -5.0f64..5.0, d0 in -5.0f64..5.0) {
        let h = [0.02, 0.04, 0.06, 0.09, 0.12];
        let y: Vec<Complex64> = h.iter().map(|&t| Complex64::new(c0 + c1 * t + c2 * t * t, d0 - c2 * t)).collect();
        let e = extrapolate(&h, &y);
        prop_assert!((e.limit[0] - c0).abs() < 1e-9);
        prop_assert!((e.limit[1] - d0).abs() < 1e-9);
        prop_assert!((e.slope[0] - c1).abs() < 1e-7);
        prop_assert_eq!(e.model, "c0 + c1 h + c2 h^2");
    }

    #[test]
    fn three_points_fall_back_to_a_line(c0 in -5.0f64..5.0, c1 in -5.0f64..5.0) {
        let h = [0.05, 0.1, 0.2];
        let y: Vec<Complex64> = h.iter().map(|&t| Complex64::new(c0 + c1 * t, 0.0)).collect();
        let e = extrapolate(&h, &y);
        prop_assert!((e.limit[0] - c0).abs() < 1e-10);
        prop_assert_eq!(e.model, "c0 + c1 h");
    }
}
