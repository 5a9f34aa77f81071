use fermi_forge::cgo::{
    bessel_j0, build_cgo, catalog_potential, cutoff, fit_loglog, log_space, phase_catalog, phase_catalog_with, CgoOptions,
    Grid, HoloPoly, Phase, SweepPhase, Symbol, EXTENT,
};
use fermi_forge::error::Error;
use num_complex::Complex64;
use proptest::prelude::*;

const A: f64 = 20.0;

fn gaussian(z: Complex64) -> Complex64 {
    Complex64::new((-A * z.norm_sqr()).exp(), 0.0)
}

fn max_err_in_disk(grid: &Grid, got: &[Complex64], want: impl Fn(Complex64) -> Complex64) -> f64 {
    (0..grid.len())
        .filter(|&i| grid.point(i).norm() < 1.0)
        .map(|i| (got[i] - want(grid.point(i))).norm())
        .fold(0.0, f64::max)
}

#[test]
fn cauchy_transform_of_a_gaussian() {
    // radial mass inside |z| over z: (1 - exp(-a|z|^2)) / (a z)
    let grid = Grid::new(128).unwrap();
    let f = grid.map(gaussian);
    let c = grid.apply(&f, Symbol::DbarInv);
    let err = max_err_in_disk(&grid, &c, |z| (1.0 - (-A * z.norm_sqr()).exp()) / (A * z));
    assert!(err < 1e-8, "{err}");
    // d^{-1} is the conjugate transform for real data
    let d = grid.apply(&f, Symbol::DInv);
    let err = max_err_in_disk(&grid, &d, |z| (1.0 - (-A * z.norm_sqr()).exp()) / (A * z.conj()));
    assert!(err < 1e-8, "{err}");
}

#[test]
fn laplacian_and_beurling_symbols() {
    let grid = Grid::new(128).unwrap();
    let f = grid.map(gaussian);
    let lap = grid.apply(&f, Symbol::Laplacian);
    // positive Laplacian of exp(-a r^2) is (4a - 4a^2 r^2) exp(-a r^2)
    let err = max_err_in_disk(&grid, &lap, |z| gaussian(z) * (4.0 * A - 4.0 * A * A * z.norm_sqr()));
    assert!(err < 1e-6 * 4.0 * A, "{err}");
    let dbar = grid.apply(&f, Symbol::Dbar);
    let b = grid.apply(&dbar, Symbol::DDbarInv);
    let err = max_err_in_disk(&grid, &b, |z| -A * z.conj() * gaussian(z));
    assert!(err < 1e-8, "{err}");
}

#[test]
fn bessel_j0_reference_values() {
    assert_eq!(bessel_j0(0.0), 1.0);
    assert!((bessel_j0(1.0) - 0.765_197_686_557_966_6).abs() < 1e-15);
    assert!(bessel_j0(2.404_825_557_695_773).abs() < 1e-15);
    assert!((bessel_j0(10.0) + 0.245_935_764_451_348_3).abs() < 1e-15);
}

#[test]
fn log_space_and_fit_edges() {
    let h = log_space(0.01, 1.0, 5);
    assert!((h[0] - 0.01).abs() < 1e-16 && (h[4] - 1.0).abs() < 1e-15);
    assert!((h[2] - 0.1).abs() < 1e-15);
    let y: Vec<f64> = h.iter().map(|v| v * v).collect();
    assert!(matches!(fit_loglog(&h[..2], &y[..2], 3, 1.0), Err(Error::Invalid(_))));
    assert!(matches!(fit_loglog(&h, &y, 3, 1000.0), Err(Error::Invalid(_))));
    let mut bad = y.clone();
    bad[1] = 0.0;
    assert!(fit_loglog(&h, &bad, 3, 1.0).is_err());
}

#[test]
fn catalog_critical_points() {
    let z0 = Complex64::new(0.2, -0.1);
    let cat = phase_catalog(z0).unwrap();
    assert_eq!(cat.theta3_holo.critical_points.len(), 1);
    assert!((cat.theta3_holo.critical_points[0] - z0).norm() < 1e-12);
    assert!(cat.theta3_holo.morse);
    assert!(cat.theta1.critical_points.is_empty() && cat.theta2.critical_points.is_empty());
    assert!(cat.theta1.grad_min() > 0.0);
    assert!((cat.theta1.derivative(z0) - 1.0).norm() < 1e-14);
    assert!(phase_catalog(Complex64::new(0.95, 0.0)).is_err());
    assert!(phase_catalog_with(z0, 0.5).is_err());
    assert!(Phase::new("const", vec![Complex64::new(1.0, 0.0)]).is_err());
}

#[test]
fn sweep_phase_names_round_trip() {
    for p in [SweepPhase::Line, SweepPhase::Morse, SweepPhase::Theta1, SweepPhase::Theta2, SweepPhase::Theta3] {
        assert_eq!(SweepPhase::parse(p.name()).unwrap(), p);
    }
    assert!(SweepPhase::parse("theta4").is_err());
}

#[test]
fn free_cgo_has_no_remainder() {
    let grid = Grid::new(64).unwrap();
    let q = vec![0.0; grid.len()];
    let sol = build_cgo(&grid, &Phase::line(), &HoloPoly::one(), &q, 0.5, false, &CgoOptions::default()).unwrap();
    assert!(sol.r.iter().all(|v| v.norm() == 0.0));
    assert_eq!(sol.residual, 0.0);
}

#[test]
fn neumann_series_reduces_the_pde_residual() {
    let grid = Grid::new(128).unwrap();
    let q = catalog_potential(&grid).unwrap();
    let opts = CgoOptions { track_residual: true, tol: 1e-8, ..CgoOptions::default() };
    let sol = build_cgo(&grid, &Phase::line(), &HoloPoly::one(), &q, 0.2, false, &opts).unwrap();
    assert!(sol.contraction < 1.0);
    let hist = &sol.residual_history;
    assert!(hist.len() >= 2);
    assert!(hist.last().unwrap() < &(1e-3 * hist[0]), "{hist:?}");
}

#[test]
fn under_resolved_h_is_rejected() {
    let grid = Grid::new(32).unwrap();
    let q = vec![0.0; grid.len()];
    let r = build_cgo(&grid, &Phase::line(), &HoloPoly::one(), &q, 1e-3, false, &CgoOptions::default());
    assert!(matches!(r, Err(Error::UnderResolved { .. })));
    assert!(Grid::new(8).is_err());
}

proptest! {
    #[test]
    fn cutoff_is_a_monotone_plateau(r in 0.0f64..2.0, s in 0.0f64..2.0) {
        let (a, b) = (r.min(s), r.max(s));
        prop_assert!(cutoff(a) >= cutoff(b));
        prop_assert!((0.0..=1.0).contains(&cutoff(r)));
        if r <= 1.0 { prop_assert_eq!(cutoff(r), 1.0); }
        if r >= EXTENT { prop_assert_eq!(cutoff(r), 0.0); }
    }

    #[test]
    fn power_laws_fit_exactly(p in -3.0f64..3.0, c in 0.1f64..10.0) {
        let h = log_space(0.01, 0.5, 7);
        let y: Vec<f64> = h.iter().map(|v| c * v.powf(p)).collect();
        let f = fit_loglog(&h, &y, 5, 10.0).unwrap();
        prop_assert!((f.slope - p).abs() < 1e-10);
        prop_assert!((f.intercept - c.ln()).abs() < 1e-9);
        prop_assert!(f.r2 > 1.0 - 1e-12);
    }
}
