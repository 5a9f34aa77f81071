use std::collections::HashSet;
use std::f64::consts::PI;

use fermi_forge::error::Error;
use fermi_forge::geometry::{
    build_mesh, check_minimality, Domain, ExpFamily, Jets, Mat2, Mesh, MetricFamily, NumericFamily,
    Orientation, TensorField2, MAX_LEVEL,
};
use fermi_forge::geometry::tensor::kappa;
use proptest::prelude::*;

fn euler_characteristic(m: &Mesh) -> i64 {
    let mut edges = HashSet::new();
    for t in &m.triangles {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            edges.insert((a.min(b), a.max(b)));
        }
    }
    m.n_nodes() as i64 - edges.len() as i64 + m.triangles.len() as i64
}

#[test]
fn disk_and_annulus_topology() {
    for level in 0..=3 {
        let d = build_mesh(Domain::UnitDisk, level).unwrap();
        assert_eq!(euler_characteristic(&d), 1);
        assert_eq!(d.boundary.len(), 1);
        assert_eq!(d.boundary[0].len(), 12 << level);
        let a = build_mesh(Domain::annulus(0.4).unwrap(), level).unwrap();
        assert_eq!(euler_characteristic(&a), 0);
        assert_eq!(a.boundary.len(), 2);
        assert_eq!(a.boundary[1].orientation, Orientation::Cw);
    }
}

#[test]
fn boundary_nodes_lie_on_their_circles() {
    let m = build_mesh(Domain::annulus(0.3).unwrap(), 2).unwrap();
    for lp in &m.boundary {
        for (j, &i) in lp.nodes.iter().enumerate() {
            let p = m.nodes[i];
            assert!((p[0].hypot(p[1]) - lp.radius).abs() < 1e-14);
            let ang = p[1].atan2(p[0]).rem_euclid(2.0 * PI);
            let d = (ang - lp.angle(j)).abs();
            assert!(d.min(2.0 * PI - d) < 1e-12, "node {i}");
            assert!(m.is_boundary(i));
        }
    }
    let n_bdry: usize = m.boundary.iter().map(|l| l.len()).sum();
    assert_eq!(m.interior_nodes().len() + n_bdry, m.n_nodes());
}

#[test]
fn disk_area_equals_the_inscribed_polygon() {
    for level in 1..=4 {
        let m = build_mesh(Domain::UnitDisk, level).unwrap();
        let n = m.boundary[0].len() as f64;
        let inscribed = 0.5 * n * (2.0 * PI / n).sin();
        assert!((m.total_area() - inscribed).abs() < 1e-12, "level {level}");
    }
}

#[test]
fn quality_does_not_degrade_under_refinement() {
    let angles: Vec<f64> = (0..=4).map(|l| build_mesh(Domain::UnitDisk, l).unwrap().min_angle()).collect();
    assert!(angles.iter().all(|&a| a > 0.3), "{angles:?}");
    let h: Vec<f64> = (1..=4).map(|l| build_mesh(Domain::UnitDisk, l).unwrap().max_edge_length()).collect();
    for w in h.windows(2) {
        assert!((w[0] / w[1] - 2.0).abs() < 0.3, "{h:?}");
    }
}

#[test]
fn rejects_bad_domains_and_levels() {
    assert!(matches!(Domain::annulus(1.0), Err(Error::Invalid(_))));
    assert!(matches!(Domain::annulus(0.0), Err(Error::Invalid(_))));
    assert!(matches!(build_mesh(Domain::UnitDisk, MAX_LEVEL + 1), Err(Error::Resource(_))));
}

#[test]
fn text_round_trip() {
    let m = build_mesh(Domain::annulus(0.5).unwrap(), 1).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mesh.txt");
    m.write(&path).unwrap();
    let r = Mesh::read(&path).unwrap();
    assert_eq!(r.nodes, m.nodes);
    assert_eq!(r.triangles, m.triangles);
    assert_eq!(r.boundary.len(), m.boundary.len());
    for (a, b) in r.boundary.iter().zip(&m.boundary) {
        assert_eq!(a.nodes, b.nodes);
    }
}

#[test]
fn conformal_square_jets_match_hand_derivatives() {
    // g(s) = (1+s)^2 I: k = (1+s)^-2, h = 4 / (1+s), d = (1+s)^2
    let i = Mat2::identity();
    let j = Jets::from_taylor(&[i, 2.0 * i, i, Mat2::zeros(), Mat2::zeros()], [0.0, 0.0]).unwrap();
    let close = |a: Mat2, b: Mat2| (a - b).abs().max() < 1e-13;
    assert!(close(j.k, i) && close(j.k1, -2.0 * i) && close(j.k2, 6.0 * i) && close(j.k3, -24.0 * i));
    for (got, want) in [(j.h0, 4.0), (j.h1, -4.0), (j.h2, 8.0), (j.h3, -24.0)] {
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }
    for (got, want) in [(j.d, 1.0), (j.d1, 2.0), (j.d2, 2.0), (j.d3, 0.0), (j.d4, 0.0)] {
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }
}

#[test]
fn finite_difference_jets_agree_with_closed_form() {
    let fam = ExpFamily::standard();
    let clone = fam.clone();
    let num = NumericFamily::new("fd", move |x, s| clone.eval(x, s));
    assert!(!num.closed_form() && fam.closed_form());
    for x in [[0.0, 0.0], [0.3, -0.4], [-0.5, 0.5]] {
        let a = fam.jets0(x).unwrap();
        let b = num.jets0(x).unwrap();
        assert!((a.k1 - b.k1).abs().max() < 1e-7);
        assert!((a.k2 - b.k2).abs().max() < 1e-5);
        assert!((a.h1 - b.h1).abs() < 1e-6 && (a.d2 - b.d2).abs() < 1e-6);
    }
}

#[test]
fn catalog_families_are_minimal() {
    let mesh = build_mesh(Domain::UnitDisk, 2).unwrap();
    for name in ["euclidean", "diag", "standard"] {
        let r = check_minimality(&ExpFamily::by_name(name).unwrap(), &mesh).unwrap();
        assert!(r.minimal, "{name}: {r:?}");
    }
    assert!(ExpFamily::by_name("nope").is_err());
}

#[test]
fn non_spd_metric_is_rejected() {
    let mut s = [Mat2::zeros(); 5];
    s[0] = Mat2::new(1.0, 0.0, 0.0, -1.0);
    assert!(matches!(Jets::from_taylor(&s, [0.1, 0.2]), Err(Error::NotSpd { .. })));
}

#[test]
fn kappa_of_trace_free_tensors() {
    assert_eq!(kappa(&Mat2::new(1.0, 2.0, 2.0, -1.0)), num_complex::Complex64::new(2.0, 4.0));
    let g = vec![Mat2::identity(); 2];
    let k = TensorField2::new(vec![Mat2::new(0.5, 0.1, 0.1, -0.5); 2]).unwrap();
    assert!(k.with_trace_free(&g, 1e-12).unwrap().trace_free);
    assert!(TensorField2::new(vec![Mat2::new(0.0, 1.0, 0.0, 0.0)]).is_err());
}

proptest! {
    #[test]
    fn jets_invert_and_take_square_root(a in 0.5f64..2.0, b in 0.5f64..2.0, c in -0.3f64..0.3,
                                        g1 in -1.0f64..1.0, g2 in -1.0f64..1.0) {
        let g0 = Mat2::new(a, c, c, b);
        let g1m = Mat2::new(g1, g2, g2, -g1);
        let j = Jets::from_taylor(&[g0, g1m, Mat2::zeros(), Mat2::zeros(), Mat2::zeros()], [0.0, 0.0]).unwrap();
        prop_assert!((j.k * j.g - Mat2::identity()).abs().max() < 1e-12);
        prop_assert!((j.d * j.d - g0.determinant()).abs() < 1e-12);
        // first derivatives: k' = -k g' k and h = Tr(k g')
        prop_assert!((j.k1 + j.k * g1m * j.k).abs().max() < 1e-12);
        prop_assert!((j.h0 - (j.k * g1m).trace()).abs() < 1e-12);
    }

    #[test]
    fn every_triangle_is_positively_oriented(level in 0usize..4, r in 0.2f64..0.8) {
        for m in [build_mesh(Domain::UnitDisk, level).unwrap(), build_mesh(Domain::annulus(r).unwrap(), level).unwrap()] {
            for t in &m.triangles {
                prop_assert!(m.triangle_area(t) > 0.0);
            }
        }
    }
}
