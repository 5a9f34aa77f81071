//! Subcommand bodies. Each returns the finished summary; the caller maps
//! failed checks and errors to exit codes.

use num_complex::Complex64;

use super::config::ExperimentConfig;
use super::output::{loglog_svg, Check, Run, Series, Summary, Table};
use crate::asymptotics::{Bump, ScalarMode, Setup, Target, TensorProfile};
use crate::calderon::{
    carleman_verify, default_gauge, gauge_check, holo_trace_batch, period_checks, random_waves, wkb_ansatz, TestField,
    Weight,
};
use crate::cgo::{decay_sweep, CgoOptions, Grid, HoloPoly, Phase, SweepPhase};
use crate::error::{Error, Result};
use crate::forward::{MinimalGraph, NewtonOptions, NormalConvention};
use crate::geometry::{build_mesh, check_minimality, Domain, Mat2};
use crate::linearize::{identities, Linearization};

pub fn forward(cfg: &ExperimentConfig, mut run: Run) -> Result<Summary> {
    let fam = cfg.family()?;
    let mesh = build_mesh(cfg.domain()?, cfg.mesh.level)?;
    let (f, _) = cfg.forward_data()?;
    let min = check_minimality(&fam, &mesh)?;
    let g = MinimalGraph::new(&fam, &mesh)?;
    let sol = g.solve(&f, &NewtonOptions::default())?;
    let mut t = Table::new(&["node", "x", "y", "u"]);
    for (i, p) in mesh.nodes.iter().enumerate() {
        t.push(vec![i.into(), p[0].into(), p[1].into(), sol.u[i].into()]);
    }
    run.table("forward.csv", &t)?;
    let mut nt = Table::new(&["iteration", "residual"]);
    for (k, r) in sol.history.iter().enumerate() {
        nt.push(vec![k.into(), (*r).into()]);
    }
    run.table("newton.csv", &nt)?;
    let it: Vec<f64> = (1..=sol.history.len()).map(|k| k as f64).collect();
    run.text(
        "newton.svg",
        &loglog_svg("Newton residual", "iteration + 1", "max residual", &[Series { label: "residual".into(), x: it, y: sol.history.clone(), fit: false }]),
    )?;
    run.check(Check::at_most("newton_residual", sol.residual, cfg.tolerances.newton));
    run.check(Check::at_most("minimality_trace", min.trace_residual, min.tol));
    run.details(&serde_json::json!({
        "level": cfg.mesh.level,
        "nodes": mesh.n_nodes(),
        "iterations": sol.iterations,
        "residual": sol.residual,
        "area": sol.area,
        "sup_norm": sol.sup_norm(),
        "quadratic_constant": sol.quadratic_constant(),
        "minimal": min.minimal,
    }));
    run.finish()
}

pub fn dnmap(cfg: &ExperimentConfig, mut run: Run) -> Result<Summary> {
    let fam = cfg.family()?;
    let mesh = build_mesh(cfg.domain()?, cfg.mesh.level)?;
    let (f, w) = cfg.forward_data()?;
    let g = MinimalGraph::new(&fam, &mesh)?;
    let opts = NewtonOptions::default();
    let (_, dn) = g.nonlinear_dn(&f, NormalConvention::Fixed, &opts)?;
    run.text("dnmap.csv", &dn.to_csv())?;
    let vc = g.dn_from_volumes(&f, &w, cfg.forward.t, &opts)?;
    let mut t = Table::new(&["t", "fd", "boundary_integral", "discrete_pairing", "difference"]);
    t.push(vec![cfg.forward.t.into(), vc.fd.into(), vc.boundary_integral.into(), vc.discrete_pairing.into(), vc.difference.into()]);
    run.table("volumes.csv", &t)?;
    run.check(Check::at_most("volume_pairing", vc.difference, cfg.tolerances.volume));
    run.finish()
}

pub fn identities(cfg: &ExperimentConfig, mut run: Run) -> Result<Summary> {
    let order = cfg.identities.order;
    let fam = cfg.family()?;
    let data = cfg.boundary_data()?;
    if data.len() < order + 1 {
        return Err(Error::Invalid(format!("boundary.data: order {order} needs {} functions, got {}", order + 1, data.len())));
    }
    let tol = if order == 2 { cfg.tolerances.identity2 } else { cfg.tolerances.identity3 };
    let opts = NewtonOptions::default();
    let mut t = Table::new(&["level", "eps", "indices", "term", "value", "residual"]);
    let mut per_level = Vec::new();
    let indices = (1..=order + 1).map(|i| i.to_string()).collect::<Vec<_>>().join("-");
    for level in cfg.levels() {
        let mesh = build_mesh(cfg.domain()?, level)?;
        let g = MinimalGraph::new(&fam, &mesh)?;
        let lin = Linearization::new(&fam, &mesh)?;
        let mut last = 0.0;
        for &eps in &cfg.eps.steps {
            let r = if order == 2 {
                identities::verify_identity_2(&lin, &g, [&data[0], &data[1], &data[2]], eps, &opts)?
            } else {
                identities::verify_identity_3(&lin, &g, [&data[0], &data[1], &data[2], &data[3]], eps, &opts)?
            };
            let mut row = |term: &str, v: f64| t.push(vec![level.into(), eps.into(), indices.as_str().into(), term.into(), v.into(), r.residual.into()]);
            row("lhs", r.lhs);
            for (name, v) in &r.terms {
                row(name, *v);
            }
            row("rhs", r.rhs);
            row("rhs_printed", r.rhs_printed);
            row("source_form", r.source_form);
            row("residual_printed", r.residual_printed);
            run.check(Check::at_most(format!("residual_level{level}_eps{eps:e}"), r.residual, tol));
            last = r.residual;
        }
        per_level.push((level, last));
    }
    run.table(&format!("identity{order}.csv"), &t)?;
    if per_level.len() >= 2 {
        let x: Vec<f64> = per_level.iter().map(|(l, _)| 0.5f64.powi(*l as i32)).collect();
        let y: Vec<f64> = per_level.iter().map(|p| p.1).collect();
        let fit = crate::cgo::fit_loglog(&x, &y, 2, 1.0)?;
        run.check(Check::at_least("refinement_rate", fit.slope, 1.0));
        run.text(
            &format!("identity{order}.svg"),
            &loglog_svg("identity residual", "mesh scale 2^-level", "relative residual", &[Series { label: "residual".into(), x, y, fit: true }]),
        )?;
    }
    run.finish()
}

pub fn cgo_decay(cfg: &ExperimentConfig, mut run: Run) -> Result<Summary> {
    let grid = Grid::new(cfg.cgo.n)?;
    let q = crate::cgo::catalog_potential(&grid)?;
    let hs = cfg.h_list(0.025, 0.25, 7)?;
    let mut t = Table::new(&["h", "norm", "phase", "p", "value"]);
    let mut series = Vec::new();
    for name in &cfg.cgo.phases {
        let phase = SweepPhase::parse(name)?;
        let s = decay_sweep(&grid, phase, &q, &hs, &CgoOptions::default())?;
        for n in &s.norms {
            for &p in &cfg.cgo.p_norms {
                let k = if p == 2 { 0 } else { 1 };
                t.push(vec![n.h.into(), "r".into(), name.as_str().into(), (p as usize).into(), n.r[k].into()]);
                t.push(vec![n.h.into(), "dr".into(), name.as_str().into(), (p as usize).into(), n.dr[k].into()]);
            }
        }
        let h: Vec<f64> = s.norms.iter().map(|n| n.h).collect();
        series.push(Series { label: format!("{name} |r|_2"), x: h.clone(), y: s.norms.iter().map(|n| n.r[0]).collect(), fit: true });
        let fit = s.fit_r2.as_ref().ok_or_else(|| Error::Resource(format!("{name}: too few resolved h values for a fit")))?;
        let span = h.iter().cloned().fold(0.0, f64::max) / h.iter().cloned().fold(f64::INFINITY, f64::min);
        run.check(Check::at_least(format!("{name}_points"), h.len() as f64, 6.0));
        run.check(Check::at_least(format!("{name}_span"), span, 10.0));
        run.check(Check::at_least(format!("{name}_r2_fit_quality"), fit.r2, 0.98));
        if phase.has_critical_point() {
            run.check(Check::within(format!("{name}_r2_slope"), fit.slope, 0.5, 1.0));
        } else {
            run.check(Check::at_least(format!("{name}_r2_slope"), fit.slope, 0.9));
            let d = s.fit_dr2.as_ref().map_or(f64::NAN, |f| f.slope);
            run.check(Check::at_least(format!("{name}_dr2_slope"), d, 0.9));
        }
    }
    run.table("cgo_decay.csv", &t)?;
    run.text("cgo_decay.svg", &loglog_svg("CGO remainder decay", "h", "||r_h||_2", &series))?;
    run.finish()
}

fn default_sweep(cfg: &ExperimentConfig, s: &Setup) -> Result<Vec<f64>> {
    let hs = cfg.h_list(s.min_h() * 1.001, 0.12, 5)?;
    s.check_hs(&hs)?;
    Ok(hs)
}

pub fn recover(cfg: &ExperimentConfig, mut run: Run) -> Result<Summary> {
    let z0 = Complex64::new(cfg.recover.z0[0], cfg.recover.z0[1]);
    let s = Setup::new(cfg.recover.n, z0)?;
    let hs = default_sweep(cfg, &s)?;
    let g = &s.grid;
    let user = cfg.recover.profile.map(|p| Bump::new(p[0], [p[1], p[2]], p[3]));
    let (calibration, reports, h_fit) = match cfg.recover.target.as_str() {
        "k1" => {
            let r1 = Target::tensor(g, "ref-diag", &TensorProfile::Diagonal(Bump::new(1.0, [0.0, 0.0], 0.7)), z0);
            let r2 = Target::tensor(g, "ref-off", &TensorProfile::OffDiagonal(Bump::new(1.0, [0.3, 0.0], 0.5)), z0);
            let targets = match user {
                Some(b) => vec![Target::tensor(g, "k-user", &TensorProfile::Diagonal(b), z0)],
                None => vec![
                    Target::tensor(g, "k-a", &TensorProfile::Diagonal(Bump::new(0.8, [0.25, -0.3], 0.5)), z0),
                    Target::tensor(g, "k-b", &TensorProfile::OffDiagonal(Bump::new(1.3, [0.0, -0.2], 0.6)), z0),
                ],
            };
            let refs: Vec<&Target<Mat2>> = targets.iter().collect();
            let k = s.recover_k([&r1, &r2], &refs, &hs)?;
            (k.calibration, k.reports, None)
        }
        target => {
            let mode = if target == "h2" { ScalarMode::SecondOrder } else { ScalarMode::ThirdOrder };
            let q1 = Target::scalar(g, "q-ref1", &Bump::new(1.0, [0.0, 0.0], 0.7), z0);
            let q2 = Target::scalar(g, "q-ref2", &Bump::new(1.0, [0.4, 0.1], 0.5), z0);
            let qa = Target::scalar(g, "q-a", &user.unwrap_or(Bump::new(0.7, [0.1, -0.3], 0.5)), z0);
            let hc = s.synthetic_h_coefficients();
            let hc = (mode == ScalarMode::ThirdOrder).then_some(&hc);
            let r = s.recover_scalar(mode, [&q1, &q2], &[&qa], &hs, hc)?;
            (r.calibration, r.reports, r.h_fit)
        }
    };
    let mut t = Table::new(&["label", "h", "value_re", "value_im", "estimate_re", "estimate_im", "truth_re", "truth_im", "rel_error"]);
    let mut series = Vec::new();
    for r in &reports {
        let tn = r.truth[0].hypot(r.truth[1]);
        let errs: Vec<f64> = r.estimates.iter().map(|e| (e[0] - r.truth[0]).hypot(e[1] - r.truth[1]) / tn).collect();
        for (k, &h) in r.h_list.iter().enumerate() {
            let (v, e) = (r.values[k], r.estimates[k]);
            t.push(vec![r.label.as_str().into(), h.into(), v[0].into(), v[1].into(), e[0].into(), e[1].into(), r.truth[0].into(), r.truth[1].into(), errs[k].into()]);
        }
        series.push(Series { label: r.label.clone(), x: r.h_list.clone(), y: errs, fit: false });
        run.check(Check::at_most(format!("{}_rel_error", r.label), r.rel_error_finest, cfg.tolerances.recovery));
    }
    run.table("recover.csv", &t)?;
    run.text("recover.svg", &loglog_svg("pointwise recovery", "h", "relative error", &series))?;
    run.check(Check::at_most("calibration_universality", calibration.universality, cfg.tolerances.universality));
    if let Some(f) = &h_fit {
        run.check(Check::at_least("h_terms_slope", f.slope, 0.9));
    }
    run.details(&serde_json::json!({ "calibration": calibration, "reports": reports, "h_fit": h_fit }));
    run.finish()
}

pub fn calderon(cfg: &ExperimentConfig, mut run: Run) -> Result<Summary> {
    let c = &cfg.calderon;
    let want = |name: &str| c.check == "all" || c.check == name;
    let mut details = serde_json::Map::new();
    if want("gauge") {
        let g = |_: [f64; 2]| Mat2::identity();
        let q = |x: [f64; 2]| 1.5 * (1.0 + 0.5 * x[0]);
        let r = gauge_check(&c.gauge_levels, &g, &q, &default_gauge, cfg.boundary.nf)?;
        let mut t = Table::new(&["level", "mesh_size", "difference"]);
        for l in &r.levels {
            t.push(vec![l.level.into(), l.mesh_size.into(), l.difference.into()]);
        }
        run.table("gauge.csv", &t)?;
        let x: Vec<f64> = r.levels.iter().map(|l| l.mesh_size).collect();
        let y: Vec<f64> = r.levels.iter().map(|l| l.difference).collect();
        run.text("gauge.svg", &loglog_svg("gauge defect", "mesh size", "DN difference", &[Series { label: "difference".into(), x, y, fit: true }]))?;
        run.check(Check::at_least("gauge_rate", r.rate.as_ref().map_or(f64::NAN, |f| f.slope), 1.0));
        details.insert("gauge".into(), serde_json::to_value(&r).unwrap_or_default());
    }
    if want("holo-trace") {
        let conf = |x: [f64; 2]| Mat2::identity() * default_gauge(x);
        let r = holo_trace_batch(c.level, &conf, cfg.seed, 10, 4, 12)?;
        let mut t = Table::new(&["index", "holomorphic", "conjugate"]);
        for (i, (a, b)) in r.holomorphic.iter().zip(&r.conjugate).enumerate() {
            t.push(vec![i.into(), (*a).into(), (*b).into()]);
        }
        run.table("holo_trace.csv", &t)?;
        run.check(Check::at_most("holomorphic_max", r.max_holomorphic, 5e-3));
        run.check(Check::at_least("conjugate_min", r.min_conjugate, 0.1));
    }
    if want("carleman") {
        let w = Weight::parse(&c.weight)?;
        let hs = cfg.h_list(0.05, 0.5, 6)?;
        let waves = random_waves(cfg.seed, c.fields, 6, 6.0);
        let fields: Vec<&dyn TestField> = waves.iter().map(|w| w as &dyn TestField).collect();
        let mut t = Table::new(&["level", "h", "min_ratio"]);
        let mut mins = Vec::new();
        for level in [c.level - 1, c.level] {
            let mesh = build_mesh(Domain::UnitDisk, level)?;
            let r = carleman_verify(&mesh, w, &|_| 0.0, &fields, &hs)?;
            for (h, m) in hs.iter().zip(&r.min_by_h) {
                t.push(vec![level.into(), (*h).into(), (*m).into()]);
            }
            mins.push(r.min_ratio);
        }
        run.table("carleman.csv", &t)?;
        run.check(Check::at_least("carleman_min_ratio", mins[0].min(mins[1]), f64::MIN_POSITIVE));
        run.check(Check::at_most("carleman_level_change", (mins[1] - mins[0]).abs() / mins[0], 0.2));
        details.insert("carleman_constant".into(), mins[1].into());
    }
    if want("wkb") {
        let grid = Grid::new(c.wkb_n)?;
        let q = Bump::new(1.0, [0.1, -0.1], 0.5).sample(&grid);
        let hs = cfg.h_list(0.01, 0.1, 5)?;
        let mut t = Table::new(&["order", "h", "residual"]);
        let mut series = Vec::new();
        for (order, bound) in [(1, 0.8), (2, 1.8), (3, 2.7)] {
            let r = wkb_ansatz(&grid, &Phase::line(), &HoloPoly::one(), &q, order, &hs)?;
            for (h, v) in hs.iter().zip(&r.residuals) {
                t.push(vec![order.into(), (*h).into(), (*v).into()]);
            }
            series.push(Series { label: format!("N = {order}"), x: hs.clone(), y: r.residuals.clone(), fit: true });
            run.check(Check::at_least(format!("wkb_slope_n{order}"), r.fit.as_ref().map_or(f64::NAN, |f| f.slope), bound));
        }
        run.table("wkb.csv", &t)?;
        run.text("wkb.svg", &loglog_svg("WKB residual", "h", "residual", &series))?;
    }
    if want("periods") {
        let r = period_checks(cfg.mesh.inner_radius, c.period_level, 16)?;
        let mut t = Table::new(&["quantity", "value"]);
        for (k, v) in [
            ("log_period", r.log_period),
            ("re_z_period", r.re_z_period),
            ("mixed_period", r.mixed_period),
            ("projected_period", r.projected_period),
            ("idempotence", r.idempotence),
            ("identity_defect", r.identity_defect),
        ] {
            t.push(vec![k.into(), v.into()]);
        }
        run.table("periods.csv", &t)?;
        run.check(Check::at_most("projected_period", r.projected_period.abs(), 1e-3));
        run.check(Check::at_most("idempotence", r.idempotence, 1e-8));
    }
    run.details(&details);
    run.finish()
}
