use std::fs;
use std::path::Path;
use std::process::Command;

use fermi_forge::cli::{
    exit_code, golden_check, main_with_args, parse_modes, read_summary, ExperimentConfig, Manifest, DEFAULT_TOLERANCE,
    EXIT_ASSERTION, EXIT_PASS, EXIT_RESOURCE, EXIT_VALIDATION, REDUCTION_FLOOR, THREADS_ENV,
};
use fermi_forge::error::Error;
use proptest::prelude::*;

fn eval(s: &str, theta: f64) -> f64 {
    parse_modes(s, 1, 8).unwrap().eval(0, theta).re
}

fn run(args: &[&str]) -> i32 {
    main_with_args(std::iter::once("fermi-forge").chain(args.iter().copied()))
}

fn write(dir: &Path, name: &str, body: &str) {
    fs::write(dir.join(name), body).unwrap();
}

#[test]
fn mode_grammar() {
    for th in [0.0f64, 0.7, 2.0, 4.5] {
        let want = th.cos() + 2.0 * (3.0 * th).sin() - 0.5 + 1e-3 * (2.0 * th).cos();
        assert!((eval("cos1 + 2*sin3 - 0.5 + 1e-3*cos2", th) - want).abs() < 1e-14);
        assert!((eval("-cos2", th) + (2.0 * th).cos()).abs() < 1e-14);
        assert!((eval("fourier:n=2,amp=0.05,kind=sin", th) - 0.05 * (2.0 * th).sin()).abs() < 1e-15);
        assert!((eval("fourier:n=1", th) - th.cos()).abs() < 1e-15);
    }
    for bad in ["", "cos9", "tan1", "x*cos1", "fourier:amp=1", "fourier:n=1,kind=tan", "fourier:n=-1"] {
        assert!(matches!(parse_modes(bad, 1, 8), Err(Error::Invalid(_))), "{bad}");
    }
}

#[test]
fn config_round_trip_and_validation() {
    let cfg = ExperimentConfig::default();
    cfg.validate().unwrap();
    let back = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
    assert_eq!(back.to_toml(), cfg.to_toml());
    assert!(ExperimentConfig::from_toml("[mesh]\nlevl = 3\n").is_err());
    let mut c = ExperimentConfig::default();
    c.sweep.h_min = Some(0.5);
    c.sweep.h_max = Some(0.1);
    let e = c.validate().unwrap_err();
    assert!(matches!(e, Error::Invalid(ref m) if m.starts_with("sweep")), "{e}");
    let mut c = ExperimentConfig::default();
    c.recover.z0 = [0.95, 0.0];
    assert!(c.validate().is_err());
    let mut c = ExperimentConfig::default();
    c.calderon.weight = "im-z".into();
    assert!(c.validate().is_err());
}

#[test]
fn validation_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let out = out.to_str().unwrap();
    assert_eq!(run(&["dnmap", "--out", out, "--h-min", "0.5", "--h-max", "0.1"]), EXIT_VALIDATION);
    assert_eq!(run(&["forward", "--out", out, "--family", "nope"]), EXIT_VALIDATION);
    assert_eq!(run(&["forward", "--out", out, "--boundary", "cos99"]), EXIT_VALIDATION);
    assert_eq!(run(&["no-such-command"]), EXIT_VALIDATION);
    assert_eq!(run(&["--help"]), EXIT_PASS);
}

#[test]
fn exit_code_mapping() {
    assert_eq!(exit_code(&Error::Calibration("x".into())), EXIT_ASSERTION);
    assert_eq!(exit_code(&Error::Invalid("x".into())), EXIT_VALIDATION);
    assert_eq!(exit_code(&Error::LoopNotInterior("x".into())), EXIT_VALIDATION);
    assert_eq!(exit_code(&Error::NotSpd { x: 0.0, y: 0.0, s: 0.0 }), EXIT_VALIDATION);
    assert_eq!(exit_code(&Error::Resource("x".into())), EXIT_RESOURCE);
    assert_eq!(exit_code(&Error::NewtonDivergence { iterations: 1, residual: 1.0 }), EXIT_RESOURCE);
    assert_eq!(exit_code(&Error::SeriesDivergence { ratio: 1.0 }), EXIT_RESOURCE);
    assert_eq!(exit_code(&Error::UnderResolved { spacing: 1.0, limit: 0.5 }), EXIT_RESOURCE);
    assert_eq!(exit_code(&Error::OutOfRange { value: 1.0, s_max: 0.5 }), EXIT_RESOURCE);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        assert_eq!(run(&["dnmap", "--level", "2", "--nf", "4", "--out", d.to_str().unwrap()]), EXIT_PASS);
    }
    for f in ["dnmap.csv", "volumes.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let s = read_summary(&a).unwrap();
    assert_eq!(s["command"], "dnmap");
    assert_eq!(s["passed"], true);
}

#[test]
fn config_file_is_echoed_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    let text = "seed = 3\n[mesh]\nlevel = 1\n[boundary]\nnf = 4\n";
    write(dir.path(), "exp.toml", text);
    let out = dir.path().join("run");
    let cfg = dir.path().join("exp.toml");
    assert_eq!(run(&["forward", "--config", cfg.to_str().unwrap(), "--level", "2", "--out", out.to_str().unwrap()]), EXIT_PASS);
    assert_eq!(fs::read_to_string(out.join("config.toml")).unwrap(), text);
    let eff = ExperimentConfig::from_toml(&fs::read_to_string(out.join("effective.toml")).unwrap()).unwrap();
    assert_eq!((eff.seed, eff.mesh.level, eff.boundary.nf), (3, 2, 4));
    assert!(out.join("forward.csv").is_file() && out.join("newton.svg").is_file());
}

#[test]
fn golden_comparison() {
    let dir = tempfile::tempdir().unwrap();
    let (gold, out) = (dir.path().join("gold"), dir.path().join("out"));
    fs::create_dir_all(&gold).unwrap();
    fs::create_dir_all(&out).unwrap();
    let body = "h,value,label\n1.0e-1,2.5e0,a\n2.0e-1,3.5e0,b\n";
    write(&gold, "t.csv", body);
    write(&out, "t.csv", body);

    let r = golden_check(&out, &gold, None).unwrap();
    assert!(r.is_clean() && r.diffs.is_empty());
    assert_eq!(r.files_compared, 1);
    assert_eq!(r.warnings.len(), 1, "missing manifest warns");

    write(&out, "t.csv", "h,value,label\n1.0e-1,2.5e0,a\n2.0e-1,3.5000001e0,b\n");
    let r = golden_check(&out, &gold, None).unwrap();
    assert_eq!(r.diffs.len(), 1);
    assert_eq!((r.diffs[0].column.as_str(), r.diffs[0].row), ("value", 2));
    assert_eq!(r.diffs[0].tolerance, DEFAULT_TOLERANCE);
    assert!(r.render().contains("column 'value'"));

    write(&gold, "tolerances.toml", "default = 1e-10\n[files.\"t.csv\"]\ncolumns = { value = 1e-6 }\n");
    let r = golden_check(&out, &gold, None).unwrap();
    assert!(r.is_clean() && r.warnings.is_empty(), "{}", r.render());

    write(&out, "t.csv", "h,value,label\n1.0e-1,2.5e0,a\n2.0e-1,3.5e0,c\n");
    let r = golden_check(&out, &gold, None).unwrap();
    assert_eq!(r.diffs[0].column, "label");

    write(&gold, "extra.csv", "x\n1\n");
    let r = golden_check(&out, &gold, None).unwrap();
    assert_eq!(r.missing, vec!["extra.csv".to_string()]);

    let o = out.to_str().unwrap();
    let g = gold.to_str().unwrap();
    assert_eq!(run(&["golden", o, g]), EXIT_ASSERTION);
}

#[test]
fn manifest_tolerance_lookup() {
    let m: Manifest = toml::from_str("default = 1e-7\n[files.\"a.csv\"]\ndefault = 1e-5\ncolumns = { u = 1e-3, v = 0.0 }\n").unwrap();
    assert_eq!(m.tolerance("a.csv", "u"), 1e-3);
    assert_eq!(m.tolerance("a.csv", "w"), 1e-5);
    assert_eq!(m.tolerance("b.csv", "u"), 1e-7);
    assert_eq!(m.tolerance("a.csv", "v"), REDUCTION_FLOOR);
    assert_eq!(Manifest::default().tolerance("x", "y"), DEFAULT_TOLERANCE);
}

#[test]
fn thread_count_from_the_environment() {
    let bin = env!("CARGO_BIN_EXE_fermi-forge");
    let dir = tempfile::tempdir().unwrap();
    let out = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    let status = |threads: &str, name: &str| {
        Command::new(bin)
            .args(["dnmap", "--level", "2", "--nf", "4", "--out", &out(name)])
            .env(THREADS_ENV, threads)
            .output()
            .unwrap()
            .status
            .code()
    };
    assert_eq!(status("abc", "bad"), Some(EXIT_VALIDATION));
    assert_eq!(status("0", "zero"), Some(EXIT_VALIDATION));
    assert_eq!(status("1", "one"), Some(EXIT_PASS));
    assert_eq!(status("3", "three"), Some(EXIT_PASS));
    // ordered reductions make the result independent of the pool size
    assert_eq!(fs::read(dir.path().join("one/dnmap.csv")).unwrap(), fs::read(dir.path().join("three/dnmap.csv")).unwrap());
}

proptest! {
    #[test]
    fn cosine_terms_evaluate(a in -3.0f64..3.0, n in 0i64..8, th in 0.0f64..6.3) {
        let s = format!("{a:e}*cos{n}");
        let f = parse_modes(&s, 1, 8).unwrap();
        prop_assert!((f.eval(0, th).re - a * (n as f64 * th).cos()).abs() < 1e-12);
    }
}
