//! Regression comparison of CSV outputs against a golden directory.
//!
//! Tolerances are relative and come from a TOML manifest:
//!
//! ```toml
//! default = 1e-8
//! [files."forward.csv"]
//! default = 1e-6
//! columns = { u = 1e-5 }
//! ```
//!
//! A cell passes when `|a - e| <= tol max(|a|, |e|) + floor max_col |e|`
//! with `floor` = [`REDUCTION_FLOOR`], which absorbs reduction-order
//! differences. No relative tolerance is tighter than that floor either.
//! Without a manifest every cell uses [`DEFAULT_TOLERANCE`] and a warning is
//! reported.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_TOLERANCE: f64 = 1e-8;
pub const REDUCTION_FLOOR: f64 = 1e-12;
pub const MANIFEST_NAME: &str = "tolerances.toml";

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub default: Option<f64>,
    #[serde(default)]
    pub files: BTreeMap<String, FileTolerance>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileTolerance {
    pub default: Option<f64>,
    #[serde(default)]
    pub columns: BTreeMap<String, f64>,
}

impl Manifest {
    pub fn tolerance(&self, file: &str, column: &str) -> f64 {
        let f = self.files.get(file);
        let t = f
            .and_then(|f| f.columns.get(column).copied().or(f.default))
            .or(self.default)
            .unwrap_or(DEFAULT_TOLERANCE);
        t.max(REDUCTION_FLOOR)
    }
}

/// A cell outside tolerance, or a structural mismatch when `column` is empty.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellDiff {
    pub file: String,
    /// data row, 1-based (the header is row 0)
    pub row: usize,
    pub column: String,
    pub expected: String,
    pub actual: String,
    pub rel_error: f64,
    pub tolerance: f64,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct GoldenReport {
    pub files_compared: usize,
    pub missing: Vec<String>,
    pub diffs: Vec<CellDiff>,
    pub warnings: Vec<String>,
}

impl GoldenReport {
    pub fn is_clean(&self) -> bool {
        self.missing.is_empty() && self.diffs.is_empty()
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for w in &self.warnings {
            s += &format!("warning: {w}\n");
        }
        for m in &self.missing {
            s += &format!("missing: {m}\n");
        }
        for d in &self.diffs {
            s += &format!(
                "{}: row {} column '{}': expected {} got {} (rel {:.3e} > {:.1e})\n",
                d.file, d.row, d.column, d.expected, d.actual, d.rel_error, d.tolerance
            );
        }
        s += &format!("{} file(s) compared, {} difference(s)\n", self.files_compared, self.diffs.len() + self.missing.len());
        s
    }
}

fn read_csv(path: &Path) -> Result<Vec<Vec<String>>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)
        .map_err(|e| Error::Io(std::io::Error::other(format!("{}: {e}", path.display()))))?;
    r.records()
        .map(|rec| {
            rec.map(|r| r.iter().map(String::from).collect())
                .map_err(|e| Error::Io(std::io::Error::other(format!("{}: {e}", path.display()))))
        })
        .collect()
}

/// Compares every CSV in `golden` with its namesake in `output`. The
/// manifest defaults to `golden/tolerances.toml`.
pub fn golden_check(output: &Path, golden: &Path, manifest: Option<&Path>) -> Result<GoldenReport> {
    if !golden.is_dir() {
        return Err(Error::Invalid(format!("golden directory {} not found", golden.display())));
    }
    let mut report = GoldenReport::default();
    let mpath = manifest.map(Path::to_path_buf).unwrap_or_else(|| golden.join(MANIFEST_NAME));
    let man = if mpath.is_file() {
        toml::from_str(&fs::read_to_string(&mpath)?)
            .map_err(|e| Error::Invalid(format!("manifest {}: {e}", mpath.display())))?
    } else {
        report.warnings.push(format!("no tolerance manifest at {}; using {DEFAULT_TOLERANCE:e} for every column", mpath.display()));
        Manifest::default()
    };
    let mut names: Vec<String> = fs::read_dir(golden)?
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".csv"))
        .collect();
    names.sort();
    for name in names {
        let out = output.join(&name);
        if !out.is_file() {
            report.missing.push(name);
            continue;
        }
        report.files_compared += 1;
        compare_file(&name, &read_csv(&golden.join(&name))?, &read_csv(&out)?, &man, &mut report.diffs);
    }
    Ok(report)
}

fn compare_file(name: &str, exp: &[Vec<String>], act: &[Vec<String>], man: &Manifest, diffs: &mut Vec<CellDiff>) {
    let structural = |row: usize, e: String, a: String| CellDiff {
        file: name.into(),
        row,
        column: String::new(),
        expected: e,
        actual: a,
        rel_error: f64::INFINITY,
        tolerance: 0.0,
    };
    if exp.len() != act.len() {
        diffs.push(structural(0, format!("{} rows", exp.len()), format!("{} rows", act.len())));
        return;
    }
    let header: Vec<String> = exp.first().cloned().unwrap_or_default();
    if act.first() != exp.first() {
        diffs.push(structural(0, header.join(","), act.first().map(|h| h.join(",")).unwrap_or_default()));
        return;
    }
    // an absolute floor of REDUCTION_FLOOR times the column magnitude keeps
    // cancellation noise near zero from registering
    let scale: Vec<f64> = (0..header.len())
        .map(|c| exp.iter().skip(1).filter_map(|r| r.get(c)?.parse::<f64>().ok()).fold(0.0f64, |m, v| m.max(v.abs())))
        .collect();
    for (i, (er, ar)) in exp.iter().zip(act).enumerate().skip(1) {
        if er.len() != ar.len() {
            diffs.push(structural(i, format!("{} cells", er.len()), format!("{} cells", ar.len())));
            continue;
        }
        for (c, (e, a)) in er.iter().zip(ar).enumerate() {
            let col = header.get(c).cloned().unwrap_or_else(|| c.to_string());
            let tol = man.tolerance(name, &col);
            let (rel, ok) = match (e.parse::<f64>(), a.parse::<f64>()) {
                (Ok(x), Ok(y)) if x == y || (x.is_nan() && y.is_nan()) => (0.0, true),
                (Ok(x), Ok(y)) => {
                    let (d, m) = ((x - y).abs(), x.abs().max(y.abs()));
                    (d / m, d <= tol * m + REDUCTION_FLOOR * scale[c])
                }
                _ if e == a => (0.0, true),
                _ => (f64::INFINITY, false),
            };
            if !ok {
                diffs.push(CellDiff {
                    file: name.into(),
                    row: i,
                    column: col,
                    expected: e.clone(),
                    actual: a.clone(),
                    rel_error: rel,
                    tolerance: tol,
                });
            }
        }
    }
}
