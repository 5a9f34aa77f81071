//! Artifact writers: numeric CSV tables, log-log SVG plots and the summary
//! record.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::cgo::linear_fit;
use crate::error::Result;

/// A CSV table with a header; numbers are written with 17 significant
/// digits so reruns can be compared bit for bit.
#[derive(Clone, Debug, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

pub enum Cell {
    Num(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Cell {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Cell {
        Cell::Text(v.to_string())
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Cell {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Cell {
        Cell::Text(v)
    }
}

pub fn fmt_num(v: f64) -> String {
    format!("{v:.17e}")
}

impl Table {
    pub fn new(header: &[&str]) -> Table {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: vec![] }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(
            row.into_iter()
                .map(|c| match c {
                    Cell::Num(v) => fmt_num(v),
                    Cell::Text(s) => s,
                })
                .collect(),
        );
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
        w.write_record(&self.header).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record(r).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> crate::Error {
    crate::Error::Io(std::io::Error::other(e.to_string()))
}

/// One plotted series; a fitted line is drawn when `fit` is set.
pub struct Series {
    pub label: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub fit: bool,
}

const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Log-log scatter with optional least-squares lines. Non-positive values
/// are dropped.
pub fn loglog_svg(title: &str, xlabel: &str, ylabel: &str, series: &[Series]) -> String {
    let (w, h, m) = (640.0, 440.0, 64.0);
    let pts: Vec<Vec<(f64, f64)>> = series
        .iter()
        .map(|s| s.x.iter().zip(&s.y).filter(|(a, b)| **a > 0.0 && **b > 0.0).map(|(a, b)| (a.log10(), b.log10())).collect())
        .collect();
    let all: Vec<&(f64, f64)> = pts.iter().flatten().collect();
    let bounds = |f: fn(&(f64, f64)) -> f64| {
        let lo = all.iter().map(|p| f(p)).fold(f64::INFINITY, f64::min);
        let hi = all.iter().map(|p| f(p)).fold(f64::NEG_INFINITY, f64::max);
        if lo.is_finite() && hi > lo {
            (lo.floor(), hi.ceil())
        } else {
            (0.0, 1.0)
        }
    };
    let (x0, x1) = bounds(|p| p.0);
    let (y0, y1) = bounds(|p| p.1);
    let sx = |x: f64| m + (x - x0) / (x1 - x0) * (w - 2.0 * m);
    let sy = |y: f64| h - m - (y - y0) / (y1 - y0) * (h - 2.0 * m);
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" font-family=\"sans-serif\" font-size=\"12\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n\
         <rect x=\"{m}\" y=\"{m}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n",
        w / 2.0,
        escape(title),
        w - 2.0 * m,
        h - 2.0 * m
    );
    for e in (x0 as i64)..=(x1 as i64) {
        let x = sx(e as f64);
        s += &format!("<line x1=\"{x:.1}\" y1=\"{:.1}\" x2=\"{x:.1}\" y2=\"{:.1}\" stroke=\"black\"/>\n", h - m, h - m + 5.0);
        s += &format!("<text x=\"{x:.1}\" y=\"{:.1}\" text-anchor=\"middle\">1e{e}</text>\n", h - m + 18.0);
    }
    for e in (y0 as i64)..=(y1 as i64) {
        let y = sy(e as f64);
        s += &format!("<line x1=\"{:.1}\" y1=\"{y:.1}\" x2=\"{m}\" y2=\"{y:.1}\" stroke=\"black\"/>\n", m - 5.0);
        s += &format!("<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">1e{e}</text>\n", m - 8.0, y + 4.0);
    }
    s += &format!("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", w / 2.0, h - 16.0, escape(xlabel));
    s += &format!("<text x=\"16\" y=\"{}\" transform=\"rotate(-90 16 {})\" text-anchor=\"middle\">{}</text>\n", h / 2.0, h / 2.0, escape(ylabel));
    for (k, (ser, p)) in series.iter().zip(&pts).enumerate() {
        let c = COLORS[k % COLORS.len()];
        for &(x, y) in p {
            s += &format!("<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"3.5\" fill=\"{c}\"/>\n", sx(x), sy(y));
        }
        let mut label = ser.label.clone();
        if ser.fit && p.len() >= 2 {
            let (xs, ys): (Vec<f64>, Vec<f64>) = p.iter().copied().unzip();
            let (a, b, _) = linear_fit(&xs, &ys);
            let (lo, hi) = xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, u), &v| (l.min(v), u.max(v)));
            s += &format!(
                "<line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"{c}\" stroke-dasharray=\"4 3\"/>\n",
                sx(lo),
                sy(a * lo + b),
                sx(hi),
                sy(a * hi + b)
            );
            label = format!("{label} (slope {a:.2})");
        }
        let ly = m + 16.0 + 16.0 * k as f64;
        s += &format!("<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"3.5\" fill=\"{c}\"/>\n", m + 12.0, ly - 4.0);
        s += &format!("<text x=\"{:.1}\" y=\"{ly:.1}\">{}</text>\n", m + 22.0, escape(&label));
    }
    s + "</svg>\n"
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// One asserted bound.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: String,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Check {
        Check { name: name.into(), value, bound: format!("<= {bound:e}"), passed: value <= bound }
    }

    pub fn at_least(name: impl Into<String>, value: f64, bound: f64) -> Check {
        Check { name: name.into(), value, bound: format!(">= {bound:e}"), passed: value >= bound }
    }

    pub fn within(name: impl Into<String>, value: f64, lo: f64, hi: f64) -> Check {
        Check { name: name.into(), value, bound: format!("in [{lo}, {hi}]"), passed: (lo..=hi).contains(&value) }
    }
}

#[derive(Debug, Serialize)]
pub struct Summary {
    pub command: String,
    pub seed: u64,
    pub checks: Vec<Check>,
    pub artifacts: Vec<String>,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub details: Option<serde_json::Value>,
}

/// Collects artifacts for one run directory.
pub struct Run {
    pub dir: PathBuf,
    pub summary: Summary,
}

impl Run {
    pub fn new(dir: PathBuf, command: &str, seed: u64) -> Result<Run> {
        fs::create_dir_all(&dir)?;
        Ok(Run {
            dir,
            summary: Summary { command: command.into(), seed, checks: vec![], artifacts: vec![], passed: true, details: None },
        })
    }

    pub fn table(&mut self, name: &str, t: &Table) -> Result<()> {
        t.write(&self.dir.join(name))?;
        self.summary.artifacts.push(name.into());
        Ok(())
    }

    pub fn text(&mut self, name: &str, body: &str) -> Result<()> {
        fs::write(self.dir.join(name), body)?;
        self.summary.artifacts.push(name.into());
        Ok(())
    }

    pub fn check(&mut self, c: Check) {
        self.summary.passed &= c.passed;
        self.summary.checks.push(c);
    }

    pub fn details<T: Serialize>(&mut self, v: &T) {
        self.summary.details = serde_json::to_value(v).ok();
    }

    pub fn finish(mut self) -> Result<Summary> {
        self.summary.artifacts.push("summary.json".into());
        let body = serde_json::to_string_pretty(&self.summary).map_err(|e| crate::Error::Io(std::io::Error::other(e)))?;
        fs::write(self.dir.join("summary.json"), body + "\n")?;
        Ok(self.summary)
    }
}
