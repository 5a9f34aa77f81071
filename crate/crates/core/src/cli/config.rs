//! Experiment configuration: TOML schema, boundary-data grammar and
//! validation. Every field is checked before any solve.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Domain, ExpFamily, MAX_LEVEL};
use crate::pde_core::BoundaryFunction;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub mesh: MeshConfig,
    pub family: FamilyConfig,
    pub boundary: BoundaryConfig,
    pub forward: ForwardConfig,
    pub sweep: SweepConfig,
    pub eps: EpsConfig,
    pub tolerances: Tolerances,
    pub identities: IdentitiesConfig,
    pub cgo: CgoConfig,
    pub recover: RecoverConfig,
    pub calderon: CalderonConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeshConfig {
    /// `disk` or `annulus`
    pub domain: String,
    pub inner_radius: f64,
    pub level: usize,
    /// refinement study levels; empty means `[level]`
    pub levels: Vec<usize>,
}

impl Default for MeshConfig {
    fn default() -> Self {
        MeshConfig { domain: "disk".into(), inner_radius: 0.4, level: 3, levels: vec![] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FamilyConfig {
    /// catalog name, ignored when `params` is given
    pub name: String,
    pub params: Option<ExpFamily>,
}

impl Default for FamilyConfig {
    fn default() -> Self {
        FamilyConfig { name: "standard".into(), params: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundaryConfig {
    pub nf: usize,
    /// boundary data in the mode grammar, e.g. `"0.05*cos1 + 0.02*sin3"`
    pub data: Vec<String>,
}

impl Default for BoundaryConfig {
    fn default() -> Self {
        BoundaryConfig { nf: 8, data: vec!["cos1".into(), "sin2".into(), "cos3 + 0.5".into(), "sin1".into()] }
    }
}

/// Data for `forward` and `dnmap`, in the same grammar as `boundary.data`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForwardConfig {
    pub boundary: String,
    /// direction of the area difference quotient
    pub direction: String,
    /// step of the area difference quotient
    pub t: f64,
}

impl Default for ForwardConfig {
    fn default() -> Self {
        ForwardConfig { boundary: "fourier:n=1,amp=0.05".into(), direction: "sin2".into(), t: 1e-3 }
    }
}

/// Log-spaced `h` values; unset fields fall back to per-command defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub h_min: Option<f64>,
    pub h_max: Option<f64>,
    pub count: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpsConfig {
    pub steps: Vec<f64>,
}

impl Default for EpsConfig {
    fn default() -> Self {
        EpsConfig { steps: vec![1e-2] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub newton: f64,
    pub identity2: f64,
    pub identity3: f64,
    pub volume: f64,
    pub recovery: f64,
    pub universality: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            newton: 1e-10,
            identity2: 1e-2,
            identity3: 3e-2,
            volume: 1e-4,
            recovery: 0.10,
            universality: 0.05,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdentitiesConfig {
    pub order: usize,
}

impl Default for IdentitiesConfig {
    fn default() -> Self {
        IdentitiesConfig { order: 2 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CgoConfig {
    /// spectral grid size
    pub n: usize,
    pub phases: Vec<String>,
    /// Lebesgue exponents reported, from {2, 4}
    pub p_norms: Vec<u32>,
}

impl Default for CgoConfig {
    fn default() -> Self {
        CgoConfig { n: 512, phases: ["line", "theta1", "theta2", "theta3"].map(String::from).to_vec(), p_norms: vec![2, 4] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecoverConfig {
    pub n: usize,
    pub z0: [f64; 2],
    /// `k1` (kappa of the trace-free tensor), `h2` (second-order scalar) or
    /// `conformal` (third-order scalar)
    pub target: String,
    /// user target bump `[amp, cx, cy, width]` replacing the default pair
    pub profile: Option<[f64; 4]>,
}

impl Default for RecoverConfig {
    fn default() -> Self {
        RecoverConfig { n: 1024, z0: [0.2, -0.1], target: "k1".into(), profile: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalderonConfig {
    /// `gauge`, `holo-trace`, `carleman`, `wkb`, `periods` or `all`
    pub check: String,
    pub weight: String,
    pub fields: usize,
    pub wkb_n: usize,
    /// finest level for the holomorphic-trace and Carleman checks
    pub level: usize,
    pub gauge_levels: Vec<usize>,
    pub period_level: usize,
}

impl Default for CalderonConfig {
    fn default() -> Self {
        CalderonConfig { check: "all".into(), weight: "re-z2".into(), fields: 50, wkb_n: 256, level: 5, gauge_levels: vec![2, 3, 4, 5], period_level: 4 }
    }
}

pub const CHECKS: [&str; 5] = ["gauge", "holo-trace", "carleman", "wkb", "periods"];
pub const RECOVER_TARGETS: [&str; 3] = ["k1", "h2", "conformal"];

fn bad(field: &str, msg: impl std::fmt::Display) -> Error {
    Error::Invalid(format!("{field}: {msg}"))
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Invalid(format!("config: {e}")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn domain(&self) -> Result<Domain> {
        match self.mesh.domain.as_str() {
            "disk" => Ok(Domain::UnitDisk),
            "annulus" => Domain::annulus(self.mesh.inner_radius).map_err(|e| bad("mesh.inner_radius", e)),
            d => Err(bad("mesh.domain", format!("expected 'disk' or 'annulus', got '{d}'"))),
        }
    }

    pub fn family(&self) -> Result<ExpFamily> {
        match &self.family.params {
            Some(p) => Ok(p.clone()),
            None => ExpFamily::by_name(&self.family.name).map_err(|e| bad("family.name", e)),
        }
    }

    pub fn levels(&self) -> Vec<usize> {
        if self.mesh.levels.is_empty() {
            vec![self.mesh.level]
        } else {
            self.mesh.levels.clone()
        }
    }

    pub fn boundary_data(&self) -> Result<Vec<BoundaryFunction>> {
        let nloops = if self.mesh.domain == "annulus" { 2 } else { 1 };
        self.boundary
            .data
            .iter()
            .enumerate()
            .map(|(i, s)| parse_modes(s, nloops, self.boundary.nf).map_err(|e| bad(&format!("boundary.data[{i}]"), e)))
            .collect()
    }

    /// Forward data and area direction.
    pub fn forward_data(&self) -> Result<(BoundaryFunction, BoundaryFunction)> {
        let nloops = if self.mesh.domain == "annulus" { 2 } else { 1 };
        let f = parse_modes(&self.forward.boundary, nloops, self.boundary.nf).map_err(|e| bad("forward.boundary", e))?;
        let w = parse_modes(&self.forward.direction, nloops, self.boundary.nf).map_err(|e| bad("forward.direction", e))?;
        Ok((f, w))
    }

    /// `h` values with the given fallbacks for unset fields.
    pub fn h_list(&self, lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
        let lo = self.sweep.h_min.unwrap_or(lo);
        let hi = self.sweep.h_max.unwrap_or(hi);
        let count = self.sweep.count.unwrap_or(count);
        check_sweep(lo, hi, count)?;
        Ok(crate::cgo::log_space(lo, hi, count))
    }

    pub fn validate(&self) -> Result<()> {
        self.domain()?;
        self.family()?;
        if self.mesh.level > MAX_LEVEL {
            return Err(bad("mesh.level", format!("must be at most {MAX_LEVEL}, got {}", self.mesh.level)));
        }
        if let Some(l) = self.mesh.levels.iter().find(|&&l| l > MAX_LEVEL) {
            return Err(bad("mesh.levels", format!("must be at most {MAX_LEVEL}, got {l}")));
        }
        if self.boundary.nf == 0 || self.boundary.nf > 256 {
            return Err(bad("boundary.nf", format!("must lie in 1..=256, got {}", self.boundary.nf)));
        }
        self.boundary_data()?;
        self.forward_data()?;
        if !(self.forward.t > 0.0 && self.forward.t < 1.0) {
            return Err(bad("forward.t", format!("must lie in (0, 1), got {}", self.forward.t)));
        }
        if let (Some(lo), Some(hi)) = (self.sweep.h_min, self.sweep.h_max) {
            check_sweep(lo, hi, self.sweep.count.unwrap_or(2))?;
        }
        for (name, v) in [("sweep.h_min", self.sweep.h_min), ("sweep.h_max", self.sweep.h_max)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(bad(name, format!("must be positive, got {v}")));
                }
            }
        }
        if self.sweep.count.is_some_and(|c| c < 2) {
            return Err(bad("sweep.count", "need at least 2 points"));
        }
        if self.eps.steps.is_empty() || self.eps.steps.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
            return Err(bad("eps.steps", "need one or more steps in (0, 1)"));
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("tolerances.newton", t.newton),
            ("tolerances.identity2", t.identity2),
            ("tolerances.identity3", t.identity3),
            ("tolerances.volume", t.volume),
            ("tolerances.recovery", t.recovery),
            ("tolerances.universality", t.universality),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(bad(name, format!("must be positive, got {v}")));
            }
        }
        if !matches!(self.identities.order, 2 | 3) {
            return Err(bad("identities.order", format!("must be 2 or 3, got {}", self.identities.order)));
        }
        if !(16..=4096).contains(&self.cgo.n) {
            return Err(bad("cgo.n", format!("must lie in 16..=4096, got {}", self.cgo.n)));
        }
        for p in &self.cgo.phases {
            crate::cgo::SweepPhase::parse(p).map_err(|e| bad("cgo.phases", e))?;
        }
        if self.cgo.p_norms.is_empty() || self.cgo.p_norms.iter().any(|p| !matches!(p, 2 | 4)) {
            return Err(bad("cgo.p_norms", format!("supported exponents are 2 and 4, got {:?}", self.cgo.p_norms)));
        }
        if let Some(p) = self.recover.profile {
            if !(p[3] > 0.0) || p.iter().any(|v| !v.is_finite()) {
                return Err(bad("recover.profile", "need [amp, cx, cy, width] with a positive width"));
            }
        }
        if !(16..=4096).contains(&self.recover.n) {
            return Err(bad("recover.n", format!("must lie in 16..=4096, got {}", self.recover.n)));
        }
        if self.recover.z0[0].hypot(self.recover.z0[1]) > 0.9 {
            return Err(bad("recover.z0", "must lie in the disk of radius 0.9"));
        }
        if !RECOVER_TARGETS.contains(&self.recover.target.as_str()) {
            return Err(bad("recover.target", format!("expected one of {RECOVER_TARGETS:?}, got '{}'", self.recover.target)));
        }
        let c = &self.calderon;
        if c.check != "all" && !CHECKS.contains(&c.check.as_str()) {
            return Err(bad("calderon.check", format!("expected 'all' or one of {CHECKS:?}, got '{}'", c.check)));
        }
        crate::calderon::Weight::parse(&c.weight).map_err(|e| bad("calderon.weight", e))?;
        if c.fields == 0 {
            return Err(bad("calderon.fields", "need at least one field"));
        }
        for (name, l) in [("calderon.level", c.level), ("calderon.period_level", c.period_level)] {
            if !(2..=MAX_LEVEL).contains(&l) {
                return Err(bad(name, format!("must lie in 2..={MAX_LEVEL}, got {l}")));
            }
        }
        if c.gauge_levels.len() < 2 || c.gauge_levels.iter().any(|&l| l > MAX_LEVEL) {
            return Err(bad("calderon.gauge_levels", format!("need two or more levels up to {MAX_LEVEL}")));
        }
        if !(16..=4096).contains(&c.wkb_n) {
            return Err(bad("calderon.wkb_n", format!("must lie in 16..=4096, got {}", c.wkb_n)));
        }
        Ok(())
    }
}

fn check_sweep(lo: f64, hi: f64, count: usize) -> Result<()> {
    if !(lo > 0.0 && lo.is_finite() && hi.is_finite()) {
        return Err(bad("sweep.h_min", format!("must be positive and finite, got {lo}")));
    }
    if lo >= hi {
        return Err(bad("sweep", format!("h_min = {lo} must be below h_max = {hi}")));
    }
    if count < 2 {
        return Err(bad("sweep.count", format!("need at least 2 points, got {count}")));
    }
    Ok(())
}

/// Parses `term (+|-) term ...` where a term is `[amp*]cos<n>`,
/// `[amp*]sin<n>` or a constant, or the single-mode form
/// `fourier:n=<n>,amp=<a>[,kind=cos|sin]`. The function is placed on the
/// first boundary circle.
pub fn parse_modes(s: &str, nloops: usize, nf: usize) -> Result<BoundaryFunction> {
    if let Some(rest) = s.trim().strip_prefix("fourier:") {
        return parse_fourier(rest, nloops, nf);
    }
    let mut f = BoundaryFunction::zeros(nloops, nf);
    // a minus starts a new term unless it belongs to an exponent
    let mut cleaned = String::with_capacity(s.len() + 4);
    for c in s.chars().filter(|c| !c.is_whitespace()) {
        if c == '-' && !matches!(cleaned.chars().last(), Some('e' | 'E' | '*')) {
            cleaned.push('+');
        }
        cleaned.push(c);
    }
    let mut any = false;
    for term in cleaned.split('+').filter(|t| !t.is_empty()) {
        any = true;
        let (amp, body) = match term.split_once('*') {
            Some((a, b)) => (a.parse::<f64>().map_err(|_| Error::Invalid(format!("bad amplitude '{a}'")))?, b.to_string()),
            None if term.starts_with("-cos") || term.starts_with("-sin") => (-1.0, term[1..].to_string()),
            None => (1.0, term.to_string()),
        };
        let mode = |rest: &str| -> Result<i64> {
            let n: i64 = rest.parse().map_err(|_| Error::Invalid(format!("bad mode number in '{term}'")))?;
            if n < 0 || n as usize > nf {
                return Err(Error::Invalid(format!("mode {n} outside 0..={nf}")));
            }
            Ok(n)
        };
        let g = if let Some(rest) = body.strip_prefix("cos") {
            BoundaryFunction::cosine(nloops, nf, 0, mode(rest)?, amp)
        } else if let Some(rest) = body.strip_prefix("sin") {
            BoundaryFunction::sine(nloops, nf, 0, mode(rest)?, amp)
        } else {
            let c: f64 = body.parse().map_err(|_| Error::Invalid(format!("bad term '{term}'")))?;
            BoundaryFunction::cosine(nloops, nf, 0, 0, amp * c)
        };
        f = f.axpy(1.0, &g)?;
    }
    if !any {
        return Err(Error::Invalid("empty boundary data".into()));
    }
    Ok(f)
}

fn parse_fourier(rest: &str, nloops: usize, nf: usize) -> Result<BoundaryFunction> {
    let (mut n, mut amp, mut kind) = (None, 1.0, "cos");
    for kv in rest.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let (k, v) = kv.split_once('=').ok_or_else(|| Error::Invalid(format!("expected key=value, got '{kv}'")))?;
        match k.trim() {
            "n" => n = Some(v.trim().parse::<i64>().map_err(|_| Error::Invalid(format!("bad mode number '{v}'")))?),
            "amp" => amp = v.trim().parse().map_err(|_| Error::Invalid(format!("bad amplitude '{v}'")))?,
            "kind" if matches!(v.trim(), "cos" | "sin") => kind = if v.trim() == "cos" { "cos" } else { "sin" },
            _ => return Err(Error::Invalid(format!("unknown fourier field '{kv}'"))),
        }
    }
    let n = n.ok_or_else(|| Error::Invalid("fourier data needs n=<mode>".into()))?;
    if n < 0 || n as usize > nf {
        return Err(Error::Invalid(format!("mode {n} outside 0..={nf}")));
    }
    Ok(if kind == "cos" {
        BoundaryFunction::cosine(nloops, nf, 0, n, amp)
    } else {
        BoundaryFunction::sine(nloops, nf, 0, n, amp)
    })
}
