//! Ring-structured triangulations of the unit disk and of an annulus.
//!
//! Nodes are laid out on concentric circles. Consecutive circles are joined by
//! merging their angular sequences, which keeps the triangles close to
//! equilateral and puts every boundary node exactly on its circle at equally
//! spaced angles (so boundary Fourier coefficients are plain DFTs).

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Highest refinement level accepted by [`build_mesh`].
pub const MAX_LEVEL: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Domain {
    UnitDisk,
    Annulus { inner_radius: f64 },
}

impl Domain {
    pub fn annulus(inner_radius: f64) -> Result<Self> {
        if !(inner_radius > 0.0 && inner_radius < 1.0) {
            return Err(Error::Invalid(format!(
                "annulus inner radius must lie in (0,1), got {inner_radius}"
            )));
        }
        Ok(Domain::Annulus { inner_radius })
    }

    /// Boundary circles as (radius, orientation) with the domain on the left.
    pub fn boundary_components(&self) -> Vec<(f64, Orientation)> {
        match *self {
            Domain::UnitDisk => vec![(1.0, Orientation::Ccw)],
            Domain::Annulus { inner_radius } => {
                vec![(1.0, Orientation::Ccw), (inner_radius, Orientation::Cw)]
            }
        }
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        let r = p[0].hypot(p[1]);
        match *self {
            Domain::UnitDisk => r <= 1.0,
            Domain::Annulus { inner_radius } => r >= inner_radius && r <= 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Orientation {
    Ccw,
    Cw,
}

impl Orientation {
    pub fn sign(self) -> f64 {
        match self {
            Orientation::Ccw => 1.0,
            Orientation::Cw => -1.0,
        }
    }
}

/// One boundary circle. `nodes` is in traversal order (domain on the left);
/// the node at traversal position `j` sits at angle `sign * 2 pi j / n`.
#[derive(Clone, Debug)]
pub struct BoundaryLoop {
    pub radius: f64,
    pub orientation: Orientation,
    pub nodes: Vec<usize>,
}

impl BoundaryLoop {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes sorted by polar angle, the `m`-th at angle `2 pi m / n`.
    pub fn angle_ordered(&self) -> Vec<usize> {
        let n = self.nodes.len();
        match self.orientation {
            Orientation::Ccw => self.nodes.clone(),
            Orientation::Cw => (0..n).map(|m| self.nodes[(n - m) % n]).collect(),
        }
    }

    /// Polar angle of the node at traversal position `j`.
    pub fn angle(&self, j: usize) -> f64 {
        let n = self.nodes.len() as f64;
        (self.orientation.sign() * 2.0 * PI * j as f64 / n).rem_euclid(2.0 * PI)
    }

    /// Arc length carried by each node (uniform spacing).
    pub fn arc_step(&self) -> f64 {
        2.0 * PI * self.radius / self.nodes.len() as f64
    }
}

#[derive(Clone, Debug)]
pub struct Mesh {
    pub domain: Domain,
    pub level: usize,
    pub nodes: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    pub boundary: Vec<BoundaryLoop>,
    on_boundary: Vec<bool>,
}

fn ring_layout(domain: Domain, level: usize) -> Vec<(f64, usize)> {
    let base = 1usize << level;
    match domain {
        Domain::UnitDisk => {
            let rings = 2 * base;
            (0..=rings)
                .map(|k| {
                    let count = if k == 0 { 1 } else { 6 * k };
                    (k as f64 / rings as f64, count)
                })
                .collect()
        }
        Domain::Annulus { inner_radius } => {
            let layers = (((1.0 - inner_radius) * 2.0 * base as f64).round() as usize).max(1);
            (0..=layers)
                .map(|k| {
                    let r = inner_radius + (1.0 - inner_radius) * k as f64 / layers as f64;
                    let count = ((12 * base) as f64 * r).round().max(6.0) as usize;
                    (r, count)
                })
                .collect()
        }
    }
}

/// Builds the level-`level` triangulation. Level 0 of the disk has 12
/// boundary nodes; every level doubles the boundary count and halves the
/// mesh size.
pub fn build_mesh(domain: Domain, level: usize) -> Result<Mesh> {
    if level > MAX_LEVEL {
        return Err(Error::Resource(format!(
            "mesh level {level} exceeds the supported maximum {MAX_LEVEL}"
        )));
    }
    if let Domain::Annulus { inner_radius } = domain {
        Domain::annulus(inner_radius)?;
    }
    let rings = ring_layout(domain, level);
    let mut nodes = Vec::new();
    let mut starts = Vec::with_capacity(rings.len());
    for &(r, count) in &rings {
        starts.push(nodes.len());
        if count == 1 {
            nodes.push([0.0, 0.0]);
        } else {
            for j in 0..count {
                let t = 2.0 * PI * j as f64 / count as f64;
                nodes.push([r * t.cos(), r * t.sin()]);
            }
        }
    }

    let mut triangles = Vec::new();
    for k in 1..rings.len() {
        zip_rings(
            &nodes,
            (starts[k - 1], rings[k - 1].1),
            (starts[k], rings[k].1),
            &mut triangles,
        );
    }
    for t in triangles.iter_mut() {
        if signed_area(&nodes, t) < 0.0 {
            t.swap(1, 2);
        }
    }

    let last = rings.len() - 1;
    let mut boundary = vec![BoundaryLoop {
        radius: 1.0,
        orientation: Orientation::Ccw,
        nodes: (starts[last]..starts[last] + rings[last].1).collect(),
    }];
    if let Domain::Annulus { inner_radius } = domain {
        let n = rings[0].1;
        boundary.push(BoundaryLoop {
            radius: inner_radius,
            orientation: Orientation::Cw,
            nodes: (0..n).map(|j| (n - j) % n).collect(),
        });
    }
    let mut on_boundary = vec![false; nodes.len()];
    for lp in &boundary {
        for &i in &lp.nodes {
            on_boundary[i] = true;
        }
    }
    let mesh = Mesh { domain, level, nodes, triangles, boundary, on_boundary };
    for (i, t) in mesh.triangles.iter().enumerate() {
        if mesh.triangle_area(t) <= 0.0 {
            return Err(Error::DegenerateTriangle(i));
        }
    }
    Ok(mesh)
}

fn zip_rings(
    nodes: &[[f64; 2]],
    (sa, na): (usize, usize),
    (sb, nb): (usize, usize),
    out: &mut Vec<[usize; 3]>,
) {
    if na == 1 {
        for j in 0..nb {
            out.push([sa, sb + j, sb + (j + 1) % nb]);
        }
        return;
    }
    let (mut i, mut j) = (0usize, 0usize);
    while i < na || j < nb {
        let ta = 2.0 * PI * (i + 1) as f64 / na as f64;
        let tb = 2.0 * PI * (j + 1) as f64 / nb as f64;
        let advance_b = if i == na {
            true
        } else if j == nb {
            false
        } else if (ta - tb).abs() < 1e-12 {
            // tie: take the shorter diagonal
            let a_next = nodes[sa + (i + 1) % na];
            let b_next = nodes[sb + (j + 1) % nb];
            let a_cur = nodes[sa + i % na];
            let b_cur = nodes[sb + j % nb];
            dist(a_cur, b_next) < dist(b_cur, a_next)
        } else {
            tb < ta
        };
        if advance_b {
            out.push([sa + i % na, sb + j % nb, sb + (j + 1) % nb]);
            j += 1;
        } else {
            out.push([sa + i % na, sb + j % nb, sa + (i + 1) % na]);
            i += 1;
        }
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn signed_area(nodes: &[[f64; 2]], t: &[usize; 3]) -> f64 {
    let [a, b, c] = [nodes[t[0]], nodes[t[1]], nodes[t[2]]];
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

impl Mesh {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_boundary(&self, i: usize) -> bool {
        self.on_boundary[i]
    }

    pub fn interior_nodes(&self) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&i| !self.on_boundary[i]).collect()
    }

    pub fn triangle_area(&self, t: &[usize; 3]) -> f64 {
        signed_area(&self.nodes, t)
    }

    pub fn max_edge_length(&self) -> f64 {
        self.triangles
            .iter()
            .flat_map(|t| {
                [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])]
                    .map(|(a, b)| dist(self.nodes[a], self.nodes[b]))
            })
            .fold(0.0, f64::max)
    }

    /// Smallest interior angle over all triangles, in radians.
    pub fn min_angle(&self) -> f64 {
        let mut best = PI;
        for t in &self.triangles {
            for k in 0..3 {
                let p = self.nodes[t[k]];
                let a = self.nodes[t[(k + 1) % 3]];
                let b = self.nodes[t[(k + 2) % 3]];
                let u = [a[0] - p[0], a[1] - p[1]];
                let v = [b[0] - p[0], b[1] - p[1]];
                let c = (u[0] * v[0] + u[1] * v[1]) / (dist(a, p) * dist(b, p));
                best = best.min(c.clamp(-1.0, 1.0).acos());
            }
        }
        best
    }

    pub fn total_area(&self) -> f64 {
        self.triangles.iter().map(|t| self.triangle_area(t)).sum()
    }

    /// Writes the plain-text node/element format.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let dom = match self.domain {
            Domain::UnitDisk => "disk".to_string(),
            Domain::Annulus { inner_radius } => format!("annulus {inner_radius}"),
        };
        let _ = writeln!(
            s,
            "{} {} {} {} {}",
            self.nodes.len(),
            self.triangles.len(),
            self.boundary.len(),
            self.level,
            dom
        );
        for p in &self.nodes {
            let _ = writeln!(s, "{:.17e} {:.17e}", p[0], p[1]);
        }
        for t in &self.triangles {
            let _ = writeln!(s, "{} {} {}", t[0], t[1], t[2]);
        }
        for lp in &self.boundary {
            let o = if lp.orientation == Orientation::Ccw { "ccw" } else { "cw" };
            let idx: Vec<String> = lp.nodes.iter().map(|i| i.to_string()).collect();
            let _ = writeln!(s, "{:.17e} {} {} {}", lp.radius, o, lp.nodes.len(), idx.join(" "));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Mesh> {
        let bad = |m: &str| Error::Invalid(format!("mesh text: {m}"));
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Vec<&str> = lines.next().ok_or_else(|| bad("empty"))?.split_whitespace().collect();
        if header.len() < 5 {
            return Err(bad("short header"));
        }
        let parse_usize = |s: &str| s.parse::<usize>().map_err(|_| bad(s));
        let parse_f64 = |s: &str| s.parse::<f64>().map_err(|_| bad(s));
        let (nn, nt, nl, level) = (
            parse_usize(header[0])?,
            parse_usize(header[1])?,
            parse_usize(header[2])?,
            parse_usize(header[3])?,
        );
        let domain = match header[4] {
            "disk" => Domain::UnitDisk,
            "annulus" => Domain::annulus(parse_f64(header.get(5).ok_or_else(|| bad("radius"))?)?)?,
            other => return Err(bad(other)),
        };
        let mut nodes = Vec::with_capacity(nn);
        for _ in 0..nn {
            let f: Vec<&str> = lines.next().ok_or_else(|| bad("nodes"))?.split_whitespace().collect();
            nodes.push([parse_f64(f[0])?, parse_f64(f[1])?]);
        }
        let mut triangles = Vec::with_capacity(nt);
        for _ in 0..nt {
            let f: Vec<&str> = lines.next().ok_or_else(|| bad("triangles"))?.split_whitespace().collect();
            triangles.push([parse_usize(f[0])?, parse_usize(f[1])?, parse_usize(f[2])?]);
        }
        let mut boundary = Vec::with_capacity(nl);
        for _ in 0..nl {
            let f: Vec<&str> = lines.next().ok_or_else(|| bad("loops"))?.split_whitespace().collect();
            let orientation = match f[1] {
                "ccw" => Orientation::Ccw,
                "cw" => Orientation::Cw,
                o => return Err(bad(o)),
            };
            let count = parse_usize(f[2])?;
            let nodes = f[3..3 + count].iter().map(|s| parse_usize(s)).collect::<Result<Vec<_>>>()?;
            boundary.push(BoundaryLoop { radius: parse_f64(f[0])?, orientation, nodes });
        }
        let mut on_boundary = vec![false; nodes.len()];
        for lp in &boundary {
            for &i in &lp.nodes {
                on_boundary[i] = true;
            }
        }
        Ok(Mesh { domain, level, nodes, triangles, boundary, on_boundary })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Mesh> {
        Mesh::from_text(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_zero_disk_boundary_on_circle() {
        let m = build_mesh(Domain::UnitDisk, 0).unwrap();
        assert_eq!(m.boundary[0].len(), 12);
        for &i in &m.boundary[0].nodes {
            let r = m.nodes[i][0].hypot(m.nodes[i][1]);
            assert!((r - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn triangles_positive_and_cover_polygon() {
        for dom in [Domain::UnitDisk, Domain::Annulus { inner_radius: 0.5 }] {
            let m = build_mesh(dom, 2).unwrap();
            assert!(m.triangles.iter().all(|t| m.triangle_area(t) > 0.0));
            // polygon area of the outer boundary minus the inner polygon
            let poly = |n: usize, r: f64| 0.5 * n as f64 * r * r * (2.0 * PI / n as f64).sin();
            let mut want = poly(m.boundary[0].len(), 1.0);
            if m.boundary.len() == 2 {
                want -= poly(m.boundary[1].len(), m.boundary[1].radius);
            }
            assert!((m.total_area() - want).abs() < 1e-12, "{} vs {}", m.total_area(), want);
        }
    }

    #[test]
    fn text_round_trip() {
        let m = build_mesh(Domain::Annulus { inner_radius: 0.5 }, 1).unwrap();
        let back = Mesh::from_text(&m.to_text()).unwrap();
        assert_eq!(back.nodes, m.nodes);
        assert_eq!(back.triangles, m.triangles);
        assert_eq!(back.boundary[1].nodes, m.boundary[1].nodes);
    }

    #[test]
    fn level_cap() {
        assert!(matches!(build_mesh(Domain::UnitDisk, MAX_LEVEL + 1), Err(Error::Resource(_))));
    }
}
