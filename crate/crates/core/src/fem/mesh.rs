//! Axisymmetric (r, z) triangulations and their text formats.

use std::fmt::Write as _;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeTag {
    Interior,
    Outer,
    Axis,
}

impl NodeTag {
    fn name(self) -> &'static str {
        match self {
            NodeTag::Interior => "interior",
            NodeTag::Outer => "outer",
            NodeTag::Axis => "axis",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    /// `(r, z)` in metres.
    pub nodes: Vec<(f64, f64)>,
    pub node_tags: Vec<NodeTag>,
    pub triangles: Vec<[usize; 3]>,
    /// Region index of each triangle into `regions`.
    pub tri_region: Vec<usize>,
    pub regions: Vec<String>,
}

/// Name given to triangles outside every rectangle.
pub const AIR: &str = "air";

impl Mesh {
    pub fn region_id(&self, name: &str) -> Option<usize> {
        self.regions.iter().position(|r| r == name)
    }

    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        let (p, q, s) = (self.nodes[a], self.nodes[b], self.nodes[c]);
        0.5 * ((q.0 - p.0) * (s.1 - p.1) - (s.0 - p.0) * (q.1 - p.1))
    }

    pub fn region_area(&self, region: usize) -> f64 {
        (0..self.triangles.len())
            .filter(|&t| self.tri_region[t] == region)
            .map(|t| self.area(t))
            .sum()
    }

    /// Nodes belonging to at least one triangle of `region`.
    pub fn region_nodes(&self, region: usize) -> Vec<usize> {
        let mut used = vec![false; self.nodes.len()];
        for (t, tri) in self.triangles.iter().enumerate() {
            if self.tri_region[t] == region {
                tri.iter().for_each(|&v| used[v] = true);
            }
        }
        (0..used.len()).filter(|&k| used[k]).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Model(format!("invalid mesh: {m}")));
        if self.node_tags.len() != self.nodes.len() {
            return bad("node tag count differs from node count".into());
        }
        if self.tri_region.len() != self.triangles.len() {
            return bad("region tag count differs from triangle count".into());
        }
        for (k, &(r, z)) in self.nodes.iter().enumerate() {
            if !r.is_finite() || !z.is_finite() || r < 0.0 {
                return bad(format!("node {k} has invalid coordinates ({r}, {z})"));
            }
            if r == 0.0 && self.node_tags[k] != NodeTag::Axis {
                return bad(format!("node {k} lies on the axis but is tagged {}", self.node_tags[k].name()));
            }
        }
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= self.nodes.len()) {
                return bad(format!("triangle {t} references a missing node"));
            }
            if self.tri_region[t] >= self.regions.len() {
                return bad(format!("triangle {t} has an unknown region"));
            }
            if !(self.area(t) > 0.0) {
                return bad(format!("triangle {t} is not positively oriented"));
            }
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, &(r, z)) in self.nodes.iter().enumerate() {
            let _ = writeln!(s, "node {r:.17e} {z:.17e} {}", self.node_tags[k].name());
        }
        for (t, [a, b, c]) in self.triangles.iter().enumerate() {
            let _ = writeln!(s, "tri {a} {b} {c} {}", self.regions[self.tri_region[t]]);
        }
        s
    }
}

fn columns(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in line.char_indices() {
        if c.is_whitespace() {
            if let Some(s) = start.take() {
                out.push((s + 1, &line[s..i]));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push((s + 1, &line[s..]));
    }
    out
}

fn strip_comment(line: &str) -> &str {
    line.split('#').next().unwrap_or("")
}

fn num(tok: (usize, &str), line: usize) -> Result<f64> {
    match tok.1.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::parse(format!("malformed number '{}'", tok.1), line, tok.0)),
    }
}

/// Parses `node r z tag` and `tri a b c region` records (0-based node
/// indices in order of appearance). `#` starts a comment.
pub fn parse_mesh(text: &str) -> Result<Mesh> {
    let mut mesh = Mesh {
        nodes: Vec::new(),
        node_tags: Vec::new(),
        triangles: Vec::new(),
        tri_region: Vec::new(),
        regions: Vec::new(),
    };
    let mut tri_lines = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = no + 1;
        let toks = columns(strip_comment(raw));
        let Some(&(col, kw)) = toks.first() else { continue };
        match kw {
            "node" => {
                if toks.len() != 4 {
                    return Err(Error::parse("expected 'node r z tag'", line, col));
                }
                let r = num(toks[1], line)?;
                let z = num(toks[2], line)?;
                if r < 0.0 {
                    return Err(Error::parse("negative radius", line, toks[1].0));
                }
                let tag = match toks[3].1 {
                    "interior" | "none" | "-" => NodeTag::Interior,
                    "outer" => NodeTag::Outer,
                    "axis" => NodeTag::Axis,
                    t => return Err(Error::parse(format!("unknown node tag '{t}'"), line, toks[3].0)),
                };
                mesh.nodes.push((r, z));
                mesh.node_tags.push(tag);
            }
            "tri" => {
                if toks.len() != 5 {
                    return Err(Error::parse("expected 'tri a b c region'", line, col));
                }
                let mut v = [0usize; 3];
                for k in 0..3 {
                    v[k] = toks[k + 1]
                        .1
                        .parse()
                        .map_err(|_| Error::parse(format!("malformed node index '{}'", toks[k + 1].1), line, toks[k + 1].0))?;
                }
                let name = toks[4].1;
                let rid = match mesh.regions.iter().position(|r| r == name) {
                    Some(i) => i,
                    None => {
                        mesh.regions.push(name.to_string());
                        mesh.regions.len() - 1
                    }
                };
                mesh.triangles.push(v);
                mesh.tri_region.push(rid);
                tri_lines.push((line, toks[1].0));
            }
            other => return Err(Error::parse(format!("unknown record '{other}'"), line, col)),
        }
    }
    for (t, tri) in mesh.triangles.iter().enumerate() {
        if let Some(&v) = tri.iter().find(|&&v| v >= mesh.nodes.len()) {
            let (line, col) = tri_lines[t];
            return Err(Error::parse(format!("node index {v} out of range"), line, col));
        }
        let [a, b, c] = *tri;
        if a == b || b == c || a == c {
            let (line, col) = tri_lines[t];
            return Err(Error::parse("repeated node in triangle", line, col));
        }
    }
    Ok(mesh)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Rect {
    pub region: String,
    pub r0: f64,
    pub r1: f64,
    pub z0: f64,
    pub z1: f64,
}

impl Rect {
    fn contains(&self, r: f64, z: f64) -> bool {
        r > self.r0 && r < self.r1 && z > self.z0 && z < self.z1
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegionMaterial {
    pub region: String,
    pub mu_r: f64,
    pub sigma: f64,
}

/// Rectangular axisymmetric layout. Lengths are in metres.
#[derive(Clone, Debug, PartialEq)]
pub struct Geometry {
    pub r_max: f64,
    pub z_min: f64,
    pub z_max: f64,
    pub rects: Vec<Rect>,
    /// Winding turn counts per region.
    pub turns: Vec<(String, f64)>,
    /// Optional material lines; regions without one are non-magnetic and
    /// non-conducting.
    pub materials: Vec<RegionMaterial>,
}

impl Geometry {
    pub fn turns_of(&self, region: &str) -> Option<f64> {
        self.turns.iter().find(|(r, _)| r == region).map(|(_, n)| *n)
    }

    pub fn material_of(&self, region: &str) -> (f64, f64) {
        self.materials
            .iter()
            .find(|m| m.region == region)
            .map_or((1.0, 0.0), |m| (m.mu_r, m.sigma))
    }

    fn check(&self) -> Result<()> {
        if !(self.r_max > 0.0 && self.z_max > self.z_min) {
            return Err(Error::Model("domain must have positive extent".into()));
        }
        for (k, a) in self.rects.iter().enumerate() {
            if !(a.r1 > a.r0 && a.z1 > a.z0) {
                return Err(Error::Model(format!("rectangle '{}' is empty", a.region)));
            }
            if a.r0 < 0.0 || a.r1 > self.r_max || a.z0 < self.z_min || a.z1 > self.z_max {
                return Err(Error::Model(format!("rectangle '{}' leaves the domain", a.region)));
            }
            for b in &self.rects[k + 1..] {
                if a.r0 < b.r1 && b.r0 < a.r1 && a.z0 < b.z1 && b.z0 < a.z1 {
                    return Err(Error::Model(format!(
                        "rectangles '{}' and '{}' overlap",
                        a.region, b.region
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Parses a geometry file with lengths in millimetres:
///
/// ```text
/// domain <r_max> <z_min> <z_max>
/// rect <region> <r0> <r1> <z0> <z1>
/// turns <region> <N>
/// material <region> <mu_r> <sigma>
/// ```
pub fn parse_geometry(text: &str) -> Result<Geometry> {
    const MM: f64 = 1e-3;
    let mut domain = None;
    let mut g = Geometry {
        r_max: 0.0,
        z_min: 0.0,
        z_max: 0.0,
        rects: Vec::new(),
        turns: Vec::new(),
        materials: Vec::new(),
    };
    for (no, raw) in text.lines().enumerate() {
        let line = no + 1;
        let toks = columns(strip_comment(raw));
        let Some(&(col, kw)) = toks.first() else { continue };
        let arity = |n: usize, usage: &str| -> Result<()> {
            if toks.len() != n {
                Err(Error::parse(format!("expected '{usage}'"), line, col))
            } else {
                Ok(())
            }
        };
        match kw {
            "domain" => {
                arity(4, "domain <r_max> <z_min> <z_max>")?;
                if domain.is_some() {
                    return Err(Error::parse("duplicate domain record", line, col));
                }
                domain = Some(line);
                g.r_max = num(toks[1], line)? * MM;
                g.z_min = num(toks[2], line)? * MM;
                g.z_max = num(toks[3], line)? * MM;
            }
            "rect" => {
                arity(6, "rect <region> <r0> <r1> <z0> <z1>")?;
                let region = toks[1].1.to_string();
                if region == AIR {
                    return Err(Error::parse("region name 'air' is reserved", line, toks[1].0));
                }
                if g.rects.iter().any(|r| r.region == region) {
                    return Err(Error::parse(format!("duplicate region '{region}'"), line, toks[1].0));
                }
                g.rects.push(Rect {
                    region,
                    r0: num(toks[2], line)? * MM,
                    r1: num(toks[3], line)? * MM,
                    z0: num(toks[4], line)? * MM,
                    z1: num(toks[5], line)? * MM,
                });
            }
            "turns" => {
                arity(3, "turns <region> <N>")?;
                let n = num(toks[2], line)?;
                if n < 0.0 {
                    return Err(Error::parse("turn count must be nonnegative", line, toks[2].0));
                }
                g.turns.push((toks[1].1.to_string(), n));
            }
            "material" => {
                arity(4, "material <region> <mu_r> <sigma>")?;
                let mu_r = num(toks[2], line)?;
                let sigma = num(toks[3], line)?;
                if !(mu_r > 0.0) {
                    return Err(Error::parse("relative permeability must be positive", line, toks[2].0));
                }
                if sigma < 0.0 {
                    return Err(Error::parse("conductivity must be nonnegative", line, toks[3].0));
                }
                g.materials.push(RegionMaterial {
                    region: toks[1].1.to_string(),
                    mu_r,
                    sigma,
                });
            }
            other => return Err(Error::parse(format!("unknown record '{other}'"), line, col)),
        }
    }
    if domain.is_none() {
        return Err(Error::parse("missing domain record", text.lines().count().max(1), 1));
    }
    for (name, _) in &g.turns {
        if !g.rects.iter().any(|r| &r.region == name) {
            return Err(Error::Model(format!("turns given for unknown region '{name}'")));
        }
    }
    g.check()?;
    Ok(g)
}

/// Structured triangulation whose grid lines contain every rectangle edge.
/// Each interval between consecutive lines is split into `ceil(len / h)`
/// cells and each cell into two triangles.
pub fn build_rect_mesh(geom: &Geometry, h: f64) -> Result<Mesh> {
    geom.check()?;
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Model(format!("mesh size must be positive, got {h}")));
    }
    for r in &geom.rects {
        let edge = (r.r1 - r.r0).min(r.z1 - r.z0);
        if h > edge * (1.0 + 1e-12) {
            return Err(Error::Model(format!(
                "mesh size {h:e} exceeds the smallest edge {edge:e} of region '{}'",
                r.region
            )));
        }
    }
    let lines = |mut pts: Vec<f64>| -> Result<Vec<f64>> {
        pts.sort_by(f64::total_cmp);
        pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (1.0 + b.abs()));
        let mut out = vec![pts[0]];
        for w in pts.windows(2) {
            let parts = ((w[1] - w[0]) / h - 1e-9).ceil().max(1.0);
            if parts > 1e6 {
                return Err(Error::Model("mesh would exceed one million cells per direction".into()));
            }
            let parts = parts as usize;
            for k in 1..=parts {
                out.push(if k == parts { w[1] } else { w[0] + (w[1] - w[0]) * k as f64 / parts as f64 });
            }
        }
        Ok(out)
    };
    let rs = lines(
        [0.0, geom.r_max]
            .into_iter()
            .chain(geom.rects.iter().flat_map(|r| [r.r0, r.r1]))
            .collect(),
    )?;
    let zs = lines(
        [geom.z_min, geom.z_max]
            .into_iter()
            .chain(geom.rects.iter().flat_map(|r| [r.z0, r.z1]))
            .collect(),
    )?;
    let (nr, nz) = (rs.len(), zs.len());
    let mut nodes = Vec::with_capacity(nr * nz);
    let mut tags = Vec::with_capacity(nr * nz);
    for (j, &z) in zs.iter().enumerate() {
        for (i, &r) in rs.iter().enumerate() {
            nodes.push((r, z));
            tags.push(if i == 0 {
                NodeTag::Axis
            } else if i == nr - 1 || j == 0 || j == nz - 1 {
                NodeTag::Outer
            } else {
                NodeTag::Interior
            });
        }
    }
    let mut regions: Vec<String> = vec![AIR.to_string()];
    regions.extend(geom.rects.iter().map(|r| r.region.clone()));
    let id = |i: usize, j: usize| j * nr + i;
    let mut triangles = Vec::with_capacity(2 * (nr - 1) * (nz - 1));
    let mut tri_region = Vec::with_capacity(triangles.capacity());
    for j in 0..nz - 1 {
        for i in 0..nr - 1 {
            let (p00, p10, p11, p01) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            let rc = 0.5 * (rs[i] + rs[i + 1]);
            let zc = 0.5 * (zs[j] + zs[j + 1]);
            let region = geom.rects.iter().position(|r| r.contains(rc, zc)).map_or(0, |k| k + 1);
            triangles.push([p00, p10, p11]);
            triangles.push([p00, p11, p01]);
            tri_region.push(region);
            tri_region.push(region);
        }
    }
    let mesh = Mesh {
        nodes,
        node_tags: tags,
        triangles,
        tri_region,
        regions,
    };
    mesh.validate()?;
    Ok(mesh)
}
