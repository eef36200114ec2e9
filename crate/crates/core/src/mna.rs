//! Netlists and modified nodal analysis.
//!
//! Grammar, one card per line, `#` starts a comment:
//!
//! ```text
//! R<name> <n+> <n-> <ohms>
//! C<name> <n+> <n-> <farads>
//! L<name> <n+> <n-> <henries>
//! V<name> <n+> <n-> <waveform>        waveform: <v> | DC <v> | SIN <off> <amp> <f_Hz> [<phase_rad>]
//! I<name> <n+> <n-> <waveform>
//! F<name> <n+> <n-> <stranded|solid|foil> <model> [<column>]
//! .tran <tau> <t_end>
//! .method <tag>
//! .ic V(<node>) <value> I(<element>) <value> ...
//! .end
//! ```
//!
//! Numbers take an optional SI suffix `p n u m k M G`. Node `0` is ground.
//! Stranded and foil ports behave like current sources (their current is
//! a conductor state), solid ports like voltage sources.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt::{self, Write as _};

use crate::conductors::ConductorKind;
use crate::error::{Error, Result};
use crate::integrators::{InputSignal, Method, Waveform};
use crate::linalg::SparseMat;
use crate::system::{Blocks, EnergySystem, Partition};

pub const GROUND: &str = "0";

#[derive(Clone, Debug, PartialEq)]
pub enum ElementKind {
    /// Resistance in ohms.
    Resistor(f64),
    Capacitor(f64),
    Inductor(f64),
    VoltageSource(Waveform),
    CurrentSource(Waveform),
    FieldPort {
        kind: ConductorKind,
        model: String,
        column: usize,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Element {
    pub name: String,
    pub pos: String,
    pub neg: String,
    pub kind: ElementKind,
    /// Source line, 0 for programmatically built netlists.
    pub line: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum IcTarget {
    Potential(String),
    Current(String),
}

impl fmt::Display for IcTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IcTarget::Potential(n) => write!(f, "V({n})"),
            IcTarget::Current(n) => write!(f, "I({n})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Netlist {
    /// Non-ground nodes in order of first appearance.
    pub nodes: Vec<String>,
    pub elements: Vec<Element>,
    pub tran: Option<(f64, f64)>,
    pub method: Option<Method>,
    pub ic: Vec<(IcTarget, f64)>,
}

impl Netlist {
    pub fn element(&self, name: &str) -> Option<&Element> {
        self.elements.iter().find(|e| e.name == name)
    }

    /// Canonical text form; `parse_netlist(nl.to_text())` reproduces `nl`
    /// up to line numbers.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for e in &self.elements {
            let _ = write!(s, "{} {} {} ", e.name, e.pos, e.neg);
            let _ = match &e.kind {
                ElementKind::Resistor(v) | ElementKind::Capacitor(v) | ElementKind::Inductor(v) => writeln!(s, "{v:e}"),
                ElementKind::VoltageSource(w) | ElementKind::CurrentSource(w) => writeln!(s, "{w}"),
                ElementKind::FieldPort { kind, model, column } => writeln!(s, "{kind} {model} {column}"),
            };
        }
        if let Some((tau, tend)) = self.tran {
            let _ = writeln!(s, ".tran {tau:e} {tend:e}");
        }
        if let Some(m) = self.method {
            let _ = writeln!(s, ".method {m}");
        }
        if !self.ic.is_empty() {
            s.push_str(".ic");
            for (t, v) in &self.ic {
                let _ = write!(s, " {t} {v:e}");
            }
            s.push('\n');
        }
        s
    }

    /// Field ports in netlist order.
    pub fn field_ports(&self) -> impl Iterator<Item = &Element> {
        self.elements.iter().filter(|e| matches!(e.kind, ElementKind::FieldPort { .. }))
    }
}

impl fmt::Display for Netlist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// Whitespace-separated tokens with 1-based character columns.
fn tokens(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    let mut col = 0;
    let mut start_col = 0;
    for (b, ch) in line.char_indices() {
        col += 1;
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push((start_col, &line[s..b]));
            }
        } else if start.is_none() {
            start = Some(b);
            start_col = col;
        }
    }
    if let Some(s) = start {
        out.push((start_col, &line[s..]));
    }
    out
}

/// A real number with an optional SI suffix.
pub fn parse_value(tok: &str) -> Option<f64> {
    let plain = |s: &str| -> Option<f64> {
        // Rust also accepts "inf" and "nan"; the grammar does not.
        if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit() || b"+-.eE".contains(&b)) {
            return None;
        }
        s.parse::<f64>().ok().filter(|v| v.is_finite())
    };
    if let Some(v) = plain(tok) {
        return Some(v);
    }
    let last = tok.chars().last()?;
    let exp = match last {
        'p' => -12,
        'n' => -9,
        'u' => -6,
        'm' => -3,
        'k' => 3,
        'M' => 6,
        'G' => 9,
        _ => return None,
    };
    let mantissa = &tok[..tok.len() - 1];
    if mantissa.contains(['e', 'E']) {
        return None;
    }
    plain(mantissa)?;
    // Decimal exponent keeps "100u" exactly equal to 1e-4.
    plain(&format!("{mantissa}e{exp}"))
}

struct Line<'a> {
    no: usize,
    toks: Vec<(usize, &'a str)>,
    /// Column just past the end of the line, for "missing field" errors.
    end: usize,
}

impl<'a> Line<'a> {
    fn err(&self, col: usize, msg: impl Into<String>) -> Error {
        Error::parse(msg, self.no, col)
    }

    fn get(&self, k: usize, what: &str) -> Result<(usize, &'a str)> {
        self.toks.get(k).copied().ok_or_else(|| self.err(self.end, format!("missing {what}")))
    }

    fn value(&self, k: usize, what: &str) -> Result<f64> {
        let (c, t) = self.get(k, what)?;
        parse_value(t).ok_or_else(|| self.err(c, format!("malformed number '{t}' for {what}")))
    }

    fn no_more(&self, k: usize) -> Result<()> {
        match self.toks.get(k) {
            Some((c, t)) => Err(self.err(*c, format!("unexpected token '{t}'"))),
            None => Ok(()),
        }
    }
}

fn parse_waveform(l: &Line, k: usize) -> Result<Waveform> {
    let (c, t) = l.get(k, "source value")?;
    match t.to_ascii_uppercase().as_str() {
        "DC" => {
            let v = l.value(k + 1, "DC value")?;
            l.no_more(k + 2)?;
            Ok(Waveform::Constant(v))
        }
        "SIN" => {
            let offset = l.value(k + 1, "SIN offset")?;
            let amplitude = l.value(k + 2, "SIN amplitude")?;
            let freq = l.value(k + 3, "SIN frequency")?;
            let phase = if l.toks.len() > k + 4 { l.value(k + 4, "SIN phase")? } else { 0.0 };
            l.no_more(k + 5)?;
            if freq < 0.0 {
                return Err(l.err(l.toks[k + 3].0, "SIN frequency must be non-negative"));
            }
            Ok(Waveform::Sin {
                offset,
                amplitude,
                freq,
                phase,
            })
        }
        _ => match parse_value(t) {
            Some(v) => {
                l.no_more(k + 1)?;
                Ok(Waveform::Constant(v))
            }
            None => Err(l.err(c, format!("malformed source value '{t}'"))),
        },
    }
}

fn parse_node(l: &Line, k: usize) -> Result<String> {
    let (c, t) = l.get(k, "node")?;
    if t.starts_with('.') || t.contains(['(', ')', '=', ',']) {
        return Err(l.err(c, format!("invalid node name '{t}'")));
    }
    Ok(t.to_string())
}

fn parse_ic_target(l: &Line, c: usize, t: &str) -> Result<IcTarget> {
    let bad = || l.err(c, format!("malformed initial-condition target '{t}'"));
    if t.len() < 4 || !t.ends_with(')') || t.as_bytes()[1] != b'(' {
        return Err(bad());
    }
    let inner = &t[2..t.len() - 1];
    if inner.is_empty() || inner.contains(['(', ')']) {
        return Err(bad());
    }
    match t.as_bytes()[0].to_ascii_uppercase() {
        b'V' => Ok(IcTarget::Potential(inner.to_string())),
        b'I' => Ok(IcTarget::Current(inner.to_string())),
        _ => Err(bad()),
    }
}

/// Parses a netlist. Every error carries the 1-based line and column.
pub fn parse_netlist(text: &str) -> Result<Netlist> {
    let mut nl = Netlist::default();
    let mut names: HashMap<String, usize> = HashMap::new();
    let mut node_set: HashSet<String> = HashSet::new();
    let mut has_ground = false;
    let mut ic_lines: Vec<(usize, usize)> = Vec::new();
    let mut last_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        last_line = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        let toks = tokens(content);
        if toks.is_empty() {
            continue;
        }
        let l = Line {
            no: idx + 1,
            end: content.chars().count() + 1,
            toks,
        };
        let (c0, head) = l.toks[0];
        if let Some(dir) = head.strip_prefix('.') {
            match dir.to_ascii_lowercase().as_str() {
                "tran" => {
                    if nl.tran.is_some() {
                        return Err(l.err(c0, "duplicate .tran directive"));
                    }
                    let tau = l.value(1, "time step")?;
                    let tend = l.value(2, "end time")?;
                    l.no_more(3)?;
                    if !(tau > 0.0) {
                        return Err(l.err(l.toks[1].0, "time step must be positive"));
                    }
                    if !(tend > 0.0) {
                        return Err(l.err(l.toks[2].0, "end time must be positive"));
                    }
                    nl.tran = Some((tau, tend));
                }
                "method" => {
                    if nl.method.is_some() {
                        return Err(l.err(c0, "duplicate .method directive"));
                    }
                    let (c, t) = l.get(1, "method tag")?;
                    nl.method = Some(t.parse().map_err(|_| l.err(c, format!("unknown method '{t}'")))?);
                    l.no_more(2)?;
                }
                "ic" => {
                    if l.toks.len() < 3 || l.toks.len() % 2 == 0 {
                        return Err(l.err(l.end, "expected pairs of 'V(node) value' or 'I(element) value'"));
                    }
                    for k in (1..l.toks.len()).step_by(2) {
                        let (c, t) = l.toks[k];
                        let target = parse_ic_target(&l, c, t)?;
                        if nl.ic.iter().any(|(x, _)| *x == target) {
                            return Err(l.err(c, format!("duplicate initial condition for {target}")));
                        }
                        let v = l.value(k + 1, "initial value")?;
                        nl.ic.push((target, v));
                        ic_lines.push((l.no, c));
                    }
                }
                "end" => {
                    l.no_more(1)?;
                    break;
                }
                _ => return Err(l.err(c0, format!("unknown directive '{head}'"))),
            }
            continue;
        }

        let letter = head.chars().next().expect("non-empty token").to_ascii_uppercase();
        match letter {
            'R' | 'C' | 'L' | 'V' | 'I' | 'F' => {}
            'E' | 'G' | 'H' | 'K' => {
                return Err(l.err(c0, format!("controlled sources and couplings are not supported ('{letter}')")))
            }
            _ => return Err(l.err(c0, format!("unknown card '{}'", head.chars().next().unwrap()))),
        }
        if head.contains(['(', ')', '=']) {
            return Err(l.err(c0, format!("invalid element name '{head}'")));
        }
        if let Some(prev) = names.get(head) {
            return Err(l.err(c0, format!("duplicate element name '{head}' (first defined at line {prev})")));
        }
        let pos = parse_node(&l, 1)?;
        let neg = parse_node(&l, 2)?;
        if pos == neg {
            return Err(l.err(l.toks[2].0, format!("both terminals on node '{pos}'")));
        }
        let positive = |k: usize, what: &str| -> Result<f64> {
            let v = l.value(k, what)?;
            l.no_more(k + 1)?;
            if !(v > 0.0) {
                return Err(l.err(l.toks[k].0, format!("{what} must be positive")));
            }
            Ok(v)
        };
        let kind = match letter {
            'R' => ElementKind::Resistor(positive(3, "resistance")?),
            'C' => ElementKind::Capacitor(positive(3, "capacitance")?),
            'L' => ElementKind::Inductor(positive(3, "inductance")?),
            'V' => ElementKind::VoltageSource(parse_waveform(&l, 3)?),
            'I' => ElementKind::CurrentSource(parse_waveform(&l, 3)?),
            _ => {
                let (c, t) = l.get(3, "conductor kind")?;
                let kind: ConductorKind =
                    t.parse().map_err(|_| l.err(c, format!("unknown conductor kind '{t}'")))?;
                let (_, model) = l.get(4, "model name")?;
                let column = match l.toks.get(5) {
                    Some(&(c, t)) => t.parse::<usize>().map_err(|_| l.err(c, format!("malformed column index '{t}'")))?,
                    None => 0,
                };
                l.no_more(6)?;
                ElementKind::FieldPort {
                    kind,
                    model: model.to_string(),
                    column,
                }
            }
        };
        for n in [&pos, &neg] {
            if n == GROUND {
                has_ground = true;
            } else if node_set.insert(n.clone()) {
                nl.nodes.push(n.clone());
            }
        }
        names.insert(head.to_string(), l.no);
        nl.elements.push(Element {
            name: head.to_string(),
            pos,
            neg,
            kind,
            line: l.no,
        });
    }

    for ((target, _), &(line, col)) in nl.ic.iter().zip(&ic_lines) {
        let ok = match target {
            IcTarget::Potential(n) => node_set.contains(n) || n == GROUND,
            IcTarget::Current(n) => nl.element(n).is_some_and(|e| {
                matches!(
                    e.kind,
                    ElementKind::Inductor(_) | ElementKind::VoltageSource(_) | ElementKind::FieldPort { .. }
                )
            }),
        };
        if !ok {
            return Err(Error::parse(
                format!("initial condition {target} names no node or current-carrying element"),
                line,
                col,
            ));
        }
    }
    if !has_ground {
        return Err(Error::parse("netlist has no ground node '0'", last_line.max(1), 1));
    }
    Ok(nl)
}

#[derive(Clone, Debug, PartialEq)]
pub enum BranchSource {
    Independent(Waveform),
    Field {
        kind: ConductorKind,
        model: String,
        column: usize,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Branch {
    pub name: String,
    pub source: BranchSource,
}

/// Incidence matrices with the ground row removed and diagonal element
/// matrices. Current-like columns (`A_I`) hold the stranded and foil ports
/// first, then independent current sources; voltage-like columns (`A_V`)
/// hold solid ports first, then independent voltage sources.
#[derive(Clone, Debug, PartialEq)]
pub struct IncidenceSet {
    pub nodes: Vec<String>,
    pub a_c: SparseMat,
    pub a_r: SparseMat,
    pub a_l: SparseMat,
    pub a_v: SparseMat,
    pub a_i: SparseMat,
    pub c: Vec<f64>,
    /// Conductances `1/R`.
    pub g: Vec<f64>,
    pub l: Vec<f64>,
    pub c_names: Vec<String>,
    pub r_names: Vec<String>,
    pub l_names: Vec<String>,
    pub i_branches: Vec<Branch>,
    pub v_branches: Vec<Branch>,
}

impl IncidenceSet {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn node_index(&self, name: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n == name)
    }

    fn n_ports(branches: &[Branch]) -> usize {
        branches.iter().take_while(|b| matches!(b.source, BranchSource::Field { .. })).count()
    }

    /// Number of leading field-port columns in `A_I`.
    pub fn n_current_ports(&self) -> usize {
        IncidenceSet::n_ports(&self.i_branches)
    }

    /// Number of leading field-port columns in `A_V`.
    pub fn n_voltage_ports(&self) -> usize {
        IncidenceSet::n_ports(&self.v_branches)
    }

    /// Waveforms of the independent sources, current sources first.
    pub fn source_signal(&self) -> InputSignal {
        InputSignal::new(
            self.i_branches
                .iter()
                .chain(&self.v_branches)
                .filter_map(|b| match &b.source {
                    BranchSource::Independent(w) => Some(w.clone()),
                    BranchSource::Field { .. } => None,
                })
                .collect(),
        )
    }

    /// Waveforms for every circuit port; field ports get zero input.
    pub fn full_signal(&self) -> InputSignal {
        InputSignal::new(
            self.i_branches
                .iter()
                .chain(&self.v_branches)
                .map(|b| match &b.source {
                    BranchSource::Independent(w) => w.clone(),
                    BranchSource::Field { .. } => Waveform::Constant(0.0),
                })
                .collect(),
        )
    }
}

fn incidence(n: usize, cols: &[(usize, Option<usize>, Option<usize>)]) -> SparseMat {
    SparseMat::from_triplets(
        n,
        cols.len(),
        cols.iter().enumerate().flat_map(|(j, &(_, p, m))| {
            p.map(|p| (p, j, 1.0)).into_iter().chain(m.map(|m| (m, j, -1.0)))
        }),
    )
}

/// Builds the reduced incidence matrices. Fails if some node has no path
/// to ground.
pub fn build_incidence(nl: &Netlist) -> Result<IncidenceSet> {
    let index: HashMap<&str, usize> = nl.nodes.iter().enumerate().map(|(k, n)| (n.as_str(), k)).collect();
    let row = |name: &str| -> Result<Option<usize>> {
        if name == GROUND {
            return Ok(None);
        }
        index
            .get(name)
            .copied()
            .map(Some)
            .ok_or_else(|| Error::Model(format!("element references undeclared node '{name}'")))
    };

    // Connectivity to ground through any element.
    let n = nl.nodes.len();
    let mut adj = vec![Vec::new(); n + 1];
    for e in &nl.elements {
        let a = row(&e.pos)?.unwrap_or(n);
        let b = row(&e.neg)?.unwrap_or(n);
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut seen = vec![false; n + 1];
    let mut queue = VecDeque::from([n]);
    seen[n] = true;
    while let Some(v) = queue.pop_front() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    if let Some(k) = (0..n).find(|&k| !seen[k]) {
        return Err(Error::Model(format!("node '{}' has no path to ground", nl.nodes[k])));
    }

    let mut cc = Vec::new();
    let mut rr = Vec::new();
    let mut ll = Vec::new();
    let (mut c, mut g, mut l) = (Vec::new(), Vec::new(), Vec::new());
    let (mut c_names, mut r_names, mut l_names) = (Vec::new(), Vec::new(), Vec::new());
    let (mut i_ports, mut i_src, mut v_ports, mut v_src) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (k, e) in nl.elements.iter().enumerate() {
        let col = (k, row(&e.pos)?, row(&e.neg)?);
        let branch = |source| (col, Branch { name: e.name.clone(), source });
        match &e.kind {
            ElementKind::Resistor(r) => {
                rr.push(col);
                g.push(1.0 / r);
                r_names.push(e.name.clone());
            }
            ElementKind::Capacitor(v) => {
                cc.push(col);
                c.push(*v);
                c_names.push(e.name.clone());
            }
            ElementKind::Inductor(v) => {
                ll.push(col);
                l.push(*v);
                l_names.push(e.name.clone());
            }
            ElementKind::VoltageSource(w) => v_src.push(branch(BranchSource::Independent(w.clone()))),
            ElementKind::CurrentSource(w) => i_src.push(branch(BranchSource::Independent(w.clone()))),
            ElementKind::FieldPort { kind, model, column } => {
                let b = branch(BranchSource::Field {
                    kind: *kind,
                    model: model.clone(),
                    column: *column,
                });
                match kind {
                    ConductorKind::Solid => v_ports.push(b),
                    _ => i_ports.push(b),
                }
            }
        }
    }
    i_ports.extend(i_src);
    v_ports.extend(v_src);
    let (icols, i_branches): (Vec<_>, Vec<_>) = i_ports.into_iter().unzip();
    let (vcols, v_branches): (Vec<_>, Vec<_>) = v_ports.into_iter().unzip();
    Ok(IncidenceSet {
        nodes: nl.nodes.clone(),
        a_c: incidence(n, &cc),
        a_r: incidence(n, &rr),
        a_l: incidence(n, &ll),
        a_v: incidence(n, &vcols),
        a_i: incidence(n, &icols),
        c,
        g,
        l,
        c_names,
        r_names,
        l_names,
        i_branches,
        v_branches,
    })
}

/// `z2 = [φ; j_L]`, `z3 = j_V`, `u = [i; v]`, with `y = [−A_Iᵀφ; −j_V]`.
pub fn mna_system(inc: &IncidenceSet) -> Result<EnergySystem> {
    let n = inc.n_nodes();
    let (bl, bv, bi) = (inc.l.len(), inc.v_branches.len(), inc.i_branches.len());
    let cap = inc
        .a_c
        .matmul(&SparseMat::from_diag(&inc.c))
        .matmul(&inc.a_c.transpose());
    let e = SparseMat::block_diag(&[&cap, &SparseMat::from_diag(&inc.l)]);
    let sizes = [n, bl, bv];
    let j = SparseMat::block(
        &[
            vec![None, Some(&inc.a_l.scale(-1.0)), Some(&inc.a_v.scale(-1.0))],
            vec![Some(&inc.a_l.transpose()), None, None],
            vec![Some(&inc.a_v.transpose()), None, None],
        ],
        &sizes,
        &sizes,
    );
    let cond = inc
        .a_r
        .matmul(&SparseMat::from_diag(&inc.g))
        .matmul(&inc.a_r.transpose());
    let r = SparseMat::block_diag(&[&cond, &SparseMat::zeros(bl + bv, bl + bv)]);
    let b = SparseMat::block(
        &[
            vec![Some(&inc.a_i), None],
            vec![None, None],
            vec![None, Some(&SparseMat::identity(bv))],
        ],
        &sizes,
        &[bi, bv],
    )
    .scale(-1.0);
    let sys = EnergySystem::new(
        Partition::new(0, n + bl, bv, bi + bv),
        Blocks {
            m2: e.clone(),
            e,
            j,
            r,
            b,
            m1: SparseMat::zeros(0, 0),
            s: SparseMat::identity(n + bl),
        },
    )?;
    let states = inc
        .nodes
        .iter()
        .map(|v| format!("V({v})"))
        .chain(inc.l_names.iter().chain(inc.v_branches.iter().map(|b| &b.name)).map(|x| format!("I({x})")))
        .collect();
    let ports = inc
        .i_branches
        .iter()
        .map(|b| format!("I({})", b.name))
        .chain(inc.v_branches.iter().map(|b| format!("V({})", b.name)))
        .collect();
    sys.with_labels(states, ports)
}
