//! Line-per-entry serialization of rule tables.
//!
//! A rule file is a header declaring the signature, radius, bound and name,
//! followed by one line per table entry:
//!
//! ```text
//! DISK <graph> NB <bits> -> OUT <graph> NAMES <set>.. ADDR <tape>.. INH <marks>
//! ```
//!
//! `DISK` is the observed neighborhood, string-encoded.  `NB` summarizes the
//! center vertex's own edges: one `0` per empty port, or a `1` followed by
//! the far port index in `⌈log₂ d⌉` bits.  `OUT` is the produced subgraph,
//! ring-encoded and then string-encoded.  The remaining fields carry one
//! token per output vertex, in the canonical vertex order of the decoded
//! output: its name (a `{...}` set of `(path).suffix` atoms), a travel tape
//! over `↑ → ↓ |` leading from the center to the vertex the lex-least
//! non-home atom names (`-` when the name is all home atoms), and a mark
//! telling whether the vertex inherits from the center (`1` when some atom
//! has the empty path).  `NB`, `ADDR` and `INH` are recomputed and checked
//! on decode, so a file cannot smuggle inconsistent summaries.
//!
//! Edge labels ride inside `(i,j:label)` pairs of the graph strings, an
//! extension the plain-text shape of the other fields does not need.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::graph::{CayleyGraph, Path, PathStep, Port, Signature, Suffix};
use crate::rules::{validate_rule, ImageGraph, LocalRule, RuleError};

use super::ring::{ring_decode, ring_encode, ring_signature};
use super::string::{field, header_line, parse_header, string_decode, string_encode};
use super::CodecError;

// ---------------------------------------------------------------------------
// Derived per-entry fields
// ---------------------------------------------------------------------------

/// Far-port field width of the neighborhood bit string.
fn far_bits(d: u8) -> u32 {
    if d <= 1 {
        0
    } else {
        (d as u32 - 1).ilog2() + 1
    }
}

/// The center vertex's own edges, one `0` or `1<far port>` group per port.
fn neighborhood_bits(disk: &CayleyGraph) -> String {
    let d = disk.degree();
    let width = far_bits(d);
    let mut s = String::new();
    for p in 0..d {
        match disk.across(0, p) {
            None => s.push('0'),
            Some((_, q)) => {
                s.push('1');
                for b in (0..width).rev() {
                    s.push(if q >> b & 1 == 1 { '1' } else { '0' });
                }
            }
        }
    }
    s
}

fn atom_string(path: &Path, suffix: Suffix) -> String {
    let mut s = String::new();
    if path.is_empty() {
        s.push('e');
    } else {
        for st in &path.0 {
            s.push_str(&format!("({},{})", st.out + 1, st.inp + 1));
        }
    }
    s.push('.');
    s.push_str(&suffix.to_string());
    s
}

fn name_string(atoms: &BTreeSet<(Path, Suffix)>) -> String {
    let parts: Vec<String> = atoms.iter().map(|(p, z)| atom_string(p, *z)).collect();
    format!("{{{}}}", parts.join("+"))
}

/// Travel tape of one output vertex: for the lex-least atom that names a
/// proper neighbor, one `↑` per step followed by the step's ports in unary,
/// then one `|` per suffix level.  `-` when every atom names the center.
fn tape_string(atoms: &BTreeSet<(Path, Suffix)>) -> String {
    let Some((path, z)) = atoms.iter().find(|(p, _)| !p.is_empty()) else {
        return "-".to_string();
    };
    let mut s = String::new();
    for st in &path.0 {
        s.push('\u{2191}');
        for _ in 0..=st.out {
            s.push('\u{2192}');
        }
        for _ in 0..=st.inp {
            s.push('\u{2193}');
        }
    }
    for _ in 0..*z {
        s.push('|');
    }
    s
}

fn inheritance_mark(atoms: &BTreeSet<(Path, Suffix)>) -> char {
    if atoms.iter().any(|(p, _)| p.is_empty()) {
        '1'
    } else {
        '0'
    }
}

fn parse_name(tok: &str, d: u8, pos: usize) -> Result<BTreeSet<(Path, Suffix)>, CodecError> {
    let bad = |expected: &str| CodecError::Parse { pos, expected: expected.into() };
    let inner = tok
        .strip_prefix('{')
        .and_then(|t| t.strip_suffix('}'))
        .ok_or_else(|| bad("a {...} name set"))?;
    let mut atoms = BTreeSet::new();
    for part in inner.split('+') {
        let (head, suffix) = part.rsplit_once('.').ok_or_else(|| bad("an atom '<path>.<suffix>'"))?;
        let suffix: Suffix =
            suffix.parse().map_err(|_| bad("a decimal suffix"))?;
        let path = if head == "e" {
            Path::empty()
        } else {
            let mut steps = Vec::new();
            let mut rest = head;
            while !rest.is_empty() {
                let body = rest
                    .strip_prefix('(')
                    .ok_or_else(|| bad("a '(i,j)' path step"))?;
                let (pair, tail) = body.split_once(')').ok_or_else(|| bad("a closing ')'"))?;
                let (i, j) = pair.split_once(',').ok_or_else(|| bad("'i,j' inside a step"))?;
                let (i, j): (usize, usize) = (
                    i.parse().map_err(|_| bad("a port number"))?,
                    j.parse().map_err(|_| bad("a port number"))?,
                );
                if i == 0 || i > d as usize || j == 0 || j > d as usize {
                    return Err(CodecError::Semantic {
                        pos,
                        what: format!("port outside 1..={d} in an atom"),
                    });
                }
                steps.push(PathStep::new((i - 1) as Port, (j - 1) as Port));
                rest = tail;
            }
            if steps.is_empty() {
                return Err(bad("'e' or at least one path step"));
            }
            Path(steps)
        };
        atoms.insert((path, suffix));
    }
    Ok(atoms)
}

// ---------------------------------------------------------------------------
// Encoding
// ---------------------------------------------------------------------------

/// Reads an image as a pointed graph rooted at its origin vertex.  Returns
/// the graph and, per canonical vertex, the original image index.
fn image_as_graph(
    image: &ImageGraph,
    sig: &Arc<Signature>,
) -> Result<(CayleyGraph, Vec<usize>), CodecError> {
    let root = image
        .origin_vertex()
        .ok_or_else(|| CodecError::InvalidRule("an output has no origin vertex".into()))?;
    let d = sig.degree() as usize;
    let mut adj = vec![vec![None; d]; image.vertex_count()];
    let labels: Vec<_> = image.vertices().iter().map(|v| v.label).collect();
    let mut elabels = Vec::new();
    for &(a, pa, b, pb, l) in image.edges() {
        adj[a][pa as usize] = Some((b, pb));
        adj[b][pb as usize] = Some((a, pa));
        if let Some(l) = l {
            elabels.push(((a, pa), l));
        }
    }
    CayleyGraph::assemble_canonical(sig, root, &adj, &labels, &elabels)
        .ok_or_else(|| CodecError::InvalidRule("an output subgraph is not connected".into()))
}

/// Serializes a table-backed rule.  Computation-backed rules have no table
/// to write and are rejected.
pub fn rule_encode(f: &LocalRule) -> Result<String, CodecError> {
    let table = f
        .table()
        .ok_or_else(|| CodecError::InvalidRule("computed rules cannot be serialized".into()))?;
    let sig = f.sig();
    let extra = format!("radius={} bound={} name={}", f.radius(), f.bound(), f.name());
    let mut out = header_line("cgd-rule", sig, &extra);
    out.push('\n');
    for (disk, image) in table {
        let (graph, order) = image_as_graph(image, sig)?;
        let names: Vec<_> =
            order.iter().map(|&i| &image.vertices()[i].atoms).collect();
        out.push_str(&format!(
            "DISK {} NB {} -> OUT {} NAMES {} ADDR {} INH {}\n",
            string_encode(disk),
            neighborhood_bits(disk),
            string_encode(&ring_encode(&graph)),
            names.iter().map(|a| name_string(a)).collect::<Vec<_>>().join(" "),
            names.iter().map(|a| tape_string(a)).collect::<Vec<_>>().join(" "),
            names.iter().map(|a| inheritance_mark(a)).collect::<String>(),
        ));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Decoding
// ---------------------------------------------------------------------------

struct Line<'a> {
    toks: std::iter::Peekable<std::str::SplitWhitespace<'a>>,
    pos: usize,
}

impl<'a> Line<'a> {
    fn keyword(&mut self, kw: &str) -> Result<(), CodecError> {
        if self.toks.next() != Some(kw) {
            return Err(CodecError::Parse { pos: self.pos, expected: format!("keyword '{kw}'") });
        }
        Ok(())
    }

    fn token(&mut self, what: &str) -> Result<&'a str, CodecError> {
        self.toks
            .next()
            .ok_or_else(|| CodecError::Parse { pos: self.pos, expected: what.into() })
    }

    /// Tokens up to (not consuming) the next occurrence of `stop`.
    fn until(&mut self, stop: &str) -> Vec<&'a str> {
        let mut out = Vec::new();
        while let Some(&t) = self.toks.peek() {
            if t == stop {
                break;
            }
            out.push(t);
            self.toks.next();
        }
        out
    }
}

/// Parses a rule file.  The reconstructed rule is checked structurally and,
/// when the neighborhood space is small enough to enumerate, revalidated;
/// a table that fails validation is rejected as [`CodecError::InvalidRule`].
pub fn rule_decode(text: &str) -> Result<LocalRule, CodecError> {
    let mut lines = text.lines();
    let header =
        lines.next().ok_or(CodecError::Parse { pos: 0, expected: "a header line".into() })?;
    let (sig, rest) = parse_header(header, "cgd-rule")?;
    let mut rest = rest.into_iter();
    let radius: u8 = field(rest.next(), "radius", 0)?
        .parse()
        .map_err(|_| CodecError::Parse { pos: 0, expected: "radius=<number>".into() })?;
    let bound: usize = field(rest.next(), "bound", 0)?
        .parse()
        .map_err(|_| CodecError::Parse { pos: 0, expected: "bound=<number>".into() })?;
    let name = field(rest.next(), "name", 0)?.to_string();
    let ring_sig = ring_signature(&sig);

    let mut table: BTreeMap<CayleyGraph, ImageGraph> = BTreeMap::new();
    let mut pos = header.len() + 1;
    for raw in lines {
        let line_pos = pos;
        pos += raw.len() + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let mut line = Line { toks: raw.split_whitespace().peekable(), pos: line_pos };

        line.keyword("DISK")?;
        let disk = string_decode(line.token("a disk graph")?, &sig)
            .map_err(|e| at_line(e, line_pos))?;
        line.keyword("NB")?;
        let bits = line.token("neighborhood bits")?;
        line.keyword("->")?;
        line.keyword("OUT")?;
        let ring = string_decode(line.token("an output graph")?, &ring_sig)
            .map_err(|e| at_line(e, line_pos))?;
        let graph = ring_decode(&ring, &sig)?;
        line.keyword("NAMES")?;
        let names: Vec<_> = line.until("ADDR");
        line.keyword("ADDR")?;
        let tapes: Vec<_> = line.until("INH");
        line.keyword("INH")?;
        let marks = line.token("inheritance marks")?;
        if let Some(extra) = line.toks.next() {
            return Err(CodecError::Parse {
                pos: line_pos,
                expected: format!("end of line, not '{extra}'"),
            });
        }

        if bits != neighborhood_bits(&disk) {
            return Err(CodecError::InvalidRule(
                "neighborhood bits do not match the disk".into(),
            ));
        }
        let n = graph.vertex_count();
        if names.len() != n || tapes.len() != n || marks.chars().count() != n {
            return Err(CodecError::InvalidRule(format!(
                "expected {n} names, tapes and marks for {n} output vertices"
            )));
        }
        let mut image = ImageGraph::new();
        for (i, tok) in names.iter().enumerate() {
            let atoms = parse_name(tok, sig.degree(), line_pos)?;
            if tapes[i] != tape_string(&atoms) {
                return Err(CodecError::InvalidRule(format!(
                    "travel tape {i} does not match its name"
                )));
            }
            let mark = marks.chars().nth(i).expect("length checked");
            if mark != inheritance_mark(&atoms) {
                return Err(CodecError::InvalidRule(format!(
                    "inheritance mark {i} does not match its name"
                )));
            }
            image.add_vertex(atoms, graph.vlabel(i as u32));
        }
        for (v, p, w, q, l) in graph.edges() {
            image.add_edge(v as usize, p, w as usize, q, l);
        }
        if table.insert(disk, image).is_some() {
            return Err(CodecError::InvalidRule("two entries for one disk".into()));
        }
    }

    let rule = LocalRule::from_table(name, sig, radius, bound, table)?;
    match validate_rule(&rule) {
        Ok(report) if report.all_pass() => Ok(rule),
        Ok(report) => Err(CodecError::InvalidRule(report.to_string())),
        // Partial tables and neighborhood spaces too large to enumerate
        // cannot be revalidated here; structural checks already passed.
        Err(RuleError::BudgetExceeded(_) | RuleError::MissingDiskEntry(_)) => Ok(rule),
        Err(e) => Err(CodecError::Rule(e)),
    }
}

/// Shifts a body-relative parse position to the entry's line.
fn at_line(e: CodecError, line_pos: usize) -> CodecError {
    match e {
        CodecError::Parse { pos, expected } => {
            CodecError::Parse { pos: line_pos + pos, expected }
        }
        CodecError::Semantic { pos, what } => CodecError::Semantic { pos: line_pos + pos, what },
        other => other,
    }
}

/// Rule equality as files see it: same name, signature, radius, bound and
/// table, with output vertex order ignored (names carry vertex identity).
pub fn rules_equivalent(a: &LocalRule, b: &LocalRule) -> bool {
    let (Some(ta), Some(tb)) = (a.table(), b.table()) else { return false };
    a.name() == b.name()
        && Signature::same(a.sig(), b.sig()).is_ok()
        && a.radius() == b.radius()
        && a.bound() == b.bound()
        && ta.len() == tb.len()
        && ta
            .iter()
            .zip(tb.iter())
            .all(|((da, ia), (db, ib))| da == db && ia.equivalent(ib))
}
