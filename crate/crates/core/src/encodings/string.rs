//! Depth-first string linearization of pointed graphs.
//!
//! The encoder walks the graph depth-first from the pointer, trying own
//! ports in ascending order.  Each visited vertex contributes one word:
//!
//! ```text
//! $ <label> (i,j)||..  ;  (s1,t1)(s2,t2)..
//! ```
//!
//! After the label come the edges back to already-visited vertices, one
//! `(i,j)` pair each, followed by one `|` per climb needed to reach the far
//! endpoint in the search tree (a loop climbs zero times).  After the `;`
//! come the port pairs walked to the next visited vertex: zero or more climb
//! pairs retracing tree edges upward, then a final pair that creates the new
//! vertex.  The last word's path section is empty.
//!
//! Every non-tree edge joins a vertex to one of its ancestors (a depth-first
//! search of an undirected graph has no cross edges), so recording such
//! edges at the deeper endpoint with a climb count is always possible and
//! unambiguous.  The decoder replays the same walk, which makes the string
//! injective on pointed graphs: `decode ∘ encode` is the identity.

use std::sync::Arc;

use crate::graph::{CayleyGraph, LabelId, PathStep, Port, Signature, VertexId};

use super::CodecError;

/// The label written for unlabeled vertices.
pub(crate) const BLANK: &str = "\u{b7}";

// ---------------------------------------------------------------------------
// Encoding
// ---------------------------------------------------------------------------

fn push_pair(out: &mut String, sig: &Signature, s: PathStep, label: Option<LabelId>) {
    out.push('(');
    out.push_str(&(s.out + 1).to_string());
    out.push(',');
    out.push_str(&(s.inp + 1).to_string());
    if let Some(l) = label {
        out.push(':');
        out.push_str(sig.elabel_name(l));
    }
    out.push(')');
}

/// Writes the `$σ<back edges>;` head of one word.
fn push_word_head(
    out: &mut String,
    x: &CayleyGraph,
    v: VertexId,
    arrival: Option<PathStep>,
    visited: &[bool],
    depth: &[usize],
) {
    let sig = x.sig();
    out.push('$');
    match x.vlabel(v) {
        Some(l) => out.push_str(sig.vlabel_name(l)),
        None => out.push_str(BLANK),
    }
    for p in 0..x.degree() {
        if arrival.map(|s| s.inp) == Some(p) {
            continue; // the tree edge just walked to get here
        }
        let Some((w, q)) = x.across(v, p) else { continue };
        if w == v {
            // A loop: record once, at its lesser port, with no climbs.
            if p < q {
                push_pair(out, sig, PathStep::new(p, q), x.elabel_at(v, p));
            }
        } else if visited[w as usize] {
            // Any other visited far endpoint is an ancestor of `v`.
            push_pair(out, sig, PathStep::new(p, q), x.elabel_at(v, p));
            for _ in 0..depth[v as usize] - depth[w as usize] {
                out.push('|');
            }
        }
    }
    out.push(';');
}

/// Serializes a graph as a `$`-separated word sequence.  See the module
/// docs for the exact shape.
pub fn string_encode(x: &CayleyGraph) -> String {
    let d = x.degree();
    let n = x.vertex_count();
    let mut out = String::new();
    let mut visited = vec![false; n];
    let mut depth = vec![0usize; n];
    // Scan stack: vertex, next own port to try, step that discovered it.
    let mut stack: Vec<(VertexId, Port, Option<PathStep>)> = Vec::new();
    // Climb pairs owed to the word in progress, flushed on the next descent.
    // Climbs at the very end of the search are not part of any word.
    let mut pending: Vec<PathStep> = Vec::new();

    visited[0] = true;
    stack.push((0, 0, None));
    push_word_head(&mut out, x, 0, None, &visited, &depth);

    while let Some(&(v, p, arrival)) = stack.last() {
        if p >= d {
            stack.pop();
            if let Some(step) = arrival {
                pending.push(step.rev());
            }
            continue;
        }
        stack.last_mut().expect("nonempty").1 += 1;
        let Some((w, q)) = x.across(v, p) else { continue };
        if visited[w as usize] {
            continue;
        }
        for &c in &pending {
            push_pair(&mut out, x.sig(), c, None);
        }
        pending.clear();
        let step = PathStep::new(p, q);
        push_pair(&mut out, x.sig(), step, x.elabel_at(v, p));
        visited[w as usize] = true;
        depth[w as usize] = stack.len();
        stack.push((w, 0, Some(step)));
        push_word_head(&mut out, x, w, Some(step), &visited, &depth);
    }
    out
}

// ---------------------------------------------------------------------------
// Decoding
// ---------------------------------------------------------------------------

struct Cursor<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str) -> Self {
        Cursor { text, pos: 0 }
    }

    fn peek(&self) -> Option<char> {
        self.text[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), CodecError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.fail(format!("'{c}'")))
        }
    }

    fn fail(&self, expected: impl Into<String>) -> CodecError {
        CodecError::Parse { pos: self.pos, expected: expected.into() }
    }

    fn reject(&self, what: impl Into<String>) -> CodecError {
        CodecError::Semantic { pos: self.pos, what: what.into() }
    }

    /// Longest run of characters that are neither delimiters nor whitespace;
    /// how label tokens are read.
    fn token(&mut self) -> &'a str {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if matches!(c, '$' | '(' | ')' | ';' | '|' | ',' | ':') || c.is_whitespace() {
                break;
            }
            self.bump();
        }
        &self.text[start..self.pos]
    }

    fn number(&mut self) -> Result<usize, CodecError> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.bump();
        }
        if self.pos == start {
            return Err(self.fail("a decimal number"));
        }
        self.text[start..self.pos]
            .parse()
            .map_err(|_| self.fail("a smaller number"))
    }

    /// Parses `(i,j)` or `(i,j:label)`, returning 1-based ports.
    fn pair(&mut self, sig: &Signature) -> Result<(usize, usize, Option<LabelId>), CodecError> {
        self.expect('(')?;
        let i = self.number()?;
        self.expect(',')?;
        let j = self.number()?;
        let label = if self.eat(':') {
            let at = self.pos;
            let id = sig.elabel_id(self.token()).ok_or(CodecError::Parse {
                pos: at,
                expected: "a declared edge label".into(),
            })?;
            Some(id)
        } else {
            None
        };
        self.expect(')')?;
        Ok((i, j, label))
    }
}

/// Adjacency picture grown by the decoder, in visit order.
struct Draft {
    d: usize,
    adj: Vec<Vec<Option<(usize, Port)>>>,
    labels: Vec<Option<LabelId>>,
    elabels: Vec<((usize, Port), LabelId)>,
}

impl Draft {
    fn add_vertex(&mut self, label: Option<LabelId>) -> usize {
        self.adj.push(vec![None; self.d]);
        self.labels.push(label);
        self.adj.len() - 1
    }

    fn port(&self, cur: &Cursor, i: usize) -> Result<Port, CodecError> {
        if i == 0 || i > self.d {
            return Err(cur.reject(format!("port {i} outside 1..={}", self.d)));
        }
        Ok((i - 1) as Port)
    }

    fn add_edge(
        &mut self,
        cur: &Cursor,
        a: usize,
        pa: Port,
        b: usize,
        pb: Port,
        label: Option<LabelId>,
    ) -> Result<(), CodecError> {
        if self.adj[a][pa as usize].is_some() || (a, pa) == (b, pb) {
            return Err(cur.reject(format!("port {} of word {a} already used", pa + 1)));
        }
        if self.adj[b][pb as usize].is_some() {
            return Err(cur.reject(format!("port {} of word {b} already used", pb + 1)));
        }
        self.adj[a][pa as usize] = Some((b, pb));
        self.adj[b][pb as usize] = Some((a, pa));
        if let Some(l) = label {
            self.elabels.push(((a, pa), l));
        }
        Ok(())
    }
}

/// Parses a word sequence back into the pointed graph that produced it.
pub fn string_decode(s: &str, sig: &Arc<Signature>) -> Result<CayleyGraph, CodecError> {
    let mut cur = Cursor::new(s);
    let mut g = Draft { d: sig.degree() as usize, adj: Vec::new(), labels: Vec::new(), elabels: Vec::new() };
    // The tree walk from the root to the current vertex: (vertex, entering step).
    let mut spine: Vec<(usize, Option<PathStep>)> = Vec::new();
    // How the vertex of the word about to be read hangs off the spine.
    let mut attach: Option<(usize, Port, Port, Option<LabelId>)> = None;

    cur.expect('$')?;
    loop {
        let at = cur.pos;
        let label = match cur.token() {
            "" => return Err(CodecError::Parse { pos: at, expected: "a vertex label".into() }),
            BLANK => None,
            name => Some(sig.vlabel_id(name).ok_or(CodecError::Parse {
                pos: at,
                expected: "a declared vertex label".into(),
            })?),
        };
        let v = g.add_vertex(label);
        match attach.take() {
            Some((parent, pa, pb, lbl)) => {
                g.add_edge(&cur, parent, pa, v, pb, lbl)?;
                spine.push((v, Some(PathStep::new(pa, pb))));
            }
            None => spine.push((v, None)), // the root
        }

        // Back edges: pairs followed by climb bars.
        while cur.peek() == Some('(') {
            let (i, j, lbl) = cur.pair(sig)?;
            let mut k = 0usize;
            while cur.eat('|') {
                k += 1;
            }
            if k >= spine.len() {
                return Err(cur.reject("a climb past the root"));
            }
            let w = spine[spine.len() - 1 - k].0;
            let (pa, pb) = (g.port(&cur, i)?, g.port(&cur, j)?);
            g.add_edge(&cur, v, pa, w, pb, lbl)?;
        }
        cur.expect(';')?;

        // Path to the next word's vertex.  A pair trailed by climb bars here
        // is a back edge written after the `;`; the encoder never does that,
        // but the meaning is unambiguous, so it is honored rather than
        // rejected.
        let mut steps: Vec<(usize, usize, usize, Option<LabelId>)> = Vec::new();
        while cur.peek() == Some('(') {
            let at = cur.pos;
            let (i, j, lbl) = cur.pair(sig)?;
            let mut k = 0usize;
            while cur.eat('|') {
                k += 1;
            }
            if k > 0 {
                if k >= spine.len() {
                    return Err(cur.reject("a climb past the root"));
                }
                let w = spine[spine.len() - 1 - k].0;
                let (pa, pb) = (g.port(&cur, i)?, g.port(&cur, j)?);
                g.add_edge(&cur, v, pa, w, pb, lbl)?;
            } else {
                steps.push((at, i, j, lbl));
            }
        }
        match cur.peek() {
            None => {
                if let Some(&(at, ..)) = steps.first() {
                    return Err(CodecError::Parse {
                        pos: at,
                        expected: "no path after the final word".into(),
                    });
                }
                break;
            }
            Some('$') => {
                cur.bump();
                let Some((&(_, ci, cj, clbl), climbs)) = steps.split_last() else {
                    return Err(cur.fail("a path leading to the next word"));
                };
                for &(at, i, j, lbl) in climbs {
                    if lbl.is_some() {
                        return Err(CodecError::Parse {
                            pos: at,
                            expected: "no label on a climb step".into(),
                        });
                    }
                    if spine.len() < 2 {
                        return Err(CodecError::Semantic {
                            pos: at,
                            what: "a climb past the root".into(),
                        });
                    }
                    let (_, entered) = spine.pop().expect("checked length");
                    let retraces = entered
                        .is_some_and(|st| (st.inp as usize + 1, st.out as usize + 1) == (i, j));
                    if !retraces {
                        return Err(CodecError::Semantic {
                            pos: at,
                            what: "a climb step that does not retrace the tree".into(),
                        });
                    }
                }
                let &(top, _) = spine.last().expect("climbs leave at least the root");
                attach = Some((top, g.port(&cur, ci)?, g.port(&cur, cj)?, clbl));
            }
            Some(_) => return Err(cur.fail("'(', '$' or end of input")),
        }
    }

    let (x, _) = CayleyGraph::assemble_canonical(sig, 0, &g.adj, &g.labels, &g.elabels)
        .expect("decoded graphs are connected by construction");
    Ok(x)
}

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

/// Renders the one-line header declaring a signature.
pub(crate) fn header_line(kind: &str, sig: &Signature, extra: &str) -> String {
    let mut line = format!(
        "{kind} v1 ports={} vlabels={} elabels={}",
        sig.degree(),
        sig.vlabels().join(","),
        sig.elabels().join(","),
    );
    if !extra.is_empty() {
        line.push(' ');
        line.push_str(extra);
    }
    line
}

/// Splits `key=value`, enforcing the expected key.
pub(crate) fn field<'a>(tok: Option<&'a str>, key: &str, pos: usize) -> Result<&'a str, CodecError> {
    tok.and_then(|t| t.strip_prefix(key)?.strip_prefix('='))
        .ok_or(CodecError::Parse { pos, expected: format!("{key}=<...>") })
}

fn csv(list: &str) -> Vec<String> {
    if list.is_empty() {
        Vec::new()
    } else {
        list.split(',').map(str::to_string).collect()
    }
}

/// Parses a `<kind> v1 ports=.. vlabels=.. elabels=..` header into the
/// signature it declares (ports are named `1..d`) plus any remaining fields.
pub(crate) fn parse_header<'a>(
    line: &'a str,
    kind: &str,
) -> Result<(Arc<Signature>, Vec<&'a str>), CodecError> {
    let mut toks = line.split_whitespace();
    if toks.next() != Some(kind) || toks.next() != Some("v1") {
        return Err(CodecError::Parse { pos: 0, expected: format!("header '{kind} v1'") });
    }
    let d: u8 = field(toks.next(), "ports", 0)?
        .parse()
        .map_err(|_| CodecError::Parse { pos: 0, expected: "ports=<count>".into() })?;
    let vlabels = csv(field(toks.next(), "vlabels", 0)?);
    let elabels = csv(field(toks.next(), "elabels", 0)?);
    let sig = Signature::new((1..=d).map(|p| p.to_string()).collect(), vlabels, elabels)
        .map_err(CodecError::Graph)?;
    Ok((sig, toks.collect()))
}

/// Renders a graph as a two-line file: header plus word sequence.
pub fn write_graph_file(x: &CayleyGraph) -> String {
    format!("{}\n{}\n", header_line("cgd-graph", x.sig(), ""), string_encode(x))
}

/// Parses a graph file.  The signature is rebuilt from the header, with
/// ports named `1..d`.
pub fn read_graph_file(text: &str) -> Result<CayleyGraph, CodecError> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or(CodecError::Parse { pos: 0, expected: "a header line".into() })?;
    let (sig, rest) = parse_header(header, "cgd-graph")?;
    if !rest.is_empty() {
        return Err(CodecError::Parse { pos: 0, expected: "end of header".into() });
    }
    let body = lines
        .next()
        .ok_or(CodecError::Parse { pos: 0, expected: "a graph line".into() })?;
    for extra in lines {
        if !extra.trim().is_empty() {
            return Err(CodecError::Parse { pos: 0, expected: "end of file".into() });
        }
    }
    string_decode(body.trim_end(), &sig)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::graph::{NamedGraph, VName};
    use crate::rules::enumerate_disks;
    use rand::Rng;

    /// The running example: four vertices over ports {1,2,3} and labels
    /// {0,1}, whose encoding is known in closed form.
    fn example_graph() -> CayleyGraph {
        let sig = Signature::new(
            vec!["1".to_string(), "2".to_string(), "3".to_string()],
            vec!["0".to_string(), "1".to_string()],
            vec![],
        )
        .unwrap();
        let mut g = NamedGraph::new(sig);
        let v = |n: &str| VName::of(n);
        for (n, l) in [("a", 1), ("b", 0), ("c", 0), ("d", 1)] {
            g.add_vertex(v(n), Some(l)).unwrap();
        }
        for (n, p, m, q) in
            [("a", 0, "b", 0), ("b", 1, "c", 2), ("c", 1, "a", 2), ("c", 0, "d", 0), ("d", 1, "b", 2)]
        {
            g.add_edge((v(n), p), (v(m), q), None).unwrap();
        }
        CayleyGraph::canonicalize(&g, &v("a")).unwrap()
    }

    #[test]
    fn example_string_is_reproduced_exactly() {
        let x = example_graph();
        let s = string_encode(&x);
        assert_eq!(s, "$1;(1,1)$0;(2,3)$0(2,3)||;(1,1)$1(2,3)||;");
        assert_eq!(string_decode(&s, x.sig()).unwrap(), x);
    }

    #[test]
    fn single_vertices_are_one_word() {
        let labeled = Signature::with_vlabels(3, vec!["a"]);
        let mut g = NamedGraph::new(labeled.clone());
        g.add_vertex(VName::of("v"), Some(0)).unwrap();
        let x = CayleyGraph::canonicalize(&g, &VName::of("v")).unwrap();
        assert_eq!(string_encode(&x), "$a;");

        let bare = crate::graph::single(&Signature::unlabeled(2), None).unwrap();
        assert_eq!(string_encode(&bare), "$\u{b7};");
        assert_eq!(string_decode("$\u{b7};", &Signature::unlabeled(2)).unwrap(), bare);
    }

    #[test]
    fn loops_serialize_with_zero_climbs() {
        let sig = Signature::unlabeled(2);
        let x = crate::graph::cycle_n(&sig, 1).unwrap();
        let s = string_encode(&x);
        assert_eq!(s, "$\u{b7}(1,2);");
        assert_eq!(string_decode(&s, &sig).unwrap(), x);
    }

    #[test]
    fn roundtrips_500_random_graphs() {
        let full = Signature::new(
            vec!["1".to_string(), "2".to_string()],
            vec!["0".to_string(), "1".to_string()],
            vec!["x".to_string(), "y".to_string()],
        )
        .unwrap();
        let sigs = [
            Signature::unlabeled(1),
            Signature::unlabeled(2),
            Signature::unlabeled(4),
            Signature::with_vlabels(3, vec!["a", "b"]),
            full,
        ];
        let mut rng = corpus::rng(0xe5c0de);
        for round in 0..500 {
            let sig = &sigs[round % sigs.len()];
            let n = rng.gen_range(1..=30);
            let extra = rng.gen_range(0..=n / 2);
            let vd = rng.gen_range(0.0..=1.0);
            let ed = rng.gen_range(0.0..=1.0);
            let (g, pointer) = corpus::random_named(&mut rng, sig, n, extra, vd, ed);
            let x = CayleyGraph::canonicalize(&g, &pointer).unwrap();
            let s = string_encode(&x);
            assert_eq!(string_decode(&s, sig).unwrap(), x, "string was {s}");
        }
    }

    #[test]
    fn all_radius_2_observations_encode_injectively() {
        let sig = Signature::unlabeled(2);
        let disks = enumerate_disks(&sig, 2).unwrap();
        assert_eq!(disks.len(), 225);
        let strings: std::collections::BTreeSet<String> =
            disks.iter().map(string_encode).collect();
        assert_eq!(strings.len(), disks.len(), "two observations shared a string");
        for disk in &disks {
            assert_eq!(string_decode(&string_encode(disk), &sig).unwrap(), *disk);
        }
    }

    #[test]
    fn malformed_strings_are_rejected_with_positions() {
        let sig = Signature::unlabeled(2);
        let parse = |s: &str| match string_decode(s, &sig) {
            Err(CodecError::Parse { .. }) => (),
            other => panic!("{s:?} should be a parse error, got {other:?}"),
        };
        let semantic = |s: &str| match string_decode(s, &sig) {
            Err(CodecError::Semantic { .. }) => (),
            other => panic!("{s:?} should be a semantic error, got {other:?}"),
        };
        parse("");
        parse("$;");
        parse("$x;"); // undeclared label
        parse("$\u{b7};(1,1)"); // path with no following word
        parse("$\u{b7}"); // missing ';'
        semantic("$\u{b7};(1,1)|||;"); // climbs past the root
        semantic("$\u{b7}(1,1);"); // loop folded onto one port
        semantic("$\u{b7};(3,1)$\u{b7};"); // port out of range
        semantic("$\u{b7};(1,1)$\u{b7};(1,1)$\u{b7};"); // arrival port reused
        semantic("$\u{b7};(2,2)(1,1)$\u{b7};"); // climb at the root
    }

    #[test]
    fn decoder_survives_mutations() {
        let x = example_graph();
        let good = string_encode(&x);
        let mut rng = corpus::rng(77);
        let alphabet: Vec<char> = "$;|(),:123ab\u{b7}".chars().collect();
        for _ in 0..300 {
            let mut chars: Vec<char> = good.chars().collect();
            let at = rng.gen_range(0..chars.len());
            match rng.gen_range(0..3) {
                0 => chars[at] = alphabet[rng.gen_range(0..alphabet.len())],
                1 => drop(chars.remove(at)),
                _ => chars.insert(at, alphabet[rng.gen_range(0..alphabet.len())]),
            }
            let s: String = chars.into_iter().collect();
            let _ = string_decode(&s, x.sig()); // must return, not panic
        }
    }

    #[test]
    fn files_roundtrip_and_headers_are_checked() {
        let sig = Signature::new(
            vec!["1".to_string(), "2".to_string()],
            vec!["on".to_string()],
            vec!["z".to_string()],
        )
        .unwrap();
        let mut rng = corpus::rng(9);
        for _ in 0..20 {
            let (g, p) = corpus::random_named(&mut rng, &sig, 8, 2, 1.0, 1.0);
            let x = CayleyGraph::canonicalize(&g, &p).unwrap();
            let text = write_graph_file(&x);
            assert_eq!(read_graph_file(&text).unwrap(), x);
        }
        let x = crate::graph::line_n(&Signature::unlabeled(2), 3).unwrap();
        let text = write_graph_file(&x);
        assert!(text.starts_with("cgd-graph v1 ports=2 vlabels= elabels=\n"));
        assert_eq!(read_graph_file(&text).unwrap(), x);

        for bad in [
            "",
            "cgd-graph v2 ports=2 vlabels= elabels=\n$\u{b7};\n",
            "cgd-rule v1 ports=2 vlabels= elabels=\n$\u{b7};\n",
            "cgd-graph v1 ports=2 vlabels=\n$\u{b7};\n",
            "cgd-graph v1 ports=2 vlabels= elabels=\n",
            "cgd-graph v1 ports=2 vlabels= elabels= junk=1\n$\u{b7};\n",
            "cgd-graph v1 ports=2 vlabels= elabels=\n$\u{b7};\ntrailing\n",
        ] {
            assert!(read_graph_file(bad).is_err(), "{bad:?} should be rejected");
        }
    }
}
