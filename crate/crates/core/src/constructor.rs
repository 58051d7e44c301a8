//! A construction machine: one local rule that reads a textual description
//! from an input tape, vertex by vertex, and assembles the described graph
//! as a ring encoding — while carrying an arbitrary payload text that it
//! deposits on every vertex it builds.
//!
//! The machine is a single distinguished vertex `M` wired to three data
//! structures by dedicated "hook" edges:
//!
//! * an **input tape** of cells, one description token per cell, read left
//!   to right through `M`'s `x-in` port;
//! * a **payload tape** holding the text to replicate, one line per cell,
//!   anchored at `f-start` and copied through `f-copy`;
//! * a **construction site**, the partially built ring graph, reached
//!   through `site-last` (the most recently created ring) and `cursor`
//!   (a walking head used for climbs and port walks), plus a **stack** of
//!   cells recording how each ring hangs off its parent, reached through
//!   `stack-top` and `stack-read`.
//!
//! Every other vertex follows a fixed bystander discipline: re-claim
//! yourself and your non-hook edges verbatim, except that hooked vertices
//! leave their label to the machine and the two stack cells involved in a
//! pop stay silent so the popped record can disappear.  One description
//! token is consumed per machine step; walks across the site take one step
//! per hop.  When the input runs out the machine freezes in a `done` state;
//! structurally impossible descriptions freeze it in a `fault` state
//! instead.  [`extract_plain`] recovers the finished graph and
//! [`payloads`] the text deposited on each vertex.

use std::collections::BTreeMap;
use std::sync::Arc;

use thiserror::Error;

use crate::encodings::{ring_decode, ring_signature, CodecError};
use crate::graph::{
    CayleyGraph, GraphError, LabelId, Path, PathStep, Port, Signature, Suffix, VertexId,
};
use crate::rules::{apply_step, ImageGraph, LocalRule, RuleError};

// ---------------------------------------------------------------------------
// Ports
// ---------------------------------------------------------------------------

// Machine-side port roles.
const X_IN: Port = 0;
const F_A: Port = 1;
const F_B: Port = 2;
const SITE_LAST: Port = 3;
const CURSOR: Port = 4;
const STACK_TOP: Port = 5;
const STACK_READ: Port = 6;

// Everyone else's port roles; the first three coincide with the ring
// encoding so a finished site is a ring graph with four silent ports.
const PREV: Port = 0;
const NEXT: Port = 1;
const LINK: Port = 2;
const HOOK_A: Port = 3;
const HOOK_B: Port = 4;
const ANCHOR: Port = 5;

const DEGREE: u8 = 7;

/// Which port of a target a given machine port grabs.  Two hook ports
/// suffice because no vertex is ever grabbed twice through the same one.
fn hook_in(p: Port) -> Port {
    match p {
        X_IN | F_A | SITE_LAST | STACK_TOP => HOOK_A,
        _ => HOOK_B,
    }
}

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

#[derive(Debug, Error)]
pub enum MachineError {
    /// The description or payload cannot be put on a tape.
    #[error("cannot assemble the machine: {0}")]
    Parse(String),
    /// The run ended in a state other than the one required.
    #[error("the machine is not done: {0}")]
    NotDone(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Rule(#[from] RuleError),
    #[error(transparent)]
    Codec(#[from] CodecError),
}

// ---------------------------------------------------------------------------
// Label escaping
// ---------------------------------------------------------------------------

/// Tape cells carry text in their vertex labels, but label tokens may not
/// contain whitespace or the codec's delimiter characters.  Each offending
/// character is replaced by `~` plus a code letter.
const ESCAPES: &[(char, char)] = &[
    ('$', 'd'),
    ('(', 'o'),
    (')', 'c'),
    (';', 's'),
    ('|', 'b'),
    (',', 'm'),
    (':', 'k'),
    ('\u{b7}', 'q'),
    (' ', 'w'),
    ('\t', 't'),
    ('\r', 'r'),
    ('\n', 'n'),
    ('~', '~'),
];

fn escape(s: &str) -> Result<String, MachineError> {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match ESCAPES.iter().find(|(raw, _)| *raw == c) {
            Some((_, code)) => {
                out.push('~');
                out.push(*code);
            }
            None if c.is_whitespace() => {
                return Err(MachineError::Parse(format!(
                    "unsupported whitespace {:?} in tape text",
                    c
                )))
            }
            None => out.push(c),
        }
    }
    Ok(out)
}

fn unescape(s: &str) -> Result<String, MachineError> {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '~' {
            out.push(c);
            continue;
        }
        let code = chars
            .next()
            .ok_or_else(|| MachineError::Parse("dangling escape in a cell label".into()))?;
        match ESCAPES.iter().find(|(_, esc)| *esc == code) {
            Some((raw, _)) => out.push(*raw),
            None => {
                return Err(MachineError::Parse(format!(
                    "unknown escape ~{code} in a cell label"
                )))
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Description tokens
// ---------------------------------------------------------------------------

/// One lexical unit of a graph description, as written by the string codec.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Token {
    /// `$σ` — label (or relabel) the current vertex; `None` is the blank.
    Word(Option<LabelId>),
    /// `(s,t)` or `(s,t:λ)` — an edge move, ports 1-based.
    Pair { s: u8, t: u8, lab: Option<LabelId> },
    /// `|` — climb one level toward the root.
    Bar,
    /// `;` — end of the current word's edge section.
    Sep,
}

fn token_text(t: Token, src: &Signature) -> String {
    match t {
        Token::Word(None) => "$\u{b7}".to_string(),
        Token::Word(Some(l)) => format!("${}", src.vlabel_name(l)),
        Token::Pair { s, t, lab: None } => format!("({s},{t})"),
        Token::Pair { s, t, lab: Some(l) } => format!("({s},{t}:{})", src.elabel_name(l)),
        Token::Bar => "|".to_string(),
        Token::Sep => ";".to_string(),
    }
}

/// Every token the description alphabet over `src` admits, in a fixed
/// order.  The tape labels of the machine signature are exactly these.
fn all_tokens(src: &Signature) -> Vec<Token> {
    let d = src.degree();
    let mut out = vec![Token::Sep, Token::Bar, Token::Word(None)];
    for l in 0..src.vlabels().len() {
        out.push(Token::Word(Some(l as LabelId)));
    }
    let mut labs = vec![None];
    for l in 0..src.elabels().len() {
        labs.push(Some(l as LabelId));
    }
    for s in 1..=d {
        for t in 1..=d {
            for &lab in &labs {
                out.push(Token::Pair { s, t, lab });
            }
        }
    }
    out
}

/// Splits a description string into tokens, validating every port index
/// and label against `src`.  Whitespace between tokens is allowed.
fn lex(xs: &str, src: &Signature) -> Result<Vec<Token>, MachineError> {
    let bad = |pos: usize, what: String| {
        MachineError::Parse(format!("description byte {pos}: {what}"))
    };
    let d = src.degree();
    let mut out = Vec::new();
    let bytes = xs.char_indices().collect::<Vec<_>>();
    let mut i = 0;
    let delim = |c: char| {
        matches!(c, '$' | '(' | ')' | ';' | '|' | ',' | ':') || c.is_whitespace()
    };
    while i < bytes.len() {
        let (pos, c) = bytes[i];
        match c {
            c if c.is_whitespace() => i += 1,
            ';' => {
                out.push(Token::Sep);
                i += 1;
            }
            '|' => {
                out.push(Token::Bar);
                i += 1;
            }
            '$' => {
                i += 1;
                let start = i;
                while i < bytes.len() && !delim(bytes[i].1) {
                    i += 1;
                }
                let name: String = bytes[start..i].iter().map(|&(_, c)| c).collect();
                if name == "\u{b7}" {
                    out.push(Token::Word(None));
                } else if name.is_empty() {
                    return Err(bad(pos, "a word needs a label or the blank".into()));
                } else {
                    let l = src
                        .vlabel_id(&name)
                        .ok_or_else(|| bad(pos, format!("unknown vertex label `{name}`")))?;
                    out.push(Token::Word(Some(l)));
                }
            }
            '(' => {
                let inner_start = i + 1;
                let mut j = inner_start;
                while j < bytes.len() && bytes[j].1 != ')' {
                    j += 1;
                }
                if j == bytes.len() {
                    return Err(bad(pos, "unclosed `(`".into()));
                }
                let inner: String = bytes[inner_start..j].iter().map(|&(_, c)| c).collect();
                let (num, rest) = inner
                    .split_once(',')
                    .ok_or_else(|| bad(pos, "a pair needs a comma".into()))?;
                let (num2, lab) = match rest.split_once(':') {
                    Some((n, name)) => {
                        let l = src.elabel_id(name).ok_or_else(|| {
                            bad(pos, format!("unknown edge label `{name}`"))
                        })?;
                        (n, Some(l))
                    }
                    None => (rest, None),
                };
                let parse_port = |txt: &str| -> Result<u8, MachineError> {
                    let v: u8 = txt
                        .trim()
                        .parse()
                        .map_err(|_| bad(pos, format!("`{txt}` is not a port number")))?;
                    if v == 0 || v > d {
                        return Err(bad(pos, format!("port {v} outside 1..={d}")));
                    }
                    Ok(v)
                };
                out.push(Token::Pair { s: parse_port(num)?, t: parse_port(num2)?, lab });
                i = j + 1;
            }
            c => return Err(bad(pos, format!("unexpected `{c}`"))),
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Machine states
// ---------------------------------------------------------------------------

const FAULTS: &[&str] = &[
    "backtrack-past-root",
    "port-in-use",
    "port-clash",
    "bad-climb",
    "stray-bar",
    "unexpected-word",
    "bad-token",
    "confused",
];

/// The machine's control state, carried in its vertex label.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Mode {
    /// Between words: expects `$σ`, a back-edge pair, or `;`.
    Ready,
    /// A back edge `(s,t)` is pending; `moved` once a climb happened.
    Pend { s: u8, t: u8, lab: Option<LabelId>, moved: bool },
    /// Climbing out: `k` more next-hops before crossing the tree edge.
    Up { s: u8, t: u8, lab: Option<LabelId>, k: u8 },
    /// Walking back in to the hub after crossing.
    Down { s: u8, t: u8, lab: Option<LabelId> },
    /// Committing the back edge: cursor walks `k` hops to the far port.
    CommitA { k: u8, s: u8, lab: Option<LabelId> },
    /// Committing: `site-last` walks `k` hops to the near port.
    CommitB { k: u8, lab: Option<LabelId> },
    /// Committing: create the back edge between the two walked ports.
    CommitC { lab: Option<LabelId> },
    /// Committing: `site-last` walks home, then everything resets.
    CommitD,
    /// In a word's path section: expects a walk/creation pair.
    PathMode,
    /// Walking `k` hops out to the port named by a path pair.
    POut { s: u8, t: u8, lab: Option<LabelId>, k: u8 },
    /// Announced pop: next step retraces a tree edge and drops its record.
    Pop,
    /// Walking back to the hub after a pop.
    PHome,
    /// Create a ring at the cursor's port and push its record.
    Make { s: u8, t: u8, lab: Option<LabelId> },
    /// Deposit the first payload cell under the newest ring.
    CopyFirst,
    /// Deposit the next payload cell.
    Copy,
    Done,
    Fault(&'static str),
}

fn seg_num(out: &mut String, n: u8) {
    out.push('.');
    out.push_str(&n.to_string());
}

fn seg_lab(out: &mut String, lab: Option<LabelId>, src: &Signature) {
    if let Some(l) = lab {
        out.push('.');
        out.push_str(src.elabel_name(l));
    }
}

/// Serializes a state as a vertex label: `m.<op>[.<nums>][.<edge label>]`.
fn mode_label(m: Mode, src: &Signature) -> String {
    let mut out = String::from("m.");
    match m {
        Mode::Ready => out.push('H'),
        Mode::PathMode => out.push('P'),
        Mode::Pop => out.push_str("pop"),
        Mode::PHome => out.push_str("Pv"),
        Mode::CommitD => out.push_str("Bz"),
        Mode::CopyFirst => out.push_str("c1"),
        Mode::Copy => out.push('c'),
        Mode::Done => out.push_str("done"),
        Mode::Fault(r) => {
            out.push_str("fault.");
            out.push_str(r);
        }
        Mode::Pend { s, t, lab, moved } => {
            out.push_str(if moved { "Bp" } else { "B" });
            seg_num(&mut out, s);
            seg_num(&mut out, t);
            seg_lab(&mut out, lab, src);
        }
        Mode::Up { s, t, lab, k } => {
            out.push_str("Bu");
            seg_num(&mut out, s);
            seg_num(&mut out, t);
            seg_num(&mut out, k);
            seg_lab(&mut out, lab, src);
        }
        Mode::Down { s, t, lab } => {
            out.push_str("Bv");
            seg_num(&mut out, s);
            seg_num(&mut out, t);
            seg_lab(&mut out, lab, src);
        }
        Mode::CommitA { k, s, lab } => {
            out.push_str("Bw");
            seg_num(&mut out, k);
            seg_num(&mut out, s);
            seg_lab(&mut out, lab, src);
        }
        Mode::CommitB { k, lab } => {
            out.push_str("Bx");
            seg_num(&mut out, k);
            seg_lab(&mut out, lab, src);
        }
        Mode::CommitC { lab } => {
            out.push_str("By");
            seg_lab(&mut out, lab, src);
        }
        Mode::POut { s, t, lab, k } => {
            out.push_str("Po");
            seg_num(&mut out, s);
            seg_num(&mut out, t);
            seg_num(&mut out, k);
            seg_lab(&mut out, lab, src);
        }
        Mode::Make { s, t, lab } => {
            out.push_str("mk");
            seg_num(&mut out, s);
            seg_num(&mut out, t);
            seg_lab(&mut out, lab, src);
        }
    }
    out
}

/// Every state the machine over `src` can be in, in a fixed order.
fn all_modes(src: &Signature) -> Vec<Mode> {
    let d = src.degree();
    let mut labs = vec![None];
    for l in 0..src.elabels().len() {
        labs.push(Some(l as LabelId));
    }
    let mut out = vec![
        Mode::Ready,
        Mode::PathMode,
        Mode::Pop,
        Mode::PHome,
        Mode::CommitD,
        Mode::CopyFirst,
        Mode::Copy,
        Mode::Done,
    ];
    out.extend(FAULTS.iter().map(|r| Mode::Fault(r)));
    for s in 1..=d {
        for t in 1..=d {
            for &lab in &labs {
                for moved in [false, true] {
                    out.push(Mode::Pend { s, t, lab, moved });
                }
                for k in 0..=d {
                    out.push(Mode::Up { s, t, lab, k });
                    out.push(Mode::POut { s, t, lab, k });
                }
                out.push(Mode::Down { s, t, lab });
                out.push(Mode::Make { s, t, lab });
            }
        }
    }
    for k in 0..=d {
        for s in 1..=d {
            for &lab in &labs {
                out.push(Mode::CommitA { k, s, lab });
            }
        }
        for &lab in &labs {
            out.push(Mode::CommitB { k, lab });
        }
    }
    for &lab in &labs {
        out.push(Mode::CommitC { lab });
    }
    out
}

// ---------------------------------------------------------------------------
// Signature
// ---------------------------------------------------------------------------

/// The signature every construction machine over `src` works in: seven
/// ports, the ring labels of `src` first (so a finished site is literally
/// a ring graph), then the control states, the description alphabet, and
/// one label per distinct payload line.
pub fn machine_signature(src: &Arc<Signature>, fs: &str) -> Result<Arc<Signature>, MachineError> {
    let mut vlabels = vec!["VERTEX".to_string()];
    vlabels.extend(src.vlabels().iter().map(|s| format!("VERTEX/{s}")));
    vlabels.push("PORT".to_string());
    for m in all_modes(src) {
        vlabels.push(mode_label(m, src));
    }
    for t in all_tokens(src) {
        vlabels.push(format!("x{}", escape(&token_text(t, src))?));
    }
    let mut seen = std::collections::BTreeSet::new();
    for line in payload_lines(fs) {
        let label = format!("f{}", escape(line)?);
        if seen.insert(label.clone()) {
            vlabels.push(label);
        }
    }
    if vlabels.len() > LabelId::MAX as usize {
        return Err(MachineError::Parse(format!(
            "{} labels exceed the label space",
            vlabels.len()
        )));
    }
    let ports = ["previous", "next", "link", "hook.a", "hook.b", "anchor", "free"]
        .map(str::to_string)
        .to_vec();
    Ok(Signature::new(ports, vlabels, src.elabels().to_vec())?)
}

/// How a payload string is cut into cells: one line per cell.
fn payload_lines(fs: &str) -> Vec<&str> {
    if fs.is_empty() {
        Vec::new()
    } else {
        fs.split('\n').collect()
    }
}

// ---------------------------------------------------------------------------
// The rule
// ---------------------------------------------------------------------------

/// What a machine-signature vertex label means.
#[derive(Clone, Debug)]
enum Kind {
    Hub,
    PortV,
    X(Token),
    F,
    Ctrl(Mode),
}

struct Machine {
    d: u8,
    vcount: LabelId,
    kinds: Vec<Kind>,
    ids: BTreeMap<String, LabelId>,
}

impl Machine {
    fn prepare(src: &Arc<Signature>, sig: &Arc<Signature>) -> Result<Machine, MachineError> {
        let mut kinds = Vec::with_capacity(sig.vlabels().len());
        let mut ids = BTreeMap::new();
        let modes: BTreeMap<String, Mode> =
            all_modes(src).into_iter().map(|m| (mode_label(m, src), m)).collect();
        let tokens: BTreeMap<String, Token> = all_tokens(src)
            .into_iter()
            .map(|t| Ok((format!("x{}", escape(&token_text(t, src))?), t)))
            .collect::<Result<_, MachineError>>()?;
        for (id, name) in sig.vlabels().iter().enumerate() {
            ids.insert(name.clone(), id as LabelId);
            let kind = if name == "VERTEX" || name.starts_with("VERTEX/") {
                Kind::Hub
            } else if name == "PORT" {
                Kind::PortV
            } else if let Some(m) = modes.get(name) {
                Kind::Ctrl(*m)
            } else if let Some(t) = tokens.get(name) {
                Kind::X(*t)
            } else if name.starts_with('f') {
                Kind::F
            } else {
                return Err(MachineError::Parse(format!(
                    "label `{name}` fits no machine role"
                )));
            };
            kinds.push(kind);
        }
        Ok(Machine {
            d: src.degree(),
            vcount: src.vlabels().len() as LabelId,
            kinds,
            ids,
        })
    }

    fn id(&self, name: &str) -> LabelId {
        *self.ids.get(name).expect("machine labels are pre-enumerated")
    }

    fn kind(&self, l: Option<LabelId>) -> Option<&Kind> {
        l.and_then(|l| self.kinds.get(l as usize))
    }

    fn ctrl(&self, l: Option<LabelId>) -> Option<Mode> {
        match self.kind(l) {
            Some(Kind::Ctrl(m)) => Some(*m),
            _ => None,
        }
    }

    /// The hub label ring-encoding a source vertex labeled `l`.
    fn hub_label(&self, l: Option<LabelId>) -> LabelId {
        match l {
            None => 0,
            Some(l) => 1 + l,
        }
    }

    fn port_label(&self) -> LabelId {
        1 + self.vcount
    }
}

/// Per-port plan for the machine's image: keep the hook, keep it while
/// writing a label, move it along a two-step path, or let go.
#[derive(Clone)]
enum Act {
    Keep,
    Relabel(LabelId),
    MoveTo(Path),
    Drop,
}

/// The machine's image under assembly: the center plus one image vertex
/// per (old and new) hook target, addressed by machine port.
struct Build {
    im: ImageGraph,
    center: usize,
    old: [Option<usize>; DEGREE as usize],
    new: [Option<usize>; DEGREE as usize],
}

impl Build {
    fn plan(
        disk: &CayleyGraph,
        next: &Mode,
        acts: [Act; DEGREE as usize],
        m: &Machine,
        src: &Signature,
    ) -> Build {
        let mut im = ImageGraph::new();
        let label = m.id(&mode_label(*next, src));
        let center = im.add_vertex([(Path::empty(), 0)], Some(label));
        let mut b = Build { im, center, old: [None; 7], new: [None; 7] };
        for p in 0..DEGREE {
            let Some((w, q)) = disk.across(0, p) else { continue };
            let pi = p as usize;
            match &acts[pi] {
                Act::Keep => {
                    let v = b.im.add_vertex(
                        [(Path::step(p, q), 0)],
                        disk.vlabel(w),
                    );
                    b.im.add_edge(b.center, p, v, q, None);
                    b.old[pi] = Some(v);
                    b.new[pi] = Some(v);
                }
                Act::Relabel(l) => {
                    let v = b.im.add_vertex([(Path::step(p, q), 0)], Some(*l));
                    b.im.add_edge(b.center, p, v, q, None);
                    b.old[pi] = Some(v);
                    b.new[pi] = Some(v);
                }
                Act::MoveTo(path) => {
                    let old = b.im.add_vertex([(Path::step(p, q), 0)], disk.vlabel(w));
                    b.old[pi] = Some(old);
                    if let Some(end) = disk.walk(0, path) {
                        let v = b.im.add_vertex([(path.clone(), 0)], disk.vlabel(end));
                        b.im.add_edge(b.center, p, v, hook_in(p), None);
                        b.new[pi] = Some(v);
                    }
                }
                Act::Drop => {
                    let old = b.im.add_vertex([(Path::step(p, q), 0)], disk.vlabel(w));
                    b.old[pi] = Some(old);
                }
            }
        }
        b
    }

    /// Adds a brand-new vertex with the given suffix name.
    fn fresh(&mut self, suffix: Suffix, label: LabelId) -> usize {
        self.im.add_vertex([(Path::empty(), suffix)], Some(label))
    }

    /// Hooks machine port `p` to a vertex created in this very image.
    fn grab(&mut self, p: Port, v: usize) {
        self.im.add_edge(self.center, p, v, hook_in(p), None);
        self.new[p as usize] = Some(v);
    }

    /// Builds a ring of `d + 1` fresh vertices (hub first) wired
    /// `previous`/`next`, using suffixes `base..=base + d`.
    fn ring(&mut self, d: u8, base: Suffix, hub_label: LabelId, port_label: LabelId) -> Vec<usize> {
        let mut vs = vec![self.fresh(base, hub_label)];
        for i in 1..=d {
            vs.push(self.fresh(base + i as Suffix, port_label));
        }
        let len = vs.len();
        for i in 0..len {
            self.im.add_edge(vs[i], NEXT, vs[(i + 1) % len], PREV, None);
        }
        vs
    }
}

impl Machine {
    /// The image of one observed neighborhood — the whole machine program.
    fn image(&self, disk: &CayleyGraph, src: &Signature) -> ImageGraph {
        match self.ctrl(disk.vlabel(0)) {
            Some(mode) => self.machine_image(disk, mode, src),
            None => self.bystander_image(disk),
        }
    }

    /// Everyone but the machine: re-claim yourself and your plain edges.
    fn bystander_image(&self, disk: &CayleyGraph) -> ImageGraph {
        let mut im = ImageGraph::new();
        let grabbed = |p: Port| {
            disk.across(0, p)
                .and_then(|(w, q)| self.ctrl(disk.vlabel(w)).map(|m| (w, q, m)))
        };
        // A stack cell whose record is being popped vanishes: claim only
        // the successor vertex so the step may disconnect it.
        if let Some((_, q, Mode::Pop)) = grabbed(HOOK_A) {
            if q == STACK_TOP {
                im.add_vertex([(Path::empty(), 0)], None);
                return im;
            }
        }
        let hooked = grabbed(HOOK_A).is_some() || grabbed(HOOK_B).is_some();
        let center =
            im.add_vertex([(Path::empty(), 0)], if hooked { None } else { disk.vlabel(0) });
        for p in [PREV, NEXT, LINK, ANCHOR, 6] {
            let Some((w, q)) = disk.across(0, p) else { continue };
            if self.ctrl(disk.vlabel(w)).is_some() {
                continue; // machine edges are the machine's to claim
            }
            if p == PREV && q == NEXT {
                // The cell above on a stack is about to be popped: leave
                // the edge to it unclaimed so the cell can go.
                let dying = disk
                    .across(w, HOOK_A)
                    .and_then(|(mm, mq)| self.ctrl(disk.vlabel(mm)).map(|m| (mq, m)))
                    .is_some_and(|(mq, m)| mq == STACK_TOP && m == Mode::Pop);
                if dying {
                    continue;
                }
            }
            let v = im.add_vertex([(Path::step(p, q), 0)], None);
            im.add_edge(center, p, v, q, disk.elabel_at(0, p));
        }
        im
    }

    fn machine_image(&self, disk: &CayleyGraph, mode: Mode, src: &Signature) -> ImageGraph {
        let keep_all = || {
            [Act::Keep, Act::Keep, Act::Keep, Act::Keep, Act::Keep, Act::Keep, Act::Keep]
        };
        let freeze = |next: Mode| {
            Build::plan(disk, &next, keep_all(), self, src).im
        };

        // Reading helpers, all in terms of the observed neighborhood.
        let target = |p: Port| disk.across(0, p);
        let token = || -> Result<Option<Token>, ()> {
            match target(X_IN) {
                None => Ok(None),
                Some((w, _)) => match self.kind(disk.vlabel(w)) {
                    Some(Kind::X(t)) => Ok(Some(*t)),
                    _ => Err(()),
                },
            }
        };
        // Two-step path through a hook: the observed hook edge, then a step
        // out of the target.
        let via = |p: Port, out: Port, inp: Port| -> Option<Path> {
            let (_, q) = target(p)?;
            Some(Path(vec![PathStep::new(p, q), PathStep::new(out, inp)]))
        };
        let step_exists = |p: Port, out: Port| -> bool {
            target(p).is_some_and(|(w, _)| disk.across(w, out).is_some())
        };
        let target_kind = |p: Port| -> Option<&Kind> {
            target(p).and_then(|(w, _)| self.kind(disk.vlabel(w)))
        };
        // The record under the reading head of the stack, if any.
        let record = || -> Option<Token> {
            match target_kind(STACK_READ) {
                Some(Kind::X(t @ Token::Pair { .. })) => Some(*t),
                _ => None,
            }
        };

        let Ok(tok) = token() else {
            return freeze(Mode::Fault("bad-token"));
        };

        // Consuming steps move the reading head; at the end of the tape it
        // simply lets go (the tape stays anchored to the site).
        let advance = || -> Act {
            if step_exists(X_IN, NEXT) {
                Act::MoveTo(via(X_IN, NEXT, PREV).expect("hooked"))
            } else {
                Act::Drop
            }
        };

        match mode {
            Mode::Ready => match tok {
                None => freeze(Mode::Done),
                Some(Token::Word(sigma)) => {
                    let hub = self.hub_label(sigma);
                    if target(SITE_LAST).is_none() {
                        // Genesis: build the root ring, anchor it to the
                        // tape, and start the payload copy.
                        let mut acts = keep_all();
                        acts[X_IN as usize] = advance();
                        acts[SITE_LAST as usize] = Act::Drop;
                        acts[CURSOR as usize] = Act::Drop;
                        let next = if target(F_A).is_some() {
                            Mode::CopyFirst
                        } else {
                            Mode::Ready
                        };
                        let mut b = Build::plan(disk, &next, acts, self, src);
                        let ring = b.ring(self.d, 1, hub, self.port_label());
                        if let Some(cell) = b.old[X_IN as usize] {
                            b.im.add_edge(ring[0], ANCHOR, cell, ANCHOR, None);
                        }
                        b.grab(SITE_LAST, ring[0]);
                        b.grab(CURSOR, ring[0]);
                        b.im
                    } else {
                        // Relabel the most recently created vertex.  The
                        // cursor rests on the same hub; both writes agree.
                        let mut acts = keep_all();
                        acts[X_IN as usize] = advance();
                        acts[SITE_LAST as usize] = Act::Relabel(hub);
                        acts[CURSOR as usize] = Act::Relabel(hub);
                        Build::plan(disk, &Mode::Ready, acts, self, src).im
                    }
                }
                Some(Token::Pair { s, t, lab }) => {
                    let mut acts = keep_all();
                    acts[X_IN as usize] = advance();
                    Build::plan(disk, &Mode::Pend { s, t, lab, moved: false }, acts, self, src)
                        .im
                }
                Some(Token::Sep) => {
                    let mut acts = keep_all();
                    acts[X_IN as usize] = advance();
                    Build::plan(disk, &Mode::PathMode, acts, self, src).im
                }
                Some(Token::Bar) => freeze(Mode::Fault("stray-bar")),
            },

            Mode::Pend { s, t, lab, moved } => match tok {
                Some(Token::Bar) => {
                    let Some(Token::Pair { t: t0, .. }) = record() else {
                        return freeze(Mode::Fault("backtrack-past-root"));
                    };
                    let mut acts = keep_all();
                    acts[X_IN as usize] = advance();
                    // This record is spent for the climb in progress; read on
                    // downward.
                    acts[STACK_READ as usize] = if step_exists(STACK_READ, NEXT) {
                        Act::MoveTo(via(STACK_READ, NEXT, PREV).expect("hooked"))
                    } else {
                        Act::Drop
                    };
                    Build::plan(disk, &Mode::Up { s, t, lab, k: t0 }, acts, self, src).im
                }
                _ => {
                    // Anything else first commits the pending edge; the
                    // token is left on the tape for afterwards.
                    if !moved && s == t {
                        return freeze(Mode::Fault("port-clash"));
                    }
                    freeze(Mode::CommitA { k: t, s, lab })
                }
            },

            Mode::Up { s, t, lab, k } => {
                if k > 0 {
                    let mut acts = keep_all();
                    acts[CURSOR as usize] =
                        Act::MoveTo(via(CURSOR, NEXT, PREV).expect("hooked"));
                    return Build::plan(disk, &Mode::Up { s, t, lab, k: k - 1 }, acts, self, src)
                        .im;
                }
                if !step_exists(CURSOR, LINK) {
                    return freeze(Mode::Fault("bad-climb"));
                }
                let mut acts = keep_all();
                acts[CURSOR as usize] = Act::MoveTo(via(CURSOR, LINK, LINK).expect("hooked"));
                Build::plan(disk, &Mode::Down { s, t, lab }, acts, self, src).im
            }

            Mode::Down { s, t, lab } => match target_kind(CURSOR) {
                Some(Kind::Hub) => freeze(Mode::Pend { s, t, lab, moved: true }),
                Some(Kind::PortV) => {
                    let mut acts = keep_all();
                    acts[CURSOR as usize] =
                        Act::MoveTo(via(CURSOR, PREV, NEXT).expect("hooked"));
                    Build::plan(disk, &Mode::Down { s, t, lab }, acts, self, src).im
                }
                _ => freeze(Mode::Fault("confused")),
            },

            Mode::CommitA { k, s, lab } => {
                if k > 0 {
                    let mut acts = keep_all();
                    acts[CURSOR as usize] =
                        Act::MoveTo(via(CURSOR, NEXT, PREV).expect("hooked"));
                    return Build::plan(disk, &Mode::CommitA { k: k - 1, s, lab }, acts, self, src)
                        .im;
                }
                freeze(Mode::CommitB { k: s, lab })
            }

            Mode::CommitB { k, lab } => {
                if k > 0 {
                    let mut acts = keep_all();
                    acts[SITE_LAST as usize] =
                        Act::MoveTo(via(SITE_LAST, NEXT, PREV).expect("hooked"));
                    return Build::plan(disk, &Mode::CommitB { k: k - 1, lab }, acts, self, src)
                        .im;
                }
                freeze(Mode::CommitC { lab })
            }

            Mode::CommitC { lab } => {
                if step_exists(CURSOR, LINK) || step_exists(SITE_LAST, LINK) {
                    return freeze(Mode::Fault("port-in-use"));
                }
                let b = Build::plan(disk, &Mode::CommitD, keep_all(), self, src);
                let mut b = b;
                let (va, vb) = (b.new[CURSOR as usize], b.new[SITE_LAST as usize]);
                if let (Some(va), Some(vb)) = (va, vb) {
                    b.im.add_edge(va, LINK, vb, LINK, lab);
                } else {
                    return freeze(Mode::Fault("confused"));
                }
                b.im
            }

            Mode::CommitD => match target_kind(SITE_LAST) {
                Some(Kind::Hub) => {
                    // Home again: park the cursor on the hub and the reading
                    // head back on the top of the stack.
                    let mut acts = keep_all();
                    acts[CURSOR as usize] = Act::Drop;
                    acts[STACK_READ as usize] = Act::Drop;
                    let mut b = Build::plan(disk, &Mode::Ready, acts, self, src);
                    if let Some(hub) = b.new[SITE_LAST as usize] {
                        b.grab(CURSOR, hub);
                    }
                    if let Some(top) = b.new[STACK_TOP as usize] {
                        b.grab(STACK_READ, top);
                    }
                    b.im
                }
                Some(Kind::PortV) => {
                    let mut acts = keep_all();
                    acts[SITE_LAST as usize] =
                        Act::MoveTo(via(SITE_LAST, PREV, NEXT).expect("hooked"));
                    Build::plan(disk, &Mode::CommitD, acts, self, src).im
                }
                _ => freeze(Mode::Fault("confused")),
            },

            Mode::PathMode => match tok {
                None => freeze(Mode::Done),
                Some(Token::Pair { s, t, lab }) => {
                    let mut acts = keep_all();
                    acts[X_IN as usize] = advance();
                    Build::plan(disk, &Mode::POut { s, t, lab, k: s }, acts, self, src).im
                }
                Some(Token::Bar) => freeze(Mode::Fault("stray-bar")),
                Some(_) => freeze(Mode::Fault("unexpected-word")),
            },

            Mode::POut { s, t, lab, k } => {
                if k > 0 {
                    let mut acts = keep_all();
                    acts[CURSOR as usize] =
                        Act::MoveTo(via(CURSOR, NEXT, PREV).expect("hooked"));
                    return Build::plan(
                        disk,
                        &Mode::POut { s, t, lab, k: k - 1 },
                        acts,
                        self,
                        src,
                    )
                    .im;
                }
                if step_exists(CURSOR, LINK) {
                    // The pair walks an existing tree edge: it must retrace
                    // the creation on top of the stack, label-free.
                    let retraces = record().is_some_and(|r| match r {
                        Token::Pair { s: s0, t: t0, .. } => s == t0 && t == s0,
                        _ => false,
                    });
                    if record().is_none() {
                        return freeze(Mode::Fault("backtrack-past-root"));
                    }
                    if !retraces || lab.is_some() {
                        return freeze(Mode::Fault("bad-climb"));
                    }
                    freeze(Mode::Pop)
                } else {
                    freeze(Mode::Make { s, t, lab })
                }
            }

            Mode::Pop => {
                // Cross the tree edge and drop the spent record: the top
                // stack cell is claimed by nobody and falls off.
                let mut acts = keep_all();
                acts[CURSOR as usize] = match via(CURSOR, LINK, LINK) {
                    Some(p) if disk.walk(0, &p).is_some() => Act::MoveTo(p),
                    _ => return freeze(Mode::Fault("confused")),
                };
                let below_top = step_exists(STACK_TOP, NEXT);
                acts[STACK_TOP as usize] = if below_top {
                    Act::MoveTo(via(STACK_TOP, NEXT, PREV).expect("hooked"))
                } else {
                    Act::Drop
                };
                acts[STACK_READ as usize] = if below_top {
                    Act::MoveTo(via(STACK_READ, NEXT, PREV).expect("hooked"))
                } else {
                    Act::Drop
                };
                Build::plan(disk, &Mode::PHome, acts, self, src).im
            }

            Mode::PHome => match target_kind(CURSOR) {
                Some(Kind::Hub) => freeze(Mode::PathMode),
                Some(Kind::PortV) => {
                    let mut acts = keep_all();
                    acts[CURSOR as usize] =
                        Act::MoveTo(via(CURSOR, PREV, NEXT).expect("hooked"));
                    Build::plan(disk, &Mode::PHome, acts, self, src).im
                }
                _ => freeze(Mode::Fault("confused")),
            },

            Mode::Make { s, t, lab } => {
                // The cursor rests on the attachment port.  Build the new
                // ring, bridge to it, push its record, move in.
                let mut acts = keep_all();
                acts[SITE_LAST as usize] = Act::Drop;
                acts[CURSOR as usize] = Act::Drop;
                acts[STACK_TOP as usize] = Act::Drop;
                acts[STACK_READ as usize] = Act::Drop;
                let next = if target(F_A).is_some() { Mode::CopyFirst } else { Mode::Ready };
                let mut b = Build::plan(disk, &next, acts, self, src);
                let ring = b.ring(self.d, 1, 0, self.port_label());
                let Some(w) = b.old[CURSOR as usize] else {
                    return freeze(Mode::Fault("confused"));
                };
                b.im.add_edge(w, LINK, ring[t as usize], LINK, lab);
                let rec = Token::Pair { s, t, lab };
                let rec_label = self.id(&format!(
                    "x{}",
                    escape(&token_text(rec, src)).expect("token texts escape")
                ));
                let cell = b.fresh(self.d as Suffix + 2, rec_label);
                if let Some(old_top) = b.old[STACK_TOP as usize] {
                    b.im.add_edge(cell, NEXT, old_top, PREV, None);
                }
                // Re-park everything on the newcomers.
                let hub = ring[0];
                b.grab(STACK_TOP, cell);
                b.grab(STACK_READ, cell);
                b.grab(SITE_LAST, hub);
                b.grab(CURSOR, hub);
                b.im
            }

            Mode::CopyFirst | Mode::Copy => {
                let Some(Kind::F) = target_kind(F_B) else {
                    return freeze(Mode::Fault("confused"));
                };
                let chunk = target(F_B)
                    .and_then(|(w, _)| disk.vlabel(w))
                    .expect("payload cells are labeled");
                let first = mode == Mode::CopyFirst;
                let last = !step_exists(F_B, NEXT);
                let mut acts = keep_all();
                acts[F_B as usize] = if last {
                    Act::Drop // re-grabbed onto the payload start below
                } else {
                    Act::MoveTo(via(F_B, NEXT, PREV).expect("hooked"))
                };
                // The cursor rides the chain being written; on the first
                // cell it still sits on the hub and may stay there.
                if !(first && last) {
                    acts[CURSOR as usize] = Act::Drop;
                }
                let next = if last { Mode::Ready } else { Mode::Copy };
                let mut b = Build::plan(disk, &next, acts, self, src);
                let cell = b.fresh(1, chunk);
                let attach_to = if first {
                    b.new[SITE_LAST as usize] // under the newest hub
                } else {
                    b.old[CURSOR as usize] // behind the previous cell
                };
                let Some(at) = attach_to else {
                    return freeze(Mode::Fault("confused"));
                };
                b.im.add_edge(cell, PREV, at, if first { LINK } else { NEXT }, None);
                if !last {
                    b.grab(CURSOR, cell);
                } else {
                    // Park the copy head back at the payload start, and the
                    // cursor back on the hub site-last holds.
                    if let Some(start) = b.new[F_A as usize] {
                        b.grab(F_B, start);
                    }
                    if !first {
                        if let Some(hub) = b.new[SITE_LAST as usize] {
                            b.grab(CURSOR, hub);
                        }
                    }
                }
                b.im
            }

            Mode::Done | Mode::Fault(_) => freeze(mode),
        }
    }
}

/// The construction-machine rule for source signature `src`, able to carry
/// payload text `fs`.  Radius 2: every decision reads at most the hooked
/// vertices, their labels, and one step beyond.
pub fn machine_rule(src: &Arc<Signature>, fs: &str) -> Result<LocalRule, MachineError> {
    let sig = machine_signature(src, fs)?;
    let machine = Machine::prepare(src, &sig)?;
    let bound = src.degree() as usize + 16;
    let src = src.clone();
    Ok(LocalRule::native("construction-machine", sig, 2, bound, move |disk| {
        Ok(machine.image(disk, &src))
    }))
}

// ---------------------------------------------------------------------------
// Assembly, running, extraction
// ---------------------------------------------------------------------------

/// A machine wired up and ready to run: the initial graph (pointed at the
/// machine vertex) plus its rule.
pub struct MachineConfig {
    graph: CayleyGraph,
    rule: LocalRule,
    src: Arc<Signature>,
    tokens: usize,
}

impl MachineConfig {
    pub fn graph(&self) -> &CayleyGraph {
        &self.graph
    }

    pub fn rule(&self) -> &LocalRule {
        &self.rule
    }

    pub fn source_signature(&self) -> &Arc<Signature> {
        &self.src
    }

    /// How many description tokens sit on the input tape.
    pub fn token_count(&self) -> usize {
        self.tokens
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MachineStatus {
    /// The step budget ran out first.
    Running,
    Done,
    /// The machine froze on a structurally impossible description.
    Fault(String),
}

/// A finished (or interrupted) run.
pub struct MachineOutcome {
    pub status: MachineStatus,
    pub graph: CayleyGraph,
    pub steps: usize,
}

/// Wires up a machine that will build the graph described by `xs` (a
/// string-codec description over `src`) while depositing the payload text
/// `fs` on every vertex it creates.
pub fn assemble(
    xs: &str,
    fs: &str,
    src: &Arc<Signature>,
) -> Result<MachineConfig, MachineError> {
    let tokens = lex(xs, src)?;
    if tokens.is_empty() {
        return Err(MachineError::Parse("the description is empty".into()));
    }
    if !matches!(tokens[0], Token::Word(_)) {
        return Err(MachineError::Parse(
            "a description starts with a `$` word".into(),
        ));
    }
    let rule = machine_rule(src, fs)?;
    let sig = rule.sig().clone();
    let machine = Machine::prepare(src, &sig)?;
    let chunks = payload_lines(fs);

    let n = 1 + tokens.len() + chunks.len();
    let mut adj: Vec<Vec<Option<(usize, Port)>>> = vec![vec![None; DEGREE as usize]; n];
    let mut labels: Vec<Option<LabelId>> = vec![None; n];
    let connect = |adj: &mut Vec<Vec<Option<(usize, Port)>>>, a: usize, pa: Port, b: usize, pb: Port| {
        adj[a][pa as usize] = Some((b, pb));
        adj[b][pb as usize] = Some((a, pa));
    };

    labels[0] = Some(machine.id(&mode_label(Mode::Ready, src)));
    let x0 = 1;
    for (i, t) in tokens.iter().enumerate() {
        labels[x0 + i] = Some(machine.id(&format!("x{}", escape(&token_text(*t, src))?)));
        if i > 0 {
            connect(&mut adj, x0 + i - 1, NEXT, x0 + i, PREV);
        }
    }
    connect(&mut adj, 0, X_IN, x0, HOOK_A);
    let f0 = x0 + tokens.len();
    for (i, line) in chunks.iter().enumerate() {
        labels[f0 + i] = Some(machine.id(&format!("f{}", escape(line)?)));
        if i > 0 {
            connect(&mut adj, f0 + i - 1, NEXT, f0 + i, PREV);
        }
    }
    if !chunks.is_empty() {
        connect(&mut adj, 0, F_A, f0, HOOK_A);
        connect(&mut adj, 0, F_B, f0, HOOK_B);
    }

    let (graph, _) = CayleyGraph::assemble_canonical(&sig, 0, &adj, &labels, &[])
        .expect("tapes are connected to the machine");
    Ok(MachineConfig { graph, rule, src: src.clone(), tokens: tokens.len() })
}

/// Runs the machine until it is done, faults, or `max_steps` elapse.
/// Engine-level failures (which would mean a bug in the rule itself, or a
/// hand-crafted starting graph) surface as errors.
pub fn run_machine(
    config: &MachineConfig,
    max_steps: usize,
) -> Result<MachineOutcome, MachineError> {
    let machine = Machine::prepare(&config.src, config.rule.sig())?;
    let mut graph = config.graph.clone();
    let mut steps = 0;
    loop {
        // The machine claims the origin's successor, so it is vertex 0.
        match machine.ctrl(graph.vlabel(0)) {
            Some(Mode::Done) => {
                return Ok(MachineOutcome { status: MachineStatus::Done, graph, steps })
            }
            Some(Mode::Fault(why)) => {
                return Ok(MachineOutcome {
                    status: MachineStatus::Fault(why.to_string()),
                    graph,
                    steps,
                })
            }
            Some(_) => {}
            None => {
                return Err(MachineError::NotDone(
                    "the pointed vertex is not the machine".into(),
                ))
            }
        }
        if steps == max_steps {
            return Ok(MachineOutcome { status: MachineStatus::Running, graph, steps });
        }
        graph = apply_step(&config.rule, &graph)?;
        steps += 1;
    }
}

/// The construction site of a finished run: root ring and everything
/// reachable through ring edges, payload chains included, pointed at the
/// root hub.  Still over the machine signature.
pub fn extract(outcome: &MachineOutcome) -> Result<CayleyGraph, MachineError> {
    let (root, site) = site_of(outcome)?;
    let g = &outcome.graph;
    let mut keep = vec![false; g.vertex_count()];
    for &v in &site {
        keep[v as usize] = true;
    }
    // Payload chains hang under hubs via their link port.
    let mut queue: Vec<VertexId> = site.clone();
    while let Some(v) = queue.pop() {
        for p in [PREV, NEXT, LINK] {
            if let Some((w, _)) = g.across(v, p) {
                if !keep[w as usize] && is_payload(g, w) {
                    keep[w as usize] = true;
                    queue.push(w);
                }
            }
        }
    }
    Ok(g.keep_only(root, |v| keep[v as usize]))
}

/// The finished graph itself, decoded back over the source signature.
pub fn extract_plain(
    outcome: &MachineOutcome,
    src: &Arc<Signature>,
) -> Result<CayleyGraph, MachineError> {
    let (root, site) = site_of(outcome)?;
    let g = &outcome.graph;
    let mut keep = vec![false; g.vertex_count()];
    for &v in &site {
        keep[v as usize] = true;
    }
    let stripped = g.keep_only(root, |v| keep[v as usize]);

    // Re-house the ring over the ring signature: the machine signature
    // lists the ring labels first, so ids carry over unchanged.
    let rsig = ring_signature(src);
    let d = rsig.degree() as usize;
    let limit = (rsig.vlabels().len()) as LabelId;
    let mut adj = vec![vec![None; d]; stripped.vertex_count()];
    let mut labels = vec![None; stripped.vertex_count()];
    let mut elabels = Vec::new();
    for v in stripped.vertices() {
        match stripped.vlabel(v) {
            Some(l) if l < limit => labels[v as usize] = Some(l),
            other => {
                return Err(MachineError::NotDone(format!(
                    "site vertex {v} carries a non-ring label {other:?}"
                )))
            }
        }
        for p in 0..DEGREE {
            if let Some((w, q)) = stripped.across(v, p) {
                if p as usize >= d || q as usize >= d {
                    return Err(MachineError::NotDone(format!(
                        "site vertex {v} still uses machine port {p}"
                    )));
                }
                adj[v as usize][p as usize] = Some((w as usize, q));
                if let Some(l) = stripped.elabel_at(v, p) {
                    if (v, p) <= (w, q) {
                        elabels.push(((v as usize, p), l));
                    }
                }
            }
        }
    }
    let (ring, _) = CayleyGraph::assemble_canonical(&rsig, 0, &adj, &labels, &elabels)
        .ok_or_else(|| MachineError::NotDone("the site fell apart".into()))?;
    Ok(ring_decode(&ring, src)?)
}

/// The payload text deposited on each constructed vertex, in the canonical
/// vertex order of [`extract_plain`].
pub fn payloads(outcome: &MachineOutcome) -> Result<Vec<String>, MachineError> {
    let (root, site) = site_of(outcome)?;
    let g = &outcome.graph;
    // Hubs in the order extract_plain numbers them: canonical BFS from the
    // root over the site, taking hubs as they appear.
    let order = {
        let mut keep = vec![false; g.vertex_count()];
        for &v in &site {
            keep[v as usize] = true;
        }
        g.keep_order(root, |v| keep[v as usize])
    };
    let mut out = Vec::new();
    for v in order {
        if !is_hub_label(g, v) {
            continue;
        }
        let mut text = String::new();
        let mut cell = g.across(v, LINK).map(|(w, _)| w);
        let mut first = true;
        while let Some(c) = cell {
            if !is_payload(g, c) {
                break;
            }
            let name = g.sig().vlabel_name(g.vlabel(c).expect("payload cells are labeled"));
            if !first {
                text.push('\n');
            }
            text.push_str(&unescape(&name[1..])?);
            first = false;
            cell = g.across(c, NEXT).map(|(w, _)| w);
        }
        out.push(text);
    }
    Ok(out)
}

fn is_hub_label(g: &CayleyGraph, v: VertexId) -> bool {
    g.vlabel(v).is_some_and(|l| {
        let name = g.sig().vlabel_name(l);
        name == "VERTEX" || name.starts_with("VERTEX/")
    })
}

fn is_ring_label(g: &CayleyGraph, v: VertexId) -> bool {
    is_hub_label(g, v) || g.vlabel(v).is_some_and(|l| g.sig().vlabel_name(l) == "PORT")
}

fn is_payload(g: &CayleyGraph, v: VertexId) -> bool {
    g.vlabel(v)
        .is_some_and(|l| g.sig().vlabel_name(l).starts_with('f'))
}

/// Locates the root hub (through the unique anchor edge) and collects the
/// ring-labeled vertices of the finished site.
fn site_of(outcome: &MachineOutcome) -> Result<(VertexId, Vec<VertexId>), MachineError> {
    if outcome.status != MachineStatus::Done {
        return Err(MachineError::NotDone(format!(
            "the run ended {:?} after {} steps",
            outcome.status, outcome.steps
        )));
    }
    let g = &outcome.graph;
    let mut root = None;
    for v in g.vertices() {
        if let Some((_, q)) = g.across(v, ANCHOR) {
            if q == ANCHOR && is_hub_label(g, v) && root.replace(v).is_some() {
                return Err(MachineError::NotDone("two anchored roots".into()));
            }
        }
    }
    let Some(root) = root else {
        return Err(MachineError::NotDone("no anchored root ring".into()));
    };
    // The site is everything ring-labeled reachable over ring edges.
    let mut seen = vec![false; g.vertex_count()];
    let mut queue = vec![root];
    seen[root as usize] = true;
    let mut site = Vec::new();
    while let Some(v) = queue.pop() {
        site.push(v);
        for p in [PREV, NEXT, LINK] {
            if let Some((w, _)) = g.across(v, p) {
                if !seen[w as usize] && is_ring_label(g, w) {
                    seen[w as usize] = true;
                    queue.push(w);
                }
            }
        }
    }
    Ok((root, site))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::encodings::{rule_decode, rule_encode, string_encode};
    use crate::graph::single;
    use crate::rules::validate_rule_on;
    use rand::Rng;

    fn run_to_end(xs: &str, fs: &str, src: &Arc<Signature>) -> MachineOutcome {
        let config = assemble(xs, fs, src).expect("assembles");
        run_machine(&config, 10_000).expect("no engine faults")
    }

    #[test]
    fn escaping_is_invertible_on_codec_text() {
        for s in ["$\u{b7};(1,2)|", "DISK $0; NB 1 -> OUT", "a~b", "", "x:y,z"] {
            let esc = escape(s).unwrap();
            assert!(
                !esc.contains(|c: char| c.is_whitespace()
                    || matches!(c, '$' | '(' | ')' | ';' | '|' | ',' | ':' | '\u{b7}')),
                "{esc} still holds a delimiter"
            );
            assert_eq!(unescape(&esc).unwrap(), s);
        }
        assert!(escape("odd\u{a0}space").is_err());
    }

    #[test]
    fn a_single_blank_word_builds_one_ring_and_stops() {
        let src = Signature::unlabeled(2);
        let out = run_to_end("$\u{b7};", "", &src);
        assert_eq!(out.status, MachineStatus::Done);
        assert_eq!(out.steps, 3);
        let built = extract_plain(&out, &src).unwrap();
        assert_eq!(built, single(&src, None).unwrap());
    }

    #[test]
    fn a_labeled_word_labels_the_ring() {
        let src = Signature::with_vlabels(3, vec!["a", "b"]);
        let out = run_to_end("$b;", "", &src);
        assert_eq!(out.status, MachineStatus::Done);
        let built = extract_plain(&out, &src).unwrap();
        assert_eq!(built, single(&src, Some(1)).unwrap());
    }

    #[test]
    fn bystanders_far_from_the_machine_change_nothing() {
        // A machine-signature graph with no machine on it is a fixed point.
        let src = Signature::with_vlabels(2, vec!["0", "1"]);
        let rule = machine_rule(&src, "").unwrap();
        let sig = rule.sig().clone();
        let mut rng = corpus::rng(0xb1d);
        for _ in 0..10 {
            let (g, p) = corpus::random_named(&mut rng, &src, 6, 1, 0.8, 0.0);
            let x = CayleyGraph::canonicalize(&g, &p).unwrap();
            let y = crate::encodings::ring_encode(&x);
            // Lift the 3-port ring graph into the 7-port machine signature;
            // ring labels keep their ids there.
            let n = y.vertex_count();
            let mut adj = vec![vec![None; DEGREE as usize]; n];
            let mut labels = vec![None; n];
            for v in y.vertices() {
                labels[v as usize] = y.vlabel(v);
                for p in 0..3 {
                    adj[v as usize][p as usize] =
                        y.across(v, p).map(|(w, q)| (w as usize, q));
                }
            }
            let (lifted, _) =
                CayleyGraph::assemble_canonical(&sig, 0, &adj, &labels, &[]).unwrap();
            let stepped = apply_step(&rule, &lifted).unwrap();
            assert_eq!(stepped, lifted);
        }
    }

    #[test]
    fn the_machine_rebuilds_what_the_string_codec_wrote() {
        let full = Signature::new(
            vec!["1".to_string(), "2".to_string()],
            vec!["0".to_string(), "1".to_string()],
            vec!["u".to_string(), "v".to_string()],
        )
        .unwrap();
        let sigs = [Signature::unlabeled(1), Signature::unlabeled(3), full];
        let mut rng = corpus::rng(0xc0de);
        for round in 0..24 {
            let src = &sigs[round % sigs.len()];
            let n = rng.gen_range(1..=8);
            let extra = rng.gen_range(0..=n / 2);
            let (g, p) = corpus::random_named(&mut rng, src, n, extra, 0.6, 0.6);
            let x = CayleyGraph::canonicalize(&g, &p).unwrap();
            let xs = string_encode(&x);
            let out = run_to_end(&xs, "", src);
            assert_eq!(out.status, MachineStatus::Done, "description {xs}");
            let built = extract_plain(&out, src).unwrap();
            assert_eq!(built, x, "description {xs}");
        }
    }

    #[test]
    fn payload_lines_ride_along_uncorrupted() {
        let src = Signature::unlabeled(2);
        let fs = "first line: with (reserved); chars\nsecond | line\n\nlast $\u{b7}";
        let sigs_graph = {
            let mut rng = corpus::rng(7);
            let (g, p) = corpus::random_named(&mut rng, &src, 5, 1, 0.0, 0.0);
            CayleyGraph::canonicalize(&g, &p).unwrap()
        };
        let xs = string_encode(&sigs_graph);
        let out = run_to_end(&xs, fs, &src);
        assert_eq!(out.status, MachineStatus::Done);
        assert_eq!(extract_plain(&out, &src).unwrap(), sigs_graph);
        let texts = payloads(&out).unwrap();
        assert_eq!(texts.len(), sigs_graph.vertex_count());
        for t in texts {
            assert_eq!(t, fs);
        }
    }

    #[test]
    fn a_rule_file_survives_the_trip_and_still_parses() {
        let src = Signature::unlabeled(2);
        let carried = crate::rules::builtin("turtle").unwrap();
        let fs = rule_encode(&carried).unwrap();
        let fs = fs.trim_end().to_string();
        let x = crate::graph::cycle_n(&src, 4).unwrap();
        let out = run_to_end(&string_encode(&x), &fs, &src);
        assert_eq!(out.status, MachineStatus::Done);
        assert_eq!(extract_plain(&out, &src).unwrap(), x);
        for text in payloads(&out).unwrap() {
            assert_eq!(text, fs);
            let back = rule_decode(&text).unwrap();
            assert!(crate::encodings::rules_equivalent(&back, &carried));
        }
    }

    #[test]
    fn impossible_descriptions_freeze_the_machine_in_a_fault() {
        let src = Signature::unlabeled(2);
        let fault_of = |xs: &str| -> String {
            let out = run_to_end(xs, "", &src);
            match out.status {
                MachineStatus::Fault(why) => why,
                other => panic!("{xs} ended {other:?}"),
            }
        };
        // A climb with no history at all.
        assert_eq!(fault_of("$\u{b7}(1,2)|;"), "backtrack-past-root");
        // Two climbs where only one record exists.
        assert_eq!(fault_of("$\u{b7};(1,2)$\u{b7}(1,2)||;"), "backtrack-past-root");
        // A loop folded onto one port.
        assert_eq!(fault_of("$\u{b7}(1,1);"), "port-clash");
        // A back edge onto the port the tree edge occupies.
        assert_eq!(fault_of("$\u{b7};(1,1)$\u{b7}(1,1)|;"), "port-in-use");
        // A bar where no pair is pending.
        assert_eq!(fault_of("$\u{b7}|;"), "stray-bar");
        // A path step that retraces nothing.
        assert_eq!(fault_of("$\u{b7};(1,1)$\u{b7};(1,2)(2,1)$\u{b7};"), "bad-climb");
    }

    #[test]
    fn garbage_cannot_even_be_assembled() {
        let src = Signature::unlabeled(2);
        for xs in ["", "(1,2)$\u{b7};", "$x;", "$\u{b7};(9,1)$\u{b7};", "$\u{b7};(1", "!"] {
            assert!(
                assemble(xs, "", &src).is_err(),
                "{xs:?} should not assemble"
            );
        }
        // Unsupported whitespace in the payload.
        assert!(assemble("$\u{b7};", "bad\u{a0}line", &src).is_err());
    }

    #[test]
    fn the_machine_stays_pointed_and_the_tape_survives() {
        let src = Signature::unlabeled(2);
        let x = crate::graph::cycle_n(&src, 5).unwrap();
        let xs = string_encode(&x);
        let config = assemble(&xs, "one line", &src).unwrap();
        let machine = Machine::prepare(&src, config.rule().sig()).unwrap();
        let x_cells = |g: &CayleyGraph| {
            g.vertices()
                .filter(|&v| {
                    matches!(machine.kind(g.vlabel(v)), Some(Kind::X(_)))
                })
                .count()
        };
        let on_tape = x_cells(config.graph());
        let mut g = config.graph().clone();
        for _ in 0..200 {
            if matches!(machine.ctrl(g.vlabel(0)), Some(Mode::Done | Mode::Fault(_))) {
                break;
            }
            g = apply_step(config.rule(), &g).unwrap();
            assert!(machine.ctrl(g.vlabel(0)).is_some(), "vertex 0 must stay the machine");
            // Tape cells are never destroyed, only stack records are.
            assert!(x_cells(&g) >= on_tape);
        }
        assert!(matches!(machine.ctrl(g.vlabel(0)), Some(Mode::Done)));
    }

    #[test]
    fn the_rule_is_locally_valid_on_its_own_run() {
        let src = Signature::unlabeled(2);
        let x = crate::graph::line_n(&src, 3).unwrap();
        let config = assemble(&string_encode(&x), "p", &src).unwrap();
        let mut witnesses = vec![config.graph().clone()];
        let mut g = config.graph().clone();
        for _ in 0..8 {
            g = apply_step(config.rule(), &g).unwrap();
            witnesses.push(g.clone());
        }
        let report = validate_rule_on(config.rule(), &witnesses).unwrap();
        assert!(report.all_pass(), "{report:?}");
    }

    #[test]
    fn step_counts_scale_with_the_description() {
        let src = Signature::unlabeled(3);
        let mut rng = corpus::rng(0x57e9);
        for _ in 0..6 {
            let (g, p) = corpus::random_named(&mut rng, &src, 8, 2, 0.0, 0.0);
            let x = CayleyGraph::canonicalize(&g, &p).unwrap();
            let xs = string_encode(&x);
            let config = assemble(&xs, "", &src).unwrap();
            let out = run_machine(&config, 10_000).unwrap();
            assert_eq!(out.status, MachineStatus::Done);
            // Generous linear bound: every token costs at most a walk
            // across one ring plus a constant.
            let per_token = 3 * (src.degree() as usize + 2);
            assert!(
                out.steps <= per_token * config.token_count() + 2,
                "{} steps for {} tokens",
                out.steps,
                config.token_count()
            );
        }
    }
}
