//! Port graphs with named vertices and their canonical pointed form.
//!
//! A graph over a signature (ports pi, vertex labels Sigma, edge labels Delta)
//! has edges that are unordered pairs of port attachments `{u:a, v:b}`; each
//! `(vertex, port)` pair carries at most one edge, so degrees never exceed
//! `|pi|`. Vertex and edge labelings are partial.
//!
//! Two layers of representation:
//! - [`NamedGraph`]: vertices carry explicit names (sets of atoms), the form
//!   used to state consistency and to glue rule outputs together.
//! - [`CayleyGraph`]: a connected pointed graph in canonical form, the value
//!   on which the dynamics acts. Vertices are identified with the
//!   lexicographically least port path reaching them from the pointer, so
//!   structural equality decides pointer-preserving isomorphism.

pub mod build;
mod cayley;
mod named;
pub mod oracle;

pub use build::{cycle, cycle_n, line, line_n, pair, single};
pub use cayley::CayleyGraph;
pub(crate) use cayley::canonical_order;
pub use named::{Consistency, Edge, NamedGraph};

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

/// Port index into a signature's port list.
pub type Port = u8;
/// Index into a signature's vertex- or edge-label list.
pub type LabelId = u16;
/// Vertex index inside a [`CayleyGraph`]; 0 is always the pointer.
pub type VertexId = u32;
/// Successor index inside an atom; 0 stands for the plain continuation.
pub type Suffix = u16;

/// Errors raised by graph construction and the core operations.
#[derive(Debug, Error)]
pub enum GraphError {
    #[error("signature mismatch: {0}")]
    SignatureMismatch(String),
    #[error("no such vertex: {0}")]
    NoSuchVertex(String),
    #[error("port conflict: {0}")]
    PortConflict(String),
    #[error("graph is not connected from the pointer")]
    DisconnectedGraph,
    #[error("inconsistent union: {0}")]
    InconsistentUnion(String),
    #[error("vertex name overlaps an existing one: {0}")]
    NameClash(String),
    #[error("{0}")]
    BadValue(String),
}

/// Characters that may not appear in signature tokens because the text codec
/// uses them as punctuation.
const RESERVED: &[char] = &['$', '(', ')', ';', '|', ',', ':', '\u{b7}'];

/// A signature fixes the port set and the label alphabets. Ports and labels
/// are referred to by index everywhere; the token strings only matter for
/// serialization.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Signature {
    ports: Vec<String>,
    vlabels: Vec<String>,
    elabels: Vec<String>,
}

impl Signature {
    pub fn new<S: Into<String>>(
        ports: Vec<S>,
        vlabels: Vec<S>,
        elabels: Vec<S>,
    ) -> Result<Arc<Self>, GraphError> {
        let sig = Signature {
            ports: ports.into_iter().map(Into::into).collect(),
            vlabels: vlabels.into_iter().map(Into::into).collect(),
            elabels: elabels.into_iter().map(Into::into).collect(),
        };
        for group in [&sig.ports, &sig.vlabels, &sig.elabels] {
            for tok in group {
                if tok.is_empty()
                    || tok.chars().any(|c| c.is_whitespace() || RESERVED.contains(&c))
                {
                    return Err(GraphError::BadValue(format!("bad token {tok:?}")));
                }
            }
            let mut seen = BTreeSet::new();
            for tok in group {
                if !seen.insert(tok) {
                    return Err(GraphError::BadValue(format!("duplicate token {tok:?}")));
                }
            }
        }
        if sig.ports.len() > 64 {
            return Err(GraphError::BadValue("too many ports".into()));
        }
        Ok(Arc::new(sig))
    }

    /// Signature with `d` ports named `1..d` and no labels.
    pub fn unlabeled(d: u8) -> Arc<Self> {
        Self::new((1..=d).map(|p| p.to_string()).collect(), vec![], vec![]).unwrap()
    }

    /// Signature with `d` numeric ports and the given vertex label tokens.
    pub fn with_vlabels<S: Into<String>>(d: u8, vlabels: Vec<S>) -> Arc<Self> {
        Self::new(
            (1..=d).map(|p| p.to_string()).collect(),
            vlabels.into_iter().map(Into::into).collect(),
            vec![],
        )
        .unwrap()
    }

    pub fn degree(&self) -> u8 {
        self.ports.len() as u8
    }

    pub fn ports(&self) -> &[String] {
        &self.ports
    }

    pub fn vlabels(&self) -> &[String] {
        &self.vlabels
    }

    pub fn elabels(&self) -> &[String] {
        &self.elabels
    }

    pub fn port_name(&self, p: Port) -> &str {
        &self.ports[p as usize]
    }

    pub fn port_id(&self, name: &str) -> Option<Port> {
        self.ports.iter().position(|t| t == name).map(|i| i as Port)
    }

    pub fn vlabel_name(&self, l: LabelId) -> &str {
        &self.vlabels[l as usize]
    }

    pub fn vlabel_id(&self, name: &str) -> Option<LabelId> {
        self.vlabels.iter().position(|t| t == name).map(|i| i as LabelId)
    }

    pub fn elabel_name(&self, l: LabelId) -> &str {
        &self.elabels[l as usize]
    }

    pub fn elabel_id(&self, name: &str) -> Option<LabelId> {
        self.elabels.iter().position(|t| t == name).map(|i| i as LabelId)
    }

    pub fn check_port(&self, p: Port) -> Result<(), GraphError> {
        if p < self.degree() {
            Ok(())
        } else {
            Err(GraphError::BadValue(format!(
                "port {p} out of range for degree {}",
                self.degree()
            )))
        }
    }

    pub fn same(a: &Arc<Signature>, b: &Arc<Signature>) -> Result<(), GraphError> {
        if a == b {
            Ok(())
        } else {
            Err(GraphError::SignatureMismatch(format!(
                "({},{},{}) vs ({},{},{})",
                a.ports.len(),
                a.vlabels.len(),
                a.elabels.len(),
                b.ports.len(),
                b.vlabels.len(),
                b.elabels.len()
            )))
        }
    }
}

/// One traversal step: leave through `out`, arrive on `inp`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PathStep {
    pub out: Port,
    pub inp: Port,
}

impl PathStep {
    pub fn new(out: Port, inp: Port) -> Self {
        PathStep { out, inp }
    }

    /// The same edge crossed backwards.
    pub fn rev(self) -> Self {
        PathStep { out: self.inp, inp: self.out }
    }
}

/// A port path: the word of steps that reaches a vertex from the pointer.
/// Ordering is shortlex, which makes the least path of a vertex well defined.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Path(pub Vec<PathStep>);

impl Path {
    pub fn empty() -> Self {
        Path(Vec::new())
    }

    pub fn step(out: Port, inp: Port) -> Self {
        Path(vec![PathStep::new(out, inp)])
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn push(&mut self, s: PathStep) {
        self.0.push(s);
    }

    pub fn join(&self, other: &Path) -> Path {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Path(v)
    }

    /// The reverse walk: same edges crossed in the opposite order/direction.
    pub fn rev(&self) -> Path {
        Path(self.0.iter().rev().map(|s| s.rev()).collect())
    }
}

impl PartialOrd for Path {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Path {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0
            .len()
            .cmp(&other.0.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "e");
        }
        for s in &self.0 {
            write!(f, "({},{})", s.out, s.inp)?;
        }
        Ok(())
    }
}

/// Base of an atom: either an externally chosen vertex name or a port path.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Base {
    Name(String),
    Walk(Path),
}

/// An atom `u.z`: successor number `z` of the vertex reached by `u`.
/// `z = 0` is the plain continuation of that vertex.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub base: Base,
    pub suffix: Suffix,
}

impl Atom {
    pub fn named<S: Into<String>>(name: S) -> Self {
        Atom { base: Base::Name(name.into()), suffix: 0 }
    }

    pub fn walk(path: Path, suffix: Suffix) -> Self {
        Atom { base: Base::Walk(path), suffix }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.base {
            Base::Name(n) => write!(f, "{n}")?,
            Base::Walk(p) => write!(f, "{p}")?,
        }
        if self.suffix != 0 {
            write!(f, ".{}", self.suffix)?;
        }
        Ok(())
    }
}

/// A vertex name: a non-empty set of atoms. Distinct vertices of one graph
/// must carry disjoint sets; the glueing of rule outputs identifies vertices
/// whose sets intersect.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VName(pub BTreeSet<Atom>);

impl VName {
    pub fn of<S: Into<String>>(name: S) -> Self {
        VName(BTreeSet::from([Atom::named(name)]))
    }

    pub fn from_atoms<I: IntoIterator<Item = Atom>>(atoms: I) -> Self {
        VName(atoms.into_iter().collect())
    }

    pub fn atoms(&self) -> impl Iterator<Item = &Atom> {
        self.0.iter()
    }

    pub fn intersects(&self, other: &VName) -> bool {
        self.0.iter().any(|a| other.0.contains(a))
    }
}

impl fmt::Display for VName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, "}}")
    }
}
