//! Serialization of graphs and rules.
//!
//! Three codecs live here:
//!
//! * [`string_encode`] / [`string_decode`] — a depth-first linearization of a
//!   pointed graph over the alphabet `π² ∪ {$, ;, |} ∪ Σ`.  One word per
//!   vertex in visit order: `$`, the vertex label, one `(i,j)` pair per edge
//!   back to an earlier vertex (with one `|` per climb needed to reach it),
//!   `;`, then the port pairs walked to the next visited vertex.
//! * [`ring_encode`] / [`ring_decode`] — an unlabeling of sorts: every vertex
//!   of degree `d` becomes a ring of `d + 1` vertices (one `VERTEX` hub plus
//!   one `PORT` vertex per port), and every edge becomes a `neighbor` edge
//!   between the two `PORT` vertices involved.  The result is a degree-3
//!   graph whatever the input degree.
//! * [`rule_encode`] / [`rule_decode`] — a line-per-entry serialization of a
//!   rule table; outputs are ring-encoded then string-encoded, and each
//!   output vertex carries its name, a travel tape, and an inheritance mark.
//!
//! # Text grammar
//!
//! Port pairs are written with 1-based port indices: `(1,1)` joins the first
//! port of each endpoint, whatever the ports are named.  Labels are written
//! by name; an unlabeled vertex shows the blank label `·`.  An edge label
//! rides inside the pair that creates the edge: `(i,j:name)`.  Climb pairs
//! re-walk existing edges and never carry labels.
//!
//! Graph files are two lines:
//!
//! ```text
//! cgd-graph v1 ports=<d> vlabels=<a,b,..> elabels=<..>
//! $<label><back edges>;<path>$<label>...
//! ```
//!
//! Rule files are a header line followed by one line per table entry:
//!
//! ```text
//! cgd-rule v1 ports=<d> vlabels=<..> elabels=<..> radius=<r> bound=<b> name=<name>
//! DISK <graph> NB <bits> -> OUT <graph> NAMES <set>.. ADDR <tape>.. INH <marks>
//! ```
//!
//! All tokens are whitespace-free; fields on a rule line are single-space
//! separated.

mod ring;
mod string;
mod rule;

pub use ring::{ring_decode, ring_encode, ring_signature};
pub use rule::{rule_decode, rule_encode, rules_equivalent};
pub use string::{read_graph_file, string_decode, string_encode, write_graph_file};

use crate::graph::GraphError;
use crate::rules::RuleError;
use thiserror::Error;

/// Failures shared by the codecs.
#[derive(Debug, Error)]
pub enum CodecError {
    /// The input text does not match the grammar.  `pos` is a byte offset
    /// into the input.
    #[error("parse error at byte {pos}: expected {expected}")]
    Parse { pos: usize, expected: String },
    /// The input parses but describes an impossible graph.
    #[error("invalid content at byte {pos}: {what}")]
    Semantic { pos: usize, what: String },
    /// A ring-encoded graph violates the ring structure.
    #[error("malformed ring encoding: {0}")]
    MalformedRing(String),
    /// A rule file describes a rule that fails structural or validity checks.
    #[error("invalid rule: {0}")]
    InvalidRule(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Rule(#[from] RuleError),
}
