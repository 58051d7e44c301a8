//! Engine for causal graph dynamics: synchronous rewriting of bounded-degree
//! port graphs by local rules.
//!
//! The model works on connected pointed port graphs considered modulo
//! pointer-preserving isomorphism ([`graph::CayleyGraph`]). A [`rules::LocalRule`]
//! maps the neighborhood of every vertex to a small replacement graph; one
//! synchronous step glues all replacements together ([`rules::apply_step`]).
//!
//! On top of the engine sit:
//! - [`reductions`]: compilation of arbitrary rules down to radius-1 and
//!   label-free rules, with checkable step-for-step simulations,
//! - [`encodings`]: ring, string and rule-table codecs,
//! - [`constructor`]: an in-model machine that reads a string encoding and
//!   builds the encoded graph, seeding every built vertex with a rule payload,
//! - [`arith`]: dense integer ranking of graphs and rule tables,
//! - [`hereditary`]: embedding of one-dimensional cellular automata.

pub mod arith;
pub mod constructor;
pub mod corpus;
pub mod encodings;
pub mod graph;
pub mod hereditary;
pub mod reductions;
pub mod rules;

pub use encodings::CodecError;
pub use graph::{CayleyGraph, GraphError, NamedGraph, Path, PathStep, Port, Signature};
pub use reductions::{normal_form, verify_simulation, ReductionError, SimulationMap};
pub use rules::{apply_step, run, LocalRule, RuleError};
