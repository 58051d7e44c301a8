//! Builders for the small standard graphs used throughout the tests and CLI.

use std::sync::Arc;

use super::named::NamedGraph;
use super::{CayleyGraph, GraphError, LabelId, Signature, VName};

/// The one-vertex graph.
pub fn single(sig: &Arc<Signature>, label: Option<LabelId>) -> Result<CayleyGraph, GraphError> {
    let mut g = NamedGraph::new(sig.clone());
    g.add_vertex(VName::of("v0"), label)?;
    CayleyGraph::canonicalize(&g, &VName::of("v0"))
}

/// The two-vertex degree-1 graph: one edge joining port 0 to port 0.
pub fn pair(
    sig: &Arc<Signature>,
    labels: [Option<LabelId>; 2],
    elabel: Option<LabelId>,
) -> Result<CayleyGraph, GraphError> {
    let mut g = NamedGraph::new(sig.clone());
    g.add_vertex(VName::of("v0"), labels[0])?;
    g.add_vertex(VName::of("v1"), labels[1])?;
    g.add_edge((VName::of("v0"), 0), (VName::of("v1"), 0), elabel)?;
    CayleyGraph::canonicalize(&g, &VName::of("v0"))
}

fn chain(
    sig: &Arc<Signature>,
    labels: &[Option<LabelId>],
    close: bool,
) -> Result<CayleyGraph, GraphError> {
    let n = labels.len();
    if n == 0 {
        return Err(GraphError::BadValue("empty vertex list".into()));
    }
    let name = |i: usize| VName::of(format!("v{i}"));
    let mut g = NamedGraph::new(sig.clone());
    for (i, &l) in labels.iter().enumerate() {
        g.add_vertex(name(i), l)?;
    }
    // Oriented convention: port 1 of each vertex points at port 0 of the next.
    for i in 0..n.saturating_sub(1) {
        g.add_edge((name(i), 1), (name(i + 1), 0), None)?;
    }
    if close {
        g.add_edge((name(n - 1), 1), (name(0), 0), None)?;
    }
    CayleyGraph::canonicalize(&g, &name(0))
}

/// A path of `labels.len()` vertices linked port 1 → port 0, pointed at one end.
pub fn line(sig: &Arc<Signature>, labels: &[Option<LabelId>]) -> Result<CayleyGraph, GraphError> {
    chain(sig, labels, false)
}

/// A cycle of `labels.len()` vertices linked port 1 → port 0.
/// `n = 1` yields the self-loop, `n = 2` the doubly-linked pair.
pub fn cycle(sig: &Arc<Signature>, labels: &[Option<LabelId>]) -> Result<CayleyGraph, GraphError> {
    chain(sig, labels, true)
}

/// Unlabeled line of `n` vertices.
pub fn line_n(sig: &Arc<Signature>, n: usize) -> Result<CayleyGraph, GraphError> {
    line(sig, &vec![None; n])
}

/// Unlabeled cycle of `n` vertices.
pub fn cycle_n(sig: &Arc<Signature>, n: usize) -> Result<CayleyGraph, GraphError> {
    cycle(sig, &vec![None; n])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cycle_one_is_a_loop() {
        let sig = Signature::unlabeled(2);
        let x = cycle_n(&sig, 1).unwrap();
        assert_eq!(x.vertex_count(), 1);
        assert_eq!(x.across(0, 1), Some((0, 0)));
        assert_eq!(x.across(0, 0), Some((0, 1)));
    }

    #[test]
    fn cycle_two_uses_both_ports() {
        let sig = Signature::unlabeled(2);
        let x = cycle_n(&sig, 2).unwrap();
        assert_eq!(x.vertex_count(), 2);
        assert_eq!(x.edge_count(), 2);
        assert_eq!(x.across(0, 1), Some((1, 0)));
        assert_eq!(x.across(0, 0), Some((1, 1)));
    }

    #[test]
    fn line_endpoints_have_free_ports() {
        let sig = Signature::unlabeled(2);
        let x = line_n(&sig, 4).unwrap();
        assert_eq!(x.vertex_count(), 4);
        assert_eq!(x.degree_of(0), 1);
        let far = x.vertices().filter(|&v| x.degree_of(v) == 1).count();
        assert_eq!(far, 2);
    }
}
