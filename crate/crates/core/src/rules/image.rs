//! Replacement graphs produced by local rules.

use std::collections::{BTreeSet, HashSet};
use std::sync::Arc;

use crate::graph::{LabelId, Path, Port, Signature, Suffix};

use super::RuleError;

/// One vertex of an image: a nonempty set of `(path, suffix)` atoms naming it
/// plus an optional label.  The suffix picks which successor of the vertex
/// the path reaches is meant; suffix 0 is "the" successor.  Listing several
/// atoms makes the step identify the corresponding successors.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ImageVertex {
    pub atoms: BTreeSet<(Path, Suffix)>,
    pub label: Option<LabelId>,
}

/// The replacement graph a rule produces for one observed neighborhood.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct ImageGraph {
    vertices: Vec<ImageVertex>,
    /// `(vertex index, port, vertex index, port, label)`.
    edges: Vec<(usize, Port, usize, Port, Option<LabelId>)>,
}

impl ImageGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a vertex named by `atoms`; returns its index.
    pub fn add_vertex(
        &mut self,
        atoms: impl IntoIterator<Item = (Path, Suffix)>,
        label: Option<LabelId>,
    ) -> usize {
        self.vertices.push(ImageVertex { atoms: atoms.into_iter().collect(), label });
        self.vertices.len() - 1
    }

    pub fn add_edge(&mut self, a: usize, pa: Port, b: usize, pb: Port, label: Option<LabelId>) {
        self.edges.push((a, pa, b, pb, label));
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertices(&self) -> &[ImageVertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[(usize, Port, usize, Port, Option<LabelId>)] {
        &self.edges
    }

    /// Index of the vertex whose name contains `(ε, 0)`, if any.
    pub fn origin_vertex(&self) -> Option<usize> {
        let origin = (Path::empty(), 0);
        self.vertices.iter().position(|v| v.atoms.contains(&origin))
    }

    /// Equality up to vertex reordering.  Vertex names (atom sets) carry the
    /// identity, so two images are the same whenever they assign the same
    /// labels to the same names and connect the same named ports.
    pub fn equivalent(&self, other: &ImageGraph) -> bool {
        let sides = |g: &ImageGraph| {
            let verts: std::collections::BTreeMap<_, _> =
                g.vertices.iter().map(|v| (v.atoms.clone(), v.label)).collect();
            let mut edges = std::collections::BTreeSet::new();
            for &(a, pa, b, pb, l) in &g.edges {
                let x = (g.vertices[a].atoms.clone(), pa);
                let y = (g.vertices[b].atoms.clone(), pb);
                edges.insert((x.clone().min(y.clone()), x.max(y), l));
            }
            (verts, edges)
        };
        self.vertices.len() == other.vertices.len() && sides(self) == sides(other)
    }

    /// Structural sanity independent of any host graph: indices and ports in
    /// range, labels drawn from the signature, nonempty names, each port used
    /// by at most one edge.  Name disjointness and origin presence are rule
    /// *validity* conditions, checked by validation, not here.
    pub fn check_structure(&self, sig: &Arc<Signature>) -> Result<(), RuleError> {
        let mut used: HashSet<(usize, Port)> = HashSet::new();
        for (i, v) in self.vertices.iter().enumerate() {
            if v.atoms.is_empty() {
                return Err(RuleError::BadImage(format!("vertex {i} has an empty name")));
            }
            if let Some(l) = v.label {
                if l as usize >= sig.vlabels().len() {
                    return Err(RuleError::BadImage(format!("vertex label {l} out of range")));
                }
            }
        }
        for &(a, pa, b, pb, l) in &self.edges {
            for (v, p) in [(a, pa), (b, pb)] {
                if v >= self.vertices.len() {
                    return Err(RuleError::BadImage(format!("edge endpoint {v} out of range")));
                }
                sig.check_port(p)
                    .map_err(|e| RuleError::BadImage(e.to_string()))?;
                if !used.insert((v, p)) {
                    return Err(RuleError::BadImage(format!("port {v}:{p} used twice")));
                }
            }
            if (a, pa) == (b, pb) {
                return Err(RuleError::BadImage("edge attached to one port twice".into()));
            }
            if let Some(l) = l {
                if l as usize >= sig.elabels().len() {
                    return Err(RuleError::BadImage(format!("edge label {l} out of range")));
                }
            }
        }
        Ok(())
    }
}
