//! Graphs with explicitly named vertices, plus consistency and union.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use super::{GraphError, LabelId, Port, Signature, VName};

/// An undirected edge between two port attachments, stored with its endpoints
/// in sorted order so equal edges compare equal.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub a: (VName, Port),
    pub b: (VName, Port),
}

impl Edge {
    pub fn new(x: (VName, Port), y: (VName, Port)) -> Self {
        if x <= y {
            Edge { a: x, b: y }
        } else {
            Edge { a: y, b: x }
        }
    }

    pub fn touches(&self, n: &VName) -> bool {
        &self.a.0 == n || &self.b.0 == n
    }
}

/// Outcome of comparing two graphs that may share vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Consistency {
    /// No vertex name of one graph intersects a name of the other.
    TriviallyConsistent,
    /// Some names intersect and the graphs agree on everything shared.
    Consistent,
    /// The merged graph would conflict; the string describes the first clash.
    Inconsistent(String),
}

/// A port graph whose vertices carry explicit names.
///
/// Invariants enforced by the mutators: names are pairwise disjoint atom
/// sets, every `(vertex, port)` pair hosts at most one edge, labels come from
/// the signature's alphabets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NamedGraph {
    sig: Arc<Signature>,
    vertices: BTreeMap<VName, Option<LabelId>>,
    edges: BTreeSet<Edge>,
    elabels: BTreeMap<Edge, LabelId>,
}

impl NamedGraph {
    pub fn new(sig: Arc<Signature>) -> Self {
        NamedGraph { sig, vertices: BTreeMap::new(), edges: BTreeSet::new(), elabels: BTreeMap::new() }
    }

    pub fn sig(&self) -> &Arc<Signature> {
        &self.sig
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertices(&self) -> impl Iterator<Item = (&VName, Option<LabelId>)> {
        self.vertices.iter().map(|(n, l)| (n, *l))
    }

    pub fn edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.iter()
    }

    pub fn elabel(&self, e: &Edge) -> Option<LabelId> {
        self.elabels.get(e).copied()
    }

    pub fn contains(&self, n: &VName) -> bool {
        self.vertices.contains_key(n)
    }

    pub fn vlabel(&self, n: &VName) -> Option<LabelId> {
        self.vertices.get(n).copied().flatten()
    }

    pub fn add_vertex(&mut self, name: VName, label: Option<LabelId>) -> Result<(), GraphError> {
        if name.0.is_empty() {
            return Err(GraphError::BadValue("empty vertex name".into()));
        }
        if let Some(l) = label {
            if l as usize >= self.sig.vlabels().len() {
                return Err(GraphError::BadValue(format!("vertex label {l} out of range")));
            }
        }
        if self.vertices.contains_key(&name) {
            return Err(GraphError::NameClash(name.to_string()));
        }
        for existing in self.vertices.keys() {
            if existing.intersects(&name) {
                return Err(GraphError::NameClash(format!("{name} overlaps {existing}")));
            }
        }
        self.vertices.insert(name, label);
        Ok(())
    }

    pub fn port_free(&self, n: &VName, p: Port) -> bool {
        !self.edges.iter().any(|e| e.a == (n.clone(), p) || e.b == (n.clone(), p))
    }

    pub fn edge_at(&self, n: &VName, p: Port) -> Option<&Edge> {
        self.edges
            .iter()
            .find(|e| (&e.a.0 == n && e.a.1 == p) || (&e.b.0 == n && e.b.1 == p))
    }

    /// The far end of the edge at `(n, p)`, if any.
    pub fn across(&self, n: &VName, p: Port) -> Option<(&VName, Port)> {
        let e = self.edge_at(n, p)?;
        if &e.a.0 == n && e.a.1 == p {
            Some((&e.b.0, e.b.1))
        } else {
            Some((&e.a.0, e.a.1))
        }
    }

    pub fn add_edge(
        &mut self,
        x: (VName, Port),
        y: (VName, Port),
        label: Option<LabelId>,
    ) -> Result<(), GraphError> {
        self.sig.check_port(x.1)?;
        self.sig.check_port(y.1)?;
        if x == y {
            return Err(GraphError::BadValue("edge with a single attachment".into()));
        }
        for (n, p) in [&x, &y] {
            if !self.vertices.contains_key(n) {
                return Err(GraphError::NoSuchVertex(n.to_string()));
            }
            if !self.port_free(n, *p) {
                return Err(GraphError::PortConflict(format!("{n}:{p}")));
            }
        }
        if let Some(l) = label {
            if l as usize >= self.sig.elabels().len() {
                return Err(GraphError::BadValue(format!("edge label {l} out of range")));
            }
        }
        let e = Edge::new(x, y);
        if let Some(l) = label {
            self.elabels.insert(e.clone(), l);
        }
        self.edges.insert(e);
        Ok(())
    }

    pub fn degree_of(&self, n: &VName) -> usize {
        self.edges
            .iter()
            .map(|e| (&e.a.0 == n) as usize + (&e.b.0 == n) as usize)
            .sum()
    }

    /// Compares `self` and `other` as partial descriptions of one graph.
    /// Vertices are identified transitively whenever their names share atoms.
    pub fn consistency(&self, other: &NamedGraph) -> Result<Consistency, GraphError> {
        Signature::same(&self.sig, &other.sig)?;
        let merged = Merge::build(&[self, other]);
        let shares = self.vertices.keys().any(|n| {
            other.vertices.keys().any(|m| n.intersects(m))
        });
        match merged.first_conflict() {
            Some(c) => Ok(Consistency::Inconsistent(c)),
            None if shares => Ok(Consistency::Consistent),
            None => Ok(Consistency::TriviallyConsistent),
        }
    }

    /// The merged graph; vertices with intersecting names pool their atoms.
    pub fn union(&self, other: &NamedGraph) -> Result<NamedGraph, GraphError> {
        Signature::same(&self.sig, &other.sig)?;
        let merged = Merge::build(&[self, other]);
        if let Some(c) = merged.first_conflict() {
            return Err(GraphError::InconsistentUnion(c));
        }
        Ok(merged.into_graph(self.sig.clone()))
    }
}

/// Union-find based merge of several graphs over one signature.
pub(crate) struct Merge {
    parent: Vec<usize>,
    names: Vec<VName>,
    /// Conflicting or agreeing labels per group: (label, description source).
    vlabels: HashMap<usize, LabelId>,
    vconflict: Option<String>,
    edges: BTreeSet<((usize, Port), (usize, Port))>,
    elabels: HashMap<((usize, Port), (usize, Port)), LabelId>,
    econflict: Option<String>,
    port_conflict: Option<String>,
}

impl Merge {
    pub(crate) fn build(graphs: &[&NamedGraph]) -> Merge {
        // Map every atom to a group; union groups that share a vertex name.
        let mut atom_group: HashMap<super::Atom, usize> = HashMap::new();
        let mut parent: Vec<usize> = Vec::new();
        let mut names: Vec<VName> = Vec::new();

        fn find(parent: &mut Vec<usize>, mut i: usize) -> usize {
            while parent[i] != i {
                parent[i] = parent[parent[i]];
                i = parent[i];
            }
            i
        }

        for g in graphs {
            for (name, _) in g.vertices() {
                let mut target: Option<usize> = None;
                for a in name.atoms() {
                    if let Some(&gid) = atom_group.get(a) {
                        let root = find(&mut parent, gid);
                        match target {
                            None => target = Some(root),
                            Some(t) if t != root => {
                                let t = find(&mut parent, t);
                                parent[root] = t;
                            }
                            _ => {}
                        }
                    }
                }
                let gid = match target {
                    Some(t) => find(&mut parent, t),
                    None => {
                        let id = parent.len();
                        parent.push(id);
                        names.push(VName(BTreeSet::new()));
                        id
                    }
                };
                for a in name.atoms() {
                    atom_group.insert(a.clone(), gid);
                }
            }
        }
        // Second pass: with the union-find settled, collect atoms, labels,
        // edges per root group.
        let mut m = Merge {
            parent: parent.clone(),
            names,
            vlabels: HashMap::new(),
            vconflict: None,
            edges: BTreeSet::new(),
            elabels: HashMap::new(),
            econflict: None,
            port_conflict: None,
        };
        let mut port_edges: HashMap<(usize, Port), ((usize, Port), (usize, Port))> = HashMap::new();
        for g in graphs {
            for (name, label) in g.vertices() {
                let gid = {
                    let &id = atom_group.get(name.atoms().next().unwrap()).unwrap();
                    find(&mut m.parent, id)
                };
                for a in name.atoms() {
                    m.names[gid].0.insert(a.clone());
                }
                if let Some(l) = label {
                    match m.vlabels.get(&gid) {
                        Some(&prev) if prev != l => {
                            m.vconflict.get_or_insert_with(|| {
                                format!("vertex {} labeled both {} and {}", m.names[gid], prev, l)
                            });
                        }
                        _ => {
                            m.vlabels.insert(gid, l);
                        }
                    }
                }
            }
            for e in g.edges() {
                let ga = find_group(&atom_group, &mut m.parent, &e.a.0);
                let gb = find_group(&atom_group, &mut m.parent, &e.b.0);
                let (x, y) = ((ga, e.a.1), (gb, e.b.1));
                let key = if x <= y { (x, y) } else { (y, x) };
                for end in [key.0, key.1] {
                    match port_edges.get(&end) {
                        Some(prev) if *prev != key => {
                            m.port_conflict.get_or_insert_with(|| {
                                format!("port {}:{} used by two edges", m.names[end.0], end.1)
                            });
                        }
                        _ => {
                            port_edges.insert(end, key);
                        }
                    }
                }
                if let Some(l) = g.elabel(e) {
                    match m.elabels.get(&key) {
                        Some(&prev) if prev != l => {
                            m.econflict.get_or_insert_with(|| {
                                format!("edge labeled both {prev} and {l}")
                            });
                        }
                        _ => {
                            m.elabels.insert(key, l);
                        }
                    }
                }
                m.edges.insert(key);
            }
        }
        m
    }

    pub(crate) fn first_conflict(&self) -> Option<String> {
        self.vconflict
            .clone()
            .or_else(|| self.port_conflict.clone())
            .or_else(|| self.econflict.clone())
    }

    pub(crate) fn into_graph(self, sig: Arc<Signature>) -> NamedGraph {
        let mut g = NamedGraph::new(sig);
        let mut roots: Vec<usize> = Vec::new();
        for i in 0..self.parent.len() {
            if self.parent[i] == i && !self.names[i].0.is_empty() {
                roots.push(i);
            }
        }
        for &r in &roots {
            g.vertices
                .insert(self.names[r].clone(), self.vlabels.get(&r).copied());
        }
        for &((ga, pa), (gb, pb)) in &self.edges {
            let e = Edge::new((self.names[ga].clone(), pa), (self.names[gb].clone(), pb));
            if let Some(&l) = self.elabels.get(&((ga, pa), (gb, pb))) {
                g.elabels.insert(e.clone(), l);
            }
            g.edges.insert(e);
        }
        g
    }
}

fn find_group(
    atom_group: &HashMap<super::Atom, usize>,
    parent: &mut Vec<usize>,
    n: &VName,
) -> usize {
    let &id = atom_group.get(n.atoms().next().unwrap()).unwrap();
    let mut i = id;
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::VName;

    fn sig2() -> Arc<Signature> {
        Signature::with_vlabels(2, vec!["a", "b"])
    }

    #[test]
    fn port_disjointness_enforced() {
        let mut g = NamedGraph::new(sig2());
        g.add_vertex(VName::of("u"), None).unwrap();
        g.add_vertex(VName::of("v"), None).unwrap();
        g.add_vertex(VName::of("w"), None).unwrap();
        g.add_edge((VName::of("u"), 0), (VName::of("v"), 0), None).unwrap();
        let err = g.add_edge((VName::of("u"), 0), (VName::of("w"), 1), None);
        assert!(matches!(err, Err(GraphError::PortConflict(_))));
    }

    #[test]
    fn union_pools_intersecting_names() {
        let sig = sig2();
        let mut g = NamedGraph::new(sig.clone());
        g.add_vertex(VName::of("x"), Some(0)).unwrap();
        let mut h = NamedGraph::new(sig);
        h.add_vertex(VName::from_atoms([crate::graph::Atom::named("x"), crate::graph::Atom::named("y")]), None)
            .unwrap();
        let u = g.union(&h).unwrap();
        assert_eq!(u.vertex_count(), 1);
        let name = u.vertices().next().unwrap().0.clone();
        assert_eq!(name.0.len(), 2);
        assert_eq!(u.vlabel(&name), Some(0));
    }

    #[test]
    fn label_clash_is_inconsistent() {
        let sig = sig2();
        let mut g = NamedGraph::new(sig.clone());
        g.add_vertex(VName::of("x"), Some(0)).unwrap();
        let mut h = NamedGraph::new(sig);
        h.add_vertex(VName::of("x"), Some(1)).unwrap();
        match g.consistency(&h).unwrap() {
            Consistency::Inconsistent(_) => {}
            v => panic!("expected conflict, got {v:?}"),
        }
        assert!(g.union(&h).is_err());
    }

    #[test]
    fn disjoint_graphs_trivially_consistent() {
        let sig = sig2();
        let mut g = NamedGraph::new(sig.clone());
        g.add_vertex(VName::of("x"), None).unwrap();
        let mut h = NamedGraph::new(sig);
        h.add_vertex(VName::of("y"), None).unwrap();
        assert_eq!(g.consistency(&h).unwrap(), Consistency::TriviallyConsistent);
        let u = g.union(&h).unwrap();
        assert_eq!(u.vertex_count(), 2);
    }
}
