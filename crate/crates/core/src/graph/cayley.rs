//! Canonical pointed port graphs.
//!
//! A [`CayleyGraph`] stores one distinguished (pointed) vertex and the rest of
//! the graph in the canonical numbering produced by a breadth-first scan from
//! the pointer that explores out-ports in ascending order.  Vertex 0 is always
//! the pointer, and two values compare equal exactly when they denote the same
//! pointed graph up to pointer-preserving isomorphism, so equality on this
//! type is decidable graph equality.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::hash::Hash;
use std::sync::Arc;

use super::named::NamedGraph;
use super::{Atom, GraphError, LabelId, Path, PathStep, Port, Signature, VName, VertexId};

/// Breadth-first order from `start`, following ports in ascending order.
///
/// The first path that reaches a vertex this way is the shortlex-least path to
/// it, so the returned order is the canonical vertex numbering.
pub(crate) fn canonical_order<K, F>(degree: u8, start: K, mut across: F) -> Vec<K>
where
    K: Clone + Eq + Hash,
    F: FnMut(&K, Port) -> Option<K>,
{
    let mut order = vec![start.clone()];
    let mut seen: std::collections::HashSet<K> = std::collections::HashSet::new();
    seen.insert(start);
    let mut head = 0;
    while head < order.len() {
        let cur = order[head].clone();
        head += 1;
        for p in 0..degree {
            if let Some(next) = across(&cur, p) {
                if seen.insert(next.clone()) {
                    order.push(next);
                }
            }
        }
    }
    order
}

/// A connected pointed port graph in canonical form.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CayleyGraph {
    sig: Arc<Signature>,
    /// `ports[v * d + p]` is the far attachment of the edge at port `p` of
    /// vertex `v`, if any.
    ports: Vec<Option<(VertexId, Port)>>,
    vlabels: Vec<Option<LabelId>>,
    /// Edge labels, keyed by the lesser `(vertex, port)` attachment.
    elabels: BTreeMap<(VertexId, Port), LabelId>,
}

impl CayleyGraph {
    /// Canonicalizes a pointed named graph.  Fails if any vertex is
    /// unreachable from the pointer.
    pub fn canonicalize(g: &NamedGraph, pointer: &VName) -> Result<CayleyGraph, GraphError> {
        let x = Self::component_of(g, pointer)?;
        if x.vertex_count() != g.vertex_count() {
            return Err(GraphError::DisconnectedGraph);
        }
        Ok(x)
    }

    /// Canonicalizes the connected component of `pointer`, discarding the
    /// rest of `g` (the restriction the step operator applies to its union).
    pub fn component_of(g: &NamedGraph, pointer: &VName) -> Result<CayleyGraph, GraphError> {
        if !g.contains(pointer) {
            return Err(GraphError::NoSuchVertex(pointer.to_string()));
        }
        let d = g.sig().degree();
        // One adjacency map up front; `NamedGraph` lookups scan all edges.
        let mut adj: HashMap<(&VName, Port), (&VName, Port)> = HashMap::new();
        for e in g.edges() {
            adj.insert((&e.a.0, e.a.1), (&e.b.0, e.b.1));
            adj.insert((&e.b.0, e.b.1), (&e.a.0, e.a.1));
        }
        let order = canonical_order(d, pointer, |n, p| adj.get(&(n, p)).map(|(m, _)| *m));
        let index: HashMap<&VName, VertexId> =
            order.iter().enumerate().map(|(i, n)| (*n, i as VertexId)).collect();

        let mut x = CayleyGraph {
            sig: g.sig().clone(),
            ports: vec![None; order.len() * d as usize],
            vlabels: vec![None; order.len()],
            elabels: BTreeMap::new(),
        };
        for (i, name) in order.iter().enumerate() {
            x.vlabels[i] = g.vlabel(name);
            for p in 0..d {
                if let Some(&(m, q)) = adj.get(&(name, p)) {
                    x.ports[i * d as usize + p as usize] = Some((index[m], q));
                }
            }
        }
        for e in g.edges() {
            let (Some(&a), Some(&b)) = (index.get(&e.a.0), index.get(&e.b.0)) else {
                continue;
            };
            if let Some(l) = g.elabel(e) {
                let x1 = (a, e.a.1);
                let y1 = (b, e.b.1);
                x.elabels.insert(x1.min(y1), l);
            }
        }
        Ok(x)
    }

    /// Renumbers a raw adjacency structure into canonical form.  `adj` is an
    /// `n x d` table of far attachments under an arbitrary numbering; `root`
    /// becomes the pointer.  Returns the graph together with the old index of
    /// each canonical vertex, or `None` when not every vertex is reachable
    /// from `root`.
    pub(crate) fn assemble_canonical(
        sig: &Arc<Signature>,
        root: usize,
        adj: &[Vec<Option<(usize, Port)>>],
        vlabels: &[Option<LabelId>],
        elabels: &[((usize, Port), LabelId)],
    ) -> Option<(CayleyGraph, Vec<usize>)> {
        let d = sig.degree();
        let order = canonical_order(d, root, |&v, p| adj[v][p as usize].map(|(w, _)| w));
        if order.len() != adj.len() {
            return None;
        }
        let mut index = vec![0 as VertexId; adj.len()];
        for (new, &old) in order.iter().enumerate() {
            index[old] = new as VertexId;
        }
        let mut ports = vec![None; order.len() * d as usize];
        let mut labels = vec![None; order.len()];
        for (new, &old) in order.iter().enumerate() {
            labels[new] = vlabels[old];
            for p in 0..d as usize {
                ports[new * d as usize + p] = adj[old][p].map(|(w, q)| (index[w], q));
            }
        }
        let mut relabeled = BTreeMap::new();
        for &((v, p), l) in elabels {
            let (w, q) = adj[v][p as usize].expect("edge label on an empty port");
            let key = (index[v], p).min((index[w], q));
            let prior = relabeled.insert(key, l);
            debug_assert!(prior.is_none() || prior == Some(l), "conflicting edge labels");
        }
        Some((Self::from_parts(sig.clone(), ports, labels, relabeled), order))
    }

    /// Assembles a graph from raw parts.  The caller promises the numbering
    /// is already the canonical scan order; debug builds verify that.
    pub(crate) fn from_parts(
        sig: Arc<Signature>,
        ports: Vec<Option<(VertexId, Port)>>,
        vlabels: Vec<Option<LabelId>>,
        elabels: BTreeMap<(VertexId, Port), LabelId>,
    ) -> CayleyGraph {
        let x = CayleyGraph { sig, ports, vlabels, elabels };
        debug_assert!(
            {
                let rescan = x.restrict(0, |_| true, |_| true, |_, _| true);
                rescan == x
            },
            "from_parts input was not in canonical order"
        );
        x
    }

    pub fn sig(&self) -> &Arc<Signature> {
        &self.sig
    }

    pub fn degree(&self) -> u8 {
        self.sig.degree()
    }

    pub fn vertex_count(&self) -> usize {
        self.vlabels.len()
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> {
        0..self.vlabels.len() as VertexId
    }

    pub fn vlabel(&self, v: VertexId) -> Option<LabelId> {
        self.vlabels[v as usize]
    }

    /// The far attachment of the edge at `(v, p)`, if any.
    pub fn across(&self, v: VertexId, p: Port) -> Option<(VertexId, Port)> {
        self.ports[v as usize * self.degree() as usize + p as usize]
    }

    pub fn elabel_at(&self, v: VertexId, p: Port) -> Option<LabelId> {
        let (w, q) = self.across(v, p)?;
        self.elabels.get(&(v, p).min((w, q))).copied()
    }

    pub fn degree_of(&self, v: VertexId) -> usize {
        (0..self.degree()).filter(|&p| self.across(v, p).is_some()).count()
    }

    /// Edges as `(v, p, w, q, label)` with `(v, p) <= (w, q)`, in that order.
    pub fn edges(&self) -> impl Iterator<Item = (VertexId, Port, VertexId, Port, Option<LabelId>)> + '_ {
        self.vertices().flat_map(move |v| {
            (0..self.degree()).filter_map(move |p| {
                let (w, q) = self.across(v, p)?;
                if (v, p) <= (w, q) {
                    Some((v, p, w, q, self.elabel_at(v, p)))
                } else {
                    None
                }
            })
        })
    }

    pub fn edge_count(&self) -> usize {
        self.edges().count()
    }

    /// Follows `path` from `start`, checking each step's in-port against the
    /// actual edge.  Returns `None` when the walk leaves the graph.
    pub fn walk(&self, start: VertexId, path: &Path) -> Option<VertexId> {
        let mut cur = start;
        for s in &path.0 {
            let (next, q) = self.across(cur, s.out)?;
            if q != s.inp {
                return None;
            }
            cur = next;
        }
        Some(cur)
    }

    /// The vertex a path from the pointer lands on, if it exists.
    pub fn vertex_at(&self, path: &Path) -> Option<VertexId> {
        self.walk(0, path)
    }

    /// The canonical (shortlex-least) path from the pointer to `v`.
    pub fn path_of(&self, v: VertexId) -> Path {
        // Reconstruct the canonical scan, keeping parent steps.
        let d = self.degree();
        let n = self.vertex_count();
        let mut prev: Vec<Option<(VertexId, PathStep)>> = vec![None; n];
        let mut seen = vec![false; n];
        seen[0] = true;
        let mut queue = VecDeque::from([0 as VertexId]);
        while let Some(cur) = queue.pop_front() {
            for p in 0..d {
                if let Some((next, q)) = self.across(cur, p) {
                    if !seen[next as usize] {
                        seen[next as usize] = true;
                        prev[next as usize] = Some((cur, PathStep { out: p, inp: q }));
                        queue.push_back(next);
                    }
                }
            }
        }
        let mut steps = Vec::new();
        let mut cur = v;
        while let Some((parent, step)) = prev[cur as usize] {
            steps.push(step);
            cur = parent;
        }
        steps.reverse();
        Path(steps)
    }

    /// Graph distance from the pointer to every vertex.
    pub fn distances(&self) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.vertex_count()];
        dist[0] = 0;
        let mut queue = VecDeque::from([0 as VertexId]);
        while let Some(cur) = queue.pop_front() {
            for p in 0..self.degree() {
                if let Some((next, _)) = self.across(cur, p) {
                    if dist[next as usize] == u32::MAX {
                        dist[next as usize] = dist[cur as usize] + 1;
                        queue.push_back(next);
                    }
                }
            }
        }
        dist
    }

    pub fn diameter_from_pointer(&self) -> u32 {
        self.distances().into_iter().max().unwrap_or(0)
    }

    /// Rebuilds the canonical form of the subgraph spanned by `keep`,
    /// starting BFS at `start`; only the component of `start` survives.
    /// `vis_label` masks vertex labels, `vis_elabel` masks edge labels.
    fn restrict(
        &self,
        start: VertexId,
        keep: impl Fn(VertexId) -> bool,
        vis_label: impl Fn(VertexId) -> bool,
        vis_elabel: impl Fn(VertexId, VertexId) -> bool,
    ) -> CayleyGraph {
        let d = self.degree();
        let across = |v: &VertexId, p: Port| -> Option<VertexId> {
            let (w, _) = self.across(*v, p)?;
            keep(w).then_some(w)
        };
        let order = canonical_order(d, start, across);
        let mut index: HashMap<VertexId, VertexId> = HashMap::new();
        for (i, &v) in order.iter().enumerate() {
            index.insert(v, i as VertexId);
        }
        let mut x = CayleyGraph {
            sig: self.sig.clone(),
            ports: vec![None; order.len() * d as usize],
            vlabels: vec![None; order.len()],
            elabels: BTreeMap::new(),
        };
        for (i, &v) in order.iter().enumerate() {
            if vis_label(v) {
                x.vlabels[i] = self.vlabels[v as usize];
            }
            for p in 0..d {
                if let Some((w, q)) = self.across(v, p) {
                    if let Some(&j) = index.get(&w) {
                        x.ports[i * d as usize + p as usize] = Some((j, q));
                        if vis_elabel(v, w) && (i as VertexId, p) <= (j, q) {
                            if let Some(l) = self.elabel_at(v, p) {
                                x.elabels.insert((i as VertexId, p), l);
                            }
                        }
                    }
                }
            }
        }
        x
    }

    /// Canonical rebuild of the `keep`-marked part of `start`'s component,
    /// pointed at `start`; labels survive as they are.
    pub(crate) fn keep_only(
        &self,
        start: VertexId,
        keep: impl Fn(VertexId) -> bool,
    ) -> CayleyGraph {
        self.restrict(start, keep, |_| true, |_, _| true)
    }

    /// The visit order [`CayleyGraph::keep_only`] renumbers by, as old ids.
    pub(crate) fn keep_order(
        &self,
        start: VertexId,
        keep: impl Fn(VertexId) -> bool,
    ) -> Vec<VertexId> {
        let across = |v: &VertexId, p: Port| -> Option<VertexId> {
            let (w, _) = self.across(*v, p)?;
            keep(w).then_some(w)
        };
        canonical_order(self.degree(), start, across)
    }

    /// Moves the pointer to the vertex `u` reaches and re-canonicalizes.
    pub fn shift(&self, u: &Path) -> Result<CayleyGraph, GraphError> {
        let v = self
            .vertex_at(u)
            .ok_or_else(|| GraphError::NoSuchVertex(u.to_string()))?;
        Ok(self.shift_to(v))
    }

    /// [`CayleyGraph::shift`] addressed by vertex id instead of path.
    pub fn shift_to(&self, v: VertexId) -> CayleyGraph {
        if v == 0 {
            return self.clone();
        }
        self.restrict(v, |_| true, |_| true, |_, _| true)
    }

    /// The radius-`r` disk around the pointer: the subgraph induced by the
    /// vertices within distance `r + 1`, with vertex labels kept only within
    /// distance `r` and edge labels only between such vertices.
    pub fn disk(&self, r: u32) -> CayleyGraph {
        let dist = self.distances();
        self.restrict(
            0,
            |v| dist[v as usize] <= r + 1,
            |v| dist[v as usize] <= r,
            |v, w| dist[v as usize] <= r && dist[w as usize] <= r,
        )
    }

    /// Pointed-isomorphism equality; free because both sides are canonical.
    pub fn iso_eq(&self, other: &CayleyGraph) -> Result<bool, GraphError> {
        Signature::same(&self.sig, &other.sig)?;
        Ok(self == other)
    }

    /// The canonical path name of each vertex, as a named graph.
    pub fn to_named(&self) -> NamedGraph {
        let mut g = NamedGraph::new(self.sig.clone());
        let names: Vec<VName> = self
            .vertices()
            .map(|v| VName::from_atoms([Atom::walk(self.path_of(v), 0)]))
            .collect();
        for v in self.vertices() {
            g.add_vertex(names[v as usize].clone(), self.vlabel(v))
                .expect("canonical names are distinct");
        }
        for (v, p, w, q, l) in self.edges() {
            g.add_edge(
                (names[v as usize].clone(), p),
                (names[w as usize].clone(), q),
                l,
            )
            .expect("canonical edges are port-disjoint");
        }
        g
    }
}

impl std::fmt::Display for CayleyGraph {
    /// Compact listing: one vertex per line with label and port attachments.
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for v in self.vertices() {
            write!(f, "{v}")?;
            if let Some(l) = self.vlabel(v) {
                write!(f, "[{}]", self.sig.vlabel_name(l))?;
            }
            write!(f, ":")?;
            for p in 0..self.degree() {
                if let Some((w, q)) = self.across(v, p) {
                    write!(f, " {p}->{w}.{q}")?;
                    if let Some(l) = self.elabel_at(v, p) {
                        write!(f, "/{}", self.sig.elabel_name(l))?;
                    }
                }
            }
            writeln!(f)?;
        }
        Ok(())
    }
}
