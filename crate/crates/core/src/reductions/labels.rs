//! Erasure of vertex and edge labels into satellite vertices.
//!
//! The stripped signature keeps the original ports and reserves one extra
//! port per vertex label and one per (edge label, port) pair.  The encoder
//! hangs an unlabeled degree-1 marker vertex off the reserved port matching
//! each erased label: one marker per labelled vertex, two per labelled edge
//! (one at each endpoint, on the port the edge uses).  The compiled rule
//! observes one step further than the original — a neighbor's markers sit
//! one step behind the neighbor itself — rebuilds the labelled disk, applies
//! the original rule, and mints fresh markers for its outputs.  Markers are
//! never carried over; the old ones lose their only edge and vanish.
//!
//! Not every graph over the stripped signature is an encoding.
//! [`label_free_decode`] audits the structure and rebuilds the labelled
//! graph, rejecting anything malformed.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::graph::{
    CayleyGraph, GraphError, LabelId, Path, PathStep, Port, Signature, Suffix, VertexId,
};
use crate::rules::{ImageGraph, LocalRule, RuleError};

use super::{ReductionError, ReductionResult, SimulationMap};

/// Port and suffix layout of the stripped signature.
struct Satellites {
    sig0: Arc<Signature>,
    sig1: Arc<Signature>,
    d0: u8,
    nv: usize,
    ne: usize,
    /// Marker suffixes start here; original images stay below it.
    base: Suffix,
}

impl Satellites {
    fn new(sig0: Arc<Signature>, base: Suffix) -> Result<Satellites, ReductionError> {
        let d0 = sig0.degree();
        let nv = sig0.vlabels().len();
        let ne = sig0.elabels().len();
        let total = d0 as usize + nv + ne * d0 as usize;
        if total > 256 {
            return Err(ReductionError::Graph(GraphError::BadValue(format!(
                "the stripped signature needs {total} ports; at most 256 are supported"
            ))));
        }
        let mut ports = sig0.ports().to_vec();
        for s in sig0.vlabels() {
            ports.push(format!("s.{s}"));
        }
        for j in sig0.elabels() {
            for a in sig0.ports() {
                ports.push(format!("e.{j}.{a}"));
            }
        }
        let sig1 = Signature::new(ports, Vec::<String>::new(), Vec::new())?;
        Ok(Satellites { sig0, sig1, d0, nv, ne, base })
    }

    /// The reserved port marking vertex label `s`.
    fn vertex_port(&self, s: LabelId) -> Port {
        self.d0 + s as Port
    }

    /// The reserved port marking edge label `j` on original port `a`.
    fn edge_port(&self, j: LabelId, a: Port) -> Port {
        (self.d0 as usize + self.nv + j as usize * self.d0 as usize + a as usize) as Port
    }

    /// Successor names for the marker of vertex label `sigma` on a host
    /// named with suffix `s`; disjoint from real suffixes and from
    /// [`Satellites::edge_suffix`] ranges.
    fn vertex_suffix(&self, s: Suffix, sigma: LabelId) -> Suffix {
        self.base + s * self.nv as Suffix + sigma as Suffix
    }

    fn edge_suffix(&self, s: Suffix, j: LabelId, a: Port) -> Suffix {
        self.base * (1 + self.nv as Suffix)
            + (s * self.ne as Suffix + j as Suffix) * self.d0 as Suffix
            + a as Suffix
    }

    /// Total successor budget: covers real suffixes and every marker range.
    fn bound(&self) -> usize {
        self.base as usize * (1 + self.nv + self.ne * self.d0 as usize)
    }

    /// A marker: exactly one edge, leaving its port 0, arriving on a
    /// reserved port of its host.
    fn is_marker(&self, y: &CayleyGraph, v: VertexId) -> bool {
        y.degree_of(v) == 1 && matches!(y.across(v, 0), Some((_, hp)) if hp >= self.d0)
    }
}

/// Hangs a fresh degree-1 vertex off `(host, hp)` in a raw adjacency table.
fn hang(adj: &mut Vec<Vec<Option<(usize, Port)>>>, host: usize, hp: Port) {
    let width = adj[host].len();
    let m = adj.len();
    adj.push(vec![None; width]);
    adj[host][hp as usize] = Some((m, 0));
    adj[m][0] = Some((host, hp));
}

fn encode(
    sat: &Satellites,
    x: &CayleyGraph,
) -> Result<(CayleyGraph, Vec<VertexId>), ReductionError> {
    Signature::same(x.sig(), &sat.sig0)?;
    let n = x.vertex_count();
    let d1 = sat.sig1.degree() as usize;
    let mut adj = vec![vec![None; d1]; n];
    for v in x.vertices() {
        for p in 0..sat.d0 {
            if let Some((w, q)) = x.across(v, p) {
                adj[v as usize][p as usize] = Some((w as usize, q));
            }
        }
        if let Some(s) = x.vlabel(v) {
            hang(&mut adj, v as usize, sat.vertex_port(s));
        }
    }
    for (v, p, w, q, l) in x.edges() {
        if let Some(j) = l {
            hang(&mut adj, v as usize, sat.edge_port(j, p));
            hang(&mut adj, w as usize, sat.edge_port(j, q));
        }
    }
    let vlabels = vec![None; adj.len()];
    let (g, order) = CayleyGraph::assemble_canonical(&sat.sig1, 0, &adj, &vlabels, &[])
        .expect("a pointed graph is connected");
    let mut table = vec![0 as VertexId; n];
    for (pos, &old) in order.iter().enumerate() {
        if old < n {
            table[old] = pos as VertexId;
        }
    }
    Ok((g, table))
}

/// Audits a graph over the stripped signature and rebuilds the labelled
/// original.  Everything the encoder would never produce is rejected.
pub fn label_free_decode(
    y: &CayleyGraph,
    source: &Arc<Signature>,
) -> Result<CayleyGraph, ReductionError> {
    let sat = Satellites::new(source.clone(), 1)?;
    Signature::same(y.sig(), &sat.sig1)?;
    if sat.is_marker(y, 0) {
        return Err(ReductionError::InvalidEncoding(
            "the pointer is a marker vertex".to_string(),
        ));
    }
    let reals: Vec<VertexId> = y.vertices().filter(|&v| !sat.is_marker(y, v)).collect();
    let index: BTreeMap<VertexId, usize> =
        reals.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let d0 = sat.d0 as usize;
    let mut adj = vec![vec![None; d0]; reals.len()];
    let mut vlabels = vec![None; reals.len()];
    let mut elab: BTreeMap<(usize, Port), LabelId> = BTreeMap::new();
    for (i, &v) in reals.iter().enumerate() {
        for p in 0..sat.d0 {
            if let Some((w, q)) = y.across(v, p) {
                if q >= sat.d0 || !index.contains_key(&w) {
                    return Err(ReductionError::InvalidEncoding(format!(
                        "the edge at port {p} of vertex {v} runs into a reserved port"
                    )));
                }
                adj[i][p as usize] = Some((index[&w], q));
            }
        }
        for s in 0..sat.nv as LabelId {
            if let Some((m, mq)) = y.across(v, sat.vertex_port(s)) {
                if mq != 0 || !sat.is_marker(y, m) {
                    return Err(ReductionError::InvalidEncoding(format!(
                        "the state port {s} of vertex {v} holds something besides a marker"
                    )));
                }
                if vlabels[i].replace(s).is_some() {
                    return Err(ReductionError::InvalidEncoding(format!(
                        "vertex {v} carries two state markers"
                    )));
                }
            }
        }
        for j in 0..sat.ne as LabelId {
            for a in 0..sat.d0 {
                let Some((m, mq)) = y.across(v, sat.edge_port(j, a)) else {
                    continue;
                };
                if mq != 0 || !sat.is_marker(y, m) {
                    return Err(ReductionError::InvalidEncoding(format!(
                        "an edge-label port of vertex {v} holds something besides a marker"
                    )));
                }
                let Some((w, wq)) = y.across(v, a) else {
                    return Err(ReductionError::InvalidEncoding(format!(
                        "an edge marker of vertex {v} hangs on the empty port {a}"
                    )));
                };
                match y.across(w, sat.edge_port(j, wq)) {
                    Some((m2, 0)) if sat.is_marker(y, m2) => {}
                    _ => {
                        return Err(ReductionError::InvalidEncoding(format!(
                            "the edge marker at port {a} of vertex {v} is missing its partner"
                        )))
                    }
                }
                if (v, a) <= (w, wq) && elab.insert((i, a), j).is_some() {
                    return Err(ReductionError::InvalidEncoding(format!(
                        "the edge at port {a} of vertex {v} carries two labels"
                    )));
                }
            }
        }
    }
    let elabels: Vec<((usize, Port), LabelId)> = elab.into_iter().collect();
    let (g, _) = CayleyGraph::assemble_canonical(&sat.sig0, 0, &adj, &vlabels, &elabels)
        .ok_or_else(|| {
            ReductionError::InvalidEncoding(
                "the non-marker vertices are not connected to each other".to_string(),
            )
        })?;
    Ok(g)
}

/// The image of a marker, and of anything unreadable: a lone successor that
/// claims no edges.  A marker's lone successor is referenced by nobody and
/// silently vanishes; its host re-creates a fresh marker in its place.
fn lone() -> ImageGraph {
    let mut img = ImageGraph::new();
    img.add_vertex([(Path::empty(), 0)], None);
    img
}

/// Reads the vertex label of `v` off its state ports.  The outer `None`
/// flags an invalid neighborhood.
fn read_state(
    sat: &Satellites,
    disk: &CayleyGraph,
    v: VertexId,
) -> Option<Option<LabelId>> {
    let mut found = None;
    for s in 0..sat.nv as LabelId {
        if let Some((m, mq)) = disk.across(v, sat.vertex_port(s)) {
            if mq != 0 || !sat.is_marker(disk, m) || found.replace(s).is_some() {
                return None;
            }
        }
    }
    Some(found)
}

/// Reads the label of the original edge `(parent, out) — (child, inp)` off
/// the edge-label ports of both endpoints, which must agree.
fn read_edge_label(
    sat: &Satellites,
    disk: &CayleyGraph,
    parent: VertexId,
    out: Port,
    child: VertexId,
    inp: Port,
) -> Option<Option<LabelId>> {
    let side = |v: VertexId, a: Port| -> Option<Option<LabelId>> {
        let mut found = None;
        for j in 0..sat.ne as LabelId {
            if let Some((m, mq)) = disk.across(v, sat.edge_port(j, a)) {
                if mq != 0 || !sat.is_marker(disk, m) || found.replace(j).is_some() {
                    return None;
                }
            }
        }
        Some(found)
    };
    let at_parent = side(parent, out)?;
    let at_child = side(child, inp)?;
    (at_parent == at_child).then_some(at_parent)
}

/// Rebuilds the disk the original rule would observe, by walking original
/// ports through the stripped disk and reading labels off the markers.
fn rebuild_source_disk(sat: &Satellites, r: u8, disk: &CayleyGraph) -> Option<CayleyGraph> {
    let rr = r as u32;
    // (stripped-disk vertex, parent slot, arriving step, depth)
    let mut nodes: Vec<(VertexId, usize, PathStep, u32)> = vec![(0, 0, PathStep::new(0, 0), 0)];
    let mut vlabels = Vec::new();
    let mut elabels = BTreeMap::new();
    let mut head = 0;
    while head < nodes.len() {
        let (v, parent, step, depth) = nodes[head];
        let slot = head;
        head += 1;
        vlabels.push(if depth <= rr { read_state(sat, disk, v)? } else { None });
        if slot != 0 && depth <= rr {
            if let Some(l) = read_edge_label(sat, disk, nodes[parent].0, step.out, v, step.inp)? {
                let key = (parent as VertexId, step.out).min((slot as VertexId, step.inp));
                elabels.insert(key, l);
            }
        }
        if depth <= rr {
            for p in 0..sat.d0 {
                if slot != 0 && p == step.inp {
                    continue;
                }
                if let Some((w, q)) = disk.across(v, p) {
                    if q >= sat.d0 {
                        return None;
                    }
                    nodes.push((w, slot, PathStep::new(p, q), depth + 1));
                }
            }
        }
    }
    let d0 = sat.d0 as usize;
    let mut ports = vec![None; nodes.len() * d0];
    for (i, &(_, parent, step, _)) in nodes.iter().enumerate().skip(1) {
        ports[parent * d0 + step.out as usize] = Some((i as VertexId, step.inp));
        ports[i * d0 + step.inp as usize] = Some((parent as VertexId, step.out));
    }
    Some(CayleyGraph::from_parts(sat.sig0.clone(), ports, vlabels, elabels))
}

/// Replaces labels in an image with fresh markers.  Marker successors are
/// named by suffix-shifting every name of their host, so two sites minting
/// the marker of one shared host agree on it.
fn translate(sat: &Satellites, inner: &ImageGraph) -> ImageGraph {
    let mut img = ImageGraph::new();
    let mut at = Vec::with_capacity(inner.vertices().len());
    for iv in inner.vertices() {
        at.push(img.add_vertex(iv.atoms.iter().cloned(), None));
    }
    for (i, iv) in inner.vertices().iter().enumerate() {
        if let Some(s) = iv.label {
            let names = iv.atoms.iter().map(|(p, suf)| (p.clone(), sat.vertex_suffix(*suf, s)));
            let marker = img.add_vertex(names, None);
            img.add_edge(at[i], sat.vertex_port(s), marker, 0, None);
        }
    }
    for &(a, pa, b, pb, l) in inner.edges() {
        img.add_edge(at[a], pa, at[b], pb, None);
        if let Some(j) = l {
            for (end, port) in [(a, pa), (b, pb)] {
                let names = inner.vertices()[end]
                    .atoms
                    .iter()
                    .map(|(p, suf)| (p.clone(), sat.edge_suffix(*suf, j, port)));
                let marker = img.add_vertex(names, None);
                img.add_edge(at[end], sat.edge_port(j, port), marker, 0, None);
            }
        }
    }
    img
}

fn step_image(
    sat: &Satellites,
    f: &LocalRule,
    disk: &CayleyGraph,
) -> Result<ImageGraph, RuleError> {
    if sat.is_marker(disk, 0) {
        return Ok(lone());
    }
    let Some(src) = rebuild_source_disk(sat, f.radius(), disk) else {
        return Ok(lone());
    };
    let inner = f.image_of(&src)?;
    Ok(translate(sat, &inner))
}

/// Compiles `f` into a rule over a signature with no labels at all, plus the
/// translation into its configurations.  The compiled rule observes one step
/// further than `f` and runs at the same speed (`delta` = 1).
pub fn label_free_reduction(f: &LocalRule) -> Result<ReductionResult, ReductionError> {
    if f.radius() == u8::MAX {
        return Err(ReductionError::Graph(GraphError::BadValue(
            "the rule radius is too large to extend by one".to_string(),
        )));
    }
    let base = f.bound() + 1;
    if Suffix::try_from(base).is_err() {
        return Err(ReductionError::Graph(GraphError::BadValue(
            "the successor budget is too large to shift".to_string(),
        )));
    }
    let sat = Arc::new(Satellites::new(f.sig().clone(), base as Suffix)?);
    if Suffix::try_from(sat.bound()).is_err() {
        return Err(ReductionError::Graph(GraphError::BadValue(
            "the marker suffix ranges overflow".to_string(),
        )));
    }
    let name = format!("{}-plain", f.name());
    let inner = f.clone();
    let s = sat.clone();
    let rule = LocalRule::native(
        name.clone(),
        sat.sig1.clone(),
        f.radius() + 1,
        sat.bound(),
        move |disk| step_image(&s, &inner, disk),
    );
    let map = SimulationMap::new(name, sat.sig0.clone(), sat.sig1.clone(), 1, move |x| {
        encode(&sat, x)
    });
    Ok(ReductionResult { rule, map })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build, NamedGraph, VName};
    use crate::reductions::verify_simulation;
    use crate::rules::{apply_step, labeled_turtle, rotate, turtle};

    fn turtle_inputs(sig: &Arc<Signature>) -> Vec<CayleyGraph> {
        let mut xs = Vec::new();
        for l in [None, Some(0), Some(1)] {
            xs.push(build::single(sig, l).unwrap());
            for m in [None, Some(0), Some(1)] {
                xs.push(build::pair(sig, [l, m], None).unwrap());
            }
        }
        xs
    }

    #[test]
    fn stripped_labeled_turtle_still_flips() {
        let f = labeled_turtle().unwrap();
        let r = label_free_reduction(&f).unwrap();
        assert_eq!(r.rule.radius(), 2);
        assert_eq!(r.map.delta(), 1);
        assert!(r.rule.sig().vlabels().is_empty());
        assert!(r.rule.sig().elabels().is_empty());
        let inputs: Vec<_> = turtle_inputs(f.sig())
            .into_iter()
            .filter(|x| x.vertices().all(|v| x.vlabel(v).is_some()))
            .collect();
        let verdict = verify_simulation(&r.rule, &f, &r.map, &inputs, 4).unwrap();
        assert!(verdict.passed(), "{verdict}");
    }

    #[test]
    fn unlabeled_rules_lose_nothing() {
        let f = turtle().unwrap();
        let r = label_free_reduction(&f).unwrap();
        assert_eq!(r.rule.sig().ports(), f.sig().ports());
        assert_eq!(r.rule.radius(), 1);
        let x = build::pair(f.sig(), [None, None], None).unwrap();
        assert_eq!(r.map.encode(&x).unwrap(), x);
        let verdict = verify_simulation(
            &r.rule,
            &f,
            &r.map,
            &[build::single(f.sig(), None).unwrap(), x],
            4,
        )
        .unwrap();
        assert!(verdict.passed(), "{verdict}");
    }

    #[test]
    fn trajectories_stay_valid_encodings() {
        let f = labeled_turtle().unwrap();
        let r = label_free_reduction(&f).unwrap();
        let mut src = build::pair(f.sig(), [Some(1), Some(0)], None).unwrap();
        let mut enc = r.map.encode(&src).unwrap();
        for _ in 0..4 {
            src = apply_step(&f, &src).unwrap();
            enc = apply_step(&r.rule, &enc).unwrap();
            assert_eq!(label_free_decode(&enc, f.sig()).unwrap(), src);
        }
    }

    #[test]
    fn encoding_separates_labels_and_structures() {
        let f = labeled_turtle().unwrap();
        let r = label_free_reduction(&f).unwrap();
        // Every pointed degree-1 graph: three singles plus nine ordered pairs.
        let all = turtle_inputs(f.sig());
        let distinct: std::collections::BTreeSet<_> = all.iter().cloned().collect();
        assert_eq!(distinct.len(), 12);
        let encoded: std::collections::BTreeSet<_> =
            all.iter().map(|x| r.map.encode(x).unwrap()).collect();
        assert_eq!(encoded.len(), 12);
        // And one step further on a bigger alphabet: all tiny degree-2
        // graphs, exhaustively.
        let g = rotate();
        let rg = label_free_reduction(&g).unwrap();
        let mut all = std::collections::BTreeSet::new();
        for n in 1..=4 {
            all.extend(crate::corpus::all_graphs(g.sig(), n));
        }
        let encoded: std::collections::BTreeSet<_> =
            all.iter().map(|x| rg.map.encode(x).unwrap()).collect();
        assert_eq!(encoded.len(), all.len());
    }

    #[test]
    fn labelled_edges_roundtrip_through_markers() {
        let sig = Signature::new(
            vec!["1".to_string(), "2".to_string(), "3".to_string()],
            vec!["a".to_string()],
            vec!["x".to_string(), "y".to_string()],
        )
        .unwrap();
        let sat = Satellites::new(sig.clone(), 3).unwrap();
        let mut rng = crate::corpus::rng(0xeda);
        for _ in 0..50 {
            let x = crate::corpus::random_graph(&mut rng, &sig, 6, 2);
            let (y, _) = encode(&sat, &x).unwrap();
            assert_eq!(label_free_decode(&y, &sig).unwrap(), x);
        }
    }

    #[test]
    fn encoding_commutes_with_moving_the_pointer() {
        let sig = Signature::new(
            vec!["1".to_string(), "2".to_string()],
            vec!["a".to_string(), "b".to_string()],
            vec!["x".to_string()],
        )
        .unwrap();
        let sat = Satellites::new(sig.clone(), 2).unwrap();
        let mut rng = crate::corpus::rng(0xbee);
        for _ in 0..20 {
            let x = crate::corpus::random_graph(&mut rng, &sig, 7, 2);
            for u in x.vertices() {
                let (y, t) = encode(&sat, &x).unwrap();
                let (ys, _) = encode(&sat, &x.shift_to(u)).unwrap();
                assert_eq!(y.shift_to(t[u as usize]), ys);
            }
        }
    }

    #[test]
    fn malformed_encodings_are_rejected() {
        let f = labeled_turtle().unwrap();
        let sat = Satellites::new(f.sig().clone(), 3).unwrap();
        let sig1 = sat.sig1.clone();
        let v = |n: &str| VName::of(n);

        // Two state markers on one vertex.
        let mut g = NamedGraph::new(sig1.clone());
        for n in ["h", "m0", "m1"] {
            g.add_vertex(v(n), None).unwrap();
        }
        g.add_edge((v("h"), 1), (v("m0"), 0), None).unwrap();
        g.add_edge((v("h"), 2), (v("m1"), 0), None).unwrap();
        let y = CayleyGraph::canonicalize(&g, &v("h")).unwrap();
        let err = label_free_decode(&y, f.sig()).unwrap_err();
        assert!(err.to_string().contains("two state markers"), "{err}");

        // The pointer itself is a marker.
        let y = y.shift_to(y.vertices().find(|&m| sat.is_marker(&y, m)).unwrap());
        let err = label_free_decode(&y, f.sig()).unwrap_err();
        assert!(err.to_string().contains("pointer"), "{err}");

        // A chain hanging off a state port: the middle vertex has two edges,
        // so it is no marker, and its original port runs into a reserved one.
        let mut g = NamedGraph::new(sig1);
        for n in ["h", "w", "mid", "tail"] {
            g.add_vertex(v(n), None).unwrap();
        }
        g.add_edge((v("h"), 0), (v("w"), 0), None).unwrap();
        g.add_edge((v("w"), 2), (v("mid"), 0), None).unwrap();
        g.add_edge((v("mid"), 1), (v("tail"), 0), None).unwrap();
        let y = CayleyGraph::canonicalize(&g, &v("h")).unwrap();
        let err = label_free_decode(&y, f.sig()).unwrap_err();
        assert!(
            err.to_string().contains("marker") || err.to_string().contains("reserved"),
            "{err}"
        );

        // An edge marker with no partner on the far side.
        let sig = Signature::new(
            vec!["1".to_string(), "2".to_string()],
            Vec::new(),
            vec!["x".to_string()],
        )
        .unwrap();
        let sat = Satellites::new(sig.clone(), 1).unwrap();
        let mut g = NamedGraph::new(sat.sig1.clone());
        for n in ["a", "b", "m"] {
            g.add_vertex(v(n), None).unwrap();
        }
        g.add_edge((v("a"), 0), (v("b"), 0), None).unwrap();
        g.add_edge((v("a"), sat.edge_port(0, 0)), (v("m"), 0), None).unwrap();
        let y = CayleyGraph::canonicalize(&g, &v("a")).unwrap();
        let err = label_free_decode(&y, &sig).unwrap_err();
        assert!(err.to_string().contains("partner"), "{err}");
    }
}
