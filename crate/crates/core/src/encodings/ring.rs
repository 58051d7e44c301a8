//! Ring encoding: every vertex becomes a small cycle, every edge a bridge.
//!
//! A vertex of a degree-`d` graph maps to a ring of `d + 1` vertices wired
//! by `previous`/`next` edges: one hub labeled `VERTEX` (or `VERTEX/σ` when
//! the source vertex is labeled `σ`) followed, in `next` direction, by one
//! `PORT` vertex per source port in port order.  A source edge `{u:i, v:j}`
//! becomes a `neighbor` edge between the `i`-th `PORT` vertex of `u` and the
//! `j`-th of `v`, carrying the source edge's label.  The pointer moves to
//! the pointed vertex's hub.
//!
//! The image is a degree-3 graph whatever the source degree, which is what
//! lets one machine signature manipulate graphs of any shape.  Decoding
//! checks the full ring structure and reports the first violation.

use std::sync::Arc;

use crate::graph::{CayleyGraph, LabelId, Port, Signature};

use super::CodecError;

/// Ring-side port indices.
pub(crate) const PREVIOUS: Port = 0;
pub(crate) const NEXT: Port = 1;
pub(crate) const NEIGHBOR: Port = 2;

/// The signature ring encodings of graphs over `src` live in: ports
/// `previous`/`next`/`neighbor`, hub labels `VERTEX` and `VERTEX/σ` per
/// source vertex label, the `PORT` label, and the source edge labels.
pub fn ring_signature(src: &Arc<Signature>) -> Arc<Signature> {
    let mut vlabels = vec!["VERTEX".to_string()];
    vlabels.extend(src.vlabels().iter().map(|s| format!("VERTEX/{s}")));
    vlabels.push("PORT".to_string());
    Signature::new(
        vec!["previous".to_string(), "next".to_string(), "neighbor".to_string()],
        vlabels,
        src.elabels().to_vec(),
    )
    .expect("ring names are always valid")
}

fn hub_label(src_label: Option<LabelId>) -> LabelId {
    match src_label {
        None => 0,
        Some(l) => 1 + l,
    }
}

fn port_label(src: &Signature) -> LabelId {
    1 + src.vlabels().len() as LabelId
}

/// Encodes `x` as a ring graph over [`ring_signature`]`(x.sig())`.
pub fn ring_encode(x: &CayleyGraph) -> CayleyGraph {
    let sig = ring_signature(x.sig());
    let d = x.degree() as usize;
    let len = d + 1;
    let n = x.vertex_count();
    // Ring vertex `u * len + i`: hub of `u` for i = 0, else port `i - 1`.
    let at = |u: usize, i: usize| u * len + i;

    let mut adj = vec![vec![None; 3]; n * len];
    let mut labels = vec![None; n * len];
    let mut elabels = Vec::new();
    for u in 0..n {
        labels[at(u, 0)] = Some(hub_label(x.vlabel(u as u32)));
        for i in 1..len {
            labels[at(u, i)] = Some(port_label(x.sig()));
        }
        for i in 0..len {
            let j = (i + 1) % len;
            adj[at(u, i)][NEXT as usize] = Some((at(u, j), PREVIOUS));
            adj[at(u, j)][PREVIOUS as usize] = Some((at(u, i), NEXT));
        }
    }
    for (u, p, v, q, l) in x.edges() {
        let a = at(u as usize, p as usize + 1);
        let b = at(v as usize, q as usize + 1);
        adj[a][NEIGHBOR as usize] = Some((b, NEIGHBOR));
        adj[b][NEIGHBOR as usize] = Some((a, NEIGHBOR));
        if let Some(l) = l {
            elabels.push(((a, NEIGHBOR), l));
        }
    }
    let (y, _) = CayleyGraph::assemble_canonical(&sig, 0, &adj, &labels, &elabels)
        .expect("rings of a connected graph stay connected");
    y
}

/// Decodes a ring graph back to its source over `src`.  Checks every ring
/// invariant: cycle shape and length, exactly one hub per ring, `neighbor`
/// edges only between `PORT` vertices.
pub fn ring_decode(y: &CayleyGraph, src: &Arc<Signature>) -> Result<CayleyGraph, CodecError> {
    let want = ring_signature(src);
    if Signature::same(y.sig(), &want).is_err() {
        return Err(CodecError::MalformedRing(format!(
            "signature is not the ring signature of a degree-{} graph",
            src.degree()
        )));
    }
    let d = src.degree() as usize;
    let len = d + 1;
    let hubs_end = hub_label(src.vlabels().len().checked_sub(1).map(|l| l as LabelId));
    let is_hub = |l: Option<LabelId>| l.is_some_and(|l| l <= hubs_end);

    // Trace each ring once, hub first.
    let mut ring_of = vec![usize::MAX; y.vertex_count()]; // ring index
    let mut pos_of = vec![0usize; y.vertex_count()]; // position behind the hub
    let mut hubs = Vec::new();
    for v in y.vertices() {
        if !is_hub(y.vlabel(v)) {
            match y.vlabel(v) {
                Some(l) if l == port_label(src) => continue,
                _ => {
                    return Err(CodecError::MalformedRing(format!(
                        "ring vertex {v} carries no VERTEX or PORT label"
                    )))
                }
            }
        }
        let ring = hubs.len();
        hubs.push(v);
        let mut cur = v;
        for i in 0..len {
            if ring_of[cur as usize] != usize::MAX {
                return Err(CodecError::MalformedRing(format!(
                    "rings through vertex {cur} overlap or close early"
                )));
            }
            ring_of[cur as usize] = ring;
            pos_of[cur as usize] = i;
            if i > 0 && is_hub(y.vlabel(cur)) {
                return Err(CodecError::MalformedRing(format!(
                    "two VERTEX labels on the ring through vertex {v}"
                )));
            }
            let Some((nxt, back)) = y.across(cur, NEXT) else {
                return Err(CodecError::MalformedRing(format!(
                    "broken ring: no next edge at vertex {cur}"
                )));
            };
            if back != PREVIOUS {
                return Err(CodecError::MalformedRing(format!(
                    "next edge at vertex {cur} does not enter a previous port"
                )));
            }
            cur = nxt;
        }
        if cur != v {
            return Err(CodecError::MalformedRing(format!(
                "ring through vertex {v} has length other than {len}"
            )));
        }
    }
    if ring_of.iter().any(|&r| r == usize::MAX) {
        // Some PORT vertex was never reached by a hub's ring walk.
        return Err(CodecError::MalformedRing("a ring without a VERTEX label".into()));
    }
    if y.vertex_count() != hubs.len() * len {
        return Err(CodecError::MalformedRing("ring sizes do not cover the graph".into()));
    }
    if pos_of[0] != 0 {
        return Err(CodecError::MalformedRing("the pointer is not on a VERTEX vertex".into()));
    }

    // Rebuild the source graph.
    let mut adj = vec![vec![None; d]; hubs.len()];
    let mut labels = vec![None; hubs.len()];
    let mut elabels = Vec::new();
    for (ring, &hub) in hubs.iter().enumerate() {
        labels[ring] = match y.vlabel(hub) {
            Some(0) => None,
            Some(l) => Some(l - 1),
            None => unreachable!("hubs are labeled"),
        };
        if y.across(hub, NEIGHBOR).is_some() {
            return Err(CodecError::MalformedRing(format!(
                "neighbor edge on the VERTEX vertex {hub}"
            )));
        }
    }
    for v in y.vertices() {
        let i = pos_of[v as usize];
        if i == 0 {
            continue;
        }
        let Some((w, q)) = y.across(v, NEIGHBOR) else { continue };
        if q != NEIGHBOR {
            return Err(CodecError::MalformedRing(format!(
                "neighbor edge at vertex {v} enters a ring port"
            )));
        }
        let j = pos_of[w as usize];
        if j == 0 {
            return Err(CodecError::MalformedRing(format!(
                "neighbor edge on the VERTEX vertex {w}"
            )));
        }
        adj[ring_of[v as usize]][i - 1] = Some((ring_of[w as usize], (j - 1) as Port));
        if let Some(l) = y.elabel_at(v, NEIGHBOR) {
            if (v, NEIGHBOR) <= (w, NEIGHBOR) {
                elabels.push(((ring_of[v as usize], (i - 1) as Port), l));
            }
        }
    }
    let (x, _) = CayleyGraph::assemble_canonical(src, ring_of[0], &adj, &labels, &elabels)
        .ok_or_else(|| CodecError::MalformedRing("decoded graph is disconnected".into()))?;
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::graph::{pair, single, NamedGraph, Path, PathStep, VName};
    use rand::Rng;

    fn next_step() -> PathStep {
        PathStep::new(NEXT, PREVIOUS)
    }

    fn neighbor_step() -> PathStep {
        PathStep::new(NEIGHBOR, NEIGHBOR)
    }

    #[test]
    fn ring_signature_shape() {
        let src = Signature::new(
            vec!["1".to_string(), "2".to_string()],
            vec!["0".to_string(), "1".to_string()],
            vec!["z".to_string()],
        )
        .unwrap();
        let rs = ring_signature(&src);
        assert_eq!(rs.ports(), ["previous", "next", "neighbor"]);
        assert_eq!(rs.vlabels(), ["VERTEX", "VERTEX/0", "VERTEX/1", "PORT"]);
        assert_eq!(rs.elabels(), ["z"]);
    }

    #[test]
    fn single_vertex_becomes_one_ring() {
        let sig = Signature::unlabeled(3);
        let x = single(&sig, None).unwrap();
        let y = ring_encode(&x);
        assert_eq!(y.vertex_count(), 4);
        // The pointer sits on the hub; four next-steps walk the whole ring.
        assert_eq!(y.vlabel(0), Some(0));
        let mut walk = Path::empty();
        for i in 1..=3 {
            walk.push(next_step());
            let v = y.vertex_at(&walk).expect("ring is closed");
            assert_eq!(y.vlabel(v), Some(1), "position {i} should be a PORT");
            assert_eq!(y.across(v, NEIGHBOR), None);
        }
        walk.push(next_step());
        assert_eq!(y.vertex_at(&walk), Some(0));
        assert_eq!(ring_decode(&y, &sig).unwrap(), x);
    }

    #[test]
    fn bridged_pair_joins_third_port_to_first() {
        // Two degree-3 vertices joined through ports 2 and 0 (0-based).
        let sig = Signature::unlabeled(3);
        let mut g = NamedGraph::new(sig.clone());
        g.add_vertex(VName::of("a"), None).unwrap();
        g.add_vertex(VName::of("b"), None).unwrap();
        g.add_edge((VName::of("a"), 2), (VName::of("b"), 0), None).unwrap();
        let x = CayleyGraph::canonicalize(&g, &VName::of("a")).unwrap();
        let y = ring_encode(&x);
        assert_eq!(y.vertex_count(), 8);

        // From the pointed hub: three next-steps reach the third PORT
        // vertex, the neighbor edge crosses to the far ring's first PORT
        // vertex, and one previous-step lands on the far hub.
        let mut walk = Path::empty();
        for _ in 0..3 {
            walk.push(next_step());
        }
        walk.push(neighbor_step());
        let far_port = y.vertex_at(&walk).expect("bridge exists");
        assert_eq!(y.vlabel(far_port), Some(1));
        walk.push(PathStep::new(PREVIOUS, NEXT));
        let far_hub = y.vertex_at(&walk).expect("ring continues");
        assert_eq!(y.vlabel(far_hub), Some(0));
        assert_ne!(far_hub, 0);
        assert_eq!(ring_decode(&y, &sig).unwrap(), x);
    }

    #[test]
    fn roundtrips_200_random_graphs() {
        let full = Signature::new(
            vec!["1".to_string(), "2".to_string(), "3".to_string()],
            vec!["a".to_string()],
            vec!["x".to_string(), "y".to_string()],
        )
        .unwrap();
        let sigs = [Signature::unlabeled(1), Signature::unlabeled(4), full];
        let mut rng = corpus::rng(0x41b9);
        for round in 0..200 {
            let sig = &sigs[round % sigs.len()];
            let n = rng.gen_range(1..=30);
            let extra = rng.gen_range(0..=n / 2);
            let (g, p) = corpus::random_named(&mut rng, sig, n, extra, 0.7, 0.7);
            let x = CayleyGraph::canonicalize(&g, &p).unwrap();
            let y = ring_encode(&x);
            let d = sig.degree() as usize;
            assert_eq!(y.vertex_count(), (d + 1) * x.vertex_count());
            let neighbor_edges = y
                .edges()
                .filter(|&(_, p, _, q, _)| p == NEIGHBOR && q == NEIGHBOR)
                .count();
            assert_eq!(neighbor_edges, x.edge_count());
            assert_eq!(ring_decode(&y, sig).unwrap(), x);
        }
    }

    #[test]
    fn encoding_respects_the_locality_bound() {
        // A vertex at distance k from the pointer has its whole ring within
        // distance (d + 2)(k + 1) of the encoded pointer.
        let sig = Signature::unlabeled(3);
        let mut rng = corpus::rng(5150);
        for _ in 0..40 {
            let (g, p) = corpus::random_named(&mut rng, &sig, 14, 3, 0.5, 0.5);
            let x = CayleyGraph::canonicalize(&g, &p).unwrap();
            let y = ring_encode(&x);
            let dist_x = x.distances();
            let dist_y = y.distances();
            let d = sig.degree() as u32;
            for u in x.vertices() {
                // Locate u's hub in the encoding by walking the encoded
                // form of any path that reaches u in the source.
                let mut walk = Path::empty();
                for st in &x.path_of(u).0 {
                    for _ in 0..=st.out {
                        walk.push(next_step());
                    }
                    walk.push(neighbor_step());
                    for _ in 0..=st.inp {
                        walk.push(PathStep::new(PREVIOUS, NEXT));
                    }
                }
                let hub = y.vertex_at(&walk).expect("encoded path mirrors the source");
                let bound = (d + 2) * (dist_x[u as usize] + 1);
                let mut around = hub;
                for _ in 0..=d {
                    assert!(
                        dist_y[around as usize] <= bound,
                        "ring vertex of {u} at distance {} > {bound}",
                        dist_y[around as usize],
                    );
                    around = y
                        .walk(around, &Path(vec![next_step()]))
                        .expect("rings are closed");
                }
            }
        }
    }

    #[test]
    fn malformed_rings_are_rejected() {
        let src = Signature::unlabeled(2);
        let rs = ring_signature(&src);
        let malformed = |y: &CayleyGraph| match ring_decode(y, &src) {
            Err(CodecError::MalformedRing(_)) => (),
            other => panic!("expected MalformedRing, got {other:?}"),
        };

        // Wrong signature entirely.
        let plain = single(&src, None).unwrap();
        malformed(&plain);

        // A ring of length 2 where 3 is required.
        let mut g = NamedGraph::new(rs.clone());
        g.add_vertex(VName::of("hub"), Some(0)).unwrap();
        g.add_vertex(VName::of("p"), Some(1)).unwrap();
        g.add_edge((VName::of("hub"), NEXT), (VName::of("p"), PREVIOUS), None).unwrap();
        g.add_edge((VName::of("p"), NEXT), (VName::of("hub"), PREVIOUS), None).unwrap();
        malformed(&CayleyGraph::canonicalize(&g, &VName::of("hub")).unwrap());

        // A proper ring shape with no VERTEX label anywhere.
        let mut g = NamedGraph::new(rs.clone());
        for n in ["a", "b", "c"] {
            g.add_vertex(VName::of(n), Some(1)).unwrap();
        }
        for (n, m) in [("a", "b"), ("b", "c"), ("c", "a")] {
            g.add_edge((VName::of(n), NEXT), (VName::of(m), PREVIOUS), None).unwrap();
        }
        malformed(&CayleyGraph::canonicalize(&g, &VName::of("a")).unwrap());

        // Two hubs on one ring.
        let mut g = NamedGraph::new(rs.clone());
        for n in ["a", "b", "c"] {
            g.add_vertex(VName::of(n), Some(0)).unwrap();
        }
        for (n, m) in [("a", "b"), ("b", "c"), ("c", "a")] {
            g.add_edge((VName::of(n), NEXT), (VName::of(m), PREVIOUS), None).unwrap();
        }
        malformed(&CayleyGraph::canonicalize(&g, &VName::of("a")).unwrap());

        // A neighbor edge joining two hubs directly.
        let mut g = NamedGraph::new(rs.clone());
        let hub = |side: char| VName::of(format!("hub{side}"));
        for side in ['l', 'r'] {
            g.add_vertex(hub(side), Some(0)).unwrap();
            for i in 0..2 {
                g.add_vertex(VName::of(format!("p{side}{i}")), Some(1)).unwrap();
            }
            let names = [
                hub(side),
                VName::of(format!("p{side}0")),
                VName::of(format!("p{side}1")),
            ];
            for i in 0..3 {
                g.add_edge(
                    (names[i].clone(), NEXT),
                    (names[(i + 1) % 3].clone(), PREVIOUS),
                    None,
                )
                .unwrap();
            }
        }
        g.add_edge((hub('l'), NEIGHBOR), (hub('r'), NEIGHBOR), None).unwrap();
        malformed(&CayleyGraph::canonicalize(&g, &hub('l')).unwrap());

        // The pointer sitting on a PORT vertex.
        let x = pair(&src, [None, None], None).unwrap();
        let ok = ring_encode(&x);
        malformed(&ok.shift_to(1));
    }
}
