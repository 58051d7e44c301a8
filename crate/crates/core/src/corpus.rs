//! Seeded random graph generation for tests, fuzzing sweeps and the CLI.
//!
//! All generators take an explicit RNG so every caller is reproducible from a
//! seed; [`rng`] is the conventional entry point.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::graph::{CayleyGraph, LabelId, NamedGraph, Port, Signature, VName};

/// The deterministic RNG used across the test corpus.
pub fn rng(seed: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

fn pick_label(rng: &mut impl Rng, alphabet: usize, density: f64) -> Option<LabelId> {
    if alphabet > 0 && rng.gen_bool(density) {
        Some(rng.gen_range(0..alphabet) as LabelId)
    } else {
        None
    }
}

/// All `(vertex, port)` slots of `g` not yet holding an edge.
fn free_slots(g: &NamedGraph) -> Vec<(VName, Port)> {
    let d = g.sig().degree();
    let mut out = Vec::new();
    for (name, _) in g.vertices() {
        for p in 0..d {
            if g.port_free(name, p) {
                out.push((name.clone(), p));
            }
        }
    }
    out
}

/// A random connected port graph with explicit vertex names `v0..`, returned
/// with its pointer.  Grows a random spanning tree, then adds up to
/// `extra_edges` chords between leftover free ports (self-loops allowed).
/// Labels appear with the given densities when the alphabets are non-empty.
pub fn random_named(
    rng: &mut impl Rng,
    sig: &Arc<Signature>,
    vertices: usize,
    extra_edges: usize,
    vlabel_density: f64,
    elabel_density: f64,
) -> (NamedGraph, VName) {
    assert!(vertices >= 1);
    let nv = sig.vlabels().len();
    let ne = sig.elabels().len();
    let name = |i: usize| VName::of(format!("v{i}"));
    let mut g = NamedGraph::new(sig.clone());
    g.add_vertex(name(0), pick_label(rng, nv, vlabel_density)).unwrap();
    for i in 1..vertices {
        // Attach the new vertex to any existing free slot.
        let slots = free_slots(&g);
        let Some((host, hp)) = slots.choose(rng).cloned() else {
            break;
        };
        g.add_vertex(name(i), pick_label(rng, nv, vlabel_density)).unwrap();
        let p: Port = rng.gen_range(0..sig.degree());
        g.add_edge((name(i), p), (host, hp), pick_label(rng, ne, elabel_density))
            .unwrap();
    }
    for _ in 0..extra_edges {
        let slots = free_slots(&g);
        if slots.len() < 2 {
            break;
        }
        let mut pick = slots.choose_multiple(rng, 2);
        let a = pick.next().unwrap().clone();
        let b = pick.next().unwrap().clone();
        g.add_edge(a, b, pick_label(rng, ne, elabel_density)).unwrap();
    }
    let pointer = name(rng.gen_range(0..g.vertex_count()));
    (g, pointer)
}

/// Canonical form of [`random_named`] with full labelling.
pub fn random_graph(
    rng: &mut impl Rng,
    sig: &Arc<Signature>,
    vertices: usize,
    extra_edges: usize,
) -> CayleyGraph {
    let (g, pointer) = random_named(rng, sig, vertices, extra_edges, 1.0, 1.0);
    CayleyGraph::canonicalize(&g, &pointer).unwrap()
}

/// Every connected pointed graph with exactly `vertices` vertices over `sig`,
/// across all vertex and edge labelings, deduplicated modulo pointed
/// isomorphism.  Exhaustive, so only practical for small sizes.
pub fn all_graphs(
    sig: &Arc<Signature>,
    vertices: usize,
) -> std::collections::BTreeSet<CayleyGraph> {
    let (set, _) = all_graphs_within(sig, vertices, usize::MAX).unwrap();
    set
}

/// [`all_graphs`] with a work cap: counts every candidate wiring × labeling
/// it generates and gives up with `None` once the count would cross `cap`.
/// On success also reports the work done, so callers can budget a sweep over
/// several sizes.
///
/// Candidates are port assignments filled in slot order where vertex `k > 0`
/// is first referenced by some smaller-numbered vertex — every connected
/// graph, numbered by discovery, looks like this — so the waste over the true
/// count stays small, and canonicalization dedupes the rest.
pub fn all_graphs_within(
    sig: &Arc<Signature>,
    vertices: usize,
    cap: usize,
) -> Option<(std::collections::BTreeSet<CayleyGraph>, usize)> {
    let d = sig.degree() as usize;
    let nv = sig.vlabels().len();
    let ne = sig.elabels().len();
    struct Gen {
        sig: Arc<Signature>,
        d: usize,
        n: usize,
        labelings: [usize; 2],
        cap: usize,
        work: usize,
        ports: Vec<Option<(usize, Port)>>,
        seen: std::collections::BTreeSet<CayleyGraph>,
    }
    impl Gen {
        fn rec(&mut self, slot: usize, maxv: usize) -> Option<()> {
            if slot == self.ports.len() {
                return if maxv == self.n - 1 { self.emit() } else { Some(()) };
            }
            if slot / self.d > maxv {
                return Some(()); // this vertex was never introduced
            }
            if self.ports[slot].is_some() {
                return self.rec(slot + 1, maxv);
            }
            self.rec(slot + 1, maxv)?; // leave the slot free
            let horizon = (maxv + 2).min(self.n) * self.d;
            for far in slot + 1..horizon {
                if self.ports[far].is_none() {
                    self.ports[slot] = Some((far / self.d, (far % self.d) as Port));
                    self.ports[far] = Some((slot / self.d, (slot % self.d) as Port));
                    self.rec(slot + 1, maxv.max(far / self.d))?;
                    self.ports[slot] = None;
                    self.ports[far] = None;
                }
            }
            Some(())
        }

        /// Runs the labeling odometer over the current wiring and
        /// canonicalizes every labeled candidate.  `None` = budget crossed.
        fn emit(&mut self) -> Option<()> {
            let links: Vec<(usize, Port)> = self
                .ports
                .iter()
                .enumerate()
                .filter_map(|(slot, far)| {
                    let (w, q) = (*far)?;
                    (w * self.d + q as usize > slot).then_some((slot / self.d, (slot % self.d) as Port))
                })
                .collect();
            let combos = self
                .labelings[0]
                .checked_pow(self.n as u32)
                .and_then(|c| c.checked_mul(self.labelings[1].checked_pow(links.len() as u32)?))
                .unwrap_or(usize::MAX);
            if combos > self.cap - self.work {
                return None;
            }
            self.work += combos;
            let adj: Vec<Vec<Option<(usize, Port)>>> =
                self.ports.chunks(self.d).map(|c| c.to_vec()).collect();
            let mut digits = vec![0usize; self.n + links.len()];
            loop {
                let vlabels: Vec<Option<LabelId>> = digits[..self.n]
                    .iter()
                    .map(|&digit| digit.checked_sub(1).map(|l| l as LabelId))
                    .collect();
                let elabels: Vec<((usize, Port), LabelId)> = links
                    .iter()
                    .zip(&digits[self.n..])
                    .filter_map(|(&at, &digit)| Some((at, digit.checked_sub(1)? as LabelId)))
                    .collect();
                if let Some((g, _)) =
                    CayleyGraph::assemble_canonical(&self.sig, 0, &adj, &vlabels, &elabels)
                {
                    self.seen.insert(g);
                }
                let mut i = 0;
                while i < digits.len() {
                    digits[i] += 1;
                    let radix = self.labelings[usize::from(i >= self.n)];
                    if digits[i] < radix {
                        break;
                    }
                    digits[i] = 0;
                    i += 1;
                }
                if i == digits.len() {
                    return Some(());
                }
            }
        }
    }
    let mut gen = Gen {
        sig: sig.clone(),
        d,
        n: vertices,
        labelings: [nv + 1, ne + 1],
        cap,
        work: 0,
        ports: vec![None; vertices * d],
        seen: std::collections::BTreeSet::new(),
    };
    gen.rec(0, 0)?;
    Some((gen.seen, gen.work))
}

/// Structure-preserving random renaming of every vertex.  Returns the renamed
/// graph and the new name of each old vertex in iteration order.
pub fn rename_shuffled(rng: &mut impl Rng, g: &NamedGraph) -> (NamedGraph, Vec<(VName, VName)>) {
    let mut fresh: Vec<usize> = (0..g.vertex_count()).collect();
    fresh.shuffle(rng);
    let map: Vec<(VName, VName)> = g
        .vertices()
        .enumerate()
        .map(|(i, (n, _))| (n.clone(), VName::of(format!("w{}", fresh[i]))))
        .collect();
    let rename = |n: &VName| -> VName {
        map.iter().find(|(old, _)| old == n).unwrap().1.clone()
    };
    let mut h = NamedGraph::new(g.sig().clone());
    for (n, l) in g.vertices() {
        h.add_vertex(rename(n), l).unwrap();
    }
    for e in g.edges() {
        h.add_edge(
            (rename(&e.a.0), e.a.1),
            (rename(&e.b.0), e.b.1),
            g.elabel(e),
        )
        .unwrap();
    }
    (h, map)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_deterministic() {
        let sig = Signature::with_vlabels(3, vec!["x", "y"]);
        let a = random_graph(&mut rng(7), &sig, 12, 4);
        let b = random_graph(&mut rng(7), &sig, 12, 4);
        assert_eq!(a, b);
    }

    #[test]
    fn exhaustive_tiny_enumeration_matches_hand_counts() {
        let plain = Signature::unlabeled(1);
        assert_eq!(all_graphs(&plain, 1).len(), 1);
        assert_eq!(all_graphs(&plain, 2).len(), 1);
        let two = Signature::with_vlabels(1, vec!["a", "b"]);
        assert_eq!(all_graphs(&two, 1).len(), 3);
        assert_eq!(all_graphs(&two, 2).len(), 9);
        let sig = Signature::with_vlabels(2, vec!["0", "1"]);
        let all3 = all_graphs(&sig, 3);
        assert!(all3
            .contains(&crate::graph::build::cycle(&sig, &[Some(0), None, Some(1)]).unwrap()));
        assert!(all3.contains(&crate::graph::build::line(&sig, &[None; 3]).unwrap()));
    }

    #[test]
    fn renaming_preserves_canonical_form() {
        let sig = Signature::unlabeled(3);
        let mut r = rng(11);
        for _ in 0..20 {
            let (g, pointer) = random_named(&mut r, &sig, 8, 3, 0.0, 0.0);
            let x = CayleyGraph::canonicalize(&g, &pointer).unwrap();
            let (h, map) = rename_shuffled(&mut r, &g);
            let new_pointer = map.iter().find(|(old, _)| *old == pointer).unwrap().1.clone();
            let y = CayleyGraph::canonicalize(&h, &new_pointer).unwrap();
            assert_eq!(x, y);
        }
    }
}
