//! Observed neighborhoods: extraction from a host graph and exhaustive
//! enumeration of all possible observations.
//!
//! The observation of radius `r` at a vertex is a tree: its vertices are the
//! walks of length ≤ r+1 from the center that never immediately re-cross the
//! edge they arrived by.  Vertex labels are visible up to depth r, edge labels
//! up to edges between two depth-≤r vertices; the outermost layer carries
//! structure only.  Walks are kept distinct even when they land on the same
//! host vertex, so the observation is exactly what a bounded local explorer
//! can chart, and the set of possible observations is finite per signature.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::graph::{CayleyGraph, LabelId, PathStep, Port, Signature, VertexId};

use super::RuleError;

/// Default cap on how many neighborhoods an exhaustive enumeration may yield.
pub const DEFAULT_DISK_BUDGET: u128 = 1_000_000;

/// The enumeration cap: `CGD_ENUM_BUDGET` if set, else the default.
pub fn disk_budget() -> u128 {
    std::env::var("CGD_ENUM_BUDGET")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(DEFAULT_DISK_BUDGET)
}

/// The radius-`r` neighborhood of `x` observed from `center`, in canonical
/// form (the center is the pointer).
pub fn observed_disk(x: &CayleyGraph, center: VertexId, r: u8) -> CayleyGraph {
    let d = x.degree();
    // (host vertex, parent index, step that reached it, depth); breadth-first
    // discovery order doubles as the canonical numbering.
    let mut nodes: Vec<(VertexId, usize, PathStep, u32)> =
        vec![(center, usize::MAX, PathStep::new(0, 0), 0)];
    let mut head = 0;
    while head < nodes.len() {
        let (u, parent, step, depth) = nodes[head];
        let here = head;
        head += 1;
        if depth == r as u32 + 1 {
            continue;
        }
        for p in 0..d {
            if parent != usize::MAX && p == step.inp {
                continue; // that port holds the edge back to the parent
            }
            if let Some((w, q)) = x.across(u, p) {
                nodes.push((w, here, PathStep::new(p, q), depth + 1));
            }
        }
    }

    let mut ports: Vec<Option<(VertexId, Port)>> = vec![None; nodes.len() * d as usize];
    let mut vlabels: Vec<Option<LabelId>> = vec![None; nodes.len()];
    let mut elabels: BTreeMap<(VertexId, Port), LabelId> = BTreeMap::new();
    for (i, &(u, parent, step, depth)) in nodes.iter().enumerate() {
        if depth <= r as u32 {
            vlabels[i] = x.vlabel(u);
        }
        if parent != usize::MAX {
            ports[parent * d as usize + step.out as usize] = Some((i as VertexId, step.inp));
            ports[i * d as usize + step.inp as usize] = Some((parent as VertexId, step.out));
            if depth <= r as u32 {
                // Edge between two labelled layers: its label is visible.
                if let Some(l) = x.elabel_at(nodes[parent].0, step.out) {
                    elabels.insert((parent as VertexId, step.out), l);
                }
            }
        }
    }
    CayleyGraph::from_parts(x.sig().clone(), ports, vlabels, elabels)
}

/// How many distinct radius-`r` observations the signature admits.
pub fn count_disks(sig: &Arc<Signature>, r: u8) -> Result<u128, RuleError> {
    let d = sig.degree() as u128;
    let vl = sig.vlabels().len().max(1) as u128;
    let el = sig.elabels().len().max(1) as u128;
    let over = || RuleError::BudgetExceeded("neighborhood count overflows".into());
    let pow = |base: u128, exp: u128| -> Result<u128, RuleError> {
        let mut acc: u128 = 1;
        for _ in 0..exp {
            acc = acc.checked_mul(base).ok_or_else(over)?;
        }
        Ok(acc)
    };
    // subtree[k]: configurations of a subtree rooted at depth k.  A free port
    // of a depth-(k-1) vertex is either unused or holds one of d in-ports ×
    // edge labels (visible only if the child is within the labelled region) ×
    // child subtrees.
    let mut subtree: Vec<u128> = vec![1; r as usize + 2]; // depth r+1: bare leaf
    for k in (1..=r as usize).rev() {
        let edge_labels = if k + 1 <= r as usize { el } else { 1 };
        let port = d
            .checked_mul(edge_labels)
            .and_then(|x| x.checked_mul(subtree[k + 1]))
            .and_then(|x| x.checked_add(1))
            .ok_or_else(over)?;
        subtree[k] = vl.checked_mul(pow(port, d - 1)?).ok_or_else(over)?;
    }
    let edge_labels = if 1 <= r { el } else { 1 };
    let port0 = d
        .checked_mul(edge_labels)
        .and_then(|x| x.checked_mul(subtree[1]))
        .and_then(|x| x.checked_add(1))
        .ok_or_else(over)?;
    vl.checked_mul(pow(port0, d)?).ok_or_else(over)
}

/// One subtree during enumeration: a chosen label and, per usable port in
/// ascending order, an optional `(out, in, edge label, child)` branch.
struct TreeV {
    label: Option<LabelId>,
    kids: Vec<(Port, Port, Option<LabelId>, TreeV)>,
}

fn label_choices(n: usize) -> Vec<Option<LabelId>> {
    if n == 0 {
        vec![None]
    } else {
        (0..n as LabelId).map(Some).collect()
    }
}

fn gen_vertex(sig: &Arc<Signature>, depth: u8, r: u8, parent_in: Option<Port>) -> Vec<TreeV> {
    if depth == r + 1 {
        return vec![TreeV { label: None, kids: Vec::new() }];
    }
    let d = sig.degree();
    let elabel_opts: Vec<Option<LabelId>> = if depth + 1 <= r {
        label_choices(sig.elabels().len())
    } else {
        vec![None]
    };
    // Options for one port: absent, or each (in-port, edge label, subtree).
    let mut partials: Vec<(Option<LabelId>, Vec<(Port, Port, Option<LabelId>, TreeV)>)> =
        label_choices(sig.vlabels().len())
            .into_iter()
            .map(|l| (l, Vec::new()))
            .collect();
    for p in 0..d {
        if parent_in == Some(p) {
            continue;
        }
        let mut grown = Vec::new();
        for (label, kids) in &partials {
            grown.push((*label, kids.clone()));
            for q in 0..d {
                for &elabel in &elabel_opts {
                    for sub in gen_vertex(sig, depth + 1, r, Some(q)) {
                        let mut kids = kids.clone();
                        kids.push((p, q, elabel, sub));
                        grown.push((*label, kids));
                    }
                }
            }
        }
        partials = grown;
    }
    partials
        .into_iter()
        .map(|(label, kids)| TreeV { label, kids })
        .collect()
}

impl Clone for TreeV {
    fn clone(&self) -> Self {
        TreeV {
            label: self.label,
            kids: self
                .kids
                .iter()
                .map(|(a, b, l, t)| (*a, *b, *l, t.clone()))
                .collect(),
        }
    }
}

fn tree_to_graph(sig: &Arc<Signature>, root: &TreeV) -> CayleyGraph {
    let d = sig.degree() as usize;
    // Breadth-first assignment so the numbering is canonical.
    let mut nodes: Vec<&TreeV> = vec![root];
    let mut links: Vec<(usize, usize, Port, Port, Option<LabelId>)> = Vec::new(); // parent, child, out, in, elabel
    let mut head = 0;
    while head < nodes.len() {
        let cur = nodes[head];
        let here = head;
        head += 1;
        for (p, q, el, sub) in &cur.kids {
            nodes.push(sub);
            links.push((here, nodes.len() - 1, *p, *q, *el));
        }
    }
    let mut ports: Vec<Option<(VertexId, Port)>> = vec![None; nodes.len() * d];
    let vlabels: Vec<Option<LabelId>> = nodes.iter().map(|n| n.label).collect();
    let mut elabels: BTreeMap<(VertexId, Port), LabelId> = BTreeMap::new();
    for &(parent, child, p, q, el) in &links {
        ports[parent * d + p as usize] = Some((child as VertexId, q));
        ports[child * d + q as usize] = Some((parent as VertexId, p));
        if let Some(l) = el {
            elabels.insert((parent as VertexId, p), l);
        }
    }
    CayleyGraph::from_parts(sig.clone(), ports, vlabels, elabels)
}

/// Every radius-`r` neighborhood over `sig`, in ascending canonical order.
pub fn enumerate_disks(sig: &Arc<Signature>, r: u8) -> Result<Vec<CayleyGraph>, RuleError> {
    enumerate_disks_with(sig, r, disk_budget())
}

/// [`enumerate_disks`] with an explicit budget.
pub fn enumerate_disks_with(
    sig: &Arc<Signature>,
    r: u8,
    budget: u128,
) -> Result<Vec<CayleyGraph>, RuleError> {
    let count = count_disks(sig, r)?;
    if count > budget {
        return Err(RuleError::BudgetExceeded(format!(
            "{count} radius-{r} neighborhoods over this signature (budget {budget})"
        )));
    }
    let mut out: Vec<CayleyGraph> = gen_vertex(sig, 0, r, None)
        .iter()
        .map(|t| tree_to_graph(sig, t))
        .collect();
    out.sort();
    debug_assert!(out.windows(2).all(|w| w[0] != w[1]), "duplicate neighborhoods");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build;

    #[test]
    fn counts_match_enumeration() {
        for (d, nv, ne, r) in [(1u8, 0usize, 0usize, 0u8), (2, 0, 0, 0), (1, 2, 0, 0), (2, 2, 1, 1), (1, 0, 0, 1)] {
            let sig = Signature::new(
                (0..d).map(|p| p.to_string()).collect(),
                (0..nv).map(|i| format!("s{i}")).collect(),
                (0..ne).map(|i| format!("t{i}")).collect(),
            )
            .unwrap();
            let disks = enumerate_disks(&sig, r).unwrap();
            assert_eq!(disks.len() as u128, count_disks(&sig, r).unwrap());
        }
    }

    #[test]
    fn degree_one_unlabeled_radius_zero_has_two() {
        let sig = Signature::unlabeled(1);
        assert_eq!(enumerate_disks(&sig, 0).unwrap().len(), 2);
    }

    #[test]
    fn degree_two_unlabeled_radius_zero_has_nine() {
        let sig = Signature::unlabeled(2);
        assert_eq!(enumerate_disks(&sig, 0).unwrap().len(), 9);
    }

    #[test]
    fn observation_is_enumerated() {
        // Every observation of small random graphs appears in the listing.
        let sig = Signature::unlabeled(2);
        let all = enumerate_disks(&sig, 0).unwrap();
        let mut rng = crate::corpus::rng(3);
        for _ in 0..30 {
            let x = crate::corpus::random_graph(&mut rng, &sig, 6, 2);
            for v in x.vertices() {
                let obs = observed_disk(&x, v, 0);
                assert!(all.contains(&obs), "missing observation:\n{obs}");
            }
        }
    }

    #[test]
    fn loops_unfold_like_cycles() {
        // A self-loop and a long cycle look identical to a radius-0 observer.
        let sig = Signature::unlabeled(2);
        let one = build::cycle_n(&sig, 1).unwrap();
        let five = build::cycle_n(&sig, 5).unwrap();
        assert_eq!(observed_disk(&one, 0, 0), observed_disk(&five, 0, 0));
    }

    #[test]
    fn labels_fade_beyond_radius() {
        let sig = Signature::with_vlabels(2, vec!["a", "b"]);
        let x = build::line(&sig, &[Some(0), Some(1), Some(0), Some(1)]).unwrap();
        let obs = observed_disk(&x, 0, 1);
        // Center and depth-1 labelled; the depth-2 vertex is structure only.
        assert_eq!(obs.vertex_count(), 3);
        assert_eq!(obs.vlabel(0), Some(0));
        assert_eq!(obs.vlabel(1), Some(1));
        assert_eq!(obs.vlabel(2), None);
    }
}
