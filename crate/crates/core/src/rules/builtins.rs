//! The example rules shipped with the engine.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::graph::{CayleyGraph, GraphError, Path, Signature};

use super::{enumerate_disks, ImageGraph, LocalRule, RuleError};

/// Names accepted by [`builtin`].
pub const BUILTIN_NAMES: &[&str] = &[
    "identity",
    "inflating_line",
    "labeled_turtle",
    "rotate",
    "turtle",
];

/// Looks up a shipped rule by name.  `identity` is returned over the default
/// unlabeled degree-2 signature; use [`identity_rule`] for other signatures.
pub fn builtin(name: &str) -> Result<LocalRule, RuleError> {
    match name {
        "identity" => identity_rule(&Signature::unlabeled(2)),
        "inflating_line" => inflating_line(),
        "labeled_turtle" => labeled_turtle(),
        "rotate" => Ok(rotate()),
        "turtle" => turtle(),
        _ => Err(RuleError::UnknownBuiltin(name.to_string())),
    }
}

fn table_rule(
    name: &str,
    sig: Arc<Signature>,
    radius: u8,
    bound: usize,
    image_of: impl Fn(&CayleyGraph) -> ImageGraph,
) -> Result<LocalRule, RuleError> {
    let mut table = BTreeMap::new();
    for disk in enumerate_disks(&sig, radius)? {
        let image = image_of(&disk);
        table.insert(disk, image);
    }
    LocalRule::from_table(name, sig, radius, bound, table)
}

/// The two-state flip-flop on degree-1 graphs: the isolated vertex splits
/// into the joined pair, the joined pair collapses back onto one vertex.
pub fn turtle() -> Result<LocalRule, RuleError> {
    let sig = Signature::unlabeled(1);
    table_rule("turtle", sig, 0, 2, |disk| {
        let mut img = ImageGraph::new();
        if disk.vertex_count() == 1 {
            // Alone: split into successors 0 and 1, joined by an edge.
            let a = img.add_vertex([(Path::empty(), 0)], None);
            let b = img.add_vertex([(Path::empty(), 1)], None);
            img.add_edge(a, 0, b, 0, None);
        } else {
            // Joined: both endpoints map onto one merged successor.
            img.add_vertex([(Path::empty(), 0), (Path::step(0, 0), 0)], None);
        }
        img
    })
}

/// [`turtle`] with the merged successor renamed to a fresh atom, so the two
/// images of a joined pair no longer share a vertex.  Deliberately fails the
/// near-overlap validity condition; kept as a test subject.
pub fn turtle_mutant() -> Result<LocalRule, RuleError> {
    let sig = Signature::unlabeled(1);
    table_rule("turtle-mutant", sig, 0, 2, |disk| {
        let mut img = ImageGraph::new();
        if disk.vertex_count() == 1 {
            let a = img.add_vertex([(Path::empty(), 0)], None);
            let b = img.add_vertex([(Path::empty(), 1)], None);
            img.add_edge(a, 0, b, 0, None);
        } else {
            img.add_vertex([(Path::empty(), 0), (Path::step(0, 0), 1)], None);
        }
        img
    })
}

/// The labelled flip-flop of radius 1 on degree-1 graphs over Σ = {0, 1}:
/// a lone vertex splits into a pair carrying its label, a pair collapses
/// onto one vertex labelled with the minimum of the two labels.  Radius 1
/// because both sites must see both labels to agree on the minimum.
pub fn labeled_turtle() -> Result<LocalRule, RuleError> {
    let sig = Signature::with_vlabels(1, vec!["0", "1"]);
    table_rule("labeled-turtle", sig, 1, 2, |disk| {
        let mut img = ImageGraph::new();
        if disk.vertex_count() == 1 {
            let l = disk.vlabel(0);
            let a = img.add_vertex([(Path::empty(), 0)], l);
            let b = img.add_vertex([(Path::empty(), 1)], l);
            img.add_edge(a, 0, b, 0, None);
        } else {
            let l = disk.vlabel(0).min(disk.vlabel(1));
            img.add_vertex([(Path::empty(), 0), (Path::step(0, 0), 0)], l);
        }
        img
    })
}

/// Doubles every degree-2 graph: each vertex splits into a two-vertex chain,
/// and every original edge re-connects the matching ends of the chains.
pub fn inflating_line() -> Result<LocalRule, RuleError> {
    let sig = Signature::unlabeled(2);
    table_rule("inflating-line", sig, 0, 4, |disk| {
        let mut img = ImageGraph::new();
        // The split pair: successor 0 keeps the port-0 side, successor 1 the
        // port-1 side, joined 1 → 0 so chains keep the global orientation.
        let head = img.add_vertex([(Path::empty(), 0)], None);
        let tail = img.add_vertex([(Path::empty(), 1)], None);
        img.add_edge(head, 1, tail, 0, None);
        for p in 0..2u8 {
            if let Some((_, q)) = disk.across(0, p) {
                // The neighbor splits the same way; our side-p end plugs
                // into the end of the neighbor's pair that owns its port q.
                let far = img.add_vertex([(Path::step(p, q), q as u16)], None);
                let near = if p == 0 { head } else { tail };
                img.add_edge(near, p, far, q, None);
            }
        }
        img
    })
}

/// The radius-0 identity on any signature without edge labels.  (A radius-0
/// observer cannot see edge labels, so no radius-0 rule can reproduce them;
/// identity over edge-labelled signatures does not exist in this model.)
pub fn identity_rule(sig: &Arc<Signature>) -> Result<LocalRule, RuleError> {
    if !sig.elabels().is_empty() {
        return Err(RuleError::Graph(GraphError::BadValue(
            "identity needs an edge-label-free signature: a radius-0 rule cannot observe edge labels".into(),
        )));
    }
    let d = sig.degree();
    table_rule("identity", sig.clone(), 0, d as usize + 1, |disk| {
        let mut img = ImageGraph::new();
        let center = img.add_vertex([(Path::empty(), 0)], disk.vlabel(0));
        for p in 0..d {
            if let Some((_, q)) = disk.across(0, p) {
                let far = img.add_vertex([(Path::step(p, q), 0)], None);
                img.add_edge(center, p, far, q, None);
            }
        }
        img
    })
}

/// Pulls every vertex label from two hops away on degree-2 graphs over
/// Σ = {0, 1}: a vertex adopts the label found by leaving through port 1 and
/// continuing straight through the neighbor, while the wiring stays fixed.
/// Where the walk runs out of road (a line end) the old label is kept.  On
/// the standard oriented cycle the labelling rotates two positions per step.
/// Radius 2 because the adopted label sits two steps away.
pub fn rotate() -> LocalRule {
    let sig = Signature::with_vlabels(2, vec!["0", "1"]);
    LocalRule::native("rotate", sig, 2, 4, |disk| {
        let mut label = disk.vlabel(0);
        if let Some((a, q)) = disk.across(0, 1) {
            if let Some((b, _)) = disk.across(a, 1 - q) {
                label = disk.vlabel(b);
            }
        }
        let mut img = ImageGraph::new();
        let center = img.add_vertex([(Path::empty(), 0)], label);
        for p in 0..2u8 {
            if let Some((_, q)) = disk.across(0, p) {
                let far = img.add_vertex([(Path::step(p, q), 0)], None);
                img.add_edge(center, p, far, q, None);
            }
        }
        Ok(img)
    })
}
