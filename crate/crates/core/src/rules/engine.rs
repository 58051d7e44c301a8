//! The synchronous global step: apply the rule everywhere and glue.

use std::collections::{BTreeMap, HashMap};

use crate::graph::{
    canonical_order, CayleyGraph, LabelId, Port, Signature, Suffix, VertexId,
};

use super::{observed_disk, ImageGraph, LocalRule, RuleError};

/// Union-find over dense indices.
struct Uf {
    parent: Vec<usize>,
}

impl Uf {
    fn new() -> Self {
        Uf { parent: Vec::new() }
    }

    fn make(&mut self) -> usize {
        self.parent.push(self.parent.len());
        self.parent.len() - 1
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) {
        let (a, b) = (self.find(a), self.find(b));
        if a != b {
            self.parent[a.max(b)] = a.min(b);
        }
    }
}

fn merge_label(
    slot: &mut Option<LabelId>,
    new: Option<LabelId>,
    what: &str,
) -> Result<(), RuleError> {
    match (&slot, new) {
        (Some(a), Some(b)) if *a != b => Err(RuleError::InconsistentUnion(format!(
            "{what} labelled both {a} and {b}"
        ))),
        (None, Some(b)) => {
            *slot = Some(b);
            Ok(())
        }
        _ => Ok(()),
    }
}

/// The result of gluing a batch of images on a host graph: one group per
/// produced vertex, with its label, port attachments and edge labels.
pub(super) struct Glued {
    pub vlabels: Vec<Option<LabelId>>,
    /// Both directions of every glued edge.
    pub attach: HashMap<(usize, Port), (usize, Port)>,
    /// Keyed by the normalized (lesser, greater) attachment pair.
    pub elabels: HashMap<((usize, Port), (usize, Port)), Option<LabelId>>,
    /// Group of each resolved atom.
    pub atom_group: HashMap<(VertexId, Suffix), usize>,
}

/// Resolves every image's atoms against the host and glues the images:
/// image vertices whose resolved name sets intersect become one group.
/// Fails if overlapping images disagree on a label or on what an edge
/// connects — the union the step is supposed to take does not exist then.
pub(super) fn glue_images(
    x: &CayleyGraph,
    sites: &[(VertexId, ImageGraph)],
    rule_name: &str,
) -> Result<Glued, RuleError> {
    let mut uf = Uf::new();
    let mut atom_id: HashMap<(VertexId, Suffix), usize> = HashMap::new();
    let mut produced: Vec<(usize, Option<LabelId>)> = Vec::new();
    let mut edges: Vec<(usize, Port, usize, Port, Option<LabelId>)> = Vec::new();

    for (u, image) in sites {
        let base = produced.len();
        for iv in image.vertices() {
            let mut rep: Option<usize> = None;
            for (path, suffix) in &iv.atoms {
                let host = x.walk(*u, path).ok_or_else(|| {
                    RuleError::BadImage(format!(
                        "atom path {path} does not exist at vertex {u} (rule {rule_name})"
                    ))
                })?;
                let id = *atom_id.entry((host, *suffix)).or_insert_with(|| uf.make());
                match rep {
                    None => rep = Some(id),
                    Some(prev) => uf.union(prev, id),
                }
            }
            let rep = rep.ok_or_else(|| {
                RuleError::BadImage(format!("empty image vertex name (rule {rule_name})"))
            })?;
            produced.push((rep, iv.label));
        }
        for &(a, pa, b, pb, l) in image.edges() {
            edges.push((base + a, pa, base + b, pb, l));
        }
    }

    // Fold produced vertices into groups, checking label agreement.
    let mut group_of_root: HashMap<usize, usize> = HashMap::new();
    let mut vlabels: Vec<Option<LabelId>> = Vec::new();
    let mut group_of_produced: Vec<usize> = Vec::with_capacity(produced.len());
    for &(rep, label) in &produced {
        let root = uf.find(rep);
        let g = *group_of_root.entry(root).or_insert_with(|| {
            vlabels.push(None);
            vlabels.len() - 1
        });
        merge_label(&mut vlabels[g], label, "a merged vertex")?;
        group_of_produced.push(g);
    }
    let atom_group: HashMap<(VertexId, Suffix), usize> = atom_id
        .iter()
        .filter_map(|(&atom, &id)| {
            group_of_root.get(&uf.find(id)).map(|&g| (atom, g))
        })
        .collect();

    // Glue edges, enforcing one edge per port and label agreement.
    let mut attach: HashMap<(usize, Port), (usize, Port)> = HashMap::new();
    let mut elabels: HashMap<((usize, Port), (usize, Port)), Option<LabelId>> = HashMap::new();
    for &(a, pa, b, pb, l) in &edges {
        let x1 = (group_of_produced[a], pa);
        let y1 = (group_of_produced[b], pb);
        if x1 == y1 {
            return Err(RuleError::InconsistentUnion(format!(
                "edge folds onto a single attachment {}:{}",
                x1.0, x1.1
            )));
        }
        for (from, to) in [(x1, y1), (y1, x1)] {
            match attach.get(&from) {
                Some(prev) if *prev != to => {
                    return Err(RuleError::InconsistentUnion(format!(
                        "port {}:{} claimed by two different edges",
                        from.0, from.1
                    )));
                }
                _ => {
                    attach.insert(from, to);
                }
            }
        }
        let slot = elabels.entry((x1.min(y1), x1.max(y1))).or_insert(None);
        merge_label(slot, l, "a glued edge")?;
    }

    Ok(Glued { vlabels, attach, elabels, atom_group })
}

/// One synchronous step of the dynamics.
///
/// Applies `f` at every vertex of `x`, resolves every image atom
/// `(path, suffix)` to the pair (vertex the path reaches from the application
/// site, suffix), merges image vertices whose resolved names intersect, then
/// keeps the component of the new origin — the vertex named by `(ε, 0)` at
/// the pointer — and re-canonicalizes.  Label or port disagreements between
/// overlapping images abort the step: they mean the rule is not a valid local
/// rule on this graph.
pub fn apply_step(f: &LocalRule, x: &CayleyGraph) -> Result<CayleyGraph, RuleError> {
    Signature::same(f.sig(), x.sig())?;
    let r = f.radius();
    let sites: Vec<(VertexId, ImageGraph)> = x
        .vertices()
        .map(|u| Ok((u, f.image_of(&observed_disk(x, u, r))?)))
        .collect::<Result<_, RuleError>>()?;
    let glued = glue_images(x, &sites, f.name())?;

    let Some(&origin_group) = glued.atom_group.get(&(0, 0)) else {
        return Err(RuleError::BadImage(format!(
            "no image of rule {} names the origin successor (e, 0)",
            f.name()
        )));
    };

    // Keep the component of the new origin, in canonical order.
    let d = x.degree();
    let order = canonical_order(d, origin_group, |g, p| {
        glued.attach.get(&(*g, p)).map(|(h, _)| *h)
    });
    let mut index: HashMap<usize, VertexId> = HashMap::new();
    for (i, &g) in order.iter().enumerate() {
        index.insert(g, i as VertexId);
    }
    let mut ports: Vec<Option<(VertexId, Port)>> = vec![None; order.len() * d as usize];
    let mut vlabels: Vec<Option<LabelId>> = vec![None; order.len()];
    let mut elabels: BTreeMap<(VertexId, Port), LabelId> = BTreeMap::new();
    for (i, &g) in order.iter().enumerate() {
        vlabels[i] = glued.vlabels[g];
        for p in 0..d {
            if let Some(&(h, q)) = glued.attach.get(&(g, p)) {
                let j = index[&h];
                ports[i * d as usize + p as usize] = Some((j, q));
                if (i as VertexId, p) <= (j, q) {
                    let key = ((g, p).min((h, q)), (g, p).max((h, q)));
                    if let Some(Some(l)) = glued.elabels.get(&key) {
                        elabels.insert((i as VertexId, p), *l);
                    }
                }
            }
        }
    }
    Ok(CayleyGraph::from_parts(x.sig().clone(), ports, vlabels, elabels))
}

/// The trajectory `[x, F(x), …, F^t(x)]`.
pub fn run(f: &LocalRule, x: &CayleyGraph, t: usize) -> Result<Vec<CayleyGraph>, RuleError> {
    let mut out = Vec::with_capacity(t + 1);
    out.push(x.clone());
    for _ in 0..t {
        let next = apply_step(f, out.last().unwrap())?;
        out.push(next);
    }
    Ok(out)
}
