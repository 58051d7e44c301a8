//! Compression of the observation radius down to one.
//!
//! A rule of radius `r ≥ 2` is spread over `ℓ + 1` steps of a radius-1 rule,
//! where `r̂ = 2^ℓ` is `r` rounded up to a power of two.  The compiled
//! signature keeps the original ports and adds one shortcut port per
//! non-backtracking port word of length `2..=r̂`; vertex labels gain a phase
//! counter.  During the `ℓ` growth steps every vertex doubles its shortcut
//! reach by bridging pairs of its current neighbors; at counter `ℓ` each
//! vertex reads its whole radius-`r̂` neighborhood off its direct neighbors,
//! rebuilds the original disk, applies the original rule, and resets.
//!
//! Shortcut edges carry labels from `Δ ∪ {⋆}`.  When the source signature
//! has no edge labels a single ⋆-labelled edge joins each bridged pair; when
//! it does, shortcuts come in directed pairs (`+w` / `-w` ports) and the
//! forward edge remembers the label of the last original edge of its word,
//! which the rebuild phase needs and a radius-1 observer could not otherwise
//! see.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::graph::{
    CayleyGraph, GraphError, LabelId, Path, PathStep, Port, Signature, VertexId,
};
use crate::rules::{observed_disk, ImageGraph, LocalRule, RuleError};

use super::{ReductionError, ReductionResult, SimulationMap};

/// Port, label and word layout of the compressed signature.
struct Layout {
    sig0: Arc<Signature>,
    sig1: Arc<Signature>,
    d0: u8,
    /// Growth steps per simulated step; the padded radius is `2^levels`.
    levels: u32,
    padded: usize,
    /// Size of the source vertex alphabet.
    nv: usize,
    /// Shortcut edges are directed (split `+w` / `-w` ports) when the source
    /// signature has edge labels.
    directional: bool,
    /// All non-backtracking words of length `2..=padded`, shortlex order.
    words: Vec<Path>,
    /// Word → its (forward) shortcut port.
    port_of: BTreeMap<Path, Port>,
    /// The id of the ⋆ edge label in `sig1`.
    star: LabelId,
}

fn word_name(w: &Path) -> String {
    w.0.iter()
        .map(|s| format!("{}.{}", s.out + 1, s.inp + 1))
        .collect::<Vec<_>>()
        .join("~")
}

/// All non-backtracking step words of length `2..=max`, in shortlex order.
fn words_up_to(d: u8, max: usize) -> Vec<Path> {
    let mut tier: Vec<Path> = (0..d)
        .flat_map(|p| (0..d).map(move |q| Path::step(p, q)))
        .collect();
    let mut out = Vec::new();
    for _ in 2..=max {
        let mut next = Vec::new();
        for w in &tier {
            let arrived = w.0.last().unwrap().inp;
            for p in 0..d {
                if p == arrived {
                    continue;
                }
                for q in 0..d {
                    let mut v = w.clone();
                    v.push(PathStep::new(p, q));
                    next.push(v);
                }
            }
        }
        out.extend(next.iter().cloned());
        tier = next;
    }
    out
}

fn build_layout(f: &LocalRule) -> Result<Layout, ReductionError> {
    let sig0 = f.sig().clone();
    let d0 = sig0.degree();
    let padded = (f.radius() as usize).next_power_of_two();
    let levels = padded.trailing_zeros();
    let nv = sig0.vlabels().len();
    let directional = !sig0.elabels().is_empty();
    let words = words_up_to(d0, padded);

    let per_word = if directional { 2 } else { 1 };
    let total = d0 as usize + words.len() * per_word;
    if total > 256 {
        return Err(ReductionError::Graph(GraphError::BadValue(format!(
            "the compressed signature needs {total} ports; at most 256 are supported"
        ))));
    }
    let mut ports: Vec<String> = sig0.ports().to_vec();
    let mut port_of = BTreeMap::new();
    for w in &words {
        port_of.insert(w.clone(), ports.len() as Port);
        if directional {
            ports.push(format!("+{}", word_name(w)));
            ports.push(format!("-{}", word_name(w)));
        } else {
            ports.push(word_name(w));
        }
    }

    let span = levels as usize + 1;
    let mut vlabels = Vec::with_capacity(nv * span + span - 1);
    for s in sig0.vlabels() {
        for c in 0..span {
            vlabels.push(format!("{s}@{c}"));
        }
    }
    for c in 1..span {
        vlabels.push(format!("_@{c}"));
    }
    let mut elabels = sig0.elabels().to_vec();
    let star = elabels.len() as LabelId;
    elabels.push("*".to_string());

    let sig1 = Signature::new(ports, vlabels, elabels)?;
    Ok(Layout { sig0, sig1, d0, levels, padded, nv, directional, words, port_of, star })
}

impl Layout {
    fn span(&self) -> u32 {
        self.levels + 1
    }

    /// The compressed label of a vertex carrying source label `sigma` at
    /// phase counter `c`.  Unlabeled at counter 0 stays unlabeled.
    fn enc(&self, sigma: Option<LabelId>, c: u32) -> Option<LabelId> {
        match sigma {
            Some(s) => Some(s * self.span() as LabelId + c as LabelId),
            None if c == 0 => None,
            None => Some((self.nv as u32 * self.span() + c - 1) as LabelId),
        }
    }

    /// Splits a compressed label back into source label and counter.
    /// `None` for ids outside the phase layout.
    fn dec(&self, label: Option<LabelId>) -> Option<(Option<LabelId>, u32)> {
        let span = self.span();
        match label {
            None => Some((None, 0)),
            Some(id) => {
                let id = id as u32;
                let labelled = self.nv as u32 * span;
                if id < labelled {
                    Some((Some((id / span) as LabelId), id % span))
                } else if id < labelled + self.levels {
                    Some((None, id - labelled + 1))
                } else {
                    None
                }
            }
        }
    }

    /// The forward (or only) shortcut port of a word.
    fn fwd(&self, w: &Path) -> Option<Port> {
        self.port_of.get(w).copied()
    }

    /// The port the far end of a `w`-shortcut must attach on.
    fn far_end(&self, w: &Path) -> Option<Port> {
        let p = self.fwd(&w.rev())?;
        Some(if self.directional { p + 1 } else { p })
    }

    /// The word a shortcut port stands for, and whether it is the forward
    /// half of a directed pair.
    fn word_at(&self, p: Port) -> (&Path, bool) {
        let rel = (p - self.d0) as usize;
        if self.directional {
            (&self.words[rel / 2], rel % 2 == 0)
        } else {
            (&self.words[rel], true)
        }
    }
}

/// One neighbor the center can name: the word leading to it, the disk vertex
/// at its far end, and the source label of the last original edge the word
/// crosses.
struct StarEntry {
    word: Path,
    far: VertexId,
    last: Option<LabelId>,
}

/// Reads every word-carrying port of the center, checking the shortcut
/// structure on the way.  `None` means the neighborhood is not a valid
/// piece of an encoded configuration.
fn neighbor_star(lay: &Layout, disk: &CayleyGraph) -> Option<Vec<StarEntry>> {
    let d1 = disk.sig().degree();
    let mut star = Vec::new();
    for p in 0..d1 {
        let Some((far, q)) = disk.across(0, p) else {
            continue;
        };
        let label = disk.elabel_at(0, p);
        if p < lay.d0 {
            // An original edge: one step, carrying its own label.
            if q >= lay.d0 || label == Some(lay.star) {
                return None;
            }
            star.push(StarEntry { word: Path::step(p, q), far, last: label });
        } else {
            let (word, forward) = lay.word_at(p);
            if q != lay.far_end(word)? {
                return None;
            }
            let last = match label {
                Some(l) if l == lay.star => None,
                Some(l) => Some(l),
                None => return None,
            };
            if !lay.directional || forward {
                if lay.directional {
                    // The backward twin must exist alongside.
                    if disk.across(0, p + 1).is_none() {
                        return None;
                    }
                } else if last.is_some() {
                    // Without source edge labels only plain ⋆ shortcuts exist.
                    return None;
                }
                star.push(StarEntry { word: word.clone(), far, last });
            } else if disk.across(0, p - 1).is_none() {
                return None;
            }
        }
    }
    Some(star)
}

/// The fallback image: keep the vertex as it is, with no say about edges.
fn passive(disk: &CayleyGraph) -> ImageGraph {
    let mut img = ImageGraph::new();
    img.add_vertex([(Path::empty(), 0)], disk.vlabel(0));
    img
}

/// One growth step: keep everything, bump the counter, and lay a shortcut
/// between every junction-compatible pair of current neighbors.
fn grow(lay: &Layout, disk: &CayleyGraph, sigma: Option<LabelId>, c: u32) -> ImageGraph {
    let Some(star) = neighbor_star(lay, disk) else {
        return passive(disk);
    };
    let mut img = ImageGraph::new();
    let center = img.add_vertex([(Path::empty(), 0)], lay.enc(sigma, c + 1));
    let d1 = disk.sig().degree();
    let mut stub_at = vec![usize::MAX; d1 as usize];
    for p in 0..d1 {
        if let Some((_, q)) = disk.across(0, p) {
            let stub = img.add_vertex([(Path::step(p, q), 0)], None);
            img.add_edge(center, p, stub, q, disk.elabel_at(0, p));
            stub_at[p as usize] = stub;
        }
    }
    // Index the star by its word's forward port so bridges find their stubs.
    let stub_of = |w: &Path| -> usize {
        let p = if w.len() == 1 { w.0[0].out } else { lay.fwd(w).unwrap() };
        stub_at[p as usize]
    };
    for (i, a) in star.iter().enumerate() {
        for b in &star[i + 1..] {
            for (from, to) in [(a, b), (b, a)] {
                // The composite word runs from one neighbor through the
                // center to the other; it must not backtrack at the center.
                if from.word.0[0].out == to.word.0[0].out {
                    continue;
                }
                let v = from.word.rev().join(&to.word);
                if v.len() > lay.padded {
                    continue;
                }
                let (vp, wp) = (lay.fwd(&v).unwrap(), lay.far_end(&v).unwrap());
                if lay.directional {
                    img.add_edge(
                        stub_of(&from.word),
                        vp,
                        stub_of(&to.word),
                        wp,
                        Some(to.last.unwrap_or(lay.star)),
                    );
                } else {
                    img.add_edge(stub_of(&from.word), vp, stub_of(&to.word), wp, Some(lay.star));
                    break; // one undirected edge covers both orders
                }
            }
        }
    }
    img
}

/// The application step: rebuild the radius-`padded` source disk from the
/// shortcut star, run the original rule on it, and translate its image back,
/// resetting every counter to zero.  Shortcut edges are not re-created, so
/// they all vanish in this step.
fn apply(lay: &Layout, f: &LocalRule, disk: &CayleyGraph) -> Result<ImageGraph, RuleError> {
    let Some(src) = rebuild_source_disk(lay, disk) else {
        return Ok(passive(disk));
    };
    let truncated = observed_disk(&src, 0, f.radius());
    let inner = f.image_of(&truncated)?;
    let mut img = ImageGraph::new();
    let mut at = Vec::with_capacity(inner.vertices().len());
    for iv in inner.vertices() {
        at.push(img.add_vertex(iv.atoms.iter().cloned(), lay.enc(iv.label, 0)));
    }
    for &(a, pa, b, pb, l) in inner.edges() {
        img.add_edge(at[a], pa, at[b], pb, l);
    }
    Ok(img)
}

/// Reassembles the tree the original rule would observe, out of the words
/// readable on the center's ports.  `None` when the star is not the
/// consistent, downward-closed view an encoded configuration guarantees.
fn rebuild_source_disk(lay: &Layout, disk: &CayleyGraph) -> Option<CayleyGraph> {
    let star = neighbor_star(lay, disk)?;
    let (sigma0, _) = lay.dec(disk.vlabel(0))?;
    // Word → (disk vertex, source vertex label, label of the last edge).
    let mut rec: BTreeMap<Path, (VertexId, Option<LabelId>, Option<LabelId>)> = BTreeMap::new();
    rec.insert(Path::empty(), (0, sigma0, None));
    for e in star {
        let (sv, cv) = lay.dec(disk.vlabel(e.far))?;
        if cv != lay.levels {
            return None;
        }
        if rec.insert(e.word, (e.far, sv, e.last)).is_some() {
            return None;
        }
    }
    // Each word must extend a present word, and conversely every original
    // edge leaving a word's vertex must have its extension in the star.
    let children: BTreeMap<&Path, Vec<PathStep>> = {
        let mut m: BTreeMap<&Path, Vec<PathStep>> = BTreeMap::new();
        for w in rec.keys() {
            if let Some(&s) = w.0.last() {
                let parent = Path(w.0[..w.len() - 1].to_vec());
                let (parent, _) = rec.get_key_value(&parent)?;
                m.entry(parent).or_default().push(s);
            }
        }
        m
    };
    let mut fringe: Vec<(Path, PathStep)> = Vec::new();
    for (w, &(v, _, _)) in &rec {
        let arrived = w.0.last().map(|s| s.inp);
        let listed = children.get(w).cloned().unwrap_or_default();
        let mut seen = 0;
        for p in 0..lay.d0 {
            if arrived == Some(p) {
                continue;
            }
            let Some((_, q)) = disk.across(v, p) else {
                continue;
            };
            if q >= lay.d0 {
                return None;
            }
            let s = PathStep::new(p, q);
            if w.len() < lay.padded {
                if !listed.contains(&s) {
                    return None;
                }
                seen += 1;
            } else {
                fringe.push((w.clone(), s));
            }
        }
        if w.len() < lay.padded && seen != listed.len() {
            return None;
        }
    }

    // Shortlex order of tree paths is exactly the canonical scan order.
    let mut paths: Vec<Path> = rec.keys().cloned().collect();
    for (w, s) in &fringe {
        let mut child = w.clone();
        child.push(*s);
        paths.push(child);
    }
    paths.sort();
    let index: BTreeMap<&Path, usize> = paths.iter().enumerate().map(|(i, w)| (w, i)).collect();
    let d0 = lay.d0 as usize;
    let mut ports = vec![None; paths.len() * d0];
    let mut vlabels = vec![None; paths.len()];
    let mut elabels = BTreeMap::new();
    for (i, w) in paths.iter().enumerate() {
        if let Some(&(_, sv, last)) = rec.get(w) {
            vlabels[i] = sv;
            if let Some(l) = last {
                let s = w.0.last().unwrap();
                let j = index[&Path(w.0[..w.len() - 1].to_vec())];
                elabels.insert((j as VertexId, s.out).min((i as VertexId, s.inp)), l);
            }
        }
        if let Some(&s) = w.0.last() {
            let j = index[&Path(w.0[..w.len() - 1].to_vec())];
            ports[j * d0 + s.out as usize] = Some((i as VertexId, s.inp));
            ports[i * d0 + s.inp as usize] = Some((j as VertexId, s.out));
        }
    }
    Some(CayleyGraph::from_parts(lay.sig0.clone(), ports, vlabels, elabels))
}

fn step_image(lay: &Layout, f: &LocalRule, disk: &CayleyGraph) -> Result<ImageGraph, RuleError> {
    let Some((sigma, c)) = lay.dec(disk.vlabel(0)) else {
        return Ok(passive(disk));
    };
    // The whole visible neighborhood must share the phase counter.
    let depth = disk.distances();
    for v in disk.vertices() {
        if depth[v as usize] <= 1 {
            match lay.dec(disk.vlabel(v)) {
                Some((_, cv)) if cv == c => {}
                _ => return Ok(passive(disk)),
            }
        }
    }
    if c < lay.levels {
        Ok(grow(lay, disk, sigma, c))
    } else {
        apply(lay, f, disk)
    }
}

/// Writes the graph over the compressed signature: same vertices and edges,
/// labels moved to phase counter 0, every shortcut port empty.
fn encode(
    lay: &Layout,
    x: &CayleyGraph,
) -> Result<(CayleyGraph, Vec<VertexId>), ReductionError> {
    Signature::same(x.sig(), &lay.sig0)?;
    let n = x.vertex_count();
    let d1 = lay.sig1.degree() as usize;
    let mut adj = vec![vec![None; d1]; n];
    let mut vlabels = vec![None; n];
    for v in x.vertices() {
        vlabels[v as usize] = lay.enc(x.vlabel(v), 0);
        for p in 0..lay.d0 {
            if let Some((w, q)) = x.across(v, p) {
                adj[v as usize][p as usize] = Some((w as usize, q));
            }
        }
    }
    let elabels: Vec<((usize, Port), LabelId)> = x
        .edges()
        .filter_map(|(v, p, _, _, l)| l.map(|l| ((v as usize, p), l)))
        .collect();
    let (g, order) = CayleyGraph::assemble_canonical(&lay.sig1, 0, &adj, &vlabels, &elabels)
        .expect("a pointed graph is connected");
    let mut table = vec![0 as VertexId; n];
    for (pos, &old) in order.iter().enumerate() {
        table[old] = pos as VertexId;
    }
    Ok((g, table))
}

/// Compiles `f` into a rule that observes only its immediate neighborhood,
/// together with the translation into its configurations.  Rules already at
/// radius ≤ 1 are passed through untouched with the identity translation.
///
/// One step of `f` becomes `ℓ + 1` compiled steps, where the radius padded
/// to a power of two is `2^ℓ`.
pub fn radius_one_reduction(f: &LocalRule) -> Result<ReductionResult, ReductionError> {
    if f.radius() < 2 {
        return Ok(ReductionResult {
            rule: f.clone(),
            map: SimulationMap::identity(f.sig()),
        });
    }
    let lay = Arc::new(build_layout(f)?);
    let name = format!("{}-r1", f.name());
    let inner = f.clone();
    let l = lay.clone();
    let rule = LocalRule::native(
        name.clone(),
        lay.sig1.clone(),
        1,
        f.bound().max(1),
        move |disk| step_image(&l, &inner, disk),
    );
    let delta = lay.levels + 1;
    let map = SimulationMap::new(name, lay.sig0.clone(), lay.sig1.clone(), delta, move |x| {
        encode(&lay, x)
    });
    Ok(ReductionResult { rule, map })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build;
    use crate::reductions::{verify_simulation, SimVerdict};
    use crate::rules::{apply_step, rotate, turtle};
    use rand::Rng;

    fn random_labels(rng: &mut impl Rng, n: usize, nv: usize) -> Vec<Option<LabelId>> {
        (0..n)
            .map(|_| {
                let k = rng.gen_range(0..=nv);
                (k > 0).then(|| (k - 1) as LabelId)
            })
            .collect()
    }

    #[test]
    fn small_radii_pass_through() {
        let f = turtle().unwrap();
        let r = radius_one_reduction(&f).unwrap();
        assert_eq!(r.rule.radius(), 0);
        assert_eq!(r.map.delta(), 1);
        let x = build::pair(f.sig(), [None, None], None).unwrap();
        assert_eq!(r.map.encode(&x).unwrap(), x);
    }

    #[test]
    fn compressed_rotate_runs_cycles_at_delta_two() {
        let f = rotate();
        let r = radius_one_reduction(&f).unwrap();
        assert_eq!(r.rule.radius(), 1);
        assert_eq!(r.map.delta(), 2);
        let mut rng = crate::corpus::rng(0x5eed);
        let mut inputs = Vec::new();
        for n in 4..12 {
            inputs.push(build::cycle(f.sig(), &random_labels(&mut rng, n, 2)).unwrap());
        }
        let verdict = verify_simulation(&r.rule, &f, &r.map, &inputs, 3).unwrap();
        assert!(verdict.passed(), "{verdict}");
    }

    #[test]
    fn compressed_rotate_covers_lines_and_loops() {
        let f = rotate();
        let r = radius_one_reduction(&f).unwrap();
        let mut rng = crate::corpus::rng(0x11de);
        let mut inputs = vec![
            build::single(f.sig(), Some(1)).unwrap(),
            build::cycle(f.sig(), &[Some(0)]).unwrap(),
            build::cycle(f.sig(), &[Some(1), None]).unwrap(),
        ];
        for n in 2..9 {
            inputs.push(build::line(f.sig(), &random_labels(&mut rng, n, 2)).unwrap());
        }
        let verdict = verify_simulation(&r.rule, &f, &r.map, &inputs, 3).unwrap();
        assert!(verdict.passed(), "{verdict}");
    }

    #[test]
    fn growth_step_lays_starred_shortcuts() {
        let f = rotate();
        let r = radius_one_reduction(&f).unwrap();
        let x = build::cycle(f.sig(), &[Some(0), Some(1), None, Some(1)]).unwrap();
        let y = r.map.encode(&x).unwrap();
        let grown = apply_step(&r.rule, &y).unwrap();
        assert_eq!(grown.vertex_count(), 4);
        // Four original edges survive; each of the two antipodal pairs gains
        // two shortcuts (one per junction), all labelled ⋆.
        assert_eq!(grown.edge_count(), 8);
        let star = (r.rule.sig().elabels().len() - 1) as LabelId;
        let starred = grown.edges().filter(|e| e.4 == Some(star)).count();
        assert_eq!(starred, 4);
        // One more step applies the rule and drops every shortcut again.
        let done = apply_step(&r.rule, &grown).unwrap();
        assert_eq!(done, r.map.encode(&apply_step(&f, &x).unwrap()).unwrap());
    }

    #[test]
    fn encoding_is_injective_on_all_small_graphs() {
        let f = rotate();
        let r = radius_one_reduction(&f).unwrap();
        let sig = f.sig().clone();
        let mut all = Vec::new();
        for n in 1..=6usize {
            let mut counters = vec![0usize; n];
            loop {
                let labels: Vec<Option<LabelId>> = counters
                    .iter()
                    .map(|&k| (k > 0).then(|| (k - 1) as LabelId))
                    .collect();
                all.push(build::line(&sig, &labels).unwrap());
                all.push(build::cycle(&sig, &labels).unwrap());
                let mut i = 0;
                while i < n && counters[i] == 2 {
                    counters[i] = 0;
                    i += 1;
                }
                if i == n {
                    break;
                }
                counters[i] += 1;
            }
        }
        // Lines and cycles overlap (single = 1-line) and labelings collide up
        // to rotation; dedupe on the canonical form before comparing counts.
        let distinct: std::collections::BTreeSet<_> = all.iter().cloned().collect();
        let encoded: std::collections::BTreeSet<_> =
            all.iter().map(|x| r.map.encode(x).unwrap()).collect();
        assert_eq!(distinct.len(), encoded.len());
    }

    #[test]
    fn encoding_commutes_with_moving_the_pointer() {
        let f = rotate();
        let r = radius_one_reduction(&f).unwrap();
        let mut rng = crate::corpus::rng(0xac3);
        for n in [4usize, 7, 10] {
            let x = build::cycle(f.sig(), &random_labels(&mut rng, n, 2)).unwrap();
            for u in x.vertices() {
                let (y, at) = r.map.translate(&x, u).unwrap();
                assert_eq!(y.shift_to(at), r.map.encode(&x.shift_to(u)).unwrap());
            }
        }
    }

    #[test]
    fn encoding_depends_only_on_nearby_labels() {
        // Two long lines agreeing on a radius-4 disk around the pointer get
        // encodings agreeing on the same disk: the counter relabeling is
        // pointwise, so no information travels at all under the encoder.
        let f = rotate();
        let r = radius_one_reduction(&f).unwrap();
        let sig = f.sig().clone();
        let mut a = vec![Some(0), None, Some(1), Some(1), None, Some(0), Some(0), Some(1)];
        let b = {
            let mut b = a.clone();
            for l in b.iter_mut().skip(5) {
                *l = Some(1);
            }
            b
        };
        a.truncate(8);
        let xa = build::line(&sig, &a).unwrap();
        let xb = build::line(&sig, &b).unwrap();
        assert_ne!(xa, xb);
        let (ya, yb) = (r.map.encode(&xa).unwrap(), r.map.encode(&xb).unwrap());
        assert_eq!(ya.disk(4), yb.disk(4));
    }

    #[test]
    fn mixed_phase_graphs_fall_passive() {
        use crate::graph::{NamedGraph, VName};
        // Hand-mix the phase counters: no valid encoding looks like this, so
        // every site bows out, claims no edges, and only the pointer remains.
        let f = rotate();
        let r = radius_one_reduction(&f).unwrap();
        let mut g = NamedGraph::new(r.rule.sig().clone());
        // Labels 1 and 3 sit at counter 1; unlabeled vertices at counter 0.
        for (i, l) in [Some(1), None, Some(3), None].into_iter().enumerate() {
            g.add_vertex(VName::of(format!("v{i}")), l).unwrap();
        }
        for i in 0..4 {
            g.add_edge(
                (VName::of(format!("v{i}")), 1),
                (VName::of(format!("v{}", (i + 1) % 4)), 0),
                None,
            )
            .unwrap();
        }
        let x = CayleyGraph::canonicalize(&g, &VName::of("v0")).unwrap();
        let y = apply_step(&r.rule, &x).unwrap();
        assert_eq!(y.vertex_count(), 1);
        assert_eq!(y.vlabel(0), Some(1));
    }

    #[test]
    fn rejects_oversized_port_budgets() {
        // Radius 5 pads to 8; over a degree-2 signature that needs more than
        // the 256 representable ports.
        let sig = Signature::with_vlabels(2, vec!["0", "1"]);
        let f = LocalRule::native("wide", sig, 5, 2, |disk| {
            let mut img = ImageGraph::new();
            img.add_vertex([(Path::empty(), 0)], disk.vlabel(0));
            Ok(img)
        });
        let err = radius_one_reduction(&f).unwrap_err();
        assert!(matches!(err, ReductionError::Graph(GraphError::BadValue(_))), "{err}");
    }

    #[test]
    fn delta_is_uniform_across_mixed_inputs() {
        let f = rotate();
        let r = radius_one_reduction(&f).unwrap();
        let inputs = vec![
            build::cycle(f.sig(), &[Some(0), Some(1), Some(0), Some(1), None]).unwrap(),
            build::line(f.sig(), &[Some(1), Some(1), Some(0)]).unwrap(),
            build::single(f.sig(), None).unwrap(),
        ];
        match verify_simulation(&r.rule, &f, &r.map, &inputs, 2).unwrap() {
            SimVerdict::Pass => {}
            v => panic!("{v}"),
        }
    }
}
