//! Dense integer indexing of graphs and of rule tables.
//!
//! Graphs over a fixed signature are ordered by the shortlex order (byte
//! length, then byte-wise) of their canonical string encodings; the position
//! of a graph in that order is its index, and the two directions are exact
//! inverses.  Rule tables are ordered slot by slot: the table's domain is the
//! full disk enumeration in canonical order, each slot ranges over an
//! enumeration of the admissible replacement graphs, and the table's index is
//! the mixed-radix number of its per-slot positions (first disk least
//! significant).
//!
//! Both directions enumerate only as far as needed and stop with
//! [`ArithError::BudgetExceeded`] when a query would cost more than the
//! configured budget (`CGD_ENUM_BUDGET`, or a generous default).

use std::collections::BTreeSet;
use std::sync::Arc;

use thiserror::Error;

use crate::corpus::all_graphs_within;
use crate::encodings::{string_encode, CodecError};
use crate::graph::{CayleyGraph, GraphError, LabelId, Path, PathStep, Port, Signature, Suffix};
use crate::rules::{enumerate_disks, ImageGraph, LocalRule, RuleError};

/// Failures of the indexing machinery.
#[derive(Debug, Error)]
pub enum ArithError {
    /// The enumeration a query needs is larger than the configured budget.
    #[error("enumeration budget exceeded: {0}")]
    BudgetExceeded(String),
    /// The object cannot be ranked as presented (wrong domain, no table).
    #[error("not rankable: {0}")]
    Unrankable(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Rule(#[from] RuleError),
    #[error(transparent)]
    Codec(#[from] CodecError),
}

fn budget_from_env(default: usize) -> usize {
    std::env::var("CGD_ENUM_BUDGET")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(default)
}

/// The shortlex order of all graphs over one signature, with on-demand
/// enumeration.  Graph `n` is the one whose canonical encoding is the `n`-th
/// smallest among the encodings of all graphs, by byte length then bytes.
pub struct GraphOrder {
    sig: Arc<Signature>,
    budget: usize,
    spent: usize,
    /// `(encoding, graph)`, sorted by shortlex of the encoding.
    entries: Vec<(String, CayleyGraph)>,
    /// Vertex count the next growth round will enumerate.
    next_size: usize,
    /// Every encoding strictly shorter than this is already present.
    complete_below: usize,
}

impl GraphOrder {
    pub fn new(sig: Arc<Signature>) -> Self {
        Self::with_budget(sig, budget_from_env(2_000_000))
    }

    /// `budget` caps the total number of candidate graphs ever generated.
    pub fn with_budget(sig: Arc<Signature>, budget: usize) -> Self {
        let complete_below = min_encoding_len(&sig, 1);
        GraphOrder { sig, budget, spent: 0, entries: Vec::new(), next_size: 1, complete_below }
    }

    pub fn sig(&self) -> &Arc<Signature> {
        &self.sig
    }

    /// The index of `x`: the number of graphs whose encodings precede its own.
    pub fn rank(&mut self, x: &CayleyGraph) -> Result<u64, ArithError> {
        Signature::same(x.sig(), &self.sig)?;
        let s = string_encode(x);
        while self.complete_below <= s.len() || self.next_size <= x.vertex_count() {
            self.grow()?;
        }
        let at = self
            .entries
            .binary_search_by(|(e, _)| shortlex(e, &s))
            .expect("a graph of enumerated size is among the enumerated encodings");
        Ok(at as u64)
    }

    /// The graph at index `n`.
    pub fn unrank(&mut self, n: u64) -> Result<CayleyGraph, ArithError> {
        let n = n as usize;
        loop {
            if let Some((s, g)) = self.entries.get(n) {
                // The answer is final once no shorter encoding can appear.
                if s.len() < self.complete_below {
                    return Ok(g.clone());
                }
            }
            self.grow()?;
        }
    }

    /// How many graphs have been enumerated so far.
    pub fn seen(&self) -> usize {
        self.entries.len()
    }

    /// Enumerates the next vertex-count class and folds it in.
    fn grow(&mut self) -> Result<(), ArithError> {
        let n = self.next_size;
        let Some((class, work)) = all_graphs_within(&self.sig, n, self.budget - self.spent)
        else {
            return Err(ArithError::BudgetExceeded(format!(
                "enumerating all {n}-vertex graphs would cross the remaining budget \
                 ({} of {} candidates left)",
                self.budget - self.spent,
                self.budget,
            )));
        };
        self.spent += work;
        for g in class {
            let s = string_encode(&g);
            debug_assert!(s.len() >= min_encoding_len(&self.sig, n));
            let at = self
                .entries
                .binary_search_by(|(e, _)| shortlex(e, &s))
                .expect_err("two distinct graphs cannot share a canonical encoding");
            self.entries.insert(at, (s, g));
        }
        self.next_size = n + 1;
        self.complete_below = min_encoding_len(&self.sig, self.next_size);
        Ok(())
    }
}

fn shortlex(a: &str, b: &str) -> std::cmp::Ordering {
    a.len().cmp(&b.len()).then_with(|| a.cmp(b))
}

/// A lower bound on the encoding length of any `n`-vertex graph over `sig`:
/// each vertex costs at least `$`, the shortest label token and `;`, and each
/// of the `n-1` tree edges at least a five-byte port pair.
fn min_encoding_len(sig: &Arc<Signature>, n: usize) -> usize {
    let blank = "\u{b7}".len();
    let label = sig.vlabels().iter().map(|t| t.len()).min().unwrap_or(blank).min(blank);
    n * (2 + label) + (n - 1) * 5
}

/// Convenience one-shot wrapper around [`GraphOrder::rank`].
pub fn rank_graph(x: &CayleyGraph) -> Result<u64, ArithError> {
    GraphOrder::new(x.sig().clone()).rank(x)
}

/// Convenience one-shot wrapper around [`GraphOrder::unrank`].
pub fn unrank_graph(sig: &Arc<Signature>, n: u64) -> Result<CayleyGraph, ArithError> {
    GraphOrder::new(sig.clone()).unrank(n)
}

/// The walk reaching each vertex of an observed neighborhood from its
/// center, in canonical vertex order.  Neighborhoods are trees, so the walk
/// is unique and runs parent to child.
fn paths_of_disk(disk: &CayleyGraph) -> Vec<Path> {
    let mut paths = vec![Path::empty()];
    for v in disk.vertices().skip(1) {
        let (p, (u, q)) = (0..disk.degree())
            .find_map(|p| disk.across(v, p).filter(|&(u, _)| u < v).map(|far| (p, far)))
            .expect("every non-center vertex has a parent");
        let mut path = paths[u as usize].clone();
        path.push(PathStep::new(q, p));
        paths.push(path);
    }
    paths
}

/// All admissible replacement graphs for one observed neighborhood, sorted.
///
/// A replacement names its vertices by disjoint nonempty sets of
/// `(walk, successor)` atoms with walks drawn from the neighborhood and
/// successors below `bound`, labels them from the vertex alphabet or not at
/// all, and wires any subset of their ports into edges labeled from the edge
/// alphabet or not at all.  Well-formedness here is syntactic; whether a
/// whole table glues coherently is the separate validation question.
fn images_for(
    disk: &CayleyGraph,
    sig: &Arc<Signature>,
    bound: usize,
    budget: usize,
    spent: &mut usize,
) -> Result<Vec<ImageGraph>, ArithError> {
    let mut atoms: Vec<(Path, Suffix)> = Vec::new();
    for path in paths_of_disk(disk) {
        for s in 0..bound as Suffix {
            atoms.push((path.clone(), s));
        }
    }
    let d = sig.degree();
    let nv = sig.vlabels().len();
    let ne = sig.elabels().len();

    // Group the atoms: each atom is absent or joins a group; groups are
    // created in order of their least atom, so every abstract grouping
    // appears exactly once.
    let mut groupings: Vec<Vec<BTreeSet<(Path, Suffix)>>> = Vec::new();
    fn assign(
        atoms: &[(Path, Suffix)],
        i: usize,
        groups: &mut Vec<BTreeSet<(Path, Suffix)>>,
        out: &mut Vec<Vec<BTreeSet<(Path, Suffix)>>>,
    ) {
        if i == atoms.len() {
            out.push(groups.clone());
            return;
        }
        assign(atoms, i + 1, groups, out); // absent
        for g in 0..=groups.len() {
            if g == groups.len() {
                groups.push(BTreeSet::new());
            }
            groups[g].insert(atoms[i].clone());
            assign(atoms, i + 1, groups, out);
            groups[g].remove(&atoms[i]);
            if groups.last().is_some_and(|s| s.is_empty()) {
                groups.pop();
            }
        }
    }
    assign(&atoms, 0, &mut Vec::new(), &mut groupings);

    let mut images = Vec::new();
    for groups in &groupings {
        let k = groups.len();
        // All edge layouts over the k·d ports: pair up some slots.
        let mut layouts: Vec<Vec<(usize, Port, usize, Port)>> = Vec::new();
        fn wire(
            slots: usize,
            d: usize,
            first: usize,
            used: &mut Vec<bool>,
            acc: &mut Vec<(usize, Port, usize, Port)>,
            out: &mut Vec<Vec<(usize, Port, usize, Port)>>,
        ) {
            let Some(a) = (first..slots).find(|&s| !used[s]) else {
                out.push(acc.clone());
                return;
            };
            // Leave `a` open: no edge ever starts here.
            used[a] = true;
            wire(slots, d, a + 1, used, acc, out);
            for b in a + 1..slots {
                if !used[b] {
                    used[b] = true;
                    acc.push((a / d, (a % d) as Port, b / d, (b % d) as Port));
                    wire(slots, d, a + 1, used, acc, out);
                    acc.pop();
                    used[b] = false;
                }
            }
            used[a] = false;
        }
        wire(k * d as usize, d as usize, 0, &mut vec![false; k * d as usize], &mut Vec::new(), &mut layouts);

        for layout in &layouts {
            let combos = (nv as u128 + 1)
                .saturating_pow(k as u32)
                .saturating_mul((ne as u128 + 1).saturating_pow(layout.len() as u32));
            if *spent as u128 + combos > budget as u128 {
                return Err(ArithError::BudgetExceeded(format!(
                    "more than {budget} replacement graphs for one neighborhood"
                )));
            }
            *spent += combos as usize;
            let mut digits = vec![0usize; k + layout.len()];
            loop {
                let mut img = ImageGraph::new();
                for (g, group) in groups.iter().enumerate() {
                    let label = digits[g].checked_sub(1).map(|l| l as LabelId);
                    img.add_vertex(group.iter().cloned(), label);
                }
                for (e, &(a, pa, b, pb)) in layout.iter().enumerate() {
                    let label = digits[k + e].checked_sub(1).map(|l| l as LabelId);
                    img.add_edge(a, pa, b, pb, label);
                }
                images.push(img);
                let mut i = 0;
                while i < digits.len() {
                    digits[i] += 1;
                    let radix = if i < k { nv + 1 } else { ne + 1 };
                    if digits[i] < radix {
                        break;
                    }
                    digits[i] = 0;
                    i += 1;
                }
                if i == digits.len() {
                    break;
                }
            }
        }
    }
    images.sort();
    images.dedup();
    Ok(images)
}

/// Rewrites an image so equal images compare equal: vertices sorted by name,
/// edges sorted with the smaller attachment first.
fn normalize_image(img: &ImageGraph) -> ImageGraph {
    let mut order: Vec<usize> = (0..img.vertex_count()).collect();
    order.sort_by_key(|&i| (&img.vertices()[i].atoms, img.vertices()[i].label));
    let mut at = vec![0usize; order.len()];
    for (pos, &old) in order.iter().enumerate() {
        at[old] = pos;
    }
    let mut out = ImageGraph::new();
    for &old in &order {
        let v = &img.vertices()[old];
        out.add_vertex(v.atoms.iter().cloned(), v.label);
    }
    let mut edges: Vec<(usize, Port, usize, Port, Option<LabelId>)> = img
        .edges()
        .iter()
        .map(|&(a, pa, b, pb, l)| {
            let (x, y) = ((at[a], pa), (at[b], pb));
            let ((a, pa), (b, pb)) = (x.min(y), x.max(y));
            (a, pa, b, pb, l)
        })
        .collect();
    edges.sort();
    for (a, pa, b, pb, l) in edges {
        out.add_edge(a, pa, b, pb, l);
    }
    out
}

/// The per-slot spaces of every rule table with the given signature, radius
/// and successor bound: one sorted image list per neighborhood, neighborhoods
/// in canonical order.
pub struct RuleOrder {
    sig: Arc<Signature>,
    radius: u8,
    bound: usize,
    disks: Vec<CayleyGraph>,
    slots: Vec<Vec<ImageGraph>>,
}

impl RuleOrder {
    pub fn new(sig: Arc<Signature>, radius: u8, bound: usize) -> Result<Self, ArithError> {
        Self::with_budget(sig, radius, bound, budget_from_env(2_000_000))
    }

    pub fn with_budget(
        sig: Arc<Signature>,
        radius: u8,
        bound: usize,
        budget: usize,
    ) -> Result<Self, ArithError> {
        let disks = enumerate_disks(&sig, radius)?;
        let mut spent = 0;
        let slots = disks
            .iter()
            .map(|disk| images_for(disk, &sig, bound, budget, &mut spent))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(RuleOrder { sig, radius, bound, disks, slots })
    }

    /// How many tables the order covers.
    pub fn count(&self) -> u128 {
        self.slots.iter().map(|s| s.len() as u128).product()
    }

    /// The index of `f`'s table.  The table must be explicit and cover
    /// exactly the enumerated neighborhoods.
    pub fn rank(&self, f: &LocalRule) -> Result<u128, ArithError> {
        Signature::same(f.sig(), &self.sig)?;
        if f.radius() != self.radius {
            return Err(ArithError::Unrankable(format!(
                "the rule has radius {}, the order covers radius {}",
                f.radius(),
                self.radius
            )));
        }
        let Some(table) = f.table() else {
            return Err(ArithError::Unrankable(
                "the rule is computed, not tabulated".to_string(),
            ));
        };
        if table.len() != self.disks.len()
            || !self.disks.iter().all(|d| table.contains_key(d))
        {
            return Err(ArithError::Unrankable(format!(
                "the table covers {} neighborhoods, the full domain has {}",
                table.len(),
                self.disks.len()
            )));
        }
        let mut index: u128 = 0;
        for (disk, space) in self.disks.iter().zip(&self.slots).rev() {
            let img = normalize_image(&table[disk]);
            let pos = space.binary_search(&img).map_err(|_| {
                ArithError::Unrankable(
                    "a table entry is outside the admissible replacement space \
                     (successor out of bound, or an unknown walk)"
                        .to_string(),
                )
            })?;
            index = index * space.len() as u128 + pos as u128;
        }
        Ok(index)
    }

    /// The table at index `n`, as a rule named after the index.
    pub fn unrank(&self, n: u128) -> Result<LocalRule, ArithError> {
        if n >= self.count() {
            return Err(ArithError::Unrankable(format!(
                "index {n} is out of range: there are {} tables",
                self.count()
            )));
        }
        let mut rest = n;
        let mut table = std::collections::BTreeMap::new();
        for (disk, space) in self.disks.iter().zip(&self.slots) {
            let pos = (rest % space.len() as u128) as usize;
            rest /= space.len() as u128;
            table.insert(disk.clone(), space[pos].clone());
        }
        Ok(LocalRule::from_table(
            format!("table-{n}"),
            self.sig.clone(),
            self.radius,
            self.bound,
            table,
        )?)
    }
}

/// Convenience one-shot wrapper around [`RuleOrder::rank`].
pub fn rank_rule(f: &LocalRule) -> Result<u128, ArithError> {
    RuleOrder::new(f.sig().clone(), f.radius(), f.bound())?.rank(f)
}

/// Convenience one-shot wrapper around [`RuleOrder::unrank`].
pub fn unrank_rule(
    n: u128,
    sig: &Arc<Signature>,
    radius: u8,
    bound: usize,
) -> Result<LocalRule, ArithError> {
    RuleOrder::new(sig.clone(), radius, bound)?.unrank(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encodings::string_decode;
    use crate::graph::build;
    use crate::rules::turtle;

    #[test]
    fn the_least_graph_is_the_blank_single_vertex() {
        let sig = Signature::unlabeled(2);
        let mut order = GraphOrder::new(sig.clone());
        let g = order.unrank(0).unwrap();
        assert_eq!(g, build::single(&sig, None).unwrap());
        assert_eq!(order.rank(&g).unwrap(), 0);
    }

    #[test]
    fn the_first_thousand_indices_roundtrip() {
        let sig = Signature::unlabeled(2);
        let mut order = GraphOrder::new(sig.clone());
        let mut previous: Option<String> = None;
        for n in 0..1000 {
            let g = order.unrank(n).unwrap();
            assert_eq!(order.rank(&g).unwrap(), n, "rank disagrees at {n}");
            let s = string_encode(&g);
            assert_eq!(string_decode(&s, &sig).unwrap(), g);
            if let Some(p) = &previous {
                assert!(
                    shortlex(p, &s) == std::cmp::Ordering::Less,
                    "order violated between {n} and its predecessor: {p:?} !< {s:?}"
                );
            }
            previous = Some(s);
        }
    }

    #[test]
    fn known_graphs_rank_where_sorting_their_encodings_says() {
        let sig = Signature::with_vlabels(1, vec!["0", "1"]);
        let mut order = GraphOrder::new(sig.clone());
        // Rank by independent recount: collect every graph on <= 2 vertices,
        // sort the encodings by hand, compare positions.
        let mut all: Vec<_> = crate::corpus::all_graphs(&sig, 1)
            .into_iter()
            .chain(crate::corpus::all_graphs(&sig, 2))
            .map(|g| (string_encode(&g), g))
            .collect();
        all.sort_by(|(a, _), (b, _)| shortlex(a, b));
        for (want, (_, g)) in all.iter().enumerate() {
            assert_eq!(order.rank(g).unwrap(), want as u64);
        }
    }

    #[test]
    fn tiny_budgets_stop_the_enumeration() {
        let sig = Signature::unlabeled(2);
        let mut order = GraphOrder::with_budget(sig, 10);
        let err = order.unrank(10_000).unwrap_err();
        assert!(matches!(err, ArithError::BudgetExceeded(_)), "{err}");
    }

    #[test]
    fn every_degree_one_table_roundtrips() {
        let sig = Signature::unlabeled(1);
        let order = RuleOrder::new(sig, 0, 2).unwrap();
        let total = order.count();
        assert!(total > 1, "the space is trivial: {total}");
        for n in 0..total {
            let f = order.unrank(n).unwrap();
            assert_eq!(order.rank(&f).unwrap(), n);
        }
    }

    #[test]
    fn random_turtle_sized_tables_roundtrip() {
        use rand::Rng;
        let sig = Signature::unlabeled(1);
        let order = RuleOrder::new(sig, 0, 2).unwrap();
        let total = order.count();
        let mut rng = crate::corpus::rng(0x1d);
        for _ in 0..200 {
            let n = rng.gen_range(0..total);
            let f = order.unrank(n).unwrap();
            assert_eq!(order.rank(&f).unwrap(), n);
        }
    }

    #[test]
    fn the_all_empty_table_ranks_first() {
        let sig = Signature::unlabeled(1);
        let order = RuleOrder::new(sig, 0, 2).unwrap();
        let f = order.unrank(0).unwrap();
        let table = f.table().unwrap();
        assert!(table.values().all(|img| img.vertex_count() == 0));
        assert_eq!(order.rank(&f).unwrap(), 0);
    }

    #[test]
    fn the_turtle_has_a_stable_index() {
        let f = turtle().unwrap();
        let a = rank_rule(&f).unwrap();
        let b = rank_rule(&f).unwrap();
        assert_eq!(a, b);
        let g = unrank_rule(a, f.sig(), f.radius(), f.bound()).unwrap();
        assert_eq!(rank_rule(&g).unwrap(), a);
        // The table itself survives the roundtrip.
        for (disk, img) in f.table().unwrap() {
            assert!(g.table().unwrap()[disk].equivalent(img));
        }
    }
}
