//! One-dimensional cellular automata as degree-2 graph dynamics.
//!
//! A synchronous cellular automaton embeds into the port-graph engine: every
//! cell is a vertex whose port 0 faces its left neighbor and port 1 its
//! right, carrying its state as the vertex label.  A table rule of radius 1
//! rewrites each cell's label to the transition of the three states it sees
//! and recreates the two incident edges, so the topology never changes and
//! the marked cell never moves.  A free port — the end of a line — reads as
//! a neighbor in state 0, the quiescent convention.  Cells must carry a
//! definite state: the rule has no entries for blank-labeled neighborhoods
//! and faults on them.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::graph::{LabelId, Path, PathStep, Signature};
use crate::rules::{enumerate_disks, ImageGraph, LocalRule, RuleError};

/// Errors building a cellular automaton table.
#[derive(Debug, Error)]
pub enum CaError {
    #[error("an alphabet of {k} states needs {want} transition entries, got {got}")]
    WrongTableSize { k: usize, want: usize, got: usize },
    #[error("transition entry {entry} is outside the alphabet 0..{k}")]
    EntryOutsideAlphabet { entry: LabelId, k: usize },
    #[error("the alphabet must have between 1 and {} states", LabelId::MAX)]
    AlphabetSize,
}

/// A one-dimensional, radius-1, synchronous cellular automaton: states
/// `0..alphabet` and a total transition table over state triples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CARule {
    alphabet: usize,
    /// `table[(l*k + c)*k + r]` is the next state on reading `l`, `c`, `r`.
    table: Vec<LabelId>,
}

impl CARule {
    pub fn new(alphabet: usize, table: Vec<LabelId>) -> Result<Self, CaError> {
        if alphabet == 0 || alphabet > LabelId::MAX as usize {
            return Err(CaError::AlphabetSize);
        }
        let want = alphabet * alphabet * alphabet;
        if table.len() != want {
            return Err(CaError::WrongTableSize { k: alphabet, want, got: table.len() });
        }
        if let Some(&entry) = table.iter().find(|&&e| (e as usize) >= alphabet) {
            return Err(CaError::EntryOutsideAlphabet { entry, k: alphabet });
        }
        Ok(CARule { alphabet, table })
    }

    /// The two-state automaton with the given Wolfram code: bit `4l + 2c + r`
    /// of `code` is the next state on reading `l`, `c`, `r`.
    pub fn wolfram(code: u8) -> CARule {
        let table = (0..8).map(|i| LabelId::from(code >> i & 1)).collect();
        CARule { alphabet: 2, table }
    }

    /// The automaton that never changes any cell.
    pub fn identity(alphabet: usize) -> Result<CARule, CaError> {
        let k = alphabet;
        let table = (0..k.saturating_pow(3)).map(|i| ((i / k) % k) as LabelId).collect();
        CARule::new(k, table)
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    /// Next state on reading `l`, `c`, `r`; the states must be in the alphabet.
    pub fn transition(&self, l: LabelId, c: LabelId, r: LabelId) -> LabelId {
        let k = self.alphabet;
        self.table[(l as usize * k + c as usize) * k + r as usize]
    }
}

/// One synchronous step of `ca` on a circular tape.
pub fn ca_reference_step(ca: &CARule, tape: &[LabelId]) -> Vec<LabelId> {
    let n = tape.len();
    (0..n)
        .map(|i| ca.transition(tape[(i + n - 1) % n], tape[i], tape[(i + 1) % n]))
        .collect()
}

/// Compiles `ca` into a table rule over degree-2 labeled graphs.
///
/// Each cell's image keeps the cell itself — relabeled with the transition
/// of the left, own, and right states — plus an unlabeled claim on each
/// neighbor and the edge to it, so adjacent cells recreate each edge from
/// both sides and the step is the synchronous update on any cycle or line.
pub fn ca_to_cgd(ca: &CARule) -> Result<LocalRule, RuleError> {
    let tokens: Vec<String> = (0..ca.alphabet()).map(|s| s.to_string()).collect();
    let sig = Signature::with_vlabels(2, tokens);
    let mut body = BTreeMap::new();
    for disk in enumerate_disks(&sig, 1)? {
        let state = |v| disk.vlabel(v).expect("labels are definite within the radius");
        let near = |p| disk.across(0, p).map_or(0, |(w, _)| state(w));
        let next = ca.transition(near(0), state(0), near(1));
        let mut image = ImageGraph::new();
        let center = image.add_vertex([(Path::empty(), 0)], Some(next));
        for p in 0..2u8 {
            if let Some((_, q)) = disk.across(0, p) {
                let step = Path(vec![PathStep::new(p, q)]);
                let there = image.add_vertex([(step, 0)], None);
                image.add_edge(center, p, there, q, None);
            }
        }
        body.insert(disk, image);
    }
    let name = match ca.alphabet() {
        2 => {
            let code = (0..8).fold(0u16, |acc, i| acc | (ca.table[i] & 1) << i);
            format!("rule{code}")
        }
        k => format!("ca-{k}-states"),
    };
    LocalRule::from_table(name, sig, 1, 3, body)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::graph::{build, CayleyGraph};
    use crate::rules::{apply_step, count_disks, run, validate_rule_on};

    /// Reads the tape back from a cycle: walk right (port 1) from the marked
    /// cell, which the rule pins in place.
    fn tape_of(x: &CayleyGraph, n: usize) -> Vec<LabelId> {
        let mut tape = Vec::with_capacity(n);
        let mut v = 0;
        for _ in 0..n {
            tape.push(x.vlabel(v).expect("cells stay labeled"));
            v = x.across(v, 1).expect("cycles stay closed").0;
        }
        assert_eq!(v, 0, "walking right n cells closes the circle");
        tape
    }

    fn cycle_of(sig: &Arc<Signature>, tape: &[LabelId]) -> CayleyGraph {
        let labels: Vec<Option<LabelId>> = tape.iter().map(|&s| Some(s)).collect();
        build::cycle(sig, &labels).unwrap()
    }

    #[test]
    fn the_published_rule_110_truth_table() {
        let ca = CARule::wolfram(110);
        let want = [
            ((1, 1, 1), 0),
            ((1, 1, 0), 1),
            ((1, 0, 1), 1),
            ((1, 0, 0), 0),
            ((0, 1, 1), 1),
            ((0, 1, 0), 1),
            ((0, 0, 1), 1),
            ((0, 0, 0), 0),
        ];
        for ((l, c, r), next) in want {
            assert_eq!(ca.transition(l, c, r), next, "on {l}{c}{r}");
        }
    }

    #[test]
    fn reference_step_is_positionwise_transition() {
        let ca = CARule::wolfram(110);
        // Hand-applied truth table on 0110: left of cell 0 is cell 3.
        assert_eq!(ca_reference_step(&ca, &[0, 1, 1, 0]), vec![1, 1, 1, 0]);
        let tape = [0, 0, 0, 0, 0, 0, 1, 0, 0, 1, 1, 0, 1, 1, 1, 1, 1];
        let next = ca_reference_step(&ca, &tape);
        let n = tape.len();
        for i in 0..n {
            let want = ca.transition(tape[(i + n - 1) % n], tape[i], tape[(i + 1) % n]);
            assert_eq!(next[i], want, "cell {i}");
        }
        // Uniform tapes stay uniform under any automaton.
        for code in [110, 30, 90] {
            let ca = CARule::wolfram(code);
            for s in 0..2 {
                let next = ca_reference_step(&ca, &[s; 9]);
                assert!(next.windows(2).all(|w| w[0] == w[1]), "rule {code} on {s}");
            }
        }
    }

    #[test]
    fn identity_automaton_fixes_every_labeled_cycle() {
        let f = ca_to_cgd(&CARule::identity(2).unwrap()).unwrap();
        for n in 1..=6 {
            let tape: Vec<LabelId> = (0..n).map(|i| (i % 2) as LabelId).collect();
            let x = cycle_of(f.sig(), &tape);
            assert_eq!(apply_step(&f, &x).unwrap(), x, "n = {n}");
        }
    }

    #[test]
    fn rule_110_on_a_sixteen_cycle_tracks_the_direct_simulator() {
        let ca = CARule::wolfram(110);
        let f = ca_to_cgd(&ca).unwrap();
        let mut tape: Vec<LabelId> = vec![0, 0, 0, 1, 0, 0, 1, 1, 0, 1, 1, 1, 1, 1, 0, 0];
        let mut x = cycle_of(f.sig(), &tape);
        for step in 1..=32 {
            x = apply_step(&f, &x).unwrap();
            tape = ca_reference_step(&ca, &tape);
            assert_eq!(tape_of(&x, 16), tape, "step {step}");
        }
    }

    #[test]
    fn shift_automaton_comes_home_after_a_full_lap() {
        // transition(l, c, r) = r moves every state one cell leftward.
        let table: Vec<LabelId> = (0..8).map(|i| (i & 1) as LabelId).collect();
        let ca = CARule::new(2, table).unwrap();
        let f = ca_to_cgd(&ca).unwrap();
        let tape: Vec<LabelId> = vec![1, 0, 0, 1, 1, 0, 0];
        let x = cycle_of(f.sig(), &tape);
        let traj = run(&f, &x, 7).unwrap();
        assert_eq!(traj[7], x, "one full lap restores the start");
        for (t, y) in traj.iter().enumerate().take(7).skip(1) {
            assert_ne!(*y, x, "period must be exactly 7, equal already at {t}");
        }
        let mut oracle = tape.clone();
        for (t, y) in traj.iter().enumerate().skip(1) {
            oracle = ca_reference_step(&ca, &oracle);
            assert_eq!(tape_of(y, 7), oracle, "step {t}");
        }
    }

    #[test]
    fn three_state_automata_embed_too() {
        // The three-state leftward shift on an aperiodic 4-tape.
        let table: Vec<LabelId> = (0..27).map(|i| (i % 3) as LabelId).collect();
        let ca = CARule::new(3, table).unwrap();
        let f = ca_to_cgd(&ca).unwrap();
        let tape: Vec<LabelId> = vec![0, 1, 2, 2];
        let mut x = cycle_of(f.sig(), &tape);
        let mut oracle = tape.clone();
        for _ in 0..4 {
            x = apply_step(&f, &x).unwrap();
            oracle = ca_reference_step(&ca, &oracle);
            assert_eq!(tape_of(&x, 4), oracle);
        }
        assert_eq!(x, cycle_of(f.sig(), &tape));
    }

    #[test]
    fn line_ends_read_their_missing_neighbor_as_quiescent() {
        let ca = CARule::wolfram(110);
        let f = ca_to_cgd(&ca).unwrap();
        let tape: Vec<LabelId> = vec![1, 1, 0, 1];
        let labels: Vec<Option<LabelId>> = tape.iter().map(|&s| Some(s)).collect();
        let x = build::line(f.sig(), &labels).unwrap();
        let y = apply_step(&f, &x).unwrap();
        let want: Vec<LabelId> = (0..4)
            .map(|i| {
                let l = if i == 0 { 0 } else { tape[i - 1] };
                let r = if i == 3 { 0 } else { tape[i + 1] };
                ca.transition(l, tape[i], r)
            })
            .collect();
        let mut got = vec![y.vlabel(0).unwrap()];
        let mut v = 0;
        while let Some((w, _)) = y.across(v, 1) {
            v = w;
            got.push(y.vlabel(v).unwrap());
        }
        assert_eq!(got, want);
    }

    #[test]
    fn every_radius_one_neighborhood_has_a_table_entry() {
        let f = ca_to_cgd(&CARule::wolfram(110)).unwrap();
        let want = count_disks(f.sig(), 1).unwrap();
        assert_eq!(want, 338);
        assert_eq!(f.table().expect("table-backed").len() as u128, want);
    }

    #[test]
    fn the_embedding_is_a_valid_rule_on_labeled_witnesses() {
        let f = ca_to_cgd(&CARule::wolfram(110)).unwrap();
        let mut witnesses: Vec<CayleyGraph> = Vec::new();
        for n in 1..=3 {
            witnesses.extend(
                crate::corpus::all_graphs(f.sig(), n)
                    .into_iter()
                    .filter(|g| g.vertices().all(|v| g.vlabel(v).is_some())),
            );
        }
        for n in [4usize, 6] {
            let tape: Vec<LabelId> = (0..n).map(|i| (i % 2) as LabelId).collect();
            let labels: Vec<Option<LabelId>> = tape.iter().map(|&s| Some(s)).collect();
            witnesses.push(cycle_of(f.sig(), &tape));
            witnesses.push(build::line(f.sig(), &labels).unwrap());
        }
        let report = validate_rule_on(&f, &witnesses).unwrap();
        assert!(report.all_pass(), "{report}");
    }

    #[test]
    fn unlabeled_cells_are_outside_the_embedding() {
        let f = ca_to_cgd(&CARule::wolfram(110)).unwrap();
        let x = build::cycle(f.sig(), &[Some(1), None, Some(0)]).unwrap();
        let err = apply_step(&f, &x).unwrap_err();
        assert!(matches!(err, RuleError::MissingDiskEntry(_)), "{err}");
    }

    #[test]
    fn malformed_tables_are_rejected() {
        assert!(matches!(CARule::new(2, vec![0; 7]), Err(CaError::WrongTableSize { .. })));
        assert!(matches!(
            CARule::new(2, vec![2; 8]),
            Err(CaError::EntryOutsideAlphabet { entry: 2, k: 2 })
        ));
        assert!(matches!(CARule::new(0, vec![]), Err(CaError::AlphabetSize)));
    }

    #[test]
    fn wolfram_codes_name_the_rule() {
        assert_eq!(ca_to_cgd(&CARule::wolfram(110)).unwrap().name(), "rule110");
        assert_eq!(ca_to_cgd(&CARule::wolfram(0)).unwrap().name(), "rule0");
    }
}
