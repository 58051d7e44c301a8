//! The four validity conditions a local rule must satisfy.
//!
//! A rule is a valid local rule when
//! 1. every image names its vertices by disjoint atom sets drawn from the
//!    observed neighborhood × the suffix alphabet, and some vertex carries
//!    the origin atom `(ε, 0)`,
//! 2. no image has more than `bound` vertices,
//! 3. for every radius-(r+1) neighborhood and every vertex `u` of its
//!    radius-0 core, the images applied at the center and at `u` glue and
//!    share at least one vertex (this is what keeps the global image
//!    connected), and
//! 4. for every radius-(3r+2) neighborhood and every vertex `u` of its
//!    radius-(2r+1) core, the two images glue (shared vertices not required).
//!
//! Conditions 3 and 4 are decided by exhaustive enumeration of the larger
//! neighborhoods; when the signature makes that enumeration too large,
//! [`validate_rule_on`] checks the same conditions restricted to the
//! neighborhoods that actually occur in a witness corpus.

use std::collections::BTreeSet;

use crate::graph::{CayleyGraph, Suffix, VertexId};

use super::disks::disk_budget;
use super::engine::glue_images;
use super::{enumerate_disks_with, observed_disk, ImageGraph, LocalRule, RuleError};

/// Outcome of one validity condition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    /// Failed; carries a human-readable witness (neighborhood, site, conflict).
    Fail(String),
}

impl Verdict {
    pub fn passed(&self) -> bool {
        matches!(self, Verdict::Pass)
    }
}

/// Per-condition verdicts for the four validity conditions.
#[derive(Debug, Clone)]
pub struct ValidationReport {
    /// (1) well-formed, disjoint names over the neighborhood × suffixes; origin present.
    pub names: Verdict,
    /// (2) image size within the rule's bound.
    pub size: Verdict,
    /// (3) images at distance ≤ 1 glue and share a vertex.
    pub near_overlap: Verdict,
    /// (4) images at distance ≤ 2r+2 glue.
    pub far_overlap: Verdict,
}

impl ValidationReport {
    pub fn all_pass(&self) -> bool {
        self.names.passed()
            && self.size.passed()
            && self.near_overlap.passed()
            && self.far_overlap.passed()
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (tag, v) in [
            ("names", &self.names),
            ("size", &self.size),
            ("near-overlap", &self.near_overlap),
            ("far-overlap", &self.far_overlap),
        ] {
            match v {
                Verdict::Pass => writeln!(f, "{tag}: pass")?,
                Verdict::Fail(w) => writeln!(f, "{tag}: FAIL — {w}")?,
            }
        }
        Ok(())
    }
}

/// Checks conditions (1) and (2) on the image of one neighborhood.
fn check_image(
    f: &LocalRule,
    disk: &CayleyGraph,
    image: &ImageGraph,
    names: &mut Verdict,
    size: &mut Verdict,
) {
    if size.passed() && image.vertex_count() > f.bound() {
        *size = Verdict::Fail(format!(
            "image has {} vertices, bound is {}, for neighborhood:\n{disk}",
            image.vertex_count(),
            f.bound()
        ));
    }
    if !names.passed() {
        return;
    }
    let mut seen: BTreeSet<(VertexId, Suffix)> = BTreeSet::new();
    for iv in image.vertices() {
        for (path, suffix) in &iv.atoms {
            if *suffix as usize > f.bound() {
                *names = Verdict::Fail(format!(
                    "suffix {suffix} outside {{0..{}}} for neighborhood:\n{disk}",
                    f.bound()
                ));
                return;
            }
            let Some(v) = disk.walk(0, path) else {
                *names = Verdict::Fail(format!(
                    "atom path {path} leaves the neighborhood:\n{disk}"
                ));
                return;
            };
            if !seen.insert((v, *suffix)) {
                *names = Verdict::Fail(format!(
                    "atom ({path}, {suffix}) named by two image vertices for neighborhood:\n{disk}"
                ));
                return;
            }
        }
    }
    if image.origin_vertex().is_none() {
        *names = Verdict::Fail(format!(
            "no image vertex carries the origin atom (e, 0) for neighborhood:\n{disk}"
        ));
    }
}

/// Checks conditions (3) or (4) over one enlarged neighborhood `y`:
/// glue the center image with the image at each vertex within `core_depth`.
fn check_overlaps(
    f: &LocalRule,
    y: &CayleyGraph,
    core_depth: u32,
    need_shared: bool,
    verdict: &mut Verdict,
) -> Result<(), RuleError> {
    if !verdict.passed() {
        return Ok(());
    }
    let r = f.radius();
    let dist = y.distances();
    let center_image = f.image_of(&observed_disk(y, 0, r))?;
    for u in y.vertices() {
        if dist[u as usize] > core_depth {
            continue;
        }
        let there = f.image_of(&observed_disk(y, u, r))?;
        let sites = [(0, center_image.clone()), (u, there.clone())];
        if let Err(e) = glue_images(y, &sites, f.name()) {
            *verdict = Verdict::Fail(format!(
                "images at the center and at vertex {u} do not glue ({e}) on:\n{y}"
            ));
            return Ok(());
        }
        if need_shared {
            let resolve = |site: VertexId, img: &ImageGraph| -> BTreeSet<(VertexId, Suffix)> {
                img.vertices()
                    .iter()
                    .flat_map(|iv| iv.atoms.iter())
                    .filter_map(|(p, z)| y.walk(site, p).map(|v| (v, *z)))
                    .collect()
            };
            let a = resolve(0, &center_image);
            let b = resolve(u, &there);
            if a.intersection(&b).next().is_none() {
                *verdict = Verdict::Fail(format!(
                    "images at the center and at vertex {u} share no vertex on:\n{y}"
                ));
                return Ok(());
            }
        }
    }
    Ok(())
}

fn fresh_report() -> ValidationReport {
    ValidationReport {
        names: Verdict::Pass,
        size: Verdict::Pass,
        near_overlap: Verdict::Pass,
        far_overlap: Verdict::Pass,
    }
}

/// Validates a rule by exhaustive enumeration of every neighborhood its
/// conditions quantify over.  Fails with `BudgetExceeded` when the signature
/// admits too many neighborhoods; use [`validate_rule_on`] then.
pub fn validate_rule(f: &LocalRule) -> Result<ValidationReport, RuleError> {
    let budget = disk_budget();
    let mut report = fresh_report();
    for disk in enumerate_disks_with(f.sig(), f.radius(), budget)? {
        let image = f.image_of(&disk)?;
        check_image(f, &disk, &image, &mut report.names, &mut report.size);
    }
    let r = f.radius() as u32;
    for y in enumerate_disks_with(f.sig(), f.radius() + 1, budget)? {
        check_overlaps(f, &y, 1, true, &mut report.near_overlap)?;
    }
    for y in enumerate_disks_with(f.sig(), 3 * f.radius() + 2, budget)? {
        check_overlaps(f, &y, 2 * r + 2, false, &mut report.far_overlap)?;
    }
    Ok(report)
}

/// Validates the same four conditions, but only over the neighborhoods that
/// occur in `witnesses`.  A pass is evidence, not proof: rules whose
/// neighborhood space cannot be enumerated are validated this way against a
/// corpus that exercises them.
pub fn validate_rule_on(
    f: &LocalRule,
    witnesses: &[CayleyGraph],
) -> Result<ValidationReport, RuleError> {
    let mut report = fresh_report();
    let r = f.radius() as u32;
    let mut seen_r: BTreeSet<CayleyGraph> = BTreeSet::new();
    let mut seen_near: BTreeSet<CayleyGraph> = BTreeSet::new();
    let mut seen_far: BTreeSet<CayleyGraph> = BTreeSet::new();
    for x in witnesses {
        for u in x.vertices() {
            let disk = observed_disk(x, u, f.radius());
            if seen_r.insert(disk.clone()) {
                let image = f.image_of(&disk)?;
                check_image(f, &disk, &image, &mut report.names, &mut report.size);
            }
            let near = observed_disk(x, u, f.radius() + 1);
            if seen_near.insert(near.clone()) {
                check_overlaps(f, &near, 1, true, &mut report.near_overlap)?;
            }
            let far = observed_disk(x, u, 3 * f.radius() + 2);
            if seen_far.insert(far.clone()) {
                check_overlaps(f, &far, 2 * r + 2, false, &mut report.far_overlap)?;
            }
        }
    }
    Ok(report)
}
