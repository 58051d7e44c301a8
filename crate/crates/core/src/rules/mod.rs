//! Local rules and the synchronous global step.
//!
//! A [`LocalRule`] assigns to every radius-`r` neighborhood an [`ImageGraph`]:
//! a small replacement graph whose vertices are named by sets of
//! `(path, suffix)` atoms.  One synchronous step ([`apply_step`]) applies the
//! rule at every vertex, resolves each atom against the host graph, glues all
//! images by name, keeps the component of the successor of the pointer and
//! re-canonicalizes.
//!
//! The neighborhood a rule observes at a vertex is the *unfolding* of the
//! graph around it: walks of length ≤ r+1 that never immediately double back
//! on the edge they just crossed, arranged as a tree ([`observed_disk`]).
//! Labels are only visible up to depth r; the extra layer carries structure
//! only.  Distinct walks are distinct observations even when they land on the
//! same host vertex, which makes the observation depend only on what a local
//! explorer can see and keeps the table domain finite and enumerable
//! ([`enumerate_disks`]).

mod builtins;
mod disks;
mod engine;
mod image;
mod validate;

use std::collections::BTreeMap;
use std::sync::Arc;

use thiserror::Error;

use crate::graph::{CayleyGraph, GraphError, Signature};

pub use builtins::{
    builtin, identity_rule, inflating_line, labeled_turtle, rotate, turtle, turtle_mutant,
    BUILTIN_NAMES,
};
pub use disks::{
    count_disks, enumerate_disks, enumerate_disks_with, observed_disk, DEFAULT_DISK_BUDGET,
};
pub use engine::{apply_step, run};
pub use image::{ImageGraph, ImageVertex};
pub use validate::{validate_rule, validate_rule_on, Verdict, ValidationReport};

/// Errors from rule construction, validation and application.
#[derive(Debug, Error)]
pub enum RuleError {
    /// The rule's table has no entry for a neighborhood occurring in the host.
    #[error("no table entry for observed neighborhood:\n{0}")]
    MissingDiskEntry(String),
    /// Two resolved images disagree; the step is undefined (invalid rule).
    #[error("images conflict: {0}")]
    InconsistentUnion(String),
    /// A requested enumeration is larger than the configured budget.
    #[error("neighborhood enumeration budget exceeded: {0}")]
    BudgetExceeded(String),
    /// An image graph is structurally broken (bad port, empty name, ...).
    #[error("malformed image: {0}")]
    BadImage(String),
    #[error("unknown builtin rule `{0}`")]
    UnknownBuiltin(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Clone)]
enum Body {
    /// Finite map from canonical neighborhoods to images.
    Table(Arc<BTreeMap<CayleyGraph, ImageGraph>>),
    /// Computed images, for rules whose domain is too large to tabulate.
    Native(Arc<dyn Fn(&CayleyGraph) -> Result<ImageGraph, RuleError> + Send + Sync>),
}

/// A local rewriting rule: signature, radius, image-size bound and the map
/// from observed neighborhoods to images.
#[derive(Clone)]
pub struct LocalRule {
    name: String,
    sig: Arc<Signature>,
    radius: u8,
    bound: usize,
    body: Body,
}

impl std::fmt::Debug for LocalRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LocalRule")
            .field("name", &self.name)
            .field("radius", &self.radius)
            .field("bound", &self.bound)
            .field(
                "entries",
                &match &self.body {
                    Body::Table(t) => t.len() as i64,
                    Body::Native(_) => -1,
                },
            )
            .finish()
    }
}

impl LocalRule {
    /// A rule backed by an explicit (possibly partial) table.
    pub fn from_table(
        name: impl Into<String>,
        sig: Arc<Signature>,
        radius: u8,
        bound: usize,
        table: BTreeMap<CayleyGraph, ImageGraph>,
    ) -> Result<LocalRule, RuleError> {
        for (disk, image) in &table {
            Signature::same(&sig, disk.sig())?;
            image.check_structure(&sig)?;
        }
        Ok(LocalRule {
            name: name.into(),
            sig,
            radius,
            bound,
            body: Body::Table(Arc::new(table)),
        })
    }

    /// A rule computed by a function instead of a table, for rules whose
    /// neighborhood space is too large to enumerate (e.g. the construction
    /// machine's).  The function must be iso-invariant: it only ever sees
    /// canonical neighborhoods.
    pub fn native(
        name: impl Into<String>,
        sig: Arc<Signature>,
        radius: u8,
        bound: usize,
        f: impl Fn(&CayleyGraph) -> Result<ImageGraph, RuleError> + Send + Sync + 'static,
    ) -> LocalRule {
        LocalRule {
            name: name.into(),
            sig,
            radius,
            bound,
            body: Body::Native(Arc::new(f)),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn sig(&self) -> &Arc<Signature> {
        &self.sig
    }

    pub fn radius(&self) -> u8 {
        self.radius
    }

    /// Maximum number of vertices any image may have; also bounds the suffix
    /// alphabet `{0, 1, …, bound}` usable in image names.
    pub fn bound(&self) -> usize {
        self.bound
    }

    /// The explicit table, if this rule is tabulated.
    pub fn table(&self) -> Option<&BTreeMap<CayleyGraph, ImageGraph>> {
        match &self.body {
            Body::Table(t) => Some(t),
            Body::Native(_) => None,
        }
    }

    /// The image for one observed neighborhood.
    pub fn image_of(&self, disk: &CayleyGraph) -> Result<ImageGraph, RuleError> {
        match &self.body {
            Body::Table(t) => t
                .get(disk)
                .cloned()
                .ok_or_else(|| RuleError::MissingDiskEntry(disk.to_string())),
            Body::Native(f) => {
                let image = f(disk)?;
                image.check_structure(&self.sig)?;
                Ok(image)
            }
        }
    }
}
