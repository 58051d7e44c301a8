//! Compilation of local rules into restricted normal forms.
//!
//! Two passes live here.  [`radius_one_reduction`] rewrites any rule into one
//! that observes only its immediate neighbors, spreading each original step
//! over several growth steps that lay down shortcut edges.  [`label_free_reduction`]
//! strips vertex and edge labels, storing each label as a satellite vertex
//! hanging off a port reserved for it.  [`normal_form`] chains the two.
//!
//! Every pass returns the compiled rule together with a [`SimulationMap`]:
//! a total, computable translation of configurations of the original system
//! into configurations of the compiled one.  The contract is step-for-step:
//! one step of the original corresponds to exactly `delta` steps of the
//! compiled rule, with the translation commuting with time.
//! [`verify_simulation`] replays both systems side by side and checks exactly
//! that, returning the first counterexample when it fails.

mod labels;
mod radius;

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::graph::{CayleyGraph, GraphError, Signature, VertexId};
use crate::rules::{apply_step, LocalRule, RuleError};

pub use labels::{label_free_decode, label_free_reduction};
pub use radius::radius_one_reduction;

/// Failures of the reduction passes and the simulation verifier.
#[derive(Debug, Error)]
pub enum ReductionError {
    /// A graph or rule was offered to a map built for another signature.
    #[error("signature mismatch: {0}")]
    SignatureMismatch(String),
    /// A graph claimed to be an encoding does not satisfy the encoding's
    /// structural invariants.
    #[error("not a valid encoded graph: {0}")]
    InvalidEncoding(String),
    /// Two simulation maps were chained across incompatible signatures.
    #[error("maps do not compose: {0}")]
    Composition(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Rule(#[from] RuleError),
}

fn check_sig(
    what: &str,
    got: &Arc<Signature>,
    want: &Arc<Signature>,
) -> Result<(), ReductionError> {
    if got == want {
        Ok(())
    } else {
        Err(ReductionError::SignatureMismatch(format!(
            "{what} uses ({} ports, {} vertex labels, {} edge labels), the map expects ({}, {}, {})",
            got.degree(),
            got.vlabels().len(),
            got.elabels().len(),
            want.degree(),
            want.vlabels().len(),
            want.elabels().len(),
        )))
    }
}

type Encoder =
    dyn Fn(&CayleyGraph) -> Result<(CayleyGraph, Vec<VertexId>), ReductionError> + Send + Sync;

/// A total translation of configurations over one signature into
/// configurations over another, tagged with the time dilation `delta`:
/// one source step corresponds to `delta` target steps.
///
/// Besides the encoded graph, the underlying encoder reports where each
/// source vertex landed, so callers can chase a vertex through a reduction
/// (see [`SimulationMap::translate`]).
#[derive(Clone)]
pub struct SimulationMap {
    name: String,
    source: Arc<Signature>,
    target: Arc<Signature>,
    delta: u32,
    encoder: Arc<Encoder>,
}

impl fmt::Debug for SimulationMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SimulationMap")
            .field("name", &self.name)
            .field("delta", &self.delta)
            .finish_non_exhaustive()
    }
}

impl SimulationMap {
    pub fn new(
        name: impl Into<String>,
        source: Arc<Signature>,
        target: Arc<Signature>,
        delta: u32,
        encoder: impl Fn(&CayleyGraph) -> Result<(CayleyGraph, Vec<VertexId>), ReductionError>
            + Send
            + Sync
            + 'static,
    ) -> Self {
        SimulationMap {
            name: name.into(),
            source,
            target,
            delta,
            encoder: Arc::new(encoder),
        }
    }

    /// The do-nothing translation: every system simulates itself.
    pub fn identity(sig: &Arc<Signature>) -> Self {
        SimulationMap::new("identity", sig.clone(), sig.clone(), 1, |x: &CayleyGraph| {
            Ok((x.clone(), x.vertices().collect()))
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn source(&self) -> &Arc<Signature> {
        &self.source
    }

    pub fn target(&self) -> &Arc<Signature> {
        &self.target
    }

    pub fn delta(&self) -> u32 {
        self.delta
    }

    /// Encodes one configuration.
    pub fn encode(&self, x: &CayleyGraph) -> Result<CayleyGraph, ReductionError> {
        check_sig("the graph", x.sig(), &self.source)?;
        Ok((self.encoder)(x)?.0)
    }

    /// Encodes one configuration and reports where vertex `u` landed.
    pub fn translate(
        &self,
        x: &CayleyGraph,
        u: VertexId,
    ) -> Result<(CayleyGraph, VertexId), ReductionError> {
        check_sig("the graph", x.sig(), &self.source)?;
        let (y, table) = (self.encoder)(x)?;
        let landed = table.get(u as usize).copied().ok_or_else(|| {
            ReductionError::InvalidEncoding(format!("vertex {u} is outside the graph"))
        })?;
        Ok((y, landed))
    }

    /// Chains two maps: first `self`, then `then` applied to the result.
    /// Deltas multiply.
    pub fn compose(&self, then: &SimulationMap) -> Result<SimulationMap, ReductionError> {
        if self.target != then.source {
            return Err(ReductionError::Composition(format!(
                "the target signature of `{}` is not the source signature of `{}`",
                self.name, then.name,
            )));
        }
        let e1 = self.encoder.clone();
        let e2 = then.encoder.clone();
        Ok(SimulationMap {
            name: format!("{}+{}", self.name, then.name),
            source: self.source.clone(),
            target: then.target.clone(),
            delta: self.delta * then.delta,
            encoder: Arc::new(move |x| {
                let (mid, t1) = e1(x)?;
                let (out, t2) = e2(&mid)?;
                let table = t1.iter().map(|&m| t2[m as usize]).collect();
                Ok((out, table))
            }),
        })
    }
}

/// A compiled rule together with the translation into its configurations.
#[derive(Clone, Debug)]
pub struct ReductionResult {
    pub rule: LocalRule,
    pub map: SimulationMap,
}

/// Outcome of replaying a simulation: either every checked equation held,
/// or the first counterexample.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SimVerdict {
    Pass,
    Fail { input: usize, step: u32, reason: String },
}

impl SimVerdict {
    pub fn passed(&self) -> bool {
        matches!(self, SimVerdict::Pass)
    }
}

impl fmt::Display for SimVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimVerdict::Pass => write!(f, "pass"),
            SimVerdict::Fail { input, step, reason } => {
                write!(f, "fail on input #{input} at step {step}: {reason}")
            }
        }
    }
}

/// Replays `simulated` and `simulator` side by side from every start graph.
///
/// For each start `x` and each `t ≤ horizon` the encoding of the simulated
/// configuration after `t` steps must coincide (as a pointed graph, exactly)
/// with the simulator run for `delta·t` steps from the encoded start.  The
/// encoder is also audited for injectivity across the given inputs: two
/// distinct starts with equal encodings fail before any stepping happens.
///
/// A step fault in either system counts as a counterexample, not an error;
/// `Err` is reserved for misuse such as signature mismatches.
pub fn verify_simulation(
    simulator: &LocalRule,
    simulated: &LocalRule,
    map: &SimulationMap,
    inputs: &[CayleyGraph],
    horizon: u32,
) -> Result<SimVerdict, ReductionError> {
    check_sig("the simulated rule", simulated.sig(), map.source())?;
    check_sig("the simulator rule", simulator.sig(), map.target())?;
    for x in inputs {
        check_sig("an input graph", x.sig(), map.source())?;
    }
    let encoded: Vec<CayleyGraph> =
        inputs.iter().map(|x| map.encode(x)).collect::<Result<_, _>>()?;
    for i in 0..inputs.len() {
        for j in i + 1..inputs.len() {
            if inputs[i] != inputs[j] && encoded[i] == encoded[j] {
                return Ok(SimVerdict::Fail {
                    input: j,
                    step: 0,
                    reason: format!("the encoder is not injective: inputs #{i} and #{j} collide"),
                });
            }
        }
    }
    for (i, start) in inputs.iter().enumerate() {
        let mut src = start.clone();
        let mut tgt = encoded[i].clone();
        for step in 1..=horizon {
            src = match apply_step(simulated, &src) {
                Ok(g) => g,
                Err(e) => {
                    return Ok(SimVerdict::Fail {
                        input: i,
                        step,
                        reason: format!("the simulated rule faulted: {e}"),
                    })
                }
            };
            for _ in 0..map.delta() {
                tgt = match apply_step(simulator, &tgt) {
                    Ok(g) => g,
                    Err(e) => {
                        return Ok(SimVerdict::Fail {
                            input: i,
                            step,
                            reason: format!("the simulator faulted: {e}"),
                        })
                    }
                };
            }
            let want = map.encode(&src)?;
            if tgt != want {
                return Ok(SimVerdict::Fail {
                    input: i,
                    step,
                    reason: format!(
                        "trajectories diverge: the encoded configuration has {} vertices, the simulator reached {}",
                        want.vertex_count(),
                        tgt.vertex_count(),
                    ),
                });
            }
        }
    }
    Ok(SimVerdict::Pass)
}

/// Compiles a rule all the way down: first the radius is brought to one,
/// then the labels of the intermediate rule are stripped into satellite
/// vertices.  The result observes at most its radius-2 neighborhood (the
/// radius-1 core plus the satellite lookaround) over a signature with no
/// labels at all, and simulates `f` with the composed slowdown.
pub fn normal_form(f: &LocalRule) -> Result<ReductionResult, ReductionError> {
    let first = radius_one_reduction(f)?;
    let second = label_free_reduction(&first.rule)?;
    let map = first.map.compose(&second.map)?;
    Ok(ReductionResult { rule: second.rule, map })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build;
    use crate::rules::{identity_rule, rotate, turtle};

    #[test]
    fn every_rule_simulates_itself() {
        let f = turtle().unwrap();
        let map = SimulationMap::identity(f.sig());
        let inputs = [
            build::single(f.sig(), None).unwrap(),
            build::pair(f.sig(), [None, None], None).unwrap(),
        ];
        let verdict = verify_simulation(&f, &f, &map, &inputs, 6).unwrap();
        assert!(verdict.passed(), "{verdict}");
    }

    #[test]
    fn constant_encoders_fail_the_injectivity_audit() {
        let f = turtle().unwrap();
        let sig = f.sig().clone();
        let squash = SimulationMap::new("squash", sig.clone(), sig.clone(), 1, move |_| {
            Ok((build::single(&sig, None)?, vec![0]))
        });
        let inputs = [
            build::single(f.sig(), None).unwrap(),
            build::pair(f.sig(), [None, None], None).unwrap(),
        ];
        let verdict = verify_simulation(&f, &f, &squash, &inputs, 3).unwrap();
        match verdict {
            SimVerdict::Fail { input: 1, step: 0, ref reason } => {
                assert!(reason.contains("injective"), "{reason}");
            }
            other => panic!("expected the injectivity audit to fire, got {other}"),
        }
    }

    #[test]
    fn divergence_reports_the_first_bad_step() {
        // The identity rule does not simulate the turtle: they part ways at
        // the very first step.
        let f = turtle().unwrap();
        let lazy = identity_rule(f.sig()).unwrap();
        let map = SimulationMap::identity(f.sig());
        let inputs = [build::pair(f.sig(), [None, None], None).unwrap()];
        let verdict = verify_simulation(&lazy, &f, &map, &inputs, 3).unwrap();
        match verdict {
            SimVerdict::Fail { input: 0, step: 1, ref reason } => {
                assert!(reason.contains("diverge"), "{reason}");
            }
            other => panic!("expected divergence at step 1, got {other}"),
        }
    }

    #[test]
    fn foreign_signatures_are_misuse_not_counterexamples() {
        let f = turtle().unwrap();
        let wide = identity_rule(&Signature::unlabeled(2)).unwrap();
        let map = SimulationMap::identity(f.sig());
        let err = verify_simulation(&wide, &f, &map, &[], 1).unwrap_err();
        assert!(matches!(err, ReductionError::SignatureMismatch(_)), "{err}");

        let err = map.compose(&SimulationMap::identity(wide.sig())).unwrap_err();
        assert!(matches!(err, ReductionError::Composition(_)), "{err}");
    }

    #[test]
    fn normal_form_of_rotate_is_radius_two_and_label_free() {
        let f = rotate();
        let r = normal_form(&f).unwrap();
        assert!(r.rule.radius() <= 2);
        assert!(r.rule.sig().vlabels().is_empty());
        assert!(r.rule.sig().elabels().is_empty());
        assert_eq!(r.map.delta(), 2);
        let mut inputs = Vec::new();
        for n in 3..7 {
            let labels: Vec<_> =
                (0..n).map(|i| [None, Some(0), Some(1)][i % 3]).collect();
            inputs.push(build::cycle(f.sig(), &labels).unwrap());
        }
        let verdict = verify_simulation(&r.rule, &f, &r.map, &inputs, 2).unwrap();
        assert!(verdict.passed(), "{verdict}");
    }

    #[test]
    fn normal_form_of_small_rules_keeps_radius_one() {
        let f = identity_rule(&Signature::unlabeled(2)).unwrap();
        let r = normal_form(&f).unwrap();
        assert_eq!(r.rule.radius(), 1);
        assert!(r.rule.sig().vlabels().is_empty());
        assert!(r.rule.sig().elabels().is_empty());
        assert_eq!(r.map.delta(), 1);
        let inputs = [
            build::cycle_n(f.sig(), 5).unwrap(),
            build::line_n(f.sig(), 4).unwrap(),
        ];
        let verdict = verify_simulation(&r.rule, &f, &r.map, &inputs, 3).unwrap();
        assert!(verdict.passed(), "{verdict}");
    }
}
