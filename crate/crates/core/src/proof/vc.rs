//! Verification conditions and the results reported for them.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::symexec::ObligationKind;
use crate::term::{SymConst, Term, TermKind};
use crate::value::Value;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Provenance {
    /// Control command that produced the VC (`bmc`, `induction`, ...).
    pub command: String,
    pub spec: String,
    pub kind: Option<ObligationKind>,
    pub step: u32,
    /// Number of traces: 1 unless the module was self-composed.
    pub arity: u32,
}

/// Valid iff `assumptions ⇒ goal`; the solver is asked for a model of
/// `assumptions ∧ ¬goal`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerificationCondition {
    pub name: String,
    pub assumptions: Vec<Term>,
    pub goal: Term,
    pub provenance: Provenance,
    /// Variable bindings of each state the VC mentions, in step order.
    /// Evaluating them under a model yields the counterexample trace.
    pub states: Vec<BTreeMap<String, Term>>,
}

impl VerificationCondition {
    pub fn terms(&self) -> impl Iterator<Item = &Term> {
        self.assumptions.iter().chain(std::iter::once(&self.goal))
    }

    /// Symbolic constants that directly hold a variable's value:
    /// constant ↦ (variable, step, trace).
    pub fn reconstruction(&self) -> BTreeMap<SymConst, (String, u32, u32)> {
        let mut out = BTreeMap::new();
        for (i, env) in self.states.iter().enumerate() {
            for (var, t) in env {
                if let TermKind::Const(c) = &t.kind {
                    out.entry(c.clone()).or_insert_with(|| (var.clone(), i as u32, c.trace));
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TraceStep {
    pub index: u32,
    pub values: BTreeMap<String, Value>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CexTrace {
    pub spec: String,
    pub arity: u32,
    pub steps: Vec<TraceStep>,
    /// (step, variable) cells whose value the solver left unconstrained and
    /// which were filled with the sort default.
    pub defaulted: BTreeSet<(u32, String)>,
}

impl CexTrace {
    pub fn value(&self, step: u32, var: &str) -> Option<&Value> {
        self.steps.get(step as usize).and_then(|s| s.values.get(var))
    }

    /// `step <i>: <var> = <value>` lines, restricted to `vars` when non-empty.
    pub fn lines(&self, vars: &[String]) -> Vec<String> {
        let mut out = Vec::new();
        for s in &self.steps {
            for (v, val) in &s.values {
                if vars.is_empty() || vars.iter().any(|w| w == v || base_name(v) == w) {
                    out.push(format!("step {}: {v} = {val}", s.index));
                }
            }
        }
        out
    }
}

/// `y` for a composed column `y.2`.
fn base_name(v: &str) -> &str {
    match v.rsplit_once('.') {
        Some((b, j)) if !j.is_empty() && j.bytes().all(|c| c.is_ascii_digit()) => b,
        _ => v,
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail(Option<CexTrace>),
    Unknown(String),
    /// Satisfiable observability query; carries the witness.
    Observable(Option<CexTrace>),
    Unobservable,
    /// The synthesis solver proved that no candidate exists.
    Infeasible,
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail(_) => "FAIL",
            Verdict::Unknown(_) => "UNKNOWN",
            Verdict::Observable(_) => "OBSERVABLE",
            Verdict::Unobservable => "UNOBSERVABLE",
            Verdict::Infeasible => "INFEASIBLE",
        }
    }

    pub fn trace(&self) -> Option<&CexTrace> {
        match self {
            Verdict::Fail(t) | Verdict::Observable(t) => t.as_ref(),
            _ => None,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}
