//! VC generation for bmc, induction and procedure verification, and
//! parallel dispatch of VCs to the solver.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use super::compose::{hyper_arity, self_compose, trace_map};
use super::vc::{Provenance, Verdict, VerificationCondition};
use crate::elab::TypedModule;
use crate::smt::{extract_trace, smto_check, Oracles, SmtModel, SolveResult, SolverConfig};
use crate::symexec::{collect_obligations_with, unroll, ObligationKind, RawObligation, SymExec, SymbolicState};
use crate::term::{self, FunDef, Term};

/// The module VCs are generated from: `m` itself, or its self-composition
/// when `m` has hyper specs.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub module: TypedModule,
    pub arity: u32,
    traces: BTreeMap<String, u32>,
}

impl Prepared {
    pub fn new(m: &TypedModule) -> Prepared {
        let n = hyper_arity(m);
        if n == 0 {
            return Prepared { module: m.clone(), arity: 1, traces: BTreeMap::new() };
        }
        // Typechecking bounds every trace index by its spec's arity, and n
        // is the largest arity, so composition cannot fail.
        let module = self_compose(m, n).expect("hyper indices fit the composition arity");
        let traces = trace_map(&module);
        Prepared { module, arity: n, traces }
    }

    pub fn exec(&self) -> SymExec<'_> {
        SymExec::with_traces(&self.module, self.traces.clone())
    }
}

fn envs(states: &[SymbolicState]) -> Vec<BTreeMap<String, Term>> {
    states.iter().map(|s| s.env.clone()).collect()
}

fn vc_from(ob: RawObligation, command: &str, arity: u32, states: &[SymbolicState]) -> VerificationCondition {
    let upto = (ob.step as usize + 1).min(states.len());
    VerificationCondition {
        name: ob.name,
        assumptions: ob.assumptions,
        goal: ob.goal,
        provenance: Provenance { command: command.into(), spec: ob.spec, kind: Some(ob.kind), step: ob.step, arity },
        states: envs(&states[..upto]),
    }
}

/// Bounded model checking: every obligation over `k` steps from init.
pub fn bmc(m: &TypedModule, k: u32) -> Vec<VerificationCondition> {
    bmc_prepared(&Prepared::new(m), k)
}

pub fn bmc_prepared(p: &Prepared, k: u32) -> Vec<VerificationCondition> {
    let x = p.exec();
    let states = unroll(&x, k);
    collect_obligations_with(&x, &states).into_iter().map(|ob| vc_from(ob, "bmc", p.arity, &states)).collect()
}

/// k-induction (`k = 1` is plain induction). Base VCs cover steps
/// `0..k-1` from init; the step VCs assume the invariants on `k`
/// consecutive arbitrary states and check them, and the asserts of the
/// last transition, at state `k`.
pub fn induct(m: &TypedModule, k: u32) -> Vec<VerificationCondition> {
    induct_prepared(&Prepared::new(m), k)
}

pub fn induct_prepared(p: &Prepared, k: u32) -> Vec<VerificationCondition> {
    assert!(k >= 1, "induction depth must be at least 1");
    let command = if k == 1 { "induction" } else { "kinduction" };
    let x = p.exec();
    let base = unroll(&x, k - 1);
    let mut out: Vec<VerificationCondition> =
        collect_obligations_with(&x, &base).into_iter().map(|ob| vc_from(ob, command, p.arity, &base)).collect();

    let mut states = vec![x.arbitrary_state(0)];
    for _ in 0..k {
        let s = x.step(states.last().unwrap());
        states.push(s);
    }
    let specs: Vec<_> = x
        .module
        .invariants
        .iter()
        .map(|s| (s, ObligationKind::Invariant))
        .chain(x.module.hyperinvariants.iter().map(|s| (s, ObligationKind::HyperInvariant)))
        .collect();
    let mut hyp: Vec<Term> = Vec::new();
    for s in &states[..k as usize] {
        hyp.extend(s.assumptions.iter().cloned());
        hyp.extend(specs.iter().map(|(spec, _)| x.spec_term(spec, s)));
    }
    let last = &states[k as usize];
    let step_name = |spec: &str| format!("{spec}@step");
    for a in &last.asserts {
        let mut assumptions = hyp.clone();
        assumptions.extend(last.assumptions[..a.assumed].iter().cloned());
        out.push(VerificationCondition {
            name: step_name(&a.spec),
            assumptions,
            goal: a.goal.clone(),
            provenance: Provenance { command: command.into(), spec: a.spec.clone(), kind: Some(a.kind), step: k, arity: p.arity },
            states: envs(&states),
        });
    }
    let mut assumptions = hyp;
    assumptions.extend(last.assumptions.iter().cloned());
    for (spec, kind) in specs {
        out.push(VerificationCondition {
            name: step_name(&spec.name),
            assumptions: assumptions.clone(),
            goal: x.spec_term(spec, last),
            provenance: Provenance { command: command.into(), spec: spec.name.clone(), kind: Some(kind), step: k, arity: p.arity },
            states: envs(&states),
        });
    }
    out
}

/// One VC per ensures clause and per assert reached in the body.
pub fn verify_procedure(m: &TypedModule, proc: &str) -> Vec<VerificationCondition> {
    let x = SymExec::new(m);
    let pre = x.arbitrary_state(0);
    x.procedure_obligations(proc)
        .into_iter()
        .map(|ob| VerificationCondition {
            name: ob.name,
            assumptions: ob.assumptions,
            goal: ob.goal,
            provenance: Provenance { command: "verify".into(), spec: ob.spec, kind: Some(ob.kind), step: 0, arity: 1 },
            states: vec![pre.env.clone()],
        })
        .collect()
}

/// Satisfiability of the axioms over the initial state, posed as the
/// validity of `false`: a model is an observable execution.
pub fn observability_vc(p: &Prepared) -> VerificationCondition {
    let x = p.exec();
    let s = x.init_state();
    VerificationCondition {
        name: "check_sat@0".into(),
        assumptions: s.assumptions.clone(),
        goal: term::bool_lit(false),
        provenance: Provenance { command: "check_sat".into(), spec: "check_sat".into(), kind: None, step: 0, arity: p.arity },
        states: vec![s.env],
    }
}

/// Macro-expands `defs` (synthesized bodies) throughout a VC.
pub fn substitute(vc: &VerificationCondition, defs: &BTreeMap<String, FunDef>) -> VerificationCondition {
    let ex = |t: &Term| term::expand_funs(t, defs);
    VerificationCondition {
        assumptions: vc.assumptions.iter().map(ex).collect(),
        goal: ex(&vc.goal),
        states: vc.states.iter().map(|env| env.iter().map(|(k, t)| (k.clone(), ex(t))).collect()).collect(),
        ..vc.clone()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VcResult {
    pub name: String,
    pub verdict: Verdict,
    pub time: Duration,
    pub provenance: Provenance,
    /// Solver model behind a FAIL or OBSERVABLE verdict.
    pub model: Option<SmtModel>,
}

impl VcResult {
    /// `<VERDICT> <vc-name> [<ms>ms]`.
    pub fn report_line(&self) -> String {
        format!("{} {} [{}ms]", self.verdict.label(), self.name, self.time.as_millis())
    }
}

/// Checks one VC; an oracle-free VC takes a single solver call.
pub fn check_vc(vc: &VerificationCondition, oracles: &Oracles, cfg: &SolverConfig) -> VcResult {
    let start = Instant::now();
    let outcome = smto_check(vc, oracles, cfg);
    let (verdict, model) = match outcome.result {
        SolveResult::Unsat => (Verdict::Pass, None),
        SolveResult::Sat(model) => (Verdict::Fail(Some(extract_trace(&model, vc))), Some(model)),
        SolveResult::Unknown(r) => (Verdict::Unknown(r), None),
    };
    VcResult { name: vc.name.clone(), verdict, time: start.elapsed(), provenance: vc.provenance.clone(), model }
}

/// Checks VCs concurrently; results keep the order of `vcs`.
pub fn check_vcs(vcs: &[VerificationCondition], oracles: &Oracles, cfg: &SolverConfig) -> Vec<VcResult> {
    vcs.par_iter().map(|vc| check_vc(vc, oracles, cfg)).collect()
}
