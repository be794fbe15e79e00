//! Symbolic execution of elaborated modules, and a concrete interpreter used
//! as a reference when testing it.

pub mod interp;
mod lower;

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::ast::*;
use crate::elab::{Spec, TypedModule};
use crate::term::{self, Sort, SymConst, Term};

pub use interp::{concrete_interpret, ConcreteTrace, InterpError};
pub use lower::ExprLowering;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ObligationKind {
    Assert,
    Invariant,
    HyperInvariant,
    Ensures,
    LoopInvariant,
}

#[derive(Clone, Debug)]
pub struct RawObligation {
    /// `<spec>@<step>`.
    pub name: String,
    pub spec: String,
    pub kind: ObligationKind,
    pub step: u32,
    pub goal: Term,
    pub assumptions: Vec<Term>,
}

/// An inline assertion reached while building a state; `assumed` is how
/// many of the state's assumptions precede it.
#[derive(Clone, Debug)]
pub struct InlineAssert {
    pub spec: String,
    pub kind: ObligationKind,
    pub goal: Term,
    pub assumed: usize,
}

#[derive(Clone, Debug)]
pub struct SymbolicState {
    pub step: u32,
    /// Every module variable (inputs included).
    pub env: BTreeMap<String, Term>,
    pub assumptions: Vec<Term>,
    pub asserts: Vec<InlineAssert>,
}

/// Symbolic executor over one elaborated module. Variables listed in
/// `traces` belong to the given copy of a self-composed module.
#[derive(Clone, Debug)]
pub struct SymExec<'m> {
    pub module: &'m TypedModule,
    traces: BTreeMap<String, u32>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Mode {
    /// Assignments update the current state (init blocks, procedure bodies).
    Sequential,
    /// Unprimed reads see the pre-state; primed assignments build the next state.
    Next,
}

#[derive(Clone, Debug)]
struct Frame {
    env: BTreeMap<String, Term>,
    next: BTreeMap<String, Term>,
    locals: BTreeMap<String, Term>,
    old: Option<Arc<BTreeMap<String, Term>>>,
}

struct Run<'a, 'm> {
    x: &'a SymExec<'m>,
    mode: Mode,
    step: u32,
    fresh: u32,
    assumptions: Vec<Term>,
    asserts: Vec<InlineAssert>,
    label_prefix: String,
}

fn is_loop_label(label: &str) -> bool {
    label.starts_with("loop_entry") || label.starts_with("loop_preserve")
}

impl<'m> SymExec<'m> {
    pub fn new(module: &'m TypedModule) -> Self {
        SymExec { module, traces: BTreeMap::new() }
    }

    pub fn with_traces(module: &'m TypedModule, traces: BTreeMap<String, u32>) -> Self {
        SymExec { module, traces }
    }

    pub fn lowering(&self) -> ExprLowering<'m> {
        ExprLowering::new(self.module)
    }

    pub fn trace_of(&self, var: &str) -> u32 {
        self.traces.get(var).copied().unwrap_or(1)
    }

    pub fn state_const(&self, name: &str, step: u32) -> Term {
        let sort = self.module.var(name).map(|v| v.sort.clone()).expect("declared variable");
        term::konst(SymConst::new(name, step, self.trace_of(name)), sort)
    }

    /// Axioms and hyperaxioms instantiated over `env`. Hyperaxioms only
    /// make sense on a self-composed module, where `x.i` names copy `i`.
    pub fn axioms_at(&self, env: &BTreeMap<String, Term>) -> Vec<Term> {
        let lo = self.lowering();
        self.module.axioms.iter().chain(&self.module.hyperaxioms).map(|a| lo.spec(&a.expr, env)).collect()
    }

    /// Evaluates a spec expression in a state.
    pub fn spec_term(&self, spec: &Spec, s: &SymbolicState) -> Term {
        self.lowering().spec(&spec.expr, &s.env)
    }

    /// State at step 0: the init block run over fresh step-0 constants.
    pub fn init_state(&self) -> SymbolicState {
        let env: BTreeMap<String, Term> =
            self.module.vars.iter().map(|v| (v.name.clone(), self.state_const(&v.name, 0))).collect();
        let mut run = Run::new(self, Mode::Sequential, 0);
        let mut frame = Frame { env, next: BTreeMap::new(), locals: BTreeMap::new(), old: None };
        let pc = term::bool_lit(true);
        run.block(&self.module.init, &mut frame, &pc);
        let mut s = run.finish(frame.env);
        s.assumptions.extend(self.axioms_at(&s.env));
        s
    }

    /// A state of unconstrained step-`step` constants, axioms assumed.
    pub fn arbitrary_state(&self, step: u32) -> SymbolicState {
        let env: BTreeMap<String, Term> =
            self.module.vars.iter().map(|v| (v.name.clone(), self.state_const(&v.name, step))).collect();
        let assumptions = self.axioms_at(&env);
        SymbolicState { step, env, assumptions, asserts: Vec::new() }
    }

    /// One transition: primed assignments are simultaneous over `s`,
    /// unassigned variables keep their value and inputs are fresh.
    pub fn step(&self, s: &SymbolicState) -> SymbolicState {
        let step = s.step + 1;
        let mut run = Run::new(self, Mode::Next, step);
        let mut frame = Frame { env: s.env.clone(), next: BTreeMap::new(), locals: BTreeMap::new(), old: None };
        let pc = term::bool_lit(true);
        run.block(&self.module.next, &mut frame, &pc);
        let mut env = s.env.clone();
        for v in &self.module.vars {
            if v.kind == VarKind::Input {
                env.insert(v.name.clone(), self.state_const(&v.name, step));
            } else if let Some(t) = frame.next.remove(&v.name) {
                env.insert(v.name.clone(), t);
            }
        }
        let mut out = run.finish(env);
        out.assumptions.extend(self.axioms_at(&out.env));
        out
    }

    /// Obligations of `verify(proc)`: from an arbitrary pre-state satisfying
    /// the requires clauses, the body establishes every ensures clause.
    pub fn procedure_obligations(&self, name: &str) -> Vec<RawObligation> {
        let p = self.module.procedure(name).expect("procedure exists");
        let pre = self.arbitrary_state(0);
        let lo = self.lowering();
        let mut run = Run::new(self, Mode::Sequential, 0);
        run.label_prefix = format!("{name}.");
        run.assumptions = pre.assumptions.clone();
        let mut locals = BTreeMap::new();
        for q in &p.params {
            let sort = lo.resolve(&q.ty);
            locals.insert(q.name.clone(), term::konst(SymConst::new(q.name.as_str(), 0, 1), sort));
        }
        for q in &p.returns {
            let sort = lo.resolve(&q.ty);
            let t = run.fresh_const(&q.name, sort);
            locals.insert(q.name.clone(), t);
        }
        let mut frame = Frame { env: pre.env.clone(), next: BTreeMap::new(), locals, old: None };
        for r in &p.requires {
            let t = lo.expr(r, &frame.env, &frame.locals, None);
            run.assumptions.push(t);
        }
        let old: BTreeMap<String, Term> =
            pre.env.iter().chain(frame.locals.iter()).map(|(k, v)| (k.clone(), v.clone())).collect();
        let pc = term::bool_lit(true);
        if let Some(body) = &p.body {
            run.block(body, &mut frame, &pc);
        }
        frame.old = Some(Arc::new(old));
        for (k, e) in p.ensures.iter().enumerate() {
            let goal = lo.expr(e, &frame.env, &frame.locals, frame.old.as_deref());
            run.asserts.push(InlineAssert {
                spec: format!("{name}.ensures{k}"),
                kind: ObligationKind::Ensures,
                goal,
                assumed: run.assumptions.len(),
            });
        }
        let s = run.finish(frame.env);
        s.asserts
            .iter()
            .map(|a| RawObligation {
                name: format!("{}@0", a.spec),
                spec: a.spec.clone(),
                kind: a.kind,
                step: 0,
                goal: a.goal.clone(),
                assumptions: s.assumptions[..a.assumed].to_vec(),
            })
            .collect()
    }
}

/// Initial state of `m`.
pub fn init_state(m: &TypedModule) -> SymbolicState {
    SymExec::new(m).init_state()
}

/// Successor of `s` under `m`'s next block.
pub fn step(s: &SymbolicState, m: &TypedModule) -> SymbolicState {
    SymExec::new(m).step(s)
}

/// Unrolls `k` transitions from the initial state.
pub fn unroll(x: &SymExec, k: u32) -> Vec<SymbolicState> {
    let mut states = vec![x.init_state()];
    for _ in 0..k {
        let next = x.step(states.last().unwrap());
        states.push(next);
    }
    states
}

/// One obligation per inline assert reached and per (invariant, step).
/// Each obligation assumes everything assumed up to its point of check.
pub fn collect_obligations(states: &[SymbolicState], m: &TypedModule) -> Vec<RawObligation> {
    let x = SymExec::new(m);
    collect_obligations_with(&x, states)
}

pub fn collect_obligations_with(x: &SymExec, states: &[SymbolicState]) -> Vec<RawObligation> {
    let mut out = Vec::new();
    let mut prior: Vec<Term> = Vec::new();
    for s in states {
        for a in &s.asserts {
            let mut assumptions = prior.clone();
            assumptions.extend(s.assumptions[..a.assumed].iter().cloned());
            out.push(RawObligation {
                name: format!("{}@{}", a.spec, s.step),
                spec: a.spec.clone(),
                kind: a.kind,
                step: s.step,
                goal: a.goal.clone(),
                assumptions,
            });
        }
        let mut assumptions = prior.clone();
        assumptions.extend(s.assumptions.iter().cloned());
        let invs = x.module.invariants.iter().map(|i| (i, ObligationKind::Invariant));
        let hypers = x.module.hyperinvariants.iter().map(|i| (i, ObligationKind::HyperInvariant));
        for (inv, kind) in invs.chain(hypers) {
            out.push(RawObligation {
                name: format!("{}@{}", inv.name, s.step),
                spec: inv.name.clone(),
                kind,
                step: s.step,
                goal: x.spec_term(inv, s),
                assumptions: assumptions.clone(),
            });
        }
        prior.extend(s.assumptions.iter().cloned());
    }
    out
}

impl<'a, 'm> Run<'a, 'm> {
    fn new(x: &'a SymExec<'m>, mode: Mode, step: u32) -> Self {
        Run { x, mode, step, fresh: 0, assumptions: Vec::new(), asserts: Vec::new(), label_prefix: String::new() }
    }

    fn finish(self, env: BTreeMap<String, Term>) -> SymbolicState {
        SymbolicState { step: self.step, env, assumptions: self.assumptions, asserts: self.asserts }
    }

    fn fresh_const(&mut self, base: &str, sort: Sort) -> Term {
        self.fresh += 1;
        let name = format!("{base}#{}", self.fresh);
        let trace = self.x.trace_of(base);
        term::konst(SymConst::new(name, self.step, trace), sort)
    }

    fn lowering(&self) -> ExprLowering<'m> {
        self.x.lowering()
    }

    fn eval(&self, e: &Expr, f: &Frame) -> Term {
        self.lowering().expr(e, &f.env, &f.locals, f.old.as_deref())
    }

    fn block(&mut self, stmts: &[Stmt], f: &mut Frame, pc: &Term) {
        for s in stmts {
            self.stmt(s, f, pc);
        }
    }

    fn assign(&mut self, f: &mut Frame, name: &str, primed: bool, value: Term) {
        if f.locals.contains_key(name) && !primed {
            f.locals.insert(name.to_string(), value);
        } else if self.mode == Mode::Next {
            f.next.insert(name.to_string(), value);
        } else {
            f.env.insert(name.to_string(), value);
        }
    }

    fn stmt(&mut self, s: &Stmt, f: &mut Frame, pc: &Term) {
        match &s.kind {
            StmtKind::LocalVar { names, ty } => {
                let sort = self.lowering().resolve(ty);
                for n in names {
                    let t = self.fresh_const(n, sort.clone());
                    f.locals.insert(n.clone(), t);
                }
            }
            StmtKind::Assign { lhs, rhs } => {
                let v = self.eval(rhs, f);
                self.assign(f, &lhs.name, lhs.primed, v);
            }
            StmtKind::Havoc(n) => {
                let sort = match f.locals.get(n) {
                    Some(t) => t.sort.clone(),
                    None => self.x.module.var(n).expect("havoc target").sort.clone(),
                };
                let t = self.fresh_const(n, sort);
                let is_local = f.locals.contains_key(n);
                self.assign(f, n, !is_local && self.mode == Mode::Next, t);
            }
            StmtKind::Assume(e) => {
                let t = self.eval(e, f);
                self.assumptions.push(term::guarded(pc, t));
            }
            StmtKind::Assert { label, expr } => {
                let t = self.eval(expr, f);
                let base = label.clone().unwrap_or_else(|| format!("assert_l{}", s.span.line));
                let kind = if label.as_deref().is_some_and(is_loop_label) {
                    ObligationKind::LoopInvariant
                } else {
                    ObligationKind::Assert
                };
                let mut spec = format!("{}{base}", self.label_prefix);
                let taken = |n: &str| self.asserts.iter().any(|a| a.spec == n);
                if taken(&spec) {
                    let mut i = 2;
                    while taken(&format!("{spec}_{i}")) {
                        i += 1;
                    }
                    spec = format!("{spec}_{i}");
                }
                self.asserts.push(InlineAssert {
                    spec,
                    kind,
                    goal: term::guarded(pc, t),
                    assumed: self.assumptions.len(),
                });
            }
            StmtKind::If { cond, then_branch, else_branch } => {
                let c = self.eval(cond, f);
                let mut tf = f.clone();
                let mut ef = f.clone();
                let tpc = conj(pc, c.clone());
                let epc = conj(pc, term::not(c.clone()));
                self.block(then_branch, &mut tf, &tpc);
                self.block(else_branch, &mut ef, &epc);
                *f = self.merge(f, &c, tf, ef);
            }
            StmtKind::Case(arms) => {
                // Elaboration lowers case, but unlowered modules still execute.
                let mut nested: Vec<Stmt> = Vec::new();
                for (g, body) in arms.iter().rev() {
                    nested = vec![Stmt::new(
                        StmtKind::If { cond: g.clone(), then_branch: body.clone(), else_branch: nested },
                        s.span.clone(),
                    )];
                }
                self.block(&nested, f, pc);
            }
            StmtKind::For { .. } | StmtKind::While { .. } | StmtKind::Call { .. } | StmtKind::NextInstance(_) => {
                panic!("symbolic execution needs an elaborated module (found {:?})", s.kind)
            }
        }
    }

    fn merge(&self, before: &Frame, c: &Term, t: Frame, e: Frame) -> Frame {
        let pick = |a: &Term, b: &Term| if Arc::ptr_eq(a, b) { a.clone() } else { term::ite(c.clone(), a.clone(), b.clone()) };
        let mut out = before.clone();
        for k in before.env.keys() {
            out.env.insert(k.clone(), pick(&t.env[k], &e.env[k]));
        }
        for k in before.locals.keys() {
            out.locals.insert(k.clone(), pick(&t.locals[k], &e.locals[k]));
        }
        let keys: std::collections::BTreeSet<&String> = t.next.keys().chain(e.next.keys()).collect();
        for k in keys {
            let frame_value = || before.next.get(k).cloned().unwrap_or_else(|| before.env[k].clone());
            let a = t.next.get(k).cloned().unwrap_or_else(frame_value);
            let b = e.next.get(k).cloned().unwrap_or_else(frame_value);
            out.next.insert(k.clone(), pick(&a, &b));
        }
        out
    }
}

fn conj(pc: &Term, c: Term) -> Term {
    if term::is_true(pc) {
        c
    } else {
        term::and(vec![pc.clone(), c])
    }
}

