//! Direct AST interpreter. It shares nothing with the symbolic engine
//! except the arithmetic helpers in `value`, which makes it usable as a
//! reference for differential testing and for replaying counterexamples.
//!
//! Unconstrained values are resolved deterministically: state variables at
//! step 0 and inputs at every step come from the caller, everything else
//! (locals, havoc targets) takes the sort default.

use std::collections::BTreeMap;

use num_traits::Zero;

use crate::ast::*;
use crate::elab::typecheck::{resolve_type, typecheck, ModuleEnv};
use crate::elab::FunKind;
use crate::term::Sort;
use crate::value::{self, mask, EvalError, Value};

/// Iteration bound for `while` loops.
const MAX_LOOP_TRIPS: u32 = 100_000;

pub type State = BTreeMap<String, Value>;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ConcreteTrace {
    /// `states[i]` holds every variable (inputs included) at step `i`.
    pub states: Vec<State>,
    /// `(step, label)` of each assertion that evaluated to false.
    pub failed_asserts: Vec<(u32, String)>,
    /// Steps at which some assumption evaluated to false.
    pub failed_assumes: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum InterpError {
    #[error("module does not typecheck: {0}")]
    IllTyped(String),
    #[error("step {step}: {err}")]
    Eval { step: u32, err: EvalError },
}

/// Values for functions the interpreter cannot evaluate itself
/// (uninterpreted, synthesized and oracle functions).
pub type FunInterp<'a> = dyn Fn(&str, &[Value]) -> Result<Value, EvalError> + 'a;

/// Runs `k` transitions of the single flat module `m`. `inputs[i]` supplies
/// input values at step `i`; `inputs[0]` also supplies initial values of
/// state variables the init block leaves unassigned.
pub fn concrete_interpret(
    m: &AstModule,
    inputs: &[State],
    k: u32,
    funs: &FunInterp,
) -> Result<ConcreteTrace, InterpError> {
    let it = Interp::new(m, funs)?;
    it.run(inputs, k)
}

pub struct Interp<'a> {
    env: ModuleEnv,
    init: Vec<Stmt>,
    next: Vec<Stmt>,
    funs: &'a FunInterp<'a>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mode {
    Seq,
    Next,
}

struct Frame {
    /// Readable state: the current state in sequential mode, the pre-state in next mode.
    env: State,
    next: State,
    locals: State,
}

struct Exec<'i, 'a> {
    it: &'i Interp<'a>,
    mode: Mode,
    step: u32,
    trace: &'i mut ConcreteTrace,
}

type R<T> = Result<T, EvalError>;

impl<'a> Interp<'a> {
    pub fn new(m: &AstModule, funs: &'a FunInterp<'a>) -> Result<Self, InterpError> {
        let info = typecheck(std::slice::from_ref(m))
            .map_err(|ds| InterpError::IllTyped(ds.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; ")))?;
        let env = info.envs[&m.name].clone();
        let mut init = Vec::new();
        let mut next = Vec::new();
        for d in &m.decls {
            match &d.kind {
                DeclKind::Init(b) => init = b.clone(),
                DeclKind::Next(b) => next = b.clone(),
                _ => {}
            }
        }
        Ok(Interp { env, init, next, funs })
    }

    fn sort(&self, t: &Type) -> Sort {
        resolve_type(&self.env.types, t).expect("resolved by typecheck")
    }

    pub fn run(&self, inputs: &[State], k: u32) -> Result<ConcreteTrace, InterpError> {
        let mut trace = ConcreteTrace::default();
        let given = |s: u32, n: &str, sort: &Sort| {
            inputs.get(s as usize).and_then(|m| m.get(n)).cloned().unwrap_or_else(|| Value::default_of(sort))
        };
        let mut s0 = State::new();
        for n in &self.env.var_order {
            let (_, sort) = &self.env.vars[n];
            s0.insert(n.clone(), given(0, n, sort));
        }
        let mut frame = Frame { env: s0, next: State::new(), locals: State::new() };
        let mut ex = Exec { it: self, mode: Mode::Seq, step: 0, trace: &mut trace };
        ex.block(&self.init, &mut frame).map_err(|err| InterpError::Eval { step: 0, err })?;
        let mut cur = frame.env;
        trace.states.push(cur.clone());
        for step in 1..=k {
            let mut frame = Frame { env: cur.clone(), next: State::new(), locals: State::new() };
            let mut ex = Exec { it: self, mode: Mode::Next, step, trace: &mut trace };
            ex.block(&self.next, &mut frame).map_err(|err| InterpError::Eval { step, err })?;
            for n in &self.env.var_order {
                let (kind, sort) = &self.env.vars[n];
                if *kind == VarKind::Input {
                    cur.insert(n.clone(), given(step, n, sort));
                } else if let Some(v) = frame.next.remove(n) {
                    cur.insert(n.clone(), v);
                }
            }
            trace.states.push(cur.clone());
        }
        Ok(trace)
    }

    /// Evaluates a one-state spec.
    pub fn eval_spec(&self, e: &Expr, state: &State) -> R<bool> {
        self.eval_hyper(e, std::slice::from_ref(state), Some(state))
    }

    /// Evaluates a spec whose `x.i` refers to `states[i - 1]`; plain names
    /// resolve in `plain` when given.
    pub fn eval_hyper(&self, e: &Expr, states: &[State], plain: Option<&State>) -> R<bool> {
        let empty = State::new();
        let mut trace = ConcreteTrace::default();
        let ex = Exec { it: self, mode: Mode::Seq, step: 0, trace: &mut trace };
        let cx = Cx { env: plain.unwrap_or(&empty), locals: &empty, traces: states };
        ex.expr(e, &cx)?.as_bool()
    }
}

struct Cx<'c> {
    env: &'c State,
    locals: &'c State,
    traces: &'c [State],
}

impl Exec<'_, '_> {
    fn block(&mut self, ss: &[Stmt], f: &mut Frame) -> R<()> {
        for s in ss {
            self.stmt(s, f)?;
        }
        Ok(())
    }

    fn eval(&self, e: &Expr, f: &Frame) -> R<Value> {
        self.expr(e, &Cx { env: &f.env, locals: &f.locals, traces: &[] })
    }

    fn write(&self, f: &mut Frame, name: &str, primed: bool, v: Value) {
        if !primed && f.locals.contains_key(name) {
            f.locals.insert(name.to_string(), v);
        } else if self.mode == Mode::Next {
            f.next.insert(name.to_string(), v);
        } else {
            f.env.insert(name.to_string(), v);
        }
    }

    fn stmt(&mut self, s: &Stmt, f: &mut Frame) -> R<()> {
        match &s.kind {
            StmtKind::LocalVar { names, ty } => {
                let d = Value::default_of(&self.it.sort(ty));
                for n in names {
                    f.locals.insert(n.clone(), d.clone());
                }
            }
            StmtKind::Assign { lhs, rhs } => {
                let v = self.eval(rhs, f)?;
                self.write(f, &lhs.name, lhs.primed, v);
            }
            StmtKind::Havoc(n) => {
                let v = match f.locals.get(n) {
                    Some(v) => Value::default_of(&v.sort()),
                    None => Value::default_of(&self.it.env.vars[n].1),
                };
                let local = f.locals.contains_key(n);
                self.write(f, n, !local && self.mode == Mode::Next, v);
            }
            StmtKind::Assume(e) => {
                if !self.eval(e, f)?.as_bool()? {
                    self.trace.failed_assumes.push(self.step);
                }
            }
            StmtKind::Assert { label, expr } => {
                if !self.eval(expr, f)?.as_bool()? {
                    let l = label.clone().unwrap_or_else(|| format!("assert_l{}", s.span.line));
                    self.trace.failed_asserts.push((self.step, l));
                }
            }
            StmtKind::If { cond, then_branch, else_branch } => {
                let b = if self.eval(cond, f)?.as_bool()? { then_branch } else { else_branch };
                self.scoped(b, f)?;
            }
            StmtKind::Case(arms) => {
                for (g, body) in arms {
                    if self.eval(g, f)?.as_bool()? {
                        return self.scoped(body, f);
                    }
                }
            }
            StmtKind::For { var, lo, hi, body } => {
                let lo = self.eval(lo, f)?.as_int()?.clone();
                let hi = self.eval(hi, f)?.as_int()?.clone();
                let saved = f.locals.get(var).cloned();
                let mut i = lo;
                while i < hi {
                    f.locals.insert(var.clone(), Value::Int(i.clone()));
                    self.scoped(body, f)?;
                    i += 1;
                }
                match saved {
                    Some(v) => f.locals.insert(var.clone(), v),
                    None => f.locals.remove(var),
                };
            }
            StmtKind::While { cond, invariants, body } => {
                let mut trips = 0;
                loop {
                    for inv in invariants {
                        if !self.eval(inv, f)?.as_bool()? {
                            self.trace.failed_asserts.push((self.step, format!("loop_invariant_l{}", s.span.line)));
                        }
                    }
                    if !self.eval(cond, f)?.as_bool()? {
                        break;
                    }
                    trips += 1;
                    if trips > MAX_LOOP_TRIPS {
                        return Err(EvalError::Unsupported(format!("while loop at line {} did not terminate", s.span.line)));
                    }
                    self.scoped(body, f)?;
                }
            }
            StmtKind::Call { lhs, proc_name, args } => self.call(lhs, proc_name, args, f)?,
            StmtKind::NextInstance(i) => {
                return Err(EvalError::Unsupported(format!("next({i}) needs a flattened module")));
            }
        }
        Ok(())
    }

    /// Runs a nested block; locals declared inside it do not escape.
    fn scoped(&mut self, ss: &[Stmt], f: &mut Frame) -> R<()> {
        let outer: Vec<String> = f.locals.keys().cloned().collect();
        self.block(ss, f)?;
        f.locals.retain(|k, _| outer.contains(k));
        Ok(())
    }

    fn call(&mut self, lhs: &[Lhs], name: &str, args: &[Expr], f: &mut Frame) -> R<()> {
        let p = self.it.env.procs.get(name).ok_or_else(|| EvalError::Unbound(name.to_string()))?.clone();
        let Some(body) = &p.body else {
            return Err(EvalError::Unsupported(format!("call of contract-only procedure `{name}`")));
        };
        let mut locals = State::new();
        for (q, a) in p.params.iter().zip(args) {
            locals.insert(q.name.clone(), self.eval(a, f)?);
        }
        for q in &p.returns {
            locals.insert(q.name.clone(), Value::default_of(&self.it.sort(&q.ty)));
        }
        // Procedure bodies update state sequentially on a private view.
        let mut inner = Frame { env: f.env.clone(), next: State::new(), locals };
        for r in &p.requires {
            if !self.eval(r, &inner)?.as_bool()? {
                self.trace.failed_asserts.push((self.step, format!("{name}_requires")));
            }
        }
        let mode = std::mem::replace(&mut self.mode, Mode::Seq);
        let res = self.block(body, &mut inner);
        self.mode = mode;
        res?;
        for m in &p.modifies {
            let v = inner.env[m].clone();
            self.write(f, m, self.mode == Mode::Next, v);
        }
        for (l, q) in lhs.iter().zip(&p.returns) {
            let v = inner.locals[&q.name].clone();
            self.write(f, &l.name, l.primed, v);
        }
        Ok(())
    }

    fn lookup(&self, n: &str, cx: &Cx) -> R<Value> {
        if let Some(v) = cx.locals.get(n).or_else(|| cx.env.get(n)) {
            return Ok(v.clone());
        }
        if let Some((def, idx)) = self.it.env.variants.get(n) {
            return Ok(Value::Enum { def: def.clone(), idx: *idx });
        }
        Err(EvalError::Unbound(n.to_string()))
    }

    fn expr(&self, e: &Expr, cx: &Cx) -> R<Value> {
        Ok(match &e.kind {
            ExprKind::Bool(b) => Value::Bool(*b),
            ExprKind::Int(i) => Value::Int(i.clone()),
            ExprKind::Real(r) => Value::Real(r.clone()),
            ExprKind::BitVec { value, width } => value::bv(*value, *width),
            ExprKind::Ident(n) => self.lookup(n, cx)?,
            ExprKind::Primed(n) | ExprKind::Old(n) => {
                return Err(EvalError::Unsupported(format!("`{n}` outside its context")))
            }
            ExprKind::TraceIndexed(n, i) => {
                let st = cx.traces.get(*i as usize - 1).ok_or_else(|| EvalError::Unbound(format!("{n}.{i}")))?;
                st.get(n).cloned().ok_or_else(|| EvalError::Unbound(format!("{n}.{i}")))?
            }
            ExprKind::Unary(op, a) => {
                let v = self.expr(a, cx)?;
                match (op, v) {
                    (UnOp::Not, Value::Bool(b)) => Value::Bool(!b),
                    (UnOp::Neg, Value::Int(i)) => Value::Int(-i),
                    (UnOp::Neg, Value::Real(r)) => Value::Real(-r),
                    (UnOp::Neg, Value::BitVec { value, width }) => {
                        Value::BitVec { value: value::bv_neg(&value, width), width }
                    }
                    (UnOp::BvNot, Value::BitVec { value, width }) => Value::BitVec { value: value ^ mask(width), width },
                    _ => return Err(EvalError::SortMismatch("unary operator")),
                }
            }
            ExprKind::Binary(op, l, r) => {
                // Short-circuit the connectives so guarded partial operations stay defined.
                match op {
                    BinOp::And => {
                        return Ok(Value::Bool(self.expr(l, cx)?.as_bool()? && self.expr(r, cx)?.as_bool()?))
                    }
                    BinOp::Or => {
                        return Ok(Value::Bool(self.expr(l, cx)?.as_bool()? || self.expr(r, cx)?.as_bool()?))
                    }
                    BinOp::Implies => {
                        return Ok(Value::Bool(!self.expr(l, cx)?.as_bool()? || self.expr(r, cx)?.as_bool()?))
                    }
                    _ => {}
                }
                let a = self.expr(l, cx)?;
                let b = self.expr(r, cx)?;
                binary(*op, a, b)?
            }
            ExprKind::Ite(c, t, f) => {
                if self.expr(c, cx)?.as_bool()? {
                    self.expr(t, cx)?
                } else {
                    self.expr(f, cx)?
                }
            }
            ExprKind::Apply(name, args) => {
                let vals = args.iter().map(|a| self.expr(a, cx)).collect::<R<Vec<_>>>()?;
                let sig = self.it.env.funs.get(name).ok_or_else(|| EvalError::Unbound(name.clone()))?;
                match &sig.kind {
                    FunKind::Define(body) => {
                        let locals: State = sig.params.iter().map(|(n, _)| n.clone()).zip(vals).collect();
                        let empty = State::new();
                        self.expr(body, &Cx { env: &empty, locals: &locals, traces: &[] })?
                    }
                    _ => (self.it.funs)(name, &vals)?,
                }
            }
            ExprKind::Select(a, i) => match self.expr(a, cx)? {
                Value::Array(arr) => arr.select(&self.expr(i, cx)?),
                _ => return Err(EvalError::SortMismatch("select")),
            },
            ExprKind::Store(a, i, v) => match self.expr(a, cx)? {
                Value::Array(arr) => Value::Array(arr.store(self.expr(i, cx)?, self.expr(v, cx)?)),
                _ => return Err(EvalError::SortMismatch("store")),
            },
            ExprKind::Extract { expr, hi, lo } => match self.expr(expr, cx)? {
                Value::BitVec { value, .. } => value::bv(value >> *lo, hi - lo + 1),
                _ => return Err(EvalError::SortMismatch("extract")),
            },
            ExprKind::Quant { kind, var, ty, group, body } => {
                let domain: Vec<Value> = match group {
                    Some(g) => {
                        let (_, elems) = &self.it.env.groups[g];
                        elems.iter().map(|x| self.expr(x, cx)).collect::<R<_>>()?
                    }
                    None => self.it.sort(ty).finite_values().ok_or_else(|| {
                        EvalError::Unsupported(format!("quantifier over the infinite type of `{var}`"))
                    })?,
                };
                let universal = kind.is_universal();
                let mut locals = cx.locals.clone();
                for v in domain {
                    locals.insert(var.clone(), v);
                    let b = self.expr(body, &Cx { env: cx.env, locals: &locals, traces: cx.traces })?.as_bool()?;
                    if b != universal {
                        return Ok(Value::Bool(!universal));
                    }
                }
                Value::Bool(universal)
            }
        })
    }
}

fn binary(op: BinOp, a: Value, b: Value) -> R<Value> {
    use Value::*;
    let bvop = |f: &dyn Fn(&num_bigint::BigUint, &num_bigint::BigUint, u32) -> num_bigint::BigUint| match (&a, &b) {
        (BitVec { value: x, width }, BitVec { value: y, .. }) => Ok(value::bv(f(x, y, *width), *width)),
        _ => Err(EvalError::SortMismatch("bitvector operator")),
    };
    Ok(match op {
        BinOp::Eq => Bool(a == b),
        BinOp::Ne => Bool(a != b),
        BinOp::Iff => Bool(a.as_bool()? == b.as_bool()?),
        BinOp::And | BinOp::Or | BinOp::Implies => unreachable!("connectives short-circuit"),
        BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
            let ord = match (&a, &b) {
                (Int(x), Int(y)) => x.cmp(y),
                (Real(x), Real(y)) => x.cmp(y),
                (BitVec { value: x, .. }, BitVec { value: y, .. }) => x.cmp(y),
                _ => return Err(EvalError::SortMismatch("comparison")),
            };
            Bool(match op {
                BinOp::Lt => ord.is_lt(),
                BinOp::Le => ord.is_le(),
                BinOp::Gt => ord.is_gt(),
                _ => ord.is_ge(),
            })
        }
        BinOp::Add | BinOp::Sub | BinOp::Mul => match (&a, &b) {
            (Int(x), Int(y)) => Int(match op {
                BinOp::Add => x + y,
                BinOp::Sub => x - y,
                _ => x * y,
            }),
            (Real(x), Real(y)) => Real(match op {
                BinOp::Add => x + y,
                BinOp::Sub => x - y,
                _ => x * y,
            }),
            _ => bvop(&|x, y, w| match op {
                BinOp::Add => x + y,
                BinOp::Sub => (x + (mask(w) + 1u32) - y) & mask(w),
                _ => x * y,
            })?,
        },
        BinOp::Div => match (&a, &b) {
            (Real(_), Real(y)) if y.is_zero() => return Err(EvalError::DivisionByZero),
            (Real(x), Real(y)) => Real(x / y),
            _ => bvop(&value::bv_udiv)?,
        },
        BinOp::IntDiv => match (&a, &b) {
            (Int(x), Int(y)) => Int(value::int_div(x, y)?),
            _ => bvop(&value::bv_udiv)?,
        },
        BinOp::Mod => match (&a, &b) {
            (Int(x), Int(y)) => Int(value::int_mod(x, y)?),
            _ => bvop(&|x, y, _| value::bv_urem(x, y))?,
        },
        BinOp::BvAnd => bvop(&|x, y, _| x & y)?,
        BinOp::BvOr => bvop(&|x, y, _| x | y)?,
        BinOp::BvXor => bvop(&|x, y, _| x ^ y)?,
        BinOp::Concat => match (&a, &b) {
            (BitVec { value: x, width: wx }, BitVec { value: y, width: wy }) => {
                value::bv((x << *wy) | y, wx + wy)
            }
            _ => return Err(EvalError::SortMismatch("concat")),
        },
    })
}

/// Convenience for callers that have no functions to interpret.
pub fn no_functions(name: &str, _: &[Value]) -> Result<Value, EvalError> {
    Err(EvalError::Unsupported(format!("function `{name}`")))
}
