//! Solver-level terms shared by symbolic states, verification conditions and
//! emitted scripts.
//!
//! Terms are immutable reference-counted trees. Subterms are freely shared, so
//! traversals that may revisit shared nodes memoize on node identity.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::{self, Write};
use std::sync::Arc;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::value::{self, EvalError, Value};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EnumDef {
    pub name: String,
    pub variants: Vec<String>,
}

impl EnumDef {
    pub fn index_of(&self, variant: &str) -> Option<usize> {
        self.variants.iter().position(|v| v == variant)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sort {
    Bool,
    Int,
    Real,
    BitVec(u32),
    Array(Box<Sort>, Box<Sort>),
    Uninterp(Arc<str>),
    Enum(Arc<EnumDef>),
}

impl Sort {
    pub fn is_numeric(&self) -> bool {
        matches!(self, Sort::Int | Sort::Real | Sort::BitVec(_))
    }

    /// Sorts with finitely many values small enough to enumerate.
    pub fn finite_values(&self) -> Option<Vec<Value>> {
        match self {
            Sort::Bool => Some(vec![Value::Bool(false), Value::Bool(true)]),
            Sort::Enum(def) => Some((0..def.variants.len()).map(|idx| Value::Enum { def: def.clone(), idx }).collect()),
            Sort::BitVec(w) if *w <= 8 => Some((0u32..(1 << w)).map(|v| value::bv(v, *w)).collect()),
            _ => None,
        }
    }
}

/// SMT-LIB sort syntax.
impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sort::Bool => write!(f, "Bool"),
            Sort::Int => write!(f, "Int"),
            Sort::Real => write!(f, "Real"),
            Sort::BitVec(w) => write!(f, "(_ BitVec {w})"),
            Sort::Array(i, e) => write!(f, "(Array {i} {e})"),
            Sort::Uninterp(n) => write!(f, "{}", symbol(n)),
            Sort::Enum(d) => write!(f, "{}", symbol(&d.name)),
        }
    }
}

/// A state-variable value at one unrolling step. Field order gives the
/// canonical declaration order: by step, then trace, then name.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SymConst {
    pub step: u32,
    /// 1 outside self-composed modules.
    pub trace: u32,
    pub name: Arc<str>,
}

impl SymConst {
    pub fn new(name: impl Into<Arc<str>>, step: u32, trace: u32) -> Self {
        SymConst { step, trace, name: name.into() }
    }

    /// Solver-level name; always emitted bar-quoted.
    pub fn smt_name(&self) -> String {
        format!("{}@{}", self.name, self.step)
    }
}

impl fmt::Display for SymConst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{}@{}|", self.name, self.step)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Op {
    Not,
    And,
    Or,
    Implies,
    Eq,
    Distinct,
    Ite,
    Lt,
    Le,
    Gt,
    Ge,
    Add,
    Sub,
    Mul,
    Neg,
    RealDiv,
    IntDiv,
    Mod,
    BvAdd,
    BvSub,
    BvMul,
    BvNeg,
    BvUdiv,
    BvUrem,
    BvAnd,
    BvOr,
    BvXor,
    BvNot,
    BvUlt,
    BvUle,
    BvUgt,
    BvUge,
    Concat,
    Extract(u32, u32),
    Select,
    Store,
}

impl Op {
    pub fn smt_name(self) -> String {
        match self {
            Op::Not => "not",
            Op::And => "and",
            Op::Or => "or",
            Op::Implies => "=>",
            Op::Eq => "=",
            Op::Distinct => "distinct",
            Op::Ite => "ite",
            Op::Lt => "<",
            Op::Le => "<=",
            Op::Gt => ">",
            Op::Ge => ">=",
            Op::Add => "+",
            Op::Sub | Op::Neg => "-",
            Op::Mul => "*",
            Op::RealDiv => "/",
            Op::IntDiv => "div",
            Op::Mod => "mod",
            Op::BvAdd => "bvadd",
            Op::BvSub => "bvsub",
            Op::BvMul => "bvmul",
            Op::BvNeg => "bvneg",
            Op::BvUdiv => "bvudiv",
            Op::BvUrem => "bvurem",
            Op::BvAnd => "bvand",
            Op::BvOr => "bvor",
            Op::BvXor => "bvxor",
            Op::BvNot => "bvnot",
            Op::BvUlt => "bvult",
            Op::BvUle => "bvule",
            Op::BvUgt => "bvugt",
            Op::BvUge => "bvuge",
            Op::Concat => "concat",
            Op::Extract(hi, lo) => return format!("(_ extract {hi} {lo})"),
            Op::Select => "select",
            Op::Store => "store",
        }
        .to_string()
    }

    /// Inverse of [`Op::smt_name`] for ops whose arity disambiguates them.
    pub fn from_smt(name: &str, arity: usize) -> Option<Op> {
        Some(match name {
            "not" => Op::Not,
            "and" => Op::And,
            "or" => Op::Or,
            "=>" => Op::Implies,
            "=" => Op::Eq,
            "distinct" => Op::Distinct,
            "ite" => Op::Ite,
            "<" => Op::Lt,
            "<=" => Op::Le,
            ">" => Op::Gt,
            ">=" => Op::Ge,
            "+" => Op::Add,
            "-" if arity == 1 => Op::Neg,
            "-" => Op::Sub,
            "*" => Op::Mul,
            "/" => Op::RealDiv,
            "div" => Op::IntDiv,
            "mod" => Op::Mod,
            "bvadd" => Op::BvAdd,
            "bvsub" => Op::BvSub,
            "bvmul" => Op::BvMul,
            "bvneg" => Op::BvNeg,
            "bvudiv" => Op::BvUdiv,
            "bvurem" => Op::BvUrem,
            "bvand" => Op::BvAnd,
            "bvor" => Op::BvOr,
            "bvxor" => Op::BvXor,
            "bvnot" => Op::BvNot,
            "bvult" => Op::BvUlt,
            "bvule" => Op::BvUle,
            "bvugt" => Op::BvUgt,
            "bvuge" => Op::BvUge,
            "concat" => Op::Concat,
            "select" => Op::Select,
            "store" => Op::Store,
            _ => return None,
        })
    }
}

#[derive(Debug, PartialEq, Eq, Hash)]
pub struct TermNode {
    pub kind: TermKind,
    pub sort: Sort,
}

#[derive(Debug, PartialEq, Eq, Hash)]
pub enum TermKind {
    Lit(Value),
    Const(SymConst),
    /// Bound variable of a quantifier or function body.
    Var(Arc<str>),
    App(Op, Vec<Term>),
    /// Application of an uninterpreted, oracle or synthesis function.
    Apply(Arc<str>, Vec<Term>),
    Quant { forall: bool, var: Arc<str>, var_sort: Sort, body: Term },
}

pub type Term = Arc<TermNode>;

fn node(kind: TermKind, sort: Sort) -> Term {
    Arc::new(TermNode { kind, sort })
}

pub fn lit(v: Value) -> Term {
    let sort = v.sort();
    node(TermKind::Lit(v), sort)
}

pub fn bool_lit(b: bool) -> Term {
    lit(Value::Bool(b))
}

pub fn int_lit(v: impl Into<BigInt>) -> Term {
    lit(Value::Int(v.into()))
}

pub fn konst(c: SymConst, sort: Sort) -> Term {
    node(TermKind::Const(c), sort)
}

pub fn var(name: impl Into<Arc<str>>, sort: Sort) -> Term {
    node(TermKind::Var(name.into()), sort)
}

pub fn apply(f: impl Into<Arc<str>>, args: Vec<Term>, ret: Sort) -> Term {
    node(TermKind::Apply(f.into(), args), ret)
}

pub fn quant(forall: bool, var: impl Into<Arc<str>>, var_sort: Sort, body: Term) -> Term {
    node(TermKind::Quant { forall, var: var.into(), var_sort, body }, Sort::Bool)
}

/// Builds an operator application. Arguments are assumed well-sorted.
pub fn app(op: Op, args: Vec<Term>) -> Term {
    let sort = match op {
        Op::Not
        | Op::And
        | Op::Or
        | Op::Implies
        | Op::Eq
        | Op::Distinct
        | Op::Lt
        | Op::Le
        | Op::Gt
        | Op::Ge
        | Op::BvUlt
        | Op::BvUle
        | Op::BvUgt
        | Op::BvUge => Sort::Bool,
        Op::Ite => args[1].sort.clone(),
        Op::Concat => match (&args[0].sort, &args[1].sort) {
            (Sort::BitVec(a), Sort::BitVec(b)) => Sort::BitVec(a + b),
            _ => panic!("concat of non-bitvectors"),
        },
        Op::Extract(hi, lo) => Sort::BitVec(hi - lo + 1),
        Op::Select => match &args[0].sort {
            Sort::Array(_, e) => (**e).clone(),
            _ => panic!("select on non-array"),
        },
        _ => args[0].sort.clone(),
    };
    node(TermKind::App(op, args), sort)
}

pub fn not(t: Term) -> Term {
    app(Op::Not, vec![t])
}

pub fn and(mut ts: Vec<Term>) -> Term {
    match ts.len() {
        0 => bool_lit(true),
        1 => ts.pop().unwrap(),
        _ => app(Op::And, ts),
    }
}

pub fn or(mut ts: Vec<Term>) -> Term {
    match ts.len() {
        0 => bool_lit(false),
        1 => ts.pop().unwrap(),
        _ => app(Op::Or, ts),
    }
}

pub fn implies(a: Term, b: Term) -> Term {
    app(Op::Implies, vec![a, b])
}

pub fn eq(a: Term, b: Term) -> Term {
    app(Op::Eq, vec![a, b])
}

pub fn ite(c: Term, t: Term, e: Term) -> Term {
    app(Op::Ite, vec![c, t, e])
}

/// `pc => t`, omitting the guard when it is literally true.
pub fn guarded(pc: &Term, t: Term) -> Term {
    if is_true(pc) {
        t
    } else {
        implies(pc.clone(), t)
    }
}

pub fn is_true(t: &Term) -> bool {
    matches!(t.kind, TermKind::Lit(Value::Bool(true)))
}

const RESERVED: &[&str] = &[
    "_", "!", "as", "let", "exists", "forall", "match", "par", "NUMERAL", "DECIMAL", "STRING", "assert",
    "check-sat", "declare-const", "declare-fun", "define-fun", "exit", "get-model", "set-logic", "set-option",
    "true", "false", "not", "and", "or", "xor", "ite", "distinct", "select", "store", "div", "mod", "abs", "Bool",
    "Int", "Real", "Array", "BitVec", "concat", "extract", "continued-execution", "error", "immediate-exit",
    "incomplete", "logic", "memout", "sat", "success", "theory", "unknown", "unsupported", "unsat",
];

/// Symbol as SMT-LIB text: bare when it is a plain identifier that cannot
/// collide with solver syntax, `|...|` otherwise.
pub fn symbol(name: &str) -> String {
    let plain = name.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !RESERVED.contains(&name);
    if plain {
        name.to_string()
    } else {
        format!("|{name}|")
    }
}

pub fn unescape_symbol(s: &str) -> &str {
    s.strip_prefix('|').and_then(|r| r.strip_suffix('|')).unwrap_or(s)
}

impl TermNode {
    /// SMT-LIB text of this term.
    pub fn to_smt(&self) -> String {
        let mut out = String::new();
        self.write_smt_named(&mut out, &HashMap::new());
        out
    }

    /// Writes SMT-LIB text, printing nodes found in `names` as the given
    /// symbol instead of their structure.
    pub fn write_smt_named(&self, out: &mut String, names: &HashMap<*const TermNode, String>) {
        if let Some(n) = names.get(&(self as *const TermNode)) {
            out.push_str(n);
            return;
        }
        match &self.kind {
            TermKind::Lit(v) => out.push_str(&v.to_smt()),
            TermKind::Const(c) => {
                let _ = write!(out, "{c}");
            }
            TermKind::Var(n) => out.push_str(&symbol(n)),
            TermKind::App(op, args) => {
                let _ = write!(out, "({}", op.smt_name());
                for a in args {
                    out.push(' ');
                    a.write_smt_named(out, names);
                }
                out.push(')');
            }
            TermKind::Apply(f, args) if args.is_empty() => out.push_str(&symbol(f)),
            TermKind::Apply(f, args) => {
                let _ = write!(out, "({}", symbol(f));
                for a in args {
                    out.push(' ');
                    a.write_smt_named(out, names);
                }
                out.push(')');
            }
            TermKind::Quant { forall, var, var_sort, body } => {
                let _ = write!(
                    out,
                    "({} (({} {})) ",
                    if *forall { "forall" } else { "exists" },
                    symbol(var),
                    var_sort
                );
                body.write_smt_named(out, names);
                out.push(')');
            }
        }
    }
}

impl fmt::Display for TermNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_smt())
    }
}

/// Visits every distinct node of the DAG rooted at `roots` once, parents first.
pub fn visit_dag<'a>(roots: impl IntoIterator<Item = &'a Term>, f: &mut dyn FnMut(&Term)) {
    let mut seen = std::collections::HashSet::new();
    let mut stack: Vec<&Term> = roots.into_iter().collect();
    stack.reverse();
    while let Some(t) = stack.pop() {
        if !seen.insert(Arc::as_ptr(t)) {
            continue;
        }
        f(t);
        match &t.kind {
            TermKind::App(_, args) | TermKind::Apply(_, args) => stack.extend(args.iter().rev()),
            TermKind::Quant { body, .. } => stack.push(body),
            _ => {}
        }
    }
}

/// Free symbols of a set of terms, in canonical order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Symbols {
    pub consts: BTreeMap<SymConst, Sort>,
    pub funs: BTreeMap<Arc<str>, (Vec<Sort>, Sort)>,
    pub enums: BTreeSet<Arc<EnumDef>>,
    pub uninterp: BTreeSet<Arc<str>>,
}

impl Symbols {
    pub fn collect<'a>(roots: impl IntoIterator<Item = &'a Term>) -> Symbols {
        let mut s = Symbols::default();
        visit_dag(roots, &mut |t| {
            s.note_sort(&t.sort);
            match &t.kind {
                TermKind::Const(c) => {
                    s.consts.insert(c.clone(), t.sort.clone());
                }
                TermKind::Apply(f, args) => {
                    s.funs.insert(f.clone(), (args.iter().map(|a| a.sort.clone()).collect(), t.sort.clone()));
                }
                TermKind::Quant { var_sort, .. } => s.note_sort(var_sort),
                _ => {}
            }
        });
        s
    }

    fn note_sort(&mut self, sort: &Sort) {
        match sort {
            Sort::Enum(d) => {
                self.enums.insert(d.clone());
            }
            Sort::Uninterp(n) => {
                self.uninterp.insert(n.clone());
            }
            Sort::Array(i, e) => {
                self.note_sort(i);
                self.note_sort(e);
            }
            _ => {}
        }
    }
}

/// Rebuilds `t` bottom-up. `f` sees each node after its children were
/// rebuilt and may return a replacement; `None` keeps the rebuilt node.
/// Shared subterms are rewritten once.
pub fn rewrite(t: &Term, f: &mut dyn FnMut(&Term) -> Option<Term>) -> Term {
    let mut memo: HashMap<*const TermNode, Term> = HashMap::new();
    rewrite_memo(t, f, &mut memo)
}

fn rewrite_memo(t: &Term, f: &mut dyn FnMut(&Term) -> Option<Term>, memo: &mut HashMap<*const TermNode, Term>) -> Term {
    if let Some(r) = memo.get(&Arc::as_ptr(t)) {
        return r.clone();
    }
    let rebuilt = match &t.kind {
        TermKind::App(op, args) => {
            let new: Vec<Term> = args.iter().map(|a| rewrite_memo(a, f, memo)).collect();
            if new.iter().zip(args).all(|(a, b)| Arc::ptr_eq(a, b)) {
                t.clone()
            } else {
                node(TermKind::App(*op, new), t.sort.clone())
            }
        }
        TermKind::Apply(name, args) => {
            let new: Vec<Term> = args.iter().map(|a| rewrite_memo(a, f, memo)).collect();
            if new.iter().zip(args).all(|(a, b)| Arc::ptr_eq(a, b)) {
                t.clone()
            } else {
                node(TermKind::Apply(name.clone(), new), t.sort.clone())
            }
        }
        TermKind::Quant { forall, var, var_sort, body } => {
            let nb = rewrite_memo(body, f, memo);
            if Arc::ptr_eq(&nb, body) {
                t.clone()
            } else {
                quant(*forall, var.clone(), var_sort.clone(), nb)
            }
        }
        _ => t.clone(),
    };
    let out = f(&rebuilt).unwrap_or(rebuilt);
    memo.insert(Arc::as_ptr(t), out.clone());
    out
}

/// Replaces bound variables by terms. Quantifiers shadowing a name stop the
/// substitution below them.
pub fn subst_vars(t: &Term, map: &HashMap<Arc<str>, Term>) -> Term {
    match &t.kind {
        TermKind::Var(n) => map.get(n).cloned().unwrap_or_else(|| t.clone()),
        TermKind::App(op, args) => app(*op, args.iter().map(|a| subst_vars(a, map)).collect()),
        TermKind::Apply(f, args) => apply(f.clone(), args.iter().map(|a| subst_vars(a, map)).collect(), t.sort.clone()),
        TermKind::Quant { forall, var, var_sort, body } => {
            if map.contains_key(var) {
                let mut inner = map.clone();
                inner.remove(var);
                quant(*forall, var.clone(), var_sort.clone(), subst_vars(body, &inner))
            } else {
                quant(*forall, var.clone(), var_sort.clone(), subst_vars(body, map))
            }
        }
        _ => t.clone(),
    }
}

/// Function body used for macro expansion: `name(params) = body`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunDef {
    pub name: String,
    pub params: Vec<(String, Sort)>,
    pub ret: Sort,
    pub body: Term,
}

impl FunDef {
    pub fn instantiate(&self, args: &[Term]) -> Term {
        let map: HashMap<Arc<str>, Term> =
            self.params.iter().zip(args).map(|((n, _), a)| (Arc::from(n.as_str()), a.clone())).collect();
        subst_vars(&self.body, &map)
    }
}

/// Expands every application of a function in `defs` by its body.
pub fn expand_funs(t: &Term, defs: &BTreeMap<String, FunDef>) -> Term {
    if defs.is_empty() {
        return t.clone();
    }
    rewrite(t, &mut |n| match &n.kind {
        TermKind::Apply(f, args) => defs.get(&**f).map(|d| expand_funs(&d.instantiate(args), defs)),
        _ => None,
    })
}

/// Source of values for the free symbols of a term.
pub trait EvalCtx {
    fn konst(&self, c: &SymConst, sort: &Sort) -> Result<Value, EvalError>;
    fn apply(&self, f: &str, args: &[Value], ret: &Sort) -> Result<Value, EvalError>;
}

pub fn eval(t: &Term, ctx: &dyn EvalCtx) -> Result<Value, EvalError> {
    let mut bound = Vec::new();
    let mut memo = HashMap::new();
    eval_in(t, ctx, &mut bound, &mut memo)
}

type Memo = HashMap<*const TermNode, Value>;

fn eval_in(t: &Term, ctx: &dyn EvalCtx, bound: &mut Vec<(Arc<str>, Value)>, memo: &mut Memo) -> Result<Value, EvalError> {
    // Memoizing under binders would conflate different bindings.
    let cacheable = bound.is_empty();
    if cacheable {
        if let Some(v) = memo.get(&Arc::as_ptr(t)) {
            return Ok(v.clone());
        }
    }
    let v = match &t.kind {
        TermKind::Lit(v) => v.clone(),
        TermKind::Const(c) => ctx.konst(c, &t.sort)?,
        TermKind::Var(n) => bound
            .iter()
            .rev()
            .find(|(b, _)| b == n)
            .map(|(_, v)| v.clone())
            .ok_or_else(|| EvalError::Unbound(n.to_string()))?,
        TermKind::App(Op::Ite, args) => {
            if eval_in(&args[0], ctx, bound, memo)?.as_bool()? {
                eval_in(&args[1], ctx, bound, memo)?
            } else {
                eval_in(&args[2], ctx, bound, memo)?
            }
        }
        TermKind::App(op, args) => {
            let vals = args.iter().map(|a| eval_in(a, ctx, bound, memo)).collect::<Result<Vec<_>, _>>()?;
            apply_op(*op, &vals)?
        }
        TermKind::Apply(f, args) => {
            let vals = args.iter().map(|a| eval_in(a, ctx, bound, memo)).collect::<Result<Vec<_>, _>>()?;
            ctx.apply(f, &vals, &t.sort)?
        }
        TermKind::Quant { forall, var, var_sort, body } => {
            let domain = var_sort
                .finite_values()
                .ok_or_else(|| EvalError::Unsupported(format!("quantifier over {var_sort}")))?;
            let mut result = *forall;
            for v in domain {
                bound.push((var.clone(), v));
                let b = eval_in(body, ctx, bound, memo);
                bound.pop();
                if b?.as_bool()? != *forall {
                    result = !*forall;
                    break;
                }
            }
            Value::Bool(result)
        }
    };
    if cacheable {
        memo.insert(Arc::as_ptr(t), v.clone());
    }
    Ok(v)
}

fn bits(v: &Value) -> Result<(&BigUint, u32), EvalError> {
    match v {
        Value::BitVec { value, width } => Ok((value, *width)),
        _ => Err(EvalError::SortMismatch("bitvector")),
    }
}

fn real(v: &Value) -> Result<&BigRational, EvalError> {
    match v {
        Value::Real(r) => Ok(r),
        _ => Err(EvalError::SortMismatch("real")),
    }
}

fn compare(op: Op, a: &Value, b: &Value) -> Result<bool, EvalError> {
    let ord = match (a, b) {
        (Value::Int(x), Value::Int(y)) => x.cmp(y),
        (Value::Real(x), Value::Real(y)) => x.cmp(y),
        (Value::BitVec { value: x, .. }, Value::BitVec { value: y, .. }) => x.cmp(y),
        _ => return Err(EvalError::SortMismatch("comparison")),
    };
    Ok(match op {
        Op::Lt | Op::BvUlt => ord.is_lt(),
        Op::Le | Op::BvUle => ord.is_le(),
        Op::Gt | Op::BvUgt => ord.is_gt(),
        _ => ord.is_ge(),
    })
}

/// Exact semantics of one operator on concrete arguments. Integer and real
/// division by zero are errors; bitvector division follows SMT-LIB.
pub fn apply_op(op: Op, v: &[Value]) -> Result<Value, EvalError> {
    use Value::*;
    Ok(match op {
        Op::Not => Bool(!v[0].as_bool()?),
        Op::And => Bool(v.iter().map(Value::as_bool).collect::<Result<Vec<_>, _>>()?.into_iter().all(|b| b)),
        Op::Or => Bool(v.iter().map(Value::as_bool).collect::<Result<Vec<_>, _>>()?.into_iter().any(|b| b)),
        Op::Implies => Bool(!v[0].as_bool()? || v[1].as_bool()?),
        Op::Eq => Bool(v.windows(2).all(|w| w[0] == w[1])),
        Op::Distinct => {
            let set: BTreeSet<&Value> = v.iter().collect();
            Bool(set.len() == v.len())
        }
        Op::Ite => {
            if v[0].as_bool()? {
                v[1].clone()
            } else {
                v[2].clone()
            }
        }
        Op::Lt | Op::Le | Op::Gt | Op::Ge | Op::BvUlt | Op::BvUle | Op::BvUgt | Op::BvUge => {
            Bool(compare(op, &v[0], &v[1])?)
        }
        Op::Add | Op::Sub | Op::Mul => match (&v[0], &v[1]) {
            (Int(a), Int(b)) => Int(match op {
                Op::Add => a + b,
                Op::Sub => a - b,
                _ => a * b,
            }),
            (Real(a), Real(b)) => Real(match op {
                Op::Add => a + b,
                Op::Sub => a - b,
                _ => a * b,
            }),
            _ => return Err(EvalError::SortMismatch("arithmetic")),
        },
        Op::Neg => match &v[0] {
            Int(a) => Int(-a),
            Real(a) => Real(-a),
            _ => return Err(EvalError::SortMismatch("negation")),
        },
        Op::RealDiv => {
            let (a, b) = (real(&v[0])?, real(&v[1])?);
            if b.is_zero() {
                return Err(EvalError::DivisionByZero);
            }
            Real(a / b)
        }
        Op::IntDiv => Int(value::int_div(v[0].as_int()?, v[1].as_int()?)?),
        Op::Mod => Int(value::int_mod(v[0].as_int()?, v[1].as_int()?)?),
        Op::BvAdd | Op::BvSub | Op::BvMul | Op::BvUdiv | Op::BvUrem | Op::BvAnd | Op::BvOr | Op::BvXor => {
            let ((a, w), (b, _)) = (bits(&v[0])?, bits(&v[1])?);
            let m = value::mask(w);
            let r = match op {
                Op::BvAdd => a + b,
                Op::BvSub => (a + (&m + BigUint::one()) - b) & &m,
                Op::BvMul => a * b,
                Op::BvUdiv => value::bv_udiv(a, b, w),
                Op::BvUrem => value::bv_urem(a, b),
                Op::BvAnd => a & b,
                Op::BvOr => a | b,
                _ => a ^ b,
            };
            value::bv(r, w)
        }
        Op::BvNeg => {
            let (a, w) = bits(&v[0])?;
            value::bv(value::bv_neg(a, w), w)
        }
        Op::BvNot => {
            let (a, w) = bits(&v[0])?;
            value::bv(a ^ value::mask(w), w)
        }
        Op::Concat => {
            let ((a, wa), (b, wb)) = (bits(&v[0])?, bits(&v[1])?);
            value::bv((a << wb) | b, wa + wb)
        }
        Op::Extract(hi, lo) => {
            let (a, _) = bits(&v[0])?;
            value::bv(a >> lo, hi - lo + 1)
        }
        Op::Select => match &v[0] {
            Array(arr) => arr.select(&v[1]),
            _ => return Err(EvalError::SortMismatch("select")),
        },
        Op::Store => match &v[0] {
            Array(arr) => Array(arr.store(v[1].clone(), v[2].clone())),
            _ => return Err(EvalError::SortMismatch("store")),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn escaping_round_trips() {
        for n in ["x", "y.1@0", "c1.x", "and", "t#3", "_a"] {
            assert_eq!(unescape_symbol(&symbol(n)), n);
        }
        assert_eq!(symbol("x"), "x");
        assert_eq!(symbol("y.1@0"), "|y.1@0|");
        assert_eq!(symbol("and"), "|and|");
    }

    #[test]
    fn printing() {
        let x = konst(SymConst::new("x", 1, 1), Sort::Int);
        let t = not(app(Op::Ge, vec![x, int_lit(0)]));
        assert_eq!(t.to_smt(), "(not (>= |x@1| 0))");
        let e = app(Op::Extract(7, 4), vec![lit(value::bv(0xabu32, 8))]);
        assert_eq!(e.to_smt(), "((_ extract 7 4) #b10101011)");
        assert_eq!(e.sort, Sort::BitVec(4));
    }

    struct NoCtx;
    impl EvalCtx for NoCtx {
        fn konst(&self, c: &SymConst, _: &Sort) -> Result<Value, EvalError> {
            Err(EvalError::Unbound(c.to_string()))
        }
        fn apply(&self, f: &str, _: &[Value], _: &Sort) -> Result<Value, EvalError> {
            Err(EvalError::Unbound(f.into()))
        }
    }

    #[test]
    fn bitvector_arithmetic_wraps() {
        let b = |v: u32| lit(value::bv(v, 4));
        let ev = |t: Term| eval(&t, &NoCtx).unwrap();
        assert_eq!(ev(app(Op::BvAdd, vec![b(15), b(2)])), value::bv(1u32, 4));
        assert_eq!(ev(app(Op::BvSub, vec![b(1), b(2)])), value::bv(15u32, 4));
        assert_eq!(ev(app(Op::BvNeg, vec![b(1)])), value::bv(15u32, 4));
        assert_eq!(ev(app(Op::Concat, vec![b(1), b(2)])), value::bv(0x12u32, 8));
    }

    #[test]
    fn finite_quantifier_evaluation() {
        let def = Arc::new(EnumDef { name: "e".into(), variants: vec!["A".into(), "B".into()] });
        let s = Sort::Enum(def.clone());
        let body = eq(var("v", s.clone()), lit(Value::Enum { def, idx: 0 }));
        assert_eq!(eval(&quant(true, "v", s.clone(), body.clone()), &NoCtx).unwrap(), Value::Bool(false));
        assert_eq!(eval(&quant(false, "v", s, body), &NoCtx).unwrap(), Value::Bool(true));
    }
}
