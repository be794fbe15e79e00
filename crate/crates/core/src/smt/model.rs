//! Reading solver output back into terms and values: models after `sat`,
//! and `define-fun` bodies returned by synthesis solvers.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::Num;

use super::sexp::{parse_all, Sexp};
use crate::term::{self, EnumDef, EvalCtx, Op, Sort, SymConst, Term, TermKind};
use crate::value::{ArrayValue, EvalError, Value};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("{0}")]
    Syntax(#[from] super::sexp::SexpError),
    #[error("cannot read `{sexp}`: {msg}")]
    Unreadable { sexp: String, msg: String },
}

fn unreadable(s: &Sexp, msg: impl Into<String>) -> ModelError {
    ModelError::Unreadable { sexp: s.to_string(), msg: msg.into() }
}

/// User-declared sorts that may appear in solver output.
#[derive(Clone, Debug, Default)]
pub struct SortEnv {
    pub enums: BTreeMap<String, Arc<EnumDef>>,
    pub uninterp: BTreeSet<String>,
    variants: BTreeMap<String, (Arc<EnumDef>, usize)>,
}

impl SortEnv {
    pub fn new(enums: impl IntoIterator<Item = Arc<EnumDef>>, uninterp: impl IntoIterator<Item = String>) -> Self {
        let mut env = SortEnv { uninterp: uninterp.into_iter().collect(), ..SortEnv::default() };
        for d in enums {
            for (i, v) in d.variants.iter().enumerate() {
                env.variants.insert(v.clone(), (d.clone(), i));
            }
            env.enums.insert(d.name.clone(), d);
        }
        env
    }

    pub fn for_module(m: &crate::elab::TypedModule) -> Self {
        SortEnv::new(m.enums().iter().cloned(), m.env.uninterp.iter().cloned())
    }

    pub fn from_symbols(s: &term::Symbols) -> Self {
        SortEnv::new(s.enums.iter().cloned(), s.uninterp.iter().map(|u| u.to_string()))
    }

    pub fn sort(&self, s: &Sexp) -> Result<Sort, ModelError> {
        if let Some(name) = s.symbol() {
            return match name {
                "Bool" => Ok(Sort::Bool),
                "Int" => Ok(Sort::Int),
                "Real" => Ok(Sort::Real),
                _ => {
                    if let Some(d) = self.enums.get(name) {
                        Ok(Sort::Enum(d.clone()))
                    } else if self.uninterp.contains(name) {
                        Ok(Sort::Uninterp(Arc::from(name)))
                    } else {
                        Err(unreadable(s, "unknown sort"))
                    }
                }
            };
        }
        match s.list() {
            Some([Sexp::Atom(u), Sexp::Atom(bv), Sexp::Atom(w)]) if u == "_" && bv == "BitVec" => {
                w.parse().map(Sort::BitVec).map_err(|_| unreadable(s, "bad width"))
            }
            Some([Sexp::Atom(a), i, e]) if a == "Array" => Ok(Sort::Array(Box::new(self.sort(i)?), Box::new(self.sort(e)?))),
            _ => Err(unreadable(s, "unknown sort")),
        }
    }
}

/// Converts solver terms to [`Term`]s. Function symbols must be declared in
/// `funs`; variables in scope become [`TermKind::Var`] nodes.
pub struct Reader<'e> {
    pub env: &'e SortEnv,
    pub funs: BTreeMap<String, (Vec<Sort>, Sort)>,
}

type Scope = Vec<(String, Term)>;

fn numeral(a: &str) -> Option<BigInt> {
    if a.bytes().all(|b| b.is_ascii_digit()) && !a.is_empty() {
        a.parse().ok()
    } else {
        None
    }
}

fn decimal(a: &str) -> Option<BigRational> {
    let (i, f) = a.split_once('.')?;
    if i.is_empty() || !i.bytes().all(|b| b.is_ascii_digit()) || !f.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let den = BigInt::from(10u32).pow(f.len() as u32);
    let num: BigInt = format!("{i}{f}").parse().ok()?;
    Some(BigRational::new(num, den))
}

fn bv_literal(a: &str) -> Option<Value> {
    if let Some(b) = a.strip_prefix("#b") {
        let v = BigUint::from_str_radix(b, 2).ok()?;
        return Some(crate::value::bv(v, b.len() as u32));
    }
    if let Some(h) = a.strip_prefix("#x") {
        let v = BigUint::from_str_radix(h, 16).ok()?;
        return Some(crate::value::bv(v, 4 * h.len() as u32));
    }
    None
}

fn to_real(t: Term) -> Term {
    match &t.kind {
        TermKind::Lit(Value::Int(i)) => term::lit(Value::Real(BigRational::from_integer(i.clone()))),
        _ => t,
    }
}

/// Integer literals become reals when mixed with reals; solvers print
/// rationals as `(/ 1 3)`.
fn unify_numeric(args: Vec<Term>, force_real: bool) -> Vec<Term> {
    if force_real || args.iter().any(|a| a.sort == Sort::Real) {
        args.into_iter().map(to_real).collect()
    } else {
        args
    }
}

fn fold_binary(op: Op, args: Vec<Term>) -> Term {
    let mut it = args.into_iter();
    let first = it.next().expect("non-empty");
    it.fold(first, |acc, x| term::app(op, vec![acc, x]))
}

fn chain(op: Op, args: Vec<Term>) -> Term {
    if args.len() == 2 {
        return term::app(op, args);
    }
    term::and(args.windows(2).map(|w| term::app(op, w.to_vec())).collect())
}

impl Reader<'_> {
    pub fn term(&self, s: &Sexp, expected: Option<&Sort>) -> Result<Term, ModelError> {
        self.read(s, &mut Vec::new(), expected)
    }

    /// Reads a function body over `params`, which become variables.
    pub fn with_params(&self, body: &Sexp, params: &[(String, Sort)], ret: &Sort) -> Result<Term, ModelError> {
        let mut scope: Scope = params.iter().map(|(n, s)| (n.clone(), term::var(n.as_str(), s.clone()))).collect();
        self.read(body, &mut scope, Some(ret))
    }

    fn read(&self, s: &Sexp, scope: &mut Scope, expected: Option<&Sort>) -> Result<Term, ModelError> {
        match s {
            Sexp::Str(_) => Err(unreadable(s, "string literals are unsupported")),
            Sexp::Atom(a) => self.atom(s, a, scope, expected),
            Sexp::List(items) => self.list(s, items, scope, expected),
        }
    }

    fn atom(&self, s: &Sexp, a: &str, scope: &Scope, expected: Option<&Sort>) -> Result<Term, ModelError> {
        if let Some(i) = numeral(a) {
            return Ok(match expected {
                Some(Sort::Real) => term::lit(Value::Real(BigRational::from_integer(i))),
                _ => term::int_lit(i),
            });
        }
        if let Some(r) = decimal(a) {
            return Ok(term::lit(Value::Real(r)));
        }
        if let Some(v) = bv_literal(a) {
            return Ok(term::lit(v));
        }
        match a {
            "true" => return Ok(term::bool_lit(true)),
            "false" => return Ok(term::bool_lit(false)),
            _ => {}
        }
        let name = term::unescape_symbol(a);
        if let Some((_, t)) = scope.iter().rev().find(|(n, _)| n == name) {
            return Ok(t.clone());
        }
        if let Some((params, ret)) = self.funs.get(name) {
            if params.is_empty() {
                return Ok(term::apply(name, vec![], ret.clone()));
            }
        }
        if let Some((def, idx)) = self.env.variants.get(name) {
            return Ok(term::lit(Value::Enum { def: def.clone(), idx: *idx }));
        }
        // z3 names elements of uninterpreted sorts `S!val!n`.
        if let Some((sort, _)) = name.split_once("!val!") {
            if self.env.uninterp.contains(sort) {
                return Ok(term::lit(Value::Opaque { sort: Arc::from(sort), id: name.to_string() }));
            }
        }
        if let Some(Sort::Uninterp(u)) = expected {
            return Ok(term::lit(Value::Opaque { sort: u.clone(), id: name.to_string() }));
        }
        Err(unreadable(s, "unknown symbol"))
    }

    fn list(&self, s: &Sexp, items: &[Sexp], scope: &mut Scope, expected: Option<&Sort>) -> Result<Term, ModelError> {
        let Some(head) = items.first() else { return Err(unreadable(s, "empty application")) };
        // Indexed and annotated heads.
        if let Some(h) = head.list() {
            match h {
                [Sexp::Atom(as_), Sexp::Atom(c), sort] if as_ == "as" && c == "const" => {
                    let Sort::Array(i, e) = self.env.sort(sort)? else { return Err(unreadable(s, "const of non-array")) };
                    let [_, v] = items else { return Err(unreadable(s, "const arity")) };
                    let d = self.read(v, scope, Some(&e))?;
                    let d = term::eval(&d, &NoSymbols).map_err(|e| unreadable(v, e.to_string()))?;
                    return Ok(term::lit(Value::Array(ArrayValue::constant(*i, d))));
                }
                [Sexp::Atom(u), Sexp::Atom(ex), Sexp::Atom(hi), Sexp::Atom(lo)] if u == "_" && ex == "extract" => {
                    let hi = hi.parse().map_err(|_| unreadable(s, "bad extract index"))?;
                    let lo = lo.parse().map_err(|_| unreadable(s, "bad extract index"))?;
                    let [_, x] = items else { return Err(unreadable(s, "extract arity")) };
                    return Ok(term::app(Op::Extract(hi, lo), vec![self.read(x, scope, None)?]));
                }
                _ => return Err(unreadable(s, "unsupported indexed operator")),
            }
        }
        let head = head.atom().ok_or_else(|| unreadable(s, "bad head"))?;
        let args = &items[1..];
        match head {
            "_" => {
                if let [Sexp::Atom(bv), Sexp::Atom(w)] = args {
                    if let (Some(v), Ok(w)) = (bv.strip_prefix("bv"), w.parse::<u32>()) {
                        let v: BigUint = v.parse().map_err(|_| unreadable(s, "bad bitvector"))?;
                        return Ok(term::lit(crate::value::bv(v, w)));
                    }
                }
                if let [Sexp::Atom(a), f] = args {
                    if a == "as-array" {
                        let sort = expected.cloned().ok_or_else(|| unreadable(s, "as-array without a known sort"))?;
                        let f = f.symbol().unwrap_or_default();
                        return Ok(term::apply(format!("{AS_ARRAY}{f}"), vec![], sort));
                    }
                }
                Err(unreadable(s, "unsupported indexed term"))
            }
            "as" => {
                let [x, sort] = args else { return Err(unreadable(s, "as arity")) };
                let sort = self.env.sort(sort)?;
                self.read(x, scope, Some(&sort))
            }
            "let" => {
                let [Sexp::List(binds), body] = args else { return Err(unreadable(s, "malformed let")) };
                let mut bound = Vec::new();
                for b in binds {
                    let [v, e] = b.list().ok_or_else(|| unreadable(b, "malformed binding"))? else {
                        return Err(unreadable(b, "malformed binding"));
                    };
                    let name = v.symbol().ok_or_else(|| unreadable(v, "binder"))?.to_string();
                    bound.push((name, self.read(e, scope, None)?));
                }
                let n = bound.len();
                scope.extend(bound);
                let r = self.read(body, scope, expected);
                scope.truncate(scope.len() - n);
                r
            }
            "to_real" => {
                let [x] = args else { return Err(unreadable(s, "to_real arity")) };
                let t = self.read(x, scope, None)?;
                match &t.kind {
                    TermKind::Lit(Value::Int(_)) => Ok(to_real(t)),
                    _ => Err(unreadable(s, "to_real of a non-literal")),
                }
            }
            "forall" | "exists" => {
                let [Sexp::List(binds), body] = args else { return Err(unreadable(s, "malformed binder")) };
                let mut vars = Vec::new();
                for b in binds {
                    let [v, srt] = b.list().unwrap_or_default() else { return Err(unreadable(b, "malformed binder")) };
                    let name = v.symbol().ok_or_else(|| unreadable(v, "binder"))?.to_string();
                    let sort = self.env.sort(srt)?;
                    vars.push((name, sort));
                }
                for (n, srt) in &vars {
                    scope.push((n.clone(), term::var(n.as_str(), srt.clone())));
                }
                let body = self.read(body, scope, Some(&Sort::Bool));
                scope.truncate(scope.len() - vars.len());
                let mut t = body?;
                for (n, srt) in vars.into_iter().rev() {
                    t = term::quant(head == "forall", n, srt, t);
                }
                Ok(t)
            }
            _ => {
                let name = term::unescape_symbol(head);
                if let Some((params, ret)) = self.funs.get(name) {
                    if params.len() != args.len() {
                        return Err(unreadable(s, "arity mismatch"));
                    }
                    let ts = args
                        .iter()
                        .zip(params)
                        .map(|(a, p)| self.read(a, scope, Some(p)))
                        .collect::<Result<Vec<_>, _>>()?;
                    return Ok(term::apply(name, ts, ret.clone()));
                }
                let op = Op::from_smt(head, args.len()).ok_or_else(|| unreadable(s, "unknown function"))?;
                self.op(s, op, args, scope, expected)
            }
        }
    }

    fn op(&self, s: &Sexp, op: Op, args: &[Sexp], scope: &mut Scope, expected: Option<&Sort>) -> Result<Term, ModelError> {
        let numeric = matches!(op, Op::Add | Op::Sub | Op::Mul | Op::Neg | Op::RealDiv);
        let hint = if numeric { expected } else { None };
        let mut ts = Vec::with_capacity(args.len());
        for (i, a) in args.iter().enumerate() {
            let h = match op {
                Op::Ite if i > 0 => expected,
                Op::Not | Op::And | Op::Or | Op::Implies => Some(&Sort::Bool),
                _ => hint,
            };
            ts.push(self.read(a, scope, h)?);
        }
        let need = |n: usize| if ts.len() == n { Ok(()) } else { Err(unreadable(s, "arity mismatch")) };
        Ok(match op {
            Op::Neg => {
                need(1)?;
                let t = ts.pop().unwrap();
                match &t.kind {
                    TermKind::Lit(Value::Int(i)) => term::int_lit(-i),
                    TermKind::Lit(Value::Real(r)) => term::lit(Value::Real(-r)),
                    _ => term::app(Op::Neg, vec![t]),
                }
            }
            Op::RealDiv => {
                need(2)?;
                let ts = unify_numeric(ts, true);
                match (&ts[0].kind, &ts[1].kind) {
                    (TermKind::Lit(Value::Real(a)), TermKind::Lit(Value::Real(b))) if !num_traits::Zero::is_zero(b) => {
                        term::lit(Value::Real(a / b))
                    }
                    _ => term::app(Op::RealDiv, ts),
                }
            }
            Op::Add | Op::Sub | Op::Mul => {
                if ts.len() < 2 {
                    return Err(unreadable(s, "arity mismatch"));
                }
                fold_binary(op, unify_numeric(ts, false))
            }
            Op::BvAdd | Op::BvMul | Op::BvAnd | Op::BvOr | Op::BvXor | Op::Concat | Op::And | Op::Or => {
                if ts.len() < 2 {
                    return Err(unreadable(s, "arity mismatch"));
                }
                if matches!(op, Op::And | Op::Or) {
                    term::app(op, ts)
                } else {
                    fold_binary(op, ts)
                }
            }
            Op::Lt | Op::Le | Op::Gt | Op::Ge | Op::Eq => chain(op, unify_numeric(ts, false)),
            Op::Ite => {
                need(3)?;
                let c = ts.remove(0);
                let branches = unify_numeric(ts, false);
                term::app(Op::Ite, std::iter::once(c).chain(branches).collect())
            }
            _ => term::app(op, ts),
        })
    }
}

/// Prefix marking a z3 `(_ as-array f)` reference inside a model term.
const AS_ARRAY: &str = "as-array:";

struct NoSymbols;

impl EvalCtx for NoSymbols {
    fn konst(&self, c: &SymConst, _: &Sort) -> Result<Value, EvalError> {
        Err(EvalError::Unbound(c.smt_name()))
    }
    fn apply(&self, f: &str, _: &[Value], _: &Sort) -> Result<Value, EvalError> {
        Err(EvalError::Unbound(f.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModelFun {
    pub params: Vec<(String, Sort)>,
    pub ret: Sort,
    pub body: Term,
}

/// Interpretation returned by the solver. Constants are keyed by their
/// unescaped solver name (`x@0`); functions with parameters keep their body.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SmtModel {
    pub consts: BTreeMap<String, Value>,
    pub funs: BTreeMap<String, ModelFun>,
}

/// Parses a model with builtin sorts only.
pub fn parse_model(text: &str) -> Result<SmtModel, ModelError> {
    parse_model_with(text, &SortEnv::default())
}

/// Parses the reply to `(get-model)`.
pub fn parse_model_with(text: &str, env: &SortEnv) -> Result<SmtModel, ModelError> {
    let top = parse_all(text)?;
    let mut items: Vec<&Sexp> = Vec::new();
    for t in &top {
        match t.list() {
            Some([Sexp::Atom(m), rest @ ..]) if m == "model" => items.extend(rest),
            Some(_) if t.is_call("define-fun") || t.is_call("declare-fun") => items.push(t),
            Some(l) => items.extend(l),
            None => return Err(unreadable(t, "expected a model")),
        }
    }
    let mut headers = Vec::new();
    let mut reader = Reader { env, funs: BTreeMap::new() };
    for it in items {
        if !it.is_call("define-fun") {
            continue;
        }
        let [_, name, Sexp::List(params), ret, body] = it.list().unwrap() else {
            return Err(unreadable(it, "malformed define-fun"));
        };
        let name = name.symbol().ok_or_else(|| unreadable(name, "bad name"))?.to_string();
        let mut ps = Vec::new();
        for p in params {
            let [n, srt] = p.list().unwrap_or_default() else { return Err(unreadable(p, "bad parameter")) };
            ps.push((n.symbol().unwrap_or_default().to_string(), env.sort(srt)?));
        }
        let ret = env.sort(ret)?;
        reader.funs.insert(name.clone(), (ps.iter().map(|(_, s)| s.clone()).collect(), ret.clone()));
        headers.push((name, ps, ret, body));
    }
    let mut model = SmtModel::default();
    for (name, ps, ret, body) in headers {
        let body = reader.with_params(body, &ps, &ret)?;
        model.funs.insert(name, ModelFun { params: ps, ret, body });
    }
    let nullary: Vec<String> = model.funs.iter().filter(|(_, f)| f.params.is_empty()).map(|(n, _)| n.clone()).collect();
    for n in nullary {
        let f = &model.funs[&n];
        let v = model.eval(&f.body).map_err(|e| ModelError::Unreadable { sexp: n.clone(), msg: e.to_string() })?;
        model.funs.remove(&n);
        model.consts.insert(n, v);
    }
    Ok(model)
}

impl SmtModel {
    pub fn get(&self, name: &str) -> Option<&Value> {
        self.consts.get(name)
    }

    /// Value of a closed term built from model symbols; missing symbols are errors.
    pub fn eval(&self, t: &Term) -> Result<Value, EvalError> {
        term::eval(t, &Strict(self))
    }

    /// Applies a function of the model, `None` if the model has no entry.
    pub fn apply(&self, f: &str, args: &[Value]) -> Option<Result<Value, EvalError>> {
        if let Some(arr) = f.strip_prefix(AS_ARRAY) {
            return Some(self.as_array(arr));
        }
        if args.is_empty() {
            if let Some(v) = self.consts.get(f) {
                return Some(Ok(v.clone()));
            }
        }
        let fun = self.funs.get(f)?;
        let map: std::collections::HashMap<Arc<str>, Term> = fun
            .params
            .iter()
            .zip(args)
            .map(|((n, _), v)| (Arc::from(n.as_str()), term::lit(v.clone())))
            .collect();
        Some(self.eval(&term::subst_vars(&fun.body, &map)))
    }

    /// Array value of a unary function whose parameter occurs only in point
    /// tests `(= p c)`, the shape z3 uses for `as-array` models. The array
    /// maps each tested point to the body's value there and every other
    /// index to the body's value at an untested index.
    fn as_array(&self, f: &str) -> Result<Value, EvalError> {
        let unsupported = || EvalError::Unsupported(format!("as-array of {f}"));
        let fun = self.funs.get(f).ok_or_else(|| EvalError::Unbound(f.to_string()))?;
        let [(p, idx_sort)] = fun.params.as_slice() else {
            return Err(unsupported());
        };
        let is_param = |t: &Term| matches!(&t.kind, TermKind::Var(v) if &**v == p);
        let mut points = BTreeSet::new();
        let mut closed = true;
        let stripped = term::rewrite(&fun.body, &mut |t| match &t.kind {
            TermKind::App(Op::Eq, e) if e.len() == 2 && (is_param(&e[0]) || is_param(&e[1])) => {
                let other = if is_param(&e[0]) { &e[1] } else { &e[0] };
                match self.eval(other) {
                    Ok(v) => {
                        points.insert(v);
                    }
                    Err(_) => closed = false,
                }
                Some(term::bool_lit(false))
            }
            _ => None,
        });
        let mut leaks = false;
        term::visit_dag([&stripped], &mut |t| leaks |= is_param(t));
        if leaks || !closed {
            return Err(unsupported());
        }
        let at = |v: &Value| {
            let map: std::collections::HashMap<Arc<str>, Term> = [(Arc::from(p.as_str()), term::lit(v.clone()))].into();
            self.eval(&term::subst_vars(&fun.body, &map))
        };
        let default = match untested_index(idx_sort, &points) {
            Some(i) => at(&i)?,
            // Every index is tested; the default is never observed.
            None => at(points.iter().next().ok_or_else(unsupported)?)?,
        };
        let mut arr = ArrayValue::constant(idx_sort.clone(), default);
        for k in &points {
            arr = arr.store(k.clone(), at(k)?);
        }
        Ok(Value::Array(arr))
    }
}

/// An index of `sort` outside `tested`, if one exists.
fn untested_index(sort: &Sort, tested: &BTreeSet<Value>) -> Option<Value> {
    if let Some(all) = sort.finite_values() {
        return all.into_iter().find(|v| !tested.contains(v));
    }
    match sort {
        Sort::Int => {
            let max = tested.iter().filter_map(|v| v.as_int().ok()).max().cloned().unwrap_or_default();
            Some(Value::Int(max + 1))
        }
        Sort::Real => {
            let max = tested.iter().filter_map(|v| match v {
                Value::Real(r) => Some(r.clone()),
                _ => None,
            });
            Some(Value::Real(max.max().unwrap_or_default() + BigRational::from_integer(1.into())))
        }
        Sort::BitVec(w) => (0u64..=tested.len() as u64)
            .map(|i| crate::value::bv(i, *w))
            .find(|v| !tested.contains(v)),
        _ => None,
    }
}

struct Strict<'m>(&'m SmtModel);

impl EvalCtx for Strict<'_> {
    fn konst(&self, c: &SymConst, _: &Sort) -> Result<Value, EvalError> {
        self.0.consts.get(&c.smt_name()).cloned().ok_or_else(|| EvalError::Unbound(c.smt_name()))
    }
    fn apply(&self, f: &str, args: &[Value], _: &Sort) -> Result<Value, EvalError> {
        self.0.apply(f, args).unwrap_or_else(|| Err(EvalError::Unbound(f.to_string())))
    }
}

/// Evaluates VC terms under a model. Symbols the solver left unassigned
/// take the sort default and are recorded in `defaulted`.
pub struct ModelCtx<'m> {
    pub model: &'m SmtModel,
    pub defaulted: RefCell<BTreeSet<String>>,
    /// Overrides for function symbols (candidate bodies, oracle tables).
    pub funs: BTreeMap<String, term::FunDef>,
}

impl<'m> ModelCtx<'m> {
    pub fn new(model: &'m SmtModel) -> Self {
        ModelCtx { model, defaulted: RefCell::new(BTreeSet::new()), funs: BTreeMap::new() }
    }

    pub fn eval(&self, t: &Term) -> Result<Value, EvalError> {
        term::eval(t, self)
    }
}

impl EvalCtx for ModelCtx<'_> {
    fn konst(&self, c: &SymConst, sort: &Sort) -> Result<Value, EvalError> {
        let name = c.smt_name();
        match self.model.consts.get(&name) {
            Some(v) => Ok(v.clone()),
            None => {
                self.defaulted.borrow_mut().insert(name);
                Ok(Value::default_of(sort))
            }
        }
    }

    fn apply(&self, f: &str, args: &[Value], ret: &Sort) -> Result<Value, EvalError> {
        if let Some(d) = self.funs.get(f) {
            let lits: Vec<Term> = args.iter().cloned().map(term::lit).collect();
            return term::eval(&d.instantiate(&lits), self);
        }
        match self.model.apply(f, args) {
            Some(r) => r,
            None => {
                self.defaulted.borrow_mut().insert(f.to_string());
                Ok(Value::default_of(ret))
            }
        }
    }
}

/// Reads one literal of sort `sort` (oracle replies, model values).
pub fn parse_value(text: &str, sort: &Sort, env: &SortEnv) -> Result<Value, ModelError> {
    let xs = parse_all(text)?;
    let [x] = xs.as_slice() else {
        return Err(ModelError::Unreadable { sexp: text.trim().to_string(), msg: "expected one literal".into() });
    };
    let reader = Reader { env, funs: BTreeMap::new() };
    let t = reader.term(x, Some(sort))?;
    let t = if *sort == Sort::Real { to_real(t) } else { t };
    let v = term::eval(&t, &NoSymbols).map_err(|e| unreadable(x, e.to_string()))?;
    if v.sort() != *sort {
        return Err(unreadable(x, format!("expected a value of sort {sort}")));
    }
    Ok(v)
}
