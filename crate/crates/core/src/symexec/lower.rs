//! Surface expressions to terms. Operators are chosen from operand sorts
//! (bitvector comparison is unsigned). No simplification is performed, so
//! `0 + 1` stays an addition.

use std::collections::BTreeMap;

use crate::ast::*;
use crate::elab::typecheck::resolve_type;
use crate::elab::TypedModule;
use crate::term::{self, Op, Sort, Term};
use crate::value::{self, Value};

#[derive(Clone, Copy, Debug)]
pub struct ExprLowering<'m> {
    module: &'m TypedModule,
}

impl<'m> ExprLowering<'m> {
    pub fn new(module: &'m TypedModule) -> Self {
        ExprLowering { module }
    }

    pub fn resolve(&self, t: &Type) -> Sort {
        resolve_type(&self.module.env.types, t).expect("type resolved during typechecking")
    }

    /// A spec (invariant, axiom) over one state.
    pub fn spec(&self, e: &Expr, env: &BTreeMap<String, Term>) -> Term {
        self.expr(e, env, &BTreeMap::new(), None)
    }

    pub fn expr(
        &self,
        e: &Expr,
        env: &BTreeMap<String, Term>,
        locals: &BTreeMap<String, Term>,
        old: Option<&BTreeMap<String, Term>>,
    ) -> Term {
        let mut bound = Vec::new();
        self.go(e, &Ctx { env, locals, old }, &mut bound)
    }

    fn go(&self, e: &Expr, cx: &Ctx, bound: &mut Vec<(String, Sort)>) -> Term {
        match &e.kind {
            ExprKind::Bool(b) => term::bool_lit(*b),
            ExprKind::Int(i) => term::int_lit(i.clone()),
            ExprKind::Real(r) => term::lit(Value::Real(r.clone())),
            ExprKind::BitVec { value, width } => term::lit(value::bv(*value, *width)),
            ExprKind::Ident(n) => {
                if let Some((_, s)) = bound.iter().rev().find(|(b, _)| b == n) {
                    return term::var(n.as_str(), s.clone());
                }
                if let Some(t) = cx.locals.get(n).or_else(|| cx.env.get(n)) {
                    return t.clone();
                }
                if let Some((def, idx)) = self.module.env.variants.get(n) {
                    return term::lit(Value::Enum { def: def.clone(), idx: *idx });
                }
                panic!("unbound identifier `{n}` after typechecking")
            }
            ExprKind::Old(n) => {
                let old = cx.old.expect("old() outside ensures");
                old.get(n).cloned().unwrap_or_else(|| panic!("no pre-state value for `{n}`"))
            }
            ExprKind::Primed(n) => panic!("primed read of `{n}` survived typechecking"),
            ExprKind::TraceIndexed(n, i) => {
                // Only reachable on a module that was not self-composed.
                let name = format!("{n}.{i}");
                cx.env.get(&name).cloned().unwrap_or_else(|| panic!("trace-indexed `{name}` needs self-composition"))
            }
            ExprKind::Unary(op, inner) => {
                let t = self.go(inner, cx, bound);
                let bvsort = matches!(t.sort, Sort::BitVec(_));
                let op = match op {
                    UnOp::Not => Op::Not,
                    UnOp::Neg if bvsort => Op::BvNeg,
                    UnOp::Neg => Op::Neg,
                    UnOp::BvNot => Op::BvNot,
                };
                term::app(op, vec![t])
            }
            ExprKind::Binary(op, l, r) => {
                let a = self.go(l, cx, bound);
                let b = self.go(r, cx, bound);
                binary(*op, a, b)
            }
            ExprKind::Ite(c, t, f) => {
                let c = self.go(c, cx, bound);
                let t = self.go(t, cx, bound);
                let f = self.go(f, cx, bound);
                term::ite(c, t, f)
            }
            ExprKind::Apply(name, args) => {
                let f = self.module.function(name).unwrap_or_else(|| panic!("unknown function `{name}`"));
                let args = args.iter().map(|a| self.go(a, cx, bound)).collect();
                term::apply(name.as_str(), args, f.ret.clone())
            }
            ExprKind::Select(a, i) => {
                let a = self.go(a, cx, bound);
                let i = self.go(i, cx, bound);
                term::app(Op::Select, vec![a, i])
            }
            ExprKind::Store(a, i, v) => {
                let a = self.go(a, cx, bound);
                let i = self.go(i, cx, bound);
                let v = self.go(v, cx, bound);
                term::app(Op::Store, vec![a, i, v])
            }
            ExprKind::Extract { expr, hi, lo } => {
                let t = self.go(expr, cx, bound);
                term::app(Op::Extract(*hi, *lo), vec![t])
            }
            ExprKind::Quant { kind, var, ty, group, body } => {
                assert!(group.is_none(), "finite quantifier over `{var}` was not grounded");
                let sort = self.resolve(ty);
                bound.push((var.clone(), sort.clone()));
                let b = self.go(body, cx, bound);
                bound.pop();
                term::quant(kind.is_universal(), var.as_str(), sort, b)
            }
        }
    }
}

struct Ctx<'a> {
    env: &'a BTreeMap<String, Term>,
    locals: &'a BTreeMap<String, Term>,
    old: Option<&'a BTreeMap<String, Term>>,
}

fn binary(op: BinOp, a: Term, b: Term) -> Term {
    let bvsort = matches!(a.sort, Sort::BitVec(_));
    let o = match op {
        BinOp::Implies => Op::Implies,
        BinOp::Iff | BinOp::Eq => Op::Eq,
        BinOp::Ne => return term::not(term::eq(a, b)),
        BinOp::Or => Op::Or,
        BinOp::And => Op::And,
        BinOp::BvOr => Op::BvOr,
        BinOp::BvXor => Op::BvXor,
        BinOp::BvAnd => Op::BvAnd,
        BinOp::Concat => Op::Concat,
        BinOp::Lt if bvsort => Op::BvUlt,
        BinOp::Le if bvsort => Op::BvUle,
        BinOp::Gt if bvsort => Op::BvUgt,
        BinOp::Ge if bvsort => Op::BvUge,
        BinOp::Lt => Op::Lt,
        BinOp::Le => Op::Le,
        BinOp::Gt => Op::Gt,
        BinOp::Ge => Op::Ge,
        BinOp::Add if bvsort => Op::BvAdd,
        BinOp::Sub if bvsort => Op::BvSub,
        BinOp::Mul if bvsort => Op::BvMul,
        BinOp::Add => Op::Add,
        BinOp::Sub => Op::Sub,
        BinOp::Mul => Op::Mul,
        BinOp::Div | BinOp::IntDiv if bvsort => Op::BvUdiv,
        BinOp::Mod if bvsort => Op::BvUrem,
        BinOp::Div => Op::RealDiv,
        BinOp::IntDiv => Op::IntDiv,
        BinOp::Mod => Op::Mod,
    };
    term::app(o, vec![a, b])
}
