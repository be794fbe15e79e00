//! Lowering passes over a flat module: define expansion, loop elimination,
//! procedure inlining, finite-quantifier grounding and case lowering.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_traits::ToPrimitive;

use crate::ast::*;
use crate::diag::{DiagKind, Diagnostic};
use crate::frontend::parser::literal_int;

use super::{used_names, Fresh, Subst};

type LResult<T> = Result<T, Diagnostic>;

/// Applies `f` to every expression held by a declaration, leaving statement
/// structure alone.
fn map_decl_exprs(d: &Decl, f: &mut dyn FnMut(&Expr) -> LResult<Expr>) -> LResult<Decl> {
    let kind = match &d.kind {
        DeclKind::Define { name, params, ret, body } => {
            DeclKind::Define { name: name.clone(), params: params.clone(), ret: ret.clone(), body: f(body)? }
        }
        DeclKind::SynthFun { name, params, ret, grammar } => DeclKind::SynthFun {
            name: name.clone(),
            params: params.clone(),
            ret: ret.clone(),
            grammar: match grammar {
                Some(prods) => Some(
                    prods
                        .iter()
                        .map(|p| {
                            Ok(Production {
                                nonterminal: p.nonterminal.clone(),
                                ty: p.ty.clone(),
                                rules: p.rules.iter().map(&mut *f).collect::<LResult<_>>()?,
                            })
                        })
                        .collect::<LResult<_>>()?,
                ),
                None => None,
            },
        },
        DeclKind::Procedure(p) => DeclKind::Procedure(ProcDecl {
            requires: p.requires.iter().map(&mut *f).collect::<LResult<_>>()?,
            ensures: p.ensures.iter().map(&mut *f).collect::<LResult<_>>()?,
            body: match &p.body {
                Some(b) => Some(map_stmt_exprs(b, f)?),
                None => None,
            },
            ..p.clone()
        }),
        DeclKind::Init(b) => DeclKind::Init(map_stmt_exprs(b, f)?),
        DeclKind::Next(b) => DeclKind::Next(map_stmt_exprs(b, f)?),
        DeclKind::Instance { name, module, bindings } => DeclKind::Instance {
            name: name.clone(),
            module: module.clone(),
            bindings: bindings.iter().map(|(p, e)| Ok((p.clone(), f(e)?))).collect::<LResult<_>>()?,
        },
        DeclKind::Invariant { name, expr } => DeclKind::Invariant { name: name.clone(), expr: f(expr)? },
        DeclKind::Axiom { name, expr } => DeclKind::Axiom { name: name.clone(), expr: f(expr)? },
        DeclKind::HyperInvariant { arity, name, expr } => {
            DeclKind::HyperInvariant { arity: *arity, name: name.clone(), expr: f(expr)? }
        }
        DeclKind::HyperAxiom { arity, name, expr } => {
            DeclKind::HyperAxiom { arity: *arity, name: name.clone(), expr: f(expr)? }
        }
        DeclKind::Group { name, ty, elems } => DeclKind::Group {
            name: name.clone(),
            ty: ty.clone(),
            elems: elems.iter().map(&mut *f).collect::<LResult<_>>()?,
        },
        other => other.clone(),
    };
    Ok(Decl { kind, span: d.span.clone() })
}

fn map_stmt_exprs(ss: &[Stmt], f: &mut dyn FnMut(&Expr) -> LResult<Expr>) -> LResult<Vec<Stmt>> {
    let mut out = Vec::with_capacity(ss.len());
    for s in ss {
        let kind = match &s.kind {
            StmtKind::Assign { lhs, rhs } => StmtKind::Assign { lhs: lhs.clone(), rhs: f(rhs)? },
            StmtKind::Assert { label, expr } => StmtKind::Assert { label: label.clone(), expr: f(expr)? },
            StmtKind::Assume(e) => StmtKind::Assume(f(e)?),
            StmtKind::If { cond, then_branch, else_branch } => StmtKind::If {
                cond: f(cond)?,
                then_branch: map_stmt_exprs(then_branch, f)?,
                else_branch: map_stmt_exprs(else_branch, f)?,
            },
            StmtKind::Case(arms) => StmtKind::Case(
                arms.iter().map(|(g, b)| Ok((f(g)?, map_stmt_exprs(b, f)?))).collect::<LResult<_>>()?,
            ),
            StmtKind::For { var, lo, hi, body } => {
                StmtKind::For { var: var.clone(), lo: f(lo)?, hi: f(hi)?, body: map_stmt_exprs(body, f)? }
            }
            StmtKind::While { cond, invariants, body } => StmtKind::While {
                cond: f(cond)?,
                invariants: invariants.iter().map(&mut *f).collect::<LResult<_>>()?,
                body: map_stmt_exprs(body, f)?,
            },
            StmtKind::Call { lhs, proc_name, args } => StmtKind::Call {
                lhs: lhs.clone(),
                proc_name: proc_name.clone(),
                args: args.iter().map(&mut *f).collect::<LResult<_>>()?,
            },
            other => other.clone(),
        };
        out.push(Stmt::new(kind, s.span.clone()));
    }
    Ok(out)
}

fn map_module_exprs(m: AstModule, f: &mut dyn FnMut(&Expr) -> LResult<Expr>) -> LResult<AstModule> {
    let decls = m.decls.iter().map(|d| map_decl_exprs(d, f)).collect::<LResult<_>>()?;
    Ok(AstModule { decls, ..m })
}

/// Replaces every application of a `define` by its body. Define
/// declarations are dropped from the result.
pub fn expand_defines(m: AstModule) -> LResult<AstModule> {
    let defs: BTreeMap<String, (Vec<Param>, Expr, Span)> = m
        .decls
        .iter()
        .filter_map(|d| match &d.kind {
            DeclKind::Define { name, params, body, .. } => {
                Some((name.clone(), (params.clone(), body.clone(), d.span.clone())))
            }
            _ => None,
        })
        .collect();
    if defs.is_empty() {
        return Ok(m);
    }
    let mut done: BTreeMap<String, Expr> = BTreeMap::new();
    for name in defs.keys() {
        expand_define_body(name, &defs, &mut done, &mut Vec::new())?;
    }
    let m = AstModule { decls: m.decls.into_iter().filter(|d| !matches!(d.kind, DeclKind::Define { .. })).collect(), ..m };
    map_module_exprs(m, &mut |e| Ok(inline_defines(e, &defs, &done)))
}

fn expand_define_body(
    name: &str,
    defs: &BTreeMap<String, (Vec<Param>, Expr, Span)>,
    done: &mut BTreeMap<String, Expr>,
    stack: &mut Vec<String>,
) -> LResult<()> {
    if done.contains_key(name) {
        return Ok(());
    }
    let (_, body, span) = &defs[name];
    if stack.iter().any(|s| s == name) {
        return Err(Diagnostic::new(
            DiagKind::RecursiveProcedure,
            span.clone(),
            format!("define `{name}` refers to itself"),
        ));
    }
    stack.push(name.to_string());
    let mut callees = Vec::new();
    body.walk(&mut |e| {
        if let ExprKind::Apply(f, _) = &e.kind {
            if defs.contains_key(f) {
                callees.push(f.clone());
            }
        }
    });
    for c in callees {
        expand_define_body(&c, defs, done, stack)?;
    }
    stack.pop();
    let expanded = inline_defines(body, defs, done);
    done.insert(name.to_string(), expanded);
    Ok(())
}

fn inline_defines(e: &Expr, defs: &BTreeMap<String, (Vec<Param>, Expr, Span)>, done: &BTreeMap<String, Expr>) -> Expr {
    e.rewrite(&mut |x| match &x.kind {
        ExprKind::Apply(f, args) if done.contains_key(f) => {
            let (params, _, _) = &defs[f];
            let mut s = Subst::default();
            for (p, a) in params.iter().zip(args) {
                s.vars.insert(p.name.clone(), a.clone());
            }
            let mut out = s.expr(&done[f]);
            out.span = x.span.clone();
            out
        }
        _ => x,
    })
}

fn assigned_names(ss: &[Stmt], procs: &BTreeMap<String, ProcDecl>, out: &mut BTreeSet<(String, bool)>) {
    let mut declared = BTreeSet::new();
    for s in ss {
        s.walk(&mut |s| match &s.kind {
            StmtKind::LocalVar { names, .. } => declared.extend(names.iter().cloned()),
            StmtKind::Assign { lhs, .. } => {
                out.insert((lhs.name.clone(), lhs.primed));
            }
            StmtKind::Havoc(n) => {
                out.insert((n.clone(), false));
            }
            StmtKind::Call { lhs, proc_name, .. } => {
                for l in lhs {
                    out.insert((l.name.clone(), l.primed));
                }
                if let Some(p) = procs.get(proc_name) {
                    for m in &p.modifies {
                        out.insert((m.clone(), false));
                    }
                }
            }
            _ => {}
        });
    }
    out.retain(|(n, _)| !declared.contains(n));
}

fn procedures(m: &AstModule) -> BTreeMap<String, ProcDecl> {
    m.decls
        .iter()
        .filter_map(|d| match &d.kind {
            DeclKind::Procedure(p) => Some((p.name.clone(), p.clone())),
            _ => None,
        })
        .collect()
}

/// Applies a statement-list transform to every block of the module.
fn map_blocks(m: AstModule, f: &mut dyn FnMut(&[Stmt], BlockKind) -> LResult<Vec<Stmt>>) -> LResult<AstModule> {
    let mut decls = Vec::with_capacity(m.decls.len());
    for d in &m.decls {
        let kind = match &d.kind {
            DeclKind::Init(b) => DeclKind::Init(f(b, BlockKind::Init)?),
            DeclKind::Next(b) => DeclKind::Next(f(b, BlockKind::Next)?),
            DeclKind::Procedure(p) => DeclKind::Procedure(ProcDecl {
                body: match &p.body {
                    Some(b) => Some(f(b, BlockKind::Proc)?),
                    None => None,
                },
                ..p.clone()
            }),
            other => other.clone(),
        };
        decls.push(Decl { kind, span: d.span.clone() });
    }
    Ok(AstModule { decls, ..m })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum BlockKind {
    Init,
    Next,
    Proc,
}

fn assert_stmt(label: String, e: &Expr, span: &Span) -> Stmt {
    Stmt::new(StmtKind::Assert { label: Some(label), expr: e.clone() }, span.clone())
}

fn line_label(prefix: &str, span: &Span) -> String {
    format!("{prefix}_l{}", span.line)
}

/// Unrolls `for` loops and replaces `while` loops by their invariant encoding.
pub fn eliminate_loops(m: AstModule) -> LResult<AstModule> {
    let procs = procedures(&m);
    map_blocks(m, &mut |b, _| lower_loops(b, &procs))
}

fn lower_loops(ss: &[Stmt], procs: &BTreeMap<String, ProcDecl>) -> LResult<Vec<Stmt>> {
    let mut out = Vec::new();
    for s in ss {
        let span = &s.span;
        match &s.kind {
            StmtKind::For { var, lo, hi, body } => {
                let bound = |e: &Expr| {
                    literal_int(e).ok_or_else(|| {
                        Diagnostic::new(DiagKind::NonLiteralForBound, e.span.clone(), "for-loop bounds must be integer literals")
                    })
                };
                let (lo, hi) = (bound(lo)?, bound(hi)?);
                let trips = (&hi - &lo).to_i64().unwrap_or(i64::MAX);
                if trips > 100_000 {
                    return Err(Diagnostic::new(DiagKind::NonLiteralForBound, span.clone(), "for-loop range too large to unroll"));
                }
                let mut i = lo;
                while i < hi {
                    let mut sub = Subst::default();
                    sub.vars.insert(var.clone(), literal(&i));
                    out.extend(lower_loops(&sub.stmts(body), procs)?);
                    i += 1;
                }
            }
            StmtKind::While { cond, invariants, body } => {
                if invariants.is_empty() {
                    return Err(Diagnostic::new(
                        DiagKind::MissingLoopInvariant,
                        span.clone(),
                        "while loops need at least one invariant",
                    ));
                }
                let mut modified = BTreeSet::new();
                assigned_names(body, procs, &mut modified);
                for (k, inv) in invariants.iter().enumerate() {
                    out.push(assert_stmt(line_label(&format!("loop_entry{k}"), span), inv, &inv.span));
                }
                for (n, _) in &modified {
                    out.push(Stmt::new(StmtKind::Havoc(n.clone()), span.clone()));
                }
                for inv in invariants {
                    out.push(Stmt::new(StmtKind::Assume(inv.clone()), inv.span.clone()));
                }
                let mut then_branch = lower_loops(body, procs)?;
                for (k, inv) in invariants.iter().enumerate() {
                    then_branch.push(assert_stmt(line_label(&format!("loop_preserve{k}"), span), inv, &inv.span));
                }
                then_branch.push(Stmt::new(StmtKind::Assume(Expr::bool_lit(false)), span.clone()));
                out.push(Stmt::new(
                    StmtKind::If { cond: cond.clone(), then_branch, else_branch: Vec::new() },
                    span.clone(),
                ));
            }
            StmtKind::If { cond, then_branch, else_branch } => out.push(Stmt::new(
                StmtKind::If {
                    cond: cond.clone(),
                    then_branch: lower_loops(then_branch, procs)?,
                    else_branch: lower_loops(else_branch, procs)?,
                },
                span.clone(),
            )),
            StmtKind::Case(arms) => out.push(Stmt::new(
                StmtKind::Case(
                    arms.iter().map(|(g, b)| Ok((g.clone(), lower_loops(b, procs)?))).collect::<LResult<_>>()?,
                ),
                span.clone(),
            )),
            _ => out.push(s.clone()),
        }
    }
    Ok(out)
}

fn literal(i: &BigInt) -> Expr {
    if i.sign() == num_bigint::Sign::Minus {
        Expr::synthetic(ExprKind::Unary(UnOp::Neg, Box::new(Expr::int_lit(-i))))
    } else {
        Expr::int_lit(i.clone())
    }
}

/// Replaces calls by the callee body (or its contract when it has none).
pub fn inline_procedures(m: AstModule) -> LResult<AstModule> {
    let procs = procedures(&m);
    check_recursion(&m, &procs)?;
    let types = var_types(&m);
    let mut cx = Inliner { procs: &procs, types: &types, fresh: Fresh::new(used_names(&m)) };
    map_blocks(m, &mut |b, kind| cx.block(b, kind == BlockKind::Next))
}

fn var_types(m: &AstModule) -> BTreeMap<String, Type> {
    let mut out = BTreeMap::new();
    for d in &m.decls {
        if let DeclKind::Var { names, ty, .. } = &d.kind {
            for n in names {
                out.insert(n.clone(), ty.clone());
            }
        }
    }
    out
}

fn check_recursion(m: &AstModule, procs: &BTreeMap<String, ProcDecl>) -> LResult<()> {
    let callees = |p: &ProcDecl| {
        let mut out = BTreeSet::new();
        for s in p.body.iter().flatten() {
            s.walk(&mut |s| {
                if let StmtKind::Call { proc_name, .. } = &s.kind {
                    if procs.get(proc_name).is_some_and(|q| q.body.is_some()) {
                        out.insert(proc_name.clone());
                    }
                }
            });
        }
        out
    };
    fn visit(
        name: &str,
        procs: &BTreeMap<String, ProcDecl>,
        callees: &dyn Fn(&ProcDecl) -> BTreeSet<String>,
        state: &mut BTreeMap<String, u8>,
    ) -> Option<String> {
        match state.get(name) {
            Some(1) => return Some(name.to_string()),
            Some(_) => return None,
            None => {}
        }
        state.insert(name.to_string(), 1);
        for c in callees(&procs[name]) {
            if let Some(r) = visit(&c, procs, callees, state) {
                return Some(r);
            }
        }
        state.insert(name.to_string(), 2);
        None
    }
    let mut state = BTreeMap::new();
    for name in procs.keys() {
        if let Some(r) = visit(name, procs, &callees, &mut state) {
            let span = m
                .decls
                .iter()
                .find(|d| matches!(&d.kind, DeclKind::Procedure(p) if p.name == r))
                .map(|d| d.span.clone())
                .unwrap_or_else(Span::synthetic);
            return Err(Diagnostic::new(DiagKind::RecursiveProcedure, span, format!("procedure `{r}` is recursive")));
        }
    }
    Ok(())
}

struct Inliner<'a> {
    procs: &'a BTreeMap<String, ProcDecl>,
    types: &'a BTreeMap<String, Type>,
    fresh: Fresh,
}

fn decl_local(name: &str, ty: &Type, span: &Span) -> Stmt {
    Stmt::new(StmtKind::LocalVar { names: vec![name.to_string()], ty: ty.clone() }, span.clone())
}

fn assign(name: &str, primed: bool, rhs: Expr, span: &Span) -> Stmt {
    Stmt::new(
        StmtKind::Assign { lhs: Lhs { name: name.to_string(), primed, span: span.clone() }, rhs },
        span.clone(),
    )
}

impl Inliner<'_> {
    fn block(&mut self, ss: &[Stmt], next_mode: bool) -> LResult<Vec<Stmt>> {
        let mut out = Vec::new();
        for s in ss {
            match &s.kind {
                StmtKind::Call { lhs, proc_name, args } => {
                    let procs = self.procs;
                    let p = &procs[proc_name];
                    let stmts = if p.body.is_some() {
                        self.inline_body(p, lhs, args, next_mode, &s.span)?
                    } else {
                        self.inline_contract(p, lhs, args, next_mode, &s.span)
                    };
                    out.extend(stmts);
                }
                StmtKind::If { cond, then_branch, else_branch } => out.push(Stmt::new(
                    StmtKind::If {
                        cond: cond.clone(),
                        then_branch: self.block(then_branch, next_mode)?,
                        else_branch: self.block(else_branch, next_mode)?,
                    },
                    s.span.clone(),
                )),
                StmtKind::Case(arms) => out.push(Stmt::new(
                    StmtKind::Case(
                        arms.iter()
                            .map(|(g, b)| Ok((g.clone(), self.block(b, next_mode)?)))
                            .collect::<LResult<_>>()?,
                    ),
                    s.span.clone(),
                )),
                _ => out.push(s.clone()),
            }
        }
        Ok(out)
    }

    fn requires(&self, p: &ProcDecl, args: &[Expr], span: &Span) -> Vec<Stmt> {
        let mut s = Subst::default();
        for (q, a) in p.params.iter().zip(args) {
            s.vars.insert(q.name.clone(), a.clone());
        }
        let label = format!("{}_requires", p.name.replace('.', "_"));
        p.requires.iter().map(|r| assert_stmt(label.clone(), &s.expr(r), span)).collect()
    }

    fn inline_body(
        &mut self,
        p: &ProcDecl,
        lhs: &[Lhs],
        args: &[Expr],
        next_mode: bool,
        span: &Span,
    ) -> LResult<Vec<Stmt>> {
        let mut out = self.requires(p, args, span);
        let mut sub = Subst::default();
        for (q, a) in p.params.iter().zip(args) {
            let n = self.fresh.name(&q.name);
            out.push(decl_local(&n, &q.ty, span));
            out.push(assign(&n, false, a.clone(), span));
            sub.rename_var(&q.name, n);
        }
        for q in &p.returns {
            let n = self.fresh.name(&q.name);
            out.push(decl_local(&n, &q.ty, span));
            sub.rename_var(&q.name, n);
        }
        let mut copies = Vec::new();
        if next_mode {
            // State writes go to copies that are committed as primed
            // assignments after the body.
            for m in &p.modifies {
                let n = self.fresh.name(m);
                out.push(decl_local(&n, &self.types[m], span));
                out.push(assign(&n, false, Expr::ident(m.clone()), span));
                sub.rename_var(m.clone(), n.clone());
                copies.push((m.clone(), n));
            }
        }
        let body = p.body.as_ref().expect("body");
        for st in body {
            st.walk(&mut |st| {
                if let StmtKind::LocalVar { names, .. } = &st.kind {
                    for n in names {
                        let fresh = self.fresh.name(n);
                        sub.rename_var(n.clone(), fresh);
                    }
                }
            });
        }
        // Calls inside the body run in sequential mode over the copies.
        let renamed = sub.stmts(body);
        out.extend(self.block(&renamed, false)?);
        for (m, n) in copies {
            out.push(assign(&m, true, Expr::ident(n), span));
        }
        for (l, q) in lhs.iter().zip(&p.returns) {
            out.push(assign(&l.name, l.primed, Expr::ident(sub.name_of(&q.name)), &l.span));
        }
        Ok(out)
    }

    fn inline_contract(&mut self, p: &ProcDecl, lhs: &[Lhs], args: &[Expr], next_mode: bool, span: &Span) -> Vec<Stmt> {
        let mut out = self.requires(p, args, span);
        let mut sub = Subst::default();
        for (q, a) in p.params.iter().zip(args) {
            sub.vars.insert(q.name.clone(), a.clone());
            sub.old.insert(q.name.clone(), a.clone());
        }
        let mut posts = Vec::new();
        for m in &p.modifies {
            let n = self.fresh.name(m);
            out.push(decl_local(&n, &self.types[m], span));
            out.push(Stmt::new(StmtKind::Havoc(n.clone()), span.clone()));
            sub.rename_var(m.clone(), n.clone());
            sub.old.insert(m.clone(), Expr::ident(m.clone()));
            posts.push((m.clone(), n));
        }
        for q in &p.returns {
            let n = self.fresh.name(&q.name);
            out.push(decl_local(&n, &q.ty, span));
            out.push(Stmt::new(StmtKind::Havoc(n.clone()), span.clone()));
            sub.rename_var(q.name.clone(), n);
        }
        for e in &p.ensures {
            out.push(Stmt::new(StmtKind::Assume(sub.expr(e)), span.clone()));
        }
        for (m, n) in posts {
            out.push(assign(&m, next_mode, Expr::ident(n), span));
        }
        for (l, q) in lhs.iter().zip(&p.returns) {
            out.push(assign(&l.name, l.primed, Expr::ident(sub.name_of(&q.name)), &l.span));
        }
        out
    }
}

/// Replaces finite quantifiers by conjunctions or disjunctions over the
/// (deduplicated) group elements, innermost first.
pub fn ground_finite_quantifiers(m: AstModule) -> LResult<AstModule> {
    let groups: BTreeMap<String, Vec<Expr>> = m
        .decls
        .iter()
        .filter_map(|d| match &d.kind {
            DeclKind::Group { name, elems, .. } => {
                let mut uniq: Vec<Expr> = Vec::new();
                for e in elems {
                    if !uniq.contains(e) {
                        uniq.push(e.clone());
                    }
                }
                Some((name.clone(), uniq))
            }
            _ => None,
        })
        .collect();
    map_module_exprs(m, &mut |e| ground_expr(e, &groups))
}

pub fn ground_expr(e: &Expr, groups: &BTreeMap<String, Vec<Expr>>) -> LResult<Expr> {
    let mut err = None;
    let out = e.rewrite(&mut |x| {
        let ExprKind::Quant { kind, var, group: Some(g), body, .. } = &x.kind else { return x };
        let Some(elems) = groups.get(g) else {
            err.get_or_insert_with(|| {
                Diagnostic::new(DiagKind::UnknownGroup, x.span.clone(), format!("unknown group `{g}`"))
            });
            return x;
        };
        let op = if kind.is_universal() { BinOp::And } else { BinOp::Or };
        let mut parts = elems.iter().map(|el| {
            let mut s = Subst::default();
            s.vars.insert(var.clone(), el.clone());
            s.expr(body)
        });
        let mut acc = match parts.next() {
            Some(first) => first,
            None => Expr::new(ExprKind::Bool(kind.is_universal()), x.span.clone()),
        };
        for p in parts {
            acc = Expr::new(ExprKind::Binary(op, Box::new(acc), Box::new(p)), x.span.clone());
        }
        acc
    });
    match err {
        Some(d) => Err(d),
        None => Ok(out),
    }
}

/// Rewrites `case` into nested `if`/`else`; no matching guard means skip.
pub fn lower_case(m: AstModule) -> AstModule {
    map_blocks(m, &mut |b, _| Ok(lower_case_block(b))).expect("case lowering is infallible")
}

fn lower_case_block(ss: &[Stmt]) -> Vec<Stmt> {
    ss.iter()
        .map(|s| match &s.kind {
            StmtKind::Case(arms) => {
                let mut acc: Vec<Stmt> = Vec::new();
                for (g, body) in arms.iter().rev() {
                    acc = vec![Stmt::new(
                        StmtKind::If { cond: g.clone(), then_branch: lower_case_block(body), else_branch: acc },
                        s.span.clone(),
                    )];
                }
                acc.into_iter().next().unwrap_or_else(|| {
                    Stmt::new(
                        StmtKind::If { cond: Expr::bool_lit(true), then_branch: vec![], else_branch: vec![] },
                        s.span.clone(),
                    )
                })
            }
            StmtKind::If { cond, then_branch, else_branch } => Stmt::new(
                StmtKind::If {
                    cond: cond.clone(),
                    then_branch: lower_case_block(then_branch),
                    else_branch: lower_case_block(else_branch),
                },
                s.span.clone(),
            ),
            _ => s.clone(),
        })
        .collect()
}

/// Every state variable is assigned (or havocked) at most once along each
/// path through the next block.
pub fn check_primed_once(m: &AstModule) -> LResult<()> {
    for d in &m.decls {
        if let DeclKind::Next(b) = &d.kind {
            primed_once(b, &mut BTreeSet::new(), &mut BTreeSet::new())?;
        }
    }
    Ok(())
}

fn primed_once(ss: &[Stmt], locals: &mut BTreeSet<String>, assigned: &mut BTreeSet<String>) -> LResult<()> {
    for s in ss {
        let target = match &s.kind {
            StmtKind::LocalVar { names, .. } => {
                locals.extend(names.iter().cloned());
                None
            }
            StmtKind::Assign { lhs, .. } if lhs.primed => Some(lhs.name.clone()),
            StmtKind::Havoc(n) if !locals.contains(n) => Some(n.clone()),
            StmtKind::If { then_branch, else_branch, .. } => {
                let mut a = assigned.clone();
                primed_once(then_branch, &mut locals.clone(), &mut a)?;
                let mut b = assigned.clone();
                primed_once(else_branch, &mut locals.clone(), &mut b)?;
                assigned.extend(a);
                assigned.extend(b);
                None
            }
            StmtKind::Case(arms) => {
                let before = assigned.clone();
                for (_, body) in arms {
                    let mut a = before.clone();
                    primed_once(body, &mut locals.clone(), &mut a)?;
                    assigned.extend(a);
                }
                None
            }
            _ => None,
        };
        if let Some(n) = target {
            if !assigned.insert(n.clone()) {
                return Err(Diagnostic::new(
                    DiagKind::IllegalAssignment,
                    s.span.clone(),
                    format!("`{n}'` is assigned more than once in the next block"),
                ));
            }
        }
    }
    Ok(())
}
