//! n-trace self-composition for hyperproperties.

use std::collections::{BTreeMap, BTreeSet};

use crate::ast::*;
use crate::diag::{DiagKind, Diagnostic};
use crate::elab::{Subst, TypedModule};

/// Name of variable `v` in copy `j`.
pub fn copy_name(v: &str, j: u32) -> String {
    format!("{v}.{j}")
}

/// Largest arity among hyper specs; 0 when there are none.
pub fn hyper_arity(m: &TypedModule) -> u32 {
    m.hyperinvariants.iter().chain(&m.hyperaxioms).map(|s| s.arity).max().unwrap_or(0)
}

fn locals_of(stmts: &[Stmt], out: &mut BTreeSet<String>) {
    for s in stmts {
        s.walk(&mut |x| {
            if let StmtKind::LocalVar { names, .. } = &x.kind {
                out.extend(names.iter().cloned());
            }
        });
    }
}

/// `x.j` trace references become plain identifiers of copy `j`.
fn untrace(e: &Expr) -> Expr {
    e.rewrite(&mut |x| match x.kind {
        ExprKind::TraceIndexed(n, j) => Expr::new(ExprKind::Ident(copy_name(&n, j)), x.span),
        _ => x,
    })
}

/// Runs `n` copies of `m` in lockstep. Copy `j` owns variables `x.j`;
/// ordinary specs are replicated per copy as `spec.j`; hyper specs keep
/// their kind and refer to the copies directly. Procedures are dropped:
/// their calls were inlined during elaboration.
pub fn self_compose(m: &TypedModule, n: u32) -> Result<TypedModule, Vec<Diagnostic>> {
    let ast = m.to_ast();
    if n == 0 {
        return Err(vec![Diagnostic::new(DiagKind::IndexOutOfArity, ast.span.clone(), "composition arity must be at least 1")]);
    }
    for s in m.hyperinvariants.iter().chain(&m.hyperaxioms) {
        let mut worst = 0;
        s.expr.walk(&mut |e| {
            if let ExprKind::TraceIndexed(_, j) = &e.kind {
                worst = worst.max(*j);
            }
        });
        if worst > n {
            return Err(vec![Diagnostic::new(
                DiagKind::IndexOutOfArity,
                s.span.clone(),
                format!("`{}` refers to trace {worst} of a {n}-trace composition", s.name),
            )]);
        }
    }
    let mut locals = BTreeSet::new();
    locals_of(&m.init, &mut locals);
    locals_of(&m.next, &mut locals);
    let substs: BTreeMap<u32, Subst> = (1..=n)
        .map(|j| {
            let mut s = Subst::default();
            for v in m.vars.iter().map(|v| &v.name).chain(&locals) {
                s.rename_var(v.clone(), copy_name(v, j));
            }
            (j, s)
        })
        .collect();
    let copies = || substs.iter();
    let mut decls = Vec::new();
    for d in &ast.decls {
        let span = d.span.clone();
        let mut push = |kind| decls.push(Decl { kind, span: span.clone() });
        match &d.kind {
            DeclKind::Var { kind, names, ty } => {
                let names = copies().flat_map(|(j, _)| names.iter().map(move |v| copy_name(v, *j))).collect();
                push(DeclKind::Var { kind: *kind, names, ty: ty.clone() });
            }
            DeclKind::Init(b) => push(DeclKind::Init(copies().flat_map(|(_, s)| s.stmts(b)).collect())),
            DeclKind::Next(b) => push(DeclKind::Next(copies().flat_map(|(_, s)| s.stmts(b)).collect())),
            DeclKind::Invariant { name, expr } => {
                for (j, s) in copies() {
                    push(DeclKind::Invariant { name: copy_name(name, *j), expr: s.expr(expr) });
                }
            }
            DeclKind::Axiom { name, expr } => {
                for (j, s) in copies() {
                    push(DeclKind::Axiom { name: copy_name(name, *j), expr: s.expr(expr) });
                }
            }
            DeclKind::HyperInvariant { arity, name, expr } => {
                push(DeclKind::HyperInvariant { arity: *arity, name: name.clone(), expr: untrace(expr) })
            }
            DeclKind::HyperAxiom { arity, name, expr } => {
                push(DeclKind::HyperAxiom { arity: *arity, name: name.clone(), expr: untrace(expr) })
            }
            DeclKind::Procedure(_) => {}
            other => push(other.clone()),
        }
    }
    let composed = AstModule { decls, ..ast.clone() };
    TypedModule::from_lowered(composed)
}

/// Trace index of every variable of a composed module.
pub fn trace_map(composed: &TypedModule) -> BTreeMap<String, u32> {
    composed
        .vars
        .iter()
        .filter_map(|v| {
            let (_, j) = v.name.rsplit_once('.')?;
            Some((v.name.clone(), j.parse().ok()?))
        })
        .collect()
}
