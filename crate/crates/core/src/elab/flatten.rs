//! Instance flattening.
//!
//! A child instance `c` contributes its state variables, procedures, specs,
//! defines and groups under the prefix `c.`; its inputs are replaced by the
//! bound expressions and its outputs become the bound parent variables.
//! Child init blocks run before the parent's; `next(c)` splices the child's
//! next block in place.

use std::collections::BTreeMap;

use crate::ast::*;
use crate::diag::{DiagKind, Diagnostic};

use super::typecheck::SymbolInfo;
use super::Subst;

struct Flat {
    module: AstModule,
    /// Qualified names that no longer exist after flattening (ports of
    /// nested instances) and what they stand for.
    aliases: BTreeMap<String, Expr>,
}

pub fn flatten_instances(modules: &[AstModule], info: &SymbolInfo) -> Result<AstModule, Vec<Diagnostic>> {
    let by_name: BTreeMap<&str, &AstModule> = modules.iter().map(|m| (m.name.as_str(), m)).collect();
    flatten(by_name[info.main.as_str()], &by_name, info).map(|f| f.module).map_err(|d| vec![d])
}

fn flatten(m: &AstModule, by_name: &BTreeMap<&str, &AstModule>, info: &SymbolInfo) -> Result<Flat, Diagnostic> {
    let has_instances = m.decls.iter().any(|d| matches!(d.kind, DeclKind::Instance { .. }));
    if !has_instances {
        return Ok(Flat { module: m.clone(), aliases: BTreeMap::new() });
    }

    let mut shared: Vec<Decl> = Vec::new();
    let mut child_decls: Vec<Decl> = Vec::new();
    let mut child_inits: Vec<Stmt> = Vec::new();
    let mut child_nexts: BTreeMap<String, Vec<Stmt>> = BTreeMap::new();
    let mut parent_subst = Subst::default();

    for d in &m.decls {
        let DeclKind::Instance { name: inst, module, bindings } = &d.kind else { continue };
        let child_env = &info.envs[module];
        let child = flatten(by_name[module.as_str()], by_name, info)?;
        let bind: BTreeMap<&str, &Expr> = bindings.iter().map(|(p, e)| (p.as_str(), e)).collect();

        let mut s = Subst::default();
        for dd in &child.module.decls {
            match &dd.kind {
                DeclKind::Var { names, .. } => {
                    for n in names {
                        let image = match child_env.vars.get(n) {
                            Some((VarKind::Input | VarKind::Output, _)) => (*bind[n.as_str()]).clone(),
                            _ => Expr::ident(format!("{inst}.{n}")),
                        };
                        s.vars.insert(n.clone(), image);
                    }
                }
                DeclKind::Define { name, .. } => {
                    s.funs.insert(name.clone(), format!("{inst}.{name}"));
                }
                DeclKind::Procedure(p) => {
                    s.procs.insert(p.name.clone(), format!("{inst}.{}", p.name));
                }
                DeclKind::Group { name, .. } => {
                    s.groups.insert(name.clone(), format!("{inst}.{name}"));
                }
                _ => {}
            }
        }
        // Locals of the child's blocks get the prefix too, so spliced blocks
        // from sibling instances never redeclare the same name.
        for dd in &child.module.decls {
            if let DeclKind::Init(b) | DeclKind::Next(b) = &dd.kind {
                for st in b {
                    st.walk(&mut |st| {
                        if let StmtKind::LocalVar { names, .. } = &st.kind {
                            for n in names {
                                s.vars.entry(n.clone()).or_insert_with(|| Expr::ident(format!("{inst}.{n}")));
                            }
                        }
                    });
                }
            }
        }
        for (k, v) in &child.aliases {
            parent_subst.vars.insert(format!("{inst}.{k}"), s.expr(v));
        }
        for (port, e) in bindings {
            parent_subst.vars.insert(format!("{inst}.{port}"), e.clone());
        }

        for dd in &child.module.decls {
            let span = dd.span.clone();
            let kind = match &dd.kind {
                DeclKind::Type { .. }
                | DeclKind::Function { .. }
                | DeclKind::SynthFun { .. }
                | DeclKind::OracleFun { .. } => {
                    merge_shared(&mut shared, dd)?;
                    continue;
                }
                DeclKind::Var { kind, names, ty } => {
                    let names: Vec<String> = names
                        .iter()
                        .filter(|n| !matches!(child_env.vars.get(*n), Some((VarKind::Input | VarKind::Output, _))))
                        .map(|n| format!("{inst}.{n}"))
                        .collect();
                    if names.is_empty() {
                        continue;
                    }
                    DeclKind::Var { kind: *kind, names, ty: ty.clone() }
                }
                DeclKind::Define { name, params, ret, body } => {
                    let mut inner = s.clone();
                    for p in params {
                        inner.vars.remove(&p.name);
                    }
                    DeclKind::Define {
                        name: format!("{inst}.{name}"),
                        params: params.clone(),
                        ret: ret.clone(),
                        body: inner.expr(body),
                    }
                }
                DeclKind::Procedure(p) => DeclKind::Procedure(rename_proc(p, inst, &s)),
                DeclKind::Init(b) => {
                    child_inits.extend(s.stmts(b));
                    continue;
                }
                DeclKind::Next(b) => {
                    child_nexts.insert(inst.clone(), s.stmts(b));
                    continue;
                }
                DeclKind::Invariant { name, expr } => {
                    DeclKind::Invariant { name: format!("{inst}.{name}"), expr: s.expr(expr) }
                }
                DeclKind::Axiom { name, expr } => DeclKind::Axiom { name: format!("{inst}.{name}"), expr: s.expr(expr) },
                DeclKind::HyperInvariant { arity, name, expr } => {
                    DeclKind::HyperInvariant { arity: *arity, name: format!("{inst}.{name}"), expr: s.expr(expr) }
                }
                DeclKind::HyperAxiom { arity, name, expr } => {
                    DeclKind::HyperAxiom { arity: *arity, name: format!("{inst}.{name}"), expr: s.expr(expr) }
                }
                DeclKind::Group { name, ty, elems } => DeclKind::Group {
                    name: format!("{inst}.{name}"),
                    ty: ty.clone(),
                    elems: elems.iter().map(|e| s.expr(e)).collect(),
                },
                DeclKind::Instance { .. } => unreachable!("flattened child has no instances"),
            };
            child_decls.push(Decl { kind, span });
        }
    }

    let mut out = Vec::new();
    let mut saw_init = false;
    for d in &m.decls {
        let span = d.span.clone();
        let kind = match &d.kind {
            DeclKind::Instance { .. } => continue,
            DeclKind::Type { .. } | DeclKind::Function { .. } | DeclKind::SynthFun { .. } | DeclKind::OracleFun { .. } => {
                merge_shared(&mut shared, d)?;
                continue;
            }
            DeclKind::Init(b) => {
                saw_init = true;
                let mut body = std::mem::take(&mut child_inits);
                body.extend(parent_subst.stmts(b));
                DeclKind::Init(body)
            }
            DeclKind::Next(b) => DeclKind::Next(splice_next(&parent_subst.stmts(b), &child_nexts)),
            _ => subst_decl(&d.kind, &parent_subst),
        };
        out.push(Decl { kind, span });
    }
    if !saw_init && !child_inits.is_empty() {
        out.push(Decl { kind: DeclKind::Init(child_inits), span: Span::synthetic() });
    }

    // Declaration order: shared types and functions, then the parent's own
    // variables, then everything contributed by children.
    let (vars, rest): (Vec<Decl>, Vec<Decl>) = out.into_iter().partition(|d| matches!(d.kind, DeclKind::Var { .. }));
    let (child_vars, child_rest): (Vec<Decl>, Vec<Decl>) =
        child_decls.into_iter().partition(|d| matches!(d.kind, DeclKind::Var { .. }));
    let mut decls = shared;
    decls.extend(vars);
    decls.extend(child_vars);
    decls.extend(child_rest);
    decls.extend(rest);

    Ok(Flat {
        module: AstModule { name: m.name.clone(), decls, control: m.control.clone(), span: m.span.clone() },
        aliases: parent_subst.vars,
    })
}

fn merge_shared(shared: &mut Vec<Decl>, d: &Decl) -> Result<(), Diagnostic> {
    let name = |k: &DeclKind| match k {
        DeclKind::Type { name, .. }
        | DeclKind::Function { name, .. }
        | DeclKind::SynthFun { name, .. }
        | DeclKind::OracleFun { name, .. } => name.clone(),
        _ => unreachable!(),
    };
    let n = name(&d.kind);
    match shared.iter().find(|s| name(&s.kind) == n) {
        Some(existing) if existing.kind == d.kind => Ok(()),
        Some(_) => Err(Diagnostic::new(
            DiagKind::DuplicateDeclaration,
            d.span.clone(),
            format!("`{n}` is declared differently in two instantiated modules"),
        )),
        None => {
            shared.push(d.clone());
            Ok(())
        }
    }
}

fn rename_proc(p: &ProcDecl, inst: &str, s: &Subst) -> ProcDecl {
    let mut inner = s.clone();
    for q in p.params.iter().chain(&p.returns) {
        inner.vars.remove(&q.name);
    }
    ProcDecl {
        name: format!("{inst}.{}", p.name),
        params: p.params.clone(),
        returns: p.returns.clone(),
        requires: p.requires.iter().map(|e| inner.expr(e)).collect(),
        ensures: p.ensures.iter().map(|e| inner.expr(e)).collect(),
        modifies: p.modifies.iter().map(|m| inner.name_of(m)).collect(),
        body: p.body.as_ref().map(|b| inner.stmts(b)),
    }
}

fn subst_decl(k: &DeclKind, s: &Subst) -> DeclKind {
    match k {
        DeclKind::Define { name, params, ret, body } => {
            let mut inner = s.clone();
            for p in params {
                inner.vars.remove(&p.name);
            }
            DeclKind::Define { name: name.clone(), params: params.clone(), ret: ret.clone(), body: inner.expr(body) }
        }
        DeclKind::Procedure(p) => {
            let mut inner = s.clone();
            for q in p.params.iter().chain(&p.returns) {
                inner.vars.remove(&q.name);
            }
            DeclKind::Procedure(ProcDecl {
                requires: p.requires.iter().map(|e| inner.expr(e)).collect(),
                ensures: p.ensures.iter().map(|e| inner.expr(e)).collect(),
                body: p.body.as_ref().map(|b| inner.stmts(b)),
                ..p.clone()
            })
        }
        DeclKind::Invariant { name, expr } => DeclKind::Invariant { name: name.clone(), expr: s.expr(expr) },
        DeclKind::Axiom { name, expr } => DeclKind::Axiom { name: name.clone(), expr: s.expr(expr) },
        DeclKind::HyperInvariant { arity, name, expr } => {
            DeclKind::HyperInvariant { arity: *arity, name: name.clone(), expr: s.expr(expr) }
        }
        DeclKind::HyperAxiom { arity, name, expr } => {
            DeclKind::HyperAxiom { arity: *arity, name: name.clone(), expr: s.expr(expr) }
        }
        DeclKind::Group { name, ty, elems } => {
            DeclKind::Group { name: name.clone(), ty: ty.clone(), elems: elems.iter().map(|e| s.expr(e)).collect() }
        }
        other => other.clone(),
    }
}

fn splice_next(stmts: &[Stmt], child_nexts: &BTreeMap<String, Vec<Stmt>>) -> Vec<Stmt> {
    let mut out = Vec::new();
    for s in stmts {
        let kind = match &s.kind {
            StmtKind::NextInstance(i) => {
                out.extend(child_nexts.get(i).cloned().unwrap_or_default());
                continue;
            }
            StmtKind::If { cond, then_branch, else_branch } => StmtKind::If {
                cond: cond.clone(),
                then_branch: splice_next(then_branch, child_nexts),
                else_branch: splice_next(else_branch, child_nexts),
            },
            StmtKind::Case(arms) => {
                StmtKind::Case(arms.iter().map(|(g, b)| (g.clone(), splice_next(b, child_nexts))).collect())
            }
            StmtKind::For { var, lo, hi, body } => {
                StmtKind::For { var: var.clone(), lo: lo.clone(), hi: hi.clone(), body: splice_next(body, child_nexts) }
            }
            StmtKind::While { cond, invariants, body } => StmtKind::While {
                cond: cond.clone(),
                invariants: invariants.clone(),
                body: splice_next(body, child_nexts),
            },
            other => other.clone(),
        };
        out.push(Stmt::new(kind, s.span.clone()));
    }
    out
}
