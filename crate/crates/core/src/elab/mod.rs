//! Typechecking and lowering of parsed modules into one flat, loop-free,
//! call-free, quantifier-grounded transition system.

pub mod flatten;
pub mod lower;
pub mod typecheck;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::ast::*;
use crate::diag::Diagnostic;
use crate::term::{EnumDef, Sort};

pub use flatten::flatten_instances;
pub use lower::{
    check_primed_once, eliminate_loops, expand_defines, ground_finite_quantifiers, inline_procedures, lower_case,
};
pub use typecheck::{typecheck, ModuleEnv, SymbolInfo};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FunKind {
    Uninterpreted,
    Define(Expr),
    Synth(Option<Vec<Production>>),
    /// Name of the oracle executable.
    Oracle(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunSig {
    pub name: String,
    pub params: Vec<(String, Sort)>,
    pub ret: Sort,
    pub kind: FunKind,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VarInfo {
    pub name: String,
    pub sort: Sort,
    pub kind: VarKind,
    /// Dotted instance path owning the variable; empty for the main module.
    pub owner: String,
}

/// A named invariant or axiom; `arity` is 1 for the non-hyper forms.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Spec {
    pub name: String,
    pub arity: u32,
    pub expr: Expr,
    pub span: Span,
}

/// The fully elaborated main module.
#[derive(Clone, Debug)]
pub struct TypedModule {
    pub name: String,
    pub env: ModuleEnv,
    pub vars: Vec<VarInfo>,
    pub functions: Vec<FunSig>,
    pub init: Vec<Stmt>,
    pub next: Vec<Stmt>,
    /// Procedures with loops lowered and calls inlined, kept for `verify`.
    pub procedures: Vec<ProcDecl>,
    pub invariants: Vec<Spec>,
    pub hyperinvariants: Vec<Spec>,
    pub axioms: Vec<Spec>,
    pub hyperaxioms: Vec<Spec>,
    pub control: Vec<(Command, Span)>,
    ast: AstModule,
}

impl TypedModule {
    /// The lowered module as surface syntax; printing it gives reparseable text.
    pub fn to_ast(&self) -> &AstModule {
        &self.ast
    }

    pub fn var(&self, name: &str) -> Option<&VarInfo> {
        self.vars.iter().find(|v| v.name == name)
    }

    pub fn function(&self, name: &str) -> Option<&FunSig> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn procedure(&self, name: &str) -> Option<&ProcDecl> {
        self.procedures.iter().find(|p| p.name == name)
    }

    pub fn enums(&self) -> &[Arc<EnumDef>] {
        &self.env.enums
    }

    pub fn synth_funs(&self) -> impl Iterator<Item = &FunSig> {
        self.functions.iter().filter(|f| matches!(f.kind, FunKind::Synth(_)))
    }

    pub fn oracle_funs(&self) -> impl Iterator<Item = &FunSig> {
        self.functions.iter().filter(|f| matches!(f.kind, FunKind::Oracle(_)))
    }

    /// Builds the typed view of an already lowered single module.
    pub fn from_lowered(ast: AstModule) -> Result<TypedModule, Vec<Diagnostic>> {
        let info = typecheck(std::slice::from_ref(&ast))?;
        let env = info.envs[&ast.name].clone();
        let vars = env
            .var_order
            .iter()
            .map(|n| {
                let (kind, sort) = env.vars[n].clone();
                let owner = n.rsplit_once('.').map(|(o, _)| o.to_string()).unwrap_or_default();
                VarInfo { name: n.clone(), sort, kind, owner }
            })
            .collect();
        let mut tm = TypedModule {
            name: ast.name.clone(),
            functions: env.funs.values().cloned().collect(),
            env,
            vars,
            init: Vec::new(),
            next: Vec::new(),
            procedures: Vec::new(),
            invariants: Vec::new(),
            hyperinvariants: Vec::new(),
            axioms: Vec::new(),
            hyperaxioms: Vec::new(),
            control: ast.control.as_ref().map(|c| c.commands.clone()).unwrap_or_default(),
            ast: AstModule { decls: Vec::new(), ..ast.clone() },
        };
        for d in &ast.decls {
            let spec = |name: &String, arity: u32, expr: &Expr| Spec {
                name: name.clone(),
                arity,
                expr: expr.clone(),
                span: d.span.clone(),
            };
            match &d.kind {
                DeclKind::Init(b) => tm.init = b.clone(),
                DeclKind::Next(b) => tm.next = b.clone(),
                DeclKind::Procedure(p) => tm.procedures.push(p.clone()),
                DeclKind::Invariant { name, expr } => tm.invariants.push(spec(name, 1, expr)),
                DeclKind::Axiom { name, expr } => tm.axioms.push(spec(name, 1, expr)),
                DeclKind::HyperInvariant { arity, name, expr } => tm.hyperinvariants.push(spec(name, *arity, expr)),
                DeclKind::HyperAxiom { arity, name, expr } => tm.hyperaxioms.push(spec(name, *arity, expr)),
                _ => {}
            }
        }
        tm.ast = ast;
        Ok(tm)
    }
}

/// Runs the whole pipeline: typecheck, flatten, expand defines, lower loops,
/// inline calls, ground finite quantifiers, lower case, check primes.
pub fn elaborate(modules: &[AstModule]) -> Result<TypedModule, Vec<Diagnostic>> {
    let info = typecheck(modules)?;
    let flat = flatten_instances(modules, &info)?;
    let lowered = lower_flat(flat)?;
    TypedModule::from_lowered(lowered)
}

/// The lowering passes applied after flattening.
pub fn lower_flat(flat: AstModule) -> Result<AstModule, Vec<Diagnostic>> {
    let m = expand_defines(flat).map_err(|d| vec![d])?;
    let m = eliminate_loops(m).map_err(|d| vec![d])?;
    let m = inline_procedures(m).map_err(|d| vec![d])?;
    let m = ground_finite_quantifiers(m).map_err(|d| vec![d])?;
    let m = lower_case(m);
    check_primed_once(&m).map_err(|d| vec![d])?;
    Ok(m)
}

/// Simultaneous, capture-avoiding renaming over expressions and statements.
#[derive(Clone, Debug, Default)]
pub struct Subst {
    /// Free identifiers (and assignment targets, when the image is an identifier).
    pub vars: BTreeMap<String, Expr>,
    /// Replacement for `old(x)`.
    pub old: BTreeMap<String, Expr>,
    pub funs: BTreeMap<String, String>,
    pub procs: BTreeMap<String, String>,
    pub groups: BTreeMap<String, String>,
    pub instances: BTreeMap<String, String>,
}

pub fn free_idents(e: &Expr, out: &mut BTreeSet<String>) {
    e.walk(&mut |x| match &x.kind {
        ExprKind::Ident(n) | ExprKind::Old(n) | ExprKind::Primed(n) | ExprKind::TraceIndexed(n, _) => {
            out.insert(n.clone());
        }
        _ => {}
    });
}

fn fresh_binder(var: &str, avoid: &BTreeSet<String>) -> String {
    (1..).map(|i| format!("{var}_{i}")).find(|c| !avoid.contains(c)).unwrap()
}

impl Subst {
    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
            && self.old.is_empty()
            && self.funs.is_empty()
            && self.procs.is_empty()
            && self.groups.is_empty()
            && self.instances.is_empty()
    }

    pub fn rename_var(&mut self, from: impl Into<String>, to: impl Into<String>) {
        self.vars.insert(from.into(), Expr::ident(to));
    }

    pub fn name_of(&self, n: &str) -> String {
        match self.vars.get(n).map(|e| &e.kind) {
            Some(ExprKind::Ident(m)) => m.clone(),
            _ => n.to_string(),
        }
    }

    /// A copy of `self` with `var` bound; renames the binder when an image
    /// would capture it. Returns the binder's new name.
    fn under_binder(&self, var: &str) -> (Subst, String) {
        let mut inner = self.clone();
        inner.vars.remove(var);
        let mut images = BTreeSet::new();
        for e in inner.vars.values().chain(inner.old.values()) {
            free_idents(e, &mut images);
        }
        if images.contains(var) {
            let mut avoid = images;
            avoid.extend(inner.vars.keys().cloned());
            let v = fresh_binder(var, &avoid);
            inner.rename_var(var, v.clone());
            (inner, v)
        } else {
            (inner, var.to_string())
        }
    }

    pub fn expr(&self, e: &Expr) -> Expr {
        if self.is_empty() {
            return e.clone();
        }
        let b = |x: &Expr| Box::new(self.expr(x));
        let kind = match &e.kind {
            ExprKind::Ident(n) => match self.vars.get(n) {
                Some(img) => return img.clone(),
                None => e.kind.clone(),
            },
            ExprKind::Primed(n) => ExprKind::Primed(self.name_of(n)),
            ExprKind::TraceIndexed(n, i) => ExprKind::TraceIndexed(self.name_of(n), *i),
            ExprKind::Old(n) => match self.old.get(n) {
                Some(img) => return img.clone(),
                None => ExprKind::Old(self.name_of(n)),
            },
            ExprKind::Unary(op, x) => ExprKind::Unary(*op, b(x)),
            ExprKind::Binary(op, x, y) => ExprKind::Binary(*op, b(x), b(y)),
            ExprKind::Ite(c, t, f) => ExprKind::Ite(b(c), b(t), b(f)),
            ExprKind::Apply(f, args) => ExprKind::Apply(
                self.funs.get(f).cloned().unwrap_or_else(|| f.clone()),
                args.iter().map(|a| self.expr(a)).collect(),
            ),
            ExprKind::Select(a, i) => ExprKind::Select(b(a), b(i)),
            ExprKind::Store(a, i, v) => ExprKind::Store(b(a), b(i), b(v)),
            ExprKind::Extract { expr, hi, lo } => ExprKind::Extract { expr: b(expr), hi: *hi, lo: *lo },
            ExprKind::Quant { kind, var, ty, group, body } => {
                let (inner, var) = self.under_binder(var);
                ExprKind::Quant {
                    kind: *kind,
                    var,
                    ty: ty.clone(),
                    group: group.as_ref().map(|g| self.groups.get(g).cloned().unwrap_or_else(|| g.clone())),
                    body: Box::new(inner.expr(body)),
                }
            }
            ExprKind::Bool(_) | ExprKind::Int(_) | ExprKind::Real(_) | ExprKind::BitVec { .. } => e.kind.clone(),
        };
        Expr::new(kind, e.span.clone())
    }

    fn lhs(&self, l: &Lhs) -> Lhs {
        Lhs { name: self.name_of(&l.name), primed: l.primed, span: l.span.clone() }
    }

    pub fn stmts(&self, ss: &[Stmt]) -> Vec<Stmt> {
        ss.iter().map(|s| self.stmt(s)).collect()
    }

    pub fn stmt(&self, s: &Stmt) -> Stmt {
        let kind = match &s.kind {
            StmtKind::LocalVar { names, ty } => {
                StmtKind::LocalVar { names: names.iter().map(|n| self.name_of(n)).collect(), ty: ty.clone() }
            }
            StmtKind::Assign { lhs, rhs } => StmtKind::Assign { lhs: self.lhs(lhs), rhs: self.expr(rhs) },
            StmtKind::Havoc(n) => StmtKind::Havoc(self.name_of(n)),
            StmtKind::Assert { label, expr } => StmtKind::Assert { label: label.clone(), expr: self.expr(expr) },
            StmtKind::Assume(e) => StmtKind::Assume(self.expr(e)),
            StmtKind::If { cond, then_branch, else_branch } => StmtKind::If {
                cond: self.expr(cond),
                then_branch: self.stmts(then_branch),
                else_branch: self.stmts(else_branch),
            },
            StmtKind::Case(arms) => {
                StmtKind::Case(arms.iter().map(|(g, body)| (self.expr(g), self.stmts(body))).collect())
            }
            StmtKind::For { var, lo, hi, body } => {
                let (inner, v) = self.under_binder(var);
                StmtKind::For { var: v, lo: self.expr(lo), hi: self.expr(hi), body: inner.stmts(body) }
            }
            StmtKind::While { cond, invariants, body } => StmtKind::While {
                cond: self.expr(cond),
                invariants: invariants.iter().map(|i| self.expr(i)).collect(),
                body: self.stmts(body),
            },
            StmtKind::Call { lhs, proc_name, args } => StmtKind::Call {
                lhs: lhs.iter().map(|l| self.lhs(l)).collect(),
                proc_name: self.procs.get(proc_name).cloned().unwrap_or_else(|| proc_name.clone()),
                args: args.iter().map(|a| self.expr(a)).collect(),
            },
            StmtKind::NextInstance(i) => {
                StmtKind::NextInstance(self.instances.get(i).cloned().unwrap_or_else(|| i.clone()))
            }
        };
        Stmt::new(kind, s.span.clone())
    }
}

/// Every name bound anywhere in the module: variables, locals, parameters,
/// functions, procedures, groups, specs and quantifier binders.
pub fn used_names(m: &AstModule) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    let expr = |e: &Expr, out: &mut BTreeSet<String>| {
        free_idents(e, out);
        e.walk(&mut |x| {
            if let ExprKind::Quant { var, .. } = &x.kind {
                out.insert(var.clone());
            }
        });
    };
    let stmts = |ss: &[Stmt], out: &mut BTreeSet<String>| {
        for s in ss {
            s.walk(&mut |s| {
                match &s.kind {
                    StmtKind::LocalVar { names, .. } => out.extend(names.iter().cloned()),
                    StmtKind::For { var, .. } => {
                        out.insert(var.clone());
                    }
                    StmtKind::Assign { lhs, .. } => {
                        out.insert(lhs.name.clone());
                    }
                    _ => {}
                }
                for e in s.exprs() {
                    expr(e, out);
                }
            });
        }
    };
    for d in &m.decls {
        match &d.kind {
            DeclKind::Type { name, def } => {
                out.insert(name.clone());
                if let Some(Type::Enum(vs)) = def {
                    out.extend(vs.iter().cloned());
                }
            }
            DeclKind::Var { names, .. } => out.extend(names.iter().cloned()),
            DeclKind::Function { name, params, .. }
            | DeclKind::SynthFun { name, params, .. }
            | DeclKind::OracleFun { name, params, .. } => {
                out.insert(name.clone());
                out.extend(params.iter().map(|p| p.name.clone()));
            }
            DeclKind::Define { name, params, body, .. } => {
                out.insert(name.clone());
                out.extend(params.iter().map(|p| p.name.clone()));
                free_idents(body, &mut out);
            }
            DeclKind::Procedure(p) => {
                out.insert(p.name.clone());
                out.extend(p.params.iter().chain(&p.returns).map(|q| q.name.clone()));
                if let Some(b) = &p.body {
                    stmts(b, &mut out);
                }
            }
            DeclKind::Init(b) | DeclKind::Next(b) => stmts(b, &mut out),
            DeclKind::Instance { name, .. }
            | DeclKind::Invariant { name, .. }
            | DeclKind::Axiom { name, .. }
            | DeclKind::HyperInvariant { name, .. }
            | DeclKind::HyperAxiom { name, .. }
            | DeclKind::Group { name, .. } => {
                out.insert(name.clone());
            }
        }
    }
    out
}

/// Generates names of the form `base_N` that collide with nothing in `used`.
#[derive(Debug, Default)]
pub struct Fresh {
    used: BTreeSet<String>,
    counter: u32,
}

impl Fresh {
    pub fn new(used: BTreeSet<String>) -> Self {
        Fresh { used, counter: 0 }
    }

    pub fn name(&mut self, base: &str) -> String {
        let base = base.replace('.', "_");
        loop {
            self.counter += 1;
            let cand = format!("{base}_{}", self.counter);
            if self.used.insert(cand.clone()) {
                return cand;
            }
        }
    }
}
