//! Name resolution, kind rules and type checking over all modules of a file.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::ast::*;
use crate::diag::{DiagKind, Diagnostic};
use crate::term::{EnumDef, Sort};

use super::{FunKind, FunSig};

/// Declarations of one module with all types resolved.
#[derive(Clone, Debug, Default)]
pub struct ModuleEnv {
    pub name: String,
    pub types: BTreeMap<String, Sort>,
    pub enums: Vec<Arc<EnumDef>>,
    pub uninterp: Vec<String>,
    pub vars: BTreeMap<String, (VarKind, Sort)>,
    /// Declaration order of `vars`.
    pub var_order: Vec<String>,
    pub funs: BTreeMap<String, FunSig>,
    pub procs: BTreeMap<String, ProcDecl>,
    pub groups: BTreeMap<String, (Sort, Vec<Expr>)>,
    pub instances: BTreeMap<String, String>,
    pub variants: BTreeMap<String, (Arc<EnumDef>, usize)>,
}

/// Result of a successful typecheck: one environment per module.
#[derive(Clone, Debug, Default)]
pub struct SymbolInfo {
    pub envs: BTreeMap<String, ModuleEnv>,
    pub main: String,
}

impl SymbolInfo {
    pub fn main_env(&self) -> &ModuleEnv {
        &self.envs[&self.main]
    }
}

fn diag(kind: DiagKind, span: &Span, msg: impl Into<String>) -> Diagnostic {
    Diagnostic::new(kind, span.clone(), msg)
}

pub fn resolve_type(types: &BTreeMap<String, Sort>, t: &Type) -> Result<Sort, String> {
    Ok(match t {
        Type::Bool => Sort::Bool,
        Type::Int => Sort::Int,
        Type::Real => Sort::Real,
        Type::BitVec(w) => Sort::BitVec(*w),
        Type::Array(i, e) => Sort::Array(Box::new(resolve_type(types, i)?), Box::new(resolve_type(types, e)?)),
        Type::Enum(_) => return Err("enum types must be declared with `type T = enum { ... }`".into()),
        Type::Named(n) => types.get(n).cloned().ok_or_else(|| format!("unknown type `{n}`"))?,
    })
}

/// Chooses the module to verify: `main`, or the only module.
pub fn select_main(modules: &[AstModule]) -> Result<String, Diagnostic> {
    if modules.iter().any(|m| m.name == "main") {
        return Ok("main".into());
    }
    match modules {
        [only] => Ok(only.name.clone()),
        [] => Err(diag(DiagKind::NoMainModule, &Span::synthetic(), "no modules")),
        [first, ..] => Err(diag(DiagKind::NoMainModule, &first.span, "several modules and none is named `main`")),
    }
}

pub fn typecheck(modules: &[AstModule]) -> Result<SymbolInfo, Vec<Diagnostic>> {
    let mut diags = Vec::new();
    let main = select_main(modules).map_err(|d| vec![d])?;
    let mut seen = BTreeSet::new();
    for m in modules {
        if !seen.insert(m.name.clone()) {
            diags.push(diag(DiagKind::DuplicateDeclaration, &m.span, format!("module `{}` declared twice", m.name)));
        }
    }
    check_instance_cycles(modules, &mut diags);
    if !diags.is_empty() {
        return Err(diags);
    }

    let mut envs = BTreeMap::new();
    for m in modules {
        envs.insert(m.name.clone(), collect_env(m, &mut diags));
    }
    let info = SymbolInfo { envs, main };
    for m in modules {
        Checker { info: &info, env: &info.envs[&m.name], diags: &mut diags }.module(m);
    }
    if diags.is_empty() {
        Ok(info)
    } else {
        Err(diags)
    }
}

fn check_instance_cycles(modules: &[AstModule], diags: &mut Vec<Diagnostic>) {
    let by_name: BTreeMap<&str, &AstModule> = modules.iter().map(|m| (m.name.as_str(), m)).collect();
    // 0 = unvisited, 1 = on stack, 2 = done
    let mut state: BTreeMap<&str, u8> = BTreeMap::new();
    fn dfs<'a>(
        m: &'a AstModule,
        by_name: &BTreeMap<&str, &'a AstModule>,
        state: &mut BTreeMap<&'a str, u8>,
        diags: &mut Vec<Diagnostic>,
    ) {
        state.insert(&m.name, 1);
        for d in &m.decls {
            if let DeclKind::Instance { module, .. } = &d.kind {
                match (state.get(module.as_str()).copied(), by_name.get(module.as_str())) {
                    (Some(1), _) => diags.push(diag(
                        DiagKind::CyclicInstantiation,
                        &d.span,
                        format!("module `{}` instantiates `{module}`, which is already being instantiated", m.name),
                    )),
                    (None, Some(child)) => dfs(child, by_name, state, diags),
                    _ => {}
                }
            }
        }
        state.insert(&m.name, 2);
    }
    for m in modules {
        if !state.contains_key(m.name.as_str()) {
            dfs(m, &by_name, &mut state, diags);
        }
    }
}

fn collect_env(m: &AstModule, diags: &mut Vec<Diagnostic>) -> ModuleEnv {
    let mut env = ModuleEnv { name: m.name.clone(), ..Default::default() };
    let mut specs = BTreeSet::new();
    let (mut inits, mut nexts) = (0, 0);
    let dup = |diags: &mut Vec<Diagnostic>, span: &Span, what: &str, name: &str| {
        diags.push(diag(DiagKind::DuplicateDeclaration, span, format!("{what} `{name}` is already declared")));
    };
    let resolve = |env: &ModuleEnv, diags: &mut Vec<Diagnostic>, t: &Type, span: &Span| -> Sort {
        resolve_type(&env.types, t).unwrap_or_else(|msg| {
            diags.push(diag(DiagKind::UnknownIdentifier, span, msg));
            Sort::Bool
        })
    };
    for d in &m.decls {
        let span = &d.span;
        match &d.kind {
            DeclKind::Type { name, def } => {
                if env.types.contains_key(name) {
                    dup(diags, span, "type", name);
                    continue;
                }
                let sort = match def {
                    None => {
                        env.uninterp.push(name.clone());
                        Sort::Uninterp(Arc::from(name.as_str()))
                    }
                    Some(Type::Enum(variants)) => {
                        let def = Arc::new(EnumDef { name: name.clone(), variants: variants.clone() });
                        for (i, v) in variants.iter().enumerate() {
                            if env.variants.contains_key(v) || env.vars.contains_key(v) {
                                dup(diags, span, "enum variant", v);
                            } else {
                                env.variants.insert(v.clone(), (def.clone(), i));
                            }
                        }
                        env.enums.push(def.clone());
                        Sort::Enum(def)
                    }
                    Some(t) => resolve(&env, diags, t, span),
                };
                env.types.insert(name.clone(), sort);
            }
            DeclKind::Var { kind, names, ty } => {
                let sort = resolve(&env, diags, ty, span);
                for n in names {
                    if env.vars.contains_key(n) || env.variants.contains_key(n) || env.instances.contains_key(n) {
                        dup(diags, span, "variable", n);
                    } else {
                        env.vars.insert(n.clone(), (*kind, sort.clone()));
                        env.var_order.push(n.clone());
                    }
                }
            }
            DeclKind::Function { name, params, ret }
            | DeclKind::Define { name, params, ret, .. }
            | DeclKind::SynthFun { name, params, ret, .. }
            | DeclKind::OracleFun { name, params, ret, .. } => {
                if env.funs.contains_key(name) {
                    dup(diags, span, "function", name);
                    continue;
                }
                let params = params.iter().map(|p| (p.name.clone(), resolve(&env, diags, &p.ty, span))).collect();
                let ret = resolve(&env, diags, ret, span);
                let kind = match &d.kind {
                    DeclKind::Function { .. } => FunKind::Uninterpreted,
                    DeclKind::Define { body, .. } => FunKind::Define(body.clone()),
                    DeclKind::SynthFun { grammar, .. } => FunKind::Synth(grammar.clone()),
                    DeclKind::OracleFun { binary, .. } => FunKind::Oracle(binary.clone()),
                    _ => unreachable!(),
                };
                env.funs.insert(name.clone(), FunSig { name: name.clone(), params, ret, kind });
            }
            DeclKind::Procedure(p) => {
                if env.procs.contains_key(&p.name) {
                    dup(diags, span, "procedure", &p.name);
                } else {
                    env.procs.insert(p.name.clone(), p.clone());
                }
            }
            DeclKind::Init(_) => {
                inits += 1;
                if inits > 1 {
                    dup(diags, span, "block", "init");
                }
            }
            DeclKind::Next(_) => {
                nexts += 1;
                if nexts > 1 {
                    dup(diags, span, "block", "next");
                }
            }
            DeclKind::Instance { name, module, .. } => {
                if env.vars.contains_key(name) || env.instances.contains_key(name) {
                    dup(diags, span, "instance", name);
                } else {
                    env.instances.insert(name.clone(), module.clone());
                }
            }
            DeclKind::Invariant { name, .. }
            | DeclKind::Axiom { name, .. }
            | DeclKind::HyperInvariant { name, .. }
            | DeclKind::HyperAxiom { name, .. } => {
                if !specs.insert(name.clone()) {
                    dup(diags, span, "specification", name);
                }
            }
            DeclKind::Group { name, ty, elems } => {
                if env.groups.contains_key(name) {
                    dup(diags, span, "group", name);
                } else {
                    let sort = resolve(&env, diags, ty, span);
                    env.groups.insert(name.clone(), (sort, elems.clone()));
                }
            }
        }
    }
    env
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Mode {
    Init,
    Next,
    Proc,
    /// Expression-only context (specs, defines, contracts, bindings).
    Pure,
}

#[derive(Clone)]
struct Scope<'p> {
    locals: Vec<(String, Sort)>,
    readonly: BTreeSet<String>,
    mode: Mode,
    hyper: Option<u32>,
    /// Names allowed inside `old(..)`; `None` outside ensures clauses.
    old_ok: Option<BTreeSet<String>>,
    unbounded_quant_ok: bool,
    proc: Option<&'p ProcDecl>,
}

impl<'p> Scope<'p> {
    fn new(mode: Mode) -> Self {
        Scope {
            locals: Vec::new(),
            readonly: BTreeSet::new(),
            mode,
            hyper: None,
            old_ok: None,
            unbounded_quant_ok: false,
            proc: None,
        }
    }

    fn local(&self, n: &str) -> Option<&Sort> {
        self.locals.iter().rev().find(|(l, _)| l == n).map(|(_, s)| s)
    }
}

struct Checker<'a> {
    info: &'a SymbolInfo,
    env: &'a ModuleEnv,
    diags: &'a mut Vec<Diagnostic>,
}

type CResult<T> = Result<T, Diagnostic>;

fn sort_name(s: &Sort) -> String {
    match s {
        Sort::Bool => "boolean".into(),
        Sort::Int => "integer".into(),
        Sort::Real => "real".into(),
        Sort::BitVec(w) => format!("bv{w}"),
        Sort::Array(i, e) => format!("[{}]{}", sort_name(i), sort_name(e)),
        Sort::Uninterp(n) => n.to_string(),
        Sort::Enum(d) => d.name.clone(),
    }
}

fn mismatch(span: &Span, expected: &str, found: &Sort) -> Diagnostic {
    diag(DiagKind::TypeMismatch, span, format!("expected {expected}, found {}", sort_name(found)))
}

impl<'a> Checker<'a> {
    fn resolve(&self, t: &Type, span: &Span) -> CResult<Sort> {
        resolve_type(&self.env.types, t).map_err(|m| diag(DiagKind::UnknownIdentifier, span, m))
    }

    /// Looks a module-level variable up, following `inst.var` paths.
    fn module_var(&self, name: &str) -> Option<(VarKind, Sort)> {
        lookup_var(self.info, self.env, name)
    }

    fn expect(&mut self, e: &Expr, sc: &Scope, want: &Sort) -> CResult<()> {
        let got = self.expr(e, sc)?;
        if &got != want {
            return Err(mismatch(&e.span, &sort_name(want), &got));
        }
        Ok(())
    }

    fn report(&mut self, r: CResult<()>) {
        if let Err(d) = r {
            self.diags.push(d);
        }
    }

    fn module(&mut self, m: &AstModule) {
        for d in &m.decls {
            let r = self.decl(d);
            self.report(r);
        }
        if let Some(c) = &m.control {
            self.control(c);
        }
    }

    fn decl(&mut self, d: &Decl) -> CResult<()> {
        match &d.kind {
            DeclKind::Define { params, ret, body, .. } => {
                let mut sc = Scope::new(Mode::Pure);
                for p in params {
                    sc.locals.push((p.name.clone(), self.resolve(&p.ty, &d.span)?));
                }
                let ret = self.resolve(ret, &d.span)?;
                self.expect(body, &sc, &ret)
            }
            DeclKind::SynthFun { params, grammar: Some(prods), .. } => {
                let mut sc = Scope::new(Mode::Pure);
                for p in params {
                    sc.locals.push((p.name.clone(), self.resolve(&p.ty, &d.span)?));
                }
                for p in prods {
                    sc.locals.push((p.nonterminal.clone(), self.resolve(&p.ty, &d.span)?));
                }
                for p in prods {
                    let want = self.resolve(&p.ty, &d.span)?;
                    for r in &p.rules {
                        self.expect(r, &sc, &want)?;
                    }
                }
                Ok(())
            }
            DeclKind::Procedure(p) => self.procedure(p, &d.span),
            DeclKind::Init(b) => {
                let mut sc = Scope::new(Mode::Init);
                self.block(b, &mut sc);
                Ok(())
            }
            DeclKind::Next(b) => {
                let mut sc = Scope::new(Mode::Next);
                self.block(b, &mut sc);
                Ok(())
            }
            DeclKind::Instance { module, bindings, .. } => self.instance(module, bindings, &d.span),
            DeclKind::Invariant { expr, .. } => self.expect(expr, &Scope::new(Mode::Pure), &Sort::Bool),
            DeclKind::Axiom { expr, .. } => {
                let mut sc = Scope::new(Mode::Pure);
                sc.unbounded_quant_ok = true;
                self.expect(expr, &sc, &Sort::Bool)
            }
            DeclKind::HyperInvariant { arity, expr, .. } | DeclKind::HyperAxiom { arity, expr, .. } => {
                if *arity == 0 {
                    return Err(diag(DiagKind::IndexOutOfArity, &d.span, "hyper arity must be at least 1"));
                }
                let mut sc = Scope::new(Mode::Pure);
                sc.hyper = Some(*arity);
                sc.unbounded_quant_ok = matches!(d.kind, DeclKind::HyperAxiom { .. });
                self.expect(expr, &sc, &Sort::Bool)
            }
            DeclKind::Group { name, elems, .. } => {
                let (sort, _) = &self.env.groups[name];
                let sc = Scope::new(Mode::Pure);
                for e in elems {
                    let ok = e.is_literal()
                        || matches!(&e.kind, ExprKind::Ident(n)
                            if self.env.variants.contains_key(n)
                                || matches!(self.env.vars.get(n), Some((VarKind::Const, _))));
                    if !ok {
                        return Err(diag(
                            DiagKind::TypeMismatch,
                            &e.span,
                            "group elements must be literals or constants",
                        ));
                    }
                    self.expect(e, &sc, &sort.clone())?;
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    fn instance(&mut self, module: &str, bindings: &[(String, Expr)], span: &Span) -> CResult<()> {
        let child = self
            .info
            .envs
            .get(module)
            .ok_or_else(|| diag(DiagKind::UnknownIdentifier, span, format!("unknown module `{module}`")))?;
        let mut bound = BTreeSet::new();
        for (port, e) in bindings {
            let Some((kind, sort)) = child.vars.get(port) else {
                return Err(diag(DiagKind::UnboundPort, &e.span, format!("`{module}` has no port `{port}`")));
            };
            if !bound.insert(port.clone()) {
                return Err(diag(DiagKind::DuplicateDeclaration, &e.span, format!("port `{port}` bound twice")));
            }
            match kind {
                VarKind::Input => self.expect(e, &Scope::new(Mode::Pure), sort)?,
                VarKind::Output => {
                    let ExprKind::Ident(target) = &e.kind else {
                        return Err(diag(DiagKind::IllegalAssignment, &e.span, "output ports bind to variables"));
                    };
                    match self.env.vars.get(target) {
                        Some((VarKind::Var | VarKind::Output, s)) if s == sort => {}
                        Some((VarKind::Var | VarKind::Output, s)) => return Err(mismatch(&e.span, &sort_name(sort), s)),
                        _ => {
                            return Err(diag(
                                DiagKind::IllegalAssignment,
                                &e.span,
                                format!("output port `{port}` must bind to a state variable"),
                            ))
                        }
                    }
                }
                _ => {
                    return Err(diag(DiagKind::UnboundPort, &e.span, format!("`{port}` is not an input or output port")))
                }
            }
        }
        for n in &child.var_order {
            if matches!(child.vars[n], (VarKind::Input, _)) && !bound.contains(n) {
                return Err(diag(DiagKind::UnboundPort, span, format!("input port `{n}` of `{module}` is not bound")));
            }
        }
        Ok(())
    }

    fn procedure(&mut self, p: &ProcDecl, span: &Span) -> CResult<()> {
        let mut sc = Scope::new(Mode::Pure);
        sc.proc = Some(p);
        for q in &p.params {
            sc.locals.push((q.name.clone(), self.resolve(&q.ty, span)?));
            sc.readonly.insert(q.name.clone());
        }
        for m in &p.modifies {
            match self.env.vars.get(m) {
                Some((VarKind::Var | VarKind::Output, _)) => {}
                Some(_) => {
                    return Err(diag(DiagKind::IllegalAssignment, span, format!("`{m}` cannot be modified")));
                }
                None => return Err(diag(DiagKind::UnknownIdentifier, span, format!("unknown variable `{m}`"))),
            }
        }
        for r in &p.requires {
            self.expect(r, &sc, &Sort::Bool)?;
        }
        for q in &p.returns {
            sc.locals.push((q.name.clone(), self.resolve(&q.ty, span)?));
        }
        let mut ens = sc.clone();
        ens.old_ok = Some(p.modifies.iter().chain(p.params.iter().map(|q| &q.name)).cloned().collect());
        for e in &p.ensures {
            self.expect(e, &ens, &Sort::Bool)?;
        }
        if let Some(body) = &p.body {
            sc.mode = Mode::Proc;
            self.block(body, &mut sc);
        }
        Ok(())
    }

    fn control(&mut self, c: &ControlBlock) {
        let mut proved = false;
        for (cmd, span) in &c.commands {
            match cmd {
                Command::Bmc(_) | Command::Induction | Command::KInduction(_) | Command::Verify(_) => {
                    if let Command::KInduction(0) = cmd {
                        self.diags.push(diag(DiagKind::InvalidCommand, span, "kinduction needs k >= 1"));
                    }
                    if let Command::Verify(p) = cmd {
                        match self.env.procs.get(p) {
                            None => self.diags.push(diag(
                                DiagKind::UnknownIdentifier,
                                span,
                                format!("unknown procedure `{p}`"),
                            )),
                            Some(pd) if pd.body.is_none() => self.diags.push(diag(
                                DiagKind::InvalidCommand,
                                span,
                                format!("procedure `{p}` has no body to verify"),
                            )),
                            _ => {}
                        }
                    }
                    proved = true;
                }
                Command::Check | Command::Synthesize if !proved => self.diags.push(diag(
                    DiagKind::InvalidCommand,
                    span,
                    "no proof command precedes this command",
                )),
                _ => {}
            }
        }
    }

    fn block(&mut self, stmts: &[Stmt], sc: &mut Scope) {
        let depth = sc.locals.len();
        for s in stmts {
            if let Err(d) = self.stmt(s, sc) {
                self.diags.push(d);
            }
        }
        sc.locals.truncate(depth);
    }

    /// Checks that `name` (primed or not) may be written in the current mode.
    fn assignable(&self, name: &str, primed: bool, sc: &Scope, span: &Span) -> CResult<Sort> {
        let illegal = |msg: String| Err(diag(DiagKind::IllegalAssignment, span, msg));
        if let Some(s) = sc.local(name) {
            if sc.readonly.contains(name) {
                return illegal(format!("`{name}` is read-only"));
            }
            if primed {
                return illegal(format!("local `{name}` cannot be primed"));
            }
            return Ok(s.clone());
        }
        let Some((kind, sort)) = self.env.vars.get(name).cloned() else {
            if self.module_var(name).is_some() {
                return illegal(format!("`{name}` belongs to an instance and cannot be assigned here"));
            }
            return Err(diag(DiagKind::UnknownIdentifier, span, format!("unknown variable `{name}`")));
        };
        match (kind, sc.mode) {
            (VarKind::Input, _) => illegal(format!("input `{name}` cannot be assigned")),
            (VarKind::Const, Mode::Init) if !primed => Ok(sort),
            (VarKind::Const, _) => illegal(format!("constant `{name}` can only be assigned in init")),
            (_, Mode::Init) if primed => illegal("primed assignment outside a next block".into()),
            (_, Mode::Init) => Ok(sort),
            (_, Mode::Next) if primed => Ok(sort),
            (_, Mode::Next) => illegal(format!("state variable `{name}` is assigned as `{name}'` in next blocks")),
            (_, Mode::Proc) if primed => illegal("primed assignment outside a next block".into()),
            (_, Mode::Proc) => {
                if sc.proc.is_some_and(|p| p.modifies.iter().any(|m| m == name)) {
                    Ok(sort)
                } else {
                    illegal(format!("`{name}` is not in the procedure's modifies set"))
                }
            }
            (_, Mode::Pure) => illegal("assignment in expression context".into()),
        }
    }

    fn stmt(&mut self, s: &Stmt, sc: &mut Scope) -> CResult<()> {
        match &s.kind {
            StmtKind::LocalVar { names, ty } => {
                let sort = self.resolve(ty, &s.span)?;
                for n in names {
                    sc.locals.push((n.clone(), sort.clone()));
                }
            }
            StmtKind::Assign { lhs, rhs } => {
                let sort = self.assignable(&lhs.name, lhs.primed, sc, &lhs.span)?;
                self.expect(rhs, sc, &sort)?;
            }
            StmtKind::Havoc(n) => {
                let primed = sc.mode == Mode::Next && sc.local(n).is_none();
                self.assignable(n, primed, sc, &s.span)?;
            }
            StmtKind::Assert { expr, .. } | StmtKind::Assume(expr) => self.expect(expr, sc, &Sort::Bool)?,
            StmtKind::If { cond, then_branch, else_branch } => {
                self.expect(cond, sc, &Sort::Bool)?;
                self.block(then_branch, sc);
                self.block(else_branch, sc);
            }
            StmtKind::Case(arms) => {
                for (g, body) in arms {
                    self.expect(g, sc, &Sort::Bool)?;
                    self.block(body, sc);
                }
            }
            StmtKind::For { var, lo, hi, body } => {
                self.expect(lo, sc, &Sort::Int)?;
                self.expect(hi, sc, &Sort::Int)?;
                let mut inner = sc.clone();
                inner.locals.push((var.clone(), Sort::Int));
                inner.readonly.insert(var.clone());
                self.block(body, &mut inner);
            }
            StmtKind::While { cond, invariants, body } => {
                self.expect(cond, sc, &Sort::Bool)?;
                for i in invariants {
                    self.expect(i, sc, &Sort::Bool)?;
                }
                self.block(body, sc);
            }
            StmtKind::Call { lhs, proc_name, args } => {
                let p = self.env.procs.get(proc_name).ok_or_else(|| {
                    diag(DiagKind::UnknownIdentifier, &s.span, format!("unknown procedure `{proc_name}`"))
                })?;
                if args.len() != p.params.len() {
                    return Err(diag(
                        DiagKind::ArityMismatch,
                        &s.span,
                        format!("`{proc_name}` takes {} arguments, {} given", p.params.len(), args.len()),
                    ));
                }
                if lhs.len() != p.returns.len() {
                    return Err(diag(
                        DiagKind::ArityMismatch,
                        &s.span,
                        format!("`{proc_name}` returns {} values, {} targets given", p.returns.len(), lhs.len()),
                    ));
                }
                for (a, q) in args.iter().zip(&p.params) {
                    let want = self.resolve(&q.ty, &s.span)?;
                    self.expect(a, sc, &want)?;
                }
                for (l, q) in lhs.iter().zip(&p.returns) {
                    let want = self.resolve(&q.ty, &s.span)?;
                    let got = self.assignable(&l.name, l.primed, sc, &l.span)?;
                    if got != want {
                        return Err(mismatch(&l.span, &sort_name(&want), &got));
                    }
                }
                for m in &p.modifies {
                    let primed = sc.mode == Mode::Next;
                    self.assignable(m, primed, sc, &s.span)?;
                }
            }
            StmtKind::NextInstance(i) => {
                if sc.mode != Mode::Next {
                    return Err(diag(DiagKind::IllegalAssignment, &s.span, "next(..) is only allowed in next blocks"));
                }
                if !self.env.instances.contains_key(i) {
                    return Err(diag(DiagKind::UnknownIdentifier, &s.span, format!("unknown instance `{i}`")));
                }
            }
        }
        Ok(())
    }

    fn expr(&mut self, e: &Expr, sc: &Scope) -> CResult<Sort> {
        let span = &e.span;
        Ok(match &e.kind {
            ExprKind::Bool(_) => Sort::Bool,
            ExprKind::Int(_) => Sort::Int,
            ExprKind::Real(_) => Sort::Real,
            ExprKind::BitVec { width, .. } => Sort::BitVec(*width),
            ExprKind::Ident(n) => {
                if let Some(s) = sc.local(n) {
                    s.clone()
                } else if let Some((_, s)) = self.module_var(n) {
                    s
                } else if let Some((def, _)) = self.env.variants.get(n) {
                    Sort::Enum(def.clone())
                } else {
                    return Err(diag(DiagKind::UnknownIdentifier, span, format!("unknown identifier `{n}`")));
                }
            }
            ExprKind::Primed(n) => {
                return Err(diag(
                    DiagKind::IllegalAssignment,
                    span,
                    format!("`{n}'` may only appear as an assignment target"),
                ))
            }
            ExprKind::TraceIndexed(n, i) => {
                let Some(arity) = sc.hyper else {
                    return Err(diag(
                        DiagKind::IndexOutOfArity,
                        span,
                        format!("trace index `{n}.{i}` outside a hyper specification"),
                    ));
                };
                if *i == 0 || *i > arity {
                    return Err(diag(
                        DiagKind::IndexOutOfArity,
                        span,
                        format!("trace index {i} exceeds declared arity {arity}"),
                    ));
                }
                match self.env.vars.get(n) {
                    Some((_, s)) => s.clone(),
                    None => return Err(diag(DiagKind::UnknownIdentifier, span, format!("unknown variable `{n}`"))),
                }
            }
            ExprKind::Old(n) => {
                match &sc.old_ok {
                    Some(ok) if ok.contains(n) => {}
                    Some(_) => {
                        return Err(diag(
                            DiagKind::UnknownIdentifier,
                            span,
                            format!("old({n}) needs `{n}` to be a parameter or in the modifies set"),
                        ))
                    }
                    None => return Err(diag(DiagKind::IllegalAssignment, span, "old(..) is only allowed in ensures")),
                }
                match sc.local(n) {
                    Some(s) => s.clone(),
                    None => self.env.vars[n].1.clone(),
                }
            }
            ExprKind::Unary(op, inner) => {
                let s = self.expr(inner, sc)?;
                match (op, &s) {
                    (UnOp::Not, Sort::Bool) => s,
                    (UnOp::Neg, Sort::Int | Sort::Real | Sort::BitVec(_)) => s,
                    (UnOp::BvNot, Sort::BitVec(_)) => s,
                    (UnOp::Not, _) => return Err(mismatch(span, "boolean", &s)),
                    (UnOp::Neg, _) => return Err(mismatch(span, "a numeric type", &s)),
                    (UnOp::BvNot, _) => return Err(mismatch(span, "a bitvector", &s)),
                }
            }
            ExprKind::Binary(op, l, r) => {
                let ls = self.expr(l, sc)?;
                let rs = self.expr(r, sc)?;
                self.binary(*op, &ls, &rs, span)?
            }
            ExprKind::Ite(c, t, f) => {
                self.expect(c, sc, &Sort::Bool)?;
                let ts = self.expr(t, sc)?;
                self.expect(f, sc, &ts)?;
                ts
            }
            ExprKind::Apply(name, args) => {
                let f = self
                    .env
                    .funs
                    .get(name)
                    .ok_or_else(|| diag(DiagKind::UnknownIdentifier, span, format!("unknown function `{name}`")))?;
                if f.params.len() != args.len() {
                    return Err(diag(
                        DiagKind::ArityMismatch,
                        span,
                        format!("`{name}` takes {} arguments, {} given", f.params.len(), args.len()),
                    ));
                }
                let (params, ret) = (f.params.clone(), f.ret.clone());
                for (a, (_, want)) in args.iter().zip(&params) {
                    self.expect(a, sc, want)?;
                }
                ret
            }
            ExprKind::Select(a, i) => match self.expr(a, sc)? {
                Sort::Array(is, es) => {
                    self.expect(i, sc, &is)?;
                    *es
                }
                s => return Err(mismatch(&a.span, "an array", &s)),
            },
            ExprKind::Store(a, i, v) => match self.expr(a, sc)? {
                Sort::Array(is, es) => {
                    self.expect(i, sc, &is)?;
                    self.expect(v, sc, &es)?;
                    Sort::Array(is, es)
                }
                s => return Err(mismatch(&a.span, "an array", &s)),
            },
            ExprKind::Extract { expr, hi, lo } => match self.expr(expr, sc)? {
                Sort::BitVec(w) if hi >= lo && *hi < w => Sort::BitVec(hi - lo + 1),
                Sort::BitVec(w) => {
                    return Err(diag(DiagKind::TypeMismatch, span, format!("extract [{hi}:{lo}] out of range for bv{w}")))
                }
                s => return Err(mismatch(&expr.span, "a bitvector", &s)),
            },
            ExprKind::Quant { kind, var, ty, group, body } => {
                let sort = self.resolve(ty, span)?;
                if let Some(g) = group {
                    let (gs, _) = self
                        .env
                        .groups
                        .get(g)
                        .ok_or_else(|| diag(DiagKind::UnknownGroup, span, format!("unknown group `{g}`")))?;
                    if *gs != sort {
                        return Err(mismatch(span, &sort_name(gs), &sort));
                    }
                } else if !sc.unbounded_quant_ok {
                    return Err(diag(
                        DiagKind::TypeMismatch,
                        span,
                        format!("`{}` is only allowed in axioms; use a finite quantifier", kind.keyword()),
                    ));
                }
                let mut inner = sc.clone();
                inner.locals.push((var.clone(), sort));
                self.expect(body, &inner, &Sort::Bool)?;
                Sort::Bool
            }
        })
    }

    fn binary(&self, op: BinOp, l: &Sort, r: &Sort, span: &Span) -> CResult<Sort> {
        use BinOp::*;
        if l != r && op != Concat {
            return Err(diag(
                DiagKind::TypeMismatch,
                span,
                format!("operands of `{}` have types {} and {}", op.symbol(), sort_name(l), sort_name(r)),
            ));
        }
        let bad = |what: &str| Err(mismatch(span, what, l));
        match op {
            Implies | Iff | Or | And => match l {
                Sort::Bool => Ok(Sort::Bool),
                _ => bad("boolean"),
            },
            Eq | Ne => Ok(Sort::Bool),
            Lt | Le | Gt | Ge => match l {
                Sort::Int | Sort::Real | Sort::BitVec(_) => Ok(Sort::Bool),
                _ => bad("a numeric type"),
            },
            Add | Sub | Mul => match l {
                Sort::Int | Sort::Real | Sort::BitVec(_) => Ok(l.clone()),
                _ => bad("a numeric type"),
            },
            Div => match l {
                Sort::Real | Sort::BitVec(_) => Ok(l.clone()),
                _ => bad("real or bitvector (use `div` for integers)"),
            },
            IntDiv | Mod => match l {
                Sort::Int | Sort::BitVec(_) => Ok(l.clone()),
                _ => bad("integer or bitvector"),
            },
            BvAnd | BvOr | BvXor => match l {
                Sort::BitVec(_) => Ok(l.clone()),
                _ => bad("a bitvector"),
            },
            Concat => match (l, r) {
                (Sort::BitVec(a), Sort::BitVec(b)) => Ok(Sort::BitVec(a + b)),
                (Sort::BitVec(_), _) => Err(mismatch(span, "a bitvector", r)),
                _ => bad("a bitvector"),
            },
        }
    }
}

/// Resolves a possibly instance-qualified variable name.
pub fn lookup_var(info: &SymbolInfo, env: &ModuleEnv, name: &str) -> Option<(VarKind, Sort)> {
    if let Some(v) = env.vars.get(name) {
        return Some(v.clone());
    }
    let (inst, rest) = name.split_once('.')?;
    let child = info.envs.get(env.instances.get(inst)?)?;
    lookup_var(info, child, rest)
}
