//! Synthesis back end: the query ∃f ∀x ⋀ VCᵢ(f, x) in SyGuS-IF, candidate
//! parsing, re-verification, and oracle-guided refinement.
//!
//! Oracle functions are emitted as auxiliary synth-funs pinned by the
//! oracle table; their candidates are discarded. (Declaring them with
//! `declare-fun` would quantify them universally.)

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::sync::Arc;
use std::time::Duration;

use crate::elab::{FunKind, TypedModule};
use crate::proof::{check_vcs, substitute, Verdict, VcResult, VerificationCondition};
use crate::smt::model::Reader;
use crate::smt::sexp::{parse_all, Sexp};
use crate::smt::solver::{run_batch, write_emitted, DEFAULT_SYGUS_SOLVER};
use crate::smt::{emit, Lemma, Oracles, SolverConfig, SortEnv};
use crate::symexec::ExprLowering;
use crate::term::{self, FunDef, Sort, SymConst, Symbols, Term};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrammarRule {
    pub nonterminal: String,
    pub sort: Sort,
    /// Right-hand sides over the parameters and nonterminals (as variables).
    pub rules: Vec<Term>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SynthFunDecl {
    pub name: String,
    pub params: Vec<(String, Sort)>,
    pub ret: Sort,
    pub grammar: Option<Vec<GrammarRule>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SynthesisProblem {
    pub module: String,
    pub funs: Vec<SynthFunDecl>,
    /// The ∀ vector: every symbolic constant of every constraint.
    pub universals: BTreeMap<SymConst, Sort>,
    /// `assumptions ⇒ goal`, one per VC, in VC order.
    pub constraints: Vec<Term>,
    /// Oracle functions occurring in the constraints.
    pub oracles: BTreeMap<String, (Vec<Sort>, Sort)>,
    /// Known oracle answers, emitted as constraints.
    pub oracle_table: Vec<Lemma>,
    symbols: Symbols,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CandidateFunction {
    pub name: String,
    pub params: Vec<(String, Sort)>,
    pub ret: Sort,
    pub body: Term,
}

impl CandidateFunction {
    pub fn fun_def(&self) -> FunDef {
        FunDef { name: self.name.clone(), params: self.params.clone(), ret: self.ret.clone(), body: self.body.clone() }
    }

    /// The candidate as an SMT-LIB `define-fun`.
    pub fn to_smt(&self) -> String {
        format!("(define-fun {} ({}) {} {})", term::symbol(&self.name), sorted_params(&self.params), self.ret, self.body)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SynthError {
    #[error("module has no synthesis function")]
    NoSynthFun,
    #[error("synthesis solver reports the problem infeasible")]
    Infeasible,
    #[error("cannot read candidate: {0}")]
    CandidateParse(String),
}

fn sorted_params(ps: &[(String, Sort)]) -> String {
    ps.iter().map(|(n, s)| format!("({} {s})", term::symbol(n))).collect::<Vec<_>>().join(" ")
}

fn lower_grammar(m: &TypedModule, params: &[(String, Sort)], prods: &[crate::ast::Production], ret: &Sort) -> Vec<GrammarRule> {
    let lo = ExprLowering::new(m);
    let mut locals: BTreeMap<String, Term> =
        params.iter().map(|(n, s)| (n.clone(), term::var(n.as_str(), s.clone()))).collect();
    let sorts: Vec<Sort> = prods.iter().map(|p| lo.resolve(&p.ty)).collect();
    for (p, s) in prods.iter().zip(&sorts) {
        locals.insert(p.nonterminal.clone(), term::var(p.nonterminal.as_str(), s.clone()));
    }
    let empty = BTreeMap::new();
    let mut rules: Vec<GrammarRule> = prods
        .iter()
        .zip(sorts)
        .map(|(p, sort)| GrammarRule {
            nonterminal: p.nonterminal.clone(),
            sort,
            rules: p.rules.iter().map(|r| lo.expr(r, &empty, &locals, None)).collect(),
        })
        .collect();
    // SyGuS takes the first nonterminal as the start symbol.
    if let Some(i) = rules.iter().position(|r| r.sort == *ret) {
        let start = rules.remove(i);
        rules.insert(0, start);
    }
    rules
}

/// One constraint per VC; universals are the union of their constants.
pub fn build_synthesis_query(vcs: &[VerificationCondition], m: &TypedModule) -> Result<SynthesisProblem, SynthError> {
    let funs: Vec<SynthFunDecl> = m
        .synth_funs()
        .map(|f| SynthFunDecl {
            name: f.name.clone(),
            params: f.params.clone(),
            ret: f.ret.clone(),
            grammar: match &f.kind {
                FunKind::Synth(Some(prods)) => Some(lower_grammar(m, &f.params, prods, &f.ret)),
                _ => None,
            },
        })
        .collect();
    if funs.is_empty() {
        return Err(SynthError::NoSynthFun);
    }
    let constraints: Vec<Term> = vcs
        .iter()
        .map(|vc| {
            if vc.assumptions.is_empty() {
                vc.goal.clone()
            } else {
                term::implies(term::and(vc.assumptions.clone()), vc.goal.clone())
            }
        })
        .collect();
    let symbols = Symbols::collect(constraints.iter());
    let oracle_names: BTreeSet<&str> = m.oracle_funs().map(|f| f.name.as_str()).collect();
    let oracles = symbols
        .funs
        .iter()
        .filter(|(f, _)| oracle_names.contains(&***f))
        .map(|(f, sig)| (f.to_string(), sig.clone()))
        .collect();
    Ok(SynthesisProblem {
        module: m.name.clone(),
        funs,
        universals: symbols.consts.clone(),
        constraints,
        oracles,
        oracle_table: Vec::new(),
        symbols,
    })
}

/// SyGuS-IF v2 text of the problem; byte-deterministic.
pub fn emit_sygus(p: &SynthesisProblem) -> String {
    let mut out = String::from("(set-logic ALL)\n");
    let synth: BTreeSet<&str> = p.funs.iter().map(|f| f.name.as_str()).collect();
    let mut sorts_only = p.symbols.clone();
    sorts_only.consts.clear();
    sorts_only.funs.retain(|f, _| !synth.contains(&**f) && !p.oracles.contains_key(&**f));
    for d in emit::declarations(&sorts_only) {
        out.push_str(&d);
        out.push('\n');
    }
    for f in &p.funs {
        let _ = write!(out, "(synth-fun {} ({}) {}", term::symbol(&f.name), sorted_params(&f.params), f.ret);
        if let Some(g) = &f.grammar {
            let decls: Vec<String> =
                g.iter().map(|r| format!("({} {})", term::symbol(&r.nonterminal), r.sort)).collect();
            let _ = write!(out, "\n  ({})\n  (", decls.join(" "));
            for (i, r) in g.iter().enumerate() {
                let rhs: Vec<String> = r.rules.iter().map(|t| t.to_smt()).collect();
                let sep = if i == 0 { "" } else { "\n   " };
                let _ = write!(out, "{sep}({} {} ({}))", term::symbol(&r.nonterminal), r.sort, rhs.join(" "));
            }
            out.push(')');
        }
        out.push_str(")\n");
    }
    for (f, (params, ret)) in &p.oracles {
        let ps: Vec<(String, Sort)> = params.iter().enumerate().map(|(i, s)| (format!("x{i}"), s.clone())).collect();
        let _ = writeln!(out, "(synth-fun {} ({}) {ret})", term::symbol(f), sorted_params(&ps));
    }
    for (c, sort) in &p.universals {
        let _ = writeln!(out, "(declare-var {c} {sort})");
    }
    for c in &p.constraints {
        let _ = writeln!(out, "(constraint {})", c.to_smt());
    }
    for l in &p.oracle_table {
        let ret = &p.oracles[&l.fun].1;
        let _ = writeln!(out, "(constraint {})", l.term(ret).to_smt());
    }
    out.push_str("(check-synth)\n");
    out
}

/// Reads the solver's `define-fun` answers for the problem's synth-funs.
/// Answers for auxiliary oracle functions are ignored.
pub fn parse_candidate(text: &str, p: &SynthesisProblem) -> Result<Vec<CandidateFunction>, SynthError> {
    let err = |m: String| SynthError::CandidateParse(m);
    let top = parse_all(text).map_err(|e| err(e.to_string()))?;
    if top.iter().any(|s| s.atom() == Some("infeasible")) {
        return Err(SynthError::Infeasible);
    }
    let mut defs: Vec<&Sexp> = Vec::new();
    for s in &top {
        if s.is_call("define-fun") {
            defs.push(s);
        } else if let Some(items) = s.list() {
            defs.extend(items.iter().filter(|x| x.is_call("define-fun")));
        } else if let Some(a) = s.atom() {
            return Err(err(format!("unexpected solver answer `{a}`")));
        }
    }
    let env = SortEnv::from_symbols(&p.symbols);
    let mut out = Vec::new();
    for f in &p.funs {
        let def = defs
            .iter()
            .find(|d| d.list().and_then(|l| l.get(1)).and_then(Sexp::symbol) == Some(f.name.as_str()))
            .ok_or_else(|| err(format!("no definition for `{}`", f.name)))?;
        let [_, _, Sexp::List(params), ret, body] = def.list().unwrap() else {
            return Err(err(format!("malformed definition `{def}`")));
        };
        let ret = env.sort(ret).map_err(|e| err(e.to_string()))?;
        if ret != f.ret {
            return Err(err(format!("`{}` returns {ret}, expected {}", f.name, f.ret)));
        }
        let mut ps = Vec::new();
        for q in params {
            let [n, s] = q.list().unwrap_or_default() else { return Err(err(format!("bad parameter `{q}`"))) };
            ps.push((n.symbol().unwrap_or_default().to_string(), env.sort(s).map_err(|e| err(e.to_string()))?));
        }
        if ps.iter().map(|(_, s)| s).ne(f.params.iter().map(|(_, s)| s)) {
            return Err(err(format!("`{}` has the wrong signature", f.name)));
        }
        // Bodies use the solver's parameter names; rename to the declared ones.
        let reader = Reader { env: &env, funs: BTreeMap::new() };
        let raw = reader.with_params(body, &ps, &ret).map_err(|e| err(e.to_string()))?;
        if raw.sort != f.ret {
            return Err(err(format!("body of `{}` has sort {}", f.name, raw.sort)));
        }
        let rename: std::collections::HashMap<Arc<str>, Term> = ps
            .iter()
            .zip(&f.params)
            .map(|((got, s), (want, _))| (Arc::from(got.as_str()), term::var(want.as_str(), s.clone())))
            .collect();
        out.push(CandidateFunction {
            name: f.name.clone(),
            params: f.params.clone(),
            ret: f.ret.clone(),
            body: term::subst_vars(&raw, &rename),
        });
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct SynthConfig {
    pub command: String,
    pub timeout: Duration,
    /// Outer refinement rounds.
    pub budget: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig { command: DEFAULT_SYGUS_SOLVER.into(), timeout: Duration::from_secs(60), budget: 16 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SynthOutcome {
    Solved { candidates: Vec<CandidateFunction>, results: Vec<VcResult> },
    Infeasible,
    Unknown(String),
}

/// Expands the candidates into every VC and checks them afresh.
pub fn apply_and_reverify(
    vcs: &[VerificationCondition],
    candidates: &[CandidateFunction],
    oracles: &Oracles,
    cfg: &SolverConfig,
) -> Vec<VcResult> {
    let defs: BTreeMap<String, FunDef> = candidates.iter().map(|c| (c.name.clone(), c.fun_def())).collect();
    let expanded: Vec<VerificationCondition> = vcs.iter().map(|vc| substitute(vc, &defs)).collect();
    check_vcs(&expanded, oracles, cfg)
}

/// Emit, solve, re-verify; when re-verification consults the oracle at new
/// points, the answers join the table and the query is posed again.
pub fn symo_loop(
    problem: &mut SynthesisProblem,
    vcs: &[VerificationCondition],
    oracles: &Oracles,
    smt: &SolverConfig,
    cfg: &SynthConfig,
) -> SynthOutcome {
    for _ in 0..cfg.budget {
        problem.oracle_table = oracles
            .table()
            .into_iter()
            .filter(|((f, _), _)| problem.oracles.contains_key(f))
            .map(|((fun, args), value)| Lemma { fun, args, value })
            .collect();
        let text = emit_sygus(problem);
        if let Some(dir) = &smt.emit_dir {
            let _ = write_emitted(dir, &format!("{}.sl", problem.module), &text);
        }
        let reply = match run_batch(&cfg.command, &text, cfg.timeout) {
            Ok(r) => r,
            Err(e) => return SynthOutcome::Unknown(e),
        };
        let candidates = match parse_candidate(&reply, problem) {
            Ok(c) => c,
            Err(SynthError::Infeasible) => return SynthOutcome::Infeasible,
            Err(e) => return SynthOutcome::Unknown(e.to_string()),
        };
        let known = oracles.log().len();
        let results = apply_and_reverify(vcs, &candidates, oracles, smt);
        if results.iter().all(|r| r.verdict == Verdict::Pass) {
            return SynthOutcome::Solved { candidates, results };
        }
        if let Some(r) = results.iter().find(|r| matches!(r.verdict, Verdict::Unknown(_))) {
            return SynthOutcome::Unknown(format!("re-verification of {}: {:?}", r.name, r.verdict));
        }
        if oracles.log().len() == known {
            return SynthOutcome::Unknown("candidate rejected by re-verification".into());
        }
    }
    SynthOutcome::Unknown("synthesis budget".into())
}
