//! Satisfiability modulo oracles: oracle functions are left uninterpreted and
//! pinned point by point with the binary's answers until the model agrees.

use std::collections::BTreeSet;

use super::model::{ModelCtx, SortEnv};
use super::oracle::{OracleError, Oracles};
use super::solver::{solve_script, write_emitted, SolveResult, SolverConfig};
use super::emit::emit_smtlib;
use crate::proof::VerificationCondition;
use crate::term::{self, Symbols, Term, TermKind};
use crate::value::Value;

/// Plain check of one VC.
pub fn solve(vc: &VerificationCondition, cfg: &SolverConfig) -> SolveResult {
    solve_with(vc, &[], cfg)
}

fn solve_with(vc: &VerificationCondition, lemmas: &[Term], cfg: &SolverConfig) -> SolveResult {
    let assumptions: Vec<Term> = vc.assumptions.iter().chain(lemmas).cloned().collect();
    let text = emit_smtlib(&assumptions, &vc.goal);
    if let Some(dir) = &cfg.emit_dir {
        let _ = write_emitted(dir, &format!("{}.smt2", vc.name), &text);
    }
    let symbols = Symbols::collect(assumptions.iter().chain(std::iter::once(&vc.goal)));
    solve_script(&text, &SortEnv::from_symbols(&symbols), cfg)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lemma {
    pub fun: String,
    pub args: Vec<Value>,
    pub value: Value,
}

impl Lemma {
    pub fn term(&self, ret: &term::Sort) -> Term {
        let args = self.args.iter().cloned().map(term::lit).collect();
        term::eq(term::apply(self.fun.as_str(), args, ret.clone()), term::lit(self.value.clone()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SmtoOutcome {
    pub result: SolveResult,
    /// Lemmas in the order they were added.
    pub lemmas: Vec<Lemma>,
    /// Solver calls made.
    pub rounds: usize,
}

/// Oracle applications of `terms` outside quantifier bodies.
fn oracle_apps(terms: &[&Term], oracles: &Oracles) -> Vec<Term> {
    let mut out = Vec::new();
    term::visit_dag(terms.iter().copied(), &mut |t| {
        if let TermKind::Apply(f, _) = &t.kind {
            if oracles.is_oracle(f) {
                out.push(t.clone());
            }
        }
    });
    out
}

pub fn smto_check(vc: &VerificationCondition, oracles: &Oracles, cfg: &SolverConfig) -> SmtoOutcome {
    let roots: Vec<&Term> = vc.terms().collect();
    let apps = oracle_apps(&roots, oracles);
    if apps.is_empty() {
        return SmtoOutcome { result: solve(vc, cfg), lemmas: Vec::new(), rounds: 1 };
    }
    let used: BTreeSet<String> = apps
        .iter()
        .filter_map(|t| match &t.kind {
            TermKind::Apply(f, _) => Some(f.to_string()),
            _ => None,
        })
        .collect();
    // Answers known from earlier checks constrain this one too.
    let mut lemmas: Vec<Lemma> = oracles
        .table()
        .into_iter()
        .filter(|((f, _), _)| used.contains(f))
        .map(|((fun, args), value)| Lemma { fun, args, value })
        .collect();
    let mut pinned: BTreeSet<(String, Vec<Value>)> = lemmas.iter().map(|l| (l.fun.clone(), l.args.clone())).collect();
    let ret_of = |f: &str| oracles.binding(f).map(|b| b.ret.clone()).expect("bound oracle");
    let mut rounds = 0;
    while rounds < cfg.smto_budget {
        rounds += 1;
        let lemma_terms: Vec<Term> = lemmas.iter().map(|l| l.term(&ret_of(&l.fun))).collect();
        let model = match solve_with(vc, &lemma_terms, cfg) {
            SolveResult::Sat(m) => m,
            other => return SmtoOutcome { result: other, lemmas, rounds },
        };
        let ctx = ModelCtx::new(&model);
        let mut agree = true;
        for app in &apps {
            let TermKind::Apply(f, args) = &app.kind else { unreachable!() };
            // Applications over bound variables have no point in the model.
            let Ok(point) = args.iter().map(|a| ctx.eval(a)).collect::<Result<Vec<_>, _>>() else { continue };
            let claimed = match ctx.eval(app) {
                Ok(v) => v,
                Err(e) => {
                    let r = SolveResult::Unknown(format!("cannot evaluate {f}: {e}"));
                    return SmtoOutcome { result: r, lemmas, rounds };
                }
            };
            let actual = match oracles.query(f, &point) {
                Ok((v, _)) => v,
                Err(e @ OracleError::NotFound { .. }) | Err(e @ OracleError::Invocation { .. }) => {
                    return SmtoOutcome { result: SolveResult::Unknown(e.to_string()), lemmas, rounds };
                }
            };
            if actual != claimed {
                agree = false;
            }
            if pinned.insert((f.to_string(), point.clone())) {
                lemmas.push(Lemma { fun: f.to_string(), args: point, value: actual });
            }
        }
        if agree {
            return SmtoOutcome { result: SolveResult::Sat(model), lemmas, rounds };
        }
    }
    SmtoOutcome { result: SolveResult::Unknown("oracle budget".into()), lemmas, rounds }
}
