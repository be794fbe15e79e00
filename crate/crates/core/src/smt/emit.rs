//! SMT-LIB v2 script emission.

use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::sync::Arc;

use crate::term::{self, Sort, Symbols, Term, TermKind, TermNode};

/// A complete script. Rendering is a pure function of the fields, so equal
/// inputs give byte-identical text.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SmtScript {
    pub logic: String,
    /// Sort, function and constant declarations, then hoisted definitions.
    pub declarations: Vec<String>,
    pub assertions: Vec<String>,
    pub commands: Vec<String>,
}

impl fmt::Display for SmtScript {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "(set-option :produce-models true)")?;
        writeln!(f, "(set-logic {})", self.logic)?;
        for d in &self.declarations {
            writeln!(f, "{d}")?;
        }
        for a in &self.assertions {
            writeln!(f, "(assert {a})")?;
        }
        for c in &self.commands {
            writeln!(f, "{c}")?;
        }
        Ok(())
    }
}

/// Declarations for the free symbols of `roots`: enum datatypes, then
/// uninterpreted sorts, functions by name and constants by (step, trace, name).
pub fn declarations(symbols: &Symbols) -> Vec<String> {
    let mut out = Vec::new();
    for d in &symbols.enums {
        let ctors: Vec<String> = d.variants.iter().map(|v| format!("({})", term::symbol(v))).collect();
        out.push(format!("(declare-datatype {} ({}))", term::symbol(&d.name), ctors.join(" ")));
    }
    for u in &symbols.uninterp {
        out.push(format!("(declare-sort {} 0)", term::symbol(u)));
    }
    for (f, (params, ret)) in &symbols.funs {
        let ps: Vec<String> = params.iter().map(Sort::to_string).collect();
        out.push(format!("(declare-fun {} ({}) {ret})", term::symbol(f), ps.join(" ")));
    }
    for (c, sort) in &symbols.consts {
        out.push(format!("(declare-const {c} {sort})"));
    }
    out
}

/// Closed compound subterms referenced from two or more places, in
/// post-order so each definition only mentions earlier ones.
fn shared_subterms(roots: &[&Term]) -> Vec<Term> {
    let mut parents: HashMap<*const TermNode, usize> = HashMap::new();
    term::visit_dag(roots.iter().copied(), &mut |t| {
        if let TermKind::App(_, args) | TermKind::Apply(_, args) = &t.kind {
            for a in args {
                *parents.entry(Arc::as_ptr(a)).or_default() += 1;
            }
        }
    });
    let mut closed: HashMap<*const TermNode, bool> = HashMap::new();
    let mut order = Vec::new();
    for r in roots {
        post_order(r, &mut closed, &mut order);
    }
    order
        .into_iter()
        .filter(|t| {
            let compound = matches!(&t.kind, TermKind::App(..)) || matches!(&t.kind, TermKind::Apply(_, a) if !a.is_empty());
            compound && closed[&Arc::as_ptr(t)] && parents.get(&Arc::as_ptr(t)).copied().unwrap_or(0) >= 2
        })
        .collect()
}

/// Records nodes in post-order and whether each is free of bound variables.
fn post_order(t: &Term, closed: &mut HashMap<*const TermNode, bool>, order: &mut Vec<Term>) -> bool {
    if let Some(&c) = closed.get(&Arc::as_ptr(t)) {
        return c;
    }
    let c = match &t.kind {
        TermKind::Var(_) | TermKind::Quant { .. } => {
            // Quantified bodies are printed inline, never hoisted.
            false
        }
        TermKind::App(_, args) | TermKind::Apply(_, args) => {
            let mut all = true;
            for a in args {
                all &= post_order(a, closed, order);
            }
            all
        }
        TermKind::Lit(_) | TermKind::Const(_) => true,
    };
    closed.insert(Arc::as_ptr(t), c);
    order.push(t.clone());
    c
}

/// Script checking the satisfiability of `assumptions ∧ ¬goal`.
pub fn script(assumptions: &[Term], goal: &Term) -> SmtScript {
    let roots: Vec<&Term> = assumptions.iter().chain(std::iter::once(goal)).collect();
    let symbols = Symbols::collect(roots.iter().copied());
    let mut declarations = declarations(&symbols);
    let mut names: HashMap<*const TermNode, String> = HashMap::new();
    for (i, t) in shared_subterms(&roots).into_iter().enumerate() {
        let mut body = String::new();
        t.write_smt_named(&mut body, &names);
        let name = format!("|$s{i}|");
        declarations.push(format!("(define-fun {name} () {} {body})", t.sort));
        names.insert(Arc::as_ptr(&t), name);
    }
    let render = |t: &Term| {
        let mut s = String::new();
        t.write_smt_named(&mut s, &names);
        s
    };
    let mut assertions: Vec<String> = assumptions.iter().map(render).collect();
    let mut g = String::new();
    let _ = write!(g, "(not {})", render(goal));
    assertions.push(g);
    SmtScript { logic: "ALL".into(), declarations, assertions, commands: vec!["(check-sat)".into()] }
}

pub fn emit_smtlib(assumptions: &[Term], goal: &Term) -> String {
    script(assumptions, goal).to_string()
}
