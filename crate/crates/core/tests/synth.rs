mod support;

use std::collections::BTreeSet;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use support::*;
use uclid_core::elab::TypedModule;
use uclid_core::proof::{bmc, check_vcs, induct, substitute, Verdict, VerificationCondition};
use uclid_core::smt::sexp::{parse_all, Sexp};
use uclid_core::smt::{Oracles, SolverConfig};
use uclid_core::synth::*;
use uclid_core::term::{self, Op, Sort};

fn z3() -> SolverConfig {
    SolverConfig::new("z3 -in")
}

fn sygus() -> SynthConfig {
    SynthConfig { command: format!("{} --lang=sygus2 --nl-ext=none", root().join("scripts/cvc5").display()), ..Default::default() }
}

fn file(name: &str) -> TypedModule {
    elab(&corpus(name))
}

fn src(text: &str) -> TypedModule {
    elab(&modules(text))
}

fn fib_problem() -> (TypedModule, Vec<VerificationCondition>, SynthesisProblem) {
    let m = file("fib.ucl");
    let vcs = induct(&m, 1);
    let p = build_synthesis_query(&vcs, &m).unwrap();
    (m, vcs, p)
}

fn candidate(text: &str, p: &SynthesisProblem) -> Vec<CandidateFunction> {
    parse_candidate(text, p).unwrap_or_else(|e| panic!("{e}"))
}

fn all_pass(vcs: &[VerificationCondition], cands: &[CandidateFunction]) -> bool {
    apply_and_reverify(vcs, cands, &Oracles::none(), &z3()).iter().all(|r| r.verdict == Verdict::Pass)
}

/// Every atom of `sexp`.
fn atoms<'a>(s: &'a Sexp, out: &mut Vec<&'a str>) {
    match s.list() {
        Some(items) => items.iter().for_each(|i| atoms(i, out)),
        None => out.extend(s.atom()),
    }
}

/// Oracle that answers `true` for primes, by trial division in the shell.
fn prime_oracle(dir: &Path) -> PathBuf {
    use std::os::unix::fs::PermissionsExt;
    let path = dir.join("isprime");
    let mut f = std::fs::File::create(&path).unwrap();
    f.write_all(
        b"#!/bin/sh
# Negative literals arrive as `(- n)` and are not prime.
case \"$1\" in \\(*) echo false; exit 0;; esac
n=$1
if [ \"$n\" -lt 2 ]; then echo false; exit 0; fi
d=2
while [ $((d * d)) -le \"$n\" ]; do
  if [ $((n % d)) -eq 0 ]; then echo false; exit 0; fi
  d=$((d + 1))
done
echo true
",
    )
    .unwrap();
    drop(f);
    std::fs::set_permissions(&path, std::fs::Permissions::from_mode(0o755)).unwrap();
    path
}

#[test]
fn fib_query_shape() {
    let (_, vcs, p) = fib_problem();
    assert_eq!(p.constraints.len(), vcs.len());
    assert_eq!(p.funs.len(), 1);
    assert_eq!(p.funs[0].params, [("x".to_string(), Sort::Int), ("y".to_string(), Sort::Int)]);
    let universals: Vec<String> = p.universals.keys().map(|c| c.smt_name()).collect();
    assert_eq!(universals, ["a@0", "b@0"]);
    assert!(p.oracles.is_empty());
}

#[test]
fn fib_emission_golden() {
    let (_, _, p) = fib_problem();
    let golden = "(set-logic ALL)
(synth-fun h ((x Int) (y Int)) Bool)
(declare-var |a@0| Int)
(declare-var |b@0| Int)
(constraint (<= 0 1))
(constraint (h 0 1))
(constraint (=> (and (<= |a@0| |b@0|) (h |a@0| |b@0|)) (<= |b@0| (+ |a@0| |b@0|))))
(constraint (=> (and (<= |a@0| |b@0|) (h |a@0| |b@0|)) (h |b@0| (+ |a@0| |b@0|))))
(check-synth)
";
    assert_eq!(emit_sygus(&p), golden);
    assert_eq!(emit_sygus(&p), emit_sygus(&p.clone()));
}

#[test]
fn emitted_symbols_are_declared() {
    for (name, vcs_of) in [("fib.ucl", 1u32), ("fib-grammar.ucl", 1), ("prime-synth.ucl", 0), ("control.ucl", 3)] {
        let m = file(name);
        let vcs = if vcs_of == 1 && name.starts_with("fib") { induct(&m, 1) } else { bmc(&m, vcs_of) };
        let p = build_synthesis_query(&vcs, &m).unwrap();
        let text = emit_sygus(&p);
        let top = parse_all(&text).unwrap();
        let declared: BTreeSet<&str> = top
            .iter()
            .filter(|s| s.is_call("declare-var"))
            .filter_map(|s| s.list().and_then(|l| l[1].atom()))
            .collect();
        let mut used = Vec::new();
        for s in top.iter().filter(|s| s.is_call("constraint")) {
            atoms(s, &mut used);
        }
        for a in used.iter().filter(|a| a.starts_with('|')) {
            assert!(declared.contains(a), "{name}: {a} undeclared");
        }
        assert_eq!(top.iter().filter(|s| s.is_call("constraint")).count(), vcs.len() + p.oracle_table.len());
    }
}

#[test]
fn grammar_block_is_emitted() {
    let m = file("fib-grammar.ucl");
    let p = build_synthesis_query(&induct(&m, 1), &m).unwrap();
    let text = emit_sygus(&p);
    assert!(
        text.contains("(synth-fun h ((x Int) (y Int)) Bool\n  ((B Bool) (I Int))\n  ((B Bool ((>= I I)))\n   (I Int (x y 0 1 (+ I I)))))"),
        "{text}"
    );
}

#[test]
fn no_universals_no_declare_var() {
    let m = file("prime-synth.ucl");
    let p = build_synthesis_query(&bmc(&m, 0), &m).unwrap();
    assert!(p.universals.is_empty());
    let text = emit_sygus(&p);
    assert!(!text.contains("declare-var"), "{text}");
    // The oracle appears as an auxiliary function without a table yet.
    assert!(text.contains("(synth-fun Prime ((x0 Int)) Bool)"), "{text}");
}

#[test]
fn query_needs_a_synth_fun() {
    let m = file("counter.ucl");
    assert_eq!(build_synthesis_query(&bmc(&m, 1), &m).unwrap_err(), SynthError::NoSynthFun);
}

#[test]
fn parse_candidate_forms() {
    let (_, _, p) = fib_problem();
    let c = candidate("((define-fun h ((x Int) (y Int)) Bool (>= x 0)))", &p);
    assert_eq!(c.len(), 1);
    let want = term::app(Op::Ge, vec![term::var("x", Sort::Int), term::int_lit(0)]);
    assert_eq!(c[0].body, want);
    assert_eq!(c[0].to_smt(), "(define-fun h ((x Int) (y Int)) Bool (>= x 0))");

    let c = candidate("(define-fun h ((x Int) (y Int)) Bool true)", &p);
    assert_eq!(c[0].body, term::bool_lit(true));

    // Solver-chosen parameter names are renamed to the declared ones.
    let c = candidate("((define-fun h ((p Int) (q Int)) Bool (<= q p)))", &p);
    let want = term::app(Op::Le, vec![term::var("y", Sort::Int), term::var("x", Sort::Int)]);
    assert_eq!(c[0].body, want);

    assert_eq!(parse_candidate("infeasible", &p).unwrap_err(), SynthError::Infeasible);
    assert!(matches!(
        parse_candidate("((define-fun h ((x Int) (y Int)) Int 0))", &p),
        Err(SynthError::CandidateParse(_))
    ));
    assert!(matches!(
        parse_candidate("((define-fun h ((x Int)) Bool true))", &p),
        Err(SynthError::CandidateParse(_))
    ));
    assert!(matches!(parse_candidate("((define-fun g () Bool true))", &p), Err(SynthError::CandidateParse(_))));
    assert!(matches!(parse_candidate("unknown", &p), Err(SynthError::CandidateParse(_))));
}

#[test]
fn reference_candidate_reverifies() {
    let (_, vcs, p) = fib_problem();
    assert!(all_pass(&vcs, &candidate("((define-fun h ((x Int) (y Int)) Bool (>= x 0)))", &p)));
}

#[test]
fn trivial_candidate_leaves_step_failing() {
    let (_, vcs, p) = fib_problem();
    let rs = apply_and_reverify(&vcs, &candidate("((define-fun h ((x Int) (y Int)) Bool true))", &p), &Oracles::none(), &z3());
    let step = rs.iter().find(|r| r.name == "a_le_b@step").unwrap();
    assert!(matches!(step.verdict, Verdict::Fail(_)));
}

#[test]
fn candidate_equal_to_goal() {
    let m = src(
        "module main { var v : integer; init { v = 3; } synthesis function g(x : integer) : boolean;
           invariant p : g(v); }",
    );
    let vcs = bmc(&m, 0);
    assert_eq!(vcs.len(), 1);
    let p = build_synthesis_query(&vcs, &m).unwrap();
    assert!(all_pass(&vcs, &candidate("((define-fun g ((x Int)) Bool (= x 3)))", &p)));
}

#[test]
fn joint_synthesis_of_two_functions() {
    let m = src(
        "module main { var v : integer; synthesis function f(x : integer) : boolean;
           synthesis function g(x : integer) : boolean;
           invariant both : f(v) && !g(v); control { bmc(0); synthesize; } }",
    );
    let vcs = bmc(&m, 0);
    let mut p = build_synthesis_query(&vcs, &m).unwrap();
    assert_eq!(p.funs.len(), 2);
    let text = emit_sygus(&p);
    assert_eq!(text.matches("(synth-fun").count(), 2);
    let c = candidate("((define-fun f ((x Int)) Bool true) (define-fun g ((x Int)) Bool false))", &p);
    assert!(all_pass(&vcs, &c));
    let out = symo_loop(&mut p, &vcs, &Oracles::none(), &z3(), &sygus());
    let SynthOutcome::Solved { candidates, .. } = out else { panic!("{out:?}") };
    assert_eq!(candidates.len(), 2);
    assert!(all_pass(&vcs, &candidates));
}

#[test]
fn symo_without_oracles_solves_fib() {
    let (_, vcs, mut p) = fib_problem();
    let out = symo_loop(&mut p, &vcs, &Oracles::none(), &z3(), &sygus());
    let SynthOutcome::Solved { candidates, results } = out else { panic!("{out:?}") };
    assert!(results.iter().all(|r| r.verdict == Verdict::Pass));
    // Independent check: substitute and solve again.
    let defs = candidates.iter().map(|c| (c.name.clone(), c.fun_def())).collect();
    let again: Vec<VerificationCondition> = vcs.iter().map(|v| substitute(v, &defs)).collect();
    assert!(check_vcs(&again, &Oracles::none(), &z3()).iter().all(|r| r.verdict == Verdict::Pass));
}

#[test]
fn grammar_candidate_stays_in_grammar() {
    let m = file("fib-grammar.ucl");
    let vcs = induct(&m, 1);
    let mut p = build_synthesis_query(&vcs, &m).unwrap();
    let SynthOutcome::Solved { candidates, .. } = symo_loop(&mut p, &vcs, &Oracles::none(), &z3(), &sygus()) else {
        panic!("fib-grammar is realizable")
    };
    // Grammar: B ::= I >= I; I ::= x | y | 0 | 1 | I + I.
    fn in_i(t: &term::Term) -> bool {
        match &t.kind {
            term::TermKind::Var(_) | term::TermKind::Lit(_) => true,
            term::TermKind::App(Op::Add, a) => a.iter().all(in_i),
            _ => false,
        }
    }
    let b = &candidates[0].body;
    assert!(matches!(&b.kind, term::TermKind::App(Op::Ge, a) if a.iter().all(in_i)), "{b}");
}

#[test]
fn infeasible_problem() {
    let m = file("infeasible.ucl");
    let vcs = bmc(&m, 0);
    let mut p = build_synthesis_query(&vcs, &m).unwrap();
    assert_eq!(symo_loop(&mut p, &vcs, &Oracles::none(), &z3(), &sygus()), SynthOutcome::Infeasible);
}

#[test]
fn missing_sygus_solver_is_unknown() {
    let (_, vcs, mut p) = fib_problem();
    let cfg = SynthConfig { command: "/nonexistent/sygus".into(), ..Default::default() };
    assert!(matches!(symo_loop(&mut p, &vcs, &Oracles::none(), &z3(), &cfg), SynthOutcome::Unknown(_)));
}

#[test]
fn symo_with_prime_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let oracles = Oracles::none().with_binding("Prime", vec![Sort::Int], Sort::Bool, prime_oracle(dir.path()));
    let m = file("prime-synth.ucl");
    let vcs = bmc(&m, 0);
    let mut p = build_synthesis_query(&vcs, &m).unwrap();
    let out = symo_loop(&mut p, &vcs, &oracles, &z3(), &sygus());
    let SynthOutcome::Solved { candidates, .. } = out else { panic!("{out:?}") };
    let v = uclid_core::smt::SmtModel::default().eval(&candidates[0].body).unwrap();
    let n = v.as_int().unwrap().clone();
    assert!(n > 8.into(), "c = {n}");
    // The final candidate is prime by a fresh, direct oracle call.
    let b = oracles.binding("Prime").unwrap();
    let direct = uclid_core::smt::oracle::invoke(b, &[v], &Default::default()).unwrap();
    assert_eq!(direct, uclid_core::value::Value::Bool(true));
    // Table entries match logged invocations one to one.
    let log = oracles.log();
    assert_eq!(log.len(), oracles.table().len());
    for call in &log {
        assert_eq!(oracles.table()[&(call.fun.clone(), call.args.clone())], call.result);
    }
    // The table handed to the solver only ever grows.
    assert!(p.oracle_table.len() <= log.len());
}

proptest::proptest! {
    #![proptest_config(proptest::prelude::ProptestConfig::with_cases(16))]

    // One constraint per VC, and emission is a function of the problem.
    #[test]
    fn constraint_per_vc(k in 0u32..5, induction in proptest::bool::ANY) {
        let m = file("fib.ucl");
        let vcs = if induction { induct(&m, k + 1) } else { bmc(&m, k) };
        let p = build_synthesis_query(&vcs, &m).unwrap();
        proptest::prop_assert_eq!(p.constraints.len(), vcs.len());
        let again = build_synthesis_query(&vcs, &m).unwrap();
        proptest::prop_assert_eq!(emit_sygus(&p), emit_sygus(&again));
    }
}
