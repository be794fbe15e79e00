use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Duration;

use num_bigint::BigInt;
use num_rational::BigRational;
use uclid_core::ast::SourceFile;
use uclid_core::elab::{elaborate, TypedModule};
use uclid_core::frontend::parse;
use uclid_core::proof::{bmc, induct, observability_vc, Prepared, Provenance, VerificationCondition};
use uclid_core::smt::oracle::invoke;
use uclid_core::smt::sexp::parse_all;
use uclid_core::smt::*;
use uclid_core::term::{self, Sort, Symbols};
use uclid_core::value::{self, Value};

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn corpus(name: &str) -> TypedModule {
    let f = SourceFile::read(&root().join("corpus").join(name)).unwrap();
    elaborate(&parse(&f).unwrap()).unwrap_or_else(|e| panic!("{}", e[0]))
}

fn module(src: &str) -> TypedModule {
    elaborate(&parse(&SourceFile::new("test.ucl", src)).unwrap()).unwrap_or_else(|e| panic!("{}", e[0]))
}

fn z3() -> SolverConfig {
    SolverConfig::new("z3 -in")
}

fn cvc5() -> SolverConfig {
    SolverConfig::new(format!("{} --lang=smt2", root().join("scripts/cvc5").display()))
}

fn ival(v: i64) -> Value {
    Value::Int(BigInt::from(v))
}

fn named<'a>(vcs: &'a [VerificationCondition], name: &str) -> &'a VerificationCondition {
    vcs.iter().find(|vc| vc.name == name).unwrap_or_else(|| panic!("no VC {name}"))
}

/// Oracle answering `true` exactly for the listed integers.
fn set_oracle(dir: &Path, name: &str, members: &[i64]) -> PathBuf {
    use std::os::unix::fs::PermissionsExt;
    let path = dir.join(name);
    // Arguments arrive as SMT-LIB literals, so -3 is `(- 3)`.
    let cases = members.iter().map(|m| format!("\"{}\"", ival(*m).to_smt())).collect::<Vec<_>>().join("|");
    let mut f = std::fs::File::create(&path).unwrap();
    if members.is_empty() {
        writeln!(f, "#!/bin/sh\necho false").unwrap();
    } else {
        writeln!(f, "#!/bin/sh\ncase \"$1\" in {cases}) echo true;; *) echo false;; esac").unwrap();
    }
    drop(f);
    std::fs::set_permissions(&path, std::fs::Permissions::from_mode(0o755)).unwrap();
    path
}

fn prime_oracles(dir: &Path) -> Oracles {
    let bin = set_oracle(dir, "primes", &[2, 3, 5, 7, 11, 13]);
    Oracles::none().with_binding("Prime", vec![Sort::Int], Sort::Bool, bin)
}

#[test]
fn model_literal_forms() {
    let text = "(
      (define-fun x () Int (- 3))
      (define-fun b () (_ BitVec 4) #xA)
      (define-fun w () (_ BitVec 8) (_ bv200 8))
      (define-fun r () Real (/ 1.0 4.0))
      (define-fun a () (Array Int Int) (store ((as const (Array Int Int)) 0) 2 7))
    )";
    let m = parse_model(text).unwrap();
    assert_eq!(m.get("x"), Some(&ival(-3)));
    assert_eq!(m.get("b"), Some(&value::bv(10u32, 4)));
    assert_eq!(m.get("w"), Some(&value::bv(200u32, 8)));
    assert_eq!(m.get("r"), Some(&Value::Real(BigRational::new(1.into(), 4.into()))));
    let Some(Value::Array(a)) = m.get("a") else { panic!("array expected") };
    assert_eq!(a.select(&ival(2)), ival(7));
    assert_eq!(a.select(&ival(5)), ival(0));
}

#[test]
fn model_functions_in_both_solver_dialects() {
    let z3_style = "(
      (define-fun f ((x!0 Int)) Int (ite (= x!0 1) 5 (ite (= x!0 2) (- 1) 0)))
      (define-fun g () (Array Int Bool) (_ as-array k!0))
      (define-fun k!0 ((x!0 Int)) Bool (= x!0 4))
    )";
    let m = parse_model(z3_style).unwrap();
    assert_eq!(m.apply("f", &[ival(1)]).unwrap().unwrap(), ival(5));
    assert_eq!(m.apply("f", &[ival(2)]).unwrap().unwrap(), ival(-1));
    assert_eq!(m.apply("f", &[ival(9)]).unwrap().unwrap(), ival(0));
    let Some(Value::Array(g)) = m.get("g") else { panic!("array expected") };
    assert_eq!(g.select(&ival(4)), Value::Bool(true));
    assert_eq!(g.select(&ival(3)), Value::Bool(false));

    let cvc5_style = "(
      (define-fun f ((_arg_1 Int)) Int (ite (= _arg_1 1) 5 0))
      (define-fun |y@1| () Int 12)
    )";
    let m = parse_model(cvc5_style).unwrap();
    assert_eq!(m.apply("f", &[ival(1)]).unwrap().unwrap(), ival(5));
    assert_eq!(m.get("y@1"), Some(&ival(12)));
}

#[test]
fn model_errors_name_the_offending_form() {
    let err = parse_model("((define-fun x () Int (frobnicate 1)))").unwrap_err();
    assert!(err.to_string().contains("frobnicate"), "{err}");
    assert!(parse_model("((define-fun x () Int").is_err());
}

#[test]
fn emission_golden_for_counter_step() {
    let vcs = induct(&corpus("counter.ucl"), 1);
    let vc = named(&vcs, "x_nonneg@step");
    let text = emit_smtlib(&vc.assumptions, &vc.goal);
    let golden = "(set-option :produce-models true)
(set-logic ALL)
(declare-const |x@0| Int)
(assert (>= |x@0| 0))
(assert (not (>= (+ |x@0| 1) 0)))
(check-sat)
";
    assert_eq!(text, golden);
    parse_all(&text).unwrap();
}

#[test]
fn emission_is_deterministic_and_closed() {
    for name in ["counter.ucl", "fib-noaux.ucl", "det.ucl", "mp.ucl", "swap.ucl", "procs.ucl"] {
        let m = corpus(name);
        let p = Prepared::new(&m);
        let mut vcs = uclid_core::proof::bmc_prepared(&p, 2);
        vcs.extend(uclid_core::proof::induct_prepared(&p, 2));
        for vc in &vcs {
            let a = emit_smtlib(&vc.assumptions, &vc.goal);
            let b = emit_smtlib(&vc.assumptions, &vc.goal);
            assert_eq!(a, b, "{name} {}", vc.name);
            // Every constant is declared before the first assertion.
            let first_assert = a.find("(assert").unwrap_or(a.len());
            for c in Symbols::collect(vc.terms()).consts.keys() {
                let decl = format!("(declare-const {}", term::symbol(&c.smt_name()));
                let at = a.find(&decl).unwrap_or_else(|| panic!("{name} {}: {decl} missing", vc.name));
                assert!(at < first_assert);
            }
        }
    }
}

#[test]
fn composed_names_are_bar_quoted_and_reversible() {
    assert_eq!(term::symbol("y.1@0"), "|y.1@0|");
    assert_eq!(term::symbol("x"), "x");
    assert_eq!(term::symbol("and"), "|and|");
    for name in ["counter.ucl", "det.ucl", "det-noaxiom.ucl", "mp.ucl", "procs.ucl", "instances.ucl"] {
        let m = corpus(name);
        let vcs = bmc(&m, 2);
        let syms = Symbols::collect(vcs.iter().flat_map(|vc| vc.terms()));
        for c in syms.consts.keys() {
            let n = c.smt_name();
            assert_eq!(term::unescape_symbol(&term::symbol(&n)), n);
        }
        for f in syms.funs.keys() {
            assert_eq!(term::unescape_symbol(&term::symbol(f)), &**f);
        }
    }
}

#[test]
fn goal_true_is_unsat_for_both_solvers() {
    let vc = VerificationCondition {
        name: "trivial".into(),
        assumptions: vec![],
        goal: term::bool_lit(true),
        provenance: Provenance { command: "bmc".into(), spec: "trivial".into(), kind: None, step: 0, arity: 1 },
        states: vec![],
    };
    assert_eq!(solve(&vc, &z3()), SolveResult::Unsat);
    assert_eq!(solve(&vc, &cvc5()), SolveResult::Unsat);
    let mut file_mode = z3();
    file_mode.command = "z3 {file}".into();
    assert_eq!(solve(&vc, &file_mode), SolveResult::Unsat);
}

#[test]
fn missing_solver_is_unknown() {
    let vcs = induct(&corpus("counter.ucl"), 1);
    let cfg = SolverConfig::new("/nonexistent/solver-binary");
    assert_eq!(solve(&vcs[0], &cfg), SolveResult::Unknown("spawn failed".into()));
}

#[test]
fn slow_solver_times_out() {
    let vcs = induct(&corpus("counter.ucl"), 1);
    let mut cfg = SolverConfig::new("sleep 30");
    cfg.timeout = Duration::from_millis(300);
    let start = std::time::Instant::now();
    assert!(matches!(solve(&vcs[0], &cfg), SolveResult::Unknown(_)));
    assert!(start.elapsed() < Duration::from_secs(10));
}

#[test]
fn fib_step_model_has_negative_a() {
    let m = corpus("fib-noaux.ucl");
    let vcs = induct(&m, 1);
    let vc = named(&vcs, "a_le_b@step");
    for cfg in [z3(), cvc5()] {
        let SolveResult::Sat(model) = solve(vc, &cfg) else { panic!("step VC must be SAT under {}", cfg.command) };
        let trace = extract_trace(&model, vc);
        assert_eq!(trace.steps.len(), 2);
        let a0 = trace.value(0, "a").unwrap().as_int().unwrap().clone();
        assert!(a0 < BigInt::from(0), "a@0 = {a0}");
        assert_eq!(trace.arity, 1);
        assert_eq!(trace.spec, "a_le_b");
    }
}

#[test]
fn trace_from_bare_model_groups_by_step() {
    let vc = VerificationCondition {
        name: "v@0".into(),
        assumptions: vec![],
        goal: term::bool_lit(false),
        provenance: Provenance { command: "bmc".into(), spec: "v".into(), kind: None, step: 0, arity: 1 },
        states: vec![],
    };
    let model = parse_model("((define-fun |x@0| () Int 5))").unwrap();
    let t = extract_trace(&model, &vc);
    assert_eq!(t.steps.len(), 1);
    assert_eq!(t.value(0, "x"), Some(&ival(5)));
}

#[test]
fn unconstrained_cells_are_defaulted() {
    let m = module("module main { var x, z : integer; init { x = 0; } next { x' = x + 1; } invariant small : x < 1; }");
    let vcs = bmc(&m, 1);
    let vc = named(&vcs, "small@1");
    let SolveResult::Sat(model) = solve(vc, &z3()) else { panic!("x reaches 1") };
    let t = extract_trace(&model, vc);
    assert_eq!(t.value(1, "x"), Some(&ival(1)));
    assert!(t.defaulted.contains(&(0, "z".to_string())), "{:?}", t.defaulted);
    assert!(!t.defaulted.contains(&(1, "x".to_string())));
}

#[test]
fn det_relaxed_trace_has_two_diverging_columns() {
    let m = corpus("det-noaxiom.ucl");
    let vcs = induct(&m, 1);
    let vc = named(&vcs, "det_xy@step");
    let SolveResult::Sat(model) = solve(vc, &z3()) else { panic!("inputs are free") };
    let t = extract_trace(&model, vc);
    assert_eq!(t.arity, 2);
    let last = (t.steps.len() - 1) as u32;
    assert_ne!(t.value(last, "y.1"), t.value(last, "y.2"));
}

#[test]
fn smto_finds_prime_witness_within_two_refinements() {
    let dir = tempfile::tempdir().unwrap();
    let oracles = prime_oracles(dir.path());
    let vc = observability_vc(&Prepared::new(&corpus("prime.ucl")));
    let out = smto_check(&vc, &oracles, &z3());
    assert!(out.result.is_sat(), "{:?}", out.result);
    assert!(out.rounds <= 3, "{} solver calls", out.rounds);
    let log: Vec<(String, Vec<Value>, Value)> =
        oracles.log().into_iter().map(|c| (c.fun, c.args, c.result)).collect();
    let lemmas: Vec<(String, Vec<Value>, Value)> =
        out.lemmas.iter().map(|l| (l.fun.clone(), l.args.clone(), l.value.clone())).collect();
    assert_eq!(log, lemmas);
}

#[test]
fn smto_refutes_four_with_one_lemma() {
    let dir = tempfile::tempdir().unwrap();
    let oracles = prime_oracles(dir.path());
    let vc = observability_vc(&Prepared::new(&corpus("prime-four.ucl")));
    let out = smto_check(&vc, &oracles, &z3());
    assert_eq!(out.result, SolveResult::Unsat);
    assert_eq!(out.lemmas.len(), 1);
    assert_eq!(out.lemmas[0].args, vec![ival(4)]);
    assert_eq!(out.lemmas[0].value, Value::Bool(false));
}

#[test]
fn smto_lemmas_agree_with_fresh_invocations() {
    let dir = tempfile::tempdir().unwrap();
    let oracles = prime_oracles(dir.path());
    let m = module(
        "module main { oracle function [primes] Prime(x : integer) : boolean;
           function n() : integer;
           axiom range : n() > 3 && n() < 12 && Prime(n()) && Prime(n() + 2); }",
    );
    let vc = observability_vc(&Prepared::new(&m));
    let out = smto_check(&vc, &oracles, &z3());
    let SolveResult::Sat(model) = &out.result else { panic!("{:?}", out.result) };
    let env = SortEnv::default();
    let b = oracles.binding("Prime").unwrap();
    for l in &out.lemmas {
        assert_eq!(invoke(b, &l.args, &env).unwrap(), l.value);
    }
    // The final model is consistent with the oracle at n and n + 2.
    let n = model.get("n").unwrap().as_int().unwrap().clone();
    assert!(n == BigInt::from(5) || n == BigInt::from(11));
}

#[test]
fn smto_without_oracles_matches_solve() {
    for (file, vc_name) in [("fib-noaux.ucl", "a_le_b@step"), ("counter.ucl", "x_nonneg@step")] {
        let vcs = induct(&corpus(file), 1);
        let vc = named(&vcs, vc_name);
        let out = smto_check(vc, &Oracles::none(), &z3());
        assert_eq!(out.rounds, 1);
        assert_eq!(out.result.is_sat(), solve(vc, &z3()).is_sat());
    }
}

#[test]
fn smto_budget_exhaustion_is_unknown() {
    let dir = tempfile::tempdir().unwrap();
    // No member at all: every candidate point is refuted.
    let bin = set_oracle(dir.path(), "never", &[]);
    let oracles = Oracles::none().with_binding("P", vec![Sort::Int], Sort::Bool, bin);
    let m = module("module main { oracle function [never] P(x : integer) : boolean; function n() : integer; axiom a : P(n()); }");
    let vc = observability_vc(&Prepared::new(&m));
    let mut cfg = z3();
    cfg.smto_budget = 3;
    let out = smto_check(&vc, &oracles, &cfg);
    assert_eq!(out.result, SolveResult::Unknown("oracle budget".into()));
    assert_eq!(out.lemmas.len(), 3);
}

#[test]
fn oracle_protocol_literals() {
    let dir = tempfile::tempdir().unwrap();
    let bin = set_oracle(dir.path(), "neg", &[-3]);
    let oracles = Oracles::none().with_binding("N", vec![Sort::Int], Sort::Bool, bin);
    assert_eq!(oracles.query("N", &[ival(-3)]).unwrap(), (Value::Bool(true), true));
    // A repeated point is answered from the table.
    assert_eq!(oracles.query("N", &[ival(-3)]).unwrap(), (Value::Bool(true), false));
    assert_eq!(oracles.log().len(), 1);
    let table: BTreeMap<_, _> = oracles.table();
    assert_eq!(table.len(), 1);
}
