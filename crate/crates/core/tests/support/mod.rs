//! Helpers shared by integration tests: corpus loading, a generator of
//! random deterministic models, and counterexample replay through the
//! concrete interpreter.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use uclid_core::ast::*;
use uclid_core::elab::{elaborate, TypedModule};
use uclid_core::frontend::parse;
use uclid_core::proof::{CexTrace, VerificationCondition};
use uclid_core::symexec::interp::{concrete_interpret, no_functions, Interp, State};
use uclid_core::symexec::ObligationKind;
use uclid_core::term::{EvalCtx, Sort, SymConst};
use uclid_core::value::{self, EvalError, Value};

pub fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn modules(text: &str) -> Vec<AstModule> {
    parse(&SourceFile::new("test.ucl", text)).unwrap_or_else(|e| panic!("{}", e[0]))
}

pub fn corpus(name: &str) -> Vec<AstModule> {
    parse(&SourceFile::read(&root().join("corpus").join(name)).unwrap()).unwrap()
}

pub fn elab(ms: &[AstModule]) -> TypedModule {
    elaborate(ms).unwrap_or_else(|e| panic!("{}", e[0]))
}

pub fn ival(v: i64) -> Value {
    Value::Int(BigInt::from(v))
}

/// Evaluates terms with step-0 state constants and inputs taken from
/// `inputs`; any other constant (locals, havoc) takes the sort default.
pub struct InputCtx<'a> {
    pub m: &'a TypedModule,
    pub inputs: &'a [State],
}

impl EvalCtx for InputCtx<'_> {
    fn konst(&self, c: &SymConst, sort: &Sort) -> Result<Value, EvalError> {
        let name = &*c.name;
        let given = |s: u32| self.inputs.get(s as usize).and_then(|m| m.get(name)).cloned();
        let v = match self.m.var(name) {
            Some(v) if v.kind == VarKind::Input => given(c.step),
            Some(_) if c.step == 0 => given(0),
            _ => None,
        };
        Ok(v.unwrap_or_else(|| Value::default_of(sort)))
    }

    fn apply(&self, f: &str, _: &[Value], _: &Sort) -> Result<Value, EvalError> {
        Err(EvalError::Unsupported(f.to_string()))
    }
}

// Random deterministic models for the differential test. They avoid integer
// division, havoc and functions, so every value is fixed by the inputs.
pub struct ModelGen {
    rng: ChaCha8Rng,
    ints: Vec<String>,
    bools: Vec<String>,
    bvs: Vec<String>,
}

impl ModelGen {
    fn pick<'a>(&mut self, xs: &'a [String]) -> &'a str {
        &xs[self.rng.gen_range(0..xs.len())]
    }

    fn int_expr(&mut self, d: u32) -> String {
        let leaf = d == 0 || self.rng.gen_bool(0.3);
        if leaf {
            return if self.rng.gen_bool(0.6) {
                let ints = self.ints.clone();
                self.pick(&ints).to_string()
            } else {
                self.rng.gen_range(0..10).to_string()
            };
        }
        match self.rng.gen_range(0..6) {
            0 | 1 => format!("({} + {})", self.int_expr(d - 1), self.int_expr(d - 1)),
            2 => format!("({} - {})", self.int_expr(d - 1), self.int_expr(d - 1)),
            3 => format!("({} * {})", self.int_expr(d - 1), self.rng.gen_range(-2..3)),
            4 => format!("(if {} then {} else {})", self.bool_expr(d - 1), self.int_expr(d - 1), self.int_expr(d - 1)),
            _ => format!("(-{})", self.int_expr(d - 1)),
        }
    }

    fn bool_expr(&mut self, d: u32) -> String {
        if d == 0 || self.rng.gen_bool(0.25) {
            return match self.rng.gen_range(0..4) {
                0 => "true".into(),
                _ => {
                    let bools = self.bools.clone();
                    self.pick(&bools).to_string()
                }
            };
        }
        match self.rng.gen_range(0..7) {
            0 => format!("({} < {})", self.int_expr(d - 1), self.int_expr(d - 1)),
            1 => format!("({} == {})", self.int_expr(d - 1), self.int_expr(d - 1)),
            2 => format!("!{}", self.bool_expr(d - 1)),
            3 => format!("({} && {})", self.bool_expr(d - 1), self.bool_expr(d - 1)),
            4 => format!("({} || {})", self.bool_expr(d - 1), self.bool_expr(d - 1)),
            5 => format!("({} <= {})", self.bv_expr(d - 1), self.bv_expr(d - 1)),
            _ => format!("({} ==> {})", self.bool_expr(d - 1), self.bool_expr(d - 1)),
        }
    }

    fn bv_expr(&mut self, d: u32) -> String {
        if d == 0 || self.rng.gen_bool(0.3) {
            return if self.rng.gen_bool(0.6) {
                let bvs = self.bvs.clone();
                self.pick(&bvs).to_string()
            } else {
                format!("{}bv8", self.rng.gen_range(0..256))
            };
        }
        let (a, b) = (self.bv_expr(d - 1), self.bv_expr(d - 1));
        match self.rng.gen_range(0..8) {
            0 => format!("({a} + {b})"),
            1 => format!("({a} - {b})"),
            2 => format!("({a} * {b})"),
            3 => format!("({a} & {b})"),
            4 => format!("({a} ^ {b})"),
            5 => format!("({a} / {b})"),
            6 => format!("({a}[3:0] ++ {b}[7:4])"),
            _ => format!("~{a}"),
        }
    }

    fn expr_for(&mut self, var: &str, d: u32) -> String {
        match var.as_bytes()[0] {
            b'x' => self.int_expr(d),
            b'p' => self.bool_expr(d),
            _ => self.bv_expr(d),
        }
    }

    /// Assigns each of `vars` at most once on every path.
    fn assignments(&mut self, vars: &[String], primed: bool, depth: u32, out: &mut String) {
        let tick = if primed { "'" } else { "" };
        let mut rest = Vec::new();
        for v in vars {
            if self.rng.gen_bool(0.5) {
                let e = self.expr_for(v, 3);
                let _ = writeln!(out, "{v}{tick} = {e};");
            } else {
                rest.push(v.clone());
            }
        }
        if !rest.is_empty() && depth > 0 {
            let c = self.bool_expr(2);
            let _ = writeln!(out, "if ({c}) {{");
            let mut then_vars = rest.clone();
            then_vars.retain(|_| self.rng.gen_bool(0.7));
            self.assignments(&then_vars, primed, depth - 1, out);
            out.push_str("} else {\n");
            let mut else_vars = rest.clone();
            else_vars.retain(|_| self.rng.gen_bool(0.7));
            self.assignments(&else_vars, primed, depth - 1, out);
            out.push_str("}\n");
        }
    }

    pub fn model(seed: u64) -> String {
        let mut g = ModelGen { rng: ChaCha8Rng::seed_from_u64(seed), ints: vec![], bools: vec![], bvs: vec![] };
        let ni = g.rng.gen_range(1..4);
        let nb = g.rng.gen_range(0..3);
        let nw = g.rng.gen_range(0..3);
        let xs: Vec<String> = (0..ni).map(|i| format!("x{i}")).collect();
        let ps: Vec<String> = (0..nb).map(|i| format!("p{i}")).collect();
        let ws: Vec<String> = (0..nw).map(|i| format!("w{i}")).collect();
        let mut src = String::from("module main {\n");
        let decl = |src: &mut String, kw: &str, names: &[String], ty: &str| {
            if !names.is_empty() {
                let _ = writeln!(src, "{kw} {} : {ty};", names.join(", "));
            }
        };
        decl(&mut src, "var", &xs, "integer");
        decl(&mut src, "var", &ps, "boolean");
        decl(&mut src, "var", &ws, "bv8");
        decl(&mut src, "input", &["xi".to_string()], "integer");
        decl(&mut src, "input", &["pi".to_string()], "boolean");
        decl(&mut src, "input", &["wi".to_string()], "bv8");
        g.ints = xs.iter().cloned().chain(["xi".to_string()]).collect();
        g.bools = ps.iter().cloned().chain(["pi".to_string()]).collect();
        g.bvs = ws.iter().cloned().chain(["wi".to_string()]).collect();
        let state: Vec<String> = xs.iter().chain(&ps).chain(&ws).cloned().collect();

        // A procedure with a body exercises inlining in both blocks.
        let with_proc = g.rng.gen_bool(0.4);
        if with_proc {
            src.push_str("procedure bump(d : integer) returns (r : integer) modifies x0; { x0 = x0 + d; r = x0 * 2; }\n");
        }
        let others: Vec<String> = state.iter().filter(|v| !(with_proc && *v == "x0")).cloned().collect();

        src.push_str("init {\n");
        let init_vars: Vec<String> = state.iter().filter(|_| g.rng.gen_bool(0.6)).cloned().collect();
        g.assignments(&init_vars, false, 1, &mut src);
        src.push_str("}\nnext {\nvar t : integer;\n");
        let e = g.int_expr(2);
        let _ = writeln!(src, "t = {e};");
        if g.rng.gen_bool(0.5) {
            let n = g.rng.gen_range(0..4);
            let _ = writeln!(src, "for k in 0..{n} {{ t = t + k * {}; }}", g.rng.gen_range(1..3));
        }
        g.ints.push("t".into());
        if with_proc {
            let _ = writeln!(src, "call (t) = bump({});", g.int_expr(1));
        }
        g.assignments(&others, true, 2, &mut src);
        src.push_str("}\n}\n");
        src
    }
}

pub fn random_inputs(m: &TypedModule, seed: u64, k: u32) -> Vec<State> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    (0..=k)
        .map(|s| {
            m.vars
                .iter()
                .filter(|v| s == 0 || v.kind == VarKind::Input)
                .map(|v| {
                    let val = match v.sort {
                        Sort::Int => ival(rng.gen_range(-20..20)),
                        Sort::Bool => Value::Bool(rng.gen()),
                        Sort::BitVec(w) => value::bv(rng.gen_range(0u32..256), w),
                        _ => unreachable!(),
                    };
                    (v.name.clone(), val)
                })
                .collect()
        })
        .collect()
}


/// Runs the differential check on generated models `seeds` for `k` steps:
/// the symbolic state of every variable, evaluated under the inputs, must
/// equal the interpreter's value. Returns one description per mismatch.
pub fn differential_mismatches(seeds: std::ops::Range<u64>, k: u32) -> Vec<String> {
    use uclid_core::symexec::{unroll, SymExec};
    let mut bad = Vec::new();
    for seed in seeds {
        let src = ModelGen::model(seed);
        let ms = modules(&src);
        let m = elab(&ms);
        let inputs = random_inputs(&m, seed, k);
        let states = unroll(&SymExec::new(&m), k);
        let on_source = concrete_interpret(&ms[0], &inputs, k, &no_functions).unwrap();
        let on_lowered = concrete_interpret(m.to_ast(), &inputs, k, &no_functions).unwrap();
        if on_source.states != on_lowered.states {
            bad.push(format!("seed {seed}: lowered module diverges from source\n{src}"));
        }
        let ctx = InputCtx { m: &m, inputs: &inputs };
        for (s, conc) in states.iter().zip(&on_source.states) {
            for (name, t) in &s.env {
                match uclid_core::term::eval(t, &ctx) {
                    Ok(v) if v == conc[name] => {}
                    got => bad.push(format!("seed {seed}, step {}, var {name}: {got:?} vs {}\n{src}", s.step, conc[name])),
                }
            }
        }
    }
    bad
}

/// Column `var` of trace `j` in a trace of arity `n`.
fn column(var: &str, j: u32, n: u32) -> String {
    if n == 1 {
        var.to_string()
    } else {
        format!("{var}.{j}")
    }
}

/// Replays a FAIL trace of `vc` on the original module `m` through the
/// concrete interpreter, one run per trace copy, with inputs (and, for
/// induction step VCs, the starting state) taken from the trace. Succeeds
/// when every solver-constrained cell is reproduced and the violated spec
/// is false at the last step.
pub fn replay(m: &TypedModule, vc: &VerificationCondition, t: &CexTrace) -> Result<(), String> {
    let from_init = !vc.name.ends_with("@step");
    let mut ast = m.to_ast().clone();
    if !from_init {
        ast.decls.retain(|d| !matches!(d.kind, DeclKind::Init(_)));
    }
    let k = t.steps.len() as u32 - 1;
    let n = t.arity;
    let mut runs = Vec::new();
    for j in 1..=n {
        let inputs: Vec<State> = t
            .steps
            .iter()
            .map(|s| {
                m.vars
                    .iter()
                    .filter(|v| s.index == 0 || v.kind == VarKind::Input)
                    .filter_map(|v| Some((v.name.clone(), s.values.get(&column(&v.name, j, n))?.clone())))
                    .collect()
            })
            .collect();
        let run = concrete_interpret(&ast, &inputs, k, &no_functions).map_err(|e| e.to_string())?;
        for s in &t.steps {
            for v in &m.vars {
                let col = column(&v.name, j, n);
                if t.defaulted.contains(&(s.index, col.clone())) {
                    continue;
                }
                if let Some(want) = s.values.get(&col) {
                    let got = &run.states[s.index as usize][&v.name];
                    if got != want {
                        return Err(format!("{}: step {} {col}: replay {got}, trace {want}", vc.name, s.index));
                    }
                }
            }
        }
        runs.push(run);
    }
    let spec = &vc.provenance.spec;
    let last = |r: &uclid_core::symexec::interp::ConcreteTrace| r.states[k as usize].clone();
    let it = Interp::new(&ast, &no_functions).map_err(|e| e.to_string())?;
    let violated = match vc.provenance.kind {
        Some(ObligationKind::Invariant) => {
            let s = m.invariants.iter().find(|s| &s.name == spec).ok_or("unknown invariant")?;
            !it.eval_spec(&s.expr, &last(&runs[0])).map_err(|e| e.to_string())?
        }
        Some(ObligationKind::HyperInvariant) => {
            let s = m.hyperinvariants.iter().find(|s| &s.name == spec).ok_or("unknown hyperinvariant")?;
            let states: Vec<State> = runs.iter().map(last).collect();
            !it.eval_hyper(&s.expr, &states, None).map_err(|e| e.to_string())?
        }
        Some(ObligationKind::Assert) => runs.iter().any(|r| r.failed_asserts.contains(&(k, spec.clone()))),
        other => return Err(format!("{}: cannot replay {other:?}", vc.name)),
    };
    if violated {
        Ok(())
    } else {
        Err(format!("{}: {spec} holds at step {k} of the replay", vc.name))
    }
}

/// Modules in the corpus that are plain transition systems: no synthesis
/// or oracle functions.
pub const PLAIN_CORPUS: [&str; 8] =
    ["counter.ucl", "det-noaxiom.ucl", "det.ucl", "fib-noaux.ucl", "instances.ucl", "mp.ucl", "procs.ucl", "swap.ucl"];

pub fn by_name(vcs: &[VerificationCondition]) -> BTreeMap<String, &VerificationCondition> {
    vcs.iter().map(|vc| (vc.name.clone(), vc)).collect()
}
