//! Execution of a module's control block.

use std::time::Instant;

use super::engine::{bmc_prepared, check_vc, check_vcs, induct_prepared, observability_vc, verify_procedure, Prepared, VcResult};
use super::vc::{Verdict, VerificationCondition};
use crate::ast::{Command, Expectation};
use crate::elab::TypedModule;
use crate::smt::{OracleCall, OracleError, Oracles, SolverConfig};
use crate::synth::{build_synthesis_query, symo_loop, CandidateFunction, SynthConfig, SynthOutcome};

#[derive(Clone, Debug, Default)]
pub struct EngineConfig {
    pub smt: SolverConfig,
    pub synth: SynthConfig,
    /// Print the trace of every FAIL without an explicit `print_cex`.
    pub print_cex: bool,
}

#[derive(Clone, Debug, Default)]
pub struct ProofResult {
    /// Verdicts in the order their VCs were generated.
    pub results: Vec<VcResult>,
    /// Report output, one entry per line.
    pub lines: Vec<String>,
    /// Declared observability expectation of each `check_sat` and whether it held.
    pub expectations: Vec<(Expectation, bool)>,
    pub synthesized: Vec<CandidateFunction>,
    pub oracle_log: Vec<OracleCall>,
}

impl ProofResult {
    /// 1 on FAIL, INFEASIBLE or a violated expectation; otherwise 2 on
    /// UNKNOWN; otherwise 0.
    pub fn exit_code(&self) -> i32 {
        let failed = self.results.iter().any(|r| matches!(r.verdict, Verdict::Fail(_) | Verdict::Infeasible))
            || self.expectations.iter().any(|(_, met)| !met);
        if failed {
            1
        } else if self.results.iter().any(|r| matches!(r.verdict, Verdict::Unknown(_))) {
            2
        } else {
            0
        }
    }

    pub fn verdict(&self, name: &str) -> Option<&Verdict> {
        self.results.iter().find(|r| r.name == name).map(|r| &r.verdict)
    }
}

/// Commands run when a module has no control block.
pub fn default_control() -> Vec<Command> {
    vec![Command::Induction, Command::Check, Command::PrintResults]
}

struct Run<'a> {
    m: &'a TypedModule,
    prepared: Option<Prepared>,
    cfg: &'a EngineConfig,
    oracles: Result<Oracles, OracleError>,
    pending: Vec<VerificationCondition>,
    out: ProofResult,
    /// Index of the first result whose trace has not been printed.
    cex_from: usize,
}

impl Run<'_> {
    fn prepared(&mut self) -> &Prepared {
        let m = self.m;
        self.prepared.get_or_insert_with(|| Prepared::new(m))
    }

    fn record(&mut self, rs: Vec<VcResult>) {
        for r in rs {
            self.out.lines.push(r.report_line());
            self.out.results.push(r);
        }
        if self.cfg.print_cex {
            self.print_cex(&[]);
        }
    }

    fn solve(&self, vcs: &[VerificationCondition]) -> Vec<VcResult> {
        match &self.oracles {
            Ok(o) => check_vcs(vcs, o, &self.cfg.smt),
            Err(e) => vcs.iter().map(|vc| unknown(&vc.name, e.to_string(), vc)).collect(),
        }
    }

    fn check(&mut self) {
        if self.m.synth_funs().next().is_some() {
            return self.synthesize();
        }
        let vcs = std::mem::take(&mut self.pending);
        let rs = self.solve(&vcs);
        self.record(rs);
    }

    fn synthesize(&mut self) {
        if self.pending.is_empty() {
            let vcs = induct_prepared(self.prepared(), 1);
            self.pending = vcs;
        }
        let vcs = std::mem::take(&mut self.pending);
        let start = Instant::now();
        let oracles = match &self.oracles {
            Ok(o) => o,
            Err(e) => {
                let r = synthesis_result(Verdict::Unknown(e.to_string()), start);
                return self.record(vec![r]);
            }
        };
        let mut problem = match build_synthesis_query(&vcs, self.m) {
            Ok(p) => p,
            Err(e) => {
                let r = synthesis_result(Verdict::Unknown(e.to_string()), start);
                return self.record(vec![r]);
            }
        };
        match symo_loop(&mut problem, &vcs, oracles, &self.cfg.smt, &self.cfg.synth) {
            SynthOutcome::Solved { candidates, results } => {
                for c in &candidates {
                    self.out.lines.push(format!("synthesized {}", c.to_smt()));
                }
                self.out.synthesized = candidates;
                self.record(results);
            }
            SynthOutcome::Infeasible => self.record(vec![synthesis_result(Verdict::Infeasible, start)]),
            SynthOutcome::Unknown(r) => self.record(vec![synthesis_result(Verdict::Unknown(r), start)]),
        }
    }

    fn check_sat(&mut self, expect: Option<Expectation>) {
        let vc = observability_vc(self.prepared());
        let r = match &self.oracles {
            Ok(o) => {
                let mut r = check_vc(&vc, o, &self.cfg.smt);
                r.verdict = match r.verdict {
                    Verdict::Pass => Verdict::Unobservable,
                    Verdict::Fail(t) => Verdict::Observable(t),
                    other => other,
                };
                r
            }
            Err(e) => unknown(&vc.name, e.to_string(), &vc),
        };
        if let Some(exp) = expect {
            let met = match exp {
                Expectation::Observable => matches!(r.verdict, Verdict::Observable(_)),
                Expectation::Unobservable => r.verdict == Verdict::Unobservable,
            };
            // An UNKNOWN answer is reported as such, not as a violated expectation.
            if !matches!(r.verdict, Verdict::Unknown(_)) {
                self.out.expectations.push((exp, met));
            }
        }
        self.record(vec![r]);
    }

    fn print_cex(&mut self, vars: &[String]) {
        let mut lines = Vec::new();
        for r in &self.out.results[self.cex_from..] {
            if let Some(t) = r.verdict.trace() {
                lines.push(format!("counterexample {}", r.name));
                lines.extend(t.lines(vars));
            }
        }
        self.out.lines.extend(lines);
        self.cex_from = self.out.results.len();
    }
}

fn unknown(name: &str, reason: String, vc: &VerificationCondition) -> VcResult {
    VcResult {
        name: name.to_string(),
        verdict: Verdict::Unknown(reason),
        time: Default::default(),
        provenance: vc.provenance.clone(),
        model: None,
    }
}

fn synthesis_result(verdict: Verdict, start: Instant) -> VcResult {
    VcResult {
        name: "synthesis".into(),
        verdict,
        time: start.elapsed(),
        provenance: super::vc::Provenance {
            command: "synthesize".into(),
            spec: "synthesis".into(),
            kind: None,
            step: 0,
            arity: 1,
        },
        model: None,
    }
}

/// Runs the control block (or [`default_control`]) of `m`. VC-generating
/// commands queue VCs; `check` solves the queue, or synthesizes when the
/// module has synthesis functions; VCs still queued at the end are checked.
/// Report lines are produced as verdicts arrive, so `print_results` has
/// nothing left to do.
pub fn run_control(m: &TypedModule, cfg: &EngineConfig) -> ProofResult {
    let commands: Vec<Command> =
        if m.control.is_empty() { default_control() } else { m.control.iter().map(|(c, _)| c.clone()).collect() };
    let mut run = Run {
        m,
        prepared: None,
        cfg,
        oracles: Oracles::for_module(m, &cfg.smt.oracle_dirs),
        pending: Vec::new(),
        out: ProofResult::default(),
        cex_from: 0,
    };
    for c in commands {
        match c {
            Command::Bmc(k) => {
                let vcs = bmc_prepared(run.prepared(), k);
                run.pending.extend(vcs);
            }
            Command::Induction => {
                let vcs = induct_prepared(run.prepared(), 1);
                run.pending.extend(vcs);
            }
            Command::KInduction(k) => {
                let vcs = induct_prepared(run.prepared(), k.max(1));
                run.pending.extend(vcs);
            }
            Command::Verify(p) => run.pending.extend(verify_procedure(m, &p)),
            Command::Check => run.check(),
            Command::Synthesize => run.synthesize(),
            Command::CheckSat(e) => run.check_sat(e),
            Command::PrintResults => {}
            Command::PrintCex(vars) => {
                run.cex_from = 0;
                run.print_cex(&vars);
            }
        }
    }
    if !run.pending.is_empty() {
        run.check();
    }
    if let Ok(o) = &run.oracles {
        run.out.oracle_log = o.log();
    }
    run.out
}
