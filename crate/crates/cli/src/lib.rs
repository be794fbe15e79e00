//! Command-line driver: flags, file loading, report printing, exit codes.

use std::io::Write;
use std::path::PathBuf;
use std::time::Duration;

use clap::Parser;
use uclid_core::ast::{AstModule, SourceFile};
use uclid_core::elab::elaborate;
use uclid_core::frontend::parser::parse;
use uclid_core::frontend::printer::pretty_print;
use uclid_core::proof::{run_control, EngineConfig, ProofResult};
use uclid_core::smt::solver::{DEFAULT_SOLVER, DEFAULT_SYGUS_SOLVER};
use uclid_core::smt::SolverConfig;
use uclid_core::synth::SynthConfig;

pub const EXIT_USAGE: i32 = 3;

#[derive(Parser, Debug, Clone)]
#[command(name = "uclid-mini", version, about = "Verify and synthesize uclid-mini models")]
pub struct CliConfig {
    /// Model files; their modules share one namespace and `main` is verified.
    #[arg(required = true)]
    pub files: Vec<PathBuf>,
    /// SMT solver command; `{file}` stands for the script path, otherwise
    /// the script is piped to standard input.
    #[arg(long, env = "UCLID_MINI_SOLVER", default_value = DEFAULT_SOLVER)]
    pub solver: String,
    #[arg(long, default_value = DEFAULT_SYGUS_SOLVER)]
    pub sygus_solver: String,
    /// Per-query solver timeout in seconds.
    #[arg(long, default_value_t = 30, value_parser = clap::value_parser!(u64).range(1..))]
    pub timeout: u64,
    /// Write every solver script to this directory.
    #[arg(long)]
    pub emit_dir: Option<PathBuf>,
    #[arg(short, long, action = clap::ArgAction::Count)]
    pub verbose: u8,
    /// Print the counterexample of every failing check.
    #[arg(long)]
    pub print_cex: bool,
    /// Print every counterexample, marking values the solver left open.
    #[arg(long)]
    pub dump_trace: bool,
    /// Print the elaborated main module before verifying it.
    #[arg(long)]
    pub emit_elaborated: bool,
    #[arg(long, default_value_t = 64, value_parser = clap::value_parser!(u64).range(1..))]
    pub smto_budget: u64,
    #[arg(long, default_value_t = 16, value_parser = clap::value_parser!(u64).range(1..))]
    pub symo_budget: u64,
    /// Extra directory searched for oracle binaries (repeatable).
    #[arg(long)]
    pub oracle_dir: Vec<PathBuf>,
}

impl CliConfig {
    pub fn engine(&self) -> EngineConfig {
        let timeout = Duration::from_secs(self.timeout);
        let mut oracle_dirs = self.oracle_dir.clone();
        for f in &self.files {
            let dir = f.parent().map(PathBuf::from).unwrap_or_default();
            let dir = if dir.as_os_str().is_empty() { PathBuf::from(".") } else { dir };
            if !oracle_dirs.contains(&dir) {
                oracle_dirs.push(dir);
            }
        }
        EngineConfig {
            smt: SolverConfig {
                command: self.solver.clone(),
                timeout,
                emit_dir: self.emit_dir.clone(),
                smto_budget: self.smto_budget as usize,
                oracle_dirs,
            },
            synth: SynthConfig { command: self.sygus_solver.clone(), timeout, budget: self.symo_budget as usize },
            print_cex: self.print_cex && !self.dump_trace,
        }
    }
}

/// Parses every file; diagnostics of all files are reported together.
pub fn load(files: &[PathBuf]) -> Result<Vec<AstModule>, Vec<String>> {
    let mut modules = Vec::new();
    let mut errors = Vec::new();
    for f in files {
        match SourceFile::read(f) {
            Ok(src) => match parse(&src) {
                Ok(ms) => modules.extend(ms),
                Err(ds) => errors.extend(ds.iter().map(|d| d.to_string())),
            },
            Err(e) => errors.push(format!("{}: {e}", f.display())),
        }
    }
    if errors.is_empty() {
        Ok(modules)
    } else {
        Err(errors)
    }
}

fn dump_traces(r: &ProofResult, out: &mut dyn Write) -> std::io::Result<()> {
    for v in &r.results {
        let Some(t) = v.verdict.trace() else { continue };
        writeln!(out, "counterexample {}", v.name)?;
        for s in &t.steps {
            for (var, val) in &s.values {
                let note = if t.defaulted.contains(&(s.index, var.clone())) { " (unconstrained)" } else { "" };
                writeln!(out, "step {}: {var} = {val}{note}", s.index)?;
            }
        }
    }
    Ok(())
}

/// Runs the tool on `argv` (program name first) and returns the exit code.
pub fn run(argv: &[String], out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cfg = match CliConfig::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                return 0;
            }
            let _ = write!(err, "{e}");
            return EXIT_USAGE;
        }
    };
    let modules = match load(&cfg.files) {
        Ok(m) => m,
        Err(es) => {
            for e in es {
                let _ = writeln!(err, "{e}");
            }
            return EXIT_USAGE;
        }
    };
    let m = match elaborate(&modules) {
        Ok(m) => m,
        Err(ds) => {
            for d in ds {
                let _ = writeln!(err, "{d}");
            }
            return EXIT_USAGE;
        }
    };
    if cfg.emit_elaborated {
        let _ = write!(out, "{}", pretty_print(m.to_ast()));
    }
    if cfg.verbose > 0 {
        let _ = writeln!(err, "verifying module {} with `{}`", m.name, cfg.solver);
    }
    let result = run_control(&m, &cfg.engine());
    for l in &result.lines {
        let _ = writeln!(out, "{l}");
    }
    if cfg.dump_trace {
        let _ = dump_traces(&result, out);
    }
    if cfg.verbose > 1 {
        for c in &result.oracle_log {
            let args: Vec<String> = c.args.iter().map(|a| a.to_smt()).collect();
            let _ = writeln!(err, "oracle {}({}) = {}", c.fun, args.join(", "), c.result.to_smt());
        }
    }
    result.exit_code()
}
