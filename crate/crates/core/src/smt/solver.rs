//! External solver processes. One process per query; the process is killed
//! when its handle is dropped, so a timeout never leaves it running.

use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::time::{Duration, Instant};

use super::model::{parse_model_with, SmtModel, SortEnv};

/// Token in a solver command line replaced by the script path. Without it
/// the script is written to the solver's standard input.
pub const FILE_PLACEHOLDER: &str = "{file}";

pub const DEFAULT_SOLVER: &str = "z3 -in";
/// cvc5's incremental linearization stalls on ground polynomial
/// constraints over constant synth-funs, so it is switched off.
pub const DEFAULT_SYGUS_SOLVER: &str = "cvc5 --lang=sygus2 --nl-ext=none";

#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub command: String,
    pub timeout: Duration,
    pub emit_dir: Option<PathBuf>,
    /// Refinement rounds of the oracle loop before giving up.
    pub smto_budget: usize,
    /// Directories searched, in order, for oracle binaries before the
    /// executable's own directory and `PATH`.
    pub oracle_dirs: Vec<PathBuf>,
}

impl SolverConfig {
    pub fn new(command: impl Into<String>) -> Self {
        SolverConfig {
            command: command.into(),
            timeout: Duration::from_secs(30),
            emit_dir: None,
            smto_budget: 64,
            oracle_dirs: Vec::new(),
        }
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig::new(DEFAULT_SOLVER)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SolveResult {
    Sat(SmtModel),
    Unsat,
    Unknown(String),
}

impl SolveResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, SolveResult::Sat(_))
    }
}

#[derive(Debug, PartialEq, Eq)]
enum ReadError {
    Timeout,
    Eof,
}

/// A running solver. Stdout lines arrive through a reader thread so that
/// every read can honor the deadline.
struct Session {
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<String>,
    deadline: Instant,
    _script: Option<tempfile::NamedTempFile>,
}

impl Session {
    /// Starts `command` on `script`; the script goes through a temporary
    /// file when the command names one, through stdin otherwise.
    fn start(command: &str, script: &str, timeout: Duration) -> Result<Session, String> {
        let mut argv = shlex::split(command).filter(|a| !a.is_empty()).ok_or("spawn failed: bad command line")?;
        if argv.is_empty() {
            return Err("spawn failed: empty command".into());
        }
        let mut file = None;
        if argv.iter().any(|a| a.contains(FILE_PLACEHOLDER)) {
            let mut f = tempfile::Builder::new().suffix(".smt2").tempfile().map_err(|e| format!("spawn failed: {e}"))?;
            f.write_all(script.as_bytes()).map_err(|e| format!("spawn failed: {e}"))?;
            let path = f.path().display().to_string();
            for a in &mut argv {
                *a = a.replace(FILE_PLACEHOLDER, &path);
            }
            file = Some(f);
        }
        let mut child = Command::new(&argv[0])
            .args(&argv[1..])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|_| "spawn failed".to_string())?;
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        std::thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let Ok(line) = line else { break };
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        let mut s = Session {
            stdin: child.stdin.take(),
            child,
            lines: rx,
            deadline: Instant::now() + timeout,
            _script: file,
        };
        if s._script.is_none() {
            s.send(script)?;
        } else {
            s.stdin = None;
        }
        Ok(s)
    }

    fn send(&mut self, text: &str) -> Result<(), String> {
        let stdin = self.stdin.as_mut().ok_or("solver input closed")?;
        stdin.write_all(text.as_bytes()).and_then(|_| stdin.flush()).map_err(|e| format!("solver input: {e}"))
    }

    fn close_input(&mut self) {
        self.stdin = None;
    }

    fn read_line(&mut self) -> Result<String, ReadError> {
        let left = self.deadline.saturating_duration_since(Instant::now());
        match self.lines.recv_timeout(left) {
            Ok(l) => Ok(l),
            Err(RecvTimeoutError::Timeout) => Err(ReadError::Timeout),
            Err(RecvTimeoutError::Disconnected) => Err(ReadError::Eof),
        }
    }

    /// Everything the solver prints until it exits.
    fn read_to_end(&mut self) -> Result<String, ReadError> {
        let mut out = String::new();
        loop {
            match self.read_line() {
                Ok(l) => {
                    out.push_str(&l);
                    out.push('\n');
                }
                Err(ReadError::Eof) => return Ok(out),
                Err(e) => return Err(e),
            }
        }
    }
}

impl Drop for Session {
    fn drop(&mut self) {
        self.stdin = None;
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

fn timeout_reason(t: Duration) -> String {
    format!("timeout after {}s", t.as_secs_f64())
}

/// Runs an SMT-LIB script ending in `(check-sat)`; on `sat` asks for the
/// model and parses it against `env`.
pub fn solve_script(script: &str, env: &SortEnv, cfg: &SolverConfig) -> SolveResult {
    let file_mode = cfg.command.contains(FILE_PLACEHOLDER);
    let text = if file_mode { format!("{script}(get-model)\n(exit)\n") } else { script.to_string() };
    let mut s = match Session::start(&cfg.command, &text, cfg.timeout) {
        Ok(s) => s,
        Err(e) => return SolveResult::Unknown(e),
    };
    let verdict = loop {
        match s.read_line() {
            Ok(l) => {
                let l = l.trim();
                if l.is_empty() || l == "success" {
                    continue;
                }
                break l.to_string();
            }
            Err(ReadError::Timeout) => return SolveResult::Unknown(timeout_reason(cfg.timeout)),
            Err(ReadError::Eof) => return SolveResult::Unknown("solver exited without a verdict".into()),
        }
    };
    match verdict.as_str() {
        "unsat" => SolveResult::Unsat,
        "sat" => {
            if !file_mode {
                if let Err(e) = s.send("(get-model)\n(exit)\n") {
                    return SolveResult::Unknown(e);
                }
                s.close_input();
            }
            let text = match s.read_to_end() {
                Ok(t) => t,
                Err(_) => return SolveResult::Unknown(timeout_reason(cfg.timeout)),
            };
            if let Some(err) = text.lines().find(|l| l.trim_start().starts_with("(error")) {
                return SolveResult::Unknown(format!("solver error: {}", err.trim()));
            }
            match parse_model_with(&text, env) {
                Ok(m) => SolveResult::Sat(m),
                Err(e) => SolveResult::Unknown(format!("model parse failed: {e}")),
            }
        }
        "unknown" => SolveResult::Unknown("solver returned unknown".into()),
        other if other.starts_with("(error") => SolveResult::Unknown(format!("solver error: {other}")),
        other => SolveResult::Unknown(format!("unexpected solver output: {other}")),
    }
}

/// Runs a complete script (SyGuS or SMT-LIB) with closed input and returns
/// the solver's full output.
pub fn run_batch(command: &str, script: &str, timeout: Duration) -> Result<String, String> {
    let mut s = Session::start(command, script, timeout)?;
    s.close_input();
    s.read_to_end().map_err(|_| timeout_reason(timeout))
}

/// Writes `text` to `dir/file_name`, creating the directory.
pub fn write_emitted(dir: &Path, file_name: &str, text: &str) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(sanitize_file_name(file_name)), text)
}

/// File-system safe version of a VC name.
pub fn sanitize_file_name(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() || "._@-".contains(c) { c } else { '_' }).collect()
}
