//! Oracle binaries. Protocol: one argument per command-line token in SMT-LIB
//! literal syntax; the binary prints one literal of the return sort and
//! exits 0.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use super::model::{parse_value, SortEnv};
use crate::elab::{FunKind, TypedModule};
use crate::term::Sort;
use crate::value::Value;

pub const ORACLE_TIMEOUT: Duration = Duration::from_secs(5);

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("oracle binary `{binary}` for {fun} not found")]
    NotFound { fun: String, binary: String },
    #[error("oracle {fun}: {msg}")]
    Invocation { fun: String, msg: String },
}

#[derive(Debug)]
pub struct OracleBinding {
    pub name: String,
    pub params: Vec<Sort>,
    pub ret: Sort,
    pub path: PathBuf,
    /// Serializes invocations of this binary so the call log is deterministic.
    lock: Mutex<()>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleCall {
    pub fun: String,
    pub args: Vec<Value>,
    pub result: Value,
}

/// All oracle bindings of a module, the table of answers so far and the log
/// of binary invocations. Each point is queried at most once, so the log and
/// the table hold the same entries.
#[derive(Debug, Default)]
pub struct Oracles {
    bindings: BTreeMap<String, Arc<OracleBinding>>,
    env: SortEnv,
    state: Mutex<OracleState>,
}

#[derive(Debug, Default)]
struct OracleState {
    table: BTreeMap<(String, Vec<Value>), Value>,
    log: Vec<OracleCall>,
}

fn is_executable(p: &Path) -> bool {
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        p.metadata().map(|m| m.is_file() && m.permissions().mode() & 0o111 != 0).unwrap_or(false)
    }
    #[cfg(not(unix))]
    {
        p.is_file()
    }
}

/// Finds `binary`: a path containing `/` is taken as is; otherwise `dirs`
/// are searched, then the directory of the running executable (and its
/// parent, which holds the binaries when running under a test harness),
/// then `PATH`.
pub fn resolve_binary(binary: &str, dirs: &[PathBuf]) -> Option<PathBuf> {
    if binary.contains('/') {
        let p = PathBuf::from(binary);
        return is_executable(&p).then_some(p);
    }
    let mut search: Vec<PathBuf> = dirs.to_vec();
    if let Some(exe_dir) = std::env::current_exe().ok().and_then(|e| e.parent().map(Path::to_path_buf)) {
        if let Some(up) = exe_dir.parent() {
            search.push(exe_dir.clone());
            search.push(up.to_path_buf());
        } else {
            search.push(exe_dir);
        }
    }
    if let Some(path) = std::env::var_os("PATH") {
        search.extend(std::env::split_paths(&path));
    }
    search.into_iter().map(|d| d.join(binary)).find(|p| is_executable(p))
}

impl Oracles {
    pub fn none() -> Self {
        Oracles::default()
    }

    /// Binds every oracle function of `m`; fails if a binary is missing.
    pub fn for_module(m: &TypedModule, dirs: &[PathBuf]) -> Result<Oracles, OracleError> {
        let mut bindings = BTreeMap::new();
        for f in m.oracle_funs() {
            let FunKind::Oracle(binary) = &f.kind else { continue };
            let path = resolve_binary(binary, dirs)
                .ok_or_else(|| OracleError::NotFound { fun: f.name.clone(), binary: binary.clone() })?;
            bindings.insert(
                f.name.clone(),
                Arc::new(OracleBinding {
                    name: f.name.clone(),
                    params: f.params.iter().map(|(_, s)| s.clone()).collect(),
                    ret: f.ret.clone(),
                    path,
                    lock: Mutex::new(()),
                }),
            );
        }
        let env = SortEnv::for_module(m);
        Ok(Oracles { bindings, env, state: Mutex::default() })
    }

    pub fn with_binding(mut self, name: &str, params: Vec<Sort>, ret: Sort, path: PathBuf) -> Self {
        self.bindings.insert(
            name.to_string(),
            Arc::new(OracleBinding { name: name.to_string(), params, ret, path, lock: Mutex::new(()) }),
        );
        self
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn is_oracle(&self, f: &str) -> bool {
        self.bindings.contains_key(f)
    }

    pub fn binding(&self, f: &str) -> Option<&OracleBinding> {
        self.bindings.get(f).map(|b| &**b)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.bindings.keys().map(String::as_str)
    }

    /// Known answer for a point, without invoking the binary.
    pub fn known(&self, f: &str, args: &[Value]) -> Option<Value> {
        self.state.lock().unwrap().table.get(&(f.to_string(), args.to_vec())).cloned()
    }

    /// Answer for a point, invoking the binary if the point is new.
    /// Returns the value and whether the binary ran.
    pub fn query(&self, f: &str, args: &[Value]) -> Result<(Value, bool), OracleError> {
        if let Some(v) = self.known(f, args) {
            return Ok((v, false));
        }
        let b = self.bindings.get(f).ok_or_else(|| OracleError::Invocation { fun: f.into(), msg: "no binding".into() })?;
        let v = {
            let _guard = b.lock.lock().unwrap();
            invoke(b, args, &self.env)?
        };
        let mut st = self.state.lock().unwrap();
        st.table.insert((f.to_string(), args.to_vec()), v.clone());
        st.log.push(OracleCall { fun: f.to_string(), args: args.to_vec(), result: v.clone() });
        Ok((v, true))
    }

    pub fn table(&self) -> BTreeMap<(String, Vec<Value>), Value> {
        self.state.lock().unwrap().table.clone()
    }

    pub fn log(&self) -> Vec<OracleCall> {
        self.state.lock().unwrap().log.clone()
    }
}

/// Runs the binary once. Exceeding [`ORACLE_TIMEOUT`] kills it.
pub fn invoke(b: &OracleBinding, args: &[Value], env: &SortEnv) -> Result<Value, OracleError> {
    let err = |msg: String| OracleError::Invocation { fun: b.name.clone(), msg };
    let mut child = Command::new(&b.path)
        .args(args.iter().map(Value::to_smt))
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .map_err(|e| err(format!("spawn failed: {e}")))?;
    let deadline = Instant::now() + ORACLE_TIMEOUT;
    let status = loop {
        match child.try_wait() {
            Ok(Some(s)) => break s,
            Ok(None) if Instant::now() < deadline => std::thread::sleep(Duration::from_millis(2)),
            Ok(None) => {
                let _ = child.kill();
                let _ = child.wait();
                return Err(err("timeout".into()));
            }
            Err(e) => return Err(err(e.to_string())),
        }
    };
    let mut out = String::new();
    child.stdout.take().expect("piped stdout").read_to_string(&mut out).map_err(|e| err(e.to_string()))?;
    if !status.success() {
        return Err(err(format!("exit status {status}")));
    }
    parse_value(out.trim(), &b.ret, env).map_err(|e| err(format!("bad reply `{}`: {e}", out.trim())))
}
