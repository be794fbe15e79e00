//! SMT-LIB back end: script emission, solver processes, model reading,
//! counterexample traces and the oracle refinement loop.

pub mod emit;
pub mod model;
pub mod oracle;
pub mod sexp;
pub mod smto;
pub mod solver;
pub mod trace;

pub use emit::{emit_smtlib, SmtScript};
pub use model::{parse_model, parse_model_with, ModelCtx, SmtModel, SortEnv};
pub use oracle::{OracleCall, OracleError, Oracles};
pub use smto::{smto_check, solve, Lemma, SmtoOutcome};
pub use solver::{SolveResult, SolverConfig};
pub use trace::extract_trace;
