//! Proof engine: verification conditions from control commands, solver
//! dispatch and result reporting.

mod compose;
mod control;
mod engine;
mod vc;

pub use compose::{copy_name, hyper_arity, self_compose, trace_map};
pub use control::{default_control, run_control, EngineConfig, ProofResult};
pub use engine::{
    bmc, bmc_prepared, check_vc, check_vcs, induct, induct_prepared, observability_vc, substitute, verify_procedure,
    Prepared, VcResult,
};
pub use vc::*;
