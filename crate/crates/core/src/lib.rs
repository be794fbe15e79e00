pub mod ast;
pub mod diag;
pub mod elab;
pub mod frontend;
pub mod proof;
pub mod smt;
pub mod symexec;
pub mod synth;
pub mod term;
pub mod value;
