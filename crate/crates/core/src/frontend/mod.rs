//! Lexing, parsing and canonical printing of uclid-mini source.

pub mod lexer;
pub mod parser;
pub mod printer;

pub use parser::{parse, parse_expr};
pub use printer::{pretty_print, print_expr, print_modules, print_type};
