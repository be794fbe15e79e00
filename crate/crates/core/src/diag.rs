use std::fmt;

use crate::ast::Span;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DiagKind {
    LexError,
    ParseError { expected: Vec<String> },
    TypeMismatch,
    UnknownIdentifier,
    IllegalAssignment,
    DuplicateDeclaration,
    ArityMismatch,
    IndexOutOfArity,
    CyclicInstantiation,
    UnboundPort,
    RecursiveProcedure,
    MissingLoopInvariant,
    NonLiteralForBound,
    UnknownGroup,
    NoMainModule,
    InvalidCommand,
}

impl DiagKind {
    pub fn name(&self) -> &'static str {
        match self {
            DiagKind::LexError => "lex error",
            DiagKind::ParseError { .. } => "parse error",
            DiagKind::TypeMismatch => "type mismatch",
            DiagKind::UnknownIdentifier => "unknown identifier",
            DiagKind::IllegalAssignment => "illegal assignment",
            DiagKind::DuplicateDeclaration => "duplicate declaration",
            DiagKind::ArityMismatch => "arity mismatch",
            DiagKind::IndexOutOfArity => "trace index out of arity",
            DiagKind::CyclicInstantiation => "cyclic instantiation",
            DiagKind::UnboundPort => "unbound port",
            DiagKind::RecursiveProcedure => "recursive procedure",
            DiagKind::MissingLoopInvariant => "missing loop invariant",
            DiagKind::NonLiteralForBound => "non-literal for bound",
            DiagKind::UnknownGroup => "unknown group",
            DiagKind::NoMainModule => "no main module",
            DiagKind::InvalidCommand => "invalid command",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Diagnostic {
    pub kind: DiagKind,
    pub span: Span,
    pub message: String,
}

impl Diagnostic {
    pub fn new(kind: DiagKind, span: Span, message: impl Into<String>) -> Self {
        Diagnostic { kind, span, message: message.into() }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}: {}", self.span, self.kind.name(), self.message)?;
        if let DiagKind::ParseError { expected } = &self.kind {
            if !expected.is_empty() {
                write!(f, " (expected one of: {})", expected.join(", "))?;
            }
        }
        Ok(())
    }
}

impl std::error::Error for Diagnostic {}
