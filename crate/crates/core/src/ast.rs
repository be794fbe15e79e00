//! Surface syntax tree for uclid-mini models.
//!
//! Every node carries a [`Span`]. Spans compare equal to each other
//! unconditionally, so the derived `PartialEq` on the tree is structural
//! equality modulo source positions.

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;

#[derive(Clone, Default)]
pub struct Span {
    pub file: Arc<str>,
    /// Character offset of the first character.
    pub offset: u32,
    /// 1-based.
    pub line: u32,
    /// 1-based.
    pub col: u32,
    pub len: u32,
}

impl Span {
    pub fn new(file: Arc<str>, offset: u32, line: u32, col: u32, len: u32) -> Self {
        Span { file, offset, line, col, len }
    }

    /// Placeholder span for nodes synthesized by elaboration passes.
    pub fn synthetic() -> Self {
        Span { file: Arc::from("<generated>"), offset: 0, line: 0, col: 0, len: 0 }
    }

    /// Span from the start of `self` through the end of `other`.
    pub fn to(&self, other: &Span) -> Span {
        let end = (other.offset + other.len).max(self.offset + self.len);
        Span { len: end - self.offset, ..self.clone() }
    }
}

impl PartialEq for Span {
    fn eq(&self, _: &Span) -> bool {
        true
    }
}

impl Eq for Span {}

impl fmt::Debug for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.line, self.col)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Type {
    Bool,
    Int,
    Real,
    BitVec(u32),
    Array(Box<Type>, Box<Type>),
    Enum(Vec<String>),
    Named(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnOp {
    Not,
    Neg,
    BvNot,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Implies,
    Iff,
    Or,
    And,
    BvOr,
    BvXor,
    BvAnd,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Concat,
    Add,
    Sub,
    Mul,
    Div,
    IntDiv,
    Mod,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Implies => "==>",
            BinOp::Iff => "<==>",
            BinOp::Or => "||",
            BinOp::And => "&&",
            BinOp::BvOr => "|",
            BinOp::BvXor => "^",
            BinOp::BvAnd => "&",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Concat => "++",
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::IntDiv => "div",
            BinOp::Mod => "mod",
        }
    }

    /// Binding strength; larger binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Implies => 1,
            BinOp::Iff => 2,
            BinOp::Or => 3,
            BinOp::And => 4,
            BinOp::BvOr => 5,
            BinOp::BvXor => 6,
            BinOp::BvAnd => 7,
            BinOp::Eq | BinOp::Ne => 8,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 9,
            BinOp::Concat | BinOp::Add | BinOp::Sub => 10,
            BinOp::Mul | BinOp::Div | BinOp::IntDiv | BinOp::Mod => 11,
        }
    }

    pub fn right_assoc(self) -> bool {
        matches!(self, BinOp::Implies)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum QuantKind {
    FiniteForall,
    FiniteExists,
    Forall,
    Exists,
}

impl QuantKind {
    pub fn keyword(self) -> &'static str {
        match self {
            QuantKind::FiniteForall => "finite_forall",
            QuantKind::FiniteExists => "finite_exists",
            QuantKind::Forall => "forall",
            QuantKind::Exists => "exists",
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, QuantKind::FiniteForall | QuantKind::FiniteExists)
    }

    pub fn is_universal(self) -> bool {
        matches!(self, QuantKind::FiniteForall | QuantKind::Forall)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExprKind {
    Bool(bool),
    Int(BigInt),
    Real(BigRational),
    BitVec { value: u64, width: u32 },
    /// Plain or dotted (`inst.var`) name.
    Ident(String),
    Primed(String),
    /// `x.n` inside hyper specs.
    TraceIndexed(String, u32),
    Old(String),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Ite(Box<Expr>, Box<Expr>, Box<Expr>),
    Apply(String, Vec<Expr>),
    Select(Box<Expr>, Box<Expr>),
    Store(Box<Expr>, Box<Expr>, Box<Expr>),
    Extract { expr: Box<Expr>, hi: u32, lo: u32 },
    Quant {
        kind: QuantKind,
        var: String,
        ty: Type,
        /// Present exactly for the finite quantifiers.
        group: Option<String>,
        body: Box<Expr>,
    },
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Self {
        Expr { kind, span }
    }

    pub fn synthetic(kind: ExprKind) -> Self {
        Expr { kind, span: Span::synthetic() }
    }

    pub fn ident(name: impl Into<String>) -> Self {
        Expr::synthetic(ExprKind::Ident(name.into()))
    }

    pub fn bool_lit(b: bool) -> Self {
        Expr::synthetic(ExprKind::Bool(b))
    }

    pub fn int_lit(v: impl Into<BigInt>) -> Self {
        Expr::synthetic(ExprKind::Int(v.into()))
    }

    pub fn binary(op: BinOp, l: Expr, r: Expr) -> Self {
        let span = l.span.clone();
        Expr::new(ExprKind::Binary(op, Box::new(l), Box::new(r)), span)
    }

    pub fn not(e: Expr) -> Self {
        let span = e.span.clone();
        Expr::new(ExprKind::Unary(UnOp::Not, Box::new(e)), span)
    }

    pub fn is_literal(&self) -> bool {
        match &self.kind {
            ExprKind::Bool(_) | ExprKind::Int(_) | ExprKind::Real(_) | ExprKind::BitVec { .. } => true,
            ExprKind::Unary(UnOp::Neg, inner) => {
                matches!(inner.kind, ExprKind::Int(_) | ExprKind::Real(_))
            }
            _ => false,
        }
    }

    /// Pre-order visit of this expression and all subexpressions.
    pub fn walk(&self, f: &mut dyn FnMut(&Expr)) {
        f(self);
        match &self.kind {
            ExprKind::Unary(_, e) => e.walk(f),
            ExprKind::Binary(_, a, b) | ExprKind::Select(a, b) => {
                a.walk(f);
                b.walk(f);
            }
            ExprKind::Ite(a, b, c) | ExprKind::Store(a, b, c) => {
                a.walk(f);
                b.walk(f);
                c.walk(f);
            }
            ExprKind::Apply(_, args) => args.iter().for_each(|a| a.walk(f)),
            ExprKind::Extract { expr, .. } => expr.walk(f),
            ExprKind::Quant { body, .. } => body.walk(f),
            _ => {}
        }
    }

    /// Bottom-up rewrite: children are rewritten first, then `f` sees the
    /// rebuilt node and may replace it.
    pub fn rewrite(&self, f: &mut dyn FnMut(Expr) -> Expr) -> Expr {
        let kind = match &self.kind {
            ExprKind::Unary(op, e) => ExprKind::Unary(*op, Box::new(e.rewrite(f))),
            ExprKind::Binary(op, a, b) => {
                ExprKind::Binary(*op, Box::new(a.rewrite(f)), Box::new(b.rewrite(f)))
            }
            ExprKind::Ite(a, b, c) => ExprKind::Ite(
                Box::new(a.rewrite(f)),
                Box::new(b.rewrite(f)),
                Box::new(c.rewrite(f)),
            ),
            ExprKind::Apply(name, args) => {
                ExprKind::Apply(name.clone(), args.iter().map(|a| a.rewrite(f)).collect())
            }
            ExprKind::Select(a, i) => ExprKind::Select(Box::new(a.rewrite(f)), Box::new(i.rewrite(f))),
            ExprKind::Store(a, i, v) => ExprKind::Store(
                Box::new(a.rewrite(f)),
                Box::new(i.rewrite(f)),
                Box::new(v.rewrite(f)),
            ),
            ExprKind::Extract { expr, hi, lo } => {
                ExprKind::Extract { expr: Box::new(expr.rewrite(f)), hi: *hi, lo: *lo }
            }
            ExprKind::Quant { kind, var, ty, group, body } => ExprKind::Quant {
                kind: *kind,
                var: var.clone(),
                ty: ty.clone(),
                group: group.clone(),
                body: Box::new(body.rewrite(f)),
            },
            other => other.clone(),
        };
        f(Expr::new(kind, self.span.clone()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lhs {
    pub name: String,
    pub primed: bool,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StmtKind {
    /// Block-local variables; each declaration starts from an unconstrained value.
    LocalVar { names: Vec<String>, ty: Type },
    Assign { lhs: Lhs, rhs: Expr },
    Havoc(String),
    Assert { label: Option<String>, expr: Expr },
    Assume(Expr),
    If { cond: Expr, then_branch: Vec<Stmt>, else_branch: Vec<Stmt> },
    /// Guards are tried top-down; the first true guard wins.
    Case(Vec<(Expr, Vec<Stmt>)>),
    For { var: String, lo: Expr, hi: Expr, body: Vec<Stmt> },
    While { cond: Expr, invariants: Vec<Expr>, body: Vec<Stmt> },
    Call { lhs: Vec<Lhs>, proc_name: String, args: Vec<Expr> },
    NextInstance(String),
}

impl Stmt {
    pub fn new(kind: StmtKind, span: Span) -> Self {
        Stmt { kind, span }
    }

    pub fn synthetic(kind: StmtKind) -> Self {
        Stmt { kind, span: Span::synthetic() }
    }

    /// Pre-order visit of this statement and every nested statement.
    pub fn walk(&self, f: &mut dyn FnMut(&Stmt)) {
        f(self);
        match &self.kind {
            StmtKind::If { then_branch, else_branch, .. } => {
                then_branch.iter().for_each(|s| s.walk(f));
                else_branch.iter().for_each(|s| s.walk(f));
            }
            StmtKind::Case(arms) => {
                for (_, body) in arms {
                    body.iter().for_each(|s| s.walk(f));
                }
            }
            StmtKind::For { body, .. } | StmtKind::While { body, .. } => {
                body.iter().for_each(|s| s.walk(f))
            }
            _ => {}
        }
    }

    /// Every expression held directly by this statement (not nested statements).
    pub fn exprs(&self) -> Vec<&Expr> {
        match &self.kind {
            StmtKind::Assign { rhs, .. } => vec![rhs],
            StmtKind::Assert { expr, .. } | StmtKind::Assume(expr) => vec![expr],
            StmtKind::If { cond, .. } => vec![cond],
            StmtKind::Case(arms) => arms.iter().map(|(g, _)| g).collect(),
            StmtKind::For { lo, hi, .. } => vec![lo, hi],
            StmtKind::While { cond, invariants, .. } => {
                std::iter::once(cond).chain(invariants.iter()).collect()
            }
            StmtKind::Call { args, .. } => args.iter().collect(),
            _ => vec![],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarKind {
    Var,
    Input,
    Output,
    Const,
}

impl VarKind {
    pub fn keyword(self) -> &'static str {
        match self {
            VarKind::Var => "var",
            VarKind::Input => "input",
            VarKind::Output => "output",
            VarKind::Const => "const",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Param {
    pub name: String,
    pub ty: Type,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Production {
    pub nonterminal: String,
    pub ty: Type,
    pub rules: Vec<Expr>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProcDecl {
    pub name: String,
    pub params: Vec<Param>,
    pub returns: Vec<Param>,
    pub requires: Vec<Expr>,
    pub ensures: Vec<Expr>,
    pub modifies: Vec<String>,
    /// `None` for contract-only procedures.
    pub body: Option<Vec<Stmt>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decl {
    pub kind: DeclKind,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DeclKind {
    Type { name: String, def: Option<Type> },
    Var { kind: VarKind, names: Vec<String>, ty: Type },
    Function { name: String, params: Vec<Param>, ret: Type },
    Define { name: String, params: Vec<Param>, ret: Type, body: Expr },
    SynthFun { name: String, params: Vec<Param>, ret: Type, grammar: Option<Vec<Production>> },
    OracleFun { name: String, binary: String, params: Vec<Param>, ret: Type },
    Procedure(ProcDecl),
    Init(Vec<Stmt>),
    Next(Vec<Stmt>),
    Instance { name: String, module: String, bindings: Vec<(String, Expr)> },
    Invariant { name: String, expr: Expr },
    HyperInvariant { arity: u32, name: String, expr: Expr },
    Axiom { name: String, expr: Expr },
    HyperAxiom { arity: u32, name: String, expr: Expr },
    Group { name: String, ty: Type, elems: Vec<Expr> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Expectation {
    Observable,
    Unobservable,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Command {
    Bmc(u32),
    Induction,
    KInduction(u32),
    Verify(String),
    Synthesize,
    Check,
    CheckSat(Option<Expectation>),
    PrintResults,
    PrintCex(Vec<String>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ControlBlock {
    pub commands: Vec<(Command, Span)>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AstModule {
    pub name: String,
    pub decls: Vec<Decl>,
    pub control: Option<ControlBlock>,
    pub span: Span,
}

#[derive(Clone, Debug)]
pub struct SourceFile {
    pub path: String,
    pub contents: String,
}

impl SourceFile {
    /// Normalizes CRLF and lone CR line endings to LF.
    pub fn new(path: impl Into<String>, contents: &str) -> Self {
        let contents = contents.replace("\r\n", "\n").replace('\r', "\n");
        SourceFile { path: path.into(), contents }
    }

    pub fn read(path: &std::path::Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(SourceFile::new(path.display().to_string(), &text))
    }
}
