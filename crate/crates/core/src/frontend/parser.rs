use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::ToPrimitive;

use super::lexer::{lex, Tok, Token};
use crate::ast::*;
use crate::diag::{DiagKind, Diagnostic};

/// Parses a source file into its modules. On failure no partial tree is
/// returned.
pub fn parse(src: &SourceFile) -> Result<Vec<AstModule>, Vec<Diagnostic>> {
    let file: Arc<str> = Arc::from(src.path.as_str());
    let toks = lex(&file, &src.contents).map_err(|d| vec![d])?;
    let mut p = Parser { toks, pos: 0 };
    let mut modules = Vec::new();
    while !p.at_eof() {
        modules.push(p.module().map_err(|d| vec![d])?);
    }
    Ok(modules)
}

/// Parses a single standalone expression.
pub fn parse_expr(text: &str) -> Result<Expr, Diagnostic> {
    let file: Arc<str> = Arc::from("<expr>");
    let toks = lex(&file, text)?;
    let mut p = Parser { toks, pos: 0 };
    let e = p.expr()?;
    if !p.at_eof() {
        return Err(p.error(&["end of input"]));
    }
    Ok(e)
}

type PResult<T> = Result<T, Diagnostic>;

pub const CONTROL_COMMANDS: &[&str] = &[
    "bmc",
    "induction",
    "kinduction",
    "verify",
    "synthesize",
    "check",
    "check_sat",
    "print_results",
    "print_cex",
];

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let idx = (self.pos + n).min(self.toks.len() - 1);
        &self.toks[idx].tok
    }

    fn span(&self) -> Span {
        self.toks[self.pos].span.clone()
    }

    fn prev_span(&self) -> Span {
        self.toks[self.pos.saturating_sub(1)].span.clone()
    }

    fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &[&str]) -> Diagnostic {
        let found = self.peek().to_string();
        Diagnostic::new(
            DiagKind::ParseError { expected: expected.iter().map(|s| s.to_string()).collect() },
            self.span(),
            format!("unexpected {found}"),
        )
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn is_kw(&self, k: &str) -> bool {
        matches!(self.peek(), Tok::Keyword(q) if *q == k)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, k: &str) -> bool {
        if self.is_kw(k) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> PResult<Span> {
        if self.is_punct(p) {
            Ok(self.bump().span)
        } else {
            Err(self.error(&[&format!("`{p}`")]))
        }
    }

    fn expect_kw(&mut self, k: &str) -> PResult<Span> {
        if self.is_kw(k) {
            Ok(self.bump().span)
        } else {
            Err(self.error(&[&format!("`{k}`")]))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.error(&["identifier"])),
        }
    }

    /// Identifier optionally followed by `.ident` segments.
    fn dotted_name(&mut self) -> PResult<String> {
        let mut name = self.ident()?;
        while self.is_punct(".") && matches!(self.peek_at(1), Tok::Ident(_)) {
            self.bump();
            name.push('.');
            name.push_str(&self.ident()?);
        }
        Ok(name)
    }

    fn small_int(&mut self) -> PResult<u32> {
        match self.peek().clone() {
            Tok::Int(v) => {
                let span = self.span();
                self.bump();
                v.to_u32().ok_or_else(|| {
                    Diagnostic::new(
                        DiagKind::ParseError { expected: vec!["small integer".into()] },
                        span,
                        "integer out of range",
                    )
                })
            }
            _ => Err(self.error(&["integer literal"])),
        }
    }

    fn module(&mut self) -> PResult<AstModule> {
        let start = self.expect_kw("module")?;
        let name = self.ident()?;
        self.expect_punct("{")?;
        let mut decls = Vec::new();
        let mut control = None;
        while !self.is_punct("}") {
            if self.is_kw("control") {
                let cspan = self.span();
                if control.is_some() {
                    return Err(Diagnostic::new(
                        DiagKind::ParseError { expected: vec![] },
                        cspan,
                        "at most one control block per module",
                    ));
                }
                control = Some(self.control()?);
            } else {
                decls.push(self.decl()?);
            }
        }
        let end = self.expect_punct("}")?;
        Ok(AstModule { name, decls, control, span: start.to(&end) })
    }

    fn decl(&mut self) -> PResult<Decl> {
        let span = self.span();
        let kind = match self.peek().clone() {
            Tok::Keyword("type") => {
                self.bump();
                let name = self.ident()?;
                let def = if self.eat_punct("=") { Some(self.ty()?) } else { None };
                self.expect_punct(";")?;
                DeclKind::Type { name, def }
            }
            Tok::Keyword(k @ ("var" | "input" | "output" | "const")) => {
                self.bump();
                let kind = match k {
                    "var" => VarKind::Var,
                    "input" => VarKind::Input,
                    "output" => VarKind::Output,
                    _ => VarKind::Const,
                };
                let names = self.name_list()?;
                self.expect_punct(":")?;
                let ty = self.ty()?;
                self.expect_punct(";")?;
                DeclKind::Var { kind, names, ty }
            }
            Tok::Keyword("function") => {
                self.bump();
                let name = self.ident()?;
                let params = self.params()?;
                self.expect_punct(":")?;
                let ret = self.ty()?;
                self.expect_punct(";")?;
                DeclKind::Function { name, params, ret }
            }
            Tok::Keyword("define") => {
                self.bump();
                let name = self.ident()?;
                let params = self.params()?;
                self.expect_punct(":")?;
                let ret = self.ty()?;
                self.expect_punct("=")?;
                let body = self.expr()?;
                self.expect_punct(";")?;
                DeclKind::Define { name, params, ret, body }
            }
            Tok::Keyword("synthesis") => {
                self.bump();
                self.expect_kw("function")?;
                let name = self.ident()?;
                let params = self.params()?;
                self.expect_punct(":")?;
                let ret = self.ty()?;
                let grammar = if self.eat_kw("grammar") { Some(self.grammar()?) } else { None };
                self.expect_punct(";")?;
                DeclKind::SynthFun { name, params, ret, grammar }
            }
            Tok::Keyword("oracle") => {
                self.bump();
                self.expect_kw("function")?;
                self.expect_punct("[")?;
                let binary = match self.peek().clone() {
                    Tok::Str(s) => {
                        self.bump();
                        s
                    }
                    Tok::Ident(_) => self.dotted_name()?,
                    _ => return Err(self.error(&["oracle binary name", "string literal"])),
                };
                self.expect_punct("]")?;
                let name = self.ident()?;
                let params = self.params()?;
                self.expect_punct(":")?;
                let ret = self.ty()?;
                self.expect_punct(";")?;
                DeclKind::OracleFun { name, binary, params, ret }
            }
            Tok::Keyword("procedure") => DeclKind::Procedure(self.procedure()?),
            Tok::Keyword("init") => {
                self.bump();
                DeclKind::Init(self.block()?)
            }
            Tok::Keyword("next") => {
                self.bump();
                DeclKind::Next(self.block()?)
            }
            Tok::Keyword("instance") => {
                self.bump();
                let name = self.ident()?;
                self.expect_punct(":")?;
                let module = self.ident()?;
                self.expect_punct("(")?;
                let mut bindings = Vec::new();
                if !self.is_punct(")") {
                    loop {
                        let port = self.ident()?;
                        self.expect_punct(":")?;
                        let e = self.expr()?;
                        bindings.push((port, e));
                        if !self.eat_punct(",") {
                            break;
                        }
                    }
                }
                self.expect_punct(")")?;
                self.expect_punct(";")?;
                DeclKind::Instance { name, module, bindings }
            }
            Tok::Keyword(k @ ("invariant" | "axiom")) => {
                self.bump();
                let name = self.dotted_name()?;
                self.expect_punct(":")?;
                let expr = self.expr()?;
                self.expect_punct(";")?;
                if k == "invariant" {
                    DeclKind::Invariant { name, expr }
                } else {
                    DeclKind::Axiom { name, expr }
                }
            }
            Tok::Keyword(k @ ("hyperinvariant" | "hyperaxiom")) => {
                self.bump();
                self.expect_punct("[")?;
                let arity = self.small_int()?;
                self.expect_punct("]")?;
                let name = self.dotted_name()?;
                self.expect_punct(":")?;
                let expr = self.expr()?;
                self.expect_punct(";")?;
                if k == "hyperinvariant" {
                    DeclKind::HyperInvariant { arity, name, expr }
                } else {
                    DeclKind::HyperAxiom { arity, name, expr }
                }
            }
            Tok::Keyword("group") => {
                self.bump();
                let name = self.ident()?;
                self.expect_punct(":")?;
                let ty = self.ty()?;
                self.expect_punct("=")?;
                self.expect_punct("{")?;
                let mut elems = Vec::new();
                if !self.is_punct("}") {
                    loop {
                        elems.push(self.expr()?);
                        if !self.eat_punct(",") {
                            break;
                        }
                    }
                }
                self.expect_punct("}")?;
                self.expect_punct(";")?;
                DeclKind::Group { name, ty, elems }
            }
            _ => {
                return Err(self.error(&[
                    "`type`",
                    "`var`",
                    "`input`",
                    "`output`",
                    "`const`",
                    "`function`",
                    "`define`",
                    "`synthesis`",
                    "`oracle`",
                    "`procedure`",
                    "`init`",
                    "`next`",
                    "`instance`",
                    "`invariant`",
                    "`hyperinvariant`",
                    "`axiom`",
                    "`hyperaxiom`",
                    "`group`",
                    "`control`",
                    "`}`",
                ]))
            }
        };
        Ok(Decl { kind, span: span.to(&self.prev_span()) })
    }

    fn name_list(&mut self) -> PResult<Vec<String>> {
        let mut names = vec![self.dotted_name()?];
        while self.eat_punct(",") {
            names.push(self.dotted_name()?);
        }
        Ok(names)
    }

    fn params(&mut self) -> PResult<Vec<Param>> {
        self.expect_punct("(")?;
        let mut params = Vec::new();
        if !self.is_punct(")") {
            loop {
                let name = self.dotted_name()?;
                self.expect_punct(":")?;
                let ty = self.ty()?;
                params.push(Param { name, ty });
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        self.expect_punct(")")?;
        Ok(params)
    }

    fn grammar(&mut self) -> PResult<Vec<Production>> {
        self.expect_punct("{")?;
        let mut prods = Vec::new();
        while !self.is_punct("}") {
            let nonterminal = self.ident()?;
            self.expect_punct(":")?;
            let ty = self.ty()?;
            self.expect_punct("::=")?;
            let mut rules = vec![self.expr()?];
            while self.eat_punct(",") {
                rules.push(self.expr()?);
            }
            self.expect_punct(";")?;
            prods.push(Production { nonterminal, ty, rules });
        }
        self.expect_punct("}")?;
        Ok(prods)
    }

    fn procedure(&mut self) -> PResult<ProcDecl> {
        self.expect_kw("procedure")?;
        let name = self.dotted_name()?;
        let params = self.params()?;
        let returns = if self.eat_kw("returns") { self.params()? } else { Vec::new() };
        let mut requires = Vec::new();
        let mut ensures = Vec::new();
        let mut modifies = Vec::new();
        loop {
            if self.eat_kw("requires") {
                requires.push(self.expr()?);
                self.expect_punct(";")?;
            } else if self.eat_kw("ensures") {
                ensures.push(self.expr()?);
                self.expect_punct(";")?;
            } else if self.eat_kw("modifies") {
                modifies.extend(self.name_list()?);
                self.expect_punct(";")?;
            } else {
                break;
            }
        }
        let body = if self.eat_punct(";") {
            None
        } else if self.is_punct("{") {
            Some(self.block()?)
        } else {
            return Err(self.error(&["`requires`", "`ensures`", "`modifies`", "`{`", "`;`"]));
        };
        Ok(ProcDecl { name, params, returns, requires, ensures, modifies, body })
    }

    fn control(&mut self) -> PResult<ControlBlock> {
        let start = self.expect_kw("control")?;
        self.expect_punct("{")?;
        let mut commands = Vec::new();
        while !self.is_punct("}") {
            let span = self.span();
            let word = match self.peek().clone() {
                Tok::Ident(w) => w,
                _ => return Err(self.error(&["control command"])),
            };
            self.bump();
            let cmd = match word.as_str() {
                "bmc" => {
                    self.expect_punct("(")?;
                    let k = self.small_int()?;
                    self.expect_punct(")")?;
                    Command::Bmc(k)
                }
                "induction" => Command::Induction,
                "kinduction" => {
                    self.expect_punct("(")?;
                    let k = self.small_int()?;
                    self.expect_punct(")")?;
                    Command::KInduction(k)
                }
                "verify" => {
                    self.expect_punct("(")?;
                    let p = self.ident()?;
                    self.expect_punct(")")?;
                    Command::Verify(p)
                }
                "synthesize" => Command::Synthesize,
                "check" => Command::Check,
                "check_sat" => {
                    if matches!(self.peek(), Tok::Ident(w) if w == "expect") {
                        self.bump();
                        match self.peek().clone() {
                            Tok::Ident(w) if w == "observable" => {
                                self.bump();
                                Command::CheckSat(Some(Expectation::Observable))
                            }
                            Tok::Ident(w) if w == "unobservable" => {
                                self.bump();
                                Command::CheckSat(Some(Expectation::Unobservable))
                            }
                            _ => return Err(self.error(&["`observable`", "`unobservable`"])),
                        }
                    } else {
                        Command::CheckSat(None)
                    }
                }
                "print_results" => Command::PrintResults,
                "print_cex" => {
                    self.expect_punct("(")?;
                    let mut vars = Vec::new();
                    if !self.is_punct(")") {
                        loop {
                            let mut name = self.dotted_name()?;
                            if self.is_punct(".") && matches!(self.peek_at(1), Tok::Int(_)) {
                                self.bump();
                                name.push('.');
                                name.push_str(&self.small_int()?.to_string());
                            }
                            vars.push(name);
                            if !self.eat_punct(",") {
                                break;
                            }
                        }
                    }
                    self.expect_punct(")")?;
                    Command::PrintCex(vars)
                }
                _ => {
                    return Err(Diagnostic::new(
                        DiagKind::ParseError { expected: CONTROL_COMMANDS.iter().map(|s| s.to_string()).collect() },
                        span,
                        format!("unknown control command `{word}`"),
                    ))
                }
            };
            self.expect_punct(";")?;
            commands.push((cmd, span));
        }
        let end = self.expect_punct("}")?;
        Ok(ControlBlock { commands, span: start.to(&end) })
    }

    fn ty(&mut self) -> PResult<Type> {
        match self.peek().clone() {
            Tok::Keyword("boolean") => {
                self.bump();
                Ok(Type::Bool)
            }
            Tok::Keyword("integer") => {
                self.bump();
                Ok(Type::Int)
            }
            Tok::Keyword("real") => {
                self.bump();
                Ok(Type::Real)
            }
            Tok::Keyword("enum") => {
                self.bump();
                self.expect_punct("{")?;
                let mut variants = vec![self.ident()?];
                while self.eat_punct(",") {
                    variants.push(self.ident()?);
                }
                self.expect_punct("}")?;
                Ok(Type::Enum(variants))
            }
            Tok::Punct("[") => {
                self.bump();
                let idx = self.ty()?;
                self.expect_punct("]")?;
                let elem = self.ty()?;
                Ok(Type::Array(Box::new(idx), Box::new(elem)))
            }
            Tok::Ident(name) => {
                let span = self.span();
                self.bump();
                if let Some(w) = name.strip_prefix("bv") {
                    if !w.is_empty() && w.chars().all(|c| c.is_ascii_digit()) {
                        return match w.parse::<u32>() {
                            Ok(width) if (1..=64).contains(&width) => Ok(Type::BitVec(width)),
                            _ => Err(Diagnostic::new(
                                DiagKind::ParseError { expected: vec!["bv1..bv64".into()] },
                                span,
                                "bitvector width must be in 1..=64",
                            )),
                        };
                    }
                }
                Ok(Type::Named(name))
            }
            _ => Err(self.error(&["type"])),
        }
    }

    fn block(&mut self) -> PResult<Vec<Stmt>> {
        self.expect_punct("{")?;
        let mut stmts = Vec::new();
        while !self.is_punct("}") {
            stmts.push(self.stmt()?);
        }
        self.expect_punct("}")?;
        Ok(stmts)
    }

    fn lhs(&mut self) -> PResult<Lhs> {
        let span = self.span();
        let name = self.dotted_name()?;
        let primed = self.eat_punct("'");
        Ok(Lhs { name, primed, span })
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        let span = self.span();
        let kind = match self.peek().clone() {
            Tok::Keyword("var") => {
                self.bump();
                let names = self.name_list()?;
                self.expect_punct(":")?;
                let ty = self.ty()?;
                self.expect_punct(";")?;
                StmtKind::LocalVar { names, ty }
            }
            Tok::Keyword("havoc") => {
                self.bump();
                let name = self.dotted_name()?;
                self.expect_punct(";")?;
                StmtKind::Havoc(name)
            }
            Tok::Keyword("assert") => {
                self.bump();
                let label = if matches!(self.peek(), Tok::Ident(_)) && matches!(self.peek_at(1), Tok::Punct(":")) {
                    let l = self.ident()?;
                    self.bump();
                    Some(l)
                } else {
                    None
                };
                let expr = self.expr()?;
                self.expect_punct(";")?;
                StmtKind::Assert { label, expr }
            }
            Tok::Keyword("assume") => {
                self.bump();
                let e = self.expr()?;
                self.expect_punct(";")?;
                StmtKind::Assume(e)
            }
            Tok::Keyword("if") => return self.if_stmt(),
            Tok::Keyword("case") => {
                self.bump();
                let mut arms = Vec::new();
                while !self.is_kw("esac") {
                    let guard = self.expr()?;
                    self.expect_punct(":")?;
                    let body = self.block()?;
                    arms.push((guard, body));
                }
                self.expect_kw("esac")?;
                StmtKind::Case(arms)
            }
            Tok::Keyword("for") => {
                self.bump();
                let var = self.ident()?;
                self.expect_kw("in")?;
                let lo = self.expr()?;
                self.expect_punct("..")?;
                let hi = self.expr()?;
                let body = self.block()?;
                StmtKind::For { var, lo, hi, body }
            }
            Tok::Keyword("while") => {
                self.bump();
                self.expect_punct("(")?;
                let cond = self.expr()?;
                self.expect_punct(")")?;
                let mut invariants = Vec::new();
                while self.eat_kw("invariant") {
                    invariants.push(self.expr()?);
                    self.expect_punct(";")?;
                }
                let body = self.block()?;
                StmtKind::While { cond, invariants, body }
            }
            Tok::Keyword("call") => {
                self.bump();
                let mut lhs = Vec::new();
                if self.eat_punct("(") {
                    if !self.is_punct(")") {
                        loop {
                            lhs.push(self.lhs()?);
                            if !self.eat_punct(",") {
                                break;
                            }
                        }
                    }
                    self.expect_punct(")")?;
                    self.expect_punct("=")?;
                }
                let proc_name = self.dotted_name()?;
                let args = self.args()?;
                self.expect_punct(";")?;
                StmtKind::Call { lhs, proc_name, args }
            }
            Tok::Keyword("next") => {
                self.bump();
                self.expect_punct("(")?;
                let inst = self.ident()?;
                self.expect_punct(")")?;
                self.expect_punct(";")?;
                StmtKind::NextInstance(inst)
            }
            Tok::Ident(_) => {
                let lhs = self.lhs()?;
                let index = if self.eat_punct("[") {
                    let i = self.expr()?;
                    self.expect_punct("]")?;
                    Some(i)
                } else {
                    None
                };
                self.expect_punct("=")?;
                let mut rhs = self.expr()?;
                self.expect_punct(";")?;
                if let Some(i) = index {
                    // a[i] = e  is sugar for  a = a[i -> e]
                    let base = Expr::new(ExprKind::Ident(lhs.name.clone()), lhs.span.clone());
                    let rspan = lhs.span.to(&rhs.span);
                    rhs = Expr::new(ExprKind::Store(Box::new(base), Box::new(i), Box::new(rhs)), rspan);
                }
                StmtKind::Assign { lhs, rhs }
            }
            _ => {
                return Err(self.error(&[
                    "`var`", "`havoc`", "`assert`", "`assume`", "`if`", "`case`", "`for`", "`while`", "`call`",
                    "`next`", "identifier", "`}`",
                ]))
            }
        };
        Ok(Stmt { kind, span: span.to(&self.prev_span()) })
    }

    fn if_stmt(&mut self) -> PResult<Stmt> {
        let span = self.expect_kw("if")?;
        self.expect_punct("(")?;
        let cond = self.expr()?;
        self.expect_punct(")")?;
        let then_branch = self.block()?;
        let else_branch = if self.eat_kw("else") {
            if self.is_kw("if") {
                vec![self.if_stmt()?]
            } else {
                self.block()?
            }
        } else {
            Vec::new()
        };
        Ok(Stmt { kind: StmtKind::If { cond, then_branch, else_branch }, span: span.to(&self.prev_span()) })
    }

    fn args(&mut self) -> PResult<Vec<Expr>> {
        self.expect_punct("(")?;
        let mut args = Vec::new();
        if !self.is_punct(")") {
            loop {
                args.push(self.expr()?);
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        self.expect_punct(")")?;
        Ok(args)
    }

    pub fn expr(&mut self) -> PResult<Expr> {
        self.binary(1)
    }

    fn peek_binop(&self) -> Option<BinOp> {
        Some(match self.peek() {
            Tok::Punct(p) => match *p {
                "==>" => BinOp::Implies,
                "<==>" => BinOp::Iff,
                "||" => BinOp::Or,
                "&&" => BinOp::And,
                "|" => BinOp::BvOr,
                "^" => BinOp::BvXor,
                "&" => BinOp::BvAnd,
                "==" => BinOp::Eq,
                "!=" => BinOp::Ne,
                "<" => BinOp::Lt,
                "<=" => BinOp::Le,
                ">" => BinOp::Gt,
                ">=" => BinOp::Ge,
                "++" => BinOp::Concat,
                "+" => BinOp::Add,
                "-" => BinOp::Sub,
                "*" => BinOp::Mul,
                "/" => BinOp::Div,
                _ => return None,
            },
            Tok::Ident(w) if w == "div" => BinOp::IntDiv,
            Tok::Ident(w) if w == "mod" => BinOp::Mod,
            _ => return None,
        })
    }

    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.peek_binop() {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            self.bump();
            let rhs = self.binary(if op.right_assoc() { prec } else { prec + 1 })?;
            let span = lhs.span.to(&rhs.span);
            lhs = Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), span);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        let span = self.span();
        let op = match self.peek() {
            Tok::Punct("!") => UnOp::Not,
            Tok::Punct("-") => UnOp::Neg,
            Tok::Punct("~") => UnOp::BvNot,
            _ => return self.postfix(),
        };
        self.bump();
        let inner = self.unary()?;
        let span = span.to(&inner.span);
        Ok(Expr::new(ExprKind::Unary(op, Box::new(inner)), span))
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let mut e = self.primary()?;
        while self.is_punct("[") {
            self.bump();
            let first = self.expr()?;
            if self.eat_punct(":") {
                let hi = literal_u32(&first).ok_or_else(|| {
                    Diagnostic::new(
                        DiagKind::ParseError { expected: vec!["integer literal".into()] },
                        first.span.clone(),
                        "extract bounds must be integer literals",
                    )
                })?;
                let lo = self.small_int()?;
                let end = self.expect_punct("]")?;
                let span = e.span.to(&end);
                e = Expr::new(ExprKind::Extract { expr: Box::new(e), hi, lo }, span);
            } else if self.eat_punct("->") {
                let v = self.expr()?;
                let end = self.expect_punct("]")?;
                let span = e.span.to(&end);
                e = Expr::new(ExprKind::Store(Box::new(e), Box::new(first), Box::new(v)), span);
            } else {
                let end = self.expect_punct("]")?;
                let span = e.span.to(&end);
                e = Expr::new(ExprKind::Select(Box::new(e), Box::new(first)), span);
            }
        }
        Ok(e)
    }

    fn quantifier(&mut self, kind: QuantKind) -> PResult<Expr> {
        let span = self.bump().span;
        self.expect_punct("(")?;
        let var = self.ident()?;
        self.expect_punct(":")?;
        let ty = self.ty()?;
        self.expect_punct(")")?;
        let group = if kind.is_finite() {
            self.expect_kw("in")?;
            Some(self.ident()?)
        } else {
            None
        };
        self.expect_punct("::")?;
        let body = self.expr()?;
        let span = span.to(&body.span);
        Ok(Expr::new(ExprKind::Quant { kind, var, ty, group, body: Box::new(body) }, span))
    }

    fn primary(&mut self) -> PResult<Expr> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Keyword("true") => {
                self.bump();
                Ok(Expr::new(ExprKind::Bool(true), span))
            }
            Tok::Keyword("false") => {
                self.bump();
                Ok(Expr::new(ExprKind::Bool(false), span))
            }
            Tok::Int(v) => {
                self.bump();
                Ok(Expr::new(ExprKind::Int(v), span))
            }
            Tok::Real(v) => {
                self.bump();
                Ok(Expr::new(ExprKind::Real(v), span))
            }
            Tok::BitVec { value, width } => {
                self.bump();
                Ok(Expr::new(ExprKind::BitVec { value, width }, span))
            }
            Tok::Punct("(") => {
                self.bump();
                let e = self.expr()?;
                self.expect_punct(")")?;
                Ok(e)
            }
            Tok::Keyword("if") => {
                self.bump();
                let c = self.expr()?;
                self.expect_kw("then")?;
                let t = self.expr()?;
                self.expect_kw("else")?;
                let f = self.expr()?;
                let span = span.to(&f.span);
                Ok(Expr::new(ExprKind::Ite(Box::new(c), Box::new(t), Box::new(f)), span))
            }
            Tok::Keyword("old") => {
                self.bump();
                self.expect_punct("(")?;
                let name = self.dotted_name()?;
                let end = self.expect_punct(")")?;
                Ok(Expr::new(ExprKind::Old(name), span.to(&end)))
            }
            Tok::Keyword("finite_forall") => self.quantifier(QuantKind::FiniteForall),
            Tok::Keyword("finite_exists") => self.quantifier(QuantKind::FiniteExists),
            Tok::Keyword("forall") => self.quantifier(QuantKind::Forall),
            Tok::Keyword("exists") => self.quantifier(QuantKind::Exists),
            Tok::Ident(_) => {
                let name = self.dotted_name()?;
                if self.is_punct("(") {
                    let args = self.args()?;
                    return Ok(Expr::new(ExprKind::Apply(name, args), span.to(&self.prev_span())));
                }
                if self.eat_punct("'") {
                    return Ok(Expr::new(ExprKind::Primed(name), span.to(&self.prev_span())));
                }
                if self.is_punct(".") && matches!(self.peek_at(1), Tok::Int(_)) {
                    self.bump();
                    let idx = self.small_int()?;
                    return Ok(Expr::new(ExprKind::TraceIndexed(name, idx), span.to(&self.prev_span())));
                }
                Ok(Expr::new(ExprKind::Ident(name), span.to(&self.prev_span())))
            }
            _ => Err(self.error(&["expression"])),
        }
    }
}

fn literal_u32(e: &Expr) -> Option<u32> {
    match &e.kind {
        ExprKind::Int(v) => v.to_u32(),
        _ => None,
    }
}

/// Integer value of a literal expression, including a negated literal.
pub fn literal_int(e: &Expr) -> Option<BigInt> {
    match &e.kind {
        ExprKind::Int(v) => Some(v.clone()),
        ExprKind::Unary(UnOp::Neg, inner) => match &inner.kind {
            ExprKind::Int(v) => Some(-v.clone()),
            _ => None,
        },
        _ => None,
    }
}
