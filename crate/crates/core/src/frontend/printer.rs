//! Canonical source printer. Output reparses to a structurally equal tree.

use std::fmt::Write;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use crate::ast::*;

const INDENT: &str = "  ";
const PREC_UNARY: u8 = 12;
const PREC_ATOM: u8 = 13;

pub fn pretty_print(m: &AstModule) -> String {
    let mut p = Printer::default();
    p.module(m);
    p.out
}

pub fn print_modules(ms: &[AstModule]) -> String {
    ms.iter().map(pretty_print).collect::<Vec<_>>().join("\n")
}

pub fn print_expr(e: &Expr) -> String {
    let mut s = String::new();
    expr(&mut s, e, 0);
    s
}

pub fn print_type(t: &Type) -> String {
    match t {
        Type::Bool => "boolean".into(),
        Type::Int => "integer".into(),
        Type::Real => "real".into(),
        Type::BitVec(w) => format!("bv{w}"),
        Type::Array(i, e) => format!("[{}]{}", print_type(i), print_type(e)),
        Type::Enum(vs) => format!("enum {{ {} }}", vs.join(", ")),
        Type::Named(n) => n.clone(),
    }
}

/// Decimal text for a rational with a terminating expansion, otherwise `None`.
pub fn decimal_string(r: &BigRational) -> Option<String> {
    let mut den = r.denom().clone();
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    let mut twos = 0usize;
    let mut fives = 0usize;
    while den.is_even() {
        den /= &two;
        twos += 1;
    }
    while (&den % &five).is_zero() {
        den /= &five;
        fives += 1;
    }
    if den != BigInt::from(1) {
        return None;
    }
    let digits = twos.max(fives).max(1);
    let scale = num_traits::pow(BigInt::from(10), digits);
    let scaled = (r * BigRational::from_integer(scale)).to_integer();
    let neg = scaled.is_negative();
    let mag = scaled.abs().to_string();
    let mag = format!("{:0>width$}", mag, width = digits + 1);
    let (int_part, frac) = mag.split_at(mag.len() - digits);
    Some(format!("{}{}.{}", if neg { "-" } else { "" }, int_part, frac))
}

fn expr_prec(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::Binary(op, ..) => op.precedence(),
        ExprKind::Ite(..) | ExprKind::Quant { .. } => 0,
        ExprKind::Unary(..) => PREC_UNARY,
        ExprKind::Int(v) if v.is_negative() => PREC_UNARY,
        ExprKind::Real(v) if v.is_negative() => PREC_UNARY,
        _ => PREC_ATOM,
    }
}

fn expr(out: &mut String, e: &Expr, ctx: u8) {
    let wrap = expr_prec(e) < ctx;
    if wrap {
        out.push('(');
    }
    match &e.kind {
        ExprKind::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        ExprKind::Int(v) => {
            let _ = write!(out, "{v}");
        }
        ExprKind::Real(v) => match decimal_string(v) {
            Some(s) => out.push_str(&s),
            None => {
                let _ = write!(out, "({}.0 / {}.0)", v.numer(), v.denom());
            }
        },
        ExprKind::BitVec { value, width } => {
            let _ = write!(out, "{value}bv{width}");
        }
        ExprKind::Ident(n) => out.push_str(n),
        ExprKind::Primed(n) => {
            let _ = write!(out, "{n}'");
        }
        ExprKind::TraceIndexed(n, i) => {
            let _ = write!(out, "{n}.{i}");
        }
        ExprKind::Old(n) => {
            let _ = write!(out, "old({n})");
        }
        ExprKind::Unary(op, inner) => {
            out.push_str(match op {
                UnOp::Not => "!",
                UnOp::Neg => "-",
                UnOp::BvNot => "~",
            });
            expr(out, inner, PREC_UNARY);
        }
        ExprKind::Binary(op, l, r) => {
            let p = op.precedence();
            let (lp, rp) = if op.right_assoc() { (p + 1, p) } else { (p, p + 1) };
            expr(out, l, lp);
            let _ = write!(out, " {} ", op.symbol());
            expr(out, r, rp);
        }
        ExprKind::Ite(c, t, f) => {
            out.push_str("if ");
            expr(out, c, 0);
            out.push_str(" then ");
            expr(out, t, 0);
            out.push_str(" else ");
            expr(out, f, 0);
        }
        ExprKind::Apply(name, args) => {
            out.push_str(name);
            out.push('(');
            comma_exprs(out, args);
            out.push(')');
        }
        ExprKind::Select(a, i) => {
            expr(out, a, PREC_ATOM);
            out.push('[');
            expr(out, i, 0);
            out.push(']');
        }
        ExprKind::Store(a, i, v) => {
            expr(out, a, PREC_ATOM);
            out.push('[');
            expr(out, i, 0);
            out.push_str(" -> ");
            expr(out, v, 0);
            out.push(']');
        }
        ExprKind::Extract { expr: inner, hi, lo } => {
            expr(out, inner, PREC_ATOM);
            let _ = write!(out, "[{hi}:{lo}]");
        }
        ExprKind::Quant { kind, var, ty, group, body } => {
            let _ = write!(out, "{} ({} : {})", kind.keyword(), var, print_type(ty));
            if let Some(g) = group {
                let _ = write!(out, " in {g}");
            }
            out.push_str(" :: ");
            expr(out, body, 0);
        }
    }
    if wrap {
        out.push(')');
    }
}

fn comma_exprs(out: &mut String, es: &[Expr]) {
    for (i, a) in es.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        expr(out, a, 0);
    }
}

fn params(ps: &[Param]) -> String {
    ps.iter().map(|p| format!("{} : {}", p.name, print_type(&p.ty))).collect::<Vec<_>>().join(", ")
}

fn lhs(l: &Lhs) -> String {
    if l.primed {
        format!("{}'", l.name)
    } else {
        l.name.clone()
    }
}

pub fn print_command(c: &Command) -> String {
    match c {
        Command::Bmc(k) => format!("bmc({k})"),
        Command::Induction => "induction".into(),
        Command::KInduction(k) => format!("kinduction({k})"),
        Command::Verify(p) => format!("verify({p})"),
        Command::Synthesize => "synthesize".into(),
        Command::Check => "check".into(),
        Command::CheckSat(None) => "check_sat".into(),
        Command::CheckSat(Some(Expectation::Observable)) => "check_sat expect observable".into(),
        Command::CheckSat(Some(Expectation::Unobservable)) => "check_sat expect unobservable".into(),
        Command::PrintResults => "print_results".into(),
        Command::PrintCex(vs) => format!("print_cex({})", vs.join(", ")),
    }
}

#[derive(Default)]
struct Printer {
    out: String,
    depth: usize,
}

impl Printer {
    fn line(&mut self, text: &str) {
        for _ in 0..self.depth {
            self.out.push_str(INDENT);
        }
        self.out.push_str(text);
        self.out.push('\n');
    }

    fn module(&mut self, m: &AstModule) {
        self.line(&format!("module {} {{", m.name));
        self.depth += 1;
        for d in &m.decls {
            self.decl(d);
        }
        if let Some(c) = &m.control {
            self.line("control {");
            self.depth += 1;
            for (cmd, _) in &c.commands {
                self.line(&format!("{};", print_command(cmd)));
            }
            self.depth -= 1;
            self.line("}");
        }
        self.depth -= 1;
        self.line("}");
    }

    fn block(&mut self, header: &str, stmts: &[Stmt], footer: &str) {
        self.line(&format!("{header}{{"));
        self.depth += 1;
        for s in stmts {
            self.stmt(s);
        }
        self.depth -= 1;
        self.line(&format!("}}{footer}"));
    }

    fn decl(&mut self, d: &Decl) {
        match &d.kind {
            DeclKind::Type { name, def: None } => self.line(&format!("type {name};")),
            DeclKind::Type { name, def: Some(t) } => self.line(&format!("type {name} = {};", print_type(t))),
            DeclKind::Var { kind, names, ty } => {
                self.line(&format!("{} {} : {};", kind.keyword(), names.join(", "), print_type(ty)))
            }
            DeclKind::Function { name, params: ps, ret } => {
                self.line(&format!("function {name}({}) : {};", params(ps), print_type(ret)))
            }
            DeclKind::Define { name, params: ps, ret, body } => self.line(&format!(
                "define {name}({}) : {} = {};",
                params(ps),
                print_type(ret),
                print_expr(body)
            )),
            DeclKind::SynthFun { name, params: ps, ret, grammar } => {
                let head = format!("synthesis function {name}({}) : {}", params(ps), print_type(ret));
                match grammar {
                    None => self.line(&format!("{head};")),
                    Some(prods) => {
                        self.line(&format!("{head} grammar {{"));
                        self.depth += 1;
                        for p in prods {
                            let mut rules = String::new();
                            comma_exprs(&mut rules, &p.rules);
                            self.line(&format!("{} : {} ::= {};", p.nonterminal, print_type(&p.ty), rules));
                        }
                        self.depth -= 1;
                        self.line("};");
                    }
                }
            }
            DeclKind::OracleFun { name, binary, params: ps, ret } => self.line(&format!(
                "oracle function [{:?}] {name}({}) : {};",
                binary,
                params(ps),
                print_type(ret)
            )),
            DeclKind::Procedure(p) => self.procedure(p),
            DeclKind::Init(b) => self.block("init ", b, ""),
            DeclKind::Next(b) => self.block("next ", b, ""),
            DeclKind::Instance { name, module, bindings } => {
                let bs = bindings.iter().map(|(p, e)| format!("{p} : {}", print_expr(e))).collect::<Vec<_>>();
                self.line(&format!("instance {name} : {module}({});", bs.join(", ")))
            }
            DeclKind::Invariant { name, expr } => self.line(&format!("invariant {name} : {};", print_expr(expr))),
            DeclKind::Axiom { name, expr } => self.line(&format!("axiom {name} : {};", print_expr(expr))),
            DeclKind::HyperInvariant { arity, name, expr } => {
                self.line(&format!("hyperinvariant[{arity}] {name} : {};", print_expr(expr)))
            }
            DeclKind::HyperAxiom { arity, name, expr } => {
                self.line(&format!("hyperaxiom[{arity}] {name} : {};", print_expr(expr)))
            }
            DeclKind::Group { name, ty, elems } => {
                let mut es = String::new();
                comma_exprs(&mut es, elems);
                self.line(&format!("group {name} : {} = {{ {es} }};", print_type(ty)))
            }
        }
    }

    fn procedure(&mut self, p: &ProcDecl) {
        let mut head = format!("procedure {}({})", p.name, params(&p.params));
        if !p.returns.is_empty() {
            let _ = write!(head, " returns ({})", params(&p.returns));
        }
        self.line(&head);
        self.depth += 1;
        for r in &p.requires {
            self.line(&format!("requires {};", print_expr(r)));
        }
        for e in &p.ensures {
            self.line(&format!("ensures {};", print_expr(e)));
        }
        if !p.modifies.is_empty() {
            self.line(&format!("modifies {};", p.modifies.join(", ")));
        }
        self.depth -= 1;
        match &p.body {
            None => self.line(";"),
            Some(b) => self.block("", b, ""),
        }
    }

    fn stmt(&mut self, s: &Stmt) {
        match &s.kind {
            StmtKind::LocalVar { names, ty } => self.line(&format!("var {} : {};", names.join(", "), print_type(ty))),
            StmtKind::Assign { lhs: l, rhs } => self.line(&format!("{} = {};", lhs(l), print_expr(rhs))),
            StmtKind::Havoc(n) => self.line(&format!("havoc {n};")),
            StmtKind::Assert { label: Some(l), expr } => self.line(&format!("assert {l} : {};", print_expr(expr))),
            StmtKind::Assert { label: None, expr } => self.line(&format!("assert {};", print_expr(expr))),
            StmtKind::Assume(e) => self.line(&format!("assume {};", print_expr(e))),
            StmtKind::If { cond, then_branch, else_branch } => {
                let header = format!("if ({}) ", print_expr(cond));
                if else_branch.is_empty() {
                    self.block(&header, then_branch, "");
                } else {
                    self.block(&header, then_branch, " else {");
                    self.depth += 1;
                    for s in else_branch {
                        self.stmt(s);
                    }
                    self.depth -= 1;
                    self.line("}");
                }
            }
            StmtKind::Case(arms) => {
                self.line("case");
                self.depth += 1;
                for (g, body) in arms {
                    self.block(&format!("{} : ", print_expr(g)), body, "");
                }
                self.depth -= 1;
                self.line("esac");
            }
            StmtKind::For { var, lo, hi, body } => {
                self.block(&format!("for {var} in {}..{} ", print_expr(lo), print_expr(hi)), body, "")
            }
            StmtKind::While { cond, invariants, body } => {
                self.line(&format!("while ({})", print_expr(cond)));
                self.depth += 1;
                for i in invariants {
                    self.line(&format!("invariant {};", print_expr(i)));
                }
                self.depth -= 1;
                self.block("", body, "");
            }
            StmtKind::Call { lhs: ls, proc_name, args } => {
                let mut a = String::new();
                comma_exprs(&mut a, args);
                if ls.is_empty() {
                    self.line(&format!("call {proc_name}({a});"));
                } else {
                    let ls = ls.iter().map(lhs).collect::<Vec<_>>().join(", ");
                    self.line(&format!("call ({ls}) = {proc_name}({a});"));
                }
            }
            StmtKind::NextInstance(i) => self.line(&format!("next({i});")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimals() {
        let r = |n: i64, d: i64| BigRational::new(n.into(), d.into());
        assert_eq!(decimal_string(&r(5, 4)).unwrap(), "1.25");
        assert_eq!(decimal_string(&r(-1, 10)).unwrap(), "-0.1");
        assert_eq!(decimal_string(&r(3, 1)).unwrap(), "3.0");
        assert!(decimal_string(&r(1, 3)).is_none());
    }
}
