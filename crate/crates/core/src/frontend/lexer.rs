use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;

use crate::ast::Span;
use crate::diag::{DiagKind, Diagnostic};

pub const KEYWORDS: &[&str] = &[
    "module",
    "type",
    "var",
    "input",
    "output",
    "const",
    "function",
    "define",
    "synthesis",
    "oracle",
    "procedure",
    "requires",
    "ensures",
    "modifies",
    "returns",
    "init",
    "next",
    "invariant",
    "hyperinvariant",
    "axiom",
    "hyperaxiom",
    "group",
    "instance",
    "control",
    "assert",
    "assume",
    "havoc",
    "call",
    "if",
    "then",
    "else",
    "case",
    "esac",
    "for",
    "while",
    "finite_forall",
    "finite_exists",
    "forall",
    "exists",
    "in",
    "old",
    "true",
    "false",
    "boolean",
    "integer",
    "real",
    "enum",
    "grammar",
];

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Keyword(&'static str),
    Int(BigInt),
    Real(BigRational),
    BitVec { value: u64, width: u32 },
    Str(String),
    Punct(&'static str),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "identifier `{s}`"),
            Tok::Keyword(k) => write!(f, "`{k}`"),
            Tok::Int(v) => write!(f, "integer `{v}`"),
            Tok::Real(v) => write!(f, "real `{v}`"),
            Tok::BitVec { value, width } => write!(f, "bitvector `{value}bv{width}`"),
            Tok::Str(s) => write!(f, "string {s:?}"),
            Tok::Punct(p) => write!(f, "`{p}`"),
            Tok::Eof => write!(f, "end of file"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

// Longest match first.
const PUNCTS: &[&str] = &[
    "<==>", "::=", "==>", "==", "!=", "<=", ">=", "&&", "||", "++", "::", "..", "->", "{", "}", "(", ")",
    "[", "]", ";", ",", ":", "=", "<", ">", "!", "+", "-", "*", "/", "&", "|", "^", "~", "'", ".",
];

pub fn lex(file: &Arc<str>, src: &str) -> Result<Vec<Token>, Diagnostic> {
    let chars: Vec<char> = src.chars().collect();
    let mut toks = Vec::new();
    let mut i = 0usize;
    let mut line = 1u32;
    let mut col = 1u32;

    macro_rules! advance {
        ($n:expr) => {{
            for _ in 0..$n {
                if chars[i] == '\n' {
                    line += 1;
                    col = 1;
                } else {
                    col += 1;
                }
                i += 1;
            }
        }};
    }

    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            advance!(1);
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                advance!(1);
            }
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'*') {
            let (sl, sc, so) = (line, col, i as u32);
            advance!(2);
            loop {
                if i >= chars.len() {
                    return Err(Diagnostic::new(
                        DiagKind::LexError,
                        Span::new(file.clone(), so, sl, sc, 2),
                        "unterminated block comment",
                    ));
                }
                if chars[i] == '*' && chars.get(i + 1) == Some(&'/') {
                    advance!(2);
                    break;
                }
                advance!(1);
            }
            continue;
        }
        let (sl, sc) = (line, col);
        let start = i;
        if c.is_ascii_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                advance!(1);
            }
            let word: String = chars[start..i].iter().collect();
            let tok = match KEYWORDS.iter().find(|k| **k == word) {
                Some(k) => Tok::Keyword(k),
                None => Tok::Ident(word),
            };
            toks.push(Token { tok, span: Span::new(file.clone(), start as u32, sl, sc, (i - start) as u32) });
            continue;
        }
        if c.is_ascii_digit() {
            while i < chars.len() && chars[i].is_ascii_digit() {
                advance!(1);
            }
            let digits: String = chars[start..i].iter().collect();
            let tok = if chars.get(i) == Some(&'.') && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit()) {
                advance!(1);
                let fstart = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    advance!(1);
                }
                let frac: String = chars[fstart..i].iter().collect();
                Tok::Real(parse_decimal(&digits, &frac))
            } else if chars.get(i) == Some(&'b')
                && chars.get(i + 1) == Some(&'v')
                && chars.get(i + 2).is_some_and(|d| d.is_ascii_digit())
            {
                advance!(2);
                let wstart = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    advance!(1);
                }
                let wtext: String = chars[wstart..i].iter().collect();
                let span = Span::new(file.clone(), start as u32, sl, sc, (i - start) as u32);
                let width: u32 = wtext
                    .parse()
                    .ok()
                    .filter(|w| (1..=64).contains(w))
                    .ok_or_else(|| {
                        Diagnostic::new(DiagKind::LexError, span.clone(), "bitvector width must be in 1..=64")
                    })?;
                let value: u64 = digits.parse().map_err(|_| {
                    Diagnostic::new(DiagKind::LexError, span.clone(), "bitvector literal too large")
                })?;
                if width < 64 && value >> width != 0 {
                    return Err(Diagnostic::new(
                        DiagKind::LexError,
                        span,
                        format!("value {value} does not fit in {width} bits"),
                    ));
                }
                Tok::BitVec { value, width }
            } else {
                Tok::Int(digits.parse::<BigInt>().expect("digits"))
            };
            toks.push(Token { tok, span: Span::new(file.clone(), start as u32, sl, sc, (i - start) as u32) });
            continue;
        }
        if c == '"' {
            advance!(1);
            let sstart = i;
            while i < chars.len() && chars[i] != '"' && chars[i] != '\n' {
                advance!(1);
            }
            if chars.get(i) != Some(&'"') {
                return Err(Diagnostic::new(
                    DiagKind::LexError,
                    Span::new(file.clone(), start as u32, sl, sc, 1),
                    "unterminated string literal",
                ));
            }
            let s: String = chars[sstart..i].iter().collect();
            advance!(1);
            toks.push(Token { tok: Tok::Str(s), span: Span::new(file.clone(), start as u32, sl, sc, (i - start) as u32) });
            continue;
        }
        let rest = &chars[i..];
        let punct = PUNCTS.iter().find(|p| {
            let pc: Vec<char> = p.chars().collect();
            rest.len() >= pc.len() && rest[..pc.len()] == pc[..]
        });
        match punct {
            Some(p) => {
                advance!(p.len());
                toks.push(Token { tok: Tok::Punct(p), span: Span::new(file.clone(), start as u32, sl, sc, p.len() as u32) });
            }
            None => {
                return Err(Diagnostic::new(
                    DiagKind::LexError,
                    Span::new(file.clone(), start as u32, sl, sc, 1),
                    format!("illegal character {c:?}"),
                ))
            }
        }
    }
    toks.push(Token { tok: Tok::Eof, span: Span::new(file.clone(), i as u32, line, col, 0) });
    Ok(toks)
}

fn parse_decimal(int_part: &str, frac: &str) -> BigRational {
    let numer: BigInt = format!("{int_part}{frac}").parse().expect("digits");
    let mut denom = BigInt::one();
    for _ in 0..frac.len() {
        denom *= 10;
    }
    BigRational::new(numer, denom)
}
