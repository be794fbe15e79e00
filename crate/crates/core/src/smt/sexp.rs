//! S-expressions as printed by SMT-LIB and SyGuS solvers.

use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Sexp {
    /// Symbol, numeral, decimal, `#b`/`#x` literal or keyword. Bar-quoted
    /// symbols keep their bars so printing is lossless.
    Atom(String),
    /// String literal contents with `""` unescaped.
    Str(String),
    List(Vec<Sexp>),
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("s-expression syntax error at byte {offset}: {msg}")]
pub struct SexpError {
    pub offset: usize,
    pub msg: String,
}

impl Sexp {
    pub fn atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom(a) => Some(a),
            _ => None,
        }
    }

    pub fn list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List(l) => Some(l),
            _ => None,
        }
    }

    /// Atom text with surrounding bars removed.
    pub fn symbol(&self) -> Option<&str> {
        self.atom().map(crate::term::unescape_symbol)
    }

    /// Whether this is a list whose head is the atom `head`.
    pub fn is_call(&self, head: &str) -> bool {
        matches!(self.list(), Some([Sexp::Atom(h), ..]) if h == head)
    }
}

impl fmt::Display for Sexp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sexp::Atom(a) => write!(f, "{a}"),
            Sexp::Str(s) => write!(f, "\"{}\"", s.replace('"', "\"\"")),
            Sexp::List(items) => {
                write!(f, "(")?;
                for (i, x) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, " ")?;
                    }
                    write!(f, "{x}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// Parses every top-level s-expression in `text`; `;` starts a line comment.
pub fn parse_all(text: &str) -> Result<Vec<Sexp>, SexpError> {
    let bytes = text.as_bytes();
    let mut stack: Vec<Vec<Sexp>> = vec![Vec::new()];
    let mut i = 0;
    let err = |offset: usize, msg: &str| SexpError { offset, msg: msg.to_string() };
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b';' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            b'(' => {
                stack.push(Vec::new());
                i += 1;
            }
            b')' => {
                if stack.len() == 1 {
                    return Err(err(i, "unbalanced `)`"));
                }
                let done = stack.pop().unwrap();
                stack.last_mut().unwrap().push(Sexp::List(done));
                i += 1;
            }
            b'"' => {
                let mut s = String::new();
                i += 1;
                loop {
                    let Some(&ch) = bytes.get(i) else { return Err(err(i, "unterminated string")) };
                    if ch == b'"' {
                        if bytes.get(i + 1) == Some(&b'"') {
                            s.push('"');
                            i += 2;
                            continue;
                        }
                        i += 1;
                        break;
                    }
                    let start = i;
                    i += 1;
                    while i < bytes.len() && bytes[i] != b'"' {
                        i += 1;
                    }
                    s.push_str(&text[start..i]);
                }
                stack.last_mut().unwrap().push(Sexp::Str(s));
            }
            b'|' => {
                let start = i;
                i += 1;
                while i < bytes.len() && bytes[i] != b'|' {
                    i += 1;
                }
                if i == bytes.len() {
                    return Err(err(start, "unterminated quoted symbol"));
                }
                i += 1;
                stack.last_mut().unwrap().push(Sexp::Atom(text[start..i].to_string()));
            }
            c if c.is_ascii_whitespace() => i += 1,
            _ => {
                let start = i;
                while i < bytes.len() && !bytes[i].is_ascii_whitespace() && !b"();\"|".contains(&bytes[i]) {
                    i += 1;
                }
                stack.last_mut().unwrap().push(Sexp::Atom(text[start..i].to_string()));
            }
        }
    }
    if stack.len() != 1 {
        return Err(err(text.len(), "unbalanced `(`"));
    }
    Ok(stack.pop().unwrap())
}
