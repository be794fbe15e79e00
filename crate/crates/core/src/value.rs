//! Concrete values and their exact arithmetic.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::frontend::printer::decimal_string;
use crate::term::{EnumDef, Sort};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Bool(bool),
    Int(BigInt),
    Real(BigRational),
    BitVec { value: BigUint, width: u32 },
    Enum { def: Arc<EnumDef>, idx: usize },
    /// Element of an uninterpreted sort, identified by the solver's name for it.
    Opaque { sort: Arc<str>, id: String },
    Array(ArrayValue),
}

/// Finite-support array: every index not in `entries` maps to `default`.
/// Kept normalized (no entry equal to the default) so `==` is extensional.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ArrayValue {
    pub index: Sort,
    pub default: Box<Value>,
    pub entries: BTreeMap<Value, Value>,
}

impl ArrayValue {
    pub fn constant(index: Sort, default: Value) -> Self {
        ArrayValue { index, default: Box::new(default), entries: BTreeMap::new() }
    }

    pub fn select(&self, idx: &Value) -> Value {
        self.entries.get(idx).cloned().unwrap_or_else(|| (*self.default).clone())
    }

    pub fn store(&self, idx: Value, v: Value) -> Self {
        let mut out = self.clone();
        if v == *out.default {
            out.entries.remove(&idx);
        } else {
            out.entries.insert(idx, v);
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("sort mismatch in {0}")]
    SortMismatch(&'static str),
    #[error("no value for {0}")]
    Unbound(String),
    #[error("cannot evaluate {0}")]
    Unsupported(String),
}

pub fn mask(width: u32) -> BigUint {
    (BigUint::one() << width) - BigUint::one()
}

pub fn bv(value: impl Into<BigUint>, width: u32) -> Value {
    Value::BitVec { value: value.into() & mask(width), width }
}

impl Value {
    /// Default used for unconstrained symbols in counterexamples.
    pub fn default_of(sort: &Sort) -> Value {
        match sort {
            Sort::Bool => Value::Bool(false),
            Sort::Int => Value::Int(BigInt::zero()),
            Sort::Real => Value::Real(BigRational::zero()),
            Sort::BitVec(w) => bv(0u32, *w),
            Sort::Enum(def) => Value::Enum { def: def.clone(), idx: 0 },
            Sort::Uninterp(name) => Value::Opaque { sort: name.clone(), id: format!("{name}!default") },
            Sort::Array(i, e) => Value::Array(ArrayValue::constant((**i).clone(), Value::default_of(e))),
        }
    }

    pub fn as_bool(&self) -> Result<bool, EvalError> {
        match self {
            Value::Bool(b) => Ok(*b),
            _ => Err(EvalError::SortMismatch("boolean")),
        }
    }

    pub fn as_int(&self) -> Result<&BigInt, EvalError> {
        match self {
            Value::Int(v) => Ok(v),
            _ => Err(EvalError::SortMismatch("integer")),
        }
    }

    /// SMT-LIB literal syntax, as used by the oracle protocol.
    pub fn to_smt(&self) -> String {
        match self {
            Value::Bool(b) => b.to_string(),
            Value::Int(v) if v.is_negative() => format!("(- {})", v.abs()),
            Value::Int(v) => v.to_string(),
            Value::Real(r) => {
                let mag = |n: &BigInt| format!("{}.0", n.abs());
                let body = if r.is_integer() {
                    mag(r.numer())
                } else {
                    format!("(/ {} {})", mag(r.numer()), mag(r.denom()))
                };
                if r.is_negative() {
                    format!("(- {body})")
                } else {
                    body
                }
            }
            Value::BitVec { value, width } => {
                let bits = format!("{:b}", value);
                format!("#b{}{}", "0".repeat(*width as usize - bits.len().min(*width as usize)), bits)
            }
            Value::Enum { def, idx } => crate::term::symbol(&def.variants[*idx]),
            Value::Opaque { id, .. } => id.clone(),
            Value::Array(a) => {
                let mut s = format!("((as const {}) {})", self.sort(), a.default.to_smt());
                for (k, v) in &a.entries {
                    s = format!("(store {s} {} {})", k.to_smt(), v.to_smt());
                }
                s
            }
        }
    }

    pub fn sort(&self) -> Sort {
        match self {
            Value::Bool(_) => Sort::Bool,
            Value::Int(_) => Sort::Int,
            Value::Real(_) => Sort::Real,
            Value::BitVec { width, .. } => Sort::BitVec(*width),
            Value::Enum { def, .. } => Sort::Enum(def.clone()),
            Value::Opaque { sort, .. } => Sort::Uninterp(sort.clone()),
            Value::Array(a) => Sort::Array(Box::new(a.index.clone()), Box::new(a.default.sort())),
        }
    }
}

/// uclid-mini literal syntax.
impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(v) => write!(f, "{v}"),
            Value::Real(r) => match decimal_string(r) {
                Some(s) => write!(f, "{s}"),
                None => write!(f, "{}.0 / {}.0", r.numer(), r.denom()),
            },
            Value::BitVec { value, width } => write!(f, "{value}bv{width}"),
            Value::Enum { def, idx } => write!(f, "{}", def.variants[*idx]),
            Value::Opaque { id, .. } => write!(f, "{id}"),
            Value::Array(a) => {
                write!(f, "[default {}", a.default)?;
                for (k, v) in &a.entries {
                    write!(f, ", {k} -> {v}")?;
                }
                write!(f, "]")
            }
        }
    }
}

// Exact arithmetic shared by the concrete interpreter and the term evaluator.

/// Euclidean division: the remainder is always non-negative.
pub fn int_div(a: &BigInt, b: &BigInt) -> Result<BigInt, EvalError> {
    if b.is_zero() {
        return Err(EvalError::DivisionByZero);
    }
    let (q, r) = a.div_mod_floor(b);
    // div_mod_floor gives r with the sign of b; shift to r >= 0.
    Ok(if r.is_negative() { q + 1 } else { q })
}

pub fn int_mod(a: &BigInt, b: &BigInt) -> Result<BigInt, EvalError> {
    let q = int_div(a, b)?;
    Ok(a - b * q)
}

pub fn bv_udiv(a: &BigUint, b: &BigUint, width: u32) -> BigUint {
    if b.is_zero() {
        mask(width)
    } else {
        a / b
    }
}

pub fn bv_urem(a: &BigUint, b: &BigUint) -> BigUint {
    if b.is_zero() {
        a.clone()
    } else {
        a % b
    }
}

pub fn bv_neg(a: &BigUint, width: u32) -> BigUint {
    ((BigUint::one() << width) - a) & mask(width)
}
