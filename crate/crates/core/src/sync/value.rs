use std::borrow::Borrow;
use std::fmt;
use std::sync::Arc;

use super::StepError;

/// Name of a shared variable.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(Arc<str>);

impl VarId {
    pub fn new(name: &str) -> Self {
        VarId(Arc::from(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl Borrow<str> for VarId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl From<&str> for VarId {
    fn from(s: &str) -> Self {
        VarId::new(s)
    }
}

impl From<String> for VarId {
    fn from(s: String) -> Self {
        VarId(Arc::from(s))
    }
}

impl fmt::Debug for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// The role a variable plays inside one component.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarKind {
    State,
    Input,
    Output,
}

/// Tagged value held by a shared variable.
///
/// Sequences are reference counted so that snapshots of a store stay cheap
/// even when a variable holds a long log.
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Real(f64),
    Vec2([f64; 2]),
    Seq(Arc<Vec<Value>>),
}

impl Value {
    pub fn seq(items: Vec<Value>) -> Value {
        Value::Seq(Arc::new(items))
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            Value::Bool(_) => "bool",
            Value::Int(_) => "int",
            Value::Real(_) => "real",
            Value::Vec2(_) => "vec2",
            Value::Seq(_) => "seq",
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(i) => Some(*i),
            _ => None,
        }
    }

    pub fn as_real(&self) -> Option<f64> {
        match self {
            Value::Real(r) => Some(*r),
            _ => None,
        }
    }

    pub fn as_vec2(&self) -> Option<[f64; 2]> {
        match self {
            Value::Vec2(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_seq(&self) -> Option<&Arc<Vec<Value>>> {
        match self {
            Value::Seq(s) => Some(s),
            _ => None,
        }
    }

    /// Bit-level equality: unlike `==`, treats `NaN` payloads and signed
    /// zeros as distinct values. Used by determinism checks.
    pub fn bit_eq(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Real(a), Value::Real(b)) => a.to_bits() == b.to_bits(),
            (Value::Vec2(a), Value::Vec2(b)) => {
                a[0].to_bits() == b[0].to_bits() && a[1].to_bits() == b[1].to_bits()
            }
            (Value::Seq(a), Value::Seq(b)) => {
                a.len() == b.len() && a.iter().zip(b.iter()).all(|(x, y)| x.bit_eq(y))
            }
            _ => self == other,
        }
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Self {
        Value::Bool(b)
    }
}

impl From<i64> for Value {
    fn from(i: i64) -> Self {
        Value::Int(i)
    }
}

impl From<f64> for Value {
    fn from(r: f64) -> Self {
        Value::Real(r)
    }
}

impl From<[f64; 2]> for Value {
    fn from(v: [f64; 2]) -> Self {
        Value::Vec2(v)
    }
}

/// Conversion of a domain type to and from its tagged representation.
pub trait Codec: Sized {
    fn encode(&self) -> Value;
    fn decode(value: &Value) -> Result<Self, StepError>;
}

/// Sequential reader over the items of a `Value::Seq`, used by `Codec` impls.
pub struct SeqReader<'a> {
    what: &'static str,
    items: &'a [Value],
    pos: usize,
}

impl<'a> SeqReader<'a> {
    pub fn new(what: &'static str, value: &'a Value) -> Result<Self, StepError> {
        let items = value.as_seq().ok_or_else(|| StepError::Decode {
            what,
            detail: format!("expected seq, found {}", value.type_name()),
        })?;
        Ok(SeqReader {
            what,
            items: items.as_slice(),
            pos: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn next(&mut self) -> Result<&'a Value, StepError> {
        let v = self.items.get(self.pos).ok_or_else(|| StepError::Decode {
            what: self.what,
            detail: format!("missing field #{}", self.pos),
        })?;
        self.pos += 1;
        Ok(v)
    }

    fn mismatch(&self, expected: &str, found: &Value) -> StepError {
        StepError::Decode {
            what: self.what,
            detail: format!(
                "field #{} expected {expected}, found {}",
                self.pos - 1,
                found.type_name()
            ),
        }
    }

    pub fn real(&mut self) -> Result<f64, StepError> {
        let v = self.next()?;
        v.as_real().ok_or_else(|| self.mismatch("real", v))
    }

    pub fn int(&mut self) -> Result<i64, StepError> {
        let v = self.next()?;
        v.as_int().ok_or_else(|| self.mismatch("int", v))
    }

    pub fn bool(&mut self) -> Result<bool, StepError> {
        let v = self.next()?;
        v.as_bool().ok_or_else(|| self.mismatch("bool", v))
    }

    pub fn vec2(&mut self) -> Result<[f64; 2], StepError> {
        let v = self.next()?;
        v.as_vec2().ok_or_else(|| self.mismatch("vec2", v))
    }

    pub fn decode<T: Codec>(&mut self) -> Result<T, StepError> {
        T::decode(self.next()?)
    }
}
