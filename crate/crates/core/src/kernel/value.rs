use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{format_real, Literal, ValueType};

/// A typed runtime value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Real(f64),
    Str(String),
}

impl Value {
    pub fn default_for(t: ValueType) -> Value {
        match t {
            ValueType::Real => Value::Real(0.0),
            ValueType::Int => Value::Int(0),
            ValueType::Bool => Value::Bool(false),
            ValueType::Str => Value::Str(String::new()),
        }
    }

    pub fn from_literal(l: &Literal) -> Value {
        match l {
            Literal::Int(i) => Value::Int(*i),
            Literal::Real(r) => Value::Real(*r),
            Literal::Bool(b) => Value::Bool(*b),
            Literal::Str(s) => Value::Str(s.clone()),
        }
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            Value::Bool(_) => "Bool",
            Value::Int(_) => "Int",
            Value::Real(_) => "Real",
            Value::Str(_) => "String",
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Int(i) => Some(*i as f64),
            Value::Real(r) => Some(*r),
            _ => None,
        }
    }

    /// Converts to a slot of type `t`, widening Int to Real.
    pub fn coerce(self, t: ValueType) -> Option<Value> {
        match (t, self) {
            (ValueType::Real, Value::Int(i)) => Some(Value::Real(i as f64)),
            (ValueType::Real, v @ Value::Real(_))
            | (ValueType::Int, v @ Value::Int(_))
            | (ValueType::Bool, v @ Value::Bool(_))
            | (ValueType::Str, v @ Value::Str(_)) => Some(v),
            _ => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Real(r) => f.write_str(&format_real(*r)),
            Value::Str(s) => f.write_str(s),
        }
    }
}
