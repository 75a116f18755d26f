use std::cmp::Ordering;
use std::fmt;

use clinseek_core::Timestamp;
use serde::{Serialize, Serializer};

use crate::manifest::ColumnType;

/// One typed table cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Null,
    Integer(i64),
    Real(f64),
    Text(String),
    Timestamp(Timestamp),
}

impl Value {
    /// Coerces a raw CSV field. Empty fields are null for every type.
    pub fn coerce(raw: &str, ty: ColumnType) -> Result<Value, String> {
        if raw.is_empty() {
            return Ok(Value::Null);
        }
        match ty {
            ColumnType::Text => Ok(Value::Text(raw.to_string())),
            ColumnType::Integer => raw
                .trim()
                .parse::<i64>()
                .map(Value::Integer)
                .map_err(|_| format!("{raw:?} is not an integer")),
            ColumnType::Real => raw
                .trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .map(Value::Real)
                .ok_or_else(|| format!("{raw:?} is not a finite real")),
            ColumnType::Timestamp => Timestamp::parse(raw)
                .map(Value::Timestamp)
                .map_err(|e| e.to_string()),
        }
    }

    pub fn as_timestamp(&self) -> Option<Timestamp> {
        match self {
            Value::Timestamp(t) => Some(*t),
            _ => None,
        }
    }

    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null)
    }

    /// Key used to match patient identifiers regardless of column type.
    pub fn id_string(&self) -> Option<String> {
        match self {
            Value::Null => None,
            Value::Integer(i) => Some(i.to_string()),
            Value::Text(s) => Some(s.clone()),
            other => Some(other.to_string()),
        }
    }

    /// Total order used for sorting results: nulls first, then by type.
    pub fn cmp_total(&self, other: &Value) -> Ordering {
        fn rank(v: &Value) -> u8 {
            match v {
                Value::Null => 0,
                Value::Integer(_) | Value::Real(_) => 1,
                Value::Timestamp(_) => 2,
                Value::Text(_) => 3,
            }
        }
        match (self, other) {
            (Value::Integer(a), Value::Integer(b)) => a.cmp(b),
            (Value::Integer(a), Value::Real(b)) => (*a as f64).total_cmp(b),
            (Value::Real(a), Value::Integer(b)) => a.total_cmp(&(*b as f64)),
            (Value::Real(a), Value::Real(b)) => a.total_cmp(b),
            (Value::Timestamp(a), Value::Timestamp(b)) => a.cmp(b),
            (Value::Text(a), Value::Text(b)) => a.cmp(b),
            (a, b) => rank(a).cmp(&rank(b)),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Null => f.write_str("NULL"),
            Value::Integer(i) => write!(f, "{i}"),
            Value::Real(r) => write!(f, "{r}"),
            Value::Text(s) => f.write_str(s),
            Value::Timestamp(t) => f.write_str(&t.to_table_string()),
        }
    }
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Value::Null => serializer.serialize_none(),
            Value::Integer(i) => serializer.serialize_i64(*i),
            Value::Real(r) => serializer.serialize_f64(*r),
            Value::Text(s) => serializer.serialize_str(s),
            Value::Timestamp(t) => serializer.serialize_str(&t.to_table_string()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coercion() {
        assert_eq!(Value::coerce("", ColumnType::Integer), Ok(Value::Null));
        assert_eq!(Value::coerce("12", ColumnType::Integer), Ok(Value::Integer(12)));
        assert!(Value::coerce("1.5", ColumnType::Integer).is_err());
        assert_eq!(Value::coerce("1.5", ColumnType::Real), Ok(Value::Real(1.5)));
        assert!(Value::coerce("NaN", ColumnType::Real).is_err());
        assert!(Value::coerce("2150-01-01 00:00:00", ColumnType::Timestamp).is_ok());
        assert!(Value::coerce("soon", ColumnType::Timestamp).is_err());
    }

    #[test]
    fn display_forms() {
        let t = Value::coerce("2150-01-01T01:02:03", ColumnType::Timestamp).unwrap();
        assert_eq!(t.to_string(), "2150-01-01 01:02:03");
        assert_eq!(Value::Real(2.5).to_string(), "2.5");
        assert_eq!(Value::Null.to_string(), "NULL");
    }

    #[test]
    fn id_string_ignores_type() {
        assert_eq!(Value::Integer(10000032).id_string().as_deref(), Some("10000032"));
        assert_eq!(Value::Text("10000032".into()).id_string().as_deref(), Some("10000032"));
        assert_eq!(Value::Null.id_string(), None);
    }
}
