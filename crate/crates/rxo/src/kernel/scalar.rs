//! Scalar values and kinds of the relational machine.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};

use chrono::{DateTime, TimeZone, Utc};

use super::error::KernelError;

/// Object identifier: stable, address-free, strictly increasing per database.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Oid(pub u64);

impl fmt::Display for Oid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Scalar kind. `Ref` carries the declared target class name.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Kind {
    String,
    Integer,
    Float,
    Datetime,
    Boolean,
    Ref(String),
}

impl Kind {
    pub fn is_numeric(&self) -> bool {
        matches!(self, Kind::Integer | Kind::Float)
    }

    /// Kinds usable as MIN/MAX input.
    pub fn is_ordered(&self) -> bool {
        matches!(self, Kind::Integer | Kind::Float | Kind::Datetime | Kind::String)
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kind::String => write!(f, "STRING"),
            Kind::Integer => write!(f, "INTEGER"),
            Kind::Float => write!(f, "FLOAT"),
            Kind::Datetime => write!(f, "DATETIME"),
            Kind::Boolean => write!(f, "BOOLEAN"),
            Kind::Ref(class) => write!(f, "REF({class})"),
        }
    }
}

/// A scalar value. `Null` is a distinguished marker valid for every kind.
///
/// Datetimes are stored as whole seconds since the Unix epoch (UTC, second
/// precision). Floats compare bitwise so that set semantics have a total
/// equality; NaN is rejected at construction.
#[derive(Debug, Clone)]
pub enum Scalar {
    Null,
    String(String),
    Integer(i64),
    Float(f64),
    Datetime(i64),
    Boolean(bool),
    Ref(Oid),
}

impl Scalar {
    /// Builds a FLOAT, rejecting NaN.
    pub fn float(value: f64) -> Result<Scalar, KernelError> {
        if value.is_nan() {
            return Err(KernelError::NanRejected);
        }
        Ok(Scalar::Float(value))
    }

    pub fn str(value: impl Into<String>) -> Scalar {
        Scalar::String(value.into())
    }

    pub fn is_null(&self) -> bool {
        matches!(self, Scalar::Null)
    }

    /// True when a non-NULL value matches `kind`. NULL matches every kind.
    pub fn conforms_to(&self, kind: &Kind) -> bool {
        match (self, kind) {
            (Scalar::Null, _) => true,
            (Scalar::String(_), Kind::String) => true,
            (Scalar::Integer(_), Kind::Integer) => true,
            (Scalar::Float(_), Kind::Float) => true,
            (Scalar::Datetime(_), Kind::Datetime) => true,
            (Scalar::Boolean(_), Kind::Boolean) => true,
            (Scalar::Ref(_), Kind::Ref(_)) => true,
            _ => false,
        }
    }

    /// The kind of a non-NULL value; NULL has no kind of its own.
    pub fn value_kind(&self) -> Option<Kind> {
        match self {
            Scalar::Null => None,
            Scalar::String(_) => Some(Kind::String),
            Scalar::Integer(_) => Some(Kind::Integer),
            Scalar::Float(_) => Some(Kind::Float),
            Scalar::Datetime(_) => Some(Kind::Datetime),
            Scalar::Boolean(_) => Some(Kind::Boolean),
            Scalar::Ref(_) => Some(Kind::Ref(String::new())),
        }
    }

    pub fn as_oid(&self) -> Option<Oid> {
        match self {
            Scalar::Ref(oid) => Some(*oid),
            _ => None,
        }
    }

    /// Parses an ISO-8601 UTC timestamp with second precision
    /// (`2024-01-02T00:00:00Z`) into epoch seconds. Only the canonical
    /// form is accepted.
    pub fn parse_datetime(text: &str) -> Option<i64> {
        let parsed = DateTime::parse_from_rfc3339(text).ok()?;
        let utc: DateTime<Utc> = parsed.with_timezone(&Utc);
        if utc.timestamp_subsec_nanos() != 0 {
            return None;
        }
        let secs = utc.timestamp();
        if format_datetime(secs) == text {
            Some(secs)
        } else {
            None
        }
    }

    /// Total order used for canonical sorting: NULL first, then by value.
    pub fn total_cmp(&self, other: &Scalar) -> Ordering {
        fn rank(s: &Scalar) -> u8 {
            match s {
                Scalar::Null => 0,
                Scalar::Boolean(_) => 1,
                Scalar::Integer(_) => 2,
                Scalar::Float(_) => 3,
                Scalar::Datetime(_) => 4,
                Scalar::String(_) => 5,
                Scalar::Ref(_) => 6,
            }
        }
        match (self, other) {
            (Scalar::Null, Scalar::Null) => Ordering::Equal,
            (Scalar::Boolean(a), Scalar::Boolean(b)) => a.cmp(b),
            (Scalar::Integer(a), Scalar::Integer(b)) => a.cmp(b),
            (Scalar::Float(a), Scalar::Float(b)) => a.total_cmp(b),
            (Scalar::Datetime(a), Scalar::Datetime(b)) => a.cmp(b),
            (Scalar::String(a), Scalar::String(b)) => a.cmp(b),
            (Scalar::Ref(a), Scalar::Ref(b)) => a.cmp(b),
            (a, b) => rank(a).cmp(&rank(b)),
        }
    }
}

impl PartialEq for Scalar {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Scalar::Null, Scalar::Null) => true,
            (Scalar::String(a), Scalar::String(b)) => a == b,
            (Scalar::Integer(a), Scalar::Integer(b)) => a == b,
            // bitwise: set semantics demand a total equality
            (Scalar::Float(a), Scalar::Float(b)) => a.to_bits() == b.to_bits(),
            (Scalar::Datetime(a), Scalar::Datetime(b)) => a == b,
            (Scalar::Boolean(a), Scalar::Boolean(b)) => a == b,
            (Scalar::Ref(a), Scalar::Ref(b)) => a == b,
            _ => false,
        }
    }
}

impl Eq for Scalar {}

impl Hash for Scalar {
    fn hash<H: Hasher>(&self, state: &mut H) {
        match self {
            Scalar::Null => 0u8.hash(state),
            Scalar::String(s) => {
                1u8.hash(state);
                s.hash(state);
            }
            Scalar::Integer(i) => {
                2u8.hash(state);
                i.hash(state);
            }
            Scalar::Float(f) => {
                3u8.hash(state);
                f.to_bits().hash(state);
            }
            Scalar::Datetime(d) => {
                4u8.hash(state);
                d.hash(state);
            }
            Scalar::Boolean(b) => {
                5u8.hash(state);
                b.hash(state);
            }
            Scalar::Ref(oid) => {
                6u8.hash(state);
                oid.hash(state);
            }
        }
    }
}

/// Formats epoch seconds as `YYYY-MM-DDThh:mm:ssZ`.
pub fn format_datetime(secs: i64) -> String {
    match Utc.timestamp_opt(secs, 0) {
        chrono::LocalResult::Single(dt) => dt.format("%Y-%m-%dT%H:%M:%SZ").to_string(),
        _ => format!("@{secs}"),
    }
}
