//! Relations: headers, tuples, bodies with set semantics, keys, stored
//! relations with foreign keys.

use std::cmp::Ordering;
use std::collections::HashSet;

use super::error::KernelError;
use super::scalar::{Kind, Scalar};

/// One header attribute: a (possibly dotted) unique name plus a scalar kind.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Attribute {
    pub name: String,
    pub kind: Kind,
}

impl Attribute {
    pub fn new(name: impl Into<String>, kind: Kind) -> Attribute {
        Attribute { name: name.into(), kind }
    }
}

/// Ordered, non-empty list of uniquely named attributes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Header(Vec<Attribute>);

impl Header {
    pub fn new(attributes: Vec<Attribute>) -> Result<Header, KernelError> {
        if attributes.is_empty() {
            return Err(KernelError::EmptyHeader);
        }
        let mut seen = HashSet::new();
        for attr in &attributes {
            if !seen.insert(attr.name.clone()) {
                return Err(KernelError::DuplicateAttribute(attr.name.clone()));
            }
        }
        Ok(Header(attributes))
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.0.iter().position(|a| a.name == name)
    }

    pub fn kind_of(&self, name: &str) -> Option<&Kind> {
        self.0.iter().find(|a| a.name == name).map(|a| &a.kind)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(|a| a.name.as_str())
    }
}

pub type Tuple = Vec<Scalar>;

/// Compares tuples attribute-wise with the scalar total order.
pub fn tuple_cmp(a: &Tuple, b: &Tuple) -> Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    a.len().cmp(&b.len())
}

/// A relation value: header plus a set of conforming tuples and an optional
/// key. The body is kept deduplicated (set semantics) in insertion order;
/// equality is set-wise (order does not matter).
#[derive(Debug, Clone, Eq)]
pub struct Relation {
    header: Header,
    body: Vec<Tuple>,
    key: Option<Vec<String>>,
}

impl PartialEq for Relation {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key && self.same_rows(other)
    }
}

impl Relation {
    /// Builds a relation, deduplicating the body and validating all
    /// invariants (conformance, key uniqueness, key attributes non-NULL).
    pub fn new(
        header: Header,
        key: Option<Vec<String>>,
        tuples: Vec<Tuple>,
    ) -> Result<Relation, KernelError> {
        let mut rel = Relation::empty_with_key(header, key)?;
        for tuple in tuples {
            rel.insert_unchecked(tuple)?;
        }
        rel.check_key()?;
        Ok(rel)
    }

    pub fn empty(header: Header) -> Relation {
        Relation { header, body: Vec::new(), key: None }
    }

    pub fn empty_with_key(
        header: Header,
        key: Option<Vec<String>>,
    ) -> Result<Relation, KernelError> {
        if let Some(key_attrs) = &key {
            for name in key_attrs {
                if header.position(name).is_none() {
                    return Err(KernelError::UnknownAttribute(name.clone()));
                }
            }
        }
        Ok(Relation { header, body: Vec::new(), key })
    }

    pub fn header(&self) -> &Header {
        &self.header
    }

    pub fn key(&self) -> Option<&[String]> {
        self.key.as_deref()
    }

    pub fn tuples(&self) -> &[Tuple] {
        &self.body
    }

    pub fn len(&self) -> usize {
        self.body.len()
    }

    pub fn is_empty(&self) -> bool {
        self.body.is_empty()
    }

    pub fn contains(&self, tuple: &Tuple) -> bool {
        self.body.iter().any(|t| t == tuple)
    }

    /// Inserts a conforming tuple; duplicates are absorbed (set semantics).
    /// Key constraints are NOT checked here — callers verify at statement
    /// boundary. Returns true when the body grew.
    pub fn insert_unchecked(&mut self, tuple: Tuple) -> Result<bool, KernelError> {
        self.check_conformance(&tuple)?;
        if self.contains(&tuple) {
            return Ok(false);
        }
        self.body.push(tuple);
        Ok(true)
    }

    /// Removes tuples matching the filter; returns how many were removed.
    pub fn retain<F: FnMut(&Tuple) -> bool>(&mut self, mut keep: F) -> usize {
        let before = self.body.len();
        self.body.retain(|t| keep(t));
        before - self.body.len()
    }

    /// Replaces a tuple in place (used by updates); deduplicates afterwards.
    pub fn replace_all<F: FnMut(&Tuple) -> Option<Tuple>>(
        &mut self,
        mut replace: F,
    ) -> Result<usize, KernelError> {
        let mut changed = 0;
        let mut next: Vec<Tuple> = Vec::with_capacity(self.body.len());
        for tuple in self.body.drain(..) {
            let replaced = match replace(&tuple) {
                Some(new_tuple) => {
                    changed += 1;
                    new_tuple
                }
                None => tuple,
            };
            if !next.contains(&replaced) {
                next.push(replaced);
            }
        }
        self.body = next;
        for tuple in &self.body {
            self.check_conformance(tuple)?;
        }
        Ok(changed)
    }

    fn check_conformance(&self, tuple: &Tuple) -> Result<(), KernelError> {
        if tuple.len() != self.header.len() {
            return Err(KernelError::TupleMismatch(format!(
                "expected {} attributes, got {}",
                self.header.len(),
                tuple.len()
            )));
        }
        for (value, attr) in tuple.iter().zip(self.header.attributes()) {
            if !value.conforms_to(&attr.kind) {
                return Err(KernelError::TupleMismatch(format!(
                    "value for `{}` does not have kind {}",
                    attr.name, attr.kind
                )));
            }
        }
        Ok(())
    }

    /// Verifies the key invariant: key attributes non-NULL and no two tuples
    /// agreeing on all key attributes.
    pub fn check_key(&self) -> Result<(), KernelError> {
        let Some(key_attrs) = &self.key else { return Ok(()) };
        let positions: Vec<usize> = key_attrs
            .iter()
            .map(|name| {
                self.header
                    .position(name)
                    .ok_or_else(|| KernelError::UnknownAttribute(name.clone()))
            })
            .collect::<Result<_, _>>()?;
        let mut seen: HashSet<Vec<&Scalar>> = HashSet::new();
        for tuple in &self.body {
            let key_values: Vec<&Scalar> = positions.iter().map(|&i| &tuple[i]).collect();
            if key_values.iter().any(|v| v.is_null()) {
                return Err(KernelError::KeyViolation {
                    relation: String::new(),
                    detail: format!("NULL in key attribute ({})", key_attrs.join(", ")),
                });
            }
            if !seen.insert(key_values) {
                return Err(KernelError::KeyViolation {
                    relation: String::new(),
                    detail: format!("duplicate key ({})", key_attrs.join(", ")),
                });
            }
        }
        Ok(())
    }

    /// Full invariant check; operators assert this on their results in
    /// debug builds (closure property).
    pub fn validate(&self) -> Result<(), KernelError> {
        if self.header.is_empty() {
            return Err(KernelError::EmptyHeader);
        }
        for tuple in &self.body {
            self.check_conformance(tuple)?;
        }
        for (i, a) in self.body.iter().enumerate() {
            for b in &self.body[i + 1..] {
                if a == b {
                    return Err(KernelError::TupleMismatch("duplicate tuple".into()));
                }
            }
        }
        self.check_key()
    }

    /// Returns a copy with the body in canonical order: by key when one is
    /// declared, full-tuple lexicographic otherwise.
    pub fn canonical(&self) -> Relation {
        let mut sorted = self.clone();
        match &self.key {
            Some(key_attrs) => {
                let positions: Vec<usize> =
                    key_attrs.iter().filter_map(|n| self.header.position(n)).collect();
                sorted.body.sort_by(|a, b| {
                    for &i in &positions {
                        match a[i].total_cmp(&b[i]) {
                            Ordering::Equal => continue,
                            other => return other,
                        }
                    }
                    tuple_cmp(a, b)
                });
            }
            None => sorted.body.sort_by(tuple_cmp),
        }
        sorted
    }

    /// Set-wise equality, ignoring body order and keys.
    pub fn same_rows(&self, other: &Relation) -> bool {
        self.header == other.header
            && self.len() == other.len()
            && self.body.iter().all(|t| other.contains(t))
    }
}

/// Foreign key: local attribute values must appear in the target relation
/// (combinations containing NULL are exempt).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForeignKey {
    pub local_attrs: Vec<String>,
    pub target_relation: String,
    pub target_attrs: Vec<String>,
}

/// A named relation persisted in the machine's memory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StoredRelation {
    pub name: String,
    pub relation: Relation,
    pub foreign_keys: Vec<ForeignKey>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::scalar::Oid;

    fn header() -> Header {
        Header::new(vec![
            Attribute::new("Art", Kind::String),
            Attribute::new("Pieces", Kind::Integer),
        ])
        .unwrap()
    }

    #[test]
    fn duplicate_attribute_names_rejected() {
        let err = Header::new(vec![
            Attribute::new("X", Kind::Integer),
            Attribute::new("X", Kind::String),
        ])
        .unwrap_err();
        assert_eq!(err, KernelError::DuplicateAttribute("X".into()));
    }

    #[test]
    fn body_is_a_set() {
        let rel = Relation::new(
            header(),
            None,
            vec![
                vec![Scalar::str("A1"), Scalar::Integer(5)],
                vec![Scalar::str("A1"), Scalar::Integer(5)],
            ],
        )
        .unwrap();
        assert_eq!(rel.len(), 1);
    }

    #[test]
    fn key_uniqueness_and_non_null() {
        let dup = Relation::new(
            header(),
            Some(vec!["Art".into()]),
            vec![
                vec![Scalar::str("A1"), Scalar::Integer(5)],
                vec![Scalar::str("A1"), Scalar::Integer(7)],
            ],
        );
        assert!(matches!(dup, Err(KernelError::KeyViolation { .. })));

        let null_key = Relation::new(
            header(),
            Some(vec!["Art".into()]),
            vec![vec![Scalar::Null, Scalar::Integer(5)]],
        );
        assert!(matches!(null_key, Err(KernelError::KeyViolation { .. })));
    }

    #[test]
    fn conformance_checked_on_insert() {
        let mut rel = Relation::empty(header());
        let err = rel
            .insert_unchecked(vec![Scalar::Integer(1), Scalar::Integer(2)])
            .unwrap_err();
        assert!(matches!(err, KernelError::TupleMismatch(_)));
        // NULL conforms everywhere
        assert!(rel.insert_unchecked(vec![Scalar::Null, Scalar::Null]).unwrap());
    }

    #[test]
    fn canonical_sorts_by_key_then_lexicographic() {
        let rel = Relation::new(
            header(),
            Some(vec!["Art".into()]),
            vec![
                vec![Scalar::str("B"), Scalar::Integer(1)],
                vec![Scalar::str("A"), Scalar::Integer(2)],
            ],
        )
        .unwrap();
        let sorted = rel.canonical();
        assert_eq!(sorted.tuples()[0][0], Scalar::str("A"));
    }

    #[test]
    fn ref_tuples_conform_to_ref_attributes() {
        let h = Header::new(vec![Attribute::new("#oid", Kind::Ref("BANKS".into()))]).unwrap();
        let rel = Relation::new(h, None, vec![vec![Scalar::Ref(Oid(1))]]).unwrap();
        assert_eq!(rel.len(), 1);
    }
}
