//! Named stored relations with keys and foreign keys, plus checked mutation.

use std::collections::{BTreeMap, HashSet};

use super::error::KernelError;
use super::expr::ScalarExpr;
use super::relation::{ForeignKey, Header, Relation, StoredRelation, Tuple};
use super::scalar::Scalar;

/// The machine's persistent memory: uniquely named relations.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Storage {
    relations: BTreeMap<String, StoredRelation>,
}

/// A single insert/update/delete against one stored relation.
#[derive(Debug, Clone)]
pub enum Mutation {
    Insert { relation: String, tuples: Vec<Tuple> },
    Update { relation: String, assignments: Vec<(String, ScalarExpr)>, filter: ScalarExpr },
    Delete { relation: String, filter: ScalarExpr },
}

impl Storage {
    pub fn new() -> Storage {
        Storage::default()
    }

    pub fn create_relation(
        &mut self,
        name: impl Into<String>,
        relation: Relation,
        foreign_keys: Vec<ForeignKey>,
    ) -> Result<(), KernelError> {
        let name = name.into();
        if self.relations.contains_key(&name) {
            return Err(KernelError::DuplicateRelation(name));
        }
        self.relations.insert(name.clone(), StoredRelation { name, relation, foreign_keys });
        Ok(())
    }

    pub fn drop_relation(&mut self, name: &str) -> Result<StoredRelation, KernelError> {
        self.relations
            .remove(name)
            .ok_or_else(|| KernelError::UnknownRelation(name.to_string()))
    }

    pub fn get(&self, name: &str) -> Result<&StoredRelation, KernelError> {
        self.relations
            .get(name)
            .ok_or_else(|| KernelError::UnknownRelation(name.to_string()))
    }

    pub fn get_mut(&mut self, name: &str) -> Result<&mut StoredRelation, KernelError> {
        self.relations
            .get_mut(name)
            .ok_or_else(|| KernelError::UnknownRelation(name.to_string()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.relations.contains_key(name)
    }

    /// All stored relations in name order.
    pub fn iter(&self) -> impl Iterator<Item = &StoredRelation> {
        self.relations.values()
    }

    /// Applies the mutation without constraint verification. Conformance
    /// (kinds, arity) is still enforced. Returns the number of rows changed.
    pub fn apply_unchecked(&mut self, mutation: &Mutation) -> Result<usize, KernelError> {
        match mutation {
            Mutation::Insert { relation, tuples } => {
                let stored = self.get_mut(relation)?;
                let mut added = 0;
                for tuple in tuples {
                    if stored.relation.insert_unchecked(tuple.clone())? {
                        added += 1;
                    }
                }
                Ok(added)
            }
            Mutation::Update { relation, assignments, filter } => {
                let stored = self.get_mut(relation)?;
                let header = stored.relation.header().clone();
                filter.check_total(&header)?;
                let mut positions = Vec::with_capacity(assignments.len());
                for (name, expr) in assignments {
                    expr.check_total(&header)?;
                    let idx = header
                        .position(name)
                        .ok_or_else(|| KernelError::UnknownAttribute(name.clone()))?;
                    positions.push(idx);
                }
                let mut failure = None;
                let changed = stored.relation.replace_all(|tuple| {
                    if failure.is_some() {
                        return None;
                    }
                    match filter.eval_predicate(&header, tuple) {
                        Ok(false) => None,
                        Ok(true) => {
                            let mut next = tuple.clone();
                            for ((_, expr), &idx) in assignments.iter().zip(&positions) {
                                match expr.eval(&header, tuple) {
                                    Ok(value) => next[idx] = value,
                                    Err(err) => {
                                        failure = Some(err);
                                        return None;
                                    }
                                }
                            }
                            Some(next)
                        }
                        Err(err) => {
                            failure = Some(err);
                            None
                        }
                    }
                })?;
                match failure {
                    Some(err) => Err(err),
                    None => Ok(changed),
                }
            }
            Mutation::Delete { relation, filter } => {
                let stored = self.get_mut(relation)?;
                let header = stored.relation.header().clone();
                filter.check_total(&header)?;
                let mut failure = None;
                let removed = stored.relation.retain(|tuple| {
                    if failure.is_some() {
                        return true;
                    }
                    match filter.eval_predicate(&header, tuple) {
                        Ok(hit) => !hit,
                        Err(err) => {
                            failure = Some(err);
                            true
                        }
                    }
                });
                match failure {
                    Some(err) => Err(err),
                    None => Ok(removed),
                }
            }
        }
    }

    /// Checked mutation: returns the post-state with all key and foreign-key
    /// constraints holding, or an error leaving `self` untouched.
    pub fn apply_mutation(&self, mutation: &Mutation) -> Result<Storage, KernelError> {
        let mut next = self.clone();
        next.apply_unchecked(mutation)?;
        next.verify_constraints()?;
        Ok(next)
    }

    /// Full constraint re-scan: per-relation keys and every foreign key.
    pub fn verify_constraints(&self) -> Result<(), KernelError> {
        for stored in self.relations.values() {
            stored.relation.check_key().map_err(|err| match err {
                KernelError::KeyViolation { detail, .. } => {
                    KernelError::KeyViolation { relation: stored.name.clone(), detail }
                }
                other => other,
            })?;
            for fk in &stored.foreign_keys {
                self.verify_foreign_key(stored, fk)?;
            }
        }
        Ok(())
    }

    fn verify_foreign_key(
        &self,
        stored: &StoredRelation,
        fk: &ForeignKey,
    ) -> Result<(), KernelError> {
        let local_positions: Vec<usize> = fk
            .local_attrs
            .iter()
            .map(|name| {
                stored
                    .relation
                    .header()
                    .position(name)
                    .ok_or_else(|| KernelError::UnknownAttribute(name.clone()))
            })
            .collect::<Result<_, _>>()?;
        let target = self.get(&fk.target_relation)?;
        let target_positions: Vec<usize> = fk
            .target_attrs
            .iter()
            .map(|name| {
                target
                    .relation
                    .header()
                    .position(name)
                    .ok_or_else(|| KernelError::UnknownAttribute(name.clone()))
            })
            .collect::<Result<_, _>>()?;
        let existing: HashSet<Vec<&Scalar>> = target
            .relation
            .tuples()
            .iter()
            .map(|t| target_positions.iter().map(|&i| &t[i]).collect())
            .collect();
        for tuple in stored.relation.tuples() {
            let combo: Vec<&Scalar> = local_positions.iter().map(|&i| &tuple[i]).collect();
            if combo.iter().any(|v| v.is_null()) {
                continue;
            }
            if !existing.contains(&combo) {
                return Err(KernelError::ForeignKeyViolation {
                    relation: stored.name.clone(),
                    detail: format!(
                        "({}) has no match in `{}`({})",
                        fk.local_attrs.join(", "),
                        fk.target_relation,
                        fk.target_attrs.join(", ")
                    ),
                });
            }
        }
        Ok(())
    }

    /// Drops an attribute from a relation (used when a stored realization is
    /// replaced). Rows that become equal collapse under set semantics.
    pub fn remove_attribute(&mut self, relation: &str, attr: &str) -> Result<(), KernelError> {
        let stored = self.get_mut(relation)?;
        let idx = stored
            .relation
            .header()
            .position(attr)
            .ok_or_else(|| KernelError::UnknownAttribute(attr.to_string()))?;
        let mut attrs = stored.relation.header().attributes().to_vec();
        attrs.remove(idx);
        let header = Header::new(attrs)?;
        let key = stored
            .relation
            .key()
            .map(|k| k.iter().filter(|n| n.as_str() != attr).cloned().collect::<Vec<_>>());
        let mut next = Relation::empty_with_key(header, key)?;
        for tuple in stored.relation.tuples() {
            let mut narrower = tuple.clone();
            narrower.remove(idx);
            next.insert_unchecked(narrower)?;
        }
        stored.relation = next;
        Ok(())
    }

    /// Extends a relation header with a new attribute, filling existing rows
    /// with NULL (used when a stored realization is added later).
    pub fn add_attribute(
        &mut self,
        relation: &str,
        attr: super::relation::Attribute,
    ) -> Result<(), KernelError> {
        let stored = self.get_mut(relation)?;
        let mut attrs = stored.relation.header().attributes().to_vec();
        if attrs.iter().any(|a| a.name == attr.name) {
            return Err(KernelError::DuplicateAttribute(attr.name));
        }
        attrs.push(attr);
        let header = Header::new(attrs)?;
        let key = stored.relation.key().map(|k| k.to_vec());
        let mut next = Relation::empty_with_key(header, key)?;
        for tuple in stored.relation.tuples() {
            let mut wider = tuple.clone();
            wider.push(Scalar::Null);
            next.insert_unchecked(wider)?;
        }
        stored.relation = next;
        Ok(())
    }
}
