//! The database value: catalogue, stored relations and the OID counter —
//! the unified processing-and-persistence state.

use std::collections::{BTreeMap, HashSet};

use crate::catalog::Catalog;
use crate::error::Result;
use crate::kernel::{Kind, KernelError, Oid, Scalar, Storage};

#[derive(Debug, Clone, PartialEq)]
pub struct Database {
    pub catalog: Catalog,
    pub storage: Storage,
    next_oid: u64,
}

impl Default for Database {
    fn default() -> Database {
        Database::new()
    }
}

impl Database {
    pub fn new() -> Database {
        Database { catalog: Catalog::new(), storage: Storage::new(), next_oid: 1 }
    }

    /// Allocates a fresh OID; strictly increasing, never reused.
    pub fn allocate_oid(&mut self) -> Oid {
        let oid = Oid(self.next_oid);
        self.next_oid += 1;
        oid
    }

    pub fn oid_counter(&self) -> u64 {
        self.next_oid
    }

    /// Restores the counter after a load; must stay ahead of every live OID.
    pub fn set_oid_counter(&mut self, next: u64) {
        self.next_oid = next;
    }

    /// The extent of a class: OIDs of its objects and of every descendant's,
    /// ascending. Classes without storage have empty extents.
    pub fn extent(&self, class: &str) -> Result<Vec<Oid>> {
        self.catalog.class(class)?;
        let mut oids = Vec::new();
        for name in self.catalog.descendants_inclusive(class) {
            oids.extend(self.class_oids(&name));
        }
        oids.sort();
        oids.dedup();
        Ok(oids)
    }

    /// OIDs stored in one exact class's root relation.
    pub fn class_oids(&self, class: &str) -> Vec<Oid> {
        let Some(storage) = self.catalog.storage(class) else { return Vec::new() };
        let Ok(stored) = self.storage.get(&storage.root) else { return Vec::new() };
        let Some(idx) = stored.relation.header().position("#oid") else { return Vec::new() };
        let mut oids: Vec<Oid> =
            stored.relation.tuples().iter().filter_map(|t| t[idx].as_oid()).collect();
        oids.sort();
        oids
    }

    /// The exact class whose root relation holds this OID.
    pub fn exact_class_of(&self, oid: Oid) -> Option<String> {
        for spec in self.catalog.classes() {
            if self.class_oids(&spec.name).contains(&oid) {
                return Some(spec.name.clone());
            }
        }
        None
    }

    /// Statement-boundary constraint check: kernel keys and foreign keys,
    /// class keys over full extents, and reference validity.
    pub fn full_verify(&self) -> Result<()> {
        self.storage.verify_constraints()?;
        self.verify_class_keys()?;
        self.verify_references()?;
        Ok(())
    }

    /// Class KEY uniqueness across the declaring class's full extent.
    /// Combinations containing NULL are exempt (keys may be staged across
    /// statements). Rows of a concrete class that does not store every key
    /// member cannot be compared without evaluation and are skipped.
    fn verify_class_keys(&self) -> Result<()> {
        for spec in self.catalog.classes() {
            let Some(key) = &spec.class_key else { continue };
            let mut seen: HashSet<Vec<Scalar>> = HashSet::new();
            for concrete in self.catalog.descendants_inclusive(&spec.name) {
                let Some(class_storage) = self.catalog.storage(&concrete) else { continue };
                let columns: Option<Vec<&String>> =
                    key.iter().map(|m| class_storage.columns.get(m)).collect();
                let Some(columns) = columns else { continue };
                let stored = match self.storage.get(&class_storage.root) {
                    Ok(stored) => stored,
                    Err(_) => continue,
                };
                let positions: Vec<usize> = columns
                    .iter()
                    .filter_map(|c| stored.relation.header().position(c))
                    .collect();
                if positions.len() != key.len() {
                    continue;
                }
                for tuple in stored.relation.tuples() {
                    let combo: Vec<Scalar> =
                        positions.iter().map(|&i| tuple[i].clone()).collect();
                    if combo.iter().any(|v| v.is_null()) {
                        continue;
                    }
                    if !seen.insert(combo) {
                        return Err(KernelError::KeyViolation {
                            relation: class_storage.root.clone(),
                            detail: format!(
                                "duplicate class key ({}) of `{}`",
                                key.join(", "),
                                spec.name
                            ),
                        }
                        .into());
                    }
                }
            }
        }
        Ok(())
    }

    /// Every non-NULL REF(C) value refers to an object in C's extent.
    fn verify_references(&self) -> Result<()> {
        let mut extents: BTreeMap<String, HashSet<Oid>> = BTreeMap::new();
        for stored in self.storage.iter() {
            for (idx, attr) in stored.relation.header().attributes().iter().enumerate() {
                let Kind::Ref(class) = &attr.kind else { continue };
                if !extents.contains_key(class) {
                    let extent = self.extent(class).unwrap_or_default();
                    extents.insert(class.clone(), extent.into_iter().collect());
                }
                let extent = &extents[class];
                for tuple in stored.relation.tuples() {
                    if let Some(oid) = tuple[idx].as_oid() {
                        if !extent.contains(&oid) {
                            return Err(KernelError::ForeignKeyViolation {
                                relation: stored.name.clone(),
                                detail: format!(
                                    "`{}` holds a reference to a nonexistent `{class}` object (oid {oid})",
                                    attr.name
                                ),
                            }
                            .into());
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Query-equivalent state comparison (catalog, storage, counter).
    pub fn same_state(&self, other: &Database) -> bool {
        self.catalog == other.catalog
            && self.storage == other.storage
            && self.next_oid == other.next_oid
    }
}
