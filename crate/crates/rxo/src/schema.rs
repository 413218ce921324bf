//! Translation of class specifications into stored relation schemas and
//! name-table entries, plus the schema statements (CREATE CLASS and
//! ALTER ... REALIZE) that drive it.
//!
//! Naming is derived from source names: class `GOODS` stores its objects in
//! `GOODS@obj`, a stored set-of component `Turnover` in `GOODS@Turnover`,
//! and a nested set-of in `GOODS@Turnover@Sub`. `@` cannot appear in
//! identifiers, so derived names never collide with each other.

use crate::catalog::{
    lower_class, lower_realization_body, CatalogError, ChildStorage, ClassSpec, ComponentKind,
    MemberKind, Realization, ResolvedMember, SetOfShape,
};
use crate::database::Database;
use crate::error::Result;
use crate::kernel::{Attribute, ForeignKey, Header, Kind, Relation};
use crate::parser::ast::{AlterRealize, CreateClass, RealizeBody, Stmt};

pub const OID_ATTR: &str = "#oid";

pub fn root_relation_name(class: &str) -> String {
    format!("{class}@obj")
}

pub fn child_relation_name(class: &str, member_path: &str) -> String {
    format!("{class}@{}", member_path.replace('.', "@"))
}

/// Where a member's data lives for one concrete class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StorageBinding {
    /// A root-relation attribute (scalar or reference component).
    Column { relation: String, attr: String },
    /// A child relation (set-of component).
    Child(ChildStorage),
}

/// Name-table lookup: the relation and attribute(s) carrying a member that
/// is realized as stored for this concrete class.
pub fn storage_for(db: &Database, class: &str, member: &str) -> Result<StorageBinding> {
    let class_storage = db
        .catalog
        .storage(class)
        .ok_or_else(|| CatalogError::NotStored { class: class.into(), member: member.into() })?;
    if let Some(attr) = class_storage.columns.get(member) {
        return Ok(StorageBinding::Column {
            relation: class_storage.root.clone(),
            attr: attr.clone(),
        });
    }
    if let Some(child) = class_storage.children.get(member) {
        return Ok(StorageBinding::Child(child.clone()));
    }
    Err(CatalogError::NotStored { class: class.into(), member: member.into() }.into())
}

// ---------------------------------------------------------------------------
// CREATE CLASS
// ---------------------------------------------------------------------------

/// Defines a class: validates the declaration against the catalogue, records
/// the specification, and derives storage for members whose inherited
/// realization is already stored. No storage is allocated for own members
/// until ALTER ... REALIZE ... AS STORED.
pub fn define_class(db: &mut Database, decl: &CreateClass) -> Result<()> {
    if db.catalog.has_class(&decl.name) {
        return Err(CatalogError::DuplicateClass(decl.name.clone()).into());
    }
    if decl.parents.iter().any(|p| p == &decl.name) {
        return Err(CatalogError::CyclicInheritance(decl.name.clone()).into());
    }
    for parent in &decl.parents {
        if !db.catalog.has_class(parent) {
            return Err(CatalogError::UnknownParent(parent.clone()).into());
        }
    }
    let spec = lower_class(decl)?;

    // flattened interface of the candidate class, with collision checking
    let mut flattened: Vec<ResolvedMember> = Vec::new();
    for parent in &spec.parents {
        for inherited in db.catalog.resolve_interface(parent)? {
            merge_or_collide(&mut flattened, inherited)?;
        }
    }
    for own in &spec.members {
        merge_or_collide(
            &mut flattened,
            ResolvedMember { name: own.name.clone(), origin: spec.name.clone(), kind: own.kind.clone() },
        )?;
    }

    validate_component_targets(db, &spec)?;
    validate_class_key(&spec, &flattened)?;
    validate_references(db, &spec, &flattened)?;

    db.catalog.push_class(spec.clone());
    db.catalog.record(&Stmt::CreateClass(decl.clone()));

    // members already realized as stored through a parent get storage now
    for member in &flattened {
        if !matches!(member.kind, MemberKind::Component(_)) {
            continue;
        }
        if let Some((_, Realization::Stored)) =
            db.catalog.effective_realization(&spec.name, &member.name)
        {
            derive_storage(db, &spec.name, &[member.name.clone()])?;
        }
    }
    Ok(())
}

fn merge_or_collide(
    members: &mut Vec<ResolvedMember>,
    incoming: ResolvedMember,
) -> Result<()> {
    match members.iter().find(|m| m.name == incoming.name) {
        None => {
            members.push(incoming);
            Ok(())
        }
        Some(existing) if existing.origin == incoming.origin => Ok(()),
        Some(_) => Err(CatalogError::MemberCollision(incoming.name).into()),
    }
}

/// Every reference target (component, nested attribute, method parameter)
/// must name a defined class; a class may reference itself.
fn validate_component_targets(db: &Database, spec: &ClassSpec) -> Result<()> {
    fn check_kind(db: &Database, own: &str, kind: &Kind) -> Result<()> {
        if let Kind::Ref(target) = kind {
            if target != own && !db.catalog.has_class(target) {
                return Err(CatalogError::UnknownClass(target.clone()).into());
            }
        }
        Ok(())
    }
    fn check_component(db: &Database, own: &str, kind: &ComponentKind) -> Result<()> {
        match kind {
            ComponentKind::Scalar(kind) => check_kind(db, own, kind),
            ComponentKind::Reference(target) => {
                if target != own && !db.catalog.has_class(target) {
                    return Err(CatalogError::UnknownClass(target.clone()).into());
                }
                Ok(())
            }
            ComponentKind::SetOf(shape) => {
                for (_, attr_kind) in &shape.attrs {
                    check_component(db, own, attr_kind)?;
                }
                Ok(())
            }
        }
    }
    for member in &spec.members {
        match &member.kind {
            MemberKind::Component(kind) => check_component(db, &spec.name, kind)?,
            MemberKind::Method { params, ret } => {
                for (_, kind) in params {
                    check_kind(db, &spec.name, kind)?;
                }
                if let Some(kind) = ret {
                    check_kind(db, &spec.name, kind)?;
                }
            }
        }
    }
    Ok(())
}

fn validate_class_key(spec: &ClassSpec, flattened: &[ResolvedMember]) -> Result<()> {
    let Some(key) = &spec.class_key else { return Ok(()) };
    for name in key {
        let member = flattened.iter().find(|m| m.name == *name).ok_or_else(|| {
            CatalogError::InvalidClass(format!("KEY attribute `{name}` is not a member"))
        })?;
        match &member.kind {
            MemberKind::Component(ComponentKind::Scalar(_))
            | MemberKind::Component(ComponentKind::Reference(_)) => {}
            _ => {
                return Err(CatalogError::InvalidClass(format!(
                    "KEY attribute `{name}` must be a scalar or reference component"
                ))
                .into())
            }
        }
    }
    Ok(())
}

fn validate_references(
    db: &Database,
    spec: &ClassSpec,
    flattened: &[ResolvedMember],
) -> Result<()> {
    for constraint in &spec.references {
        let member = flattened
            .iter()
            .find(|m| m.name == constraint.component)
            .ok_or_else(|| CatalogError::UnknownName(constraint.component.clone()))?;
        let MemberKind::Component(ComponentKind::SetOf(shape)) = &member.kind else {
            return Err(CatalogError::InvalidClass(format!(
                "REFERENCE component `{}` must be a SET OF",
                constraint.component
            ))
            .into());
        };
        for attr in &constraint.local_attrs {
            match shape.attr(attr) {
                Some(ComponentKind::SetOf(_)) | None => {
                    return Err(CatalogError::UnknownName(format!(
                        "{}.{attr}",
                        constraint.component
                    ))
                    .into())
                }
                Some(_) => {}
            }
        }
        let target_members: Vec<ResolvedMember> = if constraint.target_class == spec.name {
            flattened.to_vec()
        } else {
            db.catalog.class(&constraint.target_class)?;
            db.catalog.resolve_interface(&constraint.target_class)?
        };
        for attr in &constraint.target_attrs {
            let target = target_members.iter().find(|m| m.name == *attr).ok_or_else(|| {
                CatalogError::UnknownName(format!("{}.{attr}", constraint.target_class))
            })?;
            match &target.kind {
                MemberKind::Component(ComponentKind::Scalar(_))
                | MemberKind::Component(ComponentKind::Reference(_)) => {}
                _ => {
                    return Err(CatalogError::InvalidClass(format!(
                        "REFERENCE target `{attr}` must be a scalar or reference component"
                    ))
                    .into())
                }
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// ALTER ... REALIZE
// ---------------------------------------------------------------------------

/// Registers realizations for the statement's targets: stores the catalogue
/// entry, allocates or drops storage as needed, and propagates stored
/// derivation to descendants that inherit the realization.
pub fn register_realization(db: &mut Database, stmt: &AlterRealize) -> Result<()> {
    let class = stmt.class.clone();
    db.catalog.class(&class)?;

    if stmt.targets.len() > 1 && !matches!(stmt.body, RealizeBody::Stored) {
        return Err(CatalogError::KindMismatch(
            "multiple realization targets require AS STORED".into(),
        )
        .into());
    }

    for target in &stmt.targets {
        let member = db.catalog.member(&class, &target.name)?;
        let realization = lower_realization_body(&stmt.body, target.params.as_deref())?;
        match (&member.kind, &realization) {
            (MemberKind::Method { params, .. }, Realization::Procedure { params: given, .. }) => {
                if params != given {
                    return Err(CatalogError::KindMismatch(format!(
                        "realization signature of `{}` does not match its declaration",
                        target.name
                    ))
                    .into());
                }
            }
            (MemberKind::Method { .. }, _) => {
                return Err(CatalogError::KindMismatch(format!(
                    "method `{}` must be realized by a procedure",
                    target.name
                ))
                .into())
            }
            (MemberKind::Component(_), Realization::Procedure { params, .. }) => {
                if !params.is_empty() {
                    return Err(CatalogError::KindMismatch(format!(
                        "component `{}` takes no parameters",
                        target.name
                    ))
                    .into());
                }
            }
            (MemberKind::Component(_), _) => {}
        }

        let has_storage = class_has_member_storage(db, &class, &target.name);
        match &realization {
            Realization::Stored => {
                if has_storage {
                    return Err(CatalogError::AlreadyStored {
                        class: class.clone(),
                        member: target.name.clone(),
                    }
                    .into());
                }
                db.catalog.set_realization(&class, &target.name, Realization::Stored);
                derive_storage(db, &class, &[target.name.clone()])?;
                propagate_stored(db, &class, &target.name)?;
            }
            _ => {
                if has_storage {
                    drop_member_storage(db, &class, &target.name)?;
                }
                db.catalog.set_realization(&class, &target.name, realization.clone());
                // descendants that inherited this class's stored realization
                // lose their storage too (their effective body is now this one)
                for descendant in db.catalog.descendants_inclusive(&class) {
                    if descendant == class {
                        continue;
                    }
                    if db.catalog.own_realization(&descendant, &target.name).is_some() {
                        continue;
                    }
                    if class_has_member_storage(db, &descendant, &target.name) {
                        drop_member_storage(db, &descendant, &target.name)?;
                    }
                }
            }
        }
    }
    db.catalog.record(&Stmt::AlterRealize(stmt.clone()));
    Ok(())
}

fn class_has_member_storage(db: &Database, class: &str, member: &str) -> bool {
    db.catalog
        .storage(class)
        .is_some_and(|s| s.columns.contains_key(member) || s.children.contains_key(member))
}

/// Descendants that now resolve their realization to `class` get storage.
fn propagate_stored(db: &mut Database, class: &str, member: &str) -> Result<()> {
    for descendant in db.catalog.descendants_inclusive(class) {
        if descendant == class {
            continue;
        }
        let interface = db.catalog.resolve_interface(&descendant)?;
        if !interface.iter().any(|m| m.name == member) {
            continue;
        }
        let Some((provider, Realization::Stored)) =
            db.catalog.effective_realization(&descendant, member)
        else {
            continue;
        };
        if provider == class && !class_has_member_storage(db, &descendant, member) {
            derive_storage(db, &descendant, &[member.to_string()])?;
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Storage derivation
// ---------------------------------------------------------------------------

/// Creates (or extends) the root relation for `class` and allocates storage
/// for the listed members: one root attribute per scalar/reference, one
/// child relation per set-of. Class REFERENCE clauses become foreign keys.
pub fn derive_storage(db: &mut Database, class: &str, members: &[String]) -> Result<()> {
    ensure_root(db, class)?;
    for member in members {
        if class_has_member_storage(db, class, member) {
            return Err(CatalogError::AlreadyStored {
                class: class.to_string(),
                member: member.clone(),
            }
            .into());
        }
        let resolved = db.catalog.member(class, member)?;
        let MemberKind::Component(kind) = resolved.kind else {
            return Err(CatalogError::KindMismatch(format!(
                "method `{member}` cannot be stored"
            ))
            .into());
        };
        match kind {
            ComponentKind::Scalar(scalar_kind) => {
                add_root_column(db, class, member, scalar_kind)?;
            }
            ComponentKind::Reference(target) => {
                add_root_column(db, class, member, Kind::Ref(target))?;
            }
            ComponentKind::SetOf(shape) => {
                let root = root_relation_name(class);
                let link = vec![(OID_ATTR.to_string(), Kind::Ref(class.to_string()))];
                create_child_relations(db, class, member, &shape, link, &root)?;
                attach_reference_constraints(db, class, member)?;
            }
        }
    }
    Ok(())
}

/// Guarantees the root relation of a class exists: object identity is
/// independent of having stored components.
pub fn ensure_object_root(db: &mut Database, class: &str) -> Result<()> {
    db.catalog.class(class)?;
    ensure_root(db, class)
}

fn ensure_root(db: &mut Database, class: &str) -> Result<()> {
    let root = root_relation_name(class);
    if db.storage.contains(&root) {
        return Ok(());
    }
    let header = Header::new(vec![Attribute::new(OID_ATTR, Kind::Ref(class.to_string()))])?;
    let relation = Relation::empty_with_key(header, Some(vec![OID_ATTR.to_string()]))?;
    db.storage.create_relation(root.clone(), relation, Vec::new())?;
    db.catalog.storage_mut(class).root = root;
    Ok(())
}

fn add_root_column(db: &mut Database, class: &str, member: &str, kind: Kind) -> Result<()> {
    let root = root_relation_name(class);
    db.storage.add_attribute(&root, Attribute::new(member, kind))?;
    db.catalog
        .storage_mut(class)
        .columns
        .insert(member.to_string(), member.to_string());
    Ok(())
}

fn create_child_relations(
    db: &mut Database,
    class: &str,
    member_path: &str,
    shape: &SetOfShape,
    link: Vec<(String, Kind)>,
    parent_relation: &str,
) -> Result<()> {
    let relation_name = child_relation_name(class, member_path);
    let mut attrs: Vec<Attribute> =
        link.iter().map(|(name, kind)| Attribute::new(name, kind.clone())).collect();
    let mut own_attrs = Vec::new();
    let mut nested = Vec::new();
    for (attr_name, attr_kind) in &shape.attrs {
        match attr_kind {
            ComponentKind::Scalar(kind) => {
                attrs.push(Attribute::new(attr_name, kind.clone()));
                own_attrs.push(attr_name.clone());
            }
            ComponentKind::Reference(target) => {
                attrs.push(Attribute::new(attr_name, Kind::Ref(target.clone())));
                own_attrs.push(attr_name.clone());
            }
            ComponentKind::SetOf(inner) => nested.push((attr_name.clone(), inner.clone())),
        }
    }
    if attrs.iter().skip(link.len()).any(|a| link.iter().any(|(n, _)| n == &a.name)) {
        return Err(CatalogError::InvalidClass(format!(
            "`{member_path}`: attribute names collide with enclosing key attributes"
        ))
        .into());
    }
    let header = Header::new(attrs)?;
    let key = if shape.key.is_empty() {
        None
    } else {
        let mut key: Vec<String> = link.iter().map(|(n, _)| n.clone()).collect();
        key.extend(shape.key.iter().cloned());
        Some(key)
    };
    let relation = Relation::empty_with_key(header, key)?;
    let link_names: Vec<String> = link.iter().map(|(n, _)| n.clone()).collect();
    let foreign_keys = vec![ForeignKey {
        local_attrs: link_names.clone(),
        target_relation: parent_relation.to_string(),
        target_attrs: link_names.clone(),
    }];
    db.storage.create_relation(relation_name.clone(), relation, foreign_keys)?;
    db.catalog.storage_mut(class).children.insert(
        member_path.to_string(),
        ChildStorage {
            relation: relation_name.clone(),
            parent: member_path.rsplit_once('.').map(|(parent, _)| parent.to_string()),
            link_attrs: link_names,
            attrs: own_attrs,
        },
    );

    for (attr_name, inner_shape) in nested {
        // rows of a nested component are addressed by #oid plus the keys of
        // every enclosing level
        let mut inner_link = link.clone();
        for key_attr in &shape.key {
            let kind = shape
                .attr(key_attr)
                .and_then(|k| k.attribute_kind())
                .ok_or_else(|| CatalogError::InvalidClass(format!("bad key `{key_attr}`")))?;
            inner_link.push((key_attr.clone(), kind));
        }
        let inner_path = format!("{member_path}.{attr_name}");
        create_child_relations(db, class, &inner_path, &inner_shape, inner_link, &relation_name)?;
    }
    Ok(())
}

/// REFERENCE clauses naming this component become kernel foreign keys from
/// the child relation to the target class's root storage. The target
/// members must already be stored.
fn attach_reference_constraints(db: &mut Database, class: &str, member: &str) -> Result<()> {
    let constraints = db.catalog.reference_constraints(class)?;
    let child = match db.catalog.storage(class).and_then(|s| s.children.get(member)) {
        Some(child) => child.clone(),
        None => return Ok(()),
    };
    for constraint in constraints.iter().filter(|c| c.component == member) {
        let target_storage = db
            .catalog
            .storage(&constraint.target_class)
            .ok_or_else(|| CatalogError::NotStored {
                class: constraint.target_class.clone(),
                member: constraint.target_attrs.join(","),
            })?
            .clone();
        let mut target_attrs = Vec::new();
        for attr in &constraint.target_attrs {
            let column = target_storage.columns.get(attr).ok_or_else(|| {
                CatalogError::NotStored {
                    class: constraint.target_class.clone(),
                    member: attr.clone(),
                }
            })?;
            target_attrs.push(column.clone());
        }
        let stored = db.storage.get_mut(&child.relation)?;
        stored.foreign_keys.push(ForeignKey {
            local_attrs: constraint.local_attrs.clone(),
            target_relation: target_storage.root.clone(),
            target_attrs,
        });
    }
    Ok(())
}

/// True when the member's storage for this class holds any data.
fn member_storage_holds_data(db: &Database, class: &str, member: &str) -> bool {
    let Some(class_storage) = db.catalog.storage(class) else { return false };
    if let Some(column) = class_storage.columns.get(member) {
        if let Ok(stored) = db.storage.get(&class_storage.root) {
            if let Some(idx) = stored.relation.header().position(column) {
                return stored.relation.tuples().iter().any(|t| !t[idx].is_null());
            }
        }
        return false;
    }
    // a set-of member: any child (or nested child) row counts as data
    let prefix = format!("{member}.");
    for (path, child) in &class_storage.children {
        if path == member || path.starts_with(&prefix) {
            if let Ok(stored) = db.storage.get(&child.relation) {
                if !stored.relation.is_empty() {
                    return true;
                }
            }
        }
    }
    false
}

/// Removes the storage backing a member for one class. Refuses when the
/// storage holds data — destroy it explicitly first.
pub fn drop_member_storage(db: &mut Database, class: &str, member: &str) -> Result<()> {
    if member_storage_holds_data(db, class, member) {
        return Err(CatalogError::StoredDataLoss {
            class: class.to_string(),
            member: member.to_string(),
        }
        .into());
    }
    let Some(class_storage) = db.catalog.storage(class).cloned() else { return Ok(()) };
    if let Some(column) = class_storage.columns.get(member) {
        db.storage.remove_attribute(&class_storage.root, column)?;
        db.catalog.storage_mut(class).columns.remove(member);
        return Ok(());
    }
    let prefix = format!("{member}.");
    let doomed: Vec<(String, String)> = class_storage
        .children
        .iter()
        .filter(|(path, _)| path.as_str() == member || path.starts_with(&prefix))
        .map(|(path, child)| (path.clone(), child.relation.clone()))
        .collect();
    for (path, relation) in doomed {
        db.storage.drop_relation(&relation)?;
        db.catalog.storage_mut(class).children.remove(&path);
    }
    Ok(())
}
