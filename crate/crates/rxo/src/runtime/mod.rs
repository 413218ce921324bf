//! Object lifecycle and bulk mutation: NEW, DESTROY, component assignment,
//! set-component INSERT/DELETE, and iterator-free method execution.

mod method;

use thiserror::Error;

pub use method::{compile_method, exec_method, SetProcedure, Step, StepTarget};

use crate::catalog::{lookup_path, ComponentKind, MemberKind, PathCursor, Realization};
use crate::database::Database;
use crate::error::{Error, Result};
use crate::kernel::{Oid, Scalar};
use crate::parser::ast::{Expr, ExprKind, NewStmt, Path};
use crate::query::{self, EvalCtx, QueryError};
use crate::schema::{self, storage_for, StorageBinding, OID_ATTR};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuntimeError {
    #[error("`{class}.{member}` is calculated and cannot be assigned")]
    AssignToCalculated { class: String, member: String },
    #[error("unknown component `{0}`")]
    UnknownComponent(String),
    #[error("method body cannot run as a set procedure: {0}")]
    NonCompilableBody(String),
    #[error("`{class}.{method}` is not realized as a procedure")]
    MethodNotRealized { class: String, method: String },
    #[error("{0}")]
    ArityMismatch(String),
    #[error("`{0}` is not a stored set-of component")]
    NotASetComponent(String),
}

/// A selected set of live objects of one class (including descendants).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObjectSelection {
    pub class: String,
    pub oids: Vec<Oid>,
}

impl ObjectSelection {
    pub fn new(class: impl Into<String>, oids: Vec<Oid>) -> ObjectSelection {
        ObjectSelection { class: class.into(), oids }
    }
}

/// Builds a selection from a class name and optional selection expression.
pub fn select_objects(
    db: &Database,
    class: &str,
    predicate: Option<&Expr>,
) -> Result<ObjectSelection> {
    let ctx = EvalCtx::read_only(db);
    let selection = query::compile_selection_in(&ctx, class, predicate)?;
    Ok(ObjectSelection { class: selection.class, oids: selection.oids })
}

/// Replaces every NEW sub-expression by the reference of the object it
/// creates (depth-first, so nested NEW runs before its enclosing one).
pub fn resolve_new_exprs(db: &mut Database, expr: &Expr) -> Result<Expr> {
    let kind = match &expr.kind {
        ExprKind::New(new_stmt) => {
            let oid = new_object(db, new_stmt)?;
            ExprKind::Resolved(Scalar::Ref(oid))
        }
        ExprKind::Cmp(op, a, b) => ExprKind::Cmp(
            *op,
            Box::new(resolve_new_exprs(db, a)?),
            Box::new(resolve_new_exprs(db, b)?),
        ),
        ExprKind::Arith(op, a, b) => ExprKind::Arith(
            *op,
            Box::new(resolve_new_exprs(db, a)?),
            Box::new(resolve_new_exprs(db, b)?),
        ),
        ExprKind::And(a, b) => ExprKind::And(
            Box::new(resolve_new_exprs(db, a)?),
            Box::new(resolve_new_exprs(db, b)?),
        ),
        ExprKind::Or(a, b) => ExprKind::Or(
            Box::new(resolve_new_exprs(db, a)?),
            Box::new(resolve_new_exprs(db, b)?),
        ),
        ExprKind::Not(e) => ExprKind::Not(Box::new(resolve_new_exprs(db, e)?)),
        ExprKind::Neg(e) => ExprKind::Neg(Box::new(resolve_new_exprs(db, e)?)),
        ExprKind::IsNull(e) => ExprKind::IsNull(Box::new(resolve_new_exprs(db, e)?)),
        ExprKind::IsNotNull(e) => ExprKind::IsNotNull(Box::new(resolve_new_exprs(db, e)?)),
        _ => return Ok(expr.clone()),
    };
    Ok(Expr::new(kind, expr.pos))
}

/// Creates one object: a fresh OID and a root row with the initialized
/// attributes set and everything else NULL. Nested NEW initializer values
/// create their objects first. Constraints are checked at statement end.
pub fn new_object(db: &mut Database, stmt: &NewStmt) -> Result<Oid> {
    let class = stmt.class.clone();
    let interface = db.catalog.resolve_interface(&class)?;
    for member in &interface {
        if matches!(member.kind, MemberKind::Component(_))
            && db.catalog.effective_realization(&class, &member.name).is_none()
        {
            return Err(QueryError::UnrealizedComponent {
                class: class.clone(),
                member: member.name.clone(),
            }
            .into());
        }
    }
    schema::ensure_object_root(db, &class)?;

    let mut values: Vec<(String, Scalar)> = Vec::with_capacity(stmt.initializers.len());
    for (component, value_expr) in &stmt.initializers {
        let member = interface
            .iter()
            .find(|m| m.name == *component)
            .ok_or_else(|| RuntimeError::UnknownComponent(component.clone()))?;
        let declared_kind = match &member.kind {
            MemberKind::Component(kind @ (ComponentKind::Scalar(_) | ComponentKind::Reference(_))) => {
                kind.attribute_kind().expect("scalar/reference components have a kind")
            }
            _ => {
                return Err(RuntimeError::UnknownComponent(format!(
                    "`{component}` cannot be initialized with `:=` (set components use INSERT)"
                ))
                .into())
            }
        };
        if !matches!(
            db.catalog.effective_realization(&class, component),
            Some((_, Realization::Stored))
        ) {
            return Err(RuntimeError::AssignToCalculated {
                class: class.clone(),
                member: component.clone(),
            }
            .into());
        }
        let resolved = resolve_new_exprs(db, value_expr)?;
        let ctx = EvalCtx::read_only(db);
        let value = query::expr_scalar(&ctx, &resolved)?;
        if !value.conforms_to(&declared_kind) {
            return Err(QueryError::KindMismatch(format!(
                "initializer for `{component}` must have kind {declared_kind}"
            ))
            .into());
        }
        values.push((component.clone(), value));
    }

    let oid = db.allocate_oid();
    let root = db
        .catalog
        .storage(&class)
        .expect("root storage just ensured")
        .root
        .clone();
    let stored = db.storage.get_mut(&root)?;
    let header = stored.relation.header().clone();
    let mut row: Vec<Scalar> = vec![Scalar::Null; header.len()];
    let oid_idx = header.position(OID_ATTR).expect("roots carry #oid");
    row[oid_idx] = Scalar::Ref(oid);
    for (component, value) in values {
        let storage = db.catalog.storage(&class).expect("checked above");
        let column = storage.columns.get(&component).ok_or_else(|| {
            Error::from(RuntimeError::AssignToCalculated {
                class: class.clone(),
                member: component.clone(),
            })
        })?;
        let idx = header
            .position(column)
            .ok_or_else(|| QueryError::UnknownAttribute(column.clone()))?;
        row[idx] = value;
    }
    db.storage.get_mut(&root)?.relation.insert_unchecked(row)?;
    Ok(oid)
}

/// Destroys the selected objects: root and child rows disappear, and every
/// reference elsewhere that pointed at them becomes NULL.
pub fn destroy_objects(db: &mut Database, selection: &ObjectSelection) -> Result<usize> {
    use std::collections::HashSet;
    let doomed: HashSet<Oid> = selection.oids.iter().copied().collect();
    if doomed.is_empty() {
        return Ok(0);
    }
    let mut destroyed = 0usize;
    for &oid in &selection.oids {
        let Some(exact) = db.exact_class_of(oid) else { continue };
        let Some(class_storage) = db.catalog.storage(&exact).cloned() else { continue };
        let root = db.storage.get_mut(&class_storage.root)?;
        let oid_idx = root.relation.header().position(OID_ATTR).expect("roots carry #oid");
        destroyed += root.relation.retain(|t| t[oid_idx].as_oid() != Some(oid));
        for child in class_storage.children.values() {
            let stored = db.storage.get_mut(&child.relation)?;
            let idx = stored
                .relation
                .header()
                .position(OID_ATTR)
                .expect("child relations carry #oid");
            stored.relation.retain(|t| t[idx].as_oid() != Some(oid));
        }
    }
    // dangling references become NULL
    let relation_names: Vec<String> = db.storage.iter().map(|s| s.name.clone()).collect();
    for name in relation_names {
        let stored = db.storage.get_mut(&name)?;
        let ref_positions: Vec<usize> = stored
            .relation
            .header()
            .attributes()
            .iter()
            .enumerate()
            .filter(|(_, a)| matches!(a.kind, crate::kernel::Kind::Ref(_)))
            .map(|(i, _)| i)
            .collect();
        if ref_positions.is_empty() {
            continue;
        }
        stored.relation.replace_all(|tuple| {
            let mut hit = false;
            let mut next = tuple.clone();
            for &i in &ref_positions {
                if let Some(oid) = next[i].as_oid() {
                    if doomed.contains(&oid) {
                        next[i] = Scalar::Null;
                        hit = true;
                    }
                }
            }
            hit.then_some(next)
        })?;
    }
    Ok(destroyed)
}

/// Bulk component assignment over a selection. The value expression is
/// evaluated per object and may reference the object's own attributes.
pub fn assign_component(
    db: &mut Database,
    selection: &ObjectSelection,
    component: &str,
    value_expr: &Expr,
) -> Result<usize> {
    let value_expr = resolve_new_exprs(db, value_expr)?;
    let mut updates: Vec<(String, String, Oid, Scalar)> = Vec::new();
    for &oid in &selection.oids {
        let exact = db
            .exact_class_of(oid)
            .ok_or_else(|| QueryError::UnknownName(format!("no object with oid {oid}")))?;
        let member = db.catalog.member(&exact, component).map_err(|_| {
            Error::from(RuntimeError::UnknownComponent(component.to_string()))
        })?;
        let declared_kind = match &member.kind {
            MemberKind::Component(kind @ (ComponentKind::Scalar(_) | ComponentKind::Reference(_))) => {
                kind.attribute_kind().expect("scalar/reference components have a kind")
            }
            _ => {
                return Err(RuntimeError::AssignToCalculated {
                    class: exact.clone(),
                    member: component.to_string(),
                }
                .into())
            }
        };
        let binding = storage_for(db, &exact, component).map_err(|_| {
            Error::from(RuntimeError::AssignToCalculated {
                class: exact.clone(),
                member: component.to_string(),
            })
        })?;
        let StorageBinding::Column { relation, attr } = binding else {
            return Err(RuntimeError::AssignToCalculated {
                class: exact.clone(),
                member: component.to_string(),
            }
            .into());
        };
        let ctx = EvalCtx::with_host(db, &exact, Some(oid));
        let value = query::expr_scalar(&ctx, &value_expr)?;
        if !value.conforms_to(&declared_kind) {
            return Err(QueryError::KindMismatch(format!(
                "cannot assign that value to `{component}` ({declared_kind})"
            ))
            .into());
        }
        updates.push((relation, attr, oid, value));
    }
    let mut changed = 0usize;
    for (relation, attr, oid, value) in updates {
        let stored = db.storage.get_mut(&relation)?;
        let header = stored.relation.header().clone();
        let oid_idx = header.position(OID_ATTR).expect("roots carry #oid");
        let attr_idx = header
            .position(&attr)
            .ok_or_else(|| QueryError::UnknownAttribute(attr.clone()))?;
        changed += stored.relation.replace_all(|tuple| {
            if tuple[oid_idx].as_oid() == Some(oid) && tuple[attr_idx] != value {
                let mut next = tuple.clone();
                next[attr_idx] = value.clone();
                Some(next)
            } else {
                None
            }
        })?;
    }
    Ok(changed)
}

/// Parent contexts an INSERT/DELETE statement goes through: either objects
/// (top-level set components) or enclosing set rows (nested components).
enum SetParents {
    Objects(Vec<Oid>),
    Rows(crate::query::SetRowSet),
}

/// Splits an INSERT/DELETE target path into its parent entities and the
/// final set-of member name.
fn resolve_set_target(db: &Database, path: &Path) -> Result<(SetParents, String)> {
    if path.segments.len() < 2 {
        return Err(RuntimeError::NotASetComponent(path.dotted()).into());
    }
    let binding = lookup_path(&db.catalog, path, None)?;
    let last = binding.segments.last().expect("non-empty");
    let member = match (&last.after, &last.binding) {
        (PathCursor::SetRows { .. }, crate::catalog::SegmentBinding::Member { member, .. }) => {
            member.clone()
        }
        (PathCursor::SetRows { .. }, crate::catalog::SegmentBinding::SetAttr { attr }) => {
            attr.clone()
        }
        _ => return Err(RuntimeError::NotASetComponent(path.dotted()).into()),
    };
    let mut parent = path.clone();
    parent.segments.pop();
    let ctx = EvalCtx::read_only(db);
    match crate::query::walk_parent(&ctx, &parent)? {
        crate::query::ParentEntities::Objects(oids) => Ok((SetParents::Objects(oids), member)),
        crate::query::ParentEntities::Rows(rows) => Ok((SetParents::Rows(rows), member)),
    }
}

/// Inserts rows into a stored set-of component for every selected parent.
/// Values are positional in the component's declared attribute order.
pub fn insert_component(db: &mut Database, path: &Path, rows: &[Vec<Scalar>]) -> Result<usize> {
    let (parents, member) = resolve_set_target(db, path)?;
    let mut inserted = 0usize;
    match parents {
        SetParents::Objects(oids) => {
            for oid in oids {
                let exact = db
                    .exact_class_of(oid)
                    .ok_or_else(|| QueryError::UnknownName(format!("no object with oid {oid}")))?;
                if !matches!(
                    db.catalog.effective_realization(&exact, &member),
                    Some((_, Realization::Stored))
                ) {
                    return Err(RuntimeError::AssignToCalculated {
                        class: exact,
                        member: member.clone(),
                    }
                    .into());
                }
                let StorageBinding::Child(child) = storage_for(db, &exact, &member)? else {
                    return Err(RuntimeError::NotASetComponent(member.clone()).into());
                };
                inserted += insert_child_rows(db, &child.relation, &[Scalar::Ref(oid)], rows)?;
            }
        }
        SetParents::Rows(parent_rows) => {
            let key_positions: Vec<usize> = {
                let value_attrs = parent_rows.value_attrs();
                parent_rows
                    .shape
                    .key
                    .iter()
                    .map(|k| {
                        value_attrs
                            .iter()
                            .position(|(name, _)| name == k)
                            .ok_or_else(|| QueryError::UnknownAttribute(k.clone()).into())
                    })
                    .collect::<Result<_>>()?
            };
            for row in &parent_rows.rows {
                let nested_path = format!("{}.{}", parent_rows.member_path, member);
                let child = db
                    .catalog
                    .storage(&row.exact)
                    .and_then(|s| s.children.get(&nested_path).cloned())
                    .ok_or_else(|| RuntimeError::NotASetComponent(nested_path.clone()))?;
                let mut link = row.link.clone();
                for &pos in &key_positions {
                    link.push(row.values[pos].clone());
                }
                inserted += insert_child_rows(db, &child.relation, &link, rows)?;
            }
        }
    }
    Ok(inserted)
}

fn insert_child_rows(
    db: &mut Database,
    relation: &str,
    link: &[Scalar],
    rows: &[Vec<Scalar>],
) -> Result<usize> {
    let stored = db.storage.get_mut(relation)?;
    let width = stored.relation.header().len();
    let mut inserted = 0usize;
    for values in rows {
        if link.len() + values.len() != width {
            return Err(RuntimeError::ArityMismatch(format!(
                "`{relation}` takes {} values, got {}",
                width - link.len(),
                values.len()
            ))
            .into());
        }
        let mut tuple: Vec<Scalar> = link.to_vec();
        tuple.extend(values.iter().cloned());
        if stored.relation.insert_unchecked(tuple)? {
            inserted += 1;
        }
    }
    Ok(inserted)
}

/// Deletes rows of a stored set-of component matching the predicate (all
/// rows when no predicate is given) for every selected parent.
pub fn delete_component(
    db: &mut Database,
    path: &Path,
    predicate: Option<&Expr>,
) -> Result<usize> {
    let (parents, member) = resolve_set_target(db, path)?;
    let mut doomed_sets: Vec<(String, Vec<Vec<Scalar>>)> = Vec::new();
    {
        let ctx = EvalCtx::read_only(db);
        match parents {
            SetParents::Objects(oids) => {
                for oid in oids {
                    let exact = db.exact_class_of(oid).ok_or_else(|| {
                        QueryError::UnknownName(format!("no object with oid {oid}"))
                    })?;
                    if !matches!(
                        db.catalog.effective_realization(&exact, &member),
                        Some((_, Realization::Stored))
                    ) {
                        return Err(RuntimeError::AssignToCalculated {
                            class: exact,
                            member: member.clone(),
                        }
                        .into());
                    }
                    let rows = crate::query::component_rows(&ctx, oid, &member)?;
                    let matching = match predicate {
                        Some(pred) => rows.filter(&ctx, pred)?,
                        None => rows,
                    };
                    let StorageBinding::Child(child) = storage_for(db, &exact, &member)? else {
                        return Err(RuntimeError::NotASetComponent(member.clone()).into());
                    };
                    for row in matching.rows {
                        let mut tuple = row.link.clone();
                        tuple.extend(row.values);
                        doomed_sets.push((child.relation.clone(), vec![tuple]));
                    }
                }
            }
            SetParents::Rows(parent_rows) => {
                let nested =
                    parent_rows.nested_member_rows(&ctx, &member)?;
                let matching = match predicate {
                    Some(pred) => nested.filter(&ctx, pred)?,
                    None => nested,
                };
                for row in matching.rows {
                    let nested_path = format!("{}.{}", parent_rows.member_path, member);
                    let child = db
                        .catalog
                        .storage(&row.exact)
                        .and_then(|s| s.children.get(&nested_path).cloned())
                        .ok_or_else(|| RuntimeError::NotASetComponent(nested_path.clone()))?;
                    let mut tuple = row.link.clone();
                    tuple.extend(row.values);
                    doomed_sets.push((child.relation.clone(), vec![tuple]));
                }
            }
        }
    }
    let mut removed = 0usize;
    for (relation, tuples) in doomed_sets {
        let stored = db.storage.get_mut(&relation)?;
        removed += stored.relation.retain(|t| !tuples.contains(t));
    }
    Ok(removed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{execute, run_source, Outcome};
    use crate::kernel::KernelError;
    use crate::parser::{parse_expression, parse_statement};
    use crate::testkit::{d0, d0_schema, oid_by};

    fn run(db: &mut Database, source: &str) -> Outcome {
        let stmt = parse_statement(source).unwrap();
        execute(db, &stmt).unwrap_or_else(|e| panic!("{source} failed: {e}"))
    }

    fn run_err(db: &mut Database, source: &str) -> Error {
        let stmt = parse_statement(source).unwrap();
        execute(db, &stmt).expect_err("statement should fail")
    }

    #[test]
    fn new_bank_adds_one_row() {
        let mut db = d0_schema();
        let outcome = run(&mut db, "NEW BANKS WITH SET .Name := \"TheBank\";");
        assert_eq!(outcome, Outcome::Affected(1));
        assert_eq!(db.storage.get("BANKS@obj").unwrap().relation.len(), 1);
    }

    #[test]
    fn nested_new_creates_both_objects() {
        let mut db = d0_schema();
        let outcome = run(
            &mut db,
            "NEW CONTRACTORS WITH SET .Name := \"TheShop\", .Bank := (NEW BANKS WITH SET .Name := \"TheBank\"), .ID := \"CoID001\";",
        );
        assert_eq!(outcome, Outcome::Affected(2));
        let bank = oid_by(&db, "BANKS", "Name", "TheBank");
        let contractor = oid_by(&db, "CONTRACTORS", "ID", "CoID001");
        let ctx = EvalCtx::read_only(&db);
        assert_eq!(
            query::component_value(&ctx, contractor, "Bank").unwrap(),
            Scalar::Ref(bank)
        );
    }

    #[test]
    fn class_keys_stage_until_set() {
        let mut db = d0_schema();
        run(&mut db, "NEW GOODS;");
        run(&mut db, "NEW GOODS;");
        // both rows have NULL Art: no violation yet
        assert_eq!(db.storage.get("GOODS@obj").unwrap().relation.len(), 2);
        // setting both to the same key in one statement violates the class key
        let before = db.clone();
        let err = run_err(&mut db, "GOODS[.Art IS NULL].Art := \"A1\";");
        assert!(matches!(err, Error::Kernel(KernelError::KeyViolation { .. })));
        assert!(db.same_state(&before));
    }

    #[test]
    fn duplicate_class_key_rejected_and_rolled_back() {
        let mut db = d0();
        let before = db.clone();
        let err = run_err(&mut db, "NEW GOODS WITH SET .Art := \"A1\";");
        assert!(matches!(err, Error::Kernel(KernelError::KeyViolation { .. })));
        assert!(db.same_state(&before));
    }

    #[test]
    fn destroy_contractor_nulls_references() {
        let mut db = d0();
        let outcome = run(&mut db, "DESTROY CONTRACTORS[.ID = \"CoID001\"];");
        assert_eq!(outcome, Outcome::Affected(1));
        let docs = db.storage.get("DOCS@obj").unwrap();
        let header = docs.relation.header();
        let docn = header.position("DocN").unwrap();
        let cntr = header.position("Cntr").unwrap();
        for tuple in docs.relation.tuples() {
            match &tuple[docn] {
                Scalar::String(d) if d == "D1" || d == "D3" => assert!(tuple[cntr].is_null()),
                Scalar::String(d) if d == "D2" => assert!(!tuple[cntr].is_null()),
                other => panic!("unexpected doc {other:?}"),
            }
        }
    }

    #[test]
    fn destroy_empty_selection_changes_nothing() {
        let mut db = d0();
        let before = db.clone();
        let outcome = run(&mut db, "DESTROY CONTRACTORS[.ID = \"nobody\"];");
        assert_eq!(outcome, Outcome::Affected(0));
        assert!(db.same_state(&before));
    }

    #[test]
    fn destroying_everything_keeps_the_catalog() {
        let mut db = d0();
        for class in ["DOCS", "GOODS", "CONTRACTORS", "BANKS"] {
            run(&mut db, &format!("DESTROY {class};"));
        }
        for stored in db.storage.iter() {
            assert!(stored.relation.is_empty(), "{} still has rows", stored.name);
        }
        assert_eq!(db.catalog.classes().len(), 4);
    }

    #[test]
    fn bulk_assignment_touches_selected_rows_only() {
        let mut db = d0();
        let outcome = run(&mut db, "DOCS[.DocN = \"D1\"].Comment := \"X\";");
        assert_eq!(outcome, Outcome::Affected(1));
        let ctx = EvalCtx::read_only(&db);
        let d1 = oid_by(&db, "DOCS", "DocN", "D1");
        let d2 = oid_by(&db, "DOCS", "DocN", "D2");
        assert_eq!(query::component_value(&ctx, d1, "Comment").unwrap(), Scalar::str("X"));
        assert!(query::component_value(&ctx, d2, "Comment").unwrap().is_null());
    }

    #[test]
    fn assignment_to_empty_selection_is_identity() {
        let mut db = d0();
        let before = db.clone();
        let outcome = run(&mut db, "DOCS[.DocN = \"D9\"].Comment := \"X\";");
        assert_eq!(outcome, Outcome::Affected(0));
        assert!(db.same_state(&before));
    }

    #[test]
    fn assignment_kind_mismatch() {
        let mut db = d0();
        let err = run_err(&mut db, "DOCS[.DocN = \"D1\"].Comment := 42;");
        assert!(matches!(err, Error::Query(QueryError::KindMismatch(_))));
    }

    #[test]
    fn assigning_calculated_components_fails() {
        let mut db = d0();
        let err = run_err(&mut db, "GOODS[.Art = \"A1\"].Pieces := 5;");
        assert!(matches!(err, Error::Runtime(RuntimeError::AssignToCalculated { .. })));
    }

    #[test]
    fn component_key_violation_rolls_back() {
        let mut db = d0();
        let before = db.clone();
        let err = run_err(&mut db, "INSERT DOCS[.DocN = \"D1\"].Items VALUES (\"A1\", 9);");
        assert!(matches!(err, Error::Kernel(KernelError::KeyViolation { .. })));
        assert!(db.same_state(&before));
    }

    #[test]
    fn reference_clause_violation_rolls_back() {
        let mut db = d0();
        let before = db.clone();
        let err = run_err(&mut db, "INSERT DOCS[.DocN = \"D1\"].Items VALUES (\"ZZ\", 1);");
        assert!(matches!(err, Error::Kernel(KernelError::ForeignKeyViolation { .. })));
        assert!(db.same_state(&before));
    }

    #[test]
    fn delete_with_no_match_is_identity() {
        let mut db = d0();
        let before = db.clone();
        let outcome = run(&mut db, "DELETE DOCS[.DocN = \"D1\"].Items WHERE .Art = \"ZZ\";");
        assert_eq!(outcome, Outcome::Affected(0));
        assert!(db.same_state(&before));
    }

    #[test]
    fn delete_component_rows_by_predicate() {
        let mut db = d0();
        let outcome = run(&mut db, "DELETE DOCS[.DocN = \"D2\"].Items WHERE .Art = \"A2\";");
        assert_eq!(outcome, Outcome::Affected(1));
        assert_eq!(db.storage.get("DOCS@Items").unwrap().relation.len(), 3);
    }

    #[test]
    fn doship_compiles_to_guarded_steps() {
        let db = d0();
        let procedure = compile_method(&db, "DOCS", "DoShip").unwrap();
        // capture of `Date IS NULL`, then both assignments under that guard
        assert_eq!(procedure.steps.len(), 3);
        assert!(matches!(procedure.steps[0].target, StepTarget::Local(_)));
        assert_eq!(procedure.steps[0].value.to_string(), "Date IS NULL");
        assert_eq!(procedure.steps[1].target, StepTarget::Component("Date".into()));
        assert_eq!(procedure.steps[2].target, StepTarget::Component("Comment".into()));
        let StepTarget::Local(slot) = &procedure.steps[0].target else { unreachable!() };
        for step in &procedure.steps[1..] {
            let guard = step.guard.as_ref().expect("assignments are guarded");
            assert_eq!(guard.to_string(), *slot);
        }
    }

    #[test]
    fn exec_ships_all_unshipped_docs_and_is_idempotent() {
        let mut db = d0();
        let outcome = run(
            &mut db,
            "EXEC DOCS[.Date IS NULL].DoShip('2024-01-02T00:00:00Z');",
        );
        assert_eq!(outcome, Outcome::Affected(3));
        let shipped = db.clone();
        let ctx = EvalCtx::read_only(&db);
        for doc in ["D1", "D2", "D3"] {
            let oid = oid_by(&db, "DOCS", "DocN", doc);
            assert_eq!(
                query::component_value(&ctx, oid, "Date").unwrap(),
                Scalar::Datetime(Scalar::parse_datetime("2024-01-02T00:00:00Z").unwrap())
            );
            assert_eq!(
                query::component_value(&ctx, oid, "Comment").unwrap(),
                Scalar::str("Shipped!")
            );
        }
        drop(ctx);
        // guard is now false everywhere: rerunning changes nothing
        run(&mut db, "EXEC DOCS[.Date IS NULL].DoShip('2024-12-31T00:00:00Z');");
        assert!(db.same_state(&shipped));
        // empty selection is a no-op too
        let outcome = run(&mut db, "EXEC DOCS[.DocN = \"D9\"].DoShip('2024-12-31T00:00:00Z');");
        assert_eq!(outcome, Outcome::Affected(0));
        assert!(db.same_state(&shipped));
    }

    #[test]
    fn method_bodies_writing_calculated_components_do_not_compile() {
        let mut db = d0();
        run_source(
            &mut db,
            "CREATE CLASS T EXTEND GOODS ( Touch(x INTEGER) );\n\
             ALTER T REALIZE Touch(x INTEGER) AS BEGIN Pieces := x; END",
        )
        .unwrap();
        let err = compile_method(&db, "T", "Touch").unwrap_err();
        assert!(matches!(err, Error::Runtime(RuntimeError::NonCompilableBody(_))));
    }

    #[test]
    fn empty_method_body_is_identity() {
        let mut db = d0();
        run_source(
            &mut db,
            "CREATE CLASS U ( X INTEGER, Nop() );\n\
             ALTER U REALIZE X AS STORED;\n\
             ALTER U REALIZE Nop() AS BEGIN END\n\
             NEW U WITH SET .X := 1;",
        )
        .unwrap();
        let procedure = compile_method(&db, "U", "Nop").unwrap();
        assert!(procedure.steps.is_empty());
        let before = db.clone();
        run(&mut db, "EXEC U.Nop();");
        assert!(db.same_state(&before));
    }

    #[test]
    fn exec_argument_arity_checked() {
        let mut db = d0();
        let err = run_err(&mut db, "EXEC DOCS.DoShip();");
        assert!(matches!(err, Error::Runtime(RuntimeError::ArityMismatch(_))));
    }

    #[test]
    fn new_requires_realized_components() {
        let mut db = Database::new();
        run(&mut db, "CREATE CLASS LONE ( X INTEGER );");
        let err = run_err(&mut db, "NEW LONE;");
        assert!(matches!(err, Error::Query(QueryError::UnrealizedComponent { .. })));
    }

    #[test]
    fn group_and_single_execution_agree() {
        // exec over a singleton equals assignment-level execution
        let mut grouped = d0();
        run(&mut grouped, "EXEC DOCS[.DocN = \"D1\"].DoShip('2024-01-02T00:00:00Z');");
        let mut single = d0();
        run(&mut single, "DOCS[.DocN = \"D1\"].Date := '2024-01-02T00:00:00Z';");
        run(&mut single, "DOCS[.DocN = \"D1\"].Comment := \"Shipped!\";");
        assert!(grouped.same_state(&single) || {
            // OID counters may differ only if object creation happened; it
            // didn't, so state equality must hold
            false
        });
    }

    #[test]
    fn selection_from_explicit_reference() {
        let db = d0();
        let d1 = oid_by(&db, "DOCS", "DocN", "D1");
        let selection = ObjectSelection::new("DOCS", vec![d1]);
        assert_eq!(selection.oids.len(), 1);
        let pred = parse_expression(".DocN = \"D1\"").unwrap();
        let computed = select_objects(&db, "DOCS", Some(&pred)).unwrap();
        assert_eq!(computed.oids, selection.oids);
    }
}
