//! Component access with dynamic dispatch on the object's exact class:
//! stored members read their relation, calculated members evaluate their
//! declarative query or procedure per object.

use std::collections::BTreeMap;

use crate::catalog::{ComponentKind, MemberKind, Realization, SetOfShape};
use crate::database::Database;
use crate::error::Result;
use crate::kernel::{Attribute, Header, Kind, Oid, Relation, Scalar, Tuple};
use crate::parser::ast::{Path, PathRoot, Stmt};
use crate::schema::{storage_for, StorageBinding, OID_ATTR};

use super::eval::{expr_scalar, EvalCtx};
use super::{select, QueryError};

/// One row of a set-of component: whose object it belongs to, the link
/// values addressing it in storage, and its attribute values in declared
/// order (nested set-of attributes excluded).
#[derive(Debug, Clone)]
pub struct SetRow {
    pub owner: Oid,
    /// Exact class of the owner, locating per-class child relations.
    pub exact: String,
    pub link: Vec<Scalar>,
    pub values: Vec<Scalar>,
}

/// Rows of one set-of component (for one object or merged across many).
#[derive(Debug, Clone)]
pub struct SetRowSet {
    /// Class whose interface declares the component.
    pub class: String,
    /// Member path such as `Items` or `Items.Sub`.
    pub member_path: String,
    pub shape: SetOfShape,
    pub rows: Vec<SetRow>,
}

impl SetRowSet {
    pub fn empty(class: String, member_path: String, shape: SetOfShape) -> SetRowSet {
        SetRowSet { class, member_path, shape, rows: Vec::new() }
    }

    /// Declared non-nested attribute names, in order (the `values` layout).
    pub fn value_attrs(&self) -> Vec<(&str, Kind)> {
        self.shape
            .attrs
            .iter()
            .filter_map(|(name, kind)| kind.attribute_kind().map(|k| (name.as_str(), k)))
            .collect()
    }

    pub fn attr_values(&self, attr: &str) -> Result<Vec<Scalar>> {
        let position = self
            .value_attrs()
            .iter()
            .position(|(name, _)| *name == attr)
            .ok_or_else(|| QueryError::UnknownAttribute(attr.to_string()))?;
        Ok(self.rows.iter().map(|row| row.values[position].clone()).collect())
    }

    /// Rows of a nested set-of attribute, linked through this set's keys.
    pub fn nested_rows(
        &self,
        ctx: &EvalCtx,
        _attr: &str,
        class: &str,
        member_path: &str,
        shape: &SetOfShape,
    ) -> Result<SetRowSet> {
        let mut out = SetRowSet::empty(class.to_string(), member_path.to_string(), shape.clone());
        let key_positions: Vec<usize> = {
            let value_attrs = self.value_attrs();
            self.shape
                .key
                .iter()
                .map(|key_attr| {
                    value_attrs
                        .iter()
                        .position(|(name, _)| name == key_attr)
                        .ok_or_else(|| QueryError::UnknownAttribute(key_attr.clone()).into())
                })
                .collect::<Result<_>>()?
        };
        for row in &self.rows {
            let mut link = row.link.clone();
            for &pos in &key_positions {
                link.push(row.values[pos].clone());
            }
            let nested = stored_set_rows(
                ctx.db,
                &row.exact,
                member_path,
                shape,
                row.owner,
                Some(&link),
            )?;
            out.rows.extend(nested.rows);
        }
        Ok(out)
    }

    /// Rows of a nested set-of attribute across every row of this set.
    pub fn nested_member_rows(&self, ctx: &EvalCtx, attr: &str) -> Result<SetRowSet> {
        let Some(ComponentKind::SetOf(inner)) = self.shape.attr(attr) else {
            return Err(QueryError::UnknownAttribute(attr.to_string()).into());
        };
        let nested_path = format!("{}.{}", self.member_path, attr);
        self.nested_rows(ctx, attr, &self.class.clone(), &nested_path, &inner.clone())
    }

    /// Existential filter: keeps rows whose expansion satisfies `pred`.
    pub fn filter(&self, ctx: &EvalCtx, pred: &crate::parser::ast::Expr) -> Result<SetRowSet> {
        let mut kept = self.clone();
        kept.rows.clear();
        for row in &self.rows {
            if super::oview::set_row_matches(ctx, self, row, pred)? {
                kept.rows.push(row.clone());
            }
        }
        Ok(kept)
    }
}

/// The scalar (or reference) value of a component of one object, using the
/// exact class's effective realization.
pub fn component_value(ctx: &EvalCtx, oid: Oid, member: &str) -> Result<Scalar> {
    let exact = exact_class(ctx.db, oid)?;
    let resolved = ctx.db.catalog.member(&exact, member)?;
    let declared_kind = match &resolved.kind {
        MemberKind::Component(kind) => kind.attribute_kind().ok_or_else(|| {
            QueryError::KindMismatch(format!("`{member}` is a set-of component, not a value"))
        })?,
        MemberKind::Method { .. } => {
            return Err(QueryError::KindMismatch(format!("`{member}` is a method")).into())
        }
    };
    let Some((provider, realization)) = ctx.db.catalog.effective_realization(&exact, member)
    else {
        return Err(QueryError::UnrealizedComponent { class: exact, member: member.into() }.into());
    };
    let realization = realization.clone();
    let value = match realization {
        Realization::Stored => {
            let _ = provider;
            read_stored_value(ctx.db, &exact, oid, member)?
        }
        Realization::Query(select_stmt) => {
            let mut query_ctx = ctx.for_queries().descend(member)?;
            query_ctx.host = Some((exact.clone(), Some(oid)));
            query_ctx.vars.clear();
            select::select_scalar(&query_ctx, &select_stmt)?
        }
        Realization::Procedure { params, body } => {
            if !params.is_empty() {
                return Err(QueryError::KindMismatch(format!(
                    "component `{member}` cannot take parameters"
                ))
                .into());
            }
            let mut proc_ctx = ctx.for_queries().descend(member)?;
            proc_ctx.host = Some((exact.clone(), Some(oid)));
            proc_ctx.vars.clear();
            match run_procedure(&proc_ctx, &body)? {
                Some(value) => value,
                None => {
                    return Err(QueryError::ProcedureNoReturn {
                        class: exact,
                        member: member.into(),
                    }
                    .into())
                }
            }
        }
    };
    if !value.conforms_to(&declared_kind) {
        return Err(QueryError::KindMismatch(format!(
            "`{member}` evaluated to a value of the wrong kind (expected {declared_kind})"
        ))
        .into());
    }
    Ok(value)
}

fn read_stored_value(db: &Database, exact: &str, oid: Oid, member: &str) -> Result<Scalar> {
    match storage_for(db, exact, member)? {
        StorageBinding::Column { relation, attr } => {
            let stored = db.storage.get(&relation)?;
            let header = stored.relation.header();
            let oid_idx = header
                .position(OID_ATTR)
                .ok_or_else(|| QueryError::UnknownAttribute(OID_ATTR.into()))?;
            let attr_idx = header
                .position(&attr)
                .ok_or_else(|| QueryError::UnknownAttribute(attr.clone()))?;
            for tuple in stored.relation.tuples() {
                if tuple[oid_idx].as_oid() == Some(oid) {
                    return Ok(tuple[attr_idx].clone());
                }
            }
            Err(QueryError::UnknownName(format!("object {oid} has no row in `{relation}`")).into())
        }
        StorageBinding::Child(_) => Err(QueryError::KindMismatch(format!(
            "`{member}` is a set-of component, not a value"
        ))
        .into()),
    }
}

/// The rows of a set-of component of one object.
pub fn component_rows(ctx: &EvalCtx, oid: Oid, member: &str) -> Result<SetRowSet> {
    let exact = exact_class(ctx.db, oid)?;
    let resolved = ctx.db.catalog.member(&exact, member)?;
    let MemberKind::Component(ComponentKind::SetOf(shape)) = resolved.kind else {
        return Err(
            QueryError::KindMismatch(format!("`{member}` is not a set-of component")).into()
        );
    };
    let Some((_, realization)) = ctx.db.catalog.effective_realization(&exact, member) else {
        return Err(QueryError::UnrealizedComponent { class: exact, member: member.into() }.into());
    };
    match realization.clone() {
        Realization::Stored => stored_set_rows(ctx.db, &exact, member, &shape, oid, None),
        Realization::Query(select_stmt) => {
            if shape.attrs.iter().any(|(_, k)| matches!(k, ComponentKind::SetOf(_))) {
                return Err(QueryError::Unsupported(format!(
                    "`{member}`: a query realization cannot produce nested set-of rows"
                ))
                .into());
            }
            let mut query_ctx = ctx.for_queries().descend(member)?;
            query_ctx.host = Some((exact.clone(), Some(oid)));
            query_ctx.vars.clear();
            let relation = select::evaluate_select(&query_ctx, &select_stmt)?;
            let tuples = conform_to_shape(&relation, &shape, member)?;
            let mut out = SetRowSet::empty(exact.clone(), member.to_string(), shape);
            out.rows.extend(tuples.into_iter().map(|values| SetRow {
                owner: oid,
                exact: exact.clone(),
                link: vec![Scalar::Ref(oid)],
                values,
            }));
            Ok(out)
        }
        Realization::Procedure { .. } => Err(QueryError::KindMismatch(format!(
            "`{member}` is a set-of component; realize it as STORED or as a query"
        ))
        .into()),
    }
}

/// Reads the stored rows of a (possibly nested) set-of component. With a
/// link, rows are matched on it; without one, on the owner's OID.
fn stored_set_rows(
    db: &Database,
    exact: &str,
    member_path: &str,
    shape: &SetOfShape,
    owner: Oid,
    link: Option<&[Scalar]>,
) -> Result<SetRowSet> {
    let class_storage = db.catalog.storage(exact).ok_or_else(|| {
        crate::catalog::CatalogError::NotStored { class: exact.into(), member: member_path.into() }
    })?;
    let child = class_storage.children.get(member_path).ok_or_else(|| {
        crate::catalog::CatalogError::NotStored { class: exact.into(), member: member_path.into() }
    })?;
    let stored = db.storage.get(&child.relation)?;
    let header = stored.relation.header();
    let link_positions: Vec<usize> = child
        .link_attrs
        .iter()
        .map(|name| {
            header
                .position(name)
                .ok_or_else(|| QueryError::UnknownAttribute(name.clone()).into())
        })
        .collect::<Result<_>>()?;
    let attr_positions: Vec<usize> = child
        .attrs
        .iter()
        .map(|name| {
            header
                .position(name)
                .ok_or_else(|| QueryError::UnknownAttribute(name.clone()).into())
        })
        .collect::<Result<_>>()?;
    let wanted: Vec<Scalar> = match link {
        Some(values) => values.to_vec(),
        None => vec![Scalar::Ref(owner)],
    };
    let mut out = SetRowSet::empty(exact.to_string(), member_path.to_string(), shape.clone());
    for tuple in stored.relation.tuples() {
        let row_link: Vec<Scalar> = link_positions.iter().map(|&i| tuple[i].clone()).collect();
        if row_link != wanted {
            continue;
        }
        out.rows.push(SetRow {
            owner,
            exact: exact.to_string(),
            link: row_link,
            values: attr_positions.iter().map(|&i| tuple[i].clone()).collect(),
        });
    }
    Ok(out)
}

/// Maps a realization query's output onto the declared component shape:
/// output attribute names (leading dot ignored) must cover the declared
/// attributes exactly, with conforming kinds.
fn conform_to_shape(relation: &Relation, shape: &SetOfShape, member: &str) -> Result<Vec<Tuple>> {
    let declared: Vec<(&str, Kind)> = shape
        .attrs
        .iter()
        .filter_map(|(name, kind)| kind.attribute_kind().map(|k| (name.as_str(), k)))
        .collect();
    let header = relation.header();
    let mut positions = Vec::with_capacity(declared.len());
    for (name, kind) in &declared {
        let idx = header
            .attributes()
            .iter()
            .position(|a| a.name == *name || a.name.trim_start_matches('.') == *name)
            .ok_or_else(|| {
                QueryError::KindMismatch(format!(
                    "realization of `{member}` does not produce attribute `{name}`"
                ))
            })?;
        let actual = &header.attributes()[idx].kind;
        let compatible = match (actual, kind) {
            (Kind::Ref(_), Kind::Ref(_)) => true,
            (a, b) => a == b,
        };
        if !compatible {
            return Err(QueryError::KindMismatch(format!(
                "realization of `{member}` produces `{name}` as {actual}, expected {kind}"
            ))
            .into());
        }
        positions.push(idx);
    }
    if header.len() != declared.len() {
        return Err(QueryError::KindMismatch(format!(
            "realization of `{member}` produces {} attributes, expected {}",
            header.len(),
            declared.len()
        ))
        .into());
    }
    Ok(relation
        .tuples()
        .iter()
        .map(|tuple| positions.iter().map(|&i| tuple[i].clone()).collect())
        .collect())
}

/// Public accessor for calculated members (query or procedure realization).
/// Stored members are read through their storage path instead.
#[derive(Debug, Clone)]
pub enum CalculatedValue {
    Scalar(Scalar),
    Rows(Relation),
}

pub fn eval_calculated(
    db: &Database,
    class: &str,
    oid: Oid,
    member: &str,
) -> Result<CalculatedValue> {
    let exact = exact_class(db, oid)?;
    if !db.catalog.inherits_from(&exact, class) {
        return Err(QueryError::UnknownName(format!("object {oid} is not a `{class}`")).into());
    }
    let resolved = db.catalog.member(&exact, member)?;
    match db.catalog.effective_realization(&exact, member) {
        Some((_, Realization::Stored)) | None => {
            return Err(QueryError::UnrealizedComponent {
                class: exact,
                member: member.to_string(),
            }
            .into())
        }
        Some(_) => {}
    }
    let ctx = EvalCtx::read_only(db);
    match resolved.kind {
        MemberKind::Component(ComponentKind::SetOf(_)) => {
            let rows = component_rows(&ctx, oid, member)?;
            let attrs: Vec<Attribute> = rows
                .value_attrs()
                .iter()
                .map(|(name, kind)| Attribute::new(*name, kind.clone()))
                .collect();
            let header = Header::new(attrs)?;
            let relation =
                Relation::new(header, None, rows.rows.into_iter().map(|r| r.values).collect())?;
            Ok(CalculatedValue::Rows(relation))
        }
        MemberKind::Component(_) => {
            Ok(CalculatedValue::Scalar(component_value(&ctx, oid, member)?))
        }
        MemberKind::Method { .. } => {
            Err(QueryError::KindMismatch(format!("`{member}` is a method")).into())
        }
    }
}

pub(crate) fn exact_class(db: &Database, oid: Oid) -> Result<String> {
    db.exact_class_of(oid)
        .ok_or_else(|| QueryError::UnknownName(format!("no object with oid {oid}")).into())
}

// ---------------------------------------------------------------------------
// Procedure interpretation (component realizations: read-only, local
// assignments only, RETURN produces the value).
// ---------------------------------------------------------------------------

pub(crate) fn run_procedure(ctx: &EvalCtx, body: &[Stmt]) -> Result<Option<Scalar>> {
    let mut vars = ctx.vars.clone();
    let mut kinds: BTreeMap<String, Kind> = BTreeMap::new();
    run_block(ctx, body, &mut vars, &mut kinds)
}

fn run_block(
    ctx: &EvalCtx,
    statements: &[Stmt],
    vars: &mut BTreeMap<String, Scalar>,
    kinds: &mut BTreeMap<String, Kind>,
) -> Result<Option<Scalar>> {
    for statement in statements {
        if let Some(value) = run_statement(ctx, statement, vars, kinds)? {
            return Ok(Some(value));
        }
    }
    Ok(None)
}

fn run_statement(
    ctx: &EvalCtx,
    statement: &Stmt,
    vars: &mut BTreeMap<String, Scalar>,
    kinds: &mut BTreeMap<String, Kind>,
) -> Result<Option<Scalar>> {
    match statement {
        Stmt::Declare(decl) => {
            let kind = crate::catalog::scalar_kind_of(&decl.type_name)?;
            kinds.insert(decl.name.clone(), kind);
            vars.insert(decl.name.clone(), Scalar::Null);
            Ok(None)
        }
        Stmt::Assign(assign) => {
            let name = local_target(&assign.target).ok_or_else(|| {
                QueryError::Unsupported(format!(
                    "component procedures may only assign to declared locals (`{}`)",
                    assign.target.dotted()
                ))
            })?;
            if !vars.contains_key(name) {
                return Err(QueryError::UnknownName(format!(
                    "`{name}` is not a declared local"
                ))
                .into());
            }
            let mut eval_ctx = ctx.clone();
            eval_ctx.vars = vars.clone();
            let value = expr_scalar(&eval_ctx, &assign.value)?;
            if let Some(kind) = kinds.get(name) {
                if !value.conforms_to(kind) {
                    return Err(QueryError::KindMismatch(format!(
                        "cannot assign that value to `{name}` ({kind})"
                    ))
                    .into());
                }
            }
            vars.insert(name.to_string(), value);
            Ok(None)
        }
        Stmt::If(if_stmt) => {
            let mut eval_ctx = ctx.clone();
            eval_ctx.vars = vars.clone();
            let condition = expr_scalar(&eval_ctx, &if_stmt.condition)?;
            let taken = matches!(condition, Scalar::Boolean(true));
            if taken {
                run_statement(ctx, &if_stmt.then_branch, vars, kinds)
            } else if let Some(else_branch) = &if_stmt.else_branch {
                run_statement(ctx, else_branch, vars, kinds)
            } else {
                Ok(None)
            }
        }
        Stmt::Return(ret) => {
            let mut eval_ctx = ctx.clone();
            eval_ctx.vars = vars.clone();
            Ok(Some(expr_scalar(&eval_ctx, &ret.value)?))
        }
        Stmt::Block(statements, _) => run_block(ctx, statements, vars, kinds),
        other => Err(QueryError::Unsupported(format!(
            "statement not allowed in a component procedure: {other}"
        ))
        .into()),
    }
}

fn local_target(path: &Path) -> Option<&str> {
    if path.root == PathRoot::Bare
        && path.segments.len() == 1
        && path.segments[0].predicate.is_none()
    {
        Some(&path.segments[0].name)
    } else {
        None
    }
}
