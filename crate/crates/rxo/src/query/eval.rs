//! Scalar expression evaluation outside of row contexts: initializer values,
//! method arguments, procedure locals, and selection expressions used as
//! values (a class-rooted path yields the selected object's reference).

use std::collections::BTreeMap;

use crate::catalog::{lookup_path, ComponentKind, MemberKind, PathCursor, SegmentBinding};
use crate::database::Database;
use crate::error::Result;
use crate::kernel::{expr as kexpr, Oid, Scalar};
use crate::parser::ast::{Expr, ExprKind, Literal, Path, PathRoot};

use super::{calc, oview, select, QueryError, EVAL_DEPTH_LIMIT};

/// Evaluation context: the database state expressions read, the statement
/// snapshot embedded queries read, the host object (if any), and local
/// variables / parameters.
#[derive(Clone)]
pub struct EvalCtx<'a> {
    pub db: &'a Database,
    /// Statement-start state; embedded SELECTs and cross-object selections
    /// read this, so bulk execution cannot observe mid-statement states of
    /// other objects.
    pub snapshot: &'a Database,
    pub host: Option<(String, Option<Oid>)>,
    pub vars: BTreeMap<String, Scalar>,
    pub depth: u32,
}

impl<'a> EvalCtx<'a> {
    pub fn read_only(db: &'a Database) -> EvalCtx<'a> {
        EvalCtx { db, snapshot: db, host: None, vars: BTreeMap::new(), depth: 0 }
    }

    pub fn with_host(db: &'a Database, class: &str, oid: Option<Oid>) -> EvalCtx<'a> {
        EvalCtx {
            db,
            snapshot: db,
            host: Some((class.to_string(), oid)),
            vars: BTreeMap::new(),
            depth: 0,
        }
    }

    /// Context for embedded queries: all reads go to the snapshot.
    pub fn for_queries(&self) -> EvalCtx<'a> {
        EvalCtx {
            db: self.snapshot,
            snapshot: self.snapshot,
            host: self.host.clone(),
            vars: self.vars.clone(),
            depth: self.depth,
        }
    }

    pub fn descend(&self, at: &str) -> Result<EvalCtx<'a>> {
        if self.depth + 1 > EVAL_DEPTH_LIMIT {
            return Err(QueryError::RecursionLimit(at.to_string()).into());
        }
        let mut next = self.clone();
        next.depth += 1;
        Ok(next)
    }

    pub fn host_class(&self) -> Option<&str> {
        self.host.as_ref().map(|(class, _)| class.as_str())
    }
}

pub fn literal_scalar(literal: &Literal) -> Result<Scalar> {
    Ok(match literal {
        Literal::String(s) => Scalar::String(s.clone()),
        Literal::Integer(i) => Scalar::Integer(*i),
        Literal::Float(f) => Scalar::float(*f)?,
        Literal::Datetime(secs) => Scalar::Datetime(*secs),
        Literal::Boolean(b) => Scalar::Boolean(*b),
        Literal::Null => Scalar::Null,
    })
}

/// Evaluates an expression to a single scalar. Path expressions evaluate to
/// the multiset of values they select and must produce at most one (zero
/// yields NULL).
pub fn expr_scalar(ctx: &EvalCtx, expr: &Expr) -> Result<Scalar> {
    match &expr.kind {
        ExprKind::Literal(literal) => literal_scalar(literal),
        ExprKind::Path(path) => {
            let values = path_values(ctx, path)?;
            scalarify(values, &path.dotted())
        }
        ExprKind::Cmp(op, a, b) => {
            let left = expr_scalar(ctx, a)?;
            let right = expr_scalar(ctx, b)?;
            Ok(kexpr::compare(*op, &left, &right)?)
        }
        ExprKind::Arith(op, a, b) => {
            let left = expr_scalar(ctx, a)?;
            let right = expr_scalar(ctx, b)?;
            Ok(kexpr::arith(*op, &left, &right)?)
        }
        ExprKind::Neg(e) => match expr_scalar(ctx, e)? {
            Scalar::Null => Ok(Scalar::Null),
            Scalar::Integer(i) => Ok(Scalar::Integer(i.checked_neg().ok_or(
                crate::kernel::KernelError::Arithmetic("integer overflow".into()),
            )?)),
            Scalar::Float(f) => Ok(Scalar::float(-f)?),
            other => Err(QueryError::KindMismatch(format!("cannot negate {other:?}")).into()),
        },
        ExprKind::And(a, b) => {
            let left = truthy(expr_scalar(ctx, a)?)?;
            if !left {
                return Ok(Scalar::Boolean(false));
            }
            Ok(Scalar::Boolean(truthy(expr_scalar(ctx, b)?)?))
        }
        ExprKind::Or(a, b) => {
            let left = truthy(expr_scalar(ctx, a)?)?;
            if left {
                return Ok(Scalar::Boolean(true));
            }
            Ok(Scalar::Boolean(truthy(expr_scalar(ctx, b)?)?))
        }
        ExprKind::Not(e) => Ok(Scalar::Boolean(!truthy(expr_scalar(ctx, e)?)?)),
        ExprKind::IsNull(e) => Ok(Scalar::Boolean(expr_scalar(ctx, e)?.is_null())),
        ExprKind::IsNotNull(e) => Ok(Scalar::Boolean(!expr_scalar(ctx, e)?.is_null())),
        ExprKind::Aggregate(func, _) => Err(QueryError::AggregateMisuse(format!(
            "{} is only allowed in SELECT items",
            func.name()
        ))
        .into()),
        ExprKind::SubSelect(select_stmt) => {
            let query_ctx = ctx.for_queries().descend("SELECT")?;
            select::select_scalar(&query_ctx, select_stmt)
        }
        ExprKind::New(_) => {
            Err(QueryError::Unsupported("NEW is not allowed in this position".into()).into())
        }
        ExprKind::Resolved(value) => Ok(value.clone()),
    }
}

fn truthy(value: Scalar) -> Result<bool> {
    match value {
        Scalar::Boolean(b) => Ok(b),
        Scalar::Null => Ok(false),
        other => Err(QueryError::KindMismatch(format!("expected BOOLEAN, got {other:?}")).into()),
    }
}

pub fn scalarify(mut values: Vec<Scalar>, what: &str) -> Result<Scalar> {
    values.dedup();
    match values.len() {
        0 => Ok(Scalar::Null),
        1 => Ok(values.pop().unwrap()),
        n => Err(QueryError::ScalarExpected(format!("`{what}` selects {n} values")).into()),
    }
}

/// Entity set tracked while walking a path.
pub(crate) enum Entities {
    Objects(String, Vec<Oid>),
    Rows(calc::SetRowSet),
    Scalars(Vec<Scalar>),
}

/// Non-scalar path target, for statements that walk to a parent context.
pub enum ParentEntities {
    Objects(Vec<Oid>),
    Rows(calc::SetRowSet),
}

/// Walks a path that must end at objects or set-of rows.
pub fn walk_parent(ctx: &EvalCtx, path: &Path) -> Result<ParentEntities> {
    match walk_path(ctx, path)? {
        Entities::Objects(_, oids) => Ok(ParentEntities::Objects(oids)),
        Entities::Rows(rows) => Ok(ParentEntities::Rows(rows)),
        Entities::Scalars(_) => {
            Err(QueryError::TerminalScalarPath(path.dotted()).into())
        }
    }
}

/// Evaluates a path as a value: the multiset of scalars (or object
/// references) it reaches. Bare single-segment names try locals/parameters
/// first, then host components, then class names.
pub fn path_values(ctx: &EvalCtx, path: &Path) -> Result<Vec<Scalar>> {
    match walk_path(ctx, path)? {
        Entities::Objects(_, oids) => Ok(oids.into_iter().map(Scalar::Ref).collect()),
        Entities::Scalars(values) => Ok(values),
        Entities::Rows(_) => Err(QueryError::ScalarExpected(format!(
            "`{}` names a set-of component, not a value",
            path.dotted()
        ))
        .into()),
    }
}

/// Walks a path from its root to its terminal entity set, applying segment
/// predicates existentially.
pub(crate) fn walk_path<'a>(ctx: &EvalCtx<'a>, path: &Path) -> Result<Entities> {
    if let PathRoot::Alias(alias) = &path.root {
        return Err(
            QueryError::UnknownName(format!("#{alias} is only defined inside a query")).into()
        );
    }
    if path.root == PathRoot::Bare && path.segments.len() == 1 {
        let segment = &path.segments[0];
        if segment.predicate.is_none() {
            if let Some(value) = ctx.vars.get(&segment.name) {
                return Ok(Entities::Scalars(vec![value.clone()]));
            }
        }
    }

    let context_class = match &path.root {
        PathRoot::ContextDot => Some(ctx.host_class().ok_or_else(|| {
            QueryError::UnknownName(format!(
                "{}: no object context for a dotted path",
                path.dotted()
            ))
        })?),
        _ => ctx.host_class(),
    };
    let binding = lookup_path(&ctx.db.catalog, path, context_class)
        .map_err(map_lookup_error)?;

    // cross-object reads (class-rooted selections) see the snapshot
    let first = &binding.segments[0];
    let ctx = if matches!(first.binding, SegmentBinding::ClassRoot { .. }) {
        ctx.for_queries()
    } else {
        ctx.clone()
    };

    let mut entities = match &first.binding {
        SegmentBinding::ClassRoot { class } => {
            Entities::Objects(class.clone(), ctx.db.extent(class)?)
        }
        SegmentBinding::Member { class, member } => {
            let (_, oid) = ctx
                .host
                .clone()
                .ok_or_else(|| QueryError::UnknownName(path.dotted()))?;
            match oid {
                Some(oid) => member_entities(&ctx, class, oid, member)?,
                // class-level context: union over the host class's extent
                None => {
                    let mut merged = empty_entities(&first.after)?;
                    let host_class = class.clone();
                    for oid in ctx.db.extent(&host_class)? {
                        let next = member_entities(&ctx, &host_class, oid, member)?;
                        merged = merge_entities(merged, next);
                    }
                    merged
                }
            }
        }
        SegmentBinding::SetAttr { .. } => unreachable!("first segment cannot be a set attribute"),
    };
    if let Some(pred) = &path.segments[0].predicate {
        entities = filter_entities(&ctx, entities, pred)?;
    }

    for (resolved, segment) in binding.segments[1..].iter().zip(&path.segments[1..]) {
        entities = match entities {
            Entities::Objects(class, oids) => {
                let SegmentBinding::Member { member, .. } = &resolved.binding else {
                    unreachable!("object segments resolve to members")
                };
                let mut merged = empty_entities(&resolved.after)?;
                for oid in oids {
                    let next = member_entities(&ctx, &class, oid, member)?;
                    merged = merge_entities(merged, next);
                }
                merged
            }
            Entities::Rows(rows) => {
                let SegmentBinding::SetAttr { attr } = &resolved.binding else {
                    unreachable!("row segments resolve to set attributes")
                };
                rows_step(&ctx, &rows, attr, &resolved.after)?
            }
            Entities::Scalars(_) => {
                return Err(crate::catalog::CatalogError::NotTraversable(
                    segment.name.clone(),
                )
                .into())
            }
        };
        if let Some(pred) = &segment.predicate {
            entities = filter_entities(&ctx, entities, pred)?;
        }
    }
    Ok(entities)
}

fn map_lookup_error(err: crate::catalog::CatalogError) -> crate::error::Error {
    match err {
        crate::catalog::CatalogError::UnknownName(name) => QueryError::UnknownName(name).into(),
        other => other.into(),
    }
}

fn empty_entities(cursor: &PathCursor) -> Result<Entities> {
    Ok(match cursor {
        PathCursor::Objects(class) => Entities::Objects(class.clone(), Vec::new()),
        PathCursor::Scalar(_) => Entities::Scalars(Vec::new()),
        PathCursor::SetRows { class, member_path, shape } => Entities::Rows(
            calc::SetRowSet::empty(class.clone(), member_path.clone(), shape.clone()),
        ),
        PathCursor::Method { method, .. } => {
            return Err(QueryError::Unsupported(format!(
                "method `{method}` cannot be read as a value"
            ))
            .into())
        }
    })
}

fn merge_entities(merged: Entities, next: Entities) -> Entities {
    match (merged, next) {
        (Entities::Objects(class, mut a), Entities::Objects(_, b)) => {
            for oid in b {
                if !a.contains(&oid) {
                    a.push(oid);
                }
            }
            Entities::Objects(class, a)
        }
        (Entities::Rows(mut a), Entities::Rows(b)) => {
            a.rows.extend(b.rows);
            Entities::Rows(a)
        }
        (Entities::Scalars(mut a), Entities::Scalars(b)) => {
            a.extend(b);
            Entities::Scalars(a)
        }
        _ => unreachable!("member entity kinds are uniform"),
    }
}

/// Entity set produced by reading `member` of one object.
fn member_entities(ctx: &EvalCtx, class: &str, oid: Oid, member: &str) -> Result<Entities> {
    let resolved = ctx.db.catalog.member(class, member)?;
    match resolved.kind {
        MemberKind::Component(ComponentKind::Scalar(_)) => {
            let value = calc::component_value(ctx, oid, member)?;
            Ok(Entities::Scalars(vec![value]))
        }
        MemberKind::Component(ComponentKind::Reference(target)) => {
            let value = calc::component_value(ctx, oid, member)?;
            let oids = match value.as_oid() {
                Some(target_oid) => vec![target_oid],
                None => Vec::new(),
            };
            Ok(Entities::Objects(target, oids))
        }
        MemberKind::Component(ComponentKind::SetOf(_)) => {
            let rows = calc::component_rows(ctx, oid, member)?;
            Ok(Entities::Rows(rows))
        }
        MemberKind::Method { .. } => Err(QueryError::Unsupported(format!(
            "method `{member}` cannot be read as a value"
        ))
        .into()),
    }
}

/// Steps from set-of rows to the next segment's entities.
fn rows_step(
    ctx: &EvalCtx,
    rows: &calc::SetRowSet,
    attr: &str,
    after: &PathCursor,
) -> Result<Entities> {
    match after {
        PathCursor::Scalar(_) => Ok(Entities::Scalars(rows.attr_values(attr)?)),
        PathCursor::Objects(target) => {
            let mut oids = Vec::new();
            for value in rows.attr_values(attr)? {
                if let Some(oid) = value.as_oid() {
                    if !oids.contains(&oid) {
                        oids.push(oid);
                    }
                }
            }
            Ok(Entities::Objects(target.clone(), oids))
        }
        PathCursor::SetRows { class, member_path, shape } => {
            Ok(Entities::Rows(rows.nested_rows(ctx, attr, class, member_path, shape)?))
        }
        PathCursor::Method { method, .. } => Err(QueryError::Unsupported(format!(
            "method `{method}` cannot be read as a value"
        ))
        .into()),
    }
}

/// Keeps the entities whose expanded rows satisfy the predicate
/// (existential semantics over set-valued post-paths).
fn filter_entities(ctx: &EvalCtx, entities: Entities, pred: &Expr) -> Result<Entities> {
    match entities {
        Entities::Objects(class, oids) => {
            let mut kept = Vec::new();
            for oid in oids {
                if oview::object_matches(ctx, &class, oid, pred)? {
                    kept.push(oid);
                }
            }
            Ok(Entities::Objects(class, kept))
        }
        Entities::Rows(rows) => Ok(Entities::Rows(rows.filter(ctx, pred)?)),
        Entities::Scalars(_) => Err(QueryError::Unsupported(
            "selection expressions do not apply to scalar values".into(),
        )
        .into()),
    }
}
