//! O-views: any non-terminal path names a relation whose attributes are the
//! path's scalar post-paths. Attribute names keep the leading dot exactly as
//! printed (`.Name`, `.Bank.Name`); every expansion through a reference also
//! exposes the reference itself as `.<member>.#`, and each O-view carries
//! its objects' identity as the pseudo-attribute `.#`.
//!
//! Header construction and row expansion walk the name hierarchy with the
//! same recursion so columns always line up.

use crate::catalog::{Catalog, ComponentKind, MemberKind, PathCursor, ResolvedMember, SetOfShape};
use crate::error::Result;
use crate::kernel::{Attribute, Header, Kind, Oid, Relation, Scalar, Tuple};
use crate::parser::ast::{Expr, Path};

use super::calc::{self, SetRow, SetRowSet};
use super::eval::{walk_path, Entities, EvalCtx};
use super::{select, QueryError, REF_EXPANSION_DEPTH};

/// A resolved O-view: the path and its materialized relation.
#[derive(Debug, Clone)]
pub struct OView {
    pub path: Path,
    pub relation: Relation,
}

/// Data members (components) of a class, in flattened-interface order.
fn data_members(catalog: &Catalog, class: &str) -> Result<Vec<(String, ComponentKind)>> {
    let members: Vec<ResolvedMember> = catalog.resolve_interface(class)?;
    Ok(members
        .into_iter()
        .filter_map(|m| match m.kind {
            MemberKind::Component(kind) => Some((m.name, kind)),
            MemberKind::Method { .. } => None,
        })
        .collect())
}

/// Header of the O-view whose rows are objects of `class`.
fn object_header(catalog: &Catalog, class: &str, prefix: &str, depth: u32) -> Result<Vec<Attribute>> {
    if depth > REF_EXPANSION_DEPTH {
        return Err(QueryError::CycleDepthExceeded(prefix.to_string()).into());
    }
    let mut attrs = vec![Attribute::new(format!("{prefix}.#"), Kind::Ref(class.to_string()))];
    for (name, kind) in data_members(catalog, class)? {
        let child_prefix = format!("{prefix}.{name}");
        attrs.extend(component_header(catalog, &kind, &child_prefix, depth)?);
    }
    Ok(attrs)
}

fn component_header(
    catalog: &Catalog,
    kind: &ComponentKind,
    prefix: &str,
    depth: u32,
) -> Result<Vec<Attribute>> {
    match kind {
        ComponentKind::Scalar(scalar_kind) => {
            Ok(vec![Attribute::new(prefix, scalar_kind.clone())])
        }
        ComponentKind::Reference(target) => object_header(catalog, target, prefix, depth + 1),
        ComponentKind::SetOf(shape) => shape_header(catalog, shape, prefix, depth),
    }
}

fn shape_header(
    catalog: &Catalog,
    shape: &SetOfShape,
    prefix: &str,
    depth: u32,
) -> Result<Vec<Attribute>> {
    let mut attrs = Vec::new();
    for (name, kind) in &shape.attrs {
        let child_prefix = format!("{prefix}.{name}");
        attrs.extend(component_header(catalog, kind, &child_prefix, depth)?);
    }
    Ok(attrs)
}

/// The O-view header for a resolved path terminal.
pub fn oview_header(catalog: &Catalog, cursor: &PathCursor) -> Result<Header> {
    let attrs = match cursor {
        PathCursor::Objects(class) => object_header(catalog, class, "", 0)?,
        PathCursor::SetRows { shape, .. } => shape_header(catalog, shape, "", 0)?,
        PathCursor::Scalar(_) => {
            return Err(QueryError::TerminalScalarPath("<path>".to_string()).into())
        }
        PathCursor::Method { method, .. } => {
            return Err(QueryError::TerminalScalarPath(format!("{method} (a method)")).into())
        }
    };
    Ok(Header::new(attrs)?)
}

// ---------------------------------------------------------------------------
// Row expansion, mirroring the header recursion. Each block is the list of
// row fragments for one column group; empty set-of blocks become one
// all-NULL fragment so objects never vanish from their own O-view.
// ---------------------------------------------------------------------------

fn null_fragment(width: usize) -> Vec<Tuple> {
    vec![vec![Scalar::Null; width]]
}

fn cross(blocks: Vec<Vec<Tuple>>) -> Vec<Tuple> {
    let mut rows: Vec<Tuple> = vec![Vec::new()];
    for block in blocks {
        let mut next = Vec::with_capacity(rows.len() * block.len());
        for row in &rows {
            for fragment in &block {
                let mut combined = row.clone();
                combined.extend(fragment.iter().cloned());
                next.push(combined);
            }
        }
        rows = next;
    }
    rows
}

/// All expansion rows of one object under the declared class's header.
fn object_expansion(ctx: &EvalCtx, class: &str, oid: Oid, depth: u32) -> Result<Vec<Tuple>> {
    let mut blocks: Vec<Vec<Tuple>> = vec![vec![vec![Scalar::Ref(oid)]]];
    for (name, kind) in data_members(&ctx.db.catalog, class)? {
        blocks.push(component_expansion(ctx, &kind, oid, &name, depth)?);
    }
    Ok(cross(blocks))
}

fn component_expansion(
    ctx: &EvalCtx,
    kind: &ComponentKind,
    oid: Oid,
    member: &str,
    depth: u32,
) -> Result<Vec<Tuple>> {
    match kind {
        ComponentKind::Scalar(_) => {
            let value = calc::component_value(ctx, oid, member)?;
            Ok(vec![vec![value]])
        }
        ComponentKind::Reference(target) => {
            let value = calc::component_value(ctx, oid, member)?;
            reference_expansion(ctx, target, &value, depth + 1)
        }
        ComponentKind::SetOf(_) => {
            let rows = calc::component_rows(ctx, oid, member)?;
            set_rows_expansion(ctx, &rows, depth)
        }
    }
}

/// Expansion of a reference value: the target object's own expansion, or one
/// all-NULL fragment when the reference is NULL.
fn reference_expansion(
    ctx: &EvalCtx,
    target: &str,
    value: &Scalar,
    depth: u32,
) -> Result<Vec<Tuple>> {
    let width = object_header(&ctx.db.catalog, target, "", depth)?.len();
    match value.as_oid() {
        Some(oid) => object_expansion(ctx, target, oid, depth),
        None => Ok(null_fragment(width)),
    }
}

/// Expansion fragments of a whole set-of row set (one fragment per expanded
/// row; empty set -> one NULL fragment).
fn set_rows_expansion(ctx: &EvalCtx, rows: &SetRowSet, depth: u32) -> Result<Vec<Tuple>> {
    let width = shape_header(&ctx.db.catalog, &rows.shape, "", depth)?.len();
    if rows.rows.is_empty() {
        return Ok(null_fragment(width));
    }
    let mut fragments = Vec::new();
    for row in &rows.rows {
        fragments.extend(set_row_expansion(ctx, rows, row, depth)?);
    }
    Ok(fragments)
}

/// Expansion of one set-of row: scalar attrs verbatim, reference attrs
/// through their targets, nested set-of attrs through their child rows.
fn set_row_expansion(
    ctx: &EvalCtx,
    rows: &SetRowSet,
    row: &SetRow,
    depth: u32,
) -> Result<Vec<Tuple>> {
    let value_attrs = rows.value_attrs();
    let mut blocks: Vec<Vec<Tuple>> = Vec::new();
    let mut value_idx = 0usize;
    for (name, kind) in &rows.shape.attrs {
        match kind {
            ComponentKind::Scalar(_) => {
                blocks.push(vec![vec![row.values[value_idx].clone()]]);
                value_idx += 1;
            }
            ComponentKind::Reference(target) => {
                let value = &row.values[value_idx];
                blocks.push(reference_expansion(ctx, target, value, depth + 1)?);
                value_idx += 1;
            }
            ComponentKind::SetOf(inner) => {
                let nested_path = format!("{}.{}", rows.member_path, name);
                let singleton = SetRowSet {
                    class: rows.class.clone(),
                    member_path: rows.member_path.clone(),
                    shape: rows.shape.clone(),
                    rows: vec![row.clone()],
                };
                let nested =
                    singleton.nested_rows(ctx, name, &rows.class, &nested_path, inner)?;
                blocks.push(set_rows_expansion(ctx, &nested, depth)?);
            }
        }
    }
    debug_assert_eq!(value_idx, value_attrs.len());
    Ok(cross(blocks))
}

// ---------------------------------------------------------------------------
// Materialization and existential predicates.
// ---------------------------------------------------------------------------

/// Materializes the O-view of an object set.
pub(crate) fn objects_relation(ctx: &EvalCtx, class: &str, oids: &[Oid]) -> Result<Relation> {
    let header = oview_header(&ctx.db.catalog, &PathCursor::Objects(class.to_string()))?;
    let mut relation = Relation::empty(header);
    for &oid in oids {
        for row in object_expansion(ctx, class, oid, 0)? {
            relation.insert_unchecked(row)?;
        }
    }
    Ok(relation)
}

/// Materializes the O-view of a set-of row set.
pub(crate) fn rows_relation(ctx: &EvalCtx, rows: &SetRowSet) -> Result<Relation> {
    let header = oview_header(
        &ctx.db.catalog,
        &PathCursor::SetRows {
            class: rows.class.clone(),
            member_path: rows.member_path.clone(),
            shape: rows.shape.clone(),
        },
    )?;
    let mut relation = Relation::empty(header);
    for row in &rows.rows {
        for expanded in set_row_expansion(ctx, rows, row, 0)? {
            relation.insert_unchecked(expanded)?;
        }
    }
    Ok(relation)
}

/// True when at least one expansion row of the object satisfies `pred`.
pub(crate) fn object_matches(ctx: &EvalCtx, class: &str, oid: Oid, pred: &Expr) -> Result<bool> {
    let relation = objects_relation(ctx, class, &[oid])?;
    let compiled = select::compile_row_expr(ctx, pred, relation.header(), None, true)?;
    let hits = crate::kernel::r_select(&relation, &compiled)?;
    Ok(!hits.is_empty())
}

/// True when at least one expansion row of the set-of row satisfies `pred`.
pub(crate) fn set_row_matches(
    ctx: &EvalCtx,
    rows: &SetRowSet,
    row: &SetRow,
    pred: &Expr,
) -> Result<bool> {
    let singleton = SetRowSet {
        class: rows.class.clone(),
        member_path: rows.member_path.clone(),
        shape: rows.shape.clone(),
        rows: vec![row.clone()],
    };
    let relation = rows_relation(ctx, &singleton)?;
    let compiled = select::compile_row_expr(ctx, pred, relation.header(), None, true)?;
    let hits = crate::kernel::r_select(&relation, &compiled)?;
    Ok(!hits.is_empty())
}

/// Resolves a non-terminal path (with selection expressions) into its
/// O-view relation. The context, when present, provides the class (and
/// optionally the object) the first segment may resolve against.
pub fn resolve_oview(ctx: &EvalCtx, path: &Path) -> Result<OView> {
    let entities = walk_path(ctx, path)?;
    let relation = match entities {
        Entities::Objects(class, oids) => objects_relation(ctx, &class, &oids)?,
        Entities::Rows(rows) => rows_relation(ctx, &rows)?,
        Entities::Scalars(_) => {
            return Err(QueryError::TerminalScalarPath(path.dotted()).into())
        }
    };
    Ok(OView { path: path.clone(), relation })
}
