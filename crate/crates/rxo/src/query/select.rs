//! SELECT evaluation over O-views, compiled onto the kernel algebra, and
//! object selection expressions with existential semantics.

use crate::database::Database;
use crate::error::Result;
use crate::kernel::{
    r_aggregate, r_project, r_select, rename_attrs, Aggregate, Header, Oid, Relation, Scalar,
    ScalarExpr,
};
use crate::parser::ast::{Expr, ExprKind, Path, PathRoot, SelectStmt};

use super::eval::{expr_scalar, EvalCtx};
use super::oview::{self, resolve_oview};
use super::QueryError;

/// A compiled object selection: the class and the qualifying OIDs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Selection {
    pub class: String,
    pub oids: Vec<Oid>,
}

/// Selects the objects of `class` whose O-view rows satisfy the predicate
/// existentially: `GOODS[.Turnover.Cntr.Name = n]` keeps a GOODS object iff
/// at least one of its Turnover rows references a contractor named n.
pub fn compile_selection(db: &Database, class: &str, predicate: &Expr) -> Result<Selection> {
    let ctx = EvalCtx::read_only(db);
    compile_selection_in(&ctx, class, Some(predicate))
}

pub fn compile_selection_in(
    ctx: &EvalCtx,
    class: &str,
    predicate: Option<&Expr>,
) -> Result<Selection> {
    let extent = ctx.db.extent(class)?;
    let Some(predicate) = predicate else {
        return Ok(Selection { class: class.to_string(), oids: extent });
    };
    let mut oids = Vec::new();
    for oid in extent {
        if oview::object_matches(ctx, class, oid, predicate)? {
            oids.push(oid);
        }
    }
    Ok(Selection { class: class.to_string(), oids })
}

/// Looks a path up as an attribute of the current row's header. Terminal
/// references map to their `.#` identity attribute.
fn row_attr(header: &Header, path: &Path) -> Option<String> {
    let dotted = format!(".{}", path.segment_names().join("."));
    for candidate in [dotted.clone(), format!("{dotted}.#")] {
        if header.position(&candidate).is_some() {
            return Some(candidate);
        }
    }
    None
}

/// Compiles an expression into a kernel predicate/value over a row header.
/// Row-bound paths become attribute references; everything else is folded
/// into constants via scalar evaluation against the outer context.
pub(crate) fn compile_row_expr(
    ctx: &EvalCtx,
    expr: &Expr,
    header: &Header,
    alias: Option<&str>,
    bare_binds_rows: bool,
) -> Result<ScalarExpr> {
    let compile = |e: &Expr| compile_row_expr(ctx, e, header, alias, bare_binds_rows);
    Ok(match &expr.kind {
        ExprKind::Literal(lit) => ScalarExpr::Const(super::eval::literal_scalar(lit)?),
        ExprKind::Path(path) => {
            let row_bound = match &path.root {
                PathRoot::Alias(a) => {
                    if alias == Some(a.as_str()) {
                        true
                    } else {
                        return Err(QueryError::UnknownName(format!("#{a}")).into());
                    }
                }
                PathRoot::ContextDot => true,
                PathRoot::Bare => false,
            };
            if row_bound {
                if path.has_predicates() {
                    return Err(QueryError::Unsupported(format!(
                        "`{}`: selection expressions are not allowed on row-bound paths",
                        path.dotted()
                    ))
                    .into());
                }
                let attr = row_attr(header, path)
                    .ok_or_else(|| QueryError::UnknownAttribute(path.dotted()))?;
                ScalarExpr::Attr(attr)
            } else {
                // bare: row attribute (when unaliased), else host/var/class
                if bare_binds_rows && alias.is_none() && !path.has_predicates() {
                    if let Some(attr) = row_attr(header, path) {
                        return Ok(ScalarExpr::Attr(attr));
                    }
                }
                ScalarExpr::Const(expr_scalar(ctx, expr)?)
            }
        }
        ExprKind::Cmp(op, a, b) => {
            ScalarExpr::Cmp(*op, Box::new(compile(a)?), Box::new(compile(b)?))
        }
        ExprKind::Arith(op, a, b) => {
            ScalarExpr::Arith(*op, Box::new(compile(a)?), Box::new(compile(b)?))
        }
        ExprKind::Neg(e) => ScalarExpr::Neg(Box::new(compile(e)?)),
        ExprKind::And(a, b) => ScalarExpr::And(Box::new(compile(a)?), Box::new(compile(b)?)),
        ExprKind::Or(a, b) => ScalarExpr::Or(Box::new(compile(a)?), Box::new(compile(b)?)),
        ExprKind::Not(e) => ScalarExpr::Not(Box::new(compile(e)?)),
        ExprKind::IsNull(e) => ScalarExpr::IsNull(Box::new(compile(e)?)),
        ExprKind::IsNotNull(e) => ScalarExpr::IsNotNull(Box::new(compile(e)?)),
        ExprKind::Aggregate(func, _) => {
            return Err(QueryError::AggregateMisuse(format!(
                "{} is only allowed in SELECT items",
                func.name()
            ))
            .into())
        }
        ExprKind::SubSelect(select) => {
            let query_ctx = ctx.for_queries().descend("SELECT")?;
            ScalarExpr::Const(select_scalar(&query_ctx, select)?)
        }
        ExprKind::New(_) => {
            return Err(
                QueryError::Unsupported("NEW is not allowed in this position".into()).into()
            )
        }
        ExprKind::Resolved(value) => ScalarExpr::Const(value.clone()),
    })
}

fn default_output_name(expr: &Expr) -> Option<String> {
    match &expr.kind {
        ExprKind::Path(path) => Some(match &path.root {
            PathRoot::Bare => path.segment_names().join("."),
            _ => format!(".{}", path.segment_names().join(".")),
        }),
        ExprKind::Aggregate(_, path) => {
            Some(path.segments.last().expect("paths are non-empty").name.clone())
        }
        _ => None,
    }
}

/// Evaluates a SELECT: FROM O-view resolution, WHERE restriction, optional
/// GROUP BY + aggregates, projection onto the item list. The result is a set
/// (duplicates collapse).
pub fn evaluate_select(ctx: &EvalCtx, select: &SelectStmt) -> Result<Relation> {
    let from = resolve_oview(ctx, &select.from)?;
    let alias = select.from_alias.as_deref();
    let bare_binds_rows = alias.is_none();

    let filtered = match &select.where_clause {
        Some(where_clause) => {
            let pred =
                compile_row_expr(ctx, where_clause, from.relation.header(), alias, bare_binds_rows)?;
            r_select(&from.relation, &pred)?
        }
        None => from.relation.clone(),
    };

    let has_aggregates =
        select.items.iter().any(|item| matches!(item.expr.kind, ExprKind::Aggregate(..)));
    if has_aggregates || !select.group_by.is_empty() {
        return aggregate_select(ctx, select, &filtered, alias, bare_binds_rows);
    }

    // plain projection: pure paths go through the kernel; computed items
    // evaluate row by row
    let all_paths = select.items.iter().all(|item| matches!(item.expr.kind, ExprKind::Path(_)));
    let mut output_names = Vec::with_capacity(select.items.len());
    for item in &select.items {
        let name = item
            .alias
            .clone()
            .or_else(|| default_output_name(&item.expr))
            .ok_or_else(|| {
                QueryError::Unsupported("computed SELECT items need an AS name".into())
            })?;
        output_names.push(name);
    }

    if all_paths {
        let mut attrs = Vec::with_capacity(select.items.len());
        for item in &select.items {
            let compiled =
                compile_row_expr(ctx, &item.expr, filtered.header(), alias, bare_binds_rows)?;
            match compiled {
                ScalarExpr::Attr(attr) => attrs.push(attr),
                // a path that folded to a constant (host component or var)
                _ => return computed_projection(ctx, select, &filtered, alias, bare_binds_rows, &output_names),
            }
        }
        let projected = r_project(&filtered, &attrs)?;
        let renames: Vec<(String, String)> = attrs
            .iter()
            .zip(&output_names)
            .filter(|(attr, name)| attr != name)
            .map(|(attr, name)| (attr.clone(), name.clone()))
            .collect();
        return Ok(rename_attrs(&projected, &renames)?);
    }
    computed_projection(ctx, select, &filtered, alias, bare_binds_rows, &output_names)
}

/// Row-wise projection for item lists containing computed expressions.
fn computed_projection(
    ctx: &EvalCtx,
    select: &SelectStmt,
    filtered: &Relation,
    alias: Option<&str>,
    bare_binds_rows: bool,
    output_names: &[String],
) -> Result<Relation> {
    let compiled: Vec<ScalarExpr> = select
        .items
        .iter()
        .map(|item| compile_row_expr(ctx, &item.expr, filtered.header(), alias, bare_binds_rows))
        .collect::<Result<_>>()?;
    let kinds: Vec<crate::kernel::Kind> = compiled
        .iter()
        .map(|expr| infer_kind(expr, filtered.header()))
        .collect::<Result<_>>()?;
    let attrs: Vec<crate::kernel::Attribute> = output_names
        .iter()
        .zip(kinds)
        .map(|(name, kind)| crate::kernel::Attribute::new(name.clone(), kind))
        .collect();
    let mut out = Relation::empty(Header::new(attrs)?);
    for tuple in filtered.tuples() {
        let row: Vec<Scalar> = compiled
            .iter()
            .map(|expr| expr.eval(filtered.header(), tuple))
            .collect::<std::result::Result<_, _>>()?;
        out.insert_unchecked(row)?;
    }
    Ok(out)
}

fn infer_kind(expr: &ScalarExpr, header: &Header) -> Result<crate::kernel::Kind> {
    use crate::kernel::Kind;
    Ok(match expr {
        ScalarExpr::Attr(name) => header
            .kind_of(name)
            .cloned()
            .ok_or_else(|| QueryError::UnknownAttribute(name.clone()))?,
        ScalarExpr::Const(value) => value.value_kind().ok_or_else(|| {
            QueryError::KindMismatch("cannot infer the kind of a bare NULL item".into())
        })?,
        ScalarExpr::Cmp(..)
        | ScalarExpr::And(..)
        | ScalarExpr::Or(..)
        | ScalarExpr::Not(_)
        | ScalarExpr::IsNull(_)
        | ScalarExpr::IsNotNull(_) => Kind::Boolean,
        ScalarExpr::Neg(e) => infer_kind(e, header)?,
        ScalarExpr::Arith(_, a, b) => {
            let left = infer_kind(a, header)?;
            let right = infer_kind(b, header)?;
            if left == Kind::Float || right == Kind::Float {
                Kind::Float
            } else {
                left
            }
        }
    })
}

fn aggregate_select(
    ctx: &EvalCtx,
    select: &SelectStmt,
    filtered: &Relation,
    alias: Option<&str>,
    bare_binds_rows: bool,
) -> Result<Relation> {
    // group-by paths must bind to row attributes
    let mut group_attrs = Vec::with_capacity(select.group_by.len());
    for path in &select.group_by {
        let expr = Expr::new(ExprKind::Path(path.clone()), path.pos);
        let compiled = compile_row_expr(ctx, &expr, filtered.header(), alias, bare_binds_rows)?;
        match compiled {
            ScalarExpr::Attr(attr) => group_attrs.push(attr),
            _ => {
                return Err(QueryError::UnknownAttribute(format!(
                    "GROUP BY {} does not name a FROM attribute",
                    path.dotted()
                ))
                .into())
            }
        }
    }

    let mut aggregates = Vec::new();
    let mut item_sources = Vec::with_capacity(select.items.len());
    let mut output_names = Vec::with_capacity(select.items.len());
    for item in &select.items {
        let output = item
            .alias
            .clone()
            .or_else(|| default_output_name(&item.expr))
            .ok_or_else(|| {
                QueryError::Unsupported("computed SELECT items need an AS name".into())
            })?;
        match &item.expr.kind {
            ExprKind::Aggregate(func, arg) => {
                let arg_expr = Expr::new(ExprKind::Path(arg.clone()), arg.pos);
                let compiled =
                    compile_row_expr(ctx, &arg_expr, filtered.header(), alias, bare_binds_rows)?;
                let ScalarExpr::Attr(attr) = compiled else {
                    return Err(QueryError::AggregateMisuse(format!(
                        "{}({}) must aggregate a FROM attribute",
                        func.name(),
                        arg.dotted()
                    ))
                    .into());
                };
                aggregates.push(Aggregate { func: *func, attr, out_name: output.clone() });
                item_sources.push(output.clone());
            }
            ExprKind::Path(path) => {
                let expr = Expr::new(ExprKind::Path(path.clone()), path.pos);
                let compiled =
                    compile_row_expr(ctx, &expr, filtered.header(), alias, bare_binds_rows)?;
                let ScalarExpr::Attr(attr) = compiled else {
                    return Err(QueryError::AggregateMisuse(format!(
                        "`{}` is not a FROM attribute",
                        path.dotted()
                    ))
                    .into());
                };
                if !group_attrs.contains(&attr) {
                    return Err(QueryError::AggregateMisuse(format!(
                        "`{}` must appear in GROUP BY",
                        path.dotted()
                    ))
                    .into());
                }
                item_sources.push(attr);
            }
            _ => {
                return Err(QueryError::AggregateMisuse(
                    "SELECT items must be grouped paths or aggregates when aggregating".into(),
                )
                .into())
            }
        }
        output_names.push(output);
    }

    let aggregated = r_aggregate(filtered, &group_attrs, &aggregates)?;
    let projected = r_project(&aggregated, &item_sources)?;
    let renames: Vec<(String, String)> = item_sources
        .iter()
        .zip(&output_names)
        .filter(|(source, name)| source != name)
        .map(|(source, name)| (source.clone(), name.clone()))
        .collect();
    Ok(rename_attrs(&projected, &renames)?)
}

/// Evaluates a SELECT used as a scalar: one attribute; zero rows yield NULL,
/// more than one row is an error.
pub fn select_scalar(ctx: &EvalCtx, select: &SelectStmt) -> Result<Scalar> {
    let relation = evaluate_select(ctx, select)?;
    if relation.header().len() != 1 {
        return Err(QueryError::ScalarExpected(format!(
            "the query produces {} attributes",
            relation.header().len()
        ))
        .into());
    }
    match relation.len() {
        0 => Ok(Scalar::Null),
        1 => Ok(relation.tuples()[0][0].clone()),
        n => Err(QueryError::ScalarExpected(format!("the query produces {n} rows")).into()),
    }
}
