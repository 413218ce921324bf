//! Statement execution: dispatch, statement-boundary constraint checking,
//! and atomicity (a failing statement leaves the database untouched).

use crate::database::Database;
use crate::error::Result;
use crate::kernel::Relation;
use crate::parser::ast::Stmt;
use crate::query::{self, EvalCtx};
use crate::runtime;
use crate::schema;

/// What a statement produced.
#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    /// Schema statements.
    Ok,
    /// Queries.
    Rows(Relation),
    /// Mutations: how many objects/rows were touched.
    Affected(u64),
}

/// Executes one statement. Mutating statements run on a working copy,
/// verify all constraints at the statement boundary, and commit only on
/// success; multi-row statements may pass through transiently inconsistent
/// states in between.
pub fn execute(db: &mut Database, statement: &Stmt) -> Result<Outcome> {
    match statement {
        Stmt::Select(select) => {
            let ctx = EvalCtx::read_only(db);
            Ok(Outcome::Rows(query::evaluate_select(&ctx, select)?))
        }
        Stmt::PathQuery(path) => {
            let ctx = EvalCtx::read_only(db);
            let oview = query::resolve_oview(&ctx, path)?;
            Ok(Outcome::Rows(default_projection(&oview.relation)?))
        }
        _ => {
            let mut work = db.clone();
            let outcome = apply(&mut work, statement)?;
            work.full_verify()?;
            *db = work;
            Ok(outcome)
        }
    }
}

fn apply(db: &mut Database, statement: &Stmt) -> Result<Outcome> {
    match statement {
        Stmt::CreateClass(decl) => {
            schema::define_class(db, decl)?;
            Ok(Outcome::Ok)
        }
        Stmt::AlterRealize(stmt) => {
            schema::register_realization(db, stmt)?;
            Ok(Outcome::Ok)
        }
        Stmt::New(stmt) => {
            let before = db.oid_counter();
            runtime::new_object(db, stmt)?;
            Ok(Outcome::Affected(db.oid_counter() - before))
        }
        Stmt::Destroy(stmt) => {
            let selection = runtime::select_objects(db, &stmt.class, stmt.predicate.as_ref())?;
            let destroyed = runtime::destroy_objects(db, &selection)?;
            Ok(Outcome::Affected(destroyed as u64))
        }
        Stmt::Assign(stmt) => {
            // target: Class[pred].Component
            let (selection, component) = assignment_target(db, stmt)?;
            let changed = runtime::assign_component(db, &selection, &component, &stmt.value)?;
            Ok(Outcome::Affected(changed as u64))
        }
        Stmt::Insert(stmt) => {
            let mut rows = Vec::with_capacity(stmt.rows.len());
            for row in &stmt.rows {
                let mut values = Vec::with_capacity(row.len());
                for expr in row {
                    let resolved = runtime::resolve_new_exprs(db, expr)?;
                    let ctx = EvalCtx::read_only(db);
                    values.push(query::expr_scalar(&ctx, &resolved)?);
                }
                rows.push(values);
            }
            let inserted = runtime::insert_component(db, &stmt.target, &rows)?;
            Ok(Outcome::Affected(inserted as u64))
        }
        Stmt::Delete(stmt) => {
            let removed = runtime::delete_component(db, &stmt.target, stmt.where_clause.as_ref())?;
            Ok(Outcome::Affected(removed as u64))
        }
        Stmt::Exec(stmt) => {
            let selection = runtime::select_objects(db, &stmt.class, stmt.predicate.as_ref())?;
            let procedure = runtime::compile_method(db, &stmt.class, &stmt.method)?;
            let mut args = Vec::with_capacity(stmt.args.len());
            for arg in &stmt.args {
                let resolved = runtime::resolve_new_exprs(db, arg)?;
                let ctx = EvalCtx::read_only(db);
                args.push(query::expr_scalar(&ctx, &resolved)?);
            }
            runtime::exec_method(db, &selection, &procedure, &args)?;
            Ok(Outcome::Affected(selection.oids.len() as u64))
        }
        Stmt::Select(_) | Stmt::PathQuery(_) => unreachable!("handled by execute"),
        Stmt::Declare(_) | Stmt::If(_) | Stmt::Return(_) | Stmt::Block(..) => {
            Err(crate::query::QueryError::Unsupported(
                "procedure statements are only valid inside realization bodies".into(),
            )
            .into())
        }
    }
}

/// Splits `Class[pred].Component := ...` into a selection and the component.
fn assignment_target(
    db: &Database,
    stmt: &crate::parser::ast::AssignStmt,
) -> Result<(runtime::ObjectSelection, String)> {
    use crate::parser::ast::PathRoot;
    let path = &stmt.target;
    if path.root != PathRoot::Bare || path.segments.len() != 2 {
        return Err(crate::query::QueryError::Unsupported(format!(
            "assignment target must be Class[selection].Component, got `{}`",
            path.dotted()
        ))
        .into());
    }
    let class_segment = &path.segments[0];
    let component_segment = &path.segments[1];
    if component_segment.predicate.is_some() {
        return Err(crate::query::QueryError::Unsupported(
            "the component of an assignment cannot carry a selection".into(),
        )
        .into());
    }
    let selection =
        runtime::select_objects(db, &class_segment.name, class_segment.predicate.as_ref())?;
    Ok((selection, component_segment.name.clone()))
}

/// Default projection of an O-view: every attribute except the `#` identity
/// pseudo-attributes.
fn default_projection(relation: &Relation) -> Result<Relation> {
    let visible: Vec<String> = relation
        .header()
        .names()
        .filter(|name| !name.ends_with(".#") && *name != "#")
        .map(|name| name.to_string())
        .collect();
    if visible.is_empty() || visible.len() == relation.header().len() {
        return Ok(relation.clone());
    }
    Ok(crate::kernel::r_project(relation, &visible)?)
}

/// Parses and executes a whole script against the database.
pub fn run_source(db: &mut Database, source: &str) -> Result<Vec<Outcome>> {
    let statements = crate::parser::parse_script(source)?;
    let mut outcomes = Vec::with_capacity(statements.len());
    for statement in &statements {
        outcomes.push(execute(db, statement)?);
    }
    Ok(outcomes)
}
