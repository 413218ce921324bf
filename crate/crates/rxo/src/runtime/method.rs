//! Methods compile into set procedures: an ordered list of predicated bulk
//! assignments whose single execution over an object set equals running the
//! source body per object, in any order. Loop-free bodies that write only
//! the object's own stored components (and locals) make this sound; anything
//! else is rejected.

use std::collections::BTreeMap;

use crate::catalog::{ComponentKind, MemberKind, Realization};
use crate::database::Database;
use crate::error::Result;
use crate::kernel::{Kind, Oid, Scalar};
use crate::parser::ast::{Expr, ExprKind, Path, PathRoot, Stmt};
use crate::query::{self, EvalCtx, QueryError};
use crate::schema::{storage_for, StorageBinding, OID_ATTR};

use super::{ObjectSelection, RuntimeError};

#[derive(Debug, Clone, PartialEq)]
pub enum StepTarget {
    Local(String),
    Component(String),
}

/// One bulk mutation: guarded by the conjunction of its enclosing IF
/// conditions, evaluated per object against the state left by earlier steps.
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub guard: Option<Expr>,
    pub target: StepTarget,
    pub value: Expr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SetProcedure {
    pub class: String,
    pub method: String,
    pub params: Vec<(String, Kind)>,
    pub locals: Vec<(String, Kind)>,
    pub steps: Vec<Step>,
}

/// Compiles a method's procedure body into a set procedure. Assignments
/// keep source order. Entering an IF becomes a step that captures the
/// condition into a hidden per-object local (evaluated once, like the
/// sequential body would), and the branch steps are guarded by that capture
/// conjoined with the enclosing guards.
pub fn compile_method(db: &Database, class: &str, method: &str) -> Result<SetProcedure> {
    let member = db.catalog.member(class, method)?;
    let MemberKind::Method { params: declared_params, .. } = &member.kind else {
        return Err(RuntimeError::MethodNotRealized {
            class: class.to_string(),
            method: method.to_string(),
        }
        .into());
    };
    let Some((_, Realization::Procedure { params, body })) =
        db.catalog.effective_realization(class, method)
    else {
        return Err(RuntimeError::MethodNotRealized {
            class: class.to_string(),
            method: method.to_string(),
        }
        .into());
    };
    debug_assert_eq!(params, declared_params);

    let mut compiler = Compiler {
        db,
        class,
        params: params.clone(),
        locals: Vec::new(),
        steps: Vec::new(),
        guard_slots: 0,
    };
    let body = body.clone();
    compiler.block(&body, &[])?;
    Ok(SetProcedure {
        class: class.to_string(),
        method: method.to_string(),
        params: params.clone(),
        locals: compiler.locals,
        steps: compiler.steps,
    })
}

struct Compiler<'a> {
    db: &'a Database,
    class: &'a str,
    params: Vec<(String, Kind)>,
    locals: Vec<(String, Kind)>,
    steps: Vec<Step>,
    guard_slots: u32,
}

/// Hidden locals start with `#`, which no source identifier can.
fn guard_local(slot: u32) -> String {
    format!("#guard{slot}")
}

fn local_ref(name: &str, pos: crate::parser::Pos) -> Expr {
    Expr::new(
        ExprKind::Path(Path {
            root: PathRoot::Bare,
            segments: vec![crate::parser::PathSegment {
                name: name.to_string(),
                predicate: None,
                pos,
            }],
            pos,
        }),
        pos,
    )
}

impl Compiler<'_> {
    fn block(&mut self, statements: &[Stmt], guards: &[Expr]) -> Result<()> {
        for statement in statements {
            self.statement(statement, guards)?;
        }
        Ok(())
    }

    fn statement(&mut self, statement: &Stmt, guards: &[Expr]) -> Result<()> {
        match statement {
            Stmt::Declare(decl) => {
                if !guards.is_empty() {
                    return Err(RuntimeError::NonCompilableBody(
                        "DECLARE inside IF is not supported".into(),
                    )
                    .into());
                }
                let kind = crate::catalog::scalar_kind_of(&decl.type_name)?;
                if self.locals.iter().any(|(n, _)| n == &decl.name)
                    || self.params.iter().any(|(n, _)| n == &decl.name)
                {
                    return Err(RuntimeError::NonCompilableBody(format!(
                        "`{}` is declared twice",
                        decl.name
                    ))
                    .into());
                }
                self.locals.push((decl.name.clone(), kind));
                Ok(())
            }
            Stmt::Assign(assign) => {
                let target = self.assign_target(&assign.target)?;
                self.check_readable(&assign.value)?;
                self.steps.push(Step {
                    guard: conjunction(guards),
                    target,
                    value: assign.value.clone(),
                });
                Ok(())
            }
            Stmt::If(if_stmt) => {
                self.check_readable(&if_stmt.condition)?;
                // capture the condition once per object at scope entry
                let slot = guard_local(self.guard_slots);
                self.guard_slots += 1;
                self.locals.push((slot.clone(), Kind::Boolean));
                self.steps.push(Step {
                    guard: conjunction(guards),
                    target: StepTarget::Local(slot.clone()),
                    value: if_stmt.condition.clone(),
                });
                let captured = local_ref(&slot, if_stmt.condition.pos);
                let mut then_guards = guards.to_vec();
                then_guards.push(captured.clone());
                self.statement(&if_stmt.then_branch, &then_guards)?;
                if let Some(else_branch) = &if_stmt.else_branch {
                    let mut else_guards = guards.to_vec();
                    else_guards.push(Expr::new(
                        ExprKind::Not(Box::new(captured)),
                        if_stmt.condition.pos,
                    ));
                    self.statement(else_branch, &else_guards)?;
                }
                Ok(())
            }
            Stmt::Block(statements, _) => self.block(statements, guards),
            Stmt::Return(_) => Err(RuntimeError::NonCompilableBody(
                "RETURN is not allowed in a method body".into(),
            )
            .into()),
            other => Err(RuntimeError::NonCompilableBody(format!(
                "statement cannot run set-wise: {other}"
            ))
            .into()),
        }
    }

    /// Assignment targets: a declared local or parameter, or one of the
    /// object's own stored scalar/reference components.
    fn assign_target(&self, path: &Path) -> Result<StepTarget> {
        let simple = match (&path.root, path.segments.len()) {
            (PathRoot::Bare | PathRoot::ContextDot, 1)
                if path.segments[0].predicate.is_none() =>
            {
                &path.segments[0].name
            }
            _ => {
                return Err(RuntimeError::NonCompilableBody(format!(
                    "`{}`: methods may only write the object's own components",
                    path.dotted()
                ))
                .into())
            }
        };
        if self.locals.iter().any(|(n, _)| n == simple) {
            return Ok(StepTarget::Local(simple.clone()));
        }
        if self.params.iter().any(|(n, _)| n == simple) {
            return Err(RuntimeError::NonCompilableBody(format!(
                "`{simple}` is a parameter and cannot be assigned"
            ))
            .into());
        }
        match self.db.catalog.member(self.class, simple) {
            Ok(member) => match member.kind {
                MemberKind::Component(ComponentKind::Scalar(_))
                | MemberKind::Component(ComponentKind::Reference(_)) => {
                    if !matches!(
                        self.db.catalog.effective_realization(self.class, simple),
                        Some((_, Realization::Stored))
                    ) {
                        return Err(RuntimeError::NonCompilableBody(format!(
                            "`{simple}` is calculated and cannot be assigned"
                        ))
                        .into());
                    }
                    Ok(StepTarget::Component(simple.clone()))
                }
                _ => Err(RuntimeError::NonCompilableBody(format!(
                    "`{simple}` is not an assignable scalar component"
                ))
                .into()),
            },
            Err(_) => Err(RuntimeError::NonCompilableBody(format!(
                "`{simple}` is neither a local nor a component"
            ))
            .into()),
        }
    }

    /// Guards and values may read own components, locals, parameters, and
    /// embedded queries (which run against the statement snapshot). NEW,
    /// DESTROY and aggregates outside queries are rejected.
    fn check_readable(&self, expr: &Expr) -> Result<()> {
        match &expr.kind {
            ExprKind::New(_) => Err(RuntimeError::NonCompilableBody(
                "NEW is not allowed in a method body".into(),
            )
            .into()),
            ExprKind::Aggregate(func, _) => Err(RuntimeError::NonCompilableBody(format!(
                "{} is only allowed inside SELECT",
                func.name()
            ))
            .into()),
            ExprKind::Cmp(_, a, b) | ExprKind::Arith(_, a, b) => {
                self.check_readable(a)?;
                self.check_readable(b)
            }
            ExprKind::And(a, b) | ExprKind::Or(a, b) => {
                self.check_readable(a)?;
                self.check_readable(b)
            }
            ExprKind::Neg(e) | ExprKind::Not(e) | ExprKind::IsNull(e) | ExprKind::IsNotNull(e) => {
                self.check_readable(e)
            }
            _ => Ok(()),
        }
    }
}

fn conjunction(guards: &[Expr]) -> Option<Expr> {
    let mut iter = guards.iter().cloned();
    let first = iter.next()?;
    Some(iter.fold(first, |acc, next| {
        let pos = acc.pos;
        Expr::new(ExprKind::And(Box::new(acc), Box::new(next)), pos)
    }))
}

/// Executes a compiled set procedure over a selection: each step evaluates
/// its guard and value for every object against the current state, then
/// applies all updates at once. Embedded queries read the statement-start
/// snapshot. Constraints are the caller's statement-boundary check.
pub fn exec_method(
    db: &mut Database,
    selection: &ObjectSelection,
    procedure: &SetProcedure,
    args: &[Scalar],
) -> Result<()> {
    if args.len() != procedure.params.len() {
        return Err(RuntimeError::ArityMismatch(format!(
            "`{}` takes {} arguments, got {}",
            procedure.method,
            procedure.params.len(),
            args.len()
        ))
        .into());
    }
    for ((name, kind), value) in procedure.params.iter().zip(args) {
        if !value.conforms_to(kind) {
            return Err(QueryError::KindMismatch(format!(
                "argument `{name}` must have kind {kind}"
            ))
            .into());
        }
    }

    let snapshot = db.clone();
    let mut locals: BTreeMap<Oid, BTreeMap<String, Scalar>> = BTreeMap::new();
    let mut exacts: BTreeMap<Oid, String> = BTreeMap::new();
    for &oid in &selection.oids {
        let mut vars = BTreeMap::new();
        for ((name, _), value) in procedure.params.iter().zip(args) {
            vars.insert(name.clone(), value.clone());
        }
        for (name, _) in &procedure.locals {
            vars.insert(name.clone(), Scalar::Null);
        }
        locals.insert(oid, vars);
        let exact = db
            .exact_class_of(oid)
            .ok_or_else(|| QueryError::UnknownName(format!("no object with oid {oid}")))?;
        exacts.insert(oid, exact);
    }

    for step in &procedure.steps {
        // stage: evaluate guard and value per object against current state
        let mut staged: Vec<(Oid, Scalar)> = Vec::new();
        for &oid in &selection.oids {
            let exact = &exacts[&oid];
            let ctx = EvalCtx {
                db,
                snapshot: &snapshot,
                host: Some((exact.clone(), Some(oid))),
                vars: locals[&oid].clone(),
                depth: 0,
            };
            let fire = match &step.guard {
                Some(guard) => matches!(query::expr_scalar(&ctx, guard)?, Scalar::Boolean(true)),
                None => true,
            };
            if !fire {
                continue;
            }
            let value = query::expr_scalar(&ctx, &step.value)?;
            staged.push((oid, value));
        }
        // apply: one bulk update
        match &step.target {
            StepTarget::Local(name) => {
                let declared = procedure
                    .locals
                    .iter()
                    .find(|(n, _)| n == name)
                    .map(|(_, k)| k.clone())
                    .expect("locals are validated at compile time");
                for (oid, value) in staged {
                    if !value.conforms_to(&declared) {
                        return Err(QueryError::KindMismatch(format!(
                            "cannot assign that value to `{name}` ({declared})"
                        ))
                        .into());
                    }
                    locals.get_mut(&oid).expect("selection oids").insert(name.clone(), value);
                }
            }
            StepTarget::Component(member) => {
                for (oid, value) in staged {
                    let exact = &exacts[&oid];
                    let binding = storage_for(db, exact, member).map_err(|_| {
                        crate::error::Error::from(RuntimeError::AssignToCalculated {
                            class: exact.clone(),
                            member: member.clone(),
                        })
                    })?;
                    let StorageBinding::Column { relation, attr } = binding else {
                        return Err(RuntimeError::AssignToCalculated {
                            class: exact.clone(),
                            member: member.clone(),
                        }
                        .into());
                    };
                    let declared = db
                        .catalog
                        .member(exact, member)?
                        .kind;
                    if let MemberKind::Component(kind) = declared {
                        if let Some(kind) = kind.attribute_kind() {
                            if !value.conforms_to(&kind) {
                                return Err(QueryError::KindMismatch(format!(
                                    "cannot assign that value to `{member}` ({kind})"
                                ))
                                .into());
                            }
                        }
                    }
                    let stored = db.storage.get_mut(&relation)?;
                    let header = stored.relation.header().clone();
                    let oid_idx = header.position(OID_ATTR).expect("roots carry #oid");
                    let attr_idx = header
                        .position(&attr)
                        .ok_or_else(|| QueryError::UnknownAttribute(attr.clone()))?;
                    stored.relation.replace_all(|tuple| {
                        if tuple[oid_idx].as_oid() == Some(oid) && tuple[attr_idx] != value {
                            let mut next = tuple.clone();
                            next[attr_idx] = value.clone();
                            Some(next)
                        } else {
                            None
                        }
                    })?;
                }
            }
        }
    }
    Ok(())
}
