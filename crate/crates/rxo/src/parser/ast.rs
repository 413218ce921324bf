//! Abstract syntax tree and its canonical (re-parseable) text form.

use std::fmt;

use super::token::Pos;
use crate::kernel::scalar::format_datetime;
use crate::kernel::{AggFn, ArithOp, CmpOp};

/// A dotted name sequence. `root` says how the first segment binds:
/// `Bare` starts with an identifier (context member or class name),
/// `ContextDot` starts with `.` (current row / host object),
/// `Alias` starts with `#name` (a FROM-clause row alias).
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub root: PathRoot,
    pub segments: Vec<PathSegment>,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PathRoot {
    Bare,
    ContextDot,
    Alias(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathSegment {
    pub name: String,
    pub predicate: Option<Expr>,
    pub pos: Pos,
}

impl Path {
    pub fn bare(segments: Vec<PathSegment>, pos: Pos) -> Path {
        Path { root: PathRoot::Bare, segments, pos }
    }

    pub fn segment_names(&self) -> Vec<&str> {
        self.segments.iter().map(|s| s.name.as_str()).collect()
    }

    /// Dotted text without predicates, e.g. `.Items.Art` for context paths
    /// or `GOODS.Turnover` for bare ones.
    pub fn dotted(&self) -> String {
        let names: Vec<&str> = self.segment_names();
        match &self.root {
            PathRoot::Bare => names.join("."),
            PathRoot::ContextDot => format!(".{}", names.join(".")),
            PathRoot::Alias(a) => format!("#{}.{}", a, names.join(".")),
        }
    }

    pub fn has_predicates(&self) -> bool {
        self.segments.iter().any(|s| s.predicate.is_some())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    String(String),
    Integer(i64),
    Float(f64),
    Datetime(i64),
    Boolean(bool),
    Null,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Literal(Literal),
    Path(Path),
    Cmp(CmpOp, Box<Expr>, Box<Expr>),
    Arith(ArithOp, Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
    IsNull(Box<Expr>),
    IsNotNull(Box<Expr>),
    /// Aggregate call over a path argument, e.g. `SUM(#g.Items.Pieces)`.
    Aggregate(AggFn, Path),
    /// Embedded query used as a scalar (single attribute; 0 rows -> NULL).
    SubSelect(Box<SelectStmt>),
    /// Object creation used as a value: yields the new object's reference.
    New(Box<NewStmt>),
    /// Internal: a value spliced in during execution (never produced by the
    /// parser; NEW sub-expressions are replaced by their reference).
    Resolved(crate::kernel::Scalar),
}

impl Expr {
    pub fn new(kind: ExprKind, pos: Pos) -> Expr {
        Expr { kind, pos }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectItem {
    pub expr: Expr,
    pub alias: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectStmt {
    pub items: Vec<SelectItem>,
    pub from: Path,
    /// `FROM DOCS #g` binds rows of the FROM O-view to `#g`.
    pub from_alias: Option<String>,
    pub where_clause: Option<Expr>,
    pub group_by: Vec<Path>,
    pub pos: Pos,
}

/// Scalar kind name or class name, as written in declarations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TypeName {
    String,
    Integer,
    Float,
    Datetime,
    Boolean,
    Class(String),
}

impl fmt::Display for TypeName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeName::String => write!(f, "STRING"),
            TypeName::Integer => write!(f, "INTEGER"),
            TypeName::Float => write!(f, "FLOAT"),
            TypeName::Datetime => write!(f, "DATETIME"),
            TypeName::Boolean => write!(f, "BOOLEAN"),
            TypeName::Class(name) => write!(f, "{name}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MemberDecl {
    pub name: String,
    pub body: MemberBody,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MemberBody {
    Scalar(TypeName),
    Reference(String),
    SetOf { attrs: Vec<MemberDecl>, key: Vec<String> },
    Method { params: Vec<(String, TypeName)>, ret: Option<TypeName> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefClause {
    pub component: String,
    pub local_attrs: Vec<String>,
    pub target_class: String,
    pub target_attrs: Vec<String>,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CreateClass {
    pub name: String,
    pub parents: Vec<String>,
    pub members: Vec<MemberDecl>,
    pub class_key: Option<Vec<String>>,
    pub references: Vec<RefClause>,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealizeTarget {
    pub name: String,
    /// Present when realizing a method: the restated signature.
    pub params: Option<Vec<(String, TypeName)>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RealizeBody {
    Stored,
    Query(SelectStmt),
    Procedure(Vec<Stmt>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlterRealize {
    pub class: String,
    pub targets: Vec<RealizeTarget>,
    pub body: RealizeBody,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewStmt {
    pub class: String,
    /// `WITH SET .Component := expr` pairs.
    pub initializers: Vec<(String, Expr)>,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DestroyStmt {
    pub class: String,
    pub predicate: Option<Expr>,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExecStmt {
    pub class: String,
    pub predicate: Option<Expr>,
    pub method: String,
    pub args: Vec<Expr>,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InsertStmt {
    /// Target set component, e.g. `DOCS[.DocN = "D1"].Items`.
    pub target: Path,
    pub rows: Vec<Vec<Expr>>,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeleteStmt {
    pub target: Path,
    pub where_clause: Option<Expr>,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssignStmt {
    pub target: Path,
    pub value: Expr,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeclareStmt {
    pub name: String,
    pub type_name: TypeName,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IfStmt {
    pub condition: Expr,
    pub then_branch: Box<Stmt>,
    pub else_branch: Option<Box<Stmt>>,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReturnStmt {
    pub value: Expr,
    pub pos: Pos,
}

/// One statement. DECLARE/IF/RETURN/BEGIN-END blocks are only legal inside
/// procedure bodies; the parser enforces that for top-level input.
#[derive(Debug, Clone, PartialEq)]
pub enum Stmt {
    CreateClass(CreateClass),
    AlterRealize(AlterRealize),
    New(NewStmt),
    Destroy(DestroyStmt),
    Select(SelectStmt),
    /// A bare non-terminal path: queries its O-view.
    PathQuery(Path),
    Exec(ExecStmt),
    Insert(InsertStmt),
    Delete(DeleteStmt),
    Assign(AssignStmt),
    Declare(DeclareStmt),
    If(IfStmt),
    Return(ReturnStmt),
    Block(Vec<Stmt>, Pos),
}

impl Stmt {
    pub fn pos(&self) -> Pos {
        match self {
            Stmt::CreateClass(s) => s.pos,
            Stmt::AlterRealize(s) => s.pos,
            Stmt::New(s) => s.pos,
            Stmt::Destroy(s) => s.pos,
            Stmt::Select(s) => s.pos,
            Stmt::PathQuery(p) => p.pos,
            Stmt::Exec(s) => s.pos,
            Stmt::Insert(s) => s.pos,
            Stmt::Delete(s) => s.pos,
            Stmt::Assign(s) => s.pos,
            Stmt::Declare(s) => s.pos,
            Stmt::If(s) => s.pos,
            Stmt::Return(s) => s.pos,
            Stmt::Block(_, pos) => *pos,
        }
    }

    /// True for statements that can change the database.
    pub fn is_mutating(&self) -> bool {
        !matches!(self, Stmt::Select(_) | Stmt::PathQuery(_))
    }
}

// ---------------------------------------------------------------------------
// Canonical printing. Statements print on one line and re-parse to the same
// structure (positions aside).
// ---------------------------------------------------------------------------

fn cmp_text(op: CmpOp) -> &'static str {
    match op {
        CmpOp::Eq => "=",
        CmpOp::Ne => "<>",
        CmpOp::Lt => "<",
        CmpOp::Le => "<=",
        CmpOp::Gt => ">",
        CmpOp::Ge => ">=",
    }
}

fn arith_text(op: ArithOp) -> &'static str {
    match op {
        ArithOp::Add => "+",
        ArithOp::Sub => "-",
        ArithOp::Mul => "*",
        ArithOp::Div => "/",
    }
}

const PREC_OR: u8 = 1;
const PREC_AND: u8 = 2;
const PREC_NOT: u8 = 3;
const PREC_CMP: u8 = 4;
const PREC_ADD: u8 = 5;
const PREC_MUL: u8 = 6;
const PREC_NEG: u8 = 7;
const PREC_PRIMARY: u8 = 8;

fn precedence(expr: &Expr) -> u8 {
    match &expr.kind {
        ExprKind::Or(..) => PREC_OR,
        ExprKind::And(..) => PREC_AND,
        ExprKind::Not(..) => PREC_NOT,
        ExprKind::Cmp(..) | ExprKind::IsNull(..) | ExprKind::IsNotNull(..) => PREC_CMP,
        ExprKind::Arith(ArithOp::Add | ArithOp::Sub, ..) => PREC_ADD,
        ExprKind::Arith(ArithOp::Mul | ArithOp::Div, ..) => PREC_MUL,
        ExprKind::Neg(..) => PREC_NEG,
        _ => PREC_PRIMARY,
    }
}

fn write_expr(f: &mut fmt::Formatter<'_>, expr: &Expr, min: u8) -> fmt::Result {
    let prec = precedence(expr);
    if prec < min {
        write!(f, "(")?;
        write_expr_inner(f, expr)?;
        write!(f, ")")
    } else {
        write_expr_inner(f, expr)
    }
}

fn write_expr_inner(f: &mut fmt::Formatter<'_>, expr: &Expr) -> fmt::Result {
    match &expr.kind {
        ExprKind::Literal(lit) => write!(f, "{lit}"),
        ExprKind::Path(path) => write!(f, "{path}"),
        ExprKind::Cmp(op, a, b) => {
            write_expr(f, a, PREC_ADD)?;
            write!(f, " {} ", cmp_text(*op))?;
            write_expr(f, b, PREC_ADD)
        }
        ExprKind::Arith(op, a, b) => {
            let prec = precedence(expr);
            write_expr(f, a, prec)?;
            write!(f, " {} ", arith_text(*op))?;
            write_expr(f, b, prec + 1)
        }
        ExprKind::Neg(e) => {
            write!(f, "-")?;
            write_expr(f, e, PREC_NEG)
        }
        ExprKind::And(a, b) => {
            write_expr(f, a, PREC_AND)?;
            write!(f, " AND ")?;
            write_expr(f, b, PREC_AND + 1)
        }
        ExprKind::Or(a, b) => {
            write_expr(f, a, PREC_OR)?;
            write!(f, " OR ")?;
            write_expr(f, b, PREC_OR + 1)
        }
        ExprKind::Not(e) => {
            write!(f, "NOT ")?;
            write_expr(f, e, PREC_NOT)
        }
        ExprKind::IsNull(e) => {
            write_expr(f, e, PREC_ADD)?;
            write!(f, " IS NULL")
        }
        ExprKind::IsNotNull(e) => {
            write_expr(f, e, PREC_ADD)?;
            write!(f, " IS NOT NULL")
        }
        ExprKind::Aggregate(func, path) => write!(f, "{}({})", func.name(), path),
        ExprKind::SubSelect(select) => write!(f, "({select})"),
        ExprKind::New(new_stmt) => write!(f, "({})", NewDisplay(new_stmt)),
        ExprKind::Resolved(value) => match value {
            crate::kernel::Scalar::Null => write!(f, "NULL"),
            crate::kernel::Scalar::String(s) => write!(f, "\"{}\"", escape_string(s)),
            crate::kernel::Scalar::Integer(i) => write!(f, "{i}"),
            crate::kernel::Scalar::Float(x) => write!(f, "{x}"),
            crate::kernel::Scalar::Datetime(secs) => write!(f, "'{}'", format_datetime(*secs)),
            crate::kernel::Scalar::Boolean(b) => write!(f, "{}", if *b { "TRUE" } else { "FALSE" }),
            crate::kernel::Scalar::Ref(oid) => write!(f, "<object {oid}>"),
        },
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(f, self, 0)
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::String(s) => write!(f, "\"{}\"", escape_string(s)),
            Literal::Integer(i) => write!(f, "{i}"),
            Literal::Float(x) => {
                if x.fract() == 0.0 && x.is_finite() && x.abs() < 1e15 {
                    write!(f, "{x:.1}")
                } else {
                    write!(f, "{x}")
                }
            }
            Literal::Datetime(secs) => write!(f, "'{}'", format_datetime(*secs)),
            Literal::Boolean(b) => write!(f, "{}", if *b { "TRUE" } else { "FALSE" }),
            Literal::Null => write!(f, "NULL"),
        }
    }
}

fn escape_string(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '\\' => out.push_str("\\\\"),
            '"' => out.push_str("\\\""),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            other => out.push(other),
        }
    }
    out
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        match &self.root {
            PathRoot::Bare => {}
            PathRoot::ContextDot => {}
            PathRoot::Alias(name) => {
                write!(f, "#{name}")?;
                first = false;
            }
        }
        for segment in &self.segments {
            if !first || self.root == PathRoot::ContextDot {
                write!(f, ".")?;
            }
            first = false;
            write!(f, "{}", segment.name)?;
            if let Some(pred) = &segment.predicate {
                write!(f, "[{pred}]")?;
            }
        }
        Ok(())
    }
}

impl fmt::Display for SelectStmt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SELECT ")?;
        for (i, item) in self.items.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}", item.expr)?;
            if let Some(alias) = &item.alias {
                write!(f, " AS {alias}")?;
            }
        }
        write!(f, " FROM {}", self.from)?;
        if let Some(alias) = &self.from_alias {
            write!(f, " #{alias}")?;
        }
        if let Some(where_clause) = &self.where_clause {
            write!(f, " WHERE {where_clause}")?;
        }
        if !self.group_by.is_empty() {
            write!(f, " GROUP BY ")?;
            for (i, path) in self.group_by.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{path}")?;
            }
        }
        Ok(())
    }
}

struct NewDisplay<'a>(&'a NewStmt);

impl fmt::Display for NewDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "NEW {}", self.0.class)?;
        if !self.0.initializers.is_empty() {
            write!(f, " WITH SET ")?;
            for (i, (component, value)) in self.0.initializers.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, ".{component} := {value}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Display for MemberDecl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.body {
            MemberBody::Scalar(t) => write!(f, "{} {t}", self.name),
            MemberBody::Reference(class) => write!(f, "{} {class}", self.name),
            MemberBody::SetOf { attrs, key } => {
                write!(f, "{} SET OF ( ", self.name)?;
                for (i, attr) in attrs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{attr}")?;
                }
                write!(f, " )")?;
                if !key.is_empty() {
                    write!(f, " KEY({})", key.join(", "))?;
                }
                Ok(())
            }
            MemberBody::Method { params, ret } => {
                write!(f, "{}(", self.name)?;
                for (i, (name, ty)) in params.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{name} {ty}")?;
                }
                write!(f, ")")?;
                if let Some(ty) = ret {
                    write!(f, " {ty}")?;
                }
                Ok(())
            }
        }
    }
}

fn write_block(f: &mut fmt::Formatter<'_>, statements: &[Stmt]) -> fmt::Result {
    write!(f, "BEGIN")?;
    for stmt in statements {
        write!(f, " {stmt}")?;
    }
    write!(f, " END")
}

impl fmt::Display for Stmt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stmt::CreateClass(c) => {
                write!(f, "CREATE CLASS {}", c.name)?;
                if !c.parents.is_empty() {
                    write!(f, " EXTEND {}", c.parents.join(", "))?;
                }
                write!(f, " ( ")?;
                for (i, member) in c.members.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{member}")?;
                }
                write!(f, " )")?;
                if let Some(key) = &c.class_key {
                    write!(f, " KEY({})", key.join(", "))?;
                }
                for clause in &c.references {
                    write!(
                        f,
                        " REFERENCE {}({}) ON {}({})",
                        clause.component,
                        clause.local_attrs.iter().map(|a| format!(".{a}")).collect::<Vec<_>>().join(", "),
                        clause.target_class,
                        clause.target_attrs.iter().map(|a| format!(".{a}")).collect::<Vec<_>>().join(", "),
                    )?;
                }
                write!(f, ";")
            }
            Stmt::AlterRealize(a) => {
                write!(f, "ALTER {} REALIZE ", a.class)?;
                for (i, target) in a.targets.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{}", target.name)?;
                    if let Some(params) = &target.params {
                        write!(f, "(")?;
                        for (j, (name, ty)) in params.iter().enumerate() {
                            if j > 0 {
                                write!(f, ", ")?;
                            }
                            write!(f, "{name} {ty}")?;
                        }
                        write!(f, ")")?;
                    }
                }
                write!(f, " AS ")?;
                match &a.body {
                    RealizeBody::Stored => write!(f, "STORED;"),
                    RealizeBody::Query(select) => write!(f, "{select};"),
                    RealizeBody::Procedure(statements) => {
                        write_block(f, statements)?;
                        write!(f, ";")
                    }
                }
            }
            Stmt::New(n) => write!(f, "{};", NewDisplay(n)),
            Stmt::Destroy(d) => {
                write!(f, "DESTROY {}", d.class)?;
                if let Some(pred) = &d.predicate {
                    write!(f, "[{pred}]")?;
                }
                write!(f, ";")
            }
            Stmt::Select(s) => write!(f, "{s};"),
            Stmt::PathQuery(p) => write!(f, "{p};"),
            Stmt::Exec(e) => {
                write!(f, "EXEC {}", e.class)?;
                if let Some(pred) = &e.predicate {
                    write!(f, "[{pred}]")?;
                }
                write!(f, ".{}(", e.method)?;
                for (i, arg) in e.args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{arg}")?;
                }
                write!(f, ");")
            }
            Stmt::Insert(ins) => {
                write!(f, "INSERT {} VALUES ", ins.target)?;
                for (i, row) in ins.rows.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "(")?;
                    for (j, value) in row.iter().enumerate() {
                        if j > 0 {
                            write!(f, ", ")?;
                        }
                        write!(f, "{value}")?;
                    }
                    write!(f, ")")?;
                }
                write!(f, ";")
            }
            Stmt::Delete(d) => {
                write!(f, "DELETE {}", d.target)?;
                if let Some(where_clause) = &d.where_clause {
                    write!(f, " WHERE {where_clause}")?;
                }
                write!(f, ";")
            }
            Stmt::Assign(a) => write!(f, "{} := {};", a.target, a.value),
            Stmt::Declare(d) => write!(f, "DECLARE {} {};", d.name, d.type_name),
            Stmt::If(stmt) => {
                write!(f, "IF ({}) THEN {}", stmt.condition, stmt.then_branch)?;
                if let Some(else_branch) = &stmt.else_branch {
                    write!(f, " ELSE {else_branch}")?;
                }
                Ok(())
            }
            Stmt::Return(r) => write!(f, "RETURN {};", r.value),
            Stmt::Block(statements, _) => write_block(f, statements),
        }
    }
}

// ---------------------------------------------------------------------------
// Position normalization: structural comparison helpers for round-trip tests
// and catalog bookkeeping.
// ---------------------------------------------------------------------------

impl Path {
    pub fn strip_positions(&mut self) {
        self.pos = Pos::default();
        for segment in &mut self.segments {
            segment.pos = Pos::default();
            if let Some(pred) = &mut segment.predicate {
                pred.strip_positions();
            }
        }
    }
}

impl Expr {
    pub fn strip_positions(&mut self) {
        self.pos = Pos::default();
        match &mut self.kind {
            ExprKind::Literal(_) | ExprKind::Resolved(_) => {}
            ExprKind::Path(path) => path.strip_positions(),
            ExprKind::Cmp(_, a, b) | ExprKind::Arith(_, a, b) => {
                a.strip_positions();
                b.strip_positions();
            }
            ExprKind::And(a, b) | ExprKind::Or(a, b) => {
                a.strip_positions();
                b.strip_positions();
            }
            ExprKind::Neg(e)
            | ExprKind::Not(e)
            | ExprKind::IsNull(e)
            | ExprKind::IsNotNull(e) => e.strip_positions(),
            ExprKind::Aggregate(_, path) => path.strip_positions(),
            ExprKind::SubSelect(select) => select.strip_positions(),
            ExprKind::New(new_stmt) => new_stmt.strip_positions(),
        }
    }
}

impl SelectStmt {
    pub fn strip_positions(&mut self) {
        self.pos = Pos::default();
        for item in &mut self.items {
            item.expr.strip_positions();
        }
        self.from.strip_positions();
        if let Some(where_clause) = &mut self.where_clause {
            where_clause.strip_positions();
        }
        for path in &mut self.group_by {
            path.strip_positions();
        }
    }
}

impl NewStmt {
    pub fn strip_positions(&mut self) {
        self.pos = Pos::default();
        for (_, expr) in &mut self.initializers {
            expr.strip_positions();
        }
    }
}

impl Stmt {
    pub fn strip_positions(&mut self) {
        match self {
            Stmt::CreateClass(c) => {
                c.pos = Pos::default();
                for member in &mut c.members {
                    strip_member(member);
                }
                for clause in &mut c.references {
                    clause.pos = Pos::default();
                }
            }
            Stmt::AlterRealize(a) => {
                a.pos = Pos::default();
                match &mut a.body {
                    RealizeBody::Stored => {}
                    RealizeBody::Query(select) => select.strip_positions(),
                    RealizeBody::Procedure(statements) => {
                        for stmt in statements {
                            stmt.strip_positions();
                        }
                    }
                }
            }
            Stmt::New(n) => n.strip_positions(),
            Stmt::Destroy(d) => {
                d.pos = Pos::default();
                if let Some(pred) = &mut d.predicate {
                    pred.strip_positions();
                }
            }
            Stmt::Select(s) => s.strip_positions(),
            Stmt::PathQuery(p) => p.strip_positions(),
            Stmt::Exec(e) => {
                e.pos = Pos::default();
                if let Some(pred) = &mut e.predicate {
                    pred.strip_positions();
                }
                for arg in &mut e.args {
                    arg.strip_positions();
                }
            }
            Stmt::Insert(ins) => {
                ins.pos = Pos::default();
                ins.target.strip_positions();
                for row in &mut ins.rows {
                    for value in row {
                        value.strip_positions();
                    }
                }
            }
            Stmt::Delete(d) => {
                d.pos = Pos::default();
                d.target.strip_positions();
                if let Some(where_clause) = &mut d.where_clause {
                    where_clause.strip_positions();
                }
            }
            Stmt::Assign(a) => {
                a.pos = Pos::default();
                a.target.strip_positions();
                a.value.strip_positions();
            }
            Stmt::Declare(d) => d.pos = Pos::default(),
            Stmt::If(stmt) => {
                stmt.pos = Pos::default();
                stmt.condition.strip_positions();
                stmt.then_branch.strip_positions();
                if let Some(else_branch) = &mut stmt.else_branch {
                    else_branch.strip_positions();
                }
            }
            Stmt::Return(r) => {
                r.pos = Pos::default();
                r.value.strip_positions();
            }
            Stmt::Block(statements, pos) => {
                *pos = Pos::default();
                for stmt in statements {
                    stmt.strip_positions();
                }
            }
        }
    }
}

fn strip_member(member: &mut MemberDecl) {
    member.pos = Pos::default();
    if let MemberBody::SetOf { attrs, .. } = &mut member.body {
        for attr in attrs {
            strip_member(attr);
        }
    }
}
