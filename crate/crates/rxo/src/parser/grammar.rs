//! Recursive-descent parser. Statement keywords disambiguate at the first
//! token; `:=` is assignment (lexed as `:` `=`), `=` is comparison.

use thiserror::Error;

use super::ast::*;
use super::lexer::{tokenize, LexError};
use super::token::{Pos, Token, TokenKind};
use crate::kernel::{AggFn, ArithOp, CmpOp, Scalar};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{pos}: {message}")]
pub struct ParseError {
    pub pos: Pos,
    pub message: String,
}

impl From<LexError> for ParseError {
    fn from(err: LexError) -> ParseError {
        ParseError { pos: err.pos, message: err.message }
    }
}

/// Parses a whole script into its statements.
pub fn parse_script(source: &str) -> Result<Vec<Stmt>, ParseError> {
    let tokens = tokenize(source)?;
    let mut parser = Parser::new(&tokens);
    let mut statements = Vec::new();
    while !parser.at_end() {
        statements.push(parser.statement(false)?);
    }
    Ok(statements)
}

/// Parses exactly one statement; trailing tokens beyond the terminator are
/// an error.
pub fn parse_statement(source: &str) -> Result<Stmt, ParseError> {
    let tokens = tokenize(source)?;
    parse_tokens(&tokens)
}

/// Statement parser over an existing token stream.
pub fn parse_tokens(tokens: &[Token]) -> Result<Stmt, ParseError> {
    let mut parser = Parser::new(tokens);
    let stmt = parser.statement(false)?;
    if !parser.at_end() {
        let token = parser.peek_token().unwrap();
        return Err(ParseError {
            pos: token.pos,
            message: format!("trailing input after statement: `{}`", token.text),
        });
    }
    Ok(stmt)
}

/// Parses a standalone path such as `GOODS[.Art = "A1"].Turnover.Cntr`.
pub fn parse_path(source: &str) -> Result<Path, ParseError> {
    let tokens = tokenize(source)?;
    let mut parser = Parser::new(&tokens);
    let path = parser.path()?;
    if !parser.at_end() {
        let token = parser.peek_token().unwrap();
        return Err(ParseError {
            pos: token.pos,
            message: format!("trailing input after path: `{}`", token.text),
        });
    }
    Ok(path)
}

/// Parses a standalone expression (used by tests and tools).
pub fn parse_expression(source: &str) -> Result<Expr, ParseError> {
    let tokens = tokenize(source)?;
    let mut parser = Parser::new(&tokens);
    let expr = parser.expr()?;
    if !parser.at_end() {
        let token = parser.peek_token().unwrap();
        return Err(ParseError {
            pos: token.pos,
            message: format!("trailing input after expression: `{}`", token.text),
        });
    }
    Ok(expr)
}

struct Parser<'a> {
    tokens: &'a [Token],
    at: usize,
}

impl<'a> Parser<'a> {
    fn new(tokens: &'a [Token]) -> Parser<'a> {
        Parser { tokens, at: 0 }
    }

    fn at_end(&self) -> bool {
        self.at >= self.tokens.len()
    }

    fn peek_token(&self) -> Option<&Token> {
        self.tokens.get(self.at)
    }

    fn peek_at(&self, offset: usize) -> Option<&Token> {
        self.tokens.get(self.at + offset)
    }

    fn bump(&mut self) -> Option<&Token> {
        let token = self.tokens.get(self.at);
        if token.is_some() {
            self.at += 1;
        }
        token
    }

    fn here(&self) -> Pos {
        self.peek_token().map(|t| t.pos).unwrap_or_else(|| {
            self.tokens.last().map(|t| t.pos).unwrap_or_default()
        })
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError { pos: self.here(), message: message.into() }
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        match self.peek_token() {
            Some(token) => ParseError {
                pos: token.pos,
                message: format!("expected {expected}, found `{}`", token.text),
            },
            None => ParseError {
                pos: self.here(),
                message: format!("unexpected end of input, expected {expected}"),
            },
        }
    }

    fn keyword(&mut self, word: &str) -> Result<Pos, ParseError> {
        match self.peek_token() {
            Some(token) if token.is_keyword(word) => {
                let pos = token.pos;
                self.at += 1;
                Ok(pos)
            }
            _ => Err(self.unexpected(&format!("`{word}`"))),
        }
    }

    fn try_keyword(&mut self, word: &str) -> bool {
        if self.peek_token().is_some_and(|t| t.is_keyword(word)) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn punct(&mut self, text: &str) -> Result<Pos, ParseError> {
        match self.peek_token() {
            Some(token) if token.is_punct(text) => {
                let pos = token.pos;
                self.at += 1;
                Ok(pos)
            }
            _ => Err(self.unexpected(&format!("`{text}`"))),
        }
    }

    fn try_punct(&mut self, text: &str) -> bool {
        if self.peek_token().is_some_and(|t| t.is_punct(text)) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn peek_punct(&self, text: &str) -> bool {
        self.peek_token().is_some_and(|t| t.is_punct(text))
    }

    fn peek_keyword(&self, word: &str) -> bool {
        self.peek_token().is_some_and(|t| t.is_keyword(word))
    }

    fn identifier(&mut self, what: &str) -> Result<(String, Pos), ParseError> {
        match self.peek_token() {
            Some(token) if token.kind == TokenKind::Identifier => {
                let out = (token.text.clone(), token.pos);
                self.at += 1;
                Ok(out)
            }
            _ => Err(self.unexpected(what)),
        }
    }

    /// Consumes `:` `=` (the assignment operator).
    fn assign_op(&mut self) -> Result<(), ParseError> {
        self.punct(":")?;
        self.punct("=").map_err(|_| self.unexpected("`=` to complete `:=`"))?;
        Ok(())
    }

    fn peek_assign_op(&self) -> bool {
        self.peek_punct(":") && self.peek_at(1).is_some_and(|t| t.is_punct("="))
    }

    /// Statement terminator: `;`, or nothing right before END / end of input.
    /// Statements that end with an END block treat `;` as optional.
    fn finish_statement(&mut self, ends_with_block: bool) -> Result<(), ParseError> {
        if self.try_punct(";") {
            return Ok(());
        }
        if ends_with_block || self.at_end() || self.peek_keyword("END") || self.peek_keyword("ELSE")
        {
            return Ok(());
        }
        Err(self.unexpected("`;`"))
    }

    // -- statements ---------------------------------------------------------

    fn statement(&mut self, in_body: bool) -> Result<Stmt, ParseError> {
        let Some(token) = self.peek_token() else {
            return Err(self.error("unexpected end of input, expected a statement"));
        };
        if token.kind == TokenKind::Keyword {
            let word = token.text.to_ascii_uppercase();
            match word.as_str() {
                "CREATE" | "ALTER" if in_body => {
                    return Err(self.error("schema statements are not allowed in procedure bodies"))
                }
                "CREATE" => return self.create_class(),
                "ALTER" => return self.alter_realize(),
                "NEW" => {
                    let new_stmt = self.new_clause()?;
                    self.finish_statement(false)?;
                    return Ok(Stmt::New(new_stmt));
                }
                "DESTROY" => return self.destroy(),
                "SELECT" => {
                    let select = self.select()?;
                    self.finish_statement(false)?;
                    return Ok(Stmt::Select(select));
                }
                "EXEC" => return self.exec(),
                "INSERT" => return self.insert(),
                "DELETE" => return self.delete(),
                "DECLARE" | "IF" | "RETURN" | "BEGIN" if !in_body => {
                    return Err(self
                        .error(format!("`{word}` is only allowed inside a procedure body")))
                }
                "DECLARE" => return self.declare(),
                "IF" => return self.if_statement(),
                "RETURN" => return self.return_statement(),
                "BEGIN" => {
                    let pos = self.here();
                    let statements = self.block()?;
                    self.finish_statement(true)?;
                    return Ok(Stmt::Block(statements, pos));
                }
                "WHILE" | "FOR" | "LOOP" => {
                    return Err(self.error(format!("loops are not supported (`{word}`)")))
                }
                _ => return Err(self.unexpected("a statement")),
            }
        }
        // path-led statement: assignment or bare O-view query
        let path = self.path()?;
        if self.peek_assign_op() {
            let pos = path.pos;
            self.assign_op()?;
            let value = self.expr()?;
            self.finish_statement(false)?;
            return Ok(Stmt::Assign(AssignStmt { target: path, value, pos }));
        }
        self.finish_statement(false)?;
        Ok(Stmt::PathQuery(path))
    }

    fn create_class(&mut self) -> Result<Stmt, ParseError> {
        let pos = self.keyword("CREATE")?;
        self.keyword("CLASS")?;
        let (name, _) = self.identifier("a class name")?;
        let mut parents = Vec::new();
        if self.try_keyword("EXTEND") {
            loop {
                parents.push(self.identifier("a parent class name")?.0);
                if !self.try_punct(",") {
                    break;
                }
            }
        }
        self.punct("(")?;
        let members = self.member_list()?;
        self.punct(")")?;
        let class_key = if self.try_keyword("KEY") { Some(self.name_list()?) } else { None };
        let mut references = Vec::new();
        while self.peek_keyword("REFERENCE") {
            references.push(self.reference_clause()?);
        }
        self.finish_statement(false)?;
        Ok(Stmt::CreateClass(CreateClass { name, parents, members, class_key, references, pos }))
    }

    /// `( A, B )` or `(.A, .B)` — leading dots are optional.
    fn name_list(&mut self) -> Result<Vec<String>, ParseError> {
        self.punct("(")?;
        let mut names = Vec::new();
        loop {
            if self.peek_token().is_some_and(|t| t.kind == TokenKind::PathDot) {
                self.bump();
            }
            names.push(self.identifier("an attribute name")?.0);
            if !self.try_punct(",") {
                break;
            }
        }
        self.punct(")")?;
        Ok(names)
    }

    fn reference_clause(&mut self) -> Result<RefClause, ParseError> {
        let pos = self.keyword("REFERENCE")?;
        let (component, _) = self.identifier("a component name")?;
        let local_attrs = self.name_list()?;
        self.keyword("ON")?;
        let (target_class, _) = self.identifier("a class name")?;
        let target_attrs = self.name_list()?;
        Ok(RefClause { component, local_attrs, target_class, target_attrs, pos })
    }

    /// Members separated by `,` or `;` (the paper mixes both).
    fn member_list(&mut self) -> Result<Vec<MemberDecl>, ParseError> {
        let mut members = Vec::new();
        if self.peek_punct(")") {
            return Ok(members);
        }
        loop {
            members.push(self.member_decl()?);
            if self.try_punct(",") || self.try_punct(";") {
                if self.peek_punct(")") {
                    break;
                }
                continue;
            }
            break;
        }
        Ok(members)
    }

    fn member_decl(&mut self) -> Result<MemberDecl, ParseError> {
        let (name, pos) = self.identifier("a member name")?;
        if self.peek_punct("(") {
            // method signature
            self.punct("(")?;
            let mut params = Vec::new();
            if !self.peek_punct(")") {
                loop {
                    let (param_name, _) = self.identifier("a parameter name")?;
                    let ty = self.type_name()?;
                    params.push((param_name, ty));
                    if !self.try_punct(",") {
                        break;
                    }
                }
            }
            self.punct(")")?;
            let ret = if self.peek_type_name() { Some(self.type_name()?) } else { None };
            return Ok(MemberDecl { name, body: MemberBody::Method { params, ret }, pos });
        }
        if self.peek_keyword("SET") {
            self.keyword("SET")?;
            self.keyword("OF")?;
            self.punct("(")?;
            let attrs = self.member_list()?;
            self.punct(")")?;
            let key = if self.try_keyword("KEY") { self.name_list_after_key()? } else { Vec::new() };
            return Ok(MemberDecl { name, body: MemberBody::SetOf { attrs, key }, pos });
        }
        let ty = self.type_name()?;
        let body = match ty {
            TypeName::Class(class) => MemberBody::Reference(class),
            scalar => MemberBody::Scalar(scalar),
        };
        Ok(MemberDecl { name, body, pos })
    }

    fn name_list_after_key(&mut self) -> Result<Vec<String>, ParseError> {
        self.punct("(")?;
        let mut names = Vec::new();
        loop {
            names.push(self.identifier("a key attribute name")?.0);
            if !self.try_punct(",") {
                break;
            }
        }
        self.punct(")")?;
        Ok(names)
    }

    fn peek_type_name(&self) -> bool {
        match self.peek_token() {
            Some(t) if t.kind == TokenKind::Identifier => true,
            Some(t) if t.kind == TokenKind::Keyword => matches!(
                t.text.to_ascii_uppercase().as_str(),
                "STRING" | "INTEGER" | "FLOAT" | "DATETIME" | "BOOLEAN"
            ),
            _ => false,
        }
    }

    fn type_name(&mut self) -> Result<TypeName, ParseError> {
        let Some(token) = self.peek_token() else {
            return Err(self.unexpected("a type name"));
        };
        let ty = match token.kind {
            TokenKind::Keyword => match token.text.to_ascii_uppercase().as_str() {
                "STRING" => TypeName::String,
                "INTEGER" => TypeName::Integer,
                "FLOAT" => TypeName::Float,
                "DATETIME" => TypeName::Datetime,
                "BOOLEAN" => TypeName::Boolean,
                _ => return Err(self.unexpected("a type name")),
            },
            TokenKind::Identifier => TypeName::Class(token.text.clone()),
            _ => return Err(self.unexpected("a type name")),
        };
        self.at += 1;
        Ok(ty)
    }

    fn alter_realize(&mut self) -> Result<Stmt, ParseError> {
        let pos = self.keyword("ALTER")?;
        let (class, _) = self.identifier("a class name")?;
        self.keyword("REALIZE")?;
        let mut targets = Vec::new();
        loop {
            let (name, _) = self.identifier("a member name")?;
            let params = if self.peek_punct("(") {
                self.punct("(")?;
                let mut params = Vec::new();
                if !self.peek_punct(")") {
                    loop {
                        let (param_name, _) = self.identifier("a parameter name")?;
                        let ty = self.type_name()?;
                        params.push((param_name, ty));
                        if !self.try_punct(",") {
                            break;
                        }
                    }
                }
                self.punct(")")?;
                Some(params)
            } else {
                None
            };
            targets.push(RealizeTarget { name, params });
            if !self.try_punct(",") {
                break;
            }
        }
        self.keyword("AS")?;
        if self.try_keyword("STORED") {
            self.finish_statement(false)?;
            return Ok(Stmt::AlterRealize(AlterRealize {
                class,
                targets,
                body: RealizeBody::Stored,
                pos,
            }));
        }
        if self.peek_keyword("SELECT") {
            let select = self.select()?;
            self.finish_statement(false)?;
            return Ok(Stmt::AlterRealize(AlterRealize {
                class,
                targets,
                body: RealizeBody::Query(select),
                pos,
            }));
        }
        if self.peek_keyword("BEGIN") {
            let statements = self.block()?;
            self.finish_statement(true)?;
            return Ok(Stmt::AlterRealize(AlterRealize {
                class,
                targets,
                body: RealizeBody::Procedure(statements),
                pos,
            }));
        }
        Err(self.unexpected("`STORED`, `SELECT` or `BEGIN`"))
    }

    fn block(&mut self) -> Result<Vec<Stmt>, ParseError> {
        self.keyword("BEGIN")?;
        let mut statements = Vec::new();
        while !self.peek_keyword("END") {
            if self.at_end() {
                return Err(self.unexpected("`END`"));
            }
            statements.push(self.statement(true)?);
        }
        self.keyword("END")?;
        Ok(statements)
    }

    fn new_clause(&mut self) -> Result<NewStmt, ParseError> {
        let pos = self.keyword("NEW")?;
        let (class, _) = self.identifier("a class name")?;
        let mut initializers = Vec::new();
        if self.try_keyword("WITH") {
            self.keyword("SET")?;
            loop {
                match self.peek_token() {
                    Some(t) if t.kind == TokenKind::PathDot => {
                        self.bump();
                    }
                    _ => return Err(self.unexpected("`.` starting a component initializer")),
                }
                let (component, _) = self.identifier("a component name")?;
                self.assign_op()?;
                let value = self.expr()?;
                initializers.push((component, value));
                if !self.try_punct(",") {
                    break;
                }
            }
        }
        Ok(NewStmt { class, initializers, pos })
    }

    fn destroy(&mut self) -> Result<Stmt, ParseError> {
        let pos = self.keyword("DESTROY")?;
        let (class, _) = self.identifier("a class name")?;
        let predicate = if self.try_punct("[") {
            let pred = self.expr()?;
            self.punct("]")?;
            Some(pred)
        } else {
            None
        };
        self.finish_statement(false)?;
        Ok(Stmt::Destroy(DestroyStmt { class, predicate, pos }))
    }

    fn exec(&mut self) -> Result<Stmt, ParseError> {
        let pos = self.keyword("EXEC")?;
        let (class, _) = self.identifier("a class name")?;
        let predicate = if self.try_punct("[") {
            let pred = self.expr()?;
            self.punct("]")?;
            Some(pred)
        } else {
            None
        };
        match self.peek_token() {
            Some(t) if t.kind == TokenKind::PathDot => {
                self.bump();
            }
            _ => return Err(self.unexpected("`.` before the method name")),
        }
        let (method, _) = self.identifier("a method name")?;
        self.punct("(")?;
        let mut args = Vec::new();
        if !self.peek_punct(")") {
            loop {
                args.push(self.expr()?);
                if !self.try_punct(",") {
                    break;
                }
            }
        }
        self.punct(")")?;
        self.finish_statement(false)?;
        Ok(Stmt::Exec(ExecStmt { class, predicate, method, args, pos }))
    }

    fn insert(&mut self) -> Result<Stmt, ParseError> {
        let pos = self.keyword("INSERT")?;
        let target = self.path()?;
        self.keyword("VALUES")?;
        let mut rows = Vec::new();
        loop {
            self.punct("(")?;
            let mut row = Vec::new();
            if !self.peek_punct(")") {
                loop {
                    row.push(self.expr()?);
                    if !self.try_punct(",") {
                        break;
                    }
                }
            }
            self.punct(")")?;
            rows.push(row);
            if !self.try_punct(",") {
                break;
            }
        }
        self.finish_statement(false)?;
        Ok(Stmt::Insert(InsertStmt { target, rows, pos }))
    }

    fn delete(&mut self) -> Result<Stmt, ParseError> {
        let pos = self.keyword("DELETE")?;
        let target = self.path()?;
        let where_clause = if self.try_keyword("WHERE") { Some(self.expr()?) } else { None };
        self.finish_statement(false)?;
        Ok(Stmt::Delete(DeleteStmt { target, where_clause, pos }))
    }

    fn declare(&mut self) -> Result<Stmt, ParseError> {
        let pos = self.keyword("DECLARE")?;
        let (name, _) = self.identifier("a variable name")?;
        let type_name = self.type_name()?;
        self.finish_statement(false)?;
        Ok(Stmt::Declare(DeclareStmt { name, type_name, pos }))
    }

    fn if_statement(&mut self) -> Result<Stmt, ParseError> {
        let pos = self.keyword("IF")?;
        self.punct("(")?;
        let condition = self.expr()?;
        self.punct(")")?;
        self.keyword("THEN")?;
        let then_branch = Box::new(self.statement(true)?);
        let else_branch = if self.try_keyword("ELSE") {
            Some(Box::new(self.statement(true)?))
        } else {
            None
        };
        Ok(Stmt::If(IfStmt { condition, then_branch, else_branch, pos }))
    }

    fn return_statement(&mut self) -> Result<Stmt, ParseError> {
        let pos = self.keyword("RETURN")?;
        let value = self.expr()?;
        self.finish_statement(false)?;
        Ok(Stmt::Return(ReturnStmt { value, pos }))
    }

    fn select(&mut self) -> Result<SelectStmt, ParseError> {
        let pos = self.keyword("SELECT")?;
        let mut items = Vec::new();
        loop {
            let expr = self.expr()?;
            let alias = if self.try_keyword("AS") {
                Some(self.identifier("an output name")?.0)
            } else {
                None
            };
            items.push(SelectItem { expr, alias });
            if !self.try_punct(",") {
                break;
            }
        }
        self.keyword("FROM")?;
        let from = self.path()?;
        let from_alias = if self.peek_token().is_some_and(|t| t.kind == TokenKind::AliasSigil) {
            self.bump();
            Some(self.identifier("an alias name")?.0)
        } else {
            None
        };
        let where_clause = if self.try_keyword("WHERE") { Some(self.expr()?) } else { None };
        let mut group_by = Vec::new();
        if self.try_keyword("GROUP") {
            self.keyword("BY")?;
            loop {
                group_by.push(self.path()?);
                if !self.try_punct(",") {
                    break;
                }
            }
        }
        Ok(SelectStmt { items, from, from_alias, where_clause, group_by, pos })
    }

    // -- paths and expressions ---------------------------------------------

    fn path(&mut self) -> Result<Path, ParseError> {
        let pos = self.here();
        let root = match self.peek_token() {
            Some(t) if t.kind == TokenKind::AliasSigil => {
                self.bump();
                let (alias, _) = self.identifier("an alias name")?;
                match self.peek_token() {
                    Some(t) if t.kind == TokenKind::PathDot => {
                        self.bump();
                    }
                    _ => return Err(self.unexpected("`.` after the alias")),
                }
                PathRoot::Alias(alias)
            }
            Some(t) if t.kind == TokenKind::PathDot => {
                self.bump();
                PathRoot::ContextDot
            }
            Some(t) if t.kind == TokenKind::Identifier => PathRoot::Bare,
            _ => return Err(self.unexpected("a path")),
        };
        let mut segments = vec![self.path_segment()?];
        while self.peek_token().is_some_and(|t| t.kind == TokenKind::PathDot) {
            self.bump();
            segments.push(self.path_segment()?);
        }
        Ok(Path { root, segments, pos })
    }

    fn path_segment(&mut self) -> Result<PathSegment, ParseError> {
        let (name, pos) = self.identifier("a path segment name")?;
        let predicate = if self.try_punct("[") {
            let pred = self.expr()?;
            self.punct("]")?;
            Some(pred)
        } else {
            None
        };
        Ok(PathSegment { name, predicate, pos })
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        self.or_expr()
    }

    fn or_expr(&mut self) -> Result<Expr, ParseError> {
        let mut left = self.and_expr()?;
        while self.peek_keyword("OR") {
            let pos = self.keyword("OR")?;
            let right = self.and_expr()?;
            left = Expr::new(ExprKind::Or(Box::new(left), Box::new(right)), pos);
        }
        Ok(left)
    }

    fn and_expr(&mut self) -> Result<Expr, ParseError> {
        let mut left = self.not_expr()?;
        while self.peek_keyword("AND") {
            let pos = self.keyword("AND")?;
            let right = self.not_expr()?;
            left = Expr::new(ExprKind::And(Box::new(left), Box::new(right)), pos);
        }
        Ok(left)
    }

    fn not_expr(&mut self) -> Result<Expr, ParseError> {
        if self.peek_keyword("NOT") {
            let pos = self.keyword("NOT")?;
            let operand = self.not_expr()?;
            return Ok(Expr::new(ExprKind::Not(Box::new(operand)), pos));
        }
        self.cmp_expr()
    }

    fn cmp_expr(&mut self) -> Result<Expr, ParseError> {
        let left = self.add_expr()?;
        if self.peek_keyword("IS") {
            let pos = self.keyword("IS")?;
            if self.try_keyword("NOT") {
                self.keyword("NULL")?;
                return Ok(Expr::new(ExprKind::IsNotNull(Box::new(left)), pos));
            }
            self.keyword("NULL")?;
            return Ok(Expr::new(ExprKind::IsNull(Box::new(left)), pos));
        }
        let op = match self.peek_token() {
            Some(t) if t.is_punct("=") => CmpOp::Eq,
            Some(t) if t.is_punct("<>") => CmpOp::Ne,
            Some(t) if t.is_punct("<") => CmpOp::Lt,
            Some(t) if t.is_punct("<=") => CmpOp::Le,
            Some(t) if t.is_punct(">") => CmpOp::Gt,
            Some(t) if t.is_punct(">=") => CmpOp::Ge,
            _ => return Ok(left),
        };
        let pos = self.bump().unwrap().pos;
        let right = self.add_expr()?;
        Ok(Expr::new(ExprKind::Cmp(op, Box::new(left), Box::new(right)), pos))
    }

    fn add_expr(&mut self) -> Result<Expr, ParseError> {
        let mut left = self.mul_expr()?;
        loop {
            let op = match self.peek_token() {
                Some(t) if t.is_punct("+") => ArithOp::Add,
                Some(t) if t.is_punct("-") => ArithOp::Sub,
                _ => break,
            };
            let pos = self.bump().unwrap().pos;
            let right = self.mul_expr()?;
            left = Expr::new(ExprKind::Arith(op, Box::new(left), Box::new(right)), pos);
        }
        Ok(left)
    }

    fn mul_expr(&mut self) -> Result<Expr, ParseError> {
        let mut left = self.unary_expr()?;
        loop {
            let op = match self.peek_token() {
                Some(t) if t.is_punct("*") => ArithOp::Mul,
                Some(t) if t.is_punct("/") => ArithOp::Div,
                _ => break,
            };
            let pos = self.bump().unwrap().pos;
            let right = self.unary_expr()?;
            left = Expr::new(ExprKind::Arith(op, Box::new(left), Box::new(right)), pos);
        }
        Ok(left)
    }

    fn unary_expr(&mut self) -> Result<Expr, ParseError> {
        if self.peek_punct("-") {
            let pos = self.punct("-")?;
            let operand = self.unary_expr()?;
            return Ok(Expr::new(ExprKind::Neg(Box::new(operand)), pos));
        }
        self.primary()
    }

    fn aggregate_fn(&self) -> Option<AggFn> {
        let token = self.peek_token()?;
        if token.kind != TokenKind::Keyword {
            return None;
        }
        match token.text.to_ascii_uppercase().as_str() {
            "SUM" => Some(AggFn::Sum),
            "COUNT" => Some(AggFn::Count),
            "MIN" => Some(AggFn::Min),
            "MAX" => Some(AggFn::Max),
            "AVG" => Some(AggFn::Avg),
            _ => None,
        }
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let Some(token) = self.peek_token() else {
            return Err(self.unexpected("an expression"));
        };
        let pos = token.pos;
        match token.kind {
            TokenKind::StringLiteral => {
                let value = token.value.clone().unwrap_or_default();
                self.bump();
                Ok(Expr::new(ExprKind::Literal(Literal::String(value)), pos))
            }
            TokenKind::DatetimeLiteral => {
                let value = token.value.clone().unwrap_or_default();
                let secs = Scalar::parse_datetime(&value)
                    .ok_or_else(|| self.error("invalid datetime literal"))?;
                self.bump();
                Ok(Expr::new(ExprKind::Literal(Literal::Datetime(secs)), pos))
            }
            TokenKind::IntegerLiteral => {
                let value: i64 = token
                    .text
                    .parse()
                    .map_err(|_| self.error("integer literal out of range"))?;
                self.bump();
                Ok(Expr::new(ExprKind::Literal(Literal::Integer(value)), pos))
            }
            TokenKind::FloatLiteral => {
                let value: f64 =
                    token.text.parse().map_err(|_| self.error("invalid float literal"))?;
                self.bump();
                Ok(Expr::new(ExprKind::Literal(Literal::Float(value)), pos))
            }
            TokenKind::Keyword => {
                if token.is_keyword("NULL") {
                    self.bump();
                    return Ok(Expr::new(ExprKind::Literal(Literal::Null), pos));
                }
                if token.is_keyword("TRUE") {
                    self.bump();
                    return Ok(Expr::new(ExprKind::Literal(Literal::Boolean(true)), pos));
                }
                if token.is_keyword("FALSE") {
                    self.bump();
                    return Ok(Expr::new(ExprKind::Literal(Literal::Boolean(false)), pos));
                }
                if token.is_keyword("SELECT") {
                    let select = self.select()?;
                    return Ok(Expr::new(ExprKind::SubSelect(Box::new(select)), pos));
                }
                if token.is_keyword("NEW") {
                    let new_stmt = self.new_clause()?;
                    return Ok(Expr::new(ExprKind::New(Box::new(new_stmt)), pos));
                }
                if let Some(func) = self.aggregate_fn() {
                    self.bump();
                    self.punct("(")?;
                    let path = self.path()?;
                    self.punct(")")?;
                    return Ok(Expr::new(ExprKind::Aggregate(func, path), pos));
                }
                Err(self.unexpected("an expression"))
            }
            TokenKind::Punctuation if token.is_punct("(") => {
                self.bump();
                let inner = self.expr()?;
                self.punct(")")?;
                Ok(inner)
            }
            TokenKind::Identifier | TokenKind::PathDot | TokenKind::AliasSigil => {
                let path = self.path()?;
                Ok(Expr::new(ExprKind::Path(path), pos))
            }
            _ => Err(self.unexpected("an expression")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse_ok(source: &str) -> Stmt {
        parse_statement(source).unwrap_or_else(|e| panic!("parse failed for {source:?}: {e}"))
    }

    #[test]
    fn docs_class_block_parses() {
        let stmt = parse_ok(
            "CREATE CLASS DOCS\n\
             ( DocN STRING,\n  Date DATETIME,\n  Comment STRING,\n  Cntr CONTRACTORS,\n\
             \x20 Items SET OF\n  ( Art STRING,\n    Pieces INTEGER\n  )KEY(Art),\n\
             \x20 DoShip(inDate DATETIME) //method\n)KEY(DocN)\nREFERENCE Items(.Art)\nON GOODS(.Art); //foreign key",
        );
        let Stmt::CreateClass(class) = stmt else { panic!("expected CreateClass") };
        assert_eq!(class.members.len(), 6);
        assert_eq!(class.class_key, Some(vec!["DocN".to_string()]));
        assert_eq!(class.references.len(), 1);
        assert_eq!(class.references[0].component, "Items");
        assert_eq!(class.references[0].target_class, "GOODS");
    }

    #[test]
    fn sales_class_has_two_parents() {
        let stmt = parse_ok(
            "CREATE CLASS SALES EXTEND DOCS, VALUERECORDS // two parent classes\n\
             ( SaledItems SET OF //own component-relation\n\
             \x20 ( Art STRING,\n    Price FLOAT,\n    Pieces INTEGER\n  )KEY(Art, Price)\n);",
        );
        let Stmt::CreateClass(class) = stmt else { panic!("expected CreateClass") };
        assert_eq!(class.parents, vec!["DOCS".to_string(), "VALUERECORDS".to_string()]);
        let MemberBody::SetOf { key, .. } = &class.members[0].body else {
            panic!("expected SET OF")
        };
        assert_eq!(key, &["Art".to_string(), "Price".to_string()]);
    }

    #[test]
    fn goods_block_with_semicolon_separator_parses() {
        let stmt = parse_ok(
            "CREATE CLASS GOODS\n( Art STRING;\n  Turnover SET OF\n  ( DocN STRING,\n\
             \x20   Cntr CONTRACTORS,\n    Pieces INTEGER\n  )KEY(DocN),\n  Pieces INTEGER\n)KEY(Art);",
        );
        let Stmt::CreateClass(class) = stmt else { panic!("expected CreateClass") };
        assert_eq!(class.members.len(), 3);
    }

    #[test]
    fn select_with_paths_parses() {
        let stmt = parse_ok("SELECT .Name, .Bank.Name FROM GOODS.Turnover.Cntr;");
        let Stmt::Select(select) = stmt else { panic!("expected Select") };
        assert_eq!(select.items.len(), 2);
        assert_eq!(select.from.segments.len(), 3);
        assert_eq!(select.from.root, PathRoot::Bare);
    }

    #[test]
    fn realization_query_with_alias_and_group_by() {
        let stmt = parse_ok(
            "ALTER GOODS REALIZE Turnover AS\nSELECT #g.DocN,\n       #g.Cntr,\n\
             \x20      SUM(#g.Items.Pieces) AS Pieces\nFROM DOCS #g\nWHERE #g.Items.Art = Art\n\
             GROUP BY\n       #g.DocN,\n       #g.Cntr;",
        );
        let Stmt::AlterRealize(alter) = stmt else { panic!("expected AlterRealize") };
        let RealizeBody::Query(select) = &alter.body else { panic!("expected query body") };
        assert_eq!(select.from_alias.as_deref(), Some("g"));
        assert_eq!(select.group_by.len(), 2);
        assert!(matches!(select.items[2].expr.kind, ExprKind::Aggregate(AggFn::Sum, _)));
        assert_eq!(select.items[2].alias.as_deref(), Some("Pieces"));
    }

    #[test]
    fn procedure_bodies_parse() {
        let stmt = parse_ok(
            "ALTER GOODS REALIZE Pieces AS\nBEGIN\n  DECLARE tmpPieces INTEGER;\n\
             \x20 tmpPieces :=\n  SELECT SUM(#g.Items.Pieces) AS Pieces\n  FROM DOCS #g\n\
             \x20 WHERE #g.Items.Art = Art;\n  IF(tmpPieces IS NULL)\n  THEN tmpPieces := 0;\n\
             \x20 RETURN tmpPieces;\nEND",
        );
        let Stmt::AlterRealize(alter) = stmt else { panic!("expected AlterRealize") };
        let RealizeBody::Procedure(body) = &alter.body else { panic!("expected procedure") };
        assert_eq!(body.len(), 4);
        assert!(matches!(body[0], Stmt::Declare(_)));
        assert!(matches!(body[2], Stmt::If(_)));
    }

    #[test]
    fn doship_realization_parses() {
        let stmt = parse_ok(
            "ALTER DOCS REALIZE DoShip(inDate DATETIME) AS\nBEGIN\n  IF(Date IS NULL) THEN\n\
             \x20 BEGIN\n    Date := inDate;\n    Comment := \"Shipped!\";\n  END\nEND",
        );
        let Stmt::AlterRealize(alter) = stmt else { panic!("expected AlterRealize") };
        assert!(alter.targets[0].params.is_some());
        let RealizeBody::Procedure(body) = &alter.body else { panic!("expected procedure") };
        let Stmt::If(if_stmt) = &body[0] else { panic!("expected IF") };
        assert!(matches!(*if_stmt.then_branch, Stmt::Block(..)));
    }

    #[test]
    fn nested_new_parses() {
        let stmt = parse_ok(
            "NEW CONTRACTORS WITH SET\n  .Name:=\"TheShop\",\n  .Bank := (NEW BANKS WITH SET\n\
             \x20           .Name:=\"TheBank\"),\n  .ID:=\"CoID001\";",
        );
        let Stmt::New(new_stmt) = stmt else { panic!("expected New") };
        assert_eq!(new_stmt.initializers.len(), 3);
        assert!(matches!(new_stmt.initializers[1].1.kind, ExprKind::New(_)));
    }

    #[test]
    fn destroy_and_exec_parse() {
        let stmt = parse_ok("DESTROY CONTRACTORS[.ID=\"CoID001\"];");
        let Stmt::Destroy(destroy) = stmt else { panic!("expected Destroy") };
        assert!(destroy.predicate.is_some());

        let stmt = parse_ok("EXEC DOCS[.Date >= '2024-01-01T00:00:00Z'].DoShip('2024-01-02T00:00:00Z');");
        let Stmt::Exec(exec) = stmt else { panic!("expected Exec") };
        assert_eq!(exec.method, "DoShip");
        assert_eq!(exec.args.len(), 1);
    }

    #[test]
    fn paths_parse_with_predicates() {
        let path = parse_path("Cntr.Bank").unwrap();
        assert_eq!(path.segments.len(), 2);
        assert!(!path.has_predicates());

        let path = parse_path("GOODS[.Art = \"A1\"].Turnover.Cntr").unwrap();
        assert_eq!(path.segments.len(), 3);
        assert!(path.segments[0].predicate.is_some());

        let path = parse_path("X").unwrap();
        assert_eq!(path.segments.len(), 1);
    }

    #[test]
    fn statement_position_is_tracked() {
        let err = parse_script("NEW BANKS;\nNEW NOPE NOPE;").unwrap_err();
        assert_eq!(err.pos.line, 2);
    }

    #[test]
    fn trailing_tokens_are_rejected() {
        let err = parse_statement("NEW BANKS; NEW BANKS;").unwrap_err();
        assert!(err.message.contains("trailing input"));
    }

    #[test]
    fn loops_are_reserved() {
        let err = parse_statement("WHILE (1 = 1) BEGIN END").unwrap_err();
        assert!(err.message.contains("loops are not supported"));
    }

    #[test]
    fn body_statements_rejected_at_top_level() {
        let err = parse_statement("RETURN 1;").unwrap_err();
        assert!(err.message.contains("procedure body"));
    }

    #[test]
    fn assignment_vs_path_query() {
        let stmt = parse_ok("DOCS[.DocN = \"D1\"].Comment := \"X\";");
        assert!(matches!(stmt, Stmt::Assign(_)));
        let stmt = parse_ok("GOODS[.Art = \"A1\"].Turnover;");
        assert!(matches!(stmt, Stmt::PathQuery(_)));
    }

    #[test]
    fn insert_and_delete_component_rows() {
        let stmt = parse_ok("INSERT DOCS[.DocN = \"D1\"].Items VALUES (\"A1\", 5), (\"A2\", 2);");
        let Stmt::Insert(ins) = stmt else { panic!("expected Insert") };
        assert_eq!(ins.rows.len(), 2);

        let stmt = parse_ok("DELETE DOCS[.DocN = \"D1\"].Items WHERE .Art = \"A1\";");
        assert!(matches!(stmt, Stmt::Delete(_)));
    }

    #[test]
    fn precedence_is_conventional() {
        let expr = parse_expression("1 + 2 * 3 = 7 AND NOT .X IS NULL").unwrap();
        let ExprKind::And(left, right) = expr.kind else { panic!("expected AND") };
        assert!(matches!(left.kind, ExprKind::Cmp(CmpOp::Eq, _, _)));
        assert!(matches!(right.kind, ExprKind::Not(_)));
    }
}
