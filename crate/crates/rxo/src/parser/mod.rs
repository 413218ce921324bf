//! Tokenizer, grammar and abstract syntax tree for the source language.

pub mod ast;
pub mod grammar;
pub mod lexer;
pub mod token;

pub use ast::{
    AlterRealize, AssignStmt, CreateClass, DeclareStmt, DeleteStmt, DestroyStmt, ExecStmt, Expr,
    ExprKind, IfStmt, InsertStmt, Literal, MemberBody, MemberDecl, NewStmt, Path, PathRoot,
    PathSegment, RealizeBody, RealizeTarget, RefClause, ReturnStmt, SelectItem, SelectStmt, Stmt,
    TypeName,
};
pub use grammar::{parse_expression, parse_path, parse_script, parse_statement, parse_tokens, ParseError};
pub use lexer::{tokenize, tokenize_full, LexError};
pub use token::{Pos, Token, TokenKind};
