//! Source tokens. Each token records the whitespace/comment trivia that
//! precedes it, so a token stream reproduces the source exactly.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl Pos {
    pub fn new(line: u32, col: u32) -> Pos {
        Pos { line, col }
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}", self.line, self.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Identifier,
    Keyword,
    StringLiteral,
    IntegerLiteral,
    FloatLiteral,
    DatetimeLiteral,
    Punctuation,
    PathDot,
    AliasSigil,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    /// Exact source slice (including quotes for literals).
    pub text: String,
    /// Whitespace and comments preceding this token.
    pub leading: String,
    pub pos: Pos,
    /// Decoded content for string/datetime literals (escapes resolved).
    pub value: Option<String>,
}

impl Token {
    pub fn new(kind: TokenKind, text: impl Into<String>, leading: String, pos: Pos) -> Token {
        Token { kind, text: text.into(), leading, pos, value: None }
    }

    pub(crate) fn with_value(mut self, value: String) -> Token {
        self.value = Some(value);
        self
    }

    /// Keyword comparison: keywords are case-insensitive.
    pub fn is_keyword(&self, word: &str) -> bool {
        self.kind == TokenKind::Keyword && self.text.eq_ignore_ascii_case(word)
    }

    pub fn is_punct(&self, text: &str) -> bool {
        self.kind == TokenKind::Punctuation && self.text == text
    }
}
