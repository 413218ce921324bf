//! Tokenizer for the source language.
//!
//! `//` comments run to end of line and are kept as trivia; string literals
//! take `"` or `'` quotes with backslash escapes. A quoted literal whose body
//! is exactly an ISO-8601 UTC timestamp (`2024-01-02T00:00:00Z`) lexes as a
//! datetime literal.

use thiserror::Error;

use super::token::{Pos, Token, TokenKind};
use crate::kernel::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{pos}: {message}")]
pub struct LexError {
    pub pos: Pos,
    pub message: String,
}

pub const KEYWORDS: &[&str] = &[
    "ALTER", "AND", "AS", "AVG", "BEGIN", "BOOLEAN", "BY", "CLASS", "COUNT", "CREATE",
    "DATETIME", "DECLARE", "DELETE", "DESTROY", "ELSE", "END", "EXEC", "EXTEND", "FALSE",
    "FLOAT", "FOR", "FROM", "GROUP", "IF", "INSERT", "INTEGER", "IS", "KEY", "LOOP", "MAX",
    "MIN", "NEW", "NOT", "NULL", "OF", "ON", "OR", "REALIZE", "REFERENCE", "RETURN", "SELECT",
    "SET", "STORED", "STRING", "SUM", "THEN", "TRUE", "VALUES", "WHERE", "WHILE", "WITH",
];

pub fn is_keyword(word: &str) -> bool {
    KEYWORDS.iter().any(|k| k.eq_ignore_ascii_case(word))
}

struct Lexer<'a> {
    src: &'a [u8],
    text: &'a str,
    at: usize,
    line: u32,
    col: u32,
}

/// Tokenizes a statement or script. The trailing trivia after the last token
/// is returned alongside (needed to reproduce the source exactly).
pub fn tokenize_full(source: &str) -> Result<(Vec<Token>, String), LexError> {
    let mut lexer = Lexer { src: source.as_bytes(), text: source, at: 0, line: 1, col: 1 };
    let mut tokens = Vec::new();
    loop {
        let trivia_start = lexer.at;
        lexer.skip_trivia()?;
        let leading = lexer.text[trivia_start..lexer.at].to_string();
        if lexer.at >= lexer.src.len() {
            return Ok((tokens, leading));
        }
        tokens.push(lexer.next_token(leading)?);
    }
}

pub fn tokenize(source: &str) -> Result<Vec<Token>, LexError> {
    tokenize_full(source).map(|(tokens, _)| tokens)
}

impl<'a> Lexer<'a> {
    fn peek(&self) -> Option<u8> {
        self.src.get(self.at).copied()
    }

    fn peek_at(&self, offset: usize) -> Option<u8> {
        self.src.get(self.at + offset).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let byte = self.peek()?;
        self.at += 1;
        if byte == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(byte)
    }

    fn pos(&self) -> Pos {
        Pos::new(self.line, self.col)
    }

    fn skip_trivia(&mut self) -> Result<(), LexError> {
        loop {
            match self.peek() {
                Some(b) if b.is_ascii_whitespace() => {
                    self.bump();
                }
                Some(b'/') if self.peek_at(1) == Some(b'/') => {
                    while let Some(b) = self.peek() {
                        if b == b'\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                _ => return Ok(()),
            }
        }
    }

    fn next_token(&mut self, leading: String) -> Result<Token, LexError> {
        let pos = self.pos();
        let start = self.at;
        let byte = self.peek().expect("next_token called at EOF");

        if byte == b'"' || byte == b'\'' {
            return self.string_literal(leading, pos);
        }
        if byte.is_ascii_digit() {
            return self.number(leading, pos);
        }
        if byte.is_ascii_alphabetic() || byte == b'_' {
            while let Some(b) = self.peek() {
                if b.is_ascii_alphanumeric() || b == b'_' {
                    self.bump();
                } else {
                    break;
                }
            }
            let text = &self.text[start..self.at];
            let kind = if is_keyword(text) { TokenKind::Keyword } else { TokenKind::Identifier };
            return Ok(Token::new(kind, text, leading, pos));
        }
        match byte {
            b'.' => {
                self.bump();
                Ok(Token::new(TokenKind::PathDot, ".", leading, pos))
            }
            b'#' => {
                self.bump();
                Ok(Token::new(TokenKind::AliasSigil, "#", leading, pos))
            }
            b'<' => {
                self.bump();
                match self.peek() {
                    Some(b'=') => {
                        self.bump();
                        Ok(Token::new(TokenKind::Punctuation, "<=", leading, pos))
                    }
                    Some(b'>') => {
                        self.bump();
                        Ok(Token::new(TokenKind::Punctuation, "<>", leading, pos))
                    }
                    _ => Ok(Token::new(TokenKind::Punctuation, "<", leading, pos)),
                }
            }
            b'>' => {
                self.bump();
                if self.peek() == Some(b'=') {
                    self.bump();
                    Ok(Token::new(TokenKind::Punctuation, ">=", leading, pos))
                } else {
                    Ok(Token::new(TokenKind::Punctuation, ">", leading, pos))
                }
            }
            b'(' | b')' | b'[' | b']' | b',' | b';' | b'=' | b':' | b'+' | b'-' | b'*' | b'/' => {
                self.bump();
                Ok(Token::new(TokenKind::Punctuation, &self.text[start..self.at], leading, pos))
            }
            other => Err(LexError {
                pos,
                message: format!("illegal character `{}`", other as char),
            }),
        }
    }

    fn string_literal(&mut self, leading: String, pos: Pos) -> Result<Token, LexError> {
        let quote = self.bump().unwrap();
        let start = self.at - 1;
        let mut value = String::new();
        loop {
            match self.peek() {
                None | Some(b'\n') => {
                    return Err(LexError { pos, message: "unterminated string literal".into() })
                }
                Some(b'\\') => {
                    self.bump();
                    let escaped = self.bump().ok_or_else(|| LexError {
                        pos,
                        message: "unterminated string literal".into(),
                    })?;
                    match escaped {
                        b'n' => value.push('\n'),
                        b't' => value.push('\t'),
                        b'r' => value.push('\r'),
                        b'\\' => value.push('\\'),
                        b'"' => value.push('"'),
                        b'\'' => value.push('\''),
                        other => {
                            return Err(LexError {
                                pos,
                                message: format!("unknown escape `\\{}`", other as char),
                            })
                        }
                    }
                }
                Some(b) if b == quote => {
                    self.bump();
                    break;
                }
                Some(_) => {
                    // copy the full UTF-8 character
                    let ch_start = self.at;
                    self.bump();
                    while self.peek().is_some_and(|b| b & 0xC0 == 0x80) {
                        self.bump();
                    }
                    value.push_str(&self.text[ch_start..self.at]);
                }
            }
        }
        let text = &self.text[start..self.at];
        let kind = if Scalar::parse_datetime(&value).is_some() {
            TokenKind::DatetimeLiteral
        } else {
            TokenKind::StringLiteral
        };
        Ok(Token::new(kind, text, leading, pos).with_value(value))
    }

    fn number(&mut self, leading: String, pos: Pos) -> Result<Token, LexError> {
        let start = self.at;
        while self.peek().is_some_and(|b| b.is_ascii_digit()) {
            self.bump();
        }
        let mut kind = TokenKind::IntegerLiteral;
        if self.peek() == Some(b'.') && self.peek_at(1).is_some_and(|b| b.is_ascii_digit()) {
            kind = TokenKind::FloatLiteral;
            self.bump();
            while self.peek().is_some_and(|b| b.is_ascii_digit()) {
                self.bump();
            }
        }
        Ok(Token::new(kind, &self.text[start..self.at], leading, pos))
    }
}
