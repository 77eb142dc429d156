//! A lossless lexical scanner for C and C++ source.
//!
//! No preprocessing and no parsing: the scanner only splits the text into
//! tokens whose concatenation reproduces the input byte for byte. That is
//! enough to strip comments and rename identifiers without disturbing
//! anything else.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenKind {
    Identifier,
    Keyword,
    StringLit,
    CharLit,
    Number,
    Comment,
    Preprocessor,
    Punct,
    Whitespace,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Token<'a> {
    pub kind: TokenKind,
    pub text: &'a str,
    /// Byte offset of the token's first byte.
    pub offset: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LexErrorKind {
    UnterminatedComment,
    UnterminatedString,
    UnterminatedChar,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind} at byte offset {offset}")]
pub struct LexError {
    pub kind: LexErrorKind,
    pub offset: usize,
}

impl fmt::Display for LexErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LexErrorKind::UnterminatedComment => "unterminated block comment",
            LexErrorKind::UnterminatedString => "unterminated string literal",
            LexErrorKind::UnterminatedChar => "unterminated character literal",
        })
    }
}

/// The C11 keyword list.
pub const C_KEYWORDS: &[&str] = &[
    "auto", "break", "case", "char", "const", "continue", "default", "do", "double", "else", "enum",
    "extern", "float", "for", "goto", "if", "inline", "int", "long", "register", "restrict", "return",
    "short", "signed", "sizeof", "static", "struct", "switch", "typedef", "union", "unsigned", "void",
    "volatile", "while", "_Alignas", "_Alignof", "_Atomic", "_Bool", "_Complex", "_Generic",
    "_Imaginary", "_Noreturn", "_Static_assert", "_Thread_local",
];

pub fn is_c_keyword(s: &str) -> bool {
    C_KEYWORDS.contains(&s)
}

const PUNCTUATORS: &[&str] = &[
    "<<=", ">>=", "...", "->*", "<=>", "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=", "&&", "||",
    "*=", "/=", "%=", "+=", "-=", "&=", "^=", "|=", "##", "::", ".*",
];

const STRING_PREFIXES: &[&str] = &["L", "u", "U", "u8"];
const RAW_STRING_PREFIXES: &[&str] = &["R", "LR", "uR", "UR", "u8R"];

fn is_ident_start(b: u8) -> bool {
    b.is_ascii_alphabetic() || b == b'_' || b >= 0x80
}

fn is_ident_continue(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_' || b >= 0x80
}

fn is_space(b: u8) -> bool {
    matches!(b, b' ' | b'\t' | b'\n' | b'\r' | 0x0b | 0x0c)
}

/// Length of a backslash-newline at `i`, if there is one.
fn line_splice(bytes: &[u8], i: usize) -> Option<usize> {
    if bytes.get(i) != Some(&b'\\') {
        return None;
    }
    match (bytes.get(i + 1), bytes.get(i + 2)) {
        (Some(b'\n'), _) => Some(2),
        (Some(b'\r'), Some(b'\n')) => Some(3),
        _ => None,
    }
}

struct Lexer<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    at_line_start: bool,
    tokens: Vec<Token<'a>>,
}

/// Splits `source` into tokens. Concatenating the token texts yields
/// `source` exactly.
pub fn tokenize_c(source: &str) -> Result<Vec<Token<'_>>, LexError> {
    let mut lx = Lexer {
        src: source,
        bytes: source.as_bytes(),
        pos: 0,
        at_line_start: true,
        tokens: Vec::new(),
    };
    lx.run()?;
    Ok(lx.tokens)
}

impl<'a> Lexer<'a> {
    fn push(&mut self, kind: TokenKind, start: usize) {
        self.tokens.push(Token {
            kind,
            text: &self.src[start..self.pos],
            offset: start,
        });
    }

    fn peek(&self, ahead: usize) -> Option<u8> {
        self.bytes.get(self.pos + ahead).copied()
    }

    fn run(&mut self) -> Result<(), LexError> {
        while self.pos < self.bytes.len() {
            let start = self.pos;
            let b = self.bytes[self.pos];
            if is_space(b) || line_splice(self.bytes, self.pos).is_some() {
                self.whitespace();
                self.push(TokenKind::Whitespace, start);
                continue;
            }
            if b == b'/' && self.peek(1) == Some(b'/') {
                self.line_comment();
                self.push(TokenKind::Comment, start);
                continue;
            }
            if b == b'/' && self.peek(1) == Some(b'*') {
                self.block_comment(start)?;
                self.push(TokenKind::Comment, start);
                continue;
            }
            let line_start = std::mem::replace(&mut self.at_line_start, false);
            if b == b'#' && line_start {
                self.directive();
                self.push(TokenKind::Preprocessor, start);
            } else if b == b'"' {
                self.quoted(b'"', start)?;
                self.push(TokenKind::StringLit, start);
            } else if b == b'\'' {
                self.quoted(b'\'', start)?;
                self.push(TokenKind::CharLit, start);
            } else if b.is_ascii_digit() || (b == b'.' && self.peek(1).is_some_and(|c| c.is_ascii_digit())) {
                self.number();
                self.push(TokenKind::Number, start);
            } else if is_ident_start(b) {
                let kind = self.identifier_or_literal(start)?;
                self.push(kind, start);
            } else {
                self.punct();
                self.push(TokenKind::Punct, start);
            }
        }
        Ok(())
    }

    fn whitespace(&mut self) {
        while self.pos < self.bytes.len() {
            if let Some(n) = line_splice(self.bytes, self.pos) {
                self.pos += n;
                continue;
            }
            let b = self.bytes[self.pos];
            if !is_space(b) {
                break;
            }
            if b == b'\n' {
                self.at_line_start = true;
            }
            self.pos += 1;
        }
    }

    /// Runs to the end of the line, honoring line splices; the newline
    /// itself is left for the whitespace token.
    fn line_comment(&mut self) {
        while self.pos < self.bytes.len() {
            if let Some(n) = line_splice(self.bytes, self.pos) {
                self.pos += n;
                continue;
            }
            if self.at_newline() {
                break;
            }
            self.pos += 1;
        }
    }

    /// At `\n` or at the `\r` of a `\r\n` pair.
    fn at_newline(&self) -> bool {
        match self.bytes[self.pos] {
            b'\n' => true,
            b'\r' => self.peek(1) == Some(b'\n'),
            _ => false,
        }
    }

    fn block_comment(&mut self, start: usize) -> Result<(), LexError> {
        match self.src[self.pos + 2..].find("*/") {
            Some(i) => {
                self.pos += 2 + i + 2;
                Ok(())
            }
            None => Err(LexError {
                kind: LexErrorKind::UnterminatedComment,
                offset: start,
            }),
        }
    }

    /// A `#` directive up to the end of its logical line. A comment inside
    /// the directive ends the token so that comments are always separate
    /// tokens.
    fn directive(&mut self) {
        let mut in_string = false;
        while self.pos < self.bytes.len() {
            if let Some(n) = line_splice(self.bytes, self.pos) {
                self.pos += n;
                continue;
            }
            if self.at_newline() {
                break;
            }
            let b = self.bytes[self.pos];
            if in_string {
                if b == b'\\' && self.pos + 1 < self.bytes.len() && self.bytes[self.pos + 1] != b'\n' {
                    self.pos += 2;
                    continue;
                }
                if b == b'"' {
                    in_string = false;
                }
            } else if b == b'"' {
                in_string = true;
            } else if b == b'/' && matches!(self.peek(1), Some(b'/') | Some(b'*')) {
                break;
            }
            self.pos += 1;
        }
    }

    fn quoted(&mut self, quote: u8, start: usize) -> Result<(), LexError> {
        let kind = if quote == b'"' {
            LexErrorKind::UnterminatedString
        } else {
            LexErrorKind::UnterminatedChar
        };
        self.pos += 1;
        while self.pos < self.bytes.len() {
            let b = self.bytes[self.pos];
            if b == b'\\' {
                // escape or line splice: skip the backslash and what follows
                self.pos += line_splice(self.bytes, self.pos).unwrap_or(2);
                continue;
            }
            if b == b'\n' {
                break;
            }
            self.pos += 1;
            if b == quote {
                return Ok(());
            }
        }
        Err(LexError { kind, offset: start })
    }

    fn raw_string(&mut self, start: usize) -> Result<(), LexError> {
        // at the opening quote of R"delim( ... )delim"
        let open = self.pos + 1;
        let Some(paren) = self.src[open..].find('(') else {
            return Err(LexError {
                kind: LexErrorKind::UnterminatedString,
                offset: start,
            });
        };
        let delim = &self.src[open..open + paren];
        let closing = format!("){delim}\"");
        match self.src[open + paren + 1..].find(&closing) {
            Some(i) => {
                self.pos = open + paren + 1 + i + closing.len();
                Ok(())
            }
            None => Err(LexError {
                kind: LexErrorKind::UnterminatedString,
                offset: start,
            }),
        }
    }

    fn number(&mut self) {
        self.pos += 1;
        while self.pos < self.bytes.len() {
            let b = self.bytes[self.pos];
            let prev = self.bytes[self.pos - 1];
            if matches!(b, b'+' | b'-') && matches!(prev, b'e' | b'E' | b'p' | b'P') {
                self.pos += 1;
            } else if b == b'\'' && self.peek(1).is_some_and(|c| c.is_ascii_alphanumeric()) {
                self.pos += 1;
            } else if is_ident_continue(b) || b == b'.' {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn identifier_or_literal(&mut self, start: usize) -> Result<TokenKind, LexError> {
        while self.pos < self.bytes.len() && is_ident_continue(self.bytes[self.pos]) {
            self.pos += 1;
        }
        let word = &self.src[start..self.pos];
        match self.peek(0) {
            Some(b'"') if RAW_STRING_PREFIXES.contains(&word) => {
                self.raw_string(start)?;
                return Ok(TokenKind::StringLit);
            }
            Some(q @ (b'"' | b'\'')) if STRING_PREFIXES.contains(&word) => {
                self.quoted(q, start)?;
                return Ok(if q == b'"' { TokenKind::StringLit } else { TokenKind::CharLit });
            }
            _ => {}
        }
        Ok(if is_c_keyword(word) {
            TokenKind::Keyword
        } else {
            TokenKind::Identifier
        })
    }

    fn punct(&mut self) {
        let rest = &self.src[self.pos..];
        let len = PUNCTUATORS
            .iter()
            .find(|p| rest.starts_with(**p))
            .map(|p| p.len())
            .unwrap_or_else(|| rest.chars().next().map_or(1, char::len_utf8));
        self.pos += len;
    }
}
