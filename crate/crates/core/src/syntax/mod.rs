//! Concrete syntax: `.loo` modules, statement lists, and `.cmail`
//! assertion files. See `docs/grammar.md` for the grammar.

mod lexer;
mod parser;
mod print;

use std::fmt;

pub use parser::{
    parse_assertion, parse_expr, parse_module, parse_module_spanned, parse_spec, parse_stmts, ModuleSpans,
};
pub use print::{print_assertion, print_expr, print_module, print_stmt, print_stmts};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct Pos {
    pub offset: usize,
    pub line: u32,
    pub col: u32,
}

/// A source range; `end` is exclusive.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Span {
    pub start: Pos,
    pub end: Pos,
}

impl Span {
    pub fn contains(&self, other: &Span) -> bool {
        self.start.offset <= other.start.offset && other.end.offset <= self.end.offset
    }

    pub fn to(self, other: Span) -> Span {
        Span { start: self.start, end: other.end }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub struct ParseError {
    pub span: Span,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.span.start.line, self.span.start.col, self.message)
    }
}

impl ParseError {
    /// Renders the error with the file name and the offending source line.
    pub fn render(&self, file: &str, src: &str) -> String {
        let line = src.lines().nth(self.span.start.line.saturating_sub(1) as usize).unwrap_or("");
        let width = if self.span.end.line == self.span.start.line {
            (self.span.end.col.saturating_sub(self.span.start.col)).max(1) as usize
        } else {
            1
        };
        format!(
            "{file}:{}:{}: {}\n  {line}\n  {}{}",
            self.span.start.line,
            self.span.start.col,
            self.message,
            " ".repeat(self.span.start.col.saturating_sub(1) as usize),
            "^".repeat(width)
        )
    }
}
