//! A small line-oriented language for pulse sequences.
//!
//! ```text
//! program   := (stmt NEWLINE)*
//! stmt      := laser | wait | mw | measure | sweep
//! laser     := 'laser' time ['power=' scalar] ['measure' time]
//! wait      := 'wait' time
//! mw        := 'mw' (time | 'pi' | 'pi/2') ['f=' freq] ['amp=' scalar] ['phase=' scalar]
//! measure   := 'measure' time
//! sweep     := 'sweep' IDENT qty '..' qty 'n=' INT '{' stmt* '}'
//! ```
//!
//! Any quantity slot may name an enclosing sweep variable instead. `phase` is in
//! degrees. `measure` attached to a laser integrates PL from the start of the
//! pulse; on its own it integrates with the laser off.

mod ast;
mod lexer;
mod parser;
mod serialize;
mod validate;

use std::fmt;

pub use ast::{
    sweep_values, Angle, Dimension, Laser, MwLength, Mw, PulseSequence, Quantity, Span, Statement, StatementKind,
    Sweep, Unit, Value,
};
pub use lexer::{tokenize, Token, TokenKind};
pub use parser::{parse, parse_str};
pub use serialize::{format_quantity, serialize};
pub use validate::{expand, validate, SweepPoint, ValidationContext};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SeqErrorKind {
    Lexical,
    Parse,
    Type,
    Validation,
    Expansion,
}

impl fmt::Display for SeqErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SeqErrorKind::Lexical => "lexical error",
            SeqErrorKind::Parse => "parse error",
            SeqErrorKind::Type => "type error",
            SeqErrorKind::Validation => "validation error",
            SeqErrorKind::Expansion => "expansion error",
        })
    }
}

/// Diagnostic with a source position and the set of tokens that would have been accepted.
#[derive(Clone, Debug, PartialEq)]
pub struct SeqError {
    pub kind: SeqErrorKind,
    pub span: Span,
    pub message: String,
    pub expected: Vec<String>,
}

impl SeqError {
    pub fn new(kind: SeqErrorKind, span: Span, message: impl Into<String>, expected: Vec<String>) -> Self {
        SeqError { kind, span, message: message.into(), expected }
    }

    /// Formats as `file:line:col: message`.
    pub fn with_file(&self, file: &str) -> String {
        format!("{file}:{self}")
    }
}

impl fmt::Display for SeqError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}: {}", self.span, self.kind, self.message)?;
        if !self.expected.is_empty() {
            write!(f, " (expected {})", self.expected.join(", "))?;
        }
        Ok(())
    }
}

impl std::error::Error for SeqError {}
