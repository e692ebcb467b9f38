use super::ast::*;
use super::lexer::{tokenize, Token, TokenKind};
use super::{SeqError, SeqErrorKind};

/// Words that cannot name a sweep variable.
pub(crate) const RESERVED: &[&str] =
    &["laser", "wait", "mw", "measure", "sweep", "pi", "f", "amp", "phase", "power", "n"];

const STATEMENT_START: &[&str] = &["laser", "wait", "mw", "measure", "sweep"];

struct Binding {
    name: String,
    dim: Dimension,
    used: bool,
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    scope: Vec<Binding>,
    eof: Span,
}

fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

fn dim_expectation(dim: Dimension) -> Vec<String> {
    let mut out: Vec<String> = Unit::ladder(dim).iter().map(|u| format!("number with unit {}", u.symbol())).collect();
    if dim == Dimension::Dimensionless {
        out.push("number".into());
    }
    out.push("sweep variable".into());
    out
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&'a Token> {
        self.tokens.get(self.pos)
    }

    fn here(&self) -> Span {
        match self.peek() {
            Some(t) => t.span,
            None => self.eof,
        }
    }

    fn unexpected(&self, expected: Vec<String>) -> SeqError {
        let found = self.peek().map_or("end of input".to_string(), |t| t.kind.describe());
        SeqError::new(SeqErrorKind::Parse, self.here(), format!("unexpected {found}"), expected)
    }

    fn peek_ident(&self) -> Option<&'a str> {
        match self.peek() {
            Some(Token { kind: TokenKind::Ident(name), .. }) => Some(name.as_str()),
            _ => None,
        }
    }

    fn expect(&mut self, kind: TokenKind) -> Result<&'a Token, SeqError> {
        match self.peek() {
            Some(t) if t.kind == kind => {
                self.pos += 1;
                Ok(t)
            }
            _ => Err(self.unexpected(vec![kind.describe()])),
        }
    }

    fn skip_newlines(&mut self) {
        while matches!(self.peek(), Some(Token { kind: TokenKind::Newline, .. })) {
            self.pos += 1;
        }
    }

    fn program(&mut self) -> Result<Vec<Statement>, SeqError> {
        let mut out = Vec::new();
        self.skip_newlines();
        while self.peek().is_some() {
            out.push(self.statement()?);
            self.end_of_statement(false)?;
            self.skip_newlines();
        }
        Ok(out)
    }

    fn end_of_statement(&self, in_block: bool) -> Result<(), SeqError> {
        match self.peek() {
            None | Some(Token { kind: TokenKind::Newline, .. }) => Ok(()),
            Some(Token { kind: TokenKind::RBrace, .. }) if in_block => Ok(()),
            _ => {
                let mut expected = strings(&["end of line"]);
                if in_block {
                    expected.push("'}'".into());
                }
                Err(self.unexpected(expected))
            }
        }
    }

    fn statement(&mut self) -> Result<Statement, SeqError> {
        let span = self.here();
        let kind = match self.peek_ident() {
            Some("laser") => {
                self.pos += 1;
                self.laser()?
            }
            Some("wait") => {
                self.pos += 1;
                StatementKind::Wait { duration: self.value(Dimension::Time)? }
            }
            Some("mw") => {
                self.pos += 1;
                self.mw()?
            }
            Some("measure") => {
                self.pos += 1;
                StatementKind::Measure { window: self.value(Dimension::Time)? }
            }
            Some("sweep") => {
                self.pos += 1;
                self.sweep(span)?
            }
            _ => return Err(self.unexpected(strings(STATEMENT_START))),
        };
        Ok(Statement { kind, span })
    }

    fn laser(&mut self) -> Result<StatementKind, SeqError> {
        let duration = self.value(Dimension::Time)?;
        let mut laser = Laser { duration, power: None, measure: None };
        loop {
            let span = self.here();
            match self.peek_ident() {
                Some("power") => {
                    self.pos += 1;
                    self.expect(TokenKind::Equals)?;
                    let v = self.value(Dimension::Dimensionless)?;
                    set_once(&mut laser.power, v, "power", span)?;
                }
                Some("measure") => {
                    self.pos += 1;
                    let v = self.value(Dimension::Time)?;
                    set_once(&mut laser.measure, v, "measure", span)?;
                }
                _ => break,
            }
        }
        Ok(StatementKind::Laser(laser))
    }

    fn mw(&mut self) -> Result<StatementKind, SeqError> {
        let length = if self.peek_ident() == Some("pi") {
            self.pos += 1;
            if matches!(self.peek(), Some(Token { kind: TokenKind::Slash, .. })) {
                self.pos += 1;
                match self.peek() {
                    Some(Token { kind: TokenKind::Number { magnitude, unit: None, integral: true }, .. })
                        if *magnitude == 2.0 =>
                    {
                        self.pos += 1;
                    }
                    _ => return Err(self.unexpected(strings(&["2"]))),
                }
                MwLength::Angle { angle: Angle::HalfPi, duration: None }
            } else {
                MwLength::Angle { angle: Angle::Pi, duration: None }
            }
        } else {
            MwLength::Duration(self.value(Dimension::Time)?)
        };
        let mut mw = Mw { length, frequency: None, amplitude: None, phase: None };
        loop {
            let span = self.here();
            let (slot, dim, name) = match self.peek_ident() {
                Some("f") => (&mut mw.frequency, Dimension::Frequency, "f"),
                Some("amp") => (&mut mw.amplitude, Dimension::Dimensionless, "amp"),
                Some("phase") => (&mut mw.phase, Dimension::Dimensionless, "phase"),
                _ => break,
            };
            self.pos += 1;
            self.expect(TokenKind::Equals)?;
            let v = self.value(dim)?;
            set_once(slot, v, name, span)?;
        }
        Ok(StatementKind::Mw(mw))
    }

    fn sweep(&mut self, span: Span) -> Result<StatementKind, SeqError> {
        let var = match self.peek() {
            Some(Token { kind: TokenKind::Ident(name), .. }) if !RESERVED.contains(&name.as_str()) => name.clone(),
            _ => return Err(self.unexpected(strings(&["sweep variable name"]))),
        };
        if self.scope.iter().any(|b| b.name == var) {
            return Err(SeqError::new(
                SeqErrorKind::Parse,
                self.here(),
                format!("sweep variable '{var}' is already bound by an enclosing sweep"),
                strings(&["distinct variable name"]),
            ));
        }
        self.pos += 1;
        let start = self.literal(None)?;
        self.expect(TokenKind::DotDot)?;
        let stop_span = self.here();
        let stop = self.literal(Some(start.dim))?;
        if start.dim != stop.dim {
            return Err(SeqError::new(
                SeqErrorKind::Type,
                stop_span,
                format!("sweep bounds differ in dimension ({} vs {})", start.dim, stop.dim),
                dim_expectation(start.dim),
            ));
        }
        if self.peek_ident() != Some("n") {
            return Err(self.unexpected(strings(&["n="])));
        }
        self.pos += 1;
        self.expect(TokenKind::Equals)?;
        let steps = match self.peek() {
            Some(Token { kind: TokenKind::Number { magnitude, unit: None, integral: true }, .. }) if *magnitude >= 0.0 => {
                self.pos += 1;
                *magnitude as usize
            }
            _ => return Err(self.unexpected(strings(&["non-negative integer"]))),
        };
        self.expect(TokenKind::LBrace)?;
        self.scope.push(Binding { name: var.clone(), dim: start.dim, used: false });
        let mut body = Vec::new();
        loop {
            self.skip_newlines();
            match self.peek() {
                Some(Token { kind: TokenKind::RBrace, .. }) => break,
                None => {
                    let mut expected = strings(STATEMENT_START);
                    expected.push("'}'".into());
                    return Err(self.unexpected(expected));
                }
                _ => {
                    body.push(self.statement()?);
                    self.end_of_statement(true)?;
                }
            }
        }
        let binding = self.scope.pop().expect("sweep binding");
        if body.is_empty() {
            return Err(SeqError::new(SeqErrorKind::Parse, self.here(), "sweep body is empty", strings(STATEMENT_START)));
        }
        self.pos += 1;
        if !binding.used {
            return Err(SeqError::new(
                SeqErrorKind::Parse,
                span,
                format!("sweep variable '{var}' is never used in its body"),
                strings(&["statement referencing the sweep variable"]),
            ));
        }
        Ok(StatementKind::Sweep(Sweep { var, start, stop, steps, body }))
    }

    /// Numeric literal; `want` restricts the dimension.
    fn literal(&mut self, want: Option<Dimension>) -> Result<Quantity, SeqError> {
        let span = self.here();
        match self.peek() {
            Some(Token { kind: TokenKind::Number { magnitude, unit, .. }, .. }) => {
                self.pos += 1;
                let q = match unit {
                    Some(u) => Quantity { value: u.to_si(*magnitude), dim: u.dimension() },
                    None => Quantity::scalar(*magnitude),
                };
                if let Some(dim) = want {
                    if q.dim != dim {
                        return Err(SeqError::new(
                            SeqErrorKind::Type,
                            span,
                            format!("expected a {dim} quantity, found {}", q.dim),
                            dim_expectation(dim),
                        ));
                    }
                }
                if q.dim != Dimension::Dimensionless && q.value < 0.0 {
                    return Err(SeqError::new(
                        SeqErrorKind::Type,
                        span,
                        format!("{} quantities must be non-negative", q.dim),
                        strings(&["non-negative quantity"]),
                    ));
                }
                Ok(q)
            }
            _ => Err(self.unexpected(strings(&["number"]))),
        }
    }

    fn value(&mut self, dim: Dimension) -> Result<Value, SeqError> {
        let span = self.here();
        match self.peek() {
            Some(Token { kind: TokenKind::Ident(name), .. }) if !RESERVED.contains(&name.as_str()) => {
                self.pos += 1;
                if let Some(b) = self.scope.iter_mut().rev().find(|b| &b.name == name) {
                    if b.dim != dim {
                        return Err(SeqError::new(
                            SeqErrorKind::Type,
                            span,
                            format!("variable '{name}' is a {} sweep, expected {dim}", b.dim),
                            dim_expectation(dim),
                        ));
                    }
                    b.used = true;
                }
                Ok(Value::Var(name.clone()))
            }
            Some(Token { kind: TokenKind::Number { .. }, .. }) => Ok(Value::Literal(self.literal(Some(dim))?)),
            _ => Err(self.unexpected(dim_expectation(dim))),
        }
    }
}

fn set_once(slot: &mut Option<Value>, v: Value, name: &str, span: Span) -> Result<(), SeqError> {
    if slot.is_some() {
        return Err(SeqError::new(
            SeqErrorKind::Parse,
            span,
            format!("option '{name}' given twice"),
            strings(&["end of line"]),
        ));
    }
    *slot = Some(v);
    Ok(())
}

/// Builds a [`PulseSequence`] from tokens.
///
/// Literal quantities are checked against their slot's dimension here; variables
/// bound by an enclosing sweep are checked against the sweep's dimension. Unbound
/// variables are left for [`validate`](super::validate).
pub fn parse(tokens: &[Token]) -> Result<PulseSequence, SeqError> {
    let eof = tokens.last().map_or(Span { line: 1, col: 1 }, |t| Span { line: t.span.line, col: t.span.col + 1 });
    parse_with_eof(tokens, eof)
}

fn parse_with_eof(tokens: &[Token], eof: Span) -> Result<PulseSequence, SeqError> {
    let mut p = Parser { tokens, pos: 0, scope: Vec::new(), eof };
    Ok(PulseSequence { statements: p.program()? })
}

/// Tokenizes and parses; errors at end of input point just past the last character.
pub fn parse_str(text: &str) -> Result<PulseSequence, SeqError> {
    let line = 1 + text.matches('\n').count();
    let col = 1 + text.rsplit('\n').next().map_or(0, |l| l.chars().count());
    parse_with_eof(&tokenize(text)?, Span { line, col })
}

#[cfg(test)]
mod tests {
    use super::*;

    const T1_SEQUENCE: &str = "laser 300us\nsweep tau 0ms..2ms n=41 { wait tau }\nlaser 20us measure 20us";

    fn secs(v: f64) -> Value {
        Value::Literal(Quantity::seconds(v))
    }

    #[test]
    fn t1_program_has_three_statements() {
        let seq = parse_str(T1_SEQUENCE).unwrap();
        assert_eq!(seq.statements.len(), 3);
        assert_eq!(seq.sweeps().len(), 1);
        let sw = seq.sweeps()[0];
        assert_eq!(sw.steps, 41);
        assert_eq!(sw.stop.value, 2e-3);
        assert_eq!(
            seq.statements[2].kind,
            StatementKind::Laser(Laser { duration: secs(20e-6), power: None, measure: Some(secs(20e-6)) })
        );
        assert_eq!(seq.statements[1].span, Span { line: 2, col: 1 });
    }

    #[test]
    fn wait_literal() {
        let seq = parse_str("wait 10us").unwrap();
        assert_eq!(seq.statements[0].kind, StatementKind::Wait { duration: secs(1e-5) });
    }

    #[test]
    fn frequency_in_duration_slot_is_type_error() {
        let err = parse_str("laser 2GHz").unwrap_err();
        assert_eq!(err.kind, SeqErrorKind::Type);
        assert_eq!(err.span, Span { line: 1, col: 7 });
    }

    #[test]
    fn mw_forms() {
        let seq = parse_str("mw pi/2 f=3.35GHz phase=90\nmw pi\nmw 40ns amp=0.5").unwrap();
        match &seq.statements[0].kind {
            StatementKind::Mw(m) => {
                assert_eq!(m.length, MwLength::Angle { angle: Angle::HalfPi, duration: None });
                assert_eq!(m.frequency, Some(Value::Literal(Quantity::hertz(3.35e9))));
                assert_eq!(m.phase, Some(Value::Literal(Quantity::scalar(90.0))));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(&seq.statements[1].kind, StatementKind::Mw(Mw { length: MwLength::Angle { angle: Angle::Pi, .. }, .. })));
    }

    #[test]
    fn multi_line_sweep_and_nesting() {
        let text = "sweep a 1us..2us n=5 {\n  wait a\n  sweep b 0..90 n=7 {\n    mw 10ns phase=b\n  }\n}\n";
        let seq = parse_str(text).unwrap();
        assert_eq!(seq.sweeps().len(), 2);
    }

    #[test]
    fn sweep_invariants() {
        assert_eq!(parse_str("sweep t 0us..1us n=3 { }").unwrap_err().kind, SeqErrorKind::Parse);
        assert_eq!(parse_str("sweep t 0us..1us n=3 { wait 1us }").unwrap_err().kind, SeqErrorKind::Parse);
        let err = parse_str("sweep t 0us..1us n=3 {\n sweep t 0us..1us n=2 { wait t }\n}").unwrap_err();
        assert_eq!(err.span.line, 2);
        assert_eq!(parse_str("sweep t 0us..1GHz n=3 { wait t }").unwrap_err().kind, SeqErrorKind::Type);
        assert_eq!(parse_str("sweep t 0MHz..1MHz n=3 { wait t }").unwrap_err().kind, SeqErrorKind::Type);
    }

    #[test]
    fn unbound_variables_parse() {
        let seq = parse_str("wait tau").unwrap();
        assert_eq!(seq.statements[0].kind, StatementKind::Wait { duration: Value::Var("tau".into()) });
    }

    #[test]
    fn errors_carry_position_and_expectations() {
        for (text, line, col) in [
            ("wait", 1, 5),
            ("laser 1us\nfoo 3", 2, 1),
            ("mw pi/3", 1, 7),
            ("sweep x 0..1 n=2 { wait 1us", 1, 28),
            ("laser 1us power=1 power=2", 1, 19),
            ("wait 1us 2us", 1, 10),
            ("wait -1us", 1, 6),
            ("sweep pi 0..1 n=2 { mw 1ns amp=pi }", 1, 7),
        ] {
            let err = parse_str(text).unwrap_err();
            assert_eq!((err.span.line, err.span.col), (line, col), "{text}: {err}");
            assert!(!err.expected.is_empty(), "{text}");
        }
    }

    #[test]
    fn empty_program() {
        assert!(parse_str("").unwrap().is_empty());
        assert!(parse_str("# only a comment\n\n").unwrap().is_empty());
    }
}
