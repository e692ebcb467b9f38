use super::ast::{Span, Unit};
use super::{SeqError, SeqErrorKind};

#[derive(Clone, Debug, PartialEq)]
pub enum TokenKind {
    Ident(String),
    /// Numeric literal with optional unit suffix. `integral` records whether the
    /// literal was written without a fraction or exponent.
    Number { magnitude: f64, unit: Option<Unit>, integral: bool },
    Equals,
    DotDot,
    Slash,
    LBrace,
    RBrace,
    Newline,
}

impl TokenKind {
    pub fn describe(&self) -> String {
        match self {
            TokenKind::Ident(name) => format!("identifier '{name}'"),
            TokenKind::Number { magnitude, unit: Some(u), .. } => format!("quantity '{magnitude}{}'", u.symbol()),
            TokenKind::Number { magnitude, unit: None, .. } => format!("number '{magnitude}'"),
            TokenKind::Equals => "'='".into(),
            TokenKind::DotDot => "'..'".into(),
            TokenKind::Slash => "'/'".into(),
            TokenKind::LBrace => "'{'".into(),
            TokenKind::RBrace => "'}'".into(),
            TokenKind::Newline => "end of line".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: Span,
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    src: &'a str,
    line: usize,
    col: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().map(|&(_, c)| c)
    }

    fn peek2(&self) -> Option<char> {
        let mut it = self.chars.clone();
        it.next();
        it.next().map(|(_, c)| c)
    }

    fn bump(&mut self) -> Option<char> {
        let (_, c) = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn offset(&mut self) -> usize {
        self.chars.peek().map_or(self.src.len(), |&(i, _)| i)
    }

    fn span(&self) -> Span {
        Span { line: self.line, col: self.col }
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

/// Splits program text into tokens.
///
/// `#` starts a comment running to the end of the line. Newline tokens are emitted
/// once per run of line breaks and only after some other token, so blank and
/// comment-only lines produce nothing.
pub fn tokenize(text: &str) -> Result<Vec<Token>, SeqError> {
    let mut cur = Cursor { chars: text.char_indices().peekable(), src: text, line: 1, col: 1 };
    let mut tokens: Vec<Token> = Vec::new();
    while let Some(c) = cur.peek() {
        let span = cur.span();
        match c {
            ' ' | '\t' | '\r' => {
                cur.bump();
            }
            '#' => {
                while let Some(c) = cur.peek() {
                    if c == '\n' {
                        break;
                    }
                    cur.bump();
                }
            }
            '\n' => {
                cur.bump();
                if tokens.last().is_some_and(|t| t.kind != TokenKind::Newline) {
                    tokens.push(Token { kind: TokenKind::Newline, span });
                }
            }
            '=' => {
                cur.bump();
                tokens.push(Token { kind: TokenKind::Equals, span });
            }
            '/' => {
                cur.bump();
                tokens.push(Token { kind: TokenKind::Slash, span });
            }
            '{' => {
                cur.bump();
                tokens.push(Token { kind: TokenKind::LBrace, span });
            }
            '}' => {
                cur.bump();
                tokens.push(Token { kind: TokenKind::RBrace, span });
            }
            '.' if cur.peek2() == Some('.') => {
                cur.bump();
                cur.bump();
                tokens.push(Token { kind: TokenKind::DotDot, span });
            }
            c if c.is_ascii_digit() || (c == '-' && cur.peek2().is_some_and(|d| d.is_ascii_digit() || d == '.')) => {
                tokens.push(lex_number(&mut cur, span)?);
            }
            c if is_ident_start(c) => {
                let start = cur.offset();
                while cur.peek().is_some_and(is_ident_continue) {
                    cur.bump();
                }
                let end = cur.offset();
                tokens.push(Token { kind: TokenKind::Ident(text[start..end].to_string()), span });
            }
            other => {
                return Err(SeqError::new(
                    SeqErrorKind::Lexical,
                    span,
                    format!("illegal character {other:?}"),
                    vec!["identifier".into(), "number".into(), "'='".into(), "'..'".into(), "'{'".into(), "'}'".into()],
                ));
            }
        }
    }
    Ok(tokens)
}

fn lex_number(cur: &mut Cursor<'_>, span: Span) -> Result<Token, SeqError> {
    let start = cur.offset();
    let mut integral = true;
    if cur.peek() == Some('-') {
        cur.bump();
    }
    let digits = |cur: &mut Cursor<'_>| {
        let mut any = false;
        while cur.peek().is_some_and(|c| c.is_ascii_digit()) {
            cur.bump();
            any = true;
        }
        any
    };
    let mut any = digits(cur);
    // a single '.' followed by a digit is a fraction; '..' is the range operator
    if cur.peek() == Some('.') && cur.peek2().is_some_and(|c| c.is_ascii_digit()) {
        cur.bump();
        integral = false;
        any |= digits(cur);
    }
    if !any {
        return Err(SeqError::new(SeqErrorKind::Lexical, span, "malformed number", vec!["digit".into()]));
    }
    if matches!(cur.peek(), Some('e' | 'E'))
        && (cur.peek2().is_some_and(|c| c.is_ascii_digit())
            || (matches!(cur.peek2(), Some('+' | '-')) && {
                let mut it = cur.chars.clone();
                it.next();
                it.next();
                it.next().is_some_and(|(_, c)| c.is_ascii_digit())
            }))
    {
        cur.bump();
        if matches!(cur.peek(), Some('+' | '-')) {
            cur.bump();
        }
        digits(cur);
        integral = false;
    }
    let end = cur.offset();
    let literal = &cur.src[start..end];
    let magnitude: f64 = literal
        .parse()
        .map_err(|_| SeqError::new(SeqErrorKind::Lexical, span, format!("malformed number '{literal}'"), vec!["number".into()]))?;
    if !magnitude.is_finite() {
        return Err(SeqError::new(SeqErrorKind::Lexical, span, format!("number '{literal}' is not finite"), vec!["finite number".into()]));
    }

    let unit_start = cur.offset();
    while cur.peek().is_some_and(|c| c.is_alphabetic() || c == 'µ' || c == 'μ') {
        cur.bump();
    }
    let unit_end = cur.offset();
    let suffix = &cur.src[unit_start..unit_end];
    let unit = if suffix.is_empty() {
        None
    } else {
        Some(Unit::parse(suffix).ok_or_else(|| {
            SeqError::new(
                SeqErrorKind::Lexical,
                span,
                format!("unknown unit '{suffix}'"),
                ["ns", "us", "ms", "s", "Hz", "kHz", "MHz", "GHz", "mT", "T"].iter().map(|s| s.to_string()).collect(),
            )
        })?)
    };
    Ok(Token { kind: TokenKind::Number { magnitude, unit, integral }, span })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(text: &str) -> Vec<TokenKind> {
        tokenize(text).unwrap().into_iter().map(|t| t.kind).collect()
    }

    fn qty(magnitude: f64, unit: Unit) -> TokenKind {
        TokenKind::Number { magnitude, unit: Some(unit), integral: magnitude.fract() == 0.0 }
    }

    #[test]
    fn laser_statement() {
        assert_eq!(kinds("laser 2ms"), vec![TokenKind::Ident("laser".into()), qty(2.0, Unit::Ms)]);
    }

    #[test]
    fn comment_only_line_is_empty() {
        assert!(kinds("# comment\n").is_empty());
        assert!(kinds("\n\n   # x\n\n").is_empty());
    }

    #[test]
    fn mw_with_frequency() {
        assert_eq!(
            kinds("mw 40ns f=3.35GHz"),
            vec![
                TokenKind::Ident("mw".into()),
                qty(40.0, Unit::Ns),
                TokenKind::Ident("f".into()),
                TokenKind::Equals,
                TokenKind::Number { magnitude: 3.35, unit: Some(Unit::GHz), integral: false },
            ]
        );
    }

    #[test]
    fn range_and_angles() {
        assert_eq!(
            kinds("0ms..2ms pi/2 n=41"),
            vec![
                qty(0.0, Unit::Ms),
                TokenKind::DotDot,
                qty(2.0, Unit::Ms),
                TokenKind::Ident("pi".into()),
                TokenKind::Slash,
                TokenKind::Number { magnitude: 2.0, unit: None, integral: true },
                TokenKind::Ident("n".into()),
                TokenKind::Equals,
                TokenKind::Number { magnitude: 41.0, unit: None, integral: true },
            ]
        );
    }

    #[test]
    fn exponent_and_sign() {
        assert_eq!(kinds("1.5e-3s -90"), vec![
            TokenKind::Number { magnitude: 1.5e-3, unit: Some(Unit::S), integral: false },
            TokenKind::Number { magnitude: -90.0, unit: None, integral: true },
        ]);
        assert_eq!(kinds("10µs"), vec![qty(10.0, Unit::Us)]);
    }

    #[test]
    fn newlines_collapse_and_positions_are_tracked() {
        let toks = tokenize("wait 1us\n\n  mw pi\n").unwrap();
        assert_eq!(toks.iter().filter(|t| t.kind == TokenKind::Newline).count(), 2);
        let mw = toks.iter().find(|t| t.kind == TokenKind::Ident("mw".into())).unwrap();
        assert_eq!(mw.span, Span { line: 3, col: 3 });
    }

    #[test]
    fn illegal_character_reports_position() {
        let err = tokenize("wait 1us\nlaser 2ms $").unwrap_err();
        assert_eq!(err.kind, SeqErrorKind::Lexical);
        assert_eq!(err.span, Span { line: 2, col: 11 });
        assert!(!err.expected.is_empty());
        let err = tokenize("wait 3furlongs").unwrap_err();
        assert_eq!(err.span, Span { line: 1, col: 6 });
    }
}
