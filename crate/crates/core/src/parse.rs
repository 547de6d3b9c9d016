//! Text syntax for formulae.
//!
//! `~A`, `A & B`, `A | B`, `A => B`, `[a]A`, `<a>A`, converse letters `a^-`.
//! Unary operators bind tightest, then `&`, then `|`, then `=>` (right
//! associative). `A => B` is desugared to `~A | B` at parse time.

use std::fmt;

use thiserror::Error;

use crate::formula::{Formula, Letter};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("parse error at {line}:{col}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Not,
    And,
    Or,
    Imp,
    LBracket,
    RBracket,
    Lt,
    Gt,
    LParen,
    RParen,
    BarMark, // the `^-` suffix on a letter
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Ident(s) => return write!(f, "identifier {s:?}"),
            Tok::Not => "~",
            Tok::And => "&",
            Tok::Or => "|",
            Tok::Imp => "=>",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::Lt => "<",
            Tok::Gt => ">",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::BarMark => "^-",
        };
        write!(f, "`{s}`")
    }
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    col: usize,
}

impl<'a> Lexer<'a> {
    fn new(input: &'a str) -> Lexer<'a> {
        Lexer {
            chars: input.chars().peekable(),
            line: 1,
            col: 1,
        }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn err(&self, msg: impl Into<String>) -> ParseError {
        ParseError {
            line: self.line,
            col: self.col,
            msg: msg.into(),
        }
    }

    fn tokenize(mut self) -> Result<Vec<(Tok, usize, usize)>, ParseError> {
        let mut toks = Vec::new();
        loop {
            while matches!(self.chars.peek(), Some(c) if c.is_whitespace()) {
                self.bump();
            }
            let (line, col) = (self.line, self.col);
            let Some(&c) = self.chars.peek() else { break };
            let tok = match c {
                '~' => {
                    self.bump();
                    Tok::Not
                }
                '&' => {
                    self.bump();
                    Tok::And
                }
                '|' => {
                    self.bump();
                    Tok::Or
                }
                '=' => {
                    self.bump();
                    match self.bump() {
                        Some('>') => Tok::Imp,
                        _ => return Err(self.err("expected `=>`")),
                    }
                }
                '[' => {
                    self.bump();
                    Tok::LBracket
                }
                ']' => {
                    self.bump();
                    Tok::RBracket
                }
                '<' => {
                    self.bump();
                    Tok::Lt
                }
                '>' => {
                    self.bump();
                    Tok::Gt
                }
                '(' => {
                    self.bump();
                    Tok::LParen
                }
                ')' => {
                    self.bump();
                    Tok::RParen
                }
                '^' => {
                    self.bump();
                    match self.bump() {
                        Some('-') => Tok::BarMark,
                        _ => return Err(self.err("expected `^-`")),
                    }
                }
                c if c.is_ascii_alphabetic() => {
                    let mut name = String::new();
                    while matches!(self.chars.peek(),
                        Some(c) if c.is_ascii_alphanumeric() || *c == '_')
                    {
                        name.push(self.bump().unwrap());
                    }
                    Tok::Ident(name)
                }
                c => return Err(self.err(format!("unexpected character {c:?}"))),
            };
            toks.push((tok, line, col));
        }
        Ok(toks)
    }
}

struct Parser {
    toks: Vec<(Tok, usize, usize)>,
    pos: usize,
    end: (usize, usize),
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _, _)| t)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _, _)| t.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn here(&self) -> (usize, usize) {
        self.toks
            .get(self.pos)
            .map(|&(_, l, c)| (l, c))
            .unwrap_or(self.end)
    }

    fn err(&self, msg: impl Into<String>) -> ParseError {
        let (line, col) = self.here();
        ParseError {
            line,
            col,
            msg: msg.into(),
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<(), ParseError> {
        match self.bump() {
            Some(t) if t == tok => Ok(()),
            Some(t) => {
                self.pos -= 1;
                Err(self.err(format!("expected {tok}, found {t}")))
            }
            None => Err(self.err(format!("expected {tok}, found end of input"))),
        }
    }

    // imp := or ('=>' imp)?   (right associative)
    fn imp(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.or()?;
        if self.peek() == Some(&Tok::Imp) {
            self.bump();
            let rhs = self.imp()?;
            Ok(Formula::imp(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn or(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.and()?;
        while self.peek() == Some(&Tok::Or) {
            self.bump();
            let rhs = self.and()?;
            lhs = Formula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.unary()?;
        while self.peek() == Some(&Tok::And) {
            self.bump();
            let rhs = self.unary()?;
            lhs = Formula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn letter(&mut self) -> Result<Letter, ParseError> {
        match self.bump() {
            Some(Tok::Ident(name)) => {
                if self.peek() == Some(&Tok::BarMark) {
                    self.bump();
                    Ok(Letter::barred(name))
                } else {
                    Ok(Letter::plain(name))
                }
            }
            Some(t) => {
                self.pos -= 1;
                Err(self.err(format!("expected a letter, found {t}")))
            }
            None => Err(self.err("expected a letter, found end of input")),
        }
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        match self.peek() {
            Some(Tok::Not) => {
                self.bump();
                Ok(Formula::neg(self.unary()?))
            }
            Some(Tok::LBracket) => {
                self.bump();
                let l = self.letter()?;
                self.expect(Tok::RBracket)?;
                Ok(Formula::boxed(l, self.unary()?))
            }
            Some(Tok::Lt) => {
                self.bump();
                let l = self.letter()?;
                self.expect(Tok::Gt)?;
                Ok(Formula::dia(l, self.unary()?))
            }
            Some(Tok::LParen) => {
                self.bump();
                let f = self.imp()?;
                self.expect(Tok::RParen)?;
                Ok(f)
            }
            Some(Tok::Ident(_)) => {
                let Some(Tok::Ident(name)) = self.bump() else {
                    unreachable!()
                };
                Ok(Formula::Atom(name))
            }
            Some(t) => Err(self.err(format!("expected a formula, found {t}"))),
            None => Err(self.err("expected a formula, found end of input")),
        }
    }
}

/// Parse a formula from its text syntax. The result may contain `Neg` nodes;
/// apply [`Formula::nnf`] before handing it to a prover.
pub fn parse_formula(input: &str) -> Result<Formula, ParseError> {
    let lines = input.lines().count().max(1);
    let last_len = input.lines().last().map(|l| l.chars().count()).unwrap_or(0);
    let toks = Lexer::new(input).tokenize()?;
    let mut p = Parser {
        toks,
        pos: 0,
        end: (lines, last_len + 1),
    };
    let f = p.imp()?;
    if p.pos != p.toks.len() {
        let t = p.peek().unwrap().clone();
        return Err(p.err(format!("unexpected {t} after formula")));
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence() {
        let f = parse_formula("p & q | r => s").unwrap();
        // ((p & q) | r) => s
        assert_eq!(
            f,
            Formula::imp(
                Formula::or(
                    Formula::and(Formula::atom("p"), Formula::atom("q")),
                    Formula::atom("r")
                ),
                Formula::atom("s")
            )
        );
    }

    #[test]
    fn implication_desugars() {
        let f = parse_formula("p => q").unwrap();
        assert_eq!(f, Formula::or(Formula::neg(Formula::atom("p")), Formula::atom("q")));
    }

    #[test]
    fn modalities_and_converse() {
        let f = parse_formula("[a]<a^->p").unwrap();
        assert_eq!(
            f,
            Formula::boxed(
                Letter::plain("a"),
                Formula::dia(Letter::barred("a"), Formula::atom("p"))
            )
        );
    }

    #[test]
    fn imp_is_right_associative() {
        let f = parse_formula("p => q => r").unwrap();
        assert_eq!(
            f,
            Formula::imp(Formula::atom("p"), Formula::imp(Formula::atom("q"), Formula::atom("r")))
        );
    }

    #[test]
    fn error_carries_position() {
        let e = parse_formula("p &").unwrap_err();
        assert_eq!((e.line, e.col), (1, 4));
        let e = parse_formula("p @ q").unwrap_err();
        assert_eq!((e.line, e.col), (1, 3));
    }

    #[test]
    fn display_round_trips() {
        for s in ["p | ~q", "[a](p & <b^->q)", "~[a]p | <a>~p", "p & (q | r)"] {
            let f = parse_formula(s).unwrap();
            let printed = f.to_string();
            assert_eq!(parse_formula(&printed).unwrap(), f, "{s} -> {printed}");
        }
    }
}
