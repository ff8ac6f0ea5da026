use std::collections::BTreeSet;
use std::fmt;

use super::{PredicateTable, StlError};

/// Formula of the fragment `π | G[a,b] φ | F[a,b] φ | φ U[a,b] φ | φ & φ`
/// with `0 ≤ a ≤ b < ∞` in seconds.
#[derive(Debug, Clone, PartialEq)]
pub enum Formula {
    Atom(String),
    Always {
        a: f64,
        b: f64,
        body: Box<Formula>,
    },
    Eventually {
        a: f64,
        b: f64,
        body: Box<Formula>,
    },
    Until {
        a: f64,
        b: f64,
        left: Box<Formula>,
        right: Box<Formula>,
    },
    And(Box<Formula>, Box<Formula>),
}

fn check_window(a: f64, b: f64) -> Result<(), StlError> {
    for v in [a, b] {
        if !v.is_finite() || v < 0.0 {
            return Err(StlError::Unbounded(v.to_string()));
        }
    }
    if a > b {
        return Err(StlError::InvalidWindow { a, b });
    }
    Ok(())
}

impl Formula {
    pub fn atom(name: &str) -> Self {
        Formula::Atom(name.to_string())
    }

    pub fn always(a: f64, b: f64, body: Formula) -> Result<Self, StlError> {
        check_window(a, b)?;
        Ok(Formula::Always {
            a,
            b,
            body: Box::new(body),
        })
    }

    pub fn eventually(a: f64, b: f64, body: Formula) -> Result<Self, StlError> {
        check_window(a, b)?;
        Ok(Formula::Eventually {
            a,
            b,
            body: Box::new(body),
        })
    }

    pub fn until(a: f64, b: f64, left: Formula, right: Formula) -> Result<Self, StlError> {
        check_window(a, b)?;
        Ok(Formula::Until {
            a,
            b,
            left: Box::new(left),
            right: Box::new(right),
        })
    }

    pub fn and(self, other: Formula) -> Self {
        Formula::And(Box::new(self), Box::new(other))
    }

    /// `F` and `U` nodes in pre-order; their positions in this list are the
    /// node ids used by schedule instantiations.
    pub fn eventual_nodes(&self) -> Vec<&Formula> {
        fn walk<'a>(f: &'a Formula, out: &mut Vec<&'a Formula>) {
            match f {
                Formula::Atom(_) => {}
                Formula::Always { body, .. } => walk(body, out),
                Formula::Eventually { body, .. } => {
                    out.push(f);
                    walk(body, out);
                }
                Formula::Until { left, right, .. } => {
                    out.push(f);
                    walk(left, out);
                    walk(right, out);
                }
                Formula::And(l, r) => {
                    walk(l, out);
                    walk(r, out);
                }
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out
    }

    /// Atoms of a purely propositional conjunction, or `None` if the
    /// subtree contains a temporal operator.
    pub fn conjunct_atoms(&self) -> Option<BTreeSet<String>> {
        match self {
            Formula::Atom(n) => Some([n.clone()].into()),
            Formula::And(l, r) => {
                let mut s = l.conjunct_atoms()?;
                s.extend(r.conjunct_atoms()?);
                Some(s)
            }
            _ => None,
        }
    }

    /// Latest time (seconds, relative to evaluation) the formula looks at.
    pub fn horizon(&self) -> f64 {
        match self {
            Formula::Atom(_) => 0.0,
            Formula::Always { b, body, .. } | Formula::Eventually { b, body, .. } => b + body.horizon(),
            Formula::Until { b, left, right, .. } => b + left.horizon().max(right.horizon()),
            Formula::And(l, r) => l.horizon().max(r.horizon()),
        }
    }

    pub fn atoms(&self) -> BTreeSet<String> {
        match self {
            Formula::Atom(n) => [n.clone()].into(),
            Formula::Always { body, .. } | Formula::Eventually { body, .. } => body.atoms(),
            Formula::Until { left, right, .. } | Formula::And(left, right) => {
                let mut s = left.atoms();
                s.extend(right.atoms());
                s
            }
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Atom(n) => write!(f, "{n}"),
            Formula::Always { a, b, body } => write!(f, "G[{a},{b}]({body})"),
            Formula::Eventually { a, b, body } => write!(f, "F[{a},{b}]({body})"),
            Formula::Until { a, b, left, right } => write!(f, "({left}) U[{a},{b}] ({right})"),
            Formula::And(l, r) => {
                write!(f, "{l} & ")?;
                if matches!(**r, Formula::And(..)) {
                    write!(f, "({r})")
                } else {
                    write!(f, "{r}")
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(f64),
    LBracket,
    RBracket,
    LParen,
    RParen,
    Comma,
    Amp,
    End,
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |s| s.chars().count()) + 1;
    (line, column)
}

fn syntax(text: &str, offset: usize, message: impl Into<String>) -> StlError {
    let (line, column) = line_col(text, offset);
    StlError::Syntax {
        line,
        column,
        message: message.into(),
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, StlError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let start = i;
        let single = match bytes[i] {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'[' => Some(Tok::LBracket),
            b']' => Some(Tok::RBracket),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            b',' => Some(Tok::Comma),
            b'&' => Some(Tok::Amp),
            b'!' | b'~' => {
                let (line, column) = line_col(text, start);
                return Err(StlError::Negation { line, column });
            }
            _ => None,
        };
        if let Some(t) = single {
            out.push((t, start));
            i += 1;
            continue;
        }
        let c = bytes[i];
        if c.is_ascii_digit() || c == b'.' || c == b'-' || c == b'+' {
            i += 1;
            while i < bytes.len()
                && (bytes[i].is_ascii_digit()
                    || bytes[i] == b'.'
                    || bytes[i] == b'e'
                    || bytes[i] == b'E'
                    || ((bytes[i] == b'-' || bytes[i] == b'+') && matches!(bytes[i - 1], b'e' | b'E')))
            {
                i += 1;
            }
            let lexeme = &text[start..i];
            let v: f64 = lexeme
                .parse()
                .map_err(|_| syntax(text, start, format!("malformed number `{lexeme}`")))?;
            out.push((Tok::Num(v), start));
        } else if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(text[start..i].to_string()), start));
        } else {
            let ch = text[start..].chars().next().unwrap_or('?');
            return Err(syntax(text, start, format!("unexpected character `{ch}`")));
        }
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

struct Parser<'a> {
    text: &'a str,
    toks: Vec<(Tok, usize)>,
    pos: usize,
    table: &'a PredicateTable,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<(), StlError> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            Err(syntax(self.text, self.offset(), format!("expected {what}")))
        }
    }

    fn formula(&mut self) -> Result<Formula, StlError> {
        let mut lhs = self.unit()?;
        while *self.peek() == Tok::Amp {
            self.bump();
            lhs = lhs.and(self.unit()?);
        }
        Ok(lhs)
    }

    fn window(&mut self) -> Result<(f64, f64), StlError> {
        self.expect(Tok::LBracket, "`[`")?;
        let a = self.bound()?;
        self.expect(Tok::Comma, "`,`")?;
        let b = self.bound()?;
        self.expect(Tok::RBracket, "`]`")?;
        check_window(a, b)?;
        Ok((a, b))
    }

    fn bound(&mut self) -> Result<f64, StlError> {
        let at = self.offset();
        match self.bump() {
            Tok::Num(v) => Ok(v),
            Tok::Ident(s) if s.eq_ignore_ascii_case("inf") || s.eq_ignore_ascii_case("infinity") => {
                Err(StlError::Unbounded(s))
            }
            _ => Err(syntax(self.text, at, "expected a time bound")),
        }
    }

    fn parenthesized(&mut self) -> Result<Formula, StlError> {
        self.expect(Tok::LParen, "`(`")?;
        let f = self.formula()?;
        self.expect(Tok::RParen, "`)`")?;
        Ok(f)
    }

    fn unit(&mut self) -> Result<Formula, StlError> {
        let at = self.offset();
        match self.peek().clone() {
            Tok::Ident(op) if (op == "G" || op == "F") && *self.peek_at(1) == Tok::LBracket => {
                self.bump();
                let (a, b) = self.window()?;
                let body = Box::new(self.parenthesized()?);
                Ok(if op == "G" {
                    Formula::Always { a, b, body }
                } else {
                    Formula::Eventually { a, b, body }
                })
            }
            Tok::LParen => {
                let left = self.parenthesized()?;
                if matches!(self.peek(), Tok::Ident(u) if u == "U") && *self.peek_at(1) == Tok::LBracket {
                    self.bump();
                    let (a, b) = self.window()?;
                    let right = self.parenthesized()?;
                    Ok(Formula::Until {
                        a,
                        b,
                        left: Box::new(left),
                        right: Box::new(right),
                    })
                } else {
                    Ok(left)
                }
            }
            Tok::Ident(name) => {
                self.bump();
                if !self.table.contains_atom(&name) {
                    return Err(StlError::UnknownPredicate(name));
                }
                Ok(Formula::Atom(name))
            }
            Tok::End => Err(syntax(self.text, at, "unexpected end of formula")),
            other => Err(syntax(self.text, at, format!("unexpected token {other:?}"))),
        }
    }
}

/// Parses a formula; every atom must resolve in `table`.
///
/// Grammar: `formula := unit ("&" unit)*`,
/// `unit := "G[" a "," b "](" formula ")" | "F[" a "," b "](" formula ")"
///        | "(" formula ") U[" a "," b "] (" formula ")" | name | "(" formula ")"`.
pub fn parse_formula(text: &str, table: &PredicateTable) -> Result<Formula, StlError> {
    let mut p = Parser {
        text,
        toks: lex(text)?,
        pos: 0,
        table,
    };
    let f = p.formula()?;
    if *p.peek() != Tok::End {
        return Err(syntax(text, p.offset(), "unexpected trailing input"));
    }
    Ok(f)
}
