use super::{Expr, ExprError, Node};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Int(i32),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    End,
}

struct Lexer<'a> {
    text: &'a str,
    tokens: Vec<(Tok, usize)>,
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |s| s.chars().count()) + 1;
    (line, column)
}

fn syntax(text: &str, offset: usize, message: impl Into<String>) -> ExprError {
    let (line, column) = line_col(text, offset);
    ExprError::Syntax {
        line,
        column,
        message: message.into(),
    }
}

impl<'a> Lexer<'a> {
    fn run(text: &'a str) -> Result<Vec<(Tok, usize)>, ExprError> {
        let mut lx = Lexer {
            text,
            tokens: Vec::new(),
        };
        let bytes = text.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            let c = bytes[i];
            let start = i;
            match c {
                b' ' | b'\t' | b'\n' | b'\r' => {
                    i += 1;
                    continue;
                }
                b'+' => lx.tokens.push((Tok::Plus, start)),
                b'-' => lx.tokens.push((Tok::Minus, start)),
                b'*' => lx.tokens.push((Tok::Star, start)),
                b'/' => lx.tokens.push((Tok::Slash, start)),
                b'^' => lx.tokens.push((Tok::Caret, start)),
                b'(' => lx.tokens.push((Tok::LParen, start)),
                b')' => lx.tokens.push((Tok::RParen, start)),
                b',' => lx.tokens.push((Tok::Comma, start)),
                b'0'..=b'9' | b'.' => {
                    i = lx.number(start)?;
                    continue;
                }
                b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                    while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                        i += 1;
                    }
                    lx.tokens.push((Tok::Ident(text[start..i].to_string()), start));
                    continue;
                }
                _ => {
                    let ch = text[start..].chars().next().unwrap_or('?');
                    return Err(syntax(text, start, format!("unexpected character `{ch}`")));
                }
            }
            i += 1;
        }
        lx.tokens.push((Tok::End, text.len()));
        Ok(lx.tokens)
    }

    fn number(&mut self, start: usize) -> Result<usize, ExprError> {
        let bytes = self.text.as_bytes();
        let mut i = start;
        let digits = |i: &mut usize| {
            let s = *i;
            while *i < bytes.len() && bytes[*i].is_ascii_digit() {
                *i += 1;
            }
            *i > s
        };
        let int_part = digits(&mut i);
        let mut integral = true;
        let mut frac_part = false;
        if i < bytes.len() && bytes[i] == b'.' {
            integral = false;
            i += 1;
            frac_part = digits(&mut i);
        }
        if !int_part && !frac_part {
            return Err(syntax(self.text, start, "malformed number"));
        }
        if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
            integral = false;
            let mut j = i + 1;
            if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                j += 1;
            }
            if !digits(&mut j) {
                return Err(syntax(self.text, i, "malformed exponent"));
            }
            i = j;
        }
        let lexeme = &self.text[start..i];
        let value: f64 = lexeme
            .parse()
            .map_err(|_| syntax(self.text, start, format!("malformed number `{lexeme}`")))?;
        if !value.is_finite() {
            return Err(syntax(self.text, start, format!("number `{lexeme}` overflows")));
        }
        // Integer lexemes are kept distinct so they can serve as exponents.
        let tok = match (integral, lexeme.parse::<i32>()) {
            (true, Ok(k)) => Tok::Int(k),
            _ => Tok::Num(value),
        };
        self.tokens.push((tok, start));
        Ok(i)
    }
}

struct Parser<'a> {
    text: &'a str,
    tokens: Vec<(Tok, usize)>,
    pos: usize,
    dim: Option<usize>,
    max_var: usize,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].0
    }

    fn offset(&self) -> usize {
        self.tokens[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.tokens[self.pos].0.clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, message: impl Into<String>) -> ExprError {
        syntax(self.text, self.offset(), message)
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ExprError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.error(format!("expected {what}")))
        }
    }

    fn expr(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Tok::Minus => {
                    self.bump();
                    lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    lhs = Node::Mul(Box::new(lhs), Box::new(self.factor()?));
                }
                Tok::Slash => {
                    self.bump();
                    lhs = Node::Div(Box::new(lhs), Box::new(self.factor()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Node, ExprError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            // A minus sign glued to a literal is part of the literal, so
            // negative constants survive a print/parse round trip.
            let lit = match *self.peek() {
                Tok::Num(v) => Some(v),
                Tok::Int(k) => Some(f64::from(k)),
                _ => None,
            };
            return match lit {
                Some(v) if !matches!(self.tokens.get(self.pos + 1), Some((Tok::Caret, _))) => {
                    self.bump();
                    Ok(Node::Const(-v))
                }
                _ => Ok(Node::Neg(Box::new(self.factor()?))),
            };
        }
        let base = self.primary()?;
        if *self.peek() == Tok::Caret {
            self.bump();
            let negative = if *self.peek() == Tok::Minus {
                self.bump();
                true
            } else {
                false
            };
            return match self.bump() {
                Tok::Int(k) => Ok(Node::Pow(Box::new(base), if negative { -k } else { k })),
                _ => Err(syntax(
                    self.text,
                    self.tokens[self.pos.saturating_sub(1)].1,
                    "exponent must be an integer literal",
                )),
            };
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Node, ExprError> {
        let start = self.offset();
        match self.bump() {
            Tok::Num(v) => Ok(Node::Const(v)),
            Tok::Int(k) => Ok(Node::Const(f64::from(k))),
            Tok::LParen => {
                let inner = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                if *self.peek() == Tok::LParen {
                    self.call(name, start)
                } else {
                    self.variable(name, start)
                }
            }
            Tok::End => Err(syntax(self.text, start, "unexpected end of input")),
            other => Err(syntax(self.text, start, format!("unexpected token {other:?}"))),
        }
    }

    fn variable(&mut self, name: String, start: usize) -> Result<Node, ExprError> {
        let index = name
            .strip_prefix('x')
            .filter(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()))
            .and_then(|d| d.parse::<usize>().ok())
            .filter(|k| *k >= 1);
        let unknown = |dim| {
            let (line, column) = line_col(self.text, start);
            ExprError::UnknownVariable {
                name: name.clone(),
                line,
                column,
                dim,
            }
        };
        match (index, self.dim) {
            (None, d) => Err(unknown(d.unwrap_or(0))),
            (Some(k), Some(d)) if k > d => Err(unknown(d)),
            (Some(k), _) => {
                self.max_var = self.max_var.max(k);
                Ok(Node::Var(k - 1))
            }
        }
    }

    fn call(&mut self, name: String, start: usize) -> Result<Node, ExprError> {
        self.expect(Tok::LParen, "`(`")?;
        let mut args = vec![self.expr()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            args.push(self.expr()?);
        }
        self.expect(Tok::RParen, "`)` or `,`")?;
        let unary = |args: Vec<Node>, f: fn(Box<Node>) -> Node| {
            if args.len() == 1 {
                Ok(f(Box::new(args.into_iter().next().expect("one argument"))))
            } else {
                Err(syntax(self.text, start, format!("`{name}` takes exactly one argument")))
            }
        };
        match name.as_str() {
            "abs" => unary(args, Node::Abs),
            "sqrt" => unary(args, Node::Sqrt),
            "sign" => unary(args, Node::Sign),
            "norm" => Ok(Node::Norm(args)),
            "sq" => Ok(Node::SqNorm(args)),
            _ => Err(syntax(self.text, start, format!("unknown function `{name}`"))),
        }
    }
}

fn parse_with(text: &str, dim: Option<usize>) -> Result<Expr, ExprError> {
    if dim == Some(0) {
        return Err(ExprError::ZeroDimension);
    }
    let tokens = Lexer::run(text)?;
    let mut p = Parser {
        text,
        tokens,
        pos: 0,
        dim,
        max_var: 0,
    };
    let node = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(p.error("unexpected trailing input"));
    }
    let dim = dim.unwrap_or(p.max_var.max(1));
    Expr::new(node, dim)
}

/// Parses `text` as an expression over `x1..x{dim}`.
///
/// Grammar: `expr := term (("+"|"-") term)*`,
/// `term := factor (("*"|"/") factor)*`,
/// `factor := "-" factor | primary ("^" ["-"] integer)?`,
/// `primary := number | var | "(" expr ")" | func "(" expr ("," expr)* ")"`
/// with `func ∈ {abs, sqrt, norm, sq, sign}` and `var := "x" digits`.
pub fn parse_expr(text: &str, dim: usize) -> Result<Expr, ExprError> {
    parse_with(text, Some(dim))
}

pub(super) fn parse_expr_inferred(text: &str) -> Result<Expr, ExprError> {
    parse_with(text, None)
}
