//! Arithmetic expressions in the two variables `s` and `t`.
//!
//! Grammar, lowest precedence first:
//!
//! ```text
//! sum     := product (('+' | '-') product)*
//! product := unary (('*' | '/') unary)*
//! unary   := ('-' | '+') unary | power
//! power   := atom ('^' unary)?          right associative
//! atom    := number | 's' | 't' | func '(' sum ')' | '(' sum ')'
//! func    := abs | ln | exp | sign
//! ```
//!
//! `-s^2` parses as `-(s^2)`. Negative bases with non-integer exponents
//! evaluate to NaN; write `sign(s)*abs(s)^(5/3)` for an odd root.

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Number(f64),
    S,
    T,
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Abs,
    Ln,
    Exp,
    Sign,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("at position {position}: expected {}, found {found}", expected.join(" or "))]
pub struct ParseError {
    /// Byte offset into the source.
    pub position: usize,
    pub expected: Vec<String>,
    pub found: String,
}

impl Expr {
    pub fn parse(source: &str) -> Result<Expr, ParseError> {
        let mut parser = Parser { tokens: tokenize(source)?, pos: 0 };
        let expr = parser.sum()?;
        match parser.peek() {
            Token::End => Ok(expr),
            _ => Err(parser.unexpected(&["operator", "end of input"])),
        }
    }

    pub fn eval(&self, s: f64, t: f64) -> f64 {
        match self {
            Expr::Number(v) => *v,
            Expr::S => s,
            Expr::T => t,
            Expr::Neg(a) => -a.eval(s, t),
            Expr::Binary(op, a, b) => {
                let (a, b) = (a.eval(s, t), b.eval(s, t));
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                    BinOp::Pow => a.powf(b),
                }
            }
            Expr::Call(f, a) => {
                let a = a.eval(s, t);
                match f {
                    Func::Abs => a.abs(),
                    Func::Ln => a.ln(),
                    Func::Exp => a.exp(),
                    Func::Sign => {
                        if a > 0.0 {
                            1.0
                        } else if a < 0.0 {
                            -1.0
                        } else {
                            0.0
                        }
                    }
                }
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Number(v) => write!(f, "{v}"),
            Expr::S => write!(f, "s"),
            Expr::T => write!(f, "t"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Binary(op, a, b) => {
                let sym = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                    BinOp::Pow => "^",
                };
                write!(f, "({a}{sym}{b})")
            }
            Expr::Call(func, a) => {
                let name = match func {
                    Func::Abs => "abs",
                    Func::Ln => "ln",
                    Func::Exp => "exp",
                    Func::Sign => "sign",
                };
                write!(f, "{name}({a})")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Number(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    End,
}

impl Token {
    fn describe(&self) -> String {
        match self {
            Token::Number(v) => format!("number {v}"),
            Token::Ident(name) => format!("`{name}`"),
            Token::Op(c) => format!("`{c}`"),
            Token::LParen => "`(`".into(),
            Token::RParen => "`)`".into(),
            Token::End => "end of input".into(),
        }
    }
}

fn tokenize(src: &str) -> Result<Vec<(usize, Token)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text = &src[start..i];
            let value = text.parse().map_err(|_| ParseError {
                position: start,
                expected: vec!["number".into()],
                found: format!("`{text}`"),
            })?;
            out.push((start, Token::Number(value)));
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((start, Token::Ident(src[start..i].to_owned())));
        } else if "+-*/^".contains(c) {
            out.push((i, Token::Op(c)));
            i += 1;
        } else if c == '(' {
            out.push((i, Token::LParen));
            i += 1;
        } else if c == ')' {
            out.push((i, Token::RParen));
            i += 1;
        } else {
            let ch = src[i..].chars().next().unwrap_or('?');
            return Err(ParseError {
                position: i,
                expected: vec!["number".into(), "variable".into(), "operator".into(), "parenthesis".into()],
                found: format!("`{ch}`"),
            });
        }
    }
    out.push((src.len(), Token::End));
    Ok(out)
}

struct Parser {
    tokens: Vec<(usize, Token)>,
    pos: usize,
}

const ATOM_START: &[&str] = &["number", "`s`", "`t`", "function", "`(`", "`-`"];

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos].1
    }

    fn bump(&mut self) -> Token {
        let token = self.tokens[self.pos].1.clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        token
    }

    fn unexpected(&self, expected: &[&str]) -> ParseError {
        let (position, token) = &self.tokens[self.pos];
        ParseError {
            position: *position,
            expected: expected.iter().map(|s| (*s).to_owned()).collect(),
            found: token.describe(),
        }
    }

    fn sum(&mut self) -> Result<Expr, ParseError> {
        let mut left = self.product()?;
        loop {
            let op = match self.peek() {
                Token::Op('+') => BinOp::Add,
                Token::Op('-') => BinOp::Sub,
                _ => return Ok(left),
            };
            self.bump();
            left = Expr::Binary(op, Box::new(left), Box::new(self.product()?));
        }
    }

    fn product(&mut self) -> Result<Expr, ParseError> {
        let mut left = self.unary()?;
        loop {
            let op = match self.peek() {
                Token::Op('*') => BinOp::Mul,
                Token::Op('/') => BinOp::Div,
                _ => return Ok(left),
            };
            self.bump();
            left = Expr::Binary(op, Box::new(left), Box::new(self.unary()?));
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Token::Op('-') => {
                self.bump();
                Ok(Expr::Neg(Box::new(self.unary()?)))
            }
            Token::Op('+') => {
                self.bump();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if matches!(self.peek(), Token::Op('^')) {
            self.bump();
            let exponent = self.unary()?;
            return Ok(Expr::Binary(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek().clone() {
            Token::Number(v) => {
                self.bump();
                Ok(Expr::Number(v))
            }
            Token::Ident(name) => {
                let func = match name.as_str() {
                    "s" => {
                        self.bump();
                        return Ok(Expr::S);
                    }
                    "t" => {
                        self.bump();
                        return Ok(Expr::T);
                    }
                    "abs" => Func::Abs,
                    "ln" => Func::Ln,
                    "exp" => Func::Exp,
                    "sign" => Func::Sign,
                    _ => return Err(self.unexpected(&["`s`", "`t`", "abs", "ln", "exp", "sign"])),
                };
                self.bump();
                self.expect_lparen()?;
                let arg = self.sum()?;
                self.expect_rparen()?;
                Ok(Expr::Call(func, Box::new(arg)))
            }
            Token::LParen => {
                self.bump();
                let inner = self.sum()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            _ => Err(self.unexpected(ATOM_START)),
        }
    }

    fn expect_lparen(&mut self) -> Result<(), ParseError> {
        if matches!(self.peek(), Token::LParen) {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(&["`(`"]))
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        if matches!(self.peek(), Token::RParen) {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(&["`)`", "operator"]))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval(src: &str, s: f64, t: f64) -> f64 {
        Expr::parse(src).unwrap().eval(s, t)
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(eval("1 + 2 * 3", 0.0, 0.0), 7.0);
        assert_eq!(eval("2^3^2", 0.0, 0.0), 512.0);
        assert_eq!(eval("-s^2", 3.0, 0.0), -9.0);
        assert_eq!(eval("s^-1", 4.0, 0.0), 0.25);
        assert_eq!(eval("(s - t) / 2", 5.0, 1.0), 2.0);
        assert_eq!(eval("8 - 2 - 1", 0.0, 0.0), 5.0);
    }

    #[test]
    fn functions() {
        assert_eq!(eval("abs(s) + sign(t)", -2.0, -0.5), 1.0);
        assert_eq!(eval("sign(0)", 0.0, 0.0), 0.0);
        assert!((eval("ln(exp(s))", 1.25, 0.0) - 1.25).abs() < 1e-15);
        assert!((eval("sign(s)*abs(s)^(5/3)", -8.0, 0.0) + 32.0).abs() < 1e-12);
        assert_eq!(eval("1.5e2", 0.0, 0.0), 150.0);
    }

    #[test]
    fn errors_carry_position_and_expectation() {
        let err = Expr::parse("s + * t").unwrap_err();
        assert_eq!(err.position, 4);
        assert!(err.expected.iter().any(|e| e == "`s`"));
        let err = Expr::parse("ln(s").unwrap_err();
        assert_eq!(err.position, 4);
        assert!(err.expected.iter().any(|e| e == "`)`"));
        let err = Expr::parse("foo(s)").unwrap_err();
        assert_eq!(err.position, 0);
        let err = Expr::parse("s $ t").unwrap_err();
        assert_eq!(err.position, 2);
        let err = Expr::parse("s t").unwrap_err();
        assert_eq!(err.found, "`t`");
    }

    #[test]
    fn display_reparses_to_same_value() {
        let e = Expr::parse("-(s+1)^2*t/3 - abs(t)").unwrap();
        let again = Expr::parse(&e.to_string()).unwrap();
        assert_eq!(e.eval(0.3, -1.7), again.eval(0.3, -1.7));
    }
}
