//! Recursive-descent parser and evaluator for the expression frontend.
//!
//! Grammar: numbers (decimal, optional exponent), `pi`, variables `x1..xd`,
//! `+ - * /` with standard precedence, right-associative `^`, unary minus,
//! parentheses, and the functions `sin cos exp log sqrt abs` (`log` is the
//! natural logarithm).

use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("syntax error at position {position}: {message}")]
pub struct ParseError {
    /// 0-based byte offset into the input (input length when the input ended
    /// too early).
    pub position: usize,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryFn {
    Neg,
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Abs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

/// Parsed expression tree; variable indices are 0-based internally.
#[derive(Debug, Clone, PartialEq)]
pub enum ExprNode {
    Const(f64),
    Var(usize),
    Unary(UnaryFn, Box<ExprNode>),
    Binary(BinOp, Box<ExprNode>, Box<ExprNode>),
}

impl ExprNode {
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        match self {
            ExprNode::Const(c) => *c,
            ExprNode::Var(j) => x[*j],
            ExprNode::Unary(f, a) => {
                let v = a.evaluate(x);
                match f {
                    UnaryFn::Neg => -v,
                    UnaryFn::Sin => v.sin(),
                    UnaryFn::Cos => v.cos(),
                    UnaryFn::Exp => v.exp(),
                    UnaryFn::Log => v.ln(),
                    UnaryFn::Sqrt => v.sqrt(),
                    UnaryFn::Abs => v.abs(),
                }
            }
            ExprNode::Binary(op, a, b) => {
                let va = a.evaluate(x);
                let vb = b.evaluate(x);
                match op {
                    BinOp::Add => va + vb,
                    BinOp::Sub => va - vb,
                    BinOp::Mul => va * vb,
                    BinOp::Div => va / vb,
                    BinOp::Pow => va.powf(vb),
                }
            }
        }
    }
}

impl fmt::Display for ExprNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExprNode::Const(c) => write!(f, "{c}"),
            ExprNode::Var(j) => write!(f, "x{}", j + 1),
            ExprNode::Unary(UnaryFn::Neg, a) => write!(f, "(-{a})"),
            ExprNode::Unary(func, a) => {
                let name = match func {
                    UnaryFn::Sin => "sin",
                    UnaryFn::Cos => "cos",
                    UnaryFn::Exp => "exp",
                    UnaryFn::Log => "log",
                    UnaryFn::Sqrt => "sqrt",
                    UnaryFn::Abs => "abs",
                    UnaryFn::Neg => unreachable!(),
                };
                write!(f, "{name}({a})")
            }
            ExprNode::Binary(op, a, b) => {
                let sym = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                    BinOp::Pow => "^",
                };
                write!(f, "({a}{sym}{b})")
            }
        }
    }
}

/// Parses `text` into an expression over `x1..x<d>`.
pub fn parse_expression(text: &str, d: usize) -> Result<ExprNode, ParseError> {
    let mut p = Parser {
        bytes: text.as_bytes(),
        pos: 0,
        d,
    };
    p.skip_ws();
    if p.at_end() {
        return Err(p.error("empty expression"));
    }
    let node = p.expr()?;
    p.skip_ws();
    if !p.at_end() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(node)
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
    d: usize,
}

impl<'a> Parser<'a> {
    fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError {
            position: self.pos,
            message: message.into(),
        }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.bytes.len()
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(b' ' | b'\t' | b'\n' | b'\r')) {
            self.pos += 1;
        }
    }

    fn expr(&mut self) -> Result<ExprNode, ParseError> {
        let mut node = self.term()?;
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    node = ExprNode::Binary(BinOp::Add, Box::new(node), Box::new(self.term()?));
                }
                Some(b'-') => {
                    self.pos += 1;
                    node = ExprNode::Binary(BinOp::Sub, Box::new(node), Box::new(self.term()?));
                }
                _ => return Ok(node),
            }
        }
    }

    fn term(&mut self) -> Result<ExprNode, ParseError> {
        let mut node = self.factor()?;
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    node = ExprNode::Binary(BinOp::Mul, Box::new(node), Box::new(self.factor()?));
                }
                Some(b'/') => {
                    self.pos += 1;
                    node = ExprNode::Binary(BinOp::Div, Box::new(node), Box::new(self.factor()?));
                }
                _ => return Ok(node),
            }
        }
    }

    fn factor(&mut self) -> Result<ExprNode, ParseError> {
        self.skip_ws();
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(ExprNode::Unary(UnaryFn::Neg, Box::new(self.factor()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<ExprNode, ParseError> {
        let base = self.atom()?;
        self.skip_ws();
        if self.peek() == Some(b'^') {
            self.pos += 1;
            // Right-associative: the exponent re-enters at factor level so
            // `2^3^2 = 2^(3^2)` and `2^-1` both parse.
            let exponent = self.factor()?;
            return Ok(ExprNode::Binary(
                BinOp::Pow,
                Box::new(base),
                Box::new(exponent),
            ));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<ExprNode, ParseError> {
        self.skip_ws();
        match self.peek() {
            None => Err(self.error("expected a value, found end of input")),
            Some(b'(') => {
                self.pos += 1;
                let node = self.expr()?;
                self.skip_ws();
                if self.peek() != Some(b')') {
                    return Err(self.error("expected `)`"));
                }
                self.pos += 1;
                Ok(node)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.identifier(),
            Some(c) => Err(self.error(format!("unexpected character `{}`", c as char))),
        }
    }

    fn number(&mut self) -> Result<ExprNode, ParseError> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.peek() == Some(b'.') {
            self.pos += 1;
            while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                self.pos += 1;
            }
        }
        if matches!(self.peek(), Some(b'e' | b'E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                    self.pos += 1;
                }
            } else {
                self.pos = mark;
            }
        }
        let text = std::str::from_utf8(&self.bytes[start..self.pos]).expect("ascii");
        text.parse::<f64>()
            .map(ExprNode::Const)
            .map_err(|_| ParseError {
                position: start,
                message: format!("invalid number `{text}`"),
            })
    }

    fn identifier(&mut self) -> Result<ExprNode, ParseError> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric()) {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.bytes[start..self.pos]).expect("ascii");
        if name == "pi" {
            return Ok(ExprNode::Const(std::f64::consts::PI));
        }
        if let Some(idx_text) = name.strip_prefix('x') {
            if !idx_text.is_empty() && idx_text.bytes().all(|c| c.is_ascii_digit()) {
                let idx: usize = idx_text.parse().map_err(|_| ParseError {
                    position: start,
                    message: format!("invalid variable `{name}`"),
                })?;
                if idx == 0 || idx > self.d {
                    return Err(ParseError {
                        position: start,
                        message: format!(
                            "variable `{name}` out of range for a {}-input function",
                            self.d
                        ),
                    });
                }
                return Ok(ExprNode::Var(idx - 1));
            }
        }
        let func = match name {
            "sin" => UnaryFn::Sin,
            "cos" => UnaryFn::Cos,
            "exp" => UnaryFn::Exp,
            "log" => UnaryFn::Log,
            "sqrt" => UnaryFn::Sqrt,
            "abs" => UnaryFn::Abs,
            _ => {
                return Err(ParseError {
                    position: start,
                    message: format!("unknown identifier `{name}`"),
                })
            }
        };
        self.skip_ws();
        if self.peek() != Some(b'(') {
            return Err(self.error(format!("expected `(` after `{name}`")));
        }
        self.pos += 1;
        let arg = self.expr()?;
        self.skip_ws();
        if self.peek() != Some(b')') {
            return Err(self.error("expected `)`"));
        }
        self.pos += 1;
        Ok(ExprNode::Unary(func, Box::new(arg)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_harmonic_wave() {
        let node = parse_expression("x1*sin(2*pi/x2*x3+x4)", 4).unwrap();
        // (2*pi/x2)*x3 + x4 by left associativity of * and /.
        let v = node.evaluate(&[1.0, 1.0, 0.25, 0.0]);
        assert!((v - 1.0).abs() < 1e-15);
    }

    #[test]
    fn dangling_operator_reports_position() {
        let err = parse_expression("x1+", 2).unwrap_err();
        assert_eq!(err.position, 3);
    }

    #[test]
    fn power_is_right_associative() {
        let node = parse_expression("2^3^2", 1).unwrap();
        assert_eq!(node.evaluate(&[0.0]), 512.0);
        let node = parse_expression("2^-1", 1).unwrap();
        assert_eq!(node.evaluate(&[0.0]), 0.5);
        let node = parse_expression("-2^2", 1).unwrap();
        assert_eq!(node.evaluate(&[0.0]), -4.0);
    }

    #[test]
    fn unknown_identifier_and_bad_variable() {
        let err = parse_expression("x1+tan(x2)", 2).unwrap_err();
        assert!(err.message.contains("tan"));
        assert_eq!(err.position, 3);
        let err = parse_expression("x3", 2).unwrap_err();
        assert!(err.message.contains("out of range"));
        let err = parse_expression("x0", 2).unwrap_err();
        assert!(err.message.contains("out of range"));
    }

    #[test]
    fn numbers_with_exponent() {
        let node = parse_expression("1.5e-2+2", 1).unwrap();
        assert!((node.evaluate(&[0.0]) - 2.015).abs() < 1e-15);
    }

    #[test]
    fn rejects_trailing_garbage() {
        assert!(parse_expression("x1 x2", 2).is_err());
        assert!(parse_expression("(x1", 2).is_err());
        assert!(parse_expression("", 2).is_err());
    }
}
