//! A small arithmetic expression language for user-defined rate functions.
//!
//! Scenario files may define birth/death rates as strings such as
//! `"log(1 + (x1/norm)/(0.1 + x2/norm))"`. The grammar is the usual
//! infix one:
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := number | ident | func '(' args ')' | '(' expr ')' | '-' factor
//! ```
//!
//! Identifiers are `x1..xd`, `norm` (the Euclidean norm of the state), and
//! the functions `log`, `exp`, `sqrt`, `pow`, `min`, `max`. Whitespace is
//! insignificant. Evaluation is strict about domains: `log`/`sqrt` of a
//! negative number and division by zero are reported as errors rather than
//! silently propagating NaN.

use std::fmt;
use thiserror::Error;

const MAX_SOURCE_BYTES: usize = 64 * 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Log,
    Exp,
    Sqrt,
    Pow,
    Min,
    Max,
}

impl Func {
    fn arity(self) -> usize {
        match self {
            Func::Log | Func::Exp | Func::Sqrt => 1,
            Func::Pow | Func::Min | Func::Max => 2,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Func::Log => "log",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Pow => "pow",
            Func::Min => "min",
            Func::Max => "max",
        }
    }

    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "log" => Func::Log,
            "exp" => Func::Exp,
            "sqrt" => Func::Sqrt,
            "pow" => Func::Pow,
            "min" => Func::Min,
            "max" => Func::Max,
            _ => return None,
        })
    }
}

/// Abstract syntax tree of a rate expression.
#[derive(Debug, Clone, PartialEq)]
pub enum RateExpr {
    Number(f64),
    /// Zero-based coordinate index; `x1` parses to `Var(0)`.
    Var(usize),
    /// Euclidean norm of the state vector.
    Norm,
    Neg(Box<RateExpr>),
    Bin(BinOp, Box<RateExpr>, Box<RateExpr>),
    Call(Func, Vec<RateExpr>),
}

impl RateExpr {
    /// Largest 1-based variable index referenced, or 0 if none.
    pub fn max_var_index(&self) -> usize {
        match self {
            RateExpr::Number(_) | RateExpr::Norm => 0,
            RateExpr::Var(i) => i + 1,
            RateExpr::Neg(e) => e.max_var_index(),
            RateExpr::Bin(_, a, b) => a.max_var_index().max(b.max_var_index()),
            RateExpr::Call(_, args) => args.iter().map(Self::max_var_index).max().unwrap_or(0),
        }
    }
}

impl fmt::Display for RateExpr {
    /// Canonical printer: fully parenthesized, stable under re-parsing.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RateExpr::Number(v) => write!(f, "{v}"),
            RateExpr::Var(i) => write!(f, "x{}", i + 1),
            RateExpr::Norm => f.write_str("norm"),
            RateExpr::Neg(e) => write!(f, "(-{e})"),
            RateExpr::Bin(op, a, b) => {
                let sym = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                };
                write!(f, "({a} {sym} {b})")
            }
            RateExpr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// Parse failure with a 1-based source position.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("parse error at {line}:{col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

/// Evaluation failure, carrying the offending subexpression.
#[derive(Debug, Clone, Error, PartialEq)]
#[error("evaluation error in `{subexpr}`: {message}")]
pub struct EvalError {
    pub message: String,
    pub subexpr: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    LParen,
    RParen,
    Comma,
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    col: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Self {
            src: src.as_bytes(),
            pos: 0,
            line: 1,
            col: 1,
        }
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError {
            line: self.line,
            col: self.col,
            message: message.into(),
        }
    }

    fn bump(&mut self) -> u8 {
        let c = self.src[self.pos];
        self.pos += 1;
        if c == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        c
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn tokenize(mut self) -> Result<Vec<Token>, ParseError> {
        let mut out = Vec::new();
        loop {
            while matches!(self.peek(), Some(c) if c.is_ascii_whitespace()) {
                self.bump();
            }
            let (line, col) = (self.line, self.col);
            let Some(c) = self.peek() else {
                out.push(Token {
                    tok: Tok::Eof,
                    line,
                    col,
                });
                return Ok(out);
            };
            let tok = match c {
                b'+' => {
                    self.bump();
                    Tok::Plus
                }
                b'-' => {
                    self.bump();
                    Tok::Minus
                }
                b'*' => {
                    self.bump();
                    Tok::Star
                }
                b'/' => {
                    self.bump();
                    Tok::Slash
                }
                b'(' => {
                    self.bump();
                    Tok::LParen
                }
                b')' => {
                    self.bump();
                    Tok::RParen
                }
                b',' => {
                    self.bump();
                    Tok::Comma
                }
                b'0'..=b'9' | b'.' => self.number()?,
                c if c.is_ascii_alphabetic() || c == b'_' => self.ident(),
                other => {
                    return Err(self.error(format!("unexpected character `{}`", other as char)));
                }
            };
            out.push(Token { tok, line, col });
        }
    }

    fn number(&mut self) -> Result<Tok, ParseError> {
        let start = self.pos;
        let (line, col) = (self.line, self.col);
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.bump();
        }
        if self.peek() == Some(b'.') {
            self.bump();
            while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                self.bump();
            }
        }
        if matches!(self.peek(), Some(b'e' | b'E')) {
            self.bump();
            if matches!(self.peek(), Some(b'+' | b'-')) {
                self.bump();
            }
            if !matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                return Err(self.error("malformed exponent in numeric literal"));
            }
            while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                self.bump();
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits");
        text.parse::<f64>().map(Tok::Num).map_err(|_| ParseError {
            line,
            col,
            message: format!("invalid numeric literal `{text}`"),
        })
    }

    fn ident(&mut self) -> Tok {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == b'_') {
            self.bump();
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii ident");
        Tok::Ident(text.to_owned())
    }
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error_at(tok: &Token, message: impl Into<String>) -> ParseError {
        ParseError {
            line: tok.line,
            col: tok.col,
            message: message.into(),
        }
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), ParseError> {
        let t = self.bump();
        if t.tok == want {
            Ok(())
        } else {
            Err(Self::error_at(&t, format!("expected {what}")))
        }
    }

    fn expr(&mut self) -> Result<RateExpr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek().tok {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = RateExpr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<RateExpr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek().tok {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.factor()?;
            lhs = RateExpr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn factor(&mut self) -> Result<RateExpr, ParseError> {
        let t = self.bump();
        match &t.tok {
            Tok::Num(v) => Ok(RateExpr::Number(*v)),
            Tok::Minus => Ok(RateExpr::Neg(Box::new(self.factor()?))),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "closing `)`")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                let name = name.clone();
                self.ident_factor(&t, &name)
            }
            _ => Err(Self::error_at(&t, "expected a number, identifier, or `(`")),
        }
    }

    fn ident_factor(&mut self, at: &Token, name: &str) -> Result<RateExpr, ParseError> {
        if name == "norm" {
            return Ok(RateExpr::Norm);
        }
        if let Some(rest) = name.strip_prefix('x')
            && let Ok(i) = rest.parse::<usize>()
        {
            if i == 0 {
                return Err(Self::error_at(at, "variable indices start at x1"));
            }
            return Ok(RateExpr::Var(i - 1));
        }
        if let Some(func) = Func::from_name(name) {
            self.expect(Tok::LParen, format!("`(` after `{name}`").as_str())?;
            let mut args = vec![self.expr()?];
            while self.peek().tok == Tok::Comma {
                self.bump();
                args.push(self.expr()?);
            }
            let close = self.bump();
            if close.tok != Tok::RParen {
                return Err(Self::error_at(
                    &close,
                    "expected `,` or `)` in argument list",
                ));
            }
            if args.len() != func.arity() {
                return Err(Self::error_at(
                    at,
                    format!(
                        "`{name}` takes {} argument(s), got {}",
                        func.arity(),
                        args.len()
                    ),
                ));
            }
            return Ok(RateExpr::Call(func, args));
        }
        Err(Self::error_at(at, format!("unknown identifier `{name}`")))
    }
}

/// Parse an expression. Errors carry a 1-based line/column position.
pub fn parse(text: &str) -> Result<RateExpr, ParseError> {
    if text.trim().is_empty() {
        return Err(ParseError {
            line: 1,
            col: 1,
            message: "empty expression".into(),
        });
    }
    if text.len() > MAX_SOURCE_BYTES {
        return Err(ParseError {
            line: 1,
            col: 1,
            message: format!("expression longer than {MAX_SOURCE_BYTES} bytes"),
        });
    }
    let tokens = Lexer::new(text).tokenize()?;
    let mut p = Parser { tokens, pos: 0 };
    let expr = p.expr()?;
    let t = p.bump();
    if t.tok != Tok::Eof {
        return Err(Parser::error_at(&t, "unexpected trailing input"));
    }
    Ok(expr)
}

/// Evaluate an expression at a state vector.
///
/// The state must be non-zero (the norm of the origin would make
/// direction-dependent rates meaningless).
pub fn evaluate(expr: &RateExpr, x: &[f64]) -> Result<f64, EvalError> {
    if x.iter().all(|&c| c == 0.0) {
        return Err(EvalError {
            message: "state vector is the origin".into(),
            subexpr: expr.to_string(),
        });
    }
    eval_inner(expr, x)
}

fn eval_inner(expr: &RateExpr, x: &[f64]) -> Result<f64, EvalError> {
    let fail = |message: String| EvalError {
        message,
        subexpr: expr.to_string(),
    };
    let finite = |v: f64| {
        if v.is_finite() {
            Ok(v)
        } else {
            Err(fail(format!("non-finite result {v}")))
        }
    };
    match expr {
        RateExpr::Number(v) => Ok(*v),
        RateExpr::Var(i) => x
            .get(*i)
            .copied()
            .ok_or_else(|| fail(format!("variable x{} exceeds dimension {}", i + 1, x.len()))),
        RateExpr::Norm => Ok(crate::vecn::norm(x)),
        RateExpr::Neg(e) => Ok(-eval_inner(e, x)?),
        RateExpr::Bin(op, a, b) => {
            let va = eval_inner(a, x)?;
            let vb = eval_inner(b, x)?;
            match op {
                BinOp::Add => finite(va + vb),
                BinOp::Sub => finite(va - vb),
                BinOp::Mul => finite(va * vb),
                BinOp::Div => {
                    if vb == 0.0 {
                        Err(fail("division by zero".into()))
                    } else {
                        finite(va / vb)
                    }
                }
            }
        }
        RateExpr::Call(func, args) => {
            let v: Vec<f64> = args
                .iter()
                .map(|a| eval_inner(a, x))
                .collect::<Result<_, _>>()?;
            match func {
                Func::Log => {
                    if v[0] <= 0.0 {
                        Err(fail(format!("log of non-positive value {}", v[0])))
                    } else {
                        finite(v[0].ln())
                    }
                }
                Func::Exp => finite(v[0].exp()),
                Func::Sqrt => {
                    if v[0] < 0.0 {
                        Err(fail(format!("sqrt of negative value {}", v[0])))
                    } else {
                        Ok(v[0].sqrt())
                    }
                }
                Func::Pow => finite(v[0].powf(v[1])),
                Func::Min => Ok(v[0].min(v[1])),
                Func::Max => Ok(v[0].max(v[1])),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_shannon_rate_shape() {
        let e = parse("log(1 + (x1/norm)/(0.1 + x2/norm))").unwrap();
        let v = evaluate(&e, &[1.0, 0.0]).unwrap();
        assert!((v - 11.0f64.ln()).abs() < 1e-12, "got {v}");
    }

    #[test]
    fn incomplete_expression_reports_column() {
        let err = parse("x1 + ").unwrap_err();
        assert_eq!((err.line, err.col), (1, 6), "{err}");
    }

    #[test]
    fn unit_sphere_identity() {
        let e = parse("pow(x1/norm, 2) + pow(x2/norm, 2)").unwrap();
        for x in [[3.0, 4.0], [0.2, 0.0], [1.0, 1.0]] {
            let v = evaluate(&e, &x).unwrap();
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn coordinate_ratio() {
        let e = parse("x1/norm").unwrap();
        assert!((evaluate(&e, &[3.0, 4.0]).unwrap() - 0.6).abs() < 1e-15);
    }

    #[test]
    fn domain_errors_are_reported() {
        let log = parse("log(x1 - 2)").unwrap();
        let err = evaluate(&log, &[1.0, 1.0]).unwrap_err();
        assert!(err.message.contains("log"), "{err}");
        assert!(err.subexpr.contains("log"), "{err}");

        let div = parse("1/(x1 - 1)").unwrap();
        let err = evaluate(&div, &[1.0, 1.0]).unwrap_err();
        assert!(err.message.contains("division by zero"), "{err}");

        let sqrt = parse("sqrt(0 - x1)").unwrap();
        assert!(evaluate(&sqrt, &[1.0, 0.0]).is_err());
    }

    #[test]
    fn origin_is_rejected() {
        let e = parse("x1 + 1").unwrap();
        assert!(evaluate(&e, &[0.0, 0.0]).is_err());
    }

    #[test]
    fn unknown_identifier_and_arity() {
        let err = parse("foo(1)").unwrap_err();
        assert!(err.message.contains("unknown identifier"), "{err}");
        let err = parse("pow(x1)").unwrap_err();
        assert!(err.message.contains("argument"), "{err}");
        let err = parse("(x1 + 1").unwrap_err();
        assert!(err.message.contains(")"), "{err}");
    }

    #[test]
    fn max_var_index_walks_the_tree() {
        let e = parse("min(x1, x3) + norm").unwrap();
        assert_eq!(e.max_var_index(), 3);
    }

    fn arb_expr() -> impl Strategy<Value = RateExpr> {
        let leaf = prop_oneof![
            (0.0f64..100.0).prop_map(RateExpr::Number),
            (0usize..4).prop_map(RateExpr::Var),
            Just(RateExpr::Norm),
        ];
        leaf.prop_recursive(4, 32, 4, |inner| {
            prop_oneof![
                inner.clone().prop_map(|e| RateExpr::Neg(Box::new(e))),
                (inner.clone(), inner.clone(), 0u8..4).prop_map(|(a, b, op)| {
                    let op = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div][op as usize];
                    RateExpr::Bin(op, Box::new(a), Box::new(b))
                }),
                inner
                    .clone()
                    .prop_map(|a| RateExpr::Call(Func::Sqrt, vec![a])),
                (inner.clone(), inner).prop_map(|(a, b)| RateExpr::Call(Func::Max, vec![a, b])),
            ]
        })
    }

    proptest! {
        // parse . print is the identity on ASTs, so parse . print . parse = parse.
        #[test]
        fn printer_roundtrip(e in arb_expr()) {
            let printed = e.to_string();
            let reparsed = parse(&printed).unwrap();
            prop_assert_eq!(reparsed, e);
        }
    }
}
