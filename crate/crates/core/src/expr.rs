//! Lagrangian expressions `L(t, u, v, w)`.
//!
//! Grammar (whitespace is insignificant between tokens):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?          // right associative
//! primary := number | ident | ident '(' expr ')' | '(' expr ')'
//! ident   := [a-z]+
//! number  := digits ('.' digits?)? (('e' | 'E') ('+' | '-')? digits)?
//!          | '.' digits (exponent)?
//! ```
//!
//! Variables are `t, u, v, w`; functions are `sin, cos, exp, log, sqrt, abs`.
//! So `-v^2` is `-(v^2)` and `2^3^2` is `2^(3^2)`.
//!
//! Evaluation propagates a [`LagrangianJet`]: the value, the gradient in
//! `(u, v, w)` and the upper triangle of the Hessian, in one forward pass.
//! `t` is a passive parameter.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Syntax errors, positioned by byte offset into the source.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("unexpected character {ch:?} at {pos}")]
    UnexpectedChar { ch: char, pos: usize },
    #[error("unexpected {found} at {pos}, expected {expected}")]
    UnexpectedToken { found: String, expected: &'static str, pos: usize },
    #[error("unknown identifier {name:?} at {pos}")]
    UnknownIdentifier { name: String, pos: usize },
    #[error("function {name} takes exactly one argument (at {pos})")]
    Arity { name: String, pos: usize },
    #[error("malformed number {text:?} at {pos}")]
    BadNumber { text: String, pos: usize },
}

/// Failure evaluating an expression at a point.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("{op} undefined at {arg} in `{subexpr}`")]
    Domain { op: &'static str, arg: f64, subexpr: String },
    #[error("division by zero in `{subexpr}`")]
    DivisionByZero { subexpr: String },
    #[error("non-finite result in `{subexpr}`")]
    NonFinite { subexpr: String },
}

/// Independent variables of a Lagrangian.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    T,
    U,
    V,
    W,
}

impl Var {
    fn name(self) -> &'static str {
        match self {
            Var::T => "t",
            Var::U => "u",
            Var::V => "v",
            Var::W => "w",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Abs,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

/// Expression tree.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl fmt::Display for Expr {
    /// Fully parenthesised, so the output re-parses to the same tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(x) if x.is_sign_negative() => write!(f, "(-{:?})", -x),
            Expr::Num(x) => write!(f, "{x:?}"),
            Expr::Var(v) => f.write_str(v.name()),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Binary(op, l, r) => write!(f, "({l} {} {r})", op.symbol()),
            Expr::Call(func, e) => write!(f, "{}({e})", func.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(x) => format!("number {x}"),
            Tok::Ident(s) => format!("identifier {s:?}"),
            Tok::Op(c) => format!("{c:?}"),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::End => "end of input".into(),
        }
    }
}

fn tokenize(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
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
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text = &src[start..i];
            let value = text
                .parse::<f64>()
                .map_err(|_| ParseError::BadNumber { text: text.to_string(), pos: start })?;
            out.push((Tok::Num(value), start));
        } else if c.is_ascii_lowercase() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_lowercase() {
                i += 1;
            }
            out.push((Tok::Ident(src[start..i].to_string()), start));
        } else {
            let tok = match c {
                '+' | '-' | '*' | '/' | '^' => Tok::Op(c),
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                _ => {
                    let ch = src[i..].chars().next().unwrap_or(c);
                    return Err(ParseError::UnexpectedChar { ch, pos: i });
                }
            };
            out.push((tok, i));
            i += 1;
        }
    }
    out.push((Tok::End, src.len()));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> usize {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok, expected: &'static str) -> Result<(), ParseError> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            Err(ParseError::UnexpectedToken { found: self.peek().describe(), expected, pos: self.pos() })
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Op('+') => BinOp::Add,
                Tok::Op('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Op('*') => BinOp::Mul,
                Tok::Op('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Tok::Op('-') {
            self.bump();
            Ok(Expr::Neg(Box::new(self.unary()?)))
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if *self.peek() == Tok::Op('^') {
            self.bump();
            let exp = self.unary()?;
            Ok(Expr::Binary(BinOp::Pow, Box::new(base), Box::new(exp)))
        } else {
            Ok(base)
        }
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let (tok, pos) = self.bump();
        match tok {
            Tok::Num(x) => Ok(Expr::Num(x)),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if let Some(func) = Func::from_name(&name) {
                    self.expect(Tok::LParen, "'(' after function name")?;
                    if *self.peek() == Tok::RParen {
                        return Err(ParseError::Arity { name, pos });
                    }
                    let arg = self.expr()?;
                    if *self.peek() != Tok::RParen {
                        return Err(ParseError::Arity { name, pos });
                    }
                    self.bump();
                    return Ok(Expr::Call(func, Box::new(arg)));
                }
                let var = match name.as_str() {
                    "t" => Var::T,
                    "u" => Var::U,
                    "v" => Var::V,
                    "w" => Var::W,
                    _ => return Err(ParseError::UnknownIdentifier { name, pos }),
                };
                Ok(Expr::Var(var))
            }
            other => Err(ParseError::UnexpectedToken { found: other.describe(), expected: "an operand", pos }),
        }
    }
}

/// Parses an expression string into a tree.
pub fn parse(src: &str) -> Result<Expr, ParseError> {
    let mut p = Parser { toks: tokenize(src)?, at: 0 };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(ParseError::UnexpectedToken { found: p.peek().describe(), expected: "an operator or end of input", pos: p.pos() });
    }
    Ok(e)
}

/// Value, gradient and Hessian of `L` with respect to `(u, v, w)`.
///
/// Hessian entries are stored as the upper triangle in the order
/// `uu, uv, uw, vv, vw, ww`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LagrangianJet {
    pub value: f64,
    pub grad: [f64; 3],
    pub hess: [f64; 6],
}

// Indices into the packed upper triangle.
const HESS_INDEX: [[usize; 3]; 3] = [[0, 1, 2], [1, 3, 4], [2, 4, 5]];

impl LagrangianJet {
    pub fn constant(value: f64) -> Self {
        Self { value, ..Self::default() }
    }

    fn variable(value: f64, slot: usize) -> Self {
        let mut j = Self::constant(value);
        j.grad[slot] = 1.0;
        j
    }

    pub fn l_u(&self) -> f64 {
        self.grad[0]
    }
    pub fn l_v(&self) -> f64 {
        self.grad[1]
    }
    pub fn l_w(&self) -> f64 {
        self.grad[2]
    }
    pub fn l_uu(&self) -> f64 {
        self.hess[0]
    }
    pub fn l_uv(&self) -> f64 {
        self.hess[1]
    }
    pub fn l_uw(&self) -> f64 {
        self.hess[2]
    }
    pub fn l_vv(&self) -> f64 {
        self.hess[3]
    }
    pub fn l_vw(&self) -> f64 {
        self.hess[4]
    }
    pub fn l_ww(&self) -> f64 {
        self.hess[5]
    }

    /// Hessian entry `(i, j)`, indices in `u, v, w` order.
    pub fn hessian(&self, i: usize, j: usize) -> f64 {
        self.hess[HESS_INDEX[i][j]]
    }

    fn is_constant(&self) -> bool {
        self.grad.iter().chain(&self.hess).all(|&x| x == 0.0)
    }

    /// `f(self)` given `f`, `f'` and `f''` at `self.value`.
    #[allow(clippy::needless_range_loop)]
    fn chain(&self, f0: f64, f1: f64, f2: f64) -> Self {
        let mut out = Self::constant(f0);
        for i in 0..3 {
            out.grad[i] = f1 * self.grad[i];
        }
        for i in 0..3 {
            for j in i..3 {
                let k = HESS_INDEX[i][j];
                out.hess[k] = f2 * self.grad[i] * self.grad[j] + f1 * self.hess[k];
            }
        }
        out
    }

    fn add(&self, o: &Self, sign: f64) -> Self {
        let mut out = *self;
        out.value += sign * o.value;
        for i in 0..3 {
            out.grad[i] += sign * o.grad[i];
        }
        for k in 0..6 {
            out.hess[k] += sign * o.hess[k];
        }
        out
    }

    #[allow(clippy::needless_range_loop)]
    fn mul(&self, o: &Self) -> Self {
        let mut out = Self::constant(self.value * o.value);
        for i in 0..3 {
            out.grad[i] = self.value * o.grad[i] + o.value * self.grad[i];
        }
        for i in 0..3 {
            for j in i..3 {
                let k = HESS_INDEX[i][j];
                out.hess[k] = self.value * o.hess[k]
                    + o.value * self.hess[k]
                    + self.grad[i] * o.grad[j]
                    + self.grad[j] * o.grad[i];
            }
        }
        out
    }

    fn scale(&self, c: f64) -> Self {
        self.chain(c * self.value, c, 0.0)
    }
}

fn domain(op: &'static str, arg: f64, e: &Expr) -> EvalError {
    EvalError::Domain { op, arg, subexpr: e.to_string() }
}

fn eval(e: &Expr, t: f64, u: f64, v: f64, w: f64) -> Result<LagrangianJet, EvalError> {
    let jet = match e {
        Expr::Num(x) => LagrangianJet::constant(*x),
        Expr::Var(Var::T) => LagrangianJet::constant(t),
        Expr::Var(Var::U) => LagrangianJet::variable(u, 0),
        Expr::Var(Var::V) => LagrangianJet::variable(v, 1),
        Expr::Var(Var::W) => LagrangianJet::variable(w, 2),
        Expr::Neg(x) => eval(x, t, u, v, w)?.scale(-1.0),
        Expr::Binary(op, l, r) => {
            let a = eval(l, t, u, v, w)?;
            let b = eval(r, t, u, v, w)?;
            match op {
                BinOp::Add => a.add(&b, 1.0),
                BinOp::Sub => a.add(&b, -1.0),
                BinOp::Mul => a.mul(&b),
                BinOp::Div => {
                    if b.value == 0.0 {
                        return Err(EvalError::DivisionByZero { subexpr: e.to_string() });
                    }
                    let inv = 1.0 / b.value;
                    a.mul(&b.chain(inv, -inv * inv, 2.0 * inv * inv * inv))
                }
                BinOp::Pow => pow(&a, &b, e)?,
            }
        }
        Expr::Call(func, x) => {
            let a = eval(x, t, u, v, w)?;
            let x0 = a.value;
            match func {
                Func::Sin => a.chain(x0.sin(), x0.cos(), -x0.sin()),
                Func::Cos => a.chain(x0.cos(), -x0.sin(), -x0.cos()),
                Func::Exp => {
                    let ex = x0.exp();
                    a.chain(ex, ex, ex)
                }
                Func::Log => {
                    if x0 <= 0.0 {
                        return Err(domain("log", x0, e));
                    }
                    a.chain(x0.ln(), 1.0 / x0, -1.0 / (x0 * x0))
                }
                Func::Sqrt => {
                    if x0 < 0.0 {
                        return Err(domain("sqrt", x0, e));
                    }
                    let s = x0.sqrt();
                    if s == 0.0 && !a.is_constant() {
                        return Err(domain("sqrt derivative", x0, e));
                    }
                    if s == 0.0 {
                        LagrangianJet::constant(0.0)
                    } else {
                        a.chain(s, 0.5 / s, -0.25 / (s * x0))
                    }
                }
                Func::Abs => {
                    if x0 == 0.0 && !a.is_constant() {
                        log::warn!("abs evaluated at its kink in `{e}`; using subgradient 0");
                    }
                    let sign = if x0 > 0.0 {
                        1.0
                    } else if x0 < 0.0 {
                        -1.0
                    } else {
                        0.0
                    };
                    a.chain(x0.abs(), sign, 0.0)
                }
            }
        }
    };
    if !jet.value.is_finite() {
        return Err(EvalError::NonFinite { subexpr: e.to_string() });
    }
    Ok(jet)
}

fn pow(a: &LagrangianJet, b: &LagrangianJet, e: &Expr) -> Result<LagrangianJet, EvalError> {
    let x = a.value;
    let p = b.value;
    if b.is_constant() && p == p.round() && p.abs() < 1e9 {
        let n = p as i32;
        if n == 0 {
            return Ok(LagrangianJet::constant(1.0));
        }
        if x == 0.0 && n < 0 {
            return Err(EvalError::DivisionByZero { subexpr: e.to_string() });
        }
        let f1 = if n == 1 { 1.0 } else { f64::from(n) * x.powi(n - 1) };
        let f2 = match n {
            1 => 0.0,
            2 => 2.0,
            _ => f64::from(n) * f64::from(n - 1) * x.powi(n - 2),
        };
        return Ok(a.chain(x.powi(n), f1, f2));
    }
    if x <= 0.0 {
        return Err(domain("non-integer power", x, e));
    }
    if b.is_constant() {
        return Ok(a.chain(x.powf(p), p * x.powf(p - 1.0), p * (p - 1.0) * x.powf(p - 2.0)));
    }
    // a^b = exp(b ln a)
    let ln_a = a.chain(x.ln(), 1.0 / x, -1.0 / (x * x));
    let prod = b.mul(&ln_a);
    let ex = prod.value.exp();
    Ok(prod.chain(ex, ex, ex))
}

/// A parsed Lagrangian, cheap to clone and share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct Lagrangian {
    source: Arc<str>,
    ast: Arc<Expr>,
}

impl Lagrangian {
    pub fn parse(src: &str) -> Result<Self, ParseError> {
        let ast = parse(src)?;
        Ok(Self { source: Arc::from(src), ast: Arc::new(ast) })
    }

    pub fn from_expr(ast: Expr) -> Self {
        let source: Arc<str> = Arc::from(ast.to_string());
        Self { source, ast: Arc::new(ast) }
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn ast(&self) -> &Expr {
        &self.ast
    }

    /// Plain value `L(t, u, v, w)`.
    pub fn eval(&self, t: f64, u: f64, v: f64, w: f64) -> Result<f64, EvalError> {
        Ok(self.eval_jet(t, u, v, w)?.value)
    }

    /// Value, gradient and Hessian in `(u, v, w)`.
    pub fn eval_jet(&self, t: f64, u: f64, v: f64, w: f64) -> Result<LagrangianJet, EvalError> {
        eval(&self.ast, t, u, v, w)
    }

    /// Whether the expression mentions `var`.
    pub fn depends_on(&self, var: Var) -> bool {
        fn walk(e: &Expr, var: Var) -> bool {
            match e {
                Expr::Num(_) => false,
                Expr::Var(v) => *v == var,
                Expr::Neg(x) | Expr::Call(_, x) => walk(x, var),
                Expr::Binary(_, l, r) => walk(l, var) || walk(r, var),
            }
        }
        walk(&self.ast, var)
    }
}

impl fmt::Display for Lagrangian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn bin(op: BinOp, l: Expr, r: Expr) -> Expr {
        Expr::Binary(op, Box::new(l), Box::new(r))
    }

    #[test]
    fn parses_examples() {
        let e = parse("0.5*v^2 - u").unwrap();
        let want = bin(
            BinOp::Sub,
            bin(BinOp::Mul, Expr::Num(0.5), bin(BinOp::Pow, Expr::Var(Var::V), Expr::Num(2.0))),
            Expr::Var(Var::U),
        );
        assert_eq!(e, want);
        let e = parse("v^3 + w^2").unwrap();
        let want = bin(
            BinOp::Add,
            bin(BinOp::Pow, Expr::Var(Var::V), Expr::Num(3.0)),
            bin(BinOp::Pow, Expr::Var(Var::W), Expr::Num(2.0)),
        );
        assert_eq!(e, want);
        assert_eq!(parse("0.5*(v)^2").unwrap(), parse("0.5*v^2").unwrap());
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(parse("-v^2").unwrap(), Expr::Neg(Box::new(parse("v^2").unwrap())));
        assert_eq!(parse("2^3^2").unwrap(), parse("2^(3^2)").unwrap());
        assert_eq!(parse("u - v - w").unwrap(), parse("(u - v) - w").unwrap());
        assert_eq!(parse("u / v * w").unwrap(), parse("(u / v) * w").unwrap());
        assert_eq!(parse("u + v * w").unwrap(), parse("u + (v * w)").unwrap());
        assert_eq!(parse("v^-1").unwrap(), bin(BinOp::Pow, Expr::Var(Var::V), Expr::Neg(Box::new(Expr::Num(1.0)))));
        assert_eq!(parse("1.5e-3*u").unwrap(), bin(BinOp::Mul, Expr::Num(1.5e-3), Expr::Var(Var::U)));
        assert_eq!(parse(".5").unwrap(), Expr::Num(0.5));
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(parse("x + 1"), Err(ParseError::UnknownIdentifier { pos: 0, .. })));
        assert!(matches!(parse("u + $"), Err(ParseError::UnexpectedChar { pos: 4, .. })));
        assert!(matches!(parse("sin()"), Err(ParseError::Arity { .. })));
        assert!(matches!(parse("sin(u, v)"), Err(ParseError::UnexpectedChar { .. })));
        assert!(matches!(parse("(u + v"), Err(ParseError::UnexpectedToken { pos: 6, .. })));
        assert!(matches!(parse("u v"), Err(ParseError::UnexpectedToken { pos: 2, .. })));
        assert!(matches!(parse("sin u"), Err(ParseError::UnexpectedToken { .. })));
        assert!(matches!(parse("1.2.3"), Err(ParseError::BadNumber { .. })));
        assert!(matches!(parse(""), Err(ParseError::UnexpectedToken { .. })));
        assert!(matches!(parse("U"), Err(ParseError::UnexpectedChar { .. })));
    }

    #[test]
    fn jet_examples() {
        let l = Lagrangian::parse("0.5*v^2 - u").unwrap();
        let j = l.eval_jet(0.0, 1.0, 2.0, 0.0).unwrap();
        assert_eq!(j.value, 1.0);
        assert_eq!(j.grad, [-1.0, 2.0, 0.0]);
        assert_eq!(j.hess, [0.0, 0.0, 0.0, 1.0, 0.0, 0.0]);

        let l = Lagrangian::parse("v^3 + w^2").unwrap();
        let j = l.eval_jet(0.0, 0.0, 2.0, 3.0).unwrap();
        assert_eq!(j.value, 17.0);
        assert_eq!((j.l_v(), j.l_w()), (12.0, 6.0));
        assert_eq!((j.l_vv(), j.l_ww(), j.l_vw()), (12.0, 2.0, 0.0));
    }

    #[test]
    fn integer_power_of_negative_base() {
        let l = Lagrangian::parse("v^3").unwrap();
        let j = l.eval_jet(0.0, 0.0, -2.0, 0.0).unwrap();
        assert_eq!((j.value, j.l_v(), j.l_vv()), (-8.0, 12.0, -12.0));
        let l = Lagrangian::parse("v^0.5").unwrap();
        assert!(matches!(l.eval_jet(0.0, 0.0, -2.0, 0.0), Err(EvalError::Domain { .. })));
    }

    #[test]
    fn domain_errors_name_the_subexpression() {
        let l = Lagrangian::parse("u + log(v - 1)").unwrap();
        match l.eval_jet(0.0, 0.0, 0.5, 0.0) {
            Err(EvalError::Domain { op: "log", subexpr, .. }) => assert_eq!(subexpr, "log((v - 1.0))"),
            other => panic!("unexpected {other:?}"),
        }
        let l = Lagrangian::parse("1/(u - u)").unwrap();
        assert!(matches!(l.eval_jet(0.0, 1.0, 0.0, 0.0), Err(EvalError::DivisionByZero { .. })));
        let l = Lagrangian::parse("sqrt(u)").unwrap();
        assert!(matches!(l.eval_jet(0.0, -1.0, 0.0, 0.0), Err(EvalError::Domain { .. })));
    }

    #[test]
    fn abs_uses_zero_subgradient_at_kink() {
        let l = Lagrangian::parse("abs(u)").unwrap();
        let j = l.eval_jet(0.0, 0.0, 0.0, 0.0).unwrap();
        assert_eq!(j.grad, [0.0; 3]);
        let j = l.eval_jet(0.0, -3.0, 0.0, 0.0).unwrap();
        assert_eq!((j.value, j.l_u()), (3.0, -1.0));
    }

    #[test]
    fn transcendental_jets() {
        let l = Lagrangian::parse("sin(u*v) + exp(w)*cos(u) + sqrt(v) - log(w)^t").unwrap();
        let (t, u, v, w) = (2.0, 0.3, 1.7, 1.2);
        let j = l.eval_jet(t, u, v, w).unwrap();
        let val = (u * v).sin() + w.exp() * u.cos() + v.sqrt() - w.ln().powf(t);
        assert_relative_eq!(j.value, val, epsilon = 1e-14);
        assert_relative_eq!(j.l_u(), v * (u * v).cos() - w.exp() * u.sin(), epsilon = 1e-14);
        assert_relative_eq!(j.l_uv(), (u * v).cos() - u * v * (u * v).sin(), epsilon = 1e-14);
        assert_relative_eq!(j.l_uw(), -w.exp() * u.sin(), epsilon = 1e-14);
        assert_relative_eq!(j.l_ww(), w.exp() * u.cos() - 2.0 * ((1.0 - w.ln()) / (w * w)), epsilon = 1e-13);
    }

    #[test]
    fn variable_exponent() {
        let l = Lagrangian::parse("u^v").unwrap();
        let (u, v) = (1.5, 0.7);
        let j = l.eval_jet(0.0, u, v, 0.0).unwrap();
        let val = u.powf(v);
        assert_relative_eq!(j.value, val, epsilon = 1e-14);
        assert_relative_eq!(j.l_v(), val * u.ln(), epsilon = 1e-14);
        assert_relative_eq!(j.l_uv(), val * (1.0 / u + v * u.ln() / u), epsilon = 1e-14);
    }

    #[test]
    fn w_free_expression_has_zero_w_derivatives() {
        let l = Lagrangian::parse("sin(u) * v^2 + t*u").unwrap();
        assert!(!l.depends_on(Var::W));
        let j = l.eval_jet(1.0, 0.4, -0.8, 5.0).unwrap();
        assert_eq!((j.l_w(), j.l_ww(), j.l_uw(), j.l_vw()), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn display_round_trips() {
        for src in ["0.5*v^2 - u", "-v^2 + sin(u/w)", "2^3^2 - -u", "1e-7*abs(t - v)"] {
            let e = parse(src).unwrap();
            assert_eq!(parse(&e.to_string()).unwrap(), e);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_poly() -> impl Strategy<Value = Expr> {
            let leaf = prop_oneof![
                (0.0f64..3.0).prop_map(Expr::Num),
                prop::sample::select(vec![Var::T, Var::U, Var::V, Var::W]).prop_map(Expr::Var),
            ];
            leaf.prop_recursive(4, 24, 2, |inner| {
                prop_oneof![
                    (inner.clone(), inner.clone()).prop_map(|(l, r)| bin(BinOp::Add, l, r)),
                    (inner.clone(), inner.clone()).prop_map(|(l, r)| bin(BinOp::Sub, l, r)),
                    (inner.clone(), inner.clone()).prop_map(|(l, r)| bin(BinOp::Mul, l, r)),
                    (inner.clone(), 0u8..4).prop_map(|(l, n)| bin(BinOp::Pow, l, Expr::Num(f64::from(n)))),
                    inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
                    inner.clone().prop_map(|e| Expr::Call(Func::Sin, Box::new(e))),
                    inner.prop_map(|e| Expr::Call(Func::Exp, Box::new(bin(BinOp::Mul, Expr::Num(0.1), e)))),
                ]
            })
        }

        proptest! {
            #[test]
            fn print_parse_is_identity(e in arb_poly()) {
                let printed = e.to_string();
                let reparsed = parse(&printed).unwrap();
                prop_assert_eq!(&reparsed, &e);
                prop_assert_eq!(parse(&reparsed.to_string()).unwrap(), e);
            }

            #[test]
            fn jet_matches_finite_differences(
                e in arb_poly(),
                t in -1.0f64..1.0,
                p in prop::array::uniform3(-1.0f64..1.0),
            ) {
                let val = |x: [f64; 3]| eval(&e, t, x[0], x[1], x[2]).map(|j| j.value);
                let jet = match eval(&e, t, p[0], p[1], p[2]) {
                    Ok(j) => j,
                    Err(_) => return Ok(()),
                };
                prop_assume!(jet.value.abs() < 1e6);
                let scale = 1.0 + jet.value.abs();
                let h1 = 1e-5;
                let h2 = 1e-3;
                for i in 0..3 {
                    let mut xp = p;
                    let mut xm = p;
                    xp[i] += h1;
                    xm[i] -= h1;
                    let fd = (val(xp).unwrap() - val(xm).unwrap()) / (2.0 * h1);
                    prop_assert!((fd - jet.grad[i]).abs() <= 1e-6 * (scale + jet.grad[i].abs()), "grad {} fd {} jet {}", i, fd, jet.grad[i]);
                    for j in i..3 {
                        let shifted = |di: f64, dj: f64| {
                            let mut x = p;
                            x[i] += di;
                            x[j] += dj;
                            val(x).unwrap()
                        };
                        let fd2 = (shifted(h2, h2) - shifted(h2, -h2) - shifted(-h2, h2) + shifted(-h2, -h2))
                            / (4.0 * h2 * h2);
                        prop_assert!((fd2 - jet.hessian(i, j)).abs() <= 1e-4 * (scale + jet.hessian(i, j).abs()),
                            "hess {}{} fd {} jet {}", i, j, fd2, jet.hessian(i, j));
                    }
                }
            }
        }
    }
}
