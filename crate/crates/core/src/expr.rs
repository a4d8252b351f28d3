//! Real-valued arithmetic expressions.
//!
//! Expressions are parsed once into an [`Ast`] and evaluated generically over
//! any [`Scalar`]: plain `f64` for values, [`Jet2`](crate::jet::Jet2) for values
//! together with exact first and second derivatives.
//!
//! Grammar:
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := '-' factor | power
//! power  := atom ('^' factor)?
//! atom   := number | ident | ident '(' expr ')' | '(' expr ')'
//! ```

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

const MAX_DEPTH: usize = 200;
const MAX_INTEGER_POWER: f64 = 64.0;

/// A scalar carrier the evaluator can work over.
///
/// `chain` applies a univariate function whose value and first two
/// derivatives at `self.value()` have already been computed in `f64`. Both
/// carriers share that code path, so the value component of a jet equals the
/// plain evaluation bit for bit.
pub trait Scalar: Clone {
    fn constant(c: f64) -> Self;
    fn value(&self) -> f64;
    fn add(&self, rhs: &Self) -> Self;
    fn sub(&self, rhs: &Self) -> Self;
    fn mul(&self, rhs: &Self) -> Self;
    /// Caller guarantees `rhs.value() != 0`.
    fn div(&self, rhs: &Self) -> Self;
    fn neg(&self) -> Self;
    fn chain(&self, f0: f64, f1: f64, f2: f64) -> Self;
}

impl Scalar for f64 {
    fn constant(c: f64) -> Self {
        c
    }
    fn value(&self) -> f64 {
        *self
    }
    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn div(&self, rhs: &Self) -> Self {
        self / rhs
    }
    fn neg(&self) -> Self {
        -self
    }
    fn chain(&self, f0: f64, _f1: f64, _f2: f64) -> Self {
        f0
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

/// The supported one-argument functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Sqrt,
    Exp,
    Log,
    Asin,
    Acos,
    Atan,
}

impl Func {
    pub const ALL: [Func; 9] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Sqrt,
        Func::Exp,
        Func::Log,
        Func::Asin,
        Func::Acos,
        Func::Atan,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Sqrt => "sqrt",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Asin => "asin",
            Func::Acos => "acos",
            Func::Atan => "atan",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }

    /// Value, first and second derivative at `x`, or `None` outside the domain.
    fn taylor(self, x: f64) -> Option<(f64, f64, f64)> {
        match self {
            Func::Sin => Some((x.sin(), x.cos(), -x.sin())),
            Func::Cos => Some((x.cos(), -x.sin(), -x.cos())),
            Func::Tan => {
                let t = x.tan();
                let d = 1.0 + t * t;
                Some((t, d, 2.0 * t * d))
            }
            Func::Sqrt => {
                if x < 0.0 {
                    return None;
                }
                let s = x.sqrt();
                let d1 = 0.5 / s;
                Some((s, d1, -d1 / (2.0 * x)))
            }
            Func::Exp => {
                let e = x.exp();
                Some((e, e, e))
            }
            Func::Log => {
                if x <= 0.0 {
                    return None;
                }
                Some((x.ln(), 1.0 / x, -1.0 / (x * x)))
            }
            Func::Asin | Func::Acos => {
                if !(-1.0..=1.0).contains(&x) {
                    return None;
                }
                let r = 1.0 - x * x;
                let d1 = 1.0 / r.sqrt();
                let d2 = x / (r * r.sqrt());
                if self == Func::Asin {
                    Some((x.asin(), d1, d2))
                } else {
                    Some((x.acos(), -d1, -d2))
                }
            }
            Func::Atan => {
                let r = 1.0 + x * x;
                Some((x.atan(), 1.0 / r, -2.0 * x / (r * r)))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Ast {
    Const(f64),
    Var(String),
    Neg(Box<Ast>),
    Binary { op: BinOp, lhs: Box<Ast>, rhs: Box<Ast> },
    Call { func: Func, arg: Box<Ast> },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("expected {expected} at byte {offset}")]
pub struct ParseError {
    pub offset: usize,
    pub expected: String,
}

impl ParseError {
    fn new(offset: usize, expected: impl Into<String>) -> Self {
        ParseError {
            offset,
            expected: expected.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("{func} is undefined at {arg}")]
    Domain { func: &'static str, arg: f64 },
    #[error("division by zero")]
    DivisionByZero,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
    End,
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i < bytes.len() && bytes[i] == b'.' {
                i += 1;
                if i >= bytes.len() || !bytes[i].is_ascii_digit() {
                    return Err(ParseError::new(i, "digit after decimal point"));
                }
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
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
            let value: f64 = src[start..i]
                .parse()
                .map_err(|_| ParseError::new(start, "number"))?;
            if !value.is_finite() {
                return Err(ParseError::new(start, "finite number"));
            }
            out.push((start, Tok::Num(value)));
        } else if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((start, Tok::Ident(src[start..i].to_string())));
        } else if b"+-*/^()".contains(&c) {
            out.push((i, Tok::Sym(c as char)));
            i += 1;
        } else {
            return Err(ParseError::new(i, "operator, number or identifier"));
        }
    }
    out.push((src.len(), Tok::End));
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    depth: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].1
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].0
    }

    fn eat(&mut self, sym: char) -> bool {
        if *self.peek() == Tok::Sym(sym) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn descend(&mut self) -> Result<(), ParseError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(ParseError::new(self.offset(), "shallower nesting"));
        }
        Ok(())
    }

    fn expr(&mut self) -> Result<Ast, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat('+') {
                BinOp::Add
            } else if self.eat('-') {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.term()?;
            lhs = Ast::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) };
        }
    }

    fn term(&mut self) -> Result<Ast, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            let op = if self.eat('*') {
                BinOp::Mul
            } else if self.eat('/') {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            let rhs = self.factor()?;
            lhs = Ast::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) };
        }
    }

    fn factor(&mut self) -> Result<Ast, ParseError> {
        self.descend()?;
        let out = if self.eat('-') {
            Ast::Neg(Box::new(self.factor()?))
        } else {
            self.power()?
        };
        self.depth -= 1;
        Ok(out)
    }

    fn power(&mut self) -> Result<Ast, ParseError> {
        let base = self.atom()?;
        if self.eat('^') {
            let exponent = self.factor()?;
            return Ok(Ast::Binary {
                op: BinOp::Pow,
                lhs: Box::new(base),
                rhs: Box::new(exponent),
            });
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Ast, ParseError> {
        let offset = self.offset();
        match self.peek().clone() {
            Tok::Num(v) => {
                self.pos += 1;
                Ok(Ast::Const(v))
            }
            Tok::Ident(name) => {
                self.pos += 1;
                if self.eat('(') {
                    let func = Func::from_name(&name)
                        .ok_or_else(|| ParseError::new(offset, "known function name"))?;
                    let arg = self.expr()?;
                    if !self.eat(')') {
                        return Err(ParseError::new(self.offset(), "')'"));
                    }
                    Ok(Ast::Call { func, arg: Box::new(arg) })
                } else if name == "pi" {
                    Ok(Ast::Const(std::f64::consts::PI))
                } else {
                    Ok(Ast::Var(name))
                }
            }
            Tok::Sym('(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if !self.eat(')') {
                    return Err(ParseError::new(self.offset(), "')'"));
                }
                Ok(inner)
            }
            Tok::End => Err(ParseError::new(offset, "expression")),
            _ => Err(ParseError::new(offset, "number, identifier or '('")),
        }
    }
}

/// Parses `source` into an expression tree.
pub fn parse(source: &str) -> Result<Ast, ParseError> {
    let toks = lex(source)?;
    let mut parser = Parser { toks, pos: 0, depth: 0 };
    let ast = parser.expr()?;
    if *parser.peek() != Tok::End {
        return Err(ParseError::new(parser.offset(), "operator or end of input"));
    }
    Ok(ast)
}

impl Ast {
    /// Variable names in first-occurrence order, without repeats.
    pub fn free_variables(&self) -> Vec<String> {
        fn walk(ast: &Ast, out: &mut Vec<String>) {
            match ast {
                Ast::Const(_) => {}
                Ast::Var(name) => {
                    if !out.iter().any(|n| n == name) {
                        out.push(name.clone());
                    }
                }
                Ast::Neg(inner) | Ast::Call { arg: inner, .. } => walk(inner, out),
                Ast::Binary { lhs, rhs, .. } => {
                    walk(lhs, out);
                    walk(rhs, out);
                }
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out
    }

    pub fn is_constant(&self) -> bool {
        match self {
            Ast::Const(_) => true,
            Ast::Var(_) => false,
            Ast::Neg(inner) | Ast::Call { arg: inner, .. } => inner.is_constant(),
            Ast::Binary { lhs, rhs, .. } => lhs.is_constant() && rhs.is_constant(),
        }
    }

    /// Evaluates with variables looked up by name.
    pub fn evaluate<S: Scalar>(&self, env: &BTreeMap<String, S>) -> Result<S, EvalError> {
        self.eval_with(&|name| env.get(name).cloned())
    }

    /// Evaluates with `values[k]` bound to `names[k]`.
    pub fn evaluate_indexed<S: Scalar>(&self, names: &[String], values: &[S]) -> Result<S, EvalError> {
        self.eval_with(&|name| names.iter().position(|n| n == name).and_then(|k| values.get(k).cloned()))
    }

    fn eval_with<S: Scalar>(&self, lookup: &dyn Fn(&str) -> Option<S>) -> Result<S, EvalError> {
        match self {
            Ast::Const(c) => Ok(S::constant(*c)),
            Ast::Var(name) => lookup(name).ok_or_else(|| EvalError::Unbound(name.clone())),
            Ast::Neg(inner) => Ok(inner.eval_with(lookup)?.neg()),
            Ast::Call { func, arg } => {
                let x = arg.eval_with(lookup)?;
                let (f0, f1, f2) = func.taylor(x.value()).ok_or(EvalError::Domain {
                    func: func.name(),
                    arg: x.value(),
                })?;
                Ok(x.chain(f0, f1, f2))
            }
            Ast::Binary { op, lhs, rhs } => {
                let a = lhs.eval_with(lookup)?;
                match op {
                    BinOp::Add => Ok(a.add(&rhs.eval_with(lookup)?)),
                    BinOp::Sub => Ok(a.sub(&rhs.eval_with(lookup)?)),
                    BinOp::Mul => Ok(a.mul(&rhs.eval_with(lookup)?)),
                    BinOp::Div => {
                        let b = rhs.eval_with(lookup)?;
                        if b.value() == 0.0 {
                            return Err(EvalError::DivisionByZero);
                        }
                        Ok(a.div(&b))
                    }
                    BinOp::Pow => {
                        let b = rhs.eval_with(lookup)?;
                        power(&a, &b, rhs.is_constant())
                    }
                }
            }
        }
    }
}

fn power<S: Scalar>(base: &S, exponent: &S, exponent_constant: bool) -> Result<S, EvalError> {
    let y = exponent.value();
    if exponent_constant && y.fract() == 0.0 && y.abs() <= MAX_INTEGER_POWER {
        let n = y.abs() as u32;
        let mut acc = S::constant(1.0);
        for _ in 0..n {
            acc = acc.mul(base);
        }
        if y < 0.0 {
            if acc.value() == 0.0 {
                return Err(EvalError::DivisionByZero);
            }
            return Ok(S::constant(1.0).div(&acc));
        }
        return Ok(acc);
    }
    let x = base.value();
    if x <= 0.0 {
        return Err(EvalError::Domain { func: "pow", arg: x });
    }
    let l = x.ln();
    let log = base.chain(l, 1.0 / x, -1.0 / (x * x));
    let e = exponent.mul(&log).value().exp();
    Ok(exponent.mul(&log).chain(e, e, e))
}

impl fmt::Display for Ast {
    /// Fully parenthesised. Re-parses to an identical tree as long as every
    /// constant is non-negative, which holds for anything the parser built.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ast::Const(c) => write!(f, "{c:?}"),
            Ast::Var(name) => f.write_str(name),
            Ast::Neg(inner) => write!(f, "(-{inner})"),
            Ast::Binary { op, lhs, rhs } => write!(f, "({lhs} {} {rhs})", op.symbol()),
            Ast::Call { func, arg } => write!(f, "{}({arg})", func.name()),
        }
    }
}
