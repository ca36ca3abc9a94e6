//! The coin-angle expression language.
//!
//! Experiment configs define θ(j,p) through a small arithmetic language in
//! the physical coordinates t and x (so the same expression serves every ε
//! in a convergence sweep; t = ε·j, x = ε·p). Grammar, in EBNF:
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := base ('^' factor)?
//! base   := number | 't' | 'x' | ident '(' expr (',' expr)* ')'
//!         | '(' expr ')' | '-' base
//! ```
//!
//! Only the whitelisted functions below are recognized; all take one
//! argument. Angles are radians everywhere. Domain failures (arccos outside
//! [−1,1], log of a non-positive value, …) are deferred to evaluation and
//! reported with the lattice site that triggered them.

use std::fmt;

use thiserror::Error;

use crate::field::AngleField;
use crate::lattice::Lattice;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sinh,
    Cosh,
    Tanh,
    Arccos,
    Arcsin,
    Arctan,
    Sqrt,
    Abs,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            "tanh" => Func::Tanh,
            "arccos" => Func::Arccos,
            "arcsin" => Func::Arcsin,
            "arctan" => Func::Arctan,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
        _ => return None,
        })
    }

    fn name(&self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Tanh => "tanh",
            Func::Arccos => "arccos",
            Func::Arcsin => "arcsin",
            Func::Arctan => "arctan",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }

    fn apply(&self, a: f64) -> Result<f64, String> {
        let v = match self {
            Func::Sin => a.sin(),
            Func::Cos => a.cos(),
            Func::Tan => a.tan(),
            Func::Exp => a.exp(),
            Func::Log => {
                if a <= 0.0 {
                    return Err(format!("log argument {a} not positive"));
                }
                a.ln()
            }
            Func::Sinh => a.sinh(),
            Func::Cosh => a.cosh(),
            Func::Tanh => a.tanh(),
            Func::Arccos => {
                if !(-1.0..=1.0).contains(&a) {
                    return Err(format!("arccos argument {a} outside [-1, 1]"));
                }
                a.acos()
            }
            Func::Arcsin => {
                if !(-1.0..=1.0).contains(&a) {
                    return Err(format!("arcsin argument {a} outside [-1, 1]"));
                }
                a.asin()
            }
            Func::Arctan => a.atan(),
            Func::Sqrt => {
                if a < 0.0 {
                    return Err(format!("sqrt argument {a} negative"));
                }
                a.sqrt()
            }
            Func::Abs => a.abs(),
        };
        if !v.is_finite() {
            return Err(format!("{}({a}) is not finite", self.name()));
        }
        Ok(v)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Var {
    T,
    X,
}

/// Parsed expression tree.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    fn eval(&self, t: f64, x: f64) -> Result<f64, String> {
        match self {
            Expr::Num(v) => Ok(*v),
            Expr::Var(Var::T) => Ok(t),
            Expr::Var(Var::X) => Ok(x),
            Expr::Neg(e) => Ok(-e.eval(t, x)?),
            Expr::Bin(op, a, b) => {
                let a = a.eval(t, x)?;
                let b = b.eval(t, x)?;
                let v = match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(format!("division of {a} by zero"));
                        }
                        a / b
                    }
                    BinOp::Pow => a.powf(b),
                };
                if !v.is_finite() {
                    return Err(format!("operation produced a non-finite value ({a} {op:?} {b})"));
                }
                Ok(v)
            }
            Expr::Call(f, e) => f.apply(e.eval(t, x)?),
        }
    }

    fn uses(&self, var: Var) -> bool {
        match self {
            Expr::Num(_) => false,
            Expr::Var(v) => *v == var,
            Expr::Neg(e) => e.uses(var),
            Expr::Bin(_, a, b) => a.uses(var) || b.uses(var),
            Expr::Call(_, e) => e.uses(var),
        }
    }

    /// Precedence used by the printer: 0 additive, 1 multiplicative,
    /// 2 power, 3 atom.
    fn prec(&self) -> u8 {
        match self {
            Expr::Bin(BinOp::Add | BinOp::Sub, ..) => 0,
            Expr::Bin(BinOp::Mul | BinOp::Div, ..) => 1,
            Expr::Bin(BinOp::Pow, ..) => 2,
            Expr::Neg(_) => 2,
            _ => 3,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let needs = self.prec() < min;
        if needs {
            write!(f, "(")?;
        }
        match self {
            Expr::Num(v) => write!(f, "{v}")?,
            Expr::Var(Var::T) => write!(f, "t")?,
            Expr::Var(Var::X) => write!(f, "x")?,
            Expr::Neg(e) => {
                write!(f, "-")?;
                e.fmt_prec(f, 3)?;
            }
            Expr::Bin(op, a, b) => {
                let (sym, lp, rp) = match op {
                    BinOp::Add => ("+", 0, 1),
                    BinOp::Sub => ("-", 0, 1),
                    BinOp::Mul => ("*", 1, 2),
                    BinOp::Div => ("/", 1, 2),
                    // '^' is right-associative; its left operand is an atom.
                    BinOp::Pow => ("^", 3, 2),
                };
                a.fmt_prec(f, lp)?;
                write!(f, " {sym} ")?;
                b.fmt_prec(f, rp)?;
            }
            Expr::Call(func, e) => {
                write!(f, "{}(", func.name())?;
                e.fmt_prec(f, 0)?;
                write!(f, ")")?;
            }
        }
        if needs {
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ThetaKind {
    Constant,
    TimeProfile,
    Full,
}

/// A parsed, immutable coin-angle definition.
#[derive(Clone, Debug, PartialEq)]
pub struct ThetaSpec {
    expr: Expr,
    kind: ThetaKind,
}

#[derive(Debug, Error, PartialEq)]
pub enum ThetaError {
    #[error("parse error at byte {offset}: {found}; expected {}", expected.join(", "))]
    Parse {
        offset: usize,
        found: String,
        expected: Vec<&'static str>,
    },
    #[error("unknown identifier `{name}` at byte {offset} (variables are t, x)")]
    UnknownIdent { offset: usize, name: String },
    #[error("function `{name}` at byte {offset} takes 1 argument, got {got}")]
    Arity {
        offset: usize,
        name: String,
        got: usize,
    },
    #[error("evaluation failed at site (j={j}, p={p}) (t={t}, x={x}): {message}")]
    Eval {
        j: usize,
        p: i64,
        t: f64,
        x: f64,
        message: String,
    },
    #[error("evaluation failed at t={t}, x={x}: {message}")]
    EvalAt { t: f64, x: f64, message: String },
}

impl ThetaSpec {
    /// Parse an expression in t and x.
    pub fn parse(src: &str) -> Result<ThetaSpec, ThetaError> {
        let tokens = lex(src)?;
        let mut parser = Parser { tokens, pos: 0 };
        let expr = parser.expr()?;
        parser.expect_eof()?;
        let kind = match (expr.uses(Var::T), expr.uses(Var::X)) {
            (_, true) => ThetaKind::Full,
            (true, false) => ThetaKind::TimeProfile,
            (false, false) => ThetaKind::Constant,
        };
        Ok(ThetaSpec { expr, kind })
    }

    pub fn constant(value: f64) -> ThetaSpec {
        ThetaSpec {
            expr: Expr::Num(value),
            kind: ThetaKind::Constant,
        }
    }

    pub fn kind(&self) -> ThetaKind {
        self.kind
    }

    /// The folded value of a constant spec, if evaluation succeeds.
    pub fn constant_value(&self) -> Option<f64> {
        if self.kind == ThetaKind::Constant {
            self.expr.eval(0.0, 0.0).ok()
        } else {
            None
        }
    }

    /// Evaluate at physical coordinates.
    pub fn eval_at(&self, t: f64, x: f64) -> Result<f64, ThetaError> {
        self.expr
            .eval(t, x)
            .map_err(|message| ThetaError::EvalAt { t, x, message })
    }

    /// Canonical printed form; parsing it back yields an identical tree.
    pub fn pretty(&self) -> String {
        self.expr.to_string()
    }
}

/// θ at lattice site (j, p), via t = ε·j and x = ε·p (p wrapped).
pub fn eval_theta(spec: &ThetaSpec, lat: &Lattice, j: usize, p: i64) -> Result<f64, ThetaError> {
    let t = lat.t(j);
    let x = lat.x(p);
    spec.expr.eval(t, x).map_err(|message| ThetaError::Eval {
        j,
        p: lat.wrap_p(p) as i64,
        t,
        x,
        message,
    })
}

/// Evaluate a parsed angle definition on every site of the lattice.
pub fn build_angle_field(spec: &ThetaSpec, lat: Lattice) -> Result<AngleField, ThetaError> {
    let mut theta = Vec::with_capacity(lat.n_sites());
    for j in 0..lat.j_slices() {
        for p in 0..lat.p_sites() as i64 {
            theta.push(eval_theta(spec, &lat, j, p)?);
        }
    }
    Ok(AngleField::from_fn(lat, |j, p| theta[lat.idx(j, p)]))
}

// ---------------------------------------------------------------------------
// Lexing and parsing
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number `{v}`"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Caret => "`^`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>, ThetaError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '+' => {
                out.push((i, Tok::Plus));
                i += 1;
            }
            '-' => {
                out.push((i, Tok::Minus));
                i += 1;
            }
            '*' => {
                out.push((i, Tok::Star));
                i += 1;
            }
            '/' => {
                out.push((i, Tok::Slash));
                i += 1;
            }
            '^' => {
                out.push((i, Tok::Caret));
                i += 1;
            }
            '(' => {
                out.push((i, Tok::LParen));
                i += 1;
            }
            ')' => {
                out.push((i, Tok::RParen));
                i += 1;
            }
            ',' => {
                out.push((i, Tok::Comma));
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                // optional exponent
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut k = i + 1;
                    if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                        k += 1;
                    }
                    if k < bytes.len() && bytes[k].is_ascii_digit() {
                        i = k;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text = &src[start..i];
                let v: f64 = text.parse().map_err(|_| ThetaError::Parse {
                    offset: start,
                    found: format!("malformed number `{text}`"),
                    expected: vec!["number"],
                })?;
                out.push((start, Tok::Num(v)));
            }
            'a'..='z' | 'A'..='Z' | '_' => {
                let start = i;
                while i < bytes.len()
                    && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                out.push((start, Tok::Ident(src[start..i].to_string())));
            }
            _ => {
                return Err(ThetaError::Parse {
                    offset: i,
                    found: format!("unexpected character `{c}`"),
                    expected: vec!["number", "identifier", "operator", "`(`"],
                })
            }
        }
    }
    out.push((src.len(), Tok::Eof));
    Ok(out)
}

struct Parser {
    tokens: Vec<(usize, Tok)>,
    pos: usize,
}

const BASE_EXPECTED: &[&str] = &["number", "`t`", "`x`", "function name", "`(`", "`-`"];

impl Parser {
    fn peek(&self) -> &(usize, Tok) {
        &self.tokens[self.pos]
    }

    fn bump(&mut self) -> (usize, Tok) {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &[&'static str]) -> ThetaError {
        let (offset, tok) = self.peek();
        ThetaError::Parse {
            offset: *offset,
            found: format!("found {}", tok.describe()),
            expected: expected.to_vec(),
        }
    }

    fn expect_eof(&self) -> Result<(), ThetaError> {
        match self.peek().1 {
            Tok::Eof => Ok(()),
            _ => Err(self.error(&["`+`", "`-`", "`*`", "`/`", "`^`", "end of input"])),
        }
    }

    fn expr(&mut self) -> Result<Expr, ThetaError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek().1 {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => break,
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ThetaError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek().1 {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => break,
            };
            self.bump();
            let rhs = self.factor()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Expr, ThetaError> {
        let base = self.base()?;
        if self.peek().1 == Tok::Caret {
            self.bump();
            let exp = self.factor()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<Expr, ThetaError> {
        match self.peek().1.clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(Expr::Num(v))
            }
            Tok::Minus => {
                self.bump();
                Ok(Expr::Neg(Box::new(self.base()?)))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                match self.peek().1 {
                    Tok::RParen => {
                        self.bump();
                        Ok(e)
                    }
                    _ => Err(self.error(&["`)`"])),
                }
            }
            Tok::Ident(name) => {
                let (offset, _) = self.bump();
                match name.as_str() {
                    "t" => Ok(Expr::Var(Var::T)),
                    "x" => Ok(Expr::Var(Var::X)),
                    _ => {
                        let func = Func::from_name(&name)
                            .ok_or(ThetaError::UnknownIdent {
                                offset,
                                name: name.clone(),
                            })?;
                        match self.peek().1 {
                            Tok::LParen => {}
                            _ => return Err(self.error(&["`(`"])),
                        }
                        self.bump();
                        let mut args = vec![self.expr()?];
                        while self.peek().1 == Tok::Comma {
                            self.bump();
                            args.push(self.expr()?);
                        }
                        match self.peek().1 {
                            Tok::RParen => {
                                self.bump();
                            }
                            _ => return Err(self.error(&["`)`", "`,`"])),
                        }
                        if args.len() != 1 {
                            return Err(ThetaError::Arity {
                                offset,
                                name,
                                got: args.len(),
                            });
                        }
                        Ok(Expr::Call(func, Box::new(args.pop().unwrap())))
                    }
                }
            }
            _ => Err(self.error(BASE_EXPECTED)),
        }
    }
}
