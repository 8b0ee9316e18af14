//! Closed expression grammar for flow functions and coupling relations.
//!
//! Expressions are built from constants, the time variable `t`, the coupling
//! argument `x`, the four arithmetic operators, constant powers and the
//! functions `sin`, `cos` and `exp`. Every expression can be evaluated and
//! differentiated symbolically with respect to either variable.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    /// Time in seconds.
    T,
    /// Coupling argument: the divergence of the node a relation depends on.
    X,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(Var),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    /// Base raised to a constant exponent.
    Pow(Box<Expr>, f64),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Exp(Box<Expr>),
}

impl Expr {
    pub fn constant(c: f64) -> Expr {
        Expr::Const(c)
    }

    pub fn t() -> Expr {
        Expr::Var(Var::T)
    }

    pub fn x() -> Expr {
        Expr::Var(Var::X)
    }

    pub fn parse(src: &str) -> Result<Expr> {
        Parser::new(src)?.parse_all()
    }

    pub fn is_const(&self) -> bool {
        matches!(self, Expr::Const(_))
    }

    fn as_const(&self) -> Option<f64> {
        match self {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn depends_on(&self, var: Var) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Var(v) => *v == var,
            Expr::Neg(a) | Expr::Sin(a) | Expr::Cos(a) | Expr::Exp(a) | Expr::Pow(a, _) => {
                a.depends_on(var)
            }
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.depends_on(var) || b.depends_on(var)
            }
        }
    }

    pub fn eval(&self, t: f64, x: f64) -> f64 {
        match self {
            Expr::Const(c) => *c,
            Expr::Var(Var::T) => t,
            Expr::Var(Var::X) => x,
            Expr::Neg(a) => -a.eval(t, x),
            Expr::Add(a, b) => a.eval(t, x) + b.eval(t, x),
            Expr::Sub(a, b) => a.eval(t, x) - b.eval(t, x),
            Expr::Mul(a, b) => a.eval(t, x) * b.eval(t, x),
            Expr::Div(a, b) => a.eval(t, x) / b.eval(t, x),
            Expr::Pow(a, p) => {
                let base = a.eval(t, x);
                if p.fract() == 0.0 && p.abs() < i32::MAX as f64 {
                    base.powi(*p as i32)
                } else {
                    base.powf(*p)
                }
            }
            Expr::Sin(a) => a.eval(t, x).sin(),
            Expr::Cos(a) => a.eval(t, x).cos(),
            Expr::Exp(a) => a.eval(t, x).exp(),
        }
    }

    /// Evaluates an expression in `t` only.
    pub fn at(&self, t: f64) -> f64 {
        self.eval(t, 0.0)
    }

    pub fn derivative(&self, var: Var) -> Expr {
        match self {
            Expr::Const(_) => Expr::Const(0.0),
            Expr::Var(v) => Expr::Const(if *v == var { 1.0 } else { 0.0 }),
            Expr::Neg(a) => neg(a.derivative(var)),
            Expr::Add(a, b) => add(a.derivative(var), b.derivative(var)),
            Expr::Sub(a, b) => sub(a.derivative(var), b.derivative(var)),
            Expr::Mul(a, b) => add(
                mul(a.derivative(var), (**b).clone()),
                mul((**a).clone(), b.derivative(var)),
            ),
            Expr::Div(a, b) => {
                // (a'b - ab') / b^2
                let num = sub(
                    mul(a.derivative(var), (**b).clone()),
                    mul((**a).clone(), b.derivative(var)),
                );
                div(num, pow((**b).clone(), 2.0))
            }
            Expr::Pow(a, p) => mul(
                mul(Expr::Const(*p), pow((**a).clone(), p - 1.0)),
                a.derivative(var),
            ),
            Expr::Sin(a) => mul(cos((**a).clone()), a.derivative(var)),
            Expr::Cos(a) => neg(mul(sin((**a).clone()), a.derivative(var))),
            Expr::Exp(a) => mul(exp((**a).clone()), a.derivative(var)),
        }
    }

    /// Replaces `var` by a constant and folds.
    pub fn bind(&self, var: Var, value: f64) -> Expr {
        match self {
            Expr::Const(c) => Expr::Const(*c),
            Expr::Var(v) if *v == var => Expr::Const(value),
            Expr::Var(v) => Expr::Var(*v),
            Expr::Neg(a) => neg(a.bind(var, value)),
            Expr::Add(a, b) => add(a.bind(var, value), b.bind(var, value)),
            Expr::Sub(a, b) => sub(a.bind(var, value), b.bind(var, value)),
            Expr::Mul(a, b) => mul(a.bind(var, value), b.bind(var, value)),
            Expr::Div(a, b) => div(a.bind(var, value), b.bind(var, value)),
            Expr::Pow(a, p) => pow(a.bind(var, value), *p),
            Expr::Sin(a) => sin(a.bind(var, value)),
            Expr::Cos(a) => cos(a.bind(var, value)),
            Expr::Exp(a) => exp(a.bind(var, value)),
        }
    }

    pub fn nth_derivative(&self, var: Var, order: usize) -> Expr {
        let mut e = self.clone();
        for _ in 0..order {
            e = e.derivative(var);
        }
        e
    }
}

// Constructors with constant folding and identity elimination. They keep
// repeated derivatives from growing without bound.

pub fn neg(a: Expr) -> Expr {
    match a {
        Expr::Const(c) => Expr::Const(-c),
        Expr::Neg(inner) => *inner,
        other => Expr::Neg(Box::new(other)),
    }
}

pub fn add(a: Expr, b: Expr) -> Expr {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) => Expr::Const(x + y),
        (Some(0.0), None) => b,
        (None, Some(0.0)) => a,
        _ => Expr::Add(Box::new(a), Box::new(b)),
    }
}

pub fn sub(a: Expr, b: Expr) -> Expr {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) => Expr::Const(x - y),
        (Some(0.0), None) => neg(b),
        (None, Some(0.0)) => a,
        _ => Expr::Sub(Box::new(a), Box::new(b)),
    }
}

pub fn mul(a: Expr, b: Expr) -> Expr {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) => Expr::Const(x * y),
        (Some(0.0), _) => Expr::Const(0.0),
        (_, Some(0.0)) => Expr::Const(0.0),
        (Some(1.0), None) => b,
        (None, Some(1.0)) => a,
        _ => Expr::Mul(Box::new(a), Box::new(b)),
    }
}

pub fn div(a: Expr, b: Expr) -> Expr {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) if y != 0.0 => Expr::Const(x / y),
        (Some(0.0), _) => Expr::Const(0.0),
        (None, Some(1.0)) => a,
        _ => Expr::Div(Box::new(a), Box::new(b)),
    }
}

pub fn pow(a: Expr, p: f64) -> Expr {
    if p == 0.0 {
        return Expr::Const(1.0);
    }
    if p == 1.0 {
        return a;
    }
    match a {
        Expr::Const(c) => Expr::Const(Expr::Pow(Box::new(Expr::Const(c)), p).eval(0.0, 0.0)),
        other => Expr::Pow(Box::new(other), p),
    }
}

pub fn sin(a: Expr) -> Expr {
    match a {
        Expr::Const(c) => Expr::Const(c.sin()),
        other => Expr::Sin(Box::new(other)),
    }
}

pub fn cos(a: Expr) -> Expr {
    match a {
        Expr::Const(c) => Expr::Const(c.cos()),
        other => Expr::Cos(Box::new(other)),
    }
}

pub fn exp(a: Expr) -> Expr {
    match a {
        Expr::Const(c) => Expr::Const(c.exp()),
        other => Expr::Exp(Box::new(other)),
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) if *c < 0.0 => write!(f, "({c:?})"),
            Expr::Const(c) => write!(f, "{c:?}"),
            Expr::Var(Var::T) => write!(f, "t"),
            Expr::Var(Var::X) => write!(f, "x"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, p) if *p < 0.0 => write!(f, "({a} ^ ({p:?}))"),
            Expr::Pow(a, p) => write!(f, "({a} ^ {p:?})"),
            Expr::Sin(a) => write!(f, "sin({a})"),
            Expr::Cos(a) => write!(f, "cos({a})"),
            Expr::Exp(a) => write!(f, "exp({a})"),
        }
    }
}

impl Serialize for Expr {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Expr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Expr::parse(&s).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn new(src: &str) -> Result<Self> {
        Ok(Parser {
            tokens: tokenize(src)?,
            pos: 0,
        })
    }

    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let tok = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        tok
    }

    fn parse_all(mut self) -> Result<Expr> {
        let e = self.expr()?;
        match self.peek() {
            None => Ok(e),
            Some(tok) => Err(Error::Parse(format!("unexpected token {tok:?}"))),
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while let Some(Token::Op(op @ ('+' | '-'))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if op == '+' {
                Expr::Add(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Sub(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some(Token::Op(op @ ('*' | '/'))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = if op == '*' {
                Expr::Mul(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Div(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        if let Some(Token::Op('-')) = self.peek() {
            self.pos += 1;
            let inner = self.unary()?;
            return Ok(match inner {
                Expr::Const(c) => Expr::Const(-c),
                other => Expr::Neg(Box::new(other)),
            });
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.primary()?;
        if let Some(Token::Op('^')) = self.peek() {
            self.pos += 1;
            let exponent = self.unary()?;
            if exponent.depends_on(Var::T) || exponent.depends_on(Var::X) {
                return Err(Error::Parse("exponent must be constant".into()));
            }
            let p = exponent.eval(0.0, 0.0);
            if !p.is_finite() {
                return Err(Error::Parse("exponent is not finite".into()));
            }
            return Ok(Expr::Pow(Box::new(base), p));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr> {
        match self.next() {
            Some(Token::Num(v)) => Ok(Expr::Const(v)),
            Some(Token::LParen) => {
                let e = self.expr()?;
                self.expect_rparen()?;
                Ok(e)
            }
            Some(Token::Ident(name)) => match name.as_str() {
                "t" => Ok(Expr::t()),
                "x" => Ok(Expr::x()),
                "pi" => Ok(Expr::Const(std::f64::consts::PI)),
                "e" => Ok(Expr::Const(std::f64::consts::E)),
                "sin" | "cos" | "exp" => {
                    match self.next() {
                        Some(Token::LParen) => {}
                        _ => return Err(Error::Parse(format!("expected '(' after {name}"))),
                    }
                    let arg = self.expr()?;
                    self.expect_rparen()?;
                    Ok(match name.as_str() {
                        "sin" => Expr::Sin(Box::new(arg)),
                        "cos" => Expr::Cos(Box::new(arg)),
                        _ => Expr::Exp(Box::new(arg)),
                    })
                }
                other => Err(Error::Parse(format!("unknown identifier '{other}'"))),
            },
            Some(tok) => Err(Error::Parse(format!("unexpected token {tok:?}"))),
            None => Err(Error::Parse("unexpected end of expression".into())),
        }
    }

    fn expect_rparen(&mut self) -> Result<()> {
        match self.next() {
            Some(Token::RParen) => Ok(()),
            _ => Err(Error::Parse("expected ')'".into())),
        }
    }
}

fn tokenize(src: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = src.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let v = text
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad number '{text}'")))?;
            tokens.push(Token::Num(v));
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_alphanumeric() {
                i += 1;
            }
            tokens.push(Token::Ident(chars[start..i].iter().collect()));
        } else {
            tokens.push(match c {
                '(' => Token::LParen,
                ')' => Token::RParen,
                '+' | '-' | '*' | '/' | '^' => Token::Op(c),
                other => return Err(Error::Parse(format!("unexpected character '{other}'"))),
            });
            i += 1;
        }
    }
    Ok(tokens)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs()))
    }

    #[test]
    fn parses_paper_style_flows() {
        let e = Expr::parse("t^2/exp(t)").unwrap();
        assert!(close(e.at(1.5), 1.5f64.powi(2) / 1.5f64.exp()));
        let e = Expr::parse("cos(t) - sin(t) - 3").unwrap();
        assert!(close(e.at(0.7), 0.7f64.cos() - 0.7f64.sin() - 3.0));
        let e = Expr::parse("-x^2").unwrap();
        assert!(close(e.eval(0.0, 3.0), -9.0));
        let e = Expr::parse("2*pi + 1e-3").unwrap();
        assert!(close(e.at(0.0), 2.0 * std::f64::consts::PI + 1e-3));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Expr::parse("sin t").is_err());
        assert!(Expr::parse("t^t").is_err());
        assert!(Expr::parse("foo(t)").is_err());
        assert!(Expr::parse("(t").is_err());
        assert!(Expr::parse("t $ 2").is_err());
        assert!(Expr::parse("").is_err());
    }

    #[test]
    fn display_round_trips() {
        for src in [
            "t^2/exp(t)",
            "-(3*x + 2)*sin(t)",
            "4",
            "x^(-1.5) - 2",
            "cos(-t)",
        ] {
            let e = Expr::parse(src).unwrap();
            let again = Expr::parse(&e.to_string()).unwrap();
            assert_eq!(e, again, "{src}");
        }
    }

    #[test]
    fn derivatives_match_hand_results() {
        // d/dt sin t = cos t
        let d = Expr::parse("sin(t)").unwrap().derivative(Var::T);
        assert!(close(d.at(0.0), 1.0));
        // d/dx x^3 = 3x^2, second derivative 6x
        let h = Expr::parse("x^3").unwrap();
        assert!(close(h.derivative(Var::X).eval(0.0, 2.0), 12.0));
        assert!(close(h.nth_derivative(Var::X, 2).eval(0.0, 2.0), 12.0));
        assert!(close(h.nth_derivative(Var::X, 3).eval(0.0, 2.0), 6.0));
        assert_eq!(h.nth_derivative(Var::X, 4), Expr::Const(0.0));
        // partial in x ignores t
        let g = Expr::parse("(2*x + 5)*cos(t)").unwrap();
        assert!(close(g.derivative(Var::X).at(0.3), 2.0 * 0.3f64.cos()));
    }

    #[test]
    fn derivative_matches_central_difference() {
        let e = Expr::parse("t^2/exp(t) + 3*sin(2*t)*cos(t)").unwrap();
        let d = e.derivative(Var::T);
        let h = 1e-6;
        for &t in &[0.1, 1.0, 2.5, 7.0] {
            let fd = (e.at(t + h) - e.at(t - h)) / (2.0 * h);
            assert!((fd - d.at(t)).abs() <= 1e-4 * (1.0 + fd.abs()));
        }
    }
}
