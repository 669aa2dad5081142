//! Expression trees for drift and scale functions.
//!
//! Grammar (whitespace ignored):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?
//! primary := number | ident | func '(' expr ')' | '(' expr ')'
//! func    := exp | log | cos | sin | tanh | sqrt | abs
//! ```
//!
//! so `^` binds tighter than unary minus (`-x^2 = -(x^2)`) and is right
//! associative; `*` `/` `+` `-` are left associative.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Exp,
    Log,
    Cos,
    Sin,
    Tanh,
    Sqrt,
    Abs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(String),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
}

impl UnaryOp {
    pub const FUNCTIONS: [UnaryOp; 7] =
        [UnaryOp::Exp, UnaryOp::Log, UnaryOp::Cos, UnaryOp::Sin, UnaryOp::Tanh, UnaryOp::Sqrt, UnaryOp::Abs];

    pub fn name(self) -> &'static str {
        match self {
            UnaryOp::Neg => "-",
            UnaryOp::Exp => "exp",
            UnaryOp::Log => "log",
            UnaryOp::Cos => "cos",
            UnaryOp::Sin => "sin",
            UnaryOp::Tanh => "tanh",
            UnaryOp::Sqrt => "sqrt",
            UnaryOp::Abs => "abs",
        }
    }

    fn from_name(s: &str) -> Option<UnaryOp> {
        UnaryOp::FUNCTIONS.into_iter().find(|f| f.name() == s)
    }

    pub(crate) fn apply(self, v: f64) -> std::result::Result<f64, &'static str> {
        let r = match self {
            UnaryOp::Neg => -v,
            UnaryOp::Exp => v.exp(),
            UnaryOp::Log => {
                if v <= 0.0 {
                    return Err("log of a nonpositive value");
                }
                v.ln()
            }
            UnaryOp::Cos => v.cos(),
            UnaryOp::Sin => v.sin(),
            UnaryOp::Tanh => v.tanh(),
            UnaryOp::Sqrt => {
                if v < 0.0 {
                    return Err("sqrt of a negative value");
                }
                v.sqrt()
            }
            UnaryOp::Abs => v.abs(),
        };
        if r.is_finite() {
            Ok(r)
        } else {
            Err("non-finite result")
        }
    }
}

impl BinaryOp {
    fn symbol(self) -> char {
        match self {
            BinaryOp::Add => '+',
            BinaryOp::Sub => '-',
            BinaryOp::Mul => '*',
            BinaryOp::Div => '/',
            BinaryOp::Pow => '^',
        }
    }

    pub(crate) fn apply(self, a: f64, b: f64) -> std::result::Result<f64, &'static str> {
        let r = match self {
            BinaryOp::Add => a + b,
            BinaryOp::Sub => a - b,
            BinaryOp::Mul => a * b,
            BinaryOp::Div => {
                if b == 0.0 {
                    return Err("division by zero");
                }
                a / b
            }
            BinaryOp::Pow => a.powf(b),
        };
        if r.is_finite() {
            Ok(r)
        } else {
            Err("non-finite result")
        }
    }
}

// Printing precedence levels.
const PREC_ADD: u8 = 1;
const PREC_MUL: u8 = 2;
const PREC_NEG: u8 = 3;
const PREC_POW: u8 = 4;
const PREC_ATOM: u8 = 5;

impl Expr {
    pub fn constant(v: f64) -> Expr {
        Expr::Const(v)
    }

    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_string())
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Const(c) if *c < 0.0 => PREC_NEG,
            Expr::Const(_) | Expr::Var(_) => PREC_ATOM,
            Expr::Unary(UnaryOp::Neg, _) => PREC_NEG,
            Expr::Unary(..) => PREC_ATOM,
            Expr::Binary(BinaryOp::Add | BinaryOp::Sub, ..) => PREC_ADD,
            Expr::Binary(BinaryOp::Mul | BinaryOp::Div, ..) => PREC_MUL,
            Expr::Binary(BinaryOp::Pow, ..) => PREC_POW,
        }
    }

    /// All variable names referenced by the expression.
    pub fn variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(v) => {
                out.insert(v.clone());
            }
            Expr::Unary(_, a) => a.collect_vars(out),
            Expr::Binary(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    pub fn depends_on(&self, var: &str) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Var(v) => v == var,
            Expr::Unary(_, a) => a.depends_on(var),
            Expr::Binary(_, a, b) => a.depends_on(var) || b.depends_on(var),
        }
    }

    /// Evaluate with the given variable bindings.
    pub fn eval(&self, bindings: &HashMap<String, f64>) -> Result<f64> {
        self.eval_with(&|name| bindings.get(name).copied())
    }

    pub(crate) fn eval_with(&self, lookup: &dyn Fn(&str) -> Option<f64>) -> Result<f64> {
        let fail = |msg: &str| Error::Evaluation { location: self.to_string(), message: msg.to_string() };
        match self {
            Expr::Const(c) => Ok(*c),
            Expr::Var(v) => lookup(v).ok_or_else(|| fail(&format!("unbound variable `{v}`"))),
            Expr::Unary(op, a) => op.apply(a.eval_with(lookup)?).map_err(fail),
            Expr::Binary(op, a, b) => {
                let x = a.eval_with(lookup)?;
                let y = b.eval_with(lookup)?;
                op.apply(x, y).map_err(fail)
            }
        }
    }

    /// Symbolic derivative with respect to `var`, lightly simplified.
    pub fn diff(&self, var: &str) -> Expr {
        use BinaryOp::*;
        use UnaryOp::*;
        match self {
            Expr::Const(_) => Expr::Const(0.0),
            Expr::Var(v) => Expr::Const(if v == var { 1.0 } else { 0.0 }),
            Expr::Unary(op, a) => {
                let da = a.diff(var);
                if is_zero(&da) {
                    return Expr::Const(0.0);
                }
                let a = (**a).clone();
                let outer = match op {
                    Neg => return neg(da),
                    Exp => self.clone(),
                    Log => return div(da, a),
                    Cos => neg(unary(Sin, a)),
                    Sin => unary(Cos, a),
                    Tanh => sub(Expr::Const(1.0), pow(self.clone(), Expr::Const(2.0))),
                    Sqrt => return div(da, mul(Expr::Const(2.0), self.clone())),
                    // u/|u| is undefined at the kink, which eval reports
                    Abs => div(a.clone(), unary(Abs, a)),
                };
                mul(outer, da)
            }
            Expr::Binary(op, a, b) => {
                let (a, b) = (&**a, &**b);
                match op {
                    Add => add(a.diff(var), b.diff(var)),
                    Sub => sub(a.diff(var), b.diff(var)),
                    Mul => add(mul(a.diff(var), b.clone()), mul(a.clone(), b.diff(var))),
                    Div => {
                        let num = sub(mul(a.diff(var), b.clone()), mul(a.clone(), b.diff(var)));
                        div(num, pow(b.clone(), Expr::Const(2.0)))
                    }
                    Pow => {
                        let da = a.diff(var);
                        if !b.depends_on(var) {
                            let lowered = pow(a.clone(), sub(b.clone(), Expr::Const(1.0)));
                            mul(mul(b.clone(), lowered), da)
                        } else {
                            let db = b.diff(var);
                            let inner =
                                add(mul(db, unary(Log, a.clone())), div(mul(b.clone(), da), a.clone()));
                            mul(self.clone(), inner)
                        }
                    }
                }
            }
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let wrap = self.precedence() < min;
        if wrap {
            f.write_str("(")?;
        }
        match self {
            Expr::Const(c) => {
                if *c < 0.0 {
                    write!(f, "-{}", -c)?;
                } else {
                    write!(f, "{c}")?;
                }
            }
            Expr::Var(v) => f.write_str(v)?,
            Expr::Unary(UnaryOp::Neg, a) => {
                f.write_str("-")?;
                a.fmt_prec(f, PREC_NEG)?;
            }
            Expr::Unary(op, a) => {
                write!(f, "{}(", op.name())?;
                a.fmt_prec(f, 0)?;
                f.write_str(")")?;
            }
            Expr::Binary(op, a, b) => {
                let (lmin, rmin) = match op {
                    BinaryOp::Add => (PREC_ADD, PREC_MUL),
                    BinaryOp::Sub => (PREC_ADD, PREC_MUL),
                    BinaryOp::Mul => (PREC_MUL, PREC_NEG),
                    BinaryOp::Div => (PREC_MUL, PREC_NEG),
                    // base must be atomic; exponent may be a unary minus or another power
                    BinaryOp::Pow => (PREC_ATOM, PREC_NEG),
                };
                a.fmt_prec(f, lmin)?;
                write!(f, "{}", op.symbol())?;
                b.fmt_prec(f, rmin)?;
            }
        }
        if wrap {
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

fn is_zero(e: &Expr) -> bool {
    matches!(e, Expr::Const(c) if *c == 0.0)
}

fn is_one(e: &Expr) -> bool {
    matches!(e, Expr::Const(c) if *c == 1.0)
}

fn unary(op: UnaryOp, a: Expr) -> Expr {
    Expr::Unary(op, Box::new(a))
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Const(c) => Expr::Const(-c),
        Expr::Unary(UnaryOp::Neg, inner) => *inner,
        a => unary(UnaryOp::Neg, a),
    }
}

fn add(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Const(x), Expr::Const(y)) => Expr::Const(x + y),
        (a, b) if is_zero(&a) => b,
        (a, b) if is_zero(&b) => a,
        (a, b) => Expr::Binary(BinaryOp::Add, Box::new(a), Box::new(b)),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Const(x), Expr::Const(y)) => Expr::Const(x - y),
        (a, b) if is_zero(&b) => a,
        (a, b) if is_zero(&a) => neg(b),
        (a, b) => Expr::Binary(BinaryOp::Sub, Box::new(a), Box::new(b)),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Const(x), Expr::Const(y)) => Expr::Const(x * y),
        (a, _) if is_zero(&a) => Expr::Const(0.0),
        (_, b) if is_zero(&b) => Expr::Const(0.0),
        (a, b) if is_one(&a) => b,
        (a, b) if is_one(&b) => a,
        (Expr::Const(c), b) if c == -1.0 => neg(b),
        (a, Expr::Const(c)) if c == -1.0 => neg(a),
        (a, b) => Expr::Binary(BinaryOp::Mul, Box::new(a), Box::new(b)),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (a, _) if is_zero(&a) => Expr::Const(0.0),
        (a, b) if is_one(&b) => a,
        (a, b) => Expr::Binary(BinaryOp::Div, Box::new(a), Box::new(b)),
    }
}

fn pow(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (_, b) if is_zero(&b) => Expr::Const(1.0),
        (a, b) if is_one(&b) => a,
        (a, b) => Expr::Binary(BinaryOp::Pow, Box::new(a), Box::new(b)),
    }
}

// ---------------------------------------------------------------- parsing

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

fn tokenize(text: &str) -> Result<Vec<(usize, Token)>> {
    let bytes = text.as_bytes();
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
            let lit = &text[start..i];
            let v: f64 = lit
                .parse()
                .map_err(|_| Error::Syntax { offset: start, message: format!("malformed number `{lit}`") })?;
            out.push((start, Token::Num(v)));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((start, Token::Ident(text[start..i].to_string())));
        } else {
            let tok = match c {
                '+' | '-' | '*' | '/' | '^' => Token::Op(c),
                '(' => Token::LParen,
                ')' => Token::RParen,
                _ => {
                    return Err(Error::Syntax { offset: i, message: format!("unexpected character `{c}`") });
                }
            };
            out.push((i, tok));
            i += c.len_utf8();
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<(usize, Token)>,
    pos: usize,
    end: usize,
    allowed: &'a BTreeSet<String>,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |(o, _)| *o)
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Syntax { offset: self.offset(), message: message.into() })
    }

    fn expect(&mut self, tok: Token) -> Result<()> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            self.error(format!("expected {tok:?}"))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while let Some(Token::Op(c @ ('+' | '-'))) = self.peek() {
            let op = if *c == '+' { BinaryOp::Add } else { BinaryOp::Sub };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some(Token::Op(c @ ('*' | '/'))) = self.peek() {
            let op = if *c == '*' { BinaryOp::Mul } else { BinaryOp::Div };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        if let Some(Token::Op('-')) = self.peek() {
            self.pos += 1;
            return Ok(Expr::Unary(UnaryOp::Neg, Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.primary()?;
        if let Some(Token::Op('^')) = self.peek() {
            self.pos += 1;
            let exponent = self.unary()?;
            return Ok(Expr::Binary(BinaryOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr> {
        match self.peek().cloned() {
            Some(Token::Num(v)) => {
                self.pos += 1;
                Ok(Expr::Const(v))
            }
            Some(Token::Ident(name)) => {
                self.pos += 1;
                if let Some(f) = UnaryOp::from_name(&name) {
                    self.expect(Token::LParen)?;
                    let arg = self.expr()?;
                    self.expect(Token::RParen)?;
                    return Ok(Expr::Unary(f, Box::new(arg)));
                }
                if !self.allowed.contains(&name) {
                    return Err(Error::UndeclaredIdentifier(name));
                }
                Ok(Expr::Var(name))
            }
            Some(Token::LParen) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(Token::RParen)?;
                Ok(e)
            }
            Some(t) => self.error(format!("unexpected token {t:?}")),
            None => self.error("unexpected end of input"),
        }
    }
}

/// Parse `text`, accepting only the listed variable names.
pub fn parse_expr<S: AsRef<str>>(text: &str, allowed_vars: &[S]) -> Result<Expr> {
    let allowed: BTreeSet<String> = allowed_vars.iter().map(|s| s.as_ref().to_string()).collect();
    if text.trim().is_empty() {
        return Err(Error::Syntax { offset: 0, message: "empty expression".into() });
    }
    let tokens = tokenize(text)?;
    let mut p = Parser { tokens, pos: 0, end: text.len(), allowed: &allowed };
    let e = p.expr()?;
    if p.pos != p.tokens.len() {
        return p.error("trailing input");
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vars(v: &[(&str, f64)]) -> HashMap<String, f64> {
        v.iter().map(|(k, x)| (k.to_string(), *x)).collect()
    }

    #[test]
    fn parses_drift_of_simulated_model() {
        let e = parse_expr("alpha1*(x-alpha2)", &["x", "alpha1", "alpha2"]).unwrap();
        let expected = Expr::Binary(
            BinaryOp::Mul,
            Box::new(Expr::var("alpha1")),
            Box::new(Expr::Binary(BinaryOp::Sub, Box::new(Expr::var("x")), Box::new(Expr::var("alpha2")))),
        );
        assert_eq!(e, expected);
        let v = e.eval(&vars(&[("alpha1", 2.0), ("alpha2", 1.0), ("x", 3.0)])).unwrap();
        assert_eq!(v, 4.0);
    }

    #[test]
    fn precedence_and_associativity() {
        let none: [&str; 0] = [];
        let ev = |s: &str| parse_expr(s, &none).unwrap().eval(&HashMap::new()).unwrap();
        assert_eq!(ev("1+2*3"), 7.0);
        assert_eq!(ev("2^3^2"), 512.0);
        assert_eq!(ev("-2^2"), -4.0);
        assert_eq!(ev("2^-1"), 0.5);
        assert_eq!(ev("8/4/2"), 1.0);
        assert_eq!(ev("1-2-3"), -4.0);
        assert_eq!(ev("1.5e2 + 2E-1"), 150.2);
    }

    #[test]
    fn undeclared_identifier_is_named() {
        let err = parse_expr("exp(gamma*cos(x))", &["x"]).unwrap_err();
        match err {
            Error::UndeclaredIdentifier(name) => assert_eq!(name, "gamma"),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn syntax_errors_carry_offsets() {
        match parse_expr("1 + * 2", &["x"]).unwrap_err() {
            Error::Syntax { offset, .. } => assert_eq!(offset, 4),
            e => panic!("{e}"),
        }
        match parse_expr("exp(x", &["x"]).unwrap_err() {
            Error::Syntax { offset, .. } => assert_eq!(offset, 5),
            e => panic!("{e}"),
        }
        assert!(parse_expr("x $ 2", &["x"]).is_err());
        assert!(parse_expr("  ", &["x"]).is_err());
        assert!(parse_expr("x x", &["x"]).is_err());
    }

    #[test]
    fn evaluation_errors() {
        let e = parse_expr("exp(g*cos(x))", &["g", "x"]).unwrap();
        assert_eq!(e.eval(&vars(&[("g", 0.0), ("x", 1.3)])).unwrap(), 1.0);
        let log = parse_expr("log(x)", &["x"]).unwrap();
        assert!(matches!(log.eval(&vars(&[("x", -1.0)])), Err(Error::Evaluation { .. })));
        let d = parse_expr("1/x", &["x"]).unwrap();
        assert!(d.eval(&vars(&[("x", 0.0)])).is_err());
        let s = parse_expr("sqrt(x)", &["x"]).unwrap();
        assert!(s.eval(&vars(&[("x", -4.0)])).is_err());
    }

    #[test]
    fn derivatives_of_model_expressions() {
        let scale = parse_expr("exp(gamma*cos(x))", &["x", "gamma"]).unwrap();
        let d = scale.diff("gamma");
        assert_eq!(d.to_string(), "exp(gamma*cos(x))*cos(x)");
        let drift = parse_expr("alpha1*(x-alpha2)", &["x", "alpha1", "alpha2"]).unwrap();
        assert_eq!(drift.diff("alpha2"), Expr::Unary(UnaryOp::Neg, Box::new(Expr::var("alpha1"))));
        assert_eq!(Expr::Const(5.0).diff("x"), Expr::Const(0.0));
    }

    #[test]
    fn abs_derivative_is_undefined_at_kink() {
        let e = parse_expr("abs(x)", &["x"]).unwrap();
        let d = e.diff("x");
        assert_eq!(d.eval(&vars(&[("x", 2.0)])).unwrap(), 1.0);
        assert_eq!(d.eval(&vars(&[("x", -2.0)])).unwrap(), -1.0);
        assert!(d.eval(&vars(&[("x", 0.0)])).is_err());
    }

    #[test]
    fn negative_constants_print_unambiguously() {
        let e = Expr::Binary(BinaryOp::Sub, Box::new(Expr::var("x")), Box::new(Expr::Const(-2.0)));
        let back = parse_expr(&e.to_string(), &["x"]).unwrap();
        assert_eq!(back.eval(&vars(&[("x", 1.0)])).unwrap(), 3.0);
        let p = Expr::Binary(BinaryOp::Pow, Box::new(Expr::Const(-2.0)), Box::new(Expr::Const(2.0)));
        let back = parse_expr(&p.to_string(), &["x"]).unwrap();
        assert_eq!(back.eval(&HashMap::new()).unwrap(), 4.0);
    }
}
