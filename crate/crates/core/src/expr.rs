//! Complex-valued arithmetic expressions in `x` and `y`, for boundary data
//! and coefficient functions in problem files.
//!
//! Grammar: `+ - * / ^`, parentheses, numbers (`2`, `1.5`, `1e-3`), the
//! constants `i`, `pi`, `e`, the variables `x`, `y`, and the functions
//! `sin cos tan exp log sqrt sinh cosh`. Juxtaposition multiplies, so
//! `1.5x`, `3.333i` and `cos(x)cos(y)` are accepted; it binds like `*`.

use std::fmt;

use num_complex::Complex64;

#[derive(Debug, Clone, PartialEq)]
pub struct ExprError {
    /// Byte offset into the source.
    pub pos: usize,
    pub msg: String,
}

impl fmt::Display for ExprError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at column {}", self.msg, self.pos + 1)
    }
}

impl std::error::Error for ExprError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Sinh,
    Cosh,
}

impl Func {
    fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "sin" => Self::Sin,
            "cos" => Self::Cos,
            "tan" => Self::Tan,
            "exp" => Self::Exp,
            "log" | "ln" => Self::Log,
            "sqrt" => Self::Sqrt,
            "sinh" => Self::Sinh,
            "cosh" => Self::Cosh,
            _ => return None,
        })
    }

    fn apply(self, z: Complex64) -> Complex64 {
        match self {
            Self::Sin => z.sin(),
            Self::Cos => z.cos(),
            Self::Tan => z.tan(),
            Self::Exp => z.exp(),
            Self::Log => z.ln(),
            Self::Sqrt => z.sqrt(),
            Self::Sinh => z.sinh(),
            Self::Cosh => z.cosh(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Const(Complex64),
    X,
    Y,
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

impl Node {
    fn eval(&self, x: f64, y: f64) -> Complex64 {
        match self {
            Node::Const(c) => *c,
            Node::X => Complex64::new(x, 0.0),
            Node::Y => Complex64::new(y, 0.0),
            Node::Neg(a) => {
                // Adding 0.0 clears a negative zero, which would otherwise
                // pick the wrong branch in sqrt and log.
                let v = -a.eval(x, y);
                Complex64::new(v.re + 0.0, v.im + 0.0)
            }
            Node::Add(a, b) => a.eval(x, y) + b.eval(x, y),
            Node::Sub(a, b) => a.eval(x, y) - b.eval(x, y),
            Node::Mul(a, b) => a.eval(x, y) * b.eval(x, y),
            Node::Div(a, b) => a.eval(x, y) / b.eval(x, y),
            Node::Pow(a, b) => {
                let (base, p) = (a.eval(x, y), b.eval(x, y));
                // Integer powers stay exact for negative real bases.
                if p.im == 0.0 && p.re.fract() == 0.0 && p.re.abs() <= 64.0 {
                    base.powi(p.re as i32)
                } else {
                    base.powc(p)
                }
            }
            Node::Call(f, a) => f.apply(a.eval(x, y)),
        }
    }

    fn uses_coordinates(&self) -> bool {
        match self {
            Node::Const(_) => false,
            Node::X | Node::Y => true,
            Node::Neg(a) | Node::Call(_, a) => a.uses_coordinates(),
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) | Node::Pow(a, b) => {
                a.uses_coordinates() || b.uses_coordinates()
            }
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
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>, ExprError> {
    let b = src.as_bytes();
    let mut out = Vec::new();
    let mut k = 0;
    while k < b.len() {
        let ch = b[k] as char;
        if ch.is_ascii_whitespace() {
            k += 1;
        } else if ch.is_ascii_digit() || (ch == '.' && b.get(k + 1).is_some_and(u8::is_ascii_digit)) {
            let start = k;
            while k < b.len() && (b[k].is_ascii_digit() || b[k] == b'.') {
                k += 1;
            }
            // An exponent only if digits follow, so `2e` and `2exp(x)` mean
            // multiplication.
            if k < b.len() && (b[k] == b'e' || b[k] == b'E') {
                let mut j = k + 1;
                if j < b.len() && (b[j] == b'+' || b[j] == b'-') {
                    j += 1;
                }
                if j < b.len() && b[j].is_ascii_digit() {
                    k = j;
                    while k < b.len() && b[k].is_ascii_digit() {
                        k += 1;
                    }
                }
            }
            let text = &src[start..k];
            let v = text
                .parse::<f64>()
                .map_err(|_| ExprError { pos: start, msg: format!("malformed number '{text}'") })?;
            out.push((start, Tok::Num(v)));
        } else if ch.is_ascii_alphabetic() || ch == '_' {
            let start = k;
            while k < b.len() && (b[k].is_ascii_alphanumeric() || b[k] == b'_') {
                k += 1;
            }
            out.push((start, Tok::Ident(src[start..k].to_string())));
        } else if "+-*/^".contains(ch) {
            out.push((k, Tok::Op(ch)));
            k += 1;
        } else if ch == '(' {
            out.push((k, Tok::LParen));
            k += 1;
        } else if ch == ')' {
            out.push((k, Tok::RParen));
            k += 1;
        } else {
            let c = src[k..].chars().next().unwrap();
            return Err(ExprError { pos: k, msg: format!("unexpected character '{c}'") });
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.1)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |t| t.0)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ExprError> {
        Err(ExprError { pos: self.offset(), msg: msg.into() })
    }

    fn expr(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.term()?;
        while let Some(Tok::Op(op @ ('+' | '-'))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if op == '+' { Node::Add(lhs.into(), rhs.into()) } else { Node::Sub(lhs.into(), rhs.into()) };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Op('*')) => {
                    self.pos += 1;
                    lhs = Node::Mul(lhs.into(), self.unary()?.into());
                }
                Some(Tok::Op('/')) => {
                    self.pos += 1;
                    lhs = Node::Div(lhs.into(), self.unary()?.into());
                }
                Some(Tok::Num(_) | Tok::Ident(_) | Tok::LParen) => {
                    lhs = Node::Mul(lhs.into(), self.power()?.into());
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Node, ExprError> {
        match self.peek() {
            Some(Tok::Op('-')) => {
                self.pos += 1;
                Ok(Node::Neg(self.unary()?.into()))
            }
            Some(Tok::Op('+')) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Node, ExprError> {
        let base = self.atom()?;
        if let Some(Tok::Op('^')) = self.peek() {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Node::Pow(base.into(), exp.into()));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node, ExprError> {
        let Some(tok) = self.peek().cloned() else {
            return self.err("unexpected end of expression");
        };
        self.pos += 1;
        match tok {
            Tok::Num(v) => Ok(Node::Const(Complex64::new(v, 0.0))),
            Tok::LParen => {
                let inner = self.expr()?;
                match self.peek() {
                    Some(Tok::RParen) => {
                        self.pos += 1;
                        Ok(inner)
                    }
                    _ => self.err("expected ')'"),
                }
            }
            Tok::Ident(name) => match name.as_str() {
                "x" => Ok(Node::X),
                "y" => Ok(Node::Y),
                "i" => Ok(Node::Const(Complex64::new(0.0, 1.0))),
                "pi" => Ok(Node::Const(Complex64::new(std::f64::consts::PI, 0.0))),
                "e" => Ok(Node::Const(Complex64::new(std::f64::consts::E, 0.0))),
                other => match Func::from_name(other) {
                    Some(f) => {
                        if self.peek() != Some(&Tok::LParen) {
                            return self.err(format!("expected '(' after {other}"));
                        }
                        let arg = self.atom()?;
                        Ok(Node::Call(f, arg.into()))
                    }
                    None => {
                        self.pos -= 1;
                        self.err(format!("unknown name '{other}'"))
                    }
                },
            },
            Tok::Op(c) => {
                self.pos -= 1;
                self.err(format!("unexpected '{c}'"))
            }
            Tok::RParen => {
                self.pos -= 1;
                self.err("unexpected ')'")
            }
        }
    }
}

/// A parsed expression.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    src: String,
    root: Node,
}

impl Expr {
    pub fn parse(src: &str) -> Result<Self, ExprError> {
        let toks = lex(src)?;
        let mut p = Parser { toks, pos: 0, end: src.len() };
        let root = p.expr()?;
        if p.pos != p.toks.len() {
            return p.err("unexpected trailing input");
        }
        Ok(Self { src: src.to_string(), root })
    }

    pub fn eval(&self, x: f64, y: f64) -> Complex64 {
        self.root.eval(x, y)
    }

    /// True if the expression mentions neither `x` nor `y`.
    pub fn is_constant(&self) -> bool {
        !self.root.uses_coordinates()
    }

    pub fn source(&self) -> &str {
        &self.src
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.src)
    }
}

/// Parses an expression that must not depend on `x` or `y`.
pub fn parse_constant(src: &str) -> Result<Complex64, ExprError> {
    let e = Expr::parse(src)?;
    if !e.is_constant() {
        return Err(ExprError { pos: 0, msg: "expected a constant, found a function of x or y".into() });
    }
    Ok(e.eval(0.0, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn ev(s: &str, x: f64, y: f64) -> Complex64 {
        Expr::parse(s).unwrap_or_else(|e| panic!("{s}: {e}")).eval(x, y)
    }

    #[test]
    fn constants() {
        assert_eq!(parse_constant("3+2i").unwrap(), c(3.0, 2.0));
        assert_eq!(parse_constant("-1 + i/3").unwrap(), c(-1.0, 1.0 / 3.0));
        assert_eq!(parse_constant("3.333i").unwrap(), c(0.0, 3.333));
        assert_eq!(parse_constant("2e-3").unwrap(), c(2e-3, 0.0));
        assert_eq!(parse_constant("2e").unwrap(), c(2.0 * std::f64::consts::E, 0.0));
        assert_eq!(parse_constant("-2^2").unwrap(), c(-4.0, 0.0));
        assert_eq!(parse_constant("2^-1").unwrap(), c(0.5, 0.0));
        assert_eq!(parse_constant("(-2)^3").unwrap(), c(-8.0, 0.0));
        assert_eq!(parse_constant("63.9923 + 0.7039i").unwrap(), c(63.9923, 0.7039));
        assert!(parse_constant("x + 1").is_err());
    }

    #[test]
    fn functions_of_position() {
        let (x, y) = (0.3, 0.7);
        let v = ev("cos(1.5x)cos(1.5x) + i sin(x)sin(y)", x, y);
        assert!((v - c((1.5 * x).cos().powi(2), x.sin() * y.sin())).norm() < 1e-15);
        assert_eq!(ev("exp(x+y)", x, y), c((x + y).exp(), 0.0));
        assert_eq!(ev("2x y", 2.0, 3.0), c(12.0, 0.0));
        assert!(Expr::parse("xy").is_err());
        assert!((ev("exp(i*pi)", 0.0, 0.0) - c(-1.0, 0.0)).norm() < 1e-15);
        assert_eq!(ev("sqrt(-4)", 0.0, 0.0), c(0.0, 2.0));
    }

    #[test]
    fn implicit_product_binds_like_times() {
        assert_eq!(ev("1/2x", 4.0, 0.0), c(2.0, 0.0));
        assert_eq!(ev("2x^2", 3.0, 0.0), c(18.0, 0.0));
    }

    #[test]
    fn errors_carry_positions() {
        let e = Expr::parse("1 + foo(x)").unwrap_err();
        assert_eq!(e.pos, 4);
        assert!(e.msg.contains("foo"));
        assert_eq!(Expr::parse("(1 + x").unwrap_err().msg, "expected ')'");
        assert_eq!(Expr::parse("1 $ 2").unwrap_err().pos, 2);
        assert!(Expr::parse("").is_err());
        assert!(Expr::parse("sin x").is_err());
        assert!(Expr::parse("1 +").is_err());
        assert!(Expr::parse("1 )").is_err());
    }

    proptest! {
        #[test]
        fn linear_combinations_round_trip(a in -100.0..100.0f64, b in -100.0..100.0f64, x in -2.0..2.0f64) {
            let s = format!("({a}) + ({b})i + x");
            let v = Expr::parse(&s).unwrap().eval(x, 0.0);
            prop_assert!((v - c(a + x, b)).norm() <= 1e-12 * (1.0 + a.abs() + b.abs()));
        }
    }
}
