//! A small expression language for reaction terms `f(t, x, y)` and coefficients `a(x)`.
//!
//! Grammar:
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | primary
//! primary := number | ident | ident '(' expr (',' expr)* ')' | '(' expr ')'
//! ```
//!
//! Identifiers are the variables `t`, `x` (alias of `x1`), `x1`, `x2`, `y`,
//! the constants `pi` and `T` (the declared period) and the functions `sin`,
//! `cos`, `atan`, `tanh`, `exp_neg_sq` (`e^{-y²}`), `abs`, `min`, `max`.
//! Division by an exact zero evaluates to zero so evaluation is total.

use std::fmt;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{kind} at offset {offset}")]
pub struct ParseError {
    /// Byte offset into the source.
    pub offset: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParseErrorKind {
    UnknownIdentifier(String),
    Arity {
        func: &'static str,
        expected: usize,
        got: usize,
    },
    UnbalancedParen,
    UnexpectedChar(char),
    UnexpectedEnd,
    TrailingInput,
    BadNumber(String),
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::UnknownIdentifier(s) => write!(f, "unknown identifier `{s}`"),
            ParseErrorKind::Arity {
                func,
                expected,
                got,
            } => {
                write!(f, "`{func}` takes {expected} argument(s), got {got}")
            }
            ParseErrorKind::UnbalancedParen => write!(f, "unbalanced parenthesis"),
            ParseErrorKind::UnexpectedChar(c) => write!(f, "unexpected character `{c}`"),
            ParseErrorKind::UnexpectedEnd => write!(f, "unexpected end of input"),
            ParseErrorKind::TrailingInput => write!(f, "trailing input"),
            ParseErrorKind::BadNumber(s) => write!(f, "malformed number `{s}`"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    T,
    X1,
    X2,
    Y,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Const {
    Pi,
    Period,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Atan,
    Tanh,
    ExpNegSq,
    Abs,
    Min,
    Max,
}

impl Func {
    pub const ALL: [Func; 8] = [
        Func::Sin,
        Func::Cos,
        Func::Atan,
        Func::Tanh,
        Func::ExpNegSq,
        Func::Abs,
        Func::Min,
        Func::Max,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Atan => "atan",
            Func::Tanh => "tanh",
            Func::ExpNegSq => "exp_neg_sq",
            Func::Abs => "abs",
            Func::Min => "min",
            Func::Max => "max",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max => 2,
            _ => 1,
        }
    }

    fn from_name(s: &str) -> Option<Func> {
        Func::ALL.iter().copied().find(|f| f.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Const(Const),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

/// Point of evaluation. `period` is the value bound to `T`.
#[derive(Debug, Clone, Copy, Default)]
pub struct EvalContext {
    pub t: f64,
    pub x: [f64; 2],
    pub y: f64,
    pub period: f64,
}

impl EvalContext {
    pub fn at_point(x: [f64; 2]) -> Self {
        Self {
            x,
            ..Self::default()
        }
    }
}

/// A parsed expression.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    root: Expr,
}

impl Expression {
    pub fn parse(src: &str) -> Result<Self, ParseError> {
        let mut p = Parser {
            src: src.as_bytes(),
            pos: 0,
        };
        let root = p.expr()?;
        p.skip_ws();
        if p.pos < p.src.len() {
            let kind = if p.src[p.pos] == b')' {
                ParseErrorKind::UnbalancedParen
            } else {
                ParseErrorKind::TrailingInput
            };
            return Err(ParseError {
                offset: p.pos,
                kind,
            });
        }
        Ok(Self { root })
    }

    pub fn from_ast(root: Expr) -> Self {
        Self { root }
    }

    pub fn constant(c: f64) -> Self {
        Self { root: Expr::Num(c) }
    }

    pub fn ast(&self) -> &Expr {
        &self.root
    }

    pub fn eval(&self, ctx: &EvalContext) -> f64 {
        eval(&self.root, ctx)
    }

    pub fn uses(&self, var: Var) -> bool {
        uses(&self.root, var)
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.root)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::Var(Var::T) => write!(f, "t"),
            Expr::Var(Var::X1) => write!(f, "x1"),
            Expr::Var(Var::X2) => write!(f, "x2"),
            Expr::Var(Var::Y) => write!(f, "y"),
            Expr::Const(Const::Pi) => write!(f, "pi"),
            Expr::Const(Const::Period) => write!(f, "T"),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Bin(op, a, b) => {
                let s = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                };
                write!(f, "({a} {s} {b})")
            }
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

fn eval(e: &Expr, ctx: &EvalContext) -> f64 {
    match e {
        Expr::Num(v) => *v,
        Expr::Var(Var::T) => ctx.t,
        Expr::Var(Var::X1) => ctx.x[0],
        Expr::Var(Var::X2) => ctx.x[1],
        Expr::Var(Var::Y) => ctx.y,
        Expr::Const(Const::Pi) => std::f64::consts::PI,
        Expr::Const(Const::Period) => ctx.period,
        Expr::Neg(a) => -eval(a, ctx),
        Expr::Bin(op, a, b) => {
            let (a, b) = (eval(a, ctx), eval(b, ctx));
            match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div => {
                    if b == 0.0 {
                        0.0
                    } else {
                        a / b
                    }
                }
            }
        }
        Expr::Call(func, args) => {
            let a = eval(&args[0], ctx);
            match func {
                Func::Sin => a.sin(),
                Func::Cos => a.cos(),
                Func::Atan => a.atan(),
                Func::Tanh => a.tanh(),
                Func::ExpNegSq => (-a * a).exp(),
                Func::Abs => a.abs(),
                Func::Min => a.min(eval(&args[1], ctx)),
                Func::Max => a.max(eval(&args[1], ctx)),
            }
        }
    }
}

fn uses(e: &Expr, var: Var) -> bool {
    match e {
        Expr::Var(v) => *v == var,
        Expr::Num(_) | Expr::Const(_) => false,
        Expr::Neg(a) => uses(a, var),
        Expr::Bin(_, a, b) => uses(a, var) || uses(b, var),
        Expr::Call(_, args) => args.iter().any(|a| uses(a, var)),
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn err(&self, offset: usize, kind: ParseErrorKind) -> ParseError {
        ParseError { offset, kind }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        while let Some(c @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let rhs = self.term()?;
            let op = if c == b'+' { BinOp::Add } else { BinOp::Sub };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(c @ (b'*' | b'/')) = self.peek() {
            self.pos += 1;
            let rhs = self.unary()?;
            let op = if c == b'*' { BinOp::Mul } else { BinOp::Div };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        match self.peek() {
            None => Err(self.err(self.pos, ParseErrorKind::UnexpectedEnd)),
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect_close()?;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.ident(),
            Some(b')') => Err(self.err(self.pos, ParseErrorKind::UnbalancedParen)),
            Some(c) => {
                let _ = start;
                Err(self.err(self.pos, ParseErrorKind::UnexpectedChar(c as char)))
            }
        }
    }

    fn expect_close(&mut self) -> Result<(), ParseError> {
        match self.peek() {
            Some(b')') => {
                self.pos += 1;
                Ok(())
            }
            None => Err(self.err(self.pos, ParseErrorKind::UnbalancedParen)),
            Some(c) => Err(self.err(self.pos, ParseErrorKind::UnexpectedChar(c as char))),
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let s = self.src;
        let digits = |p: &mut usize| {
            while *p < s.len() && s[*p].is_ascii_digit() {
                *p += 1;
            }
        };
        let mut p = self.pos;
        digits(&mut p);
        if p < s.len() && s[p] == b'.' {
            p += 1;
            digits(&mut p);
        }
        if p < s.len() && (s[p] == b'e' || s[p] == b'E') {
            let mut q = p + 1;
            if q < s.len() && (s[q] == b'+' || s[q] == b'-') {
                q += 1;
            }
            if q < s.len() && s[q].is_ascii_digit() {
                digits(&mut q);
                p = q;
            }
        }
        let text = std::str::from_utf8(&s[start..p]).unwrap_or_default();
        let v: f64 = text
            .parse()
            .map_err(|_| self.err(start, ParseErrorKind::BadNumber(text.to_string())))?;
        self.pos = p;
        Ok(Expr::Num(v))
    }

    fn ident(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or_default();
        let simple = match name {
            "t" => Some(Expr::Var(Var::T)),
            "x" | "x1" => Some(Expr::Var(Var::X1)),
            "x2" => Some(Expr::Var(Var::X2)),
            "y" => Some(Expr::Var(Var::Y)),
            "pi" => Some(Expr::Const(Const::Pi)),
            "T" => Some(Expr::Const(Const::Period)),
            _ => None,
        };
        if let Some(e) = simple {
            return Ok(e);
        }
        let func = Func::from_name(name)
            .ok_or_else(|| self.err(start, ParseErrorKind::UnknownIdentifier(name.to_string())))?;
        if self.peek() != Some(b'(') {
            return Err(self.err(
                self.pos,
                ParseErrorKind::Arity {
                    func: func.name(),
                    expected: func.arity(),
                    got: 0,
                },
            ));
        }
        self.pos += 1;
        let mut args = vec![self.expr()?];
        while self.peek() == Some(b',') {
            self.pos += 1;
            args.push(self.expr()?);
        }
        self.expect_close()?;
        if args.len() != func.arity() {
            return Err(self.err(
                start,
                ParseErrorKind::Arity {
                    func: func.name(),
                    expected: func.arity(),
                    got: args.len(),
                },
            ));
        }
        Ok(Expr::Call(func, args))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ctx(t: f64, x: f64, y: f64) -> EvalContext {
        EvalContext {
            t,
            x: [x, 0.0],
            y,
            period: 1.0,
        }
    }

    #[test]
    fn parses_atan() {
        let e = Expression::parse("atan(y)").unwrap();
        assert_eq!(e.ast(), &Expr::Call(Func::Atan, vec![Expr::Var(Var::Y)]));
    }

    #[test]
    fn evaluates_forced_atan() {
        let e = Expression::parse("atan(y) - 0.3*cos(2*pi*t/T)").unwrap();
        assert!((e.eval(&ctx(0.0, 0.0, 0.0)) + 0.3).abs() < 1e-15);
    }

    #[test]
    fn reports_error_offsets() {
        let err = Expression::parse("atan(y").unwrap_err();
        assert_eq!(err.offset, 6);
        assert_eq!(err.kind, ParseErrorKind::UnbalancedParen);

        let err = Expression::parse("foo(y)").unwrap_err();
        assert_eq!(err.offset, 0);
        assert!(matches!(err.kind, ParseErrorKind::UnknownIdentifier(_)));

        let err = Expression::parse("1 + max(y)").unwrap_err();
        assert_eq!(err.offset, 4);
        assert!(matches!(
            err.kind,
            ParseErrorKind::Arity {
                expected: 2,
                got: 1,
                ..
            }
        ));

        let err = Expression::parse("(y + 1))").unwrap_err();
        assert_eq!((err.offset, err.kind), (7, ParseErrorKind::UnbalancedParen));

        let err = Expression::parse("y $ 2").unwrap_err();
        assert_eq!(err.offset, 2);
    }

    #[test]
    fn precedence_and_unary_minus() {
        let e = Expression::parse("-2*3 + 4/2 - -1").unwrap();
        assert_eq!(e.eval(&ctx(0.0, 0.0, 0.0)), -6.0 + 2.0 + 1.0);
        let e = Expression::parse("1e-3 * 2.5E2").unwrap();
        assert!((e.eval(&ctx(0.0, 0.0, 0.0)) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn division_by_zero_is_total() {
        let e = Expression::parse("1 / (y - y)").unwrap();
        assert_eq!(e.eval(&ctx(0.0, 0.0, 3.0)), 0.0);
    }

    #[test]
    fn functions_evaluate() {
        let c = ctx(0.0, 0.0, 2.0);
        let cases = [
            ("exp_neg_sq(y)", (-4.0f64).exp()),
            ("abs(-y)", 2.0),
            ("min(y, 1)", 1.0),
            ("max(y, 1)", 2.0),
            ("tanh(y)", 2.0f64.tanh()),
        ];
        for (src, want) in cases {
            assert_eq!(Expression::parse(src).unwrap().eval(&c), want, "{src}");
        }
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (0.0f64..10.0).prop_map(Expr::Num),
            Just(Expr::Var(Var::T)),
            Just(Expr::Var(Var::X1)),
            Just(Expr::Var(Var::X2)),
            Just(Expr::Var(Var::Y)),
            Just(Expr::Const(Const::Pi)),
            Just(Expr::Const(Const::Period)),
        ];
        leaf.prop_recursive(5, 48, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
                (inner.clone(), inner.clone(), 0..4usize).prop_map(|(a, b, k)| {
                    let op = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div][k];
                    Expr::Bin(op, Box::new(a), Box::new(b))
                }),
                (inner.clone(), inner.clone(), 0..Func::ALL.len()).prop_map(|(a, b, k)| {
                    let f = Func::ALL[k];
                    let args = if f.arity() == 2 { vec![a, b] } else { vec![a] };
                    Expr::Call(f, args)
                }),
            ]
        })
    }

    proptest! {
        #[test]
        fn print_parse_round_trip(e in arb_expr()) {
            let printed = Expression::from_ast(e.clone()).to_string();
            let back = Expression::parse(&printed).unwrap();
            prop_assert_eq!(back.ast(), &e);
        }

        #[test]
        fn evaluation_is_total_on_finite_inputs(
            e in arb_expr(), t in -10.0f64..10.0, y in -10.0f64..10.0
        ) {
            let v = Expression::from_ast(e).eval(&ctx(t, 0.5, y));
            prop_assert!(!v.is_nan());
        }
    }
}
