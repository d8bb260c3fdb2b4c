//! Coefficient expressions over group coordinates.
//!
//! Grammar (`func` is one of `sin`, `cos`, `exp`, `tanh`):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := number | ident | func '(' expr ')' | '(' expr ')' | '-' factor
//! ```
//!
//! Identifiers resolve to coordinate names (the lowercased basis labels);
//! the identifier `i` denotes the imaginary unit unless a coordinate shadows
//! it. Expressions evaluate to complex numbers and are closed under exact
//! symbolic differentiation, which is what keeps formal adjoints exact.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::algebra::GradedLieAlgebra;
use crate::error::{CoreError, Result};
use crate::poly::Poly;

type C64 = Complex64;

#[derive(Debug, PartialEq)]
pub enum Expr {
    Const(C64),
    Coord(usize),
    Add(Arc<Expr>, Arc<Expr>),
    Sub(Arc<Expr>, Arc<Expr>),
    Mul(Arc<Expr>, Arc<Expr>),
    Div(Arc<Expr>, Arc<Expr>),
    Neg(Arc<Expr>),
    Sin(Arc<Expr>),
    Cos(Arc<Expr>),
    Exp(Arc<Expr>),
    Tanh(Arc<Expr>),
}

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

// Smart constructors with constant folding; they keep derivative trees from
// ballooning with trivial factors.
fn c_const(c: C64) -> Arc<Expr> {
    Arc::new(Expr::Const(c))
}

fn c_add(a: Arc<Expr>, b: Arc<Expr>) -> Arc<Expr> {
    match (&*a, &*b) {
        (Expr::Const(x), Expr::Const(y)) => c_const(x + y),
        (Expr::Const(x), _) if *x == ZERO => b,
        (_, Expr::Const(y)) if *y == ZERO => a,
        _ => Arc::new(Expr::Add(a, b)),
    }
}

fn c_sub(a: Arc<Expr>, b: Arc<Expr>) -> Arc<Expr> {
    match (&*a, &*b) {
        (Expr::Const(x), Expr::Const(y)) => c_const(x - y),
        (_, Expr::Const(y)) if *y == ZERO => a,
        (Expr::Const(x), _) if *x == ZERO => c_neg(b),
        _ => Arc::new(Expr::Sub(a, b)),
    }
}

fn c_mul(a: Arc<Expr>, b: Arc<Expr>) -> Arc<Expr> {
    match (&*a, &*b) {
        (Expr::Const(x), Expr::Const(y)) => c_const(x * y),
        (Expr::Const(x), _) if *x == ZERO => c_const(ZERO),
        (_, Expr::Const(y)) if *y == ZERO => c_const(ZERO),
        (Expr::Const(x), _) if *x == ONE => b,
        (_, Expr::Const(y)) if *y == ONE => a,
        _ => Arc::new(Expr::Mul(a, b)),
    }
}

fn c_div(a: Arc<Expr>, b: Arc<Expr>) -> Arc<Expr> {
    match (&*a, &*b) {
        (Expr::Const(x), _) if *x == ZERO => c_const(ZERO),
        (_, Expr::Const(y)) if *y == ONE => a,
        _ => Arc::new(Expr::Div(a, b)),
    }
}

fn c_neg(a: Arc<Expr>) -> Arc<Expr> {
    match &*a {
        Expr::Const(x) => c_const(-x),
        Expr::Neg(inner) => inner.clone(),
        _ => Arc::new(Expr::Neg(a)),
    }
}

/// A coefficient expression bound to an algebra's coordinate names.
#[derive(Clone, Debug)]
pub struct CoeffExpr {
    alg: Arc<GradedLieAlgebra>,
    node: Arc<Expr>,
}

impl CoeffExpr {
    /// Parse `src` against the coordinate names of `alg`.
    pub fn parse(alg: Arc<GradedLieAlgebra>, src: &str) -> Result<Self> {
        let mut parser = Parser {
            src,
            bytes: src.as_bytes(),
            pos: 0,
            names: alg.coord_names(),
        };
        let node = parser.expr()?;
        parser.skip_ws();
        if parser.pos != parser.bytes.len() {
            return Err(CoreError::Parse {
                pos: parser.pos,
                msg: "trailing input".into(),
            });
        }
        Ok(CoeffExpr { alg, node })
    }

    pub fn constant(alg: Arc<GradedLieAlgebra>, c: C64) -> Self {
        CoeffExpr { alg, node: c_const(c) }
    }

    pub fn coordinate(alg: Arc<GradedLieAlgebra>, i: usize) -> Result<Self> {
        if i >= alg.dim() {
            return Err(CoreError::IndexOutOfRange { index: i, dim: alg.dim() });
        }
        Ok(CoeffExpr { alg, node: Arc::new(Expr::Coord(i)) })
    }

    pub fn algebra(&self) -> &Arc<GradedLieAlgebra> {
        &self.alg
    }

    /// Constant value if the tree folded down to one; `None` otherwise.
    pub fn as_constant(&self) -> Option<C64> {
        match &*self.node {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn eval(&self, coords: &[f64]) -> Result<C64> {
        eval_node(&self.node, coords)
    }

    /// Exact partial derivative with respect to coordinate `k`.
    pub fn diff_coord(&self, k: usize) -> Self {
        CoeffExpr {
            alg: self.alg.clone(),
            node: diff_node(&self.node, k),
        }
    }

    /// Complex conjugate; all grammar functions are real-analytic with real
    /// coefficients, so conjugating the constants suffices.
    pub fn conj(&self) -> Self {
        CoeffExpr {
            alg: self.alg.clone(),
            node: conj_node(&self.node),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        CoeffExpr {
            alg: self.alg.clone(),
            node: c_add(self.node.clone(), other.node.clone()),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        CoeffExpr {
            alg: self.alg.clone(),
            node: c_mul(self.node.clone(), other.node.clone()),
        }
    }

    pub fn scale(&self, k: C64) -> Self {
        CoeffExpr {
            alg: self.alg.clone(),
            node: c_mul(c_const(k), self.node.clone()),
        }
    }

    pub fn neg(&self) -> Self {
        CoeffExpr {
            alg: self.alg.clone(),
            node: c_neg(self.node.clone()),
        }
    }

    /// Build an expression from a real polynomial in the coordinates.
    pub fn from_poly(alg: Arc<GradedLieAlgebra>, p: &Poly) -> Self {
        let mut acc = c_const(ZERO);
        for (exps, &c) in p.terms() {
            let mut term = c_const(C64::new(c, 0.0));
            for (i, &e) in exps.iter().enumerate() {
                for _ in 0..e {
                    term = c_mul(term, Arc::new(Expr::Coord(i)));
                }
            }
            acc = c_add(acc, term);
        }
        CoeffExpr { alg, node: acc }
    }

    /// Interval enclosure of the range over all of the group (coordinates
    /// unbounded). Conservative; exact for monotone chains like `2 + sin(x)`.
    pub fn global_range(&self) -> ComplexRange {
        range_node(&self.node)
    }

    /// True when the interval enclosure of the value is finite, which
    /// certifies boundedness over the whole group.
    pub fn is_provably_bounded(&self) -> bool {
        self.global_range().is_finite()
    }
}

impl fmt::Display for CoeffExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_node(f, &self.node, self.alg.coord_names())
    }
}

fn eval_node(node: &Expr, coords: &[f64]) -> Result<C64> {
    Ok(match node {
        Expr::Const(c) => *c,
        Expr::Coord(i) => C64::new(coords[*i], 0.0),
        Expr::Add(a, b) => eval_node(a, coords)? + eval_node(b, coords)?,
        Expr::Sub(a, b) => eval_node(a, coords)? - eval_node(b, coords)?,
        Expr::Mul(a, b) => eval_node(a, coords)? * eval_node(b, coords)?,
        Expr::Div(a, b) => {
            let den = eval_node(b, coords)?;
            if den.norm() < 1e-300 {
                return Err(CoreError::DivisionByZero);
            }
            eval_node(a, coords)? / den
        }
        Expr::Neg(a) => -eval_node(a, coords)?,
        Expr::Sin(a) => eval_node(a, coords)?.sin(),
        Expr::Cos(a) => eval_node(a, coords)?.cos(),
        Expr::Exp(a) => eval_node(a, coords)?.exp(),
        Expr::Tanh(a) => eval_node(a, coords)?.tanh(),
    })
}

fn diff_node(node: &Expr, k: usize) -> Arc<Expr> {
    match node {
        Expr::Const(_) => c_const(ZERO),
        Expr::Coord(i) => c_const(if *i == k { ONE } else { ZERO }),
        Expr::Add(a, b) => c_add(diff_node(a, k), diff_node(b, k)),
        Expr::Sub(a, b) => c_sub(diff_node(a, k), diff_node(b, k)),
        Expr::Mul(a, b) => c_add(
            c_mul(diff_node(a, k), b.clone()),
            c_mul(a.clone(), diff_node(b, k)),
        ),
        Expr::Div(a, b) => c_div(
            c_sub(
                c_mul(diff_node(a, k), b.clone()),
                c_mul(a.clone(), diff_node(b, k)),
            ),
            c_mul(b.clone(), b.clone()),
        ),
        Expr::Neg(a) => c_neg(diff_node(a, k)),
        Expr::Sin(a) => c_mul(Arc::new(Expr::Cos(a.clone())), diff_node(a, k)),
        Expr::Cos(a) => c_neg(c_mul(Arc::new(Expr::Sin(a.clone())), diff_node(a, k))),
        Expr::Exp(a) => c_mul(Arc::new(Expr::Exp(a.clone())), diff_node(a, k)),
        Expr::Tanh(a) => {
            let t = Arc::new(Expr::Tanh(a.clone()));
            c_mul(
                c_sub(c_const(ONE), c_mul(t.clone(), t)),
                diff_node(a, k),
            )
        }
    }
}

fn conj_node(node: &Expr) -> Arc<Expr> {
    match node {
        Expr::Const(c) => c_const(c.conj()),
        Expr::Coord(i) => Arc::new(Expr::Coord(*i)),
        Expr::Add(a, b) => c_add(conj_node(a), conj_node(b)),
        Expr::Sub(a, b) => c_sub(conj_node(a), conj_node(b)),
        Expr::Mul(a, b) => c_mul(conj_node(a), conj_node(b)),
        Expr::Div(a, b) => c_div(conj_node(a), conj_node(b)),
        Expr::Neg(a) => c_neg(conj_node(a)),
        Expr::Sin(a) => Arc::new(Expr::Sin(conj_node(a))),
        Expr::Cos(a) => Arc::new(Expr::Cos(conj_node(a))),
        Expr::Exp(a) => Arc::new(Expr::Exp(conj_node(a))),
        Expr::Tanh(a) => Arc::new(Expr::Tanh(conj_node(a))),
    }
}

fn write_node(f: &mut fmt::Formatter<'_>, node: &Expr, names: &[String]) -> fmt::Result {
    match node {
        Expr::Const(c) => {
            if c.im == 0.0 {
                write!(f, "{}", c.re)
            } else {
                write!(f, "({}+{}*i)", c.re, c.im)
            }
        }
        Expr::Coord(i) => write!(f, "{}", names[*i]),
        Expr::Add(a, b) => {
            write!(f, "(")?;
            write_node(f, a, names)?;
            write!(f, " + ")?;
            write_node(f, b, names)?;
            write!(f, ")")
        }
        Expr::Sub(a, b) => {
            write!(f, "(")?;
            write_node(f, a, names)?;
            write!(f, " - ")?;
            write_node(f, b, names)?;
            write!(f, ")")
        }
        Expr::Mul(a, b) => {
            write!(f, "(")?;
            write_node(f, a, names)?;
            write!(f, "*")?;
            write_node(f, b, names)?;
            write!(f, ")")
        }
        Expr::Div(a, b) => {
            write!(f, "(")?;
            write_node(f, a, names)?;
            write!(f, "/")?;
            write_node(f, b, names)?;
            write!(f, ")")
        }
        Expr::Neg(a) => {
            write!(f, "-")?;
            write_node(f, a, names)
        }
        Expr::Sin(a) => {
            write!(f, "sin(")?;
            write_node(f, a, names)?;
            write!(f, ")")
        }
        Expr::Cos(a) => {
            write!(f, "cos(")?;
            write_node(f, a, names)?;
            write!(f, ")")
        }
        Expr::Exp(a) => {
            write!(f, "exp(")?;
            write_node(f, a, names)?;
            write!(f, ")")
        }
        Expr::Tanh(a) => {
            write!(f, "tanh(")?;
            write_node(f, a, names)?;
            write!(f, ")")
        }
    }
}

// ---------------------------------------------------------------------------
// Interval arithmetic for the global-range enclosure.

/// A closed real interval, possibly unbounded.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn point(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }

    pub fn full() -> Self {
        Interval {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    fn is_point(&self, x: f64) -> bool {
        self.lo == x && self.hi == x
    }

    fn add(self, o: Interval) -> Interval {
        Interval {
            lo: self.lo + o.lo,
            hi: self.hi + o.hi,
        }
    }

    fn sub(self, o: Interval) -> Interval {
        Interval {
            lo: self.lo - o.hi,
            hi: self.hi - o.lo,
        }
    }

    fn neg(self) -> Interval {
        Interval {
            lo: -self.hi,
            hi: -self.lo,
        }
    }

    fn mul(self, o: Interval) -> Interval {
        // inf * 0 is treated as 0 so that constant-zero factors annihilate.
        fn m(a: f64, b: f64) -> f64 {
            if a == 0.0 || b == 0.0 {
                0.0
            } else {
                a * b
            }
        }
        let cands = [
            m(self.lo, o.lo),
            m(self.lo, o.hi),
            m(self.hi, o.lo),
            m(self.hi, o.hi),
        ];
        Interval {
            lo: cands.iter().cloned().fold(f64::INFINITY, f64::min),
            hi: cands.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        }
    }

    fn div(self, o: Interval) -> Interval {
        if o.lo <= 0.0 && o.hi >= 0.0 {
            return Interval::full();
        }
        self.mul(Interval {
            lo: 1.0 / o.hi,
            hi: 1.0 / o.lo,
        })
    }
}

/// Componentwise enclosure of a complex-valued range.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComplexRange {
    pub re: Interval,
    pub im: Interval,
}

impl ComplexRange {
    fn point(c: C64) -> Self {
        ComplexRange {
            re: Interval::point(c.re),
            im: Interval::point(c.im),
        }
    }

    fn real(iv: Interval) -> Self {
        ComplexRange {
            re: iv,
            im: Interval::point(0.0),
        }
    }

    fn full() -> Self {
        ComplexRange {
            re: Interval::full(),
            im: Interval::full(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }

    fn is_real(&self) -> bool {
        self.im.is_point(0.0)
    }
}

fn range_node(node: &Expr) -> ComplexRange {
    match node {
        Expr::Const(c) => ComplexRange::point(*c),
        Expr::Coord(_) => ComplexRange::real(Interval::full()),
        Expr::Add(a, b) => {
            let (x, y) = (range_node(a), range_node(b));
            ComplexRange {
                re: x.re.add(y.re),
                im: x.im.add(y.im),
            }
        }
        Expr::Sub(a, b) => {
            let (x, y) = (range_node(a), range_node(b));
            ComplexRange {
                re: x.re.sub(y.re),
                im: x.im.sub(y.im),
            }
        }
        Expr::Neg(a) => {
            let x = range_node(a);
            ComplexRange {
                re: x.re.neg(),
                im: x.im.neg(),
            }
        }
        Expr::Mul(a, b) => {
            let (x, y) = (range_node(a), range_node(b));
            ComplexRange {
                re: x.re.mul(y.re).sub(x.im.mul(y.im)),
                im: x.re.mul(y.im).add(x.im.mul(y.re)),
            }
        }
        Expr::Div(a, b) => {
            let (x, y) = (range_node(a), range_node(b));
            if x.is_real() && y.is_real() {
                ComplexRange::real(x.re.div(y.re))
            } else {
                ComplexRange::full()
            }
        }
        Expr::Sin(a) | Expr::Cos(a) => {
            let x = range_node(a);
            if x.is_real() {
                ComplexRange::real(Interval { lo: -1.0, hi: 1.0 })
            } else {
                ComplexRange::full()
            }
        }
        Expr::Tanh(a) => {
            let x = range_node(a);
            if x.is_real() {
                ComplexRange::real(Interval {
                    lo: x.re.lo.tanh(),
                    hi: x.re.hi.tanh(),
                })
            } else {
                ComplexRange::full()
            }
        }
        Expr::Exp(a) => {
            let x = range_node(a);
            if x.is_real() {
                ComplexRange::real(Interval {
                    lo: x.re.lo.exp(),
                    hi: x.re.hi.exp(),
                })
            } else {
                ComplexRange::full()
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Recursive descent parser.

struct Parser<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    names: &'a [String],
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Arc<Expr>> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    acc = c_add(acc, self.term()?);
                }
                Some(b'-') => {
                    self.pos += 1;
                    acc = c_sub(acc, self.term()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Arc<Expr>> {
        let mut acc = self.factor()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    acc = c_mul(acc, self.factor()?);
                }
                Some(b'/') => {
                    self.pos += 1;
                    acc = c_div(acc, self.factor()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn factor(&mut self) -> Result<Arc<Expr>> {
        match self.peek() {
            None => Err(CoreError::Parse {
                pos: self.pos,
                msg: "unexpected end of input".into(),
            }),
            Some(b'-') => {
                self.pos += 1;
                Ok(c_neg(self.factor()?))
            }
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect(b')')?;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.ident(),
            Some(c) => Err(CoreError::Parse {
                pos: self.pos,
                msg: format!("unexpected character {:?}", c as char),
            }),
        }
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(CoreError::Parse {
                pos: self.pos,
                msg: format!("expected {:?}", c as char),
            })
        }
    }

    fn number(&mut self) -> Result<Arc<Expr>> {
        let start = self.pos;
        let mut seen_exp = false;
        while self.pos < self.bytes.len() {
            let c = self.bytes[self.pos];
            let ok = c.is_ascii_digit()
                || c == b'.'
                || (matches!(c, b'e' | b'E') && !seen_exp)
                || (matches!(c, b'+' | b'-')
                    && self.pos > start
                    && matches!(self.bytes[self.pos - 1], b'e' | b'E'));
            if matches!(c, b'e' | b'E') {
                seen_exp = true;
            }
            if !ok {
                break;
            }
            self.pos += 1;
        }
        let text = &self.src[start..self.pos];
        let value: f64 = text.parse().map_err(|_| CoreError::Parse {
            pos: start,
            msg: format!("malformed number {text:?}"),
        })?;
        Ok(c_const(C64::new(value, 0.0)))
    }

    fn ident(&mut self) -> Result<Arc<Expr>> {
        let start = self.pos;
        while self.pos < self.bytes.len()
            && (self.bytes[self.pos].is_ascii_alphanumeric() || self.bytes[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = &self.src[start..self.pos];
        match name {
            "sin" | "cos" | "exp" | "tanh" => {
                self.expect(b'(')?;
                let inner = self.expr()?;
                self.expect(b')')?;
                Ok(match name {
                    "sin" => Arc::new(Expr::Sin(inner)),
                    "cos" => Arc::new(Expr::Cos(inner)),
                    "exp" => Arc::new(Expr::Exp(inner)),
                    _ => Arc::new(Expr::Tanh(inner)),
                })
            }
            _ => {
                if let Some(idx) = self.names.iter().position(|n| n == name) {
                    Ok(Arc::new(Expr::Coord(idx)))
                } else if name == "i" {
                    Ok(c_const(C64::new(0.0, 1.0)))
                } else {
                    Err(CoreError::UnknownIdentifier {
                        name: name.into(),
                        pos: start,
                    })
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn heis() -> Arc<GradedLieAlgebra> {
        GradedLieAlgebra::builtin("heisenberg1").unwrap()
    }

    #[test]
    fn parse_and_eval() {
        let alg = heis();
        let two = CoeffExpr::parse(alg.clone(), "2").unwrap();
        assert_eq!(two.as_constant(), Some(C64::new(2.0, 0.0)));
        let e = CoeffExpr::parse(alg.clone(), "sin(x)*y").unwrap();
        assert_eq!(e.eval(&[0.0, 3.0, 0.0]).unwrap(), C64::new(0.0, 0.0));
        assert_abs_diff_eq!(
            e.eval(&[1.0, 3.0, 0.0]).unwrap().re,
            3.0 * 1.0_f64.sin(),
            epsilon = 1e-15
        );
        let img = CoeffExpr::parse(alg.clone(), "2*i").unwrap();
        assert_eq!(img.eval(&[0.0; 3]).unwrap(), C64::new(0.0, 2.0));
        let nested = CoeffExpr::parse(alg, "2 + sin(x) * (1 - cos(t)) / 3").unwrap();
        let v = nested.eval(&[0.5, 0.0, 0.7]).unwrap().re;
        assert_abs_diff_eq!(
            v,
            2.0 + 0.5_f64.sin() * (1.0 - 0.7_f64.cos()) / 3.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn parse_errors_carry_positions() {
        let alg = heis();
        match CoeffExpr::parse(alg.clone(), "2 + sin(") {
            Err(CoreError::Parse { pos, .. }) => assert_eq!(pos, 8),
            other => panic!("expected parse error, got {other:?}"),
        }
        match CoeffExpr::parse(alg.clone(), "2 + foo") {
            Err(CoreError::UnknownIdentifier { name, pos }) => {
                assert_eq!(name, "foo");
                assert_eq!(pos, 4);
            }
            other => panic!("expected unknown identifier, got {other:?}"),
        }
        assert!(CoeffExpr::parse(alg, "2 2").is_err());
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let alg = heis();
        let exprs = [
            "sin(x)*y + t*t",
            "exp(tanh(x) - y/2)",
            "cos(x*y) * (2 + sin(t))",
            "(x + 2*y) / (2 + cos(t))",
        ];
        let point = [0.4, -0.7, 0.9];
        let h = 1e-5;
        for src in exprs {
            let e = CoeffExpr::parse(alg.clone(), src).unwrap();
            for k in 0..3 {
                let d = e.diff_coord(k);
                let mut plus = point;
                plus[k] += h;
                let mut minus = point;
                minus[k] -= h;
                let fd = (e.eval(&plus).unwrap() - e.eval(&minus).unwrap()) / (2.0 * h);
                let sym = d.eval(&point).unwrap();
                assert_abs_diff_eq!(fd.re, sym.re, epsilon = 1e-8);
                assert_abs_diff_eq!(fd.im, sym.im, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn conjugation() {
        let alg = heis();
        let e = CoeffExpr::parse(alg.clone(), "(2 + 3*i) * sin(x) + i*t").unwrap();
        let point = [0.3, 0.0, -0.8];
        let v = e.eval(&point).unwrap();
        let vc = e.conj().eval(&point).unwrap();
        assert_eq!(v.conj(), vc);
    }

    #[test]
    fn global_ranges() {
        let alg = heis();
        let bounded = CoeffExpr::parse(alg.clone(), "2+sin(x)").unwrap();
        let r = bounded.global_range();
        assert_eq!(r.re, Interval { lo: 1.0, hi: 3.0 });
        assert!(bounded.is_provably_bounded());
        let unbounded = CoeffExpr::parse(alg.clone(), "x").unwrap();
        assert!(!unbounded.is_provably_bounded());
        let tanh = CoeffExpr::parse(alg.clone(), "tanh(x*y)").unwrap();
        assert!(tanh.is_provably_bounded());
        let product = CoeffExpr::parse(alg, "x*sin(y)").unwrap();
        assert!(!product.is_provably_bounded());
    }

    #[test]
    fn division_guard() {
        let alg = heis();
        let e = CoeffExpr::parse(alg, "1/(x - 1)").unwrap();
        assert!(matches!(e.eval(&[1.0, 0.0, 0.0]), Err(CoreError::DivisionByZero)));
        assert!(e.eval(&[2.0, 0.0, 0.0]).is_ok());
    }
}
