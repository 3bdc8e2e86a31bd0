//! Expressions for Riemann-Hilbert data and seeds.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor ('*' factor)*
//! factor := '-' factor | atom ('^' ['-'] int)?
//! atom   := rational | 's' | 'hbar' | 'E' | 't[' int ']' | 'tbar[' int ']'
//!         | 'log(' expr ')' | '(' expr ')'
//! ```
//!
//! `E` is the shift `e^{ℏ d/ds}`, compiled to `xi`. Products are `∘`-products
//! taken in source order, so `E*s` is `(s + ℏ) xi` while `s*E` is `s xi`.
//! `log` accepts only an argument equal to `1 - s`.

use std::fmt;

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::scalars::{parse_rat, rat_to_string, Monomial, QExp, Rat, ScalarPoly};
use crate::symbols::{circ_product, HSymbol, SymbolError, Truncation};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    Num(Rat),
    S,
    Hbar,
    E,
    T(usize),
    Tbar(usize),
    Log(Box<Expr>),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i64),
}

impl Expr {
    fn is_atom(&self) -> bool {
        matches!(self, Expr::Num(_) | Expr::S | Expr::Hbar | Expr::E | Expr::T(_) | Expr::Tbar(_) | Expr::Log(_))
    }

    pub fn contains_hbar(&self) -> bool {
        match self {
            Expr::Hbar => true,
            Expr::Log(a) | Expr::Neg(a) | Expr::Pow(a, _) => a.contains_hbar(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => a.contains_hbar() || b.contains_hbar(),
            _ => false,
        }
    }
}

/// Fully parenthesized; parsing the output of a parsed tree gives it back.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(r) if r.is_negative() => write!(f, "(-{})", rat_to_string(&-r)),
            Expr::Num(r) => write!(f, "{}", rat_to_string(r)),
            Expr::S => write!(f, "s"),
            Expr::Hbar => write!(f, "hbar"),
            Expr::E => write!(f, "E"),
            Expr::T(n) => write!(f, "t[{n}]"),
            Expr::Tbar(n) => write!(f, "tbar[{n}]"),
            Expr::Log(a) => write!(f, "log({a})"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Pow(a, e) if a.is_atom() && !matches!(**a, Expr::Num(_)) => write!(f, "{a}^{e}"),
            Expr::Pow(a, e) => write!(f, "({a})^{e}"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExprError {
    #[error("column {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("E^{0} lies outside the window")]
    OutsideWindow(i64),
    #[error("{0}")]
    Unsupported(String),
    #[error(transparent)]
    Symbol(#[from] SymbolError),
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ExprError> {
        Err(ExprError::Syntax { pos: self.pos + 1, msg: msg.into() })
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

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), ExprError> {
        if self.eat(c) {
            Ok(())
        } else {
            self.err(format!("expected '{}'", c as char))
        }
    }

    fn digits(&mut self) -> Result<&str, ExprError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return self.err("expected an integer");
        }
        Ok(std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits"))
    }

    fn index(&mut self) -> Result<usize, ExprError> {
        self.expect(b'[')?;
        let n: usize = match self.digits()?.parse() {
            Ok(n) if n >= 1 => n,
            _ => return self.err("time index must be a positive integer"),
        };
        self.expect(b']')?;
        Ok(n)
    }

    fn word(&mut self) -> &str {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphabetic() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.src[start..self.pos]).expect("ascii letters")
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat(b'-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.factor()?;
        while self.eat(b'*') {
            lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Expr, ExprError> {
        if self.eat(b'-') {
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        let base = self.atom()?;
        if self.eat(b'^') {
            let neg = self.eat(b'-');
            let e: i64 = match self.digits()?.parse() {
                Ok(e) => e,
                Err(_) => return self.err("exponent too large"),
            };
            return Ok(Expr::Pow(Box::new(base), if neg { -e } else { e }));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        match self.peek() {
            None => self.err("unexpected end of input"),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() => {
                let num = self.digits()?.to_string();
                let den = if self.eat(b'/') { self.digits()?.to_string() } else { "1".into() };
                match parse_rat(&format!("{num}/{den}")) {
                    Some(r) => Ok(Expr::Num(r)),
                    None => self.err("zero denominator"),
                }
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                match self.word() {
                    "s" => Ok(Expr::S),
                    "hbar" => Ok(Expr::Hbar),
                    "E" => Ok(Expr::E),
                    "t" => Ok(Expr::T(self.index()?)),
                    "tbar" => Ok(Expr::Tbar(self.index()?)),
                    "log" => {
                        self.expect(b'(')?;
                        let e = self.expr()?;
                        self.expect(b')')?;
                        Ok(Expr::Log(Box::new(e)))
                    }
                    w => {
                        let w = w.to_string();
                        self.pos = start;
                        self.err(format!("unknown name '{w}'"))
                    }
                }
            }
            Some(c) => self.err(format!("unexpected '{}'", c as char)),
        }
    }
}

pub fn parse_expr(source: &str) -> Result<Expr, ExprError> {
    let mut p = Parser { src: source.as_bytes(), pos: 0 };
    let e = p.expr()?;
    if p.peek().is_some() {
        return p.err("trailing input");
    }
    Ok(e)
}

/// `c u^q` when `a` is exactly such a scalar.
fn as_u_monomial(a: &HSymbol) -> Option<(Rat, QExp)> {
    let c = a.coeff(0, 0);
    if *a != HSymbol::scalar(a.trunc(), c.clone()) || c.len() != 1 {
        return None;
    }
    let (m, r) = c.terms().iter().next()?;
    (m.t.is_empty() && m.tbar.is_empty() && m.l == 0).then(|| (r.clone(), m.u))
}

pub fn compile_expr(e: &Expr, trunc: Truncation) -> Result<HSymbol, ExprError> {
    let caps = trunc.caps;
    Ok(match e {
        Expr::Num(r) => HSymbol::constant(trunc, r.clone()),
        Expr::S => HSymbol::s(trunc),
        Expr::Hbar => HSymbol::hbar(trunc),
        Expr::E => xi_pow(trunc, 1)?,
        Expr::T(n) | Expr::Tbar(n) => {
            let bar = matches!(e, Expr::Tbar(_));
            let cap = if bar { caps.n_tbar } else { caps.n_t } as usize;
            if *n > cap {
                return Err(ExprError::Unsupported(format!("{e} is beyond the {cap} time variables of the window")));
            }
            HSymbol::scalar(trunc, if bar { ScalarPoly::tbar(caps, *n) } else { ScalarPoly::t(caps, *n) })
        }
        Expr::Log(a) => {
            if compile_expr(a, trunc)? != HSymbol::scalar(trunc, ScalarPoly::u(caps)) {
                return Err(ExprError::Unsupported(format!("log of {a}; only log(1 - s) is available")));
            }
            HSymbol::scalar(trunc, ScalarPoly::l(caps))
        }
        Expr::Neg(a) => compile_expr(a, trunc)?.neg(),
        Expr::Add(a, b) => compile_expr(a, trunc)?.add(&compile_expr(b, trunc)?)?,
        Expr::Sub(a, b) => compile_expr(a, trunc)?.sub(&compile_expr(b, trunc)?)?,
        Expr::Mul(a, b) => circ_product(&compile_expr(a, trunc)?, &compile_expr(b, trunc)?)?,
        Expr::Pow(a, k) if **a == Expr::E => xi_pow(trunc, *k)?,
        Expr::Pow(a, k) => {
            let base = compile_expr(a, trunc)?;
            if *k >= 0 {
                let mut out = HSymbol::one(trunc);
                for _ in 0..*k {
                    out = circ_product(&out, &base)?;
                }
                out
            } else {
                let (c, q) = as_u_monomial(&base)
                    .filter(|(c, _)| !c.is_zero())
                    .ok_or_else(|| ExprError::Unsupported(format!("negative power of {a}")))?;
                let k = -*k;
                let mono = Monomial::ul(-q * QExp::from(k), 0);
                let coef = Rat::one() / num_traits::pow(c, k as usize);
                HSymbol::scalar(trunc, ScalarPoly::monomial(caps, mono, coef))
            }
        }
    })
}

fn xi_pow(trunc: Truncation, m: i64) -> Result<HSymbol, ExprError> {
    if m < trunc.xi_lo || m > trunc.xi_hi {
        return Err(ExprError::OutsideWindow(m));
    }
    Ok(HSymbol::xi_pow(trunc, m))
}

/// Scalar value of an expression free of `E` and `hbar`.
pub fn compile_scalar(e: &Expr, trunc: Truncation) -> Result<ScalarPoly, ExprError> {
    let a = compile_expr(e, trunc.with_n_hbar(0))?;
    let slice = a.order(0);
    if slice.keys().any(|m| *m != 0) || !a.logxi(0).is_zero() {
        return Err(ExprError::Unsupported(format!("{e} is not a scalar")));
    }
    Ok(a.coeff(0, 0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalars::{rat, Caps};
    use proptest::prelude::*;

    fn tr() -> Truncation {
        Truncation::new(2, -3, 3, Caps::new(3, 3, 1, 1))
    }

    #[test]
    fn parses_shifted_xi() {
        let e = parse_expr("(1 - s - hbar)*E").unwrap();
        let want = Expr::Mul(
            Box::new(Expr::Sub(
                Box::new(Expr::Sub(Box::new(Expr::Num(Rat::one())), Box::new(Expr::S))),
                Box::new(Expr::Hbar),
            )),
            Box::new(Expr::E),
        );
        assert_eq!(e, want);
        let t = tr();
        let got = compile_expr(&e, t).unwrap();
        let caps = t.caps;
        let want =
            HSymbol::term(t, 0, 1, ScalarPoly::u(caps)).sub(&HSymbol::term(t, 1, 1, ScalarPoly::one(caps))).unwrap();
        assert_eq!(got, want);
    }

    #[test]
    fn order_matters() {
        let t = tr();
        let es = compile_expr(&parse_expr("E*s").unwrap(), t).unwrap();
        let se = compile_expr(&parse_expr("s*E").unwrap(), t).unwrap();
        let diff = es.sub(&se).unwrap();
        assert_eq!(diff, HSymbol::term(t, 1, 1, ScalarPoly::one(t.caps)));
    }

    #[test]
    fn negative_powers() {
        let t = tr();
        let e = parse_expr("E^-1 * (1 - s)").unwrap();
        assert!(matches!(&e, Expr::Mul(a, _) if **a == Expr::Pow(Box::new(Expr::E), -1)));
        compile_expr(&e, t).unwrap();
        let inv = compile_scalar(&parse_expr("(1 - s)^-2 * 3").unwrap(), t).unwrap();
        assert_eq!(inv, ScalarPoly::monomial(t.caps, Monomial::ul((-2).into(), 0), rat(3, 1)));
        assert!(compile_expr(&parse_expr("s^-1").unwrap(), t).is_err());
        assert_eq!(compile_expr(&parse_expr("E^4").unwrap(), t), Err(ExprError::OutsideWindow(4)));
    }

    #[test]
    fn log_and_seed() {
        let t = tr();
        let phi = compile_scalar(&parse_expr("-(1 - s)*log(1 - s) + 1 - s").unwrap(), t).unwrap();
        let (u, l) = (ScalarPoly::u(t.caps), ScalarPoly::l(t.caps));
        assert_eq!(phi, u.mul(&l).neg().add(&u));
        assert!(compile_expr(&parse_expr("log(s)").unwrap(), t).is_err());
        assert!(compile_scalar(&parse_expr("E").unwrap(), t).is_err());
    }

    #[test]
    fn syntax_errors_carry_columns() {
        assert_eq!(parse_expr("s + * 2"), Err(ExprError::Syntax { pos: 5, msg: "unexpected '*'".into() }));
        assert!(matches!(parse_expr("t[0]"), Err(ExprError::Syntax { .. })));
        assert!(matches!(parse_expr("foo"), Err(ExprError::Syntax { pos: 1, .. })));
        assert!(matches!(parse_expr("(s"), Err(ExprError::Syntax { .. })));
        assert!(matches!(parse_expr("s s"), Err(ExprError::Syntax { .. })));
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (0i64..20, 1i64..5).prop_map(|(n, d)| Expr::Num(rat(n, d))),
            Just(Expr::S),
            Just(Expr::Hbar),
            Just(Expr::E),
            (1usize..4).prop_map(Expr::T),
            (1usize..4).prop_map(Expr::Tbar),
        ];
        leaf.prop_recursive(4, 24, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|a| Expr::Neg(Box::new(a))),
                inner.clone().prop_map(|a| Expr::Log(Box::new(a))),
                (inner.clone(), -3i64..4).prop_map(|(a, e)| Expr::Pow(Box::new(a), e)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Add(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Sub(Box::new(a), Box::new(b))),
                (inner.clone(), inner).prop_map(|(a, b)| Expr::Mul(Box::new(a), Box::new(b))),
            ]
        })
    }

    proptest! {
        #[test]
        fn print_parse_round_trip(e in arb_expr()) {
            let text = e.to_string();
            prop_assert_eq!(parse_expr(&text).unwrap(), e);
        }
    }
}
