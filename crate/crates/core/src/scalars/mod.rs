//! The coefficient ring `Q[t, tbar] (x) u^Q (x) l^N` with `u = 1 - s` and
//! `l = log(1 - s)`.
//!
//! Elements are finite sums of monomials `c * t^a * tbar^b * u^q * l^j` with
//! `q` rational and `j` a natural number. Polynomial degree in the time
//! variables is capped; products beyond the cap are dropped, which makes the
//! truncation an ideal quotient and keeps every operation exact.

mod doubled;

pub use doubled::DoubledScalar;

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Exact rational coefficient.
pub type Rat = BigRational;

/// Exponent of `u`.
pub type QExp = Rational64;

pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// `p/q` text form used in artifacts.
pub fn rat_to_string(r: &Rat) -> String {
    if r.denom().is_one() {
        format!("{}", r.numer())
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn parse_rat(s: &str) -> Option<Rat> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().ok()?;
            let d: BigInt = d.trim().parse().ok()?;
            if d.is_zero() {
                None
            } else {
                Some(Rat::new(n, d))
            }
        }
        None => s.parse::<BigInt>().ok().map(Rat::from_integer),
    }
}

pub fn qexp_to_string(q: &QExp) -> String {
    if *q.denom() == 1 {
        format!("{}", q.numer())
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn parse_qexp(s: &str) -> Option<QExp> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n: i64 = n.trim().parse().ok()?;
            let d: i64 = d.trim().parse().ok()?;
            if d == 0 {
                None
            } else {
                Some(QExp::new(n, d))
            }
        }
        None => s.parse::<i64>().ok().map(QExp::from_integer),
    }
}

pub fn qexp_to_rat(q: &QExp) -> Rat {
    rat(*q.numer(), *q.denom())
}

pub fn rat_to_qexp(r: &Rat) -> Option<QExp> {
    Some(QExp::new(r.numer().to_i64()?, r.denom().to_i64()?))
}

pub fn factorial(n: u32) -> Rat {
    let mut acc = BigInt::one();
    for k in 2..=n {
        acc *= k;
    }
    Rat::from_integer(acc)
}

/// Generalized binomial coefficient `binom(x, k)` for rational `x`.
pub fn binom(x: &Rat, k: u32) -> Rat {
    let mut acc = Rat::one();
    for i in 0..k {
        acc = acc * (x - rat_int(i as i64)) / rat_int(i as i64 + 1);
    }
    acc
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScalarError {
    #[error("mixed truncation caps: {0:?} vs {1:?}")]
    CapMismatch(Caps, Caps),
    #[error("exponential argument is not of the form q*l + nilpotent: {0}")]
    NotExponentiable(String),
    #[error("u-exponent out of range")]
    ExponentOverflow,
}

/// Number of time variables and polynomial degree caps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Caps {
    pub n_t: u8,
    pub n_tbar: u8,
    pub t_deg: u8,
    pub tbar_deg: u8,
}

impl Caps {
    pub fn new(n_t: u8, n_tbar: u8, t_deg: u8, tbar_deg: u8) -> Self {
        Caps { n_t, n_tbar, t_deg, tbar_deg }
    }

    /// Ring without time variables.
    pub fn bare() -> Self {
        Caps::new(0, 0, 0, 0)
    }
}

/// `t^t * tbar^tbar * u^u * l^l`.
///
/// Exponent vectors never carry trailing zeros, so derived equality and the
/// derived lexicographic order are canonical.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial {
    pub t: Vec<u8>,
    pub tbar: Vec<u8>,
    pub u: QExp,
    pub l: u32,
}

fn trim(v: &mut Vec<u8>) {
    while v.last() == Some(&0) {
        v.pop();
    }
}

fn add_exps(a: &[u8], b: &[u8]) -> Vec<u8> {
    let mut out = vec![0u8; a.len().max(b.len())];
    for (i, e) in a.iter().enumerate() {
        out[i] += e;
    }
    for (i, e) in b.iter().enumerate() {
        out[i] += e;
    }
    out
}

impl Monomial {
    pub fn one() -> Self {
        Monomial { t: vec![], tbar: vec![], u: QExp::zero(), l: 0 }
    }

    pub fn ul(u: QExp, l: u32) -> Self {
        Monomial { t: vec![], tbar: vec![], u, l }
    }

    /// `t_i`, 1-based.
    pub fn t_var(i: usize) -> Self {
        let mut t = vec![0; i];
        t[i - 1] = 1;
        Monomial { t, ..Monomial::one() }
    }

    pub fn tbar_var(i: usize) -> Self {
        let mut tbar = vec![0; i];
        tbar[i - 1] = 1;
        Monomial { tbar, ..Monomial::one() }
    }

    pub fn t_degree(&self) -> u32 {
        self.t.iter().map(|&e| e as u32).sum()
    }

    pub fn tbar_degree(&self) -> u32 {
        self.tbar.iter().map(|&e| e as u32).sum()
    }

    /// Positive degree in the time variables, hence nilpotent under caps.
    pub fn is_nilpotent(&self) -> bool {
        self.t_degree() + self.tbar_degree() > 0
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        Monomial {
            t: add_exps(&self.t, &other.t),
            tbar: add_exps(&self.tbar, &other.tbar),
            u: self.u + other.u,
            l: self.l + other.l,
        }
    }

    /// Time part only.
    pub fn time_part(&self) -> Monomial {
        Monomial { t: self.t.clone(), tbar: self.tbar.clone(), u: QExp::zero(), l: 0 }
    }

    fn fits(&self, caps: &Caps) -> bool {
        self.t_degree() <= caps.t_deg as u32
            && self.tbar_degree() <= caps.tbar_deg as u32
            && self.t.len() <= caps.n_t as usize
            && self.tbar.len() <= caps.n_tbar as usize
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = Vec::new();
        for (i, &e) in self.t.iter().enumerate() {
            match e {
                0 => {}
                1 => parts.push(format!("t{}", i + 1)),
                _ => parts.push(format!("t{}^{}", i + 1, e)),
            }
        }
        for (i, &e) in self.tbar.iter().enumerate() {
            match e {
                0 => {}
                1 => parts.push(format!("tb{}", i + 1)),
                _ => parts.push(format!("tb{}^{}", i + 1, e)),
            }
        }
        if !self.u.is_zero() {
            if self.u.is_one() {
                parts.push("u".into());
            } else if *self.u.denom() == 1 {
                parts.push(format!("u^{}", self.u.numer()));
            } else {
                parts.push(format!("u^({})", qexp_to_string(&self.u)));
            }
        }
        match self.l {
            0 => {}
            1 => parts.push("l".into()),
            j => parts.push(format!("l^{j}")),
        }
        if parts.is_empty() {
            write!(f, "1")
        } else {
            write!(f, "{}", parts.join("*"))
        }
    }
}

/// Element of the coefficient ring.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScalarPoly {
    caps: Caps,
    terms: BTreeMap<Monomial, Rat>,
}

impl ScalarPoly {
    pub fn zero(caps: Caps) -> Self {
        ScalarPoly { caps, terms: BTreeMap::new() }
    }

    pub fn constant(caps: Caps, c: Rat) -> Self {
        Self::monomial(caps, Monomial::one(), c)
    }

    pub fn one(caps: Caps) -> Self {
        Self::constant(caps, Rat::one())
    }

    /// `c * m`, dropped if beyond the caps.
    pub fn monomial(caps: Caps, m: Monomial, c: Rat) -> Self {
        let mut p = Self::zero(caps);
        p.add_term(m, c);
        p
    }

    /// `u = 1 - s`.
    pub fn u(caps: Caps) -> Self {
        Self::monomial(caps, Monomial::ul(QExp::one(), 0), Rat::one())
    }

    /// `l = log(1 - s)`.
    pub fn l(caps: Caps) -> Self {
        Self::monomial(caps, Monomial::ul(QExp::zero(), 1), Rat::one())
    }

    /// `s = 1 - u`.
    pub fn s(caps: Caps) -> Self {
        Self::one(caps).sub(&Self::u(caps))
    }

    pub fn t(caps: Caps, i: usize) -> Self {
        Self::monomial(caps, Monomial::t_var(i), Rat::one())
    }

    pub fn tbar(caps: Caps, i: usize) -> Self {
        Self::monomial(caps, Monomial::tbar_var(i), Rat::one())
    }

    pub fn caps(&self) -> Caps {
        self.caps
    }

    pub fn terms(&self) -> &BTreeMap<Monomial, Rat> {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, m: &Monomial) -> Rat {
        self.terms.get(m).cloned().unwrap_or_else(Rat::zero)
    }

    /// Rational value if the element is a constant.
    pub fn as_constant(&self) -> Option<Rat> {
        match self.terms.len() {
            0 => Some(Rat::zero()),
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                (*m == Monomial::one()).then(|| c.clone())
            }
            _ => None,
        }
    }

    /// Adds `c * m` in place, respecting caps and dropping zeros.
    pub fn add_term(&mut self, mut m: Monomial, c: Rat) {
        if c.is_zero() {
            return;
        }
        trim(&mut m.t);
        trim(&mut m.tbar);
        if !m.fits(&self.caps) {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    fn check(&self, other: &ScalarPoly) -> Result<(), ScalarError> {
        if self.caps != other.caps {
            Err(ScalarError::CapMismatch(self.caps, other.caps))
        } else {
            Ok(())
        }
    }

    pub fn checked_add(&self, other: &ScalarPoly) -> Result<ScalarPoly, ScalarError> {
        self.check(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn checked_mul(&self, other: &ScalarPoly) -> Result<ScalarPoly, ScalarError> {
        self.check(other)?;
        let mut out = ScalarPoly::zero(self.caps);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        Ok(out)
    }

    /// Panics on mixed caps; use [`ScalarPoly::checked_add`] to recover.
    pub fn add(&self, other: &ScalarPoly) -> ScalarPoly {
        self.checked_add(other).expect("scalar addition")
    }

    pub fn sub(&self, other: &ScalarPoly) -> ScalarPoly {
        self.add(&other.neg())
    }

    /// Panics on mixed caps; use [`ScalarPoly::checked_mul`] to recover.
    pub fn mul(&self, other: &ScalarPoly) -> ScalarPoly {
        self.checked_mul(other).expect("scalar multiplication")
    }

    pub fn add_assign(&mut self, other: &ScalarPoly) {
        assert_eq!(self.caps, other.caps, "mixed truncation caps");
        for (m, c) in &other.terms {
            self.add_term(m.clone(), c.clone());
        }
    }

    pub fn neg(&self) -> ScalarPoly {
        self.scale(&-Rat::one())
    }

    pub fn scale(&self, c: &Rat) -> ScalarPoly {
        let mut out = ScalarPoly::zero(self.caps);
        if c.is_zero() {
            return out;
        }
        for (m, v) in &self.terms {
            out.terms.insert(m.clone(), v * c);
        }
        out
    }

    /// Multiplies by the monomial `c * m`.
    pub fn mul_monomial(&self, m: &Monomial, c: &Rat) -> ScalarPoly {
        let mut out = ScalarPoly::zero(self.caps);
        for (mm, v) in &self.terms {
            out.add_term(mm.mul(m), v * c);
        }
        out
    }

    pub fn pow(&self, n: u32) -> ScalarPoly {
        let mut acc = ScalarPoly::one(self.caps);
        for _ in 0..n {
            acc = acc.mul(self);
        }
        acc
    }

    /// Same element in a ring with different caps (terms beyond the caps drop).
    pub fn with_caps(&self, caps: Caps) -> ScalarPoly {
        let mut out = ScalarPoly::zero(caps);
        for (m, c) in &self.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    /// Keeps only monomials of total time degree at most `t_deg` (resp. `tbar_deg`).
    pub fn truncate_degree(&self, t_deg: i64, tbar_deg: i64) -> ScalarPoly {
        let mut out = ScalarPoly::zero(self.caps);
        for (m, c) in &self.terms {
            if (m.t_degree() as i64) <= t_deg && (m.tbar_degree() as i64) <= tbar_deg {
                out.terms.insert(m.clone(), c.clone());
            }
        }
        out
    }

    pub fn max_t_degree(&self) -> u32 {
        self.terms.keys().map(|m| m.t_degree()).max().unwrap_or(0)
    }

    /// `d/ds` with `du/ds = -1`, `dl/ds = -1/u`.
    pub fn d_s(&self) -> ScalarPoly {
        let mut out = ScalarPoly::zero(self.caps);
        for (m, c) in &self.terms {
            let mut base = m.clone();
            base.u -= QExp::one();
            if !m.u.is_zero() {
                out.add_term(base.clone(), -c * qexp_to_rat(&m.u));
            }
            if m.l > 0 {
                let mut b = base;
                b.l -= 1;
                out.add_term(b, -c * rat_int(m.l as i64));
            }
        }
        out
    }

    pub fn d_s_n(&self, n: u32) -> ScalarPoly {
        let mut out = self.clone();
        for _ in 0..n {
            out = out.d_s();
        }
        out
    }

    /// `d/dt_i`, 1-based.
    pub fn d_t(&self, i: usize) -> ScalarPoly {
        self.d_time(i, false)
    }

    pub fn d_tbar(&self, i: usize) -> ScalarPoly {
        self.d_time(i, true)
    }

    fn d_time(&self, i: usize, bar: bool) -> ScalarPoly {
        let mut out = ScalarPoly::zero(self.caps);
        for (m, c) in &self.terms {
            let v = if bar { &m.tbar } else { &m.t };
            let e = v.get(i - 1).copied().unwrap_or(0);
            if e == 0 {
                continue;
            }
            let mut mm = m.clone();
            if bar {
                mm.tbar[i - 1] -= 1;
            } else {
                mm.t[i - 1] -= 1;
            }
            out.add_term(mm, c * rat_int(e as i64));
        }
        out
    }

    /// Antiderivative in `t_i` (or `tbar_i`) with zero constant.
    pub fn antideriv_time(&self, i: usize, bar: bool) -> ScalarPoly {
        let mut out = ScalarPoly::zero(self.caps);
        for (m, c) in &self.terms {
            let mut mm = m.clone();
            let v = if bar { &mut mm.tbar } else { &mut mm.t };
            if v.len() < i {
                v.resize(i, 0);
            }
            v[i - 1] += 1;
            let e = v[i - 1];
            out.add_term(mm, c / rat_int(e as i64));
        }
        out
    }

    /// Canonical antiderivative in `s`.
    ///
    /// Uses `int u^k l^j ds = -int u^k l^j du` and integration by parts in `u`;
    /// the result never contains a pure time-only monomial, which fixes the
    /// constant.
    pub fn antideriv_s(&self) -> ScalarPoly {
        let mut out = ScalarPoly::zero(self.caps);
        for (m, c) in &self.terms {
            let k = m.u;
            if k == -QExp::one() {
                let mut mm = m.clone();
                mm.u = QExp::zero();
                mm.l += 1;
                out.add_term(mm, -c / rat_int(m.l as i64 + 1));
                continue;
            }
            // int u^k l^j du = sum_i (-1)^i j!/(j-i)! u^(k+1) l^(j-i) / (k+1)^(i+1)
            let kp1 = qexp_to_rat(&(k + QExp::one()));
            let mut coef = -c / &kp1;
            for i in 0..=m.l {
                let mut mm = m.clone();
                mm.u = k + QExp::one();
                mm.l = m.l - i;
                out.add_term(mm, coef.clone());
                coef = -coef * rat_int((m.l - i) as i64) / &kp1;
            }
        }
        out
    }

    /// `exp(q*l + n)` for nilpotent `n`, equal to `u^q * sum_k n^k / k!`.
    pub fn exp_scalar(&self) -> Result<ScalarPoly, ScalarError> {
        let l_mono = Monomial::ul(QExp::zero(), 1);
        let q = self.coeff(&l_mono);
        let mut rest = self.clone();
        rest.terms.remove(&l_mono);
        if let Some((m, _)) = rest.terms.iter().find(|(m, _)| !m.is_nilpotent()) {
            return Err(ScalarError::NotExponentiable(format!("non-nilpotent term {m}")));
        }
        let q = rat_to_qexp(&q).ok_or(ScalarError::ExponentOverflow)?;
        let max_k = self.caps.t_deg as u32 + self.caps.tbar_deg as u32;
        let mut series = ScalarPoly::one(self.caps);
        let mut power = ScalarPoly::one(self.caps);
        for k in 1..=max_k {
            power = power.mul(&rest).scale(&rat(1, k as i64));
            if power.is_zero() {
                break;
            }
            series.add_assign(&power);
        }
        Ok(series.mul_monomial(&Monomial::ul(q, 0), &Rat::one()))
    }
}

impl fmt::Display for ScalarPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in &self.terms {
            let neg = c.is_negative();
            let a = c.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { "-" } else { "+" })?;
            }
            first = false;
            if *m == Monomial::one() {
                write!(f, "{}", rat_to_string(&a))?;
            } else if a.is_one() {
                write!(f, "{m}")?;
            } else {
                write!(f, "{}*{m}", rat_to_string(&a))?;
            }
        }
        Ok(())
    }
}

/// Serialized monomial term.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermDto {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub t: Vec<u8>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tbar: Vec<u8>,
    pub u: String,
    pub l: u32,
    pub c: String,
}

impl ScalarPoly {
    pub fn to_dto(&self) -> Vec<TermDto> {
        self.terms
            .iter()
            .map(|(m, c)| TermDto {
                t: m.t.clone(),
                tbar: m.tbar.clone(),
                u: qexp_to_string(&m.u),
                l: m.l,
                c: rat_to_string(c),
            })
            .collect()
    }

    pub fn from_dto(caps: Caps, terms: &[TermDto]) -> Option<ScalarPoly> {
        let mut p = ScalarPoly::zero(caps);
        for t in terms {
            let m = Monomial { t: t.t.clone(), tbar: t.tbar.clone(), u: parse_qexp(&t.u)?, l: t.l };
            p.add_term(m, parse_rat(&t.c)?);
        }
        Some(p)
    }
}
