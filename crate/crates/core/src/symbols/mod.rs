//! ℏ-graded Laurent symbols in `xi` with coefficients in the scalar ring.
//!
//! The total symbol of `sum_m a_m(s) e^{m ℏ ∂_s}` is `sum_m a_m(s) xi^m`; an
//! additional constant multiple of `log xi` per ℏ-order represents `ℏ ∂_s`.
//!
//! Every symbol carries the range of `xi`-exponents on which its coefficients
//! are fully determined. Operations propagate that range, so a coefficient
//! that depends on a discarded tail is never reported.

mod bivar;
mod ops;

pub use bivar::BivarSymbol;
pub use ops::{circ_product, hbar_commutator, invert, poisson, power};

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalars::{parse_rat, rat_int, rat_to_string, Caps, Rat, ScalarError, ScalarPoly, TermDto};

pub(crate) const INF: i64 = i64::MAX / 4;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SymbolError {
    #[error("incompatible charts: {0:?} and {1:?}")]
    ChartMismatch(Chart, Chart),
    #[error("truncation mismatch")]
    TruncationMismatch,
    #[error("log xi term cannot be represented: {0}")]
    UnrepresentableLog(String),
    #[error("not invertible: {0}")]
    NotInvertible(String),
    #[error("series did not terminate: {0}")]
    NoTermination(String),
    #[error(transparent)]
    Scalar(#[from] ScalarError),
}

/// Orders, window and ring caps shared by all symbols in one computation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Truncation {
    pub n_hbar: u32,
    pub xi_lo: i64,
    pub xi_hi: i64,
    pub caps: Caps,
}

impl Truncation {
    pub fn new(n_hbar: u32, xi_lo: i64, xi_hi: i64, caps: Caps) -> Self {
        Truncation { n_hbar, xi_lo, xi_hi, caps }
    }

    pub fn with_n_hbar(self, n_hbar: u32) -> Self {
        Truncation { n_hbar, ..self }
    }

    pub fn with_window(self, xi_lo: i64, xi_hi: i64) -> Self {
        Truncation { xi_lo, xi_hi, ..self }
    }
}

/// Where a series is expanded.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Chart {
    /// Finitely many positive powers, tail towards `xi -> 0` undetermined.
    AtInfinity,
    /// Finitely many negative powers, tail towards `xi -> infinity` undetermined.
    AtZero,
    /// Laurent polynomial.
    Exact,
    /// Both tails undetermined.
    Band,
}

/// Expansion point requested for inverses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Expansion {
    AtInfinity,
    AtZero,
}

/// Exponents below `lo` and above `hi` are undetermined; `None` means the
/// corresponding tail is known to vanish outside the stored coefficients.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Determined {
    pub lo: Option<i64>,
    pub hi: Option<i64>,
}

impl Determined {
    pub const EXACT: Determined = Determined { lo: None, hi: None };

    pub fn contains(&self, m: i64) -> bool {
        self.lo.is_none_or(|l| m >= l) && self.hi.is_none_or(|h| m <= h)
    }

    pub fn intersect(&self, other: &Determined) -> Determined {
        Determined {
            lo: match (self.lo, other.lo) {
                (Some(a), Some(b)) => Some(a.max(b)),
                (a, b) => a.or(b),
            },
            hi: match (self.hi, other.hi) {
                (Some(a), Some(b)) => Some(a.min(b)),
                (a, b) => a.or(b),
            },
        }
    }

    pub fn shift(&self, k: i64) -> Determined {
        Determined { lo: self.lo.map(|l| sat(l, k)), hi: self.hi.map(|h| sat(h, k)) }
    }

    pub fn is_empty(&self) -> bool {
        matches!((self.lo, self.hi), (Some(l), Some(h)) if l > h) || self.lo == Some(INF) || self.hi == Some(-INF)
    }
}

pub(crate) fn sat(a: i64, b: i64) -> i64 {
    a.saturating_add(b).clamp(-INF, INF)
}

/// One ℏ-order: `xi`-exponent to coefficient.
pub type Slice = BTreeMap<i64, ScalarPoly>;

/// `sum_n ℏ^n (sum_m a_{n,m} xi^m + alpha_n log xi)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HSymbol {
    trunc: Truncation,
    orders: Vec<Slice>,
    logxi: Vec<Rat>,
    det: Determined,
}

/// Which part `project` keeps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Part {
    GeqZero,
    LeqMinusOne,
}

/// Outcome of comparing two symbols on their common determined range.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Comparison {
    /// Number of `(order, exponent)` slots compared.
    pub checked: usize,
    /// Slots whose coefficients differ, with the difference.
    pub mismatches: Vec<(u32, i64, String)>,
}

impl Comparison {
    pub fn ok(&self) -> bool {
        self.mismatches.is_empty()
    }

    pub fn merge(&mut self, other: Comparison) {
        self.checked += other.checked;
        self.mismatches.extend(other.mismatches);
    }
}

impl HSymbol {
    pub fn zero(trunc: Truncation) -> Self {
        HSymbol {
            trunc,
            orders: vec![Slice::new(); trunc.n_hbar as usize + 1],
            logxi: vec![Rat::zero(); trunc.n_hbar as usize + 1],
            det: Determined::EXACT,
        }
    }

    /// `c(s) xi^m` at ℏ-order `n`.
    pub fn term(trunc: Truncation, n: u32, m: i64, c: ScalarPoly) -> Self {
        let mut a = Self::zero(trunc);
        a.add_coeff(n, m, &c);
        a.normalize();
        a
    }

    pub fn scalar(trunc: Truncation, c: ScalarPoly) -> Self {
        Self::term(trunc, 0, 0, c)
    }

    pub fn constant(trunc: Truncation, c: Rat) -> Self {
        Self::scalar(trunc, ScalarPoly::constant(trunc.caps, c))
    }

    pub fn one(trunc: Truncation) -> Self {
        Self::constant(trunc, Rat::one())
    }

    pub fn xi_pow(trunc: Truncation, m: i64) -> Self {
        Self::term(trunc, 0, m, ScalarPoly::one(trunc.caps))
    }

    pub fn hbar(trunc: Truncation) -> Self {
        Self::term(trunc, 1, 0, ScalarPoly::one(trunc.caps))
    }

    /// `s = 1 - u`.
    pub fn s(trunc: Truncation) -> Self {
        Self::scalar(trunc, ScalarPoly::s(trunc.caps))
    }

    /// `alpha log xi` at ℏ-order `n`.
    pub fn log_xi(trunc: Truncation, n: u32, alpha: Rat) -> Self {
        let mut a = Self::zero(trunc);
        if n <= trunc.n_hbar {
            a.logxi[n as usize] = alpha;
        }
        a
    }

    /// Builds from raw slices; undetermined tails are given by `det`.
    pub fn from_parts(trunc: Truncation, orders: Vec<Slice>, logxi: Vec<Rat>, det: Determined) -> Self {
        let mut a = Self::zero(trunc);
        for (n, sl) in orders.into_iter().enumerate().take(trunc.n_hbar as usize + 1) {
            a.orders[n] = sl;
        }
        for (n, l) in logxi.into_iter().enumerate().take(trunc.n_hbar as usize + 1) {
            a.logxi[n] = l;
        }
        a.det = det;
        a.normalize();
        a
    }

    /// Places a slice at ℏ-order `n`.
    pub fn from_slice(trunc: Truncation, n: u32, slice: &Slice, logxi: Rat, det: Determined) -> Self {
        let mut a = Self::zero(trunc);
        if n <= trunc.n_hbar {
            a.orders[n as usize] = slice.clone();
            a.logxi[n as usize] = logxi;
        }
        a.det = det;
        a.normalize();
        a
    }

    pub fn trunc(&self) -> Truncation {
        self.trunc
    }

    pub fn caps(&self) -> Caps {
        self.trunc.caps
    }

    pub fn determined(&self) -> Determined {
        self.det
    }

    pub fn chart(&self) -> Chart {
        match (self.det.lo, self.det.hi) {
            (None, None) => Chart::Exact,
            (Some(_), None) => Chart::AtInfinity,
            (None, Some(_)) => Chart::AtZero,
            (Some(_), Some(_)) => Chart::Band,
        }
    }

    pub fn order(&self, n: u32) -> &Slice {
        &self.orders[n as usize]
    }

    pub fn orders(&self) -> &[Slice] {
        &self.orders
    }

    pub fn logxi(&self, n: u32) -> &Rat {
        &self.logxi[n as usize]
    }

    pub fn coeff(&self, n: u32, m: i64) -> ScalarPoly {
        self.orders.get(n as usize).and_then(|s| s.get(&m)).cloned().unwrap_or_else(|| ScalarPoly::zero(self.caps()))
    }

    /// Whether the coefficient of `xi^m` is fully determined.
    pub fn is_determined(&self, m: i64) -> bool {
        self.det.contains(m)
            && (m >= self.trunc.xi_lo || self.det.lo.is_none())
            && (m <= self.trunc.xi_hi || self.det.hi.is_none())
    }

    pub fn is_zero(&self) -> bool {
        self.orders.iter().all(|s| s.is_empty()) && self.logxi.iter().all(|l| l.is_zero())
    }

    pub(crate) fn add_coeff(&mut self, n: u32, m: i64, c: &ScalarPoly) {
        if c.is_zero() || n > self.trunc.n_hbar {
            return;
        }
        let sl = &mut self.orders[n as usize];
        match sl.get_mut(&m) {
            Some(v) => {
                v.add_assign(c);
                if v.is_zero() {
                    sl.remove(&m);
                }
            }
            None => {
                sl.insert(m, c.clone());
            }
        }
    }

    /// Drops undetermined and out-of-window coefficients, recording the loss.
    pub(crate) fn normalize(&mut self) {
        let (lo, hi) = (self.trunc.xi_lo, self.trunc.xi_hi);
        let mut below = false;
        let mut above = false;
        let det = self.det;
        for sl in self.orders.iter_mut() {
            sl.retain(|m, c| {
                if c.is_zero() || !det.contains(*m) {
                    return false;
                }
                if *m < lo {
                    below = true;
                    return false;
                }
                if *m > hi {
                    above = true;
                    return false;
                }
                true
            });
        }
        if below {
            self.det.lo = Some(self.det.lo.map_or(lo, |l| l.max(lo)));
        }
        if above {
            self.det.hi = Some(self.det.hi.map_or(hi, |h| h.min(hi)));
        }
        if !self.det.contains(0) {
            for l in self.logxi.iter_mut() {
                *l = Rat::zero();
            }
        }
    }

    fn same(&self, other: &HSymbol) -> Result<(), SymbolError> {
        if self.trunc != other.trunc {
            Err(SymbolError::TruncationMismatch)
        } else {
            Ok(())
        }
    }

    /// Same symbol under another truncation.
    pub fn with_trunc(&self, trunc: Truncation) -> HSymbol {
        let mut a = HSymbol::zero(trunc);
        for (n, sl) in self.orders.iter().enumerate() {
            if n as u32 > trunc.n_hbar {
                break;
            }
            a.orders[n] = sl.iter().map(|(m, c)| (*m, c.with_caps(trunc.caps))).collect();
            a.logxi[n] = self.logxi[n].clone();
        }
        a.det = self.det;
        a.normalize();
        a
    }

    pub fn with_n_hbar(&self, n_hbar: u32) -> HSymbol {
        self.with_trunc(self.trunc.with_n_hbar(n_hbar))
    }

    /// Restricts the determined range explicitly.
    pub fn restrict(&self, det: Determined) -> HSymbol {
        let mut a = self.clone();
        a.det = a.det.intersect(&det);
        a.normalize();
        a
    }

    pub fn add(&self, other: &HSymbol) -> Result<HSymbol, SymbolError> {
        self.same(other)?;
        let mut out = self.clone();
        for (n, sl) in other.orders.iter().enumerate() {
            for (m, c) in sl {
                out.add_coeff(n as u32, *m, c);
            }
            out.logxi[n] += &other.logxi[n];
        }
        out.det = self.det.intersect(&other.det);
        out.normalize();
        Ok(out)
    }

    pub fn sub(&self, other: &HSymbol) -> Result<HSymbol, SymbolError> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> HSymbol {
        self.scale(&-Rat::one())
    }

    pub fn scale(&self, c: &Rat) -> HSymbol {
        self.map_coeffs(|_, _, p| p.scale(c), |l| l * c)
    }

    fn map_coeffs(&self, f: impl Fn(u32, i64, &ScalarPoly) -> ScalarPoly, g: impl Fn(&Rat) -> Rat) -> HSymbol {
        let mut out = HSymbol::zero(self.trunc);
        for (n, sl) in self.orders.iter().enumerate() {
            for (m, c) in sl {
                out.add_coeff(n as u32, *m, &f(n as u32, *m, c));
            }
            out.logxi[n] = g(&self.logxi[n]);
        }
        out.det = self.det;
        out.normalize();
        out
    }

    /// `d/ds` of every coefficient.
    pub fn d_s(&self) -> HSymbol {
        self.map_coeffs(|_, _, p| p.d_s(), |_| Rat::zero())
    }

    pub fn d_t(&self, i: usize) -> HSymbol {
        self.map_coeffs(|_, _, p| p.d_t(i), |_| Rat::zero())
    }

    pub fn d_tbar(&self, i: usize) -> HSymbol {
        self.map_coeffs(|_, _, p| p.d_tbar(i), |_| Rat::zero())
    }

    /// Keeps coefficient monomials of time degree at most the given bounds.
    pub fn truncate_degree(&self, t_deg: i64, tbar_deg: i64) -> HSymbol {
        self.map_coeffs(|_, _, p| p.truncate_degree(t_deg, tbar_deg), |l| l.clone())
    }

    /// `xi d/dxi`; `log xi` contributes a constant.
    pub fn xi_theta(&self) -> HSymbol {
        let mut out = self.map_coeffs(|_, m, p| p.scale(&rat_int(m)), |_| Rat::zero());
        for (n, l) in self.logxi.iter().enumerate() {
            out.add_coeff(n as u32, 0, &ScalarPoly::constant(self.caps(), l.clone()));
        }
        out
    }

    /// Plain `d/dxi`.
    pub fn xi_derivative(&self) -> HSymbol {
        let mut out = HSymbol::zero(self.trunc);
        for (n, sl) in self.orders.iter().enumerate() {
            for (m, c) in sl {
                if *m != 0 {
                    out.add_coeff(n as u32, m - 1, &c.scale(&rat_int(*m)));
                }
            }
            if !self.logxi[n].is_zero() {
                out.add_coeff(n as u32, -1, &ScalarPoly::constant(self.caps(), self.logxi[n].clone()));
            }
        }
        out.det = self.det.shift(-1);
        out.normalize();
        out
    }

    /// Antiderivative in `xi` with zero constant; `xi^-1` becomes `log xi`.
    pub fn xi_antiderivative(&self) -> Result<HSymbol, SymbolError> {
        let mut out = HSymbol::zero(self.trunc);
        for (n, sl) in self.orders.iter().enumerate() {
            for (m, c) in sl {
                if *m == -1 {
                    let alpha = c
                        .as_constant()
                        .ok_or_else(|| SymbolError::UnrepresentableLog(format!("non-constant residue {c}")))?;
                    out.logxi[n] = alpha;
                } else {
                    out.add_coeff(n as u32, m + 1, &c.scale(&Rat::new(1.into(), (m + 1).into())));
                }
            }
            if !self.logxi[n].is_zero() {
                return Err(SymbolError::UnrepresentableLog("xi-integral of log xi".into()));
            }
        }
        out.det = self.det.shift(1);
        out.normalize();
        Ok(out)
    }

    /// Pointwise multiplication by `xi^k`.
    pub fn mul_xi_pow(&self, k: i64) -> HSymbol {
        let mut out = HSymbol::zero(self.trunc);
        for (n, sl) in self.orders.iter().enumerate() {
            for (m, c) in sl {
                out.add_coeff(n as u32, m + k, c);
            }
        }
        assert!(k == 0 || self.logxi.iter().all(|l| l.is_zero()), "xi^k log xi");
        out.logxi = self.logxi.clone();
        out.det = self.det.shift(k);
        out.normalize();
        out
    }

    /// Pointwise multiplication by a function of `s`.
    pub fn mul_scalar(&self, c: &ScalarPoly) -> HSymbol {
        self.map_coeffs(
            |_, _, p| p.mul(c),
            |l| {
                assert!(l.is_zero() || c.as_constant().is_some(), "log xi times function");
                l * c.as_constant().unwrap_or_else(Rat::zero)
            },
        )
    }

    /// Slice at ℏ-order `level`, as an order-0 symbol.
    pub fn sym_h(&self, level: u32) -> HSymbol {
        let t0 = self.trunc.with_n_hbar(0);
        if level > self.trunc.n_hbar {
            let mut z = HSymbol::zero(t0);
            z.det = self.det;
            return z;
        }
        HSymbol::from_slice(t0, 0, &self.orders[level as usize], self.logxi[level as usize].clone(), self.det)
    }

    /// Principal symbol.
    pub fn principal(&self) -> HSymbol {
        self.sym_h(0)
    }

    /// Moves order-0 content to ℏ-order `n` of a symbol with truncation `trunc`.
    pub fn raise_to(&self, trunc: Truncation, n: u32) -> HSymbol {
        let sub = self.with_trunc(trunc.with_n_hbar(0));
        HSymbol::from_slice(trunc, n, &sub.orders[0], sub.logxi[0].clone(), self.det)
    }

    /// Multiplication by `ℏ^k` (orders past the truncation drop).
    pub fn hbar_shift(&self, k: u32) -> HSymbol {
        let mut out = HSymbol::zero(self.trunc);
        for n in 0..self.orders.len() {
            let target = n as u32 + k;
            if target > self.trunc.n_hbar {
                break;
            }
            out.orders[target as usize] = self.orders[n].clone();
            out.logxi[target as usize] = self.logxi[n].clone();
        }
        out.det = self.det;
        out
    }

    /// `max{-n : slice n nonzero}`; `None` for zero.
    pub fn hbar_order(&self) -> Option<i64> {
        (0..self.orders.len()).find(|&n| !self.orders[n].is_empty() || !self.logxi[n].is_zero()).map(|n| -(n as i64))
    }

    pub fn project(&self, part: Part) -> HSymbol {
        let mut out = self.clone();
        match part {
            Part::GeqZero => {
                for sl in out.orders.iter_mut() {
                    sl.retain(|m, _| *m >= 0);
                }
                out.det.lo = match self.det.lo {
                    Some(l) if l > 0 => Some(l),
                    _ => None,
                };
            }
            Part::LeqMinusOne => {
                for sl in out.orders.iter_mut() {
                    sl.retain(|m, _| *m <= -1);
                }
                for l in out.logxi.iter_mut() {
                    *l = Rat::zero();
                }
                out.det.hi = match self.det.hi {
                    Some(h) if h < -1 => Some(h),
                    _ => None,
                };
            }
        }
        out
    }

    /// Exponents with a nonzero coefficient in some order (log counts as 0).
    pub(crate) fn support(&self) -> Option<(i64, i64)> {
        let mut lo = INF;
        let mut hi = -INF;
        for sl in &self.orders {
            if let (Some((a, _)), Some((b, _))) = (sl.first_key_value(), sl.last_key_value()) {
                lo = lo.min(*a);
                hi = hi.max(*b);
            }
        }
        if self.logxi.iter().any(|l| !l.is_zero()) {
            lo = lo.min(0);
            hi = hi.max(0);
        }
        (lo <= hi).then_some((lo, hi))
    }

    /// Compares on the common determined range and returns every mismatch.
    pub fn compare(&self, other: &HSymbol) -> Result<Comparison, SymbolError> {
        self.same(other)?;
        let det = self.det.intersect(&other.det);
        let mut cmp = Comparison::default();
        let (lo, hi) = (self.trunc.xi_lo, self.trunc.xi_hi);
        for n in 0..=self.trunc.n_hbar {
            for m in lo..=hi {
                if !det.contains(m) {
                    continue;
                }
                cmp.checked += 1;
                let d = self.coeff(n, m).sub(&other.coeff(n, m));
                if !d.is_zero() {
                    cmp.mismatches.push((n, m, d.to_string()));
                }
            }
            if det.contains(0) && self.logxi[n as usize] != other.logxi[n as usize] {
                let d = &self.logxi[n as usize] - &other.logxi[n as usize];
                cmp.mismatches.push((n, 0, format!("{} log xi", rat_to_string(&d))));
            }
        }
        Ok(cmp)
    }

    /// Number of determined slots inside the window.
    pub fn determined_count(&self) -> usize {
        let (lo, hi) = (self.trunc.xi_lo, self.trunc.xi_hi);
        (lo..=hi).filter(|m| self.det.contains(*m)).count() * (self.trunc.n_hbar as usize + 1)
    }
}

impl fmt::Display for HSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        for (n, sl) in self.orders.iter().enumerate() {
            let h = match n {
                0 => String::new(),
                1 => "hbar*".into(),
                _ => format!("hbar^{n}*"),
            };
            if !self.logxi[n].is_zero() {
                parts.push(format!("{h}({})*log(xi)", rat_to_string(&self.logxi[n])));
            }
            for (m, c) in sl {
                let x = match m {
                    0 => String::new(),
                    1 => "*xi".into(),
                    _ => format!("*xi^{m}"),
                };
                parts.push(format!("{h}({c}){x}"));
            }
        }
        if parts.is_empty() {
            write!(f, "0")?;
        } else {
            write!(f, "{}", parts.join(" + "))?;
        }
        match (self.det.lo, self.det.hi) {
            (None, None) => Ok(()),
            (Some(l), None) => write!(f, " + O(xi^{})", l - 1),
            (None, Some(h)) => write!(f, " + O(xi^{})", h + 1),
            (Some(l), Some(h)) => write!(f, " + O(xi^{}, xi^{})", l - 1, h + 1),
        }
    }
}

/// Serialized symbol.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolDto {
    pub trunc: Truncation,
    pub chart: Chart,
    pub determined: Determined,
    pub orders: Vec<OrderDto>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderDto {
    pub hbar: u32,
    pub logxi: String,
    pub coeffs: Vec<CoeffDto>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoeffDto {
    pub xi: i64,
    pub terms: Vec<TermDto>,
}

impl HSymbol {
    pub fn to_dto(&self) -> SymbolDto {
        SymbolDto {
            trunc: self.trunc,
            chart: self.chart(),
            determined: self.det,
            orders: self
                .orders
                .iter()
                .enumerate()
                .map(|(n, sl)| OrderDto {
                    hbar: n as u32,
                    logxi: rat_to_string(&self.logxi[n]),
                    coeffs: sl.iter().map(|(m, c)| CoeffDto { xi: *m, terms: c.to_dto() }).collect(),
                })
                .collect(),
        }
    }

    pub fn from_dto(dto: &SymbolDto) -> Option<HSymbol> {
        let trunc = dto.trunc;
        let mut a = HSymbol::zero(trunc);
        for o in &dto.orders {
            if o.hbar > trunc.n_hbar {
                return None;
            }
            a.logxi[o.hbar as usize] = parse_rat(&o.logxi)?;
            for c in &o.coeffs {
                a.add_coeff(o.hbar, c.xi, &ScalarPoly::from_dto(trunc.caps, &c.terms)?);
            }
        }
        a.det = dto.determined;
        a.normalize();
        Some(a)
    }
}

#[cfg(test)]
mod tests;
