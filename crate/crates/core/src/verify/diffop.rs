//! Difference operators `sum a_{h,m}(s) ℏ^h e^{m ℏ ∂_s}` with their own
//! composition, used as an oracle for the symbol calculus.
//!
//! Composition substitutes `s -> s + mℏ` into the right factor by expanding
//! `(u - mℏ)^q` binomially and `log(u - mℏ) = log u + log(1 - mℏ/u)`; it does
//! not use `s`-derivatives.

use std::collections::BTreeMap;

use num_traits::{One, Zero};

use crate::adjoint::Side;
use crate::scalars::{binom, qexp_to_rat, rat, rat_int, Caps, Monomial, QExp, Rat, ScalarPoly};
use crate::symbols::{Determined, HSymbol, Slice, Truncation};

/// Nonnegative powers of ℏ up to `h_max`, shift exponents in `[lo, hi]`.
///
/// Terms outside the window are discarded, so callers choose windows in which
/// discarded terms cannot feed back (one-sided supports or wide enough).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiffOp {
    caps: Caps,
    h_max: u32,
    lo: i64,
    hi: i64,
    terms: BTreeMap<(i64, u32), ScalarPoly>,
}

fn series_mul(a: &[ScalarPoly], b: &[ScalarPoly], len: usize, caps: Caps) -> Vec<ScalarPoly> {
    let mut out = vec![ScalarPoly::zero(caps); len];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            if i + j < len && !y.is_zero() {
                out[i + j].add_assign(&x.mul(y));
            }
        }
    }
    out
}

/// `b(s + mℏ)` as coefficients of `ℏ^0..ℏ^order`.
pub fn shift_scalar(b: &ScalarPoly, m: i64, order: u32) -> Vec<ScalarPoly> {
    let caps = b.caps();
    let len = order as usize + 1;
    let mut out = vec![ScalarPoly::zero(caps); len];
    let u_pow = |q: QExp| ScalarPoly::monomial(caps, Monomial::ul(q, 0), Rat::one());
    // log(u - mℏ) = l - sum_{i>=1} (m^i / i) u^-i ℏ^i
    let mut log_series = vec![ScalarPoly::l(caps)];
    for i in 1..len {
        let c = -(rat_int(m).pow(i as i32)) / rat_int(i as i64);
        log_series.push(u_pow(QExp::from_integer(-(i as i64))).scale(&c));
    }
    for (mono, c) in b.terms() {
        // (u - mℏ)^q = sum_i C(q, i) (-m)^i u^{q-i} ℏ^i
        let q = mono.u;
        let qr = qexp_to_rat(&q);
        let mut series: Vec<ScalarPoly> = (0..len)
            .map(|i| u_pow(q - QExp::from_integer(i as i64)).scale(&(binom(&qr, i as u32) * rat_int(-m).pow(i as i32))))
            .collect();
        for _ in 0..mono.l {
            series = series_mul(&series, &log_series, len, caps);
        }
        let time = Monomial { t: mono.t.clone(), tbar: mono.tbar.clone(), u: QExp::from_integer(0), l: 0 };
        for (i, s) in series.iter().enumerate() {
            out[i].add_assign(&s.mul_monomial(&time, c));
        }
    }
    out
}

impl DiffOp {
    pub fn zero(caps: Caps, h_max: u32, lo: i64, hi: i64) -> Self {
        DiffOp { caps, h_max, lo, hi, terms: BTreeMap::new() }
    }

    pub fn identity(caps: Caps, h_max: u32, lo: i64, hi: i64) -> Self {
        Self::zero(caps, h_max, lo, hi).with_term(0, 0, ScalarPoly::one(caps))
    }

    /// `c ℏ^h e^{m ℏ ∂_s}` added to `self`.
    pub fn with_term(mut self, m: i64, h: u32, c: ScalarPoly) -> Self {
        self.add_term(m, h, &c);
        self
    }

    fn add_term(&mut self, m: i64, h: u32, c: &ScalarPoly) {
        if h > self.h_max || m < self.lo || m > self.hi || c.is_zero() {
            return;
        }
        let e = self.terms.entry((m, h)).or_insert_with(|| ScalarPoly::zero(self.caps));
        e.add_assign(c);
        if e.is_zero() {
            self.terms.remove(&(m, h));
        }
    }

    pub fn terms(&self) -> &BTreeMap<(i64, u32), ScalarPoly> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &DiffOp) -> DiffOp {
        let mut out = self.clone();
        for ((m, h), c) in &other.terms {
            out.add_term(*m, *h, c);
        }
        out
    }

    pub fn sub(&self, other: &DiffOp) -> DiffOp {
        self.add(&other.scale(&-Rat::one()))
    }

    pub fn scale(&self, c: &Rat) -> DiffOp {
        let mut out = Self::zero(self.caps, self.h_max, self.lo, self.hi);
        for ((m, h), v) in &self.terms {
            out.add_term(*m, *h, &v.scale(c));
        }
        out
    }

    /// Operator composition `self · other`.
    pub fn op_mul(&self, other: &DiffOp) -> DiffOp {
        let mut out = Self::zero(self.caps, self.h_max, self.lo, self.hi);
        for ((m1, h1), a) in &self.terms {
            for ((m2, h2), b) in &other.terms {
                let m = m1 + m2;
                let h0 = h1 + h2;
                if m < self.lo || m > self.hi || h0 > self.h_max {
                    continue;
                }
                for (i, bs) in shift_scalar(b, *m1, self.h_max - h0).iter().enumerate() {
                    if !bs.is_zero() {
                        out.add_term(m, h0 + i as u32, &a.mul(bs));
                    }
                }
            }
        }
        out
    }

    pub fn commutator(&self, other: &DiffOp) -> DiffOp {
        self.op_mul(other).sub(&other.op_mul(self))
    }

    /// Operator with the given total symbol (no `log xi` allowed).
    pub fn from_symbol(a: &HSymbol) -> Option<DiffOp> {
        let t = a.trunc();
        let mut out = Self::zero(t.caps, t.n_hbar, t.xi_lo, t.xi_hi);
        for n in 0..=t.n_hbar {
            if !a.logxi(n).is_zero() {
                return None;
            }
            for (m, c) in a.order(n) {
                out.add_term(*m, n, c);
            }
        }
        Some(out)
    }

    /// Replaces `e^{m ℏ ∂_s}` by `xi^m`.
    pub fn total_symbol(&self, det: Determined) -> HSymbol {
        let t = Truncation::new(self.h_max, self.lo, self.hi, self.caps);
        let mut orders = vec![Slice::new(); self.h_max as usize + 1];
        for ((m, h), c) in &self.terms {
            orders[*h as usize].insert(*m, c.clone());
        }
        HSymbol::from_parts(t, orders, vec![Rat::zero(); self.h_max as usize + 1], det)
    }
}

/// Commutative Laurent series `sum c_{h,m} ℏ^h xi^m` in `h <= h_max`, `lo <= m <= hi`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Laurent {
    caps: Caps,
    h_max: i64,
    lo: i64,
    hi: i64,
    terms: BTreeMap<(i64, i64), ScalarPoly>,
}

impl Laurent {
    pub fn zero(caps: Caps, h_max: i64, lo: i64, hi: i64) -> Self {
        Laurent { caps, h_max, lo, hi, terms: BTreeMap::new() }
    }

    pub fn one(caps: Caps, h_max: i64, lo: i64, hi: i64) -> Self {
        let mut out = Self::zero(caps, h_max, lo, hi);
        out.add_term(0, 0, &ScalarPoly::one(caps));
        out
    }

    pub fn terms(&self) -> &BTreeMap<(i64, i64), ScalarPoly> {
        &self.terms
    }

    fn add_term(&mut self, h: i64, m: i64, c: &ScalarPoly) {
        if h > self.h_max || m < self.lo || m > self.hi || c.is_zero() {
            return;
        }
        let e = self.terms.entry((h, m)).or_insert_with(|| ScalarPoly::zero(self.caps));
        e.add_assign(c);
        if e.is_zero() {
            self.terms.remove(&(h, m));
        }
    }

    pub fn add(&self, other: &Laurent) -> Laurent {
        let mut out = self.clone();
        for ((h, m), c) in &other.terms {
            out.add_term(*h, *m, c);
        }
        out
    }

    pub fn scale(&self, c: &Rat) -> Laurent {
        let mut out = Self::zero(self.caps, self.h_max, self.lo, self.hi);
        for ((h, m), v) in &self.terms {
            out.add_term(*h, *m, &v.scale(c));
        }
        out
    }

    /// Pointwise product; exact when `other` has no negative ℏ powers or
    /// `self` has been computed with enough headroom.
    pub fn mul(&self, other: &Laurent) -> Laurent {
        let mut out = Self::zero(self.caps, self.h_max.min(other.h_max), self.lo.max(other.lo), self.hi.min(other.hi));
        for ((h1, m1), a) in &self.terms {
            for ((h2, m2), b) in &other.terms {
                out.add_term(h1 + h2, m1 + m2, &a.mul(b));
            }
        }
        out
    }

    /// `exp(T)` for `T` with no `xi^0` term (finite within a one-sided window).
    pub fn exp_nilpotent(&self) -> Laurent {
        let mut out = Self::one(self.caps, self.h_max, self.lo, self.hi);
        let mut term = out.clone();
        for k in 1.. {
            term = term.mul(self).scale(&rat(1, k));
            if term.terms.is_empty() {
                break;
            }
            out = out.add(&term);
        }
        out
    }

    pub fn restrict(&self, h_max: i64) -> Laurent {
        let mut out = Self::zero(self.caps, h_max, self.lo, self.hi);
        for ((h, m), c) in &self.terms {
            out.add_term(*h, *m, c);
        }
        out
    }
}

fn one_sided(t: Truncation, side: Side) -> (i64, i64, i64) {
    match side {
        Side::Unbar => (t.xi_lo, 0, -t.xi_lo),
        Side::Bar => (0, t.xi_hi, t.xi_hi),
    }
}

/// Total symbol of `exp(X/ℏ)` for `X` supported on one side of `xi^0`, as a
/// Laurent series up to `ℏ^j_max`. `X` is treated as exact in ℏ (zero past
/// its truncation).
pub fn exp_total_symbol(x: &HSymbol, side: Side, j_max: i64) -> Laurent {
    let t = x.trunc();
    let (lo, hi, depth) = one_sided(t, side);
    let h_top = (j_max + depth).max(0) as u32;
    let tt = Truncation::new(h_top, lo, hi, t.caps);
    let xop = DiffOp::from_symbol(&x.with_trunc(tt)).expect("no log xi");
    let mut out = Laurent::one(t.caps, j_max, lo, hi);
    let mut power = DiffOp::identity(t.caps, h_top, lo, hi);
    let mut fact = Rat::one();
    for k in 1..=depth {
        power = power.op_mul(&xop);
        fact *= rat_int(k);
        for ((m, h), c) in power.terms() {
            out.add_term(*h as i64 - k, *m, &c.scale(&(Rat::one() / &fact)));
        }
    }
    out
}

/// `exp(S/ℏ)` for `S = sum ℏ^n S_n` supported on one side of `xi^0` (the
/// `xi^0` slot is ignored), up to `ℏ^j_max`.
pub fn exp_phase(s: &HSymbol, side: Side, j_max: i64) -> Laurent {
    let t = s.trunc();
    let (lo, hi, depth) = one_sided(t, side);
    let caps = t.caps;
    let wide = j_max + depth;
    let mut s0 = Laurent::zero(caps, wide, lo, hi);
    let mut rest = Laurent::zero(caps, wide, lo, hi);
    for n in 0..=t.n_hbar {
        for (m, c) in s.order(n).iter().filter(|(m, _)| **m != 0) {
            if n == 0 {
                s0.add_term(0, *m, c);
            } else {
                rest.add_term(n as i64 - 1, *m, c);
            }
        }
    }
    // exp(S_0/ℏ): the k-th power carries ℏ^-k.
    let mut a = Laurent::one(caps, wide, lo, hi);
    let mut power = Laurent::one(caps, wide, lo, hi);
    let mut fact = Rat::one();
    for k in 1..=depth {
        power = power.mul(&s0);
        fact *= rat_int(k);
        for ((h, m), c) in &power.terms {
            a.add_term(h - k, *m, &c.scale(&(Rat::one() / &fact)));
        }
    }
    a.mul(&rest.exp_nilpotent()).restrict(j_max)
}
