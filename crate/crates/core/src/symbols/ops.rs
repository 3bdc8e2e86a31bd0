//! Composition, commutators and inverses.

use num_traits::{One, Zero};

use super::{sat, Determined, Expansion, HSymbol, SymbolError, INF};
use crate::scalars::{factorial, rat_int, Monomial, Rat, ScalarPoly};

struct Reach {
    lo: Option<i64>,
    hi: Option<i64>,
    /// Smallest and largest exponent that may carry a nonzero coefficient.
    pmin: i64,
    pmax: i64,
}

fn reach(a: &HSymbol) -> Reach {
    let (smin, smax) = a.support().unwrap_or((INF, -INF));
    let pmax = if a.det.hi.is_some() { INF } else { a.det.lo.map_or(smax, |l| smax.max(l - 1)) };
    let pmin = if a.det.lo.is_some() { -INF } else { a.det.hi.map_or(smin, |h| smin.min(h + 1)) };
    Reach { lo: a.det.lo, hi: a.det.hi, pmin, pmax }
}

/// Range on which a bilinear product of `a` and `b` is determined.
fn product_det(a: &HSymbol, b: &HSymbol) -> Result<Determined, SymbolError> {
    let (ra, rb) = (reach(a), reach(b));
    let a_zero = ra.pmin > ra.pmax;
    let b_zero = rb.pmin > rb.pmax;
    if !a_zero && !b_zero && ((ra.lo.is_some() && rb.hi.is_some()) || (ra.hi.is_some() && rb.lo.is_some())) {
        return Err(SymbolError::ChartMismatch(a.chart(), b.chart()));
    }
    let mut lo: Option<i64> = None;
    let mut hi: Option<i64> = None;
    let mut lower = |v: i64| lo = Some(lo.map_or(v, |x: i64| x.max(v)));
    if let (Some(l), false) = (ra.lo, b_zero) {
        lower(sat(l, rb.pmax));
    }
    if let (Some(l), false) = (rb.lo, a_zero) {
        lower(sat(l, ra.pmax));
    }
    let mut upper = |v: i64| hi = Some(hi.map_or(v, |x: i64| x.min(v)));
    if let (Some(h), false) = (ra.hi, b_zero) {
        upper(sat(h, rb.pmin));
    }
    if let (Some(h), false) = (rb.hi, a_zero) {
        upper(sat(h, ra.pmin));
    }
    Ok(Determined { lo, hi })
}

fn pow_i(m: i64, k: u32) -> Rat {
    let mut acc = Rat::one();
    for _ in 0..k {
        acc *= rat_int(m);
    }
    acc
}

/// `∂_s^k` of every slice, indexed `[order][k]`.
fn s_derivatives(b: &HSymbol, kmax: u32) -> Vec<Vec<super::Slice>> {
    b.orders
        .iter()
        .map(|sl| {
            let mut out = vec![sl.clone()];
            for _ in 0..kmax {
                let prev = out.last().unwrap();
                let next: super::Slice =
                    prev.iter().map(|(m, c)| (*m, c.d_s())).filter(|(_, c)| !c.is_zero()).collect();
                out.push(next);
            }
            out
        })
        .collect()
}

fn const_part(a: &HSymbol, n: usize) -> Option<Rat> {
    let sl = &a.orders[n];
    match sl.len() {
        0 => Some(Rat::zero()),
        1 => sl.get(&0).and_then(|c| c.as_constant()),
        _ => None,
    }
}

/// `a ∘ b = sum_k ℏ^k/k! (xi ∂_xi)^k a · ∂_s^k b`.
pub fn circ_product(a: &HSymbol, b: &HSymbol) -> Result<HSymbol, SymbolError> {
    a.same(b)?;
    let det = product_det(a, b)?;
    let nmax = a.trunc.n_hbar;
    let db = s_derivatives(b, nmax);
    let mut out = HSymbol::zero(a.trunc);
    for p in 0..=nmax {
        let ap = &a.orders[p as usize];
        for q in 0..=(nmax - p) {
            for k in 0..=(nmax - p - q) {
                let n = p + q + k;
                let bk = &db[q as usize][k as usize];
                if bk.is_empty() {
                    continue;
                }
                let inv = Rat::one() / factorial(k);
                for (m1, c1) in ap {
                    let w = pow_i(*m1, k) * &inv;
                    if w.is_zero() {
                        continue;
                    }
                    for (m2, c2) in bk {
                        if !det.contains(m1 + m2) {
                            continue;
                        }
                        out.add_coeff(n, m1 + m2, &c1.mul(c2).scale(&w));
                    }
                }
            }
        }
    }
    for p in 0..=nmax as usize {
        let alpha = &a.logxi[p];
        if !alpha.is_zero() {
            for q in 0..=(nmax as usize - p) {
                let c = const_part(b, q)
                    .ok_or_else(|| SymbolError::UnrepresentableLog("log xi composed with a non-constant".into()))?;
                if !b.logxi[q].is_zero() {
                    return Err(SymbolError::UnrepresentableLog("(log xi)^2".into()));
                }
                out.logxi[p + q] += alpha * c;
                if p + q < nmax as usize {
                    for (m, c) in &db[q][1] {
                        out.add_coeff((p + q + 1) as u32, *m, &c.scale(alpha));
                    }
                }
            }
        }
        let beta = &b.logxi[p];
        if !beta.is_zero() {
            for q in 0..=(nmax as usize - p) {
                let c = const_part(a, q)
                    .ok_or_else(|| SymbolError::UnrepresentableLog("function composed with log xi".into()))?;
                out.logxi[p + q] += beta * c;
            }
        }
    }
    out.det = det;
    out.normalize();
    Ok(out)
}

/// `ℏ^{-1} [x, a]`, exact to the full truncation order.
///
/// The ℏ^0 part of a commutator vanishes identically, so the result at order
/// `n` only involves orders up to `n` of both arguments.
pub fn hbar_commutator(x: &HSymbol, a: &HSymbol) -> Result<HSymbol, SymbolError> {
    x.same(a)?;
    let det = product_det(x, a)?;
    let nmax = x.trunc.n_hbar;
    let dx = s_derivatives(x, nmax + 1);
    let da = s_derivatives(a, nmax + 1);
    let mut out = HSymbol::zero(x.trunc);
    for n in 0..=nmax {
        for k in 1..=(n + 1) {
            let inv = Rat::one() / factorial(k);
            for p in 0..=(n + 1 - k) {
                let q = n + 1 - k - p;
                let (xp, aq) = (&x.orders[p as usize], &a.orders[q as usize]);
                let (dka, dkx) = (&da[q as usize][k as usize], &dx[p as usize][k as usize]);
                for (m1, c1) in xp {
                    let w = pow_i(*m1, k) * &inv;
                    if w.is_zero() {
                        continue;
                    }
                    for (m2, c2) in dka {
                        if det.contains(m1 + m2) {
                            out.add_coeff(n, m1 + m2, &c1.mul(c2).scale(&w));
                        }
                    }
                }
                for (m2, c2) in aq {
                    let w = -(pow_i(*m2, k) * &inv);
                    if w.is_zero() {
                        continue;
                    }
                    for (m1, c1) in dkx {
                        if det.contains(m1 + m2) {
                            out.add_coeff(n, m1 + m2, &c2.mul(c1).scale(&w));
                        }
                    }
                }
            }
        }
        for p in 0..=n {
            let q = n - p;
            let alpha = &x.logxi[p as usize];
            if !alpha.is_zero() {
                for (m, c) in &da[q as usize][1] {
                    out.add_coeff(n, *m, &c.scale(alpha));
                }
            }
            let beta = &a.logxi[q as usize];
            if !beta.is_zero() {
                for (m, c) in &dx[p as usize][1] {
                    out.add_coeff(n, *m, &c.scale(&-beta));
                }
            }
        }
    }
    out.det = det;
    out.normalize();
    Ok(out)
}

/// `{a, b} = xi (∂_xi a ∂_s b - ∂_s a ∂_xi b)` on principal symbols.
pub fn poisson(a: &HSymbol, b: &HSymbol) -> Result<HSymbol, SymbolError> {
    hbar_commutator(&a.principal(), &b.principal())
}

/// Leading unit term `c u^q xi^M` at ℏ-order 0.
fn leading_unit(a: &HSymbol, side: Expansion) -> Result<(i64, Rat, crate::scalars::QExp), SymbolError> {
    let known = match side {
        Expansion::AtInfinity => a.det.hi.is_none(),
        Expansion::AtZero => a.det.lo.is_none(),
    };
    if !known {
        return Err(SymbolError::NotInvertible(format!("leading side of a {:?} series is undetermined", a.chart())));
    }
    let mut units = a.orders[0].iter().filter(|(_, c)| c.terms().keys().any(|m| !m.is_nilpotent()));
    let lead = match side {
        Expansion::AtInfinity => units.next_back(),
        Expansion::AtZero => units.next(),
    };
    let (m, c) = lead.ok_or_else(|| SymbolError::NotInvertible("no unit term".into()))?;
    let mut bulk = c.terms().iter().filter(|(mono, _)| !mono.is_nilpotent());
    let (mono, coef) = bulk.next().unwrap();
    if bulk.next().is_some() || mono.l != 0 {
        return Err(SymbolError::NotInvertible(format!("leading coefficient {c} is not a unit")));
    }
    Ok((*m, coef.clone(), mono.u))
}

/// Inverse under `∘`, expanded at the requested point.
///
/// Newton iteration `b <- b + b ∘ (1 - a ∘ b)` from the inverse of the
/// leading unit term; the error squares each step and leaves the window.
pub fn invert(a: &HSymbol, side: Expansion) -> Result<HSymbol, SymbolError> {
    if !a.logxi.iter().all(|l| l.is_zero()) {
        return Err(SymbolError::NotInvertible("log xi term".into()));
    }
    let (m, c, q) = leading_unit(a, side)?;
    let t = a.trunc;
    let inv = ScalarPoly::monomial(t.caps, Monomial::ul(-q, 0), Rat::one() / c);
    let mut b = HSymbol::term(t, 0, -m, inv);
    let one = HSymbol::one(t);
    // the error order doubles per step; 2^16 exceeds any window depth
    for _ in 0..16 {
        let e = one.sub(&circ_product(a, &b)?)?;
        if e.is_zero() {
            return Ok(b);
        }
        b = b.add(&circ_product(&b, &e)?)?;
    }
    Err(SymbolError::NoTermination("inverse".into()))
}

/// `a^{∘n}`; negative powers go through [`invert`].
pub fn power(a: &HSymbol, n: i64, side: Expansion) -> Result<HSymbol, SymbolError> {
    let base = if n < 0 { invert(a, side)? } else { a.clone() };
    let mut acc = HSymbol::one(a.trunc);
    for _ in 0..n.unsigned_abs() {
        acc = circ_product(&acc, &base)?;
    }
    Ok(acc)
}
