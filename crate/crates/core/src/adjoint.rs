//! Adjoint actions `Ad(e^{x/ℏ})`, the `phi` conjugation, the time flows and
//! the maps between `X_i` and the tilde variables.

use num_traits::{One, Zero};
use thiserror::Error;

use crate::scalars::{factorial, rat, rat_int, Rat, ScalarError, ScalarPoly};
use crate::symbols::{hbar_commutator, HSymbol, Slice, SymbolError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AdjointError {
    #[error("no termination certificate for exp(ad x): {0}")]
    NoCertificate(String),
    #[error("adjoint series exceeded {0} terms")]
    Runaway(usize),
    #[error(transparent)]
    Symbol(#[from] SymbolError),
    #[error(transparent)]
    Scalar(#[from] ScalarError),
}

/// Which half of the Riemann-Hilbert problem an object belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Unbar,
    Bar,
}

/// Bernoulli numbers `B_0..=B_n` with `B_1 = -1/2`.
pub fn bernoulli_numbers(n: usize) -> Vec<Rat> {
    let mut b = vec![Rat::one()];
    for m in 1..=n {
        let mut acc = Rat::zero();
        let mut binom = Rat::one();
        for (k, bk) in b.iter().enumerate() {
            acc += &binom * bk;
            binom = binom * rat_int((m + 1 - k) as i64) / rat_int(k as i64 + 1);
        }
        b.push(-acc / rat_int(m as i64 + 1));
    }
    b
}

/// `K_{2p} = B_{2p} / (2p)!`, the coefficients of `z/(e^z - 1)`.
pub fn bernoulli_k(p: u32) -> Rat {
    let b = bernoulli_numbers(2 * p as usize);
    &b[2 * p as usize] / factorial(2 * p)
}

/// Direction in which `ad x` moves `xi`-exponents at ℏ-order 0.
fn certify(x: &HSymbol) -> Result<i64, AdjointError> {
    if !x.logxi(0).is_zero() {
        return Err(AdjointError::NoCertificate("log xi at order 0".into()));
    }
    let mut sign = 0i64;
    for (m, c) in x.order(0) {
        if c.terms().keys().all(|mono| mono.is_nilpotent()) {
            continue;
        }
        let s = m.signum();
        if s == 0 || (sign != 0 && s != sign) {
            return Err(AdjointError::NoCertificate(format!("non-nilpotent term at xi^{m}")));
        }
        sign = s;
    }
    Ok(sign)
}

fn runaway_bound(x: &HSymbol) -> usize {
    let t = x.trunc();
    let span = (t.xi_hi - t.xi_lo + 1).max(1) as usize;
    let depth = t.caps.t_deg as usize + t.caps.tbar_deg as usize + t.n_hbar as usize;
    let reach = x.orders().iter().flat_map(|sl| sl.keys()).map(|m| m.unsigned_abs() as usize).max().unwrap_or(0);
    span + depth * (reach + 1) + 2
}

/// `sum_N c_N (ad_{ℏ^{-1} x})^N a` for the coefficient sequence `coef`.
fn ad_series(x: &HSymbol, a: &HSymbol, coef: impl Fn(usize) -> Rat) -> Result<HSymbol, AdjointError> {
    certify(x)?;
    let bound = runaway_bound(x);
    let mut term = a.clone();
    let mut sum = a.scale(&coef(0));
    for n in 1.. {
        term = hbar_commutator(x, &term)?;
        if term.is_zero() {
            sum = sum.restrict(term.determined());
            return Ok(sum);
        }
        if n > bound {
            return Err(AdjointError::Runaway(bound));
        }
        let c = coef(n);
        if c.is_zero() {
            sum = sum.restrict(term.determined());
        } else {
            sum = sum.add(&term.scale(&c))?;
        }
    }
    unreachable!()
}

/// `Ad(e^{x/ℏ}) a = sum_N (ad_{ℏ^{-1} x})^N a / N!`.
///
/// Refuses generators whose ℏ^0 part is not structurally nilpotent: every
/// non-nilpotent coefficient must sit strictly on one side of `xi^0`.
pub fn exp_ad(x: &HSymbol, a: &HSymbol) -> Result<HSymbol, AdjointError> {
    ad_series(x, a, |n| Rat::one() / factorial(n as u32))
}

/// `(phi(s) - phi(s + mℏ)) / ℏ` as an ℏ-series.
pub fn shift_difference(phi: &[ScalarPoly], m: i64, n_hbar: u32) -> Vec<ScalarPoly> {
    let caps = phi[0].caps();
    let mut out = vec![ScalarPoly::zero(caps); n_hbar as usize + 1];
    for (j, pj) in phi.iter().enumerate() {
        let mut d = pj.clone();
        let mut mk = Rat::one();
        for k in 1..=(n_hbar as usize + 1) {
            d = d.d_s();
            mk *= rat_int(m);
            if j + k - 1 > n_hbar as usize {
                break;
            }
            out[j + k - 1].add_assign(&d.scale(&(-&mk / factorial(k as u32))));
        }
    }
    out
}

fn series_mul(a: &[ScalarPoly], b: &[ScalarPoly]) -> Vec<ScalarPoly> {
    let caps = a[0].caps();
    let n = a.len().min(b.len());
    let mut out = vec![ScalarPoly::zero(caps); n];
    for i in 0..n {
        for j in 0..(n - i) {
            out[i + j].add_assign(&a[i].mul(&b[j]));
        }
    }
    out
}

/// `exp(sum_n ℏ^n e_n)` where `e_0 = q l + nilpotent`.
pub fn exp_series(e: &[ScalarPoly]) -> Result<Vec<ScalarPoly>, ScalarError> {
    let caps = e[0].caps();
    let n = e.len();
    let mut rest: Vec<ScalarPoly> = e.to_vec();
    rest[0] = ScalarPoly::zero(caps);
    let mut total = vec![ScalarPoly::zero(caps); n];
    total[0] = ScalarPoly::one(caps);
    let mut power = total.clone();
    for k in 1..n {
        power = series_mul(&power, &rest).iter().map(|p| p.scale(&rat(1, k as i64))).collect();
        for (i, p) in power.iter().enumerate() {
            total[i].add_assign(p);
        }
    }
    let head = e[0].exp_scalar()?;
    Ok(total.iter().map(|p| p.mul(&head)).collect())
}

/// `Ad(e^{phi/ℏ})` for a function `phi(s) = sum_n ℏ^n phi_n`, in closed form:
/// the coefficient of `xi^m` is multiplied by `exp((phi(s) - phi(s+mℏ))/ℏ)`.
pub fn conj_by_phi(phi: &[ScalarPoly], a: &HSymbol) -> Result<HSymbol, AdjointError> {
    let t = a.trunc();
    let n = t.n_hbar as usize;
    let mut phi: Vec<ScalarPoly> = phi.iter().take(n + 1).map(|p| p.with_caps(t.caps)).collect();
    phi.resize(n + 1, ScalarPoly::zero(t.caps));
    let mut exps: Vec<i64> = a.orders().iter().flat_map(|sl| sl.keys().copied()).collect();
    exps.sort_unstable();
    exps.dedup();
    let mut orders = vec![Slice::new(); n + 1];
    for m in exps {
        let factor = exp_series(&shift_difference(&phi, m, t.n_hbar))?;
        let col: Vec<ScalarPoly> = (0..=n).map(|k| a.coeff(k as u32, m)).collect();
        for (k, c) in series_mul(&factor, &col).into_iter().enumerate() {
            if !c.is_zero() {
                orders[k].insert(m, c);
            }
        }
    }
    let logxi: Vec<Rat> = (0..=n).map(|k| a.logxi(k as u32).clone()).collect();
    for (p, alpha) in logxi.iter().enumerate() {
        if alpha.is_zero() {
            continue;
        }
        for j in 0..=(n - p) {
            let c = phi[j].d_s().scale(&-alpha);
            if c.is_zero() {
                continue;
            }
            let e = orders[p + j].entry(0).or_insert_with(|| ScalarPoly::zero(t.caps));
            e.add_assign(&c);
        }
    }
    for sl in orders.iter_mut() {
        sl.retain(|_, c| !c.is_zero());
    }
    Ok(HSymbol::from_parts(t, orders, logxi, a.determined()))
}

/// `zeta = sum t_n xi^n` (unbar) or `sum tbar_n xi^-n` (bar) at ℏ-order 0.
pub fn zeta(t: crate::symbols::Truncation, side: Side) -> HSymbol {
    let mut z = HSymbol::zero(t);
    let count = match side {
        Side::Unbar => t.caps.n_t,
        Side::Bar => t.caps.n_tbar,
    } as usize;
    for n in 1..=count {
        let (m, c) = match side {
            Side::Unbar => (n as i64, ScalarPoly::t(t.caps, n)),
            Side::Bar => (-(n as i64), ScalarPoly::tbar(t.caps, n)),
        };
        z = z.add(&HSymbol::term(t, 0, m, c)).expect("same truncation");
    }
    z
}

/// `Ad(e^{zeta/ℏ}) a`; terminates because each bracket raises the time degree.
pub fn time_conjugate(a: &HSymbol, side: Side) -> Result<HSymbol, AdjointError> {
    exp_ad(&zeta(a.trunc(), side), a)
}

/// `e^{± ad phi_0}` with the Poisson bracket, coefficientwise.
pub fn poisson_exp_phi(phi0: &ScalarPoly, a: &HSymbol, sign: i64) -> Result<HSymbol, AdjointError> {
    let a = a.principal();
    let t = a.trunc();
    let dphi = phi0.with_caps(t.caps).d_s();
    let mut out = Slice::new();
    for (m, c) in a.order(0) {
        let f = dphi.scale(&rat_int(-sign * m)).exp_scalar()?;
        let v = c.mul(&f);
        if !v.is_zero() {
            out.insert(*m, v);
        }
    }
    let alpha = a.logxi(0).clone();
    if !alpha.is_zero() {
        let e = out.entry(0).or_insert_with(|| ScalarPoly::zero(t.caps));
        e.add_assign(&dphi.scale(&(-rat_int(sign) * &alpha)));
        if e.is_zero() {
            out.remove(&0);
        }
    }
    Ok(HSymbol::from_slice(t, 0, &out, alpha, a.determined()))
}

/// `sum_{n>=1} (ad x0)^{n-1} / n! x` with the Poisson bracket.
pub fn tilde_forward(x0: &HSymbol, x: &HSymbol) -> Result<HSymbol, AdjointError> {
    ad_series(&x0.principal(), &x.principal(), |n| Rat::one() / factorial(n as u32 + 1))
}

/// `x - {x0, x}/2 + sum_p K_{2p} (ad x0)^{2p} x`, inverse of [`tilde_forward`].
pub fn tilde_inverse(x0: &HSymbol, xt: &HSymbol) -> Result<HSymbol, AdjointError> {
    let span = {
        let t = x0.trunc();
        (t.xi_hi - t.xi_lo + 1).max(1) as usize + runaway_bound(&x0.principal()) + 2
    };
    let b = bernoulli_numbers(span + 2);
    ad_series(&x0.principal(), &xt.principal(), |n| {
        b.get(n).map(|bn| bn / factorial(n as u32)).unwrap_or_else(Rat::zero)
    })
}

/// Bar-side forward map `e^{ad phi0} sum (ad xbar0)^{n-1}/n! xbar`.
pub fn tilde_forward_bar(xbar0: &HSymbol, phi0: &ScalarPoly, x: &HSymbol) -> Result<HSymbol, AdjointError> {
    poisson_exp_phi(phi0, &tilde_forward(xbar0, x)?, 1)
}

/// Bar-side inverse: undo `e^{ad phi0}` first, then [`tilde_inverse`].
pub fn tilde_inverse_bar(xbar0: &HSymbol, phi0: &ScalarPoly, xt: &HSymbol) -> Result<HSymbol, AdjointError> {
    tilde_inverse(xbar0, &poisson_exp_phi(phi0, xt, -1)?)
}
