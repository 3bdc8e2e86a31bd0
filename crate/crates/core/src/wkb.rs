//! Conversion between exponential dressing operators and WKB phases.
//!
//! The total symbol of `exp(X/ℏ)` is `exp(S/ℏ)`. The forward direction
//! computes `S` from `X` through the doubled-variable recursion for
//! `Y^{(l)}_{k,m}(s, s', xi, xi')`; the inverse direction runs the same
//! recursion graded by homogeneous `xi`-degree and solves for `X` degree by
//! degree. The bar side uses the same recursions on positive exponents:
//! `xi ∂_xi ∂_{s'}` is invariant under `s -> -s`, `xi -> 1/xi`.

use std::collections::HashMap;

use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adjoint::Side;
use crate::scalars::{Caps, Rat, ScalarPoly};
use crate::symbols::{BivarSymbol, Determined, HSymbol, Slice, SymbolDto, Truncation};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WkbError {
    #[error("input has exponent {0} on the wrong side of xi^0")]
    WrongSupport(i64),
    #[error("input carries a log xi term at order {0}")]
    LogTerm(u32),
    #[error("phi has {got} orders, expected {want}")]
    PhiLength { got: usize, want: usize },
    #[error("invalid phase: {0}")]
    Invalid(String),
}

/// Vanishing-bound checks performed during a recursion.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InvariantLog {
    pub checked: usize,
    pub violations: Vec<String>,
}

impl InvariantLog {
    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.violations.push(what());
        }
    }

    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// `S = sum ℏ^n S_n` stored as the order-`n` slices of a symbol container.
///
/// Unbar phases have exponents `<= -1`; bar phases have exponents `>= 0`
/// with `phi_n` in the `xi^0` slot.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WkbPhase {
    pub side: Side,
    pub s: HSymbol,
    /// `alphabar_n`, the `log xi` coefficients of `Xbar` kept out of `Sbar`.
    pub alpha_bar: Vec<Rat>,
    pub invariants: InvariantLog,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WkbDto {
    pub side: String,
    pub s: SymbolDto,
    pub alpha_bar: Vec<String>,
    pub invariants: InvariantLog,
}

impl WkbPhase {
    pub fn order(&self, n: u32) -> &Slice {
        self.s.order(n)
    }

    pub fn n_hbar(&self) -> u32 {
        self.s.trunc().n_hbar
    }

    pub fn to_dto(&self) -> WkbDto {
        WkbDto {
            side: match self.side {
                Side::Unbar => "unbar".into(),
                Side::Bar => "bar".into(),
            },
            s: self.s.to_dto(),
            alpha_bar: self.alpha_bar.iter().map(crate::scalars::rat_to_string).collect(),
            invariants: self.invariants.clone(),
        }
    }

    pub fn from_dto(dto: &WkbDto) -> Option<WkbPhase> {
        let side = match dto.side.as_str() {
            "unbar" => Side::Unbar,
            "bar" => Side::Bar,
            _ => return None,
        };
        let alpha_bar = dto.alpha_bar.iter().map(|a| crate::scalars::parse_rat(a)).collect::<Option<Vec<_>>>()?;
        Some(WkbPhase { side, s: HSymbol::from_dto(&dto.s)?, alpha_bar, invariants: dto.invariants.clone() })
    }
}

fn sign(side: Side) -> i64 {
    match side {
        Side::Unbar => -1,
        Side::Bar => 1,
    }
}

/// Number of exponents on the relevant side that are determined.
fn depth(t: Truncation, det: Determined, side: Side) -> i64 {
    match side {
        Side::Unbar => det.lo.map_or(-t.xi_lo, |l| (-t.xi_lo).min(-l)),
        Side::Bar => det.hi.map_or(t.xi_hi, |h| t.xi_hi.min(h)),
    }
}

fn det_for(t: Truncation, depth: i64, side: Side) -> Determined {
    match side {
        Side::Unbar if depth < -t.xi_lo => Determined { lo: Some(-depth), hi: None },
        Side::Bar if depth < t.xi_hi => Determined { lo: None, hi: Some(depth) },
        _ => Determined::EXACT,
    }
}

fn check_support(x: &HSymbol, side: Side) -> Result<(), WkbError> {
    for n in 0..=x.trunc().n_hbar {
        if !x.logxi(n).is_zero() {
            return Err(WkbError::LogTerm(n));
        }
        if let Some(m) = x.order(n).keys().find(|m| sign(side) * **m < 1) {
            return Err(WkbError::WrongSupport(*m));
        }
    }
    Ok(())
}

/// Forward recursion on raw slices; returns `S_0..S_{n_out}` for `X_n = 0`
/// beyond the given orders.
fn forward(caps: Caps, xs: &[Slice], n_out: usize, depth: i64, sgn: i64, log: &mut InvariantLog) -> Vec<Slice> {
    let keep = move |d: i64| sgn * d <= depth;
    let l_max = depth.max(0) as usize;
    let mut y: HashMap<(usize, usize, usize), BivarSymbol> = HashMap::new();
    let mut ds: HashMap<(usize, usize), BivarSymbol> = HashMap::new();
    let mut out = vec![Slice::new(); n_out + 1];
    for n in 0..=n_out {
        for l in 0..l_max {
            if l == 0 {
                if let Some(x) = xs.get(n) {
                    y.insert((0, 0, n), BivarSymbol::unprimed(caps, x));
                }
            }
            for k in 0..=l + n {
                let mut acc = BivarSymbol::zero(caps);
                if n > 0 {
                    if let Some(prev) = y.get(&(l, k, n - 1)) {
                        acc.add_assign(&prev.d_s_prime().theta_xi());
                    }
                }
                for lp in 0..l {
                    for mp in 0..=n {
                        let (Some(a), Some(b)) = (y.get(&(lp, k, mp)), ds.get(&(l - lp, n - mp))) else {
                            continue;
                        };
                        acc.add_assign(&a.theta_xi().mul(b, keep));
                    }
                }
                let next = acc.scale(&Rat::new(1.into(), ((k + 1) as i64).into()));
                if !next.is_zero() {
                    y.insert((l, k + 1, n), next);
                }
            }
            log.check(!y.contains_key(&(l, l + n + 1, n)), || format!("Y^({l})_({},{n}) != 0", l + n + 1));
            let mut s = Slice::new();
            for k in 0..=l + n {
                let Some(v) = y.get(&(l, k, n)) else { continue };
                if let Some((lo, hi)) = v.degree_range() {
                    let bound = sgn * if sgn < 0 { hi } else { lo };
                    log.check(bound > l as i64, || format!("ord Y^({l})_({k},{n}) = {bound}"));
                }
                for (m, c) in v.eval_diagonal() {
                    if keep(m) {
                        s.entry(m).or_insert_with(|| ScalarPoly::zero(caps)).add_assign(&c);
                    }
                }
            }
            let inv = Rat::new(1.into(), ((l + 1) as i64).into());
            let s: Slice = s.into_iter().map(|(m, c)| (m, c.scale(&inv))).filter(|(_, c)| !c.is_zero()).collect();
            if s.is_empty() {
                continue;
            }
            ds.insert((l + 1, n), BivarSymbol::primed(caps, &s).d_s_prime());
            for (m, c) in s {
                out[n].entry(m).or_insert_with(|| ScalarPoly::zero(caps)).add_assign(&c);
            }
        }
        out[n].retain(|_, c| !c.is_zero());
    }
    out
}

fn homogeneous(s: &Slice, m: i64) -> Slice {
    s.get(&m).filter(|c| !c.is_zero()).map(|c| Slice::from([(m, c.clone())])).unwrap_or_default()
}

/// Inverse recursion: `X_0..X_N` from `S_0..S_N`, graded by degree `sgn * j`.
fn inverse(caps: Caps, ss: &[Slice], depth: i64, sgn: i64, log: &mut InvariantLog) -> Vec<Slice> {
    type Key = (usize, usize, usize, usize);
    let n_max = ss.len();
    let j_max = depth.max(0) as usize;
    let mut y: HashMap<Key, BivarSymbol> = HashMap::new();
    // (l, n, j) -> d_{s'} of sum_k Y^{(l)}_{k,n,j} at the diagonal, in primed variables.
    let mut dd: HashMap<(usize, usize, usize), BivarSymbol> = HashMap::new();
    let mut xs = vec![Slice::new(); n_max];
    for n in 0..n_max {
        for j in 1..=j_max {
            let deg = sgn * j as i64;
            let mut closing = homogeneous(&ss[n], deg);
            for l in 0..=j {
                for k in 1..=l + n + 1 {
                    let mut acc = BivarSymbol::zero(caps);
                    if n > 0 {
                        if let Some(prev) = y.get(&(l, k - 1, n - 1, j)) {
                            acc.add_assign(&prev.d_s_prime().theta_xi());
                        }
                    }
                    for lpp in 1..=l {
                        let w = Rat::new(1.into(), (lpp as i64).into());
                        for jp in 1..j {
                            for np in 0..=n {
                                let (Some(a), Some(b)) =
                                    (y.get(&(l - lpp, k - 1, np, jp)), dd.get(&(lpp - 1, n - np, j - jp)))
                                else {
                                    continue;
                                };
                                acc.add_assign(&a.theta_xi().mul(b, |_| true).scale(&w));
                            }
                        }
                    }
                    let v = acc.scale(&Rat::new(1.into(), (k as i64).into()));
                    let vanishes = k > l + n || j <= l;
                    log.check(!vanishes || v.is_zero(), || format!("Y^({l})_({k},{n},{j}) != 0"));
                    if v.is_zero() {
                        continue;
                    }
                    let inv = Rat::new(1.into(), ((l + 1) as i64).into());
                    for (m, c) in v.eval_diagonal() {
                        let e = closing.entry(m).or_insert_with(|| ScalarPoly::zero(caps));
                        *e = e.sub(&c.scale(&inv));
                    }
                    y.insert((l, k, n, j), v);
                }
            }
            closing.retain(|_, c| !c.is_zero());
            let y00 = BivarSymbol::unprimed(caps, &closing);
            log.check(y00.is_unprimed(), || format!("Y^(0)_(0,{n},{j}) depends on (s', xi')"));
            for (m, c) in &closing {
                xs[n].insert(*m, c.clone());
            }
            if !y00.is_zero() {
                y.insert((0, 0, n, j), y00);
            }
            for l in 0..=j {
                let mut diag = Slice::new();
                for k in 0..=l + n {
                    if let Some(v) = y.get(&(l, k, n, j)) {
                        for (m, c) in v.eval_diagonal() {
                            diag.entry(m).or_insert_with(|| ScalarPoly::zero(caps)).add_assign(&c);
                        }
                    }
                }
                diag.retain(|_, c| !c.is_zero());
                if !diag.is_empty() {
                    dd.insert((l, n, j), BivarSymbol::primed(caps, &diag).d_s_prime());
                }
            }
        }
    }
    xs
}

fn slices(a: &HSymbol) -> Vec<Slice> {
    (0..=a.trunc().n_hbar).map(|n| a.order(n).clone()).collect()
}

/// `S` with `exp(S/ℏ)` the total symbol of `exp(X/ℏ)`; `X` has exponents `<= -1`.
pub fn exp_to_wkb(x: &HSymbol) -> Result<WkbPhase, WkbError> {
    let t = x.trunc();
    exp_to_wkb_orders(x, t.n_hbar)
}

/// As [`exp_to_wkb`], computing `S_0..S_{n_out}` with `X_n = 0` beyond the
/// truncation of `x`.
pub fn exp_to_wkb_orders(x: &HSymbol, n_out: u32) -> Result<WkbPhase, WkbError> {
    check_support(x, Side::Unbar)?;
    let t = x.trunc();
    let d = depth(t, x.determined(), Side::Unbar);
    let mut log = InvariantLog::default();
    let out = forward(t.caps, &slices(x), n_out as usize, d, -1, &mut log);
    let to = t.with_n_hbar(n_out);
    let s = HSymbol::from_parts(to, out, vec![Rat::zero(); n_out as usize + 1], det_for(to, d, Side::Unbar));
    Ok(WkbPhase { side: Side::Unbar, s, alpha_bar: vec![], invariants: log })
}

/// `X` with total symbol of `exp(X/ℏ)` equal to `exp(S/ℏ)`.
pub fn wkb_to_exp(s: &WkbPhase) -> Result<(HSymbol, InvariantLog), WkbError> {
    if s.side != Side::Unbar {
        return Err(WkbError::Invalid("expected an unbar phase".into()));
    }
    check_support(&s.s, Side::Unbar)?;
    let t = s.s.trunc();
    let d = depth(t, s.s.determined(), Side::Unbar);
    let mut log = InvariantLog::default();
    let xs = inverse(t.caps, &slices(&s.s), d, -1, &mut log);
    let x = HSymbol::from_parts(t, xs, vec![Rat::zero(); t.n_hbar as usize + 1], det_for(t, d, Side::Unbar));
    Ok((x, log))
}

/// `Sbar = phi + S'` where `exp(S'/ℏ)` is the total symbol of `exp(Xbar/ℏ)`.
/// The `log xi` part of `Xbar` is returned in `alpha_bar` and left out.
pub fn exp_to_wkb_bar(xbar: &HSymbol, phi: &[ScalarPoly]) -> Result<WkbPhase, WkbError> {
    let t = xbar.trunc();
    let want = t.n_hbar as usize + 1;
    if phi.len() < want {
        return Err(WkbError::PhiLength { got: phi.len(), want });
    }
    let alpha_bar: Vec<Rat> = (0..=t.n_hbar).map(|n| xbar.logxi(n).clone()).collect();
    let stripped = HSymbol::from_parts(t, slices(xbar), vec![Rat::zero(); want], xbar.determined());
    check_support(&stripped, Side::Bar)?;
    let d = depth(t, xbar.determined(), Side::Bar);
    let mut log = InvariantLog::default();
    let mut out = forward(t.caps, &slices(&stripped), t.n_hbar as usize, d, 1, &mut log);
    for (n, sl) in out.iter_mut().enumerate() {
        let p = phi[n].with_caps(t.caps);
        if !p.is_zero() {
            sl.insert(0, p);
        }
    }
    let s = HSymbol::from_parts(t, out, vec![Rat::zero(); want], det_for(t, d, Side::Bar));
    Ok(WkbPhase { side: Side::Bar, s, alpha_bar, invariants: log })
}

/// `S'_0..S'_{n_out}` for `exp(Xbar/ℏ)` alone, with `Xbar_n = 0` past the
/// truncation; the `log xi` part of `Xbar` is ignored.
pub fn exp_to_wkb_bar_orders(xbar: &HSymbol, n_out: u32) -> Result<WkbPhase, WkbError> {
    let t = xbar.trunc();
    let want = t.n_hbar as usize + 1;
    let stripped = HSymbol::from_parts(t, slices(xbar), vec![Rat::zero(); want], xbar.determined());
    check_support(&stripped, Side::Bar)?;
    let d = depth(t, xbar.determined(), Side::Bar);
    let mut log = InvariantLog::default();
    let out = forward(t.caps, &slices(&stripped), n_out as usize, d, 1, &mut log);
    let to = t.with_n_hbar(n_out);
    let s = HSymbol::from_parts(to, out, vec![Rat::zero(); n_out as usize + 1], det_for(to, d, Side::Bar));
    Ok(WkbPhase { side: Side::Bar, s, alpha_bar: vec![], invariants: log })
}

/// Inverse of [`exp_to_wkb_bar`]: `(Xbar, phi)`, with `alpha_bar` restored as `log xi`.
pub fn wkb_to_exp_bar(s: &WkbPhase) -> Result<(HSymbol, Vec<ScalarPoly>, InvariantLog), WkbError> {
    if s.side != Side::Bar {
        return Err(WkbError::Invalid("expected a bar phase".into()));
    }
    let t = s.s.trunc();
    let phi: Vec<ScalarPoly> = (0..=t.n_hbar).map(|n| s.s.coeff(n, 0)).collect();
    let mut rest = slices(&s.s);
    for sl in rest.iter_mut() {
        sl.remove(&0);
    }
    let d = depth(t, s.s.determined(), Side::Bar);
    let mut log = InvariantLog::default();
    let xs = inverse(t.caps, &rest, d, 1, &mut log);
    let mut alpha = s.alpha_bar.clone();
    alpha.resize(t.n_hbar as usize + 1, Rat::zero());
    let x = HSymbol::from_parts(t, xs, alpha, det_for(t, d, Side::Bar));
    Ok((x, phi, log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalars::{rat, Caps};
    use crate::symbols::circ_product;

    fn tr(n: u32) -> Truncation {
        Truncation::new(n, -4, 4, Caps::new(1, 1, 1, 1))
    }

    #[test]
    fn zero_maps_to_zero() {
        let t = tr(2);
        let s = exp_to_wkb(&HSymbol::zero(t)).unwrap();
        assert!(s.s.is_zero());
        let (x, log) = wkb_to_exp(&s).unwrap();
        assert!(x.is_zero());
        assert!(log.ok());
    }

    #[test]
    fn s_independent_generator_is_its_own_phase() {
        let t = tr(2);
        let caps = t.caps;
        let x = HSymbol::term(t, 0, -1, ScalarPoly::tbar(caps, 1))
            .add(&HSymbol::term(t, 1, -3, ScalarPoly::constant(caps, rat(2, 3))))
            .unwrap();
        let s = exp_to_wkb(&x).unwrap();
        assert_eq!(s.s, x);
        assert!(s.invariants.ok());
    }

    #[test]
    fn first_correction_for_single_term() {
        // exp(u xi^-1 / ℏ): x∘x = u^2 xi^-2 + ℏ u xi^-2, so the ℏ^-1 xi^-2
        // coefficient of the total symbol is u/2 and lands in S_0.
        let t = tr(1);
        let x = HSymbol::term(t, 0, -1, ScalarPoly::u(t.caps));
        let s = exp_to_wkb(&x).unwrap();
        assert_eq!(s.s.coeff(0, -1), ScalarPoly::u(t.caps));
        assert_eq!(s.s.coeff(0, -2), ScalarPoly::u(t.caps).scale(&rat(1, 2)));
        assert!(s.s.coeff(1, -2).is_zero());
        assert!(s.invariants.ok());
        let xx = circ_product(&x, &x).unwrap();
        assert_eq!(xx.coeff(1, -2), ScalarPoly::u(t.caps));
    }

    #[test]
    fn round_trip_with_s_dependence() {
        let t = tr(2);
        let caps = t.caps;
        let x = HSymbol::term(t, 0, -1, ScalarPoly::u(caps).mul(&ScalarPoly::l(caps)))
            .add(&HSymbol::term(t, 0, -2, ScalarPoly::t(caps, 1).mul(&ScalarPoly::u(caps).pow(2))))
            .unwrap()
            .add(&HSymbol::term(t, 2, -1, ScalarPoly::u(caps).pow(3)))
            .unwrap();
        let s = exp_to_wkb(&x).unwrap();
        assert!(s.invariants.ok(), "{:?}", s.invariants.violations);
        let (back, log) = wkb_to_exp(&s).unwrap();
        assert!(log.ok(), "{:?}", log.violations);
        assert_eq!(back, x);
    }

    #[test]
    fn bar_round_trip_keeps_phi() {
        let t = tr(1);
        let caps = t.caps;
        let xbar = HSymbol::term(t, 0, 1, ScalarPoly::u(caps).mul(&ScalarPoly::t(caps, 1)))
            .add(&HSymbol::term(t, 1, 2, ScalarPoly::u(caps)))
            .unwrap();
        let phi = vec![ScalarPoly::u(caps).mul(&ScalarPoly::l(caps)).neg(), ScalarPoly::l(caps).scale(&rat(1, 2))];
        let sb = exp_to_wkb_bar(&xbar, &phi).unwrap();
        assert_eq!(sb.s.coeff(0, 0), phi[0]);
        assert_eq!(sb.s.coeff(1, 0), phi[1]);
        let (back, phi_back, log) = wkb_to_exp_bar(&sb).unwrap();
        assert!(log.ok());
        assert_eq!(back, xbar);
        assert_eq!(phi_back, phi);
    }

    #[test]
    fn wrong_side_is_rejected() {
        let t = tr(0);
        let x = HSymbol::xi_pow(t, 1);
        assert!(matches!(exp_to_wkb(&x), Err(WkbError::WrongSupport(1))));
    }
}
