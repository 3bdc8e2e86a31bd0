//! Independent checks of solver output: Lax and Orlov-Schulman equations,
//! canonical commutation relations, the Riemann-Hilbert condition by direct
//! substitution, the dispersionless limit, and the operator-exponential
//! oracle for WKB phases.

pub mod diffop;

use std::fmt::{self, Write as _};

use num_traits::Zero;
use thiserror::Error;

use crate::adjoint::{conj_by_phi, exp_ad, time_conjugate, AdjointError, Side};
use crate::rhsolver::{DressingTriple, RhData};
use crate::scalars::{Monomial, Rat, ScalarPoly};
use crate::symbols::{
    circ_product, hbar_commutator, invert, poisson, power, Chart, Comparison, Determined, Expansion, HSymbol, Part,
    SymbolError,
};
use crate::wkb::{exp_to_wkb_orders, WkbError};

pub use diffop::{exp_phase, exp_total_symbol, DiffOp, Laurent};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VerifyError {
    #[error(transparent)]
    Adjoint(#[from] AdjointError),
    #[error(transparent)]
    Symbol(#[from] SymbolError),
    #[error(transparent)]
    Wkb(#[from] WkbError),
    #[error(transparent)]
    Rh(#[from] crate::rhsolver::RhError),
}

/// One named check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckLine {
    pub name: String,
    pub equation: String,
    pub checked: usize,
    /// First offending coefficient and the number of mismatches.
    pub failure: Option<String>,
}

impl CheckLine {
    pub fn new(
        name: impl Into<String>,
        equation: impl Into<String>,
        checked: usize,
        failure: Option<String>,
    ) -> CheckLine {
        CheckLine { name: name.into(), equation: equation.into(), checked, failure }
    }

    pub(crate) fn from_cmp(name: impl Into<String>, equation: impl Into<String>, cmp: &Comparison) -> CheckLine {
        let failure = cmp
            .mismatches
            .first()
            .map(|(n, m, d)| format!("hbar^{n} xi^{m}: {d} ({} mismatches)", cmp.mismatches.len()));
        CheckLine { name: name.into(), equation: equation.into(), checked: cmp.checked, failure }
    }

    pub fn ok(&self) -> bool {
        self.failure.is_none()
    }
}

impl fmt::Display for CheckLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.failure {
            None => write!(f, "{:<28} {:<34} PASS ({} coefficients)", self.name, self.equation, self.checked),
            Some(e) => write!(f, "{:<28} {:<34} FAIL {e}", self.name, self.equation),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Report {
    pub lines: Vec<CheckLine>,
}

impl Report {
    pub fn ok(&self) -> bool {
        self.lines.iter().all(CheckLine::ok)
    }

    pub fn extend(&mut self, other: Report) {
        self.lines.extend(other.lines);
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for l in &self.lines {
            let _ = writeln!(out, "{l}");
        }
        out
    }
}

/// Dressed Lax and Orlov-Schulman operators with the flow generators.
#[derive(Clone, Debug)]
pub struct LaxPack {
    pub l: HSymbol,
    pub lbar: HSymbol,
    pub m: HSymbol,
    pub mbar: HSymbol,
    /// `B_n = (L^n)_{>=0}` for `n = 1..`.
    pub b: Vec<HSymbol>,
    /// `Bbar_n = (Lbar^{-n})_{<=-1}` for `n = 1..`.
    pub bbar: Vec<HSymbol>,
}

/// `L = Ad(W) xi`, `Lbar = Ad(Wbar) xi`, `M = Ad(W e^{zeta/ℏ}) s`,
/// `Mbar = Ad(Wbar e^{zetabar/ℏ}) s`, with `n_max` flow generators per side.
pub fn dress_lax(triple: &DressingTriple, n_max: usize) -> Result<LaxPack, VerifyError> {
    let t = triple.trunc();
    let xi = HSymbol::xi_pow(t, 1);
    let s = HSymbol::s(t);
    let l = exp_ad(&triple.x, &xi)?;
    let m = exp_ad(&triple.x, &time_conjugate(&s, Side::Unbar)?)?;
    let lbar = conj_by_phi(&triple.phi, &exp_ad(&triple.xbar, &xi)?)?;
    let mbar = conj_by_phi(&triple.phi, &exp_ad(&triple.xbar, &time_conjugate(&s, Side::Bar)?)?)?;
    let lbar_inv = invert(&lbar, Expansion::AtZero)?;
    let mut b = Vec::new();
    let mut bbar = Vec::new();
    for n in 1..=n_max as i64 {
        b.push(power(&l, n, Expansion::AtInfinity)?.project(Part::GeqZero));
        bbar.push(power(&lbar_inv, n, Expansion::AtZero)?.project(Part::LeqMinusOne));
    }
    Ok(LaxPack { l, lbar, m, mbar, b, bbar })
}

fn cmp_trunc(a: &HSymbol, b: &HSymbol, t_deg: i64, tbar_deg: i64) -> Result<Comparison, SymbolError> {
    a.truncate_degree(t_deg, tbar_deg).compare(&b.truncate_degree(t_deg, tbar_deg))
}

/// `ℏ ∂L/∂t_n = [B_n, L]`, `ℏ ∂L/∂tbar_n = [Bbar_n, L]` and the same for
/// `Lbar`, `M`, `Mbar`. Derivatives lose one degree of the time truncation, so
/// comparisons stop one degree short; with a zero cap the flow is not checked.
pub fn check_lax(pack: &LaxPack) -> Result<Report, VerifyError> {
    let caps = pack.l.caps();
    let (td, tbd) = (caps.t_deg as i64, caps.tbar_deg as i64);
    let mut report = Report::default();
    let targets = [("L", &pack.l), ("Lbar", &pack.lbar), ("M", &pack.m), ("Mbar", &pack.mbar)];
    for (name, z) in targets {
        for (i, bn) in pack.b.iter().enumerate().take(caps.n_t as usize) {
            let n = i + 1;
            let mut cmp = Comparison::default();
            if td > 0 {
                cmp = cmp_trunc(&z.d_t(n), &hbar_commutator(bn, z)?, td - 1, tbd)?;
            }
            report.lines.push(CheckLine::from_cmp(
                format!("lax {name} t{n}"),
                format!("hbar d{name}/dt{n} = [B{n},{name}]"),
                &cmp,
            ));
        }
        for (i, bn) in pack.bbar.iter().enumerate().take(caps.n_tbar as usize) {
            let n = i + 1;
            let mut cmp = Comparison::default();
            if tbd > 0 {
                cmp = cmp_trunc(&z.d_tbar(n), &hbar_commutator(bn, z)?, td, tbd - 1)?;
            }
            report.lines.push(CheckLine::from_cmp(
                format!("lax {name} tb{n}"),
                format!("hbar d{name}/dtb{n} = [Bbar{n},{name}]"),
                &cmp,
            ));
        }
    }
    Ok(report)
}

/// `[L, M] = ℏ L` and `[Lbar, Mbar] = ℏ Lbar`.
pub fn check_ccr(pack: &LaxPack) -> Result<Report, VerifyError> {
    let mut report = Report::default();
    let c = hbar_commutator(&pack.l, &pack.m)?.compare(&pack.l)?;
    report.lines.push(CheckLine::from_cmp("ccr", "[L,M] = hbar L", &c));
    let c = hbar_commutator(&pack.lbar, &pack.mbar)?.compare(&pack.lbar)?;
    report.lines.push(CheckLine::from_cmp("ccr bar", "[Lbar,Mbar] = hbar Lbar", &c));
    Ok(report)
}

/// `f(ℏ, M, L)` for `f = sum ℏ^n c_{n,m}(u) xi^m` with coefficients polynomial
/// in `u = 1 - s`, ordered with functions of `M` to the left of powers of `L`.
/// `None` when a coefficient is not polynomial in `u`.
pub fn substitute(
    f: &HSymbol,
    m_op: &HSymbol,
    l_op: &HSymbol,
    side: Expansion,
) -> Result<Option<HSymbol>, VerifyError> {
    let t = m_op.trunc();
    let caps = t.caps;
    let u_op = HSymbol::one(t).sub(m_op)?;
    let mut out = HSymbol::zero(t);
    let ft = f.trunc();
    for n in 0..=ft.n_hbar.min(t.n_hbar) {
        if !f.logxi(n).is_zero() {
            return Ok(None);
        }
        for (m, c) in f.order(n) {
            let mut coeff = HSymbol::zero(t);
            for (mono, v) in c.terms() {
                if mono.l != 0 || !mono.u.is_integer() || *mono.u.numer() < 0 {
                    return Ok(None);
                }
                let time = Monomial { t: mono.t.clone(), tbar: mono.tbar.clone(), ..Monomial::one() };
                let k = *mono.u.numer();
                let uk = power(&u_op, k, side)?;
                coeff = coeff.add(&uk.mul_scalar(&ScalarPoly::monomial(caps, time, v.clone())))?;
            }
            let term = circ_product(&coeff, &power(l_op, *m, side)?)?;
            out = out.add(&term.hbar_shift(n))?;
        }
    }
    Ok(Some(out))
}

/// `f(M, L) = fbar(Mbar, Lbar)` and `g(M, L) = gbar(Mbar, Lbar)` by direct
/// substitution. Falls back to the conjugated form when the data is not
/// polynomial in `s`.
pub fn check_rh(pack: &LaxPack, data: &RhData, triple: &DressingTriple) -> Result<Report, VerifyError> {
    let t = pack.l.trunc();
    let mut report = Report::default();
    let pairs = [("f", &data.f, &data.fbar), ("g", &data.g, &data.gbar)];
    let mut fallback = false;
    for (name, a, abar) in pairs {
        let (a, abar) = (a.with_trunc(t), abar.with_trunc(t));
        let lhs = substitute(&a, &pack.m, &pack.l, Expansion::AtInfinity)?;
        let rhs = substitute(&abar, &pack.mbar, &pack.lbar, Expansion::AtZero)?;
        match (lhs, rhs) {
            (Some(l), Some(r)) => {
                let cmp = l.compare(&r)?;
                report.lines.push(CheckLine::from_cmp(
                    format!("rh {name}"),
                    format!("{name}(M,L) = {name}bar(Mbar,Lbar)"),
                    &cmp,
                ));
            }
            _ => fallback = true,
        }
    }
    if fallback {
        let c = crate::rhsolver::build_pq(data, triple).map_err(|e| match e {
            crate::rhsolver::RhError::Symbol(s) => VerifyError::Symbol(s),
            crate::rhsolver::RhError::Adjoint(a) => VerifyError::Adjoint(a),
            other => VerifyError::Symbol(SymbolError::NotInvertible(other.to_string())),
        })?;
        let cmp = crate::rhsolver::rh_residual(&c)?;
        report.lines.push(CheckLine::from_cmp("rh conjugated", "Ad(W)(f,g) = Ad(Wbar)(fbar,gbar)", &cmp));
    }
    Ok(report)
}

/// Order-0 parts: `∂L/∂t_n = {B_n, L}` etc. with principal symbols, and
/// `{L, M} = L`.
pub fn check_dispersionless(pack: &LaxPack) -> Result<Report, VerifyError> {
    let caps = pack.l.caps();
    let (td, tbd) = (caps.t_deg as i64, caps.tbar_deg as i64);
    let (l, lbar, m, mbar) = (pack.l.principal(), pack.lbar.principal(), pack.m.principal(), pack.mbar.principal());
    let lbar_inv = invert(&lbar, Expansion::AtZero)?;
    let mut report = Report::default();
    for (name, z) in [("L", &l), ("Lbar", &lbar), ("M", &m), ("Mbar", &mbar)] {
        for n in 1..=pack.b.len().min(caps.n_t as usize) {
            let bn = power(&l, n as i64, Expansion::AtInfinity)?.project(Part::GeqZero);
            let mut cmp = Comparison::default();
            if td > 0 {
                cmp = cmp_trunc(&z.d_t(n), &poisson(&bn, z)?, td - 1, tbd)?;
            }
            report.lines.push(CheckLine::from_cmp(
                format!("dispersionless {name} t{n}"),
                format!("d{name}/dt{n} = {{B{n},{name}}}"),
                &cmp,
            ));
        }
        for n in 1..=pack.bbar.len().min(caps.n_tbar as usize) {
            let bn = power(&lbar_inv, n as i64, Expansion::AtZero)?.project(Part::LeqMinusOne);
            let mut cmp = Comparison::default();
            if tbd > 0 {
                cmp = cmp_trunc(&z.d_tbar(n), &poisson(&bn, z)?, td, tbd - 1)?;
            }
            report.lines.push(CheckLine::from_cmp(
                format!("dispersionless {name} tb{n}"),
                format!("d{name}/dtb{n} = {{Bbar{n},{name}}}"),
                &cmp,
            ));
        }
    }
    let c = poisson(&l, &m)?.compare(&l)?;
    report.lines.push(CheckLine::from_cmp("dispersionless ccr", "{L,M} = L", &c));
    let c = poisson(&lbar, &mbar)?.compare(&lbar)?;
    report.lines.push(CheckLine::from_cmp("dispersionless ccr bar", "{Lbar,Mbar} = Lbar", &c));
    Ok(report)
}

/// `L = xi + O(xi^0)` and the charts of `L`, `Lbar`. The `log xi` slot of `M`
/// holds a rational per order, so it is constant by construction.
pub fn check_shapes(pack: &LaxPack) -> Report {
    let mut report = Report::default();
    let top = pack.l.principal().coeff(0, 1);
    let failure = (top != ScalarPoly::one(pack.l.caps())).then(|| format!("leading coefficient of L is {top}"));
    report.lines.push(CheckLine { name: "shape L".into(), equation: "L = xi + O(xi^0)".into(), checked: 1, failure });
    let above = pack.l.orders().iter().flat_map(|sl| sl.keys()).any(|m| *m > 1);
    report.lines.push(CheckLine {
        name: "shape L tail".into(),
        equation: "no xi^m with m > 1 in L".into(),
        checked: 1,
        failure: above.then(|| "L has exponents above 1".into()),
    });
    let charts_ok = matches!(pack.l.chart(), Chart::AtInfinity | Chart::Exact)
        && matches!(pack.lbar.chart(), Chart::AtZero | Chart::Exact);
    report.lines.push(CheckLine {
        name: "shape charts".into(),
        equation: "L at infinity, Lbar at zero".into(),
        checked: 1,
        failure: (!charts_ok).then(|| format!("{:?} / {:?}", pack.l.chart(), pack.lbar.chart())),
    });
    report
}

/// Total symbol of `exp(X/ℏ)` against `exp(S/ℏ)` up to `ℏ^j_max`, with `S`
/// from the forward WKB recursion.
pub fn check_wkb_oracle(x: &HSymbol, side: Side, j_max: i64) -> Result<CheckLine, VerifyError> {
    let t = x.trunc();
    let x = &HSymbol::from_parts(t, x.orders().to_vec(), vec![Rat::zero(); t.n_hbar as usize + 1], Determined::EXACT);
    let depth = match side {
        Side::Unbar => -t.xi_lo,
        Side::Bar => t.xi_hi,
    };
    let n_out = (j_max + depth).max(0) as u32;
    let s = match side {
        Side::Unbar => exp_to_wkb_orders(x, n_out)?.s,
        Side::Bar => crate::wkb::exp_to_wkb_bar_orders(x, n_out)?.s,
    };
    let brute = exp_total_symbol(x, side, j_max);
    let phase = exp_phase(&s, side, j_max);
    let mut checked = 0;
    let mut failure = None;
    let mut keys: Vec<_> = brute.terms().keys().chain(phase.terms().keys()).cloned().collect();
    keys.sort();
    keys.dedup();
    let zero = ScalarPoly::zero(t.caps);
    for k in keys {
        checked += 1;
        let a = brute.terms().get(&k).unwrap_or(&zero);
        let b = phase.terms().get(&k).unwrap_or(&zero);
        if a != b && failure.is_none() {
            failure = Some(format!("hbar^{} xi^{}: {} vs {}", k.0, k.1, a, b));
        }
    }
    let name = match side {
        Side::Unbar => "wkb oracle",
        Side::Bar => "wkb oracle bar",
    };
    Ok(CheckLine { name: name.into(), equation: "totsym exp(X/hbar) = exp(S/hbar)".into(), checked, failure })
}

/// Every check on a solved triple.
pub fn verify_all(
    data: &RhData,
    triple: &DressingTriple,
    n_max: usize,
    wkb_orders: i64,
) -> Result<Report, VerifyError> {
    let pack = dress_lax(triple, n_max)?;
    let mut report = check_shapes(&pack);
    report.extend(check_lax(&pack)?);
    report.extend(check_ccr(&pack)?);
    report.extend(check_rh(&pack, data, triple)?);
    report.extend(check_dispersionless(&pack)?);
    report.lines.push(check_wkb_oracle(&triple.x, Side::Unbar, wkb_orders)?);
    report.lines.push(check_wkb_oracle(&triple.xbar, Side::Bar, wkb_orders)?);
    Ok(report)
}
