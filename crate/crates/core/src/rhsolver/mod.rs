//! Order-by-order solution of the ℏ-dependent Riemann-Hilbert problem.
//!
//! Starting from a dispersionless seed `(X_0, Xbar_0, phi_0)`, each order `i`
//! conjugates the data by the truncated dressing, reads off the order-`i`
//! discrepancy, integrates the resulting 2x2 linear system in `xi` and `s`,
//! splits the result into `X~_i`, `phi_i`, `Xbar~_i` and undoes the tilde map.

pub mod preset;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adjoint::{conj_by_phi, exp_ad, tilde_inverse, tilde_inverse_bar, time_conjugate, AdjointError, Side};
use crate::scalars::{Caps, ScalarPoly, TermDto};
use crate::symbols::{
    circ_product, hbar_commutator, invert, poisson, Comparison, Determined, Expansion, HSymbol, Part, SymbolDto,
    SymbolError, Truncation,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RhError {
    #[error("invalid Riemann-Hilbert data: {0}")]
    InvalidData(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("seed does not solve the dispersionless problem: {0}")]
    SeedRejected(String),
    #[error("order {order}: {what} failed: {detail}")]
    Inconsistent { order: u32, what: String, detail: String },
    #[error("order {order}: {what} is window-limited; {hint}")]
    WindowExhausted { order: u32, what: String, hint: String },
    #[error(transparent)]
    Adjoint(#[from] AdjointError),
    #[error(transparent)]
    Symbol(#[from] SymbolError),
}

/// Requested orders, window and degree caps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Config {
    pub n_hbar: u32,
    pub xi_lo: i64,
    pub xi_hi: i64,
    pub t_deg: u8,
    pub tbar_deg: u8,
    /// Extra exponents computed on each side and discarded at the end.
    pub margin: i64,
}

impl Config {
    pub fn new(n_hbar: u32, xi_lo: i64, xi_hi: i64, t_deg: u8, tbar_deg: u8) -> Result<Self, RhError> {
        if xi_lo > -1 || xi_hi < 1 {
            return Err(RhError::Config("window must contain xi^-1 and xi^1".into()));
        }
        if xi_hi > 60 || xi_lo < -60 {
            return Err(RhError::Config("window wider than 60 is not supported".into()));
        }
        Ok(Config { n_hbar, xi_lo, xi_hi, t_deg, tbar_deg, margin: n_hbar as i64 + 3 })
    }

    /// One time variable per positive (resp. negative) exponent of the window.
    pub fn caps(&self) -> Caps {
        Caps::new(self.xi_hi as u8, (-self.xi_lo) as u8, self.t_deg, self.tbar_deg)
    }

    pub fn trunc(&self) -> Truncation {
        Truncation::new(self.n_hbar, self.xi_lo, self.xi_hi, self.caps())
    }

    pub fn working_trunc(&self) -> Truncation {
        Truncation::new(self.n_hbar, self.xi_lo - self.margin, self.xi_hi + self.margin, self.caps())
    }
}

/// `(f, g, fbar, gbar)` with `[f, g] = ℏ f` and `[fbar, gbar] = ℏ fbar`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RhData {
    pub f: HSymbol,
    pub g: HSymbol,
    pub fbar: HSymbol,
    pub gbar: HSymbol,
}

impl RhData {
    pub fn new(f: HSymbol, g: HSymbol, fbar: HSymbol, gbar: HSymbol) -> Result<Self, RhError> {
        for (name, a, b) in [("(f, g)", &f, &g), ("(fbar, gbar)", &fbar, &gbar)] {
            let c = hbar_commutator(a, b)?;
            let cmp = c.compare(a)?;
            if !cmp.ok() {
                return Err(RhError::InvalidData(format!("{name} is not canonical: {:?}", cmp.mismatches[0])));
            }
        }
        Ok(RhData { f, g, fbar, gbar })
    }

    fn with_trunc(&self, t: Truncation) -> RhData {
        RhData {
            f: self.f.with_trunc(t),
            g: self.g.with_trunc(t),
            fbar: self.fbar.with_trunc(t),
            gbar: self.gbar.with_trunc(t),
        }
    }
}

/// Dispersionless solution.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Seed {
    pub x0: HSymbol,
    pub xbar0: HSymbol,
    pub phi0: ScalarPoly,
}

/// `W = exp(X/ℏ)`, `Wbar = exp(phi/ℏ) exp(Xbar/ℏ)` with `X = sum ℏ^n X_n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DressingTriple {
    pub x: HSymbol,
    pub xbar: HSymbol,
    pub phi: Vec<ScalarPoly>,
}

impl DressingTriple {
    pub fn trunc(&self) -> Truncation {
        self.x.trunc()
    }

    pub fn with_trunc(&self, t: Truncation) -> DressingTriple {
        let mut phi: Vec<ScalarPoly> =
            self.phi.iter().take(t.n_hbar as usize + 1).map(|p| p.with_caps(t.caps)).collect();
        phi.resize(t.n_hbar as usize + 1, ScalarPoly::zero(t.caps));
        DressingTriple { x: self.x.with_trunc(t), xbar: self.xbar.with_trunc(t), phi }
    }

    fn from_seed(seed: &Seed, t: Truncation) -> DressingTriple {
        let mut phi = vec![ScalarPoly::zero(t.caps); t.n_hbar as usize + 1];
        phi[0] = seed.phi0.with_caps(t.caps);
        DressingTriple { x: seed.x0.raise_to(t, 0), xbar: seed.xbar0.raise_to(t, 0), phi }
    }

    /// `X_n` as an order-0 symbol.
    pub fn x_n(&self, n: u32) -> HSymbol {
        self.x.sym_h(n)
    }

    pub fn xbar_n(&self, n: u32) -> HSymbol {
        self.xbar.sym_h(n)
    }

    pub fn to_dto(&self) -> TripleDto {
        TripleDto {
            schema: TRIPLE_SCHEMA,
            x: self.x.to_dto(),
            xbar: self.xbar.to_dto(),
            phi: self.phi.iter().map(ScalarPoly::to_dto).collect(),
        }
    }

    pub fn from_dto(dto: &TripleDto) -> Option<DressingTriple> {
        if dto.schema != TRIPLE_SCHEMA {
            return None;
        }
        let x = HSymbol::from_dto(&dto.x)?;
        let xbar = HSymbol::from_dto(&dto.xbar)?;
        if x.trunc() != xbar.trunc() || dto.phi.len() != x.trunc().n_hbar as usize + 1 {
            return None;
        }
        let phi = dto.phi.iter().map(|p| ScalarPoly::from_dto(x.caps(), p)).collect::<Option<Vec<_>>>()?;
        Some(DressingTriple { x, xbar, phi })
    }
}

pub const TRIPLE_SCHEMA: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TripleDto {
    pub schema: u32,
    pub x: SymbolDto,
    pub xbar: SymbolDto,
    pub phi: Vec<Vec<TermDto>>,
}

/// `Ad(W e^{zeta/ℏ})` and `Ad(Wbar e^{zetabar/ℏ})` applied to the data.
#[derive(Clone, Debug)]
pub struct Conjugated {
    pub p: HSymbol,
    pub q: HSymbol,
    pub pbar: HSymbol,
    pub qbar: HSymbol,
}

pub fn dress_unbar(triple: &DressingTriple, a: &HSymbol) -> Result<HSymbol, RhError> {
    Ok(exp_ad(&triple.x, &time_conjugate(a, Side::Unbar)?)?)
}

pub fn dress_bar(triple: &DressingTriple, a: &HSymbol) -> Result<HSymbol, RhError> {
    let inner = exp_ad(&triple.xbar, &time_conjugate(a, Side::Bar)?)?;
    Ok(conj_by_phi(&triple.phi, &inner)?)
}

/// Conjugates the data by the triple under the triple's truncation.
pub fn build_pq(data: &RhData, triple: &DressingTriple) -> Result<Conjugated, RhError> {
    let d = data.with_trunc(triple.trunc());
    Ok(Conjugated {
        p: dress_unbar(triple, &d.f)?,
        q: dress_unbar(triple, &d.g)?,
        pbar: dress_bar(triple, &d.fbar)?,
        qbar: dress_bar(triple, &d.gbar)?,
    })
}

/// Both Riemann-Hilbert equations on the common determined range.
pub fn rh_residual(c: &Conjugated) -> Result<Comparison, RhError> {
    let mut cmp = c.p.compare(&c.pbar)?;
    cmp.merge(c.q.compare(&c.qbar)?);
    Ok(cmp)
}

/// Checks the dispersionless problem for the seed.
pub fn verify_seed(data: &RhData, seed: &Seed, t: Truncation) -> Result<Comparison, RhError> {
    let t0 = t.with_n_hbar(0);
    let triple = DressingTriple::from_seed(seed, t0);
    rh_residual(&build_pq(data, &triple)?)
}

/// Diagnostics recorded for one order.
#[derive(Clone, Debug, Default)]
pub struct StepReport {
    pub order: u32,
    /// Lower orders of the two conjugated sides agree.
    pub lower_orders: Comparison,
    /// `∂_s` of the `xi`-integral against the `s`-row.
    pub cross_check: Comparison,
    pub compatibility: Comparison,
}

/// Result of a full run.
#[derive(Clone, Debug)]
pub struct Solution {
    pub config: Config,
    /// Triple restricted to the requested window.
    pub triple: DressingTriple,
    pub steps: Vec<StepReport>,
    /// Residual of the full equations at the final order.
    pub residual: Comparison,
}

fn fail(order: u32, what: &str, cmp: &Comparison) -> RhError {
    RhError::Inconsistent {
        order,
        what: what.into(),
        detail: format!("{} mismatches, first {:?}", cmp.mismatches.len(), cmp.mismatches.first()),
    }
}

fn strip_zero(a: &HSymbol) -> HSymbol {
    let c = a.coeff(0, 0);
    a.sub(&HSymbol::scalar(a.trunc(), c)).expect("same truncation")
}

/// `P0^{-1} (-D Q0 · P_i + D P0 · Q_i)` for a derivation `D`.
fn row(
    p0: &HSymbol,
    q0: &HSymbol,
    pi: &HSymbol,
    qi: &HSymbol,
    side: Expansion,
    d: impl Fn(&HSymbol) -> HSymbol,
) -> Result<HSymbol, RhError> {
    let inv = invert(p0, side)?;
    let inner = circ_product(&d(q0), pi)?.neg().add(&circ_product(&d(p0), qi)?)?;
    Ok(circ_product(&inv, &inner)?)
}

/// `P0^{-1} xi^{-1} (-P_i + {P_i, Q0} + {P0, Q_i})`.
fn compat_side(p0: &HSymbol, q0: &HSymbol, pi: &HSymbol, qi: &HSymbol, side: Expansion) -> Result<HSymbol, RhError> {
    let inner = pi.neg().add(&poisson(pi, q0)?)?.add(&poisson(p0, qi)?)?;
    Ok(circ_product(&invert(p0, side)?, &inner.mul_xi_pow(-1))?)
}

/// Output of one order: `(X_i, Xbar_i, phi_i)` as order-0 symbols and report.
struct Step {
    x: HSymbol,
    xbar: HSymbol,
    phi: ScalarPoly,
    report: StepReport,
}

fn solve_order(data: &RhData, triple: &DressingTriple, i: u32, seed: &Seed) -> Result<Step, RhError> {
    let c = build_pq(data, triple)?;
    let mut report = StepReport { order: i, ..Default::default() };
    for j in 0..i {
        report.lower_orders.merge(c.p.sym_h(j).compare(&c.pbar.sym_h(j))?);
        report.lower_orders.merge(c.q.sym_h(j).compare(&c.qbar.sym_h(j))?);
    }
    if !report.lower_orders.ok() {
        return Err(fail(i, "agreement of lower orders", &report.lower_orders));
    }
    let (p0, q0, pi, qi) = (c.p.sym_h(0), c.q.sym_h(0), c.p.sym_h(i), c.q.sym_h(i));
    let (pb0, qb0, pbi, qbi) = (c.pbar.sym_h(0), c.qbar.sym_h(0), c.pbar.sym_h(i), c.qbar.sym_h(i));

    let xi_row = row(&p0, &q0, &pi, &qi, Expansion::AtInfinity, HSymbol::xi_derivative)?.sub(&row(
        &pb0,
        &qb0,
        &pbi,
        &qbi,
        Expansion::AtZero,
        HSymbol::xi_derivative,
    )?)?;
    let s_row = row(&p0, &q0, &pi, &qi, Expansion::AtInfinity, HSymbol::d_s)?.sub(&row(
        &pb0,
        &qb0,
        &pbi,
        &qbi,
        Expansion::AtZero,
        HSymbol::d_s,
    )?)?;

    // -X~_i + phi_i + Xbar~_i
    let integral = xi_row.xi_antiderivative()?;
    report.cross_check = strip_zero(&integral.d_s()).compare(&strip_zero(&s_row))?;
    if !report.cross_check.ok() {
        return Err(fail(i, "xi/s integrability", &report.cross_check));
    }
    report.compatibility = compat_side(&p0, &q0, &pi, &qi, Expansion::AtInfinity)?.compare(&compat_side(
        &pb0,
        &qb0,
        &pbi,
        &qbi,
        Expansion::AtZero,
    )?)?;
    if !report.compatibility.ok() {
        return Err(fail(i, "compatibility", &report.compatibility));
    }
    if !s_row.is_determined(0) {
        return Err(RhError::WindowExhausted {
            order: i,
            what: "phi".into(),
            hint: "increase the window margin".into(),
        });
    }
    let phi = s_row.coeff(0, 0).antideriv_s();
    let xt = integral.project(Part::LeqMinusOne).neg();
    let xtb = strip_zero(&integral.project(Part::GeqZero));
    let x = tilde_inverse(&seed.x0, &xt)?;
    let xbar = tilde_inverse_bar(&seed.xbar0, &seed.phi0, &xtb)?;
    Ok(Step { x, xbar, phi, report })
}

fn check_window(cfg: &Config, order: u32, x: &HSymbol, xbar: &HSymbol) -> Result<(), RhError> {
    let hint = format!("rerun with a larger margin than {}", cfg.margin);
    if !x.is_determined(cfg.xi_lo) {
        return Err(RhError::WindowExhausted { order, what: format!("X_{order} at xi^{}", cfg.xi_lo), hint });
    }
    if !xbar.is_determined(cfg.xi_hi) {
        return Err(RhError::WindowExhausted { order, what: format!("Xbar_{order} at xi^{}", cfg.xi_hi), hint });
    }
    Ok(())
}

/// Solves to order `cfg.n_hbar` and checks the full equations at the end.
pub fn run(cfg: &Config, data: &RhData, seed: &Seed) -> Result<Solution, RhError> {
    let work = cfg.working_trunc();
    let data = data.with_trunc(work);
    let seed = Seed {
        x0: seed.x0.with_trunc(work.with_n_hbar(0)),
        xbar0: seed.xbar0.with_trunc(work.with_n_hbar(0)),
        phi0: seed.phi0.with_caps(work.caps),
    };
    let seed_cmp = verify_seed(&data, &seed, work)?;
    if !seed_cmp.ok() {
        return Err(RhError::SeedRejected(format!("{:?}", seed_cmp.mismatches.first())));
    }
    let mut triple = DressingTriple::from_seed(&seed, work);
    let mut steps = Vec::new();
    for i in 1..=cfg.n_hbar {
        let partial = triple.with_trunc(work.with_n_hbar(i));
        let step = solve_order(&data, &partial, i, &seed)?;
        check_window(cfg, i, &step.x, &step.xbar)?;
        triple.x = triple.x.add(&step.x.raise_to(work, i))?;
        triple.xbar = triple.xbar.add(&step.xbar.raise_to(work, i))?;
        triple.phi[i as usize] = step.phi;
        steps.push(step.report);
    }
    let residual = rh_residual(&build_pq(&data, &triple)?)?;
    if !residual.ok() {
        return Err(fail(cfg.n_hbar, "final Riemann-Hilbert residual", &residual));
    }
    let mut triple = triple.with_trunc(cfg.trunc());
    // only the requested window is reported as determined
    for a in [&mut triple.x, &mut triple.xbar] {
        let d = a.determined();
        *a = a.restrict(Determined { lo: d.lo.map(|_| cfg.xi_lo), hi: d.hi.map(|_| cfg.xi_hi) });
    }
    Ok(Solution { config: *cfg, triple, steps, residual })
}

impl RhData {
    /// Identity problem `f = fbar = xi`, `g = gbar = s`.
    pub fn identity(t: Truncation) -> RhData {
        RhData { f: HSymbol::xi_pow(t, 1), g: HSymbol::s(t), fbar: HSymbol::xi_pow(t, 1), gbar: HSymbol::s(t) }
    }
}

impl Seed {
    pub fn zero(t: Truncation) -> Seed {
        let t0 = t.with_n_hbar(0);
        Seed { x0: HSymbol::zero(t0), xbar0: HSymbol::zero(t0), phi0: ScalarPoly::zero(t.caps) }
    }
}

#[cfg(test)]
mod tests;
