//! Expansion `log tau = sum_n ℏ^{n-2} F_n` from the WKB phases.
//!
//! The gradients of `F_n` in `s`, `t_j` and `tbar_j` are read off `S_n`,
//! `Sbar_n` and `phi_n`, checked for integrability and integrated.

use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adjoint::{bernoulli_numbers, Side};
use crate::scalars::{factorial, rat_int, Caps, Monomial, Rat, ScalarPoly, TermDto};
use crate::symbols::Slice;
use crate::verify::{CheckLine, Report};
use crate::wkb::WkbPhase;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TauError {
    #[error("expected the {0} phase")]
    WrongSide(&'static str),
    #[error("phases carry different time caps")]
    CapMismatch,
    #[error("d/d{b} dF_{n}/d{a} != d/d{a} dF_{n}/d{b}: {detail}")]
    CrossDerivative { n: u32, a: Var, b: Var, detail: String },
}

/// Independent variable of `F_n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Var {
    S,
    T(usize),
    Tbar(usize),
}

impl Var {
    fn differentiate(self, p: &ScalarPoly) -> ScalarPoly {
        match self {
            Var::S => p.d_s(),
            Var::T(j) => p.d_t(j),
            Var::Tbar(j) => p.d_tbar(j),
        }
    }

    /// Loss of exact time degrees under the derivative.
    fn loss(self) -> (i64, i64) {
        match self {
            Var::S => (0, 0),
            Var::T(_) => (1, 0),
            Var::Tbar(_) => (0, 1),
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::S => write!(f, "s"),
            Var::T(j) => write!(f, "t{j}"),
            Var::Tbar(j) => write!(f, "tb{j}"),
        }
    }
}

/// Coefficients `K_i` of `z/(e^z - 1) = sum_i K_i z^i`; `K_1 = -1/2` and
/// `K_{2p} = B_{2p}/(2p)!`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BernoulliTable {
    k: Vec<Rat>,
}

impl BernoulliTable {
    pub fn new(order: usize) -> Self {
        let b = bernoulli_numbers(order);
        let k = b.iter().enumerate().map(|(i, b)| b / factorial(i as u32)).collect();
        BernoulliTable { k }
    }

    pub fn order(&self) -> usize {
        self.k.len() - 1
    }

    pub fn k(&self, i: usize) -> Rat {
        assert!(i <= self.order(), "Bernoulli table too short");
        self.k[i].clone()
    }

    pub fn k2p(&self, p: usize) -> Rat {
        self.k(2 * p)
    }

    /// Coefficients of `(e^z - 1)/z * sum K_i z^i - 1` up to the table order.
    pub fn generating_residual(&self) -> Vec<Rat> {
        (0..=self.order())
            .map(|n| {
                let mut acc = Rat::zero();
                for i in 0..=n {
                    acc += &self.k[i] / factorial((n - i + 1) as u32);
                }
                if n == 0 {
                    acc -= Rat::one();
                }
                acc
            })
            .collect()
    }
}

/// `v_{n,k}`, `vbar_{n,k}` and `phi_n` read off the phases:
/// `S_n = -sum_k v_{n,k} xi^-k / k`, `Sbar_n = phi_n + sum_k vbar_{n,k} xi^k / k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VTables {
    pub caps: Caps,
    /// `v[n][k - 1]`.
    pub v: Vec<Vec<ScalarPoly>>,
    pub vbar: Vec<Vec<ScalarPoly>>,
    pub phi: Vec<ScalarPoly>,
}

impl VTables {
    pub fn n_hbar(&self) -> u32 {
        self.phi.len() as u32 - 1
    }

    /// Number of `t_j` covered by the window.
    pub fn j_t(&self) -> usize {
        self.v.first().map_or(0, Vec::len)
    }

    pub fn j_tbar(&self) -> usize {
        self.vbar.first().map_or(0, Vec::len)
    }

    /// `S_n` (or `Sbar_n`) rebuilt from the tables.
    pub fn phase_slice(&self, n: u32, side: Side) -> Slice {
        let n = n as usize;
        let mut out = Slice::new();
        match side {
            Side::Unbar => {
                for (i, v) in self.v[n].iter().enumerate() {
                    let k = i as i64 + 1;
                    if !v.is_zero() {
                        out.insert(-k, v.scale(&(-Rat::one() / rat_int(k))));
                    }
                }
            }
            Side::Bar => {
                if !self.phi[n].is_zero() {
                    out.insert(0, self.phi[n].clone());
                }
                for (i, v) in self.vbar[n].iter().enumerate() {
                    let k = i as i64 + 1;
                    if !v.is_zero() {
                        out.insert(k, v.scale(&(Rat::one() / rat_int(k))));
                    }
                }
            }
        }
        out
    }
}

pub fn extract_v(s: &WkbPhase, sbar: &WkbPhase) -> Result<VTables, TauError> {
    if s.side != Side::Unbar {
        return Err(TauError::WrongSide("unbar"));
    }
    if sbar.side != Side::Bar {
        return Err(TauError::WrongSide("bar"));
    }
    let caps = s.s.caps();
    if caps != sbar.s.caps() {
        return Err(TauError::CapMismatch);
    }
    let n_hbar = s.n_hbar().min(sbar.n_hbar());
    let depth = s.s.determined().lo.map_or(caps.n_t as usize, |lo| (-lo).max(0) as usize);
    let depth_bar = sbar.s.determined().hi.map_or(caps.n_tbar as usize, |hi| hi.max(0) as usize);
    let j_t = depth.min(caps.n_t as usize);
    let j_tbar = depth_bar.min(caps.n_tbar as usize);
    let mut tables = VTables { caps, v: vec![], vbar: vec![], phi: vec![] };
    for n in 0..=n_hbar {
        tables.v.push((1..=j_t).map(|k| s.s.coeff(n, -(k as i64)).scale(&-rat_int(k as i64))).collect());
        tables.vbar.push((1..=j_tbar).map(|k| sbar.s.coeff(n, k as i64).scale(&rat_int(k as i64))).collect());
        tables.phi.push(sbar.s.coeff(n, 0));
    }
    Ok(tables)
}

/// `dF_n/dt_j = v_{n,j} + sum_{k+l=j} (1/l) dv_{n-1,l}/dt_k`.
pub fn grad_t(tables: &VTables, n: u32, j: usize) -> ScalarPoly {
    let n = n as usize;
    let mut out = tables.v[n][j - 1].clone();
    if n > 0 {
        for k in 1..j {
            let l = j - k;
            out.add_assign(&tables.v[n - 1][l - 1].d_t(k).scale(&(Rat::one() / rat_int(l as i64))));
        }
    }
    out
}

/// `-dF_n/dtbar_j = vbar_{n,j} + dphi_{n-1}/dtbar_j + sum_{k+l=j} (1/l) dvbar_{n-1,l}/dtbar_k`.
pub fn grad_tbar(tables: &VTables, n: u32, j: usize) -> ScalarPoly {
    let n = n as usize;
    let mut out = tables.vbar[n][j - 1].clone();
    if n > 0 {
        out.add_assign(&tables.phi[n - 1].d_tbar(j));
        for k in 1..j {
            let l = j - k;
            out.add_assign(&tables.vbar[n - 1][l - 1].d_tbar(k).scale(&(Rat::one() / rat_int(l as i64))));
        }
    }
    out.neg()
}

/// `dF_n/ds = sum_i K_i d^i phi_{n-i}/ds^i`, i.e.
/// `phi_n - phi_{n-1}'/2 + sum_p K_{2p} phi_{n-2p}^{(2p)}`.
pub fn grad_s(phi: &[ScalarPoly], n: u32, table: &BernoulliTable) -> ScalarPoly {
    let n = n as usize;
    let mut out = ScalarPoly::zero(phi[n].caps());
    for i in 0..=n {
        let k = table.k(i);
        if !k.is_zero() {
            out.add_assign(&phi[n - i].d_s_n(i as u32).scale(&k));
        }
    }
    out
}

/// `phi_n - phi_{n-1}/2 + sum_p K_{2p} phi_{n-2p}` with no `s`-derivatives.
pub fn grad_s_printed(phi: &[ScalarPoly], n: u32, table: &BernoulliTable) -> ScalarPoly {
    let n = n as usize;
    let mut out = ScalarPoly::zero(phi[n].caps());
    for i in 0..=n {
        out.add_assign(&phi[n - i].scale(&table.k(i)));
    }
    out
}

/// A gradient component, exact up to the given time degrees.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Component {
    pub value: ScalarPoly,
    pub t_exact: i64,
    pub tbar_exact: i64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TauGradient {
    pub caps: Caps,
    pub ds: Vec<Component>,
    /// `dt[n][j - 1]`.
    pub dt: Vec<Vec<Component>>,
    pub dtbar: Vec<Vec<Component>>,
}

impl TauGradient {
    pub fn from_tables(tables: &VTables, table: &BernoulliTable) -> TauGradient {
        let caps = tables.caps;
        let (td, tbd) = (caps.t_deg as i64, caps.tbar_deg as i64);
        let mut g = TauGradient { caps, ds: vec![], dt: vec![], dtbar: vec![] };
        for n in 0..=tables.n_hbar() {
            g.ds.push(Component { value: grad_s(&tables.phi, n, table), t_exact: td, tbar_exact: tbd });
            g.dt.push(
                (1..=tables.j_t())
                    .map(|j| Component {
                        value: grad_t(tables, n, j),
                        t_exact: td - i64::from(n > 0 && j > 1),
                        tbar_exact: tbd,
                    })
                    .collect(),
            );
            g.dtbar.push(
                (1..=tables.j_tbar())
                    .map(|j| Component {
                        value: grad_tbar(tables, n, j),
                        t_exact: td,
                        tbar_exact: tbd - i64::from(n > 0),
                    })
                    .collect(),
            );
        }
        g
    }

    pub fn n_hbar(&self) -> u32 {
        self.ds.len() as u32 - 1
    }

    /// `s`, then `t_j` ascending, then `tbar_j` ascending.
    pub fn vars(&self) -> Vec<Var> {
        let mut out = vec![Var::S];
        out.extend((1..=self.dt.first().map_or(0, Vec::len)).map(Var::T));
        out.extend((1..=self.dtbar.first().map_or(0, Vec::len)).map(Var::Tbar));
        out
    }

    pub fn component(&self, n: u32, var: Var) -> &Component {
        let n = n as usize;
        match var {
            Var::S => &self.ds[n],
            Var::T(j) => &self.dt[n][j - 1],
            Var::Tbar(j) => &self.dtbar[n][j - 1],
        }
    }

    pub fn component_mut(&mut self, n: u32, var: Var) -> &mut Component {
        let n = n as usize;
        match var {
            Var::S => &mut self.ds[n],
            Var::T(j) => &mut self.dt[n][j - 1],
            Var::Tbar(j) => &mut self.dtbar[n][j - 1],
        }
    }
}

/// Compares `a` and `b` up to the given degrees. `None` when nothing is exact.
fn agree(a: &ScalarPoly, b: &ScalarPoly, td: i64, tbd: i64) -> Option<Result<usize, String>> {
    if td < 0 || tbd < 0 {
        return None;
    }
    let (a, b) = (a.truncate_degree(td, tbd), b.truncate_degree(td, tbd));
    let diff = a.sub(&b);
    if let Some((m, c)) = diff.terms().iter().next() {
        let one = ScalarPoly::monomial(a.caps(), m.clone(), Rat::one());
        return Some(Err(format!("{c} * {one} ({} terms)", diff.len())));
    }
    let mut keys: Vec<&Monomial> = a.terms().keys().chain(b.terms().keys()).collect();
    keys.sort();
    keys.dedup();
    Some(Ok(keys.len().max(1)))
}

/// Keeps monomials in `t_1..t_{t_max}`, `tbar_1..tbar_{tbar_max}` only.
fn set_later_zero(p: &ScalarPoly, t_max: usize, tbar_max: usize) -> ScalarPoly {
    let mut out = ScalarPoly::zero(p.caps());
    for (m, c) in p.terms() {
        if m.t.len() <= t_max && m.tbar.len() <= tbar_max {
            out.add_term(m.clone(), c.clone());
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TauExpansion {
    pub caps: Caps,
    pub f: Vec<ScalarPoly>,
    /// Cross-derivative and reconstruction checks.
    pub report: Report,
    /// Pairs with no exact coefficient at this truncation.
    pub unchecked: usize,
}

/// Integrates the gradient along `s`, then `t_1, t_2, ...`, then
/// `tbar_1, tbar_2, ...`, with the constant term of each `F_n` set to zero.
pub fn integrate_f(grad: &TauGradient) -> Result<TauExpansion, TauError> {
    let caps = grad.caps;
    let vars = grad.vars();
    let j_t = grad.dt.first().map_or(0, Vec::len);
    let mut out = TauExpansion { caps, f: vec![], report: Report::default(), unchecked: 0 };
    for n in 0..=grad.n_hbar() {
        let mut checked = 0;
        for (i, &a) in vars.iter().enumerate() {
            for &b in &vars[i + 1..] {
                let (ga, gb) = (grad.component(n, a), grad.component(n, b));
                let lhs = b.differentiate(&ga.value);
                let rhs = a.differentiate(&gb.value);
                let (lb, lb_bar) = b.loss();
                let (la, la_bar) = a.loss();
                let td = (ga.t_exact - lb).min(gb.t_exact - la);
                let tbd = (ga.tbar_exact - lb_bar).min(gb.tbar_exact - la_bar);
                match agree(&lhs, &rhs, td, tbd) {
                    None => out.unchecked += 1,
                    Some(Ok(c)) => checked += c,
                    Some(Err(detail)) => return Err(TauError::CrossDerivative { n, a, b, detail }),
                }
            }
        }
        out.report.lines.push(CheckLine::new(format!("cross F{n}"), "d_a dF/db = d_b dF/da", checked, None));

        let mut f = ScalarPoly::zero(caps);
        for &v in &vars {
            let g = &grad.component(n, v).value;
            let piece = match v {
                Var::S => set_later_zero(g, 0, 0).antideriv_s(),
                Var::T(j) => set_later_zero(g, j, 0).antideriv_time(j, false),
                Var::Tbar(j) => set_later_zero(g, j_t, j).antideriv_time(j, true),
            };
            f.add_assign(&piece);
        }
        let mut normalized = ScalarPoly::zero(caps);
        for (m, c) in f.terms() {
            if *m != Monomial::one() {
                normalized.add_term(m.clone(), c.clone());
            }
        }
        out.f.push(normalized);
    }
    for n in 0..=grad.n_hbar() {
        let mut checked = 0;
        let mut failure = None;
        for &v in &vars {
            let g = grad.component(n, v);
            let (l, lbar) = v.loss();
            let got = v.differentiate(&out.f[n as usize]);
            let td = (caps.t_deg as i64 - l).min(g.t_exact);
            let tbd = (caps.tbar_deg as i64 - lbar).min(g.tbar_exact);
            match agree(&got, &g.value, td, tbd) {
                None => {}
                Some(Ok(c)) => checked += c,
                Some(Err(e)) => {
                    failure.get_or_insert(format!("d{v}: {e}"));
                }
            }
        }
        out.report.lines.push(CheckLine::new(format!("integrated F{n}"), "dF/dx = gradient", checked, failure));
    }
    Ok(out)
}

/// `sum_{m=1}^{n+1} (1/m!) d^m F_{n+1-m}/ds^m = phi_n`, the `ℏ^n` coefficient
/// of `ℏ (e^{ℏ d/ds} - 1) log tau = phi`.
pub fn difference_check(f: &[ScalarPoly], phi: &[ScalarPoly]) -> Report {
    let mut report = Report::default();
    for n in 0..f.len().saturating_sub(1).min(phi.len()) {
        let mut lhs = ScalarPoly::zero(phi[n].caps());
        for m in 1..=n + 1 {
            lhs.add_assign(&f[n + 1 - m].d_s_n(m as u32).scale(&(Rat::one() / factorial(m as u32))));
        }
        let diff = lhs.sub(&phi[n]);
        let failure = (!diff.is_zero()).then(|| format!("residual {diff}"));
        report.lines.push(CheckLine::new(
            format!("difference phi{n}"),
            "sum_m d^m F_(n+1-m)/m! = phi_n",
            lhs.len().max(phi[n].len()).max(1),
            failure,
        ));
    }
    report
}

/// Vanishing of every gradient component of the odd `F_n`, which is what
/// excludes odd powers of ℏ from `log tau`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GenusReport {
    pub report: Report,
    pub unchecked: usize,
}

impl GenusReport {
    pub fn genus_form(&self) -> bool {
        self.report.ok()
    }

    pub fn render(&self) -> String {
        let mut out = self.report.render();
        out.push_str(&format!(
            "genus-form: {} ({} conditions unchecked at this truncation)\n",
            if self.genus_form() { "yes" } else { "no" },
            self.unchecked
        ));
        out
    }
}

pub fn genus_parity_check(grad: &TauGradient) -> GenusReport {
    let mut out = GenusReport { report: Report::default(), unchecked: 0 };
    let zero = ScalarPoly::zero(grad.caps);
    for n in (1..=grad.n_hbar()).step_by(2) {
        for v in grad.vars() {
            let g = grad.component(n, v);
            match agree(&g.value, &zero, g.t_exact, g.tbar_exact) {
                None => out.unchecked += 1,
                Some(Ok(c)) => {
                    out.report.lines.push(CheckLine::new(format!("genus F{n} d{v}"), "odd gradient = 0", c, None))
                }
                Some(Err(e)) => {
                    out.report.lines.push(CheckLine::new(format!("genus F{n} d{v}"), "odd gradient = 0", 0, Some(e)))
                }
            }
        }
    }
    out
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TauDto {
    pub f: Vec<Vec<TermDto>>,
    pub phi: Vec<Vec<TermDto>>,
    pub v: Vec<Vec<Vec<TermDto>>>,
    pub vbar: Vec<Vec<Vec<TermDto>>>,
    pub genus_form: bool,
}

impl TauDto {
    pub fn new(tables: &VTables, expansion: &TauExpansion, genus: &GenusReport) -> TauDto {
        let rows = |t: &Vec<Vec<ScalarPoly>>| t.iter().map(|r| r.iter().map(ScalarPoly::to_dto).collect()).collect();
        TauDto {
            f: expansion.f.iter().map(ScalarPoly::to_dto).collect(),
            phi: tables.phi.iter().map(ScalarPoly::to_dto).collect(),
            v: rows(&tables.v),
            vbar: rows(&tables.vbar),
            genus_form: genus.genus_form(),
        }
    }
}
