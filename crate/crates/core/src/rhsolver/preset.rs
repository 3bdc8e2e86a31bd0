//! Built-in Riemann-Hilbert problems with known seeds, and the coefficient
//! tables of the `c = 1` string equation.

use std::fmt::Write as _;

use num_traits::{One, Zero};

use super::{DressingTriple, RhData, Seed};
use crate::scalars::{binom, qexp_to_string, rat, rat_int, rat_to_string, Monomial, QExp, Rat, ScalarPoly};
use crate::symbols::{HSymbol, Truncation};

/// `(u - ℏ) xi`, the symbol of `(1 - s - ℏ) e^{ℏ∂_s}`.
fn shifted_xi(t: Truncation) -> HSymbol {
    HSymbol::term(t, 0, 1, ScalarPoly::u(t.caps))
        .add(&HSymbol::term(t, 1, 1, ScalarPoly::constant(t.caps, rat(-1, 1))))
        .expect("same truncation")
}

/// String equation `f = xi, g = s, fbar = (1 - s - ℏ) xi, gbar = s + c fbar`.
/// `c = 0` is the `c = 1` string equation itself.
pub fn c1_data(t: Truncation, shift: &Rat) -> RhData {
    let fbar = shifted_xi(t);
    let gbar = HSymbol::s(t).add(&fbar.scale(shift)).expect("same truncation");
    RhData::new(HSymbol::xi_pow(t, 1), HSymbol::s(t), fbar, gbar).expect("canonical pair")
}

/// `X_0 = 0`, `Xbar_0 = sum t_n u^n xi^n - c u xi`, `phi_0 = -u log u + u`.
pub fn c1_seed(t: Truncation, shift: &Rat) -> Seed {
    let t0 = t.with_n_hbar(0);
    let caps = t.caps;
    let mut xbar0 = HSymbol::term(t0, 0, 1, ScalarPoly::u(caps).scale(&-shift.clone()));
    for n in 1..=caps.n_t as usize {
        let c = ScalarPoly::t(caps, n).mul(&ScalarPoly::u(caps).pow(n as u32));
        xbar0 = xbar0.add(&HSymbol::term(t0, 0, n as i64, c)).expect("same truncation");
    }
    let phi0 = ScalarPoly::u(caps).mul(&ScalarPoly::l(caps)).neg().add(&ScalarPoly::u(caps));
    Seed { x0: HSymbol::zero(t0), xbar0, phi0 }
}

/// Trivial problem `f = fbar = xi`, `g = gbar = s` with
/// `X_0 = sum tbar_n xi^-n`, `Xbar_0 = sum t_n xi^n`, `phi_0 = 0`.
pub fn vacuum(t: Truncation) -> (RhData, Seed) {
    let t0 = t.with_n_hbar(0);
    let caps = t.caps;
    let mut x0 = HSymbol::zero(t0);
    for n in 1..=caps.n_tbar as usize {
        x0 = x0.add(&HSymbol::term(t0, 0, -(n as i64), ScalarPoly::tbar(caps, n))).expect("same truncation");
    }
    let mut xbar0 = HSymbol::zero(t0);
    for n in 1..=caps.n_t as usize {
        xbar0 = xbar0.add(&HSymbol::term(t0, 0, n as i64, ScalarPoly::t(caps, n))).expect("same truncation");
    }
    (RhData::identity(t), Seed { x0, xbar0, phi0: ScalarPoly::zero(caps) })
}

/// `c_{0,m} = 1`, `c_{1,m} = -m(m+1)/2` and the printed `c_{2,m} = -m(m^2-1)(3m+2)/24`.
pub fn closed_form_cnm(n: u32, m: i64) -> Option<Rat> {
    match n {
        0 => Some(Rat::one()),
        1 => Some(rat(-m * (m + 1), 2)),
        2 => Some(rat(-m * (m * m - 1) * (3 * m + 2), 24)),
        _ => None,
    }
}

/// Printed closed forms of `phi_n`: `c_{1,0} = 1/2` for `log u`, `c_{2,0} = -1/12`.
pub fn closed_form_cn0(n: u32) -> Option<Rat> {
    match n {
        1 => Some(rat(1, 2)),
        2 => Some(rat(-1, 12)),
        _ => None,
    }
}

/// `c_{n,m}` from `n c_{n,m} = sum_{j<n} (-1)^{n-j} C(m-j+1, n-j+1) c_{j,m}`.
pub fn recursion_cnm(n_max: u32, m: i64) -> Vec<Rat> {
    let mut c = vec![Rat::one()];
    for n in 1..=n_max as i64 {
        let mut acc = Rat::zero();
        for j in 0..n {
            let sign = if (n - j) % 2 == 0 { Rat::one() } else { -Rat::one() };
            acc += sign * binom(&rat_int(m - j + 1), (n - j + 1) as u32) * &c[j as usize];
        }
        c.push(acc / rat_int(n));
    }
    c
}

/// `c_{n,0}` from the printed recursion with `k` read as `n`; index 0 is unused.
pub fn recursion_cn0(n_max: u32) -> Vec<Rat> {
    let mut c = vec![Rat::zero(), rat(1, 2)];
    for n in 2..=n_max as i64 {
        let mut acc = rat(1, n + 1) - &c[1] / rat_int(n);
        for j in 2..n {
            let sign = if (n - j) % 2 == 0 { Rat::one() } else { -Rat::one() };
            acc -= sign * binom(&rat_int(-j + 1), (n - j + 1) as u32) * &c[j as usize];
        }
        c.push(acc / rat_int(1 - n));
    }
    c.truncate(n_max as usize + 1);
    c
}

/// Coefficient tables extracted from a `c = 1` solution, with both references.
#[derive(Clone, Debug)]
pub struct CnmReport {
    /// `(n, m, solver, closed form, recursion)`.
    pub rows: Vec<(u32, i64, Option<Rat>, Option<Rat>, Rat)>,
    /// `(n, solver, closed form, recursion)`; `None` when `phi_n` leaves the Ansatz.
    pub phi_rows: Vec<(u32, Option<Rat>, Option<Rat>, Rat)>,
    /// Shape violations: terms of `X_n`, `Xbar_n` or `phi_n` outside the Ansatz.
    pub shape_errors: Vec<String>,
}

impl CnmReport {
    pub fn closed_form_mismatches(&self) -> usize {
        self.rows.iter().filter(|r| r.3.is_some() && r.2 != r.3).count()
            + self.phi_rows.iter().filter(|r| r.2.is_some() && r.1 != r.2).count()
    }

    pub fn recursion_mismatches(&self) -> usize {
        self.rows.iter().filter(|r| r.2.as_ref() != Some(&r.4)).count()
            + self.phi_rows.iter().filter(|r| r.0 >= 2 && r.1.as_ref() != Some(&r.3)).count()
    }

    pub fn render(&self) -> String {
        let show = |r: &Option<Rat>| r.as_ref().map(rat_to_string).unwrap_or_else(|| "-".into());
        let mut out = String::from("# n m solver closed_form recursion\n");
        for (n, m, s, c, r) in &self.rows {
            let _ = writeln!(out, "c[{n},{m}] {} {} {}", show(s), show(c), rat_to_string(r));
        }
        for (n, s, c, r) in &self.phi_rows {
            let _ = writeln!(out, "c[{n},0] {} {} {}", show(s), show(c), rat_to_string(r));
        }
        for e in &self.shape_errors {
            let _ = writeln!(out, "shape: {e}");
        }
        let _ = writeln!(
            out,
            "closed-form mismatches: {}\nrecursion mismatches: {}",
            self.closed_form_mismatches(),
            self.recursion_mismatches()
        );
        out
    }
}

/// Reads `c_{n,m}` as the coefficient of `t_m u^{m-n} xi^m` in `Xbar_n`
/// and `c_{n,0}` from `phi_n`.
pub fn check_cnm_tables(triple: &DressingTriple, n_max: u32) -> CnmReport {
    let caps = triple.trunc().caps;
    let n_max = n_max.min(triple.trunc().n_hbar);
    let mut report = CnmReport { rows: vec![], phi_rows: vec![], shape_errors: vec![] };
    let cn0 = recursion_cn0(n_max.max(1));
    for n in 0..=n_max {
        if !triple.x.sym_h(n).is_zero() {
            report.shape_errors.push(format!("X_{n} is nonzero"));
        }
        let xbar = triple.xbar.sym_h(n);
        let mut expected = HSymbol::zero(xbar.trunc());
        for m in 1..=caps.n_t as i64 {
            let mono = Monomial::t_var(m as usize).mul(&Monomial::ul(QExp::from_integer(m - n as i64), 0));
            let coeff = xbar.coeff(0, m);
            let solver = xbar.is_determined(m).then(|| coeff.coeff(&mono));
            if let Some(v) = &solver {
                let piece = ScalarPoly::monomial(caps, mono.clone(), v.clone());
                expected = expected.add(&HSymbol::term(xbar.trunc(), 0, m, piece)).expect("same truncation");
            }
            let rec = recursion_cnm(n, m)[n as usize].clone();
            report.rows.push((n, m, solver, closed_form_cnm(n, m), rec));
        }
        if !xbar.sub(&expected).expect("same truncation").is_zero() && n > 0 {
            report.shape_errors.push(format!("Xbar_{n} has terms outside t_m u^(m-{n}) xi^m"));
        }
        if n == 0 {
            continue;
        }
        let phi = &triple.phi[n as usize];
        let mono = if n == 1 {
            Monomial::ul(QExp::from_integer(0), 1)
        } else {
            Monomial::ul(QExp::from_integer(1 - n as i64), 0)
        };
        let v = phi.coeff(&mono);
        let rest = phi.sub(&ScalarPoly::monomial(caps, mono.clone(), v.clone()));
        let solver = if rest.is_zero() {
            Some(v)
        } else {
            report.shape_errors.push(format!("phi_{n} = {phi} is not c * {}", describe(&mono)));
            None
        };
        report.phi_rows.push((n, solver, closed_form_cn0(n), cn0[n as usize].clone()));
    }
    report
}

fn describe(m: &Monomial) -> String {
    if m.l > 0 {
        "log u".into()
    } else {
        format!("u^{}", qexp_to_string(&m.u))
    }
}
