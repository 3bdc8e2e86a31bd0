use super::*;
use crate::scalars::{rat, Monomial, QExp};

fn tr(n: u32) -> Truncation {
    Truncation::new(n, -6, 6, Caps::new(2, 2, 1, 1))
}

#[test]
fn xi_circ_s_shifts() {
    let t = tr(2);
    let lhs = circ_product(&HSymbol::xi_pow(t, 1), &HSymbol::s(t)).unwrap();
    let rhs = HSymbol::s(t).add(&HSymbol::hbar(t)).unwrap().mul_xi_pow(1);
    assert_eq!(lhs, rhs);
    let rev = circ_product(&HSymbol::s(t), &HSymbol::xi_pow(t, 1)).unwrap();
    assert_eq!(rev, HSymbol::s(t).mul_xi_pow(1));
}

#[test]
fn commutator_of_xi_and_s() {
    let t = tr(3);
    let c = hbar_commutator(&HSymbol::xi_pow(t, 1), &HSymbol::s(t)).unwrap();
    assert_eq!(c, HSymbol::xi_pow(t, 1));
}

#[test]
fn log_xi_acts_as_hbar_d_s() {
    let t = tr(2);
    let lx = HSymbol::log_xi(t, 0, Rat::one());
    let c = hbar_commutator(&lx, &HSymbol::s(t)).unwrap();
    assert_eq!(c, HSymbol::one(t));
    let u = HSymbol::scalar(t, ScalarPoly::u(t.caps));
    let prod = circ_product(&lx, &HSymbol::constant(t, rat(3, 1))).unwrap();
    assert_eq!(*prod.logxi(0), rat(3, 1));
    assert!(matches!(circ_product(&lx, &u), Err(SymbolError::UnrepresentableLog(_))));
}

#[test]
fn hbar_order_of_hbar_is_minus_one() {
    let t = tr(2);
    assert_eq!(HSymbol::hbar(t).hbar_order(), Some(-1));
    assert_eq!(HSymbol::xi_pow(t, 3).hbar_order(), Some(0));
    assert_eq!(HSymbol::zero(t).hbar_order(), None);
}

#[test]
fn inverse_of_xi_is_exact() {
    let t = tr(2);
    let inv = invert(&HSymbol::xi_pow(t, 1), Expansion::AtInfinity).unwrap();
    assert_eq!(inv, HSymbol::xi_pow(t, -1));
    assert_eq!(inv.chart(), Chart::Exact);
}

#[test]
fn inverse_of_binomial_is_a_series() {
    let t = tr(1);
    let a = HSymbol::xi_pow(t, 1).add(&HSymbol::one(t)).unwrap();
    let inv = invert(&a, Expansion::AtInfinity).unwrap();
    assert_eq!(inv.chart(), Chart::AtInfinity);
    for m in -6..=-1 {
        let sign = if (m + 1) % 2 == 0 { 1 } else { -1 };
        assert_eq!(inv.coeff(0, m), ScalarPoly::constant(t.caps, rat(sign, 1)));
    }
    let id = circ_product(&a, &inv).unwrap();
    assert!(id.compare(&HSymbol::one(t)).unwrap().ok());
    let inv0 = invert(&a, Expansion::AtZero).unwrap();
    assert_eq!(inv0.chart(), Chart::AtZero);
    assert_eq!(inv0.coeff(0, 0), ScalarPoly::one(t.caps));
}

#[test]
fn inverse_with_function_coefficient() {
    let t = tr(2);
    let caps = t.caps;
    let lead = ScalarPoly::u(caps).sub(&ScalarPoly::t(caps, 1));
    let a = HSymbol::term(t, 0, 1, lead).add(&HSymbol::hbar(t).mul_xi_pow(-1)).unwrap();
    let inv = invert(&a, Expansion::AtInfinity).unwrap();
    let left = circ_product(&inv, &a).unwrap();
    let right = circ_product(&a, &inv).unwrap();
    assert!(left.compare(&HSymbol::one(t)).unwrap().ok());
    assert!(right.compare(&HSymbol::one(t)).unwrap().ok());
}

#[test]
fn non_unit_leading_term_is_rejected() {
    let t = tr(1);
    let a = HSymbol::scalar(t, ScalarPoly::u(t.caps).add(&ScalarPoly::l(t.caps)));
    assert!(matches!(invert(&a, Expansion::AtInfinity), Err(SymbolError::NotInvertible(_))));
}

#[test]
fn incompatible_charts_are_rejected() {
    let t = tr(0);
    let a = HSymbol::xi_pow(t, 1).add(&HSymbol::one(t)).unwrap();
    let inf = invert(&a, Expansion::AtInfinity).unwrap();
    let zero = invert(&a, Expansion::AtZero).unwrap();
    assert!(matches!(circ_product(&inf, &zero), Err(SymbolError::ChartMismatch(..))));
}

#[test]
fn poisson_bracket_of_xi_and_s() {
    let t = tr(2);
    let p = poisson(&HSymbol::xi_pow(t, 2), &HSymbol::s(t)).unwrap();
    assert_eq!(p, HSymbol::xi_pow(t.with_n_hbar(0), 2).scale(&rat(2, 1)));
}

#[test]
fn projection_of_series_at_infinity_is_exact() {
    let t = tr(0);
    let a = HSymbol::xi_pow(t, 2).add(&HSymbol::xi_pow(t, 1)).unwrap();
    let inv = invert(&a, Expansion::AtInfinity).unwrap();
    let sq = power(&a, 2, Expansion::AtInfinity).unwrap();
    assert_eq!(sq.project(Part::GeqZero).chart(), Chart::Exact);
    let neg = inv.project(Part::LeqMinusOne);
    assert_eq!(neg.chart(), Chart::AtInfinity);
    assert!(inv.project(Part::GeqZero).is_zero());
}

#[test]
fn xi_antiderivative_produces_log() {
    let t = tr(0);
    let a = HSymbol::xi_pow(t, -1).scale(&rat(3, 2)).add(&HSymbol::xi_pow(t, 2)).unwrap();
    let i = a.xi_antiderivative().unwrap();
    assert_eq!(*i.logxi(0), rat(3, 2));
    assert_eq!(i.coeff(0, 3), ScalarPoly::constant(t.caps, rat(1, 3)));
    assert_eq!(i.xi_derivative(), a);
}

#[test]
fn window_overflow_marks_tail() {
    let t = Truncation::new(0, -2, 2, Caps::bare());
    let a = HSymbol::xi_pow(t, 2);
    let sq = circ_product(&a, &a).unwrap();
    assert!(sq.is_zero());
    assert_eq!(sq.determined().hi, Some(2));
}

#[test]
fn dto_round_trip() {
    let t = tr(1);
    let c = ScalarPoly::monomial(t.caps, Monomial::ul(QExp::new(1, 2), 2), rat(-5, 7));
    let a = HSymbol::term(t, 1, -3, c).add(&HSymbol::log_xi(t, 1, rat(1, 4))).unwrap();
    let json = serde_json::to_string(&a.to_dto()).unwrap();
    let back = HSymbol::from_dto(&serde_json::from_str(&json).unwrap()).unwrap();
    assert_eq!(a, back);
}
