mod common;

use common::{caps, nilpotent, rng, scalar, symbol};
use num_traits::Zero;
use proptest::prelude::*;
use rand::Rng;
use toda_hbar::adjoint::{
    exp_ad, tilde_forward, tilde_forward_bar, tilde_inverse, tilde_inverse_bar, time_conjugate, Side,
};
use toda_hbar::rhsolver::preset::{c1_data, c1_seed};
use toda_hbar::rhsolver::{run, Config};
use toda_hbar::scalars::{rat, Caps, Monomial, QExp, Rat, ScalarPoly};
use toda_hbar::symbols::{
    circ_product, hbar_commutator, invert, poisson, Comparison, Expansion, HSymbol, Part, Truncation,
};
use toda_hbar::tau::{difference_check, extract_v, integrate_f, BernoulliTable, TauGradient};
use toda_hbar::verify::{check_wkb_oracle, verify_all, DiffOp};
use toda_hbar::wkb::{exp_to_wkb, exp_to_wkb_bar, wkb_to_exp, wkb_to_exp_bar};

fn agree(cmp: Comparison) -> Result<(), TestCaseError> {
    prop_assert!(cmp.ok(), "{:?}", cmp.mismatches);
    prop_assert!(cmp.checked > 0);
    Ok(())
}

fn window(seed: u64, n_hbar: u32) -> Truncation {
    Truncation::new(n_hbar, -4, 4, caps(&mut rng(seed)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn d_s_inverts_antideriv_s(seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = scalar(&mut r, Caps::new(2, 2, 2, 1));
        prop_assert_eq!(a.antideriv_s().d_s(), a);
    }

    #[test]
    fn antideriv_s_of_d_s_differs_by_a_constant(seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = scalar(&mut r, Caps::new(2, 2, 2, 1));
        let diff = a.d_s().antideriv_s().sub(&a);
        prop_assert!(diff.terms().keys().all(|m| m.u.is_zero() && m.l == 0));
    }

    #[test]
    fn ring_axioms(seed in any::<u64>()) {
        let mut r = rng(seed);
        let c = caps(&mut r);
        let (a, b, d) = (scalar(&mut r, c), scalar(&mut r, c), scalar(&mut r, c));
        prop_assert_eq!(a.mul(&b), b.mul(&a));
        prop_assert_eq!(a.mul(&b).mul(&d), a.mul(&b.mul(&d)));
        prop_assert_eq!(a.mul(&b.add(&d)), a.mul(&b).add(&a.mul(&d)));
    }

    #[test]
    fn truncation_is_an_ideal(seed in any::<u64>()) {
        let mut r = rng(seed);
        let big = Caps::new(2, 2, 4, 2);
        let small = caps(&mut r);
        let (a, b) = (scalar(&mut r, big), scalar(&mut r, big));
        prop_assert_eq!(a.mul(&b).with_caps(small), a.with_caps(small).mul(&b.with_caps(small)));
    }

    #[test]
    fn exp_scalar_is_multiplicative(seed in any::<u64>()) {
        let mut r = rng(seed);
        let c = Caps::new(2, 2, 2, 1);
        let log = |q: i64| ScalarPoly::l(c).scale(&rat(q, 2));
        let a = log(r.gen_range(-3..=3)).add(&nilpotent(&mut r, c));
        let b = log(r.gen_range(-3..=3)).add(&nilpotent(&mut r, c));
        let lhs = a.add(&b).exp_scalar().unwrap();
        prop_assert_eq!(lhs, a.exp_scalar().unwrap().mul(&b.exp_scalar().unwrap()));
    }

    #[test]
    fn circ_is_associative(seed in any::<u64>(), n_hbar in 0u32..=3) {
        let t = window(seed, n_hbar);
        let mut r = rng(seed ^ 1);
        let (a, b, c) = (symbol(&mut r, t, 3, -2..=2), symbol(&mut r, t, 3, -2..=2), symbol(&mut r, t, 3, -2..=2));
        let lhs = circ_product(&circ_product(&a, &b).unwrap(), &c).unwrap();
        let rhs = circ_product(&a, &circ_product(&b, &c).unwrap()).unwrap();
        agree(lhs.compare(&rhs).unwrap())?;
    }

    #[test]
    fn principal_symbol_is_multiplicative(seed in any::<u64>()) {
        let t = window(seed, 2);
        let t0 = t.with_n_hbar(0);
        let mut r = rng(seed ^ 2);
        let (a, b) = (symbol(&mut r, t0, 3, -2..=2).with_trunc(t), symbol(&mut r, t0, 3, -2..=2).with_trunc(t));
        let mut pointwise = HSymbol::zero(t0);
        for (m1, c1) in a.order(0) {
            for (m2, c2) in b.order(0) {
                pointwise = pointwise.add(&HSymbol::term(t0, 0, m1 + m2, c1.mul(c2))).unwrap();
            }
        }
        agree(circ_product(&a, &b).unwrap().principal().compare(&pointwise).unwrap())?;
    }

    #[test]
    fn commutator_leads_with_poisson_bracket(seed in any::<u64>()) {
        let t = window(seed, 2);
        let t0 = t.with_n_hbar(0);
        let mut r = rng(seed ^ 3);
        let (a, b) = (symbol(&mut r, t0, 3, -2..=2).with_trunc(t), symbol(&mut r, t0, 3, -2..=2).with_trunc(t));
        let comm = hbar_commutator(&a, &b).unwrap().principal();
        let pb = poisson(&a.principal(), &b.principal()).unwrap();
        prop_assert!(comm.compare(&pb).unwrap().ok());
    }

    #[test]
    fn projections_partition(seed in any::<u64>()) {
        let t = window(seed, 2);
        let a = symbol(&mut rng(seed ^ 4), t, 5, -4..=4);
        prop_assert_eq!(a.project(Part::GeqZero).add(&a.project(Part::LeqMinusOne)).unwrap(), a);
    }

    #[test]
    fn inverse_at_infinity(seed in any::<u64>(), n_hbar in 0u32..=2) {
        let t = Truncation::new(n_hbar, -6, 6, Caps::new(2, 2, 2, 0));
        let mut r = rng(seed ^ 5);
        let lead = ScalarPoly::monomial(t.caps, Monomial::ul(QExp::new(r.gen_range(-4..=4), 2), 0), rat(r.gen_range(1..=4), r.gen_range(1..=3)));
        let lead = lead.add(&nilpotent(&mut r, t.caps));
        let a = HSymbol::term(t, 0, 1, lead).add(&symbol(&mut r, t, 3, -2..=0)).unwrap();
        let inv = invert(&a, Expansion::AtInfinity).unwrap();
        agree(circ_product(&a, &inv).unwrap().compare(&HSymbol::one(t)).unwrap())?;
    }

    #[test]
    fn tilde_maps_round_trip(seed in any::<u64>()) {
        let t = Truncation::new(0, -5, 5, Caps::new(2, 2, 2, 1));
        let mut r = rng(seed ^ 6);
        let x0 = symbol(&mut r, t, 3, -3..=-1);
        let x = symbol(&mut r, t, 3, -3..=-1);
        let back = tilde_inverse(&x0, &tilde_forward(&x0, &x).unwrap()).unwrap();
        agree(back.compare(&x).unwrap())?;
        let xbar0 = symbol(&mut r, t, 3, 1..=3);
        let xbar = symbol(&mut r, t, 3, 1..=3);
        let u = ScalarPoly::u(t.caps);
        let phi0 = u.mul(&ScalarPoly::l(t.caps)).sub(&u).add(&nilpotent(&mut r, t.caps));
        let back = tilde_inverse_bar(&xbar0, &phi0, &tilde_forward_bar(&xbar0, &phi0, &xbar).unwrap()).unwrap();
        agree(back.compare(&xbar).unwrap())?;
    }

    #[test]
    fn exp_ad_is_multiplicative(seed in any::<u64>(), n_hbar in 0u32..=2) {
        let t = Truncation::new(n_hbar, -6, 6, Caps::new(2, 2, 2, 0));
        let mut r = rng(seed ^ 7);
        let x = symbol(&mut r, t, 3, -2..=-1);
        let (a, b) = (symbol(&mut r, t, 2, -1..=1), symbol(&mut r, t, 2, -1..=1));
        let lhs = exp_ad(&x, &circ_product(&a, &b).unwrap()).unwrap();
        let rhs = circ_product(&exp_ad(&x, &a).unwrap(), &exp_ad(&x, &b).unwrap()).unwrap();
        agree(lhs.compare(&rhs).unwrap())?;
    }

    #[test]
    fn diffop_oracle_matches_circ(seed in any::<u64>(), n_hbar in 0u32..=3) {
        let t = window(seed, n_hbar);
        let mut r = rng(seed ^ 8);
        let (a, b) = (symbol(&mut r, t, 4, -4..=4), symbol(&mut r, t, 4, -4..=4));
        let want = circ_product(&a, &b).unwrap();
        let got = DiffOp::from_symbol(&a).unwrap().op_mul(&DiffOp::from_symbol(&b).unwrap());
        prop_assert_eq!(got.total_symbol(want.determined()), want);
    }

    #[test]
    fn wkb_round_trip(seed in any::<u64>(), n_hbar in 0u32..=2) {
        let t = Truncation::new(n_hbar, -4, 4, Caps::new(2, 2, 2, 1));
        let mut r = rng(seed ^ 9);
        let x = symbol(&mut r, t, 4, -4..=-1);
        let s = exp_to_wkb(&x).unwrap();
        prop_assert!(s.invariants.ok(), "{:?}", s.invariants.violations);
        let (back, log) = wkb_to_exp(&s).unwrap();
        prop_assert!(log.ok(), "{:?}", log.violations);
        prop_assert_eq!(back, x);

        let xbar = symbol(&mut r, t, 4, 1..=4);
        let phi: Vec<ScalarPoly> = (0..=n_hbar).map(|_| scalar(&mut r, t.caps)).collect();
        let sb = exp_to_wkb_bar(&xbar, &phi).unwrap();
        prop_assert!(sb.invariants.ok());
        let (back, phi_back, log) = wkb_to_exp_bar(&sb).unwrap();
        prop_assert!(log.ok());
        prop_assert_eq!(back, xbar);
        prop_assert_eq!(phi_back, phi);
    }

    #[test]
    fn phase_orders_depend_only_on_lower_orders(seed in any::<u64>()) {
        let t = Truncation::new(2, -4, 4, Caps::new(2, 2, 2, 1));
        let mut r = rng(seed ^ 10);
        let x = symbol(&mut r, t, 4, -4..=-1);
        let bump = HSymbol::term(t, 2, r.gen_range(-4..=-1), scalar(&mut r, t.caps));
        let (s, s2) = (exp_to_wkb(&x).unwrap(), exp_to_wkb(&x.add(&bump).unwrap()).unwrap());
        prop_assert_eq!(s.order(0), s2.order(0));
        prop_assert_eq!(s.order(1), s2.order(1));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn wkb_matches_operator_exponential(seed in any::<u64>()) {
        let t = Truncation::new(1, -3, 3, Caps::new(2, 2, 1, 0));
        let mut r = rng(seed ^ 11);
        let x = symbol(&mut r, t, 3, -3..=-1);
        let line = check_wkb_oracle(&x, Side::Unbar, 1).unwrap();
        prop_assert!(line.ok(), "{}", line);
        let xbar = symbol(&mut r, t, 3, 1..=3);
        let line = check_wkb_oracle(&xbar, Side::Bar, 1).unwrap();
        prop_assert!(line.ok(), "{}", line);
    }

    #[test]
    fn shifted_string_data_solve_and_verify(num in -3i64..=3, den in 1i64..=3) {
        let shift = rat(num, den);
        let cfg = Config::new(2, -3, 3, 1, 0).unwrap();
        let t = cfg.working_trunc();
        let (data, seed) = (c1_data(t, &shift), c1_seed(t, &shift));
        let sol = run(&cfg, &data, &seed).unwrap();
        let again = run(&cfg, &data, &seed).unwrap();
        prop_assert_eq!(&sol.triple, &again.triple);
        for n in 0..=2 {
            prop_assert!(sol.triple.x_n(n).order(0).keys().all(|m| *m <= -1));
            prop_assert!(sol.triple.xbar_n(n).order(0).keys().all(|m| *m >= 1));
        }
        let report = verify_all(&data, &sol.triple, 2, 1).unwrap();
        prop_assert!(report.ok(), "{}", report.render());

        let s = exp_to_wkb(&sol.triple.x).unwrap();
        let sbar = exp_to_wkb_bar(&sol.triple.xbar, &sol.triple.phi).unwrap();
        let tables = extract_v(&s, &sbar).unwrap();
        let tau = integrate_f(&TauGradient::from_tables(&tables, &BernoulliTable::new(4))).unwrap();
        prop_assert!(tau.report.ok(), "{}", tau.report.render());
        prop_assert!(difference_check(&tau.f, &tables.phi).ok());
    }
}

#[test]
fn time_flows_preserve_canonical_pairs() {
    for t_deg in 0..=2 {
        let cfg = Config::new(2, -3, 3, t_deg, 0).unwrap();
        let t = cfg.working_trunc();
        let data = c1_data(t, &Rat::zero());
        for (f, g, side) in [(&data.f, &data.g, Side::Unbar), (&data.fbar, &data.gbar, Side::Bar)] {
            let p = time_conjugate(f, side).unwrap();
            let q = time_conjugate(g, side).unwrap();
            let cmp = hbar_commutator(&p, &q).unwrap().compare(&p).unwrap();
            assert!(cmp.ok(), "{:?}", cmp.mismatches);
        }
    }
}
