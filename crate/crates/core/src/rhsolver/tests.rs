use super::preset::{c1_data, c1_seed, check_cnm_tables, vacuum};
use super::*;
use crate::scalars::{rat, Monomial, QExp, Rat};
use num_traits::Zero;

fn c1(n_hbar: u32, t_deg: u8) -> Solution {
    let cfg = Config::new(n_hbar, -3, 3, t_deg, 0).unwrap();
    let t = cfg.working_trunc();
    run(&cfg, &c1_data(t, &Rat::zero()), &c1_seed(t, &Rat::zero())).unwrap()
}

#[test]
fn c1_seed_solves_dispersionless_problem() {
    let cfg = Config::new(0, -3, 3, 1, 0).unwrap();
    let t = cfg.working_trunc();
    let cmp = verify_seed(&c1_data(t, &Rat::zero()), &c1_seed(t, &Rat::zero()), t).unwrap();
    assert!(cmp.ok(), "{:?}", cmp.mismatches);
    assert!(cmp.checked > 0);
}

#[test]
fn c1_first_order() {
    let sol = c1(1, 1);
    let tr = sol.triple;
    let caps = tr.trunc().caps;
    assert!(tr.x_n(1).is_zero());
    assert_eq!(tr.phi[1], ScalarPoly::l(caps).scale(&rat(1, 2)));
    let xb = tr.xbar_n(1);
    for n in 1..=3i64 {
        let mono = Monomial::t_var(n as usize).mul(&Monomial::ul(QExp::from_integer(n - 1), 0));
        let want = ScalarPoly::monomial(caps, mono, rat(-n * (n + 1), 2));
        assert_eq!(xb.coeff(0, n), want, "n = {n}");
    }
}

#[test]
fn c1_second_order_phi() {
    let sol = c1(2, 1);
    let caps = sol.triple.trunc().caps;
    let want = ScalarPoly::monomial(caps, Monomial::ul(QExp::from_integer(-1), 0), rat(-1, 12));
    assert_eq!(sol.triple.phi[2], want);
    let report = check_cnm_tables(&sol.triple, 2);
    assert!(report.shape_errors.is_empty(), "{:?}", report.shape_errors);
}

#[test]
fn vacuum_stays_trivial() {
    let cfg = Config::new(2, -2, 2, 1, 1).unwrap();
    let t = cfg.working_trunc();
    let (data, seed) = vacuum(t);
    let sol = run(&cfg, &data, &seed).unwrap();
    for n in 1..=2 {
        assert!(sol.triple.x_n(n).is_zero());
        assert!(sol.triple.xbar_n(n).is_zero());
        assert!(sol.triple.phi[n as usize].is_zero());
    }
}

#[test]
fn bad_seed_is_rejected() {
    let cfg = Config::new(1, -2, 2, 1, 0).unwrap();
    let t = cfg.working_trunc();
    let seed = Seed::zero(t);
    let err = run(&cfg, &c1_data(t, &Rat::zero()), &seed).unwrap_err();
    assert!(matches!(err, RhError::SeedRejected(_)), "{err}");
}

#[test]
fn non_canonical_data_is_rejected() {
    let t = Truncation::new(1, -2, 2, Caps::bare());
    let f = HSymbol::xi_pow(t, 1);
    let g = HSymbol::s(t).scale(&rat(2, 1));
    assert!(matches!(RhData::new(f.clone(), g, f, HSymbol::s(t)), Err(RhError::InvalidData(_))));
}

#[test]
fn triple_json_round_trip() {
    let cfg = Config::new(1, -2, 2, 1, 0).unwrap();
    let t = cfg.working_trunc();
    let sol = run(&cfg, &c1_data(t, &Rat::zero()), &c1_seed(t, &Rat::zero())).unwrap();
    let text = serde_json::to_string(&sol.triple.to_dto()).unwrap();
    let back: TripleDto = serde_json::from_str(&text).unwrap();
    assert_eq!(DressingTriple::from_dto(&back).unwrap(), sol.triple);
}
