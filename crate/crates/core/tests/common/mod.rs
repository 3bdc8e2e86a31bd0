#![allow(dead_code)]

use std::ops::RangeInclusive;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use toda_hbar::scalars::{rat, Caps, Monomial, QExp, ScalarPoly};
use toda_hbar::symbols::{HSymbol, Truncation};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub struct ScalarShape {
    /// Numerators of `u`-exponents over 2.
    pub u_halves: RangeInclusive<i64>,
    pub max_log: u32,
    pub terms: RangeInclusive<usize>,
}

impl Default for ScalarShape {
    fn default() -> Self {
        ScalarShape { u_halves: -4..=6, max_log: 2, terms: 1..=3 }
    }
}

fn time_monomial(rng: &mut ChaCha8Rng, caps: Caps, nilpotent: bool) -> Monomial {
    let mut m = Monomial::one();
    let lo = u8::from(nilpotent && caps.t_deg > 0);
    for _ in 0..rng.gen_range(lo..=caps.t_deg) {
        m = m.mul(&Monomial::t_var(rng.gen_range(1..=caps.n_t as usize)));
    }
    if caps.tbar_deg > 0 && caps.n_tbar > 0 && rng.gen_bool(0.3) {
        m = m.mul(&Monomial::tbar_var(rng.gen_range(1..=caps.n_tbar as usize)));
    }
    m
}

pub fn scalar_with(rng: &mut ChaCha8Rng, caps: Caps, shape: &ScalarShape) -> ScalarPoly {
    let mut out = ScalarPoly::zero(caps);
    for _ in 0..rng.gen_range(shape.terms.clone()) {
        let q = QExp::new(rng.gen_range(shape.u_halves.clone()), 2);
        let l = rng.gen_range(0..=shape.max_log);
        let m = Monomial::ul(q, l).mul(&time_monomial(rng, caps, false));
        let c = rat(rng.gen_range(-5..=5), rng.gen_range(1..=3));
        out = out.add(&ScalarPoly::monomial(caps, m, c));
    }
    out
}

pub fn scalar(rng: &mut ChaCha8Rng, caps: Caps) -> ScalarPoly {
    scalar_with(rng, caps, &ScalarShape::default())
}

/// Polynomial with every monomial of positive time degree.
pub fn nilpotent(rng: &mut ChaCha8Rng, caps: Caps) -> ScalarPoly {
    let mut out = ScalarPoly::zero(caps);
    for _ in 0..rng.gen_range(1..=3) {
        let q = QExp::from_integer(rng.gen_range(-1..=2));
        let m = Monomial::ul(q, rng.gen_range(0..=1)).mul(&time_monomial(rng, caps, true));
        out = out.add(&ScalarPoly::monomial(caps, m, rat(rng.gen_range(-3..=3), rng.gen_range(1..=2))));
    }
    out
}

/// Exact symbol with random terms at ℏ-orders `0..=n_hbar` and exponents in `xi`.
pub fn symbol(rng: &mut ChaCha8Rng, t: Truncation, terms: usize, xi: RangeInclusive<i64>) -> HSymbol {
    let mut out = HSymbol::zero(t);
    for _ in 0..terms {
        let n = rng.gen_range(0..=t.n_hbar);
        let m = rng.gen_range(xi.clone());
        let c = scalar_with(rng, t.caps, &ScalarShape { terms: 1..=2, ..Default::default() });
        out = out.add(&HSymbol::term(t, n, m, c)).unwrap();
    }
    out
}

pub fn caps(rng: &mut ChaCha8Rng) -> Caps {
    Caps::new(2, 2, rng.gen_range(0..=2), rng.gen_range(0..=1))
}
