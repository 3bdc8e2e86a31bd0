//! Functions of two copies `(s, s')` of the space variable sharing one set of
//! time variables.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};

use super::{qexp_to_rat, rat_int, Caps, Monomial, QExp, Rat, ScalarPoly};

/// Sum of `u'^q * l'^j * p(t, tbar, u, l)`, keyed by the primed exponents.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DoubledScalar {
    caps: Caps,
    terms: BTreeMap<(QExp, u32), ScalarPoly>,
}

impl DoubledScalar {
    pub fn zero(caps: Caps) -> Self {
        DoubledScalar { caps, terms: BTreeMap::new() }
    }

    /// Function of the unprimed variable only.
    pub fn unprimed(p: &ScalarPoly) -> Self {
        let mut d = Self::zero(p.caps());
        d.insert((QExp::zero(), 0), p.clone());
        d
    }

    /// `p(s')`: the space dependence moves to the primed slot.
    pub fn primed(p: &ScalarPoly) -> Self {
        let caps = p.caps();
        let mut d = Self::zero(caps);
        for (m, c) in p.terms() {
            let part = ScalarPoly::monomial(caps, m.time_part(), c.clone());
            d.insert((m.u, m.l), part);
        }
        d
    }

    pub fn caps(&self) -> Caps {
        self.caps
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &BTreeMap<(QExp, u32), ScalarPoly> {
        &self.terms
    }

    /// Independent of the primed variable.
    pub fn is_unprimed(&self) -> bool {
        self.terms.keys().all(|k| *k == (QExp::zero(), 0))
    }

    fn insert(&mut self, key: (QExp, u32), p: ScalarPoly) {
        if p.is_zero() {
            return;
        }
        match self.terms.get_mut(&key) {
            Some(v) => {
                v.add_assign(&p);
                if v.is_zero() {
                    self.terms.remove(&key);
                }
            }
            None => {
                self.terms.insert(key, p);
            }
        }
    }

    pub fn add(&self, other: &DoubledScalar) -> DoubledScalar {
        assert_eq!(self.caps, other.caps, "mixed truncation caps");
        let mut out = self.clone();
        for (k, v) in &other.terms {
            out.insert(*k, v.clone());
        }
        out
    }

    pub fn add_assign(&mut self, other: &DoubledScalar) {
        assert_eq!(self.caps, other.caps, "mixed truncation caps");
        for (k, v) in &other.terms {
            self.insert(*k, v.clone());
        }
    }

    pub fn scale(&self, c: &Rat) -> DoubledScalar {
        let mut out = Self::zero(self.caps);
        for (k, v) in &self.terms {
            out.insert(*k, v.scale(c));
        }
        out
    }

    pub fn mul(&self, other: &DoubledScalar) -> DoubledScalar {
        assert_eq!(self.caps, other.caps, "mixed truncation caps");
        let mut out = Self::zero(self.caps);
        for ((qa, ja), va) in &self.terms {
            for ((qb, jb), vb) in &other.terms {
                out.insert((qa + qb, ja + jb), va.mul(vb));
            }
        }
        out
    }

    /// `d/ds` on the unprimed variable.
    pub fn d_s(&self) -> DoubledScalar {
        let mut out = Self::zero(self.caps);
        for (k, v) in &self.terms {
            out.insert(*k, v.d_s());
        }
        out
    }

    /// `d/ds'` on the primed variable.
    pub fn d_s_prime(&self) -> DoubledScalar {
        let mut out = Self::zero(self.caps);
        for ((q, j), v) in &self.terms {
            let q1 = q - QExp::one();
            if !q.is_zero() {
                out.insert((q1, *j), v.scale(&-qexp_to_rat(q)));
            }
            if *j > 0 {
                out.insert((q1, j - 1), v.scale(&-rat_int(*j as i64)));
            }
        }
        out
    }

    /// Restriction to `s' = s`.
    pub fn eval_diagonal(&self) -> ScalarPoly {
        let mut out = ScalarPoly::zero(self.caps);
        for ((q, j), v) in &self.terms {
            out.add_assign(&v.mul_monomial(&Monomial::ul(*q, *j), &Rat::one()));
        }
        out
    }
}

impl fmt::Display for DoubledScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|((q, j), v)| {
                let m = Monomial::ul(*q, *j);
                if m == Monomial::one() {
                    format!("({v})")
                } else {
                    format!("({v})*{}'", m)
                }
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_of_primed_is_identity() {
        let c = Caps::new(2, 0, 1, 0);
        let p = ScalarPoly::l(c).mul(&ScalarPoly::u(c)).add(&ScalarPoly::t(c, 2));
        assert_eq!(DoubledScalar::primed(&p).eval_diagonal(), p);
        assert_eq!(DoubledScalar::unprimed(&p).eval_diagonal(), p);
    }

    #[test]
    fn primed_derivative_matches_ordinary_derivative() {
        let c = Caps::new(1, 0, 1, 0);
        let p = ScalarPoly::l(c).pow(2).mul(&ScalarPoly::u(c)).add(&ScalarPoly::t(c, 1).mul(&ScalarPoly::l(c)));
        let d = DoubledScalar::primed(&p).d_s_prime();
        assert_eq!(d.eval_diagonal(), p.d_s());
        assert!(DoubledScalar::primed(&p).d_s().is_zero());
    }

    #[test]
    fn product_then_diagonal_is_product() {
        let c = Caps::bare();
        let a = ScalarPoly::l(c);
        let b = ScalarPoly::u(c).pow(3);
        let d = DoubledScalar::unprimed(&a).mul(&DoubledScalar::primed(&b));
        assert_eq!(d.eval_diagonal(), a.mul(&b));
    }
}
