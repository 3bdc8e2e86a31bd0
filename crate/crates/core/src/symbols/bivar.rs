//! Symbols in two copies `(s, xi)` and `(s', xi')` of the phase-space
//! variables, used by the WKB recursions.

use std::collections::BTreeMap;
use std::fmt;

use super::Slice;
use crate::scalars::{rat_int, Caps, DoubledScalar, Rat, ScalarPoly};

/// `sum a_{e,e'}(s, s') xi^e xi'^e'` with a single ℏ-order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BivarSymbol {
    caps: Caps,
    terms: BTreeMap<(i64, i64), DoubledScalar>,
}

impl BivarSymbol {
    pub fn zero(caps: Caps) -> Self {
        BivarSymbol { caps, terms: BTreeMap::new() }
    }

    /// `a(s, xi)`.
    pub fn unprimed(caps: Caps, a: &Slice) -> Self {
        let mut out = Self::zero(caps);
        for (m, c) in a {
            out.insert((*m, 0), DoubledScalar::unprimed(c));
        }
        out
    }

    /// `a(s', xi')`.
    pub fn primed(caps: Caps, a: &Slice) -> Self {
        let mut out = Self::zero(caps);
        for (m, c) in a {
            out.insert((0, *m), DoubledScalar::primed(c));
        }
        out
    }

    pub fn terms(&self) -> &BTreeMap<(i64, i64), DoubledScalar> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Independent of `(s', xi')`.
    pub fn is_unprimed(&self) -> bool {
        self.terms.iter().all(|((_, e2), c)| *e2 == 0 && c.is_unprimed())
    }

    /// Smallest and largest total degree `e + e'`.
    pub fn degree_range(&self) -> Option<(i64, i64)> {
        let degs = self.terms.keys().map(|(a, b)| a + b);
        let lo = degs.clone().min()?;
        Some((lo, degs.max()?))
    }

    fn insert(&mut self, key: (i64, i64), c: DoubledScalar) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&key) {
            Some(v) => {
                v.add_assign(&c);
                if v.is_zero() {
                    self.terms.remove(&key);
                }
            }
            None => {
                self.terms.insert(key, c);
            }
        }
    }

    pub fn add_assign(&mut self, other: &BivarSymbol) {
        for (k, v) in &other.terms {
            self.insert(*k, v.clone());
        }
    }

    pub fn scale(&self, c: &Rat) -> BivarSymbol {
        let mut out = Self::zero(self.caps);
        for (k, v) in &self.terms {
            out.insert(*k, v.scale(c));
        }
        out
    }

    /// `xi ∂_xi` on the unprimed exponent.
    pub fn theta_xi(&self) -> BivarSymbol {
        let mut out = Self::zero(self.caps);
        for ((e1, e2), v) in &self.terms {
            if *e1 != 0 {
                out.insert((*e1, *e2), v.scale(&rat_int(*e1)));
            }
        }
        out
    }

    /// `∂_{s'}`.
    pub fn d_s_prime(&self) -> BivarSymbol {
        let mut out = Self::zero(self.caps);
        for (k, v) in &self.terms {
            out.insert(*k, v.d_s_prime());
        }
        out
    }

    /// Pointwise product keeping only total degrees accepted by `keep`.
    pub fn mul(&self, other: &BivarSymbol, keep: impl Fn(i64) -> bool) -> BivarSymbol {
        let mut out = Self::zero(self.caps);
        for ((a1, a2), va) in &self.terms {
            for ((b1, b2), vb) in &other.terms {
                if keep(a1 + a2 + b1 + b2) {
                    out.insert((a1 + b1, a2 + b2), va.mul(vb));
                }
            }
        }
        out
    }

    /// Part of total degree `deg`.
    pub fn homogeneous(&self, deg: i64) -> BivarSymbol {
        let mut out = Self::zero(self.caps);
        for ((e1, e2), v) in &self.terms {
            if e1 + e2 == deg {
                out.terms.insert((*e1, *e2), v.clone());
            }
        }
        out
    }

    /// Restriction to `s' = s`, `xi' = xi`.
    pub fn eval_diagonal(&self) -> Slice {
        let mut out: BTreeMap<i64, ScalarPoly> = BTreeMap::new();
        for ((e1, e2), v) in &self.terms {
            let d = v.eval_diagonal();
            let entry = out.entry(e1 + e2).or_insert_with(|| ScalarPoly::zero(self.caps));
            entry.add_assign(&d);
        }
        out.retain(|_, c| !c.is_zero());
        out
    }
}

impl fmt::Display for BivarSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self.terms.iter().map(|((a, b), v)| format!("[{v}]*xi^{a}*xi'^{b}")).collect();
        write!(f, "{}", parts.join(" + "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_of_product_is_pointwise_product() {
        let caps = Caps::bare();
        let mut a = Slice::new();
        a.insert(-1, ScalarPoly::l(caps));
        a.insert(-2, ScalarPoly::u(caps));
        let mut b = Slice::new();
        b.insert(-1, ScalarPoly::u(caps).pow(2));
        let p = BivarSymbol::unprimed(caps, &a).mul(&BivarSymbol::primed(caps, &b), |_| true);
        let d = p.eval_diagonal();
        assert_eq!(d[&-2], ScalarPoly::l(caps).mul(&ScalarPoly::u(caps).pow(2)));
        assert_eq!(d[&-3], ScalarPoly::u(caps).pow(3));
        assert!(!p.is_unprimed());
        assert!(BivarSymbol::unprimed(caps, &a).is_unprimed());
    }
}
