use std::fmt;

use crate::error::{Error, Result};
use crate::scalar_ring::UnitMonomial;

/// A point of the commutative torus T(H,1)(K), i.e. a homomorphism H -> K*,
/// given by its values on the basis of H.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct TorusPoint {
    values: Vec<UnitMonomial>,
}

impl TorusPoint {
    pub fn new(values: Vec<UnitMonomial>) -> Self {
        TorusPoint { values }
    }

    pub fn identity(d: usize) -> Self {
        TorusPoint { values: vec![UnitMonomial::one(); d] }
    }

    /// The point h -> u^{e . h}.
    pub fn from_uexps(e: &[i64]) -> Self {
        TorusPoint { values: e.iter().map(|x| UnitMonomial::u(*x)).collect() }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[UnitMonomial] {
        &self.values
    }

    pub fn is_identity(&self) -> bool {
        self.values.iter().all(|v| v.is_one())
    }

    /// h(x) = prod x_i^{h_i}.
    pub fn eval(&self, h: &[i64]) -> UnitMonomial {
        assert_eq!(h.len(), self.values.len(), "point/vector dimension mismatch");
        let mut acc = UnitMonomial::one();
        for (v, k) in self.values.iter().zip(h) {
            if *k != 0 {
                acc = acc.mul(&v.pow(*k));
            }
        }
        acc
    }

    pub fn point_eval(&self, h: &[i64]) -> Result<UnitMonomial> {
        if h.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: h.len() });
        }
        Ok(self.eval(h))
    }

    /// u-exponent of h(x), linear in h.
    pub fn uexp_at(&self, h: &[i64]) -> i64 {
        self.values.iter().zip(h).map(|(v, k)| v.uexp() * k).sum()
    }

    pub fn mul(&self, o: &Self) -> Self {
        TorusPoint { values: self.values.iter().zip(&o.values).map(|(a, b)| a.mul(b)).collect() }
    }

    pub fn inv(&self) -> Self {
        TorusPoint { values: self.values.iter().map(|a| a.inv()).collect() }
    }

    pub fn div(&self, o: &Self) -> Self {
        self.mul(&o.inv())
    }

    pub fn pow(&self, n: i64) -> Self {
        TorusPoint { values: self.values.iter().map(|a| a.pow(n)).collect() }
    }

    /// Componentwise n-th root, if every component has one.
    pub fn nth_root(&self, n: u32, m: u32) -> Option<Self> {
        let values = self.values.iter().map(|v| v.nth_root(n, m)).collect::<Option<Vec<_>>>()?;
        Some(TorusPoint { values })
    }

    pub fn concat(&self, o: &Self) -> Self {
        let mut values = self.values.clone();
        values.extend(o.values.iter().cloned());
        TorusPoint { values }
    }
}

impl fmt::Debug for TorusPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluation() {
        let x = TorusPoint::new(vec![UnitMonomial::q(1), UnitMonomial::one()]);
        assert_eq!(x.eval(&[3, 0]), UnitMonomial::q(3));
        assert!(TorusPoint::identity(2).eval(&[5, -2]).is_one());
        let y = TorusPoint::new(vec![UnitMonomial::int(-1, 1), UnitMonomial::u(3)]);
        let h = [2, -1];
        assert_eq!(x.mul(&y).eval(&h), x.eval(&h).mul(&y.eval(&h)));
    }
}
