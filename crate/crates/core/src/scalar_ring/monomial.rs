use std::fmt;

use super::cyclo::CycloRational;
use super::series::ScalarSeries;

/// A nonzero c * u^e.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct UnitMonomial {
    coeff: CycloRational,
    uexp: i64,
}

impl UnitMonomial {
    pub fn new(coeff: CycloRational, uexp: i64) -> Self {
        assert!(!coeff.is_zero(), "unit monomial with zero coefficient");
        UnitMonomial { coeff, uexp }
    }

    pub fn try_new(coeff: CycloRational, uexp: i64) -> Option<Self> {
        (!coeff.is_zero()).then_some(UnitMonomial { coeff, uexp })
    }

    pub fn one() -> Self {
        UnitMonomial { coeff: CycloRational::one(), uexp: 0 }
    }

    /// u^e
    pub fn u(e: i64) -> Self {
        UnitMonomial { coeff: CycloRational::one(), uexp: e }
    }

    /// q^e = u^{2e}
    pub fn q(e: i64) -> Self {
        Self::u(2 * e)
    }

    /// (+-1) u^e
    pub fn signed(negative: bool, e: i64) -> Self {
        UnitMonomial { coeff: CycloRational::from_int(if negative { -1 } else { 1 }), uexp: e }
    }

    pub fn int(c: i64, e: i64) -> Self {
        Self::new(CycloRational::from_int(c), e)
    }

    pub fn coeff(&self) -> &CycloRational {
        &self.coeff
    }

    pub fn uexp(&self) -> i64 {
        self.uexp
    }

    pub fn is_one(&self) -> bool {
        self.uexp == 0 && self.coeff.is_one()
    }

    pub fn mul(&self, o: &Self) -> Self {
        UnitMonomial { coeff: self.coeff.mul(&o.coeff), uexp: self.uexp + o.uexp }
    }

    pub fn inv(&self) -> Self {
        UnitMonomial { coeff: self.coeff.inv().expect("nonzero"), uexp: -self.uexp }
    }

    pub fn div(&self, o: &Self) -> Self {
        self.mul(&o.inv())
    }

    pub fn neg(&self) -> Self {
        UnitMonomial { coeff: self.coeff.neg(), uexp: self.uexp }
    }

    pub fn pow(&self, n: i64) -> Self {
        UnitMonomial { coeff: self.coeff.pow(n).expect("nonzero"), uexp: self.uexp * n }
    }

    /// An n-th root inside the monomial group of Q(zeta_m)((u)), if any.
    pub fn nth_root(&self, n: u32, m: u32) -> Option<Self> {
        if n == 0 || self.uexp % n as i64 != 0 {
            return None;
        }
        let c = self.coeff.nth_root(n, m)?;
        Some(UnitMonomial { coeff: c, uexp: self.uexp / n as i64 })
    }

    pub fn to_series(&self) -> ScalarSeries {
        ScalarSeries::monomial(self.coeff.clone(), self.uexp)
    }
}

impl fmt::Debug for UnitMonomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for UnitMonomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.uexp == 0 {
            write!(f, "{}", self.coeff)
        } else {
            write!(f, "{}*u^{}", self.coeff, self.uexp)
        }
    }
}
