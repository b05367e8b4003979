//! Truncated Laurent series in u = q^{1/2} with cyclotomic coefficients.

use std::collections::BTreeMap;
use std::fmt;

use super::cyclo::CycloRational;
use super::monomial::UnitMonomial;
use crate::error::{Error, Result};

/// Order sentinel of a series known exactly (no truncation).
pub const EXACT: i64 = i64::MAX;

/// Adds orders/exponents, keeping `EXACT` absorbing.
pub fn ord_add(a: i64, b: i64) -> i64 {
    if a == EXACT || b == EXACT {
        EXACT
    } else {
        a.saturating_add(b).min(EXACT - 1)
    }
}

/// A truncated Laurent series sum_{e <= N} a_e u^e.
///
/// Exponents above `order` are unknown. `order == EXACT` marks a Laurent
/// polynomial known exactly.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ScalarSeries {
    terms: BTreeMap<i64, CycloRational>,
    order: i64,
}

impl ScalarSeries {
    pub fn zero() -> Self {
        ScalarSeries { terms: BTreeMap::new(), order: EXACT }
    }

    /// Zero known up to u^order.
    pub fn zero_to(order: i64) -> Self {
        ScalarSeries { terms: BTreeMap::new(), order }
    }

    pub fn one() -> Self {
        Self::constant(CycloRational::one())
    }

    pub fn constant(c: CycloRational) -> Self {
        Self::monomial(c, 0)
    }

    pub fn monomial(c: CycloRational, e: i64) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(e, c);
        }
        ScalarSeries { terms, order: EXACT }
    }

    pub fn u_pow(e: i64) -> Self {
        Self::monomial(CycloRational::one(), e)
    }

    /// Collects terms, summing repeated exponents and dropping anything above `order`.
    pub fn from_terms<I: IntoIterator<Item = (i64, CycloRational)>>(it: I, order: i64) -> Self {
        let mut terms: BTreeMap<i64, CycloRational> = BTreeMap::new();
        for (e, c) in it {
            if e > order || c.is_zero() {
                continue;
            }
            match terms.get_mut(&e) {
                Some(x) => *x = x.add(&c),
                None => {
                    terms.insert(e, c);
                }
            }
        }
        terms.retain(|_, c| !c.is_zero());
        ScalarSeries { terms, order }
    }

    pub fn from_int_terms(t: &[(i64, i64)], order: i64) -> Self {
        Self::from_terms(t.iter().map(|&(e, c)| (e, CycloRational::from_int(c))), order)
    }

    pub fn order(&self) -> i64 {
        self.order
    }

    pub fn is_exact(&self) -> bool {
        self.order == EXACT
    }

    pub fn terms(&self) -> &BTreeMap<i64, CycloRational> {
        &self.terms
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Coefficient of u^e, or `None` when e lies beyond the truncation order.
    pub fn coeff(&self, e: i64) -> Option<CycloRational> {
        if e > self.order {
            return None;
        }
        Some(self.terms.get(&e).cloned().unwrap_or_else(CycloRational::zero))
    }

    /// Smallest stored exponent; `None` stands for +infinity.
    pub fn valuation(&self) -> Option<i64> {
        self.terms.keys().next().copied()
    }

    /// Valuation lower bound usable in precision bookkeeping: a truncated
    /// zero is only known to vanish through its order.
    fn eff_val(&self) -> i64 {
        match self.valuation() {
            Some(v) => v,
            None => ord_add(self.order, 1),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_exact_zero(&self) -> bool {
        self.terms.is_empty() && self.order == EXACT
    }

    /// The single term, if this is an exact monomial.
    pub fn as_monomial(&self) -> Option<UnitMonomial> {
        if self.order != EXACT || self.terms.len() != 1 {
            return None;
        }
        let (e, c) = self.terms.iter().next().unwrap();
        Some(UnitMonomial::new(c.clone(), *e))
    }

    pub fn truncate(&self, n: i64) -> Self {
        if n >= self.order {
            return self.clone();
        }
        ScalarSeries {
            terms: self.terms.range(..=n).map(|(e, c)| (*e, c.clone())).collect(),
            order: n,
        }
    }

    /// Raises the known order of a series that is zero through its order,
    /// when an external bound guarantees it vanishes up to `o`.
    pub fn with_zero_through(mut self, o: i64) -> Self {
        if self.terms.is_empty() && self.order < o {
            self.order = o;
        }
        self
    }

    pub fn neg(&self) -> Self {
        ScalarSeries {
            terms: self.terms.iter().map(|(e, c)| (*e, c.neg())).collect(),
            order: self.order,
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        let order = self.order.min(o.order);
        let mut terms: BTreeMap<i64, CycloRational> =
            self.terms.range(..=order).map(|(e, c)| (*e, c.clone())).collect();
        for (e, c) in o.terms.range(..=order) {
            match terms.get_mut(e) {
                Some(x) => *x = x.add(c),
                None => {
                    terms.insert(*e, c.clone());
                }
            }
        }
        terms.retain(|_, c| !c.is_zero());
        ScalarSeries { terms, order }
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    /// Product, exact up to min(N_a + v_b, N_b + v_a).
    pub fn mul(&self, o: &Self) -> Self {
        let (va, vb) = (self.eff_val(), o.eff_val());
        let order = ord_add(self.order, vb).min(ord_add(o.order, va));
        if self.terms.is_empty() || o.terms.is_empty() {
            return ScalarSeries { terms: BTreeMap::new(), order };
        }
        if self.terms.len() == 1 || o.terms.len() == 1 {
            let (mono, other) = if self.terms.len() == 1 { (self, o) } else { (o, self) };
            let (e0, c0) = mono.terms.iter().next().unwrap();
            let terms = other
                .terms
                .iter()
                .map(|(e, c)| (e + e0, c.mul(c0)))
                .take_while(|(e, _)| *e <= order)
                .collect();
            return ScalarSeries { terms, order };
        }
        let lo = va + vb;
        let hi_a = *self.terms.keys().next_back().unwrap();
        let hi_b = *o.terms.keys().next_back().unwrap();
        let hi = (hi_a + hi_b).min(order);
        if hi < lo {
            return ScalarSeries { terms: BTreeMap::new(), order };
        }
        let mut acc: Vec<Option<CycloRational>> = vec![None; (hi - lo + 1) as usize];
        for (ea, ca) in &self.terms {
            for (eb, cb) in &o.terms {
                let e = ea + eb;
                if e > hi {
                    break;
                }
                let p = ca.mul(cb);
                let slot = &mut acc[(e - lo) as usize];
                *slot = Some(match slot.take() {
                    Some(x) => x.add(&p),
                    None => p,
                });
            }
        }
        let terms = acc
            .into_iter()
            .enumerate()
            .filter_map(|(i, c)| c.filter(|c| !c.is_zero()).map(|c| (lo + i as i64, c)))
            .collect();
        ScalarSeries { terms, order }
    }

    pub fn mul_scalar(&self, c: &CycloRational) -> Self {
        if c.is_zero() {
            return ScalarSeries { terms: BTreeMap::new(), order: self.order };
        }
        ScalarSeries {
            terms: self.terms.iter().map(|(e, x)| (*e, x.mul(c))).collect(),
            order: self.order,
        }
    }

    /// Multiplication by a unit monomial c u^k; shifts the order by k.
    pub fn scale(&self, m: &UnitMonomial) -> Self {
        let k = m.uexp();
        ScalarSeries {
            terms: self.terms.iter().map(|(e, x)| (e + k, x.mul(m.coeff()))).collect(),
            order: ord_add(self.order, k),
        }
    }

    /// Inverse exact up to N - 2v, where N is the order and v the valuation.
    pub fn invert(&self) -> Result<Self> {
        if self.is_exact() {
            if let Some(m) = self.as_monomial() {
                return Ok(m.inv().to_series());
            }
            return Err(Error::NotInvertible(
                "exact series with several terms needs an explicit order".into(),
            ));
        }
        let v = self
            .valuation()
            .ok_or_else(|| Error::NotInvertible("zero within its truncation window".into()))?;
        self.invert_to(self.order - 2 * v)
    }

    /// Inverse known through u^target (capped by what the input determines).
    pub fn invert_to(&self, target: i64) -> Result<Self> {
        let v = self
            .valuation()
            .ok_or_else(|| Error::NotInvertible("zero within its truncation window".into()))?;
        if self.is_exact() && self.terms.len() == 1 {
            return Ok(self.as_monomial().unwrap().inv().to_series().truncate(target));
        }
        let lead_inv = self.terms[&v].inv()?;
        let avail = if self.is_exact() { EXACT } else { self.order - 2 * v };
        let target = target.min(avail);
        let rel = target + v; // number of relative steps
        if rel < 0 {
            return Ok(ScalarSeries::zero_to(target));
        }
        // b = a / (lead u^v), b_0 = 1; r_n = -sum_{k>=1} b_k r_{n-k}
        let b: Vec<(i64, CycloRational)> =
            self.terms.iter().skip(1).map(|(e, c)| (e - v, c.mul(&lead_inv))).collect();
        let mut r: Vec<CycloRational> = Vec::with_capacity(rel as usize + 1);
        r.push(CycloRational::one());
        for n in 1..=rel {
            let mut s = CycloRational::zero();
            for (k, bk) in &b {
                if *k > n {
                    break;
                }
                let x = &r[(n - k) as usize];
                if !x.is_zero() {
                    s = s.add(&bk.mul(x));
                }
            }
            r.push(s.neg());
        }
        let terms = r
            .into_iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| (i as i64 - v, c.mul(&lead_inv)));
        Ok(ScalarSeries::from_terms(terms, target))
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = ScalarSeries::one();
        for _ in 0..n {
            acc = acc.mul(self);
        }
        acc
    }

    /// First exponent <= n where the two series differ, or where either is
    /// unknown. `None` means they agree through u^n.
    pub fn first_difference(&self, o: &Self, n: i64) -> Option<i64> {
        let known = self.order.min(o.order);
        let d = self.sub(o);
        let first = d.terms.keys().next().copied().filter(|e| *e <= n);
        if let Some(e) = first {
            if e <= known {
                return Some(e);
            }
        }
        if known < n {
            return Some(known.saturating_add(1));
        }
        None
    }

    pub fn agrees_to(&self, o: &Self, n: i64) -> bool {
        self.first_difference(o, n).is_none()
    }
}

impl fmt::Debug for ScalarSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for ScalarSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            write!(f, "0")?;
        }
        for (i, (e, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{}*u^{}", c, e)?;
        }
        if self.order != EXACT {
            write!(f, " + O(u^{})", self.order + 1)?;
        }
        Ok(())
    }
}
