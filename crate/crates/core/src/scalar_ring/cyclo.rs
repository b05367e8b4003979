//! Elements of the cyclotomic field Q(zeta_m), stored as coefficient vectors
//! reduced modulo the m-th cyclotomic polynomial.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// An element of Q(zeta_m).
///
/// Rational values are always stored with `m = 1`, so values that happen to
/// be rational compare equal no matter which field they were computed in.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct CycloRational {
    m: u32,
    c: Vec<BigRational>,
}

fn cyclotomic_cache() -> &'static Mutex<HashMap<u32, Arc<Vec<BigInt>>>> {
    static CACHE: OnceLock<Mutex<HashMap<u32, Arc<Vec<BigInt>>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Coefficients of Phi_m, lowest degree first. Monic.
pub fn cyclotomic_poly(m: u32) -> Arc<Vec<BigInt>> {
    assert!(m >= 1, "cyclotomic order must be positive");
    if let Some(p) = cyclotomic_cache().lock().unwrap().get(&m) {
        return p.clone();
    }
    // x^m - 1 divided by Phi_d for every proper divisor d.
    let mut num: Vec<BigInt> = vec![BigInt::zero(); m as usize + 1];
    num[0] = BigInt::from(-1);
    num[m as usize] = BigInt::one();
    for d in 1..m {
        if m.is_multiple_of(d) {
            let den = cyclotomic_poly(d);
            num = int_poly_exact_div(&num, &den);
        }
    }
    let p = Arc::new(num);
    cyclotomic_cache().lock().unwrap().insert(m, p.clone());
    p
}

fn int_poly_exact_div(num: &[BigInt], den: &[BigInt]) -> Vec<BigInt> {
    // den is monic
    let mut rem = num.to_vec();
    let dn = den.len() - 1;
    let qlen = rem.len() - dn;
    let mut q = vec![BigInt::zero(); qlen];
    for i in (0..qlen).rev() {
        let t = rem[i + dn].clone();
        if t.is_zero() {
            continue;
        }
        for (j, dj) in den.iter().enumerate() {
            rem[i + j] -= &t * dj;
        }
        q[i] = t;
    }
    debug_assert!(rem.iter().all(|x| x.is_zero()));
    q
}

pub fn euler_phi(m: u32) -> usize {
    cyclotomic_poly(m).len() - 1
}

fn lcm(a: u32, b: u32) -> u32 {
    a.lcm(&b)
}

fn reduce(mut p: Vec<BigRational>, m: u32) -> Vec<BigRational> {
    let phi = cyclotomic_poly(m);
    let deg = phi.len() - 1;
    if p.len() > deg {
        for i in (deg..p.len()).rev() {
            let t = std::mem::take(&mut p[i]);
            if t.is_zero() {
                continue;
            }
            for j in 0..deg {
                if !phi[j].is_zero() {
                    let s = &t * BigRational::from_integer(phi[j].clone());
                    p[i - deg + j] -= s;
                }
            }
        }
        p.truncate(deg);
    }
    p.resize(deg, BigRational::zero());
    p
}

fn poly_trim(p: &mut Vec<BigRational>) {
    while p.len() > 1 && p.last().is_some_and(|x| x.is_zero()) {
        p.pop();
    }
}

fn poly_is_zero(p: &[BigRational]) -> bool {
    p.iter().all(|x| x.is_zero())
}

fn poly_mul(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    if a.is_empty() || b.is_empty() {
        return vec![];
    }
    let mut out = vec![BigRational::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            if !y.is_zero() {
                out[i + j] += x * y;
            }
        }
    }
    out
}

fn poly_sub(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    let n = a.len().max(b.len());
    (0..n)
        .map(|i| {
            let x = a.get(i).cloned().unwrap_or_else(BigRational::zero);
            let y = b.get(i).cloned().unwrap_or_else(BigRational::zero);
            x - y
        })
        .collect()
}

fn poly_divmod(a: &[BigRational], b: &[BigRational]) -> (Vec<BigRational>, Vec<BigRational>) {
    let mut r = a.to_vec();
    poly_trim(&mut r);
    let mut b = b.to_vec();
    poly_trim(&mut b);
    let db = b.len() - 1;
    let lead = b[db].clone();
    if r.len() < b.len() {
        return (vec![BigRational::zero()], r);
    }
    let mut q = vec![BigRational::zero(); r.len() - db];
    for i in (0..q.len()).rev() {
        let t = &r[i + db] / &lead;
        if t.is_zero() {
            continue;
        }
        for j in 0..=db {
            let s = &t * &b[j];
            r[i + j] -= s;
        }
        q[i] = t;
    }
    r.truncate(db.max(1));
    poly_trim(&mut r);
    (q, r)
}

impl CycloRational {
    fn from_parts(m: u32, c: Vec<BigRational>) -> Self {
        let mut c = reduce(c, m);
        if c.iter().skip(1).all(|x| x.is_zero()) {
            c.truncate(1);
            return CycloRational { m: 1, c };
        }
        CycloRational { m, c }
    }

    /// Builds an element of Q(zeta_m) from coefficients on 1, zeta, zeta^2, ...
    /// Longer vectors are reduced modulo Phi_m.
    pub fn new(m: u32, coeffs: Vec<BigRational>) -> Self {
        assert!(m >= 1, "cyclotomic order must be positive");
        Self::from_parts(m, coeffs)
    }

    pub fn from_rational(r: BigRational) -> Self {
        CycloRational { m: 1, c: vec![r] }
    }

    pub fn from_int(n: i64) -> Self {
        Self::from_rational(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn from_ratio(p: i64, q: i64) -> Self {
        Self::from_rational(BigRational::new(BigInt::from(p), BigInt::from(q)))
    }

    pub fn zero() -> Self {
        Self::from_int(0)
    }

    pub fn one() -> Self {
        Self::from_int(1)
    }

    /// A primitive m-th root of unity.
    pub fn zeta(m: u32) -> Self {
        let mut c = vec![BigRational::zero(); 2];
        c[1] = BigRational::one();
        Self::from_parts(m, c)
    }

    /// The field this element needs (1 for rationals).
    pub fn order(&self) -> u32 {
        self.m
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.c
    }

    /// Coefficient vector of length deg Phi_m, embedding into Q(zeta_m) when
    /// this element lives in a subfield.
    pub fn coeffs_in(&self, m: u32) -> Vec<BigRational> {
        if self.m == m {
            return self.c.clone();
        }
        embed(&self.c, self.m, m)
    }

    pub fn is_zero(&self) -> bool {
        self.m == 1 && self.c[0].is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.m == 1 && self.c[0].is_one()
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        (self.m == 1).then(|| &self.c[0])
    }

    pub fn add(&self, o: &Self) -> Self {
        if self.m == 1 && o.m == 1 {
            return Self::from_rational(&self.c[0] + &o.c[0]);
        }
        let (m, a, b) = common(self, o);
        let c = a.iter().zip(b.iter()).map(|(x, y)| x + y).collect();
        Self::from_parts(m, c)
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> Self {
        CycloRational { m: self.m, c: self.c.iter().map(|x| -x).collect() }
    }

    pub fn mul(&self, o: &Self) -> Self {
        if self.m == 1 && o.m == 1 {
            return Self::from_rational(&self.c[0] * &o.c[0]);
        }
        if self.m == 1 || o.m == 1 {
            let (r, v) = if self.m == 1 { (&self.c[0], o) } else { (&o.c[0], self) };
            if r.is_zero() {
                return Self::zero();
            }
            return CycloRational { m: v.m, c: v.c.iter().map(|x| x * r).collect() };
        }
        let (m, a, b) = common(self, o);
        Self::from_parts(m, poly_mul(&a, &b))
    }

    pub fn inv(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        if self.m == 1 {
            return Ok(Self::from_rational(self.c[0].recip()));
        }
        let phi: Vec<BigRational> = cyclotomic_poly(self.m)
            .iter()
            .map(|x| BigRational::from_integer(x.clone()))
            .collect();
        // extended Euclid: s * a = r (mod phi)
        let (mut r0, mut r1) = (phi.clone(), self.c.clone());
        poly_trim(&mut r1);
        let (mut s0, mut s1) = (vec![BigRational::zero()], vec![BigRational::one()]);
        while r1.len() > 1 {
            let (q, r) = poly_divmod(&r0, &r1);
            let s2 = poly_sub(&s0, &poly_mul(&q, &s1));
            r0 = std::mem::replace(&mut r1, r);
            s0 = std::mem::replace(&mut s1, s2);
            poly_trim(&mut r1);
        }
        if poly_is_zero(&r1) {
            return Err(Error::DivisionByZero);
        }
        let k = r1[0].recip();
        let c = s1.iter().map(|x| x * &k).collect();
        Ok(Self::from_parts(self.m, c))
    }

    pub fn div(&self, o: &Self) -> Result<Self> {
        Ok(self.mul(&o.inv()?))
    }

    pub fn pow(&self, e: i64) -> Result<Self> {
        let base = if e < 0 { self.inv()? } else { self.clone() };
        let mut e = e.unsigned_abs();
        let mut acc = Self::one();
        let mut b = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&b);
            }
            e >>= 1;
            if e > 0 {
                b = b.mul(&b);
            }
        }
        Ok(acc)
    }

    /// Exact n-th root inside Q(zeta_m), if one of the form
    /// (rational) * (root of unity in Q(zeta_m)) exists.
    pub fn nth_root(&self, n: u32, m: u32) -> Option<Self> {
        if n == 0 {
            return None;
        }
        if n == 1 {
            return Some(self.clone());
        }
        if self.is_zero() {
            return Some(Self::zero());
        }
        let l = roots_of_unity_order(m);
        for j in 0..l {
            let w = root_of_unity_in(l, j as i64, m).ok()?;
            let wn = w.pow(n as i64).ok()?;
            let t = self.div(&wn).ok()?;
            if let Some(r) = t.as_rational() {
                if let Some(s) = rational_nth_root(r, n) {
                    return Some(Self::from_rational(s).mul(&w));
                }
            }
        }
        None
    }

    /// If this is a root of unity zeta_L^k with L = lcm(2, m), returns k.
    pub fn root_of_unity_log(&self, m: u32) -> Option<u64> {
        let l = roots_of_unity_order(m);
        (0..l as u64).find(|&k| root_of_unity_in(l, k as i64, m).is_ok_and(|w| &w == self))
    }
}

fn embed(c: &[BigRational], from: u32, to: u32) -> Vec<BigRational> {
    assert!(to.is_multiple_of(from), "cannot embed Q(zeta_{from}) into Q(zeta_{to})");
    let step = (to / from) as usize;
    let mut p = vec![BigRational::zero(); (c.len() - 1) * step + 1];
    for (i, x) in c.iter().enumerate() {
        p[i * step] = x.clone();
    }
    reduce(p, to)
}

fn common(a: &CycloRational, b: &CycloRational) -> (u32, Vec<BigRational>, Vec<BigRational>) {
    if a.m == b.m {
        return (a.m, a.c.clone(), b.c.clone());
    }
    let m = lcm(a.m, b.m);
    (m, a.coeffs_in(m), b.coeffs_in(m))
}

fn rational_nth_root(r: &BigRational, n: u32) -> Option<BigRational> {
    if r.is_negative() && n.is_multiple_of(2) {
        return None;
    }
    let num = r.numer().abs();
    let den = r.denom().clone();
    let rn = num.nth_root(n);
    let rd = den.nth_root(n);
    if rn.pow(n) != num || rd.pow(n) != den {
        return None;
    }
    let s = BigRational::new(rn, rd);
    Some(if r.is_negative() { -s } else { s })
}

/// Order of the group of roots of unity contained in Q(zeta_m).
pub fn roots_of_unity_order(m: u32) -> u32 {
    lcm(2, m)
}

/// zeta_n^k as an element of Q(zeta_m); fails when n does not divide lcm(2, m).
pub fn root_of_unity_in(n: u32, k: i64, m: u32) -> Result<CycloRational> {
    let l = roots_of_unity_order(m);
    if !l.is_multiple_of(n) {
        return Err(Error::MissingRootsOfUnity { order: n as u64, m });
    }
    let e = (k.rem_euclid(n as i64) as u64) * (l / n) as u64; // exponent of zeta_l
    let e = e % l as u64;
    if m.is_multiple_of(2) {
        return CycloRational::zeta(m).pow(e as i64);
    }
    // m odd: zeta_{2m} = -zeta_m^{(m+1)/2}
    let z2m = CycloRational::zeta(m).pow(m.div_ceil(2) as i64)?.neg();
    z2m.pow(e as i64)
}

impl fmt::Debug for CycloRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for CycloRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.m == 1 {
            return write!(f, "{}", self.c[0]);
        }
        let mut first = true;
        write!(f, "(")?;
        for (i, x) in self.c.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match i {
                0 => write!(f, "{}", x)?,
                1 => write!(f, "{}*z{}", x, self.m)?,
                _ => write!(f, "{}*z{}^{}", x, self.m, i)?,
            }
        }
        write!(f, ")")
    }
}

/// Parses "p/q" or "p".
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let (p, q) = match s.split_once('/') {
        Some((p, q)) => (p.trim(), q.trim()),
        None => (s, "1"),
    };
    let p: BigInt = p.parse().map_err(|_| Error::Parse(format!("bad rational '{s}'")))?;
    let q: BigInt = q.parse().map_err(|_| Error::Parse(format!("bad rational '{s}'")))?;
    if q.is_zero() {
        return Err(Error::Parse(format!("zero denominator in '{s}'")));
    }
    Ok(BigRational::new(p, q))
}

pub fn format_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Small-integer view, used by tests and sign checks.
pub fn as_small_int(c: &CycloRational) -> Option<i64> {
    let r = c.as_rational()?;
    if !r.denom().is_one() {
        return None;
    }
    r.numer().to_i64()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi_small() {
        let p = |m| cyclotomic_poly(m).iter().map(|x| x.to_i64().unwrap()).collect::<Vec<_>>();
        assert_eq!(p(1), vec![-1, 1]);
        assert_eq!(p(2), vec![1, 1]);
        assert_eq!(p(3), vec![1, 1, 1]);
        assert_eq!(p(4), vec![1, 0, 1]);
        assert_eq!(p(6), vec![1, -1, 1]);
        assert_eq!(p(12), vec![1, 0, -1, 0, 1]);
    }

    #[test]
    fn spec_examples() {
        let half = CycloRational::from_ratio(1, 2);
        assert!(half.add(&half).is_one());
        let i = CycloRational::zeta(4);
        assert_eq!(i.mul(&i), CycloRational::from_int(-1));
        let z = CycloRational::zeta(3);
        let inv = CycloRational::one().add(&z).inv().unwrap();
        assert_eq!(inv, z.neg());
        assert_eq!(CycloRational::zero().inv(), Err(Error::DivisionByZero));
    }

    #[test]
    fn roots() {
        let z = CycloRational::zeta(6);
        assert!(z.pow(6).unwrap().is_one());
        assert!(!z.pow(3).unwrap().is_one());
        let minus_one = CycloRational::from_int(-1);
        assert_eq!(minus_one.nth_root(2, 4), Some(CycloRational::zeta(4)));
        assert_eq!(minus_one.nth_root(2, 2), None);
        assert_eq!(CycloRational::from_int(9).nth_root(2, 1), Some(CycloRational::from_int(3)));
        let w = root_of_unity_in(6, 1, 3).unwrap();
        assert!(w.pow(6).unwrap().is_one() && !w.pow(3).unwrap().is_one());
        assert!(root_of_unity_in(4, 1, 2).is_err());
        assert_eq!(CycloRational::from_int(-1).root_of_unity_log(2), Some(1));
    }

    #[test]
    fn mixed_orders() {
        let a = CycloRational::zeta(4);
        let b = CycloRational::zeta(3);
        let c = a.mul(&b);
        assert_eq!(c.order(), 12);
        assert!(c.pow(12).unwrap().is_one());
    }
}
