use std::fmt;
use std::sync::Arc;

use super::point::TorusPoint;
use crate::error::{Error, Result};
use crate::lattice::{bilinear_eval, Mat};
use crate::scalar_ring::UnitMonomial;

#[derive(PartialEq, Eq, Hash)]
struct ParamData {
    a: Mat,
    s: Mat,
}

/// alpha(g, h) = (-1)^{g^T S h} u^{g^T A h} on H = Z^d, with A antisymmetric
/// and S symmetric modulo 2.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct QuantParam(Arc<ParamData>);

fn check_square(m: &Mat, d: usize) -> Result<()> {
    if m.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: m.len() });
    }
    for r in m {
        if r.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: r.len() });
        }
    }
    Ok(())
}

impl QuantParam {
    pub fn new(a: Mat, s: Mat) -> Result<Self> {
        let d = a.len();
        check_square(&a, d)?;
        check_square(&s, d)?;
        for i in 0..d {
            for j in 0..d {
                if a[i][j] != -a[j][i] {
                    return Err(Error::InvalidParam(format!("A not antisymmetric at ({i},{j})")));
                }
                if (s[i][j] - s[j][i]) % 2 != 0 {
                    return Err(Error::InvalidParam(format!(
                        "S not symmetric mod 2 at ({i},{j})"
                    )));
                }
            }
        }
        let s = s.iter().map(|r| r.iter().map(|x| x.rem_euclid(2)).collect()).collect();
        Ok(QuantParam(Arc::new(ParamData { a, s })))
    }

    pub fn from_exponents(a: Mat) -> Result<Self> {
        let d = a.len();
        Self::new(a, vec![vec![0; d]; d])
    }

    pub fn trivial(d: usize) -> Self {
        Self::from_exponents(vec![vec![0; d]; d]).unwrap()
    }

    /// T_q: alpha(h1, h2) = q = u^2.
    pub fn tq() -> Self {
        Self::from_exponents(vec![vec![0, 2], vec![-2, 0]]).unwrap()
    }

    pub fn rank(&self) -> usize {
        self.0.a.len()
    }

    pub fn a(&self) -> &Mat {
        &self.0.a
    }

    pub fn s(&self) -> &Mat {
        &self.0.s
    }

    pub fn is_trivial(&self) -> bool {
        self.0.a.iter().flatten().all(|x| *x == 0) && self.0.s.iter().flatten().all(|x| *x == 0)
    }

    pub fn has_signs(&self) -> bool {
        self.0.s.iter().flatten().any(|x| *x != 0)
    }

    pub fn alpha_uexp(&self, g: &[i64], h: &[i64]) -> i64 {
        bilinear_eval(&self.0.a, g, h).expect("dimension checked by caller")
    }

    pub fn alpha_negative(&self, g: &[i64], h: &[i64]) -> bool {
        let d = self.rank();
        let mut acc = 0i64;
        for i in 0..d {
            if g[i] & 1 == 0 {
                continue;
            }
            for j in 0..d {
                if self.0.s[i][j] != 0 && h[j] & 1 != 0 {
                    acc ^= 1;
                }
            }
        }
        acc != 0
    }

    fn check_dims(&self, v: &[i64]) -> Result<()> {
        if v.len() != self.rank() {
            return Err(Error::DimensionMismatch { expected: self.rank(), got: v.len() });
        }
        Ok(())
    }

    pub fn alpha_eval(&self, g: &[i64], h: &[i64]) -> Result<UnitMonomial> {
        self.check_dims(g)?;
        self.check_dims(h)?;
        Ok(self.alpha(g, h))
    }

    /// alpha(g, h); panics on dimension mismatch.
    pub fn alpha(&self, g: &[i64], h: &[i64]) -> UnitMonomial {
        UnitMonomial::signed(self.alpha_negative(g, h), self.alpha_uexp(g, h))
    }

    /// epsilon(h) = alpha(h, h) in {+1, -1}.
    pub fn epsilon(&self, h: &[i64]) -> i64 {
        if self.alpha_negative(h, h) {
            -1
        } else {
            1
        }
    }

    pub fn epsilon_mono(&self, h: &[i64]) -> UnitMonomial {
        UnitMonomial::signed(self.epsilon(h) < 0, 0)
    }

    /// e(g) e(h) = alpha(g, h) e(g + h).
    pub fn exp_mul(&self, g: &[i64], h: &[i64]) -> (UnitMonomial, Vec<i64>) {
        (self.alpha(g, h), g.iter().zip(h).map(|(a, b)| a + b).collect())
    }

    /// A_h, the point with g(A_h) = alpha(g, h).
    pub fn hidden_point(&self, h: &[i64]) -> TorusPoint {
        let d = self.rank();
        let vals = (0..d)
            .map(|i| {
                let mut e = vec![0; d];
                e[i] = 1;
                self.alpha(&e, h)
            })
            .collect();
        TorusPoint::new(vals)
    }

    /// alpha^n: A scaled by n, S kept for odd n and cleared for even n.
    pub fn power(&self, n: i64) -> QuantParam {
        let a = self.0.a.iter().map(|r| r.iter().map(|x| x * n).collect()).collect();
        let s = if n.rem_euclid(2) == 1 { self.0.s.clone() } else { vec![vec![0; self.rank()]; self.rank()] };
        QuantParam::new(a, s).unwrap()
    }

    /// The beta with beta^n = self, choosing S = self.S for odd n and S = 0 for even n.
    pub fn root(&self, n: i64) -> Result<QuantParam> {
        if n == 0 {
            return Err(Error::InvalidParam("zeroth root".into()));
        }
        if self.0.a.iter().flatten().any(|x| x % n != 0) {
            return Err(Error::InvalidParam(format!("exponent matrix not divisible by {n}")));
        }
        if n % 2 == 0 && self.has_signs() {
            return Err(Error::InvalidParam(format!("sign matrix cannot be an even ({n}) power")));
        }
        let a = self.0.a.iter().map(|r| r.iter().map(|x| x / n).collect()).collect();
        let s = if n % 2 == 0 { vec![vec![0; self.rank()]; self.rank()] } else { self.0.s.clone() };
        QuantParam::new(a, s)
    }

    pub fn direct_sum(&self, o: &QuantParam) -> QuantParam {
        let (d1, d2) = (self.rank(), o.rank());
        let block = |x: &Mat, y: &Mat| {
            let mut m = vec![vec![0; d1 + d2]; d1 + d2];
            for i in 0..d1 {
                m[i][..d1].copy_from_slice(&x[i]);
            }
            for i in 0..d2 {
                m[d1 + i][d1..].copy_from_slice(&y[i]);
            }
            m
        };
        QuantParam::new(block(&self.0.a, &o.0.a), block(&self.0.s, &o.0.s)).unwrap()
    }

    /// Whether alpha(g,h)^2 is trivial for all g, h.
    pub fn square_is_trivial(&self) -> bool {
        self.0.a.iter().flatten().all(|x| *x == 0)
    }
}

impl fmt::Debug for QuantParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "QuantParam {{ A: {:?}, S: {:?} }}", self.0.a, self.0.s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tq_values() {
        let p = QuantParam::tq();
        assert_eq!(p.alpha_eval(&[1, 0], &[0, 1]).unwrap(), UnitMonomial::q(1));
        assert_eq!(p.alpha(&[1, 1], &[1, 1]), UnitMonomial::one());
        assert_eq!(p.alpha(&[2, 1], &[1, -1]), UnitMonomial::q(-3));
        assert!(p.alpha_eval(&[1], &[0, 1]).is_err());
    }

    #[test]
    fn signs() {
        let p = QuantParam::new(vec![vec![0]], vec![vec![1]]).unwrap();
        assert_eq!(p.epsilon(&[1]), -1);
        assert_eq!(p.epsilon(&[2]), 1);
        assert_eq!(QuantParam::tq().epsilon(&[3, 5]), 1);
    }

    #[test]
    fn exp_products() {
        let p = QuantParam::tq();
        let (c, h) = p.exp_mul(&[1, 0], &[0, 1]);
        assert_eq!((c, h), (UnitMonomial::q(1), vec![1, 1]));
        let (c, _) = p.exp_mul(&[0, 1], &[1, 0]);
        assert_eq!(c, UnitMonomial::q(-1));
        assert_eq!(p.exp_mul(&[2, 0], &[0, 3]).0, UnitMonomial::q(6));
    }

    #[test]
    fn hidden_points() {
        let p = QuantParam::tq();
        let a = p.hidden_point(&[1, 0]);
        assert_eq!(a.values(), &[UnitMonomial::one(), UnitMonomial::q(-1)]);
        assert!(QuantParam::trivial(2).hidden_point(&[3, 1]).is_identity());
    }

    #[test]
    fn powers_and_roots() {
        let p = QuantParam::new(vec![vec![0, 1], vec![-1, 0]], vec![vec![1, 0], vec![0, 0]]).unwrap();
        assert!(!p.power(2).has_signs());
        assert!(p.power(3).has_signs());
        assert_eq!(p.power(3).root(3).unwrap(), p);
        assert!(p.root(2).is_err());
        assert_eq!(QuantParam::tq().root(2).unwrap().a()[0][1], 1);
    }
}
