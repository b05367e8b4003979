//! Exact linear algebra over Q(zeta_m), and specialization of u to a rational
//! value. Used to solve finite linear systems whose entries are monomials.

use num_rational::BigRational;
use num_traits::One;

use crate::error::{Error, Result};
use crate::scalar_ring::{CycloRational, ScalarSeries, UnitMonomial};

pub type CMat = Vec<Vec<CycloRational>>;

/// The value of a monomial at u = t.
pub fn specialize(m: &UnitMonomial, t: &BigRational) -> CycloRational {
    let v = pow_rational(t, m.uexp());
    m.coeff().mul(&CycloRational::from_rational(v))
}

/// The value of an exact series at u = t.
pub fn specialize_series(s: &ScalarSeries, t: &BigRational) -> Result<CycloRational> {
    if !s.is_exact() {
        return Err(Error::Unrepresentable("truncated series cannot be specialized".into()));
    }
    let mut acc = CycloRational::zero();
    for (e, c) in s.terms() {
        acc = acc.add(&c.mul(&CycloRational::from_rational(pow_rational(t, *e))));
    }
    Ok(acc)
}

fn pow_rational(t: &BigRational, e: i64) -> BigRational {
    let mut acc = BigRational::one();
    for _ in 0..e.unsigned_abs() {
        acc *= t;
    }
    if e < 0 {
        acc = acc.recip();
    }
    acc
}

/// Reduced row echelon form in place; returns pivot columns.
pub fn rref(m: &mut CMat, cols: usize) -> Vec<usize> {
    let rows = m.len();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else { continue };
        m.swap(r, p);
        let inv = m[r][c].inv().expect("nonzero pivot");
        for x in m[r].iter_mut() {
            *x = x.mul(&inv);
        }
        let pivot_row = m[r].clone();
        for i in 0..rows {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for (x, y) in m[i].iter_mut().zip(&pivot_row) {
                    if !y.is_zero() {
                        *x = x.sub(&f.mul(y));
                    }
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank(m: &CMat, cols: usize) -> usize {
    let mut a = m.clone();
    rref(&mut a, cols).len()
}

/// A basis of {v : m v = 0}.
pub fn nullspace(m: &CMat, cols: usize) -> Vec<Vec<CycloRational>> {
    let mut a = m.clone();
    let pivots = rref(&mut a, cols);
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![CycloRational::zero(); cols];
            v[f] = CycloRational::one();
            for (row, &pc) in pivots.iter().enumerate() {
                v[pc] = a[row][f].neg();
            }
            v
        })
        .collect()
}

/// Whether the span of `vs` equals the span of `ws`.
pub fn same_span(vs: &[Vec<CycloRational>], ws: &[Vec<CycloRational>], cols: usize) -> bool {
    let r1 = rank(&vs.to_vec(), cols);
    let r2 = rank(&ws.to_vec(), cols);
    let mut both = vs.to_vec();
    both.extend(ws.iter().cloned());
    r1 == r2 && rank(&both, cols) == r1
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(n: i64) -> CycloRational {
        CycloRational::from_int(n)
    }

    #[test]
    fn nullspace_of_rank_one() {
        let m = vec![vec![c(1), c(2), c(3)], vec![c(2), c(4), c(6)]];
        let ns = nullspace(&m, 3);
        assert_eq!(ns.len(), 2);
        for v in &ns {
            let dot = m[0].iter().zip(v).fold(CycloRational::zero(), |a, (x, y)| a.add(&x.mul(y)));
            assert!(dot.is_zero());
        }
        assert!(same_span(&ns, &[vec![c(-2), c(1), c(0)], vec![c(-3), c(0), c(1)]], 3));
    }

    #[test]
    fn specialization() {
        let t = BigRational::new(3.into(), 7.into());
        let m = UnitMonomial::int(-2, -2);
        assert_eq!(specialize(&m, &t), CycloRational::from_ratio(-98, 9));
    }
}
