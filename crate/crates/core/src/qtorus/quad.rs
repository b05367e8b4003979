//! Integer quadratic valuation bounds and enumeration of lattice points below
//! a bound (Fincke-Pohst with floating bounds and exact final checks).

use crate::error::{Error, Result};
use crate::lattice::{is_positive_definite_int, Mat};

/// 2*mu(p) = p^T q2 p + l2 . p + c2, stored doubled so that half-integral
/// cross terms stay integral.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Minorant {
    pub q2: Mat,
    pub l2: Vec<i64>,
    pub c2: i64,
}

impl Minorant {
    pub fn zero(k: usize) -> Self {
        Minorant { q2: vec![vec![0; k]; k], l2: vec![0; k], c2: 0 }
    }

    /// mu(p) = sum_i diag_i p_i^2 (exact quadratic valuation of a theta-type rule).
    pub fn diagonal(diag: &[i64]) -> Self {
        let k = diag.len();
        let mut m = Self::zero(k);
        for (i, d) in diag.iter().enumerate() {
            m.q2[i][i] = 2 * d;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.l2.len()
    }

    pub fn eval2(&self, p: &[i64]) -> i128 {
        let mut acc = self.c2 as i128;
        for i in 0..p.len() {
            acc += self.l2[i] as i128 * p[i] as i128;
            for j in 0..p.len() {
                acc += self.q2[i][j] as i128 * p[i] as i128 * p[j] as i128;
            }
        }
        acc
    }

    /// Smallest integer >= mu(p).
    pub fn eval_ceil(&self, p: &[i64]) -> i64 {
        let v = self.eval2(p);
        (v.div_euclid(2) + i128::from(v.rem_euclid(2) != 0)) as i64
    }

    /// Adds the linear function p -> c + w . p.
    pub fn add_linear(&mut self, c: i64, w: &[i64]) {
        self.c2 += 2 * c;
        for (a, b) in self.l2.iter_mut().zip(w) {
            *a += 2 * b;
        }
    }

    /// Rewrites mu in coordinates p = t + M s.
    pub fn substitute(&self, t: &[i64], m: &Mat, s_dim: usize) -> Minorant {
        let k = self.dim();
        // q2' = M^T q2 M ; l2' = 2 M^T q2 t + M^T l2 ; c2' = t^T q2 t + l2 . t + c2
        let q2t: Vec<i64> = (0..k).map(|i| (0..k).map(|j| self.q2[i][j] * t[j]).sum()).collect();
        let mut out = Minorant::zero(s_dim);
        for a in 0..s_dim {
            for b in 0..s_dim {
                let mut v = 0;
                for i in 0..k {
                    for j in 0..k {
                        v += m[i][a] * self.q2[i][j] * m[j][b];
                    }
                }
                out.q2[a][b] = v;
            }
            out.l2[a] = (0..k).map(|i| m[i][a] * (2 * q2t[i] + self.l2[i])).sum();
        }
        out.c2 = self.c2 + (0..k).map(|i| t[i] * (q2t[i] + self.l2[i])).sum::<i64>();
        out
    }

    /// Whether {p : mu(p) <= N} is finite for every N, given the sign
    /// constraints of the support (`lower`/`upper` bounds per coordinate).
    pub fn certifies_finite(&self, lower: &[Option<i64>], upper: &[Option<i64>]) -> bool {
        let k = self.dim();
        if k == 0 {
            return true;
        }
        let unbounded: Vec<usize> =
            (0..k).filter(|&i| lower[i].is_none() || upper[i].is_none()).collect();
        if unbounded.is_empty() {
            return true;
        }
        let sub: Mat = unbounded
            .iter()
            .map(|&i| unbounded.iter().map(|&j| self.q2[i][j]).collect())
            .collect();
        if is_positive_definite_int(&sub).unwrap_or(false) {
            return true;
        }
        // one-sided directions with linear growth and no quadratic part
        unbounded.iter().all(|&i| {
            let quad_free = (0..k).all(|j| self.q2[i][j] == 0);
            quad_free
                && ((lower[i].is_some() && upper[i].is_none() && self.l2[i] > 0)
                    || (upper[i].is_some() && lower[i].is_none() && self.l2[i] < 0))
        })
    }
}

/// Precomputed decomposition of a positive definite doubled form P = 2Q for
/// repeated enumeration with varying linear parts.
pub struct Enumerator {
    p: Mat,
    d: Vec<f64>,
    r: Vec<Vec<f64>>,
}

/// Hard cap on points produced by a single enumeration.
pub const MAX_POINTS: usize = 20_000_000;

impl Enumerator {
    pub fn new(p: &Mat) -> Result<Self> {
        let k = p.len();
        if k > 0 && !is_positive_definite_int(p)? {
            return Err(Error::NotMultipliable(
                "valuation form is not positive definite on the unbounded directions".into(),
            ));
        }
        let mut d = vec![0.0; k];
        let mut r = vec![vec![0.0; k]; k];
        for i in 0..k {
            let mut di = p[i][i] as f64;
            for m in 0..i {
                di -= d[m] * r[m][i] * r[m][i];
            }
            d[i] = di;
            for j in i + 1..k {
                let mut v = p[i][j] as f64;
                for m in 0..i {
                    v -= d[m] * r[m][i] * r[m][j];
                }
                r[i][j] = v / di;
            }
        }
        Ok(Enumerator { p: p.clone(), d, r })
    }

    pub fn dim(&self) -> usize {
        self.d.len()
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        // P x = b with P = R^T D R, R unit upper triangular
        let k = self.dim();
        let mut y = b.to_vec();
        for i in 0..k {
            for m in 0..i {
                y[i] -= self.r[m][i] * y[m];
            }
        }
        for i in 0..k {
            y[i] /= self.d[i];
        }
        let mut x = y;
        for i in (0..k).rev() {
            for j in i + 1..k {
                x[i] -= self.r[i][j] * x[j];
            }
        }
        x
    }

    /// Calls `f(y)` for a superset of the integer y with
    /// y^T P y + l2 . y <= t2; `f` must do the exact check itself.
    pub fn for_each<F: FnMut(&[i64])>(&self, l2: &[i64], t2: i128, mut f: F) -> Result<usize> {
        let k = self.dim();
        if k == 0 {
            if t2 >= 0 {
                f(&[]);
                return Ok(1);
            }
            return Ok(0);
        }
        let lf: Vec<f64> = l2.iter().map(|x| -0.5 * *x as f64).collect();
        let y0 = self.solve(&lf);
        let shift: f64 = y0.iter().zip(l2).map(|(a, b)| a * *b as f64).sum::<f64>();
        // (y-y0)^T P (y-y0) <= t2 - (l2 . y0)/2  (min of quadratic = l2.y0/2)
        let t = t2 as f64 - 0.5 * shift;
        if t < -1e-6 * (1.0 + t.abs()) {
            return Ok(0);
        }
        let t = t.max(0.0);
        let mut y = vec![0i64; k];
        let mut count = 0usize;
        self.rec(k - 1, t, &y0, &mut y, &mut f, &mut count)?;
        Ok(count)
    }

    fn rec<F: FnMut(&[i64])>(
        &self,
        i: usize,
        rem: f64,
        y0: &[f64],
        y: &mut Vec<i64>,
        f: &mut F,
        count: &mut usize,
    ) -> Result<()> {
        let k = self.dim();
        let mut c = y0[i];
        for j in i + 1..k {
            c -= self.r[i][j] * (y[j] as f64 - y0[j]);
        }
        let s = (rem.max(0.0) / self.d[i]).sqrt();
        let eps = 1e-7 * (1.0 + s + c.abs());
        let lo = (c - s - eps).ceil() as i64;
        let hi = (c + s + eps).floor() as i64;
        for v in lo..=hi {
            let dv = v as f64 - c;
            let next = rem - self.d[i] * dv * dv;
            if next < -1e-6 * (1.0 + rem.abs()) {
                continue;
            }
            y[i] = v;
            if i == 0 {
                *count += 1;
                if *count > MAX_POINTS {
                    return Err(Error::Overflow("lattice point enumeration"));
                }
                f(y);
            } else {
                self.rec(i - 1, next, y0, y, f, count)?;
            }
        }
        Ok(())
    }

    pub fn form(&self) -> &Mat {
        &self.p
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumerates_disc() {
        // y^T (2I) y <= 2*5  <=>  |y|^2 <= 5
        let e = Enumerator::new(&vec![vec![2, 0], vec![0, 2]]).unwrap();
        let mut pts = vec![];
        e.for_each(&[0, 0], 10, |y| pts.push(y.to_vec())).unwrap();
        let exact: Vec<_> = pts.iter().filter(|y| y[0] * y[0] + y[1] * y[1] <= 5).collect();
        assert_eq!(exact.len(), 21);
    }

    #[test]
    fn shifted_center() {
        // (y - 3)^2 <= 1 written as y^2 - 6y + 8 <= 0
        let e = Enumerator::new(&vec![vec![1]]).unwrap();
        let mut pts = vec![];
        e.for_each(&[-6], -8, |y| pts.push(y[0])).unwrap();
        pts.retain(|y| y * y - 6 * y + 8 <= 0);
        assert_eq!(pts, vec![2, 3, 4]);
    }

    #[test]
    fn rejects_indefinite() {
        assert!(Enumerator::new(&vec![vec![0, 1], vec![1, 0]]).is_err());
    }

    #[test]
    fn minorant_substitution() {
        let m = Minorant::diagonal(&[2]);
        // p = 1 + 2s
        let s = m.substitute(&[1], &vec![vec![2]], 1);
        for v in -3..3 {
            assert_eq!(s.eval2(&[v]), m.eval2(&[1 + 2 * v]));
        }
    }
}
