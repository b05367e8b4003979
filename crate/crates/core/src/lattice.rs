//! Integer lattice algebra on Z^d: homomorphisms, Smith normal form, finite
//! quotients and definiteness of quadratic forms.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use crate::error::{Error, Result};

pub type Mat = Vec<Vec<i64>>;

/// Z^rank with its standard basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Lattice {
    pub rank: usize,
}

/// A homomorphism Z^src -> Z^dst stored as a dst x src matrix.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LatticeMap {
    src: usize,
    dst: usize,
    m: Mat,
}

impl LatticeMap {
    pub fn new(src: usize, dst: usize, m: Mat) -> Result<Self> {
        if m.len() != dst {
            return Err(Error::DimensionMismatch { expected: dst, got: m.len() });
        }
        for row in &m {
            if row.len() != src {
                return Err(Error::DimensionMismatch { expected: src, got: row.len() });
            }
        }
        Ok(LatticeMap { src, dst, m })
    }

    /// Builds the map from the images of the source basis (matrix columns).
    pub fn from_columns(dst: usize, cols: &[Vec<i64>]) -> Result<Self> {
        let src = cols.len();
        for c in cols {
            if c.len() != dst {
                return Err(Error::DimensionMismatch { expected: dst, got: c.len() });
            }
        }
        let m = (0..dst).map(|i| cols.iter().map(|c| c[i]).collect()).collect();
        Ok(LatticeMap { src, dst, m })
    }

    pub fn identity(d: usize) -> Self {
        LatticeMap { src: d, dst: d, m: identity(d) }
    }

    pub fn scalar(d: usize, n: i64) -> Self {
        let mut m = identity(d);
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = n;
        }
        LatticeMap { src: d, dst: d, m }
    }

    pub fn src(&self) -> usize {
        self.src
    }

    pub fn dst(&self) -> usize {
        self.dst
    }

    pub fn matrix(&self) -> &Mat {
        &self.m
    }

    pub fn column(&self, j: usize) -> Vec<i64> {
        self.m.iter().map(|r| r[j]).collect()
    }

    pub fn apply(&self, v: &[i64]) -> Vec<i64> {
        assert_eq!(v.len(), self.src, "vector length does not match map source");
        mat_vec(&self.m, v)
    }

    /// self o other
    pub fn compose(&self, other: &LatticeMap) -> Result<LatticeMap> {
        if other.dst != self.src {
            return Err(Error::DimensionMismatch { expected: self.src, got: other.dst });
        }
        Ok(LatticeMap { src: other.src, dst: self.dst, m: mat_mul(&self.m, &other.m) })
    }

    pub fn direct_sum(&self, o: &LatticeMap) -> LatticeMap {
        let mut m = vec![vec![0; self.src + o.src]; self.dst + o.dst];
        for i in 0..self.dst {
            m[i][..self.src].copy_from_slice(&self.m[i]);
        }
        for i in 0..o.dst {
            m[self.dst + i][self.src..].copy_from_slice(&o.m[i]);
        }
        LatticeMap { src: self.src + o.src, dst: self.dst + o.dst, m }
    }

    pub fn rank(&self) -> Result<usize> {
        Ok(smith_normal_form(&self.m)?.rank())
    }

    pub fn is_injective(&self) -> Result<bool> {
        Ok(self.rank()? == self.src)
    }

    /// Some preimage of `v`, if `v` lies in the image.
    pub fn preimage(&self, v: &[i64]) -> Result<Option<Vec<i64>>> {
        solve_integer(&self.m, self.src, v)
    }
}

pub fn identity(d: usize) -> Mat {
    (0..d).map(|i| (0..d).map(|j| i64::from(i == j)).collect()).collect()
}

pub fn mat_vec(m: &Mat, v: &[i64]) -> Vec<i64> {
    m.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

pub fn mat_mul(a: &Mat, b: &Mat) -> Mat {
    let k = b.len();
    let cols = b.first().map_or(0, |r| r.len());
    a.iter()
        .map(|row| {
            (0..cols).map(|j| (0..k).map(|t| row[t] * b[t][j]).sum()).collect()
        })
        .collect()
}

pub fn transpose(m: &Mat, cols: usize) -> Mat {
    (0..cols).map(|j| m.iter().map(|r| r[j]).collect()).collect()
}

/// g^T Q h.
pub fn bilinear_eval(q: &Mat, g: &[i64], h: &[i64]) -> Result<i64> {
    if q.len() != g.len() {
        return Err(Error::DimensionMismatch { expected: q.len(), got: g.len() });
    }
    let mut acc: i128 = 0;
    for (i, row) in q.iter().enumerate() {
        if row.len() != h.len() {
            return Err(Error::DimensionMismatch { expected: row.len(), got: h.len() });
        }
        if g[i] == 0 {
            continue;
        }
        for (j, qij) in row.iter().enumerate() {
            acc += g[i] as i128 * *qij as i128 * h[j] as i128;
        }
    }
    i64::try_from(acc).map_err(|_| Error::Overflow("bilinear_eval"))
}

/// U * M * V = D with U, V unimodular and D diagonal, d_i | d_{i+1}.
#[derive(Clone, Debug)]
pub struct Snf {
    pub u: Mat,
    pub d: Mat,
    pub v: Mat,
}

impl Snf {
    pub fn diagonal(&self) -> Vec<i64> {
        let k = self.d.len().min(self.d.first().map_or(0, |r| r.len()));
        (0..k).map(|i| self.d[i][i]).collect()
    }

    pub fn rank(&self) -> usize {
        self.diagonal().iter().filter(|x| **x != 0).count()
    }
}

fn to_i64(m: Vec<Vec<i128>>) -> Result<Mat> {
    m.into_iter()
        .map(|r| {
            r.into_iter()
                .map(|x| i64::try_from(x).map_err(|_| Error::Overflow("smith_normal_form")))
                .collect()
        })
        .collect()
}

pub fn smith_normal_form(m: &Mat) -> Result<Snf> {
    let rows = m.len();
    let cols = m.first().map_or(0, |r| r.len());
    let mut a: Vec<Vec<i128>> = m.iter().map(|r| r.iter().map(|&x| x as i128).collect()).collect();
    let mut u: Vec<Vec<i128>> =
        (0..rows).map(|i| (0..rows).map(|j| i128::from(i == j)).collect()).collect();
    let mut v: Vec<Vec<i128>> =
        (0..cols).map(|i| (0..cols).map(|j| i128::from(i == j)).collect()).collect();
    let ovf = || Error::Overflow("smith_normal_form");

    let row_axpy = |x: &mut Vec<Vec<i128>>, dst: usize, src: usize, q: i128| -> Result<()> {
        for j in 0..x[dst].len() {
            let t = x[src][j].checked_mul(q).ok_or_else(ovf)?;
            x[dst][j] = x[dst][j].checked_sub(t).ok_or_else(ovf)?;
        }
        Ok(())
    };
    let col_axpy = |x: &mut Vec<Vec<i128>>, dst: usize, src: usize, q: i128| -> Result<()> {
        for row in x.iter_mut() {
            let t = row[src].checked_mul(q).ok_or_else(ovf)?;
            row[dst] = row[dst].checked_sub(t).ok_or_else(ovf)?;
        }
        Ok(())
    };
    let swap_cols = |x: &mut Vec<Vec<i128>>, i: usize, j: usize| {
        for row in x.iter_mut() {
            row.swap(i, j);
        }
    };

    let n = rows.min(cols);
    for t in 0..n {
        // pivot: smallest nonzero |entry| in the trailing block
        let mut best: Option<(i128, usize, usize)> = None;
        for i in t..rows {
            for j in t..cols {
                if a[i][j] != 0 && best.is_none_or(|(b, _, _)| a[i][j].abs() < b) {
                    best = Some((a[i][j].abs(), i, j));
                }
            }
        }
        let Some((_, pi, pj)) = best else { break };
        a.swap(t, pi);
        u.swap(t, pi);
        swap_cols(&mut a, t, pj);
        swap_cols(&mut v, t, pj);
        loop {
            let mut clean = true;
            for i in t + 1..rows {
                if a[i][t] != 0 {
                    let q = a[i][t] / a[t][t];
                    row_axpy(&mut a, i, t, q)?;
                    row_axpy(&mut u, i, t, q)?;
                    if a[i][t] != 0 {
                        clean = false;
                    }
                }
            }
            for j in t + 1..cols {
                if a[t][j] != 0 {
                    let q = a[t][j] / a[t][t];
                    col_axpy(&mut a, j, t, q)?;
                    col_axpy(&mut v, j, t, q)?;
                    if a[t][j] != 0 {
                        clean = false;
                    }
                }
            }
            if !clean {
                // bring the smallest remainder in row/column t to the pivot
                let mut best = (a[t][t].abs(), t, t);
                for i in t + 1..rows {
                    if a[i][t] != 0 && a[i][t].abs() < best.0 {
                        best = (a[i][t].abs(), i, t);
                    }
                }
                for j in t + 1..cols {
                    if a[t][j] != 0 && a[t][j].abs() < best.0 {
                        best = (a[t][j].abs(), t, j);
                    }
                }
                let (_, bi, bj) = best;
                if bi != t {
                    a.swap(t, bi);
                    u.swap(t, bi);
                }
                if bj != t {
                    swap_cols(&mut a, t, bj);
                    swap_cols(&mut v, t, bj);
                }
                continue;
            }
            let p = a[t][t];
            let bad = (t + 1..rows)
                .flat_map(|i| (t + 1..cols).map(move |j| (i, j)))
                .find(|&(i, j)| a[i][j] % p != 0);
            match bad {
                Some((i, _)) => {
                    row_axpy(&mut a, t, i, -1)?;
                    row_axpy(&mut u, t, i, -1)?;
                }
                None => break,
            }
        }
        if a[t][t] < 0 {
            for x in a[t].iter_mut() {
                *x = -*x;
            }
            for x in u[t].iter_mut() {
                *x = -*x;
            }
        }
    }
    Ok(Snf { u: to_i64(u)?, d: to_i64(a)?, v: to_i64(v)? })
}

/// Determinant by fraction-free elimination.
pub fn det(m: &Mat) -> Result<i64> {
    let n = m.len();
    if n == 0 {
        return Ok(1);
    }
    let mut a: Vec<Vec<i128>> = m.iter().map(|r| r.iter().map(|&x| x as i128).collect()).collect();
    let mut sign = 1i128;
    let mut prev = 1i128;
    let ovf = || Error::Overflow("det");
    for k in 0..n {
        if a[k][k] == 0 {
            match (k + 1..n).find(|&i| a[i][k] != 0) {
                Some(i) => {
                    a.swap(k, i);
                    sign = -sign;
                }
                None => return Ok(0),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let x = a[i][j].checked_mul(a[k][k]).ok_or_else(ovf)?;
                let y = a[i][k].checked_mul(a[k][j]).ok_or_else(ovf)?;
                a[i][j] = (x - y) / prev;
            }
        }
        prev = a[k][k];
    }
    i64::try_from(sign * a[n - 1][n - 1]).map_err(|_| ovf())
}

/// A basis of the kernel of the rows x cols matrix `m`.
pub fn kernel_basis(m: &Mat, cols: usize) -> Result<Vec<Vec<i64>>> {
    if m.is_empty() {
        return Ok(identity(cols));
    }
    let s = smith_normal_form(m)?;
    let r = s.rank();
    Ok((r..cols).map(|j| s.v.iter().map(|row| row[j]).collect()).collect())
}

/// Some integer solution of m x = b.
pub fn solve_integer(m: &Mat, cols: usize, b: &[i64]) -> Result<Option<Vec<i64>>> {
    if m.len() != b.len() {
        return Err(Error::DimensionMismatch { expected: m.len(), got: b.len() });
    }
    if m.is_empty() {
        return Ok(Some(vec![0; cols]));
    }
    let s = smith_normal_form(m)?;
    let ub = mat_vec(&s.u, b);
    let diag = s.diagonal();
    let mut y = vec![0i64; cols];
    for (i, x) in ub.iter().enumerate() {
        let di = diag.get(i).copied().unwrap_or(0);
        if di == 0 {
            if *x != 0 {
                return Ok(None);
            }
        } else {
            if x % di != 0 {
                return Ok(None);
            }
            y[i] = x / di;
        }
    }
    Ok(Some(mat_vec(&s.v, &y)))
}

/// The finite or infinite quotient Z^d / image.
#[derive(Clone, Debug)]
pub struct QuotientData {
    /// Nontrivial invariant factors (> 1) of the image.
    pub invariant_factors: Vec<i64>,
    /// Rank of Z^d minus rank of the image.
    pub free_rank: usize,
    /// `None` for infinite index.
    pub index: Option<u64>,
    /// Canonical representatives, present when the index is finite.
    pub coset_reps: Vec<Vec<i64>>,
    u: Mat,
    diag: Vec<i64>,
    lookup: HashMap<Vec<i64>, usize>,
}

/// Largest index for which coset representatives are tabulated.
pub const MAX_TABULATED_INDEX: u64 = 1 << 20;

impl QuotientData {
    /// Coordinates of the class of h in (+) Z/d_i (+) Z^free.
    pub fn coset_coords(&self, h: &[i64]) -> Vec<i64> {
        let uh = mat_vec(&self.u, h);
        uh.iter()
            .enumerate()
            .filter_map(|(i, x)| {
                let di = self.diag.get(i).copied().unwrap_or(0);
                match di {
                    1 => None,
                    0 => Some(*x),
                    d => Some(x.rem_euclid(d)),
                }
            })
            .collect()
    }

    /// Index of the coset of h in `coset_reps`.
    pub fn projection(&self, h: &[i64]) -> Option<usize> {
        self.lookup.get(&self.coset_coords(h)).copied()
    }

    pub fn is_finite(&self) -> bool {
        self.index.is_some()
    }

    /// Exponent of the finite quotient group.
    pub fn exponent(&self) -> u64 {
        self.invariant_factors.last().map_or(1, |x| *x as u64)
    }
}

/// H / image for H = Z^d, with representatives of minimal sup-norm, ties
/// broken lexicographically.
pub fn quotient_data(target: Lattice, image: &LatticeMap) -> Result<QuotientData> {
    let d = target.rank;
    if image.dst() != d {
        return Err(Error::DimensionMismatch { expected: d, got: image.dst() });
    }
    let (u, diag) = if d == 0 {
        (vec![], vec![])
    } else if image.src() == 0 {
        (identity(d), vec![0; d])
    } else {
        let s = smith_normal_form(image.matrix())?;
        let mut diag = s.diagonal();
        diag.resize(d, 0);
        (s.u, diag)
    };
    let rank = diag.iter().filter(|x| **x != 0).count();
    let invariant_factors: Vec<i64> = diag.iter().copied().filter(|x| *x > 1).collect();
    let free_rank = d - rank;
    let mut q = QuotientData {
        invariant_factors,
        free_rank,
        index: None,
        coset_reps: vec![],
        u,
        diag,
        lookup: HashMap::new(),
    };
    if free_rank > 0 {
        return Ok(q);
    }
    let mut index: u64 = 1;
    for f in &q.invariant_factors {
        index = index.checked_mul(*f as u64).ok_or(Error::Overflow("quotient index"))?;
    }
    q.index = Some(index);
    if index > MAX_TABULATED_INDEX {
        return Err(Error::Overflow("quotient index too large to tabulate"));
    }
    let mut reps: Vec<Vec<i64>> = Vec::new();
    let mut r: i64 = 0;
    while (reps.len() as u64) < index {
        for h in shell(d, r) {
            let c = q.coset_coords(&h);
            if let std::collections::hash_map::Entry::Vacant(e) = q.lookup.entry(c) {
                e.insert(reps.len());
                reps.push(h);
            }
        }
        r += 1;
    }
    q.coset_reps = reps;
    Ok(q)
}

/// Points with sup-norm exactly r, ordered lexicographically by the
/// componentwise key (|x|, x < 0), so 1 precedes -1.
pub fn shell(d: usize, r: i64) -> Vec<Vec<i64>> {
    let mut pts: Vec<Vec<i64>> = box_points(d, r)
        .into_iter()
        .filter(|h| h.iter().map(|x| x.abs()).max().unwrap_or(0) == r)
        .collect();
    pts.sort_by_key(|h| h.iter().map(|x| (x.abs(), *x < 0)).collect::<Vec<_>>());
    pts
}

/// All points of the box [-r, r]^d in lexicographic order.
pub fn box_points(d: usize, r: i64) -> Vec<Vec<i64>> {
    let mut out = vec![vec![]];
    for _ in 0..d {
        let mut next = Vec::with_capacity(out.len() * (2 * r as usize + 1));
        for p in &out {
            for x in -r..=r {
                let mut q = p.clone();
                q.push(x);
                next.push(q);
            }
        }
        out = next;
    }
    out
}

fn is_symmetric<T: PartialEq>(q: &[Vec<T>]) -> bool {
    q.iter().enumerate().all(|(i, row)| row.len() == q.len() && (0..i).all(|j| row[j] == q[j][i]))
}

/// True iff every leading principal minor is positive.
pub fn is_positive_definite(q: &[Vec<BigRational>]) -> Result<bool> {
    if !is_symmetric(q) {
        return Err(Error::NotSymmetric);
    }
    let n = q.len();
    let mut a: Vec<Vec<BigRational>> = q.to_vec();
    // Gaussian elimination without pivoting: pivot_k = minor_k / minor_{k-1}.
    for k in 0..n {
        if !a[k][k].is_positive() {
            return Ok(false);
        }
        for i in k + 1..n {
            if a[i][k].is_zero() {
                continue;
            }
            let f = &a[i][k] / &a[k][k];
            for j in k..n {
                let t = &f * &a[k][j];
                a[i][j] -= t;
            }
        }
    }
    Ok(true)
}

pub fn is_positive_definite_int(q: &Mat) -> Result<bool> {
    let r: Vec<Vec<BigRational>> = q
        .iter()
        .map(|row| row.iter().map(|&x| BigRational::from_integer(BigInt::from(x))).collect())
        .collect();
    is_positive_definite(&r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_snf(m: &Mat) -> Snf {
        let s = smith_normal_form(m).unwrap();
        assert_eq!(mat_mul(&mat_mul(&s.u, m), &s.v), s.d);
        s
    }

    #[test]
    fn snf_examples() {
        assert_eq!(check_snf(&vec![vec![2, 0], vec![0, 3]]).diagonal(), vec![1, 6]);
        assert_eq!(check_snf(&identity(3)).diagonal(), vec![1, 1, 1]);
        assert_eq!(check_snf(&vec![vec![2, 4], vec![0, 0]]).diagonal(), vec![2, 0]);
    }

    #[test]
    fn quotients() {
        let q = quotient_data(Lattice { rank: 1 }, &LatticeMap::new(1, 1, vec![vec![2]]).unwrap())
            .unwrap();
        assert_eq!(q.index, Some(2));
        assert_eq!(q.coset_reps, vec![vec![0], vec![1]]);
        let q = quotient_data(
            Lattice { rank: 2 },
            &LatticeMap::from_columns(2, &[vec![1, 0]]).unwrap(),
        )
        .unwrap();
        assert_eq!(q.index, None);
        let q = quotient_data(
            Lattice { rank: 2 },
            &LatticeMap::from_columns(2, &[vec![2, 0], vec![1, 3]]).unwrap(),
        )
        .unwrap();
        assert_eq!(q.index, Some(6));
        for (i, r) in q.coset_reps.iter().enumerate() {
            assert_eq!(q.projection(r), Some(i));
        }
    }

    #[test]
    fn definiteness() {
        assert!(is_positive_definite_int(&vec![vec![4, 0], vec![0, 4]]).unwrap());
        assert!(!is_positive_definite_int(&vec![vec![0, 1], vec![1, 0]]).unwrap());
        assert!(is_positive_definite_int(&vec![vec![2, 1], vec![1, 2]]).unwrap());
        assert_eq!(is_positive_definite_int(&vec![vec![1, 2], vec![0, 1]]), Err(Error::NotSymmetric));
    }

    #[test]
    fn bilinear() {
        let a = vec![vec![0, 2], vec![-2, 0]];
        assert_eq!(bilinear_eval(&a, &[1, 0], &[0, 1]).unwrap(), 2);
        assert_eq!(bilinear_eval(&a, &[0, 0], &[3, 1]).unwrap(), 0);
        assert_eq!(bilinear_eval(&a, &[3, -5], &[3, -5]).unwrap(), 0);
        assert!(bilinear_eval(&a, &[1], &[0, 1]).is_err());
    }

    #[test]
    fn solving() {
        let m = vec![vec![2, 0], vec![0, 3]];
        assert_eq!(solve_integer(&m, 2, &[4, 9]).unwrap(), Some(vec![2, 3]));
        assert_eq!(solve_integer(&m, 2, &[1, 0]).unwrap(), None);
        let k = kernel_basis(&vec![vec![1, 1]], 2).unwrap();
        assert_eq!(k.len(), 1);
        assert_eq!(k[0][0] + k[0][1], 0);
        assert_eq!(det(&vec![vec![2, 1], vec![1, 3]]).unwrap(), 5);
    }
}
