use std::sync::Arc;

use super::Multiplier;
use crate::error::{Error, Result};
use crate::lattice::{is_positive_definite_int, mat_mul, mat_vec, quotient_data, smith_normal_form, transpose, Lattice, Mat};
use crate::qtorus::{LatticeBody, Minorant, Point, Region, SeriesKind, TorusSeries};
use crate::scalar_ring::{ScalarSeries, UnitMonomial};

/// Basis of the theta space, one series per consistent coset of h^-(B).
#[derive(Clone)]
pub struct ThetaBasis {
    pub multiplier: Multiplier,
    pub dim: usize,
    pub index: u64,
    pub basis: Vec<TorusSeries>,
    /// Coset representative of each basis element, where its coefficient is 1.
    pub coset_reps: Vec<Point>,
    /// Representatives of cosets where the recurrence is inconsistent.
    pub inconsistent: Vec<Point>,
    pub ample: bool,
}

impl ThetaBasis {
    pub fn all_proper(&self) -> bool {
        self.basis.iter().all(|b| b.kind() <= SeriesKind::Proper)
    }
}

struct Split {
    /// r x k, columns a basis of a complement of the kernel of h^-.
    free: Mat,
    kernel: Vec<Vec<i64>>,
}

fn split(l: &Multiplier) -> Result<Split> {
    let r = l.rank();
    if r == 0 {
        return Ok(Split { free: vec![], kernel: vec![] });
    }
    let hm = l.h_minus();
    let s = smith_normal_form(hm.matrix())?;
    let rk = s.rank();
    let col = |j: usize| -> Vec<i64> { (0..r).map(|i| s.v[i][j]).collect() };
    let free = (0..r).map(|i| (0..rk).map(|j| s.v[i][j]).collect()).collect();
    let kernel = (rk..r).map(col).collect();
    Ok(Split { free, kernel })
}

/// Whether the recurrence closes up around the kernel of h^- on the coset of j.
fn coset_consistent(l: &Multiplier, kernel: &[Vec<i64>], j: &[i64]) -> bool {
    kernel.iter().all(|k| l.c_l_at(k).mul(&l.x_l_at(k).eval(j)).is_one())
}

/// The basis element with a_j = 1 and
/// a_{j + h_b} = c_{l,b} alpha(h_b, j) j(x_{l,b}).
fn basis_element(l: &Multiplier, free: &Mat, j: &[i64]) -> Result<TorusSeries> {
    let d = l.dim();
    let r = l.rank();
    let k = free.first().map_or(0, |row| row.len());
    if k == 0 {
        return TorusSeries::finite(&l.param, [(j.to_vec(), ScalarSeries::one())]);
    }
    let hm = l.h_minus();
    let map = mat_mul(hm.matrix(), free);
    // 2 mu(n) = n^T W n + lin . n in B-coordinates
    let w = l.valuation_form();
    let lin: Vec<i64> = (0..r)
        .map(|i| {
            let im = &l.images[i];
            2 * im.c_l.uexp() - w[i][i] + 2 * l.param.alpha_uexp(&im.h_l, j) + 2 * im.x_l.uexp_at(j)
        })
        .collect();
    let ft = transpose(free, k);
    let q2 = mat_mul(&mat_mul(&ft, &w), free);
    let l2 = mat_vec(&ft, &lin);
    let minorant = Minorant { q2, l2, c2: 0 };
    let lm = Arc::new(l.clone());
    let fr = Arc::new(free.clone());
    let jj = j.to_vec();
    let rule = Arc::new(move |p: &[i64], _n: i64| -> Result<ScalarSeries> {
        let n = mat_vec(&fr, p);
        let hb = lm.h_minus_at(&n);
        let v: UnitMonomial = lm.c_l_at(&n).mul(&lm.param.alpha(&hb, &jj)).mul(&lm.x_l_at(&n).eval(&jj));
        Ok(v.to_series())
    });
    let body = LatticeBody::new(
        j.to_vec(),
        map,
        vec![None; k],
        vec![None; k],
        rule,
        Some(minorant),
        format!("theta{:?}", j),
    )?;
    debug_assert_eq!(body.offset.len(), d);
    TorusSeries::lattice(&l.param, body)
}

fn build(l: &Multiplier) -> Result<ThetaBasis> {
    let d = l.dim();
    let q = quotient_data(Lattice { rank: d }, &l.h_minus())?;
    let index = q.index.ok_or(Error::InfiniteIndex)?;
    let sp = split(l)?;
    let mut basis = Vec::new();
    let mut reps = Vec::new();
    let mut bad = Vec::new();
    for j in &q.coset_reps {
        if coset_consistent(l, &sp.kernel, j) {
            basis.push(basis_element(l, &sp.free, j)?);
            reps.push(j.clone());
        } else {
            bad.push(j.clone());
        }
    }
    Ok(ThetaBasis {
        multiplier: l.clone(),
        dim: basis.len(),
        index,
        basis,
        coset_reps: reps,
        inconsistent: bad,
        ample: is_ample(l),
    })
}

/// Basis of the theta space; fails when some coset is inconsistent.
pub fn theta_dim_basis(l: &Multiplier) -> Result<ThetaBasis> {
    let b = build(l)?;
    if !b.inconsistent.is_empty() {
        return Err(Error::InconsistentRecurrence { achieved: b.dim, index: b.index });
    }
    Ok(b)
}

/// Basis for the consistent cosets only.
pub fn theta_basis_lenient(l: &Multiplier) -> Result<ThetaBasis> {
    build(l)
}

pub fn theta_dim(l: &Multiplier) -> Result<usize> {
    Ok(build(l)?.dim)
}

/// Finite index and positive definite valuation form.
pub fn is_ample(l: &Multiplier) -> bool {
    let finite = quotient_data(Lattice { rank: l.dim() }, &l.h_minus()).is_ok_and(|q| q.is_finite());
    finite && (l.rank() == 0 || is_positive_definite_int(&l.valuation_form()).unwrap_or(false))
}

/// Checks L(b_i) theta = theta for every generator, acting through both the
/// left and the right representative. Returns the first failure.
pub fn check_functional_equations(
    l: &Multiplier,
    theta: &TorusSeries,
    region: &Region,
    n: i64,
) -> Result<Option<String>> {
    if theta.param() != &l.param {
        return Err(Error::ParamMismatch);
    }
    let base = theta.coeffs_on(region, n)?;
    for (i, im) in l.images.iter().enumerate() {
        for (side, rep) in [("left", im.left()), ("right", im.right())] {
            let w = rep.act(theta)?.coeffs_on(region, n)?;
            if let Some((p, e)) = w.first_difference(&base, n) {
                return Ok(Some(format!("generator {} ({}): mismatch at {:?}, u^{}", i, side, p, e)));
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heisenberg::HeisElement;
    use crate::multiplier::{jacobi, multiplier_new, trivial_multiplier};
    use crate::qtorus::{QuantParam, TorusPoint};

    #[test]
    fn jacobi_basis_is_theta() {
        let b = theta_dim_basis(&jacobi()).unwrap();
        assert_eq!((b.dim, b.index), (1, 1));
        assert!(b.ample && b.all_proper());
        for n in -8..=8i64 {
            assert_eq!(b.basis[0].coeff(&[n], 200).unwrap(), UnitMonomial::q(n * n).to_series().truncate(200));
        }
        assert_eq!(check_functional_equations(&jacobi(), &b.basis[0], &Region::cube(1, 8), 40).unwrap(), None);
    }

    #[test]
    fn trivial_is_not_ample() {
        let t = trivial_multiplier(&QuantParam::trivial(1), 1);
        assert!(!is_ample(&t));
        assert!(matches!(theta_dim_basis(&t), Err(Error::InfiniteIndex)));
    }

    #[test]
    fn inconsistent_kernel() {
        let p = QuantParam::trivial(1);
        let a = HeisElement::new(&p, UnitMonomial::one(), TorusPoint::new(vec![UnitMonomial::q(2)]), vec![1]).unwrap();
        let k = HeisElement::new(&p, UnitMonomial::q(1), TorusPoint::identity(1), vec![0]).unwrap();
        let l = multiplier_new(&p, vec![a, k], None).unwrap();
        assert!(matches!(theta_dim_basis(&l), Err(Error::InconsistentRecurrence { achieved: 0, index: 1 })));
        assert_eq!(theta_basis_lenient(&l).unwrap().dim, 0);
    }

    #[test]
    fn negated_pairing_not_ample() {
        let p = QuantParam::trivial(1);
        let im = HeisElement::new(&p, UnitMonomial::q(-1), TorusPoint::new(vec![UnitMonomial::q(-2)]), vec![1]).unwrap();
        let l = multiplier_new(&p, vec![im], Some(vec![vec![UnitMonomial::q(-1)]])).unwrap();
        assert!(!is_ample(&l));
        let b = theta_dim_basis(&l).unwrap();
        assert_eq!(b.basis[0].kind(), SeriesKind::Formal);
        assert_eq!(b.basis[0].coeff(&[3], 0).unwrap(), UnitMonomial::q(-9).to_series().truncate(0));
    }
}
