//! Theta multipliers B -> G(H, alpha), presented on a basis of B = Z^r.

mod ops;
mod theta;

pub use ops::{
    boxtimes, compose, hidden_from_morphism, lift_point, pic_hom, power, pullback, theta_product, twist_multiplier, LiftChoice,
};
pub use theta::{check_functional_equations, is_ample, theta_dim, theta_dim_basis, theta_basis_lenient, ThetaBasis};

use std::fmt;

use crate::error::{Error, Result};
use crate::heisenberg::{heis_mul, same_class, HeisElement};
use crate::lattice::{LatticeMap, Mat};
use crate::qtorus::{QuantParam, TorusPoint};
use crate::scalar_ring::{CycloRational, UnitMonomial};

/// A theta multiplier given by the images of the basis of B.
#[derive(Clone, PartialEq, Eq)]
pub struct Multiplier {
    pub param: QuantParam,
    pub images: Vec<HeisElement>,
    /// Symmetric square roots of the structure pairing on generators, when
    /// representable.
    pub sqrt: Option<Vec<Vec<UnitMonomial>>>,
    pairing: Vec<Vec<UnitMonomial>>,
}

/// Automorphy factors on generators.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AutomorphyFactors {
    pub psi_l: Vec<UnitMonomial>,
    pub psi_r: Vec<UnitMonomial>,
    pub sqrt: Vec<Vec<UnitMonomial>>,
    pub x_l: Vec<TorusPoint>,
    pub x_r: Vec<TorusPoint>,
    pub h_l: Vec<Vec<i64>>,
    pub h_r: Vec<Vec<i64>>,
}

fn pairing_of(param: &QuantParam, a: &HeisElement, b: &HeisElement) -> UnitMonomial {
    a.x_l.eval(&b.h_l).mul(&param.alpha(&a.h_l, &b.h_l))
}

/// Validates generator images and the square-root matrix.
pub fn multiplier_new(
    param: &QuantParam,
    images: Vec<HeisElement>,
    sqrt: Option<Vec<Vec<UnitMonomial>>>,
) -> Result<Multiplier> {
    let r = images.len();
    for im in &images {
        if &im.param != param {
            return Err(Error::ParamMismatch);
        }
    }
    let pairing: Vec<Vec<UnitMonomial>> =
        (0..r).map(|i| (0..r).map(|j| pairing_of(param, &images[i], &images[j])).collect()).collect();
    for i in 0..r {
        for j in i + 1..r {
            if pairing[i][j] != pairing[j][i] {
                return Err(Error::NonSymmetricPairing(i, j));
            }
        }
    }
    for i in 0..r {
        for j in i + 1..r {
            let ab = heis_mul(&images[i].left(), &images[j].left())?;
            let ba = heis_mul(&images[j].left(), &images[i].left())?;
            if !same_class(&ab, &ba)? {
                return Err(Error::CocycleFailure(i, j));
            }
        }
    }
    if let Some(s) = &sqrt {
        if s.len() != r || s.iter().any(|row| row.len() != r) {
            return Err(Error::DimensionMismatch { expected: r, got: s.len() });
        }
        for i in 0..r {
            for j in 0..r {
                if s[i][j] != s[j][i] || s[i][j].pow(2) != pairing[i][j] {
                    return Err(Error::SqrtMismatch(i.min(j), i.max(j)));
                }
            }
        }
    }
    Ok(Multiplier { param: param.clone(), images, sqrt, pairing })
}

/// A square root of m in the monomial group, searching Q(zeta) large enough
/// to hold square roots of the roots of unity in m's coefficient field.
pub(crate) fn monomial_sqrt(m: &UnitMonomial) -> Option<UnitMonomial> {
    let ord = m.coeff().order();
    let l = 2 * crate::scalar_ring::cyclo::roots_of_unity_order(ord);
    m.nth_root(2, l)
}

/// Builds a multiplier, deriving the square-root matrix from `hint` where the
/// hinted entries are correct and from monomial square roots elsewhere.
pub fn multiplier_with_sqrt_hint(
    param: &QuantParam,
    images: Vec<HeisElement>,
    hint: Option<Vec<Vec<UnitMonomial>>>,
) -> Result<Multiplier> {
    let mut m = multiplier_new(param, images, None)?;
    let r = m.rank();
    let mut s = vec![vec![UnitMonomial::one(); r]; r];
    for i in 0..r {
        for j in i..r {
            let p = &m.pairing[i][j];
            let h = hint.as_ref().and_then(|h| h.get(i).and_then(|row| row.get(j))).filter(|h| &h.pow(2) == p);
            let v = match h {
                Some(v) => v.clone(),
                None => match monomial_sqrt(p) {
                    Some(v) => v,
                    None => return Ok(m),
                },
            };
            s[i][j] = v.clone();
            s[j][i] = v;
        }
    }
    m.sqrt = Some(s);
    Ok(m)
}

impl Multiplier {
    /// Rank of B.
    pub fn rank(&self) -> usize {
        self.images.len()
    }

    /// Rank of H.
    pub fn dim(&self) -> usize {
        self.param.rank()
    }

    /// The structure pairing on generators.
    pub fn pairing_matrix(&self) -> &[Vec<UnitMonomial>] {
        &self.pairing
    }

    /// h^-: B -> H as a d x r matrix.
    pub fn h_minus(&self) -> LatticeMap {
        let d = self.dim();
        LatticeMap::from_columns(d, &self.images.iter().map(|e| e.h_l.clone()).collect::<Vec<_>>())
            .unwrap_or_else(|_| LatticeMap::new(0, d, vec![vec![]; d]).expect("empty map"))
    }

    pub fn h_minus_at(&self, n: &[i64]) -> Vec<i64> {
        let mut h = vec![0; self.dim()];
        for (k, im) in n.iter().zip(&self.images) {
            for (a, b) in h.iter_mut().zip(&im.h_l) {
                *a += k * b;
            }
        }
        h
    }

    /// x_{l,b} = prod x_{l,b_i}^{n_i}.
    pub fn x_l_at(&self, n: &[i64]) -> TorusPoint {
        let mut x = TorusPoint::identity(self.dim());
        for (k, im) in n.iter().zip(&self.images) {
            if *k != 0 {
                x = x.mul(&im.x_l.pow(*k));
            }
        }
        x
    }

    /// c_{l,b} from the cocycle relation on generators, no square roots needed:
    /// c(sum n_i b_i) = prod c_i^{n_i} <b_i,b_i>^{n_i(n_i-1)/2} prod_{i<j} <b_i,b_j>^{n_i n_j}.
    pub fn c_l_at(&self, n: &[i64]) -> UnitMonomial {
        let r = self.rank();
        let mut c = UnitMonomial::one();
        for i in 0..r {
            if n[i] == 0 {
                continue;
            }
            c = c.mul(&self.images[i].c_l.pow(n[i]));
            c = c.mul(&self.pairing[i][i].pow(n[i] * (n[i] - 1) / 2));
            for j in i + 1..r {
                if n[j] != 0 {
                    c = c.mul(&self.pairing[i][j].pow(n[i] * n[j]));
                }
            }
        }
        c
    }

    /// L(b) from the closed forms.
    pub fn image_at(&self, n: &[i64]) -> HeisElement {
        HeisElement {
            param: self.param.clone(),
            c_l: self.c_l_at(n),
            x_l: self.x_l_at(n),
            h_l: self.h_minus_at(n),
        }
    }

    /// L(b) computed by multiplying generator images in G(H, alpha).
    pub fn image_by_word(&self, n: &[i64]) -> Result<HeisElement> {
        let mut acc = HeisElement::unit_at(&self.param, TorusPoint::identity(self.dim()));
        for (k, im) in n.iter().zip(&self.images) {
            let g = if *k >= 0 { im.clone() } else { im.inverse() };
            for _ in 0..k.abs() {
                acc = acc.mul(&g)?;
            }
        }
        Ok(acc)
    }

    pub fn x_l(&self) -> Vec<TorusPoint> {
        self.images.iter().map(|e| e.x_l.clone()).collect()
    }

    pub fn x_r(&self) -> Vec<TorusPoint> {
        self.images.iter().map(|e| e.x_r()).collect()
    }

    /// Valuations of the structure pairing on generators.
    pub fn valuation_form(&self) -> Mat {
        self.pairing.iter().map(|row| row.iter().map(|v| v.uexp()).collect()).collect()
    }

    /// Whether c_{l,b} = c_{l,-b} for all b.
    pub fn is_symmetric(&self) -> bool {
        let r = self.rank();
        (0..r).all(|i| {
            let mut e = vec![0; r];
            e[i] = 1;
            let c = self.c_l_at(&e);
            e[i] = -1;
            c == self.c_l_at(&e)
        })
    }
}

/// h^-_{b2}(x_{l,b1}) alpha(h^-_{b1}, h^-_{b2}).
pub fn structure_pairing(l: &Multiplier, b1: &[i64], b2: &[i64]) -> Result<UnitMonomial> {
    for b in [b1, b2] {
        if b.len() != l.rank() {
            return Err(Error::DimensionMismatch { expected: l.rank(), got: b.len() });
        }
    }
    let (h1, h2) = (l.h_minus_at(b1), l.h_minus_at(b2));
    Ok(l.x_l_at(b1).eval(&h2).mul(&l.param.alpha(&h1, &h2)))
}

pub fn automorphy_factors(l: &Multiplier) -> Result<AutomorphyFactors> {
    let sqrt = l.sqrt.clone().ok_or_else(|| Error::Unrepresentable("square root of the structure pairing".into()))?;
    let psi_l: Vec<UnitMonomial> = l.images.iter().enumerate().map(|(i, e)| e.c_l.div(&sqrt[i][i])).collect();
    let psi_r = psi_l.iter().zip(&l.images).map(|(p, e)| p.mul(&l.param.epsilon_mono(&e.h_l))).collect();
    let rights: Vec<_> = l.images.iter().map(|e| e.right()).collect();
    Ok(AutomorphyFactors {
        psi_l,
        psi_r,
        sqrt,
        x_l: l.x_l(),
        x_r: rights.iter().map(|r| r.x.clone()).collect(),
        h_l: l.images.iter().map(|e| e.h_l.clone()).collect(),
        h_r: rights.iter().map(|r| r.h.clone()).collect(),
    })
}

/// Whether psi_l takes values in {+-1}.
pub fn psi_is_sign(f: &AutomorphyFactors) -> bool {
    let one = CycloRational::one();
    f.psi_l.iter().all(|p| p.uexp() == 0 && (p.coeff() == &one || p.coeff() == &one.neg()))
}

impl fmt::Debug for Multiplier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Multiplier").field("images", &self.images).field("sqrt", &self.sqrt).finish()
    }
}

/// The Jacobi multiplier on Z: m -> [q^{m^2}; h0 -> q^{2m}, m h0, 0].
pub fn jacobi() -> Multiplier {
    let p = QuantParam::trivial(1);
    let im = HeisElement::new(&p, UnitMonomial::q(1), TorusPoint::new(vec![UnitMonomial::q(2)]), vec![1]).unwrap();
    multiplier_new(&p, vec![im], Some(vec![vec![UnitMonomial::q(1)]])).unwrap()
}

/// The multiplier sending every generator to the identity.
pub fn trivial_multiplier(param: &QuantParam, r: usize) -> Multiplier {
    let id = HeisElement::unit_at(param, TorusPoint::identity(param.rank()));
    multiplier_new(param, vec![id; r], Some(vec![vec![UnitMonomial::one(); r]; r])).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_pairing_and_factors() {
        let l = jacobi();
        assert_eq!(structure_pairing(&l, &[2], &[3]).unwrap(), UnitMonomial::q(12));
        assert!(structure_pairing(&l, &[2], &[0]).unwrap().is_one());
        let f = automorphy_factors(&l).unwrap();
        assert!(f.psi_l[0].is_one());
        assert_eq!(f.psi_l, f.psi_r);
        assert!(psi_is_sign(&f) && l.is_symmetric());
        assert_eq!(l.c_l_at(&[3]), UnitMonomial::q(9));
        assert_eq!(l.c_l_at(&[-2]), UnitMonomial::q(4));
    }

    #[test]
    fn closed_form_matches_word_product() {
        let l = jacobi();
        for n in -4..=4 {
            assert_eq!(l.image_by_word(&[n]).unwrap(), l.image_at(&[n]));
        }
        let t = trivial_multiplier(&QuantParam::tq(), 2);
        assert!(t.image_at(&[3, -1]).is_identity());
    }

    #[test]
    fn non_commuting_generators_rejected() {
        let p = QuantParam::trivial(1);
        let a = HeisElement::new(&p, UnitMonomial::one(), TorusPoint::new(vec![UnitMonomial::q(1)]), vec![0]).unwrap();
        let b = HeisElement::new(&p, UnitMonomial::one(), TorusPoint::identity(1), vec![1]).unwrap();
        assert!(matches!(multiplier_new(&p, vec![a, b], None), Err(Error::NonSymmetricPairing(0, 1))));
    }

    #[test]
    fn sqrt_checked() {
        let l = jacobi();
        let bad = multiplier_new(&l.param, l.images.clone(), Some(vec![vec![UnitMonomial::q(2)]]));
        assert!(matches!(bad, Err(Error::SqrtMismatch(0, 0))));
        let m = multiplier_with_sqrt_hint(&l.param, l.images.clone(), None).unwrap();
        assert_eq!(m.sqrt, l.sqrt);
    }

    #[test]
    fn hidden_period_multiplier_on_tq() {
        use crate::lattice::LatticeMap;
        use crate::qtorus::Region;
        let p = QuantParam::tq();
        let l = hidden_from_morphism(
            &p,
            &LatticeMap::identity(2),
            &LatticeMap::scalar(2, -1),
            &[UnitMonomial::q(1), UnitMonomial::one()],
        )
        .unwrap();
        for n in [[1, 0], [0, 1], [2, -1], [-3, 2], [1, 1]] {
            assert_eq!(l.image_by_word(&n).unwrap(), l.image_at(&n), "{:?}", n);
        }
        assert_eq!(l.h_minus_at(&[1, 1]), vec![2, 2]);
        assert!(!is_ample(&l));
        let b = theta_dim_basis(&l).unwrap();
        assert_eq!(b.dim, 4);
        for th in &b.basis {
            assert_eq!(check_functional_equations(&l, th, &Region::cube(2, 4), 24).unwrap(), None);
        }
    }
}
