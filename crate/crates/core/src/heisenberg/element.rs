use std::fmt;

use crate::error::{Error, Result};
use crate::lattice::solve_integer;
use crate::qtorus::{QuantParam, TorusPoint, TorusSeries};
use crate::scalar_ring::UnitMonomial;

fn add(a: &[i64], b: &[i64]) -> Vec<i64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn sub(a: &[i64], b: &[i64]) -> Vec<i64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn neg(a: &[i64]) -> Vec<i64> {
    a.iter().map(|x| -x).collect()
}

/// [c; x, g, h], acting by f -> c e(g) x^*(f) e(h)^{-1}.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct HeisRaw {
    pub param: QuantParam,
    pub c: UnitMonomial,
    pub x: TorusPoint,
    pub g: Vec<i64>,
    pub h: Vec<i64>,
}

impl HeisRaw {
    pub fn new(param: &QuantParam, c: UnitMonomial, x: TorusPoint, g: Vec<i64>, h: Vec<i64>) -> Result<Self> {
        let d = param.rank();
        for len in [x.dim(), g.len(), h.len()] {
            if len != d {
                return Err(Error::DimensionMismatch { expected: d, got: len });
            }
        }
        Ok(HeisRaw { param: param.clone(), c, x, g, h })
    }

    pub fn identity(param: &QuantParam) -> Self {
        let d = param.rank();
        HeisRaw {
            param: param.clone(),
            c: UnitMonomial::one(),
            x: TorusPoint::identity(d),
            g: vec![0; d],
            h: vec![0; d],
        }
    }

    /// The pure shift [1; x, 0, 0].
    pub fn shift(param: &QuantParam, x: TorusPoint) -> Self {
        let mut r = Self::identity(param);
        r.x = x;
        r
    }

    /// [1; A_h^2, h, h], an element of the kernel of the action.
    pub fn kernel_element(param: &QuantParam, h: &[i64]) -> Self {
        HeisRaw {
            param: param.clone(),
            c: UnitMonomial::one(),
            x: param.hidden_point(h).pow(2),
            g: h.to_vec(),
            h: h.to_vec(),
        }
    }

    pub fn inverse(&self) -> HeisRaw {
        // [c;x,g,h]^{-1} = [c'; x^{-1}, -g, -h] with c' fixed by the group law
        let cand = HeisRaw {
            param: self.param.clone(),
            c: UnitMonomial::one(),
            x: self.x.inv(),
            g: neg(&self.g),
            h: neg(&self.h),
        };
        let prod = heis_mul(&cand, self).expect("same param");
        HeisRaw { c: prod.c.inv(), ..cand }
    }

    pub fn act(&self, f: &TorusSeries) -> Result<TorusSeries> {
        heis_act(self, f)
    }
}

/// Group law: [c';x',g',h'] . [c;x,g,h].
pub fn heis_mul(a: &HeisRaw, b: &HeisRaw) -> Result<HeisRaw> {
    if a.param != b.param {
        return Err(Error::ParamMismatch);
    }
    let p = &a.param;
    let c = a
        .c
        .mul(&b.c)
        .mul(&a.x.eval(&b.g))
        .mul(&a.x.eval(&b.h).inv())
        .mul(&p.alpha(&a.g, &b.g))
        .mul(&p.alpha(&a.h, &b.h).inv());
    Ok(HeisRaw {
        param: p.clone(),
        c,
        x: b.x.mul(&a.x),
        g: add(&a.g, &b.g),
        h: add(&a.h, &b.h),
    })
}

pub fn heis_act(a: &HeisRaw, f: &TorusSeries) -> Result<TorusSeries> {
    if &a.param != f.param() {
        return Err(Error::ParamMismatch);
    }
    f.act_parts(&a.c, &a.x, &a.g, &a.h)
}

/// Left and right representatives of the class of `a`.
pub fn representatives(a: &HeisRaw) -> (HeisRaw, HeisRaw) {
    let p = &a.param;
    let d = p.rank();
    let base = a.c.mul(&p.alpha(&a.h, &a.g));
    let left = HeisRaw {
        param: p.clone(),
        c: base.mul(&p.epsilon_mono(&a.h)),
        x: a.x.mul(&p.hidden_point(&a.h).pow(-2)),
        g: sub(&a.g, &a.h),
        h: vec![0; d],
    };
    let right = HeisRaw {
        param: p.clone(),
        c: base.mul(&p.epsilon_mono(&a.g)),
        x: a.x.mul(&p.hidden_point(&a.g).pow(-2)),
        g: vec![0; d],
        h: sub(&a.h, &a.g),
    };
    (left, right)
}

pub fn same_class(a: &HeisRaw, b: &HeisRaw) -> Result<bool> {
    if a.param != b.param {
        return Err(Error::ParamMismatch);
    }
    Ok(representatives(a).0 == representatives(b).0)
}

/// A class of the large Heisenberg group, stored by its left
/// representative [c_l; x_l, h_l, 0].
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct HeisElement {
    pub param: QuantParam,
    pub c_l: UnitMonomial,
    pub x_l: TorusPoint,
    pub h_l: Vec<i64>,
}

impl HeisElement {
    pub fn new(param: &QuantParam, c_l: UnitMonomial, x_l: TorusPoint, h_l: Vec<i64>) -> Result<Self> {
        let d = param.rank();
        for len in [x_l.dim(), h_l.len()] {
            if len != d {
                return Err(Error::DimensionMismatch { expected: d, got: len });
            }
        }
        Ok(HeisElement { param: param.clone(), c_l, x_l, h_l })
    }

    pub fn from_raw(a: &HeisRaw) -> Self {
        let l = representatives(a).0;
        HeisElement { param: l.param, c_l: l.c, x_l: l.x, h_l: l.g }
    }

    /// The identity morphism of the object xi.
    pub fn unit_at(param: &QuantParam, xi: TorusPoint) -> Self {
        HeisElement { param: param.clone(), c_l: UnitMonomial::one(), x_l: xi, h_l: vec![0; param.rank()] }
    }

    pub fn left(&self) -> HeisRaw {
        HeisRaw {
            param: self.param.clone(),
            c: self.c_l.clone(),
            x: self.x_l.clone(),
            g: self.h_l.clone(),
            h: vec![0; self.param.rank()],
        }
    }

    pub fn right(&self) -> HeisRaw {
        representatives(&self.left()).1
    }

    /// h^-: the image in H.
    pub fn h_minus(&self) -> &[i64] {
        &self.h_l
    }

    pub fn x_r(&self) -> TorusPoint {
        self.right().x
    }

    pub fn mul(&self, o: &HeisElement) -> Result<HeisElement> {
        Ok(HeisElement::from_raw(&heis_mul(&self.left(), &o.left())?))
    }

    pub fn inverse(&self) -> HeisElement {
        HeisElement::from_raw(&self.left().inverse())
    }

    pub fn act(&self, f: &TorusSeries) -> Result<TorusSeries> {
        heis_act(&self.left(), f)
    }

    pub fn is_identity(&self) -> bool {
        self.c_l.is_one() && self.x_l.is_identity() && self.h_l.iter().all(|v| *v == 0)
    }
}

/// a o b, defined when x_r(a) = x_l(b).
pub fn compose(a: &HeisElement, b: &HeisElement) -> Result<HeisElement> {
    if a.param != b.param {
        return Err(Error::ParamMismatch);
    }
    let ar = a.right();
    if ar.x != b.x_l {
        return Err(Error::NotComposable(format!("x_r = {:?}, x_l = {:?}", ar.x, b.x_l)));
    }
    let d = a.param.rank();
    let outer = HeisRaw {
        param: a.param.clone(),
        c: ar.c,
        x: TorusPoint::identity(d),
        g: vec![0; d],
        h: ar.h,
    };
    Ok(HeisElement::from_raw(&heis_mul(&outer, &b.left())?))
}

/// The groupoid inverse of a: eta -> xi, a morphism xi -> eta with left
/// point xi = x_r(a) and h_l negated. The scalar is read off a o^{-1} a.
pub fn groupoid_inverse(a: &HeisElement) -> HeisElement {
    let cand = HeisElement { param: a.param.clone(), c_l: UnitMonomial::one(), x_l: a.x_r(), h_l: neg(&a.h_l) };
    let unit = compose(&cand, a).expect("x_r of the candidate is x_l(a)");
    HeisElement { c_l: unit.c_l.inv(), ..cand }
}

/// The representative [c; 1, g, h] of the class, if one exists.
pub fn double_sided(a: &HeisElement) -> Result<Option<HeisRaw>> {
    let p = &a.param;
    let d = p.rank();
    if d > 0 && crate::lattice::det(p.a())? == 0 {
        return Err(Error::DegenerateAlpha);
    }
    // need x_l * A_k^2 = 1, i.e. 2 (A k)_i = -uexp(x_l)_i with unit coefficients
    let mut rhs = vec![0; d];
    for (i, v) in a.x_l.values().iter().enumerate() {
        if !v.coeff().is_one() || v.uexp() % 2 != 0 {
            return Ok(None);
        }
        rhs[i] = -v.uexp() / 2;
    }
    // the u-exponent of A_k at e_i is (e_i^T A k)
    let k = match solve_integer(p.a(), d, &rhs)? {
        Some(k) => k,
        None => return Ok(None),
    };
    let r = heis_mul(&a.left(), &HeisRaw::kernel_element(p, &k))?;
    debug_assert!(r.x.is_identity());
    Ok(Some(r))
}

/// u_{alpha,beta}: [c; x, h, 0]_alpha -> [c; x A_h^{-1} B_h, h, 0]_beta.
pub fn twist(source: &QuantParam, target: &QuantParam, a: &HeisElement) -> Result<HeisElement> {
    if source.rank() != target.rank() {
        return Err(Error::LatticeMismatch(source.rank(), target.rank()));
    }
    if &a.param != source {
        return Err(Error::ParamMismatch);
    }
    let x = a.x_l.mul(&source.hidden_point(&a.h_l).inv()).mul(&target.hidden_point(&a.h_l));
    HeisElement::new(target, a.c_l.clone(), x, a.h_l.clone())
}

/// psi_{d,n}: G(H, alpha^d) -> G(H, alpha), [c; x, h_l, h_r] -> [c^{n^2/d}; x^{n/d}, n h_l, n h_r].
pub fn psi_dn(d: i64, n: i64, a: &HeisElement, target: &QuantParam) -> Result<HeisElement> {
    if d == 0 || n % d != 0 {
        return Err(Error::Indivisible { d, n });
    }
    if a.param != target.power(d) {
        return Err(Error::ParamMismatch);
    }
    let h = a.h_l.iter().map(|v| n * v).collect();
    HeisElement::new(target, a.c_l.pow(n * n / d), a.x_l.pow(n / d), h)
}

impl fmt::Debug for HeisRaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}; {:?}, {:?}, {:?}]", self.c, self.x, self.g, self.h)
    }
}

impl fmt::Debug for HeisElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}; {:?}, {:?}, 0]", self.c_l, self.x_l, self.h_l)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar_ring::ScalarSeries;

    fn tq() -> QuantParam {
        QuantParam::tq()
    }

    #[test]
    fn mul_examples() {
        let p = tq();
        let a = HeisRaw::new(&p, UnitMonomial::q(1), TorusPoint::identity(2), vec![1, 0], vec![0, 0]).unwrap();
        let e = TorusSeries::exponent(&p, &[0, 1]);
        let r = heis_act(&a, &e).unwrap().expand_algebraic().unwrap();
        assert_eq!(r[&vec![1, 1]], ScalarSeries::u_pow(4));
    }

    #[test]
    fn left_of_pure_right_exponent() {
        let p = tq();
        let a = HeisRaw::new(&p, UnitMonomial::one(), TorusPoint::identity(2), vec![0, 0], vec![1, 0]).unwrap();
        let (l, _) = representatives(&a);
        assert_eq!(l.c, UnitMonomial::one());
        assert_eq!(l.x, p.hidden_point(&[1, 0]).pow(-2));
        assert_eq!(l.g, vec![-1, 0]);
    }

    #[test]
    fn identity_composition() {
        let p = tq();
        let b = HeisElement::new(&p, UnitMonomial::q(2), TorusPoint::from_uexps(&[2, -2]), vec![1, 1]).unwrap();
        let id = HeisElement::unit_at(&p, b.x_l.clone());
        assert_eq!(compose(&id, &b).unwrap(), b);
        let bad = HeisElement::unit_at(&p, TorusPoint::identity(2));
        assert!(matches!(compose(&bad, &b), Err(Error::NotComposable(_))));
    }

    #[test]
    fn double_sided_round_trip() {
        let p = tq();
        let raw = HeisRaw::new(&p, UnitMonomial::q(1), TorusPoint::identity(2), vec![1, 2], vec![0, 1]).unwrap();
        let e = HeisElement::from_raw(&raw);
        let ds = double_sided(&e).unwrap().unwrap();
        assert_eq!(ds, raw);
        let odd = HeisElement::new(&p, UnitMonomial::one(), TorusPoint::from_uexps(&[1, 0]), vec![0, 0]).unwrap();
        assert!(double_sided(&odd).unwrap().is_none());
        assert!(matches!(double_sided(&HeisElement::unit_at(&QuantParam::trivial(1), TorusPoint::identity(1))), Err(Error::DegenerateAlpha)));
    }

    #[test]
    fn psi_examples() {
        let p = tq();
        let e = HeisElement::new(&p.power(2), UnitMonomial::u(1), TorusPoint::from_uexps(&[2, 0]), vec![1, 0]).unwrap();
        let r = psi_dn(2, 2, &e, &p).unwrap();
        assert_eq!(r.c_l, UnitMonomial::u(2));
        assert_eq!(r.x_l, TorusPoint::from_uexps(&[2, 0]));
        assert_eq!(r.h_l, vec![2, 0]);
        assert!(matches!(psi_dn(2, 3, &e, &p), Err(Error::Indivisible { .. })));
    }
}
