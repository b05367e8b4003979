use super::element::HeisElement;
use crate::error::{Error, Result};
use crate::lattice::LatticeMap;
use crate::qtorus::{QuantParam, TorusPoint, TorusSeries};
use crate::scalar_ring::UnitMonomial;

/// A morphism of quantum tori given on functions by e(h) -> a_h e(f(h)).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TorusMorphism {
    pub f: LatticeMap,
    /// Values a_{e_i} on the source basis; a is extended multiplicatively.
    pub a: Vec<UnitMonomial>,
    pub source: QuantParam,
    pub target: QuantParam,
}

fn unit(d: usize, i: usize) -> Vec<i64> {
    let mut e = vec![0; d];
    e[i] = 1;
    e
}

/// Validates alpha_2^2(f e_i, f e_j) = alpha_1^2(e_i, e_j) on basis pairs.
pub fn morphism_new(
    f: LatticeMap,
    a: Vec<UnitMonomial>,
    source: &QuantParam,
    target: &QuantParam,
) -> Result<TorusMorphism> {
    if f.src() != source.rank() {
        return Err(Error::DimensionMismatch { expected: source.rank(), got: f.src() });
    }
    if f.dst() != target.rank() {
        return Err(Error::DimensionMismatch { expected: target.rank(), got: f.dst() });
    }
    if a.len() != source.rank() {
        return Err(Error::DimensionMismatch { expected: source.rank(), got: a.len() });
    }
    let d = source.rank();
    for i in 0..d {
        for j in 0..d {
            let (ei, ej) = (unit(d, i), unit(d, j));
            let lhs = target.alpha_uexp(&f.apply(&ei), &f.apply(&ej));
            if lhs != source.alpha_uexp(&ei, &ej) {
                return Err(Error::IncompatibleQuantization(i, j));
            }
        }
    }
    Ok(TorusMorphism { f, a, source: source.clone(), target: target.clone() })
}

impl TorusMorphism {
    pub fn identity(param: &QuantParam) -> Self {
        let d = param.rank();
        morphism_new(LatticeMap::identity(d), vec![UnitMonomial::one(); d], param, param).unwrap()
    }

    /// [n]: h -> n h from alpha^{n^2} to alpha.
    pub fn multiplication(n: i64, target: &QuantParam) -> Result<Self> {
        let d = target.rank();
        morphism_new(LatticeMap::scalar(d, n), vec![UnitMonomial::one(); d], &target.power(n * n), target)
    }

    /// Mumford's map (h, g) -> (h + g, h - g) from alpha^2 + alpha^2 to alpha + alpha.
    pub fn mumford(param: &QuantParam) -> Result<Self> {
        let d = param.rank();
        let mut m = vec![vec![0; 2 * d]; 2 * d];
        for i in 0..d {
            m[i][i] = 1;
            m[i][d + i] = 1;
            m[d + i][i] = 1;
            m[d + i][d + i] = -1;
        }
        let sq = param.power(2);
        morphism_new(
            LatticeMap::new(2 * d, 2 * d, m)?,
            vec![UnitMonomial::one(); 2 * d],
            &sq.direct_sum(&sq),
            &param.direct_sum(param),
        )
    }

    /// a_h = prod a_{e_i}^{h_i}.
    pub fn a_at(&self, h: &[i64]) -> UnitMonomial {
        let mut acc = UnitMonomial::one();
        for (v, e) in self.a.iter().zip(h) {
            if *e != 0 {
                acc = acc.mul(&v.pow(*e));
            }
        }
        acc
    }

    /// eps_f(h, g) = alpha_1(h, g) alpha_2(f h, f g)^{-1}, a sign.
    pub fn epsilon_f(&self, h: &[i64], g: &[i64]) -> i64 {
        let a1 = self.source.alpha_negative(h, g);
        let a2 = self.target.alpha_negative(&self.f.apply(h), &self.f.apply(g));
        if a1 ^ a2 {
            -1
        } else {
            1
        }
    }

    /// Whether the characteristic is trivial, i.e. F^* is multiplicative.
    pub fn is_multiplicative(&self) -> bool {
        let d = self.source.rank();
        (0..d).all(|i| (0..d).all(|j| self.epsilon_f(&unit(d, i), &unit(d, j)) == 1))
    }

    /// The induced map on points: phi(x)_i = (f e_i)(x).
    pub fn on_points(&self, x: &TorusPoint) -> TorusPoint {
        let d = self.source.rank();
        TorusPoint::new((0..d).map(|i| x.eval(&self.f.apply(&unit(d, i)))).collect())
    }
}

/// F^*: sum a_h e(h) -> sum a(h) a_h e(f(h)).
pub fn morphism_pullback(m: &TorusMorphism, s: &TorusSeries) -> Result<TorusSeries> {
    if s.param() != &m.source {
        return Err(Error::ParamMismatch);
    }
    s.pullback_along(&m.f, &m.a, &m.target, m.is_multiplicative())
}

/// [c a_g; x, f(g), 0] on the target side -> [c; phi(x), g, 0] on the source.
pub fn heis_transport(m: &TorusMorphism, b: &HeisElement) -> Result<HeisElement> {
    if b.param != m.target {
        return Err(Error::ParamMismatch);
    }
    if !m.f.is_injective()? {
        return Err(Error::NonInjectiveImage);
    }
    let g = m.f.preimage(&b.h_l)?.ok_or_else(|| Error::NotInImage(b.h_l.clone()))?;
    let c = b.c_l.div(&m.a_at(&g));
    HeisElement::new(&m.source, c, m.on_points(&b.x_l), g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heisenberg::element::heis_act;
    use crate::qtorus::Region;

    #[test]
    fn standard_morphisms_validate() {
        let p = QuantParam::tq();
        assert!(TorusMorphism::multiplication(3, &p).is_ok());
        assert!(TorusMorphism::mumford(&p).is_ok());
        let bad = morphism_new(LatticeMap::identity(2), vec![UnitMonomial::one(); 2], &p.power(2), &p);
        assert!(matches!(bad, Err(Error::IncompatibleQuantization(0, 1))));
    }

    #[test]
    fn mumford_on_exponents() {
        let p = QuantParam::trivial(1);
        let m = TorusMorphism::mumford(&p).unwrap();
        let e = TorusSeries::exponent(&m.source, &[2, 1]);
        let r = morphism_pullback(&m, &e).unwrap().expand_algebraic().unwrap();
        assert!(r.contains_key(&vec![3, 1]));
    }

    #[test]
    fn transport_reproduces_action() {
        let p = QuantParam::trivial(1);
        let m = TorusMorphism::multiplication(2, &p).unwrap();
        let b = HeisElement::new(&p, UnitMonomial::q(1), TorusPoint::from_uexps(&[2]), vec![2]).unwrap();
        let t = heis_transport(&m, &b).unwrap();
        assert_eq!(t.x_l, TorusPoint::from_uexps(&[4]));
        assert_eq!(t.h_l, vec![1]);
        // F^*(t(f)) = b(F^* f) on a monomial
        let f = TorusSeries::monomial(&m.source, UnitMonomial::u(3), &[1]);
        let lhs = morphism_pullback(&m, &heis_act(&t.left(), &f).unwrap()).unwrap();
        let rhs = heis_act(&b.left(), &morphism_pullback(&m, &f).unwrap()).unwrap();
        let reg = Region::cube(1, 6);
        assert_eq!(lhs.coeffs_on(&reg, 40).unwrap(), rhs.coeffs_on(&reg, 40).unwrap());
        assert!(matches!(
            heis_transport(&m, &HeisElement::new(&p, UnitMonomial::one(), TorusPoint::identity(1), vec![1]).unwrap()),
            Err(Error::NotInImage(_))
        ));
    }
}
