use super::{multiplier_with_sqrt_hint, Multiplier};
use crate::error::{Error, Result};
use crate::heisenberg::{self, HeisElement, HeisRaw, TorusMorphism};
use crate::lattice::{smith_normal_form, transpose, LatticeMap};
use crate::qtorus::{QuantParam, TorusPoint, TorusSeries};
use crate::scalar_ring::{CycloRational, UnitMonomial};

/// How to choose x' in phi^{-1}(x) when pulling back.
#[derive(Clone, Debug)]
pub enum LiftChoice {
    /// Monomial roots inside Q(zeta_m), as found by the Smith form.
    Canonical { m: u32 },
    /// Explicit lifts, one per generator; checked.
    Given(Vec<TorusPoint>),
}

fn scale_sqrt<F: Fn(usize, usize, &UnitMonomial) -> UnitMonomial>(
    l: &Multiplier,
    f: F,
) -> Option<Vec<Vec<UnitMonomial>>> {
    l.sqrt.as_ref().map(|s| {
        s.iter().enumerate().map(|(i, row)| row.iter().enumerate().map(|(j, v)| f(i, j, v)).collect()).collect()
    })
}

/// L^n over `target`, where L lives over target^n: [c^n; x, n h, 0].
pub fn power_to(l: &Multiplier, n: i64, target: &QuantParam) -> Result<Multiplier> {
    if n < 1 {
        return Err(Error::InvalidParam(format!("power exponent {} must be positive", n)));
    }
    if l.param != target.power(n) {
        return Err(Error::ParamMismatch);
    }
    let images = l
        .images
        .iter()
        .map(|e| heisenberg::psi_dn(n, n, e, target))
        .collect::<Result<Vec<_>>>()?;
    multiplier_with_sqrt_hint(target, images, scale_sqrt(l, |_, _, v| v.pow(n)))
}

/// L^n, reading L as living over alpha^n and returning a multiplier over alpha.
pub fn power(l: &Multiplier, n: i64) -> Result<Multiplier> {
    if n < 1 {
        return Err(Error::InvalidParam(format!("power exponent {} must be positive", n)));
    }
    power_to(l, n, &l.param.root(n)?)
}

/// External tensor product on B' + B''.
pub fn boxtimes(l1: &Multiplier, l2: &Multiplier) -> Result<Multiplier> {
    let p = l1.param.direct_sum(&l2.param);
    let (d1, d2) = (l1.dim(), l2.dim());
    let mut images = Vec::new();
    for e in &l1.images {
        let mut h = e.h_l.clone();
        h.extend(vec![0; d2]);
        images.push(HeisElement::new(&p, e.c_l.clone(), e.x_l.concat(&TorusPoint::identity(d2)), h)?);
    }
    for e in &l2.images {
        let mut h = vec![0; d1];
        h.extend(e.h_l.iter().copied());
        images.push(HeisElement::new(&p, e.c_l.clone(), TorusPoint::identity(d1).concat(&e.x_l), h)?);
    }
    let (r1, r2) = (l1.rank(), l2.rank());
    let hint = match (&l1.sqrt, &l2.sqrt) {
        (Some(a), Some(b)) => {
            let mut s = vec![vec![UnitMonomial::one(); r1 + r2]; r1 + r2];
            for i in 0..r1 {
                for j in 0..r1 {
                    s[i][j] = a[i][j].clone();
                }
            }
            for i in 0..r2 {
                for j in 0..r2 {
                    s[r1 + i][r1 + j] = b[i][j].clone();
                }
            }
            Some(s)
        }
        _ => None,
    };
    multiplier_with_sqrt_hint(&p, images, hint)
}

/// A point x' of the target torus with phi(x') = x, where
/// phi(x')_i = (f e_i)(x').
pub fn lift_point(f: &LatticeMap, x: &TorusPoint, m: u32) -> Result<TorusPoint> {
    let (d1, d2) = (f.src(), f.dst());
    if x.dim() != d1 {
        return Err(Error::DimensionMismatch { expected: d1, got: x.dim() });
    }
    if d1 == 0 {
        return Ok(TorusPoint::identity(d2));
    }
    if d2 == 0 {
        return if x.is_identity() { Ok(TorusPoint::identity(0)) } else { Err(Error::NoLift(format!("{:?}", x))) };
    }
    // phi in exponent form is f^T (d1 x d2); U f^T V = D
    let ft = transpose(f.matrix(), d1);
    let s = smith_normal_form(&ft)?;
    let diag = s.diagonal();
    let mut y = vec![UnitMonomial::one(); d2];
    for j in 0..d1 {
        let mut z = UnitMonomial::one();
        for i in 0..d1 {
            if s.u[j][i] != 0 {
                z = z.mul(&x.values()[i].pow(s.u[j][i]));
            }
        }
        let dj = diag.get(j).copied().unwrap_or(0);
        if dj == 0 {
            if !z.is_one() {
                return Err(Error::NoLift(format!("{:?} is off the image of phi", x)));
            }
            continue;
        }
        let z = if dj < 0 { z.inv() } else { z };
        y[j] = z
            .nth_root(dj.unsigned_abs() as u32, m)
            .ok_or_else(|| Error::NoLift(format!("no {}-th root of {:?} in Q(zeta_{})", dj.abs(), z, m)))?;
    }
    let vals = (0..d2)
        .map(|k| {
            let mut v = UnitMonomial::one();
            for (l, yl) in y.iter().enumerate() {
                if s.v[k][l] != 0 {
                    v = v.mul(&yl.pow(s.v[k][l]));
                }
            }
            v
        })
        .collect();
    let xp = TorusPoint::new(vals);
    debug_assert_eq!(&on_points(f, &xp), x);
    Ok(xp)
}

fn on_points(f: &LatticeMap, x: &TorusPoint) -> TorusPoint {
    let d1 = f.src();
    TorusPoint::new(
        (0..d1)
            .map(|i| {
                let mut e = vec![0; d1];
                e[i] = 1;
                x.eval(&f.apply(&e))
            })
            .collect(),
    )
}

/// F^*(L): [c a_h; x', f(h), 0] over the target of F.
pub fn pullback(m: &TorusMorphism, l: &Multiplier, lift: &LiftChoice) -> Result<Multiplier> {
    if l.param != m.source {
        return Err(Error::ParamMismatch);
    }
    let mut images = Vec::new();
    for (i, e) in l.images.iter().enumerate() {
        let xp = match lift {
            LiftChoice::Canonical { m: order } => lift_point(&m.f, &e.x_l, *order)?,
            LiftChoice::Given(pts) => {
                let p = pts.get(i).ok_or_else(|| Error::NoLift(format!("no lift given for generator {}", i)))?;
                if on_points(&m.f, p) != e.x_l {
                    return Err(Error::NoLift(format!("given lift {} does not map to x_l", i)));
                }
                p.clone()
            }
        };
        images.push(HeisElement::new(&m.target, e.c_l.mul(&m.a_at(&e.h_l)), xp, m.f.apply(&e.h_l))?);
    }
    let i4 = UnitMonomial::new(CycloRational::zeta(4), 0);
    let hint = scale_sqrt(l, |i, j, v| {
        if m.epsilon_f(&l.images[i].h_l, &l.images[j].h_l) == -1 {
            v.mul(&i4)
        } else {
            v.clone()
        }
    });
    multiplier_with_sqrt_hint(&m.target, images, hint)
}

/// Pointwise composition b -> L2(b) o L1(b).
pub fn compose(l2: &Multiplier, l1: &Multiplier) -> Result<Multiplier> {
    if l2.param != l1.param {
        return Err(Error::ParamMismatch);
    }
    if l2.rank() != l1.rank() {
        return Err(Error::LatticeMismatch(l2.rank(), l1.rank()));
    }
    let mut images = Vec::new();
    for (i, (a, b)) in l2.images.iter().zip(&l1.images).enumerate() {
        images.push(heisenberg::compose(a, b).map_err(|e| match e {
            Error::NotComposable(s) => Error::NotComposable(format!("generator {}: {}", i, s)),
            other => other,
        })?);
    }
    let hint = match (&l2.sqrt, &l1.sqrt) {
        (Some(s2), Some(s1)) => {
            let r = l1.rank();
            Some(
                (0..r)
                    .map(|i| {
                        (0..r)
                            .map(|j| {
                                let v = s2[i][j].mul(&s1[i][j]);
                                if i == j {
                                    v.mul(&l1.param.alpha(&l1.images[i].h_l, &l2.images[i].h_l))
                                } else {
                                    v
                                }
                            })
                            .collect()
                    })
                    .collect(),
            )
        }
        _ => None,
    };
    multiplier_with_sqrt_hint(&l1.param, images, hint)
}

/// The product th1 * th2 for th1 in Gamma(L1), th2 in Gamma(L2), which lies in
/// Gamma(compose(L2, L1)). Evaluated lazily through the product engine.
pub fn theta_product(
    l2: &Multiplier,
    l1: &Multiplier,
    th2: &TorusSeries,
    th1: &TorusSeries,
) -> Result<(Multiplier, TorusSeries)> {
    let l = compose(l2, l1)?;
    let prod = TorusSeries::word(vec![th1.clone(), th2.clone()])?;
    Ok((l, prod))
}

/// u_{alpha,beta} o L.
pub fn twist_multiplier(l: &Multiplier, target: &QuantParam) -> Result<Multiplier> {
    let images = l.images.iter().map(|e| heisenberg::twist(&l.param, target, e)).collect::<Result<Vec<_>>>()?;
    multiplier_with_sqrt_hint(target, images, l.sqrt.clone())
}

/// The alternate form alpha(h_l, h_l') alpha(h_r, h_r')^{-1} of two double-sided elements.
pub fn hidden_form(p: &QuantParam, hl1: &[i64], hr1: &[i64], hl2: &[i64], hr2: &[i64]) -> UnitMonomial {
    p.alpha(hl1, hl2).div(&p.alpha(hr1, hr2))
}

/// b -> [chi(b); 1, h_{l,b}, f(h_{l,b})] for b running over the columns of `sub`.
pub fn hidden_from_morphism(
    param: &QuantParam,
    sub: &LatticeMap,
    fmap: &LatticeMap,
    chi: &[UnitMonomial],
) -> Result<Multiplier> {
    let d = param.rank();
    if sub.dst() != d || fmap.src() != d || fmap.dst() != d {
        return Err(Error::DimensionMismatch { expected: d, got: sub.dst() });
    }
    let r = sub.src();
    if chi.len() != r {
        return Err(Error::DimensionMismatch { expected: r, got: chi.len() });
    }
    let hl: Vec<Vec<i64>> = (0..r).map(|i| sub.column(i)).collect();
    let hr: Vec<Vec<i64>> = hl.iter().map(|h| fmap.apply(h)).collect();
    for i in 0..r {
        for j in 0..r {
            if hidden_form(param, &hl[i], &hr[i], &hl[j], &hr[j]).uexp() != 0 {
                return Err(Error::IncompatibleForm(i, j));
            }
        }
    }
    let images = (0..r)
        .map(|i| {
            let raw = HeisRaw::new(param, chi[i].clone(), TorusPoint::identity(d), hl[i].clone(), hr[i].clone())?;
            Ok(HeisElement::from_raw(&raw))
        })
        .collect::<Result<Vec<_>>>()?;
    multiplier_with_sqrt_hint(param, images, None)
}

/// Candidates with x_r = xi and x_l = eta; ample ones only in Pic mode.
pub fn pic_hom(xi: &[TorusPoint], eta: &[TorusPoint], candidates: &[Multiplier], pic_mode: bool) -> Vec<Multiplier> {
    candidates
        .iter()
        .filter(|l| l.x_r() == xi && l.x_l() == eta && (!pic_mode || super::is_ample(l)))
        .cloned()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multiplier::{
        check_functional_equations, is_ample, jacobi, structure_pairing, theta_dim_basis, trivial_multiplier,
    };
    use crate::qtorus::Region;

    fn level2() -> Multiplier {
        power(&jacobi(), 2).unwrap()
    }

    #[test]
    fn power_of_jacobi() {
        let l = level2();
        assert_eq!(l.images[0].c_l, UnitMonomial::q(2));
        assert_eq!(l.images[0].h_l, vec![2]);
        assert_eq!(l.x_l(), jacobi().x_l());
        let b = theta_dim_basis(&l).unwrap();
        assert_eq!(b.dim, 2);
        for m in -4..=4i64 {
            assert_eq!(b.basis[0].coeff(&[-2 * m], 400).unwrap(), UnitMonomial::q(2 * m * m).to_series().truncate(400));
        }
        assert_eq!(power(&jacobi(), 1).unwrap(), jacobi());
    }

    #[test]
    fn boxtimes_jacobi() {
        let l = boxtimes(&jacobi(), &jacobi()).unwrap();
        let b = theta_dim_basis(&l).unwrap();
        assert_eq!(b.dim, 1);
        assert_eq!(b.basis[0].coeff(&[2, -3], 100).unwrap(), UnitMonomial::q(13).to_series().truncate(100));
        assert_eq!(structure_pairing(&l, &[1, 2], &[3, 1]).unwrap(), UnitMonomial::q(2 * 3 + 2 * 2));
        let e = boxtimes(&jacobi(), &trivial_multiplier(&QuantParam::trivial(0), 0)).unwrap();
        assert_eq!(e.images[0].c_l, jacobi().images[0].c_l);
    }

    #[test]
    fn compose_jacobi() {
        let j = jacobi();
        let c = compose(&j, &j).unwrap();
        assert_eq!(structure_pairing(&c, &[1], &[2]).unwrap(), UnitMonomial::q(8));
        assert_eq!(c.images, level2().images);
        assert!(is_ample(&c));
        let (lc, prod) = theta_product(&j, &j, &theta_dim_basis(&j).unwrap().basis[0], &theta_dim_basis(&j).unwrap().basis[0]).unwrap();
        assert_eq!(check_functional_equations(&lc, &prod, &Region::cube(1, 4), 30).unwrap(), None);
    }

    #[test]
    fn not_composable_names_generator() {
        let j = jacobi();
        let s = pullback(&TorusMorphism::identity(&j.param), &j, &LiftChoice::Canonical { m: 2 }).unwrap();
        let p = QuantParam::trivial(1);
        let other = multiplier_with_sqrt_hint(
            &p,
            vec![HeisElement::new(&p, UnitMonomial::q(1), TorusPoint::new(vec![UnitMonomial::q(4)]), vec![1]).unwrap()],
            None,
        )
        .unwrap();
        assert!(compose(&s, &j).is_ok());
        match compose(&other, &j) {
            Err(Error::NotComposable(s)) => assert!(s.starts_with("generator 0")),
            r => panic!("{:?}", r),
        }
    }

    #[test]
    fn multiplication_pullback_matches_n() {
        // [2]: image [c; x^{1/2}, 2h, 0] over alpha^4
        let j = jacobi();
        let m = TorusMorphism::multiplication(2, &QuantParam::trivial(1)).unwrap();
        let l = pullback(&m, &j, &LiftChoice::Canonical { m: 2 }).unwrap();
        assert_eq!(l.images[0].x_l, TorusPoint::new(vec![UnitMonomial::q(1)]));
        assert_eq!(l.images[0].h_l, vec![2]);
        let th = theta_dim_basis(&j).unwrap().basis[0].clone();
        let pulled = crate::heisenberg::morphism_pullback(&m, &th).unwrap();
        assert_eq!(check_functional_equations(&l, &pulled, &Region::cube(1, 8), 40).unwrap(), None);
    }

    #[test]
    fn lift_failure() {
        let f = LatticeMap::scalar(1, 2);
        assert!(matches!(lift_point(&f, &TorusPoint::new(vec![UnitMonomial::u(1)]), 2), Err(Error::NoLift(_))));
        let r = lift_point(&f, &TorusPoint::new(vec![UnitMonomial::int(-1, 0)]), 4).unwrap();
        assert_eq!(r.values()[0].pow(2), UnitMonomial::int(-1, 0));
    }

    #[test]
    fn hidden_identity_is_trivial() {
        let ones = [UnitMonomial::one(), UnitMonomial::one()];
        let id = LatticeMap::identity(2);
        let l = hidden_from_morphism(&QuantParam::trivial(2), &id, &id, &ones).unwrap();
        assert!(l.images.iter().all(|e| e.is_identity()));
        // on T_q the same data is conjugation, which is not the identity class
        let c = hidden_from_morphism(&QuantParam::tq(), &id, &id, &ones).unwrap();
        assert!(!c.images[0].is_identity());
    }

    #[test]
    fn pic_filters() {
        let j = jacobi();
        let t = trivial_multiplier(&j.param, 1);
        let xi = j.x_l();
        assert_eq!(pic_hom(&xi, &xi, &[j.clone(), t.clone()], true), vec![j.clone()]);
        let id = vec![TorusPoint::identity(1)];
        assert_eq!(pic_hom(&id, &id, &[j, t.clone()], false), vec![t]);
    }

    #[test]
    fn shift_pullback_keeps_period() {
        let j = jacobi();
        let p = j.param.clone();
        let y = UnitMonomial::q(1);
        let sh = crate::heisenberg::morphism_new(LatticeMap::identity(1), vec![y.clone()], &p, &p).unwrap();
        let l = pullback(&sh, &j, &LiftChoice::Canonical { m: 2 }).unwrap();
        assert_eq!(l.images[0].c_l, UnitMonomial::q(2));
        assert_eq!(l.images[0].x_l, j.images[0].x_l);
        let th = theta_dim_basis(&j).unwrap().basis[0].clone();
        let pulled = crate::heisenberg::morphism_pullback(&sh, &th).unwrap();
        let reg = Region::cube(1, 6);
        assert_eq!(check_functional_equations(&l, &pulled, &reg, 40).unwrap(), None);
        // x y^{-1} in place of x
        let im = HeisElement::new(&p, UnitMonomial::q(2), TorusPoint::new(vec![UnitMonomial::q(1)]), vec![1]).unwrap();
        let printed = multiplier_with_sqrt_hint(&p, vec![im], None).unwrap();
        assert!(check_functional_equations(&printed, &pulled, &reg, 40).unwrap().is_some());
    }
}
