//! Test-side oracles: a naive quantum torus algebra on finite coefficient maps,
//! a directly assembled theta system solved by rational elimination, and
//! seeded generators.
#![allow(dead_code)]

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;

use qtheta::heisenberg::{HeisElement, HeisRaw};
use qtheta::multiplier::Multiplier;
use qtheta::qtorus::{QuantParam, TorusPoint, TorusSeries};
use qtheta::scalar_ring::{CycloRational, ScalarSeries, UnitMonomial, EXACT};

/// Point -> (u-exponent -> coefficient), zero entries removed.
pub type Alg = BTreeMap<Vec<i64>, BTreeMap<i64, CycloRational>>;

fn add_into(acc: &mut Alg, h: Vec<i64>, e: i64, c: CycloRational) {
    let cell = acc.entry(h.clone()).or_default();
    let v = cell.get(&e).cloned().unwrap_or_else(CycloRational::zero).add(&c);
    if v.is_zero() {
        cell.remove(&e);
    } else {
        cell.insert(e, v);
    }
    if cell.is_empty() {
        acc.remove(&h);
    }
}

fn plus(a: &[i64], b: &[i64]) -> Vec<i64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// e(g) e(h) = alpha(g, h) e(g + h), extended bilinearly.
pub fn alg_mul(p: &QuantParam, a: &Alg, b: &Alg) -> Alg {
    let mut out = Alg::new();
    for (g, x) in a {
        for (h, y) in b {
            let al = p.alpha(g, h);
            for (ex, cx) in x {
                for (ey, cy) in y {
                    add_into(&mut out, plus(g, h), ex + ey + al.uexp(), cx.mul(cy).mul(al.coeff()));
                }
            }
        }
    }
    out
}

pub fn alg_scale(m: &UnitMonomial, a: &Alg) -> Alg {
    let mut out = Alg::new();
    for (h, x) in a {
        for (e, c) in x {
            add_into(&mut out, h.clone(), e + m.uexp(), c.mul(m.coeff()));
        }
    }
    out
}

pub fn alg_exp(h: &[i64]) -> Alg {
    let mut a = Alg::new();
    add_into(&mut a, h.to_vec(), 0, CycloRational::one());
    a
}

/// c e(g) x^*(f) e(h)^{-1}, with x^* e(k) = x(k) e(k) and e(h)^{-1} = alpha(h, h) e(-h).
pub fn alg_act(p: &QuantParam, a: &HeisRaw, f: &Alg) -> Alg {
    let mut xf = Alg::new();
    for (k, s) in f {
        let xk = a.x.eval(k);
        for (e, c) in s {
            add_into(&mut xf, k.clone(), e + xk.uexp(), c.mul(xk.coeff()));
        }
    }
    let neg_h: Vec<i64> = a.h.iter().map(|v| -v).collect();
    let inv_h = alg_scale(&p.alpha(&a.h, &a.h), &alg_exp(&neg_h));
    alg_scale(&a.c, &alg_mul(p, &alg_mul(p, &alg_exp(&a.g), &xf), &inv_h))
}

pub fn to_series(p: &QuantParam, a: &Alg) -> TorusSeries {
    TorusSeries::finite(
        p,
        a.iter().map(|(h, s)| (h.clone(), ScalarSeries::from_terms(s.iter().map(|(e, c)| (*e, c.clone())), EXACT))),
    )
    .unwrap()
}

pub fn from_series(s: &TorusSeries) -> Alg {
    let mut out = Alg::new();
    for (h, c) in s.expand_algebraic().unwrap() {
        for (e, v) in c.terms() {
            add_into(&mut out, h.clone(), *e, v.clone());
        }
    }
    out
}

// ---- generators -------------------------------------------------------------

pub fn rand_coeff<R: Rng>(rng: &mut R) -> CycloRational {
    match rng.gen_range(0..4) {
        0 => CycloRational::zeta(3).mul(&CycloRational::from_int(rng.gen_range(1..3))),
        1 => CycloRational::from_ratio(rng.gen_range(-3..=3i64).max(1), rng.gen_range(1..4)),
        2 => CycloRational::from_int(-1),
        _ => CycloRational::one(),
    }
}

pub fn rand_mono<R: Rng>(rng: &mut R) -> UnitMonomial {
    UnitMonomial::new(rand_coeff(rng), rng.gen_range(-4..=4))
}

pub fn rand_vec<R: Rng>(rng: &mut R, d: usize, r: i64) -> Vec<i64> {
    (0..d).map(|_| rng.gen_range(-r..=r)).collect()
}

pub fn rand_point<R: Rng>(rng: &mut R, d: usize) -> TorusPoint {
    TorusPoint::new((0..d).map(|_| rand_mono(rng)).collect())
}

pub fn rand_raw<R: Rng>(rng: &mut R, p: &QuantParam) -> HeisRaw {
    let d = p.rank();
    HeisRaw::new(p, rand_mono(rng), rand_point(rng, d), rand_vec(rng, d, 3), rand_vec(rng, d, 3)).unwrap()
}

pub fn rand_elem<R: Rng>(rng: &mut R, p: &QuantParam) -> HeisElement {
    HeisElement::from_raw(&rand_raw(rng, p))
}

/// An element whose right boundary point is `x_r`.
pub fn elem_ending_at<R: Rng>(rng: &mut R, p: &QuantParam, x_r: &TorusPoint) -> HeisElement {
    let h = rand_vec(rng, p.rank(), 3);
    // x_r = x_l A_h^{-2}
    let x_l = x_r.mul(&p.hidden_point(&h).pow(2));
    HeisElement::new(p, rand_mono(rng), x_l, h).unwrap()
}

pub fn rand_alg<R: Rng>(rng: &mut R, d: usize) -> Alg {
    let mut a = Alg::new();
    for _ in 0..rng.gen_range(1..4) {
        add_into(&mut a, rand_vec(rng, d, 2), rng.gen_range(-3..=3), rand_coeff(rng));
    }
    a
}

// ---- directly assembled theta system ---------------------------------------

/// u specialized to 1/2; exact and transcendental enough for these checks.
pub fn spec_u() -> BigRational {
    BigRational::new(1.into(), 2.into())
}

pub fn spec_mono(m: &UnitMonomial) -> BigRational {
    let c = m.coeff().as_rational().expect("rational coefficient").clone();
    let u = spec_u();
    let pow = if m.uexp() >= 0 {
        num_traits::pow(u, m.uexp() as usize)
    } else {
        num_traits::pow(u.recip(), (-m.uexp()) as usize)
    };
    c * pow
}

/// Reduced row echelon form in place; returns the pivot columns.
fn rref(m: &mut [Vec<BigRational>], cols: usize) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut row = 0;
    for c in 0..cols {
        let Some(p) = (row..m.len()).find(|&r| !m[r][c].is_zero()) else { continue };
        m.swap(row, p);
        let inv = m[row][c].recip();
        for v in m[row].iter_mut() {
            *v = &*v * &inv;
        }
        for r in 0..m.len() {
            if r != row && !m[r][c].is_zero() {
                let f = m[r][c].clone();
                let pivot_row = m[row].clone();
                for (x, y) in m[r].iter_mut().zip(&pivot_row) {
                    *x = &*x - &f * y;
                }
            }
        }
        pivots.push(c);
        row += 1;
    }
    pivots
}

pub fn rank(rows: &[Vec<BigRational>], cols: usize) -> usize {
    let mut m = rows.to_vec();
    rref(&mut m, cols).len()
}

/// Rows a_{h + h_b} - c x(h) alpha(h_b, h) a_h = 0 for every generator b with
/// both points inside `pts`; columns are indexed by `pts`.
pub fn theta_system(l: &Multiplier, pts: &[Vec<i64>]) -> Vec<Vec<BigRational>> {
    let idx: BTreeMap<&Vec<i64>, usize> = pts.iter().enumerate().map(|(i, h)| (h, i)).collect();
    let mut rows = Vec::new();
    for im in &l.images {
        for h in pts {
            let target = plus(h, &im.h_l);
            let Some(&j) = idx.get(&target) else { continue };
            let factor = im.c_l.mul(&im.x_l.eval(h)).mul(&l.param.alpha(&im.h_l, h));
            let mut row = vec![BigRational::zero(); pts.len()];
            row[j] = BigRational::one();
            row[idx[h]] = -spec_mono(&factor);
            rows.push(row);
        }
    }
    rows
}

/// Whether the engine's basis (specialized) spans exactly the nullspace of the
/// assembled system on `pts`. Every coefficient must be a single monomial.
pub fn basis_matches_system(l: &Multiplier, basis: &[TorusSeries], pts: &[Vec<i64>], n: i64) -> Result<(), String> {
    let sys = theta_system(l, pts);
    let null_dim = pts.len() - rank(&sys, pts.len());
    let mut vecs = Vec::new();
    for th in basis {
        let mut v = Vec::new();
        for h in pts {
            let c = th.coeff(h, n).map_err(|e| e.to_string())?;
            let spec = match c.terms().len() {
                0 => BigRational::zero(),
                1 => {
                    let (e, v) = c.terms().iter().next().unwrap();
                    spec_mono(&UnitMonomial::new(v.clone(), *e))
                }
                k => return Err(format!("coefficient at {:?} has {} terms", h, k)),
            };
            v.push(spec);
        }
        vecs.push(v);
    }
    for v in &vecs {
        for row in &sys {
            let dot = row.iter().zip(v).fold(BigRational::zero(), |acc, (a, b)| acc + a * b);
            if !dot.is_zero() {
                return Err("basis vector violates the assembled system".into());
            }
        }
    }
    if rank(&vecs, pts.len()) != basis.len() {
        return Err("basis is linearly dependent on the window".into());
    }
    if null_dim != basis.len() {
        return Err(format!("nullspace dimension {} but basis size {}", null_dim, basis.len()));
    }
    Ok(())
}

pub fn cube_points(d: usize, r: i64) -> Vec<Vec<i64>> {
    let mut pts = vec![vec![]];
    for _ in 0..d {
        pts = pts
            .into_iter()
            .flat_map(|p| {
                (-r..=r).map(move |v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    pts
}
