//! Registered identities with their default windows.

use super::equation::{verify_equation, EquationSpec, Factor, Mode, Term};
use super::named::{MonoArg, SeriesRef};
use super::report::Report;
use crate::error::{Error, Result};
use crate::heisenberg::HeisRaw;
use crate::json::param_to_json;
use crate::lattice::box_points;
use crate::qtorus::{QuantParam, TorusPoint};
use crate::scalar_ring::{ScalarSeries, UnitMonomial};

type Builder = fn(i64, i64) -> Result<Vec<EquationSpec>>;

pub struct Identity {
    pub id: &'static str,
    pub title: &'static str,
    pub window: i64,
    pub order: i64,
    build: Builder,
}

impl Identity {
    pub fn equations(&self, window: i64, order: i64) -> Result<Vec<EquationSpec>> {
        (self.build)(window, order)
    }
}

fn theta(h: &[i64]) -> Factor {
    Factor::Named(SeriesRef::ThetaJacobi { arg: MonoArg::exp(h) })
}

fn eq1(c: UnitMonomial, h: &[i64]) -> Factor {
    Factor::Named(SeriesRef::EQ { arg: vec![MonoArg { c, h: h.to_vec() }] })
}

fn mono(p: &QuantParam, c: UnitMonomial, parts: &[(&[i64], i64)]) -> Factor {
    let mut m = MonoArg::word(p, parts);
    m.c = m.c.mul(&c);
    Factor::Monomial(m)
}

fn spec(label: String, p: &QuantParam, terms: Vec<Term>, r: i64, n: i64, mode: Mode) -> EquationSpec {
    EquationSpec { label, param: p.clone(), terms, window: r, order: n, mode }
}

/// q^{m^2} t^m theta(q^{2m} t) = theta(t), as one Heisenberg action per m.
fn build_e012(r: i64, n: i64) -> Result<Vec<EquationSpec>> {
    let p = QuantParam::trivial(1);
    (-2..=2)
        .map(|m| {
            let g = HeisRaw::new(&p, UnitMonomial::q(m * m), TorusPoint::new(vec![UnitMonomial::q(2 * m)]), vec![m], vec![0])?;
            let terms = vec![Term::acted(1, &g, theta(&[1])), Term::product(-1, vec![theta(&[1])])];
            Ok(spec(format!("m={m}"), &p, terms, r, n, Mode::OperatorEquation))
        })
        .collect()
}

fn one_plus_qt() -> Factor {
    Factor::Finite(vec![(vec![0], ScalarSeries::one()), (vec![1], UnitMonomial::q(1).to_series())])
}

/// The q-exponential relation as printed: e(q^2 t) - (1 + q t) e(t).
fn build_e016(r: i64, n: i64) -> Result<Vec<EquationSpec>> {
    let p = QuantParam::trivial(1);
    let terms = vec![
        Term::product(1, vec![eq1(UnitMonomial::q(2), &[1])]),
        Term::product(-1, vec![one_plus_qt(), eq1(UnitMonomial::one(), &[1])]),
    ];
    Ok(vec![spec("printed".into(), &p, terms, r, n, Mode::ProductIdentity)])
}

/// The relation that the product prod (1 + q^{2n+1} t) does satisfy:
/// (1 + q t) e(q^2 t) = e(t).
fn build_e016r(r: i64, n: i64) -> Result<Vec<EquationSpec>> {
    let p = QuantParam::trivial(1);
    let terms = vec![
        Term::product(1, vec![one_plus_qt(), eq1(UnitMonomial::q(2), &[1])]),
        Term::product(-1, vec![eq1(UnitMonomial::one(), &[1])]),
    ];
    Ok(vec![spec("corrected".into(), &p, terms, r, n, Mode::ProductIdentity)])
}

const U: &[i64] = &[1, 0];
const V: &[i64] = &[0, 1];

fn build_e023(r: i64, n: i64) -> Result<Vec<EquationSpec>> {
    let p = QuantParam::tq();
    let sum = Factor::Named(SeriesRef::EQ { arg: vec![MonoArg::exp(U), MonoArg::exp(V)] });
    let terms = vec![
        Term::product(1, vec![eq1(UnitMonomial::one(), U), eq1(UnitMonomial::one(), V)]),
        Term::product(-1, vec![sum]),
    ];
    Ok(vec![spec("sum".into(), &p, terms, r, n, Mode::ProductIdentity)])
}

fn build_e024(r: i64, n: i64) -> Result<Vec<EquationSpec>> {
    let p = QuantParam::tq();
    let one = UnitMonomial::one;
    // q v u = e(h1 + h2)
    let qvu = MonoArg::word(&p, &[(V, 1), (U, 1)]);
    let qvu = MonoArg { c: qvu.c.mul(&UnitMonomial::q(1)), h: qvu.h };
    let terms = vec![
        Term::product(1, vec![eq1(one(), V), eq1(one(), U)]),
        Term::product(-1, vec![eq1(one(), U), eq1(qvu.c, &qvu.h), eq1(one(), V)]),
    ];
    Ok(vec![spec("pentagon".into(), &p, terms, r, n, Mode::ProductIdentity)])
}

fn build_e025(r: i64, n: i64) -> Result<Vec<EquationSpec>> {
    let p = QuantParam::tq();
    let terms = vec![
        Term::product(1, vec![theta(U), theta(V), theta(U)]),
        Term::product(-1, vec![theta(V), theta(U), theta(V)]),
    ];
    Ok(vec![spec("braid".into(), &p, terms, r, n, Mode::ProductIdentity)])
}

/// H = Z^4 with u, v as in T_q and central directions for z, z'.
pub fn yang_baxter_param() -> QuantParam {
    let mut a = vec![vec![0; 4]; 4];
    a[0][1] = 2;
    a[1][0] = -2;
    QuantParam::from_exponents(a).expect("valid parameter")
}

fn build_e026(r: i64, n: i64) -> Result<Vec<EquationSpec>> {
    let p = yang_baxter_param();
    let (u, v) = (vec![1, 0, 0, 0], vec![0, 1, 0, 0]);
    let (z, z2, zz) = (vec![0, 0, 1, 0], vec![0, 0, 0, 1], vec![0, 0, 1, 1]);
    let rf = |t: &Vec<i64>, z: &Vec<i64>| Factor::Named(SeriesRef::RFv { t: t.clone(), z: z.clone() });
    let terms = vec![
        Term::product(1, vec![rf(&u, &z), rf(&v, &zz), rf(&u, &z2)]),
        Term::product(-1, vec![rf(&v, &z2), rf(&u, &zz), rf(&v, &z)]),
    ];
    Ok(vec![spec("yang-baxter".into(), &p, terms, r, n, Mode::ProductIdentity)])
}

fn build_e332(r: i64, n: i64) -> Result<Vec<EquationSpec>> {
    let p = QuantParam::tq();
    let q = UnitMonomial::q;
    let pm = |c, parts: &[(&[i64], i64)]| mono(&p, c, parts);
    let (tu, tv) = (theta(U), theta(V));
    let eqs = vec![
        ("u-shift", vec![pm(q(1), &[(U, 1), (V, -1)]), tu.clone(), pm(q(0), &[(V, 1)])], vec![tu.clone()]),
        ("u-conj", vec![pm(q(0), &[(U, 1)]), tu.clone(), pm(q(0), &[(U, -1)])], vec![tu.clone()]),
        ("v-shift", vec![pm(q(1), &[(V, 1), (U, 1)]), tv.clone(), pm(q(0), &[(U, -1)])], vec![tv.clone()]),
        ("v-conj", vec![pm(q(0), &[(V, -1)]), tv.clone(), pm(q(0), &[(V, 1)])], vec![tv.clone()]),
        (
            "cross-1",
            vec![pm(q(1), &[(U, 1), (V, -1)]), tu.clone(), tv.clone(), pm(q(0), &[(V, 1)])],
            vec![tu.clone(), tv.clone()],
        ),
        (
            "cross-2",
            vec![pm(q(-1), &[(U, 1)]), tu.clone(), tv.clone(), pm(q(0), &[(V, 1), (U, -1)])],
            vec![tu.clone(), tv.clone()],
        ),
    ];
    Ok(eqs
        .into_iter()
        .map(|(l, a, b)| {
            spec(l.into(), &p, vec![Term::product(1, a), Term::product(-1, b)], r, n, Mode::ProductIdentity)
        })
        .collect())
}

/// <k,k> e(k) x_k^*(theta_W) = theta_W on T(H + H, 1) for H with the T_q
/// parameter, for k = 0, the unit vectors and their negatives, and two mixed shifts.
fn build_e313(r: i64, n: i64) -> Result<Vec<EquationSpec>> {
    let base = QuantParam::tq();
    let d = base.rank();
    let p = QuantParam::trivial(2 * d);
    let tw = || Factor::Named(SeriesRef::ThetaWeinstein { base: param_to_json(&base) });
    let mut ks: Vec<Vec<i64>> =
        box_points(2 * d, 1).into_iter().filter(|k| k.iter().map(|x| x.abs()).sum::<i64>() <= 1).collect();
    ks.push(vec![1, 1, 1, 1]);
    ks.push(vec![1, -1, -1, 2]);
    ks.into_iter()
        .map(|k| {
            let (g, h) = (&k[..d], &k[d..]);
            // x_k(e(g', h')) = alpha(g, h') alpha(g', h)
            let x: Vec<UnitMonomial> = (0..2 * d)
                .map(|i| {
                    let mut e = vec![0; d];
                    e[i % d] = 1;
                    if i < d {
                        base.alpha(&e, h)
                    } else {
                        base.alpha(g, &e)
                    }
                })
                .collect();
            let a = HeisRaw::new(&p, base.alpha(g, h), TorusPoint::new(x), k.clone(), vec![0; 2 * d])?;
            let terms = vec![Term::acted(1, &a, tw()), Term::acted(-1, &HeisRaw::identity(&p), tw())];
            Ok(spec(format!("k={k:?}"), &p, terms, r, n, Mode::OperatorEquation))
        })
        .collect()
}

pub fn registry() -> Vec<Identity> {
    vec![
        Identity { id: "E012", title: "theta functional equations, m = -2..2", window: 8, order: 80, build: build_e012 },
        Identity { id: "E016", title: "q-exponential relation as printed", window: 10, order: 40, build: build_e016 },
        Identity { id: "E016R", title: "q-exponential relation (1+qt) e(q^2 t) = e(t)", window: 10, order: 40, build: build_e016r },
        Identity { id: "E023", title: "e_q(u) e_q(v) = e_q(u + v) on T_q", window: 4, order: 16, build: build_e023 },
        Identity { id: "E024", title: "quantum pentagon on T_q", window: 4, order: 16, build: build_e024 },
        Identity { id: "E025", title: "theta braid relation on T_q", window: 5, order: 25, build: build_e025 },
        Identity { id: "E026", title: "Yang-Baxter relation for r(z, t)", window: 3, order: 12, build: build_e026 },
        Identity { id: "E332", title: "lifted theta equations on T_q and their products", window: 5, order: 25, build: build_e332 },
        Identity { id: "E313", title: "Weinstein theta invariance", window: 4, order: 40, build: build_e313 },
    ]
}

pub fn lookup(id: &str) -> Result<Identity> {
    registry().into_iter().find(|i| i.id == id).ok_or_else(|| Error::UnknownName(id.into()))
}

/// Runs an identity at its default window and order.
pub fn verify_named(id: &str) -> Result<Report> {
    let i = lookup(id)?;
    verify_named_at(id, i.window, i.order, false)
}

/// Runs an identity at (window, order). `corrupt` doubles the first
/// coefficient of every equation, which must make the check fail.
pub fn verify_named_at(id: &str, window: i64, order: i64, corrupt: bool) -> Result<Report> {
    let i = lookup(id)?;
    let mut specs = i.equations(window, order)?;
    if corrupt {
        for s in &mut specs {
            s.terms[0].coeff = s.terms[0].coeff.mul(&super::named::constant(2));
        }
    }
    let results = specs.iter().map(verify_equation).collect::<Result<Vec<_>>>()?;
    Ok(Report::new(id, window, order, &results))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_are_unique() {
        let ids: Vec<&str> = registry().iter().map(|i| i.id).collect();
        let mut s = ids.clone();
        s.sort();
        s.dedup();
        assert_eq!(s.len(), ids.len());
    }

    #[test]
    fn small_windows_pass() {
        for id in ["E012", "E016R", "E023", "E024", "E025", "E332", "E313"] {
            let r = verify_named_at(id, 2, 6, false).unwrap();
            assert!(r.passed(), "{id}: {:?}", r.first_mismatch);
        }
    }

    #[test]
    fn printed_relation_fails_and_corruption_is_caught() {
        let r = verify_named_at("E016", 3, 6, false).unwrap();
        assert!(!r.passed());
        let r = verify_named_at("E025", 2, 3, true).unwrap();
        assert!(!r.passed());
        assert!(r.first_mismatch.is_some());
    }

    #[test]
    fn unknown_identity() {
        assert!(matches!(verify_named("E999"), Err(Error::UnknownName(_))));
    }
}
