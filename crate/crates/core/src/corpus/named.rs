//! Built-in series: the basic theta, the q-exponential and its inverse,
//! Weinstein's theta distribution and the ratio r(z, t).

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::solve_integer;
use crate::qtorus::{LatticeBody, Minorant, QuantParam, TorusSeries};
use crate::scalar_ring::{CycloRational, ScalarSeries, UnitMonomial, EXACT};

/// c e(h).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonoArg {
    #[serde(with = "mono_serde", default = "UnitMonomial::one")]
    pub c: UnitMonomial,
    pub h: Vec<i64>,
}

mod mono_serde {
    use super::*;
    use crate::json::{monomial_from_json, monomial_to_json, MonomialJson};
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &UnitMonomial, s: S) -> std::result::Result<S::Ok, S::Error> {
        monomial_to_json(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<UnitMonomial, D::Error> {
        let j = MonomialJson::deserialize(d)?;
        monomial_from_json(&j).map_err(serde::de::Error::custom)
    }
}

impl MonoArg {
    pub fn exp(h: &[i64]) -> Self {
        MonoArg { c: UnitMonomial::one(), h: h.to_vec() }
    }

    /// The product e(h_1)^{n_1} e(h_2)^{n_2} ... as a single c e(h).
    pub fn word(p: &QuantParam, parts: &[(&[i64], i64)]) -> Self {
        let d = p.rank();
        let mut acc = MonoArg { c: UnitMonomial::one(), h: vec![0; d] };
        for (h, n) in parts {
            let pw = power_of_exp(p, h, *n);
            let (a, s) = p.exp_mul(&acc.h, &pw.h);
            acc = MonoArg { c: acc.c.mul(&pw.c).mul(&a), h: s };
        }
        acc
    }
}

/// e(h)^n = eps(h)^{n(n-1)/2} e(n h).
fn power_of_exp(p: &QuantParam, h: &[i64], n: i64) -> MonoArg {
    let sign = p.epsilon_mono(h).pow(n * (n - 1) / 2);
    MonoArg { c: sign, h: h.iter().map(|x| x * n).collect() }
}

/// (c e(h))^k = c^k eps(h)^{k(k-1)/2} e(k h).
fn arg_power_coeff(p: &QuantParam, a: &MonoArg, k: i64) -> UnitMonomial {
    a.c.pow(k).mul(&p.epsilon_mono(&a.h).pow(k * (k - 1) / 2))
}

/// 1 / prod_{j=1}^k (1 - q^{2j}) through u^n.
pub fn pochhammer_inverse(k: i64, n: i64) -> Result<ScalarSeries> {
    if n < 0 {
        return Ok(ScalarSeries::zero_to(n));
    }
    let mut prod = ScalarSeries::one();
    for j in 1..=k {
        if 4 * j > n {
            break;
        }
        let f = ScalarSeries::from_int_terms(&[(0, 1), (4 * j, -1)], EXACT);
        prod = prod.mul(&f).truncate(n);
    }
    prod.truncate(n).invert_to(n)
}

/// q^{k^2} / (q^2; q^2)_k through u^n.
pub fn e_q_seq(k: i64, n: i64) -> Result<ScalarSeries> {
    if k < 0 {
        return Ok(ScalarSeries::zero_to(n));
    }
    let v = 2 * k * k;
    Ok(pochhammer_inverse(k, n - v)?.scale(&UnitMonomial::u(v)).truncate(n))
}

/// (-q)^k / (q^2; q^2)_k through u^n: the coefficients of 1 / e_q.
pub fn e_q_inv_seq(k: i64, n: i64) -> Result<ScalarSeries> {
    if k < 0 {
        return Ok(ScalarSeries::zero_to(n));
    }
    let sign = if k % 2 == 0 { 1 } else { -1 };
    Ok(pochhammer_inverse(k, n - 2 * k)?.scale(&UnitMonomial::int(sign, 2 * k)).truncate(n))
}

fn theta_seq(k: i64, n: i64) -> Result<ScalarSeries> {
    Ok(UnitMonomial::u(2 * k * k).to_series().truncate(n))
}

type Seq = fn(i64, i64) -> Result<ScalarSeries>;

/// sum_k seq(k) (c e(h))^k over k in [lower, inf) or all of Z.
fn one_direction(
    p: &QuantParam,
    a: &MonoArg,
    seq: Seq,
    lower: Option<i64>,
    minorant: Minorant,
    label: &str,
) -> Result<TorusSeries> {
    if a.h.len() != p.rank() {
        return Err(Error::DimensionMismatch { expected: p.rank(), got: a.h.len() });
    }
    if a.h.iter().all(|x| *x == 0) {
        return Err(Error::InvalidParam(format!("{label}: argument must be a nonzero exponent")));
    }
    let (pp, aa) = (p.clone(), a.clone());
    let rule = Arc::new(move |q: &[i64], n: i64| -> Result<ScalarSeries> {
        let c = arg_power_coeff(&pp, &aa, q[0]);
        Ok(seq(q[0], n - c.uexp())?.scale(&c).truncate(n))
    });
    let map = a.h.iter().map(|x| vec![*x]).collect();
    let body = LatticeBody::new(vec![0; p.rank()], map, vec![lower], vec![None], rule, Some(minorant), label)?;
    TorusSeries::lattice(p, body)
}

fn quad_minorant(a: &MonoArg, quad: i64, lin: i64) -> Minorant {
    Minorant { q2: vec![vec![2 * quad]], l2: vec![2 * (lin + a.c.uexp())], c2: 0 }
}

/// theta_q(c e(h)) = sum_n q^{n^2} (c e(h))^n.
pub fn theta_jacobi(p: &QuantParam, a: &MonoArg) -> Result<TorusSeries> {
    one_direction(p, a, theta_seq, None, quad_minorant(a, 2, 0), "theta_q")
}

/// e_q(c e(h)) = prod_{n >= 0} (1 + q^{2n+1} c e(h)).
pub fn e_q(p: &QuantParam, a: &MonoArg) -> Result<TorusSeries> {
    one_direction(p, a, e_q_seq, Some(0), quad_minorant(a, 2, 0), "e_q")
}

/// 1 / e_q(c e(h)); its coefficient valuation grows only linearly, so it
/// enters products only inside bounded windows.
pub fn e_q_inv(p: &QuantParam, a: &MonoArg) -> Result<TorusSeries> {
    one_direction(p, a, e_q_inv_seq, Some(0), quad_minorant(a, 0, 2), "e_q^-1")
}

/// e_q(X) for an algebraic X = sum c_i e(h_i), as a power series in X.
pub fn e_q_sum(p: &QuantParam, terms: &[MonoArg]) -> Result<TorusSeries> {
    if terms.len() == 1 {
        return e_q(p, &terms[0]);
    }
    let d = p.rank();
    let rows: Vec<Vec<i64>> = terms.iter().map(|t| t.h.clone()).collect();
    let ell = solve_integer(&rows, d, &vec![1; terms.len()])?
        .ok_or_else(|| Error::InvalidParam("e_q argument is not homogeneous".into()))?;
    let x = TorusSeries::finite(p, terms.iter().map(|t| (t.h.clone(), t.c.to_series())))?;
    TorusSeries::power(p, "e_q(sum)", &x, ell, Arc::new(e_q_seq))
}

/// Weinstein's theta on T(H + H, 1): the coefficient at (g, h) is alpha(g, h).
pub fn theta_weinstein(base: &QuantParam) -> TorusSeries {
    let d = base.rank();
    let b = base.clone();
    let rule = Arc::new(move |k: &[i64], n: i64| -> Result<ScalarSeries> {
        Ok(b.alpha(&k[..d], &k[d..]).to_series().truncate(n))
    });
    TorusSeries::formal(&QuantParam::trivial(2 * d), "theta_W", rule)
}

/// r(z, t) = theta_q(t) / (e_q(z t) e_q(z t^{-1})) with z central.
pub fn r_fv(p: &QuantParam, t: &[i64], z: &[i64]) -> Result<TorusSeries> {
    let zt = MonoArg::word(p, &[(z, 1), (t, 1)]);
    let zti = MonoArg::word(p, &[(z, 1), (t, -1)]);
    TorusSeries::word(vec![theta_jacobi(p, &MonoArg::exp(t))?, e_q_inv(p, &zt)?, e_q_inv(p, &zti)?])
}

/// A reference to a built-in series, as it appears in equation specs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum SeriesRef {
    ThetaJacobi { arg: MonoArg },
    EQ { arg: Vec<MonoArg> },
    EQInv { arg: MonoArg },
    ThetaWeinstein { base: crate::json::ParamJson },
    RFv { t: Vec<i64>, z: Vec<i64> },
    #[serde(rename = "theta_on_Tq_u")]
    ThetaOnTqU,
    #[serde(rename = "theta_on_Tq_v")]
    ThetaOnTqV,
}

/// A constructed built-in series with a short description of its recipe.
#[derive(Clone, Debug)]
pub struct NamedSeries {
    pub name: String,
    pub recipe: &'static str,
    pub series: TorusSeries,
}

pub const REGISTRY: [&str; 7] =
    ["theta_jacobi", "e_q", "e_q_inv", "theta_weinstein", "r_fv", "theta_on_Tq_u", "theta_on_Tq_v"];

impl SeriesRef {
    pub fn name(&self) -> &'static str {
        match self {
            SeriesRef::ThetaJacobi { .. } => "theta_jacobi",
            SeriesRef::EQ { .. } => "e_q",
            SeriesRef::EQInv { .. } => "e_q_inv",
            SeriesRef::ThetaWeinstein { .. } => "theta_weinstein",
            SeriesRef::RFv { .. } => "r_fv",
            SeriesRef::ThetaOnTqU => "theta_on_Tq_u",
            SeriesRef::ThetaOnTqV => "theta_on_Tq_v",
        }
    }

    /// Builds the series on `param`. theta_weinstein carries its own alpha on
    /// H and checks that `param` is the trivial parameter on H + H.
    pub fn build(&self, param: &QuantParam) -> Result<NamedSeries> {
        let tq_only = |p: &QuantParam| {
            if p != &QuantParam::tq() {
                Err(Error::InvalidParam(format!("{} lives on T_q", self.name())))
            } else {
                Ok(())
            }
        };
        let (recipe, series) = match self {
            SeriesRef::ThetaJacobi { arg } => ("sum_n q^{n^2} X^n", theta_jacobi(param, arg)?),
            SeriesRef::EQ { arg } => ("prod_{n>=0} (1 + q^{2n+1} X)", e_q_sum(param, arg)?),
            SeriesRef::EQInv { arg } => ("sum_k (-q)^k X^k / (q^2;q^2)_k", e_q_inv(param, arg)?),
            SeriesRef::ThetaWeinstein { base } => {
                let base = crate::json::param_from_json(base)?;
                if param != &QuantParam::trivial(2 * base.rank()) {
                    return Err(Error::InvalidParam("theta_weinstein lives on T(H + H, 1)".into()));
                }
                ("sum alpha(g,h) e(g,h) on T(H+H,1)", theta_weinstein(&base))
            }
            SeriesRef::RFv { t, z } => ("theta_q(t) / (e_q(zt) e_q(z/t))", r_fv(param, t, z)?),
            SeriesRef::ThetaOnTqU => {
                tq_only(param)?;
                ("theta_q(u) on T_q", theta_jacobi(param, &MonoArg::exp(&[1, 0]))?)
            }
            SeriesRef::ThetaOnTqV => {
                tq_only(param)?;
                ("theta_q(v) on T_q", theta_jacobi(param, &MonoArg::exp(&[0, 1]))?)
            }
        };
        Ok(NamedSeries { name: self.name().into(), recipe, series })
    }
}

/// Looks up a registry name with default arguments on `param` (the first
/// basis exponent as variable, the second as z for r_fv).
pub fn builtin_series(name: &str, param: &QuantParam) -> Result<NamedSeries> {
    let d = param.rank();
    let unit = |i: usize| -> Result<Vec<i64>> {
        if i >= d {
            return Err(Error::DimensionMismatch { expected: i + 1, got: d });
        }
        let mut v = vec![0; d];
        v[i] = 1;
        Ok(v)
    };
    let r = match name {
        "theta_jacobi" => SeriesRef::ThetaJacobi { arg: MonoArg::exp(&unit(0)?) },
        "e_q" => SeriesRef::EQ { arg: vec![MonoArg::exp(&unit(0)?)] },
        "e_q_inv" => SeriesRef::EQInv { arg: MonoArg::exp(&unit(0)?) },
        "theta_weinstein" => {
            let base = crate::json::param_to_json(param);
            return SeriesRef::ThetaWeinstein { base }.build(&QuantParam::trivial(2 * d));
        }
        "r_fv" => SeriesRef::RFv { t: unit(0)?, z: unit(1)? },
        "theta_on_Tq_u" => SeriesRef::ThetaOnTqU,
        "theta_on_Tq_v" => SeriesRef::ThetaOnTqV,
        _ => return Err(Error::UnknownName(name.into())),
    };
    r.build(param)
}

/// Coefficients of t^0..t^kmax in prod_{n >= 0} (1 + q^{2n+1} t), through u^n,
/// by multiplying out the factors.
pub fn e_q_by_product(kmax: usize, n: i64) -> Vec<ScalarSeries> {
    let mut poly = vec![ScalarSeries::zero_to(n); kmax + 1];
    poly[0] = ScalarSeries::one().truncate(n);
    let mut j = 0;
    while 2 * (2 * j + 1) <= n {
        let f = UnitMonomial::u(2 * (2 * j + 1));
        for k in (1..=kmax).rev() {
            let add = poly[k - 1].scale(&f).truncate(n);
            poly[k] = poly[k].add(&add);
        }
        j += 1;
    }
    poly
}

/// The same coefficients from the functional equation (1 + q t) e(q^2 t) = e(t)
/// with a_0 = 1, i.e. a_k (1 - q^{2k}) = q^{2k-1} a_{k-1}.
pub fn e_q_by_recurrence(kmax: usize, n: i64) -> Result<Vec<ScalarSeries>> {
    let mut out = vec![ScalarSeries::one().truncate(n)];
    for k in 1..=kmax as i64 {
        let denom = ScalarSeries::from_int_terms(&[(0, 1), (4 * k, -1)], EXACT).invert_to(n)?;
        let prev = &out[(k - 1) as usize];
        out.push(prev.mul(&denom).scale(&UnitMonomial::u(4 * k - 2)).truncate(n));
    }
    Ok(out)
}

/// A value in Q as a constant series.
pub fn constant(c: i64) -> ScalarSeries {
    ScalarSeries::constant(CycloRational::from_int(c))
}
