//! JSON formats for scalars, points, Heisenberg elements, multipliers and
//! coefficient windows.
//!
//! A cyclotomic number is written as `{"m": m, "c": ["p/q", ...]}` on the
//! basis 1, zeta_m, zeta_m^2, ...; a series as
//! `{"m": m, "N": order or null, "terms": [[uexp, ["p/q", ...]], ...]}`.

use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::heisenberg::HeisElement;
use crate::lattice::Mat;
use crate::multiplier::{multiplier_new, Multiplier};
use crate::qtorus::{QuantParam, SeriesWindow, TorusPoint};
use crate::scalar_ring::cyclo::{format_rational, parse_rational};
use crate::scalar_ring::{CycloRational, ScalarSeries, UnitMonomial, EXACT};

#[derive(Serialize, Deserialize, Clone, Debug)]
pub struct CycloJson {
    pub m: u32,
    pub c: Vec<String>,
}

#[derive(Serialize, Deserialize, Clone, Debug)]
pub struct MonomialJson {
    pub m: u32,
    pub c: Vec<String>,
    pub u: i64,
}

#[derive(Serialize, Deserialize, Clone, Debug)]
pub struct SeriesJson {
    pub m: u32,
    #[serde(rename = "N")]
    pub n: Option<i64>,
    pub terms: Vec<(i64, Vec<String>)>,
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq, Eq)]
pub struct ParamJson {
    #[serde(rename = "A")]
    pub a: Mat,
    #[serde(rename = "S", default)]
    pub s: Option<Mat>,
}

#[derive(Serialize, Deserialize, Clone, Debug)]
pub struct HeisJson {
    pub c: MonomialJson,
    pub x: Vec<MonomialJson>,
    pub h_l: Vec<i64>,
}

#[derive(Serialize, Deserialize, Clone, Debug)]
pub struct MultiplierJson {
    pub param: ParamJson,
    #[serde(rename = "B_rank")]
    pub b_rank: usize,
    pub images: Vec<HeisJson>,
    #[serde(default)]
    pub sqrt: Option<Vec<Vec<MonomialJson>>>,
}

fn coeff_strings(c: &CycloRational, m: u32) -> Vec<String> {
    let mut v: Vec<String> = c.coeffs_in(m).iter().map(format_rational).collect();
    while v.len() > 1 && v.last().is_some_and(|s| s == "0") {
        v.pop();
    }
    v
}

fn common_order<'a>(cs: impl Iterator<Item = &'a CycloRational>) -> u32 {
    cs.fold(1, |acc, c| num_integer::lcm(acc, c.order()))
}

pub fn cyclo_to_json(c: &CycloRational) -> CycloJson {
    CycloJson { m: c.order(), c: coeff_strings(c, c.order()) }
}

pub fn cyclo_from_parts(m: u32, c: &[String]) -> Result<CycloRational> {
    if m == 0 {
        return Err(Error::Parse("cyclotomic order must be positive".into()));
    }
    let coeffs = c.iter().map(|s| parse_rational(s)).collect::<Result<Vec<BigRational>>>()?;
    Ok(CycloRational::new(m, coeffs))
}

pub fn monomial_to_json(x: &UnitMonomial) -> MonomialJson {
    let c = x.coeff();
    MonomialJson { m: c.order(), c: coeff_strings(c, c.order()), u: x.uexp() }
}

pub fn monomial_from_json(j: &MonomialJson) -> Result<UnitMonomial> {
    let c = cyclo_from_parts(j.m, &j.c)?;
    UnitMonomial::try_new(c, j.u).ok_or_else(|| Error::Parse("monomial coefficient is zero".into()))
}

pub fn series_to_json(s: &ScalarSeries) -> SeriesJson {
    let m = common_order(s.terms().values());
    SeriesJson {
        m,
        n: (s.order() != EXACT).then_some(s.order()),
        terms: s.terms().iter().map(|(e, c)| (*e, coeff_strings(c, m))).collect(),
    }
}

pub fn series_from_json(j: &SeriesJson) -> Result<ScalarSeries> {
    let terms = j.terms.iter().map(|(e, c)| Ok((*e, cyclo_from_parts(j.m, c)?))).collect::<Result<Vec<_>>>()?;
    Ok(ScalarSeries::from_terms(terms, j.n.unwrap_or(EXACT)))
}

pub fn param_to_json(p: &QuantParam) -> ParamJson {
    let s = p.has_signs().then(|| p.s().clone());
    ParamJson { a: p.a().clone(), s }
}

pub fn param_from_json(j: &ParamJson) -> Result<QuantParam> {
    let d = j.a.len();
    QuantParam::new(j.a.clone(), j.s.clone().unwrap_or_else(|| vec![vec![0; d]; d]))
}

pub fn heis_to_json(e: &HeisElement) -> HeisJson {
    HeisJson {
        c: monomial_to_json(&e.c_l),
        x: e.x_l.values().iter().map(monomial_to_json).collect(),
        h_l: e.h_l.clone(),
    }
}

pub fn heis_from_json(param: &QuantParam, j: &HeisJson) -> Result<HeisElement> {
    let x = j.x.iter().map(monomial_from_json).collect::<Result<Vec<_>>>()?;
    HeisElement::new(param, monomial_from_json(&j.c)?, TorusPoint::new(x), j.h_l.clone())
}

pub fn multiplier_to_json(l: &Multiplier) -> MultiplierJson {
    MultiplierJson {
        param: param_to_json(&l.param),
        b_rank: l.rank(),
        images: l.images.iter().map(heis_to_json).collect(),
        sqrt: l.sqrt.as_ref().map(|s| s.iter().map(|r| r.iter().map(monomial_to_json).collect()).collect()),
    }
}

pub fn multiplier_from_json(j: &MultiplierJson) -> Result<Multiplier> {
    let p = param_from_json(&j.param)?;
    if j.images.len() != j.b_rank {
        return Err(Error::DimensionMismatch { expected: j.b_rank, got: j.images.len() });
    }
    let images = j.images.iter().map(|e| heis_from_json(&p, e)).collect::<Result<Vec<_>>>()?;
    let sqrt = match &j.sqrt {
        Some(rows) => Some(
            rows.iter()
                .map(|r| r.iter().map(monomial_from_json).collect::<Result<Vec<_>>>())
                .collect::<Result<Vec<_>>>()?,
        ),
        None => None,
    };
    multiplier_new(&p, images, sqrt)
}

pub fn parse_multiplier(text: &str) -> Result<Multiplier> {
    let j: MultiplierJson = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    multiplier_from_json(&j)
}

pub fn parse_heis(param: &QuantParam, text: &str) -> Result<HeisElement> {
    let j: HeisJson = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    heis_from_json(param, &j)
}

/// {"lattice": d, "window": R, "order": N, "coeffs": [[h, series], ...]}, zero cells omitted.
/// `order` is reported in the caller's units.
pub fn window_to_json(w: &SeriesWindow, radius: Option<i64>, order: i64) -> Value {
    let coeffs: Vec<Value> = w
        .cells
        .iter()
        .filter(|(_, s)| !s.terms().is_empty())
        .map(|(h, s)| json!([h, series_to_json(s)]))
        .collect();
    json!({
        "lattice": w.region.dim(),
        "window": radius,
        "order": order,
        "coeffs": coeffs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multiplier::jacobi;

    #[test]
    fn series_round_trip() {
        let z = CycloRational::zeta(3);
        let s = ScalarSeries::from_terms([(0, CycloRational::from_ratio(-1, 2)), (3, z)], 7);
        let j = series_to_json(&s);
        assert_eq!(j.m, 3);
        assert_eq!(series_from_json(&j).unwrap(), s);
        let text = serde_json::to_string(&j).unwrap();
        assert!(text.contains("\"N\":7"));
    }

    #[test]
    fn multiplier_round_trip() {
        let l = jacobi();
        let text = serde_json::to_string(&multiplier_to_json(&l)).unwrap();
        let back = parse_multiplier(&text).unwrap();
        assert_eq!(back.images, l.images);
        assert_eq!(back.param, l.param);
    }

    #[test]
    fn rejects_bad_rational() {
        let j = MonomialJson { m: 1, c: vec!["1/0".into()], u: 0 };
        assert!(matches!(monomial_from_json(&j), Err(Error::Parse(_))));
    }
}
