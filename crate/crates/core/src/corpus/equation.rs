//! Linear equations sum_i c_i Gamma_i(f_i1 ... f_ik) = 0 between series,
//! checked coefficient by coefficient on a window.

use serde::{Deserialize, Serialize};

use super::named::{MonoArg, SeriesRef};
use crate::error::{Error, Result};
use crate::heisenberg::HeisRaw;
use crate::json::{monomial_from_json, param_from_json, series_from_json, MonomialJson, ParamJson, SeriesJson};
use crate::qtorus::{Point, QuantParam, Region, SeriesKind, SeriesWindow, TorusPoint, TorusSeries};
use crate::scalar_ring::{ScalarSeries, UnitMonomial};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Each term is one Heisenberg action on one series; formal series allowed.
    OperatorEquation,
    /// Terms are products; factors of a product must be algebraic or proper.
    ProductIdentity,
}

#[derive(Clone, Debug)]
pub enum Factor {
    Named(SeriesRef),
    Monomial(MonoArg),
    Finite(Vec<(Point, ScalarSeries)>),
}

/// c [a; x, g, h] (f_1 ... f_k).
#[derive(Clone, Debug)]
pub struct Term {
    pub coeff: ScalarSeries,
    pub action: Option<(UnitMonomial, TorusPoint, Vec<i64>, Vec<i64>)>,
    pub word: Vec<Factor>,
}

impl Term {
    pub fn product(coeff: i64, word: Vec<Factor>) -> Self {
        Term { coeff: super::named::constant(coeff), action: None, word }
    }

    pub fn acted(coeff: i64, a: &HeisRaw, f: Factor) -> Self {
        Term {
            coeff: super::named::constant(coeff),
            action: Some((a.c.clone(), a.x.clone(), a.g.clone(), a.h.clone())),
            word: vec![f],
        }
    }
}

#[derive(Clone, Debug)]
pub struct EquationSpec {
    pub label: String,
    pub param: QuantParam,
    pub terms: Vec<Term>,
    /// sup-norm radius of the window
    pub window: i64,
    /// q-order; coefficients are compared through u^{2N}
    pub order: i64,
    pub mode: Mode,
}

/// Outcome of one equation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EquationResult {
    pub label: String,
    pub cells_checked: usize,
    /// lattice point and u-exponent of the first nonzero coefficient
    pub first_mismatch: Option<(Point, i64)>,
}

impl EquationResult {
    pub fn passed(&self) -> bool {
        self.first_mismatch.is_none()
    }
}

fn build_factor(p: &QuantParam, f: &Factor) -> Result<TorusSeries> {
    match f {
        Factor::Named(r) => Ok(r.build(p)?.series),
        Factor::Monomial(m) => Ok(TorusSeries::monomial(p, m.c.clone(), &m.h)),
        Factor::Finite(t) => TorusSeries::finite(p, t.iter().cloned()),
    }
}

fn term_series(spec: &EquationSpec, t: &Term) -> Result<TorusSeries> {
    let p = &spec.param;
    let factors = t.word.iter().map(|f| build_factor(p, f)).collect::<Result<Vec<_>>>()?;
    let s = match factors.len() {
        0 => TorusSeries::one(p),
        1 => factors[0].clone(),
        _ => TorusSeries::word(factors)?,
    };
    check_mode(spec.mode, t, &s)?;
    match &t.action {
        None => Ok(s),
        Some((c, x, g, h)) => s.act_parts(c, x, g, h),
    }
}

fn check_mode(mode: Mode, t: &Term, s: &TorusSeries) -> Result<()> {
    match mode {
        Mode::OperatorEquation if t.word.len() > 1 => Err(Error::NotMultipliable(
            "operator equations take one series per term".into(),
        )),
        Mode::ProductIdentity if t.word.len() > 1 && s.kind() == SeriesKind::Formal => {
            Err(Error::NotMultipliable(format!("{} is formal", s.label())))
        }
        _ => Ok(()),
    }
}

/// Sum of c_i * window_i; every window is known through u^n.
fn combine(windows: &[(ScalarSeries, SeriesWindow)], n: i64) -> Result<SeriesWindow> {
    let region = windows[0].1.region.clone();
    let mut cells = std::collections::BTreeMap::new();
    for h in region.points() {
        let mut acc = ScalarSeries::zero_to(n);
        for (c, w) in windows {
            let s = w.get(&h).cloned().unwrap_or_else(|| ScalarSeries::zero_to(w.order));
            acc = acc.add(&s.mul(c));
        }
        if acc.order() < n {
            return Err(Error::InsufficientPrecision { point: h, have: acc.order(), need: n });
        }
        cells.insert(h, acc.truncate(n));
    }
    Ok(SeriesWindow { region, order: n, cells })
}

/// Expands every term on the window and compares exactly.
pub fn verify_equation(spec: &EquationSpec) -> Result<EquationResult> {
    verify_on(spec, &Region::cube(spec.param.rank(), spec.window))
}

pub fn verify_on(spec: &EquationSpec, region: &Region) -> Result<EquationResult> {
    if spec.terms.is_empty() {
        return Err(Error::InvalidParam("equation without terms".into()));
    }
    let n = 2 * spec.order;
    let mut windows = Vec::new();
    for t in &spec.terms {
        let s = term_series(spec, t)?;
        // a coefficient of negative valuation needs extra precision from the series
        let slack = (-t.coeff.valuation().unwrap_or(0)).max(0);
        windows.push((t.coeff.clone(), s.coeffs_on(region, n + slack)?));
    }
    let sum = combine(&windows, n)?;
    let first_mismatch = sum.cells.iter().find_map(|(h, s)| s.valuation().map(|v| (h.clone(), v)));
    Ok(EquationResult { label: spec.label.clone(), cells_checked: sum.cells.len(), first_mismatch })
}

// ---- JSON form -------------------------------------------------------------

#[derive(Serialize, Deserialize, Clone, Debug)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FactorJson {
    Series { series: SeriesRef },
    Monomial { c: MonomialJson, h: Vec<i64> },
    Finite { terms: Vec<(Point, SeriesJson)> },
}

#[derive(Serialize, Deserialize, Clone, Debug)]
pub struct ActionJson {
    pub c: MonomialJson,
    pub x: Vec<MonomialJson>,
    pub g: Vec<i64>,
    pub h: Vec<i64>,
}

#[derive(Serialize, Deserialize, Clone, Debug)]
pub struct TermJson {
    pub coeff: SeriesJson,
    #[serde(default)]
    pub action: Option<ActionJson>,
    pub word: Vec<FactorJson>,
}

#[derive(Serialize, Deserialize, Clone, Debug)]
pub struct EquationJson {
    #[serde(default)]
    pub label: Option<String>,
    pub param: ParamJson,
    pub terms: Vec<TermJson>,
    pub window: i64,
    pub order: i64,
    pub mode: Mode,
}

pub fn equation_from_json(j: &EquationJson) -> Result<EquationSpec> {
    let param = param_from_json(&j.param)?;
    let terms = j
        .terms
        .iter()
        .map(|t| {
            let word = t
                .word
                .iter()
                .map(|f| {
                    Ok(match f {
                        FactorJson::Series { series } => Factor::Named(series.clone()),
                        FactorJson::Monomial { c, h } => {
                            Factor::Monomial(MonoArg { c: monomial_from_json(c)?, h: h.clone() })
                        }
                        FactorJson::Finite { terms } => Factor::Finite(
                            terms.iter().map(|(h, s)| Ok((h.clone(), series_from_json(s)?))).collect::<Result<_>>()?,
                        ),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let action = match &t.action {
                None => None,
                Some(a) => Some((
                    monomial_from_json(&a.c)?,
                    TorusPoint::new(a.x.iter().map(monomial_from_json).collect::<Result<_>>()?),
                    a.g.clone(),
                    a.h.clone(),
                )),
            };
            Ok(Term { coeff: series_from_json(&t.coeff)?, action, word })
        })
        .collect::<Result<Vec<_>>>()?;
    if j.window < 0 || j.order < 0 {
        return Err(Error::InvalidParam("window and order must be nonnegative".into()));
    }
    Ok(EquationSpec {
        label: j.label.clone().unwrap_or_else(|| "spec".into()),
        param,
        terms,
        window: j.window,
        order: j.order,
        mode: j.mode,
    })
}

pub fn parse_equation(text: &str) -> Result<EquationSpec> {
    let j: EquationJson = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    equation_from_json(&j)
}
