//! Formal functions sum_h a_h e(h) on a quantum torus.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::{Arc, Mutex};

use super::engine;
use super::param::QuantParam;
use super::point::TorusPoint;
use super::quad::Minorant;
use crate::error::{Error, Result};
use crate::lattice::{box_points, mat_vec, smith_normal_form, LatticeMap, Mat};
use crate::par;
use crate::scalar_ring::{ScalarSeries, UnitMonomial};

pub type Point = Vec<i64>;

/// Coefficient rule: `rule(p, n)` is exact at least through u^n.
pub type CoeffRule = Arc<dyn Fn(&[i64], i64) -> Result<ScalarSeries> + Send + Sync>;

/// Coefficient sequence of a power series in one variable: `seq(k, n)`.
pub type SeqRule = Arc<dyn Fn(i64, i64) -> Result<ScalarSeries> + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SeriesKind {
    /// Finite support.
    Algebraic,
    /// Infinite support with a finiteness certificate for every order.
    Proper,
    /// Window-only; cannot enter products.
    Formal,
}

/// A box of lattice points, optionally restricted to an explicit cell set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Region {
    pub lo: Vec<i64>,
    pub hi: Vec<i64>,
    cells: Option<Arc<BTreeSet<Point>>>,
}

impl Region {
    /// ||h||_inf <= r.
    pub fn cube(d: usize, r: i64) -> Self {
        Region { lo: vec![-r; d], hi: vec![r; d], cells: None }
    }

    pub fn boxed(lo: Vec<i64>, hi: Vec<i64>) -> Self {
        assert_eq!(lo.len(), hi.len());
        Region { lo, hi, cells: None }
    }

    pub fn from_points(d: usize, pts: impl IntoIterator<Item = Point>) -> Self {
        let cells: BTreeSet<Point> = pts.into_iter().collect();
        let mut lo = vec![0; d];
        let mut hi = vec![-1; d];
        for (n, p) in cells.iter().enumerate() {
            for i in 0..d {
                if n == 0 {
                    lo[i] = p[i];
                    hi[i] = p[i];
                } else {
                    lo[i] = lo[i].min(p[i]);
                    hi[i] = hi[i].max(p[i]);
                }
            }
        }
        if d == 0 && !cells.is_empty() {
            hi = vec![];
            lo = vec![];
        }
        Region { lo, hi, cells: Some(Arc::new(cells)) }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn is_empty(&self) -> bool {
        match &self.cells {
            Some(c) => c.is_empty(),
            None => self.lo.iter().zip(&self.hi).any(|(a, b)| a > b),
        }
    }

    /// Radius if this is a centered cube.
    pub fn radius(&self) -> Option<i64> {
        if self.cells.is_some() {
            return None;
        }
        let r = self.hi.first().copied().unwrap_or(0);
        (self.hi.iter().all(|x| *x == r) && self.lo.iter().all(|x| *x == -r)).then_some(r)
    }

    pub fn contains(&self, h: &[i64]) -> bool {
        if let Some(c) = &self.cells {
            return c.contains(h);
        }
        h.iter().zip(self.lo.iter().zip(&self.hi)).all(|(x, (a, b))| a <= x && x <= b)
    }

    pub fn points(&self) -> Vec<Point> {
        if let Some(c) = &self.cells {
            return c.iter().cloned().collect();
        }
        if self.is_empty() {
            return vec![];
        }
        let d = self.dim();
        let mut out = vec![];
        let mut cur = self.lo.clone();
        loop {
            out.push(cur.clone());
            let mut i = 0;
            loop {
                if i == d {
                    return out;
                }
                if cur[i] < self.hi[i] {
                    cur[i] += 1;
                    break;
                }
                cur[i] = self.lo[i];
                i += 1;
            }
        }
    }

    pub fn translate(&self, v: &[i64]) -> Region {
        let add = |p: &[i64]| p.iter().zip(v).map(|(a, b)| a + b).collect::<Vec<_>>();
        Region {
            lo: add(&self.lo),
            hi: add(&self.hi),
            cells: self.cells.as_ref().map(|c| Arc::new(c.iter().map(|p| add(p)).collect())),
        }
    }

    pub fn has_cell_filter(&self) -> bool {
        self.cells.is_some()
    }
}

/// Coefficients of a series on a region, all known through u^order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeriesWindow {
    pub region: Region,
    pub order: i64,
    pub cells: BTreeMap<Point, ScalarSeries>,
}

impl SeriesWindow {
    pub fn get(&self, h: &[i64]) -> Option<&ScalarSeries> {
        self.cells.get(h)
    }

    /// Cells with a nonzero known coefficient.
    pub fn nonzero(&self) -> impl Iterator<Item = (&Point, &ScalarSeries)> {
        self.cells.iter().filter(|(_, s)| !s.is_zero())
    }

    pub fn add(&self, o: &SeriesWindow) -> SeriesWindow {
        let mut cells = self.cells.clone();
        for (h, s) in &o.cells {
            let v = match cells.get(h) {
                Some(x) => x.add(s),
                None => s.clone(),
            };
            cells.insert(h.clone(), v);
        }
        SeriesWindow { region: self.region.clone(), order: self.order.min(o.order), cells }
    }

    pub fn scale(&self, m: &UnitMonomial) -> SeriesWindow {
        let cells = self.cells.iter().map(|(h, s)| (h.clone(), s.scale(m).truncate(self.order))).collect();
        SeriesWindow { region: self.region.clone(), order: self.order, cells }
    }

    pub fn neg(&self) -> SeriesWindow {
        let cells = self.cells.iter().map(|(h, s)| (h.clone(), s.neg())).collect();
        SeriesWindow { region: self.region.clone(), order: self.order, cells }
    }

    /// First cell (in lattice order) and u-exponent where the windows differ
    /// through u^n.
    pub fn first_difference(&self, o: &SeriesWindow, n: i64) -> Option<(Point, i64)> {
        let keys: BTreeSet<&Point> = self.cells.keys().chain(o.cells.keys()).collect();
        let zero = ScalarSeries::zero();
        for h in keys {
            let a = self.cells.get(h).unwrap_or(&zero);
            let b = o.cells.get(h).unwrap_or(&zero);
            if let Some(e) = a.first_difference(b, n) {
                return Some((h.clone(), e));
            }
        }
        None
    }
}

/// p -> base * prod gens_j^{p_j}.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffineChar {
    pub base: UnitMonomial,
    pub gens: Vec<UnitMonomial>,
}

impl AffineChar {
    pub fn trivial(k: usize) -> Self {
        AffineChar { base: UnitMonomial::one(), gens: vec![UnitMonomial::one(); k] }
    }

    pub fn eval(&self, p: &[i64]) -> UnitMonomial {
        let mut acc = self.base.clone();
        for (g, e) in self.gens.iter().zip(p) {
            if *e != 0 && !g.is_one() {
                acc = acc.mul(&g.pow(*e));
            }
        }
        acc
    }

    pub fn uexp(&self, p: &[i64]) -> i64 {
        self.base.uexp() + self.gens.iter().zip(p).map(|(g, e)| g.uexp() * e).sum::<i64>()
    }

    pub fn mul(&self, o: &AffineChar) -> AffineChar {
        AffineChar {
            base: self.base.mul(&o.base),
            gens: self.gens.iter().zip(&o.gens).map(|(a, b)| a.mul(b)).collect(),
        }
    }

    fn uexp_linear(&self) -> (i64, Vec<i64>) {
        (self.base.uexp(), self.gens.iter().map(|g| g.uexp()).collect())
    }
}

/// Solves offset + map * p = h for injective `map`.
#[derive(Clone, Debug)]
pub struct PreimageSolver {
    u: Mat,
    v: Mat,
    diag: Vec<i64>,
    rows: usize,
}

impl PreimageSolver {
    pub fn new(map: &Mat, rows: usize, cols: usize) -> Result<Self> {
        if cols == 0 {
            return Ok(PreimageSolver { u: crate::lattice::identity(rows), v: vec![], diag: vec![], rows });
        }
        let s = smith_normal_form(map)?;
        let diag = s.diagonal();
        if diag.iter().filter(|x| **x != 0).count() != cols {
            return Err(Error::NonInjectiveImage);
        }
        Ok(PreimageSolver { u: s.u, v: s.v, diag, rows })
    }

    pub fn solve(&self, b: &[i64]) -> Option<Vec<i64>> {
        let ub = mat_vec(&self.u, b);
        let k = self.diag.len();
        let mut y = vec![0i64; k];
        for (i, x) in ub.iter().enumerate() {
            if i < k {
                if x % self.diag[i] != 0 {
                    return None;
                }
                y[i] = x / self.diag[i];
            } else if *x != 0 {
                return None;
            }
        }
        debug_assert_eq!(ub.len(), self.rows);
        Some(if k == 0 { vec![] } else { mat_vec(&self.v, &y) })
    }
}

/// Coefficients supported on offset + map(P) for a box or half-space P of
/// parameters, given by a rule times an affine character.
#[derive(Clone)]
pub struct LatticeBody {
    pub offset: Vec<i64>,
    /// d x k, injective.
    pub map: Mat,
    pub lower: Vec<Option<i64>>,
    pub upper: Vec<Option<i64>>,
    pub rule: CoeffRule,
    pub chi: AffineChar,
    /// Lower bound for the valuation of chi(p) * rule(p), if known.
    pub minorant: Option<Minorant>,
    pub label: String,
    solver: Arc<PreimageSolver>,
}

impl LatticeBody {
    pub fn new(
        offset: Vec<i64>,
        map: Mat,
        lower: Vec<Option<i64>>,
        upper: Vec<Option<i64>>,
        rule: CoeffRule,
        minorant: Option<Minorant>,
        label: impl Into<String>,
    ) -> Result<Self> {
        let d = offset.len();
        if map.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: map.len() });
        }
        let k = lower.len();
        if upper.len() != k || map.iter().any(|r| r.len() != k) {
            return Err(Error::DimensionMismatch { expected: k, got: upper.len() });
        }
        if let Some(m) = &minorant {
            if m.dim() != k {
                return Err(Error::DimensionMismatch { expected: k, got: m.dim() });
            }
        }
        let solver = Arc::new(PreimageSolver::new(&map, d, k)?);
        Ok(LatticeBody {
            offset,
            map,
            lower,
            upper,
            rule,
            chi: AffineChar::trivial(k),
            minorant,
            label: label.into(),
            solver,
        })
    }

    pub fn params(&self) -> usize {
        self.lower.len()
    }

    pub fn in_bounds(&self, p: &[i64]) -> bool {
        p.iter().enumerate().all(|(i, x)| {
            self.lower[i].is_none_or(|l| *x >= l) && self.upper[i].is_none_or(|u| *x <= u)
        })
    }

    pub fn point(&self, p: &[i64]) -> Point {
        let mp = mat_vec(&self.map, p);
        self.offset.iter().zip(mp).map(|(a, b)| a + b).collect()
    }

    pub fn preimage(&self, h: &[i64]) -> Option<Vec<i64>> {
        let b: Vec<i64> = h.iter().zip(&self.offset).map(|(a, b)| a - b).collect();
        self.solver.solve(&b).filter(|p| self.in_bounds(p))
    }

    /// chi(p) * rule(p), exact through u^n.
    pub fn coeff_p(&self, p: &[i64], n: i64) -> Result<ScalarSeries> {
        let c = self.chi.eval(p);
        let raw = (self.rule)(p, n - c.uexp())?;
        Ok(raw.scale(&c).truncate(n))
    }

    pub fn all_bounded(&self) -> bool {
        self.lower.iter().zip(&self.upper).all(|(a, b)| a.is_some() && b.is_some())
    }

    fn kind(&self) -> SeriesKind {
        if self.all_bounded() {
            return SeriesKind::Algebraic;
        }
        match &self.minorant {
            Some(m) if m.certifies_finite(&self.lower, &self.upper) => SeriesKind::Proper,
            _ => SeriesKind::Formal,
        }
    }

    fn with_char(&self, ch: &AffineChar) -> LatticeBody {
        let mut out = self.clone();
        out.chi = self.chi.mul(ch);
        if let Some(m) = &mut out.minorant {
            let (c, w) = ch.uexp_linear();
            m.add_linear(c, &w);
        }
        out
    }
}

pub struct FormalBody {
    pub label: String,
    pub rule: CoeffRule,
}

/// sum_k seq(k) X^k for an algebraic X supported on ell(h) = 1.
pub struct PowerBody {
    pub label: String,
    pub base: BTreeMap<Point, ScalarSeries>,
    pub ell: Vec<i64>,
    pub seq: SeqRule,
    powers: Mutex<Vec<Arc<BTreeMap<Point, ScalarSeries>>>>,
}

pub struct ActedBody {
    pub inner: TorusSeries,
    pub c: UnitMonomial,
    pub x: TorusPoint,
    pub g: Vec<i64>,
    pub h: Vec<i64>,
}

pub struct PulledBody {
    pub inner: TorusSeries,
    pub f: LatticeMap,
    /// Values of the character a on the source basis.
    pub a: Vec<UnitMonomial>,
    solver: PreimageSolver,
}

#[derive(Clone)]
pub(crate) enum Body {
    Finite(Arc<BTreeMap<Point, ScalarSeries>>),
    Lattice(Arc<LatticeBody>),
    Word(Arc<Vec<TorusSeries>>),
    Formal(Arc<FormalBody>),
    Power(Arc<PowerBody>),
    Window(Arc<SeriesWindow>),
    Acted(Arc<ActedBody>),
    Pulled(Arc<PulledBody>),
}

/// A formal function on T(H, alpha).
#[derive(Clone)]
pub struct TorusSeries {
    param: QuantParam,
    pub(crate) body: Body,
}

fn add_vec(a: &[i64], b: &[i64]) -> Vec<i64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn sub_vec(a: &[i64], b: &[i64]) -> Vec<i64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn neg_vec(a: &[i64]) -> Vec<i64> {
    a.iter().map(|x| -x).collect()
}

/// Exact product of two finitely supported series.
pub fn finite_mul(
    param: &QuantParam,
    a: &BTreeMap<Point, ScalarSeries>,
    b: &BTreeMap<Point, ScalarSeries>,
) -> BTreeMap<Point, ScalarSeries> {
    let mut out: BTreeMap<Point, ScalarSeries> = BTreeMap::new();
    for (g, x) in a {
        for (h, y) in b {
            let (al, k) = param.exp_mul(g, h);
            let t = x.mul(y).scale(&al);
            let v = match out.remove(&k) {
                Some(s) => s.add(&t),
                None => t,
            };
            out.insert(k, v);
        }
    }
    out.retain(|_, s| !s.is_exact_zero());
    out
}

impl TorusSeries {
    pub fn param(&self) -> &QuantParam {
        &self.param
    }

    pub fn rank(&self) -> usize {
        self.param.rank()
    }

    pub fn finite(param: &QuantParam, terms: impl IntoIterator<Item = (Point, ScalarSeries)>) -> Result<Self> {
        let mut map: BTreeMap<Point, ScalarSeries> = BTreeMap::new();
        for (h, s) in terms {
            if h.len() != param.rank() {
                return Err(Error::DimensionMismatch { expected: param.rank(), got: h.len() });
            }
            let v = match map.remove(&h) {
                Some(x) => x.add(&s),
                None => s,
            };
            map.insert(h, v);
        }
        map.retain(|_, s| !s.is_exact_zero());
        Ok(TorusSeries { param: param.clone(), body: Body::Finite(Arc::new(map)) })
    }

    pub fn zero(param: &QuantParam) -> Self {
        Self::finite(param, []).unwrap()
    }

    pub fn one(param: &QuantParam) -> Self {
        Self::monomial(param, UnitMonomial::one(), &vec![0; param.rank()])
    }

    /// c e(h).
    pub fn monomial(param: &QuantParam, c: UnitMonomial, h: &[i64]) -> Self {
        Self::finite(param, [(h.to_vec(), c.to_series())]).unwrap()
    }

    pub fn exponent(param: &QuantParam, h: &[i64]) -> Self {
        Self::monomial(param, UnitMonomial::one(), h)
    }

    pub fn lattice(param: &QuantParam, body: LatticeBody) -> Result<Self> {
        if body.offset.len() != param.rank() {
            return Err(Error::DimensionMismatch { expected: param.rank(), got: body.offset.len() });
        }
        Ok(TorusSeries { param: param.clone(), body: Body::Lattice(Arc::new(body)) })
    }

    /// Window-only series with coefficient rule h -> rule(h, n).
    pub fn formal(param: &QuantParam, label: impl Into<String>, rule: CoeffRule) -> Self {
        TorusSeries {
            param: param.clone(),
            body: Body::Formal(Arc::new(FormalBody { label: label.into(), rule })),
        }
    }

    /// sum_{k >= 0} seq(k) X^k where every exponent h of X has ell(h) = 1.
    pub fn power(
        param: &QuantParam,
        label: impl Into<String>,
        x: &TorusSeries,
        ell: Vec<i64>,
        seq: SeqRule,
    ) -> Result<Self> {
        let base = x
            .finite_terms()
            .ok_or_else(|| Error::NotMultipliable("power base must be algebraic".into()))?;
        for (h, s) in base.iter() {
            if h.iter().zip(&ell).map(|(a, b)| a * b).sum::<i64>() != 1 {
                return Err(Error::InvalidParam(format!("base exponent {h:?} not on ell = 1")));
            }
            if !s.is_exact() {
                return Err(Error::InvalidParam("power base must be exact".into()));
            }
        }
        let mut unit = BTreeMap::new();
        unit.insert(vec![0; param.rank()], ScalarSeries::one());
        Ok(TorusSeries {
            param: param.clone(),
            body: Body::Power(Arc::new(PowerBody {
                label: label.into(),
                base: (*base).clone(),
                ell,
                seq,
                powers: Mutex::new(vec![Arc::new(unit)]),
            })),
        })
    }

    pub fn from_window(param: &QuantParam, w: SeriesWindow) -> Self {
        TorusSeries { param: param.clone(), body: Body::Window(Arc::new(w)) }
    }

    /// The (lazy) product f_1 f_2 ... f_k.
    pub fn word(factors: Vec<TorusSeries>) -> Result<Self> {
        let first = factors.first().ok_or_else(|| Error::InvalidParam("empty word".into()))?;
        let param = first.param.clone();
        for f in &factors {
            if f.param != param {
                return Err(Error::ParamMismatch);
            }
        }
        if factors.len() == 1 {
            return Ok(factors.into_iter().next().unwrap());
        }
        Ok(TorusSeries { param, body: Body::Word(Arc::new(factors)) })
    }

    /// Lazy product; both operands must admit products.
    pub fn mul(&self, o: &TorusSeries) -> Result<TorusSeries> {
        for s in [self, o] {
            if s.kind() == SeriesKind::Formal {
                return Err(Error::NotMultipliable(format!("{} is window-only", s.label())));
            }
        }
        Self::word(vec![self.clone(), o.clone()])
    }

    pub fn kind(&self) -> SeriesKind {
        match &self.body {
            Body::Finite(_) => SeriesKind::Algebraic,
            Body::Lattice(l) => l.kind(),
            Body::Word(fs) => fs.iter().map(|f| f.kind()).max().unwrap_or(SeriesKind::Algebraic),
            Body::Formal(_) | Body::Power(_) | Body::Window(_) | Body::Acted(_) => SeriesKind::Formal,
            Body::Pulled(p) => match p.inner.kind() {
                SeriesKind::Algebraic => SeriesKind::Algebraic,
                _ => SeriesKind::Formal,
            },
        }
    }

    pub fn label(&self) -> String {
        match &self.body {
            Body::Finite(m) => format!("finite[{}]", m.len()),
            Body::Lattice(l) => l.label.clone(),
            Body::Word(fs) => fs.iter().map(|f| f.label()).collect::<Vec<_>>().join("*"),
            Body::Formal(f) => f.label.clone(),
            Body::Power(p) => p.label.clone(),
            Body::Window(_) => "window".into(),
            Body::Acted(a) => format!("act({})", a.inner.label()),
            Body::Pulled(p) => format!("pull({})", p.inner.label()),
        }
    }

    /// The terms of a finite body (not of finite-support words).
    pub fn finite_terms(&self) -> Option<Arc<BTreeMap<Point, ScalarSeries>>> {
        match &self.body {
            Body::Finite(m) => Some(m.clone()),
            _ => None,
        }
    }

    /// Full expansion of an algebraic series (finite bodies and words of them).
    pub fn expand_algebraic(&self) -> Result<BTreeMap<Point, ScalarSeries>> {
        match &self.body {
            Body::Finite(m) => Ok((**m).clone()),
            Body::Word(fs) => {
                let mut acc: BTreeMap<Point, ScalarSeries> = BTreeMap::new();
                acc.insert(vec![0; self.rank()], ScalarSeries::one());
                for f in fs.iter() {
                    acc = finite_mul(&self.param, &acc, &f.expand_algebraic()?);
                }
                Ok(acc)
            }
            Body::Lattice(l) if l.all_bounded() => {
                let ranges: Vec<(i64, i64)> =
                    l.lower.iter().zip(&l.upper).map(|(a, b)| (a.unwrap(), b.unwrap())).collect();
                let mut out = BTreeMap::new();
                let reg = Region::boxed(
                    ranges.iter().map(|r| r.0).collect(),
                    ranges.iter().map(|r| r.1).collect(),
                );
                for p in reg.points() {
                    let c = l.coeff_p(&p, crate::scalar_ring::EXACT)?;
                    if !c.is_exact_zero() {
                        out.insert(l.point(&p), c);
                    }
                }
                Ok(out)
            }
            _ => Err(Error::NotMultipliable(format!("{} is not algebraic", self.label()))),
        }
    }

    /// Coefficient a_h through u^n.
    pub fn coeff(&self, h: &[i64], n: i64) -> Result<ScalarSeries> {
        if h.len() != self.rank() {
            return Err(Error::DimensionMismatch { expected: self.rank(), got: h.len() });
        }
        match &self.body {
            Body::Finite(m) => {
                Ok(m.get(h).map(|s| s.truncate(n)).unwrap_or_else(|| ScalarSeries::zero_to(n)))
            }
            Body::Lattice(l) => match l.preimage(h) {
                Some(p) => l.coeff_p(&p, n),
                None => Ok(ScalarSeries::zero_to(n)),
            },
            Body::Formal(f) => Ok((f.rule)(h, n)?.truncate(n)),
            Body::Power(p) => p.coeff(&self.param, h, n),
            Body::Window(w) => {
                let s = w.get(h).ok_or_else(|| Error::OutsideWindow(h.to_vec()))?;
                if s.order() < n {
                    return Err(Error::InsufficientPrecision { point: h.to_vec(), have: s.order(), need: n });
                }
                Ok(s.truncate(n))
            }
            _ => {
                let w = self.coeffs_on(&Region::from_points(self.rank(), [h.to_vec()]), n)?;
                Ok(w.cells.get(h).cloned().unwrap_or_else(|| ScalarSeries::zero_to(n)))
            }
        }
    }

    /// All coefficients on `region`, exact through u^n.
    pub fn coeffs_on(&self, region: &Region, n: i64) -> Result<SeriesWindow> {
        if region.dim() != self.rank() {
            return Err(Error::DimensionMismatch { expected: self.rank(), got: region.dim() });
        }
        let cells: BTreeMap<Point, ScalarSeries> = match &self.body {
            Body::Word(fs) => return engine::word_window(&self.param, fs, Some(region), n),
            Body::Finite(m) => region
                .points()
                .into_iter()
                .map(|h| {
                    let s = m.get(&h).map(|s| s.truncate(n)).unwrap_or_else(|| ScalarSeries::zero_to(n));
                    (h, s)
                })
                .collect(),
            Body::Lattice(l) => {
                let hits: Vec<(Point, Vec<i64>)> =
                    region.points().into_iter().filter_map(|h| l.preimage(&h).map(|p| (h, p))).collect();
                let vals = par::try_map(&hits, |(_, p)| l.coeff_p(p, n))?;
                let mut cells: BTreeMap<Point, ScalarSeries> =
                    region.points().into_iter().map(|h| (h, ScalarSeries::zero_to(n))).collect();
                for ((h, _), v) in hits.into_iter().zip(vals) {
                    cells.insert(h, v);
                }
                cells
            }
            Body::Acted(a) => {
                let shift = sub_vec(&a.h, &a.g);
                let inner = a.inner.coeffs_on(&region.translate(&shift), n + a.max_shift_uexp(region))?;
                let pts = region.points();
                let vals = par::try_map(&pts, |k| {
                    let m = add_vec(k, &shift);
                    let f = a.factor(&self.param, &m);
                    let need = n - f.uexp();
                    let s = inner.cells.get(&m).cloned().unwrap_or_else(|| ScalarSeries::zero_to(inner.order));
                    if s.order() < need {
                        return Err(Error::InsufficientPrecision { point: k.clone(), have: s.order(), need });
                    }
                    Ok(s.scale(&f).truncate(n))
                })?;
                pts.into_iter().zip(vals).collect()
            }
            Body::Pulled(p) => {
                let pts = region.points();
                let pre: Vec<Option<Vec<i64>>> = pts.iter().map(|k| p.solver.solve(k)).collect();
                let src_pts: Vec<Point> = pre.iter().flatten().cloned().collect();
                let shifts: Vec<UnitMonomial> = src_pts.iter().map(|h| p.a_at(h)).collect();
                let max_up = shifts.iter().map(|s| -s.uexp()).max().unwrap_or(0).max(0);
                let inner = if src_pts.is_empty() {
                    None
                } else {
                    Some(p.inner.coeffs_on(&Region::from_points(p.f.src(), src_pts.clone()), n + max_up)?)
                };
                let mut cells = BTreeMap::new();
                for (k, pre) in pts.into_iter().zip(pre) {
                    let v = match pre {
                        Some(h) => {
                            let a = p.a_at(&h);
                            inner.as_ref().unwrap().cells[&h].scale(&a).truncate(n)
                        }
                        None => ScalarSeries::zero_to(n),
                    };
                    cells.insert(k, v);
                }
                cells
            }
            _ => {
                let pts = region.points();
                let vals = par::try_map(&pts, |h| self.coeff(h, n))?;
                pts.into_iter().zip(vals).collect()
            }
        };
        Ok(SeriesWindow { region: region.clone(), order: n, cells })
    }

    /// A finite superset of {h : valuation(a_h) <= n}.
    pub fn enumerate(&self, n: i64) -> Result<Vec<Point>> {
        match &self.body {
            Body::Finite(m) => Ok(m.keys().cloned().collect()),
            Body::Lattice(_) | Body::Word(_) => {
                let fs = match &self.body {
                    Body::Word(fs) => (**fs).clone(),
                    _ => vec![self.clone()],
                };
                let w = engine::word_window(&self.param, &fs, None, n)?;
                Ok(w.cells.into_keys().collect())
            }
            _ => Err(Error::NotMultipliable(format!("{} has no enumerator", self.label()))),
        }
    }

    /// c e(g) x^*(f) e(h)^{-1}.
    pub fn act_parts(&self, c: &UnitMonomial, x: &TorusPoint, g: &[i64], h: &[i64]) -> Result<TorusSeries> {
        let d = self.rank();
        if x.dim() != d || g.len() != d || h.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: x.dim().min(g.len()).min(h.len()) });
        }
        let p = &self.param;
        let body = match &self.body {
            Body::Finite(m) => {
                let eps = p.epsilon_mono(h);
                let nh = neg_vec(h);
                let terms = m.iter().map(|(k, s)| {
                    let gk = add_vec(g, k);
                    let f = c.mul(&eps).mul(&p.alpha(g, k)).mul(&p.alpha(&gk, &nh)).mul(&x.eval(k));
                    (sub_vec(&gk, h), s.scale(&f))
                });
                return TorusSeries::finite(p, terms);
            }
            Body::Lattice(l) => {
                let nh = neg_vec(h);
                let off = &l.offset;
                let goff = add_vec(g, off);
                let base = c
                    .mul(&p.epsilon_mono(h))
                    .mul(&p.alpha(g, off))
                    .mul(&p.alpha(&goff, &nh))
                    .mul(&x.eval(off));
                let gens = (0..l.params())
                    .map(|j| {
                        let col: Vec<i64> = l.map.iter().map(|r| r[j]).collect();
                        p.alpha(g, &col).mul(&p.alpha(&col, &nh)).mul(&x.eval(&col))
                    })
                    .collect();
                let mut nb = l.with_char(&AffineChar { base, gens });
                nb.offset = sub_vec(&goff, h);
                Body::Lattice(Arc::new(nb))
            }
            Body::Word(fs) => {
                let mut out = vec![];
                let zero = vec![0; d];
                if !c.is_one() || g.iter().any(|v| *v != 0) {
                    out.push(TorusSeries::monomial(p, c.clone(), g));
                }
                for f in fs.iter() {
                    if x.is_identity() {
                        out.push(f.clone());
                    } else {
                        out.push(f.act_parts(&UnitMonomial::one(), x, &zero, &zero)?);
                    }
                }
                if h.iter().any(|v| *v != 0) {
                    out.push(TorusSeries::monomial(p, p.epsilon_mono(h), &neg_vec(h)));
                }
                Body::Word(Arc::new(out))
            }
            _ => Body::Acted(Arc::new(ActedBody {
                inner: self.clone(),
                c: c.clone(),
                x: x.clone(),
                g: g.to_vec(),
                h: h.to_vec(),
            })),
        };
        Ok(TorusSeries { param: p.clone(), body })
    }

    /// x^*: e(h) -> h(x) e(h).
    pub fn shift_pullback(&self, x: &TorusPoint) -> Result<TorusSeries> {
        let zero = vec![0; self.rank()];
        self.act_parts(&UnitMonomial::one(), x, &zero, &zero)
    }

    /// sum_h a(h) a_h e(f(h)) on the target torus. `multiplicative` states
    /// that F^* respects products (trivial characteristic).
    pub fn pullback_along(
        &self,
        f: &LatticeMap,
        a: &[UnitMonomial],
        target: &QuantParam,
        multiplicative: bool,
    ) -> Result<TorusSeries> {
        if f.src() != self.rank() || a.len() != self.rank() {
            return Err(Error::DimensionMismatch { expected: self.rank(), got: f.src() });
        }
        if f.dst() != target.rank() {
            return Err(Error::DimensionMismatch { expected: target.rank(), got: f.dst() });
        }
        let a_at = |h: &[i64]| {
            let mut acc = UnitMonomial::one();
            for (v, e) in a.iter().zip(h) {
                if *e != 0 {
                    acc = acc.mul(&v.pow(*e));
                }
            }
            acc
        };
        let body = match &self.body {
            Body::Finite(m) => {
                let terms = m.iter().map(|(h, s)| (f.apply(h), s.scale(&a_at(h))));
                return TorusSeries::finite(target, terms);
            }
            Body::Lattice(l) => {
                let fmap = crate::lattice::mat_mul(f.matrix(), &l.map);
                let k = l.params();
                if PreimageSolver::new(&fmap, f.dst(), k).is_ok() {
                    let base = a_at(&l.offset);
                    let gens = (0..k)
                        .map(|j| a_at(&l.map.iter().map(|r| r[j]).collect::<Vec<_>>()))
                        .collect();
                    let mut nb = l.with_char(&AffineChar { base, gens });
                    nb.offset = f.apply(&l.offset);
                    nb.solver = Arc::new(PreimageSolver::new(&fmap, f.dst(), k)?);
                    nb.map = fmap;
                    Body::Lattice(Arc::new(nb))
                } else {
                    self.pulled(f, a)?
                }
            }
            Body::Word(fs) if multiplicative => {
                let parts =
                    fs.iter().map(|s| s.pullback_along(f, a, target, true)).collect::<Result<Vec<_>>>()?;
                Body::Word(Arc::new(parts))
            }
            _ => self.pulled(f, a)?,
        };
        Ok(TorusSeries { param: target.clone(), body })
    }

    fn pulled(&self, f: &LatticeMap, a: &[UnitMonomial]) -> Result<Body> {
        let solver = PreimageSolver::new(f.matrix(), f.dst(), f.src())?;
        Ok(Body::Pulled(Arc::new(PulledBody { inner: self.clone(), f: f.clone(), a: a.to_vec(), solver })))
    }

    /// Re-reads the same coefficients over another quantization parameter
    /// on the same lattice.
    pub fn with_param(&self, param: &QuantParam) -> Result<TorusSeries> {
        if param.rank() != self.rank() {
            return Err(Error::LatticeMismatch(self.rank(), param.rank()));
        }
        match &self.body {
            Body::Word(_) | Body::Acted(_) => Err(Error::InvalidParam(
                "products and actions depend on the quantization parameter".into(),
            )),
            b => Ok(TorusSeries { param: param.clone(), body: b.clone() }),
        }
    }
}

/// x(n') * y(n'') through u^n, asking each factor for as much precision as
/// the other's valuation requires.
fn product_coeff<F, G>(fx: F, fy: G, n: i64) -> Result<ScalarSeries>
where
    F: Fn(i64) -> Result<ScalarSeries>,
    G: Fn(i64) -> Result<ScalarSeries>,
{
    let low = |s: &ScalarSeries| s.valuation().unwrap_or_else(|| s.order().saturating_add(1));
    let (mut x, mut y) = (fx(n)?, fy(n)?);
    for _ in 0..4 {
        let (nx, ny) = (n.saturating_sub(low(&y)), n.saturating_sub(low(&x)));
        if x.order() >= nx && y.order() >= ny {
            break;
        }
        if x.order() < nx {
            x = fx(nx)?;
        }
        if y.order() < ny {
            y = fy(ny)?;
        }
    }
    let p = x.mul(&y);
    if p.order() < n {
        return Err(Error::InsufficientPrecision { point: vec![], have: p.order(), need: n });
    }
    Ok(p.truncate(n))
}

impl TorusSeries {
    /// The external product f(t') g(t'') on H' + H'', over `param`.
    pub fn boxtimes(&self, o: &TorusSeries, param: &QuantParam) -> Result<TorusSeries> {
        let (d1, d2) = (self.rank(), o.rank());
        if param.rank() != d1 + d2 {
            return Err(Error::DimensionMismatch { expected: d1 + d2, got: param.rank() });
        }
        match (&self.body, &o.body) {
            (Body::Finite(a), Body::Finite(b)) => {
                let mut terms = Vec::new();
                for (g, x) in a.iter() {
                    for (h, y) in b.iter() {
                        let mut k = g.clone();
                        k.extend(h.iter().copied());
                        terms.push((k, x.mul(y)));
                    }
                }
                TorusSeries::finite(param, terms)
            }
            (Body::Lattice(a), Body::Lattice(b)) => {
                let (k1, k2) = (a.params(), b.params());
                let mut offset = a.offset.clone();
                offset.extend(b.offset.iter().copied());
                let mut map = vec![vec![0; k1 + k2]; d1 + d2];
                for i in 0..d1 {
                    map[i][..k1].copy_from_slice(&a.map[i]);
                }
                for i in 0..d2 {
                    map[d1 + i][k1..].copy_from_slice(&b.map[i]);
                }
                let minorant = match (&a.minorant, &b.minorant) {
                    (Some(ma), Some(mb)) => {
                        let mut m = Minorant::zero(k1 + k2);
                        for i in 0..k1 {
                            m.q2[i][..k1].copy_from_slice(&ma.q2[i]);
                        }
                        for i in 0..k2 {
                            m.q2[k1 + i][k1..].copy_from_slice(&mb.q2[i]);
                        }
                        m.l2 = ma.l2.iter().chain(&mb.l2).copied().collect();
                        m.c2 = ma.c2 + mb.c2;
                        Some(m)
                    }
                    _ => None,
                };
                let (aa, bb) = (a.clone(), b.clone());
                let rule: CoeffRule = Arc::new(move |p: &[i64], n: i64| {
                    let (p1, p2) = p.split_at(k1);
                    product_coeff(|k| aa.coeff_p(p1, k), |k| bb.coeff_p(p2, k), n)
                });
                let mut lower = a.lower.clone();
                lower.extend(b.lower.iter().copied());
                let mut upper = a.upper.clone();
                upper.extend(b.upper.iter().copied());
                let body =
                    LatticeBody::new(offset, map, lower, upper, rule, minorant, format!("{}*{}", a.label, b.label))?;
                TorusSeries::lattice(param, body)
            }
            _ => {
                let (f, g) = (self.clone(), o.clone());
                let rule: CoeffRule = Arc::new(move |h: &[i64], n: i64| {
                    let (h1, h2) = h.split_at(d1);
                    product_coeff(|k| f.coeff(h1, k), |k| g.coeff(h2, k), n)
                });
                Ok(TorusSeries::formal(param, format!("{}*{}", self.label(), o.label()), rule))
            }
        }
    }
}

impl ActedBody {
    /// c eps(h) alpha(g,m) alpha(g+m,-h) m(x).
    fn factor(&self, p: &QuantParam, m: &[i64]) -> UnitMonomial {
        let gm = add_vec(&self.g, m);
        self.c
            .mul(&p.epsilon_mono(&self.h))
            .mul(&p.alpha(&self.g, m))
            .mul(&p.alpha(&gm, &neg_vec(&self.h)))
            .mul(&self.x.eval(m))
    }

    fn max_shift_uexp(&self, region: &Region) -> i64 {
        // bound on -uexp(factor) over the region, computed on its corners
        let p = self.inner.param();
        let shift = sub_vec(&self.h, &self.g);
        let corners = corner_points(region);
        corners
            .iter()
            .map(|k| -self.factor(p, &add_vec(k, &shift)).uexp())
            .max()
            .unwrap_or(0)
            .max(0)
    }
}

/// Corners of a box region (or the cells of a point region); a linear
/// function attains its extremes on these.
fn corner_points(region: &Region) -> Vec<Point> {
    if region.has_cell_filter() {
        return region.points();
    }
    let d = region.dim();
    (0..1usize << d)
        .map(|mask| (0..d).map(|i| if mask >> i & 1 == 1 { region.hi[i] } else { region.lo[i] }).collect())
        .collect()
}

impl PulledBody {
    fn a_at(&self, h: &[i64]) -> UnitMonomial {
        let mut acc = UnitMonomial::one();
        for (v, e) in self.a.iter().zip(h) {
            if *e != 0 {
                acc = acc.mul(&v.pow(*e));
            }
        }
        acc
    }
}

impl PowerBody {
    fn power(&self, param: &QuantParam, k: usize) -> Arc<BTreeMap<Point, ScalarSeries>> {
        let mut pw = self.powers.lock().unwrap();
        while pw.len() <= k {
            let next = finite_mul(param, pw.last().unwrap(), &self.base);
            pw.push(Arc::new(next));
        }
        pw[k].clone()
    }

    fn coeff(&self, param: &QuantParam, h: &[i64], n: i64) -> Result<ScalarSeries> {
        let k: i64 = h.iter().zip(&self.ell).map(|(a, b)| a * b).sum();
        if k < 0 {
            return Ok(ScalarSeries::zero_to(n));
        }
        let xk = self.power(param, k as usize);
        match xk.get(h) {
            None => Ok(ScalarSeries::zero_to(n)),
            Some(c) => {
                let v = c.valuation().unwrap_or(0);
                let s = (self.seq)(k, n - v)?;
                Ok(s.mul(c).truncate(n))
            }
        }
    }
}

/// Product of two multipliable series on a window.
pub fn torus_series_mul(f: &TorusSeries, g: &TorusSeries, region: &Region, n: i64) -> Result<TorusSeries> {
    let w = f.mul(g)?.coeffs_on(region, n)?;
    Ok(TorusSeries::from_window(f.param(), w))
}

/// Whether e(h) f e(h)^{-1} = (A_h^{-2})^* f coefficient-exactly.
pub fn conjugation_check(param: &QuantParam, h: &[i64], f: &TorusSeries) -> Result<bool> {
    if f.param() != param {
        return Err(Error::ParamMismatch);
    }
    let lhs = TorusSeries::word(vec![
        TorusSeries::exponent(param, h),
        f.clone(),
        TorusSeries::monomial(param, param.epsilon_mono(h), &neg_vec(h)),
    ])?
    .expand_algebraic()?;
    let rhs = f.shift_pullback(&param.hidden_point(h).pow(-2))?.expand_algebraic()?;
    Ok(lhs == rhs)
}

/// Window dump of a series, for the JSON interface.
pub fn window_dump(f: &TorusSeries, r: i64, n: i64) -> Result<SeriesWindow> {
    f.coeffs_on(&Region::cube(f.rank(), r), n)
}

/// All lattice points with ||h||_inf <= r.
pub fn window_points(d: usize, r: i64) -> Vec<Point> {
    box_points(d, r)
}

impl fmt::Debug for TorusSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TorusSeries({}, {:?})", self.label(), self.kind())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn theta_d1() -> TorusSeries {
        let p = QuantParam::trivial(1);
        let body = LatticeBody::new(
            vec![0],
            vec![vec![1]],
            vec![None],
            vec![None],
            Arc::new(|p: &[i64], _n: i64| Ok(ScalarSeries::u_pow(2 * p[0] * p[0]))),
            Some(Minorant::diagonal(&[2])),
            "theta",
        )
        .unwrap();
        TorusSeries::lattice(&p, body).unwrap()
    }

    #[test]
    fn theta_window_and_kind() {
        let t = theta_d1();
        assert_eq!(t.kind(), SeriesKind::Proper);
        let w = t.coeffs_on(&Region::cube(1, 3), 20).unwrap();
        assert_eq!(w.get(&[2]).unwrap(), &ScalarSeries::u_pow(8).truncate(20));
        assert_eq!(w.get(&[3]).unwrap(), &ScalarSeries::u_pow(18).truncate(20));
        let w = t.coeffs_on(&Region::cube(1, 4), 20).unwrap();
        assert_eq!(w.get(&[4]).unwrap(), &ScalarSeries::zero_to(20));
    }

    #[test]
    fn shift_scales_terms() {
        let t = theta_d1();
        let x = TorusPoint::new(vec![UnitMonomial::q(1)]);
        let s = t.shift_pullback(&x).unwrap();
        for n in -3..=3 {
            assert_eq!(s.coeff(&[n], 60).unwrap(), ScalarSeries::u_pow(2 * n * n + 2 * n).truncate(60));
        }
        let id = t.shift_pullback(&TorusPoint::identity(1)).unwrap();
        assert_eq!(id.coeff(&[2], 30).unwrap(), t.coeff(&[2], 30).unwrap());
    }

    #[test]
    fn theta_square_constant_term() {
        let t = theta_d1();
        let w = t.mul(&t).unwrap().coeffs_on(&Region::cube(1, 0), 16).unwrap();
        assert_eq!(w.get(&[0]).unwrap(), &ScalarSeries::from_int_terms(&[(0, 1), (4, 2), (16, 2)], 16));
    }

    #[test]
    fn tq_commutation() {
        let p = QuantParam::tq();
        let u = TorusSeries::exponent(&p, &[1, 0]);
        let v = TorusSeries::exponent(&p, &[0, 1]);
        let uv = u.mul(&v).unwrap().expand_algebraic().unwrap();
        let vu = v.mul(&u).unwrap().expand_algebraic().unwrap();
        assert_eq!(uv[&vec![1, 1]], vu[&vec![1, 1]].scale(&UnitMonomial::q(2)));
    }

    #[test]
    fn conjugation_examples() {
        let p = QuantParam::tq();
        let f = TorusSeries::exponent(&p, &[0, 1]);
        assert!(conjugation_check(&p, &[1, 0], &f).unwrap());
        let lhs = TorusSeries::word(vec![
            TorusSeries::exponent(&p, &[1, 0]),
            f.clone(),
            TorusSeries::monomial(&p, UnitMonomial::one(), &[-1, 0]),
        ])
        .unwrap()
        .expand_algebraic()
        .unwrap();
        assert_eq!(lhs[&vec![0, 1]], ScalarSeries::u_pow(4));
    }
}
