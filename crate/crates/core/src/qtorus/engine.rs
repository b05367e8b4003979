//! Truncated products f_1 ... f_k of algebraic and proper series.
//!
//! Every term of the expansion is indexed by one parameter vector per
//! factor. Its valuation is at least the sum of the factor minorants plus the
//! u-exponent of the alpha cocycle, a quadratic function of the parameters.
//! Parameters bounded by the window are enumerated directly, the rest by a
//! positive definite quadratic bound.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use super::param::QuantParam;
use super::quad::{Enumerator, Minorant};
use super::series::{Body, LatticeBody, Point, Region, SeriesWindow, TorusSeries};
use crate::error::{Error, Result};
use crate::lattice::Mat;
use crate::par;
use crate::scalar_ring::{ScalarSeries, UnitMonomial};

/// Cap on directly enumerated parameter assignments.
pub const MAX_ASSIGNMENTS: usize = 5_000_000;

enum Flat {
    Finite(Vec<(Point, ScalarSeries, i64)>),
    Lattice(Arc<LatticeBody>, Minorant),
}

fn flatten(fs: &[TorusSeries], out: &mut Vec<Flat>) -> Result<()> {
    for f in fs {
        match &f.body {
            Body::Word(inner) => flatten(inner, out)?,
            Body::Finite(m) => {
                let terms = m
                    .iter()
                    .filter(|(_, s)| !s.is_exact_zero())
                    .map(|(h, s)| {
                        let v = s.valuation().unwrap_or_else(|| s.order().saturating_add(1));
                        (h.clone(), s.clone(), v)
                    })
                    .collect();
                out.push(Flat::Finite(terms));
            }
            Body::Lattice(l) => {
                let m = l.minorant.clone().ok_or_else(|| {
                    Error::NotMultipliable(format!("{} carries no valuation certificate", l.label))
                })?;
                out.push(Flat::Lattice(l.clone(), m));
            }
            _ => {
                return Err(Error::NotMultipliable(format!("{} is window-only", f.label())));
            }
        }
    }
    Ok(())
}

#[derive(Clone, Copy)]
enum Slot {
    Var(usize),
    Finite(usize),
}

struct Setup {
    d: usize,
    flats: Vec<Flat>,
    /// first variable index of each factor (lattice factors only)
    var_start: Vec<usize>,
    /// (factor, column) of each variable
    vars: Vec<(usize, usize)>,
    lo: Vec<Option<i64>>,
    hi: Vec<Option<i64>>,
    inner: Vec<usize>,
    /// position of a variable in the inner vector
    inner_pos: Vec<Option<usize>>,
}

fn div_floor(a: i128, b: i128) -> i128 {
    let q = a / b;
    if (a % b != 0) && ((a < 0) != (b < 0)) {
        q - 1
    } else {
        q
    }
}

fn div_ceil(a: i128, b: i128) -> i128 {
    -div_floor(-a, b)
}

impl Setup {
    fn coef(&self, c: usize, v: usize) -> i64 {
        let (f, j) = self.vars[v];
        match &self.flats[f] {
            Flat::Lattice(l, _) => l.map[c][j],
            _ => 0,
        }
    }

    fn const_coord(&self, c: usize) -> i64 {
        self.flats
            .iter()
            .map(|f| match f {
                Flat::Lattice(l, _) => l.offset[c],
                _ => 0,
            })
            .sum()
    }

    fn finite_range(terms: &[(Point, ScalarSeries, i64)], c: usize) -> (i64, i64) {
        let lo = terms.iter().map(|t| t.0[c]).min().unwrap_or(0);
        let hi = terms.iter().map(|t| t.0[c]).max().unwrap_or(0);
        (lo, hi)
    }

    /// Tightens variable bounds from the window; false if infeasible.
    fn propagate(&mut self, region: &Region) -> bool {
        let nv = self.vars.len();
        for _round in 0..(8 * nv + 8) {
            let mut changed = false;
            for c in 0..self.d {
                let (blo, bhi) = (region.lo[c] as i128, region.hi[c] as i128);
                let mut base_lo = self.const_coord(c) as i128;
                let mut base_hi = base_lo;
                for f in &self.flats {
                    if let Flat::Finite(t) = f {
                        let (a, b) = Self::finite_range(t, c);
                        base_lo += a as i128;
                        base_hi += b as i128;
                    }
                }
                // contributions a*z_v
                let contrib: Vec<(usize, i128, Option<i128>, Option<i128>)> = (0..nv)
                    .filter_map(|v| {
                        let a = self.coef(c, v) as i128;
                        if a == 0 {
                            return None;
                        }
                        let (l, h) = (self.lo[v].map(|x| x as i128), self.hi[v].map(|x| x as i128));
                        let (mn, mx) = if a > 0 {
                            (l.map(|x| a * x), h.map(|x| a * x))
                        } else {
                            (h.map(|x| a * x), l.map(|x| a * x))
                        };
                        Some((v, a, mn, mx))
                    })
                    .collect();
                let inf_lo = contrib.iter().filter(|t| t.2.is_none()).count();
                let inf_hi = contrib.iter().filter(|t| t.3.is_none()).count();
                let sum_lo: i128 = base_lo + contrib.iter().filter_map(|t| t.2).sum::<i128>();
                let sum_hi: i128 = base_hi + contrib.iter().filter_map(|t| t.3).sum::<i128>();
                if inf_lo == 0 && sum_lo > bhi || inf_hi == 0 && sum_hi < blo {
                    return false;
                }
                for &(v, a, mn, mx) in &contrib {
                    // rest_min = sum_lo - own min, finite only if all others finite
                    let rest_min = match mn {
                        Some(x) if inf_lo == 0 => Some(sum_lo - x),
                        None if inf_lo == 1 => Some(sum_lo),
                        _ => None,
                    };
                    let rest_max = match mx {
                        Some(x) if inf_hi == 0 => Some(sum_hi - x),
                        None if inf_hi == 1 => Some(sum_hi),
                        _ => None,
                    };
                    // blo - rest_max <= a z <= bhi - rest_min
                    let (mut new_lo, mut new_hi) = (None, None);
                    if let Some(rm) = rest_min {
                        let t = bhi - rm;
                        if a > 0 {
                            new_hi = Some(div_floor(t, a));
                        } else {
                            new_lo = Some(div_ceil(t, a));
                        }
                    }
                    if let Some(rx) = rest_max {
                        let t = blo - rx;
                        if a > 0 {
                            new_lo = Some(div_ceil(t, a));
                        } else {
                            new_hi = Some(div_floor(t, a));
                        }
                    }
                    if let Some(x) = new_lo {
                        let x = x.clamp(i64::MIN as i128 / 4, i64::MAX as i128 / 4) as i64;
                        if self.lo[v].is_none_or(|o| x > o) {
                            self.lo[v] = Some(x);
                            changed = true;
                        }
                    }
                    if let Some(x) = new_hi {
                        let x = x.clamp(i64::MIN as i128 / 4, i64::MAX as i128 / 4) as i64;
                        if self.hi[v].is_none_or(|o| x < o) {
                            self.hi[v] = Some(x);
                            changed = true;
                        }
                    }
                    if let (Some(l), Some(h)) = (self.lo[v], self.hi[v]) {
                        if l > h {
                            return false;
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }
        true
    }
}

struct Term {
    cell: Point,
    picks: Vec<Vec<i64>>,
    cross: i64,
    negative: bool,
    fint: i64,
}

/// Coefficients of the product of `fs` on `region` (or on every cell that
/// can carry a term of valuation <= n when `region` is `None`).
pub fn word_window(param: &QuantParam, fs: &[TorusSeries], region: Option<&Region>, n: i64) -> Result<SeriesWindow> {
    let d = param.rank();
    let out_region = region.cloned().unwrap_or_else(|| Region::from_points(d, []));
    let empty = |region: Option<&Region>| -> SeriesWindow {
        let cells = match region {
            Some(r) => r.points().into_iter().map(|h| (h, ScalarSeries::zero_to(n))).collect(),
            None => BTreeMap::new(),
        };
        SeriesWindow { region: out_region.clone(), order: n, cells }
    };
    if region.is_some_and(|r| r.is_empty()) {
        return Ok(empty(region));
    }
    let mut flats = vec![];
    flatten(fs, &mut flats)?;
    if flats.iter().any(|f| matches!(f, Flat::Finite(t) if t.is_empty())) {
        return Ok(empty(region));
    }

    let mut var_start = vec![];
    let mut vars = vec![];
    let mut lo = vec![];
    let mut hi = vec![];
    for (i, f) in flats.iter().enumerate() {
        var_start.push(vars.len());
        if let Flat::Lattice(l, _) = f {
            for j in 0..l.params() {
                vars.push((i, j));
                lo.push(l.lower[j]);
                hi.push(l.upper[j]);
            }
        }
    }
    let mut st = Setup { d, flats, var_start, vars, lo, hi, inner: vec![], inner_pos: vec![] };
    if let Some(r) = region {
        if !st.propagate(r) {
            return Ok(empty(region));
        }
    }
    let nv = st.vars.len();
    st.inner = (0..nv).filter(|&v| st.lo[v].is_none() || st.hi[v].is_none()).collect();
    st.inner_pos = vec![None; nv];
    for (k, &v) in st.inner.iter().enumerate() {
        st.inner_pos[v] = Some(k);
    }
    let ni = st.inner.len();

    // inner column matrices M_a (d x ni) per factor
    let mut m_inner: Vec<Mat> = vec![vec![vec![0; ni]; d]; st.flats.len()];
    for (k, &v) in st.inner.iter().enumerate() {
        let (f, j) = st.vars[v];
        if let Flat::Lattice(l, _) = &st.flats[f] {
            for c in 0..d {
                m_inner[f][c][k] = l.map[c][j];
            }
        }
    }
    let a = param.a();
    // P = sum of minorant blocks + sym(M_a^T A M_b)
    let mut p = vec![vec![0i64; ni]; ni];
    for (k1, &v1) in st.inner.iter().enumerate() {
        for (k2, &v2) in st.inner.iter().enumerate() {
            let (f1, j1) = st.vars[v1];
            let (f2, j2) = st.vars[v2];
            if f1 == f2 {
                if let Flat::Lattice(_, m) = &st.flats[f1] {
                    p[k1][k2] += m.q2[j1][j2];
                }
            }
        }
    }
    let nf = st.flats.len();
    for fa in 0..nf {
        for fb in fa + 1..nf {
            // X = M_a^T A M_b (ni x ni)
            for k1 in 0..ni {
                for k2 in 0..ni {
                    let mut x = 0i64;
                    for c1 in 0..d {
                        let ma = m_inner[fa][c1][k1];
                        if ma == 0 {
                            continue;
                        }
                        for c2 in 0..d {
                            x += ma * a[c1][c2] * m_inner[fb][c2][k2];
                        }
                    }
                    p[k1][k2] += x;
                    p[k2][k1] += x;
                }
            }
        }
    }
    let enumerator = Enumerator::new(&p)?;

    // outer slots and window pruning data
    let mut slots = vec![];
    for (i, f) in st.flats.iter().enumerate() {
        match f {
            Flat::Finite(_) => slots.push(Slot::Finite(i)),
            Flat::Lattice(l, _) => {
                for j in 0..l.params() {
                    let v = st.var_start[i] + j;
                    if st.inner_pos[v].is_none() {
                        slots.push(Slot::Var(v));
                    }
                }
            }
        }
    }
    let slot_contrib = |s: Slot, val: i64, c: usize| -> i64 {
        match s {
            Slot::Var(v) => st.coef(c, v) * val,
            Slot::Finite(f) => match &st.flats[f] {
                Flat::Finite(t) => t[val as usize].0[c],
                _ => unreachable!(),
            },
        }
    };
    let slot_domain = |s: Slot| -> (i64, i64) {
        match s {
            Slot::Var(v) => (st.lo[v].unwrap(), st.hi[v].unwrap()),
            Slot::Finite(f) => match &st.flats[f] {
                Flat::Finite(t) => (0, t.len() as i64 - 1),
                _ => unreachable!(),
            },
        }
    };
    let ns = slots.len();
    let mut suf_min = vec![vec![0i64; d]; ns + 1];
    let mut suf_max = vec![vec![0i64; d]; ns + 1];
    for s in (0..ns).rev() {
        let (l, h) = slot_domain(slots[s]);
        for c in 0..d {
            let (mn, mx) = match slots[s] {
                Slot::Var(_) => {
                    let (x, y) = (slot_contrib(slots[s], l, c), slot_contrib(slots[s], h, c));
                    (x.min(y), x.max(y))
                }
                Slot::Finite(f) => match &st.flats[f] {
                    Flat::Finite(t) => Setup::finite_range(t, c),
                    _ => unreachable!(),
                },
            };
            suf_min[s][c] = suf_min[s + 1][c] + mn;
            suf_max[s][c] = suf_max[s + 1][c] + mx;
        }
    }
    let unbounded_coord: Vec<bool> =
        (0..d).map(|c| st.inner.iter().any(|&v| st.coef(c, v) != 0)).collect();
    let base: Vec<i64> = (0..d).map(|c| st.const_coord(c)).collect();

    let mut assignments: Vec<Vec<i64>> = vec![];
    let mut cur = vec![0i64; ns];
    let mut partial = base.clone();
    fn dfs(
        s: usize,
        slots: &[Slot],
        cur: &mut Vec<i64>,
        partial: &mut Vec<i64>,
        ctx: &(
            &dyn Fn(Slot, i64, usize) -> i64,
            &dyn Fn(Slot) -> (i64, i64),
            &[Vec<i64>],
            &[Vec<i64>],
            &[bool],
            Option<&Region>,
        ),
        out: &mut Vec<Vec<i64>>,
    ) -> Result<()> {
        let (contrib, domain, smin, smax, unb, region) = ctx;
        if let Some(r) = region {
            for c in 0..partial.len() {
                if unb[c] {
                    continue;
                }
                if partial[c] + smin[s][c] > r.hi[c] || partial[c] + smax[s][c] < r.lo[c] {
                    return Ok(());
                }
            }
        }
        if s == slots.len() {
            out.push(cur.clone());
            if out.len() > MAX_ASSIGNMENTS {
                return Err(Error::Overflow("outer parameter assignments"));
            }
            return Ok(());
        }
        let (l, h) = domain(slots[s]);
        for v in l..=h {
            for c in 0..partial.len() {
                partial[c] += contrib(slots[s], v, c);
            }
            cur[s] = v;
            let r = dfs(s + 1, slots, cur, partial, ctx, out);
            for c in 0..partial.len() {
                partial[c] -= contrib(slots[s], v, c);
            }
            r?;
        }
        Ok(())
    }
    dfs(
        0,
        &slots,
        &mut cur,
        &mut partial,
        &(&slot_contrib, &slot_domain, &suf_min, &suf_max, &unbounded_coord, region),
        &mut assignments,
    )?;

    // per assignment: enumerate inner points and collect terms
    let st_ref = &st;
    let per: Vec<Vec<Term>> = par::try_map(&assignments, |asg| {
        collect_terms(st_ref, param, &slots, asg, &m_inner, &enumerator, region, n)
    })?;
    let terms: Vec<Term> = per.into_iter().flatten().collect();

    // coefficient memo with the highest order needed per (factor, p)
    let mut need: HashMap<(usize, Vec<i64>), (i64, i64)> = HashMap::new();
    for t in &terms {
        for (f, pk) in t.picks.iter().enumerate() {
            if let Flat::Lattice(_, m) = &st.flats[f] {
                let mu = m.eval_ceil(pk);
                let o = n - t.fint + mu;
                let e = need.entry((f, pk.clone())).or_insert((o, mu));
                e.0 = e.0.max(o);
            }
        }
    }
    let keys: Vec<((usize, Vec<i64>), (i64, i64))> = need.into_iter().collect();
    let vals = par::try_map(&keys, |((f, pk), (o, mu))| match &st.flats[*f] {
        Flat::Lattice(l, _) => Ok(l.coeff_p(pk, *o)?.with_zero_through(mu - 1)),
        _ => unreachable!(),
    })?;
    let memo: HashMap<(usize, Vec<i64>), ScalarSeries> =
        keys.into_iter().map(|(k, _)| k).zip(vals).collect();

    let mut by_cell: BTreeMap<Point, Vec<usize>> = BTreeMap::new();
    for (i, t) in terms.iter().enumerate() {
        by_cell.entry(t.cell.clone()).or_default().push(i);
    }
    let cell_list: Vec<(Point, Vec<usize>)> = by_cell.into_iter().collect();
    let sums = par::try_map(&cell_list, |(cell, idx)| {
        let mut acc = ScalarSeries::zero();
        for &i in idx {
            let t = &terms[i];
            let mus: Vec<i64> = t
                .picks
                .iter()
                .enumerate()
                .map(|(f, pk)| match &st.flats[f] {
                    Flat::Lattice(_, m) => m.eval_ceil(pk),
                    Flat::Finite(tt) => tt[pk[0] as usize].2,
                })
                .collect();
            let mut remaining: i64 = mus.iter().sum();
            let mut prod = ScalarSeries::one();
            for (f, pk) in t.picks.iter().enumerate() {
                let c = match &st.flats[f] {
                    Flat::Lattice(..) => &memo[&(f, pk.clone())],
                    Flat::Finite(tt) => &tt[pk[0] as usize].1,
                };
                prod = prod.mul(c);
                remaining -= mus[f];
                prod = prod.truncate(n - t.cross - remaining);
            }
            let al = UnitMonomial::signed(t.negative, t.cross);
            acc = acc.add(&prod.scale(&al).truncate(n));
        }
        let acc = acc.truncate(n);
        if acc.order() < n {
            return Err(Error::InsufficientPrecision { point: cell.clone(), have: acc.order(), need: n });
        }
        Ok(acc)
    })?;
    let mut cells: BTreeMap<Point, ScalarSeries> = match region {
        Some(r) => r.points().into_iter().map(|h| (h, ScalarSeries::zero_to(n))).collect(),
        None => BTreeMap::new(),
    };
    for ((cell, _), s) in cell_list.into_iter().zip(sums) {
        cells.insert(cell, s);
    }
    Ok(SeriesWindow { region: out_region, order: n, cells })
}

#[allow(clippy::too_many_arguments)]
fn collect_terms(
    st: &Setup,
    param: &QuantParam,
    slots: &[Slot],
    asg: &[i64],
    m_inner: &[Mat],
    enumerator: &Enumerator,
    region: Option<&Region>,
    n: i64,
) -> Result<Vec<Term>> {
    let d = st.d;
    let nf = st.flats.len();
    let ni = st.inner.len();
    let a = param.a();
    // fixed parameter values and finite picks
    let mut pvals: Vec<Vec<i64>> = st
        .flats
        .iter()
        .map(|f| match f {
            Flat::Lattice(l, _) => vec![0; l.params()],
            Flat::Finite(_) => vec![0],
        })
        .collect();
    for (s, v) in slots.iter().zip(asg) {
        match *s {
            Slot::Var(var) => {
                let (f, j) = st.vars[var];
                pvals[f][j] = *v;
            }
            Slot::Finite(f) => pvals[f][0] = *v,
        }
    }
    // t_a: value of h_a at y = 0
    let t: Vec<Vec<i64>> = (0..nf)
        .map(|f| match &st.flats[f] {
            Flat::Lattice(l, _) => l.point(&pvals[f]),
            Flat::Finite(tt) => tt[pvals[f][0] as usize].0.clone(),
        })
        .collect();
    // doubled valuation bound: y^T P y + l2 . y + c2
    let mut l2 = vec![0i64; ni];
    let mut c2: i64 = 0;
    for f in 0..nf {
        match &st.flats[f] {
            Flat::Finite(tt) => c2 += 2 * tt[pvals[f][0] as usize].2,
            Flat::Lattice(_, m) => {
                let k = m.dim();
                let outer_p: Vec<i64> = (0..k)
                    .map(|j| if st.inner_pos[st.var_start[f] + j].is_some() { 0 } else { pvals[f][j] })
                    .collect();
                c2 += i64::try_from(m.eval2(&outer_p)).map_err(|_| Error::Overflow("valuation bound"))?;
                for j in 0..k {
                    if let Some(pos) = st.inner_pos[st.var_start[f] + j] {
                        let mut s = m.l2[j];
                        for o in 0..k {
                            s += 2 * m.q2[j][o] * outer_p[o];
                        }
                        l2[pos] += s;
                    }
                }
            }
        }
    }
    // cross terms: 2 sum_{a<b} h_a^T A h_b
    let total: Vec<i64> = (0..d).map(|c| t.iter().map(|x| x[c]).sum()).collect();
    let mut before = vec![0i64; d];
    for f in 0..nf {
        let after: Vec<i64> = (0..d).map(|c| total[c] - before[c] - t[f][c]).collect();
        // constant: 2 * before^T A t_f
        for c1 in 0..d {
            for c2_ in 0..d {
                c2 += 2 * before[c1] * a[c1][c2_] * t[f][c2_];
            }
        }
        // linear: 2 (before - after)^T A M_f
        for k in 0..ni {
            let mut s = 0;
            for c1 in 0..d {
                let w = before[c1] - after[c1];
                if w == 0 {
                    continue;
                }
                for c2_ in 0..d {
                    s += w * a[c1][c2_] * m_inner[f][c2_][k];
                }
            }
            l2[k] += 2 * s;
        }
        for c in 0..d {
            before[c] += t[f][c];
        }
    }
    let bound = 2 * n as i128 - c2 as i128;
    let mut out = vec![];
    let mut err = None;
    enumerator.for_each(&l2, bound, |y| {
        if err.is_some() {
            return;
        }
        let mut picks = pvals.clone();
        for (k, &v) in st.inner.iter().enumerate() {
            let (f, j) = st.vars[v];
            picks[f][j] = y[k];
        }
        let hs: Vec<Vec<i64>> = (0..nf)
            .map(|f| {
                let mut h = t[f].clone();
                for c in 0..d {
                    for k in 0..ni {
                        h[c] += m_inner[f][c][k] * y[k];
                    }
                }
                h
            })
            .collect();
        let cell: Vec<i64> = (0..d).map(|c| hs.iter().map(|h| h[c]).sum()).collect();
        if let Some(r) = region {
            if !r.contains(&cell) {
                return;
            }
        }
        let mut cross: i64 = 0;
        let mut neg = false;
        let mut pref = vec![0i64; d];
        for h in &hs {
            cross += param.alpha_uexp(&pref, h);
            neg ^= param.alpha_negative(&pref, h);
            for c in 0..d {
                pref[c] += h[c];
            }
        }
        let mut fint = cross;
        for f in 0..nf {
            fint += match &st.flats[f] {
                Flat::Lattice(_, m) => m.eval_ceil(&picks[f]),
                Flat::Finite(tt) => tt[picks[f][0] as usize].2,
            };
        }
        if fint > n {
            return;
        }
        if out.len() >= super::quad::MAX_POINTS {
            err = Some(Error::Overflow("product terms"));
            return;
        }
        out.push(Term { cell, picks, cross, negative: neg, fint });
    })?;
    if let Some(e) = err {
        return Err(e);
    }
    Ok(out)
}
