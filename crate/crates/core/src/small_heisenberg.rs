//! The small Heisenberg group G(L) = normalizer of L(B) modulo L(B): its
//! structure K* x (kernel x H/h^-(B)), the duality between the two finite
//! factors, and its action on the theta space.

use crate::error::{Error, Result};
use crate::heisenberg::{HeisElement, TorusMorphism};
use crate::lattice::{quotient_data, smith_normal_form, transpose, Lattice, LatticeMap, QuotientData};
use crate::linalg::{nullspace, specialize, CMat};
use crate::multiplier::{
    boxtimes, check_functional_equations, is_ample, lift_point, pullback, twist_multiplier, LiftChoice, Multiplier,
    ThetaBasis,
};
use crate::par;
use crate::qtorus::{Point, QuantParam, Region, SeriesWindow, TorusPoint, TorusSeries};
use crate::scalar_ring::cyclo::{roots_of_unity_order, root_of_unity_in};
use crate::scalar_ring::{CycloRational, ScalarSeries, UnitMonomial};

/// How the gamma-term of the normalizer equations is read.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum GammaEval {
    /// gamma(x_{l,b}), the value at the period point.
    #[default]
    PeriodPoint,
    /// The printed gamma(b), read as q^{gamma . b} (needs rank B = rank H).
    PrintedLattice,
}

/// A left representative [c; xi, gamma, 0].
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SmallHeisElement {
    pub c: UnitMonomial,
    pub xi: TorusPoint,
    pub gamma: Vec<i64>,
}

impl SmallHeisElement {
    pub fn identity(d: usize) -> Self {
        SmallHeisElement { c: UnitMonomial::one(), xi: TorusPoint::identity(d), gamma: vec![0; d] }
    }

    pub fn to_heis(&self, param: &QuantParam) -> Result<HeisElement> {
        HeisElement::new(param, self.c.clone(), self.xi.clone(), self.gamma.clone())
    }

    pub fn from_heis(e: &HeisElement) -> Self {
        SmallHeisElement { c: e.c_l.clone(), xi: e.x_l.clone(), gamma: e.h_l.clone() }
    }
}

/// Group structure of G(L)/K*.
#[derive(Clone, Debug)]
pub struct SmallHeisStructure {
    pub m: u32,
    /// Generators of the kernel group with their orders.
    pub kernel_gens: Vec<(TorusPoint, u64)>,
    /// All kernel elements; the first is the identity.
    pub kernel: Vec<TorusPoint>,
    pub quotient: QuotientData,
    /// duality[k][g] = log of gamma_g(kappa_k) as a power of zeta_L, L = lcm(2, m).
    pub duality: Vec<Vec<u64>>,
    /// The chosen lift (c = 1) of each coset representative.
    pub lifts: Vec<SmallHeisElement>,
    /// lift(g1) lift(g2) = [c; kappa, 0, 0] lift(g1 + g2) modulo L(B):
    /// cocycle[g1][g2] = (c, index of kappa).
    pub cocycle: Vec<Vec<(UnitMonomial, usize)>>,
}

impl SmallHeisStructure {
    pub fn order(&self) -> u64 {
        self.kernel.len() as u64
    }

    /// Nondegeneracy: only the trivial element pairs trivially with everything, on both sides.
    pub fn duality_nondegenerate(&self) -> bool {
        let rows_ok = self.duality.iter().skip(1).all(|row| row.iter().any(|v| *v != 0));
        let ng = self.quotient.coset_reps.len();
        let cols_ok = (0..ng).filter(|g| !self.quotient.coset_reps[*g].iter().all(|x| *x == 0)).all(|g| {
            self.duality.iter().any(|row| row[g] != 0)
        });
        rows_ok && cols_ok
    }
}

fn check_injective(l: &Multiplier) -> Result<()> {
    let r = l.rank();
    if r == 0 {
        return Ok(());
    }
    let hm = l.h_minus();
    let s = smith_normal_form(hm.matrix())?;
    let rk = s.rank();
    if rk == r {
        return Ok(());
    }
    // kernel of h^-: injective iff the u-exponents of x_l separate it
    let kernel: Vec<Vec<i64>> = (rk..r).map(|j| (0..r).map(|i| s.v[i][j]).collect()).collect();
    let d = l.dim();
    let e: Vec<Vec<i64>> = (0..d)
        .map(|row| {
            kernel
                .iter()
                .map(|k| {
                    let x = l.x_l_at(k);
                    x.values()[row].uexp()
                })
                .collect()
        })
        .collect();
    if smith_normal_form(&e)?.rank() == kernel.len() {
        Ok(())
    } else {
        Err(Error::NonInjectiveImage)
    }
}

fn gamma_term(l: &Multiplier, gamma: &[i64], i: usize, mode: GammaEval) -> Result<UnitMonomial> {
    let im = &l.images[i];
    Ok(match mode {
        GammaEval::PeriodPoint => im.x_l.eval(gamma),
        GammaEval::PrintedLattice => {
            if l.rank() != l.dim() {
                return Err(Error::DimensionMismatch { expected: l.dim(), got: l.rank() });
            }
            UnitMonomial::q(gamma[i])
        }
    })
}

/// alpha^2(h, gamma) as a monomial.
fn alpha_sq(p: &QuantParam, h: &[i64], g: &[i64]) -> UnitMonomial {
    p.alpha(h, g).pow(2)
}

/// The normalizer condition h^-_b(xi) = gamma(x_{l,b}) alpha^2(h^-_b, gamma) on generators.
pub fn normalizer_membership(l: &Multiplier, e: &SmallHeisElement, mode: GammaEval) -> Result<bool> {
    check_injective(l)?;
    let d = l.dim();
    if e.xi.dim() != d || e.gamma.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: e.gamma.len() });
    }
    for (i, im) in l.images.iter().enumerate() {
        let lhs = e.xi.eval(&im.h_l);
        let rhs = gamma_term(l, &e.gamma, i, mode)?.mul(&alpha_sq(&l.param, &im.h_l, &e.gamma));
        if lhs != rhs {
            return Ok(false);
        }
    }
    Ok(true)
}

fn finite_quotient(l: &Multiplier) -> Result<QuotientData> {
    let q = quotient_data(Lattice { rank: l.dim() }, &l.h_minus())?;
    if !q.is_finite() {
        return Err(Error::InfiniteIndex);
    }
    Ok(q)
}

/// Generators and orders of the kernel of T(H,1) -> T(h^-(B),1).
fn kernel_generators(l: &Multiplier, m: u32) -> Result<Vec<(TorusPoint, u64)>> {
    let d = l.dim();
    let r = l.rank();
    if r == 0 || d == 0 {
        return Ok(vec![]);
    }
    // xi in the kernel iff prod_k xi_k^{M[k][i]} = 1; in exponent form M^T (r x d)
    let mt = transpose(l.h_minus().matrix(), r);
    let s = smith_normal_form(&mt)?;
    let diag = s.diagonal();
    let mut gens = Vec::new();
    for (j, dj) in diag.iter().enumerate() {
        let dj = dj.unsigned_abs();
        if dj <= 1 {
            continue;
        }
        let z = root_of_unity_in(dj as u32, 1, m)?;
        let vals = (0..d).map(|k| UnitMonomial::new(z.pow(s.v[k][j]).expect("unit"), 0)).collect();
        gens.push((TorusPoint::new(vals), dj));
    }
    Ok(gens)
}

fn all_kernel_elements(gens: &[(TorusPoint, u64)], d: usize) -> Vec<TorusPoint> {
    let mut out = vec![TorusPoint::identity(d)];
    for (g, ord) in gens {
        let mut next = Vec::with_capacity(out.len() * *ord as usize);
        for k in 0..*ord {
            let p = g.pow(k as i64);
            for e in &out {
                next.push(e.mul(&p));
            }
        }
        out = next;
    }
    out
}

/// All xi solving the normalizer equations for this gamma, with c = 1.
pub fn gamma_lift(l: &Multiplier, gamma: &[i64], m: u32, mode: GammaEval) -> Result<Vec<SmallHeisElement>> {
    check_injective(l)?;
    let q = finite_quotient(l)?;
    let exp = q.exponent();
    if !(roots_of_unity_order(m) as u64).is_multiple_of(exp) {
        return Err(Error::MissingRootsOfUnity { order: exp, m });
    }
    let d = l.dim();
    let targets = (0..l.rank())
        .map(|i| {
            let im = &l.images[i];
            Ok(gamma_term(l, gamma, i, mode)?.mul(&alpha_sq(&l.param, &im.h_l, gamma)))
        })
        .collect::<Result<Vec<_>>>()?;
    let xi0 = lift_point(&l.h_minus(), &TorusPoint::new(targets), m)
        .map_err(|e| Error::Unrepresentable(format!("normalizer equations for gamma {:?}: {}", gamma, e)))?;
    let kernel = all_kernel_elements(&kernel_generators(l, m)?, d);
    Ok(kernel
        .iter()
        .map(|k| SmallHeisElement { c: UnitMonomial::one(), xi: xi0.mul(k), gamma: gamma.to_vec() })
        .collect())
}

/// Class of e modulo L(B): reduces gamma to its coset representative.
fn reduce_mod_image(l: &Multiplier, q: &QuotientData, e: &HeisElement) -> Result<(usize, HeisElement)> {
    let idx = q.projection(&e.h_l).ok_or(Error::InfiniteIndex)?;
    let rep = &q.coset_reps[idx];
    let diff: Vec<i64> = e.h_l.iter().zip(rep).map(|(a, b)| a - b).collect();
    let b = l.h_minus().preimage(&diff)?.ok_or_else(|| Error::NotInImage(diff.clone()))?;
    // e = e' L(b) with e' over the representative
    let reduced = e.mul(&l.image_at(&b).inverse())?;
    Ok((idx, reduced))
}

pub fn group_structure(l: &Multiplier, m: u32) -> Result<SmallHeisStructure> {
    check_injective(l)?;
    let q = finite_quotient(l)?;
    let d = l.dim();
    let exp = q.exponent();
    if !(roots_of_unity_order(m) as u64).is_multiple_of(exp) {
        return Err(Error::MissingRootsOfUnity { order: exp, m });
    }
    let kernel_gens = kernel_generators(l, m)?;
    let kernel = all_kernel_elements(&kernel_gens, d);
    let index = q.index.unwrap_or(0);
    if kernel.len() as u64 != index {
        return Err(Error::Unrepresentable(format!("kernel of order {} for index {}", kernel.len(), index)));
    }
    let duality = kernel
        .iter()
        .map(|k| {
            q.coset_reps
                .iter()
                .map(|g| {
                    k.eval(g)
                        .coeff()
                        .root_of_unity_log(m)
                        .ok_or(Error::MissingRootsOfUnity { order: exp, m })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let lifts = q
        .coset_reps
        .iter()
        .map(|g| Ok(gamma_lift(l, g, m, GammaEval::PeriodPoint)?.remove(0)))
        .collect::<Result<Vec<_>>>()?;
    let heis: Vec<HeisElement> = lifts.iter().map(|e| e.to_heis(&l.param)).collect::<Result<_>>()?;
    let mut cocycle = Vec::new();
    for a in &heis {
        let mut row = Vec::new();
        for b in &heis {
            let (idx, red) = reduce_mod_image(l, &q, &a.mul(b)?)?;
            let delta = red.mul(&heis[idx].inverse())?;
            if delta.h_l.iter().any(|x| *x != 0) {
                return Err(Error::Unrepresentable("lift product leaves the coset".into()));
            }
            let k = kernel
                .iter()
                .position(|k| k == &delta.x_l)
                .ok_or_else(|| Error::Unrepresentable("lift defect outside the kernel".into()))?;
            row.push((delta.c_l, k));
        }
        cocycle.push(row);
    }
    Ok(SmallHeisStructure { m, kernel_gens, kernel, quotient: q, duality, lifts, cocycle })
}

/// The action of e on the basis: column j holds the coefficients of e(theta_j)
/// at the coset representatives.
pub fn act_on_theta(
    l: &Multiplier,
    e: &SmallHeisElement,
    basis: &ThetaBasis,
    n: i64,
    mode: GammaEval,
) -> Result<Vec<Vec<ScalarSeries>>> {
    if !normalizer_membership(l, e, mode)? {
        return Err(Error::NotInNormalizer(format!("{:?}", e)));
    }
    let h = e.to_heis(&l.param)?;
    let cols = par::try_map(&basis.basis, |th| -> Result<Vec<ScalarSeries>> {
        let acted = h.act(th)?;
        basis.coset_reps.iter().map(|rep| acted.coeff(rep, n)).collect()
    })?;
    let k = basis.basis.len();
    Ok((0..k).map(|i| (0..k).map(|j| cols[j][i].clone()).collect()).collect())
}

/// Checks that e(theta_j) = sum_i M_ij theta_i on a window.
pub fn verify_action_matrix(
    l: &Multiplier,
    e: &SmallHeisElement,
    basis: &ThetaBasis,
    mat: &[Vec<ScalarSeries>],
    region: &Region,
    n: i64,
) -> Result<bool> {
    let h = e.to_heis(&l.param)?;
    // negative u-powers in the entries eat into the known order
    let slack = mat
        .iter()
        .flatten()
        .filter_map(|s| s.valuation())
        .map(|v| (-v).max(0))
        .max()
        .unwrap_or(0);
    let windows: Vec<SeriesWindow> =
        basis.basis.iter().map(|b| b.coeffs_on(region, n + slack)).collect::<Result<_>>()?;
    for (j, th) in basis.basis.iter().enumerate() {
        let acted = h.act(th)?.coeffs_on(region, n)?;
        let mut combo: Option<SeriesWindow> = None;
        for (i, w) in windows.iter().enumerate() {
            let Some(mono) = entry_monomial(&mat[i][j]) else { continue };
            let t = w.scale(&mono);
            combo = Some(match combo {
                None => t,
                Some(c) => c.add(&t),
            });
        }
        let combo = combo.unwrap_or_else(|| windows[0].scale(&UnitMonomial::int(0, 0)));
        if acted.first_difference(&combo, n).is_some() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Matrix entries from act_on_theta are single monomials (or zero).
fn entry_monomial(s: &ScalarSeries) -> Option<UnitMonomial> {
    let mut it = s.terms().iter();
    let (e, c) = it.next()?;
    if it.next().is_some() {
        return None;
    }
    Some(UnitMonomial::new(c.clone(), *e))
}

fn entry_value(s: &ScalarSeries, t: &num_rational::BigRational) -> Result<CycloRational> {
    if s.terms().is_empty() {
        return Ok(CycloRational::zero());
    }
    entry_monomial(s)
        .map(|m| specialize(&m, t))
        .ok_or_else(|| Error::Unrepresentable("action matrix entry is not a monomial".into()))
}

/// Dimension of the space of matrices commuting with all given matrices,
/// solved exactly after specializing u to a rational value.
pub fn commutant_dim(mats: &[Vec<Vec<ScalarSeries>>], k: usize) -> Result<usize> {
    let t = num_rational::BigRational::new(3.into(), 7.into());
    let vals: Vec<CMat> = mats
        .iter()
        .map(|m| m.iter().map(|row| row.iter().map(|s| entry_value(s, &t)).collect()).collect::<Result<_>>())
        .collect::<Result<_>>()?;
    // unknowns X_{ab} at index a*k + b; equations (XM - MX)_{ij} = 0
    let mut rows: CMat = Vec::new();
    for m in &vals {
        for i in 0..k {
            for j in 0..k {
                let mut row = vec![CycloRational::zero(); k * k];
                for s in 0..k {
                    row[i * k + s] = row[i * k + s].add(&m[s][j]);
                    row[s * k + j] = row[s * k + j].sub(&m[i][s]);
                }
                rows.push(row);
            }
        }
    }
    if rows.is_empty() {
        return Ok(k * k);
    }
    Ok(nullspace(&rows, k * k).len())
}

/// One line per basis theta with the characters of the kernel generators on it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CharacterLine {
    pub coset_rep: Point,
    /// log of the eigenvalue of each kernel generator, as a power of zeta_L.
    pub character: Vec<u64>,
}

pub fn character_split(l: &Multiplier, basis: &ThetaBasis, m: u32, n: i64) -> Result<Vec<CharacterLine>> {
    if (basis.dim as u64) < basis.index {
        return Err(Error::DimensionDeficit { dim: basis.dim, index: basis.index });
    }
    let st = group_structure(l, m)?;
    let d = l.dim();
    let mut chars = vec![Vec::new(); basis.dim];
    for (g, _) in &st.kernel_gens {
        let e = SmallHeisElement { c: UnitMonomial::one(), xi: g.clone(), gamma: vec![0; d] };
        let mat = act_on_theta(l, &e, basis, n, GammaEval::PeriodPoint)?;
        for (i, row) in mat.iter().enumerate() {
            for (j, x) in row.iter().enumerate() {
                if i != j && !x.terms().is_empty() {
                    return Err(Error::Unrepresentable("kernel action is not diagonal".into()));
                }
            }
            let v = entry_monomial(&row[i]).ok_or_else(|| Error::Unrepresentable("zero diagonal entry".into()))?;
            let log = v.coeff().root_of_unity_log(m).filter(|_| v.uexp() == 0);
            chars[i].push(log.ok_or_else(|| Error::Unrepresentable(format!("eigenvalue {:?}", v)))?);
        }
    }
    Ok(basis
        .coset_reps
        .iter()
        .zip(chars)
        .map(|(r, c)| CharacterLine { coset_rep: r.clone(), character: c })
        .collect())
}

/// Result of pulling th1 (x) th2 back along Mumford's map.
pub struct MumfordReport {
    pub series: TorusSeries,
    pub window: SeriesWindow,
    /// First failure of the functional equations, if any.
    pub failure: Option<String>,
    pub twisted_failure: Option<Option<String>>,
    pub tables_identical: Option<bool>,
}

/// M^*(th1 (x) th2) for a symmetric ample L over alpha = 1, checked against
/// pullback(M, L (x) L). With `twist`, the same data is re-read over `twist`
/// on the target H + H and the source param making M compatible.
pub fn mumford_theta_pullback(
    l: &Multiplier,
    th1: &TorusSeries,
    th2: &TorusSeries,
    region: &Region,
    n: i64,
    twist: Option<&QuantParam>,
) -> Result<MumfordReport> {
    if !l.is_symmetric() {
        return Err(Error::NotSymmetricMultiplier);
    }
    if !is_ample(l) {
        return Err(Error::NotAmple);
    }
    if !l.param.is_trivial() {
        return Err(Error::InvalidParam("classical side must have alpha = 1".into()));
    }
    let d = l.dim();
    let m0 = TorusMorphism::mumford(&l.param)?;
    let src = m0.source.clone();
    let s = th1.boxtimes(th2, &src)?;
    let ll = boxtimes(l, l)?;
    let lp = pullback(&m0, &twist_multiplier(&ll, &src)?, &LiftChoice::Canonical { m: 2 })?;
    let series = crate::heisenberg::morphism_pullback(&m0, &s)?;
    let window = series.coeffs_on(region, n)?;
    let failure = check_functional_equations(&lp, &series, region, n)?;
    let (mut twisted_failure, mut tables_identical) = (None, None);
    if let Some(beta) = twist {
        if beta.rank() != 2 * d {
            return Err(Error::LatticeMismatch(2 * d, beta.rank()));
        }
        let f = m0.f.clone();
        let sigma = pullback_param(beta, &f)?;
        let m1 = crate::heisenberg::morphism_new(f, vec![UnitMonomial::one(); 2 * d], &sigma, beta)?;
        let lt = pullback(&m1, &twist_multiplier(&ll, &sigma)?, &LiftChoice::Canonical { m: 2 })?;
        let st = crate::heisenberg::morphism_pullback(&m1, &s.with_param(&sigma)?)?;
        let wt = st.coeffs_on(region, n)?;
        twisted_failure = Some(check_functional_equations(&lt, &st, region, n)?);
        tables_identical = Some(wt.cells == window.cells);
    }
    Ok(MumfordReport { series, window, failure, twisted_failure, tables_identical })
}

/// The parameter sigma with sigma(x, y) = beta(f x, f y).
pub fn pullback_param(beta: &QuantParam, f: &LatticeMap) -> Result<QuantParam> {
    let m = f.matrix();
    let mt = transpose(m, f.src());
    let a = crate::lattice::mat_mul(&crate::lattice::mat_mul(&mt, beta.a()), m);
    let s = crate::lattice::mat_mul(&crate::lattice::mat_mul(&mt, beta.s()), m);
    QuantParam::new(a, s)
}
