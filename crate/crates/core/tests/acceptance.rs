//! One PASS/FAIL line per acceptance criterion. Run with `--nocapture` to see them.

mod common;

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;
use qtheta::corpus::{verify_named, Report};
use qtheta::heisenberg::{compose as compose_elem, groupoid_inverse, heis_mul, twist, HeisElement, HeisRaw};
use qtheta::lattice::LatticeMap;
use qtheta::multiplier::{
    boxtimes, compose, hidden_from_morphism, is_ample, jacobi, multiplier_with_sqrt_hint, power, theta_dim_basis,
    Multiplier,
};
use qtheta::qtorus::{QuantParam, Region, TorusPoint, TorusSeries};
use qtheta::scalar_ring::{ScalarSeries, UnitMonomial};
use qtheta::small_heisenberg::{
    act_on_theta, commutant_dim, group_structure, mumford_theta_pullback, GammaEval, SmallHeisElement,
};

type Outcome = Result<String, String>;

struct Line {
    id: &'static str,
    what: &'static str,
    outcome: Outcome,
    elapsed: Duration,
}

/// Criteria the engine shows to be false as stated; each must fail in the
/// documented way, and that is checked instead of a pass.
const KNOWN_FALSE: &[&str] = &["1.e016-printed"];

fn timed(id: &'static str, what: &'static str, f: impl FnOnce() -> Outcome) -> Line {
    let t = Instant::now();
    let outcome = f();
    Line { id, what, outcome, elapsed: t.elapsed() }
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn identity_within(ids: &[&str], budget: Duration) -> Outcome {
    let t = Instant::now();
    let mut cells = 0;
    for id in ids {
        let r: Report = verify_named(id).map_err(|e| format!("{id}: {e}"))?;
        ensure(r.passed(), format!("{id} failed: {:?}", r.first_mismatch))?;
        cells += r.cells_checked;
    }
    let el = t.elapsed();
    ensure(el < budget, format!("took {el:?}, budget {budget:?}"))?;
    Ok(format!("{cells} cells"))
}

fn crit1() -> Vec<Line> {
    vec![
        timed("1.e012", "theta functional equations m=-2..2 @(8,80) < 5 s", || {
            identity_within(&["E012"], Duration::from_secs(5))
        }),
        timed("1.e016-printed", "e_q(q^2 t) - (1+qt) e_q(t) = 0 @(10,40) as printed", || {
            let r = verify_named("E016").map_err(|e| e.to_string())?;
            match &r.first_mismatch {
                None => Ok(format!("{} cells", r.cells_checked)),
                Some(m) => Err(format!("mismatch at cell {:?}, u^{}", m.cell, m.u_exponent)),
            }
        }),
        timed("1.e016", "(1+qt) e_q(q^2 t) = e_q(t) @(10,40) < 5 s", || {
            identity_within(&["E016R"], Duration::from_secs(5))
        }),
        timed("1.e023-e024", "e_q sum rule and pentagon on T_q @(4,16) < 30 s", || {
            identity_within(&["E023", "E024"], Duration::from_secs(30))
        }),
        timed("1.e025", "theta braid relation @(5,25) < 60 s", || identity_within(&["E025"], Duration::from_secs(60))),
        timed("1.e026", "Yang-Baxter for r(z,t) @(3,12) < 120 s", || {
            identity_within(&["E026"], Duration::from_secs(120))
        }),
        timed("1.e332", "lifted theta equations on T_q and cross products @(5,25)", || {
            identity_within(&["E332"], Duration::from_secs(600))
        }),
        timed("1.e313", "Weinstein invariance on |(g,h)| <= 4", || identity_within(&["E313"], Duration::from_secs(600))),
    ]
}

fn crit2() -> Outcome {
    let b = theta_dim_basis(&jacobi()).map_err(|e| e.to_string())?;
    ensure(b.dim == 1, format!("dim {} for L_J", b.dim))?;
    for n in -8..=8i64 {
        let c = b.basis[0].coeff(&[n], 160).map_err(|e| e.to_string())?;
        ensure(c == UnitMonomial::q(n * n).to_series().truncate(160), format!("a_{n} = {c}"))?;
    }
    let l2 = power(&jacobi(), 2).map_err(|e| e.to_string())?;
    let b2 = theta_dim_basis(&l2).map_err(|e| e.to_string())?;
    ensure(b2.dim == 2 && b2.index == 2, format!("dim {} index {} for L_2", b2.dim, b2.index))?;
    basis_matches_system(&l2, &b2.basis, &cube_points(1, 8), 160)?;
    Ok("dim 1 with a_n = q^(n^2); dim 2 = index for L_2, basis matches the assembled system".into())
}

fn rand_ample_1d(rng: &mut ChaCha8Rng, x: &UnitMonomial) -> Option<Multiplier> {
    let p = QuantParam::trivial(1);
    let c = UnitMonomial::int(if rng.gen_bool(0.5) { 1 } else { -1 }, rng.gen_range(-3..=3));
    let k = rng.gen_range(1..=3);
    let e = HeisElement::new(&p, c, TorusPoint::new(vec![x.clone()]), vec![k]).ok()?;
    multiplier_with_sqrt_hint(&p, vec![e], None).ok()
}

fn crit3() -> Outcome {
    ensure(is_ample(&jacobi()), "L_J not ample")?;
    let p = QuantParam::trivial(1);
    let neg = HeisElement::new(&p, UnitMonomial::u(-2), TorusPoint::new(vec![UnitMonomial::u(-4)]), vec![1])
        .map_err(|e| e.to_string())?;
    let neg = multiplier_with_sqrt_hint(&p, vec![neg], None).map_err(|e| e.to_string())?;
    ensure(!is_ample(&neg), "negated Jacobi multiplier reported ample")?;
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut done = 0;
    while done < 20 {
        let xs: Vec<UnitMonomial> = (0..2)
            .map(|_| UnitMonomial::int(if rng.gen_bool(0.5) { 1 } else { -1 }, 2 * rng.gen_range(1..=3)))
            .collect();
        let pair = if done % 2 == 0 {
            (rand_ample_1d(&mut rng, &xs[0]), rand_ample_1d(&mut rng, &xs[0]))
        } else {
            let mk = |rng: &mut ChaCha8Rng| -> Option<Multiplier> {
                boxtimes(&rand_ample_1d(rng, &xs[0])?, &rand_ample_1d(rng, &xs[1])?).ok()
            };
            (mk(&mut rng), mk(&mut rng))
        };
        let (Some(l1), Some(l2)) = pair else { continue };
        if !(is_ample(&l1) && is_ample(&l2)) {
            continue;
        }
        let l = compose(&l2, &l1).map_err(|e| e.to_string())?;
        ensure(is_ample(&l), format!("composite of ample pair #{done} not ample"))?;
        done += 1;
    }
    Ok("L_J ample, negated not, 20 random ample pairs compose to ample".into())
}

fn crit4() -> Outcome {
    let t = Instant::now();
    let params = [
        QuantParam::tq(),
        QuantParam::new(
            vec![vec![0, 1, -2], vec![-1, 0, 3], vec![2, -3, 0]],
            vec![vec![1, 0, 1], vec![0, 0, 1], vec![1, 1, 0]],
        )
        .unwrap(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for p in &params {
        let d = p.rank();
        let one = QuantParam::trivial(d);
        for _ in 0..50 {
            let (a, b, c) = (rand_raw(&mut rng, p), rand_raw(&mut rng, p), rand_raw(&mut rng, p));
            let f = rand_alg(&mut rng, d);
            let ab = heis_mul(&a, &b).map_err(|e| e.to_string())?;
            ensure(heis_mul(&ab, &c).unwrap() == heis_mul(&a, &heis_mul(&b, &c).unwrap()).unwrap(), "associativity")?;
            ensure(heis_mul(&a, &a.inverse()).unwrap() == HeisRaw::identity(p), "inverse")?;
            ensure(alg_act(p, &ab, &f) == alg_act(p, &a, &alg_act(p, &b, &f)), "action of a product")?;
            ensure(from_series(&a.act(&to_series(p, &f)).unwrap()) == alg_act(p, &a, &f), "engine action")?;
            let k = HeisRaw::kernel_element(p, &rand_vec(&mut rng, d, 3));
            ensure(alg_act(p, &k, &f) == f, "kernel element acts nontrivially")?;

            let g = rand_elem(&mut rng, &one);
            let h = rand_vec(&mut rng, d, 3);
            let lhs = from_series(&twist(&one, p, &g).unwrap().act(&TorusSeries::exponent(p, &h)).unwrap());
            ensure(lhs == from_series(&g.act(&TorusSeries::exponent(&one, &h)).unwrap()), "twist intertwining")?;

            // (1.11) on a composable pair, associativity on a triple
            let b = rand_elem(&mut rng, p);
            let a = elem_ending_at(&mut rng, p, &b.x_l);
            let (phi, psi) = (rand_alg(&mut rng, d), rand_alg(&mut rng, d));
            let ab = compose_elem(&a, &b).map_err(|e| e.to_string())?;
            let lhs = alg_mul(p, &alg_act(p, &b.left(), &phi), &alg_act(p, &a.left(), &psi));
            ensure(alg_act(p, &ab.left(), &alg_mul(p, &phi, &psi)) == lhs, "(1.11)")?;
            let z = elem_ending_at(&mut rng, p, &a.x_l);
            ensure(
                compose_elem(&compose_elem(&z, &a).unwrap(), &b).unwrap()
                    == compose_elem(&z, &compose_elem(&a, &b).unwrap()).unwrap(),
                "associativity of composition",
            )?;
            let inv = groupoid_inverse(&a);
            ensure(compose_elem(&inv, &a).unwrap() == HeisElement::unit_at(p, a.x_r()), "left groupoid inverse")?;
            ensure(compose_elem(&a, &inv).unwrap() == HeisElement::unit_at(p, a.x_l.clone()), "right groupoid inverse")?;
        }
    }
    let el = t.elapsed();
    ensure(el < Duration::from_secs(60), format!("took {el:?}"))?;
    Ok("100 random cases over T_q and a signed rank-3 torus".into())
}

/// The single term of a truncated matrix entry.
fn single_term(s: &ScalarSeries) -> Option<UnitMonomial> {
    match s.terms().len() {
        1 => s.terms().iter().next().map(|(e, c)| UnitMonomial::new(c.clone(), *e)),
        _ => None,
    }
}

fn crit5() -> Outcome {
    let l = power(&jacobi(), 2).map_err(|e| e.to_string())?;
    let st = group_structure(&l, 2).map_err(|e| e.to_string())?;
    ensure(st.order() == 2 && st.quotient.invariant_factors == vec![2], "H/h(B) is not Z/2")?;
    ensure(st.kernel_gens.len() == 1 && st.kernel_gens[0].1 == 2, "kernel is not mu_2")?;
    ensure(st.duality_nondegenerate(), "degenerate duality")?;
    let b = theta_dim_basis(&l).map_err(|e| e.to_string())?;
    let kappa = SmallHeisElement { c: UnitMonomial::one(), xi: st.kernel_gens[0].0.clone(), gamma: vec![0] };
    let mk = act_on_theta(&l, &kappa, &b, 40, GammaEval::PeriodPoint).map_err(|e| e.to_string())?;
    let mut diag: Vec<_> = (0..2).map(|i| single_term(&mk[i][i])).collect();
    diag.sort_by_key(|m| m.as_ref().map(|m| !m.is_one()));
    ensure(
        diag == vec![Some(UnitMonomial::one()), Some(UnitMonomial::int(-1, 0))]
            && mk[0][1].terms().is_empty()
            && mk[1][0].terms().is_empty(),
        "kernel generator is not diag(1, -1)",
    )?;
    let g = st.lifts.iter().find(|e| e.gamma != vec![0]).ok_or("no nontrivial lift")?;
    let mg = act_on_theta(&l, g, &b, 40, GammaEval::PeriodPoint).map_err(|e| e.to_string())?;
    ensure(
        mg[0][0].terms().is_empty()
            && mg[1][1].terms().is_empty()
            && single_term(&mg[0][1]).is_some()
            && single_term(&mg[1][0]).is_some(),
        "lift is not antidiagonal with monomial entries",
    )?;
    let cd = commutant_dim(&[mk, mg], 2).map_err(|e| e.to_string())?;
    ensure(cd == 1, format!("commutant dimension {cd}"))?;
    Ok("K = mu_2, quotient Z/2, diag(1,-1) and antidiagonal, scalar commutant".into())
}

fn crit6() -> Outcome {
    let l = jacobi();
    let th = theta_dim_basis(&l).map_err(|e| e.to_string())?.basis[0].clone();
    let rep = mumford_theta_pullback(&l, &th, &th, &Region::cube(2, 4), 80, Some(&QuantParam::tq()))
        .map_err(|e| e.to_string())?;
    ensure(rep.failure.is_none(), format!("untwisted: {:?}", rep.failure))?;
    ensure(rep.twisted_failure == Some(None), format!("twisted: {:?}", rep.twisted_failure))?;
    ensure(rep.tables_identical == Some(true), "twisted and untwisted tables differ")?;
    Ok(format!("{} nonzero cells, tables identical", rep.window.nonzero().count()))
}

fn crit7() -> Outcome {
    let hidden = hidden_from_morphism(
        &QuantParam::tq(),
        &LatticeMap::identity(2),
        &LatticeMap::scalar(2, -1),
        &[UnitMonomial::q(1), UnitMonomial::one()],
    )
    .map_err(|e| e.to_string())?;
    let cases = [
        ("L_J", jacobi(), cube_points(1, 8)),
        ("L_2", power(&jacobi(), 2).unwrap(), cube_points(1, 8)),
        ("T_q hidden", hidden, cube_points(2, 3)),
    ];
    for (name, l, pts) in cases {
        let b = theta_dim_basis(&l).map_err(|e| e.to_string())?;
        basis_matches_system(&l, &b.basis, &pts, 160).map_err(|e| format!("{name}: {e}"))?;
    }
    Ok("recurrence basis spans the nullspace for L_J, L_2 and a T_q hidden-period multiplier".into())
}

#[test]
fn acceptance() {
    let mut lines = crit1();
    lines.push(timed("2", "theta spaces of L_J and L_2", crit2));
    lines.push(timed("3", "ampleness and closure under composition", crit3));
    lines.push(timed("4", "Heisenberg algebra properties < 60 s", crit4));
    lines.push(timed("5", "small Heisenberg group of L_2", crit5));
    lines.push(timed("6", "Mumford pullback @(4,40), twisted and untwisted", crit6));
    lines.push(timed("7", "recurrence basis equals assembled nullspace", crit7));

    let mut unexpected = Vec::new();
    for l in &lines {
        let (tag, detail) = match &l.outcome {
            Ok(d) => ("PASS", d.clone()),
            Err(e) => ("FAIL", e.clone()),
        };
        println!("{tag} [{}] {} ({:.2?}): {detail}", l.id, l.what, l.elapsed);
        let known = KNOWN_FALSE.contains(&l.id);
        if l.outcome.is_ok() == known {
            unexpected.push(l.id);
        }
    }
    // the printed q-exponential relation breaks at t^1 with coefficient u^2
    let e016 = lines.iter().find(|l| l.id == "1.e016-printed").unwrap();
    assert_eq!(e016.outcome, Err("mismatch at cell [1], u^2".to_string()));
    assert!(unexpected.is_empty(), "unexpected outcomes: {unexpected:?}");
}
