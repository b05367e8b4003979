use proptest::prelude::*;

use qtheta::corpus::equation::Term;
use qtheta::corpus::named::{e_q_by_product, e_q_by_recurrence, REGISTRY};
use qtheta::corpus::registry::yang_baxter_param;
use qtheta::corpus::{builtin_series, verify_equation, verify_named_at, EquationSpec, Factor, MonoArg, Mode, SeriesRef};
use qtheta::qtorus::{QuantParam, Region};
use qtheta::scalar_ring::UnitMonomial;

fn param_for(name: &str) -> QuantParam {
    if name == "r_fv" {
        yang_baxter_param()
    } else {
        QuantParam::tq()
    }
}

#[test]
fn builtins_are_reproducible() {
    for name in REGISTRY {
        let p = param_for(name);
        let a = builtin_series(name, &p).unwrap();
        let b = builtin_series(name, &p).unwrap();
        let region = Region::cube(a.series.rank(), 2);
        let (wa, wb) = (a.series.coeffs_on(&region, 16).unwrap(), b.series.coeffs_on(&region, 16).unwrap());
        assert_eq!(wa.cells, wb.cells, "{name}");
        assert!(wa.nonzero().count() > 0, "{name} is zero on the window");
    }
}

#[test]
fn e_q_two_constructions() {
    let (prod, rec) = (e_q_by_product(6, 60), e_q_by_recurrence(6, 60).unwrap());
    assert_eq!(prod, rec);
}

#[test]
fn report_is_deterministic() {
    let a = verify_named_at("E024", 2, 8, false).unwrap().to_json();
    let b = verify_named_at("E024", 2, 8, false).unwrap().to_json();
    assert_eq!(a, b);
    assert!(!a.contains("first_mismatch"));
}

#[test]
fn wrong_identity_is_rejected() {
    // theta(q^2 t) = theta(t) is missing the factor q t
    let p = QuantParam::trivial(1);
    let th = |c: UnitMonomial| Factor::Named(SeriesRef::ThetaJacobi { arg: MonoArg { c, h: vec![1] } });
    let spec = EquationSpec {
        label: "wrong".into(),
        param: p,
        terms: vec![Term::product(1, vec![th(UnitMonomial::q(2))]), Term::product(-1, vec![th(UnitMonomial::one())])],
        window: 4,
        order: 10,
        mode: Mode::ProductIdentity,
    };
    let r = verify_equation(&spec).unwrap();
    assert!(!r.passed());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    // passing at the default budget carries down to every smaller one
    #[test]
    fn smaller_budgets_pass(id in prop::sample::select(vec!["E023", "E024", "E025", "E332", "E016R"]), r in 0i64..=4, n in 0i64..=16) {
        let rep = verify_named_at(id, r, n, false).unwrap();
        prop_assert!(rep.passed(), "{} at ({}, {})", id, r, n);
    }

    #[test]
    fn corruption_is_caught(id in prop::sample::select(vec!["E012", "E023", "E025"]), r in 1i64..=3, n in 4i64..=10) {
        prop_assert!(!verify_named_at(id, r, n, true).unwrap().passed());
    }
}

#[test]
fn lifted_theta_has_hidden_periods() {
    use qtheta::lattice::LatticeMap;
    use qtheta::multiplier::{check_functional_equations, hidden_from_morphism};
    let p = QuantParam::tq();
    // B spanned by h1 - h2 and h1; f fixes h1 and sends h2 to h1 + h2
    let sub = LatticeMap::new(2, 2, vec![vec![1, 1], vec![-1, 0]]).unwrap();
    let f = LatticeMap::new(2, 2, vec![vec![1, 1], vec![0, 1]]).unwrap();
    let th = builtin_series("theta_on_Tq_u", &p).unwrap().series;
    let region = Region::cube(2, 4);
    let l = hidden_from_morphism(&p, &sub, &f, &[UnitMonomial::one(), UnitMonomial::one()]).unwrap();
    assert_eq!(check_functional_equations(&l, &th, &region, 30).unwrap(), None);
    // a character with chi(h2) = q, chi(h1) = 1 takes q^-1 on h1 - h2
    let l = hidden_from_morphism(&p, &sub, &f, &[UnitMonomial::q(-1), UnitMonomial::one()]).unwrap();
    assert!(check_functional_equations(&l, &th, &region, 30).unwrap().is_some());
}
