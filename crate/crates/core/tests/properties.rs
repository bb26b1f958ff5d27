//! Property tests for the algebraic invariants: canonical forms, field
//! axioms, the derivation laws, sigma-homomorphism, Lie-bracket identities,
//! numeric consistency of the derivation, and parser round-trips.

use proptest::prelude::*;
use seircheck_core::dynsys::{jacobian, lie_bracket, VectorField};
use seircheck_core::parse::{lower_expr, pretty_print};
use seircheck_core::poly::{Monomial, Poly};
use seircheck_core::rat::Rat;
use seircheck_core::ratfunc::RatFunc;
use seircheck_core::symbol::Symbol;
use seircheck_core::tower::{ExtensionKind, NumericEval, SigmaSpec, Tower, TowerElem};
use std::collections::BTreeMap;

fn rat_strategy() -> impl Strategy<Value = Rat> {
    (-6i64..=6, 1i64..=4).prop_map(|(n, d)| Rat::new(n, d))
}

/// Sparse polynomials in up to `nvars` variables, small degrees.
fn poly_strategy(vars: &'static [&'static str], max_deg: u32) -> impl Strategy<Value = Poly> {
    let nvars = vars.len();
    prop::collection::vec((prop::collection::vec(0..=max_deg, nvars), rat_strategy()), 0..5)
        .prop_map(move |terms| {
            let syms: Vec<Symbol> = vars.iter().map(|v| Symbol::new(v)).collect();
            let mut map = BTreeMap::new();
            for (exps, coeff) in terms {
                let m = Monomial(exps);
                let entry = map.entry(m).or_insert_with(Rat::zero);
                *entry = &*entry + &coeff;
            }
            map.retain(|_, c: &mut Rat| !c.is_zero());
            Poly::from_terms(syms, map)
        })
}

fn nonzero_poly(vars: &'static [&'static str], max_deg: u32) -> impl Strategy<Value = Poly> {
    poly_strategy(vars, max_deg).prop_filter("nonzero", |p| !p.is_zero())
}

fn ratfunc_strategy() -> impl Strategy<Value = RatFunc> {
    (poly_strategy(&["x", "y"], 3), nonzero_poly(&["x", "y"], 2))
        .prop_map(|(n, d)| RatFunc::new(n, d).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn canonical_form_ignores_common_factors(
        p in poly_strategy(&["x", "y"], 3),
        q in nonzero_poly(&["x", "y"], 2),
        r in nonzero_poly(&["x", "y"], 2),
    ) {
        let plain = RatFunc::new(p.clone(), q.clone()).unwrap();
        let scaled = RatFunc::new(&p * &r, &q * &r).unwrap();
        prop_assert_eq!(plain, scaled);
    }

    #[test]
    fn field_axioms(a in ratfunc_strategy(), b in ratfunc_strategy(), c in ratfunc_strategy()) {
        // associativity and distributivity
        prop_assert_eq!(&(&a + &b) + &c, &a + &(&b + &c));
        prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
        prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
        // inverses
        prop_assert!((&a + &(-&a)).is_zero());
        if !a.is_zero() {
            prop_assert!((&a * &a.recip().unwrap()).is_one());
        }
    }

    #[test]
    fn divrem_recombines(
        p in poly_strategy(&["x", "y"], 4),
        d in nonzero_poly(&["x", "y"], 2),
    ) {
        let (q, r) = p.divrem(&d);
        prop_assert_eq!(&(&q * &d) + &r, p);
        if !r.is_zero() {
            let (lt_d, _) = d.leading();
            // No remainder term is divisible by the leading term of d.
            let (unified_r, unified_d) = Poly::unify(&r, &d);
            let _ = unified_d;
            for (m, _) in unified_r.terms() {
                prop_assert!(!lt_d.divides(m) || unified_r.vars() != d.vars());
            }
        }
    }

    #[test]
    fn gcd_divides_both(
        p in nonzero_poly(&["x", "y"], 3),
        q in nonzero_poly(&["x", "y"], 3),
    ) {
        let g = seircheck_core::poly_gcd(&p, &q);
        prop_assert!(!g.is_zero());
        prop_assert!(p.divrem(&g).1.is_zero());
        prop_assert!(q.divrem(&g).1.is_zero());
        prop_assert!(g.leading_coeff().is_one());
    }
}

fn test_tower() -> Tower {
    let t0 = Tower::base_field("t", &["a", "b", "c"]);
    let ea_arg = -&(&t0.param("a") * &t0.base_elem());
    let tw = t0.extend("ea", ExtensionKind::Exponential(ea_arg)).unwrap();
    let eb_arg = -&(&tw.param("b") * &tw.base_elem());
    tw.extend("eb", ExtensionKind::Exponential(eb_arg)).unwrap()
}

/// Polynomial elements in (t, ea, eb) with rational coefficients.
fn elem_strategy(tower: Tower) -> impl Strategy<Value = TowerElem> {
    poly_strategy(&["t", "ea", "eb"], 2)
        .prop_map(move |p| tower.elem(RatFunc::from_poly(p)).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn derivation_satisfies_leibniz(
        (e, f) in (elem_strategy(test_tower()), elem_strategy(test_tower())),
    ) {
        let lhs = (&e * &f).derive();
        let rhs = &(&e.derive() * &f) + &(&e * &f.derive());
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn derivation_is_linear(
        (e, f) in (elem_strategy(test_tower()), elem_strategy(test_tower())),
        alpha in rat_strategy(),
        beta in rat_strategy(),
    ) {
        let combo = &e.scale(&alpha) + &f.scale(&beta);
        let lhs = combo.derive();
        let rhs = &e.derive().scale(&alpha) + &f.derive().scale(&beta);
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn sigma_is_a_differential_homomorphism(
        (e, f) in (elem_strategy(test_tower()), elem_strategy(test_tower())),
    ) {
        let tower = test_tower();
        let image = &tower.param("c") * &tower.gen("eb").unwrap();
        let sigma = SigmaSpec::new(&tower, vec![("eb", image)]).unwrap();
        let e = e.promote(&tower).unwrap();
        let f = f.promote(&tower).unwrap();
        // multiplicative
        let lhs = sigma.apply(&(&e * &f)).unwrap();
        let rhs = &sigma.apply(&e).unwrap() * &sigma.apply(&f).unwrap();
        prop_assert_eq!(lhs, rhs);
        // commutes with the derivation
        let lhs = sigma.apply(&e.derive()).unwrap();
        let rhs = sigma.apply(&e).unwrap().derive();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn numeric_derivative_matches_central_difference(
        e in elem_strategy(test_tower()),
        t_mil in 300u32..1700,
    ) {
        let tower = test_tower();
        let prec = 1e-9f64;
        let mut values = BTreeMap::new();
        values.insert(Symbol::new("a"), 1.0);
        values.insert(Symbol::new("b"), 0.5);
        values.insert(Symbol::new("c"), 1.0);
        let ev = NumericEval::new(&tower, values, prec).unwrap();
        let e = e.promote(&tower).unwrap();
        let t0 = t_mil as f64 / 1000.0;
        let h = 1e-5;
        let plus = ev.eval(&e, t0 + h).unwrap();
        let minus = ev.eval(&e, t0 - h).unwrap();
        let central = (plus - minus) / (2.0 * h);
        let exact = ev.eval(&e.derive(), t0).unwrap();
        let tol = (1e-6f64).max(1e3 * prec);
        prop_assert!(
            (central - exact).abs() <= tol * exact.abs().max(1.0),
            "central {} vs exact {}", central, exact
        );
    }
}

/// Polynomial vector fields over (x, y, z), degree <= 2.
fn field_strategy() -> impl Strategy<Value = VectorField> {
    prop::collection::vec(poly_strategy(&["x", "y", "z"], 2), 3).prop_map(|comps| {
        let states = vec![Symbol::new("x"), Symbol::new("y"), Symbol::new("z")];
        VectorField::new(states, comps.into_iter().map(RatFunc::from_poly).collect()).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn bracket_is_antisymmetric(f in field_strategy(), g in field_strategy()) {
        let fg = lie_bracket(&f, &g).unwrap();
        let gf = lie_bracket(&g, &f).unwrap();
        for (a, b) in fg.comps().iter().zip(gf.comps()) {
            prop_assert_eq!(a, &(-b));
        }
    }

    #[test]
    fn bracket_is_bilinear_over_constants(
        f in field_strategy(),
        g in field_strategy(),
        h in field_strategy(),
        alpha in rat_strategy(),
    ) {
        let alpha_rf = RatFunc::from_rat(alpha);
        let scaled_plus: Vec<RatFunc> = f
            .comps()
            .iter()
            .zip(g.comps())
            .map(|(a, b)| &(&alpha_rf * a) + b)
            .collect();
        let combo = VectorField::new(f.states().to_vec(), scaled_plus).unwrap();
        let lhs = lie_bracket(&combo, &h).unwrap();
        let fh = lie_bracket(&f, &h).unwrap();
        let gh = lie_bracket(&g, &h).unwrap();
        for i in 0..3 {
            let rhs = &(&alpha_rf * &fh.comps()[i]) + &gh.comps()[i];
            prop_assert_eq!(&lhs.comps()[i], &rhs);
        }
    }

    #[test]
    fn jacobi_identity(f in field_strategy(), g in field_strategy(), h in field_strategy()) {
        let a = lie_bracket(&f, &lie_bracket(&g, &h).unwrap()).unwrap();
        let b = lie_bracket(&g, &lie_bracket(&h, &f).unwrap()).unwrap();
        let c = lie_bracket(&h, &lie_bracket(&f, &g).unwrap()).unwrap();
        for i in 0..3 {
            let total = &(&a.comps()[i] + &b.comps()[i]) + &c.comps()[i];
            prop_assert!(total.is_zero(), "component {} is {:?}", i, total);
        }
    }

    #[test]
    fn jacobian_of_constant_field_is_zero(c in rat_strategy()) {
        let states = vec![Symbol::new("x"), Symbol::new("y"), Symbol::new("z")];
        let comps = vec![RatFunc::from_rat(c); 3];
        let f = VectorField::new(states, comps).unwrap();
        prop_assert!(jacobian(&f).iter().flatten().all(|e| e.is_zero()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn pretty_print_parses_back_to_the_same_element(e in elem_strategy(test_tower())) {
        let tower = test_tower();
        let e = e.promote(&tower).unwrap();
        let printed = pretty_print(&e);
        let (back, _) = lower_expr(&printed, &tower, false).unwrap();
        prop_assert_eq!(back, e);
    }

    #[test]
    fn integer_exponential_multiples_lower_to_powers(k in 1i64..=4) {
        let tower = test_tower();
        let text = format!("exp(-{k}*a*t)");
        let (lowered, _) = lower_expr(&text, &tower, false).unwrap();
        let expect = tower.gen("ea").unwrap().pow(k);
        prop_assert_eq!(&lowered, &expect);
        // Oracle: both sides have equal derivatives too.
        prop_assert_eq!(lowered.derive(), expect.derive());
    }
}
