use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;

use expofield::efield::{realize_system, EFieldError, SolveOptions};
use expofield::exactalg::{FieldElem, Rat, Symbol};
use expofield::exprlang::{eliminate_inequations, flatten, parse_system, parse_term, Atom, ESystem, ETerm, Rel};
use expofield::gen;

fn leaf() -> impl Strategy<Value = ETerm> {
    prop_oneof![
        (0i64..50).prop_map(ETerm::int),
        (-20i64..20, 2i64..9)
            .prop_filter("non-integer", |(n, d)| n % d != 0)
            .prop_map(|(n, d)| ETerm::Rat(Rat::new(n.into(), d.into()))),
        prop::sample::select(vec!["x", "y", "z", "w1", "_a"]).prop_map(ETerm::var),
    ]
}

fn term() -> impl Strategy<Value = ETerm> {
    leaf().prop_recursive(5, 40, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| ETerm::add(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| ETerm::sub(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| ETerm::mul(a, b)),
            (inner.clone(), 0u32..5).prop_map(|(a, e)| ETerm::pow(a, e)),
            inner.clone().prop_map(ETerm::exp),
            inner.prop_map(|a| ETerm::mul(ETerm::int(-1), a)),
        ]
    })
}

fn system() -> impl Strategy<Value = ESystem> {
    prop::collection::vec((term(), any::<bool>(), term()), 1..4).prop_map(|atoms| ESystem {
        atoms: atoms
            .into_iter()
            .map(|(l, eq, r)| if eq { Atom::eq(l, r) } else { Atom::neq(l, r) })
            .collect(),
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn printing_then_parsing_is_identity(t in term()) {
        let text = t.to_string();
        let back = parse_term(&text).map_err(|e| TestCaseError::fail(format!("{text}: {e:?}")))?;
        prop_assert_eq!(back, t, "{}", text);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn systems_print_and_parse(s in system()) {
        let back = parse_system(&s.to_string()).unwrap();
        prop_assert_eq!(back.atoms.len(), s.atoms.len());
        for (a, b) in back.atoms.iter().zip(&s.atoms) {
            prop_assert_eq!((&a.lhs, a.rel, &a.rhs), (&b.lhs, b.rel, &b.rhs));
        }
    }

    #[test]
    fn inequations_are_eliminated(s in system()) {
        let out = eliminate_inequations(&s);
        prop_assert!(out.atoms.iter().all(|a| a.rel == Rel::Eq));
        prop_assert_eq!(out.atoms.len(), s.atoms.len());
        let before = s.symbols();
        let fresh: BTreeSet<Symbol> = out.symbols().difference(&before).cloned().collect();
        let neqs = s.atoms.iter().filter(|a| a.rel == Rel::Neq).count();
        prop_assert_eq!(fresh.len(), neqs);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Values of the realized unknowns make every flattened polynomial vanish.
    #[test]
    fn flattening_preserves_solutions(seed in any::<u64>()) {
        let mut rng = gen::rng(seed);
        let (f, s) = gen::system(&mut rng);
        let r = match realize_system(&f, &s, SolveOptions::default()) {
            Ok(r) => r,
            Err(EFieldError::RootRequired { .. }) => return Ok(()),
            Err(e) => return Err(TestCaseError::fail(format!("{s}: {e}"))),
        };
        let params: Vec<Symbol> = s.symbols().into_iter().filter(|x| f.transcendentals.contains(x)).collect();
        let fs = flatten(&eliminate_inequations(&s), &params).unwrap();
        let mut point: BTreeMap<Symbol, FieldElem> = BTreeMap::new();
        for (i, x) in fs.xvars.iter().enumerate() {
            point.insert(x.clone(), r.outcome.d[i].clone());
            point.insert(fs.yvars[i].clone(), r.outcome.ed[i].clone());
        }
        for p in &fs.polys {
            let v = FieldElem::from_poly(p.clone()).substitute(&point).unwrap();
            prop_assert!(v.is_zero(), "{} does not vanish", p);
        }
    }
}
