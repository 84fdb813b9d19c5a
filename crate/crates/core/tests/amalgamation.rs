use proptest::prelude::*;
use rand::Rng;

use expofield::amalg::{acf_indep, amalgamate2, complete_system, indep, verify_independent_system, DEFAULT_MAX_N};
use expofield::efield::{e_eval, EEvalResult};
use expofield::exactalg::{FieldElem, Symbol};
use expofield::gen;

fn some(rng: &mut rand_chacha::ChaCha8Rng, syms: &[Symbol], max: usize) -> Vec<FieldElem> {
    (0..rng.gen_range(0..=max)).map(|_| gen::poly(rng, syms, 2, 2, 2)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn independence_axioms(seed in any::<u64>()) {
        let mut rng = gen::rng(seed);
        let f = gen::presentation(&mut rng, "F", "s", 1);
        let extra: Vec<Symbol> = (1..=2).map(|i| Symbol::indexed("w", i)).collect();
        let mut g = f.clone();
        g.transcendentals.extend(extra.iter().cloned());
        let g = gen::extend_randomly(&mut rng, &g, &extra, 1);
        let syms = g.transcendentals.clone();
        let (a, b, c) = (some(&mut rng, &syms, 2), some(&mut rng, &syms, 2), some(&mut rng, &syms, 2));
        let ab = indep(&g, &a, &b, &c);
        prop_assert_eq!(ab, indep(&g, &b, &a, &c));
        prop_assert!(indep(&g, &a, &c, &c));
        let a2: Vec<FieldElem> = a.iter().cloned().chain(some(&mut rng, &syms, 1)).collect();
        prop_assert!(ab || !indep(&g, &a2, &b, &c));
    }

    #[test]
    fn amalgam_square_commutes(seed in any::<u64>()) {
        let (base, left, right) = gen::amalgamation_triple(&mut gen::rng(seed));
        let a = amalgamate2(&base, &left, &right).unwrap();
        prop_assert!(a.check.passed());
        for s in &base.transcendentals {
            prop_assert_eq!(a.g1.get(&left.inclusion[s]), a.g2.get(&right.inclusion[s]));
        }
        let image = |m: &expofield::amalg::SymbolMap| m.values().map(|s| FieldElem::var(s.clone())).collect::<Vec<_>>();
        let base_elems: Vec<FieldElem> = base.transcendentals.iter().map(|s| FieldElem::var(s.clone())).collect();
        prop_assert!(acf_indep(&image(&a.g1), &image(&a.g2), &base_elems, &a.g.transcendentals));
        for (ext, m) in [(&left, &a.g1), (&right, &a.g2)] {
            let rename = |e: &FieldElem| e.rename(&|s| m.get(s).cloned().unwrap_or_else(|| s.clone()));
            for (x, v) in &ext.amb.egraph {
                prop_assert_eq!(e_eval(&a.g, &rename(x)), EEvalResult::Value(rename(v)));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn completion_restricts_to_input(seed in any::<u64>(), n in 3usize..=4) {
        let sys = gen::indep_system(&mut gen::rng(seed), n);
        prop_assert!(verify_independent_system(&sys, DEFAULT_MAX_N).passed());
        let c = complete_system(&sys, DEFAULT_MAX_N).unwrap();
        prop_assert!(c.check.passed());
        prop_assert!(c.system.is_complete());
        for (a, f) in &sys.nodes {
            prop_assert_eq!(c.system.nodes.get(a), Some(f));
        }
        prop_assert!(verify_independent_system(&c.system, DEFAULT_MAX_N).passed());
    }
}
