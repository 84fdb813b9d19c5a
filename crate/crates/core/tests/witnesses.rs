use std::collections::BTreeMap;

use proptest::prelude::*;

use expofield::efield::EFieldPresentation;
use expofield::exactalg::{FieldElem, Rat};
use expofield::treeprops::{all_sigmas, tp2_witness, type_family, verify_finite_witness, z_stabilizer_witness, Candidate, ZMode};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn tp2_witnesses_hold(n in 1usize..=3, j in 1usize..=3, pick in any::<prop::sample::Index>()) {
        let sigmas = all_sigmas(n, j);
        let sigma = pick.get(&sigmas);
        let (w, report) = tp2_witness(n, j, sigma).unwrap();
        prop_assert!(w.arguments_independent());
        prop_assert!(report.passed());
        prop_assert!(report.branches.iter().all(|b| b.realized()));
    }

    /// Passing on a set of branches implies passing on every subset.
    #[test]
    fn verification_is_monotone(n in 1usize..=3, j in 2usize..=3, keep in prop::collection::vec(any::<bool>(), 27)) {
        let sigmas = all_sigmas(n, j);
        let (w, _) = tp2_witness(n, j, &sigmas[0]).unwrap();
        let cand = Candidate::Tp2(w);
        let full = verify_finite_witness(&cand, &sigmas).unwrap();
        prop_assume!(full.passed());
        let subset: Vec<Vec<usize>> = sigmas.iter().zip(&keep).filter(|(_, k)| **k).map(|(s, _)| s.clone()).collect();
        prop_assume!(!subset.is_empty());
        prop_assert!(verify_finite_witness(&cand, &subset).unwrap().passed());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rational_multipliers_move_the_kernel(p in -30i64..=30, q in 2i64..=12) {
        let c = Rat::new(p.into(), q.into());
        prop_assume!(!c.is_integer());
        let m: u32 = c.denom().try_into().unwrap();
        let f = EFieldPresentation::new("F", m * 2, vec![]);
        let (g, w) = z_stabilizer_witness(&f, &FieldElem::from_rat(c), &ZMode::Rational).unwrap();
        prop_assert!(w.verify(&g));
    }

    #[test]
    fn type_family_certificates_verify(values in prop::collection::vec(prop::collection::vec(1i64..=4, 1..4), 2..6)) {
        let assignments: Vec<BTreeMap<u32, FieldElem>> = values
            .iter()
            .map(|vs| vs.iter().enumerate().map(|(i, v)| (i as u32 + 1, FieldElem::from_int(*v))).collect())
            .collect();
        let t = type_family(&EFieldPresentation::new("F", 1, vec![]), &assignments).unwrap();
        let k = assignments.len();
        prop_assert_eq!(t.certificates.len() + t.compatible.len(), k * (k - 1) / 2);
        for d in &t.certificates {
            prop_assert!(d.verify(&t));
        }
        for &(l, r) in &t.compatible {
            let agree = assignments[l].iter().all(|(n, v)| assignments[r].get(n).map_or(true, |w| w == v));
            prop_assert!(agree);
        }
    }
}
