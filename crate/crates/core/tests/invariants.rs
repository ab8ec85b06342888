//! Property tests over random words and measures: group axioms, normal-form
//! soundness, the projection homomorphism, key round-trips, and measure
//! conservation laws.

use proptest::prelude::*;

use groupwalk_core::groups::{GroupDescriptor, GroupElement};
use groupwalk_core::measures::{convolve, lazify, pushforward, FinMeasure};

fn descriptors() -> Vec<GroupDescriptor> {
    vec![
        GroupDescriptor::lattice(1).unwrap(),
        GroupDescriptor::lattice(3).unwrap(),
        GroupDescriptor::free(2).unwrap(),
        GroupDescriptor::heisenberg(),
        GroupDescriptor::lamplighter(),
        GroupDescriptor::bs12(),
    ]
}

/// A random word as alphabet indices, evaluated against a descriptor.
fn eval_indices(desc: &GroupDescriptor, indices: &[usize]) -> GroupElement {
    let alphabet = desc.alphabet();
    let mut acc = desc.identity();
    for &i in indices {
        acc = acc.multiply(&alphabet[i % alphabet.len()].element).unwrap();
    }
    acc
}

proptest! {
    #[test]
    fn group_axioms_hold(
        family in 0usize..6,
        wa in prop::collection::vec(0usize..64, 0..20),
        wb in prop::collection::vec(0usize..64, 0..20),
        wc in prop::collection::vec(0usize..64, 0..20),
    ) {
        let desc = &descriptors()[family];
        let a = eval_indices(desc, &wa);
        let b = eval_indices(desc, &wb);
        let c = eval_indices(desc, &wc);
        // associativity
        let ab_c = a.multiply(&b).unwrap().multiply(&c).unwrap();
        let a_bc = a.multiply(&b.multiply(&c).unwrap()).unwrap();
        prop_assert_eq!(&ab_c, &a_bc);
        // identity
        let e = desc.identity();
        prop_assert_eq!(&a.multiply(&e).unwrap(), &a);
        prop_assert_eq!(&e.multiply(&a).unwrap(), &a);
        // inverse, both sides
        prop_assert!(a.multiply(&a.inverse()).unwrap().is_identity());
        prop_assert!(a.inverse().multiply(&a).unwrap().is_identity());
    }

    #[test]
    fn normal_form_survives_cancelling_pair(
        family in 0usize..6,
        word in prop::collection::vec(0usize..64, 0..16),
        cut in 0usize..17,
        letter in 0usize..64,
    ) {
        let desc = &descriptors()[family];
        let alphabet = desc.alphabet();
        let g = alphabet[letter % alphabet.len()].element.clone();
        let cut = cut.min(word.len());

        let plain = eval_indices(desc, &word);
        // insert g·g⁻¹ at the cut point
        let mut acc = eval_indices(desc, &word[..cut]);
        acc = acc.multiply(&g).unwrap().multiply(&g.inverse()).unwrap();
        for &i in &word[cut..] {
            acc = acc.multiply(&alphabet[i % alphabet.len()].element).unwrap();
        }
        prop_assert_eq!(plain.canonical_key(), acc.canonical_key());
    }

    #[test]
    fn projection_is_homomorphism(
        family in 0usize..6,
        wa in prop::collection::vec(0usize..64, 0..20),
        wb in prop::collection::vec(0usize..64, 0..20),
    ) {
        let desc = &descriptors()[family];
        let a = eval_indices(desc, &wa);
        let b = eval_indices(desc, &wb);
        let sum: Vec<i64> = a.project().iter().zip(b.project()).map(|(x, y)| x + y).collect();
        prop_assert_eq!(a.multiply(&b).unwrap().project(), sum);
        // π(e) = 0 and π(g⁻¹) = −π(g)
        let neg: Vec<i64> = a.project().iter().map(|x| -x).collect();
        prop_assert_eq!(a.inverse().project(), neg);
    }

    #[test]
    fn canonical_key_round_trips(
        family in 0usize..6,
        word in prop::collection::vec(0usize..64, 0..20),
    ) {
        let desc = &descriptors()[family];
        let g = eval_indices(desc, &word);
        let key = g.canonical_key();
        prop_assert_eq!(GroupElement::from_canonical_key(&key).unwrap(), g);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn convolution_conserves_mass_and_commutes_with_projection(
        family in 0usize..6,
        words in prop::collection::vec(prop::collection::vec(0usize..64, 0..6), 2..5),
        raw_weights in prop::collection::vec(0.05f64..1.0, 2..5),
    ) {
        let desc = &descriptors()[family];
        let n = words.len().min(raw_weights.len());
        let total: f64 = raw_weights[..n].iter().sum();
        let atoms: Vec<(GroupElement, f64)> = words[..n]
            .iter()
            .zip(&raw_weights[..n])
            .map(|(w, &wt)| (eval_indices(desc, w), wt / total))
            .collect();
        let mu = FinMeasure::from_atoms(desc.clone(), atoms).unwrap();
        prop_assert!(mu.is_probability());

        let conv = convolve(&mu, &mu).unwrap();
        prop_assert!((conv.total_mass() - 1.0).abs() <= 1e-12);

        // pushforward commutes with convolution, atom by atom
        let lhs = pushforward(&conv);
        let rhs = pushforward(&mu).convolve(&pushforward(&mu)).unwrap();
        prop_assert_eq!(lhs.atoms().len(), rhs.atoms().len());
        for ((m1, w1), (m2, w2)) in lhs.atoms().iter().zip(rhs.atoms()) {
            prop_assert_eq!(m1, m2);
            prop_assert!((w1 - w2).abs() <= 1e-12);
        }

        // lazify preserves probability and adds the identity atom
        let lazy = lazify(&mu, 0.25).unwrap();
        prop_assert!(lazy.is_probability());
        prop_assert!(lazy.weight_of(&desc.identity()) >= 0.25 - 1e-15);
    }
}
