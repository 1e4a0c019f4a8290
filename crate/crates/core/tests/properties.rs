mod common;

use std::sync::Arc;

use freedyn::currents::{
    counting_current, linear_combination, projective_distance, push_rational, q, q_ratio, uniform_surrogate,
};
use freedyn::document::{current_from_json, current_to_json, tree_from_json, tree_to_json};
use freedyn::freegroup::{GroupContext, Letter, Word, WordIndexer};
use freedyn::trees::{pair, MarkedMetricRose};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn ctx(rank: usize) -> Arc<GroupContext> {
    GroupContext::standard(rank).unwrap()
}

fn raw_word(rank: usize, max: usize) -> impl Strategy<Value = Vec<Letter>> {
    prop::collection::vec((0..rank, any::<bool>()), 0..max)
        .prop_map(|v| v.into_iter().map(|(g, e)| Letter::new(g, e)).collect())
}

fn ranked_word(max: usize) -> impl Strategy<Value = (usize, Word)> {
    (2usize..=4).prop_flat_map(move |n| raw_word(n, max).prop_map(move |l| (n, Word::reduce(l))))
}

fn ranked_loop(max: usize) -> impl Strategy<Value = (usize, Word)> {
    ranked_word(max).prop_filter("needs a non-trivial conjugacy class", |(_, w)| w.cyclic_length() > 0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn reduction_is_idempotent_and_free((n, w) in ranked_word(40)) {
        prop_assert!(w.letters().windows(2).all(|p| p[1] != p[0].inverse()));
        prop_assert_eq!(Word::reduce(w.letters().to_vec()), w.clone());
        prop_assert!(w.concat(&w.inverse()).is_identity());
        let c = ctx(n);
        prop_assert_eq!(c.parse_word(&c.format_word(&w)).unwrap(), w);
    }

    #[test]
    fn cyclic_reduction_conjugates_back((_n, w) in ranked_word(40)) {
        let (core, conj) = w.cyclic_reduce();
        let rebuilt = conj.concat(&core.to_word()).concat(&conj.inverse());
        prop_assert_eq!(rebuilt, w.clone());
        prop_assert!(core.to_word().is_cyclically_reduced());
        prop_assert_eq!(core.len(), w.cyclic_length());
    }

    #[test]
    fn indexer_is_a_bijection(n in 2usize..=3, depth in 1usize..=4) {
        let ix = WordIndexer::new(n, depth);
        for i in 0..ix.len() {
            let letters = ix.letters(i);
            prop_assert_eq!(ix.index(&letters), Some(i));
            let inv = ix.inverse_index(i);
            prop_assert_eq!(ix.word(inv), ix.word(i).inverse());
        }
    }

    #[test]
    fn automorphisms_invert_and_compose(seed in any::<u64>(), (n, w) in ranked_word(30)) {
        let c = ctx(n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phi = common::random_automorphism(&mut rng, &c, 6);
        let psi = common::random_automorphism(&mut rng, &c, 6);
        prop_assert_eq!(phi.apply_inverse(&phi.apply(&w)), w.clone());
        prop_assert_eq!(phi.apply(&phi.apply_inverse(&w)), w.clone());
        let both = psi.compose(&phi, &c).unwrap();
        prop_assert_eq!(both.apply(&w), psi.apply(&phi.apply(&w)));
        prop_assert_eq!(both.apply_inverse(&w), phi.apply_inverse(&psi.apply_inverse(&w)));
        // homomorphism on products
        let v = common::random_word(&mut rng, n, 10);
        prop_assert_eq!(phi.apply(&w.concat(&v)), phi.apply(&w).concat(&phi.apply(&v)));
    }

    #[test]
    fn counting_currents_satisfy_invariants((n, w) in ranked_loop(30), depth in 1usize..=4) {
        let c = ctx(n);
        let eta = counting_current(&c, &w, depth).unwrap();
        eta.check_invariants().unwrap();
        prop_assert_eq!(counting_current(&c, &w.inverse(), depth).unwrap().weights().clone(), eta.weights().clone());
        prop_assert_eq!(eta.level_one_mass(), q(w.cyclic_length() as i64));
        // conjugation does not change the class
        let x = Word::letter(Letter::positive(0));
        let conj = x.concat(&w).concat(&x.inverse());
        prop_assert_eq!(counting_current(&c, &conj, depth).unwrap().weights().clone(), eta.weights().clone());
    }

    #[test]
    fn powers_scale_counting_currents((n, w) in ranked_loop(12), k in 1usize..=4) {
        let c = ctx(n);
        let core = w.to_cyclic().to_word();
        let power = (0..k).fold(Word::identity(), |acc, _| acc.concat(&core));
        let eta = counting_current(&c, &core, 3).unwrap();
        let eta_k = counting_current(&c, &power, 3).unwrap();
        prop_assert_eq!(eta_k.weights().clone(), eta.scale(&q(k as i64)).unwrap().weights().clone());
        prop_assert!(projective_distance(&eta, &eta_k).unwrap() < 1e-12);
    }

    #[test]
    fn pushforward_is_equivariant(seed in any::<u64>(), (n, w) in ranked_loop(20)) {
        let c = ctx(n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phi = common::random_automorphism(&mut rng, &c, 4);
        let psi = common::random_automorphism(&mut rng, &c, 4);
        let eta = counting_current(&c, &w, 3).unwrap();
        let pushed = push_rational(&phi, &eta).unwrap();
        prop_assert_eq!(pushed.weights().clone(), counting_current(&c, &phi.apply(&w), 3).unwrap().weights().clone());
        let twice = push_rational(&psi, &pushed).unwrap();
        let at_once = push_rational(&psi.compose(&phi, &c).unwrap(), &eta).unwrap();
        prop_assert_eq!(twice.weights(), at_once.weights());
        // pushing is linear
        let v = common::random_loop(&mut rng, n, 12);
        let nu = counting_current(&c, &v, 3).unwrap();
        let mix = linear_combination(&[(q_ratio(2, 3), &eta), (q(3), &nu)]).unwrap();
        let lhs = push_rational(&phi, &mix).unwrap();
        let pn = push_rational(&phi, &nu).unwrap();
        let rhs = linear_combination(&[(q_ratio(2, 3), &pushed), (q(3), &pn)]).unwrap();
        prop_assert_eq!(lhs.weights(), rhs.weights());
    }

    #[test]
    fn translation_lengths_follow_the_action(seed in any::<u64>(), (n, w) in ranked_word(20)) {
        let c = ctx(n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phi = common::random_automorphism(&mut rng, &c, 5);
        let lengths = (0..n).map(|i| q_ratio(1 + i as i64, 2)).collect();
        let t = MarkedMetricRose::new(c.clone(), lengths, vec![]).unwrap();
        let moved = t.act(&phi);
        prop_assert_eq!(moved.translation_length(&w), t.translation_length(&phi.apply(&w)));
        prop_assert_eq!(t.translation_length(&w), t.translation_length(&w.inverse()));
        if w.cyclic_length() > 0 {
            let eta = counting_current(&c, &w, 2).unwrap();
            prop_assert_eq!(pair(&t, &eta).unwrap(), t.translation_length(&w));
        }
    }

    #[test]
    fn documents_round_trip(seed in any::<u64>(), (n, w) in ranked_loop(16), depth in 1usize..=3) {
        let c = ctx(n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let eta = counting_current(&c, &w, depth).unwrap();
        let sur = uniform_surrogate(&c, depth).unwrap();
        let mix = linear_combination(&[(q_ratio(5, 7), &eta), (q(2), &sur)]).unwrap();
        for mu in [eta.clone(), mix, eta.normalize().unwrap()] {
            let text = current_to_json(&mu);
            let back = current_from_json(&text).unwrap();
            prop_assert_eq!(&back, &mu);
            prop_assert_eq!(current_to_json(&back), text);
        }
        let phi = common::random_automorphism(&mut rng, &c, 3);
        let lengths = (0..n).map(|i| q_ratio(2 + i as i64, 3)).collect();
        let t = MarkedMetricRose::new(c.clone(), lengths, vec![]).unwrap().act(&phi);
        let text = tree_to_json(&t);
        let back = tree_from_json(&text).unwrap();
        prop_assert_eq!(&back, &t);
        prop_assert_eq!(tree_to_json(&back), text);
    }

    #[test]
    fn projective_distance_is_a_pseudometric((n, w) in ranked_loop(16), (m, v) in ranked_loop(16)) {
        prop_assume!(n == m);
        let c = ctx(n);
        let a = counting_current(&c, &w, 3).unwrap();
        let b = counting_current(&c, &v, 3).unwrap();
        let d = projective_distance(&a, &b).unwrap();
        prop_assert!((d - projective_distance(&b, &a).unwrap()).abs() < 1e-15);
        prop_assert!(d.is_finite() && d >= 0.0);
        let u = uniform_surrogate(&c, 3).unwrap();
        let via = projective_distance(&a, &u).unwrap() + projective_distance(&u, &b).unwrap();
        prop_assert!(d <= via + 1e-12);
        prop_assert!(projective_distance(&a, &a.scale(&q(9)).unwrap()).unwrap() < 1e-15);
    }

    #[test]
    fn parsers_never_panic(text in "\\PC{0,40}") {
        let c = ctx(3);
        let _ = c.parse_word(&text);
        let _ = current_from_json(&text);
        let _ = tree_from_json(&text);
        let _ = freedyn::config::ExperimentConfig::parse(&text, false);
        let _ = freedyn::config::ExperimentConfig::parse(&text, true);
    }
}
