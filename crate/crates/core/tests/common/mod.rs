#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;

use freedyn::automorphism::Automorphism;
use freedyn::freegroup::{GroupContext, Letter, Word};
use rand::Rng;

pub fn config_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

pub fn random_word(rng: &mut impl Rng, rank: usize, max_len: usize) -> Word {
    let len = rng.gen_range(1..=max_len);
    Word::reduce((0..len).map(|_| Letter::new(rng.gen_range(0..rank), rng.gen_bool(0.5))))
}

/// A non-trivial word with a non-trivial cyclic reduction.
pub fn random_loop(rng: &mut impl Rng, rank: usize, max_len: usize) -> Word {
    loop {
        let w = random_word(rng, rank, max_len);
        if w.cyclic_length() > 0 {
            return w;
        }
    }
}

/// Elementary Nielsen move `x_i -> x_i x_j^e` (or `x_j^e x_i` when `left`).
pub fn nielsen(context: &GroupContext, i: usize, j: usize, e: bool, left: bool) -> Automorphism {
    assert_ne!(i, j);
    let n = context.rank();
    let xj = Letter::new(j, e);
    let mut fwd: Vec<Word> = (0..n).map(|k| Word::letter(Letter::positive(k))).collect();
    let mut bwd = fwd.clone();
    let xi = Letter::positive(i);
    let (f, b) = if left {
        ([xj, xi], [xj.inverse(), xi])
    } else {
        ([xi, xj], [xi, xj.inverse()])
    };
    fwd[i] = Word::reduce(f);
    bwd[i] = Word::reduce(b);
    Automorphism::new(context, fwd, bwd, None).expect("Nielsen moves are automorphisms")
}

/// Product of `moves` random Nielsen moves and generator inversions.
pub fn random_automorphism(rng: &mut impl Rng, context: &Arc<GroupContext>, moves: usize) -> Automorphism {
    let n = context.rank();
    let mut acc = Automorphism::identity(context);
    for _ in 0..moves {
        let i = rng.gen_range(0..n);
        let step = if rng.gen_bool(0.15) {
            let mut fwd: Vec<Word> = (0..n).map(|k| Word::letter(Letter::positive(k))).collect();
            fwd[i] = Word::letter(Letter::negative(i));
            Automorphism::new(context, fwd.clone(), fwd, None).unwrap()
        } else {
            let j = (i + rng.gen_range(1..n)) % n;
            nielsen(context, i, j, rng.gen_bool(0.5), rng.gen_bool(0.5))
        };
        acc = acc.compose(&step, context).unwrap();
    }
    acc
}

pub fn fibonacci(context: &GroupContext) -> Automorphism {
    Automorphism::parse(context, &[("a", "a b"), ("b", "a")], &[("a", "b"), ("b", "b' a")], Some("phi")).unwrap()
}
