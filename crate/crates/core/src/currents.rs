//! Geodesic currents truncated at a finite depth.
//!
//! A current is stored through its cylinder weights `⟨v, μ⟩` for every reduced
//! word `v` with `1 <= |v| <= depth`, indexed densely in shortlex order by a
//! [`WordIndexer`]. Absent entries are zero. Counting currents and the uniform
//! current use exact rational arithmetic; floating point appears only in
//! [`projective_distance`] and the normalized vectors handed to the dynamics.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::automorphism::Automorphism;
use crate::error::{Error, Result};
use crate::freegroup::{CyclicWord, GroupContext, Letter, Word, WordIndexer};

pub type Q = BigRational;

pub const DEFAULT_DEPTH: usize = 4;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn q_ratio(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// How a current was built. Pushforward is available for rational currents and
/// for non-negative combinations of them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CurrentKind {
    /// `multiplier · η_word`, with `word` stored as its canonical cyclic rotation.
    Rational { word: Word, multiplier: Q },
    Uniform,
    /// Non-negative combination of non-combination kinds.
    Combination(Vec<(Q, CurrentKind)>),
    /// Weights only, provenance unknown.
    Derived,
}

impl CurrentKind {
    pub fn is_pushable(&self) -> bool {
        match self {
            CurrentKind::Rational { .. } => true,
            CurrentKind::Combination(terms) => terms.iter().all(|(_, k)| k.is_pushable()),
            _ => false,
        }
    }

    fn scaled(&self, c: &Q) -> CurrentKind {
        match self {
            CurrentKind::Rational { word, multiplier } => CurrentKind::Rational {
                word: word.clone(),
                multiplier: multiplier * c,
            },
            CurrentKind::Combination(terms) => CurrentKind::Combination(
                terms.iter().map(|(t, k)| (t * c, k.clone())).collect(),
            ),
            other => CurrentKind::Combination(vec![(c.clone(), other.clone())]),
        }
    }

    fn into_terms(self) -> Vec<(Q, CurrentKind)> {
        match self {
            CurrentKind::Combination(terms) => terms,
            other => vec![(Q::one(), other)],
        }
    }

    fn combine(terms: Vec<(Q, CurrentKind)>) -> CurrentKind {
        let mut flat: Vec<(Q, CurrentKind)> = Vec::new();
        for (c, kind) in terms {
            if c.is_zero() {
                continue;
            }
            for (t, k) in kind.into_terms() {
                flat.push((&c * t, k));
            }
        }
        if flat.is_empty() {
            return CurrentKind::Derived;
        }
        if flat.len() == 1 {
            let (c, k) = flat.pop().unwrap();
            if let CurrentKind::Rational { word, multiplier } = k {
                return CurrentKind::Rational {
                    word,
                    multiplier: multiplier * c,
                };
            }
            return CurrentKind::Combination(vec![(c, k)]);
        }
        CurrentKind::Combination(flat)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedCurrent {
    context: Arc<GroupContext>,
    depth: usize,
    weights: BTreeMap<usize, Q>,
    kind: CurrentKind,
}

/// Occurrence counts of every reduced word of length `<= depth` read clockwise
/// on the circle `letters` (one orientation only).
fn circle_counts(letters: &[Letter], indexer: &WordIndexer) -> Vec<u64> {
    let depth = indexer.depth();
    let n = letters.len();
    let mut counts = vec![0u64; indexer.len()];
    if n == 0 {
        return counts;
    }
    let base = 2 * indexer.rank() - 1;
    let offsets: Vec<usize> = (1..=depth).map(|l| indexer.offset(l)).collect();
    let at = |j: usize| if j < n { letters[j] } else { letters[j % n] };
    for (i, &first) in letters.iter().enumerate() {
        let mut prev = first;
        let mut code = prev.code();
        counts[code] += 1;
        for (l, &offset) in offsets.iter().enumerate().skip(1) {
            let cur = at(i + l);
            code = code * base + WordIndexer::next_digit(prev, cur);
            counts[offset + code] += 1;
            prev = cur;
        }
    }
    counts
}

fn inverse_permutation(indexer: &WordIndexer) -> Vec<usize> {
    (0..indexer.len()).map(|i| indexer.inverse_index(i)).collect()
}

impl TruncatedCurrent {
    /// Builds a current from an explicit weight table (kind `Derived`) after
    /// checking non-negativity, flip symmetry and both Kirchhoff laws.
    pub fn from_weights(
        context: Arc<GroupContext>,
        depth: usize,
        weights: BTreeMap<usize, Q>,
        kind: CurrentKind,
    ) -> Result<TruncatedCurrent> {
        if depth == 0 {
            return Err(Error::Domain("depth must be at least 1".into()));
        }
        let indexer = WordIndexer::new(context.rank(), depth);
        if let Some((&i, _)) = weights.iter().next_back() {
            if i >= indexer.len() {
                return Err(Error::Malformed(format!("weight index {i} beyond depth {depth}")));
            }
        }
        let weights = weights.into_iter().filter(|(_, w)| !w.is_zero()).collect();
        let mu = TruncatedCurrent {
            context,
            depth,
            weights,
            kind,
        };
        mu.check_invariants()?;
        Ok(mu)
    }

    pub fn context(&self) -> &Arc<GroupContext> {
        &self.context
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn kind(&self) -> &CurrentKind {
        &self.kind
    }

    pub fn indexer(&self) -> WordIndexer {
        WordIndexer::new(self.context.rank(), self.depth)
    }

    /// Non-zero weights keyed by shortlex index.
    pub fn weights(&self) -> &BTreeMap<usize, Q> {
        &self.weights
    }

    pub fn weight(&self, v: &Word) -> Result<Q> {
        if v.is_empty() || v.len() > self.depth {
            return Err(Error::Domain(format!(
                "weights are stored for words of length 1..={}, got length {}",
                self.depth,
                v.len()
            )));
        }
        let i = self
            .indexer()
            .index(v.letters())
            .ok_or_else(|| Error::Malformed("word is not reduced or out of range".into()))?;
        Ok(self.weight_at(i))
    }

    pub fn weight_at(&self, index: usize) -> Q {
        self.weights.get(&index).cloned().unwrap_or_else(Q::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn is_pushable(&self) -> bool {
        self.kind.is_pushable()
    }

    /// Sum of the weights of the basis letters (not their inverses).
    pub fn level_one_mass(&self) -> Q {
        (0..self.context.rank())
            .map(|i| self.weight_at(Letter::positive(i).code()))
            .fold(Q::zero(), |a, b| a + b)
    }

    pub fn scale(&self, c: &Q) -> Result<TruncatedCurrent> {
        if c.is_negative() {
            return Err(Error::Domain("scaling coefficient must be non-negative".into()));
        }
        Ok(TruncatedCurrent {
            context: self.context.clone(),
            depth: self.depth,
            weights: if c.is_zero() {
                BTreeMap::new()
            } else {
                self.weights.iter().map(|(&i, w)| (i, w * c)).collect()
            },
            kind: self.kind.scaled(c),
        })
    }

    /// Scales so that the basis letters carry total weight 1.
    pub fn normalize(&self) -> Result<TruncatedCurrent> {
        let mass = self.level_one_mass();
        if mass.is_zero() {
            return Err(Error::Domain("cannot normalize the zero current".into()));
        }
        self.scale(&mass.recip())
    }

    /// Dense vector of normalized weights in shortlex order.
    pub fn normalized_vector(&self) -> Result<Vec<f64>> {
        let mass = self.level_one_mass();
        if mass.is_zero() {
            return Err(Error::Domain("cannot normalize the zero current".into()));
        }
        let mut out = vec![0.0; self.indexer().len()];
        for (&i, w) in &self.weights {
            out[i] = (w / &mass).to_f64().unwrap_or(f64::NAN);
        }
        Ok(out)
    }

    /// Positivity of every weight up to the stored depth.
    pub fn full_support_check(&self) -> bool {
        let total = self.indexer().len();
        self.weights.len() == total && self.weights.values().all(|w| w.is_positive())
    }

    /// Verifies non-negativity, flip symmetry, and both Kirchhoff laws exactly.
    pub fn check_invariants(&self) -> Result<()> {
        let indexer = self.indexer();
        let inv = inverse_permutation(&indexer);
        for (&i, w) in &self.weights {
            if w.is_negative() {
                return Err(Error::Domain(format!("negative weight at index {i}")));
            }
        }
        for (i, &j) in inv.iter().enumerate() {
            if self.weight_at(i) != self.weight_at(j) {
                let v = indexer.word(i);
                return Err(Error::Domain(format!(
                    "flip symmetry fails at `{}`",
                    self.context.format_word(&v)
                )));
            }
        }
        for len in 1..self.depth {
            for i in indexer.range_of_length(len) {
                let v = indexer.letters(i);
                let w = self.weight_at(i);
                let mut right = Q::zero();
                let mut left = Q::zero();
                for x in self.context.letters() {
                    if x != v[len - 1].inverse() {
                        let mut ext = v.clone();
                        ext.push(x);
                        right += self.weight_at(indexer.index(&ext).unwrap());
                    }
                    if x != v[0].inverse() {
                        let mut ext = vec![x];
                        ext.extend_from_slice(&v);
                        left += self.weight_at(indexer.index(&ext).unwrap());
                    }
                }
                if right != w || left != w {
                    return Err(Error::Domain(format!(
                        "Kirchhoff law fails at `{}`",
                        self.context.format_letters(&v)
                    )));
                }
            }
        }
        Ok(())
    }

    /// Dense table `(word, weight)` in shortlex order, zero weights included.
    pub fn table(&self) -> Vec<(Word, Q)> {
        let indexer = self.indexer();
        (0..indexer.len())
            .map(|i| (indexer.word(i), self.weight_at(i)))
            .collect()
    }
}

/// Counting current `η_g` at the given depth.
pub fn counting_current(
    context: &Arc<GroupContext>,
    g: &Word,
    depth: usize,
) -> Result<TruncatedCurrent> {
    if depth == 0 {
        return Err(Error::Domain("depth must be at least 1".into()));
    }
    context.check_letters(g.letters())?;
    let core = g.to_cyclic();
    if core.is_empty() {
        return Err(Error::Domain("the counting current of the identity is undefined".into()));
    }
    Ok(counting_current_cyclic(context, &core, depth, Q::one()))
}

pub(crate) fn counting_current_cyclic(
    context: &Arc<GroupContext>,
    core: &CyclicWord,
    depth: usize,
    multiplier: Q,
) -> TruncatedCurrent {
    let indexer = WordIndexer::new(context.rank(), depth);
    let counts = circle_counts(core.letters(), &indexer);
    let inv = inverse_permutation(&indexer);
    let mut weights = BTreeMap::new();
    for i in 0..indexer.len() {
        let total = counts[i] + counts[inv[i]];
        if total > 0 {
            weights.insert(i, Q::from_integer(BigInt::from(total)) * &multiplier);
        }
    }
    TruncatedCurrent {
        context: context.clone(),
        depth,
        weights,
        kind: CurrentKind::Rational {
            word: core.to_word(),
            multiplier,
        },
    }
}

/// The uniform current: `⟨v⟩ = 1 / (2N (2N-1)^(|v|-1))`.
pub fn uniform_current(context: &Arc<GroupContext>, depth: usize) -> Result<TruncatedCurrent> {
    if depth == 0 {
        return Err(Error::Domain("depth must be at least 1".into()));
    }
    let indexer = WordIndexer::new(context.rank(), depth);
    let two_n = BigInt::from(context.alphabet_size());
    let mut weights = BTreeMap::new();
    let mut denom = two_n.clone();
    for len in 1..=depth {
        let w = Q::new(BigInt::one(), denom.clone());
        for i in indexer.range_of_length(len) {
            weights.insert(i, w.clone());
        }
        denom *= &two_n - 1;
    }
    Ok(TruncatedCurrent {
        context: context.clone(),
        depth,
        weights,
        kind: CurrentKind::Uniform,
    })
}

/// Pointwise non-negative combination of currents of equal depth.
pub fn linear_combination(terms: &[(Q, &TruncatedCurrent)]) -> Result<TruncatedCurrent> {
    let (_, first) = terms
        .first()
        .ok_or_else(|| Error::Domain("empty linear combination".into()))?;
    let mut weights: BTreeMap<usize, Q> = BTreeMap::new();
    for (c, mu) in terms {
        if c.is_negative() {
            return Err(Error::Domain("linear combination coefficients must be non-negative".into()));
        }
        if mu.depth != first.depth {
            return Err(Error::Domain(format!(
                "depth mismatch in linear combination: {} vs {}",
                mu.depth, first.depth
            )));
        }
        if mu.context != first.context {
            return Err(Error::Domain("context mismatch in linear combination".into()));
        }
        if c.is_zero() {
            continue;
        }
        for (&i, w) in &mu.weights {
            *weights.entry(i).or_insert_with(Q::zero) += w * c;
        }
    }
    let kind = CurrentKind::combine(terms.iter().map(|(c, mu)| (c.clone(), mu.kind.clone())).collect());
    Ok(TruncatedCurrent {
        context: first.context.clone(),
        depth: first.depth,
        weights,
        kind,
    })
}

/// `φμ` for rational currents (`φ(c·η_g) = c·η_{Φ(g)}`), termwise on combinations.
pub fn push_rational(phi: &Automorphism, mu: &TruncatedCurrent) -> Result<TruncatedCurrent> {
    push_rational_capped(phi, mu, usize::MAX)
}

pub fn push_rational_capped(
    phi: &Automorphism,
    mu: &TruncatedCurrent,
    cap: usize,
) -> Result<TruncatedCurrent> {
    if phi.rank() != mu.context.rank() {
        return Err(Error::Domain("automorphism and current have different rank".into()));
    }
    match &mu.kind {
        CurrentKind::Rational { word, multiplier } => {
            let image = phi.apply_capped(word.letters(), cap)?.to_cyclic();
            Ok(counting_current_cyclic(&mu.context, &image, mu.depth, multiplier.clone()))
        }
        CurrentKind::Combination(terms) if mu.kind.is_pushable() => {
            let pushed = terms
                .iter()
                .map(|(c, kind)| {
                    let part = TruncatedCurrent {
                        context: mu.context.clone(),
                        depth: mu.depth,
                        weights: BTreeMap::new(),
                        kind: kind.clone(),
                    };
                    Ok((c.clone(), push_rational_capped(phi, &part, cap)?))
                })
                .collect::<Result<Vec<_>>>()?;
            let refs: Vec<(Q, &TruncatedCurrent)> = pushed.iter().map(|(c, m)| (c.clone(), m)).collect();
            linear_combination(&refs)
        }
        CurrentKind::Combination(_) => Err(Error::Unsupported(
            "pushforward of a combination with non-rational terms".into(),
        )),
        CurrentKind::Uniform => Err(Error::Unsupported(
            "pushforward of the uniform current is not determined by truncated weights".into(),
        )),
        CurrentKind::Derived => Err(Error::Unsupported(
            "pushforward of a current known only through its truncated weights".into(),
        )),
    }
}

/// L¹ distance between the normalized weight vectors of `mu` and `nu`, taken
/// over words up to inversion (one term per pair `{v, v⁻¹}`).
pub fn projective_distance(mu: &TruncatedCurrent, nu: &TruncatedCurrent) -> Result<f64> {
    if mu.depth != nu.depth || mu.context.rank() != nu.context.rank() {
        return Err(Error::Domain("projective distance needs equal depth and rank".into()));
    }
    let a = mu.level_one_mass();
    let b = nu.level_one_mass();
    if a.is_zero() || b.is_zero() {
        return Err(Error::Domain("projective distance of the zero current".into()));
    }
    // Σ |x/a - y/b| = Σ |x b - y a| / (a b)
    let mut total = Q::zero();
    let zero = Q::zero();
    let mut keys: Vec<usize> = mu.weights.keys().chain(nu.weights.keys()).copied().collect();
    keys.sort_unstable();
    keys.dedup();
    for i in keys {
        let x = mu.weights.get(&i).unwrap_or(&zero);
        let y = nu.weights.get(&i).unwrap_or(&zero);
        total += (x * &b - y * &a).abs();
    }
    Ok((total / (a * b) / q(2)).to_f64().unwrap_or(f64::NAN))
}

/// A cyclic word containing every reduced word of length `depth` exactly once
/// (an Eulerian circuit of the reduced de Bruijn graph). Requires `depth >= 2`.
pub fn de_bruijn_word(context: &GroupContext, depth: usize) -> Result<CyclicWord> {
    if depth < 2 {
        return Err(Error::Domain("de Bruijn words need depth at least 2".into()));
    }
    let rank = context.rank();
    let vertex_len = depth - 1;
    let vertices = WordIndexer::new(rank, vertex_len);
    let range = vertices.range_of_length(vertex_len);
    let alphabet = context.alphabet_size();
    // next untried letter code per vertex
    let mut next = vec![0usize; range.len()];
    let start: Vec<Letter> = vertices.letters(range.start);
    let mut stack: Vec<(Vec<Letter>, Option<Letter>)> = vec![(start, None)];
    let mut circuit: Vec<Letter> = Vec::new();
    while let Some((v, _)) = stack.last() {
        let vi = vertices.index(v).unwrap() - range.start;
        let forbidden = v[vertex_len - 1].inverse().code();
        while next[vi] < alphabet && next[vi] == forbidden {
            next[vi] += 1;
        }
        if next[vi] < alphabet {
            let x = Letter::from_code(next[vi]);
            next[vi] += 1;
            let mut w: Vec<Letter> = v[1..].to_vec();
            w.push(x);
            stack.push((w, Some(x)));
        } else {
            let (_, used) = stack.pop().unwrap();
            if let Some(x) = used {
                circuit.push(x);
            }
        }
    }
    circuit.reverse();
    Ok(CyclicWord::from_word(&Word::reduce(circuit)))
}

/// Rational current whose depth-`depth` weights are a multiple of the uniform
/// current's; unlike the uniform current it can be pushed forward exactly.
pub fn uniform_surrogate(context: &Arc<GroupContext>, depth: usize) -> Result<TruncatedCurrent> {
    let word = de_bruijn_word(context, depth.max(2))?;
    Ok(counting_current_cyclic(context, &word, depth, Q::one()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::freegroup::count_occurrences;

    fn ctx() -> Arc<GroupContext> {
        GroupContext::standard(2).unwrap()
    }

    fn w(s: &str) -> Word {
        ctx().parse_word(s).unwrap()
    }

    fn fib() -> Automorphism {
        Automorphism::parse(&ctx(), &[("a", "a b"), ("b", "a")], &[("a", "b"), ("b", "b' a")], None)
            .unwrap()
    }

    #[test]
    fn counting_examples() {
        let mu = counting_current(&ctx(), &w("a b a b"), 2).unwrap();
        assert_eq!(mu.weight(&w("a")).unwrap(), q(2));
        assert_eq!(mu.weight(&w("b")).unwrap(), q(2));
        assert_eq!(mu.weight(&w("a b")).unwrap(), q(2));
        assert_eq!(mu.weight(&w("b a")).unwrap(), q(2));
        assert_eq!(mu.weight(&w("a b'")).unwrap(), q(0));

        let eta_a = counting_current(&ctx(), &w("a"), 1).unwrap();
        assert_eq!(eta_a.weight(&w("a")).unwrap(), q(1));
        assert_eq!(eta_a.weight(&w("b")).unwrap(), q(0));
        assert!(counting_current(&ctx(), &Word::identity(), 2).is_err());
        assert!(counting_current(&ctx(), &w("b a b'"), 3).unwrap().weight(&w("a a a")).unwrap() == q(1));
    }

    #[test]
    fn counting_matches_direct_enumeration() {
        let c = ctx();
        for g in ["a b' a b b", "a a b a' b'", "b", "a b a' b'"] {
            let word = w(g);
            let mu = counting_current(&c, &word, 4).unwrap();
            let circle = word.to_cyclic();
            for (v, weight) in mu.table() {
                let direct = count_occurrences(&v, &circle).unwrap();
                assert_eq!(weight, q(direct as i64), "{g} at {}", c.format_word(&v));
            }
        }
    }

    #[test]
    fn uniform_examples() {
        let nu = uniform_current(&ctx(), 3).unwrap();
        assert_eq!(nu.weight(&w("a")).unwrap(), q_ratio(1, 4));
        assert_eq!(nu.weight(&w("a b")).unwrap(), q_ratio(1, 12));
        let right: Q = ["a a", "a b", "a b'"].iter().map(|v| nu.weight(&w(v)).unwrap()).sum();
        assert_eq!(right, q_ratio(1, 4));
        nu.check_invariants().unwrap();
        assert!(nu.full_support_check());
    }

    #[test]
    fn combination_examples() {
        let c = ctx();
        let mu = counting_current(&c, &w("a b' a"), 3).unwrap();
        let nu = uniform_current(&c, 3).unwrap();
        let same = linear_combination(&[(q(1), &mu), (q(0), &nu)]).unwrap();
        assert_eq!(same, mu);

        let ea = counting_current(&c, &w("a"), 1).unwrap();
        let eb = counting_current(&c, &w("b"), 1).unwrap();
        let sum = linear_combination(&[(q(1), &ea), (q(1), &eb)]).unwrap();
        assert_eq!(sum.weight(&w("a")).unwrap(), q(1));
        assert_eq!(sum.weight(&w("b")).unwrap(), q(1));
        let two = linear_combination(&[(q(2), &ea)]).unwrap();
        assert_eq!(two.weight(&w("a")).unwrap(), q(2));

        assert!(linear_combination(&[(q(-1), &ea)]).is_err());
        let deep = counting_current(&c, &w("a"), 2).unwrap();
        assert!(linear_combination(&[(q(1), &ea), (q(1), &deep)]).is_err());
    }

    #[test]
    fn push_examples() {
        let c = ctx();
        let phi = fib();
        let eb = counting_current(&c, &w("b"), 3).unwrap();
        let ea = counting_current(&c, &w("a"), 3).unwrap();
        assert_eq!(push_rational(&phi, &eb).unwrap(), ea);

        let id = Automorphism::identity(&c);
        let mu = counting_current(&c, &w("a b' b' a"), 3).unwrap().scale(&q_ratio(3, 2)).unwrap();
        assert_eq!(push_rational(&id, &mu).unwrap(), mu);

        let pushed = push_rational(&phi, &counting_current(&c, &w("a"), 1).unwrap()).unwrap();
        assert_eq!(pushed.weight(&w("a")).unwrap(), q(1));
        assert_eq!(pushed.weight(&w("b")).unwrap(), q(1));
        assert_eq!(pushed, counting_current(&c, &w("a b"), 1).unwrap());
    }

    #[test]
    fn push_combination_termwise_and_uniform_rejected() {
        let c = ctx();
        let phi = fib();
        let ea = counting_current(&c, &w("a"), 3).unwrap();
        let ex = counting_current(&c, &w("a b'"), 3).unwrap();
        let combo = linear_combination(&[(q(2), &ea), (q_ratio(1, 3), &ex)]).unwrap();
        let pushed = push_rational(&phi, &combo).unwrap();
        let expected = linear_combination(&[
            (q(2), &push_rational(&phi, &ea).unwrap()),
            (q_ratio(1, 3), &push_rational(&phi, &ex).unwrap()),
        ])
        .unwrap();
        assert_eq!(pushed.weights(), expected.weights());

        let nu = uniform_current(&c, 3).unwrap();
        assert!(matches!(push_rational(&phi, &nu), Err(Error::Unsupported(_))));
        let mixed = linear_combination(&[(q(1), &nu), (q(1), &ea)]).unwrap();
        assert!(matches!(push_rational(&phi, &mixed), Err(Error::Unsupported(_))));
    }

    #[test]
    fn normalize_examples() {
        let c = ctx();
        let mu = counting_current(&c, &w("a b a b"), 3).unwrap();
        let n = mu.normalize().unwrap();
        assert_eq!(n, mu.scale(&q_ratio(1, 4)).unwrap());
        assert_eq!(n.normalize().unwrap(), n);
        let nu = uniform_current(&c, 3).unwrap();
        assert_eq!(nu.normalize().unwrap().weights(), nu.scale(&q(2)).unwrap().weights());
        let zero = mu.scale(&q(0)).unwrap();
        assert!(zero.normalize().is_err());
    }

    #[test]
    fn distance_examples() {
        let c = ctx();
        let mu = counting_current(&c, &w("a b' a b b"), 4).unwrap();
        assert_eq!(projective_distance(&mu, &mu).unwrap(), 0.0);
        assert_eq!(projective_distance(&mu, &mu.scale(&q(7)).unwrap()).unwrap(), 0.0);
        let ea = counting_current(&c, &w("a"), 1).unwrap();
        let eb = counting_current(&c, &w("b"), 1).unwrap();
        // normalized vectors over {a, b} are (1, 0) and (0, 1)
        assert_eq!(projective_distance(&ea, &eb).unwrap(), 2.0);
    }

    #[test]
    fn full_support_examples() {
        let c = ctx();
        assert!(uniform_current(&c, 4).unwrap().full_support_check());
        assert!(!counting_current(&c, &w("a"), 1).unwrap().full_support_check());
        let combo = linear_combination(&[
            (q(1), &uniform_current(&c, 2).unwrap()),
            (q(3), &counting_current(&c, &w("a"), 2).unwrap()),
        ])
        .unwrap();
        assert!(combo.full_support_check());
    }

    #[test]
    fn de_bruijn_word_is_projectively_uniform() {
        for rank in 2..=3 {
            let c = GroupContext::standard(rank).unwrap();
            for depth in 2..=4 {
                let word = de_bruijn_word(&c, depth).unwrap();
                let expected_len = 2 * rank * (2 * rank - 1usize).pow(depth as u32 - 1);
                assert_eq!(word.len(), expected_len);
                let mu = uniform_surrogate(&c, depth).unwrap();
                let nu = uniform_current(&c, depth).unwrap();
                assert_eq!(projective_distance(&mu, &nu).unwrap(), 0.0);
                assert!(mu.full_support_check());
                assert!(mu.is_pushable());
            }
        }
    }

    #[test]
    fn from_weights_rejects_broken_kirchhoff() {
        let c = ctx();
        let mu = counting_current(&c, &w("a b"), 2).unwrap();
        let mut weights = mu.weights().clone();
        *weights.get_mut(&0).unwrap() += q(1);
        assert!(TruncatedCurrent::from_weights(c.clone(), 2, weights, CurrentKind::Derived).is_err());
        let ok = TruncatedCurrent::from_weights(c, 2, mu.weights().clone(), CurrentKind::Derived).unwrap();
        assert_eq!(ok.weights(), mu.weights());
    }
}
