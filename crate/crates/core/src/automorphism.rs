//! Automorphisms of F_N given by basis images together with certified inverse
//! images, and the Perron-Frobenius data of their letter substitution.

use crate::error::{Error, Result};
use crate::freegroup::{push_reduced, GroupContext, Letter, Word};

/// Default cap on the number of letters of any intermediate word.
pub const DEFAULT_MAX_WORD_LETTERS: usize = 10_000_000;

/// An automorphism together with its inverse, both given on basis letters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Automorphism {
    forward: Vec<Word>,
    backward: Vec<Word>,
    label: Option<String>,
    // images indexed by letter code, inverse letters map to inverted images
    forward_table: Vec<Vec<Letter>>,
    backward_table: Vec<Vec<Letter>>,
}

fn letter_table(images: &[Word]) -> Vec<Vec<Letter>> {
    let mut table = Vec::with_capacity(2 * images.len());
    for img in images {
        table.push(img.letters().to_vec());
        table.push(img.inverse().into_letters());
    }
    table
}

fn apply_table(table: &[Vec<Letter>], letters: &[Letter], cap: usize) -> Result<Word> {
    let mut stack: Vec<Letter> = Vec::with_capacity(letters.len());
    for &l in letters {
        for &m in &table[l.code()] {
            push_reduced(&mut stack, m);
        }
        if stack.len() > cap {
            return Err(Error::Resource(format!(
                "word exceeds {cap} letters while applying automorphism"
            )));
        }
    }
    Ok(Word::from_reduced_unchecked(stack))
}

impl Automorphism {
    /// Builds an automorphism and checks that `backward` inverts `forward`.
    pub fn new(
        context: &GroupContext,
        forward: Vec<Word>,
        backward: Vec<Word>,
        label: Option<String>,
    ) -> Result<Automorphism> {
        let rank = context.rank();
        if forward.len() != rank || backward.len() != rank {
            return Err(Error::Domain(format!(
                "expected {rank} forward and backward images, got {} and {}",
                forward.len(),
                backward.len()
            )));
        }
        for img in forward.iter().chain(backward.iter()) {
            context.check_letters(img.letters())?;
        }
        let phi = Automorphism {
            forward_table: letter_table(&forward),
            backward_table: letter_table(&backward),
            forward,
            backward,
            label,
        };
        phi.certify(context)?;
        Ok(phi)
    }

    pub fn identity(context: &GroupContext) -> Automorphism {
        let images: Vec<Word> = (0..context.rank())
            .map(|i| Word::letter(Letter::positive(i)))
            .collect();
        Automorphism {
            forward_table: letter_table(&images),
            backward_table: letter_table(&images),
            forward: images.clone(),
            backward: images,
            label: Some("id".into()),
        }
    }

    /// Parses images and inverse images given as `(letter name, word)` pairs.
    pub fn parse(
        context: &GroupContext,
        images: &[(&str, &str)],
        inverse: &[(&str, &str)],
        label: Option<&str>,
    ) -> Result<Automorphism> {
        let read = |pairs: &[(&str, &str)], which: &str| -> Result<Vec<Word>> {
            let mut out: Vec<Option<Word>> = vec![None; context.rank()];
            for (name, text) in pairs {
                let i = context.generator_index(name).ok_or_else(|| {
                    Error::Malformed(format!("unknown basis letter `{name}` in {which} images"))
                })?;
                if out[i].is_some() {
                    return Err(Error::Malformed(format!(
                        "letter `{name}` given twice in {which} images"
                    )));
                }
                out[i] = Some(context.parse_word(text)?);
            }
            out.into_iter()
                .enumerate()
                .map(|(i, w)| {
                    w.ok_or_else(|| {
                        Error::Malformed(format!(
                            "missing {which} image of `{}`",
                            context.basis()[i]
                        ))
                    })
                })
                .collect()
        };
        Automorphism::new(
            context,
            read(images, "forward")?,
            read(inverse, "inverse")?,
            label.map(str::to_string),
        )
    }

    fn certify(&self, context: &GroupContext) -> Result<()> {
        for i in 0..self.rank() {
            let x = Word::letter(Letter::positive(i));
            let there_and_back =
                apply_table(&self.backward_table, self.forward[i].letters(), usize::MAX)?;
            if there_and_back != x {
                return Err(Error::Certification {
                    letter: context.basis()[i].clone(),
                    detail: format!(
                        "inverse(image) reduces to `{}`",
                        context.format_word(&there_and_back)
                    ),
                });
            }
            let back_and_there =
                apply_table(&self.forward_table, self.backward[i].letters(), usize::MAX)?;
            if back_and_there != x {
                return Err(Error::Certification {
                    letter: context.basis()[i].clone(),
                    detail: format!(
                        "image(inverse) reduces to `{}`",
                        context.format_word(&back_and_there)
                    ),
                });
            }
        }
        Ok(())
    }

    pub fn rank(&self) -> usize {
        self.forward.len()
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Automorphism {
        self.label = Some(label.into());
        self
    }

    pub fn forward(&self) -> &[Word] {
        &self.forward
    }

    pub fn backward(&self) -> &[Word] {
        &self.backward
    }

    /// Image of a signed letter.
    pub fn image(&self, letter: Letter) -> &[Letter] {
        &self.forward_table[letter.code()]
    }

    pub fn is_identity(&self) -> bool {
        self.forward
            .iter()
            .enumerate()
            .all(|(i, w)| w.letters() == [Letter::positive(i)])
    }

    /// True when no image contains an inverse letter.
    pub fn is_positive(&self) -> bool {
        self.forward
            .iter()
            .all(|w| w.letters().iter().all(|l| !l.is_inverse()))
    }

    pub fn apply(&self, w: &Word) -> Word {
        apply_table(&self.forward_table, w.letters(), usize::MAX).unwrap()
    }

    /// Like [`apply`](Self::apply) but fails once the result outgrows `cap`.
    pub fn apply_capped(&self, letters: &[Letter], cap: usize) -> Result<Word> {
        apply_table(&self.forward_table, letters, cap)
    }

    pub fn apply_inverse(&self, w: &Word) -> Word {
        apply_table(&self.backward_table, w.letters(), usize::MAX).unwrap()
    }

    /// `(self ∘ other)(x) = self(other(x))`.
    pub fn compose(&self, other: &Automorphism, context: &GroupContext) -> Result<Automorphism> {
        if self.rank() != other.rank() {
            return Err(Error::Domain("cannot compose automorphisms of different rank".into()));
        }
        let forward: Vec<Word> = other.forward.iter().map(|w| self.apply(w)).collect();
        let backward: Vec<Word> = self.backward.iter().map(|w| other.apply_inverse(w)).collect();
        let label = match (self.label(), other.label()) {
            (Some(a), Some(b)) => Some(format!("{a} {b}")),
            _ => None,
        };
        let composed = Automorphism {
            forward_table: letter_table(&forward),
            backward_table: letter_table(&backward),
            forward,
            backward,
            label,
        };
        composed.certify(context).map_err(|e| match e {
            Error::Certification { letter, detail } => Error::Certification {
                letter,
                detail: format!("internal inconsistency after composition: {detail}"),
            },
            other => other,
        })?;
        Ok(composed)
    }

    pub fn invert(&self) -> Automorphism {
        Automorphism {
            forward: self.backward.clone(),
            backward: self.forward.clone(),
            forward_table: self.backward_table.clone(),
            backward_table: self.forward_table.clone(),
            label: self.label.as_ref().map(|l| invert_label(l)),
        }
    }

    /// `self^n` for any integer `n`.
    pub fn power(&self, n: i64, context: &GroupContext) -> Result<Automorphism> {
        let base = if n < 0 { self.invert() } else { self.clone() };
        let mut acc = Automorphism::identity(context);
        for _ in 0..n.unsigned_abs() {
            acc = acc.compose(&base, context)?;
        }
        let label = self.label().map(|l| format!("{l}^{n}"));
        acc.label = label;
        Ok(acc)
    }

    pub fn transition_matrix(&self) -> TransitionMatrix {
        let n = self.rank();
        let mut entries = vec![vec![0u64; n]; n];
        for (x, img) in self.forward.iter().enumerate() {
            for l in img.letters() {
                entries[x][l.generator()] += 1;
            }
        }
        TransitionMatrix { entries }
    }

    pub fn format(&self, context: &GroupContext) -> String {
        let images: Vec<String> = self
            .forward
            .iter()
            .enumerate()
            .map(|(i, w)| format!("{}->{}", context.basis()[i], context.format_word(w)))
            .collect();
        images.join(", ")
    }
}

fn invert_label(label: &str) -> String {
    if let Some(base) = label.strip_suffix("^-1") {
        base.to_string()
    } else if label.contains(' ') {
        format!("({label})^-1")
    } else {
        format!("{label}^-1")
    }
}

/// Cyclic lengths of `φ^k(w)` for `k = 0..=n`.
pub fn orbit_growth(phi: &Automorphism, w: &Word, n: usize, cap: usize) -> Result<Vec<usize>> {
    if n == 0 {
        return Err(Error::Domain("orbit length must be at least 1".into()));
    }
    let mut core = w.to_cyclic().to_word();
    let mut out = Vec::with_capacity(n + 1);
    out.push(core.len());
    for _ in 0..n {
        core = phi.apply_capped(core.letters(), cap)?.to_cyclic().to_word();
        out.push(core.len());
    }
    Ok(out)
}

/// Letter transition matrix: entry `(x, y)` counts letters `y^{±1}` in the image of `x`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransitionMatrix {
    entries: Vec<Vec<u64>>,
}

impl TransitionMatrix {
    pub fn from_rows(entries: Vec<Vec<u64>>) -> Result<TransitionMatrix> {
        let n = entries.len();
        if n == 0 || entries.iter().any(|r| r.len() != n) {
            return Err(Error::Domain("transition matrix must be square and non-empty".into()));
        }
        Ok(TransitionMatrix { entries })
    }

    pub fn size(&self) -> usize {
        self.entries.len()
    }

    pub fn rows(&self) -> &[Vec<u64>] {
        &self.entries
    }

    pub fn get(&self, x: usize, y: usize) -> u64 {
        self.entries[x][y]
    }

    pub fn multiply(&self, other: &TransitionMatrix) -> TransitionMatrix {
        let n = self.size();
        let mut out = vec![vec![0u64; n]; n];
        for (i, row) in out.iter_mut().enumerate() {
            for (k, &a) in self.entries[i].iter().enumerate() {
                if a == 0 {
                    continue;
                }
                for (j, cell) in row.iter_mut().enumerate() {
                    *cell += a * other.entries[k][j];
                }
            }
        }
        TransitionMatrix { entries: out }
    }

    /// Some power up to `N²` is entrywise positive (Wielandt's bound is `(N-1)²+1`).
    pub fn is_primitive(&self) -> bool {
        let n = self.size();
        let pattern: Vec<Vec<bool>> = self
            .entries
            .iter()
            .map(|r| r.iter().map(|&v| v > 0).collect())
            .collect();
        let mut power = pattern.clone();
        for _ in 0..n * n {
            if power.iter().all(|r| r.iter().all(|&b| b)) {
                return true;
            }
            let mut next = vec![vec![false; n]; n];
            for i in 0..n {
                for k in 0..n {
                    if power[i][k] {
                        for j in 0..n {
                            next[i][j] |= pattern[k][j];
                        }
                    }
                }
            }
            power = next;
        }
        false
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EigenvalueEstimate {
    pub value: f64,
    pub iterations: usize,
    pub residual: f64,
    /// False when no power up to `N²` is positive; the estimate is then the
    /// dominant eigenvalue of a non-primitive matrix.
    pub primitive: bool,
}

pub const DEFAULT_EIGEN_TOL: f64 = 1e-10;
pub const DEFAULT_EIGEN_MAX_ITER: usize = 100_000;

/// Perron-Frobenius eigenvalue by power iteration.
///
/// Iterates on `M + I`, which has the same Perron eigenvector and no other
/// eigenvalue of the same modulus, so periodic (imprimitive) matrices converge
/// too. Stops once successive Rayleigh quotients differ by less than `tol`.
pub fn pf_eigenvalue(m: &TransitionMatrix, tol: f64, max_iter: usize) -> Result<EigenvalueEstimate> {
    let n = m.size();
    let a: Vec<Vec<f64>> = m
        .entries
        .iter()
        .enumerate()
        .map(|(i, r)| {
            r.iter()
                .enumerate()
                .map(|(j, &v)| v as f64 + if i == j { 1.0 } else { 0.0 })
                .collect()
        })
        .collect();
    let mul = |x: &[f64]| -> Vec<f64> {
        a.iter()
            .map(|r| r.iter().zip(x).map(|(p, q)| p * q).sum())
            .collect()
    };
    let norm = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    let mut last = f64::NAN;
    for it in 1..=max_iter {
        let y = mul(&x);
        let rq: f64 = x.iter().zip(&y).map(|(p, q)| p * q).sum();
        // stop on the eigen-residual rather than on the change in the quotient
        let residual = norm(&y.iter().zip(&x).map(|(p, q)| p - rq * q).collect::<Vec<_>>());
        last = rq - 1.0;
        if residual < tol {
            return Ok(EigenvalueEstimate {
                value: last,
                iterations: it,
                residual,
                primitive: m.is_primitive(),
            });
        }
        let ny = norm(&y);
        if ny == 0.0 {
            return Err(Error::Domain("matrix annihilates the iterate".into()));
        }
        x = y.iter().map(|v| v / ny).collect();
    }
    Err(Error::Convergence {
        iterations: max_iter,
        last_estimate: last,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    fn ctx2() -> Arc<GroupContext> {
        GroupContext::standard(2).unwrap()
    }

    fn fib(c: &GroupContext) -> Automorphism {
        Automorphism::parse(c, &[("a", "a b"), ("b", "a")], &[("a", "b"), ("b", "b' a")], Some("phi"))
            .unwrap()
    }

    fn plastic(c: &GroupContext) -> Automorphism {
        Automorphism::parse(
            c,
            &[("a", "b"), ("b", "c"), ("c", "a b")],
            &[("a", "c a'"), ("b", "a"), ("c", "b")],
            Some("theta"),
        )
        .unwrap()
    }

    #[test]
    fn apply_examples() {
        let c = ctx2();
        let phi = fib(&c);
        assert_eq!(phi.apply(&c.parse_word("b").unwrap()), c.parse_word("a").unwrap());
        assert_eq!(
            c.format_word(&phi.apply(&c.parse_word("b a'").unwrap())),
            "a b' a'"
        );
        let id = Automorphism::identity(&c);
        let w = c.parse_word("a b' a b b").unwrap();
        assert_eq!(id.apply(&w), w);
    }

    #[test]
    fn compose_examples() {
        let c = ctx2();
        let phi = fib(&c);
        assert!(phi.compose(&phi.invert(), &c).unwrap().is_identity());
        let phi2 = phi.compose(&phi, &c).unwrap();
        assert_eq!(c.format_word(&phi2.forward()[0]), "a b a");
        assert_eq!(c.format_word(&phi2.forward()[1]), "a b");
        let with_id = phi.compose(&Automorphism::identity(&c), &c).unwrap();
        assert_eq!(with_id.forward(), phi.forward());
        assert_eq!(with_id.backward(), phi.backward());
    }

    #[test]
    fn invert_examples() {
        let c = ctx2();
        let inv = fib(&c).invert();
        assert_eq!(c.format_word(&inv.forward()[0]), "b");
        assert_eq!(c.format_word(&inv.forward()[1]), "b' a");
        assert!(Automorphism::identity(&c).invert().is_identity());
        assert_eq!(inv.invert().forward(), fib(&c).forward());
        assert_eq!(inv.label(), Some("phi^-1"));
    }

    #[test]
    fn wrong_inverse_names_letter() {
        let c = ctx2();
        let err = Automorphism::parse(&c, &[("a", "a b"), ("b", "a")], &[("a", "b"), ("b", "a b'")], None)
            .unwrap_err();
        match err {
            Error::Certification { letter, .. } => assert_eq!(letter, "a"),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn power_and_negative_power() {
        let c = ctx2();
        let phi = fib(&c);
        let p3 = phi.power(3, &c).unwrap();
        let m3 = phi.power(-3, &c).unwrap();
        assert!(p3.compose(&m3, &c).unwrap().is_identity());
        assert_eq!(p3.forward()[0].len(), 5);
    }

    #[test]
    fn transition_matrix_examples() {
        let c = ctx2();
        assert_eq!(fib(&c).transition_matrix().rows(), &[vec![1, 1], vec![1, 0]]);
        let c3 = GroupContext::standard(3).unwrap();
        assert_eq!(
            plastic(&c3).transition_matrix().rows(),
            &[vec![0, 1, 0], vec![0, 0, 1], vec![1, 1, 0]]
        );
        assert_eq!(
            Automorphism::identity(&c).transition_matrix().rows(),
            &[vec![1, 0], vec![0, 1]]
        );
    }

    #[test]
    fn pf_examples() {
        let c = ctx2();
        let e = pf_eigenvalue(&fib(&c).transition_matrix(), DEFAULT_EIGEN_TOL, DEFAULT_EIGEN_MAX_ITER)
            .unwrap();
        // root of x^2 = x + 1
        assert!((e.value - 1.618_033_988_749_895).abs() < 1e-9, "{}", e.value);
        assert!(e.primitive);
        assert!(e.residual < 1e-8);

        let c3 = GroupContext::standard(3).unwrap();
        let e = pf_eigenvalue(&plastic(&c3).transition_matrix(), DEFAULT_EIGEN_TOL, DEFAULT_EIGEN_MAX_ITER)
            .unwrap();
        // real root of x^3 = x + 1
        assert!((e.value - 1.324_717_957_244_746).abs() < 1e-8, "{}", e.value);

        let e = pf_eigenvalue(
            &Automorphism::identity(&c).transition_matrix(),
            DEFAULT_EIGEN_TOL,
            DEFAULT_EIGEN_MAX_ITER,
        )
        .unwrap();
        assert!((e.value - 1.0).abs() < 1e-12);
        assert!(!e.primitive);
    }

    #[test]
    fn pf_reports_non_convergence() {
        let m = TransitionMatrix::from_rows(vec![vec![1, 1], vec![1, 0]]).unwrap();
        assert!(matches!(
            pf_eigenvalue(&m, 0.0, 5),
            Err(Error::Convergence { iterations: 5, .. })
        ));
    }

    #[test]
    fn orbit_growth_examples() {
        let c = ctx2();
        let phi = fib(&c);
        let a = c.parse_word("a").unwrap();
        assert_eq!(
            orbit_growth(&phi, &a, 6, DEFAULT_MAX_WORD_LETTERS).unwrap(),
            vec![1, 2, 3, 5, 8, 13, 21]
        );
        let id = Automorphism::identity(&c);
        let w = c.parse_word("a b' a").unwrap();
        assert_eq!(orbit_growth(&id, &w, 4, DEFAULT_MAX_WORD_LETTERS).unwrap(), vec![3; 5]);
        // ab' -> ab a' ~ b, then a, then ab
        let w = c.parse_word("a b'").unwrap();
        assert_eq!(orbit_growth(&phi, &w, 3, DEFAULT_MAX_WORD_LETTERS).unwrap(), vec![2, 1, 1, 2]);
        assert!(matches!(
            orbit_growth(&phi, &a, 30, 1000),
            Err(Error::Resource(_))
        ));
    }
}
