//! Word algebra in a free group over a fixed ordered basis.
//!
//! Letters are encoded so that the natural integer order is the total order
//! `a < a' < b < b' < ...` used for canonical rotations and shortlex listings.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A signed basis letter. Code `2i` is the i-th generator, `2i + 1` its inverse.
#[derive(Copy, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Letter(u16);

impl Letter {
    pub fn new(generator: usize, inverse: bool) -> Letter {
        Letter((generator as u16) << 1 | inverse as u16)
    }

    pub fn positive(generator: usize) -> Letter {
        Letter::new(generator, false)
    }

    pub fn negative(generator: usize) -> Letter {
        Letter::new(generator, true)
    }

    pub fn from_code(code: usize) -> Letter {
        Letter(code as u16)
    }

    #[inline]
    pub fn code(self) -> usize {
        self.0 as usize
    }

    #[inline]
    pub fn generator(self) -> usize {
        (self.0 >> 1) as usize
    }

    #[inline]
    pub fn is_inverse(self) -> bool {
        self.0 & 1 == 1
    }

    #[inline]
    pub fn inverse(self) -> Letter {
        Letter(self.0 ^ 1)
    }
}

/// Rank and letter names of the ambient free group.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupContext {
    basis: Vec<String>,
}

impl GroupContext {
    pub fn new<S: Into<String>>(basis: impl IntoIterator<Item = S>) -> Result<Arc<GroupContext>> {
        let basis: Vec<String> = basis.into_iter().map(Into::into).collect();
        if basis.len() < 2 {
            return Err(Error::Domain(format!(
                "rank must be at least 2, got {}",
                basis.len()
            )));
        }
        if basis.len() > (u16::MAX as usize) / 2 {
            return Err(Error::Domain("rank too large".into()));
        }
        for (i, name) in basis.iter().enumerate() {
            if name.is_empty() || !name.chars().all(|c| c.is_alphanumeric() || c == '_') {
                return Err(Error::Malformed(format!("invalid basis letter name `{name}`")));
            }
            if basis[..i].contains(name) {
                return Err(Error::Malformed(format!("duplicate basis letter name `{name}`")));
            }
        }
        Ok(Arc::new(GroupContext { basis }))
    }

    /// The context `a, b, c, ...` of the given rank (names `x1, x2, ...` past 26).
    pub fn standard(rank: usize) -> Result<Arc<GroupContext>> {
        if rank <= 26 {
            GroupContext::new((0..rank).map(|i| ((b'a' + i as u8) as char).to_string()))
        } else {
            GroupContext::new((1..=rank).map(|i| format!("x{i}")))
        }
    }

    #[inline]
    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[String] {
        &self.basis
    }

    /// Number of signed letters, `2N`.
    #[inline]
    pub fn alphabet_size(&self) -> usize {
        2 * self.basis.len()
    }

    /// All signed letters in canonical order.
    pub fn letters(&self) -> impl Iterator<Item = Letter> {
        (0..self.alphabet_size()).map(Letter::from_code)
    }

    pub fn generator_index(&self, name: &str) -> Option<usize> {
        self.basis.iter().position(|b| b == name)
    }

    pub fn letter_name(&self, letter: Letter) -> String {
        let base = &self.basis[letter.generator()];
        if letter.is_inverse() {
            format!("{base}'")
        } else {
            base.clone()
        }
    }

    pub fn contains(&self, letter: Letter) -> bool {
        letter.generator() < self.rank()
    }

    /// Freely reduces a sequence of `(generator index, sign)` pairs.
    pub fn reduce_signed(&self, raw: &[(usize, i8)]) -> Result<Word> {
        let mut letters = Vec::with_capacity(raw.len());
        for &(generator, sign) in raw {
            if generator >= self.rank() {
                return Err(Error::Malformed(format!(
                    "letter index {generator} out of range for rank {}",
                    self.rank()
                )));
            }
            let inverse = match sign {
                1 => false,
                -1 => true,
                s => return Err(Error::Malformed(format!("sign must be +1 or -1, got {s}"))),
            };
            letters.push(Letter::new(generator, inverse));
        }
        Ok(Word::reduce(letters))
    }

    /// Checks that every letter of `letters` belongs to this context.
    pub fn check_letters(&self, letters: &[Letter]) -> Result<()> {
        match letters.iter().find(|l| !self.contains(**l)) {
            Some(l) => Err(Error::Malformed(format!(
                "letter code {} out of range for rank {}",
                l.code(),
                self.rank()
            ))),
            None => Ok(()),
        }
    }

    /// Parses letters without reducing them.
    ///
    /// Letters are basis names (longest match wins), optionally followed by
    /// `'` or `^-1`; whitespace between letters is ignored.
    pub fn parse_letters(&self, text: &str) -> Result<Vec<Letter>> {
        let mut out = Vec::new();
        let mut rest = text;
        loop {
            rest = rest.trim_start();
            if rest.is_empty() {
                break;
            }
            let pos = text.len() - rest.len();
            let (generator, name_len) = self
                .basis
                .iter()
                .enumerate()
                .filter(|(_, name)| rest.starts_with(name.as_str()))
                .map(|(i, name)| (i, name.len()))
                .max_by_key(|&(_, len)| len)
                .ok_or_else(|| {
                    Error::Malformed(format!("unknown letter at byte {pos} in `{text}`"))
                })?;
            rest = &rest[name_len..];
            let inverse = if let Some(r) = rest.strip_prefix('\'') {
                rest = r;
                true
            } else if let Some(r) = rest.strip_prefix("^-1") {
                rest = r;
                true
            } else if rest.starts_with('^') {
                return Err(Error::Malformed(format!(
                    "unsupported exponent at byte {} in `{text}`",
                    text.len() - rest.len()
                )));
            } else {
                false
            };
            out.push(Letter::new(generator, inverse));
        }
        Ok(out)
    }

    pub fn parse_word(&self, text: &str) -> Result<Word> {
        Ok(Word::reduce(self.parse_letters(text)?))
    }

    pub fn format_letters(&self, letters: &[Letter]) -> String {
        let mut s = String::new();
        for (i, &l) in letters.iter().enumerate() {
            if i > 0 {
                s.push(' ');
            }
            s.push_str(&self.basis[l.generator()]);
            if l.is_inverse() {
                s.push('\'');
            }
        }
        s
    }

    pub fn format_word(&self, word: &Word) -> String {
        self.format_letters(word.letters())
    }

    /// All reduced words of exactly `len` letters, in shortlex order.
    pub fn reduced_words(&self, len: usize) -> Vec<Word> {
        let indexer = WordIndexer::new(self.rank(), len.max(1));
        if len == 0 {
            return vec![Word::identity()];
        }
        indexer.range_of_length(len).map(|i| indexer.word(i)).collect()
    }

    /// Canonical representatives of all non-trivial conjugacy classes of
    /// cyclic length at most `max_len`, ordered by length then rotation.
    pub fn cyclic_words_up_to(&self, max_len: usize) -> Vec<CyclicWord> {
        let mut out = Vec::new();
        for len in 1..=max_len {
            let mut level: Vec<CyclicWord> = self
                .reduced_words(len)
                .into_iter()
                .filter(|w| w.is_cyclically_reduced())
                .map(|w| CyclicWord::from_word(&w))
                .collect();
            level.sort();
            level.dedup();
            out.extend(level);
        }
        out
    }
}

/// A freely reduced word; the empty word is the identity.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct Word {
    letters: Vec<Letter>,
}

impl Word {
    pub fn identity() -> Word {
        Word { letters: Vec::new() }
    }

    pub fn letter(letter: Letter) -> Word {
        Word {
            letters: vec![letter],
        }
    }

    /// Free reduction with a stack.
    pub fn reduce(raw: impl IntoIterator<Item = Letter>) -> Word {
        let mut stack: Vec<Letter> = Vec::new();
        for l in raw {
            push_reduced(&mut stack, l);
        }
        Word { letters: stack }
    }

    /// Wraps letters already known to be freely reduced.
    pub(crate) fn from_reduced_unchecked(letters: Vec<Letter>) -> Word {
        debug_assert!(is_freely_reduced(&letters));
        Word { letters }
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn into_letters(self) -> Vec<Letter> {
        self.letters
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn inverse(&self) -> Word {
        Word {
            letters: self.letters.iter().rev().map(|l| l.inverse()).collect(),
        }
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut stack = self.letters.clone();
        for &l in &other.letters {
            push_reduced(&mut stack, l);
        }
        Word { letters: stack }
    }

    pub fn is_cyclically_reduced(&self) -> bool {
        match (self.letters.first(), self.letters.last()) {
            (Some(&f), Some(&l)) => self.letters.len() == 1 || f != l.inverse(),
            _ => true,
        }
    }

    fn strip_len(&self) -> usize {
        let n = self.letters.len();
        let mut strip = 0;
        while 2 * strip + 1 < n && self.letters[strip] == self.letters[n - 1 - strip].inverse() {
            strip += 1;
        }
        strip
    }

    fn rotated_core(&self, strip: usize) -> (CyclicWord, usize) {
        let core = &self.letters[strip..self.letters.len() - strip];
        let shift = least_rotation(core);
        let mut rotated = Vec::with_capacity(core.len());
        rotated.extend_from_slice(&core[shift..]);
        rotated.extend_from_slice(&core[..shift]);
        (CyclicWord { letters: rotated }, shift)
    }

    /// Returns `(core, conjugator)` with `self = conjugator · core · conjugator⁻¹`,
    /// where `core` is read from its canonical rotation.
    pub fn cyclic_reduce(&self) -> (CyclicWord, Word) {
        let strip = self.strip_len();
        let (core, shift) = self.rotated_core(strip);
        let conjugator = Word::reduce(
            self.letters[..strip]
                .iter()
                .chain(self.letters[strip..strip + shift].iter())
                .copied(),
        );
        (core, conjugator)
    }

    pub fn cyclic_length(&self) -> usize {
        self.letters.len() - 2 * self.strip_len()
    }

    pub fn to_cyclic(&self) -> CyclicWord {
        self.rotated_core(self.strip_len()).0
    }
}

#[inline]
pub(crate) fn push_reduced(stack: &mut Vec<Letter>, l: Letter) {
    if stack.last() == Some(&l.inverse()) {
        stack.pop();
    } else {
        stack.push(l);
    }
}

pub(crate) fn is_freely_reduced(letters: &[Letter]) -> bool {
    letters.windows(2).all(|w| w[0] != w[1].inverse())
}

/// Index of the lexicographically least rotation, O(n) time and O(1) space.
fn least_rotation(s: &[Letter]) -> usize {
    let n = s.len();
    if n < 2 {
        return 0;
    }
    let wrap = |x: usize| if x >= n { x - n } else { x };
    let (mut i, mut j, mut k) = (0usize, 1usize, 0usize);
    while i < n && j < n && k < n {
        let a = s[wrap(i + k)];
        let b = s[wrap(j + k)];
        if a == b {
            k += 1;
            continue;
        }
        if a > b {
            i += k + 1;
        } else {
            j += k + 1;
        }
        if i == j {
            j += 1;
        }
        k = 0;
    }
    i.min(j)
}

/// A cyclically reduced word in canonical (least) rotation: a conjugacy class.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct CyclicWord {
    letters: Vec<Letter>,
}

impl CyclicWord {
    pub fn from_word(word: &Word) -> CyclicWord {
        word.to_cyclic()
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// The canonical rotation read as an ordinary word.
    pub fn to_word(&self) -> Word {
        Word::from_reduced_unchecked(self.letters.clone())
    }

    pub fn inverse(&self) -> CyclicWord {
        CyclicWord::from_word(&self.to_word().inverse())
    }

    /// Letter at circle position `i` (taken modulo the length).
    #[inline]
    pub fn at(&self, i: usize) -> Letter {
        self.letters[i % self.letters.len()]
    }
}

/// Number of positions on the circle `w` where `v` can be read clockwise,
/// plus the same count for `v⁻¹`. Reads may wind around the circle.
pub fn count_occurrences(v: &Word, w: &CyclicWord) -> Result<u64> {
    if v.is_empty() {
        return Err(Error::Domain("cannot count occurrences of the empty word".into()));
    }
    if w.is_empty() {
        return Ok(0);
    }
    let inv = v.inverse();
    let reads_at = |pattern: &Word, start: usize| {
        pattern
            .letters()
            .iter()
            .enumerate()
            .all(|(j, &l)| w.at(start + j) == l)
    };
    let mut count = 0;
    for start in 0..w.len() {
        count += reads_at(v, start) as u64 + reads_at(&inv, start) as u64;
    }
    Ok(count)
}

pub fn word_length(w: &Word) -> usize {
    w.len()
}

pub fn cyclic_length(w: &CyclicWord) -> usize {
    w.len()
}

/// Dense shortlex numbering of all reduced words of length `1..=depth`.
///
/// The first letter contributes a digit in `0..2N`; every later letter a digit
/// in `0..2N-1` obtained by skipping the inverse of its predecessor. The index
/// order therefore coincides with shortlex order of the words.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WordIndexer {
    rank: usize,
    depth: usize,
    offsets: Vec<usize>,
}

impl WordIndexer {
    pub fn new(rank: usize, depth: usize) -> WordIndexer {
        let mut offsets = Vec::with_capacity(depth + 1);
        let mut total = 0usize;
        let mut level = 2 * rank;
        offsets.push(0);
        for _ in 0..depth {
            total += level;
            offsets.push(total);
            level *= 2 * rank - 1;
        }
        WordIndexer {
            rank,
            depth,
            offsets,
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Total number of reduced words of length `1..=depth`.
    pub fn len(&self) -> usize {
        self.offsets[self.depth]
    }

    pub fn is_empty(&self) -> bool {
        self.depth == 0
    }

    pub fn range_of_length(&self, len: usize) -> std::ops::Range<usize> {
        self.offsets[len - 1]..self.offsets[len]
    }

    #[inline]
    pub fn offset(&self, len: usize) -> usize {
        self.offsets[len - 1]
    }

    #[inline]
    pub fn next_digit(prev: Letter, cur: Letter) -> usize {
        let skip = prev.inverse().code();
        let c = cur.code();
        if c > skip {
            c - 1
        } else {
            c
        }
    }

    /// Index of `letters`, or `None` if empty, too long, or not reduced.
    pub fn index(&self, letters: &[Letter]) -> Option<usize> {
        if letters.is_empty() || letters.len() > self.depth {
            return None;
        }
        let mut code = letters[0].code();
        if letters[0].generator() >= self.rank {
            return None;
        }
        for w in letters.windows(2) {
            if w[1] == w[0].inverse() || w[1].generator() >= self.rank {
                return None;
            }
            code = code * (2 * self.rank - 1) + Self::next_digit(w[0], w[1]);
        }
        Some(self.offsets[letters.len() - 1] + code)
    }

    pub fn length_of(&self, index: usize) -> usize {
        self.offsets[1..].iter().position(|&o| index < o).unwrap() + 1
    }

    pub fn letters(&self, index: usize) -> Vec<Letter> {
        let len = self.length_of(index);
        let mut code = index - self.offsets[len - 1];
        let base = 2 * self.rank - 1;
        let mut digits = vec![0usize; len];
        for d in digits.iter_mut().skip(1).rev() {
            *d = code % base;
            code /= base;
        }
        digits[0] = code;
        let mut out = Vec::with_capacity(len);
        out.push(Letter::from_code(digits[0]));
        for &d in &digits[1..] {
            let skip = out.last().unwrap().inverse().code();
            let c = if d >= skip { d + 1 } else { d };
            out.push(Letter::from_code(c));
        }
        out
    }

    pub fn word(&self, index: usize) -> Word {
        Word::from_reduced_unchecked(self.letters(index))
    }

    /// Index of the inverse of the word at `index`.
    pub fn inverse_index(&self, index: usize) -> usize {
        let inv: Vec<Letter> = self.letters(index).iter().rev().map(|l| l.inverse()).collect();
        self.index(&inv).unwrap()
    }
}

/// A word bound to its context, for display.
pub struct Display<'a> {
    pub context: &'a GroupContext,
    pub letters: &'a [Letter],
}

impl fmt::Display for Display<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.context.format_letters(self.letters))
    }
}
