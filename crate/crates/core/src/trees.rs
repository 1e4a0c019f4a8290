//! Marked metric roses: the slice of unprojectivized Outer space on which the
//! dynamics experiments run.

use std::sync::Arc;

use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::automorphism::Automorphism;
use crate::currents::{push_rational_capped, Q, TruncatedCurrent};
use crate::error::{Error, Result};
use crate::freegroup::{CyclicWord, GroupContext, Letter, Word};

/// A rose with positive rational edge lengths and a marking.
///
/// The marking is kept as a product of certified factors
/// `m_0 ∘ m_1 ∘ ... ∘ m_k`; the empty product is the identity. Acting on the
/// right by `φ` appends `φ`, so the marking applies `φ` first.
#[derive(Clone, Debug, PartialEq)]
pub struct MarkedMetricRose {
    context: Arc<GroupContext>,
    edge_lengths: Vec<Q>,
    marking: Vec<Automorphism>,
}

impl MarkedMetricRose {
    pub fn new(
        context: Arc<GroupContext>,
        edge_lengths: Vec<Q>,
        marking: Vec<Automorphism>,
    ) -> Result<MarkedMetricRose> {
        if edge_lengths.len() != context.rank() {
            return Err(Error::Domain(format!(
                "expected {} edge lengths, got {}",
                context.rank(),
                edge_lengths.len()
            )));
        }
        if let Some(l) = edge_lengths.iter().find(|l| !l.is_positive()) {
            return Err(Error::Domain(format!("edge lengths must be positive, got {l}")));
        }
        if marking.iter().any(|m| m.rank() != context.rank()) {
            return Err(Error::Domain("marking has the wrong rank".into()));
        }
        Ok(MarkedMetricRose {
            context,
            edge_lengths,
            marking,
        })
    }

    /// The Cayley tree of the basis: unit lengths, identity marking.
    pub fn cayley(context: &Arc<GroupContext>) -> MarkedMetricRose {
        MarkedMetricRose {
            context: context.clone(),
            edge_lengths: vec![Q::one(); context.rank()],
            marking: Vec::new(),
        }
    }

    pub fn context(&self) -> &Arc<GroupContext> {
        &self.context
    }

    pub fn edge_lengths(&self) -> &[Q] {
        &self.edge_lengths
    }

    pub fn marking(&self) -> &[Automorphism] {
        &self.marking
    }

    pub fn has_identity_marking(&self) -> bool {
        self.marking.iter().all(Automorphism::is_identity)
    }

    /// `c·T`.
    pub fn scale(&self, c: &Q) -> Result<MarkedMetricRose> {
        if !c.is_positive() {
            return Err(Error::Domain("tree scaling factor must be positive".into()));
        }
        Ok(MarkedMetricRose {
            context: self.context.clone(),
            edge_lengths: self.edge_lengths.iter().map(|l| l * c).collect(),
            marking: self.marking.clone(),
        })
    }

    /// `ψ(g)` for the marking `ψ`, cyclically reduced.
    pub fn marked_image(&self, g: &Word, cap: usize) -> Result<CyclicWord> {
        let mut core = g.to_cyclic().to_word();
        for m in self.marking.iter().rev() {
            core = m.apply_capped(core.letters(), cap)?.to_cyclic().to_word();
        }
        Ok(core.to_cyclic())
    }

    fn metric_length(&self, letters: &[Letter]) -> Q {
        let mut counts = vec![0u64; self.context.rank()];
        for l in letters {
            counts[l.generator()] += 1;
        }
        counts
            .iter()
            .zip(&self.edge_lengths)
            .map(|(&c, l)| l * Q::from_integer(c.into()))
            .fold(Q::zero(), |a, b| a + b)
    }

    pub fn translation_length(&self, g: &Word) -> Q {
        self.translation_length_capped(g, usize::MAX).unwrap()
    }

    pub fn translation_length_capped(&self, g: &Word, cap: usize) -> Result<Q> {
        Ok(self.metric_length(self.marked_image(g, cap)?.letters()))
    }

    /// `Tφ`: same edge lengths, marking `ψ ∘ φ`.
    pub fn act(&self, phi: &Automorphism) -> MarkedMetricRose {
        let mut marking = self.marking.clone();
        if !phi.is_identity() {
            marking.push(phi.clone());
        }
        MarkedMetricRose {
            context: self.context.clone(),
            edge_lengths: self.edge_lengths.clone(),
            marking,
        }
    }

    /// Collapses the marking into a single automorphism.
    pub fn marking_automorphism(&self) -> Result<Automorphism> {
        let mut acc = Automorphism::identity(&self.context);
        for m in &self.marking {
            acc = acc.compose(m, &self.context)?;
        }
        Ok(acc)
    }
}

/// Intersection form on the rose slice.
///
/// For the identity marking this is `Σ_x ℓ(x) ⟨x, μ⟩`; otherwise `μ` is first
/// pushed through the marking, which requires a rational current.
pub fn pair(tree: &MarkedMetricRose, mu: &TruncatedCurrent) -> Result<Q> {
    pair_capped(tree, mu, usize::MAX)
}

pub fn pair_capped(tree: &MarkedMetricRose, mu: &TruncatedCurrent, cap: usize) -> Result<Q> {
    if tree.context.rank() != mu.context().rank() {
        return Err(Error::Domain("tree and current have different rank".into()));
    }
    if tree.has_identity_marking() {
        return Ok(weighted_level_one(&tree.edge_lengths, mu));
    }
    if !mu.is_pushable() {
        return Err(Error::Unsupported(
            "pairing a non-rational current with a non-trivially marked rose".into(),
        ));
    }
    let mut pushed = mu.clone();
    for m in tree.marking.iter().rev() {
        pushed = push_rational_capped(m, &pushed, cap)?;
    }
    Ok(weighted_level_one(&tree.edge_lengths, &pushed))
}

fn weighted_level_one(lengths: &[Q], mu: &TruncatedCurrent) -> Q {
    lengths
        .iter()
        .enumerate()
        .map(|(i, l)| l * mu.weight_at(Letter::positive(i).code()))
        .fold(Q::zero(), |a, b| a + b)
}

/// Translation lengths of a tree on a fixed list of conjugacy classes.
#[derive(Clone, Debug, PartialEq)]
pub struct LengthSpectrum {
    pub test_set: Vec<CyclicWord>,
    pub values: Vec<Q>,
    /// Largest value, or 1 if all values vanish.
    pub scale: Q,
}

impl LengthSpectrum {
    pub fn normalized(&self) -> Vec<f64> {
        self.values
            .iter()
            .map(|v| (v / &self.scale).to_f64().unwrap_or(f64::NAN))
            .collect()
    }
}

pub fn length_spectrum(tree: &MarkedMetricRose, test_set: &[CyclicWord]) -> Result<LengthSpectrum> {
    length_spectrum_capped(tree, test_set, usize::MAX)
}

pub fn length_spectrum_capped(
    tree: &MarkedMetricRose,
    test_set: &[CyclicWord],
    cap: usize,
) -> Result<LengthSpectrum> {
    if test_set.is_empty() {
        return Err(Error::Domain("length spectrum needs a non-empty test set".into()));
    }
    let values = test_set
        .iter()
        .map(|g| tree.translation_length_capped(&g.to_word(), cap))
        .collect::<Result<Vec<_>>>()?;
    let scale = spectrum_scale(&values);
    Ok(LengthSpectrum {
        test_set: test_set.to_vec(),
        values,
        scale,
    })
}

pub(crate) fn spectrum_scale(values: &[Q]) -> Q {
    values
        .iter()
        .max()
        .filter(|m| m.is_positive())
        .cloned()
        .unwrap_or_else(Q::one)
}

/// L¹ distance between normalized spectra over the same test set.
pub fn spectrum_distance(a: &LengthSpectrum, b: &LengthSpectrum) -> Result<f64> {
    if a.test_set != b.test_set {
        return Err(Error::Domain("spectra over different test sets".into()));
    }
    let total: Q = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (x / &a.scale - y / &b.scale).abs())
        .fold(Q::zero(), |s, t| s + t);
    Ok(total.to_f64().unwrap_or(f64::NAN))
}

/// All conjugacy classes of cyclic length at most 3, followed by the given
/// seeds' classes not already listed.
pub fn default_test_set(context: &GroupContext, seeds: &[Word]) -> Vec<CyclicWord> {
    let mut set = context.cyclic_words_up_to(3);
    for s in seeds {
        let c = s.to_cyclic();
        if !c.is_empty() && !set.contains(&c) {
            set.push(c);
        }
    }
    set
}
