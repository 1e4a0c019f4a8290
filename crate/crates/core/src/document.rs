//! Versioned JSON documents for currents and trees. Rationals are written as
//! `"p/q"` strings so that documents round-trip exactly.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::automorphism::Automorphism;
use crate::config::parse_rational;
use crate::currents::{linear_combination, uniform_current, CurrentKind, Q, TruncatedCurrent};
use crate::error::{Error, Result};
use crate::freegroup::GroupContext;
use crate::trees::MarkedMetricRose;

pub const DOCUMENT_VERSION: u32 = 1;
const CURRENT_FORMAT: &str = "freedyn-current";
const TREE_FORMAT: &str = "freedyn-tree";

pub fn format_rational(q: &Q) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CurrentDoc {
    format: String,
    version: u32,
    basis: Vec<String>,
    depth: usize,
    kind: KindDoc,
    /// Non-zero weights keyed by word, in shortlex order.
    weights: Vec<(String, String)>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum KindDoc {
    Rational { word: String, multiplier: String },
    Uniform,
    Combination { terms: Vec<TermDoc> },
    Derived,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TermDoc {
    coefficient: String,
    kind: KindDoc,
}

fn kind_doc(context: &GroupContext, kind: &CurrentKind) -> KindDoc {
    match kind {
        CurrentKind::Rational { word, multiplier } => KindDoc::Rational {
            word: context.format_word(word),
            multiplier: format_rational(multiplier),
        },
        CurrentKind::Uniform => KindDoc::Uniform,
        CurrentKind::Combination(terms) => KindDoc::Combination {
            terms: terms
                .iter()
                .map(|(c, k)| TermDoc {
                    coefficient: format_rational(c),
                    kind: kind_doc(context, k),
                })
                .collect(),
        },
        CurrentKind::Derived => KindDoc::Derived,
    }
}

fn kind_from_doc(context: &GroupContext, doc: &KindDoc) -> Result<CurrentKind> {
    Ok(match doc {
        KindDoc::Rational { word, multiplier } => CurrentKind::Rational {
            word: context.parse_word(word)?.to_cyclic().to_word(),
            multiplier: parse_rational(multiplier)?,
        },
        KindDoc::Uniform => CurrentKind::Uniform,
        KindDoc::Combination { terms } => CurrentKind::Combination(
            terms
                .iter()
                .map(|t| Ok((parse_rational(&t.coefficient)?, kind_from_doc(context, &t.kind)?)))
                .collect::<Result<Vec<_>>>()?,
        ),
        KindDoc::Derived => CurrentKind::Derived,
    })
}

/// Rebuilds the weights a kind determines, when it determines them.
fn weights_for_kind(context: &Arc<GroupContext>, depth: usize, kind: &CurrentKind) -> Result<Option<TruncatedCurrent>> {
    Ok(match kind {
        CurrentKind::Rational { word, multiplier } => {
            if word.is_identity() {
                return Err(Error::Malformed("rational kind with the trivial word".into()));
            }
            Some(crate::currents::counting_current(context, word, depth)?.scale(multiplier)?)
        }
        CurrentKind::Uniform => Some(uniform_current(context, depth)?),
        CurrentKind::Combination(terms) => {
            let mut parts = Vec::new();
            for (c, k) in terms {
                match weights_for_kind(context, depth, k)? {
                    Some(mu) => parts.push((c.clone(), mu)),
                    None => return Ok(None),
                }
            }
            let refs: Vec<(Q, &TruncatedCurrent)> = parts.iter().map(|(c, m)| (c.clone(), m)).collect();
            Some(linear_combination(&refs)?)
        }
        CurrentKind::Derived => None,
    })
}

pub fn current_to_json(mu: &TruncatedCurrent) -> String {
    let context = mu.context();
    let indexer = mu.indexer();
    let doc = CurrentDoc {
        format: CURRENT_FORMAT.into(),
        version: DOCUMENT_VERSION,
        basis: context.basis().to_vec(),
        depth: mu.depth(),
        kind: kind_doc(context, mu.kind()),
        weights: mu
            .weights()
            .iter()
            .map(|(&i, w)| (context.format_word(&indexer.word(i)), format_rational(w)))
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("documents serialize")
}

/// Parses a current document. Weights are checked against the invariants and,
/// for kinds that determine them, against a recomputation.
pub fn current_from_json(text: &str) -> Result<TruncatedCurrent> {
    let doc: CurrentDoc =
        serde_json::from_str(text).map_err(|e| Error::Malformed(format!("current document: {e}")))?;
    if doc.format != CURRENT_FORMAT {
        return Err(Error::Malformed(format!("expected format `{CURRENT_FORMAT}`, got `{}`", doc.format)));
    }
    if doc.version != DOCUMENT_VERSION {
        return Err(Error::Malformed(format!("unsupported document version {}", doc.version)));
    }
    if doc.depth == 0 || doc.depth > crate::config::MAX_DEPTH {
        return Err(Error::Malformed(format!("depth {} out of range", doc.depth)));
    }
    let context = GroupContext::new(doc.basis.clone())?;
    let indexer = crate::freegroup::WordIndexer::new(context.rank(), doc.depth);
    let mut weights = BTreeMap::new();
    for (word, value) in &doc.weights {
        let letters = context.parse_letters(word)?;
        let i = indexer
            .index(&letters)
            .ok_or_else(|| Error::Malformed(format!("weight key `{word}` is not a reduced word of length 1..={}", doc.depth)))?;
        let w = parse_rational(value)?;
        if weights.insert(i, w).is_some() {
            return Err(Error::Malformed(format!("weight key `{word}` repeated")));
        }
    }
    weights.retain(|_, w: &mut Q| !num_traits::Zero::is_zero(w));
    let kind = kind_from_doc(&context, &doc.kind)?;
    let mu = TruncatedCurrent::from_weights(context.clone(), doc.depth, weights, kind.clone())?;
    if let Some(expected) = weights_for_kind(&context, doc.depth, &kind)? {
        if expected.weights() != mu.weights() {
            return Err(Error::Malformed("weights disagree with the declared kind".into()));
        }
    }
    Ok(mu)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct AutomorphismDoc {
    pub label: Option<String>,
    pub images: BTreeMap<String, String>,
    pub inverse: BTreeMap<String, String>,
}

pub(crate) fn automorphism_doc(context: &GroupContext, phi: &Automorphism) -> AutomorphismDoc {
    let table = |ws: &[crate::freegroup::Word]| {
        context
            .basis()
            .iter()
            .zip(ws)
            .map(|(b, w)| (b.clone(), context.format_word(w)))
            .collect()
    };
    AutomorphismDoc {
        label: phi.label().map(str::to_string),
        images: table(phi.forward()),
        inverse: table(phi.backward()),
    }
}

fn automorphism_from_doc(context: &GroupContext, doc: &AutomorphismDoc) -> Result<Automorphism> {
    let images: Vec<(&str, &str)> = doc.images.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect();
    let inverse: Vec<(&str, &str)> = doc.inverse.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect();
    Automorphism::parse(context, &images, &inverse, doc.label.as_deref())
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TreeDoc {
    format: String,
    version: u32,
    basis: Vec<String>,
    edge_lengths: Vec<String>,
    /// Factors `m_0, m_1, ...` of the marking `m_0 ∘ m_1 ∘ ...`.
    marking: Vec<AutomorphismDoc>,
}

pub fn tree_to_json(tree: &MarkedMetricRose) -> String {
    let context = tree.context();
    let doc = TreeDoc {
        format: TREE_FORMAT.into(),
        version: DOCUMENT_VERSION,
        basis: context.basis().to_vec(),
        edge_lengths: tree.edge_lengths().iter().map(format_rational).collect(),
        marking: tree.marking().iter().map(|m| automorphism_doc(context, m)).collect(),
    };
    serde_json::to_string_pretty(&doc).expect("documents serialize")
}

pub fn tree_from_json(text: &str) -> Result<MarkedMetricRose> {
    let doc: TreeDoc =
        serde_json::from_str(text).map_err(|e| Error::Malformed(format!("tree document: {e}")))?;
    if doc.format != TREE_FORMAT {
        return Err(Error::Malformed(format!("expected format `{TREE_FORMAT}`, got `{}`", doc.format)));
    }
    if doc.version != DOCUMENT_VERSION {
        return Err(Error::Malformed(format!("unsupported document version {}", doc.version)));
    }
    let context = GroupContext::new(doc.basis.clone())?;
    let lengths = doc
        .edge_lengths
        .iter()
        .map(|s| parse_rational(s))
        .collect::<Result<Vec<_>>>()?;
    let marking = doc
        .marking
        .iter()
        .map(|m| automorphism_from_doc(&context, m))
        .collect::<Result<Vec<_>>>()?;
    MarkedMetricRose::new(context, lengths, marking)
}
