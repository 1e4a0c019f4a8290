//! Experiment configuration: a versioned TOML document (JSON accepted as an
//! alternative encoding of the same schema).

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde::Deserialize;

use crate::automorphism::{Automorphism, DEFAULT_EIGEN_MAX_ITER, DEFAULT_EIGEN_TOL, DEFAULT_MAX_WORD_LETTERS};
use crate::currents::{counting_current, linear_combination, uniform_current, uniform_surrogate, Q, TruncatedCurrent, DEFAULT_DEPTH};
use crate::dynamics::{Assertions, OrbitOptions, SubgroupSpec, DEFAULT_ITERATIONS, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::freegroup::{GroupContext, Word};
use crate::trees::MarkedMetricRose;

pub const CONFIG_VERSION: u32 = 1;
pub const MAX_DEPTH: usize = 8;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    version: u32,
    context: RawContext,
    #[serde(default)]
    automorphisms: BTreeMap<String, RawAutomorphism>,
    #[serde(default)]
    seeds: Vec<String>,
    depth: Option<usize>,
    #[serde(default)]
    tolerances: RawTolerances,
    #[serde(default)]
    budgets: RawBudgets,
    #[serde(default)]
    subgroups: BTreeMap<String, RawSubgroup>,
    #[serde(default)]
    experiments: RawExperiments,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawContext {
    rank: Option<usize>,
    basis: Option<Vec<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAutomorphism {
    images: Option<BTreeMap<String, String>>,
    inverse: Option<BTreeMap<String, String>>,
    /// Composition of named factors, e.g. `"h phi^2 h^-1"`.
    product: Option<String>,
    assert_iwip: Option<bool>,
    assert_atoroidal: Option<bool>,
    assert_train_track_on_rose: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTolerances {
    orbit: Option<f64>,
    eigen: Option<f64>,
    resolution: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBudgets {
    iterations: Option<usize>,
    eigen_max_iter: Option<usize>,
    max_word_letters: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSubgroup {
    generators: Vec<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<String>,
    format: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum RawNumber {
    Int(i64),
    Text(String),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawCurrent {
    Counting {
        word: String,
        apply: Option<String>,
        multiplier: Option<RawNumber>,
    },
    Uniform,
    Surrogate,
    Combination {
        terms: Vec<RawTerm>,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTerm {
    coefficient: RawNumber,
    current: RawCurrent,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTree {
    lengths: Option<Vec<RawNumber>>,
    marking: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExperiments {
    reduce: Option<RawWords>,
    apply: Option<RawApply>,
    weights: Option<RawWeights>,
    pair: Option<RawPair>,
    eigenvalue: Option<RawEigenvalue>,
    ns_orbit: Option<RawNsOrbit>,
    fixed_points: Option<RawFixedPoints>,
    decay: Option<RawDecay>,
    limit_set: Option<RawLimitSet>,
    dirichlet: Option<RawDirichlet>,
    discontinuity: Option<RawDiscontinuity>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWords {
    words: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawApply {
    automorphism: String,
    words: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWeights {
    words: Vec<String>,
    depth: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPair {
    #[serde(default)]
    trees: Vec<RawTree>,
    currents: Vec<RawCurrent>,
    depth: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEigenvalue {
    automorphisms: Option<Vec<String>>,
    seed: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNsOrbit {
    automorphism: String,
    seeds: Option<Vec<String>>,
    object: Option<String>,
    depth: Option<usize>,
    iterations: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFixedPoints {
    automorphism: String,
    seed: Option<String>,
    depth: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDecay {
    automorphism: String,
    seed: Option<String>,
    n0: usize,
    n: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLimitSet {
    subgroup: String,
    generator: Option<usize>,
    radius: usize,
    object: Option<String>,
    seed: Option<String>,
    resolution: Option<f64>,
    depth: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDirichlet {
    subgroup: String,
    generator: Option<usize>,
    radius: usize,
    current: RawCurrent,
    seed: Option<String>,
    depth: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDiscontinuity {
    subgroup: String,
    compact: Vec<RawCurrent>,
    radius: usize,
    epsilon: f64,
    depth: Option<usize>,
}

/// A named automorphism with its user assertions.
#[derive(Clone, Debug)]
pub struct NamedAutomorphism {
    pub name: String,
    pub map: Automorphism,
    pub assertions: Assertions,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ObjectChoice {
    Current,
    Tree,
    Both,
}

impl ObjectChoice {
    fn parse(text: Option<&str>, path: &str) -> Result<ObjectChoice> {
        match text.unwrap_or("both") {
            "current" => Ok(ObjectChoice::Current),
            "tree" => Ok(ObjectChoice::Tree),
            "both" => Ok(ObjectChoice::Both),
            other => Err(Error::config(path, format!("expected current, tree or both, got `{other}`"))),
        }
    }

    pub fn currents(self) -> bool {
        self != ObjectChoice::Tree
    }

    pub fn trees(self) -> bool {
        self != ObjectChoice::Current
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Csv,
    Both,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<OutputFormat> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            "both" => Ok(OutputFormat::Both),
            other => Err(Error::config("output.format", format!("expected json, csv or both, got `{other}`"))),
        }
    }
}

impl OutputFormat {
    pub fn json(self) -> bool {
        self != OutputFormat::Csv
    }

    pub fn csv(self) -> bool {
        self != OutputFormat::Json
    }
}

#[derive(Clone, Debug)]
pub struct Tolerances {
    pub orbit: f64,
    pub eigen: f64,
    pub resolution: f64,
}

#[derive(Clone, Debug)]
pub struct Budgets {
    pub iterations: usize,
    pub eigen_max_iter: usize,
    pub max_word_letters: usize,
}

#[derive(Clone, Debug)]
pub struct ApplyExperiment {
    pub automorphism: Automorphism,
    pub words: Vec<Word>,
}

#[derive(Clone, Debug)]
pub struct PairExperiment {
    pub trees: Vec<MarkedMetricRose>,
    pub currents: Vec<TruncatedCurrent>,
}

#[derive(Clone, Debug)]
pub struct EigenvalueExperiment {
    pub automorphisms: Vec<String>,
    pub seed: Word,
}

#[derive(Clone, Debug)]
pub struct NsOrbitExperiment {
    pub automorphism: String,
    pub seeds: Vec<Word>,
    pub object: ObjectChoice,
    pub depth: usize,
    pub iterations: usize,
}

#[derive(Clone, Debug)]
pub struct FixedPointsExperiment {
    pub automorphism: String,
    pub seed: Word,
    pub depth: usize,
}

#[derive(Clone, Debug)]
pub struct DecayExperiment {
    pub automorphism: String,
    pub seed: Word,
    pub n0: usize,
    pub n: usize,
}

#[derive(Clone, Debug)]
pub struct LimitSetExperiment {
    pub subgroup: String,
    pub generator: usize,
    pub radius: usize,
    pub object: ObjectChoice,
    pub seed: Word,
    pub resolution: f64,
    pub depth: usize,
}

#[derive(Clone, Debug)]
pub struct DirichletExperiment {
    pub subgroup: String,
    pub generator: usize,
    pub radius: usize,
    pub current: TruncatedCurrent,
    pub seed: Word,
}

#[derive(Clone, Debug)]
pub struct DiscontinuityExperiment {
    pub subgroup: String,
    pub compact: Vec<TruncatedCurrent>,
    pub radius: usize,
    pub epsilon: f64,
}

#[derive(Clone, Debug, Default)]
pub struct Experiments {
    pub reduce: Option<Vec<Word>>,
    pub apply: Option<ApplyExperiment>,
    pub weights: Option<(Vec<Word>, usize)>,
    pub pair: Option<PairExperiment>,
    pub eigenvalue: Option<EigenvalueExperiment>,
    pub ns_orbit: Option<NsOrbitExperiment>,
    pub fixed_points: Option<FixedPointsExperiment>,
    pub decay: Option<DecayExperiment>,
    pub limit_set: Option<LimitSetExperiment>,
    pub dirichlet: Option<DirichletExperiment>,
    pub discontinuity: Option<DiscontinuityExperiment>,
}

/// A fully resolved and validated configuration.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub context: Arc<GroupContext>,
    pub automorphisms: BTreeMap<String, NamedAutomorphism>,
    pub seeds: Vec<Word>,
    pub depth: usize,
    pub tolerances: Tolerances,
    pub budgets: Budgets,
    pub subgroups: BTreeMap<String, SubgroupSpec>,
    pub experiments: Experiments,
    pub output_dir: Option<String>,
    pub output_format: Option<OutputFormat>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(path.display().to_string(), format!("cannot read: {e}")))?;
        let json = path.extension().is_some_and(|e| e == "json");
        ExperimentConfig::parse(&text, json)
    }

    /// Parses TOML, or JSON when `json` is set or the text starts with `{`.
    pub fn parse(text: &str, json: bool) -> Result<ExperimentConfig> {
        let raw: RawConfig = if json || text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| Error::config("", format!("invalid JSON: {e}")))?
        } else {
            toml::from_str(text).map_err(|e| Error::config("", format!("invalid TOML: {}", e.message())))?
        };
        resolve(raw)
    }

    pub fn orbit_options(&self) -> OrbitOptions {
        OrbitOptions {
            iterations: self.budgets.iterations,
            tol: self.tolerances.orbit,
            max_word_letters: self.budgets.max_word_letters,
        }
    }

    pub fn automorphism(&self, name: &str) -> Option<&NamedAutomorphism> {
        self.automorphisms.get(name)
    }
}

/// Parses `"p/q"`, integers, and finite decimals exactly.
pub fn parse_rational(text: &str) -> Result<Q> {
    let t = text.trim();
    let bad = || Error::Malformed(format!("not a rational number: `{text}`"));
    if let Some((n, d)) = t.split_once('/') {
        let n = BigInt::from_str(n.trim()).map_err(|_| bad())?;
        let d = BigInt::from_str(d.trim()).map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(Q::new(n, d));
    }
    if let Some((int, frac)) = t.split_once('.') {
        if frac.is_empty() || !frac.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let negative = int.starts_with('-');
        let int_part = if int.is_empty() || int == "-" || int == "+" {
            BigInt::zero()
        } else {
            BigInt::from_str(int).map_err(|_| bad())?
        };
        let scale = BigInt::from(10u32).pow(frac.len() as u32);
        let frac_part = BigInt::from_str(frac).map_err(|_| bad())?;
        let magnitude = int_part.abs() * &scale + frac_part;
        let value = Q::new(magnitude, scale);
        return Ok(if negative { -value } else { value });
    }
    Ok(Q::from_integer(BigInt::from_str(t).map_err(|_| bad())?))
}

fn number(raw: &RawNumber, path: &str) -> Result<Q> {
    match raw {
        RawNumber::Int(i) => Ok(Q::from_integer(BigInt::from(*i))),
        RawNumber::Text(s) => parse_rational(s).map_err(|e| e.at(path)),
    }
}

fn word(context: &GroupContext, text: &str, path: &str) -> Result<Word> {
    context.parse_word(text).map_err(|e| e.at(path))
}

fn check_depth(depth: usize, path: &str) -> Result<usize> {
    if depth == 0 || depth > MAX_DEPTH {
        return Err(Error::config(path, format!("depth must be in 1..={MAX_DEPTH}, got {depth}")));
    }
    Ok(depth)
}

fn check_fraction(value: f64, path: &str) -> Result<f64> {
    if !(value > 0.0 && value < 1.0) {
        return Err(Error::config(path, format!("must lie in (0, 1), got {value}")));
    }
    Ok(value)
}

fn resolve(raw: RawConfig) -> Result<ExperimentConfig> {
    if raw.version != CONFIG_VERSION {
        return Err(Error::config(
            "version",
            format!("unsupported version {}, expected {CONFIG_VERSION}", raw.version),
        ));
    }
    let context = match (&raw.context.basis, raw.context.rank) {
        (Some(basis), rank) => {
            if let Some(r) = rank {
                if r != basis.len() {
                    return Err(Error::config(
                        "context.rank",
                        format!("rank {r} disagrees with {} basis names", basis.len()),
                    ));
                }
            }
            GroupContext::new(basis.clone()).map_err(|e| e.at("context.basis"))?
        }
        (None, Some(rank)) => GroupContext::standard(rank).map_err(|e| e.at("context.rank"))?,
        (None, None) => return Err(Error::config("context", "give `rank` or `basis`")),
    };

    let automorphisms = resolve_automorphisms(&context, &raw.automorphisms)?;
    let seeds = raw
        .seeds
        .iter()
        .enumerate()
        .map(|(i, s)| word(&context, s, &format!("seeds[{i}]")))
        .collect::<Result<Vec<_>>>()?;
    if let Some(i) = seeds.iter().position(Word::is_identity) {
        return Err(Error::config(format!("seeds[{i}]"), "seed words must be non-trivial"));
    }
    let depth = check_depth(raw.depth.unwrap_or(DEFAULT_DEPTH), "depth")?;

    let tolerances = Tolerances {
        orbit: check_fraction(raw.tolerances.orbit.unwrap_or(DEFAULT_TOL), "tolerances.orbit")?,
        eigen: check_fraction(raw.tolerances.eigen.unwrap_or(DEFAULT_EIGEN_TOL), "tolerances.eigen")?,
        resolution: check_fraction(raw.tolerances.resolution.unwrap_or(1e-3), "tolerances.resolution")?,
    };
    let budgets = Budgets {
        iterations: raw.budgets.iterations.unwrap_or(DEFAULT_ITERATIONS),
        eigen_max_iter: raw.budgets.eigen_max_iter.unwrap_or(DEFAULT_EIGEN_MAX_ITER),
        max_word_letters: raw.budgets.max_word_letters.unwrap_or(DEFAULT_MAX_WORD_LETTERS),
    };
    if budgets.iterations == 0 || budgets.iterations > 10_000 {
        return Err(Error::config("budgets.iterations", "must be in 1..=10000"));
    }
    if budgets.eigen_max_iter == 0 {
        return Err(Error::config("budgets.eigen_max_iter", "must be positive"));
    }
    if budgets.max_word_letters == 0 {
        return Err(Error::config("budgets.max_word_letters", "must be positive"));
    }

    let mut subgroups = BTreeMap::new();
    for (name, sg) in &raw.subgroups {
        let path = format!("subgroups.{name}");
        if sg.generators.is_empty() {
            return Err(Error::config(format!("{path}.generators"), "needs at least one generator"));
        }
        let gens = sg
            .generators
            .iter()
            .enumerate()
            .map(|(i, g)| {
                automorphisms
                    .get(g)
                    .map(|a| a.map.clone().with_label(g.clone()))
                    .ok_or_else(|| {
                        Error::config(format!("{path}.generators[{i}]"), format!("unknown automorphism `{g}`"))
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        subgroups.insert(name.clone(), SubgroupSpec::new(name.clone(), gens)?);
    }

    let env = Env {
        context: &context,
        automorphisms: &automorphisms,
        subgroups: &subgroups,
        seeds: &seeds,
        depth,
        resolution: tolerances.resolution,
        iterations: budgets.iterations,
    };
    let experiments = resolve_experiments(&env, &raw.experiments)?;

    let output_format = raw
        .output
        .format
        .as_deref()
        .map(OutputFormat::from_str)
        .transpose()?;

    Ok(ExperimentConfig {
        context,
        automorphisms,
        seeds,
        depth,
        tolerances,
        budgets,
        subgroups,
        experiments,
        output_dir: raw.output.dir,
        output_format,
    })
}

fn flag(value: Option<bool>, path: &str) -> Result<bool> {
    value.ok_or_else(|| Error::config(path, "assertion flags must be given explicitly"))
}

fn resolve_automorphisms(
    context: &Arc<GroupContext>,
    raw: &BTreeMap<String, RawAutomorphism>,
) -> Result<BTreeMap<String, NamedAutomorphism>> {
    let mut done: BTreeMap<String, NamedAutomorphism> = BTreeMap::new();
    let mut visiting: Vec<String> = Vec::new();
    for name in raw.keys() {
        resolve_one(context, raw, name, &mut done, &mut visiting)?;
    }
    Ok(done)
}

fn resolve_one(
    context: &Arc<GroupContext>,
    raw: &BTreeMap<String, RawAutomorphism>,
    name: &str,
    done: &mut BTreeMap<String, NamedAutomorphism>,
    visiting: &mut Vec<String>,
) -> Result<()> {
    if done.contains_key(name) {
        return Ok(());
    }
    let path = format!("automorphisms.{name}");
    if name == "id" || name.is_empty() || !name.chars().all(|c| c.is_alphanumeric() || c == '_') {
        return Err(Error::config(&path, "names must be alphanumeric and not `id`"));
    }
    if visiting.iter().any(|v| v == name) {
        return Err(Error::config(&path, "cyclic product definition"));
    }
    let spec = &raw[name];
    let assertions = Assertions {
        iwip: flag(spec.assert_iwip, &format!("{path}.assert_iwip"))?,
        atoroidal: flag(spec.assert_atoroidal, &format!("{path}.assert_atoroidal"))?,
        train_track_on_rose: flag(
            spec.assert_train_track_on_rose,
            &format!("{path}.assert_train_track_on_rose"),
        )?,
    };
    let map = match (&spec.images, &spec.inverse, &spec.product) {
        (Some(images), Some(inverse), None) => {
            let mut fwd = Vec::new();
            let mut bwd = Vec::new();
            for (which, table, out) in [("images", images, &mut fwd), ("inverse", inverse, &mut bwd)] {
                for letter in table.keys() {
                    if context.generator_index(letter).is_none() {
                        return Err(Error::config(
                            format!("{path}.{which}.{letter}"),
                            "unknown basis letter",
                        ));
                    }
                }
                for b in context.basis() {
                    let text = table.get(b).ok_or_else(|| {
                        Error::config(format!("{path}.{which}"), format!("missing image of `{b}`"))
                    })?;
                    out.push(word(context, text, &format!("{path}.{which}.{b}"))?);
                }
            }
            Automorphism::new(context, fwd, bwd, Some(name.to_string())).map_err(|e| e.at(&path))?
        }
        (None, None, Some(expr)) => {
            visiting.push(name.to_string());
            let refs = expression_names(expr);
            for r in &refs {
                if raw.contains_key(r) {
                    resolve_one(context, raw, r, done, visiting)?;
                }
            }
            visiting.pop();
            let lookup = |n: &str| done.get(n).map(|a| a.map.clone());
            evaluate_expression(context, expr, &lookup)
                .map_err(|e| e.at(&format!("{path}.product")))?
                .with_label(name.to_string())
        }
        (_, None, None) if spec.images.is_some() => {
            return Err(Error::config(format!("{path}.inverse"), "an `inverse` block is mandatory"));
        }
        _ => {
            return Err(Error::config(&path, "give either `images` with `inverse`, or `product`"));
        }
    };
    done.insert(
        name.to_string(),
        NamedAutomorphism {
            name: name.to_string(),
            map,
            assertions,
        },
    );
    Ok(())
}

fn expression_names(expr: &str) -> Vec<String> {
    expr.split_whitespace()
        .map(|f| f.split('^').next().unwrap_or("").to_string())
        .collect()
}

/// Evaluates `"f1^k1 f2^k2 ..."` as the composition `f1^k1 ∘ f2^k2 ∘ ...`.
pub fn evaluate_expression(
    context: &GroupContext,
    expr: &str,
    lookup: &dyn Fn(&str) -> Option<Automorphism>,
) -> Result<Automorphism> {
    let factors: Vec<&str> = expr.split_whitespace().collect();
    if factors.is_empty() {
        return Err(Error::config("", "empty automorphism expression"));
    }
    let mut acc = Automorphism::identity(context);
    for f in factors {
        let (name, exp) = match f.split_once('^') {
            Some((n, e)) => (
                n,
                e.parse::<i64>()
                    .map_err(|_| Error::config("", format!("bad exponent in `{f}`")))?,
            ),
            None => (f, 1),
        };
        if exp.abs() > 64 {
            return Err(Error::config("", format!("exponent in `{f}` exceeds 64")));
        }
        let base = if name == "id" {
            Automorphism::identity(context)
        } else {
            lookup(name).ok_or_else(|| Error::config("", format!("unknown automorphism `{name}`")))?
        };
        let factor = base.power(exp, context)?;
        acc = acc.compose(&factor, context)?;
    }
    Ok(acc.with_label(expr.split_whitespace().collect::<Vec<_>>().join(" ")))
}

struct Env<'a> {
    context: &'a Arc<GroupContext>,
    automorphisms: &'a BTreeMap<String, NamedAutomorphism>,
    subgroups: &'a BTreeMap<String, SubgroupSpec>,
    seeds: &'a [Word],
    depth: usize,
    resolution: f64,
    iterations: usize,
}

impl Env<'_> {
    fn expression(&self, expr: &str, path: &str) -> Result<Automorphism> {
        let lookup = |n: &str| self.automorphisms.get(n).map(|a| a.map.clone());
        evaluate_expression(self.context, expr, &lookup).map_err(|e| e.at(path))
    }

    fn named(&self, name: &str, path: &str) -> Result<String> {
        if self.automorphisms.contains_key(name) {
            Ok(name.to_string())
        } else {
            Err(Error::config(path, format!("unknown automorphism `{name}`")))
        }
    }

    fn subgroup(&self, name: &str, path: &str) -> Result<String> {
        if self.subgroups.contains_key(name) {
            Ok(name.to_string())
        } else {
            Err(Error::config(path, format!("unknown subgroup `{name}`")))
        }
    }

    fn generator(&self, subgroup: &str, index: Option<usize>, path: &str) -> Result<usize> {
        let i = index.unwrap_or(0);
        if i >= self.subgroups[subgroup].generators.len() {
            return Err(Error::config(path, format!("subgroup `{subgroup}` has no generator {i}")));
        }
        Ok(i)
    }

    fn seed(&self, text: Option<&str>, path: &str) -> Result<Word> {
        let w = match text {
            Some(t) => word(self.context, t, path)?,
            None => self
                .seeds
                .first()
                .cloned()
                .ok_or_else(|| Error::config(path, "no seed given and `seeds` is empty"))?,
        };
        if w.is_identity() {
            return Err(Error::config(path, "seed must be non-trivial"));
        }
        Ok(w)
    }

    fn words(&self, list: &[String], path: &str) -> Result<Vec<Word>> {
        list.iter()
            .enumerate()
            .map(|(i, s)| word(self.context, s, &format!("{path}[{i}]")))
            .collect()
    }

    fn depth(&self, d: Option<usize>, path: &str) -> Result<usize> {
        check_depth(d.unwrap_or(self.depth), path)
    }

    fn current(&self, raw: &RawCurrent, depth: usize, path: &str) -> Result<TruncatedCurrent> {
        match raw {
            RawCurrent::Counting {
                word: text,
                apply,
                multiplier,
            } => {
                let mut g = word(self.context, text, &format!("{path}.word"))?;
                if let Some(expr) = apply {
                    g = self.expression(expr, &format!("{path}.apply"))?.apply(&g);
                }
                let eta = counting_current(self.context, &g, depth).map_err(|e| e.at(&format!("{path}.word")))?;
                match multiplier {
                    Some(m) => {
                        let c = number(m, &format!("{path}.multiplier"))?;
                        if !c.is_positive() {
                            return Err(Error::config(format!("{path}.multiplier"), "must be positive"));
                        }
                        eta.scale(&c)
                    }
                    None => Ok(eta),
                }
            }
            RawCurrent::Uniform => uniform_current(self.context, depth),
            RawCurrent::Surrogate => uniform_surrogate(self.context, depth),
            RawCurrent::Combination { terms } => {
                if terms.is_empty() {
                    return Err(Error::config(format!("{path}.terms"), "needs at least one term"));
                }
                let parts = terms
                    .iter()
                    .enumerate()
                    .map(|(i, t)| {
                        let p = format!("{path}.terms[{i}]");
                        let c = number(&t.coefficient, &format!("{p}.coefficient"))?;
                        if c.is_negative() {
                            return Err(Error::config(format!("{p}.coefficient"), "must be non-negative"));
                        }
                        Ok((c, self.current(&t.current, depth, &format!("{p}.current"))?))
                    })
                    .collect::<Result<Vec<_>>>()?;
                let refs: Vec<(Q, &TruncatedCurrent)> = parts.iter().map(|(c, m)| (c.clone(), m)).collect();
                let mu = linear_combination(&refs).map_err(|e| e.at(path))?;
                if mu.is_zero() {
                    return Err(Error::config(path, "combination is the zero current"));
                }
                Ok(mu)
            }
        }
    }

    fn tree(&self, raw: &RawTree, path: &str) -> Result<MarkedMetricRose> {
        let lengths = match &raw.lengths {
            Some(ls) => ls
                .iter()
                .enumerate()
                .map(|(i, l)| number(l, &format!("{path}.lengths[{i}]")))
                .collect::<Result<Vec<_>>>()?,
            None => vec![Q::from_integer(1.into()); self.context.rank()],
        };
        let marking = match &raw.marking {
            Some(expr) => vec![self.expression(expr, &format!("{path}.marking"))?],
            None => Vec::new(),
        };
        let marking = marking.into_iter().filter(|m| !m.is_identity()).collect();
        MarkedMetricRose::new(self.context.clone(), lengths, marking).map_err(|e| e.at(path))
    }
}

fn resolve_experiments(env: &Env, raw: &RawExperiments) -> Result<Experiments> {
    let mut out = Experiments::default();
    if let Some(r) = &raw.reduce {
        out.reduce = Some(env.words(&r.words, "experiments.reduce.words")?);
    }
    if let Some(r) = &raw.apply {
        out.apply = Some(ApplyExperiment {
            automorphism: env.expression(&r.automorphism, "experiments.apply.automorphism")?,
            words: env.words(&r.words, "experiments.apply.words")?,
        });
    }
    if let Some(r) = &raw.weights {
        let depth = env.depth(r.depth, "experiments.weights.depth")?;
        let words = env.words(&r.words, "experiments.weights.words")?;
        if let Some(i) = words.iter().position(Word::is_identity) {
            return Err(Error::config(
                format!("experiments.weights.words[{i}]"),
                "counting currents need non-trivial words",
            ));
        }
        out.weights = Some((words, depth));
    }
    if let Some(r) = &raw.pair {
        let depth = env.depth(r.depth, "experiments.pair.depth")?;
        let mut trees = r
            .trees
            .iter()
            .enumerate()
            .map(|(i, t)| env.tree(t, &format!("experiments.pair.trees[{i}]")))
            .collect::<Result<Vec<_>>>()?;
        if trees.is_empty() {
            trees.push(MarkedMetricRose::cayley(env.context));
        }
        let currents = r
            .currents
            .iter()
            .enumerate()
            .map(|(i, c)| env.current(c, depth, &format!("experiments.pair.currents[{i}]")))
            .collect::<Result<Vec<_>>>()?;
        out.pair = Some(PairExperiment { trees, currents });
    }
    if let Some(r) = &raw.eigenvalue {
        let names = match &r.automorphisms {
            Some(list) => list
                .iter()
                .enumerate()
                .map(|(i, n)| env.named(n, &format!("experiments.eigenvalue.automorphisms[{i}]")))
                .collect::<Result<Vec<_>>>()?,
            None => env.automorphisms.keys().cloned().collect(),
        };
        let seed = match &r.seed {
            Some(s) => env.seed(Some(s), "experiments.eigenvalue.seed")?,
            None => env
                .seeds
                .first()
                .cloned()
                .unwrap_or_else(|| Word::letter(crate::freegroup::Letter::positive(0))),
        };
        out.eigenvalue = Some(EigenvalueExperiment {
            automorphisms: names,
            seed,
        });
    }
    if let Some(r) = &raw.ns_orbit {
        let p = "experiments.ns_orbit";
        let seeds = match &r.seeds {
            Some(list) => env.words(list, &format!("{p}.seeds"))?,
            None => env.seeds.to_vec(),
        };
        if seeds.is_empty() {
            return Err(Error::config(format!("{p}.seeds"), "no seeds given and `seeds` is empty"));
        }
        if let Some(i) = seeds.iter().position(Word::is_identity) {
            return Err(Error::config(format!("{p}.seeds[{i}]"), "seed must be non-trivial"));
        }
        let iterations = r.iterations.unwrap_or(env.iterations);
        if iterations == 0 || iterations > 10_000 {
            return Err(Error::config(format!("{p}.iterations"), "must be in 1..=10000"));
        }
        out.ns_orbit = Some(NsOrbitExperiment {
            automorphism: env.named(&r.automorphism, &format!("{p}.automorphism"))?,
            seeds,
            object: ObjectChoice::parse(r.object.as_deref(), &format!("{p}.object"))?,
            depth: env.depth(r.depth, &format!("{p}.depth"))?,
            iterations,
        });
    }
    if let Some(r) = &raw.fixed_points {
        let p = "experiments.fixed_points";
        out.fixed_points = Some(FixedPointsExperiment {
            automorphism: env.named(&r.automorphism, &format!("{p}.automorphism"))?,
            seed: env.seed(r.seed.as_deref(), &format!("{p}.seed"))?,
            depth: env.depth(r.depth, &format!("{p}.depth"))?,
        });
    }
    if let Some(r) = &raw.decay {
        let p = "experiments.decay";
        if r.n0 == 0 {
            return Err(Error::config(format!("{p}.n0"), "must be at least 1"));
        }
        if r.n < r.n0 {
            return Err(Error::config(format!("{p}.n"), "must be at least n0"));
        }
        out.decay = Some(DecayExperiment {
            automorphism: env.named(&r.automorphism, &format!("{p}.automorphism"))?,
            seed: env.seed(r.seed.as_deref(), &format!("{p}.seed"))?,
            n0: r.n0,
            n: r.n,
        });
    }
    if let Some(r) = &raw.limit_set {
        let p = "experiments.limit_set";
        let subgroup = env.subgroup(&r.subgroup, &format!("{p}.subgroup"))?;
        let resolution = match r.resolution {
            Some(x) => check_fraction(x, &format!("{p}.resolution"))?,
            None => env.resolution,
        };
        out.limit_set = Some(LimitSetExperiment {
            generator: env.generator(&subgroup, r.generator, &format!("{p}.generator"))?,
            subgroup,
            radius: r.radius,
            object: ObjectChoice::parse(r.object.as_deref(), &format!("{p}.object"))?,
            seed: env.seed(r.seed.as_deref(), &format!("{p}.seed"))?,
            resolution,
            depth: env.depth(r.depth, &format!("{p}.depth"))?,
        });
    }
    if let Some(r) = &raw.dirichlet {
        let p = "experiments.dirichlet";
        let subgroup = env.subgroup(&r.subgroup, &format!("{p}.subgroup"))?;
        let depth = env.depth(r.depth, &format!("{p}.depth"))?;
        let current = env.current(&r.current, depth, &format!("{p}.current"))?;
        if !current.is_pushable() {
            return Err(Error::config(
                format!("{p}.current"),
                "must be a counting current or a combination of them",
            ));
        }
        out.dirichlet = Some(DirichletExperiment {
            generator: env.generator(&subgroup, r.generator, &format!("{p}.generator"))?,
            subgroup,
            radius: r.radius,
            current,
            seed: env.seed(r.seed.as_deref(), &format!("{p}.seed"))?,
        });
    }
    if let Some(r) = &raw.discontinuity {
        let p = "experiments.discontinuity";
        let subgroup = env.subgroup(&r.subgroup, &format!("{p}.subgroup"))?;
        let depth = env.depth(r.depth, &format!("{p}.depth"))?;
        if r.compact.is_empty() {
            return Err(Error::config(format!("{p}.compact"), "K must be non-empty"));
        }
        let compact = r
            .compact
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let path = format!("{p}.compact[{i}]");
                let mu = env.current(c, depth, &path)?;
                if !mu.is_pushable() {
                    return Err(Error::config(path, "must be a counting current or a combination of them"));
                }
                Ok(mu)
            })
            .collect::<Result<Vec<_>>>()?;
        if r.epsilon.is_nan() || r.epsilon <= 0.0 {
            return Err(Error::config(format!("{p}.epsilon"), "must be positive"));
        }
        out.discontinuity = Some(DiscontinuityExperiment {
            subgroup,
            compact,
            radius: r.radius,
            epsilon: r.epsilon,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::currents::q_ratio;

    const FIB: &str = r#"
version = 1
seeds = ["a"]
depth = 3

[context]
basis = ["a", "b"]

[automorphisms.phi]
images = { a = "a b", b = "a" }
inverse = { a = "b", b = "b' a" }
assert_iwip = true
assert_atoroidal = false
assert_train_track_on_rose = true

[automorphisms.phi2]
product = "phi phi"
assert_iwip = true
assert_atoroidal = false
assert_train_track_on_rose = true

[subgroups.G]
generators = ["phi"]

[experiments.decay]
automorphism = "phi"
n0 = 10
n = 20
"#;

    fn err_path(text: &str) -> String {
        match ExperimentConfig::parse(text, false) {
            Err(Error::Config { path, .. }) => path,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn parses_and_composes() {
        let c = ExperimentConfig::parse(FIB, false).unwrap();
        assert_eq!(c.context.rank(), 2);
        assert_eq!(c.depth, 3);
        let phi2 = &c.automorphism("phi2").unwrap().map;
        assert_eq!(c.context.format_word(&phi2.forward()[0]), "a b a");
        assert_eq!(c.context.format_word(&phi2.forward()[1]), "a b");
        let d = c.experiments.decay.as_ref().unwrap();
        assert_eq!((d.n0, d.n), (10, 20));
        assert_eq!(c.context.format_word(&d.seed), "a");
        assert!(c.automorphism("phi").unwrap().assertions.iwip);
    }

    #[test]
    fn wrong_inverse_names_the_letter() {
        let text = FIB.replace(r#"inverse = { a = "b", b = "b' a" }"#, r#"inverse = { a = "b", b = "a b'" }"#);
        match ExperimentConfig::parse(&text, false) {
            Err(Error::Config { path, message }) => {
                assert_eq!(path, "automorphisms.phi");
                assert!(message.contains("letter `"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_subgroup_generator() {
        let text = FIB.replace(r#"generators = ["phi"]"#, r#"generators = ["phi", "psi"]"#);
        assert_eq!(err_path(&text), "subgroups.G.generators[1]");
    }

    #[test]
    fn flags_must_be_explicit() {
        let text = FIB.replacen("assert_atoroidal = false\n", "", 1);
        assert_eq!(err_path(&text), "automorphisms.phi.assert_atoroidal");
    }

    #[test]
    fn other_violations_carry_paths() {
        assert_eq!(err_path(&FIB.replace("version = 1", "version = 2")), "version");
        assert_eq!(err_path(&FIB.replace("depth = 3", "depth = 0")), "depth");
        assert_eq!(err_path(&FIB.replace("n = 20", "n = 5")), "experiments.decay.n");
        assert_eq!(err_path(&FIB.replace(r#"seeds = ["a"]"#, r#"seeds = ["a c"]"#)), "seeds[0]");
        assert_eq!(err_path(&FIB.replace(r#"product = "phi phi""#, r#"product = "phi chi""#)), "automorphisms.phi2.product");
        assert_eq!(err_path(&FIB.replace("[context]", "[contxt]")), "");
    }

    #[test]
    fn json_encoding_is_equivalent() {
        let json = r#"{"version": 1, "context": {"rank": 2},
            "automorphisms": {"phi": {"images": {"a": "a b", "b": "a"}, "inverse": {"a": "b", "b": "b' a"},
            "assert_iwip": true, "assert_atoroidal": false, "assert_train_track_on_rose": true}}}"#;
        let c = ExperimentConfig::parse(json, false).unwrap();
        let t = ExperimentConfig::parse(FIB, false).unwrap();
        assert_eq!(c.automorphism("phi").unwrap().map, t.automorphism("phi").unwrap().map);
    }

    #[test]
    fn rationals() {
        assert_eq!(parse_rational("3/6").unwrap(), q_ratio(1, 2));
        assert_eq!(parse_rational("1.25").unwrap(), q_ratio(5, 4));
        assert_eq!(parse_rational("-0.5").unwrap(), q_ratio(-1, 2));
        assert_eq!(parse_rational(" 7 ").unwrap(), q_ratio(7, 1));
        for bad in ["", "1/0", "a", "1.", "1.2.3", "1/2/3"] {
            assert!(parse_rational(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn currents_from_config() {
        let text = format!(
            "{FIB}\n[experiments.dirichlet]\nsubgroup = \"G\"\nradius = 2\ncurrent = {{ kind = \"counting\", word = \"a\", apply = \"phi^3\" }}\n"
        );
        let c = ExperimentConfig::parse(&text, false).unwrap();
        let d = c.experiments.dirichlet.unwrap();
        assert_eq!(d.current.level_one_mass(), q_ratio(5, 1));
        let bad = text.replace("kind = \"counting\", word = \"a\", apply = \"phi^3\"", "kind = \"uniform\"");
        assert_eq!(err_path(&bad), "experiments.dirichlet.current");
    }
}
