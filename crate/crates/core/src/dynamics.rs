//! Orbit iteration, fixed-point approximation, and the group-ball experiments
//! (limit sets, Dirichlet minima, near returns).

use std::sync::Arc;

use num_traits::ToPrimitive;
use rayon::prelude::*;

use crate::automorphism::{Automorphism, DEFAULT_MAX_WORD_LETTERS};
use crate::currents::{counting_current, projective_distance, push_rational_capped, Q, TruncatedCurrent};
use crate::error::{Error, Result};
use crate::freegroup::{CyclicWord, GroupContext, Letter, Word};
use crate::trees::{
    length_spectrum_capped, pair_capped, spectrum_distance, LengthSpectrum, MarkedMetricRose,
};

pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_ITERATIONS: usize = 60;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrbitOptions {
    /// Iteration budget `n`.
    pub iterations: usize,
    /// Convergence threshold on the step distance.
    pub tol: f64,
    pub max_word_letters: usize,
}

impl Default for OrbitOptions {
    fn default() -> Self {
        OrbitOptions {
            iterations: DEFAULT_ITERATIONS,
            tol: DEFAULT_TOL,
            max_word_letters: DEFAULT_MAX_WORD_LETTERS,
        }
    }
}

/// User assertions attached to an automorphism; never verified here.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Assertions {
    pub iwip: bool,
    pub atoroidal: bool,
    pub train_track_on_rose: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OrbitKind {
    Current,
    Tree,
}

/// Trace of an orbit `μ, φμ, φ²μ, ...` or `T, Tφ, Tφ², ...`.
///
/// Iteration stops early once a step distance falls below the tolerance.
#[derive(Clone, Debug, PartialEq)]
pub struct OrbitReport {
    pub kind: OrbitKind,
    /// Names of the vector coordinates (words for currents, test-set classes
    /// for trees).
    pub coordinates: Vec<String>,
    pub iterates: Vec<Vec<f64>>,
    /// `c_k`: the reciprocal of the unnormalized size of iterate `k`.
    pub normalizers: Vec<f64>,
    pub step_distances: Vec<f64>,
    pub growth_ratios: Vec<f64>,
    pub converged: bool,
    pub lambda_estimate: f64,
    pub assertions: Option<Assertions>,
}

impl OrbitReport {
    pub fn iterations(&self) -> usize {
        self.step_distances.len()
    }

    pub fn final_step(&self) -> Option<f64> {
        self.step_distances.last().copied()
    }
}

/// A current orbit together with its last iterate as an exact rational current.
#[derive(Clone, Debug)]
pub struct CurrentOrbit {
    pub report: OrbitReport,
    /// `η_{Φ^k(seed)}` for the last computed `k`.
    pub last: TruncatedCurrent,
}

#[derive(Clone, Debug)]
pub struct TreeOrbit {
    pub report: OrbitReport,
    pub last: MarkedMetricRose,
    pub last_spectrum: LengthSpectrum,
}

fn ratio(a: usize, b: usize) -> f64 {
    a as f64 / b as f64
}

/// Iterates `φ` on `η_seed` at the given depth.
pub fn iterate_current(
    phi: &Automorphism,
    context: &Arc<GroupContext>,
    seed: &Word,
    depth: usize,
    options: &OrbitOptions,
) -> Result<CurrentOrbit> {
    let mut core = seed.to_cyclic();
    if core.is_empty() {
        return Err(Error::Domain("orbit seed must be non-trivial".into()));
    }
    let mut current = counting_current(context, &core.to_word(), depth)?;
    let indexer = current.indexer();
    let coordinates = (0..indexer.len())
        .map(|i| context.format_word(&indexer.word(i)))
        .collect();
    let mut report = OrbitReport {
        kind: OrbitKind::Current,
        coordinates,
        iterates: vec![current.normalized_vector()?],
        normalizers: vec![1.0 / core.len() as f64],
        step_distances: Vec::new(),
        growth_ratios: Vec::new(),
        converged: false,
        lambda_estimate: f64::NAN,
        assertions: None,
    };
    for _ in 0..options.iterations {
        let image = phi
            .apply_capped(core.letters(), options.max_word_letters)?
            .to_cyclic();
        let next = crate::currents::counting_current_cyclic(context, &image, depth, crate::currents::q(1));
        let step = projective_distance(&current, &next)?;
        report.growth_ratios.push(ratio(image.len(), core.len()));
        report.normalizers.push(1.0 / image.len() as f64);
        report.iterates.push(next.normalized_vector()?);
        report.step_distances.push(step);
        core = image;
        current = next;
        if step < options.tol {
            report.converged = true;
            break;
        }
    }
    report.lambda_estimate = report.growth_ratios.last().copied().unwrap_or(1.0);
    Ok(CurrentOrbit {
        report,
        last: current,
    })
}

/// Iterates the right action `T ↦ Tφ` and records normalized length spectra.
pub fn iterate_tree(
    phi: &Automorphism,
    seed: &MarkedMetricRose,
    test_set: &[CyclicWord],
    options: &OrbitOptions,
) -> Result<TreeOrbit> {
    let context = seed.context().clone();
    let cap = options.max_word_letters;
    let mut tree = seed.clone();
    let mut spectrum = length_spectrum_capped(&tree, test_set, cap)?;
    // images Φ^k(g) of the test classes, pushed one step at a time
    let mut images: Vec<CyclicWord> = test_set.to_vec();
    let coordinates = test_set
        .iter()
        .map(|g| context.format_letters(g.letters()))
        .collect();
    let mut report = OrbitReport {
        kind: OrbitKind::Tree,
        coordinates,
        iterates: vec![spectrum.normalized()],
        normalizers: vec![1.0 / spectrum.scale.to_f64().unwrap_or(f64::NAN)],
        step_distances: Vec::new(),
        growth_ratios: Vec::new(),
        converged: false,
        lambda_estimate: f64::NAN,
        assertions: None,
    };
    for _ in 0..options.iterations {
        images = images
            .iter()
            .map(|g| Ok(phi.apply_capped(g.letters(), cap)?.to_cyclic()))
            .collect::<Result<Vec<_>>>()?;
        let next_tree = tree.act(phi);
        let values = images
            .iter()
            .map(|g| seed.translation_length_capped(&g.to_word(), cap))
            .collect::<Result<Vec<_>>>()?;
        let scale = crate::trees::spectrum_scale(&values);
        let next = LengthSpectrum {
            test_set: test_set.to_vec(),
            values,
            scale,
        };
        let step = spectrum_distance(&spectrum, &next)?;
        report
            .growth_ratios
            .push((&next.scale / &spectrum.scale).to_f64().unwrap_or(f64::NAN));
        report
            .normalizers
            .push(1.0 / next.scale.to_f64().unwrap_or(f64::NAN));
        report.iterates.push(next.normalized());
        report.step_distances.push(step);
        tree = next_tree;
        spectrum = next;
        if step < options.tol {
            report.converged = true;
            break;
        }
    }
    report.lambda_estimate = report.growth_ratios.last().copied().unwrap_or(1.0);
    Ok(TreeOrbit {
        report,
        last: tree,
        last_spectrum: spectrum,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Plus,
    Minus,
}

impl Side {
    pub fn name(self) -> &'static str {
        match self {
            Side::Plus => "plus",
            Side::Minus => "minus",
        }
    }
}

#[derive(Clone, Debug)]
pub enum FixedObject {
    /// Normalized rational current `η_{Φ^k(seed)} / ||Φ^k(seed)||`.
    Current(TruncatedCurrent),
    /// Rose scaled so that its spectrum has maximum 1, with that spectrum.
    Tree {
        tree: MarkedMetricRose,
        spectrum: LengthSpectrum,
    },
}

#[derive(Clone, Debug)]
pub struct FixedPointApprox {
    pub side: Side,
    pub object: FixedObject,
    /// Final step distance of the orbit.
    pub quality: f64,
    pub iterations_used: usize,
    /// Distance between the approximation and its image under `φ` (plus) or
    /// `φ⁻¹` (minus).
    pub eigen_residual: f64,
    pub lambda_estimate: f64,
}

#[derive(Clone, Debug)]
pub struct FixedPoints {
    pub current_plus: FixedPointApprox,
    pub current_minus: FixedPointApprox,
    pub tree_plus: FixedPointApprox,
    pub tree_minus: FixedPointApprox,
    pub orbits: Vec<OrbitReport>,
}

fn converged_or_fail(report: &OrbitReport) -> Result<()> {
    if report.converged {
        Ok(())
    } else {
        Err(Error::Convergence {
            iterations: report.iterations(),
            last_estimate: report.final_step().unwrap_or(f64::NAN),
        })
    }
}

/// Current-side pole approximation: plus iterates `φ`, minus iterates `φ⁻¹`.
pub fn current_fixed_point(
    phi: &Automorphism,
    context: &Arc<GroupContext>,
    seed: &Word,
    depth: usize,
    side: Side,
    options: &OrbitOptions,
) -> Result<(FixedPointApprox, OrbitReport)> {
    let map = match side {
        Side::Plus => phi.clone(),
        Side::Minus => phi.invert(),
    };
    let orbit = iterate_current(&map, context, seed, depth, options)?;
    let approx = current_pole(&map, &orbit, side, options.max_word_letters)?;
    Ok((approx, orbit.report))
}

/// Turns a converged current orbit of `map` into a pole approximation.
pub fn current_pole(map: &Automorphism, orbit: &CurrentOrbit, side: Side, cap: usize) -> Result<FixedPointApprox> {
    converged_or_fail(&orbit.report)?;
    let approx = orbit.last.normalize()?;
    let image = push_rational_capped(map, &approx, cap)?;
    let residual = projective_distance(&image, &approx)?;
    Ok(FixedPointApprox {
        side,
        object: FixedObject::Current(approx),
        quality: orbit.report.final_step().unwrap_or(0.0),
        iterations_used: orbit.report.iterations(),
        eigen_residual: residual,
        lambda_estimate: orbit.report.lambda_estimate,
    })
}

pub fn tree_fixed_point(
    phi: &Automorphism,
    seed: &MarkedMetricRose,
    test_set: &[CyclicWord],
    side: Side,
    options: &OrbitOptions,
) -> Result<(FixedPointApprox, OrbitReport)> {
    let map = match side {
        Side::Plus => phi.clone(),
        Side::Minus => phi.invert(),
    };
    let orbit = iterate_tree(&map, seed, test_set, options)?;
    let approx = tree_pole(&map, &orbit, test_set, side, options.max_word_letters)?;
    Ok((approx, orbit.report))
}

/// Turns a converged tree orbit of `map` into a unit-scale pole approximation.
pub fn tree_pole(
    map: &Automorphism,
    orbit: &TreeOrbit,
    test_set: &[CyclicWord],
    side: Side,
    cap: usize,
) -> Result<FixedPointApprox> {
    converged_or_fail(&orbit.report)?;
    let tree = orbit.last.scale(&orbit.last_spectrum.scale.recip())?;
    let spectrum = length_spectrum_capped(&tree, test_set, cap)?;
    let moved = length_spectrum_capped(&tree.act(map), test_set, cap)?;
    let residual = spectrum_distance(&moved, &spectrum)?;
    Ok(FixedPointApprox {
        side,
        object: FixedObject::Tree { tree, spectrum },
        quality: orbit.report.final_step().unwrap_or(0.0),
        iterations_used: orbit.report.iterations(),
        eigen_residual: residual,
        lambda_estimate: orbit.report.lambda_estimate,
    })
}

/// Approximates `[μ±]` and `[T±]`; the four orbits run in parallel.
pub fn approximate_fixed_points(
    phi: &Automorphism,
    context: &Arc<GroupContext>,
    seed: &Word,
    depth: usize,
    test_set: &[CyclicWord],
    options: &OrbitOptions,
) -> Result<FixedPoints> {
    let rose = MarkedMetricRose::cayley(context);
    let (currents, trees) = rayon::join(
        || {
            rayon::join(
                || current_fixed_point(phi, context, seed, depth, Side::Plus, options),
                || current_fixed_point(phi, context, seed, depth, Side::Minus, options),
            )
        },
        || {
            rayon::join(
                || tree_fixed_point(phi, &rose, test_set, Side::Plus, options),
                || tree_fixed_point(phi, &rose, test_set, Side::Minus, options),
            )
        },
    );
    let (cp, cm) = currents;
    let (tp, tm) = trees;
    let (current_plus, r1) = cp?;
    let (current_minus, r2) = cm?;
    let (tree_plus, r3) = tp?;
    let (tree_minus, r4) = tm?;
    Ok(FixedPoints {
        current_plus,
        current_minus,
        tree_plus,
        tree_minus,
        orbits: vec![r1, r2, r3, r4],
    })
}

/// Growth-based estimate of `λ`: the last ratio of cyclic lengths along
/// `Φ^k(seed)`, stopping early rather than exceeding the letter cap.
pub fn growth_estimate(phi: &Automorphism, seed: &Word, n: usize, cap: usize) -> Result<(Vec<usize>, f64)> {
    let mut core = seed.to_cyclic();
    if core.is_empty() {
        return Err(Error::Domain("growth seed must be non-trivial".into()));
    }
    let mut lengths = vec![core.len()];
    for _ in 0..n {
        match phi.apply_capped(core.letters(), cap) {
            Ok(image) => core = image.to_cyclic(),
            Err(Error::Resource(_)) => break,
            Err(e) => return Err(e),
        }
        lengths.push(core.len());
    }
    let estimate = match lengths.as_slice() {
        [.., a, b] => ratio(*b, *a),
        _ => 1.0,
    };
    Ok((lengths, estimate))
}

/// `⟨T_A φ^k, η_{Φ^{-n0}(seed)}⟩ = ||Φ^{k-n0}(seed)||` for `k = 0..=n`.
#[derive(Clone, Debug, PartialEq)]
pub struct PairingDecay {
    pub n0: usize,
    pub values: Vec<(usize, u64)>,
    /// `value(k+1) / value(k)`.
    pub ratios: Vec<f64>,
    /// The first `window` ratios, deep in the contraction phase.
    pub head_ratios: Vec<f64>,
    /// The last `window` ratios, deep in the expansion phase.
    pub tail_ratios: Vec<f64>,
    pub valley: usize,
}

impl PairingDecay {
    /// Non-increasing up to the valley, non-decreasing after it.
    pub fn is_unimodal(&self) -> bool {
        let v: Vec<u64> = self.values.iter().map(|&(_, x)| x).collect();
        let m = self.valley;
        v[..=m].windows(2).all(|p| p[0] >= p[1]) && v[m..].windows(2).all(|p| p[0] <= p[1])
    }
}

pub fn pairing_decay(
    phi: &Automorphism,
    seed: &Word,
    n0: usize,
    n: usize,
    cap: usize,
) -> Result<PairingDecay> {
    if n0 == 0 || n < n0 {
        return Err(Error::Domain("pairing decay needs 1 <= n0 <= n".into()));
    }
    let mut core = seed.to_cyclic();
    if core.is_empty() {
        return Err(Error::Domain("pairing decay seed must be non-trivial".into()));
    }
    let inverse = phi.invert();
    for _ in 0..n0 {
        core = inverse.apply_capped(core.letters(), cap)?.to_cyclic();
    }
    let mut values = vec![(0, core.len() as u64)];
    for k in 1..=n {
        core = phi.apply_capped(core.letters(), cap)?.to_cyclic();
        values.push((k, core.len() as u64));
    }
    let ratios: Vec<f64> = values
        .windows(2)
        .map(|p| p[1].1 as f64 / p[0].1 as f64)
        .collect();
    let window = (n0.min(n - n0) / 4).max(1);
    let head_ratios = ratios[..window.min(n0)].to_vec();
    let tail_ratios = ratios[ratios.len() - window.min(n - n0).max(1).min(ratios.len())..].to_vec();
    let valley = values
        .iter()
        .enumerate()
        .min_by_key(|(i, &(_, v))| (v, i.abs_diff(n0)))
        .map(|(i, _)| i)
        .unwrap();
    Ok(PairingDecay {
        n0,
        values,
        ratios,
        head_ratios,
        tail_ratios,
        valley,
    })
}

/// A finitely generated subgroup, evaluated freely on its generators.
#[derive(Clone, Debug)]
pub struct SubgroupSpec {
    pub name: String,
    pub generators: Vec<Automorphism>,
}

impl SubgroupSpec {
    pub fn new(name: impl Into<String>, generators: Vec<Automorphism>) -> Result<SubgroupSpec> {
        if generators.is_empty() {
            return Err(Error::Domain("subgroup needs at least one generator".into()));
        }
        Ok(SubgroupSpec {
            name: name.into(),
            generators,
        })
    }

    fn generator_label(&self, i: usize) -> String {
        self.generators[i]
            .label()
            .map(str::to_string)
            .unwrap_or_else(|| format!("g{i}"))
    }

    /// `id` for the identity, otherwise space-separated generator labels with
    /// `^-1` marking inverses.
    pub fn label(&self, word: &[Letter]) -> String {
        if word.is_empty() {
            return "id".to_string();
        }
        word.iter()
            .map(|l| {
                let base = self.generator_label(l.generator());
                if l.is_inverse() {
                    format!("{base}^-1")
                } else {
                    base
                }
            })
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// The map for a single generator letter.
    pub fn letter_map(&self, l: Letter) -> Automorphism {
        let g = &self.generators[l.generator()];
        if l.is_inverse() {
            g.invert()
        } else {
            g.clone()
        }
    }

    /// Reduced words of length `<= radius` in the generators, in shortlex
    /// order (`s < s⁻¹ < t < ...`), grouped by length.
    pub fn ball(&self, radius: usize) -> Vec<Vec<Vec<Letter>>> {
        let alphabet: Vec<Letter> = (0..self.generators.len())
            .flat_map(|i| [Letter::positive(i), Letter::negative(i)])
            .collect();
        let mut levels = vec![vec![Vec::new()]];
        for _ in 0..radius {
            let prev = levels.last().unwrap();
            let mut next = Vec::new();
            for &s in &alphabet {
                for w in prev {
                    if w.first() == Some(&s.inverse()) {
                        continue;
                    }
                    let mut g = vec![s];
                    g.extend_from_slice(w);
                    next.push(g);
                }
            }
            levels.push(next);
        }
        levels
    }
}

/// One ball level: each group word with the pushed currents.
type PushedLevel = Vec<(Vec<Letter>, Vec<TruncatedCurrent>)>;

/// `g·μ` for every `μ` in `currents` and every `g` in the ball, computed level
/// by level as `(s·g')μ = s(g'μ)`. Levels are ordered as in [`SubgroupSpec::ball`].
fn push_over_ball(
    group: &SubgroupSpec,
    currents: &[TruncatedCurrent],
    radius: usize,
    cap: usize,
) -> Result<Vec<PushedLevel>> {
    let ball = group.ball(radius);
    let maps: Vec<Automorphism> = (0..group.generators.len())
        .flat_map(|i| {
            [
                group.letter_map(Letter::positive(i)),
                group.letter_map(Letter::negative(i)),
            ]
        })
        .collect();
    let mut levels = vec![vec![(Vec::new(), currents.to_vec())]];
    for level in ball.into_iter().skip(1) {
        let prev = levels.last().unwrap();
        let computed = level
            .into_par_iter()
            .map(|g| {
                let tail = &g[1..];
                let (_, base) = prev
                    .iter()
                    .find(|(w, _)| w.as_slice() == tail)
                    .expect("ball levels are prefix closed");
                let map = &maps[g[0].code()];
                let pushed = base
                    .iter()
                    .map(|mu| push_rational_capped(map, mu, cap))
                    .collect::<Result<Vec<_>>>()?;
                Ok((g, pushed))
            })
            .collect::<Result<Vec<_>>>()?;
        levels.push(computed);
    }
    Ok(levels)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DistanceStats {
    pub count: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

#[derive(Clone, Debug)]
pub struct LimitSetPoint {
    pub label: String,
    pub length: usize,
    pub coordinates: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct LimitSetSample {
    pub kind: OrbitKind,
    pub coordinate_names: Vec<String>,
    pub points: Vec<LimitSetPoint>,
    /// Pairwise distances among the retained points.
    pub diameter_stats: DistanceStats,
    /// Orbit points visited before deduplication.
    pub visited: usize,
}

fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

fn distance_stats(points: &[Vec<f64>], metric: impl Fn(&[f64], &[f64]) -> f64) -> DistanceStats {
    let mut d = Vec::new();
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            d.push(metric(&points[i], &points[j]));
        }
    }
    if d.is_empty() {
        return DistanceStats {
            count: 0,
            min: 0.0,
            max: 0.0,
            mean: 0.0,
        };
    }
    DistanceStats {
        count: d.len(),
        min: d.iter().cloned().fold(f64::INFINITY, f64::min),
        max: d.iter().cloned().fold(0.0, f64::max),
        mean: d.iter().sum::<f64>() / d.len() as f64,
    }
}

/// Keeps points in order, dropping any within `resolution` of one already kept.
fn dedupe(points: Vec<LimitSetPoint>, resolution: f64, metric: impl Fn(&[f64], &[f64]) -> f64) -> Vec<LimitSetPoint> {
    let mut kept: Vec<LimitSetPoint> = Vec::new();
    for p in points {
        if kept.iter().all(|k| metric(&k.coordinates, &p.coordinates) >= resolution) {
            kept.push(p);
        }
    }
    kept
}

/// Current-side distance on dense normalized vectors, matching
/// [`projective_distance`] (one term per pair `{v, v⁻¹}`).
fn current_metric(a: &[f64], b: &[f64]) -> f64 {
    l1(a, b) / 2.0
}

/// Orbit of the attracting current `μ̂+` under the radius ball of `group`.
pub fn sample_limit_set_currents(
    group: &SubgroupSpec,
    pole: &TruncatedCurrent,
    radius: usize,
    resolution: f64,
    cap: usize,
) -> Result<LimitSetSample> {
    let context = pole.context().clone();
    let indexer = pole.indexer();
    let levels = push_over_ball(group, std::slice::from_ref(pole), radius, cap)?;
    let mut points = Vec::new();
    for (len, level) in levels.iter().enumerate() {
        for (g, pushed) in level {
            points.push(LimitSetPoint {
                label: group.label(g),
                length: len,
                coordinates: pushed[0].normalized_vector()?,
            });
        }
    }
    let visited = points.len();
    let kept = dedupe(points, resolution, current_metric);
    let coords: Vec<Vec<f64>> = kept.iter().map(|p| p.coordinates.clone()).collect();
    Ok(LimitSetSample {
        kind: OrbitKind::Current,
        coordinate_names: (0..indexer.len())
            .map(|i| context.format_word(&indexer.word(i)))
            .collect(),
        points: kept,
        diameter_stats: distance_stats(&coords, current_metric),
        visited,
    })
}

/// Orbit of the tree pole `T̂+` under the radius ball, acting on the right.
pub fn sample_limit_set_trees(
    group: &SubgroupSpec,
    pole: &MarkedMetricRose,
    test_set: &[CyclicWord],
    radius: usize,
    resolution: f64,
    cap: usize,
) -> Result<LimitSetSample> {
    let context = pole.context().clone();
    let ball = group.ball(radius);
    let words: Vec<(usize, Vec<Letter>)> = ball
        .into_iter()
        .enumerate()
        .flat_map(|(len, level)| level.into_iter().map(move |g| (len, g)))
        .collect();
    let points = words
        .into_par_iter()
        .map(|(len, g)| {
            let mut tree = pole.clone();
            for &s in &g {
                tree = tree.act(&group.letter_map(s));
            }
            let spectrum = length_spectrum_capped(&tree, test_set, cap)?;
            Ok(LimitSetPoint {
                label: group.label(&g),
                length: len,
                coordinates: spectrum.normalized(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let visited = points.len();
    let kept = dedupe(points, resolution, l1);
    let coords: Vec<Vec<f64>> = kept.iter().map(|p| p.coordinates.clone()).collect();
    Ok(LimitSetSample {
        kind: OrbitKind::Tree,
        coordinate_names: test_set
            .iter()
            .map(|g| context.format_letters(g.letters()))
            .collect(),
        points: kept,
        diameter_stats: distance_stats(&coords, l1),
        visited,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct DirichletRow {
    pub label: String,
    pub length: usize,
    pub plus: Q,
    pub minus: Q,
    pub total: Q,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DirichletResult {
    pub minimizer: String,
    pub min_value: Q,
    /// Rows in shortlex order of group words.
    pub table: Vec<DirichletRow>,
}

/// Minimizes `⟨T̂+, gμ⟩ + ⟨T̂−, gμ⟩` over the radius ball; ties go to the
/// shortlex-first word.
pub fn dirichlet_check(
    mu: &TruncatedCurrent,
    poles: (&MarkedMetricRose, &MarkedMetricRose),
    group: &SubgroupSpec,
    radius: usize,
    cap: usize,
) -> Result<DirichletResult> {
    if !mu.is_pushable() {
        return Err(Error::Unsupported(
            "Dirichlet check needs a rational current or a combination of them".into(),
        ));
    }
    let levels = push_over_ball(group, std::slice::from_ref(mu), radius, cap)?;
    let flat: Vec<(usize, &Vec<Letter>, &TruncatedCurrent)> = levels
        .iter()
        .enumerate()
        .flat_map(|(len, level)| level.iter().map(move |(g, c)| (len, g, &c[0])))
        .collect();
    let table = flat
        .into_par_iter()
        .map(|(len, g, gm)| {
            let plus = pair_capped(poles.0, gm, cap)?;
            let minus = pair_capped(poles.1, gm, cap)?;
            Ok(DirichletRow {
                label: group.label(g),
                length: len,
                total: &plus + &minus,
                plus,
                minus,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let best = table
        .iter()
        .reduce(|best, row| if row.total < best.total { row } else { best })
        .unwrap();
    Ok(DirichletResult {
        minimizer: best.label.clone(),
        min_value: best.total.clone(),
        table,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReturnRow {
    pub label: String,
    pub length: usize,
    /// `min over μ, ν in K of d(gμ, ν)`.
    pub distance: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiscontinuityTable {
    pub epsilon: f64,
    /// `(word length, words of that length, words with distance < epsilon)`.
    pub counts: Vec<(usize, usize, usize)>,
    pub rows: Vec<ReturnRow>,
}

impl DiscontinuityTable {
    /// Recounts the same rows at another threshold.
    pub fn with_epsilon(&self, epsilon: f64) -> DiscontinuityTable {
        let mut counts: Vec<(usize, usize, usize)> =
            self.counts.iter().map(|&(l, total, _)| (l, total, 0)).collect();
        for row in &self.rows {
            if row.distance < epsilon {
                counts[row.length].2 += 1;
            }
        }
        DiscontinuityTable {
            epsilon,
            counts,
            rows: self.rows.clone(),
        }
    }

    pub fn is_non_increasing(&self) -> bool {
        self.counts.windows(2).all(|p| p[0].2 >= p[1].2)
    }

    /// First word length with no near returns.
    pub fn first_empty_length(&self) -> Option<usize> {
        self.counts.iter().find(|c| c.2 == 0).map(|c| c.0)
    }
}

pub fn discontinuity_experiment(
    group: &SubgroupSpec,
    compact: &[TruncatedCurrent],
    radius: usize,
    epsilon: f64,
    cap: usize,
) -> Result<DiscontinuityTable> {
    if compact.is_empty() {
        return Err(Error::Domain("the compact set K must be non-empty".into()));
    }
    if let Some(mu) = compact.iter().find(|mu| !mu.is_pushable()) {
        return Err(Error::Unsupported(format!(
            "elements of K must be rational combinations, got {:?}",
            mu.kind()
        )));
    }
    let levels = push_over_ball(group, compact, radius, cap)?;
    let mut rows = Vec::new();
    for (len, level) in levels.iter().enumerate() {
        let level_rows = level
            .par_iter()
            .map(|(g, pushed)| {
                let mut best = f64::INFINITY;
                for gm in pushed {
                    for nu in compact {
                        best = best.min(projective_distance(gm, nu)?);
                    }
                }
                Ok(ReturnRow {
                    label: group.label(g),
                    length: len,
                    distance: best,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.extend(level_rows);
    }
    let counts = levels
        .iter()
        .enumerate()
        .map(|(len, level)| (len, level.len(), 0))
        .collect();
    Ok(DiscontinuityTable {
        epsilon,
        counts,
        rows,
    }
    .with_epsilon(epsilon))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::currents::{linear_combination, q, uniform_surrogate};
    use crate::trees::default_test_set;

    fn ctx() -> Arc<GroupContext> {
        GroupContext::standard(2).unwrap()
    }

    fn fib(c: &GroupContext) -> Automorphism {
        Automorphism::parse(c, &[("a", "a b"), ("b", "a")], &[("a", "b"), ("b", "b' a")], Some("phi"))
            .unwrap()
    }

    const GOLDEN: f64 = 1.618_033_988_749_895;

    #[test]
    fn fibonacci_current_orbit() {
        let c = ctx();
        let a = c.parse_word("a").unwrap();
        let opts = OrbitOptions {
            iterations: 40,
            ..OrbitOptions::default()
        };
        let orbit = iterate_current(&fib(&c), &c, &a, 3, &opts).unwrap();
        let r = &orbit.report;
        assert!(r.converged);
        assert!((r.lambda_estimate - GOLDEN).abs() < 1e-4);
        assert!(r.final_step().unwrap() < 1e-6);
        assert!(r.normalizers.windows(2).skip(1).all(|p| p[1] < p[0]));
        assert_eq!(r.iterates.len(), r.normalizers.len());
        assert_eq!(r.step_distances.len() + 1, r.iterates.len());
        // letter frequencies approach the PF eigenvector (golden, 1)
        let last = r.iterates.last().unwrap();
        assert!((last[0] / last[2] - GOLDEN).abs() < 1e-4);
    }

    #[test]
    fn identity_orbits_are_constant() {
        let c = ctx();
        let id = Automorphism::identity(&c);
        let g = c.parse_word("a b b'").unwrap();
        let r = iterate_current(&id, &c, &c.parse_word("a b' a").unwrap(), 2, &OrbitOptions::default())
            .unwrap()
            .report;
        assert!(r.step_distances.iter().all(|&d| d == 0.0));
        assert_eq!(r.lambda_estimate, 1.0);
        let set = default_test_set(&c, &[g]);
        let t = iterate_tree(&id, &MarkedMetricRose::cayley(&c), &set, &OrbitOptions::default()).unwrap();
        assert!(t.report.step_distances.iter().all(|&d| d == 0.0));
        assert_eq!(t.report.lambda_estimate, 1.0);
    }

    #[test]
    fn trivial_seed_rejected() {
        let c = ctx();
        let e = iterate_current(&fib(&c), &c, &Word::identity(), 2, &OrbitOptions::default());
        assert!(matches!(e, Err(Error::Domain(_))));
    }

    #[test]
    fn word_cap_is_a_resource_error() {
        let c = ctx();
        let opts = OrbitOptions {
            iterations: 40,
            tol: 0.0,
            max_word_letters: 1000,
        };
        let e = iterate_current(&fib(&c), &c, &c.parse_word("a").unwrap(), 2, &opts);
        assert!(matches!(e, Err(Error::Resource(_))));
    }

    #[test]
    fn fibonacci_tree_orbit() {
        let c = ctx();
        let set: Vec<CyclicWord> = ["a", "b", "a b"]
            .iter()
            .map(|s| c.parse_word(s).unwrap().to_cyclic())
            .collect();
        let opts = OrbitOptions {
            iterations: 40,
            ..OrbitOptions::default()
        };
        let t = iterate_tree(&fib(&c), &MarkedMetricRose::cayley(&c), &set, &opts).unwrap();
        assert!(t.report.converged);
        assert!((t.report.lambda_estimate - GOLDEN).abs() < 1e-3);
        // the orbit's trees agree with the incrementally pushed spectra
        let direct = length_spectrum_capped(&t.last, &set, usize::MAX).unwrap();
        assert_eq!(direct, t.last_spectrum);
        let inv = iterate_tree(&fib(&c).invert(), &MarkedMetricRose::cayley(&c), &set, &opts).unwrap();
        assert!((inv.report.lambda_estimate - GOLDEN).abs() < 1e-3);
    }

    #[test]
    fn fixed_points_and_pole_exchange() {
        let c = ctx();
        let phi = fib(&c);
        let a = c.parse_word("a").unwrap();
        let set = default_test_set(&c, &[]);
        let opts = OrbitOptions {
            iterations: 40,
            ..OrbitOptions::default()
        };
        let fp = approximate_fixed_points(&phi, &c, &a, 3, &set, &opts).unwrap();
        let FixedObject::Current(plus) = &fp.current_plus.object else { panic!() };
        let ratio = plus.weight(&c.parse_word("a").unwrap()).unwrap() / plus.weight(&c.parse_word("b").unwrap()).unwrap();
        assert!((ratio.to_f64().unwrap() - GOLDEN).abs() < 1e-4);
        assert!(fp.current_plus.eigen_residual < 1e-6);
        assert!(fp.current_minus.eigen_residual < 1e-6);

        let swapped = approximate_fixed_points(&phi.invert(), &c, &a, 3, &set, &opts).unwrap();
        let FixedObject::Current(m) = &swapped.current_minus.object else { panic!() };
        assert!(projective_distance(plus, m).unwrap() < 1e-5);
        let FixedObject::Current(p2) = &swapped.current_plus.object else { panic!() };
        let FixedObject::Current(m1) = &fp.current_minus.object else { panic!() };
        assert!(projective_distance(p2, m1).unwrap() < 1e-5);
    }

    #[test]
    fn fibonacci_valley() {
        let c = ctx();
        let d = pairing_decay(&fib(&c), &c.parse_word("a").unwrap(), 10, 20, usize::MAX).unwrap();
        let v: Vec<u64> = d.values.iter().map(|x| x.1).collect();
        assert_eq!(&v[..4], &[89, 55, 34, 21]);
        assert_eq!(&v[18..], &[55, 89, 144]);
        assert_eq!(v[9], 1);
        assert_eq!(v[10], 1);
        assert!(d.is_unimodal());
        assert!(d.head_ratios.iter().all(|r| (r - 1.0 / GOLDEN).abs() < 1e-2));
        assert!(d.tail_ratios.iter().all(|r| (r - GOLDEN).abs() < 1e-3));
        assert!(pairing_decay(&fib(&c), &c.parse_word("a").unwrap(), 0, 5, usize::MAX).is_err());
        assert!(pairing_decay(&fib(&c), &Word::identity(), 2, 5, usize::MAX).is_err());
    }

    #[test]
    fn ball_is_shortlex_and_reduced() {
        let c = ctx();
        let g = SubgroupSpec::new("G", vec![fib(&c), fib(&c).with_label("psi")]).unwrap();
        let ball = g.ball(3);
        assert_eq!(ball.iter().map(Vec::len).collect::<Vec<_>>(), vec![1, 4, 12, 36]);
        for level in &ball {
            assert!(level.windows(2).all(|p| p[0] < p[1]));
        }
        assert_eq!(g.label(&ball[2][1]), "phi psi");
        assert_eq!(g.label(&[]), "id");
        assert_eq!(g.label(&ball[1][1]), "phi^-1");
    }

    #[test]
    fn limit_set_radius_zero_is_the_pole() {
        let c = ctx();
        let g = SubgroupSpec::new("G", vec![fib(&c)]).unwrap();
        let pole = counting_current(&c, &c.parse_word("a b a").unwrap(), 2).unwrap();
        let s = sample_limit_set_currents(&g, &pole, 0, 1e-3, usize::MAX).unwrap();
        assert_eq!(s.points.len(), 1);
        assert_eq!(s.points[0].label, "id");
        assert_eq!(s.points[0].coordinates, pole.normalized_vector().unwrap());
    }

    #[test]
    fn dirichlet_identity_ball_and_scaling() {
        let c = ctx();
        let phi = fib(&c);
        let g = SubgroupSpec::new("G", vec![phi.clone()]).unwrap();
        let ta = MarkedMetricRose::cayley(&c);
        let mu = counting_current(&c, &c.parse_word("a b a b'").unwrap(), 2).unwrap();
        let r = dirichlet_check(&mu, (&ta, &ta), &g, 0, usize::MAX).unwrap();
        assert_eq!(r.minimizer, "id");
        assert_eq!(r.min_value, q(8));
        let r1 = dirichlet_check(&mu, (&ta.act(&phi), &ta.act(&phi.invert())), &g, 3, usize::MAX).unwrap();
        let r7 = dirichlet_check(&mu.scale(&q(7)).unwrap(), (&ta.act(&phi), &ta.act(&phi.invert())), &g, 3, usize::MAX)
            .unwrap();
        assert_eq!(r1.minimizer, r7.minimizer);
        assert_eq!(r7.min_value, &r1.min_value * q(7));
        let nu = crate::currents::uniform_current(&c, 2).unwrap();
        assert!(matches!(dirichlet_check(&nu, (&ta, &ta), &g, 1, usize::MAX), Err(Error::Unsupported(_))));
    }

    #[test]
    fn discontinuity_counts_identity_and_is_monotone_in_epsilon() {
        let c = ctx();
        let phi = fib(&c);
        let g = SubgroupSpec::new("G", vec![phi.clone()]).unwrap();
        let k = uniform_surrogate(&c, 3).unwrap();
        let eta = counting_current(&c, &c.parse_word("a b'").unwrap(), 3).unwrap();
        let kk = linear_combination(&[(q(1), &k), (q(1), &eta)]).unwrap();
        let t = discontinuity_experiment(&g, &[kk], 3, 1e-3, usize::MAX).unwrap();
        assert!(t.counts[0].2 >= 1);
        let t2 = t.with_epsilon(2e-3);
        assert!(t.counts.iter().zip(&t2.counts).all(|(a, b)| b.2 >= a.2));
    }
}
