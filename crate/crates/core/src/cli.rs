//! Command-line front end.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::automorphism::pf_eigenvalue;
use crate::config::{ExperimentConfig, NamedAutomorphism, OutputFormat};
use crate::currents::{counting_current, TruncatedCurrent};
use crate::document::{current_to_json, format_rational, tree_to_json};
use crate::dynamics::{
    self, current_pole, growth_estimate, iterate_current, iterate_tree, tree_pole, FixedObject,
    FixedPointApprox, OrbitOptions, Side,
};
use crate::error::{Error, Result};
use crate::freegroup::{GroupContext, Letter, Word};
use crate::report::{self, fmt_float, float, floats, rational, Sink, Table};
use crate::trees::{default_test_set, pair_capped, MarkedMetricRose};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_CONVERGENCE: i32 = 4;
pub const EXIT_RESOURCE: i32 = 5;
pub const EXIT_UNSUPPORTED: i32 = 6;
pub const EXIT_INPUT: i32 = 7;

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. } => EXIT_CONFIG,
        Error::Convergence { .. } => EXIT_CONVERGENCE,
        Error::Resource(_) => EXIT_RESOURCE,
        Error::Unsupported(_) => EXIT_UNSUPPORTED,
        Error::Malformed(_) | Error::Domain(_) | Error::Certification { .. } => EXIT_INPUT,
    }
}

#[derive(Debug, Parser)]
#[command(name = "freedyn", version, about = "Out(F_N) dynamics on currents and marked roses")]
pub struct Cli {
    /// Experiment configuration (TOML, or JSON with a .json extension).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Report directory (default: the config's output.dir, else ./out).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<FormatArg>,
    /// Seed for randomized checks.
    #[arg(long = "seed-rng", global = true)]
    pub seed_rng: Option<u64>,
    #[arg(long = "max-word-letters", global = true)]
    pub max_word_letters: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Json,
    Csv,
    Both,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Freely and cyclically reduce words.
    Reduce { words: Vec<String> },
    /// Apply the configured automorphism to words.
    Apply { words: Vec<String> },
    /// Counting-current weight tables.
    Weights { words: Vec<String> },
    /// Intersection form between roses and currents.
    Pair { words: Vec<String> },
    /// Perron-Frobenius and growth-based eigenvalue estimates.
    Eigenvalue,
    /// North-South orbit of currents and/or trees.
    NsOrbit,
    /// Attracting and repelling fixed-point approximations.
    FixedPoints,
    /// Pairing-decay valley.
    Decay,
    /// Limit-set sample over a group ball.
    LimitSet,
    /// Dirichlet minimum over a group ball.
    Dirichlet,
    /// Near-return table for a compact set of currents.
    Discontinuity,
    /// Check a configuration without running anything.
    Validate,
}

impl Command {
    fn stem(&self) -> &'static str {
        match self {
            Command::Reduce { .. } => "reduce",
            Command::Apply { .. } => "apply",
            Command::Weights { .. } => "weights",
            Command::Pair { .. } => "pair",
            Command::Eigenvalue => "eigenvalue",
            Command::NsOrbit => "ns-orbit",
            Command::FixedPoints => "fixed-points",
            Command::Decay => "decay",
            Command::LimitSet => "limit-set",
            Command::Dirichlet => "dirichlet",
            Command::Discontinuity => "discontinuity",
            Command::Validate => "validate",
        }
    }
}

/// Parses arguments, runs, and returns the process exit code.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = if e.use_stderr() {
                write!(err, "{e}")
            } else {
                write!(out, "{e}")
            };
            return code;
        }
    };
    match run(&cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

struct Run<'a> {
    config: ExperimentConfig,
    sink: Sink,
    out: &'a mut dyn Write,
    cap: usize,
}

impl Run<'_> {
    fn say(&mut self, line: impl AsRef<str>) {
        let _ = writeln!(self.out, "{}", line.as_ref());
    }

    fn context(&self) -> &std::sync::Arc<GroupContext> {
        &self.config.context
    }

    fn options(&self) -> OrbitOptions {
        OrbitOptions {
            max_word_letters: self.cap,
            ..self.config.orbit_options()
        }
    }

    fn named(&self, name: &str) -> &NamedAutomorphism {
        self.config.automorphism(name).expect("names resolved at load time")
    }

    fn show(&self, w: &Word) -> String {
        if w.is_identity() {
            "1".to_string()
        } else {
            self.context().format_word(w)
        }
    }

    fn words_arg(&self, words: &[String], fallback: Option<&Vec<Word>>, section: &str) -> Result<Vec<Word>> {
        if !words.is_empty() {
            return words.iter().map(|w| self.context().parse_word(w)).collect();
        }
        fallback
            .cloned()
            .ok_or_else(|| Error::config(format!("experiments.{section}"), "no words on the command line and no section in the config"))
    }

    fn emit(&mut self, stem: &str, json: Value, table: Table) -> Result<()> {
        for p in self.sink.emit(stem, &json, &table)? {
            let _ = writeln!(self.out, "wrote {}", p.display());
        }
        Ok(())
    }
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<i32> {
    let path = cli
        .config
        .clone()
        .ok_or_else(|| Error::config("--config", "a configuration file is required"))?;
    let config = ExperimentConfig::load(&path)?;
    if let Command::Validate = cli.command {
        return Ok(validate(&config, cli.seed_rng.unwrap_or(0), out));
    }
    let format = match cli.format {
        Some(FormatArg::Json) => OutputFormat::Json,
        Some(FormatArg::Csv) => OutputFormat::Csv,
        Some(FormatArg::Both) => OutputFormat::Both,
        None => config.output_format.unwrap_or(OutputFormat::Json),
    };
    let dir = cli
        .out
        .clone()
        .or_else(|| config.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    let cap = cli.max_word_letters.unwrap_or(config.budgets.max_word_letters);
    if cap == 0 {
        return Err(Error::config("--max-word-letters", "must be positive"));
    }
    let mut r = Run {
        config,
        sink: Sink { dir, format },
        out,
        cap,
    };
    let stem = cli.command.stem();
    match &cli.command {
        Command::Reduce { words } => reduce(&mut r, words, stem),
        Command::Apply { words } => apply(&mut r, words, stem),
        Command::Weights { words } => weights(&mut r, words, stem),
        Command::Pair { words } => pair(&mut r, words, stem),
        Command::Eigenvalue => eigenvalue(&mut r, stem),
        Command::NsOrbit => ns_orbit(&mut r, stem),
        Command::FixedPoints => fixed_points(&mut r, stem),
        Command::Decay => decay(&mut r, stem),
        Command::LimitSet => limit_set(&mut r, stem),
        Command::Dirichlet => dirichlet(&mut r, stem),
        Command::Discontinuity => discontinuity(&mut r, stem),
        Command::Validate => unreachable!(),
    }?;
    Ok(EXIT_OK)
}

fn reduce(r: &mut Run, words: &[String], stem: &str) -> Result<()> {
    let raw: Vec<(String, Word)> = if words.is_empty() {
        let ws = r.words_arg(&[], r.config.experiments.reduce.as_ref(), "reduce")?;
        ws.into_iter().map(|w| (r.show(&w), w)).collect()
    } else {
        words
            .iter()
            .map(|t| Ok((t.clone(), Word::reduce(r.context().parse_letters(t)?))))
            .collect::<Result<Vec<_>>>()?
    };
    let mut table = Table::new(&["input", "reduced", "cyclic", "conjugator", "length", "cyclic_length"]);
    let mut rows = Vec::new();
    for (input, w) in raw {
        let (core, conj) = w.cyclic_reduce();
        let reduced = r.show(&w);
        let cyclic = r.show(&core.to_word());
        r.say(&reduced);
        table.push(vec![
            input.clone(),
            reduced.clone(),
            cyclic.clone(),
            r.show(&conj),
            w.len().to_string(),
            core.len().to_string(),
        ]);
        rows.push(json!({
            "input": input, "reduced": reduced, "cyclic": cyclic, "conjugator": r.show(&conj),
            "length": w.len(), "cyclic_length": core.len(),
        }));
    }
    r.emit(stem, json!({ "command": stem, "results": rows }), table)
}

fn apply(r: &mut Run, words: &[String], stem: &str) -> Result<()> {
    let phi = match (&r.config.experiments.apply, r.config.automorphisms.len()) {
        (Some(a), _) => a.automorphism.clone(),
        (None, 1) => r.config.automorphisms.values().next().unwrap().map.clone(),
        _ => return Err(Error::config("experiments.apply", "name the automorphism to apply")),
    };
    let words = r.words_arg(words, r.config.experiments.apply.as_ref().map(|a| &a.words), "apply")?;
    let mut table = Table::new(&["input", "image", "length", "cyclic_length"]);
    let mut rows = Vec::new();
    for w in &words {
        let image = phi.apply_capped(w.letters(), r.cap)?;
        let shown = r.show(&image);
        r.say(&shown);
        table.push(vec![r.show(w), shown.clone(), image.len().to_string(), image.cyclic_length().to_string()]);
        rows.push(json!({ "input": r.show(w), "image": shown, "length": image.len(), "cyclic_length": image.cyclic_length() }));
    }
    let label = phi.label().unwrap_or("").to_string();
    r.emit(stem, json!({ "command": stem, "automorphism": label, "results": rows }), table)
}

fn weights(r: &mut Run, words: &[String], stem: &str) -> Result<()> {
    let (fallback, depth) = match &r.config.experiments.weights {
        Some((ws, d)) => (Some(ws.clone()), *d),
        None => (None, r.config.depth),
    };
    let words = r.words_arg(words, fallback.as_ref(), "weights")?;
    let mut table = Table::new(&["seed", "word", "weight"]);
    let mut docs = Vec::new();
    for g in &words {
        let eta = counting_current(r.context(), g, depth)?;
        let seed = r.show(g);
        r.say(format!("η[{seed}] at depth {depth}:"));
        for (v, w) in eta.table() {
            if !num_traits::Zero::is_zero(&w) {
                r.say(format!("  {} = {}", r.show(&v), format_rational(&w)));
            }
            table.push(vec![seed.clone(), r.show(&v), format_rational(&w)]);
        }
        docs.push(json!({ "seed": seed, "current": document_value(&current_to_json(&eta)) }));
    }
    r.emit(stem, json!({ "command": stem, "depth": depth, "results": docs }), table)
}

fn document_value(text: &str) -> Value {
    serde_json::from_str(text).expect("documents are valid JSON")
}

fn pair(r: &mut Run, words: &[String], stem: &str) -> Result<()> {
    let (trees, currents): (Vec<MarkedMetricRose>, Vec<TruncatedCurrent>) = if words.is_empty() {
        let p = r
            .config
            .experiments
            .pair
            .clone()
            .ok_or_else(|| Error::config("experiments.pair", "no words on the command line and no section in the config"))?;
        (p.trees, p.currents)
    } else {
        let trees = match &r.config.experiments.pair {
            Some(p) => p.trees.clone(),
            None => vec![MarkedMetricRose::cayley(r.context())],
        };
        let currents = words
            .iter()
            .map(|w| counting_current(r.context(), &r.context().parse_word(w)?, r.config.depth))
            .collect::<Result<Vec<_>>>()?;
        (trees, currents)
    };
    let mut table = Table::new(&["tree", "current", "exact", "value"]);
    let mut rows = Vec::new();
    for (i, t) in trees.iter().enumerate() {
        for (j, mu) in currents.iter().enumerate() {
            let v = pair_capped(t, mu, r.cap)?;
            r.say(format_rational(&v));
            table.push(vec![i.to_string(), j.to_string(), format_rational(&v), fmt_float(v.to_f64().unwrap_or(f64::NAN))]);
            rows.push(json!({ "tree": i, "current": j, "pairing": rational(&v) }));
        }
    }
    let tree_docs: Vec<Value> = trees.iter().map(|t| document_value(&tree_to_json(t))).collect();
    let current_docs: Vec<Value> = currents.iter().map(|m| document_value(&current_to_json(m))).collect();
    r.emit(
        stem,
        json!({ "command": stem, "trees": tree_docs, "currents": current_docs, "results": rows }),
        table,
    )
}

fn eigenvalue(r: &mut Run, stem: &str) -> Result<()> {
    let exp = match &r.config.experiments.eigenvalue {
        Some(e) => e.clone(),
        None => crate::config::EigenvalueExperiment {
            automorphisms: r.config.automorphisms.keys().cloned().collect(),
            seed: r
                .config
                .seeds
                .first()
                .cloned()
                .unwrap_or_else(|| Word::letter(Letter::positive(0))),
        },
    };
    let mut table = Table::new(&[
        "automorphism", "matrix_estimate", "iterations", "residual", "primitive", "growth_estimate", "discrepancy",
    ]);
    let mut rows = Vec::new();
    for name in &exp.automorphisms {
        let named = r.named(name).clone();
        let m = named.map.transition_matrix();
        let e = pf_eigenvalue(&m, r.config.tolerances.eigen, r.config.budgets.eigen_max_iter)?;
        let (lengths, growth) = growth_estimate(&named.map, &exp.seed, r.config.budgets.iterations, r.cap)?;
        let gap = (e.value - growth).abs();
        r.say(format!(
            "{name}: {} (matrix{}), {} (growth)",
            fmt_float(e.value),
            if e.primitive { "" } else { ", not primitive" },
            fmt_float(growth)
        ));
        table.push(vec![
            name.clone(),
            fmt_float(e.value),
            e.iterations.to_string(),
            fmt_float(e.residual),
            e.primitive.to_string(),
            fmt_float(growth),
            fmt_float(gap),
        ]);
        rows.push(json!({
            "automorphism": name,
            "assertions": report::assertions(&named.assertions),
            "transition_matrix": m.rows(),
            "matrix_estimate": { "value": float(e.value), "iterations": e.iterations, "residual": float(e.residual), "primitive": e.primitive },
            "growth_estimate": { "value": float(growth), "seed": r.show(&exp.seed), "lengths": lengths },
            "discrepancy": float(gap),
        }));
    }
    r.emit(stem, json!({ "command": stem, "results": rows }), table)
}

fn orbit_rows(table: &mut Table, seed: &str, rep: &dynamics::OrbitReport) {
    let object = match rep.kind {
        dynamics::OrbitKind::Current => "current",
        dynamics::OrbitKind::Tree => "tree",
    };
    for k in 0..rep.iterates.len() {
        let step = if k == 0 { String::new() } else { fmt_float(rep.step_distances[k - 1]) };
        let ratio = if k == 0 { String::new() } else { fmt_float(rep.growth_ratios[k - 1]) };
        table.push(vec![seed.to_string(), object.to_string(), k.to_string(), fmt_float(rep.normalizers[k]), step, ratio]);
    }
}

const ORBIT_HEADER: [&str; 6] = ["seed", "object", "k", "normalizer", "step_distance", "growth_ratio"];

fn ns_orbit(r: &mut Run, stem: &str) -> Result<()> {
    let exp = r
        .config
        .experiments
        .ns_orbit
        .clone()
        .ok_or_else(|| Error::config("experiments.ns_orbit", "section missing"))?;
    let named = r.named(&exp.automorphism).clone();
    let options = OrbitOptions {
        iterations: exp.iterations,
        ..r.options()
    };
    let test_set = default_test_set(r.context(), &exp.seeds);
    let mut table = Table::new(&ORBIT_HEADER);
    let mut runs = Vec::new();
    for seed in &exp.seeds {
        let shown = r.show(seed);
        if exp.object.currents() {
            let mut rep = iterate_current(&named.map, r.context(), seed, exp.depth, &options)?.report;
            rep.assertions = Some(named.assertions);
            r.say(format!(
                "{shown} current: {} after {} steps, lambda {}",
                if rep.converged { "converged" } else { "not converged" },
                rep.iterations(),
                fmt_float(rep.lambda_estimate)
            ));
            orbit_rows(&mut table, &shown, &rep);
            runs.push(json!({ "seed": shown, "orbit": report::orbit(&rep) }));
        }
        if exp.object.trees() {
            let rose = MarkedMetricRose::cayley(r.context());
            let orbit = iterate_tree(&named.map, &rose, &test_set, &options)?;
            let mut rep = orbit.report;
            rep.assertions = Some(named.assertions);
            r.say(format!(
                "{shown} tree: {} after {} steps, lambda {}",
                if rep.converged { "converged" } else { "not converged" },
                rep.iterations(),
                fmt_float(rep.lambda_estimate)
            ));
            orbit_rows(&mut table, &shown, &rep);
            runs.push(json!({ "seed": shown, "orbit": report::orbit(&rep) }));
        }
    }
    r.emit(
        stem,
        json!({ "command": stem, "automorphism": exp.automorphism, "depth": exp.depth, "tolerance": float(options.tol), "runs": runs }),
        table,
    )
}

fn approx_value(a: &FixedPointApprox) -> Value {
    let object = match &a.object {
        FixedObject::Current(mu) => json!({ "type": "current", "document": document_value(&current_to_json(mu)) }),
        FixedObject::Tree { tree, spectrum } => json!({
            "type": "tree",
            "document": document_value(&tree_to_json(tree)),
            "spectrum": spectrum.values.iter().map(rational).collect::<Vec<_>>(),
        }),
    };
    json!({
        "side": a.side.name(),
        "quality": float(a.quality),
        "iterations_used": a.iterations_used,
        "eigen_residual": float(a.eigen_residual),
        "lambda_estimate": float(a.lambda_estimate),
        "object": object,
    })
}

fn fixed_points(r: &mut Run, stem: &str) -> Result<()> {
    let exp = r
        .config
        .experiments
        .fixed_points
        .clone()
        .ok_or_else(|| Error::config("experiments.fixed_points", "section missing"))?;
    let named = r.named(&exp.automorphism).clone();
    let options = r.options();
    let context = r.context().clone();
    let test_set = default_test_set(&context, std::slice::from_ref(&exp.seed));
    let maps = [(Side::Plus, named.map.clone()), (Side::Minus, named.map.invert())];
    let rose = MarkedMetricRose::cayley(&context);
    let current_orbits = maps
        .iter()
        .map(|(_, m)| iterate_current(m, &context, &exp.seed, exp.depth, &options))
        .collect::<Result<Vec<_>>>()?;
    let tree_orbits = maps
        .iter()
        .map(|(_, m)| iterate_tree(m, &rose, &test_set, &options))
        .collect::<Result<Vec<_>>>()?;
    let mut table = Table::new(&ORBIT_HEADER);
    let mut orbits = Vec::new();
    for ((side, _), o) in maps.iter().zip(&current_orbits) {
        let mut rep = o.report.clone();
        rep.assertions = Some(named.assertions);
        orbit_rows(&mut table, side.name(), &rep);
        orbits.push(json!({ "side": side.name(), "orbit": report::orbit(&rep) }));
    }
    for ((side, _), o) in maps.iter().zip(&tree_orbits) {
        let mut rep = o.report.clone();
        rep.assertions = Some(named.assertions);
        orbit_rows(&mut table, side.name(), &rep);
        orbits.push(json!({ "side": side.name(), "orbit": report::orbit(&rep) }));
    }
    let mut approximations = Vec::new();
    let mut failure = None;
    for (i, (side, map)) in maps.iter().enumerate() {
        let attempts = [
            current_pole(map, &current_orbits[i], *side, r.cap),
            tree_pole(map, &tree_orbits[i], &test_set, *side, r.cap),
        ];
        for a in attempts {
            match a {
                Ok(a) => approximations.push(a),
                Err(e) => failure = failure.or(Some(e)),
            }
        }
    }
    for a in &approximations {
        let kind = match a.object {
            FixedObject::Current(_) => "current",
            FixedObject::Tree { .. } => "tree",
        };
        r.say(format!(
            "{kind} {}: quality {}, eigen residual {}, lambda {}",
            a.side.name(),
            fmt_float(a.quality),
            fmt_float(a.eigen_residual),
            fmt_float(a.lambda_estimate)
        ));
        let (name, text) = match &a.object {
            FixedObject::Current(mu) => (format!("{stem}-current-{}.json", a.side.name()), current_to_json(mu)),
            FixedObject::Tree { tree, .. } => (format!("{stem}-tree-{}.json", a.side.name()), tree_to_json(tree)),
        };
        let p = r.sink.document(&name, &text)?;
        r.say(format!("wrote {}", p.display()));
    }
    let json = json!({
        "command": stem,
        "automorphism": exp.automorphism,
        "seed": r.show(&exp.seed),
        "depth": exp.depth,
        "complete": failure.is_none(),
        "approximations": approximations.iter().map(approx_value).collect::<Vec<_>>(),
        "orbits": orbits,
    });
    r.emit(stem, json, table)?;
    match failure {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn decay(r: &mut Run, stem: &str) -> Result<()> {
    let exp = r
        .config
        .experiments
        .decay
        .clone()
        .ok_or_else(|| Error::config("experiments.decay", "section missing"))?;
    let named = r.named(&exp.automorphism).clone();
    let d = dynamics::pairing_decay(&named.map, &exp.seed, exp.n0, exp.n, r.cap)?;
    let values: Vec<String> = d.values.iter().map(|v| v.1.to_string()).collect();
    r.say(values.join(" "));
    r.say(format!("valley at k = {}, unimodal: {}", d.valley, d.is_unimodal()));
    let mut table = Table::new(&["k", "pairing", "ratio"]);
    for (i, &(k, v)) in d.values.iter().enumerate() {
        let ratio = if i == 0 { String::new() } else { fmt_float(d.ratios[i - 1]) };
        table.push(vec![k.to_string(), v.to_string(), ratio]);
    }
    let json = json!({
        "command": stem,
        "automorphism": exp.automorphism,
        "seed": r.show(&exp.seed),
        "n0": exp.n0,
        "n": exp.n,
        "values": d.values.iter().map(|v| v.1).collect::<Vec<_>>(),
        "ratios": floats(&d.ratios),
        "head_ratios": floats(&d.head_ratios),
        "tail_ratios": floats(&d.tail_ratios),
        "valley": d.valley,
        "unimodal": d.is_unimodal(),
    });
    r.emit(stem, json, table)
}

fn sample_value(s: &dynamics::LimitSetSample) -> Value {
    json!({
        "coordinates": s.coordinate_names,
        "visited": s.visited,
        "points": s.points.iter().map(|p| json!({ "word": p.label, "length": p.length, "point": floats(&p.coordinates) })).collect::<Vec<_>>(),
        "diameter_stats": {
            "pairs": s.diameter_stats.count,
            "min": float(s.diameter_stats.min),
            "max": float(s.diameter_stats.max),
            "mean": float(s.diameter_stats.mean),
        },
    })
}

fn limit_set(r: &mut Run, stem: &str) -> Result<()> {
    let exp = r
        .config
        .experiments
        .limit_set
        .clone()
        .ok_or_else(|| Error::config("experiments.limit_set", "section missing"))?;
    let group = r.config.subgroups[&exp.subgroup].clone();
    let phi = group.generators[exp.generator].clone();
    let context = r.context().clone();
    let options = r.options();
    let mut table = Table::new(&["object", "word", "length"]);
    let mut json = json!({ "command": stem, "subgroup": exp.subgroup, "generator": exp.generator, "radius": exp.radius, "resolution": float(exp.resolution) });
    if exp.object.currents() {
        let (pole, _) = dynamics::current_fixed_point(&phi, &context, &exp.seed, exp.depth, Side::Plus, &options)?;
        let FixedObject::Current(mu) = &pole.object else { unreachable!() };
        let s = dynamics::sample_limit_set_currents(&group, mu, exp.radius, exp.resolution, r.cap)?;
        r.say(format!("currents: {} distinct points from {} group words", s.points.len(), s.visited));
        for p in &s.points {
            table.push(vec!["current".into(), p.label.clone(), p.length.to_string()]);
        }
        json["currents"] = sample_value(&s);
    }
    if exp.object.trees() {
        let test_set = default_test_set(&context, std::slice::from_ref(&exp.seed));
        let (pole, _) = dynamics::tree_fixed_point(&phi, &MarkedMetricRose::cayley(&context), &test_set, Side::Plus, &options)?;
        let FixedObject::Tree { tree, .. } = &pole.object else { unreachable!() };
        let s = dynamics::sample_limit_set_trees(&group, tree, &test_set, exp.radius, exp.resolution, r.cap)?;
        r.say(format!("trees: {} distinct points from {} group words", s.points.len(), s.visited));
        for p in &s.points {
            table.push(vec!["tree".into(), p.label.clone(), p.length.to_string()]);
        }
        json["trees"] = sample_value(&s);
    }
    r.emit(stem, json, table)
}

fn dirichlet(r: &mut Run, stem: &str) -> Result<()> {
    let exp = r
        .config
        .experiments
        .dirichlet
        .clone()
        .ok_or_else(|| Error::config("experiments.dirichlet", "section missing"))?;
    let group = r.config.subgroups[&exp.subgroup].clone();
    let phi = group.generators[exp.generator].clone();
    let context = r.context().clone();
    let options = r.options();
    let test_set = default_test_set(&context, std::slice::from_ref(&exp.seed));
    let rose = MarkedMetricRose::cayley(&context);
    let poles = [Side::Plus, Side::Minus]
        .map(|side| dynamics::tree_fixed_point(&phi, &rose, &test_set, side, &options).map(|(a, _)| a));
    let [plus, minus] = poles;
    let (plus, minus) = (plus?, minus?);
    let (FixedObject::Tree { tree: tp, .. }, FixedObject::Tree { tree: tm, .. }) = (&plus.object, &minus.object) else {
        unreachable!()
    };
    let res = dynamics::dirichlet_check(&exp.current, (tp, tm), &group, exp.radius, r.cap)?;
    r.say(format!("minimizer: {} (value {})", res.minimizer, fmt_float(res.min_value.to_f64().unwrap_or(f64::NAN))));
    let mut table = Table::new(&["word", "length", "plus", "minus", "total"]);
    for row in &res.table {
        table.push(vec![
            row.label.clone(),
            row.length.to_string(),
            fmt_float(row.plus.to_f64().unwrap_or(f64::NAN)),
            fmt_float(row.minus.to_f64().unwrap_or(f64::NAN)),
            fmt_float(row.total.to_f64().unwrap_or(f64::NAN)),
        ]);
    }
    let json = json!({
        "command": stem,
        "subgroup": exp.subgroup,
        "radius": exp.radius,
        "current": document_value(&current_to_json(&exp.current)),
        "poles": [approx_value(&plus), approx_value(&minus)],
        "minimizer": res.minimizer,
        "min_value": rational(&res.min_value),
        "table": res.table.iter().map(|row| json!({
            "word": row.label, "length": row.length,
            "plus": rational(&row.plus), "minus": rational(&row.minus), "total": rational(&row.total),
        })).collect::<Vec<_>>(),
    });
    r.emit(stem, json, table)
}

fn discontinuity(r: &mut Run, stem: &str) -> Result<()> {
    let exp = r
        .config
        .experiments
        .discontinuity
        .clone()
        .ok_or_else(|| Error::config("experiments.discontinuity", "section missing"))?;
    let group = r.config.subgroups[&exp.subgroup].clone();
    let support: Vec<bool> = exp.compact.iter().map(TruncatedCurrent::full_support_check).collect();
    let t = dynamics::discontinuity_experiment(&group, &exp.compact, exp.radius, exp.epsilon, r.cap)?;
    for &(len, total, near) in &t.counts {
        r.say(format!("length {len}: {near} of {total} within {}", fmt_float(exp.epsilon)));
    }
    let mut table = Table::new(&["word", "length", "distance", "near"]);
    for row in &t.rows {
        table.push(vec![
            row.label.clone(),
            row.length.to_string(),
            fmt_float(row.distance),
            (row.distance < exp.epsilon).to_string(),
        ]);
    }
    let json = json!({
        "command": stem,
        "subgroup": exp.subgroup,
        "radius": exp.radius,
        "epsilon": float(exp.epsilon),
        "full_support": support,
        "counts": t.counts.iter().map(|&(l, total, near)| json!({ "length": l, "words": total, "near": near })).collect::<Vec<_>>(),
        "non_increasing": t.is_non_increasing(),
        "first_empty_length": t.first_empty_length(),
        "rows": t.rows.iter().map(|row| json!({ "word": row.label, "length": row.length, "distance": float(row.distance) })).collect::<Vec<_>>(),
    });
    r.emit(stem, json, table)
}

fn random_word(rng: &mut ChaCha8Rng, rank: usize, max_len: usize) -> Word {
    let len = rng.gen_range(1..=max_len);
    Word::reduce((0..len).map(|_| Letter::new(rng.gen_range(0..rank), rng.gen_bool(0.5))))
}

/// Schema and certification already ran at load time; this adds flag
/// consistency and seeded randomized checks. Returns the exit code.
fn validate(config: &ExperimentConfig, seed: u64, out: &mut dyn Write) -> i32 {
    let mut errors = Vec::new();
    let mut warnings = Vec::new();
    let rank = config.context.rank();
    for (name, a) in &config.automorphisms {
        if rank == 2 && a.assertions.atoroidal {
            errors.push((
                format!("automorphisms.{name}.assert_atoroidal"),
                "no automorphism of F_2 is atoroidal: every one preserves the commutator class up to inversion".to_string(),
            ));
        }
        if a.assertions.atoroidal && a.map.is_identity() {
            errors.push((format!("automorphisms.{name}.assert_atoroidal"), "the identity is not atoroidal".into()));
        }
        if a.assertions.iwip && a.map.is_identity() {
            errors.push((format!("automorphisms.{name}.assert_iwip"), "the identity is not an iwip".into()));
        }
    }
    let mut need_iwip = |path: String, name: &str| {
        if let Some(a) = config.automorphism(name) {
            if !a.assertions.iwip {
                warnings.push((path, format!("`{name}` is not asserted iwip; convergence claims are not meaningful")));
            }
        }
    };
    let e = &config.experiments;
    if let Some(x) = &e.ns_orbit {
        need_iwip("experiments.ns_orbit.automorphism".into(), &x.automorphism);
    }
    if let Some(x) = &e.fixed_points {
        need_iwip("experiments.fixed_points.automorphism".into(), &x.automorphism);
    }
    let generator_name = |sg: &str, i: usize| -> String {
        config.subgroups[sg].generators[i].label().unwrap_or("").to_string()
    };
    if let Some(x) = &e.limit_set {
        need_iwip("experiments.limit_set.generator".into(), &generator_name(&x.subgroup, x.generator));
    }
    if let Some(x) = &e.dirichlet {
        need_iwip("experiments.dirichlet.generator".into(), &generator_name(&x.subgroup, x.generator));
    }
    if let Some(x) = &e.discontinuity {
        for (i, mu) in x.compact.iter().enumerate() {
            if !mu.full_support_check() {
                warnings.push((
                    format!("experiments.discontinuity.compact[{i}]"),
                    "not of full support at the configured depth".into(),
                ));
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = 0usize;
    for (name, a) in &config.automorphisms {
        for _ in 0..64 {
            let w = random_word(&mut rng, rank, 24);
            checks += 1;
            let there = a.map.apply(&w);
            if a.map.apply_inverse(&there) != w || a.map.apply(&a.map.apply_inverse(&w)) != w {
                errors.push((
                    format!("automorphisms.{name}"),
                    format!("inverse fails on `{}`", config.context.format_word(&w)),
                ));
                break;
            }
        }
    }
    for i in 0..32 {
        let w = if i < config.seeds.len() {
            config.seeds[i].clone()
        } else {
            random_word(&mut rng, rank, 30)
        };
        if w.cyclic_length() == 0 {
            continue;
        }
        checks += 1;
        if let Err(e) = counting_current(&config.context, &w, config.depth).and_then(|m| m.check_invariants()) {
            errors.push(("depth".into(), format!("current invariants fail: {e}")));
        }
    }

    for (path, msg) in &warnings {
        let _ = writeln!(out, "warning at `{path}`: {msg}");
    }
    for (path, msg) in &errors {
        let _ = writeln!(out, "error at `{path}`: {msg}");
    }
    if errors.is_empty() {
        let _ = writeln!(out, "valid ({checks} randomized checks, seed {seed})");
        EXIT_OK
    } else {
        let _ = writeln!(out, "invalid: {} error(s)", errors.len());
        EXIT_CONFIG
    }
}

/// Shared by the binary: runs with the process arguments.
pub fn main() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    main_with_args(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}
