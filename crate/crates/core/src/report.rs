//! Report emission: JSON with floats fixed at 12 significant digits, and flat CSV.

use std::fs;
use std::path::{Path, PathBuf};

use num_traits::ToPrimitive;
use serde_json::{json, Map, Value};

use crate::config::OutputFormat;
use crate::currents::Q;
use crate::document::format_rational;
use crate::dynamics::{Assertions, OrbitKind, OrbitReport};
use crate::error::{Error, Result};

/// Rounds to 12 significant digits; non-finite values become `null`.
pub fn float(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    let rounded: f64 = format!("{x:.11e}").parse().unwrap_or(x);
    serde_json::Number::from_f64(rounded)
        .map(Value::Number)
        .unwrap_or(Value::Null)
}

pub fn floats(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| float(x)).collect())
}

pub fn fmt_float(x: f64) -> String {
    match float(x) {
        Value::Number(n) => n.to_string(),
        _ => "nan".to_string(),
    }
}

/// Exact value plus its 12-digit float.
pub fn rational(q: &Q) -> Value {
    json!({ "exact": format_rational(q), "value": float(q.to_f64().unwrap_or(f64::NAN)) })
}

pub fn assertions(a: &Assertions) -> Value {
    json!({
        "assert_iwip": a.iwip,
        "assert_atoroidal": a.atoroidal,
        "assert_train_track_on_rose": a.train_track_on_rose,
    })
}

pub fn orbit(r: &OrbitReport) -> Value {
    let mut m = Map::new();
    m.insert(
        "object".into(),
        json!(match r.kind {
            OrbitKind::Current => "current",
            OrbitKind::Tree => "tree",
        }),
    );
    m.insert("converged".into(), json!(r.converged));
    m.insert("iterations".into(), json!(r.iterations()));
    m.insert("lambda_estimate".into(), float(r.lambda_estimate));
    if let Some(a) = &r.assertions {
        m.insert("assertions".into(), assertions(a));
    }
    m.insert("normalizers".into(), floats(&r.normalizers));
    m.insert("step_distances".into(), floats(&r.step_distances));
    m.insert("growth_ratios".into(), floats(&r.growth_ratios));
    m.insert("coordinates".into(), json!(r.coordinates));
    m.insert(
        "iterates".into(),
        Value::Array(r.iterates.iter().map(|v| floats(v)).collect()),
    );
    Value::Object(m)
}

/// A CSV table built row by row.
#[derive(Clone, Debug, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Table {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Resource(format!("csv: {e}"));
        w.write_record(&self.header).map_err(io)?;
        for r in &self.rows {
            w.write_record(r).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Resource(format!("csv: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Where and how reports are written.
#[derive(Clone, Debug)]
pub struct Sink {
    pub dir: PathBuf,
    pub format: OutputFormat,
}

impl Sink {
    fn write(&self, name: &str, contents: &str) -> Result<PathBuf> {
        fs::create_dir_all(&self.dir)
            .map_err(|e| Error::Resource(format!("cannot create {}: {e}", self.dir.display())))?;
        let path = self.dir.join(name);
        fs::write(&path, contents)
            .map_err(|e| Error::Resource(format!("cannot write {}: {e}", path.display())))?;
        Ok(path)
    }

    /// Writes `<stem>.json` and/or `<stem>.csv` per the format.
    pub fn emit(&self, stem: &str, json: &Value, table: &Table) -> Result<Vec<PathBuf>> {
        let mut out = Vec::new();
        if self.format.json() {
            let mut text = serde_json::to_string_pretty(json).expect("reports serialize");
            text.push('\n');
            out.push(self.write(&format!("{stem}.json"), &text)?);
        }
        if self.format.csv() {
            out.push(self.write(&format!("{stem}.csv"), &table.to_csv()?)?);
        }
        Ok(out)
    }

    /// Writes a document verbatim regardless of the format setting.
    pub fn document(&self, name: &str, text: &str) -> Result<PathBuf> {
        let mut t = text.to_string();
        t.push('\n');
        self.write(name, &t)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }
}
