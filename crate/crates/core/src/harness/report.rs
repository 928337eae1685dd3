use std::io;
use std::path::Path;

use serde::ser::Serialize;
use serde::Deserialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::Value;

use super::{ExperimentConfig, HarnessError};
use crate::attacks::AttackRecord;
use crate::privacy::{format_f64, PrivacyEstimate};

pub const REPORT_FILE: &str = "report.json";
pub const ESTIMATES_FILE: &str = "estimates.csv";
/// Keys holding wall-clock measurements, excluded from replay comparison.
const TIMING_KEYS: [&str; 2] = ["wall_time_s", "timing"];

/// A declared check and how it came out.
#[derive(Debug, Clone, PartialEq, serde::Serialize, Deserialize)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Assertion {
    pub fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, detail: detail.into() }
    }

    /// `observed <= bound`.
    pub fn at_most(name: &str, observed: f64, bound: f64) -> Self {
        Self::new(name, observed <= bound, format!("{observed:e} <= {bound:e}"))
    }

    /// `observed >= bound`.
    pub fn at_least(name: &str, observed: f64, bound: f64) -> Self {
        Self::new(name, observed >= bound, format!("{observed:e} >= {bound:e}"))
    }
}

/// One row of `estimates.csv`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, Deserialize)]
pub struct EstimateRow {
    pub label: String,
    pub rho_hat: f64,
    pub std_error: f64,
    pub n_tasks: usize,
    pub n_test: usize,
    pub skipped_fraction: f64,
}

impl EstimateRow {
    pub fn from_estimate(label: impl Into<String>, e: &PrivacyEstimate) -> Self {
        Self {
            label: label.into(),
            rho_hat: e.rho_hat,
            std_error: e.std_error,
            n_tasks: e.n_tasks,
            n_test: e.n_test,
            skipped_fraction: e.skipped_fraction,
        }
    }
}

/// A gnuplot-ready CSV written next to the report.
#[derive(Debug, Clone, PartialEq, serde::Serialize, Deserialize)]
pub struct Trace {
    pub file: String,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, Deserialize)]
pub struct Versions {
    pub crate_version: String,
    pub report_format: u32,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, Deserialize)]
pub struct Timing {
    pub wall_time_s: f64,
}

/// Everything one run produced. Self-contained: the echoed config is
/// enough to replay it.
#[derive(Debug, Clone, PartialEq, serde::Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment_id: String,
    pub scenario: String,
    pub config: ExperimentConfig,
    pub config_sha256: String,
    pub versions: Versions,
    pub passed: bool,
    pub assertions: Vec<Assertion>,
    pub estimates: Vec<EstimateRow>,
    pub attack_records: Vec<AttackRecord>,
    pub results: Value,
    pub traces: Vec<Trace>,
    pub timing: Timing,
}

impl ExperimentReport {
    pub fn to_json(&self) -> String {
        to_json_17(self)
    }

    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        serde_json::from_str(text).map_err(|e| HarnessError::Report(e.to_string()))
    }

    pub fn estimates_csv(&self) -> String {
        let mut out = format!("{}\n", PrivacyEstimate::CSV_HEADER);
        for e in &self.estimates {
            out.push_str(&format!(
                "{}/{},{},{},{},{},{}\n",
                self.experiment_id,
                e.label,
                format_f64(e.rho_hat),
                format_f64(e.std_error),
                e.n_tasks,
                e.n_test,
                format_f64(e.skipped_fraction)
            ));
        }
        out
    }

    /// Report text with every timing field removed.
    pub fn numeric_payload(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serializes");
        strip_timing(&mut v);
        to_json_17(&v)
    }

    pub fn write(&self, dir: &Path) -> Result<(), HarnessError> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(REPORT_FILE), self.to_json())?;
        std::fs::write(dir.join(ESTIMATES_FILE), self.estimates_csv())?;
        for t in &self.traces {
            std::fs::write(dir.join(&t.file), &t.content)?;
        }
        Ok(())
    }
}

fn strip_timing(v: &mut Value) {
    match v {
        Value::Object(map) => {
            for k in TIMING_KEYS {
                map.remove(k);
            }
            map.values_mut().for_each(strip_timing);
        }
        Value::Array(items) => items.iter_mut().for_each(strip_timing),
        _ => {}
    }
}

/// Pretty JSON whose floats carry 17 significant digits.
struct SigFormatter(PrettyFormatter<'static>);

impl Formatter for SigFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(format_f64(value).as_bytes())
    }
    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, f64::from(value))
    }
    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json_17<T: Serialize + ?Sized>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SigFormatter(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("in-memory serialization");
    out.push(b'\n');
    String::from_utf8(out).expect("serde_json emits UTF-8")
}
