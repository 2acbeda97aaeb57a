//! Verification reports and their JSON / CSV forms.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::monotonicity::Outcome;
use crate::{Error, Result};

/// JSON has no infinities or NaN; those are written as the strings `inf`,
/// `-inf` and `nan`.
mod float {
    use super::*;

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn to_text(x: f64) -> String {
        if x.is_nan() {
            "nan".into()
        } else if x == f64::INFINITY {
            "inf".into()
        } else if x == f64::NEG_INFINITY {
            "-inf".into()
        } else {
            x.to_string()
        }
    }

    pub fn from_text(s: &str) -> Option<f64> {
        match s {
            "nan" => Some(f64::NAN),
            "inf" => Some(f64::INFINITY),
            "-inf" => Some(f64::NEG_INFINITY),
            _ => s.parse().ok(),
        }
    }

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        if x.is_finite() {
            Repr::Num(*x).serialize(s)
        } else {
            Repr::Text(to_text(*x)).serialize(s)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(x),
            Repr::Text(t) => from_text(&t).ok_or_else(|| serde::de::Error::custom(format!("invalid number `{t}`"))),
        }
    }

    pub mod opt {
        use super::*;

        pub fn serialize<S: Serializer>(x: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
            match x {
                Some(v) if v.is_finite() => s.serialize_some(v),
                Some(v) => s.serialize_some(&to_text(*v)),
                None => s.serialize_none(),
            }
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<f64>, D::Error> {
            match Option::<Repr>::deserialize(d)? {
                None => Ok(None),
                Some(Repr::Num(x)) => Ok(Some(x)),
                Some(Repr::Text(t)) => from_text(&t)
                    .map(Some)
                    .ok_or_else(|| serde::de::Error::custom(format!("invalid number `{t}`"))),
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Elliptic,
    Parabolic,
}

/// One measured inequality. The outcome is decided by the owning module;
/// `value` and `threshold` are reported for inspection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    #[serde(with = "float")]
    pub value: f64,
    #[serde(with = "float")]
    pub threshold: f64,
    #[serde(with = "float")]
    pub tol_disc: f64,
    pub outcome: Outcome,
}

impl Check {
    /// Passes when `value ≤ threshold + tol_disc`.
    pub fn at_most(name: impl Into<String>, value: f64, threshold: f64, tol_disc: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            tol_disc,
            outcome: Outcome::from_bool(value <= threshold + tol_disc),
        }
    }

    /// Passes when `value ≥ threshold − tol_disc`.
    pub fn at_least(name: impl Into<String>, value: f64, threshold: f64, tol_disc: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            tol_disc,
            outcome: Outcome::from_bool(value >= threshold - tol_disc),
        }
    }

    /// Passes when `|value − threshold| ≤ tol_disc`.
    pub fn close_to(name: impl Into<String>, value: f64, target: f64, tol_disc: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold: target,
            tol_disc,
            outcome: Outcome::from_bool((value - target).abs() <= tol_disc),
        }
    }

    /// A boolean expectation, recorded as `1` or `0` against `1`.
    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Self {
            name: name.into(),
            value: if ok { 1.0 } else { 0.0 },
            threshold: 1.0,
            tol_disc: 0.0,
            outcome: Outcome::from_bool(ok),
        }
    }

    pub fn with_outcome(mut self, outcome: Outcome) -> Self {
        self.outcome = outcome;
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Fitted {
    #[serde(with = "float::opt")]
    pub beta: Option<f64>,
    #[serde(rename = "C", with = "float::opt")]
    pub c: Option<f64>,
    /// Largest flatness `ε` at which the improvement step was observed to hold.
    #[serde(with = "float::opt")]
    pub largest_eps0: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config: std::collections::BTreeMap<String, String>,
    pub version: String,
    pub parallel: bool,
}

impl Provenance {
    pub fn new(config: std::collections::BTreeMap<String, String>) -> Self {
        Self {
            config,
            version: env!("CARGO_PKG_VERSION").to_string(),
            parallel: cfg!(feature = "parallel"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub scenario: String,
    pub side: Side,
    pub checks: Vec<Check>,
    pub fitted: Fitted,
    pub provenance: Provenance,
    /// `(log r, log osc)` of the decay fit, emitted as a separate CSV.
    #[serde(skip)]
    pub decay_curve: Vec<(f64, f64)>,
}

impl VerificationReport {
    pub fn new(scenario: &str, side: Side, provenance: Provenance) -> Self {
        Self {
            scenario: scenario.to_string(),
            side,
            checks: Vec::new(),
            fitted: Fitted::default(),
            provenance,
            decay_curve: Vec::new(),
        }
    }

    pub fn push(&mut self, check: Check) {
        log::info!(
            "{}: {} = {} (threshold {}, tol {}) -> {:?}",
            self.scenario,
            check.name,
            check.value,
            check.threshold,
            check.tol_disc,
            check.outcome
        );
        self.checks.push(check);
    }

    pub fn failed(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| c.outcome == Outcome::Fail).collect()
    }

    /// Process exit code: `0` when no check fails, `1` otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.failed().is_empty() {
            0
        } else {
            1
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

const CSV_HEADER: [&str; 5] = ["name", "value", "threshold", "tol_disc", "outcome"];

fn outcome_text(o: Outcome) -> &'static str {
    match o {
        Outcome::Pass => "pass",
        Outcome::Fail => "fail",
        Outcome::NotApplicable => "not-applicable",
    }
}

/// Checks table, one row per check, floats in shortest round-trip form.
pub fn checks_to_csv(checks: &[Check]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for c in checks {
        w.write_record([
            c.name.clone(),
            float::to_text(c.value),
            float::to_text(c.threshold),
            float::to_text(c.tol_disc),
            outcome_text(c.outcome).to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

pub fn checks_from_csv(text: &str) -> Result<Vec<Check>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        if rec.len() != CSV_HEADER.len() {
            return Err(Error::parse(line, format!("expected {} fields", CSV_HEADER.len())));
        }
        let num = |j: usize| float::from_text(&rec[j]).ok_or_else(|| Error::parse(line, format!("invalid number `{}`", &rec[j])));
        let outcome = match &rec[4] {
            "pass" => Outcome::Pass,
            "fail" => Outcome::Fail,
            "not-applicable" => Outcome::NotApplicable,
            other => return Err(Error::parse(line, format!("invalid outcome `{other}`"))),
        };
        out.push(Check {
            name: rec[0].to_string(),
            value: num(1)?,
            threshold: num(2)?,
            tol_disc: num(3)?,
            outcome,
        });
    }
    Ok(out)
}

/// Two-column `log_r,log_osc` CSV.
pub fn decay_to_csv(curve: &[(f64, f64)]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["log_r", "log_osc"])?;
    for (a, b) in curve {
        w.write_record([a.to_string(), b.to_string()])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// Writes the report to `path` and, when a decay curve is present, the curve
/// to `<stem>_decay.csv` next to it. Returns the paths written.
pub fn emit_report(report: &VerificationReport, format: crate::harness::Format, path: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let path = path.as_ref();
    let body = match format {
        crate::harness::Format::Json => report.to_json()?,
        crate::harness::Format::Csv => checks_to_csv(&report.checks)?,
    };
    std::fs::write(path, body)?;
    let mut written = vec![path.to_path_buf()];
    if !report.decay_curve.is_empty() {
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("report");
        let decay = path.with_file_name(format!("{stem}_decay.csv"));
        std::fs::write(&decay, decay_to_csv(&report.decay_curve)?)?;
        written.push(decay);
    }
    Ok(written)
}
