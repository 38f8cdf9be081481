//! Experiment reports and their canonical text encodings.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Pass/fail flag tied to a tolerance recorded in the parameters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Verdict {
    pub passed: bool,
    pub tolerance: String,
}

/// Named columns of plot-ready samples.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Samples {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Samples {
    pub fn new(columns: &[&str]) -> Self {
        Samples { columns: columns.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|v| format_f64(*v)).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentReport {
    pub name: String,
    pub parameters: BTreeMap<String, Value>,
    pub metrics: BTreeMap<String, f64>,
    pub verdicts: BTreeMap<String, Verdict>,
    /// Wall-clock time; kept out of the JSON so reports stay byte-stable.
    #[serde(skip)]
    pub runtime_seconds: f64,
    #[serde(skip)]
    pub samples: BTreeMap<String, Samples>,
}

impl ExperimentReport {
    pub fn new(name: impl Into<String>) -> Self {
        ExperimentReport {
            name: name.into(),
            parameters: BTreeMap::new(),
            metrics: BTreeMap::new(),
            verdicts: BTreeMap::new(),
            runtime_seconds: 0.0,
            samples: BTreeMap::new(),
        }
    }

    pub fn param(&mut self, key: &str, v: impl Serialize) {
        let v = serde_json::to_value(v).expect("parameter is serializable");
        self.parameters.insert(key.to_string(), v);
    }

    pub fn tolerance(&mut self, key: &str, v: f64) {
        self.param(key, v);
    }

    pub fn metric(&mut self, key: &str, v: f64) {
        self.metrics.insert(key.to_string(), v);
    }

    /// Records a verdict; the tolerance key must already be a parameter.
    pub fn verdict(&mut self, key: &str, passed: bool, tolerance: &str) {
        assert!(self.parameters.contains_key(tolerance), "verdict {key} references unrecorded tolerance {tolerance}");
        self.verdicts.insert(key.to_string(), Verdict { passed, tolerance: tolerance.to_string() });
    }

    pub fn add_samples(&mut self, key: &str, s: Samples) {
        self.samples.insert(key.to_string(), s);
    }

    pub fn passed(&self) -> bool {
        self.verdicts.values().all(|v| v.passed)
    }

    pub fn failed_verdicts(&self) -> Vec<&str> {
        self.verdicts.iter().filter(|(_, v)| !v.passed).map(|(k, _)| k.as_str()).collect()
    }

    /// Checks that every verdict names a recorded tolerance.
    pub fn validate(&self) -> Result<()> {
        for (k, v) in &self.verdicts {
            if !self.parameters.contains_key(&v.tolerance) {
                return Err(Error::Config(format!("verdict {k} references unrecorded tolerance {}", v.tolerance)));
            }
        }
        Ok(())
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("report is serializable")
    }

    /// Canonical JSON: sorted keys, two-space indent, 17 significant digits.
    pub fn to_json(&self) -> String {
        to_canonical_json(&self.to_value())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let r: ExperimentReport = serde_json::from_str(s)?;
        r.validate()?;
        Ok(r)
    }
}

/// 17 significant digits; plain decimal for moderate magnitudes, scientific
/// otherwise. Non-finite values print as `NaN`, `inf`, `-inf`.
pub fn format_f64(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0.0".into() } else { "0.0".into() };
    }
    let sci = format!("{x:.16e}");
    let exp: i32 = sci[sci.find('e').unwrap() + 1..].parse().unwrap();
    let a = x.abs();
    if (1e-5..1e15).contains(&a) {
        let decimals = (16 - exp).max(1) as usize;
        format!("{x:.decimals$}")
    } else {
        sci
    }
}

fn write_json(out: &mut String, v: &Value, indent: usize) {
    let pad = |n: usize| "  ".repeat(n);
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                write!(out, "{i}").unwrap();
            } else if let Some(u) = n.as_u64() {
                write!(out, "{u}").unwrap();
            } else {
                let f = n.as_f64().unwrap();
                if f.is_finite() {
                    out.push_str(&format_f64(f));
                } else {
                    out.push_str("null");
                }
            }
        }
        Value::String(s) => out.push_str(&serde_json::to_string(s).unwrap()),
        Value::Array(a) => {
            if a.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push_str("[\n");
            for (i, x) in a.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                write_json(out, x, indent + 1);
                if i + 1 < a.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            out.push_str(&pad(indent));
            out.push(']');
        }
        Value::Object(m) => {
            if m.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push_str("{\n");
            for (i, (k, x)) in m.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                out.push_str(&serde_json::to_string(k).unwrap());
                out.push_str(": ");
                write_json(out, x, indent + 1);
                if i + 1 < m.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            out.push_str(&pad(indent));
            out.push('}');
        }
    }
}

/// Serializes any JSON value the way reports are written.
pub fn to_canonical_json(v: &Value) -> String {
    let mut s = String::new();
    write_json(&mut s, v, 0);
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format() {
        assert_eq!(format_f64(0.42102443824070834), "0.42102443824070834");
        assert_eq!(format_f64(1.0), "1.0000000000000000");
        assert_eq!(format_f64(2.5e-7), "2.4999999999999999e-7");
        assert_eq!(format_f64(1e20), "1.0000000000000000e20");
        for x in [0.1, 1.0 / 3.0, 123456.789, 1e-5, 9.99e14, 3e-300, -7.25] {
            assert_eq!(format_f64(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn round_trip() {
        let mut r = ExperimentReport::new("demo");
        r.tolerance("tol", 1e-3);
        r.metric("value", 0.1 + 0.2);
        r.verdict("ok", true, "tol");
        let s = r.to_json();
        let back = ExperimentReport::from_json(&s).unwrap();
        assert_eq!(back.to_json(), s);
        assert_eq!(back.metrics["value"], 0.1 + 0.2);
    }

    #[test]
    #[should_panic]
    fn verdict_needs_tolerance() {
        let mut r = ExperimentReport::new("demo");
        r.verdict("ok", true, "missing");
    }
}
