//! Golden-fixture verification.
//!
//! A manifest lists fixtures of two kinds:
//!
//! * `cli`: an `influx` argument list whose output is compared against a
//!   stored file. `{fixtures}` in an argument expands to the manifest's
//!   directory. With tolerance 0 the output must match byte for byte;
//!   otherwise JSON numbers, or CSV/table fields that parse as numbers, may
//!   differ by at most the tolerance.
//! * `ratio`: a relative-influence ratio computed from two published values,
//!   checked in percent against an expected percentage.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use influx_core::relative_influence;
use serde::Deserialize;
use serde_json::Value;

use crate::run_args;

#[derive(Debug, Deserialize)]
pub struct Manifest {
    pub fixtures: Vec<Fixture>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Fixture {
    Cli {
        name: String,
        args: Vec<String>,
        expected: String,
        #[serde(default)]
        tolerance: f64,
    },
    Ratio {
        name: String,
        numerator: f64,
        denominator: f64,
        expected_percent: f64,
        tolerance: f64,
    },
}

impl Fixture {
    pub fn name(&self) -> &str {
        match self {
            Fixture::Cli { name, .. } | Fixture::Ratio { name, .. } => name,
        }
    }
}

/// One differing field of a fixture.
#[derive(Debug, Clone, PartialEq)]
pub struct Mismatch {
    pub field: String,
    pub expected: String,
    pub actual: String,
}

#[derive(Debug, Clone)]
pub struct FixtureOutcome {
    pub name: String,
    pub mismatches: Vec<Mismatch>,
    /// Set when the fixture could not be run at all.
    pub error: Option<String>,
}

impl FixtureOutcome {
    pub fn passed(&self) -> bool {
        self.error.is_none() && self.mismatches.is_empty()
    }
}

impl fmt::Display for FixtureOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.passed() {
            return write!(f, "PASS {}", self.name);
        }
        write!(f, "FAIL {}", self.name)?;
        if let Some(e) = &self.error {
            write!(f, ": {e}")?;
        }
        for m in &self.mismatches {
            write!(
                f,
                "\n  {}: expected {}, actual {}",
                m.field, m.expected, m.actual
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct FixtureSummary {
    pub outcomes: Vec<FixtureOutcome>,
}

impl FixtureSummary {
    pub fn passed(&self) -> bool {
        self.outcomes.iter().all(FixtureOutcome::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &FixtureOutcome> {
        self.outcomes.iter().filter(|o| !o.passed())
    }
}

impl fmt::Display for FixtureSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for o in &self.outcomes {
            writeln!(f, "{o}")?;
        }
        let failed = self.failures().count();
        write!(
            f,
            "{} fixtures, {} passed, {failed} failed",
            self.outcomes.len(),
            self.outcomes.len() - failed
        )
    }
}

pub fn load_manifest(path: &Path) -> anyhow::Result<Manifest> {
    let raw = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&raw).with_context(|| format!("parsing {}", path.display()))
}

/// Runs every fixture of the manifest at `manifest_path`, sequentially.
pub fn verify_fixtures(manifest_path: &Path) -> anyhow::Result<FixtureSummary> {
    let manifest = load_manifest(manifest_path)?;
    let dir = manifest_path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    let outcomes = manifest
        .fixtures
        .iter()
        .map(|fx| {
            let (mismatches, error) = match check(fx, &dir) {
                Ok(m) => (m, None),
                Err(e) => (Vec::new(), Some(format!("{e:#}"))),
            };
            FixtureOutcome {
                name: fx.name().to_string(),
                mismatches,
                error,
            }
        })
        .collect();
    Ok(FixtureSummary { outcomes })
}

fn check(fx: &Fixture, dir: &Path) -> anyhow::Result<Vec<Mismatch>> {
    match fx {
        Fixture::Ratio {
            numerator,
            denominator,
            expected_percent,
            tolerance,
            ..
        } => {
            let percent = 100.0 * relative_influence(*numerator, *denominator)?;
            if (percent - expected_percent).abs() <= *tolerance {
                Ok(Vec::new())
            } else {
                Ok(vec![Mismatch {
                    field: "percent".into(),
                    expected: format!("{expected_percent} ± {tolerance}"),
                    actual: format!("{percent:.4}"),
                }])
            }
        }
        Fixture::Cli {
            args,
            expected,
            tolerance,
            ..
        } => {
            let dir_str = dir.to_string_lossy();
            let args: Vec<String> = args
                .iter()
                .map(|a| a.replace("{fixtures}", &dir_str))
                .collect();
            let actual = run_args(&args).map_err(|e| anyhow::anyhow!("{e}"))?;
            let expected_path = dir.join(expected);
            let expected = fs::read(&expected_path)
                .with_context(|| format!("reading {}", expected_path.display()))?;
            compare_outputs(&expected, &actual, *tolerance)
        }
    }
}

/// Diffs two command outputs; an empty result means they agree.
pub fn compare_outputs(
    expected: &[u8],
    actual: &[u8],
    tolerance: f64,
) -> anyhow::Result<Vec<Mismatch>> {
    if expected == actual {
        return Ok(Vec::new());
    }
    let (Ok(exp), Ok(act)) = (std::str::from_utf8(expected), std::str::from_utf8(actual)) else {
        bail!("output is not UTF-8");
    };
    if tolerance == 0.0 {
        return Ok(first_line_difference(exp, act).into_iter().collect());
    }
    let mut out = Vec::new();
    match (
        serde_json::from_str::<Value>(exp),
        serde_json::from_str::<Value>(act),
    ) {
        (Ok(e), Ok(a)) => compare_json("$", &e, &a, tolerance, &mut out),
        _ => compare_fields(exp, act, tolerance, &mut out),
    }
    Ok(out)
}

fn first_line_difference(exp: &str, act: &str) -> Option<Mismatch> {
    let (el, al): (Vec<&str>, Vec<&str>) = (exp.lines().collect(), act.lines().collect());
    (0..el.len().max(al.len()))
        .find(|&i| el.get(i) != al.get(i))
        .map(|i| Mismatch {
            field: format!("line {}", i + 1),
            expected: el.get(i).map_or("<missing>".into(), |s| s.to_string()),
            actual: al.get(i).map_or("<missing>".into(), |s| s.to_string()),
        })
        .or_else(|| {
            // Only trailing newlines differ.
            Some(Mismatch {
                field: "trailing newline".into(),
                expected: format!("{:?}", exp.ends_with('\n')),
                actual: format!("{:?}", act.ends_with('\n')),
            })
        })
}

fn close(a: f64, b: f64, tolerance: f64) -> bool {
    (a - b).abs() <= tolerance
}

fn compare_json(path: &str, e: &Value, a: &Value, tolerance: f64, out: &mut Vec<Mismatch>) {
    let mismatch = |out: &mut Vec<Mismatch>| {
        out.push(Mismatch {
            field: path.to_string(),
            expected: e.to_string(),
            actual: a.to_string(),
        })
    };
    match (e, a) {
        (Value::Number(x), Value::Number(y)) => {
            let (x, y) = (
                x.as_f64().unwrap_or(f64::NAN),
                y.as_f64().unwrap_or(f64::NAN),
            );
            if !close(x, y, tolerance) {
                mismatch(out);
            }
        }
        (Value::Array(xs), Value::Array(ys)) if xs.len() == ys.len() => {
            for (i, (x, y)) in xs.iter().zip(ys).enumerate() {
                compare_json(&format!("{path}[{i}]"), x, y, tolerance, out);
            }
        }
        (Value::Object(xs), Value::Object(ys)) if xs.len() == ys.len() => {
            for (k, x) in xs {
                match ys.get(k) {
                    Some(y) => compare_json(&format!("{path}.{k}"), x, y, tolerance, out),
                    None => out.push(Mismatch {
                        field: format!("{path}.{k}"),
                        expected: x.to_string(),
                        actual: "<missing>".into(),
                    }),
                }
            }
        }
        _ if e == a => {}
        _ => mismatch(out),
    }
}

/// Field-wise comparison of CSV or whitespace-aligned text.
fn compare_fields(exp: &str, act: &str, tolerance: f64, out: &mut Vec<Mismatch>) {
    let split = |line: &str| -> Vec<String> {
        line.split([',', ' ', '\t'])
            .filter(|s| !s.is_empty())
            .map(str::to_string)
            .collect()
    };
    let (el, al): (Vec<&str>, Vec<&str>) = (exp.lines().collect(), act.lines().collect());
    for i in 0..el.len().max(al.len()) {
        let (Some(e), Some(a)) = (el.get(i), al.get(i)) else {
            out.extend(first_line_difference(exp, act));
            return;
        };
        let (ef, af) = (split(e), split(a));
        if ef.len() != af.len() {
            out.push(Mismatch {
                field: format!("line {}", i + 1),
                expected: e.to_string(),
                actual: a.to_string(),
            });
            continue;
        }
        for (j, (x, y)) in ef.iter().zip(&af).enumerate() {
            let same = match (x.parse::<f64>(), y.parse::<f64>()) {
                (Ok(x), Ok(y)) => close(x, y, tolerance),
                _ => x == y,
            };
            if !same {
                out.push(Mismatch {
                    field: format!("line {} field {}", i + 1, j + 1),
                    expected: x.clone(),
                    actual: y.clone(),
                });
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_comparison_reports_line() {
        let m = compare_outputs(b"a\nb\n", b"a\nc\n", 0.0).unwrap();
        assert_eq!(m[0].field, "line 2");
        assert_eq!(m[0].expected, "b");
        assert!(compare_outputs(b"x\n", b"x\n", 0.0).unwrap().is_empty());
    }

    #[test]
    fn json_tolerance_names_field() {
        let e = br#"{"total": 0.5, "relative": {"question": 0.1}}"#;
        let a = br#"{"total": 0.5000001, "relative": {"question": 0.2}}"#;
        let m = compare_outputs(e, a, 1e-6).unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].field, "$.relative.question");
    }

    #[test]
    fn csv_tolerance() {
        let m =
            compare_outputs(b"id,score\n1,119.19\n", b"id,score\n1,119.1900001\n", 1e-3).unwrap();
        assert!(m.is_empty());
        let m = compare_outputs(b"id,score\n1,119.19\n", b"id,score\n1,120\n", 1e-3).unwrap();
        assert_eq!(m[0].field, "line 2 field 2");
    }
}
