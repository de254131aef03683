//! Number formatting and report rendering shared by the commands.

use std::f64::consts::LN_2;
use std::fmt::Write as _;

use clap::ValueEnum;
use influx_core::numeric::round_significant;
use influx_core::InfluenceReport;
use serde_json::{json, Value};

/// Significant digits of every printed number.
pub const SIGNIFICANT_DIGITS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Unit {
    Nats,
    Bits,
}

impl Unit {
    pub fn name(self) -> &'static str {
        match self {
            Unit::Nats => "nats",
            Unit::Bits => "bits",
        }
    }

    /// Converts a value stored in nats for display.
    pub fn display(self, nats: f64) -> f64 {
        match self {
            Unit::Nats => nats,
            Unit::Bits => nats / LN_2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Json,
    Table,
}

pub fn round(x: f64) -> f64 {
    round_significant(x, SIGNIFICANT_DIGITS)
}

/// A JSON number rounded to six significant digits; `null` for non-finite.
pub fn num(x: f64) -> Value {
    let r = round(x);
    if !r.is_finite() {
        return Value::Null;
    }
    // Integral values print without a trailing ".0".
    if r.fract() == 0.0 && r.abs() < 1e15 {
        return json!(r as i64);
    }
    json!(r)
}

pub fn opt_num(x: Option<f64>) -> Value {
    x.map_or(Value::Null, num)
}

/// Plain-text number for CSV/table cells.
pub fn text(x: f64) -> String {
    let r = round(x);
    if r.fract() == 0.0 && r.abs() < 1e15 {
        format!("{}", r as i64)
    } else {
        format!("{r}")
    }
}

pub fn opt_text(x: Option<f64>) -> String {
    x.map_or_else(String::new, text)
}

pub fn report_json(report: &InfluenceReport, unit: Unit, n_instances: usize) -> Value {
    let v = |x: f64| num(unit.display(x));
    json!({
        "total": v(report.total),
        "question": v(report.element_question),
        "context": v(report.element_context),
        "semantic": v(report.semantic),
        "linguistic": v(report.linguistic),
        "relative": {
            "question": opt_num(report.relative.question),
            "context": opt_num(report.relative.context),
            "semantic": opt_num(report.relative.semantic),
            "linguistic": opt_num(report.relative.linguistic),
        },
        "unit": unit.name(),
        "n_instances": n_instances,
    })
}

/// Aligned table: one column per influence value, shares in parentheses.
pub fn report_table(report: &InfluenceReport, unit: Unit, n_instances: usize) -> String {
    let share =
        |x: Option<f64>| x.map_or_else(|| "(-)".to_string(), |r| format!("({:.1}%)", 100.0 * r));
    let cells = [
        ("Total", text(unit.display(report.total)), String::new()),
        (
            "Question",
            text(unit.display(report.element_question)),
            share(report.relative.question),
        ),
        (
            "Context",
            text(unit.display(report.element_context)),
            share(report.relative.context),
        ),
        (
            "Semantic",
            text(unit.display(report.semantic)),
            share(report.relative.semantic),
        ),
        (
            "Linguistic",
            text(unit.display(report.linguistic)),
            share(report.relative.linguistic),
        ),
    ];
    let values: Vec<String> = cells
        .iter()
        .map(|(_, v, s)| {
            if s.is_empty() {
                v.clone()
            } else {
                format!("{v} {s}")
            }
        })
        .collect();
    let widths: Vec<usize> = cells
        .iter()
        .zip(&values)
        .map(|((h, _, _), v)| h.len().max(v.len()))
        .collect();

    let mut out = String::new();
    let mut header = String::new();
    let mut row = String::new();
    for (i, ((h, _, _), v)) in cells.iter().zip(&values).enumerate() {
        let sep = if i + 1 == cells.len() { "" } else { "  " };
        let _ = write!(header, "{h:<w$}{sep}", w = widths[i]);
        let _ = write!(row, "{v:<w$}{sep}", w = widths[i]);
    }
    let _ = writeln!(out, "{}", header.trim_end());
    let _ = writeln!(out, "{}", row.trim_end());
    let _ = writeln!(out, "unit: {}  instances: {n_instances}", unit.name());
    out
}

/// Quotes a CSV field when needed.
pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
