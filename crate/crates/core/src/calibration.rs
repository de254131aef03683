//! Single-parameter temperature scaling.
//!
//! The temperature is chosen so that the mean maximum probability over a set
//! of records equals the records' accuracy. Dividing logits by a positive
//! scalar never changes the argmax, so accuracy is unaffected.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Distribution;
use crate::numeric::compensated_sum;

pub const MIN_TEMPERATURE: f64 = 1e-3;
pub const MAX_TEMPERATURE: f64 = 1e3;
/// Target gap between mean max probability and accuracy.
pub const CALIBRATION_TOLERANCE: f64 = 1e-6;
pub const MAX_ITERATIONS: usize = 200;

/// Raw classifier scores and the gold label for one example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogitRecord {
    pub id: String,
    pub logits: Vec<f64>,
    pub label: usize,
}

impl LogitRecord {
    pub fn validate(&self) -> Result<()> {
        let invalid = |message: String| Error::InvalidLogits {
            id: self.id.clone(),
            message,
        };
        if self.logits.len() < 2 {
            return Err(invalid(format!(
                "need at least 2 logits, got {}",
                self.logits.len()
            )));
        }
        if self.logits.iter().any(|x| !x.is_finite()) {
            return Err(invalid("non-finite logit".into()));
        }
        if self.label >= self.logits.len() {
            return Err(invalid(format!(
                "label {} out of range for K={}",
                self.label,
                self.logits.len()
            )));
        }
        Ok(())
    }

    /// Predicted class; ties go to the lowest index.
    pub fn predicted(&self) -> usize {
        argmax(&self.logits)
    }

    pub fn is_correct(&self) -> bool {
        self.predicted() == self.label
    }
}

/// Index of the largest entry, lowest index on ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Temperature(f64);

impl Temperature {
    pub fn new(t: f64) -> Result<Self> {
        if !(MIN_TEMPERATURE..=MAX_TEMPERATURE).contains(&t) {
            return Err(Error::TemperatureOutOfRange(t));
        }
        Ok(Temperature(t))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

fn softmax_scaled(logits: &[f64], t: f64) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&s| ((s - max) / t).exp()).collect();
    let z = compensated_sum(exps.iter().copied());
    exps.into_iter().map(|e| e / z).collect()
}

/// Softmax of `logits / t`, computed with the max logit subtracted.
pub fn apply_temperature(record: &LogitRecord, t: Temperature) -> Distribution {
    Distribution::from_raw(softmax_scaled(&record.logits, t.value()))
}

/// Maximum softmax probability of `logits / t`.
fn max_probability(logits: &[f64], t: f64) -> f64 {
    // The max entry contributes exp(0) = 1 to the partition function.
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let z = compensated_sum(logits.iter().map(|&s| ((s - max) / t).exp()));
    1.0 / z
}

pub fn mean_max_probability(records: &[LogitRecord], t: f64) -> f64 {
    compensated_sum(records.iter().map(|r| max_probability(&r.logits, t))) / records.len() as f64
}

pub fn accuracy(records: &[LogitRecord]) -> f64 {
    records.iter().filter(|r| r.is_correct()).count() as f64 / records.len() as f64
}

fn check_records(records: &[LogitRecord]) -> Result<()> {
    let first = records
        .first()
        .ok_or(Error::EmptyInput("no logit records"))?;
    let k = first.logits.len();
    for r in records {
        r.validate()?;
        if r.logits.len() != k {
            return Err(Error::InconsistentClasses {
                expected: k,
                found: r.logits.len(),
            });
        }
    }
    Ok(())
}

/// Fitted temperature together with the before/after diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationFit {
    pub temperature: Temperature,
    pub accuracy: f64,
    pub mean_max_prob_before: f64,
    pub mean_max_prob_after: f64,
    pub iterations: usize,
}

/// Finds `t` with mean max probability equal to accuracy, by bisection on
/// `ln t`. Mean max probability is non-increasing in `t`.
pub fn fit_temperature(records: &[LogitRecord]) -> Result<Temperature> {
    calibrate(records).map(|fit| fit.temperature)
}

pub fn calibrate(records: &[LogitRecord]) -> Result<CalibrationFit> {
    check_records(records)?;
    let target = accuracy(records);
    let gap = |t: f64| mean_max_probability(records, t) - target;

    let high = mean_max_probability(records, MIN_TEMPERATURE);
    let low = mean_max_probability(records, MAX_TEMPERATURE);
    if target > high + CALIBRATION_TOLERANCE || target < low - CALIBRATION_TOLERANCE {
        return Err(Error::CalibrationUnattainable {
            accuracy: target,
            low,
            high,
        });
    }

    // Symmetric bounds so the first midpoint is exactly t = 1.
    let mut lo = -MAX_TEMPERATURE.ln();
    let mut hi = MAX_TEMPERATURE.ln();
    let mut iterations = 0;
    let mut best = None;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        let t = mid.exp();
        let g = gap(t);
        if g.abs() <= CALIBRATION_TOLERANCE {
            best = Some(t);
            break;
        }
        if g > 0.0 {
            // Still over-confident: raise the temperature.
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = match best {
        Some(t) => t,
        None => {
            let t = (0.5 * (lo + hi)).exp();
            let g = gap(t);
            if g.abs() > CALIBRATION_TOLERANCE {
                return Err(Error::CalibrationNotConverged(g));
            }
            t
        }
    };
    let t = t.clamp(MIN_TEMPERATURE, MAX_TEMPERATURE);
    Ok(CalibrationFit {
        temperature: Temperature(t),
        accuracy: target,
        mean_max_prob_before: mean_max_probability(records, 1.0),
        mean_max_prob_after: mean_max_probability(records, t),
        iterations,
    })
}
