//! Entropy and the plug-in decomposition of input influence.
//!
//! Every influence value is a Jensen gap `H(mean P) - mean H(P)` under a
//! progressively coarser conditioning of the output distributions:
//!
//! | quantity    | conditional entropy term                                  |
//! |-------------|-----------------------------------------------------------|
//! | total       | mean over all cells of `H(P(y|q,r))`                      |
//! | context     | mean over realizations of `H(mean_q P(y|q,r))`            |
//! | semantic    | mean over instances of `H(mean_{r,q} P(y|q,r))`           |
//!
//! all subtracted from `H(p̄)` where `p̄` is the dataset-wide mean
//! distribution. The question term is `total - context` and the linguistic
//! term is `context - semantic`, so both chain-rule identities close exactly.
//! Averages are uniform per instance first, then across instances.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{validate_distribution, Dataset, Distribution, Instance};
use crate::numeric::{compensated_sum, CompensatedSum};

/// Values in `[-ROUNDING_SLACK, 0)` are treated as rounding noise and clamped.
pub const ROUNDING_SLACK: f64 = 1e-12;

/// Shannon entropy in nats, with `0 ln 0 = 0`.
pub fn entropy(d: &Distribution) -> f64 {
    entropy_of(d.probs())
}

pub(crate) fn entropy_of(p: &[f64]) -> f64 {
    compensated_sum(p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.ln()))
}

/// Per-class arithmetic mean of equally sized distributions.
pub fn mean_distribution(ds: &[Distribution]) -> Result<Distribution> {
    let first = ds
        .first()
        .ok_or(Error::EmptyInput("mean of no distributions"))?;
    let k = first.num_classes();
    if let Some(bad) = ds.iter().find(|d| d.num_classes() != k) {
        return Err(Error::InconsistentClasses {
            expected: k,
            found: bad.num_classes(),
        });
    }
    validate_distribution(mean_of(ds.iter().map(|d| d.probs()), k))
}

/// Uniform mean of probability vectors; `k` entries each.
pub(crate) fn mean_of<'a, I>(rows: I, k: usize) -> Vec<f64>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let mut acc = vec![CompensatedSum::new(); k];
    let mut n = 0usize;
    for row in rows {
        for (a, &x) in acc.iter_mut().zip(row) {
            a.add(x);
        }
        n += 1;
    }
    acc.iter().map(|a| a.value() / n as f64).collect()
}

/// `numerator / denominator`, e.g. the share of total influence carried by
/// one element.
pub fn relative_influence(numerator: f64, denominator: f64) -> Result<f64> {
    if denominator <= 0.0 || denominator.is_nan() {
        return Err(Error::DegenerateDenominator(denominator));
    }
    Ok(numerator / denominator)
}

/// Ratios of the decomposition; `None` when the denominator is zero.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RelativeInfluence {
    /// question / total
    pub question: Option<f64>,
    /// context / total
    pub context: Option<f64>,
    /// semantic / context
    pub semantic: Option<f64>,
    /// linguistic / context
    pub linguistic: Option<f64>,
}

/// Total, element, semantic and linguistic influence in nats.
///
/// For single-element tasks `element_question` is 0 and `element_context` is
/// the influence of the whole input text.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfluenceReport {
    pub total: f64,
    #[serde(rename = "question")]
    pub element_question: f64,
    #[serde(rename = "context")]
    pub element_context: f64,
    pub semantic: f64,
    pub linguistic: f64,
    pub relative: RelativeInfluence,
}

impl InfluenceReport {
    /// Builds a report from the three directly estimated quantities, deriving
    /// the question and linguistic terms by subtraction.
    pub fn from_estimates(total: f64, context: f64, semantic: f64) -> Result<Self> {
        Self::from_parts(
            total,
            total - context,
            context,
            semantic,
            context - semantic,
        )
    }

    /// Builds a report from all five values, clamping rounding noise and
    /// filling in the ratios.
    pub fn from_parts(
        total: f64,
        question: f64,
        context: f64,
        semantic: f64,
        linguistic: f64,
    ) -> Result<Self> {
        let total = clamp_rounding("total", total)?;
        let element_question = clamp_rounding("question", question)?;
        let element_context = clamp_rounding("context", context)?;
        let semantic = clamp_rounding("semantic", semantic)?;
        let linguistic = clamp_rounding("linguistic", linguistic)?;
        let ratio = |num: f64, den: f64| relative_influence(num, den).ok();
        Ok(InfluenceReport {
            total,
            element_question,
            element_context,
            semantic,
            linguistic,
            relative: RelativeInfluence {
                question: ratio(element_question, total),
                context: ratio(element_context, total),
                semantic: ratio(semantic, element_context),
                linguistic: ratio(linguistic, element_context),
            },
        })
    }

    /// The five influence values in display order
    /// (total, question, context, semantic, linguistic).
    pub fn values(&self) -> [f64; 5] {
        [
            self.total,
            self.element_question,
            self.element_context,
            self.semantic,
            self.linguistic,
        ]
    }
}

fn clamp_rounding(quantity: &'static str, value: f64) -> Result<f64> {
    if value.is_nan() || value < -ROUNDING_SLACK {
        return Err(Error::NegativeInfluence { quantity, value });
    }
    Ok(value.max(0.0))
}

/// Per-instance pieces of the estimators.
struct InstanceTerms {
    mean: Vec<f64>,
    cell_entropy: f64,
    context_entropy: f64,
    semantic_entropy: f64,
}

fn instance_terms(instance: &Instance) -> InstanceTerms {
    let k = instance.num_classes();
    let nr = instance.realizations.len();
    let cells = instance.cells();

    let cell_entropy = compensated_sum(cells.iter().map(entropy)) / cells.len() as f64;

    let context_entropy = compensated_sum((0..nr).map(|r| {
        let row_mean = mean_of(instance.row(r).iter().map(|d| d.probs()), k);
        entropy_of(&row_mean)
    })) / nr as f64;

    let mean = mean_of(cells.iter().map(|d| d.probs()), k);
    let semantic_entropy = entropy_of(&mean);

    InstanceTerms {
        mean,
        cell_entropy,
        context_entropy,
        semantic_entropy,
    }
}

/// Plug-in estimates of the full influence decomposition.
///
/// Per-instance terms are computed in parallel on the current rayon pool and
/// reduced in instance-id order with compensated summation, so the result is
/// bit-identical for any thread count and any instance order.
pub fn influence_report(ds: &Dataset) -> Result<InfluenceReport> {
    let terms: Vec<InstanceTerms> = ds.instances.par_iter().map(instance_terms).collect();

    let mut order: Vec<usize> = (0..terms.len()).collect();
    order.sort_by(|&a, &b| {
        ds.instances[a]
            .instance_id
            .cmp(&ds.instances[b].instance_id)
    });

    let n = terms.len() as f64;
    let k = ds.num_classes;
    let mut pooled = vec![CompensatedSum::new(); k];
    let mut cell = CompensatedSum::new();
    let mut context = CompensatedSum::new();
    let mut semantic = CompensatedSum::new();
    for &i in &order {
        let t = &terms[i];
        for (acc, &x) in pooled.iter_mut().zip(&t.mean) {
            acc.add(x);
        }
        cell.add(t.cell_entropy);
        context.add(t.context_entropy);
        semantic.add(t.semantic_entropy);
    }
    let p_bar: Vec<f64> = pooled.iter().map(|a| a.value() / n).collect();
    let h_marginal = entropy_of(&p_bar);

    InfluenceReport::from_estimates(
        h_marginal - cell.value() / n,
        h_marginal - context.value() / n,
        h_marginal - semantic.value() / n,
    )
}
