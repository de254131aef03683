//! Derived analyses: normalized ranks, entropy-filtered readability
//! concordance, and influence sweeps over ranked subsets of instances.

use std::cmp::Ordering;
use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::info::{entropy, influence_report, InfluenceReport};
use crate::model::Dataset;
use crate::numeric::retain_count;
use crate::text::words;

/// Ascending ranks `1..=n` divided by `n`; ties share the mean of their rank
/// range.
pub fn normalized_ranks(scores: &[f64]) -> Vec<f64> {
    let n = scores.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut ranks = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        // Positions start..end hold ranks start+1..=end.
        let mean_rank = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = mean_rank / n as f64;
        }
        start = end;
    }
    ranks
}

fn check_fractions(fractions: &[f64]) -> Result<()> {
    if fractions.is_empty() {
        return Err(Error::EmptyInput("no fractions"));
    }
    for &f in fractions {
        if !(f > 0.0 && f <= 1.0) {
            return Err(Error::InvalidFraction(f));
        }
    }
    if fractions.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::UnsortedFractions);
    }
    Ok(())
}

/// One scored cell: a realization's readability and the probability the
/// classifier assigns to the gold class for one question.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcordanceItem {
    pub instance_id: String,
    pub question_id: String,
    pub realization_id: String,
    pub readability: f64,
    pub true_class_prob: f64,
    pub entropy: f64,
}

/// Items for every cell whose realization has a readability score and whose
/// question (or instance) has a gold class. Cells lacking either are skipped.
pub fn concordance_items(ds: &Dataset) -> Vec<ConcordanceItem> {
    let mut items = Vec::new();
    for inst in &ds.instances {
        for q in 0..inst.question_count() {
            let Some(label) = inst.true_class_for(q) else {
                continue;
            };
            for (r, realization) in inst.realizations.iter().enumerate() {
                let Some(readability) = realization.readability else {
                    continue;
                };
                let cell = inst.cell(r, q);
                items.push(ConcordanceItem {
                    instance_id: inst.instance_id.clone(),
                    question_id: inst.question_id(q).to_string(),
                    realization_id: realization.realization_id.clone(),
                    readability,
                    true_class_prob: cell.probs()[label],
                    entropy: entropy(cell),
                });
            }
        }
    }
    items
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConcordancePoint {
    pub retain_fraction: f64,
    /// `None` when no pair qualifies.
    pub agreement: Option<f64>,
    pub n_pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcordanceCurve {
    pub min_gap: f64,
    pub points: Vec<ConcordancePoint>,
}

/// Pair tally in half-units: concordant pairs add 2, probability ties add 1.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PairTally {
    pub half_agreements: usize,
    pub pairs: usize,
}

impl PairTally {
    pub fn agreement(&self) -> Option<f64> {
        (self.pairs > 0).then(|| self.half_agreements as f64 / (2 * self.pairs) as f64)
    }
}

/// Scores one pair: 2 if readability and probability order agree, 1 if the
/// probabilities tie, 0 otherwise.
pub fn pair_score(a: &ConcordanceItem, b: &ConcordanceItem) -> usize {
    let dp = a.true_class_prob - b.true_class_prob;
    if dp == 0.0 {
        return 1;
    }
    let dr = a.readability - b.readability;
    let sign = |x: f64| match x.partial_cmp(&0.0) {
        Some(Ordering::Greater) => 1,
        Some(Ordering::Less) => -1,
        _ => 0,
    };
    if sign(dr) == sign(dp) {
        2
    } else {
        0
    }
}

fn tally_kept(items: &[ConcordanceItem], kept: &[usize], min_gap: f64) -> PairTally {
    let mut groups: HashMap<(&str, &str), Vec<usize>> = HashMap::new();
    for &i in kept {
        groups
            .entry((items[i].instance_id.as_str(), items[i].question_id.as_str()))
            .or_default()
            .push(i);
    }
    let mut tally = PairTally::default();
    for members in groups.values() {
        for (x, &i) in members.iter().enumerate() {
            for &j in &members[x + 1..] {
                if (items[i].readability - items[j].readability).abs() >= min_gap {
                    tally.pairs += 1;
                    tally.half_agreements += pair_score(&items[i], &items[j]);
                }
            }
        }
    }
    tally
}

/// Indices of items sorted by ascending entropy, ties in input order.
pub fn entropy_order(items: &[ConcordanceItem]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.sort_by(|&a, &b| items[a].entropy.total_cmp(&items[b].entropy));
    order
}

/// Agreement between readability order and true-class-probability order
/// among paraphrase pairs, after keeping only the lowest-entropy fraction of
/// items. Pairs are formed within one (instance, question) and must differ in
/// readability by at least `min_gap`.
pub fn concordance_curve(
    items: &[ConcordanceItem],
    min_gap: f64,
    fractions: &[f64],
) -> Result<ConcordanceCurve> {
    if items.is_empty() {
        return Err(Error::EmptyInput("no concordance items"));
    }
    if !(min_gap >= 0.0 && min_gap.is_finite()) {
        return Err(Error::InvalidGap(min_gap));
    }
    check_fractions(fractions)?;
    let order = entropy_order(items);
    let points = fractions
        .iter()
        .map(|&f| {
            let kept = &order[..retain_count(f, items.len())];
            let tally = tally_kept(items, kept, min_gap);
            ConcordancePoint {
                retain_fraction: f,
                agreement: tally.agreement(),
                n_pairs: tally.pairs,
            }
        })
        .collect();
    Ok(ConcordanceCurve { min_gap, points })
}

/// Which report value a sweep tracks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepValue {
    Total,
    Question,
    Context,
    Semantic,
    Linguistic,
    RelativeQuestion,
    RelativeContext,
    RelativeSemantic,
    RelativeLinguistic,
}

impl SweepValue {
    pub fn extract(self, r: &InfluenceReport) -> Option<f64> {
        match self {
            SweepValue::Total => Some(r.total),
            SweepValue::Question => Some(r.element_question),
            SweepValue::Context => Some(r.element_context),
            SweepValue::Semantic => Some(r.semantic),
            SweepValue::Linguistic => Some(r.linguistic),
            SweepValue::RelativeQuestion => r.relative.question,
            SweepValue::RelativeContext => r.relative.context,
            SweepValue::RelativeSemantic => r.relative.semantic,
            SweepValue::RelativeLinguistic => r.relative.linguistic,
        }
    }

    /// True for the unit-carrying influence values (as opposed to ratios).
    pub fn is_influence(self) -> bool {
        matches!(
            self,
            SweepValue::Total
                | SweepValue::Question
                | SweepValue::Context
                | SweepValue::Semantic
                | SweepValue::Linguistic
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub subset_fraction: f64,
    /// `None` when the requested ratio is undefined on the subset.
    pub value: Option<f64>,
    pub n_contexts: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCurve {
    pub points: Vec<SweepPoint>,
    /// Same sweep under a seeded random instance ordering.
    pub baseline: Option<Vec<SweepPoint>>,
}

fn sweep_points(
    ds: &Dataset,
    order: &[usize],
    fractions: &[f64],
    value: SweepValue,
) -> Result<Vec<SweepPoint>> {
    fractions
        .iter()
        .map(|&f| {
            let take = retain_count(f, order.len());
            let subset = ds.subset(&order[..take])?;
            let report = influence_report(&subset)?;
            Ok(SweepPoint {
                subset_fraction: f,
                value: value.extract(&report),
                n_contexts: take,
            })
        })
        .collect()
}

/// Recomputes the influence decomposition on the top-scoring fraction of
/// instances for each requested fraction.
///
/// Instances are ranked by descending score, ties by instance id. With a
/// baseline seed, the sweep is repeated on a uniformly shuffled ordering.
pub fn influence_sweep(
    ds: &Dataset,
    ordering_scores: &HashMap<String, f64>,
    fractions: &[f64],
    value: SweepValue,
    baseline_seed: Option<u64>,
) -> Result<SweepCurve> {
    check_fractions(fractions)?;
    let scores = ds
        .instances
        .iter()
        .map(|inst| {
            ordering_scores
                .get(&inst.instance_id)
                .copied()
                .ok_or_else(|| Error::MissingScore(inst.instance_id.clone()))
        })
        .collect::<Result<Vec<f64>>>()?;

    let by_id = |a: &usize, b: &usize| {
        ds.instances[*a]
            .instance_id
            .cmp(&ds.instances[*b].instance_id)
    };
    let mut order: Vec<usize> = (0..ds.len()).collect();
    order.sort_by(|a, b| scores[*b].total_cmp(&scores[*a]).then_with(|| by_id(a, b)));
    let points = sweep_points(ds, &order, fractions, value)?;

    let baseline = match baseline_seed {
        Some(seed) => {
            let mut shuffled: Vec<usize> = (0..ds.len()).collect();
            shuffled.sort_by(by_id);
            shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            Some(sweep_points(ds, &shuffled, fractions, value)?)
        }
        None => None,
    };
    Ok(SweepCurve { points, baseline })
}

/// Ordering scores: number of questions per instance.
pub fn scores_by_question_count(ds: &Dataset) -> HashMap<String, f64> {
    ds.instances
        .iter()
        .map(|inst| (inst.instance_id.clone(), inst.questions.len() as f64))
        .collect()
}

/// Ordering scores: word count of each instance's first realization text
/// (the original, by convention). Instances without text score 0.
pub fn scores_by_word_count(ds: &Dataset) -> HashMap<String, f64> {
    ds.instances
        .iter()
        .map(|inst| {
            let n = inst.realizations[0]
                .text
                .as_deref()
                .map_or(0, |t| words(t).count());
            (inst.instance_id.clone(), n as f64)
        })
        .collect()
}
