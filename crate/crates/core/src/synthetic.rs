//! Hierarchical synthetic datasets and an exhaustive-enumeration oracle.
//!
//! Each synthetic instance stands for one semantic content. Its cells follow
//!
//! ```text
//! P(y | q, r)  ∝  (m_q(y) · g_r(y)) ^ sharpness
//! ```
//!
//! where `m_q` is a question-specific mean drawn per (instance, question) and
//! `g_r` a realization-specific perturbation drawn per (instance,
//! realization), both as normalized independent Gamma draws. Every draw comes
//! from its own generator keyed by (seed, stream, indices), so no draw depends
//! on iteration order. Larger `sharpness` pushes every cell toward one-hot.
//!
//! [`exact_influence`] computes each influence value directly as an expected
//! KL divergence over the finite uniform support, which is a different
//! algebraic route from the Jensen-gap estimators in [`crate::info`].

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Gamma, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::info::InfluenceReport;
use crate::model::{validate_distribution, Dataset, Instance, Question, Realization, TaskKind};
use crate::numeric::CompensatedSum;

/// Largest number of cells [`exact_influence`] will enumerate.
pub const MAX_ORACLE_CELLS: usize = 1_000_000;

fn default_sharpness() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_semantic: usize,
    pub n_realizations_per: usize,
    pub n_questions_per: usize,
    pub n_classes: usize,
    pub seed: u64,
    #[serde(default = "default_sharpness")]
    pub sharpness: f64,
    /// Emit a single-element dataset (no questions). Requires
    /// `n_questions_per == 1`.
    #[serde(default)]
    pub single_element: bool,
}

impl SyntheticSpec {
    pub fn new(
        n_semantic: usize,
        n_realizations_per: usize,
        n_questions_per: usize,
        n_classes: usize,
        seed: u64,
    ) -> Self {
        SyntheticSpec {
            n_semantic,
            n_realizations_per,
            n_questions_per,
            n_classes,
            seed,
            sharpness: default_sharpness(),
            single_element: false,
        }
    }

    pub fn with_sharpness(mut self, sharpness: f64) -> Self {
        self.sharpness = sharpness;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_semantic == 0 || self.n_realizations_per == 0 || self.n_questions_per == 0 {
            return Err(Error::InvalidSpec("all counts must be at least 1".into()));
        }
        if self.n_classes < 2 {
            return Err(Error::InvalidSpec("n_classes must be at least 2".into()));
        }
        if !(self.sharpness > 0.0 && self.sharpness.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "sharpness must be positive, got {}",
                self.sharpness
            )));
        }
        if self.single_element && self.n_questions_per != 1 {
            return Err(Error::InvalidSpec(
                "single_element requires n_questions_per = 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy)]
enum Stream {
    QuestionMean = 1,
    RealizationPerturbation = 2,
    Readability = 3,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn keyed_rng(seed: u64, stream: Stream, a: usize, b: usize) -> ChaCha8Rng {
    let mut key = splitmix64(seed);
    for part in [stream as u64, a as u64, b as u64] {
        key = splitmix64(key ^ part);
    }
    ChaCha8Rng::seed_from_u64(key)
}

/// Log of a normalized vector of independent Gamma(1, 1) draws.
fn log_simplex_draw(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let gamma = Gamma::<f64>::new(1.0, 1.0).expect("valid gamma parameters");
    let draws: Vec<f64> = (0..k)
        .map(|_| gamma.sample(rng).max(f64::MIN_POSITIVE))
        .collect();
    let total: f64 = draws.iter().sum();
    draws.iter().map(|d| (d / total).ln()).collect()
}

fn tempered_softmax(log_weights: &[f64], sharpness: f64) -> Vec<f64> {
    let max = log_weights
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = log_weights
        .iter()
        .map(|&w| (sharpness * (w - max)).exp())
        .collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

/// Generates a dataset deterministically from `spec`.
///
/// Realizations also get a readability in `[0, 100)` and questions a gold
/// class (the argmax of their mean), so the output feeds every analysis.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Dataset> {
    spec.validate()?;
    let k = spec.n_classes;
    let nr = spec.n_realizations_per;
    let nq = spec.n_questions_per;
    let uniform = Uniform::new(0.0, 100.0).expect("valid range");

    let instances = (0..spec.n_semantic)
        .map(|i| {
            let means: Vec<Vec<f64>> = (0..nq)
                .map(|q| log_simplex_draw(&mut keyed_rng(spec.seed, Stream::QuestionMean, i, q), k))
                .collect();
            let perturbations: Vec<Vec<f64>> = (0..nr)
                .map(|r| {
                    log_simplex_draw(
                        &mut keyed_rng(spec.seed, Stream::RealizationPerturbation, i, r),
                        k,
                    )
                })
                .collect();

            let realizations = (0..nr)
                .map(|r| {
                    let mut rng = keyed_rng(spec.seed, Stream::Readability, i, r);
                    Realization {
                        realization_id: format!("r{r}"),
                        readability: Some(uniform.sample(&mut rng)),
                        text: None,
                    }
                })
                .collect();
            let gold = |q: usize| crate::calibration::argmax(&means[q]);
            let (questions, true_class) = if spec.single_element {
                (Vec::new(), Some(gold(0)))
            } else {
                let qs = (0..nq)
                    .map(|q| Question {
                        question_id: format!("q{q}"),
                        text: None,
                        true_class: Some(gold(q)),
                    })
                    .collect();
                (qs, None)
            };

            let mut cells = Vec::with_capacity(nr * nq);
            for g in &perturbations {
                for m in &means {
                    let logw: Vec<f64> = m.iter().zip(g).map(|(a, b)| a + b).collect();
                    cells.push(validate_distribution(tempered_softmax(
                        &logw,
                        spec.sharpness,
                    ))?);
                }
            }
            Instance::new(
                format!("s{i:04}"),
                realizations,
                questions,
                true_class,
                cells,
            )
        })
        .collect::<Result<Vec<_>>>()?;

    let task = if spec.single_element {
        TaskKind::SingleElement
    } else {
        TaskKind::MultiElement
    };
    Dataset::new(task, instances)
}

fn check_support(cells: usize) -> Result<()> {
    if cells > MAX_ORACLE_CELLS {
        return Err(Error::SupportTooLarge(cells));
    }
    Ok(())
}

/// `sum_y a(y) ln(a(y) / b(y))`, compensated.
fn kl_divergence(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = CompensatedSum::new();
    for (&x, &y) in a.iter().zip(b) {
        if x > 0.0 {
            acc.add(x * (x / y).ln());
        }
    }
    acc.value()
}

/// Weighted mixture `sum_j w * rows[j]`.
fn mixture(rows: &[Vec<f64>], k: usize) -> Vec<f64> {
    let w = 1.0 / rows.len() as f64;
    (0..k)
        .map(|y| {
            let mut acc = CompensatedSum::new();
            for row in rows {
                acc.add(w * row[y]);
            }
            acc.value()
        })
        .collect()
}

/// Exact influence values of a finite dataset with uniform weights, each
/// computed independently as an expected KL divergence:
///
/// * total: `E_{i,r,q} KL(P(y|i,r,q) || P(y))`
/// * question: `E_{i,r,q} KL(P(y|i,r,q) || P(y|i,r))`
/// * context: `E_{i,r} KL(P(y|i,r) || P(y))`
/// * semantic: `E_i KL(P(y|i) || P(y))`
/// * linguistic: `E_{i,r} KL(P(y|i,r) || P(y|i))`
pub fn exact_influence(ds: &Dataset) -> Result<InfluenceReport> {
    check_support(ds.total_cells())?;
    let k = ds.num_classes;

    // Conditional distributions, built bottom-up as nested mixtures.
    let mut given_context: Vec<Vec<Vec<f64>>> = Vec::with_capacity(ds.len());
    let mut given_semantic: Vec<Vec<f64>> = Vec::with_capacity(ds.len());
    for inst in &ds.instances {
        let rows: Vec<Vec<f64>> = (0..inst.realizations.len())
            .map(|r| {
                let cells: Vec<Vec<f64>> = inst.row(r).iter().map(|d| d.probs().to_vec()).collect();
                mixture(&cells, k)
            })
            .collect();
        given_semantic.push(mixture(&rows, k));
        given_context.push(rows);
    }
    let marginal = mixture(&given_semantic, k);

    let w_instance = 1.0 / ds.len() as f64;
    let mut total = CompensatedSum::new();
    let mut question = CompensatedSum::new();
    let mut context = CompensatedSum::new();
    let mut semantic = CompensatedSum::new();
    let mut linguistic = CompensatedSum::new();
    for (i, inst) in ds.instances.iter().enumerate() {
        let w_r = w_instance / inst.realizations.len() as f64;
        let w_q = w_r / inst.question_count() as f64;
        semantic.add(w_instance * kl_divergence(&given_semantic[i], &marginal));
        for (r, row_mean) in given_context[i].iter().enumerate() {
            context.add(w_r * kl_divergence(row_mean, &marginal));
            linguistic.add(w_r * kl_divergence(row_mean, &given_semantic[i]));
            for cell in inst.row(r) {
                total.add(w_q * kl_divergence(cell.probs(), &marginal));
                question.add(w_q * kl_divergence(cell.probs(), row_mean));
            }
        }
    }
    InfluenceReport::from_parts(
        total.value(),
        question.value(),
        context.value(),
        semantic.value(),
        linguistic.value(),
    )
}
