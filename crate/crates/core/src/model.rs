//! Dataset data model, JSONL wire format and validated ingestion.
//!
//! An [`Instance`] holds one semantic unit: its realizations (paraphrases),
//! its questions, and a dense grid of output distributions, one per
//! (realization, question) cell. Single-element tasks have no questions and
//! key their cells with the sentinel question id [`SENTINEL_QUESTION`].

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{compensated_sum, round_significant};

/// Question id used for the cells of single-element instances.
pub const SENTINEL_QUESTION: &str = "_";

/// Admissible deviation of a probability vector's sum from 1 at ingestion.
pub const SUM_TOLERANCE: f64 = 1e-6;

/// A validated probability vector over `K >= 2` classes.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Distribution(Vec<f64>);

impl Distribution {
    /// Validates `probs` and renormalizes it to sum to 1.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        validate_distribution(probs)
    }

    /// Wraps a vector the caller knows to be a probability vector (e.g. a mean
    /// of validated distributions). Not renormalized.
    pub(crate) fn from_raw(probs: Vec<f64>) -> Self {
        debug_assert!(probs.len() >= 2);
        Distribution(probs)
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn num_classes(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for Distribution {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Checks a probability vector and renormalizes it to an exact sum of 1.
pub fn validate_distribution(mut probs: Vec<f64>) -> Result<Distribution> {
    if probs.len() < 2 {
        return Err(Error::TooFewClasses(probs.len()));
    }
    for (index, &value) in probs.iter().enumerate() {
        if !value.is_finite() {
            return Err(Error::NonFiniteProbability(index));
        }
        if value < 0.0 {
            return Err(Error::NegativeProbability { index, value });
        }
    }
    let sum = compensated_sum(probs.iter().copied());
    if (sum - 1.0).abs() > SUM_TOLERANCE {
        return Err(Error::SumOutsideTolerance(round_significant(sum, 12)));
    }
    // A vector within a few ulps of sum 1 is already as normalized as division
    // can make it; leaving it untouched keeps re-validation the identity.
    let ulp_slack = 8.0 * probs.len() as f64 * f64::EPSILON;
    if (sum - 1.0).abs() > ulp_slack {
        probs.iter_mut().for_each(|p| *p /= sum);
    }
    Ok(Distribution(probs))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    /// Context plus question, e.g. multiple-choice reading comprehension.
    MultiElement,
    /// A single input text, e.g. sentiment classification.
    SingleElement,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Realization {
    #[serde(rename = "id")]
    pub realization_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub readability: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Question {
    #[serde(rename = "id")]
    pub question_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub true_class: Option<usize>,
}

/// One semantic unit with a dense grid of output distributions.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub instance_id: String,
    pub realizations: Vec<Realization>,
    /// Empty for single-element tasks.
    pub questions: Vec<Question>,
    /// Gold class for single-element instances, which have no question to
    /// carry it.
    pub true_class: Option<usize>,
    /// Row-major grid: `cells[r * question_count() + q]`.
    cells: Vec<Distribution>,
}

impl Instance {
    /// Builds an instance from a row-major cell grid.
    pub fn new(
        instance_id: impl Into<String>,
        realizations: Vec<Realization>,
        questions: Vec<Question>,
        true_class: Option<usize>,
        cells: Vec<Distribution>,
    ) -> Result<Self> {
        let instance = Instance {
            instance_id: instance_id.into(),
            realizations,
            questions,
            true_class,
            cells,
        };
        instance.validate()?;
        Ok(instance)
    }

    fn invalid(&self, message: impl Into<String>) -> Error {
        Error::InvalidInstance {
            instance: self.instance_id.clone(),
            message: message.into(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.realizations.is_empty() {
            return Err(self.invalid("no realizations"));
        }
        let mut seen = HashSet::new();
        for r in &self.realizations {
            if !seen.insert(r.realization_id.as_str()) {
                return Err(
                    self.invalid(format!("duplicate realization id {:?}", r.realization_id))
                );
            }
            if r.readability.is_some_and(|x| !x.is_finite()) {
                return Err(
                    self.invalid(format!("non-finite readability for {:?}", r.realization_id))
                );
            }
        }
        let mut seen = HashSet::new();
        for q in &self.questions {
            if q.question_id == SENTINEL_QUESTION {
                return Err(self.invalid("question id \"_\" is reserved"));
            }
            if !seen.insert(q.question_id.as_str()) {
                return Err(self.invalid(format!("duplicate question id {:?}", q.question_id)));
            }
        }
        let expected = self.realizations.len() * self.question_count();
        if self.cells.len() != expected {
            return Err(self.invalid(format!(
                "expected {expected} cells, got {}",
                self.cells.len()
            )));
        }
        let k = self.cells[0].num_classes();
        for cell in &self.cells {
            if cell.num_classes() != k {
                return Err(Error::InconsistentClasses {
                    expected: k,
                    found: cell.num_classes(),
                });
            }
        }
        let labels = self
            .questions
            .iter()
            .filter_map(|q| q.true_class)
            .chain(self.true_class);
        for label in labels {
            if label >= k {
                return Err(self.invalid(format!("true class {label} out of range for K={k}")));
            }
        }
        Ok(())
    }

    /// Number of question columns in the grid (1 for single-element instances).
    pub fn question_count(&self) -> usize {
        self.questions.len().max(1)
    }

    pub fn num_classes(&self) -> usize {
        self.cells[0].num_classes()
    }

    pub fn cell(&self, realization: usize, question: usize) -> &Distribution {
        &self.cells[realization * self.question_count() + question]
    }

    /// Distributions of one realization, across all questions.
    pub fn row(&self, realization: usize) -> &[Distribution] {
        let nq = self.question_count();
        &self.cells[realization * nq..(realization + 1) * nq]
    }

    pub fn cells(&self) -> &[Distribution] {
        &self.cells
    }

    /// Gold class for question column `question`, falling back to the
    /// instance-level label.
    pub fn true_class_for(&self, question: usize) -> Option<usize> {
        self.questions
            .get(question)
            .and_then(|q| q.true_class)
            .or(self.true_class)
    }

    pub fn question_id(&self, question: usize) -> &str {
        self.questions
            .get(question)
            .map_or(SENTINEL_QUESTION, |q| q.question_id.as_str())
    }
}

/// A validated collection of instances sharing one class count.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub task: TaskKind,
    pub num_classes: usize,
    pub instances: Vec<Instance>,
}

impl Dataset {
    pub fn new(task: TaskKind, instances: Vec<Instance>) -> Result<Self> {
        let first = instances.first().ok_or(Error::EmptyDataset)?;
        let num_classes = first.num_classes();
        let mut ids = HashSet::new();
        for instance in &instances {
            check_instance(task, num_classes, instance)?;
            if !ids.insert(instance.instance_id.as_str()) {
                return Err(Error::DuplicateInstance(instance.instance_id.clone()));
            }
        }
        Ok(Dataset {
            task,
            num_classes,
            instances,
        })
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn total_cells(&self) -> usize {
        self.instances.iter().map(|i| i.cells.len()).sum()
    }

    /// A dataset restricted to the given instance indices, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Dataset> {
        let instances = indices.iter().map(|&i| self.instances[i].clone()).collect();
        Dataset::new(self.task, instances)
    }
}

fn check_instance(task: TaskKind, num_classes: usize, instance: &Instance) -> Result<()> {
    match task {
        TaskKind::MultiElement if instance.questions.is_empty() => {
            return Err(Error::TaskMismatch(format!(
                "instance {:?} has no questions in a multi_element dataset",
                instance.instance_id
            )))
        }
        TaskKind::SingleElement if !instance.questions.is_empty() => {
            return Err(Error::TaskMismatch(format!(
                "instance {:?} has questions in a single_element dataset",
                instance.instance_id
            )))
        }
        _ => {}
    }
    if instance.num_classes() != num_classes {
        return Err(Error::InconsistentClasses {
            expected: num_classes,
            found: instance.num_classes(),
        });
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Wire format

#[derive(Debug, Serialize, Deserialize)]
struct RawCell {
    r: String,
    q: String,
    probs: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawInstance {
    instance_id: String,
    realizations: Vec<Realization>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    questions: Vec<Question>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    true_class: Option<usize>,
    cells: Vec<RawCell>,
}

impl RawInstance {
    fn into_instance(self) -> Result<Instance> {
        let invalid = |message: String| Error::InvalidInstance {
            instance: self.instance_id.clone(),
            message,
        };
        if self.realizations.is_empty() {
            return Err(invalid("no realizations".into()));
        }
        let r_index: HashMap<&str, usize> = self
            .realizations
            .iter()
            .enumerate()
            .map(|(i, r)| (r.realization_id.as_str(), i))
            .collect();
        let question_ids: Vec<&str> = if self.questions.is_empty() {
            vec![SENTINEL_QUESTION]
        } else {
            self.questions
                .iter()
                .map(|q| q.question_id.as_str())
                .collect()
        };
        let q_index: HashMap<&str, usize> = question_ids
            .iter()
            .enumerate()
            .map(|(i, &q)| (q, i))
            .collect();
        let nq = question_ids.len();

        let mut grid: Vec<Option<Distribution>> = vec![None; self.realizations.len() * nq];
        for cell in &self.cells {
            let r = *r_index.get(cell.r.as_str()).ok_or_else(|| {
                invalid(format!("cell references unknown realization {:?}", cell.r))
            })?;
            let q = *q_index
                .get(cell.q.as_str())
                .ok_or_else(|| invalid(format!("cell references unknown question {:?}", cell.q)))?;
            let slot = &mut grid[r * nq + q];
            if slot.is_some() {
                return Err(invalid(format!("duplicate cell ({},{})", cell.r, cell.q)));
            }
            *slot = Some(validate_distribution(cell.probs.clone())?);
        }
        let mut cells = Vec::with_capacity(grid.len());
        for (idx, slot) in grid.into_iter().enumerate() {
            match slot {
                Some(d) => cells.push(d),
                None => {
                    return Err(Error::IncompleteGrid {
                        realization: self.realizations[idx / nq].realization_id.clone(),
                        question: question_ids[idx % nq].to_string(),
                    })
                }
            }
        }
        Instance::new(
            self.instance_id.clone(),
            self.realizations.clone(),
            self.questions.clone(),
            self.true_class,
            cells,
        )
    }

    fn from_instance(instance: &Instance) -> Self {
        let nq = instance.question_count();
        let cells = instance
            .cells
            .iter()
            .enumerate()
            .map(|(idx, d)| RawCell {
                r: instance.realizations[idx / nq].realization_id.clone(),
                q: instance.question_id(idx % nq).to_string(),
                probs: d.probs().to_vec(),
            })
            .collect();
        RawInstance {
            instance_id: instance.instance_id.clone(),
            realizations: instance.realizations.clone(),
            questions: instance.questions.clone(),
            true_class: instance.true_class,
            cells,
        }
    }
}

/// Reads a dataset from JSONL. Blank lines are skipped; errors carry the
/// 1-based line number.
pub fn read_dataset<R: BufRead>(reader: R, task: TaskKind) -> Result<Dataset> {
    let mut instances = Vec::new();
    let mut num_classes = None;
    let mut ids = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawInstance = serde_json::from_str(&line).map_err(|e| Error::MalformedLine {
            line: line_no,
            message: e.to_string(),
        })?;
        let instance = raw.into_instance().map_err(|e| e.at_line(line_no))?;
        let k = *num_classes.get_or_insert(instance.num_classes());
        check_instance(task, k, &instance).map_err(|e| e.at_line(line_no))?;
        if !ids.insert(instance.instance_id.clone()) {
            return Err(Error::DuplicateInstance(instance.instance_id).at_line(line_no));
        }
        instances.push(instance);
    }
    Dataset::new(task, instances)
}

pub fn load_dataset(path: impl AsRef<Path>, task: TaskKind) -> Result<Dataset> {
    let file = File::open(path.as_ref())
        .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
    read_dataset(BufReader::new(file), task)
}

/// Writes one JSON record per instance, cells in row-major grid order.
pub fn write_dataset<W: Write>(mut writer: W, ds: &Dataset) -> Result<()> {
    for instance in &ds.instances {
        let raw = RawInstance::from_instance(instance);
        serde_json::to_writer(&mut writer, &raw).map_err(|e| Error::Io(e.to_string()))?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}

pub fn save_dataset(path: impl AsRef<Path>, ds: &Dataset) -> Result<()> {
    let file = File::create(path.as_ref())
        .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
    write_dataset(BufWriter::new(file), ds)
}
