//! Library side of the `influx` binary: argument definitions and command
//! execution, kept separate from `main` so tests can drive commands
//! in-process.

pub mod fixtures;
pub mod output;

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use influx_core::analysis::{
    concordance_curve, concordance_items, influence_sweep, scores_by_question_count,
    scores_by_word_count, SweepPoint, SweepValue,
};
use influx_core::calibration::calibrate;
use influx_core::diversity::{
    group_by_instance, linguistic_diversity, semantic_diversity, EmbeddingRecord,
};
use influx_core::jsonl::{load_embeddings, load_logits};
use influx_core::model::write_dataset;
use influx_core::text::{fres_score, is_linguistic_question};
use influx_core::{
    exact_influence, generate_synthetic, influence_report, load_dataset, Dataset, SyntheticSpec,
    TaskKind,
};
use serde_json::{json, Value};

use crate::output::{
    csv_field, num, opt_num, opt_text, report_json, report_table, text, ReportFormat, Unit,
};

#[derive(Debug, Parser)]
#[command(
    name = "influx",
    version,
    about = "Decompose classifier input influence into question, context, semantic and linguistic parts"
)]
pub struct Cli {
    /// Worker threads for per-instance computations (0 = all cores). Never
    /// changes results.
    #[arg(long, global = true, env = "INFLUX_THREADS", default_value_t = 0)]
    pub threads: usize,

    /// Write output to this file instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Plug-in influence decomposition of a dataset.
    Influence(ReportArgs),
    /// Exact influence by exhaustive enumeration (small datasets).
    Oracle(ReportArgs),
    /// Fit a temperature so mean max probability equals accuracy.
    Calibrate {
        /// Logits JSONL: {"id", "logits", "label"} per line.
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Flesch reading-ease scores as CSV.
    Readability(TextSourceArgs),
    /// Split questions into kept and linguistic-probe (removed) sets.
    FilterQuestions(TextSourceArgs),
    /// Semantic and linguistic diversity of embeddings as CSV.
    Diversity {
        /// Embeddings JSONL: {"id", "instance_id", "vector"} per line.
        #[arg(long = "in")]
        input: PathBuf,
        /// Records used for semantic diversity: the first record of each
        /// instance (its original text) or every record.
        #[arg(long, value_enum, default_value_t = SemanticSource::First)]
        semantic_source: SemanticSource,
    },
    /// Entropy-filtered agreement between readability and true-class
    /// probability orderings.
    Agreement {
        #[command(flatten)]
        dataset: DatasetArgs,
        /// Minimum readability difference for a pair to count.
        #[arg(long, default_value_t = 0.0)]
        min_gap: f64,
        /// Retain fractions: `start:stop:step` or a comma list.
        #[arg(long, default_value = "0.1:1.0:0.1")]
        fractions: String,
        /// Emit CSV `fraction,value,n` instead of JSON.
        #[arg(long)]
        csv: bool,
    },
    /// Influence recomputed on top-ranked fractions of instances.
    Sweep {
        #[command(flatten)]
        dataset: DatasetArgs,
        /// CSV file of `instance_id,score`, or `questions` / `words` to rank
        /// by question count or original-text word count.
        #[arg(long)]
        order_by: String,
        /// Subset fractions: `start:stop:step` or a comma list.
        #[arg(long, default_value = "0.1:1.0:0.1")]
        fractions: String,
        /// Report value tracked along the sweep.
        #[arg(long, value_enum, default_value_t = SweepValueArg::RelativeQuestion)]
        value: SweepValueArg,
        /// Also sweep a seeded random ordering as a baseline.
        #[arg(long)]
        baseline_seed: Option<u64>,
        #[arg(long, value_enum, default_value_t = Unit::Nats)]
        unit: Unit,
        /// Emit CSV instead of JSON.
        #[arg(long)]
        csv: bool,
    },
    /// Generate a synthetic dataset as JSONL.
    Synth {
        /// JSON object: n_semantic, n_realizations_per, n_questions_per,
        /// n_classes, seed, and optionally sharpness, single_element.
        /// Prefix with `@` to read it from a file.
        #[arg(long)]
        spec: String,
    },
}

#[derive(Debug, Args)]
pub struct DatasetArgs {
    /// Dataset JSONL.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// `rc` (context + question) or `sc` (single text).
    #[arg(long, value_enum, default_value_t = TaskArg::Rc)]
    pub task: TaskArg,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[command(flatten)]
    pub dataset: DatasetArgs,
    /// Display unit for influence values; storage is always nats.
    #[arg(long, value_enum, default_value_t = Unit::Nats)]
    pub unit: Unit,
    #[arg(long, value_enum, default_value_t = ReportFormat::Json)]
    pub format: ReportFormat,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct TextSourceArgs {
    /// Plain text, one item per line (blank lines skipped).
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    /// Dataset JSONL; uses realization or question `text` fields.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TaskArg {
    #[value(alias = "mcrc", alias = "multi-element")]
    Rc,
    #[value(alias = "single-element")]
    Sc,
}

impl From<TaskArg> for TaskKind {
    fn from(t: TaskArg) -> Self {
        match t {
            TaskArg::Rc => TaskKind::MultiElement,
            TaskArg::Sc => TaskKind::SingleElement,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SemanticSource {
    First,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepValueArg {
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

impl From<SweepValueArg> for SweepValue {
    fn from(v: SweepValueArg) -> Self {
        match v {
            SweepValueArg::Total => SweepValue::Total,
            SweepValueArg::Question => SweepValue::Question,
            SweepValueArg::Context => SweepValue::Context,
            SweepValueArg::Semantic => SweepValue::Semantic,
            SweepValueArg::Linguistic => SweepValue::Linguistic,
            SweepValueArg::RelativeQuestion => SweepValue::RelativeQuestion,
            SweepValueArg::RelativeContext => SweepValue::RelativeContext,
            SweepValueArg::RelativeSemantic => SweepValue::RelativeSemantic,
            SweepValueArg::RelativeLinguistic => SweepValue::RelativeLinguistic,
        }
    }
}

/// Failure of a command, split by exit status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags or flag values (exit 2).
    #[error("usage: {0}")]
    Usage(String),
    /// Invalid input data or a failed computation (exit 1).
    #[error("{0:#}")]
    Validation(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Validation(_) => 1,
        }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Validation(e)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Wraps a core error with the file it came from.
fn in_file<T>(path: &Path, r: influx_core::Result<T>) -> CliResult<T> {
    r.map_err(|e| match e {
        // I/O errors already name the file.
        influx_core::Error::Io(_) => CliError::Validation(e.into()),
        e => CliError::Validation(anyhow::anyhow!("{}: {e}", path.display())),
    })
}

fn core<T>(r: influx_core::Result<T>) -> CliResult<T> {
    r.map_err(|e| CliError::Validation(e.into()))
}

/// Parses `start:stop:step` (inclusive) or a comma-separated list.
pub fn parse_fractions(spec: &str) -> CliResult<Vec<f64>> {
    let bad = |why: &str| CliError::Usage(format!("--fractions {spec:?}: {why}"));
    let parse = |s: &str| s.trim().parse::<f64>().map_err(|_| bad("not a number"));
    let values = if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(bad("expected start:stop:step"));
        }
        let (start, stop, step) = (parse(parts[0])?, parse(parts[1])?, parse(parts[2])?);
        if step.is_nan() || step <= 0.0 || stop < start {
            return Err(bad("need step > 0 and stop >= start"));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        // Rounded to 12 decimals so 0.1 * 3 prints as 0.3.
        (0..count)
            .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
            .collect()
    } else {
        spec.split(',')
            .map(parse)
            .collect::<CliResult<Vec<f64>>>()?
    };
    if values.iter().any(|&f| !(f > 0.0 && f <= 1.0)) {
        return Err(bad("fractions must lie in (0, 1]"));
    }
    if values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(bad("fractions must be strictly increasing"));
    }
    Ok(values)
}

fn load(args: &DatasetArgs) -> CliResult<Dataset> {
    in_file(&args.input, load_dataset(&args.input, args.task.into()))
}

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path)
        .map_err(|e| CliError::Validation(anyhow::anyhow!("{}: {e}", path.display())))
}

fn json_bytes(v: &Value) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s.into_bytes()
}

/// Runs the parsed command on a pool of `cli.threads` workers and returns
/// the bytes to emit.
pub fn run(cli: &Cli) -> CliResult<Vec<u8>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
        .map_err(|e| CliError::Usage(format!("--threads: {e}")))?;
    pool.install(|| execute(&cli.command))
}

/// Parses `args` (without the program name) and runs them.
pub fn run_args<I, S>(args: I) -> CliResult<Vec<u8>>
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let argv =
        std::iter::once(std::ffi::OsString::from("influx")).chain(args.into_iter().map(Into::into));
    let cli = Cli::try_parse_from(argv).map_err(|e| CliError::Usage(e.to_string()))?;
    run(&cli)
}

fn execute(command: &Command) -> CliResult<Vec<u8>> {
    match command {
        Command::Influence(args) => report(args, influence_report),
        Command::Oracle(args) => report(args, exact_influence),
        Command::Calibrate { input } => calibrate_cmd(input),
        Command::Readability(src) => readability_cmd(src),
        Command::FilterQuestions(src) => filter_cmd(src),
        Command::Diversity {
            input,
            semantic_source,
        } => diversity_cmd(input, *semantic_source),
        Command::Agreement {
            dataset,
            min_gap,
            fractions,
            csv,
        } => agreement_cmd(dataset, *min_gap, fractions, *csv),
        Command::Sweep {
            dataset,
            order_by,
            fractions,
            value,
            baseline_seed,
            unit,
            csv,
        } => sweep_cmd(
            dataset,
            order_by,
            fractions,
            (*value).into(),
            *baseline_seed,
            *unit,
            *csv,
        ),
        Command::Synth { spec } => synth_cmd(spec),
    }
}

fn report(
    args: &ReportArgs,
    estimator: fn(&Dataset) -> influx_core::Result<influx_core::InfluenceReport>,
) -> CliResult<Vec<u8>> {
    let ds = load(&args.dataset)?;
    let r = in_file(&args.dataset.input, estimator(&ds))?;
    Ok(match args.format {
        ReportFormat::Json => json_bytes(&report_json(&r, args.unit, ds.len())),
        ReportFormat::Table => report_table(&r, args.unit, ds.len()).into_bytes(),
    })
}

fn calibrate_cmd(input: &Path) -> CliResult<Vec<u8>> {
    let records = in_file(input, load_logits(input))?;
    let fit = in_file(input, calibrate(&records))?;
    Ok(json_bytes(&json!({
        "temperature": num(fit.temperature.value()),
        "accuracy": num(fit.accuracy),
        "mean_max_prob_before": num(fit.mean_max_prob_before),
        "mean_max_prob_after": num(fit.mean_max_prob_after),
        "n_records": records.len(),
        "iterations": fit.iterations,
    })))
}

/// `(id, text)` pairs from a line file or from a dataset's text fields.
fn text_items(src: &TextSourceArgs, questions: bool) -> CliResult<Vec<(String, String)>> {
    if let Some(path) = &src.input {
        let content = read_text(path)?;
        return Ok(content
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| ((i + 1).to_string(), l.to_string()))
            .collect());
    }
    let path = src.dataset.as_ref().expect("clap enforces one source");
    // Text commands accept either task layout.
    let ds = match load_dataset(path, TaskKind::MultiElement) {
        Ok(ds) => ds,
        Err(_) => in_file(path, load_dataset(path, TaskKind::SingleElement))?,
    };
    let mut items = Vec::new();
    for inst in &ds.instances {
        if questions {
            for q in &inst.questions {
                if let Some(t) = &q.text {
                    items.push((format!("{}/{}", inst.instance_id, q.question_id), t.clone()));
                }
            }
        } else {
            for r in &inst.realizations {
                if let Some(t) = &r.text {
                    items.push((
                        format!("{}/{}", inst.instance_id, r.realization_id),
                        t.clone(),
                    ));
                }
            }
        }
    }
    Ok(items)
}

fn readability_cmd(src: &TextSourceArgs) -> CliResult<Vec<u8>> {
    let mut out = String::from("id,score,n_words,n_sentences,n_syllables\n");
    for (id, t) in text_items(src, false)? {
        let b =
            fres_score(&t).map_err(|e| CliError::Validation(anyhow::anyhow!("item {id}: {e}")))?;
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            csv_field(&id),
            text(b.score),
            b.n_words,
            b.n_sentences,
            b.n_syllables
        ));
    }
    Ok(out.into_bytes())
}

fn filter_cmd(src: &TextSourceArgs) -> CliResult<Vec<u8>> {
    let items = text_items(src, true)?;
    let (removed, kept): (Vec<_>, Vec<_>) =
        items.iter().partition(|(_, t)| is_linguistic_question(t));
    let as_json = |v: &[&(String, String)]| -> Value {
        v.iter()
            .map(|(id, t)| json!({"id": id, "text": t}))
            .collect()
    };
    let fraction = if items.is_empty() {
        0.0
    } else {
        removed.len() as f64 / items.len() as f64
    };
    Ok(json_bytes(&json!({
        "kept": as_json(&kept),
        "removed": as_json(&removed),
        "n": items.len(),
        "removed_fraction": num(fraction),
    })))
}

fn diversity_cmd(input: &Path, source: SemanticSource) -> CliResult<Vec<u8>> {
    let records = in_file(input, load_embeddings(input))?;
    let semantic_records: Vec<EmbeddingRecord> = match source {
        SemanticSource::All => records.clone(),
        SemanticSource::First => group_by_instance(&records)
            .values()
            .map(|g| g[0].clone())
            .collect(),
    };
    let semantic = in_file(input, semantic_diversity(&semantic_records))?;
    let linguistic = in_file(input, linguistic_diversity(&records))?;
    let mut out = String::from("metric,mean,std,n\n");
    for (name, r) in [("semantic", semantic), ("linguistic", linguistic)] {
        out.push_str(&format!(
            "{name},{},{},{}\n",
            text(r.mean),
            text(r.std),
            r.n
        ));
    }
    Ok(out.into_bytes())
}

fn agreement_cmd(
    args: &DatasetArgs,
    min_gap: f64,
    fractions: &str,
    csv: bool,
) -> CliResult<Vec<u8>> {
    let fractions = parse_fractions(fractions)?;
    if !(min_gap >= 0.0 && min_gap.is_finite()) {
        return Err(CliError::Usage(format!(
            "--min-gap must be >= 0, got {min_gap}"
        )));
    }
    let ds = load(args)?;
    let items = concordance_items(&ds);
    let curve = in_file(&args.input, concordance_curve(&items, min_gap, &fractions))?;
    if csv {
        let mut out = String::from("fraction,value,n\n");
        for p in &curve.points {
            out.push_str(&format!(
                "{},{},{}\n",
                text(p.retain_fraction),
                opt_text(p.agreement),
                p.n_pairs
            ));
        }
        return Ok(out.into_bytes());
    }
    let points: Vec<Value> = curve
        .points
        .iter()
        .map(|p| json!({"fraction": num(p.retain_fraction), "agreement": opt_num(p.agreement), "n_pairs": p.n_pairs}))
        .collect();
    Ok(json_bytes(&json!({
        "min_gap": num(min_gap),
        "n_items": items.len(),
        "points": points,
    })))
}

/// Reads `instance_id,score` rows; a header row is skipped if its score
/// column does not parse.
fn read_order_file(path: &Path) -> CliResult<HashMap<String, f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Validation(anyhow::anyhow!("{}: {e}", path.display())))?;
    let mut scores = HashMap::new();
    for (i, row) in reader.records().enumerate() {
        let row =
            row.map_err(|e| CliError::Validation(anyhow::anyhow!("{}: {e}", path.display())))?;
        if row.len() < 2 {
            return Err(CliError::Validation(anyhow::anyhow!(
                "{}: line {}: expected instance_id,score",
                path.display(),
                i + 1
            )));
        }
        match row[1].parse::<f64>() {
            Ok(s) if s.is_finite() => {
                scores.insert(row[0].to_string(), s);
            }
            _ if i == 0 => continue,
            _ => {
                return Err(CliError::Validation(anyhow::anyhow!(
                    "{}: line {}: bad score {:?}",
                    path.display(),
                    i + 1,
                    &row[1]
                )))
            }
        }
    }
    Ok(scores)
}

#[allow(clippy::too_many_arguments)]
fn sweep_cmd(
    args: &DatasetArgs,
    order_by: &str,
    fractions: &str,
    value: SweepValue,
    baseline_seed: Option<u64>,
    unit: Unit,
    csv: bool,
) -> CliResult<Vec<u8>> {
    let fractions = parse_fractions(fractions)?;
    let ds = load(args)?;
    let scores = match order_by {
        "questions" => scores_by_question_count(&ds),
        "words" => scores_by_word_count(&ds),
        path => read_order_file(Path::new(path))?,
    };
    let curve = in_file(
        &args.input,
        influence_sweep(&ds, &scores, &fractions, value, baseline_seed),
    )?;
    let shown = |p: &SweepPoint| {
        p.value.map(|v| {
            if value.is_influence() {
                unit.display(v)
            } else {
                v
            }
        })
    };
    if csv {
        let mut out = String::from("fraction,value,n");
        if curve.baseline.is_some() {
            out.push_str(",baseline_value,baseline_n");
        }
        out.push('\n');
        for (i, p) in curve.points.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{}",
                text(p.subset_fraction),
                opt_text(shown(p)),
                p.n_contexts
            ));
            if let Some(b) = &curve.baseline {
                out.push_str(&format!(",{},{}", opt_text(shown(&b[i])), b[i].n_contexts));
            }
            out.push('\n');
        }
        return Ok(out.into_bytes());
    }
    let points = |ps: &[SweepPoint]| -> Value {
        ps.iter()
            .map(|p| json!({"fraction": num(p.subset_fraction), "value": opt_num(shown(p)), "n": p.n_contexts}))
            .collect()
    };
    Ok(json_bytes(&json!({
        "value": serde_json::to_value(value).expect("serializable"),
        "unit": if value.is_influence() { Value::from(unit.name()) } else { Value::Null },
        "points": points(&curve.points),
        "baseline": curve.baseline.as_deref().map(points),
        "baseline_seed": baseline_seed,
    })))
}

fn synth_cmd(spec: &str) -> CliResult<Vec<u8>> {
    let raw = match spec.strip_prefix('@') {
        Some(path) => read_text(Path::new(path))?,
        None => spec.to_string(),
    };
    let spec: SyntheticSpec =
        serde_json::from_str(&raw).map_err(|e| CliError::Usage(format!("--spec: {e}")))?;
    let ds = core(generate_synthetic(&spec))?;
    let mut out = Vec::new();
    core(write_dataset(&mut out, &ds))?;
    Ok(out)
}
