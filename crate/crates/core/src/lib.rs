//! Information-theoretic decomposition of input influence on classifier
//! outputs.
//!
//! Given output distributions of a classifier over a grid of paraphrased
//! inputs ([`model::Dataset`]), [`info::influence_report`] splits the mutual
//! information between input and output into question, context, semantic and
//! linguistic parts. Supporting measurements live alongside: temperature
//! calibration, Flesch readability, a question filter, embedding diversity,
//! and the curve analyses built on top of the report. [`synthetic`] provides
//! generated datasets with an exact enumeration oracle.

pub mod analysis;
pub mod calibration;
pub mod diversity;
pub mod error;
pub mod info;
pub mod jsonl;
pub mod model;
pub mod numeric;
pub mod synthetic;
pub mod text;

pub use error::{Error, Result};
pub use info::{entropy, influence_report, mean_distribution, relative_influence, InfluenceReport};
pub use model::{
    load_dataset, save_dataset, validate_distribution, Dataset, Distribution, TaskKind,
};
pub use synthetic::{exact_influence, generate_synthetic, SyntheticSpec};
