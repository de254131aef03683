//! Semantic and linguistic diversity from embedding vectors.
//!
//! Semantic diversity is the mean cosine distance of each text's embedding
//! to the corpus centroid. Linguistic diversity computes the same quantity
//! within each instance's group of realization embeddings and then averages
//! the per-instance means across instances.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{compensated_sum, CompensatedSum};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingRecord {
    pub id: String,
    pub instance_id: String,
    pub vector: Vec<f64>,
}

/// Mean and population standard deviation of a set of distances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiversityResult {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl DiversityResult {
    fn from_values(values: &[f64]) -> Self {
        let n = values.len();
        let mean = compensated_sum(values.iter().copied()) / n as f64;
        let var = compensated_sum(values.iter().map(|v| (v - mean).powi(2))) / n as f64;
        let std = if n == 1 { 0.0 } else { var.sqrt() };
        DiversityResult { mean, std, n }
    }
}

fn norm(v: &[f64]) -> f64 {
    compensated_sum(v.iter().map(|x| x * x)).sqrt()
}

/// `1 - cos(a, b)`, clamped to `[0, 2]`.
pub fn cosine_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(a.len(), b.len()));
    }
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 || !na.is_finite() || !nb.is_finite() {
        return Err(Error::ZeroNorm);
    }
    let dot = compensated_sum(a.iter().zip(b).map(|(x, y)| x * y));
    let cos = (dot / (na * nb)).clamp(-1.0, 1.0);
    Ok((1.0 - cos).clamp(0.0, 2.0))
}

fn centroid(vectors: &[&[f64]]) -> Vec<f64> {
    let dim = vectors[0].len();
    let mut acc = vec![CompensatedSum::new(); dim];
    for v in vectors {
        for (a, &x) in acc.iter_mut().zip(v.iter()) {
            a.add(x);
        }
    }
    acc.iter()
        .map(|a| a.value() / vectors.len() as f64)
        .collect()
}

/// Cosine distances of `vectors` to their centroid.
fn distances_to_centroid(vectors: &[&[f64]]) -> Result<Vec<f64>> {
    let dim = vectors[0].len();
    if let Some(v) = vectors.iter().find(|v| v.len() != dim) {
        return Err(Error::DimensionMismatch(dim, v.len()));
    }
    let c = centroid(vectors);
    if norm(&c) == 0.0 {
        return Err(Error::ZeroNorm);
    }
    vectors.iter().map(|v| cosine_distance(v, &c)).collect()
}

pub fn semantic_diversity(records: &[EmbeddingRecord]) -> Result<DiversityResult> {
    if records.is_empty() {
        return Err(Error::EmptyInput("no embedding records"));
    }
    let vectors: Vec<&[f64]> = records.iter().map(|r| r.vector.as_slice()).collect();
    Ok(DiversityResult::from_values(&distances_to_centroid(
        &vectors,
    )?))
}

/// Groups records by instance id; groups come out in id order.
pub fn group_by_instance(records: &[EmbeddingRecord]) -> BTreeMap<&str, Vec<&EmbeddingRecord>> {
    let mut groups: BTreeMap<&str, Vec<&EmbeddingRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(r.instance_id.as_str()).or_default().push(r);
    }
    groups
}

pub fn linguistic_diversity(records: &[EmbeddingRecord]) -> Result<DiversityResult> {
    if records.is_empty() {
        return Err(Error::EmptyInput("no embedding records"));
    }
    let dim = records[0].vector.len();
    let mut per_instance = Vec::new();
    for group in group_by_instance(records).values() {
        let vectors: Vec<&[f64]> = group.iter().map(|r| r.vector.as_slice()).collect();
        if vectors[0].len() != dim {
            return Err(Error::DimensionMismatch(dim, vectors[0].len()));
        }
        let d = distances_to_centroid(&vectors)?;
        per_instance.push(compensated_sum(d.iter().copied()) / d.len() as f64);
    }
    Ok(DiversityResult::from_values(&per_instance))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(instance: &str, v: &[f64]) -> EmbeddingRecord {
        EmbeddingRecord {
            id: String::new(),
            instance_id: instance.into(),
            vector: v.to_vec(),
        }
    }

    #[test]
    fn cosine_examples() {
        assert!(cosine_distance(&[0.3, 0.4], &[0.3, 0.4]).unwrap().abs() < 1e-15);
        assert!((cosine_distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((cosine_distance(&[1.0, 0.0], &[1.0, 1.0]).unwrap() - 0.292_893).abs() < 1e-6);
        assert!((cosine_distance(&[1.0, 0.0], &[-2.0, 0.0]).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn cosine_errors() {
        assert_eq!(
            cosine_distance(&[0.0, 0.0], &[1.0, 0.0]),
            Err(Error::ZeroNorm)
        );
        assert_eq!(
            cosine_distance(&[1.0, 0.0], &[1.0, 0.0, 0.0]),
            Err(Error::DimensionMismatch(2, 3))
        );
    }

    #[test]
    fn semantic_examples() {
        let same = [
            rec("a", &[1.0, 2.0]),
            rec("b", &[1.0, 2.0]),
            rec("c", &[1.0, 2.0]),
        ];
        let r = semantic_diversity(&same).unwrap();
        assert!(r.mean.abs() < 1e-15 && r.std.abs() < 1e-15 && r.n == 3);

        let r = semantic_diversity(&[rec("a", &[1.0, 0.0]), rec("b", &[0.0, 1.0])]).unwrap();
        assert!((r.mean - 0.292_893).abs() < 1e-6);
        assert!(r.std.abs() < 1e-15);

        let r = semantic_diversity(&[rec("a", &[3.0, -1.0])]).unwrap();
        assert!(r.mean.abs() < 1e-15);
        assert_eq!(r.std, 0.0);
    }

    #[test]
    fn opposite_vectors_have_zero_centroid() {
        let err = semantic_diversity(&[rec("a", &[1.0, 0.0]), rec("b", &[-1.0, 0.0])]);
        assert_eq!(err, Err(Error::ZeroNorm));
    }

    #[test]
    fn linguistic_examples() {
        let r = linguistic_diversity(&[
            rec("a", &[1.0, 0.0]),
            rec("a", &[1.0, 0.0]),
            rec("b", &[0.0, 1.0]),
        ])
        .unwrap();
        assert!(r.mean.abs() < 1e-15 && r.std.abs() < 1e-15 && r.n == 2);

        let r = linguistic_diversity(&[rec("a", &[1.0, 0.0]), rec("a", &[0.0, 1.0])]).unwrap();
        assert!((r.mean - 0.292_893).abs() < 1e-6);
        assert_eq!(r.std, 0.0);
    }

    #[test]
    fn linguistic_two_groups() {
        // Per-instance means 0.1 and 0.3 give mean 0.2, population std 0.1.
        let r = DiversityResult::from_values(&[0.1, 0.3]);
        assert!((r.mean - 0.2).abs() < 1e-15);
        assert!((r.std - 0.1).abs() < 1e-15);
    }

    #[test]
    fn empty_input() {
        assert!(semantic_diversity(&[]).is_err());
        assert!(linguistic_diversity(&[]).is_err());
    }
}
