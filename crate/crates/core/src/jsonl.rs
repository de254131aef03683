//! Line-oriented JSON readers for the logits and embeddings formats.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::de::DeserializeOwned;

use crate::calibration::LogitRecord;
use crate::diversity::EmbeddingRecord;
use crate::error::{Error, Result};

/// Parses one record per non-blank line, returning each with its 1-based
/// line number.
pub fn read_records<T, R>(reader: R) -> Result<Vec<(usize, T)>>
where
    T: DeserializeOwned,
    R: BufRead,
{
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| Error::MalformedLine {
            line: idx + 1,
            message: e.to_string(),
        })?;
        out.push((idx + 1, record));
    }
    Ok(out)
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Reads and validates `{"id", "logits", "label"}` records.
pub fn read_logits<R: BufRead>(reader: R) -> Result<Vec<LogitRecord>> {
    let records = read_records::<LogitRecord, _>(reader)?;
    let k = records.first().map(|(_, r)| r.logits.len());
    records
        .into_iter()
        .map(|(line, r)| {
            r.validate().map_err(|e| e.at_line(line))?;
            if Some(r.logits.len()) != k {
                return Err(Error::InconsistentClasses {
                    expected: k.unwrap_or(0),
                    found: r.logits.len(),
                }
                .at_line(line));
            }
            Ok(r)
        })
        .collect()
}

pub fn load_logits(path: impl AsRef<Path>) -> Result<Vec<LogitRecord>> {
    read_logits(open(path.as_ref())?)
}

/// Reads `{"id", "instance_id", "vector"}` records; all vectors must share
/// one non-zero dimension and be finite.
pub fn read_embeddings<R: BufRead>(reader: R) -> Result<Vec<EmbeddingRecord>> {
    let records = read_records::<EmbeddingRecord, _>(reader)?;
    let dim = records.first().map(|(_, r)| r.vector.len());
    records
        .into_iter()
        .map(|(line, r)| {
            if r.vector.is_empty() || r.vector.iter().all(|&x| x == 0.0) {
                return Err(Error::ZeroNorm.at_line(line));
            }
            if r.vector.iter().any(|x| !x.is_finite()) {
                return Err(Error::MalformedLine {
                    line,
                    message: "non-finite vector entry".into(),
                });
            }
            if Some(r.vector.len()) != dim {
                return Err(
                    Error::DimensionMismatch(dim.unwrap_or(0), r.vector.len()).at_line(line)
                );
            }
            Ok(r)
        })
        .collect()
}

pub fn load_embeddings(path: impl AsRef<Path>) -> Result<Vec<EmbeddingRecord>> {
    read_embeddings(open(path.as_ref())?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn logits_with_line_numbers() {
        let input = "{\"id\":\"a\",\"logits\":[2,0],\"label\":0}\n\n{\"id\":\"b\",\"logits\":[1,0],\"label\":5}\n";
        match read_logits(input.as_bytes()).unwrap_err() {
            Error::AtLine { line, .. } => assert_eq!(line, 3),
            other => panic!("{other}"),
        }
        let ok = read_logits("{\"id\":\"a\",\"logits\":[2,0],\"label\":0}".as_bytes()).unwrap();
        assert_eq!(ok[0].logits, vec![2.0, 0.0]);
    }

    #[test]
    fn embeddings_checks() {
        let good = "{\"id\":\"e\",\"instance_id\":\"i\",\"vector\":[1,0]}\n";
        assert_eq!(read_embeddings(good.as_bytes()).unwrap().len(), 1);
        let zero = "{\"id\":\"e\",\"instance_id\":\"i\",\"vector\":[0,0]}\n";
        assert!(read_embeddings(zero.as_bytes()).is_err());
        let drift = format!("{good}{{\"id\":\"f\",\"instance_id\":\"i\",\"vector\":[1,0,0]}}\n");
        assert!(read_embeddings(drift.as_bytes()).is_err());
        assert!(read_embeddings("not json".as_bytes()).is_err());
    }
}
