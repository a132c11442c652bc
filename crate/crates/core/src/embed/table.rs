use std::collections::HashMap;
use std::path::Path;

use thiserror::Error;

use crate::seqcore::Sequence;

#[derive(Debug, Error)]
pub enum TableError {
    #[error("cannot read embedding table: {0}")]
    Io(#[from] std::io::Error),
    #[error("line 1: header must start with \"sequence\" and name at least one feature")]
    BadHeader,
    #[error("line {line}: malformed row: {reason}")]
    MalformedRow { line: u64, reason: String },
    #[error("line {line}: table has {found} features, expected {expected}")]
    DimensionMismatch { line: u64, expected: usize, found: usize },
    #[error("line {line}: duplicate sequence {sequence}")]
    DuplicateSequence { line: u64, sequence: String },
}

/// Precomputed embeddings keyed by exact sequence string.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    pub columns: Vec<String>,
    rows: HashMap<Sequence, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn dimension(&self) -> usize {
        self.columns.len()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn get(&self, seq: &Sequence) -> Option<&[f64]> {
        self.rows.get(seq).map(Vec::as_slice)
    }
}

/// Reads a `sequence,f0,f1,...` table.
pub fn load_embedding_table(path: &Path) -> Result<EmbeddingTable, TableError> {
    load_embedding_table_with_dim(path, None)
}

/// Like [`load_embedding_table`], additionally requiring `expected_dim` features.
pub fn load_embedding_table_with_dim(path: &Path, expected_dim: Option<usize>) -> Result<EmbeddingTable, TableError> {
    let text = std::fs::read_to_string(path)?;
    parse_embedding_table(&text, expected_dim)
}

pub fn parse_embedding_table(text: &str, expected_dim: Option<usize>) -> Result<EmbeddingTable, TableError> {
    let mut reader =
        csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut records = reader.records();

    let header = match records.next() {
        Some(Ok(h)) => h,
        _ => return Err(TableError::BadHeader),
    };
    if header.get(0) != Some("sequence") || header.len() < 2 {
        return Err(TableError::BadHeader);
    }
    let columns: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    if let Some(expected) = expected_dim {
        if expected != columns.len() {
            return Err(TableError::DimensionMismatch { line: 1, expected, found: columns.len() });
        }
    }

    let mut rows = HashMap::new();
    for record in records {
        let record = record.map_err(|e| TableError::MalformedRow {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            reason: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() == 1 && record.get(0) == Some("") {
            continue;
        }
        if record.len() != columns.len() + 1 {
            return Err(TableError::MalformedRow {
                line,
                reason: format!("expected {} values, found {}", columns.len(), record.len() - 1),
            });
        }
        let seq = Sequence::parse(&record[0]).map_err(|e| TableError::MalformedRow { line, reason: e.to_string() })?;
        let values = record
            .iter()
            .skip(1)
            .map(|v| {
                v.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| TableError::MalformedRow { line, reason: format!("bad value {v:?}") })
            })
            .collect::<Result<Vec<f64>, _>>()?;
        if rows.contains_key(&seq) {
            return Err(TableError::DuplicateSequence { line, sequence: seq.to_string() });
        }
        rows.insert(seq, values);
    }
    Ok(EmbeddingTable { columns, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_table() {
        let t = parse_embedding_table("sequence,e0,e1\nAA,0.5,-1.0\n", None).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.get(&Sequence::parse("AA").unwrap()), Some(&[0.5, -1.0][..]));
    }

    #[test]
    fn duplicate_rows_rejected() {
        let err = parse_embedding_table("sequence,e0\nAA,1\nAA,2\n", None).unwrap_err();
        assert!(matches!(err, TableError::DuplicateSequence { line: 3, .. }), "{err}");
    }

    #[test]
    fn arity_mismatch_is_malformed() {
        let err = parse_embedding_table("sequence,e0,e1\nAA,1,2,3\n", None).unwrap_err();
        assert!(matches!(err, TableError::MalformedRow { line: 2, .. }), "{err}");
    }

    #[test]
    fn bad_values_and_header() {
        assert!(matches!(parse_embedding_table("sequence,e0\nAA,abc\n", None), Err(TableError::MalformedRow { .. })));
        assert!(matches!(parse_embedding_table("sequence,e0\nA1,1\n", None), Err(TableError::MalformedRow { .. })));
        assert!(matches!(parse_embedding_table("seq,e0\n", None), Err(TableError::BadHeader)));
        assert!(matches!(
            parse_embedding_table("sequence,e0\n", Some(3)),
            Err(TableError::DimensionMismatch { expected: 3, found: 1, .. })
        ));
    }
}
