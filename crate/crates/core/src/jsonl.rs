//! Line-delimited JSON record files.
//!
//! Every dataset, annotation, task and prediction file in the toolkit is one
//! JSON object per line. Readers report the 1-based line number of the first
//! bad record so that callers can point at it.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum JsonlError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {source}")]
    Record {
        path: PathBuf,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
}

impl JsonlError {
    /// Line of the offending record, if the failure was a parse failure.
    pub fn line(&self) -> Option<usize> {
        match self {
            JsonlError::Record { line, .. } => Some(*line),
            JsonlError::Io { .. } => None,
        }
    }
}

/// Parses records from an in-memory string. Blank lines are skipped.
pub fn parse_str<T: DeserializeOwned>(text: &str, origin: &Path) -> Result<Vec<T>, JsonlError> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(line).map_err(|source| JsonlError::Record {
            path: origin.to_path_buf(),
            line: idx + 1,
            source,
        })?;
        out.push(rec);
    }
    Ok(out)
}

pub fn read<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<Vec<T>, JsonlError> {
    let path = path.as_ref();
    let io_err = |source| JsonlError::Io {
        path: path.to_path_buf(),
        source,
    };
    let reader = BufReader::new(File::open(path).map_err(io_err)?);
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(io_err)?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|source| JsonlError::Record {
            path: path.to_path_buf(),
            line: idx + 1,
            source,
        })?;
        out.push(rec);
    }
    Ok(out)
}

pub fn to_string<T: Serialize>(records: &[T]) -> String {
    let mut out = String::new();
    for rec in records {
        // Plain data types only; serialization cannot fail.
        out.push_str(&serde_json::to_string(rec).expect("record serializes"));
        out.push('\n');
    }
    out
}

pub fn write<T: Serialize>(path: impl AsRef<Path>, records: &[T]) -> Result<(), JsonlError> {
    let path = path.as_ref();
    let io_err = |source| JsonlError::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(io_err)?;
    }
    let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
    for rec in records {
        serde_json::to_writer(&mut w, rec).map_err(|e| io_err(e.into()))?;
        w.write_all(b"\n").map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    #[derive(Debug, PartialEq, Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Rec {
        a: u32,
    }

    #[test]
    fn reports_line_of_bad_record() {
        let text = "{\"a\":1}\n\n{\"a\":2}\n{\"a\":3,\"b\":4}\n";
        let err = parse_str::<Rec>(text, Path::new("x.jsonl")).unwrap_err();
        assert_eq!(err.line(), Some(4));
        assert!(err.to_string().starts_with("x.jsonl:4:"));
    }

    #[test]
    fn empty_input_is_empty_list() {
        let recs: Vec<Rec> = parse_str("", Path::new("e")).unwrap();
        assert!(recs.is_empty());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested/r.jsonl");
        let recs = vec![Rec { a: 1 }, Rec { a: 7 }];
        write(&path, &recs).unwrap();
        assert_eq!(read::<Rec>(&path).unwrap(), recs);
    }
}
