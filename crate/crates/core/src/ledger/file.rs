//! Line-delimited ledger file: one canonical JSON record per line, UTF-8.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use super::TransactionRecord;

#[derive(Debug, thiserror::Error)]
pub enum LedgerFileError {
    #[error("ledger file i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("ledger file line {line}: {source}")]
    Parse {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
}

/// Serialize one record as its ledger-file line (without the newline).
pub fn record_line(record: &TransactionRecord) -> String {
    serde_json::to_string(record).expect("records always serialize")
}

pub fn append_record(path: &Path, record: &TransactionRecord) -> Result<(), LedgerFileError> {
    let mut f = OpenOptions::new().create(true).append(true).open(path)?;
    writeln!(f, "{}", record_line(record))?;
    f.sync_data()?;
    Ok(())
}

pub fn write_records(path: &Path, records: &[TransactionRecord]) -> Result<(), LedgerFileError> {
    let mut out = String::new();
    for r in records {
        out.push_str(&record_line(r));
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Read every record; blank lines are skipped.
pub fn read_records(path: &Path) -> Result<Vec<TransactionRecord>, LedgerFileError> {
    let reader = BufReader::new(File::open(path)?);
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|source| LedgerFileError::Parse { line: i + 1, source })?;
        records.push(rec);
    }
    Ok(records)
}
