//! On-disk layout of a data directory:
//!
//! ```text
//! ledger.jsonl          one record per line, appended as records are made
//! state.json            full snapshot, replaced atomically after every change
//! cases/<case_id>.json  one document per case, replaced atomically per event
//! cases/<case_id>.details  raw incident details
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::{EngineError, Result, Snapshot};
use crate::casework::{store as case_store, Case};
use crate::ledger::{file, TransactionRecord};

fn storage<E: std::fmt::Display>(e: E) -> EngineError {
    EngineError::Storage(e.to_string())
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    let mut f = fs::File::create(&tmp).map_err(storage)?;
    f.write_all(bytes).map_err(storage)?;
    f.sync_all().map_err(storage)?;
    fs::rename(&tmp, path).map_err(storage)
}

#[derive(Debug)]
pub(super) struct Store {
    dir: PathBuf,
}

impl Store {
    pub fn open(dir: PathBuf) -> Result<Store> {
        fs::create_dir_all(dir.join("cases")).map_err(storage)?;
        Ok(Store { dir })
    }

    fn ledger_path(&self) -> PathBuf {
        self.dir.join("ledger.jsonl")
    }

    fn state_path(&self) -> PathBuf {
        self.dir.join("state.json")
    }

    fn cases_dir(&self) -> PathBuf {
        self.dir.join("cases")
    }

    pub fn load_state(&self) -> Result<Option<Snapshot>> {
        match fs::read(self.state_path()) {
            Ok(bytes) => Snapshot::from_bytes(&bytes).map(Some),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(storage(e)),
        }
    }

    /// The ledger file must agree with the restored state.
    pub fn check_ledger_file(&self, records: &[TransactionRecord]) -> Result<()> {
        let path = self.ledger_path();
        if !path.exists() {
            return file::write_records(&path, records).map_err(storage);
        }
        let on_disk = file::read_records(&path).map_err(|e| EngineError::CorruptSnapshot(e.to_string()))?;
        if on_disk != records {
            return Err(EngineError::CorruptSnapshot(format!(
                "ledger.jsonl holds {} records but state.json expects {}",
                on_disk.len(),
                records.len()
            )));
        }
        Ok(())
    }

    pub fn append_record(&self, rec: &TransactionRecord) -> Result<()> {
        file::append_record(&self.ledger_path(), rec).map_err(storage)
    }

    pub fn save_state(&self, snap: &Snapshot) -> Result<()> {
        write_atomic(&self.state_path(), &snap.to_bytes())
    }

    pub fn save_case(&self, case: &Case, details_hex: Option<&str>) -> Result<()> {
        case_store::write_case(&self.cases_dir(), case).map_err(storage)?;
        if let Some(h) = details_hex {
            let path = self.cases_dir().join(format!("{}.details", case.case_id));
            if !path.exists() {
                let raw = hex::decode(h).map_err(storage)?;
                write_atomic(&path, &raw)?;
            }
        }
        Ok(())
    }

    pub fn rewrite<'a>(
        &self,
        records: &[TransactionRecord],
        cases: impl Iterator<Item = &'a Case>,
        details: &BTreeMap<String, String>,
    ) -> Result<()> {
        file::write_records(&self.ledger_path(), records).map_err(storage)?;
        for c in cases {
            self.save_case(c, details.get(&c.case_id).map(String::as_str))?;
        }
        Ok(())
    }
}
