//! Whole-engine snapshots for export, import and restart.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Engine, EngineError, OpRecord, Result};
use crate::casework::{self, CaseBook};
use crate::digest::Digest;
use crate::governance::Governance;
use crate::identity::{IdentityRegistry, OracleStub};
use crate::ledger::{Ledger, TransactionRecord};
use crate::roles::RoleRegistry;
use crate::tokens::TokenBook;

pub const SNAPSHOT_FORMAT: u32 = 1;

/// Every piece of engine state. All maps are ordered, so serializing the
/// same state always yields the same bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub format: u32,
    pub clock: u64,
    pub sealed: bool,
    pub ledger: Vec<TransactionRecord>,
    pub payloads: BTreeMap<Digest, String>,
    pub tokens: TokenBook,
    pub identity: IdentityRegistry,
    pub roles: RoleRegistry,
    pub governance: Governance,
    pub cases: CaseBook,
    pub case_details: BTreeMap<String, String>,
    pub oracle: OracleStub,
}

impl Snapshot {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(self).expect("snapshots serialize");
        out.push(b'\n');
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Snapshot> {
        serde_json::from_slice(bytes).map_err(|e| EngineError::CorruptSnapshot(e.to_string()))
    }

    /// Chain, payload and case consistency checks.
    pub fn validate(&self) -> Result<()> {
        let corrupt = |m: String| Err(EngineError::CorruptSnapshot(m));
        if self.format != SNAPSHOT_FORMAT {
            return corrupt(format!("unsupported format {}", self.format));
        }
        let report = crate::ledger::verify_records(&self.ledger);
        if !report.ok {
            return corrupt(format!("chain verification failed at seq {}", report.first_bad_seq.unwrap_or_default()));
        }
        if let Some(last) = self.ledger.last() {
            if self.clock < last.logical_time {
                return corrupt(format!("clock {} is behind the ledger ({})", self.clock, last.logical_time));
            }
        }
        for (digest, payload) in &self.payloads {
            if Digest::of(payload.as_bytes()) != *digest {
                return corrupt(format!("payload {digest} does not match its digest"));
            }
        }
        let mut facts: BTreeMap<&str, Vec<casework::CaseFact>> = BTreeMap::new();
        for rec in &self.ledger {
            let Some(payload) = self.payloads.get(&rec.payload_digest) else {
                return corrupt(format!("payload for seq {} is missing", rec.seq));
            };
            let op: OpRecord = serde_json::from_str(payload)
                .map_err(|e| EngineError::CorruptSnapshot(format!("payload for seq {}: {e}", rec.seq)))?;
            if let OpRecord::Case(f) = op {
                let id = self.cases.get(f.case_id()).map_err(|e| EngineError::CorruptSnapshot(e.to_string()))?;
                facts.entry(id.case_id.as_str()).or_default().push(f);
            }
        }
        for case in self.cases.cases() {
            let replayed = facts.get(case.case_id.as_str()).and_then(casework::replay);
            if replayed.as_ref() != Some(case) {
                return corrupt(format!("case {} does not match its ledger records", case.case_id));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImportReceipt {
    pub ledger_len: usize,
    pub cases: usize,
    pub clock: u64,
}

impl Engine {
    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            format: SNAPSHOT_FORMAT,
            clock: self.clock,
            sealed: self.ledger.is_sealed(),
            ledger: self.ledger.records().to_vec(),
            payloads: self.payloads.clone(),
            tokens: self.tokens.clone(),
            identity: self.identity.clone(),
            roles: self.roles.clone(),
            governance: self.governance.clone(),
            cases: self.cases.clone(),
            case_details: self.case_details.clone(),
            oracle: self.oracle.clone(),
        }
    }

    pub fn export_bytes(&self) -> Vec<u8> {
        self.snapshot().to_bytes()
    }

    pub(super) fn restore(&mut self, snap: Snapshot) -> Result<()> {
        snap.validate()?;
        let mut ledger = Ledger::from_records_unchecked(snap.ledger);
        if snap.sealed {
            ledger.seal();
        }
        self.clock = snap.clock;
        self.ledger = ledger;
        self.payloads = snap.payloads;
        self.tokens = snap.tokens;
        self.identity = snap.identity;
        self.roles = snap.roles;
        self.governance = snap.governance;
        self.cases = snap.cases;
        self.case_details = snap.case_details;
        self.oracle = snap.oracle;
        Ok(())
    }

    /// Load a snapshot into this engine, which must be empty.
    pub fn import_bytes(&mut self, bytes: &[u8]) -> Result<ImportReceipt> {
        if !self.is_empty() {
            return Err(EngineError::NonEmptyEngine);
        }
        self.restore(Snapshot::from_bytes(bytes)?)?;
        if let Some(store) = &self.store {
            store.rewrite(self.ledger.records(), self.cases.cases(), &self.case_details)?;
        }
        self.persist_state()?;
        Ok(ImportReceipt { ledger_len: self.ledger.len(), cases: self.cases.len(), clock: self.clock })
    }
}
