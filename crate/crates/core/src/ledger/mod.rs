//! Append-only, hash-chained transaction log.
//!
//! Every record commits to its predecessor through `prev_hash`, and its own
//! `hash` is SHA-256 over a canonical, length-prefixed encoding of the
//! record's fields (see [`canonical_bytes`]). Appending is the only mutation.

pub mod catalog;
pub mod file;

use serde::{Deserialize, Serialize};

use crate::digest::Digest;
pub use catalog::{catalog, catalog_lookup, Component, KindRef, TransactionKind};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LedgerError {
    #[error("transaction kind {0} is not in the catalog")]
    UnknownKind(KindRef),
    #[error("ledger is sealed; no further appends")]
    LedgerSealed,
    #[error("logical time {attempted} is earlier than the last record's {last}")]
    ClockRegression { last: u64, attempted: u64 },
}

impl LedgerError {
    pub fn code(&self) -> &'static str {
        match self {
            LedgerError::UnknownKind(_) => "UnknownKind",
            LedgerError::LedgerSealed => "LedgerSealed",
            LedgerError::ClockRegression { .. } => "ClockRegression",
        }
    }
}

/// One immutable ledger entry. Field order is the on-disk order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransactionRecord {
    pub seq: u64,
    pub logical_time: u64,
    pub component: Component,
    pub local_id: u32,
    pub actor_ids: Vec<String>,
    pub component_ids: Vec<String>,
    pub payload_digest: Digest,
    pub prev_hash: Digest,
    pub hash: Digest,
}

impl TransactionRecord {
    pub fn kind(&self) -> KindRef {
        KindRef::new(self.component, self.local_id)
    }

    /// Catalog entry for this record's kind, if the kind is catalogued.
    pub fn kind_entry(&self) -> Option<&'static TransactionKind> {
        catalog::lookup(self.kind()).ok()
    }

    /// Recompute the hash from the stored fields.
    pub fn compute_hash(&self) -> Digest {
        Digest::of(&canonical_bytes(
            self.seq,
            self.logical_time,
            self.kind(),
            &self.actor_ids,
            &self.component_ids,
            &self.payload_digest,
            &self.prev_hash,
        ))
    }
}

fn put_field(buf: &mut Vec<u8>, bytes: &[u8]) {
    buf.extend_from_slice(&(bytes.len() as u32).to_be_bytes());
    buf.extend_from_slice(bytes);
}

fn put_list(buf: &mut Vec<u8>, items: &[String]) {
    let mut inner = Vec::new();
    inner.extend_from_slice(&(items.len() as u32).to_be_bytes());
    for item in items {
        put_field(&mut inner, item.as_bytes());
    }
    put_field(buf, &inner);
}

/// Canonical encoding hashed into `TransactionRecord::hash`.
///
/// Each field is written as a big-endian `u32` byte length followed by the
/// field bytes, in this order: seq (u64 BE), logical_time (u64 BE), component
/// name (UTF-8), local_id (u32 BE), actor_ids, component_ids, payload_digest
/// (32 bytes), prev_hash (32 bytes). A list field's bytes are a `u32` BE item
/// count followed by each item length-prefixed.
pub fn canonical_bytes(
    seq: u64,
    logical_time: u64,
    kind: KindRef,
    actor_ids: &[String],
    component_ids: &[String],
    payload_digest: &Digest,
    prev_hash: &Digest,
) -> Vec<u8> {
    let mut buf = Vec::with_capacity(160);
    put_field(&mut buf, &seq.to_be_bytes());
    put_field(&mut buf, &logical_time.to_be_bytes());
    put_field(&mut buf, kind.component.name().as_bytes());
    put_field(&mut buf, &kind.local_id.to_be_bytes());
    put_list(&mut buf, actor_ids);
    put_list(&mut buf, component_ids);
    put_field(&mut buf, payload_digest.as_bytes());
    put_field(&mut buf, prev_hash.as_bytes());
    buf
}

/// Result of [`Ledger::verify_chain`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntegrityReport {
    pub ok: bool,
    pub first_bad_seq: Option<u64>,
}

/// Verify a sequence of records as a chain starting at genesis.
pub fn verify_records(records: &[TransactionRecord]) -> IntegrityReport {
    let mut prev = Digest::ZERO;
    for (i, rec) in records.iter().enumerate() {
        let good = rec.seq == i as u64
            && rec.prev_hash == prev
            && rec.kind_entry().is_some()
            && rec.compute_hash() == rec.hash;
        if !good {
            return IntegrityReport { ok: false, first_bad_seq: Some(i as u64) };
        }
        prev = rec.hash;
    }
    IntegrityReport { ok: true, first_bad_seq: None }
}

/// Inclusive logical-time window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeRange {
    pub from: u64,
    pub to: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerFilter {
    #[serde(default)]
    pub component: Option<Component>,
    #[serde(default)]
    pub actor_id: Option<String>,
    #[serde(default)]
    pub kind: Option<KindRef>,
    #[serde(default)]
    pub time_range: Option<TimeRange>,
}

impl LedgerFilter {
    pub fn matches(&self, rec: &TransactionRecord) -> bool {
        self.component.is_none_or(|c| rec.component == c)
            && self.kind.is_none_or(|k| rec.kind() == k)
            && self.actor_id.as_ref().is_none_or(|a| rec.actor_ids.iter().any(|x| x == a))
            && self
                .time_range
                .is_none_or(|r| rec.logical_time >= r.from && rec.logical_time <= r.to)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ledger {
    records: Vec<TransactionRecord>,
    #[serde(default)]
    sealed: bool,
}

impl Ledger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Wrap already-persisted records without checking them.
    /// Call [`Ledger::verify_chain`] before trusting the result.
    pub fn from_records_unchecked(records: Vec<TransactionRecord>) -> Self {
        Ledger { records, sealed: false }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[TransactionRecord] {
        &self.records
    }

    pub fn get(&self, seq: u64) -> Option<&TransactionRecord> {
        self.records.get(seq as usize)
    }

    pub fn last(&self) -> Option<&TransactionRecord> {
        self.records.last()
    }

    pub fn is_sealed(&self) -> bool {
        self.sealed
    }

    pub fn seal(&mut self) {
        self.sealed = true;
    }

    /// Fails if an append right now would be refused.
    pub fn ensure_writable(&self, logical_time: u64) -> Result<(), LedgerError> {
        if self.sealed {
            return Err(LedgerError::LedgerSealed);
        }
        if let Some(last) = self.records.last() {
            if logical_time < last.logical_time {
                return Err(LedgerError::ClockRegression { last: last.logical_time, attempted: logical_time });
            }
        }
        Ok(())
    }

    pub fn append_transaction(
        &mut self,
        kind: KindRef,
        actor_ids: Vec<String>,
        component_ids: Vec<String>,
        payload: &[u8],
        logical_time: u64,
    ) -> Result<&TransactionRecord, LedgerError> {
        catalog::lookup(kind)?;
        self.ensure_writable(logical_time)?;
        let seq = self.records.len() as u64;
        let prev_hash = self.records.last().map_or(Digest::ZERO, |r| r.hash);
        let payload_digest = Digest::of(payload);
        let mut rec = TransactionRecord {
            seq,
            logical_time,
            component: kind.component,
            local_id: kind.local_id,
            actor_ids,
            component_ids,
            payload_digest,
            prev_hash,
            hash: Digest::ZERO,
        };
        rec.hash = rec.compute_hash();
        self.records.push(rec);
        Ok(self.records.last().expect("just pushed"))
    }

    pub fn verify_chain(&self) -> IntegrityReport {
        verify_records(&self.records)
    }

    pub fn query(&self, filter: &LedgerFilter) -> Vec<&TransactionRecord> {
        self.records.iter().filter(|r| filter.matches(r)).collect()
    }
}
