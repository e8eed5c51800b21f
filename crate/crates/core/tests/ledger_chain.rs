use proptest::prelude::*;
use sha2::{Digest as _, Sha256};
use socialdao_core::ledger::file::{read_records, write_records};
use socialdao_core::ledger::{catalog, verify_records, Component, KindRef, Ledger, LedgerError, TransactionRecord};
use socialdao_core::Digest;

type Append = (usize, Vec<String>, Vec<String>, Vec<u8>, u64);

fn appends(max: usize) -> impl Strategy<Value = Vec<Append>> {
    prop::collection::vec(
        (
            0..77usize,
            prop::collection::vec("[a-z0-9-]{1,8}", 0..3),
            prop::collection::vec("[a-z_]{1,12}", 0..2),
            prop::collection::vec(any::<u8>(), 0..48),
            0..4u64,
        ),
        1..max,
    )
}

fn build(steps: &[Append]) -> Ledger {
    let mut ledger = Ledger::new();
    let mut now = 0;
    for (kind, actors, comps, payload, dt) in steps {
        now += dt;
        let kind = catalog()[*kind].kind_ref();
        ledger.append_transaction(kind, actors.clone(), comps.clone(), payload, now).unwrap();
    }
    ledger
}

// Written from the record-format description, independent of the library encoder.
fn reference_hash(r: &TransactionRecord) -> [u8; 32] {
    fn field(out: &mut Vec<u8>, b: &[u8]) {
        out.extend((b.len() as u32).to_be_bytes());
        out.extend(b);
    }
    fn list(out: &mut Vec<u8>, xs: &[String]) {
        let mut inner = (xs.len() as u32).to_be_bytes().to_vec();
        for x in xs {
            field(&mut inner, x.as_bytes());
        }
        field(out, &inner);
    }
    let mut m = Vec::new();
    field(&mut m, &r.seq.to_be_bytes());
    field(&mut m, &r.logical_time.to_be_bytes());
    field(&mut m, r.component.name().as_bytes());
    field(&mut m, &r.local_id.to_be_bytes());
    list(&mut m, &r.actor_ids);
    list(&mut m, &r.component_ids);
    field(&mut m, &r.payload_digest.0);
    field(&mut m, &r.prev_hash.0);
    Sha256::digest(&m).into()
}

/// Change exactly one byte of one field of `r`.
fn tamper(r: &mut TransactionRecord, field: u8, pos: usize, flip: u8) {
    let flip = flip.max(1);
    let letter = |c: u8| if c == b'z' { b'a' } else { c + 1 };
    match field % 8 {
        0 => r.payload_digest.0[pos % 32] ^= flip,
        1 => r.prev_hash.0[pos % 32] ^= flip,
        2 => r.hash.0[pos % 32] ^= flip,
        3 => r.logical_time ^= (flip as u64) << (8 * (pos % 8)),
        4 => r.seq ^= (flip as u64) << (8 * (pos % 8)),
        5 => r.local_id ^= (flip as u32) << (8 * (pos % 4)),
        6 if !r.actor_ids.is_empty() => {
            let n = r.actor_ids.len();
            let a = &mut r.actor_ids[pos % n];
            let mut bytes = a.clone().into_bytes();
            let i = pos % bytes.len();
            bytes[i] = letter(bytes[i]);
            *a = String::from_utf8(bytes).unwrap();
        }
        7 if !r.component_ids.is_empty() => {
            let c = &mut r.component_ids[0];
            let mut bytes = c.clone().into_bytes();
            let i = pos % bytes.len();
            bytes[i] = letter(bytes[i]);
            *c = String::from_utf8(bytes).unwrap();
        }
        _ => r.payload_digest.0[pos % 32] ^= flip,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn random_chains_verify_and_any_tamper_is_located(
        steps in appends(24),
        pick in any::<prop::sample::Index>(),
        field in any::<u8>(),
        pos in any::<usize>(),
        flip in any::<u8>(),
    ) {
        let ledger = build(&steps);
        prop_assert!(ledger.verify_chain().ok);
        prop_assert_eq!(ledger.verify_chain().first_bad_seq, None);

        let mut records = ledger.records().to_vec();
        let k = pick.index(records.len());
        tamper(&mut records[k], field, pos, flip);
        let report = verify_records(&records);
        prop_assert!(!report.ok);
        prop_assert_eq!(report.first_bad_seq, Some(k as u64));
    }

    #[test]
    fn record_hashes_match_reference_encoding(steps in appends(12)) {
        let ledger = build(&steps);
        let mut prev = [0u8; 32];
        for (i, r) in ledger.records().iter().enumerate() {
            prop_assert_eq!(r.seq, i as u64);
            prop_assert_eq!(r.prev_hash.0, prev);
            prop_assert_eq!(r.hash.0, reference_hash(r));
            prev = r.hash.0;
        }
    }

    #[test]
    fn file_round_trip_preserves_chain(steps in appends(12)) {
        let ledger = build(&steps);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ledger.jsonl");
        write_records(&path, ledger.records()).unwrap();
        let back = read_records(&path).unwrap();
        prop_assert_eq!(back.as_slice(), ledger.records());
        prop_assert!(verify_records(&back).ok);
    }

    #[test]
    fn queries_are_exact_filters(steps in appends(30), actor in "[a-z0-9-]{1,8}") {
        let ledger = build(&steps);
        let filter = socialdao_core::ledger::LedgerFilter { actor_id: Some(actor.clone()), ..Default::default() };
        let hits: Vec<u64> = ledger.query(&filter).iter().map(|r| r.seq).collect();
        let expected: Vec<u64> = ledger.records().iter().filter(|r| r.actor_ids.contains(&actor)).map(|r| r.seq).collect();
        prop_assert_eq!(hits, expected);
    }
}

#[test]
fn genesis_links_to_zero_and_time_cannot_regress() {
    let mut ledger = Ledger::new();
    let k = KindRef::new(Component::Preventer, 1);
    ledger.append_transaction(k, vec![], vec![], b"a", 5).unwrap();
    assert_eq!(ledger.records()[0].prev_hash, Digest::ZERO);
    let err = ledger.append_transaction(k, vec![], vec![], b"b", 4).unwrap_err();
    assert_eq!(err.code(), "ClockRegression");
    assert_eq!(ledger.len(), 1);
}

#[test]
fn unknown_kinds_and_sealed_ledgers_refuse_appends() {
    let mut ledger = Ledger::new();
    let err = ledger.append_transaction(KindRef::new(Component::RolesManager, 9), vec![], vec![], b"", 0).unwrap_err();
    assert!(matches!(err, LedgerError::UnknownKind(_)));
    ledger.seal();
    let err = ledger.append_transaction(KindRef::new(Component::RolesManager, 1), vec![], vec![], b"", 0).unwrap_err();
    assert_eq!(err.code(), "LedgerSealed");
    assert!(ledger.is_empty());
}
