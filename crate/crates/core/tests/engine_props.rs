use proptest::prelude::*;
use serde_json::{json, Value};
use socialdao_core::{Command, Engine};

const ACTORS: [&str; 4] = ["ana", "ben", "psy-1", "law-1"];

/// A small command vocabulary that mixes valid and invalid requests.
fn command() -> impl Strategy<Value = (String, Value)> {
    let actor = prop::sample::select(ACTORS.to_vec());
    let case = prop::sample::select(vec!["case-0001", "case-0002", "case-0009"]);
    let amount = 0..30u64;
    prop_oneof![
        (actor.clone(), amount.clone()).prop_map(|(a, n)| ("mint".into(), json!({"token_type": "GT", "recipient": a, "amount": n}))),
        (actor.clone(), actor.clone(), amount.clone())
            .prop_map(|(a, b, n)| ("transfer".into(), json!({"token_type": "GT", "from": a, "to": b, "amount": n}))),
        (actor.clone(), "[a-z ]{0,12}").prop_map(|(a, t)| ("mint".into(), json!({"token_type": "NFT", "recipient": a, "content": t}))),
        actor.clone().prop_map(|a| ("report_incident".into(), json!({"reporter": a, "details": "d"}))),
        (case.clone(), prop::sample::select(vec!["identity_failed", "record", "close", "grant_financial_support"]))
            .prop_map(|(c, ev)| ("advance_case".into(), json!({"case_id": c, "event": ev}))),
        (case.clone(), "[a-z]{1,6}").prop_map(|(c, t)| ("attach_evidence".into(), json!({"case_id": c, "content": t}))),
        actor.clone().prop_map(|a| ("propose".into(), json!({"proposer": a, "payload": {"kind": "ContentModeration", "content_ref": "post-1", "action": "remove"}}))),
        (actor.clone(), prop::sample::select(vec!["Yes", "No", "Abstain"]))
            .prop_map(|(a, c)| ("vote".into(), json!({"proposal_id": "prop-0001", "voter": a, "choice": c}))),
        Just(("tally".into(), json!({"proposal_id": "prop-0001"}))),
        Just(("execute".into(), json!({"proposal_id": "prop-0001"}))),
        (0..30u64).prop_map(|t| ("advance_clock".into(), json!({"to": t}))),
        (actor.clone(), prop::sample::select(vec!["victim", "psychologist", "sextortion_diagnoser", "pilot"]))
            .prop_map(|(a, r)| ("onboard".into(), json!({"actor_id": a, "role_name": r}))),
        Just(("verify_ledger".into(), json!({}))),
        Just(("list_cases".into(), json!({}))),
        Just(("assess_situation".into(), json!({"answers": [1, 2, 3]}))),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn failed_commands_change_nothing_and_successes_always_record(cmds in prop::collection::vec(command(), 0..40)) {
        let mut e = Engine::default();
        for (op, args) in cmds {
            let cmd = Command::parse(&op, args).unwrap();
            let mutation = cmd.is_mutation();
            let before = e.export_bytes();
            let len = e.ledger().len();
            let clock = e.clock();
            match e.execute(cmd) {
                Err(_) => prop_assert_eq!(e.export_bytes(), before),
                Ok(_) if op == "advance_clock" => prop_assert!(e.clock() >= clock),
                Ok(_) if mutation => prop_assert_eq!(e.ledger().len(), len + 1, "{}", op),
                Ok(_) => prop_assert_eq!(e.export_bytes(), before),
            }
        }
        prop_assert!(e.verify().ok);
    }

    #[test]
    fn export_import_export_is_byte_identical(cmds in prop::collection::vec(command(), 0..30)) {
        let mut e = Engine::default();
        for (op, args) in cmds {
            let _ = e.execute(Command::parse(&op, args).unwrap());
        }
        let bytes = e.export_bytes();
        let mut copy = Engine::default();
        copy.import_bytes(&bytes).unwrap();
        prop_assert_eq!(copy.export_bytes(), bytes);
    }

    #[test]
    fn same_commands_give_same_state(cmds in prop::collection::vec(command(), 0..30)) {
        let run = |cmds: &[(String, Value)]| {
            let mut e = Engine::default();
            let outputs: Vec<String> = cmds
                .iter()
                .map(|(op, args)| match e.execute(Command::parse(op, args.clone()).unwrap()) {
                    Ok(v) => v.to_string(),
                    Err(err) => err.code().to_string(),
                })
                .collect();
            (outputs, e.export_bytes())
        };
        prop_assert_eq!(run(&cmds), run(&cmds));
    }
}

#[test]
fn import_refuses_used_engines_and_broken_chains() {
    let mut e = Engine::default();
    e.execute(Command::parse("mint", json!({"token_type": "UT", "recipient": "ana", "amount": 3})).unwrap()).unwrap();
    e.execute(Command::parse("mint", json!({"token_type": "UT", "recipient": "ben", "amount": 4})).unwrap()).unwrap();
    let bytes = e.export_bytes();
    assert_eq!(e.import_bytes(&bytes).unwrap_err().code(), "NonEmptyEngine");

    let mut snap: Value = serde_json::from_slice(&bytes).unwrap();
    let rec = &mut snap["ledger"][0];
    let h = rec["hash"].as_str().unwrap().to_string();
    let flipped = match h.strip_prefix('0') {
        Some(rest) => format!("1{rest}"),
        None => format!("0{}", &h[1..]),
    };
    rec["hash"] = json!(flipped);
    let mut fresh = Engine::default();
    let err = fresh.import_bytes(&serde_json::to_vec(&snap).unwrap()).unwrap_err();
    assert_eq!(err.code(), "CorruptSnapshot");
    assert!(fresh.is_empty());
}

#[test]
fn fresh_export_has_no_records() {
    let snap: Value = serde_json::from_slice(&Engine::default().export_bytes()).unwrap();
    assert_eq!(snap["ledger"], json!([]));
}
