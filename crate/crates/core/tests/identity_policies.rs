use std::collections::BTreeMap;

use socialdao_core::identity::{Challenge, ChallengeKind, ChallengeSetDef, Policy, SessionState};
use socialdao_core::{Digest, Engine};

const KINDS: [ChallengeKind; 3] = [ChallengeKind::SecretDigest, ChallengeKind::AttributeAssertion, ChallengeKind::OracleAttestation];

fn challenge(i: usize, kind: ChallengeKind) -> Challenge {
    let expected = match kind {
        ChallengeKind::SecretDigest => Digest::of(format!("secret-{i}").as_bytes()).to_hex(),
        ChallengeKind::AttributeAssertion => format!("attr-{i}"),
        ChallengeKind::OracleAttestation => format!("oracle-{i}"),
    };
    Challenge { challenge_id: format!("c{i}"), kind, expected, prompt: String::new() }
}

fn policies(n: usize) -> Vec<Policy> {
    std::iter::once(Policy::All).chain((1..=n).map(Policy::MofN)).collect()
}

/// Brute-force oracle: how many challenges must pass under `policy`.
fn oracle_passes(policy: Policy, correct: usize, n: usize) -> bool {
    match policy {
        Policy::All => correct == n,
        Policy::MofN(m) => correct >= m,
    }
}

/// Run one session where challenge `i` is answered correctly iff bit `i`
/// of `pattern` is set. Wrong answers alternate between a bad value and
/// no answer at all.
fn run(kinds: &[ChallengeKind], policy: Policy, pattern: u32) -> (bool, BTreeMap<String, bool>, SessionState, Engine) {
    let mut e = Engine::default();
    let challenges: Vec<Challenge> = kinds.iter().enumerate().map(|(i, k)| challenge(i, *k)).collect();
    let set = e
        .create_challenge_set(ChallengeSetDef { set_id: None, context: "test".into(), policy, challenges })
        .unwrap()
        .set_id;
    let s = e.open_session("actor", &set).unwrap().session_id;
    for (i, kind) in kinds.iter().enumerate() {
        let good = pattern & (1 << i) != 0;
        let cid = format!("c{i}");
        match kind {
            ChallengeKind::OracleAttestation => {
                e.set_oracle_verdict(&format!("oracle-{i}"), good).unwrap();
                e.submit_response(&s, &cid, b"attested".to_vec()).unwrap();
            }
            _ if good => {
                let answer = match kind {
                    ChallengeKind::SecretDigest => format!("secret-{i}"),
                    _ => format!("attr-{i}"),
                };
                e.submit_response(&s, &cid, answer.into_bytes()).unwrap();
            }
            _ if i % 2 == 0 => {
                e.submit_response(&s, &cid, b"wrong".to_vec()).unwrap();
            }
            _ => {}
        }
    }
    let d = e.evaluate_session(&s).unwrap();
    let state = e.identity().session(&s).unwrap().state;
    (d.passed, d.per_challenge, state, e)
}

#[test]
fn evaluation_matches_brute_force_for_up_to_four_challenges() {
    let mut checked = 0;
    for n in 1..=4usize {
        // every assignment of challenge kinds
        for kind_code in 0..3usize.pow(n as u32) {
            let kinds: Vec<ChallengeKind> = (0..n).map(|i| KINDS[(kind_code / 3usize.pow(i as u32)) % 3]).collect();
            for policy in policies(n) {
                let mut passed_by_pattern = Vec::new();
                for pattern in 0..(1u32 << n) {
                    let correct = pattern.count_ones() as usize;
                    let (passed, per, state, mut e) = run(&kinds, policy, pattern);
                    let expect = oracle_passes(policy, correct, n);
                    assert_eq!(passed, expect, "n={n} kinds={kinds:?} policy={policy:?} pattern={pattern:b}");
                    for i in 0..n {
                        assert_eq!(per[&format!("c{i}")], pattern & (1 << i) != 0);
                    }
                    if expect {
                        assert_eq!(state, SessionState::Passed);
                    } else {
                        // failure ends the session for good
                        assert_eq!(state, SessionState::Terminated);
                        let s = e.identity().sessions().next().unwrap().session_id.clone();
                        let err = e.submit_response(&s, "c0", b"retry".to_vec()).unwrap_err();
                        assert_eq!(err.code(), "SessionClosed");
                        assert_eq!(e.evaluate_session(&s).unwrap_err().code(), "SessionClosed");
                    }
                    passed_by_pattern.push(passed);
                    checked += 1;
                }
                // adding a correct answer never turns a pass into a failure
                for p in 0..(1u32 << n) {
                    for i in 0..n {
                        let q = p | (1 << i);
                        assert!(!passed_by_pattern[p as usize] || passed_by_pattern[q as usize]);
                    }
                }
            }
        }
    }
    assert_eq!(checked, (1..=4u32).map(|n| 3usize.pow(n) * (n as usize + 1) * (1 << n)).sum::<usize>());
}

#[test]
fn bad_policies_are_rejected() {
    let mut e = Engine::default();
    let three: Vec<Challenge> = (0..3).map(|i| challenge(i, ChallengeKind::AttributeAssertion)).collect();
    for policy in [Policy::MofN(4), Policy::MofN(0)] {
        let def = ChallengeSetDef { set_id: None, context: String::new(), policy, challenges: three.clone() };
        assert_eq!(e.create_challenge_set(def).unwrap_err().code(), "BadPolicy");
    }
    let empty = ChallengeSetDef { set_id: None, context: String::new(), policy: Policy::All, challenges: vec![] };
    assert_eq!(e.create_challenge_set(empty).unwrap_err().code(), "EmptySet");
    assert!(e.ledger().is_empty());
}

#[test]
fn two_of_three_example() {
    let kinds = [ChallengeKind::AttributeAssertion; 3];
    assert!(run(&kinds, Policy::MofN(2), 0b011).0);
    assert!(!run(&kinds, Policy::MofN(2), 0b100).0);
}
