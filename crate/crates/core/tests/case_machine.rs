use proptest::prelude::*;
use socialdao_core::casework::{legal_events, transition, CaseEvent, CaseState, EventName, Resolution, Transition};
use socialdao_core::identity::{Challenge, ChallengeKind, ChallengeSetDef, Policy};
use socialdao_core::Engine;

use CaseState as S;
use EventName as E;

/// The relation written out by hand, independent of the library table.
fn expected(state: CaseState, event: EventName) -> Option<CaseState> {
    let forward = match (state, event) {
        (S::Reported, E::IdentityPassed) => Some(S::IdentityVerified),
        (S::Reported, E::IdentityFailed) => Some(S::RejectedUnverified),
        (S::IdentityVerified, E::Record) => Some(S::Recorded),
        (S::Recorded, E::ActivateLegalContract) => Some(S::LegalContractActive),
        (S::LegalContractActive, E::EngageTeam) => Some(S::ProviderEngaged),
        (S::ProviderEngaged, E::StartProceedings) => Some(S::InProceedings),
        (S::InProceedings, E::Resolve) => Some(S::Resolved),
        (S::Resolved, E::CollectFeedback) => Some(S::FeedbackCollected),
        (S::FeedbackCollected, E::Close) => Some(S::Closed),
        _ => None,
    };
    let side = matches!(event, E::AttachEvidence | E::GrantFinancialSupport | E::StartCounseling | E::ProgressUpdate);
    let open_after_recording = matches!(
        state,
        S::Recorded | S::LegalContractActive | S::ProviderEngaged | S::InProceedings | S::Resolved | S::FeedbackCollected
    );
    forward.or(if side && open_after_recording { Some(state) } else { None })
}

const PATH: [CaseState; 9] = [
    S::Reported,
    S::IdentityVerified,
    S::Recorded,
    S::LegalContractActive,
    S::ProviderEngaged,
    S::InProceedings,
    S::Resolved,
    S::FeedbackCollected,
    S::Closed,
];

struct World {
    e: Engine,
    set: String,
}

impl World {
    fn new() -> Self {
        let mut e = Engine::default();
        let set = e
            .create_challenge_set(ChallengeSetDef {
                set_id: None,
                context: "intake".into(),
                policy: Policy::All,
                challenges: vec![Challenge {
                    challenge_id: "c".into(),
                    kind: ChallengeKind::AttributeAssertion,
                    expected: "yes".into(),
                    prompt: String::new(),
                }],
            })
            .unwrap()
            .set_id;
        let mut w = World { e, set };
        for (a, r) in [("psy-1", "psychologist"), ("law-1", "legal_aid_provider")] {
            let s = w.session(a, true);
            w.e.onboard(a, r, Some(&s)).unwrap();
        }
        w.e.onboard("diag-1", "sextortion_diagnoser", None).unwrap();
        w.e.onboard("diag-2", "legal_aid_diagnoser", None).unwrap();
        w
    }

    fn session(&mut self, actor: &str, pass: bool) -> String {
        let s = self.e.open_session(actor, &self.set).unwrap().session_id;
        let answer: &[u8] = if pass { b"yes" } else { b"no" };
        self.e.submit_response(&s, "c", answer.to_vec()).unwrap();
        self.e.evaluate_session(&s).unwrap();
        s
    }

    fn report(&mut self, reporter: &str) -> (String, String) {
        let s = self.session(reporter, true);
        let id = self.e.report_incident(reporter, b"details", Some(&s)).unwrap().case_id;
        (id, s)
    }

    fn state(&self, id: &str) -> CaseState {
        self.e.cases().get(id).unwrap().state
    }

    /// Fire `event` with well-formed arguments; Ok(()) iff the engine accepted it.
    fn fire(&mut self, id: &str, session: &str, event: EventName, salt: usize) -> Result<(), String> {
        let ev = match event {
            E::IdentityPassed => CaseEvent::IdentityPassed { session: session.into() },
            E::IdentityFailed => CaseEvent::IdentityFailed { session: None },
            E::Record => CaseEvent::Record,
            E::ActivateLegalContract => CaseEvent::ActivateLegalContract,
            E::EngageTeam => {
                let team = if self.state(id) == S::LegalContractActive {
                    self.e.assemble_response_team(id).map_err(|e| e.code().to_string())?.members()
                } else {
                    vec!["psy-1".into(), "law-1".into(), "diag-1".into(), "diag-2".into()]
                };
                CaseEvent::EngageTeam { team }
            }
            E::StartProceedings => CaseEvent::StartProceedings,
            E::Resolve => CaseEvent::Resolve { resolution: [Resolution::LegalAction, Resolution::Settlement, Resolution::Other][salt % 3] },
            E::CollectFeedback => CaseEvent::CollectFeedback { feedback: format!("feedback {salt}") },
            E::Close => CaseEvent::Close,
            E::GrantFinancialSupport => CaseEvent::GrantFinancialSupport,
            E::StartCounseling => CaseEvent::StartCounseling,
            E::ProgressUpdate => CaseEvent::ProgressUpdate { note: format!("note {salt}") },
            E::AttachEvidence => {
                let content = format!("evidence {id} {salt} {}", self.e.ledger().len());
                return self.e.attach_evidence(id, content.as_bytes()).map(|_| ()).map_err(|e| e.code().to_string());
            }
        };
        self.e.advance_case(id, ev).map(|_| ()).map_err(|e| e.code().to_string())
    }

    fn drive_to(&mut self, target: CaseState) -> (String, String) {
        let (id, s) = self.report("victim-1");
        if target == S::RejectedUnverified {
            self.fire(&id, &s, E::IdentityFailed, 0).unwrap();
            return (id, s);
        }
        let steps = [E::IdentityPassed, E::Record, E::ActivateLegalContract, E::EngageTeam, E::StartProceedings, E::Resolve, E::CollectFeedback, E::Close];
        for (i, ev) in steps.iter().enumerate() {
            if PATH[i] == target {
                break;
            }
            self.fire(&id, &s, *ev, 0).unwrap();
        }
        assert_eq!(self.state(&id), target);
        (id, s)
    }
}

#[test]
fn library_relation_matches_hand_table() {
    for s in CaseState::ALL {
        for ev in EventName::ALL {
            let got = transition(s, ev).map(|t| match t {
                Transition::To(n) => n,
                Transition::Stay => s,
            });
            assert_eq!(got, expected(s, ev), "{s:?} x {ev:?}");
        }
        let legal: Vec<EventName> = EventName::ALL.into_iter().filter(|ev| expected(s, *ev).is_some()).collect();
        assert_eq!(legal_events(s), legal);
    }
}

/// Drive a real engine into each state and fire each event there.
#[test]
fn engine_grid_matches_hand_table() {
    let mut pairs = 0;
    for s in CaseState::ALL {
        for ev in EventName::ALL {
            let mut w = World::new();
            let (id, session) = w.drive_to(s);
            let before_len = w.e.ledger().len();
            let before_case = w.e.cases().get(&id).unwrap().clone();
            let result = w.fire(&id, &session, ev, 1);
            match expected(s, ev) {
                Some(next) => {
                    assert!(result.is_ok(), "{s:?} x {ev:?}: {result:?}");
                    assert_eq!(w.state(&id), next);
                    assert!(w.e.ledger().len() > before_len);
                }
                None => {
                    let code = result.unwrap_err();
                    let allowed: &[&str] = if ev == E::AttachEvidence { &["WrongState"] } else { &["IllegalTransition"] };
                    assert!(allowed.contains(&code.as_str()), "{s:?} x {ev:?} gave {code}");
                    assert_eq!(w.e.cases().get(&id).unwrap(), &before_case);
                    assert_eq!(w.e.ledger().len(), before_len);
                }
            }
            pairs += 1;
        }
    }
    assert_eq!(pairs, 10 * 13);
}

#[test]
fn happy_path_ends_closed_with_a_record_per_step() {
    let mut w = World::new();
    let (id, _) = w.drive_to(S::Closed);
    let report = w.e.case_report(&id).unwrap();
    assert_eq!(report.state, S::Closed);
    assert!(report.legal_next_events.is_empty());
    // report, eight transitions, two coordination records
    assert_eq!(w.e.query_ledger(&Default::default(), Some(&id)).len(), 11);
}

#[test]
fn failed_identity_session_cannot_verify_a_case() {
    let mut w = World::new();
    let (id, _) = w.report("victim-2");
    let bad = w.session("victim-2", false);
    let err = w.e.advance_case(&id, CaseEvent::IdentityPassed { session: bad }).unwrap_err();
    assert_eq!(err.code(), "SessionNotPassed");
    assert_eq!(w.state(&id), S::Reported);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Random event streams over several cases; every case must be
    /// rebuilt exactly from its ledger records alone.
    #[test]
    fn cases_replay_from_the_ledger(
        script in prop::collection::vec((0..3usize, 0..13usize, any::<u8>()), 0..60),
    ) {
        let mut w = World::new();
        let cases: Vec<(String, String)> = (0..3).map(|i| w.report(&format!("victim-{i}"))).collect();
        for (c, ev, salt) in script {
            let (id, s) = &cases[c];
            let state = w.state(id);
            let event = EventName::ALL[ev];
            let r = w.fire(id, s, event, salt as usize);
            prop_assert_eq!(r.is_ok(), expected(state, event).is_some(), "{:?} x {:?}: {:?}", state, event, r);
        }
        prop_assert!(w.e.verify().ok);
        for (id, _) in &cases {
            let live = w.e.cases().get(id).unwrap().clone();
            prop_assert_eq!(w.e.replay_case(id), Some(live));
        }
        // the same holds after a full export and import
        let mut fresh = Engine::default();
        fresh.import_bytes(&w.e.export_bytes()).unwrap();
        for (id, _) in &cases {
            prop_assert_eq!(fresh.replay_case(id), w.e.cases().get(id).ok().cloned());
        }
        prop_assert_eq!(fresh.export_bytes(), w.e.export_bytes());
    }
}
