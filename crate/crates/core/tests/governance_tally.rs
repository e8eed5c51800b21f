use proptest::prelude::*;
use socialdao_core::governance::{tally_votes, Choice, ProposalPayload, ProposalState};
use socialdao_core::tokens::{MintSpec, TokenType, TransferSpec};
use socialdao_core::Engine;

const VOTERS: [&str; 6] = ["v0", "v1", "v2", "v3", "v4", "v5"];

/// None means the holder stays home.
fn ballot() -> impl Strategy<Value = Option<Choice>> {
    prop_oneof![Just(None), Just(Some(Choice::Yes)), Just(Some(Choice::No)), Just(Some(Choice::Abstain))]
}

#[derive(Debug, Clone, PartialEq)]
struct Recount {
    yes: u64,
    no: u64,
    abstain: u64,
    quorum_met: bool,
    accepted: bool,
}

fn recount(weights: &[u64], ballots: &[Option<Choice>]) -> Recount {
    let total: u64 = weights.iter().sum();
    let sum = |c: Choice| weights.iter().zip(ballots).filter(|(_, b)| **b == Some(c)).map(|(w, _)| *w).sum::<u64>();
    let (yes, no, abstain) = (sum(Choice::Yes), sum(Choice::No), sum(Choice::Abstain));
    // at least a third of the snapshot weight, rounded up, must take part
    let quorum_met = 3 * (yes + no + abstain) >= total;
    Recount { yes, no, abstain, quorum_met, accepted: quorum_met && yes > no }
}

#[derive(Debug, Clone)]
enum Noise {
    Mint(usize, u64),
    Transfer(usize, usize, u64),
}

fn noise() -> impl Strategy<Value = Vec<Noise>> {
    prop::collection::vec(
        prop_oneof![
            (0..8usize, 1..20u64).prop_map(|(a, n)| Noise::Mint(a, n)),
            (0..8usize, 0..8usize, 1..10u64).prop_map(|(a, b, n)| Noise::Transfer(a, b, n)),
        ],
        0..10,
    )
}

fn actor(i: usize) -> String {
    if i < VOTERS.len() {
        VOTERS[i].to_string()
    } else {
        format!("late-{i}")
    }
}

/// Run a proposal through the engine, interleaving token noise with the
/// votes, and return the tally.
fn run(weights: &[u64], ballots: &[Option<Choice>], noise: &[Noise]) -> (Recount, Engine) {
    let mut e = Engine::default();
    for (i, w) in weights.iter().enumerate() {
        e.mint(TokenType::GT, VOTERS[i], MintSpec::Amount(*w)).unwrap();
    }
    let payload = ProposalPayload::ResourceAllocation { recipient: "ngo".into(), amount: 5, purpose: "helpline".into() };
    let id = e.propose(VOTERS[0], payload).unwrap().proposal_id;
    let mut noise = noise.iter();
    for (i, b) in ballots.iter().enumerate() {
        if let Some(n) = noise.next() {
            match *n {
                Noise::Mint(a, amt) => {
                    e.mint(TokenType::GT, &actor(a), MintSpec::Amount(amt)).unwrap();
                }
                Noise::Transfer(a, b, amt) => {
                    let _ = e.transfer(TokenType::GT, &actor(a), &actor(b), TransferSpec::Amount(amt));
                }
            }
        }
        if let Some(c) = b {
            let v = e.vote(&id, VOTERS[i], *c).unwrap();
            assert_eq!(v.weight, weights[i], "vote weight comes from the snapshot");
        }
    }
    // holders who only appeared after the proposal have no say
    assert_eq!(e.vote(&id, "late-7", Choice::Yes).unwrap_err().code(), "NotEligible");
    let closes = e.governance().proposal(&id).unwrap().closes_at;
    e.advance_clock(closes).unwrap();
    let t = e.tally(&id).unwrap();
    let state = e.governance().proposal(&id).unwrap().state;
    assert_eq!(state == ProposalState::Accepted, t.accepted);
    (Recount { yes: t.yes, no: t.no, abstain: t.abstain, quorum_met: t.quorum_met, accepted: t.accepted }, e)
}

fn electorate() -> impl Strategy<Value = (Vec<u64>, Vec<Option<Choice>>)> {
    (1..=6usize).prop_flat_map(|n| (prop::collection::vec(1..=10u64, n), prop::collection::vec(ballot(), n)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn tally_matches_recount_despite_token_noise((weights, ballots) in electorate(), noise in noise()) {
        let (got, e) = run(&weights, &ballots, &noise);
        prop_assert_eq!(got.clone(), recount(&weights, &ballots));
        prop_assert!(got.yes + got.no + got.abstain <= weights.iter().sum::<u64>());
        prop_assert!(e.verify().ok);
    }

    #[test]
    fn scaling_weights_preserves_outcome((weights, ballots) in electorate(), k in 2..=7u64) {
        let base = recount(&weights, &ballots);
        let scaled: Vec<u64> = weights.iter().map(|w| w * k).collect();
        let (got, _) = run(&scaled, &ballots, &[]);
        prop_assert_eq!(got.accepted, base.accepted);
        prop_assert_eq!(got.quorum_met, base.quorum_met);
    }
}

/// Exhaustive over three holders with weights 0..=10 and every ballot.
#[test]
fn pure_tally_agrees_with_recount_exhaustively() {
    let choices = [None, Some(Choice::Yes), Some(Choice::No), Some(Choice::Abstain)];
    for w0 in 0..=10u64 {
        for w1 in 0..=10u64 {
            for w2 in 0..=10u64 {
                let weights = [w0, w1, w2];
                for code in 0..64 {
                    let ballots: Vec<Option<Choice>> = (0..3).map(|i| choices[(code >> (2 * i)) & 3]).collect();
                    let votes = weights.iter().zip(&ballots).filter_map(|(w, b)| b.map(|c| (c, *w)));
                    let t = tally_votes(weights.iter().sum(), votes);
                    let r = recount(&weights, &ballots);
                    assert_eq!((t.yes, t.no, t.abstain, t.quorum_met, t.accepted), (r.yes, r.no, r.abstain, r.quorum_met, r.accepted));
                }
            }
        }
    }
}

#[test]
fn worked_examples() {
    let t = tally_votes(9, [(Choice::Yes, 3)]);
    assert!(t.quorum_met && t.accepted);
    assert_eq!(t.quorum, 3);
    let t = tally_votes(9, [(Choice::Yes, 2), (Choice::No, 2)]);
    assert!(t.quorum_met && !t.accepted);
    let t = tally_votes(9, [(Choice::Yes, 2)]);
    assert!(!t.quorum_met && !t.accepted);
}
