//! Challenge-set identity authentication.
//!
//! Lifecycle: a challenge set is created, an actor opens a session against
//! it, submits responses (last write wins), and the session is evaluated
//! once. A failed evaluation terminates the session for good.
//!
//! Scoring per challenge kind:
//! - `SecretDigest`: SHA-256 of the response equals the expected hex digest.
//! - `AttributeAssertion`: the response bytes equal the expected text.
//! - `OracleAttestation`: a response was submitted and the oracle stub's
//!   configured verdict for the expected oracle id is `true`.
//!
//! A challenge without a response always fails.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::digest::Digest;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum IdentityError {
    #[error("a challenge set needs at least one challenge")]
    EmptySet,
    #[error("policy {0:?} is invalid for {1} challenges")]
    BadPolicy(Policy, usize),
    #[error("challenge {id}: {reason}")]
    BadChallenge { id: String, reason: String },
    #[error("challenge set {0} already exists")]
    DuplicateSet(String),
    #[error("unknown challenge set {0}")]
    UnknownSet(String),
    #[error("unknown session {0}")]
    UnknownSession(String),
    #[error("session {0} is closed")]
    SessionClosed(String),
    #[error("challenge {0} is not part of this session's set")]
    UnknownChallenge(String),
}

impl IdentityError {
    pub fn code(&self) -> &'static str {
        match self {
            IdentityError::EmptySet => "EmptySet",
            IdentityError::BadPolicy(..) => "BadPolicy",
            IdentityError::BadChallenge { .. } => "BadChallenge",
            IdentityError::DuplicateSet(_) => "DuplicateSet",
            IdentityError::UnknownSet(_) => "UnknownSet",
            IdentityError::UnknownSession(_) => "UnknownSession",
            IdentityError::SessionClosed(_) => "SessionClosed",
            IdentityError::UnknownChallenge(_) => "UnknownChallenge",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChallengeKind {
    SecretDigest,
    AttributeAssertion,
    OracleAttestation,
}

/// One challenge. `expected` is lowercase hex for `SecretDigest`, the
/// asserted constant for `AttributeAssertion`, and an oracle id for
/// `OracleAttestation`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Challenge {
    pub challenge_id: String,
    pub kind: ChallengeKind,
    #[serde(rename = "expected_hex_or_text")]
    pub expected: String,
    #[serde(default)]
    pub prompt: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Policy {
    #[default]
    All,
    MofN(usize),
}

impl Policy {
    pub fn validate(self, n: usize) -> Result<(), IdentityError> {
        match self {
            Policy::All if n > 0 => Ok(()),
            Policy::MofN(m) if m >= 1 && m <= n => Ok(()),
            _ => Err(IdentityError::BadPolicy(self, n)),
        }
    }

    /// Minimum number of passing challenges out of `n`.
    pub fn required(self, n: usize) -> usize {
        match self {
            Policy::All => n,
            Policy::MofN(m) => m,
        }
    }

    pub fn satisfied(self, passed: usize, n: usize) -> bool {
        passed >= self.required(n)
    }
}

/// Challenge-set definition, also the on-disk file format.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChallengeSetDef {
    #[serde(default)]
    pub set_id: Option<String>,
    #[serde(default)]
    pub context: String,
    #[serde(default)]
    pub policy: Policy,
    pub challenges: Vec<Challenge>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChallengeSet {
    pub set_id: String,
    pub context: String,
    pub challenges: Vec<Challenge>,
    pub policy: Policy,
}

impl ChallengeSet {
    /// Digest of the canonical JSON definition, anchored on the ledger.
    pub fn definition_digest(&self) -> Digest {
        Digest::of(&serde_json::to_vec(self).expect("challenge sets serialize"))
    }

    fn challenge(&self, id: &str) -> Option<&Challenge> {
        self.challenges.iter().find(|c| c.challenge_id == id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SessionState {
    Open,
    Passed,
    Failed,
    Terminated,
}

mod hex_bytes_map {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &BTreeMap<String, Vec<u8>>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_map(m.iter().map(|(k, v)| (k, hex::encode(v))))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<String, Vec<u8>>, D::Error> {
        let raw = BTreeMap::<String, String>::deserialize(d)?;
        raw.into_iter()
            .map(|(k, v)| hex::decode(&v).map(|b| (k, b)).map_err(serde::de::Error::custom))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthSession {
    pub session_id: String,
    pub actor_id: String,
    pub set_id: String,
    #[serde(with = "hex_bytes_map")]
    pub responses: BTreeMap<String, Vec<u8>>,
    pub state: SessionState,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseAck {
    pub session_id: String,
    pub challenge_id: String,
    pub response_digest: Digest,
    pub replaced: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthDecision {
    pub session_id: String,
    pub actor_id: String,
    pub passed: bool,
    pub per_challenge: BTreeMap<String, bool>,
    pub pass_count: usize,
    pub required: usize,
    pub final_state: SessionState,
}

/// Trusted single-oracle stand-in. Unknown oracle ids yield `default_verdict`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleStub {
    #[serde(default)]
    pub verdicts: BTreeMap<String, bool>,
    #[serde(default)]
    pub default_verdict: bool,
}

impl OracleStub {
    pub fn verdict(&self, oracle_id: &str) -> bool {
        self.verdicts.get(oracle_id).copied().unwrap_or(self.default_verdict)
    }
}

/// Score a single challenge against an optional response.
pub fn score_challenge(ch: &Challenge, response: Option<&[u8]>, oracle: &OracleStub) -> bool {
    let Some(resp) = response else { return false };
    match ch.kind {
        ChallengeKind::SecretDigest => Digest::from_hex(&ch.expected).is_ok_and(|d| Digest::of(resp) == d),
        ChallengeKind::AttributeAssertion => resp == ch.expected.as_bytes(),
        ChallengeKind::OracleAttestation => oracle.verdict(&ch.expected),
    }
}

fn validate_challenges(challenges: &[Challenge]) -> Result<(), IdentityError> {
    let mut seen = BTreeSet::new();
    for c in challenges {
        let bad = |reason: &str| IdentityError::BadChallenge { id: c.challenge_id.clone(), reason: reason.into() };
        if c.challenge_id.is_empty() {
            return Err(bad("empty challenge id"));
        }
        if !seen.insert(c.challenge_id.as_str()) {
            return Err(bad("duplicate challenge id"));
        }
        if c.expected.is_empty() {
            return Err(bad("expected value is empty"));
        }
        if c.kind == ChallengeKind::SecretDigest && Digest::from_hex(&c.expected).is_err() {
            return Err(bad("SecretDigest expects a 64-char hex digest"));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentityRegistry {
    sets: BTreeMap<String, ChallengeSet>,
    sessions: BTreeMap<String, AuthSession>,
    next_set: u64,
    next_session: u64,
}

impl IdentityRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&self, set_id: &str) -> Option<&ChallengeSet> {
        self.sets.get(set_id)
    }

    pub fn session(&self, session_id: &str) -> Result<&AuthSession, IdentityError> {
        self.sessions.get(session_id).ok_or_else(|| IdentityError::UnknownSession(session_id.to_string()))
    }

    pub fn sessions(&self) -> impl Iterator<Item = &AuthSession> {
        self.sessions.values()
    }

    /// Validate a definition and return the set it would create.
    pub fn prepare_set(&self, def: ChallengeSetDef) -> Result<ChallengeSet, IdentityError> {
        if def.challenges.is_empty() {
            return Err(IdentityError::EmptySet);
        }
        def.policy.validate(def.challenges.len())?;
        validate_challenges(&def.challenges)?;
        let set_id = match def.set_id {
            Some(id) if self.sets.contains_key(&id) => return Err(IdentityError::DuplicateSet(id)),
            Some(id) if !id.is_empty() => id,
            _ => self.peek_set_id(),
        };
        Ok(ChallengeSet { set_id, context: def.context, challenges: def.challenges, policy: def.policy })
    }

    fn peek_set_id(&self) -> String {
        let mut n = self.next_set;
        loop {
            n += 1;
            let id = format!("set-{n:04}");
            if !self.sets.contains_key(&id) {
                return id;
            }
        }
    }

    pub fn create_challenge_set(&mut self, def: ChallengeSetDef) -> Result<&ChallengeSet, IdentityError> {
        let set = self.prepare_set(def)?;
        self.insert_set(set)
    }

    pub(crate) fn insert_set(&mut self, set: ChallengeSet) -> Result<&ChallengeSet, IdentityError> {
        if self.sets.contains_key(&set.set_id) {
            return Err(IdentityError::DuplicateSet(set.set_id));
        }
        self.next_set += 1;
        let id = set.set_id.clone();
        Ok(self.sets.entry(id).or_insert(set))
    }

    pub fn check_open(&self, set_id: &str) -> Result<(), IdentityError> {
        if self.sets.contains_key(set_id) {
            Ok(())
        } else {
            Err(IdentityError::UnknownSet(set_id.to_string()))
        }
    }

    pub fn open_session(&mut self, actor_id: &str, set_id: &str) -> Result<&AuthSession, IdentityError> {
        self.check_open(set_id)?;
        self.next_session += 1;
        let session_id = format!("sess-{:04}", self.next_session);
        let s = AuthSession {
            session_id: session_id.clone(),
            actor_id: actor_id.to_string(),
            set_id: set_id.to_string(),
            responses: BTreeMap::new(),
            state: SessionState::Open,
        };
        Ok(self.sessions.entry(session_id).or_insert(s))
    }

    fn open_session_and_set(&self, session_id: &str) -> Result<(&AuthSession, &ChallengeSet), IdentityError> {
        let s = self.session(session_id)?;
        if s.state != SessionState::Open {
            return Err(IdentityError::SessionClosed(session_id.to_string()));
        }
        let set = self.sets.get(&s.set_id).ok_or_else(|| IdentityError::UnknownSet(s.set_id.clone()))?;
        Ok((s, set))
    }

    pub fn check_submit(&self, session_id: &str, challenge_id: &str) -> Result<(), IdentityError> {
        let (_, set) = self.open_session_and_set(session_id)?;
        set.challenge(challenge_id).map(|_| ()).ok_or_else(|| IdentityError::UnknownChallenge(challenge_id.to_string()))
    }

    pub fn submit_response(
        &mut self,
        session_id: &str,
        challenge_id: &str,
        response: Vec<u8>,
    ) -> Result<ResponseAck, IdentityError> {
        self.check_submit(session_id, challenge_id)?;
        let response_digest = Digest::of(&response);
        let s = self.sessions.get_mut(session_id).expect("checked");
        let replaced = s.responses.insert(challenge_id.to_string(), response).is_some();
        Ok(ResponseAck { session_id: session_id.to_string(), challenge_id: challenge_id.to_string(), response_digest, replaced })
    }

    /// Score the session without changing it.
    pub fn decide(&self, session_id: &str, oracle: &OracleStub) -> Result<AuthDecision, IdentityError> {
        let (s, set) = self.open_session_and_set(session_id)?;
        let per_challenge: BTreeMap<String, bool> = set
            .challenges
            .iter()
            .map(|c| (c.challenge_id.clone(), score_challenge(c, s.responses.get(&c.challenge_id).map(Vec::as_slice), oracle)))
            .collect();
        let pass_count = per_challenge.values().filter(|p| **p).count();
        let n = set.challenges.len();
        let passed = set.policy.satisfied(pass_count, n);
        Ok(AuthDecision {
            session_id: session_id.to_string(),
            actor_id: s.actor_id.clone(),
            passed,
            per_challenge,
            pass_count,
            required: set.policy.required(n),
            final_state: if passed { SessionState::Passed } else { SessionState::Terminated },
        })
    }

    /// Evaluate once. Passed sessions stay Passed; failed sessions move
    /// through Failed to Terminated.
    pub fn evaluate(&mut self, session_id: &str, oracle: &OracleStub) -> Result<AuthDecision, IdentityError> {
        let decision = self.decide(session_id, oracle)?;
        self.apply_decision(&decision);
        Ok(decision)
    }

    pub(crate) fn apply_decision(&mut self, decision: &AuthDecision) {
        let s = self.sessions.get_mut(&decision.session_id).expect("decided session exists");
        if decision.passed {
            s.state = SessionState::Passed;
        } else {
            // Failed is transient: the session is terminated in the same step.
            s.state = SessionState::Terminated;
        }
    }
}
