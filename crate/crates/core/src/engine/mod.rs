//! The engine ties every module to one ledger and one logical clock.
//!
//! Each mutating operation validates against all affected modules first,
//! then mutates, then appends its ledger record(s). A rejected operation
//! leaves every module and the ledger untouched. Ledger payloads are
//! canonical JSON [`OpRecord`]s holding digests, never raw content; they
//! are kept in an off-ledger payload store keyed by digest so that cases
//! and sessions can be rebuilt from the ledger alone.

pub mod command;
mod persist;
pub mod snapshot;

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::agents::{
    AgentError, AssessmentResult, CaseFeatures, LegalRecommendation, MentalHealthBand, PassThroughVerdict, RiskVerdict,
    RoleInformation, Rubric, SituationBand,
};
use crate::casework::{
    self, Case, CaseBook, CaseContext, CaseError, CaseEvent, CaseFact, CaseReport, EventName, FirstFitSelector,
    TeamProposal, TeamSelector,
};
use crate::digest::Digest;
use crate::governance::{
    Choice, ExecutionEffect, Governance, GovernanceConfig, GovernanceError, Proposal, ProposalKind, ProposalPayload,
    TallyOutcome, Vote,
};
use crate::identity::{
    AuthDecision, AuthSession, ChallengeSet, ChallengeSetDef, IdentityError, IdentityRegistry, OracleStub, Policy,
    ResponseAck, SessionState,
};
use crate::ledger::{IntegrityReport, KindRef, Ledger, LedgerError, LedgerFilter, TransactionRecord};
use crate::roles::{
    Contribution, RoleAssignment, RoleError, RoleRegistry, RolesConfig, TerminationReport,
};
use crate::tokens::{MintReceipt, MintSpec, TokenBook, TokenError, TokenType, TransferReceipt, TransferSpec};

pub use command::Command;
pub use snapshot::Snapshot;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EngineError {
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Token(#[from] TokenError),
    #[error(transparent)]
    Identity(#[from] IdentityError),
    #[error(transparent)]
    Role(#[from] RoleError),
    #[error(transparent)]
    Governance(#[from] GovernanceError),
    #[error(transparent)]
    Case(#[from] CaseError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error("import needs an empty engine")]
    NonEmptyEngine,
    #[error("corrupt snapshot: {0}")]
    CorruptSnapshot(String),
    #[error("malformed request: {0}")]
    BadRequest(String),
    #[error("storage failure: {0}")]
    Storage(String),
}

impl EngineError {
    /// Stable error name shared with HTTP clients.
    pub fn code(&self) -> &'static str {
        match self {
            EngineError::Ledger(e) => e.code(),
            EngineError::Token(e) => e.code(),
            EngineError::Identity(e) => e.code(),
            EngineError::Role(e) => e.code(),
            EngineError::Governance(e) => e.code(),
            EngineError::Case(e) => e.code(),
            EngineError::Agent(e) => e.code(),
            EngineError::NonEmptyEngine => "NonEmptyEngine",
            EngineError::CorruptSnapshot(_) => "CorruptSnapshot",
            EngineError::BadRequest(_) => "BadRequest",
            EngineError::Storage(_) => "Storage",
        }
    }
}

pub type Result<T, E = EngineError> = std::result::Result<T, E>;

/// Catalog kinds used by engine operations.
pub mod kinds {
    use crate::ledger::{Component, KindRef};

    const fn rm(id: u32) -> KindRef {
        KindRef { component: Component::RolesManager, local_id: id }
    }

    const fn ap(id: u32) -> KindRef {
        KindRef { component: Component::AidProvider, local_id: id }
    }

    pub const ROLE_CREATION: KindRef = rm(1);
    pub const ROLE_REMOVAL: KindRef = rm(2);
    pub const ROLE_REQUEST: KindRef = rm(3);
    pub const ROLE_STATUS_UPDATE: KindRef = rm(8);

    pub const RESPONSE_TEAM: KindRef = ap(1);
    pub const EMOTIONAL_SUPPORT: KindRef = ap(6);
    pub const REAL_TIME_INFO: KindRef = ap(7);
    pub const VICTIM_INFO: KindRef = ap(9);
    pub const LEGAL_COORDINATION: KindRef = ap(10);
    pub const PSYCH_COORDINATION: KindRef = ap(11);
    pub const CASE_ANALYSIS: KindRef = ap(13);
    pub const FINANCIAL_GUIDANCE: KindRef = ap(15);
    pub const LEGAL_RESOURCES: KindRef = ap(16);

    pub fn for_case_event(e: crate::casework::EventName) -> KindRef {
        use crate::casework::EventName as E;
        match e {
            E::IdentityPassed | E::IdentityFailed | E::CollectFeedback => VICTIM_INFO,
            E::Record | E::AttachEvidence => CASE_ANALYSIS,
            E::ActivateLegalContract => LEGAL_RESOURCES,
            E::EngageTeam => RESPONSE_TEAM,
            E::StartProceedings | E::Resolve | E::Close => LEGAL_COORDINATION,
            E::GrantFinancialSupport => FINANCIAL_GUIDANCE,
            E::StartCounseling => EMOTIONAL_SUPPORT,
            E::ProgressUpdate => REAL_TIME_INFO,
        }
    }
}

/// Canonical ledger payload of every engine operation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum OpRecord {
    ChallengeSetCreated {
        set_id: String,
        context: String,
        policy: Policy,
        challenge_count: usize,
        definition_digest: Digest,
    },
    SessionOpened {
        session_id: String,
        actor_id: String,
        set_id: String,
    },
    ResponseSubmitted {
        session_id: String,
        challenge_id: String,
        response_digest: Digest,
        replaced: bool,
    },
    SessionEvaluated {
        session_id: String,
        actor_id: String,
        passed: bool,
        pass_count: usize,
        required: usize,
        final_state: SessionState,
    },
    RoleOnboarded {
        assignment_id: String,
        actor_id: String,
        role_name: String,
        onboard_session: Option<String>,
        sbt_asset: Option<String>,
        /// Components told about the new assignment.
        notified: Vec<String>,
    },
    RoleOffboarded {
        assignment_id: String,
        actor_id: String,
        role_name: String,
        reason_digest: Digest,
    },
    ParticipationTerminated {
        assignment_id: String,
        actor_id: String,
        reporter_role: String,
        concern_digest: Digest,
    },
    RewardGranted {
        assignment_id: String,
        actor_id: String,
        contribution_kind: String,
        weight: u64,
        amount: u64,
        reward_total_ut: u64,
        verdict: String,
        verdict_input_digest: Digest,
    },
    TokensMinted {
        receipt: MintReceipt,
    },
    TokensTransferred {
        receipt: TransferReceipt,
    },
    ProposalCreated {
        proposal_id: String,
        proposer: String,
        kind: ProposalKind,
        payload_digest: Digest,
        total_weight: u64,
        opens_at: u64,
        closes_at: u64,
    },
    VoteCast {
        vote: Vote,
    },
    ProposalTallied {
        proposal_id: String,
        outcome: TallyOutcome,
    },
    ProposalExecuted {
        proposal_id: String,
        effect: ExecutionEffect,
        mint: Option<MintReceipt>,
    },
    Case(CaseFact),
    Custom {
        payload: Value,
    },
}

impl OpRecord {
    pub fn to_payload(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("op records serialize")
    }

    pub fn case_id(&self) -> Option<&str> {
        match self {
            OpRecord::Case(f) => Some(f.case_id()),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EngineConfig {
    pub rubric: Rubric,
    pub roles: RolesConfig,
    pub governance: GovernanceConfig,
    pub oracle: OracleStub,
    /// Persist ledger, cases and state here when set.
    pub data_dir: Option<PathBuf>,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            rubric: Rubric::bundled().clone(),
            roles: RolesConfig::default(),
            governance: GovernanceConfig::default(),
            oracle: OracleStub::default(),
            data_dir: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardReceipt {
    pub assignment: RoleAssignment,
    pub amount: u64,
    pub mint: MintReceipt,
    pub verdict: PassThroughVerdict,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionReceipt {
    pub proposal_id: String,
    pub effect: ExecutionEffect,
    pub mint: Option<MintReceipt>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvidenceReceipt {
    pub case_id: String,
    pub asset_id: String,
    pub content_digest: Digest,
    pub evidence_count: usize,
}

/// A session as reconstructed from ledger payloads alone.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionTrail {
    pub session_id: String,
    pub actor_id: String,
    pub set_id: String,
    pub state: SessionState,
    pub response_digests: BTreeMap<String, Digest>,
}

/// Roles whose holders only see the cases they reported.
pub const SELF_SERVICE_ROLES: [&str; 4] = ["victim", "teenager", "friend", "family_member"];

struct Ctx<'a> {
    identity: &'a IdentityRegistry,
    roles: &'a RoleRegistry,
}

impl CaseContext for Ctx<'_> {
    fn session(&self, id: &str) -> Option<(String, SessionState)> {
        self.identity.session(id).ok().map(|s| (s.actor_id.clone(), s.state))
    }

    fn assignment(&self, id: &str) -> Option<(String, bool)> {
        self.roles.assignment(id).ok().map(|a| (a.role_name.clone(), a.is_active()))
    }
}

pub struct Engine {
    rubric: Rubric,
    oracle: OracleStub,
    clock: u64,
    ledger: Ledger,
    payloads: BTreeMap<Digest, String>,
    tokens: TokenBook,
    identity: IdentityRegistry,
    roles: RoleRegistry,
    governance: Governance,
    cases: CaseBook,
    /// Raw incident details, hex encoded, keyed by case id.
    case_details: BTreeMap<String, String>,
    selector: Box<dyn TeamSelector + Send + Sync>,
    store: Option<persist::Store>,
}

impl Default for Engine {
    fn default() -> Self {
        Engine::in_memory(EngineConfig::default())
    }
}

impl std::fmt::Debug for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Engine").field("clock", &self.clock).field("ledger_len", &self.ledger.len()).finish_non_exhaustive()
    }
}

impl Engine {
    /// An engine without persistence; `config.data_dir` is ignored.
    pub fn in_memory(config: EngineConfig) -> Self {
        let mut roles = RoleRegistry::default();
        roles.config = config.roles;
        Engine {
            rubric: config.rubric,
            oracle: config.oracle,
            clock: 0,
            ledger: Ledger::new(),
            payloads: BTreeMap::new(),
            tokens: TokenBook::new(),
            identity: IdentityRegistry::new(),
            roles,
            governance: Governance::new(config.governance),
            cases: CaseBook::new(),
            case_details: BTreeMap::new(),
            selector: Box::new(FirstFitSelector),
            store: None,
        }
    }

    /// Open an engine, restoring saved state from `config.data_dir` if any.
    pub fn open(config: EngineConfig) -> Result<Self> {
        let dir = config.data_dir.clone();
        let mut engine = Engine::in_memory(config);
        if let Some(dir) = dir {
            let store = persist::Store::open(dir)?;
            if let Some(snap) = store.load_state()? {
                engine.restore(snap)?;
            }
            store.check_ledger_file(engine.ledger.records())?;
            engine.store = Some(store);
        }
        Ok(engine)
    }

    pub fn set_team_selector(&mut self, selector: Box<dyn TeamSelector + Send + Sync>) {
        self.selector = selector;
    }

    pub fn clock(&self) -> u64 {
        self.clock
    }

    pub fn ledger(&self) -> &Ledger {
        &self.ledger
    }

    pub fn tokens(&self) -> &TokenBook {
        &self.tokens
    }

    pub fn identity(&self) -> &IdentityRegistry {
        &self.identity
    }

    pub fn roles(&self) -> &RoleRegistry {
        &self.roles
    }

    pub fn governance(&self) -> &Governance {
        &self.governance
    }

    pub fn cases(&self) -> &CaseBook {
        &self.cases
    }

    pub fn rubric(&self) -> &Rubric {
        &self.rubric
    }

    pub fn oracle(&self) -> &OracleStub {
        &self.oracle
    }

    pub fn payload(&self, digest: &Digest) -> Option<&str> {
        self.payloads.get(digest).map(String::as_str)
    }

    /// Decoded payload of a ledger record.
    pub fn op_record(&self, rec: &TransactionRecord) -> Option<OpRecord> {
        serde_json::from_str(self.payload(&rec.payload_digest)?).ok()
    }

    pub fn is_empty(&self) -> bool {
        self.ledger.is_empty()
            && self.clock == 0
            && self.cases.is_empty()
            && self.tokens.accounts().next().is_none()
            && self.roles.assignments().next().is_none()
            && self.identity.sessions().next().is_none()
            && self.governance.proposals().next().is_none()
    }

    /// Move the logical clock forward to `to`.
    pub fn advance_clock(&mut self, to: u64) -> Result<u64> {
        if to < self.clock {
            return Err(LedgerError::ClockRegression { last: self.clock, attempted: to }.into());
        }
        self.clock = to;
        self.persist_state()?;
        Ok(self.clock)
    }

    pub fn set_oracle_verdict(&mut self, oracle_id: &str, verdict: bool) -> Result<()> {
        self.oracle.verdicts.insert(oracle_id.to_string(), verdict);
        self.persist_state()
    }

    pub fn seal(&mut self) -> Result<()> {
        self.ledger.seal();
        self.persist_state()
    }

    pub fn verify(&self) -> IntegrityReport {
        self.ledger.verify_chain()
    }

    /// Records matching `filter`, further restricted to one case if given.
    pub fn query_ledger(&self, filter: &LedgerFilter, case_id: Option<&str>) -> Vec<&TransactionRecord> {
        self.ledger
            .query(filter)
            .into_iter()
            .filter(|r| case_id.is_none_or(|c| self.op_record(r).as_ref().and_then(OpRecord::case_id) == Some(c)))
            .collect()
    }

    fn writable(&self) -> Result<()> {
        Ok(self.ledger.ensure_writable(self.clock)?)
    }

    fn commit(&mut self, kind: KindRef, actors: &[&str], components: &[&str], op: &OpRecord) -> Result<TransactionRecord> {
        let payload = op.to_payload();
        let rec = self
            .ledger
            .append_transaction(
                kind,
                actors.iter().map(|s| s.to_string()).collect(),
                components.iter().map(|s| s.to_string()).collect(),
                &payload,
                self.clock,
            )?
            .clone();
        self.payloads.insert(rec.payload_digest, String::from_utf8(payload).expect("json is utf-8"));
        if let Some(store) = &self.store {
            store.append_record(&rec)?;
        }
        Ok(rec)
    }

    fn persist_state(&self) -> Result<()> {
        if let Some(store) = &self.store {
            store.save_state(&self.snapshot())?;
        }
        Ok(())
    }

    fn persist_case(&self, case_id: &str) -> Result<()> {
        if let Some(store) = &self.store {
            store.save_case(self.cases.get(case_id)?, self.case_details.get(case_id).map(String::as_str))?;
        }
        self.persist_state()
    }

    /// Flush full state to the data directory, if any.
    pub fn flush(&self) -> Result<()> {
        self.persist_state()
    }

    // ---- ledger ------------------------------------------------------------

    /// Append an arbitrary catalog transaction with a JSON payload.
    pub fn append_transaction(
        &mut self,
        kind: KindRef,
        actor_ids: Vec<String>,
        component_ids: Vec<String>,
        payload: Value,
    ) -> Result<TransactionRecord> {
        crate::ledger::catalog::lookup(kind)?;
        self.writable()?;
        let actors: Vec<&str> = actor_ids.iter().map(String::as_str).collect();
        let comps: Vec<&str> = component_ids.iter().map(String::as_str).collect();
        let rec = self.commit(kind, &actors, &comps, &OpRecord::Custom { payload })?;
        self.persist_state()?;
        Ok(rec)
    }

    // ---- identity ----------------------------------------------------------

    pub fn create_challenge_set(&mut self, def: ChallengeSetDef) -> Result<ChallengeSet> {
        self.writable()?;
        let set = self.identity.prepare_set(def)?;
        let set = self.identity.insert_set(set)?.clone();
        let op = OpRecord::ChallengeSetCreated {
            set_id: set.set_id.clone(),
            context: set.context.clone(),
            policy: set.policy,
            challenge_count: set.challenges.len(),
            definition_digest: set.definition_digest(),
        };
        self.commit(kinds::ROLE_STATUS_UPDATE, &[], &["mfssia"], &op)?;
        self.persist_state()?;
        Ok(set)
    }

    pub fn open_session(&mut self, actor_id: &str, set_id: &str) -> Result<AuthSession> {
        self.writable()?;
        let s = self.identity.open_session(actor_id, set_id)?.clone();
        let op = OpRecord::SessionOpened {
            session_id: s.session_id.clone(),
            actor_id: s.actor_id.clone(),
            set_id: s.set_id.clone(),
        };
        self.commit(kinds::ROLE_REQUEST, &[actor_id], &["mfssia"], &op)?;
        self.persist_state()?;
        Ok(s)
    }

    pub fn submit_response(&mut self, session_id: &str, challenge_id: &str, response: Vec<u8>) -> Result<ResponseAck> {
        self.writable()?;
        let ack = self.identity.submit_response(session_id, challenge_id, response)?;
        let actor = self.identity.session(session_id)?.actor_id.clone();
        let op = OpRecord::ResponseSubmitted {
            session_id: ack.session_id.clone(),
            challenge_id: ack.challenge_id.clone(),
            response_digest: ack.response_digest,
            replaced: ack.replaced,
        };
        self.commit(kinds::ROLE_REQUEST, &[&actor], &["mfssia"], &op)?;
        self.persist_state()?;
        Ok(ack)
    }

    pub fn evaluate_session(&mut self, session_id: &str) -> Result<AuthDecision> {
        self.writable()?;
        let d = self.identity.evaluate(session_id, &self.oracle)?;
        let op = OpRecord::SessionEvaluated {
            session_id: d.session_id.clone(),
            actor_id: d.actor_id.clone(),
            passed: d.passed,
            pass_count: d.pass_count,
            required: d.required,
            final_state: d.final_state,
        };
        self.commit(kinds::ROLE_STATUS_UPDATE, &[&d.actor_id], &["mfssia"], &op)?;
        self.persist_state()?;
        Ok(d)
    }

    /// Rebuild a session's public trail from ledger payloads.
    pub fn replay_session(&self, session_id: &str) -> Option<SessionTrail> {
        let mut trail: Option<SessionTrail> = None;
        for rec in self.ledger.records() {
            match self.op_record(rec) {
                Some(OpRecord::SessionOpened { session_id: s, actor_id, set_id }) if s == session_id => {
                    trail = Some(SessionTrail {
                        session_id: s,
                        actor_id,
                        set_id,
                        state: SessionState::Open,
                        response_digests: BTreeMap::new(),
                    });
                }
                Some(OpRecord::ResponseSubmitted { session_id: s, challenge_id, response_digest, .. }) if s == session_id => {
                    if let Some(t) = trail.as_mut() {
                        t.response_digests.insert(challenge_id, response_digest);
                    }
                }
                Some(OpRecord::SessionEvaluated { session_id: s, final_state, .. }) if s == session_id => {
                    if let Some(t) = trail.as_mut() {
                        t.state = final_state;
                    }
                }
                _ => {}
            }
        }
        trail
    }

    // ---- roles -------------------------------------------------------------

    fn pick_session(&self, actor_id: &str, role_name: &str, session_id: Option<&str>) -> Result<Option<AuthSession>> {
        if let Some(id) = session_id {
            return Ok(Some(self.identity.session(id)?.clone()));
        }
        if !self.roles.needs_auth(role_name)? {
            return Ok(None);
        }
        Ok(self
            .identity
            .sessions()
            .find(|s| s.actor_id == actor_id && s.state == SessionState::Passed && !self.roles.is_session_used(&s.session_id))
            .cloned())
    }

    /// Onboard `actor_id` into `role_name`. Without an explicit session the
    /// actor's earliest passed, unused session is used.
    pub fn onboard(&mut self, actor_id: &str, role_name: &str, session_id: Option<&str>) -> Result<RoleAssignment> {
        self.writable()?;
        let session = self.pick_session(actor_id, role_name, session_id)?;
        let assignment = self.roles.prepare_onboard(actor_id, role_name, session.as_ref())?;
        let sbt_required = self.roles.definition(role_name)?.sbt_required;
        let sbt_spec = MintSpec::Sbt { label: role_name.to_string(), mandatory: true };
        if sbt_required {
            self.tokens.check_mint(TokenType::SBT, actor_id, &sbt_spec)?;
        }
        let id = self.roles.commit_onboard(assignment).assignment_id.clone();
        if sbt_required {
            let receipt = self.tokens.mint(TokenType::SBT, actor_id, sbt_spec)?;
            self.roles.set_sbt(&id, receipt.asset_id.expect("sbt mint yields an asset"));
        }
        let a = self.roles.assignment(&id)?.clone();
        let op = OpRecord::RoleOnboarded {
            assignment_id: a.assignment_id.clone(),
            actor_id: a.actor_id.clone(),
            role_name: a.role_name.clone(),
            onboard_session: a.onboard_session.clone(),
            sbt_asset: a.sbt_asset.clone(),
            notified: vec!["participation_terminator".into(), "role_rewarder".into()],
        };
        self.commit(
            kinds::ROLE_CREATION,
            &[actor_id],
            &["role_onboarder", "participation_terminator", "role_rewarder"],
            &op,
        )?;
        self.persist_state()?;
        Ok(a)
    }

    pub fn offboard(&mut self, assignment_id: &str, reason: &str) -> Result<RoleAssignment> {
        self.writable()?;
        let a = self.roles.offboard(assignment_id)?.clone();
        let op = OpRecord::RoleOffboarded {
            assignment_id: a.assignment_id.clone(),
            actor_id: a.actor_id.clone(),
            role_name: a.role_name.clone(),
            reason_digest: Digest::of(reason.as_bytes()),
        };
        self.commit(kinds::ROLE_REMOVAL, &[&a.actor_id], &["role_offboarder", "role_onboarder"], &op)?;
        self.persist_state()?;
        Ok(a)
    }

    pub fn terminate_participation(&mut self, assignment_id: &str, report: &TerminationReport) -> Result<RoleAssignment> {
        self.writable()?;
        let a = self.roles.terminate_participation(assignment_id, report)?.clone();
        let op = OpRecord::ParticipationTerminated {
            assignment_id: a.assignment_id.clone(),
            actor_id: a.actor_id.clone(),
            reporter_role: report.reporter_role.clone(),
            concern_digest: Digest::of(report.concern.as_bytes()),
        };
        self.commit(kinds::ROLE_STATUS_UPDATE, &[&a.actor_id], &["participation_terminator"], &op)?;
        self.persist_state()?;
        Ok(a)
    }

    pub fn reward(&mut self, assignment_id: &str, contribution: &Contribution) -> Result<RewardReceipt> {
        self.writable()?;
        let amount = self.roles.check_reward(assignment_id, contribution)?;
        let actor = self.roles.assignment(assignment_id)?.actor_id.clone();
        self.tokens.check_mint(TokenType::UT, &actor, &MintSpec::Amount(amount))?;
        let verdict = self.rubric.pass_through(
            "reward_support",
            &serde_json::json!({ "assignment_id": assignment_id, "kind": contribution.kind, "weight": contribution.weight }),
        )?;
        let a = self.roles.record_reward(assignment_id, amount)?.clone();
        let mint = self.tokens.mint(TokenType::UT, &actor, MintSpec::Amount(amount))?;
        let op = OpRecord::RewardGranted {
            assignment_id: a.assignment_id.clone(),
            actor_id: actor.clone(),
            contribution_kind: contribution.kind.clone(),
            weight: contribution.weight,
            amount,
            reward_total_ut: a.reward_total_ut,
            verdict: verdict.verdict.clone(),
            verdict_input_digest: verdict.input_digest,
        };
        self.commit(kinds::ROLE_STATUS_UPDATE, &[&actor], &["role_rewarder", "reward_support"], &op)?;
        self.persist_state()?;
        Ok(RewardReceipt { assignment: a, amount, mint, verdict })
    }

    // ---- tokens ------------------------------------------------------------

    pub fn mint(&mut self, t: TokenType, recipient: &str, spec: MintSpec) -> Result<MintReceipt> {
        self.writable()?;
        let receipt = self.tokens.mint(t, recipient, spec)?;
        let op = OpRecord::TokensMinted { receipt: receipt.clone() };
        self.commit(kinds::ROLE_STATUS_UPDATE, &[recipient], &["tokens"], &op)?;
        self.persist_state()?;
        Ok(receipt)
    }

    pub fn transfer(&mut self, t: TokenType, from: &str, to: &str, spec: TransferSpec) -> Result<TransferReceipt> {
        self.writable()?;
        let receipt = self.tokens.transfer(t, from, to, spec)?;
        let op = OpRecord::TokensTransferred { receipt: receipt.clone() };
        self.commit(kinds::ROLE_STATUS_UPDATE, &[from, to], &["tokens"], &op)?;
        self.persist_state()?;
        Ok(receipt)
    }

    // ---- governance --------------------------------------------------------

    pub fn propose(&mut self, proposer: &str, payload: ProposalPayload) -> Result<Proposal> {
        self.writable()?;
        let snapshot = self.tokens.gt_holders();
        let p = self.governance.propose(proposer, payload, snapshot, self.clock)?.clone();
        let op = OpRecord::ProposalCreated {
            proposal_id: p.proposal_id.clone(),
            proposer: p.proposer.clone(),
            kind: p.kind,
            payload_digest: p.payload_digest,
            total_weight: p.total_weight(),
            opens_at: p.opens_at,
            closes_at: p.closes_at,
        };
        self.commit(kinds::ROLE_REQUEST, &[proposer], &["governance"], &op)?;
        self.persist_state()?;
        Ok(p)
    }

    pub fn vote(&mut self, proposal_id: &str, voter: &str, choice: Choice) -> Result<Vote> {
        self.writable()?;
        let v = self.governance.vote(proposal_id, voter, choice, self.clock)?;
        self.commit(kinds::ROLE_REQUEST, &[voter], &["governance"], &OpRecord::VoteCast { vote: v.clone() })?;
        self.persist_state()?;
        Ok(v)
    }

    pub fn tally(&mut self, proposal_id: &str) -> Result<TallyOutcome> {
        self.writable()?;
        let outcome = self.governance.tally(proposal_id, self.clock)?;
        let op = OpRecord::ProposalTallied { proposal_id: proposal_id.to_string(), outcome };
        self.commit(kinds::ROLE_STATUS_UPDATE, &[], &["governance"], &op)?;
        self.persist_state()?;
        Ok(outcome)
    }

    pub fn execute_proposal(&mut self, proposal_id: &str) -> Result<ExecutionReceipt> {
        self.writable()?;
        let pending_mint = match &self.governance.check_execute(proposal_id)?.payload {
            ProposalPayload::ResourceAllocation { recipient, amount, .. } => Some((TokenType::UT, recipient.clone(), *amount)),
            ProposalPayload::RewardGrant { recipient, token_type, amount } => Some((*token_type, recipient.clone(), *amount)),
            _ => None,
        };
        if let Some((t, r, amount)) = &pending_mint {
            self.tokens.check_mint(*t, r, &MintSpec::Amount(*amount))?;
        }
        let effect = self.governance.execute(proposal_id, self.clock)?;
        let mint = match pending_mint {
            Some((t, r, amount)) => Some(self.tokens.mint(t, &r, MintSpec::Amount(amount))?),
            None => None,
        };
        let actors: Vec<&str> = mint.iter().map(|m| m.recipient.as_str()).collect();
        let op = OpRecord::ProposalExecuted { proposal_id: proposal_id.to_string(), effect: effect.clone(), mint: mint.clone() };
        self.commit(kinds::ROLE_STATUS_UPDATE, &actors, &["governance", "tokens"], &op)?;
        self.persist_state()?;
        Ok(ExecutionReceipt { proposal_id: proposal_id.to_string(), effect, mint })
    }

    // ---- casework ----------------------------------------------------------

    /// An actor is known once it holds an account, a session, an
    /// assignment, or has reported a case.
    pub fn is_known_actor(&self, actor_id: &str) -> bool {
        self.tokens.account(actor_id).is_some()
            || self.identity.sessions().any(|s| s.actor_id == actor_id)
            || self.roles.assignments().any(|a| a.actor_id == actor_id)
            || self.cases.cases().any(|c| c.reporter == actor_id)
    }

    pub fn report_incident(&mut self, reporter: &str, details: &[u8], identity_session: Option<&str>) -> Result<Case> {
        self.writable()?;
        if !self.is_known_actor(reporter) {
            return Err(CaseError::UnknownActor(reporter.to_string()).into());
        }
        if let Some(s) = identity_session {
            self.identity.session(s)?;
        }
        let fact = self.cases.prepare_report(reporter, details, identity_session.map(str::to_string), self.clock);
        let case = self.cases.apply(&fact)?.clone();
        self.case_details.insert(case.case_id.clone(), hex::encode(details));
        self.commit(kinds::VICTIM_INFO, &[reporter], &["incident_registry"], &OpRecord::Case(fact))?;
        self.persist_case(&case.case_id)?;
        Ok(case)
    }

    pub fn advance_case(&mut self, case_id: &str, event: CaseEvent) -> Result<Case> {
        self.writable()?;
        let kind = kinds::for_case_event(event.name());
        let ctx = Ctx { identity: &self.identity, roles: &self.roles };
        let fact = self.cases.prepare_advance(case_id, event, &ctx, self.clock)?;
        let case = self.cases.apply(&fact)?.clone();
        let mut actors = vec![case.reporter.as_str()];
        if let CaseFact::Advanced { event: casework::AppliedEvent::EngageTeam { team }, .. } = &fact {
            for id in team {
                if let Ok(a) = self.roles.assignment(id) {
                    actors.push(a.actor_id.as_str());
                }
            }
        }
        let actors: Vec<String> = actors.into_iter().map(str::to_string).collect();
        let actor_refs: Vec<&str> = actors.iter().map(String::as_str).collect();
        self.commit(kind, &actor_refs, &["incident_registry"], &OpRecord::Case(fact))?;
        self.persist_case(case_id)?;
        Ok(case)
    }

    /// Mint an evidence NFT to the reporter and attach it to the case.
    pub fn attach_evidence(&mut self, case_id: &str, content: &[u8]) -> Result<EvidenceReceipt> {
        self.writable()?;
        let reporter = self.cases.check_attach(case_id)?.reporter.clone();
        let content_digest = Digest::of(content);
        let spec = MintSpec::Nft { content_digest: Some(content_digest), label: Some(format!("evidence:{case_id}")) };
        self.tokens.check_mint(TokenType::NFT, &reporter, &spec)?;
        let asset_id = self.tokens.mint(TokenType::NFT, &reporter, spec)?.asset_id.expect("nft mint yields an asset");
        let fact = CaseFact::EvidenceAttached {
            case_id: case_id.to_string(),
            asset_id: asset_id.clone(),
            content_digest,
            logical_time: self.clock,
        };
        let evidence_count = self.cases.apply(&fact)?.evidence.len();
        self.commit(kinds::for_case_event(EventName::AttachEvidence), &[&reporter], &["incident_registry", "tokens"], &OpRecord::Case(fact))?;
        self.persist_case(case_id)?;
        Ok(EvidenceReceipt { case_id: case_id.to_string(), asset_id, content_digest, evidence_count })
    }

    /// Propose a response team. Appends one legal and one psychological
    /// coordination record; the case itself is unchanged until `engage_team`.
    pub fn assemble_response_team(&mut self, case_id: &str) -> Result<TeamProposal> {
        self.writable()?;
        let case = self.cases.check_assemble(case_id)?;
        let team = self.selector.select(case, &self.roles)?;
        let [legal, psych] = team.facts(case_id, self.clock);
        let actor_of = |id: &str| self.roles.assignment(id).map(|a| a.actor_id.clone()).unwrap_or_default();
        let mut legal_actors = vec![actor_of(&team.legal_aid_provider)];
        legal_actors.extend(team.agents.iter().map(|a| actor_of(a)));
        let psych_actor = actor_of(&team.psychologist);
        let legal_refs: Vec<&str> = legal_actors.iter().map(String::as_str).collect();
        self.commit(kinds::LEGAL_COORDINATION, &legal_refs, &["team_assembler"], &OpRecord::Case(legal))?;
        self.commit(kinds::PSYCH_COORDINATION, &[&psych_actor], &["team_assembler"], &OpRecord::Case(psych))?;
        self.persist_state()?;
        Ok(team)
    }

    pub fn case_report(&self, case_id: &str) -> Result<CaseReport> {
        Ok(self.cases.case_report(case_id)?)
    }

    /// Raw incident details as reported.
    pub fn case_details(&self, case_id: &str) -> Option<Vec<u8>> {
        self.case_details.get(case_id).and_then(|h| hex::decode(h).ok())
    }

    /// All facts recorded for a case, in ledger order.
    pub fn case_facts(&self, case_id: &str) -> Vec<CaseFact> {
        self.ledger
            .records()
            .iter()
            .filter_map(|r| match self.op_record(r) {
                Some(OpRecord::Case(f)) if f.case_id() == case_id => Some(f),
                _ => None,
            })
            .collect()
    }

    /// Rebuild a case purely from its ledger payloads.
    pub fn replay_case(&self, case_id: &str) -> Option<Case> {
        casework::replay(&self.case_facts(case_id))
    }

    /// Cases visible to `viewer`. Self-service actors (victims, teenagers,
    /// friends, family) without any other active role see only their own.
    pub fn visible_cases(&self, viewer: Option<&str>) -> Vec<CaseReport> {
        let staff = viewer.is_none_or(|v| {
            self.roles.active_roles_of(v).any(|a| !SELF_SERVICE_ROLES.contains(&a.role_name.as_str()))
        });
        self.cases.cases().filter(|c| staff || Some(c.reporter.as_str()) == viewer).map(Case::report).collect()
    }

    // ---- agents (read-only) ------------------------------------------------

    pub fn diagnose_sextortion(&self, f: &CaseFeatures) -> RiskVerdict {
        self.rubric.diagnose_sextortion(f)
    }

    pub fn diagnose_legal_aid(&self, f: &CaseFeatures, jurisdiction: &str) -> LegalRecommendation {
        self.rubric.diagnose_legal_aid(f, jurisdiction)
    }

    pub fn assess_mental_health(&self, answers: &[i64]) -> Result<AssessmentResult<MentalHealthBand>> {
        Ok(self.rubric.score_mental_health_assessment(answers)?)
    }

    pub fn assess_situation(&self, answers: &[i64]) -> Result<AssessmentResult<SituationBand>> {
        Ok(self.rubric.score_situation_assessment(answers)?)
    }

    pub fn role_information(&self, role_name: &str, band: SituationBand) -> Result<RoleInformation> {
        Ok(self.rubric.role_information(role_name, band)?)
    }

    pub fn agent_pass_through(&self, agent: &str, input: &Value) -> Result<PassThroughVerdict> {
        Ok(self.rubric.pass_through(agent, input)?)
    }
}
