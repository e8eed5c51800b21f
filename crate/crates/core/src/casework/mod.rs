//! Victim-relief case workflow.
//!
//! A case moves along one linear path:
//!
//! ```text
//! Reported -> IdentityVerified -> Recorded -> LegalContractActive
//!   -> ProviderEngaged -> InProceedings -> Resolved -> FeedbackCollected -> Closed
//! Reported -> RejectedUnverified
//! ```
//!
//! Evidence, financial support, counseling and progress updates are
//! orthogonal to that path: they are accepted in any non-terminal state
//! from `Recorded` on and never change the state.
//!
//! Every change is expressed as a [`CaseFact`]. The engine anchors each fact
//! on the ledger (its canonical JSON is the record payload) and applies it
//! with [`Case::apply`], so folding a case's facts in ledger order rebuilds
//! the case exactly.

pub mod store;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::digest::Digest;
use crate::identity::SessionState;
use crate::roles::RoleRegistry;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CaseError {
    #[error("unknown case {0}")]
    UnknownCase(String),
    #[error("unknown actor {0}")]
    UnknownActor(String),
    #[error("event {event} is not allowed in state {state:?}")]
    IllegalTransition { state: CaseState, event: EventName },
    #[error("case {case_id} is in state {state:?}, which does not allow {operation}")]
    WrongState { case_id: String, state: CaseState, operation: &'static str },
    #[error("identity session {0} has not passed for the reporter")]
    SessionNotPassed(String),
    #[error("invalid response team: {0}")]
    InvalidTeam(String),
    #[error("no active psychologist available")]
    NoPsychologistAvailable,
    #[error("no active legal aid provider available")]
    NoLegalAidAvailable,
}

impl CaseError {
    pub fn code(&self) -> &'static str {
        match self {
            CaseError::UnknownCase(_) => "UnknownCase",
            CaseError::UnknownActor(_) => "UnknownActor",
            CaseError::IllegalTransition { .. } => "IllegalTransition",
            CaseError::WrongState { .. } => "WrongState",
            CaseError::SessionNotPassed(_) => "SessionNotPassed",
            CaseError::InvalidTeam(_) => "InvalidTeam",
            CaseError::NoPsychologistAvailable => "NoPsychologistAvailable",
            CaseError::NoLegalAidAvailable => "NoLegalAidAvailable",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CaseState {
    Reported,
    IdentityVerified,
    Recorded,
    LegalContractActive,
    ProviderEngaged,
    InProceedings,
    Resolved,
    FeedbackCollected,
    Closed,
    RejectedUnverified,
}

impl CaseState {
    pub const ALL: [CaseState; 10] = [
        CaseState::Reported,
        CaseState::IdentityVerified,
        CaseState::Recorded,
        CaseState::LegalContractActive,
        CaseState::ProviderEngaged,
        CaseState::InProceedings,
        CaseState::Resolved,
        CaseState::FeedbackCollected,
        CaseState::Closed,
        CaseState::RejectedUnverified,
    ];

    pub fn is_terminal(self) -> bool {
        matches!(self, CaseState::Closed | CaseState::RejectedUnverified)
    }

    /// Non-terminal and at or past `Recorded`.
    pub fn accepts_orthogonal(self) -> bool {
        !self.is_terminal() && self >= CaseState::Recorded
    }
}

impl FromStr for CaseState {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CaseState::ALL.into_iter().find(|c| format!("{c:?}") == s).ok_or_else(|| format!("unknown case state {s:?}"))
    }
}

/// Names of every case event, used for the transition relation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventName {
    IdentityPassed,
    IdentityFailed,
    Record,
    ActivateLegalContract,
    EngageTeam,
    StartProceedings,
    Resolve,
    CollectFeedback,
    Close,
    AttachEvidence,
    GrantFinancialSupport,
    StartCounseling,
    ProgressUpdate,
}

impl EventName {
    pub const ALL: [EventName; 13] = [
        EventName::IdentityPassed,
        EventName::IdentityFailed,
        EventName::Record,
        EventName::ActivateLegalContract,
        EventName::EngageTeam,
        EventName::StartProceedings,
        EventName::Resolve,
        EventName::CollectFeedback,
        EventName::Close,
        EventName::AttachEvidence,
        EventName::GrantFinancialSupport,
        EventName::StartCounseling,
        EventName::ProgressUpdate,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EventName::IdentityPassed => "identity_passed",
            EventName::IdentityFailed => "identity_failed",
            EventName::Record => "record",
            EventName::ActivateLegalContract => "activate_legal_contract",
            EventName::EngageTeam => "engage_team",
            EventName::StartProceedings => "start_proceedings",
            EventName::Resolve => "resolve",
            EventName::CollectFeedback => "collect_feedback",
            EventName::Close => "close",
            EventName::AttachEvidence => "attach_evidence",
            EventName::GrantFinancialSupport => "grant_financial_support",
            EventName::StartCounseling => "start_counseling",
            EventName::ProgressUpdate => "progress_update",
        }
    }

    pub fn is_orthogonal(self) -> bool {
        matches!(
            self,
            EventName::AttachEvidence | EventName::GrantFinancialSupport | EventName::StartCounseling | EventName::ProgressUpdate
        )
    }
}

impl fmt::Display for EventName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Outcome of a legal event.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transition {
    To(CaseState),
    /// Orthogonal event: state unchanged.
    Stay,
}

/// The complete transition relation. `None` means the event is illegal.
pub fn transition(state: CaseState, event: EventName) -> Option<Transition> {
    use CaseState as S;
    use EventName as E;
    if event.is_orthogonal() {
        return state.accepts_orthogonal().then_some(Transition::Stay);
    }
    let next = match (state, event) {
        (S::Reported, E::IdentityPassed) => S::IdentityVerified,
        (S::Reported, E::IdentityFailed) => S::RejectedUnverified,
        (S::IdentityVerified, E::Record) => S::Recorded,
        (S::Recorded, E::ActivateLegalContract) => S::LegalContractActive,
        (S::LegalContractActive, E::EngageTeam) => S::ProviderEngaged,
        (S::ProviderEngaged, E::StartProceedings) => S::InProceedings,
        (S::InProceedings, E::Resolve) => S::Resolved,
        (S::Resolved, E::CollectFeedback) => S::FeedbackCollected,
        (S::FeedbackCollected, E::Close) => S::Closed,
        _ => return None,
    };
    Some(Transition::To(next))
}

/// Events accepted in `state`, in [`EventName::ALL`] order.
pub fn legal_events(state: CaseState) -> Vec<EventName> {
    EventName::ALL.into_iter().filter(|e| transition(state, *e).is_some()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Resolution {
    LegalAction,
    Settlement,
    Other,
}

/// A case event as submitted by a caller. Free text is digested before it
/// reaches the ledger.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum CaseEvent {
    IdentityPassed { session: String },
    IdentityFailed {
        #[serde(default)]
        session: Option<String>,
    },
    Record,
    ActivateLegalContract,
    EngageTeam { team: Vec<String> },
    StartProceedings,
    Resolve { resolution: Resolution },
    CollectFeedback { feedback: String },
    Close,
    GrantFinancialSupport,
    StartCounseling,
    ProgressUpdate { note: String },
}

impl CaseEvent {
    pub fn name(&self) -> EventName {
        match self {
            CaseEvent::IdentityPassed { .. } => EventName::IdentityPassed,
            CaseEvent::IdentityFailed { .. } => EventName::IdentityFailed,
            CaseEvent::Record => EventName::Record,
            CaseEvent::ActivateLegalContract => EventName::ActivateLegalContract,
            CaseEvent::EngageTeam { .. } => EventName::EngageTeam,
            CaseEvent::StartProceedings => EventName::StartProceedings,
            CaseEvent::Resolve { .. } => EventName::Resolve,
            CaseEvent::CollectFeedback { .. } => EventName::CollectFeedback,
            CaseEvent::Close => EventName::Close,
            CaseEvent::GrantFinancialSupport => EventName::GrantFinancialSupport,
            CaseEvent::StartCounseling => EventName::StartCounseling,
            CaseEvent::ProgressUpdate { .. } => EventName::ProgressUpdate,
        }
    }
}

/// The ledger-safe form of an applied event.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum AppliedEvent {
    IdentityPassed { session: String },
    IdentityFailed { session: Option<String> },
    Record,
    ActivateLegalContract,
    EngageTeam { team: Vec<String> },
    StartProceedings,
    Resolve { resolution: Resolution },
    CollectFeedback { feedback_digest: Digest },
    Close,
    GrantFinancialSupport,
    StartCounseling,
    ProgressUpdate { note_digest: Digest },
}

impl From<CaseEvent> for AppliedEvent {
    fn from(e: CaseEvent) -> Self {
        match e {
            CaseEvent::IdentityPassed { session } => AppliedEvent::IdentityPassed { session },
            CaseEvent::IdentityFailed { session } => AppliedEvent::IdentityFailed { session },
            CaseEvent::Record => AppliedEvent::Record,
            CaseEvent::ActivateLegalContract => AppliedEvent::ActivateLegalContract,
            CaseEvent::EngageTeam { team } => AppliedEvent::EngageTeam { team },
            CaseEvent::StartProceedings => AppliedEvent::StartProceedings,
            CaseEvent::Resolve { resolution } => AppliedEvent::Resolve { resolution },
            CaseEvent::CollectFeedback { feedback } => {
                AppliedEvent::CollectFeedback { feedback_digest: Digest::of(feedback.as_bytes()) }
            }
            CaseEvent::Close => AppliedEvent::Close,
            CaseEvent::GrantFinancialSupport => AppliedEvent::GrantFinancialSupport,
            CaseEvent::StartCounseling => AppliedEvent::StartCounseling,
            CaseEvent::ProgressUpdate { note } => AppliedEvent::ProgressUpdate { note_digest: Digest::of(note.as_bytes()) },
        }
    }
}

/// Ledger payload for every case-related record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "fact", rename_all = "snake_case")]
pub enum CaseFact {
    Reported {
        case_id: String,
        reporter: String,
        details_digest: Digest,
        identity_session: Option<String>,
        logical_time: u64,
    },
    Advanced {
        case_id: String,
        from: CaseState,
        to: CaseState,
        event: AppliedEvent,
        logical_time: u64,
    },
    EvidenceAttached {
        case_id: String,
        asset_id: String,
        content_digest: Digest,
        logical_time: u64,
    },
    /// Half of an assembled team proposal; does not change the case.
    TeamCoordination {
        case_id: String,
        coordination: Coordination,
        members: Vec<String>,
        logical_time: u64,
    },
}

impl CaseFact {
    pub fn case_id(&self) -> &str {
        match self {
            CaseFact::Reported { case_id, .. }
            | CaseFact::Advanced { case_id, .. }
            | CaseFact::EvidenceAttached { case_id, .. }
            | CaseFact::TeamCoordination { case_id, .. } => case_id,
        }
    }

    pub fn to_payload(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("facts serialize")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coordination {
    /// Legal aid provider plus the diagnoser agents.
    Legal,
    /// Psychologist.
    Psychological,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvidenceItem {
    pub asset_id: String,
    pub content_digest: Digest,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProgressEntry {
    pub logical_time: u64,
    pub note_digest: Digest,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Case {
    pub case_id: String,
    pub reporter: String,
    pub state: CaseState,
    pub details_digest: Digest,
    pub identity_session: Option<String>,
    pub evidence: Vec<EvidenceItem>,
    pub team: Vec<String>,
    pub financial_support_active: bool,
    pub counseling_active: bool,
    pub progress_log: Vec<ProgressEntry>,
    pub resolution: Option<Resolution>,
    pub feedback_digest: Option<Digest>,
    pub opened_at: u64,
    pub updated_at: u64,
}

impl Case {
    /// Build a case from its `Reported` fact.
    pub fn from_report(fact: &CaseFact) -> Option<Case> {
        let CaseFact::Reported { case_id, reporter, details_digest, identity_session, logical_time } = fact else {
            return None;
        };
        Some(Case {
            case_id: case_id.clone(),
            reporter: reporter.clone(),
            state: CaseState::Reported,
            details_digest: *details_digest,
            identity_session: identity_session.clone(),
            evidence: Vec::new(),
            team: Vec::new(),
            financial_support_active: false,
            counseling_active: false,
            progress_log: Vec::new(),
            resolution: None,
            feedback_digest: None,
            opened_at: *logical_time,
            updated_at: *logical_time,
        })
    }

    /// Apply a fact that was produced for this case.
    pub fn apply(&mut self, fact: &CaseFact) {
        debug_assert_eq!(fact.case_id(), self.case_id);
        match fact {
            CaseFact::Reported { .. } | CaseFact::TeamCoordination { .. } => {}
            CaseFact::EvidenceAttached { asset_id, content_digest, logical_time, .. } => {
                self.evidence.push(EvidenceItem { asset_id: asset_id.clone(), content_digest: *content_digest });
                self.updated_at = *logical_time;
            }
            CaseFact::Advanced { to, event, logical_time, .. } => {
                self.state = *to;
                self.updated_at = *logical_time;
                match event {
                    AppliedEvent::IdentityPassed { session } => self.identity_session = Some(session.clone()),
                    AppliedEvent::IdentityFailed { session: Some(s) } => self.identity_session = Some(s.clone()),
                    AppliedEvent::EngageTeam { team } => self.team = team.clone(),
                    AppliedEvent::Resolve { resolution } => self.resolution = Some(*resolution),
                    AppliedEvent::CollectFeedback { feedback_digest } => self.feedback_digest = Some(*feedback_digest),
                    AppliedEvent::GrantFinancialSupport => self.financial_support_active = true,
                    AppliedEvent::StartCounseling => self.counseling_active = true,
                    AppliedEvent::ProgressUpdate { note_digest } => {
                        self.progress_log.push(ProgressEntry { logical_time: *logical_time, note_digest: *note_digest })
                    }
                    _ => {}
                }
            }
        }
    }

    pub fn report(&self) -> CaseReport {
        CaseReport {
            case_id: self.case_id.clone(),
            reporter: self.reporter.clone(),
            state: self.state,
            evidence: self.evidence.iter().map(|e| e.asset_id.clone()).collect(),
            evidence_digests: self.evidence.iter().map(|e| e.content_digest).collect(),
            team: self.team.clone(),
            financial_support_active: self.financial_support_active,
            counseling_active: self.counseling_active,
            progress_count: self.progress_log.len(),
            resolution: self.resolution,
            feedback_collected: self.feedback_digest.is_some(),
            legal_next_events: legal_events(self.state),
        }
    }
}

/// Fold a case's facts, in ledger order, into a case.
pub fn replay<'a>(facts: impl IntoIterator<Item = &'a CaseFact>) -> Option<Case> {
    let mut iter = facts.into_iter();
    let mut case = Case::from_report(iter.next()?)?;
    for f in iter {
        case.apply(f);
    }
    Some(case)
}

/// Read-only projection of a case.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseReport {
    pub case_id: String,
    pub reporter: String,
    pub state: CaseState,
    pub evidence: Vec<String>,
    pub evidence_digests: Vec<Digest>,
    pub team: Vec<String>,
    pub financial_support_active: bool,
    pub counseling_active: bool,
    pub progress_count: usize,
    pub resolution: Option<Resolution>,
    pub feedback_collected: bool,
    pub legal_next_events: Vec<EventName>,
}

/// What the case machine needs to know about other modules.
pub trait CaseContext {
    /// `(actor_id, state)` of an identity session.
    fn session(&self, session_id: &str) -> Option<(String, SessionState)>;
    /// `(role_name, active)` of a role assignment.
    fn assignment(&self, assignment_id: &str) -> Option<(String, bool)>;
}

/// A response team chosen for a case.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TeamProposal {
    pub psychologist: String,
    pub legal_aid_provider: String,
    pub agents: Vec<String>,
}

impl TeamProposal {
    /// The two coordination facts announcing this proposal.
    pub fn facts(&self, case_id: &str, now: u64) -> [CaseFact; 2] {
        let mut legal = vec![self.legal_aid_provider.clone()];
        legal.extend(self.agents.iter().cloned());
        [
            CaseFact::TeamCoordination { case_id: case_id.into(), coordination: Coordination::Legal, members: legal, logical_time: now },
            CaseFact::TeamCoordination {
                case_id: case_id.into(),
                coordination: Coordination::Psychological,
                members: vec![self.psychologist.clone()],
                logical_time: now,
            },
        ]
    }

    pub fn members(&self) -> Vec<String> {
        let mut m = vec![self.psychologist.clone(), self.legal_aid_provider.clone()];
        m.extend(self.agents.iter().cloned());
        m
    }
}

/// Pluggable response-team selection.
pub trait TeamSelector {
    fn select(&self, case: &Case, registry: &RoleRegistry) -> Result<TeamProposal, CaseError>;
}

/// Diagnoser agent roles attached to every team.
pub const TEAM_AGENT_ROLES: [&str; 2] = ["sextortion_diagnoser", "legal_aid_diagnoser"];

/// First active psychologist and first active legal aid provider, by
/// onboarding order, plus the first active assignment of each diagnoser.
#[derive(Debug, Clone, Copy, Default)]
pub struct FirstFitSelector;

impl TeamSelector for FirstFitSelector {
    fn select(&self, _case: &Case, registry: &RoleRegistry) -> Result<TeamProposal, CaseError> {
        let psychologist =
            registry.active_with_role("psychologist").next().ok_or(CaseError::NoPsychologistAvailable)?.assignment_id.clone();
        let legal_aid_provider =
            registry.active_with_role("legal_aid_provider").next().ok_or(CaseError::NoLegalAidAvailable)?.assignment_id.clone();
        let agents = TEAM_AGENT_ROLES
            .iter()
            .filter_map(|r| registry.active_with_role(r).next().map(|a| a.assignment_id.clone()))
            .collect();
        Ok(TeamProposal { psychologist, legal_aid_provider, agents })
    }
}

/// Team legality: every member active, at least one psychologist and one
/// legal aid provider.
pub fn validate_team(team: &[String], ctx: &dyn CaseContext) -> Result<(), CaseError> {
    let mut roles = Vec::new();
    for id in team {
        match ctx.assignment(id) {
            Some((role, true)) => roles.push(role),
            Some((_, false)) => return Err(CaseError::InvalidTeam(format!("assignment {id} is not active"))),
            None => return Err(CaseError::InvalidTeam(format!("unknown assignment {id}"))),
        }
    }
    for needed in ["psychologist", "legal_aid_provider"] {
        if !roles.iter().any(|r| r == needed) {
            return Err(CaseError::InvalidTeam(format!("team has no active {needed}")));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseBook {
    cases: BTreeMap<String, Case>,
    next_case: u64,
}

impl CaseBook {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, case_id: &str) -> Result<&Case, CaseError> {
        self.cases.get(case_id).ok_or_else(|| CaseError::UnknownCase(case_id.to_string()))
    }

    pub fn cases(&self) -> impl Iterator<Item = &Case> {
        self.cases.values()
    }

    pub fn len(&self) -> usize {
        self.cases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cases.is_empty()
    }

    pub fn case_report(&self, case_id: &str) -> Result<CaseReport, CaseError> {
        self.get(case_id).map(Case::report)
    }

    pub fn prepare_report(&self, reporter: &str, details: &[u8], identity_session: Option<String>, now: u64) -> CaseFact {
        CaseFact::Reported {
            case_id: format!("case-{:04}", self.next_case + 1),
            reporter: reporter.to_string(),
            details_digest: Digest::of(details),
            identity_session,
            logical_time: now,
        }
    }

    pub fn prepare_advance(
        &self,
        case_id: &str,
        event: CaseEvent,
        ctx: &dyn CaseContext,
        now: u64,
    ) -> Result<CaseFact, CaseError> {
        let case = self.get(case_id)?;
        let name = event.name();
        let Some(t) = transition(case.state, name) else {
            return Err(CaseError::IllegalTransition { state: case.state, event: name });
        };
        match &event {
            CaseEvent::IdentityPassed { session } => match ctx.session(session) {
                Some((actor, SessionState::Passed)) if actor == case.reporter => {}
                _ => return Err(CaseError::SessionNotPassed(session.clone())),
            },
            CaseEvent::IdentityFailed { session: Some(session) } => match ctx.session(session) {
                Some((actor, SessionState::Terminated | SessionState::Failed)) if actor == case.reporter => {}
                _ => return Err(CaseError::IllegalTransition { state: case.state, event: name }),
            },
            CaseEvent::EngageTeam { team } => validate_team(team, ctx)?,
            _ => {}
        }
        let to = match t {
            Transition::To(s) => s,
            Transition::Stay => case.state,
        };
        Ok(CaseFact::Advanced { case_id: case_id.to_string(), from: case.state, to, event: event.into(), logical_time: now })
    }

    /// Check that evidence may be attached now.
    pub fn check_attach(&self, case_id: &str) -> Result<&Case, CaseError> {
        let case = self.get(case_id)?;
        if !case.state.accepts_orthogonal() {
            return Err(CaseError::WrongState { case_id: case_id.into(), state: case.state, operation: "attach_evidence" });
        }
        Ok(case)
    }

    pub fn check_assemble(&self, case_id: &str) -> Result<&Case, CaseError> {
        let case = self.get(case_id)?;
        if case.state != CaseState::LegalContractActive {
            return Err(CaseError::WrongState { case_id: case_id.into(), state: case.state, operation: "assemble_response_team" });
        }
        Ok(case)
    }

    /// Apply a fact produced by one of the `prepare_*` calls.
    pub fn apply(&mut self, fact: &CaseFact) -> Result<&Case, CaseError> {
        if let CaseFact::Reported { case_id, .. } = fact {
            let case = Case::from_report(fact).expect("reported fact");
            self.next_case += 1;
            return Ok(self.cases.entry(case_id.clone()).or_insert(case));
        }
        let case = self.cases.get_mut(fact.case_id()).ok_or_else(|| CaseError::UnknownCase(fact.case_id().into()))?;
        case.apply(fact);
        Ok(case)
    }
}
