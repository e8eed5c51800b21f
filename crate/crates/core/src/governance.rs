//! GT-weighted proposals, voting, tallying and execution.
//!
//! Voting weight is the GT balance captured when the proposal is created;
//! later mints or transfers never change it. Tally rules: quorum is met when
//! cast weight (yes + no + abstain) reaches `ceil(total_snapshot / 3)`;
//! a proposal is accepted when quorum is met and yes strictly exceeds no.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::digest::Digest;
use crate::tokens::TokenType;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GovernanceError {
    #[error("{0} holds no governance tokens")]
    NoGovernanceTokens(String),
    #[error("proposal {0} is not open for voting")]
    NotOpen(String),
    #[error("{voter} has no snapshot weight on proposal {proposal}")]
    NotEligible { proposal: String, voter: String },
    #[error("{voter} already voted on {proposal}")]
    AlreadyVoted { proposal: String, voter: String },
    #[error("proposal {id} closes at {closes_at}; now is {now}")]
    StillOpen { id: String, closes_at: u64, now: u64 },
    #[error("proposal {0} was not accepted")]
    NotAccepted(String),
    #[error("proposal {0} was already executed")]
    AlreadyExecuted(String),
    #[error("unknown proposal {0}")]
    UnknownProposal(String),
    #[error("invalid proposal payload: {0}")]
    InvalidPayload(String),
}

impl GovernanceError {
    pub fn code(&self) -> &'static str {
        match self {
            GovernanceError::NoGovernanceTokens(_) => "NoGovernanceTokens",
            GovernanceError::NotOpen(_) => "NotOpen",
            GovernanceError::NotEligible { .. } => "NotEligible",
            GovernanceError::AlreadyVoted { .. } => "AlreadyVoted",
            GovernanceError::StillOpen { .. } => "StillOpen",
            GovernanceError::NotAccepted(_) => "NotAccepted",
            GovernanceError::AlreadyExecuted(_) => "AlreadyExecuted",
            GovernanceError::UnknownProposal(_) => "UnknownProposal",
            GovernanceError::InvalidPayload(_) => "InvalidPayload",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProposalKind {
    PolicyUpdate,
    ContentModeration,
    ResourceAllocation,
    RewardGrant,
}

impl fmt::Display for ProposalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// What an accepted proposal does when executed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum ProposalPayload {
    /// Write a new version of a named policy document.
    PolicyUpdate { policy_name: String, document: serde_json::Value },
    /// Record a moderation decision (e.g. `remove`, `suspend`) for a content reference.
    ContentModeration { content_ref: String, action: String },
    /// Fund a program by minting UT to its steward.
    ResourceAllocation { recipient: String, amount: u64, purpose: String },
    /// Mint GT or UT to a contributor.
    RewardGrant { recipient: String, token_type: TokenType, amount: u64 },
}

impl ProposalPayload {
    pub fn kind(&self) -> ProposalKind {
        match self {
            ProposalPayload::PolicyUpdate { .. } => ProposalKind::PolicyUpdate,
            ProposalPayload::ContentModeration { .. } => ProposalKind::ContentModeration,
            ProposalPayload::ResourceAllocation { .. } => ProposalKind::ResourceAllocation,
            ProposalPayload::RewardGrant { .. } => ProposalKind::RewardGrant,
        }
    }

    pub fn digest(&self) -> Digest {
        Digest::of(&serde_json::to_vec(self).expect("payloads serialize"))
    }

    fn validate(&self) -> Result<(), GovernanceError> {
        let bad = |m: &str| Err(GovernanceError::InvalidPayload(m.to_string()));
        match self {
            ProposalPayload::PolicyUpdate { policy_name, .. } if policy_name.is_empty() => bad("empty policy name"),
            ProposalPayload::ContentModeration { content_ref, .. } if content_ref.is_empty() => bad("empty content ref"),
            ProposalPayload::ResourceAllocation { amount: 0, .. } => bad("zero allocation"),
            ProposalPayload::RewardGrant { amount: 0, .. } => bad("zero grant"),
            ProposalPayload::RewardGrant { token_type, .. } if !token_type.is_fungible() => bad("grants are GT or UT"),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProposalState {
    Open,
    Accepted,
    Rejected,
    Executed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Choice {
    Yes,
    No,
    Abstain,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vote {
    pub proposal_id: String,
    pub voter: String,
    pub choice: Choice,
    pub weight: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TallyOutcome {
    pub accepted: bool,
    pub yes: u64,
    pub no: u64,
    pub abstain: u64,
    pub quorum: u64,
    pub quorum_met: bool,
    pub total_weight: u64,
}

/// Apply the tally rules to a set of weighted choices.
pub fn tally_votes(total_weight: u64, votes: impl IntoIterator<Item = (Choice, u64)>) -> TallyOutcome {
    let (mut yes, mut no, mut abstain) = (0u64, 0u64, 0u64);
    for (choice, w) in votes {
        match choice {
            Choice::Yes => yes += w,
            Choice::No => no += w,
            Choice::Abstain => abstain += w,
        }
    }
    let quorum = total_weight.div_ceil(3);
    let quorum_met = yes + no + abstain >= quorum;
    TallyOutcome { accepted: quorum_met && yes > no, yes, no, abstain, quorum, quorum_met, total_weight }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Proposal {
    pub proposal_id: String,
    pub proposer: String,
    pub kind: ProposalKind,
    pub payload: ProposalPayload,
    pub payload_digest: Digest,
    pub snapshot: BTreeMap<String, u64>,
    pub opens_at: u64,
    pub closes_at: u64,
    pub state: ProposalState,
    pub votes: BTreeMap<String, Vote>,
    pub outcome: Option<TallyOutcome>,
}

impl Proposal {
    pub fn total_weight(&self) -> u64 {
        self.snapshot.values().sum()
    }

    pub fn accepts_votes_at(&self, now: u64) -> bool {
        self.state == ProposalState::Open && now >= self.opens_at && now < self.closes_at
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyVersion {
    pub version: u32,
    pub document: serde_json::Value,
    pub proposal_id: String,
    pub logical_time: u64,
}

/// Versioned policy documents. Writes append a version; history is kept.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyStore {
    docs: BTreeMap<String, Vec<PolicyVersion>>,
}

impl PolicyStore {
    pub fn current(&self, name: &str) -> Option<&PolicyVersion> {
        self.docs.get(name).and_then(|v| v.last())
    }

    pub fn history(&self, name: &str) -> &[PolicyVersion] {
        self.docs.get(name).map_or(&[], Vec::as_slice)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.docs.keys().map(String::as_str)
    }

    fn write(&mut self, name: &str, document: serde_json::Value, proposal_id: &str, logical_time: u64) -> u32 {
        let versions = self.docs.entry(name.to_string()).or_default();
        let version = versions.len() as u32 + 1;
        versions.push(PolicyVersion { version, document, proposal_id: proposal_id.to_string(), logical_time });
        version
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModerationDecision {
    pub content_ref: String,
    pub action: String,
    pub proposal_id: String,
}

/// Side effect of executing a proposal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "effect")]
pub enum ExecutionEffect {
    PolicyWritten { policy_name: String, version: u32 },
    Moderated { content_ref: String, action: String },
    Mint { recipient: String, token_type: TokenType, amount: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GovernanceConfig {
    /// Logical-time length of the voting window.
    pub voting_period: u64,
}

impl Default for GovernanceConfig {
    fn default() -> Self {
        GovernanceConfig { voting_period: 10 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Governance {
    proposals: BTreeMap<String, Proposal>,
    next_proposal: u64,
    pub policies: PolicyStore,
    pub moderation: BTreeMap<String, ModerationDecision>,
    pub config: GovernanceConfig,
}

impl Governance {
    pub fn new(config: GovernanceConfig) -> Self {
        Governance { config, ..Default::default() }
    }

    pub fn proposal(&self, id: &str) -> Result<&Proposal, GovernanceError> {
        self.proposals.get(id).ok_or_else(|| GovernanceError::UnknownProposal(id.to_string()))
    }

    pub fn proposals(&self) -> impl Iterator<Item = &Proposal> {
        self.proposals.values()
    }

    /// Validate and build a proposal; `gt_snapshot` is the current GT holder map.
    pub fn prepare_proposal(
        &self,
        proposer: &str,
        payload: ProposalPayload,
        gt_snapshot: BTreeMap<String, u64>,
        now: u64,
    ) -> Result<Proposal, GovernanceError> {
        if gt_snapshot.get(proposer).copied().unwrap_or(0) == 0 {
            return Err(GovernanceError::NoGovernanceTokens(proposer.to_string()));
        }
        payload.validate()?;
        Ok(Proposal {
            proposal_id: format!("prop-{:04}", self.next_proposal + 1),
            proposer: proposer.to_string(),
            kind: payload.kind(),
            payload_digest: payload.digest(),
            payload,
            snapshot: gt_snapshot,
            opens_at: now,
            closes_at: now.saturating_add(self.config.voting_period.max(1)),
            state: ProposalState::Open,
            votes: BTreeMap::new(),
            outcome: None,
        })
    }

    pub fn commit_proposal(&mut self, p: Proposal) -> &Proposal {
        self.next_proposal += 1;
        let id = p.proposal_id.clone();
        self.proposals.entry(id).or_insert(p)
    }

    pub fn propose(
        &mut self,
        proposer: &str,
        payload: ProposalPayload,
        gt_snapshot: BTreeMap<String, u64>,
        now: u64,
    ) -> Result<&Proposal, GovernanceError> {
        let p = self.prepare_proposal(proposer, payload, gt_snapshot, now)?;
        Ok(self.commit_proposal(p))
    }

    pub fn check_vote(&self, id: &str, voter: &str, choice: Choice, now: u64) -> Result<Vote, GovernanceError> {
        let p = self.proposal(id)?;
        if !p.accepts_votes_at(now) {
            return Err(GovernanceError::NotOpen(id.to_string()));
        }
        let weight = p.snapshot.get(voter).copied().unwrap_or(0);
        if weight == 0 {
            return Err(GovernanceError::NotEligible { proposal: id.into(), voter: voter.into() });
        }
        if p.votes.contains_key(voter) {
            return Err(GovernanceError::AlreadyVoted { proposal: id.into(), voter: voter.into() });
        }
        Ok(Vote { proposal_id: id.to_string(), voter: voter.to_string(), choice, weight })
    }

    pub fn vote(&mut self, id: &str, voter: &str, choice: Choice, now: u64) -> Result<Vote, GovernanceError> {
        let v = self.check_vote(id, voter, choice, now)?;
        self.proposals.get_mut(id).expect("checked").votes.insert(voter.to_string(), v.clone());
        Ok(v)
    }

    pub fn check_tally(&self, id: &str, now: u64) -> Result<TallyOutcome, GovernanceError> {
        let p = self.proposal(id)?;
        if p.state != ProposalState::Open {
            return Err(GovernanceError::NotOpen(id.to_string()));
        }
        if now < p.closes_at {
            return Err(GovernanceError::StillOpen { id: id.into(), closes_at: p.closes_at, now });
        }
        Ok(tally_votes(p.total_weight(), p.votes.values().map(|v| (v.choice, v.weight))))
    }

    pub fn tally(&mut self, id: &str, now: u64) -> Result<TallyOutcome, GovernanceError> {
        let outcome = self.check_tally(id, now)?;
        let p = self.proposals.get_mut(id).expect("checked");
        p.state = if outcome.accepted { ProposalState::Accepted } else { ProposalState::Rejected };
        p.outcome = Some(outcome);
        Ok(outcome)
    }

    pub fn check_execute(&self, id: &str) -> Result<&Proposal, GovernanceError> {
        let p = self.proposal(id)?;
        match p.state {
            ProposalState::Accepted => Ok(p),
            ProposalState::Executed => Err(GovernanceError::AlreadyExecuted(id.to_string())),
            _ => Err(GovernanceError::NotAccepted(id.to_string())),
        }
    }

    /// Mark executed and apply policy/moderation effects. Token mints are
    /// returned as effects for the caller to apply.
    pub fn execute(&mut self, id: &str, now: u64) -> Result<ExecutionEffect, GovernanceError> {
        let payload = self.check_execute(id)?.payload.clone();
        let effect = match payload {
            ProposalPayload::PolicyUpdate { policy_name, document } => {
                let version = self.policies.write(&policy_name, document, id, now);
                ExecutionEffect::PolicyWritten { policy_name, version }
            }
            ProposalPayload::ContentModeration { content_ref, action } => {
                self.moderation.insert(
                    content_ref.clone(),
                    ModerationDecision { content_ref: content_ref.clone(), action: action.clone(), proposal_id: id.into() },
                );
                ExecutionEffect::Moderated { content_ref, action }
            }
            ProposalPayload::ResourceAllocation { recipient, amount, .. } => {
                ExecutionEffect::Mint { recipient, token_type: TokenType::UT, amount }
            }
            ProposalPayload::RewardGrant { recipient, token_type, amount } => {
                ExecutionEffect::Mint { recipient, token_type, amount }
            }
        };
        self.proposals.get_mut(id).expect("checked").state = ProposalState::Executed;
        Ok(effect)
    }
}
