//! Engine operations as data.
//!
//! A [`Command`] is `{"op": <name>, "args": {...}}`. The HTTP layer and
//! the scenario runner both go through [`Engine::execute`], so each
//! request maps to exactly one engine operation.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{Engine, EngineError, Result};
use crate::agents::{CaseFeatures, SituationBand};
use crate::casework::CaseEvent;
use crate::digest::Digest;
use crate::governance::{Choice, ProposalPayload};
use crate::identity::ChallengeSetDef;
use crate::ledger::{Component, KindRef, LedgerFilter, TimeRange};
use crate::roles::{Contribution, TerminationReport};
use crate::tokens::{MintSpec, TokenType, TransferSpec};

fn generic() -> String {
    "generic".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", content = "args", rename_all = "snake_case")]
pub enum Command {
    // clock and ledger
    AdvanceClock {
        #[serde(default)]
        to: Option<u64>,
        #[serde(default)]
        by: Option<u64>,
    },
    SetOracleVerdict {
        oracle_id: String,
        verdict: bool,
    },
    AppendTransaction {
        component: Component,
        local_id: u32,
        #[serde(default)]
        actor_ids: Vec<String>,
        #[serde(default)]
        component_ids: Vec<String>,
        #[serde(default)]
        payload: Value,
    },
    SealLedger {},
    VerifyLedger {},
    QueryLedger {
        #[serde(default)]
        component: Option<Component>,
        #[serde(default)]
        actor_id: Option<String>,
        #[serde(default)]
        kind: Option<KindRef>,
        #[serde(default)]
        from: Option<u64>,
        #[serde(default)]
        to: Option<u64>,
        #[serde(default)]
        case_id: Option<String>,
    },
    // identity
    CreateChallengeSet(ChallengeSetDef),
    OpenSession {
        actor_id: String,
        set_id: String,
    },
    SubmitResponse {
        session_id: String,
        challenge_id: String,
        /// UTF-8 response text.
        #[serde(default)]
        response: Option<String>,
        /// Hex-encoded response bytes, for binary responses.
        #[serde(default)]
        response_hex: Option<String>,
    },
    EvaluateSession {
        session_id: String,
    },
    GetSession {
        session_id: String,
    },
    // roles
    Onboard {
        actor_id: String,
        role_name: String,
        #[serde(default)]
        session_id: Option<String>,
    },
    Offboard {
        assignment_id: String,
        #[serde(default)]
        reason: String,
    },
    Terminate {
        assignment_id: String,
        reporter_role: String,
        #[serde(default)]
        concern: String,
    },
    Reward {
        assignment_id: String,
        kind: String,
        weight: u64,
    },
    ListRoles {},
    // tokens
    Mint {
        token_type: TokenType,
        recipient: String,
        #[serde(default)]
        amount: Option<u64>,
        /// NFT content; digested before anchoring.
        #[serde(default)]
        content: Option<String>,
        #[serde(default)]
        content_digest: Option<Digest>,
        #[serde(default)]
        label: Option<String>,
        #[serde(default)]
        mandatory: bool,
    },
    Transfer {
        token_type: TokenType,
        from: String,
        to: String,
        #[serde(default)]
        amount: Option<u64>,
        #[serde(default)]
        asset_id: Option<String>,
    },
    Balance {
        actor_id: String,
    },
    // governance
    Propose {
        proposer: String,
        payload: ProposalPayload,
    },
    Vote {
        proposal_id: String,
        voter: String,
        choice: Choice,
    },
    Tally {
        proposal_id: String,
    },
    Execute {
        proposal_id: String,
    },
    GetProposal {
        proposal_id: String,
    },
    // casework
    ReportIncident {
        reporter: String,
        #[serde(default)]
        details: String,
        #[serde(default)]
        identity_session: Option<String>,
    },
    AdvanceCase {
        case_id: String,
        #[serde(flatten)]
        event: CaseEvent,
    },
    AttachEvidence {
        case_id: String,
        content: String,
    },
    AssembleResponseTeam {
        case_id: String,
    },
    CaseReport {
        case_id: String,
    },
    ListCases {
        #[serde(default)]
        viewer: Option<String>,
    },
    // agents
    DiagnoseSextortion(CaseFeatures),
    DiagnoseLegalAid {
        #[serde(default)]
        features: CaseFeatures,
        #[serde(default = "generic")]
        jurisdiction: String,
    },
    AssessMentalHealth {
        answers: Vec<i64>,
    },
    AssessSituation {
        answers: Vec<i64>,
    },
    RoleInformation {
        role_name: String,
        band: SituationBand,
    },
    AgentPassThrough {
        agent: String,
        #[serde(default)]
        input: Value,
    },
}

impl Command {
    /// Every op name accepted by [`Command::parse`].
    pub const OPS: &'static [&'static str] = &[
        "advance_clock", "set_oracle_verdict", "append_transaction", "seal_ledger", "verify_ledger", "query_ledger",
        "create_challenge_set", "open_session", "submit_response", "evaluate_session", "get_session",
        "onboard", "offboard", "terminate", "reward", "list_roles",
        "mint", "transfer", "balance",
        "propose", "vote", "tally", "execute", "get_proposal",
        "report_incident", "advance_case", "attach_evidence", "assemble_response_team", "case_report", "list_cases",
        "diagnose_sextortion", "diagnose_legal_aid", "assess_mental_health", "assess_situation", "role_information",
        "agent_pass_through",
    ];

    /// Parse `{"op", "args"}`; missing args count as `{}`.
    pub fn parse(op: &str, args: Value) -> Result<Command> {
        let args = if args.is_null() { json!({}) } else { args };
        serde_json::from_value(json!({ "op": op, "args": args })).map_err(|e| EngineError::BadRequest(format!("{op}: {e}")))
    }

    pub fn name(&self) -> String {
        match serde_json::to_value(self) {
            Ok(Value::Object(m)) => m.get("op").and_then(Value::as_str).unwrap_or_default().to_string(),
            _ => String::new(),
        }
    }

    /// Whether the command can change engine state.
    pub fn is_mutation(&self) -> bool {
        !matches!(
            self,
            Command::VerifyLedger {}
                | Command::QueryLedger { .. }
                | Command::GetSession { .. }
                | Command::ListRoles {}
                | Command::Balance { .. }
                | Command::GetProposal { .. }
                | Command::CaseReport { .. }
                | Command::ListCases { .. }
                | Command::DiagnoseSextortion(_)
                | Command::DiagnoseLegalAid { .. }
                | Command::AssessMentalHealth { .. }
                | Command::AssessSituation { .. }
                | Command::RoleInformation { .. }
                | Command::AgentPassThrough { .. }
        )
    }
}

fn to_json<T: Serialize>(v: T) -> Result<Value> {
    serde_json::to_value(v).map_err(|e| EngineError::BadRequest(e.to_string()))
}

fn bad(m: &str) -> EngineError {
    EngineError::BadRequest(m.to_string())
}

impl Engine {
    /// Run one command and return its JSON result.
    pub fn execute(&mut self, cmd: Command) -> Result<Value> {
        match cmd {
            Command::AdvanceClock { to, by } => {
                let target = match (to, by) {
                    (Some(t), None) => t,
                    (None, Some(b)) => self.clock.checked_add(b).ok_or_else(|| bad("clock overflow"))?,
                    _ => return Err(bad("advance_clock takes exactly one of `to` or `by`")),
                };
                Ok(json!({ "clock": self.advance_clock(target)? }))
            }
            Command::SetOracleVerdict { oracle_id, verdict } => {
                self.set_oracle_verdict(&oracle_id, verdict)?;
                Ok(json!({ "oracle_id": oracle_id, "verdict": verdict }))
            }
            Command::AppendTransaction { component, local_id, actor_ids, component_ids, payload } => {
                to_json(self.append_transaction(KindRef { component, local_id }, actor_ids, component_ids, payload)?)
            }
            Command::SealLedger {} => {
                self.seal()?;
                Ok(json!({ "sealed": true, "ledger_len": self.ledger.len() }))
            }
            Command::VerifyLedger {} => to_json(self.verify()),
            Command::QueryLedger { component, actor_id, kind, from, to, case_id } => {
                let time_range = match (from, to) {
                    (None, None) => None,
                    (f, t) => Some(TimeRange { from: f.unwrap_or(0), to: t.unwrap_or(u64::MAX) }),
                };
                let filter = LedgerFilter { component, actor_id, kind, time_range };
                to_json(self.query_ledger(&filter, case_id.as_deref()))
            }
            Command::CreateChallengeSet(def) => to_json(self.create_challenge_set(def)?),
            Command::OpenSession { actor_id, set_id } => to_json(self.open_session(&actor_id, &set_id)?),
            Command::SubmitResponse { session_id, challenge_id, response, response_hex } => {
                let bytes = match (response, response_hex) {
                    (Some(t), None) => t.into_bytes(),
                    (None, Some(h)) => hex::decode(h).map_err(|e| bad(&format!("response_hex: {e}")))?,
                    _ => return Err(bad("submit_response takes exactly one of `response` or `response_hex`")),
                };
                to_json(self.submit_response(&session_id, &challenge_id, bytes)?)
            }
            Command::EvaluateSession { session_id } => to_json(self.evaluate_session(&session_id)?),
            Command::GetSession { session_id } => {
                let s = self.identity.session(&session_id)?;
                Ok(json!({ "session_id": s.session_id, "actor_id": s.actor_id, "set_id": s.set_id, "state": s.state }))
            }
            Command::Onboard { actor_id, role_name, session_id } => {
                to_json(self.onboard(&actor_id, &role_name, session_id.as_deref())?)
            }
            Command::Offboard { assignment_id, reason } => to_json(self.offboard(&assignment_id, &reason)?),
            Command::Terminate { assignment_id, reporter_role, concern } => {
                to_json(self.terminate_participation(&assignment_id, &TerminationReport { reporter_role, concern })?)
            }
            Command::Reward { assignment_id, kind, weight } => {
                to_json(self.reward(&assignment_id, &Contribution { kind, weight })?)
            }
            Command::ListRoles {} => Ok(json!({
                "definitions": self.roles.definitions().collect::<Vec<_>>(),
                "assignments": self.roles.assignments().collect::<Vec<_>>(),
            })),
            Command::Mint { token_type, recipient, amount, content, content_digest, label, mandatory } => {
                let spec = match token_type {
                    TokenType::GT | TokenType::UT => MintSpec::Amount(amount.ok_or_else(|| bad("fungible mint needs `amount`"))?),
                    TokenType::NFT => {
                        let digest = match (content, content_digest) {
                            (Some(c), None) => Some(Digest::of(c.as_bytes())),
                            (None, d) => d,
                            _ => return Err(bad("give `content` or `content_digest`, not both")),
                        };
                        MintSpec::Nft { content_digest: digest, label }
                    }
                    TokenType::SBT => MintSpec::Sbt { label: label.unwrap_or_default(), mandatory },
                };
                to_json(self.mint(token_type, &recipient, spec)?)
            }
            Command::Transfer { token_type, from, to, amount, asset_id } => {
                let spec = match (amount, asset_id) {
                    (Some(a), None) => TransferSpec::Amount(a),
                    (None, Some(id)) => TransferSpec::Asset(id),
                    _ => return Err(bad("transfer takes exactly one of `amount` or `asset_id`")),
                };
                to_json(self.transfer(token_type, &from, &to, spec)?)
            }
            Command::Balance { actor_id } => Ok(self.balances(&actor_id)),
            Command::Propose { proposer, payload } => to_json(self.propose(&proposer, payload)?),
            Command::Vote { proposal_id, voter, choice } => to_json(self.vote(&proposal_id, &voter, choice)?),
            Command::Tally { proposal_id } => to_json(self.tally(&proposal_id)?),
            Command::Execute { proposal_id } => to_json(self.execute_proposal(&proposal_id)?),
            Command::GetProposal { proposal_id } => to_json(self.governance.proposal(&proposal_id)?),
            Command::ReportIncident { reporter, details, identity_session } => {
                to_json(self.report_incident(&reporter, details.as_bytes(), identity_session.as_deref())?.report())
            }
            Command::AdvanceCase { case_id, event } => to_json(self.advance_case(&case_id, event)?.report()),
            Command::AttachEvidence { case_id, content } => to_json(self.attach_evidence(&case_id, content.as_bytes())?),
            Command::AssembleResponseTeam { case_id } => {
                let team = self.assemble_response_team(&case_id)?;
                Ok(json!({
                    "psychologist": team.psychologist,
                    "legal_aid_provider": team.legal_aid_provider,
                    "agents": team.agents,
                    "team": team.members(),
                }))
            }
            Command::CaseReport { case_id } => to_json(self.case_report(&case_id)?),
            Command::ListCases { viewer } => to_json(self.visible_cases(viewer.as_deref())),
            Command::DiagnoseSextortion(f) => to_json(self.diagnose_sextortion(&f)),
            Command::DiagnoseLegalAid { features, jurisdiction } => to_json(self.diagnose_legal_aid(&features, &jurisdiction)),
            Command::AssessMentalHealth { answers } => to_json(self.assess_mental_health(&answers)?),
            Command::AssessSituation { answers } => to_json(self.assess_situation(&answers)?),
            Command::RoleInformation { role_name, band } => to_json(self.role_information(&role_name, band)?),
            Command::AgentPassThrough { agent, input } => to_json(self.agent_pass_through(&agent, &input)?),
        }
    }

    /// Every holding of an actor.
    pub fn balances(&self, actor_id: &str) -> Value {
        json!({
            "actor_id": actor_id,
            "GT": self.tokens.gt_balance(actor_id),
            "UT": self.tokens.ut_balance(actor_id),
            "NFT": self.tokens.balance(actor_id, TokenType::NFT),
            "SBT": self.tokens.balance(actor_id, TokenType::SBT),
        })
    }
}
