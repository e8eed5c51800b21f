//! Role registry and the four role-lifecycle functions: onboarding,
//! offboarding, participation termination, and reward.
//!
//! Assignment status only moves `PendingAuth -> Active`, `Active -> Offboarded`
//! or `Active -> TerminatedForCause`. Onboarding validates authentication
//! and the onboarder oracle in one step, so a committed assignment is
//! always `Active`.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::identity::{AuthSession, SessionState};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RoleError {
    #[error("unknown role {0}")]
    UnknownRole(String),
    #[error("{actor} needs a passed, unused identity session to take role {role}")]
    AuthRequired { actor: String, role: String },
    #[error("onboarder oracle rejected {0}")]
    OracleRejected(String),
    #[error("assignment {0} is not active")]
    NotActive(String),
    #[error("unknown assignment {0}")]
    UnknownAssignment(String),
    #[error("{actor} already holds active role {role}")]
    AlreadyAssigned { actor: String, role: String },
    #[error("only friends or family members may report; got {0}")]
    UnauthorizedReporter(String),
    #[error("contribution weight must be positive")]
    ZeroWeight,
    #[error("duplicate role definition {0}")]
    DuplicateRole(String),
}

impl RoleError {
    pub fn code(&self) -> &'static str {
        match self {
            RoleError::UnknownRole(_) => "UnknownRole",
            RoleError::AuthRequired { .. } => "AuthRequired",
            RoleError::OracleRejected(_) => "OracleRejected",
            RoleError::NotActive(_) => "NotActive",
            RoleError::UnknownAssignment(_) => "UnknownAssignment",
            RoleError::AlreadyAssigned { .. } => "AlreadyAssigned",
            RoleError::UnauthorizedReporter(_) => "UnauthorizedReporter",
            RoleError::ZeroWeight => "ZeroWeight",
            RoleError::DuplicateRole(_) => "DuplicateRole",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RoleKind {
    Human,
    AIAgent,
    Oracle,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleDefinition {
    pub role_name: String,
    pub kind: RoleKind,
    pub sbt_required: bool,
}

const ROLES_JSON: &str = include_str!("../data/roles.json");

/// The bundled role definitions.
pub fn default_roles() -> &'static [RoleDefinition] {
    static ROLES: OnceLock<Vec<RoleDefinition>> = OnceLock::new();
    ROLES.get_or_init(|| serde_json::from_str(ROLES_JSON).expect("bundled roles.json is valid"))
}

/// Roles allowed to trigger participation termination.
pub const TERMINATION_REPORTERS: [&str; 2] = ["friend", "family_member"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AssignmentStatus {
    PendingAuth,
    Active,
    Offboarded,
    TerminatedForCause,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleAssignment {
    pub assignment_id: String,
    pub actor_id: String,
    pub role_name: String,
    pub status: AssignmentStatus,
    pub onboard_session: Option<String>,
    pub reward_total_ut: u64,
    #[serde(default)]
    pub sbt_asset: Option<String>,
}

impl RoleAssignment {
    pub fn is_active(&self) -> bool {
        self.status == AssignmentStatus::Active
    }
}

/// Onboarder oracle stand-in: approves everyone not on its deny list.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OnboarderOracle {
    #[serde(default)]
    pub rejected_actors: BTreeSet<String>,
}

impl OnboarderOracle {
    pub fn approves(&self, actor_id: &str) -> bool {
        !self.rejected_actors.contains(actor_id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RolesConfig {
    /// UT minted per unit of contribution weight.
    pub base_reward: u64,
    /// Whether AI-agent and oracle roles also need an identity session.
    pub agents_require_auth: bool,
    pub onboarder: OnboarderOracle,
}

impl Default for RolesConfig {
    fn default() -> Self {
        RolesConfig { base_reward: 1, agents_require_auth: false, onboarder: OnboarderOracle::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TerminationReport {
    pub reporter_role: String,
    pub concern: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Contribution {
    pub kind: String,
    pub weight: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleRegistry {
    definitions: BTreeMap<String, RoleDefinition>,
    assignments: BTreeMap<String, RoleAssignment>,
    /// Assignment ids in onboarding order.
    order: Vec<String>,
    used_sessions: BTreeSet<String>,
    pub config: RolesConfig,
}

impl Default for RoleRegistry {
    fn default() -> Self {
        RoleRegistry::with_definitions(default_roles().to_vec(), RolesConfig::default()).expect("bundled roles are unique")
    }
}

impl RoleRegistry {
    pub fn with_definitions(defs: Vec<RoleDefinition>, config: RolesConfig) -> Result<Self, RoleError> {
        let mut definitions = BTreeMap::new();
        for d in defs {
            let name = d.role_name.clone();
            if definitions.insert(name.clone(), d).is_some() {
                return Err(RoleError::DuplicateRole(name));
            }
        }
        Ok(RoleRegistry {
            definitions,
            assignments: BTreeMap::new(),
            order: Vec::new(),
            used_sessions: BTreeSet::new(),
            config,
        })
    }

    pub fn definition(&self, role_name: &str) -> Result<&RoleDefinition, RoleError> {
        self.definitions.get(role_name).ok_or_else(|| RoleError::UnknownRole(role_name.to_string()))
    }

    pub fn definitions(&self) -> impl Iterator<Item = &RoleDefinition> {
        self.definitions.values()
    }

    pub fn assignment(&self, id: &str) -> Result<&RoleAssignment, RoleError> {
        self.assignments.get(id).ok_or_else(|| RoleError::UnknownAssignment(id.to_string()))
    }

    /// All assignments in onboarding order.
    pub fn assignments(&self) -> impl Iterator<Item = &RoleAssignment> {
        self.order.iter().map(|id| &self.assignments[id])
    }

    /// Active assignments for a role, in onboarding order.
    pub fn active_with_role<'a>(&'a self, role_name: &'a str) -> impl Iterator<Item = &'a RoleAssignment> + 'a {
        self.assignments().filter(move |a| a.is_active() && a.role_name == role_name)
    }

    pub fn active_roles_of<'a>(&'a self, actor_id: &'a str) -> impl Iterator<Item = &'a RoleAssignment> + 'a {
        self.assignments().filter(move |a| a.is_active() && a.actor_id == actor_id)
    }

    pub fn is_session_used(&self, session_id: &str) -> bool {
        self.used_sessions.contains(session_id)
    }

    /// Whether onboarding `role_name` demands an identity session.
    pub fn needs_auth(&self, role_name: &str) -> Result<bool, RoleError> {
        let def = self.definition(role_name)?;
        Ok(def.kind == RoleKind::Human || self.config.agents_require_auth)
    }

    /// Validate an onboarding and return the assignment it would create.
    pub fn prepare_onboard(
        &self,
        actor_id: &str,
        role_name: &str,
        auth: Option<&AuthSession>,
    ) -> Result<RoleAssignment, RoleError> {
        self.definition(role_name)?;
        if self.active_roles_of(actor_id).any(|a| a.role_name == role_name) {
            return Err(RoleError::AlreadyAssigned { actor: actor_id.into(), role: role_name.into() });
        }
        let onboard_session = if self.needs_auth(role_name)? {
            let ok = auth.filter(|s| {
                s.state == SessionState::Passed && s.actor_id == actor_id && !self.used_sessions.contains(&s.session_id)
            });
            match ok {
                Some(s) => Some(s.session_id.clone()),
                None => return Err(RoleError::AuthRequired { actor: actor_id.into(), role: role_name.into() }),
            }
        } else {
            None
        };
        if !self.config.onboarder.approves(actor_id) {
            return Err(RoleError::OracleRejected(actor_id.to_string()));
        }
        Ok(RoleAssignment {
            assignment_id: format!("asg-{:04}", self.order.len() + 1),
            actor_id: actor_id.to_string(),
            role_name: role_name.to_string(),
            status: AssignmentStatus::Active,
            onboard_session,
            reward_total_ut: 0,
            sbt_asset: None,
        })
    }

    pub fn commit_onboard(&mut self, assignment: RoleAssignment) -> &RoleAssignment {
        if let Some(s) = &assignment.onboard_session {
            self.used_sessions.insert(s.clone());
        }
        let id = assignment.assignment_id.clone();
        self.order.push(id.clone());
        self.assignments.entry(id).or_insert(assignment)
    }

    fn active(&self, id: &str) -> Result<&RoleAssignment, RoleError> {
        let a = self.assignment(id)?;
        if a.is_active() {
            Ok(a)
        } else {
            Err(RoleError::NotActive(id.to_string()))
        }
    }

    pub fn check_offboard(&self, id: &str) -> Result<(), RoleError> {
        self.active(id).map(|_| ())
    }

    pub fn offboard(&mut self, id: &str) -> Result<&RoleAssignment, RoleError> {
        self.check_offboard(id)?;
        let a = self.assignments.get_mut(id).expect("checked");
        a.status = AssignmentStatus::Offboarded;
        Ok(a)
    }

    pub fn check_terminate(&self, id: &str, report: &TerminationReport) -> Result<(), RoleError> {
        self.active(id)?;
        if !TERMINATION_REPORTERS.contains(&report.reporter_role.as_str()) {
            return Err(RoleError::UnauthorizedReporter(report.reporter_role.clone()));
        }
        Ok(())
    }

    pub fn terminate_participation(&mut self, id: &str, report: &TerminationReport) -> Result<&RoleAssignment, RoleError> {
        self.check_terminate(id, report)?;
        let a = self.assignments.get_mut(id).expect("checked");
        a.status = AssignmentStatus::TerminatedForCause;
        Ok(a)
    }

    /// UT a contribution would earn.
    pub fn check_reward(&self, id: &str, contribution: &Contribution) -> Result<u64, RoleError> {
        self.active(id)?;
        if contribution.weight == 0 {
            return Err(RoleError::ZeroWeight);
        }
        Ok(contribution.weight.saturating_mul(self.config.base_reward))
    }

    pub fn record_reward(&mut self, id: &str, amount: u64) -> Result<&RoleAssignment, RoleError> {
        self.active(id)?;
        let a = self.assignments.get_mut(id).expect("checked");
        a.reward_total_ut += amount;
        Ok(a)
    }

    pub fn set_sbt(&mut self, id: &str, asset_id: String) {
        if let Some(a) = self.assignments.get_mut(id) {
            a.sbt_asset = Some(asset_id);
        }
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;

    fn passed(actor: &str, id: &str) -> AuthSession {
        AuthSession {
            session_id: id.into(),
            actor_id: actor.into(),
            set_id: "s".into(),
            responses: BTreeMap::new(),
            state: SessionState::Passed,
        }
    }

    fn onboard(reg: &mut RoleRegistry, actor: &str, role: &str, auth: Option<&AuthSession>) -> Result<String, RoleError> {
        let a = reg.prepare_onboard(actor, role, auth)?;
        Ok(reg.commit_onboard(a).assignment_id.clone())
    }

    #[test]
    fn bundled_registry_covers_every_role() {
        let reg = RoleRegistry::default();
        assert_eq!(reg.definitions().count(), 22);
        assert_eq!(reg.definitions().filter(|d| d.kind == RoleKind::Human).count(), 15);
        assert!(reg.definitions().filter(|d| d.kind != RoleKind::Human).all(|d| !d.sbt_required));
        assert!(reg.definition("psychologist").unwrap().sbt_required);
        assert!(!reg.definition("victim").unwrap().sbt_required);
    }

    #[test]
    fn human_roles_need_a_passed_session_of_the_same_actor() {
        let mut reg = RoleRegistry::default();
        assert!(matches!(onboard(&mut reg, "psy-1", "psychologist", None), Err(RoleError::AuthRequired { .. })));
        let mut other = passed("someone-else", "sess-1");
        assert!(matches!(onboard(&mut reg, "psy-1", "psychologist", Some(&other)), Err(RoleError::AuthRequired { .. })));
        other.actor_id = "psy-1".into();
        other.state = SessionState::Terminated;
        assert!(matches!(onboard(&mut reg, "psy-1", "psychologist", Some(&other)), Err(RoleError::AuthRequired { .. })));
        let s = passed("psy-1", "sess-2");
        let id = onboard(&mut reg, "psy-1", "psychologist", Some(&s)).unwrap();
        assert_eq!(reg.assignment(&id).unwrap().status, AssignmentStatus::Active);
        // A session backs exactly one activation.
        assert!(matches!(onboard(&mut reg, "psy-1", "educator", Some(&s)), Err(RoleError::AuthRequired { .. })));
    }

    #[test]
    fn agents_skip_auth_unless_configured() {
        let mut reg = RoleRegistry::default();
        onboard(&mut reg, "agent-1", "sextortion_diagnoser", None).unwrap();
        reg.config.agents_require_auth = true;
        assert!(matches!(onboard(&mut reg, "agent-2", "legal_aid_diagnoser", None), Err(RoleError::AuthRequired { .. })));
    }

    #[test]
    fn unknown_role_and_oracle_rejection() {
        let mut reg = RoleRegistry::default();
        assert_eq!(onboard(&mut reg, "x", "wizard", None), Err(RoleError::UnknownRole("wizard".into())));
        reg.config.onboarder.rejected_actors.insert("bad-bot".into());
        assert_eq!(onboard(&mut reg, "bad-bot", "ngo_advisor", None), Err(RoleError::OracleRejected("bad-bot".into())));
    }

    #[test]
    fn offboard_twice_is_not_active() {
        let mut reg = RoleRegistry::default();
        let id = onboard(&mut reg, "a", "response_support", None).unwrap();
        reg.offboard(&id).unwrap();
        assert_eq!(reg.assignment(&id).unwrap().status, AssignmentStatus::Offboarded);
        assert_eq!(reg.offboard(&id).unwrap_err(), RoleError::NotActive(id.clone()));
        assert!(reg.check_reward(&id, &Contribution { kind: "x".into(), weight: 1 }).is_err());
    }

    #[test]
    fn termination_gate() {
        let mut reg = RoleRegistry::default();
        let s = passed("teen-1", "sess-1");
        let id = onboard(&mut reg, "teen-1", "teenager", Some(&s)).unwrap();
        let police = TerminationReport { reporter_role: "police_officer".into(), concern: "c".into() };
        assert_eq!(
            reg.terminate_participation(&id, &police).unwrap_err(),
            RoleError::UnauthorizedReporter("police_officer".into())
        );
        let family = TerminationReport { reporter_role: "family_member".into(), concern: "withdrawn".into() };
        assert_eq!(reg.terminate_participation(&id, &family).unwrap().status, AssignmentStatus::TerminatedForCause);
        assert!(matches!(reg.terminate_participation(&id, &family), Err(RoleError::NotActive(_))));
    }

    #[test]
    fn reward_arithmetic() {
        let mut reg = RoleRegistry::default();
        let id = onboard(&mut reg, "agent", "reward_support", None).unwrap();
        assert_eq!(reg.check_reward(&id, &Contribution { kind: "k".into(), weight: 3 }), Ok(3));
        assert_eq!(reg.check_reward(&id, &Contribution { kind: "k".into(), weight: 0 }), Err(RoleError::ZeroWeight));
        reg.config.base_reward = 4;
        assert_eq!(reg.check_reward(&id, &Contribution { kind: "k".into(), weight: 3 }), Ok(12));
    }

    #[test]
    fn duplicate_active_role_refused() {
        let mut reg = RoleRegistry::default();
        onboard(&mut reg, "a", "ngo_advisor", None).unwrap();
        assert!(matches!(onboard(&mut reg, "a", "ngo_advisor", None), Err(RoleError::AlreadyAssigned { .. })));
    }
}
