//! Deterministic diagnostic agents and self-assessment scorers.
//!
//! Every weight, band edge, action rule and resource list comes from a
//! [`Rubric`]. The bundled default lives in `data/rubric.json`; a custom
//! file can be loaded with [`Rubric::from_json`]. All operations are pure.

pub mod ace;

use std::collections::BTreeMap;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::digest::Digest;
use crate::roles::{default_roles, RoleKind};
pub use ace::{AceEntry, AceLayer, AceTrace};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AgentError {
    #[error("expected {expected} answers, got {got}")]
    BadAnswerCount { expected: usize, got: usize },
    #[error("answer {index} is {value}, outside 0..=4")]
    OutOfRange { index: usize, value: i64 },
    #[error("unknown role {0}")]
    UnknownRole(String),
}

impl AgentError {
    pub fn code(&self) -> &'static str {
        match self {
            AgentError::BadAnswerCount { .. } => "BadAnswerCount",
            AgentError::OutOfRange { .. } => "OutOfRange",
            AgentError::UnknownRole(_) => "UnknownRole",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RubricError {
    #[error("rubric is not valid JSON: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid rubric: {0}")]
    Invalid(String),
}

/// Highest value a single questionnaire answer may take.
pub const MAX_ANSWER: i64 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feature {
    MinorInvolved,
    ExplicitContentShared,
    ThreatsMade,
    DeadlinePressure,
    SelfHarmIndicators,
    PriorRelationship,
    MonetaryDemand,
}

impl Feature {
    pub const ALL: [Feature; 7] = [
        Feature::MinorInvolved,
        Feature::ExplicitContentShared,
        Feature::ThreatsMade,
        Feature::DeadlinePressure,
        Feature::SelfHarmIndicators,
        Feature::PriorRelationship,
        Feature::MonetaryDemand,
    ];
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CaseFeatures {
    pub minor_involved: bool,
    pub explicit_content_shared: bool,
    pub threats_made: bool,
    pub deadline_pressure: bool,
    pub self_harm_indicators: bool,
    pub prior_relationship: bool,
    pub monetary_demand: bool,
}

impl CaseFeatures {
    pub fn get(&self, f: Feature) -> bool {
        match f {
            Feature::MinorInvolved => self.minor_involved,
            Feature::ExplicitContentShared => self.explicit_content_shared,
            Feature::ThreatsMade => self.threats_made,
            Feature::DeadlinePressure => self.deadline_pressure,
            Feature::SelfHarmIndicators => self.self_harm_indicators,
            Feature::PriorRelationship => self.prior_relationship,
            Feature::MonetaryDemand => self.monetary_demand,
        }
    }

    pub fn set(&mut self, f: Feature, v: bool) {
        let slot = match f {
            Feature::MinorInvolved => &mut self.minor_involved,
            Feature::ExplicitContentShared => &mut self.explicit_content_shared,
            Feature::ThreatsMade => &mut self.threats_made,
            Feature::DeadlinePressure => &mut self.deadline_pressure,
            Feature::SelfHarmIndicators => &mut self.self_harm_indicators,
            Feature::PriorRelationship => &mut self.prior_relationship,
            Feature::MonetaryDemand => &mut self.monetary_demand,
        };
        *slot = v;
    }

    /// Bit `i` of `bits` sets `Feature::ALL[i]`.
    pub fn from_bits(bits: u8) -> Self {
        let mut f = CaseFeatures::default();
        for (i, feat) in Feature::ALL.into_iter().enumerate() {
            f.set(feat, bits >> i & 1 == 1);
        }
        f
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RiskBand {
    Low,
    Elevated,
    High,
    Critical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MentalHealthBand {
    Stable,
    Strained,
    Distressed,
    Crisis,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SituationBand {
    Low,
    Moderate,
    Severe,
    Emergency,
}

impl SituationBand {
    pub const ALL: [SituationBand; 4] =
        [SituationBand::Low, SituationBand::Moderate, SituationBand::Severe, SituationBand::Emergency];
}

impl std::str::FromStr for SituationBand {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SituationBand::ALL.into_iter().find(|b| format!("{b:?}") == s).ok_or_else(|| format!("unknown situation band {s:?}"))
    }
}

/// When an action rule fires.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    Always,
    AnyFeature(Vec<Feature>),
    BandAtLeast(RiskBand),
}

impl Condition {
    fn holds(&self, f: &CaseFeatures, band: RiskBand) -> bool {
        match self {
            Condition::Always => true,
            Condition::AnyFeature(list) => list.iter().any(|x| f.get(*x)),
            Condition::BandAtLeast(b) => band >= *b,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionRule {
    pub action: String,
    pub when: Condition,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BandEdge<B> {
    pub band: B,
    pub min: u32,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub guidance: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SextortionRubric {
    pub weights: BTreeMap<Feature, u32>,
    pub bands: Vec<BandEdge<RiskBand>>,
    pub actions: Vec<ActionRule>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LegalAidRubric {
    pub actions: Vec<ActionRule>,
    /// Resource ids per jurisdiction tag; must contain `generic`.
    pub resources: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Questionnaire<B> {
    pub items: Vec<String>,
    pub bands: Vec<BandEdge<B>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resource {
    pub category: String,
    pub title: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceRef {
    pub id: String,
    pub category: String,
    pub title: String,
}

/// Role information entry used for roles without their own bundle.
pub const DEFAULT_ROLE_KEY: &str = "*";

/// Complete agent configuration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rubric {
    pub sextortion: SextortionRubric,
    pub legal_aid: LegalAidRubric,
    pub mental_health: Questionnaire<MentalHealthBand>,
    pub situation: Questionnaire<SituationBand>,
    pub resources: BTreeMap<String, Resource>,
    pub role_information: BTreeMap<String, BTreeMap<SituationBand, Vec<String>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskVerdict {
    pub score: u32,
    pub band: RiskBand,
    pub recommended_actions: Vec<String>,
    pub trace: AceTrace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LegalRecommendation {
    pub actions: Vec<String>,
    pub resources: Vec<ResourceRef>,
    pub jurisdiction: String,
    pub trace: AceTrace,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssessmentResult<B> {
    pub total: u32,
    pub band: B,
    pub guidance: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleInformation {
    pub role_name: String,
    pub band: SituationBand,
    pub resources: Vec<ResourceRef>,
}

/// Verdict of an agent that has no rubric of its own.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassThroughVerdict {
    pub agent: String,
    pub verdict: String,
    pub input_digest: Digest,
    pub trace: AceTrace,
}

fn check_bands<B: Copy + Ord + std::fmt::Debug>(what: &str, bands: &[BandEdge<B>]) -> Result<(), RubricError> {
    let bad = |m: String| Err(RubricError::Invalid(format!("{what}: {m}")));
    match bands.first() {
        None => return bad("no bands".into()),
        Some(b) if b.min != 0 => return bad("first band must start at 0".into()),
        _ => {}
    }
    for w in bands.windows(2) {
        if w[1].min <= w[0].min || w[1].band <= w[0].band {
            return bad(format!("bands {:?} and {:?} are out of order", w[0].band, w[1].band));
        }
    }
    Ok(())
}

fn band_for<B>(bands: &[BandEdge<B>], score: u32) -> &BandEdge<B> {
    bands.iter().rev().find(|b| b.min <= score).expect("first band starts at 0")
}

impl Rubric {
    /// The bundled default rubric.
    pub fn bundled() -> &'static Rubric {
        static R: OnceLock<Rubric> = OnceLock::new();
        R.get_or_init(|| Rubric::from_json(include_str!("../../data/rubric.json")).expect("bundled rubric is valid"))
    }

    pub fn from_json(text: &str) -> Result<Rubric, RubricError> {
        let r: Rubric = serde_json::from_str(text)?;
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<(), RubricError> {
        let invalid = |m: String| Err(RubricError::Invalid(m));
        for f in Feature::ALL {
            if !self.sextortion.weights.contains_key(&f) {
                return invalid(format!("missing weight for {f:?}"));
            }
        }
        check_bands("sextortion", &self.sextortion.bands)?;
        check_bands("mental_health", &self.mental_health.bands)?;
        check_bands("situation", &self.situation.bands)?;
        if self.mental_health.items.is_empty() || self.situation.items.is_empty() {
            return invalid("questionnaires need at least one item".into());
        }
        if !self.legal_aid.resources.contains_key("generic") {
            return invalid("legal_aid.resources needs a generic entry".into());
        }
        let Some(default) = self.role_information.get(DEFAULT_ROLE_KEY) else {
            return invalid(format!("role_information needs a {DEFAULT_ROLE_KEY:?} entry"));
        };
        for b in SituationBand::ALL {
            if default.get(&b).is_none_or(Vec::is_empty) {
                return invalid(format!("default role information is empty for {b:?}"));
            }
        }
        let referenced = self
            .legal_aid
            .resources
            .values()
            .flatten()
            .chain(self.mental_health.bands.iter().flat_map(|b| &b.guidance))
            .chain(self.situation.bands.iter().flat_map(|b| &b.guidance))
            .chain(self.role_information.values().flat_map(|m| m.values().flatten()));
        for id in referenced {
            if !self.resources.contains_key(id) {
                return invalid(format!("unknown resource {id:?}"));
            }
        }
        Ok(())
    }

    fn resource_refs<'a>(&self, ids: impl IntoIterator<Item = &'a String>) -> Vec<ResourceRef> {
        ids.into_iter()
            .map(|id| {
                let r = &self.resources[id];
                ResourceRef { id: id.clone(), category: r.category.clone(), title: r.title.clone() }
            })
            .collect()
    }

    pub fn sextortion_score(&self, f: &CaseFeatures) -> u32 {
        Feature::ALL.into_iter().filter(|x| f.get(*x)).map(|x| self.sextortion.weights[&x]).sum()
    }

    pub fn risk_band(&self, score: u32) -> RiskBand {
        band_for(&self.sextortion.bands, score).band
    }

    pub fn diagnose_sextortion(&self, f: &CaseFeatures) -> RiskVerdict {
        let score = self.sextortion_score(f);
        let band = self.risk_band(score);
        let actions: Vec<String> =
            self.sextortion.actions.iter().filter(|r| r.when.holds(f, band)).map(|r| r.action.clone()).collect();
        let contributions: BTreeMap<Feature, u32> =
            Feature::ALL.into_iter().filter(|x| f.get(*x)).map(|x| (x, self.sextortion.weights[&x])).collect();
        let trace = AceTrace::new([
            (ace::ETHICS_GATE.into(), json!({ "permitted": true })),
            ("goal: stop the coercion and keep the victim safe".into(), json!({ "goal": "victim_safety" })),
            ("case features as reported".into(), serde_json::to_value(f).expect("features serialize")),
            ("weighted rubric score".into(), json!({ "score": score, "contributions": contributions })),
            ("band selection".into(), json!({ "band": band })),
            ("recommended actions".into(), json!(actions)),
        ]);
        RiskVerdict { score, band, recommended_actions: actions, trace }
    }

    pub fn diagnose_legal_aid(&self, f: &CaseFeatures, jurisdiction: &str) -> LegalRecommendation {
        // The band never matters for legal rules; pass the lowest.
        let actions: Vec<String> =
            self.legal_aid.actions.iter().filter(|r| r.when.holds(f, RiskBand::Low)).map(|r| r.action.clone()).collect();
        let resolved = if self.legal_aid.resources.contains_key(jurisdiction) { jurisdiction } else { "generic" };
        let resources = self.resource_refs(&self.legal_aid.resources[resolved]);
        let trace = AceTrace::new([
            (ace::ETHICS_GATE.into(), json!({ "permitted": true })),
            ("goal: inform the victim of available legal remedies".into(), json!({ "goal": "legal_remedy" })),
            ("case features as reported".into(), serde_json::to_value(f).expect("features serialize")),
            ("rule table evaluation".into(), json!({ "matched": actions })),
            ("jurisdiction resolution".into(), json!({ "requested": jurisdiction, "resolved": resolved })),
            ("legal recommendation".into(), json!({ "actions": actions, "resources": resources.iter().map(|r| &r.id).collect::<Vec<_>>() })),
        ]);
        LegalRecommendation { actions, resources, jurisdiction: resolved.to_string(), trace }
    }

    fn score_answers<B: Copy>(q: &Questionnaire<B>, answers: &[i64]) -> Result<AssessmentResult<B>, AgentError> {
        if answers.len() != q.items.len() {
            return Err(AgentError::BadAnswerCount { expected: q.items.len(), got: answers.len() });
        }
        if let Some((index, &value)) = answers.iter().enumerate().find(|(_, v)| !(0..=MAX_ANSWER).contains(*v)) {
            return Err(AgentError::OutOfRange { index, value });
        }
        let total = answers.iter().sum::<i64>() as u32;
        let edge = band_for(&q.bands, total);
        Ok(AssessmentResult { total, band: edge.band, guidance: edge.guidance.clone() })
    }

    pub fn score_mental_health_assessment(&self, answers: &[i64]) -> Result<AssessmentResult<MentalHealthBand>, AgentError> {
        Self::score_answers(&self.mental_health, answers)
    }

    pub fn score_situation_assessment(&self, answers: &[i64]) -> Result<AssessmentResult<SituationBand>, AgentError> {
        Self::score_answers(&self.situation, answers)
    }

    /// Resources for `role_name` at `band`. Known roles without a bundle of
    /// their own get the default bundle.
    pub fn role_information(&self, role_name: &str, band: SituationBand) -> Result<RoleInformation, AgentError> {
        if !default_roles().iter().any(|r| r.role_name == role_name) {
            return Err(AgentError::UnknownRole(role_name.to_string()));
        }
        let ids = self
            .role_information
            .get(role_name)
            .and_then(|m| m.get(&band))
            .filter(|v| !v.is_empty())
            .unwrap_or_else(|| &self.role_information[DEFAULT_ROLE_KEY][&band]);
        Ok(RoleInformation { role_name: role_name.to_string(), band, resources: self.resource_refs(ids) })
    }

    /// Trace-annotated acknowledgement for agents without a rubric.
    pub fn pass_through(&self, agent: &str, input: &Value) -> Result<PassThroughVerdict, AgentError> {
        if !default_roles().iter().any(|r| r.role_name == agent && r.kind == RoleKind::AIAgent) {
            return Err(AgentError::UnknownRole(agent.to_string()));
        }
        let input_digest = Digest::of(&serde_json::to_vec(input).expect("json serializes"));
        let trace = AceTrace::new([
            (ace::ETHICS_GATE.into(), json!({ "permitted": true })),
            (format!("goal: {agent} acknowledges the request"), json!({ "goal": "acknowledge" })),
            ("input digested, not retained".into(), json!({ "input_digest": input_digest })),
            ("no rubric configured".into(), Value::Null),
            ("pass-through".into(), Value::Null),
            ("verdict".into(), json!("acknowledged")),
        ]);
        Ok(PassThroughVerdict { agent: agent.to_string(), verdict: "acknowledged".into(), input_digest, trace })
    }
}
