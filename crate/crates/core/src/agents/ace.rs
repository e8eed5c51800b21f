//! Six-layer cognitive trace attached to every agent verdict.

use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AceLayer {
    Aspirational,
    GlobalStrategy,
    AgentModel,
    ExecutiveFunction,
    CognitiveControl,
    TaskProsecution,
}

impl AceLayer {
    pub const ALL: [AceLayer; 6] = [
        AceLayer::Aspirational,
        AceLayer::GlobalStrategy,
        AceLayer::AgentModel,
        AceLayer::ExecutiveFunction,
        AceLayer::CognitiveControl,
        AceLayer::TaskProsecution,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AceEntry {
    pub layer_name: AceLayer,
    pub note: String,
    pub output: Value,
}

/// Exactly six entries, one per layer, in [`AceLayer::ALL`] order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AceTrace(Vec<AceEntry>);

impl AceTrace {
    /// Build a trace from one `(note, output)` pair per layer, top layer first.
    pub fn new(layers: [(String, Value); 6]) -> Self {
        AceTrace(
            AceLayer::ALL
                .into_iter()
                .zip(layers)
                .map(|(layer_name, (note, output))| AceEntry { layer_name, note, output })
                .collect(),
        )
    }

    pub fn entries(&self) -> &[AceEntry] {
        &self.0
    }

    pub fn layer(&self, layer: AceLayer) -> &AceEntry {
        self.0.iter().find(|e| e.layer_name == layer).expect("every layer is present")
    }

    /// True when the trace has six entries in canonical order.
    pub fn is_well_formed(&self) -> bool {
        self.0.len() == 6 && self.0.iter().zip(AceLayer::ALL).all(|(e, l)| e.layer_name == l)
    }
}

/// The note every trace opens with.
pub const ETHICS_GATE: &str =
    "ethics gate: victim welfare first; deterministic rubric; no raw content is stored or forwarded";
