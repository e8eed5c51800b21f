//! Declarative scenario scripts. A script is a list of engine commands
//! with expected outcomes, run against a fresh engine, followed by final
//! assertions on the resulting state. Runs are fully deterministic: the
//! same script always yields a byte-identical transcript.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use socialdao_core::{Command, Engine, EngineConfig, EngineError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioScript {
    pub name: String,
    #[serde(default)]
    pub description: String,
    /// Exported engine state to start from instead of an empty engine.
    /// Relative paths resolve against the script's directory.
    #[serde(default)]
    pub fixture: Option<PathBuf>,
    #[serde(default)]
    pub steps: Vec<Step>,
    #[serde(default)]
    pub final_assertions: Vec<Assertion>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Step {
    pub op: String,
    #[serde(default)]
    pub args: Value,
    #[serde(default)]
    pub expect: Expect,
    /// Store the step's result under this name for later `$name.path` references.
    #[serde(default)]
    pub bind: Option<String>,
    #[serde(default)]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expect {
    pub ok: bool,
    #[serde(default)]
    pub error_code: Option<String>,
}

impl Default for Expect {
    fn default() -> Self {
        Expect { ok: true, error_code: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AssertionKind {
    LedgerCount,
    TokenBalance,
    CaseState,
    ChainValid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Assertion {
    pub kind: AssertionKind,
    #[serde(default)]
    pub args: Value,
    pub expected: Value,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepStatus {
    Ok,
    ExpectedError,
    Unexpected,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepResult {
    pub index: usize,
    pub op: String,
    pub status: StepStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error_code: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<Value>,
    pub ledger_len: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssertionResult {
    pub index: usize,
    pub kind: AssertionKind,
    pub ok: bool,
    pub expected: Value,
    pub actual: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTranscript {
    pub name: String,
    pub ledger_len_before: usize,
    pub ledger_len_after: usize,
    pub steps: Vec<StepResult>,
    pub assertions: Vec<AssertionResult>,
    pub passed: bool,
    /// Index of the step that halted the run, if any.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failed_step: Option<usize>,
}

impl RunTranscript {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("transcript serializes") + "\n"
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("malformed script: {0}")]
    MalformedScript(String),
    #[error("step {step}: {message}")]
    AssertionFailed { step: usize, message: String, transcript: Box<RunTranscript> },
    #[error("final assertion {index} ({kind:?}) failed")]
    FinalAssertionFailed { index: usize, kind: AssertionKind, transcript: Box<RunTranscript> },
}

impl ScenarioError {
    pub fn code(&self) -> &'static str {
        match self {
            ScenarioError::MalformedScript(_) => "MalformedScript",
            ScenarioError::AssertionFailed { .. } | ScenarioError::FinalAssertionFailed { .. } => "AssertionFailed",
        }
    }

    pub fn transcript(&self) -> Option<&RunTranscript> {
        match self {
            ScenarioError::MalformedScript(_) => None,
            ScenarioError::AssertionFailed { transcript, .. }
            | ScenarioError::FinalAssertionFailed { transcript, .. } => Some(transcript),
        }
    }
}

impl ScenarioScript {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let script: ScenarioScript =
            serde_json::from_str(text).map_err(|e| ScenarioError::MalformedScript(e.to_string()))?;
        script.validate()?;
        Ok(script)
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ScenarioError::MalformedScript(format!("{}: {e}", path.display())))?;
        let mut script = Self::from_json(&text)?;
        if let (Some(f), Some(dir)) = (&script.fixture, path.parent()) {
            if f.is_relative() {
                script.fixture = Some(dir.join(f));
            }
        }
        Ok(script)
    }

    /// Static checks: every op is known and every `$name` reference is
    /// bound by an earlier step.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let mut bound: Vec<&str> = Vec::new();
        for (i, step) in self.steps.iter().enumerate() {
            if !Command::OPS.contains(&step.op.as_str()) {
                return Err(ScenarioError::MalformedScript(format!("step {i}: unknown op {:?}", step.op)));
            }
            if !step.expect.ok && step.expect.error_code.is_none() {
                return Err(ScenarioError::MalformedScript(format!("step {i}: expected failure needs an error_code")));
            }
            for name in references(&step.args) {
                if !bound.contains(&name.as_str()) {
                    return Err(ScenarioError::MalformedScript(format!("step {i}: ${name} is not bound by an earlier step")));
                }
            }
            if let Some(b) = &step.bind {
                if b.is_empty() || !b.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                    return Err(ScenarioError::MalformedScript(format!("step {i}: bad bind name {b:?}")));
                }
                bound.push(b);
            }
        }
        Ok(())
    }
}

fn references(v: &Value) -> Vec<String> {
    let mut out = Vec::new();
    collect_refs(v, &mut out);
    out
}

fn collect_refs(v: &Value, out: &mut Vec<String>) {
    match v {
        Value::String(s) => {
            if let Some(rest) = s.strip_prefix('$') {
                out.push(rest.split('.').next().unwrap_or_default().to_string());
            }
        }
        Value::Array(xs) => xs.iter().for_each(|x| collect_refs(x, out)),
        Value::Object(m) => m.values().for_each(|x| collect_refs(x, out)),
        _ => {}
    }
}

/// Replace every string of the form `$name.a.b.0` with the value found
/// at that path in the bound result `name`.
pub fn substitute(v: &Value, bindings: &BTreeMap<String, Value>) -> Result<Value, String> {
    Ok(match v {
        Value::String(s) if s.starts_with('$') => {
            let mut parts = s[1..].split('.');
            let name = parts.next().unwrap_or_default();
            let mut cur = bindings.get(name).ok_or_else(|| format!("${name} is unbound"))?;
            for p in parts {
                cur = match cur {
                    Value::Object(m) => m.get(p),
                    Value::Array(xs) => p.parse::<usize>().ok().and_then(|i| xs.get(i)),
                    _ => None,
                }
                .ok_or_else(|| format!("{s}: no field {p:?}"))?;
            }
            cur.clone()
        }
        Value::Array(xs) => Value::Array(xs.iter().map(|x| substitute(x, bindings)).collect::<Result<_, _>>()?),
        Value::Object(m) => {
            Value::Object(m.iter().map(|(k, x)| Ok((k.clone(), substitute(x, bindings)?))).collect::<Result<_, String>>()?)
        }
        other => other.clone(),
    })
}

/// Run against a fresh in-memory engine built from `config`, seeded
/// from the script's fixture when it names one.
pub fn run_scenario(script: &ScenarioScript, config: EngineConfig) -> Result<RunTranscript, ScenarioError> {
    script.validate()?;
    let mut engine = Engine::in_memory(config);
    if let Some(path) = &script.fixture {
        let bytes = std::fs::read(path)
            .map_err(|e| ScenarioError::MalformedScript(format!("fixture {}: {e}", path.display())))?;
        engine
            .import_bytes(&bytes)
            .map_err(|e| ScenarioError::MalformedScript(format!("fixture {}: {e}", path.display())))?;
    }
    run_on(script, &mut engine)
}

/// Run against an existing engine. Useful when a fixture state was
/// imported beforehand.
pub fn run_on(script: &ScenarioScript, engine: &mut Engine) -> Result<RunTranscript, ScenarioError> {
    let mut transcript = RunTranscript {
        name: script.name.clone(),
        ledger_len_before: engine.ledger().len(),
        ledger_len_after: 0,
        steps: Vec::with_capacity(script.steps.len()),
        assertions: Vec::new(),
        passed: false,
        failed_step: None,
    };
    let mut bindings: BTreeMap<String, Value> = BTreeMap::new();
    let mut halt: Option<(usize, String)> = None;

    for (i, step) in script.steps.iter().enumerate() {
        if halt.is_some() {
            transcript.steps.push(StepResult {
                index: i,
                op: step.op.clone(),
                status: StepStatus::Skipped,
                error_code: None,
                message: None,
                result: None,
                ledger_len: engine.ledger().len(),
            });
            continue;
        }
        let args = substitute(&step.args, &bindings).map_err(|e| ScenarioError::MalformedScript(format!("step {i}: {e}")))?;
        let outcome = Command::parse(&step.op, args).and_then(|cmd| engine.execute(cmd));
        let (status, error_code, message, result) = judge(&step.expect, outcome);
        if status == StepStatus::Unexpected {
            let why = match (&error_code, &step.expect.error_code) {
                (Some(got), Some(want)) => format!("expected {want}, got {got}"),
                (Some(got), None) => format!("expected success, got {got}"),
                (None, want) => format!("expected {}, got success", want.as_deref().unwrap_or("failure")),
            };
            halt = Some((i, why));
        }
        if let (Some(name), Some(r)) = (&step.bind, &result) {
            bindings.insert(name.clone(), r.clone());
        }
        transcript.steps.push(StepResult {
            index: i,
            op: step.op.clone(),
            status,
            error_code,
            message,
            result,
            ledger_len: engine.ledger().len(),
        });
    }
    transcript.ledger_len_after = engine.ledger().len();

    if let Some((step, message)) = halt {
        transcript.failed_step = Some(step);
        return Err(ScenarioError::AssertionFailed { step, message, transcript: Box::new(transcript) });
    }

    let mut first_failed = None;
    for (index, a) in script.final_assertions.iter().enumerate() {
        let args = substitute(&a.args, &bindings)
            .map_err(|e| ScenarioError::MalformedScript(format!("assertion {index}: {e}")))?;
        let actual = observe(engine, a.kind, &args, &a.expected)
            .map_err(|e| ScenarioError::MalformedScript(format!("assertion {index}: {e}")))?;
        let ok = actual == a.expected;
        if !ok && first_failed.is_none() {
            first_failed = Some((index, a.kind));
        }
        transcript.assertions.push(AssertionResult { index, kind: a.kind, ok, expected: a.expected.clone(), actual });
    }
    if let Some((index, kind)) = first_failed {
        return Err(ScenarioError::FinalAssertionFailed { index, kind, transcript: Box::new(transcript) });
    }
    transcript.passed = true;
    Ok(transcript)
}

type Judged = (StepStatus, Option<String>, Option<String>, Option<Value>);

fn judge(expect: &Expect, outcome: Result<Value, EngineError>) -> Judged {
    match outcome {
        Ok(v) => {
            let status = if expect.ok { StepStatus::Ok } else { StepStatus::Unexpected };
            (status, None, None, Some(v))
        }
        Err(e) => {
            let code = e.code().to_string();
            let status = match (&expect.ok, &expect.error_code) {
                (false, Some(want)) if *want == code => StepStatus::ExpectedError,
                _ => StepStatus::Unexpected,
            };
            (status, Some(code), Some(e.to_string()), None)
        }
    }
}

fn observe(engine: &mut Engine, kind: AssertionKind, args: &Value, expected: &Value) -> Result<Value, String> {
    let arg = |k: &str| args.get(k).and_then(Value::as_str).ok_or_else(|| format!("missing string arg {k:?}"));
    Ok(match kind {
        AssertionKind::LedgerCount => {
            let filter = if args.is_null() { json!({}) } else { args.clone() };
            let cmd = Command::parse("query_ledger", filter).map_err(|e| e.to_string())?;
            let hits = engine.execute(cmd).map_err(|e| e.to_string())?;
            json!(hits.as_array().map_or(0, Vec::len))
        }
        AssertionKind::TokenBalance => {
            let actor = arg("actor_id")?;
            let token = arg("token_type")?;
            let held = engine.balances(actor).get(token).cloned().ok_or_else(|| format!("unknown token type {token:?}"))?;
            // Asset holdings compare by count when the expectation is a number.
            match (&held, expected) {
                (Value::Array(xs), Value::Number(_)) => json!(xs.len()),
                _ => held,
            }
        }
        AssertionKind::CaseState => {
            let case = engine.cases().get(arg("case_id")?).map_err(|e| e.to_string())?;
            json!(case.state)
        }
        AssertionKind::ChainValid => json!(engine.verify().ok),
    })
}
