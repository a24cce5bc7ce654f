use std::collections::BTreeMap;

use chrono::NaiveDate;
use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::definition::WorkflowDefinition;
use super::gate::{gate_checkpoint, ActionClass, Approval, GateDecision, OverrideLogEntry, PendingAction, PendingApproval};
use super::AgentEnv;
use crate::canonical;
use crate::clock::Timestamp;
use crate::error::{Error, Result};
use crate::reports::InsightReport;
use crate::store::Snapshot;

pub const DEFAULT_MAX_STEPS: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArgSpec {
    pub name: String,
    pub required: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolContract {
    pub name: String,
    pub args: Vec<ArgSpec>,
    /// Read-only tools never pass through the gate.
    pub pure: bool,
    pub class: ActionClass,
}

impl ToolContract {
    pub fn read(name: &str, args: &[(&str, bool)]) -> Self {
        Self::new(name, args, ActionClass::Read)
    }

    pub fn new(name: &str, args: &[(&str, bool)], class: ActionClass) -> Self {
        Self {
            name: name.into(),
            args: args
                .iter()
                .map(|(n, r)| ArgSpec {
                    name: n.to_string(),
                    required: *r,
                })
                .collect(),
            pure: !class.is_mutating(),
            class,
        }
    }

    /// Arguments must be an object holding every required name and no
    /// unknown one.
    pub fn check_args(&self, args: &Value) -> Result<()> {
        let empty = serde_json::Map::new();
        let obj = match args {
            Value::Object(m) => m,
            Value::Null => &empty,
            _ => return Err(Error::validation("args", "tool arguments must be an object")),
        };
        for spec in &self.args {
            if spec.required && !obj.contains_key(&spec.name) {
                return Err(Error::validation(
                    &spec.name,
                    format!("{} requires argument `{}`", self.name, spec.name),
                ));
            }
        }
        if let Some(k) = obj.keys().find(|k| !self.args.iter().any(|a| a.name == **k)) {
            return Err(Error::validation(
                k.as_str(),
                format!("{} has no argument `{k}`", self.name),
            ));
        }
        Ok(())
    }
}

/// State a run's tools share. Tools read the frozen snapshot; reports they
/// build are staged here and only leave the run through the engine.
pub struct ToolContext<'a> {
    pub snapshot: &'a Snapshot,
    pub env: &'a AgentEnv,
    pub workflow_id: String,
    pub date: NaiveDate,
    pub generated_at: Timestamp,
    pub scratchpad: BTreeMap<String, Value>,
    pub staged: Vec<InsightReport>,
    pub published: Vec<String>,
}

impl<'a> ToolContext<'a> {
    pub fn new(
        snapshot: &'a Snapshot,
        env: &'a AgentEnv,
        workflow_id: &str,
        date: NaiveDate,
        generated_at: Timestamp,
    ) -> Self {
        Self {
            snapshot,
            env,
            workflow_id: workflow_id.into(),
            date,
            generated_at,
            scratchpad: BTreeMap::new(),
            staged: Vec::new(),
            published: Vec::new(),
        }
    }
}

pub trait Tool: Send + Sync {
    fn contract(&self) -> &ToolContract;
    fn call(&self, ctx: &mut ToolContext<'_>, args: &Value) -> Result<Value>;
    /// What a mutating call touches; used to key its approval.
    fn subject(&self, ctx: &ToolContext<'_>, _args: &Value) -> (String, Value) {
        (ctx.workflow_id.clone(), Value::Null)
    }
}

#[derive(Default)]
pub struct ToolRegistry {
    tools: BTreeMap<String, Box<dyn Tool>>,
}

impl ToolRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, tool: Box<dyn Tool>) -> Result<()> {
        let name = tool.contract().name.clone();
        if self.tools.contains_key(&name) {
            return Err(Error::Config(format!("tool {name} registered twice")));
        }
        self.tools.insert(name, tool);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&dyn Tool> {
        self.tools.get(name).map(|t| t.as_ref())
    }

    pub fn contracts(&self) -> Vec<&ToolContract> {
        self.tools.values().map(|t| t.contract()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Action {
    pub tool: String,
    pub args: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub thought: String,
    pub action: Action,
    /// Canonical JSON of the tool result, or of `{"error": ...}`.
    pub observation: String,
}

impl Step {
    pub fn is_error(&self) -> bool {
        self.observation.starts_with("{\"error\":")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Terminal {
    Completed,
    MaxSteps,
    CheckpointPending,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub goal: String,
    pub max_steps: usize,
    pub steps: Vec<Step>,
    pub terminal: Terminal,
    #[serde(default)]
    pub failure: Option<String>,
    #[serde(default)]
    pub pending: Option<PendingApproval>,
    #[serde(default)]
    pub overrides: Vec<OverrideLogEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDraft {
    pub goal: String,
    pub answer: Value,
    pub reports: Vec<InsightReport>,
    pub published: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PlannerStep {
    Call { thought: String, tool: String, args: Value },
    Finish { thought: String, answer: Value },
}

pub trait Planner {
    fn next(&mut self, goal: &str, history: &[Step]) -> Result<PlannerStep>;
}

/// Gate inputs for the run.
pub struct GateContext<'a> {
    pub definition: &'a WorkflowDefinition,
    pub approvals: &'a [Approval],
    pub at: Timestamp,
}

fn observe(result: &Result<Value>) -> String {
    let value = match result {
        Ok(v) => v.clone(),
        Err(e) => serde_json::json!({
            "error": { "code": e.code(), "message": e.to_string() }
        }),
    };
    canonical::to_string(&value).unwrap_or_else(|e| format!("{{\"error\":\"{e}\"}}"))
}

/// Alternate planner thoughts with tool calls until the planner finishes,
/// fails, the step budget runs out, or a mutating call is gated.
pub fn run_react(
    goal: &str,
    tools: &ToolRegistry,
    planner: &mut dyn Planner,
    ctx: &mut ToolContext<'_>,
    gate: &GateContext<'_>,
    max_steps: usize,
) -> (Transcript, Option<ReportDraft>) {
    let mut t = Transcript {
        goal: goal.to_string(),
        max_steps,
        steps: Vec::new(),
        terminal: Terminal::Failed,
        failure: None,
        pending: None,
        overrides: Vec::new(),
    };
    loop {
        let (thought, tool_name, args) = match planner.next(goal, &t.steps) {
            Err(e) => {
                t.failure = Some(e.to_string());
                t.terminal = Terminal::Failed;
                return (t, None);
            }
            Ok(PlannerStep::Finish { answer, .. }) => {
                t.terminal = Terminal::Completed;
                let draft = ReportDraft {
                    goal: goal.to_string(),
                    answer,
                    reports: ctx.staged.clone(),
                    published: ctx.published.clone(),
                };
                return (t, Some(draft));
            }
            Ok(PlannerStep::Call { thought, tool, args }) => (thought, tool, args),
        };
        if t.steps.len() >= max_steps {
            t.terminal = Terminal::MaxSteps;
            return (t, None);
        }
        let result = match tools.get(&tool_name) {
            None => Err(Error::NotFound(format!("tool {tool_name}"))),
            Some(tool) => match tool.contract().check_args(&args) {
                Err(e) => Err(e),
                Ok(()) if tool.contract().pure => tool.call(ctx, &args),
                Ok(()) => {
                    let (subject, payload) = tool.subject(ctx, &args);
                    let action = PendingAction {
                        workflow_id: ctx.workflow_id.clone(),
                        tool: tool_name.clone(),
                        class: tool.contract().class,
                        subject,
                        payload,
                    };
                    match gate_checkpoint(&action, gate.definition, gate.approvals, gate.at) {
                        GateDecision::Blocked { pending } => {
                            t.pending = Some(pending);
                            t.terminal = Terminal::CheckpointPending;
                            return (t, None);
                        }
                        GateDecision::Proceed { override_log } => {
                            t.overrides.extend(override_log);
                            tool.call(ctx, &args)
                        }
                    }
                }
            },
        };
        t.steps.push(Step {
            thought,
            action: Action {
                tool: tool_name,
                args,
            },
            observation: observe(&result),
        });
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanStep {
    pub thought: String,
    pub tool: String,
    /// String values `$1`, `$2`, ... are replaced by goal captures.
    pub args: Value,
}

impl PlanStep {
    pub fn new(thought: &str, tool: &str, args: Value) -> Self {
        Self {
            thought: thought.into(),
            tool: tool.into(),
            args,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GoalPattern {
    pub pattern: Regex,
    pub plan: Vec<PlanStep>,
}

/// Deterministic planner: the first pattern matching the goal fixes the
/// plan. A failed call is retried up to `max_retries` times before the
/// planner moves on; after the last step it finishes with the final
/// observation as its answer.
#[derive(Debug, Clone)]
pub struct ScriptedPlanner {
    patterns: Vec<GoalPattern>,
    pub max_retries: usize,
}

fn substitute(v: &Value, caps: &regex::Captures<'_>) -> Value {
    match v {
        Value::String(s) if s.starts_with('$') => s[1..]
            .parse::<usize>()
            .ok()
            .and_then(|i| caps.get(i))
            .map_or_else(|| v.clone(), |m| Value::String(m.as_str().to_string())),
        Value::Array(items) => Value::Array(items.iter().map(|x| substitute(x, caps)).collect()),
        Value::Object(m) => Value::Object(
            m.iter()
                .map(|(k, x)| (k.clone(), substitute(x, caps)))
                .collect(),
        ),
        _ => v.clone(),
    }
}

impl ScriptedPlanner {
    pub fn new() -> Self {
        Self {
            patterns: Vec::new(),
            max_retries: 1,
        }
    }

    pub fn with(mut self, pattern: &str, plan: Vec<PlanStep>) -> Result<Self> {
        let pattern = Regex::new(pattern)
            .map_err(|e| Error::Config(format!("goal pattern `{pattern}`: {e}")))?;
        self.patterns.push(GoalPattern { pattern, plan });
        Ok(self)
    }

    /// Goal patterns for on-demand questions.
    pub fn standard() -> Self {
        use serde_json::json;
        let p = |pat: &str, plan| Self::new().with(pat, plan).expect("static pattern").patterns;
        let mut s = Self::new();
        s.patterns.extend(p(
            r"^enrollment count (\S+)$",
            vec![PlanStep::new("Count distinct active students in the term.", "query_enrollment", json!({"term": "$1"}))],
        ));
        s.patterns.extend(p(
            r"^attendance rate (student|offering|course|department) (\S+)$",
            vec![PlanStep::new("Compute the attendance rate for the scope.", "attendance_rate", json!({"scope": "$1", "id": "$2"}))],
        ));
        s.patterns.extend(p(
            r"^attendance rate institution$",
            vec![PlanStep::new("Compute the institutional attendance rate.", "attendance_rate", json!({"scope": "institution"}))],
        ));
        s.patterns.extend(p(
            r"^risk of student (\S+)$",
            vec![PlanStep::new("Assess the student's attendance risk.", "detect_at_risk", json!({"student": "$1"}))],
        ));
        s
    }
}

impl Default for ScriptedPlanner {
    fn default() -> Self {
        Self::new()
    }
}

impl Planner for ScriptedPlanner {
    fn next(&mut self, goal: &str, history: &[Step]) -> Result<PlannerStep> {
        let (caps, plan) = self
            .patterns
            .iter()
            .find_map(|p| p.pattern.captures(goal).map(|c| (c, &p.plan)))
            .ok_or_else(|| Error::validation("goal", format!("no registered plan matches `{goal}`")))?;
        let (mut idx, mut retries) = (0usize, 0usize);
        for step in history {
            if step.is_error() && retries < self.max_retries {
                retries += 1;
            } else {
                idx += 1;
                retries = 0;
            }
        }
        match plan.get(idx) {
            Some(s) => Ok(PlannerStep::Call {
                thought: if retries > 0 {
                    format!("{} (retry {retries})", s.thought)
                } else {
                    s.thought.clone()
                },
                tool: s.tool.clone(),
                args: substitute(&s.args, &caps),
            }),
            None => {
                let answer = history
                    .last()
                    .and_then(|s| serde_json::from_str(&s.observation).ok())
                    .unwrap_or(Value::Null);
                Ok(PlannerStep::Finish {
                    thought: "Plan complete.".into(),
                    answer,
                })
            }
        }
    }
}
