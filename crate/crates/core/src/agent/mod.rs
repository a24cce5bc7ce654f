//! Trigger-driven workflows: definitions, checkpoint gating, a ReAct loop
//! over a tool registry, and the health, at-risk and comparative analyses.

pub mod compare;
pub mod definition;
pub mod gate;
pub mod health;
pub mod react;
pub mod risk;
mod tools;
pub mod trigger;

use chrono::{NaiveDate, NaiveTime};
use serde::{Deserialize, Serialize};
use serde_json::json;

pub use compare::{compare_groups, comparison_report, Comparison, GroupFilter, Metric, MetricRow};
pub use definition::{
    AtRiskParams, CheckpointPolicy, CompareParams, Definitions, HealthParams, HealthTargets, Task,
    Trigger, WorkflowDefinition,
};
pub use gate::{
    gate_checkpoint, ActionClass, Approval, ApprovalStatus, GateDecision, OverrideLogEntry,
    PendingAction, PendingApproval,
};
pub use health::{health_report, run_daily_health_check, HealthCheck, HealthStatus};
pub use react::{
    run_react, GateContext, PlanStep, Planner, PlannerStep, ReportDraft, ScriptedPlanner, Step,
    Terminal, Tool, ToolContext, ToolContract, ToolRegistry, Transcript, DEFAULT_MAX_STEPS,
};
pub use risk::{
    absence_streak_as_of, classify_risk, detect_at_risk, recommended_actions, student_report,
    RiskAssessment, RiskEnv, RiskLevel, RiskScope, RiskTable, Trend, TriggerKind,
};
pub use tools::standard_tools;
pub use trigger::{evaluate_trigger, Event, EventKind, Schedule, TriggerInput, TriggerState};

use crate::autonomy::AutonomyLevel;
use crate::clock::{date_of, timestamp_of, Timestamp};
use crate::error::{Error, Result};
use crate::outcomes::OutcomeConfig;
use crate::reports::{InsightReport, ReportArchive, ReportStatus};
use crate::store::{AttendancePolicy, Record, Snapshot, Store};

/// Thresholds shared by every workflow run.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AgentEnv {
    pub risk: RiskEnv,
    pub attendance: AttendancePolicy,
    pub outcomes: OutcomeConfig,
}

impl AgentEnv {
    pub fn new(table: RiskTable, attendance: AttendancePolicy, outcomes: OutcomeConfig) -> Self {
        Self {
            risk: RiskEnv {
                table,
                policy: attendance,
                ..RiskEnv::default()
            },
            attendance,
            outcomes,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunStatus {
    Published,
    PendingApproval { pending_id: String },
    NoReport,
    MaxSteps,
    Failed { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub workflow_id: String,
    pub date: NaiveDate,
    pub status: RunStatus,
    pub report_ids: Vec<String>,
    pub transcript: Transcript,
}

/// Options for one run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunRequest {
    pub date: Option<NaiveDate>,
    /// Restrict an at-risk run to one student.
    pub student: Option<String>,
}

fn run_time(def: &WorkflowDefinition) -> NaiveTime {
    match &def.trigger {
        Trigger::Scheduled { spec } => spec.at(),
        _ => NaiveTime::MIN,
    }
}

fn workflow_plan(def: &WorkflowDefinition, student: Option<&str>) -> Result<(String, ScriptedPlanner)> {
    let (goal, step) = match &def.task {
        Task::DailyHealth(p) => (
            "daily health check".to_string(),
            PlanStep::new(
                "Aggregate trailing-window attendance and drill into units under target.",
                "daily_health",
                json!({ "params": p }),
            ),
        ),
        Task::AtRisk(p) => {
            let mut args = json!({ "params": p });
            if let Some(s) = student {
                args["student"] = json!(s);
            }
            (
                match student {
                    Some(s) => format!("at-risk assessment of student {s}"),
                    None => "at-risk scan of all students".to_string(),
                },
                PlanStep::new(
                    "Assess attendance risk and build student reports.",
                    "detect_at_risk",
                    args,
                ),
            )
        }
        Task::Comparative(p) => (
            format!("compare {} with {}", p.group_a.display(), p.group_b.display()),
            PlanStep::new(
                "Compute each metric for both groups.",
                "compare_groups",
                json!({ "params": p }),
            ),
        ),
    };
    let publish = PlanStep::new("Publish the staged reports.", "publish_report", json!({}));
    let planner = ScriptedPlanner::new().with("", vec![step, publish])?;
    Ok((goal, planner))
}

/// Approvals already granted, in the form the gate consumes.
pub fn granted_approvals(snap: &Snapshot) -> Vec<Approval> {
    snap.pending_approvals()
        .filter_map(|p| match &p.status {
            ApprovalStatus::Approved { by, at } => Some(Approval {
                pending_id: p.pending_id.clone(),
                approver: by.clone(),
                at: *at,
            }),
            ApprovalStatus::Pending => None,
        })
        .collect()
}

/// Approvals still waiting, by id.
pub fn list_pending(snap: &Snapshot) -> Vec<PendingApproval> {
    snap.pending_approvals()
        .filter(|p| p.status == ApprovalStatus::Pending)
        .cloned()
        .collect()
}

fn staged_reports(pending: &PendingApproval) -> Result<Vec<InsightReport>> {
    match pending.action.payload.get("reports") {
        Some(v) => Ok(serde_json::from_value(v.clone())?),
        None => Ok(Vec::new()),
    }
}

/// Compute a workflow's reports on the current snapshot without side
/// effects. Output is a pure function of (snapshot, definition, env, date).
pub fn dry_run(
    snap: &Snapshot,
    def: &WorkflowDefinition,
    env: &AgentEnv,
    req: &RunRequest,
) -> Result<(Transcript, Vec<InsightReport>)> {
    let date = req.date.ok_or_else(|| Error::validation("date", "a run date is required"))?;
    let generated_at = timestamp_of(date.and_time(run_time(def)));
    let tools = standard_tools();
    let (goal, mut planner) = workflow_plan(def, req.student.as_deref())?;
    let mut ctx = ToolContext::new(snap, env, &def.workflow_id, date, generated_at);
    // Dry runs never publish: gate as if nothing had been approved at the
    // strictest policy.
    let mut strict = def.clone();
    strict.autonomy_level = AutonomyLevel::MANUAL;
    strict.checkpoint_policy = CheckpointPolicy::PauseBeforeEachAction;
    let gate = GateContext {
        definition: &strict,
        approvals: &[],
        at: generated_at,
    };
    let (transcript, _) = run_react(&goal, &tools, &mut planner, &mut ctx, &gate, DEFAULT_MAX_STEPS);
    Ok((transcript, ctx.staged))
}

/// Run a workflow against the store and archive its reports: published
/// when the gate lets `publish_report` through, otherwise as
/// `pending_approval` with a pending record to approve later.
pub fn run_workflow(
    store: &Store,
    archive: &ReportArchive,
    def: &WorkflowDefinition,
    env: &AgentEnv,
    req: &RunRequest,
    actor: &str,
) -> Result<RunOutcome> {
    let date = req.date.ok_or_else(|| Error::validation("date", "a run date is required"))?;
    if let (Some(_), false) = (&req.student, matches!(def.task, Task::AtRisk(_))) {
        return Err(Error::validation("student", "only at-risk workflows take a student"));
    }
    let snap = store.snapshot();
    let generated_at = timestamp_of(date.and_time(run_time(def)));
    let tools = standard_tools();
    let (goal, mut planner) = workflow_plan(def, req.student.as_deref())?;
    let approvals = granted_approvals(&snap);
    let mut ctx = ToolContext::new(&snap, env, &def.workflow_id, date, generated_at);
    let gate = GateContext {
        definition: def,
        approvals: &approvals,
        at: generated_at,
    };
    let (transcript, draft) = run_react(&goal, &tools, &mut planner, &mut ctx, &gate, DEFAULT_MAX_STEPS);
    let staged = ctx.staged;

    let (status, report_ids) = match (&transcript.terminal, &draft, &transcript.pending) {
        (Terminal::Completed, Some(d), _) if d.published.is_empty() => (RunStatus::NoReport, vec![]),
        (Terminal::Completed, Some(d), _) => (RunStatus::Published, d.published.clone()),
        (Terminal::CheckpointPending, _, Some(p)) => (
            RunStatus::PendingApproval {
                pending_id: p.pending_id.clone(),
            },
            staged.iter().map(|r| r.report_id.clone()).collect(),
        ),
        (Terminal::MaxSteps, _, _) => (RunStatus::MaxSteps, vec![]),
        _ => (
            RunStatus::Failed {
                reason: transcript
                    .failure
                    .clone()
                    .or_else(|| transcript.steps.last().map(|s| s.observation.clone()))
                    .unwrap_or_default(),
            },
            vec![],
        ),
    };

    store.write(|tx| {
        let subject = def.workflow_id.as_str();
        for o in &transcript.overrides {
            tx.append_audit(
                &format!("agent:{}", o.workflow_id),
                "wf.override",
                &o.subject,
                o.at,
                serde_json::to_value(o)?,
            )?;
        }
        match &status {
            RunStatus::Published => {
                for r in staged.iter().filter(|r| r.status == ReportStatus::Published) {
                    archive.put(r)?;
                }
            }
            RunStatus::PendingApproval { .. } => {
                let pending = transcript.pending.clone().expect("pending record");
                for r in staged_reports(&pending)? {
                    archive.put(&r)?;
                }
                let fresh = tx
                    .pending_approval(&pending.pending_id)
                    .is_none_or(|p| p.status == ApprovalStatus::Pending);
                if fresh {
                    tx.upsert(Record::PendingApproval(pending))?;
                }
            }
            _ => {}
        }
        tx.append_audit(
            actor,
            "wf.run",
            subject,
            generated_at,
            json!({ "status": status, "report_ids": report_ids, "transcript": transcript }),
        )?;
        Ok(())
    })?;

    Ok(RunOutcome {
        workflow_id: def.workflow_id.clone(),
        date,
        status,
        report_ids,
        transcript,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproveOutcome {
    pub pending: PendingApproval,
    pub published: Vec<String>,
}

/// Approve a pending action and carry it out: its reports move from
/// `pending_approval` to `published`. Approving again is a no-op that
/// returns the original outcome.
pub fn approve(
    store: &Store,
    archive: &ReportArchive,
    pending_id: &str,
    approver: &str,
    at: Timestamp,
) -> Result<ApproveOutcome> {
    store.write(|tx| {
        let mut pending = tx
            .pending_approval(pending_id)
            .cloned()
            .ok_or_else(|| Error::NotFound(format!("pending approval {pending_id}")))?;
        if pending.status != ApprovalStatus::Pending {
            let published = staged_reports(&pending)?.into_iter().map(|r| r.report_id).collect();
            return Ok(ApproveOutcome { pending, published });
        }
        let mut published = Vec::new();
        for r in staged_reports(&pending)? {
            archive.publish(&r.report_id)?;
            published.push(r.report_id);
        }
        pending.status = ApprovalStatus::Approved {
            by: approver.to_string(),
            at,
        };
        tx.upsert(Record::PendingApproval(pending.clone()))?;
        tx.append_audit(
            approver,
            "wf.approve",
            pending_id,
            at,
            json!({ "published": published }),
        )?;
        Ok(ApproveOutcome { pending, published })
    })
}

/// One scheduler pass: evaluate scheduled triggers in definition order and
/// run, sequentially, each workflow that fires.
pub fn tick(
    store: &Store,
    archive: &ReportArchive,
    defs: &Definitions,
    env: &AgentEnv,
    now: Timestamp,
) -> Result<Vec<RunOutcome>> {
    let date = date_of(now).ok_or_else(|| Error::validation("now", "timestamp out of range"))?;
    let mut out = Vec::new();
    for def in &defs.workflows {
        if !matches!(def.trigger, Trigger::Scheduled { .. }) {
            continue;
        }
        let mut state = store
            .snapshot()
            .trigger_state(&def.workflow_id)
            .cloned()
            .unwrap_or_else(|| TriggerState::new(&def.workflow_id));
        if !evaluate_trigger(def, &TriggerInput::Clock(now), &mut state) {
            continue;
        }
        store.upsert(Record::TriggerState(state))?;
        let req = RunRequest {
            date: Some(date),
            student: None,
        };
        out.push(run_workflow(store, archive, def, env, &req, "scheduler")?);
    }
    Ok(out)
}

/// Route an event to every event-triggered workflow that fires on it.
pub fn on_event(
    store: &Store,
    archive: &ReportArchive,
    defs: &Definitions,
    env: &AgentEnv,
    event: &Event,
    date: NaiveDate,
) -> Result<Vec<RunOutcome>> {
    let mut out = Vec::new();
    for def in &defs.workflows {
        let mut state = TriggerState::new(&def.workflow_id);
        if !evaluate_trigger(def, &TriggerInput::Event(event.clone()), &mut state) {
            continue;
        }
        let req = RunRequest {
            date: Some(date),
            student: Some(event.student.clone()),
        };
        out.push(run_workflow(store, archive, def, env, &req, "event")?);
    }
    Ok(out)
}

/// The event a newly recorded attendance row would raise.
pub fn absence_event(snap: &Snapshot, student: &str, offering: &str, as_of: NaiveDate) -> Event {
    Event {
        kind: EventKind::ConsecutiveAbsence,
        student: student.to_string(),
        offering: offering.to_string(),
        streak: absence_streak_as_of(snap, student, offering, as_of),
    }
}

/// Answer an on-demand goal with the standard planner and tools. Only
/// read tools are reachable from the standard plans.
pub fn run_goal(
    snap: &Snapshot,
    env: &AgentEnv,
    goal: &str,
    date: NaiveDate,
) -> Result<(Transcript, Option<ReportDraft>)> {
    let def = WorkflowDefinition {
        workflow_id: "on_demand".into(),
        trigger: Trigger::OnDemand,
        autonomy_level: AutonomyLevel::PARTIAL,
        checkpoint_policy: CheckpointPolicy::PauseBeforePublish,
        task: Task::DailyHealth(HealthParams::default()),
    };
    let at = timestamp_of(date.and_time(NaiveTime::MIN));
    let tools = standard_tools();
    let mut planner = ScriptedPlanner::standard();
    let mut ctx = ToolContext::new(snap, env, "on_demand", date, at);
    let gate = GateContext {
        definition: &def,
        approvals: &[],
        at,
    };
    Ok(run_react(goal, &tools, &mut planner, &mut ctx, &gate, DEFAULT_MAX_STEPS))
}

#[cfg(test)]
mod tests;
