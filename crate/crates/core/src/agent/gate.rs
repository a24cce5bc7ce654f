use serde::{Deserialize, Serialize};

use super::definition::{CheckpointPolicy, WorkflowDefinition};
use crate::autonomy::AutonomyLevel;
use crate::canonical;
use crate::clock::Timestamp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionClass {
    Read,
    Publish,
    Mutate,
}

impl ActionClass {
    pub fn is_mutating(self) -> bool {
        self != ActionClass::Read
    }
}

/// An action a workflow is about to take.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PendingAction {
    pub workflow_id: String,
    pub tool: String,
    pub class: ActionClass,
    /// What the action touches, e.g. the report ids to publish.
    pub subject: String,
    #[serde(default)]
    pub payload: serde_json::Value,
}

impl PendingAction {
    /// Stable id: the same action always maps to the same pending record.
    pub fn pending_id(&self) -> String {
        let digest = canonical::digest(&(&self.workflow_id, &self.tool, &self.subject))
            .unwrap_or_default();
        format!("pa-{}", &digest[..16.min(digest.len())])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum ApprovalStatus {
    Pending,
    Approved { by: String, at: Timestamp },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PendingApproval {
    pub pending_id: String,
    pub action: PendingAction,
    pub autonomy_level: AutonomyLevel,
    pub checkpoint_policy: CheckpointPolicy,
    pub requested_at: Timestamp,
    pub status: ApprovalStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Approval {
    pub pending_id: String,
    pub approver: String,
    pub at: Timestamp,
}

/// Record of an unreviewed mutation taken under autonomy.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverrideLogEntry {
    pub workflow_id: String,
    pub tool: String,
    pub subject: String,
    pub autonomy_level: AutonomyLevel,
    pub at: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "decision", rename_all = "snake_case")]
pub enum GateDecision {
    Proceed { override_log: Option<OverrideLogEntry> },
    Blocked { pending: PendingApproval },
}

impl GateDecision {
    pub fn is_blocked(&self) -> bool {
        matches!(self, GateDecision::Blocked { .. })
    }
}

/// Checkpoint rule:
///
/// | level | read    | publish / mutate                                   |
/// |-------|---------|----------------------------------------------------|
/// | 0-2   | proceed | blocked until approved                             |
/// | 3     | proceed | blocked under a pause policy, else proceed + log   |
/// | 4     | proceed | proceed + log, blocked only by pause_before_each_action |
///
/// A matching approval always lets the action proceed.
pub fn gate_checkpoint(
    action: &PendingAction,
    def: &WorkflowDefinition,
    approvals: &[Approval],
    at: Timestamp,
) -> GateDecision {
    if !action.class.is_mutating() {
        return GateDecision::Proceed { override_log: None };
    }
    let pending_id = action.pending_id();
    if approvals.iter().any(|a| a.pending_id == pending_id) {
        return GateDecision::Proceed { override_log: None };
    }
    let level = def.autonomy_level;
    let policy = def.checkpoint_policy;
    let blocked = level.requires_review()
        || policy == CheckpointPolicy::PauseBeforeEachAction
        || (level == AutonomyLevel::CONDITIONAL && policy >= CheckpointPolicy::PauseBeforePublish);
    if blocked {
        GateDecision::Blocked {
            pending: PendingApproval {
                pending_id,
                action: action.clone(),
                autonomy_level: level,
                checkpoint_policy: policy,
                requested_at: at,
                status: ApprovalStatus::Pending,
            },
        }
    } else {
        GateDecision::Proceed {
            override_log: Some(OverrideLogEntry {
                workflow_id: action.workflow_id.clone(),
                tool: action.tool.clone(),
                subject: action.subject.clone(),
                autonomy_level: level,
                at,
            }),
        }
    }
}
