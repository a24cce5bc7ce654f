use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::compare::{GroupFilter, Metric};
use super::trigger::{EventKind, Schedule};
use crate::autonomy::AutonomyLevel;
use crate::error::{Error, Result};

/// Ordered from least to most restrictive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckpointPolicy {
    None,
    PauseBeforePublish,
    PauseBeforeEachAction,
}

impl CheckpointPolicy {
    pub fn as_str(self) -> &'static str {
        match self {
            CheckpointPolicy::None => "none",
            CheckpointPolicy::PauseBeforePublish => "pause_before_publish",
            CheckpointPolicy::PauseBeforeEachAction => "pause_before_each_action",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Trigger {
    Scheduled {
        spec: Schedule,
    },
    Event {
        event: EventKind,
        threshold: u32,
        /// Further streak values that fire again after the threshold.
        #[serde(default = "default_refire")]
        refire_at: Vec<u32>,
    },
    OnDemand,
}

fn default_refire() -> Vec<u32> {
    vec![5]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HealthTargets {
    pub institution: f64,
    pub department: f64,
    pub course: f64,
}

impl Default for HealthTargets {
    fn default() -> Self {
        Self {
            institution: 0.85,
            department: 0.85,
            course: 0.80,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HealthParams {
    pub targets: HealthTargets,
    pub window_days: u32,
}

impl Default for HealthParams {
    fn default() -> Self {
        Self {
            targets: HealthTargets::default(),
            window_days: 28,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AtRiskParams {
    /// A course is a problem course for a student below this rate.
    pub course_target: f64,
    /// Batch runs publish reports only for students at or above this level.
    pub report_min_level: super::risk::RiskLevel,
}

impl Default for AtRiskParams {
    fn default() -> Self {
        Self {
            course_target: 0.80,
            report_min_level: super::risk::RiskLevel::Warning,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareParams {
    pub group_a: GroupFilter,
    pub group_b: GroupFilter,
    #[serde(default = "Metric::all")]
    pub metrics: Vec<Metric>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Task {
    DailyHealth(HealthParams),
    AtRisk(AtRiskParams),
    Comparative(CompareParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkflowDefinition {
    pub workflow_id: String,
    pub trigger: Trigger,
    pub autonomy_level: AutonomyLevel,
    pub checkpoint_policy: CheckpointPolicy,
    pub task: Task,
}

impl WorkflowDefinition {
    /// Levels 0-2 may never publish without review, so they need
    /// `pause_before_publish` or stricter.
    pub fn validate(&self) -> Result<()> {
        crate::store::check_key("workflow_id", &self.workflow_id)?;
        if self.autonomy_level.requires_review()
            && self.checkpoint_policy < CheckpointPolicy::PauseBeforePublish
        {
            return Err(Error::Config(format!(
                "workflow {}: autonomy level {} requires checkpoint_policy pause_before_publish or stricter",
                self.workflow_id,
                self.autonomy_level.get()
            )));
        }
        if let Trigger::Event { threshold, .. } = &self.trigger {
            if *threshold == 0 {
                return Err(Error::Config(format!(
                    "workflow {}: event threshold must be at least 1",
                    self.workflow_id
                )));
            }
        }
        match &self.task {
            Task::DailyHealth(p) => {
                let t = p.targets;
                for (name, v) in [
                    ("institution", t.institution),
                    ("department", t.department),
                    ("course", t.course),
                ] {
                    if !(0.0..=1.0).contains(&v) {
                        return Err(Error::Config(format!(
                            "workflow {}: targets.{name} must be in [0, 1]",
                            self.workflow_id
                        )));
                    }
                }
                if p.window_days == 0 {
                    return Err(Error::Config(format!(
                        "workflow {}: window_days must be positive",
                        self.workflow_id
                    )));
                }
            }
            Task::AtRisk(p) => {
                if !(0.0..=1.0).contains(&p.course_target) {
                    return Err(Error::Config(format!(
                        "workflow {}: course_target must be in [0, 1]",
                        self.workflow_id
                    )));
                }
            }
            Task::Comparative(p) => {
                if p.metrics.is_empty() {
                    return Err(Error::Config(format!(
                        "workflow {}: metrics must not be empty",
                        self.workflow_id
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Definitions {
    #[serde(default, rename = "workflow")]
    pub workflows: Vec<WorkflowDefinition>,
}

impl Definitions {
    pub fn from_toml(text: &str) -> Result<Self> {
        let defs: Definitions =
            toml::from_str(text).map_err(|e| Error::Config(format!("workflow definitions: {e}")))?;
        let mut seen = BTreeSet::new();
        for d in &defs.workflows {
            d.validate()?;
            if !seen.insert(d.workflow_id.as_str()) {
                return Err(Error::Config(format!(
                    "workflow {} defined twice",
                    d.workflow_id
                )));
            }
        }
        Ok(defs)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn get(&self, workflow_id: &str) -> Result<&WorkflowDefinition> {
        self.workflows
            .iter()
            .find(|d| d.workflow_id == workflow_id)
            .ok_or_else(|| Error::NotFound(format!("workflow {workflow_id}")))
    }
}
